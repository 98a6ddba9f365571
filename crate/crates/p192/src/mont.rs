//! Constant-time Montgomery arithmetic over 192-bit moduli.

use elliptic_curve::bigint::{WideWord, Word, U192};

pub(crate) const LIMBS: usize = U192::LIMBS;
pub(crate) type Words = [Word; LIMBS];

const BITS: u32 = Word::BITS;

pub(crate) struct Modulus {
    m: Words,
    m_inv: Word,
    r2: Words,
}

impl Modulus {
    pub(crate) const fn new(m: U192) -> Self {
        let m = m.to_words();
        let mut r = [0; LIMBS];
        r[0] = 1;
        let mut i = 0;
        while i < 2 * LIMBS * BITS as usize {
            r = add(&r, &r, &m);
            i += 1;
        }
        Self { m, m_inv: neg_inv(m[0]), r2: r }
    }
}

/// -m^-1 mod 2^BITS for odd m, by Newton iteration.
const fn neg_inv(m0: Word) -> Word {
    let mut x: Word = 1;
    let mut i = 0;
    while i < 7 {
        x = x.wrapping_mul((2 as Word).wrapping_sub(m0.wrapping_mul(x)));
        i += 1;
    }
    x.wrapping_neg()
}

/// Subtracts m from (hi, r) when that does not underflow.
const fn reduce(r: &Words, hi: Word, m: &Words) -> Words {
    let mut s = [0; LIMBS];
    let mut borrow: Word = 0;
    let mut i = 0;
    while i < LIMBS {
        let t = (r[i] as WideWord).wrapping_sub(m[i] as WideWord).wrapping_sub(borrow as WideWord);
        s[i] = t as Word;
        borrow = (t >> BITS) as Word & 1;
        i += 1;
    }
    let keep = ((hi as WideWord).wrapping_sub(borrow as WideWord) >> BITS) as Word & 1;
    let mask = keep.wrapping_neg();
    let mut out = [0; LIMBS];
    let mut i = 0;
    while i < LIMBS {
        out[i] = (r[i] & mask) | (s[i] & !mask);
        i += 1;
    }
    out
}

const fn add(a: &Words, b: &Words, m: &Words) -> Words {
    let mut r = [0; LIMBS];
    let mut carry: Word = 0;
    let mut i = 0;
    while i < LIMBS {
        let t = a[i] as WideWord + b[i] as WideWord + carry as WideWord;
        r[i] = t as Word;
        carry = (t >> BITS) as Word;
        i += 1;
    }
    reduce(&r, carry, m)
}

const fn sub(a: &Words, b: &Words, m: &Words) -> Words {
    let mut r = [0; LIMBS];
    let mut borrow: Word = 0;
    let mut i = 0;
    while i < LIMBS {
        let t = (a[i] as WideWord).wrapping_sub(b[i] as WideWord).wrapping_sub(borrow as WideWord);
        r[i] = t as Word;
        borrow = (t >> BITS) as Word & 1;
        i += 1;
    }
    let mask = borrow.wrapping_neg();
    let mut carry: Word = 0;
    let mut i = 0;
    while i < LIMBS {
        let t = r[i] as WideWord + (m[i] & mask) as WideWord + carry as WideWord;
        r[i] = t as Word;
        carry = (t >> BITS) as Word;
        i += 1;
    }
    r
}

/// Montgomery product a*b/R mod m (CIOS).
const fn mul(a: &Words, b: &Words, md: &Modulus) -> Words {
    let m = &md.m;
    let mut t = [0 as Word; LIMBS + 2];
    let mut i = 0;
    while i < LIMBS {
        let mut c: Word = 0;
        let mut j = 0;
        while j < LIMBS {
            let uv = t[j] as WideWord + (a[j] as WideWord) * (b[i] as WideWord) + c as WideWord;
            t[j] = uv as Word;
            c = (uv >> BITS) as Word;
            j += 1;
        }
        let uv = t[LIMBS] as WideWord + c as WideWord;
        t[LIMBS] = uv as Word;
        t[LIMBS + 1] = (uv >> BITS) as Word;

        let q = t[0].wrapping_mul(md.m_inv);
        let uv = t[0] as WideWord + (q as WideWord) * (m[0] as WideWord);
        let mut c = (uv >> BITS) as Word;
        let mut j = 1;
        while j < LIMBS {
            let uv = t[j] as WideWord + (q as WideWord) * (m[j] as WideWord) + c as WideWord;
            t[j - 1] = uv as Word;
            c = (uv >> BITS) as Word;
            j += 1;
        }
        let uv = t[LIMBS] as WideWord + c as WideWord;
        t[LIMBS - 1] = uv as Word;
        t[LIMBS] = t[LIMBS + 1] + (uv >> BITS) as Word;
        i += 1;
    }
    let mut r = [0; LIMBS];
    let mut j = 0;
    while j < LIMBS {
        r[j] = t[j];
        j += 1;
    }
    reduce(&r, t[LIMBS], m)
}

/// Defines the free functions `primeorder`'s field macros expect.
macro_rules! mont_fns {
    ($md:ident, $from:ident, $to:ident, $add:ident, $sub:ident, $mul:ident, $neg:ident, $square:ident) => {
        const fn $from(a: &$crate::mont::Words) -> $crate::mont::Words {
            let mut one = [0; $crate::mont::LIMBS];
            one[0] = 1;
            $crate::mont::mul_by(a, &one, &$md)
        }
        const fn $to(a: &$crate::mont::Words) -> $crate::mont::Words {
            $crate::mont::to_mont(a, &$md)
        }
        const fn $add(a: &$crate::mont::Words, b: &$crate::mont::Words) -> $crate::mont::Words {
            $crate::mont::add_mod(a, b, &$md)
        }
        const fn $sub(a: &$crate::mont::Words, b: &$crate::mont::Words) -> $crate::mont::Words {
            $crate::mont::sub_mod(a, b, &$md)
        }
        const fn $mul(a: &$crate::mont::Words, b: &$crate::mont::Words) -> $crate::mont::Words {
            $crate::mont::mul_by(a, b, &$md)
        }
        const fn $neg(a: &$crate::mont::Words) -> $crate::mont::Words {
            $crate::mont::sub_mod(&[0; $crate::mont::LIMBS], a, &$md)
        }
        const fn $square(a: &$crate::mont::Words) -> $crate::mont::Words {
            $crate::mont::mul_by(a, a, &$md)
        }
    };
}
pub(crate) use mont_fns;

pub(crate) const fn add_mod(a: &Words, b: &Words, md: &Modulus) -> Words {
    add(a, b, &md.m)
}

pub(crate) const fn sub_mod(a: &Words, b: &Words, md: &Modulus) -> Words {
    sub(a, b, &md.m)
}

pub(crate) const fn mul_by(a: &Words, b: &Words, md: &Modulus) -> Words {
    mul(a, b, md)
}

pub(crate) const fn to_mont(a: &Words, md: &Modulus) -> Words {
    mul(a, &md.r2, md)
}
