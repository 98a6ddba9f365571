use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use helr::group::SecurityLevel;

/// Where verification sessions run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransportKind {
    InProcess,
    Tcp,
}

impl FromStr for TransportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inproc" | "memory" => Ok(Self::InProcess),
            "tcp" => Ok(Self::Tcp),
            other => Err(format!("unknown transport {other:?} (inproc or tcp)")),
        }
    }
}

impl fmt::Display for TransportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::InProcess => "inproc",
            Self::Tcp => "tcp",
        })
    }
}

/// Parameters shared by the subcommands. Each command fills in what it uses
/// and calls [`Config::validate`] before doing any work.
#[derive(Clone, Debug)]
pub struct Config {
    pub level: SecurityLevel,
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub target_fmr: f64,
    pub tables: PathBuf,
    pub store: PathBuf,
    pub transport: TransportKind,
    pub seed: u64,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError(m));
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        if self.n < 2 {
            return fail(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return fail(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.target_fmr > 0.0 && self.target_fmr < 1.0) {
            return fail(format!("target FMR must be in (0, 1), got {}", self.target_fmr));
        }
        Ok(())
    }
}

pub fn parse_level(s: &str) -> Result<SecurityLevel, String> {
    let bits: u32 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    SecurityLevel::from_bits(bits).map_err(|e| e.to_string())
}

/// Comma-separated list of numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct NumberList(pub Vec<f64>);

pub fn parse_rho_list(s: &str) -> Result<NumberList, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number {x:?}")))
        .collect::<Result<_, _>>()
        .map(NumberList)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Config {
        Config {
            level: SecurityLevel::Bits128,
            n: 16,
            k: 36,
            delta: 0.5,
            target_fmr: 1e-3,
            tables: "t".into(),
            store: "s".into(),
            transport: TransportKind::InProcess,
            seed: 0,
        }
    }

    #[test]
    fn rejects_bad_values() {
        assert!(base().validate().is_ok());
        for c in [
            Config { delta: 0.0, ..base() },
            Config { delta: -1.0, ..base() },
            Config { n: 1, ..base() },
            Config { k: 0, ..base() },
            Config { target_fmr: 1.0, ..base() },
        ] {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn parsers() {
        assert_eq!(parse_level("112").unwrap(), SecurityLevel::Bits112);
        assert!(parse_level("80").is_err());
        assert_eq!(parse_rho_list("0.7, 0.9").unwrap().0, vec![0.7, 0.9]);
        assert!("udp".parse::<TransportKind>().is_err());
    }
}
