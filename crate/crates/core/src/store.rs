//! Server-side template storage keyed by user id.

use std::collections::HashMap;
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use crate::wire::Record;
use crate::Error;

pub trait TemplateStore<R>: Send + Sync {
    fn get(&self, uid: &[u8]) -> Result<Option<R>, Error>;
    fn put(&self, uid: &[u8], record: R) -> Result<(), Error>;
}

pub struct MemoryStore<R> {
    records: RwLock<HashMap<Vec<u8>, R>>,
}

impl<R> Default for MemoryStore<R> {
    fn default() -> Self {
        Self { records: RwLock::new(HashMap::new()) }
    }
}

impl<R> MemoryStore<R> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<R: Clone + Send + Sync> TemplateStore<R> for MemoryStore<R> {
    fn get(&self, uid: &[u8]) -> Result<Option<R>, Error> {
        Ok(self.records.read().unwrap().get(uid).cloned())
    }

    fn put(&self, uid: &[u8], record: R) -> Result<(), Error> {
        self.records.write().unwrap().insert(uid.to_vec(), record);
        Ok(())
    }
}

/// One file per user, named by the hex-encoded user id, holding the record's
/// canonical encoding. Writes go through a temporary file and a rename.
pub struct FileStore<R> {
    dir: PathBuf,
    write_lock: Mutex<()>,
    _record: PhantomData<fn() -> R>,
}

impl<R> FileStore<R> {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, Error> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(Self {
            dir: dir.as_ref().to_path_buf(),
            write_lock: Mutex::new(()),
            _record: PhantomData,
        })
    }

    pub fn path_for(&self, uid: &[u8]) -> PathBuf {
        let name: String = uid.iter().map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{name}.tpl"))
    }
}

impl<R: Record> TemplateStore<R> for FileStore<R> {
    fn get(&self, uid: &[u8]) -> Result<Option<R>, Error> {
        match std::fs::read(self.path_for(uid)) {
            Ok(bytes) => R::decode(&bytes)
                .map(Some)
                .map_err(|_| Error::Decode("stored record")),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn put(&self, uid: &[u8], record: R) -> Result<(), Error> {
        let _guard = self.write_lock.lock().unwrap();
        let path = self.path_for(uid);
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, record.encode())?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }
}
