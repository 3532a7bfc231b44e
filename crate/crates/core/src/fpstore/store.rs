use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use super::Fingerprint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Status {
    Proved,
    Failed,
    Canceled,
    Omitted,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Proved => "proved",
            Status::Failed => "failed",
            Status::Canceled => "canceled",
            Status::Omitted => "omitted",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = ();

    fn from_str(s: &str) -> Result<Status, ()> {
        Ok(match s {
            "proved" => Status::Proved,
            "failed" => Status::Failed,
            "canceled" => Status::Canceled,
            "omitted" => Status::Omitted,
            _ => return Err(()),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatusRecord {
    pub fp: Fingerprint,
    pub status: Status,
    pub backend: String,
    pub ms: u64,
    pub created: u64,
}

impl StatusRecord {
    fn line(&self) -> String {
        format!("v1\t{}\t{}\t{}\t{}\t{}", self.fp, self.status, self.backend, self.ms, self.created)
    }

    fn parse(line: &str) -> Result<StatusRecord, String> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.first() != Some(&"v1") {
            return Err("unknown record version".into());
        }
        if f.len() != 6 {
            return Err(format!("expected 6 fields, found {}", f.len()));
        }
        Ok(StatusRecord {
            fp: Fingerprint::parse(f[1]).ok_or("bad fingerprint")?,
            status: f[2].parse().map_err(|_| "bad status")?,
            backend: f[3].to_string(),
            ms: f[4].parse().map_err(|_| "bad duration")?,
            created: f[5].parse().map_err(|_| "bad timestamp")?,
        })
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Status records keyed by fingerprint and back-end.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Store {
    records: BTreeMap<(Fingerprint, String), StatusRecord>,
}

impl Store {
    pub fn new() -> Store {
        Store::default()
    }

    /// Default location: `file.tla.fp` beside the module.
    pub fn path_for(module: &Path) -> PathBuf {
        let mut s = module.as_os_str().to_owned();
        s.push(".fp");
        PathBuf::from(s)
    }

    /// Read a store; a missing file is an empty store. Lines that cannot be
    /// parsed are skipped and reported as warnings.
    pub fn load(path: &Path) -> Result<(Store, Vec<String>), StoreError> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Store::new(), vec![])),
            Err(source) => {
                return Err(StoreError::Io {
                    path: path.into(),
                    source,
                })
            }
        };
        let mut st = Store::new();
        let mut warnings = vec![];
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match StatusRecord::parse(line) {
                Ok(r) => st.record(r),
                Err(why) => warnings.push(format!("{}:{}: skipped record: {why}", path.display(), i + 1)),
            }
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok((st, warnings))
    }

    /// Write to a temporary file beside `path`, then rename over it.
    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let io = |source| StoreError::Io {
            path: path.into(),
            source,
        };
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(format!(".tmp{}", std::process::id()));
        let tmp = PathBuf::from(tmp);
        let mut f = fs::File::create(&tmp).map_err(io)?;
        for r in self.records.values() {
            writeln!(f, "{}", r.line()).map_err(io)?;
        }
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }

    pub fn record(&mut self, r: StatusRecord) {
        self.records.insert((r.fp, r.backend.clone()), r);
    }

    pub fn get(&self, fp: &Fingerprint, backend: &str) -> Option<&StatusRecord> {
        self.records.get(&(*fp, backend.to_string()))
    }

    /// Any record for `fp`, preferring a proof.
    pub fn lookup(&self, fp: &Fingerprint) -> Option<&StatusRecord> {
        let mut all = self.records.range((*fp, String::new())..).take_while(|((f, _), _)| f == fp).map(|(_, r)| r);
        let first = all.clone().next();
        all.find(|r| r.status == Status::Proved).or(first)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &StatusRecord> {
        self.records.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(b: u8, status: Status) -> StatusRecord {
        StatusRecord {
            fp: Fingerprint([b; 32]),
            status,
            backend: "ground".into(),
            ms: 3,
            created: 1_700_000_000,
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.tla.fp");
        let mut s = Store::new();
        s.record(rec(1, Status::Proved));
        s.record(rec(2, Status::Failed));
        s.save(&p).unwrap();
        let (t, w) = Store::load(&p).unwrap();
        assert!(w.is_empty());
        assert_eq!(s, t);
    }

    #[test]
    fn truncated_line_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.tla.fp");
        let mut s = Store::new();
        s.record(rec(1, Status::Proved));
        s.record(rec(2, Status::Proved));
        s.save(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        fs::write(&p, &text[..text.len() - 20]).unwrap();
        let (t, w) = Store::load(&p).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn empty_store_misses() {
        assert!(Store::new().lookup(&Fingerprint([0; 32])).is_none());
    }

    #[test]
    fn lookup_prefers_proved() {
        let mut s = Store::new();
        s.record(rec(1, Status::Failed));
        let mut r = rec(1, Status::Proved);
        r.backend = "smtlib".into();
        s.record(r);
        assert_eq!(s.lookup(&Fingerprint([1; 32])).unwrap().status, Status::Proved);
    }
}
