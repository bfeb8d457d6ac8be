//! On-disk a_p cache: one UTF-8 text file per curve holding lines "p,a_p"
//! with ascending primes. Writes go through an advisory lock plus an atomic
//! temp-file rename; a malformed or Hasse-violating file is quarantined and
//! reported, never silently rebuilt.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;

use crate::arith::is_prime;
use crate::curve::{ap, ApRecord, CurveError, ReductionData};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CacheError {
    #[error("cache file is corrupt at line {line}: {reason}; quarantined to {quarantined}")]
    Corrupt {
        line: usize,
        reason: String,
        quarantined: String,
    },
    #[error("cache i/o failed: {0}")]
    Io(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Parses the cache file format. This is the untrusted-input boundary: any
/// byte sequence must either parse to valid records or produce an error.
pub fn parse_cache_bytes(data: &[u8]) -> Result<Vec<ApRecord>, String> {
    let text = std::str::from_utf8(data).map_err(|e| format!("not UTF-8: {e}"))?;
    let mut records: Vec<ApRecord> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (p_str, ap_str) = line
            .split_once(',')
            .ok_or_else(|| format!("line {}: missing comma", idx + 1))?;
        let p: u64 = p_str
            .parse()
            .map_err(|e| format!("line {}: bad prime field: {e}", idx + 1))?;
        let ap: i64 = ap_str
            .parse()
            .map_err(|e| format!("line {}: bad a_p field: {e}", idx + 1))?;
        if !is_prime(p) {
            return Err(format!("line {}: {p} is not prime", idx + 1));
        }
        if let Some(last) = records.last() {
            if p <= last.p {
                return Err(format!("line {}: primes not strictly ascending", idx + 1));
            }
        }
        let rec = ApRecord { p, ap };
        if !rec.satisfies_hasse() {
            return Err(format!("line {}: Hasse violation: {ap}^2 > 4*{p}", idx + 1));
        }
        records.push(rec);
    }
    Ok(records)
}

pub fn render_cache(records: &[ApRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        out.push_str(&format!("{},{}\n", rec.p, rec.ap));
    }
    out
}

/// Per-curve a_p cache rooted at a directory. Hit/compute counters make the
/// no-recompute guarantee observable in tests.
pub struct ApCache {
    dir: PathBuf,
    hits: AtomicU64,
    computes: AtomicU64,
}

impl ApCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ApCache {
            dir: dir.into(),
            hits: AtomicU64::new(0),
            computes: AtomicU64::new(0),
        }
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn computes(&self) -> u64 {
        self.computes.load(Ordering::Relaxed)
    }

    /// Canonical per-curve file: "a=<a>,b=<b>.ap".
    pub fn file_for(&self, a: &BigInt, b: &BigInt) -> PathBuf {
        self.dir.join(format!("a={a},b={b}.ap"))
    }

    fn read_records(&self, path: &Path) -> Result<Vec<ApRecord>, CacheError> {
        match fs::read(path) {
            Ok(data) => parse_cache_bytes(&data).map_err(|reason| {
                let quarantined = quarantine(path);
                let (line, reason) = split_line_prefix(&reason);
                CacheError::Corrupt {
                    line,
                    reason,
                    quarantined,
                }
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(CacheError::Io(e.to_string())),
        }
    }

    fn write_records(&self, path: &Path, records: &[ApRecord]) -> Result<(), CacheError> {
        fs::create_dir_all(&self.dir).map_err(|e| CacheError::Io(e.to_string()))?;
        let tmp = path.with_extension("ap.tmp");
        let mut f = fs::File::create(&tmp).map_err(|e| CacheError::Io(e.to_string()))?;
        f.write_all(render_cache(records).as_bytes())
            .map_err(|e| CacheError::Io(e.to_string()))?;
        f.sync_all().map_err(|e| CacheError::Io(e.to_string()))?;
        fs::rename(&tmp, path).map_err(|e| CacheError::Io(e.to_string()))
    }

    fn with_lock<T>(
        &self,
        path: &Path,
        f: impl FnOnce() -> Result<T, CacheError>,
    ) -> Result<T, CacheError> {
        fs::create_dir_all(&self.dir).map_err(|e| CacheError::Io(e.to_string()))?;
        let lock_path = path.with_extension("ap.lock");
        let lock = fs::File::create(&lock_path).map_err(|e| CacheError::Io(e.to_string()))?;
        lock.lock().map_err(|e| CacheError::Io(e.to_string()))?;
        let result = f();
        let _ = lock.unlock();
        result
    }

    /// Cache hit returns the stored value; a miss computes a_p, inserts it,
    /// and atomically rewrites the file.
    pub fn lookup_or_compute(
        &self,
        red: &ReductionData,
        a: &BigInt,
        b: &BigInt,
        p: u64,
    ) -> Result<i64, CacheError> {
        let path = self.file_for(a, b);
        self.with_lock(&path, || {
            let mut records = self.read_records(&path)?;
            if let Ok(idx) = records.binary_search_by_key(&p, |r| r.p) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(records[idx].ap);
            }
            let value = ap(red, p)?;
            self.computes.fetch_add(1, Ordering::Relaxed);
            let pos = records.partition_point(|r| r.p < p);
            records.insert(pos, ApRecord { p, ap: value });
            self.write_records(&path, &records)?;
            Ok(value)
        })
    }

    /// All good primes up to x, served from the cache where possible; the
    /// missing ones are computed in one batch and persisted.
    pub fn range(
        &self,
        red: &ReductionData,
        a: &BigInt,
        b: &BigInt,
        x: u64,
    ) -> Result<Vec<ApRecord>, CacheError> {
        let path = self.file_for(a, b);
        self.with_lock(&path, || {
            let cached = self.read_records(&path)?;
            let mut out = Vec::new();
            let mut added = false;
            for p in crate::arith::sieve(x) {
                if !red.is_good(p) {
                    continue;
                }
                match cached.binary_search_by_key(&p, |r| r.p) {
                    Ok(idx) => {
                        self.hits.fetch_add(1, Ordering::Relaxed);
                        out.push(cached[idx]);
                    }
                    Err(_) => {
                        let value = ap(red, p)?;
                        self.computes.fetch_add(1, Ordering::Relaxed);
                        out.push(ApRecord { p, ap: value });
                        added = true;
                    }
                }
            }
            if added {
                let mut merged = cached;
                for rec in &out {
                    if let Err(pos) = merged.binary_search_by_key(&rec.p, |r| r.p) {
                        merged.insert(pos, *rec);
                    }
                }
                self.write_records(&path, &merged)?;
            }
            Ok(out)
        })
    }
}

fn quarantine(path: &Path) -> String {
    let target = path.with_extension("ap.quarantined");
    let _ = fs::rename(path, &target);
    target.display().to_string()
}

fn split_line_prefix(reason: &str) -> (usize, String) {
    if let Some(rest) = reason.strip_prefix("line ") {
        if let Some((n, tail)) = rest.split_once(':') {
            if let Ok(line) = n.parse() {
                return (line, tail.trim().to_string());
            }
        }
    }
    (0, reason.to_string())
}
