//! Advisory on-disk cache of lagrangian enumerations.
//!
//! Files live in `$WEIL_CACHE_DIR` as `lagrangians_p{p}_d{d}.json`. A file is
//! used only if its version, header and count match and every record parses
//! to a lagrangian; anything else is rebuilt. Write failures are ignored.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use weil_core::symplectic::{enumerate_lagrangians, Lagrangian, LagrangianRecord, SymplecticSpace};

pub const CACHE_ENV: &str = "WEIL_CACHE_DIR";
pub const CACHE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct CacheFile {
    format_version: u32,
    p: u32,
    d: usize,
    count: u64,
    lagrangians: Vec<LagrangianRecord>,
}

/// How a lookup was served.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheStatus {
    Disabled,
    Hit,
    Miss,
    Rebuilt,
}

pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

pub fn cache_path(dir: &Path, space: SymplecticSpace) -> PathBuf {
    dir.join(format!("lagrangians_p{}_d{}.json", space.p(), space.d()))
}

fn read(path: &Path, space: SymplecticSpace) -> Option<Vec<Lagrangian>> {
    let text = fs::read_to_string(path).ok()?;
    let file: CacheFile = serde_json::from_str(&text).ok()?;
    if file.format_version != CACHE_VERSION
        || file.p != space.p()
        || file.d != space.d()
        || file.count as u128 != space.lagrangian_count()
        || file.lagrangians.len() as u64 != file.count
    {
        return None;
    }
    let lags = file
        .lagrangians
        .iter()
        .map(|r| if r.p == space.p() && r.d == space.d() { Lagrangian::from_record(r).ok() } else { None })
        .collect::<Option<Vec<_>>>()?;
    lags.windows(2).all(|w| w[0] < w[1]).then_some(lags)
}

fn write(path: &Path, space: SymplecticSpace, lags: &[Lagrangian]) {
    let file = CacheFile {
        format_version: CACHE_VERSION,
        p: space.p(),
        d: space.d(),
        count: lags.len() as u64,
        lagrangians: lags.iter().map(Lagrangian::to_record).collect(),
    };
    if let Some(parent) = path.parent() {
        let _ = fs::create_dir_all(parent);
    }
    let tmp = path.with_extension("json.tmp");
    if let Ok(text) = serde_json::to_string(&file) {
        if fs::write(&tmp, text).is_ok() {
            let _ = fs::rename(&tmp, path);
        }
    }
}

/// Lagrangians of `space` in enumeration order, through the cache directory if given.
pub fn lagrangians_in(dir: Option<&Path>, space: SymplecticSpace, budget: u128) -> weil_core::Result<(Vec<Lagrangian>, CacheStatus)> {
    let Some(dir) = dir else {
        return Ok((enumerate_lagrangians(space, budget)?, CacheStatus::Disabled));
    };
    let path = cache_path(dir, space);
    let existed = path.exists();
    if let Some(lags) = read(&path, space) {
        if lags.len() as u128 <= budget {
            return Ok((lags, CacheStatus::Hit));
        }
    }
    let lags = enumerate_lagrangians(space, budget)?;
    write(&path, space, &lags);
    Ok((lags, if existed { CacheStatus::Rebuilt } else { CacheStatus::Miss }))
}

/// [`lagrangians_in`] with the directory from the environment.
pub fn lagrangians(space: SymplecticSpace, budget: u128) -> weil_core::Result<Vec<Lagrangian>> {
    Ok(lagrangians_in(cache_dir().as_deref(), space, budget)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hit_miss_and_rebuild() {
        let dir = tempfile::tempdir().unwrap();
        let space = SymplecticSpace::new(3, 2).unwrap();
        let (first, st) = lagrangians_in(Some(dir.path()), space, 1000).unwrap();
        assert_eq!(st, CacheStatus::Miss);
        assert_eq!(first.len(), 40);
        let (again, st) = lagrangians_in(Some(dir.path()), space, 1000).unwrap();
        assert_eq!((again, st), (first.clone(), CacheStatus::Hit));

        let path = cache_path(dir.path(), space);
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replace("\"format_version\":1", "\"format_version\":0")).unwrap();
        let (rebuilt, st) = lagrangians_in(Some(dir.path()), space, 1000).unwrap();
        assert_eq!((rebuilt, st), (first.clone(), CacheStatus::Rebuilt));

        fs::write(&path, "{ not json").unwrap();
        assert_eq!(lagrangians_in(Some(dir.path()), space, 1000).unwrap().1, CacheStatus::Rebuilt);
        assert_eq!(lagrangians_in(Some(dir.path()), space, 1000).unwrap().1, CacheStatus::Hit);
    }

    #[test]
    fn tampered_records_are_not_trusted() {
        let dir = tempfile::tempdir().unwrap();
        let space = SymplecticSpace::new(3, 1).unwrap();
        let (first, _) = lagrangians_in(Some(dir.path()), space, 100).unwrap();
        let path = cache_path(dir.path(), space);
        let mut file: CacheFile = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        file.lagrangians[1] = file.lagrangians[0].clone();
        fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        let (lags, st) = lagrangians_in(Some(dir.path()), space, 100).unwrap();
        assert_eq!(st, CacheStatus::Rebuilt);
        assert_eq!(lags, first);
    }

    #[test]
    fn budget_still_applies_without_cache() {
        let space = SymplecticSpace::new(3, 2).unwrap();
        assert!(matches!(lagrangians_in(None, space, 10), Err(weil_core::Error::Budget { .. })));
    }
}
