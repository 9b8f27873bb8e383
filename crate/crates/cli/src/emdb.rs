//! Download and cache of primary maps from the public EMDB archive.
//!
//! The URL template (placeholder `{id}`) and cache directory can be changed
//! with `FSCINFO_EMDB_URL` and `FSCINFO_CACHE`. A cached entry is returned
//! without any network access.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use flate2::read::GzDecoder;

use crate::error::{CliError, Result};
use crate::mrc::parse_mrc;

pub const DEFAULT_URL_TEMPLATE: &str =
    "https://ftp.ebi.ac.uk/pub/databases/emdb/structures/EMD-{id}/map/emd_{id}.map.gz";
pub const URL_ENV: &str = "FSCINFO_EMDB_URL";
pub const CACHE_ENV: &str = "FSCINFO_CACHE";

/// Downloads run one at a time within a process.
static DOWNLOAD: Mutex<()> = Mutex::new(());

#[derive(Debug, Clone, PartialEq)]
pub struct EmdbOptions {
    pub url_template: String,
    pub cache_dir: PathBuf,
    pub timeout: Duration,
}

impl EmdbOptions {
    /// Environment overrides, falling back to the public archive and a
    /// cache under the system temporary directory.
    pub fn from_env() -> Self {
        Self {
            url_template: std::env::var(URL_ENV).unwrap_or_else(|_| DEFAULT_URL_TEMPLATE.to_string()),
            cache_dir: std::env::var_os(CACHE_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| std::env::temp_dir().join("fscinfo-emdb")),
            timeout: Duration::from_secs(600),
        }
    }
}

/// Accepts `21452`, `EMD-21452` or `emd_21452`; returns the numeric part.
pub fn normalize_id(id: &str) -> Result<String> {
    let t = id.trim();
    let lower = t.to_ascii_lowercase();
    let digits = lower
        .strip_prefix("emd-")
        .or_else(|| lower.strip_prefix("emd_"))
        .unwrap_or(&lower);
    if (4..=6).contains(&digits.len()) && digits.bytes().all(|b| b.is_ascii_digit()) {
        Ok(digits.to_string())
    } else {
        Err(CliError::MalformedId(id.to_string()))
    }
}

pub fn cache_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("emd_{id}.map"))
}

/// Local path of the decompressed map for an entry, downloading it first if
/// it is not cached.
pub fn fetch_emdb(id: &str, opts: &EmdbOptions) -> Result<PathBuf> {
    let id = normalize_id(id)?;
    let target = cache_path(&opts.cache_dir, &id);
    if target.is_file() {
        return Ok(target);
    }
    let _guard = DOWNLOAD.lock().unwrap_or_else(|e| e.into_inner());
    if target.is_file() {
        return Ok(target);
    }
    fs::create_dir_all(&opts.cache_dir).map_err(|e| CliError::Io(format!("{}: {e}", opts.cache_dir.display())))?;
    let url = opts.url_template.replace("{id}", &id);
    let compressed = download(&url, opts.timeout)?;
    let mut map = Vec::new();
    GzDecoder::new(compressed.as_slice())
        .read_to_end(&mut map)
        .map_err(|e| CliError::Data(format!("{url}: not a valid gzip stream: {e}")))?;
    parse_mrc(&map)?;
    let tmp = opts.cache_dir.join(format!(".emd_{id}.map.{}.part", std::process::id()));
    fs::write(&tmp, &map).map_err(|e| CliError::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, &target).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::Io(format!("{}: {e}", target.display()))
    })?;
    Ok(target)
}

fn download(url: &str, timeout: Duration) -> Result<Vec<u8>> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .build()
        .into();
    let resp = agent.get(url).call().map_err(|e| CliError::Http(format!("{url}: {e}")))?;
    let declared = resp.body().content_length();
    let mut bytes = Vec::new();
    resp.into_body()
        .into_reader()
        .read_to_end(&mut bytes)
        .map_err(|e| CliError::Http(format!("{url}: {e}")))?;
    if let Some(n) = declared {
        if n != bytes.len() as u64 {
            return Err(CliError::LengthMismatch {
                expected: n,
                actual: bytes.len() as u64,
            });
        }
    }
    Ok(bytes)
}
