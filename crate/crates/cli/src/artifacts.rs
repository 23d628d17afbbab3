//! Deterministic artifact emission: identical inputs produce byte-identical
//! outputs, and files are written atomically (temp file plus rename).

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Resolves a user-supplied output path against the default output
/// directory from the environment.
pub fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("EINSYM_OUT_DIR") {
        Some(dir) => PathBuf::from(dir).join(path),
        None => path.to_path_buf(),
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let path = resolve_out(path);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension(format!(
        "tmp.{}",
        std::process::id()
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, &path)?;
    Ok(())
}

/// Emits an artifact: to the file when a path is given, to stdout otherwise.
pub fn emit(out: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            write_atomic(path, content.as_bytes())?;
            eprintln!("wrote {}", resolve_out(path).display());
        }
        None => println!("{content}"),
    }
    Ok(())
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
