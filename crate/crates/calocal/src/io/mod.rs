//! Dataset and report persistence: binary event files, coefficient CSVs,
//! JSON-lines training reports, and the TOML run configuration.
//!
//! Every writer goes through [`atomic_write`]: content lands in a temp file
//! in the target directory and is renamed into place, so a failed command
//! never leaves a partial artifact at the target path.

pub mod coeffs;
pub mod config;
pub mod events;
pub mod report;

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;

/// Writes `emit`'s output to `path` via a temp file + rename.
pub fn atomic_write<F>(path: &Path, emit: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        emit(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn failed_emit_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("out.bin");
        let res = atomic_write(&target, |w| {
            w.write_all(b"partial")?;
            Err(Error::Format("midway failure".into()))
        });
        assert!(res.is_err());
        assert!(!target.exists());
    }

    #[test]
    fn successful_write_replaces_target() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("out.txt");
        std::fs::write(&target, "old").unwrap();
        atomic_write(&target, |w| {
            w.write_all(b"new")?;
            Ok(())
        })
        .unwrap();
        assert_eq!(std::fs::read_to_string(&target).unwrap(), "new");
    }
}
