//! Binary event file format.
//!
//! Layout, all little-endian:
//!
//! | bytes | field            |
//! |-------|------------------|
//! | 4     | magic `"CALO"`   |
//! | 4     | version u32 = 1  |
//! | 8     | n_events u64     |
//! | 4     | n_rows u32       |
//! | 4     | n_cols u32       |
//! | 4     | beam_energy f32  |
//! | 8     | seed u64         |
//!
//! followed by `n_events * n_rows * n_cols` cell energies as f32, row-major
//! per event. Cell values are stored at 32-bit precision; training math
//! stays in f64.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use super::atomic_write;
use crate::error::{Error, Result};
use crate::sim::{DetectorGeometry, EventSet};

pub const MAGIC: [u8; 4] = *b"CALO";
pub const VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 36;

pub fn write_events(path: &Path, e: &EventSet) -> Result<()> {
    atomic_write(path, |w| {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(e.n_events() as u64).to_le_bytes())?;
        w.write_all(&(e.geometry().n_rows as u32).to_le_bytes())?;
        w.write_all(&(e.geometry().n_cols as u32).to_le_bytes())?;
        w.write_all(&(e.beam_energy_gev() as f32).to_le_bytes())?;
        w.write_all(&e.seed().to_le_bytes())?;
        let mut buf = Vec::with_capacity(e.raw().len() * 4);
        for &v in e.raw() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    })
}

pub fn read_events(path: &Path) -> Result<EventSet> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    let mut header = [0u8; HEADER_BYTES];
    r.read_exact(&mut header).map_err(|_| {
        Error::Format(format!(
            "{}: file too short for the {HEADER_BYTES}-byte header",
            path.display()
        ))
    })?;
    if header[0..4] != MAGIC {
        return Err(Error::Format(format!(
            "{}: bad magic {:?}, expected \"CALO\"",
            path.display(),
            &header[0..4]
        )));
    }
    let u32le = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
    let u64le = |b: &[u8]| u64::from_le_bytes(b.try_into().unwrap());
    let version = u32le(&header[4..8]);
    if version != VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported version {version}, expected {VERSION}",
            path.display()
        )));
    }
    let n_events = u64le(&header[8..16]);
    let n_rows = u32le(&header[16..20]) as usize;
    let n_cols = u32le(&header[20..24]) as usize;
    let beam = f32::from_le_bytes(header[24..28].try_into().unwrap()) as f64;
    let seed = u64le(&header[28..36]);

    let geometry = DetectorGeometry::new(n_rows, n_cols, DetectorGeometry::default().cell_pitch_mm)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let expected_cells = n_events
        .checked_mul(geometry.n_cells() as u64)
        .ok_or_else(|| Error::Format(format!("{}: event count overflows", path.display())))?;
    let expected_bytes = expected_cells
        .checked_mul(4)
        .ok_or_else(|| Error::Format(format!("{}: payload size overflows", path.display())))?;

    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() as u64 != expected_bytes {
        return Err(Error::Format(format!(
            "{}: truncated payload: expected {expected_bytes} bytes, found {}",
            path.display(),
            payload.len()
        )));
    }
    let events: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    EventSet::new(geometry, events, beam, seed)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Inspection export: a commented header plus one `event,row,col,energy_mev`
/// line per nonzero cell.
pub fn write_events_csv(path: &Path, e: &EventSet) -> Result<()> {
    atomic_write(path, |w| {
        writeln!(
            w,
            "# n_events={} n_rows={} n_cols={} beam_energy_gev={} seed={}",
            e.n_events(),
            e.geometry().n_rows,
            e.geometry().n_cols,
            e.beam_energy_gev(),
            e.seed()
        )?;
        writeln!(w, "event,row,col,energy_mev")?;
        let n_cols = e.geometry().n_cols;
        for (ev, cells) in e.iter_events().enumerate() {
            for (i, &v) in cells.iter().enumerate() {
                if v != 0.0 {
                    writeln!(w, "{ev},{},{},{:.8e}", i / n_cols, i % n_cols, v)?;
                }
            }
        }
        Ok(())
    })
}
