//! Field snapshots: a text header followed by little-endian `f64` values in
//! row-major order.
//!
//! ```text
//! tumorch-snapshot v1
//! name phi
//! time 2.5e-1
//! dims 128
//! spacing 7.874015748031496e-3
//! origin 0e0
//! endian little
//! end
//! <len × 8 bytes>
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::dynamics::{Saver, State};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

pub const SNAPSHOT_MAGIC: &str = "tumorch-snapshot v1";

/// A decoded snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub name: String,
    pub time: f64,
    pub field: Field,
}

fn join(v: &[impl ToString]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_snapshot(mut w: impl Write, name: &str, time: f64, field: &Field) -> Result<()> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        return Err(Error::Format(format!("field name {name:?} must be a nonempty token")));
    }
    let g = field.grid();
    writeln!(w, "{SNAPSHOT_MAGIC}")?;
    writeln!(w, "name {name}")?;
    writeln!(w, "time {time:e}")?;
    writeln!(w, "dims {}", join(g.dims()))?;
    writeln!(w, "spacing {}", join(&g.spacing().iter().map(|h| format!("{h:e}")).collect::<Vec<_>>()))?;
    writeln!(w, "origin {}", join(&g.origin().iter().map(|o| format!("{o:e}")).collect::<Vec<_>>()))?;
    writeln!(w, "endian little")?;
    writeln!(w, "end")?;
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(key: &str, rest: &str) -> Result<Vec<T>> {
    rest.split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Format(format!("bad {key} entry {t:?}"))))
        .collect()
}

pub fn read_snapshot(r: impl Read) -> Result<Snapshot> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != SNAPSHOT_MAGIC {
        return Err(Error::Format(format!("unexpected magic {:?}", line.trim_end())));
    }
    let (mut name, mut time, mut dims, mut spacing, mut origin) = (None, None, None, None, None);
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Format("header not terminated".into()));
        }
        let l = line.trim_end();
        if l == "end" {
            break;
        }
        let (key, rest) = l.split_once(' ').unwrap_or((l, ""));
        match key {
            "name" => name = Some(rest.to_string()),
            "time" => time = Some(parse_list::<f64>(key, rest)?.first().copied().ok_or_else(|| Error::Format("empty time".into()))?),
            "dims" => dims = Some(parse_list::<usize>(key, rest)?),
            "spacing" => spacing = Some(parse_list::<f64>(key, rest)?),
            "origin" => origin = Some(parse_list::<f64>(key, rest)?),
            "endian" if rest == "little" => {}
            _ => return Err(Error::Format(format!("unknown header line {l:?}"))),
        }
    }
    let missing = |k: &str| Error::Format(format!("missing header key {k}"));
    let dims = dims.ok_or_else(|| missing("dims"))?;
    let spacing = spacing.ok_or_else(|| missing("spacing"))?;
    let origin = origin.ok_or_else(|| missing("origin"))?;
    let grid = Arc::new(Grid::new(&dims, &spacing, &origin).map_err(|e| Error::Format(e.to_string()))?);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            8 * grid.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(Snapshot {
        name: name.ok_or_else(|| missing("name"))?,
        time: time.ok_or_else(|| missing("time"))?,
        field: Field::new(grid, values)?,
    })
}

pub fn read_snapshot_file(path: impl AsRef<Path>) -> Result<Snapshot> {
    read_snapshot(fs::File::open(path)?)
}

/// Writes `mu`, `phi`, `sigma`, `xi` snapshots as `<dir>/<field>_<step:06>.snap`.
#[derive(Clone, Debug)]
pub struct SnapshotSaver {
    dir: PathBuf,
    stride: usize,
    written: usize,
}

impl SnapshotSaver {
    pub fn new(dir: impl Into<PathBuf>, stride: usize) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(SnapshotSaver {
            dir,
            stride: stride.max(1),
            written: 0,
        })
    }

    pub fn files_written(&self) -> usize {
        self.written
    }
}

impl Saver for SnapshotSaver {
    fn stride(&self) -> usize {
        self.stride
    }

    fn save(&mut self, step: usize, state: &State) -> Result<()> {
        for (name, f) in [("mu", &state.mu), ("phi", &state.phi), ("sigma", &state.sigma), ("xi", &state.xi)] {
            let path = self.dir.join(format!("{name}_{step:06}.snap"));
            let mut w = std::io::BufWriter::new(fs::File::create(path)?);
            write_snapshot(&mut w, name, state.t, f)?;
            w.flush()?;
            self.written += 1;
        }
        Ok(())
    }
}
