//! Output sinks and the CSV preamble.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Version of the CSV layouts written by the bench commands.
pub const CSV_SCHEMA: u32 = 1;

pub struct Sink {
    path: Option<PathBuf>,
}

impl Sink {
    pub fn new(path: Option<PathBuf>) -> Self {
        Sink { path }
    }

    pub fn open(&self) -> io::Result<Box<dyn Write>> {
        open(self.path.as_deref())
    }

    /// Companion file next to the main output, or standard output.
    pub fn sibling(&self, suffix: &str) -> Option<PathBuf> {
        self.path.as_ref().map(|p| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let ext = p.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
            p.with_file_name(format!("{stem}{suffix}{ext}"))
        })
    }

    pub fn write_json(&self, value: &serde_json::Value) -> io::Result<()> {
        let mut w = self.open()?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()
    }
}

pub fn open(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Schema line, timestamp line, then one `key=value` line per parameter.
pub fn preamble<W: Write>(w: &mut W, kind: &str, params: &[(&str, String)]) -> io::Result<()> {
    writeln!(w, "# invkit {kind} schema v{CSV_SCHEMA}")?;
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    writeln!(w, "# generated unix={secs}")?;
    for (k, v) in params {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

/// Formats a float so that the CSV round-trips it exactly.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:e}")
    }
}
