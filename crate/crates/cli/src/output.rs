use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Where a command writes its document: `--out` or stdout.
#[derive(Debug, Clone)]
pub struct Sink {
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Sink {
    fn open(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
        match path {
            Some(p) => {
                let file = File::create(p).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", p.display())))?;
                Ok(Box::new(BufWriter::new(file)))
            }
            None => Ok(Box::new(BufWriter::new(io::stdout()))),
        }
    }

    pub fn json<T: Serialize + ?Sized>(&self, value: &T) -> Result<(), Failure> {
        write_json(self.out.as_deref(), value)
    }

    pub fn csv<T: Serialize>(&self, rows: &[T]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(Self::open(self.out.as_deref())?);
        for row in rows {
            w.serialize(row).map_err(|e| Failure::Runtime(e.to_string()))?;
        }
        w.flush().map_err(|e| Failure::Runtime(e.to_string()))
    }

    /// Companion file next to `--out`, e.g. `runs.csv` → `runs.csv.summary.json`.
    pub fn sidecar(&self, suffix: &str) -> Option<PathBuf> {
        self.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(suffix);
            PathBuf::from(s)
        })
    }
}

/// Pretty JSON with a trailing newline, to a file or stdout.
pub fn write_json<T: Serialize + ?Sized>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    let mut w = Sink::open(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Failure::Runtime(e.to_string()))
}

/// JSON number, or a marker string for infinities and NaN.
pub fn num(x: f64) -> serde_json::Value {
    serde_json::to_value(ppmc_core::report::Real(x)).expect("real serializes")
}

pub fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    let mut w = Sink::open(path)?;
    w.write_all(bytes).and_then(|_| w.flush()).map_err(|e| Failure::Runtime(e.to_string()))
}
