use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use daqc_core::hamiltonian::TwoBodyHamiltonian;

/// Float with 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_hamiltonian(path: &Path) -> Result<TwoBodyHamiltonian> {
    TwoBodyHamiltonian::parse(&read_text(path)?)
        .with_context(|| format!("parsing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `# daqc <verb> key=value ...`, the first line of every CSV file.
pub fn config_echo(verb: &str, config: &[(&str, String)]) -> String {
    let mut line = format!("# daqc {verb}");
    for (k, v) in config {
        line.push_str(&format!(" {k}={v}"));
    }
    line
}

/// CSV writer that emits the config-echo comment before the header.
pub struct CsvSink {
    inner: csv::Writer<Box<dyn Write>>,
}

impl CsvSink {
    /// Writes to `path`, or to standard output when `path` is `None`.
    pub fn open(path: Option<&PathBuf>, echo: &str, header: &[&str]) -> Result<Self> {
        let mut out: Box<dyn Write> = match path {
            Some(p) => Box::new(io::BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(io::stdout()),
        };
        writeln!(out, "{echo}")?;
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(header)?;
        Ok(Self { inner })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Human-readable report lines. They go to standard error when standard
/// output carries CSV data.
pub struct Report {
    to_stderr: bool,
}

impl Report {
    pub fn new(csv_on_stdout: bool) -> Self {
        Self {
            to_stderr: csv_on_stdout,
        }
    }

    pub fn line(&self, text: impl AsRef<str>) {
        if self.to_stderr {
            eprintln!("{}", text.as_ref());
        } else {
            println!("{}", text.as_ref());
        }
    }

    pub fn field(&self, name: &str, value: impl std::fmt::Display) {
        self.line(format!("{name:<32}{value}"));
    }
}
