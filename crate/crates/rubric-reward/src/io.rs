//! Record-per-line JSON files.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

impl IoError {
    fn file(path: &Path, source: io::Error) -> Self {
        IoError::File { path: path.to_path_buf(), source }
    }
}

/// One non-blank input line, numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub number: usize,
    pub text: String,
}

pub fn read_lines(path: &Path) -> Result<Vec<Line>, IoError> {
    let file = File::open(path).map_err(|e| IoError::file(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let text = line.map_err(|e| IoError::file(path, e))?;
        if !text.trim().is_empty() {
            out.push(Line { number: i + 1, text });
        }
    }
    Ok(out)
}

/// Every line decoded, failing on the first malformed one.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    read_lines(path)?
        .into_iter()
        .map(|l| {
            serde_json::from_str(&l.text).map_err(|e| IoError::Parse {
                path: path.to_path_buf(),
                line: l.number,
                message: e.to_string(),
            })
        })
        .collect()
}

/// A 1-based line number with that line's decoding outcome.
pub type Numbered<T, E> = (usize, Result<T, E>);

/// Every line decoded independently, so one bad line does not hide the rest.
pub fn read_jsonl_lenient<T: DeserializeOwned>(path: &Path) -> Result<Vec<Numbered<T, String>>, IoError> {
    Ok(read_lines(path)?
        .into_iter()
        .map(|l| (l.number, serde_json::from_str(&l.text).map_err(|e| e.to_string())))
        .collect())
}

/// `-` or no path means standard output.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, IoError> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) if p.as_os_str() == "-" => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => {
            let f = File::create(p).map_err(|e| IoError::file(p, e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

pub fn write_jsonl<T: Serialize>(out: &mut dyn Write, items: impl IntoIterator<Item = T>) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut *out, &item)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
