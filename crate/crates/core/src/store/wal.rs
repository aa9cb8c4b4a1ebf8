use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::{Record, StoreError};

/// Append-only JSON-lines log, one record per line, synced per append.
pub(super) struct Wal {
    path: PathBuf,
    file: File,
}

impl Wal {
    /// Opens the log and returns the records already in it. A torn final
    /// line (crash mid-append) is dropped and truncated away; corruption
    /// anywhere else is an error.
    pub(super) fn open(path: &Path) -> Result<(Self, Vec<Record>), StoreError> {
        let mut records = Vec::new();
        let mut good_len: u64 = 0;
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
            let last = lines.len().saturating_sub(1);
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    good_len += line.len() as u64 + 1;
                    continue;
                }
                match serde_json::from_str::<Record>(line) {
                    Ok(rec) => {
                        records.push(rec);
                        good_len += line.len() as u64 + 1;
                    }
                    Err(_) if i == last => break,
                    Err(e) => {
                        return Err(StoreError::Corrupt {
                            path: path.display().to_string(),
                            message: format!("line {}: {e}", i + 1),
                        })
                    }
                }
            }
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        let len = file.metadata()?.len();
        if len > good_len {
            file.set_len(good_len)?;
        } else if len < good_len {
            // Last record is intact but lacks its newline.
            file.write_all(b"\n")?;
        }
        Ok((
            Self {
                path: path.to_path_buf(),
                file,
            },
            records,
        ))
    }

    pub(super) fn append(&mut self, rec: &Record) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(rec).map_err(|e| StoreError::Corrupt {
            path: self.path.display().to_string(),
            message: e.to_string(),
        })?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        Ok(())
    }
}
