//! Append-only JSONL game log.
//!
//! One [`GameRecord`] per line. Writers take an advisory lock on the file.
//! A crash can leave a final line without its newline; readers skip it with
//! a warning, and the next writer moves it to `<log>.quarantine` before
//! appending.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use wordsync_core::record::RecordError;
use wordsync_core::GameRecord;

#[derive(Debug, thiserror::Error)]
pub enum StorageError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("refusing to store an invalid record: {0}")]
    InvalidRecord(RecordError),
}

impl StorageError {
    /// Line number of a schema error.
    pub fn line(&self) -> Option<usize> {
        match self {
            StorageError::Schema { line, .. } => Some(*line),
            _ => None,
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> StorageError + '_ {
    move |source| StorageError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn quarantine_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".quarantine");
    PathBuf::from(name)
}

/// Appends one record as a JSON line and syncs it to disk.
pub fn append_game(path: &Path, record: &GameRecord) -> Result<(), StorageError> {
    append_games(path, std::slice::from_ref(record))
}

/// Appends records in order under a single lock.
pub fn append_games(path: &Path, records: &[GameRecord]) -> Result<(), StorageError> {
    let mut lines = String::new();
    for record in records {
        record.validate().map_err(StorageError::InvalidRecord)?;
        lines.push_str(&serde_json::to_string(record).expect("records always serialize"));
        lines.push('\n');
    }
    let err = io_err(path);
    let mut file = OpenOptions::new()
        .create(true)
        .read(true)
        .append(true)
        .open(path)
        .map_err(&err)?;
    file.lock().map_err(&err)?;
    repair_tail(path, &mut file)?;
    file.write_all(lines.as_bytes()).map_err(&err)?;
    file.sync_data().map_err(&err)?;
    Ok(())
}

/// Moves an unterminated final line to the quarantine file.
fn repair_tail(path: &Path, file: &mut File) -> Result<(), StorageError> {
    let err = io_err(path);
    let len = file.metadata().map_err(&err)?.len();
    if len == 0 {
        return Ok(());
    }
    let mut last = [0u8; 1];
    file.seek(SeekFrom::Start(len - 1)).map_err(&err)?;
    file.read_exact(&mut last).map_err(&err)?;
    if last[0] == b'\n' {
        return Ok(());
    }
    // scan backwards in blocks for the previous newline
    let mut start = 0u64;
    let mut end = len;
    let mut block = vec![0u8; 8192];
    'scan: while end > 0 {
        let from = end.saturating_sub(block.len() as u64);
        let n = (end - from) as usize;
        file.seek(SeekFrom::Start(from)).map_err(&err)?;
        file.read_exact(&mut block[..n]).map_err(&err)?;
        if let Some(i) = block[..n].iter().rposition(|b| *b == b'\n') {
            start = from + i as u64 + 1;
            break 'scan;
        }
        end = from;
    }
    let mut tail = Vec::with_capacity((len - start) as usize);
    file.seek(SeekFrom::Start(start)).map_err(&err)?;
    file.read_to_end(&mut tail).map_err(&err)?;
    if serde_json::from_slice::<GameRecord>(&tail).is_ok() {
        // complete record, only the newline is missing
        return file.write_all(b"\n").map_err(&err);
    }

    let qpath = quarantine_path(path);
    let mut q = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&qpath)
        .map_err(io_err(&qpath))?;
    q.write_all(&tail)
        .and_then(|_| q.write_all(b"\n"))
        .and_then(|_| q.sync_data())
        .map_err(io_err(&qpath))?;
    tracing::warn!(
        log = %path.display(),
        quarantine = %qpath.display(),
        bytes = tail.len(),
        "moved partial final line out of the game log"
    );
    file.set_len(start).map_err(&err)?;
    Ok(())
}

/// Contents of a log file.
#[derive(Debug, Clone, PartialEq)]
pub struct GameLog {
    pub games: Vec<GameRecord>,
    /// Line number of an unterminated final line that was skipped.
    pub partial_tail: Option<usize>,
}

/// Reads and validates every record in the log.
pub fn read_log(path: &Path) -> Result<GameLog, StorageError> {
    let err = io_err(path);
    let mut data = Vec::new();
    File::open(path)
        .map_err(&err)?
        .read_to_end(&mut data)
        .map_err(&err)?;
    let terminated = data.last().is_none_or(|b| *b == b'\n');
    let mut games = Vec::new();
    let mut ids = HashSet::new();
    let mut partial_tail = None;
    let schema = |line: usize, message: String| StorageError::Schema {
        path: path.to_path_buf(),
        line,
        message,
    };
    let lines: Vec<&[u8]> = data.split(|b| *b == b'\n').collect();
    // split yields an empty piece after the final newline
    let count = if terminated { lines.len() - 1 } else { lines.len() };
    for (i, raw) in lines.iter().take(count).enumerate() {
        let line_no = i + 1;
        let is_tail = !terminated && i + 1 == count;
        if raw.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let parsed = std::str::from_utf8(raw)
            .map_err(|e| e.to_string())
            .and_then(|s| serde_json::from_str::<GameRecord>(s).map_err(|e| e.to_string()));
        let record = match parsed {
            Ok(r) => r,
            Err(_) if is_tail => {
                tracing::warn!(log = %path.display(), line = line_no, "skipping partial final line");
                partial_tail = Some(line_no);
                continue;
            }
            Err(e) => return Err(schema(line_no, e)),
        };
        record
            .validate()
            .map_err(|e| schema(line_no, e.to_string()))?;
        if !ids.insert(record.game_id.clone()) {
            return Err(schema(
                line_no,
                format!("duplicate game_id {:?}", record.game_id),
            ));
        }
        games.push(record);
    }
    Ok(GameLog {
        games,
        partial_tail,
    })
}

/// Records accepted by `filter`, in file order.
pub fn load_games(
    path: &Path,
    filter: Option<&dyn Fn(&GameRecord) -> bool>,
) -> Result<Vec<GameRecord>, StorageError> {
    let log = read_log(path)?;
    Ok(match filter {
        Some(f) => log.games.into_iter().filter(|g| f(g)).collect(),
        None => log.games,
    })
}

/// Game ids already present, for collision checks before a run.
pub fn existing_ids(path: &Path) -> Result<HashSet<String>, StorageError> {
    if !path.exists() {
        return Ok(HashSet::new());
    }
    let file = File::open(path).map_err(io_err(path))?;
    let mut ids = HashSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        #[derive(serde::Deserialize)]
        struct Id {
            game_id: String,
        }
        if let Ok(Id { game_id }) = serde_json::from_str(&line) {
            ids.insert(game_id);
        }
    }
    Ok(ids)
}
