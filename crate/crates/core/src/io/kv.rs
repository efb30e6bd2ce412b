//! Flat `key = value` text files.
//!
//! One pair per line; blank lines and anything after `#` are ignored. Keys may
//! repeat, and callers decide whether that is meaningful.

/// One parsed pair with its 1-based line number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits `text` into entries, or returns the 1-based number of the first
/// malformed line.
pub fn parse(text: &str) -> Result<Vec<Entry>, usize> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(idx + 1)?;
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(idx + 1);
        }
        entries.push(Entry {
            line: idx + 1,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}
