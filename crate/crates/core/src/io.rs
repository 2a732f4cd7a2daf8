//! Self-describing CSV: `# key=value` header lines followed by numeric rows.
//! Writes go to a temporary sibling file and are renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::{Error, Point, Result};

/// Ordered key/value header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    pub entries: Vec<(String, String)>,
}

impl Header {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Parse(format!("missing header key `{key}`")))
    }

    pub fn parse_f64(&self, key: &str) -> Result<f64> {
        let v = self.require(key)?;
        v.parse().map_err(|_| Error::Parse(format!("bad number for `{key}`: {v}")))
    }

    pub fn parse_usize(&self, key: &str) -> Result<usize> {
        let v = self.require(key)?;
        v.parse().map_err(|_| Error::Parse(format!("bad integer for `{key}`: {v}")))
    }

    pub fn parse_u64(&self, key: &str) -> Result<u64> {
        let v = self.require(key)?;
        v.parse().map_err(|_| Error::Parse(format!("bad integer for `{key}`: {v}")))
    }

    pub fn parse_point(&self, key: &str) -> Result<Point> {
        parse_point(self.require(key)?)
    }

    /// `key=value` lines, as used by manifests.
    pub fn to_kv_string(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Parses `key=value` lines; blank lines and `#` comments are skipped.
    pub fn from_kv_str(text: &str) -> Result<Header> {
        let mut h = Header::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{line}`")))?;
            h.set(k.trim(), v.trim());
        }
        Ok(h)
    }
}

pub fn format_point(p: Point) -> String {
    format!("{},{}", p.x, p.y)
}

pub fn parse_point(s: &str) -> Result<Point> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("expected `x,y`, got `{s}`")))?;
    let x = a.trim().parse().map_err(|_| Error::Parse(format!("bad coordinate `{a}`")))?;
    let y = b.trim().parse().map_err(|_| Error::Parse(format!("bad coordinate `{b}`")))?;
    Ok(Point::new(x, y))
}

/// Header lines followed by `rows` rows of `cols` comma-separated values.
pub fn format_table(header: &Header, cols: usize, values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24 + 256);
    for (k, v) in &header.entries {
        out.push_str(&format!("# {k}={v}\n"));
    }
    for row in values.chunks(cols.max(1)) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Inverse of [`format_table`]; returns the header and rows.
pub fn parse_table(text: &str) -> Result<(Header, Vec<Vec<f64>>)> {
    let mut header = Header::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                header.set(k.trim(), v.trim());
            }
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad value `{s}`"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip_is_exact() {
        let mut h = Header::new();
        h.set("kind", "theory").set("k", 200.0).set("probe", format_point(Point::new(0.3, 0.153)));
        let values = [0.1, -1.0 / 3.0, 2.5e-300, 7.0, f64::MIN_POSITIVE, -0.0];
        let text = format_table(&h, 3, &values);
        let (h2, rows) = parse_table(&text).unwrap();
        assert_eq!(h, h2);
        let flat: Vec<f64> = rows.concat();
        assert_eq!(flat.len(), values.len());
        for (a, b) in flat.iter().zip(values.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(h2.parse_point("probe").unwrap(), Point::new(0.3, 0.153));
    }

    #[test]
    fn kv_parsing() {
        let h = Header::from_kv_str("# comment\nk = 100\n\nprobe=0.3,0\n").unwrap();
        assert_eq!(h.parse_f64("k").unwrap(), 100.0);
        assert!(h.parse_f64("side").is_err());
        assert!(Header::from_kv_str("novalue").is_err());
    }
}
