use std::path::Path;

use super::{IoError, Result};

/// One row of a `roi,measure,value` statistics table.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub roi: String,
    pub measure: String,
    pub value: f64,
}

/// Rectangular string table written as RFC 4180 CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 input")
    }

    /// Parses CSV text; lines starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header = r
            .headers()
            .map_err(|e| IoError::MalformedTable { line: 1, reason: e.to_string() })?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| IoError::MalformedTable {
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                reason: e.to_string(),
            })?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| IoError::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn write_stats_csv(rows: &[StatsRow], path: impl AsRef<Path>) -> Result<()> {
    let mut t = CsvTable::new(["roi", "measure", "value"]);
    for r in rows {
        t.push([r.roi.clone(), r.measure.clone(), r.value.to_string()]);
    }
    t.write(path)
}

pub fn read_stats_csv(path: impl AsRef<Path>) -> Result<Vec<StatsRow>> {
    let t = CsvTable::read(path)?;
    if t.header != ["roi", "measure", "value"] {
        return Err(IoError::MalformedTable {
            line: 1,
            reason: "expected header roi,measure,value".into(),
        });
    }
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let value = r[2].parse().map_err(|_| IoError::MalformedTable {
                line: i + 2,
                reason: format!("bad value {:?}", r[2]),
            })?;
            Ok(StatsRow { roi: r[0].clone(), measure: r[1].clone(), value })
        })
        .collect()
}

/// Per-vertex map as `vertex_id,value`, optional leading `#` comment lines.
pub fn write_vertex_map(
    values: &[f64],
    comments: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut s = String::new();
    for c in comments {
        s.push_str("# ");
        s.push_str(c);
        s.push('\n');
    }
    let mut t = CsvTable::new(["vertex_id", "value"]);
    for (i, v) in values.iter().enumerate() {
        t.push([i.to_string(), v.to_string()]);
    }
    s.push_str(&t.to_csv_string());
    std::fs::write(path, s).map_err(|e| IoError::io(path, e))
}

pub fn read_vertex_map(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let t = CsvTable::read(path)?;
    let col = t.column("value").ok_or(IoError::MalformedTable {
        line: 1,
        reason: "missing value column".into(),
    })?;
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r[col].parse().map_err(|_| IoError::MalformedTable {
                line: i + 2,
                reason: format!("bad value {:?}", r[col]),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_csv_quotes_names_with_commas() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let rows = vec![
            StatsRow { roi: "caudalmiddlefrontal (lh, rh)".into(), measure: "thickness".into(), value: 2.5 },
            StatsRow { roi: "cuneus (lh)".into(), measure: "area_mm2".into(), value: 0.1 },
        ];
        write_stats_csv(&rows, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("roi,measure,value\n\"caudalmiddlefrontal (lh, rh)\",thickness,2.5\n"));
        assert_eq!(read_stats_csv(&p).unwrap(), rows);
    }

    #[test]
    fn vertex_map_with_comment() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_vertex_map(&[1.0, -0.25], &["lambda1=2".into()], &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "# lambda1=2\nvertex_id,value\n0,1\n1,-0.25\n");
        assert_eq!(read_vertex_map(&p).unwrap(), vec![1.0, -0.25]);
    }
}
