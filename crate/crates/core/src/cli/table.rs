use std::io::Read;
use std::path::Path;

use super::CliError;

/// A header row plus string cells, the common currency of the writers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row; its width must match the header.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.header).map_err(CliError::from_csv)?;
        for row in &self.rows {
            w.write_record(row).map_err(CliError::from_csv)?;
        }
        w.into_inner()
            .map_err(|e| CliError::Internal(format!("csv buffer: {e}")))
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self, CliError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r
            .headers()
            .map_err(CliError::from_csv)?
            .iter()
            .map(String::from)
            .collect();
        let rows = r
            .records()
            .map(|rec| {
                rec.map(|rec| rec.iter().map(String::from).collect())
                    .map_err(CliError::from_csv)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        Self::from_csv(file)
    }
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    // `-0` from an all-zero fit prints as `0`.
    if v == 0.0 {
        return "0".into();
    }
    format!("{v}")
}

/// `ln(a/b)` with any `/` inside a part name escaped as `\/`.
pub fn pair_label(a: &str, b: &str) -> String {
    format!("ln({}/{})", a.replace('/', "\\/"), b.replace('/', "\\/"))
}
