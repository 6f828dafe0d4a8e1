use std::path::Path;

use csv::Trim;

use super::CliError;
use crate::coda::CompositionMatrix;
use crate::error::CodaError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestOptions {
    /// The first column holds row identifiers and is skipped.
    pub id_column: bool,
}

/// Reads a composition from CSV: a header of part names, then one
/// observation per row. Cells must be finite and strictly positive.
pub fn ingest_csv(path: &Path, options: &IngestOptions) -> Result<CompositionMatrix, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    ingest_reader(file, options)
}

pub fn ingest_reader<R: std::io::Read>(
    reader: R,
    options: &IngestOptions,
) -> Result<CompositionMatrix, CliError> {
    let skip = usize::from(options.id_column);
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(reader);
    let header = r.headers().map_err(CliError::from_csv)?.clone();
    if header.len() <= skip {
        return Err(CliError::Parse {
            line: 1,
            col: header.len(),
            message: "header has no part columns".into(),
        });
    }
    let names: Vec<String> = header.iter().skip(skip).map(String::from).collect();

    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(CliError::from_csv)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(CliError::Parse {
                line,
                col: rec.len().min(header.len()) + 1,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let row = rec
            .iter()
            .enumerate()
            .skip(skip)
            .map(|(c, cell)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Parse {
                    line,
                    col: c + 1,
                    message: format!("`{cell}` is not a finite number"),
                }),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
        lines.push(line);
    }

    crate::coda::validate_composition(&rows, &names).map_err(|e| match e {
        CodaError::NonPositiveEntry { row, col, value } => CliError::Validation(format!(
            "line {}, part `{}`: non-positive value {value}; zeros and negatives are not \
             imputed, replace them before analysis",
            lines[row],
            names[col]
        )),
        other => CliError::Validation(other.to_string()),
    })
}
