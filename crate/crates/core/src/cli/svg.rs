//! Static SVG renderings of the three figure types. Layout depends only on
//! the table, so identical tables give byte-identical documents.

use std::fmt::Write;

use super::{CliError, Table};

const CELL: f64 = 10.0;
const LABEL_W: f64 = 120.0;
const ANNOT_W: f64 = 48.0;
const TOP: f64 = 40.0;
const FONT: &str = "font-family=\"sans-serif\" font-size=\"9\"";

pub fn render_svg(table: &Table, kind: &str) -> Result<String, CliError> {
    match kind {
        "tradeoff" => tradeoff(table),
        "stability" => stability(table),
        "parts" => parts(table),
        other => Err(CliError::UnsupportedKind(other.to_string())),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" \
         viewBox=\"0 0 {w:.0} {h:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn parse_cell(table: &Table, row: usize, col: usize) -> Result<f64, CliError> {
    let cell = &table.rows[row][col];
    cell.parse().map_err(|_| {
        CliError::MalformedTable(format!(
            "row {row}, column `{}`: `{cell}` is not numeric",
            table.header[col]
        ))
    })
}

fn require(table: &Table, name: &str) -> Result<usize, CliError> {
    table
        .column(name)
        .ok_or_else(|| CliError::MalformedTable(format!("missing column `{name}`")))
}

/// Grid-point columns `a0, a1, ...` in header order.
fn grid_columns(table: &Table) -> Vec<usize> {
    table
        .header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.strip_prefix('a').is_some_and(|r| r.parse::<usize>().is_ok()))
        .map(|(i, _)| i)
        .collect()
}

fn tradeoff(table: &Table) -> Result<String, CliError> {
    let zero = require(table, "pct_zero")?;
    let exvar = require(table, "pct_exvar")?;
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 56.0, 24.0, 24.0, 48.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let mut s = open(w, h);
    let _ = writeln!(
        s,
        "<g stroke=\"black\" fill=\"none\"><line x1=\"{left:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\"/>\
         <line x1=\"{left:.2}\" y1=\"{top:.2}\" x2=\"{left:.2}\" y2=\"{:.2}\"/></g>",
        top + ph,
        left + pw,
        top + ph,
        top + ph
    );
    for tick in [0.0, 25.0, 50.0, 75.0, 100.0] {
        let y = top + ph * (1.0 - tick / 100.0);
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{left:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" {FONT}>{tick:.0}</text>",
            left - 4.0,
            left - 6.0,
            y + 3.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {FONT}>grid point (increasing alpha)</text>\
         \n<text x=\"12\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 12 {:.2})\" {FONT}>percent</text>",
        left + pw / 2.0,
        h - 12.0,
        top + ph / 2.0,
        top + ph / 2.0
    );
    let n = table.rows.len();
    let x_of = |i: usize| {
        if n > 1 {
            left + pw * i as f64 / (n - 1) as f64
        } else {
            left
        }
    };
    for (col, stroke, dash) in [(zero, "black", ""), (exvar, "#777777", " stroke-dasharray=\"6 3\"")] {
        if n == 0 {
            continue;
        }
        let mut pts = Vec::with_capacity(n);
        for i in 0..n {
            let v = parse_cell(table, i, col)?.clamp(0.0, 100.0);
            pts.push(format!("{:.2},{:.2}", x_of(i), top + ph * (1.0 - v / 100.0)));
        }
        let _ = writeln!(
            s,
            "<polyline class=\"series\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>",
            pts.join(" ")
        );
    }
    let _ = writeln!(
        s,
        "<g {FONT}><line x1=\"{0:.2}\" y1=\"14\" x2=\"{1:.2}\" y2=\"14\" stroke=\"black\"/>\
         <text x=\"{2:.2}\" y=\"17\">% zero logratios</text>\
         <line x1=\"{3:.2}\" y1=\"14\" x2=\"{4:.2}\" y2=\"14\" stroke=\"#777777\" stroke-dasharray=\"6 3\"/>\
         <text x=\"{5:.2}\" y=\"17\">% explained variability</text></g>",
        left,
        left + 20.0,
        left + 24.0,
        left + 130.0,
        left + 150.0,
        left + 154.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Shared heatmap frame: row labels, grid outline and annotation columns.
struct Heatmap {
    rows: usize,
    cols: usize,
    annotations: usize,
}

impl Heatmap {
    fn width(&self) -> f64 {
        LABEL_W + CELL * self.cols as f64 + ANNOT_W * self.annotations as f64 + 8.0
    }

    fn height(&self) -> f64 {
        TOP + CELL * self.rows as f64 + 8.0
    }

    fn cell_x(&self, c: usize) -> f64 {
        LABEL_W + CELL * c as f64
    }

    fn row_y(&self, r: usize) -> f64 {
        TOP + CELL * r as f64
    }

    fn annot_x(&self, a: usize) -> f64 {
        LABEL_W + CELL * self.cols as f64 + ANNOT_W * (a as f64 + 0.5)
    }

    fn frame(&self, s: &mut String, annot_titles: &[&str]) {
        let _ = writeln!(
            s,
            "<rect class=\"frame\" x=\"{LABEL_W:.2}\" y=\"{TOP:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"none\" stroke=\"black\" stroke-width=\"0.5\"/>",
            CELL * self.cols as f64,
            CELL * self.rows as f64
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {FONT}>alpha: 0 to alpha_max</text>",
            LABEL_W + CELL * self.cols as f64 / 2.0,
            TOP - 24.0
        );
        for (a, title) in annot_titles.iter().enumerate() {
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {FONT}>{}</text>",
                self.annot_x(a),
                TOP - 6.0,
                escape(title)
            );
        }
    }

    fn label(&self, s: &mut String, r: usize, text: &str) {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" {FONT}>{}</text>",
            LABEL_W - 4.0,
            self.row_y(r) + CELL - 2.0,
            escape(text)
        );
    }

    fn annotation(&self, s: &mut String, r: usize, a: usize, text: &str) {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {FONT}>{}</text>",
            self.annot_x(a),
            self.row_y(r) + CELL - 2.0,
            escape(text)
        );
    }

    fn cell(&self, s: &mut String, r: usize, c: usize, fill: &str) {
        let _ = writeln!(
            s,
            "<rect class=\"cell\" x=\"{:.2}\" y=\"{:.2}\" width=\"{CELL:.2}\" height=\"{CELL:.2}\" fill=\"{fill}\"/>",
            self.cell_x(c),
            self.row_y(r)
        );
    }
}

/// Rows are logratios, `a*` columns hold 0/1 selection flags; `total`,
/// `exvar` and an optional `step` column are printed beside the grid.
fn stability(table: &Table) -> Result<String, CliError> {
    let grid = grid_columns(table);
    let mut annot: Vec<(usize, &str)> = vec![
        (require(table, "total")?, "total"),
        (require(table, "exvar")?, "exvar"),
    ];
    if let Some(c) = table.column("step") {
        annot.push((c, "STEP"));
    }
    let hm = Heatmap {
        rows: table.rows.len(),
        cols: grid.len(),
        annotations: annot.len(),
    };
    let mut s = open(hm.width(), hm.height());
    hm.frame(&mut s, &annot.iter().map(|a| a.1).collect::<Vec<_>>());
    for (r, row) in table.rows.iter().enumerate() {
        hm.label(&mut s, r, &row[0]);
        for (c, &col) in grid.iter().enumerate() {
            if parse_cell(table, r, col)? != 0.0 {
                hm.cell(&mut s, r, c, "#404040");
            }
        }
        for (a, &(col, name)) in annot.iter().enumerate() {
            let text = if name == "exvar" {
                format!("{:.1}", parse_cell(table, r, col)?)
            } else {
                row[col].clone()
            };
            hm.annotation(&mut s, r, a, &text);
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Rows are parts, `a*` columns hold selection counts shaded from white
/// (zero) to near-black (the table maximum).
fn parts(table: &Table) -> Result<String, CliError> {
    let grid = grid_columns(table);
    let hm = Heatmap {
        rows: table.rows.len(),
        cols: grid.len(),
        annotations: 0,
    };
    let mut counts = vec![vec![0.0; grid.len()]; table.rows.len()];
    let mut max = 0.0f64;
    for (r, row) in counts.iter_mut().enumerate() {
        for (c, &col) in grid.iter().enumerate() {
            row[c] = parse_cell(table, r, col)?;
            max = max.max(row[c]);
        }
    }
    let mut s = open(hm.width(), hm.height());
    hm.frame(&mut s, &[]);
    for (r, row) in counts.iter().enumerate() {
        hm.label(&mut s, r, &table.rows[r][0]);
        for (c, &v) in row.iter().enumerate() {
            if v > 0.0 {
                let level = (235.0 - 200.0 * v / max).round() as u8;
                hm.cell(&mut s, r, c, &format!("#{level:02x}{level:02x}{level:02x}"));
            }
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}
