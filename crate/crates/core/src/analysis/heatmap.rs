use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::str::FromStr;

use super::LatencyMatrix;
use crate::{Error, Result};

/// Palette endpoint for the smallest present value.
pub const LOW_COLOR: [u8; 3] = [0xf7, 0xfb, 0xff];
/// Palette endpoint for the largest present value.
pub const HIGH_COLOR: [u8; 3] = [0x08, 0x30, 0x6b];
const ABSENT_COLOR: &str = "#d9d9d9";

const CELL_W: usize = 64;
const CELL_H: usize = 24;
const CHAR_W: usize = 7;
const PAD: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorScale {
    Linear,
    #[default]
    Log,
}

impl ColorScale {
    fn name(self) -> &'static str {
        match self {
            ColorScale::Linear => "linear",
            ColorScale::Log => "log",
        }
    }
}

impl FromStr for ColorScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ColorScale::Linear),
            "log" => Ok(ColorScale::Log),
            other => Err(Error::InvalidArgument(format!("unknown scale `{other}`"))),
        }
    }
}

/// Writes the matrix as CSV: a header of server ids, then one row per client
/// with values in milliseconds to three decimals. Absent cells are empty.
pub fn emit_heatmap_csv<W: Write>(matrix: &LatencyMatrix, out: W) -> Result<()> {
    let io_err = |e: csv::Error| Error::io("<heatmap csv>", io::Error::other(e));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);

    let header = std::iter::once("client_id").chain(matrix.servers().iter().map(String::as_str));
    w.write_record(header).map_err(io_err)?;
    for (client, row) in matrix.clients().iter().zip(matrix.values_ms()) {
        let cells = row.iter().map(|v| v.map(|v| format!("{v:.3}")).unwrap_or_default());
        w.write_record(std::iter::once(client.clone()).chain(cells))
            .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io("<heatmap csv>", e))
}

/// `(clients, servers, values_ms)` as read back from a heat-map CSV.
pub type HeatmapTable = (Vec<String>, Vec<String>, Vec<Vec<Option<f64>>>);

pub fn read_heatmap_csv<R: Read>(input: R) -> Result<HeatmapTable> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: "<heatmap csv>".into(),
        line,
        message,
    };
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows = r.records();
    let header = rows
        .next()
        .ok_or_else(|| parse_err(1, "missing header".into()))?
        .map_err(|e| parse_err(1, e.to_string()))?;
    let servers: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();

    let mut clients = Vec::new();
    let mut values = Vec::new();
    for (idx, row) in rows.enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        let mut fields = row.iter();
        clients.push(fields.next().unwrap_or_default().to_owned());
        let cells = fields
            .map(|f| {
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse::<f64>().map(Some).map_err(|e| parse_err(line, e.to_string()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        values.push(cells);
    }
    Ok((clients, servers, values))
}

/// Position in `[0, 1]` of `value` between `min` and `max` on the given scale.
pub fn scale_position(value: f64, min: f64, max: f64, scale: ColorScale) -> f64 {
    let (v, lo, hi) = match scale {
        ColorScale::Linear => (value, min, max),
        ColorScale::Log => (value.log10(), min.log10(), max.log10()),
    };
    if hi <= lo {
        return 0.0;
    }
    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// RGB interpolation between [`LOW_COLOR`] and [`HIGH_COLOR`].
pub fn palette_color(t: f64) -> [u8; 3] {
    let mut rgb = [0u8; 3];
    for (k, c) in rgb.iter_mut().enumerate() {
        let lo = f64::from(LOW_COLOR[k]);
        let hi = f64::from(HIGH_COLOR[k]);
        *c = (lo + (hi - lo) * t).round() as u8;
    }
    rgb
}

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders the matrix as an SVG document.
///
/// One `rect.cell` per present value, one `rect.absent` (hatched) per absent
/// cell, and row/column labels. Fails if no value is present, or on a log
/// scale with a non-positive value.
pub fn render_heatmap_svg(matrix: &LatencyMatrix, scale: ColorScale) -> Result<String> {
    let (min, max) = matrix
        .present_values()
        .fold(None, |acc: Option<(f64, f64)>, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
        .ok_or_else(|| Error::Degenerate("heat map has no present values".into()))?;
    if scale == ColorScale::Log && min <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "log scale needs positive latencies, found {min}"
        )));
    }

    let label_chars = |ids: &[String]| ids.iter().map(|s| s.chars().count()).max().unwrap_or(0);
    let left = PAD + CHAR_W * label_chars(matrix.clients());
    let top = PAD + CHAR_W * label_chars(matrix.servers());
    let width = left + CELL_W * matrix.servers().len() + PAD;
    let height = top + CELL_H * matrix.clients().len() + PAD;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        "<!-- latency heat map (ms); scale={}; low={} high={} absent=hatched {}; min={:.3} max={:.3}; reference={} -->",
        scale.name(),
        hex(LOW_COLOR),
        hex(HIGH_COLOR),
        ABSENT_COLOR,
        min,
        max,
        // "--" may not appear inside an XML comment
        escape(&matrix.reference().name).replace("--", "- -"),
    );
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="monospace" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r##"<defs><pattern id="absent-hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><rect width="6" height="6" fill="{ABSENT_COLOR}"/><line x1="0" y1="0" x2="0" y2="6" stroke="#969696" stroke-width="2"/></pattern></defs>"##
    );

    for (j, server) in matrix.servers().iter().enumerate() {
        let x = left + CELL_W * j + CELL_W / 2;
        let y = top - 4;
        let _ = writeln!(
            svg,
            r#"<text class="col-label" x="{x}" y="{y}" transform="rotate(-90 {x} {y})">{}</text>"#,
            escape(server)
        );
    }

    for (i, (client, row)) in matrix.clients().iter().zip(matrix.values_ms()).enumerate() {
        let y = top + CELL_H * i;
        let _ = writeln!(
            svg,
            r#"<text class="row-label" x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 4,
            y + CELL_H / 2 + 4,
            escape(client)
        );
        for (j, value) in row.iter().enumerate() {
            let x = left + CELL_W * j;
            let title = escape(&format!("{client} -> {}", matrix.servers()[j]));
            match value {
                Some(v) => {
                    let color = hex(palette_color(scale_position(*v, min, max, scale)));
                    let _ = writeln!(
                        svg,
                        r#"<rect class="cell" x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{color}"><title>{title}: {v:.3} ms</title></rect>"#
                    );
                }
                None => {
                    let _ = writeln!(
                        svg,
                        r#"<rect class="absent" x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="url(#absent-hatch)"><title>{title}: no data</title></rect>"#
                    );
                }
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_heatmap_svg<W: Write>(matrix: &LatencyMatrix, mut out: W, scale: ColorScale) -> Result<()> {
    let svg = render_heatmap_svg(matrix, scale)?;
    out.write_all(svg.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("<heatmap svg>", e))
}
