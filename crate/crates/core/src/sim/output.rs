use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use super::sweep::{AnalysisPoint, BerCurve};
use crate::{Error, Result};

/// One CSV record. BER, bound, capacity and complexity runs share the schema;
/// columns that do not apply are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub series: String,
    pub snr_db: f64,
    /// BER, bound value, capacity, or mean units per group.
    pub value: f64,
    pub stderr: f64,
    pub errors: u64,
    pub bits: u64,
    pub frames: u64,
    pub flags: String,
    pub tap_checks: u64,
    pub symbol_metrics: u64,
    pub codeword_metrics: u64,
    pub equalizer_solves: u64,
    pub units: u64,
    pub groups: u64,
    pub max_group_units: u64,
}

/// Metadata carried by the first line of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvHeader {
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
}

impl CsvHeader {
    fn line(&self) -> String {
        format!(
            "# gsm-afdm kind={} config_hash={} seed={}",
            self.kind, self.config_hash, self.seed
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let body = line
            .trim()
            .strip_prefix("# gsm-afdm")
            .ok_or_else(|| Error::Input(format!("missing header line, got {line:?}")))?;
        let (mut kind, mut hash, mut seed) = (None, None, None);
        for tok in body.split_whitespace() {
            match tok.split_once('=') {
                Some(("kind", v)) => kind = Some(v.to_string()),
                Some(("config_hash", v)) => hash = Some(v.to_string()),
                Some(("seed", v)) => seed = v.parse().ok(),
                _ => return Err(Error::Input(format!("bad header token {tok:?}"))),
            }
        }
        match (kind, hash, seed) {
            (Some(kind), Some(config_hash), Some(seed)) => Ok(Self {
                kind,
                config_hash,
                seed,
            }),
            _ => Err(Error::Input("incomplete header line".into())),
        }
    }
}

/// Rows for simulated curves; `value` is the BER for `kind = "ber"` and
/// the mean units per group otherwise.
pub fn ber_rows(curves: &[BerCurve], complexity: bool) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for c in curves {
        for p in &c.points {
            let o = &p.ops;
            rows.push(CsvRow {
                series: c.detector.clone(),
                snr_db: p.snr_db,
                value: if complexity { o.mean_group_units() } else { p.ber },
                stderr: if complexity { 0.0 } else { p.stderr },
                errors: p.errors,
                bits: p.bits,
                frames: p.frames,
                flags: if p.low_confidence && !complexity {
                    "low_confidence".into()
                } else {
                    String::new()
                },
                tap_checks: o.tap_checks,
                symbol_metrics: o.symbol_metrics,
                codeword_metrics: o.codeword_metrics,
                equalizer_solves: o.equalizer_solves,
                units: o.units,
                groups: o.groups,
                max_group_units: o.max_group_units,
            });
        }
    }
    rows
}

pub fn analysis_rows(series: &str, points: &[AnalysisPoint]) -> Vec<CsvRow> {
    points
        .iter()
        .map(|p| CsvRow {
            series: series.to_string(),
            snr_db: p.snr_db,
            value: p.value,
            stderr: p.stderr,
            errors: 0,
            bits: 0,
            frames: 0,
            flags: p.flags.clone(),
            tap_checks: 0,
            symbol_metrics: 0,
            codeword_metrics: 0,
            equalizer_solves: 0,
            units: 0,
            groups: 0,
            max_group_units: 0,
        })
        .collect()
}

pub fn write_csv<W: Write>(mut w: W, header: &CsvHeader, rows: &[CsvRow]) -> Result<()> {
    writeln!(w, "{}", header.line())?;
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<(CsvHeader, Vec<CsvRow>)> {
    let mut reader = BufReader::new(r);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let header = CsvHeader::parse(&first)?;
    let rows = csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<std::result::Result<Vec<CsvRow>, _>>()?;
    Ok((header, rows))
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Line plot of `value` against `snr_db`, one polyline per series. With
/// `log_y`, non-positive values are drawn as open markers on the bottom axis.
pub fn svg_plot(rows: &[CsvRow], title: &str, y_label: &str, log_y: bool) -> String {
    let (w, h, ml, mr, mt, mb) = (720.0, 480.0, 70.0, 170.0, 40.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let xs: Vec<f64> = rows.iter().map(|r| r.snr_db).collect();
    let (mut x0, mut x1) = min_max(&xs).unwrap_or((0.0, 1.0));
    if x1 <= x0 {
        (x0, x1) = (x0 - 1.0, x1 + 1.0);
    }
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let ys: Vec<f64> = rows
        .iter()
        .filter(|r| !log_y || r.value > 0.0)
        .map(|r| ty(r.value))
        .filter(|v| v.is_finite())
        .collect();
    let (mut y0, mut y1) = min_max(&ys).unwrap_or((0.0, 1.0));
    if log_y {
        (y0, y1) = (y0.floor(), y1.ceil());
    }
    if y1 <= y0 {
        (y0, y1) = (y0 - 1.0, y1 + 1.0);
    }
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| mt + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, ml + pw / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    // x ticks at every distinct SNR
    let mut ticks = xs.clone();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for t in &ticks {
        let x = px(*t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{t}</text>"#,
            mt + ph,
            mt + ph + 5.0,
            mt + ph + 18.0
        );
    }
    let steps = if log_y { (y1 - y0) as usize } else { 5 };
    for i in 0..=steps {
        let v = y0 + (y1 - y0) * i as f64 / steps as f64;
        let y = py(v);
        let label = if log_y { format!("1e{}", v.round() as i64) } else { format!("{v:.3}") };
        let _ = writeln!(
            s,
            r##"<line x1="{ml}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{label}</text>"##,
            ml + pw,
            ml - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">SNR (dB)</text>"#,
        ml + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(y_label)
    );

    let mut series: Vec<&str> = Vec::new();
    for r in rows {
        if !series.contains(&r.series.as_str()) {
            series.push(&r.series);
        }
    }
    for (i, name) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<&CsvRow> = rows.iter().filter(|r| r.series == *name).collect();
        let line: Vec<String> = pts
            .iter()
            .filter(|r| !log_y || r.value > 0.0)
            .map(|r| format!("{:.2},{:.2}", px(r.snr_db), py(ty(r.value))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            line.join(" ")
        );
        for r in &pts {
            let (y, fill) = if log_y && r.value <= 0.0 {
                (mt + ph, "white")
            } else {
                (py(ty(r.value)), color)
            };
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{y:.2}" r="3" fill="{fill}" stroke="{color}" data-series="{}" data-snr="{}"><title>{} @ {} dB: {}</title></circle>"#,
                px(r.snr_db),
                escape(name),
                r.snr_db,
                escape(name),
                r.snr_db,
                r.value
            );
        }
        let ly = mt + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            ml + pw + 10.0,
            ml + pw + 30.0,
            ml + pw + 36.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn min_max(v: &[f64]) -> Option<(f64, f64)> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo.is_finite() && hi.is_finite()).then_some((lo, hi))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
