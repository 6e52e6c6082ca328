//! Trajectory CSV files and SVG line charts.
//!
//! CSV layout: header `t,s,i,r` optionally followed by `i_K_L,r_K_L` column
//! pairs, one per degree class; one row per grid time; numbers printed with
//! nine significant digits.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::degree_model::DegreeClass;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

/// Formats like C's `%.9g`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<T: Scalar, W: Write>(traj: &Trajectory<T>, mut w: W, per_class: bool) -> Result<()> {
    let per_class = per_class && traj.has_classes();
    let mut header = String::from("t,s,i,r");
    if per_class {
        for c in traj.classes() {
            write!(header, ",i_{k}_{l},r_{k}_{l}", k = c.k, l = c.l).unwrap();
        }
    }
    writeln!(w, "{header}")?;
    let mut line = String::new();
    for j in 0..traj.len() {
        line.clear();
        let cols = [traj.times()[j], traj.s()[j], traj.i()[j], traj.r()[j]];
        for (n, v) in cols.iter().enumerate() {
            if n > 0 {
                line.push(',');
            }
            line.push_str(&format_sig9(v.as_f64()));
        }
        if per_class {
            for (&ci, &cr) in traj.class_infected(j).iter().zip(traj.class_recovered(j)) {
                line.push(',');
                line.push_str(&format_sig9(ci.as_f64()));
                line.push(',');
                line.push_str(&format_sig9(cr.as_f64()));
            }
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn emit_csv<T: Scalar>(traj: &Trajectory<T>, path: impl AsRef<Path>, per_class: bool) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv(traj, &mut w, per_class)?;
    w.flush()?;
    Ok(())
}

fn parse_class_header(name: &str, prefix: char) -> Option<DegreeClass> {
    let rest = name.strip_prefix(prefix)?.strip_prefix('_')?;
    let (k, l) = rest.split_once('_')?;
    Some(DegreeClass::new(k.parse().ok()?, l.parse().ok()?))
}

/// Parses the CSV layout written by [`write_csv`].
pub fn read_csv<R: BufRead>(r: R) -> Result<Trajectory<f64>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or(Error::Csv { line: 1, msg: "empty file".into() })??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() < 4 || cols[..4] != ["t", "s", "i", "r"] {
        return Err(Error::Csv { line: 1, msg: format!("expected header starting with t,s,i,r, got {header:?}") });
    }
    let extra = &cols[4..];
    if !extra.len().is_multiple_of(2) {
        return Err(Error::Csv { line: 1, msg: "per-class columns must come in i/r pairs".into() });
    }
    let mut classes = Vec::with_capacity(extra.len() / 2);
    for pair in extra.chunks(2) {
        match (parse_class_header(pair[0], 'i'), parse_class_header(pair[1], 'r')) {
            (Some(a), Some(b)) if a == b => classes.push(a),
            _ => return Err(Error::Csv { line: 1, msg: format!("bad class columns {pair:?}") }),
        }
    }

    let (mut t, mut s, mut i, mut rr) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut class_i, mut class_r) = (Vec::new(), Vec::new());
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .trim()
            .split(',')
            .map(|v| v.parse::<f64>().map_err(|e| Error::Csv { line: lineno, msg: format!("{v:?}: {e}") }))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != cols.len() {
            return Err(Error::Csv { line: lineno, msg: format!("expected {} fields, got {}", cols.len(), values.len()) });
        }
        t.push(values[0]);
        s.push(values[1]);
        i.push(values[2]);
        rr.push(values[3]);
        for pair in values[4..].chunks(2) {
            class_i.push(pair[0]);
            class_r.push(pair[1]);
        }
    }
    Trajectory::from_parts(classes, t, class_i, class_r, s, i, rr)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Trajectory<f64>> {
    read_csv(BufReader::new(File::open(path)?))
}

/// One labelled polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    /// Aggregate infected fraction of a trajectory.
    pub fn infected<T: Scalar>(label: impl Into<String>, traj: &Trajectory<T>) -> Self {
        Self {
            label: label.into(),
            times: traj.times().iter().map(|t| t.as_f64()).collect(),
            values: traj.i().iter().map(|v| v.as_f64()).collect(),
        }
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders a standalone SVG line chart: time on x, fraction on y, one
/// polyline per curve and a legend.
pub fn render_svg(curves: &[Curve], title: &str) -> String {
    let (width, height) = (720.0, 460.0);
    let (left, right, top, bottom) = (70.0, 170.0, 40.0, 60.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let all_t = curves.iter().flat_map(|c| c.times.iter().copied());
    let (t_lo, t_hi) = all_t.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(t), b.max(t)));
    let (t_lo, t_hi) = if t_lo.is_finite() && t_hi > t_lo { (t_lo, t_hi) } else { (0.0, 1.0) };
    let y_max = curves.iter().flat_map(|c| c.values.iter().copied()).fold(0.0f64, f64::max);
    let y_hi = if y_max > 0.0 { (y_max * 1.1).min(1.0).max(y_max) } else { 1.0 };

    let x = |t: f64| left + (t - t_lo) / (t_hi - t_lo) * plot_w;
    let y = |v: f64| top + plot_h - v / y_hi * plot_h;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#).unwrap();
    writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, left + plot_w / 2.0, escape(title)).unwrap();
    writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for tick in 0..=5 {
        let f = tick as f64 / 5.0;
        let tv = t_lo + f * (t_hi - t_lo);
        let yv = f * y_hi;
        let (px, py) = (x(tv), y(yv));
        writeln!(svg, r##"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="#ccc"/>"##, top, top + plot_h).unwrap();
        writeln!(svg, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, top + plot_h + 18.0, format_sig9((tv * 1000.0).round() / 1000.0)).unwrap();
        writeln!(svg, r##"<line x1="{left}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#ccc"/>"##, left + plot_w).unwrap();
        writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, left - 6.0, py + 4.0, format_sig9((yv * 1000.0).round() / 1000.0)).unwrap();
    }
    writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">time</text>"#, left + plot_w / 2.0, height - 16.0).unwrap();
    writeln!(
        svg,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">fraction infected</text>"#,
        top + plot_h / 2.0
    )
    .unwrap();

    for (n, c) in curves.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let points: Vec<String> = c
            .times
            .iter()
            .zip(&c.values)
            .map(|(&t, &v)| format!("{:.2},{:.2}", x(t), y(v)))
            .collect();
        writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#, points.join(" ")).unwrap();
        let ly = top + 16.0 + 20.0 * n as f64;
        let lx = left + plot_w + 14.0;
        writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 24.0).unwrap();
        writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&c.label)).unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn emit_svg(curves: &[Curve], title: &str, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_svg(curves, title))?;
    Ok(())
}
