//! Report emitters: CSV tables, a plain-text table printer and SVG angle-bound curves.

use std::f64::consts::PI;
use std::fmt::Write;

use crate::container::fmt_real;
use crate::geometry::AngleReport;

/// Left-aligned text table with a rule under the header.
pub fn text_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}", w = *w))
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(headers.to_vec());
    out.push('\n');
    out.push_str(
        &widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("  "),
    );
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

/// Rows are models, columns noise levels.
pub fn noise_table_csv(names: &[String], levels: &[u8], acc: &[Vec<f64>]) -> String {
    let mut out = String::from("model");
    for l in levels {
        let _ = write!(out, ",level{l}");
    }
    out.push('\n');
    for (name, row) in names.iter().zip(acc) {
        out.push_str(name);
        for a in row {
            let _ = write!(out, ",{}", fmt_real(*a));
        }
        out.push('\n');
    }
    out
}

/// Index of the most accurate model at each level (first on ties).
pub fn best_per_level(acc: &[Vec<f64>]) -> Vec<usize> {
    let levels = acc.first().map_or(0, Vec::len);
    (0..levels)
        .map(|j| (0..acc.len()).fold(0, |best, i| if acc[i][j] > acc[best][j] { i } else { best }))
        .collect()
}

pub fn best_per_level_csv(names: &[String], levels: &[u8], acc: &[Vec<f64>]) -> String {
    let mut out = String::from("level,best_model,accuracy\n");
    for (j, &i) in best_per_level(acc).iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", levels[j], names[i], fmt_real(acc[i][j]));
    }
    out
}

pub fn angle_csv(rep: &AngleReport) -> String {
    let mut out = String::from("pair,cell_a,cell_b,neuron,angle,bound\n");
    for p in &rep.pairs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.pair_id,
            p.cell_a,
            p.cell_b,
            p.neuron,
            fmt_real(p.angle),
            fmt_real(rep.bound)
        );
    }
    out
}

/// `π − arccos(1/√(1+x²))`
pub fn curve_first(x: f64) -> f64 {
    PI - (1.0 / (1.0 + x * x).sqrt()).acos()
}

/// `π − arccos((4−x²)/(4+x²))`
pub fn curve_second(x: f64) -> f64 {
    PI - ((4.0 - x * x) / (4.0 + x * x)).clamp(-1.0, 1.0).acos()
}

/// Samples of both curves on `[0, x_max]`.
pub fn curve_points(x_max: f64, steps: usize) -> Vec<(f64, f64, f64)> {
    (0..=steps)
        .map(|i| {
            let x = x_max * i as f64 / steps as f64;
            (x, curve_first(x), curve_second(x))
        })
        .collect()
}

pub fn curves_csv(x_max: f64, steps: usize) -> String {
    let mut out = String::from("x,first,second\n");
    for (x, a, b) in curve_points(x_max, steps) {
        let _ = writeln!(out, "{},{},{}", fmt_real(x), fmt_real(a), fmt_real(b));
    }
    out
}

/// Both curves as polylines plus measured minimum angles as points `(x, angle)`.
pub fn angle_svg(x_max: f64, measured: &[(f64, f64)]) -> String {
    let (w, h, pad) = (640.0, 400.0, 48.0);
    let sx = |x: f64| pad + (w - 2.0 * pad) * x / x_max;
    let sy = |y: f64| h - pad - (h - 2.0 * pad) * y / PI;
    let pts = curve_points(x_max, 200);
    let poly = |f: &dyn Fn(&(f64, f64, f64)) -> f64| -> String {
        pts.iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(f(p))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{pad}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{y0}" stroke="black"/>"#,
        y0 = h - pad,
        x1 = w - pad
    );
    for (label, y) in [("0", 0.0), ("π/2", PI / 2.0), ("π", PI)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{label}</text>"#,
            pad - 6.0,
            sy(y) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">x = {x_max}</text>"#,
        sx(x_max),
        h - pad + 18.0
    );
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#1f77b4" stroke-width="2" points="{}"/>"##,
        poly(&|p| p.1)
    );
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#d62728" stroke-width="2" points="{}"/>"##,
        poly(&|p| p.2)
    );
    for &(x, y) in measured {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#,
            sx(x.min(x_max)),
            sy(y)
        );
    }
    s.push_str("</svg>\n");
    s
}
