//! CSV and SVG artifacts.

use std::fmt::Write as _;
use std::path::Path;

use elastodtn::fem::{FieldSolution, Norms};
use elastodtn::montecarlo::EnsembleResult;
use elastodtn::verify::SweepResult;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
    pub tolerance: f64,
}

impl Check {
    /// `lhs ≤ rhs + tolerance`.
    pub fn le(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            ok: lhs <= rhs + tolerance,
            tolerance,
        }
    }

    /// Pass/fail flag with the measured value in `lhs`.
    pub fn flag(name: &str, value: f64, ok: bool) -> Self {
        Self {
            name: name.into(),
            lhs: value,
            rhs: 0.0,
            ok,
            tolerance: 0.0,
        }
    }
}

fn write_rows<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl IntoIterator<Item = [String; N]>,
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()
}

fn s(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_solution(dir: &Path, sol: &FieldSolution) -> std::io::Result<()> {
    write_rows(
        &dir.join("solution.csv"),
        ["x1", "x2", "re_u1", "im_u1", "re_u2", "im_u2"],
        sol.mesh.nodes.iter().zip(&sol.values).map(|(x, u)| {
            [
                s(x[0]),
                s(x[1]),
                s(u[0].re),
                s(u[0].im),
                s(u[1].re),
                s(u[1].im),
            ]
        }),
    )
}

pub fn write_norms(dir: &Path, rows: &[(f64, f64, Norms)]) -> std::io::Result<()> {
    write_rows(
        &dir.join("norms.csv"),
        ["omega", "h", "l2", "h1", "d2", "trace_l2_top"],
        rows.iter()
            .map(|(w, h, n)| [s(*w), s(*h), s(n.l2), s(n.h1), s(n.d2), s(n.trace_l2_top)]),
    )
}

pub fn write_sweep(dir: &Path, r: &SweepResult) -> std::io::Result<()> {
    write_rows(
        &dir.join("sweep.csv"),
        ["omega", "ratio", "envelope", "slope_running"],
        (0..r.omegas.len()).map(|i| {
            [
                s(r.omegas[i]),
                s(r.ratios[i]),
                s(r.profile_envelope[i]),
                s(r.slope_running[i]),
            ]
        }),
    )
}

pub fn write_ensemble(dir: &Path, r: &EnsembleResult) -> std::io::Result<()> {
    write_rows(
        &dir.join("ensemble.csv"),
        ["index", "u_h1_sq", "u_ref_h1_sq", "g_h1_sq", "min_detJ"],
        r.per_sample.iter().map(|x| {
            [
                x.index.to_string(),
                s(x.u_h1_sq),
                s(x.u_ref_h1_sq),
                s(x.g_h1_sq),
                s(x.min_det_j),
            ]
        }),
    )
}

pub fn write_mms(dir: &Path, t: &elastodtn::verify::MmsTable) -> std::io::Result<()> {
    write_rows(
        &dir.join("mms.csv"),
        ["nx", "ny", "meshsize", "h1_error", "l2_error", "residual"],
        t.rows.iter().map(|r| {
            [
                r.nx.to_string(),
                r.ny.to_string(),
                s(r.meshsize),
                s(r.h1_error),
                s(r.l2_error),
                s(r.residual),
            ]
        }),
    )
}

pub fn write_checks(dir: &Path, checks: &[Check]) -> std::io::Result<()> {
    write_rows(
        &dir.join("checks.csv"),
        ["check_name", "lhs", "rhs", "ok", "tolerance"],
        checks.iter().map(|c| {
            [
                c.name.clone(),
                s(c.lhs),
                s(c.rhs),
                c.ok.to_string(),
                s(c.tolerance),
            ]
        }),
    )
}

/// Log-log plot of the sweep ratios against the `ω³` envelope.
pub fn sweep_svg(r: &SweepResult) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;
    let xs: Vec<f64> = r.omegas.iter().map(|w| w.log10()).collect();
    let all: Vec<f64> = r
        .ratios
        .iter()
        .chain(&r.profile_envelope)
        .map(|v| v.log10())
        .collect();
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let y0 = all.iter().copied().fold(f64::INFINITY, f64::min);
    let y1 = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = |a: f64, b: f64| if b > a { b - a } else { 1.0 };
    let px = |x: f64| PAD + (x - x0) / span(x0, x1) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / span(y0, y1) * (H - 2.0 * PAD);
    let path = |ys: &[f64]| {
        xs.iter()
            .zip(ys)
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(y.log10())))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut o = String::new();
    let _ = writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(o, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        o,
        r#"<path d="M{PAD},{PAD} V{b} H{r}" fill="none" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(
        o,
        r#"<polyline points="{}" fill="none" stroke="gray" stroke-dasharray="4 3"/>"#,
        path(&r.profile_envelope)
    );
    let _ = writeln!(
        o,
        r#"<polyline points="{}" fill="none" stroke="blue"/>"#,
        path(&r.ratios)
    );
    for (x, y) in xs.iter().zip(&r.ratios) {
        let _ = writeln!(
            o,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="blue"/>"#,
            px(*x),
            py(y.log10())
        );
    }
    for w in &r.omegas {
        let _ = writeln!(
            o,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{:.3}</text>"#,
            px(w.log10()),
            H - PAD + 14.0,
            w
        );
    }
    let _ = writeln!(
        o,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">omega (slope {:.3})</text>"#,
        W / 2.0,
        H - 8.0,
        r.fitted_slope
    );
    let _ = writeln!(
        o,
        r#"<text x="12" y="{:.2}" font-size="12" transform="rotate(-90 12 {:.2})" text-anchor="middle">|u|/|g| in H1</text>"#,
        H / 2.0,
        H / 2.0
    );
    o.push_str("</svg>\n");
    o
}
