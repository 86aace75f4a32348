use std::sync::Arc;

use rayon::prelude::*;

use super::mms::loglog_slope;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_b, assemble_load, build_mesh, default_n_max, integrate_h1_sq, solve, Mesh,
};
use crate::model::{ElasticParams, Source, SurfaceFn};

/// Shapes of the frequency-explicit stability constants with the generic
/// constant set to one; `H = h + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundProfile {
    pub omega: f64,
    pub h: f64,
    pub m: f64,
    pub l: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

pub fn bound_profile(omega: f64, h: f64, m: f64, l: f64) -> Result<BoundProfile> {
    if !(omega > 0.0) {
        return Err(Error::Parameter(format!(
            "omega must be positive, got {omega}"
        )));
    }
    if !(h > m) {
        return Err(Error::Parameter(format!("h = {h} must exceed m = {m}")));
    }
    if !(l >= 0.0) {
        return Err(Error::Parameter(format!(
            "Lipschitz constant must be nonnegative, got {l}"
        )));
    }
    let hm = h + 1.0 - m;
    let c1 = (1.0 + l * l).sqrt() * (omega * (h - m) + 1.0);
    let c2 = (1.0 + l * l).powf(0.25) * hm.sqrt() * (1.0 + omega * hm);
    let c3 = hm * (1.0 + omega * hm).powi(2) / omega;
    let c4 = hm * omega;
    let c5 = (1.0 + 1.0 / omega).sqrt() * c3;
    let c6 = (1.0 / omega + 1.0) * c1 * c2 * c2;
    Ok(BoundProfile {
        omega,
        h,
        m,
        l,
        c1,
        c2,
        c3,
        c4,
        c5,
        c6,
    })
}

impl BoundProfile {
    /// `(h − m + 2)(c₄ + c₅ + c₆)`.
    pub fn stability_shape(&self) -> f64 {
        (self.h - self.m + 2.0) * (self.c4 + self.c5 + self.c6)
    }

    /// `(H − m + 1)²(c₄ + c₅ + c₆)²`.
    pub fn mean_square_shape(&self) -> f64 {
        let hm1 = self.h + 1.0 - self.m + 1.0;
        hm1 * hm1 * (self.c4 + self.c5 + self.c6).powi(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub omegas: Vec<f64>,
    pub ratios: Vec<f64>,
    pub fitted_slope: f64,
    pub profile_envelope: Vec<f64>,
    /// Least-squares slope over the first `i + 1` points; undefined for `i = 0`.
    pub slope_running: Vec<f64>,
}

impl SweepResult {
    pub fn within_envelope(&self) -> bool {
        self.ratios
            .iter()
            .zip(&self.profile_envelope)
            .all(|(r, e)| *r <= e * (1.0 + 1e-12))
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub lambda: f64,
    pub mu: f64,
    pub omegas: Vec<f64>,
    pub surface: SurfaceFn,
    pub h: f64,
    pub source: Source,
    /// Mesh nodes per shear wavelength at the largest frequency.
    pub nodes_per_wavelength: f64,
}

/// `ω ↦ ‖u‖_{H¹}/‖g‖_{H¹}` on one mesh resolved at the largest frequency.
/// The slope is fitted on the upper half of the frequency range and the
/// `Ĉω³` envelope is anchored at the smallest frequency.
pub fn omega_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.omegas.len() < 2 {
        return Err(Error::Sweep("need at least two frequencies".into()));
    }
    if cfg.omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Sweep("frequencies must be increasing".into()));
    }
    if cfg.source.is_zero() {
        return Err(Error::Sweep("source norm is zero".into()));
    }
    let w_max = *cfg.omegas.last().unwrap();
    let k_max = ElasticParams::new(cfg.lambda, cfg.mu, w_max)?.k_s;
    let per_len = cfg.nodes_per_wavelength * k_max / (2.0 * std::f64::consts::PI);
    let nx = ((per_len * cfg.surface.period).ceil() as usize).max(8);
    let ny = ((per_len * (cfg.h - cfg.surface.inf())).ceil() as usize).max(4);
    let mesh: Arc<Mesh> = Arc::new(build_mesh(&cfg.surface, cfg.h, nx, ny)?);
    let src = cfg.source;
    let g = move |x: [f64; 2]| src.eval(x);
    let g_h1 = integrate_h1_sq(&mesh, &|x| (src.eval(x), src.grad(x))).sqrt();
    if g_h1 == 0.0 {
        return Err(Error::Sweep("source norm is zero".into()));
    }
    let load = assemble_load(&mesh, &g);
    let ratios: Vec<f64> = cfg
        .omegas
        .par_iter()
        .map(|&w| {
            let p = ElasticParams::new(cfg.lambda, cfg.mu, w)?;
            let sys = assemble_b(&mesh, &p, default_n_max(&p, mesh.period, mesh.nx))?;
            Ok(solve(&sys, &load)?.norms.h1 / g_h1)
        })
        .collect::<Result<Vec<f64>>>()?;
    let half = cfg.omegas.len() / 2;
    let upper = if cfg.omegas.len() - half >= 2 {
        half
    } else {
        0
    };
    let fitted_slope = loglog_slope(&cfg.omegas[upper..], &ratios[upper..]);
    let anchor = ratios[0] / cfg.omegas[0].powi(3);
    let profile_envelope = cfg.omegas.iter().map(|w| anchor * w.powi(3)).collect();
    let slope_running = (0..cfg.omegas.len())
        .map(|i| {
            if i == 0 {
                f64::NAN
            } else {
                loglog_slope(&cfg.omegas[..=i], &ratios[..=i])
            }
        })
        .collect();
    Ok(SweepResult {
        omegas: cfg.omegas.clone(),
        ratios,
        fitted_slope,
        profile_envelope,
        slope_running,
    })
}

/// `n` frequencies from `lo` to `hi` in geometric progression.
pub fn geometric_omegas(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}
