use std::sync::Arc;

use num_complex::Complex64;

use crate::dtn::{Mat2, UpgoingWave};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_b, assemble_load, bary_point, build_mesh, default_n_max, element_gradients,
    FieldSolution, Mesh,
};
use crate::model::{ElasticParams, SurfaceFn};
use crate::quadrature::triangle_deg5;

type C64 = Complex64;
pub type Hessian = [[[C64; 2]; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);

/// A twice differentiable vector field with closed-form derivatives.
/// `grad[c][k] = ∂_k u_c`, `hess[c][k][l] = ∂_k∂_l u_c`.
pub trait AnalyticField: Sync {
    fn value(&self, x: [f64; 2]) -> [C64; 2];
    fn grad(&self, x: [f64; 2]) -> Mat2;
    fn hessian(&self, x: [f64; 2]) -> Hessian;
}

impl AnalyticField for UpgoingWave {
    fn value(&self, x: [f64; 2]) -> [C64; 2] {
        UpgoingWave::value(self, x)
    }
    fn grad(&self, x: [f64; 2]) -> Mat2 {
        UpgoingWave::grad(self, x)
    }
    fn hessian(&self, x: [f64; 2]) -> Hessian {
        UpgoingWave::hessian(self, x)
    }
}

/// `0` below `a`, `1` above `b`, the C³ septic `35t⁴ − 84t⁵ + 70t⁶ − 20t⁷` between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothStep {
    pub a: f64,
    pub b: f64,
}

impl SmoothStep {
    /// Value and first two derivatives.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        if x <= self.a {
            return [0.0, 0.0, 0.0];
        }
        if x >= self.b {
            return [1.0, 0.0, 0.0];
        }
        let w = self.b - self.a;
        let t = (x - self.a) / w;
        let t2 = t * t;
        let t3 = t2 * t;
        let v = t3 * t * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t3);
        let d = 140.0 * t3 * (1.0 - t).powi(3) / w;
        let dd = 420.0 * t2 * (1.0 - t).powi(2) * (1.0 - 2.0 * t) / (w * w);
        [v, d, dd]
    }
}

/// `χ(x₂)·w(x)`: vanishes below `step.a` and is exactly upgoing above `step.b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffWave {
    pub wave: UpgoingWave,
    pub step: SmoothStep,
}

impl AnalyticField for CutoffWave {
    fn value(&self, x: [f64; 2]) -> [C64; 2] {
        let [c, _, _] = self.step.eval(x[1]);
        let w = self.wave.value(x);
        [w[0] * c, w[1] * c]
    }

    fn grad(&self, x: [f64; 2]) -> Mat2 {
        let [c, dc, _] = self.step.eval(x[1]);
        let w = self.wave.value(x);
        let g = self.wave.grad(x);
        let mut out = [[ZERO; 2]; 2];
        for j in 0..2 {
            out[j][0] = g[j][0] * c;
            out[j][1] = g[j][1] * c + w[j] * dc;
        }
        out
    }

    fn hessian(&self, x: [f64; 2]) -> Hessian {
        let [c, dc, ddc] = self.step.eval(x[1]);
        let w = self.wave.value(x);
        let g = self.wave.grad(x);
        let hw = self.wave.hessian(x);
        let mut out = [[[ZERO; 2]; 2]; 2];
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut v = hw[j][k][l] * c;
                    if k == 1 {
                        v += g[j][l] * dc;
                    }
                    if l == 1 {
                        v += g[j][k] * dc;
                    }
                    if k == 1 && l == 1 {
                        v += w[j] * ddc;
                    }
                    out[j][k][l] = v;
                }
            }
        }
        out
    }
}

/// `Δ*u + ω²u = μΔu + (λ+μ)∇(∇·u) + ω²u` from the Hessian.
pub fn navier_residual(field: &dyn AnalyticField, p: &ElasticParams, x: [f64; 2]) -> [C64; 2] {
    let u = field.value(x);
    let hs = field.hessian(x);
    let w2 = p.omega * p.omega;
    std::array::from_fn(|c| {
        let lap = hs[c][0][0] + hs[c][1][1];
        let graddiv = hs[0][c][0] + hs[1][c][1];
        lap * p.mu + graddiv * (p.lambda + p.mu) + u[c] * w2
    })
}

/// The source `g` for which `field` solves the Navier equation. The field
/// must be periodic in x₁ over `period`; this is checked on a column of
/// sample heights in `[lo, hi]`.
pub fn manufactured_source<'a>(
    field: &'a dyn AnalyticField,
    p: &ElasticParams,
    period: f64,
    lo: f64,
    hi: f64,
) -> Result<impl Fn([f64; 2]) -> [C64; 2] + Sync + 'a> {
    for i in 0..=16 {
        let x2 = lo + (hi - lo) * i as f64 / 16.0;
        for x1 in [0.0, 0.37 * period] {
            let (a, b) = (field.value([x1, x2]), field.value([x1 + period, x2]));
            let scale = 1.0 + a[0].norm() + a[1].norm();
            if (a[0] - b[0]).norm() + (a[1] - b[1]).norm() > 1e-10 * scale {
                return Err(Error::Mms(format!(
                    "field is not {period}-periodic at x2 = {x2}"
                )));
            }
        }
    }
    let p = *p;
    Ok(move |x: [f64; 2]| navier_residual(field, &p, x))
}

/// Default exact field: a pure upgoing p-mode with `ξ₁ = 2π/Λ`, cut off by a
/// smooth step rising over `[a, b]`.
pub fn default_exact_field(
    p: &ElasticParams,
    period: f64,
    h: f64,
    a: f64,
    b: f64,
) -> Result<CutoffWave> {
    let xi = 2.0 * std::f64::consts::PI / period;
    let gp = crate::dtn::gamma(xi, p.k_p);
    let wave = UpgoingWave::new(xi, [C64::new(xi, 0.0), gp], h, p)?;
    Ok(CutoffWave {
        wave,
        step: SmoothStep { a, b },
    })
}

/// `(‖u − u_h‖_{H¹}, ‖u − u_h‖_{L²})` by the degree-5 rule.
pub fn field_errors(sol: &FieldSolution, exact: &dyn AnalyticField) -> (f64, f64) {
    let mesh = &sol.mesh;
    let (mut l2, mut semi) = (0.0, 0.0);
    for t in 0..mesh.triangles.len() {
        let v = mesh.vertices(t);
        let (_, area) = element_gradients(&v);
        let gh = sol.grad_on(t);
        for (l, w) in triangle_deg5() {
            let x = bary_point(&v, &l);
            let (u, g) = (exact.value(x), exact.grad(x));
            let uh = sol.value_on(t, &l);
            for c in 0..2 {
                l2 += w * area * (u[c] - uh[c]).norm_sqr();
                for k in 0..2 {
                    semi += w * area * (g[c][k] - gh[c][k]).norm_sqr();
                }
            }
        }
    }
    ((l2 + semi).sqrt(), l2.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsRow {
    pub meshsize: f64,
    pub nx: usize,
    pub ny: usize,
    pub h1_error: f64,
    pub l2_error: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsTable {
    pub rows: Vec<MmsRow>,
    pub h1_slope: f64,
    pub l2_slope: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Solves the manufactured problem on `levels` dyadic refinements of an
/// `nx0 × ny0` mesh and fits convergence slopes against the mesh size.
pub fn mms_convergence(
    p: &ElasticParams,
    surface: &SurfaceFn,
    h: f64,
    exact: &CutoffWave,
    levels: usize,
    nx0: usize,
    ny0: usize,
) -> Result<MmsTable> {
    if levels < 3 {
        return Err(Error::Mms(format!("need at least 3 levels, got {levels}")));
    }
    if !(exact.step.a > surface.sup() && exact.step.b < h) {
        return Err(Error::Mms(
            "cutoff window must lie between the surface and h".into(),
        ));
    }
    let g = manufactured_source(exact, p, surface.period, surface.f_min, h)?;
    let mut rows = Vec::with_capacity(levels);
    for lev in 0..levels {
        let (nx, ny) = (nx0 << lev, ny0 << lev);
        let mesh: Arc<Mesh> = Arc::new(build_mesh(surface, h, nx, ny)?);
        let sys = assemble_b(&mesh, p, default_n_max(p, surface.period, nx))?;
        let sol = crate::fem::solve(&sys, &assemble_load(&mesh, &g))?;
        let (h1_error, l2_error) = field_errors(&sol, exact);
        rows.push(MmsRow {
            meshsize: mesh.meshsize(),
            nx,
            ny,
            h1_error,
            l2_error,
            residual: sol.residual,
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.meshsize).collect();
    let h1: Vec<f64> = rows.iter().map(|r| r.h1_error).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
    Ok(MmsTable {
        h1_slope: loglog_slope(&hs, &h1),
        l2_slope: loglog_slope(&hs, &l2),
        rows,
    })
}
