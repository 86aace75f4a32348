//! Fourier-symbol Dirichlet-to-Neumann map on `Γ_h` for the periodized
//! elastic problem, and the upgoing-mode machinery around it.
//!
//! Horizontal wavenumbers are `ξ_n = 2πn/Λ`. Every vertical wavenumber uses
//! the branch `Im γ ≥ 0` (nonnegative real part on the propagating range) so
//! that `exp(iγ(x₂ - h))` stays bounded above `Γ_h`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ElasticParams;

pub type Mat2 = [[Complex64; 2]; 2];

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Horizontal wavenumber of mode `n` in a cell of width `period`.
pub fn xi_n(n: i64, period: f64) -> f64 {
    2.0 * PI * n as f64 / period
}

/// `√(k² - ξ²)` on the upper branch.
pub fn gamma(xi: f64, k: f64) -> Complex64 {
    let d = k * k - xi * xi;
    if d >= 0.0 {
        Complex64::new(d.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-d).sqrt())
    }
}

pub fn mat_vec(m: &Mat2, v: &[Complex64; 2]) -> [Complex64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Max absolute entry.
pub fn mat_norm(m: &Mat2) -> f64 {
    m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of the Hermitian part `(M + Mᴴ)/2`, ascending.
pub fn hermitian_part_eigs(m: &Mat2) -> [f64; 2] {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let b = 0.5 * (m[0][1] + m[1][0].conj());
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - rad, mean + rad]
}

/// `M(ξ)` together with the branch data used to build it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolMatrix {
    pub xi: f64,
    pub entries: Mat2,
    pub gamma_p: Complex64,
    pub gamma_s: Complex64,
    /// `ξ² + γₚγₛ`
    pub rho: Complex64,
}

fn branch(xi: f64, p: &ElasticParams) -> Result<(Complex64, Complex64, Complex64)> {
    let gp = gamma(xi, p.k_p);
    let gs = gamma(xi, p.k_s);
    let x2 = xi * xi;
    let rho = if xi.abs() > p.k_s {
        // both evanescent: rationalized to avoid cancellation between ξ² and γₚγₛ
        let (kp2, ks2) = (p.k_p * p.k_p, p.k_s * p.k_s);
        ((kp2 + ks2) * x2 - kp2 * ks2) / (x2 - gp * gs)
    } else {
        x2 + gp * gs
    };
    if rho.norm() < 1e-14 * p.k_s * p.k_s {
        return Err(Error::SymbolSingular { xi });
    }
    Ok((gp, gs, rho))
}

pub fn symbol_matrix(xi: f64, p: &ElasticParams) -> Result<SymbolMatrix> {
    let (gp, gs, rho) = branch(xi, p)?;
    let w2 = p.omega * p.omega;
    let f = I / rho;
    let off = xi * w2 - xi * p.mu * rho;
    let entries = [[f * w2 * gp, -f * off], [f * off, f * w2 * gs]];
    Ok(SymbolMatrix {
        xi,
        entries,
        gamma_p: gp,
        gamma_s: gs,
        rho,
    })
}

/// Complementary projections onto the compressional and shear parts of an
/// upgoing trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeProjections {
    pub xi: f64,
    pub mp: Mat2,
    pub ms: Mat2,
    pub gamma_p: Complex64,
    pub gamma_s: Complex64,
}

pub fn mode_projections(xi: f64, p: &ElasticParams) -> Result<ModeProjections> {
    let (gp, gs, rho) = branch(xi, p)?;
    let r = ONE / rho;
    let x = Complex64::new(xi, 0.0);
    let mp = [[r * x * x, r * gs * x], [r * gp * x, r * gp * gs]];
    let ms = [[r * gp * gs, -r * gs * x], [-r * gp * x, r * x * x]];
    Ok(ModeProjections {
        xi,
        mp,
        ms,
        gamma_p: gp,
        gamma_s: gs,
    })
}

/// Fourier coefficients `û_n` of a Λ-periodic vector trace on `Γ_h`,
/// normalized so that `u(x₁) = Σ_n û_n exp(iξ_n x₁)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceCoefficients {
    pub period: f64,
    pub modes: BTreeMap<i64, [Complex64; 2]>,
}

impl TraceCoefficients {
    pub fn new(period: f64) -> Self {
        Self {
            period,
            modes: BTreeMap::new(),
        }
    }

    pub fn single(period: f64, n: i64, amplitude: [Complex64; 2]) -> Self {
        let mut t = Self::new(period);
        t.modes.insert(n, amplitude);
        t
    }

    /// Piecewise-linear interpolant of `values` at `x_i = iΛ/N`, transformed
    /// exactly for `|n| ≤ n_max`: `û_n = sinc²(πn/N)·DFT_n/N`.
    pub fn from_nodal(values: &[[Complex64; 2]], period: f64, n_max: i64) -> Self {
        let nx = values.len();
        let mut t = Self::new(period);
        for n in -n_max..=n_max {
            let factor = hat_factor(n, nx) / nx as f64;
            let mut acc = [ZERO; 2];
            for (i, v) in values.iter().enumerate() {
                let e = Complex64::from_polar(
                    1.0,
                    -2.0 * PI * (n * i as i64).rem_euclid(nx as i64) as f64 / nx as f64,
                );
                acc[0] += v[0] * e;
                acc[1] += v[1] * e;
            }
            t.modes.insert(n, [acc[0] * factor, acc[1] * factor]);
        }
        t
    }

    /// `Λ·Σ|û_n|²`.
    pub fn l2_sq(&self) -> f64 {
        self.period
            * self
                .modes
                .values()
                .map(|a| a[0].norm_sqr() + a[1].norm_sqr())
                .sum::<f64>()
    }

    pub fn eval(&self, x1: f64) -> [Complex64; 2] {
        let mut u = [ZERO; 2];
        for (&n, a) in &self.modes {
            let e = Complex64::from_polar(1.0, xi_n(n, self.period) * x1);
            u[0] += a[0] * e;
            u[1] += a[1] * e;
        }
        u
    }

    pub fn is_zero(&self) -> bool {
        self.modes.values().all(|a| a[0] == ZERO && a[1] == ZERO)
    }
}

/// Fourier multiplier of the unit hat function on an `nx`-point grid.
pub fn hat_factor(n: i64, nx: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let t = PI * n as f64 / nx as f64;
    let s = t.sin() / t;
    s * s
}

/// `𝒯u` mode by mode: `M(ξ_n)·û_n` for `|n| ≤ n_max`, zero beyond.
pub fn apply_dtn(
    trace: &TraceCoefficients,
    p: &ElasticParams,
    n_max: i64,
) -> Result<TraceCoefficients> {
    let mut out = TraceCoefficients::new(trace.period);
    for (&n, a) in &trace.modes {
        if n.abs() > n_max {
            continue;
        }
        let m = symbol_matrix(xi_n(n, trace.period), p)?;
        out.modes.insert(n, mat_vec(&m.entries, a));
    }
    Ok(out)
}

/// Upgoing field above `Γ_h` generated by the trace.
pub fn upward_extend(
    trace: &TraceCoefficients,
    p: &ElasticParams,
    h: f64,
    x: [f64; 2],
) -> Result<[Complex64; 2]> {
    let mut u = [ZERO; 2];
    for (&n, a) in &trace.modes {
        let w = UpgoingWave::new(xi_n(n, trace.period), *a, h, p)?;
        let v = w.value(x);
        u[0] += v[0];
        u[1] += v[1];
    }
    Ok(u)
}

/// Fourier data `(P_n, S_n)` of the scalar potentials at height `h`.
pub type PotentialModes = BTreeMap<i64, Complex64>;

pub fn helmholtz_split(
    trace: &TraceCoefficients,
    p: &ElasticParams,
) -> Result<(PotentialModes, PotentialModes)> {
    let mut phi = BTreeMap::new();
    let mut psi = BTreeMap::new();
    for (&n, a) in &trace.modes {
        let xi = xi_n(n, trace.period);
        let (gp, gs, rho) = branch(xi, p)?;
        phi.insert(n, (xi * a[0] + gs * a[1]) / rho);
        psi.insert(n, (gp * a[0] - xi * a[1]) / rho);
    }
    Ok((phi, psi))
}

/// `Tu = μ·(∇u)n + (λ+μ)·n·div u`, with `grad_u[c][k] = ∂_k u_c`.
pub fn traction(
    grad_u: &Mat2,
    div_u: Complex64,
    normal: [f64; 2],
    p: &ElasticParams,
) -> [Complex64; 2] {
    let mut t = [ZERO; 2];
    for c in 0..2 {
        t[c] = p.mu * (grad_u[c][0] * normal[0] + grad_u[c][1] * normal[1])
            + (p.lambda + p.mu) * normal[c] * div_u;
    }
    t
}

/// Single upgoing mode `[e^{iγₚ(x₂-h)}Mₚ + e^{iγₛ(x₂-h)}Mₛ]·a·e^{iξx₁}`,
/// with closed-form derivatives. Solves the homogeneous Navier equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpgoingWave {
    pub xi: f64,
    pub h: f64,
    pub a_p: [Complex64; 2],
    pub a_s: [Complex64; 2],
    pub gamma_p: Complex64,
    pub gamma_s: Complex64,
}

impl UpgoingWave {
    pub fn new(xi: f64, a: [Complex64; 2], h: f64, p: &ElasticParams) -> Result<Self> {
        let pr = mode_projections(xi, p)?;
        Ok(Self {
            xi,
            h,
            a_p: mat_vec(&pr.mp, &a),
            a_s: mat_vec(&pr.ms, &a),
            gamma_p: pr.gamma_p,
            gamma_s: pr.gamma_s,
        })
    }

    fn parts(&self, x: [f64; 2]) -> [(Complex64, [Complex64; 2], [Complex64; 2]); 2] {
        let xi = Complex64::new(self.xi, 0.0);
        let phase = |g: Complex64| (I * (self.xi * x[0] + g * (x[1] - self.h))).exp();
        [
            (phase(self.gamma_p), [xi, self.gamma_p], self.a_p),
            (phase(self.gamma_s), [xi, self.gamma_s], self.a_s),
        ]
    }

    pub fn value(&self, x: [f64; 2]) -> [Complex64; 2] {
        let mut u = [ZERO; 2];
        for (e, _, a) in self.parts(x) {
            u[0] += e * a[0];
            u[1] += e * a[1];
        }
        u
    }

    /// `grad[c][k] = ∂_k u_c`.
    pub fn grad(&self, x: [f64; 2]) -> Mat2 {
        let mut g = [[ZERO; 2]; 2];
        for (e, kv, a) in self.parts(x) {
            for c in 0..2 {
                for k in 0..2 {
                    g[c][k] += I * kv[k] * e * a[c];
                }
            }
        }
        g
    }

    /// `hess[c][k][l] = ∂_k∂_l u_c`.
    pub fn hessian(&self, x: [f64; 2]) -> [[[Complex64; 2]; 2]; 2] {
        let mut hs = [[[ZERO; 2]; 2]; 2];
        for (e, kv, a) in self.parts(x) {
            for c in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        hs[c][k][l] -= kv[k] * kv[l] * e * a[c];
                    }
                }
            }
        }
        hs
    }
}

/// Numerical profile of the symbol bounds over a ξ grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolReport {
    /// `max ‖M(ξ)‖/(1+ξ²)`
    pub c_of_omega: f64,
    /// `-Re M(ξ)` positive definite at every grid point with `|ξ| > k_s`.
    pub neg_def_ok: bool,
    /// `max_{|ξ|≤k_s} ‖M(ξ)‖/ω`
    pub interior_ratio: f64,
    /// Largest eigenvalue of `Re M` seen on `|ξ| > k_s` (negative when ok).
    pub max_re_eig: f64,
}

pub fn symbol_bound_check(p: &ElasticParams, xi_grid: &[f64]) -> Result<SymbolReport> {
    let mut c_of_omega = 0.0f64;
    let mut interior_ratio = 0.0f64;
    let mut max_re_eig = f64::NEG_INFINITY;
    for &xi in xi_grid {
        let m = symbol_matrix(xi, p)?;
        let nrm = mat_norm(&m.entries);
        c_of_omega = c_of_omega.max(nrm / (1.0 + xi * xi));
        if xi.abs() <= p.k_s {
            interior_ratio = interior_ratio.max(nrm / p.omega);
        } else {
            max_re_eig = max_re_eig.max(hermitian_part_eigs(&m.entries)[1]);
        }
    }
    Ok(SymbolReport {
        c_of_omega,
        neg_def_ok: max_re_eig < 0.0,
        interior_ratio,
        max_re_eig,
    })
}

/// Uniform grid of `n` points on `[0, hi]`.
pub fn uniform_grid(hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
}
