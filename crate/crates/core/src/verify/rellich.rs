use num_complex::Complex64;

use super::profile::BoundProfile;
use crate::dtn::{apply_dtn, Mat2, TraceCoefficients};
use crate::error::{Error, Result};
use crate::fem::{bary_point, element_gradients, FieldSolution, VectorField};
use crate::model::ElasticParams;
use crate::quadrature::{gauss_legendre, triangle_deg5};

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RellichResult {
    pub lhs: f64,
    pub rhs: f64,
}

impl RellichResult {
    pub fn excess(&self) -> f64 {
        (self.lhs - self.rhs).max(0.0)
    }
}

/// `ℰ(u, ū) = μ(|∇u₁|² + |∇u₂|²) + (λ+μ)|div u|²`.
pub fn energy_density(g: &Mat2, p: &ElasticParams) -> f64 {
    let div = g[0][0] + g[1][1];
    p.mu * g
        .iter()
        .map(|r| r[0].norm_sqr() + r[1].norm_sqr())
        .sum::<f64>()
        + (p.lambda + p.mu) * div.norm_sqr()
}

/// Pointwise integrand of the boundary side: `2Re(𝒯u·∂₂ū) − ℰ(u,ū) + ω²|u|²`.
pub fn rellich_density(tu: &[C64; 2], u: &[C64; 2], g: &Mat2, p: &ElasticParams) -> f64 {
    let cross = tu[0] * g[0][1].conj() + tu[1] * g[1][1].conj();
    2.0 * cross.re - energy_density(g, p) + p.omega * p.omega * (u[0].norm_sqr() + u[1].norm_sqr())
}

/// Boundary side for a solved field: `𝒯u` from the mode transform of the top
/// trace, `∇u` from the top element layer, 3-point Gauss per top edge.
pub fn rellich_lhs(sol: &FieldSolution, p: &ElasticParams, n_max: i64) -> Result<f64> {
    let mesh = &sol.mesh;
    let trace = TraceCoefficients::from_nodal(&sol.top_trace(), mesh.period, n_max);
    let tu = apply_dtn(&trace, p, n_max)?;
    let (nodes, weights) = gauss_legendre(3);
    let nx = mesh.nx;
    let dx = mesh.period / nx as f64;
    let mut acc = 0.0;
    for i in 0..nx {
        // upper triangle of quad (i, ny-1) carries the top edge
        let t = 2 * ((mesh.ny - 1) * nx + i) + 1;
        let g = sol.grad_on(t);
        let (a, b) = (
            sol.values[mesh.top_nodes[i]],
            sol.values[mesh.top_nodes[(i + 1) % nx]],
        );
        for (s, w) in nodes.iter().zip(&weights) {
            let x1 = (i as f64 + s) * dx;
            let u = [a[0] * (1.0 - s) + b[0] * s, a[1] * (1.0 - s) + b[1] * s];
            acc += w * dx * rellich_density(&tu.eval(x1), &u, &g, p);
        }
    }
    Ok(acc)
}

/// `2k_s·Im∫ g·ū` by the degree-5 rule.
pub fn rellich_rhs(sol: &FieldSolution, g: &VectorField, p: &ElasticParams) -> f64 {
    let mesh = &sol.mesh;
    let mut acc = C64::new(0.0, 0.0);
    for t in 0..mesh.triangles.len() {
        let v = mesh.vertices(t);
        let (_, area) = element_gradients(&v);
        for (l, w) in triangle_deg5() {
            let gv = g(bary_point(&v, &l));
            if gv[0].norm() == 0.0 && gv[1].norm() == 0.0 {
                continue;
            }
            let u = sol.value_on(t, &l);
            acc += (gv[0] * u[0].conj() + gv[1] * u[1].conj()) * (w * area);
        }
    }
    2.0 * p.k_s * acc.im
}

pub fn rellich_residual(
    sol: &FieldSolution,
    g: &VectorField,
    p: &ElasticParams,
    n_max: i64,
) -> Result<RellichResult> {
    Ok(RellichResult {
        lhs: rellich_lhs(sol, p, n_max)?,
        rhs: rellich_rhs(sol, g, p),
    })
}

/// Discretization allowance for the inequality: `meshsize·‖u‖²_{H¹}`.
pub fn rellich_tolerance(sol: &FieldSolution) -> f64 {
    sol.mesh.meshsize() * sol.norms.h1 * sol.norms.h1
}

/// `‖u‖_{L²}/‖∂₂u‖_{L²}`; zero for the zero field.
pub fn poincare_check(field: &FieldSolution) -> Result<f64> {
    let n = &field.norms;
    if n.d2 == 0.0 {
        if n.l2 == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Internal(
            "vertical derivative vanishes for a nonzero surface-vanishing field".into(),
        ));
    }
    Ok(n.l2 / n.d2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceBoundResult {
    pub lhs: f64,
    pub rhs_shape: f64,
}

impl TraceBoundResult {
    pub fn ratio(&self) -> f64 {
        if self.rhs_shape > 0.0 {
            self.lhs / self.rhs_shape
        } else {
            0.0
        }
    }
}

/// `‖div u‖²_{L²(S)} + ‖curl u‖²_{L²(S)}` from the bottom element layer,
/// against `c₁·‖g‖_{L²}·‖∂₂u‖_{L²}`.
pub fn trace_bound_check(
    sol: &FieldSolution,
    g: &VectorField,
    profile: &BoundProfile,
) -> TraceBoundResult {
    let mesh = &sol.mesh;
    let mut lhs = 0.0;
    for i in 0..mesh.nx {
        // lower triangle of quad (i, 0) carries the surface edge
        let t = 2 * i;
        let v = mesh.vertices(t);
        let len = ((v[1][0] - v[0][0]).powi(2) + (v[1][1] - v[0][1]).powi(2)).sqrt();
        let gr = sol.grad_on(t);
        let div = gr[0][0] + gr[1][1];
        let curl = gr[1][0] - gr[0][1];
        lhs += len * (div.norm_sqr() + curl.norm_sqr());
    }
    let mut g2 = 0.0;
    for t in 0..mesh.triangles.len() {
        let v = mesh.vertices(t);
        let (_, area) = element_gradients(&v);
        for (l, w) in triangle_deg5() {
            let gv = g(bary_point(&v, &l));
            g2 += w * area * (gv[0].norm_sqr() + gv[1].norm_sqr());
        }
    }
    TraceBoundResult {
        lhs,
        rhs_shape: profile.c1 * g2.sqrt() * sol.norms.d2,
    }
}
