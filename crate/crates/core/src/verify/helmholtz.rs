use num_complex::Complex64 as C64;

use crate::dtn::{gamma, helmholtz_split, mat_vec, mode_projections, xi_n, TraceCoefficients};
use crate::error::Result;
use crate::fem::FieldSolution;
use crate::model::ElasticParams;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HelmholtzResidual {
    pub p_residual: f64,
    pub s_residual: f64,
}

/// Height above `Γ_h` at which the split is compared.
pub const CHECK_OFFSET: f64 = 0.5;

/// Compares the `Mₚ`/`Mₛ` parts of the upgoing extension at `h + offset`
/// with `(1/i)∇φ` and `(1/i)curl⃗ψ` rebuilt from the propagated potential
/// modes. Residuals are RMS mismatches over `samples` points relative to the
/// RMS of the full extension.
pub fn helmholtz_trace_check(
    trace: &TraceCoefficients,
    p: &ElasticParams,
    offset: f64,
    samples: usize,
) -> Result<HelmholtzResidual> {
    let (phi, psi) = helmholtz_split(trace, p)?;
    let period = trace.period;
    let z = C64::new(0.0, 0.0);
    let (mut ep, mut es, mut total) = (0.0, 0.0, 0.0);
    for j in 0..samples.max(1) {
        let x1 = j as f64 * period / samples.max(1) as f64;
        let mut ext_p = [z; 2];
        let mut ext_s = [z; 2];
        let mut rec_p = [z; 2];
        let mut rec_s = [z; 2];
        for (&n, a) in &trace.modes {
            let xi = xi_n(n, period);
            let (gp, gs) = (gamma(xi, p.k_p), gamma(xi, p.k_s));
            let pr = mode_projections(xi, p)?;
            let e = C64::from_polar(1.0, xi * x1);
            let up = C64::new(0.0, 1.0) * gp * offset;
            let us = C64::new(0.0, 1.0) * gs * offset;
            let (wp, ws) = (e * up.exp(), e * us.exp());
            let ap = mat_vec(&pr.mp, a);
            let as_ = mat_vec(&pr.ms, a);
            // (1/i)∇(P e^{iξx₁+iγₚt}) = (ξ, γₚ)·P·e, (1/i)(∂₂, −∂₁)(S e^{iξx₁+iγₛt}) = (γₛ, −ξ)·S·e
            let (pn, sn) = (phi[&n], psi[&n]);
            for c in 0..2 {
                ext_p[c] += ap[c] * wp;
                ext_s[c] += as_[c] * ws;
            }
            rec_p[0] += xi * pn * wp;
            rec_p[1] += gp * pn * wp;
            rec_s[0] += gs * sn * ws;
            rec_s[1] -= xi * sn * ws;
        }
        for c in 0..2 {
            ep += (ext_p[c] - rec_p[c]).norm_sqr();
            es += (ext_s[c] - rec_s[c]).norm_sqr();
            total += (ext_p[c] + ext_s[c]).norm_sqr();
        }
    }
    if total == 0.0 {
        return Ok(HelmholtzResidual::default());
    }
    Ok(HelmholtzResidual {
        p_residual: (ep / total).sqrt(),
        s_residual: (es / total).sqrt(),
    })
}

/// [`helmholtz_trace_check`] on the top trace of a solution, at `h + 0.5`.
pub fn helmholtz_field_check(
    sol: &FieldSolution,
    p: &ElasticParams,
    n_max: i64,
) -> Result<HelmholtzResidual> {
    let trace = TraceCoefficients::from_nodal(&sol.top_trace(), sol.mesh.period, n_max);
    helmholtz_trace_check(&trace, p, CHECK_OFFSET, 4 * sol.mesh.nx)
}
