//! Seeded Monte Carlo ensembles of the random problem. Every sample is
//! solved on the fixed reference mesh through the transformed forms.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_b_transformed, assemble_load_transformed, bary_point, element_gradients, norms,
    pushforward_h1_sq, solve, FieldSolution, Mesh,
};
use crate::model::{
    CutoffFn, DomainMap, ElasticParams, Geometry, RandomSurfaceModel, Source, SourceSpec,
};
use crate::quadrature::triangle_deg5;
use crate::verify::BoundProfile;

/// Grid resolution of the per-sample invertibility scan.
pub const INVERTIBILITY_GRID: usize = 256;

/// Everything a sample needs besides its index.
#[derive(Debug, Clone)]
pub struct EnsembleSetup {
    pub model: RandomSurfaceModel,
    pub source: SourceSpec,
    pub params: ElasticParams,
    pub mesh: Arc<Mesh>,
    pub cutoff: CutoffFn,
    pub n_max: i64,
    /// Required margin in `sup|J₂| ≤ 1 − ε`.
    pub epsilon: f64,
}

impl EnsembleSetup {
    /// Checks the height condition for the model's bounds and that the mesh
    /// sits on the reference surface.
    pub fn new(
        model: RandomSurfaceModel,
        source: SourceSpec,
        params: ElasticParams,
        mesh: Arc<Mesh>,
        cutoff: CutoffFn,
        n_max: i64,
        epsilon: f64,
    ) -> Result<Self> {
        let (gap, ok) = Geometry::new(model.f0.clone(), mesh.h)?.height_condition();
        if !ok {
            return Err(Error::Geometry(format!(
                "(M - m)/gap = {} is not below 1",
                (model.f0.f_max - model.f0.f_min) / gap
            )));
        }
        if mesh.surface != model.f0 {
            return Err(Error::Mesh(
                "reference mesh is not built on the model's reference surface".into(),
            ));
        }
        Ok(Self {
            model,
            source,
            params,
            mesh,
            cutoff,
            n_max,
            epsilon,
        })
    }

    /// `1 − (M − m)·sup|α'|`, the guaranteed lower bound on `det 𝓙`.
    pub fn det_lower_bound(&self) -> f64 {
        1.0 - (self.model.f0.f_max - self.model.f0.f_min) * self.cutoff.max_slope
    }

    pub fn with_params(&self, params: ElasticParams) -> Self {
        Self {
            params,
            ..self.clone()
        }
    }

    pub fn map_for(&self, index: u64) -> Result<DomainMap> {
        DomainMap::new(
            self.model.f0.clone(),
            self.model.sample(index)?,
            self.cutoff,
            self.mesh.h,
        )
    }

    pub fn source_for(&self, index: u64) -> Result<Source> {
        let f0 = &self.model.f0;
        self.source
            .make(f0.f_max, self.mesh.h, f0.period, Some(index))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub index: u64,
    /// `‖ũ(η)‖²_{H¹(D_h)}` on the reference mesh.
    pub u_h1_sq: f64,
    /// `‖u*(η)‖²_{H¹(D_h(η))}`, `u* = ũ∘𝓗⁻¹`, by change of variables.
    pub u_ref_h1_sq: f64,
    /// `‖g̃(η)‖²_{H¹(D_h)}`.
    pub g_h1_sq: f64,
    pub min_det_j: f64,
    /// Norm-equivalence factor from the sample's Jacobian extremes.
    pub kappa: f64,
}

impl SampleRecord {
    /// `u_ref ≤ κ·u` and `u ≤ κ·u_ref`, with a relative rounding allowance.
    pub fn sandwich_holds(&self) -> bool {
        let s = 1.0 + 1e-10;
        self.u_ref_h1_sq <= self.kappa * self.u_h1_sq * s
            && self.u_h1_sq <= self.kappa * self.u_ref_h1_sq * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct JacobianExtremes {
    min_det: f64,
    max_det: f64,
    min_sv2: f64,
    max_sv2: f64,
}

/// Extremes of `det 𝓙` and of the squared singular values of `𝓙⁻¹` at the
/// degree-5 points of the reference mesh.
fn jacobian_extremes(mesh: &Mesh, map: &DomainMap) -> Result<JacobianExtremes> {
    let mut e = JacobianExtremes {
        min_det: f64::INFINITY,
        max_det: 0.0,
        min_sv2: f64::INFINITY,
        max_sv2: 0.0,
    };
    for t in 0..mesh.triangles.len() {
        let v = mesh.vertices(t);
        for (l, _) in triangle_deg5() {
            let mp = map.eval(bary_point(&v, &l))?;
            let ji = mp.jacobian_inv();
            let a = ji[0][0] * ji[0][0] + ji[1][0] * ji[1][0];
            let d = ji[0][1] * ji[0][1] + ji[1][1] * ji[1][1];
            let b = ji[0][0] * ji[0][1] + ji[1][0] * ji[1][1];
            let half = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            e.min_det = e.min_det.min(mp.det);
            e.max_det = e.max_det.max(mp.det);
            e.min_sv2 = e.min_sv2.min(half - r);
            e.max_sv2 = e.max_sv2.max(half + r);
        }
    }
    Ok(e)
}

/// `‖g∘𝓗‖²_{H¹}` over the reference mesh, `∇(g∘𝓗) = (∇g∘𝓗)·𝓙`.
pub fn pulled_source_h1_sq(mesh: &Mesh, src: &Source, map: &DomainMap) -> Result<f64> {
    let mut acc = 0.0;
    for t in 0..mesh.triangles.len() {
        let v = mesh.vertices(t);
        let (_, area) = element_gradients(&v);
        for (l, w) in triangle_deg5() {
            let mp = map.eval(bary_point(&v, &l))?;
            let jac = mp.jacobian();
            let g = src.eval(mp.x);
            let dg = src.grad(mp.x);
            let mut s = g[0].norm_sqr() + g[1].norm_sqr();
            for row in &dg {
                for k in 0..2 {
                    s += (row[0] * jac[0][k] + row[1] * jac[1][k]).norm_sqr();
                }
            }
            acc += w * area * s;
        }
    }
    Ok(acc)
}

/// Solves sample `index` and returns the field with its record.
pub fn solve_sample(setup: &EnsembleSetup, index: u64) -> Result<(SampleRecord, FieldSolution)> {
    let map = setup.map_for(index)?;
    let grid_min = map.check_invertibility(INVERTIBILITY_GRID)?;
    map.check_margin(setup.epsilon, INVERTIBILITY_GRID)?;
    let src = setup.source_for(index)?;
    let mesh = &setup.mesh;
    let ext = jacobian_extremes(mesh, &map)?;
    let sys = assemble_b_transformed(mesh, &setup.params, &map, setup.n_max)?;
    let load = assemble_load_transformed(mesh, &move |x| src.eval(x), &map)?;
    let mut sol = solve(&sys, &load)?;
    sol.sample_index = Some(index);
    let u_h1_sq = norms(&sol).h1.powi(2);
    let u_ref_h1_sq = pushforward_h1_sq(&sol, &map)?;
    let g_h1_sq = pulled_source_h1_sq(mesh, &src, &map)?;
    let kappa =
        (ext.max_det * ext.max_sv2.max(1.0)).max(1.0 / (ext.min_det * ext.min_sv2.min(1.0)));
    let rec = SampleRecord {
        index,
        u_h1_sq,
        u_ref_h1_sq,
        g_h1_sq,
        min_det_j: grid_min.min(ext.min_det),
        kappa,
    };
    Ok((rec, sol))
}

pub fn run_sample(setup: &EnsembleSetup, index: u64) -> Result<SampleRecord> {
    solve_sample(setup, index).map(|(r, _)| r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub sample_count: usize,
    /// Sorted by index.
    pub per_sample: Vec<SampleRecord>,
    pub mean_u_sq: f64,
    pub mean_g_sq: f64,
    /// Standard error of `mean_u_sq`.
    pub se_u_sq: f64,
}

impl EnsembleResult {
    pub fn from_records(mut per_sample: Vec<SampleRecord>) -> Self {
        per_sample.sort_by_key(|r| r.index);
        let n = per_sample.len();
        let (mean_u_sq, se_u_sq) = mean_se(per_sample.iter().map(|r| r.u_h1_sq));
        let (mean_g_sq, _) = mean_se(per_sample.iter().map(|r| r.g_h1_sq));
        Self {
            sample_count: n,
            per_sample,
            mean_u_sq,
            mean_g_sq,
            se_u_sq,
        }
    }

    pub fn min_det_j(&self) -> f64 {
        self.per_sample
            .iter()
            .map(|r| r.min_det_j)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Sample mean and its standard error (zero for fewer than two values).
fn mean_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Samples `0..n` on a pool of `parallelism` threads. Any failed sample
/// aborts the ensemble.
pub fn run_ensemble(setup: &EnsembleSetup, n: usize, parallelism: usize) -> Result<EnsembleResult> {
    if n == 0 {
        return Err(Error::Parameter(
            "ensemble needs at least one sample".into(),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let results: Vec<Result<SampleRecord>> = pool.install(|| {
        (0..n as u64)
            .into_par_iter()
            .map(|i| run_sample(setup, i))
            .collect()
    });
    let mut records = Vec::with_capacity(n);
    let mut failed = Vec::new();
    let mut cause = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                failed.push(i);
                cause.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if !failed.is_empty() {
        return Err(Error::Ensemble {
            indices: failed,
            cause: cause.unwrap_or_default(),
        });
    }
    Ok(EnsembleResult::from_records(records))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSquareCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Mean-square bound: `E‖ũ‖² ≤ Ĉ·(H − m + 1)²(c₄ + c₅ + c₆)²·E‖g̃‖²` with the
/// profile evaluated at `L₀ = M₀ + L`.
pub fn mean_square_check(
    res: &EnsembleResult,
    profile: &BoundProfile,
    calibrated_c: f64,
) -> MeanSquareCheck {
    let lhs = res.mean_u_sq;
    let rhs = calibrated_c * profile.mean_square_shape() * res.mean_g_sq;
    MeanSquareCheck {
        lhs,
        rhs,
        ok: lhs <= rhs,
    }
}

/// `Ĉ` that makes the anchor run sit exactly on the bound.
pub fn calibrate_constant(anchor: &EnsembleResult, profile: &BoundProfile) -> Result<f64> {
    let den = profile.mean_square_shape() * anchor.mean_g_sq;
    if !(den > 0.0) {
        return Err(Error::Parameter("anchor run has zero source norm".into()));
    }
    Ok(anchor.mean_u_sq / den)
}

/// `L₀ = M₀ + L`.
pub fn lipschitz_envelope(model: &RandomSurfaceModel) -> f64 {
    model.m0 + model.f0.lipschitz
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// Mean of `‖f(η) − f₀‖²_{1,∞}`.
    pub f_second_moment: f64,
    /// Mean of `‖g̃(η)‖²_{H¹}`.
    pub g_second_moment: f64,
    pub f_se: f64,
    pub g_se: f64,
}

/// Sample second moments of the surface perturbation and the pulled-back
/// source over draws `0..n`.
pub fn input_moments(setup: &EnsembleSetup, n: usize) -> Result<Moments> {
    if n < 2 {
        return Err(Error::Parameter("moments need at least two samples".into()));
    }
    let pairs: Vec<Result<(f64, f64)>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let map = setup.map_for(i)?;
            let df = map.f_eta.dist_1inf(&map.f0, 4096);
            let g = pulled_source_h1_sq(&setup.mesh, &setup.source_for(i)?, &map)?;
            Ok((df * df, g))
        })
        .collect();
    let pairs = pairs.into_iter().collect::<Result<Vec<_>>>()?;
    let (f_second_moment, f_se) = mean_se(pairs.iter().map(|p| p.0));
    let (g_second_moment, g_se) = mean_se(pairs.iter().map(|p| p.1));
    Ok(Moments {
        f_second_moment,
        g_second_moment,
        f_se,
        g_se,
    })
}

/// Deterministic bytes of the per-sample table.
pub fn records_fingerprint(res: &EnsembleResult) -> Vec<u8> {
    let mut out = Vec::with_capacity(48 * res.per_sample.len());
    for r in &res.per_sample {
        out.extend_from_slice(&r.index.to_le_bytes());
        for x in [r.u_h1_sq, r.u_ref_h1_sq, r.g_h1_sq, r.min_det_j, r.kappa] {
            out.extend_from_slice(&x.to_bits().to_le_bytes());
        }
    }
    for x in [res.mean_u_sq, res.mean_g_sq, res.se_u_sq] {
        out.extend_from_slice(&x.to_bits().to_le_bytes());
    }
    out
}
