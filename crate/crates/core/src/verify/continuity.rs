use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_b_transformed, assemble_load_transformed, field_norms, integrate_h1_sq, solve,
    FieldSolution, Mesh,
};
use crate::model::{CutoffFn, DomainMap, ElasticParams, Source, SurfaceFn};

/// Size of the random test batch used to estimate operator norms.
pub const TEST_BATCH: usize = 32;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContinuityReport {
    /// `‖f_m − f₀‖_{1,∞}`.
    pub surface_distances: Vec<f64>,
    /// `‖g_m − g₀‖_{H¹}`.
    pub source_distances: Vec<f64>,
    pub b_discrepancies: Vec<f64>,
    pub g_discrepancies: Vec<f64>,
    pub b_ratios: Vec<f64>,
    pub g_ratios: Vec<f64>,
    /// `‖ũ_m − ũ₀‖_{H¹}` on the reference mesh.
    pub sol_errors: Vec<f64>,
}

impl ContinuityReport {
    /// `max/median` of the finite `b_ratios`.
    pub fn b_ratio_spread(&self) -> f64 {
        spread(&self.b_ratios)
    }
}

fn spread(r: &[f64]) -> f64 {
    let mut v: Vec<f64> = r
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > 0.0)
        .collect();
    if v.is_empty() {
        return 1.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let med = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    v[n - 1] / med
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Random free-node vectors with unit discrete `H¹` norm.
fn unit_batch(mesh: &Arc<Mesh>, n: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x: Vec<C64> = (0..mesh.dim())
                .map(|_| C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
                .collect();
            let nrm = field_norms(mesh, &FieldSolution::from_dofs(mesh, &x, 0.0).values).h1;
            x.into_iter().map(|z| z / nrm).collect()
        })
        .collect()
}

fn dot_conj(a: &[C64], v: &[C64]) -> C64 {
    a.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

/// Continuity of the transformed forms and of the solution map along a
/// sequence `(f_m, g_m) → (f₀, g₀)`, all on the reference mesh of `f₀`.
///
/// Operator discrepancies are maxima over [`TEST_BATCH`] random unit pairs,
/// a lower bound on the operator norm. `b_ratios` divide by
/// `‖f_m − f₀‖_{1,∞}`, `g_ratios` by `‖g_m − g₀‖_{H¹} + ‖f_m − f₀‖_{1,∞}`.
#[allow(clippy::too_many_arguments)]
pub fn form_continuity_check(
    mesh: &Arc<Mesh>,
    f_sequence: &[SurfaceFn],
    g0: &Source,
    g_sequence: &[Source],
    p: &ElasticParams,
    cutoff: CutoffFn,
    n_max: i64,
    seed: u64,
) -> Result<ContinuityReport> {
    if f_sequence.len() != g_sequence.len() {
        return Err(Error::Parameter(format!(
            "{} surfaces but {} sources",
            f_sequence.len(),
            g_sequence.len()
        )));
    }
    let f0 = &mesh.surface;
    let base_map = DomainMap::identity(f0.clone(), cutoff, mesh.h);
    let a0 = assemble_b_transformed(mesh, p, &base_map, n_max)?;
    let src0 = *g0;
    let b0 = assemble_load_transformed(mesh, &move |x| src0.eval(x), &base_map)?;
    let u0 = solve(&a0, &b0)?;
    let us = unit_batch(mesh, TEST_BATCH, seed);
    let vs = unit_batch(mesh, TEST_BATCH, seed ^ 0x9e37_79b9_7f4a_7c15);
    let a0u: Vec<Vec<C64>> = us.iter().map(|u| a0.apply(u)).collect();

    let mut rep = ContinuityReport::default();
    for (fm, gm) in f_sequence.iter().zip(g_sequence) {
        let map = DomainMap::new(f0.clone(), fm.clone(), cutoff, mesh.h)?;
        let am = assemble_b_transformed(mesh, p, &map, n_max)?;
        let srcm = *gm;
        let bm = assemble_load_transformed(mesh, &move |x| srcm.eval(x), &map)?;

        let mut db = 0.0f64;
        for ((u, v), a0u) in us.iter().zip(&vs).zip(&a0u) {
            let amu = am.apply(u);
            let diff: Vec<C64> = amu.iter().zip(a0u).map(|(a, b)| a - b).collect();
            db = db.max(dot_conj(&diff, v).norm());
        }
        let dl: Vec<C64> = bm.iter().zip(&b0).map(|(a, b)| a - b).collect();
        let dg = vs
            .iter()
            .map(|v| dot_conj(&dl, v).norm())
            .fold(0.0, f64::max);

        let df = fm.dist_1inf(f0, 4096);
        let dsrc = integrate_h1_sq(mesh, &|x| {
            let (a, b) = (srcm.eval(x), src0.eval(x));
            let (ga, gb) = (srcm.grad(x), src0.grad(x));
            (
                [a[0] - b[0], a[1] - b[1]],
                std::array::from_fn(|c| std::array::from_fn(|k| ga[c][k] - gb[c][k])),
            )
        })
        .sqrt();

        let um = solve(&am, &bm)?;
        let du: Vec<[C64; 2]> = um
            .values
            .iter()
            .zip(&u0.values)
            .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
            .collect();

        rep.surface_distances.push(df);
        rep.source_distances.push(dsrc);
        rep.b_discrepancies.push(db);
        rep.g_discrepancies.push(dg);
        rep.b_ratios.push(ratio(db, df));
        rep.g_ratios.push(ratio(dg, dsrc + df));
        rep.sol_errors.push(field_norms(mesh, &du).h1);
    }
    Ok(rep)
}
