use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dtn::{mat_vec, symbol_matrix, xi_n, Mat2};
use crate::error::Result;
use crate::model::{DomainMap, ElasticParams, Source};
use crate::quadrature::gauss_legendre;

/// Random smooth periodic field with modes `n ∈ {-1, 0, 1}` and quadratic
/// dependence on `x₂`: `u_c = Σ_n e^{iξ_n x₁}(a₀ + a₁z + a₂z²)`, `z = x₂/H`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestField {
    pub period: f64,
    pub height: f64,
    /// `coeffs[c][n + 1][k]`.
    pub coeffs: [[[C64; 3]; 3]; 2],
}

impl TestField {
    pub fn random(rng: &mut impl Rng, period: f64, height: f64) -> Self {
        let mut coeffs = [[[C64::new(0.0, 0.0); 3]; 3]; 2];
        for c in coeffs.iter_mut().flatten().flatten() {
            *c = C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
        }
        Self {
            period,
            height,
            coeffs,
        }
    }

    pub fn value(&self, x: [f64; 2]) -> [C64; 2] {
        let mut u = [C64::new(0.0, 0.0); 2];
        for (c, uc) in u.iter_mut().enumerate() {
            for (j, a) in self.coeffs[c].iter().enumerate() {
                let e = C64::from_polar(1.0, xi_n(j as i64 - 1, self.period) * x[0]);
                let z = x[1] / self.height;
                *uc += e * (a[0] + z * (a[1] + z * a[2]));
            }
        }
        u
    }

    /// `grad[c][k] = ∂_k u_c`.
    pub fn grad(&self, x: [f64; 2]) -> Mat2 {
        let mut g = [[C64::new(0.0, 0.0); 2]; 2];
        for (c, row) in g.iter_mut().enumerate() {
            for (j, a) in self.coeffs[c].iter().enumerate() {
                let xi = xi_n(j as i64 - 1, self.period);
                let e = C64::from_polar(1.0, xi * x[0]);
                let z = x[1] / self.height;
                let poly = a[0] + z * (a[1] + z * a[2]);
                row[0] += C64::new(0.0, xi) * e * poly;
                row[1] += e * (a[1] + 2.0 * z * a[2]) / self.height;
            }
        }
        g
    }

    /// Fourier coefficients at height `h`, `n = -1, 0, 1`.
    fn trace_modes(&self, h: f64) -> [[C64; 2]; 3] {
        std::array::from_fn(|j| {
            std::array::from_fn(|c| {
                let a = self.coeffs[c][j];
                let z = h / self.height;
                a[0] + z * (a[1] + z * a[2])
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PullbackReport {
    /// `max |B̃_η(u, v) − B_c(ũ, ṽ)|` over the trials.
    pub b_discrepancy: f64,
    /// `max |G̃_η(v) − G_c(ṽ)|`.
    pub g_discrepancy: f64,
    /// `max |B̃_η(u, v)|`, for scale.
    pub b_scale: f64,
}

impl PullbackReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.b_discrepancy.max(self.g_discrepancy)
    }
}

/// Tensor Gauss points `(x, weight)` on `[a, b]` split into `cells` pieces.
fn composite(a: f64, b: f64, cells: usize, nodes: &[f64], weights: &[f64]) -> Vec<(f64, f64)> {
    let len = (b - a) / cells as f64;
    let mut out = Vec::with_capacity(cells * nodes.len());
    for i in 0..cells {
        let lo = a + i as f64 * len;
        for (x, w) in nodes.iter().zip(weights) {
            out.push((lo + x * len, w * len));
        }
    }
    out
}

fn energy(gu: &Mat2, gv: &Mat2, du: C64, dv: C64, p: &ElasticParams) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for c in 0..2 {
        s += gu[c][0] * gv[c][0].conj() + gu[c][1] * gv[c][1].conj();
    }
    p.mu * s + (p.lambda + p.mu) * du * dv.conj()
}

fn dot_conj(u: &[C64; 2], v: &[C64; 2]) -> C64 {
    u[0] * v[0].conj() + u[1] * v[1].conj()
}

/// `∫_{Γ_h} 𝒯u·v̄` from exact trace modes.
fn boundary_term(
    um: &[[C64; 2]; 3],
    vm: &[[C64; 2]; 3],
    period: f64,
    p: &ElasticParams,
) -> Result<C64> {
    let mut s = C64::new(0.0, 0.0);
    for j in 0..3 {
        let m = symbol_matrix(xi_n(j as i64 - 1, period), p)?;
        s += dot_conj(&mat_vec(&m.entries, &um[j]), &vm[j]);
    }
    Ok(period * s)
}

/// Trace modes `n = -1, 0, 1` of `y₁ ↦ F(y₁, h)` from an 8-point DFT.
fn sampled_modes(f: impl Fn(f64) -> [C64; 2], period: f64) -> [[C64; 2]; 3] {
    const N: usize = 8;
    let vals: Vec<[C64; 2]> = (0..N).map(|i| f(i as f64 * period / N as f64)).collect();
    std::array::from_fn(|j| {
        let n = j as f64 - 1.0;
        let mut acc = [C64::new(0.0, 0.0); 2];
        for (i, v) in vals.iter().enumerate() {
            let e = C64::from_polar(1.0 / N as f64, -2.0 * PI * n * i as f64 / N as f64);
            acc[0] += v[0] * e;
            acc[1] += v[1] * e;
        }
        acc
    })
}

/// Compares the forms on the mapped domain with their pullbacks to the
/// reference strip, for `n_trials` random pairs of test fields.
///
/// Both strips get the same layered rule on exact geometry: columns of
/// composite 3-point Gauss in `x₁`, and in `x₂` three layers at distances
/// `δ` and `γ − δ/2` above the surface. Pieces per unit length: `density`.
/// `ũ = u∘𝓗` with `∇ũ = (∇u∘𝓗)·𝓙_𝓗`.
pub fn pullback_identity_check(
    map: &DomainMap,
    p: &ElasticParams,
    source: &Source,
    n_trials: usize,
    density: f64,
    seed: u64,
) -> Result<PullbackReport> {
    let period = map.f0.period;
    let h = map.h;
    let (gn, gw) = gauss_legendre(3);
    let pieces = |len: f64| ((density * len).ceil() as usize).max(1);
    let cols = composite(0.0, period, pieces(period), &gn, &gw);
    let [k0, k1] = map.cutoff.kinks();
    let top = h - map.f0.inf().min(map.f_eta.inf()) - k1;
    let counts = [pieces(k0), pieces(k1 - k0), pieces(top)];
    let layers = |f: f64| -> Vec<(f64, f64)> {
        [(f, f + k0), (f + k0, f + k1), (f + k1, h)]
            .into_iter()
            .zip(counts)
            .flat_map(|((a, b), n)| composite(a, b, n, &gn, &gw))
            .collect()
    };
    let mut phys = Vec::with_capacity(3 * counts.iter().sum::<usize>() * cols.len());
    let mut refp = Vec::with_capacity(phys.capacity());
    for &(x1, w1) in &cols {
        for (x2, w2) in layers(map.f_eta.value(x1)) {
            phys.push(([x1, x2], w1 * w2));
        }
        for (y2, w2) in layers(map.f0.value(x1)) {
            refp.push((map.eval([x1, y2])?, w1 * w2));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = PullbackReport::default();
    let w2 = p.omega * p.omega;
    for _ in 0..n_trials {
        let u = TestField::random(&mut rng, period, h);
        let v = TestField::random(&mut rng, period, h);

        let mut b_phys = C64::new(0.0, 0.0);
        let mut g_phys = C64::new(0.0, 0.0);
        for &(x, w) in &phys {
            let (uu, vv) = (u.value(x), v.value(x));
            let (gu, gv) = (u.grad(x), v.grad(x));
            let (du, dv) = (gu[0][0] + gu[1][1], gv[0][0] + gv[1][1]);
            b_phys += w * (energy(&gu, &gv, du, dv, p) - w2 * dot_conj(&uu, &vv));
            g_phys -= w * dot_conj(&source.eval(x), &vv);
        }
        b_phys -= boundary_term(&u.trace_modes(h), &v.trace_modes(h), period, p)?;

        let mut b_ref = C64::new(0.0, 0.0);
        let mut g_ref = C64::new(0.0, 0.0);
        for &(mp, w) in &refp {
            let jac = mp.jacobian();
            let ji = mp.jacobian_inv();
            let pull = |f: &TestField| -> ([C64; 2], Mat2) {
                let g = f.grad(mp.x);
                let gt = std::array::from_fn(|c| {
                    std::array::from_fn(|k| g[c][0] * jac[0][k] + g[c][1] * jac[1][k])
                });
                (f.value(mp.x), gt)
            };
            let (uu, gut) = pull(&u);
            let (vv, gvt) = pull(&v);
            // physical gradients 𝓙⁻ᵀ∇ũ_c and divergence ∇ũ:𝓙⁻¹
            let phys_grad = |gt: &Mat2| -> Mat2 {
                std::array::from_fn(|c| {
                    std::array::from_fn(|m| gt[c][0] * ji[0][m] + gt[c][1] * ji[1][m])
                })
            };
            let colon = |gt: &Mat2| -> C64 {
                let mut s = C64::new(0.0, 0.0);
                for c in 0..2 {
                    for k in 0..2 {
                        s += gt[c][k] * ji[k][c];
                    }
                }
                s
            };
            let wd = w * mp.det;
            b_ref += wd
                * (energy(
                    &phys_grad(&gut),
                    &phys_grad(&gvt),
                    colon(&gut),
                    colon(&gvt),
                    p,
                ) - w2 * dot_conj(&uu, &vv));
            g_ref -= wd * dot_conj(&source.eval(mp.x), &vv);
        }
        let ut = sampled_modes(|y1| u.value(map.eval_unchecked([y1, h]).x), period);
        let vt = sampled_modes(|y1| v.value(map.eval_unchecked([y1, h]).x), period);
        b_ref -= boundary_term(&ut, &vt, period, p)?;

        rep.b_discrepancy = rep.b_discrepancy.max((b_phys - b_ref).norm());
        rep.g_discrepancy = rep.g_discrepancy.max((g_phys - g_ref).norm());
        rep.b_scale = rep.b_scale.max(b_phys.norm());
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CutoffFn, Mode, RandomSurfaceModel, SourceSpec, SurfaceFn};

    fn setup() -> (SurfaceFn, CutoffFn, f64, ElasticParams, Source) {
        let f0 =
            SurfaceFn::cosine_series(0.5, vec![Mode::new(1, 0.1, 0.3)], 5.0, 0.0, 1.0).unwrap();
        let h = 2.5;
        let cutoff = CutoffFn::new(0.2, h - f0.sup()).unwrap();
        let p = ElasticParams::new(2.0, 1.0, 3.0).unwrap();
        let src = SourceSpec {
            center: [2.0, 1.5],
            radius: 0.4,
            amplitude: [C64::new(1.0, 0.5), C64::new(-0.3, 1.0)],
            jitter: None,
        }
        .make(1.0, h, 5.0, None)
        .unwrap();
        (f0, cutoff, h, p, src)
    }

    #[test]
    fn test_field_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = TestField::random(&mut rng, 5.0, 2.0);
        let x = [1.3, 0.7];
        let e = 1e-5;
        let g = u.grad(x);
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += e;
            xm[k] -= e;
            for c in 0..2 {
                let fd = (u.value(xp)[c] - u.value(xm)[c]) / (2.0 * e);
                assert!((fd - g[c][k]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn identity_map_is_exact() {
        let (f0, cutoff, h, p, src) = setup();
        let map = DomainMap::identity(f0, cutoff, h);
        let r = pullback_identity_check(&map, &p, &src, 3, 2.0, 11).unwrap();
        assert!(r.max_discrepancy() < 1e-12, "{r:?}");
        assert!(r.b_scale > 1.0);
    }

    #[test]
    fn flat_shift_matches() {
        let f0 = SurfaceFn::flat(0.4, 5.0, 0.0, 1.0).unwrap();
        let f1 = SurfaceFn::flat(0.6, 5.0, 0.0, 1.0).unwrap();
        let (_, _, _, p, _) = setup();
        let h = 2.4;
        let cutoff = CutoffFn::new(0.2, 2.0).unwrap();
        let src = SourceSpec {
            center: [2.5, 1.6],
            radius: 0.5,
            amplitude: [C64::new(1.0, 0.0); 2],
            jitter: None,
        }
        .make(1.0, h, 5.0, None)
        .unwrap();
        let map = DomainMap::new(f0, f1, cutoff, h).unwrap();
        let r = pullback_identity_check(&map, &p, &src, 5, 32.0, 1).unwrap();
        assert!(r.max_discrepancy() < 1e-6, "{r:?}");
    }

    #[test]
    fn random_maps_converge() {
        let (f0, cutoff, h, p, src) = setup();
        let model =
            RandomSurfaceModel::new(f0.clone(), vec![0.08, 0.04], vec![0.0, 1.0], 0.4, 5).unwrap();
        for i in 0..2 {
            let map = DomainMap::new(f0.clone(), model.sample(i).unwrap(), cutoff, h).unwrap();
            let coarse = pullback_identity_check(&map, &p, &src, 1, 2.0, 9).unwrap();
            let fine = pullback_identity_check(&map, &p, &src, 1, 32.0, 9).unwrap();
            assert!(fine.max_discrepancy() < 1e-6, "{fine:?}");
            assert!(
                fine.max_discrepancy() < coarse.max_discrepancy(),
                "{coarse:?} {fine:?}"
            );
        }
    }
}
