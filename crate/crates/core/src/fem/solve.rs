use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::lu::{factorize_symbolic_lu, LuRef, NumericLu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, Par};
use num_complex::Complex64;

use super::assembly::{bary_point, element_gradients, SparseSystem};
use super::mesh::Mesh;
use crate::dtn::Mat2;
use crate::error::{Error, Result};
use crate::model::DomainMap;
use crate::quadrature::triangle_deg5;

type C64 = Complex64;

pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
    pub d2: f64,
    pub trace_l2_top: f64,
}

/// Nodal P1 field on a mesh; surface nodes carry zero.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub mesh: Arc<Mesh>,
    pub values: Vec<[C64; 2]>,
    pub norms: Norms,
    pub omega: f64,
    pub sample_index: Option<u64>,
    pub residual: f64,
}

impl FieldSolution {
    /// Builds a field from the unknown vector, padding surface nodes with zero.
    pub fn from_dofs(mesh: &Arc<Mesh>, x: &[C64], omega: f64) -> Self {
        let zero = C64::new(0.0, 0.0);
        let values: Vec<[C64; 2]> = (0..mesh.node_count())
            .map(|nd| match mesh.dof(nd, 0) {
                Some(d) => [x[d], x[d + 1]],
                None => [zero, zero],
            })
            .collect();
        Self::from_nodal(mesh, values, omega)
    }

    /// Wraps raw nodal values without enforcing the surface condition.
    pub fn from_nodal(mesh: &Arc<Mesh>, values: Vec<[C64; 2]>, omega: f64) -> Self {
        let norms = field_norms(mesh, &values);
        Self {
            mesh: mesh.clone(),
            values,
            norms,
            omega,
            sample_index: None,
            residual: 0.0,
        }
    }

    pub fn dofs(&self) -> Vec<C64> {
        let mut x = vec![C64::new(0.0, 0.0); self.mesh.dim()];
        for (nd, v) in self.values.iter().enumerate() {
            if let Some(d) = self.mesh.dof(nd, 0) {
                x[d] = v[0];
                x[d + 1] = v[1];
            }
        }
        x
    }

    /// Constant gradient on triangle `t`, `grad[c][k] = ∂_k u_c`.
    pub fn grad_on(&self, t: usize) -> Mat2 {
        element_field_grad(&self.mesh, &self.values, t)
    }

    /// Value at barycentric point `l` of triangle `t`.
    pub fn value_on(&self, t: usize, l: &[f64; 3]) -> [C64; 2] {
        let tri = &self.mesh.triangles[t];
        let mut u = [C64::new(0.0, 0.0); 2];
        for k in 0..3 {
            for c in 0..2 {
                u[c] += self.values[tri.v[k]][c] * l[k];
            }
        }
        u
    }

    /// Top-row nodal values ordered along `Γ_h`.
    pub fn top_trace(&self) -> Vec<[C64; 2]> {
        self.mesh
            .top_nodes
            .iter()
            .map(|&n| self.values[n])
            .collect()
    }

    pub fn scaled(&self, s: C64) -> Self {
        let values = self.values.iter().map(|v| [v[0] * s, v[1] * s]).collect();
        let mut out = Self::from_nodal(&self.mesh, values, self.omega);
        out.sample_index = self.sample_index;
        out
    }
}

fn element_field_grad(mesh: &Mesh, values: &[[C64; 2]], t: usize) -> Mat2 {
    let (g, _) = element_gradients(&mesh.vertices(t));
    let tri = &mesh.triangles[t];
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for k in 0..3 {
        let u = values[tri.v[k]];
        for c in 0..2 {
            for d in 0..2 {
                out[c][d] += u[c] * g[k][d];
            }
        }
    }
    out
}

/// Exact P1 norms of a nodal field.
pub fn field_norms(mesh: &Mesh, values: &[[C64; 2]]) -> Norms {
    let (mut l2, mut grad, mut d2) = (0.0, 0.0, 0.0);
    for t in 0..mesh.triangles.len() {
        let area = mesh.signed_area(t);
        let tri = &mesh.triangles[t];
        for c in 0..2 {
            let u: [C64; 3] = std::array::from_fn(|k| values[tri.v[k]][c]);
            let sq: f64 = u.iter().map(|z| z.norm_sqr()).sum();
            l2 += area / 12.0 * (sq + (u[0] + u[1] + u[2]).norm_sqr());
        }
        let g = element_field_grad(mesh, values, t);
        for row in &g {
            grad += area * (row[0].norm_sqr() + row[1].norm_sqr());
            d2 += area * row[1].norm_sqr();
        }
    }
    let mut top = 0.0;
    let nx = mesh.nx;
    let dx = mesh.period / nx as f64;
    for i in 0..nx {
        let (a, b) = (
            values[mesh.top_nodes[i]],
            values[mesh.top_nodes[(i + 1) % nx]],
        );
        for c in 0..2 {
            top += dx / 3.0 * (a[c].norm_sqr() + b[c].norm_sqr() + (a[c] * b[c].conj()).re);
        }
    }
    Norms {
        l2: l2.sqrt(),
        h1: (l2 + grad).sqrt(),
        d2: d2.sqrt(),
        trace_l2_top: top.sqrt(),
    }
}

pub fn norms(sol: &FieldSolution) -> Norms {
    field_norms(&sol.mesh, &sol.values)
}

/// `‖u∘𝓗⁻¹‖²_{H¹}` over the mapped domain for a field `ũ` on the reference
/// mesh: `∫ (|ũ|² + |𝓙⁻ᵀ∇ũ|²) det 𝓙 dy`.
pub fn pushforward_h1_sq(sol: &FieldSolution, map: &DomainMap) -> Result<f64> {
    let mesh = &sol.mesh;
    let mut acc = 0.0;
    for t in 0..mesh.triangles.len() {
        let v = mesh.vertices(t);
        let (_, area) = element_gradients(&v);
        let g = sol.grad_on(t);
        for (l, w) in triangle_deg5() {
            let mp = map.eval(bary_point(&v, &l))?;
            let ji = mp.jacobian_inv();
            let u = sol.value_on(t, &l);
            let mut s = u[0].norm_sqr() + u[1].norm_sqr();
            for row in &g {
                for m in 0..2 {
                    s += (row[0] * ji[0][m] + row[1] * ji[1][m]).norm_sqr();
                }
            }
            acc += w * area * mp.det * s;
        }
    }
    Ok(acc)
}

/// `∫ |F|² + |∇F|²` of a smooth field given as value and gradient, by the
/// degree-5 rule on each element.
pub fn integrate_h1_sq(mesh: &Mesh, f: &(dyn Fn([f64; 2]) -> ([C64; 2], Mat2) + Sync)) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.triangles.len() {
        let v = mesh.vertices(t);
        let (_, area) = element_gradients(&v);
        for (l, w) in triangle_deg5() {
            let (u, g) = f(bary_point(&v, &l));
            let mut s = u[0].norm_sqr() + u[1].norm_sqr();
            for row in &g {
                s += row[0].norm_sqr() + row[1].norm_sqr();
            }
            acc += w * area * s;
        }
    }
    acc
}

/// LU factors of an assembled system. Factorization and solves run
/// sequentially, so results do not depend on the thread pool.
pub struct Factored {
    symbolic: SymbolicLu<usize>,
    numeric: NumericLu<usize, C64>,
    system: SparseSystem,
}

pub fn factor(system: &SparseSystem) -> Result<Factored> {
    let a = system.merged();
    let fail = |e: String| {
        Error::Solve(format!(
            "factorization failed ({e}); possible discrete resonance or bad truncation"
        ))
    };
    let sym = SymbolicSparseColMatRef::new_checked(a.n, a.n, &a.col_ptr, None, &a.row_idx);
    let mat = SparseColMatRef::<usize, C64>::new(sym, &a.values);
    let symbolic =
        factorize_symbolic_lu(sym, Default::default()).map_err(|e| fail(format!("{e:?}")))?;
    let mut numeric = NumericLu::new();
    let mut buf = MemBuffer::try_new(
        symbolic.factorize_numeric_lu_scratch::<C64>(Par::Seq, Default::default()),
    )
    .map_err(|e| fail(format!("{e:?}")))?;
    symbolic
        .factorize_numeric_lu(
            &mut numeric,
            mat,
            Par::Seq,
            MemStack::new(&mut buf),
            Default::default(),
        )
        .map_err(|e| fail(format!("{e:?}")))?;
    Ok(Factored {
        symbolic,
        numeric,
        system: system.clone(),
    })
}

fn rel_residual(system: &SparseSystem, x: &[C64], b: &[C64]) -> (Vec<C64>, f64) {
    let ax = system.apply(x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let nb = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nr = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (r, if nb > 0.0 { nr / nb } else { nr })
}

impl Factored {
    fn raw_solve(&self, b: &[C64]) -> Vec<C64> {
        let mut rhs = faer::Mat::<C64>::from_fn(b.len(), 1, |i, _| b[i]);
        let mut buf = MemBuffer::new(self.symbolic.solve_in_place_scratch::<C64>(1, Par::Seq));
        LuRef::new_unchecked(&self.symbolic, &self.numeric).solve_in_place_with_conj(
            Conj::No,
            rhs.as_mut(),
            Par::Seq,
            MemStack::new(&mut buf),
        );
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }

    /// Solves with up to three steps of iterative refinement.
    pub fn solve(&self, load: &[C64]) -> Result<FieldSolution> {
        let n = self.system.dim();
        if load.len() != n {
            return Err(Error::Solve(format!(
                "load has length {}, system has {n}",
                load.len()
            )));
        }
        let mut x = self.raw_solve(load);
        let (mut r, mut res) = rel_residual(&self.system, &x, load);
        for _ in 0..3 {
            if res <= RESIDUAL_TOL {
                break;
            }
            let dx = self.raw_solve(&r);
            for (a, d) in x.iter_mut().zip(&dx) {
                *a += d;
            }
            (r, res) = rel_residual(&self.system, &x, load);
        }
        if !res.is_finite() || x.iter().any(|z| !z.is_finite()) {
            return Err(Error::Solve(
                "non-finite solution; possible discrete resonance".into(),
            ));
        }
        if res > RESIDUAL_TOL {
            return Err(Error::Solve(format!(
                "relative residual {res:.3e} above {RESIDUAL_TOL:.0e}"
            )));
        }
        let mut sol = FieldSolution::from_dofs(&self.system.mesh, &x, self.system.params.omega);
        sol.residual = res;
        Ok(sol)
    }
}

pub fn solve(system: &SparseSystem, load: &[C64]) -> Result<FieldSolution> {
    factor(system)?.solve(load)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtn::{hat_factor, TraceCoefficients};
    use crate::fem::{assemble_b, assemble_load, build_mesh, default_n_max};
    use crate::model::{ElasticParams, SurfaceFn};

    fn flat(nx: usize, ny: usize) -> Arc<Mesh> {
        let f = SurfaceFn::flat(0.5, 5.0, 0.0, 1.0).unwrap();
        Arc::new(build_mesh(&f, 2.0, nx, ny).unwrap())
    }

    fn bump(x: [f64; 2]) -> [C64; 2] {
        let r2 = ((x[0] - 2.5).powi(2) + (x[1] - 1.3).powi(2)) / 0.16;
        let b = if r2 < 1.0 {
            (1.0 - 1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        };
        [C64::new(b, 0.0), C64::new(0.0, -0.5 * b)]
    }

    #[test]
    fn constant_field_norm() {
        let m = flat(8, 4);
        let c = [C64::new(0.3, 0.4), C64::new(1.0, -2.0)];
        let n = field_norms(&m, &vec![c; m.node_count()]);
        let mag = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
        assert!((n.l2 - mag * (5.0f64 * 1.5).sqrt()).abs() < 1e-12);
        assert!((n.h1 - n.l2).abs() < 1e-12);
        assert!(n.d2.abs() < 1e-12);
        let z = field_norms(&m, &vec![[C64::new(0.0, 0.0); 2]; m.node_count()]);
        assert_eq!(z, Norms::default());
    }

    #[test]
    fn top_trace_parseval() {
        let m = flat(16, 3);
        let a = [C64::new(0.5, -0.1), C64::new(0.2, 0.7)];
        let mut vals = vec![[C64::new(0.0, 0.0); 2]; m.node_count()];
        for (i, &nd) in m.top_nodes.iter().enumerate() {
            let e = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * 3.0 * i as f64 / 16.0);
            vals[nd] = [a[0] * e, a[1] * e];
        }
        let n = field_norms(&m, &vals);
        let tc = TraceCoefficients::from_nodal(&vals[m.nx * m.ny..], 5.0, 40_000);
        let parseval = tc.l2_sq();
        assert!((n.trace_l2_top.powi(2) - parseval).abs() < 1e-10);
        // the leading mode alone carries the hat attenuation
        let s = hat_factor(3, 16);
        let lead = 5.0 * s * s * (a[0].norm_sqr() + a[1].norm_sqr());
        assert!(lead < parseval && parseval < lead * 1.2);
    }

    #[test]
    fn zero_load_and_linearity() {
        let m = flat(16, 6);
        let p = ElasticParams::new(2.0, 1.0, 2.0).unwrap();
        let sys = assemble_b(&m, &p, default_n_max(&p, 5.0, m.nx)).unwrap();
        let f = factor(&sys).unwrap();
        let z = f.solve(&vec![C64::new(0.0, 0.0); sys.dim()]).unwrap();
        assert!(z
            .values
            .iter()
            .all(|v| v[0].norm() == 0.0 && v[1].norm() == 0.0));
        let b = assemble_load(&m, &bump);
        let b2: Vec<C64> = b.iter().map(|z| z * 2.0).collect();
        let (u, u2) = (f.solve(&b).unwrap(), f.solve(&b2).unwrap());
        assert!(u.residual <= RESIDUAL_TOL);
        let scale = u.norms.h1;
        for (a, c) in u.values.iter().zip(&u2.values) {
            for k in 0..2 {
                assert!((a[k] * 2.0 - c[k]).norm() <= 1e-10 * scale);
            }
        }
        for nd in 0..m.nx {
            assert_eq!(u.values[nd], [C64::new(0.0, 0.0); 2]);
        }
    }

    #[test]
    fn galerkin_orthogonality() {
        let f = SurfaceFn::cosine_series(
            0.5,
            vec![crate::model::Mode::new(2, 0.08, 0.4)],
            5.0,
            0.0,
            1.0,
        )
        .unwrap();
        let m = Arc::new(build_mesh(&f, 2.0, 24, 8).unwrap());
        let p = ElasticParams::new(2.0, 1.0, 4.0).unwrap();
        let sys = assemble_b(&m, &p, default_n_max(&p, 5.0, m.nx)).unwrap();
        let b = assemble_load(&m, &bump);
        let u = solve(&sys, &b).unwrap();
        let au = sys.apply(&u.dofs());
        let gn = integrate_h1_sq(&m, &|x| (bump(x), [[C64::new(0.0, 0.0); 2]; 2])).sqrt();
        for (r, bi) in au.iter().zip(&b) {
            assert!((r - bi).norm() <= 1e-9 * gn);
        }
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let m = flat(4, 2);
        let p = ElasticParams::new(2.0, 1.0, 1.0).unwrap();
        let sys = assemble_b(&m, &p, 64).unwrap();
        assert!(matches!(
            solve(&sys, &[C64::new(1.0, 0.0)]),
            Err(Error::Solve(_))
        ));
    }
}
