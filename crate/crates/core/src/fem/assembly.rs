use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::mesh::Mesh;
use crate::dtn::{hat_factor, symbol_matrix, xi_n};
use crate::error::{Error, Result};
use crate::model::{DomainMap, ElasticParams};
use crate::quadrature::triangle_deg5;

type C64 = Complex64;

/// Compressed sparse column storage with summed duplicates and sorted rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Csc {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<C64>,
}

impl Csc {
    /// Sorts by (column, row) with a stable sort and sums runs in input
    /// order, so the result depends only on the triplet sequence.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(t.len() / 4);
        let mut values: Vec<C64> = Vec::with_capacity(t.len() / 4);
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        Self {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let rows = &self.row_idx[self.col_ptr[c]..self.col_ptr[c + 1]];
        match rows.binary_search(&r) {
            Ok(k) => self.values[self.col_ptr[c] + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |c| {
            (self.col_ptr[c]..self.col_ptr[c + 1])
                .map(move |k| (self.row_idx[k], c, self.values[k]))
        })
    }

    /// `y += A x`.
    pub fn mul_add(&self, x: &[C64], y: &mut [C64]) {
        for c in 0..self.n {
            let xc = x[c];
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
    }
}

/// Dense coupling among the top-node unknowns, row-major over `dofs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DtnBlock {
    pub dofs: Vec<usize>,
    pub values: Vec<C64>,
}

impl DtnBlock {
    pub fn size(&self) -> usize {
        self.dofs.len()
    }

    pub fn at(&self, a: usize, b: usize) -> C64 {
        self.values[a * self.dofs.len() + b]
    }
}

/// Assembled discrete form: `A[i][j] = B(φ_j, φ_i)` split into the sparse
/// domain part and the dense DtN coupling.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub mesh: Arc<Mesh>,
    pub params: ElasticParams,
    pub n_max: i64,
    pub domain: Csc,
    pub dtn: DtnBlock,
}

impl SparseSystem {
    pub fn dim(&self) -> usize {
        self.domain.n
    }

    /// Entry of the DtN block at global indices; zero off the top unknowns.
    pub fn dtn_entry(&self, r: usize, c: usize) -> C64 {
        let pos = |g: usize| self.dtn.dofs.iter().position(|&d| d == g);
        match (pos(r), pos(c)) {
            (Some(a), Some(b)) => self.dtn.at(a, b),
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        self.domain.mul_add(x, &mut y);
        let m = self.dtn.size();
        for a in 0..m {
            let mut s = C64::new(0.0, 0.0);
            for b in 0..m {
                s += self.dtn.values[a * m + b] * x[self.dtn.dofs[b]];
            }
            y[self.dtn.dofs[a]] += s;
        }
        y
    }

    /// `B(u, v) = Σ_i conj(v_i)·(A u)_i`.
    pub fn form(&self, u: &[C64], v: &[C64]) -> C64 {
        self.apply(u).iter().zip(v).map(|(a, b)| a * b.conj()).sum()
    }

    /// Domain part and DtN block merged into one matrix.
    pub fn merged(&self) -> Csc {
        let mut t: Vec<(usize, usize, C64)> = self.domain.iter().collect();
        let m = self.dtn.size();
        for a in 0..m {
            for b in 0..m {
                t.push((
                    self.dtn.dofs[a],
                    self.dtn.dofs[b],
                    self.dtn.values[a * m + b],
                ));
            }
        }
        Csc::from_triplets(self.dim(), t)
    }
}

/// Default Fourier truncation for the DtN block: every propagating mode with
/// a wide margin, and 32 alias bands of the top grid.
pub fn default_n_max(p: &ElasticParams, period: f64, nx: usize) -> i64 {
    let prop = (4.0 * p.k_s * period / (2.0 * PI)).ceil() as i64;
    prop.max(32 * nx as i64)
}

/// Barycentric gradients and area of a triangle.
pub fn element_gradients(v: &[[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let area2 =
        (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    let g = std::array::from_fn(|k| {
        let (a, b) = (v[(k + 1) % 3], v[(k + 2) % 3]);
        [(a[1] - b[1]) / area2, (b[0] - a[0]) / area2]
    });
    (g, 0.5 * area2)
}

pub fn bary_point(v: &[[f64; 2]; 3], l: &[f64; 3]) -> [f64; 2] {
    [
        l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
        l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
    ]
}

/// 6×6 element matrix of `ℰ(φ_b, φ_a) − ω² φ_b·φ_a` for local unknowns
/// `a = 2k + c`, from constant physical gradients `g`, and the mass factor
/// `∫λ_kλ_l`.
fn local_matrix(
    g: &[[f64; 2]; 3],
    mass: &[[f64; 3]; 3],
    weight: f64,
    p: &ElasticParams,
) -> [[f64; 6]; 6] {
    let mut k = [[0.0; 6]; 6];
    let lm = p.lambda + p.mu;
    for a in 0..6 {
        let (ka, ca) = (a / 2, a % 2);
        for b in 0..6 {
            let (kb, cb) = (b / 2, b % 2);
            let mut v = lm * g[ka][ca] * g[kb][cb];
            if ca == cb {
                v += p.mu * (g[ka][0] * g[kb][0] + g[ka][1] * g[kb][1]);
            }
            v *= weight;
            if ca == cb {
                v -= p.omega * p.omega * mass[ka][kb];
            }
            k[a][b] = v;
        }
    }
    k
}

/// Element matrix of the plain form: mid-edge rule, exact for P1.
pub fn element_matrix(v: &[[f64; 2]; 3], p: &ElasticParams) -> [[f64; 6]; 6] {
    let (g, area) = element_gradients(v);
    let mids = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
    let mut mass = [[0.0; 3]; 3];
    for l in &mids {
        for a in 0..3 {
            for b in 0..3 {
                mass[a][b] += area / 3.0 * l[a] * l[b];
            }
        }
    }
    local_matrix(&g, &mass, area, p)
}

/// `(𝓙⁻¹𝓙⁻ᵀ·det, det)` of the map at reference point `y`.
pub fn transformed_coefficients(map: &DomainMap, y: [f64; 2]) -> Result<([[f64; 2]; 2], f64)> {
    let mp = map.eval(y)?;
    let ji = mp.jacobian_inv();
    let mut k = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            k[a][b] = (ji[a][0] * ji[b][0] + ji[a][1] * ji[b][1]) * mp.det;
        }
    }
    Ok((k, mp.det))
}

/// Element matrix of the transformed form on a reference triangle: the
/// physical gradients are `𝓙⁻ᵀ∇λ_k`, weighted by `det 𝓙` at each point of the
/// degree-5 rule.
pub fn element_matrix_transformed(
    v: &[[f64; 2]; 3],
    p: &ElasticParams,
    map: &DomainMap,
) -> Result<[[f64; 6]; 6]> {
    let (g, area) = element_gradients(v);
    let mut out = [[0.0; 6]; 6];
    for (l, w) in triangle_deg5() {
        let y = bary_point(v, &l);
        let mp = map.eval(y)?;
        let ji = mp.jacobian_inv();
        let gp: [[f64; 2]; 3] = std::array::from_fn(|k| {
            [
                ji[0][0] * g[k][0] + ji[1][0] * g[k][1],
                ji[0][1] * g[k][0] + ji[1][1] * g[k][1],
            ]
        });
        let wd = w * area * mp.det;
        let mut mass = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                mass[a][b] = wd * l[a] * l[b];
            }
        }
        let k = local_matrix(&gp, &mass, wd, p);
        for a in 0..6 {
            for b in 0..6 {
                out[a][b] += k[a][b];
            }
        }
    }
    Ok(out)
}

fn scatter(mesh: &Mesh, t: usize, k: &[[f64; 6]; 6], out: &mut Vec<(usize, usize, C64)>) {
    let tri = &mesh.triangles[t];
    for a in 0..6 {
        let Some(r) = mesh.dof(tri.v[a / 2], a % 2) else {
            continue;
        };
        for b in 0..6 {
            let Some(c) = mesh.dof(tri.v[b / 2], b % 2) else {
                continue;
            };
            out.push((r, c, C64::new(k[a][b], 0.0)));
        }
    }
}

/// Dense DtN block: `−Λ Σ_{|n|≤n_max} (s_n²/nx²) e^{iξ_n(x_i−x_k)} M(ξ_n)`
/// between top nodes `i` (row) and `k` (column), with `s_n` the P1 hat
/// attenuation. Circulant in `i − k`.
pub fn dtn_block(mesh: &Mesh, p: &ElasticParams, n_max: i64) -> Result<DtnBlock> {
    let nx = mesh.nx;
    let mut folded = vec![[[C64::new(0.0, 0.0); 2]; 2]; nx];
    for n in -n_max..=n_max {
        let s = hat_factor(n, nx);
        if s == 0.0 {
            continue;
        }
        let m = symbol_matrix(xi_n(n, mesh.period), p)?.entries;
        let r = n.rem_euclid(nx as i64) as usize;
        for c in 0..2 {
            for d in 0..2 {
                folded[r][c][d] += m[c][d] * (s * s);
            }
        }
    }
    let roots: Vec<C64> = (0..nx)
        .map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / nx as f64))
        .collect();
    let scale = -mesh.period / (nx * nx) as f64;
    let mut circ = vec![[[C64::new(0.0, 0.0); 2]; 2]; nx];
    for (m, cm) in circ.iter_mut().enumerate() {
        for (r, fr) in folded.iter().enumerate() {
            let e = roots[(r * m) % nx];
            for c in 0..2 {
                for d in 0..2 {
                    cm[c][d] += fr[c][d] * e;
                }
            }
        }
        for row in cm.iter_mut() {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
    }
    let dofs: Vec<usize> = mesh
        .top_nodes
        .iter()
        .flat_map(|&nd| [mesh.dof(nd, 0).unwrap(), mesh.dof(nd, 1).unwrap()])
        .collect();
    let size = dofs.len();
    let mut values = vec![C64::new(0.0, 0.0); size * size];
    for i in 0..nx {
        for k in 0..nx {
            let cm = &circ[(i + nx - k) % nx];
            for c in 0..2 {
                for d in 0..2 {
                    values[(2 * i + c) * size + 2 * k + d] = cm[c][d];
                }
            }
        }
    }
    Ok(DtnBlock { dofs, values })
}

/// Discretization of `B(u, v) = ∫ ℰ(u, v̄) − ω²u·v̄ − ∫_{Γ_h} 𝒯u·v̄`.
pub fn assemble_b(mesh: &Arc<Mesh>, p: &ElasticParams, n_max: i64) -> Result<SparseSystem> {
    let trips: Vec<(usize, usize, C64)> = (0..mesh.triangles.len())
        .into_par_iter()
        .flat_map_iter(|t| {
            let mut out = Vec::with_capacity(36);
            scatter(mesh, t, &element_matrix(&mesh.vertices(t), p), &mut out);
            out
        })
        .collect();
    let domain = Csc::from_triplets(mesh.dim(), trips);
    let dtn = dtn_block(mesh, p, n_max)?;
    Ok(SparseSystem {
        mesh: mesh.clone(),
        params: *p,
        n_max,
        domain,
        dtn,
    })
}

/// Discretization of the transformed form on the reference mesh. The DtN
/// block is the untransformed one since the map fixes `Γ_h`.
pub fn assemble_b_transformed(
    mesh: &Arc<Mesh>,
    p: &ElasticParams,
    map: &DomainMap,
    n_max: i64,
) -> Result<SparseSystem> {
    if (map.h - mesh.h).abs() > 1e-12 {
        return Err(Error::Mesh(format!(
            "map height {} differs from mesh height {}",
            map.h, mesh.h
        )));
    }
    let per: Vec<Result<Vec<(usize, usize, C64)>>> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let mut out = Vec::with_capacity(36);
            scatter(
                mesh,
                t,
                &element_matrix_transformed(&mesh.vertices(t), p, map)?,
                &mut out,
            );
            Ok(out)
        })
        .collect();
    let mut trips = Vec::with_capacity(36 * per.len());
    for r in per {
        trips.extend(r?);
    }
    let domain = Csc::from_triplets(mesh.dim(), trips);
    let dtn = dtn_block(mesh, p, n_max)?;
    Ok(SparseSystem {
        mesh: mesh.clone(),
        params: *p,
        n_max,
        domain,
        dtn,
    })
}

pub type VectorField<'a> = dyn Fn([f64; 2]) -> [C64; 2] + Sync + 'a;

fn load_impl(mesh: &Mesh, g: &VectorField, map: Option<&DomainMap>) -> Result<Vec<C64>> {
    let rule = triangle_deg5();
    let per: Vec<Result<[[C64; 2]; 3]>> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let v = mesh.vertices(t);
            let (_, area) = element_gradients(&v);
            let mut acc = [[C64::new(0.0, 0.0); 2]; 3];
            for (l, w) in &rule {
                let y = bary_point(&v, l);
                let (x, det) = match map {
                    Some(m) => {
                        let mp = m.eval(y)?;
                        (mp.x, mp.det)
                    }
                    None => (y, 1.0),
                };
                let gv = g(x);
                for k in 0..3 {
                    for c in 0..2 {
                        acc[k][c] -= gv[c] * (w * area * det * l[k]);
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut b = vec![C64::new(0.0, 0.0); mesh.dim()];
    for (t, r) in per.into_iter().enumerate() {
        let acc = r?;
        let tri = &mesh.triangles[t];
        for k in 0..3 {
            for c in 0..2 {
                if let Some(d) = mesh.dof(tri.v[k], c) {
                    b[d] += acc[k][c];
                }
            }
        }
    }
    Ok(b)
}

/// Entries `−∫ g·φ_i` (basis functions are real).
pub fn assemble_load(mesh: &Mesh, g: &VectorField) -> Vec<C64> {
    load_impl(mesh, g, None).expect("plain load has no failure mode")
}

/// Entries `−∫ g(𝓗(y))·φ_i(y) det 𝓙_𝓗(y) dy` on the reference mesh.
pub fn assemble_load_transformed(
    mesh: &Mesh,
    g: &VectorField,
    map: &DomainMap,
) -> Result<Vec<C64>> {
    load_impl(mesh, g, Some(map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_mesh;
    use crate::model::{CutoffFn, SurfaceFn};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn flat_mesh(nx: usize, ny: usize) -> Arc<Mesh> {
        let f = SurfaceFn::flat(0.5, 5.0, 0.0, 1.0).unwrap();
        Arc::new(build_mesh(&f, 2.0, nx, ny).unwrap())
    }

    fn wavy_mesh(nx: usize, ny: usize) -> Arc<Mesh> {
        let f = SurfaceFn::cosine_series(
            0.5,
            vec![crate::model::Mode::new(1, 0.1, 0.0)],
            5.0,
            0.0,
            1.0,
        )
        .unwrap();
        Arc::new(build_mesh(&f, 2.0, nx, ny).unwrap())
    }

    #[test]
    fn hand_element_stiffness() {
        // right triangle (0,0), (1,0), (0,1), λ = μ = 1, ω tiny:
        // ∇λ₀ = (−1,−1), ∇λ₁ = (1,0), ∇λ₂ = (0,1), area ½.
        let p = ElasticParams::new(1.0, 1.0, 1e-9).unwrap();
        let k = element_matrix(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], &p);
        let g = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        for a in 0..6 {
            for b in 0..6 {
                let (ka, ca, kb, cb) = (a / 2, a % 2, b / 2, b % 2);
                let dot = g[ka][0] * g[kb][0] + g[ka][1] * g[kb][1];
                let e = 0.5 * (if ca == cb { dot } else { 0.0 } + 2.0 * g[ka][ca] * g[kb][cb]);
                assert!((k[a][b] - e).abs() < 1e-15, "{a} {b}");
            }
        }
        // spot values: u = φ₀e₁ has ℰ = ½(2 + 2·1) = 2
        assert!((k[0][0] - 2.0).abs() < 1e-15);
        assert!((k[1][2] - (-1.0)).abs() < 1e-15);
        // rigid translations are in the kernel of the stiffness
        for c in 0..2 {
            for a in 0..6 {
                let s: f64 = (0..3).map(|kb| k[a][2 * kb + c]).sum();
                assert!(s.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mass_is_exact() {
        let p = ElasticParams::new(1.0, 1.0, 1.0).unwrap();
        let p0 = ElasticParams::new(1.0, 1.0, 1e-300).unwrap();
        let v = [[0.2, 0.1], [1.3, 0.4], [0.5, 1.2]];
        let (k1, k0) = (element_matrix(&v, &p), element_matrix(&v, &p0));
        let (_, area) = element_gradients(&v);
        for a in 0..3 {
            for b in 0..3 {
                let m = k0[2 * a][2 * b] - k1[2 * a][2 * b];
                let e = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                assert!((m - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn domain_block_is_hermitian() {
        let m = wavy_mesh(12, 5);
        let p = ElasticParams::new(2.0, 1.0, 3.0).unwrap();
        let s = assemble_b(&m, &p, 64).unwrap();
        for (r, c, v) in s.domain.iter() {
            assert!((v - s.domain.get(c, r).conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn static_limit_is_positive() {
        let m = wavy_mesh(10, 4);
        let p = ElasticParams::new(2.0, 1.0, 1e-6).unwrap();
        let s = assemble_b(&m, &p, 200).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let u: Vec<C64> = (0..s.dim())
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let e = s.form(&u, &u);
            assert!(e.re > 0.0, "{e}");
        }
    }

    #[test]
    fn dtn_block_only_touches_top() {
        let m = flat_mesh(8, 3);
        let p = ElasticParams::new(2.0, 1.0, 2.0).unwrap();
        let s = assemble_b(&m, &p, 100).unwrap();
        for r in 0..s.dim() {
            for c in 0..s.dim() {
                let top = |d: usize| m.is_top(m.nx + d / 2);
                if !(top(r) && top(c)) {
                    assert_eq!(s.dtn_entry(r, c), C64::new(0.0, 0.0));
                }
            }
        }
        assert_eq!(s.dtn.size(), 2 * m.nx);
    }

    #[test]
    fn dtn_block_matches_direct_sum() {
        // explicit double sum over modes for two entries
        let m = flat_mesh(6, 2);
        let p = ElasticParams::new(2.0, 1.0, 2.5).unwrap();
        let n_max = 40;
        let b = dtn_block(&m, &p, n_max).unwrap();
        let nx = m.nx;
        for (i, k, c, d) in [(0, 0, 0, 0), (1, 4, 0, 1), (5, 2, 1, 1)] {
            let (xi_, xk) = (i as f64 * 5.0 / nx as f64, k as f64 * 5.0 / nx as f64);
            let mut s = C64::new(0.0, 0.0);
            for n in -n_max..=n_max {
                let xi = 2.0 * PI * n as f64 / 5.0;
                let sn = hat_factor(n, nx);
                let mm = symbol_matrix(xi, &p).unwrap().entries;
                s +=
                    mm[c][d] * (sn * sn / (nx * nx) as f64) * C64::from_polar(1.0, xi * (xi_ - xk));
            }
            s *= -5.0;
            assert!((b.at(2 * i + c, 2 * k + d) - s).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_map_reproduces_plain_system() {
        let m = wavy_mesh(12, 6);
        let p = ElasticParams::new(2.0, 1.0, 3.0).unwrap();
        let cut = CutoffFn::new(0.1, 2.0 - 0.6).unwrap();
        let map = DomainMap::identity(m.surface.clone(), cut, 2.0);
        let a = assemble_b(&m, &p, 96).unwrap();
        let b = assemble_b_transformed(&m, &p, &map, 96).unwrap();
        assert_eq!(a.domain.col_ptr, b.domain.col_ptr);
        assert_eq!(a.domain.row_idx, b.domain.row_idx);
        for (x, y) in a.domain.values.iter().zip(&b.domain.values) {
            assert!((x - y).norm() < 1e-14);
        }
        assert_eq!(a.dtn, b.dtn);
        let g = |x: [f64; 2]| [C64::new(x[0].sin(), x[1]), C64::new(1.0, -x[0] * x[1])];
        let (la, lb) = (
            assemble_load(&m, &g),
            assemble_load_transformed(&m, &g, &map).unwrap(),
        );
        for (x, y) in la.iter().zip(&lb) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn flat_shift_coefficients() {
        // f0 = 0.5, f = 0.6, cutoff δ = 0.1 on gap 1.5: ramp slope −1/1.35
        // so inside the ramp J₂ = −0.1/1.35, det = 1 − 0.0740740…
        let f0 = SurfaceFn::flat(0.5, 5.0, 0.0, 1.0).unwrap();
        let f1 = SurfaceFn::flat(0.6, 5.0, 0.0, 1.0).unwrap();
        let cut = CutoffFn::new(0.1, 1.5).unwrap();
        let map = DomainMap::new(f0, f1, cut, 2.0).unwrap();
        let det = 1.0 - 0.1 / 1.35;
        let (k, d) = transformed_coefficients(&map, [1.0, 1.2]).unwrap();
        assert!((d - det).abs() < 1e-14);
        assert!((k[0][0] - det).abs() < 1e-14);
        assert!(k[0][1].abs() < 1e-14 && k[1][0].abs() < 1e-14);
        assert!((k[1][1] - 1.0 / det).abs() < 1e-14);
        let (k2, d2) = transformed_coefficients(&map, [3.7, 1.0]).unwrap();
        assert!((d2 - d).abs() < 1e-14 && (k2[1][1] - k[1][1]).abs() < 1e-14);
        // plateau near the surface is a rigid shift
        let (kp, dp) = transformed_coefficients(&map, [2.0, 0.55]).unwrap();
        assert_eq!((kp, dp), ([[1.0, 0.0], [0.0, 1.0]], 1.0));
    }

    #[test]
    fn constant_load_on_one_element() {
        let m = flat_mesh(6, 4);
        let t = m
            .triangles
            .iter()
            .position(|tri| tri.v.iter().all(|&v| !m.is_surface(v) && !m.is_top(v)))
            .unwrap();
        let v = m.vertices(t);
        let gbar = [C64::new(0.7, -0.2), C64::new(-1.1, 0.4)];
        let area = m.signed_area(t);
        let (gr, _) = element_gradients(&v);
        // indicator of the open element; quadrature points are interior
        let inside = move |x: [f64; 2]| {
            let l1 = gr[1][0] * (x[0] - v[0][0]) + gr[1][1] * (x[1] - v[0][1]);
            let l2 = gr[2][0] * (x[0] - v[0][0]) + gr[2][1] * (x[1] - v[0][1]);
            [1.0 - l1 - l2, l1, l2].iter().all(|&a| a > 1e-9)
        };
        let g = move |x: [f64; 2]| {
            if inside(x) {
                gbar
            } else {
                [C64::new(0.0, 0.0); 2]
            }
        };
        let b = assemble_load(&m, &g);
        for &nd in &m.triangles[t].v {
            for c in 0..2 {
                let e = -gbar[c] * (area / 3.0);
                assert!((b[m.dof(nd, c).unwrap()] - e).norm() < 1e-14);
            }
        }
        let nz = b.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nz, 6);
        assert!(assemble_load(&m, &|_| [C64::new(0.0, 0.0); 2])
            .iter()
            .all(|z| z.norm() == 0.0));
    }

    #[test]
    fn csc_merges_duplicates_in_order() {
        let t = vec![
            (1, 0, C64::new(1.0, 0.0)),
            (0, 0, C64::new(2.0, 0.0)),
            (1, 0, C64::new(0.5, 1.0)),
            (0, 1, C64::new(3.0, 0.0)),
        ];
        let a = Csc::from_triplets(2, t);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(1, 0), C64::new(1.5, 1.0));
        assert_eq!(a.get(1, 1), C64::new(0.0, 0.0));
        let mut y = vec![C64::new(0.0, 0.0); 2];
        a.mul_add(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)], &mut y);
        assert_eq!(y, vec![C64::new(5.0, 0.0), C64::new(1.5, 1.0)]);
    }
}
