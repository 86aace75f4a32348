use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::model::SurfaceFn;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeTag {
    Surface,
    Top,
    PeriodicPair,
}

impl EdgeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeTag::Surface => "SURFACE",
            EdgeTag::Top => "TOP",
            EdgeTag::PeriodicPair => "PERIODIC_PAIR",
        }
    }
}

/// A triangle by node index. `shift[k]` is added to the x₁ coordinate of
/// vertex `k`, so elements straddling the seam are geometrically contiguous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub v: [usize; 3],
    pub shift: [f64; 3],
}

/// Structured sheared triangulation of one periodic cell of the strip
/// `{f(x₁) < x₂ < h}`.
///
/// Node `(i, j)` has index `j·nx + i`, `i ∈ 0..nx`, `j ∈ 0..=ny`, at height
/// `f(x₁) + (j/ny)(h − f(x₁))`. Row `j = 0` lies on the surface and carries
/// the Dirichlet condition; the remaining `nx·ny` nodes are free, each with
/// two unknowns. This is the discrete space, a finite-dimensional subspace of
/// the continuous `V_h`.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub period: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<Triangle>,
    pub edges: Vec<([usize; 2], EdgeTag)>,
    pub top_nodes: Vec<usize>,
    pub surface: SurfaceFn,
}

pub fn build_mesh(f: &SurfaceFn, h: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if nx < 2 || ny < 2 {
        return Err(Error::Mesh(format!("need nx, ny >= 2, got {nx} x {ny}")));
    }
    if !(h > f.f_max) {
        return Err(Error::Mesh(format!(
            "h = {h} must exceed the surface bound {}",
            f.f_max
        )));
    }
    let period = f.period;
    if (f.value(period) - f.value(0.0)).abs() > 1e-12 {
        return Err(Error::Mesh("surface is not periodic over the cell".into()));
    }
    let dx = period / nx as f64;
    let mut nodes = Vec::with_capacity(nx * (ny + 1));
    for j in 0..=ny {
        let s = j as f64 / ny as f64;
        for i in 0..nx {
            let x1 = i as f64 * dx;
            let x2 = if j == ny {
                h
            } else {
                let b = f.value(x1);
                b + s * (h - b)
            };
            nodes.push([x1, x2]);
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (ip, wrap) = if i + 1 == nx {
                (0, period)
            } else {
                (i + 1, 0.0)
            };
            let (a, b, c, d) = (id(i, j), id(ip, j), id(ip, j + 1), id(i, j + 1));
            triangles.push(Triangle {
                v: [a, b, c],
                shift: [0.0, wrap, wrap],
            });
            triangles.push(Triangle {
                v: [a, c, d],
                shift: [0.0, wrap, 0.0],
            });
        }
    }
    let mut edges = Vec::with_capacity(2 * nx + ny);
    for i in 0..nx {
        edges.push(([id(i, 0), id((i + 1) % nx, 0)], EdgeTag::Surface));
    }
    for i in 0..nx {
        edges.push(([id(i, ny), id((i + 1) % nx, ny)], EdgeTag::Top));
    }
    for j in 0..ny {
        edges.push(([id(0, j), id(0, j + 1)], EdgeTag::PeriodicPair));
    }
    let top_nodes = (0..nx).map(|i| id(i, ny)).collect();
    let mesh = Mesh {
        period,
        h,
        nx,
        ny,
        nodes,
        triangles,
        edges,
        top_nodes,
        surface: f.clone(),
    };
    for (t, _) in mesh.triangles.iter().enumerate() {
        let a = mesh.signed_area(t);
        if !(a > 0.0) {
            return Err(Error::Mesh(format!("triangle {t} has signed area {a}")));
        }
    }
    Ok(mesh)
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn free_node_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Number of complex unknowns.
    pub fn dim(&self) -> usize {
        2 * self.free_node_count()
    }

    pub fn is_surface(&self, node: usize) -> bool {
        node < self.nx
    }

    pub fn is_top(&self, node: usize) -> bool {
        node >= self.nx * self.ny
    }

    /// Unknown index of component `c` at `node`; `None` on the surface.
    pub fn dof(&self, node: usize, c: usize) -> Option<usize> {
        if self.is_surface(node) {
            None
        } else {
            Some(2 * (node - self.nx) + c)
        }
    }

    /// Unwrapped vertex coordinates of triangle `t`.
    pub fn vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = &self.triangles[t];
        std::array::from_fn(|k| {
            let p = self.nodes[tri.v[k]];
            [p[0] + tri.shift[k], p[1]]
        })
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.vertices(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    /// Longest element edge.
    pub fn meshsize(&self) -> f64 {
        let mut hmax = 0.0f64;
        for t in 0..self.triangles.len() {
            let p = self.vertices(t);
            for k in 0..3 {
                let (a, b) = (p[k], p[(k + 1) % 3]);
                hmax = hmax.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        hmax
    }

    /// Heights of the seam column at `x₁ = 0` and at `x₁ = Λ` (from the surface
    /// function), row by row.
    pub fn periodic_pairs(&self) -> Vec<(f64, f64)> {
        (0..=self.ny)
            .map(|j| {
                let left = self.nodes[j * self.nx][1];
                let s = j as f64 / self.ny as f64;
                let b = self.surface.value(self.period);
                let right = if j == self.ny {
                    self.h
                } else {
                    b + s * (self.h - b)
                };
                (left, right)
            })
            .collect()
    }

    /// Tab-separated listing: `node id x1 x2`, `tri id a b c`, `edge a b TAG`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (i, p) in self.nodes.iter().enumerate() {
            writeln!(w, "node\t{i}\t{}\t{}", p[0], p[1])?;
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            writeln!(w, "tri\t{t}\t{}\t{}\t{}", tri.v[0], tri.v[1], tri.v[2])?;
        }
        for (e, tag) in &self.edges {
            writeln!(w, "edge\t{}\t{}\t{}", e[0], e[1], tag.as_str())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_flat_mesh_counts() {
        let f = SurfaceFn::flat(0.5, 5.0, 0.0, 1.0).unwrap();
        let m = build_mesh(&f, 1.5, 2, 2).unwrap();
        assert_eq!(m.node_count(), 6);
        assert_eq!(m.triangles.len(), 8);
        assert_eq!(m.free_node_count(), 4);
        assert_eq!(m.dim(), 8);
        assert_eq!(m.top_nodes, vec![4, 5]);
    }

    #[test]
    fn sawtooth_areas_positive() {
        let f = SurfaceFn::triangle(0.5, 0.125, 5, 5.0, 0.0, 1.0).unwrap();
        assert!((f.lipschitz - 0.5).abs() < 1e-12);
        let m = build_mesh(&f, 2.0, 37, 9).unwrap();
        for t in 0..m.triangles.len() {
            assert!(m.signed_area(t) > 0.0);
        }
        let total: f64 = (0..m.triangles.len()).map(|t| m.signed_area(t)).sum();
        // area under a symmetric sawtooth on a grid that does not resolve the kinks
        assert!((total - 5.0 * 1.5).abs() < 0.1);
    }

    #[test]
    fn boundary_heights_exact() {
        let f = SurfaceFn::cosine_series(
            0.5,
            vec![crate::model::Mode::new(1, 0.1, 0.3)],
            5.0,
            0.0,
            1.0,
        )
        .unwrap();
        let m = build_mesh(&f, 2.0, 16, 4).unwrap();
        for i in 0..m.nx {
            let p = m.nodes[i];
            assert!((p[1] - f.value(p[0])).abs() <= 1e-12);
            assert_eq!(m.nodes[m.top_nodes[i]][1], 2.0);
            assert_eq!(m.nodes[m.top_nodes[i]][0], i as f64 * 5.0 / 16.0);
        }
        for (l, r) in m.periodic_pairs() {
            assert!((l - r).abs() <= 1e-12);
        }
        let tags = |t| m.edges.iter().filter(|e| e.1 == t).count();
        assert_eq!(
            (
                tags(EdgeTag::Surface),
                tags(EdgeTag::Top),
                tags(EdgeTag::PeriodicPair)
            ),
            (16, 16, 4)
        );
    }

    #[test]
    fn rejects_bad_input() {
        let f = SurfaceFn::flat(0.5, 5.0, 0.0, 1.0).unwrap();
        assert!(matches!(build_mesh(&f, 1.5, 1, 4), Err(Error::Mesh(_))));
        assert!(matches!(build_mesh(&f, 0.9, 4, 4), Err(Error::Mesh(_))));
    }

    #[test]
    fn dump_has_one_record_per_entity() {
        let f = SurfaceFn::flat(0.5, 5.0, 0.0, 1.0).unwrap();
        let m = build_mesh(&f, 1.5, 2, 2).unwrap();
        let mut buf = Vec::new();
        m.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6 + 8 + m.edges.len());
        assert!(text.lines().all(|l| l.split('\t').count() >= 4));
    }
}
