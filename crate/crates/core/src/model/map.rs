//! Height condition, cutoff function and the domain map carrying the
//! reference strip onto a sampled one.

use crate::error::{Error, Result};
use crate::model::surface::SurfaceFn;

/// Surface plus measured height `h`; `Γ_h = {x₂ = h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub surface: SurfaceFn,
    pub h: f64,
}

impl Geometry {
    pub fn new(surface: SurfaceFn, h: f64) -> Result<Self> {
        if !(h > surface.f_max) {
            return Err(Error::Geometry(format!(
                "h = {h} must exceed M = {}",
                surface.f_max
            )));
        }
        Ok(Self { surface, h })
    }

    /// Extension height `H = h + 1`.
    pub fn h_ext(&self) -> f64 {
        self.h + 1.0
    }

    /// `γ = h - sup f₀`.
    pub fn gap(&self) -> f64 {
        self.h - self.surface.sup()
    }

    /// Returns `(γ, (M - m)/γ < 1)`.
    pub fn height_condition(&self) -> (f64, bool) {
        let gap = self.gap();
        let ok = (self.surface.f_max - self.surface.f_min) / gap < 1.0;
        (gap, ok)
    }
}

/// Piecewise-linear cutoff: 1 on `(-∞, δ]`, linear down to 0 at
/// `γ - δ/2`, 0 beyond. The plateau at 1 sits against the surface so that
/// the map moves the surface and leaves `Γ_h` fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFn {
    pub delta: f64,
    pub gap: f64,
    pub ramp_end: f64,
    pub max_slope: f64,
}

impl CutoffFn {
    pub fn new(delta: f64, gap: f64) -> Result<Self> {
        if !(delta > 0.0 && gap > 0.0) {
            return Err(Error::Cutoff(format!(
                "need delta > 0 and gap > 0 (delta = {delta}, gap = {gap})"
            )));
        }
        if delta >= gap / 4.0 {
            return Err(Error::Cutoff(format!(
                "delta = {delta} must be below gap/4 = {}",
                gap / 4.0
            )));
        }
        let ramp_end = gap - 0.5 * delta;
        Ok(Self {
            delta,
            gap,
            ramp_end,
            max_slope: 1.0 / (ramp_end - delta),
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= self.delta {
            1.0
        } else if t >= self.ramp_end {
            0.0
        } else {
            (self.ramp_end - t) * self.max_slope
        }
    }

    /// One-sided derivative, taken from the right at the kinks.
    pub fn slope(&self, t: f64) -> f64 {
        if t >= self.delta && t < self.ramp_end {
            -self.max_slope
        } else {
            0.0
        }
    }

    /// Kink locations `δ` and `γ - δ/2`.
    pub fn kinks(&self) -> [f64; 2] {
        [self.delta, self.ramp_end]
    }
}

/// Value and Jacobian data of the domain map at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPoint {
    pub x: [f64; 2],
    pub j1: f64,
    pub j2: f64,
    pub det: f64,
}

impl MapPoint {
    /// `𝓙_𝓗 = [[1, 0], [J₁, 1 + J₂]]`.
    pub fn jacobian(&self) -> [[f64; 2]; 2] {
        [[1.0, 0.0], [self.j1, 1.0 + self.j2]]
    }

    /// `𝓙_𝓗⁻¹ = [[1, 0], [-J₁/(1+J₂), 1/(1+J₂)]]`.
    pub fn jacobian_inv(&self) -> [[f64; 2]; 2] {
        [[1.0, 0.0], [-self.j1 / self.det, 1.0 / self.det]]
    }
}

/// `𝓗(y) = y + α(y₂ - f₀(y₁))·(f(y₁) - f₀(y₁))·e₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMap {
    pub f0: SurfaceFn,
    pub f_eta: SurfaceFn,
    pub cutoff: CutoffFn,
    pub h: f64,
}

impl DomainMap {
    pub fn new(f0: SurfaceFn, f_eta: SurfaceFn, cutoff: CutoffFn, h: f64) -> Result<Self> {
        if (f0.period - f_eta.period).abs() > 1e-14 * f0.period {
            return Err(Error::Geometry(format!(
                "reference period {} differs from sample period {}",
                f0.period, f_eta.period
            )));
        }
        Ok(Self {
            f0,
            f_eta,
            cutoff,
            h,
        })
    }

    pub fn identity(f0: SurfaceFn, cutoff: CutoffFn, h: f64) -> Self {
        Self {
            f_eta: f0.clone(),
            f0,
            cutoff,
            h,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.f0 == self.f_eta
    }

    /// Evaluates the map without the singularity check.
    pub fn eval_unchecked(&self, y: [f64; 2]) -> MapPoint {
        let base = self.f0.value(y[0]);
        let d = self.f_eta.value(y[0]) - base;
        let dd = self.f_eta.slope(y[0]) - self.f0.slope(y[0]);
        let t = y[1] - base;
        let a = self.cutoff.value(t);
        let da = self.cutoff.slope(t);
        let j1 = a * dd - da * self.f0.slope(y[0]) * d;
        let j2 = da * d;
        MapPoint {
            x: [y[0], y[1] + a * d],
            j1,
            j2,
            det: 1.0 + j2,
        }
    }

    pub fn eval(&self, y: [f64; 2]) -> Result<MapPoint> {
        let p = self.eval_unchecked(y);
        if !(p.det > 0.0) {
            return Err(Error::MapSingular(format!(
                "det J = {} at y = ({}, {})",
                p.det, y[0], y[1]
            )));
        }
        Ok(p)
    }

    fn grid(&self, resolution: usize) -> impl Iterator<Item = [f64; 2]> + '_ {
        let dx = self.f0.period / resolution as f64;
        (0..resolution).flat_map(move |i| {
            let y1 = i as f64 * dx;
            let base = self.f0.value(y1);
            (0..resolution).map(move |j| {
                let s = j as f64 / (resolution - 1) as f64;
                [y1, base + s * (self.h - base)]
            })
        })
    }

    /// Minimum of `det 𝓙_𝓗` over a `resolution × resolution` grid of the
    /// reference strip; any nonpositive value is an error.
    pub fn check_invertibility(&self, resolution: usize) -> Result<f64> {
        if resolution < 2 {
            return Err(Error::Parameter(
                "grid resolution must be at least 2".into(),
            ));
        }
        let mut min_det = f64::INFINITY;
        for y in self.grid(resolution) {
            min_det = min_det.min(self.eval(y)?.det);
        }
        Ok(min_det)
    }

    /// `max |J₂|` on the same grid as [`Self::check_invertibility`].
    pub fn max_abs_j2(&self, resolution: usize) -> f64 {
        self.grid(resolution.max(2))
            .map(|y| self.eval_unchecked(y).j2.abs())
            .fold(0.0, f64::max)
    }

    /// Rejects maps whose sampled `sup|J₂|` exceeds `1 - epsilon`.
    pub fn check_margin(&self, epsilon: f64, resolution: usize) -> Result<f64> {
        let sup = self.max_abs_j2(resolution);
        if sup > 1.0 - epsilon {
            return Err(Error::MapSingular(format!(
                "sup |J2| = {sup} exceeds 1 - epsilon = {}",
                1.0 - epsilon
            )));
        }
        Ok(sup)
    }

    /// `sup|α'|·sup|f - f₀| ≥ sup|J₂|`, from the cutoff slope alone.
    pub fn j2_bound(&self) -> f64 {
        self.cutoff.max_slope * self.f_eta.dist_sup(&self.f0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::surface::Mode;

    fn flat(level: f64) -> SurfaceFn {
        SurfaceFn::flat(level, 4.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn height_condition_examples() {
        let (gap, ok) = Geometry::new(flat(0.4), 2.4).unwrap().height_condition();
        assert!((gap - 2.0).abs() < 1e-15);
        assert!(ok);
        let (gap, ok) = Geometry::new(flat(0.4), 1.2).unwrap().height_condition();
        assert!((gap - 0.8).abs() < 1e-15);
        assert!(!ok);
        // ratio exactly one is not strict
        let (gap, ok) = Geometry::new(flat(0.9), 1.9).unwrap().height_condition();
        assert!((gap - 1.0).abs() < 1e-15);
        assert!(!ok);
        assert!(matches!(
            Geometry::new(flat(0.4), 1.0),
            Err(Error::Geometry(_))
        ));
        assert!(matches!(
            Geometry::new(flat(0.4), 0.8),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn cutoff_shape() {
        let c = CutoffFn::new(0.2, 2.0).unwrap();
        assert_eq!(c.value(0.0), 1.0);
        assert_eq!(c.value(2.0), 0.0);
        assert!((c.value(1.0) - 0.9 / 1.7).abs() < 1e-15);
        assert!((c.value(1.0) - 0.529412).abs() < 1e-6);
        assert!((c.slope(1.0) + 1.0 / 1.7).abs() < 1e-15);
        assert!((c.slope(1.0) + 0.588235).abs() < 1e-6);
        assert!(c.max_slope < 1.0 / (2.0 - 2.0 * 0.2));
        assert!(c.max_slope * (c.gap - 2.0 * c.delta) < 1.0);
        assert!(matches!(CutoffFn::new(0.5, 2.0), Err(Error::Cutoff(_))));
    }

    #[test]
    fn cutoff_monotone_lipschitz() {
        let c = CutoffFn::new(0.1, 1.3).unwrap();
        let mut prev = c.value(-1.0);
        for i in 0..2000 {
            let t = -1.0 + 3.0 * i as f64 / 2000.0;
            let v = c.value(t);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev);
            assert!(prev - v <= c.max_slope * 3.0 / 2000.0 + 1e-14);
            prev = v;
        }
    }

    #[test]
    fn identity_map() {
        let c = CutoffFn::new(0.2, 2.0).unwrap();
        let m = DomainMap::identity(flat(0.4), c, 2.4);
        let p = m.eval([0.3, 1.0]).unwrap();
        assert_eq!(p.x, [0.3, 1.0]);
        assert_eq!((p.j1, p.j2, p.det), (0.0, 0.0, 1.0));
        assert_eq!(m.check_invertibility(16).unwrap(), 1.0);
    }

    #[test]
    fn flat_shift_map() {
        let c = CutoffFn::new(0.2, 2.0).unwrap();
        let m = DomainMap::new(flat(0.4), flat(0.6), c, 2.4).unwrap();
        let p = m.eval([0.0, 1.0]).unwrap();
        // t = 0.6, alpha = 1.3/1.7, x2 = 1 + 0.2 alpha
        assert!((p.x[1] - (1.0 + 0.2 * 1.3 / 1.7)).abs() < 1e-15);
        assert!((p.x[1] - 1.152941).abs() < 1e-6);
        assert_eq!(p.j1, 0.0);
        assert!((p.j2 + 0.2 / 1.7).abs() < 1e-15);
        assert!((p.det - 0.882353).abs() < 1e-6);
        // Γ_h is fixed
        assert_eq!(m.eval([1.7, 2.4]).unwrap().x, [1.7, 2.4]);
        let min_det = m.check_invertibility(64).unwrap();
        assert!((min_det - (1.0 - 0.2 / 1.7)).abs() < 1e-14);
    }

    #[test]
    fn surface_is_carried_onto_sample() {
        let f0 =
            SurfaceFn::cosine_series(0.4, vec![Mode::new(1, 0.1, 0.0)], 4.0, 0.0, 1.0).unwrap();
        let f1 = f0
            .perturbed(&[Mode::new(2, 0.05, 0.3), Mode::new(3, 0.02, 1.0)])
            .unwrap();
        let c = CutoffFn::new(0.1, 2.4 - f0.sup()).unwrap();
        let m = DomainMap::new(f0.clone(), f1.clone(), c, 2.4).unwrap();
        let mut max_dev = 0.0f64;
        for i in 0..1000 {
            let y1 = 4.0 * i as f64 / 1000.0;
            let on_s = m.eval([y1, f0.value(y1)]).unwrap();
            max_dev = max_dev.max((on_s.x[1] - f1.value(y1)).abs());
            let top = m.eval([y1, 2.4]).unwrap();
            assert_eq!(top.x, [y1, 2.4]);
        }
        assert!(max_dev < 1e-12);
    }

    #[test]
    fn default_cutoff_j2_bound() {
        let f0 = flat(0.5);
        let f1 = f0.perturbed(&[Mode::new(1, 0.3, 0.0)]).unwrap();
        let h = 2.0;
        let gap = h - f0.sup();
        let c = CutoffFn::new(0.1, gap).unwrap();
        let m = DomainMap::new(f0, f1, c, h).unwrap();
        let sup_j2 = m.max_abs_j2(256);
        assert!(sup_j2 <= (1.0 - 0.0) / (gap - 0.15) + 1e-12);
        assert!(sup_j2 <= m.j2_bound() + 1e-12);
        let min_det = m.check_invertibility(256).unwrap();
        assert!(min_det >= 1.0 - sup_j2 - 1e-14);
        assert!(m.check_margin(0.05, 256).is_ok());
    }

    #[test]
    fn oversized_perturbation_is_singular() {
        let f0 = SurfaceFn::flat(0.5, 4.0, -10.0, 10.0).unwrap();
        let c = CutoffFn::new(0.2, 2.0).unwrap();
        // |J2| = 1.7·amp·max_slope... exceed 1 once amp > 1/max_slope = 1.7
        let f1 = f0.perturbed(&[Mode::new(1, 2.0, 0.0)]).unwrap();
        let m = DomainMap::new(f0, f1, c, 2.5).unwrap();
        assert!(matches!(
            m.check_invertibility(128),
            Err(Error::MapSingular(_))
        ));
    }

    #[test]
    fn jacobian_inverse() {
        let f0 =
            SurfaceFn::cosine_series(0.4, vec![Mode::new(1, 0.1, 0.0)], 4.0, 0.0, 1.0).unwrap();
        let f1 = f0.perturbed(&[Mode::new(2, 0.05, 0.3)]).unwrap();
        let c = CutoffFn::new(0.1, 2.4 - f0.sup()).unwrap();
        let m = DomainMap::new(f0, f1, c, 2.4).unwrap();
        let p = m.eval([1.3, 0.9]).unwrap();
        let (a, b) = (p.jacobian(), p.jacobian_inv());
        for i in 0..2 {
            for j in 0..2 {
                let s: f64 = (0..2).map(|k| a[i][k] * b[k][j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        // J1 and J2 agree with finite differences of x2
        let h = 1e-6;
        let d1 = (m.eval([1.3 + h, 0.9]).unwrap().x[1] - m.eval([1.3 - h, 0.9]).unwrap().x[1])
            / (2.0 * h);
        let d2 = (m.eval([1.3, 0.9 + h]).unwrap().x[1] - m.eval([1.3, 0.9 - h]).unwrap().x[1])
            / (2.0 * h);
        assert!((d1 - p.j1).abs() < 1e-7);
        assert!((d2 - (1.0 + p.j2)).abs() < 1e-7);
    }
}
