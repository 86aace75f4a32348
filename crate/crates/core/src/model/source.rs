//! Smooth compactly supported bump sources.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Per-sample perturbation of a source: the center moves by up to
/// `center_shift` in each coordinate and the amplitude is scaled by
/// `1 + amplitude_rel·u`, `u ~ U[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub center_shift: f64,
    pub amplitude_rel: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: [Complex64; 2],
    pub jitter: Option<Jitter>,
}

/// `g(x) = A·exp(1 - 1/(1 - |x - c|²/r²))` inside the disk, zero outside.
/// Peak value `|A|` at the center; C^∞ with support in the closed disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: [Complex64; 2],
    pub period: f64,
}

impl SourceSpec {
    /// Builds the source, optionally jittered for sample `index`. The disk
    /// (including the worst-case jitter) must lie strictly inside
    /// `{f_max < x₂ < h}`.
    pub fn make(&self, f_max: f64, h: f64, period: f64, index: Option<u64>) -> Result<Source> {
        if !(self.radius > 0.0) {
            return Err(Error::SourceSupport(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        let slack = self.jitter.map_or(0.0, |j| j.center_shift.abs());
        let lo = self.center[1] - self.radius - slack;
        let hi = self.center[1] + self.radius + slack;
        if !(lo > f_max && hi < h) {
            return Err(Error::SourceSupport(format!(
                "disk spans x2 in [{lo}, {hi}], must lie inside ({f_max}, {h})"
            )));
        }
        if 2.0 * (self.radius + slack) >= period {
            return Err(Error::SourceSupport(format!(
                "disk diameter {} does not fit in the period {period}",
                2.0 * (self.radius + slack)
            )));
        }
        let mut src = Source {
            center: self.center,
            radius: self.radius,
            amplitude: self.amplitude,
            period,
        };
        if let (Some(j), Some(index)) = (self.jitter, index) {
            let mut rng = ChaCha8Rng::seed_from_u64(j.seed);
            rng.set_stream(index);
            let d1: f64 = rng.random_range(-1.0..=1.0);
            let d2: f64 = rng.random_range(-1.0..=1.0);
            let s: f64 = rng.random_range(-1.0..=1.0);
            src.center = [
                self.center[0] + j.center_shift * d1,
                self.center[1] + j.center_shift * d2,
            ];
            let scale = 1.0 + j.amplitude_rel * s;
            src.amplitude = [self.amplitude[0] * scale, self.amplitude[1] * scale];
        }
        Ok(src)
    }
}

impl Source {
    /// Periodic offset of `x` from the center, in `(-Λ/2, Λ/2]` along x₁.
    fn offset(&self, x: [f64; 2]) -> [f64; 2] {
        let mut d1 = (x[0] - self.center[0]).rem_euclid(self.period);
        if d1 > 0.5 * self.period {
            d1 -= self.period;
        }
        [d1, x[1] - self.center[1]]
    }

    /// Scalar bump profile at squared normalized radius `q`.
    pub fn profile(q: f64) -> f64 {
        if q >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - q)).exp()
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> [Complex64; 2] {
        let d = self.offset(x);
        let q = (d[0] * d[0] + d[1] * d[1]) / (self.radius * self.radius);
        let b = Self::profile(q);
        [self.amplitude[0] * b, self.amplitude[1] * b]
    }

    /// Gradient rows: `grad[c] = ∇g_c`.
    pub fn grad(&self, x: [f64; 2]) -> [[Complex64; 2]; 2] {
        let d = self.offset(x);
        let r2 = self.radius * self.radius;
        let q = (d[0] * d[0] + d[1] * d[1]) / r2;
        if q >= 1.0 {
            return [[Complex64::new(0.0, 0.0); 2]; 2];
        }
        let b = Self::profile(q);
        // db/dq = -b/(1-q)^2, dq/dx = 2 d / r^2
        let dbdq = -b / ((1.0 - q) * (1.0 - q));
        let gb = [dbdq * 2.0 * d[0] / r2, dbdq * 2.0 * d[1] / r2];
        [
            [self.amplitude[0] * gb[0], self.amplitude[0] * gb[1]],
            [self.amplitude[1] * gb[0], self.amplitude[1] * gb[1]],
        ]
    }

    pub fn scaled(&self, factor: f64) -> Source {
        Source {
            amplitude: [self.amplitude[0] * factor, self.amplitude[1] * factor],
            ..*self
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude.iter().all(|a| a.norm() == 0.0)
    }
}
