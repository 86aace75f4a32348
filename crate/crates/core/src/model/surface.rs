//! Periodic surface profiles and the seeded random surface family.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Number of equispaced samples used to validate bounds and Lipschitz constants.
pub const VALIDATION_SAMPLES: usize = 4096;

/// One cosine term `amplitude · cos(2πk x/Λ + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k: u32,
    pub amplitude: f64,
    pub phase: f64,
}

impl Mode {
    pub fn new(k: u32, amplitude: f64, phase: f64) -> Self {
        Self {
            k,
            amplitude,
            phase,
        }
    }

    fn value(&self, x: f64, period: f64) -> f64 {
        let w = 2.0 * PI * self.k as f64 / period;
        self.amplitude * (w * x + self.phase).cos()
    }

    fn slope(&self, x: f64, period: f64) -> f64 {
        let w = 2.0 * PI * self.k as f64 / period;
        -self.amplitude * w * (w * x + self.phase).sin()
    }

    /// Bound on `sup|v| + sup|v'|` for this term.
    pub fn norm_1inf_bound(&self, period: f64) -> f64 {
        self.amplitude.abs() * (1.0 + 2.0 * PI * self.k as f64 / period)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `mean + Σ modes`; an empty list is a flat surface.
    Modes { mean: f64, modes: Vec<Mode> },
    /// Triangle wave oscillating in `[mean - amplitude, mean + amplitude]`
    /// with `teeth` periods per cell. Lipschitz but not C¹.
    Triangle {
        mean: f64,
        amplitude: f64,
        teeth: u32,
    },
}

impl Profile {
    fn value(&self, x: f64, period: f64) -> f64 {
        match self {
            Profile::Modes { mean, modes } => {
                mean + modes.iter().map(|m| m.value(x, period)).sum::<f64>()
            }
            Profile::Triangle {
                mean,
                amplitude,
                teeth,
            } => {
                let t = (*teeth as f64 * x / period).rem_euclid(1.0);
                mean + amplitude * (1.0 - 4.0 * (t - 0.5).abs())
            }
        }
    }

    fn slope(&self, x: f64, period: f64) -> f64 {
        match self {
            Profile::Modes { modes, .. } => modes.iter().map(|m| m.slope(x, period)).sum(),
            Profile::Triangle {
                amplitude, teeth, ..
            } => {
                let t = (*teeth as f64 * x / period).rem_euclid(1.0);
                let s = 4.0 * amplitude * *teeth as f64 / period;
                if t < 0.5 {
                    s
                } else {
                    -s
                }
            }
        }
    }
}

/// A Λ-periodic Lipschitz graph `x₂ = f(x₁)` with declared bounds
/// `f_min < f < f_max` and Lipschitz constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFn {
    profile: Profile,
    extra: Vec<Mode>,
    pub period: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub lipschitz: f64,
}

impl SurfaceFn {
    pub fn new(
        profile: Profile,
        period: f64,
        f_min: f64,
        f_max: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        let s = Self {
            profile,
            extra: Vec::new(),
            period,
            f_min,
            f_max,
            lipschitz,
        };
        s.validate().map_err(Error::Geometry)?;
        Ok(s)
    }

    pub fn flat(level: f64, period: f64, f_min: f64, f_max: f64) -> Result<Self> {
        Self::new(
            Profile::Modes {
                mean: level,
                modes: vec![],
            },
            period,
            f_min,
            f_max,
            0.0,
        )
    }

    /// Mean plus a cosine series; the Lipschitz constant is taken as `Σ|a|·2πk/Λ`.
    pub fn cosine_series(
        mean: f64,
        modes: Vec<Mode>,
        period: f64,
        f_min: f64,
        f_max: f64,
    ) -> Result<Self> {
        let lip = modes
            .iter()
            .map(|m| m.amplitude.abs() * 2.0 * PI * m.k as f64 / period)
            .sum();
        Self::new(Profile::Modes { mean, modes }, period, f_min, f_max, lip)
    }

    pub fn triangle(
        mean: f64,
        amplitude: f64,
        teeth: u32,
        period: f64,
        f_min: f64,
        f_max: f64,
    ) -> Result<Self> {
        let lip = 4.0 * amplitude.abs() * teeth as f64 / period;
        Self::new(
            Profile::Triangle {
                mean,
                amplitude,
                teeth,
            },
            period,
            f_min,
            f_max,
            lip,
        )
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(format!("period must be positive, got {}", self.period));
        }
        if !(self.f_min < self.f_max) {
            return Err(format!(
                "f_min {} must be below f_max {}",
                self.f_min, self.f_max
            ));
        }
        if !(self.lipschitz >= 0.0) {
            return Err(format!(
                "Lipschitz constant must be nonnegative, got {}",
                self.lipschitz
            ));
        }
        let n = VALIDATION_SAMPLES;
        let dx = self.period / n as f64;
        let mut prev = self.value(0.0);
        for i in 0..=n {
            let x = i as f64 * dx;
            let v = self.value(x);
            if !(self.f_min < v && v < self.f_max) {
                return Err(format!(
                    "f({x}) = {v} violates {} < f < {}",
                    self.f_min, self.f_max
                ));
            }
            if i > 0 && (v - prev).abs() > self.lipschitz * dx * (1.0 + 1e-9) + 1e-13 {
                return Err(format!(
                    "Lipschitz bound {} violated near x = {x}",
                    self.lipschitz
                ));
            }
            prev = v;
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        self.profile.value(x, self.period)
            + self
                .extra
                .iter()
                .map(|m| m.value(x, self.period))
                .sum::<f64>()
    }

    pub fn slope(&self, x: f64) -> f64 {
        self.profile.slope(x, self.period)
            + self
                .extra
                .iter()
                .map(|m| m.slope(x, self.period))
                .sum::<f64>()
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Sampled supremum over one period.
    pub fn sup(&self) -> f64 {
        self.sample_grid(VALIDATION_SAMPLES)
            .map(|x| self.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.sample_grid(VALIDATION_SAMPLES)
            .map(|x| self.value(x))
            .fold(f64::INFINITY, f64::min)
    }

    fn sample_grid(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let dx = self.period / n as f64;
        (0..n).map(move |i| i as f64 * dx)
    }

    /// `sup|f-g| + sup|f'-g'|` on an `n`-point grid.
    pub fn dist_1inf(&self, other: &SurfaceFn, n: usize) -> f64 {
        let mut s0 = 0.0f64;
        let mut s1 = 0.0f64;
        for x in self.sample_grid(n) {
            s0 = s0.max((self.value(x) - other.value(x)).abs());
            s1 = s1.max((self.slope(x) - other.slope(x)).abs());
        }
        s0 + s1
    }

    /// Sampled `sup|f - g|`.
    pub fn dist_sup(&self, other: &SurfaceFn) -> f64 {
        self.sample_grid(VALIDATION_SAMPLES)
            .map(|x| (self.value(x) - other.value(x)).abs())
            .fold(0.0, f64::max)
    }

    /// Adds cosine modes on top of this surface, keeping the declared bounds
    /// and growing the Lipschitz constant by the modes' slope bound.
    pub fn perturbed(&self, modes: &[Mode]) -> std::result::Result<Self, String> {
        let mut extra = self.extra.clone();
        extra.extend_from_slice(modes);
        let dl: f64 = modes
            .iter()
            .map(|m| m.amplitude.abs() * 2.0 * PI * m.k as f64 / self.period)
            .sum();
        let s = Self {
            profile: self.profile.clone(),
            extra,
            period: self.period,
            f_min: self.f_min,
            f_max: self.f_max,
            lipschitz: self.lipschitz + dl,
        };
        s.validate()?;
        Ok(s)
    }
}

/// Truncated random cosine series around a reference surface:
/// `f(η; x) = f₀(x) + Σ_j a_j ξ_j cos(2πj x/Λ + θ_j)`, `ξ_j ~ U[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSurfaceModel {
    pub f0: SurfaceFn,
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
    pub m0: f64,
    pub seed: u64,
}

impl RandomSurfaceModel {
    pub fn new(
        f0: SurfaceFn,
        amplitudes: Vec<f64>,
        phases: Vec<f64>,
        m0: f64,
        seed: u64,
    ) -> Result<Self> {
        if amplitudes.len() != phases.len() {
            return Err(Error::Parameter(format!(
                "{} amplitudes but {} phases",
                amplitudes.len(),
                phases.len()
            )));
        }
        let model = Self {
            f0,
            amplitudes,
            phases,
            m0,
            seed,
        };
        let bound = model.norm_1inf_bound();
        if bound > m0 {
            return Err(Error::Parameter(format!(
                "sum |a_j|(1 + 2 pi j / period) = {bound} exceeds M0 = {m0}"
            )));
        }
        Ok(model)
    }

    /// Model with no random modes: every draw is `f₀`.
    pub fn deterministic(f0: SurfaceFn, seed: u64) -> Self {
        Self {
            f0,
            amplitudes: vec![],
            phases: vec![],
            m0: 0.0,
            seed,
        }
    }

    pub fn mode_count(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_1inf_bound(&self) -> f64 {
        let period = self.f0.period;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| Mode::new(j as u32 + 1, *a, 0.0).norm_1inf_bound(period))
            .sum()
    }

    /// Uniform `[-1, 1]` coefficients for draw `index`, from ChaCha stream
    /// `index` under key `seed`.
    pub fn coefficients(&self, index: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        (0..self.mode_count())
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect()
    }

    pub fn sample(&self, index: u64) -> Result<SurfaceFn> {
        let xi = self.coefficients(index);
        let modes: Vec<Mode> = self
            .amplitudes
            .iter()
            .zip(&self.phases)
            .zip(&xi)
            .enumerate()
            .map(|(j, ((a, th), x))| Mode::new(j as u32 + 1, a * x, *th))
            .collect();
        self.f0
            .perturbed(&modes)
            .map_err(|e| Error::SurfaceBound(format!("sample {index}: {e}")))
    }

    /// Copy with all amplitudes (and `M0`) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
            m0: self.m0 * factor.abs(),
            ..self.clone()
        }
    }
}
