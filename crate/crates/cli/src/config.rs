//! Run configuration.
//!
//! Grammar: `[section]` headers, `key = value` lines, lists separated by
//! commas, `#` starts a comment. Every key has a default, so an empty file
//! is a valid configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use elastodtn::fem::default_n_max;
use elastodtn::model::Jitter;
use elastodtn::verify::geometric_omegas;
use elastodtn::{
    Complex64, CutoffFn, ElasticParams, Geometry, Mode, RandomSurfaceModel, SourceSpec, SurfaceFn,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("{0}: no such file")]
    NoSuchFile(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{key}: {msg}")]
    Invalid { key: String, msg: String },
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Mms,
    SweepOmega,
    Ensemble,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Mms => "mms",
            Command::SweepOmega => "sweep-omega",
            Command::Ensemble => "ensemble",
            Command::VerifyAll => "verify-all",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Command::Solve,
            Command::Mms,
            Command::SweepOmega,
            Command::Ensemble,
            Command::VerifyAll,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceKind {
    Flat,
    Cosine,
    Triangle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub lambda: f64,
    pub mu: f64,
    pub omega: f64,
    pub omega_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    pub period: f64,
    pub h: f64,
    pub f0: SurfaceKind,
    pub f0_mean: f64,
    /// `(k, amplitude, phase)` for cosine surfaces.
    pub f0_modes: Vec<(u32, f64, f64)>,
    pub f0_amplitude: f64,
    pub f0_teeth: u32,
    pub m: f64,
    pub big_m: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceModelConfig {
    pub mode_count: usize,
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
    pub phase_seed: Option<u64>,
    pub m0: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: [Complex64; 2],
    pub jitter_shift: f64,
    pub jitter_amplitude: f64,
    pub jitter_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub nx: usize,
    pub ny: usize,
    /// 0 selects the default truncation.
    pub n_max: i64,
    pub quadrature_degree: u32,
    pub mms_levels: usize,
    pub mms_nx: usize,
    pub mms_ny: usize,
    pub nodes_per_wavelength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub command: Command,
    pub n: usize,
    pub parallelism: usize,
    pub output_dir: String,
    pub epsilon_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub physics: Physics,
    pub geometry: GeometryConfig,
    pub surface_model: SurfaceModelConfig,
    pub source: SourceConfig,
    pub discretization: Discretization,
    pub run: RunSection,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("physics", &["lambda", "mu", "omega", "omega_list"]),
    (
        "geometry",
        &[
            "period",
            "h",
            "f0",
            "f0_mean",
            "f0_modes",
            "f0_amplitude",
            "f0_teeth",
            "m",
            "M",
            "delta",
        ],
    ),
    (
        "surface_model",
        &[
            "mode_count",
            "amplitudes",
            "phases",
            "phase_seed",
            "M0",
            "seed",
        ],
    ),
    (
        "source",
        &[
            "center",
            "radius",
            "amplitude",
            "jitter_shift",
            "jitter_amplitude",
            "jitter_seed",
        ],
    ),
    (
        "discretization",
        &[
            "nx",
            "ny",
            "n_max",
            "quadrature_degree",
            "mms_levels",
            "mms_nx",
            "mms_ny",
            "nodes_per_wavelength",
        ],
    ),
    (
        "run",
        &[
            "command",
            "N",
            "parallelism",
            "output_dir",
            "epsilon_margin",
        ],
    ),
];

/// Raw `section.key → (value, line)` table.
type Table = BTreeMap<String, (String, usize)>;

pub fn parse_table(text: &str) -> Result<Table, ConfigError> {
    let mut table = Table::new();
    let mut section: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Parse {
                    line,
                    msg: format!("unterminated section header '{s}'"),
                })?
                .trim();
            section = Some(
                SECTIONS
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|(n, _)| *n)
                    .ok_or_else(|| ConfigError::Parse {
                        line,
                        msg: format!("unknown section '{name}'"),
                    })?,
            );
            continue;
        }
        let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            msg: format!("expected 'key = value', got '{s}'"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        let sec = section.ok_or_else(|| ConfigError::Parse {
            line,
            msg: format!("key '{k}' outside any section"),
        })?;
        let keys = SECTIONS.iter().find(|(n, _)| *n == sec).unwrap().1;
        if !keys.contains(&k) {
            return Err(ConfigError::Parse {
                line,
                msg: format!("unknown key '{sec}.{k}'"),
            });
        }
        let path = format!("{sec}.{k}");
        if table.insert(path.clone(), (v.to_string(), line)).is_some() {
            return Err(ConfigError::Parse {
                line,
                msg: format!("duplicate key '{path}'"),
            });
        }
    }
    Ok(table)
}

struct Reader<'a> {
    table: &'a Table,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.table.get(key).map(|(v, _)| v.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| self.bad(key, format!("cannot parse '{v}'"))),
        }
    }

    fn list<T: std::str::FromStr>(
        &self,
        key: &str,
        default: Vec<T>,
    ) -> Result<Vec<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some("") => Ok(vec![]),
            Some(v) => v
                .split(',')
                .map(|x| {
                    x.trim().parse().map_err(|_| {
                        self.bad(key, format!("cannot parse list entry '{}'", x.trim()))
                    })
                })
                .collect(),
        }
    }

    fn bad(&self, key: &str, msg: String) -> ConfigError {
        let line = self.table.get(key).map(|(_, l)| *l).unwrap_or(0);
        ConfigError::Parse {
            line,
            msg: format!("{key}: {msg}"),
        }
    }
}

fn default_omegas() -> Vec<f64> {
    geometric_omegas(2.0, 16.0, 7)
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let table = parse_table(text)?;
        let r = Reader { table: &table };
        let f0 = match r.raw("geometry.f0").unwrap_or("cosine") {
            "flat" => SurfaceKind::Flat,
            "cosine" => SurfaceKind::Cosine,
            "triangle" => SurfaceKind::Triangle,
            other => {
                return Err(r.bad(
                    "geometry.f0",
                    format!("unknown surface '{other}' (flat, cosine, triangle)"),
                ))
            }
        };
        let f0_modes = r
            .list::<String>("geometry.f0_modes", vec!["1:0.1:0".into()])?
            .iter()
            .map(|t| {
                let parts: Vec<&str> = t.split(':').collect();
                let err = || {
                    r.bad(
                        "geometry.f0_modes",
                        format!("expected k:amplitude:phase, got '{t}'"),
                    )
                };
                if parts.len() != 3 {
                    return Err(err());
                }
                Ok((
                    parts[0].trim().parse().map_err(|_| err())?,
                    parts[1].trim().parse().map_err(|_| err())?,
                    parts[2].trim().parse().map_err(|_| err())?,
                ))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let amplitudes = r.list("surface_model.amplitudes", vec![0.05, 0.025])?;
        let phase_seed = match r.raw("surface_model.phase_seed") {
            None => None,
            Some(_) => Some(r.parse("surface_model.phase_seed", 0u64)?),
        };
        let default_phases = if phase_seed.is_some() {
            vec![]
        } else {
            vec![0.0, 1.0]
        };
        let mut phases = r.list("surface_model.phases", default_phases)?;
        let mode_count = r.parse("surface_model.mode_count", amplitudes.len())?;
        if let Some(s) = phase_seed {
            if r.raw("surface_model.phases").is_some() {
                return Err(invalid(
                    "surface_model.phase_seed",
                    "give either phases or phase_seed",
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            phases = (0..mode_count)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
        }
        let center = r.list("source.center", vec![2.5, 1.5])?;
        let amp = r.list("source.amplitude", vec![1.0, 0.0, 0.0, 0.5])?;
        if center.len() != 2 {
            return Err(invalid("source.center", "expected two values"));
        }
        if amp.len() != 4 {
            return Err(invalid(
                "source.amplitude",
                "expected four values re1, im1, re2, im2",
            ));
        }
        let command = r.raw("run.command").unwrap_or("solve");
        let cfg = RunConfig {
            physics: Physics {
                lambda: r.parse("physics.lambda", 2.0)?,
                mu: r.parse("physics.mu", 1.0)?,
                omega: r.parse("physics.omega", 4.0)?,
                omega_list: r.list("physics.omega_list", default_omegas())?,
            },
            geometry: GeometryConfig {
                period: r.parse("geometry.period", 5.0)?,
                h: r.parse("geometry.h", 2.0)?,
                f0,
                f0_mean: r.parse("geometry.f0_mean", 0.5)?,
                f0_modes,
                f0_amplitude: r.parse("geometry.f0_amplitude", 0.125)?,
                f0_teeth: r.parse("geometry.f0_teeth", 5)?,
                m: r.parse("geometry.m", 0.0)?,
                big_m: r.parse("geometry.M", 1.0)?,
                delta: r.parse("geometry.delta", 0.2)?,
            },
            surface_model: SurfaceModelConfig {
                mode_count,
                amplitudes,
                phases,
                phase_seed,
                m0: r.parse("surface_model.M0", 0.25)?,
                seed: r.parse("surface_model.seed", 42)?,
            },
            source: SourceConfig {
                center: [center[0], center[1]],
                radius: r.parse("source.radius", 0.4)?,
                amplitude: [
                    Complex64::new(amp[0], amp[1]),
                    Complex64::new(amp[2], amp[3]),
                ],
                jitter_shift: r.parse("source.jitter_shift", 0.05)?,
                jitter_amplitude: r.parse("source.jitter_amplitude", 0.1)?,
                jitter_seed: r.parse("source.jitter_seed", 11)?,
            },
            discretization: Discretization {
                nx: r.parse("discretization.nx", 64)?,
                ny: r.parse("discretization.ny", 24)?,
                n_max: r.parse("discretization.n_max", 0)?,
                quadrature_degree: r.parse("discretization.quadrature_degree", 5)?,
                mms_levels: r.parse("discretization.mms_levels", 4)?,
                mms_nx: r.parse("discretization.mms_nx", 20)?,
                mms_ny: r.parse("discretization.mms_ny", 6)?,
                nodes_per_wavelength: r.parse("discretization.nodes_per_wavelength", 10.0)?,
            },
            run: RunSection {
                command: Command::parse(command)
                    .ok_or_else(|| r.bad("run.command", format!("unknown command '{command}'")))?,
                n: r.parse("run.N", 32)?,
                parallelism: r.parse("run.parallelism", 1)?,
                output_dir: r.raw("run.output_dir").unwrap_or("out").to_string(),
                epsilon_margin: r.parse("run.epsilon_margin", 0.05)?,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => ConfigError::NoSuchFile(path.display().to_string()),
            _ => invalid("config", format!("{}: {e}", path.display())),
        })?;
        Self::from_str(&text)
    }

    /// Re-checks every physical invariant; errors name the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.physics;
        ElasticParams::new(p.lambda, p.mu, p.omega)
            .map_err(|e| invalid("physics", e.to_string()))?;
        for &w in &p.omega_list {
            if !(w > 0.0) {
                return Err(invalid(
                    "physics.omega_list",
                    format!("frequencies must be positive, got {w}"),
                ));
            }
        }
        if p.omega_list.len() < 2 || p.omega_list.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid(
                "physics.omega_list",
                "need at least two increasing frequencies",
            ));
        }
        let g = &self.geometry;
        if !(g.period > 0.0) {
            return Err(invalid("geometry.period", "must be positive"));
        }
        if !(g.big_m > g.m) {
            return Err(invalid("geometry.M", "must exceed m"));
        }
        if !(g.h > g.big_m) {
            return Err(invalid("geometry.h", "must exceed M"));
        }
        let f0 = self.surface()?;
        let (gap, ok) = Geometry::new(f0.clone(), g.h)
            .map_err(|e| invalid("geometry.h", e.to_string()))?
            .height_condition();
        if !ok {
            return Err(invalid(
                "geometry.h",
                format!(
                    "height condition fails: (M - m)/(h - sup f0) = {} must be below 1",
                    (g.big_m - g.m) / gap
                ),
            ));
        }
        CutoffFn::new(g.delta, gap).map_err(|e| invalid("geometry.delta", e.to_string()))?;
        let s = &self.surface_model;
        if s.amplitudes.len() != s.mode_count {
            return Err(invalid(
                "surface_model.amplitudes",
                format!(
                    "{} amplitudes for mode_count = {}",
                    s.amplitudes.len(),
                    s.mode_count
                ),
            ));
        }
        if s.phases.len() != s.mode_count {
            return Err(invalid(
                "surface_model.phases",
                format!(
                    "{} phases for mode_count = {}",
                    s.phases.len(),
                    s.mode_count
                ),
            ));
        }
        if !(s.m0 >= 0.0) {
            return Err(invalid("surface_model.M0", "must be nonnegative"));
        }
        self.model()
            .map_err(|e| invalid("surface_model.M0", e.to_string()))?;
        if f0.sup() + s.m0 > g.big_m || f0.inf() - s.m0 < g.m {
            return Err(invalid(
                "surface_model.M0",
                format!("f0 +- M0 leaves [m, M] = [{}, {}]", g.m, g.big_m),
            ));
        }
        let src = &self.source;
        if !(src.jitter_shift >= 0.0 && src.jitter_amplitude >= 0.0 && src.jitter_amplitude < 1.0) {
            return Err(invalid(
                "source.jitter_shift",
                "jitter must be nonnegative with relative amplitude below 1",
            ));
        }
        self.source_spec()
            .make(g.big_m, g.h, g.period, None)
            .map_err(|e| invalid("source.center", e.to_string()))?;
        let d = &self.discretization;
        if d.nx < 4 || d.ny < 2 {
            return Err(invalid("discretization.nx", "need nx >= 4 and ny >= 2"));
        }
        if d.n_max < 0 {
            return Err(invalid(
                "discretization.n_max",
                "must be nonnegative (0 selects the default)",
            ));
        }
        if d.quadrature_degree != 5 {
            return Err(invalid(
                "discretization.quadrature_degree",
                "only the degree-5 rule is available",
            ));
        }
        if d.mms_levels < 3 || d.mms_nx < 4 || d.mms_ny < 2 {
            return Err(invalid(
                "discretization.mms_levels",
                "need at least 3 levels on a base mesh of at least 4 x 2",
            ));
        }
        if !(d.nodes_per_wavelength > 0.0) {
            return Err(invalid(
                "discretization.nodes_per_wavelength",
                "must be positive",
            ));
        }
        let r = &self.run;
        if r.n == 0 {
            return Err(invalid("run.N", "must be at least 1"));
        }
        if r.parallelism == 0 {
            return Err(invalid("run.parallelism", "must be at least 1"));
        }
        if !(r.epsilon_margin > 0.0 && r.epsilon_margin < 1.0) {
            return Err(invalid("run.epsilon_margin", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn surface(&self) -> Result<SurfaceFn, ConfigError> {
        let g = &self.geometry;
        let f = match g.f0 {
            SurfaceKind::Flat => SurfaceFn::flat(g.f0_mean, g.period, g.m, g.big_m),
            SurfaceKind::Cosine => SurfaceFn::cosine_series(
                g.f0_mean,
                g.f0_modes
                    .iter()
                    .map(|&(k, a, ph)| Mode::new(k, a, ph))
                    .collect(),
                g.period,
                g.m,
                g.big_m,
            ),
            SurfaceKind::Triangle => SurfaceFn::triangle(
                g.f0_mean,
                g.f0_amplitude,
                g.f0_teeth,
                g.period,
                g.m,
                g.big_m,
            ),
        };
        f.map_err(|e| invalid("geometry.f0", e.to_string()))
    }

    pub fn params(&self, omega: f64) -> Result<ElasticParams, ConfigError> {
        ElasticParams::new(self.physics.lambda, self.physics.mu, omega)
            .map_err(|e| invalid("physics", e.to_string()))
    }

    pub fn model(&self) -> elastodtn::Result<RandomSurfaceModel> {
        let s = &self.surface_model;
        let f0 = self
            .surface()
            .map_err(|e| elastodtn::Error::Parameter(e.to_string()))?;
        RandomSurfaceModel::new(f0, s.amplitudes.clone(), s.phases.clone(), s.m0, s.seed)
    }

    pub fn source_spec(&self) -> SourceSpec {
        let s = &self.source;
        let jitter = (s.jitter_shift > 0.0 || s.jitter_amplitude > 0.0).then_some(Jitter {
            center_shift: s.jitter_shift,
            amplitude_rel: s.jitter_amplitude,
            seed: s.jitter_seed,
        });
        SourceSpec {
            center: s.center,
            radius: s.radius,
            amplitude: s.amplitude,
            jitter,
        }
    }

    pub fn n_max(&self, p: &ElasticParams, nx: usize) -> i64 {
        match self.discretization.n_max {
            0 => default_n_max(p, self.geometry.period, nx),
            n => n,
        }
    }

    /// Canonical text of the resolved configuration; parses back to `self`.
    pub fn resolved(&self) -> String {
        fn list<T: std::fmt::Display>(v: &[T]) -> String {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        }
        let mut o = String::new();
        let p = &self.physics;
        let _ = writeln!(
            o,
            "[physics]\nlambda = {}\nmu = {}\nomega = {}\nomega_list = {}\n",
            p.lambda,
            p.mu,
            p.omega,
            list(&p.omega_list)
        );
        let g = &self.geometry;
        let kind = match g.f0 {
            SurfaceKind::Flat => "flat",
            SurfaceKind::Cosine => "cosine",
            SurfaceKind::Triangle => "triangle",
        };
        let modes: Vec<String> = g
            .f0_modes
            .iter()
            .map(|(k, a, ph)| format!("{k}:{a}:{ph}"))
            .collect();
        let _ = writeln!(
            o,
            "[geometry]\nperiod = {}\nh = {}\nf0 = {kind}\nf0_mean = {}\nf0_modes = {}\nf0_amplitude = {}\nf0_teeth = {}\nm = {}\nM = {}\ndelta = {}\n",
            g.period,
            g.h,
            g.f0_mean,
            modes.join(", "),
            g.f0_amplitude,
            g.f0_teeth,
            g.m,
            g.big_m,
            g.delta
        );
        let s = &self.surface_model;
        let _ = writeln!(
            o,
            "[surface_model]\nmode_count = {}\namplitudes = {}\nphases = {}\nM0 = {}\nseed = {}\n",
            s.mode_count,
            list(&s.amplitudes),
            list(&s.phases),
            s.m0,
            s.seed
        );
        let c = &self.source;
        let _ = writeln!(
            o,
            "[source]\ncenter = {}, {}\nradius = {}\namplitude = {}, {}, {}, {}\njitter_shift = {}\njitter_amplitude = {}\njitter_seed = {}\n",
            c.center[0],
            c.center[1],
            c.radius,
            c.amplitude[0].re,
            c.amplitude[0].im,
            c.amplitude[1].re,
            c.amplitude[1].im,
            c.jitter_shift,
            c.jitter_amplitude,
            c.jitter_seed
        );
        let d = &self.discretization;
        let _ = writeln!(
            o,
            "[discretization]\nnx = {}\nny = {}\nn_max = {}\nquadrature_degree = {}\nmms_levels = {}\nmms_nx = {}\nmms_ny = {}\nnodes_per_wavelength = {}\n",
            d.nx, d.ny, d.n_max, d.quadrature_degree, d.mms_levels, d.mms_nx, d.mms_ny, d.nodes_per_wavelength
        );
        let r = &self.run;
        let _ = write!(
            o,
            "[run]\ncommand = {}\nN = {}\nparallelism = {}\noutput_dir = {}\nepsilon_margin = {}\n",
            r.command.name(),
            r.n,
            r.parallelism,
            r.output_dir,
            r.epsilon_margin
        );
        o
    }
}
