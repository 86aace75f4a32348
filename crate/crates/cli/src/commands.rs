use std::path::Path;
use std::sync::Arc;

use elastodtn::dtn::{
    mat_mul, mat_vec, mode_projections, symbol_bound_check, symbol_matrix, traction, uniform_grid,
    UpgoingWave,
};
use elastodtn::fem::{assemble_b, assemble_load, build_mesh, solve, FieldSolution, Mesh};
use elastodtn::montecarlo::{
    calibrate_constant, lipschitz_envelope, mean_square_check, records_fingerprint, run_ensemble,
    EnsembleSetup,
};
use elastodtn::verify::{
    bound_profile, default_exact_field, form_continuity_check, helmholtz_field_check,
    mms_convergence, omega_sweep, poincare_check, pullback_identity_check, rellich_residual,
    rellich_tolerance, SweepConfig,
};
use elastodtn::{Complex64, CutoffFn, ElasticParams, Mode, RandomSurfaceModel, Source, SurfaceFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, ConfigError, RunConfig};
use crate::output::{self, Check};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] elastodtn::Error),
    #[error("writing artifacts: {0}")]
    Io(#[from] std::io::Error),
}

type Res<T> = Result<T, RunError>;

pub const RESIDUAL_MAX: f64 = 1e-10;

struct Ctx<'a> {
    cfg: &'a RunConfig,
    f0: SurfaceFn,
    h: f64,
}

impl Ctx<'_> {
    fn mesh(&self, f: &SurfaceFn) -> Res<Arc<Mesh>> {
        let d = &self.cfg.discretization;
        Ok(Arc::new(build_mesh(f, self.h, d.nx, d.ny)?))
    }

    /// Unjittered source.
    fn source(&self) -> Res<Source> {
        let g = &self.cfg.geometry;
        Ok(self.cfg.source_spec().make(g.big_m, g.h, g.period, None)?)
    }

    fn solve_at(&self, f: &SurfaceFn, omega: f64) -> Res<(FieldSolution, ElasticParams, i64)> {
        let mesh = self.mesh(f)?;
        let p = self.cfg.params(omega)?;
        let n_max = self.cfg.n_max(&p, mesh.nx);
        let src = self.source()?;
        let sol = solve(
            &assemble_b(&mesh, &p, n_max)?,
            &assemble_load(&mesh, &move |x| src.eval(x)),
        )?;
        Ok((sol, p, n_max))
    }

    fn cutoff(&self) -> Res<CutoffFn> {
        Ok(CutoffFn::new(
            self.cfg.geometry.delta,
            self.h - self.f0.sup(),
        )?)
    }

    fn ensemble_setup(&self, model: RandomSurfaceModel, omega: f64) -> Res<EnsembleSetup> {
        let mesh = self.mesh(&self.f0)?;
        let p = self.cfg.params(omega)?;
        let n_max = self.cfg.n_max(&p, mesh.nx);
        Ok(EnsembleSetup::new(
            model,
            self.cfg.source_spec(),
            p,
            mesh,
            self.cutoff()?,
            n_max,
            self.cfg.run.epsilon_margin,
        )?)
    }
}

/// Runs the configured command, writing artifacts into `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> Res<Vec<Check>> {
    let ctx = Ctx {
        cfg,
        f0: cfg.surface()?,
        h: cfg.geometry.h,
    };
    let checks = match cfg.run.command {
        Command::Solve => solve_cmd(&ctx, out)?,
        Command::Mms => mms_cmd(&ctx, out)?,
        Command::SweepOmega => sweep_cmd(&ctx, out)?,
        Command::Ensemble => ensemble_cmd(&ctx, out)?,
        Command::VerifyAll => verify_all(&ctx, out)?,
    };
    output::write_checks(out, &checks)?;
    Ok(checks)
}

fn solve_cmd(ctx: &Ctx, out: &Path) -> Res<Vec<Check>> {
    let w = ctx.cfg.physics.omega;
    let (sol, p, n_max) = ctx.solve_at(&ctx.f0, w)?;
    output::write_solution(out, &sol)?;
    output::write_norms(out, &[(w, ctx.h, sol.norms)])?;
    let hz = helmholtz_field_check(&sol, &p, n_max)?;
    Ok(vec![
        Check::le("solver_residual", sol.residual, RESIDUAL_MAX, 0.0),
        Check::le("helmholtz_p_residual", hz.p_residual, 1e-6, 0.0),
        Check::le("helmholtz_s_residual", hz.s_residual, 1e-6, 0.0),
    ])
}

fn mms_checks(ctx: &Ctx, out: Option<&Path>) -> Res<Vec<Check>> {
    let d = &ctx.cfg.discretization;
    let p = ctx.cfg.params(ctx.cfg.physics.omega)?;
    let sup = ctx.f0.sup();
    let (a, b) = (sup + 0.1 * (ctx.h - sup), sup + 0.65 * (ctx.h - sup));
    let exact = default_exact_field(&p, ctx.cfg.geometry.period, ctx.h, a, b)?;
    let t = mms_convergence(&p, &ctx.f0, ctx.h, &exact, d.mms_levels, d.mms_nx, d.mms_ny)?;
    if let Some(dir) = out {
        output::write_mms(dir, &t)?;
    }
    let res = t.rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(vec![
        Check::le("mms_h1_slope_min", 0.8, t.h1_slope, 0.0),
        Check::le("mms_h1_slope_max", t.h1_slope, 1.3, 0.0),
        Check::le("mms_l2_slope_min", 1.6, t.l2_slope, 0.0),
        Check::le("mms_l2_slope_max", t.l2_slope, 2.4, 0.0),
        Check::le("mms_solver_residual", res, RESIDUAL_MAX, 0.0),
    ])
}

fn mms_cmd(ctx: &Ctx, out: &Path) -> Res<Vec<Check>> {
    mms_checks(ctx, Some(out))
}

fn sweep_checks(ctx: &Ctx, out: &Path) -> Res<Vec<Check>> {
    let c = ctx.cfg;
    let r = omega_sweep(&SweepConfig {
        lambda: c.physics.lambda,
        mu: c.physics.mu,
        omegas: c.physics.omega_list.clone(),
        surface: ctx.f0.clone(),
        h: ctx.h,
        source: ctx.source()?,
        nodes_per_wavelength: c.discretization.nodes_per_wavelength,
    })?;
    output::write_sweep(out, &r)?;
    std::fs::write(out.join("sweep.svg"), output::sweep_svg(&r))?;
    let excess = r
        .ratios
        .iter()
        .zip(&r.profile_envelope)
        .map(|(a, e)| a / e)
        .fold(0.0, f64::max);
    Ok(vec![
        Check::le("sweep_fitted_slope", r.fitted_slope, 3.3, 0.0),
        Check::le("sweep_ratio_over_envelope", excess, 1.0, 1e-12),
    ])
}

fn sweep_cmd(ctx: &Ctx, out: &Path) -> Res<Vec<Check>> {
    sweep_checks(ctx, out)
}

fn ensemble_cmd(ctx: &Ctx, out: &Path) -> Res<Vec<Check>> {
    let c = ctx.cfg;
    let w = c.physics.omega;
    let model = c.model()?;
    let setup = ctx.ensemble_setup(model.clone(), w)?;
    let res = run_ensemble(&setup, c.run.n, c.run.parallelism)?;
    output::write_ensemble(out, &res)?;
    let det = ctx.ensemble_setup(
        RandomSurfaceModel::deterministic(ctx.f0.clone(), model.seed),
        w,
    )?;
    let anchor = run_ensemble(&det, 1, 1)?;
    let m = c.geometry.m;
    let cal = calibrate_constant(
        &anchor,
        &bound_profile(w, ctx.h, m, lipschitz_envelope(&det.model))?,
    )?;
    let t = mean_square_check(
        &res,
        &bound_profile(w, ctx.h, m, lipschitz_envelope(&model))?,
        cal,
    );
    let mut checks = per_sample_checks(&setup, &res);
    checks.push(Check::le("mean_square_bound", t.lhs, t.rhs, 0.0));
    Ok(checks)
}

fn per_sample_checks(
    setup: &EnsembleSetup,
    res: &elastodtn::montecarlo::EnsembleResult,
) -> Vec<Check> {
    let sandwich = res
        .per_sample
        .iter()
        .map(|r| (r.u_ref_h1_sq / (r.kappa * r.u_h1_sq)).max(r.u_h1_sq / (r.kappa * r.u_ref_h1_sq)))
        .filter(|x| x.is_finite())
        .fold(0.0, f64::max);
    vec![
        Check::le(
            "min_detJ_bound",
            setup.det_lower_bound(),
            res.min_det_j(),
            0.0,
        ),
        Check::le("norm_sandwich", sandwich, 1.0, 1e-10),
    ]
}

fn keystone(rng: &mut ChaCha8Rng, p: &ElasticParams) -> Res<f64> {
    let mut err = 0.0f64;
    for _ in 0..100 {
        let xi = rng.random_range(-3.0 * p.k_s..3.0 * p.k_s);
        let a = [
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        ];
        let wave = UpgoingWave::new(xi, a, 1.0, p)?;
        let g = wave.grad([0.0, 1.0]);
        let t = traction(&g, g[0][0] + g[1][1], [0.0, 1.0], p);
        let m = mat_vec(&symbol_matrix(xi, p)?.entries, &a);
        err = err.max((t[0] - m[0]).norm()).max((t[1] - m[1]).norm());
    }
    Ok(err)
}

fn projection_algebra(p: &ElasticParams) -> Res<f64> {
    let one = Complex64::new(1.0, 0.0);
    let mut err = 0.0f64;
    for xi in uniform_grid(4.0 * p.k_s, 1000) {
        let pr = mode_projections(xi - 2.0 * p.k_s, p)?;
        let mp2 = mat_mul(&pr.mp, &pr.mp);
        let mpms = mat_mul(&pr.mp, &pr.ms);
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j {
                    one
                } else {
                    Complex64::new(0.0, 0.0)
                };
                err = err.max((pr.mp[i][j] + pr.ms[i][j] - id).norm());
                err = err.max((mp2[i][j] - pr.mp[i][j]).norm());
                err = err.max(mpms[i][j].norm());
            }
        }
    }
    Ok(err)
}

fn symbol_checks(c: &RunConfig) -> Res<Vec<Check>> {
    let mut interior = Vec::new();
    let mut max_eig = f64::NEG_INFINITY;
    let mut grid_change = 0.0f64;
    for w in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let p = c.params(w)?;
        let coarse = symbol_bound_check(&p, &uniform_grid(8.0 * p.k_s, 2001))?;
        let fine = symbol_bound_check(&p, &uniform_grid(8.0 * p.k_s, 4001))?;
        interior.push(fine.interior_ratio);
        max_eig = max_eig.max(fine.max_re_eig);
        grid_change = grid_change.max((fine.c_of_omega / coarse.c_of_omega - 1.0).abs());
    }
    let spread = interior.iter().copied().fold(0.0, f64::max)
        / interior.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(vec![
        Check::le("symbol_re_eig_evanescent", max_eig, 0.0, 0.0),
        Check::le("symbol_interior_ratio_spread", spread, 2.0, 0.0),
        Check::le("symbol_growth_grid_change", grid_change, 0.01, 0.0),
    ])
}

fn verify_all(ctx: &Ctx, out: &Path) -> Res<Vec<Check>> {
    let c = ctx.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(c.surface_model.seed);
    let p = c.params(c.physics.omega)?;
    let mut checks = vec![
        Check::le("dtn_keystone", keystone(&mut rng, &p)?, 0.0, 1e-10),
        Check::le("projection_algebra", projection_algebra(&p)?, 0.0, 1e-12),
    ];
    checks.extend(symbol_checks(c)?);
    checks.extend(mms_checks(ctx, None)?);

    let flat = SurfaceFn::flat(
        c.geometry.f0_mean,
        c.geometry.period,
        c.geometry.m,
        c.geometry.big_m,
    )?;
    let mut rellich = 0.0f64;
    let mut norms = Vec::new();
    let mut hz = (0.0f64, 0.0f64);
    for (gi, f) in [&ctx.f0, &flat].into_iter().enumerate() {
        for w in [2.0, 4.0, 8.0] {
            let (sol, p, n_max) = ctx.solve_at(f, w)?;
            let src = ctx.source()?;
            let r = rellich_residual(&sol, &move |x| src.eval(x), &p, n_max)?;
            rellich = rellich.max((r.lhs - r.rhs) / rellich_tolerance(&sol));
            if gi == 0 {
                norms.push((w, ctx.h, sol.norms));
                let e = helmholtz_field_check(&sol, &p, n_max)?;
                hz = (hz.0.max(e.p_residual), hz.1.max(e.s_residual));
            }
        }
    }
    output::write_norms(out, &norms)?;
    checks.push(Check::le(
        "rellich_excess_over_tolerance",
        rellich,
        1.0,
        0.0,
    ));
    checks.push(Check::le("helmholtz_p_residual", hz.0, 1e-6, 0.0));
    checks.push(Check::le("helmholtz_s_residual", hz.1, 1e-6, 0.0));

    let mesh = ctx.mesh(&ctx.f0)?;
    let bound = (ctx.h - c.geometry.m) / 2f64.sqrt() * (1.0 + 5.0 * mesh.meshsize());
    let mut poincare = 0.0f64;
    for _ in 0..100 {
        let x: Vec<Complex64> = (0..mesh.dim())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        poincare = poincare.max(poincare_check(&FieldSolution::from_dofs(&mesh, &x, 0.0))?);
    }
    checks.push(Check::le("poincare_ratio", poincare, bound, 0.0));

    let model = c.model()?;
    let cutoff = ctx.cutoff()?;
    let src = ctx.source()?;
    if model.mode_count() > 0 {
        let mut worst = 0.0f64;
        for i in 0..5 {
            let map = elastodtn::DomainMap::new(ctx.f0.clone(), model.sample(i)?, cutoff, ctx.h)?;
            worst =
                worst.max(pullback_identity_check(&map, &p, &src, 5, 32.0, i)?.max_discrepancy());
        }
        checks.push(Check::le("pullback_discrepancy", worst, 1e-6, 0.0));
    }

    let fs: Vec<SurfaceFn> = (1..=6)
        .map(|m| {
            ctx.f0
                .perturbed(&[Mode::new(2, 0.05 / f64::from(1 << m), 0.4)])
        })
        .collect::<Result<_, _>>()
        .map_err(elastodtn::Error::SurfaceBound)?;
    let n_max = c.n_max(&p, mesh.nx);
    let cont = form_continuity_check(
        &mesh,
        &fs,
        &src,
        &[src; 6],
        &p,
        cutoff,
        n_max,
        c.surface_model.seed,
    )?;
    checks.push(Check::le(
        "form_ratio_spread",
        cont.b_ratio_spread(),
        3.0,
        0.0,
    ));
    let decreasing = cont.sol_errors.windows(2).all(|w| w[1] < w[0]);
    checks.push(Check::flag(
        "solution_errors_decreasing",
        cont.sol_errors[5],
        decreasing,
    ));
    checks.push(Check::le(
        "solution_error_last",
        cont.sol_errors[5],
        1e-3,
        0.0,
    ));

    checks.extend(sweep_checks(ctx, out)?);

    let setup = ctx.ensemble_setup(model.clone(), c.physics.omega)?;
    let seq = run_ensemble(&setup, c.run.n, 1)?;
    let par = run_ensemble(&setup, c.run.n, c.run.parallelism.max(2))?;
    checks.push(Check::flag(
        "ensemble_determinism",
        0.0,
        records_fingerprint(&seq) == records_fingerprint(&par),
    ));
    checks.extend(per_sample_checks(&setup, &par));
    output::write_ensemble(out, &par)?;

    let ws = [2.0, 4.0, 8.0];
    let det = RandomSurfaceModel::deterministic(ctx.f0.clone(), model.seed);
    let anchor = run_ensemble(&ctx.ensemble_setup(det.clone(), ws[0])?, 1, 1)?;
    let m = c.geometry.m;
    let cal = calibrate_constant(
        &anchor,
        &bound_profile(ws[0], ctx.h, m, lipschitz_envelope(&det))?,
    )?;
    for w in ws {
        let res = run_ensemble(
            &ctx.ensemble_setup(model.clone(), w)?,
            c.run.n,
            c.run.parallelism,
        )?;
        let t = mean_square_check(
            &res,
            &bound_profile(w, ctx.h, m, lipschitz_envelope(&model))?,
            cal,
        );
        checks.push(Check::le(
            &format!("mean_square_bound_omega_{w}"),
            t.lhs,
            t.rhs,
            0.0,
        ));
    }
    Ok(checks)
}
