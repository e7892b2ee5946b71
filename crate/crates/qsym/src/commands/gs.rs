use rayon::prelude::*;

use qsym_core::gs::*;

use super::{max_abs, sample_points, Context, RunError};
use crate::config::{GsSpec, RunConfig};
use crate::output::{write_grid, Table};
use crate::report::{Check, Relation, Report};

struct Solved {
    grid: Grid2D,
    sym: GsSymmetry,
    solution: GsSolution,
}

fn solve(cfg: &RunConfig, spec: &GsSpec, ctx: &Context, report: &mut Report) -> Result<Solved, RunError> {
    let sym = cfg.gs_symmetry().ok_or_else(|| RunError::Config("gs needs an axisym or helical [symmetry]".into()))?;
    let grid = Grid2D::new((spec.r[0], spec.r[1]), (spec.zeta[0], spec.zeta[1]), spec.nr, spec.nz)?;
    let psi = cfg.psi_model();
    let mut boundary_error = None;
    let mut problem = GsProblem::with_boundary(grid, sym, spec.profiles(), |r, z| match &psi {
        Some(p) => qsym_core::fields::ScalarField::value(p, sym.point(r, z)).unwrap_or_else(|e| {
            boundary_error.get_or_insert(e);
            f64::NAN
        }),
        None => 0.0,
    });
    if let Some(e) = boundary_error {
        return Err(e.into());
    }
    problem.options = GsOptions { damping: spec.damping, tol: spec.tol, max_iter: spec.max_iter, discretization: spec.discretization() };
    let mut history = Table::new(&["iteration", "update", "residual"]);
    history.meta("command", report.command.as_str());
    let result = solve_gs_observed(&problem, |_, _| {});
    let solution = match result {
        Ok(s) => s,
        Err(e) => {
            let err = RunError::Compute(e);
            history.failure = Some(err.to_string());
            history.write(&ctx.out, "gs_history", ctx.format)?;
            return Err(err);
        }
    };
    for (k, step) in solution.history.iter().enumerate() {
        history.push(vec![(k + 1) as f64, step.update, step.residual]);
    }
    history.write(&ctx.out, "gs_history", ctx.format)?;
    let meta = vec![
        ("command".to_string(), report.command.clone()),
        ("symmetry".to_string(), format!("{sym:?}")),
        ("discretization".to_string(), format!("{:?}", spec.discretization())),
    ];
    write_grid(&ctx.out, "psi", ctx.format, &grid, &solution.psi, &meta)?;
    let th = &cfg.thresholds;
    let residual = discrete_residual(&grid, sym, spec.discretization(), &problem.profiles, &solution.psi)?;
    report.push(Check::new("gs.residual", Relation::GsResidual, residual, th.gs_residual));
    if spec.compare {
        let p = psi.as_ref().expect("validated");
        let mut err = 0.0f64;
        for j in 0..grid.nz {
            for i in 0..grid.nr {
                let exact = qsym_core::fields::ScalarField::value(p, sym.point(grid.r(i), grid.zeta(j)))?;
                err = err.max((exact - solution.psi[grid.index(i, j)]).abs());
            }
        }
        report.push(Check::new("gs.error_vs_reference", Relation::GsError, err, th.gs_error));
    }
    report.detail("iterations", solution.iterations);
    report.detail("nr", grid.nr);
    report.detail("nz", grid.nz);
    Ok(Solved { grid, sym, solution })
}

/// Picard solve of the reduced GS problem; writes the ψ grid and convergence history.
pub fn run_solve(cfg: &RunConfig, ctx: &Context, report: &mut Report) -> Result<(), RunError> {
    let spec = cfg.gs.clone().unwrap_or_default();
    solve(cfg, &spec, ctx, report).map(|_| ())
}

/// Solve, then check the supplementary conditions, the variational structure and self-adjointness.
pub fn run_check(cfg: &RunConfig, ctx: &Context, report: &mut Report) -> Result<(), RunError> {
    let spec = cfg.gs.clone().unwrap_or_default();
    let solved = solve(cfg, &spec, ctx, report)?;
    let th = &cfg.thresholds;
    let u = cfg.symmetry_model().expect("gs symmetry exists");
    let sym_kind = cfg.symmetry.as_ref().expect("gs symmetry exists").kind();
    let profiles = spec.profiles();
    let psi = cfg.psi_model().ok_or_else(|| RunError::Config("gs check needs a flux function for the pointwise checks".into()))?;

    let points = sample_points(&cfg.sampling, ctx.seed);
    let supp: Vec<qsym_core::Result<f64>> = ctx.pool.install(|| {
        points
            .par_iter()
            .map(|x| {
                let s = supplementary_residuals(&u, &psi, &profiles.c, *x)?;
                Ok(max_abs([s.r0, s.r1, s.r2, s.r3]))
            })
            .collect()
    });
    let supp = supp.into_iter().collect::<qsym_core::Result<Vec<f64>>>()?;
    report.push(Check::new("gs.supplementary", Relation::Supplementary, max_abs(supp), th.supplementary));

    let y = make_y(&sym_kind)?;
    let mut ydiv = 0.0f64;
    for x in &points {
        ydiv = ydiv.max(y_divergence_defect(&y, &u, *x)?.abs());
    }
    report.push(Check::new("gs.y_divergence", Relation::YDivergence, ydiv, th.y_divergence));

    let g = solved.grid;
    let cg = Grid2D::new((g.r_min, g.r_max), (g.zeta_min, g.zeta_max), spec.check_nr, spec.check_nz)?;
    let sample = cg.sample(|r, z| qsym_core::fields::ScalarField::value(&psi, solved.sym.point(r, z)).unwrap_or(f64::NAN));
    let grad = gradient_check(&cg, solved.sym, &profiles, &y, &sample, spec.gradient_step)?;
    report.push(Check::new("gs.variational_gradient", Relation::VariationalGradient, grad.max_deviation, th.gradient));
    let helm = helmholtz_check(&u, &cg, solved.sym)?;
    report.push(Check::new("gs.helmholtz_asymmetry", Relation::Helmholtz, helm.asymmetry, th.helmholtz));
    report.detail("gradient_scale", grad.max_gradient);
    report.detail("g_max", helm.g_max);
    report.detail("final_update", solved.solution.history.last().map_or(0.0, |s| s.update));
    Ok(())
}
