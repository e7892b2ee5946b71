use rayon::prelude::*;

use qsym_core::fields::{FieldKind, Model, ScalarField, SymmetryKind, VectorField};
use qsym_core::fluxsurf::*;
use qsym_core::ode::OdeOptions;
use qsym_core::Vec3;

use super::{max_abs, Context, RunError};
use crate::config::{FluxSpec, RunConfig};
use crate::output::Table;
use crate::report::{Check, Relation, Report};

const COLUMNS: [&str; 12] = [
    "r0",
    "psi",
    "iota_b_formula",
    "iota_b_traj",
    "iota_u_formula",
    "iota_u_traj",
    "period_mean",
    "period_min",
    "period_max",
    "arc_base_length",
    "arc_max_deviation",
    "arc_flows",
];

fn surface<P: ScalarField>(
    b: &Model<FieldKind>,
    u: &Model<SymmetryKind>,
    psi: &P,
    spec: &FluxSpec,
    r0: f64,
) -> qsym_core::Result<Vec<f64>> {
    let opts = OdeOptions::with_tol(spec.rtol, spec.atol);
    let axis = (spec.axis[0], spec.axis[1]);
    let x = Vec3::new(r0, 0.0, spec.axis[1]);
    let (pol, tor) = surface_loops(psi, x, axis, spec.loop_points)?;
    let fb = winding_ratio_formula(b, psi, &pol, &tor)?;
    let fu = winding_ratio_formula(u, psi, &pol, &tor)?;
    let tb = winding_ratio_traj(b, x, axis, spec.turns_b, opts)?;
    let tu = winding_ratio_traj(u, x, axis, spec.turns_u, opts)?;
    let (starts, _) = surface_loops(psi, x, axis, spec.period_points.max(8))?;
    let mut periods = Vec::with_capacity(spec.period_points);
    for p in starts.points.iter().take(spec.period_points) {
        periods.push(u_line_period(u, *p, spec.period_t_max, 1e-6, opts)?);
    }
    let mean = periods.iter().sum::<f64>() / periods.len() as f64;
    let lo = periods.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = periods.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // |B| levels a short way along the line through x
    let line = trace_fieldline(b, x, 2.0, 21, opts)?;
    let (k0, k1) = (b.value(line[2])?.norm(), b.value(line[8])?.norm());
    // Without symmetry a flowed line can miss the |B| levels entirely; that is a failed
    // check rather than a failed run.
    let (arc_base, arc_dev) = match arc_length_invariance(b, u, x, k0, k1, &spec.arc_lambdas, 50.0, opts) {
        Ok(a) => (a.base_length, a.max_deviation),
        Err(qsym_core::Error::LevelsNotCrossed) => (f64::NAN, f64::NAN),
        Err(e) => return Err(e),
    };
    Ok(vec![
        r0,
        psi.value(x)?,
        fb.iota,
        tb.iota,
        fu.iota,
        tu.iota,
        mean,
        lo,
        hi,
        arc_base,
        arc_dev,
        spec.arc_lambdas.len() as f64,
    ])
}

/// Winding ratios, u-line periods and arc-length invariance on a set of flux surfaces.
pub fn run(cfg: &RunConfig, ctx: &Context, report: &mut Report) -> Result<(), RunError> {
    let spec = cfg.flux.clone().unwrap_or_default();
    let b = cfg.field_model();
    let u = cfg.symmetry_model().ok_or_else(|| RunError::Config("flux needs a [symmetry] section".into()))?;
    let psi = cfg.psi_model().ok_or_else(|| RunError::Config("flux needs a flux function ([psi] or a field that has one)".into()))?;
    let rows: Vec<qsym_core::Result<Vec<f64>>> =
        ctx.pool.install(|| spec.surfaces.par_iter().map(|r| surface(&b, &u, &psi, &spec, *r)).collect());
    let mut table = Table::new(&COLUMNS);
    table.meta("command", "flux");
    table.meta("axis", format!("{:?}", spec.axis));
    for r in rows {
        match r {
            Ok(row) => table.push(row),
            Err(e) => {
                let err = RunError::Compute(e);
                table.failure = Some(err.to_string());
                table.write(&ctx.out, "flux_surfaces", ctx.format)?;
                return Err(err);
            }
        }
    }
    table.write(&ctx.out, "flux_surfaces", ctx.format)?;
    let th = &cfg.thresholds;
    let winding = max_abs(table.rows.iter().map(|r| r[2] - r[3]));
    let winding_u = max_abs(table.rows.iter().flat_map(|r| [r[4], r[5]]));
    let all_mean = table.rows.iter().map(|r| r[6]).sum::<f64>() / table.rows.len() as f64;
    let lo = table.rows.iter().map(|r| r[7]).fold(f64::INFINITY, f64::min);
    let hi = table.rows.iter().map(|r| r[8]).fold(f64::NEG_INFINITY, f64::max);
    let arc = max_abs(table.rows.iter().map(|r| r[10]));
    report.push(Check::new("flux.winding_b_methods", Relation::WindingRatio, winding, th.winding));
    report.push(Check::new("flux.winding_u", Relation::WindingU, winding_u, th.winding_u));
    report.push(Check::new("flux.u_period_spread", Relation::CirclePeriod, (hi - lo) / all_mean, th.period));
    report.push(Check::new("flux.arc_length", Relation::ArcLength, arc, th.arc_length));
    report.detail("surfaces", spec.surfaces.len());
    report.detail("arc_levels_missed", table.rows.iter().filter(|r| r[10].is_nan()).count());
    report.detail("u_period_mean", all_mean);
    Ok(())
}
