use rayon::prelude::*;

use qsym_core::diffgeo::{condition_set_residuals, consequence_residuals_from_jets, killing_defect, qs_residuals_from_jets};
use qsym_core::fields::VectorField;
use qsym_core::Vec3;

use super::{max_abs, sample_points, Context, RunError};
use crate::config::RunConfig;
use crate::output::Table;
use crate::report::{Check, Relation, Report};

const COLUMNS: [&str; 17] = [
    "x", "y", "z", "u_grad_modb", "curl_b_cross_u", "lie_b_flat", "div_u", "bracket_ub", "lie_b_flat_alt", "lie_ub", "bracket_uj",
    "lie_jb", "set_1", "set_2", "set_3", "sets_disagree", "killing_defect",
];

fn point_row<B: VectorField, U: VectorField>(b: &B, u: &U, x: Vec3, verdict: f64) -> qsym_core::Result<Vec<f64>> {
    let bj2 = b.jet2(x)?;
    let bj = bj2.first();
    let uj = u.jet1(x)?;
    let qs = qs_residuals_from_jets(&bj, &uj)?;
    let c = consequence_residuals_from_jets(&bj2, &uj);
    let sets = condition_set_residuals(&bj, &uj)?;
    let pass: Vec<bool> = sets.iter().map(|s| *s < verdict).collect();
    let disagree = if pass.iter().all(|p| *p == pass[0]) { 0.0 } else { 1.0 };
    Ok(vec![
        x.x,
        x.y,
        x.z,
        qs.s1.abs(),
        qs.s2.max_abs(),
        qs.s3.max_abs(),
        c.div_u.abs(),
        c.bracket_ub.max_abs(),
        c.lub_flat.max_abs(),
        c.lu_ub.abs(),
        c.bracket_uj.max_abs(),
        c.lu_jb.abs(),
        sets[0],
        sets[1],
        sets[2],
        disagree,
        killing_defect(&uj).max_abs(),
    ])
}

/// Quasi-symmetry, consequence and Killing residuals on a seeded cloud of points.
pub fn run(cfg: &RunConfig, ctx: &Context, report: &mut Report) -> Result<(), RunError> {
    let u = cfg.symmetry_model().ok_or_else(|| RunError::Config("verify needs a [symmetry] section".into()))?;
    let b = cfg.field_model();
    let th = &cfg.thresholds;
    let points = sample_points(&cfg.sampling, ctx.seed);
    let rows: Vec<qsym_core::Result<Vec<f64>>> =
        ctx.pool.install(|| points.par_iter().map(|x| point_row(&b, &u, *x, th.condition_sets)).collect());

    let mut table = Table::new(&COLUMNS);
    table.meta("command", "verify");
    table.meta("seed", ctx.seed);
    let mut failure = None;
    for r in rows {
        match r {
            Ok(row) => table.push(row),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    if let Some(e) = failure {
        let err = RunError::Compute(e);
        table.failure = Some(err.to_string());
        table.write(&ctx.out, "verify_points", ctx.format)?;
        return Err(err);
    }
    table.write(&ctx.out, "verify_points", ctx.format)?;

    let col = |name: &str| {
        let k = COLUMNS.iter().position(|c| *c == name).expect("known column");
        max_abs(table.rows.iter().map(|r| r[k]))
    };
    for (name, rel, thr) in [
        ("qs.u_grad_modb", Relation::QsModB, th.qs),
        ("qs.curl_b_cross_u", Relation::QsFlux, th.qs),
        ("qs.lie_b_flat", Relation::QsBFlat, th.qs),
        ("consequence.div_u", Relation::DivU, th.consequences),
        ("consequence.bracket_ub", Relation::BracketUB, th.consequences),
        ("consequence.lie_b_flat_alt", Relation::LieBFlat, th.consequences),
        ("consequence.lie_ub", Relation::LieUB, th.consequences),
        ("consequence.bracket_uj", Relation::BracketUJ, th.consequences),
        ("consequence.lie_jb", Relation::LieJB, th.consequences),
    ] {
        let column = name.split_once('.').map_or(name, |(_, s)| s);
        report.push(Check::new(name, rel, col(column), thr));
    }
    // A point counts against agreement when the three sets give different verdicts.
    let disagreements: f64 = table.rows.iter().map(|r| r[15]).sum();
    report.push(Check::new("condition_sets.disagreements", Relation::ConditionSets, disagreements, 0.0));
    report.push(Check::new("killing.defect", Relation::KillingDefect, col("killing_defect"), th.killing));
    report.detail("points", points.len());
    report.detail("condition_set_threshold", th.condition_sets);
    Ok(())
}
