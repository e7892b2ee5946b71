use std::f64::consts::TAU;

use qsym_core::fields::{PsiKind, ScalarField, ScalarModel, VectorField};
use qsym_core::gcmotion::*;
use qsym_core::ode::OdeOptions;
use qsym_core::Vec3;

use super::{Context, RunError};
use crate::config::{OrbitModel, RunConfig, Species};
use crate::output::Table;
use crate::report::{Check, Relation, Report};

const COLUMNS: [&str; 9] = ["t", "X_x", "X_y", "X_z", "v_par", "H", "K", "psi", "modB"];

fn model_name(m: OrbitModel) -> &'static str {
    match m {
        OrbitModel::Fgcm => "fgcm",
        OrbitModel::Zgcm => "zgcm",
        OrbitModel::Relativistic => "relativistic",
        OrbitModel::Electrostatic => "electrostatic",
    }
}

fn rel_change(q0: f64, q: f64) -> f64 {
    if q0 == 0.0 {
        (q - q0).abs()
    } else {
        ((q - q0) / q0).abs()
    }
}

/// Integrate one guiding-centre orbit and report drift of its energy and Noether invariant.
///
/// For the relativistic model the state carries p∥, H is the kinetic energy (rest energy
/// removed) and the `v_par` column holds ∂H/∂p∥.
pub fn run(cfg: &RunConfig, ctx: &Context, report: &mut Report) -> Result<(), RunError> {
    let spec = cfg.orbit.clone().unwrap_or_default();
    let b = cfg.field_model();
    let u = cfg.symmetry_model();
    let psi = cfg.psi_model();
    let phi = match &spec.potential {
        Some(text) => Some(ScalarModel::new(PsiKind::custom(text).map_err(RunError::Compute)?)),
        None => None,
    };
    let (m, e) = match spec.species {
        Species::Deuteron => (DEUTERON_MASS, ELEMENTARY_CHARGE),
        Species::Proton => (PROTON_MASS, ELEMENTARY_CHARGE),
        Species::Custom => (spec.mass.unwrap_or(0.0), spec.charge.unwrap_or(0.0)),
    };
    let x0 = Vec3::new(spec.x0[0], spec.x0[1], spec.x0[2]);
    let modb0 = b.value(x0)?.norm();
    if modb0 == 0.0 {
        return Err(qsym_core::Error::ZeroField.into());
    }
    let kinetic = spec.energy_ev * ELEMENTARY_CHARGE;
    let c = SPEED_OF_LIGHT;
    let relativistic = spec.model == OrbitModel::Relativistic;
    // Speed, state scale and starting state.
    let (v, v_ref, particle, s0) = if relativistic {
        let gamma = 1.0 + kinetic / (m * c * c);
        let p = m * c * (gamma * gamma - 1.0).sqrt();
        let ppar = spec.pitch * p;
        let mu = (p * p - ppar * ppar) / (2.0 * m * modb0);
        (p / (gamma * m), p, Particle::new(m, e, mu)?, GcState { x: x0, v_par: ppar })
    } else {
        let v = (2.0 * kinetic / m).sqrt();
        let vpar = spec.pitch * v;
        let mu = m * (v * v - vpar * vpar) / (2.0 * modb0);
        (v, v, Particle::new(m, e, mu)?, GcState { x: x0, v_par: vpar })
    };
    let t_end = spec.transits * TAU / v;
    let opts = OdeOptions::with_tol(spec.rtol, spec.atol);
    let floor = spec.bpar_floor;
    let (traj, status) = match spec.model {
        OrbitModel::Fgcm => integrate_gc_partial(|s| fgcm_rhs(s, &particle, &b, floor), s0, t_end, spec.samples, v_ref, opts),
        OrbitModel::Zgcm => integrate_gc_partial(|s| zgcm_rhs(s, &particle, &b), s0, t_end, spec.samples, v_ref, opts),
        OrbitModel::Relativistic => integrate_gc_partial(|s| relativistic_rhs(s, &particle, &b, floor), s0, t_end, spec.samples, v_ref, opts),
        OrbitModel::Electrostatic => {
            let phi = phi.as_ref().expect("validated");
            integrate_gc_partial(|s| electrostatic_rhs(s, &particle, &b, phi, floor), s0, t_end, spec.samples, v_ref, opts)
        }
    };

    let energy = |s: &GcState, modb: f64| -> qsym_core::Result<f64> {
        Ok(match spec.model {
            OrbitModel::Relativistic => relativistic_kinetic_energy(s.v_par, modb, &particle),
            OrbitModel::Electrostatic => {
                let phi = phi.as_ref().expect("validated");
                0.5 * m * s.v_par * s.v_par + particle.mu * modb + e * phi.value(s.x)?
            }
            _ => 0.5 * m * s.v_par * s.v_par + particle.mu * modb,
        })
    };
    let mut table = Table::new(&COLUMNS);
    table.meta("command", "orbit");
    table.meta("model", model_name(spec.model));
    table.meta_f64("mass_kg", m);
    table.meta_f64("charge_c", e);
    table.meta_f64("mu", particle.mu);
    table.meta_f64("t_end", t_end);
    table.meta_f64("rtol", spec.rtol);
    let mut first: Option<(f64, f64)> = None;
    let (mut dh, mut dk) = (0.0f64, 0.0f64);
    for (t, s) in traj.t.iter().zip(&traj.states) {
        let modb = b.value(s.x)?.norm();
        let h = energy(s, modb)?;
        // K needs m v∥, which is p∥ in the relativistic state.
        let kstate = if relativistic { GcState { x: s.x, v_par: s.v_par / m } } else { *s };
        let (k, ps) = match (&u, &psi) {
            (Some(u), Some(p)) => {
                let inv = invariants(&kstate, &particle, &b, u, p)?;
                (inv.k, inv.psi)
            }
            (None, Some(p)) => (f64::NAN, p.value(s.x)?),
            _ => (f64::NAN, f64::NAN),
        };
        let vpar = if relativistic { c * c * s.v_par / (h + m * c * c) } else { s.v_par };
        let (h0, k0) = *first.get_or_insert((h, k));
        dh = dh.max(rel_change(h0, h));
        dk = dk.max(rel_change(k0, k));
        table.push(vec![*t, s.x.x, s.x.y, s.x.z, vpar, h, k, ps, modb]);
    }
    if let Err(err) = status {
        let err = RunError::Compute(err);
        table.failure = Some(err.to_string());
        table.write(&ctx.out, "trajectory", ctx.format)?;
        return Err(err);
    }
    table.write(&ctx.out, "trajectory", ctx.format)?;
    let th = &cfg.thresholds;
    report.push(Check::new("orbit.energy_drift", Relation::Energy, dh, th.energy));
    if spec.model != OrbitModel::Zgcm && u.is_some() && psi.is_some() {
        report.push(Check::new("orbit.noether_drift", Relation::NoetherInvariant, dk, th.noether));
    }
    let class = match classify(&traj, particle.mu) {
        OrbitClass::Circulating => "circulating",
        OrbitClass::Bouncing => "bouncing",
        OrbitClass::Undetermined => "undetermined",
    };
    report.detail("model", model_name(spec.model));
    report.detail("class", class);
    report.detail("samples", traj.len());
    report.detail("steps", traj.n_steps);
    report.detail("t_end", t_end);
    Ok(())
}
