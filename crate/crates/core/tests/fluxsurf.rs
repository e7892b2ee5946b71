use qsym_core::fields::{FieldKind, Model, PsiKind, ScalarField, ScalarModel, SymmetryKind};
use qsym_core::fluxsurf::*;
use qsym_core::ode::OdeOptions;
use qsym_core::Vec3;

fn solovev() -> Model<FieldKind> {
    Model::new(FieldKind::solovev(1.0, 1.0, 2.0))
}

fn psi() -> ScalarModel<PsiKind> {
    ScalarModel::new(PsiKind::Solovev { r0: 1.0, p1: 2.0 })
}

fn axisym() -> Model<SymmetryKind> {
    Model::new(SymmetryKind::Axisym)
}

fn tight() -> OdeOptions {
    OdeOptions::with_tol(1e-12, 1e-14)
}

#[test]
fn flux_value_matches_closed_form_and_is_path_independent() {
    let (b, u, p) = (solovev(), axisym(), psi());
    let a = Vec3::new(1.1, 0.0, 0.0);
    let c = Vec3::new(0.4, 1.0, 0.3);
    let direct = flux_value(&b, &u, &[a, c], 1e-12).unwrap();
    let exact = p.value(c).unwrap() - p.value(a).unwrap();
    assert!((direct - exact).abs() < 1e-8, "{direct} vs {exact}");
    let detour = flux_value(&b, &u, &[a, Vec3::new(1.3, -0.4, -0.2), Vec3::new(0.2, 0.9, 0.5), c], 1e-12).unwrap();
    assert!((detour - direct).abs() < 1e-8);
}

#[test]
fn fieldline_stays_on_surface() {
    let (b, p) = (solovev(), psi());
    let x0 = Vec3::new(1.3, 0.0, 0.0);
    let p0 = p.value(x0).unwrap();
    let pts = trace_fieldline(&b, x0, 30.0, 300, tight()).unwrap();
    let dev = pts.iter().map(|x| (p.value(*x).unwrap() - p0).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-8, "{dev}");
}

#[test]
fn toroidal_only_field_traces_a_circle() {
    let b = Model::new(FieldKind::solovev(1.0, 1.0, 0.0));
    let pts = trace_fieldline(&b, Vec3::new(1.0, 0.0, 0.0), 3.0, 50, tight()).unwrap();
    for x in pts {
        assert!((x.cyl_r() - 1.0).abs() < 1e-10 && x.z.abs() < 1e-12);
    }
}

#[test]
fn winding_methods_agree() {
    let (b, u, p) = (solovev(), axisym(), psi());
    for r in [1.1, 1.2, 1.3] {
        let x = Vec3::new(r, 0.0, 0.0);
        let (pol, tor) = surface_loops(&p, x, (1.0, 0.0), 128).unwrap();
        let fb = winding_ratio_formula(&b, &p, &pol, &tor).unwrap();
        let fu = winding_ratio_formula(&u, &p, &pol, &tor).unwrap();
        let tb = winding_ratio_traj(&b, x, (1.0, 0.0), 200, tight()).unwrap();
        let tu = winding_ratio_traj(&u, x, (1.0, 0.0), 5, tight()).unwrap();
        println!("r={r}: formula B {} traj B {}  formula u {} traj u {}", fb.iota, tb.iota, fu.iota, tu.iota);
        assert!((fb.iota - tb.iota).abs() < 1e-3);
        assert!(fu.iota.abs() < 1e-9 && tu.iota.abs() < 1e-9);
        let (pol2, tor2) = surface_loops(&p, x, (1.0, 0.0), 256).unwrap();
        let fb2 = winding_ratio_formula(&b, &p, &pol2, &tor2).unwrap();
        assert!((fb2.iota - fb.iota).abs() < 1e-6);
    }
}

#[test]
fn winding_traj_converges_with_turns() {
    let b = solovev();
    let x = Vec3::new(1.3, 0.0, 0.0);
    let a = winding_ratio_traj(&b, x, (1.0, 0.0), 100, tight()).unwrap().iota;
    let c = winding_ratio_traj(&b, x, (1.0, 0.0), 200, tight()).unwrap().iota;
    assert!((a - c).abs() < 1e-4);
}

#[test]
fn circle_action_on_nested_surfaces() {
    let u = axisym();
    let mut periods = Vec::new();
    for r in [1.1, 1.2, 1.3] {
        let (pol, _) = surface_loops(&psi(), Vec3::new(r, 0.0, 0.0), (1.0, 0.0), 5).unwrap();
        for x in pol.points {
            periods.push(u_line_period(&u, x, 20.0, 1e-6, tight()).unwrap());
        }
    }
    for t in &periods {
        assert!((t - std::f64::consts::TAU).abs() < 1e-9);
    }
}

#[test]
fn solovev_chart_has_constant_components() {
    let (b, u) = (solovev(), axisym());
    let chart = al_chart(&u, &b, Vec3::new(1.3, 0.0, 0.0), 200.0, 1e-8, tight()).unwrap();
    let samples: Vec<[f64; 2]> = (0..20).map(|k| [0.37 * k as f64, 1.3 + 0.61 * k as f64]).collect();
    let chk = check_chart(&chart, &u, &b, &samples, 1e-4, tight()).unwrap();
    let (fu, fb) = chart.frequencies().unwrap();
    println!("{chart:?} {chk:?}");
    assert!(chk.u_std[0] < 1e-6 && chk.u_std[1] < 1e-6);
    assert!(chk.b_std[0] < 1e-5 && chk.b_std[1] < 1e-5);
    assert!((chk.u_mean[0] - fu[0]).abs() < 1e-6 && (chk.b_mean[1] - fb[1]).abs() < 1e-6);
}

#[test]
fn arc_length_invariance_detects_symmetry_breaking() {
    let (b, u) = (solovev(), axisym());
    let x = Vec3::new(1.3, 0.0, 0.0);
    let modb = |p: Vec3| qsym_core::fields::VectorField::value(&b, p).unwrap().norm();
    let line = trace_fieldline(&b, x, 2.0, 21, tight()).unwrap();
    let (k0, k1) = (modb(line[2]), modb(line[8]));
    let rep = arc_length_invariance(&b, &u, x, k0, k1, &[0.0, 0.5, 1.0, 2.0], 50.0, tight()).unwrap();
    println!("{rep:?}");
    assert_eq!(rep.lengths[0].1, rep.base_length);
    assert!(rep.max_deviation < 1e-6);

    let pert = Model::new(FieldKind::perturbed(FieldKind::solovev(1.0, 1.0, 2.0), 0.1, 2));
    let line = trace_fieldline(&pert, x, 2.0, 21, tight()).unwrap();
    let modp = |p: Vec3| qsym_core::fields::VectorField::value(&pert, p).unwrap().norm();
    let (k0, k1) = (modp(line[2]), modp(line[8]));
    let rep = arc_length_invariance(&pert, &u, x, k0, k1, &[0.5, 1.0, 2.0], 50.0, tight()).unwrap();
    println!("{rep:?}");
    assert!(rep.max_deviation > 1e-3);
}

#[test]
fn tuned_rational_surface() {
    // Bisect the toroidal field strength until the trajectory estimate is 1 on one surface.
    let x = Vec3::new(1.2, 0.0, 0.0);
    let iota = |c0: f64| {
        let b = Model::new(FieldKind::solovev(1.0, c0, 2.0));
        winding_ratio_traj(&b, x, (1.0, 0.0), 100, tight()).unwrap().iota
    };
    let (mut lo, mut hi) = (-2.0, -0.2);
    for _ in 0..30 {
        let m = 0.5 * (lo + hi);
        if iota(m) > 1.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    let c0 = 0.5 * (lo + hi);
    assert!((iota(c0) - 1.0).abs() < 1e-3);
    let b = Model::new(FieldKind::solovev(1.0, c0, 2.0));
    let (pol, tor) = surface_loops(&psi(), x, (1.0, 0.0), 128).unwrap();
    let f = winding_ratio_formula(&b, &psi(), &pol, &tor).unwrap();
    assert!((f.iota - 1.0).abs() < 1e-3, "{}", f.iota);
}
