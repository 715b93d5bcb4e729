mod common;

use codazzi_lab::brinkmann::{assemble_hess_system, detect_warped, kernel_basis, verify_candidate};
use codazzi_lab::codazzi::{char_conditions, codazzi_residual, eigen_structure};
use codazzi_lab::gallery::{build_family, named_example, BATTERY_IDS};
use codazzi_lab::geometry::{
    covariant_derivative, christoffel_at, hessian_family_closed_form, hessian_scalar, pullback_metric, CoordinateMap,
    SymField,
};
use codazzi_lab::tolerances::Tolerances;
use codazzi_lab::{Chart, Grid, GridSpec, MetricField, ScalarExpr, SymTensorField};
use common::{random_expr, TXY};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn expr(seed: u64) -> ScalarExpr {
    random_expr(&mut ChaCha8Rng::seed_from_u64(seed), 3)
}

fn cube() -> Chart {
    Chart::bounded(&TXY, &[[-1.0, 1.0]; 3]).unwrap()
}

/// Diagonally dominant, hence positive definite, metric with entries built
/// from random expressions.
fn random_metric(seed: u64, chart: &Chart) -> MetricField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = chart.coord_names();
    let mut entries = Vec::new();
    for i in 0..3 {
        for j in i..3 {
            let e = random_expr(&mut rng, 2).rebind(names).unwrap();
            let bump = ScalarExpr::constant(if i == j { 0.5 } else { 0.3 }, names) * e.apply(codazzi_lab::expr::Func::Sin);
            entries.push(if i == j { ScalarExpr::constant(3.0, names) + bump } else { bump });
        }
    }
    MetricField::new(SymField::from_packed(chart, entries).unwrap())
}

fn random_family_mu(seed: u64) -> ScalarExpr {
    let c = |v: f64| ScalarExpr::constant(v, &TXY);
    c(0.5) * expr(seed).apply(codazzi_lab::expr::Func::Sin)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jets_are_linear(s1: u64, s2: u64, alpha in -3.0..3.0f64, p in prop::array::uniform3(-1.0..1.0f64)) {
        let (e1, e2) = (expr(s1), expr(s2));
        let combo = ScalarExpr::constant(alpha, &TXY) * e1.clone() + e2.clone();
        let (j, j1, j2) = (combo.eval_jet2(&p).unwrap(), e1.eval_jet2(&p).unwrap(), e2.eval_jet2(&p).unwrap());
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        prop_assert!(close(j.value, alpha * j1.value + j2.value));
        for i in 0..3 {
            prop_assert!(close(j.grad[i], alpha * j1.grad[i] + j2.grad[i]));
            for k in 0..3 {
                prop_assert!(close(j.hess(i, k), alpha * j1.hess(i, k) + j2.hess(i, k)));
            }
        }
    }

    #[test]
    fn jets_match_finite_differences(seed: u64, p in prop::array::uniform3(-1.0..1.0f64)) {
        let f = expr(seed);
        let d = common::ad_fd_defect(&f, &p);
        prop_assert!(d < 1e-6, "{} at {:?}: {:e}", f, p, d);
    }

    #[test]
    fn mixed_partials_agree_across_variable_order(seed: u64, p in prop::array::uniform3(-1.0..1.0f64)) {
        let f = expr(seed);
        let swapped = f.rebind(&["t", "y", "x"]).unwrap();
        let a = f.eval_jet2(&p).unwrap().hess(1, 2);
        let b = swapped.eval_jet2(&[p[0], p[2], p[1]]).unwrap().hess(2, 1);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn christoffel_symmetry_and_metric_compatibility(seed: u64, p in prop::array::uniform3(-1.0..1.0f64)) {
        let chart = cube();
        let g = random_metric(seed, &chart);
        let gamma = christoffel_at(&g, &p).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(gamma.get(k, i, j), gamma.get(k, j, i));
                }
            }
        }
        let gt = SymTensorField::from_metric(&g);
        for x in 0..3 {
            prop_assert!(covariant_derivative(&gt, &g, x, &p).unwrap().amax() < 1e-9);
        }
    }

    #[test]
    fn hessians_are_symmetric(sf: u64, sg: u64, p in prop::array::uniform3(-1.0..1.0f64)) {
        let chart = cube();
        let g = random_metric(sg, &chart);
        let h = hessian_scalar(&expr(sf), &g, &p).unwrap();
        let scale = 1.0 + h.amax();
        prop_assert!((&h - h.transpose()).amax() < 1e-12 * scale);
    }

    #[test]
    fn family_hessian_matches_closed_form(sm: u64, sf: u64, p in prop::array::uniform3(-1.0..1.0f64)) {
        let fam = build_family(2.0, &random_family_mu(sm), &cube()).unwrap();
        let f = expr(sf);
        let general = hessian_scalar(&f, &fam.g, &p).unwrap();
        let closed = hessian_family_closed_form(fam.lambda, &fam.mu, &f, &p).unwrap();
        prop_assert!((&general - &closed).amax() < 1e-10 * (1.0 + general.amax()));
    }

    #[test]
    fn pullback_there_and_back(seed: u64, t in -1.0..1.0f64, x in 0.5..2.0f64, y in -1.0..1.0f64) {
        let target = Chart::bounded(&TXY, &[[-1.0, 1.0], [0.5, 2.0], [-1.0, 1.0]]).unwrap();
        let source = Chart::bounded(&["t", "u", "v"], &[[-1.0, 1.0], [-1.0, 1.0], [-2.0, 2.0]]).unwrap();
        let g = random_metric(seed, &target);
        let phi = CoordinateMap::parse(&source, &["t", "exp(u)", "v + u"]).unwrap();
        let inv = CoordinateMap::parse(&target, &["t", "ln(x)", "y - ln(x)"]).unwrap();
        let p = [t, x, y];
        let (q, jinv) = inv.apply(&p).unwrap();
        let there = pullback_metric(&phi, &g, &q).unwrap();
        let back = jinv.transpose() * there * jinv;
        prop_assert!((back - g.values(&p).unwrap()).amax() < 1e-10);
    }

    #[test]
    fn constant_coefficient_quadratics_are_exact(
        d in prop::array::uniform3(0.5..2.0f64),
        off in prop::array::uniform3(-0.3..0.3f64),
        lin in prop::array::uniform3(-1.0..1.0f64),
        a in -2.0..2.0f64,
    ) {
        let chart = cube();
        let g = MetricField::parse(&chart, &[
            (0, 0, &d[0].to_string()), (1, 1, &d[1].to_string()), (2, 2, &d[2].to_string()),
            (0, 1, &off[0].to_string()), (0, 2, &off[1].to_string()), (1, 2, &off[2].to_string()),
        ]).unwrap();
        let grid = Grid::new(&chart, &GridSpec::uniform(3, 5)).unwrap();
        let sys = assemble_hess_system(&g, &grid).unwrap();
        let gm = g.values(&[0.0; 3]).unwrap();
        let pts: Vec<Vec<f64>> = grid.points().collect();
        let f: Vec<f64> = pts
            .iter()
            .map(|p| {
                let v = DVector::from_column_slice(p);
                0.5 * a * (v.transpose() * &gm * &v)[(0, 0)] + lin.iter().zip(p).map(|(c, x)| c * x).sum::<f64>()
            })
            .collect();
        prop_assert!(sys.max_unscaled_residual(&f, &vec![a; pts.len()]) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn family_members_are_codazzi_with_expected_eigendata(seed: u64) {
        let chart = cube();
        let fam = build_family(2.0, &random_family_mu(seed), &chart).unwrap();
        let grid = Grid::new(&chart, &GridSpec::uniform(3, 5)).unwrap();
        prop_assert!(codazzi_residual(&fam.a, &fam.g, &grid, 1e-8).unwrap().pass);
        let eig = eigen_structure(&fam.a, &fam.g, &grid, 1e-6).unwrap();
        for i in 0..grid.len() {
            let p = grid.point(i);
            let pe = eig.points[i].as_ref().unwrap();
            let (a, g) = (fam.a.values(&p).unwrap(), fam.g.values(&p).unwrap());
            prop_assert!(pe.reconstruction_residual(&a, &g) < 1e-9);
            let t = eig.two_cluster(i).unwrap();
            let mu = fam.mu.eval(&p).unwrap();
            prop_assert!((t.mu - mu).abs() < 1e-9 && (t.lambda - 2.0).abs() < 1e-9);
            // X is g-orthogonal to the fiber coordinates, i.e. collinear with d_t
            let gx = &g * DVector::from_column_slice(&t.x);
            prop_assert!(gx[1].abs() < 1e-9 && gx[2].abs() < 1e-9);
        }
    }
}

#[test]
fn conditions_survive_shift_by_metric() {
    let tol = Tolerances::default();
    for (k, id) in BATTERY_IDS.iter().enumerate() {
        let ex = named_example(id).unwrap();
        let grid = Grid::new(ex.chart(), &GridSpec::uniform(3, 5)).unwrap();
        let eig = eigen_structure(&ex.a, &ex.g, &grid, tol.cluster).unwrap();
        let base = char_conditions(&ex.a, &ex.g, &eig, &tol).unwrap().booleans;
        for c in [-0.75 - 0.1 * k as f64, 1.5] {
            let names = ex.chart().coord_names();
            let mut entries = Vec::new();
            for i in 0..3 {
                for j in i..3 {
                    entries.push(
                        ex.a.field().entry(i, j).clone()
                            + ScalarExpr::constant(c, names) * ex.g.field().entry(i, j).clone(),
                    );
                }
            }
            let shifted = SymTensorField::new(SymField::from_packed(ex.chart(), entries).unwrap());
            let eig = eigen_structure(&shifted, &ex.g, &grid, tol.cluster).unwrap();
            let b = char_conditions(&shifted, &ex.g, &eig, &tol).unwrap().booleans;
            assert_eq!(b, base, "{id} shifted by {c}");
        }
    }
}

#[test]
fn kernel_dimension_is_stable_under_refinement() {
    for id in ["flat", "torus", "inconsistent_warp", "warped_consistent", "xy_family"] {
        let ex = named_example(id).unwrap();
        let mut dims = Vec::new();
        for n in [7, 9] {
            let grid = Grid::new(ex.chart(), &GridSpec::uniform(3, n)).unwrap();
            let sys = assemble_hess_system(&ex.g, &grid).unwrap();
            let basis = kernel_basis(&sys, 1e-6).unwrap();
            let bound = 10.0 * 1e-6 * basis.sigma_max;
            assert!(basis.residuals.iter().all(|r| *r < bound), "{id} {n}: {:?}", basis.residuals);
            dims.push(basis.dimension());
        }
        assert_eq!(dims[0], dims[1], "{id}");
    }
}

#[test]
fn verified_candidates_lie_in_the_numerical_kernel() {
    let cases = [
        ("inconsistent_warp", "(x^2 + y^2)/2", "1"),
        ("flat", "t - 2*x", "0"),
        ("flat", "(t^2 + x^2 + y^2)/2", "1"),
    ];
    for (id, f, a) in cases {
        let ex = named_example(id).unwrap();
        let names = ex.chart().coord_names();
        let (fe, ae) = (ScalarExpr::parse(f, names).unwrap(), ScalarExpr::parse(a, names).unwrap());
        let grid = Grid::new(ex.chart(), &ex.detect_grid).unwrap();
        assert!(verify_candidate(&fe, &ae, &ex.g, &grid, 1e-10).unwrap().pass, "{id}");
        let (det, basis) = detect_warped(&ex.g, &grid, &ex.probe, 1e-6, 1e-3, 0).unwrap();
        assert_eq!(det.verdict.verdict, codazzi_lab::brinkmann::Verdict::WarpedCandidate, "{id}");
        let sampled: Vec<f64> = grid.points().map(|p| fe.eval(&p).unwrap()).collect();
        let k = basis.dimension();
        let m = DMatrix::from_fn(grid.len(), k, |i, j| basis.f[j][i]);
        let rhs = DVector::from_vec(sampled);
        let coef = m.clone().svd(true, true).solve(&rhs, 1e-12).unwrap();
        let miss = (m * coef - &rhs).norm() / rhs.norm();
        assert!(miss < 1e-6, "{id}: relative distance to kernel {miss:e}");
    }
}
