//! Acceptance criteria, one line each. The derivative cross-check runs
//! first and gates the geometric criteria.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};

use codazzi_lab::brinkmann::{
    assemble_hess_system, classify_warped, detect_warped, fit_quadratic, kernel_basis, verify_candidate, Verdict,
};
use codazzi_lab::cli::commands::coefficient_sweep;
use codazzi_lab::codazzi::{
    codazzi_residual, eigen_structure, eta_and_warp_extract, grid_diagnostics, lemmas::lemma_report, ConditionReport,
    Lemma,
};
use codazzi_lab::gallery::{
    characteristics_residual, mu_form, named_example, polar_pullback_residual, random_mu_form, BATTERY_IDS,
};
use codazzi_lab::geometry::{christoffel_at, christoffel_family_closed_form};
use codazzi_lab::tolerances::Tolerances;
use codazzi_lab::{Chart, Grid, GridSpec, MetricField, ScalarExpr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn derivatives_match_finite_differences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let f = common::random_expr(&mut rng, 3);
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = common::ad_fd_defect(&f, &p);
        if d > 1e-6 {
            return Err(format!("{f} at {p:?}: relative defect {d:e}"));
        }
        worst = worst.max(d);
    }
    Ok(format!("100 pairs, worst relative defect {worst:.1e}"))
}

fn christoffel_closed_forms() -> Outcome {
    let mut worst = 0.0f64;
    for id in ["torus", "xy_family"] {
        let ex = named_example(id).unwrap();
        let fam = ex.family.as_ref().unwrap();
        let grid = Grid::new(ex.chart(), &GridSpec::uniform(3, 11)).unwrap();
        for p in grid.points() {
            let numeric = christoffel_at(&ex.g, &p).unwrap();
            let closed = christoffel_family_closed_form(fam.lambda, &fam.mu, &p).unwrap();
            worst = worst.max(numeric.max_abs_diff(&closed));
        }
    }
    check(worst < 1e-10, format!("max |diff| {worst:.1e} over two 11^3 grids"))
}

fn torus_is_codazzi_and_detector_is_sensitive() -> Outcome {
    let ex = named_example("torus").unwrap();
    let grid = Grid::new(ex.chart(), &GridSpec::uniform(3, 11)).unwrap();
    let r = codazzi_residual(&ex.a, &ex.g, &grid, 1e-8).unwrap();
    let mut broken = ex.a.clone();
    broken
        .field_mut()
        .set_entry(1, 1, ScalarExpr::parse("1 + 0.1*x", ex.chart().coord_names()).unwrap())
        .unwrap();
    let b = codazzi_residual(&broken, &ex.g, &grid, 1e-8).unwrap();
    check(
        r.pass && b.max > 1e-3,
        format!("torus {:.1e}, broken tensor {:.1e}", r.max, b.max),
    )
}

fn lemma_identities_on_battery() -> Outcome {
    let tol = Tolerances::default();
    let mut worst = 0.0f64;
    let mut used = 0;
    for id in BATTERY_IDS {
        let ex = named_example(id).unwrap();
        let grid = Grid::new(ex.chart(), &ex.grid).unwrap();
        if !codazzi_residual(&ex.a, &ex.g, &grid, tol.codazzi).unwrap().pass {
            continue;
        }
        used += 1;
        let eig = eigen_structure(&ex.a, &ex.g, &grid, tol.cluster).unwrap();
        let diag = grid_diagnostics(&ex.a, &ex.g, &eig, &tol).unwrap();
        for l in Lemma::ALL {
            let r = lemma_report(l, &eig, &diag, tol.lemma);
            if !r.pass {
                return Err(format!("{id}: {} max {:e} ({} included)", r.check, r.max, r.included));
            }
            worst = worst.max(r.max);
        }
    }
    Ok(format!("{used} instances, worst residual {worst:.1e}"))
}

fn conditions_agree_on_battery() -> Outcome {
    let tol = Tolerances::default();
    let mut line = Vec::new();
    let mut ok = true;
    for id in BATTERY_IDS {
        let ex = named_example(id).unwrap();
        let grid = Grid::new(ex.chart(), &ex.grid).unwrap();
        let eig = eigen_structure(&ex.a, &ex.g, &grid, tol.cluster).unwrap();
        let diag = grid_diagnostics(&ex.a, &ex.g, &eig, &tol).unwrap();
        let c = ConditionReport::from_diagnostics(&eig, &diag, tol.cond);
        let mu_moves_in_fiber = matches!(id, "torus" | "inconsistent_warp" | "xy_family");
        let expected = if mu_moves_in_fiber { c.all_false() } else { c.all_true() };
        ok &= c.agree && expected;
        line.push(format!("{id}={}", if c.all_true() { "T" } else if c.all_false() { "F" } else { "mixed" }));
    }
    check(ok, line.join(" "))
}

fn torus_is_not_warped() -> Outcome {
    let ex = named_example("torus").unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [9, 11] {
        let grid = Grid::new(ex.chart(), &GridSpec::uniform(3, n)).unwrap();
        let (d, _) = detect_warped(&ex.g, &grid, &[0.0; 3], 1e-6, 1e-3, 0).unwrap();
        ok &= d.kernel_dimension == 1 && d.verdict.verdict == Verdict::NoNontrivialSolution;
        parts.push(format!("{n}^3: dim {} {:?}", d.kernel_dimension, d.verdict.verdict));
    }
    check(ok, parts.join(", "))
}

fn inconsistent_warp_reproduced() -> Outcome {
    let ex = named_example("inconsistent_warp").unwrap();
    let names = ex.chart().coord_names();
    let grid = Grid::new(ex.chart(), &ex.detect_grid).unwrap();
    let f = ScalarExpr::parse("(x^2 + y^2)/2", names).unwrap();
    let a = ScalarExpr::parse("1", names).unwrap();
    let cand = verify_candidate(&f, &a, &ex.g, &grid, 1e-10).unwrap();
    let (d, _) = detect_warped(&ex.g, &grid, &[0.0, 1.0, 1.0], 1e-6, 1e-3, 0).unwrap();
    let grad = d.verdict.certificate.as_ref().map_or(0.0, |c| c.gradient_norm);
    let polar = polar_pullback_residual(11, 1e-10).unwrap();
    check(
        cand.pass && grad > 0.1 && polar.pass,
        format!("candidate {:.1e}, |grad f| {grad:.3}, polar {:.1e}", cand.max, polar.max),
    )
}

fn warp_extracted() -> Outcome {
    let tol = Tolerances::default();
    let ex = named_example("warped_consistent").unwrap();
    let grid = Grid::new(ex.chart(), &ex.grid).unwrap();
    let codazzi = codazzi_residual(&ex.a, &ex.g, &grid, 1e-8).unwrap();
    let eig = eigen_structure(&ex.a, &ex.g, &grid, tol.cluster).unwrap();
    let w = eta_and_warp_extract(&ex.a, &ex.g, &eig, &tol).map_err(|e| e.to_string())?;
    let eta_dev = (w.eta_range[0] - 1.0).abs().max((w.eta_range[1] - 1.0).abs());
    check(
        codazzi.pass && eta_dev < 1e-5 && w.warp.max < 1e-5,
        format!("|eta - 1| {eta_dev:.1e}, warp {:.1e}, Codazzi {:.1e}", w.warp.max, codazzi.max),
    )
}

fn mu_forms_solve_characteristics() -> Outcome {
    let chart = Chart::bounded(&["x", "y"], &[[0.5, 1.5]; 2]).unwrap();
    let grid = Grid::new(&chart, &GridSpec::uniform(2, 11)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for k in 1..=6 {
        for _ in 0..10 {
            let (p, g) = random_mu_form(k, &mut rng).unwrap();
            let mu = mu_form(k, &p, &g, chart.coord_names()).unwrap();
            let (a, b, c) = p.pde_coefficients(k).unwrap();
            let r = characteristics_residual(&mu, a, b, c, &grid, 1e-10).unwrap();
            if !r.pass {
                return Err(format!("form {k} {p:?}: {:e}", r.max));
            }
            worst = worst.max(r.max);
        }
    }
    let torus = named_example("torus").unwrap();
    let tgrid = Grid::new(torus.chart(), &torus.grid).unwrap();
    let mu = &torus.family.as_ref().unwrap().mu;
    let least = coefficient_sweep()
        .into_iter()
        .map(|[a, b, c]| characteristics_residual(mu, a, b, c, &tgrid, 1e-10).unwrap().max)
        .fold(f64::INFINITY, f64::min);
    check(
        least > 1e-2,
        format!("60 draws, worst {worst:.1e}; torus mu least residual {least:.3}"),
    )
}

fn flat_kernel_matches_analytic_space() -> Outcome {
    let chart = Chart::bounded(&["t", "x", "y"], &[[-1.0, 1.0]; 3]).unwrap();
    let grid = Grid::new(&chart, &GridSpec::uniform(3, 7)).unwrap();
    let g = MetricField::euclidean(&chart);
    let sys = assemble_hess_system(&g, &grid).unwrap();
    let basis = kernel_basis(&sys, 1e-6).unwrap();
    let worst_res = basis.residuals.iter().copied().fold(0.0, f64::max);
    // every f lies in span{1, t, x, y, |p|^2} and a is twice its |p|^2 part
    let mut worst_fit = 0.0f64;
    for (f, a) in basis.f.iter().zip(&basis.a) {
        let fit = fit_quadratic(&grid, f);
        let coef = |name: &str| fit.terms.iter().find(|(n, _)| n == name).unwrap().1;
        let r2 = coef("t^2");
        let off = ["x^2", "y^2"].iter().map(|n| (coef(n) - r2).abs()).fold(0.0, f64::max);
        let mixed = ["t*x", "t*y", "x*y"].iter().map(|n| coef(n).abs()).fold(0.0, f64::max);
        let a_dev = a.iter().map(|v| (v - 2.0 * r2).abs()).fold(0.0, f64::max);
        worst_fit = worst_fit.max(fit.rms_residual).max(off).max(mixed).max(a_dev);
    }
    let verdict = classify_warped(&basis, &sys, &g, &[0.0; 3], 1e-3, 0).unwrap().verdict;
    check(
        basis.dimension() == 5 && worst_res < 1e-9 && worst_fit < 1e-9 && verdict == Verdict::WarpedCandidate,
        format!(
            "dim {}, worst residual {worst_res:.1e}, analytic-space defect {worst_fit:.1e}",
            basis.dimension()
        ),
    )
}

/// Writes to the raw stderr handle, which libtest does not capture, so the
/// summary shows up in every `cargo test` run.
fn say(line: String) {
    use std::io::Write;
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}

#[test]
fn acceptance() {
    let gate: (&str, fn() -> Outcome) = ("10 derivatives vs finite differences", derivatives_match_finite_differences);
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 Christoffel closed forms", christoffel_closed_forms),
        ("2 torus Codazzi residual and sensitivity", torus_is_codazzi_and_detector_is_sensitive),
        ("3 eigendistribution identities", lemma_identities_on_battery),
        ("4 warped-product conditions agree", conditions_agree_on_battery),
        ("5 torus not warped", torus_is_not_warped),
        ("6 inconsistent warp reproduced", inconsistent_warp_reproduced),
        ("7 warp extraction", warp_extracted),
        ("8 mu forms and characteristics", mu_forms_solve_characteristics),
        ("9 flat numerical kernel", flat_kernel_matches_analytic_space),
    ];
    let run = |name: &str, f: fn() -> Outcome| -> bool {
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match &out {
            Ok(d) => say(format!("PASS criterion {name}: {d}")),
            Err(d) => say(format!("FAIL criterion {name}: {d}")),
        }
        out.is_ok()
    };
    let mut failed = Vec::new();
    if !run(gate.0, gate.1) {
        failed.push(gate.0);
        for (name, _) in criteria {
            say(format!("SKIP criterion {name}: derivative gate failed"));
            failed.push(name);
        }
    } else {
        for (name, f) in criteria {
            if !run(name, f) {
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
