//! Structural invariants of the engines and cross-route identities not covered elsewhere.

mod support;

use catabird::analysis::{first_visit_stats, star_rates, stationary_distribution};
use catabird::closedform::{a2_first_visit_hat, a2_transient_hat, A3Params, A5Params};
use catabird::model::{
    params, truncated_generator, zoo_preset, GeneratorVariant, ProcessSpec, TruncationWindow,
};
use catabird::resolvent::{
    avoid_transform, avoid_transform_hat, delta_transform, eta_direct, gamma_cat, gamma_hat, resolvent_cat,
    resolvent_hat, DeltaForm, ResolventRoute,
};
use catabird::specfun::AccuracyBudget;
use catabird::transient::*;
use proptest::prelude::*;

fn preset(name: &str, p: &[(&str, f64)]) -> ProcessSpec<f64> {
    zoo_preset(name, &params(p)).unwrap().homogeneous().unwrap()
}

fn mm1() -> ProcessSpec<f64> {
    preset("ie_const", &[("alpha", 1.0), ("beta", 1.0), ("xi", 1.0)])
}

/// One of the homogeneous presets with positive catastrophe rate, selected by `which`.
fn any_preset(which: u8, a: f64, b: f64, xi: f64) -> ProcessSpec<f64> {
    match which % 4 {
        0 => preset("ie_const", &[("alpha", a), ("beta", b), ("xi", xi)]),
        1 => preset("id", &[("nu", a), ("beta", b), ("xi", xi)]),
        2 => preset("ibd", &[("alpha", 0.5 * a.min(b)), ("nu", a), ("beta", b), ("xi", xi)]),
        _ => preset("pure_birth_const", &[("alpha", a), ("xi", xi), ("r", 2.0)]),
    }
}

fn w() -> TruncationWindow<f64> {
    TruncationWindow::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn conservative_generators_have_zero_row_sums(
        which in 0u8..4, a in 0.2f64..3.0, b in 0.2f64..3.0, xi in 0.1f64..2.0, upper in 2usize..60,
    ) {
        let spec = any_preset(which, a, b, xi);
        let win = TruncationWindow::fixed(upper, 1e-10).unwrap();
        let cat = truncated_generator(&spec, &win, GeneratorVariant::WithCatastrophes).unwrap();
        let hat = truncated_generator(&spec, &win, GeneratorVariant::Hat).unwrap();
        let hat0 = truncated_generator(&spec.with_xi(0.0), &win, GeneratorVariant::WithCatastrophes).unwrap();
        for i in 0..cat.dim() {
            for g in [&cat, &hat] {
                let (off, d) = g.row(i);
                let s: f64 = off.values().sum::<f64>() + d;
                prop_assert!(s.abs() <= 1e-14 * (1.0 + d.abs()), "row {i} sums to {s}");
            }
            prop_assert_eq!(hat.row(i), hat0.row(i));
        }
    }

    #[test]
    fn transient_mass_is_conserved(
        which in 0u8..4, a in 0.2f64..3.0, b in 0.2f64..3.0, xi in 0.1f64..2.0, j in 0usize..5, t in 0.0f64..6.0,
    ) {
        let spec = any_preset(which, a, b, xi);
        let j = j + spec.r;
        let tol = 1e-10;
        for route in [Route::Direct, Route::Decomposition] {
            let dv = transient_cat(&spec, j, t, &w(), tol, route).unwrap();
            prop_assert!(dv.mass.iter().all(|&m| m >= 0.0));
            let total = dv.total();
            prop_assert!(total <= 1.0 + 1e-12 && total >= 1.0 - tol - w().tail_tol, "{route:?} {total}");
            prop_assert!((total + dv.defect - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn resolvent_positivity_and_total(
        which in 0u8..4, a in 0.2f64..3.0, b in 0.2f64..3.0, xi in 0.1f64..2.0, j in 0usize..5, lambda in 0.05f64..20.0,
    ) {
        let spec = any_preset(which, a, b, xi);
        let j = j + spec.r;
        let hat = resolvent_hat(&spec, j, lambda, &w()).unwrap();
        let cat = resolvent_cat(&spec, j, lambda, &w(), ResolventRoute::Reduction).unwrap();
        for sol in [&hat, &cat] {
            prop_assert!(sol.values.iter().all(|&v| v >= 0.0));
            let mass = lambda * sol.values.iter().sum::<f64>();
            prop_assert!((mass - 1.0).abs() <= 1e-10, "{mass}");
        }
    }

    #[test]
    fn first_visit_transforms_are_monotone_probabilities(
        a in 0.2f64..3.0, b in 0.2f64..3.0, xi in 0.1f64..2.0, j in 0usize..5, k in 0usize..5, lambda in 0.05f64..10.0,
    ) {
        prop_assume!(j != k);
        let spec = any_preset(0, a, b, xi);
        let g1 = gamma_hat(&spec, j, k, lambda, &w()).unwrap();
        let g2 = gamma_hat(&spec, j, k, 2.0 * lambda, &w()).unwrap();
        prop_assert!(g1.value > 0.0 && g1.value <= 1.0 && g2.value < g1.value && g1.derivative < 0.0);
        let c1 = gamma_cat(&spec, j, k, lambda, &w()).unwrap();
        let c2 = gamma_cat(&spec, j, k, 2.0 * lambda, &w()).unwrap();
        prop_assert!(c1 > 0.0 && c1 <= 1.0 && c2 < c1);
        let d1 = delta_transform(&spec, j, lambda, &w(), DeltaForm::Cemetery).unwrap();
        let d2 = delta_transform(&spec, j, 2.0 * lambda, &w(), DeltaForm::Cemetery).unwrap();
        prop_assert!(d1 > 0.0 && d1 <= 1.0 && d2 < d1);
    }

    #[test]
    fn first_visit_cdf_is_nondecreasing_and_equals_taboo_defect(
        a in 0.2f64..3.0, b in 0.2f64..3.0, j in 0usize..5, k in 0usize..5, t in 0.05f64..4.0,
    ) {
        prop_assume!(j != k);
        let spec = any_preset(0, a, b, 1.0);
        let f1 = first_visit_cdf_hat(&spec, j, k, t, &w(), 1e-12).unwrap();
        let f2 = first_visit_cdf_hat(&spec, j, k, 1.5 * t, &w(), 1e-12).unwrap();
        prop_assert!(f2 >= f1 - 1e-12);
        let defect = taboo_hat(&spec, j, k, t, &w(), 1e-12).unwrap().defect;
        prop_assert!((f1 - defect).abs() <= 1e-12, "{f1} vs {defect}");
    }

    #[test]
    fn linear_mean_with_catastrophes_is_the_free_mean_with_shifted_death(
        alpha in 0.1f64..3.0, nu in 0.1f64..3.0, beta in 0.1f64..3.0, xi in 0.1f64..3.0, j in 0usize..10, t in 0.0f64..5.0,
    ) {
        let with = A5Params::new(alpha, nu, beta, xi).unwrap();
        let shifted = A5Params::new(alpha, nu, beta + xi, xi).unwrap();
        let (a, b) = (with.mean(j, t), shifted.hat_mean(j, t));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn taboo_floor_identity() {
    let spec = mm1();
    for (j, t) in [(1, 0.5), (3, 1.0), (2, 2.5)] {
        let a = taboo_cat_r(&spec, j, t, &w(), 1e-13).unwrap();
        let b = taboo_cat(&spec, j, 0, t, &w(), 1e-13).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10, "j={j} t={t}");
    }
    // e^{-ξt} times the catastrophe-free value
    let a = taboo_cat_r(&spec, 1, 0.5, &w(), 1e-13).unwrap().prob(1);
    let b = taboo_hat(&spec, 1, 0, 0.5, &w(), 1e-13).unwrap().prob(1);
    assert!((a - (-0.5f64).exp() * b).abs() < 1e-15);
}

#[test]
fn doubling_the_window_changes_nothing_beyond_tail_tol() {
    for spec in [mm1(), preset("ibd", &[("alpha", 0.6), ("nu", 1.0), ("beta", 1.0), ("xi", 0.5)])] {
        for t in [0.5, 3.0] {
            let a = transient_cat(&spec, 2, t, &w(), 1e-12, Route::Direct).unwrap();
            let big = TruncationWindow::fixed(2 * a.window.upper, 1e-10).unwrap();
            let b = transient_cat(&spec, 2, t, &big, 1e-12, Route::Direct).unwrap();
            assert!(a.max_abs_diff(&b) < w().tail_tol, "{}", a.max_abs_diff(&b));
        }
    }
}

#[test]
fn ie_closed_form_matches_time_varying_ode() {
    let (alpha, beta) = (1.0, 0.8);
    let tv = zoo_preset::<f64>(
        "ie_timevarying",
        &params(&[("alpha", alpha), ("beta", beta), ("xi", 1.0), ("w_amp", 0.5)]),
    )
    .unwrap()
    .time_varying()
    .unwrap()
    .hat();
    let rate = |t: f64| 1.0 + 0.5 * t.sin();
    let budget = AccuracyBudget::default();
    for j in [0, 3] {
        for t in [0.5, 2.0] {
            let ode = nonhomogeneous_transient(&tv, j, t, &w(), 1e-10, Route::Direct).unwrap();
            for n in 0..25 {
                let c = a2_transient_hat(alpha, beta, &rate, 0.0, t, j, n, &budget).unwrap();
                assert!((c - ode.prob(n)).abs() < 1e-7, "j={j} t={t} n={n}");
            }
            if j > 0 {
                let g = a2_first_visit_hat(alpha, beta, &rate, 0.0, t, j, &budget).unwrap();
                let e = nonhomogeneous_first_visit_density_r(&tv, j, t, &w(), 1e-10).unwrap();
                assert!((g - e).abs() < 1e-7, "density j={j} t={t}: {g} vs {e}");
            }
        }
    }
}

#[test]
fn skip_free_convolution() {
    let spec = mm1();
    let t = 1.5;
    let breaks: Vec<f64> = (0..=10).map(|i| t * i as f64 / 10.0).collect();
    let conv = support::gl_integrate(
        |s| {
            first_visit_density(&spec, 0, 1, s, &w(), 1e-13).unwrap()
                * first_visit_density(&spec, 1, 2, t - s, &w(), 1e-13).unwrap()
        },
        &breaks,
    );
    let direct = first_visit_density(&spec, 0, 2, t, &w(), 1e-13).unwrap();
    assert!((conv - direct).abs() < 1e-8, "{conv} vs {direct}");
}

#[test]
fn avoiding_transform_is_the_transform_of_taboo_probabilities() {
    let spec = mm1();
    let lambda = 0.7;
    let horizon = 40.0;
    let breaks: Vec<f64> = (0..=80).map(|i| horizon * i as f64 / 80.0).collect();
    let laplace = support::gl_integrate(
        |t| (-lambda * t).exp() * taboo_cat(&spec, 1, 3, t, &w(), 1e-13).unwrap().prob(1),
        &breaks,
    );
    let a = avoid_transform(&spec, 1, 1, 3, lambda, &w()).unwrap();
    assert!((a - laplace).abs() < 1e-6, "{a} vs {laplace}");

    // without catastrophes the two forms coincide
    let free = spec.with_xi(0.0);
    let a = avoid_transform(&free, 1, 1, 3, lambda, &w()).unwrap();
    let b = avoid_transform_hat(&free, 1, 1, 3, lambda, &w()).unwrap();
    assert!((a - b).abs() < 1e-14);
}

#[test]
fn eta_is_a_probability_transform() {
    let spec = mm1();
    for lambda in [0.1, 1.0, 5.0] {
        let eta = eta_direct(&spec, 2, lambda, &w()).unwrap();
        let total = lambda * (eta.values.iter().sum::<f64>() + eta.cemetery.unwrap());
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }
    let faint = spec.with_xi(1e-9);
    let eta = eta_direct(&faint, 2, 1.0, &w()).unwrap();
    assert!(eta.cemetery.unwrap() < 1e-8);
}

#[test]
fn pure_birth_effective_catastrophe_transform() {
    let spec = preset("pure_birth_const", &[("alpha", 1.3), ("xi", 0.4)]);
    for lambda in [0.0, 0.5, 3.0] {
        for j in [1, 4] {
            let d = delta_transform(&spec, j, lambda, &w(), DeltaForm::Cemetery).unwrap();
            assert!((d - 0.4 / (lambda + 0.4)).abs() < 1e-12);
        }
    }
}

#[test]
fn small_argument_resolvent_approaches_stationary_law() {
    let spec = mm1();
    let q = stationary_distribution(&spec, &w()).unwrap();
    let lambda = 1e-7;
    let pi = resolvent_cat(&spec, 3, lambda, &w(), ResolventRoute::Reduction).unwrap();
    for n in 0..10 {
        assert!((lambda * pi.value(n) - q.prob(n)).abs() < 1e-6, "n={n}");
    }
    let late = transient_cat(&spec, 3, 40.0, &w(), 1e-12, Route::Direct).unwrap();
    for n in 0..10 {
        assert!((late.prob(n) - q.prob(n)).abs() < 1e-10);
    }
}

#[test]
fn star_rates_reproduce_constant_companion_rates() {
    let (a, b, xi) = (0.9, 1.4, 0.6);
    let spec = preset("ie_const", &[("alpha", a), ("beta", b), ("xi", xi)]);
    let star = star_rates(&spec, &w()).unwrap();
    let (sa, sb) = A3Params::new(a, b, xi).unwrap().star_rates();
    for n in 0..30 {
        assert!((star.births[n] - sa).abs() < 1e-10 && star.births[n] > a);
        assert!((star.deaths[n] - sb).abs() < 1e-10 && star.deaths[n] < b);
    }
}

#[test]
fn stationary_mass_and_residual() {
    for which in 0..4 {
        let spec = any_preset(which, 1.2, 0.9, 0.7);
        let st = stationary_distribution(&spec, &w()).unwrap();
        assert!(st.residual < 1e-10);
        assert!(st.total() >= 1.0 - w().tail_tol && st.total() <= 1.0 + 1e-12);
        assert!(st.q.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn first_visit_density_integrates_to_one() {
    let spec = mm1();
    let breaks: Vec<f64> = (0..=120).map(|i| i as f64 * 0.25).collect();
    let total = support::gl_integrate(|t| first_visit_density_r(&spec, 2, t, &w(), 1e-13).unwrap(), &breaks);
    assert!((total - 1.0).abs() < 1e-9, "{total}");

    let pure = preset("pure_birth_const", &[("alpha", 2.0), ("xi", 0.5)]);
    for t in [0.1, 1.0, 3.0] {
        let g = first_visit_density_r(&pure, 3, t, &w(), 1e-13).unwrap();
        assert!((g - 0.5 * (-0.5 * t).exp()).abs() < 1e-12);
    }
}

#[test]
fn first_step_up_from_floor_is_exponential_for_pure_birth() {
    let spec = preset("pure_birth_const", &[("alpha", 2.0), ("xi", 0.5)]);
    let s = first_visit_stats(&spec, 0, 1, &w()).unwrap();
    assert!((s.mean - 0.5).abs() < 1e-12 && (s.variance - 0.25).abs() < 1e-12);
}

#[test]
fn conditional_mean_without_catastrophes_is_the_free_mean() {
    let spec = preset("ibd", &[("alpha", 0.7), ("nu", 1.0), ("beta", 1.1), ("xi", 1.0)]).with_xi(0.0);
    let p = A5Params::new(0.7, 1.0, 1.1, 1.0).unwrap();
    let m = conditional_mean_cat(&spec, 2, 1.3, &w(), 1e-12).unwrap();
    assert!((m - p.hat_mean(2, 1.3)).abs() < 1e-8);
}
