//! Randomized invariants of the public API.

use dnls::analysis::arccosh_1p;
use dnls::continuum::limit_profile_with_tol;
use dnls::{
    builtin, conserved_quantities, decay_rate, energy, flow_step, gateaux_gradient, minimize,
    normalize, residual_sup, stability_threshold, FlowConfig, NormalizedPotential, Profile,
    ProfileDocument, Setting,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn cubic() -> NormalizedPotential {
    normalize(&builtin("cubic").unwrap()).unwrap()
}

fn any_setting() -> impl Strategy<Value = Setting> {
    prop_oneof![Just(Setting::OnSite), Just(Setting::InterSite)]
}

fn any_builtin() -> impl Strategy<Value = NormalizedPotential> {
    prop_oneof![
        Just("cubic"),
        Just("power:1"),
        Just("power:2"),
        Just("power:4"),
    ]
    .prop_map(|name| normalize(&builtin(name).unwrap()).unwrap())
}

/// Non-decreasing values in [0, 1]: any sorted sample is admissible.
fn monotone_values(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, 1..max_len).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

/// Strictly increasing values separated by at least `2e-4` and kept away
/// from the endpoints, so coordinate perturbations up to ~1e-5 stay
/// admissible.
fn spaced_values(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, 1..max_len).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        for (i, x) in v.iter_mut().enumerate() {
            *x = 0.01 + 0.98 * (*x + i as f64 * 1e-3) / (1.0 + n * 1e-3);
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn f_is_even_and_f_prime_is_odd(
        np in any_builtin(),
        eta in -1.0..=1.0f64,
    ) {
        let f = np.eval_f(eta).unwrap();
        let f_mirror = np.eval_f(-eta).unwrap();
        prop_assert_eq!(f.to_bits(), f_mirror.to_bits());
        let fp = np.eval_f_prime(eta).unwrap();
        let fp_mirror = np.eval_f_prime(-eta).unwrap();
        prop_assert_eq!(fp.to_bits(), (-fp_mirror).to_bits());
    }

    #[test]
    fn gradient_matches_central_differences(
        np in any_builtin(),
        setting in any_setting(),
        values in spaced_values(12),
        beta in 0.05..4.0f64,
    ) {
        let p = Profile::new(setting, values.clone()).unwrap();
        let g = gateaux_gradient(&p, &np, beta).unwrap();
        let h = 1e-6;
        let scale = energy(&p, &np, beta).unwrap().total.abs().max(1.0);
        for k in 0..values.len() {
            let mut plus = values.clone();
            plus[k] += h;
            let mut minus = values.clone();
            minus[k] -= h;
            let e_plus = energy(&Profile::new(setting, plus).unwrap(), &np, beta).unwrap();
            let e_minus = energy(&Profile::new(setting, minus).unwrap(), &np, beta).unwrap();
            let fd = (e_plus.total - e_minus.total) / (2.0 * h);
            // Each stored coordinate appears twice in the reflected line, and
            // G carries the 1/2 from F'/2, so dE/du_k = 4 G_k.
            prop_assert!(
                (fd - 4.0 * g.values[k]).abs() <= 1e-4 * scale.max(fd.abs()),
                "slot {k}: fd {fd} vs 4G {}", 4.0 * g.values[k]
            );
        }
    }

    #[test]
    fn energy_matches_naive_sum_over_reflected_line(
        np in any_builtin(),
        setting in any_setting(),
        values in monotone_values(14),
        beta in 0.05..4.0f64,
    ) {
        let p = Profile::new(setting, values).unwrap();
        let e = energy(&p, &np, beta).unwrap();
        // Far enough out the tail is constant: bonds vanish and F(1) = 0, so
        // a plain sum over the reflected window reproduces the energy.
        let line = p.reflected(3);
        let mut f_sum = 0.0;
        for &(_, u) in &line {
            f_sum += np.eval_f(u).unwrap();
        }
        let mut d_sum = 0.0;
        for w in line.windows(2) {
            let d = w[1].1 - w[0].1;
            d_sum += d * d;
        }
        // The reflected window drops the two outermost tail bonds (zero) only.
        prop_assert!((e.f_part - f_sum).abs() <= 1e-11 * f_sum.abs().max(1.0));
        prop_assert!((e.d_part - d_sum).abs() <= 1e-11 * d_sum.abs().max(1.0));
        prop_assert!((e.total - (f_sum + beta * d_sum)).abs() <= 1e-10 * e.total.abs().max(1.0));
    }

    #[test]
    fn flow_step_stays_admissible_and_descends(
        np in any_builtin(),
        setting in any_setting(),
        values in monotone_values(14),
        beta in 0.05..4.0f64,
        tau_frac in 0.05..1.0f64,
    ) {
        let p = Profile::new(setting, values).unwrap();
        let cfg = FlowConfig::with_tau(tau_frac * stability_threshold(&np, beta));
        let next = flow_step(&p, &np, beta, &cfg).unwrap();
        prop_assert!(Profile::new(next.setting(), next.values().to_vec()).is_ok());
        let before = energy(&p, &np, beta).unwrap().total;
        let after = energy(&next, &np, beta).unwrap().total;
        prop_assert!(
            after <= before + 1e-9 * before.abs().max(1.0),
            "energy rose: {before} -> {after}"
        );
    }

    #[test]
    fn zero_step_is_the_identity(
        np in any_builtin(),
        setting in any_setting(),
        values in monotone_values(14),
        beta in 0.05..4.0f64,
    ) {
        let p = Profile::new(setting, values.clone()).unwrap();
        let cfg = FlowConfig { tau: 0.0, ..FlowConfig::default() };
        let next = flow_step(&p, &np, beta, &cfg).unwrap();
        for (a, b) in next.values().iter().zip(&values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn minimize_is_deterministic(
        setting in any_setting(),
        n in 1usize..8,
        beta in 0.05..2.0f64,
    ) {
        let np = cubic();
        let cfg = FlowConfig { max_steps: 200, ..FlowConfig::auto(&np, beta) };
        let a = minimize(setting, n, &np, beta, &cfg).unwrap();
        let b = minimize(setting, n, &np, beta, &cfg).unwrap();
        prop_assert_eq!(a.steps_taken, b.steps_taken);
        for (x, y) in a.profile.values().iter().zip(b.profile.values()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        prop_assert_eq!(a.energy.total.to_bits(), b.energy.total.to_bits());
        prop_assert_eq!(a.residual.to_bits(), b.residual.to_bits());
    }

    #[test]
    fn converged_residual_bounds_gradient(
        setting in any_setting(),
        n in 1usize..8,
        beta in 0.1..2.0f64,
    ) {
        let np = cubic();
        let cfg = FlowConfig { max_steps: 20_000, ..FlowConfig::auto(&np, beta) };
        let r = minimize(setting, n, &np, beta, &cfg).unwrap();
        prop_assert!(r.converged);
        let check = residual_sup(&r.profile, &np, beta).unwrap();
        prop_assert_eq!(check.to_bits(), r.residual.to_bits());
        prop_assert!(check <= cfg.residual_tol);
    }

    #[test]
    fn decay_rate_decreases_with_coupling(
        np in any_builtin(),
        beta in 0.05..10.0f64,
        factor in 1.1..8.0f64,
    ) {
        let slow = decay_rate(&np, beta).unwrap();
        let fast = decay_rate(&np, beta * factor).unwrap();
        prop_assert!(fast.lambda_exact < slow.lambda_exact);
        prop_assert!(fast.kappa_inf > slow.kappa_inf);
        // kappa_inf is exactly the tail contraction ratio e^{-lambda}.
        prop_assert!(
            (slow.kappa_inf - (-slow.lambda_exact).exp()).abs() <= 1e-12 * slow.kappa_inf
        );
    }

    #[test]
    fn arccosh_1p_inverts_cosh(exponent in -16.0..2.0f64) {
        let y = 10f64.powf(exponent);
        let x = arccosh_1p(y);
        // cosh(x) - 1 = 2 sinh^2(x/2) avoids the cancellation near 1.
        let back = 2.0 * (0.5 * x).sinh().powi(2);
        prop_assert!((back - y).abs() <= 1e-12 * y, "y {y} round-trips to {back}");
    }

    #[test]
    fn quadrature_scales_as_sqrt_beta(beta in 0.3..3.0f64) {
        let np = cubic();
        let grid: Vec<f64> = (1..=24).map(|k| k as f64 / 25.0).collect();
        let base = limit_profile_with_tol(&np, beta, &grid, 1e-12).unwrap();
        let stretched = limit_profile_with_tol(&np, 4.0 * beta, &grid, 1e-12).unwrap();
        for (a, b) in base.xi_grid().iter().zip(stretched.xi_grid()) {
            prop_assert!((2.0 * a - b).abs() <= 1e-9 * b.abs().max(1e-9));
        }
    }

    #[test]
    fn windowed_quantities_are_gauge_invariant(
        n in 1usize..6,
        beta in 0.05..2.0f64,
        phase in 0.0..std::f64::consts::TAU,
    ) {
        let np = cubic();
        let cfg = FlowConfig { max_steps: 20_000, ..FlowConfig::auto(&np, beta) };
        let r = minimize(Setting::OnSite, n, &np, beta, &cfg).unwrap();
        let state = dnls::LatticeState::from_profile(&r.profile, beta, 4);
        let rotated = state.map_amplitudes(|a| a * Complex64::from_polar(1.0, phase));
        let (h0, n0) = conserved_quantities(&state, &np, (n + 2) as f64);
        let (h1, n1) = conserved_quantities(&rotated, &np, (n + 2) as f64);
        prop_assert!((h0 - h1).abs() <= 1e-12 * h0.abs().max(1.0));
        prop_assert!((n0 - n1).abs() <= 1e-12 * n0.abs().max(1.0));
    }

    #[test]
    fn profile_documents_round_trip(
        setting in any_setting(),
        values in monotone_values(14),
        beta in 0.05..4.0f64,
    ) {
        let np = cubic();
        let p = Profile::new(setting, values).unwrap();
        let e = energy(&p, &np, beta).unwrap();
        let r = residual_sup(&p, &np, beta).unwrap();
        let doc = ProfileDocument::new(&p, beta, e, r);
        let text = doc.to_json();
        let parsed = ProfileDocument::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &doc);
        prop_assert_eq!(parsed.to_json(), text);
        let back = parsed.to_profile().unwrap();
        for (a, b) in back.values().iter().zip(p.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
