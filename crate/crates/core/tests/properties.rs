use num_complex::Complex64 as C;
use proptest::prelude::*;
use qutrit_chain::analysis::{
    a0_max, p_gctp4, p_gctp4_branch, p_gctp4_max, p_gctp4_min, p_pgctp, p_sctp, p_single,
};
use qutrit_chain::corrections::{classify_collapse, correction_unitary};
use qutrit_chain::measurement::gbm_probabilities;
use qutrit_chain::protocols::{exact_success_probability, ProtocolSpec};
use qutrit_chain::qutrit::{
    apply_operator, fidelity, make_channel, make_state, tensor, ChannelCoeffs, PureState,
};

fn amp() -> impl Strategy<Value = C> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C::new(re, im))
}

fn qutrit() -> impl Strategy<Value = PureState> {
    (amp(), amp(), amp())
        .prop_filter("non-zero", |(a, b, c)| {
            a.norm_sqr() + b.norm_sqr() + c.norm_sqr() > 1e-3
        })
        .prop_map(|(a, b, c)| make_state(a, b, c).unwrap())
}

/// Valid channel from any three positive weights.
fn channel() -> impl Strategy<Value = ChannelCoeffs> {
    (1e-3..1.0f64, 1e-3..1.0f64, 1e-3..1.0f64).prop_map(|(x, y, z)| {
        let mut v = [x, y, z];
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        let a0 = v[0] / n;
        let a1 = (v[1] / n).max(a0);
        let a2 = (1.0 - a0 * a0 - a1 * a1).sqrt().max(a1);
        make_channel(a0, a1, a2).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tensor_is_associative(a in qutrit(), b in qutrit(), c in qutrit()) {
        let left = tensor(&tensor(&a, &b), &c);
        let right = tensor(&a, &tensor(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-15);
    }

    #[test]
    fn corrections_preserve_norm(a in qutrit(), b in qutrit(), m in 0u8..3, n in 0u8..3, target in 0usize..2) {
        let s = tensor(&a, &b);
        let out = apply_operator(&correction_unitary(m, n), &s, target).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric_and_phase_blind(a in qutrit(), b in qutrit(), theta in 0.0..6.3f64) {
        let fab = fidelity(&a, &b).unwrap();
        prop_assert!((fab - fidelity(&b, &a).unwrap()).abs() < 1e-12);
        let rotated = a.scaled(C::from_polar(1.0, theta));
        prop_assert!((fidelity(&a, &rotated).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&fab));
    }

    #[test]
    fn make_state_ignores_overall_scale(a in amp(), b in amp(), c in amp(), k in 0.1..10.0f64) {
        prop_assume!(a.norm_sqr() + b.norm_sqr() + c.norm_sqr() > 1e-3);
        let s1 = make_state(a, b, c).unwrap();
        let s2 = make_state(a * k, b * k, c * k).unwrap();
        prop_assert!(s1.max_abs_diff(&s2) < 1e-12);
    }

    #[test]
    fn gbm_probabilities_sum_to_one(psi in qutrit(), ch in channel()) {
        let probs = gbm_probabilities(&tensor(&psi, &ch.state()), (0, 1)).unwrap();
        prop_assert_eq!(probs.len(), 9);
        prop_assert!((probs.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collapse_class_ignores_order(m1 in 0u8..3, m2 in 0u8..3, m3 in 0u8..3) {
        let c = classify_collapse(m1, m2, m3);
        for p in [(m1, m3, m2), (m2, m1, m3), (m2, m3, m1), (m3, m1, m2), (m3, m2, m1)] {
            prop_assert_eq!(classify_collapse(p.0, p.1, p.2), c);
        }
    }

    #[test]
    fn closed_forms_are_probabilities_and_ordered(ch in channel(), n in 1usize..8) {
        for p in [p_single(&ch), p_sctp(&ch, 3 * n), p_gctp4(&ch), p_pgctp(&ch, n)] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
        }
        prop_assert!(p_gctp4(&ch) >= p_sctp(&ch, 3) - 1e-12);
        prop_assert!(p_pgctp(&ch, n) >= p_sctp(&ch, 3 * n) - 1e-12);
    }

    #[test]
    fn gctp4_lies_between_envelopes(a0 in 1e-3..0.577f64, t in 0.0..1.0f64) {
        prop_assume!(a0 <= a0_max());
        // a1 anywhere in [a0, sqrt((1 - a0^2)/2)]
        let hi = ((1.0 - a0 * a0) / 2.0).sqrt();
        let a1 = a0 + t * (hi - a0);
        let a2 = (1.0 - a0 * a0 - a1 * a1).sqrt().max(a1);
        let ch = make_channel(a0, a1, a2).unwrap();
        let p = p_gctp4(&ch);
        prop_assert!(p >= p_gctp4_min(a0).unwrap() - 1e-12);
        prop_assert!(p <= p_gctp4_max(a0).unwrap() + 1e-12);
    }

    #[test]
    fn gctp4_branches_meet_on_the_boundary(a0 in 0.05..0.5f64) {
        // a0 a2 = a1^2 with a0^2 + a1^2 + a2^2 = 1: solve for a1^2 = x
        // x^2 / a0^2 + x + a0^2 = 1
        let x = (-1.0 + (1.0 + 4.0 * (1.0 - a0 * a0) / (a0 * a0)).sqrt()) * a0 * a0 / 2.0;
        let (a1, a2) = (x.sqrt(), x / a0);
        prop_assume!(a0 <= a1 && a1 <= a2);
        let ch = make_channel(a0, a1, a2).unwrap();
        prop_assert!((p_gctp4_branch(&ch, true) - p_gctp4_branch(&ch, false)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pgctp_exact_probability_is_a_power_of_gctp4(psi in qutrit(), ch in channel(), n in 1usize..4) {
        let g = exact_success_probability(&ProtocolSpec::gctp4(), &psi, &ch).unwrap();
        let pg = exact_success_probability(&ProtocolSpec::pgctp(n).unwrap(), &psi, &ch).unwrap();
        prop_assert!((pg - g.powi(n as i32)).abs() < 1e-10);
        prop_assert!((g - p_gctp4(&ch)).abs() < 1e-10);
    }
}
