use proptest::prelude::*;

use qillum::fock::{self, FockOperator, C64};

const DIM: usize = 40;

/// Chained channels push up to ~2 thermal photons, whose tail above 40 exceeds 1e-9.
const WIDE_DIM: usize = 70;

/// Displaced thermal state through a thermal channel.
fn state(alpha_re: f64, alpha_im: f64, eta: f64, noise: f64, dim: usize) -> FockOperator {
    let psi = fock::coherent_vector(C64::new(alpha_re, alpha_im), dim).unwrap();
    fock::fock_loss_channel(&FockOperator::projector(&psi), eta, noise).unwrap()
}

fn arb_state_in(dim: usize) -> impl Strategy<Value = FockOperator> {
    (-1.0..1.0f64, -1.0..1.0f64, 0.05..0.95f64, 0.0..0.8f64).prop_map(move |(a, b, e, n)| state(a, b, e, n, dim))
}

fn arb_state() -> impl Strategy<Value = FockOperator> {
    arb_state_in(DIM)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn helstrom_below_chernoff_below_half(r0 in arb_state(), r1 in arb_state()) {
        let h = fock::helstrom_error(&r0, &r1, 0.5).unwrap();
        let c = fock::chernoff_bound(&r0, &r1).unwrap();
        prop_assert!(h >= -1e-12);
        prop_assert!(h <= c.value + 1e-10, "helstrom {h} chernoff {}", c.value);
        prop_assert!(c.value <= 0.5 + 1e-10);
        prop_assert!(c.s_opt > 0.0 && c.s_opt < 1.0);
    }

    #[test]
    fn loss_channel_preserves_trace_and_positivity(r in arb_state_in(WIDE_DIM), eta in 0.0..1.0f64, noise in 0.0..1.0f64) {
        let out = fock::fock_loss_channel(&r, eta, noise).unwrap();
        prop_assert!((out.trace() - r.trace()).abs() < 1e-9);
        prop_assert!(out.hermitian_deviation() < 1e-12);
        let min = out.eigenvalues().unwrap().into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min > -1e-10);
    }

    #[test]
    fn helstrom_symmetric_in_hypotheses(r0 in arb_state(), r1 in arb_state(), prior in 0.05..0.95f64) {
        let a = fock::helstrom_error(&r0, &r1, prior).unwrap();
        let b = fock::helstrom_error(&r1, &r0, 1.0 - prior).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(a <= prior.min(1.0 - prior) + 1e-12);
    }
}

#[test]
fn no_click_povm_is_a_valid_effect() {
    for (eta, nd) in [(1.0, 0.0), (0.5, 0.2), (0.0, 1.0), (0.9, 0.05)] {
        let p = fock::fock_no_click_povm(&qillum::DetectorModel::new(eta, nd).unwrap(), DIM).unwrap();
        assert!(p.is_diagonal());
        for w in p.eigenvalues().unwrap() {
            assert!((-1e-12..=1.0 + 1e-12).contains(&w));
        }
    }
}
