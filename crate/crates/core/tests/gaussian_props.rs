use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use qillum::gaussian::{self, beamsplitter_symplectic, loss_channel, overlap, thermal_state, wigner, GaussianState};

/// Displaced squeezed thermal state.
fn single_mode(nbar: f64, r: f64, phi: f64, q: f64, p: f64) -> GaussianState {
    let (c, s) = (phi.cos(), phi.sin());
    let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let sq = DMatrix::from_diagonal(&DVector::from_vec(vec![(-2.0 * r).exp(), (2.0 * r).exp()]));
    let cov = (&rot * sq * rot.transpose()) * (nbar + 0.5);
    GaussianState::new(DVector::from_vec(vec![q, p]), cov).unwrap()
}

fn arb_state() -> impl Strategy<Value = GaussianState> {
    (
        0.0..3.0f64,
        0.0..0.8f64,
        0.0..std::f64::consts::PI,
        -2.0..2.0f64,
        -2.0..2.0f64,
    )
        .prop_map(|(n, r, phi, q, p)| single_mode(n, r, phi, q, p))
}

proptest! {
    #[test]
    fn loss_channels_compose(s in arb_state(), e1 in 0.0..0.99f64, e2 in 0.0..0.99f64, n1 in 0.0..4.0f64, n2 in 0.0..4.0f64) {
        let two = loss_channel(&loss_channel(&s, e1, n1).unwrap(), e2, n2).unwrap();
        let one = loss_channel(&s, e1 * e2, e2 * n1 + n2).unwrap();
        prop_assert!((two.cov() - one.cov()).amax() < 1e-12);
        prop_assert!((two.mean() - one.mean()).amax() < 1e-12);
    }

    #[test]
    fn loss_photon_number(s in arb_state(), eta in 0.0..0.99f64, n in 0.0..4.0f64) {
        let out = loss_channel(&s, eta, n).unwrap();
        prop_assert!((out.mean_photon_number() - (eta * s.mean_photon_number() + n)).abs() < 1e-12);
        prop_assert!(out.validate().is_ok());
    }

    #[test]
    fn overlap_symmetric_and_purity(a in arb_state(), b in arb_state()) {
        let ab = overlap(&a, &b).unwrap();
        let ba = overlap(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-14);
        prop_assert!(ab > 0.0 && ab <= 1.0 + 1e-14);
        let purity = 1.0 / (2.0 * a.cov().determinant().sqrt());
        prop_assert!((overlap(&a, &a).unwrap() - purity).abs() < 1e-12);
    }

    #[test]
    fn symplectic_eigenvalue_of_single_mode(n in 0.0..3.0f64, r in 0.0..0.8f64, phi in 0.0..3.0f64) {
        let s = single_mode(n, r, phi, 0.3, -0.2);
        let nu = s.symplectic_eigenvalues();
        prop_assert_eq!(nu.len(), 1);
        prop_assert!((nu[0] - (n + 0.5)).abs() < 1e-10);
    }

    #[test]
    fn beamsplitter_conserves_photons(a in arb_state(), b in arb_state(), eta in 0.0..1.0f64) {
        let joint = a.tensor(&b);
        let out = joint.transform(&beamsplitter_symplectic(eta).unwrap()).unwrap();
        prop_assert!((out.mean_photon_number() - joint.mean_photon_number()).abs() < 1e-12);
        let mut nu = out.symplectic_eigenvalues();
        let mut expect = joint.symplectic_eigenvalues();
        nu.sort_by(f64::total_cmp);
        expect.sort_by(f64::total_cmp);
        for (x, y) in nu.iter().zip(&expect) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn wigner_normalized(s in arb_state()) {
        let sd = s.cov().symmetric_eigenvalues().amax().sqrt();
        let half = 9.0 * sd;
        let n = 240;
        let h = 2.0 * half / n as f64;
        let mut total = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let x = [s.mean()[0] - half + i as f64 * h, s.mean()[1] - half + j as f64 * h];
                total += wigner(&s, &x).unwrap();
            }
        }
        prop_assert!((total * h * h - 1.0).abs() < 1e-6);
    }
}

#[test]
fn partial_trace_of_product() {
    let a = thermal_state(0.7).unwrap();
    let b = single_mode(1.2, 0.3, 0.4, 1.0, -0.5);
    let joint = a.tensor(&b);
    let back = gaussian::partial_trace(&joint, &[1]).unwrap();
    assert_abs_diff_eq!(back.cov(), b.cov(), epsilon = 1e-15);
    assert_abs_diff_eq!(back.mean(), b.mean(), epsilon = 1e-15);
}
