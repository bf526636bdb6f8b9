//! Statistical checks on the shot-by-shot Bayesian simulation.

use qillum::illumination::{self, Branch, Outcome, ProbeKind, Scenario};
use qillum::sequential::{self, Execution, GroundTruth, ShotCounting, TrajectoryConfig};
use qillum::{DetectorModel, Error};

fn scenario(kappa: f64, kind: ProbeKind) -> Scenario {
    Scenario {
        kappa,
        nbar_b: 3.0,
        signal_det: DetectorModel::new(0.9, 0.0).unwrap(),
        idler_det: DetectorModel::new(0.9, 0.0).unwrap(),
        nbar: 1.0,
        probe_kind: kind,
        intercept_eta: None,
    }
}

fn config(kind: ProbeKind, shots: usize, trials: usize, truth: GroundTruth, seed: u64) -> TrajectoryConfig {
    TrajectoryConfig::new(scenario(0.1, kind), shots, trials, truth, seed)
}

#[test]
fn vanishing_reflectivity_leaves_posterior_at_half() {
    for kind in ProbeKind::ALL {
        for truth in [GroundTruth::Present, GroundTruth::Absent] {
            let c = TrajectoryConfig::new(scenario(1e-6, kind), 400, 3000, truth, 11);
            let s = sequential::run_ensemble(&c).unwrap();
            for &m in &s.mean_posterior {
                assert!((m - 0.5).abs() < 0.02, "{kind:?} {truth:?} mean {m}");
            }
        }
    }
}

#[test]
fn runs_are_deterministic_and_seed_dependent() {
    let mut c = config(ProbeKind::Tmsv, 500, 40, GroundTruth::Present, 99);
    c.trace_trials = vec![0, 17];
    let a = sequential::run_ensemble_with(&c, Execution::Sequential).unwrap();
    let b = sequential::run_ensemble_with(&c, Execution::Parallel { threads: Some(3) }).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.traces[1], sequential::run_trajectory(&c, 17).unwrap());
    assert_eq!(a.trial_stats[17].final_posterior, *a.traces[1].posteriors.last().unwrap());

    c.seed = 100;
    let other = sequential::run_ensemble_with(&c, Execution::Sequential).unwrap();
    assert_ne!(a.mean_posterior, other.mean_posterior);
}

#[test]
fn branch_accounting_and_click_frequencies() {
    let trials = 400;
    let shots = 500;
    let c = config(ProbeKind::Tmsv, shots, trials, GroundTruth::Present, 5);
    let s = sequential::run_ensemble(&c).unwrap();
    let total = (trials * shots) as u64;
    assert_eq!(s.branches.sent(), total);
    assert_eq!(s.branches.coherent.shots, 0);
    let per_trial: u64 = s.trial_stats.iter().map(|t| t.branches.sent()).sum();
    assert_eq!(per_trial, total);

    let within_3se = |observed: f64, p: f64, n: u64| (observed - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt();
    let herald_click = 1.0 - illumination::herald_no_click_prob(&c.scenario).unwrap();
    assert!(within_3se(s.herald_click_fraction().unwrap(), herald_click, total));
    for branch in [Branch::Pnst, Branch::Vst] {
        let counts = s.branches.get(branch);
        let p = illumination::shot_likelihoods(&c.scenario, branch).unwrap().p_click_h1;
        assert!(
            within_3se(counts.clicks as f64 / counts.shots as f64, p, counts.shots),
            "{branch:?}"
        );
    }

    let absent = sequential::run_ensemble(&TrajectoryConfig {
        ground_truth: GroundTruth::Absent,
        ..c.clone()
    })
    .unwrap();
    let p0 = illumination::p_click_h0(&c.scenario);
    assert!(within_3se(absent.branches.detector_clicks() as f64 / total as f64, p0, total));
}

#[test]
fn heralded_only_counts_vst_shots() {
    let mut c = config(ProbeKind::Tmsv, 200, 20, GroundTruth::Present, 8);
    c.shot_counting = ShotCounting::HeraldedOnly;
    let s = sequential::run_ensemble(&c).unwrap();
    for t in &s.trial_stats {
        assert_eq!(t.branches.vst.shots, 200);
        assert!(t.branches.pnst.shots > 0);
    }
    let r = sequential::run_trajectory(&c, 3).unwrap();
    assert_eq!(r.posteriors.len(), 201);
    assert_eq!(r.detector_outcomes.len(), r.herald_outcomes.len());
    assert_eq!(*r.counted_index.last().unwrap(), 200);
}

#[test]
fn posterior_is_a_martingale_under_the_prior() {
    // With equal priors the predictive mean of the posterior stays at 1/2, so
    // the average of the present and absent curves must too.
    let trials = 3000;
    for kind in ProbeKind::ALL {
        let present = sequential::run_ensemble(&config(kind, 300, trials, GroundTruth::Present, 21)).unwrap();
        let absent = sequential::run_ensemble(&config(kind, 300, trials, GroundTruth::Absent, 22)).unwrap();
        for i in 0..present.mean_posterior.len() {
            let mean = 0.5 * (present.mean_posterior[i] + absent.mean_posterior[i]);
            let var = 0.25 * (present.std_posterior[i].powi(2) + absent.std_posterior[i].powi(2));
            let se = (var / trials as f64).sqrt();
            assert!(
                (mean - 0.5).abs() <= 3.0 * se + 1e-12,
                "{kind:?} shot {}: {mean}",
                present.shot_index[i]
            );
        }
    }
}

#[test]
fn ensemble_mean_drifts_toward_ground_truth() {
    let trials = 3000;
    for kind in ProbeKind::ALL {
        for truth in [GroundTruth::Present, GroundTruth::Absent] {
            let mut c = config(kind, 2000, trials, truth, 31);
            c.record_stride = Some(50);
            let s = sequential::run_ensemble(&c).unwrap();
            let sign = if truth == GroundTruth::Present { 1.0 } else { -1.0 };
            for i in 1..s.mean_posterior.len() {
                let step = sign * (s.mean_posterior[i] - s.mean_posterior[i - 1]);
                let se = ((s.std_posterior[i].powi(2) + s.std_posterior[i - 1].powi(2)) / trials as f64).sqrt();
                assert!(step >= -3.0 * se, "{kind:?} {truth:?} shot {}", s.shot_index[i]);
            }
            assert!(sign * (s.mean_posterior.last().unwrap() - 0.5) > 0.0);
        }
    }
}

#[test]
fn paired_outcomes_differ_only_between_click_probabilities() {
    let coh = config(ProbeKind::Coherent, 2000, 1, GroundTruth::Present, 4);
    let tmsv = config(ProbeKind::Tmsv, 2000, 1, GroundTruth::Present, 4);
    let a = sequential::run_trajectory(&coh, 0).unwrap();
    let b = sequential::run_trajectory(&tmsv, 0).unwrap();
    let p_coh = illumination::p_click_h1_coherent(&coh.scenario);
    let mut differing = 0;
    for i in 0..2000 {
        let branch = b.herald_outcomes[i].unwrap();
        let p_tmsv = illumination::shot_likelihoods(&tmsv.scenario, branch).unwrap().p_click_h1;
        if a.detector_outcomes[i] != b.detector_outcomes[i] {
            differing += 1;
            let favoured = if p_coh > p_tmsv { &a } else { &b };
            assert_eq!(favoured.detector_outcomes[i], Outcome::Click);
        }
    }
    assert!(differing > 0 && differing < 2000);
}

#[test]
fn identical_probes_pair_identically() {
    let c = config(ProbeKind::TmsvMatched, 300, 30, GroundTruth::Absent, 1);
    let out = sequential::paired_comparison(&[c.clone(), c.clone()], Execution::default()).unwrap();
    assert_eq!(out[0], out[1]);

    let mut other = config(ProbeKind::Coherent, 300, 30, GroundTruth::Absent, 2);
    other.shots = 301;
    match sequential::paired_comparison(&[c, other], Execution::default()) {
        Err(Error::Pairing(msg)) => assert!(msg.contains("seed") && msg.contains("shots"), "{msg}"),
        r => panic!("expected pairing error, got {r:?}"),
    }
}

#[test]
fn present_and_absent_separate_in_mean() {
    for kind in ProbeKind::ALL {
        let p = sequential::run_ensemble(&config(kind, 30_000, 50, GroundTruth::Present, 6)).unwrap();
        let a = sequential::run_ensemble(&config(kind, 30_000, 50, GroundTruth::Absent, 6)).unwrap();
        assert!(p.mean_posterior.last().unwrap() > &0.6);
        assert!(a.mean_posterior.last().unwrap() < &0.4);
    }
}
