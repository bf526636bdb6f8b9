//! Monte-Carlo simulation of sequential detection.
//!
//! Each trial sends `M` probes and updates `Pr(H1)` after every detector
//! outcome. Randomness is keyed by `(seed, trial, stream)`: stream 0 feeds
//! the monitoring detector and stream 1 the idler herald, one draw per sent
//! shot on each, so configs that differ only in probe kind see the same
//! numbers shot for shot.
//!
//! Ensembles are reduced in fixed chunks of trials, summed in trial order,
//! which makes the result bit-identical for any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::illumination::{self, Branch, Outcome, ProbeKind, Scenario, ShotLikelihoods};

pub const DEFAULT_THRESHOLD: f64 = 0.8;
/// Longest trajectory stored at every shot; longer runs are decimated.
pub const FULL_RECORD_LIMIT: usize = 1_000_000;
/// Heralded-only runs give up after this many sent shots per counted shot.
pub const STARVATION_FACTOR: usize = 1000;
pub const HISTOGRAM_BINS: usize = 20;

/// Trials per reduction chunk. Fixed so the summation tree never depends on
/// the thread count.
const CHUNK: usize = 32;
/// Chunks reduced per parallel batch; bounds memory for long trajectories.
const BATCH: usize = 64;

const DETECTOR_STREAM: u64 = 0;
const IDLER_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruth {
    Present,
    Absent,
}

impl GroundTruth {
    pub fn label(&self) -> &'static str {
        match self {
            GroundTruth::Present => "present",
            GroundTruth::Absent => "absent",
        }
    }
}

/// What the shot axis counts for heralded probes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotCounting {
    /// Every probe sent, whichever way the herald went.
    #[default]
    AllSent,
    /// Only probes heralded by an idler click; the others still update the
    /// posterior but do not advance the count.
    HeraldedOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub scenario: Scenario,
    pub shots: usize,
    pub trials: usize,
    pub ground_truth: GroundTruth,
    pub seed: u64,
    pub threshold: f64,
    pub shot_counting: ShotCounting,
    /// Posterior recording stride; `None` picks 1 up to `FULL_RECORD_LIMIT`
    /// shots and the smallest stride that keeps the record that size beyond.
    pub record_stride: Option<usize>,
    /// Trials whose full trajectories are kept in the ensemble summary.
    pub trace_trials: Vec<usize>,
}

impl TrajectoryConfig {
    pub fn new(scenario: Scenario, shots: usize, trials: usize, ground_truth: GroundTruth, seed: u64) -> Self {
        Self {
            scenario,
            shots,
            trials,
            ground_truth,
            seed,
            threshold: DEFAULT_THRESHOLD,
            shot_counting: ShotCounting::AllSent,
            record_stride: None,
            trace_trials: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.shots == 0 {
            return Err(Error::Domain {
                name: "shots",
                value: 0.0,
                expected: ">= 1",
            });
        }
        if self.trials == 0 {
            return Err(Error::Domain {
                name: "trials",
                value: 0.0,
                expected: ">= 1",
            });
        }
        if !(self.threshold > 0.5 && self.threshold < 1.0) {
            return Err(Error::Domain {
                name: "threshold",
                value: self.threshold,
                expected: "(0.5, 1)",
            });
        }
        if self.record_stride == Some(0) {
            return Err(Error::Domain {
                name: "record_stride",
                value: 0.0,
                expected: ">= 1",
            });
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.record_stride
            .unwrap_or_else(|| self.shots.div_ceil(FULL_RECORD_LIMIT).max(1))
    }

    /// Shot indices at which the posterior is recorded.
    pub fn recorded_shots(&self) -> Vec<usize> {
        let stride = self.stride();
        let mut idx: Vec<usize> = (0..=self.shots).step_by(stride).collect();
        if idx.last() != Some(&self.shots) {
            idx.push(self.shots);
        }
        idx
    }
}

/// Likelihood pairs and heralding probability, fixed for a whole run.
#[derive(Clone, Copy, Debug)]
enum ShotModel {
    Coherent(ShotLikelihoods),
    Heralded {
        herald_no_click: f64,
        pnst: ShotLikelihoods,
        vst: ShotLikelihoods,
    },
}

impl ShotModel {
    fn build(scenario: &Scenario) -> Result<Self> {
        Ok(match scenario.probe_kind {
            ProbeKind::Coherent => ShotModel::Coherent(illumination::shot_likelihoods(scenario, Branch::Coherent)?),
            ProbeKind::Tmsv | ProbeKind::TmsvMatched => ShotModel::Heralded {
                herald_no_click: illumination::herald_no_click_prob(scenario)?,
                pnst: illumination::shot_likelihoods(scenario, Branch::Pnst)?,
                vst: illumination::shot_likelihoods(scenario, Branch::Vst)?,
            },
        })
    }
}

fn stream_rng(seed: u64, trial: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 * 2 + stream);
    rng
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchCounts {
    pub shots: u64,
    pub clicks: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchTally {
    pub coherent: BranchCounts,
    pub pnst: BranchCounts,
    pub vst: BranchCounts,
}

impl BranchTally {
    fn get_mut(&mut self, branch: Branch) -> &mut BranchCounts {
        match branch {
            Branch::Coherent => &mut self.coherent,
            Branch::Pnst => &mut self.pnst,
            Branch::Vst => &mut self.vst,
        }
    }

    pub fn get(&self, branch: Branch) -> BranchCounts {
        match branch {
            Branch::Coherent => self.coherent,
            Branch::Pnst => self.pnst,
            Branch::Vst => self.vst,
        }
    }

    pub fn sent(&self) -> u64 {
        self.coherent.shots + self.pnst.shots + self.vst.shots
    }

    pub fn detector_clicks(&self) -> u64 {
        self.coherent.clicks + self.pnst.clicks + self.vst.clicks
    }

    fn add(&mut self, other: &BranchTally) {
        for b in [Branch::Coherent, Branch::Pnst, Branch::Vst] {
            let o = other.get(b);
            let s = self.get_mut(b);
            s.shots += o.shots;
            s.clicks += o.clicks;
        }
    }
}

/// Per-trial outcome kept for every trial of an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trial: usize,
    pub final_posterior: f64,
    /// First counted shot with `Pr(H1) > threshold`.
    pub first_passage: Option<usize>,
    /// First counted shot with `Pr(H1) < 1 − threshold`.
    pub first_passage_below: Option<usize>,
    pub branches: BranchTally,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub trial: usize,
    /// `Pr(H1)` at each counted shot, starting from ½ before any shot.
    pub posteriors: Vec<f64>,
    /// Branch of every sent shot; `None` for unheralded probes.
    pub herald_outcomes: Vec<Option<Branch>>,
    pub detector_outcomes: Vec<Outcome>,
    /// Counted-shot index of each sent shot.
    pub counted_index: Vec<usize>,
    pub first_passage: Option<usize>,
    pub first_passage_below: Option<usize>,
}

/// Runs one trial, reporting each sent shot to `on_shot(counted, posterior,
/// branch, outcome)`; `counted` is `Some(m)` when the shot advances the count
/// to `m`.
fn simulate<F>(config: &TrajectoryConfig, model: &ShotModel, trial: usize, mut on_shot: F) -> Result<TrialStats>
where
    F: FnMut(Option<usize>, f64, Branch, Outcome),
{
    let mut det_rng = stream_rng(config.seed, trial, DETECTOR_STREAM);
    let mut idler_rng = stream_rng(config.seed, trial, IDLER_STREAM);
    let present = config.ground_truth == GroundTruth::Present;
    let heralded_only = config.shot_counting == ShotCounting::HeraldedOnly && matches!(model, ShotModel::Heralded { .. });
    let max_sent = if heralded_only {
        config.shots.saturating_mul(STARVATION_FACTOR)
    } else {
        config.shots
    };

    let mut posterior = 0.5;
    let mut counted = 0usize;
    let mut sent = 0usize;
    let mut tally = BranchTally::default();
    let mut first_passage = None;
    let mut first_passage_below = None;
    let (hi, lo) = (config.threshold, 1.0 - config.threshold);

    while counted < config.shots {
        if sent == max_sent {
            return Err(Error::HeraldingStarved {
                counted,
                wanted: config.shots,
                sent,
            });
        }
        let (branch, lik) = match model {
            ShotModel::Coherent(l) => (Branch::Coherent, l),
            ShotModel::Heralded {
                herald_no_click,
                pnst,
                vst,
            } => {
                let h: f64 = idler_rng.random();
                if h < *herald_no_click {
                    (Branch::Pnst, pnst)
                } else {
                    (Branch::Vst, vst)
                }
            }
        };
        let p: f64 = det_rng.random();
        let truth = if present { lik.p_click_h1 } else { lik.p_click_h0 };
        let outcome = if p < truth { Outcome::Click } else { Outcome::NoClick };
        posterior = illumination::posterior_update(posterior, lik, outcome)?;
        sent += 1;
        let counts = tally.get_mut(branch);
        counts.shots += 1;
        if outcome == Outcome::Click {
            counts.clicks += 1;
        }

        let counts_now = !heralded_only || branch == Branch::Vst;
        let index = if counts_now {
            counted += 1;
            if first_passage.is_none() && posterior > hi {
                first_passage = Some(counted);
            }
            if first_passage_below.is_none() && posterior < lo {
                first_passage_below = Some(counted);
            }
            Some(counted)
        } else {
            None
        };
        on_shot(index, posterior, branch, outcome);
    }
    Ok(TrialStats {
        trial,
        final_posterior: posterior,
        first_passage,
        first_passage_below,
        branches: tally,
    })
}

/// One full trajectory, deterministic in `(config.seed, trial)`.
pub fn run_trajectory(config: &TrajectoryConfig, trial: usize) -> Result<TrajectoryRecord> {
    config.validate()?;
    let model = ShotModel::build(&config.scenario)?;
    let heralded = config.scenario.probe_kind.is_heralded();
    let mut posteriors = Vec::with_capacity(config.shots + 1);
    posteriors.push(0.5);
    let mut herald_outcomes = Vec::with_capacity(config.shots);
    let mut detector_outcomes = Vec::with_capacity(config.shots);
    let mut counted_index = Vec::with_capacity(config.shots);
    let mut current = 0usize;
    let stats = simulate(config, &model, trial, |counted, post, branch, outcome| {
        if let Some(m) = counted {
            posteriors.push(post);
            current = m;
        }
        herald_outcomes.push(heralded.then_some(branch));
        detector_outcomes.push(outcome);
        counted_index.push(current);
    })?;
    Ok(TrajectoryRecord {
        trial,
        posteriors,
        herald_outcomes,
        detector_outcomes,
        counted_index,
        first_passage: stats.first_passage,
        first_passage_below: stats.first_passage_below,
    })
}

/// How trials are scheduled. Results do not depend on the choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon worker pool; `None` uses the global pool. Without the
    /// `parallel` feature this runs sequentially.
    Parallel {
        threads: Option<usize>,
    },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { threads: None }
        } else {
            Execution::Sequential
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub probe_kind: ProbeKind,
    pub ground_truth: GroundTruth,
    pub shot_counting: ShotCounting,
    pub trials: usize,
    pub shots: usize,
    pub threshold: f64,
    /// Counted-shot index of each curve entry.
    pub shot_index: Vec<usize>,
    pub mean_posterior: Vec<f64>,
    pub std_posterior: Vec<f64>,
    pub trial_stats: Vec<TrialStats>,
    /// Counts of final posteriors in `HISTOGRAM_BINS` equal bins over [0, 1].
    pub final_histogram: Vec<u64>,
    pub branches: BranchTally,
    pub traces: Vec<TrajectoryRecord>,
}

impl EnsembleSummary {
    /// First recorded shot where the mean posterior exceeds `level`.
    pub fn mean_crossing_above(&self, level: f64) -> Option<usize> {
        self.mean_posterior
            .iter()
            .position(|&p| p > level)
            .map(|i| self.shot_index[i])
    }

    /// First recorded shot where the mean posterior drops below `level`.
    pub fn mean_crossing_below(&self, level: f64) -> Option<usize> {
        self.mean_posterior
            .iter()
            .position(|&p| p < level)
            .map(|i| self.shot_index[i])
    }

    /// Fraction of heralding attempts that produced an idler click.
    pub fn herald_click_fraction(&self) -> Option<f64> {
        let attempts = self.branches.pnst.shots + self.branches.vst.shots;
        (attempts > 0).then(|| self.branches.vst.shots as f64 / attempts as f64)
    }
}

struct Partial {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    stats: Vec<TrialStats>,
}

fn run_chunk(config: &TrajectoryConfig, model: &ShotModel, trials: std::ops::Range<usize>, slots: &[usize]) -> Result<Partial> {
    let stride = config.stride();
    let n = slots.len();
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    let mut stats = Vec::with_capacity(trials.len());
    let mut curve = vec![0.0; n];
    for trial in trials {
        curve[0] = 0.5;
        let mut next_slot = 1;
        let st = simulate(config, model, trial, |counted, post, _, _| {
            if let Some(m) = counted {
                if next_slot < n && (m % stride == 0 || m == config.shots) && slots[next_slot] == m {
                    curve[next_slot] = post;
                    next_slot += 1;
                }
            }
        })?;
        for i in 0..n {
            sum[i] += curve[i];
            sum_sq[i] += curve[i] * curve[i];
        }
        stats.push(st);
    }
    Ok(Partial { sum, sum_sq, stats })
}

fn run_batch(
    config: &TrajectoryConfig,
    model: &ShotModel,
    chunks: &[std::ops::Range<usize>],
    slots: &[usize],
    exec: Execution,
) -> Vec<Result<Partial>> {
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel { .. } => {
            use rayon::prelude::*;
            chunks
                .par_iter()
                .map(|r| run_chunk(config, model, r.clone(), slots))
                .collect()
        }
        _ => chunks.iter().map(|r| run_chunk(config, model, r.clone(), slots)).collect(),
    }
}

fn reduce(config: &TrajectoryConfig, model: &ShotModel, exec: Execution) -> Result<EnsembleSummary> {
    let slots = config.recorded_shots();
    let n = slots.len();
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    let mut trial_stats = Vec::with_capacity(config.trials);
    let chunks: Vec<_> = (0..config.trials)
        .step_by(CHUNK)
        .map(|s| s..(s + CHUNK).min(config.trials))
        .collect();
    for batch in chunks.chunks(BATCH) {
        for partial in run_batch(config, model, batch, &slots, exec) {
            let partial = partial?;
            for i in 0..n {
                sum[i] += partial.sum[i];
                sum_sq[i] += partial.sum_sq[i];
            }
            trial_stats.extend(partial.stats);
        }
    }

    let t = config.trials as f64;
    let mean_posterior: Vec<f64> = sum.iter().map(|s| s / t).collect();
    let std_posterior = sum_sq
        .iter()
        .zip(&mean_posterior)
        .map(|(sq, m)| (sq / t - m * m).max(0.0).sqrt())
        .collect();
    let mut final_histogram = vec![0u64; HISTOGRAM_BINS];
    let mut branches = BranchTally::default();
    for st in &trial_stats {
        let bin = ((st.final_posterior * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        final_histogram[bin] += 1;
        branches.add(&st.branches);
    }
    let traces = config
        .trace_trials
        .iter()
        .filter(|&&t| t < config.trials)
        .map(|&t| run_trajectory(config, t))
        .collect::<Result<_>>()?;

    Ok(EnsembleSummary {
        probe_kind: config.scenario.probe_kind,
        ground_truth: config.ground_truth,
        shot_counting: config.shot_counting,
        trials: config.trials,
        shots: config.shots,
        threshold: config.threshold,
        shot_index: slots,
        mean_posterior,
        std_posterior,
        trial_stats,
        final_histogram,
        branches,
        traces,
    })
}

pub fn run_ensemble(config: &TrajectoryConfig) -> Result<EnsembleSummary> {
    run_ensemble_with(config, Execution::default())
}

pub fn run_ensemble_with(config: &TrajectoryConfig, exec: Execution) -> Result<EnsembleSummary> {
    config.validate()?;
    let model = ShotModel::build(&config.scenario)?;
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel { threads: Some(n) } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("thread pool construction");
            pool.install(|| reduce(config, &model, exec))
        }
        _ => reduce(config, &model, exec),
    }
}

fn pairing_key(c: &TrajectoryConfig) -> TrajectoryConfig {
    let mut k = c.clone();
    k.scenario.probe_kind = ProbeKind::Coherent;
    k
}

/// Runs configs that differ only in probe kind on shared random streams.
pub fn paired_comparison(configs: &[TrajectoryConfig], exec: Execution) -> Result<Vec<EnsembleSummary>> {
    let Some(first) = configs.first() else {
        return Ok(Vec::new());
    };
    let key = pairing_key(first);
    for c in &configs[1..] {
        let other = pairing_key(c);
        if other != key {
            return Err(Error::Pairing(describe_mismatch(&key, &other)));
        }
    }
    configs.iter().map(|c| run_ensemble_with(c, exec)).collect()
}

fn describe_mismatch(a: &TrajectoryConfig, b: &TrajectoryConfig) -> String {
    let (sa, sb) = (&a.scenario, &b.scenario);
    let fields = [
        ("kappa", sa.kappa != sb.kappa),
        ("nbar_b", sa.nbar_b != sb.nbar_b),
        ("signal detector", sa.signal_det != sb.signal_det),
        ("idler detector", sa.idler_det != sb.idler_det),
        ("nbar", sa.nbar != sb.nbar),
        ("intercept_eta", sa.intercept_eta != sb.intercept_eta),
        ("seed", a.seed != b.seed),
        ("shots", a.shots != b.shots),
        ("trials", a.trials != b.trials),
        ("ground truth", a.ground_truth != b.ground_truth),
    ];
    let diff: Vec<&str> = fields.iter().filter(|f| f.1).map(|f| f.0).collect();
    if diff.is_empty() {
        "configs differ in run settings other than probe kind".into()
    } else {
        format!("configs differ in {}", diff.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::click::DetectorModel;

    fn scenario(kind: ProbeKind) -> Scenario {
        Scenario {
            kappa: 0.1,
            nbar_b: 3.0,
            signal_det: DetectorModel::new(0.9, 0.0).unwrap(),
            idler_det: DetectorModel::new(0.9, 0.0).unwrap(),
            nbar: 1.0,
            probe_kind: kind,
            intercept_eta: None,
        }
    }

    #[test]
    fn record_starts_at_half() {
        let cfg = TrajectoryConfig::new(scenario(ProbeKind::Tmsv), 50, 1, GroundTruth::Present, 7);
        let r = run_trajectory(&cfg, 0).unwrap();
        assert_eq!(r.posteriors.len(), 51);
        assert_eq!(r.posteriors[0], 0.5);
        assert_eq!(r.herald_outcomes.len(), 50);
        assert!(r.herald_outcomes.iter().all(|h| h.is_some()));
        let c = run_trajectory(
            &TrajectoryConfig::new(scenario(ProbeKind::Coherent), 5, 1, GroundTruth::Present, 7),
            0,
        )
        .unwrap();
        assert!(c.herald_outcomes.iter().all(|h| h.is_none()));
    }

    #[test]
    fn single_trial_ensemble_matches_trajectory() {
        let cfg = TrajectoryConfig::new(scenario(ProbeKind::Tmsv), 200, 1, GroundTruth::Present, 11);
        let r = run_trajectory(&cfg, 0).unwrap();
        let e = run_ensemble(&cfg).unwrap();
        assert_eq!(e.mean_posterior, r.posteriors);
        assert!(e.std_posterior.iter().all(|&s| s == 0.0));
        assert_eq!(e.trial_stats[0].first_passage, r.first_passage);
    }

    #[test]
    fn decimation_keeps_endpoints() {
        let mut cfg = TrajectoryConfig::new(scenario(ProbeKind::Coherent), 10, 3, GroundTruth::Present, 1);
        cfg.record_stride = Some(4);
        assert_eq!(cfg.recorded_shots(), vec![0, 4, 8, 10]);
        let full = run_trajectory(&cfg, 2).unwrap();
        let e = run_ensemble(&cfg).unwrap();
        assert_eq!(e.mean_posterior.len(), 4);
        assert_eq!(e.trial_stats[2].final_posterior, *full.posteriors.last().unwrap());
        let big = TrajectoryConfig::new(scenario(ProbeKind::Coherent), 2_500_000, 1, GroundTruth::Present, 1);
        assert_eq!(big.stride(), 3);
    }

    #[test]
    fn certain_likelihoods_saturate() {
        // ideal object: no background and lossless return saturates on one click
        let mut s = scenario(ProbeKind::Coherent);
        s.nbar_b = 0.0;
        s.kappa = 1.0 - 1e-16;
        s.signal_det = DetectorModel::perfect();
        s.nbar = 50.0;
        let cfg = TrajectoryConfig::new(s, 1, 1, GroundTruth::Present, 3);
        let r = run_trajectory(&cfg, 0).unwrap();
        assert_eq!(r.posteriors[1], 1.0 - illumination::POSTERIOR_EPS);
    }

    #[test]
    fn heralded_only_counts_vst_shots() {
        let mut cfg = TrajectoryConfig::new(scenario(ProbeKind::Tmsv), 100, 1, GroundTruth::Present, 5);
        cfg.shot_counting = ShotCounting::HeraldedOnly;
        let r = run_trajectory(&cfg, 0).unwrap();
        assert_eq!(r.posteriors.len(), 101);
        let vst = r.herald_outcomes.iter().filter(|h| **h == Some(Branch::Vst)).count();
        assert_eq!(vst, 100);
        assert!(r.detector_outcomes.len() > 100);
    }

    #[test]
    fn starvation_reported() {
        let mut s = scenario(ProbeKind::Tmsv);
        s.nbar = 1e-6;
        let mut cfg = TrajectoryConfig::new(s, 10, 1, GroundTruth::Present, 5);
        cfg.shot_counting = ShotCounting::HeraldedOnly;
        assert!(matches!(run_trajectory(&cfg, 0), Err(Error::HeraldingStarved { .. })));
    }

    #[test]
    fn degenerate_heralding_propagates() {
        let cfg = TrajectoryConfig::new(scenario(ProbeKind::Tmsv).with_nbar(0.0), 10, 1, GroundTruth::Present, 5);
        assert!(matches!(run_trajectory(&cfg, 0), Err(Error::DegenerateHeralding(_))));
    }

    #[test]
    fn invalid_configs() {
        let base = TrajectoryConfig::new(scenario(ProbeKind::Tmsv), 10, 1, GroundTruth::Present, 5);
        for bad in [
            TrajectoryConfig {
                shots: 0,
                ..base.clone()
            },
            TrajectoryConfig {
                trials: 0,
                ..base.clone()
            },
            TrajectoryConfig {
                threshold: 0.5,
                ..base.clone()
            },
            TrajectoryConfig {
                threshold: 1.0,
                ..base.clone()
            },
        ] {
            assert!(run_ensemble(&bad).is_err());
        }
    }

    #[test]
    fn pairing_requires_same_physics() {
        let a = TrajectoryConfig::new(scenario(ProbeKind::Coherent), 10, 2, GroundTruth::Present, 5);
        let mut b = a.clone();
        b.scenario.probe_kind = ProbeKind::Tmsv;
        assert_eq!(
            paired_comparison(&[a.clone(), b.clone()], Execution::Sequential)
                .unwrap()
                .len(),
            2
        );
        b.scenario.kappa = 0.2;
        let err = paired_comparison(&[a, b], Execution::Sequential).unwrap_err();
        assert!(matches!(err, Error::Pairing(ref m) if m.contains("kappa")));
    }
}
