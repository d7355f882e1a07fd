//! Monte Carlo harness: success probability per decoder across a sweep
//! of test counts, plus the Property-P audit.
//!
//! Every trial is keyed by (master seed, t, trial index), so results are
//! identical for any degree of parallelism, and all decoders at a given
//! trial see the same design, defective set, and outcomes. Matched
//! instances make the dominance claims checkable per instance instead of
//! only in aggregate, and cut comparison variance.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decode::{
    comp_decode, dd_decode, possible_defectives, scomp_decode, smallest_satisfying_oracle,
    DecodeDiagnostics, DecodeResult, OracleOutcome, TieRule,
};
use crate::design::{
    bernoulli_design, compute_outcomes, p_from_k, sample_defective_set, ItemSet, Outcomes, PMode,
    TestDesign,
};
use crate::error::{Error, Result};
use crate::lp::{
    build_relaxation, round_solution, simplex_solve, LpSolution, RoundingRule, DEFAULT_TOL,
};

/// Largest n for which the exhaustive oracle may appear in a sweep.
pub const ORACLE_N_LIMIT: usize = 25;

/// Decoders the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decoder {
    Comp,
    Dd,
    Scomp,
    LpMalioutov,
    LpCrude,
    LpHalf,
    LpRandomized,
    Oracle,
}

impl Decoder {
    pub const ALL: [Decoder; 8] = [
        Decoder::Comp,
        Decoder::Dd,
        Decoder::Scomp,
        Decoder::LpMalioutov,
        Decoder::LpCrude,
        Decoder::LpHalf,
        Decoder::LpRandomized,
        Decoder::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Decoder::Comp => "comp",
            Decoder::Dd => "dd",
            Decoder::Scomp => "scomp",
            Decoder::LpMalioutov => "lp-malioutov",
            Decoder::LpCrude => "lp-crude",
            Decoder::LpHalf => "lp-half",
            Decoder::LpRandomized => "lp-randomized",
            Decoder::Oracle => "oracle",
        }
    }

    fn rounding_rule(self) -> Option<RoundingRule> {
        match self {
            Decoder::LpMalioutov => Some(RoundingRule::Malioutov),
            Decoder::LpCrude => Some(RoundingRule::Crude),
            Decoder::LpHalf => Some(RoundingRule::Half),
            Decoder::LpRandomized => Some(RoundingRule::Randomized),
            _ => None,
        }
    }

    /// Stable stream tag so per-decoder randomness does not depend on the
    /// decoder list in the config.
    fn tag(self) -> u64 {
        match self {
            Decoder::Comp => 1,
            Decoder::Dd => 2,
            Decoder::Scomp => 3,
            Decoder::LpMalioutov => 4,
            Decoder::LpCrude => 5,
            Decoder::LpHalf => 6,
            Decoder::LpRandomized => 7,
            Decoder::Oracle => 8,
        }
    }
}

impl std::fmt::Display for Decoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Decoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Decoder::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown decoder '{s}'")))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-style seed derivation: feed each index through a splitmix
/// round so (master, t, trial) streams never collide in practice.
pub(crate) fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ a) ^ b)
}

/// Parameters for one success-probability experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: usize,
    pub k: usize,
    pub p_mode: PMode,
    pub t_values: Vec<usize>,
    pub trials: u64,
    pub decoders: Vec<Decoder>,
    pub master_seed: u64,
}

impl SweepConfig {
    pub fn p(&self) -> f64 {
        p_from_k(self.k, self.p_mode)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.k > self.n {
            return Err(Error::KExceedsN { k: self.k, n: self.n });
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.t_values.is_empty() {
            return Err(Error::InvalidConfig("t grid is empty".into()));
        }
        if self.t_values[0] == 0 {
            return Err(Error::InvalidConfig("t values must be at least 1".into()));
        }
        for w in self.t_values.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidConfig("t values must be strictly increasing".into()));
            }
        }
        if self.decoders.is_empty() {
            return Err(Error::InvalidConfig("no decoders requested".into()));
        }
        for (idx, d) in self.decoders.iter().enumerate() {
            if self.decoders[..idx].contains(d) {
                return Err(Error::InvalidConfig(format!("duplicate decoder '{d}'")));
            }
        }
        if self.decoders.contains(&Decoder::Oracle) && self.n > ORACLE_N_LIMIT {
            return Err(Error::InvalidConfig(format!(
                "oracle decoder needs n <= {ORACLE_N_LIMIT}, got {}",
                self.n
            )));
        }
        let p = self.p();
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability { value: p });
        }
        Ok(())
    }
}

/// Aggregated counts for one (decoder, t) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub decoder: Decoder,
    pub t: usize,
    pub trials: u64,
    pub successes: u64,
    /// Instances whose DD output was satisfying.
    pub dd_satisfying: u64,
    /// Among those, instances where this decoder returned the DD set.
    pub agree_with_dd: u64,
    /// Instances where DD succeeded but this decoder did not.
    pub dd_success_this_fail: u64,
    /// Wall-clock decode time; informational only, excluded from the
    /// determinism contract.
    pub total_decode_nanos: u128,
}

impl SweepCell {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    pub fn mean_decode_time(&self) -> f64 {
        self.total_decode_nanos as f64 / self.trials as f64 / 1e9
    }

    /// Wilson 95% interval for the success probability.
    pub fn wilson_ci(&self) -> (f64, f64) {
        wilson_interval(self.successes, self.trials)
    }
}

pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    const Z: f64 = 1.96;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (Z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Sweep output: one cell per (decoder, t), decoders in config order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, decoder: Decoder, t: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.decoder == decoder && c.t == t)
    }

    /// CSV with header `decoder,t,trials,successes,success_rate,ci_low,ci_high`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("decoder,t,trials,successes,success_rate,ci_low,ci_high\n");
        for cell in &self.cells {
            let (lo, hi) = cell.wilson_ci();
            out.push_str(&format!(
                "{},{},{},{},{:.6},{:.6},{:.6}\n",
                cell.decoder,
                cell.t,
                cell.trials,
                cell.successes,
                cell.success_rate(),
                lo,
                hi
            ));
        }
        out
    }
}

fn generate_instance(
    n: usize,
    k: usize,
    p: f64,
    t: usize,
    trial_seed: u64,
) -> Result<(TestDesign, ItemSet, Outcomes)> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let defectives = sample_defective_set(n, k, &mut rng)?;
    let design = bernoulli_design(n, t, p, &mut rng)?;
    let outcomes = compute_outcomes(&design, &defectives)?;
    Ok((design, defectives, outcomes))
}

fn oracle_result(design: &TestDesign, outcomes: &Outcomes) -> Result<DecodeResult> {
    let pd_count = possible_defectives(design, outcomes)?.len();
    let (estimate, failed) = match smallest_satisfying_oracle(design, outcomes, design.n())? {
        OracleOutcome::Unique(set) => (set, false),
        OracleOutcome::Ambiguous { .. } | OracleOutcome::NoneWithinCap { .. } => {
            (ItemSet::empty(), true)
        }
    };
    let satisfying = crate::decode::is_satisfying(design, outcomes, &estimate)?;
    let unexplained = (0..design.t())
        .filter(|&test| {
            outcomes.is_positive(test) && !design.items_in_test(test).any(|i| estimate.contains(i))
        })
        .count();
    Ok(DecodeResult {
        estimate,
        satisfying,
        dd_core: ItemSet::empty(),
        diagnostics: DecodeDiagnostics {
            possible_defectives: pd_count,
            unexplained_tests: unexplained,
            failed,
        },
    })
}

/// Run one decoder on an observed instance, with per-decoder randomness
/// derived from the trial seed.
pub fn decode_with(
    decoder: Decoder,
    design: &TestDesign,
    outcomes: &Outcomes,
    trial_seed: u64,
) -> Result<DecodeResult> {
    match decoder {
        Decoder::Comp => comp_decode(design, outcomes),
        Decoder::Dd => dd_decode(design, outcomes),
        Decoder::Scomp => scomp_decode(design, outcomes, TieRule::Lowest),
        Decoder::Oracle => oracle_result(design, outcomes),
        lp => {
            let rule = lp.rounding_rule().expect("remaining decoders are LP rules");
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, lp.tag(), 0));
            crate::lp::lp_decode(design, outcomes, rule, &mut rng)
        }
    }
}

/// One decoder, one fresh matched instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    pub defectives: ItemSet,
    pub result: DecodeResult,
}

/// Sample a defective set and design, compute outcomes, decode, and
/// compare against the truth. Deterministic given `trial_seed`.
pub fn run_trial(
    n: usize,
    k: usize,
    p: f64,
    t: usize,
    decoder: Decoder,
    trial_seed: u64,
) -> Result<TrialOutcome> {
    let (design, defectives, outcomes) = generate_instance(n, k, p, t, trial_seed)?;
    let result = decode_with(decoder, &design, &outcomes, trial_seed)?;
    let success = result.estimate == defectives && !result.diagnostics.failed;
    Ok(TrialOutcome { success, defectives, result })
}

#[derive(Clone, Default)]
struct CellAccum {
    successes: u64,
    dd_satisfying: u64,
    agree_with_dd: u64,
    dd_success_this_fail: u64,
    nanos: u128,
}

fn merge_accums(mut a: Vec<CellAccum>, b: Vec<CellAccum>) -> Vec<CellAccum> {
    if a.is_empty() {
        return b;
    }
    for (x, y) in a.iter_mut().zip(b) {
        x.successes += y.successes;
        x.dd_satisfying += y.dd_satisfying;
        x.agree_with_dd += y.agree_with_dd;
        x.dd_success_this_fail += y.dd_success_this_fail;
        x.nanos += y.nanos;
    }
    a
}

/// Run the full sweep. All decoders share each trial's instance; trials
/// run in parallel and aggregate order-independently.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let p = config.p();
    let needs_lp = config.decoders.iter().any(|d| d.rounding_rule().is_some());
    let mut cells = Vec::new();

    for &t in &config.t_values {
        let accums = (0..config.trials)
            .into_par_iter()
            .map(|trial| -> Result<Vec<CellAccum>> {
                let trial_seed = derive_seed(config.master_seed, t as u64, trial);
                let (design, defectives, outcomes) =
                    generate_instance(config.n, config.k, p, t, trial_seed)?;

                let dd = dd_decode(&design, &outcomes)?;
                let dd_success = dd.estimate == defectives;

                // One simplex solve shared by every LP rounding rule.
                let lp_shared = if needs_lp {
                    let lp = build_relaxation(&design, &outcomes)?;
                    let started = Instant::now();
                    let solved = simplex_solve(&lp, DEFAULT_TOL);
                    Some((lp.num_variables(), solved, started.elapsed().as_nanos()))
                } else {
                    None
                };

                let mut accums = vec![CellAccum::default(); config.decoders.len()];
                for (idx, &decoder) in config.decoders.iter().enumerate() {
                    let started = Instant::now();
                    let result = match (decoder.rounding_rule(), &lp_shared) {
                        (Some(rule), Some((pd_count, solved, solve_nanos))) => {
                            let seed = derive_seed(trial_seed, decoder.tag(), 0);
                            let mut rng = ChaCha8Rng::seed_from_u64(seed);
                            let rounded = match solved {
                                Ok(sol) => round_solution(sol, rule, &mut rng),
                                Err(e) => Err(e.clone()),
                            };
                            let result = crate::lp::finish_lp_decode(
                                &design, &outcomes, *pd_count, rounded,
                            )?;
                            accums[idx].nanos += solve_nanos;
                            result
                        }
                        _ => decode_with(decoder, &design, &outcomes, trial_seed)?,
                    };
                    accums[idx].nanos += started.elapsed().as_nanos();

                    let success = result.estimate == defectives && !result.diagnostics.failed;
                    accums[idx].successes += u64::from(success);
                    accums[idx].dd_satisfying += u64::from(dd.satisfying);
                    accums[idx].agree_with_dd +=
                        u64::from(dd.satisfying && result.estimate == dd.estimate);
                    accums[idx].dd_success_this_fail += u64::from(dd_success && !success);
                }
                Ok(accums)
            })
            .try_reduce(Vec::new, |a, b| Ok(merge_accums(a, b)))?;

        for (idx, &decoder) in config.decoders.iter().enumerate() {
            let acc = &accums[idx];
            cells.push(SweepCell {
                decoder,
                t,
                trials: config.trials,
                successes: acc.successes,
                dd_satisfying: acc.dd_satisfying,
                agree_with_dd: acc.agree_with_dd,
                dd_success_this_fail: acc.dd_success_this_fail,
                total_decode_nanos: acc.nanos,
            });
        }
    }

    // Decoder-major ordering for stable output.
    let mut ordered = Vec::with_capacity(cells.len());
    for &decoder in &config.decoders {
        for &t in &config.t_values {
            let cell = cells
                .iter()
                .find(|c| c.decoder == decoder && c.t == t)
                .expect("cell exists for every (decoder, t)");
            ordered.push(cell.clone());
        }
    }
    Ok(SweepResult { cells: ordered })
}

/// Per-check agreement counts among DD-satisfying instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementStat {
    pub check: String,
    pub agreements: u64,
    pub violations: u64,
}

/// A violating instance, kept for diagnosis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub trial: u64,
    pub check: String,
    pub dd_estimate: Vec<usize>,
    pub got: Vec<usize>,
}

/// Property-P audit over random instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub instances: u64,
    pub dd_satisfying: u64,
    /// LP solutions that were integral among DD-satisfying instances.
    pub lp_integral: u64,
    pub oracle_enabled: bool,
    pub stats: Vec<AgreementStat>,
    pub counterexamples: Vec<Counterexample>,
}

impl AuditReport {
    pub fn total_violations(&self) -> u64 {
        self.stats.iter().map(|s| s.violations).sum()
    }

    pub fn stat(&self, check: &str) -> Option<&AgreementStat> {
        self.stats.iter().find(|s| s.check == check)
    }
}

const MAX_COUNTEREXAMPLES: usize = 5;

#[derive(Clone)]
struct AuditAccum {
    dd_satisfying: u64,
    lp_integral: u64,
    agreements: Vec<u64>,
    violations: Vec<u64>,
    counterexamples: Vec<Counterexample>,
}

impl AuditAccum {
    fn new(checks: usize) -> Self {
        AuditAccum {
            dd_satisfying: 0,
            lp_integral: 0,
            agreements: vec![0; checks],
            violations: vec![0; checks],
            counterexamples: Vec::new(),
        }
    }

    fn merge(mut self, other: AuditAccum) -> AuditAccum {
        self.dd_satisfying += other.dd_satisfying;
        self.lp_integral += other.lp_integral;
        for (a, b) in self.agreements.iter_mut().zip(other.agreements) {
            *a += b;
        }
        for (a, b) in self.violations.iter_mut().zip(other.violations) {
            *a += b;
        }
        self.counterexamples.extend(other.counterexamples);
        self.counterexamples.sort_by(|a, b| (a.trial, &a.check).cmp(&(b.trial, &b.check)));
        self.counterexamples.truncate(MAX_COUNTEREXAMPLES);
        self
    }
}

/// Check that every Property-P decoder reproduces the DD output whenever
/// that output is satisfying: SCOMP under both tie rules, the LP under
/// every rounding rule (with an integral solution), and — for small n —
/// the exhaustive oracle, which must confirm a unique minimum.
pub fn property_p_audit(
    n: usize,
    k: usize,
    p: f64,
    t: usize,
    trials: u64,
    master_seed: u64,
) -> Result<AuditReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability { value: p });
    }
    let oracle_enabled = n <= ORACLE_N_LIMIT;
    let mut checks: Vec<String> = vec!["scomp-lowest".into(), "scomp-random".into()];
    for rule in RoundingRule::ALL {
        checks.push(format!("lp-{}", rule.name()));
    }
    checks.push("lp-integral".into());
    if oracle_enabled {
        checks.push("oracle-unique".into());
    }

    let accum = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<AuditAccum> {
            let mut acc = AuditAccum::new(checks.len());
            let trial_seed = derive_seed(master_seed, t as u64, trial);
            let (design, _defectives, outcomes) = generate_instance(n, k, p, t, trial_seed)?;
            let dd = dd_decode(&design, &outcomes)?;
            if !dd.satisfying {
                return Ok(acc);
            }
            acc.dd_satisfying = 1;
            let dd_items: Vec<usize> = dd.estimate.iter().collect();

            let record = |acc: &mut AuditAccum, idx: usize, got: &ItemSet| {
                if *got == dd.estimate {
                    acc.agreements[idx] += 1;
                } else {
                    acc.violations[idx] += 1;
                    if acc.counterexamples.len() < MAX_COUNTEREXAMPLES {
                        acc.counterexamples.push(Counterexample {
                            trial,
                            check: checks[idx].clone(),
                            dd_estimate: dd_items.clone(),
                            got: got.iter().collect(),
                        });
                    }
                }
            };

            let lowest = scomp_decode(&design, &outcomes, TieRule::Lowest)?;
            record(&mut acc, 0, &lowest.estimate);
            let random_rule = TieRule::Random { seed: derive_seed(trial_seed, 3, 1) };
            let random = scomp_decode(&design, &outcomes, random_rule)?;
            record(&mut acc, 1, &random.estimate);

            let lp = build_relaxation(&design, &outcomes)?;
            let solution: LpSolution = simplex_solve(&lp, DEFAULT_TOL)?;
            for (offset, rule) in RoundingRule::ALL.into_iter().enumerate() {
                let idx = 2 + offset;
                let seed = derive_seed(trial_seed, 100 + offset as u64, 0);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                match round_solution(&solution, rule, &mut rng) {
                    Ok(set) => record(&mut acc, idx, &set),
                    Err(_) => {
                        acc.violations[idx] += 1;
                    }
                }
            }
            let integral_idx = 2 + RoundingRule::ALL.len();
            if solution.integral {
                acc.lp_integral = 1;
                acc.agreements[integral_idx] += 1;
            } else {
                acc.violations[integral_idx] += 1;
            }

            if oracle_enabled {
                let idx = integral_idx + 1;
                match smallest_satisfying_oracle(&design, &outcomes, n)? {
                    OracleOutcome::Unique(set) => record(&mut acc, idx, &set),
                    OracleOutcome::Ambiguous { first, .. } => {
                        acc.violations[idx] += 1;
                        if acc.counterexamples.len() < MAX_COUNTEREXAMPLES {
                            acc.counterexamples.push(Counterexample {
                                trial,
                                check: "oracle-unique (ambiguous)".into(),
                                dd_estimate: dd_items.clone(),
                                got: first.iter().collect(),
                            });
                        }
                    }
                    OracleOutcome::NoneWithinCap { .. } => acc.violations[idx] += 1,
                }
            }
            Ok(acc)
        })
        .try_reduce(|| AuditAccum::new(checks.len()), |a, b| Ok(a.merge(b)))?;

    let stats = checks
        .iter()
        .enumerate()
        .map(|(idx, check)| AgreementStat {
            check: check.clone(),
            agreements: accum.agreements[idx],
            violations: accum.violations[idx],
        })
        .collect();
    Ok(AuditReport {
        instances: trials,
        dd_satisfying: accum.dd_satisfying,
        lp_integral: accum.lp_integral,
        oracle_enabled,
        stats,
        counterexamples: accum.counterexamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SweepConfig {
        SweepConfig {
            n: 40,
            k: 3,
            p_mode: PMode::Reciprocal,
            t_values: vec![10, 20, 30],
            trials: 200,
            decoders: vec![Decoder::Comp, Decoder::Dd, Decoder::Scomp, Decoder::LpMalioutov],
            master_seed: 11,
        }
    }

    #[test]
    fn trivial_trials_are_binary() {
        let mut config = small_config();
        config.trials = 1;
        let result = run_sweep(&config).unwrap();
        for cell in &result.cells {
            assert!(cell.success_rate() == 0.0 || cell.success_rate() == 1.0);
        }
    }

    #[test]
    fn zero_defectives_always_succeeds() {
        // With k = 0 every test is negative and p = 1 keeps every item
        // covered, so every decoder returns the empty set.
        for decoder in Decoder::ALL {
            let n = if decoder == Decoder::Oracle { 20 } else { 50 };
            let trial = run_trial(n, 0, 0.5, 30, decoder, 9).unwrap();
            assert!(trial.success, "{decoder} failed on the empty instance");
            assert!(trial.result.estimate.is_empty());
        }
    }

    #[test]
    fn sweep_is_reproducible() {
        let config = small_config();
        let a = run_sweep(&config).unwrap();
        let b = run_sweep(&config).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(x.successes, y.successes);
            assert_eq!(x.dd_satisfying, y.dd_satisfying);
            assert_eq!(x.agree_with_dd, y.agree_with_dd);
        }
    }

    #[test]
    fn matched_dominance_holds_per_instance() {
        // COMP is exempt: its estimate is the whole PD set, which can
        // differ from a satisfying DD set, so it has no Property P.
        let result = run_sweep(&small_config()).unwrap();
        for cell in &result.cells {
            if cell.decoder == Decoder::Comp {
                continue;
            }
            assert_eq!(
                cell.dd_success_this_fail, 0,
                "{} lost an instance DD won at t={}",
                cell.decoder, cell.t
            );
            assert_eq!(cell.agree_with_dd, cell.dd_satisfying, "{} broke Property P", cell.decoder);
        }
    }

    #[test]
    fn success_rates_climb_with_t() {
        let config = SweepConfig {
            n: 60,
            k: 4,
            p_mode: PMode::Reciprocal,
            t_values: vec![15, 30, 45, 60],
            trials: 300,
            decoders: vec![Decoder::Scomp],
            master_seed: 5,
        };
        let result = run_sweep(&config).unwrap();
        let rates: Vec<f64> = result.cells.iter().map(SweepCell::success_rate).collect();
        for w in rates.windows(2) {
            // Allow three standard errors of backsliding.
            let se = (w[0] * (1.0 - w[0]) / 300.0).sqrt();
            assert!(w[1] >= w[0] - 3.0 * se, "rates fell: {rates:?}");
        }
        assert!(rates.last().unwrap() > rates.first().unwrap());
    }

    #[test]
    fn config_validation_rejects_bad_input() {
        let mut config = small_config();
        config.trials = 0;
        assert!(config.validate().is_err());

        let mut config = small_config();
        config.t_values = vec![10, 10];
        assert!(config.validate().is_err());

        let mut config = small_config();
        config.decoders.push(Decoder::Comp);
        assert!(config.validate().is_err());

        let mut config = small_config();
        config.decoders = vec![Decoder::Oracle];
        assert!(config.validate().is_err(), "oracle at n=40 must be rejected");
        config.n = 20;
        config.k = 2;
        assert!(config.validate().is_ok());
    }

    #[test]
    fn decoder_names_roundtrip() {
        for decoder in Decoder::ALL {
            assert_eq!(decoder.name().parse::<Decoder>().unwrap(), decoder);
        }
        assert!("bogus".parse::<Decoder>().is_err());
    }

    #[test]
    fn sweep_matches_individual_trials() {
        // The sweep's shared-solve fast path must agree, trial for
        // trial, with standalone run_trial calls on the derived seeds.
        let config = SweepConfig {
            n: 35,
            k: 3,
            p_mode: PMode::Reciprocal,
            t_values: vec![18, 26],
            trials: 120,
            decoders: vec![Decoder::Dd, Decoder::LpMalioutov, Decoder::LpRandomized],
            master_seed: 23,
        };
        let p = config.p();
        let result = run_sweep(&config).unwrap();
        for &t in &config.t_values {
            for &decoder in &config.decoders {
                let mut successes = 0;
                for trial in 0..config.trials {
                    let seed = derive_seed(config.master_seed, t as u64, trial);
                    let outcome = run_trial(config.n, config.k, p, t, decoder, seed).unwrap();
                    successes += u64::from(outcome.success);
                }
                assert_eq!(
                    result.cell(decoder, t).unwrap().successes,
                    successes,
                    "{decoder} at t={t} disagrees with run_trial"
                );
            }
        }
    }

    #[test]
    fn audit_small_instances_clean() {
        let report = property_p_audit(20, 2, 1.0 / 3.0, 12, 2000, 77).unwrap();
        assert!(
            report.dd_satisfying > 200,
            "want DD-satisfying mass, got {}",
            report.dd_satisfying
        );
        assert_eq!(report.total_violations(), 0, "{:?}", report.counterexamples);
        assert!(report.oracle_enabled);
        assert_eq!(report.lp_integral, report.dd_satisfying);
        for stat in &report.stats {
            assert_eq!(stat.agreements, report.dd_satisfying, "check {}", stat.check);
        }
    }

    #[test]
    fn wilson_interval_sane() {
        let (lo, hi) = wilson_interval(500, 1000);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!(hi - lo < 0.07);
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi < 0.01);
        let (lo, hi) = wilson_interval(1000, 1000);
        assert!(lo > 0.99);
        assert_eq!(hi, 1.0);
    }
}
