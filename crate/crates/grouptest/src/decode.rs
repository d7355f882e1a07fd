//! Detection algorithms: COMP, DD, SCOMP, and the exhaustive
//! smallest-satisfying-set oracle.
//!
//! All decoders share the same first step: any item appearing in a
//! negative test is definitely nondefective; the survivors are the
//! "possible defectives" (PDs). An item in no test at all is a PD by
//! this rule, since it appears in no negative test.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::design::{ItemSet, Outcomes, TestDesign};
use crate::error::{Error, Result};

/// Maximum number of covering possible defectives the exhaustive oracle
/// will enumerate over.
pub const ORACLE_PD_CAP: usize = 25;

/// Counts recorded at decoder termination.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeDiagnostics {
    /// Number of possible defectives after the elimination step.
    pub possible_defectives: usize,
    /// Positive tests containing no item of the final estimate.
    pub unexplained_tests: usize,
    /// Set when the decoder declared a failure (crude rounding on a
    /// fractional solution, or inconsistent input).
    pub failed: bool,
}

/// Output of a decoder run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub estimate: ItemSet,
    /// Whether `estimate` satisfies every test outcome.
    pub satisfying: bool,
    /// The definite defectives (populated by DD and SCOMP, empty otherwise).
    pub dd_core: ItemSet,
    pub diagnostics: DecodeDiagnostics,
}

/// Tie-breaking rule for SCOMP's greedy step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieRule {
    /// Pick the lowest item index among the tied candidates.
    Lowest,
    /// Pick uniformly among the tied candidates, seeded for reproducibility.
    Random { seed: u64 },
}

fn check_dims(design: &TestDesign, outcomes: &Outcomes) -> Result<()> {
    if outcomes.len() != design.t() {
        return Err(Error::LengthMismatch { got: outcomes.len(), expected: design.t() });
    }
    Ok(())
}

fn pd_mask(design: &TestDesign, outcomes: &Outcomes) -> Result<Vec<u64>> {
    check_dims(design, outcomes)?;
    let mut mask = bits::full_mask(design.n());
    for test in 0..design.t() {
        if !outcomes.is_positive(test) {
            for (m, &row) in mask.iter_mut().zip(design.row_words(test)) {
                *m &= !row;
            }
        }
    }
    Ok(mask)
}

fn mask_to_set(mask: &[u64]) -> ItemSet {
    ItemSet::from_sorted(bits::iter_ones(mask).collect()).expect("iter_ones is ascending")
}

fn count_ones(mask: &[u64]) -> usize {
    mask.iter().map(|w| w.count_ones() as usize).sum()
}

fn unexplained_count(design: &TestDesign, outcomes: &Outcomes, estimate_mask: &[u64]) -> usize {
    (0..design.t())
        .filter(|&test| {
            outcomes.is_positive(test) && !bits::intersects(design.row_words(test), estimate_mask)
        })
        .count()
}

/// Items that appear in no negative test.
pub fn possible_defectives(design: &TestDesign, outcomes: &Outcomes) -> Result<ItemSet> {
    Ok(mask_to_set(&pd_mask(design, outcomes)?))
}

/// True iff `candidate` avoids every negative test and hits every
/// positive test.
pub fn is_satisfying(
    design: &TestDesign,
    outcomes: &Outcomes,
    candidate: &ItemSet,
) -> Result<bool> {
    check_dims(design, outcomes)?;
    let mask = candidate.to_mask(design.n())?;
    for test in 0..design.t() {
        if bits::intersects(design.row_words(test), &mask) != outcomes.is_positive(test) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn finish(
    design: &TestDesign,
    outcomes: &Outcomes,
    estimate_mask: Vec<u64>,
    dd_core: ItemSet,
    pd_count: usize,
    failed: bool,
) -> DecodeResult {
    let estimate = mask_to_set(&estimate_mask);
    let satisfying =
        is_satisfying(design, outcomes, &estimate).expect("estimate built from this design");
    let unexplained = unexplained_count(design, outcomes, &estimate_mask);
    DecodeResult {
        estimate,
        satisfying,
        dd_core,
        diagnostics: DecodeDiagnostics {
            possible_defectives: pd_count,
            unexplained_tests: unexplained,
            failed,
        },
    }
}

/// COMP: declare every possible defective to be defective.
pub fn comp_decode(design: &TestDesign, outcomes: &Outcomes) -> Result<DecodeResult> {
    let pd = pd_mask(design, outcomes)?;
    let pd_count = count_ones(&pd);
    Ok(finish(design, outcomes, pd, ItemSet::empty(), pd_count, false))
}

/// DD: declare exactly those possible defectives that appear as the sole
/// possible defective in some positive test.
pub fn dd_decode(design: &TestDesign, outcomes: &Outcomes) -> Result<DecodeResult> {
    let pd = pd_mask(design, outcomes)?;
    let pd_count = count_ones(&pd);
    let mut dd = vec![0u64; pd.len()];
    for test in 0..design.t() {
        if !outcomes.is_positive(test) {
            continue;
        }
        let row = design.row_words(test);
        if bits::count_and(row, &pd) == 1 {
            let item = bits::iter_and(row, &pd).next().expect("count is one");
            bits::set_bit(&mut dd, item);
        }
    }
    let core = mask_to_set(&dd);
    Ok(finish(design, outcomes, dd, core, pd_count, false))
}

/// SCOMP: start from the DD set and greedily add the possible defective
/// that explains the most still-unexplained positive tests until none
/// remain.
pub fn scomp_decode(
    design: &TestDesign,
    outcomes: &Outcomes,
    tie_rule: TieRule,
) -> Result<DecodeResult> {
    let pd = pd_mask(design, outcomes)?;
    let pd_count = count_ones(&pd);
    let dd = dd_decode(design, outcomes)?;
    let core = dd.dd_core.clone();
    let mut estimate_mask = core.to_mask(design.n())?;

    // Positive tests not covered by the DD core, and for each the list of
    // candidate items (possible defectives outside the core).
    let mut unexplained: Vec<bool> = vec![false; design.t()];
    let mut items_of: Vec<Vec<usize>> = vec![Vec::new(); design.t()];
    let mut tests_of: Vec<Vec<usize>> = vec![Vec::new(); design.n()];
    let mut counts: Vec<usize> = vec![0; design.n()];
    let mut remaining = 0usize;
    for test in 0..design.t() {
        if !outcomes.is_positive(test) || bits::intersects(design.row_words(test), &estimate_mask) {
            continue;
        }
        unexplained[test] = true;
        remaining += 1;
        for item in bits::iter_and(design.row_words(test), &pd) {
            items_of[test].push(item);
            tests_of[item].push(test);
            counts[item] += 1;
        }
    }

    let mut rng = match tie_rule {
        TieRule::Lowest => None,
        TieRule::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };

    while remaining > 0 {
        let best = counts.iter().copied().max().expect("n >= 1");
        if best == 0 {
            // A positive test with no possible defective: inconsistent
            // input; nothing further can be explained.
            break;
        }
        let chosen = match rng.as_mut() {
            None => counts.iter().position(|&c| c == best).expect("max exists"),
            Some(r) => {
                let tied: Vec<usize> = (0..design.n()).filter(|&i| counts[i] == best).collect();
                tied[r.gen_range(0..tied.len())]
            }
        };
        bits::set_bit(&mut estimate_mask, chosen);
        for &test in &tests_of[chosen] {
            if !unexplained[test] {
                continue;
            }
            unexplained[test] = false;
            remaining -= 1;
            for &item in &items_of[test] {
                counts[item] -= 1;
            }
        }
    }

    Ok(finish(design, outcomes, estimate_mask, core, pd_count, remaining > 0))
}

/// Result of the exhaustive smallest-satisfying-set search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    /// Exactly one satisfying set of minimum cardinality.
    Unique(ItemSet),
    /// Two or more satisfying sets share the minimum cardinality.
    Ambiguous { size: usize, first: ItemSet, second: ItemSet },
    /// No satisfying set of size at most `size_cap` exists.
    NoneWithinCap { cap: usize },
}

/// Enumerate subsets of the possible defectives by increasing size and
/// report the minimum-cardinality satisfying set, flagging ties.
///
/// Only possible defectives that appear in at least one positive test are
/// enumerated; no minimal satisfying set contains any other item. The
/// search refuses instances with more than [`ORACLE_PD_CAP`] such items.
pub fn smallest_satisfying_oracle(
    design: &TestDesign,
    outcomes: &Outcomes,
    size_cap: usize,
) -> Result<OracleOutcome> {
    let pd = pd_mask(design, outcomes)?;
    let positives: Vec<usize> = (0..design.t()).filter(|&t| outcomes.is_positive(t)).collect();

    // Candidate items with, for each, the set of positive tests it covers.
    let mut candidates: Vec<usize> = Vec::new();
    let mut coverage: Vec<Vec<u64>> = Vec::new();
    let cover_words = bits::words_for(positives.len());
    for item in bits::iter_ones(&pd) {
        let mut mask = vec![0u64; cover_words];
        let mut any = false;
        for (pos, &test) in positives.iter().enumerate() {
            if design.membership(test, item) {
                bits::set_bit(&mut mask, pos);
                any = true;
            }
        }
        if any {
            candidates.push(item);
            coverage.push(mask);
        }
    }
    if candidates.len() > ORACLE_PD_CAP {
        return Err(Error::OracleTooLarge { count: candidates.len(), cap: ORACLE_PD_CAP });
    }

    let target = bits::full_mask(positives.len());
    if positives.is_empty() {
        return Ok(OracleOutcome::Unique(ItemSet::empty()));
    }

    let cap = size_cap.min(candidates.len());

    // Depth-first enumeration of size-`size` candidate subsets with a
    // running coverage union; stops after two hits (enough to flag a tie).
    struct Search<'a> {
        candidates: &'a [usize],
        coverage: &'a [Vec<u64>],
        target: &'a [u64],
        chosen: Vec<usize>,
        found: Vec<ItemSet>,
    }

    impl Search<'_> {
        fn run(&mut self, start: usize, size: usize, acc: &[u64]) {
            if self.found.len() >= 2 {
                return;
            }
            if size == 0 {
                if acc == self.target {
                    self.found
                        .push(ItemSet::from_sorted(self.chosen.clone()).expect("chosen ascending"));
                }
                return;
            }
            for idx in start..=self.candidates.len().saturating_sub(size) {
                let mut next: Vec<u64> = acc.to_vec();
                for (w, &c) in next.iter_mut().zip(&self.coverage[idx]) {
                    *w |= c;
                }
                self.chosen.push(self.candidates[idx]);
                self.run(idx + 1, size - 1, &next);
                self.chosen.pop();
                if self.found.len() >= 2 {
                    return;
                }
            }
        }
    }

    let mut search = Search {
        candidates: &candidates,
        coverage: &coverage,
        target: &target,
        chosen: Vec::new(),
        found: Vec::new(),
    };
    for size in 1..=cap {
        search.found.clear();
        search.run(0, size, &vec![0u64; cover_words]);
        match search.found.len() {
            0 => continue,
            1 => return Ok(OracleOutcome::Unique(search.found.pop().expect("one found"))),
            _ => {
                let second = search.found.pop().expect("two found");
                let first = search.found.pop().expect("two found");
                return Ok(OracleOutcome::Ambiguous { size, first, second });
            }
        }
    }
    Ok(OracleOutcome::NoneWithinCap { cap: size_cap })
}
