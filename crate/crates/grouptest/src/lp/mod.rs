//! The covering relaxation of smallest-satisfying-set decoding.
//!
//! The integer program minimizes the number of declared defectives
//! subject to: every positive test contains a declared defective, and no
//! negative test does. The negative-test equalities force those items to
//! zero, so they are eliminated up front; what remains is a covering LP
//! over the possible defectives, solved by [`simplex_solve`] and rounded
//! by one of four heuristics.

mod simplex;

pub use simplex::{simplex_solve, simplex_solve_with};

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::decode::{DecodeDiagnostics, DecodeResult};
use crate::design::{ItemSet, Outcomes, TestDesign};
use crate::error::{Error, Result};

/// Classification tolerance: 0/1 constraint data keeps vertices well
/// conditioned, so 1e-9 cleanly separates genuine fractional coordinates
/// (halves, thirds, …) from roundoff.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Covering LP: minimize the sum of the variables subject to one ≥1
/// constraint per (deduplicated) positive test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverLp {
    /// Sorted item indices with a free value; everything else is fixed to 0.
    variables: Vec<usize>,
    /// Each constraint lists the variable items in one positive test.
    constraints: Vec<Vec<usize>>,
}

impl CoverLp {
    /// Assemble a covering LP from explicit parts. Variables must be
    /// strictly increasing and every constraint a non-empty subset of them.
    pub fn new(variables: Vec<usize>, constraints: Vec<Vec<usize>>) -> Result<Self> {
        for pos in 1..variables.len() {
            if variables[pos] <= variables[pos - 1] {
                return Err(Error::NotStrictlyIncreasing { position: pos });
            }
        }
        let lp = CoverLp { variables, constraints };
        for (idx, constraint) in lp.constraints.iter().enumerate() {
            if constraint.is_empty() {
                return Err(Error::InconsistentOutcomes { test: idx });
            }
            for &item in constraint {
                if lp.column_of(item).is_none() {
                    return Err(Error::NotAVariable { index: item });
                }
            }
        }
        Ok(lp)
    }

    pub fn variables(&self) -> &[usize] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Vec<usize>] {
        &self.constraints
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub(crate) fn column_of(&self, item: usize) -> Option<usize> {
        self.variables.binary_search(&item).ok()
    }

    /// Plain-text dump, one line per constraint: `>=1: i1 i2 ...`.
    pub fn to_debug_dump(&self) -> String {
        let mut out = String::new();
        for constraint in &self.constraints {
            out.push_str(">=1:");
            for item in constraint {
                out.push_str(&format!(" {item}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parse a debug dump; the variable list is the union of the
    /// constraint items.
    pub fn from_debug_dump(text: &str) -> Result<Self> {
        let mut constraints = Vec::new();
        let mut union = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let rest = line
                .strip_prefix(">=1:")
                .ok_or_else(|| Error::Parse(format!("bad constraint line '{line}'")))?;
            let mut items = Vec::new();
            for token in rest.split_whitespace() {
                let item: usize =
                    token.parse().map_err(|_| Error::Parse(format!("bad item index '{token}'")))?;
                items.push(item);
            }
            items.sort_unstable();
            items.dedup();
            union.extend_from_slice(&items);
            constraints.push(items);
        }
        union.sort_unstable();
        union.dedup();
        CoverLp::new(union, constraints)
    }
}

/// Solver verdict for the relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

impl SolveStatus {
    fn name(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

/// Fractional assignment returned by the solver. Items outside the
/// variable list are implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    variables: Vec<usize>,
    values: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    /// Every value within `tol` of 0 or 1.
    pub integral: bool,
    tol: f64,
}

impl LpSolution {
    pub(crate) fn new(
        variables: Vec<usize>,
        values: Vec<f64>,
        status: SolveStatus,
        tol: f64,
    ) -> Self {
        let objective = values.iter().sum();
        let integral = status == SolveStatus::Optimal
            && values.iter().all(|&v| v.abs() <= tol || (v - 1.0).abs() <= tol);
        LpSolution { variables, values, objective, status, integral, tol }
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn value_of(&self, item: usize) -> f64 {
        match self.variables.binary_search(&item) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    /// (item, value) pairs in ascending item order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.variables.iter().copied().zip(self.values.iter().copied())
    }
}

/// Rounding heuristics mapping a fractional solution to an item set.
/// Every rule maps an integral solution to its unit-valued support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundingRule {
    /// Keep every item with a strictly positive value.
    Malioutov,
    /// Keep items at or above one half.
    Half,
    /// Demand an integral solution; otherwise declare a global error.
    Crude,
    /// Keep item i with probability clamp(z_i, 0, 1).
    Randomized,
}

impl RoundingRule {
    pub const ALL: [RoundingRule; 4] = [
        RoundingRule::Malioutov,
        RoundingRule::Half,
        RoundingRule::Crude,
        RoundingRule::Randomized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RoundingRule::Malioutov => "malioutov",
            RoundingRule::Half => "half",
            RoundingRule::Crude => "crude",
            RoundingRule::Randomized => "randomized",
        }
    }
}

impl std::str::FromStr for RoundingRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "malioutov" => Ok(RoundingRule::Malioutov),
            "half" => Ok(RoundingRule::Half),
            "crude" => Ok(RoundingRule::Crude),
            "randomized" => Ok(RoundingRule::Randomized),
            other => Err(Error::Parse(format!("unknown rounding rule '{other}'"))),
        }
    }
}

/// Build the covering relaxation for an observed instance.
///
/// Variables are the possible defectives; each positive test contributes
/// one ≥1 constraint restricted to them (duplicates dropped). A positive
/// test with no possible defectives cannot arise from noiseless outcomes
/// and is rejected as corrupted input.
pub fn build_relaxation(design: &TestDesign, outcomes: &Outcomes) -> Result<CoverLp> {
    let pd = crate::decode::possible_defectives(design, outcomes)?;
    let pd_mask = pd.to_mask(design.n())?;
    let mut constraints = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for test in 0..design.t() {
        if !outcomes.is_positive(test) {
            continue;
        }
        let items: Vec<usize> = bits::iter_and(design.row_words(test), &pd_mask).collect();
        if items.is_empty() {
            return Err(Error::InconsistentOutcomes { test });
        }
        if seen.insert(items.clone()) {
            constraints.push(items);
        }
    }
    CoverLp::new(pd.iter().collect(), constraints)
}

/// Apply a rounding rule to an optimal solution.
///
/// Values within the solution's tolerance of 0 or 1 are snapped before
/// the rule fires, so integral solutions round identically under every
/// rule (including `Randomized`).
pub fn round_solution<R: Rng + ?Sized>(
    solution: &LpSolution,
    rule: RoundingRule,
    rng: &mut R,
) -> Result<ItemSet> {
    if solution.status != SolveStatus::Optimal {
        return Err(Error::NotOptimal { status: solution.status.name() });
    }
    let tol = solution.tol;
    if rule == RoundingRule::Crude && !solution.integral {
        return Err(Error::FractionalSolution);
    }
    let mut items = Vec::new();
    for (item, raw) in solution.entries() {
        let value = if raw.abs() <= tol {
            0.0
        } else if (raw - 1.0).abs() <= tol {
            1.0
        } else {
            raw
        };
        let keep = match rule {
            RoundingRule::Malioutov => value > 0.0,
            RoundingRule::Half => value >= 0.5,
            RoundingRule::Crude => value == 1.0,
            RoundingRule::Randomized => match value {
                0.0 => false,
                1.0 => true,
                v => rng.gen_bool(v.clamp(0.0, 1.0)),
            },
        };
        if keep {
            items.push(item);
        }
    }
    ItemSet::from_sorted(items)
}

/// Full LP decode: build the relaxation, solve it, round it.
///
/// Solver and rounding failures (the crude rule on a fractional optimum,
/// or a pivot-cap blowout) come back as a failed [`DecodeResult`] with an
/// empty estimate rather than an error, so a simulation can count them.
pub fn lp_decode<R: Rng + ?Sized>(
    design: &TestDesign,
    outcomes: &Outcomes,
    rule: RoundingRule,
    rng: &mut R,
) -> Result<DecodeResult> {
    let lp = build_relaxation(design, outcomes)?;
    let rounded = simplex_solve(&lp, DEFAULT_TOL).and_then(|sol| round_solution(&sol, rule, rng));
    finish_lp_decode(design, outcomes, lp.num_variables(), rounded)
}

/// Shared tail of the LP decode: turn a rounding result into a
/// [`DecodeResult`], mapping declared failures to an empty failed
/// estimate and propagating everything else.
pub(crate) fn finish_lp_decode(
    design: &TestDesign,
    outcomes: &Outcomes,
    pd_count: usize,
    rounded: Result<ItemSet>,
) -> Result<DecodeResult> {
    let (estimate, failed) = match rounded {
        Ok(set) => (set, false),
        Err(Error::FractionalSolution) | Err(Error::PivotCapExceeded { .. }) => {
            (ItemSet::empty(), true)
        }
        Err(other) => return Err(other),
    };
    let satisfying = crate::decode::is_satisfying(design, outcomes, &estimate)?;
    let unexplained = (0..design.t())
        .filter(|&test| {
            outcomes.is_positive(test)
                && !design.items_in_test(test).any(|item| estimate.contains(item))
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
