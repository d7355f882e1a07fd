//! Test designs, item sets, and noiseless outcomes.
//!
//! A design is a T×n boolean inclusion matrix: entry (t, i) says whether
//! item i is in the pool for test t. Rows are bit-packed so the outcome
//! rule and the decoders reduce to word-wise ANDs. Items are 0-indexed.

use rand::distributions::{Bernoulli, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Error, Result};

/// A T×n pooling plan with bit-packed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TestDesign {
    n: usize,
    t: usize,
    words_per_row: usize,
    rows: Vec<u64>,
    /// Bernoulli parameter the design was drawn with, when known.
    p: Option<f64>,
}

impl TestDesign {
    fn blank(n: usize, t: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroCount { what: "item count n" });
        }
        if t == 0 {
            return Err(Error::ZeroCount { what: "test count t" });
        }
        let words_per_row = bits::words_for(n);
        Ok(TestDesign { n, t, words_per_row, rows: vec![0; words_per_row * t], p: None })
    }

    /// Build a design from explicit pools, one item list per test.
    pub fn from_pools(n: usize, pools: &[Vec<usize>]) -> Result<Self> {
        let mut design = Self::blank(n, pools.len())?;
        for (test, pool) in pools.iter().enumerate() {
            for &item in pool {
                if item >= n {
                    return Err(Error::ItemOutOfRange { index: item, n });
                }
                bits::set_bit(design.row_words_mut(test), item);
            }
        }
        Ok(design)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Bernoulli parameter recorded at generation time; `None` for designs
    /// built from explicit pools or parsed from a file.
    pub fn p(&self) -> Option<f64> {
        self.p
    }

    pub fn membership(&self, test: usize, item: usize) -> bool {
        bits::get_bit(self.row_words(test), item)
    }

    /// Bit-packed row for one test.
    pub(crate) fn row_words(&self, test: usize) -> &[u64] {
        &self.rows[test * self.words_per_row..(test + 1) * self.words_per_row]
    }

    fn row_words_mut(&mut self, test: usize) -> &mut [u64] {
        &mut self.rows[test * self.words_per_row..(test + 1) * self.words_per_row]
    }

    /// Items in the pool for `test`, ascending.
    pub fn items_in_test(&self, test: usize) -> impl Iterator<Item = usize> + '_ {
        bits::iter_ones(self.row_words(test))
    }

    pub fn pool_size(&self, test: usize) -> usize {
        self.row_words(test).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Total number of set entries across the whole matrix.
    pub fn ones_count(&self) -> usize {
        self.rows.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Serialize to the plain-text design format: first line `n t`, then
    /// t lines of n characters `0`/`1`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.n + 1) * self.t + 16);
        out.push_str(&format!("{} {}\n", self.n, self.t));
        for test in 0..self.t {
            for item in 0..self.n {
                out.push(if self.membership(test, item) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    /// Parse the plain-text design format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty design file".into()))?;
        let mut parts = header.split_whitespace();
        let n: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad design header '{header}'")))?;
        let t: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad design header '{header}'")))?;
        if parts.next().is_some() {
            return Err(Error::Parse(format!("bad design header '{header}'")));
        }
        let mut design = Self::blank(n, t)?;
        for test in 0..t {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("design file ends before test {test}")))?
                .trim_end();
            if line.len() != n {
                return Err(Error::Parse(format!(
                    "test {test} row has {} characters, expected {n}",
                    line.len()
                )));
            }
            for (item, ch) in line.chars().enumerate() {
                match ch {
                    '1' => bits::set_bit(design.row_words_mut(test), item),
                    '0' => {}
                    other => {
                        return Err(Error::Parse(format!(
                            "unexpected character '{other}' in test {test}"
                        )))
                    }
                }
            }
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::Parse("trailing content after design rows".into()));
        }
        Ok(design)
    }
}

/// A sorted, duplicate-free set of item indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ItemSet {
    items: Vec<usize>,
}

impl ItemSet {
    pub fn empty() -> Self {
        ItemSet { items: Vec::new() }
    }

    /// Wrap an already strictly increasing index list.
    pub fn from_sorted(items: Vec<usize>) -> Result<Self> {
        for pos in 1..items.len() {
            if items[pos] <= items[pos - 1] {
                return Err(Error::NotStrictlyIncreasing { position: pos });
            }
        }
        Ok(ItemSet { items })
    }

    /// Sort and deduplicate an arbitrary index list.
    pub fn from_unsorted(mut items: Vec<usize>) -> Self {
        items.sort_unstable();
        items.dedup();
        ItemSet { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.items.binary_search(&item).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.items
    }

    pub fn is_subset_of(&self, other: &ItemSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    pub fn max(&self) -> Option<usize> {
        self.items.last().copied()
    }

    /// Bit mask over `n` items; errors if any index is out of range.
    pub(crate) fn to_mask(&self, n: usize) -> Result<Vec<u64>> {
        let mut mask = vec![0u64; bits::words_for(n)];
        for item in self.iter() {
            if item >= n {
                return Err(Error::ItemOutOfRange { index: item, n });
            }
            bits::set_bit(&mut mask, item);
        }
        Ok(mask)
    }
}

impl std::fmt::Display for ItemSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for item in self.iter() {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{item}")?;
            first = false;
        }
        Ok(())
    }
}

/// Length-T vector of test results; entry t is true iff test t is positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcomes {
    results: Vec<bool>,
}

impl Outcomes {
    pub fn new(results: Vec<bool>) -> Self {
        Outcomes { results }
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }

    pub fn is_positive(&self, test: usize) -> bool {
        self.results[test]
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.results.iter().copied()
    }

    pub fn positive_count(&self) -> usize {
        self.results.iter().filter(|&&r| r).count()
    }

    pub fn negative_count(&self) -> usize {
        self.results.len() - self.positive_count()
    }

    /// One line of `0`/`1` characters, test order.
    pub fn to_text(&self) -> String {
        let mut out: String = self.results.iter().map(|&r| if r { '1' } else { '0' }).collect();
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let line = text.lines().next().unwrap_or("").trim_end();
        let mut results = Vec::with_capacity(line.len());
        for ch in line.chars() {
            match ch {
                '1' => results.push(true),
                '0' => results.push(false),
                other => {
                    return Err(Error::Parse(format!("unexpected character '{other}' in outcomes")))
                }
            }
        }
        if text.lines().skip(1).any(|l| !l.trim().is_empty()) {
            return Err(Error::Parse("trailing content after outcome line".into()));
        }
        Ok(Outcomes { results })
    }
}

/// How the Bernoulli parameter is chosen from the defective count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMode {
    /// p = 1/(k+1).
    Reciprocal,
    /// p = min(nu/k, 1).
    NuOverK(f64),
    /// Caller-supplied p.
    Explicit(f64),
}

/// Resolve a [`PMode`] to a concrete probability for a given k.
pub fn p_from_k(k: usize, mode: PMode) -> f64 {
    match mode {
        PMode::Reciprocal => 1.0 / (k as f64 + 1.0),
        PMode::NuOverK(nu) => {
            if k == 0 {
                1.0
            } else {
                (nu / k as f64).min(1.0)
            }
        }
        PMode::Explicit(p) => p,
    }
}

/// Draw a T×n design with each entry set independently with probability p.
pub fn bernoulli_design<R: Rng + ?Sized>(
    n: usize,
    t: usize,
    p: f64,
    rng: &mut R,
) -> Result<TestDesign> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability { value: p });
    }
    let mut design = TestDesign::blank(n, t)?;
    design.p = Some(p);
    let draw = Bernoulli::new(p).expect("p validated above");
    for test in 0..t {
        let row = design.row_words_mut(test);
        for item in 0..n {
            if draw.sample(rng) {
                bits::set_bit(row, item);
            }
        }
    }
    Ok(design)
}

/// Draw a uniformly random k-subset of {0, …, n−1}.
pub fn sample_defective_set<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<ItemSet> {
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    let mut items = rand::seq::index::sample(rng, n, k).into_vec();
    items.sort_unstable();
    ItemSet::from_sorted(items)
}

/// Apply the noiseless outcome rule: test t is positive iff its pool
/// intersects the defective set.
pub fn compute_outcomes(design: &TestDesign, defectives: &ItemSet) -> Result<Outcomes> {
    let mask = defectives.to_mask(design.n())?;
    let results =
        (0..design.t()).map(|test| bits::intersects(design.row_words(test), &mask)).collect();
    Ok(Outcomes::new(results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// The worked 3×4 instance used throughout the decoder tests:
    /// pools {2}, {0,2}, {1,3}.
    pub(crate) fn worked_design() -> TestDesign {
        TestDesign::from_pools(4, &[vec![2], vec![0, 2], vec![1, 3]]).unwrap()
    }

    #[test]
    fn p_zero_gives_empty_pools() {
        let design = bernoulli_design(4, 3, 0.0, &mut rng(7)).unwrap();
        assert_eq!(design.ones_count(), 0);
    }

    #[test]
    fn p_one_gives_full_pools() {
        let design = bernoulli_design(4, 3, 1.0, &mut rng(7)).unwrap();
        assert_eq!(design.ones_count(), 12);
    }

    #[test]
    fn invalid_probability_rejected() {
        assert!(matches!(
            bernoulli_design(4, 3, 1.5, &mut rng(0)),
            Err(Error::InvalidProbability { .. })
        ));
        assert!(matches!(
            bernoulli_design(4, 3, -0.1, &mut rng(0)),
            Err(Error::InvalidProbability { .. })
        ));
    }

    #[test]
    fn density_close_to_p() {
        // Fig. 1 parameters: the empirical density of a 200×500 draw at
        // p = 1/11 should sit within 0.02 of 1/11.
        let p = 1.0 / 11.0;
        let design = bernoulli_design(500, 200, p, &mut rng(42)).unwrap();
        let density = design.ones_count() as f64 / (500.0 * 200.0);
        assert!((density - p).abs() < 0.02, "density {density} too far from {p}");
    }

    #[test]
    fn same_seed_same_design() {
        let a = bernoulli_design(100, 50, 0.3, &mut rng(9)).unwrap();
        let b = bernoulli_design(100, 50, 0.3, &mut rng(9)).unwrap();
        assert_eq!(a, b);
        let c = bernoulli_design(100, 50, 0.3, &mut rng(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn defective_set_extremes() {
        assert!(sample_defective_set(5, 0, &mut rng(0)).unwrap().is_empty());
        let full = sample_defective_set(5, 5, &mut rng(0)).unwrap();
        assert_eq!(full.as_slice(), &[0, 1, 2, 3, 4]);
        assert!(matches!(sample_defective_set(5, 6, &mut rng(0)), Err(Error::KExceedsN { .. })));
    }

    #[test]
    fn defective_set_is_uniform() {
        // 1e5 singleton draws from {0,1,2}: each frequency within 0.02 of 1/3.
        let mut counts = [0u32; 3];
        let mut r = rng(123);
        for _ in 0..100_000 {
            let set = sample_defective_set(3, 1, &mut r).unwrap();
            counts[set.as_slice()[0]] += 1;
        }
        for &c in &counts {
            let freq = f64::from(c) / 100_000.0;
            assert!((freq - 1.0 / 3.0).abs() < 0.02, "frequency {freq} not near 1/3");
        }
    }

    #[test]
    fn no_defectives_all_negative() {
        let design = bernoulli_design(20, 10, 0.5, &mut rng(3)).unwrap();
        let outcomes = compute_outcomes(&design, &ItemSet::empty()).unwrap();
        assert_eq!(outcomes.positive_count(), 0);
    }

    #[test]
    fn full_design_single_defective_all_positive() {
        let design = bernoulli_design(4, 3, 1.0, &mut rng(0)).unwrap();
        let defectives = ItemSet::from_sorted(vec![2]).unwrap();
        let outcomes = compute_outcomes(&design, &defectives).unwrap();
        assert_eq!(outcomes.positive_count(), 3);
    }

    #[test]
    fn worked_instance_outcomes() {
        let design = worked_design();
        let defectives = ItemSet::from_sorted(vec![0, 1]).unwrap();
        let outcomes = compute_outcomes(&design, &defectives).unwrap();
        assert_eq!(outcomes.iter().collect::<Vec<_>>(), vec![false, true, true]);
    }

    #[test]
    fn out_of_range_defective_rejected() {
        let design = worked_design();
        let bad = ItemSet::from_sorted(vec![4]).unwrap();
        assert!(matches!(
            compute_outcomes(&design, &bad),
            Err(Error::ItemOutOfRange { index: 4, n: 4 })
        ));
    }

    #[test]
    fn outcome_monotone_in_defective_set() {
        // Enlarging the defective set never turns a positive test negative.
        let mut r = rng(77);
        for _ in 0..50 {
            let design = bernoulli_design(30, 12, 0.2, &mut r).unwrap();
            let small = sample_defective_set(30, 3, &mut r).unwrap();
            let mut extended: Vec<usize> = small.iter().collect();
            extended.extend(sample_defective_set(30, 4, &mut r).unwrap().iter());
            let large = ItemSet::from_unsorted(extended);
            let o_small = compute_outcomes(&design, &small).unwrap();
            let o_large = compute_outcomes(&design, &large).unwrap();
            for test in 0..design.t() {
                assert!(!o_small.is_positive(test) || o_large.is_positive(test));
            }
        }
    }

    #[test]
    fn negative_fraction_concentrates() {
        // For p = 1/(k+1), the fraction of negative tests concentrates
        // near (1-p)^k; allow three standard errors.
        let (n, k, t, trials) = (100usize, 4usize, 40usize, 200usize);
        let p = p_from_k(k, PMode::Reciprocal);
        let expected = (1.0 - p).powi(k as i32);
        let mut total_negative = 0usize;
        let mut r = rng(2024);
        for _ in 0..trials {
            let design = bernoulli_design(n, t, p, &mut r).unwrap();
            let defectives = sample_defective_set(n, k, &mut r).unwrap();
            total_negative += compute_outcomes(&design, &defectives).unwrap().negative_count();
        }
        let total_tests = (t * trials) as f64;
        let observed = total_negative as f64 / total_tests;
        let se = (expected * (1.0 - expected) / total_tests).sqrt();
        assert!(
            (observed - expected).abs() < 3.0 * se,
            "negative fraction {observed} vs expected {expected} (se {se})"
        );
    }

    #[test]
    fn p_mode_resolution() {
        assert_eq!(p_from_k(10, PMode::Reciprocal), 1.0 / 11.0);
        assert_eq!(p_from_k(0, PMode::Reciprocal), 1.0);
        assert_eq!(p_from_k(4, PMode::NuOverK(1.0)), 0.25);
        assert_eq!(p_from_k(0, PMode::NuOverK(1.0)), 1.0);
        assert_eq!(p_from_k(2, PMode::NuOverK(5.0)), 1.0);
        assert_eq!(p_from_k(9, PMode::Explicit(0.125)), 0.125);
    }

    #[test]
    fn design_text_roundtrip() {
        let design = worked_design();
        let text = design.to_text();
        assert_eq!(text, "4 3\n0010\n1010\n0101\n");
        let parsed = TestDesign::from_text(&text).unwrap();
        assert_eq!(parsed.n(), 4);
        assert_eq!(parsed.t(), 3);
        for test in 0..3 {
            for item in 0..4 {
                assert_eq!(parsed.membership(test, item), design.membership(test, item));
            }
        }
        assert_eq!(parsed.p(), None);
    }

    #[test]
    fn design_text_errors() {
        assert!(TestDesign::from_text("").is_err());
        assert!(TestDesign::from_text("4\n0010\n").is_err());
        assert!(TestDesign::from_text("4 2\n0010\n").is_err());
        assert!(TestDesign::from_text("4 1\n001\n").is_err());
        assert!(TestDesign::from_text("4 1\n00x0\n").is_err());
    }

    #[test]
    fn outcomes_text_roundtrip() {
        let outcomes = Outcomes::new(vec![false, true, true]);
        assert_eq!(outcomes.to_text(), "011\n");
        assert_eq!(Outcomes::from_text("011\n").unwrap(), outcomes);
        assert!(Outcomes::from_text("01x\n").is_err());
    }

    #[test]
    fn item_set_validation() {
        assert!(ItemSet::from_sorted(vec![0, 1, 5]).is_ok());
        assert!(matches!(
            ItemSet::from_sorted(vec![0, 0, 1]),
            Err(Error::NotStrictlyIncreasing { position: 1 })
        ));
        assert!(ItemSet::from_sorted(vec![3, 1]).is_err());
        let set = ItemSet::from_unsorted(vec![5, 1, 5, 0]);
        assert_eq!(set.as_slice(), &[0, 1, 5]);
        assert!(set.contains(5));
        assert!(!set.contains(2));
        assert_eq!(set.to_string(), "0 1 5");
    }
}
