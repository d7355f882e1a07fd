//! Word-packed bit rows.
//!
//! Pools and item sets are stored as `u64` words so that "does pool t
//! intersect set S" is a handful of ANDs rather than an O(n) scan.

pub(crate) const WORD_BITS: usize = 64;

/// Number of words needed to hold `n` bits.
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(WORD_BITS)
}

pub(crate) fn set_bit(words: &mut [u64], i: usize) {
    words[i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
}

pub(crate) fn get_bit(words: &[u64], i: usize) -> bool {
    words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
}

/// True iff the two bit rows share a set bit.
pub(crate) fn intersects(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(&x, &y)| x & y != 0)
}

/// Number of set bits in the intersection.
pub(crate) fn count_and(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(&x, &y)| (x & y).count_ones() as usize).sum()
}

/// Indices of set bits in the intersection, ascending.
pub(crate) fn iter_and<'a>(a: &'a [u64], b: &'a [u64]) -> impl Iterator<Item = usize> + 'a {
    a.iter().zip(b).enumerate().flat_map(|(w, (&x, &y))| {
        let mut bits = x & y;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let tz = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(w * WORD_BITS + tz)
        })
    })
}

/// Indices of set bits, ascending.
pub(crate) fn iter_ones(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(w, &x)| {
        let mut bits = x;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let tz = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(w * WORD_BITS + tz)
        })
    })
}

/// All-ones mask over `n` bits (trailing bits of the last word cleared).
pub(crate) fn full_mask(n: usize) -> Vec<u64> {
    let mut words = vec![u64::MAX; words_for(n)];
    let tail = n % WORD_BITS;
    if tail != 0 {
        if let Some(last) = words.last_mut() {
            *last = (1u64 << tail) - 1;
        }
    }
    if n == 0 {
        words.clear();
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_roundtrip() {
        let mut w = vec![0u64; words_for(130)];
        for &i in &[0, 1, 63, 64, 65, 127, 128, 129] {
            set_bit(&mut w, i);
            assert!(get_bit(&w, i));
        }
        assert!(!get_bit(&w, 2));
        assert_eq!(iter_ones(&w).collect::<Vec<_>>(), vec![0, 1, 63, 64, 65, 127, 128, 129]);
    }

    #[test]
    fn intersection_ops() {
        let mut a = vec![0u64; 2];
        let mut b = vec![0u64; 2];
        set_bit(&mut a, 3);
        set_bit(&mut a, 70);
        set_bit(&mut b, 70);
        set_bit(&mut b, 90);
        assert!(intersects(&a, &b));
        assert_eq!(count_and(&a, &b), 1);
        assert_eq!(iter_and(&a, &b).collect::<Vec<_>>(), vec![70]);
        let c = vec![0u64; 2];
        assert!(!intersects(&a, &c));
    }

    #[test]
    fn full_mask_clears_tail() {
        assert_eq!(full_mask(0), Vec::<u64>::new());
        assert_eq!(full_mask(64), vec![u64::MAX]);
        assert_eq!(full_mask(65), vec![u64::MAX, 1]);
        assert_eq!(iter_ones(&full_mask(7)).count(), 7);
    }
}
