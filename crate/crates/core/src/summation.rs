//! Pairwise (cascade) summation.
//!
//! Rounding error grows like `O(log n)` instead of `O(n)` for naive
//! accumulation. Every sum of more than a thousand terms in this crate goes
//! through here.

use rustfft::num_complex::Complex64;

const BLOCK: usize = 128;

pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
}

/// Sum of `term(k)` over `range`, split pairwise when long. Terms are
/// generated on the fly, so memory stays `O(log n)`.
pub fn sum_range<F>(range: std::ops::RangeInclusive<usize>, mut term: F) -> f64
where
    F: FnMut(usize) -> f64,
{
    let (lo, hi) = (*range.start(), *range.end());
    if hi < lo {
        return 0.0;
    }
    if hi - lo < 1024 {
        return range.map(term).sum();
    }
    range_pairwise(lo, hi, &mut term)
}

fn range_pairwise<F: FnMut(usize) -> f64>(lo: usize, hi: usize, term: &mut F) -> f64 {
    if hi - lo < BLOCK {
        return (lo..=hi).map(term).sum();
    }
    let mid = lo + (hi - lo) / 2;
    range_pairwise(lo, mid, term) + range_pairwise(mid + 1, hi, term)
}
