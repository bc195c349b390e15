//! Distribution statistics used by the profile features.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
}

/// Probabilities of the quartile block (minimum and maximum included).
pub const QUARTILE_PROBS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
/// Probabilities of the decile block (0th and 100th points live in the quartiles).
pub const DECILE_PROBS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

pub fn sorted<T: Scalar>(nums: &[T]) -> Vec<T> {
    let mut v = nums.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    v
}

/// Linear interpolation between closest ranks on sorted data: `h = (n-1)p`.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], p: T) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = T::of_usize(n - 1) * p;
    let lo = h.floor();
    let lo_idx = lo.to_usize().unwrap_or(0).min(n - 1);
    let hi_idx = h.ceil().to_usize().unwrap_or(0).min(n - 1);
    sorted[lo_idx] + (h - lo) * (sorted[hi_idx] - sorted[lo_idx])
}

/// Quartile points (min, q25, q50, q75, max) followed by deciles d10..d90.
pub fn quantiles<T: Scalar>(nums: &[T]) -> Result<[T; 14], StatsError> {
    if nums.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let s = sorted(nums);
    let mut out = [T::zero(); 14];
    for (slot, p) in out
        .iter_mut()
        .zip(QUARTILE_PROBS.iter().chain(DECILE_PROBS.iter()))
    {
        *slot = quantile_sorted(&s, T::of(*p));
    }
    Ok(out)
}

/// Splits values by the 1.5 IQR rule. Both outputs keep the input order.
pub fn iqr_outliers<T: Scalar>(nums: &[T]) -> (Vec<T>, Vec<T>) {
    if nums.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let s = sorted(nums);
    let q1 = quantile_sorted(&s, T::of(0.25));
    let q3 = quantile_sorted(&s, T::of(0.75));
    let reach = T::of(1.5) * (q3 - q1);
    let (low, high) = (q1 - reach, q3 + reach);
    nums.iter().partition(|x| **x < low || **x > high)
}

/// Equal-width bucket counts over `[min, max]`; the maximum lands in the last
/// bucket and a zero-width range puts all mass there.
pub fn histogram<T: Scalar>(nums: &[T], buckets: usize) -> Result<Vec<usize>, StatsError> {
    if nums.is_empty() || buckets == 0 {
        return Err(StatsError::EmptyInput);
    }
    let mut counts = vec![0; buckets];
    let (min, max) = nums
        .iter()
        .fold((nums[0], nums[0]), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
    let range = max - min;
    let scale = T::of_usize(buckets);
    for x in nums {
        let idx = if range > T::zero() {
            ((*x - min) * scale / range)
                .floor()
                .to_usize()
                .unwrap_or(0)
                .min(buckets - 1)
        } else {
            buckets - 1
        };
        counts[idx] += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments<T> {
    pub mean: T,
    pub std_dev: T,
    pub skewness: T,
    pub excess_kurtosis: T,
}

/// Population moments. Skewness is 0 unless `n >= 3` and the spread is non-zero;
/// kurtosis likewise needs `n >= 4`.
pub fn moments<T: Scalar>(nums: &[T]) -> Result<Moments<T>, StatsError> {
    if nums.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let s = sorted(nums);
    let n = T::of_usize(s.len());
    if s[0] == s[s.len() - 1] {
        return Ok(Moments {
            mean: s[0],
            std_dev: T::zero(),
            skewness: T::zero(),
            excess_kurtosis: T::zero(),
        });
    }
    let mean = s.iter().copied().sum::<T>() / n;
    let (mut m2, mut m3, mut m4) = (T::zero(), T::zero(), T::zero());
    for x in &s {
        let d = *x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let skewness = if s.len() >= 3 && m2 > T::zero() {
        m3 / m2.powf(T::of(1.5))
    } else {
        T::zero()
    };
    let excess_kurtosis = if s.len() >= 4 && m2 > T::zero() {
        m4 / (m2 * m2) - T::of(3.0)
    } else {
        T::zero()
    };
    Ok(Moments {
        mean,
        std_dev: m2.sqrt(),
        skewness,
        excess_kurtosis,
    })
}
