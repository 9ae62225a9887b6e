use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Joint cumulant `kappa(t_{k_1}, ..., t_{k_n})` of CUE power traces where it
/// is known:
///
/// - zero when `sum k_j != 0`;
/// - `min(|k|, N)` for the pair `(k, -k)`;
/// - zero when `n > 2`, `sum k_j = 0` and `sum |k_j| <= N`.
///
/// Any other index set returns `Ok(None)`.
pub fn joint_cumulant_exact(ks: &[i64], n: usize) -> Result<Option<f64>> {
    if ks.is_empty() {
        return Err(Error::InvalidParameter("empty index list".into()));
    }
    if ks.contains(&0) {
        return Err(Error::InvalidParameter("trace indices must be nonzero".into()));
    }
    let sum: i128 = ks.iter().map(|&k| k as i128).sum();
    if sum != 0 {
        return Ok(Some(0.0));
    }
    if ks.len() == 2 {
        return Ok(Some(ks[0].unsigned_abs().min(n as u64) as f64));
    }
    let abs_sum: u128 = ks.iter().map(|&k| k.unsigned_abs() as u128).sum();
    if abs_sum <= n as u128 {
        return Ok(Some(0.0));
    }
    Ok(None)
}

/// `E prod_i k_i phi_{k_i}` for i.i.d. `phi ~ Exp(1)`, which equals
/// `E prod_i |t_{k_i}|^2` under CUE when `2 sum k_i <= N`.
///
/// An index `k` repeated `m` times contributes `k^m m!`.
pub fn moment_identity_rhs(ks: &[u64], n: usize) -> Result<f64> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidParameter("indices must be a nonempty list of positive integers".into()));
    }
    let twice_sum = 2 * ks.iter().sum::<u64>();
    if twice_sum > n as u64 {
        return Err(Error::IdentityNotGuaranteed { twice_sum, n });
    }
    let mut counts = BTreeMap::new();
    for &k in ks {
        *counts.entry(k).or_insert(0u32) += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(k, m)| (k as f64).powi(m as i32) * (1..=m).map(f64::from).product::<f64>())
        .product())
}
