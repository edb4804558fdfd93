use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

fn check(k: u64, n: u64, alpha: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Argument("binomial bound needs n >= 1".into()));
    }
    if k > n {
        return Err(Error::Argument(format!("successes {k} exceed trials {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Smallest `p` in `[0, 1]` with `f(p) >= target`, for nondecreasing `f`.
fn bisect(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `P[Bin(n, p) >= k]`, via the regularized incomplete beta function.
pub fn binomial_upper_tail(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        1.0
    } else if k > n {
        0.0
    } else {
        beta_reg(k as f64, (n - k + 1) as f64, p)
    }
}

/// `P[Bin(n, p) <= k]`.
pub fn binomial_cdf(k: u64, n: u64, p: f64) -> f64 {
    if k >= n {
        1.0
    } else {
        1.0 - beta_reg((k + 1) as f64, (n - k) as f64, p)
    }
}

/// One-sided exact lower confidence bound at level `alpha`:
/// the `p` solving `P[Bin(n, p) >= k] = alpha`, or 0 when `k = 0`.
pub fn clopper_pearson_lower(k: u64, n: u64, alpha: f64) -> Result<f64> {
    check(k, n, alpha)?;
    if k == 0 {
        return Ok(0.0);
    }
    Ok(bisect(|p| binomial_upper_tail(k, n, p), alpha))
}

/// One-sided exact upper confidence bound at level `alpha`:
/// the `p` solving `P[Bin(n, p) <= k] = alpha`, or 1 when `k = n`.
pub fn clopper_pearson_upper(k: u64, n: u64, alpha: f64) -> Result<f64> {
    check(k, n, alpha)?;
    if k == n {
        return Ok(1.0);
    }
    // P[Bin <= k] falls in p, so bisect on its complement.
    Ok(bisect(|p| 1.0 - binomial_cdf(k, n, p), 1.0 - alpha))
}

/// Two-sided exact interval with `alpha / 2` in each tail.
pub fn clopper_pearson(k: u64, n: u64, alpha: f64) -> Result<(f64, f64)> {
    check(k, n, alpha)?;
    Ok((
        clopper_pearson_lower(k, n, alpha / 2.0)?,
        clopper_pearson_upper(k, n, alpha / 2.0)?,
    ))
}
