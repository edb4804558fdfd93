//! Monte Carlo estimation, standard errors and exact binomial bounds.
//!
//! Every episode seed derives from a [`SeedPlan`] and results are gathered
//! in run order, so estimates are bit-identical for any worker count.

mod binomial;
mod estimate;
mod seed;

pub use binomial::{
    binomial_cdf, binomial_upper_tail, clopper_pearson, clopper_pearson_lower,
    clopper_pearson_upper,
};
pub use estimate::{
    estimate_utility, EpisodeMetrics, Estimator, PairEvidence, UtilityEstimate, DISPLAY_ALPHA,
};
pub use seed::{splitmix64, SeedPlan, Stream, PAIR_BITS, RUN_BITS};

use crate::error::{Error, Result};

/// Standard error of a Bernoulli proportion, `sqrt(p (1 - p) / m)`.
pub fn bernoulli_se(p_hat: f64, m: u64) -> f64 {
    if m == 0 {
        return f64::NAN;
    }
    (p_hat * (1.0 - p_hat) / m as f64).max(0.0).sqrt()
}

/// Sample mean and its standard error `s / sqrt(n)` with the `n - 1` variance.
pub fn mean_se(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::Argument(format!(
            "standard error of a mean needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Per-comparison significance level.
pub fn bonferroni(alpha_grid: f64, comparisons: usize) -> Result<f64> {
    if comparisons == 0 {
        return Err(Error::Argument(
            "bonferroni correction needs at least one comparison".into(),
        ));
    }
    Ok(alpha_grid / comparisons as f64)
}
