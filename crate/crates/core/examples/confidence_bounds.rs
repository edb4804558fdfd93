//! Standard errors, exact Clopper-Pearson bounds and the Bonferroni split.

use gridmac::stats::{
    bernoulli_se, bonferroni, clopper_pearson, clopper_pearson_lower, clopper_pearson_upper,
    mean_se,
};

fn main() -> gridmac::Result<()> {
    for (k, n) in [
        (0, 10),
        (5, 10),
        (10, 10),
        (9_850, 10_000),
        (99_700, 100_000),
    ] {
        let (lo, hi) = clopper_pearson(k, n, 0.05)?;
        println!(
            "k={k:>6} n={n:>6}  p_hat {:.4}  se {:.5}  95% interval [{lo:.5}, {hi:.5}]",
            k as f64 / n as f64,
            bernoulli_se(k as f64 / n as f64, n)
        );
    }
    let alpha = bonferroni(0.01, 6)?;
    println!("alpha 0.01 over 6 comparisons: {alpha:.6} each");
    println!(
        "one-sided at that level, k=99700 of 100000: lower {:.5}, upper {:.5}",
        clopper_pearson_lower(99_700, 100_000, alpha)?,
        clopper_pearson_upper(99_700, 100_000, alpha)?
    );
    let (mean, se) = mean_se(&[147.3, 149.2, 148.6])?;
    println!("energy sample mean {mean:.3} mJ, se {se:.5}");
    Ok(())
}
