//! Kernel density estimation for positive-supported samples with
//! per-point standard errors.
//!
//! Densities estimated here (entrance laws, meanders, supremum laws on
//! the regular half-line) vanish at 0 like a power of `x`, so plain
//! reflection at the boundary would be badly biased. Working on the
//! log scale handles the boundary for free: estimate the density of
//! `ln X` with a Gaussian kernel and transform back,
//! `f(x) = g(ln x)/x`. The standard error at each evaluation point is
//! the empirical standard deviation of the per-path kernel
//! contributions (killed paths contribute 0), so survival randomness is
//! included.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KdeCurve {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub bandwidth: f64,
    pub n_samples: usize,
}

/// Silverman's rule on the log-samples: `0.9 min(sd, iqr/1.34) m^{-1/5}`.
fn silverman(log_samples: &mut [f64]) -> f64 {
    let m = log_samples.len();
    let mean = log_samples.iter().sum::<f64>() / m as f64;
    let var = log_samples.iter().map(|u| (u - mean) * (u - mean)).sum::<f64>() / (m as f64 - 1.0);
    log_samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| -> f64 {
        let idx = (p * (m as f64 - 1.0)).round() as usize;
        log_samples[idx.min(m - 1)]
    };
    let iqr = q(0.75) - q(0.25);
    let spread = var.sqrt().min(iqr / 1.34).max(1e-3);
    0.9 * spread * (m as f64).powf(-0.2)
}

/// Weighted log-scale KDE.
///
/// `survivors` are the positive sample positions; conceptually every
/// one of `n_total` paths contributes `weight·K_h(ln x - ln s)/x` if it
/// survived and 0 otherwise, and the estimate is the mean contribution.
/// `bw_mult` rescales the Silverman bandwidth (1.0 by default; the
/// bandwidth-sensitivity probe downstream passes `1/√2`).
pub fn log_kde(
    survivors: &[f32],
    n_total: usize,
    weight: f64,
    xs: &[f64],
    bw_mult: f64,
) -> KdeCurve {
    let m = survivors.len();
    assert!(n_total > 0);
    if m < 2 {
        // Too few survivors to say anything; report zeros with infinite
        // uncertainty rather than fabricating a curve.
        return KdeCurve {
            xs: xs.to_vec(),
            values: vec![0.0; xs.len()],
            stderr: vec![f64::INFINITY; xs.len()],
            bandwidth: f64::NAN,
            n_samples: m,
        };
    }
    let mut logs: Vec<f64> = survivors.iter().map(|&s| (s as f64).max(1e-300).ln()).collect();
    let h = silverman(&mut logs) * bw_mult;
    // `logs` is sorted now; evaluate through a ±8h window per point.
    let norm = weight / (h * (2.0 * std::f64::consts::PI).sqrt());
    let nf = n_total as f64;
    let mut values = Vec::with_capacity(xs.len());
    let mut stderr = Vec::with_capacity(xs.len());
    for &x in xs {
        assert!(x > 0.0, "log-scale KDE needs positive evaluation points");
        let lx = x.ln();
        let lo = logs.partition_point(|&u| u < lx - 8.0 * h);
        let hi = logs.partition_point(|&u| u <= lx + 8.0 * h);
        let mut sum = 0.0f64;
        let mut sum2 = 0.0f64;
        for &u in &logs[lo..hi] {
            let z = (u - lx) / h;
            let k = norm * (-0.5 * z * z).exp() / x;
            sum += k;
            sum2 += k * k;
        }
        let mean = sum / nf;
        let var = (sum2 / nf - mean * mean).max(0.0);
        values.push(mean);
        stderr.push((var / nf).sqrt());
    }
    KdeCurve { xs: xs.to_vec(), values, stderr, bandwidth: h, n_samples: m }
}

/// Pointwise first-order Richardson extrapolation of two mesh-biased
/// curves (bias ∝ mesh parameter, meshes in 2:1 ratio): `2·fine - coarse`.
/// Returns the extrapolated values and the per-point residual
/// `|fine - coarse|`, which serves as the remaining-bias estimate.
pub fn richardson(fine: &KdeCurve, coarse: &KdeCurve) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(fine.xs.len(), coarse.xs.len());
    let vals: Vec<f64> = fine
        .values
        .iter()
        .zip(&coarse.values)
        .map(|(&f, &c)| (2.0 * f - c).max(0.0))
        .collect();
    let resid: Vec<f64> = fine.values.iter().zip(&coarse.values).map(|(&f, &c)| (f - c).abs()).collect();
    (vals, resid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn recovers_rayleigh_density() {
        // Samples from the Rayleigh law x e^{-x²/2} (the Brownian
        // meander endpoint at t = 1 has exactly this law).
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 120_000;
        let samples: Vec<f32> = (0..n)
            .map(|_| {
                let u: f64 = rng.gen::<f64>().max(1e-12);
                (-2.0 * u.ln()).sqrt() as f32
            })
            .collect();
        let xs = [0.3, 0.7, 1.0, 1.5, 2.2];
        let k = log_kde(&samples, n, 1.0, &xs, 1.0);
        for (i, &x) in xs.iter().enumerate() {
            let want = x * (-0.5 * x * x).exp();
            let tol = 3.0 * k.stderr[i] + 0.015 * want;
            assert!(
                (k.values[i] - want).abs() < tol,
                "x={x}: got {} want {want} (se {})",
                k.values[i],
                k.stderr[i]
            );
        }
        // Mass on a wide grid close to 1.
        let wide: Vec<f64> = (1..=120).map(|i| i as f64 * 0.05).collect();
        let kw = log_kde(&samples, n, 1.0, &wide, 1.0);
        let mass = crate::density::trapezoid(&kw.xs, &kw.values);
        assert!((mass - 1.0).abs() < 0.01, "mass {mass}");
    }

    #[test]
    fn weight_and_survival_scaling() {
        // Halving survivors (others "killed") halves the estimate;
        // the weight multiplies it.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 40_000;
        let samples: Vec<f32> = (0..n).map(|_| (1.0 + rng.gen::<f64>()) as f32).collect();
        let xs = [1.2, 1.5];
        let full = log_kde(&samples, n, 1.0, &xs, 1.0);
        let half = log_kde(&samples[..n / 2], n, 1.0, &xs, 1.0);
        let weighted = log_kde(&samples[..n / 2], n, 3.0, &xs, 1.0);
        for i in 0..xs.len() {
            assert!(
                (half.values[i] * 2.0 - full.values[i]).abs()
                    < 6.0 * full.stderr[i] + 0.03 * full.values[i]
            );
            assert!((weighted.values[i] / half.values[i] - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let k = log_kde(&[], 100, 1.0, &[1.0], 1.0);
        assert_eq!(k.values[0], 0.0);
        assert!(k.stderr[0].is_infinite());
    }
}
