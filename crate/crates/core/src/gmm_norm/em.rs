//! One-dimensional Gaussian mixture fitted by expectation-maximization.

use serde::{Deserialize, Serialize};

use super::GmmError;
use crate::stats;

/// Stopping and regularization settings for [`fit_gmm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop once `|ll_t - ll_{t-1}| / |ll_{t-1}|` drops below this.
    pub rel_tol: f64,
    /// Lower bound on every component variance, °C².
    pub variance_floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            rel_tol: 1e-6,
            variance_floor: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub components: Vec<Component>,
    /// Total log-likelihood of the data under `components`.
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Log-likelihood evaluated at the start of every iteration; the last
    /// entry equals `log_likelihood`.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

impl GmmModel {
    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.mean).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.variance).collect()
    }

    /// Mixture density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * normal_pdf(x, c.mean, c.variance))
            .sum()
    }
}

const LN_2PI: f64 = 1.837_877_066_409_345_3;

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-0.5 * (LN_2PI + var.ln() + d * d / var)).exp()
}

/// E-step: fills `resp` (row-major n x m) and returns the log-likelihood.
fn expectation(x: &[f64], comps: &[Component], resp: &mut [f64]) -> f64 {
    let m = comps.len();
    let consts: Vec<(f64, f64, f64)> = comps
        .iter()
        .map(|c| {
            (
                c.weight.ln() - 0.5 * (LN_2PI + c.variance.ln()),
                c.mean,
                0.5 / c.variance,
            )
        })
        .collect();
    let mut ll = 0.0;
    for (xi, row) in x.iter().zip(resp.chunks_exact_mut(m)) {
        let mut max = f64::NEG_INFINITY;
        for (r, &(k, mu, h)) in row.iter_mut().zip(&consts) {
            let d = xi - mu;
            *r = k - h * d * d;
            max = max.max(*r);
        }
        let mut sum = 0.0;
        for r in row.iter_mut() {
            *r = (*r - max).exp();
            sum += *r;
        }
        for r in row.iter_mut() {
            *r /= sum;
        }
        ll += max + sum.ln();
    }
    ll
}

fn maximization(x: &[f64], resp: &[f64], m: usize, floor: f64) -> Vec<Component> {
    let n = x.len() as f64;
    let mut nk = vec![0.0; m];
    let mut sx = vec![0.0; m];
    for (xi, row) in x.iter().zip(resp.chunks_exact(m)) {
        for k in 0..m {
            nk[k] += row[k];
            sx[k] += row[k] * xi;
        }
    }
    let means: Vec<f64> = (0..m)
        .map(|k| if nk[k] > 0.0 { sx[k] / nk[k] } else { 0.0 })
        .collect();
    let mut sq = vec![0.0; m];
    for (xi, row) in x.iter().zip(resp.chunks_exact(m)) {
        for k in 0..m {
            let d = xi - means[k];
            sq[k] += row[k] * d * d;
        }
    }
    (0..m)
        .map(|k| Component {
            weight: nk[k] / n,
            mean: means[k],
            variance: if nk[k] > 0.0 {
                (sq[k] / nk[k]).max(floor)
            } else {
                floor
            },
        })
        .collect()
}

/// Fits an `m`-component mixture to `v`.
///
/// Initialization is deterministic: component `i` starts at the
/// `(2i+1)/(2m)` quantile of `v` with variance `var(v)/m` and weight `1/m`.
/// The data are centred on their mean before fitting, which keeps the fit
/// equivariant under a constant temperature offset down to rounding.
pub fn fit_gmm(v: &[f64], m: usize, config: &EmConfig) -> Result<GmmModel, GmmError> {
    if m == 0 {
        return Err(GmmError::NoComponents);
    }
    if v.len() < 10 * m {
        return Err(GmmError::TooFewSamples {
            got: v.len(),
            need: 10 * m,
        });
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(GmmError::NonFinite(*bad));
    }
    let center = stats::mean(v);
    let x: Vec<f64> = v.iter().map(|t| t - center).collect();
    let total_var = stats::variance(&x);
    if total_var <= 0.0 {
        return Err(GmmError::ZeroVariance);
    }

    let sorted = stats::sorted_copy(&x);
    let mut comps: Vec<Component> = (0..m)
        .map(|i| Component {
            weight: 1.0 / m as f64,
            mean: stats::quantile_sorted(&sorted, (2 * i + 1) as f64 / (2 * m) as f64),
            variance: (total_var / m as f64).max(config.variance_floor),
        })
        .collect();
    drop(sorted);

    let mut resp = vec![0.0; x.len() * m];
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let ll = expectation(&x, &comps, &mut resp);
        let converged = trace
            .last()
            .is_some_and(|&prev: &f64| ((ll - prev) / prev.abs()).abs() < config.rel_tol);
        trace.push(ll);
        if converged || iterations >= config.max_iter {
            break;
        }
        comps = maximization(&x, &resp, m, config.variance_floor);
        iterations += 1;
    }

    for c in &mut comps {
        c.mean += center;
    }
    Ok(GmmModel {
        components: comps,
        log_likelihood: *trace.last().unwrap(),
        iterations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn mixture(n: usize, seed: u64, parts: &[(f64, f64, f64)]) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for &(w, mu, sd) in parts {
            let d = Normal::new(mu, sd).unwrap();
            let k = (w * n as f64).round() as usize;
            out.extend((0..k).map(|_| d.sample(&mut rng)));
        }
        out
    }

    #[test]
    fn single_component_is_the_sample_mle() {
        let v = mixture(500, 3, &[(1.0, 10.0, 2.0)]);
        let g = fit_gmm(&v, 1, &EmConfig::default()).unwrap();
        let c = g.components[0];
        assert!((c.mean - stats::mean(&v)).abs() < 1e-12);
        assert!((c.variance - stats::variance(&v)).abs() < 1e-12);
        assert_eq!(c.weight, 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            fit_gmm(&[1.0; 50], 3, &EmConfig::default()),
            Err(GmmError::ZeroVariance)
        ));
        assert!(matches!(
            fit_gmm(&[1.0, 2.0, 3.0], 3, &EmConfig::default()),
            Err(GmmError::TooFewSamples { got: 3, need: 30 })
        ));
        assert!(fit_gmm(&[1.0; 50], 0, &EmConfig::default()).is_err());
    }

    #[test]
    fn likelihood_trace_is_monotone() {
        let v = mixture(5000, 11, &[(0.6, 22.0, 1.0), (0.25, 29.0, 1.5), (0.15, 35.0, 0.7)]);
        let g = fit_gmm(&v, 3, &EmConfig::default()).unwrap();
        for w in g.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
        }
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(g.iterations <= 200);
    }

    #[test]
    fn fit_is_deterministic() {
        let v = mixture(3000, 5, &[(0.5, 0.0, 1.0), (0.5, 5.0, 1.0)]);
        let a = fit_gmm(&v, 2, &EmConfig::default()).unwrap();
        let b = fit_gmm(&v, 2, &EmConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn shift_moves_means_only() {
        let v = mixture(4000, 9, &[(0.5, 22.0, 1.0), (0.3, 30.0, 1.0), (0.2, 36.0, 0.5)]);
        let g = fit_gmm(&v, 3, &EmConfig::default()).unwrap();
        for c in [-20.0, 5.0, 30.0] {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let h = fit_gmm(&shifted, 3, &EmConfig::default()).unwrap();
            for (a, b) in g.components.iter().zip(&h.components) {
                assert!((b.mean - a.mean - c).abs() < 1e-6);
                assert!((b.weight - a.weight).abs() < 1e-9);
                assert!((b.variance - a.variance).abs() < 1e-9);
            }
        }
    }
}
