//! Empirical-null inference: a penalized J-component Gaussian mixture fitted
//! to the probit values, with local fdr and left-tail FDR evaluation.
//!
//! The probit values are modelled as `f(z) = sum_j pi_j N(mu_j, sigma_j^2)`
//! with one component designated the null `f0`. The penalty `P` acts as P
//! phantom standard-normal observations credited to the null component's
//! responsibility in the M-step (a conjugate Dirichlet/normal prior), so
//! larger `P` pulls a larger share of the data into the null group and
//! anchors the null toward the theoretical N(0,1); as P grows without bound
//! the null pins there exactly, while P = 0 is the plain maximum-likelihood
//! fit. The component seeded at the data median carries the penalty; after
//! convergence the null is designated as the heaviest component (ties going
//! to the mean nearest 0).

use crate::error::{Error, Result};
use crate::numeric::{derive_seed, norm_cdf, norm_pdf};
use crate::pipeline::CombinedRecord;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Scale floor preventing component collapse.
pub const SIGMA_FLOOR: f64 = 1e-3;

const MAX_ITERATIONS: usize = 1000;
const REL_TOL: f64 = 1e-8;
const MAX_RESCUES: usize = 3;

/// A fitted Gaussian mixture with a designated null component.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Index of the designated null component.
    pub null_index: usize,
    pub penalty: f64,
    /// Penalized log-likelihood at convergence.
    pub log_likelihood: f64,
    pub iterations: usize,
}

impl MixtureFit {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn null_weight(&self) -> f64 {
        self.weights[self.null_index]
    }

    pub fn null_mean(&self) -> f64 {
        self.means[self.null_index]
    }

    pub fn null_scale(&self) -> f64 {
        self.scales[self.null_index]
    }

    fn density(&self, z: f64) -> f64 {
        (0..self.components())
            .map(|j| self.weights[j] * component_pdf(z, self.means[j], self.scales[j]))
            .sum()
    }
}

fn component_pdf(z: f64, mu: f64, sigma: f64) -> f64 {
    norm_pdf((z - mu) / sigma) / sigma
}

fn component_cdf(z: f64, mu: f64, sigma: f64) -> f64 {
    norm_cdf((z - mu) / sigma)
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Fit a penalized J-component mixture to the probit values by EM.
///
/// Requires at least 50 points and `J` of 2 or 3. Initialization is fixed
/// (component means at the 50%/10%/90% quantiles, common scale at the data
/// standard deviation, weight 0.9/0.8 on the median component), so identical
/// inputs give identical fits; `seed` only enters if a collapsed component
/// has to be re-seeded.
pub fn fit_mixture(z: &[f64], j: usize, penalty: f64, seed: u64) -> Result<MixtureFit> {
    if z.len() < 50 {
        return Err(Error::TooFewPoints {
            need: 50,
            got: z.len(),
        });
    }
    if !(2..=3).contains(&j) {
        return Err(Error::Config(format!(
            "mixture component count J must be 2 or 3, got {j}"
        )));
    }
    if !(penalty >= 0.0) {
        return Err(Error::Config(format!(
            "penalty P must be non-negative, got {penalty}"
        )));
    }
    for &v in z {
        if !v.is_finite() {
            return Err(Error::OutOfDomain {
                what: "probit value z",
                value: v,
                line: None,
            });
        }
    }

    let n = z.len();
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let data_sd = crate::numeric::sample_sd(z).max(SIGMA_FLOOR);

    // component 0 (the median-seeded, penalized one) tends to become the
    // null; it starts dominant, matching the premise that the majority of
    // values are null. Uniform starting weights let EM split null-only data
    // evenly across components and never recover N(0,1).
    let init_quantiles: &[f64] = if j == 2 { &[0.5, 0.1] } else { &[0.5, 0.1, 0.9] };
    let mut means: Vec<f64> = init_quantiles.iter().map(|&q| quantile(&sorted, q)).collect();
    let mut scales = vec![data_sd; j];
    let mut weights = vec![0.1; j];
    weights[0] = 1.0 - 0.1 * (j - 1) as f64;

    let mut resp = vec![0.0f64; n * j];
    let mut prev_ll = f64::NEG_INFINITY;
    let mut ll = f64::NEG_INFINITY;
    let mut rescues = vec![0usize; j];
    let mut iterations = 0;

    for iter in 0..MAX_ITERATIONS {
        iterations = iter + 1;

        // E-step
        let mut loglik = 0.0;
        for (i, &zi) in z.iter().enumerate() {
            let row = &mut resp[i * j..(i + 1) * j];
            let mut total = 0.0;
            for (k, r) in row.iter_mut().enumerate() {
                *r = weights[k] * component_pdf(zi, means[k], scales[k]);
                total += *r;
            }
            if total > f64::MIN_POSITIVE {
                for r in row.iter_mut() {
                    *r /= total;
                }
                loglik += total.ln();
            } else {
                // point is far from every component; attribute it to the
                // nearest one in standardized distance
                let nearest = (0..j)
                    .min_by(|&a, &b| {
                        let da = ((zi - means[a]) / scales[a]).abs();
                        let db = ((zi - means[b]) / scales[b]).abs();
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                for (k, r) in row.iter_mut().enumerate() {
                    *r = if k == nearest { 1.0 } else { 0.0 };
                }
                loglik += -745.0; // ~ln(f64::MIN_POSITIVE)
            }
        }
        // penalized objective: the P phantom N(0,1) observations contribute
        // their expected log-density under the null component
        ll = loglik
            + penalty
                * (weights[0].max(f64::MIN_POSITIVE).ln()
                    - scales[0].ln()
                    - (1.0 + means[0] * means[0]) / (2.0 * scales[0] * scales[0]));

        // penalized likelihood must not decrease (allowing for the scale floor)
        debug_assert!(
            ll >= prev_ll - 1e-6 * (1.0 + ll.abs()),
            "EM objective decreased: {prev_ll} -> {ll} at iteration {iter}"
        );
        if iter > 0 {
            let rel = (ll - prev_ll).abs() / prev_ll.abs().max(1.0);
            if rel < REL_TOL {
                break;
            }
        }
        prev_ll = ll;

        // M-step; component 0 additionally absorbs the P phantom N(0,1)
        // observations (mean 0, second moment 1)
        let mut collapsed = None;
        for k in 0..j {
            let nk: f64 = (0..n).map(|i| resp[i * j + k]).sum();
            let bonus = if k == 0 { penalty } else { 0.0 };
            weights[k] = (nk + bonus) / (n as f64 + penalty);
            if nk + bonus > f64::MIN_POSITIVE {
                let mu = (0..n).map(|i| resp[i * j + k] * z[i]).sum::<f64>() / (nk + bonus);
                let mut var = (0..n)
                    .map(|i| resp[i * j + k] * (z[i] - mu) * (z[i] - mu))
                    .sum::<f64>();
                var = (var + bonus * (1.0 + mu * mu)) / (nk + bonus);
                means[k] = mu;
                scales[k] = var.sqrt().max(SIGMA_FLOOR);
            }
            if nk + bonus < 1e-6 || (scales[k] <= SIGMA_FLOOR && nk + bonus < 2.0) {
                collapsed = Some(k);
            }
        }

        if let Some(k) = collapsed {
            rescues[k] += 1;
            if rescues[k] > MAX_RESCUES {
                return Err(Error::DegenerateFit { component: k });
            }
            let mut rng =
                ChaCha12Rng::seed_from_u64(derive_seed(seed, k as u64, rescues[k] as u64));
            means[k] = quantile(&sorted, rng.gen_range(0.05..0.95));
            scales[k] = data_sd;
            weights[k] = 1.0 / (2.0 * j as f64);
            let rest: f64 = weights.iter().sum::<f64>() - weights[k];
            for (i, w) in weights.iter_mut().enumerate() {
                if i != k {
                    *w *= (1.0 - 1.0 / (2.0 * j as f64)) / rest;
                }
            }
            prev_ll = f64::NEG_INFINITY;
        }
    }

    // designation: heaviest component; ties go to the mean nearest zero
    let null_index = (0..j)
        .max_by(|&a, &b| {
            weights[a]
                .partial_cmp(&weights[b])
                .unwrap()
                .then_with(|| means[b].abs().partial_cmp(&means[a].abs()).unwrap())
        })
        .unwrap();

    Ok(MixtureFit {
        weights,
        means,
        scales,
        null_index,
        penalty,
        log_likelihood: ll,
        iterations,
    })
}

/// Local false discovery rate: posterior probability that `z` came from the
/// null component. Returns 1 when the total density underflows.
pub fn local_fdr(fit: &MixtureFit, z: f64) -> f64 {
    let total = fit.density(z);
    if total <= f64::MIN_POSITIVE {
        return 1.0;
    }
    let null = fit.null_weight() * component_pdf(z, fit.null_mean(), fit.null_scale());
    (null / total).clamp(0.0, 1.0)
}

/// Left-tail FDR: posterior probability of the null given `Z <= z`.
/// Returns 1 when the total left-tail mass underflows.
pub fn left_tail_fdr(fit: &MixtureFit, z: f64) -> f64 {
    let total: f64 = (0..fit.components())
        .map(|j| fit.weights[j] * component_cdf(z, fit.means[j], fit.scales[j]))
        .sum();
    if total <= f64::MIN_POSITIVE {
        return 1.0;
    }
    let null = fit.null_weight() * component_cdf(z, fit.null_mean(), fit.null_scale());
    (null / total).clamp(0.0, 1.0)
}

/// Fill the `fdr` and `left_fdr` fields of combined records from a fit.
pub fn fill_fdr(records: &mut [CombinedRecord], fit: &MixtureFit) {
    for r in records.iter_mut() {
        r.fdr = Some(local_fdr(fit, r.z));
        r.left_fdr = Some(left_tail_fdr(fit, r.z));
    }
}
