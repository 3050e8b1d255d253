//! Fisher's exact G test for periodicity in evenly spaced time courses.
//!
//! The statistic is the largest periodogram ordinate relative to the sum of
//! all ordinates at the Fourier frequencies; its exact null tail probability
//! is the classical alternating binomial series
//! `P(G > g) = sum_j (-1)^(j-1) C(q,j) (1-jg)^(q-1)` over `1 <= j <= 1/g`,
//! with q the number of ordinates.

use crate::error::{Error, Result};
use crate::numeric::kahan_sum;
use crate::runtime;

/// One gene's expression time course at evenly spaced time points.
/// `spacing_minutes` is carried as metadata only.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeCourse {
    pub id: String,
    pub values: Vec<f64>,
    pub spacing_minutes: Option<f64>,
}

/// Fisher's G statistic with its exact p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GStatistic {
    pub g: f64,
    pub pvalue: f64,
    /// Number of periodogram ordinates q = floor((n-1)/2).
    pub ordinates: usize,
}

/// Minimum series length (q >= 1 requires n >= 3; 4 keeps one ordinate and
/// a non-trivial residual).
pub const MIN_SERIES_LEN: usize = 4;

/// Periodogram ordinates at the Fourier frequencies k = 1..floor((n-1)/2)
/// of the mean-centered series.
pub(crate) fn periodogram(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let q = (n - 1) / 2;
    let mut ordinates = Vec::with_capacity(q);
    for k in 1..=q {
        let omega = std::f64::consts::TAU * k as f64 / n as f64;
        let mut cos_sum = 0.0;
        let mut sin_sum = 0.0;
        for (t, &v) in values.iter().enumerate() {
            let x = v - mean;
            let phase = omega * t as f64;
            cos_sum += x * phase.cos();
            sin_sum += x * phase.sin();
        }
        ordinates.push((cos_sum * cos_sum + sin_sum * sin_sum) / n as f64);
    }
    ordinates
}

/// Exact null tail probability `P(G > g)` for q ordinates.
///
/// Terms are summed in descending magnitude with compensated summation and
/// the result clamped to [0, 1]; large q with tiny g cancels catastrophically
/// otherwise.
pub fn fisher_g_pvalue(g: f64, q: usize) -> f64 {
    assert!(q >= 1, "need at least one ordinate");
    assert!((0.0..=1.0).contains(&g) && g > 0.0, "g must be in (0, 1]");
    let jmax = ((1.0 / g).floor() as usize).min(q);
    let mut terms = Vec::with_capacity(jmax);
    let use_logs = q > 50;
    let mut binom = 1.0f64; // C(q, 0)
    let mut ln_binom = 0.0f64;
    for j in 1..=jmax {
        let ratio = (q - j + 1) as f64 / j as f64;
        binom *= ratio;
        ln_binom += ratio.ln();
        let base = (1.0 - j as f64 * g).max(0.0);
        let magnitude = if use_logs {
            if base == 0.0 {
                0.0
            } else {
                (ln_binom + (q as f64 - 1.0) * base.ln()).exp()
            }
        } else {
            binom * base.powi(q as i32 - 1)
        };
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        terms.push(sign * magnitude);
    }
    terms.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
    kahan_sum(terms).clamp(0.0, 1.0)
}

/// Fisher's exact G test of one time course.
pub fn fisher_g(series: &TimeCourse) -> Result<GStatistic> {
    let n = series.values.len();
    if n < MIN_SERIES_LEN {
        return Err(Error::TooShort {
            id: series.id.clone(),
            len: n,
            min: MIN_SERIES_LEN,
        });
    }
    for &v in &series.values {
        if !v.is_finite() {
            return Err(Error::OutOfDomain {
                what: "time course value",
                value: v,
                line: None,
            });
        }
    }
    let ordinates = periodogram(&series.values);
    let total: f64 = ordinates.iter().sum();
    let max = ordinates.iter().copied().fold(0.0, f64::max);
    if !(total > 0.0) || !max.is_finite() {
        return Err(Error::ConstantSeries {
            id: series.id.clone(),
        });
    }
    let g = max / total;
    Ok(GStatistic {
        g,
        pvalue: fisher_g_pvalue(g, ordinates.len()),
        ordinates: ordinates.len(),
    })
}

/// G test over a batch of genes; parallel when enabled. Fails on the first
/// invalid series, naming the gene.
pub fn fisher_g_batch(series: &[TimeCourse]) -> Result<Vec<GStatistic>> {
    runtime::map_indexed(series.len(), |i| fisher_g(&series[i]))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::traits::ToPrimitive;
    use num::BigRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn course(values: Vec<f64>) -> TimeCourse {
        TimeCourse {
            id: "test".into(),
            values,
            spacing_minutes: None,
        }
    }

    fn white_noise(n: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
        (0..n)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect()
    }

    /// Exact rational evaluation of the alternating series.
    fn pvalue_rational(g: f64, q: usize) -> f64 {
        let g = BigRational::from_float(g).unwrap();
        let one = BigRational::from_integer(1.into());
        let jmax = (q as f64).min((one.clone() / g.clone()).to_f64().unwrap().floor()) as usize;
        let mut sum = BigRational::from_integer(0.into());
        let mut binom = num::BigInt::from(1);
        for j in 1..=jmax {
            binom = binom * num::BigInt::from(q - j + 1) / num::BigInt::from(j);
            let base = one.clone() - BigRational::from_integer(j.into()) * g.clone();
            if base < BigRational::from_integer(0.into()) {
                continue;
            }
            let mut power = BigRational::from_integer(1.into());
            for _ in 0..(q - 1) {
                power *= base.clone();
            }
            let term = BigRational::from_integer(binom.clone()) * power;
            if j % 2 == 1 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        sum.to_f64().unwrap().clamp(0.0, 1.0)
    }

    #[test]
    fn pure_cosine_concentrates_all_mass() {
        let n = 32;
        let values: Vec<f64> = (0..n)
            .map(|t| (std::f64::consts::TAU * 4.0 * t as f64 / n as f64).cos())
            .collect();
        let r = fisher_g(&course(values)).unwrap();
        assert!(r.g > 1.0 - 1e-12);
        assert!(r.pvalue < 1e-100, "pvalue {}", r.pvalue);
        assert_eq!(r.ordinates, 15);
    }

    #[test]
    fn alternating_sum_matches_exact_rational_evaluation() {
        for q in [5, 10, 15, 25] {
            let mut g = 0.05;
            while g < 1.0 {
                let fast = fisher_g_pvalue(g, q);
                let exact = pvalue_rational(g, q);
                assert!(
                    (fast - exact).abs() < 1e-10,
                    "q={q} g={g}: {fast} vs {exact}"
                );
                g += 0.037;
            }
        }
    }

    #[test]
    fn large_q_evaluation_stays_in_unit_interval() {
        for q in [80, 150, 300] {
            let mut g = 1.0 / q as f64 + 1e-6;
            while g < 1.0 {
                let p = fisher_g_pvalue(g, q);
                assert!((0.0..=1.0).contains(&p), "q={q} g={g}: {p}");
                g += 0.01;
            }
        }
    }

    #[test]
    fn pvalue_strictly_decreasing_in_g() {
        for q in [7, 15, 25] {
            let mut prev = f64::INFINITY;
            let mut g = 2.0 / q as f64;
            while g < 0.999 {
                let p = fisher_g_pvalue(g, q);
                assert!(p < prev, "q={q} g={g}");
                prev = p;
                g += 0.013;
            }
        }
    }

    #[test]
    fn white_noise_pvalues_are_uniform() {
        let mut rng = ChaCha12Rng::seed_from_u64(271);
        let mut pvals: Vec<f64> = (0..2000)
            .map(|_| fisher_g(&course(white_noise(31, &mut rng))).unwrap().pvalue)
            .collect();
        pvals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = pvals.len() as f64;
        let ks = pvals
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let hi = (i as f64 + 1.0) / n - p;
                let lo = p - i as f64 / n;
                hi.max(lo)
            })
            .fold(0.0, f64::max);
        let crit = 1.62762 / n.sqrt();
        assert!(ks < crit, "KS {ks} >= {crit}");
    }

    #[test]
    fn exact_pvalue_matches_monte_carlo_null_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(54);
        let obs = fisher_g(&course(white_noise(31, &mut rng))).unwrap();
        let draws = 100_000;
        let mut exceed = 0u64;
        for _ in 0..draws {
            let g = fisher_g(&course(white_noise(31, &mut rng))).unwrap().g;
            if g > obs.g {
                exceed += 1;
            }
        }
        let mc = exceed as f64 / draws as f64;
        let se = (mc * (1.0 - mc) / draws as f64).sqrt();
        assert!(
            (obs.pvalue - mc).abs() < 3.0 * se.max(1e-4),
            "exact {} vs MC {mc} (se {se})",
            obs.pvalue
        );
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(matches!(
            fisher_g(&course(vec![1.0, 2.0, 3.0])),
            Err(Error::TooShort { len: 3, .. })
        ));
        assert!(matches!(
            fisher_g(&course(vec![2.5; 16])),
            Err(Error::ConstantSeries { .. })
        ));
        assert!(fisher_g(&course(vec![1.0, f64::NAN, 0.5, 0.1])).is_err());
    }

    #[test]
    fn batch_matches_individual_calls() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let series: Vec<TimeCourse> = (0..20)
            .map(|i| TimeCourse {
                id: format!("g{i}"),
                values: white_noise(33, &mut rng),
                spacing_minutes: Some(8.0),
            })
            .collect();
        let batch = fisher_g_batch(&series).unwrap();
        for (s, b) in series.iter().zip(&batch) {
            assert_eq!(fisher_g(s).unwrap(), *b);
        }
    }

    proptest::proptest! {
        #[test]
        fn g_and_pvalue_stay_in_range(seed in 0u64..500, n in 8usize..64) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 10.0).collect();
            let r = fisher_g(&course(values)).unwrap();
            proptest::prop_assert!(r.g > 0.0 && r.g <= 1.0);
            proptest::prop_assert!((0.0..=1.0).contains(&r.pvalue));
        }
    }
}
