//! Seeded Monte Carlo harness: generate correlated bivariate (or independent
//! trivariate) test statistics, run every combination procedure, and score
//! realized FDR and 1-NDR.
//!
//! Replicates are embarrassingly parallel. Replicate r of correlation index
//! c draws from a ChaCha stream seeded by `derive_seed(seed, c, r)`, and
//! aggregation runs in replicate order, so results are bitwise-identical
//! for any worker count.

use crate::empnull;
use crate::error::{Error, Result};
use crate::geometry::{self, PVector, PVector2, PVector3};
use crate::highdim;
use crate::mtp::{self, DecisionSet, Rule};
use crate::numeric::{derive_seed, erfc, mean, sample_sd};
use crate::ordering::{self, OrderingScheme};
use crate::pipeline;
use crate::runtime;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Decision procedure applied to the combined values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Benjamini-Hochberg on the cumulative areas.
    Bh,
    /// Spacings generalization of BH on the cumulative areas.
    SpacingsBh,
    /// Penalized-mixture empirical null; reject on left-tail FDR.
    EmpiricalNull,
    /// Existing procedure: BH on the maximum component p-value.
    MaxBh,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Bh => "bh",
            Method::SpacingsBh => "spacings-bh",
            Method::EmpiricalNull => "empirical-null",
            Method::MaxBh => "max-bh",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bh" => Ok(Method::Bh),
            "spacings-bh" => Ok(Method::SpacingsBh),
            "empirical-null" => Ok(Method::EmpiricalNull),
            "max-bh" | "max" => Ok(Method::MaxBh),
            other => Err(Error::Config(format!(
                "unknown method `{other}` (expected bh|spacings-bh|empirical-null|max-bh)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How a two-sided p-value is formed from a test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PvalueConvention {
    /// `p = 2(1 - Phi(|t|))`, uniform on (0,1) under the null.
    #[default]
    Twosided,
    /// `p = P(Z > |t|)`, uniform on (0, 0.5) under the null; reproduces the
    /// display convention some analyses use.
    PaperLiteral,
}

/// Simulation scenario. Every field has a default, so a TOML config only
/// needs the fields it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Tests per replicate.
    pub m: usize,
    /// Fraction of p-vectors with all components alternative.
    pub frac_alt: f64,
    /// Alternative mean in standard-deviation units.
    pub mu_a: f64,
    /// Component correlations to sweep.
    pub rho: Vec<f64>,
    pub reps: usize,
    pub schemes: Vec<OrderingScheme>,
    pub method: Method,
    pub alpha: f64,
    pub fdr_cutoff: f64,
    /// Mixture component count J for the empirical null.
    pub null_j: usize,
    /// Penalty P for the empirical null.
    pub null_p: f64,
    pub seed: u64,
    pub dims: usize,
    /// Fraction of vectors with means (0, mu_a) or (mu_a, 0), alternating.
    /// These are null under the disjunction hypothesis.
    pub mixed_null_frac: f64,
    pub pvalue_convention: PvalueConvention,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            m: 2000,
            frac_alt: 0.1,
            mu_a: 3.0,
            rho: vec![0.0],
            reps: 100,
            schemes: vec![OrderingScheme::Summation],
            method: Method::Bh,
            alpha: 0.05,
            fdr_cutoff: 0.05,
            null_j: 2,
            null_p: 800.0,
            seed: 0,
            dims: 2,
            mixed_null_frac: 0.0,
            pvalue_convention: PvalueConvention::Twosided,
        }
    }
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StudyConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad study config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.m < 2 {
            return fail(format!("m must be at least 2, got {}", self.m));
        }
        if self.reps < 1 {
            return fail("reps must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.frac_alt) {
            return fail(format!("frac_alt must be in [0,1], got {}", self.frac_alt));
        }
        if !(0.0..=1.0).contains(&self.mixed_null_frac)
            || self.frac_alt + self.mixed_null_frac > 1.0
        {
            return fail(format!(
                "mixed_null_frac must be in [0,1] with frac_alt + mixed_null_frac <= 1, got {}",
                self.mixed_null_frac
            ));
        }
        if self.rho.is_empty() {
            return fail("rho must list at least one correlation".into());
        }
        for &r in &self.rho {
            if !(r.abs() < 1.0) {
                return fail(format!("correlation must satisfy |rho| < 1, got {r}"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must be in (0,1), got {}", self.alpha));
        }
        if !(self.fdr_cutoff > 0.0 && self.fdr_cutoff < 1.0) {
            return fail(format!("fdr_cutoff must be in (0,1), got {}", self.fdr_cutoff));
        }
        if !(2..=3).contains(&self.null_j) {
            return fail(format!("null_j must be 2 or 3, got {}", self.null_j));
        }
        if !(self.null_p >= 0.0) {
            return fail(format!("null_p must be non-negative, got {}", self.null_p));
        }
        if !(2..=3).contains(&self.dims) {
            return fail(format!("dims must be 2 or 3, got {}", self.dims));
        }
        if self.method != Method::MaxBh && self.schemes.is_empty() {
            return fail("at least one ordering scheme is required".into());
        }
        if self.dims == 3 {
            if self.rho.iter().any(|&r| r != 0.0) {
                return fail("3D simulation supports independent components only (rho = 0)".into());
            }
            if self.mixed_null_frac > 0.0 {
                return fail("mixed-mean vectors are defined for 2D simulations only".into());
            }
            if self.schemes.contains(&OrderingScheme::DeLichtenberg) {
                return Err(Error::UnsupportedScheme {
                    scheme: OrderingScheme::DeLichtenberg.name().into(),
                    dims: 3,
                });
            }
        }
        Ok(())
    }

    fn n_alt(&self) -> usize {
        (self.m as f64 * self.frac_alt).round() as usize
    }

    fn n_mixed(&self) -> usize {
        (self.m as f64 * self.mixed_null_frac).round() as usize
    }
}

/// Test statistics for one replicate, row-major `m x dims`, plus the truth
/// flag marking vectors whose components are all alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedStats {
    pub values: Vec<f64>,
    pub dims: usize,
    pub truth: Vec<bool>,
}

impl GeneratedStats {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }
}

/// Generate test statistics for replicate `rep_index` at `cfg.rho[rho_index]`.
///
/// Bivariate pairs use `t1 = mu1 + e1`, `t2 = mu2 + rho e1 + sqrt(1-rho^2) e2`
/// for iid standard normal draws, giving unit variances and correlation
/// exactly rho. The first `round(m * frac_alt)` vectors take mean mu_a in
/// every component (truth = true); the next `round(m * mixed_null_frac)`
/// alternate means (0, mu_a) and (mu_a, 0); the rest are null.
pub fn gen_statistics(cfg: &StudyConfig, rho_index: usize, rep_index: u64) -> GeneratedStats {
    let rho = cfg.rho[rho_index];
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, rho_index as u64, rep_index));
    let normal = StandardNormal;
    let n_alt = cfg.n_alt();
    let n_mixed = cfg.n_mixed();
    let mut values = Vec::with_capacity(cfg.m * cfg.dims);
    let mut truth = Vec::with_capacity(cfg.m);

    for i in 0..cfg.m {
        let mut mu = [0.0f64; 3];
        if i < n_alt {
            mu = [cfg.mu_a; 3];
            truth.push(true);
        } else {
            if i < n_alt + n_mixed {
                if (i - n_alt) % 2 == 0 {
                    mu[1] = cfg.mu_a;
                } else {
                    mu[0] = cfg.mu_a;
                }
            }
            truth.push(false);
        }
        if cfg.dims == 2 {
            let e1: f64 = normal.sample(&mut rng);
            let e2: f64 = normal.sample(&mut rng);
            values.push(mu[0] + e1);
            values.push(mu[1] + rho * e1 + (1.0 - rho * rho).sqrt() * e2);
        } else {
            for c in mu.iter().take(3) {
                let e: f64 = normal.sample(&mut rng);
                values.push(c + e);
            }
        }
    }
    GeneratedStats {
        values,
        dims: cfg.dims,
        truth,
    }
}

/// P-vectors of either dimension.
#[derive(Debug, Clone)]
pub enum PVectors {
    Two(Vec<PVector2>),
    Three(Vec<PVector3>),
}

fn statistic_to_pvalue(t: f64, convention: PvalueConvention) -> f64 {
    // 2(1 - Phi(|t|)) = erfc(|t| / sqrt(2))
    let two_sided = erfc(t.abs() / std::f64::consts::SQRT_2);
    let p = match convention {
        PvalueConvention::Twosided => two_sided,
        PvalueConvention::PaperLiteral => 0.5 * two_sided,
    };
    p.clamp(pipeline::PROBIT_CLAMP, 1.0)
}

/// Component-wise p-values from test statistics.
pub fn to_pvectors(stats: &GeneratedStats, convention: PvalueConvention) -> PVectors {
    let m = stats.truth.len();
    match stats.dims {
        2 => PVectors::Two(
            (0..m)
                .map(|i| {
                    let row = stats.row(i);
                    PVector {
                        id: format!("g{}", i + 1),
                        coords: [
                            statistic_to_pvalue(row[0], convention),
                            statistic_to_pvalue(row[1], convention),
                        ],
                    }
                })
                .collect(),
        ),
        _ => PVectors::Three(
            (0..m)
                .map(|i| {
                    let row = stats.row(i);
                    PVector {
                        id: format!("g{}", i + 1),
                        coords: [
                            statistic_to_pvalue(row[0], convention),
                            statistic_to_pvalue(row[1], convention),
                            statistic_to_pvalue(row[2], convention),
                        ],
                    }
                })
                .collect(),
        ),
    }
}

/// Confusion counts for one replicate (the standard testing 2x2 table).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub m: usize,
    /// Number of true nulls m0.
    pub nulls: usize,
    /// U: true nulls not rejected.
    pub true_null_kept: usize,
    /// V: true nulls rejected (false discoveries).
    pub false_rejections: usize,
    /// T: true alternatives not rejected.
    pub missed_alternatives: usize,
    /// S: true alternatives rejected.
    pub true_rejections: usize,
}

impl OutcomeCounts {
    /// R: total rejections.
    pub fn rejections(&self) -> usize {
        self.false_rejections + self.true_rejections
    }

    /// V / max(R, 1): this replicate's contribution to realized FDR.
    pub fn fdr_contribution(&self) -> f64 {
        self.false_rejections as f64 / (self.rejections().max(1)) as f64
    }

    /// S / (S + T): fraction of true alternatives detected (1-NDR); 0 when
    /// there are no alternatives.
    pub fn detection_rate(&self) -> f64 {
        let alts = self.true_rejections + self.missed_alternatives;
        if alts == 0 {
            0.0
        } else {
            self.true_rejections as f64 / alts as f64
        }
    }
}

/// Tally rejection decisions against the truth flags.
pub fn evaluate(decisions: &DecisionSet, truth: &[bool]) -> Result<OutcomeCounts> {
    let m = truth.len();
    let mut rejected = vec![false; m];
    for &i in &decisions.rejected {
        if i >= m {
            return Err(Error::IndexMismatch {
                left: i + 1,
                right: m,
            });
        }
        rejected[i] = true;
    }
    let mut counts = OutcomeCounts {
        m,
        nulls: truth.iter().filter(|&&t| !t).count(),
        true_null_kept: 0,
        false_rejections: 0,
        missed_alternatives: 0,
        true_rejections: 0,
    };
    for (i, &is_alt) in truth.iter().enumerate() {
        match (is_alt, rejected[i]) {
            (false, false) => counts.true_null_kept += 1,
            (false, true) => counts.false_rejections += 1,
            (true, false) => counts.missed_alternatives += 1,
            (true, true) => counts.true_rejections += 1,
        }
    }
    Ok(counts)
}

/// One row of aggregated study output.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub scheme: String,
    pub method: Method,
    pub rho: f64,
    pub mu_a: f64,
    pub fdr: f64,
    pub fdr_se: f64,
    pub power: f64,
    pub power_se: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
}

/// Rejection decision for one replicate's cumulative areas.
fn decide(cfg: &StudyConfig, t: &[f64], rho_index: usize, rep: u64) -> Result<DecisionSet> {
    match cfg.method {
        Method::Bh | Method::MaxBh => {
            let capped: Vec<f64> = t.iter().map(|&v| v.min(1.0)).collect();
            mtp::bh_reject(&capped, cfg.alpha)
        }
        Method::SpacingsBh => {
            let capped: Vec<f64> = t.iter().map(|&v| v.min(1.0)).collect();
            mtp::spacings_bh(&capped, cfg.alpha)
        }
        Method::EmpiricalNull => {
            let z = pipeline::probit_transform(t)?;
            let fit = empnull::fit_mixture(
                &z,
                cfg.null_j,
                cfg.null_p,
                derive_seed(cfg.seed, 0xE000 + rho_index as u64, rep),
            )?;
            let rejected: Vec<usize> = z
                .iter()
                .enumerate()
                .filter(|&(_, &zi)| empnull::left_tail_fdr(&fit, zi) < cfg.fdr_cutoff)
                .map(|(i, _)| i)
                .collect();
            Ok(DecisionSet {
                k: rejected.len(),
                rejected,
                alpha: cfg.fdr_cutoff,
                rule: Rule::LeftFdr,
            })
        }
    }
}

/// (fdr contribution, detection rate) per scheme for one replicate.
fn replicate_metrics(cfg: &StudyConfig, rho_index: usize, rep: u64) -> Result<Vec<(f64, f64)>> {
    let stats = gen_statistics(cfg, rho_index, rep);
    let pvectors = to_pvectors(&stats, cfg.pvalue_convention);

    if cfg.method == Method::MaxBh {
        let maxp: Vec<f64> = match &pvectors {
            PVectors::Two(ps) => ps
                .iter()
                .map(|p| p.coords.iter().copied().fold(0.0, f64::max))
                .collect(),
            PVectors::Three(ps) => ps
                .iter()
                .map(|p| p.coords.iter().copied().fold(0.0, f64::max))
                .collect(),
        };
        let d = mtp::bh_reject(&maxp, cfg.alpha)?;
        let counts = evaluate(&d, &stats.truth)?;
        return Ok(vec![(counts.fdr_contribution(), counts.detection_rate())]);
    }

    // areas depend only on the point set, so tessellate once per replicate
    let (areas, orders): (Vec<f64>, Vec<Vec<usize>>) = match &pvectors {
        PVectors::Two(ps) => {
            let tess = geometry::voronoi_tessellate(ps)?;
            let areas = geometry::cell_areas(&tess);
            let orders = cfg
                .schemes
                .iter()
                .map(|&s| ordering::rank_pvectors(s, ps).map(|r| r.order))
                .collect::<Result<Vec<_>>>()?;
            (areas, orders)
        }
        PVectors::Three(ps) => {
            let areas = highdim::pairwise_average_areas(ps)?.mean;
            let orders = cfg
                .schemes
                .iter()
                .map(|&s| ordering::rank_pvectors(s, ps).map(|r| r.order))
                .collect::<Result<Vec<_>>>()?;
            (areas, orders)
        }
    };

    orders
        .iter()
        .map(|order| {
            let ranked: Vec<f64> = order.iter().map(|&i| areas[i]).collect();
            let t = pipeline::cumulative_areas(&ranked)?;
            let d = decide(cfg, &t, rho_index, rep)?;
            let remapped: Vec<usize> = d.rejected.iter().map(|&pos| order[pos]).collect();
            let counts = evaluate(
                &DecisionSet {
                    rejected: remapped,
                    ..d
                },
                &stats.truth,
            )?;
            Ok((counts.fdr_contribution(), counts.detection_rate()))
        })
        .collect()
}

/// Run the full study: every rho, `reps` replicates each, aggregated into
/// mean realized FDR and power with Monte Carlo standard errors.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let scheme_names: Vec<String> = if cfg.method == Method::MaxBh {
        vec!["max".into()]
    } else {
        cfg.schemes.iter().map(|s| s.name().to_string()).collect()
    };

    let mut rows = Vec::new();
    for rho_index in 0..cfg.rho.len() {
        let per_rep: Vec<Result<Vec<(f64, f64)>>> = runtime::map_indexed(cfg.reps, |r| {
            replicate_metrics(cfg, rho_index, r as u64)
        });
        let per_rep: Vec<Vec<(f64, f64)>> = per_rep.into_iter().collect::<Result<_>>()?;

        for (si, name) in scheme_names.iter().enumerate() {
            let fdrs: Vec<f64> = per_rep.iter().map(|v| v[si].0).collect();
            let powers: Vec<f64> = per_rep.iter().map(|v| v[si].1).collect();
            let sqrt_reps = (cfg.reps as f64).sqrt();
            rows.push(StudyRow {
                scheme: name.clone(),
                method: cfg.method,
                rho: cfg.rho[rho_index],
                mu_a: cfg.mu_a,
                fdr: mean(&fdrs),
                fdr_se: sample_sd(&fdrs) / sqrt_reps,
                power: mean(&powers),
                power_se: sample_sd(&powers) / sqrt_reps,
                reps: cfg.reps,
            });
        }
    }
    Ok(StudyResult { rows })
}
