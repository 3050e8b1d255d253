//! Combination pipeline: ranked Voronoi areas accumulate into combined
//! values `T` and probit transforms `Z`.
//!
//! `T_(i)`, the cumulative cell area up to rank i, plays the role a sorted
//! p-value plays in one dimension. `Z_(i)` is its probit, the scale on which
//! the empirical-null mixture is fitted.

use crate::error::{Error, Result};
use crate::geometry::{self, PVector, PVector2, TessellationOptions};
use crate::numeric::norm_ppf;
use crate::ordering::{self, OrderingScheme};

/// Clamp applied to T before the probit; keeps `Z` finite at `T = 1`.
pub const PROBIT_CLAMP: f64 = 1e-12;

/// Per-gene output of the combination pipeline, in rank order.
///
/// `fdr`/`left_fdr` stay `None` until an empirical-null fit fills them;
/// `reject` is set by whichever decision rule runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedRecord {
    pub id: String,
    pub coords: Vec<f64>,
    pub rank: usize,
    pub area: f64,
    pub t: f64,
    pub z: f64,
    pub fdr: Option<f64>,
    pub left_fdr: Option<f64>,
    pub reject: bool,
}

/// Prefix sums of cell areas given in rank order.
///
/// Rejects non-positive areas and area vectors that do not sum to 1 within
/// 1e-9; the result is strictly increasing with last element 1 (within the
/// same tolerance).
pub fn cumulative_areas(areas_in_rank_order: &[f64]) -> Result<Vec<f64>> {
    for (i, &a) in areas_in_rank_order.iter().enumerate() {
        if !(a > 0.0) {
            return Err(Error::NonPositiveArea { index: i, value: a });
        }
    }
    // compensated prefix sums: the last one doubles as the sum check
    let mut out = Vec::with_capacity(areas_in_rank_order.len());
    let mut sum = 0.0;
    let mut c = 0.0;
    for &a in areas_in_rank_order {
        let y = a - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
        out.push(sum);
    }
    match out.last() {
        None => Err(Error::EmptyInput),
        Some(&last) if (last - 1.0).abs() > geometry::AREA_SUM_TOL => {
            Err(Error::AreaSumMismatch { sum: last })
        }
        _ => Ok(out),
    }
}

/// Probit transform `Z_i = ppf(clamp(T_i))`, clamped into
/// `[PROBIT_CLAMP, 1 - PROBIT_CLAMP]` so every Z is finite.
pub fn probit_transform(t: &[f64]) -> Result<Vec<f64>> {
    t.iter()
        .map(|&ti| {
            if ti <= 0.0 || ti > 1.0 + geometry::AREA_SUM_TOL {
                return Err(Error::OutOfDomain {
                    what: "cumulative area T",
                    value: ti,
                    line: None,
                });
            }
            Ok(norm_ppf(ti.clamp(PROBIT_CLAMP, 1.0 - PROBIT_CLAMP)))
        })
        .collect()
}

/// Full combination: rank, tessellate, accumulate, probit.
///
/// Returns one record per input in rank order, ids preserved.
pub fn combine(ps: &[PVector2], scheme: OrderingScheme) -> Result<Vec<CombinedRecord>> {
    combine_with(ps, scheme, TessellationOptions::default())
}

pub fn combine_with(
    ps: &[PVector2],
    scheme: OrderingScheme,
    opts: TessellationOptions,
) -> Result<Vec<CombinedRecord>> {
    if ps.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: ps.len(),
        });
    }
    let ranking = ordering::rank_pvectors(scheme, ps)?;
    let tess = geometry::voronoi_tessellate_with(ps, opts)?;
    let areas = geometry::cell_areas(&tess);
    assemble_records(ps, &ranking.order, &areas)
}

/// Shared by 2D and 3D combination: areas indexed by input order, `order`
/// maps rank position to input index.
pub(crate) fn assemble_records<const N: usize>(
    ps: &[PVector<N>],
    order: &[usize],
    areas_by_input: &[f64],
) -> Result<Vec<CombinedRecord>> {
    let ranked_areas: Vec<f64> = order.iter().map(|&i| areas_by_input[i]).collect();
    let t = cumulative_areas(&ranked_areas)?;
    let z = probit_transform(&t)?;
    Ok(order
        .iter()
        .enumerate()
        .map(|(pos, &i)| CombinedRecord {
            id: ps[i].id.clone(),
            coords: ps[i].coords.to_vec(),
            rank: pos + 1,
            area: ranked_areas[pos],
            t: t[pos],
            z: z[pos],
            fdr: None,
            left_fdr: None,
            reject: false,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PVector;
    use crate::numeric::norm_cdf;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn trivial_prefix_sums() {
        assert_eq!(cumulative_areas(&[1.0]).unwrap(), vec![1.0]);
        assert_eq!(cumulative_areas(&[0.5, 0.5]).unwrap(), vec![0.5, 1.0]);
    }

    #[test]
    fn published_vector_areas_accumulate_to_one() {
        let ps: Vec<PVector2> = [
            [0.85, 0.51],
            [0.91, 0.80],
            [0.23, 0.97],
            [0.62, 0.34],
            [0.07, 0.63],
        ]
        .iter()
        .enumerate()
        .map(|(i, &c)| PVector::new(format!("g{i}"), c).unwrap())
        .collect();
        let recs = combine(&ps, OrderingScheme::Euclidean).unwrap();
        // direct summation oracle over the same ranked areas
        let mut running = 0.0;
        for r in &recs {
            running += r.area;
            assert!((r.t - running).abs() < 1e-12);
        }
        assert!((recs.last().unwrap().t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn prefix_sum_error_paths() {
        assert!(matches!(
            cumulative_areas(&[0.5, 0.0, 0.5]),
            Err(Error::NonPositiveArea { index: 1, .. })
        ));
        assert!(matches!(
            cumulative_areas(&[0.3, 0.3]),
            Err(Error::AreaSumMismatch { .. })
        ));
    }

    #[test]
    fn probit_known_values() {
        let z = probit_transform(&[0.5, 0.975, 1.0]).unwrap();
        assert!(z[0].abs() < 1e-12);
        assert!((z[1] - 1.959964).abs() < 1e-6);
        // T = 1 clamps to 1 - 1e-12 and stays finite
        assert!(z[2].is_finite());
        assert!((z[2] - norm_ppf(1.0 - 1e-12)).abs() < 1e-12);
    }

    #[test]
    fn probit_rejects_out_of_domain() {
        assert!(matches!(
            probit_transform(&[0.0]),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(matches!(
            probit_transform(&[1.1]),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn mirror_points_combine_to_halves() {
        let ps = vec![
            PVector::new("a", [0.25, 0.5]).unwrap(),
            PVector::new("b", [0.75, 0.5]).unwrap(),
        ];
        let recs = combine(&ps, OrderingScheme::Summation).unwrap();
        assert!((recs[0].t - 0.5).abs() < 1e-12);
        assert!((recs[1].t - 1.0).abs() < 1e-12);
        assert_eq!(recs[0].id, "a");
    }

    #[test]
    fn published_euclidean_ranks_in_records() {
        let ps: Vec<PVector2> = [
            [0.85, 0.51],
            [0.91, 0.80],
            [0.23, 0.97],
            [0.62, 0.34],
            [0.07, 0.63],
        ]
        .iter()
        .enumerate()
        .map(|(i, &c)| PVector::new(format!("g{}", i + 1), c).unwrap())
        .collect();
        let recs = combine(&ps, OrderingScheme::Euclidean).unwrap();
        let ids: Vec<&str> = recs.iter().map(|r| r.id.as_str()).collect();
        // ranks from the published example: g1=3, g2=5, g3=4, g4=2, g5=1
        assert_eq!(ids, ["g5", "g4", "g1", "g3", "g2"]);
        assert_eq!(recs[0].rank, 1);
        assert_eq!(recs[4].rank, 5);
    }

    #[test]
    fn single_point_is_too_few() {
        let ps = vec![PVector::new("only", [0.5, 0.5]).unwrap()];
        assert!(matches!(
            combine(&ps, OrderingScheme::Summation),
            Err(Error::TooFewPoints { need: 2, got: 1 })
        ));
    }

    #[test]
    fn ids_are_preserved_as_a_set() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let ps: Vec<PVector2> = (0..50)
            .map(|i| PVector::new(format!("id{i}"), [rng.gen(), rng.gen()]).unwrap())
            .collect();
        let recs = combine(&ps, OrderingScheme::Maximum).unwrap();
        let mut got: Vec<&str> = recs.iter().map(|r| r.id.as_str()).collect();
        got.sort_unstable();
        let mut want: Vec<String> = (0..50).map(|i| format!("id{i}")).collect();
        want.sort_unstable();
        assert_eq!(got, want);
        // T strictly increasing, Z non-decreasing
        for w in recs.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].z >= w[0].z);
        }
    }

    #[test]
    fn null_z_values_look_standard_normal() {
        // KS check below the 1% critical value in at least 19 of 20 seeds
        let crit = 1.62762 / (1000f64).sqrt();
        let mut passes = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(1000 + seed);
            let ps: Vec<PVector2> = (0..1000)
                .map(|i| PVector::new(format!("g{i}"), [rng.gen(), rng.gen()]).unwrap())
                .collect();
            let recs = combine(&ps, OrderingScheme::Summation).unwrap();
            let mut u: Vec<f64> = recs.iter().map(|r| norm_cdf(r.z)).collect();
            u.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = u.len() as f64;
            let ks = u
                .iter()
                .enumerate()
                .map(|(i, &ui)| {
                    let hi = (i as f64 + 1.0) / n - ui;
                    let lo = ui - i as f64 / n;
                    hi.max(lo)
                })
                .fold(0.0, f64::max);
            if ks < crit {
                passes += 1;
            }
        }
        assert!(passes >= 19, "only {passes}/20 seeds passed the KS check");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn conservation_and_monotonicity(seed in 0u64..500, n in 2usize..60) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let ps: Vec<PVector2> = (0..n)
                .map(|i| PVector::new(format!("g{i}"), [rng.gen(), rng.gen()]).unwrap())
                .collect();
            let recs = combine(&ps, OrderingScheme::Summation).unwrap();
            proptest::prop_assert!((recs.last().unwrap().t - 1.0).abs() < 1e-9);
            for w in recs.windows(2) {
                proptest::prop_assert!(w[1].t > w[0].t);
                proptest::prop_assert!(w[1].z >= w[0].z);
            }
        }
    }
}
