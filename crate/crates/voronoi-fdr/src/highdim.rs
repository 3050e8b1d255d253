//! 3D extension: pairwise projection areas averaged per p-vector.
//!
//! True Voronoi volumes get expensive beyond the plane, so a trivariate
//! p-vector is summarized by the mean of its cell areas in the three 2D
//! coordinate projections (1,2), (1,3) and (2,3). Each projection's areas
//! sum to 1, hence so do the averages, and the usual cumulative-area
//! machinery applies unchanged.

use crate::error::{Error, Result};
use crate::geometry::{self, PVector3, TessellationOptions};
use crate::ordering::{self, OrderingScheme};
use crate::pipeline::{self, CombinedRecord};
use crate::runtime;

/// The three projection areas and their per-input mean.
#[derive(Debug, Clone)]
pub struct PairwiseAreas {
    /// Areas in the (p1, p2) projection, input order.
    pub a12: Vec<f64>,
    pub a13: Vec<f64>,
    pub a23: Vec<f64>,
    /// Per-input mean of the three projection areas.
    pub mean: Vec<f64>,
    /// Whether any projection needed duplicate jitter.
    pub jitter_applied: bool,
}

const PROJECTIONS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Tessellate the three coordinate projections and average the areas.
pub fn pairwise_average_areas(ps: &[PVector3]) -> Result<PairwiseAreas> {
    pairwise_average_areas_with(ps, TessellationOptions::default())
}

pub fn pairwise_average_areas_with(
    ps: &[PVector3],
    opts: TessellationOptions,
) -> Result<PairwiseAreas> {
    if ps.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: ps.len(),
        });
    }
    // the three tessellations are independent of one another
    let mut results = runtime::map_indexed(3, |k| {
        let (a, b) = PROJECTIONS[k];
        let coords: Vec<[f64; 2]> = ps.iter().map(|p| [p.coords[a], p.coords[b]]).collect();
        geometry::tessellate_coords(&coords, opts)
            .map(|t| (geometry::cell_areas(&t), t.jitter_applied()))
            .map_err(|e| Error::Projection {
                axes: (a + 1, b + 1),
                source: Box::new(e),
            })
    });
    let (a23, j23) = results.pop().unwrap()?;
    let (a13, j13) = results.pop().unwrap()?;
    let (a12, j12) = results.pop().unwrap()?;
    let mean = (0..ps.len())
        .map(|i| (a12[i] + a13[i] + a23[i]) / 3.0)
        .collect();
    Ok(PairwiseAreas {
        a12,
        a13,
        a23,
        mean,
        jitter_applied: j12 || j13 || j23,
    })
}

/// 3D combination: rank by the scheme's coordinate-wise generalization,
/// accumulate the average areas, probit-transform.
///
/// De Lichtenberg has no published 3D form and is rejected.
pub fn combine3(ps: &[PVector3], scheme: OrderingScheme) -> Result<Vec<CombinedRecord>> {
    combine3_with(ps, scheme, TessellationOptions::default())
}

pub fn combine3_with(
    ps: &[PVector3],
    scheme: OrderingScheme,
    opts: TessellationOptions,
) -> Result<Vec<CombinedRecord>> {
    if scheme == OrderingScheme::DeLichtenberg {
        return Err(Error::UnsupportedScheme {
            scheme: scheme.name().to_string(),
            dims: 3,
        });
    }
    let ranking = ordering::rank_pvectors(scheme, ps)?;
    let areas = pairwise_average_areas_with(ps, opts)?;
    pipeline::assemble_records(ps, &ranking.order, &areas.mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn pv3(id: &str, c: [f64; 3]) -> PVector3 {
        PVector::new(id, c).unwrap()
    }

    fn random_points(n: usize, seed: u64) -> Vec<PVector3> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| pv3(&format!("g{i}"), [rng.gen(), rng.gen(), rng.gen()]))
            .collect()
    }

    /// Brute-force nearest-neighbor MC area oracle for one 2D projection.
    fn mc_projection_areas(
        ps: &[PVector3],
        axes: (usize, usize),
        samples: usize,
        seed: u64,
    ) -> Vec<f64> {
        let sites: Vec<[f64; 2]> = ps
            .iter()
            .map(|p| [p.coords[axes.0], p.coords[axes.1]])
            .collect();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut counts = vec![0u64; sites.len()];
        for _ in 0..samples {
            let q = [rng.gen::<f64>(), rng.gen::<f64>()];
            let best = (0..sites.len())
                .min_by(|&a, &b| {
                    let da = (sites[a][0] - q[0]).powi(2) + (sites[a][1] - q[1]).powi(2);
                    let db = (sites[b][0] - q[0]).powi(2) + (sites[b][1] - q[1]).powi(2);
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            counts[best] += 1;
        }
        counts
            .into_iter()
            .map(|c| c as f64 / samples as f64)
            .collect()
    }

    #[test]
    fn diagonal_points_have_identical_projections() {
        let ps = vec![
            pv3("a", [0.2, 0.2, 0.2]),
            pv3("b", [0.6, 0.6, 0.6]),
            pv3("c", [0.9, 0.9, 0.9]),
        ];
        let areas = pairwise_average_areas(&ps).unwrap();
        for i in 0..3 {
            assert_eq!(areas.a12[i].to_bits(), areas.a13[i].to_bits());
            assert_eq!(areas.a12[i].to_bits(), areas.a23[i].to_bits());
            assert_eq!(areas.mean[i], areas.a12[i]);
        }
    }

    #[test]
    fn two_symmetric_points_split_evenly() {
        let ps = vec![pv3("a", [0.25, 0.25, 0.25]), pv3("b", [0.75, 0.75, 0.75])];
        let areas = pairwise_average_areas(&ps).unwrap();
        assert!((areas.mean[0] - 0.5).abs() < 1e-12);
        assert!((areas.mean[1] - 0.5).abs() < 1e-12);

        let recs = combine3(&ps, OrderingScheme::Euclidean).unwrap();
        assert!((recs[0].t - 0.5).abs() < 1e-12);
        assert!((recs[1].t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn average_areas_match_mc_oracles() {
        let ps = random_points(50, 31);
        let areas = pairwise_average_areas(&ps).unwrap();
        let o12 = mc_projection_areas(&ps, (0, 1), 300_000, 1);
        let o13 = mc_projection_areas(&ps, (0, 2), 300_000, 2);
        let o23 = mc_projection_areas(&ps, (1, 2), 300_000, 3);
        for i in 0..ps.len() {
            let oracle = (o12[i] + o13[i] + o23[i]) / 3.0;
            assert!(
                (areas.mean[i] - oracle).abs() < 1e-3,
                "input {i}: {} vs {oracle}",
                areas.mean[i]
            );
        }
    }

    #[test]
    fn mean_areas_sum_to_one() {
        let ps = random_points(120, 4);
        let areas = pairwise_average_areas(&ps).unwrap();
        let total: f64 = areas.mean.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn euclidean_ranks_match_norm_argsort() {
        let ps = random_points(40, 77);
        let recs = combine3(&ps, OrderingScheme::Euclidean).unwrap();
        let mut expect: Vec<usize> = (0..ps.len()).collect();
        expect.sort_by(|&a, &b| {
            let na: f64 = ps[a].coords.iter().map(|c| c * c).sum();
            let nb: f64 = ps[b].coords.iter().map(|c| c * c).sum();
            na.partial_cmp(&nb).unwrap()
        });
        let got: Vec<&str> = recs.iter().map(|r| r.id.as_str()).collect();
        let want: Vec<String> = expect.iter().map(|&i| format!("g{i}")).collect();
        assert_eq!(got, want);
        assert!((recs.last().unwrap().t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn delichtenberg_is_rejected_in_3d() {
        let ps = random_points(10, 2);
        assert!(matches!(
            combine3(&ps, OrderingScheme::DeLichtenberg),
            Err(Error::UnsupportedScheme { dims: 3, .. })
        ));
    }

    #[test]
    fn projection_errors_name_the_projection() {
        // distinct in 3D but coincident in the (1,2) projection
        let ps = vec![
            pv3("a", [0.3, 0.4, 0.1]),
            pv3("b", [0.3, 0.4, 0.9]),
            pv3("c", [0.7, 0.7, 0.5]),
        ];
        let err = pairwise_average_areas(&ps).unwrap_err();
        match err {
            Error::Projection { axes, source } => {
                assert_eq!(axes, (1, 2));
                assert!(matches!(*source, Error::DuplicatePoints { .. }));
            }
            other => panic!("unexpected error {other:?}"),
        }
        // jitter mode resolves it
        let opts = TessellationOptions {
            jitter_duplicates: true,
            jitter_seed: 5,
        };
        assert!(pairwise_average_areas_with(&ps, opts).is_ok());
    }
}
