//! Ordering schemes ranking p-vectors by distance from the origin.
//!
//! Small component p-values mean evidence against the null, so every scheme
//! ranks outward from the origin; they differ in their contour shapes:
//!
//! * Euclidean   - circular contours, `sqrt(p1^2 + p2^2)`
//! * Maximum     - square contours, `max(p1, p2)`
//! * Summation   - right-isosceles-triangle contours, `p1 + p2`
//! * de Lichtenberg - `p1 p2 (1 + (p1/0.001)^2)(1 + (p2/0.001)^2)`, convex
//!   contours penalizing vectors with only one small component
//!
//! Summation is the recommended default: it is the boundary case between
//! concave-down and concave-up contours, the least conservative ordering
//! that retains FDR control. De Lichtenberg values reach ~1e12 but only
//! their relative order matters, so they are kept in plain f64.

use crate::error::{Error, Result};
use crate::geometry::PVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingScheme {
    Euclidean,
    Maximum,
    #[default]
    Summation,
    #[serde(rename = "delichtenberg")]
    DeLichtenberg,
}

impl OrderingScheme {
    pub const ALL: [OrderingScheme; 4] = [
        OrderingScheme::Euclidean,
        OrderingScheme::Maximum,
        OrderingScheme::Summation,
        OrderingScheme::DeLichtenberg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OrderingScheme::Euclidean => "euclidean",
            OrderingScheme::Maximum => "maximum",
            OrderingScheme::Summation => "summation",
            OrderingScheme::DeLichtenberg => "delichtenberg",
        }
    }

    /// Distance from the origin for an N-dimensional coordinate tuple.
    /// De Lichtenberg is only defined in the plane.
    pub fn distance_coords(&self, coords: &[f64]) -> Result<f64> {
        for &c in coords {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::OutOfDomain {
                    what: "p-value coordinate",
                    value: c,
                    line: None,
                });
            }
        }
        match self {
            OrderingScheme::Euclidean => {
                Ok(coords.iter().map(|c| c * c).sum::<f64>().sqrt())
            }
            OrderingScheme::Maximum => Ok(coords.iter().copied().fold(0.0, f64::max)),
            OrderingScheme::Summation => Ok(coords.iter().sum()),
            OrderingScheme::DeLichtenberg => {
                if coords.len() != 2 {
                    return Err(Error::UnsupportedScheme {
                        scheme: self.name().to_string(),
                        dims: coords.len(),
                    });
                }
                let (p1, p2) = (coords[0], coords[1]);
                let s1 = p1 / 0.001;
                let s2 = p2 / 0.001;
                Ok(p1 * p2 * (1.0 + s1 * s1) * (1.0 + s2 * s2))
            }
        }
    }
}

impl std::str::FromStr for OrderingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(OrderingScheme::Euclidean),
            "maximum" => Ok(OrderingScheme::Maximum),
            "summation" => Ok(OrderingScheme::Summation),
            "delichtenberg" | "de-lichtenberg" => Ok(OrderingScheme::DeLichtenberg),
            other => Err(Error::Config(format!(
                "unknown ordering scheme `{other}` (expected euclidean|maximum|summation|delichtenberg)"
            ))),
        }
    }
}

impl std::fmt::Display for OrderingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of ranking: `order[k]` is the input index with rank k+1 (smallest
/// distance first); `scores[i]` is input i's distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
}

impl Ranking {
    /// 1-based rank per input index.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.order.len()];
        for (pos, &idx) in self.order.iter().enumerate() {
            ranks[idx] = pos + 1;
        }
        ranks
    }
}

/// Distance from the origin under `scheme`.
pub fn distance<const N: usize>(scheme: OrderingScheme, p: &PVector<N>) -> Result<f64> {
    scheme.distance_coords(&p.coords)
}

/// Rank p-vectors by increasing distance. Ties in distance break by
/// lexicographic coordinates, then input index, so output is deterministic.
pub fn rank_pvectors<const N: usize>(
    scheme: OrderingScheme,
    ps: &[PVector<N>],
) -> Result<Ranking> {
    if ps.is_empty() {
        return Err(Error::EmptyInput);
    }
    let coords: Vec<&[f64]> = ps.iter().map(|p| p.coords.as_slice()).collect();
    rank_coords(scheme, &coords)
}

pub(crate) fn rank_coords(scheme: OrderingScheme, coords: &[&[f64]]) -> Result<Ranking> {
    let mut scores = Vec::with_capacity(coords.len());
    for c in coords {
        scores.push(scheme.distance_coords(c)?);
    }
    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .unwrap()
            .then_with(|| {
                coords[a]
                    .iter()
                    .map(|c| c.to_bits())
                    .cmp(coords[b].iter().map(|c| c.to_bits()))
            })
            .then(a.cmp(&b))
    });
    Ok(Ranking { order, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PVector2;

    const TABLE: [[f64; 2]; 5] = [
        [0.85, 0.51],
        [0.91, 0.80],
        [0.23, 0.97],
        [0.62, 0.34],
        [0.07, 0.63],
    ];

    fn table_points() -> Vec<PVector2> {
        TABLE
            .iter()
            .enumerate()
            .map(|(i, &c)| PVector::new(format!("g{}", i + 1), c).unwrap())
            .collect()
    }

    #[test]
    fn published_distances() {
        let ps = table_points();
        let d = |s, i: usize| distance(s, &ps[i]).unwrap();

        assert!((d(OrderingScheme::Euclidean, 0) - 0.99).abs() < 0.005);
        assert!((d(OrderingScheme::Summation, 1) - 1.71).abs() < 1e-12);
        assert!((d(OrderingScheme::Maximum, 0) - 0.85).abs() < 1e-12);
        // published D^(L) values are displayed at 2 significant digits
        let dl = d(OrderingScheme::DeLichtenberg, 0);
        assert!((dl - 8.1e10).abs() / 8.1e10 < 0.02, "got {dl}");
        let dl5 = d(OrderingScheme::DeLichtenberg, 4);
        assert!((dl5 - 8.9e7).abs() / 8.9e7 < 0.05, "got {dl5}");
        // the table prints 0.79 here, but 0.07 + 0.63 = 0.70; rank unaffected
        assert!((d(OrderingScheme::Summation, 4) - 0.70).abs() < 1e-12);
    }

    #[test]
    fn origin_is_distance_zero_under_every_scheme() {
        let p = PVector::new("o", [0.0, 0.0]).unwrap();
        for s in OrderingScheme::ALL {
            assert_eq!(distance(s, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn published_ranks_all_four_schemes() {
        let ps = table_points();
        let expect = [
            (OrderingScheme::Euclidean, [3, 5, 4, 2, 1]),
            (OrderingScheme::Maximum, [3, 4, 5, 1, 2]),
            (OrderingScheme::Summation, [4, 5, 3, 2, 1]),
            (OrderingScheme::DeLichtenberg, [4, 5, 3, 2, 1]),
        ];
        for (scheme, ranks) in expect {
            let r = rank_pvectors(scheme, &ps).unwrap();
            assert_eq!(r.ranks(), ranks, "{scheme}");
        }
    }

    #[test]
    fn diagonal_points_rank_identically_under_concave_schemes() {
        let ps: Vec<PVector2> = [0.9, 0.2, 0.55, 0.7, 0.05]
            .iter()
            .map(|&t| PVector::new(format!("{t}"), [t, t]).unwrap())
            .collect();
        let euclid = rank_pvectors(OrderingScheme::Euclidean, &ps).unwrap();
        let max = rank_pvectors(OrderingScheme::Maximum, &ps).unwrap();
        let sum = rank_pvectors(OrderingScheme::Summation, &ps).unwrap();
        assert_eq!(euclid.order, max.order);
        assert_eq!(euclid.order, sum.order);
    }

    #[test]
    fn order_is_argsort_of_recomputed_scores() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let ps: Vec<PVector2> = (0..10)
            .map(|i| PVector::new(format!("g{i}"), [rng.gen(), rng.gen()]).unwrap())
            .collect();
        for scheme in OrderingScheme::ALL {
            let r = rank_pvectors(scheme, &ps).unwrap();
            // independent re-evaluation
            let mut expect: Vec<usize> = (0..ps.len()).collect();
            expect.sort_by(|&a, &b| {
                scheme
                    .distance_coords(&ps[a].coords)
                    .unwrap()
                    .partial_cmp(&scheme.distance_coords(&ps[b].coords).unwrap())
                    .unwrap()
            });
            assert_eq!(r.order, expect, "{scheme}");
        }
    }

    #[test]
    fn ties_break_lexicographically_then_by_index() {
        // same Summation score, distinct coordinates
        let ps = vec![
            PVector::new("b", [0.6, 0.2]).unwrap(),
            PVector::new("a", [0.2, 0.6]).unwrap(),
            PVector::new("dup", [0.2, 0.6]).unwrap(),
        ];
        let r = rank_pvectors(OrderingScheme::Summation, &ps).unwrap();
        assert_eq!(r.order, vec![1, 2, 0]);
    }

    #[test]
    fn delichtenberg_unsupported_in_3d() {
        let err = OrderingScheme::DeLichtenberg
            .distance_coords(&[0.1, 0.2, 0.3])
            .unwrap_err();
        assert!(matches!(err, Error::UnsupportedScheme { dims: 3, .. }));
    }

    proptest::proptest! {
        #[test]
        fn symmetry(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            for s in OrderingScheme::ALL {
                let d1 = s.distance_coords(&[a, b]).unwrap();
                let d2 = s.distance_coords(&[b, a]).unwrap();
                proptest::prop_assert!((d1 - d2).abs() <= 1e-12 * d1.abs().max(1.0));
            }
        }

        #[test]
        fn scaling_down_shrinks_concave_distances(
            a in 0.01f64..=1.0,
            b in 0.01f64..=1.0,
            c in 0.01f64..0.999,
        ) {
            for s in [OrderingScheme::Euclidean, OrderingScheme::Maximum, OrderingScheme::Summation] {
                let full = s.distance_coords(&[a, b]).unwrap();
                let scaled = s.distance_coords(&[c * a, c * b]).unwrap();
                proptest::prop_assert!(scaled < full);
            }
        }
    }
}
