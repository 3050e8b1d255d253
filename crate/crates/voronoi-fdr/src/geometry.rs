//! Voronoi tessellation of a point set clipped to the unit square.
//!
//! Cell areas generalize the spacings between ordered p-values to the plane:
//! each input point owns the region of the square nearer to it than to any
//! other input, and the areas sum to 1.
//!
//! Each cell is built independently by clipping the unit square with the
//! perpendicular bisector half-plane against nearby sites. A uniform grid
//! orders candidates by distance so a cell typically needs only its handful
//! of natural neighbors; a candidate at distance `d` is skipped once the
//! whole polygon lies within `d/2` of the site. Per-cell construction is
//! what the `parallel` feature fans out over.

use crate::error::{Error, Result};
use crate::numeric::derive_seed;
use crate::runtime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Tolerance for the sum-of-areas invariant.
pub const AREA_SUM_TOL: f64 = 1e-9;

/// Epsilon for boundary classification in the clipping predicates.
const CLIP_EPS: f64 = 1e-12;

/// Magnitude of the deterministic jitter applied to duplicate points.
const JITTER_MAG: f64 = 1e-12;

/// A p-vector: one gene's component p-values, a point in the unit square
/// (N = 2) or cube (N = 3).
#[derive(Debug, Clone, PartialEq)]
pub struct PVector<const N: usize> {
    pub id: String,
    pub coords: [f64; N],
}

pub type PVector2 = PVector<2>;
pub type PVector3 = PVector<3>;

impl<const N: usize> PVector<N> {
    /// Build a p-vector, rejecting coordinates outside [0, 1].
    pub fn new(id: impl Into<String>, coords: [f64; N]) -> Result<Self> {
        for &c in &coords {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::OutOfDomain {
                    what: "p-value coordinate",
                    value: c,
                    line: None,
                });
            }
        }
        Ok(Self {
            id: id.into(),
            coords,
        })
    }
}

/// One Voronoi cell: the input index it belongs to, its polygon (counter-
/// clockwise, clipped to the unit square) and its area.
#[derive(Debug, Clone)]
pub struct Cell {
    pub site: usize,
    pub vertices: Vec<[f64; 2]>,
    pub area: f64,
}

/// Voronoi cells of a point set, one per input, indexed in input order.
#[derive(Debug, Clone)]
pub struct Tessellation {
    cells: Vec<Cell>,
    jitter_applied: bool,
}

impl Tessellation {
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Whether duplicate inputs were perturbed before construction.
    pub fn jitter_applied(&self) -> bool {
        self.jitter_applied
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TessellationOptions {
    /// Perturb exactly coincident points by a seeded 1e-12 offset instead of
    /// failing. The tessellation records that jitter was applied.
    pub jitter_duplicates: bool,
    pub jitter_seed: u64,
}

/// Voronoi tessellation of the unit square, one cell per input point.
pub fn voronoi_tessellate(points: &[PVector2]) -> Result<Tessellation> {
    voronoi_tessellate_with(points, TessellationOptions::default())
}

pub fn voronoi_tessellate_with(
    points: &[PVector2],
    opts: TessellationOptions,
) -> Result<Tessellation> {
    let coords: Vec<[f64; 2]> = points.iter().map(|p| p.coords).collect();
    tessellate_coords(&coords, opts)
}

/// Cell areas indexed by original input order.
pub fn cell_areas(t: &Tessellation) -> Vec<f64> {
    t.cells.iter().map(|c| c.area).collect()
}

pub(crate) fn tessellate_coords(
    coords: &[[f64; 2]],
    opts: TessellationOptions,
) -> Result<Tessellation> {
    if coords.is_empty() {
        return Err(Error::EmptyInput);
    }
    for p in coords {
        for &c in p {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::OutOfDomain {
                    what: "p-value coordinate",
                    value: c,
                    line: None,
                });
            }
        }
    }

    let mut sites = coords.to_vec();
    let mut jitter_applied = false;
    if let Some((first, second)) = find_duplicate(&sites) {
        if !opts.jitter_duplicates {
            return Err(Error::DuplicatePoints { first, second });
        }
        jitter_duplicates(&mut sites, opts.jitter_seed)?;
        jitter_applied = true;
    }

    let grid = Grid::build(&sites);
    let cells = runtime::map_indexed(sites.len(), |i| build_cell(i, &sites, &grid));

    Ok(Tessellation {
        cells,
        jitter_applied,
    })
}

fn key(p: &[f64; 2]) -> (u64, u64) {
    (p[0].to_bits(), p[1].to_bits())
}

fn find_duplicate(points: &[[f64; 2]]) -> Option<(usize, usize)> {
    let mut seen = std::collections::HashMap::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if let Some(&j) = seen.get(&key(p)) {
            return Some((j, i));
        }
        seen.insert(key(p), i);
    }
    None
}

/// Nudge every duplicate (after the first of its group) by a deterministic
/// offset of magnitude [`JITTER_MAG`], reflected back into the square.
fn jitter_duplicates(points: &mut [[f64; 2]], seed: u64) -> Result<()> {
    for attempt in 0..4 {
        let mut seen = std::collections::HashMap::with_capacity(points.len());
        let mut clean = true;
        for i in 0..points.len() {
            if seen.insert(key(&points[i]), i).is_some() {
                clean = false;
                let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, attempt, i as u64));
                let angle = rng.gen::<f64>() * std::f64::consts::TAU;
                let (dx, dy) = (JITTER_MAG * angle.cos(), JITTER_MAG * angle.sin());
                points[i][0] = reflect_into_unit(points[i][0] + dx);
                points[i][1] = reflect_into_unit(points[i][1] + dy);
            }
        }
        if clean {
            return Ok(());
        }
    }
    // Re-check once more; colliding after jitter would need an astronomically
    // unlucky seed.
    match find_duplicate(points) {
        Some((first, second)) => Err(Error::DuplicatePoints { first, second }),
        None => Ok(()),
    }
}

fn reflect_into_unit(c: f64) -> f64 {
    if c < 0.0 {
        -c
    } else if c > 1.0 {
        2.0 - c
    } else {
        c
    }
}

/// Uniform bucket grid over the unit square, CSR layout.
struct Grid {
    side: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl Grid {
    fn build(points: &[[f64; 2]]) -> Self {
        let side = (points.len() as f64).sqrt().ceil().max(1.0) as usize;
        let ncells = side * side;
        let mut counts = vec![0u32; ncells + 1];
        let cell_of = |p: &[f64; 2]| -> usize {
            let gx = ((p[0] * side as f64) as usize).min(side - 1);
            let gy = ((p[1] * side as f64) as usize).min(side - 1);
            gy * side + gx
        };
        for p in points {
            counts[cell_of(p) + 1] += 1;
        }
        for i in 1..=ncells {
            counts[i] += counts[i - 1];
        }
        let mut items = vec![0u32; points.len()];
        let mut cursor = counts.clone();
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            items[cursor[c] as usize] = i as u32;
            cursor[c] += 1;
        }
        Grid {
            side,
            starts: counts,
            items,
        }
    }

    fn bucket(&self, gx: usize, gy: usize) -> &[u32] {
        let c = gy * self.side + gx;
        &self.items[self.starts[c] as usize..self.starts[c + 1] as usize]
    }

    /// Indices in the Chebyshev ring at distance `r` around `(gx, gy)`.
    fn ring(&self, gx: usize, gy: usize, r: usize, out: &mut Vec<u32>) {
        out.clear();
        let side = self.side as isize;
        let (gx, gy, r) = (gx as isize, gy as isize, r as isize);
        if r == 0 {
            out.extend_from_slice(self.bucket(gx as usize, gy as usize));
            return;
        }
        for x in (gx - r).max(0)..=(gx + r).min(side - 1) {
            for &y in &[gy - r, gy + r] {
                if (0..side).contains(&y) {
                    out.extend_from_slice(self.bucket(x as usize, y as usize));
                }
            }
        }
        for y in ((gy - r + 1).max(0))..=((gy + r - 1).min(side - 1)) {
            for &x in &[gx - r, gx + r] {
                if (0..side).contains(&x) {
                    out.extend_from_slice(self.bucket(x as usize, y as usize));
                }
            }
        }
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn build_cell(i: usize, sites: &[[f64; 2]], grid: &Grid) -> Cell {
    let p = sites[i];
    let mut poly: Vec<[f64; 2]> = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let mut scratch: Vec<[f64; 2]> = Vec::with_capacity(16);
    // squared radius of the polygon around the site
    let mut r2 = poly.iter().map(|&v| dist2(v, p)).fold(0.0, f64::max);

    let h = 1.0 / grid.side as f64;
    let gx = ((p[0] * grid.side as f64) as usize).min(grid.side - 1);
    let gy = ((p[1] * grid.side as f64) as usize).min(grid.side - 1);

    let mut ring_buf: Vec<u32> = Vec::with_capacity(16);
    let mut candidates: Vec<(f64, (u64, u64), u32)> = Vec::with_capacity(16);
    for r in 0..=grid.side {
        if r >= 1 {
            // any site in ring r is at least (r-1)*h away
            let lower = (r - 1) as f64 * h;
            if lower * lower >= 4.0 * r2 {
                break;
            }
        }
        grid.ring(gx, gy, r, &mut ring_buf);
        // order candidates by distance; coordinate bits break exact ties so
        // the result is independent of input order
        candidates.clear();
        for &j in &ring_buf {
            if j as usize == i {
                continue;
            }
            let q = sites[j as usize];
            candidates.push((dist2(p, q), key(&q), j));
        }
        candidates.sort_unstable_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
        for &(d2, _, j) in candidates.iter() {
            if d2 >= 4.0 * r2 {
                break;
            }
            let q = sites[j as usize];
            // keep the side of p: (q - p) . x <= (|q|^2 - |p|^2) / 2
            let n = [q[0] - p[0], q[1] - p[1]];
            let c = 0.5 * ((q[0] * q[0] - p[0] * p[0]) + (q[1] * q[1] - p[1] * p[1]));
            clip_halfplane(&mut poly, &mut scratch, n, c);
            r2 = poly.iter().map(|&v| dist2(v, p)).fold(0.0, f64::max);
        }
    }

    let area = polygon_area(&poly);
    Cell {
        site: i,
        vertices: poly,
        area,
    }
}

/// Sutherland-Hodgman clip of a convex polygon by the half-plane
/// `{x : n.x <= c}`. The predicate normalizes by |n|, so [`CLIP_EPS`] is a
/// geometric distance: vertices within it of the boundary count as inside
/// and grazing planes do not spawn sliver vertices. Without normalization,
/// jittered near-duplicates (|n| ~ 1e-12) would classify everything as
/// boundary and never cut.
fn clip_halfplane(poly: &mut Vec<[f64; 2]>, scratch: &mut Vec<[f64; 2]>, n: [f64; 2], c: f64) {
    let norm = (n[0] * n[0] + n[1] * n[1]).sqrt();
    if norm == 0.0 {
        return;
    }
    let inv = 1.0 / norm;
    scratch.clear();
    let len = poly.len();
    for k in 0..len {
        let a = poly[k];
        let b = poly[(k + 1) % len];
        let da = (n[0] * a[0] + n[1] * a[1] - c) * inv;
        let db = (n[0] * b[0] + n[1] * b[1] - c) * inv;
        let a_in = da <= CLIP_EPS;
        let b_in = db <= CLIP_EPS;
        if a_in {
            scratch.push(a);
        }
        if a_in != b_in && da.abs() > CLIP_EPS && db.abs() > CLIP_EPS {
            let t = da / (da - db);
            scratch.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    std::mem::swap(poly, scratch);
}

/// Shoelace formula; positive for counter-clockwise polygons.
fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * twice
}
