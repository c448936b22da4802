//! Hierarchical dyadic box coverings of a compact domain `Q ⊂ R^k`.
//!
//! Boxes live in the partition obtained by bisecting coordinates cyclically:
//! the step from depth `d` to `d + 1` bisects axis `d mod k`. A box at depth
//! `s` is identified by its bisection path, packed MSB-first into a `u64`
//! key, so a collection is simply a sorted set of keys plus the shared depth.
//! Cells are half-open `[lo, hi)` on every axis except the global upper
//! face, which is closed.

mod algorithms;
mod cds;

pub use algorithms::{
    continuation_classic, continuation_sweep, select, subdivision, ContinuationResult,
    LevelCount, SelectStats, SubdivisionResult,
};
pub use cds::{CdsEvaluator, LiftedEnsemble, LiftedPair};

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::state::ObservedPoint;

/// Maximum representable depth: one path bit per subdivision step.
pub const MAX_DEPTH: u32 = 63;

/// The outer box `Q` as a product of intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub center: Vec<f64>,
    pub radius: Vec<f64>,
}

impl BoxDomain {
    pub fn new(center: Vec<f64>, radius: Vec<f64>) -> Result<Self> {
        if center.len() != radius.len() {
            return Err(Error::LengthMismatch { expected: center.len(), got: radius.len() });
        }
        if center.is_empty() {
            return Err(Error::InvalidConfig("domain must have at least one axis".into()));
        }
        if !radius.iter().all(|r| *r > 0.0 && r.is_finite())
            || !center.iter().all(|c| c.is_finite())
        {
            return Err(Error::InvalidConfig("domain radii must be positive and finite".into()));
        }
        Ok(Self { center, radius })
    }

    /// Symmetric product of intervals `[lo_i, hi_i]`.
    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let center = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let radius = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
        Self::new(center, radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn lo(&self) -> Vec<f64> {
        self.center.iter().zip(&self.radius).map(|(c, r)| c - r).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        self.center.iter().zip(&self.radius).map(|(c, r)| c + r).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.center.iter().zip(&self.radius))
                .all(|(xi, (c, r))| *xi >= c - r && *xi <= c + r)
    }

    /// Locate the cell of the depth-`depth` partition containing `x`.
    pub fn locate(&self, depth: u32, x: &[f64]) -> Option<u64> {
        if !self.contains(x) {
            return None;
        }
        let k = self.dim();
        let mut lo = self.lo();
        let mut hi = self.hi();
        let mut key = 0u64;
        for d in 0..depth {
            let a = d as usize % k;
            let mid = 0.5 * (lo[a] + hi[a]);
            key <<= 1;
            if x[a] < mid {
                hi[a] = mid;
            } else {
                lo[a] = mid;
                key |= 1;
            }
        }
        Some(key)
    }

    /// Lower/upper corners of the box with the given path key.
    pub fn bounds_of(&self, depth: u32, key: u64) -> (Vec<f64>, Vec<f64>) {
        let k = self.dim();
        let mut lo = self.lo();
        let mut hi = self.hi();
        for d in 0..depth {
            let a = d as usize % k;
            let mid = 0.5 * (lo[a] + hi[a]);
            if (key >> (depth - 1 - d)) & 1 == 0 {
                hi[a] = mid;
            } else {
                lo[a] = mid;
            }
        }
        (lo, hi)
    }

    pub fn center_of(&self, depth: u32, key: u64) -> Vec<f64> {
        let (lo, hi) = self.bounds_of(depth, key);
        lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// How many times each axis has been bisected at the given depth.
    pub fn splits_per_axis(&self, depth: u32) -> Vec<u32> {
        let k = self.dim() as u32;
        (0..k).map(|a| (depth + k - 1 - a) / k).collect()
    }

    /// Euclidean diameter of one cell at the given depth.
    pub fn cell_diameter(&self, depth: u32) -> f64 {
        let splits = self.splits_per_axis(depth);
        self.radius
            .iter()
            .zip(&splits)
            .map(|(r, s)| {
                let w = 2.0 * r / (1u64 << s) as f64;
                w * w
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// A set of same-depth boxes of the dyadic partition of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxCollection {
    domain: BoxDomain,
    depth: u32,
    boxes: BTreeSet<u64>,
}

impl BoxCollection {
    /// The depth-0 collection `{Q}`.
    pub fn root(domain: BoxDomain) -> Self {
        let mut boxes = BTreeSet::new();
        boxes.insert(0);
        Self { domain, depth: 0, boxes }
    }

    pub fn from_keys(
        domain: BoxDomain,
        depth: u32,
        keys: impl IntoIterator<Item = u64>,
    ) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::DepthOverflow { depth });
        }
        let boxes: BTreeSet<u64> = keys.into_iter().collect();
        let cap = if depth == 64 { u64::MAX } else { (1u64 << depth).wrapping_sub(1) };
        if depth < 64 {
            if let Some(&max) = boxes.iter().next_back() {
                if depth == 0 && max != 0 || depth > 0 && max > cap {
                    return Err(Error::Parse(format!(
                        "box key {max} out of range for depth {depth}"
                    )));
                }
            }
        }
        Ok(Self { domain, depth, boxes })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn contains_key(&self, key: u64) -> bool {
        self.boxes.contains(&key)
    }

    /// Keys in sorted (path) order.
    pub fn keys(&self) -> impl Iterator<Item = u64> + '_ {
        self.boxes.iter().copied()
    }

    pub fn box_of(&self, x: &ObservedPoint) -> Option<u64> {
        self.domain.locate(self.depth, &x.coords)
    }

    pub fn center_of(&self, key: u64) -> Vec<f64> {
        self.domain.center_of(self.depth, key)
    }

    pub fn bounds_of(&self, key: u64) -> (Vec<f64>, Vec<f64>) {
        self.domain.bounds_of(self.depth, key)
    }

    /// The per-axis integer multi-index of a box (bisections of each axis in
    /// order, most significant first).
    pub fn multi_index_of(&self, key: u64) -> Vec<u64> {
        let k = self.domain.dim();
        let mut idx = vec![0u64; k];
        for d in 0..self.depth {
            let a = d as usize % k;
            idx[a] = (idx[a] << 1) | ((key >> (self.depth - 1 - d)) & 1);
        }
        idx
    }

    /// Rebuild a path key from a multi-index (inverse of [`multi_index_of`]).
    pub fn key_from_multi_index(&self, idx: &[u64]) -> Result<u64> {
        let k = self.domain.dim();
        if idx.len() != k {
            return Err(Error::LengthMismatch { expected: k, got: idx.len() });
        }
        let splits = self.domain.splits_per_axis(self.depth);
        let mut consumed = vec![0u32; k];
        let mut key = 0u64;
        for d in 0..self.depth {
            let a = d as usize % k;
            let shift = splits[a] - 1 - consumed[a];
            key = (key << 1) | ((idx[a] >> shift) & 1);
            consumed[a] += 1;
        }
        Ok(key)
    }

    /// Replace every box by its two children along axis `depth mod k`.
    pub fn subdivide(&self) -> Result<BoxCollection> {
        if self.depth + 1 > MAX_DEPTH {
            return Err(Error::DepthOverflow { depth: self.depth + 1 });
        }
        let mut boxes = BTreeSet::new();
        for &key in &self.boxes {
            boxes.insert(key << 1);
            boxes.insert((key << 1) | 1);
        }
        Ok(BoxCollection { domain: self.domain.clone(), depth: self.depth + 1, boxes })
    }

    /// Centers of `count` uniformly sampled boxes without replacement
    /// (`None` = all), in sorted key order.
    pub fn midpoints(&self, count: Option<usize>, seed: u64) -> Result<Vec<ObservedPoint>> {
        Ok(self
            .midpoint_keys(count, seed)?
            .into_iter()
            .map(|key| ObservedPoint::new(self.center_of(key)))
            .collect())
    }

    /// Keys of the sampled midpoint boxes, sorted.
    pub fn midpoint_keys(&self, count: Option<usize>, seed: u64) -> Result<Vec<u64>> {
        let all: Vec<u64> = self.keys().collect();
        match count {
            None => Ok(all),
            Some(m) => {
                if m > all.len() {
                    return Err(Error::CountExceedsBoxes { requested: m, available: all.len() });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut picked: Vec<u64> = rand::seq::index::sample(&mut rng, all.len(), m)
                    .into_iter()
                    .map(|i| all[i])
                    .collect();
                picked.sort_unstable();
                Ok(picked)
            }
        }
    }

    pub fn cell_diameter(&self) -> f64 {
        self.domain.cell_diameter(self.depth)
    }

    pub(crate) fn with_keys(&self, boxes: BTreeSet<u64>) -> BoxCollection {
        BoxCollection { domain: self.domain.clone(), depth: self.depth, boxes }
    }
}

/// Deterministic lattice of sample points inside one box: the center followed
/// by a Kronecker (generalized golden ratio) sequence with a per-box shift.
/// Prefixes are nested: asking for more points never changes earlier ones.
pub(crate) fn sample_points(
    domain: &BoxDomain,
    depth: u32,
    key: u64,
    n: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let k = domain.dim();
    let (lo, hi) = domain.bounds_of(depth, key);
    let mut pts = Vec::with_capacity(n);
    if n == 0 {
        return pts;
    }
    pts.push(lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect());

    let alphas = kronecker_alphas(k);
    let h = splitmix64(seed ^ key.wrapping_mul(0x9e3779b97f4a7c15) ^ u64::from(depth));
    let shifts: Vec<f64> =
        (0..k).map(|a| splitmix64(h.wrapping_add(a as u64)) as f64 / u64::MAX as f64).collect();
    for i in 1..n {
        let p: Vec<f64> = (0..k)
            .map(|a| {
                let t = (shifts[a] + i as f64 * alphas[a]).fract();
                lo[a] + t * (hi[a] - lo[a])
            })
            .collect();
        pts.push(p);
    }
    pts
}

/// Coordinates of the rank-1 Kronecker lattice: powers of the root of
/// `x^{k+1} = x + 1`.
fn kronecker_alphas(k: usize) -> Vec<f64> {
    let mut phi = 1.5f64;
    for _ in 0..64 {
        let f = phi.powi(k as i32 + 1) - phi - 1.0;
        let df = (k as f64 + 1.0) * phi.powi(k as i32) - 1.0;
        phi -= f / df;
    }
    (0..k).map(|a| (1.0 / phi.powi(a as i32 + 1)).fract()).collect()
}

pub(crate) use crate::exec::splitmix64;

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> BoxDomain {
        BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn root_box_contains_center() {
        let coll = BoxCollection::root(square());
        let key = coll.box_of(&ObservedPoint::new(vec![0.0, 0.0])).unwrap();
        assert_eq!(key, 0);
        assert_eq!(coll.multi_index_of(key), vec![0, 0]);
    }

    #[test]
    fn quadrant_identification_at_depth_two() {
        // Q = [-1,1]^2, both axes bisected once; (0.5, -0.5) sits in the
        // x-upper, y-lower quadrant.
        let coll = BoxCollection::root(square()).subdivide().unwrap().subdivide().unwrap();
        let key = coll.box_of(&ObservedPoint::new(vec![0.5, -0.5])).unwrap();
        assert_eq!(coll.multi_index_of(key), vec![1, 0]);
    }

    #[test]
    fn outside_points_have_no_box() {
        let coll = BoxCollection::root(square());
        assert!(coll.box_of(&ObservedPoint::new(vec![1.5, 0.0])).is_none());
    }

    #[test]
    fn global_upper_face_is_closed() {
        let mut coll = BoxCollection::root(square());
        for _ in 0..6 {
            coll = coll.subdivide().unwrap();
        }
        let key = coll.box_of(&ObservedPoint::new(vec![1.0, 1.0])).unwrap();
        let idx = coll.multi_index_of(key);
        assert_eq!(idx, vec![7, 7]);
    }

    #[test]
    fn half_open_cells_within_the_interior() {
        let coll = BoxCollection::root(square()).subdivide().unwrap().subdivide().unwrap();
        // 0.0 is the shared boundary: belongs to the upper cell on each axis
        let key = coll.box_of(&ObservedPoint::new(vec![0.0, 0.0])).unwrap();
        assert_eq!(coll.multi_index_of(key), vec![1, 1]);
    }

    #[test]
    fn subdivision_doubles_the_count_and_increments_depth() {
        let mut coll = BoxCollection::root(square());
        for expected_depth in 1..=8u32 {
            coll = coll.subdivide().unwrap();
            assert_eq!(coll.depth(), expected_depth);
            assert_eq!(coll.len(), 1usize << expected_depth);
        }
    }

    #[test]
    fn diameters_quarter_after_two_full_sweeps() {
        // Oracle: direct dyadic geometry. After 2k subdivisions every axis has
        // been halved twice.
        let domain = square();
        let d0 = domain.cell_diameter(0);
        assert_eq!(domain.cell_diameter(4), d0 / 4.0);
    }

    #[test]
    fn diameter_law_under_cyclic_bisection() {
        let domain = BoxDomain::new(vec![0.0; 3], vec![1.0, 0.5, 2.0]).unwrap();
        let d0 = domain.cell_diameter(0);
        for depth in 0..20u32 {
            let bound = d0 * 0.5f64.powi((depth / 3) as i32);
            let d = domain.cell_diameter(depth);
            assert!(
                d <= bound * (1.0 + 1e-14),
                "depth {depth}: {d} exceeds {bound}"
            );
            if depth % 3 == 0 {
                assert!((d - bound).abs() <= 1e-14 * bound, "law not exact at full sweeps");
            }
        }
    }

    #[test]
    fn dyadic_centers_at_depth_two_in_one_dimension() {
        let domain = BoxDomain::new(vec![0.0], vec![1.0]).unwrap();
        let coll = BoxCollection::root(domain).subdivide().unwrap().subdivide().unwrap();
        let centers: Vec<f64> =
            coll.midpoints(None, 0).unwrap().into_iter().map(|p| p.coords[0]).collect();
        assert_eq!(centers, vec![-0.75, -0.25, 0.25, 0.75]);
    }

    #[test]
    fn midpoint_sampling_is_reproducible_and_distinct() {
        let domain = square();
        let mut coll = BoxCollection::root(domain);
        for _ in 0..8 {
            coll = coll.subdivide().unwrap();
        }
        let a = coll.midpoint_keys(Some(40), 123).unwrap();
        let b = coll.midpoint_keys(Some(40), 123).unwrap();
        assert_eq!(a, b);
        let mut dedup = a.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 40);
        assert!(coll.midpoint_keys(Some(coll.len() + 1), 0).is_err());
    }

    #[test]
    fn multi_index_roundtrip() {
        let domain = BoxDomain::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        let mut coll = BoxCollection::root(domain);
        for _ in 0..7 {
            coll = coll.subdivide().unwrap();
        }
        for key in coll.keys().step_by(5) {
            let idx = coll.multi_index_of(key);
            assert_eq!(coll.key_from_multi_index(&idx).unwrap(), key);
        }
    }

    #[test]
    fn sample_points_are_inside_and_prefix_stable() {
        let domain = square();
        let key = domain.locate(6, &[0.3, -0.2]).unwrap();
        let p9 = sample_points(&domain, 6, key, 9, 42);
        let p27 = sample_points(&domain, 6, key, 27, 42);
        assert_eq!(&p27[..9], &p9[..]);
        let (lo, hi) = domain.bounds_of(6, key);
        for p in &p27 {
            for a in 0..2 {
                assert!(p[a] >= lo[a] && p[a] < hi[a]);
            }
        }
    }
}
