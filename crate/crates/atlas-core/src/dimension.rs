//! Bandwidth tuning and intrinsic-dimension estimation from the kernel-sum
//! statistic
//!
//! ```text
//! S(ε) = m⁻² Σ_{i,j} exp(-‖x_i - x_j‖²/ε) · 1{‖x_i - x_j‖ ≤ r}
//! ```
//!
//! In the scaling regime `S(ε) ~ ε^{d/2}`, so the log-log slope `a` of `S`
//! against `ε` estimates half the intrinsic dimension: `d_int = 2·a_max`.
//! The cutoff `r` is held fixed across a whole scan (at `sqrt(2·ε_max)`), so
//! one pass over the pairwise distances serves every ε value.

use crate::error::{Error, Result};
use crate::exec;
use crate::state::{dist_sq, ObservedPoint};

/// One scan over a grid of bandwidths.
#[derive(Debug, Clone)]
pub struct DimensionScan {
    pub epsilons: Vec<f64>,
    pub s_values: Vec<f64>,
    /// Log-log slopes; `slope_epsilons[i]` is the ε each one is attributed to.
    pub slopes: Vec<f64>,
    pub slope_epsilons: Vec<f64>,
    /// Bandwidth at the steepest slope.
    pub eps_star: f64,
    /// Estimated intrinsic dimension `2·a_max`.
    pub d_int: f64,
    /// Fixed cutoff radius used for every sum in this scan.
    pub scan_cutoff: f64,
    /// Maximal contiguous slope index range (containing the maximizer) with
    /// `|a_i - a_max| ≤ 0.1·a_max`.
    pub linear_region: (usize, usize),
}

/// `S(ε)` for one bandwidth under an explicit cutoff. The diagonal
/// contributes `m` exactly; off-diagonal terms are accumulated row by row
/// and combined with a deterministic pairwise tree.
pub fn kernel_sum(anchors: &[ObservedPoint], epsilon: f64, scan_cutoff: f64) -> f64 {
    let sums = kernel_sums(anchors, &[epsilon], scan_cutoff);
    sums[0]
}

/// `S(ε)` for a whole grid of bandwidths in one pass over the pairs.
pub fn kernel_sums(anchors: &[ObservedPoint], epsilons: &[f64], scan_cutoff: f64) -> Vec<f64> {
    let m = anchors.len();
    let r2 = scan_cutoff * scan_cutoff;
    let rows: Vec<Vec<f64>> = exec::range_map_collect(m, |i| {
        let mut acc = vec![0.0; epsilons.len()];
        for j in 0..m {
            if j == i {
                continue;
            }
            let d2 = dist_sq(&anchors[i].coords, &anchors[j].coords);
            if d2 <= r2 {
                for (a, eps) in acc.iter_mut().zip(epsilons) {
                    *a += (-d2 / eps).exp();
                }
            }
        }
        acc
    });

    (0..epsilons.len())
        .map(|e| {
            let col: Vec<f64> = rows.iter().map(|r| r[e]).collect();
            (m as f64 + exec::pairwise_sum(&col)) / (m as f64 * m as f64)
        })
        .collect()
}

fn check_anchors(anchors: &[ObservedPoint]) -> Result<()> {
    if anchors.len() < 2 {
        return Err(Error::TooFewAnchors { needed: 2, got: anchors.len() });
    }
    let base = &anchors[0];
    if anchors.iter().all(|a| dist_sq(&a.coords, &base.coords) == 0.0) {
        return Err(Error::DegenerateAnchors);
    }
    Ok(())
}

/// Scan `S` over the octave grid `ε_i = 2^i`, `i = i_min..=i_max`, with
/// forward-difference slopes attributed to the geometric midpoints.
pub fn coarse_scan(anchors: &[ObservedPoint], i_min: i32, i_max: i32) -> Result<DimensionScan> {
    if i_min >= i_max {
        return Err(Error::InvalidConfig(format!(
            "need i_min < i_max, got [{i_min}, {i_max}]"
        )));
    }
    check_anchors(anchors)?;
    let epsilons: Vec<f64> = (i_min..=i_max).map(|i| 2.0f64.powi(i)).collect();
    let scan_cutoff = (2.0 * epsilons[epsilons.len() - 1]).sqrt();
    let s_values = kernel_sums(anchors, &epsilons, scan_cutoff);

    // octave grid: the log-ε denominator is exactly log 2
    let ln2 = std::f64::consts::LN_2;
    let slopes: Vec<f64> = s_values
        .windows(2)
        .map(|w| (w[1].ln() - w[0].ln()) / ln2)
        .collect();
    let slope_epsilons: Vec<f64> =
        epsilons.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    let spans: Vec<(f64, f64)> = s_values.windows(2).map(|w| (w[0], w[1])).collect();
    finish_scan(anchors.len(), epsilons, s_values, slopes, slope_epsilons, spans, scan_cutoff)
}

/// Refine around a coarse maximizer: `n_fine` log-spaced bandwidths within
/// ±2 octaves, centered finite differences in log-log.
pub fn refine_scan(
    anchors: &[ObservedPoint],
    coarse: &DimensionScan,
    n_fine: usize,
) -> Result<DimensionScan> {
    if n_fine < 2 {
        return Err(Error::InvalidConfig(format!("n_fine must be >= 2, got {n_fine}")));
    }
    check_anchors(anchors)?;
    if !(coarse.eps_star.is_finite() && coarse.eps_star > 0.0) {
        return Err(Error::InvalidConfig("coarse scan has no valid maximizer".into()));
    }
    let lo = coarse.eps_star / 4.0;
    let hi = coarse.eps_star * 4.0;
    let epsilons: Vec<f64> = (0..n_fine)
        .map(|i| {
            let t = i as f64 / (n_fine - 1) as f64;
            lo * (hi / lo).powf(t)
        })
        .collect();
    let scan_cutoff = (2.0 * epsilons[epsilons.len() - 1]).sqrt();
    let s_values = kernel_sums(anchors, &epsilons, scan_cutoff);

    let (slopes, slope_epsilons, spans) = if n_fine == 2 {
        // degenerate but legal: a single forward difference
        let a = (s_values[1].ln() - s_values[0].ln())
            / (epsilons[1].ln() - epsilons[0].ln());
        (vec![a], vec![(epsilons[0] * epsilons[1]).sqrt()], vec![(s_values[0], s_values[1])])
    } else {
        let mut slopes = Vec::with_capacity(n_fine - 2);
        let mut at = Vec::with_capacity(n_fine - 2);
        let mut spans = Vec::with_capacity(n_fine - 2);
        for i in 1..n_fine - 1 {
            slopes.push(
                (s_values[i + 1].ln() - s_values[i - 1].ln())
                    / (epsilons[i + 1].ln() - epsilons[i - 1].ln()),
            );
            at.push(epsilons[i]);
            spans.push((s_values[i - 1], s_values[i + 1]));
        }
        (slopes, at, spans)
    };
    finish_scan(anchors.len(), epsilons, s_values, slopes, slope_epsilons, spans, scan_cutoff)
}

/// `S` must stay below this fraction of saturation for a slope to count:
/// the power law holds only while the kernel localizes the data, and near
/// saturation the log-log curve steepens into a spurious shoulder.
const SATURATION_CAP: f64 = 0.2;

fn finish_scan(
    m: usize,
    epsilons: Vec<f64>,
    s_values: Vec<f64>,
    slopes: Vec<f64>,
    slope_epsilons: Vec<f64>,
    spans: Vec<(f64, f64)>,
    scan_cutoff: f64,
) -> Result<DimensionScan> {
    for a in &slopes {
        if !a.is_finite() {
            return Err(Error::DegenerateAnchors);
        }
    }
    // restrict the maximizer to the localized regime: clear of the diagonal
    // floor 1/m and of saturation; fall back to the raw maximum if the scan
    // never leaves those regimes
    let floor = 2.0 / m as f64;
    let admissible = |i: usize| spans[i].0 >= floor && spans[i].1 <= SATURATION_CAP;
    let mut best: Option<usize> = None;
    for i in 0..slopes.len() {
        if admissible(i) && best.is_none_or(|b| slopes[i] > slopes[b]) {
            best = Some(i);
        }
    }
    let best = best.unwrap_or_else(|| {
        let mut b = 0;
        for i in 1..slopes.len() {
            if slopes[i] > slopes[b] {
                b = i;
            }
        }
        b
    });
    let a_max = slopes[best];
    let band = 0.1 * a_max;
    let mut lo = best;
    while lo > 0 && (slopes[lo - 1] - a_max).abs() <= band {
        lo -= 1;
    }
    let mut hi = best;
    while hi + 1 < slopes.len() && (slopes[hi + 1] - a_max).abs() <= band {
        hi += 1;
    }
    Ok(DimensionScan {
        eps_star: slope_epsilons[best],
        d_int: 2.0 * a_max,
        epsilons,
        s_values,
        slopes,
        slope_epsilons,
        scan_cutoff,
        linear_region: (lo, hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(coords: Vec<f64>) -> ObservedPoint {
        ObservedPoint::new(coords)
    }

    pub(super) fn uniform_circle(m: usize, seed: u64) -> Vec<ObservedPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| {
                let t: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
                pt(vec![t.cos(), t.sin()])
            })
            .collect()
    }

    #[test]
    fn saturation_and_localization_limits() {
        let anchors = uniform_circle(100, 1);
        let big = kernel_sum(&anchors, 1e12, 1e9);
        assert!((big - 1.0).abs() < 1e-9, "S should saturate at 1, got {big}");
        let tiny = kernel_sum(&anchors, 1e-12, 1e9);
        assert!(
            (tiny - 1.0 / 100.0).abs() < 1e-9,
            "S should localize to 1/m, got {tiny}"
        );
    }

    #[test]
    fn two_point_sum_matches_hand_formula() {
        let delta = 0.35f64;
        let anchors = vec![pt(vec![0.0]), pt(vec![delta])];
        for eps in [0.01, 0.1, 1.0] {
            let expect = (2.0 + 2.0 * (-delta * delta / eps).exp()) / 4.0;
            let got = kernel_sum(&anchors, eps, 1.0);
            assert!((got - expect).abs() < 1e-15, "eps {eps}: {got} vs {expect}");
        }
    }

    #[test]
    fn circle_dimension_is_one() {
        let anchors = uniform_circle(2000, 7);
        let scan = coarse_scan(&anchors, -30, 10).unwrap();
        assert!(
            (0.85..=1.15).contains(&scan.d_int),
            "circle d_int = {} at eps* = {}",
            scan.d_int,
            scan.eps_star
        );
    }

    #[test]
    fn torus_dimension_is_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let anchors: Vec<ObservedPoint> = (0..4000)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
                let b: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
                pt(vec![a.cos(), a.sin(), b.cos(), b.sin()])
            })
            .collect();
        let scan = coarse_scan(&anchors, -30, 10).unwrap();
        assert!(
            (1.7..=2.3).contains(&scan.d_int),
            "torus d_int = {} at eps* = {}",
            scan.d_int,
            scan.eps_star
        );
    }

    #[test]
    fn refinement_is_stable_on_the_circle() {
        let anchors = uniform_circle(2000, 7);
        let coarse = coarse_scan(&anchors, -30, 10).unwrap();
        let fine = refine_scan(&anchors, &coarse, 50).unwrap();
        assert!(
            (fine.d_int - coarse.d_int).abs() < 0.05,
            "refinement moved d_int from {} to {}",
            coarse.d_int,
            fine.d_int
        );
        assert!(fine.linear_region.0 <= fine.linear_region.1);
    }

    #[test]
    fn minimal_refinement_is_legal() {
        let anchors = uniform_circle(300, 2);
        let coarse = coarse_scan(&anchors, -20, 6).unwrap();
        let fine = refine_scan(&anchors, &coarse, 2).unwrap();
        assert_eq!(fine.slopes.len(), 1);
    }

    #[test]
    fn feature_scale_orders_the_maximizer()
    {
        // the same geometry at 3x the size tunes to a larger eps*
        let small = uniform_circle(1500, 9);
        let large: Vec<ObservedPoint> =
            small.iter().map(|p| pt(p.coords.iter().map(|c| 3.0 * c).collect())).collect();
        let s_small = coarse_scan(&small, -30, 10).unwrap();
        let s_large = coarse_scan(&large, -30, 10).unwrap();
        assert!(
            s_large.eps_star > s_small.eps_star,
            "eps* should grow with the feature scale: {} vs {}",
            s_large.eps_star,
            s_small.eps_star
        );
    }

    #[test]
    fn degenerate_anchors_are_rejected() {
        let anchors = vec![pt(vec![1.0, 2.0]); 50];
        assert!(matches!(coarse_scan(&anchors, -10, 5), Err(Error::DegenerateAnchors)));
    }

    #[test]
    fn scan_monotonicity_and_bounds() {
        let anchors = uniform_circle(500, 11);
        let scan = coarse_scan(&anchors, -30, 10).unwrap();
        let m = anchors.len() as f64;
        for w in scan.s_values.windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-14), "S not monotone: {} -> {}", w[0], w[1]);
        }
        for s in &scan.s_values {
            assert!((1.0 / m - 1e-12..=1.0 + 1e-12).contains(s));
        }
        for a in &scan.slopes {
            assert!((-1e-9..=1.0 + 0.1).contains(a), "slope {a} out of range");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn scale_covariance_of_the_kernel_sum(c in 0.1..10.0f64, eps in 0.001..10.0f64) {
            let anchors = uniform_circle(120, 13);
            let scaled: Vec<ObservedPoint> = anchors
                .iter()
                .map(|p| pt(p.coords.iter().map(|x| c * x).collect()))
                .collect();
            let cutoff = 3.0;
            let a = kernel_sum(&anchors, eps, cutoff);
            let b = kernel_sum(&scaled, c * c * eps, c * cutoff);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
        }

        #[test]
        fn octave_rescaling_shifts_the_scan_but_not_the_dimension(j in 1i32..4) {
            let anchors = uniform_circle(400, 15);
            let c = 2.0f64.powi(j);
            let scaled: Vec<ObservedPoint> = anchors
                .iter()
                .map(|p| pt(p.coords.iter().map(|x| c * x).collect()))
                .collect();
            let a = coarse_scan(&anchors, -30, 10).unwrap();
            let b = coarse_scan(&scaled, -30 + 2 * j, 10 + 2 * j).unwrap();
            prop_assert!((a.d_int - b.d_int).abs() <= 1e-9);
            prop_assert!((b.eps_star / a.eps_star - c * c).abs() <= 1e-9 * c * c);
        }
    }
}
