//! Medians, non-increasing rearrangements and local mean oscillations of
//! real step signals over dyadic intervals.
//!
//! On an interval with `n` equal-measure cells everything reduces to order
//! statistics of the cell values, so each quantity here is exact. Medians
//! are generally non-unique; the crate fixes the lower tie rule (smallest
//! admissible cell value) everywhere for determinism.

use crate::grid::DyadicInterval;
use crate::signal::StepSignal;
use crate::{CoreError, Result};

/// Largest integer count `<= x`, snapping up when `x` sits within a
/// relative 1e-9 of an integer. Guards measure/width quotients that are
/// exact on the cell lattice but computed in floating point.
pub fn snap_count(x: f64) -> usize {
    if x <= 0.0 {
        return 0;
    }
    let r = x.round();
    let snapped = if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.floor()
    };
    snapped as usize
}

/// Lower median of a slice: the smallest admissible median value, always a
/// cell value. Sorts internally.
pub fn lower_median_slice(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    let k = (values.len() - 1) / 2;
    *values
        .select_nth_unstable_by(k, |a, b| a.partial_cmp(b).unwrap())
        .1
}

/// Upper median of a slice: the largest admissible median value.
pub fn upper_median_slice(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    let k = values.len() / 2;
    *values
        .select_nth_unstable_by(k, |a, b| a.partial_cmp(b).unwrap())
        .1
}

/// `inf { a >= 0 : #{i : mags[i] > a} <= allowed }` for nonnegative
/// magnitudes: the `(allowed+1)`-th largest value, or 0 when every cell may
/// exceed. Sorts internally.
pub fn rearrangement_slice(mags: &mut [f64], allowed: usize) -> f64 {
    if allowed >= mags.len() {
        return 0.0;
    }
    let k = mags.len() - 1 - allowed;
    *mags
        .select_nth_unstable_by(k, |a, b| a.partial_cmp(b).unwrap())
        .1
}

fn gather_real(f: &StepSignal, q: &DyadicInterval) -> Result<Vec<f64>> {
    if !f.is_real() {
        return Err(CoreError::NonRealSignal);
    }
    let grid = f.grid();
    Ok(q.arc(grid).cells(grid).map(|c| f.values()[c].re).collect())
}

/// Lower median of `f` over `Q`: the smallest `m` with both
/// `|{f > m}| <= |Q|/2` and `|{f < m}| <= |Q|/2`.
pub fn median(f: &StepSignal, q: &DyadicInterval) -> Result<f64> {
    let mut vals = gather_real(f, q)?;
    Ok(lower_median_slice(&mut vals))
}

/// Upper median of `f` over `Q` (largest admissible value).
pub fn upper_median(f: &StepSignal, q: &DyadicInterval) -> Result<f64> {
    let mut vals = gather_real(f, q)?;
    Ok(upper_median_slice(&mut vals))
}

/// Non-increasing rearrangement value `(f chi_Q)^*(t)`:
/// `inf { a >= 0 : |{x in Q : |f(x)| > a}| <= t }`, exact by sorting cell
/// magnitudes. Requires `0 < t <= |Q|`.
pub fn rearrangement(f: &StepSignal, q: &DyadicInterval, t: f64) -> Result<f64> {
    let measure = q.measure();
    if !(t > 0.0) || t > measure * (1.0 + 1e-12) {
        return Err(CoreError::InvalidParameter(format!(
            "rearrangement point t = {t} outside (0, |Q| = {measure}]"
        )));
    }
    let grid = f.grid();
    let mut mags: Vec<f64> = q
        .arc(grid)
        .cells(grid)
        .map(|c| f.values()[c].norm())
        .collect();
    let allowed = snap_count(t * grid.cells() as f64).min(mags.len());
    Ok(rearrangement_slice(&mut mags, allowed))
}

/// Result of a local mean oscillation computation.
#[derive(Debug, Clone, Copy)]
pub struct Oscillation {
    /// `w_lambda(f; Q) = inf_c ((f-c) chi_Q)^*(lambda |Q|)`, exact.
    pub exact: f64,
    /// The median-proxy value `((f - m_f(Q)) chi_Q)^*(lambda |Q|)`;
    /// classically `exact <= proxy <= 2 * exact`.
    pub proxy: f64,
    /// A center attaining the infimum; always a cell value or a pairwise
    /// midpoint of cell values.
    pub optimal_center: f64,
}

/// Local mean oscillation of a real signal over a dyadic interval,
/// `lambda` in `(0,1)`.
///
/// The infimum over centers is attained at a midpoint of two cell values:
/// minimizing the `(c+1)`-th largest distance from `c` to the value multiset
/// is the shortest-window problem over the sorted values, solved exactly by
/// a sliding window. The O(n^2) enumeration over all cell values and
/// pairwise midpoints gives the same value and serves as the test oracle.
pub fn oscillation(f: &StepSignal, q: &DyadicInterval, lambda: f64) -> Result<Oscillation> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "lambda must lie in (0,1), got {lambda}"
        )));
    }
    let mut vals = gather_real(f, q)?;
    let n = vals.len();
    let allowed = snap_count(lambda * n as f64).min(n - 1);
    let m = lower_median_slice(&mut vals.clone());

    vals.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    // Shortest window of n - allowed consecutive sorted values.
    let window = n - allowed;
    let mut best = f64::INFINITY;
    let mut center = vals[0];
    for i in 0..=(n - window) {
        let radius = (vals[i + window - 1] - vals[i]) / 2.0;
        if radius < best {
            best = radius;
            center = (vals[i] + vals[i + window - 1]) / 2.0;
        }
    }

    // Median proxy: rearrangement of |f - m| at the same level.
    let mut dev: Vec<f64> = vals.iter().map(|v| (v - m).abs()).collect();
    let proxy = rearrangement_slice(&mut dev, allowed);

    Ok(Oscillation {
        exact: best,
        proxy,
        optimal_center: center,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridShift, GridSpec};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> GridSpec {
        GridSpec::with_cells(n).unwrap()
    }

    fn level_q(level: u32, index: usize) -> DyadicInterval {
        DyadicInterval {
            shift: GridShift::Zero,
            level,
            index,
        }
    }

    #[test]
    fn median_of_constant() {
        let g = grid(16);
        let f = StepSignal::constant(g, 7.5);
        assert_eq!(median(&f, &DyadicInterval::whole_circle()).unwrap(), 7.5);
    }

    #[test]
    fn median_lower_rule_on_four_values() {
        // Equal-measure values {1,2,3,4}: admissible medians are [2,3],
        // the lower rule picks 2.
        let g = grid(8);
        let f = StepSignal::from_real(g, vec![1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let q = level_q(1, 0); // cells 0..4
        assert_eq!(median(&f, &q).unwrap(), 2.0);
    }

    #[test]
    fn median_of_half_indicator_is_zero() {
        let g = grid(16);
        let f = StepSignal::from_fn(g, |x| if x < 0.5 { 1.0 } else { 0.0 });
        assert_eq!(median(&f, &DyadicInterval::whole_circle()).unwrap(), 0.0);
    }

    #[test]
    fn median_rejects_complex() {
        let g = grid(8);
        let mut f = StepSignal::zero(g);
        f.values_mut()[0] = num_complex::Complex64::new(0.0, 2.0);
        assert!(median(&f, &DyadicInterval::whole_circle()).is_err());
    }

    #[test]
    fn median_shift_and_negation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = grid(32);
        for _ in 0..50 {
            let f = StepSignal::from_real(g, (0..32).map(|_| rng.random::<f64>()).collect())
                .unwrap();
            let q = level_q(2, rng.random_range(0..4));
            let a = 3.25;
            let shifted = f.map(|v| v + a);
            assert_eq!(
                median(&shifted, &q).unwrap(),
                median(&f, &q).unwrap() + a,
                "median(f + a) = median(f) + a"
            );
            let neg = f.scaled(-1.0);
            assert_eq!(median(&neg, &q).unwrap(), -upper_median(&f, &q).unwrap());
        }
    }

    #[test]
    fn rearrangement_examples() {
        let g = grid(8);
        let q = DyadicInterval::whole_circle();
        let h = g.cell_width();

        let f = StepSignal::constant(g, 3.0);
        assert_eq!(rearrangement(&f, &q, 0.5).unwrap(), 3.0);

        let spike = StepSignal::from_real(g, {
            let mut v = vec![0.0; 8];
            v[2] = 5.0;
            v
        })
        .unwrap();
        assert_eq!(rearrangement(&spike, &q, 2.0 * h).unwrap(), 0.0);

        // Values {4,2,1,1} on the left half, t = |Q|/4 over that half.
        let f = StepSignal::from_real(g, vec![4.0, 4.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let qh = DyadicInterval::whole_circle();
        // quarter of the circle measure => allowed = 2 cells of 8
        assert_eq!(rearrangement(&f, &qh, 0.25).unwrap(), 2.0);
    }

    #[test]
    fn rearrangement_domain_checks() {
        let g = grid(8);
        let q = level_q(1, 0);
        let f = StepSignal::constant(g, 1.0);
        assert!(rearrangement(&f, &q, 0.0).is_err());
        assert!(rearrangement(&f, &q, 0.6).is_err()); // |Q| = 1/2
        assert!(rearrangement(&f, &q, 0.5).is_ok());
    }

    #[test]
    fn rearrangement_monotone_right_continuous_on_lattice() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = grid(16);
        let q = DyadicInterval::whole_circle();
        let f =
            StepSignal::from_real(g, (0..16).map(|_| rng.random::<f64>() * 4.0).collect()).unwrap();
        let h = g.cell_width();
        let mut prev = f64::INFINITY;
        for k in 1..=16usize {
            let t = k as f64 * h;
            let v = rearrangement(&f, &q, t).unwrap();
            assert!(v <= prev, "rearrangement must be non-increasing in t");
            // Right-continuity on the lattice: value constant on [kh, (k+1)h).
            if k < 16 {
                let v_mid = rearrangement(&f, &q, t + 0.4 * h).unwrap();
                assert_eq!(v, v_mid);
            }
            prev = v;
        }
    }

    #[test]
    fn oscillation_constant_is_zero() {
        let g = grid(16);
        let f = StepSignal::constant(g, -2.0);
        for lambda in [0.01, 0.125, 0.5, 0.9] {
            let o = oscillation(&f, &DyadicInterval::whole_circle(), lambda).unwrap();
            assert_eq!(o.exact, 0.0);
            assert_eq!(o.proxy, 0.0);
        }
    }

    #[test]
    fn oscillation_small_indicator_is_zero() {
        // |E| = 2 cells of 16 = |Q|/8 <= lambda |Q| for lambda = 1/8.
        let g = grid(16);
        let mut v = vec![0.0; 16];
        v[3] = 1.0;
        v[9] = 1.0;
        let f = StepSignal::from_real(g, v).unwrap();
        let o = oscillation(&f, &DyadicInterval::whole_circle(), 0.125).unwrap();
        assert_eq!(o.exact, 0.0);
    }

    #[test]
    fn oscillation_rejects_bad_lambda() {
        let g = grid(8);
        let f = StepSignal::constant(g, 1.0);
        let q = DyadicInterval::whole_circle();
        assert!(oscillation(&f, &q, 0.0).is_err());
        assert!(oscillation(&f, &q, 1.0).is_err());
    }

    /// Brute-force oracle: evaluate the objective at every cell value and
    /// every pairwise midpoint, plus a fine scan, and compare.
    fn oracle_oscillation(vals: &[f64], lambda: f64) -> f64 {
        let n = vals.len();
        let allowed = snap_count(lambda * n as f64).min(n - 1);
        let objective = |c: f64| {
            let mut d: Vec<f64> = vals.iter().map(|v| (v - c).abs()).collect();
            rearrangement_slice(&mut d, allowed)
        };
        let mut centers: Vec<f64> = vals.to_vec();
        for i in 0..n {
            for j in (i + 1)..n {
                centers.push((vals[i] + vals[j]) / 2.0);
            }
        }
        centers
            .into_iter()
            .map(objective)
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn oscillation_matches_midpoint_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g = grid(8);
        let q = DyadicInterval::whole_circle();
        for _ in 0..300 {
            let vals: Vec<f64> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
            let f = StepSignal::from_real(g, vals.clone()).unwrap();
            for lambda in [0.125, 0.3, 0.49] {
                let o = oscillation(&f, &q, lambda).unwrap();
                let oracle = oracle_oscillation(&vals, lambda);
                assert!(
                    (o.exact - oracle).abs() <= 1e-12 * oracle.max(1.0),
                    "window {} vs enumeration {}",
                    o.exact,
                    oracle
                );
                // And no point on a fine grid does better.
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for k in 0..=400 {
                    let c = lo + (hi - lo) * k as f64 / 400.0;
                    let mut d: Vec<f64> = vals.iter().map(|v| (v - c).abs()).collect();
                    let val = rearrangement_slice(&mut d, snap_count(lambda * 8.0).min(7));
                    assert!(val >= o.exact - 1e-12);
                }
            }
        }
    }

    #[test]
    fn proxy_within_factor_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..1000 {
            let n = [8usize, 16, 32][trial % 3];
            let g = grid(n.max(8));
            let vals: Vec<f64> = (0..g.cells()).map(|_| rng.random_range(-5.0..5.0)).collect();
            let f = StepSignal::from_real(g, vals).unwrap();
            let o = oscillation(&f, &DyadicInterval::whole_circle(), 0.125).unwrap();
            assert!(o.exact <= o.proxy + 1e-12);
            assert!(o.proxy <= 2.0 * o.exact + 1e-12);
        }
    }

    #[test]
    fn oscillation_non_increasing_in_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = grid(32);
        let f =
            StepSignal::from_real(g, (0..32).map(|_| rng.random_range(-1.0..1.0)).collect())
                .unwrap();
        let q = DyadicInterval::whole_circle();
        let lambdas = [0.05, 0.125, 0.25, 0.5, 0.75, 0.95];
        let vals: Vec<f64> = lambdas
            .iter()
            .map(|&l| oscillation(&f, &q, l).unwrap().exact)
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }
}
