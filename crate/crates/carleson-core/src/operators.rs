//! The operator zoo: circle Hilbert transform, modulations, the Carleson
//! operator with its linearization and adjoint, and the maximal-function
//! family (Hardy–Littlewood, `M_r`, Orlicz, weighted centered Orlicz).
//!
//! The Hilbert transform is the conjugate-function multiplier
//! `-i sgn(k)` in the discrete Fourier basis, with the DC and Nyquist lines
//! zeroed (`sgn(0) = 0`; the Nyquist line has no well-defined sign). This
//! makes the Carleson supremum exactly computable: for grid signals the
//! supremum over real modulation frequencies collapses to the `N`
//! representable integers, and each term is one spectrum rotation away
//! from the cached transform of `f`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::grid::{CellArc, GridShift, GridSpec};
use crate::signal::{PrefixSums, StepSignal};
use crate::weights::WeightProfile;
use crate::young::{
    luxemburg_from_mags, weighted_luxemburg_arc, YoungFn,
};
use crate::{CoreError, Result};

// ---------------------------------------------------------------------------
// Fourier side
// ---------------------------------------------------------------------------

/// Frequency of DFT bin `b`: `b` for `b < N/2`, `b - N` otherwise, so the
/// representable range is `-N/2 .. N/2 - 1`.
pub fn bin_frequency(bin: usize, n: usize) -> i64 {
    if bin < n / 2 {
        bin as i64
    } else {
        bin as i64 - n as i64
    }
}

fn forward_fft(f: &StepSignal) -> Vec<Complex64> {
    let n = f.len();
    let mut buf: Vec<Complex64> = f.values().to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

fn inverse_fft(mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
    let n = spectrum.len();
    FftPlanner::new()
        .plan_fft_inverse(n)
        .process(&mut spectrum);
    let scale = 1.0 / n as f64;
    for v in &mut spectrum {
        *v *= scale;
    }
    spectrum
}

/// Hilbert multiplier at frequency `k`: `-i sgn(k)`, zero on DC and on the
/// Nyquist line `k = -N/2`.
fn hilbert_multiplier(k: i64, n: usize) -> Complex64 {
    if k == 0 || k == -(n as i64) / 2 {
        Complex64::ZERO
    } else if k > 0 {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::new(0.0, 1.0)
    }
}

/// Periodic Hilbert transform (conjugate function). Exact multiplier
/// `-i sgn(k)` on the representable band; real input yields real output,
/// and the roundoff imaginary residue is dropped exactly in that case.
pub fn hilbert(f: &StepSignal) -> StepSignal {
    let n = f.len();
    let mut spec = forward_fft(f);
    for (b, v) in spec.iter_mut().enumerate() {
        *v *= hilbert_multiplier(bin_frequency(b, n), n);
    }
    let vals = inverse_fft(spec);
    let out = StepSignal::new(*f.grid(), vals).expect("same grid");
    if f.is_real() {
        out.real_part()
    } else {
        out
    }
}

/// Adjoint of the Hilbert transform with respect to `(1/N) sum f conj(g)`:
/// the conjugate multiplier, i.e. `-H`.
pub fn hilbert_adjoint(f: &StepSignal) -> StepSignal {
    hilbert(f).scaled(-1.0)
}

/// Modulation `M^xi f(x) = e^{2 pi i xi x} f(x)` at cell midpoints.
pub fn modulate(f: &StepSignal, xi: i64) -> StepSignal {
    let grid = *f.grid();
    let values = f
        .values()
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let phase = 2.0 * std::f64::consts::PI * xi as f64 * grid.midpoint(j);
            v * Complex64::new(phase.cos(), phase.sin())
        })
        .collect();
    StepSignal::new(grid, values).expect("same grid")
}

/// `H(M^xi f)` computed from the cached spectrum of `f`: modulation at cell
/// midpoints rotates the spectrum by `xi` bins and multiplies by a global
/// half-cell phase.
fn hilbert_of_modulated(f_spectrum: &[Complex64], xi: i64, n: usize) -> Vec<Complex64> {
    let half_phase = std::f64::consts::PI * xi as f64 / n as f64;
    let phase = Complex64::new(half_phase.cos(), half_phase.sin());
    let mut spec = vec![Complex64::ZERO; n];
    for (b, slot) in spec.iter_mut().enumerate() {
        let mult = hilbert_multiplier(bin_frequency(b, n), n);
        if mult == Complex64::ZERO {
            continue;
        }
        let src = ((b as i64 - xi).rem_euclid(n as i64)) as usize;
        *slot = phase * f_spectrum[src] * mult;
    }
    inverse_fft(spec)
}

/// Per-cell modulation frequencies, each within the representable range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyChoice {
    xi: Vec<i64>,
}

impl FrequencyChoice {
    pub fn new(grid: &GridSpec, xi: Vec<i64>) -> Result<Self> {
        let n = grid.cells() as i64;
        if xi.len() != grid.cells() {
            return Err(CoreError::InvalidParameter(format!(
                "choice length {} does not match grid {}",
                xi.len(),
                grid.cells()
            )));
        }
        if xi.iter().any(|&x| x < -n / 2 || x >= n / 2) {
            return Err(CoreError::InvalidParameter(
                "frequency outside representable range".into(),
            ));
        }
        Ok(FrequencyChoice { xi })
    }

    pub fn constant(grid: &GridSpec, xi: i64) -> Result<Self> {
        Self::new(grid, vec![xi; grid.cells()])
    }

    pub fn xi(&self) -> &[i64] {
        &self.xi
    }

    /// CSV with header `cell,xi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell,xi\n");
        for (c, x) in self.xi.iter().enumerate() {
            out.push_str(&format!("{c},{x}\n"));
        }
        out
    }

    pub fn from_csv(text: &str, grid: &GridSpec) -> Result<Self> {
        let mut xi = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("cell")) {
                continue;
            }
            let (c, x) = line.split_once(',').ok_or_else(|| CoreError::Parse {
                pos: lineno + 1,
                msg: "expected cell,xi".into(),
            })?;
            let c: usize = c.trim().parse().map_err(|e| CoreError::Parse {
                pos: lineno + 1,
                msg: format!("bad cell: {e}"),
            })?;
            if c != xi.len() {
                return Err(CoreError::Parse {
                    pos: lineno + 1,
                    msg: format!("non-contiguous cell {c}"),
                });
            }
            xi.push(x.trim().parse().map_err(|e| CoreError::Parse {
                pos: lineno + 1,
                msg: format!("bad xi: {e}"),
            })?);
        }
        Self::new(grid, xi)
    }
}

/// Carleson output: the per-cell supremum and the arg-max frequencies.
#[derive(Debug, Clone)]
pub struct CarlesonResult {
    /// `C f(x) = max_xi |H(M^xi f)(x)|`, a nonnegative real signal.
    pub magnitude: StepSignal,
    /// Lowest arg-max frequency per cell.
    pub choice: FrequencyChoice,
}

/// The Carleson operator over the complete discrete frequency set
/// `xi in {-N/2, .., N/2-1}`. O(N^2 log N); the frequency loop is the
/// parallel region, with a deterministic lowest-frequency tie rule.
pub fn carleson(f: &StepSignal) -> CarlesonResult {
    let grid = *f.grid();
    let n = grid.cells();
    let spectrum = forward_fft(f);
    let half = n as i64 / 2;

    let merge = |mut a: (Vec<f64>, Vec<i64>), b: (Vec<f64>, Vec<i64>)| {
        for i in 0..n {
            if b.0[i] > a.0[i] || (b.0[i] == a.0[i] && b.1[i] < a.1[i]) {
                a.0[i] = b.0[i];
                a.1[i] = b.1[i];
            }
        }
        a
    };
    let identity = || (vec![f64::NEG_INFINITY; n], vec![half; n]);

    let (best, choice) = (-half..half)
        .into_par_iter()
        .fold(identity, |mut acc, xi| {
            let vals = hilbert_of_modulated(&spectrum, xi, n);
            for i in 0..n {
                let mag = vals[i].norm();
                if mag > acc.0[i] || (mag == acc.0[i] && xi < acc.1[i]) {
                    acc.0[i] = mag;
                    acc.1[i] = xi;
                }
            }
            acc
        })
        .reduce(identity, merge);

    CarlesonResult {
        magnitude: StepSignal::from_real(grid, best).expect("same grid"),
        choice: FrequencyChoice::new(&grid, choice).expect("in range"),
    }
}

/// The linearized Carleson operator `C_{xi(.)} f(x) = H(M^{xi(x)} f)(x)`;
/// linear in `f` for a fixed choice. With the arg-max choice its magnitude
/// reproduces `carleson(f)` exactly (same arithmetic path per frequency).
pub fn linearized_carleson(f: &StepSignal, choice: &FrequencyChoice) -> StepSignal {
    let grid = *f.grid();
    let n = grid.cells();
    let spectrum = forward_fft(f);
    let mut out = vec![Complex64::ZERO; n];
    let mut distinct: Vec<i64> = choice.xi().to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let parts: Vec<(i64, Vec<Complex64>)> = distinct
        .par_iter()
        .map(|&xi| (xi, hilbert_of_modulated(&spectrum, xi, n)))
        .collect();
    for (xi, vals) in parts {
        for i in 0..n {
            if choice.xi()[i] == xi {
                out[i] = vals[i];
            }
        }
    }
    StepSignal::new(grid, out).expect("same grid")
}

/// Exact transpose of `linearized_carleson(., choice)` with respect to the
/// discrete inner product `(1/N) sum f conj(g)`, realized through the
/// factorization `sum_xi M^{-xi} H^* (h chi_{xi(.) = xi})` without
/// materializing the matrix.
pub fn adjoint_linearized(h: &StepSignal, choice: &FrequencyChoice) -> StepSignal {
    let grid = *h.grid();
    let n = grid.cells();
    let mut distinct: Vec<i64> = choice.xi().to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let parts: Vec<Vec<Complex64>> = distinct
        .par_iter()
        .map(|&xi| {
            let mut masked = vec![Complex64::ZERO; n];
            for i in 0..n {
                if choice.xi()[i] == xi {
                    masked[i] = h.values()[i];
                }
            }
            // H^* = conjugate multiplier = -H.
            let mut spec = masked;
            FftPlanner::new().plan_fft_forward(n).process(&mut spec);
            for (b, v) in spec.iter_mut().enumerate() {
                *v *= hilbert_multiplier(bin_frequency(b, n), n).conj();
            }
            let transformed = inverse_fft(spec);
            // M^{-xi} on physical side.
            transformed
                .into_iter()
                .enumerate()
                .map(|(j, v)| {
                    let phase = -2.0 * std::f64::consts::PI * xi as f64 * grid.midpoint(j);
                    v * Complex64::new(phase.cos(), phase.sin())
                })
                .collect()
        })
        .collect();
    let mut out = vec![Complex64::ZERO; n];
    for part in parts {
        for i in 0..n {
            out[i] += part[i];
        }
    }
    StepSignal::new(grid, out).expect("same grid")
}

// ---------------------------------------------------------------------------
// Maximal functions
// ---------------------------------------------------------------------------

/// Admissible interval family for a maximal operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaximalMode {
    /// All cell-aligned arcs containing the cell (exact, O(N^2)).
    Uncentered,
    /// Arcs centered at the cell; even diameters use the left-of-center
    /// convention.
    Centered,
    /// Dyadic intervals of one shifted grid containing the cell.
    Dyadic(GridShift),
    /// Max over the dyadic intervals of both shifts; the flagged
    /// approximate mode for large grids.
    DyadicTwoShift,
}

impl MaximalMode {
    pub fn label(&self) -> String {
        match self {
            MaximalMode::Uncentered => "all".into(),
            MaximalMode::Centered => "centered".into(),
            MaximalMode::Dyadic(GridShift::Zero) => "dyadic0".into(),
            MaximalMode::Dyadic(GridShift::Third) => "dyadic3".into(),
            MaximalMode::DyadicTwoShift => "dyadic2".into(),
        }
    }
}

/// Arcs of a centered window of `len` cells at `x`: `ceil((len-1)/2)` cells
/// to the left of `x`, the rest to the right.
fn centered_arc(x: usize, len: usize, n: usize) -> CellArc {
    let left = len / 2;
    CellArc {
        start: (x + n - left % n) % n,
        len,
    }
}

/// Hardy–Littlewood maximal function `Mf(x) = sup_{I ni x} avg_I |f|` over
/// the admissible family; exact via prefix sums.
pub fn maximal(f: &StepSignal, mode: MaximalMode) -> StepSignal {
    let grid = *f.grid();
    let mags = f.magnitudes();
    let out = maximal_of_values(&mags, &grid, mode);
    StepSignal::from_real(grid, out).expect("same grid")
}

/// Uncentered maximal function together with an arg-max interval per cell
/// (the selection that linearizes `M` at `f`).
pub fn maximal_with_selection(f: &StepSignal) -> (StepSignal, Vec<CellArc>) {
    let grid = *f.grid();
    let n = grid.cells();
    let mags = f.magnitudes();
    let prefix = PrefixSums::new(&mags);
    let mut m = vec![f64::NEG_INFINITY; n];
    let mut sel = vec![CellArc { start: 0, len: 1 }; n];
    let mut g = vec![(0.0f64, 0usize); n];
    for a in 0..n {
        let mut best = (f64::NEG_INFINITY, 1usize);
        for off in (0..n).rev() {
            let arc = CellArc {
                start: a,
                len: off + 1,
            };
            let avg = prefix.arc_sum(&arc) / (off + 1) as f64;
            if avg > best.0 {
                best = (avg, off + 1);
            }
            g[off] = best;
        }
        for off in 0..n {
            let x = (a + off) % n;
            if g[off].0 > m[x] {
                m[x] = g[off].0;
                sel[x] = CellArc {
                    start: a,
                    len: g[off].1,
                };
            }
        }
    }
    (
        StepSignal::from_real(grid, m).expect("same grid"),
        sel,
    )
}

pub(crate) fn maximal_of_values(vals: &[f64], grid: &GridSpec, mode: MaximalMode) -> Vec<f64> {
    let n = grid.cells();
    let prefix = PrefixSums::new(vals);
    match mode {
        MaximalMode::Uncentered => {
            // For each start a, suffix maxima over the window length give
            // max_{len > off} avg over [a, a+len) for each offset in one
            // backward pass; O(N^2) total.
            let mut m = vec![f64::NEG_INFINITY; n];
            let mut g = vec![0.0f64; n];
            for a in 0..n {
                let mut best = f64::NEG_INFINITY;
                for off in (0..n).rev() {
                    let arc = CellArc {
                        start: a,
                        len: off + 1,
                    };
                    let avg = prefix.arc_sum(&arc) / (off + 1) as f64;
                    if avg > best {
                        best = avg;
                    }
                    g[off] = best;
                }
                for off in 0..n {
                    let x = (a + off) % n;
                    if g[off] > m[x] {
                        m[x] = g[off];
                    }
                }
            }
            m
        }
        MaximalMode::Centered => (0..n)
            .map(|x| {
                let mut best = f64::NEG_INFINITY;
                for len in 1..=n {
                    let arc = centered_arc(x, len, n);
                    let avg = prefix.arc_sum(&arc) / len as f64;
                    if avg > best {
                        best = avg;
                    }
                }
                best
            })
            .collect(),
        MaximalMode::Dyadic(shift) => dyadic_maximal(vals, grid, &prefix, shift),
        MaximalMode::DyadicTwoShift => {
            let a = dyadic_maximal(vals, grid, &prefix, GridShift::Zero);
            let b = dyadic_maximal(vals, grid, &prefix, GridShift::Third);
            a.into_iter().zip(b).map(|(x, y)| x.max(y)).collect()
        }
    }
}

fn dyadic_maximal(
    _vals: &[f64],
    grid: &GridSpec,
    prefix: &PrefixSums,
    shift: GridShift,
) -> Vec<f64> {
    let n = grid.cells();
    let mut m = vec![f64::NEG_INFINITY; n];
    for q in crate::grid::enumerate_dyadic(grid, shift) {
        let arc = q.arc(grid);
        let avg = prefix.arc_sum(&arc) / arc.len as f64;
        for c in arc.cells(grid) {
            if avg > m[c] {
                m[c] = avg;
            }
        }
    }
    m
}

/// `M_r f = M(|f|^r)^{1/r}`.
pub fn maximal_r(f: &StepSignal, r: f64, mode: MaximalMode) -> Result<StepSignal> {
    if !(r > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "maximal_r needs r > 0, got {r}"
        )));
    }
    let grid = *f.grid();
    let powered: Vec<f64> = f.magnitudes().iter().map(|m| m.powf(r)).collect();
    let maxed = maximal_of_values(&powered, &grid, mode);
    StepSignal::from_real(grid, maxed.into_iter().map(|v| v.powf(1.0 / r)).collect())
}

/// Largest grid for which the exact all-intervals Orlicz maximal function
/// is allowed (O(N^2) Luxemburg bisection calls).
pub const ORLICZ_EXACT_MAX_CELLS: usize = 1 << 11;

/// Orlicz maximal function `M_Phi f(x) = sup_{I ni x} ||f||_{Phi, I}`.
///
/// The exact uncentered/centered modes are restricted to
/// `N <= 2^11`; larger grids must use the dyadic two-shift mode, which is
/// approximate (flagged by its label).
pub fn orlicz_maximal(f: &StepSignal, phi: &YoungFn, mode: MaximalMode) -> Result<StepSignal> {
    if phi.as_scaled_power() == Some((1.0, 1.0)) {
        return Ok(maximal(f, mode)); // norms coincide with plain averages
    }
    let grid = *f.grid();
    let n = grid.cells();
    if matches!(mode, MaximalMode::Uncentered | MaximalMode::Centered) && n > ORLICZ_EXACT_MAX_CELLS
    {
        return Err(CoreError::InvalidParameter(format!(
            "exact Orlicz maximal mode is restricted to N <= {ORLICZ_EXACT_MAX_CELLS}; use the dyadic two-shift mode"
        )));
    }
    let mags = f.magnitudes();
    let norm_on = |arc: &CellArc| -> f64 {
        let vals: Vec<f64> = arc.cells(&grid).map(|c| mags[c]).collect();
        luxemburg_from_mags(&vals, phi)
    };
    let out: Vec<f64> = match mode {
        MaximalMode::Uncentered => {
            let mut m = vec![f64::NEG_INFINITY; n];
            for len in 1..=n {
                for start in 0..n {
                    let arc = CellArc { start, len };
                    let v = norm_on(&arc);
                    for c in arc.cells(&grid) {
                        if v > m[c] {
                            m[c] = v;
                        }
                    }
                    if len == n {
                        break; // one full-circle arc is enough
                    }
                }
            }
            m
        }
        MaximalMode::Centered => (0..n)
            .into_par_iter()
            .map(|x| {
                let mut best = f64::NEG_INFINITY;
                for len in 1..=n {
                    best = best.max(norm_on(&centered_arc(x, len, n)));
                }
                best
            })
            .collect(),
        MaximalMode::Dyadic(shift) => {
            let mut m = vec![f64::NEG_INFINITY; n];
            for q in crate::grid::enumerate_dyadic(&grid, shift) {
                let arc = q.arc(&grid);
                let v = norm_on(&arc);
                for c in arc.cells(&grid) {
                    if v > m[c] {
                        m[c] = v;
                    }
                }
            }
            m
        }
        MaximalMode::DyadicTwoShift => {
            let mut m = vec![f64::NEG_INFINITY; n];
            for shift in GridShift::ALL {
                for q in crate::grid::enumerate_dyadic(&grid, shift) {
                    let arc = q.arc(&grid);
                    let v = norm_on(&arc);
                    for c in arc.cells(&grid) {
                        if v > m[c] {
                            m[c] = v;
                        }
                    }
                }
            }
            m
        }
    };
    StepSignal::from_real(grid, out)
}

/// Weighted centered Orlicz maximal function
/// `M^c_{Phi,w} f(x) = sup_{I centered at x} ||f||^w_{Phi, I}`.
pub fn weighted_centered_orlicz_maximal(
    f: &StepSignal,
    phi: &YoungFn,
    w: &WeightProfile,
) -> Result<StepSignal> {
    let grid = *f.grid();
    let n = grid.cells();
    if n > ORLICZ_EXACT_MAX_CELLS {
        return Err(CoreError::InvalidParameter(format!(
            "weighted centered Orlicz maximal is restricted to N <= {ORLICZ_EXACT_MAX_CELLS}"
        )));
    }
    let out: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut best = f64::NEG_INFINITY;
            for len in 1..=n {
                let arc = centered_arc(x, len, n);
                let v = weighted_luxemburg_arc(f, &arc, phi, w).expect("positive weight");
                if v > best {
                    best = v;
                }
            }
            best
        })
        .collect();
    StepSignal::from_real(grid, out)
}
