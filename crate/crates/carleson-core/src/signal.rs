//! Step signals: functions constant on the cells of a dyadic grid.
//!
//! All integrals over the circle are exact sums `(1/N) * sum(values)`;
//! there is no quadrature error by construction. Real signals are the
//! imaginary-zero special case of complex ones.

use num_complex::Complex64;

use crate::grid::{CellArc, GridSpec};
use crate::{CoreError, Result};

/// A complex- or real-valued function constant on the `N` cells of the
/// circle.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSignal {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl StepSignal {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(CoreError::InvalidParameter(format!(
                "value count {} does not match grid cells {}",
                values.len(),
                grid.cells()
            )));
        }
        Ok(StepSignal { grid, values })
    }

    pub fn from_real(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let values = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        Self::new(grid, values)
    }

    /// Sample a function at cell midpoints.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.cells())
            .map(|i| Complex64::new(f(grid.midpoint(i)), 0.0))
            .collect();
        StepSignal { grid, values }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        StepSignal {
            grid,
            values: vec![Complex64::new(c, 0.0); grid.cells()],
        }
    }

    pub fn zero(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Real parts, rejecting signals with any nonzero imaginary part.
    pub fn as_real(&self) -> Result<Vec<f64>> {
        if !self.is_real() {
            return Err(CoreError::NonRealSignal);
        }
        Ok(self.values.iter().map(|v| v.re).collect())
    }

    /// Per-cell magnitudes `|f|`.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn real_part(&self) -> StepSignal {
        StepSignal {
            grid: self.grid,
            values: self.values.iter().map(|v| Complex64::new(v.re, 0.0)).collect(),
        }
    }

    pub fn imag_part(&self) -> StepSignal {
        StepSignal {
            grid: self.grid,
            values: self.values.iter().map(|v| Complex64::new(v.im, 0.0)).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> StepSignal {
        StepSignal {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> StepSignal {
        self.map(|v| v * c)
    }

    /// Pointwise restriction to an arc: `f * chi_I`.
    pub fn restricted(&self, arc: &CellArc) -> StepSignal {
        let mut values = vec![Complex64::ZERO; self.len()];
        for c in arc.cells(&self.grid) {
            values[c] = self.values[c];
        }
        StepSignal {
            grid: self.grid,
            values,
        }
    }

    /// Exact integral over the circle, `(1/N) * sum(values)`.
    pub fn integral(&self) -> Complex64 {
        let re = kahan_sum(self.values.iter().map(|v| v.re));
        let im = kahan_sum(self.values.iter().map(|v| v.im));
        Complex64::new(re, im) * self.grid.cell_width()
    }

    /// Mean of the signal over an arc.
    pub fn mean_on(&self, arc: &CellArc) -> Complex64 {
        let re = kahan_sum(arc.cells(&self.grid).map(|c| self.values[c].re));
        let im = kahan_sum(arc.cells(&self.grid).map(|c| self.values[c].im));
        Complex64::new(re, im) / arc.len as f64
    }

    /// Mean of `|f|` over an arc.
    pub fn mean_abs_on(&self, arc: &CellArc) -> f64 {
        kahan_sum(arc.cells(&self.grid).map(|c| self.values[c].norm())) / arc.len as f64
    }

    /// Discrete inner product `(1/N) * sum f * conj(g)`.
    pub fn inner(&self, other: &StepSignal) -> Complex64 {
        assert_eq!(self.grid, other.grid);
        let re = kahan_sum(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a * b.conj()).re),
        );
        let im = kahan_sum(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a * b.conj()).im),
        );
        Complex64::new(re, im) * self.grid.cell_width()
    }

    pub fn add(&self, other: &StepSignal) -> StepSignal {
        assert_eq!(self.grid, other.grid);
        StepSignal {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &StepSignal) -> StepSignal {
        assert_eq!(self.grid, other.grid);
        StepSignal {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Serialize as CSV with header `index,re,im`.
    ///
    /// Floats print in shortest round-trip form, so write/parse is exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,re,im\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{i},{},{}\n", v.re, v.im));
        }
        out
    }

    /// Parse the CSV produced by [`StepSignal::to_csv`]. The grid is implied
    /// by the row count, which must be a power of two in the supported
    /// range.
    pub fn from_csv(text: &str) -> Result<StepSignal> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if lineno == 0 && line.starts_with("index") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(CoreError::Parse {
                    pos: lineno + 1,
                    msg: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let idx: usize = fields[0].trim().parse().map_err(|e| CoreError::Parse {
                pos: lineno + 1,
                msg: format!("bad index: {e}"),
            })?;
            if idx != values.len() {
                return Err(CoreError::Parse {
                    pos: lineno + 1,
                    msg: format!("non-contiguous index {idx}, expected {}", values.len()),
                });
            }
            let re: f64 = fields[1].trim().parse().map_err(|e| CoreError::Parse {
                pos: lineno + 1,
                msg: format!("bad re: {e}"),
            })?;
            let im: f64 = fields[2].trim().parse().map_err(|e| CoreError::Parse {
                pos: lineno + 1,
                msg: format!("bad im: {e}"),
            })?;
            values.push(Complex64::new(re, im));
        }
        let grid = GridSpec::with_cells(values.len()).map_err(|_| CoreError::InvalidGrid(
            format!("row count {} is not a supported power of two", values.len()),
        ))?;
        StepSignal::new(grid, values)
    }
}

/// Compensated (Kahan) summation; keeps long prefix sums accurate for
/// grids at the large end of the supported range.
pub fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Prefix sums `P[0] = 0, P[i] = v[0] + .. + v[i-1]` with compensated
/// accumulation; arcs then average in O(1).
#[derive(Debug, Clone)]
pub struct PrefixSums {
    prefix: Vec<f64>,
}

impl PrefixSums {
    pub fn new(values: &[f64]) -> Self {
        let mut prefix = Vec::with_capacity(values.len() + 1);
        prefix.push(0.0);
        let mut sum = 0.0;
        let mut c = 0.0;
        for &v in values {
            let y = v - c;
            let t = sum + y;
            c = (t - sum) - y;
            sum = t;
            prefix.push(sum);
        }
        PrefixSums { prefix }
    }

    pub fn len(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum over the wrapped arc.
    pub fn arc_sum(&self, arc: &CellArc) -> f64 {
        let n = self.len();
        let start = arc.start % n;
        let end = start + arc.len;
        if end <= n {
            self.prefix[end] - self.prefix[start]
        } else {
            (self.prefix[n] - self.prefix[start]) + self.prefix[end - n]
        }
    }

    pub fn arc_mean(&self, arc: &CellArc) -> f64 {
        self.arc_sum(arc) / arc.len as f64
    }

    pub fn total(&self) -> f64 {
        self.prefix[self.len()]
    }
}
