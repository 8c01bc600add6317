//! Dyadic grids on the periodic unit circle.
//!
//! The circle `[0,1)` is split into `N = 2^K` half-open cells,
//! cell `i` covering `[i/N, (i+1)/N)`. A general dyadic grid is the plain
//! grid or the one-third shifted grid; two shifts suffice for the
//! one-third trick in dimension one, so suprema over all dyadic grids are
//! realized as a max over [`GridShift::Zero`] and [`GridShift::Third`].

use crate::{CoreError, Result};

/// Grid geometry: `N = 2^K` cells of width `h = 1/N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    levels: u32,
    cells: usize,
}

impl GridSpec {
    pub const MIN_CELLS: usize = 8;
    pub const MAX_CELLS: usize = 1 << 16;

    /// Grid with `2^k` cells. `k` must give `8 <= N <= 2^16`.
    pub fn with_levels(k: u32) -> Result<Self> {
        let n = 1usize
            .checked_shl(k)
            .ok_or_else(|| CoreError::InvalidGrid(format!("level count {k} overflows")))?;
        Self::with_cells(n)
    }

    /// Grid with `n` cells; `n` must be a power of two in `[8, 2^16]`.
    pub fn with_cells(n: usize) -> Result<Self> {
        if !n.is_power_of_two() || !(Self::MIN_CELLS..=Self::MAX_CELLS).contains(&n) {
            return Err(CoreError::InvalidGrid(format!(
                "cell count must be a power of two in [{}, {}], got {n}",
                Self::MIN_CELLS,
                Self::MAX_CELLS
            )));
        }
        Ok(GridSpec {
            levels: n.trailing_zeros(),
            cells: n,
        })
    }

    /// Number of dyadic levels `K` (so `N = 2^K`).
    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Number of cells `N`.
    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Cell width `h = 1/N`, an exact dyadic rational.
    pub fn cell_width(&self) -> f64 {
        1.0 / self.cells as f64
    }

    /// Midpoint of cell `i`.
    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.cells as f64
    }

    /// Cell index containing the point `x` (taken mod 1).
    pub fn cell_of(&self, x: f64) -> usize {
        let y = x.rem_euclid(1.0);
        ((y * self.cells as f64) as usize).min(self.cells - 1)
    }

    /// Distance on the circle between two points.
    pub fn circle_distance(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(1.0);
        d.min(1.0 - d)
    }
}

/// Supported grid shifts: the plain grid and the one-third shifted grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridShift {
    Zero,
    Third,
}

impl GridShift {
    pub const ALL: [GridShift; 2] = [GridShift::Zero, GridShift::Third];

    /// Shift in whole cells: `0` or `floor(N/3)`.
    pub fn offset_cells(&self, grid: &GridSpec) -> usize {
        match self {
            GridShift::Zero => 0,
            GridShift::Third => grid.cells() / 3,
        }
    }
}

/// A periodic run of cells: `len` cells starting at `start`, wrapping mod N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellArc {
    pub start: usize,
    pub len: usize,
}

impl CellArc {
    pub fn new(start: usize, len: usize, grid: &GridSpec) -> Result<Self> {
        let n = grid.cells();
        if len == 0 || len > n {
            return Err(CoreError::InvalidParameter(format!(
                "arc length must be in [1, {n}], got {len}"
            )));
        }
        Ok(CellArc {
            start: start % n,
            len,
        })
    }

    /// Measure `|I| = len / N`.
    pub fn measure(&self, grid: &GridSpec) -> f64 {
        self.len as f64 * grid.cell_width()
    }

    /// Iterate over the covered cell indices in circular order.
    pub fn cells<'a>(&'a self, grid: &'a GridSpec) -> impl Iterator<Item = usize> + 'a {
        let n = grid.cells();
        (0..self.len).map(move |k| (self.start + k) % n)
    }

    pub fn contains(&self, cell: usize, grid: &GridSpec) -> bool {
        let n = grid.cells();
        let rel = (cell + n - self.start % n) % n;
        rel < self.len
    }

    /// Concentric dilation by `2^m`, saturating at the full circle.
    ///
    /// Odd padding puts the extra cell on the left (left-of-center
    /// convention).
    pub fn dilate_pow2(&self, m: u32, grid: &GridSpec) -> CellArc {
        let n = grid.cells();
        let len = self.len.saturating_shl(m).min(n);
        let pad = len - self.len;
        let left = pad.div_ceil(2);
        CellArc {
            start: (self.start + n - left % n) % n,
            len,
        }
    }

    /// Whether the arc covers the entire circle.
    pub fn is_full(&self, grid: &GridSpec) -> bool {
        self.len == grid.cells()
    }
}

trait SaturatingShl {
    fn saturating_shl(self, m: u32) -> Self;
}

impl SaturatingShl for usize {
    fn saturating_shl(self, m: u32) -> usize {
        self.checked_shl(m).unwrap_or(usize::MAX)
    }
}

/// A dyadic interval of a (possibly shifted) grid: level `j` has `2^j`
/// intervals of length `2^-j`, interval `i` covering cells
/// `[shift + i*N/2^j, shift + (i+1)*N/2^j)` mod N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    pub shift: GridShift,
    pub level: u32,
    pub index: usize,
}

impl DyadicInterval {
    pub fn new(shift: GridShift, level: u32, index: usize, grid: &GridSpec) -> Result<Self> {
        if level > grid.levels() {
            return Err(CoreError::InvalidParameter(format!(
                "level {level} exceeds grid depth {}",
                grid.levels()
            )));
        }
        if index >= (1usize << level) {
            return Err(CoreError::InvalidParameter(format!(
                "index {index} out of range for level {level}"
            )));
        }
        Ok(DyadicInterval {
            shift,
            level,
            index,
        })
    }

    /// The full circle as the level-0 interval of the plain grid.
    pub fn whole_circle() -> Self {
        DyadicInterval {
            shift: GridShift::Zero,
            level: 0,
            index: 0,
        }
    }

    /// Number of cells covered.
    pub fn len_cells(&self, grid: &GridSpec) -> usize {
        grid.cells() >> self.level
    }

    /// Measure `|Q| = 2^-level`.
    pub fn measure(&self) -> f64 {
        (0.5f64).powi(self.level as i32)
    }

    /// Underlying cell arc.
    pub fn arc(&self, grid: &GridSpec) -> CellArc {
        let n = grid.cells();
        let len = self.len_cells(grid);
        CellArc {
            start: (self.shift.offset_cells(grid) + self.index * len) % n,
            len,
        }
    }

    /// The concentric double `2Q` as a cell arc (periodic wrap).
    pub fn doubled(&self, grid: &GridSpec) -> CellArc {
        self.arc(grid).dilate_pow2(1, grid)
    }

    /// The two dyadic children, or none at the finest level.
    pub fn children(&self, grid: &GridSpec) -> Option<[DyadicInterval; 2]> {
        if self.level >= grid.levels() {
            return None;
        }
        let l = self.level + 1;
        Some([
            DyadicInterval {
                shift: self.shift,
                level: l,
                index: 2 * self.index,
            },
            DyadicInterval {
                shift: self.shift,
                level: l,
                index: 2 * self.index + 1,
            },
        ])
    }

    /// Nested-or-disjoint comparison within one grid.
    pub fn relates_to(&self, other: &DyadicInterval) -> DyadicRelation {
        assert_eq!(self.shift, other.shift, "intervals from different grids");
        let (coarse, fine, swapped) = if self.level <= other.level {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let drop = fine.level - coarse.level;
        if (fine.index >> drop) == coarse.index {
            if self.level == other.level {
                DyadicRelation::Equal
            } else if swapped {
                // self is the finer interval
                DyadicRelation::ContainedIn
            } else {
                DyadicRelation::Contains
            }
        } else {
            DyadicRelation::Disjoint
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DyadicRelation {
    Equal,
    Contains,
    ContainedIn,
    Disjoint,
}

/// All `2N - 1` dyadic intervals of the shifted grid, levels `0..=K`,
/// coarse to fine.
pub fn enumerate_dyadic(grid: &GridSpec, shift: GridShift) -> Vec<DyadicInterval> {
    let mut out = Vec::with_capacity(2 * grid.cells() - 1);
    for level in 0..=grid.levels() {
        for index in 0..(1usize << level) {
            out.push(DyadicInterval {
                shift,
                level,
                index,
            });
        }
    }
    out
}
