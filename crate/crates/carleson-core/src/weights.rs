//! Muckenhoupt weights on the circle: exact `A_p`, `A_1` and Fujii–Wilson
//! `A_inf` constants, dual weights, the `r_w` exponent, and the weight
//! families used for sharpness probes.
//!
//! A weight is a strictly positive real step signal. Interval averages are
//! exact prefix-sum differences; the `A_1` infimum uses a sparse range-min
//! table. Suprema default to all cell-aligned intervals (the closest
//! discrete reading of "all cubes"); a dyadic-only scope over both grid
//! shifts is available for speed and is flagged in reports.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::grid::{CellArc, GridShift, GridSpec};
use crate::signal::{PrefixSums, StepSignal};
use crate::{CoreError, Result};

/// Scope of an interval supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalScope {
    /// All cell-aligned arcs, O(N^2) of them.
    AllIntervals,
    /// Dyadic intervals of both grid shifts only (flagged approximate).
    Dyadic,
}

impl IntervalScope {
    pub fn label(&self) -> &'static str {
        match self {
            IntervalScope::AllIntervals => "all",
            IntervalScope::Dyadic => "dyadic",
        }
    }
}

/// Positivity floor enforced at construction.
pub const WEIGHT_FLOOR: f64 = 1e-300;

/// A strictly positive weight with cached prefix sums; dual-power prefix
/// sums are built once per exponent (write-once, then read-only).
#[derive(Debug)]
pub struct WeightProfile {
    grid: GridSpec,
    values: Vec<f64>,
    prefix: PrefixSums,
    dual_prefixes: RwLock<HashMap<u64, Arc<PrefixSums>>>,
    min_table: OnceLock<RangeMin>,
}

impl Clone for WeightProfile {
    fn clone(&self) -> Self {
        WeightProfile {
            grid: self.grid,
            values: self.values.clone(),
            prefix: self.prefix.clone(),
            dual_prefixes: RwLock::new(HashMap::new()),
            min_table: OnceLock::new(),
        }
    }
}

impl WeightProfile {
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(CoreError::InvalidParameter(format!(
                "weight length {} does not match grid cells {}",
                values.len(),
                grid.cells()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(CoreError::InvalidParameter(
                "weights must be strictly positive and finite".into(),
            ));
        }
        let values: Vec<f64> = values.into_iter().map(|v| v.max(WEIGHT_FLOOR)).collect();
        let prefix = PrefixSums::new(&values);
        Ok(WeightProfile {
            grid,
            values,
            prefix,
            dual_prefixes: RwLock::new(HashMap::new()),
            min_table: OnceLock::new(),
        })
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self::from_values(grid, vec![c; grid.cells()]).expect("constant weight")
    }

    pub fn from_signal(f: &StepSignal) -> Result<Self> {
        Self::from_values(*f.grid(), f.as_real()?)
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn signal(&self) -> StepSignal {
        StepSignal::from_real(self.grid, self.values.clone()).expect("weight signal")
    }

    /// Average of `w` over an arc (exact prefix-sum difference).
    pub fn avg_on(&self, arc: &CellArc) -> f64 {
        self.prefix.arc_mean(arc)
    }

    /// `w(Q) = int_Q w`.
    pub fn integral_on(&self, arc: &CellArc) -> f64 {
        self.prefix.arc_sum(arc) * self.grid.cell_width()
    }

    /// Minimum of `w` over an arc, O(1) after the first call.
    pub fn min_on(&self, arc: &CellArc) -> f64 {
        let table = self.min_table.get_or_init(|| RangeMin::new(&self.values));
        table.query(arc.start, arc.len)
    }

    /// Prefix sums of `w^{-1/(p-1)}`, cached per `p`.
    pub fn dual_prefix(&self, p: f64) -> Arc<PrefixSums> {
        let key = p.to_bits();
        if let Some(found) = self.dual_prefixes.read().unwrap().get(&key) {
            return Arc::clone(found);
        }
        let expo = -1.0 / (p - 1.0);
        let dual: Vec<f64> = self.values.iter().map(|v| v.powf(expo)).collect();
        let entry = Arc::new(PrefixSums::new(&dual));
        let mut guard = self.dual_prefixes.write().unwrap();
        Arc::clone(guard.entry(key).or_insert(entry))
    }

    /// The dual weight `sigma = w^{-1/(p-1)}` as its own profile.
    pub fn dual_weight(&self, p: f64) -> Result<WeightProfile> {
        if !(p > 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "dual weight needs p > 1, got {p}"
            )));
        }
        let expo = -1.0 / (p - 1.0);
        Self::from_values(self.grid, self.values.iter().map(|v| v.powf(expo)).collect())
    }
}

/// Sparse-table range minimum over the doubled array (wrapping queries).
#[derive(Debug)]
struct RangeMin {
    rows: Vec<Vec<f64>>,
}

impl RangeMin {
    fn new(values: &[f64]) -> Self {
        let n = values.len();
        let mut doubled = Vec::with_capacity(2 * n);
        doubled.extend_from_slice(values);
        doubled.extend_from_slice(values);
        let levels = (usize::BITS - n.leading_zeros()) as usize + 1;
        let mut rows = vec![doubled];
        for k in 1..levels {
            let half = 1usize << (k - 1);
            let prev = &rows[k - 1];
            if prev.len() <= half {
                break;
            }
            let row: Vec<f64> = (0..(prev.len() - half))
                .map(|i| prev[i].min(prev[i + half]))
                .collect();
            rows.push(row);
        }
        RangeMin { rows }
    }

    fn query(&self, start: usize, len: usize) -> f64 {
        debug_assert!(len >= 1);
        let k = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let block = 1usize << k;
        let row = &self.rows[k];
        row[start].min(row[start + len - block])
    }
}

/// Supremum value together with an interval attaining it.
#[derive(Debug, Clone, Copy)]
pub struct ConstantResult {
    pub value: f64,
    pub argmax: CellArc,
}

fn scope_arcs(grid: &GridSpec, scope: IntervalScope) -> Vec<CellArc> {
    let n = grid.cells();
    match scope {
        IntervalScope::AllIntervals => {
            let mut arcs = Vec::with_capacity(n * (n - 1) + 1);
            for len in 1..n {
                for start in 0..n {
                    arcs.push(CellArc { start, len });
                }
            }
            arcs.push(CellArc { start: 0, len: n });
            arcs
        }
        IntervalScope::Dyadic => {
            let mut arcs = Vec::new();
            for shift in GridShift::ALL {
                for q in crate::grid::enumerate_dyadic(grid, shift) {
                    let arc = q.arc(grid);
                    if shift == GridShift::Third && arc.is_full(grid) {
                        continue; // level 0 is the same circle in both grids
                    }
                    arcs.push(arc);
                }
            }
            arcs
        }
    }
}

/// `[w]_{A_p} = sup_Q (avg_Q w) (avg_Q w^{-1/(p-1)})^{p-1}` over the scope.
pub fn ap_constant(w: &WeightProfile, p: f64, scope: IntervalScope) -> Result<ConstantResult> {
    if !(p > 1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "A_p constant needs p > 1, got {p}"
        )));
    }
    let dual = w.dual_prefix(p);
    let grid = *w.grid();
    let pm1 = p - 1.0;
    let mut best = ConstantResult {
        value: f64::NEG_INFINITY,
        argmax: CellArc { start: 0, len: 1 },
    };
    for arc in scope_arcs(&grid, scope) {
        let a = w.avg_on(&arc);
        let s = dual.arc_mean(&arc);
        let v = if pm1 == 1.0 { a * s } else { a * s.powf(pm1) };
        if v > best.value {
            best = ConstantResult {
                value: v,
                argmax: arc,
            };
        }
    }
    Ok(best)
}

/// `[w]_{A_1} = sup_Q (avg_Q w) / (min_Q w)` over the scope.
pub fn a1_constant(w: &WeightProfile, scope: IntervalScope) -> ConstantResult {
    let grid = *w.grid();
    let mut best = ConstantResult {
        value: f64::NEG_INFINITY,
        argmax: CellArc { start: 0, len: 1 },
    };
    for arc in scope_arcs(&grid, scope) {
        let v = w.avg_on(&arc) / w.min_on(&arc);
        if v > best.value {
            best = ConstantResult {
                value: v,
                argmax: arc,
            };
        }
    }
    best
}

/// Sum over positions of the restricted uncentered maximal function
/// `max { avg v[a..=b] : a <= x <= b }`, treating the slice as a line.
///
/// For each left endpoint `a`, suffix maxima of `avg(a..=b)` over `b` give
/// `max_{b >= x} avg(a..=b)` for every `x` in one backward pass; O(L^2)
/// overall.
fn restricted_maximal_sum(vals: &[f64]) -> f64 {
    let l = vals.len();
    let mut prefix = Vec::with_capacity(l + 1);
    prefix.push(0.0);
    for &v in vals {
        prefix.push(prefix.last().unwrap() + v);
    }
    let mut m = vec![f64::NEG_INFINITY; l];
    let mut g = vec![0.0f64; l];
    for a in 0..l {
        let mut running = f64::NEG_INFINITY;
        for b in (a..l).rev() {
            let avg = (prefix[b + 1] - prefix[a]) / (b + 1 - a) as f64;
            if avg > running {
                running = avg;
            }
            g[b] = running;
        }
        for x in a..l {
            if g[x] > m[x] {
                m[x] = g[x];
            }
        }
    }
    m.iter().sum()
}

/// Fujii–Wilson constant
/// `[w]_{A_inf} = sup_Q (1/w(Q)) int_Q M(w chi_Q)`, with the inner maximal
/// function over subintervals of `Q`. Cost is O(|Q|^2) per interval, so the
/// all-intervals scope is O(N^4) and intended for N <= 512.
pub fn ainfty_constant(w: &WeightProfile, scope: IntervalScope) -> ConstantResult {
    let grid = *w.grid();
    let mut best = ConstantResult {
        value: f64::NEG_INFINITY,
        argmax: CellArc { start: 0, len: 1 },
    };
    for arc in scope_arcs(&grid, scope) {
        let vals: Vec<f64> = arc.cells(&grid).map(|c| w.values()[c]).collect();
        let total: f64 = vals.iter().sum();
        let v = restricted_maximal_sum(&vals) / total;
        if v > best.value {
            best = ConstantResult {
                value: v,
                argmax: arc,
            };
        }
    }
    best
}

/// `r_w = 1 + 1/(4 [w]_{A_1})`; always in (1, 5/4].
pub fn rw_exponent(w: &WeightProfile, scope: IntervalScope) -> f64 {
    1.0 + 1.0 / (4.0 * a1_constant(w, scope).value)
}

/// One row of the openness probe.
#[derive(Debug, Clone, Copy)]
pub struct OpennessRow {
    pub kappa: f64,
    pub eps: f64,
    pub p_minus_eps: f64,
    /// `[w]_{A_{p-eps}} / [w]_{A_p}`.
    pub ratio: f64,
}

/// Probe the self-improvement step: with `eps = kappa [w]_{A_p}^{1-p'}`,
/// report `[w]_{A_{p-eps}} / [w]_{A_p}`.
pub fn openness_probe(
    w: &WeightProfile,
    p: f64,
    kappas: &[f64],
    scope: IntervalScope,
) -> Result<Vec<OpennessRow>> {
    let base = ap_constant(w, p, scope)?.value;
    let pprime = p / (p - 1.0);
    let mut rows = Vec::new();
    for &kappa in kappas {
        let eps = kappa * base.powf(1.0 - pprime);
        if eps >= p - 1.0 {
            continue;
        }
        let reduced = ap_constant(w, p - eps, scope)?.value;
        rows.push(OpennessRow {
            kappa,
            eps,
            p_minus_eps: p - eps,
            ratio: reduced / base,
        });
    }
    Ok(rows)
}

/// The `A_inf` variant of the openness probe: `eps = kappa / [sigma]_{A_inf}`.
pub fn openness_probe_ainfty(
    w: &WeightProfile,
    p: f64,
    kappas: &[f64],
    scope: IntervalScope,
) -> Result<Vec<OpennessRow>> {
    let base = ap_constant(w, p, scope)?.value;
    let sigma = w.dual_weight(p)?;
    let sigma_ainf = ainfty_constant(&sigma, scope).value;
    let mut rows = Vec::new();
    for &kappa in kappas {
        let eps = kappa / sigma_ainf;
        if eps >= p - 1.0 {
            continue;
        }
        let reduced = ap_constant(w, p - eps, scope)?.value;
        rows.push(OpennessRow {
            kappa,
            eps,
            p_minus_eps: p - eps,
            ratio: reduced / base,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Weight families
// ---------------------------------------------------------------------------

/// Parseable weight families for sharpness probes.
///
/// Grammar: `power:alpha[@x0]`, `twovalue:a,b[,split]`,
/// `pwpower:a1,a2,...`, `randa1:seed,target`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFamily {
    /// `w(x) = d(x, x0)^alpha`, `alpha > -1`, singular cell integrated
    /// exactly.
    Power { alpha: f64, x0: f64 },
    /// Equal segments, segment `j` carrying `(x - s_j)^{alpha_j}` from its
    /// left endpoint.
    PiecewisePower { alphas: Vec<f64> },
    /// `a` on `[0, split)`, `b` on `[split, 1)`.
    TwoValue { a: f64, b: f64, split: f64 },
    /// `(M g)^delta` for seeded random spikes `g`, with `delta` tuned so
    /// `[w]_{A_1}` lands near `target`.
    RandomA1 { seed: u64, target: f64 },
}

impl std::fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightFamily::Power { alpha, x0 } => {
                if *x0 == 0.0 {
                    write!(f, "power:{alpha}")
                } else {
                    write!(f, "power:{alpha}@{x0}")
                }
            }
            WeightFamily::PiecewisePower { alphas } => {
                let list: Vec<String> = alphas.iter().map(|a| a.to_string()).collect();
                write!(f, "pwpower:{}", list.join(","))
            }
            WeightFamily::TwoValue { a, b, split } => {
                if *split == 0.5 {
                    write!(f, "twovalue:{a},{b}")
                } else {
                    write!(f, "twovalue:{a},{b},{split}")
                }
            }
            WeightFamily::RandomA1 { seed, target } => write!(f, "randa1:{seed},{target}"),
        }
    }
}

impl std::str::FromStr for WeightFamily {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: String| CoreError::Parse { pos: 0, msg };
        if let Some(rest) = s.strip_prefix("power:") {
            let (alpha_str, x0_str) = match rest.split_once('@') {
                Some((a, x)) => (a, Some(x)),
                None => (rest, None),
            };
            let alpha: f64 = alpha_str
                .parse()
                .map_err(|e| bad(format!("bad power exponent: {e}")))?;
            if alpha <= -1.0 {
                return Err(bad(format!("power exponent must exceed -1, got {alpha}")));
            }
            let x0 = match x0_str {
                Some(x) => x.parse().map_err(|e| bad(format!("bad base point: {e}")))?,
                None => 0.0,
            };
            return Ok(WeightFamily::Power { alpha, x0 });
        }
        if let Some(rest) = s.strip_prefix("twovalue:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() < 2 || parts.len() > 3 {
                return Err(bad("twovalue needs a,b[,split]".into()));
            }
            let a: f64 = parts[0].parse().map_err(|e| bad(format!("bad a: {e}")))?;
            let b: f64 = parts[1].parse().map_err(|e| bad(format!("bad b: {e}")))?;
            let split: f64 = if parts.len() == 3 {
                parts[2].parse().map_err(|e| bad(format!("bad split: {e}")))?
            } else {
                0.5
            };
            if a <= 0.0 || b <= 0.0 || !(0.0 < split && split < 1.0) {
                return Err(bad("twovalue needs positive values and split in (0,1)".into()));
            }
            return Ok(WeightFamily::TwoValue { a, b, split });
        }
        if let Some(rest) = s.strip_prefix("pwpower:") {
            let alphas: Result<Vec<f64>> = rest
                .split(',')
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| bad(format!("bad segment exponent: {e}")))
                })
                .collect();
            let alphas = alphas?;
            if alphas.is_empty() || alphas.iter().any(|a| *a <= -1.0) {
                return Err(bad("pwpower needs exponents > -1".into()));
            }
            return Ok(WeightFamily::PiecewisePower { alphas });
        }
        if let Some(rest) = s.strip_prefix("randa1:") {
            let (seed_str, target_str) = rest
                .split_once(',')
                .ok_or_else(|| bad("randa1 needs seed,target".into()))?;
            let seed: u64 = seed_str.parse().map_err(|e| bad(format!("bad seed: {e}")))?;
            let target: f64 = target_str
                .parse()
                .map_err(|e| bad(format!("bad target: {e}")))?;
            if target < 1.0 {
                return Err(bad("randa1 target must be >= 1".into()));
            }
            return Ok(WeightFamily::RandomA1 { seed, target });
        }
        Err(bad(format!("unknown weight family `{s}`")))
    }
}

/// Exact `int_0^u d(s,0)^alpha ds` on the circle for `u` in `[0,1]`.
fn power_antiderivative(u: f64, alpha: f64) -> f64 {
    let f = |v: f64| v.powf(alpha + 1.0) / (alpha + 1.0);
    if u <= 0.5 {
        f(u)
    } else {
        2.0 * f(0.5) - f(1.0 - u)
    }
}

impl WeightFamily {
    pub fn instantiate(&self, grid: GridSpec) -> Result<WeightProfile> {
        let n = grid.cells();
        let h = grid.cell_width();
        match self {
            WeightFamily::Power { alpha, x0 } => {
                let mut values = Vec::with_capacity(n);
                for i in 0..n {
                    let u0 = (i as f64 * h - x0).rem_euclid(1.0);
                    let u1 = u0 + h;
                    let integral = if u1 <= 1.0 {
                        power_antiderivative(u1, *alpha) - power_antiderivative(u0, *alpha)
                    } else {
                        power_antiderivative(1.0, *alpha) - power_antiderivative(u0, *alpha)
                            + power_antiderivative(u1 - 1.0, *alpha)
                    };
                    values.push(integral / h);
                }
                WeightProfile::from_values(grid, values)
            }
            WeightFamily::PiecewisePower { alphas } => {
                let k = alphas.len();
                if n % k != 0 {
                    return Err(CoreError::InvalidParameter(format!(
                        "pwpower with {k} segments needs {k} | N = {n}"
                    )));
                }
                let seg_cells = n / k;
                let mut values = Vec::with_capacity(n);
                for (j, &alpha) in alphas.iter().enumerate() {
                    for c in 0..seg_cells {
                        // u is the offset from the segment start.
                        let u0 = c as f64 * h;
                        let u1 = u0 + h;
                        let f = |v: f64| v.powf(alpha + 1.0) / (alpha + 1.0);
                        values.push((f(u1) - f(u0)) / h);
                        let _ = j;
                    }
                }
                WeightProfile::from_values(grid, values)
            }
            WeightFamily::TwoValue { a, b, split } => {
                let values = (0..n)
                    .map(|i| {
                        let mid = grid.midpoint(i);
                        if mid < *split {
                            *a
                        } else {
                            *b
                        }
                    })
                    .collect();
                WeightProfile::from_values(grid, values)
            }
            WeightFamily::RandomA1 { seed, target } => random_a1(grid, *seed, *target),
        }
    }
}

/// Local uncentered maximal function of a nonnegative sequence over all
/// (non-wrapping beyond one lap) circular arcs, O(N^2).
fn circle_maximal(vals: &[f64]) -> Vec<f64> {
    let n = vals.len();
    let prefix = PrefixSums::new(vals);
    let mut m = vec![f64::NEG_INFINITY; n];
    for start in 0..n {
        let mut best = f64::NEG_INFINITY;
        let mut g = vec![0.0f64; n];
        for off in (0..n).rev() {
            let arc = CellArc {
                start,
                len: off + 1,
            };
            let avg = prefix.arc_sum(&arc) / (off + 1) as f64;
            if avg > best {
                best = avg;
            }
            g[off] = best;
        }
        for off in 0..n {
            let x = (start + off) % n;
            if g[off] > m[x] {
                m[x] = g[off];
            }
        }
    }
    m
}

fn random_a1(grid: GridSpec, seed: u64, target: f64) -> Result<WeightProfile> {
    let n = grid.cells();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![0.0f64; n];
    let spikes = 3 + (n / 64).min(8);
    for _ in 0..spikes {
        let at = rng.random_range(0..n);
        g[at] += rng.random_range(1.0..10.0);
    }
    let m = circle_maximal(&g);
    let build = |delta: f64| -> Result<WeightProfile> {
        WeightProfile::from_values(grid, m.iter().map(|v| v.powf(delta)).collect())
    };
    // [w]_{A_1} of (Mg)^delta grows with delta; bisect to the target.
    let mut lo = 0.02f64;
    let mut hi = 0.98f64;
    if a1_constant(&build(hi)?, IntervalScope::Dyadic).value < target {
        return build(hi);
    }
    if a1_constant(&build(lo)?, IntervalScope::Dyadic).value > target {
        return build(lo);
    }
    for _ in 0..24 {
        let mid = 0.5 * (lo + hi);
        if a1_constant(&build(mid)?, IntervalScope::Dyadic).value < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    build(0.5 * (lo + hi))
}
