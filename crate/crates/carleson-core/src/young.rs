//! Young functions and Orlicz-norm machinery.
//!
//! The catalogue covers every growth class the weighted theory of
//! maximally modulated singular integrals needs: the identity, powers,
//! `t log^lambda(e+t)`, the Antonov function
//! `t log(e+t) logloglog(e^{e^e}+t)`, its triple-log companion, plus
//! scaling, powering and the star construction
//! `Psi*(t) = t + t int_1^t Psi(u) u^-2 du`. Evaluation is available in
//! direct and in log space; log space keeps `B_p` integrands finite far
//! beyond the f64 range.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::grid::{CellArc, DyadicInterval};
use crate::signal::{kahan_sum, StepSignal};
use crate::weights::WeightProfile;
use crate::{CoreError, Result};

/// `e^{e^e}`, the shift inside the triple logarithm.
pub const E3: f64 = 3814279.1047602203; // exp(exp(e))

fn lll(t: f64) -> f64 {
    ((E3 + t).ln().ln()).ln()
}

/// `ln(ln(ln(e^{e^e} + t)))` from `L = ln t`, stable for huge `L`.
fn lll_from_ln(ln_t: f64) -> f64 {
    let z1 = if ln_t > 40.0 {
        ln_t // E3 / e^L < 1e-11 here
    } else {
        (E3 + ln_t.exp()).ln()
    };
    z1.ln().ln()
}

/// `ln(e + t)` from `L = ln t`.
fn lep_from_ln(ln_t: f64) -> f64 {
    if ln_t > 40.0 {
        ln_t
    } else {
        (std::f64::consts::E + ln_t.exp()).ln()
    }
}

/// Parseable description of a Young function.
///
/// Grammar: `id`, `pow:r`, `llogl:lambda`, `antonov`, `triplelog`,
/// `star(<spec>)`, `powof(<spec>,q)`, `scaled(c,<spec>)`.
#[derive(Debug, Clone, PartialEq)]
pub enum YoungSpec {
    Identity,
    Power(f64),
    LLogL(f64),
    Antonov,
    TripleLog,
    Scaled(f64, Box<YoungSpec>),
    PowerOf(Box<YoungSpec>, f64),
    Star(Box<YoungSpec>),
}

impl fmt::Display for YoungSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YoungSpec::Identity => write!(f, "id"),
            YoungSpec::Power(r) => write!(f, "pow:{r}"),
            YoungSpec::LLogL(l) => write!(f, "llogl:{l}"),
            YoungSpec::Antonov => write!(f, "antonov"),
            YoungSpec::TripleLog => write!(f, "triplelog"),
            YoungSpec::Scaled(c, inner) => write!(f, "scaled({c},{inner})"),
            YoungSpec::PowerOf(inner, q) => write!(f, "powof({inner},{q})"),
            YoungSpec::Star(inner) => write!(f, "star({inner})"),
        }
    }
}

impl std::str::FromStr for YoungSpec {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            text: s.trim(),
            pos: 0,
        };
        let spec = p.parse_spec()?;
        p.skip_ws();
        if p.pos != p.text.len() {
            return Err(CoreError::Parse {
                pos: p.pos,
                msg: format!("trailing input in young spec `{s}`"),
            });
        }
        Ok(spec)
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.text[self.pos..].starts_with(' ') {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(CoreError::Parse {
                pos: self.pos,
                msg: format!("expected `{tok}`"),
            })
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let end = rest
            .char_indices()
            .find(|(_, c)| matches!(c, ',' | ')' | ' '))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        let tok = &rest[..end];
        let v: f64 = tok.parse().map_err(|e| CoreError::Parse {
            pos: self.pos,
            msg: format!("bad number `{tok}`: {e}"),
        })?;
        self.pos += end;
        Ok(v)
    }

    fn parse_spec(&mut self) -> Result<YoungSpec> {
        self.skip_ws();
        if self.eat("star(") {
            let inner = self.parse_spec()?;
            self.expect(")")?;
            return Ok(YoungSpec::Star(Box::new(inner)));
        }
        if self.eat("powof(") {
            let inner = self.parse_spec()?;
            self.expect(",")?;
            let q = self.number()?;
            self.expect(")")?;
            return Ok(YoungSpec::PowerOf(Box::new(inner), q));
        }
        if self.eat("scaled(") {
            let c = self.number()?;
            self.expect(",")?;
            let inner = self.parse_spec()?;
            self.expect(")")?;
            return Ok(YoungSpec::Scaled(c, Box::new(inner)));
        }
        if self.eat("pow:") {
            return Ok(YoungSpec::Power(self.number()?));
        }
        if self.eat("llogl:") {
            return Ok(YoungSpec::LLogL(self.number()?));
        }
        if self.eat("id") {
            return Ok(YoungSpec::Identity);
        }
        if self.eat("antonov") {
            return Ok(YoungSpec::Antonov);
        }
        if self.eat("triplelog") {
            return Ok(YoungSpec::TripleLog);
        }
        Err(CoreError::Parse {
            pos: self.pos,
            msg: "expected a young-function spec".into(),
        })
    }
}

/// Anything with a Young-function shape that a Luxemburg norm can use.
pub trait YoungLike: Sync {
    fn eval(&self, t: f64) -> f64;
}

/// Cached cumulative integral `I(s) = int_0^s Psi(e^u) e^-u du` (that is,
/// `int_1^t Psi(u) u^-2 du` with `t = e^s`), stored as `ln I` on a uniform
/// `s`-grid. Queries integrate the partial panel exactly, so no
/// interpolation error enters.
#[derive(Debug, Clone)]
struct StarTable {
    step: f64,
    ln_cum: Vec<f64>,
}

const STAR_STEP: f64 = 0.25;
const STAR_MAX: f64 = 760.0;

/// Composite-Simpson panel integral of `exp(ln_g(u))` over `[a, b]` in log
/// space; immune to overflow of the integrand.
fn log_panel(ln_g: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const M: usize = 16; // subintervals; error ~ (h^4), plenty at width 0.25
    let h = (b - a) / M as f64;
    let mut terms = Vec::with_capacity(M + 1);
    for i in 0..=M {
        let w = if i == 0 || i == M {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        terms.push(ln_g(a + i as f64 * h) + (w * h / 3.0).ln());
    }
    log_sum_exp(&terms)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|&t| (t - m).exp()).sum::<f64>().ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

impl StarTable {
    fn build(psi: &Node) -> StarTable {
        let ln_g = |u: f64| psi.ln_eval(u) - u;
        let count = (STAR_MAX / STAR_STEP) as usize;
        let mut ln_cum = Vec::with_capacity(count + 1);
        ln_cum.push(f64::NEG_INFINITY);
        let mut acc = f64::NEG_INFINITY;
        for k in 0..count {
            let a = k as f64 * STAR_STEP;
            acc = log_add_exp(acc, log_panel(&ln_g, a, a + STAR_STEP));
            ln_cum.push(acc);
        }
        StarTable {
            step: STAR_STEP,
            ln_cum,
        }
    }

    /// `ln I(s)` for `s >= 0`.
    fn ln_integral(&self, psi: &Node, s: f64) -> f64 {
        if s <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let ln_g = |u: f64| psi.ln_eval(u) - u;
        let last = self.ln_cum.len() - 1;
        let k = ((s / self.step) as usize).min(last);
        let s_k = k as f64 * self.step;
        let mut acc = self.ln_cum[k];
        if s > s_k {
            // Partial panel past the last cached checkpoint; beyond the
            // table ceiling this integrates the whole remainder.
            acc = log_add_exp(acc, log_panel(&ln_g, s_k, s));
        }
        acc
    }
}

#[derive(Debug, Clone)]
enum Node {
    Identity,
    Power(f64),
    LLogL(f64),
    Antonov,
    TripleLog,
    Scaled(f64, Box<Node>),
    PowerOf(Box<Node>, f64),
    Star(Box<Node>, StarTable),
}

impl Node {
    fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Node::Identity => t,
            Node::Power(r) => t.powf(*r),
            Node::LLogL(l) => t * (std::f64::consts::E + t).ln().powf(*l),
            Node::Antonov => t * (std::f64::consts::E + t).ln() * lll(t),
            Node::TripleLog => t * lll(t),
            Node::Scaled(c, inner) => c * inner.eval(t),
            Node::PowerOf(inner, q) => inner.eval(t).powf(*q),
            Node::Star(..) => {
                if t <= 1.0 {
                    t
                } else {
                    self.ln_eval(t.ln()).exp()
                }
            }
        }
    }

    fn ln_eval(&self, ln_t: f64) -> f64 {
        match self {
            Node::Identity => ln_t,
            Node::Power(r) => r * ln_t,
            Node::LLogL(l) => ln_t + l * lep_from_ln(ln_t).ln(),
            Node::Antonov => ln_t + lep_from_ln(ln_t).ln() + lll_from_ln(ln_t).ln(),
            Node::TripleLog => ln_t + lll_from_ln(ln_t).ln(),
            Node::Scaled(c, inner) => c.ln() + inner.ln_eval(ln_t),
            Node::PowerOf(inner, q) => q * inner.ln_eval(ln_t),
            Node::Star(psi, table) => {
                if ln_t <= 0.0 {
                    ln_t
                } else {
                    let ln_i = table.ln_integral(psi, ln_t);
                    // ln( t * (1 + I) )
                    let ln1p_i = if ln_i < 36.0 {
                        ln_i.exp().ln_1p()
                    } else {
                        ln_i
                    };
                    ln_t + ln1p_i
                }
            }
        }
    }

    /// `(c, r)` when the function is exactly `c * t^r`.
    fn as_scaled_power(&self) -> Option<(f64, f64)> {
        match self {
            Node::Identity => Some((1.0, 1.0)),
            Node::Power(r) => Some((1.0, *r)),
            Node::LLogL(l) if *l == 0.0 => Some((1.0, 1.0)),
            Node::Scaled(c, inner) => inner.as_scaled_power().map(|(c2, r)| (c * c2, r)),
            Node::PowerOf(inner, q) => inner.as_scaled_power().map(|(c2, r)| (c2.powf(*q), r * q)),
            _ => None,
        }
    }
}

/// A compiled, evaluable Young function. Construction validates parameters
/// and builds the star-integral cache once; evaluation afterwards is pure
/// and thread-safe.
#[derive(Debug, Clone)]
pub struct YoungFn {
    spec: YoungSpec,
    node: Node,
}

impl PartialEq for YoungFn {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl fmt::Display for YoungFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.spec.fmt(f)
    }
}

impl YoungFn {
    pub fn compile(spec: &YoungSpec) -> Result<YoungFn> {
        let node = compile_node(spec)?;
        Ok(YoungFn {
            spec: spec.clone(),
            node,
        })
    }

    pub fn parse(text: &str) -> Result<YoungFn> {
        Self::compile(&text.parse()?)
    }

    pub fn identity() -> YoungFn {
        Self::compile(&YoungSpec::Identity).unwrap()
    }

    pub fn antonov() -> YoungFn {
        Self::compile(&YoungSpec::Antonov).unwrap()
    }

    pub fn triple_log() -> YoungFn {
        Self::compile(&YoungSpec::TripleLog).unwrap()
    }

    pub fn power(r: f64) -> Result<YoungFn> {
        Self::compile(&YoungSpec::Power(r))
    }

    /// The star construction applied to this function.
    pub fn star(&self) -> Result<YoungFn> {
        Self::compile(&YoungSpec::Star(Box::new(self.spec.clone())))
    }

    /// `Phi(t)^q` of this function.
    pub fn powered(&self, q: f64) -> Result<YoungFn> {
        Self::compile(&YoungSpec::PowerOf(Box::new(self.spec.clone()), q))
    }

    pub fn spec(&self) -> &YoungSpec {
        &self.spec
    }

    pub fn ln_eval(&self, ln_t: f64) -> f64 {
        self.node.ln_eval(ln_t)
    }

    pub(crate) fn as_scaled_power(&self) -> Option<(f64, f64)> {
        self.node.as_scaled_power()
    }

    /// One-sided (forward) derivative, used by the duality witness.
    pub fn derivative(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        let d = 1e-7 * t.max(1e-3);
        (self.eval(t + d) - self.eval(t)) / d
    }

    /// Sampled sanity checks on `t in [2^-20, 2^20]`: vanishing at zero,
    /// monotonicity, midpoint convexity, and domination of `t`. The last is
    /// checked for `t >= 1` only; pure powers sit below the diagonal on
    /// `(0,1)` and the norm comparisons need the large-argument half.
    pub fn validate(&self) -> YoungCheck {
        let mut check = YoungCheck {
            zero_ok: self.eval(0.0) == 0.0,
            nondecreasing_ok: true,
            convex_ok: true,
            dominates_t_ok: true,
        };
        let samples: Vec<f64> = (-20..=20)
            .flat_map(|e| {
                let base = (e as f64).exp2();
                [base, base * 1.375]
            })
            .collect();
        let mut prev = 0.0f64;
        for &t in &samples {
            let v = self.eval(t);
            if v + 1e-12 * v.abs().max(1.0) < prev {
                check.nondecreasing_ok = false;
            }
            prev = v.max(prev);
            if t >= 1.0 && v + 1e-9 * v.abs().max(1.0) < t {
                check.dominates_t_ok = false;
            }
        }
        for w in samples.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let lhs = self.eval(mid);
            let rhs = 0.5 * (self.eval(a) + self.eval(b));
            if lhs > rhs * (1.0 + 1e-9) + 1e-300 {
                check.convex_ok = false;
            }
        }
        check
    }
}

impl YoungLike for YoungFn {
    fn eval(&self, t: f64) -> f64 {
        self.node.eval(t)
    }
}

fn compile_node(spec: &YoungSpec) -> Result<Node> {
    Ok(match spec {
        YoungSpec::Identity => Node::Identity,
        YoungSpec::Power(r) => {
            if !(*r > 1.0) {
                return Err(CoreError::InvalidParameter(format!(
                    "power exponent must exceed 1, got {r}"
                )));
            }
            Node::Power(*r)
        }
        YoungSpec::LLogL(l) => {
            if !(*l >= 0.0) {
                return Err(CoreError::InvalidParameter(format!(
                    "llogl exponent must be nonnegative, got {l}"
                )));
            }
            Node::LLogL(*l)
        }
        YoungSpec::Antonov => Node::Antonov,
        YoungSpec::TripleLog => Node::TripleLog,
        YoungSpec::Scaled(c, inner) => {
            if !(*c > 0.0) {
                return Err(CoreError::InvalidParameter(format!(
                    "scale must be positive, got {c}"
                )));
            }
            Node::Scaled(*c, Box::new(compile_node(inner)?))
        }
        YoungSpec::PowerOf(inner, q) => {
            if !(*q > 0.0) {
                return Err(CoreError::InvalidParameter(format!(
                    "outer power must be positive, got {q}"
                )));
            }
            Node::PowerOf(Box::new(compile_node(inner)?), *q)
        }
        YoungSpec::Star(inner) => {
            let psi = compile_node(inner)?;
            let table = StarTable::build(&psi);
            Node::Star(Box::new(psi), table)
        }
    })
}

/// Outcome of [`YoungFn::validate`].
#[derive(Debug, Clone, Copy)]
pub struct YoungCheck {
    pub zero_ok: bool,
    pub nondecreasing_ok: bool,
    pub convex_ok: bool,
    pub dominates_t_ok: bool,
}

impl YoungCheck {
    pub fn all_ok(&self) -> bool {
        self.zero_ok && self.nondecreasing_ok && self.convex_ok && self.dominates_t_ok
    }
}

// ---------------------------------------------------------------------------
// Luxemburg norms
// ---------------------------------------------------------------------------

const LUX_REL_TOL: f64 = 1e-10;

/// Core bisection: smallest `lam` with `sum_i mu_i Phi(m_i / lam) <= 1`,
/// where `mu` are normalized measures. Overflow of `Phi` simply reads as an
/// infeasible constraint, so the bracket widens past it unharmed.
fn luxemburg_bisect(mags: &[f64], measures: &[f64], phi: &dyn YoungLike) -> f64 {
    debug_assert_eq!(mags.len(), measures.len());
    let vmax = mags.iter().cloned().fold(0.0f64, f64::max);
    if vmax == 0.0 {
        return 0.0;
    }
    let modular = |lam: f64| -> f64 {
        let mut acc = 0.0;
        for (&m, &mu) in mags.iter().zip(measures) {
            if m == 0.0 {
                continue;
            }
            acc += mu * phi.eval(m / lam);
            if !acc.is_finite() {
                return f64::INFINITY;
            }
        }
        acc
    };
    let mean: f64 = mags.iter().zip(measures).map(|(m, mu)| m * mu).sum();
    let mut lo;
    let mut hi;
    let start = mean.max(vmax * 1e-12).max(1e-290);
    if modular(start) > 1.0 {
        lo = start;
        hi = start * 2.0;
        while modular(hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e290 {
                return f64::INFINITY;
            }
        }
    } else {
        hi = start;
        lo = start / 2.0;
        while modular(lo) <= 1.0 {
            hi = lo;
            lo /= 2.0;
            if lo < 1e-290 {
                return 0.0;
            }
        }
    }
    // Invariant: modular(lo) > 1 >= modular(hi).
    for _ in 0..80 {
        if hi - lo <= LUX_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if modular(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Mean Luxemburg norm of `f` on an arc with the uniform cell measure.
/// Identity and pure powers solve in closed form (the mean and the power
/// mean); everything else bisects to relative tolerance 1e-10.
pub fn luxemburg_norm_arc(f: &StepSignal, arc: &CellArc, phi: &YoungFn) -> f64 {
    let grid = f.grid();
    let mags: Vec<f64> = arc.cells(grid).map(|c| f.values()[c].norm()).collect();
    luxemburg_from_mags(&mags, phi)
}

pub(crate) fn luxemburg_from_mags(mags: &[f64], phi: &YoungFn) -> f64 {
    let n = mags.len() as f64;
    if let Some((c, r)) = phi.as_scaled_power() {
        // c * mean((m/lam)^r) = 1  =>  lam = (c * mean m^r)^(1/r)
        let mean_pow = kahan_sum(mags.iter().map(|m| m.powf(r))) / n;
        return (c * mean_pow).powf(1.0 / r);
    }
    let measures = vec![1.0 / n; mags.len()];
    luxemburg_bisect(mags, &measures, phi)
}

/// Mean Luxemburg norm over a dyadic interval.
pub fn luxemburg_norm(f: &StepSignal, q: &DyadicInterval, phi: &YoungFn) -> f64 {
    luxemburg_norm_arc(f, &q.arc(f.grid()), phi)
}

/// Luxemburg norm for a general evaluator (no closed forms), used for
/// complementary functions.
pub fn luxemburg_norm_general(f: &StepSignal, arc: &CellArc, phi: &dyn YoungLike) -> f64 {
    let grid = f.grid();
    let mags: Vec<f64> = arc.cells(grid).map(|c| f.values()[c].norm()).collect();
    let measures = vec![1.0 / mags.len() as f64; mags.len()];
    luxemburg_bisect(&mags, &measures, phi)
}

/// Weighted mean Luxemburg norm: the measure is `w(x) dx / w(Q)`.
pub fn weighted_luxemburg(
    f: &StepSignal,
    q: &DyadicInterval,
    phi: &YoungFn,
    w: &WeightProfile,
) -> Result<f64> {
    weighted_luxemburg_arc(f, &q.arc(f.grid()), phi, w)
}

pub fn weighted_luxemburg_arc(
    f: &StepSignal,
    arc: &CellArc,
    phi: &YoungFn,
    w: &WeightProfile,
) -> Result<f64> {
    let grid = f.grid();
    if w.len() != grid.cells() {
        return Err(CoreError::InvalidParameter(
            "weight and signal grids differ".into(),
        ));
    }
    let mut mags = Vec::with_capacity(arc.len);
    let mut measures = Vec::with_capacity(arc.len);
    let mut wq = 0.0;
    for c in arc.cells(grid) {
        mags.push(f.values()[c].norm());
        let wc = w.values()[c];
        measures.push(wc);
        wq += wc;
    }
    if !(wq > 0.0) {
        return Err(CoreError::InvalidParameter("w(Q) must be positive".into()));
    }
    for mu in &mut measures {
        *mu /= wq;
    }
    if let Some((cc, r)) = phi.as_scaled_power() {
        let mean_pow: f64 = mags
            .iter()
            .zip(&measures)
            .map(|(m, mu)| mu * m.powf(r))
            .sum();
        return Ok((cc * mean_pow).powf(1.0 / r));
    }
    Ok(luxemburg_bisect(&mags, &measures, phi))
}

// ---------------------------------------------------------------------------
// Complementary function
// ---------------------------------------------------------------------------

/// Values above this cap report as `+inf`; hits are counted.
pub const COMPLEMENTARY_CAP: f64 = 1e300;

/// The complementary Young function `bar Phi(t) = sup_s (s t - Phi(s))`,
/// evaluated per query by ternary search over `ln s` (the objective is
/// concave in `s`, hence unimodal in `ln s`).
pub struct Complementary<'a> {
    phi: &'a YoungFn,
    cap_hits: AtomicU64,
}

impl<'a> Complementary<'a> {
    pub fn new(phi: &'a YoungFn) -> Self {
        Complementary {
            phi,
            cap_hits: AtomicU64::new(0),
        }
    }

    /// Number of queries whose supremum exceeded the cap.
    pub fn cap_hits(&self) -> u64 {
        self.cap_hits.load(Ordering::Relaxed)
    }

    fn objective(&self, sigma: f64, ln_t: f64) -> f64 {
        let a = sigma + ln_t; // ln(s t)
        let b = self.phi.ln_eval(sigma); // ln Phi(s)
        if a.max(b) > 700.0 {
            if a > b + 1e-12 {
                return f64::INFINITY;
            }
            if b > a + 1e-12 {
                return f64::NEG_INFINITY;
            }
            return 0.0;
        }
        a.exp() - b.exp()
    }
}

impl YoungLike for Complementary<'_> {
    fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let ln_t = t.ln();
        let mut lo = -700.0f64;
        let mut hi = 700.0f64;
        if self.objective(hi, ln_t) == f64::INFINITY {
            self.cap_hits.fetch_add(1, Ordering::Relaxed);
            return f64::INFINITY;
        }
        let mut best = 0.0f64;
        for _ in 0..140 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            let j1 = self.objective(m1, ln_t);
            let j2 = self.objective(m2, ln_t);
            best = best.max(j1).max(j2);
            if j1 < j2 {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        if best > COMPLEMENTARY_CAP {
            self.cap_hits.fetch_add(1, Ordering::Relaxed);
            return f64::INFINITY;
        }
        best.max(0.0)
    }
}

// ---------------------------------------------------------------------------
// B_p constants
// ---------------------------------------------------------------------------

/// `C_Phi(p) = ( int_1^inf Phi(t) t^-p dt/t )^(1/p)`, or divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BpValue {
    Finite { value: f64, err_bound: f64 },
    Divergent,
}

#[derive(Debug, Clone, Copy)]
pub struct BpConstant {
    pub p: f64,
    pub value: BpValue,
}

impl BpConstant {
    pub fn finite(&self) -> Option<f64> {
        match self.value {
            BpValue::Finite { value, .. } => Some(value),
            BpValue::Divergent => None,
        }
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol || !diff.is_finite() {
        return (left + right + diff / 15.0, diff.abs() / 15.0);
    }
    let (lv, le) = adaptive_simpson(f, a, m, left, tol / 2.0, depth - 1);
    let (rv, re) = adaptive_simpson(f, m, b, right, tol / 2.0, depth - 1);
    (lv + rv, le + re)
}

/// Integrate with the substitution `t = e^u` over geometrically growing
/// panels until the exponential tail is provably below tolerance.
/// Divergence is declared when the integrand explodes, or when no decaying
/// tail emerges by `u = 1e13` (slowly varying factors can postpone decay
/// arbitrarily, so the probe horizon is generous).
pub fn bp_constant(phi: &YoungFn, p: f64) -> Result<BpConstant> {
    if !(p > 1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "B_p constant requires p > 1, got {p}"
        )));
    }
    let exponent = |u: f64| phi.ln_eval(u) - p * u;
    let integrand = |u: f64| exponent(u).exp();

    let mut total = 0.0f64;
    let mut err = 0.0f64;
    let mut a = 0.0f64;
    let mut width = 1.0f64;
    loop {
        let b = a + width;
        let whole = simpson(&integrand, a, b);
        if !whole.is_finite() {
            return Ok(BpConstant {
                p,
                value: BpValue::Divergent,
            });
        }
        let tol = 1e-12 * total.max(1e-12) + 1e-306;
        let (v, e) = adaptive_simpson(&integrand, a, b, whole, tol, 38);
        if !v.is_finite() {
            return Ok(BpConstant {
                p,
                value: BpValue::Divergent,
            });
        }
        total += v;
        err += e;

        let q_mid = exponent(b - 0.25 * width);
        let q_end = exponent(b);
        if q_end > 150.0 && q_end >= q_mid {
            return Ok(BpConstant {
                p,
                value: BpValue::Divergent,
            });
        }
        if q_end < q_mid {
            let rate = (q_mid - q_end) / (0.25 * width);
            let tail = q_end.exp() / rate;
            if tail.is_finite() && total > 0.0 && tail <= 1e-10 * total && v <= 1e-9 * total {
                err += tail;
                break;
            }
        }
        if b > 1e13 {
            return Ok(BpConstant {
                p,
                value: BpValue::Divergent,
            });
        }
        a = b;
        width = if b >= 1.0 { b } else { 1.0 };
    }

    let value = total.powf(1.0 / p);
    let err_bound = err / (p * total) * value;
    Ok(BpConstant {
        p,
        value: BpValue::Finite { value, err_bound },
    })
}

// ---------------------------------------------------------------------------
// Duality
// ---------------------------------------------------------------------------

/// Outcome of the Orlicz/Luxemburg duality probe on one `(f, Q, Phi)`.
#[derive(Debug, Clone)]
pub struct DualityGap {
    /// Best pairing found (constructed witness and random perturbations).
    pub lower: f64,
    /// Upper bound `2 ||f||_{Phi,Q}` plus numerical slack.
    pub upper: f64,
    /// Pairing of the constructed witness alone.
    pub pairing: f64,
    /// `pairing / ||f||_{Phi,Q}`; flagged below 0.25.
    pub kappa: f64,
    pub flagged: bool,
    /// Witness values on the cells of `Q`, in arc order.
    pub witness: Vec<f64>,
}

/// Witness of the Orlicz/Luxemburg duality on one arc.
#[derive(Debug, Clone)]
pub struct WitnessArc {
    /// Witness values on the cells of the arc, in arc order; lives in the
    /// complementary unit ball.
    pub g: Vec<f64>,
    /// `||f||_{Phi, I}`.
    pub norm: f64,
    /// `(1/|I|) int_I f g`.
    pub pairing: f64,
    /// `pairing / norm` (1 when the norm vanishes).
    pub kappa: f64,
}

/// Construct the Young-equality witness `g = Phi'(|f| / ||f||)` on an arc,
/// sign-matched and rescaled into the complementary unit ball. A null `f`
/// yields the zero witness with `kappa = 1` (vacuous).
pub fn duality_witness_arc(f: &StepSignal, arc: &CellArc, phi: &YoungFn) -> Result<WitnessArc> {
    if !f.is_real() {
        return Err(CoreError::NonRealSignal);
    }
    let grid = f.grid();
    let vals: Vec<f64> = arc.cells(grid).map(|c| f.values()[c].re).collect();
    let norm = luxemburg_from_mags(&vals.iter().map(|v| v.abs()).collect::<Vec<_>>(), phi);
    if norm == 0.0 {
        return Ok(WitnessArc {
            g: vec![0.0; vals.len()],
            norm: 0.0,
            pairing: 0.0,
            kappa: 1.0,
        });
    }
    let bar = Complementary::new(phi);
    let n = vals.len() as f64;
    let mut g: Vec<f64> = vals
        .iter()
        .map(|&v| phi.derivative(v.abs() / norm) * v.signum())
        .collect();
    let measures = vec![1.0 / n; g.len()];
    let nu = luxemburg_bisect(&g.iter().map(|v| v.abs()).collect::<Vec<_>>(), &measures, &bar);
    if nu > 0.0 && nu.is_finite() {
        for w in &mut g {
            *w /= nu;
        }
    }
    let pairing = kahan_sum(vals.iter().zip(&g).map(|(v, w)| v * w)) / n;
    Ok(WitnessArc {
        kappa: pairing / norm,
        g,
        norm,
        pairing,
    })
}

/// Build the near-extremal dual witness `g = Phi'(|f| / ||f||)`,
/// sign-matched and rescaled into the `bar Phi` unit ball, and measure the
/// pairing `(1/|Q|) int_Q f g` against the two-sided norm equivalence.
pub fn duality_gap(
    f: &StepSignal,
    q: &DyadicInterval,
    phi: &YoungFn,
    perturbations: usize,
    seed: u64,
) -> Result<DualityGap> {
    let grid = f.grid();
    let arc = q.arc(grid);
    let witness = duality_witness_arc(f, &arc, phi)?;
    if witness.norm == 0.0 {
        return Err(CoreError::InvalidParameter(
            "duality requires f nonzero on Q".into(),
        ));
    }
    let vals: Vec<f64> = arc.cells(grid).map(|c| f.values()[c].re).collect();
    let n = vals.len() as f64;
    let bar = Complementary::new(phi);
    let measures = vec![1.0 / vals.len() as f64; vals.len()];
    let pairing_of = |g: &[f64]| -> f64 { kahan_sum(vals.iter().zip(g).map(|(v, w)| v * w)) / n };

    let mut lower = witness.pairing;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..perturbations {
        let mut g: Vec<f64> = witness
            .g
            .iter()
            .map(|&w| w + 0.3 * rng.random_range(-1.0..1.0))
            .collect();
        let nu = luxemburg_bisect(
            &g.iter().map(|v| v.abs()).collect::<Vec<_>>(),
            &measures,
            &bar,
        );
        if nu > 0.0 && nu.is_finite() {
            for w in &mut g {
                *w /= nu;
            }
            lower = lower.max(pairing_of(&g));
        }
    }

    Ok(DualityGap {
        lower,
        upper: 2.0 * witness.norm * (1.0 + 1e-6),
        pairing: witness.pairing,
        kappa: witness.kappa,
        flagged: witness.kappa < 0.25,
        witness: witness.g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridShift, GridSpec};

    fn grid(n: usize) -> GridSpec {
        GridSpec::with_cells(n).unwrap()
    }

    #[test]
    fn grammar_round_trip() {
        for text in [
            "id",
            "pow:2",
            "pow:1.5",
            "llogl:1",
            "antonov",
            "triplelog",
            "star(triplelog)",
            "powof(triplelog,1.75)",
            "scaled(0.5,pow:2)",
            "star(powof(llogl:1,1.25))",
        ] {
            let spec: YoungSpec = text.parse().unwrap();
            let round: YoungSpec = spec.to_string().parse().unwrap();
            assert_eq!(spec, round);
            YoungFn::compile(&spec).unwrap();
        }
        assert!("pow:0.5".parse::<YoungSpec>().and_then(|s| YoungFn::compile(&s)).is_err());
        assert!("bogus".parse::<YoungSpec>().is_err());
        assert!("pow:2)".parse::<YoungSpec>().is_err());
    }

    #[test]
    fn catalogue_validates() {
        for text in ["id", "pow:2", "pow:3", "llogl:1", "antonov", "triplelog",
                     "star(id)", "star(triplelog)"] {
            let phi = YoungFn::parse(text).unwrap();
            let check = phi.validate();
            assert!(check.all_ok(), "{text} failed validation: {check:?}");
        }
        // Scaling below 1 loses t <= Phi(t); the check reports it.
        let half = YoungFn::parse("scaled(0.5,id)").unwrap();
        assert!(!half.validate().dominates_t_ok);
        assert!(half.validate().convex_ok);
    }

    #[test]
    fn luxemburg_identity_is_mean() {
        let g = grid(8);
        let f = StepSignal::from_real(g, vec![1.0, -2.0, 3.0, 0.0, 1.0, 1.0, 2.0, 2.0]).unwrap();
        let q = DyadicInterval::whole_circle();
        let id = YoungFn::identity();
        let norm = luxemburg_norm(&f, &q, &id);
        assert!((norm - 1.5).abs() < 1e-12);
    }

    #[test]
    fn luxemburg_power_closed_form() {
        // f = 2 on half of Q, Phi = t^2: (1/2)(2/lam)^2 = 1 => lam = sqrt 2.
        let g = grid(8);
        let f = StepSignal::from_fn(g, |x| if x < 0.5 { 2.0 } else { 0.0 });
        let q = DyadicInterval::whole_circle();
        let p2 = YoungFn::power(2.0).unwrap();
        let norm = luxemburg_norm(&f, &q, &p2);
        assert!((norm - 2.0f64.sqrt()).abs() < 1e-12);
        // The generic bisection agrees with the closed form.
        let generic = luxemburg_norm_general(&f, &q.arc(&g), &p2);
        assert!((generic - norm).abs() < 1e-9 * norm);
    }

    #[test]
    fn luxemburg_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = grid(16);
        let q = DyadicInterval::new(GridShift::Zero, 1, 1, &g).unwrap();
        for text in ["antonov", "llogl:1", "star(triplelog)"] {
            let phi = YoungFn::parse(text).unwrap();
            for _ in 0..20 {
                let f = StepSignal::from_real(
                    g,
                    (0..16).map(|_| rng.random_range(-2.0..2.0)).collect(),
                )
                .unwrap();
                let c: f64 = rng.random_range(0.1..10.0);
                let a = luxemburg_norm(&f.scaled(c), &q, &phi);
                let b = c * luxemburg_norm(&f, &q, &phi);
                if b > 0.0 {
                    assert!((a - b).abs() < 1e-8 * b, "{text}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn luxemburg_monotone_in_phi() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = grid(16);
        let q = DyadicInterval::whole_circle();
        // t <= t log(e+t) <= antonov pointwise.
        let chain = ["id", "llogl:1", "antonov"];
        for _ in 0..30 {
            let f = StepSignal::from_real(g, (0..16).map(|_| rng.random_range(0.0..4.0)).collect())
                .unwrap();
            let norms: Vec<f64> = chain
                .iter()
                .map(|t| luxemburg_norm(&f, &q, &YoungFn::parse(t).unwrap()))
                .collect();
            assert!(norms[0] <= norms[1] * (1.0 + 1e-9));
            assert!(norms[1] <= norms[2] * (1.0 + 1e-9));
        }
    }

    #[test]
    fn weighted_luxemburg_reduces_to_uniform() {
        let g = grid(16);
        let f = StepSignal::from_fn(g, |x| (6.3 * x).cos() + 1.5);
        let w = WeightProfile::constant(g, 1.0);
        let q = DyadicInterval::new(GridShift::Zero, 2, 3, &g).unwrap();
        for text in ["id", "antonov"] {
            let phi = YoungFn::parse(text).unwrap();
            let a = weighted_luxemburg(&f, &q, &phi, &w).unwrap();
            let b = luxemburg_norm(&f, &q, &phi);
            assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{text}");
        }
    }

    #[test]
    fn weighted_luxemburg_constant_signal() {
        // Phi(1) = 1 catalogue members: result is |c| for f = c.
        let g = grid(16);
        let f = StepSignal::constant(g, -3.0);
        let w = WeightProfile::from_values(g, (0..16).map(|i| 1.0 + i as f64).collect()).unwrap();
        let q = DyadicInterval::whole_circle();
        let phi = YoungFn::power(2.0).unwrap();
        let norm = weighted_luxemburg(&f, &q, &phi, &w).unwrap();
        assert!((norm - 3.0).abs() < 1e-9);
    }

    #[test]
    fn complementary_self_dual_pair() {
        // Phi = t^2/2 is self-complementary.
        let phi = YoungFn::parse("scaled(0.5,pow:2)").unwrap();
        let bar = Complementary::new(&phi);
        for t in [0.1, 0.5, 1.0, 2.0, 7.5, 40.0] {
            let expect = t * t / 2.0;
            let got = bar.eval(t);
            assert!(
                (got - expect).abs() <= 1e-8 * expect.max(1.0),
                "bar Phi({t}) = {got}, want {expect}"
            );
        }
    }

    #[test]
    fn complementary_of_identity() {
        let phi = YoungFn::identity();
        let bar = Complementary::new(&phi);
        assert!(bar.eval(0.5) <= 1e-9);
        assert!(bar.eval(1.0) <= 1e-7);
        assert_eq!(bar.eval(1.5), f64::INFINITY);
        assert!(bar.cap_hits() >= 1);
    }

    #[test]
    fn youngs_inequality_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for text in ["pow:2", "llogl:1", "antonov"] {
            let phi = YoungFn::parse(text).unwrap();
            let bar = Complementary::new(&phi);
            for _ in 0..60 {
                let s: f64 = rng.random_range(0.01..20.0);
                let t: f64 = rng.random_range(0.01..20.0);
                let lhs = s * t;
                let rhs = phi.eval(s) + bar.eval(t);
                assert!(lhs <= rhs * (1.0 + 1e-8) + 1e-9, "{text}: {s} * {t}");
            }
        }
    }

    #[test]
    fn bp_identity_closed_form() {
        for p in [1.5, 2.0, 3.0] {
            let c = bp_constant(&YoungFn::identity(), p).unwrap();
            let expect = (p - 1.0).powf(-1.0 / p);
            match c.value {
                BpValue::Finite { value, err_bound } => {
                    assert!((value - expect).abs() < 1e-8, "p={p}: {value} vs {expect}");
                    assert!(err_bound < 1e-8 * value);
                }
                BpValue::Divergent => panic!("identity must be B_p for p={p}"),
            }
        }
    }

    #[test]
    fn bp_divergent_for_critical_power() {
        let p2 = YoungFn::power(2.0).unwrap();
        assert_eq!(bp_constant(&p2, 2.0).unwrap().value, BpValue::Divergent);
        // And, more slowly divergent, an extra log factor at the critical power.
        let philog = YoungFn::parse("powof(llogl:1,2)").unwrap();
        assert_eq!(bp_constant(&philog, 2.0).unwrap().value, BpValue::Divergent);
    }

    #[test]
    fn bp_scaling_identity() {
        // C_{c Phi}(p) = c^{1/p} C_Phi(p).
        let phi = YoungFn::parse("llogl:1").unwrap();
        let scaled = YoungFn::parse("scaled(3,llogl:1)").unwrap();
        for p in [1.5, 2.0, 4.0] {
            let a = bp_constant(&scaled, p).unwrap().finite().unwrap();
            let b = bp_constant(&phi, p).unwrap().finite().unwrap() * 3.0f64.powf(1.0 / p);
            assert!((a - b).abs() < 1e-7 * b, "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn star_of_identity_closed_form() {
        let star = YoungFn::parse("star(id)").unwrap();
        for t in [1.0f64, 1.5, 4.0, 100.0, 1e6, 1e12] {
            let expect = if t <= 1.0 { t } else { t + t * t.ln() };
            let got = star.eval(t);
            assert!(
                (got - expect).abs() <= 1e-8 * expect,
                "star(id)({t}) = {got}, want {expect}"
            );
        }
        // Continuity at 1 from both branches.
        assert!((star.eval(1.0) - 1.0).abs() < 1e-12);
        assert!((star.eval(1.0 + 1e-9) - 1.0).abs() < 1e-6);
        // Log-space evaluation agrees out to huge arguments.
        let l = 500.0f64;
        let expect_ln = l + (1.0f64 + l).ln(); // ln(t (1 + ln t))
        assert!((star.ln_eval(l) - expect_ln).abs() < 1e-8);
    }

    #[test]
    fn antonov_matches_star_of_triple_log_band() {
        // Phi_antonov(t) / (TripleLog)*(t) stays in a fixed band for t >= 10.
        let phi = YoungFn::antonov();
        let star = YoungFn::parse("star(triplelog)").unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        let mut t = 10.0;
        while t < 1e12 {
            let ratio = phi.eval(t) / star.eval(t);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            t *= 3.7;
        }
        assert!(lo > 0.2 && hi < 5.0, "band [{lo}, {hi}] too wide");
    }

    #[test]
    fn duality_witness_identity() {
        let g = grid(8);
        let f = StepSignal::from_real(g, vec![1.0, -2.0, 3.0, -1.0, 0.5, 2.0, -0.5, 1.0]).unwrap();
        let q = DyadicInterval::whole_circle();
        let gap = duality_gap(&f, &q, &YoungFn::identity(), 0, 0).unwrap();
        let mean_abs = f.magnitudes().iter().sum::<f64>() / 8.0;
        assert!((gap.pairing - mean_abs).abs() < 1e-8 * mean_abs);
        assert!((gap.kappa - 1.0).abs() < 1e-6);
        assert!(!gap.flagged);
    }

    #[test]
    fn duality_sandwich_small_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = grid(16);
        let q = DyadicInterval::new(GridShift::Zero, 1, 0, &g).unwrap();
        for (i, text) in ["id", "pow:2", "llogl:1", "antonov"].iter().cycle().take(40).enumerate()
        {
            let f = StepSignal::from_real(
                g,
                (0..16).map(|_| rng.random_range(-3.0..3.0)).collect(),
            )
            .unwrap();
            let phi = YoungFn::parse(text).unwrap();
            let norm = luxemburg_norm(&f, &q, &phi);
            if norm == 0.0 {
                continue;
            }
            let gap = duality_gap(&f, &q, &phi, 3, i as u64).unwrap();
            assert!(gap.pairing >= 0.5 * norm - 1e-9, "{text}: kappa {}", gap.kappa);
            assert!(gap.lower <= gap.upper + 1e-9, "{text}");
        }
    }

    #[test]
    fn bisection_deterministic() {
        let g = grid(16);
        let f = StepSignal::from_fn(g, |x| (9.1 * x).sin().abs() + 0.2);
        let q = DyadicInterval::whole_circle();
        let phi = YoungFn::antonov();
        let a = luxemburg_norm(&f, &q, &phi);
        let b = luxemburg_norm(&f, &q, &phi);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
