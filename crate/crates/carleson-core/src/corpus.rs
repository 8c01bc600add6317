//! Seeded test-function corpora: dyadic-block random signs, single bumps,
//! tents, lacunary cosine sums, and the weight-adapted extremal witness
//! `f = sigma chi_I` at the `A_p` arg-max interval.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::grid::{CellArc, GridSpec};
use crate::signal::StepSignal;
use crate::weights::{ap_constant, IntervalScope, WeightProfile};
use crate::Result;

/// A tagged corpus member.
#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub tag: String,
    pub signal: StepSignal,
}

/// The standard seeded corpus: `per_family` members each of block signs,
/// bumps/tents and lacunary sums. Construction depends only on the seed
/// and the relative structure, so corpora at different `N` are comparable.
pub fn standard_corpus(grid: GridSpec, seed: u64, per_family: usize) -> Vec<CorpusItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.cells();
    let mut items = Vec::new();

    for k in 0..per_family {
        // Random signs on dyadic blocks of a moderate level.
        let level = 2 + (k as u32 % 4).min(grid.levels() - 1);
        let blocks = 1usize << level;
        let block_len = n / blocks;
        let mut vals = vec![0.0f64; n];
        for b in 0..blocks {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            for c in 0..block_len {
                vals[b * block_len + c] = sign;
            }
        }
        items.push(CorpusItem {
            tag: format!("blocks{level}#{k}"),
            signal: StepSignal::from_real(grid, vals).expect("grid"),
        });
    }

    for k in 0..per_family {
        // A bump: indicator of a random arc, alternating with a tent.
        let len = (n / 16).max(1) * (1 + k % 3);
        let start = rng.random_range(0..n);
        let mut vals = vec![0.0f64; n];
        if k % 2 == 0 {
            for c in (CellArc { start, len }).cells(&grid) {
                vals[c] = 1.0;
            }
        } else {
            for (off, c) in (CellArc { start, len }).cells(&grid).enumerate() {
                let t = (off as f64 + 0.5) / len as f64;
                vals[c] = 1.0 - (2.0 * t - 1.0).abs();
            }
        }
        items.push(CorpusItem {
            tag: format!("bump{len}#{k}"),
            signal: StepSignal::from_real(grid, vals).expect("grid"),
        });
    }

    for k in 0..per_family {
        // Lacunary cosine sum with mild decay.
        let phases: Vec<f64> = (0..grid.levels())
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let theta = 0.3 + 0.2 * (k % 3) as f64;
        let top = grid.levels().min(8);
        let signal = StepSignal::from_fn(grid, |x| {
            (0..top)
                .map(|j| {
                    let freq = (1u64 << j) as f64;
                    (theta * j as f64).exp2().recip()
                        * (std::f64::consts::TAU * freq * x + phases[j as usize]).cos()
                })
                .sum()
        });
        items.push(CorpusItem {
            tag: format!("lacunary{theta:.1}#{k}"),
            signal,
        });
    }

    items
}

/// The classical extremal pairing: `f = sigma chi_I` with `I` the arg-max
/// interval of `[w]_{A_p}` and `sigma` the dual weight.
pub fn weight_adapted_witness(
    w: &WeightProfile,
    p: f64,
    scope: IntervalScope,
) -> Result<CorpusItem> {
    let grid = *w.grid();
    let best = ap_constant(w, p, scope)?;
    let expo = -1.0 / (p - 1.0);
    let mut vals = vec![0.0f64; grid.cells()];
    for c in best.argmax.cells(&grid) {
        vals[c] = w.values()[c].powf(expo);
    }
    Ok(CorpusItem {
        tag: format!("witness@{}+{}", best.argmax.start, best.argmax.len),
        signal: StepSignal::from_real(grid, vals)?,
    })
}
