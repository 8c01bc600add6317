use carleson_core::grid::{CellArc, GridSpec};
use carleson_core::weights::*;

fn main() {
    let n = 2048usize;
    let grid = GridSpec::with_cells(n).unwrap();
    let w = WeightFamily::Power { alpha: 0.95, x0: 0.0 }.instantiate(grid).unwrap();
    let res = ap_constant(&w, 2.0, IntervalScope::AllIntervals).unwrap();
    println!("A2 = {:.4} at start={} len={}", res.value, res.argmax.start, res.argmax.len);
    // Recompute the A2 product on the argmax interval by hand.
    let arc = res.argmax;
    let avg_w: f64 = arc.cells(&grid).map(|c| w.values()[c]).sum::<f64>() / arc.len as f64;
    let avg_s: f64 = arc.cells(&grid).map(|c| 1.0 / w.values()[c]).sum::<f64>() / arc.len as f64;
    println!("hand recompute: avg_w * avg_sigma = {:.4}", avg_w * avg_s);
    // And on a few reference arcs.
    for (s, l) in [(0usize, n/2), (n - n/8, n/4), (0, 64), (n-32, 64)] {
        let arc = CellArc { start: s, len: l };
        let aw: f64 = arc.cells(&grid).map(|c| w.values()[c]).sum::<f64>() / l as f64;
        let as_: f64 = arc.cells(&grid).map(|c| 1.0 / w.values()[c]).sum::<f64>() / l as f64;
        println!("arc start={s} len={l}: A = {:.4}", aw * as_);
    }
}
