//! Acceptance gate: every release-blocking criterion as one test, each
//! printing a pass/fail line. Tolerances are pinned here, not configured.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion lines and timings.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use carleson_core::corpus::standard_corpus;
use carleson_core::grid::{DyadicInterval, GridShift, GridSpec};
use carleson_core::harness::{
    cond11_ratio, exponent_fit, lp_norm, CarlesonOp, HilbertOp,
};
use carleson_core::operators::{
    adjoint_linearized, carleson, hilbert, linearized_carleson, maximal_r, FrequencyChoice,
    MaximalMode,
};
use carleson_core::report::{rows_from_csv, rows_to_csv, ReportRow, RowStatus};
use carleson_core::signal::StepSignal;
use carleson_core::sparse::{
    domination_check, sparse_decompose, CzOperatorKind, DecomposeOptions, SparseFamily,
};
use carleson_core::suites::{
    carleson_a1_sweep_points, hilbert_a2_sweep_points, maximal_buckley_points,
};
use carleson_core::weights::{
    a1_constant, ap_constant, rw_exponent, IntervalScope, WeightFamily,
};
use carleson_core::young::{
    bp_constant, duality_gap, luxemburg_norm, BpValue, YoungFn,
};

fn verdict(criterion: &str, name: &str, pass: bool, detail: String, started: Instant) {
    let line = format!(
        "criterion {criterion} [{name}]: {} ({detail}; {:.2?})",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed()
    );
    println!("{line}");
    assert!(pass, "{line}");
}

fn random_signal(grid: GridSpec, rng: &mut ChaCha8Rng, scale: f64) -> StepSignal {
    StepSignal::from_real(
        grid,
        (0..grid.cells())
            .map(|_| rng.random_range(-scale..scale))
            .collect(),
    )
    .unwrap()
}

/// 1. Sparse certificate: 500 seeded random signals at N = 512,
///    lambda = 1/8; the Theorem-2.1 pointwise bound with constant 2 and the
///    exact sparseness/disjointness checks must all pass cell-wise.
#[test]
fn criterion_01_sparse_certificates() {
    let t0 = Instant::now();
    let grid = GridSpec::with_cells(512).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let q0 = DyadicInterval::whole_circle();
    let mut passed = 0usize;
    for trial in 0..500 {
        let scale = 1.0 + (trial % 7) as f64;
        let f = random_signal(grid, &mut rng, scale);
        let (family, cert) = sparse_decompose(&f, &q0, DecomposeOptions::default()).unwrap();
        let ok = cert.passed() && family.structure_ok(&grid);
        assert!(
            ok,
            "trial {trial}: pointwise={} sparse={} disjoint={} cell={:?}",
            cert.pointwise_ok, cert.sparseness_ok, cert.disjointness_ok, cert.failing_cell
        );
        passed += 1;
    }
    verdict(
        "01",
        "sparse certificate",
        passed == 500,
        format!("{passed}/500 certificates"),
        t0,
    );
}

/// 2. Duality sandwich: on 500 random (f, Phi, Q) the constructed-witness
///    pairing lies in [0.5, 2.0 + 1e-6] times the Luxemburg norm.
#[test]
fn criterion_02_duality_sandwich() {
    let t0 = Instant::now();
    let grid = GridSpec::with_cells(128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let catalogue = [
        "id",
        "pow:1.5",
        "pow:2",
        "pow:3",
        "llogl:1",
        "antonov",
        "triplelog",
        "star(triplelog)",
    ];
    let phis: Vec<YoungFn> = catalogue.iter().map(|t| YoungFn::parse(t).unwrap()).collect();
    let mut checked = 0usize;
    let mut min_kappa = f64::INFINITY;
    let mut max_kappa = 0.0f64;
    let mut trial = 0usize;
    while checked < 500 {
        trial += 1;
        let f = random_signal(grid, &mut rng, 3.0);
        let level = rng.random_range(1..=5u32);
        let index = rng.random_range(0..(1usize << level));
        let q = DyadicInterval::new(GridShift::Zero, level, index, &grid).unwrap();
        let phi = &phis[trial % phis.len()];
        let norm = luxemburg_norm(&f, &q, phi);
        if norm == 0.0 {
            continue;
        }
        let gap = duality_gap(&f, &q, phi, 0, trial as u64).unwrap();
        let lower_ok = gap.pairing >= 0.5 * norm;
        let upper_ok = gap.pairing <= 2.0 * norm * (1.0 + 1e-6);
        assert!(
            lower_ok && upper_ok,
            "trial {trial} phi={}: pairing {} vs norm {}",
            catalogue[trial % phis.len()],
            gap.pairing,
            norm
        );
        min_kappa = min_kappa.min(gap.kappa);
        max_kappa = max_kappa.max(gap.kappa);
        checked += 1;
    }
    verdict(
        "02",
        "duality sandwich",
        true,
        format!("500 cases, kappa in [{min_kappa:.3}, {max_kappa:.3}]"),
        t0,
    );
}

/// 3. Closed-form B_p constants: C_Id(p) = (p-1)^(-1/p) to 1e-8 for
///    p in {1.5, 2, 3}; Phi = t^2 at p = 2 reports divergence.
#[test]
fn criterion_03_bp_closed_forms() {
    let t0 = Instant::now();
    let id = YoungFn::identity();
    let mut worst = 0.0f64;
    for p in [1.5, 2.0, 3.0] {
        let c = bp_constant(&id, p).unwrap().finite().expect("identity is B_p");
        let expect = (p - 1.0).powf(-1.0 / p);
        worst = worst.max((c - expect).abs());
        assert!(
            (c - expect).abs() <= 1e-8,
            "C_Id({p}) = {c}, closed form {expect}"
        );
    }
    let divergent = matches!(
        bp_constant(&YoungFn::power(2.0).unwrap(), 2.0).unwrap().value,
        BpValue::Divergent
    );
    assert!(divergent, "t^2 at p = 2 must report divergence");
    verdict(
        "03",
        "B_p closed forms",
        true,
        format!("max |error| = {worst:.2e}; divergence detected"),
        t0,
    );
}

/// 4. Remark-1.3 band: for the Antonov function,
///    C_Phi((p+1)/2) / [ (p/(p-1))^2 loglog(e^e + 1/(p-1)) ] stays in one
///    band of width ratio <= 10 over p in {1.05, ..., 8}.
#[test]
fn criterion_04_antonov_band() {
    let t0 = Instant::now();
    let phi = YoungFn::antonov();
    let e2 = std::f64::consts::E.powf(std::f64::consts::E);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for p in [1.05, 1.1, 1.25, 1.5, 2.0, 4.0, 8.0] {
        let c = bp_constant(&phi, (p + 1.0) / 2.0)
            .unwrap()
            .finite()
            .expect("antonov is B_q for q > 1");
        let comparator = (p / (p - 1.0)).powi(2) * (e2 + 1.0 / (p - 1.0)).ln().ln();
        let ratio = c / comparator;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let band = hi / lo;
    verdict(
        "04",
        "Remark 1.3 band",
        band <= 10.0,
        format!("band [{lo:.4}, {hi:.4}], ratio {band:.3}"),
        t0,
    );
}

/// 5. Prop 3.1(i): for power weights at N = 1024,
///    M_{r_w} w <= 2.5 [w]_{A_1} w everywhere and <= 2 [w]_{A_1} w on at
///    least 99% of cells.
#[test]
fn criterion_05_prop31_pointwise() {
    let t0 = Instant::now();
    let grid = GridSpec::with_cells(1024).unwrap();
    let mut worst_factor = 0.0f64;
    let mut worst_share = 1.0f64;
    for alpha in [-0.1, -0.3, -0.5, -0.7] {
        let w = WeightFamily::Power { alpha, x0: 0.0 }
            .instantiate(grid)
            .unwrap();
        let a1 = a1_constant(&w, IntervalScope::AllIntervals).value;
        let rw = rw_exponent(&w, IntervalScope::AllIntervals);
        let mrw = maximal_r(&w.signal(), rw, MaximalMode::Uncentered).unwrap();
        let mut within = 0usize;
        for (m, wv) in mrw.values().iter().zip(w.values()) {
            let factor = m.re / (a1 * wv);
            worst_factor = worst_factor.max(factor);
            assert!(
                factor <= 2.5,
                "alpha={alpha}: pointwise factor {factor} exceeds 2.5"
            );
            if factor <= 2.0 {
                within += 1;
            }
        }
        let share = within as f64 / grid.cells() as f64;
        worst_share = worst_share.min(share);
        assert!(
            share >= 0.99,
            "alpha={alpha}: only {share:.4} of cells within the exact factor 2"
        );
    }
    verdict(
        "05",
        "Prop 3.1(i) pointwise",
        true,
        format!("worst factor {worst_factor:.3}, worst exact share {worst_share:.4}"),
        t0,
    );
}

/// 6. Buckley exponent: maximal operator, p = 2, power-weight sweep at
///    N = 2048; fitted exponent against [w]_{A_2} in [0.85, 1.1] with RMS
///    log-residual < 0.1.
#[test]
fn criterion_06_buckley_exponent() {
    let t0 = Instant::now();
    let alphas: Vec<f64> = (0..10).map(|k| 0.5 + 0.05 * k as f64).collect();
    let points =
        maximal_buckley_points(2048, 2.0, &alphas, 606, IntervalScope::AllIntervals).unwrap();
    let fit = exponent_fit(&points).unwrap();
    let pass = (0.85..=1.1).contains(&fit.slope) && fit.residual < 0.1;
    verdict(
        "06",
        "Buckley exponent",
        pass,
        format!(
            "slope {:.4}, residual {:.4}, A_2 in [{:.2}, {:.2}]",
            fit.slope, fit.residual, fit.range.0, fit.range.1
        ),
        t0,
    );
}

/// 7. A_2 linearity for the Hilbert transform: same sweep, fitted exponent
///    in [0.8, 1.1].
#[test]
fn criterion_07_hilbert_a2_linearity() {
    let t0 = Instant::now();
    let alphas: Vec<f64> = (0..10).map(|k| 0.5 + 0.05 * k as f64).collect();
    let points = hilbert_a2_sweep_points(2048, &alphas, 707, IntervalScope::AllIntervals).unwrap();
    let fit = exponent_fit(&points).unwrap();
    let pass = (0.8..=1.1).contains(&fit.slope);
    verdict(
        "07",
        "Hilbert A_2 linearity",
        pass,
        format!("slope {:.4}, residual {:.4}", fit.slope, fit.residual),
        t0,
    );
}

/// 8. Carleson A_1 bound shape: p = 2, A_1 power sweep at N = 1024;
///    fitted exponent of the norm lower bound against [w]_{A_1} at most
///    1.15, and the ratio norm/[w]_{A_1} varies by at most a factor 3.
#[test]
fn criterion_08_carleson_a1_shape() {
    let t0 = Instant::now();
    let alphas = [-0.1, -0.2, -0.3, -0.4, -0.5, -0.6, -0.7];
    let points =
        carleson_a1_sweep_points(1024, 2.0, &alphas, 808, IntervalScope::AllIntervals).unwrap();
    let fit = exponent_fit(&points).unwrap();
    let ratios: Vec<f64> = points.iter().map(|(a1, v)| v / a1).collect();
    let spread = ratios.iter().cloned().fold(0.0f64, f64::max)
        / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = fit.slope <= 1.15 && spread <= 3.0;
    verdict(
        "08",
        "Carleson A_1 shape",
        pass,
        format!(
            "slope {:.4}, ratio spread {:.3}, A_1 in [{:.2}, {:.2}]",
            fit.slope, fit.residual.max(spread), fit.range.0, fit.range.1
        ),
        t0,
    );
}

/// 9. Condition (1.1) stability: the restricted weak-type ratio of the
///    Carleson operator with the Antonov function grows by at most a
///    factor 1.3 from N = 256 to N = 1024.
#[test]
fn criterion_09_cond11_stability() {
    let t0 = Instant::now();
    let phi = YoungFn::antonov();
    let mut ratios = Vec::new();
    for n in [256usize, 1024] {
        let grid = GridSpec::with_cells(n).unwrap();
        let corpus = standard_corpus(grid, 909, 2);
        let report = cond11_ratio(&CarlesonOp, &phi, &corpus, 909, 6, 3).unwrap();
        ratios.push(report.max_ratio);
    }
    let growth = ratios[1] / ratios[0];
    verdict(
        "09",
        "condition (1.1) stability",
        growth <= 1.3,
        format!("ratio {:.4} -> {:.4}, growth {growth:.3}", ratios[0], ratios[1]),
        t0,
    );
}

/// 10. Star equivalence: with Psi the identity, the ratio of
///     (1/|Q|) int_Q M(f chi_Q) to ||f||_{Psi*, Q} over 200 random pairs
///     lies in one band of width ratio <= 20.
#[test]
fn criterion_10_star_equivalence() {
    let t0 = Instant::now();
    let grid = GridSpec::with_cells(512).unwrap();
    let star = YoungFn::parse("star(id)").unwrap();
    let corpus = standard_corpus(grid, 1010, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut checked = 0usize;
    while checked < 200 {
        let item = &corpus[rng.random_range(0..corpus.len())];
        let level = rng.random_range(0..=6u32);
        let index = rng.random_range(0..(1usize << level));
        let q = DyadicInterval::new(GridShift::Zero, level, index, &grid).unwrap();
        let norm = luxemburg_norm(&item.signal, &q, &star);
        if norm <= 0.0 {
            continue;
        }
        let restricted = item.signal.restricted(&q.arc(&grid));
        let m = carleson_core::operators::maximal(&restricted, MaximalMode::Uncentered);
        let ratio = m.mean_abs_on(&q.arc(&grid)) / norm;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        checked += 1;
    }
    let band = hi / lo;
    verdict(
        "10",
        "star equivalence band",
        band <= 20.0,
        format!("band [{lo:.4}, {hi:.4}], ratio {band:.3} over 200 pairs"),
        t0,
    );
}

/// 11. Domination stability: for the Hilbert and Carleson operators the
///     per-cell domination ratio supremum moves by at most a factor 1.5
///     between N = 256 and N = 1024.
#[test]
fn criterion_11_domination_stability() {
    let t0 = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for (op, phi_text) in [
        (CzOperatorKind::Hilbert, "id"),
        (CzOperatorKind::Carleson, "antonov"),
    ] {
        let phi = YoungFn::parse(phi_text).unwrap();
        let mut sups = Vec::new();
        for n in [256usize, 1024] {
            let grid = GridSpec::with_cells(n).unwrap();
            let corpus = standard_corpus(grid, 1111, 2);
            let mut worst = 0.0f64;
            for item in corpus.iter().take(4) {
                let report = domination_check(
                    &item.signal,
                    &DyadicInterval::whole_circle(),
                    &phi,
                    1.0,
                    op,
                    DecomposeOptions::default(),
                )
                .unwrap();
                assert!(report.certificate_passed, "{}: certificate failed", op.label());
                assert_eq!(report.undominated_cells, 0);
                worst = worst.max(report.sup_ratio);
            }
            sups.push(worst);
        }
        let change = (sups[1] / sups[0]).max(sups[0] / sups[1]);
        details.push(format!(
            "{}: {:.4} -> {:.4} (x{change:.3})",
            op.label(),
            sups[0],
            sups[1]
        ));
        if change > 1.5 {
            pass = false;
        }
    }
    verdict(
        "11",
        "domination stability",
        pass,
        details.join("; "),
        t0,
    );
}

/// 12. Exactness floor: adjoint pairing, the A_p duality identity, the
///     Hilbert transform of a cosine, and all CSV round-trips hold to
///     1e-10 relative.
#[test]
fn criterion_12_exactness_floor() {
    let t0 = Instant::now();
    let grid = GridSpec::with_cells(256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1212);

    // Adjoint pairing identity for the linearized Carleson operator.
    for _ in 0..10 {
        let f = random_signal(grid, &mut rng, 2.0);
        let h = random_signal(grid, &mut rng, 2.0);
        let choice = FrequencyChoice::new(
            &grid,
            (0..256).map(|_| rng.random_range(-128..128)).collect(),
        )
        .unwrap();
        let lhs = linearized_carleson(&f, &choice).inner(&h);
        let rhs = f.inner(&adjoint_linearized(&h, &choice));
        assert!(
            (lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1e-12),
            "adjoint pairing {lhs} vs {rhs}"
        );
    }

    // Duality identity for A_p constants.
    for p in [1.5, 2.0, 3.0] {
        let w = WeightFamily::Power { alpha: -0.5, x0: 0.0 }
            .instantiate(grid)
            .unwrap();
        let pprime = p / (p - 1.0);
        let sigma = w.dual_weight(p).unwrap();
        let lhs = ap_constant(&sigma, pprime, IntervalScope::AllIntervals)
            .unwrap()
            .value;
        let rhs = ap_constant(&w, p, IntervalScope::AllIntervals)
            .unwrap()
            .value
            .powf(pprime - 1.0);
        assert!((lhs - rhs).abs() <= 1e-10 * rhs, "duality {lhs} vs {rhs}");
    }

    // Hilbert of cosine.
    let f = StepSignal::from_fn(grid, |x| (std::f64::consts::TAU * x).cos());
    let hf = hilbert(&f);
    let expect = StepSignal::from_fn(grid, |x| (std::f64::consts::TAU * x).sin());
    for (a, b) in hf.values().iter().zip(expect.values()) {
        assert!((a - b).norm() <= 1e-10, "H(cos) deviates: {a} vs {b}");
    }

    // CSV round-trips: signals exactly, frequency choices exactly,
    // sparse families exactly, report rows exactly.
    let sig = random_signal(grid, &mut rng, 5.0);
    assert_eq!(StepSignal::from_csv(&sig.to_csv()).unwrap(), sig);

    let c = carleson(&StepSignal::from_fn(grid, |x| {
        (3.0 * std::f64::consts::TAU * x).cos() + 0.2
    }));
    let choice_text = c.choice.to_csv();
    assert_eq!(
        FrequencyChoice::from_csv(&choice_text, &grid).unwrap(),
        c.choice
    );

    let (family, _) =
        sparse_decompose(&sig, &DyadicInterval::whole_circle(), DecomposeOptions::default())
            .unwrap();
    let back = SparseFamily::from_csv(&family.to_csv(), &grid, family.lambda).unwrap();
    assert_eq!(family.len(), back.len());
    for (a, b) in family.members.iter().zip(&back.members) {
        assert_eq!(a.interval, b.interval);
        assert_eq!(a.witness, b.witness);
    }

    let mut row = ReportRow::new("x", "y", 256);
    row.p = Some(1.5);
    row.value = Some(0.12345678901234567);
    row.status = RowStatus::Pass;
    assert_eq!(rows_from_csv(&rows_to_csv(&[row.clone()])).unwrap(), vec![row]);

    // Norm scaling sanity at the same tolerance.
    let f = random_signal(grid, &mut rng, 2.0);
    let a = lp_norm(&f.scaled(7.0), 2.0, None);
    let b = 7.0 * lp_norm(&f, 2.0, None);
    assert!((a - b).abs() <= 1e-10 * b);

    verdict("12", "exactness floor", true, "all identities within 1e-10".into(), t0);
}
