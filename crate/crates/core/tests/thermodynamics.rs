//! Pressure sweeps: shape of `P(beta)`, closed forms, eigenfunction limits,
//! the precision guard and the rate verdict on random planted systems.

mod common;

use ergopt::examples;
use ergopt::pipeline::{precision_for, safe_grid};
use ergopt::pressure::{
    calibration_defect, eigenfunction, extended_entropy, pressure, pressure_sweep, scaled_log_sum_exp, ExtReal,
    PrecisionConfig, PressureError, Trust,
};
use ergopt::sft::{topological_entropy, WeightedEdgeGraph};
use ergopt::AnalysisError;
use ergopt::Weight;
use proptest::prelude::*;
use rand::Rng;

fn closed_form_gap(c: f64, beta: f64) -> ExtReal {
    // log(1 + e^(-c beta))
    let one = ExtReal::one(256);
    ergopt::perron::Real::add(&one, &ExtReal::from_f64(-c * beta, 256).exp())
        .ln()
        .unwrap()
}

fn sub(a: &ExtReal, b: &ExtReal) -> ExtReal {
    ergopt::perron::Real::sub(a, b)
}

#[test]
fn closed_forms_to_high_precision() {
    let config = PrecisionConfig::default();
    let tol = ExtReal::pow2(-(256 - 12), 256);
    let e2 = common::analyze(&examples::single_fixed_point());
    let e3 = common::analyze(&examples::two_fixed_points());
    let e4 = common::analyze(&examples::full_shift_and_fixed_point());
    for beta in [1.0, 10.0, 30.0, 50.0] {
        let p = pressure(&e2.exact.normalized, beta, &config).unwrap().value;
        assert!(ergopt::perron::Real::abs(&sub(&p, &closed_form_gap(1.0, beta))) <= tol);
        let p = pressure(&e3.exact.normalized, beta, &config).unwrap().value;
        assert!(ergopt::perron::Real::abs(&sub(&p, &closed_form_gap(1.5, beta))) <= tol);

        // (3 + sqrt(1 + 8 e^(-2 beta))) / 2, evaluated through f64 at small beta only
        if beta <= 10.0 {
            let x = (-2.0 * beta).exp();
            let expected = ((3.0 + (1.0 + 8.0 * x).sqrt()) / 2.0).ln();
            let p = pressure(&e4.exact.normalized, beta, &config).unwrap().value.to_f64();
            assert!((p - expected).abs() < 1e-14);
        }
    }
}

#[test]
fn pressure_at_zero_is_topological_entropy() {
    for seed in 0..30 {
        let a = common::analyze(&common::planted(seed));
        let p = pressure(&a.exact.normalized, 0.0, &PrecisionConfig::default())
            .unwrap()
            .value
            .to_f64();
        let counts = a.graph.count_matrix(0..a.graph.edges().len());
        let h = topological_entropy(&counts).unwrap();
        assert!((p - h).abs() < 1e-12, "seed {seed}: {p} vs {h}");
    }
}

#[test]
fn pressure_is_nonincreasing_and_convex() {
    let config = PrecisionConfig::default();
    for seed in 0..20 {
        let a = common::analyze(&common::planted(seed));
        let grid: Vec<f64> = (0..=24).map(|t| t as f64 * 0.5).collect();
        let h = a.extended_h(&config).unwrap();
        let points = pressure_sweep(&a.exact.normalized, &grid, &h, &config).unwrap();
        let p: Vec<f64> = points.iter().map(|pt| pt.pressure.to_f64()).collect();
        let scale = p.iter().map(|x| x.abs()).fold(1.0, f64::max);
        for t in 1..p.len() {
            assert!(p[t] - p[t - 1] <= 1e-12 * scale, "seed {seed}: not monotone at {t}");
        }
        for t in 1..p.len() - 1 {
            // second differences in extended precision
            let d2 = sub(
                &sub(&points[t + 1].pressure, &points[t].pressure),
                &sub(&points[t].pressure, &points[t - 1].pressure),
            );
            assert!(d2.to_f64() >= -1e-12 * scale, "seed {seed}: not convex at {t}");
        }
        for pt in &points {
            assert!(
                !pt.residual.is_negative() || pt.trust == Trust::Untrusted,
                "seed {seed}"
            );
        }
    }
}

#[test]
fn eigenfunction_defect_shrinks_like_one_over_beta() {
    let config = PrecisionConfig::default();
    for seed in 0..20 {
        let a = common::analyze(&common::planted(seed));
        let g: WeightedEdgeGraph<f64> = a.exact.normalized.map_weights(|_, e| e.weight.to_f64());
        let max_in = g.incoming().iter().map(Vec::len).max().unwrap() as f64;
        for beta in [5.0, 20.0, 40.0] {
            let f = eigenfunction(&a.exact.normalized, beta, &config).unwrap();
            let defect = calibration_defect(&g, &f.log_scaled);
            assert!(
                defect <= max_in.ln() / beta + 1e-12,
                "seed {seed} beta {beta}: {defect}"
            );
        }
    }
}

#[test]
fn two_fixed_points_eigenfunction_limit() {
    let a = common::analyze(&examples::two_fixed_points());
    let f = eigenfunction(&a.exact.normalized, 50.0, &PrecisionConfig::default()).unwrap();
    // calibrated subactions of this potential are (c - 1/2 .. c, c) shapes; the limit is (-1/2, 0)
    assert!((f.log_scaled[0] + 0.5).abs() < 0.1);
    assert!(f.log_scaled[1].abs() < 0.1);
}

proptest! {
    #[test]
    fn log_sum_exp_envelope(terms in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..20), n in 1usize..200) {
        let v = scaled_log_sum_exp(&terms, n as f64).unwrap();
        let top = terms.iter().map(|(a, b)| a + b).fold(f64::NEG_INFINITY, f64::max);
        let slack = (terms.len() as f64).ln() / n as f64;
        prop_assert!(v - top >= -1e-12);
        prop_assert!(v - top <= slack + 1e-12);
    }
}

#[test]
fn precision_guard_rejects_underflowing_ranges() {
    let a = common::analyze(&examples::two_fixed_points());
    let config = PrecisionConfig::with_bits(128);
    let err = a.rate_report(&[10.0, 40.0, 80.0], &config, 1e-3).unwrap_err();
    let AnalysisError::Pressure(PressureError::InsufficientPrecision {
        suggested_bits,
        max_beta,
        ..
    }) = &err
    else {
        panic!("unexpected {err:?}");
    };
    let message = err.to_string();
    assert!(
        message.contains("--precision-bits") && message.contains("--beta-max"),
        "{message}"
    );
    assert!(a
        .rate_report(&[10.0, 40.0, 80.0], &PrecisionConfig::with_bits(*suggested_bits), 1e-3)
        .is_ok());
    let r = a.rate_report(&[*max_beta / 3.0, *max_beta / 2.0, *max_beta], &config, 1e-3);
    assert!(r.is_ok(), "{r:?}");
}

#[test]
fn extended_entropy_matches_double_precision() {
    let config = PrecisionConfig::default();
    let mut rng = common::rng(99);
    for _ in 0..30 {
        let n = rng.gen_range(2..6);
        let counts: Vec<Vec<u32>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if j == (i + 1) % n { 1 } else { rng.gen_range(0..3) })
                    .collect()
            })
            .collect();
        let h = extended_entropy(&counts, &config).unwrap().value.to_f64();
        assert!((h - topological_entropy(&counts).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn rate_verdict_on_planted_corpus() {
    for seed in 0..25 {
        let a = common::analyze(&common::planted(seed));
        let config = precision_for(a.lambda(), &PrecisionConfig::default());
        let grid = safe_grid(a.lambda(), &config, 8);
        let report = a.rate_report(&grid, &config, 1e-3).unwrap();
        assert!(
            report.verdict.pass,
            "seed {seed}: gamma {} lambda {:?}",
            report.estimate.gamma, report.verdict.lambda
        );
    }
}
