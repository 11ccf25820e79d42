//! The four subcommands. Each writes its human-readable output to `out` and
//! returns an exit status; computational failures come back as errors.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ergopt::maxplus::MaxPlus;
use ergopt::oracle::{check_analysis, OracleOptions};
use ergopt::perron::Real;
use ergopt::pipeline::{linear_grid, precision_for, safe_grid};
use ergopt::pressure::{pressure_sweep, PrecisionConfig, PressurePoint, DIAGNOSTIC_CAVEAT, PRINT_DIGITS};
use ergopt::weight::format_rational;
use ergopt::{Analysis, Rational, Weight};
use serde_json::{json, Value};

use crate::input::{RunOptions, SystemSpec};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_FAIL: u8 = 2;

/// Grid points used when neither the file nor the flags give `beta_steps`.
pub const DEFAULT_STEPS: usize = 10;

pub const PRESSURE_NOTE: &str =
    "pressures refer to the normalized potential; for the original one use P_A(beta) = P_normalized(beta) + beta * m(A)";

pub fn run_analysis(spec: &SystemSpec) -> Result<Analysis> {
    Ok(Analysis::run(&spec.instance, &spec.options.tolerances())?)
}

fn omega(c: usize) -> String {
    format!("Ω{}", c + 1)
}

fn mp_text(x: &MaxPlus<Rational>) -> String {
    match x {
        MaxPlus::Finite(v) => format_rational(v),
        MaxPlus::Bottom => "-inf".into(),
    }
}

fn mp_json(x: &MaxPlus<Rational>) -> Value {
    match x {
        MaxPlus::Finite(v) => json!({ "exact": format_rational(v), "approx": v.to_f64() }),
        MaxPlus::Bottom => Value::Null,
    }
}

fn exact_json(v: &Rational) -> Value {
    json!({ "exact": format_rational(v), "approx": v.to_f64() })
}

fn cycle_text(cycle: &[usize]) -> String {
    let mut names: Vec<String> = cycle.iter().map(|&c| omega(c)).collect();
    if let Some(first) = names.first().cloned() {
        names.push(first);
    }
    names.join(" -> ")
}

/// True when every normalized weight is exactly zero, so the whole shift is
/// one Aubry component with no exterior.
fn is_trivial(a: &Analysis) -> bool {
    a.exact.normalized.weights().all(|w| *w == Rational::default())
}

/// Text report and machine-readable summary of the zero-temperature objects.
pub fn analysis_report(a: &Analysis) -> (String, Value) {
    let stage = &a.exact;
    let g = &stage.normalized;
    let dec = &stage.decomposition;
    let mut s = String::new();
    let words: Vec<String> = g
        .vertices()
        .iter()
        .map(|w| {
            if w.is_empty() {
                "(empty)".to_string()
            } else {
                w.to_string()
            }
        })
        .collect();

    writeln!(
        s,
        "system: alphabet {}, range {}, {} vertices, {} edges",
        a.instance.system.alphabet_size(),
        g.range(),
        g.vertex_count(),
        g.edges().len()
    )
    .unwrap();
    writeln!(s, "m(A) = {} ({:.17e})", format_rational(a.m()), a.m().to_f64()).unwrap();
    writeln!(
        s,
        "\ncalibrated subaction V (normalized weight = A - m + V(tail) - V(head)):"
    )
    .unwrap();
    writeln!(s, "  {:>6}  {:<10}  V", "vertex", "word").unwrap();
    for (v, value) in stage.normalization.subaction.iter().enumerate() {
        writeln!(s, "  {:>6}  {:<10}  {}", v, words[v], format_rational(value)).unwrap();
    }

    writeln!(s, "\nAubry components:").unwrap();
    writeln!(
        s,
        "  {:<4}  {:<24}  {:>6}  {:>22}  U(Ω)",
        "id", "vertices", "edges", "entropy"
    )
    .unwrap();
    for c in &dec.components {
        let vs: Vec<&str> = c.vertices.iter().map(|&v| words[v].as_str()).collect();
        writeln!(
            s,
            "  {:<4}  {:<24}  {:>6}  {:>22.15e}  {}",
            format!("Ω{}", c.id),
            vs.join(" "),
            c.edges.len(),
            c.entropy,
            format_rational(&c.subaction_value)
        )
        .unwrap();
    }
    writeln!(s, "h = {:.17e}", dec.h).unwrap();
    let max_ids: Vec<String> = dec.max_entropy.iter().map(|&c| omega(c)).collect();
    writeln!(s, "maximal-entropy components: {}", max_ids.join(", ")).unwrap();
    let excluded = a.excluded_components();
    if !excluded.is_empty() {
        let ids: Vec<String> = excluded.iter().map(|&c| omega(c)).collect();
        writeln!(s, "excluded from the rate matrix (entropy below h): {}", ids.join(", ")).unwrap();
    }

    let ext = &stage.ext;
    let n = ext.n();
    if is_trivial(a) {
        writeln!(s, "\nΩ = X, single component, S^ext undefined (no exterior)").unwrap();
    } else {
        writeln!(s, "\nS^ext (row j -> column i, exact):").unwrap();
        write!(s, "  {:<6}", "").unwrap();
        for i in 0..n {
            write!(s, "  {:>12}", omega(i)).unwrap();
        }
        writeln!(s).unwrap();
        for j in 0..n {
            write!(s, "  {:<6}", omega(j)).unwrap();
            for i in 0..n {
                write!(s, "  {:>12}", mp_text(ext.get(j, i))).unwrap();
            }
            writeln!(s).unwrap();
        }
        for j in 0..n {
            for i in 0..n {
                let skipped = &ext.skipped[j][i];
                if !skipped.is_empty() {
                    let vs: Vec<&str> = skipped.iter().map(|&v| words[v].as_str()).collect();
                    writeln!(
                        s,
                        "  S^ext({},{}) skips vertices without exterior in-edges: {}",
                        j + 1,
                        i + 1,
                        vs.join(" ")
                    )
                    .unwrap();
                }
            }
        }
    }

    let bound = &stage.bound;
    match &bound.lambda {
        MaxPlus::Finite(l) => writeln!(
            s,
            "\nlambda = {} ({:.17e}), witness cycle {}",
            format_rational(l),
            l.to_f64(),
            cycle_text(&bound.witness_cycle)
        )
        .unwrap(),
        MaxPlus::Bottom => writeln!(s, "\nlambda = -inf (no cycle of finite barriers)").unwrap(),
    }
    writeln!(s, "note: {PRESSURE_NOTE}").unwrap();

    let machine = json!({
        "m": exact_json(a.m()),
        "vertices": words,
        "subaction": stage.normalization.subaction.iter().map(format_rational).collect::<Vec<_>>(),
        "components": dec.components.iter().map(|c| json!({
            "id": c.id,
            "vertices": c.vertices.iter().map(|&v| words[v].clone()).collect::<Vec<_>>(),
            "edges": c.edges.iter().map(|&e| g.edges()[e].label.to_string()).collect::<Vec<_>>(),
            "entropy": c.entropy,
            "subaction_value": format_rational(&c.subaction_value),
        })).collect::<Vec<_>>(),
        "h": dec.h,
        "max_entropy": dec.max_entropy.iter().map(|c| c + 1).collect::<Vec<_>>(),
        "excluded": excluded.iter().map(|c| c + 1).collect::<Vec<_>>(),
        "s_ext": (0..n).map(|j| (0..n).map(|i| mp_json(ext.get(j, i))).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "s_ext_skipped": (0..n).map(|j| (0..n).map(|i| {
            ext.skipped[j][i].iter().map(|&v| words[v].clone()).collect::<Vec<_>>()
        }).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "lambda": mp_json(&bound.lambda),
        "witness_cycle": bound.witness_cycle.iter().map(|c| c + 1).collect::<Vec<_>>(),
        "pressure_note": PRESSURE_NOTE,
    });
    (s, machine)
}

/// `<dir>/<stem>.analysis.json` next to the input file.
pub fn analysis_path(input: &Path) -> PathBuf {
    let stem = input
        .file_stem()
        .map_or_else(|| "system".into(), |s| s.to_string_lossy().into_owned());
    input.with_file_name(format!("{stem}.analysis.json"))
}

pub fn cmd_analyze(input: &Path, spec: &SystemSpec, out: &mut dyn Write) -> Result<u8> {
    let a = run_analysis(spec)?;
    let (text, machine) = analysis_report(&a);
    out.write_all(text.as_bytes())?;
    let path = analysis_path(input);
    let mut body = serde_json::to_string_pretty(&machine)?;
    body.push('\n');
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    writeln!(out, "machine-readable copy: {}", path.display())?;
    Ok(EXIT_OK)
}

/// The file's mantissa width when it sets one; otherwise the default,
/// widened so the automatic grid reaches the largest safe `beta`.
pub fn effective_precision(a: &Analysis, options: &RunOptions) -> PrecisionConfig {
    match options.precision_bits {
        Some(_) => options.precision(),
        None => precision_for(a.lambda(), &PrecisionConfig::default()),
    }
}

/// The sweep grid: explicit bounds when given, otherwise the largest range
/// the mantissa supports for this `lambda`.
pub fn resolve_grid(a: &Analysis, options: &RunOptions, config: &PrecisionConfig) -> Vec<f64> {
    let steps = options.beta_steps.unwrap_or(DEFAULT_STEPS);
    if options.beta_min.is_none() && options.beta_max.is_none() {
        return safe_grid(a.lambda(), config, steps + 1);
    }
    let safe_max = safe_grid(a.lambda(), config, 2)[1];
    let beta_max = options.beta_max.unwrap_or(safe_max);
    let beta_min = options.beta_min.unwrap_or(beta_max / 2.0);
    linear_grid(beta_min, beta_max, steps)
}

fn sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// CSV with columns `beta,pressure,residual,log_residual,slope,trusted`.
/// The slope in a row is the finite difference of `log D` against the
/// previous row; it is empty on the first row and wherever either residual
/// is not positive.
pub fn pressure_csv(points: &[PressurePoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["beta", "pressure", "residual", "log_residual", "slope", "trusted"])?;
    for (t, p) in points.iter().enumerate() {
        let slope = t
            .checked_sub(1)
            .and_then(|prev| {
                let q = &points[prev];
                let (la, lb) = (q.log_residual_ext.as_ref()?, p.log_residual_ext.as_ref()?);
                Some(lb.sub(la).to_f64() / (p.beta - q.beta))
            })
            .map_or_else(String::new, sci);
        w.write_record([
            format!("{:.*e}", PRINT_DIGITS - 1, p.beta),
            p.pressure.to_sci(PRINT_DIGITS),
            p.residual.to_sci(PRINT_DIGITS),
            sci(p.log_residual),
            slope,
            p.trust.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Run the sweep for `spec` on its resolved grid.
pub fn sweep(a: &Analysis, options: &RunOptions) -> Result<Vec<PressurePoint>> {
    let config = effective_precision(a, options);
    let betas = resolve_grid(a, options, &config);
    let beta_max = betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    config.check_range(a.lambda(), beta_max)?;
    let h = a.extended_h(&config)?;
    Ok(pressure_sweep(&a.exact.normalized, &betas, &h, &config)?)
}

pub fn cmd_pressure(spec: &SystemSpec, csv_out: Option<&Path>, out: &mut dyn Write) -> Result<u8> {
    let a = run_analysis(spec)?;
    let points = sweep(&a, &spec.options)?;
    let csv = pressure_csv(&points)?;
    match csv_out {
        Some(path) => {
            std::fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
            let untrusted = points
                .iter()
                .filter(|p| p.trust == ergopt::pressure::Trust::Untrusted)
                .count();
            writeln!(
                out,
                "wrote {} rows to {} ({untrusted} untrusted)",
                points.len(),
                path.display()
            )?;
            writeln!(out, "note: {PRESSURE_NOTE}")?;
        }
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(spec: &SystemSpec, out: &mut dyn Write) -> Result<u8> {
    let a = run_analysis(spec)?;
    let config = effective_precision(&a, &spec.options);
    let betas = resolve_grid(&a, &spec.options, &config);
    let tol = spec.options.tolerances().verify;
    let report = a.rate_report(&betas, &config, tol)?;
    let verdict = &report.verdict;
    let est = &report.estimate;

    writeln!(out, "h = {:.17e}", a.h())?;
    for c in a.excluded_components() {
        writeln!(
            out,
            "note: {} has entropy {:.6e} < h and is excluded from the rate matrix",
            omega(c),
            a.exact.decomposition.components[c].entropy
        )?;
    }
    match verdict.lambda {
        Some(l) => writeln!(
            out,
            "lambda = {l:.17e}, witness cycle {}",
            cycle_text(&a.exact.bound.witness_cycle)
        )?,
        None => writeln!(out, "lambda = -inf (no cycle of finite barriers; the bound is vacuous)")?,
    }
    if est.exact_zero {
        writeln!(out, "gamma = -inf (P = h exactly on the whole grid)")?;
    } else if let Some((b0, b1)) = est.gamma_betas {
        writeln!(
            out,
            "gamma = {:.17e} (slope of log D between beta = {b0} and {b1})",
            est.gamma
        )?;
    }
    if let Some(s) = est.scaled_log {
        writeln!(out, "(1/beta) log D at the largest trusted beta = {s:.6e}")?;
    }
    let trusted = report
        .points
        .iter()
        .filter(|p| p.trust == ergopt::pressure::Trust::Trusted)
        .count();
    writeln!(
        out,
        "grid: {} points on [{}, {}], {trusted} trusted, {} bits",
        betas.len(),
        betas[0],
        betas[betas.len() - 1],
        config.mantissa_bits
    )?;

    if !verdict.diagnostics.is_empty() {
        writeln!(out, "\npair diagnostic: gamma + U(Ω_i) >= S^ext(j,i) + U(Ω_j)")?;
        writeln!(out, "  {:<6}  {:<6}  {:>24}  {:>24}  holds", "j", "i", "lhs", "rhs")?;
        for d in &verdict.diagnostics {
            writeln!(
                out,
                "  {:<6}  {:<6}  {:>24.15e}  {:>24.15e}  {}",
                omega(d.from),
                omega(d.to),
                d.lhs,
                d.rhs,
                d.holds
            )?;
        }
        writeln!(out, "caveat: {DIAGNOSTIC_CAVEAT}")?;
    }
    writeln!(out, "note: {PRESSURE_NOTE}")?;
    if verdict.pass {
        writeln!(out, "PASS: gamma >= lambda - {tol}")?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "FAIL: gamma < lambda - {tol}")?;
        Ok(EXIT_FAIL)
    }
}

pub fn cmd_oracle(spec: &SystemSpec, label: &str, max_len: Option<usize>, out: &mut dyn Write) -> Result<u8> {
    let a = run_analysis(spec)?;
    let options = OracleOptions {
        max_len,
        precision: spec.options.precision(),
        ..OracleOptions::default()
    };
    let (reports, refused) = check_analysis(&a, label, &options);
    writeln!(
        out,
        "  {:<28}  {:>24}  {:>24}  {:>10}  {:>8}  status",
        "quantity", "optimized", "oracle", "discrepancy", "tol"
    )?;
    for r in &reports {
        writeln!(
            out,
            "  {:<28}  {:>24}  {:>24}  {:>10.3e}  {:>8.1e}  {}",
            r.quantity,
            sci(r.optimized),
            sci(r.oracle),
            r.discrepancy,
            r.tolerance,
            if r.passed() { "ok" } else { "MISMATCH" }
        )?;
    }
    for (quantity, e) in &refused {
        writeln!(out, "  {quantity:<28}  skipped: {e}")?;
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    writeln!(
        out,
        "{} checks, {failed} mismatches, {} skipped",
        reports.len(),
        refused.len()
    )?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAIL })
}
