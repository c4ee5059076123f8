//! Acceptance criteria. Each criterion is evaluated in full and reported as
//! one PASS/FAIL line; the test fails afterwards if any line is FAIL.

use std::time::{Duration, Instant};

use portclone::channels::{
    avg_fidelity, clone_entanglement_fidelity, entanglement_fidelity_choi, entanglement_fidelity_formula,
    fidelity_report, haar_average_check, optimal_clone_fidelity, pbt_signals, Protocol,
};
use portclone::measurements::{clone_mpbt_povm, std_pbt_povm, std_pbtc_povm};
use portclone::states::{ensemble_average, pbtc_ensemble};
use portclone::verification::{cycle_sum, fidelity_lower_bound, run_suite, CheckKind, SuiteOptions};
use portclone::Result;

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn scaled_purity(d: usize, n: usize, m: usize) -> Result<f64> {
    let bar = ensemble_average(&pbtc_ensemble(n, m, d)?);
    Ok((d as f64).powi(n as i32 + 1) * bar.trace_product(&bar)?.re)
}

fn optimal_cloning() -> Result<Outcome> {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for d in [2, 3] {
        for m in [1, 2, 3] {
            let f = avg_fidelity(clone_entanglement_fidelity(d, m)?, d)?;
            worst = worst.max((f - optimal_clone_fidelity(d, m)).abs());
        }
    }
    let elapsed = start.elapsed();
    Ok(outcome(
        worst <= 1e-10 && elapsed < Duration::from_secs(1),
        format!(
            "max |f - (d+2M-1)/(M(d+1))| = {worst:.2e}, {:.3} s",
            elapsed.as_secs_f64()
        ),
    ))
}

fn std_beats_clone_first() -> Result<Outcome> {
    let start = Instant::now();
    let ceiling = 5.0 / 6.0 + 1e-9;
    let mut pass = true;
    let mut notes = Vec::new();
    let mut previous = f64::NEG_INFINITY;
    for n in 2..=6 {
        let std = fidelity_report(Protocol::StdPbtc, 2, n, 2)?.average_fidelity;
        let alt = fidelity_report(Protocol::CloneMpbt, 2, n, 2)?.average_fidelity;
        let gap = std - alt;
        if gap <= 1e-6 {
            pass = false;
            notes.push(format!("N={n}: gap {gap:.3e}"));
        }
        if std >= ceiling || alt >= ceiling {
            pass = false;
            notes.push(format!("N={n}: above optimal cloning"));
        }
        if std < previous {
            pass = false;
            notes.push(format!("N={n}: std-pbtc decreased"));
        }
        previous = std;
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    let detail = if notes.is_empty() {
        format!("all gaps > 1e-6, {:.2} s", elapsed.as_secs_f64())
    } else {
        format!("{}; {:.2} s", notes.join("; "), elapsed.as_secs_f64())
    };
    Ok(outcome(pass, detail))
}

fn convergence_and_bound() -> Result<Outcome> {
    let (d, m) = (2, 2);
    let target = optimal_clone_fidelity(d, m);
    let mut pass = true;
    let mut gaps = Vec::new();
    let mut worst_slack = f64::INFINITY;
    for n in 2..=6 {
        let report = fidelity_report(Protocol::StdPbtc, d, n, m)?;
        let gap = target - report.average_fidelity;
        if let Some(&last) = gaps.last() {
            pass &= gap < last;
        }
        gaps.push(gap);
        let slack = report.entanglement_fidelity - fidelity_lower_bound(d, m, scaled_purity(d, n, m)?);
        worst_slack = worst_slack.min(slack);
        pass &= slack >= -1e-10;
    }
    Ok(outcome(
        pass,
        format!(
            "gaps {}; min(F - bound) = {worst_slack:.3e}",
            gaps.iter().map(|g| format!("{g:.6}")).collect::<Vec<_>>().join(" > ")
        ),
    ))
}

fn single_clone_reduction() -> Result<Outcome> {
    let d = 2;
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let pbtc = std_pbtc_povm(n, 1, d)?;
        let pbt = std_pbt_povm(n, d)?;
        assert_eq!(pbtc.len(), pbt.len());
        for ((set, a), (port, b)) in pbtc.elements().iter().zip(pbt.elements()) {
            assert_eq!(set.first(), *port);
            worst = worst.max(a.max_abs_diff(b)?);
        }
    }
    let f1 = fidelity_report(Protocol::StdPbt, d, 1, 1)?.entanglement_fidelity;
    let mut pass = worst <= 1e-12 && (f1 - 0.25).abs() <= 1e-10;
    let mut scaled = Vec::new();
    for n in [8, 10] {
        let f = fidelity_report(Protocol::StdPbt, d, n, 1)?.entanglement_fidelity;
        let value = n as f64 * (1.0 - f);
        pass &= (0.4..=1.1).contains(&value);
        scaled.push(format!("N={n}: N(1-F) = {value:.4}"));
    }
    Ok(outcome(
        pass,
        format!("max elementwise diff {worst:.2e}; F(N=1) = {f1}; {}", scaled.join(", ")),
    ))
}

fn identity_suite() -> Result<Outcome> {
    let mut pass = true;
    let mut notes = Vec::new();
    for (d, n, m) in [(2, 2, 2), (2, 3, 2), (2, 4, 2), (3, 3, 2)] {
        let report = run_suite(d, n, m, SuiteOptions::default())?;
        for c in &report.checks {
            let lettered = c.name.as_bytes()[0];
            if !(b'a'..=b'h').contains(&lettered) && lettered != b'k' {
                continue;
            }
            assert_eq!(c.kind, CheckKind::Exact, "{}", c.name);
            if c.skipped {
                continue;
            }
            if !c.pass || c.deviation > 1e-10 {
                pass = false;
                notes.push(format!("d={d} N={n}: {} deviation {:.2e}", c.name, c.deviation));
            }
        }
        if 2 * m <= n {
            let cs = cycle_sum(d, m, n)?;
            let target = 1.0 / (d as f64).powi(n as i32 + 1);
            let dense_ok = report.get("h.disjoint_overlap_dense").is_some_and(|c| !c.skipped);
            let ok = cs.routes_agree()
                && cs.overlap == cs.expected
                && (cs.overlap_f64() - target).abs() <= 1e-12
                && dense_ok;
            pass &= ok;
            notes.push(format!(
                "d={d} N={n}: disjoint overlap {} (exact, dense checked)",
                cs.overlap
            ));
        }
    }
    Ok(outcome(pass, notes.join("; ")))
}

fn route_equivalence() -> Result<Outcome> {
    let d = 2;
    let mut worst: f64 = 0.0;
    for n in 2..=4 {
        let signals = pbt_signals(n, d)?;
        let std = std_pbtc_povm(n, 2, d)?;
        let alt = clone_mpbt_povm(n, 2, d)?;
        for slot in 1..=2 {
            for povm in [&std, &alt] {
                let formula = entanglement_fidelity_formula(povm, slot, &signals)?.total;
                let choi = entanglement_fidelity_choi(povm, slot)?;
                worst = worst.max((formula - choi).abs());
            }
        }
    }
    Ok(outcome(
        worst <= 1e-10,
        format!("max |F_formula - F_choi| = {worst:.2e}"),
    ))
}

fn purity_trend() -> Result<Outcome> {
    let values: Vec<f64> = [4, 5, 6]
        .into_iter()
        .map(|n| Ok((scaled_purity(2, n, 2)? - 1.0).abs()))
        .collect::<Result<_>>()?;
    let pass = values.windows(2).all(|w| w[1] < w[0]);
    Ok(outcome(
        pass,
        format!(
            "|d^(N+1) Tr[bar^2] - 1| = {}",
            values.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn haar_cross_check() -> Result<Outcome> {
    let (d, n, m) = (2, 3, 2);
    let exact = fidelity_report(Protocol::StdPbtc, d, n, m)?.average_fidelity;
    let povm = std_pbtc_povm(n, m, d)?;
    let est = haar_average_check(&povm, 1, 1000, 20240917)?;
    let diff = (est.mean - exact).abs();
    Ok(outcome(
        diff <= 3.0 * est.std_error + 1e-12,
        format!(
            "MC {:.9} (SE {:.2e}) vs exact {exact:.9}, |diff| = {diff:.2e}",
            est.mean, est.std_error
        ),
    ))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Criterion); 8] = [
        ("1 optimal cloning fidelity", optimal_cloning),
        ("2 std-pbtc above clone-then-mpbt", std_beats_clone_first),
        ("3 convergence and fidelity bound", convergence_and_bound),
        ("4 single-clone reduction", single_clone_reduction),
        ("5 identity suite", identity_suite),
        ("6 formula and Choi routes agree", route_equivalence),
        ("7 purity trend", purity_trend),
        ("8 Haar cross-check", haar_cross_check),
    ];
    let mut failed = Vec::new();
    println!();
    for (name, run) in criteria {
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!("{} criterion {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
