//! Command-line front end. Parsing lives here so the binary stays a thin
//! shell and the commands can be driven in-process from tests.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::channels::{fidelity_report, optimal_clone_fidelity, FidelityReport, Protocol};
use crate::error::{Error, Result};
use crate::measurements::{clone_mpbt_povm, mpbt_povm, std_pbt_povm, std_pbtc_povm};
use crate::tensor::{set_dimension_cap, DEFAULT_DIM_CAP};
use crate::verification::{run_suite, CheckKind, SuiteOptions, SuiteReport};

pub const CSV_HEADER: &str = "protocol,d,N,M,F,f,delta_contribution,runtime_ms";

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
}

#[derive(Debug, Parser)]
#[command(
    name = "portclone",
    version,
    about = "Port-based telecloning simulator and verification suite"
)]
pub struct Cli {
    /// Largest Hilbert-space dimension any operator may have.
    #[arg(long, global = true, env = "PORTCLONE_DIM_CAP", default_value_t = DEFAULT_DIM_CAP)]
    pub dim_cap: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one protocol at one parameter point and print its report.
    Fidelity(FidelityArgs),
    /// Evaluate protocols over a range of port counts; write CSV and SVG.
    Sweep(SweepArgs),
    /// Run the identity checks and print a summary.
    Verify(VerifyArgs),
    /// Write a measurement's elements as JSON.
    PovmDump(PovmDumpArgs),
}

#[derive(Debug, Args)]
pub struct FidelityArgs {
    #[arg(long)]
    pub protocol: String,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long = "N", default_value_t = 1)]
    pub n: usize,
    #[arg(long = "M", default_value_t = 1)]
    pub m: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated subset of std-pbtc, clone-mpbt, std-pbt, mpbt.
    #[arg(long, value_delimiter = ',', default_value = "std-pbtc,clone-mpbt")]
    pub protocols: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long = "M", default_value_t = 2)]
    pub m: usize,
    /// Inclusive range `lo:hi`, or a single value.
    #[arg(long = "N", default_value = "2:6")]
    pub n: String,
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Also write the reports as a JSON array.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Record runtime_ms as 0 so the CSV is byte-stable between runs.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long = "M")]
    pub m: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Corrupt one measurement element to confirm the checks can fail.
    #[arg(long)]
    pub fault: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the full results as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PovmDumpArgs {
    #[arg(long)]
    pub protocol: String,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long = "M", default_value_t = 1)]
    pub m: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A fully validated sweep request.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub protocols: Vec<Protocol>,
    pub d: usize,
    pub m: usize,
    pub n_lo: usize,
    pub n_hi: usize,
}

impl SweepSpec {
    pub fn from_args(args: &SweepArgs, cap: usize) -> Result<Self> {
        let mut protocols = Vec::new();
        for name in &args.protocols {
            let p: Protocol = name.trim().parse()?;
            if !p.uses_ports() {
                return Err(Error::InvalidArgument(
                    "the clone protocol has no ports to sweep".into(),
                ));
            }
            if !protocols.contains(&p) {
                protocols.push(p);
            }
        }
        if protocols.is_empty() {
            return Err(Error::InvalidArgument("no protocols requested".into()));
        }
        let (n_lo, n_hi) = parse_range(&args.n)?;
        let spec = SweepSpec {
            protocols,
            d: args.d,
            m: args.m,
            n_lo,
            n_hi,
        };
        spec.validate(cap)?;
        Ok(spec)
    }

    fn validate(&self, cap: usize) -> Result<()> {
        if self.d < 2 || self.m == 0 {
            return Err(Error::InvalidArgument("need d >= 2 and M >= 1".into()));
        }
        if self.n_lo < self.m {
            return Err(Error::InvalidArgument(format!(
                "N range starts at {} below M = {}",
                self.n_lo, self.m
            )));
        }
        for p in &self.protocols {
            let (n, m) = (self.n_hi, if *p == Protocol::StdPbt { 1 } else { self.m });
            let extra = if *p == Protocol::Mpbt { m } else { 1 };
            let dim = (self.d as u128).pow((n + extra) as u32);
            if dim > cap as u128 {
                return Err(Error::DimensionCap {
                    dim: usize::try_from(dim).unwrap_or(usize::MAX),
                    cap,
                    hint: "; shrink the N range",
                });
            }
        }
        Ok(())
    }

    /// Grid points in output order.
    pub fn points(&self) -> Vec<(Protocol, usize)> {
        let mut protocols = self.protocols.clone();
        protocols.sort_by_key(|p| p.name());
        protocols
            .into_iter()
            .flat_map(|p| (self.n_lo..=self.n_hi).map(move |n| (p, n)))
            .collect()
    }
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("bad N range `{s}` (expected lo:hi)"));
    let (lo, hi) = match s.split_once(':') {
        Some((a, b)) => (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ),
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Evaluates every grid point on a pool of `jobs` workers. The order of the
/// result is fixed by [`SweepSpec::points`], not by scheduling.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<FidelityReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let points = spec.points();
    pool.install(|| {
        points
            .par_iter()
            .map(|&(p, n)| fidelity_report(p, spec.d, n, spec.m))
            .collect()
    })
}

/// `x` with 12 significant digits, trailing zeros dropped.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.11e}");
        match s.split_once('e') {
            Some((mant, e)) => format!("{}e{e}", trim_zeros(mant.to_string())),
            None => s,
        }
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn render_csv(reports: &[FidelityReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.protocol,
            r.d,
            r.n,
            r.m,
            format_sig(r.entanglement_fidelity),
            format_sig(r.average_fidelity),
            format_sig(r.delta_contribution),
            format_sig(r.runtime_ms)
        );
    }
    out
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Static line chart of `f` against `N`, one polyline per protocol, with
/// the optimal-cloning value as a dashed horizontal line.
pub fn render_svg(reports: &[FidelityReport], d: usize, m: usize) -> String {
    let asymptote = optimal_clone_fidelity(d, m);
    let (n_lo, n_hi) = reports
        .iter()
        .fold((usize::MAX, 0), |(lo, hi), r| (lo.min(r.n), hi.max(r.n)));
    let (n_lo, n_hi) = if n_lo > n_hi {
        (0, 1)
    } else {
        (n_lo, n_hi.max(n_lo + 1))
    };
    let f_min = reports.iter().map(|r| r.average_fidelity).fold(asymptote, f64::min);
    let (y_lo, y_hi) = ((f_min - 0.02).max(0.0), (asymptote + 0.02).min(1.0));
    let x = |n: f64| MARGIN + (n - n_lo as f64) / (n_hi - n_lo) as f64 * (SVG_W - 2.0 * MARGIN);
    let y = |f: f64| SVG_H - MARGIN - (f - y_lo) / (y_hi - y_lo) * (SVG_H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(
        s,
        r#"<metadata>{{"d":{d},"M":{m},"asymptote":{}}}</metadata>"#,
        format_sig(asymptote)
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    // axes
    let (x0, x1, y0, y1) = (MARGIN, SVG_W - MARGIN, SVG_H - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for n in n_lo..=n_hi {
        let px = x(n as f64);
        let _ = writeln!(
            s,
            r#"<text x="{px:.1}" y="{:.1}" font-size="12" text-anchor="middle">{n}</text>"#,
            y0 + 18.0
        );
    }
    for k in 0..=4 {
        let f = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="end">{f:.3}</text>"#,
            x0 - 6.0,
            y(f) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">N</text>"#,
        (x0 + x1) / 2.0,
        SVG_H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 15 {:.1})">f</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let ya = y(asymptote);
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{ya:.2}" x2="{x1}" y2="{ya:.2}" stroke="gray" stroke-dasharray="6 4"/>"#
    );

    let mut protocols: Vec<Protocol> = reports.iter().map(|r| r.protocol).collect();
    protocols.dedup();
    for (i, p) in protocols.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = reports
            .iter()
            .filter(|r| r.protocol == *p)
            .map(|r| format!("{:.2},{:.2}", x(r.n as f64), y(r.average_fidelity)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = y1 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            x1 - 150.0,
            x1 - 125.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="12">{p}</text>"#,
            x1 - 120.0,
            ly + 4.0
        );
    }
    let ly = y1 + 18.0 * protocols.len() as f64;
    let _ = writeln!(
        s,
        r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="gray" stroke-dasharray="6 4"/>"#,
        x1 - 150.0,
        x1 - 125.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="12">optimal cloning</text>"#,
        x1 - 120.0,
        ly + 4.0
    );
    s.push_str("</svg>\n");
    s
}

pub fn render_summary(report: &SuiteReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "verification d={} N={} M={} tol={:e}{}",
        report.d,
        report.n,
        report.m,
        report.tol,
        if report.fault_injected { " (fault injected)" } else { "" }
    );
    let _ = writeln!(
        s,
        "{:<36} {:<6} {:>12} {:>10}  status",
        "check", "kind", "deviation", "threshold"
    );
    for c in &report.checks {
        let kind = match c.kind {
            CheckKind::Exact => "exact",
            CheckKind::Trend => "trend",
        };
        let status = if c.skipped {
            "SKIP"
        } else if c.pass {
            "PASS"
        } else {
            "FAIL"
        };
        let _ = writeln!(
            s,
            "{:<36} {:<6} {:>12.3e} {:>10.1e}  {status}",
            c.name, kind, c.deviation, c.threshold
        );
    }
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn usage(e: Error) -> (i32, Error) {
    (exit::USAGE, e)
}

fn failure(e: Error) -> (i32, Error) {
    (exit::FAILURE, e)
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs a parsed command. Normal output goes to `out`; the returned error
/// carries the exit status to use.
pub fn run(cli: Cli, out: &mut dyn Write) -> std::result::Result<i32, (i32, Error)> {
    set_dimension_cap(cli.dim_cap);
    match cli.command {
        Command::Fidelity(a) => {
            let protocol: Protocol = a.protocol.parse().map_err(usage)?;
            let report = fidelity_report(protocol, a.d, a.n, a.m).map_err(failure)?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| failure(e.into()))?;
            writeln!(out, "{text}").map_err(|e| failure(e.into()))?;
            Ok(exit::OK)
        }
        Command::Sweep(a) => {
            let spec = SweepSpec::from_args(&a, cli.dim_cap).map_err(usage)?;
            let mut reports = run_sweep(&spec, a.jobs.unwrap_or_else(default_jobs)).map_err(failure)?;
            if a.no_timing {
                for r in &mut reports {
                    r.runtime_ms = 0.0;
                }
            }
            write_file(&a.csv, &render_csv(&reports)).map_err(failure)?;
            if let Some(svg) = &a.svg {
                write_file(svg, &render_svg(&reports, spec.d, spec.m)).map_err(failure)?;
            }
            if let Some(json) = &a.json {
                let text = serde_json::to_string_pretty(&reports).map_err(|e| failure(e.into()))?;
                write_file(json, &text).map_err(failure)?;
            }
            writeln!(out, "wrote {} rows to {}", reports.len(), a.csv.display()).map_err(|e| failure(e.into()))?;
            Ok(exit::OK)
        }
        Command::Verify(a) => {
            if a.m == 0 || a.m > a.n || a.d < 2 {
                return Err(usage(Error::InvalidArgument(format!(
                    "need d >= 2 and 1 <= M <= N, got d = {}, N = {}, M = {}",
                    a.d, a.n, a.m
                ))));
            }
            let mut opts = SuiteOptions {
                tol: a.tol,
                fault: a.fault,
                ..SuiteOptions::default()
            };
            if let Some(seed) = a.seed {
                opts.seed = seed;
            }
            let report = run_suite(a.d, a.n, a.m, opts).map_err(failure)?;
            write!(out, "{}", render_summary(&report)).map_err(|e| failure(e.into()))?;
            if let Some(json) = &a.json {
                let text = serde_json::to_string_pretty(&report).map_err(|e| failure(e.into()))?;
                write_file(json, &text).map_err(failure)?;
            }
            if report.exact_checks_pass() {
                Ok(exit::OK)
            } else {
                let names: Vec<&str> = report
                    .failing()
                    .into_iter()
                    .filter(|c| c.kind == CheckKind::Exact)
                    .map(|c| c.name.as_str())
                    .collect();
                Err(failure(Error::InvalidArgument(format!(
                    "failing checks: {}",
                    names.join(", ")
                ))))
            }
        }
        Command::PovmDump(a) => {
            let protocol: Protocol = a.protocol.parse().map_err(usage)?;
            let json = match protocol {
                Protocol::StdPbt => std_pbt_povm(a.n, a.d).map(|p| p.to_json()),
                Protocol::StdPbtc => std_pbtc_povm(a.n, a.m, a.d).map(|p| p.to_json()),
                Protocol::CloneMpbt => clone_mpbt_povm(a.n, a.m, a.d).map(|p| p.to_json()),
                Protocol::Mpbt => mpbt_povm(a.n, a.m, a.d).map(|p| p.to_json()),
                Protocol::Clone => {
                    return Err(usage(Error::InvalidArgument(
                        "the clone protocol has no measurement".into(),
                    )))
                }
            }
            .map_err(failure)?;
            let text = serde_json::to_string(&json).map_err(|e| failure(e.into()))?;
            match &a.out {
                Some(path) => write_file(path, &text).map_err(failure)?,
                None => writeln!(out, "{text}").map_err(|e| failure(e.into()))?,
            }
            Ok(exit::OK)
        }
    }
}
