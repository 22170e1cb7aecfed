//! The four subcommands. Each `cmd_*` writes its files into the output
//! directory and returns what it computed.

mod certify;
mod fit;
mod oracle_check;
mod simulate;

use std::path::Path;

use percolab::bounds::DecayFit;
use percolab::Runner;

pub use certify::{certify, CertifyReport, Certified, CheckSummary, GammaRow, VerificationRow};
pub use fit::{fit, fit_table};
pub use oracle_check::{oracle_reports, to_json_lines, FkgVerdict, HslVerdict, InstanceReport, McVerdict};
pub use simulate::{simulate_rows, SimRow};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::output::{write_manifest, Clock, OutDir};

pub const SIMULATE_CSV: &str = "simulate.csv";
pub const ORACLE_JSONL: &str = "oracle.jsonl";
pub const CERTIFICATE_JSON: &str = "certificate.json";
pub const VERIFICATION_CSV: &str = "verification.csv";
pub const FIT_JSON: &str = "fit.json";
pub const FIT_SUMMARY: &str = "fit.txt";

pub fn cmd_simulate(cfg: &Config, out: &Path, runner: &Runner) -> CliResult<Vec<SimRow>> {
    let clock = Clock::start();
    let mut dir = OutDir::create(out)?;
    let rows = simulate_rows(cfg, runner)?;
    dir.write_csv(SIMULATE_CSV, &rows)?;
    let manifest = write_manifest(&mut dir, "simulate", cfg, &clock, runner.workers())?;
    println!("{manifest}");
    Ok(rows)
}

pub fn cmd_oracle_check(cfg: &Config, out: &Path, runner: &Runner) -> CliResult<Vec<InstanceReport>> {
    let clock = Clock::start();
    let mut dir = OutDir::create(out)?;
    let reports = oracle_reports(cfg, runner)?;
    dir.write_text(ORACLE_JSONL, &to_json_lines(&reports))?;
    write_manifest(&mut dir, "oracle-check", cfg, &clock, runner.workers())?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    let skipped = reports.iter().filter(|r| r.error.is_some()).count();
    eprintln!(
        "oracle-check: {} instances, {failed} failed, {skipped} not evaluated",
        reports.len()
    );
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} oracle checks failed; see {ORACLE_JSONL}")));
    }
    Ok(reports)
}

pub fn cmd_certify(cfg: &Config, out: &Path, runner: &Runner) -> CliResult<Certified> {
    let clock = Clock::start();
    let mut dir = OutDir::create(out)?;
    let done = certify(cfg, runner)?;
    dir.write_json(CERTIFICATE_JSON, &done.report)?;
    dir.write_csv(VERIFICATION_CSV, &done.rows)?;
    write_manifest(&mut dir, "certify", cfg, &clock, runner.workers())?;
    let c = &done.report.certificate;
    eprintln!(
        "certify: n0={} m={:.6} chi_m={:.6} L0={} alpha={:.6} C={:.6}; {}/{} points pass",
        c.n0.value, c.m.value, c.chi_m.value, c.l0.value, c.alpha.value, c.c.value, done.check.passed, done.check.total
    );
    if !done.check.all_pass() {
        return Err(CliError::Failed(format!(
            "{} of {} points violate the bound; see {VERIFICATION_CSV}",
            done.check.total - done.check.passed,
            done.check.total
        )));
    }
    Ok(done)
}

pub fn cmd_fit(cfg: &Config, out: &Path, runner: &Runner) -> CliResult<DecayFit> {
    let clock = Clock::start();
    let mut dir = OutDir::create(out)?;
    let (_, fit) = fit(cfg, runner)?;
    dir.write_json(FIT_JSON, &fit)?;
    let summary = fit.summary();
    dir.write_text(FIT_SUMMARY, &summary)?;
    write_manifest(&mut dir, "fit", cfg, &clock, runner.workers())?;
    print!("{summary}");
    Ok(fit)
}
