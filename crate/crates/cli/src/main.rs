//! `bqd`: decide, certify and verify binary quadratic Diophantine systems,
//! and inspect the forms and Pell machinery behind them.
//!
//! Exit codes: 0 solvable, valid or equivalent; 1 unsolvable, invalid or
//! inequivalent; 2 usage error; 3 resource bound exceeded.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use bqd_core::certify::{generate_equivalence, verify_equivalence, verify_solvability, EquivOutcome, EQUIV_HEADER, SOLV_HEADER};
use bqd_core::forms::principal_cycle;
use bqd_core::frontend::{brute_force_oracle, solve};
use bqd_core::pell::{fundamental_solution, period_bound, period_mod};
use bqd_core::{DioSystem, EquivCert, Error, Outcome, QForm, SearchOptions, SolvCert, SolvProof};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use serde_json::{json, Map, Value};

#[derive(Debug, Parser)]
#[command(name = "bqd", version, about = "Certified solving of binary quadratic Diophantine equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalFlags,
}

#[derive(Debug, Args)]
struct GlobalFlags {
    /// Modulus Γ of the congruence conditions, or the recurrence modulus for `pell`.
    #[arg(long = "mod", global = true, value_name = "M")]
    modulus: Option<BigInt>,
    /// Residue α₁ of x₁ modulo Γ.
    #[arg(long, global = true, default_value = "0")]
    alpha1: BigInt,
    /// Residue α₂ of x₂ modulo Γ.
    #[arg(long, global = true, default_value = "0")]
    alpha2: BigInt,
    /// Coefficients are already in the even-cross-term convention.
    #[arg(long, global = true)]
    normalized: bool,
    /// Skip the direct-solution shortcut and always build an infrastructure certificate.
    #[arg(long, global = true)]
    force_cert: bool,
    /// Search admissible solutions with both coordinates at most N instead of deciding.
    #[arg(long, global = true, value_name = "N")]
    brute_bound: Option<u64>,
    /// Lower bound on the floating-point precision written into certificates.
    #[arg(long, global = true, value_name = "P")]
    fp_prec: Option<u32>,
    /// Write the certificate to FILE instead of standard output.
    #[arg(short = 'o', global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Print JSON lines instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide solvability and print a solution when it is small.
    Solve(Coefficients),
    /// Decide solvability and emit a certificate.
    Certify(Coefficients),
    /// Check certificate files.
    Verify {
        /// The system, as six coefficients in one argument.
        #[arg(short = 's', value_name = "COEFFS")]
        system: Option<String>,
        /// Certificate files.
        #[arg(short = 'c', value_name = "FILE", required = true)]
        certs: Vec<PathBuf>,
        /// Verify up to N certificates in parallel.
        #[arg(long, default_value_t = 1, value_name = "N")]
        jobs: usize,
    },
    /// Decide proper equivalence of two forms `a b c` and emit a certificate.
    Equiv {
        #[arg(allow_negative_numbers = true, num_args = 6, required = true)]
        coeffs: Vec<BigInt>,
    },
    /// Print the principal cycle of reduced forms of determinant D.
    Cycle {
        #[arg(allow_negative_numbers = true)]
        d: BigInt,
    },
    /// Print the fundamental Pell solution, and its period modulo --mod.
    Pell {
        #[arg(allow_negative_numbers = true)]
        d: BigInt,
    },
    /// Print the period of the Pell recurrence modulo M and its upper bound.
    Period {
        #[arg(allow_negative_numbers = true)]
        d: BigInt,
        m: BigInt,
    },
}

#[derive(Debug, Args)]
struct Coefficients {
    /// a b c d e f of `ax² + bxy + cy² + dx + ey + f = 0`.
    #[arg(allow_negative_numbers = true, num_args = 6, required = true)]
    coeffs: Vec<BigInt>,
}

/// A failure with its exit code and one-line diagnostic.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Resource(_) | Error::Overflow(_) => 3,
            Error::Domain(_) | Error::Parse { .. } => 2,
            Error::CertificateInvalid(_) => 1,
            Error::Internal(_) => 4,
        };
        Failure { code, message: err.to_string() }
    }
}

/// Collected output lines; either text or one JSON object per line.
struct Report {
    json: bool,
    lines: Vec<String>,
}

impl Report {
    fn new(json: bool) -> Self {
        Report { json, lines: Vec::new() }
    }

    fn line(&mut self, text: String, value: Value) {
        self.lines.push(if self.json { value.to_string() } else { text });
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut report = Report::new(cli.global.json);
    let outcome = run(&cli, &mut report);
    let mut stdout = std::io::stdout().lock();
    for line in &report.lines {
        let _ = writeln!(stdout, "{line}");
    }
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("bqd: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: &Cli, report: &mut Report) -> Result<u8, Failure> {
    let flags = &cli.global;
    match &cli.command {
        Command::Solve(c) => run_solve(flags, &system_from(flags, &c.coeffs)?, report),
        Command::Certify(c) => run_certify(flags, &system_from(flags, &c.coeffs)?, report),
        Command::Verify { system, certs, jobs } => run_verify(flags, system.as_deref(), certs, *jobs, report),
        Command::Equiv { coeffs } => run_equiv(flags, coeffs, report),
        Command::Cycle { d } => run_cycle(d, report),
        Command::Pell { d } => run_pell(d, flags.modulus.as_ref(), report),
        Command::Period { d, m } => run_period(d, m, report),
    }
}

fn system_from(flags: &GlobalFlags, coeffs: &[BigInt]) -> Result<DioSystem, Failure> {
    let coeffs: [BigInt; 6] =
        coeffs.to_vec().try_into().map_err(|_| Failure::usage("a system needs exactly six coefficients"))?;
    let gamma = flags.modulus.clone().unwrap_or_else(|| BigInt::from(1));
    let alpha = [flags.alpha1.clone(), flags.alpha2.clone()];
    let sys = if flags.normalized {
        DioSystem::from_normalized(coeffs, gamma, alpha)
    } else {
        DioSystem::normalize(coeffs, gamma, alpha)
    };
    sys.map_err(|e| Failure::usage(e.to_string()))
}

fn options(flags: &GlobalFlags) -> SearchOptions {
    SearchOptions { force_cert: flags.force_cert, fp_precision: flags.fp_prec }
}

fn solvable_line(report: &mut Report, cert: &SolvCert) {
    match &cert.proof {
        SolvProof::Direct { x1, x2 } => report.line(
            format!("SOLVABLE x1={x1} x2={x2}"),
            json!({"status": "SOLVABLE", "x1": x1.to_string(), "x2": x2.to_string()}),
        ),
        SolvProof::Infra(infra) => report.line(
            format!("SOLVABLE certificate=infra k={} bits={}", infra.k, cert.size_bits()),
            json!({"status": "SOLVABLE", "certificate": "infra", "k": infra.k.to_string(), "bits": cert.size_bits()}),
        ),
    }
}

fn run_solve(flags: &GlobalFlags, sys: &DioSystem, report: &mut Report) -> Result<u8, Failure> {
    if let Some(bound) = flags.brute_bound {
        return Ok(match brute_force_oracle(sys, bound) {
            Some((x1, x2)) => {
                let cert = SolvCert::direct(sys.clone(), x1, x2);
                solvable_line(report, &cert);
                0
            }
            None => {
                report.line(format!("NOT FOUND bound={bound}"), json!({"status": "NOT FOUND", "bound": bound}));
                1
            }
        });
    }
    match solve(sys, &options(flags))? {
        Outcome::Solvable(cert) => {
            solvable_line(report, &cert);
            Ok(0)
        }
        Outcome::Unsolvable => {
            report.line("UNSOLVABLE".into(), json!({"status": "UNSOLVABLE"}));
            Ok(1)
        }
    }
}

fn emit(flags: &GlobalFlags, text: &str, report: &mut Report) -> Result<(), Failure> {
    match &flags.output {
        Some(path) => {
            let body = if flags.json { format!("{}\n", text_to_json(text)) } else { text.to_string() };
            fs::write(path, body).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            if report.json {
                report.lines.push(text_to_json(text).to_string());
            } else {
                report.lines.extend(text.lines().map(str::to_string));
            }
            Ok(())
        }
    }
}

fn run_certify(flags: &GlobalFlags, sys: &DioSystem, report: &mut Report) -> Result<u8, Failure> {
    match solve(sys, &options(flags))? {
        Outcome::Solvable(cert) => {
            emit(flags, &cert.to_text(), report)?;
            Ok(0)
        }
        Outcome::Unsolvable => {
            report.line("UNSOLVABLE".into(), json!({"status": "UNSOLVABLE"}));
            Ok(1)
        }
    }
}

/// The verdict for one certificate file: exit code and output line.
fn verify_file(system: Option<&DioSystem>, path: &PathBuf) -> Result<(u8, String, Value), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let name = path.display().to_string();
    let invalid = |detail: String| {
        let value = json!({"file": name, "status": "INVALID", "reason": detail});
        Ok((1, format!("INVALID {detail}"), value))
    };
    let header = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let header = header.split_whitespace().collect::<Vec<_>>().join(" ");
    let verdict = if header == EQUIV_HEADER {
        match EquivCert::from_text(&text) {
            Ok(cert) => verify_equivalence(&cert).map(|r| (r.peak_bits, r.bit_limit)),
            Err(e) => return invalid(e.to_string()),
        }
    } else if header == SOLV_HEADER {
        let sys = system.ok_or_else(|| Failure::usage("verifying a solvability certificate needs -s"))?;
        match SolvCert::from_text(&text) {
            Ok(cert) => verify_solvability(sys, &cert).map(|r| (r.peak_bits, r.bit_limit)),
            Err(e) => return invalid(e.to_string()),
        }
    } else {
        return invalid(format!("unknown header {header:?}"));
    };
    match verdict {
        Ok((peak, limit)) => {
            let value = json!({"file": name, "status": "VALID", "peak_bits": peak, "bit_limit": limit});
            Ok((0, "VALID".into(), value))
        }
        Err(rejection) => invalid(rejection.to_string()),
    }
}

fn run_verify(
    flags: &GlobalFlags,
    system: Option<&str>,
    certs: &[PathBuf],
    jobs: usize,
    report: &mut Report,
) -> Result<u8, Failure> {
    let system = match system {
        Some(s) => {
            let coeffs = s
                .split_whitespace()
                .map(|t| t.parse::<BigInt>().map_err(|_| Failure::usage(format!("not an integer: {t}"))))
                .collect::<Result<Vec<_>, _>>()?;
            Some(system_from(flags, &coeffs)?)
        }
        None => None,
    };
    let jobs = jobs.max(1);
    let mut results: Vec<Option<Result<(u8, String, Value), Failure>>> = (0..certs.len()).map(|_| None).collect();
    for (chunk_paths, chunk_results) in certs.chunks(jobs).zip(results.chunks_mut(jobs)) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk_paths
                .iter()
                .map(|path| scope.spawn(|| verify_file(system.as_ref(), path)))
                .collect();
            for (slot, handle) in chunk_results.iter_mut().zip(handles) {
                *slot = Some(handle.join().unwrap_or_else(|_| Err(Failure { code: 4, message: "verifier panicked".into() })));
            }
        });
    }
    let mut worst = 0;
    for result in results.into_iter().flatten() {
        let (code, text, value) = result?;
        let text = if certs.len() > 1 { format!("{text} {}", value["file"].as_str().unwrap_or("")) } else { text };
        report.line(text, value);
        worst = worst.max(code);
    }
    Ok(worst)
}

fn form_from(flags: &GlobalFlags, v: &[BigInt]) -> Result<QForm, Failure> {
    let (a, b, c) = (v[0].clone(), v[1].clone(), v[2].clone());
    if flags.normalized {
        return Ok(QForm { a, b, c });
    }
    let two = BigInt::from(2);
    if &b % &two != BigInt::from(0) {
        return Err(Failure::usage(format!("middle coefficient {b} must be even")));
    }
    Ok(QForm { a, b: b / two, c })
}

fn run_equiv(flags: &GlobalFlags, coeffs: &[BigInt], report: &mut Report) -> Result<u8, Failure> {
    let q1 = form_from(flags, &coeffs[..3])?;
    let q2 = form_from(flags, &coeffs[3..])?;
    match generate_equivalence(&q1, &q2)? {
        EquivOutcome::Equivalent(cert) => {
            if flags.output.is_some() {
                emit(flags, &cert.to_text(), report)?;
            }
            report.line("EQUIVALENT".into(), json!({"status": "EQUIVALENT"}));
            Ok(0)
        }
        EquivOutcome::Inequivalent(reason) => {
            report.line(format!("INEQUIVALENT {reason}"), json!({"status": "INEQUIVALENT", "reason": reason}));
            Ok(1)
        }
    }
}

fn run_cycle(d: &BigInt, report: &mut Report) -> Result<u8, Failure> {
    let cycle = principal_cycle(d)?;
    for (j, q) in cycle.forms().iter().enumerate() {
        report.line(
            format!("{j} {q}"),
            json!({"index": j, "a": q.a.to_string(), "b": (&q.b * BigInt::from(2)).to_string(), "c": q.c.to_string()}),
        );
    }
    report.line(format!("period={}", cycle.period()), json!({"period": cycle.period()}));
    Ok(0)
}

fn run_pell(d: &BigInt, modulus: Option<&BigInt>, report: &mut Report) -> Result<u8, Failure> {
    let sol = fundamental_solution(d)?;
    let mut text = format!("t1={} u1={}", sol.t1, sol.u1);
    let mut value = Map::new();
    value.insert("t1".into(), sol.t1.to_string().into());
    value.insert("u1".into(), sol.u1.to_string().into());
    if let Some(m) = modulus {
        let period = period_mod(&sol, m)?.period;
        text.push_str(&format!(" period_mod={period}"));
        value.insert("period_mod".into(), period.to_string().into());
    }
    report.line(text, Value::Object(value));
    Ok(0)
}

fn run_period(d: &BigInt, m: &BigInt, report: &mut Report) -> Result<u8, Failure> {
    let sol = fundamental_solution(d)?;
    let period = period_mod(&sol, m)?.period;
    let bound = period_bound(m);
    report.line(
        format!("period_mod={period} bound={bound}"),
        json!({"period_mod": period.to_string(), "bound": bound.to_string()}),
    );
    Ok(0)
}

/// The certificate text as one JSON object: each line `KEY v₁ … vₙ` becomes
/// `"KEY": [v₁, …, vₙ]`, and each `CHAIN` block becomes a list of steps.
fn text_to_json(text: &str) -> Value {
    let mut object = Map::new();
    let mut lines = text.lines().map(str::split_whitespace).map(Iterator::collect::<Vec<_>>).filter(|t| !t.is_empty());
    if let Some(header) = lines.next() {
        object.insert("HEADER".into(), header.join(" ").into());
    }
    while let Some(tokens) = lines.next() {
        if tokens[0] == "CHAIN" {
            let key = tokens[..tokens.len() - 1].join(" ");
            let n: usize = tokens[tokens.len() - 1].parse().unwrap_or(0);
            let steps: Vec<Value> = lines.by_ref().take(n).map(|step| json!(step)).collect();
            object.insert(key, Value::Array(steps));
        } else if tokens[0] != "END" {
            object.insert(tokens[0].to_string(), json!(tokens[1..]));
        }
    }
    Value::Object(object)
}
