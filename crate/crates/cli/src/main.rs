//! Command-line front end: Fourier coefficients, Kloosterman sums, genus,
//! registry verification, tallies and enumeration, sunrise integrals,
//! L-values, Bessel moments and quasi-period checks.
//!
//! Exit codes: 0 success/verified, 1 verification failure, 2 usage or
//! domain error. Results go to stdout, diagnostics to stderr. With --json
//! every result is one self-contained JSON record per line; numbers are
//! decimal strings, never binary floats.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rug::ops::Pow;
use rug::{Float, Integer};
use serde_json::json;

use etarad_core::eichler::{self, LSeriesForm};
use etarad_core::etaq::enumerate_quotients;
use etarad_core::modular::{self, VerifyReport, Workspace};
use etarad_core::num::{bits_for_digits, pi, to_decimal_string, zeta_int, BigComplex};
use etarad_core::rademacher;
use etarad_core::registry::Registry;
use etarad_core::sunrise;
use etarad_core::{Error, Result};

/// Node budget for quotient enumeration.
const ENUMERATION_BUDGET: u64 = 200_000_000;

#[derive(Parser)]
#[command(
    name = "etarad",
    version,
    about = "Rademacher sums, eta quotients, modular curves and Bessel-moment integrals"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Working precision in decimal digits (>= 10).
    #[arg(long, global = true, default_value_t = 50)]
    prec: u32,

    /// Series/verification order K (>= 8); defaults to the registry entry's
    /// contract order where one exists.
    #[arg(long, global = true)]
    order: Option<usize>,

    /// Emit one JSON record per result instead of plain text.
    #[arg(long, global = true)]
    json: bool,

    /// Registry fixture path; default is the bundled fixture.
    #[arg(long, global = true, env = "ETARAD_REGISTRY")]
    registry: Option<PathBuf>,

    /// Worker threads for batch subcommands (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Absolute tolerance for quadrature and snapping (decimal string).
    #[arg(long, global = true)]
    tolerance: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fourier coefficient R_{N,M}(n); n may be a single index or a..b.
    Fourier {
        level: u64,
        m: u64,
        /// Index n, or an inclusive range a..b.
        n: String,
    },
    /// Kloosterman sum K(c; N, M, n).
    Kloosterman { c: u64, level: u64, m: u64, n: u64 },
    /// Genus of X_0(N).
    Genus { level: u64 },
    /// Check a registry identity by name, or all of them.
    VerifyIdentity {
        name: Option<String>,
        #[arg(long)]
        all: bool,
    },
    /// Check a registry curve by id (N64 or 64), or all of them.
    VerifyCurve {
        id: Option<String>,
        #[arg(long)]
        all: bool,
    },
    /// Tally coefficient [x^m] T_N(x).
    Tally { level: u64, m: usize },
    /// Enumerate the weight-0 eta quotients counted by tally(N, m).
    Enumerate { level: u64, m: i64 },
    /// Parity of the n-th level-6 Hauptmodul coefficient.
    Parity { n: u64 },
    /// Two-loop sunrise integral I(w^2).
    Sunrise2 { w2: String },
    /// Three-loop sunrise integral J(t).
    Sunrise3 { t: String },
    /// L-value L_f(s) for f in {L5, L6, L8}, integer s inside the strip.
    Lseries { form: String, s: u32 },
    /// Bessel moment M(a,b,c) = int_0^oo I_0^a K_0^b x^c dx.
    Moment { a: u32, b: u32, c: u32 },
    /// Run the full quasi-period relation suite.
    QuasiperiodCheck,
    /// Quick end-to-end sanity suite at reduced precision.
    Selftest,
}

/// One result record: plain text prints `value` (or a pass/fail line),
/// structured mode emits everything as a single JSON object.
struct Record {
    subcommand: &'static str,
    inputs: serde_json::Value,
    value: serde_json::Value,
    error_estimate: Option<String>,
    citation: Option<String>,
    plain: String,
}

struct Emitter {
    json: bool,
}

impl Emitter {
    fn emit(&self, r: Record) {
        if self.json {
            let rec = json!({
                "subcommand": r.subcommand,
                "inputs": r.inputs,
                "value": r.value,
                "error_estimate": r.error_estimate,
                "citation": r.citation,
            });
            println!("{rec}");
        } else {
            println!("{}", r.plain);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::VerificationFailed(_)
                | Error::NotNearInteger { .. }
                | Error::UnstableTruncation { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if cli.prec < 10 {
        return Err(Error::Domain("precision must be at least 10 digits".into()));
    }
    if let Some(k) = cli.order {
        if k < 8 {
            return Err(Error::Domain("order K must be at least 8".into()));
        }
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Domain("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    }

    let registry = match &cli.registry {
        Some(path) => Registry::load(path)?,
        None => Registry::bundled()?,
    };
    let bits = bits_for_digits(cli.prec);
    let tolerance = match &cli.tolerance {
        Some(s) => parse_decimal(s, bits)?,
        None => {
            // Five guard digits below the requested precision.
            let mut t = Float::with_val(bits, 10);
            t = t.pow(-(cli.prec.saturating_sub(5) as i32));
            t
        }
    };
    let out = Emitter { json: cli.json };

    match &cli.cmd {
        Cmd::Fourier { level, m, n } => cmd_fourier(cli, &out, registry, *level, *m, n),
        Cmd::Kloosterman { c, level, m, n } => {
            let v = rademacher::kloosterman(*c, *level, *m, *n, bits)?;
            out.emit(Record {
                subcommand: "kloosterman",
                inputs: json!({ "c": c, "N": level, "M": m, "n": n }),
                value: json!(to_decimal_string(&v)),
                error_estimate: None,
                citation: None,
                plain: to_decimal_string(&v),
            });
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Genus { level } => {
            let g = modular::genus(*level)?;
            out.emit(Record {
                subcommand: "genus",
                inputs: json!({ "N": level }),
                value: json!(g),
                error_estimate: None,
                citation: registry.levels.get(level).map(|e| e.note.clone()),
                plain: g.to_string(),
            });
            Ok(ExitCode::SUCCESS)
        }
        Cmd::VerifyIdentity { name, all } => {
            let entries: Vec<_> = match (name, all) {
                (Some(n), false) => vec![registry.identity(n)?.clone()],
                (None, _) | (_, true) => registry.identities.clone(),
            };
            if entries.is_empty() {
                return Err(Error::Registry("no identities in registry".into()));
            }
            let reports = {
                use rayon::prelude::*;
                let ws = Workspace::with_precision(registry.clone(), cli.prec);
                entries
                    .par_iter()
                    .map(|e| ws.verify_identity(e, cli.order))
                    .collect::<Result<Vec<_>>>()?
            };
            emit_reports(&out, "verify-identity", &reports)
        }
        Cmd::VerifyCurve { id, all } => {
            let levels: Vec<u64> = match (id, all) {
                (Some(id), false) => vec![parse_curve_id(id)?],
                (None, _) | (_, true) => registry.curves.keys().copied().collect(),
            };
            let mut entries = Vec::new();
            for level in levels {
                entries.push(
                    registry
                        .curves
                        .get(&level)
                        .ok_or_else(|| Error::Registry(format!("no curve for level {level}")))?
                        .clone(),
                );
            }
            let reports = {
                use rayon::prelude::*;
                let ws = Workspace::with_precision(registry.clone(), cli.prec);
                entries
                    .par_iter()
                    .map(|e| ws.verify_curve(e, cli.order))
                    .collect::<Result<Vec<_>>>()?
            };
            emit_reports(&out, "verify-curve", &reports)
        }
        Cmd::Tally { level, m } => {
            let v = modular::tally(&registry, *level, *m)?;
            out.emit(Record {
                subcommand: "tally",
                inputs: json!({ "N": level, "m": m }),
                value: json!(v.to_string()),
                error_estimate: None,
                citation: registry.tallies.get(level).map(|e| e.note.clone()),
                plain: v.to_string(),
            });
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Enumerate { level, m } => {
            if *m < 0 {
                return Err(Error::Domain("enumerate: m must be nonnegative".into()));
            }
            let list = enumerate_quotients(*level, *m, ENUMERATION_BUDGET)?;
            let expected = modular::tally(&registry, *level, *m as usize)?;
            if Integer::from(list.len()) != expected {
                return Err(Error::VerificationFailed(format!(
                    "enumeration found {} quotients at level {level}, m = {m}; tally says {expected}",
                    list.len()
                )));
            }
            for q in &list {
                let desc = format_quotient(q);
                out.emit(Record {
                    subcommand: "enumerate",
                    inputs: json!({ "N": level, "m": m }),
                    value: json!(desc),
                    error_estimate: None,
                    citation: registry.tallies.get(level).map(|e| e.note.clone()),
                    plain: desc.clone(),
                });
            }
            eprintln!("{} quotients, matching tally({level}, {m})", list.len());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Parity { n } => {
            let odd = modular::hauptmodul_parity(*n)?;
            let word = if odd { "odd" } else { "even" };
            out.emit(Record {
                subcommand: "parity",
                inputs: json!({ "n": n }),
                value: json!(word),
                error_estimate: None,
                citation: None,
                plain: word.to_string(),
            });
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sunrise2 { w2 } => {
            let w2 = parse_decimal(w2, bits)?;
            let v = sunrise::i2(&w2)?;
            let plain = format_complex(&v.value);
            out.emit(Record {
                subcommand: "sunrise2",
                inputs: json!({ "w2": to_decimal_string(&w2) }),
                value: complex_json(&v.value),
                error_estimate: Some(to_decimal_string(&v.error_estimate)),
                citation: v.cusp.as_ref().map(|c| format!("cusp branch k = {}", c.k)),
                plain,
            });
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sunrise3 { t } => {
            let t = parse_decimal(t, bits)?;
            let v = sunrise::j3(&t)?;
            let plain = format_complex(&v.value);
            out.emit(Record {
                subcommand: "sunrise3",
                inputs: json!({ "t": to_decimal_string(&t) }),
                value: complex_json(&v.value),
                error_estimate: Some(to_decimal_string(&v.error_estimate)),
                citation: None,
                plain,
            });
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Lseries { form, s } => {
            let form = parse_form(form)?;
            let v = eichler::lseries_value(form, *s, bits)?;
            out.emit(Record {
                subcommand: "lseries",
                inputs: json!({ "form": form_name(form), "s": s }),
                value: json!(to_decimal_string(&v)),
                error_estimate: None,
                citation: registry
                    .forms
                    .get(form_name(form))
                    .map(|e| e.note.clone()),
                plain: to_decimal_string(&v),
            });
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Moment { a, b, c } => {
            let v = eichler::bessel_moment(*a, *b, *c, bits, &tolerance)?;
            out.emit(Record {
                subcommand: "moment",
                inputs: json!({ "a": a, "b": b, "c": c }),
                value: json!(to_decimal_string(&v)),
                error_estimate: Some(to_decimal_string(&tolerance)),
                citation: None,
                plain: to_decimal_string(&v),
            });
            Ok(ExitCode::SUCCESS)
        }
        Cmd::QuasiperiodCheck => {
            let reports = eichler::quasiperiod_checks(bits, &tolerance)?;
            emit_reports(&out, "quasiperiod-check", &reports)
        }
        Cmd::Selftest => selftest(&out, registry),
    }
}

fn cmd_fourier(
    cli: &Cli,
    out: &Emitter,
    registry: Registry,
    level: u64,
    m: u64,
    n_spec: &str,
) -> Result<ExitCode> {
    let (lo, hi) = parse_index_range(n_spec)?;
    let ws = Workspace::with_precision(registry, cli.prec);
    let results = {
        use rayon::prelude::*;
        (lo..=hi)
            .into_par_iter()
            .map(|n| ws.raw_rademacher(level, m, n).map(|r| (n, r)))
            .collect::<Result<Vec<_>>>()?
    };
    for (n, r) in results {
        let (value, plain) = snap_value(&r.value, &r.tail_estimate);
        let prefix = if lo == hi { String::new() } else { format!("{n} ") };
        out.emit(Record {
            subcommand: "fourier",
            inputs: json!({ "N": level, "M": m, "n": n }),
            value,
            error_estimate: Some(to_decimal_string(&r.tail_estimate)),
            citation: ws.registry.levels.get(&level).map(|e| e.note.clone()),
            plain: format!("{prefix}{plain}"),
        });
    }
    Ok(ExitCode::SUCCESS)
}

/// Snap a Rademacher value to an exact integer when the tail estimate
/// certifies it; otherwise report the full decimal string.
fn snap_value(value: &Float, tail: &Float) -> (serde_json::Value, String) {
    let bits = value.prec();
    let mut margin = Float::with_val(bits, tail * 8u32);
    let floor = Float::with_val(bits, 1e-10);
    if margin < floor {
        margin = floor;
    }
    let nearest = value.clone().round();
    let dist: Float = (value.clone() - &nearest).abs();
    if dist < margin && margin < 0.45 {
        if let Some(i) = nearest.to_integer() {
            return (json!(i.to_string()), i.to_string());
        }
    }
    let s = to_decimal_string(value);
    (json!(s), s)
}

fn emit_reports(out: &Emitter, subcommand: &'static str, reports: &[VerifyReport]) -> Result<ExitCode> {
    let mut failed = false;
    for r in reports {
        let status = if r.passed { "ok" } else { "FAIL" };
        if out.json {
            let rec = json!({
                "subcommand": subcommand,
                "inputs": { "name": r.name, "order": r.order },
                "value": r.passed,
                "error_estimate": serde_json::Value::Null,
                "citation": r.detail,
            });
            println!("{rec}");
        } else {
            println!("{}: {status} (order {}) {}", r.name, r.order, r.detail);
        }
        if !r.passed {
            failed = true;
            eprintln!("first mismatch in {}: {}", r.name, r.detail);
        }
    }
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

/// Quick sanity suite: one cheap check per pipeline, ~30 digits.
fn selftest(out: &Emitter, registry: Registry) -> Result<ExitCode> {
    let digits = 30;
    let bits = bits_for_digits(digits);
    let tol30: Float = Float::with_val(bits, 10u32).pow(-25i32);
    let mut reports: Vec<VerifyReport> = Vec::new();

    let genus_table: &[(u64, u32)] = &[
        (50, 2),
        (64, 3),
        (81, 4),
        (72, 5),
        (121, 6),
        (100, 7),
        (169, 8),
        (144, 13),
    ];
    let genus_ok = genus_table
        .iter()
        .all(|&(n, g)| modular::genus(n).map_or(false, |got| got == g));
    reports.push(VerifyReport {
        name: "genus table".into(),
        order: genus_table.len(),
        passed: genus_ok,
        detail: "higher-genus levels".into(),
    });

    let ws = Workspace::with_precision(registry.clone(), digits);
    let r = ws.raw_rademacher(6, 1, 2)?;
    let (snapped, plain) = snap_value(&r.value, &r.tail_estimate);
    reports.push(VerifyReport {
        name: "fourier 6 1 2".into(),
        order: 1,
        passed: snapped == json!("360"),
        detail: format!("value {plain}"),
    });

    let kl = rademacher::kloosterman(5, 6, 1, 1, bits)?;
    let want: Float = Float::with_val(bits, 2) + 2u32 * (2u32 * pi(bits) / 5u32).cos();
    let kl_err: Float = (kl - want).abs();
    reports.push(VerifyReport {
        name: "kloosterman 5 6 1 1".into(),
        order: 1,
        passed: kl_err < tol30,
        detail: "2 + 2 cos(2 pi / 5)".into(),
    });

    let t2150 = modular::tally(&registry, 21, 50)?;
    let t3650 = modular::tally(&registry, 36, 50)?;
    reports.push(VerifyReport {
        name: "tallies".into(),
        order: 2,
        passed: t2150 == 2938u32 && t3650 == 49307076u32,
        detail: format!("tally(21,50) = {t2150}, tally(36,50) = {t3650}"),
    });

    if let Some(entry) = registry.identities.first() {
        reports.push(ws.verify_identity(entry, Some(60))?);
    }

    let w2 = Float::with_val(bits, 1);
    let i2 = sunrise::i2(&w2)?;
    let want: Float = pi(bits).square() / 4u32;
    let i2_err: Float = (i2.value.re.clone() - want).abs();
    reports.push(VerifyReport {
        name: "sunrise2 on-shell".into(),
        order: i2.terms_used,
        passed: i2_err < tol30 && i2.value.im.is_zero(),
        detail: "I(1) = pi^2 / 4".into(),
    });

    let t = Float::new(bits);
    let j3 = sunrise::j3(&t)?;
    let want: Float = zeta_int(3, bits) * 7u32;
    let j3_err: Float = (j3.value.re.clone() - want).abs();
    reports.push(VerifyReport {
        name: "sunrise3 at origin".into(),
        order: j3.terms_used,
        passed: j3_err < tol30,
        detail: "J(0) = 7 zeta(3)".into(),
    });

    reports.push(eichler::onshell_sunrise(3, bits, &tol30)?);
    reports.push(sunrise::verify_h_param(30)?);

    emit_reports(out, "selftest", &reports)
}

fn parse_index_range(spec: &str) -> Result<(u64, u64)> {
    if let Some((a, b)) = spec.split_once("..") {
        let lo: u64 = a
            .parse()
            .map_err(|_| Error::Domain(format!("bad range start {a:?}")))?;
        let hi: u64 = b
            .parse()
            .map_err(|_| Error::Domain(format!("bad range end {b:?}")))?;
        if lo == 0 || hi < lo {
            return Err(Error::Domain(format!("bad index range {spec:?}")));
        }
        Ok((lo, hi))
    } else {
        let n: u64 = spec
            .parse()
            .map_err(|_| Error::Domain(format!("bad index {spec:?}")))?;
        if n == 0 {
            return Err(Error::Domain("index n must be positive".into()));
        }
        Ok((n, n))
    }
}

fn parse_curve_id(id: &str) -> Result<u64> {
    let digits = id.strip_prefix(['N', 'n']).unwrap_or(id);
    digits
        .parse()
        .map_err(|_| Error::Domain(format!("bad curve id {id:?}; expected N64 or 64")))
}

fn parse_form(name: &str) -> Result<LSeriesForm> {
    match name.to_ascii_uppercase().as_str() {
        "L5" => Ok(LSeriesForm::L5),
        "L6" => Ok(LSeriesForm::L6),
        "L8" => Ok(LSeriesForm::L8),
        _ => Err(Error::Domain(format!(
            "unknown form {name:?}; expected L5, L6 or L8"
        ))),
    }
}

fn form_name(form: LSeriesForm) -> &'static str {
    match form {
        LSeriesForm::L5 => "L5",
        LSeriesForm::L6 => "L6",
        LSeriesForm::L8 => "L8",
    }
}

fn parse_decimal(s: &str, bits: u32) -> Result<Float> {
    let parsed = Float::parse(s).map_err(|_| Error::Domain(format!("bad decimal {s:?}")))?;
    Ok(Float::with_val(bits, parsed))
}

fn format_complex(z: &BigComplex) -> String {
    if z.im.is_zero() {
        to_decimal_string(&z.re)
    } else {
        format!("{} + {} i", to_decimal_string(&z.re), to_decimal_string(&z.im))
    }
}

fn format_quotient(q: &etarad_core::etaq::EtaQuotient) -> String {
    if q.exponents.is_empty() {
        return "1".to_string();
    }
    q.exponents
        .iter()
        .map(|(&d, &r)| {
            if r == 1 {
                format!("eta({d})")
            } else {
                format!("eta({d})^{r}")
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn complex_json(z: &BigComplex) -> serde_json::Value {
    if z.im.is_zero() {
        json!(to_decimal_string(&z.re))
    } else {
        json!({ "re": to_decimal_string(&z.re), "im": to_decimal_string(&z.im) })
    }
}
