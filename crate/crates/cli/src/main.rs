//! `torres`: batch front end for the resonance pipeline.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use byteorder::{LittleEndian, WriteBytesExt};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};
use torus_resonances::cone_geometry::{QuadrantWeight, Sigma};
use torus_resonances::dynamics_checks::{check_psec, certify_cases, Case, MappingCase, DEFAULT_GRID, DEFAULT_SAMPLES};
use torus_resonances::gl2z::{build_homotopic_map, reduce_to_standard, DecayTarget};
use torus_resonances::map_algebra::{parse_word, IMat2, MapWord};
use torus_resonances::operator_numerics::{
    assemble_operator_with, embedding_eta, embedding_singular_values, match_spectra, spectrum, AssembleOptions,
    OperatorKind, TruncatedOperator,
};
use torus_resonances::resonance_theory::{predict_with_case, resonances_above, ResonanceReport};
use torus_resonances::Error;

const SCHEMA: u32 = 1;
const DUMP_MAGIC: &[u8; 4] = b"TRSM";

#[derive(Parser)]
#[command(name = "torres", version, about = "Pollicott-Ruelle resonances of rational Anosov maps of the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form resonances from fixed-point multipliers, optionally verified numerically.
    Resonances {
        #[arg(long)]
        word: String,
        /// Number of leading eigenvalues (with multiplicity).
        #[arg(long, default_value_t = 32)]
        count: usize,
        /// Also assemble the truncated operator and match spectra.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 12)]
        band: usize,
        /// "auto" or "a1,a2,g1,g2".
        #[arg(long, default_value = "auto")]
        weight: String,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 1e-3)]
        floor: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sampled cone certificate and mapping classification.
    Check {
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Apex shift δ as "d1,d2".
        #[arg(long, default_value = "1,1")]
        delta: String,
        /// Apex shift δ̃ as "d1,d2".
        #[arg(long, default_value = "1,1")]
        delta_tilde: String,
        /// Also classify T and T⁻¹ as EP/ER.
        #[arg(long)]
        mapping: bool,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce a hyperbolic integer matrix to ±∏[[k,1],[1,0]].
    Reduce {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A nonlinear map homotopic to τ_B with prescribed resonance decay.
    Build {
        #[arg(long)]
        matrix: String,
        #[arg(long, value_enum)]
        decay: DecayArg,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues of a truncated operator as CSV.
    Spectrum {
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 10)]
        band: usize,
        #[arg(long, default_value = "auto")]
        weight: String,
        #[arg(long, value_enum, default_value_t = KindArg::Composition)]
        kind: KindArg,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long)]
        force: bool,
        /// CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plot data: index, modulus, sqrt(index), -log(modulus).
        #[arg(long)]
        plot_data: Option<PathBuf>,
        /// Binary matrix dump.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Singular values of the embedding between two weighted spaces.
    Embed {
        /// Inner weight "a1,a2,g1,g2".
        #[arg(long)]
        inner: String,
        /// Outer weight "A1,A2,G1,G2".
        #[arg(long)]
        outer: String,
        #[arg(long, default_value_t = 20)]
        band: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DecayArg {
    Stretched,
    Exponential,
    Trivial,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Composition,
    Transfer,
}

struct Failure {
    code: u8,
    message: String,
    payload: Option<Value>,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into(), payload: None }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Syntax { .. }
            | Error::OutsideDisk { .. }
            | Error::NotHyperbolic(_)
            | Error::NotUnimodular(_)
            | Error::GridTooSmall(..)
            | Error::BandTooLarge(..)
            | Error::TargetInfeasible(_)
            | Error::Empty => 2,
            Error::CertificationFailed(_) | Error::NoContraction | Error::NotApplicable(_) | Error::SearchExhausted(_) => 3,
            _ => 1,
        };
        Failure { code, message: e.to_string(), payload: None }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 1, message: e.to_string(), payload: None }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(p) = &f.payload {
                println!("{}", serde_json::to_string_pretty(p).unwrap());
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn sink(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn emit(out: &Option<PathBuf>, v: &Value) -> Outcome {
    let mut w = sink(out)?;
    writeln!(w, "{}", serde_json::to_string_pretty(v).unwrap())?;
    w.flush()?;
    Ok(())
}

fn c(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn parse_list(text: &str, len: usize, what: &str) -> std::result::Result<Vec<f64>, Failure> {
    let v: std::result::Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if v.len() == len && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(Failure::input(format!("{what}: expected {len} comma-separated numbers, got {text:?}"))),
    }
}

fn parse_weight(text: &str) -> std::result::Result<QuadrantWeight, Failure> {
    let v = parse_list(text, 4, "weight")?;
    if v.iter().any(|&x| x <= 0.0) {
        return Err(Failure::input("weight parameters must be positive"));
    }
    Ok(QuadrantWeight::new([v[0], v[1]], [v[2], v[3]]))
}

fn parse_matrix(text: &str) -> std::result::Result<IMat2, Failure> {
    let m: Vec<Vec<i64>> =
        serde_json::from_str(text).map_err(|e| Failure::input(format!("matrix: {e} (expected [[a,b],[c,d]])")))?;
    if m.len() != 2 || m.iter().any(|r| r.len() != 2) {
        return Err(Failure::input("matrix must be 2x2"));
    }
    Ok([[m[0][0], m[0][1]], [m[1][0], m[1][1]]])
}

fn word(text: &str) -> std::result::Result<MapWord, Failure> {
    Ok(parse_word(text)?)
}

fn case_json(case: &MappingCase) -> Value {
    let e = |m: &torus_resonances::dynamics_checks::MappingEntry| {
        json!({"case": m.case, "delta": m.delta, "big_delta": m.big_delta, "margin": m.margin, "t": m.t})
    };
    json!({"l1": e(&case.l1), "lm1": e(&case.lm1)})
}

fn weight_json(w: &QuadrantWeight) -> Value {
    json!({"P": w.p, "alpha": w.alpha, "gamma": w.gamma, "dual": w.dual})
}

fn report_json(rep: &ResonanceReport) -> Value {
    let mut mult = serde_json::Map::new();
    for s in Sigma::ALL {
        let l = rep.multipliers.get(s);
        mult.insert(s.label().to_string(), json!([c(l[0]), c(l[1])]));
    }
    let eig: Vec<Value> = rep.eigenvalues.iter().map(|e| json!([e.value.re, e.value.im, e.mult])).collect();
    json!({
        "schema": SCHEMA,
        "word": rep.word,
        "weight": rep.weight.as_ref().map(weight_json),
        "case": {"l1": rep.multipliers.l1, "lm1": rep.multipliers.lm1},
        "certificate": rep.case.as_ref().map(case_json),
        "omega": rep.omega,
        "multipliers": mult,
        "fixed_points": rep.records.iter().map(|r| json!({
            "sigma": r.sigma.label(),
            "power": r.power,
            "zstar": r.zstar.iter().map(|z| match z.finite() { Some(z) => c(z), None => json!("inf") }).collect::<Vec<_>>(),
            "multipliers": [c(r.multipliers[0]), c(r.multipliers[1])],
            "residual": r.residual,
        })).collect::<Vec<_>>(),
        "eigenvalues": eig,
        "decay": {"d": rep.decay.d, "eta": rep.decay.eta},
    })
}

fn certified_case(w: &MapWord, samples: usize) -> std::result::Result<MappingCase, Failure> {
    let case = certify_cases(w, samples)?;
    if case.l1.case == Case::FAIL || case.lm1.case == Case::FAIL {
        return Err(Failure {
            code: 3,
            message: "mapping case could not be certified".into(),
            payload: Some(json!({"schema": SCHEMA, "word": w.to_string(), "certificate": case_json(&case)})),
        });
    }
    Ok(case)
}

fn resolve_weight(text: &str, case: &MappingCase) -> std::result::Result<QuadrantWeight, Failure> {
    if text == "auto" {
        Ok(QuadrantWeight::new(case.l1.delta, case.lm1.delta))
    } else {
        parse_weight(text)
    }
}

fn write_dump(path: &PathBuf, op: &TruncatedOperator) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DUMP_MAGIC)?;
    w.write_u32::<LittleEndian>(op.n as u32)?;
    w.write_u64::<LittleEndian>(op.grid as u64)?;
    for z in &op.entries {
        w.write_f64::<LittleEndian>(z.re)?;
        w.write_f64::<LittleEndian>(z.im)?;
    }
    w.flush()
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Resonances { word: text, count, verify, band, weight, grid, samples, floor, tol, force, out } => {
            let w = word(&text)?;
            let case = certified_case(&w, samples)?;
            let rep = predict_with_case(&w, &case, count)?;
            let mut v = report_json(&rep);
            let mut mismatch = false;
            if verify {
                let weight = resolve_weight(&weight, &case)?;
                let op = assemble_operator_with(&w, &weight, band, OperatorKind::Composition, &AssembleOptions { grid, force })?;
                let computed = spectrum(&op)?;
                let predicted: Vec<Complex64> = resonances_above(&rep.multipliers, floor).iter().map(|o| o.value).collect();
                let m = match_spectra(&predicted, &computed, floor, tol);
                // computed values close to the floor may pair with predicted ones just below it
                let stray: Vec<Complex64> = m.unmatched_computed.iter().copied().filter(|z| z.norm() >= 2.0 * floor).collect();
                let verified = m.unmatched_predicted.is_empty() && stray.is_empty();
                mismatch = !verified;
                v["verification"] = json!({
                    "band": band,
                    "grid": op.grid,
                    "aliasing_estimate": op.aliasing_estimate,
                    "aliasing_warning": op.aliasing_warning,
                    "weight": weight_json(&weight),
                    "floor": floor,
                    "tol": tol,
                    "matched": m.matched.len(),
                    "max_rel_error": m.max_rel_error,
                    "unmatched_predicted": m.unmatched_predicted.iter().map(|z| c(*z)).collect::<Vec<_>>(),
                    "unmatched_computed": stray.iter().map(|z| c(*z)).collect::<Vec<_>>(),
                    "verified": verified,
                });
            }
            emit(&out, &v)?;
            if mismatch {
                return Err(Failure { code: 4, message: "computed spectrum does not match the prediction".into(), payload: None });
            }
            Ok(())
        }
        Command::Check { word: text, grid, delta, delta_tilde, mapping, samples, out } => {
            let w = word(&text)?;
            let d = parse_list(&delta, 2, "delta")?;
            let dt = parse_list(&delta_tilde, 2, "delta-tilde")?;
            let rep = check_psec(&w, grid, [d[0], d[1]], [dt[0], dt[1]])?;
            let mut v = json!({
                "schema": SCHEMA,
                "word": w.to_string(),
                "passed": rep.passed,
                "margin": rep.margin,
                "grid": rep.grid,
                "witnesses": rep.witnesses,
                "criterion": rep.criterion,
            });
            if mapping {
                v["mapping"] = case_json(&certify_cases(&w, samples)?);
            }
            emit(&out, &v)?;
            if !rep.passed {
                return Err(Failure { code: 3, message: "cone condition failed".into(), payload: None });
            }
            Ok(())
        }
        Command::Reduce { matrix, out } => {
            let m = parse_matrix(&matrix)?;
            let r = reduce_to_standard(&m)?;
            emit(&out, &json!({"schema": SCHEMA, "matrix": m, "sign": r.sign as u8, "K": r.k, "Q": r.q, "residual_check": r.residual_check}))
        }
        Command::Build { matrix, decay, eta, out } => {
            let m = parse_matrix(&matrix)?;
            let target = match (decay, eta) {
                (DecayArg::Trivial, _) => DecayTarget::Trivial,
                (DecayArg::Stretched, Some(e)) => DecayTarget::Stretched(e),
                (DecayArg::Exponential, Some(e)) => DecayTarget::Exponential(e),
                (_, None) => return Err(Failure::input("--eta is required for stretched and exponential targets")),
            };
            let h = build_homotopic_map(&m, target)?;
            emit(
                &out,
                &json!({
                    "schema": SCHEMA,
                    "matrix": m,
                    "word": h.word.to_string(),
                    "inner": h.inner.to_string(),
                    "Q": h.q,
                    "reduction": {"sign": h.reduction.sign as u8, "K": h.reduction.k},
                    "a": h.a,
                    "predicted": report_json(&h.predicted),
                }),
            )
        }
        Command::Spectrum { word: text, band, weight, kind, grid, samples, force, out, plot_data, dump } => {
            let w = word(&text)?;
            let mut wt = if weight == "auto" { resolve_weight("auto", &certified_case(&w, samples)?)? } else { parse_weight(&weight)? };
            let kind = match kind {
                KindArg::Composition => OperatorKind::Composition,
                KindArg::Transfer => {
                    wt = wt.dual();
                    OperatorKind::Transfer
                }
            };
            let op = assemble_operator_with(&w, &wt, band, kind, &AssembleOptions { grid, force })?;
            let sp = spectrum(&op)?;
            let mut csv = csv::Writer::from_writer(sink(&out)?);
            csv.write_record(["index", "re", "im", "modulus"]).map_err(|e| Failure { code: 1, message: e.to_string(), payload: None })?;
            for (i, z) in sp.iter().enumerate() {
                csv.serialize((i, z.re, z.im, z.norm())).map_err(|e| Failure { code: 1, message: e.to_string(), payload: None })?;
            }
            csv.flush()?;
            if let Some(p) = plot_data {
                let mut pw = csv::Writer::from_path(p).map_err(|e| Failure { code: 1, message: e.to_string(), payload: None })?;
                pw.write_record(["index", "modulus", "sqrt_index", "neg_log_modulus"]).map_err(|e| Failure { code: 1, message: e.to_string(), payload: None })?;
                for (i, z) in sp.iter().enumerate() {
                    let r = z.norm();
                    pw.serialize((i + 1, r, ((i + 1) as f64).sqrt(), -r.ln())).map_err(|e| Failure { code: 1, message: e.to_string(), payload: None })?;
                }
                pw.flush()?;
            }
            if let Some(p) = dump {
                write_dump(&p, &op)?;
            }
            if op.aliasing_warning {
                eprintln!("warning: aliasing estimate {:e} after grid doubling", op.aliasing_estimate);
            }
            Ok(())
        }
        Command::Embed { inner, outer, band, out } => {
            let a = parse_weight(&inner)?;
            let b = parse_weight(&outer)?;
            if !(0..2).all(|i| a.alpha[i] < b.alpha[i] && b.gamma[i] < a.gamma[i]) {
                return Err(Failure::input("need alpha < A and Gamma < gamma componentwise"));
            }
            let s = embedding_singular_values(&a, &b, band);
            emit(&out, &json!({"schema": SCHEMA, "band": band, "eta": embedding_eta(&a, &b), "singular_values": s}))
        }
    }
}
