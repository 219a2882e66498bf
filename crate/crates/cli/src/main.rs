use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hermlie_cli::format::{read_instance, write_instance, FileProvenance};
use hermlie_core::frames::{self, CaseTag, JType};
use hermlie_core::generator::{self, GenParams, Instance, MetricTarget};
use hermlie_core::hermitian::{
    balanced_defect, gauduchon_defect, kahler_defect, pluriclosed_defect,
};
use hermlie_core::linalg::Tolerance;
use hermlie_core::metricsearch::{minimize, Objective, SearchConfig};
use hermlie_core::theorems::{self, LemmaReport};
use hermlie_core::Error as CoreError;

/// Exit code for verification failures (lemma suite, gates).
const EXIT_VERIFY: u8 = 1;
/// Exit code for usage, parse, and validation errors.
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "hermlie",
    about = "Left-invariant Hermitian geometry on Lie algebras with codimension-2 abelian ideals",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    /// Ja != a with non-abelian quotient
    Main,
    /// Ja = a
    A,
    /// Ja != a with abelian quotient
    B,
}

impl From<CaseArg> for CaseTag {
    fn from(c: CaseArg) -> CaseTag {
        match c {
            CaseArg::Main => CaseTag::MainNonabelian,
            CaseArg::A => CaseTag::JaEqualsA,
            CaseArg::B => CaseTag::AbelianQuotient,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TypeArg {
    Generic,
    HalfGeneric,
    Degenerate,
}

impl From<TypeArg> for JType {
    fn from(t: TypeArg) -> JType {
        match t {
            TypeArg::Generic => JType::Generic,
            TypeArg::HalfGeneric => JType::HalfGeneric,
            TypeArg::Degenerate => JType::Degenerate,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    None,
    Balanced,
    Pluriclosed,
    Kahler,
}

impl From<TargetArg> for MetricTarget {
    fn from(t: TargetArg) -> MetricTarget {
        match t {
            TargetArg::None => MetricTarget::None,
            TargetArg::Balanced => MetricTarget::Balanced,
            TargetArg::Pluriclosed => MetricTarget::Pluriclosed,
            TargetArg::Kahler => MetricTarget::Kahler,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Balanced,
    Pluriclosed,
    Kahler,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Objective {
        match o {
            ObjectiveArg::Balanced => Objective::Balanced,
            ObjectiveArg::Pluriclosed => Objective::Pluriclosed,
            ObjectiveArg::Kahler => Objective::Kahler,
        }
    }
}

#[derive(Args)]
struct ReadOpts {
    /// accept unknown fields instead of rejecting them
    #[arg(long)]
    lenient: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded instance and write it to a file
    Generate {
        /// complex dimension (real dimension is 2n)
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        case: CaseArg,
        /// main-case type of J
        #[arg(long = "type", value_enum)]
        jtype: Option<TypeArg>,
        /// abelian-quotient rank request
        #[arg(long)]
        r0: Option<usize>,
        #[arg(long, value_enum, default_value = "none")]
        target: TargetArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Case, type, reduced invariants and metric defects of an instance
    Analyze {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        read: ReadOpts,
    },
    /// Run the lemma suite for the instance's case
    Verify {
        file: PathBuf,
        /// only run reports whose id contains this substring
        #[arg(long)]
        suite: Option<String>,
        /// perturb the structure constants by this magnitude first
        #[arg(long)]
        fuzz: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        read: ReadOpts,
    },
    /// Multistart metric-cone search for a balanced/pluriclosed/Kähler metric
    Search {
        file: PathBuf,
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        #[arg(long, default_value_t = 50)]
        starts: usize,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// write the instance back with the witness metric
        #[arg(long)]
        emit_metric: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        read: ReadOpts,
    },
    /// Combine a pluriclosed metric and balanced evidence into a Kähler metric
    Kahlerize {
        pluriclosed: PathBuf,
        balanced: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        read: ReadOpts,
    },
    /// List the built-in fixtures, or write them out as instance files
    Catalog {
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

/// `HERMLIE_SEED` overrides any --seed flag when set.
fn effective_seed(flag: u64) -> u64 {
    match std::env::var("HERMLIE_SEED") {
        Ok(v) => v.parse().unwrap_or(flag),
        Err(_) => flag,
    }
}

fn load(path: &Path, lenient: bool) -> Result<(Instance, Option<FileProvenance>)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    read_instance(&text, !lenient).with_context(|| format!("parsing {}", path.display()))
}

fn run() -> Result<u8> {
    let cli = Cli::parse();
    let tol = Tolerance::default();
    match cli.cmd {
        Cmd::Generate { n, case, jtype, r0, target, seed, out } => {
            let params = GenParams {
                n,
                case: case.into(),
                jtype: jtype.map(Into::into),
                r0,
                target: target.into(),
                seed: effective_seed(seed),
            };
            match generator::gen(&params) {
                Ok(inst) => {
                    let prov = FileProvenance {
                        case: Some(params.case.to_string()),
                        jtype: params.jtype.map(|t| t.to_string()),
                        target: Some(params.target.to_string()),
                        seed: Some(params.seed),
                        note: None,
                    };
                    std::fs::write(&out, write_instance(&inst, Some(&prov)))
                        .with_context(|| format!("writing {}", out.display()))?;
                    println!("wrote {} ({}, 2n = {})", out.display(), params.case, 2 * n);
                    Ok(0)
                }
                Err(e) => {
                    eprintln!("generation failed: {e}");
                    Ok(EXIT_USAGE)
                }
            }
        }
        Cmd::Analyze { file, json, read } => {
            let (inst, _) = load(&file, read.lenient)?;
            let report = analyze(&inst, tol)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print_analysis(&report);
            }
            Ok(0)
        }
        Cmd::Verify { file, suite, fuzz, seed, json, read } => {
            let (mut inst, _) = load(&file, read.lenient)?;
            if let Some(eps) = fuzz {
                fuzz_instance(&mut inst, eps, effective_seed(seed));
            }
            let reports = match theorems::lemma_suite(&inst, tol) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("verification failed: {e}");
                    return Ok(EXIT_VERIFY);
                }
            };
            let filtered: Vec<&LemmaReport> = reports
                .iter()
                .filter(|r| suite.as_deref().map(|s| r.lemma_id.contains(s)).unwrap_or(true))
                .collect();
            if filtered.is_empty() {
                bail!("no lemma reports match the suite filter");
            }
            let all_pass = filtered.iter().all(|r| r.pass);
            if json {
                println!("{}", serde_json::to_string_pretty(&filtered)?);
            } else {
                for r in &filtered {
                    print_lemma_report(r);
                }
                println!("{}", if all_pass { "VERIFY PASS" } else { "VERIFY FAIL" });
            }
            Ok(if all_pass { 0 } else { EXIT_VERIFY })
        }
        Cmd::Search { file, objective, starts, max_iters, seed, emit_metric, json, read } => {
            let (inst, _) = load(&file, read.lenient)?;
            let cfg = SearchConfig {
                objective: objective.into(),
                multistarts: starts,
                max_iters,
                step_tol: 1e-13,
                defect_gate: 1e-8,
                seed: effective_seed(seed),
            };
            let report = minimize(&inst, &cfg).map_err(|e| anyhow!("{e}"))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!(
                    "objective {}: best defect {:.3e}, floor {:.3e}, witness: {}",
                    report.objective,
                    report.best_defect,
                    report.floor,
                    if report.witness_found { "found" } else { "none" }
                );
            }
            if let Some(out) = emit_metric {
                match &report.witness {
                    Some(metric) => {
                        let emitted =
                            inst.with_metric(metric.clone()).map_err(|e| anyhow!("{e}"))?;
                        let prov = FileProvenance {
                            note: Some(format!(
                                "search witness for objective {}",
                                report.objective
                            )),
                            ..Default::default()
                        };
                        std::fs::write(&out, write_instance(&emitted, Some(&prov)))
                            .with_context(|| format!("writing {}", out.display()))?;
                        println!("wrote witness metric to {}", out.display());
                    }
                    None => {
                        eprintln!("no witness to emit (floor {:.3e})", report.floor);
                        return Ok(EXIT_VERIFY);
                    }
                }
            }
            Ok(0)
        }
        Cmd::Kahlerize { pluriclosed, balanced, out, read } => {
            let (pc, _) = load(&pluriclosed, read.lenient)?;
            let (bal, _) = load(&balanced, read.lenient)?;
            let case = pc.case(tol).map_err(|e| anyhow!("{e}"))?;
            let result = match case {
                CaseTag::MainNonabelian => {
                    eprintln!(
                        "no Kähler metric expected in the main non-abelian case; \
                         balanced and pluriclosed metrics exclude each other there"
                    );
                    return Ok(EXIT_USAGE);
                }
                CaseTag::JaEqualsA => theorems::kahlerize_a(&pc, &bal, tol),
                CaseTag::AbelianQuotient => theorems::kahlerize_b(&pc, &bal, tol),
            };
            match result {
                Ok(metric) => {
                    let emitted = pc.with_metric(metric).map_err(|e| anyhow!("{e}"))?;
                    let prov = FileProvenance {
                        note: Some("kahlerized metric".to_string()),
                        ..Default::default()
                    };
                    std::fs::write(&out, write_instance(&emitted, Some(&prov)))
                        .with_context(|| format!("writing {}", out.display()))?;
                    println!("wrote Kähler metric to {}", out.display());
                    Ok(0)
                }
                Err(e @ CoreError::PreconditionViolated(_)) => {
                    eprintln!("{e}");
                    Ok(EXIT_USAGE)
                }
                Err(e) => {
                    eprintln!("Kählerization failed: {e}");
                    Ok(EXIT_VERIFY)
                }
            }
        }
        Cmd::Catalog { out_dir } => {
            let entries = generator::catalog();
            match out_dir {
                None => {
                    for (name, inst) in &entries {
                        println!(
                            "{name}: 2n = {}, case {}",
                            inst.algebra.dim(),
                            inst.case(tol).map_err(|e| anyhow!("{e}"))?
                        );
                    }
                }
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    for (name, inst) in &entries {
                        let prov = FileProvenance {
                            note: Some(format!("catalog fixture {name}")),
                            ..Default::default()
                        };
                        let path = dir.join(format!("{name}.hermlie"));
                        std::fs::write(&path, write_instance(inst, Some(&prov)))?;
                        println!("wrote {}", path.display());
                    }
                }
            }
            Ok(0)
        }
    }
}

#[derive(Serialize)]
struct AnalyzeReport {
    dim: usize,
    n: usize,
    case: String,
    unimodular: bool,
    kahler_trivially: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    jtype: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r0: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    balanced_defect: f64,
    pluriclosed_defect: f64,
    kahler_defect: f64,
    gauduchon_defect: f64,
}

fn analyze(inst: &Instance, tol: Tolerance) -> Result<AnalyzeReport> {
    let case = inst.case(tol).map_err(|e| anyhow!("{e}"))?;
    let af = inst.admissible_frame(tol).map_err(|e| anyhow!("{e}"))?;
    let st = inst.tensors(&af.frame);
    let mut report = AnalyzeReport {
        dim: inst.algebra.dim(),
        n: inst.n(),
        case: case.to_string(),
        unimodular: inst.is_unimodular(tol),
        kahler_trivially: inst.algebra.derived_algebra().dim() == 0,
        jtype: None,
        r0: None,
        sigma: None,
        a: None,
        b: None,
        c: None,
        c_prime: None,
        d_prime: None,
        delta: None,
        sigma_b: None,
        lambda: None,
        balanced_defect: balanced_defect(&st),
        pluriclosed_defect: pluriclosed_defect(&st),
        kahler_defect: kahler_defect(&st),
        gauduchon_defect: gauduchon_defect(&inst.algebra, &inst.j, &inst.metric)
            .map_err(|e| anyhow!("{e}"))?,
    };
    match case {
        CaseTag::MainNonabelian => {
            let r = frames::extract_reduced_main(&inst.algebra, &af, &st, &inst.metric, tol)
                .map_err(|e| anyhow!("{e}"))?;
            report.jtype = Some(r.jtype.to_string());
            report.sigma = Some(r.sigma);
            report.a = Some(r.a);
            report.b = Some(r.b);
            report.c = Some(r.c);
            report.c_prime = Some(r.c_p);
            report.d_prime = Some(r.d_p);
            report.delta = Some(r.delta);
            report.sigma_b = Some(r.sigma * r.b);
        }
        CaseTag::JaEqualsA => {
            let r = frames::extract_reduced_a(&af, &st, tol).map_err(|e| anyhow!("{e}"))?;
            report.lambda = Some(r.lambda);
        }
        CaseTag::AbelianQuotient => {
            let r = frames::extract_reduced_b(&inst.algebra, &af, &st, &inst.metric, tol)
                .map_err(|e| anyhow!("{e}"))?;
            report.r0 = Some(r.r0);
            report.a = Some(r.a);
            report.b = Some(r.b);
            report.c = Some(r.c);
            report.c_prime = Some(r.c_p);
            report.d_prime = Some(r.d_p);
            report.delta = Some(r.delta);
        }
    }
    Ok(report)
}

fn print_analysis(r: &AnalyzeReport) {
    println!("case: {} (2n = {})", r.case, r.dim);
    if r.kahler_trivially {
        println!("Kähler (trivially): the algebra is abelian");
    }
    println!("unimodular: {}", r.unimodular);
    if let Some(t) = &r.jtype {
        println!("type: {t}");
    }
    if let Some(r0) = r.r0 {
        println!("r0: {r0}");
    }
    if let Some(s) = r.sigma {
        println!("sigma: {s:.6}");
    }
    if let (Some(a), Some(b), Some(c)) = (r.a, r.b, r.c) {
        println!("a: {a:.6}  b: {b:.6}  c: {c:.6}");
    }
    if let (Some(cp), Some(dp)) = (r.c_prime, r.d_prime) {
        println!("c': {cp:.6}  d': {dp:.6}");
    }
    if let Some(d) = r.delta {
        println!("delta: {d:.6}");
    }
    if let Some(sb) = r.sigma_b {
        println!("sigma*b: {sb:.6} (sign {})", if sb > 0.0 { "+" } else { "-" });
    }
    if let Some(l) = r.lambda {
        println!("lambda: {l:.6}");
    }
    println!(
        "defects: balanced {:.3e}, pluriclosed {:.3e}, kahler {:.3e}, gauduchon {:.3e}",
        r.balanced_defect, r.pluriclosed_defect, r.kahler_defect, r.gauduchon_defect
    );
}

fn print_lemma_report(r: &LemmaReport) {
    let status = if !r.applicable {
        "n/a "
    } else if r.pass {
        "PASS"
    } else {
        "FAIL"
    };
    println!(
        "[{status}] {}{}",
        r.lemma_id,
        if r.context.is_empty() { String::new() } else { format!(" ({})", r.context) }
    );
    for (name, value) in &r.residuals {
        println!("        {name}: {value:.3e}");
    }
    for (name, ok) in &r.checks {
        println!("        {name}: {}", if *ok { "ok" } else { "VIOLATED" });
    }
}

/// Additive seeded noise on the nonzero structure constants.
fn fuzz_instance(inst: &mut Instance, eps: f64, seed: u64) {
    use rand::{RngCore, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut unit = || (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0) * 2.0 - 1.0;
    let dim = inst.algebra.dim();
    let mut alg = inst.algebra.clone();
    for i in 0..dim {
        for j in (i + 1)..dim {
            for k in 0..dim {
                let v = alg.f(k, i, j);
                if v != 0.0 {
                    let _ = alg.set_f(k, i, j, v + eps * unit());
                }
            }
        }
    }
    inst.algebra = alg;
}
