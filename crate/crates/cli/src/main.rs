//! Command-line workbench for finite universal algebra: classify and
//! generate tolerances and congruences, enumerate free algebras, decide the
//! conditions `M(n)`, search for witness and Mal'cev-type terms, and
//! reproduce the documented properties of the bundled fixtures.
//!
//! Exit codes: 0 when the queried property holds or a witness was found,
//! 1 when it was refuted or nothing was found, 2 on errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tolim_core::algebra::Term;
use tolim_core::freealg::free_algebra;
use tolim_core::malcev::{
    check_mn, find_h_witness, permutability_degree, solve_identity_system, IdentitySystem,
    MnStatus,
};
use tolim_core::relations::{classify, gen_congruence, gen_tolerance};
use tolim_core::tolim::refute_tolim;
use tolim_core::{fixtures, BinRel, Error, Limits};

use tolim_cli::format::{parse_algebra_spec, AlgebraSpec};
use tolim_cli::report;

#[derive(Parser)]
#[command(
    name = "tolim",
    version,
    about = "Workbench for tolerances, congruences and Mal'cev-type conditions on finite algebras"
)]
struct Cli {
    /// Emit a machine-readable JSON report instead of text
    #[arg(long, global = true)]
    json: bool,
    /// Cap on materialized table entries
    #[arg(long, global = true, env = "TOLIM_MAX_ENTRIES")]
    max_entries: Option<usize>,
    /// Cap on candidate vectors produced by closures
    #[arg(long, global = true, env = "TOLIM_MAX_WORK")]
    max_work: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a named relation of a spec file
    Classify { spec: PathBuf, rel: String },
    /// Generate the smallest tolerance containing the given pairs
    ///
    /// PAIRS is either the name of a relation in the spec or an inline list
    /// like "0,1 2,0".
    GenTolerance { spec: PathBuf, pairs: String },
    /// Generate the smallest congruence containing the given pairs
    GenCongruence { spec: PathBuf, pairs: String },
    /// Enumerate the free algebra on K generators of the generated variety
    Free { spec: PathBuf, k: usize },
    /// Decide the condition M(n) for the generated variety
    CheckMn { spec: PathBuf, n: usize },
    /// Find a witness term for a named term pair satisfying the diagonal
    /// identity
    FindH {
        spec: PathBuf,
        n: usize,
        f: String,
        g: String,
    },
    /// Search for a Mal'cev term
    FindMalcev { spec: PathBuf },
    /// Search for a majority term
    FindMajority { spec: PathBuf },
    /// Smallest congruence permutability degree up to MAX_N
    Permutability { spec: PathBuf, max_n: usize },
    /// Search for a refutation of the tolerance-image property for a named
    /// tolerance
    RefuteTolim {
        spec: PathBuf,
        rel: String,
        n: usize,
    },
    /// Re-check the bundled fixtures against their documented properties
    VerifyPaper {
        /// Only this fixture
        #[arg(long)]
        fixture: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut limits = Limits::default();
    if let Some(max_entries) = cli.max_entries {
        limits.max_entries = max_entries;
    }
    if let Some(max_work) = cli.max_work {
        limits.max_work = max_work;
    }
    match run(cli, &limits) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn load_spec(path: &Path) -> Result<AlgebraSpec, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_algebra_spec(&text).map_err(|e| format!("{}:{e}", path.display()))
}

fn named_relation<'s>(spec: &'s AlgebraSpec, name: &str) -> Result<&'s BinRel, String> {
    spec.relation(name)
        .ok_or_else(|| format!("no relation named `{name}` in the spec"))
}

fn named_term<'s>(spec: &'s AlgebraSpec, name: &str) -> Result<&'s Term, String> {
    spec.term(name)
        .ok_or_else(|| format!("no term named `{name}` in the spec"))
}

/// PAIRS argument: a relation name from the spec, or an inline list like
/// "0,1 2,0" (whitespace or semicolon separated).
fn parse_pairs(spec: &AlgebraSpec, arg: &str) -> Result<Vec<(usize, usize)>, String> {
    if let Some(rel) = spec.relation(arg) {
        return Ok(rel.iter().collect());
    }
    let mut pairs = Vec::new();
    for item in arg.split([' ', ';']).filter(|s| !s.is_empty()) {
        let (a, b) = item
            .split_once(',')
            .ok_or_else(|| format!("expected `a,b`, found `{item}`"))?;
        let a: usize = a.trim().parse().map_err(|_| format!("bad element `{a}`"))?;
        let b: usize = b.trim().parse().map_err(|_| format!("bad element `{b}`"))?;
        pairs.push((a, b));
    }
    Ok(pairs)
}

fn emit<T: serde::Serialize>(json: bool, report: &T, text: impl FnOnce()) {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(report).expect("reports serialize")
        );
    } else {
        text();
    }
}

fn run(cli: Cli, limits: &Limits) -> Result<u8, String> {
    match cli.command {
        Command::Classify { spec, rel } => {
            let spec = load_spec(&spec)?;
            let relation = named_relation(&spec, &rel)?;
            let flags = classify(&spec.algebra, relation);
            let report = report::ClassifyReport {
                command: "classify",
                relation: rel.clone(),
                reflexive: flags.reflexive,
                symmetric: flags.symmetric,
                transitive: flags.transitive,
                compatible: flags.compatible,
                tolerance: flags.tolerance,
                congruence: flags.congruence,
            };
            emit(cli.json, &report, || {
                let yes_no = |b: bool| if b { "yes" } else { "no" };
                println!(
                    "reflexive: {}, symmetric: {}, transitive: {}, compatible: {}",
                    yes_no(flags.reflexive),
                    yes_no(flags.symmetric),
                    yes_no(flags.transitive),
                    yes_no(flags.compatible),
                );
                println!(
                    "tolerance: {}, congruence: {}",
                    yes_no(flags.tolerance),
                    yes_no(flags.congruence)
                );
            });
            Ok(if flags.tolerance { 0 } else { 1 })
        }
        Command::GenTolerance { spec, pairs } => {
            let spec = load_spec(&spec)?;
            let gens = parse_pairs(&spec, &pairs)?;
            let (rel, _) = gen_tolerance(&spec.algebra, &gens).map_err(|e| e.to_string())?;
            print_relation(cli.json, "gen-tolerance", &gens, &rel);
            Ok(0)
        }
        Command::GenCongruence { spec, pairs } => {
            let spec = load_spec(&spec)?;
            let gens = parse_pairs(&spec, &pairs)?;
            let (rel, _) = gen_congruence(&spec.algebra, &gens).map_err(|e| e.to_string())?;
            print_relation(cli.json, "gen-congruence", &gens, &rel);
            Ok(0)
        }
        Command::Free { spec, k } => {
            let spec = load_spec(&spec)?;
            let free = free_algebra(&spec.algebra, k, limits).map_err(|e| e.to_string())?;
            let elements: Vec<String> = free
                .elements()
                .iter()
                .map(|e| e.witness().display(&spec.algebra))
                .collect();
            let report = report::FreeReport {
                command: "free",
                rank: k,
                size: free.len(),
                elements,
            };
            emit(cli.json, &report, || {
                println!("free algebra on {k} generators: {} elements", free.len());
                for (i, name) in report.elements.iter().enumerate().take(64) {
                    println!("  [{i}] {name}");
                }
                if report.elements.len() > 64 {
                    println!("  ... and {} more", report.elements.len() - 64);
                }
            });
            Ok(0)
        }
        Command::CheckMn { spec, n } => {
            let spec = load_spec(&spec)?;
            let verdict = check_mn(&spec.algebra, n, limits).map_err(|e| e.to_string())?;
            let (cf, cg) = match &verdict.counterexample {
                Some((f, g)) => (
                    Some(f.display(&spec.algebra)),
                    Some(g.display(&spec.algebra)),
                ),
                None => (None, None),
            };
            let holds = verdict.status == MnStatus::Holds;
            let report = report::MnReport {
                command: "check-mn",
                n,
                status: if holds { "holds" } else { "fails" },
                examined: verdict.free_size,
                counterexample_f: cf,
                counterexample_g: cg,
            };
            emit(cli.json, &report, || {
                println!(
                    "M({n}) {} ({} term functions examined)",
                    report.status, report.examined
                );
                if let (Some(f), Some(g)) =
                    (&report.counterexample_f, &report.counterexample_g)
                {
                    println!("counterexample pair with no witness:");
                    println!("  f = {f}");
                    println!("  g = {g}");
                }
            });
            Ok(if holds { 0 } else { 1 })
        }
        Command::FindH { spec, n, f, g } => {
            let spec = load_spec(&spec)?;
            let f = named_term(&spec, &f)?.clone();
            let g = named_term(&spec, &g)?.clone();
            match find_h_witness(&spec.algebra, n, &f, &g, limits) {
                Ok(h) => {
                    let report = report::TermSearchReport {
                        command: "find-h",
                        found: true,
                        term: Some(h.display(&spec.algebra)),
                    };
                    emit(cli.json, &report, || {
                        println!("witness: {}", report.term.as_ref().unwrap())
                    });
                    Ok(0)
                }
                Err(Error::NotFound) => {
                    let report = report::TermSearchReport {
                        command: "find-h",
                        found: false,
                        term: None,
                    };
                    emit(cli.json, &report, || {
                        println!("no witness exists: the pair refutes M({n})")
                    });
                    Ok(1)
                }
                Err(e) => Err(e.to_string()),
            }
        }
        Command::FindMalcev { spec } => {
            term_search(cli.json, &spec, "find-malcev", &IdentitySystem::malcev(), limits)
        }
        Command::FindMajority { spec } => term_search(
            cli.json,
            &spec,
            "find-majority",
            &IdentitySystem::majority(),
            limits,
        ),
        Command::Permutability { spec, max_n } => {
            let spec = load_spec(&spec)?;
            let found =
                permutability_degree(&spec.algebra, max_n, limits).map_err(|e| e.to_string())?;
            let report = report::PermutabilityReport {
                command: "permutability",
                max_n,
                degree: found.as_ref().map(|c| c.degree),
                chain: found
                    .as_ref()
                    .map(|c| {
                        c.terms
                            .iter()
                            .map(|t| t.display(&spec.algebra))
                            .collect()
                    })
                    .unwrap_or_default(),
            };
            emit(cli.json, &report, || match &report.degree {
                Some(degree) => {
                    println!("degree {degree}");
                    for (i, t) in report.chain.iter().enumerate() {
                        println!("  p{} = {t}", i + 1);
                    }
                }
                None => println!("no chain up to degree {max_n}"),
            });
            Ok(if report.degree.is_some() { 0 } else { 1 })
        }
        Command::RefuteTolim { spec, rel, n } => {
            let spec = load_spec(&spec)?;
            let relation = named_relation(&spec, &rel)?;
            let found =
                refute_tolim(&spec.algebra, relation, n, limits).map_err(|e| e.to_string())?;
            let report = match &found {
                Some(r) => report::RefuteReport {
                    command: "refute-tolim",
                    n,
                    refuted: true,
                    f: Some(r.f.display(&spec.algebra)),
                    g: Some(r.g.display(&spec.algebra)),
                    assignment: Some(r.assignment.clone()),
                    image: Some(r.image),
                },
                None => report::RefuteReport {
                    command: "refute-tolim",
                    n,
                    refuted: false,
                    f: None,
                    g: None,
                    assignment: None,
                    image: None,
                },
            };
            emit(cli.json, &report, || match &found {
                Some(r) => {
                    println!("refuted: `{rel}` is not a congruence image at level {n}");
                    println!("  f = {}", report.f.as_ref().unwrap());
                    println!("  g = {}", report.g.as_ref().unwrap());
                    println!("  assignment = {:?}", r.assignment);
                    println!("  image = {:?} (outside the tolerance)", r.image);
                }
                None => println!("no refutation found at level {n} (evidence, not proof)"),
            });
            Ok(if found.is_some() { 1 } else { 0 })
        }
        Command::VerifyPaper { fixture } => {
            let all = fixtures::all_fixtures().map_err(|e| e.to_string())?;
            let selected: Vec<_> = match &fixture {
                Some(name) => {
                    let matched: Vec<_> =
                        all.into_iter().filter(|fx| &fx.name == name).collect();
                    if matched.is_empty() {
                        return Err(format!("no fixture named `{name}`"));
                    }
                    matched
                }
                None => all,
            };
            let mut checks = Vec::new();
            for fx in &selected {
                let outcomes =
                    fixtures::verify_fixture(fx, limits).map_err(|e| e.to_string())?;
                for outcome in outcomes {
                    checks.push(report::CheckLine {
                        fixture: outcome.fixture,
                        label: outcome.label,
                        passed: outcome.passed,
                        detail: outcome.detail,
                    });
                }
            }
            let passed = checks.iter().all(|c| c.passed);
            let report = report::VerifyReport {
                command: "verify-paper",
                checks,
                passed,
            };
            emit(cli.json, &report, || {
                for check in &report.checks {
                    let mark = if check.passed { "ok  " } else { "FAIL" };
                    if check.detail.is_empty() {
                        println!("{mark} {} :: {}", check.fixture, check.label);
                    } else {
                        println!(
                            "{mark} {} :: {} ({})",
                            check.fixture, check.label, check.detail
                        );
                    }
                }
                let total = report.checks.len();
                let good = report.checks.iter().filter(|c| c.passed).count();
                println!("{good}/{total} checks passed");
            });
            Ok(if passed { 0 } else { 1 })
        }
    }
}

fn term_search(
    json: bool,
    spec_path: &Path,
    command: &'static str,
    system: &IdentitySystem,
    limits: &Limits,
) -> Result<u8, String> {
    let spec = load_spec(spec_path)?;
    match solve_identity_system(&spec.algebra, system, limits) {
        Ok(term) => {
            let report = report::TermSearchReport {
                command,
                found: true,
                term: Some(term.display(&spec.algebra)),
            };
            emit(json, &report, || {
                println!("term: {}", report.term.as_ref().unwrap())
            });
            Ok(0)
        }
        Err(Error::NotFound) => {
            let report = report::TermSearchReport {
                command,
                found: false,
                term: None,
            };
            emit(json, &report, || println!("no such term"));
            Ok(1)
        }
        Err(e) => Err(e.to_string()),
    }
}

fn print_relation(json: bool, command: &'static str, gens: &[(usize, usize)], rel: &BinRel) {
    let report = report::RelationReport {
        command,
        generators: gens.to_vec(),
        size: rel.size(),
        pairs: rel.iter().collect(),
    };
    emit(json, &report, || {
        println!("{} pairs:", report.pairs.len());
        for chunk in report.pairs.chunks(8) {
            let cells: Vec<String> = chunk.iter().map(|(a, b)| format!("({a},{b})")).collect();
            println!("  {}", cells.join(" "));
        }
    });
}
