//! `secanta`: ranks, border ranks and secant dimensions from the command line.
//!
//! Every command writes one JSON document to stdout and a short summary to
//! stderr. Exit codes: 0 success, 2 bad input, 3 numerical failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use secanta_core::catalog::{classify_22n, classify_three_qubit, exceptional_catalog, Family};
use secanta_core::degenerations::{default_ladder, make_curve, CurveFamily};
use secanta_core::invariants::{hyperdet_222, mlrank_tol, mu_norm_sq, rdm};
use secanta_core::linalg::RANK_TOL;
use secanta_core::rank::{best_rank_r, estimate_rank, secant_dim_tol, FitOptions, RankOptions};
use secanta_core::textfmt::{from_json, TensorDocument};
use secanta_core::varieties::{expected_generic_rank, expected_secant_dim, is_spherical};
use secanta_core::waring::{coprime_sum_rank, monomial_rank, Monomial};
use secanta_core::{format_ket, parse_ket, Error, Kind, ProjectiveState, SystemSpec, Tensor};

const SCHEMA: &str = "secanta/1";

#[derive(Parser)]
#[command(name = "secanta", version, about = "Ranks and border ranks of multiparticle states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Clone)]
struct Global {
    /// Particle type: distinguishable, bosonic or fermionic.
    #[arg(long, global = true)]
    kind: Option<Kind>,
    /// Local dimensions, comma separated (one per particle for distinguishable systems).
    #[arg(long, global = true, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Single-particle dimension for bosons and fermions.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Number of particles for bosons and fermions.
    #[arg(long = "L", global = true)]
    l: Option<usize>,
    /// State as a ket expression, e.g. "|001>+|010>+|100>".
    #[arg(long, global = true)]
    state: Option<String>,
    /// State as a tensor document (JSON).
    #[arg(long, global = true)]
    file: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Numerical rank tolerance.
    #[arg(long, global = true, default_value_t = RANK_TOL)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 32)]
    restarts: usize,
    #[arg(long = "max-iters", global = true, default_value_t = 500)]
    max_iters: usize,
    /// Suppress the summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a state and print its canonical document.
    Parse,
    /// SLOCC orbit of a 2×2×2 or 2×2×N state.
    Classify,
    /// Reduced one-particle density matrices and their spectra.
    Rdm,
    /// Squared norm of the momentum map.
    MuNorm,
    /// Cayley hyperdeterminant of a 2×2×2 state.
    Hyperdet,
    /// Multilinear rank.
    Mlrank,
    /// Flattening lower bound, certified upper bound and border-rank estimate.
    Rank,
    /// Border-rank estimate, or the unbounded best fit with a given number of terms.
    BorderRank {
        #[arg(long)]
        r: Option<usize>,
    },
    /// Measured dimension of the r-th secant variety.
    SecantDim {
        #[arg(long)]
        r: usize,
    },
    /// Expected dimension of the r-th secant variety and the generic rank.
    Expected {
        #[arg(long)]
        r: usize,
    },
    /// Waring rank of a monomial or of a sum of coprime monomials.
    Waring {
        /// Exponents of one monomial, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with = "monomials")]
        exponents: Option<Vec<usize>>,
        /// Several monomials: exponent lists separated by ';'.
        #[arg(long)]
        monomials: Option<String>,
    },
    /// Whether the symmetry group acts spherically.
    Spherical,
    /// Distance ladder of a degeneration curve.
    Degenerate {
        #[arg(long, value_enum)]
        family: CurveChoice,
    },
    /// Catalog of exceptional states.
    Catalog {
        #[arg(long)]
        family: Option<Family>,
        /// Write one tensor document per entry into this directory.
        #[arg(long = "emit-dir")]
        emit_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveChoice {
    Qubit3,
    Boson,
    Fermion36,
}

/// An error together with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure { code: if e.is_input_error() { 2 } else { 3 }, message: e.to_string() }
    }
}

fn flagged(flag: &str, e: Error) -> Failure {
    let f = Failure::from(e);
    Failure { message: format!("{flag}: {}", f.message), ..f }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type Outcome = Result<(Value, String), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.global.quiet;
    match run(&cli) {
        Ok((body, summary)) => {
            let mut doc = Map::new();
            doc.insert("schema".into(), json!(SCHEMA));
            doc.insert("command".into(), json!(command_name(&cli.command)));
            doc.insert("seed".into(), json!(cli.global.seed));
            if let Value::Object(fields) = body {
                doc.extend(fields);
            }
            let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON output");
            // A closed pipe downstream is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if !quiet {
                eprintln!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Parse => "parse",
        Command::Classify => "classify",
        Command::Rdm => "rdm",
        Command::MuNorm => "mu-norm",
        Command::Hyperdet => "hyperdet",
        Command::Mlrank => "mlrank",
        Command::Rank => "rank",
        Command::BorderRank { .. } => "border-rank",
        Command::SecantDim { .. } => "secant-dim",
        Command::Expected { .. } => "expected",
        Command::Waring { .. } => "waring",
        Command::Spherical => "spherical",
        Command::Degenerate { .. } => "degenerate",
        Command::Catalog { .. } => "catalog",
    }
}

fn system(g: &Global) -> Result<SystemSpec, Failure> {
    let kind = g.kind.ok_or_else(|| usage("--kind is required (distinguishable, bosonic or fermionic)"))?;
    let spec = match kind {
        Kind::Distinguishable => {
            let dims = g.dims.clone().ok_or_else(|| usage("--dims is required for distinguishable systems"))?;
            SystemSpec::distinguishable(&dims)?
        }
        Kind::Bosonic | Kind::Fermionic => {
            let n = match (g.n, g.dims.as_deref()) {
                (Some(n), _) => n,
                (None, Some([n])) => *n,
                _ => return Err(usage("--n is required for bosonic and fermionic systems")),
            };
            let l = g.l.ok_or_else(|| usage("--L is required for bosonic and fermionic systems"))?;
            SystemSpec::new(kind, l, vec![n])?
        }
    };
    Ok(spec)
}

fn input_state(g: &Global) -> Result<Tensor, Failure> {
    match (&g.state, &g.file) {
        (Some(_), Some(_)) => Err(usage("give either --state or --file, not both")),
        (Some(text), None) => parse_ket(text, &system(g)?).map_err(|e| flagged("--state", e)),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("--file {}: {e}", path.display())))?;
            from_json(&text).map_err(|e| flagged("--file", e))
        }
        (None, None) => Err(usage("a state is required: pass --state or --file")),
    }
}

fn spec_json(spec: &SystemSpec) -> Value {
    json!({ "kind": spec.kind(), "L": spec.particles(), "dims": spec.dims() })
}

fn rank_options(g: &Global) -> RankOptions {
    RankOptions { restarts: g.restarts, max_iters: g.max_iters, seed: g.seed, tol: g.tol, ..RankOptions::default() }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable report")
}

fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Parse => {
            let t = input_state(g)?;
            let doc = TensorDocument::from_tensor(&t);
            let summary = format!("{} ({} nonzero entries), norm {:.6}", format_ket(&t), doc.entries.len(), t.norm());
            let mut v = to_value(&doc);
            v["ket"] = json!(format_ket(&t));
            v["norm"] = json!(t.norm());
            Ok((v, summary))
        }
        Command::Classify => {
            let t = input_state(g)?;
            let dims = t.spec().dims();
            let c = match (t.spec().kind(), dims) {
                (Kind::Distinguishable, [2, 2, 2]) => classify_three_qubit(&t)?,
                (Kind::Distinguishable, [2, 2, _]) => classify_22n(&t)?,
                _ => return Err(usage("classify needs a distinguishable 2x2x2 or 2x2xN state (--dims 2,2,N)")),
            };
            let summary = format!("orbit {}", c.label);
            Ok((json!({ "classification": c }), summary))
        }
        Command::Rdm => {
            let p = ProjectiveState::new(&input_state(g)?)?;
            let set = rdm(&p);
            let matrices: Vec<Value> = set
                .rho
                .iter()
                .map(|m| {
                    let rows: Vec<Vec<[f64; 2]>> =
                        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
                    json!(rows)
                })
                .collect();
            let summary = format!("spectra {:?}", set.spectra);
            Ok((json!({ "spectra": set.spectra, "matrices": matrices }), summary))
        }
        Command::MuNorm => {
            let p = ProjectiveState::new(&input_state(g)?)?;
            let v = mu_norm_sq(&p);
            Ok((json!({ "mu_norm_sq": v }), format!("|mu|^2 = {v:.6e}")))
        }
        Command::Hyperdet => {
            let t = input_state(g)?;
            let h = hyperdet_222(&t)?;
            Ok((json!({ "re": h.re, "im": h.im, "abs": h.norm() }), format!("Det = {:.6e}{:+.6e}i", h.re, h.im)))
        }
        Command::Mlrank => {
            let t = input_state(g)?;
            let m = mlrank_tol(&t, g.tol)?;
            Ok((json!({ "mlrank": m }), format!("multilinear rank {m:?}")))
        }
        Command::Rank => {
            let t = input_state(g)?;
            let r = estimate_rank(&t, &rank_options(g))?;
            let summary = format!(
                "rank: lower {} ({:?}), upper {}{}, border {}{}, exceptional {}",
                r.lower_bound.value,
                r.lower_bound.certificate,
                r.upper_bound.value,
                if r.upper_bound.certified { "" } else { " (uncertified)" },
                r.border_estimate.value,
                if r.border_estimate.certified { "" } else { " (uncertified)" },
                r.exceptional
            );
            let body = json!({
                "system": spec_json(t.spec()),
                "lower": r.lower_bound.value,
                "upper": r.upper_bound.value,
                "border": r.border_estimate.value,
                "exceptional": r.exceptional,
                "report": r,
            });
            Ok((body, summary))
        }
        Command::BorderRank { r: Some(r) } => {
            let t = input_state(g)?;
            let opts = FitOptions { restarts: g.restarts, max_iters: g.max_iters, seed: g.seed, coeff_bound: None };
            let fit = best_rank_r(&t, *r, &opts)?;
            let summary = format!(
                "best {r}-term fit: residual {:.3e}, largest term norm {:.3e}",
                fit.residual, fit.max_term_norm
            );
            Ok((json!({ "system": spec_json(t.spec()), "fit": fit }), summary))
        }
        Command::BorderRank { r: None } => {
            let t = input_state(g)?;
            let r = estimate_rank(&t, &rank_options(g))?;
            let b = &r.border_estimate;
            let summary = format!(
                "border rank {}{} (residual {:.3e}, largest term norm {:.3e})",
                b.value,
                if b.certified { "" } else { " (uncertified)" },
                b.residual,
                b.max_term_norm
            );
            Ok((json!({ "system": spec_json(t.spec()), "border": b.value, "estimate": b }), summary))
        }
        Command::SecantDim { r } => {
            let spec = system(g)?;
            let rep = secant_dim_tol(&spec, *r, g.seed, g.tol);
            let summary = format!("dim sigma_{r}: measured {}, expected {}, defect {}", rep.measured, rep.expected, rep.defect);
            let mut v = to_value(&rep);
            v["system"] = spec_json(&spec);
            Ok((v, summary))
        }
        Command::Expected { r } => {
            let spec = system(g)?;
            let p = expected_secant_dim(&spec, *r);
            let generic = expected_generic_rank(&spec);
            let summary = format!("expected dim sigma_{r} = {}, expected generic rank {generic}", p.expected_dim);
            let mut v = to_value(&p);
            v["expected_generic_rank"] = json!(generic);
            v["system"] = spec_json(&spec);
            Ok((v, summary))
        }
        Command::Waring { exponents, monomials } => waring(exponents.as_deref(), monomials.as_deref()),
        Command::Spherical => {
            let spec = system(g)?;
            let s = is_spherical(&spec);
            Ok((json!({ "system": spec_json(&spec), "spherical": s }), format!("spherical: {s}")))
        }
        Command::Degenerate { family } => degenerate(g, *family),
        Command::Catalog { family, emit_dir } => catalog(*family, emit_dir.as_deref()),
    }
}

fn waring(exponents: Option<&[usize]>, monomials: Option<&str>) -> Outcome {
    match (exponents, monomials) {
        (Some(e), None) => {
            let m = Monomial::new(e.to_vec())?;
            let rank = monomial_rank(&m)?;
            Ok((json!({ "exponents": e, "degree": m.degree(), "rank": rank }), format!("Waring rank {rank}")))
        }
        (None, Some(text)) => {
            let ms = text
                .split(';')
                .map(|part| {
                    let e = part
                        .split(',')
                        .map(|x| x.trim().parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| usage(format!("--monomials: '{part}' is not a list of exponents")))?;
                    Monomial::new(e).map_err(Failure::from)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let rank = coprime_sum_rank(&ms)?;
            let lists: Vec<&Vec<usize>> = ms.iter().map(|m| &m.exponents).collect();
            Ok((json!({ "monomials": lists, "rank": rank }), format!("Waring rank of the sum {rank}")))
        }
        _ => Err(usage("waring needs --exponents or --monomials")),
    }
}

fn degenerate(g: &Global, family: CurveChoice) -> Outcome {
    let family = match family {
        CurveChoice::Qubit3 => CurveFamily::Qubit3,
        CurveChoice::Fermion36 => CurveFamily::Fermion36,
        CurveChoice::Boson => CurveFamily::Boson {
            n: g.n.ok_or_else(|| usage("--n is required for the boson curve"))?,
            l: g.l.ok_or_else(|| usage("--L is required for the boson curve"))?,
        },
    };
    let curve = make_curve(family)?;
    let report = curve.verify_limit(&default_ladder())?;
    let last = report.rows.last().map(|r| r.distance).unwrap_or(f64::NAN);
    let summary = format!("final distance {last:.3e}, fitted order {:.2}", report.fitted_order);
    let body = json!({
        "curve": family,
        "system": spec_json(&curve.spec),
        "start": format_ket(curve.start.rep()),
        "target": format_ket(curve.target.rep()),
        "ladder": report.rows,
        "fitted_order": report.fitted_order,
    });
    Ok((body, summary))
}

fn catalog(family: Option<Family>, emit_dir: Option<&Path>) -> Outcome {
    let entries = exceptional_catalog(family);
    let mut docs = Vec::with_capacity(entries.len());
    for e in &entries {
        let mut v = to_value(e);
        v["entries"] = to_value(&TensorDocument::from_tensor(&e.tensor()).entries);
        docs.push(v);
    }
    if let Some(dir) = emit_dir {
        fs::create_dir_all(dir).map_err(|err| usage(format!("--emit-dir {}: {err}", dir.display())))?;
        for (e, v) in entries.iter().zip(&docs) {
            let mut doc = v.clone();
            doc["schema"] = json!(SCHEMA);
            let path = dir.join(format!("{}.json", e.id));
            let text = serde_json::to_string_pretty(&doc).expect("JSON output");
            fs::write(&path, text + "\n").map_err(|err| usage(format!("--emit-dir {}: {err}", path.display())))?;
        }
    }
    let summary = format!("{} catalog entries", docs.len());
    Ok((json!({ "entries": docs }), summary))
}
