use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use qhlab::checkers::{cone_constant, cqh_fit, DEFAULT_CONE_BUDGET};
use qhlab::constants::{compare_to_measurement, compute_constants, ConstantInputs};
use qhlab::domain::Domain;
use qhlab::error::QhError;
use qhlab::experiments::{run_heinonen, PairSpec, Scenario};
use qhlab::geodesic::{
    check_decomposition_lemmas, construct_neargeodesic_with, default_tolerance, dyadic_decompose,
    DyadicDecomposition, NeargeodesicOptions, DEFAULT_PAIR_BUDGET,
};
use qhlab::mapping::Mapping;
use qhlab::metrics::{inner_length_distance, qh_distance, Estimator, DEFAULT_LEVEL};
use qhlab::norm::{Arc, Point};
use qhlab::plot::render_svg;
use qhlab::report::{Margin, Report};

const EXIT_INPUT: u8 = 2;
const EXIT_UNREACHABLE: u8 = 3;
const EXIT_VIOLATION: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "qhlab", version, about = "Quasihyperbolic geometry laboratory")]
struct Cli {
    /// Graph resolution level.
    #[arg(long, global = true)]
    level: Option<u32>,
    /// Seed for sampled pairs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sample budget; its meaning depends on the subcommand.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Output file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Quasihyperbolic distance (or inner length) between two points.
    Dist {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        /// Inner length metric instead of the quasihyperbolic one.
        #[arg(long)]
        inner: bool,
    },
    /// Build and certify a c0-neargeodesic.
    Geodesic {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long, default_value_t = 1.2)]
        c0: f64,
    },
    /// Cone constant of an arc, optionally checked against a bound.
    ConeCheck {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        arc: PathBuf,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Dyadic decomposition of an arc, with block checks when constants are given.
    Decompose {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        arc: PathBuf,
        /// Root-finding tolerance; 1e-6 of the arc length by default.
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        constants: ConstantArgs,
    },
    /// Constant chain for the given inputs.
    Constants {
        #[command(flatten)]
        constants: ConstantArgs,
        /// Compare a measured cone constant against b.
        #[arg(long)]
        measured: Option<f64>,
    },
    /// Fit the coarse quasihyperbolic constant M of a map at fixed C.
    CqhFit {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Mapping as a JSON file or inline JSON object.
        #[arg(long)]
        map: String,
        #[arg(long = "C", default_value_t = 0.0)]
        c: f64,
        #[arg(long, default_value_t = 0.05)]
        min_clearance: f64,
    },
    /// Neargeodesic cone-arc experiment over a scenario.
    Theorem1 { scenario: PathBuf },
    /// Comb experiment: John and inner uniformity estimates per depth.
    Heinonen {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        depths: Vec<u32>,
        /// Heights per gap on each side of the comb.
        #[arg(long, default_value_t = 2)]
        pairs: usize,
    },
    /// SVG of a planar domain with arcs and decompositions.
    Plot {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        arc: Vec<PathBuf>,
        #[arg(long)]
        decomposition: Vec<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ConstantArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long = "c-prime")]
    c_prime: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long = "M", default_value_t = 1.0)]
    m: f64,
    #[arg(long = "C", default_value_t = 0.0)]
    c: f64,
}

impl ConstantArgs {
    fn inputs(&self) -> Option<ConstantInputs> {
        Some(ConstantInputs::new(self.a?, self.c_prime?, self.c0?, self.m, self.c))
    }
}

/// Failure carrying its exit code and a JSON error object.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<QhError> for Failure {
    fn from(e: QhError) -> Self {
        let code = match e {
            QhError::Unreachable { .. } => EXIT_UNREACHABLE,
            _ => EXIT_INPUT,
        };
        Failure { code, kind: e.kind().into(), message: e.to_string() }
    }
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, kind: "input".into(), message: msg.into() }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn load_domain(path: &Path) -> CliResult<Domain> {
    Ok(serde_json::from_str(&read(path)?).map_err(QhError::from)?)
}

fn load_arc(path: &Path) -> CliResult<Arc> {
    Ok(serde_json::from_str(&read(path)?).map_err(QhError::from)?)
}

/// A decomposition file, or the output of `decompose` that wraps one.
fn load_decomposition(path: &Path) -> CliResult<DyadicDecomposition> {
    let v: serde_json::Value = serde_json::from_str(&read(path)?).map_err(QhError::from)?;
    let inner = v.get("decomposition").cloned().unwrap_or(v);
    Ok(serde_json::from_value(inner).map_err(QhError::from)?)
}

fn parse_point(s: &str, dom: &Domain) -> CliResult<Point> {
    let coords: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let coords = coords.map_err(|_| Failure::input(format!("cannot parse point '{s}'")))?;
    dom.norm().check_dim(&coords)?;
    if !dom.contains(&coords) {
        return Err(QhError::input(format!("point {coords:?} is not in the domain")).into());
    }
    Ok(Point::from(coords))
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult {
    match out {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string(v).map_err(QhError::from)?)
}

fn emit_report(cli: &Cli, r: &Report) -> CliResult {
    match cli.format {
        Some(Format::Csv) => emit(&cli.out, &r.to_csv()),
        _ => emit(&cli.out, &to_json(r)?),
    }
}

fn json_only(cli: &Cli, what: &str) -> CliResult {
    if cli.format == Some(Format::Csv) {
        return Err(Failure::input(format!("{what} has no CSV form")));
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    let level = cli.level.unwrap_or(DEFAULT_LEVEL);
    match &cli.cmd {
        Command::Dist { domain, x, y, inner } => {
            json_only(cli, "dist")?;
            let dom = load_domain(domain)?;
            let (x, y) = (parse_point(x, &dom)?, parse_point(y, &dom)?);
            let est = if *inner {
                inner_length_distance(&dom, &x, &y, level)?
            } else {
                qh_distance(&dom, &x, &y, level)?
            };
            emit(&cli.out, &to_json(&est)?)
        }
        Command::Geodesic { domain, x, y, c0 } => {
            json_only(cli, "geodesic")?;
            let dom = load_domain(domain)?;
            let (x, y) = (parse_point(x, &dom)?, parse_point(y, &dom)?);
            let opts = NeargeodesicOptions {
                pair_budget: cli.budget.unwrap_or(DEFAULT_PAIR_BUDGET),
                ..Default::default()
            };
            let est = Estimator::new(&dom, &[x.clone(), y.clone()], level)?;
            let cert = construct_neargeodesic_with(&est, &x, &y, *c0, &opts)?;
            emit(&cli.out, &to_json(&cert)?)
        }
        Command::ConeCheck { domain, arc, c } => {
            let dom = load_domain(domain)?;
            let arc = load_arc(arc)?;
            let cone = cone_constant(&dom, &arc, cli.budget.unwrap_or(DEFAULT_CONE_BUDGET))?;
            match c {
                Some(c) => {
                    let mut r = Report::new("cone_check")
                        .param("c", c)
                        .param("witness", &cone.witness)
                        .param("witness_param", cone.witness_param);
                    r.push(Margin::le("cone_constant <= c", cone.cone_constant, *c, 0.0));
                    emit_report(cli, &r)
                }
                None => {
                    json_only(cli, "cone-check without --c")?;
                    emit(&cli.out, &to_json(&cone)?)
                }
            }
        }
        Command::Decompose { domain, arc, tol, constants } => {
            let dom = load_domain(domain)?;
            let arc = load_arc(arc)?;
            let dec = dyadic_decompose(&dom, &arc, tol.unwrap_or_else(|| default_tolerance(&arc)))?;
            let Some(inputs) = constants.inputs() else {
                json_only(cli, "decompose without constants")?;
                return emit(&cli.out, &to_json(&dec)?);
            };
            let cs = compute_constants(inputs)?;
            let report = check_decomposition_lemmas(&dom, &dec, &cs, cli.budget.unwrap_or(32));
            match cli.format {
                Some(Format::Csv) => emit(&cli.out, &report.to_csv()),
                _ => emit(&cli.out, &to_json(&json!({ "decomposition": dec, "report": report }))?),
            }
        }
        Command::Constants { constants, measured } => {
            let inputs = constants
                .inputs()
                .ok_or_else(|| Failure::input("constants need --a, --c-prime and --c0"))?;
            let cs = compute_constants(inputs)?;
            match measured {
                Some(m) => {
                    let r = compare_to_measurement(&cs, *m);
                    match cli.format {
                        Some(Format::Csv) => emit(&cli.out, &r.to_csv()),
                        _ => emit(&cli.out, &to_json(&json!({ "constants": cs, "report": r }))?),
                    }
                }
                None => {
                    json_only(cli, "constants without --measured")?;
                    emit(&cli.out, &to_json(&cs)?)
                }
            }
        }
        Command::CqhFit { domain, target, map, c, min_clearance } => {
            json_only(cli, "cqh-fit")?;
            let dom = load_domain(domain)?;
            let tgt = load_domain(target)?;
            let map_text = if map.trim_start().starts_with('{') { map.clone() } else { read(Path::new(map))? };
            let mapping: Mapping = serde_json::from_str(&map_text).map_err(QhError::from)?;
            let spec = PairSpec {
                budget: cli.budget.unwrap_or(100),
                min_clearance: *min_clearance,
                seed: cli.seed.unwrap_or(0),
                points: vec![],
            };
            let pairs = qhlab::experiments::make_pairs(&dom, &spec)?;
            let fit = cqh_fit(&dom, &tgt, &mapping, &pairs, *c, level)?;
            emit(&cli.out, &to_json(&fit)?)
        }
        Command::Theorem1 { scenario } => {
            let mut sc = Scenario::from_json(&read(scenario)?)?;
            if let Some(l) = cli.level {
                sc.level = l;
            }
            if let Some(s) = cli.seed {
                sc.pairs.seed = s;
            }
            if let Some(b) = cli.budget {
                sc.pairs.budget = b;
            }
            let res = qhlab::experiments::run_theorem1(&sc)?;
            let csv = res.to_csv();
            match (&cli.out, cli.format) {
                (None, Some(Format::Csv)) => emit(&None, &csv)?,
                (None, _) => emit(&None, &to_json(&res.summary)?)?,
                (Some(_), _) => {
                    emit(&cli.out, &csv)?;
                    emit(&None, &to_json(&res.summary)?)?;
                }
            }
            let s = &res.summary;
            if s.pairs > 0 && s.completed == 0 {
                let first = res.rows.iter().find_map(|r| r.error.clone()).unwrap_or_default();
                return Err(Failure {
                    code: EXIT_INPUT,
                    kind: "all_pairs_failed".into(),
                    message: format!("every pair failed; first error: {first}"),
                });
            }
            if res.rows.iter().any(|r| r.within_b == Some(false)) {
                return Err(Failure {
                    code: EXIT_VIOLATION,
                    kind: "bound_violated".into(),
                    message: "a measured cone constant exceeds b".into(),
                });
            }
            Ok(())
        }
        Command::Heinonen { depths, pairs } => {
            if let Some(&bad) = depths.iter().find(|&&d| d == 0) {
                return Err(Failure::input(format!("comb depths start at 1, got {bad}")));
            }
            let res = run_heinonen(depths, *pairs, level)?;
            match (&cli.out, cli.format) {
                (None, Some(Format::Json)) => emit(&None, &to_json(&res)?),
                (None, _) => emit(&None, &res.to_csv()),
                (Some(_), _) => {
                    emit(&cli.out, &res.to_csv())?;
                    emit(&None, &to_json(&res)?)
                }
            }
        }
        Command::Plot { domain, arc, decomposition } => {
            let dom = load_domain(domain)?;
            let arcs = arc.iter().map(|p| load_arc(p)).collect::<CliResult<Vec<_>>>()?;
            let decs = decomposition.iter().map(|p| load_decomposition(p)).collect::<CliResult<Vec<_>>>()?;
            emit(&cli.out, &render_svg(&dom, &arcs, &decs)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // help and version requests
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!("{}", json!({ "error": "usage", "message": msg.trim(), "exit_code": EXIT_INPUT }));
            return ExitCode::from(EXIT_INPUT);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message, "exit_code": f.code }));
            ExitCode::from(f.code)
        }
    }
}
