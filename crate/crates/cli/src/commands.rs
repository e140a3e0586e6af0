use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::{json, Value};

use permnet::demo::{run_shift_demo, shift_bars, ShiftBarsConfig};
use permnet::equivariant::{
    commutant_space_dimension, count_components, enumerate_components, factorize_equivariant, frequency_order,
    project_commutant, RankVector,
};
use permnet::invariant::{fit_invariant, invariant_autoencoder, invariant_space, project_invariant};
use permnet::io::{read_matrix, to_csv, write_matrix};
use permnet::linalg::numeric_rank;
use permnet::optimize::{fit_equivariant, fit_rank_bounded, EquivariantOptions, FitOptions, Heuristic};
use permnet::oracle::{
    equivariant_oracle, nullspace_commutant_dim, recursive_component_count, ALS_MAX_DIM, NULLSPACE_MAX_N,
};
use permnet::spectral::{commutant_dimension, eigen_multiplicities, Field};
use permnet::{Matrix, Permutation};

use crate::perm_args::PermArgs;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations; reported like a clap error, exit 2.
    Usage(String),
    Core(permnet::Error),
}

impl From<permnet::Error> for CliError {
    fn from(e: permnet::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum FieldArg {
    Real,
    Complex,
}

impl From<FieldArg> for Field {
    fn from(f: FieldArg) -> Field {
        match f {
            FieldArg::Real => Field::Real,
            FieldArg::Complex => Field::Complex,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpaceMode {
    Invariant,
    Equivariant,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitMode {
    Invariant,
    Equivariant,
    Unconstrained,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum HeuristicArg {
    Energy,
}

#[derive(Subcommand)]
pub enum Command {
    /// Cycle structure, eigenvalue multiplicities, commutant dimension and block layout.
    Analyze {
        #[command(flatten)]
        perm: PermArgs,
    },
    /// Number of irreducible components of the rank-bounded equivariant variety.
    Count {
        #[command(flatten)]
        perm: PermArgs,
        #[arg(long)]
        rank: usize,
        #[arg(long, value_enum, default_value = "real")]
        field: FieldArg,
    },
    /// Lists the components with their dimensions and block shapes.
    Components {
        #[command(flatten)]
        perm: PermArgs,
        #[arg(long)]
        rank: usize,
        #[arg(long, value_enum, default_value = "real")]
        field: FieldArg,
        /// Print only the count.
        #[arg(long)]
        count_only: bool,
        /// Refuse to list more components than this.
        #[arg(long, default_value_t = 10_000)]
        limit: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Orthogonal projection of a matrix onto the invariant or equivariant space.
    Project {
        #[arg(long, value_enum)]
        mode: SpaceMode,
        #[command(flatten)]
        perm: PermArgs,
        /// Matrix file (CSV, or JSON by extension).
        #[arg(long = "matrix", short = 'm', value_name = "PATH")]
        matrix: PathBuf,
        /// Output matrix file; CSV on stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimizes ‖MX − Y‖²_F over rank-bounded invariant, equivariant or unconstrained maps.
    Fit(FitArgs),
    /// Two-layer factorization of an invariant or equivariant matrix.
    Factorize {
        #[arg(long, value_enum)]
        mode: SpaceMode,
        #[command(flatten)]
        perm: PermArgs,
        #[arg(long = "matrix", short = 'm', value_name = "PATH")]
        matrix: PathBuf,
        /// Bottleneck width for invariant factorizations; defaults to the matrix rank.
        #[arg(long)]
        rank: Option<usize>,
        /// Relative tolerance for rank and membership decisions.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Cross-checks closed forms against brute-force oracles; exit 1 on any mismatch.
    Verify {
        #[command(flatten)]
        perm: PermArgs,
        /// Rank bound for the count and fit checks; defaults to min(n, 3).
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random starts per component in the fit oracle.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Autoencoder comparison on shifted-bars images.
    DemoShift(DemoArgs),
}

#[derive(Args)]
pub struct OutArg {
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    mode: FitMode,
    #[command(flatten)]
    perm: PermArgs,
    /// Inputs, one sample per column.
    #[arg(long)]
    x: PathBuf,
    /// Targets, one sample per column.
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    rank: usize,
    /// Fix the component: per-block ranks such as `2,0,1`.
    #[arg(long, value_name = "RANKS")]
    component: Option<String>,
    /// Read `--component` in low-to-high frequency order instead of block order.
    #[arg(long, requires = "component")]
    frequency_order: bool,
    /// Refuse exhaustive search over more components than this.
    #[arg(long, default_value_t = 1_000_000)]
    search_limit: u64,
    /// Pick the component heuristically instead of searching.
    #[arg(long, value_enum, conflicts_with = "component")]
    heuristic: Option<HeuristicArg>,
    /// Ridge term λ added to XXᵀ.
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tie_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    rank_tol: f64,
    /// Write the minimizer to this matrix file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 32)]
    height: usize,
    #[arg(long, default_value_t = 32)]
    width: usize,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Total rank budget.
    #[arg(long, default_value_t = 64)]
    rank: usize,
    /// Per-block rank of the equal-split architecture.
    #[arg(long = "equal", default_value_t = 2)]
    equal: usize,
    /// Lowest-frequency blocks dropped by the high-pass architecture.
    #[arg(long = "skip", default_value_t = 8)]
    skip: usize,
    /// Write the generated data matrix here.
    #[arg(long, value_name = "PATH")]
    data_out: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

fn emit(value: &impl Serialize, out: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| permnet::Error::Io(format!("{}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(permnet::Error::from(e).into()),
                _ => {}
            }
        }
    }
    Ok(())
}

pub fn run(cmd: Command) -> CliResult<ExitCode> {
    match cmd {
        Command::Analyze { perm } => emit(&analyze(&perm.generators()?)?, None)?,
        Command::Count { perm, rank, field } => {
            let p = perm.single()?;
            let spec = eigen_multiplicities(&p.cycles());
            println!("{}", count_components(&spec, rank, field.into()));
        }
        Command::Components {
            perm,
            rank,
            field,
            count_only,
            limit,
            out,
        } => {
            let p = perm.single()?;
            let spec = eigen_multiplicities(&p.cycles());
            let field = Field::from(field);
            let count = count_components(&spec, rank, field).to_string();
            let report = if count_only {
                json!({ "count": count })
            } else {
                let list: Vec<_> = enumerate_components(&spec, rank, field, limit)?.collect();
                json!({ "count": count, "components": list })
            };
            emit(&report, out.out.as_deref())?;
        }
        Command::Project {
            mode,
            perm,
            matrix,
            out,
        } => {
            let gens = perm.generators()?;
            let m = read_matrix(&matrix)?;
            let projected = match mode {
                SpaceMode::Equivariant => project_commutant(&m, &gens)?,
                SpaceMode::Invariant => {
                    let space = invariant_space(&gens, m.rows(), m.cols(), 1)?;
                    project_invariant(&m, &space.partition)?
                }
            };
            write_or_print(&projected, out.as_deref())?;
        }
        Command::Fit(args) => fit(args)?,
        Command::Factorize {
            mode,
            perm,
            matrix,
            rank,
            tol,
            out,
        } => {
            let gens = perm.generators()?;
            let m = read_matrix(&matrix)?;
            emit(&factorize(mode, &gens, &m, rank, tol)?, out.out.as_deref())?;
        }
        Command::Verify {
            perm,
            rank,
            seed,
            samples,
            out,
        } => {
            let gens = perm.generators()?;
            let report = verify(&gens, rank, seed, samples)?;
            let passed = report["all_passed"].as_bool().unwrap_or(false);
            emit(&report, out.out.as_deref())?;
            if !passed {
                eprintln!(
                    "{}",
                    json!({ "error": "verification_failed", "message": "an oracle disagreed with a closed form" })
                );
                return Ok(ExitCode::from(1));
            }
        }
        Command::DemoShift(args) => demo(args)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn write_or_print(m: &Matrix, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => write_matrix(path, m)?,
        None => print!("{}", to_csv(m)),
    }
    Ok(())
}

fn analyze(gens: &[Permutation]) -> CliResult<Value> {
    let n = gens[0].n();
    let orbit_dim = commutant_space_dimension(gens)?;
    let partition = invariant_space(gens, 1, n, 1)?.partition;
    let generators: Vec<Value> = gens
        .iter()
        .map(|g| {
            let c = g.cycles();
            json!({
                "one_line": g.one_based(),
                "cycles": c.one_based(),
                "cycle_type": c.lengths(),
                "order": g.order(),
            })
        })
        .collect();
    let mut report = json!({
        "n": n,
        "generators": generators,
        "commutant_dimension": orbit_dim,
        "invariant_blocks": partition.k(),
        "invariant_partition": partition,
    });
    if let [p] = gens {
        let c = p.cycles();
        let spec = eigen_multiplicities(&c);
        let formula = commutant_dimension(&c);
        if formula as usize != orbit_dim {
            return Err(permnet::Error::Numerical(format!(
                "commutant dimension mismatch: formula {formula}, orbit count {orbit_dim}"
            ))
            .into());
        }
        let d_table: Vec<Value> = spec
            .multiplicities
            .iter()
            .map(|(l, d)| json!({ "l": l, "d": d }))
            .collect();
        report["multiplicities"] = json!(d_table);
        report["complex_blocks"] = json!(spec.complex_blocks);
        report["real_blocks"] = json!(spec.real_blocks);
        report["frequency_order"] = json!(frequency_order(&spec));
    }
    Ok(report)
}

fn fit(a: FitArgs) -> CliResult<()> {
    let x = read_matrix(&a.x)?;
    let y = read_matrix(&a.y)?;
    let opts = FitOptions {
        ridge: a.ridge,
        rank_tol: a.rank_tol,
        tie_tol: a.tie_tol,
    };
    if a.mode != FitMode::Equivariant && (a.component.is_some() || a.heuristic.is_some()) {
        return Err(CliError::Usage("--component and --heuristic apply to --mode equivariant only".into()));
    }
    let result = match a.mode {
        FitMode::Unconstrained => fit_rank_bounded(&x, &y, a.rank, &opts)?,
        FitMode::Invariant => {
            let gens = a.perm.generators()?;
            let space = invariant_space(&gens, y.rows(), x.rows(), a.rank)?;
            fit_invariant(&x, &y, &space, &opts)?
        }
        FitMode::Equivariant => {
            let p = a.perm.single()?;
            let spec = eigen_multiplicities(&p.cycles());
            let component = match &a.component {
                None => None,
                Some(text) if a.frequency_order => {
                    let probe = RankVector::parse(text, &spec, Field::Real);
                    let ranks = match probe {
                        Ok(rv) => rv.ranks(),
                        Err(_) => parse_ranks(text)?,
                    };
                    Some(RankVector::from_frequency_order(&spec, &ranks)?)
                }
                Some(text) => Some(RankVector::parse(text, &spec, Field::Real)?),
            };
            let eopts = EquivariantOptions {
                fit: opts,
                search_limit: a.search_limit,
                heuristic: a.heuristic.map(|HeuristicArg::Energy| Heuristic::Energy),
            };
            fit_equivariant(&x, &y, &p, a.rank, component.as_ref(), &eopts)?
        }
    };
    if let Some(path) = &a.out {
        write_matrix(path, &result.minimizer)?;
    }
    emit(&result, None)
}

fn parse_ranks(text: &str) -> CliResult<Vec<usize>> {
    text.trim()
        .trim_start_matches('(')
        .trim_end_matches(')')
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| CliError::Usage(format!("bad rank `{t}` in --component")))
        })
        .collect()
}

fn factorize(mode: SpaceMode, gens: &[Permutation], m: &Matrix, rank: Option<usize>, tol: f64) -> CliResult<Value> {
    match mode {
        SpaceMode::Invariant => {
            let r = match rank {
                Some(r) => r,
                None => numeric_rank(m, tol)?,
            };
            let space = invariant_space(gens, m.rows(), m.cols(), r)?;
            let f = invariant_autoencoder(&space, m, tol)?;
            let residual = f.decoder.matmul(&f.encoder).max_abs_diff(m);
            Ok(json!({
                "mode": "invariant",
                "partition": space.partition,
                "bottleneck": space.effective_rank,
                "decoder": f.decoder,
                "encoder": f.encoder,
                "residual": residual,
            }))
        }
        SpaceMode::Equivariant => {
            let [p] = gens else {
                return Err(CliError::Usage("equivariant factorization takes one permutation".into()));
            };
            let f = factorize_equivariant(m, p, tol)?;
            let residual = f.product().max_abs_diff(m);
            Ok(json!({
                "mode": "equivariant",
                "rank_vector": f.rank_vector,
                "parameter_count": f.parameter_count,
                "decoder": f.decoder,
                "encoder": f.encoder,
                "decoder_q": f.decoder_q,
                "encoder_q": f.encoder_q,
                "weight_sharing": f.pattern,
                "residual": residual,
            }))
        }
    }
}

#[derive(Serialize)]
struct Check {
    name: String,
    status: &'static str,
    detail: String,
}

impl Check {
    fn new(name: &str, ok: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            status: if ok { "pass" } else { "fail" },
            detail,
        }
    }

    fn skipped(name: &str, detail: String) -> Self {
        Check {
            name: name.into(),
            status: "skipped",
            detail,
        }
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn verify(gens: &[Permutation], rank: Option<usize>, seed: u64, samples: usize) -> CliResult<Value> {
    let n = gens[0].n();
    let mut checks = Vec::new();
    let orbit = commutant_space_dimension(gens)?;
    if n <= NULLSPACE_MAX_N {
        let null = nullspace_commutant_dim(gens)?;
        checks.push(Check::new(
            "commutant_nullspace",
            null == orbit,
            format!("orbit count {orbit}, nullspace {null}"),
        ));
    } else {
        checks.push(Check::skipped("commutant_nullspace", format!("n = {n} exceeds {NULLSPACE_MAX_N}")));
    }
    if let [p] = gens {
        let c = p.cycles();
        let formula = commutant_dimension(&c) as usize;
        checks.push(Check::new(
            "commutant_formula",
            formula == orbit,
            format!("formula {formula}, orbit count {orbit}"),
        ));
        let spec = eigen_multiplicities(&c);
        let r = rank.unwrap_or(n.min(3));
        for field in [Field::Real, Field::Complex] {
            let name = format!("component_count_{}", if field == Field::Real { "real" } else { "complex" });
            let dp = count_components(&spec, r, field);
            match recursive_component_count(&spec, r, field) {
                Ok(rec) => checks.push(Check::new(&name, dp == rec, format!("closed form {dp}, recursion {rec}"))),
                Err(e) => checks.push(Check::skipped(&name, e.to_string())),
            }
        }
        if n <= ALS_MAX_DIM && r <= n {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = gaussian(n, 2 * n + 2, &mut rng);
            let y = gaussian(n, 2 * n + 2, &mut rng);
            let fit = fit_equivariant(&x, &y, p, r, None, &EquivariantOptions::default())?;
            let (orv, oracle) = equivariant_oracle(&x, &y, p, r, samples, 4, seed)?;
            let ok = fit.loss <= oracle + 1e-6 * (1.0 + oracle);
            checks.push(Check::new(
                "equivariant_fit",
                ok,
                format!("closed form {:.12e}, oracle {:.12e} on {}", fit.loss, oracle, orv),
            ));
        } else {
            checks.push(Check::skipped("equivariant_fit", format!("n = {n} exceeds {ALS_MAX_DIM}")));
        }
    }
    let all_passed = checks.iter().all(|c| c.status != "fail");
    Ok(json!({ "n": n, "checks": checks, "all_passed": all_passed }))
}

fn demo(a: DemoArgs) -> CliResult<()> {
    let cfg = ShiftBarsConfig {
        height: a.height,
        width: a.width,
        samples: a.samples,
        seed: a.seed,
        noise: a.noise,
    };
    if let Some(path) = &a.data_out {
        write_matrix(path, &shift_bars(&cfg)?)?;
    }
    let report = run_shift_demo(&cfg, a.rank, a.equal, a.skip)?;
    emit(&report, a.out.out.as_deref())
}
