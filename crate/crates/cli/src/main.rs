use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hyperfaith::hypergraph::HypergraphJson;
use hyperfaith::inference::SearchConfig;
use hyperfaith::io::{gamma_csv, read_table, ParsedTable};
use hyperfaith::table::{default_labels, sample_counts};
use hyperfaith::volumes::{self, AssociationMeasure, McConfig, VolumeEstimate};
use hyperfaith::{
    backward_select, faithful_hypergraph, interaction_vector, ipf_fit, lambda_star, strong_faithfulness_check,
    FitConfig, Hypergraph,
};

const TABLE_FORMATS: &str = "\
Tables are CSV in one of two layouts:
  1. a header naming the variables plus one value column (count, prob, p or
     weight), then one row per cell with levels 0/1, in any order; missing
     cells are 0:
         A,B,count
         0,0,12
         1,1,30
  2. 2^K bare numbers, comma- or newline-separated, in lexicographic cell
     order with the last variable fastest (00, 01, 10, 11 for K = 2);
     variables are named A, B, C, ...
Lines starting with # are ignored.

Hypergraphs are either a comma-separated list of hyperedges such as ABC,ABD
(vertices separated by : when names are longer than one character), or a
path to a JSON file {\"vertices\": [\"A\", ...], \"hyperedges\": [[\"A\",\"B\"], ...]}.

Numbers are printed in the shortest form that parses back to the same f64.";

#[derive(Parser)]
#[command(name = "hyperfaith", version, about = "Faithfulness analysis for hierarchical log-linear models on binary tables")]
#[command(after_help = TABLE_FORMATS)]
struct Cli {
    /// Write output to this file instead of stdout
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    /// Worker threads for Monte Carlo (default: all cores; results do not depend on it)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interaction parameters of a table, as CSV `subset,gamma` (empty subset = constant)
    Gamma {
        table: PathBuf,
    },
    /// The hypergraph of maximal nonzero interactions, as JSON
    Faithful {
        table: PathBuf,
        /// Interactions with |gamma| at or below this count as zero
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Fit a hierarchical model by IPF; JSON with fitted cell probabilities
    Fit {
        table: PathBuf,
        #[arg(long)]
        hypergraph: String,
        /// Convergence threshold on the largest hyperedge-marginal gap
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
    },
    /// Backward selection from the saturated model; JSON lines, one per test
    ///
    /// Each line holds step, model, tested, gamma_hat, std_error, statistic,
    /// p_value and action (keep, remove or defer). The last line is
    /// {"final": <hypergraph>, "lambda_star": ..., ...}.
    Search(SearchArgs),
    /// Detection threshold z_{1-alpha/2} N^{-(1/2-epsilon)} min_t 2^{(h_t+1)/2}
    LambdaStar {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        /// Interaction orders h_t (hyperedge size minus one), comma-separated
        #[arg(long, value_delimiter = ',', required = true)]
        orders: Vec<usize>,
    },
    /// Proportions of distributions that are not lambda-strong-faithful
    ///
    /// Output is CSV with columns lambda,estimate,std_error,n_samples,method.
    /// Every lambda in a grid reuses the same samples.
    Volume {
        #[command(subcommand)]
        kind: VolumeKind,
    },
}

#[derive(Args)]
struct SearchArgs {
    table: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Treat the table as a distribution and draw this many multinomial counts from it
    #[arg(long)]
    sample: Option<u64>,
    /// Seed for --sample
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add 0.5 to every cell before estimating
    #[arg(long)]
    smoothing: bool,
    /// Also test and remove single-variable hyperedges
    #[arg(long)]
    all_terms: bool,
    /// Exponent in the reported lambda_star for the final model
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    /// Also report whether the final fit is lambda-strong-faithful
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Clone)]
struct McArgs {
    /// Lambda values, comma-separated
    #[arg(long, value_delimiter = ',', required = true)]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Phi1,
    Phi2,
    Phi3,
}

#[derive(Subcommand)]
enum VolumeKind {
    /// nu_h for one hyperedge of order h (closed form for h = 1 unless --monte-carlo)
    Nu {
        #[arg(long)]
        order: usize,
        #[arg(long)]
        monte_carlo: bool,
        #[command(flatten)]
        mc: McArgs,
    },
    /// 1 - prod_t (1 - nu_{h_t}) for a decomposable hypergraph or a list of orders
    Decomposable {
        #[arg(long, conflicts_with = "orders", required_unless_present = "orders")]
        hypergraph: Option<String>,
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<usize>>,
        /// Number of variables (default: inferred from the hyperedges)
        #[arg(long)]
        vars: Option<usize>,
        /// Sample the conditional-probability parameterization directly instead of the product formula
        #[arg(long, requires = "hypergraph")]
        monte_carlo: bool,
        #[command(flatten)]
        mc: McArgs,
    },
    /// 2x2 table under an association measure (phi1, phi2 on the simplex; phi3 on the cube)
    TwoByTwo {
        #[arg(long, value_enum)]
        measure: Measure,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Flat simplex on 2^K cells, projected onto the hypergraph by IPF
    ///
    /// Samples whose projection does not converge are left out and counted
    /// on stderr.
    Projected {
        #[arg(long)]
        hypergraph: String,
        #[arg(long)]
        vars: Option<usize>,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Lower bound max_t nu_1(lambda / 2^{h_t-1})^{2^{h_t-1}}
    Bound {
        #[arg(long, value_delimiter = ',', required = true)]
        orders: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
    },
}

fn load_table(path: &Path) -> Result<ParsedTable> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_table(file).with_context(|| format!("{}", path.display()))
}

fn parse_hypergraph(spec: &str, labels: Option<&[String]>, vars: Option<usize>) -> Result<Hypergraph> {
    let path = Path::new(spec);
    if spec.ends_with(".json") || path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {spec}"))?;
        let json: HypergraphJson = serde_json::from_str(&text).with_context(|| format!("{spec}"))?;
        let h = Hypergraph::from_json(&json)?;
        if let Some(l) = labels {
            if h.labels() != l {
                bail!("hypergraph vertices {:?} do not match table variables {:?}", h.labels(), l);
            }
        }
        return Ok(h);
    }
    let labels = match labels {
        Some(l) => l.to_vec(),
        None => {
            let k = match vars {
                Some(k) => k,
                None => spec
                    .chars()
                    .filter(|c| c.is_ascii_uppercase())
                    .map(|c| (c as u8 - b'A') as usize + 1)
                    .max()
                    .context("hypergraph names no vertices; pass --vars")?,
            };
            default_labels(k)
        }
    };
    Ok(Hypergraph::parse(spec, &labels)?)
}

fn mc_config(mc: &McArgs, threads: Option<usize>) -> McConfig {
    McConfig { n_samples: mc.samples, seed: mc.seed, threads }
}

fn curve<F>(lambdas: &[f64], mut f: F) -> Result<String>
where
    F: FnMut(f64) -> hyperfaith::Result<VolumeEstimate>,
{
    let points = lambdas.iter().map(|&l| Ok((l, f(l)?))).collect::<Result<Vec<_>>>()?;
    Ok(volumes::curve_csv(&points))
}

fn run(cli: &Cli) -> Result<String> {
    let threads = cli.threads;
    match &cli.command {
        Command::Gamma { table } => {
            let t = load_table(table)?;
            let p = t.to_distribution()?;
            Ok(gamma_csv(&interaction_vector(&p), &t.labels))
        }
        Command::Faithful { table, tol } => {
            let t = load_table(table)?;
            let h = faithful_hypergraph(&t.to_distribution()?, *tol)?.with_labels(t.labels.clone())?;
            Ok(serde_json::to_string(&h.to_json())? + "\n")
        }
        Command::Fit { table, hypergraph, tol, max_iter } => {
            let t = load_table(table)?;
            let h = parse_hypergraph(hypergraph, Some(&t.labels), None)?;
            let cfg = FitConfig { tolerance: *tol, max_iterations: *max_iter };
            let r = ipf_fit(&t.to_distribution()?, &h, &cfg)?;
            if !r.converged {
                eprintln!(
                    "warning: IPF did not converge in {} iterations (gap {:e})",
                    r.iterations, r.max_marginal_gap
                );
            }
            Ok(serde_json::to_string(&r.to_json(&h))? + "\n")
        }
        Command::Search(a) => search(a),
        Command::LambdaStar { n, alpha, epsilon, orders } => {
            Ok(format!("{}\n", lambda_star(*n, *alpha, *epsilon, orders)?))
        }
        Command::Volume { kind } => volume(kind, threads),
    }
}

fn search(a: &SearchArgs) -> Result<String> {
    let t = load_table(&a.table)?;
    let counts = match a.sample {
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            sample_counts(&t.to_distribution()?, n, &mut rng)?
        }
        None => t.to_counts()?,
    };
    let cfg = SearchConfig { smoothing: a.smoothing, keep_main_effects: !a.all_terms, ..SearchConfig::default() };
    let trace = match backward_select(&counts, a.alpha, &cfg) {
        Ok(trace) => trace,
        Err(e) => {
            let partial = e.trace.to_json_lines();
            let mut out = std::io::stdout();
            out.write_all(partial.as_bytes())?;
            bail!(e);
        }
    };
    let labels = t.labels.clone();
    let fin = trace.final_model.clone().with_labels(labels)?;
    let mut summary = serde_json::json!({ "final": fin.to_json() });
    let orders = fin.orders();
    if !orders.is_empty() {
        summary["lambda_star"] = serde_json::json!(lambda_star(counts.total(), a.alpha, a.epsilon, &orders)?);
    }
    if let Some(lambda) = a.lambda {
        let p_hat = counts.empirical(a.smoothing)?;
        let fitted = ipf_fit(&p_hat, &fin, &cfg.fit)?.fitted;
        let r = strong_faithfulness_check(&fitted, &fin, lambda)?;
        summary["lambda"] = serde_json::json!(lambda);
        summary["strong_faithful"] = serde_json::json!(r.satisfied);
        summary["min_abs_gamma"] = serde_json::json!(r.min_abs_gamma);
    }
    let mut out = String::new();
    for s in &trace.steps {
        let mut step = s.clone();
        step.model = step.model.with_labels(t.labels.clone())?;
        out.push_str(&serde_json::to_string(&step.to_json())?);
        out.push('\n');
    }
    out.push_str(&summary.to_string());
    out.push('\n');
    Ok(out)
}

fn volume(kind: &VolumeKind, threads: Option<usize>) -> Result<String> {
    match kind {
        VolumeKind::Nu { order, monte_carlo, mc } => {
            let cfg = mc_config(mc, threads);
            curve(&mc.lambda, |l| {
                if *order == 1 && !monte_carlo {
                    Ok(VolumeEstimate::closed_form(volumes::nu1_closed(l)?))
                } else {
                    volumes::nu_h_monte_carlo(*order, l, &cfg)
                }
            })
        }
        VolumeKind::Decomposable { hypergraph, orders, vars, monte_carlo, mc } => {
            let cfg = mc_config(mc, threads);
            match (hypergraph, orders) {
                (Some(spec), _) => {
                    let h = parse_hypergraph(spec, None, *vars)?;
                    if *monte_carlo {
                        curve(&mc.lambda, |l| volumes::decomposable_monte_carlo(&h, l, &cfg))
                    } else {
                        curve(&mc.lambda, |l| volumes::unfaithful_proportion_for(&h, l, &cfg))
                    }
                }
                (None, Some(orders)) => {
                    curve(&mc.lambda, |l| volumes::unfaithful_proportion_decomposable(orders, l, &cfg))
                }
                (None, None) => bail!("pass --hypergraph or --orders"),
            }
        }
        VolumeKind::TwoByTwo { measure, mc } => {
            let m = match measure {
                Measure::Phi1 => AssociationMeasure::Phi1LogOdds,
                Measure::Phi2 => AssociationMeasure::Phi2Yule,
                Measure::Phi3 => AssociationMeasure::Phi3CondProbDiff,
            };
            let cfg = mc_config(mc, threads);
            curve(&mc.lambda, |l| volumes::two_by_two_unfaithful_proportion(m, l, &cfg))
        }
        VolumeKind::Projected { hypergraph, vars, mc } => {
            let h = parse_hypergraph(hypergraph, None, *vars)?;
            let cfg = mc_config(mc, threads);
            let fit = FitConfig::default();
            curve(&mc.lambda, |l| {
                let r = volumes::projected_unfaithful_proportion(&h, l, &cfg, &fit)?;
                if r.fit_failures > 0 {
                    eprintln!("lambda {l}: {} samples failed to converge", r.fit_failures);
                }
                Ok(r.estimate)
            })
        }
        VolumeKind::Bound { orders, lambda } => curve(lambda, |l| volumes::volume_lower_bound_estimate(orders, l)),
    }
}

fn main() {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|text| match &cli.output {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    });
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
