use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qmdyn_cli::config::{PerturbConfig, Twist, Variant};
use qmdyn_cli::{run, Experiment, ExperimentConfig, Format};

#[derive(Parser)]
#[command(name = "qmdyn", version, about = "Quasimorphism, random-walk and twisted model-set experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// D_L and an argmax pair for L = 1..L
    Defect(Opts),
    /// Drift table d_n of a quasimorphism under the walk
    Drift(Opts),
    /// Cesàro harmonization residuals and the last psi on B_L
    Harmonize(Opts),
    /// Hull-walk histogram of fingerprints on B_L
    HullWalk(Opts),
    /// Generic set A(K): factor check and random shift witnesses
    GenericSet(Opts),
    /// Orbit-closure witness k with k.s_o = eta(B) on [-W, W]
    OrbitClosure(Opts),
    /// Model-set points in [-R, R] and gap statistics
    ModelSet(Opts),
    /// Approximate-subgroup check P + P in P + F
    ApproxCheck(Opts),
    /// Approximate-subgroup and fiber checks for the twisted set
    TwistCheck(Opts),
    /// Seeded skew-product equivariance and separation checks
    SkewCheck(Opts),
    /// Scripted Q1/Q2/Q3 experiments on F_2 x R
    ExampleFinal(Opts),
    /// Print the JSON schema of the config file
    Schema,
}

#[derive(Args, Default)]
struct Opts {
    /// JSON config; flags given here override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Free-group rank (1 is the integers)
    #[arg(long)]
    rank: Option<u32>,
    /// counting:<word> | hom:<w1>,<w2>,... | zero
    #[arg(long)]
    qm: Option<String>,
    /// Replace f by g.f (repeatable, applied in order)
    #[arg(long = "act")]
    act: Vec<String>,
    #[arg(long)]
    antisymmetrize: bool,
    #[arg(long)]
    rescale3: bool,
    /// <eta|xi>:<set>, e.g. xi:nonneg:bernoulli:1/5:7
    #[arg(long)]
    perturb: Option<String>,
    /// Generator whose exponent sum feeds the perturbation
    #[arg(long)]
    perturb_generator: Option<u32>,
    /// uniform | word:prob,...
    #[arg(long)]
    measure: Option<String>,
    /// Convolution power
    #[arg(long = "n")]
    n: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Word radius L
    #[arg(long = "L")]
    l: Option<usize>,
    /// Cesàro grid, comma separated
    #[arg(long = "N", value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Generic-set block length K
    #[arg(long = "K")]
    k: Option<usize>,
    /// Integer window W
    #[arg(long = "W")]
    w: Option<i64>,
    /// Target set B: empty | evens | list:0,2 | periodic:01 | generic:K | bernoulli:Q:SEED
    #[arg(long = "B")]
    b: Option<String>,
    #[arg(long)]
    targets: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Word radius for fiber statistics
    #[arg(long = "fiber-L")]
    fiber_l: Option<usize>,
    #[arg(long, value_enum)]
    variant: Option<Variant>,
    /// Bernoulli parameters for Q3, comma separated
    #[arg(long, value_delimiter = ',')]
    q_pair: Option<Vec<String>>,
    /// Radicand d of the model set
    #[arg(long)]
    d: Option<i64>,
    /// Window lo,hi
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    window: Option<Vec<String>>,
    /// Physical cutoff R
    #[arg(long = "R")]
    r: Option<String>,
    /// Covering cutoff C
    #[arg(long = "C")]
    c: Option<String>,
}

impl Opts {
    fn config(self, experiment: Experiment) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let c = ExperimentConfig::from_json(&text)?;
                if c.experiment != experiment {
                    bail!("config is for `{}`, not `{}`", c.experiment.name(), experiment.name());
                }
                c
            }
            None => ExperimentConfig::new(experiment),
        };
        macro_rules! set {
            ($flag:expr => $field:expr) => {
                if let Some(v) = $flag {
                    $field = v;
                }
            };
        }
        set!(self.out.map(Some) => c.output.out);
        set!(self.format => c.output.format);
        set!(self.rank => c.group.rank);
        set!(self.qm => c.qm.spec);
        if !self.act.is_empty() {
            c.qm.act = self.act;
        }
        c.qm.antisymmetrize |= self.antisymmetrize;
        c.qm.rescale3 |= self.rescale3;
        if let Some(p) = self.perturb {
            let (twist, set) = p.split_once(':').context("--perturb expects <eta|xi>:<set>")?;
            let twist = match twist {
                "eta" => Twist::Eta,
                "xi" => Twist::Xi,
                other => bail!("unknown twist `{other}`"),
            };
            c.qm.perturb = Some(PerturbConfig { twist, set: set.into(), generator: 1 });
        }
        if let Some(g) = self.perturb_generator {
            match &mut c.qm.perturb {
                Some(p) => p.generator = g,
                None => bail!("--perturb-generator needs --perturb"),
            }
        }
        set!(self.measure => c.walk.measure);
        set!(self.n => c.walk.n);
        set!(self.steps => c.walk.steps);
        set!(self.seed => c.walk.seed);
        set!(self.l.map(Some) => c.params.radius);
        set!(self.grid => c.params.grid);
        set!(self.k.map(Some) => c.params.generic_k);
        set!(self.w => c.params.window);
        set!(self.b => c.params.set);
        set!(self.targets => c.params.targets);
        set!(self.samples => c.params.samples);
        set!(self.fiber_l => c.params.fiber_radius);
        set!(self.variant.map(Some) => c.params.variant);
        if let Some(q) = self.q_pair {
            let [a, b]: [String; 2] = q.try_into().map_err(|_| anyhow::anyhow!("--q-pair expects two values"))?;
            c.params.q_pair = [a, b];
        }
        set!(self.d => c.model_set.d);
        if let Some(w) = self.window {
            let [lo, hi]: [String; 2] = w.try_into().map_err(|_| anyhow::anyhow!("--window expects lo,hi"))?;
            c.model_set.window = [lo, hi];
        }
        set!(self.r.map(Some) => c.model_set.radius);
        set!(self.c => c.model_set.cover);
        Ok(c)
    }
}

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_INVALID_CONFIG: u8 = 2;

fn execute(command: Command) -> Result<bool> {
    let (experiment, opts) = match command {
        Command::Schema => {
            println!("{}", qmdyn_cli::config::schema());
            return Ok(true);
        }
        Command::Defect(o) => (Experiment::Defect, o),
        Command::Drift(o) => (Experiment::Drift, o),
        Command::Harmonize(o) => (Experiment::Harmonize, o),
        Command::HullWalk(o) => (Experiment::HullWalk, o),
        Command::GenericSet(o) => (Experiment::GenericSet, o),
        Command::OrbitClosure(o) => (Experiment::OrbitClosure, o),
        Command::ModelSet(o) => (Experiment::ModelSet, o),
        Command::ApproxCheck(o) => (Experiment::ApproxCheck, o),
        Command::TwistCheck(o) => (Experiment::TwistCheck, o),
        Command::SkewCheck(o) => (Experiment::SkewCheck, o),
        Command::ExampleFinal(o) => (Experiment::ExampleFinal, o),
    };
    let config = opts.config(experiment)?;
    let report = run(&config)?;
    match &config.output.out {
        Some(dir) => {
            report.write_dir(dir, config.output.format)?;
            std::fs::write(dir.join("config.json"), config.to_json() + "\n")?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            report.write_stdout(config.output.format, &mut stdout)?;
            stdout.flush()?;
        }
    }
    if !report.ok {
        eprintln!("check `{}` failed", report.check);
    }
    Ok(report.ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED_CHECK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INVALID_CONFIG)
        }
    }
}
