//! Experiment configuration: a strict JSON schema plus parsers for the short
//! spec strings used on the command line.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use qmdyn::aperiodic::{ModelSet, QuadExt};
use qmdyn::hull_lab::{generic_set, perturbation_qm, BinarySetZ, SetTwist, BASE_CHECK_RADIUS};
use qmdyn::qm::act;
use qmdyn::rational::parse_rational;
use qmdyn::walk::StepDistribution;
use qmdyn::{antisymmetrize, rescale3, GroupSpec, Quasimorphism, Rational, ReducedWord};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Defect,
    Drift,
    Harmonize,
    HullWalk,
    GenericSet,
    OrbitClosure,
    ModelSet,
    ApproxCheck,
    TwistCheck,
    SkewCheck,
    ExampleFinal,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Defect => "defect",
            Experiment::Drift => "drift",
            Experiment::Harmonize => "harmonize",
            Experiment::HullWalk => "hull-walk",
            Experiment::GenericSet => "generic-set",
            Experiment::OrbitClosure => "orbit-closure",
            Experiment::ModelSet => "model-set",
            Experiment::ApproxCheck => "approx-check",
            Experiment::TwistCheck => "twist-check",
            Experiment::SkewCheck => "skew-check",
            Experiment::ExampleFinal => "example-final",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
pub enum Variant {
    #[value(name = "Q1", alias = "q1")]
    Q1,
    #[value(name = "Q2", alias = "q2")]
    Q2,
    #[value(name = "Q3", alias = "q3")]
    Q3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub group: GroupConfig,
    #[serde(default)]
    pub qm: QmConfig,
    #[serde(default)]
    pub walk: WalkConfig,
    #[serde(default)]
    pub model_set: ModelSetConfig,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    /// Rank of the free group; 1 is the integers.
    pub rank: u32,
}

impl Default for GroupConfig {
    fn default() -> Self {
        Self { rank: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct QmConfig {
    /// `counting:<word>`, `hom:<w1>,<w2>,...` or `zero`. Words are letters
    /// (`ab`, `aB`) or dash form (`1-2`, `1--2`).
    pub spec: String,
    /// Words `g` applied as `g.f`, innermost first.
    #[serde(default)]
    pub act: Vec<String>,
    #[serde(default)]
    pub antisymmetrize: bool,
    #[serde(default)]
    pub rescale3: bool,
    #[serde(default)]
    pub perturb: Option<PerturbConfig>,
}

impl Default for QmConfig {
    fn default() -> Self {
        Self { spec: "counting:ab".into(), act: Vec::new(), antisymmetrize: false, rescale3: false, perturb: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum Twist {
    Eta,
    Xi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    pub twist: Twist,
    /// Set spec, see [`parse_set`].
    pub set: String,
    #[serde(default = "one")]
    pub generator: u32,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    /// `uniform` or `word:prob,word:prob,...` (symmetric, total mass 1).
    pub measure: String,
    /// Convolution power for drifts.
    pub n: usize,
    /// Hull-walk length.
    pub steps: usize,
    /// Top-level seed; every random choice derives from it.
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self { measure: "uniform".into(), n: 6, steps: 100_000, seed: 7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ModelSetConfig {
    /// Positive non-square radicand.
    pub d: i64,
    /// Closed window `[lo, hi]` for the conjugate coordinate.
    pub window: [String; 2],
    /// Physical cutoff `R`; the per-experiment default applies when absent.
    #[serde(default)]
    pub radius: Option<String>,
    /// Cutoff `C` for the covering set.
    pub cover: String,
}

impl Default for ModelSetConfig {
    fn default() -> Self {
        Self { d: 2, window: ["-1".into(), "1".into()], radius: None, cover: "4".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Word radius `L`; the per-experiment default applies when absent.
    #[serde(default)]
    pub radius: Option<usize>,
    /// Cesàro grid `N`, strictly increasing.
    pub grid: Vec<usize>,
    /// Generic-set block length `K`; defaults to 6, or `2W + 1` for orbit closure.
    #[serde(default)]
    pub generic_k: Option<usize>,
    /// Integer window `W`.
    pub window: i64,
    /// Target set `B` for orbit closure.
    pub set: String,
    /// Random shift-witness targets for the generic set.
    pub targets: usize,
    /// Seeded equivariance samples.
    pub samples: usize,
    /// Word radius for fiber statistics.
    pub fiber_radius: usize,
    #[serde(default)]
    pub variant: Option<Variant>,
    /// Bernoulli parameters of the two chains in the Q3 experiment.
    pub q_pair: [String; 2],
}

impl Default for Params {
    fn default() -> Self {
        Self {
            radius: None,
            grid: vec![1, 2, 4, 8],
            generic_k: None,
            window: 8,
            set: "evens".into(),
            targets: 200,
            samples: 100,
            fiber_radius: 3,
            variant: None,
            q_pair: ["1/5".into(), "4/5".into()],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            group: GroupConfig::default(),
            qm: QmConfig::default(),
            walk: WalkConfig::default(),
            model_set: ModelSetConfig::default(),
            params: Params::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid experiment config")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn spec(&self) -> Result<GroupSpec> {
        Ok(GroupSpec::new(self.group.rank)?)
    }

    /// `L`, with the experiment's default.
    pub fn word_radius(&self) -> usize {
        self.params.radius.unwrap_or(match self.experiment {
            Experiment::Defect | Experiment::TwistCheck => 4,
            _ => 2,
        })
    }

    /// `R`, with the experiment's default.
    pub fn physical_radius(&self) -> Result<Rational> {
        let default = match self.experiment {
            Experiment::ApproxCheck => "80",
            Experiment::TwistCheck | Experiment::ExampleFinal => "30",
            Experiment::SkewCheck => "5",
            _ => "60",
        };
        parse_positive(self.model_set.radius.as_deref().unwrap_or(default), "R")
    }

    pub fn cover_radius(&self) -> Result<Rational> {
        parse_positive(&self.model_set.cover, "C")
    }

    pub fn generic_k(&self) -> usize {
        self.params.generic_k.unwrap_or(match self.experiment {
            Experiment::OrbitClosure => 2 * self.params.window.max(0) as usize + 1,
            _ => 6,
        })
    }

    pub fn quasimorphism(&self) -> Result<Quasimorphism> {
        let spec = self.spec()?;
        let mut f = parse_qm(&spec, &self.qm.spec)?;
        for g in &self.qm.act {
            f = act(&parse_word(&spec, g)?, &f);
        }
        if self.qm.antisymmetrize {
            f = antisymmetrize(&f);
        }
        if self.qm.rescale3 {
            f = rescale3(&f);
        }
        if let Some(p) = &self.qm.perturb {
            let twist = match p.twist {
                Twist::Eta => SetTwist::Eta,
                Twist::Xi => SetTwist::Xi,
            };
            let set = Arc::new(parse_set(&p.set, self.params.window)?);
            f = perturbation_qm(&spec, set, twist, p.generator, &f, BASE_CHECK_RADIUS)?;
        }
        Ok(f)
    }

    pub fn step_distribution(&self) -> Result<StepDistribution> {
        let spec = self.spec()?;
        parse_measure(&spec, &self.walk.measure)
    }

    pub fn model(&self) -> Result<ModelSet> {
        let d = self.model_set.d;
        let lo = QuadExt::parse(&self.model_set.window[0], d)?;
        let hi = QuadExt::parse(&self.model_set.window[1], d)?;
        Ok(ModelSet::new(d, lo, hi)?)
    }
}

fn parse_positive(s: &str, name: &str) -> Result<Rational> {
    let r = parse_rational(s)?;
    if r <= Rational::from_integer(0.into()) {
        bail!("{name} must be positive, got {s}");
    }
    Ok(r)
}

/// Letter form (`ab`, `aB`, `e`) or dash form (`1-2`, `1--2`).
pub fn parse_word(spec: &GroupSpec, s: &str) -> Result<ReducedWord> {
    let s = s.trim();
    let word = if s.chars().all(|c| c.is_ascii_alphabetic()) && s != "e" {
        ReducedWord::parse_alpha(spec, s)?
    } else {
        ReducedWord::parse_dash(spec, s)?
    };
    Ok(word)
}

/// `counting:<word>`, `hom:<w1>,<w2>,...` or `zero`.
pub fn parse_qm(spec: &GroupSpec, s: &str) -> Result<Quasimorphism> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "counting" => {
            let w = parse_word(spec, arg)?;
            if w.is_identity() {
                bail!("counting pattern must be non-trivial");
            }
            Ok(Quasimorphism::counting(w))
        }
        "hom" => {
            let weights = arg.split(',').map(|w| Ok(parse_rational(w)?)).collect::<Result<Vec<_>>>()?;
            if weights.len() > spec.rank() as usize {
                bail!("{} weights for rank {}", weights.len(), spec.rank());
            }
            Ok(Quasimorphism::homomorphism(weights))
        }
        "zero" => Ok(Quasimorphism::zero()),
        _ => Err(anyhow!("unknown quasimorphism `{s}`; expected counting:, hom: or zero")),
    }
}

/// `empty`, `evens`, `list:0,2`, `periodic:0110`, `generic:K`,
/// `bernoulli:Q:SEED`, each optionally prefixed by `nonneg:`. Sets without a
/// finite description are materialized on `[-window, window]`.
pub fn parse_set(s: &str, window: i64) -> Result<BinarySetZ> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let set = match kind {
        "empty" => BinarySetZ::empty(),
        "evens" => BinarySetZ::evens(window),
        "list" => {
            let members = if arg.is_empty() {
                Vec::new()
            } else {
                arg.split(',').map(|m| m.trim().parse::<i64>().with_context(|| format!("bad member `{m}`"))).collect::<Result<_>>()?
            };
            BinarySetZ::explicit(members)
        }
        "periodic" => {
            let bits = arg
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(anyhow!("periodic pattern must be 0/1, got `{arg}`")),
                })
                .collect::<Result<Vec<_>>>()?;
            BinarySetZ::periodic(bits, window)?
        }
        "generic" => generic_set(arg.parse().with_context(|| format!("bad K `{arg}`"))?)?,
        "bernoulli" => {
            let (q, seed) = arg.split_once(':').ok_or_else(|| anyhow!("expected bernoulli:Q:SEED"))?;
            BinarySetZ::bernoulli(parse_rational(q)?, seed.parse().context("bad seed")?, window)?
        }
        "nonneg" => parse_set(arg, window)?.nonnegative_part()?,
        _ => bail!("unknown set `{s}`"),
    };
    Ok(set)
}

/// `uniform` or `word:prob,...`.
pub fn parse_measure(spec: &GroupSpec, s: &str) -> Result<StepDistribution> {
    if s == "uniform" {
        return Ok(StepDistribution::uniform(spec));
    }
    let atoms = s
        .split(',')
        .map(|atom| {
            let (w, p) = atom.rsplit_once(':').ok_or_else(|| anyhow!("bad atom `{atom}`, expected word:prob"))?;
            Ok((parse_word(spec, w)?, parse_rational(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StepDistribution::new(spec, atoms)?)
}

/// JSON schema of [`ExperimentConfig`].
pub fn schema() -> String {
    serde_json::to_string_pretty(&schemars::schema_for!(ExperimentConfig)).expect("schema serializes")
}
