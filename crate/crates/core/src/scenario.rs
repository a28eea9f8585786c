//! Flat TOML scenarios and the runner behind `orlicz-lab run`.
//!
//! ```toml
//! k = 10
//! weights = "uniform"          # or "random:<seed>"
//! phi = "power:2"
//! sequence = "dyadic"          # "dyadic:a-b", "constant:<partition>", "periodic:<p1>|<p2>|…"
//! target = "finest"            # a partition spec, "upper" or "lower"
//! expect_muperp = true
//! ```
//!
//! Partition specs are `trivial`, `finest`, `dyadic:j`, `shifted:j`,
//! `random:<blocks>:<seed>` and `labels:l0,l1,…`. Function specs are
//! `identity`, `zero`, `constant:c`, `indicator:a,b` and `random:<seed>`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::convergence::{
    dual_battery, equivalence_test, function_battery, indicator_bound_check, sandwich_check, set_recovery_check,
    AlgebraSequence, ConvergenceReport, SandwichReport, DEFAULT_BATTERY, DEFAULT_TOL, DEFAULT_WINDOW,
};
use crate::measure::{DyadicSpace, Partition};
use crate::orlicz::SimpleFunction;
use crate::young::YoungFunction;

/// Largest admissible violation of the indicator bound.
pub const INDICATOR_BOUND_SLACK: f64 = 1e-9;
/// Largest admissible violation of the set-recovery inequality.
pub const SET_RECOVERY_SLACK: f64 = 1e-12;
const BOUND_BLOCKS: usize = 16;
const FUNCTION_BATTERY: usize = 8;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(#[from] crate::Error),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub k: u32,
    #[serde(default = "default_weights")]
    pub weights: String,
    #[serde(default = "default_phi")]
    pub phi: String,
    pub sequence: String,
    pub target: String,
    /// Function specs for the conditional-expectation battery; a default
    /// battery built from the target is used when absent.
    #[serde(default)]
    pub functions: Option<Vec<String>>,
    #[serde(default = "default_battery")]
    pub battery: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub expect_mu: Option<bool>,
    #[serde(default)]
    pub expect_perp: Option<bool>,
    #[serde(default)]
    pub expect_muperp: Option<bool>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_weights() -> String {
    "uniform".into()
}

fn default_phi() -> String {
    "power:2".into()
}

fn default_battery() -> usize {
    DEFAULT_BATTERY
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn invalid<T>(msg: impl Into<String>) -> crate::Result<T> {
    Err(crate::Error::Domain(msg.into()))
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> crate::Result<T> {
    s.trim()
        .parse()
        .map_err(|_| crate::Error::Domain(format!("bad {what}: {s:?}")))
}

pub fn parse_space(k: u32, weights: &str) -> crate::Result<DyadicSpace> {
    match weights.split_once(':') {
        None if weights == "uniform" => DyadicSpace::uniform(k),
        Some(("random", seed)) => DyadicSpace::random(k, parse_num(seed, "weight seed")?),
        _ => invalid(format!("unknown weight profile {weights:?}")),
    }
}

pub fn parse_partition(space: &DyadicSpace, spec: &str) -> crate::Result<Partition> {
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "trivial" if rest.is_empty() => Ok(Partition::trivial(space)),
        "finest" if rest.is_empty() => Ok(Partition::finest(space)),
        "dyadic" => Partition::dyadic(space, parse_num(rest, "dyadic level")?),
        "shifted" => Partition::shifted_dyadic(space, parse_num(rest, "shifted level")?),
        "random" => {
            let Some((blocks, seed)) = rest.split_once(':') else {
                return invalid(format!("random partition needs blocks:seed, got {spec:?}"));
            };
            let blocks: usize = parse_num(blocks, "block count")?;
            if blocks == 0 {
                return invalid("random partition needs at least one block");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(parse_num(seed, "partition seed")?);
            let labels: Vec<usize> = (0..space.n_cells()).map(|_| rng.gen_range(0..blocks)).collect();
            Partition::from_labels(space, &labels)
        }
        "labels" => {
            let labels = rest
                .split(',')
                .map(|l| parse_num(l, "label"))
                .collect::<crate::Result<Vec<usize>>>()?;
            Partition::from_labels(space, &labels)
        }
        _ => invalid(format!("unknown partition spec {spec:?}")),
    }
}

pub fn parse_function(space: &DyadicSpace, spec: &str) -> crate::Result<SimpleFunction> {
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "identity" if rest.is_empty() => Ok(SimpleFunction::identity(space)),
        "zero" if rest.is_empty() => Ok(SimpleFunction::zero(space)),
        "constant" => Ok(SimpleFunction::constant(space, parse_num(rest, "constant")?)),
        "indicator" => {
            let Some((a, b)) = rest.split_once(',') else {
                return invalid(format!("indicator needs a,b, got {spec:?}"));
            };
            Ok(SimpleFunction::indicator(
                &space.interval(parse_num(a, "endpoint")?, parse_num(b, "endpoint")?)?,
            ))
        }
        "random" => Ok(SimpleFunction::random(
            space,
            parse_num(rest, "function seed")?,
            -1.0,
            1.0,
        )),
        _ => invalid(format!("unknown function spec {spec:?}")),
    }
}

pub fn parse_sequence(space: &DyadicSpace, spec: &str, window: usize) -> crate::Result<AlgebraSequence> {
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "dyadic" if rest.is_empty() => AlgebraSequence::full_refinement(space, window),
        "dyadic" => {
            let Some((a, b)) = rest.split_once('-') else {
                return invalid(format!("dyadic range needs a-b, got {spec:?}"));
            };
            let (a, b): (u32, u32) = (parse_num(a, "exponent")?, parse_num(b, "exponent")?);
            if a > b {
                return invalid(format!("empty exponent range {a}-{b}"));
            }
            AlgebraSequence::dyadic_refinement(space, (a..=b).collect(), window)
        }
        "constant" => AlgebraSequence::constant(&parse_partition(space, rest)?, window),
        "periodic" => {
            let parts = rest
                .split('|')
                .map(|p| parse_partition(space, p))
                .collect::<crate::Result<Vec<_>>>()?;
            let period = parts.len();
            AlgebraSequence::periodic(parts, period, window)
        }
        _ => invalid(format!("unknown sequence spec {spec:?}")),
    }
}

/// Everything a scenario produced, ready to be written out.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: String,
    pub report: ConvergenceReport,
    pub sandwich: SandwichReport,
    /// `(verdict, expected, actual)` for every expectation in the file.
    pub expectations: Vec<(&'static str, bool, Option<bool>)>,
}

impl Outcome {
    pub fn expectations_met(&self) -> bool {
        self.expectations.iter().all(|(_, want, got)| Some(*want) == *got)
    }

    pub fn passed(&self) -> bool {
        self.expectations_met() && self.report.checks_passed() && self.sandwich.holds()
    }

    pub fn verdicts_text(&self) -> String {
        let mut out = format!("scenario {}\n{}\n", self.name, self.report.verdict_line());
        let show = |v: Option<bool>| v.map_or("na".to_string(), |b| b.to_string());
        out += &format!(
            "condexp={} mu_subsequence={}\n",
            show(self.report.condexp),
            show(self.report.mu_subsequence)
        );
        let s = &self.sandwich;
        out += &format!(
            "sandwich lower={} amu_estimate={} aperp_estimate={} upper={} holds={} amu_equals_aperp={}\n",
            s.lower.n_blocks(),
            s.amu.n_blocks(),
            s.aperp.n_blocks(),
            s.upper.n_blocks(),
            s.holds(),
            s.muperp
        );
        for c in &self.report.checks {
            out += &format!(
                "check {} {} {}\n",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.detail
            );
        }
        for (name, want, got) in &self.expectations {
            let status = if Some(*want) == *got { "met" } else { "MISMATCH" };
            out += &format!("expect {name}={want} got={} {status}\n", show(*got));
        }
        out += if self.passed() {
            "RESULT pass\n"
        } else {
            "RESULT fail\n"
        };
        out
    }

    /// Writes `report.csv` and `verdicts.txt` into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        self.report.write_csv(fs::File::create(dir.join("report.csv"))?)?;
        fs::write(dir.join("verdicts.txt"), self.verdicts_text())
    }
}

impl Scenario {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn run(&self, fallback_name: &str) -> Result<Outcome, ScenarioError> {
        let space = parse_space(self.k, &self.weights)?;
        let phi: YoungFunction = self.phi.parse()?;
        if !(self.tol > 0.0) {
            return Err(crate::Error::Domain(format!("tol must be positive, got {}", self.tol)).into());
        }
        if self.battery == 0 {
            return Err(crate::Error::Domain("battery must be at least 1".into()).into());
        }
        let seq = parse_sequence(&space, &self.sequence, self.window)?;
        let target = match self.target.as_str() {
            "upper" => seq.upper_limit()?,
            "lower" => seq.lower_limit()?,
            spec => parse_partition(&space, spec)?,
        };
        let functions = match &self.functions {
            Some(specs) => specs
                .iter()
                .map(|s| parse_function(&space, s))
                .collect::<crate::Result<Vec<_>>>()?,
            None => function_battery(&target, FUNCTION_BATTERY, self.seed),
        };
        let duals = dual_battery(&seq, self.battery, self.seed)?;
        let mut report = equivalence_test(&seq, &target, &functions, &duals, &phi, self.tol)?;

        let blocks = target.n_blocks();
        let take = blocks.min(BOUND_BLOCKS);
        let (mut bound, mut recovery) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for i in 0..take {
            let d = target.block_set(i * blocks / take);
            bound = bound.max(indicator_bound_check(&seq, &d, &phi)?);
            recovery = recovery.max(set_recovery_check(&seq, &d, &phi)?);
        }
        report.push_check(
            "indicator_bound",
            bound <= INDICATOR_BOUND_SLACK,
            format!("max violation {bound:e}"),
        );
        report.push_check(
            "set_recovery",
            recovery <= SET_RECOVERY_SLACK,
            format!("max violation {recovery:e}"),
        );

        let sandwich = sandwich_check(&seq, self.tol)?;
        let expectations = [
            ("mu", self.expect_mu, report.mu),
            ("perp", self.expect_perp, report.perp),
            ("muperp", self.expect_muperp, report.muperp),
        ]
        .into_iter()
        .filter_map(|(n, want, got)| want.map(|w| (n, w, got)))
        .collect();
        Ok(Outcome {
            name: self.name.clone().unwrap_or_else(|| fallback_name.to_string()),
            report,
            sandwich,
            expectations,
        })
    }
}
