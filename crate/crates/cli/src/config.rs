//! Run configuration: flat `key=value` text with `#` comments.
//!
//! Grammar, one item per whitespace-separated token:
//!
//! ```text
//! file  := line*
//! line  := token* ('#' comment)?
//! token := key '=' value        (no whitespace inside a token)
//! ```
//!
//! Later assignments win, so command-line flags are applied after the file.
//! Unknown keys and repeated keys within one source are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use muscl_core::limiters::{Flavor, LimiterFamily, LimiterKind};
use muscl_core::problems::{DmrFront, ProblemName};
use muscl_core::solver::LimitVars;
use serde::Serialize;

use crate::CliError;

/// Every key a run configuration accepts, in rendering order.
pub const KNOWN_KEYS: [&str; 17] = [
    "problem",
    "nx",
    "ny",
    "perturb-r",
    "seed",
    "limiter",
    "flavor",
    "cfl",
    "t-end",
    "output-times",
    "out",
    "run-id",
    "entropy-fix",
    "limit-vars",
    "positivity-fallback",
    "dmr-front",
    "max-steps",
];

pub const REQUIRED_KEYS: [&str; 2] = ["problem", "nx"];

pub const DEFAULT_CFL: f64 = 0.6;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_LIMITER: LimiterFamily = LimiterFamily::VanAlbada;
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(serialize_with = "as_display")]
    pub problem: ProblemName,
    /// `[nx]` or `[nx, ny]`.
    pub cells: Vec<usize>,
    pub perturb_r: f64,
    pub seed: u64,
    #[serde(serialize_with = "as_display")]
    pub limiter: LimiterFamily,
    #[serde(serialize_with = "as_display")]
    pub flavor: Flavor,
    pub cfl: f64,
    pub t_end: Option<f64>,
    /// Times at which the field is written; empty means only the end time.
    pub output_times: Vec<f64>,
    pub out: PathBuf,
    pub run_id: Option<String>,
    pub entropy_fix: bool,
    #[serde(serialize_with = "limit_vars_name")]
    pub limit_vars: LimitVars,
    pub positivity_fallback: bool,
    #[serde(serialize_with = "as_display")]
    pub dmr_front: DmrFront,
    pub max_steps: Option<usize>,
}

fn as_display<S: serde::Serializer, D: std::fmt::Display>(v: &D, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn limit_vars_name<S: serde::Serializer>(v: &LimitVars, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(limit_vars_str(*v))
}

pub fn limit_vars_str(v: LimitVars) -> &'static str {
    match v {
        LimitVars::Conservative => "conservative",
        LimitVars::Primitive => "primitive",
    }
}

pub fn parse_limit_vars(s: &str) -> Result<LimitVars, String> {
    match s {
        "conservative" => Ok(LimitVars::Conservative),
        "primitive" => Ok(LimitVars::Primitive),
        other => Err(format!("expected conservative|primitive, got `{other}`")),
    }
}

pub fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected on|off, got `{other}`")),
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

/// Raw assignments, before validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignments(BTreeMap<String, String>);

impl Assignments {
    /// Tokenizes config text; rejects unknown keys, malformed tokens and duplicates.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("");
            for token in content.split_whitespace() {
                let (key, value) = token.split_once('=').ok_or_else(|| CliError::Syntax {
                    line: lineno + 1,
                    token: token.to_string(),
                })?;
                check_key(key)?;
                if value.is_empty() {
                    return Err(CliError::invalid(key, "empty value"));
                }
                if map.insert(key.to_string(), value.to_string()).is_some() {
                    return Err(CliError::invalid(key, "assigned more than once"));
                }
            }
        }
        Ok(Self(map))
    }

    /// Applies an override (command-line flag).
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        check_key(key)?;
        self.0.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<V>(&self, key: &str, f: impl FnOnce(&str) -> Result<V, String>) -> Result<Option<V>, CliError> {
        self.get(key).map(|v| f(v).map_err(|m| CliError::invalid(key, m))).transpose()
    }
}

fn check_key(key: &str) -> Result<(), CliError> {
    if KNOWN_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(CliError::UnknownKey(key.to_string()))
    }
}

fn num<V: std::str::FromStr>(s: &str) -> Result<V, String>
where
    V::Err: std::fmt::Display,
{
    s.parse::<V>().map_err(|e| format!("`{s}`: {e}"))
}

fn float_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| num::<f64>(t.trim())).collect()
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        Self::from_assignments(&Assignments::parse(text)?)
    }

    pub fn from_assignments(a: &Assignments) -> Result<Self, CliError> {
        let missing: Vec<String> = REQUIRED_KEYS.iter().filter(|k| a.get(k).is_none()).map(|k| k.to_string()).collect();
        if !missing.is_empty() {
            return Err(CliError::MissingKeys(missing));
        }
        let problem: ProblemName = a.parsed("problem", |s| s.parse().map_err(|e| format!("{e}")))?.expect("required");
        let nx: usize = a.parsed("nx", num)?.expect("required");
        let ny: Option<usize> = a.parsed("ny", num)?;
        let cells = match (problem.dimension(), ny) {
            (1, None) => vec![nx],
            (1, Some(_)) => return Err(CliError::invalid("ny", format!("problem `{problem}` is one-dimensional"))),
            (_, Some(ny)) => vec![nx, ny],
            (_, None) => return Err(CliError::MissingKeys(vec!["ny".to_string()])),
        };
        if cells.iter().any(|&n| n < 3) {
            return Err(CliError::invalid("nx", "at least 3 cells per axis are needed"));
        }

        let (limiter, flavor_from_limiter) = match a.get("limiter") {
            None => (DEFAULT_LIMITER, None),
            Some(s) => match s.split_once(':') {
                Some((fam, fl)) => (
                    fam.parse().map_err(|e| CliError::invalid("limiter", format!("{e}")))?,
                    Some(fl.parse::<Flavor>().map_err(|e| CliError::invalid("limiter", format!("{e}")))?),
                ),
                None => (s.parse().map_err(|e| CliError::invalid("limiter", format!("{e}")))?, None),
            },
        };
        let flavor_key: Option<Flavor> = a.parsed("flavor", |s| s.parse().map_err(|e| format!("{e}")))?;
        let flavor = match (flavor_from_limiter, flavor_key) {
            (Some(x), Some(y)) if x != y => {
                return Err(CliError::invalid("flavor", format!("`{y}` contradicts limiter flavor `{x}`")))
            }
            (x, y) => y.or(x).unwrap_or_default(),
        };

        let perturb_r = a.parsed("perturb-r", num::<f64>)?.unwrap_or(0.0);
        if !(0.0..0.5).contains(&perturb_r) {
            return Err(CliError::invalid("perturb-r", format!("must satisfy 0 <= r < 0.5, got {perturb_r}")));
        }
        let cfl = a.parsed("cfl", num::<f64>)?.unwrap_or(DEFAULT_CFL);
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(CliError::invalid("cfl", format!("must lie in (0, 1], got {cfl}")));
        }
        let t_end = a.parsed("t-end", num::<f64>)?;
        if let Some(t) = t_end {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(CliError::invalid("t-end", format!("must be a finite time >= 0, got {t}")));
            }
        }
        let output_times = a.parsed("output-times", float_list)?.unwrap_or_default();
        if output_times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return Err(CliError::invalid("output-times", "times must be finite and >= 0"));
        }
        let run_id = a.get("run-id").map(str::to_string);
        if let Some(id) = &run_id {
            if id.contains(['/', '\\']) || id == "." || id == ".." {
                return Err(CliError::invalid("run-id", "must be a plain directory name"));
            }
        }
        Ok(Self {
            problem,
            cells,
            perturb_r,
            seed: a.parsed("seed", num::<u64>)?.unwrap_or(DEFAULT_SEED),
            limiter,
            flavor,
            cfl,
            t_end,
            output_times,
            out: a.get("out").map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from),
            run_id,
            entropy_fix: a.parsed("entropy-fix", parse_bool)?.unwrap_or(true),
            limit_vars: a.parsed("limit-vars", parse_limit_vars)?.unwrap_or_default(),
            positivity_fallback: a.parsed("positivity-fallback", parse_bool)?.unwrap_or(true),
            dmr_front: a.parsed("dmr-front", |s| s.parse())?.unwrap_or_default(),
            max_steps: a.parsed("max-steps", num::<usize>)?,
        })
    }

    pub fn limiter_kind(&self) -> LimiterKind {
        LimiterKind::new(self.limiter, self.flavor)
    }

    /// Output directory name: `run-id` if given, otherwise derived from the settings.
    pub fn run_id(&self) -> String {
        self.run_id.clone().unwrap_or_else(|| {
            let dims = self.cells.iter().map(usize::to_string).collect::<Vec<_>>().join("x");
            format!(
                "{}-{}-r{}-s{}-{}-{}",
                self.problem, dims, self.perturb_r, self.seed, self.limiter, self.flavor
            )
        })
    }

    /// Canonical text; `RunConfig::from_text(&c.render())` gives `c` back.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        line("problem", self.problem.to_string());
        line("nx", self.cells[0].to_string());
        if let Some(ny) = self.cells.get(1) {
            line("ny", ny.to_string());
        }
        line("perturb-r", self.perturb_r.to_string());
        line("seed", self.seed.to_string());
        line("limiter", self.limiter.to_string());
        line("flavor", self.flavor.to_string());
        line("cfl", self.cfl.to_string());
        if let Some(t) = self.t_end {
            line("t-end", t.to_string());
        }
        if !self.output_times.is_empty() {
            line(
                "output-times",
                self.output_times.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
            );
        }
        line("out", self.out.display().to_string());
        if let Some(id) = &self.run_id {
            line("run-id", id.clone());
        }
        line("entropy-fix", on_off(self.entropy_fix).to_string());
        line("limit-vars", limit_vars_str(self.limit_vars).to_string());
        line("positivity-fallback", on_off(self.positivity_fallback).to_string());
        line("dmr-front", self.dmr_front.to_string());
        if let Some(m) = self.max_steps {
            line("max-steps", m.to_string());
        }
        s
    }
}
