//! Flat `key=value` files: run manifests and configuration overrides.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::train::{Optimizer, TrainConfig};

/// Ordered `key=value` record of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

/// Parse `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_key_values(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { path: origin.to_string(), line: i + 1, msg };
        let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected key=value, found {line:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(err("empty key".into()));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(err(format!("duplicate key {k:?}")));
        }
    }
    Ok(map)
}

/// Settings shared by the command line, `validate` and the acceptance run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    pub optimizer: Optimizer,
    /// Grid levels for the decay and benchmark studies.
    pub k_list: Vec<u32>,
    /// Mode bounds for the decay study.
    pub m_list: Vec<usize>,
    pub levels: usize,
    /// Benchmark starting architecture `(m, w, L)` and depth increment.
    pub bench_arch: (usize, usize, usize),
    pub bench_l: usize,
    pub bench_train: usize,
    pub bench_test: usize,
    /// FitzHugh–Nagumo starting architectures and depth increment.
    pub fhn_arch: Vec<(usize, usize, usize)>,
    pub fhn_l: usize,
    pub fhn_level: u32,
    pub fhn_mu_train: usize,
    pub fhn_snapshots: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 5,
            max_iter: 5000,
            optimizer: Optimizer::Lbfgs,
            k_list: vec![5, 6, 7],
            m_list: (2..=9).map(|e| 1usize << e).collect(),
            levels: 3,
            bench_arch: (5, 3, 4),
            bench_l: 2,
            bench_train: 500,
            bench_test: 500,
            fhn_arch: vec![(1, 3, 3), (1, 2, 4)],
            fhn_l: 1,
            fhn_level: 7,
            fhn_mu_train: 20,
            fhn_snapshots: 25,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s.trim())).collect()
}

fn parse_triples(key: &str, v: &str) -> Result<Vec<(usize, usize, usize)>> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|t| match parse_list::<usize>(key, t)?.as_slice() {
            [m, w, l] => Ok((*m, *w, *l)),
            _ => Err(Error::Config(format!("{key}: expected m,w,L triples, found {t:?}"))),
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::default();
        config.apply(&parse_key_values(&text, &path.display().to_string())?)?;
        Ok(config)
    }

    /// Override fields from parsed `key=value` pairs; unknown keys are errors.
    pub fn apply(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in map {
            match k.as_str() {
                "seed" => self.seed = parse(k, v)?,
                "restarts" => self.restarts = parse(k, v)?,
                "max_iter" => self.max_iter = parse(k, v)?,
                "optimizer" => {
                    self.optimizer = match v.as_str() {
                        "lbfgs" => Optimizer::Lbfgs,
                        "adam" => Optimizer::Adam,
                        _ => return Err(Error::Config(format!("optimizer: expected lbfgs or adam, found {v:?}"))),
                    }
                }
                "k" => self.k_list = parse_list(k, v)?,
                "m_list" => self.m_list = parse_list(k, v)?,
                "levels" => self.levels = parse(k, v)?,
                "bench_arch" => {
                    self.bench_arch = *parse_triples(k, v)?
                        .first()
                        .ok_or_else(|| Error::Config("bench_arch: empty".into()))?
                }
                "bench_l" => self.bench_l = parse(k, v)?,
                "bench_train" => self.bench_train = parse(k, v)?,
                "bench_test" => self.bench_test = parse(k, v)?,
                "fhn_arch" => self.fhn_arch = parse_triples(k, v)?,
                "fhn_l" => self.fhn_l = parse(k, v)?,
                "fhn_level" => self.fhn_level = parse(k, v)?,
                "fhn_mu_train" => self.fhn_mu_train = parse(k, v)?,
                "fhn_snapshots" => self.fhn_snapshots = parse(k, v)?,
                _ => return Err(Error::Config(format!("unknown configuration key {k:?}"))),
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.levels == 0 || self.k_list.is_empty() || self.m_list.is_empty() {
            return Err(Error::Config("restarts, levels, k and m_list must be non-empty / positive".into()));
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            optimizer: self.optimizer,
            max_iter: self.max_iter,
            restarts: self.restarts,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }

    /// Every field as a manifest entry.
    pub fn record(&self, manifest: &mut Manifest) {
        let join = |v: &[String]| v.join(",");
        let triples = |v: &[(usize, usize, usize)]| v.iter().map(|(a, b, c)| format!("{a},{b},{c}")).collect::<Vec<_>>().join(";");
        manifest
            .push("seed", self.seed)
            .push("restarts", self.restarts)
            .push("max_iter", self.max_iter)
            .push("optimizer", format!("{:?}", self.optimizer).to_lowercase())
            .push("k", join(&self.k_list.iter().map(u32::to_string).collect::<Vec<_>>()))
            .push("m_list", join(&self.m_list.iter().map(usize::to_string).collect::<Vec<_>>()))
            .push("levels", self.levels)
            .push("bench_arch", triples(&[self.bench_arch]))
            .push("bench_l", self.bench_l)
            .push("bench_train", self.bench_train)
            .push("bench_test", self.bench_test)
            .push("fhn_arch", triples(&self.fhn_arch))
            .push("fhn_l", self.fhn_l)
            .push("fhn_level", self.fhn_level)
            .push("fhn_mu_train", self.fhn_mu_train)
            .push("fhn_snapshots", self.fhn_snapshots);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_apply() {
        let text = "# comment\nseed = 7\nk=5,6\n\nfhn_arch=1,3,3;1,2,4 # trailing\noptimizer=adam\n";
        let mut c = ExperimentConfig::default();
        c.apply(&parse_key_values(text, "cfg").unwrap()).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.k_list, vec![5, 6]);
        assert_eq!(c.fhn_arch, vec![(1, 3, 3), (1, 2, 4)]);
        assert_eq!(c.optimizer, Optimizer::Adam);
    }

    #[test]
    fn errors_name_lines_and_keys() {
        assert!(matches!(parse_key_values("a=1\nnonsense\n", "f"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_key_values("a=1\na=2\n", "f"), Err(Error::Parse { line: 2, .. })));
        let mut c = ExperimentConfig::default();
        assert!(c.apply(&parse_key_values("colour=blue", "f").unwrap()).is_err());
        assert!(c.apply(&parse_key_values("restarts=0", "f").unwrap()).is_err());
    }

    #[test]
    fn record_round_trips() {
        let c = ExperimentConfig { seed: 3, fhn_level: 6, ..ExperimentConfig::default() };
        let mut m = Manifest::new();
        c.record(&mut m);
        let mut back = ExperimentConfig::default();
        back.apply(&parse_key_values(&m.render(), "manifest").unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
