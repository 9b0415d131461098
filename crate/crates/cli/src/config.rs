use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_CUTOFF: usize = 12;
pub const MIN_CUTOFF: usize = 4;
pub const DEFAULT_MARGIN: usize = 2;
pub const DEFAULT_TOL_RELATION: f64 = 1e-10;
pub const DEFAULT_TOL_EIG: f64 = 1e-8;
/// Largest representation dimension the front end will materialize.
pub const DEFAULT_MAX_DIM: usize = 1 << 22;

/// A run configuration as read from disk, before validation.
///
/// Every field is optional so that command-line overrides can fill gaps; a
/// bundle supplies `n`, `m` and `q` on its own.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub q: Option<f64>,
    #[serde(alias = "cutoff")]
    #[serde(rename = "D")]
    pub cutoff: Option<usize>,
    pub margin: Option<usize>,
    pub tol_relation: Option<f64>,
    pub tol_eig: Option<f64>,
    pub a: Option<Vec<usize>>,
    pub t: Option<Vec<f64>>,
    pub max_dim: Option<usize>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub q: Option<f64>,
    pub cutoff: Option<usize>,
    pub margin: Option<usize>,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub m: usize,
    pub q: f64,
    #[serde(rename = "D")]
    pub cutoff: usize,
    pub margin: usize,
    pub tol_relation: f64,
    pub tol_eig: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<usize>>,
    /// Angles in turns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    pub max_dim: usize,
}

/// Parses either a JSON object or flat `key = value` lines.
///
/// In the flat form `#` starts a comment, lists are comma or space
/// separated and may be wrapped in brackets or parentheses.
pub fn parse(text: &str) -> Result<RawConfig, CliError> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON config: {e}")));
    }
    let mut seen = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().to_string();
        if seen.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key {key}", lineno + 1)));
        }
    }
    let mut cfg = RawConfig::default();
    for (key, value) in &seen {
        match key.as_str() {
            "n" => cfg.n = Some(scalar(key, value)?),
            "m" => cfg.m = Some(scalar(key, value)?),
            "q" => cfg.q = Some(scalar(key, value)?),
            "D" | "cutoff" => {
                if cfg.cutoff.is_some() {
                    return Err(CliError::Config("both D and cutoff given".into()));
                }
                cfg.cutoff = Some(scalar(key, value)?)
            }
            "margin" => cfg.margin = Some(scalar(key, value)?),
            "tol_relation" => cfg.tol_relation = Some(scalar(key, value)?),
            "tol_eig" => cfg.tol_eig = Some(scalar(key, value)?),
            "max_dim" => cfg.max_dim = Some(scalar(key, value)?),
            "a" => cfg.a = Some(list(key, value)?),
            "t" => cfg.t = Some(list(key, value)?),
            other => return Err(CliError::Config(format!("unknown key {other}"))),
        }
    }
    Ok(cfg)
}

fn scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse {key} = {value}")))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    let inner = value
        .trim()
        .trim_start_matches(['(', '['])
        .trim_end_matches([')', ']']);
    inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| scalar(key, s))
        .collect()
}

impl RawConfig {
    /// Applies `over`, fills defaults and validates.
    pub fn resolve(mut self, over: &Overrides) -> Result<RunConfig, CliError> {
        self.n = over.n.or(self.n);
        self.m = over.m.or(self.m);
        self.q = over.q.or(self.q);
        self.cutoff = over.cutoff.or(self.cutoff);
        self.margin = over.margin.or(self.margin);
        let missing = |k: &str| CliError::Config(format!("missing required key {k}"));
        let cfg = RunConfig {
            n: self.n.ok_or_else(|| missing("n"))?,
            m: self.m.ok_or_else(|| missing("m"))?,
            q: self.q.ok_or_else(|| missing("q"))?,
            cutoff: self.cutoff.unwrap_or(DEFAULT_CUTOFF),
            margin: self.margin.unwrap_or(DEFAULT_MARGIN),
            tol_relation: self.tol_relation.unwrap_or(DEFAULT_TOL_RELATION),
            tol_eig: self.tol_eig.unwrap_or(DEFAULT_TOL_EIG),
            a: self.a,
            t: self.t,
            max_dim: self.max_dim.unwrap_or(DEFAULT_MAX_DIM),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(2..=8).contains(&self.n) {
            return bad(format!("n = {} is outside 2..=8", self.n));
        }
        if self.m < 1 || self.m >= self.n {
            return bad(format!("m = {} must satisfy 1 ≤ m ≤ n − 1 = {}", self.m, self.n - 1));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad(format!("q = {} is outside (0, 1)", self.q));
        }
        if self.cutoff < MIN_CUTOFF {
            return bad(format!("D = {} is below the minimum {MIN_CUTOFF}", self.cutoff));
        }
        if 2 * self.margin >= self.cutoff {
            return bad(format!("margin = {} must be below D/2 = {}", self.margin, self.cutoff as f64 / 2.0));
        }
        for (name, tol) in [("tol_relation", self.tol_relation), ("tol_eig", self.tol_eig)] {
            if !(tol > 0.0 && tol.is_finite()) {
                return bad(format!("{name} = {tol} must be positive"));
            }
        }
        if let Some(a) = &self.a {
            if a.len() != self.m {
                return bad(format!("a has {} entries, expected m = {}", a.len(), self.m));
            }
            for (j, &aj) in a.iter().enumerate() {
                if aj < 1 || aj > self.n - j {
                    return bad(format!("a_{} = {aj} is outside 1..={}", j + 1, self.n - j));
                }
            }
        }
        if let Some(t) = &self.t {
            if t.len() != self.m {
                return bad(format!("t has {} entries, expected m = {}", t.len(), self.m));
            }
            if let Some(x) = t.iter().find(|x| !(0.0..1.0).contains(*x)) {
                return bad(format!("angle {x} turns is outside [0, 1)"));
            }
        }
        Ok(())
    }

    /// Dimension of the representation for `a`: `D^{Σ_j (n − j + 1 − a_j)}`.
    pub fn rep_dim(&self, a: &[usize]) -> Option<usize> {
        let letters: usize = a.iter().enumerate().map(|(j, &aj)| self.n - j - aj).sum();
        let exp = u32::try_from(letters).ok()?;
        self.cutoff.checked_pow(exp)
    }

    /// Rejects representations above `max_dim`.
    pub fn check_size(&self, a: &[usize]) -> Result<(), CliError> {
        match self.rep_dim(a) {
            Some(d) if d <= self.max_dim => Ok(()),
            d => Err(CliError::Config(format!(
                "a = {a:?} at D = {} needs dimension {} above max_dim = {}; lower D or raise max_dim",
                self.cutoff,
                d.map_or("overflow".to_string(), |d| d.to_string()),
                self.max_dim
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_json_agree() {
        let flat = parse("n = 3\nm = 2 # rows\nq = 0.5\nD = 10\na = (1, 2)\nt = [0.25 0.5]\n").unwrap();
        let json = parse(r#"{"n":3,"m":2,"q":0.5,"D":10,"a":[1,2],"t":[0.25,0.5]}"#).unwrap();
        assert_eq!(flat, json);
        let cfg = flat.resolve(&Overrides::default()).unwrap();
        assert_eq!(cfg.margin, DEFAULT_MARGIN);
        assert_eq!(cfg.cutoff, 10);
    }

    #[test]
    fn cutoff_alias() {
        assert_eq!(parse("cutoff = 9").unwrap().cutoff, Some(9));
        assert_eq!(parse(r#"{"cutoff": 9}"#).unwrap().cutoff, Some(9));
        assert!(parse("D = 9\ncutoff = 9").is_err());
    }

    #[test]
    fn overrides_win() {
        let over = Overrides {
            q: Some(0.3),
            margin: Some(3),
            ..Overrides::default()
        };
        let cfg = parse("n=3\nm=1\nq=0.5").unwrap().resolve(&over).unwrap();
        assert_eq!((cfg.q, cfg.margin), (0.3, 3));
    }

    #[test]
    fn validation() {
        let none = Overrides::default();
        for text in [
            "n=3\nm=3\nq=0.5",
            "n=3\nm=1\nq=1",
            "n=3\nm=1\nq=0.5\nD=3",
            "n=3\nm=1\nq=0.5\nmargin=6",
            "n=3\nm=1\nq=0.5\na=(4)",
            "n=3\nm=1\nq=0.5\nt=1.0",
            "n=3\nm=1\nq=0.5\na=(1,1)",
            "n=3\nm=1\nq=0.5\nbogus=1",
        ] {
            assert!(parse(text).and_then(|r| r.resolve(&none)).is_err(), "{text}");
        }
        assert!(parse("n=9\nm=1\nq=0.5").unwrap().resolve(&none).is_err());
        assert!(parse("m=1\nq=0.5").unwrap().resolve(&none).is_err());
    }

    #[test]
    fn size_guard() {
        let cfg = parse("n=8\nm=1\nq=0.5").unwrap().resolve(&Overrides::default()).unwrap();
        assert_eq!(cfg.rep_dim(&[8]), Some(1));
        assert!(cfg.check_size(&[1]).is_err());
        assert!(cfg.check_size(&[6]).is_ok());
    }
}
