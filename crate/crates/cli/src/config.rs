//! The run configuration: a line-oriented `[section]` / `key = value` format.
//!
//! Reals accept plain literals plus `pi`, `sqrt(x)` and one `*` or `/`
//! between two such atoms (`pi/4`, `2*pi`, `sqrt(43)`). Complex values are
//! written `(re,im)`; a bare real is also accepted. Matrices are four complex
//! values, row-major, separated by whitespace.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pauli_robin::linalg::Complex2x2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },

    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },

    #[error("line {line}: duplicate key `{key}` in [{section}]")]
    DuplicateKey { line: usize, section: String, key: String },

    #[error("line {line}: invalid value for `{key}`: {msg}")]
    Value { line: usize, key: String, msg: String },

    #[error("missing required key `{key}` in [{section}]")]
    Missing { section: &'static str, key: &'static str },

    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

const SECTIONS: &[(&str, &[&str])] = &[
    ("problem", &["half_width", "field", "a_plus", "a_minus"]),
    ("potential", &["breakpoints", "values"]),
    ("search", &["re_min", "re_max", "im_min", "im_max", "tol", "lambda_max"]),
    (
        "sweep",
        &["family", "alpha_min", "alpha_max", "alpha_steps", "beta", "d_plus", "d_minus"],
    ),
    ("grid", &["nx", "ny", "n", "boundary_points"]),
    ("metric", &["alpha", "beta", "c", "n_eigs", "steps", "points"]),
    ("output", &["path", "precision"]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub half_width: f64,
    pub field: f64,
    pub a_plus: Complex2x2,
    pub a_minus: Complex2x2,
    pub potential: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Search {
    pub re_min: Option<f64>,
    pub re_max: Option<f64>,
    pub im_min: Option<f64>,
    pub im_max: Option<f64>,
    pub tol: f64,
    pub lambda_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    ExA,
    ExB,
    ExPT,
    BcEnergy,
    Custom,
}

impl Family {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "exA" => Family::ExA,
            "exB" => Family::ExB,
            "exPT" => Family::ExPT,
            "bc-energy" => Family::BcEnergy,
            "custom" => Family::Custom,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::ExA => "exA",
            Family::ExB => "exB",
            Family::ExPT => "exPT",
            Family::BcEnergy => "bc-energy",
            Family::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub family: Family,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Number of grid intervals; the grid has `alpha_steps + 1` points.
    pub alpha_steps: usize,
    pub beta: f64,
    pub d_plus: Complex2x2,
    pub d_minus: Complex2x2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub n: usize,
    pub boundary_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub n_eigs: usize,
    pub steps: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub path: Option<String>,
    pub precision: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    pub search: Search,
    pub sweep: Option<Sweep>,
    pub grid: Grid,
    pub metric: Option<Metric>,
    pub output: Output,
}

struct Entry {
    line: usize,
    value: String,
}

type Table = BTreeMap<String, BTreeMap<String, Entry>>;

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, None)
}

/// Parses with the sweep family taken from `family` when given, in place of
/// the `[sweep] family` key.
pub fn parse_config_with(text: &str, family: Option<Family>) -> Result<RunConfig> {
    let table = tokenize(text)?;
    let get = |section: &str, key: &str| table.get(section).and_then(|s| s.get(key));

    let real = |section: &str, key: &str| -> Result<Option<f64>> {
        get(section, key).map(|e| parse_real(&e.value).map_err(|msg| value_err(e, key, msg))).transpose()
    };
    let count = |section: &str, key: &str| -> Result<Option<usize>> {
        get(section, key)
            .map(|e| e.value.trim().parse::<usize>().map_err(|err| value_err(e, key, err.to_string())))
            .transpose()
    };
    let matrix = |section: &str, key: &str| -> Result<Option<Complex2x2>> {
        get(section, key).map(|e| parse_matrix(&e.value).map_err(|msg| value_err(e, key, msg))).transpose()
    };
    let list = |section: &str, key: &str| -> Result<Option<Vec<f64>>> {
        get(section, key).map(|e| parse_list(&e.value).map_err(|msg| value_err(e, key, msg))).transpose()
    };

    let half_width = real("problem", "half_width")?.ok_or(ConfigError::Missing {
        section: "problem",
        key: "half_width",
    })?;
    if !(half_width > 0.0) {
        return Err(ConfigError::Invalid(format!("half_width must be positive, got {half_width}")));
    }
    let potential = match (list("potential", "breakpoints")?, list("potential", "values")?) {
        (Some(b), Some(v)) => Some((b, v)),
        (None, None) => None,
        (None, Some(_)) => return Err(ConfigError::Missing { section: "potential", key: "breakpoints" }),
        (Some(_), None) => return Err(ConfigError::Missing { section: "potential", key: "values" }),
    };
    let problem = Problem {
        half_width,
        field: real("problem", "field")?.unwrap_or(0.0),
        a_plus: matrix("problem", "a_plus")?.unwrap_or_else(Complex2x2::zero),
        a_minus: matrix("problem", "a_minus")?.unwrap_or_else(Complex2x2::zero),
        potential,
    };

    let tol = real("search", "tol")?.unwrap_or(1e-10);
    if !(tol > 0.0) {
        return Err(ConfigError::Invalid(format!("tol must be positive, got {tol}")));
    }
    let search = Search {
        re_min: real("search", "re_min")?,
        re_max: real("search", "re_max")?,
        im_min: real("search", "im_min")?,
        im_max: real("search", "im_max")?,
        tol,
        lambda_max: real("search", "lambda_max")?,
    };

    let from_file = get("sweep", "family")
        .map(|e| {
            Family::parse(e.value.trim())
                .ok_or_else(|| value_err(e, "family", "expected one of exA, exB, exPT, bc-energy, custom".into()))
        })
        .transpose()?;
    let sweep = match family.or(from_file) {
        None => {
            if table.get("sweep").is_some_and(|s| !s.is_empty()) {
                return Err(ConfigError::Missing { section: "sweep", key: "family" });
            }
            None
        }
        Some(family) => {
            let need = |key: &'static str, v: Option<f64>| v.ok_or(ConfigError::Missing { section: "sweep", key });
            let alpha_steps = count("sweep", "alpha_steps")?.ok_or(ConfigError::Missing {
                section: "sweep",
                key: "alpha_steps",
            })?;
            if alpha_steps == 0 {
                return Err(ConfigError::Invalid("alpha_steps must be at least 1".into()));
            }
            Some(Sweep {
                family,
                alpha_min: need("alpha_min", real("sweep", "alpha_min")?)?,
                alpha_max: need("alpha_max", real("sweep", "alpha_max")?)?,
                alpha_steps,
                beta: real("sweep", "beta")?.unwrap_or(0.0),
                d_plus: matrix("sweep", "d_plus")?.unwrap_or_else(Complex2x2::zero),
                d_minus: matrix("sweep", "d_minus")?.unwrap_or_else(Complex2x2::zero),
            })
        }
    };

    let grid = Grid {
        nx: count("grid", "nx")?.unwrap_or(41),
        ny: count("grid", "ny")?.unwrap_or(21),
        n: count("grid", "n")?.unwrap_or(400),
        boundary_points: count("grid", "boundary_points")?.unwrap_or(201),
    };

    let metric = if table.contains_key("metric") {
        Some(Metric {
            alpha: real("metric", "alpha")?.unwrap_or(0.0),
            beta: real("metric", "beta")?.unwrap_or(0.0),
            c: real("metric", "c")?.unwrap_or(0.0),
            n_eigs: count("metric", "n_eigs")?.unwrap_or(4),
            steps: count("metric", "steps")?.unwrap_or(4096),
            points: count("metric", "points")?.unwrap_or(400),
        })
    } else {
        None
    };

    let precision = count("output", "precision")?.unwrap_or(17);
    if !(1..=17).contains(&precision) {
        return Err(ConfigError::Invalid(format!("precision must be between 1 and 17, got {precision}")));
    }
    let output = Output {
        path: get("output", "path").map(|e| e.value.trim().to_string()),
        precision,
    };

    Ok(RunConfig {
        problem,
        search,
        sweep,
        grid,
        metric,
        output,
    })
}

fn value_err(e: &Entry, key: &str, msg: String) -> ConfigError {
    ConfigError::Value {
        line: e.line,
        key: key.to_string(),
        msg,
    }
}

fn tokenize(text: &str) -> Result<Table> {
    let mut table = Table::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax {
                    line,
                    msg: format!("malformed section header `{content}`"),
                })?
                .trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::UnknownSection {
                    line,
                    section: name.to_string(),
                });
            }
            table.entry(name.to_string()).or_default();
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            });
        };
        let key = key.trim();
        let Some(sec) = section.as_deref() else {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("key `{key}` appears before any section header"),
            });
        };
        let known = SECTIONS.iter().find(|(s, _)| *s == sec).map_or(&[][..], |(_, k)| *k);
        if !known.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                section: sec.to_string(),
                key: key.to_string(),
            });
        }
        let entries = table.entry(sec.to_string()).or_default();
        if entries.contains_key(key) {
            return Err(ConfigError::DuplicateKey {
                line,
                section: sec.to_string(),
                key: key.to_string(),
            });
        }
        entries.insert(
            key.to_string(),
            Entry {
                line,
                value: value.trim().to_string(),
            },
        );
    }
    Ok(table)
}

fn atom(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix('-') {
        return atom(rest).map(|x| -x);
    }
    let v = if s == "pi" {
        std::f64::consts::PI
    } else if let Some(inner) = s.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let x = atom(inner)?;
        if x < 0.0 {
            return Err(format!("sqrt of negative number {x}"));
        }
        x.sqrt()
    } else {
        s.parse::<f64>().map_err(|_| format!("not a number: `{s}`"))?
    };
    Ok(v)
}

/// A real number: a literal, `pi`, `sqrt(x)`, or one product or quotient
/// of those.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let v = match s.find(['*', '/']) {
        Some(i) if i > 0 => {
            let (l, r) = (atom(&s[..i])?, atom(&s[i + 1..])?);
            if &s[i..=i] == "*" {
                l * r
            } else {
                l / r
            }
        }
        _ => atom(s)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let s = s.trim();
    match s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        Some(inner) => {
            let (re, im) = inner
                .split_once(',')
                .ok_or_else(|| format!("complex value `{s}` needs the form (re,im)"))?;
            Ok(Complex64::new(parse_real(re)?, parse_real(im)?))
        }
        None => Ok(Complex64::new(parse_real(s)?, 0.0)),
    }
}

fn split_values(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut depth = 0usize;
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                current.push(ch);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(ch);
            }
            c if c.is_whitespace() && depth == 0 => {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

pub fn parse_matrix(s: &str) -> std::result::Result<Complex2x2, String> {
    let parts = split_values(s);
    if parts.len() != 4 {
        return Err(format!("a matrix needs four complex values, got {}", parts.len()));
    }
    let v: Vec<Complex64> = parts.iter().map(|p| parse_complex(p)).collect::<std::result::Result<_, _>>()?;
    Ok(Complex2x2::new(v[0], v[1], v[2], v[3]))
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(parse_real).collect()
}
