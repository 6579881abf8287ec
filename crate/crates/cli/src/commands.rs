//! Subcommand implementations. Each returns the complete CSV text so that
//! output is a pure function of the configuration.

use std::fmt::Write as _;

use num_complex::Complex64;
use pauli_robin::error::Error as CoreError;
use pauli_robin::metric::{theta_orthogonality, theta_positivity, MetricParams};
use pauli_robin::model::{families, BoundaryPair, Channel, PiecewisePotential, ProblemSpec};
use pauli_robin::pseudo::pseudospectrum_grid;
use pauli_robin::scattering::{energy_dependent_boundary, pte_solve, PteSolution};
use pauli_robin::spectra::{enclosure, find_eigenvalues, sweep, SearchRegion};
use pauli_robin::symmetry::{classify, DEFAULT_SYMMETRY_TOL};
use sha2::{Digest, Sha256};

use crate::config::{parse_config_with, ConfigError, Family, RunConfig, Search, Sweep};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Classify,
    Spectrum,
    Sweep,
    Enclosure,
    Pseudospectrum,
    Pte,
    Metric,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),

    #[error("numerical failure: {0}")]
    Numerical(CoreError),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Numerical(_) => 2,
            RunError::Config(_) | RunError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidInput(msg) => RunError::Config(ConfigError::Invalid(msg)),
            CoreError::PotentialPresent => RunError::Config(ConfigError::Invalid(
                "this subcommand needs a problem without [potential]".into(),
            )),
            other => RunError::Numerical(other),
        }
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// Parses `text` and runs `cmd`, returning the CSV output.
pub fn run(cmd: Subcommand, text: &str, family: Option<Family>) -> Result<String> {
    let cfg = parse_config_with(text, family)?;
    let mut out = Csv::new(text, cfg.output.precision);
    match cmd {
        Subcommand::Classify => run_classify(&cfg, &mut out)?,
        Subcommand::Spectrum => run_spectrum(&cfg, &mut out)?,
        Subcommand::Sweep => run_sweep(&cfg, &mut out)?,
        Subcommand::Enclosure => run_enclosure(&cfg, &mut out)?,
        Subcommand::Pseudospectrum => run_pseudospectrum(&cfg, &mut out)?,
        Subcommand::Pte => run_pte(&cfg, &mut out)?,
        Subcommand::Metric => run_metric(&cfg, &mut out)?,
    }
    Ok(out.text)
}

struct Csv {
    text: String,
    precision: usize,
}

impl Csv {
    fn new(config: &str, precision: usize) -> Self {
        let digest = Sha256::digest(config.as_bytes());
        let mut text = String::from("# config-sha256 ");
        for byte in digest {
            let _ = write!(text, "{byte:02x}");
        }
        text.push('\n');
        Self { text, precision }
    }

    fn header(&mut self, columns: &str) {
        self.text.push_str(columns);
        self.text.push('\n');
    }

    fn comment(&mut self, line: &str) {
        let _ = writeln!(self.text, "# {line}");
    }

    fn num(&self, x: f64) -> String {
        format!("{:.*e}", self.precision - 1, x)
    }

    fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }
}

fn base_spec(cfg: &RunConfig, boundary: BoundaryPair) -> Result<ProblemSpec> {
    let spec = ProblemSpec::new(cfg.problem.half_width, cfg.problem.field, boundary)?;
    Ok(match &cfg.problem.potential {
        Some((breakpoints, values)) => {
            spec.with_potential(PiecewisePotential::new(breakpoints.clone(), values.clone())?)?
        }
        None => spec,
    })
}

fn problem_spec(cfg: &RunConfig) -> Result<ProblemSpec> {
    base_spec(cfg, BoundaryPair::new(cfg.problem.a_plus, cfg.problem.a_minus)?)
}

fn sweep_pair(cfg: &RunConfig, sw: &Sweep, alpha: f64) -> BoundaryPair {
    match sw.family {
        Family::ExA => families::hermitian_coupling(alpha),
        Family::ExB => families::scalar_imaginary(alpha, sw.beta),
        Family::ExPT => families::symmetric_coupling(alpha),
        Family::BcEnergy => energy_dependent_boundary(alpha, cfg.problem.field),
        Family::Custom => {
            let s = Complex64::new(alpha, 0.0);
            BoundaryPair {
                a_plus: cfg.problem.a_plus + sw.d_plus * s,
                a_minus: cfg.problem.a_minus + sw.d_minus * s,
            }
        }
    }
}

/// The search window: explicit bounds where given, otherwise the left end
/// of the enclosure, `lambda_max`, and the enclosure height at the right end.
fn window(search: &Search, specs: &[ProblemSpec]) -> Result<SearchRegion> {
    let re_max = search.re_max.or(search.lambda_max).ok_or(ConfigError::Missing {
        section: "search",
        key: "lambda_max",
    })?;
    let encs: Vec<_> = specs.iter().map(enclosure).collect();
    let re_min = search
        .re_min
        .unwrap_or_else(|| -encs.iter().map(|e| e.c_const).fold(0.0, f64::max));
    let height = encs
        .iter()
        .map(|e| e.upper_boundary(re_max).unwrap_or(0.0))
        .fold(0.0, f64::max)
        .max(1.0);
    Ok(SearchRegion::new(
        re_min,
        re_max,
        search.im_min.unwrap_or(-height),
        search.im_max.unwrap_or(height),
    )?)
}

fn run_classify(cfg: &RunConfig, out: &mut Csv) -> Result<()> {
    let report = classify(&BoundaryPair::new(cfg.problem.a_plus, cfg.problem.a_minus)?, DEFAULT_SYMMETRY_TOL);
    out.header("flag,value");
    for (name, value) in report.flags() {
        out.row(&[name.to_string(), value.to_string()]);
    }
    Ok(())
}

fn run_spectrum(cfg: &RunConfig, out: &mut Csv) -> Result<()> {
    let spec = problem_spec(cfg)?;
    let region = window(&cfg.search, std::slice::from_ref(&spec))?;
    let ev = find_eigenvalues(&spec, &region, cfg.search.tol)?;
    out.header("re_lambda,im_lambda,alg_mult,geom_mult,residual");
    for e in ev {
        let row = [
            out.num(e.lambda.re),
            out.num(e.lambda.im),
            e.algebraic_mult.to_string(),
            e.geometric_mult.to_string(),
            out.num(e.residual),
        ];
        out.row(&row);
    }
    Ok(())
}

fn alpha_grid(sw: &Sweep) -> Vec<f64> {
    (0..=sw.alpha_steps)
        .map(|i| sw.alpha_min + (sw.alpha_max - sw.alpha_min) * i as f64 / sw.alpha_steps as f64)
        .collect()
}

fn run_sweep(cfg: &RunConfig, out: &mut Csv) -> Result<()> {
    let sw = cfg.sweep.as_ref().ok_or(ConfigError::Missing {
        section: "sweep",
        key: "family",
    })?;
    let alphas = alpha_grid(sw);
    let template = problem_spec(cfg)?;
    let specs: Vec<ProblemSpec> = alphas.iter().map(|&a| template.with_boundary(sweep_pair(cfg, sw, a))).collect();
    let region = window(&cfg.search, &specs)?;
    let result = sweep(|a| sweep_pair(cfg, sw, a), &template, &alphas, &region, cfg.search.tol)?;

    out.comment(&format!("family {}", sw.family.name()));
    out.header("alpha,branch_id,re_lambda,im_lambda,event");
    for (k, &alpha) in alphas.iter().enumerate() {
        for (id, z) in result.values_at(k) {
            let events: Vec<&str> = result
                .events
                .iter()
                .filter(|e| e.alpha_interval.1 == alpha && (e.branches.0 == id || e.branches.1 == id))
                .map(|e| e.kind.as_str())
                .collect();
            let row = [out.num(alpha), id.to_string(), out.num(z.re), out.num(z.im), events.join(";")];
            out.row(&row);
        }
    }
    Ok(())
}

fn run_enclosure(cfg: &RunConfig, out: &mut Csv) -> Result<()> {
    let spec = problem_spec(cfg)?;
    let enc = enclosure(&spec);
    let re_max = cfg.search.re_max.or(cfg.search.lambda_max).ok_or(ConfigError::Missing {
        section: "search",
        key: "lambda_max",
    })?;
    let n = cfg.grid.boundary_points.max(2);
    out.comment(&format!(
        "c_const {} slope {} offset {}",
        out.num(enc.c_const),
        out.num(enc.slope),
        out.num(enc.offset)
    ));
    out.header("re_z,im_z_boundary");
    for i in 0..n {
        let re = -enc.c_const + (re_max + enc.c_const) * i as f64 / (n - 1) as f64;
        if let Some(im) = enc.upper_boundary(re) {
            let row = [out.num(re), out.num(im)];
            out.row(&row);
        }
    }
    Ok(())
}

fn run_pseudospectrum(cfg: &RunConfig, out: &mut Csv) -> Result<()> {
    let spec = problem_spec(cfg)?;
    let region = window(&cfg.search, std::slice::from_ref(&spec))?;
    let table = pseudospectrum_grid(&spec, &region, cfg.grid.nx, cfg.grid.ny, cfg.grid.n)?;
    out.header("re_z,im_z,sigma_min");
    for p in table {
        let row = [out.num(p.z.re), out.num(p.z.im), out.num(p.sigma_min)];
        out.row(&row);
    }
    Ok(())
}

fn run_pte(cfg: &RunConfig, out: &mut Csv) -> Result<()> {
    let spec = problem_spec(cfg)?;
    let lambda_max = cfg.search.lambda_max.ok_or(ConfigError::Missing {
        section: "search",
        key: "lambda_max",
    })?;
    let solution = pte_solve(&spec, lambda_max, cfg.search.tol)?;
    out.header("lambda_star,channel,branch,residual");
    match solution {
        PteSolution::EveryEnergy => out.comment("no potential: every energy transmits perfectly"),
        PteSolution::Energies(records) => {
            for r in records {
                let channel = match r.channel {
                    Channel::Plus => "+",
                    Channel::Minus => "-",
                };
                let row = [out.num(r.lambda_star), channel.to_string(), r.branch.to_string(), out.num(r.residual)];
                out.row(&row);
            }
        }
    }
    Ok(())
}

fn run_metric(cfg: &RunConfig, out: &mut Csv) -> Result<()> {
    let m = cfg.metric.ok_or(ConfigError::Missing {
        section: "metric",
        key: "alpha",
    })?;
    let params = MetricParams::new(m.alpha, m.beta, m.c, cfg.problem.half_width)?;
    let spec = problem_spec(cfg)?;
    let gram = theta_orthogonality(&spec, &params, m.n_eigs, m.steps)?;
    let positivity = theta_positivity(&params, m.points)?;

    out.comment(&format!("theta_positive {}", positivity.positive));
    out.comment(&format!("theta_smallest_eigenvalue {}", out.num(positivity.smallest_eigenvalue)));
    out.comment(&format!("refinement_consistent {}", positivity.refinement_consistent));
    out.header("m,n,lambda_m,lambda_n,re_inner,im_inner");
    for (i, row) in gram.gram.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let fields = [
                i.to_string(),
                j.to_string(),
                out.num(gram.eigenvalues[i]),
                out.num(gram.eigenvalues[j]),
                out.num(v.re),
                out.num(v.im),
            ];
            out.row(&fields);
        }
    }
    Ok(())
}
