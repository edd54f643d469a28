//! Reference Monte-Carlo solves, error metrics and experiment orchestration.

pub mod config;
mod selftest;

pub use config::ExperimentConfig;
pub use selftest::{selftest, SelfCheck};

use crate::error::{Error, Result};
use crate::fem::{assemble_load_fn, assemble_load_p0, LocalProblem};
use crate::field::{restrict_field, sample_field, FieldLaw, Purpose, SeedScheme};
use crate::grid::{project_p0, GridSpec, Level, MeshRegion, P0Function};
use crate::slod::{assemble_coarse_solution, build_model, compute_crb, sigma_overall, CoarseModel};
use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

/// Right-hand side of the model problem.
#[derive(Clone, Debug, PartialEq)]
pub enum Rhs {
    /// `2 pi^2 prod_j sin(pi x_j)`.
    SinPi,
    /// `2 pi^2 prod_j sin(x_j)`.
    Sin,
    /// Constant one.
    One,
    /// Piecewise constant on the elements of its level.
    P0(P0Function),
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::SinPi => write!(f, "sinpi"),
            Rhs::Sin => write!(f, "sin"),
            Rhs::One => write!(f, "one"),
            Rhs::P0(p) => {
                let v: Vec<String> = p.values.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "p0:{}:{}:{}", p.d, p.log, v.join(";"))
            }
        }
    }
}

impl std::str::FromStr for Rhs {
    type Err = Error;
    /// `sinpi`, `sin`, `one`, or `p0:<d>:<level>:<v0>;<v1>;...`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinpi" => Ok(Rhs::SinPi),
            "sin" => Ok(Rhs::Sin),
            "one" => Ok(Rhs::One),
            _ => {
                let bad = || Error::Config(format!("invalid right-hand side '{s}'"));
                let rest = s.strip_prefix("p0:").ok_or_else(bad)?;
                let mut it = rest.splitn(3, ':');
                let d: usize = it.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
                let log: u32 = it.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
                let values: Vec<f64> = it
                    .next()
                    .ok_or_else(bad)?
                    .split(';')
                    .map(|x| x.trim().parse().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
                if !(1..=2).contains(&d) || values.len() != 1usize << (log as usize * d) {
                    return Err(bad());
                }
                Ok(Rhs::P0(P0Function::new(d, log, values)))
            }
        }
    }
}

/// Pointwise evaluation of a right-hand side in dimension `d`.
pub fn rhs_function(rhs: &Rhs, d: usize) -> impl Fn([f64; 2]) -> f64 + '_ {
    move |x: [f64; 2]| match rhs {
        Rhs::SinPi => 2.0 * PI * PI * (0..d).map(|k| (PI * x[k]).sin()).product::<f64>(),
        Rhs::Sin => 2.0 * PI * PI * (0..d).map(|k| x[k].sin()).product::<f64>(),
        Rhs::One => 1.0,
        Rhs::P0(p) => {
            let n = 1usize << p.log;
            let idx = |t: f64| ((t * n as f64) as usize).min(n - 1);
            if p.d == 1 {
                p.values[idx(x[0])]
            } else {
                p.values[idx(x[0]) * n + idx(x[1])]
            }
        }
    }
}

impl Rhs {
    fn check_dim(&self, d: usize) -> Result<()> {
        match self {
            Rhs::P0(p) if p.d != d => Err(Error::Config("piecewise constant right-hand side has the wrong dimension".into())),
            _ => Ok(()),
        }
    }

    /// Fine load vector on the whole domain: exact for piecewise constants,
    /// cellwise midpoint rule otherwise.
    pub fn load(&self, region: &MeshRegion) -> Result<Vec<f64>> {
        match self {
            Rhs::P0(p) => {
                let fine = refine(p, region.log_fine())?;
                assemble_load_p0(region, fine.log, &fine.values)
            }
            _ => Ok(assemble_load_fn(region, rhs_function(self, region.dim()))),
        }
    }

    /// `Π_H f` at level `log`, using the same cellwise midpoint values as
    /// [`load`](Self::load) for smooth right-hand sides.
    pub fn project(&self, d: usize, log_fine: u32, log: u32) -> Result<P0Function> {
        self.check_dim(d)?;
        match self {
            Rhs::P0(p) if p.log >= log => p.project(log),
            Rhs::P0(p) => refine(p, log),
            _ => {
                let n = 1usize << log_fine;
                let region = MeshRegion::new(d, log_fine, [0, 0], [n, n]);
                let f = rhs_function(self, d);
                let mid: Vec<f64> = (0..region.num_cells()).map(|c| f(region.cell_midpoint(c))).collect();
                P0Function::new(d, log_fine, mid).project(log)
            }
        }
    }
}

/// Piecewise constant `p` represented on a finer level.
fn refine(p: &P0Function, log: u32) -> Result<P0Function> {
    if log < p.log {
        return Err(Error::Config("cannot refine onto a coarser level".into()));
    }
    let r = 1usize << (log - p.log);
    let n = 1usize << log;
    let src = 1usize << p.log;
    let values = if p.d == 1 {
        (0..n).map(|i| p.values[i / r]).collect()
    } else {
        (0..n * n).map(|k| p.values[(k / n / r) * src + (k % n) / r]).collect()
    };
    Ok(P0Function::new(p.d, log, values))
}

/// Streamed moments of projected reference solutions against a set of
/// candidate coarse solutions.
#[derive(Clone, Debug)]
pub struct ReferenceAccumulator {
    levels: Vec<u32>,
    targets: Vec<(usize, P0Function)>,
    count: usize,
    mean: Vec<P0Function>,
    norm_sq: Vec<f64>,
    diff_sq: Vec<f64>,
}

impl ReferenceAccumulator {
    /// `targets` are coarse solutions; each is compared at its own level.
    pub fn new(d: usize, targets: Vec<P0Function>) -> Self {
        let mut levels: Vec<u32> = targets.iter().map(|t| t.log).collect();
        levels.sort_unstable();
        levels.dedup();
        let targets: Vec<(usize, P0Function)> = targets
            .into_iter()
            .map(|t| (levels.binary_search(&t.log).expect("level present"), t))
            .collect();
        ReferenceAccumulator {
            mean: levels.iter().map(|&l| P0Function::zeros(d, l)).collect(),
            norm_sq: vec![0.0; levels.len()],
            diff_sq: vec![0.0; targets.len()],
            levels,
            targets,
            count: 0,
        }
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Adds one sample given its projection on every level of
    /// [`levels`](Self::levels).
    pub fn add(&mut self, projections: &[P0Function]) {
        assert_eq!(projections.len(), self.levels.len(), "one projection per level");
        self.count += 1;
        let k = self.count as f64;
        for (i, p) in projections.iter().enumerate() {
            let w = p.element_measure();
            self.norm_sq[i] += p.values.iter().map(|v| v * v).sum::<f64>() * w;
            for (m, v) in self.mean[i].values.iter_mut().zip(&p.values) {
                *m += (v - *m) / k;
            }
        }
        for (j, (li, t)) in self.targets.iter().enumerate() {
            let p = &projections[*li];
            let w = p.element_measure();
            self.diff_sq[j] += p.values.iter().zip(&t.values).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * w;
        }
    }

    /// Sample mean of the projections at a level index.
    pub fn mean(&self, level: usize) -> &P0Function {
        &self.mean[level]
    }

    /// `sqrt(mean |u_i - ubar|^2) / sqrt(mean |u_i|^2)` for target `j`.
    pub fn relative_error(&self, j: usize) -> Result<f64> {
        let (li, _) = self.targets[j];
        let den = self.norm_sq[li];
        if !(den > 0.0) || self.count == 0 {
            return Err(Error::Degenerate("reference solutions have zero norm".into()));
        }
        let m = self.count as f64;
        Ok((self.diff_sq[j] / m).sqrt() / (den / m).sqrt())
    }
}

/// Relative `L^2(Ω; L^2(D))` error of target `j` of a finalized accumulator.
pub fn relative_error(acc: &ReferenceAccumulator, j: usize) -> Result<f64> {
    acc.relative_error(j)
}

/// Inputs of a reference stream.
#[derive(Clone, Debug)]
pub struct ReferenceSetup<'a> {
    pub d: usize,
    pub log_eps: u32,
    pub log_h: u32,
    pub law: &'a FieldLaw,
    pub rhs: &'a Rhs,
    pub samples: usize,
    pub seed: u64,
    pub threads: usize,
}

/// One global fine solve projected on every requested level.
fn reference_sample(setup: &ReferenceSetup, spec: &GridSpec, region: &MeshRegion, load: &[f64], levels: &[u32], i: usize) -> Result<Vec<P0Function>> {
    let seeds = SeedScheme::new(setup.seed, Purpose::Reference);
    let field = sample_field(spec, setup.law, &seeds, i as u64)?;
    let coeff = restrict_field(&field, region)?;
    let u = LocalProblem::assemble(region, &coeff)?.solve(load)?;
    levels.iter().map(|&l| project_p0(region, &u.values, l)).collect()
}

/// Streams `setup.samples` projected reference solutions into `acc`, in
/// sample order regardless of the thread count.
pub fn reference_stream(setup: &ReferenceSetup, acc: &mut ReferenceAccumulator) -> Result<()> {
    use rayon::prelude::*;
    let spec = GridSpec::new(setup.d, 1.min(setup.log_eps), setup.log_eps, setup.log_h)?;
    let region = spec.domain_region();
    let load = setup.rhs.load(&region)?;
    let levels = acc.levels().to_vec();
    let chunk = if setup.threads == 1 { 1 } else { 4 * rayon::current_num_threads().max(setup.threads) };
    let mut start = 0;
    while start < setup.samples {
        let end = (start + chunk).min(setup.samples);
        let batch: Vec<Result<Vec<P0Function>>> = crate::slod::with_pool(setup.threads, || {
            (start..end)
                .into_par_iter()
                .map(|i| reference_sample(setup, &spec, &region, &load, &levels, i).map_err(|e| e.at_sample(i)))
                .collect()
        })?;
        for r in batch {
            acc.add(&r?);
        }
        start = end;
    }
    Ok(())
}

/// Which quantities a study computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Study {
    /// Models, coarse solutions and reference errors.
    Convergence,
    /// Localization indicators and Riesz constants only.
    Indicators,
}

/// One admissible combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Combination {
    pub log_coarse: u32,
    pub log_eps: u32,
    pub ell: usize,
}

/// Admissible combinations in canonical order (eps, then H, then ell, each
/// as listed): `H > eps` unless admitted explicitly, nested levels, and no
/// patch equal to the whole domain.
pub fn admissible(config: &ExperimentConfig) -> Vec<Combination> {
    let mut out = Vec::new();
    for &le in &config.log_eps {
        for &lc in &config.log_coarse {
            for &ell in &config.ell {
                let coarse_ok = if config.admit_coarse_le_eps { lc <= le } else { lc < le };
                if !coarse_ok || lc < 1 || le > config.log_h {
                    continue;
                }
                let Ok(spec) = GridSpec::new(config.d, lc, le, config.log_h) else { continue };
                if !spec.admits_ell(ell) {
                    continue;
                }
                out.push(Combination { log_coarse: lc, log_eps: le, ell });
            }
        }
    }
    out
}

/// One output row.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub d: usize,
    pub combination: Combination,
    pub log_h: u32,
    pub samples: usize,
    pub m_factor: usize,
    pub p: f64,
    pub r: u32,
    pub seed: u64,
    pub sigma: f64,
    pub crb: f64,
    pub rel_error: Option<f64>,
    pub expansion_residual: Option<f64>,
    pub wall_time: f64,
    pub warnings: Vec<String>,
}

impl ErrorRow {
    pub fn coarse_size(&self) -> f64 {
        (-(self.combination.log_coarse as f64)).exp2()
    }

    pub fn eps(&self) -> f64 {
        (-(self.combination.log_eps as f64)).exp2()
    }
}

/// Output of a study.
#[derive(Clone, Debug)]
pub struct Report {
    pub rows: Vec<ErrorRow>,
    pub csv: String,
    pub sidecar: String,
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

const CSV_HEADER: &str = "d,H,eps,h,ell,M,m_factor,p,r,seed,sigma,crb";

/// CSV text: header then one row per combination, 17 significant digits.
pub fn write_csv(rows: &[ErrorRow], study: Study) -> String {
    let mut s = String::from(CSV_HEADER);
    if study == Study::Convergence {
        s.push_str(",rel_error");
    }
    s.push('\n');
    for r in rows {
        let fields = [
            r.d.to_string(),
            sci(r.coarse_size()),
            sci(r.eps()),
            sci((-(r.log_h as f64)).exp2()),
            r.combination.ell.to_string(),
            r.samples.to_string(),
            r.m_factor.to_string(),
            sci(r.p),
            r.r.to_string(),
            r.seed.to_string(),
            sci(r.sigma),
            sci(r.crb),
        ];
        s.push_str(&fields.join(","));
        if study == Study::Convergence {
            s.push(',');
            s.push_str(&sci(r.rel_error.unwrap_or(f64::NAN)));
        }
        s.push('\n');
    }
    s
}

fn sidecar(config: &ExperimentConfig, rows: &[ErrorRow], study: Study) -> String {
    let rows: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "log_H": r.combination.log_coarse,
                "log_eps": r.combination.log_eps,
                "ell": r.combination.ell,
                "wall_time_s": r.wall_time,
                "expansion_residual": r.expansion_residual,
                "warnings": r.warnings,
            })
        })
        .collect();
    let v = serde_json::json!({
        "config_hash": config.hash(),
        "objective": config.sampling.objective.as_str(),
        "source": config.source.as_str(),
        "study": match study { Study::Convergence => "convergence", Study::Indicators => "indicators" },
        "version": env!("CARGO_PKG_VERSION"),
        "rows": rows,
    });
    format!("{v}\n")
}

/// Builds the model of one combination.
pub fn build_combination(config: &ExperimentConfig, c: Combination, study: Study) -> Result<CoarseModel> {
    let spec = GridSpec::new(config.d, c.log_coarse, c.log_eps, config.log_h)?;
    let mut opts = config.model_options();
    opts.skip_responses = study == Study::Indicators;
    if let Some(dir) = &config.cache_dir {
        opts.cache_dir = Some(dir.join(format!("d{}_H{}_e{}_h{}_l{}", config.d, c.log_coarse, c.log_eps, config.log_h, c.ell)));
    }
    build_model(&spec, c.ell, &config.law, &config.sampling, &opts, config.seed)
}

/// Runs all admissible combinations and returns rows in canonical order.
pub fn run_study(config: &ExperimentConfig, study: Study) -> Result<Report> {
    config.validate()?;
    config.rhs.check_dim(config.d)?;
    let combos = admissible(config);
    let mut rows = Vec::with_capacity(combos.len());
    let mut i = 0;
    while i < combos.len() {
        let le = combos[i].log_eps;
        let group: Vec<Combination> = combos[i..].iter().take_while(|c| c.log_eps == le).copied().collect();
        i += group.len();
        let mut solutions = Vec::new();
        for c in &group {
            let t0 = Instant::now();
            let model = build_combination(config, *c, study)?;
            let crb = compute_crb(&model)?;
            let mut row = ErrorRow {
                d: config.d,
                combination: *c,
                log_h: config.log_h,
                samples: config.sampling.samples,
                m_factor: config.sampling.m_factor,
                p: config.sampling.p,
                r: config.sampling.r,
                seed: config.seed,
                sigma: sigma_overall(&model),
                crb,
                rel_error: None,
                expansion_residual: None,
                wall_time: 0.0,
                warnings: model.warnings.clone(),
            };
            if study == Study::Convergence {
                let f = config.rhs.project(config.d, config.log_h, c.log_coarse)?;
                let sol = assemble_coarse_solution(&model, &f)?;
                row.expansion_residual = Some(sol.expansion_residual);
                solutions.push(sol.ubar);
            }
            row.wall_time = t0.elapsed().as_secs_f64();
            log::info!(
                "H=2^-{} eps=2^-{} ell={}: sigma={:e} C_rb={:e} ({:.1}s)",
                c.log_coarse, c.log_eps, c.ell, row.sigma, row.crb, row.wall_time
            );
            rows.push(row);
        }
        if study == Study::Convergence {
            let t0 = Instant::now();
            let mut acc = ReferenceAccumulator::new(config.d, solutions);
            let setup = ReferenceSetup {
                d: config.d,
                log_eps: le,
                log_h: config.log_h,
                law: &config.law,
                rhs: &config.rhs,
                samples: config.m_reference,
                seed: config.seed,
                threads: config.threads,
            };
            reference_stream(&setup, &mut acc)?;
            let base = rows.len() - group.len();
            let share = t0.elapsed().as_secs_f64() / group.len() as f64;
            for j in 0..group.len() {
                rows[base + j].rel_error = Some(acc.relative_error(j)?);
                rows[base + j].wall_time += share;
            }
        }
    }
    let csv = write_csv(&rows, study);
    let sidecar = sidecar(config, &rows, study);
    if let Some(out) = &config.output {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(out, &csv)?;
        let mut meta = out.clone().into_os_string();
        meta.push(".meta.json");
        std::fs::write(meta, &sidecar)?;
    }
    Ok(Report { rows, csv, sidecar })
}

/// Full error report: models, coarse solutions and reference errors.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    run_study(config, Study::Convergence)
}

/// Ordinary least squares slope of `log2 y` against `log2 x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Config("slope fit needs at least two points".into()));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return Err(Error::Config("slope fit needs positive values".into()));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.log2()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("slope fit needs distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Columns usable in [`fit_slope_rows`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    CoarseSize,
    Eps,
    Sigma,
    Crb,
    RelError,
}

fn column(r: &ErrorRow, c: Column) -> f64 {
    match c {
        Column::CoarseSize => r.coarse_size(),
        Column::Eps => r.eps(),
        Column::Sigma => r.sigma,
        Column::Crb => r.crb,
        Column::RelError => r.rel_error.unwrap_or(f64::NAN),
    }
}

/// [`fit_slope`] over two columns of report rows.
pub fn fit_slope_rows(rows: &[ErrorRow], x: Column, y: Column) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (column(r, x), column(r, y))).collect();
    fit_slope(&pts)
}

/// Level of the coarse mesh of a model.
pub fn coarse_level(model: &CoarseModel) -> u32 {
    model.spec.log(Level::Coarse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let f = rhs_function(&Rhs::SinPi, 1);
        assert!((f([0.5, 0.0]) - 2.0 * PI * PI).abs() < 1e-13);
        assert_eq!(f([0.0, 0.0]), 0.0);
        assert_eq!(rhs_function(&Rhs::One, 2)([0.3, 0.7]), 1.0);
        let g = rhs_function(&Rhs::SinPi, 2);
        assert!((g([0.5, 0.5]) - 2.0 * PI * PI).abs() < 1e-13);
        for s in ["sinpi", "sin", "one", "p0:1:1:0.5;2.0"] {
            assert_eq!(s.parse::<Rhs>().unwrap().to_string(), s);
        }
        assert!("p0:1:1:0.5".parse::<Rhs>().is_err());
    }

    #[test]
    fn slope_examples() {
        let xs = [0.5, 0.25, 0.125, 0.0625];
        assert!((fit_slope(&xs.map(|x| (x, x))).unwrap() - 1.0).abs() < 1e-14);
        assert!((fit_slope(&xs.map(|x| (x, x * x))).unwrap() - 2.0).abs() < 1e-14);
        // log2 points (0,0), (1,1), (2,3): slope = sum dx dy / sum dx^2 = 3/2.
        let s = fit_slope(&[(1.0, 1.0), (2.0, 2.0), (4.0, 8.0)]).unwrap();
        assert!((s - 1.5).abs() < 1e-14);
        assert!(fit_slope(&[(1.0, 0.0), (2.0, 1.0)]).is_err());
        assert!(fit_slope(&[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn two_sample_accumulator() {
        let ubar = P0Function::new(1, 1, vec![1.0, 0.0]);
        let mut acc = ReferenceAccumulator::new(1, vec![ubar]);
        acc.add(&[P0Function::new(1, 1, vec![1.0, 1.0])]);
        acc.add(&[P0Function::new(1, 1, vec![3.0, 0.0])]);
        // |u1 - ubar|^2 = 1/2, |u2 - ubar|^2 = 2; |u1|^2 = 1, |u2|^2 = 9/2.
        let expected = (2.5f64 / 2.0).sqrt() / (5.5f64 / 2.0).sqrt();
        assert!((acc.relative_error(0).unwrap() - expected).abs() < 1e-15);
        assert_eq!(acc.mean(0).values, vec![2.0, 0.5]);
    }

    #[test]
    fn zero_target_has_unit_error() {
        let mut acc = ReferenceAccumulator::new(1, vec![P0Function::zeros(1, 2)]);
        acc.add(&[P0Function::new(1, 2, vec![1.0, -2.0, 0.5, 3.0])]);
        acc.add(&[P0Function::new(1, 2, vec![0.0, 1.0, 0.0, 0.0])]);
        assert!((acc.relative_error(0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn admissibility_filter() {
        let mut c = ExperimentConfig {
            d: 2,
            log_h: 7,
            log_coarse: vec![2, 3, 4],
            log_eps: vec![3, 5],
            ell: vec![1, 2],
            ..Default::default()
        };
        let got: Vec<(u32, u32, usize)> = admissible(&c).iter().map(|x| (x.log_coarse, x.log_eps, x.ell)).collect();
        // H = 1/4 with ell = 2 spans the domain; H >= eps is excluded.
        assert_eq!(got, vec![(2, 3, 1), (2, 5, 1), (3, 5, 1), (3, 5, 2), (4, 5, 1), (4, 5, 2)]);
        c.log_coarse = vec![];
        assert!(admissible(&c).is_empty());
        assert_eq!(write_csv(&[], Study::Convergence).lines().count(), 1);
    }

    #[test]
    fn rhs_projection_matches_load_quadrature() {
        let f = Rhs::One.project(2, 5, 2).unwrap();
        assert!(f.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let p = Rhs::P0(P0Function::new(1, 1, vec![1.0, 3.0]));
        assert_eq!(p.project(1, 4, 2).unwrap().values, vec![1.0, 1.0, 3.0, 3.0]);
        assert_eq!(p.project(1, 4, 0).unwrap().values, vec![2.0]);
    }
}
