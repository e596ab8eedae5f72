//! Monte Carlo sweeps over simulated processes and report tables.

use std::cmp::Ordering;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::art::{art_test, ArtConfig, ArtFlavor};
use crate::bootstrap::{run_test, BootstrapConfig, Method};
use crate::bounds::{default_block_size, pbar};
use crate::dgp::{generate, CovariateLaw, DgpSpec, ErrorLaw, Model, DEFAULT_BURN_IN};
use crate::error::{Error, Result};
use crate::marginal::StatKind;
use crate::rng;
use crate::weights::WeightScheme;

/// Environment variable that overrides the configured worker count.
pub const WORKERS_ENV: &str = "MSCREEN_WORKERS";

/// Default cap on the working-set estimate of a sweep.
pub const DEFAULT_MEMORY_LIMIT: u64 = 4 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestKind {
    MaxDwb,
    MaxPwb,
    AveDwb,
    AvePwb,
    /// Max-statistic with least-squares standard-error weights, PWB.
    MaxT,
    /// Ave-statistic with least-squares standard-error weights, PWB.
    AveT,
    Art,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::MaxDwb => "MaxDwb",
            TestKind::MaxPwb => "MaxPwb",
            TestKind::AveDwb => "AveDwb",
            TestKind::AvePwb => "AvePwb",
            TestKind::MaxT => "MaxT",
            TestKind::AveT => "AveT",
            TestKind::Art => "Art",
        }
    }
}

/// A process template; `n`, `p` and the seed are filled in per cell and rep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpTemplate {
    pub model: Model,
    pub error: ErrorLaw,
    pub covariate: CovariateLaw,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

impl DgpTemplate {
    pub fn new(model: Model, error: ErrorLaw, covariate: CovariateLaw) -> Self {
        Self {
            model,
            error,
            covariate,
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

/// Covariate dimension: a fixed count, or the grid maximum `p̄ₙ` for the
/// cell's sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PDim {
    Fixed(usize),
    Named(PNamed),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PNamed {
    Pbar,
}

impl PDim {
    pub fn resolve(self, n: usize) -> Result<usize> {
        match self {
            PDim::Fixed(p) => Ok(p),
            PDim::Named(PNamed::Pbar) => pbar(n),
        }
    }
}

impl From<usize> for PDim {
    fn from(p: usize) -> Self {
        PDim::Fixed(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub tests: Vec<TestKind>,
    pub dgp_grid: Vec<DgpTemplate>,
    pub n_grid: Vec<usize>,
    pub p_grid: Vec<PDim>,
    pub mc_reps: usize,
    pub bootstrap_reps: usize,
    pub alpha: f64,
    pub master_seed: u64,
    /// Worker threads; `None` uses every core.
    #[serde(default)]
    pub workers: Option<usize>,
    /// ART tuning draws; defaults to `bootstrap_reps`.
    #[serde(default)]
    pub art_tuning_reps: Option<usize>,
    /// DWB/PWB block length; `None` uses `5·round(n^{1/6})`.
    #[serde(default)]
    pub block_size: Option<usize>,
    #[serde(default = "default_memory_limit")]
    pub memory_limit_bytes: u64,
}

fn default_memory_limit() -> u64 {
    DEFAULT_MEMORY_LIMIT
}

impl Default for ExperimentSpec {
    /// The full simulation grid: every model variant under both error laws
    /// and all covariate laws, `n ∈ {100, 200, 400}`,
    /// `p ∈ {10, 50, 100, 175, p̄ₙ}`.
    fn default() -> Self {
        let models = [
            Model::I,
            Model::Ii { phi1: 0.15 },
            Model::Ii { phi1: 0.25 },
            Model::Iii { varphi: 0.0 },
            Model::Iii { varphi: 0.15 },
            Model::Iii { varphi: 0.5 },
            Model::Iv { varphi: 0.25 },
            Model::Iv { varphi: 0.5 },
            Model::V { varphi: 0.1 },
            Model::V { varphi: 0.15 },
        ];
        let covs = [
            CovariateLaw::C1 { gamma: 0.0 },
            CovariateLaw::C1 { gamma: 0.5 },
            CovariateLaw::C1 { gamma: 0.8 },
            CovariateLaw::C2,
        ];
        let mut dgp_grid = Vec::new();
        for m in &models {
            for e in [ErrorLaw::E1, ErrorLaw::E2] {
                for c in covs {
                    dgp_grid.push(DgpTemplate::new(m.clone(), e, c));
                }
            }
        }
        Self {
            tests: vec![TestKind::MaxPwb, TestKind::AvePwb, TestKind::Art],
            dgp_grid,
            n_grid: vec![100, 200, 400],
            p_grid: vec![10.into(), 50.into(), 100.into(), 175.into(), PDim::Named(PNamed::Pbar)],
            mc_reps: 1000,
            bootstrap_reps: 1000,
            alpha: 0.05,
            master_seed: 0,
            workers: None,
            art_tuning_reps: None,
            block_size: None,
            memory_limit_bytes: DEFAULT_MEMORY_LIMIT,
        }
    }
}

impl ExperimentSpec {
    /// Shrink the grid to `n ∈ {100, 200}`, `p ∈ {10, 50}` and 300 reps.
    pub fn desk(mut self) -> Self {
        self.n_grid = vec![100, 200];
        self.p_grid = vec![10.into(), 50.into()];
        self.mc_reps = 300;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::InvalidConfig(format!("{what} is empty")));
        if self.tests.is_empty() {
            return empty("tests");
        }
        if self.dgp_grid.is_empty() {
            return empty("dgp_grid");
        }
        if self.n_grid.is_empty() {
            return empty("n_grid");
        }
        if self.p_grid.is_empty() {
            return empty("p_grid");
        }
        if self.mc_reps < 1 || self.bootstrap_reps < 1 {
            return Err(Error::InvalidConfig(
                "mc_reps and bootstrap_reps must be at least 1".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        Ok(())
    }

    /// Rough peak working set: one `(n + burn_in) × (p + 1)` sample plus an
    /// equally sized kernel matrix per worker.
    pub fn memory_estimate(&self, workers: usize) -> Result<u64> {
        let n_max = *self.n_grid.iter().max().unwrap_or(&0) as u64;
        let burn = self.dgp_grid.iter().map(|d| d.burn_in).max().unwrap_or(0) as u64;
        let mut p_max = 0u64;
        for &n in &self.n_grid {
            for p in &self.p_grid {
                p_max = p_max.max(p.resolve(n)? as u64 + 1);
            }
        }
        Ok((n_max + burn) * p_max * 8 * 2 * workers as u64)
    }
}

/// One grid cell: a process at a given `(n, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub dgp: DgpTemplate,
    pub n: usize,
    pub p: usize,
}

impl Cell {
    /// Canonical key; seeds derive from it, so a cell reruns identically on
    /// its own.
    pub fn key(&self) -> String {
        format!(
            "{}|{}|{}|{}|n={}|p={}|burn={}",
            self.dgp.model.label(),
            error_label(self.dgp.error),
            self.dgp.covariate.label(),
            self.dgp.covariate.gamma().map(|g| g.to_string()).unwrap_or_default(),
            self.n,
            self.p,
            self.dgp.burn_in
        )
    }

    pub fn dgp_spec(&self, seed: u64) -> DgpSpec {
        DgpSpec {
            n: self.n,
            p: self.p,
            model: self.dgp.model.clone(),
            error: self.dgp.error,
            covariate: self.dgp.covariate,
            burn_in: self.dgp.burn_in,
            seed,
        }
    }

    /// Seed of the sample simulated for replication `rep`.
    pub fn sample_seed(&self, master: u64, rep: usize) -> u64 {
        rng::derive_seed(master, &[rng::hash_str(&self.key()), rep as u64])
    }
}

fn error_label(e: ErrorLaw) -> &'static str {
    match e {
        ErrorLaw::E1 => "e1",
        ErrorLaw::E2 => "e2",
    }
}

pub fn cells(spec: &ExperimentSpec) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    for dgp in &spec.dgp_grid {
        for &n in &spec.n_grid {
            for p in &spec.p_grid {
                out.push(Cell {
                    dgp: dgp.clone(),
                    n,
                    p: p.resolve(n)?,
                });
            }
        }
    }
    Ok(out)
}

/// Run one test on one simulated sample; `true` means reject.
pub fn run_single(test: TestKind, sample: &crate::Sample, spec: &ExperimentSpec, seed: u64) -> Result<bool> {
    let n = sample.n();
    let block = match spec.block_size {
        Some(b) => b,
        None => default_block_size(n)?,
    };
    let boot = |method, kind, weight_scheme| BootstrapConfig {
        method,
        replicates: spec.bootstrap_reps,
        block_size: block,
        weight_scheme,
        statistic_kind: kind,
        alpha: spec.alpha,
        master_seed: seed,
        recompute_weights: false,
    };
    let cfg = match test {
        TestKind::MaxDwb => boot(Method::Dwb, StatKind::Max, WeightScheme::Unit),
        TestKind::MaxPwb => boot(Method::Pwb, StatKind::Max, WeightScheme::Unit),
        TestKind::AveDwb => boot(Method::Dwb, StatKind::Ave, WeightScheme::Unit),
        TestKind::AvePwb => boot(Method::Pwb, StatKind::Ave, WeightScheme::Unit),
        TestKind::MaxT => boot(Method::Pwb, StatKind::Max, WeightScheme::LsSe),
        TestKind::AveT => boot(Method::Pwb, StatKind::Ave, WeightScheme::LsSe),
        TestKind::Art => {
            let art = ArtConfig {
                alpha: spec.alpha,
                outer_reps: spec.bootstrap_reps,
                tuning_reps: spec.art_tuning_reps.unwrap_or(spec.bootstrap_reps),
                flavor: ArtFlavor::Nb,
                master_seed: seed,
                block_size: 1,
            };
            return Ok(art_test(sample, &art)?.reject);
        }
    };
    Ok(run_test(sample, &cfg)?.reject)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRow {
    pub test: String,
    pub model: String,
    pub error: String,
    pub cov: String,
    pub gamma: Option<f64>,
    pub n: usize,
    pub p: usize,
    pub freq: f64,
    pub se: f64,
    pub reps: usize,
}

impl RejectionRow {
    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        (&self.test, &self.model, &self.error, &self.cov)
            .cmp(&(&other.test, &other.model, &other.error, &other.cov))
            .then_with(|| match (self.gamma, other.gamma) {
                (Some(a), Some(b)) => a.total_cmp(&b),
                (a, b) => a.is_some().cmp(&b.is_some()),
            })
            .then_with(|| (self.n, self.p).cmp(&(other.n, other.p)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: String,
    pub rep: usize,
    pub test: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RejectionTable {
    pub rows: Vec<RejectionRow>,
    #[serde(default)]
    pub failures: Vec<CellFailure>,
}

impl RejectionTable {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }

    /// Row for a test and a cell key prefix match, if any.
    pub fn find(&self, test: TestKind, model: &str, n: usize, p: usize) -> Option<&RejectionRow> {
        self.rows
            .iter()
            .find(|r| r.test == test.name() && r.model == model && r.n == n && r.p == p)
    }

    fn sort(&mut self) {
        self.rows.sort_by(RejectionRow::sort_key_cmp);
    }
}

/// Worker count: the environment override, else the configured count, else all cores.
pub fn resolve_workers(configured: Option<usize>) -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|w| *w > 0)
        .or(configured.filter(|w| *w > 0))
        .unwrap_or_else(rayon::current_num_threads)
}

/// Run every configured test on `mc_reps` simulated samples per grid cell.
///
/// Work items are `(cell, rep)` pairs run in parallel; each item's seeds
/// derive only from `master_seed`, the cell key and the rep, and results are
/// reduced in index order, so the table does not depend on the worker count.
/// A cell in which any item fails is reported in `failures` and omitted from
/// `rows`.
pub fn run_monte_carlo(spec: &ExperimentSpec) -> Result<RejectionTable> {
    spec.validate()?;
    let workers = resolve_workers(spec.workers);
    let needed = spec.memory_estimate(workers)?;
    if needed > spec.memory_limit_bytes {
        return Err(Error::MemoryBound {
            needed,
            limit: spec.memory_limit_bytes,
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    pool.install(|| run_cells(spec))
}

type ItemOutcome = std::result::Result<Vec<bool>, (Option<TestKind>, Error)>;

fn run_item(spec: &ExperimentSpec, cell: &Cell, rep: usize) -> ItemOutcome {
    let seed = cell.sample_seed(spec.master_seed, rep);
    let sample = generate(&cell.dgp_spec(seed)).map_err(|e| (None, e))?;
    spec.tests
        .iter()
        .map(|&t| {
            let test_seed = rng::derive_seed(seed, &[rng::hash_str(t.name())]);
            run_single(t, &sample, spec, test_seed).map_err(|e| (Some(t), e))
        })
        .collect()
}

fn run_cells(spec: &ExperimentSpec) -> Result<RejectionTable> {
    let cells = cells(spec)?;
    let reps = spec.mc_reps;
    let outcomes: Vec<ItemOutcome> = (0..cells.len() * reps)
        .into_par_iter()
        .map(|k| run_item(spec, &cells[k / reps], k % reps))
        .collect();

    let mut table = RejectionTable::default();
    for (c, cell) in cells.iter().enumerate() {
        let items = &outcomes[c * reps..(c + 1) * reps];
        let failed: Vec<CellFailure> = items
            .iter()
            .enumerate()
            .filter_map(|(rep, o)| {
                o.as_ref().err().map(|(t, e)| CellFailure {
                    cell: cell.key(),
                    rep,
                    test: t.map(|t| t.name().to_string()),
                    error: e.to_string(),
                })
            })
            .collect();
        if !failed.is_empty() {
            table.failures.extend(failed);
            continue;
        }
        for (ti, test) in spec.tests.iter().enumerate() {
            let hits = items.iter().filter(|o| matches!(o, Ok(r) if r[ti])).count();
            let freq = hits as f64 / reps as f64;
            table.rows.push(RejectionRow {
                test: test.name().to_string(),
                model: cell.dgp.model.label(),
                error: error_label(cell.dgp.error).to_string(),
                cov: cell.dgp.covariate.label().to_string(),
                gamma: cell.dgp.covariate.gamma(),
                n: cell.n,
                p: cell.p,
                freq,
                se: (freq * (1.0 - freq) / reps as f64).sqrt(),
                reps,
            });
        }
    }
    table.sort();
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Write rows sorted by key. CSV columns:
/// `test, model, error, cov, gamma, n, p, freq, se, reps`.
pub fn emit_report(table: &RejectionTable, path: &Path, format: ReportFormat) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut sorted = table.clone();
    sorted.sort();
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            for row in &sorted.rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let f = std::fs::File::create(path)?;
            serde_json::to_writer_pretty(std::io::BufWriter::new(f), &sorted)?;
        }
    }
    Ok(())
}

/// Read back a report written by [`emit_report`]. CSV carries no failures.
pub fn read_report(path: &Path, format: ReportFormat) -> Result<RejectionTable> {
    match format {
        ReportFormat::Csv => {
            let mut r = csv::Reader::from_path(path)?;
            let rows = r.deserialize().collect::<std::result::Result<Vec<RejectionRow>, _>>()?;
            Ok(RejectionTable { rows, failures: vec![] })
        }
        ReportFormat::Json => {
            let f = std::fs::File::open(path)?;
            Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(tests: Vec<TestKind>) -> ExperimentSpec {
        ExperimentSpec {
            tests,
            dgp_grid: vec![DgpTemplate::new(
                Model::I,
                ErrorLaw::E1,
                CovariateLaw::C1 { gamma: 0.0 },
            )],
            n_grid: vec![100],
            p_grid: vec![10.into()],
            mc_reps: 2,
            bootstrap_reps: 100,
            alpha: 0.05,
            master_seed: 1,
            ..Default::default()
        }
    }

    #[test]
    fn one_cell_counts() {
        let t = run_monte_carlo(&tiny(vec![TestKind::MaxPwb])).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!([0.0, 0.5, 1.0].contains(&t.rows[0].freq));
        assert_eq!(t.rows[0].reps, 2);
        assert_eq!(t.rows[0].p, 10);
        assert!(!t.is_partial());
    }

    #[test]
    fn deterministic_across_workers() {
        let mut spec = tiny(vec![TestKind::MaxPwb, TestKind::AveDwb, TestKind::MaxT, TestKind::Art]);
        spec.mc_reps = 6;
        spec.dgp_grid.push(DgpTemplate::new(
            Model::Ii { phi1: 0.25 },
            ErrorLaw::E2,
            CovariateLaw::C2,
        ));
        spec.workers = Some(1);
        let a = run_monte_carlo(&spec).unwrap();
        spec.workers = Some(4);
        let b = run_monte_carlo(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 8);
    }

    #[test]
    fn failed_cells_are_recorded() {
        let mut spec = tiny(vec![TestKind::MaxPwb]);
        spec.dgp_grid.push(DgpTemplate::new(
            Model::Iv { varphi: 1.5 },
            ErrorLaw::E1,
            CovariateLaw::default(),
        ));
        let t = run_monte_carlo(&spec).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.is_partial());
        assert_eq!(t.failures.len(), 2);
        assert!(t.failures[0].error.contains("not stable"));
    }

    #[test]
    fn memory_guard_and_validation() {
        let mut spec = tiny(vec![TestKind::MaxPwb]);
        spec.memory_limit_bytes = 1000;
        assert!(matches!(run_monte_carlo(&spec), Err(Error::MemoryBound { .. })));
        let mut spec = tiny(vec![]);
        assert!(run_monte_carlo(&spec).is_err());
        spec.tests = vec![TestKind::Art];
        spec.n_grid.clear();
        assert!(run_monte_carlo(&spec).is_err());
    }

    #[test]
    fn pbar_dimension_resolves_per_n() {
        let mut spec = tiny(vec![TestKind::MaxPwb]);
        spec.p_grid = vec![PDim::Named(PNamed::Pbar)];
        spec.n_grid = vec![100, 200];
        let c = cells(&spec).unwrap();
        assert_eq!(c.iter().map(|c| c.p).collect::<Vec<_>>(), vec![220, 373]);
        let json = serde_json::to_string(&spec.p_grid).unwrap();
        assert_eq!(json, r#"["pbar"]"#);
        let back: Vec<PDim> = serde_json::from_str("[10, \"pbar\"]").unwrap();
        assert_eq!(back, vec![PDim::Fixed(10), PDim::Named(PNamed::Pbar)]);
    }

    fn fake_table(rows: usize) -> RejectionTable {
        let tests = ["MaxPwb", "AvePwb", "Art", "MaxT", "AveDwb"];
        let rows = (0..rows)
            .map(|k| {
                let freq = (k % 7) as f64 / 7.0;
                RejectionRow {
                    test: tests[k % 5].into(),
                    model: format!("ii({})", 0.05 * (k % 3) as f64),
                    error: if k % 2 == 0 { "e1".into() } else { "e2".into() },
                    cov: if k % 4 == 3 { "c2".into() } else { "c1".into() },
                    gamma: if k % 4 == 3 { None } else { Some([0.0, 0.5, 0.8][k % 3]) },
                    n: [100, 200, 400][k % 3],
                    p: 10 + k,
                    freq,
                    se: (freq * (1.0 - freq) / 300.0).sqrt(),
                    reps: 300,
                }
            })
            .collect();
        RejectionTable { rows, failures: vec![] }
    }

    #[test]
    fn report_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut table = fake_table(50);
        table.sort();
        for fmt in [ReportFormat::Csv, ReportFormat::Json] {
            let path = dir.path().join(format!("r.{fmt:?}"));
            emit_report(&table, &path, fmt).unwrap();
            assert_eq!(read_report(&path, fmt).unwrap(), table);
        }
        let one = RejectionTable {
            rows: table.rows[..1].to_vec(),
            failures: vec![],
        };
        let path = dir.path().join("one.csv");
        emit_report(&one, &path, ReportFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(
            text.lines().next().unwrap(),
            "test,model,error,cov,gamma,n,p,freq,se,reps"
        );
        assert_eq!(
            emit_report(&RejectionTable::default(), &path, ReportFormat::Csv),
            Err(Error::EmptyTable)
        );
    }

    #[test]
    fn config_json_mirrors_spec() {
        let spec = ExperimentSpec::default().desk();
        let text = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(spec.n_grid, vec![100, 200]);
        assert_eq!(spec.mc_reps, 300);
        assert_eq!(ExperimentSpec::default().dgp_grid.len(), 80);
    }
}
