//! Hyperparameter ablation harness: run the corrector over a grid of
//! (L, gamma) cells on a fixed corpus and tabulate per-cell metrics.
//!
//! Every cell sees the identical corpus, entries are independent pure
//! computations keyed by (cell, entry), and the AdaIN control cell
//! (L = 1, gamma = 0) is always included.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adain::DEFAULT_EPS;
use crate::error::{Error, Result};
use crate::grid::make_grid;
use crate::hadain::{hadain_correct, HAdaInConfig};
use crate::image::Image;
use crate::io::load_image;
use crate::metrics::{psnr, seam_score, ssim, stat_distance};
use crate::shift::{apply_shift, random_spec, synthetic_reference, ShiftKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Psnr,
    Ssim,
    StatDistance,
    SeamScore,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Psnr => "psnr",
            MetricKind::Ssim => "ssim",
            MetricKind::StatDistance => "stat_distance",
            MetricKind::SeamScore => "seam_score",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairEntry {
    pub reference: PathBuf,
    pub generated: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Global,
    Block,
    Smooth,
}

/// Recipe for a generated corpus: `count` procedural reference images with
/// seeded shifts of the given kind applied to each.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticCorpus {
    pub count: usize,
    pub height: usize,
    pub width: usize,
    pub kind: SyntheticKind,
    pub seed: u64,
    pub magnitude: f64,
    /// Block grid or lattice dims for block/smooth kinds.
    #[serde(default = "default_field_dims")]
    pub field_dims: (usize, usize),
}

fn default_field_dims() -> (usize, usize) {
    (4, 4)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corpus {
    Pairs(Vec<PairEntry>),
    Synthetic(SyntheticCorpus),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPlan {
    /// Explicit (L, gamma) cells. When empty, the cross product of
    /// `levels` x `gammas` is used instead.
    #[serde(default)]
    pub cells: Vec<(u32, f64)>,
    #[serde(default)]
    pub levels: Vec<u32>,
    #[serde(default)]
    pub gammas: Vec<f64>,
    pub corpus: Corpus,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricKind>,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_metrics() -> Vec<MetricKind> {
    vec![MetricKind::Psnr, MetricKind::Ssim, MetricKind::StatDistance]
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

impl SweepPlan {
    /// The cells exercised by the reference ablation: the AdaIN control,
    /// the level sweep at gamma 0, and the gamma sweep at L = 30.
    pub fn default_cells() -> Vec<(u32, f64)> {
        vec![
            (1, 0.0),
            (30, 0.0),
            (100, 0.0),
            (30, 0.5),
            (30, 0.9),
            (30, 0.7),
        ]
    }

    /// Resolved cell list: explicit cells, or the levels x gammas cross
    /// product, with the (1, 0) control prepended when absent.
    pub fn resolved_cells(&self) -> Result<Vec<(u32, f64)>> {
        let mut cells = if !self.cells.is_empty() {
            self.cells.clone()
        } else {
            let mut out = Vec::new();
            for &l in &self.levels {
                for &g in &self.gammas {
                    out.push((l, g));
                }
            }
            out
        };
        if cells.is_empty() {
            return Err(Error::Config(
                "sweep plan has no cells (empty levels/gammas and no explicit cells)".into(),
            ));
        }
        for &(l, g) in &cells {
            if l < 1 || !(0.0..1.0).contains(&g) {
                return Err(Error::Config(format!("invalid cell (L={l}, gamma={g})")));
            }
        }
        if !cells.iter().any(|&(l, g)| l == 1 && g == 0.0) {
            cells.insert(0, (1, 0.0));
        }
        Ok(cells)
    }

    fn validate(&self) -> Result<()> {
        self.resolved_cells()?;
        if self.metrics.is_empty() {
            return Err(Error::Config("sweep plan selects no metrics".into()));
        }
        match &self.corpus {
            Corpus::Pairs(pairs) if pairs.is_empty() => {
                Err(Error::Config("sweep corpus is empty".into()))
            }
            Corpus::Synthetic(s) if s.count == 0 => {
                Err(Error::Config("synthetic corpus count must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// One loaded (reference, generated) pair.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub reference: Image,
    pub generated: Image,
}

/// Materialize the corpus, collecting all per-entry failures instead of
/// stopping at the first.
pub fn load_corpus(corpus: &Corpus) -> Result<Vec<CorpusEntry>> {
    match corpus {
        Corpus::Pairs(pairs) => {
            let mut entries = Vec::new();
            let mut failures = Vec::new();
            for pair in pairs {
                match load_pair(pair) {
                    Ok(e) => entries.push(e),
                    Err(e) => failures.push(e),
                }
            }
            if !failures.is_empty() {
                return Err(Error::Corpus(failures));
            }
            Ok(entries)
        }
        Corpus::Synthetic(s) => synthesize_corpus(s),
    }
}

fn load_pair(pair: &PairEntry) -> std::result::Result<CorpusEntry, String> {
    let reference =
        load_image(&pair.reference).map_err(|e| format!("{}: {e}", pair.reference.display()))?;
    let generated =
        load_image(&pair.generated).map_err(|e| format!("{}: {e}", pair.generated.display()))?;
    if !reference.same_shape(&generated) {
        return Err(format!(
            "{} vs {}: dimension mismatch {}x{} vs {}x{}",
            pair.reference.display(),
            pair.generated.display(),
            reference.height(),
            reference.width(),
            generated.height(),
            generated.width()
        ));
    }
    Ok(CorpusEntry {
        name: pair
            .generated
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| pair.generated.display().to_string()),
        reference,
        generated,
    })
}

pub fn synthesize_corpus(s: &SyntheticCorpus) -> Result<Vec<CorpusEntry>> {
    if s.count == 0 {
        return Err(Error::Config("synthetic corpus count must be >= 1".into()));
    }
    let (fr, fc) = s.field_dims;
    (0..s.count)
        .map(|i| {
            let img_seed = s.seed.wrapping_add(i as u64);
            let reference = synthetic_reference(s.height, s.width, img_seed)?;
            let kind = match s.kind {
                SyntheticKind::Global => ShiftKind::GlobalAffine,
                SyntheticKind::Block => ShiftKind::BlockAffine { rows: fr, cols: fc },
                SyntheticKind::Smooth => ShiftKind::SmoothField { rows: fr, cols: fc },
            };
            let spec = random_spec(kind, img_seed.wrapping_mul(0x100).wrapping_add(1), s.magnitude)?;
            let generated = apply_shift(&reference, &spec)?;
            Ok(CorpusEntry {
                name: format!("img{i:03}"),
                reference,
                generated,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricColumn {
    pub metric: MetricKind,
    pub mean: f64,
    pub per_image: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub level: u32,
    pub gamma: f64,
    pub metrics: Vec<MetricColumn>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResults {
    pub image_names: Vec<String>,
    pub cells: Vec<CellResult>,
}

impl SweepResults {
    pub fn cell(&self, level: u32, gamma: f64) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.level == level && c.gamma == gamma)
    }

    pub fn metric(&self, level: u32, gamma: f64, metric: MetricKind) -> Option<&MetricColumn> {
        self.cell(level, gamma)?
            .metrics
            .iter()
            .find(|m| m.metric == metric)
    }
}

fn evaluate_entry(
    entry: &CorpusEntry,
    level: u32,
    gamma: f64,
    eps: f64,
    metrics: &[MetricKind],
) -> Result<Vec<f64>> {
    let cfg = HAdaInConfig {
        levels: level,
        gamma,
        eps,
        clamp_output: true,
    };
    let corrected = hadain_correct(&entry.reference, &entry.generated, &cfg)?;
    metrics
        .iter()
        .map(|m| match m {
            MetricKind::Psnr => psnr(&corrected, &entry.reference, 1.0),
            MetricKind::Ssim => ssim(&corrected, &entry.reference),
            MetricKind::StatDistance => {
                stat_distance(&corrected, &entry.reference).map(|d| d.max_component())
            }
            MetricKind::SeamScore => {
                // Scored against the disjoint (gamma = 0) tiling at this
                // level: the boundary set where blocking artifacts appear.
                // Using the same boundary set for every gamma keeps the
                // cells comparable.
                let grid = make_grid(corrected.height(), corrected.width(), level, 0.0)?;
                seam_score(&corrected, &grid)
            }
        })
        .collect()
}

pub fn run_sweep(plan: &SweepPlan) -> Result<SweepResults> {
    plan.validate()?;
    let entries = load_corpus(&plan.corpus)?;
    run_sweep_on(plan, &entries)
}

/// Sweep over an already-loaded corpus. Entries are processed in parallel;
/// results are keyed by (cell, entry) index so the output is identical for
/// any thread count.
pub fn run_sweep_on(plan: &SweepPlan, entries: &[CorpusEntry]) -> Result<SweepResults> {
    let cells = plan.resolved_cells()?;
    if entries.is_empty() {
        return Err(Error::Config("sweep corpus is empty".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..entries.len()).map(move |e| (c, e)))
        .collect();
    let values: Vec<Result<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(ci, ei)| {
            let (level, gamma) = cells[ci];
            evaluate_entry(&entries[ei], level, gamma, plan.eps, &plan.metrics)
        })
        .collect();

    let mut failures = Vec::new();
    let mut table = vec![vec![Vec::new(); entries.len()]; cells.len()];
    for (&(ci, ei), value) in jobs.iter().zip(values) {
        match value {
            Ok(v) => table[ci][ei] = v,
            Err(e) => failures.push(format!(
                "cell (L={}, gamma={}) on {}: {e}",
                cells[ci].0, cells[ci].1, entries[ei].name
            )),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Corpus(failures));
    }

    let cells_out = cells
        .iter()
        .enumerate()
        .map(|(ci, &(level, gamma))| CellResult {
            level,
            gamma,
            metrics: plan
                .metrics
                .iter()
                .enumerate()
                .map(|(mi, &metric)| {
                    let per_image: Vec<f64> =
                        (0..entries.len()).map(|ei| table[ci][ei][mi]).collect();
                    let mean = per_image.iter().sum::<f64>() / per_image.len() as f64;
                    MetricColumn {
                        metric,
                        mean,
                        per_image,
                    }
                })
                .collect(),
        })
        .collect();
    Ok(SweepResults {
        image_names: entries.iter().map(|e| e.name.clone()).collect(),
        cells: cells_out,
    })
}

/// CSV rendering with fixed 4-decimal formatting:
/// `L,gamma,metric,mean,<one column per image>`.
pub fn results_to_csv(results: &SweepResults) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["L".to_string(), "gamma".to_string(), "metric".to_string(), "mean".to_string()];
    header.extend(results.image_names.iter().cloned());
    writer.write_record(&header).expect("in-memory write");
    for cell in &results.cells {
        for col in &cell.metrics {
            let mut record = vec![
                cell.level.to_string(),
                format!("{:.4}", cell.gamma),
                col.metric.name().to_string(),
                format!("{:.4}", col.mean),
            ];
            record.extend(col.per_image.iter().map(|v| format!("{v:.4}")));
            writer.write_record(&record).expect("in-memory write");
        }
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf8")
}

/// Human-readable aligned table of cell means.
pub fn results_to_table(results: &SweepResults) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:>5} {:>7}", "L", "gamma"));
    if let Some(first) = results.cells.first() {
        for col in &first.metrics {
            out.push_str(&format!(" {:>14}", col.metric.name()));
        }
    }
    out.push('\n');
    for cell in &results.cells {
        out.push_str(&format!("{:>5} {:>7.4}", cell.level, cell.gamma));
        for col in &cell.metrics {
            out.push_str(&format!(" {:>14.4}", col.mean));
        }
        out.push('\n');
    }
    out
}

pub fn write_results(results: &SweepResults, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv_path = out_dir.join("results.csv");
    std::fs::write(&csv_path, results_to_csv(results)).map_err(|e| Error::io(&csv_path, e))?;
    let json_path = out_dir.join("results.json");
    let json = serde_json::to_string_pretty(results).expect("serializable results");
    std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_plan(cells: Vec<(u32, f64)>) -> SweepPlan {
        SweepPlan {
            cells,
            levels: vec![],
            gammas: vec![],
            corpus: Corpus::Synthetic(SyntheticCorpus {
                count: 2,
                height: 16,
                width: 16,
                kind: SyntheticKind::Global,
                seed: 5,
                magnitude: 0.4,
                field_dims: (4, 4),
            }),
            metrics: vec![MetricKind::Psnr, MetricKind::Ssim],
            eps: DEFAULT_EPS,
        }
    }

    #[test]
    fn identity_corpus_hits_caps() {
        // generated = reference: the control cell must report the PSNR cap
        // and SSIM exactly 1.
        let plan = identity_plan(vec![(1, 0.0)]);
        let mut entries = load_corpus(&plan.corpus).unwrap();
        for e in &mut entries {
            e.generated = e.reference.clone();
        }
        let results = run_sweep_on(&plan, &entries).unwrap();
        let psnr_col = results.metric(1, 0.0, MetricKind::Psnr).unwrap();
        assert!(psnr_col.per_image.iter().all(|&v| v == 99.0));
        let ssim_col = results.metric(1, 0.0, MetricKind::Ssim).unwrap();
        assert!(ssim_col.per_image.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn control_cell_always_present() {
        let plan = identity_plan(vec![(30, 0.7)]);
        let cells = plan.resolved_cells().unwrap();
        assert_eq!(cells[0], (1, 0.0));
        assert!(cells.contains(&(30, 0.7)));
    }

    #[test]
    fn default_cells_mirror_the_ablation_grid() {
        assert_eq!(
            SweepPlan::default_cells(),
            vec![(1, 0.0), (30, 0.0), (100, 0.0), (30, 0.5), (30, 0.9), (30, 0.7)]
        );
    }

    #[test]
    fn empty_plan_rejected() {
        let mut plan = identity_plan(vec![]);
        plan.levels.clear();
        plan.gammas.clear();
        assert!(matches!(plan.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn cross_product_cells() {
        let mut plan = identity_plan(vec![]);
        plan.levels = vec![1, 5];
        plan.gammas = vec![0.0, 0.5];
        let cells = plan.resolved_cells().unwrap();
        assert_eq!(cells, vec![(1, 0.0), (1, 0.5), (5, 0.0), (5, 0.5)]);
    }

    #[test]
    fn corpus_order_does_not_change_cell_values() {
        let plan = identity_plan(vec![(2, 0.5)]);
        let entries = load_corpus(&plan.corpus).unwrap();
        let forward = run_sweep_on(&plan, &entries).unwrap();
        let reversed_entries: Vec<_> = entries.iter().rev().cloned().collect();
        let reversed = run_sweep_on(&plan, &reversed_entries).unwrap();
        for cell in &forward.cells {
            let other = reversed.cell(cell.level, cell.gamma).unwrap();
            for (a, b) in cell.metrics.iter().zip(&other.metrics) {
                let mut rev = b.per_image.clone();
                rev.reverse();
                assert_eq!(a.per_image, rev);
            }
        }
    }

    #[test]
    fn missing_files_aggregate_errors() {
        let corpus = Corpus::Pairs(vec![
            PairEntry {
                reference: "/nonexistent/a.ppm".into(),
                generated: "/nonexistent/b.ppm".into(),
            },
            PairEntry {
                reference: "/nonexistent/c.ppm".into(),
                generated: "/nonexistent/d.ppm".into(),
            },
        ]);
        match load_corpus(&corpus) {
            Err(Error::Corpus(msgs)) => assert_eq!(msgs.len(), 2),
            other => panic!("expected aggregated corpus errors, got {other:?}"),
        }
    }

    #[test]
    fn csv_has_fixed_precision_and_header() {
        let plan = identity_plan(vec![(1, 0.0)]);
        let results = run_sweep(&plan).unwrap();
        let csv = results_to_csv(&results);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "L,gamma,metric,mean,img000,img001");
        for line in lines {
            let mean = line.split(',').nth(3).unwrap();
            assert!(mean.contains('.') && mean.split('.').nth(1).unwrap().len() == 4);
        }
    }
}
