//! Deterministic dataset generation.
//!
//! Layout of a dataset directory:
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/grids/<id>.vdma     grid files
//! <dir>/curves/<id>.csv     DMA curves (translated copies point at the parent's)
//! ```
//!
//! Every random choice derives from the global seed: slot `(vf index, sample
//! index, retry)` gets its own seed via [`rng::derive_seed`], and each
//! consumer within a slot draws from its own ChaCha stream. Slots run in
//! parallel but the manifest is assembled in slot order after all workers
//! finish, so the output is byte-identical for any worker count.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::sha256_hex;
use crate::dma::{self, DmaCurve, DmaError, FrequencyGrid};
use crate::homogenizer::{Homogenizer, SolverSettings};
use crate::microstructure::io::{decode_grid, encode_grid, GridIoError};
use crate::microstructure::{
    generate_rve, max_fibers_for_pixel_radius, measure_vf, rasterize, translate_periodic,
    PhaseGrid, RveConfig, VF_MAX, VF_MIN,
};
use crate::rng;
use crate::viscoelastic::MaterialPair;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;
pub const DEFAULT_SPLIT: [f64; 3] = [0.70, 0.15, 0.15];
/// Minimum nominal fiber radius, in pixels, when drawing fiber counts.
pub const MIN_FIBER_PIXELS: f64 = 2.0;
/// Loss values below this are reported as violations by [`verify_dataset`].
pub const LOSS_FLOOR: f64 = -1e-5;
/// Relative agreement required between a stored and a recomputed curve.
pub const RECOMPUTE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid dataset configuration: {0}")]
    InvalidConfig(String),
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {message}")]
    Manifest { path: String, message: String },
    #[error(transparent)]
    Grid(#[from] GridIoError),
    #[error(transparent)]
    Dma(#[from] DmaError),
    #[error("partial dataset: {} slot(s) failed after retries: {}", .slots.len(), format_slots(.slots))]
    PartialDataset {
        slots: Vec<(f64, usize)>,
        manifest: Box<Manifest>,
    },
}

fn format_slots(slots: &[(f64, usize)]) -> String {
    slots
        .iter()
        .map(|(vf, i)| format!("(vf={vf}, index={i})"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            DatasetError::NotFound(path.display().to_string())
        } else {
            DatasetError::Io {
                path: path.display().to_string(),
                source,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    /// Base record this one was translated from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    /// `(dx, dy)` pixel shift applied to the parent grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<(i64, i64)>,
    pub seed: u64,
    pub vf_target: f64,
    pub vf_measured: f64,
    pub n_fibers: usize,
    pub radius: f64,
    /// Paths are relative to the dataset directory.
    pub grid_path: String,
    pub grid_sha256: String,
    pub curve_path: String,
    pub curve_sha256: String,
    /// Effective shear modulus of the fully relaxed cell, GPa.
    pub g_relaxed: f64,
    /// Effective shear modulus of the unrelaxed cell, GPa.
    pub g_unrelaxed: f64,
    pub split: Split,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    /// Half (rounded up) are horizontal shifts, the rest vertical.
    pub translations_per_sample: usize,
    pub stream: u64,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        Self {
            translations_per_sample: 4,
            stream: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VfRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl VfRange {
    /// Targets `min, min + step, ...` up to `max`, rounded to 1e-9.
    pub fn targets(&self) -> Result<Vec<f64>, DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidConfig(m));
        let eps = 1e-9;
        if !(self.min >= VF_MIN - eps && self.max <= VF_MAX + eps && self.min <= self.max + eps) {
            return bad(format!(
                "vf range [{}, {}] must lie within [{VF_MIN}, {VF_MAX}]",
                self.min, self.max
            ));
        }
        if !(self.step > 0.0) {
            return bad(format!("vf step {} must be > 0", self.step));
        }
        let count = ((self.max - self.min) / self.step + eps).floor() as usize + 1;
        Ok((0..count)
            .map(|i| ((self.min + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub global_seed: u64,
    pub count_per_vf: usize,
    pub vf_range: VfRange,
    pub resolution: usize,
    pub vf_tolerance: f64,
    pub materials: MaterialPair,
    pub materials_digest: String,
    pub frequency_grid: FrequencyGrid,
    pub solver: SolverSettings,
    pub solver_digest: String,
    pub split_fractions: [f64; 3],
    pub split_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<AugmentationSpec>,
    pub records: Vec<SampleRecord>,
}

impl Manifest {
    pub fn base_records(&self) -> impl Iterator<Item = &SampleRecord> {
        self.records.iter().filter(|r| r.parent.is_none())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<(), DatasetError> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_json()).map_err(io_err(&path))
    }

    pub fn read(dir: &Path) -> Result<Self, DatasetError> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| DatasetError::Manifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load_grid(&self, dir: &Path, record: &SampleRecord) -> Result<PhaseGrid, DatasetError> {
        let path = dir.join(&record.grid_path);
        let bytes = std::fs::read(&path).map_err(io_err(&path))?;
        Ok(decode_grid(&bytes, &path.display().to_string())?)
    }

    pub fn load_curve(&self, dir: &Path, record: &SampleRecord) -> Result<DmaCurve, DatasetError> {
        Ok(DmaCurve::read_csv(dir.join(&record.curve_path))?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub count_per_vf: usize,
    pub vf_range: VfRange,
    pub global_seed: u64,
    pub resolution: usize,
    pub vf_tolerance: f64,
    pub frequency_grid: FrequencyGrid,
    pub solver: SolverSettings,
    pub materials: MaterialPair,
    /// Fresh derived seeds tried per slot after the first attempt.
    pub max_retries: usize,
}

impl DatasetConfig {
    pub fn new(count_per_vf: usize, vf_range: VfRange, global_seed: u64) -> Self {
        Self {
            count_per_vf,
            vf_range,
            global_seed,
            resolution: crate::microstructure::DEFAULT_RESOLUTION,
            vf_tolerance: crate::microstructure::DEFAULT_VF_TOLERANCE,
            frequency_grid: FrequencyGrid::default(),
            solver: SolverSettings::default(),
            materials: MaterialPair::table1(),
            max_retries: 3,
        }
    }

    /// Number of base samples the configuration asks for.
    pub fn sample_count(&self) -> Result<usize, DatasetError> {
        Ok(self.vf_range.targets()?.len() * self.count_per_vf)
    }
}

pub fn sample_id(vf: f64, index: usize) -> String {
    format!("vf{vf:.4}-{index:04}")
}

struct BuiltSample {
    record: SampleRecord,
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    std::fs::write(path, bytes).map_err(io_err(path))
}

fn build_slot(
    cfg: &DatasetConfig,
    homogenizer: &Homogenizer,
    dir: &Path,
    vf_index: usize,
    vf: f64,
    index: usize,
) -> Result<Option<BuiltSample>, DatasetError> {
    let n_max = max_fibers_for_pixel_radius(vf, cfg.resolution, MIN_FIBER_PIXELS);
    for retry in 0..=cfg.max_retries {
        let seed = rng::derive_seed(cfg.global_seed, &[vf_index as u64, index as u64, retry as u64]);
        let n_fibers = rng::stream(seed, rng::STREAM_FIBER_COUNT).random_range(1..=n_max);
        let rve = RveConfig {
            vf_target: vf,
            n_fibers,
            seed,
            resolution: cfg.resolution,
            vf_tolerance: cfg.vf_tolerance,
        };
        let spec = match generate_rve(&rve) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("slot (vf={vf}, {index}) retry {retry}: {e}");
                continue;
            }
        };
        let grid = rasterize(&spec, cfg.resolution);
        let curve = dma::sweep_with_amplitude(
            homogenizer,
            &grid,
            &cfg.materials,
            &cfg.frequency_grid,
            &cfg.solver,
            dma::SHEAR_AMPLITUDE,
        )?;
        if !curve.all_converged() {
            log::warn!(
                "slot (vf={vf}, {index}) retry {retry}: unconverged points {:?}",
                curve.unconverged_indices()
            );
            continue;
        }
        let (g_relaxed, g_unrelaxed) =
            match dma::elastic_limits_with(homogenizer, &grid, &cfg.materials, &cfg.solver) {
                Ok(l) => l,
                Err(e) => {
                    log::warn!("slot (vf={vf}, {index}) retry {retry}: elastic limits: {e}");
                    continue;
                }
            };

        let id = sample_id(vf, index);
        let grid_path = format!("grids/{id}.vdma");
        let curve_path = format!("curves/{id}.csv");
        let grid_bytes = encode_grid(&grid)?;
        let csv = curve.to_csv();
        write_bytes(&dir.join(&grid_path), &grid_bytes)?;
        write_bytes(&dir.join(&curve_path), csv.as_bytes())?;
        return Ok(Some(BuiltSample {
            record: SampleRecord {
                id,
                parent: None,
                shift: None,
                seed,
                vf_target: vf,
                vf_measured: measure_vf(&grid),
                n_fibers,
                radius: spec.radius,
                grid_path,
                grid_sha256: sha256_hex(&grid_bytes),
                curve_path,
                curve_sha256: sha256_hex(csv.as_bytes()),
                g_relaxed,
                g_unrelaxed,
                split: Split::Train,
                converged: true,
            },
        }));
    }
    Ok(None)
}

/// Generates, sweeps and persists `count_per_vf` samples per vf target, then
/// assigns the default 70/15/15 split seeded by the global seed.
///
/// Slots that still fail after `max_retries` are reported through
/// [`DatasetError::PartialDataset`], which carries the manifest of the
/// retained samples (also written to disk).
pub fn generate_dataset(cfg: &DatasetConfig, dir: &Path) -> Result<Manifest, DatasetError> {
    let targets = cfg.vf_range.targets()?;
    if cfg.count_per_vf == 0 {
        return Err(DatasetError::InvalidConfig("count_per_vf must be >= 1".into()));
    }
    if cfg.resolution < 16 || cfg.resolution > u16::MAX as usize {
        return Err(DatasetError::InvalidConfig(format!(
            "resolution {} outside [16, 65535]",
            cfg.resolution
        )));
    }
    cfg.solver
        .validate()
        .map_err(|e| DatasetError::InvalidConfig(e.to_string()))?;
    for sub in ["grids", "curves"] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(io_err(&p))?;
    }

    let homogenizer = Homogenizer::new(cfg.resolution);
    let slots: Vec<(usize, f64, usize)> = targets
        .iter()
        .enumerate()
        .flat_map(|(vi, &vf)| (0..cfg.count_per_vf).map(move |i| (vi, vf, i)))
        .collect();
    let built: Vec<Option<BuiltSample>> = slots
        .par_iter()
        .map(|&(vi, vf, i)| build_slot(cfg, &homogenizer, dir, vi, vf, i))
        .collect::<Result<_, _>>()?;

    let mut records = Vec::with_capacity(built.len());
    let mut failed = Vec::new();
    for (&(_, vf, i), b) in slots.iter().zip(built) {
        match b {
            Some(b) => records.push(b.record),
            None => failed.push((vf, i)),
        }
    }
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        global_seed: cfg.global_seed,
        count_per_vf: cfg.count_per_vf,
        vf_range: cfg.vf_range,
        resolution: cfg.resolution,
        vf_tolerance: cfg.vf_tolerance,
        materials: cfg.materials.clone(),
        materials_digest: cfg.materials.digest(),
        frequency_grid: cfg.frequency_grid.clone(),
        solver: cfg.solver,
        solver_digest: cfg.solver.digest(),
        split_fractions: DEFAULT_SPLIT,
        split_seed: cfg.global_seed,
        augmentation: None,
        records,
    };
    let manifest = split(&manifest, DEFAULT_SPLIT, cfg.global_seed)?;
    manifest.write(dir)?;
    if failed.is_empty() {
        Ok(manifest)
    } else {
        Err(DatasetError::PartialDataset {
            slots: failed,
            manifest: Box::new(manifest),
        })
    }
}

fn validate_fractions(f: [f64; 3]) -> Result<(), DatasetError> {
    if f.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(DatasetError::InvalidConfig(format!(
            "split fractions {f:?} must be non-negative and sum to 1"
        )));
    }
    Ok(())
}

/// Assigns train/val/test per base sample; translated copies inherit their
/// parent's split so no geometry crosses splits.
pub fn split(manifest: &Manifest, fractions: [f64; 3], seed: u64) -> Result<Manifest, DatasetError> {
    validate_fractions(fractions)?;
    let bases: Vec<usize> = manifest
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.parent.is_none())
        .map(|(i, _)| i)
        .collect();
    let n = bases.len();
    let n_train = ((fractions[0] * n as f64).round() as usize).min(n);
    let n_val = ((fractions[1] * n as f64).round() as usize).min(n - n_train);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, rng::STREAM_SPLIT));

    let mut out = manifest.clone();
    let mut by_id: HashMap<String, Split> = HashMap::new();
    for (rank, &k) in order.iter().enumerate() {
        let s = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
        let rec = &mut out.records[bases[k]];
        rec.split = s;
        by_id.insert(rec.id.clone(), s);
    }
    for rec in out.records.iter_mut() {
        if let Some(parent) = &rec.parent {
            rec.split = *by_id.get(parent).unwrap_or(&rec.split);
        }
    }
    out.split_fractions = fractions;
    out.split_seed = seed;
    Ok(out)
}

/// Adds translated copies of every base record that has none yet.
///
/// Copies reuse the parent's curve file: the solver is exactly invariant
/// under periodic translation.
pub fn augment(
    manifest: &Manifest,
    spec: &AugmentationSpec,
    dir: &Path,
) -> Result<Manifest, DatasetError> {
    if spec.translations_per_sample == 0 {
        return Ok(manifest.clone());
    }
    let has_children: HashSet<&str> = manifest
        .records
        .iter()
        .filter_map(|r| r.parent.as_deref())
        .collect();
    let r = manifest.resolution as i64;
    let horizontal = spec.translations_per_sample.div_ceil(2);

    let mut records = Vec::with_capacity(manifest.records.len() * (1 + spec.translations_per_sample));
    for rec in &manifest.records {
        records.push(rec.clone());
        if rec.parent.is_some() || has_children.contains(rec.id.as_str()) {
            continue;
        }
        let grid = manifest.load_grid(dir, rec)?;
        let mut rng = rng::stream(rng::derive_seed(rec.seed, &[spec.stream]), rng::STREAM_AUGMENT);
        for k in 0..spec.translations_per_sample {
            let amount = rng.random_range(1..r);
            let (dx, dy) = if k < horizontal { (amount, 0) } else { (0, amount) };
            let shifted = translate_periodic(&grid, dx, dy);
            let id = format!("{}-t{}", rec.id, k + 1);
            let grid_path = format!("grids/{id}.vdma");
            let bytes = encode_grid(&shifted)?;
            write_bytes(&dir.join(&grid_path), &bytes)?;
            records.push(SampleRecord {
                id,
                parent: Some(rec.id.clone()),
                shift: Some((dx, dy)),
                grid_path,
                grid_sha256: sha256_hex(&bytes),
                ..rec.clone()
            });
        }
    }
    let mut out = manifest.clone();
    out.records = records;
    out.augmentation = Some(*spec);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Fraction of records whose curve is recomputed (at least one).
    pub recompute_fraction: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            recompute_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub records: usize,
    pub recomputed: Vec<String>,
    pub violations: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Replays integrity, physics and recompute checks on a dataset directory.
pub fn verify_dataset(dir: &Path, opts: &VerifyOptions) -> Result<VerifyReport, DatasetError> {
    let manifest = Manifest::read(dir)?;
    let mut report = VerifyReport {
        records: manifest.records.len(),
        ..Default::default()
    };
    let mut v = |msg: String| report.violations.push(msg);

    if manifest.format_version != MANIFEST_VERSION {
        v(format!("unsupported manifest version {}", manifest.format_version));
    }
    if validate_fractions(manifest.split_fractions).is_err() {
        v(format!("split fractions {:?} do not sum to 1", manifest.split_fractions));
    }
    if manifest.materials.digest() != manifest.materials_digest {
        v("materials digest mismatch".into());
    }
    if manifest.solver.digest() != manifest.solver_digest {
        v("solver digest mismatch".into());
    }
    let mut ids = HashSet::new();
    let by_id: HashMap<&str, &SampleRecord> =
        manifest.records.iter().map(|r| (r.id.as_str(), r)).collect();

    for rec in &manifest.records {
        if !ids.insert(rec.id.as_str()) {
            v(format!("{}: duplicate id", rec.id));
        }
        if !rec.converged {
            v(format!("{}: not converged", rec.id));
        }
        for (rel, digest) in [(&rec.grid_path, &rec.grid_sha256), (&rec.curve_path, &rec.curve_sha256)] {
            match std::fs::read(dir.join(rel)) {
                Ok(bytes) if sha256_hex(&bytes) == *digest => {}
                Ok(_) => v(format!("{}: digest mismatch for {rel}", rec.id)),
                Err(e) => v(format!("{}: cannot read {rel}: {e}", rec.id)),
            }
        }
        match manifest.load_grid(dir, rec) {
            Ok(grid) => {
                let vf = measure_vf(&grid);
                if grid.resolution() != manifest.resolution {
                    v(format!("{}: resolution {}", rec.id, grid.resolution()));
                }
                if vf != rec.vf_measured {
                    v(format!("{}: measured vf {vf} != recorded {}", rec.id, rec.vf_measured));
                }
                if (vf - rec.vf_target).abs() > manifest.vf_tolerance + 1e-12 {
                    v(format!("{}: vf {vf} outside target {} ± {}", rec.id, rec.vf_target, manifest.vf_tolerance));
                }
            }
            Err(e) => v(format!("{}: {e}", rec.id)),
        }
        match manifest.load_curve(dir, rec) {
            Ok(curve) => {
                if curve.omegas != manifest.frequency_grid.omegas() {
                    v(format!("{}: frequency grid differs from manifest", rec.id));
                }
                if let Some(i) = curve.loss.iter().position(|&l| l < LOSS_FLOOR) {
                    v(format!("{}: loss {} < {LOSS_FLOOR} at point {i}", rec.id, curve.loss[i]));
                }
            }
            Err(e) => v(format!("{}: {e}", rec.id)),
        }
        let slack = 1e-12;
        let [relaxed, unrelaxed] = dma::elastic_bounds(rec.vf_measured, &manifest.materials);
        for (name, g, (reuss, voigt)) in [
            ("relaxed", rec.g_relaxed, relaxed),
            ("unrelaxed", rec.g_unrelaxed, unrelaxed),
        ] {
            if g < reuss * (1.0 - slack) || g > voigt * (1.0 + slack) {
                v(format!("{}: {name} modulus {g} outside [{reuss}, {voigt}]", rec.id));
            }
        }
        if rec.g_unrelaxed < rec.g_relaxed {
            v(format!("{}: unrelaxed {} < relaxed {}", rec.id, rec.g_unrelaxed, rec.g_relaxed));
        }
        if let Some(parent) = &rec.parent {
            match by_id.get(parent.as_str()) {
                None => v(format!("{}: parent {parent} missing", rec.id)),
                Some(p) => {
                    if p.split != rec.split {
                        v(format!("{}: split {:?} differs from parent {:?}", rec.id, rec.split, p.split));
                    }
                    if p.curve_path != rec.curve_path {
                        v(format!("{}: curve not shared with parent", rec.id));
                    }
                }
            }
        }
    }

    // Recompute a deterministic sample of curves from their grids.
    let n = manifest.records.len();
    if n > 0 && opts.recompute_fraction > 0.0 {
        let k = ((n as f64 * opts.recompute_fraction).ceil() as usize).clamp(1, n);
        let mut rng = rng::stream(manifest.global_seed, rng::STREAM_VERIFY);
        let picks: Vec<&SampleRecord> = manifest.records.choose_multiple(&mut rng, k).collect();
        let homogenizer = Homogenizer::new(manifest.resolution);
        for rec in picks {
            report.recomputed.push(rec.id.clone());
            let (grid, stored) = match (manifest.load_grid(dir, rec), manifest.load_curve(dir, rec)) {
                (Ok(g), Ok(c)) => (g, c),
                _ => continue,
            };
            let fresh = dma::sweep_with_amplitude(
                &homogenizer,
                &grid,
                &manifest.materials,
                &manifest.frequency_grid,
                &manifest.solver,
                dma::SHEAR_AMPLITUDE,
            )?;
            let scale = (0..stored.len()).map(|i| stored.modulus(i).norm()).fold(0.0, f64::max);
            let diff = (0..stored.len().min(fresh.len()))
                .map(|i| (stored.modulus(i) - fresh.modulus(i)).norm())
                .fold(0.0, f64::max);
            if stored.len() != fresh.len() || diff > RECOMPUTE_TOLERANCE * scale {
                report.violations.push(format!(
                    "{}: recomputed curve differs (max |dG| = {diff:e})",
                    rec.id
                ));
            }
        }
    }
    Ok(report)
}

/// Paths of every file a manifest references, plus the manifest itself.
pub fn referenced_files(dir: &Path, manifest: &Manifest) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = vec![dir.join(MANIFEST_FILE)];
    let mut seen = HashSet::new();
    for r in &manifest.records {
        for p in [&r.grid_path, &r.curve_path] {
            if seen.insert(p.clone()) {
                out.push(dir.join(p));
            }
        }
    }
    out
}
