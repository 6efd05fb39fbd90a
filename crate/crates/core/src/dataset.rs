//! Dataset generation, manifests, verification and category selection.
//!
//! Layout on disk:
//!
//! ```text
//! <root>/manifest.json
//! <root>/<category>/<instance>.png     zero-padded decimal ids
//! ```
//!
//! The manifest embeds the category file verbatim, so every image can be
//! regenerated from the manifest alone.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::camera::{project, CameraPose, ViewpointSet};
use crate::error::{Error, Result};
use crate::ifs::{fluctuate_ifs, Dimension, IfsSystem, FLUCTUATION_VARIANTS};
use crate::par;
use crate::raster::{
    normalize_points, render, render_fixed_patch, rotate90, AugmentationMode, DotGrid, RasterImage,
    DEFAULT_MARGIN, DEFAULT_SIDE, FIXED_PATCHES, MIN_SIDE,
};
use crate::search::{
    category_cloud, parse_category_file, search, write_category_file, CategoryRecord, SearchConfig,
};
use crate::seed::{purpose, SeedKey};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = concat!("ofdb-core ", env!("CARGO_PKG_VERSION"));
pub const DEFAULT_VERIFY_SAMPLE: usize = 10;

/// Instance expansion of the full-instance baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expansion {
    pub rotations: u8,
    pub fluctuations: usize,
    pub patches: usize,
}

impl Expansion {
    pub const FRACTALDB: Expansion = Expansion {
        rotations: 4,
        fluctuations: FLUCTUATION_VARIANTS,
        patches: 10,
    };

    pub fn instances(&self) -> usize {
        self.rotations as usize * self.fluctuations * self.patches
    }

    /// `instance_id = (rotation * fluctuations + fluctuation) * patches + patch`.
    pub fn decompose(&self, instance_id: usize) -> (u8, usize, usize) {
        let patch = instance_id % self.patches;
        let rest = instance_id / self.patches;
        (
            (rest / self.fluctuations) as u8,
            rest % self.fluctuations,
            patch,
        )
    }

    pub fn compose(&self, rotation: u8, fluctuation: usize, patch: usize) -> usize {
        (rotation as usize * self.fluctuations + fluctuation) * self.patches + patch
    }

    fn validate(&self) -> Result<()> {
        if self.rotations == 0
            || self.rotations > 4
            || self.fluctuations == 0
            || self.fluctuations > FLUCTUATION_VARIANTS
            || self.patches == 0
            || self.patches > FIXED_PATCHES.len()
        {
            return Err(Error::InvalidArgument(format!(
                "expansion {self:?} outside 1..=4 rotations, 1..={FLUCTUATION_VARIANTS} \
                 fluctuations, 1..={} patches",
                FIXED_PATCHES.len()
            )));
        }
        Ok(())
    }
}

/// Which pose a 3D category's stored image uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosePolicy {
    /// `poses[category_id % poses.len()]`
    #[default]
    Modulo,
    /// `poses[0]` for every category.
    Canonical,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    #[default]
    WhiteOnBlack,
    BlackOnWhite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub dimension: Dimension,
    pub categories: usize,
    pub instances_per_category: usize,
    pub augmentation_mode: AugmentationMode,
    pub expansion: Option<Expansion>,
    pub master_seed: u64,
    pub image_side: usize,
    pub margin: f64,
    pub polarity: Polarity,
    pub search: SearchConfig,
    pub viewpoints: Option<ViewpointSet>,
    pub pose_policy: PosePolicy,
}

impl DatasetSpec {
    /// One image per category.
    pub fn ofdb(dimension: Dimension, categories: usize, master_seed: u64) -> Self {
        let viewpoints = match dimension {
            Dimension::Two => None,
            Dimension::Three => Some(crate::camera::default_viewpoints()),
        };
        Self {
            name: format!("{}d-ofdb-{}", dimension.get(), categories),
            dimension,
            categories,
            instances_per_category: 1,
            augmentation_mode: AugmentationMode::Plain,
            expansion: None,
            master_seed,
            image_side: DEFAULT_SIDE,
            margin: DEFAULT_MARGIN,
            polarity: Polarity::WhiteOnBlack,
            search: SearchConfig::new(categories),
            viewpoints,
            pose_policy: PosePolicy::Modulo,
        }
    }

    /// Full-instance baseline: 4 rotations x 25 fluctuations x 10 patches.
    pub fn fractaldb(dimension: Dimension, categories: usize, master_seed: u64) -> Self {
        Self {
            name: format!("{}d-fractaldb-{}", dimension.get(), categories),
            instances_per_category: Expansion::FRACTALDB.instances(),
            expansion: Some(Expansion::FRACTALDB),
            ..Self::ofdb(dimension, categories, master_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.categories == 0 {
            return bad("categories must be at least 1".into());
        }
        if self.search.target_categories != self.categories {
            return bad(format!(
                "search targets {} categories but the dataset has {}",
                self.search.target_categories, self.categories
            ));
        }
        self.search.validate()?;
        if self.image_side < MIN_SIDE {
            return bad(format!("image_side must be at least {MIN_SIDE}"));
        }
        if !(0.0..0.5).contains(&self.margin) {
            return bad(format!("margin {} outside [0, 0.5)", self.margin));
        }
        if let AugmentationMode::FixedPatch(i) = self.augmentation_mode {
            if i as usize >= FIXED_PATCHES.len() {
                return bad(format!("fixed patch index {i} out of range"));
            }
        }
        match &self.expansion {
            None if self.instances_per_category != 1 => {
                return bad("one-instance mode needs instances_per_category = 1".into())
            }
            Some(e) => {
                e.validate()?;
                if self.instances_per_category != e.instances() {
                    return bad(format!(
                        "expansion yields {} instances but instances_per_category is {}",
                        e.instances(),
                        self.instances_per_category
                    ));
                }
                if self.augmentation_mode != AugmentationMode::Plain {
                    return bad("expansion mode takes its patches from the expansion; \
                         augmentation_mode must be plain"
                        .into());
                }
            }
            None => {}
        }
        if let Some(v) = &self.viewpoints {
            if v.poses.is_empty() {
                return bad("viewpoint set has no poses".into());
            }
        }
        Ok(())
    }

    pub fn total_images(&self) -> usize {
        self.categories * self.instances_per_category
    }

    /// Key for the stochastic draws of one stored image.
    pub fn image_seed(&self, category_id: usize, instance_id: usize) -> SeedKey {
        SeedKey::new(self.master_seed, 0).derive(&[
            purpose::IMAGE,
            category_id as u64,
            instance_id as u64,
        ])
    }

    pub fn pose(&self, category_id: usize) -> Option<CameraPose> {
        if self.dimension != Dimension::Three {
            return None;
        }
        Some(match &self.viewpoints {
            None => CameraPose::identity(),
            Some(v) => match self.pose_policy {
                PosePolicy::Modulo => v.poses[category_id % v.poses.len()],
                PosePolicy::Canonical => v.poses[0],
            },
        })
    }

    fn id_widths(&self) -> (usize, usize) {
        let digits = |n: usize| n.saturating_sub(1).max(1).ilog10() as usize + 1;
        (
            digits(self.categories).max(5),
            digits(self.instances_per_category).max(4),
        )
    }

    pub fn relative_path(&self, category_id: usize, instance_id: usize) -> String {
        let (cw, iw) = self.id_widths();
        format!("{category_id:0cw$}/{instance_id:0iw$}.png")
    }

    pub fn encode(&self, img: &RasterImage) -> Result<Vec<u8>> {
        match self.polarity {
            Polarity::WhiteOnBlack => img.to_png(),
            Polarity::BlackOnWhite => img.inverted().to_png(),
        }
    }
}

/// One rendered image and how it was made.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub instance_id: usize,
    pub image: RasterImage,
    pub seed: SeedKey,
    /// The fluctuated system escaped the divergence bound; the image is blank.
    pub diverged: bool,
}

/// Turns category records into images according to a spec.
pub struct Renderer<'a> {
    spec: &'a DatasetSpec,
    categories: Vec<CategoryRecord>,
}

impl<'a> Renderer<'a> {
    pub fn new(spec: &'a DatasetSpec, categories: Vec<CategoryRecord>) -> Self {
        Self { spec, categories }
    }

    pub fn from_manifest(manifest: &'a DatasetManifest) -> Result<Self> {
        Ok(Self::new(&manifest.spec, manifest.categories()?))
    }

    pub fn spec(&self) -> &DatasetSpec {
        self.spec
    }

    pub fn categories(&self) -> &[CategoryRecord] {
        &self.categories
    }

    fn record(&self, category_id: usize) -> Result<&CategoryRecord> {
        self.categories.get(category_id).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "category {category_id} not in dataset of {}",
                self.categories.len()
            ))
        })
    }

    /// Dot grid of `ifs` drawn with the category's chaos-game key.
    fn grid_for(&self, rec: &CategoryRecord, ifs: &IfsSystem) -> Result<DotGrid> {
        let cfg = &self.spec.search;
        let cloud = category_cloud(ifs, rec.seed, cfg.points, cfg.burn_in)?;
        let cloud = match self.spec.pose(rec.category_id) {
            Some(pose) => project(&cloud, &pose)?,
            None => cloud,
        };
        match normalize_points(&cloud, self.spec.image_side, self.spec.margin) {
            Err(Error::DegenerateExtent) => {
                // A single repeated point: one dot in the middle.
                let mut g = DotGrid::new(self.spec.image_side);
                g.mark(self.spec.image_side / 2, self.spec.image_side / 2);
                Ok(g)
            }
            other => other,
        }
    }

    /// The category's representative dot grid (unfluctuated).
    pub fn category_grid(&self, category_id: usize) -> Result<DotGrid> {
        let rec = self.record(category_id)?;
        self.grid_for(rec, &rec.ifs)
    }

    fn fluctuated_grid(&self, rec: &CategoryRecord, variant: usize) -> Result<Option<DotGrid>> {
        let ifs = fluctuate_ifs(&rec.ifs, variant)?;
        match self.grid_for(rec, &ifs) {
            Ok(g) => Ok(Some(g)),
            Err(Error::Divergence { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn expanded(
        &self,
        e: &Expansion,
        category_id: usize,
        instance_id: usize,
        grid: Option<&DotGrid>,
    ) -> Result<Instance> {
        let (rotation, _, patch) = e.decompose(instance_id);
        let seed = self.spec.image_seed(category_id, instance_id);
        Ok(match grid {
            Some(g) => Instance {
                instance_id,
                image: rotate90(&render_fixed_patch(g, patch)?, rotation),
                seed,
                diverged: false,
            },
            None => Instance {
                instance_id,
                image: RasterImage::blank(self.spec.image_side),
                seed,
                diverged: true,
            },
        })
    }

    /// Every instance of one category, in instance order.
    pub fn render_category(&self, category_id: usize) -> Result<Vec<Instance>> {
        let rec = self.record(category_id)?;
        match &self.spec.expansion {
            None => Ok(vec![self.render_instance(category_id, 0)?]),
            Some(e) => {
                let grids = (0..e.fluctuations)
                    .map(|f| self.fluctuated_grid(rec, f))
                    .collect::<Result<Vec<_>>>()?;
                (0..e.instances())
                    .map(|i| {
                        let (_, f, _) = e.decompose(i);
                        self.expanded(e, category_id, i, grids[f].as_ref())
                    })
                    .collect()
            }
        }
    }

    pub fn render_instance(&self, category_id: usize, instance_id: usize) -> Result<Instance> {
        let rec = self.record(category_id)?;
        if instance_id >= self.spec.instances_per_category {
            return Err(Error::InvalidArgument(format!(
                "instance {instance_id} out of range 0..{}",
                self.spec.instances_per_category
            )));
        }
        match &self.spec.expansion {
            None => {
                let grid = self.grid_for(rec, &rec.ifs)?;
                let seed = self.spec.image_seed(category_id, instance_id);
                Ok(Instance {
                    instance_id,
                    image: render(&grid, self.spec.augmentation_mode, seed)?,
                    seed,
                    diverged: false,
                })
            }
            Some(e) => {
                let (_, f, _) = e.decompose(instance_id);
                let grid = self.fluctuated_grid(rec, f)?;
                self.expanded(e, category_id, instance_id, grid.as_ref())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub category_id: usize,
    pub instance_id: usize,
    pub path: String,
    pub seed: SeedKey,
    pub pose: Option<CameraPose>,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub spec: DatasetSpec,
    /// Candidates consumed by the category search.
    pub search_attempts: u64,
    /// Category file, verbatim.
    pub category_file: String,
    /// Present on a pruned manifest: the kept category ids, ascending.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_categories: Option<Vec<usize>>,
    pub records: Vec<ImageRecord>,
}

impl DatasetManifest {
    pub fn categories(&self) -> Result<Vec<CategoryRecord>> {
        parse_category_file(&self.category_file)
    }

    /// Category ids this manifest covers.
    pub fn category_ids(&self) -> Vec<usize> {
        match &self.selected_categories {
            Some(ids) => ids.clone(),
            None => (0..self.spec.categories).collect(),
        }
    }

    pub fn expected_records(&self) -> usize {
        self.category_ids().len() * self.spec.instances_per_category
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Copy restricted to `ids`, with their image records.
    pub fn filtered(&self, ids: &[usize]) -> Result<DatasetManifest> {
        let mut keep: Vec<usize> = ids.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let known = self.category_ids();
        if let Some(bad) = keep.iter().find(|id| known.binary_search(id).is_err()) {
            return Err(Error::InvalidArgument(format!(
                "category {bad} is not in this manifest"
            )));
        }
        let records = self
            .records
            .iter()
            .filter(|r| keep.binary_search(&r.category_id).is_ok())
            .cloned()
            .collect();
        Ok(DatasetManifest {
            selected_categories: Some(keep),
            records,
            ..self.clone()
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Result of a successful build.
#[derive(Clone, Debug)]
pub struct BuildSummary {
    pub manifest: DatasetManifest,
    pub manifest_path: PathBuf,
    pub acceptance_rate: f64,
    pub diverged_instances: usize,
}

/// Categories rendered per parallel wave; bounds the images held in memory.
const WAVE: usize = 64;

/// Searches categories, renders every instance, writes the PNGs under
/// `root` and the manifest to `root/manifest.json`. On an I/O failure the
/// category directories written so far are removed and no manifest is written.
pub fn build(spec: &DatasetSpec, root: &Path) -> Result<BuildSummary> {
    spec.validate()?;
    let outcome = search(&spec.search, spec.dimension, spec.master_seed)?;
    let acceptance_rate = outcome.acceptance_rate();
    let category_file = write_category_file(&outcome.records);
    let renderer = Renderer::new(spec, outcome.records);

    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let mut records = Vec::with_capacity(spec.total_images());
    let mut written = 0;
    for start in (0..spec.categories).step_by(WAVE) {
        let end = (start + WAVE).min(spec.categories);
        let wave = par::map_range(start..end, |c| write_category(&renderer, root, c));
        for result in wave {
            match result {
                Ok(mut recs) => records.append(&mut recs),
                Err(e) => {
                    cleanup(spec, root, end);
                    return Err(e);
                }
            }
        }
        written = end;
    }
    debug_assert_eq!(written, spec.categories);

    let diverged_instances = records.iter().filter(|r| r.diverged).count();
    let manifest = DatasetManifest {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        spec: spec.clone(),
        search_attempts: outcome.attempts,
        category_file,
        selected_categories: None,
        records,
    };
    let manifest_path = root.join(MANIFEST_FILE);
    if let Err(e) = manifest.write(&manifest_path) {
        cleanup(spec, root, spec.categories);
        return Err(e);
    }
    Ok(BuildSummary {
        manifest,
        manifest_path,
        acceptance_rate,
        diverged_instances,
    })
}

fn write_category(
    renderer: &Renderer,
    root: &Path,
    category_id: usize,
) -> Result<Vec<ImageRecord>> {
    let spec = renderer.spec();
    let instances = renderer.render_category(category_id)?;
    let pose = spec.pose(category_id);
    let mut out = Vec::with_capacity(instances.len());
    for inst in instances {
        let path = spec.relative_path(category_id, inst.instance_id);
        let full = root.join(&path);
        if let Some(dir) = full.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let bytes = spec.encode(&inst.image)?;
        fs::write(&full, &bytes).map_err(|e| Error::io(&full, e))?;
        out.push(ImageRecord {
            category_id,
            instance_id: inst.instance_id,
            path,
            seed: inst.seed,
            pose,
            sha256: sha256_hex(&bytes),
            diverged: inst.diverged,
        });
    }
    Ok(out)
}

fn cleanup(spec: &DatasetSpec, root: &Path, categories: usize) {
    for c in 0..categories {
        let path = root.join(spec.relative_path(c, 0));
        if let Some(dir) = path.parent() {
            let _ = fs::remove_dir_all(dir);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Discrepancy {
    RecordCount {
        expected: usize,
        found: usize,
    },
    CategoryFile {
        reason: String,
    },
    Missing {
        path: String,
    },
    Checksum {
        path: String,
        expected: String,
        found: String,
    },
    Regeneration {
        path: String,
        reason: String,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub records_checked: usize,
    pub regenerated: usize,
    pub discrepancies: Vec<Discrepancy>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

/// Checks record counts and every checksum, then regenerates `sample`
/// evenly spaced images from their seeds and compares bytes. Files that
/// already failed their checksum are not regenerated.
pub fn verify(manifest: &DatasetManifest, root: &Path, sample: usize) -> VerifyReport {
    let mut report = VerifyReport::default();
    let expected = manifest.expected_records();
    if manifest.records.len() != expected {
        report.discrepancies.push(Discrepancy::RecordCount {
            expected,
            found: manifest.records.len(),
        });
    }

    let checks = par::map_slice(&manifest.records, |rec| {
        let full = root.join(&rec.path);
        match fs::read(&full) {
            Err(_) => Some(Discrepancy::Missing {
                path: rec.path.clone(),
            }),
            Ok(bytes) => {
                let found = sha256_hex(&bytes);
                (found != rec.sha256).then(|| Discrepancy::Checksum {
                    path: rec.path.clone(),
                    expected: rec.sha256.clone(),
                    found,
                })
            }
        }
    });
    report.records_checked = manifest.records.len();
    let mut failed = vec![false; manifest.records.len()];
    for (i, d) in checks.into_iter().enumerate() {
        if let Some(d) = d {
            failed[i] = true;
            report.discrepancies.push(d);
        }
    }

    let n = manifest.records.len();
    let sample = sample.min(n);
    if sample == 0 {
        return report;
    }
    let renderer = match Renderer::from_manifest(manifest) {
        Ok(r) => r,
        Err(e) => {
            report.discrepancies.push(Discrepancy::CategoryFile {
                reason: e.to_string(),
            });
            return report;
        }
    };
    let picks: Vec<usize> = (0..sample)
        .map(|k| k * n / sample)
        .filter(|&i| !failed[i])
        .collect();
    let regen = par::map_slice(&picks, |&i| {
        let rec = &manifest.records[i];
        let mismatch = |reason: String| Discrepancy::Regeneration {
            path: rec.path.clone(),
            reason,
        };
        let inst = renderer
            .render_instance(rec.category_id, rec.instance_id)
            .map_err(|e| mismatch(e.to_string()))?;
        let bytes = manifest
            .spec
            .encode(&inst.image)
            .map_err(|e| mismatch(e.to_string()))?;
        let on_disk = fs::read(root.join(&rec.path)).map_err(|e| mismatch(e.to_string()))?;
        if bytes != on_disk {
            return Err(mismatch("regenerated bytes differ from file".into()));
        }
        if inst.seed != rec.seed || inst.diverged != rec.diverged {
            return Err(mismatch("regenerated metadata differs from record".into()));
        }
        Ok(())
    });
    report.regenerated = picks.len();
    report
        .discrepancies
        .extend(regen.into_iter().filter_map(|r| r.err()));
    report
}

/// Difficulty score per category; higher is harder.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PruningScores {
    pub scores: BTreeMap<usize, f64>,
}

impl PruningScores {
    /// JSON object `{"<id>": score, ...}` or CSV lines `id,score` (an
    /// optional non-numeric header line is skipped).
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            let raw: BTreeMap<String, f64> = serde_json::from_str(text)?;
            let mut scores = BTreeMap::new();
            for (k, v) in raw {
                let id = k
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::IncompleteScores(format!("`{k}` is not a category id")))?;
                scores.insert(id, v);
            }
            return Ok(Self { scores });
        }
        let mut scores = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let (Some(id), Some(score), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::IncompleteScores(format!(
                    "line {}: expected `id,score`",
                    n + 1
                )));
            };
            match (id.parse::<usize>(), score.parse::<f64>()) {
                (Ok(id), Ok(score)) => {
                    if scores.insert(id, score).is_some() {
                        return Err(Error::IncompleteScores(format!(
                            "category {id} scored twice"
                        )));
                    }
                }
                _ if scores.is_empty() && n == 0 => continue,
                _ => {
                    return Err(Error::IncompleteScores(format!(
                        "line {}: cannot parse `{line}`",
                        n + 1
                    )))
                }
            }
        }
        Ok(Self { scores })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Lowest-scoring kept categories, easiest first.
    pub easy: Vec<usize>,
    /// Highest-scoring kept categories, hardest last.
    pub hard: Vec<usize>,
}

impl Selection {
    /// All kept ids, ascending.
    pub fn ids(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.easy.iter().chain(&self.hard).copied().collect();
        v.sort_unstable();
        v
    }
}

/// Keeps the `k - floor(k (1 - easy_fraction))` lowest-scoring and the
/// `floor(k (1 - easy_fraction))` highest-scoring categories. Ties sort by
/// category id.
pub fn select_categories(
    manifest: &DatasetManifest,
    scores: &PruningScores,
    keep: usize,
    easy_fraction: f64,
) -> Result<Selection> {
    select_from(&manifest.category_ids(), scores, keep, easy_fraction)
}

pub fn select_from(
    categories: &[usize],
    scores: &PruningScores,
    keep: usize,
    easy_fraction: f64,
) -> Result<Selection> {
    if !(0.0..=1.0).contains(&easy_fraction) {
        return Err(Error::InvalidArgument(format!(
            "easy_fraction {easy_fraction} outside [0, 1]"
        )));
    }
    if keep > categories.len() {
        return Err(Error::InsufficientCategories {
            keep,
            available: categories.len(),
        });
    }
    let mut ranked = Vec::with_capacity(categories.len());
    for &id in categories {
        match scores.scores.get(&id) {
            Some(&s) if s.is_finite() => ranked.push((s, id)),
            Some(s) => {
                return Err(Error::IncompleteScores(format!(
                    "category {id} has non-finite score {s}"
                )))
            }
            None => {
                return Err(Error::IncompleteScores(format!(
                    "category {id} has no score"
                )))
            }
        }
    }
    if scores.scores.len() != categories.len() {
        let extra = scores
            .scores
            .keys()
            .find(|id| !categories.contains(id))
            .copied()
            .unwrap_or_default();
        return Err(Error::IncompleteScores(format!(
            "score given for category {extra}, which is not in the dataset"
        )));
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // The epsilon absorbs products like 1000 * 0.7 = 699.99...
    let hard_n = ((keep as f64) * (1.0 - easy_fraction) + 1e-9).floor() as usize;
    let hard_n = hard_n.min(keep);
    let easy_n = keep - hard_n;
    Ok(Selection {
        easy: ranked[..easy_n].iter().map(|&(_, id)| id).collect(),
        hard: ranked[ranked.len() - hard_n..]
            .iter()
            .map(|&(_, id)| id)
            .collect(),
    })
}
