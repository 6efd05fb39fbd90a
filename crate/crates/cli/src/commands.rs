use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use ofdb_core::camera::{enumerate_viewpoints, Axis, DEFAULT_VIEWPOINT_STEP};
use ofdb_core::dataset::{
    self, select_categories, DatasetManifest, DatasetSpec, PruningScores, Renderer,
    DEFAULT_VERIFY_SAMPLE, MANIFEST_FILE,
};
use ofdb_core::ifs::Dimension;
use ofdb_core::raster::{render, AugmentationMode};
use ofdb_core::search::{category_cloud, raw_axis_variances, search, AcceptanceStat};
use ofdb_core::seed::purpose;
use ofdb_core::train::{plan_epoch, write_stream, BatchPlan, PlanOptions};
use ofdb_core::{par, SeedKey};

use crate::config::layer;
use crate::{Globals, UsageError};

fn required<T>(v: Option<T>, flag: &str) -> Result<T, UsageError> {
    v.ok_or_else(|| UsageError(format!("--{flag} is required (flag or config file)")))
}

/// Parses a snake_case enum name through its serde representation.
fn parse_named<T: DeserializeOwned>(s: &str, flag: &str) -> Result<T, UsageError> {
    serde_json::from_value(json!(s)).map_err(|_| UsageError(format!("invalid --{flag} `{s}`")))
}

fn dimension(d: u8) -> Result<Dimension, UsageError> {
    match d {
        2 => Ok(Dimension::Two),
        3 => Ok(Dimension::Three),
        _ => Err(UsageError(format!("--dim must be 2 or 3, got {d}"))),
    }
}

fn echo<T: Serialize>(command: &str, g: &Globals, resolved: &T) {
    let v = json!({ "command": command, "threads": g.threads, "options": resolved });
    eprintln!("resolved config: {v}");
}

fn emit<T: Serialize>(g: &Globals, summary: &T, human: impl FnOnce()) -> anyhow::Result<()> {
    if g.json {
        println!("{}", serde_json::to_string_pretty(summary)?);
    } else {
        human();
    }
    Ok(())
}

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(MANIFEST_FILE)
    } else {
        p.to_path_buf()
    }
}

fn read_manifest(p: &Path) -> anyhow::Result<(DatasetManifest, PathBuf)> {
    let path = manifest_path(p);
    let m = DatasetManifest::read(&path)
        .with_context(|| format!("cannot load manifest {}", path.display()))?;
    let root = path
        .parent()
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    Ok((m, root))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One image per category.
    Ofdb,
    /// 1,000 instances per category: 4 rotations x 25 fluctuations x 10 patches.
    Fractaldb,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct GenerateOpts {
    /// Fractal dimension, 2 or 3 [default: 2]
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub dim: Option<u8>,
    /// Number of categories [default: 1000]
    #[arg(long)]
    pub categories: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset layout [default: ofdb]
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Comma-separated camera axes for 3D (roll, pitch, yaw) [default: yaw]
    #[arg(long)]
    pub viewpoint_axes: Option<String>,
    /// Viewpoint angle step in degrees; must divide 360 [default: 30]
    #[arg(long)]
    pub viewpoint_step: Option<u32>,
    /// 3D pose choice per category: modulo or canonical [default: modulo]
    #[arg(long)]
    pub pose_policy: Option<String>,
    /// Augmentation baked into stored images (one-instance mode) [default: plain]
    #[arg(long)]
    pub augmentation: Option<String>,
    /// white_on_black or black_on_white [default: white_on_black]
    #[arg(long)]
    pub polarity: Option<String>,
    /// Image side in pixels [default: 256]
    #[arg(long)]
    pub image_side: Option<usize>,
    /// Border fraction on each side [default: 0.05]
    #[arg(long)]
    pub margin: Option<f64>,
    /// Chaos-game points per category [default: 100000]
    #[arg(long)]
    pub points: Option<usize>,
    /// Discarded initial iterations [default: 100]
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// 2D acceptance: minimum fill rate [default: 0.2]
    #[arg(long)]
    pub fill_threshold: Option<f64>,
    /// 3D acceptance: minimum per-axis variance [default: 0.005]
    #[arg(long)]
    pub variance_threshold: Option<f64>,
    /// Candidate budget [default: 50 x categories]
    #[arg(long)]
    pub max_attempts: Option<u64>,
    /// Side of the fill-rate probe raster [default: 256]
    #[arg(long)]
    pub probe_side: Option<usize>,
    /// Dataset name recorded in the manifest.
    #[arg(long)]
    pub name: Option<String>,
}

impl GenerateOpts {
    fn spec(&self) -> Result<DatasetSpec, UsageError> {
        let dim = dimension(self.dim.unwrap_or(2))?;
        let categories = self.categories.unwrap_or(1000);
        if categories == 0 {
            return Err(UsageError("--categories must be at least 1".into()));
        }
        let seed = self.seed.unwrap_or(0);
        let mut spec = match self.mode.unwrap_or(Mode::Ofdb) {
            Mode::Ofdb => DatasetSpec::ofdb(dim, categories, seed),
            Mode::Fractaldb => DatasetSpec::fractaldb(dim, categories, seed),
        };
        if let Some(n) = &self.name {
            spec.name = n.clone();
        }
        if dim == Dimension::Three
            && (self.viewpoint_axes.is_some() || self.viewpoint_step.is_some())
        {
            let axes = self
                .viewpoint_axes
                .as_deref()
                .unwrap_or("yaw")
                .split(',')
                .map(|a| a.trim().parse::<Axis>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| UsageError(e.to_string()))?;
            let step = self.viewpoint_step.unwrap_or(DEFAULT_VIEWPOINT_STEP);
            spec.viewpoints =
                Some(enumerate_viewpoints(&axes, step).map_err(|e| UsageError(e.to_string()))?);
        }
        if let Some(p) = &self.pose_policy {
            spec.pose_policy = parse_named(p, "pose-policy")?;
        }
        if let Some(a) = &self.augmentation {
            spec.augmentation_mode = a
                .parse()
                .map_err(|e: ofdb_core::Error| UsageError(e.to_string()))?;
        }
        if let Some(p) = &self.polarity {
            spec.polarity = parse_named(p, "polarity")?;
        }
        if let Some(v) = self.image_side {
            spec.image_side = v;
        }
        if let Some(v) = self.margin {
            spec.margin = v;
        }
        let s = &mut spec.search;
        if let Some(v) = self.points {
            s.points = v;
        }
        if let Some(v) = self.burn_in {
            s.burn_in = v;
        }
        if let Some(v) = self.fill_threshold {
            s.fill_rate_threshold = v;
        }
        if let Some(v) = self.variance_threshold {
            s.variance_threshold = v;
        }
        if let Some(v) = self.max_attempts {
            s.max_attempts = v;
        }
        if let Some(v) = self.probe_side {
            s.render_probe = v;
        }
        spec.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(spec)
    }
}

pub fn generate(g: &Globals, flags: &GenerateOpts) -> anyhow::Result<()> {
    let o = layer(flags, g.file.as_ref())?;
    let out = required(o.out.clone(), "out")?;
    let spec = o.spec()?;
    echo("generate", g, &json!({ "out": out, "spec": spec }));
    eprintln!(
        "generating {} categories x {} instances with {} threads",
        spec.categories, spec.instances_per_category, g.threads
    );
    let start = Instant::now();
    let summary = dataset::build(&spec, &out)?;
    let secs = start.elapsed().as_secs_f64();
    let report = json!({
        "manifest": summary.manifest_path,
        "categories": spec.categories,
        "instances_per_category": spec.instances_per_category,
        "images": summary.manifest.records.len(),
        "wall_seconds": secs,
        "search_attempts": summary.manifest.search_attempts,
        "acceptance_rate": summary.acceptance_rate,
        "diverged_instances": summary.diverged_instances,
    });
    emit(g, &report, || {
        println!("manifest: {}", summary.manifest_path.display());
        println!("categories: {}", spec.categories);
        println!("images: {}", summary.manifest.records.len());
        println!("wall time: {secs:.2} s");
        println!(
            "acceptance rate: {:.4} ({} candidates)",
            summary.acceptance_rate, summary.manifest.search_attempts
        );
        if summary.diverged_instances > 0 {
            println!("diverged instances (blank): {}", summary.diverged_instances);
        }
    })
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct PreviewOpts {
    /// Take the category from an existing dataset instead of searching.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Category id [default: 0]
    #[arg(long)]
    pub category: Option<usize>,
    /// Augmentation: plain, pattern, texture, fixed_patch:N [default: pattern]
    #[arg(long)]
    pub augmentation: Option<String>,
    /// Fractal dimension when searching [default: 2]
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub dim: Option<u8>,
    /// Master seed when searching [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Image side when searching [default: 256]
    #[arg(long)]
    pub image_side: Option<usize>,
    /// Chaos-game points when searching [default: 100000]
    #[arg(long)]
    pub points: Option<usize>,
    /// Fill-rate probe side when searching [default: 256]
    #[arg(long)]
    pub probe_side: Option<usize>,
    /// Augmentation draws for the two variants [default: 0,1]
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub draws: Option<Vec<u64>>,
    /// Output directory for a.png, b.png and diff.png.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn preview_aug(g: &Globals, flags: &PreviewOpts) -> anyhow::Result<()> {
    let o = layer(flags, g.file.as_ref())?;
    let out = required(o.out.clone(), "out")?;
    let category = o.category.unwrap_or(0);
    let draws = o.draws.clone().unwrap_or_else(|| vec![0, 1]);
    let [da, db] = draws[..] else {
        return Err(UsageError("--draws takes exactly two values".into()).into());
    };
    echo("preview-aug", g, &o);
    // An unknown augmentation name is a domain error (exit 1), not a usage error.
    let mode: AugmentationMode = o.augmentation.as_deref().unwrap_or("pattern").parse()?;

    let owned;
    let (spec, records) = match &o.manifest {
        Some(p) => {
            owned = read_manifest(p)?.0;
            if !owned.category_ids().contains(&category) {
                bail!("category {category} is not in the manifest");
            }
            (owned.spec.clone(), owned.categories()?)
        }
        None => {
            let mut spec = DatasetSpec::ofdb(
                dimension(o.dim.unwrap_or(2))?,
                category + 1,
                o.seed.unwrap_or(0),
            );
            if let Some(v) = o.image_side {
                spec.image_side = v;
            }
            if let Some(v) = o.points {
                spec.search.points = v;
            }
            if let Some(v) = o.probe_side {
                spec.search.render_probe = v;
            }
            spec.validate().map_err(|e| UsageError(e.to_string()))?;
            let found = search(&spec.search, spec.dimension, spec.master_seed)?;
            (spec, found.records)
        }
    };
    let renderer = Renderer::new(&spec, records);
    let grid = renderer.category_grid(category)?;
    let key = SeedKey::new(spec.master_seed, 0);
    let draw = |d: u64| {
        render(
            &grid,
            mode,
            key.derive(&[purpose::AUGMENT, category as u64, d]),
        )
    };
    let a = draw(da)?;
    let b = draw(db)?;
    let diff = a.abs_diff(&b)?;

    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut written = Vec::new();
    for (name, img) in [("a.png", &a), ("b.png", &b), ("diff.png", &diff)] {
        let path = out.join(name);
        fs::write(&path, img.to_png()?)
            .with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
    }
    let changed = diff.pixels().iter().filter(|&&p| p != 0).count();
    let report = json!({
        "category": category,
        "augmentation": mode.to_string(),
        "dots": grid.count(),
        "files": written,
        "differing_pixels": changed,
    });
    emit(g, &report, || {
        for p in &written {
            println!("wrote {}", p.display());
        }
        println!("dots: {}, differing pixels: {changed}", grid.count());
    })
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct PruneOpts {
    /// Manifest file or dataset directory.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Difficulty scores: JSON object {"id": score} or CSV lines id,score.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Categories to keep.
    #[arg(long)]
    pub keep: Option<usize>,
    /// Fraction of kept categories taken from the easy end [default: 0.5]
    #[arg(long)]
    pub easy_fraction: Option<f64>,
    /// Write selected ids here, one per line [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a manifest restricted to the selection.
    #[arg(long)]
    pub out_manifest: Option<PathBuf>,
}

pub fn prune(g: &Globals, flags: &PruneOpts) -> anyhow::Result<()> {
    let o = layer(flags, g.file.as_ref())?;
    let manifest = required(o.manifest.clone(), "manifest")?;
    let scores_path = required(o.scores.clone(), "scores")?;
    let keep = required(o.keep, "keep")?;
    let easy_fraction = o.easy_fraction.unwrap_or(0.5);
    echo(
        "prune",
        g,
        &json!({ "manifest": manifest, "scores": scores_path, "keep": keep,
        "easy_fraction": easy_fraction, "out": o.out, "out_manifest": o.out_manifest }),
    );

    let (m, _) = read_manifest(&manifest)?;
    let text = fs::read_to_string(&scores_path)
        .with_context(|| format!("cannot read scores {}", scores_path.display()))?;
    let scores = PruningScores::parse(&text)?;
    let sel = select_categories(&m, &scores, keep, easy_fraction)?;
    let ids = sel.ids();

    let listing: String = ids.iter().map(|i| format!("{i}\n")).collect();
    if let Some(p) = &o.out {
        fs::write(p, &listing).with_context(|| format!("cannot write {}", p.display()))?;
    }
    if let Some(p) = &o.out_manifest {
        m.filtered(&ids)?.write(p)?;
    }
    let report = json!({
        "kept": ids.len(),
        "easy": sel.easy,
        "hard": sel.hard,
        "ids": ids,
    });
    if g.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else if o.out.is_none() {
        print!("{listing}");
    }
    eprintln!(
        "kept {} categories: {} easy, {} hard",
        ids.len(),
        sel.easy.len(),
        sel.hard.len()
    );
    Ok(())
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct VerifyOpts {
    /// Manifest file or dataset directory.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory image paths are relative to [default: the manifest's directory]
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Images to regenerate from their seeds [default: 10]
    #[arg(long)]
    pub sample: Option<usize>,
}

pub fn verify(g: &Globals, flags: &VerifyOpts) -> anyhow::Result<()> {
    let o = layer(flags, g.file.as_ref())?;
    let manifest = required(o.manifest.clone(), "manifest")?;
    let sample = o.sample.unwrap_or(DEFAULT_VERIFY_SAMPLE);
    echo(
        "verify",
        g,
        &json!({ "manifest": manifest, "root": o.root, "sample": sample }),
    );
    let (m, default_root) = read_manifest(&manifest)?;
    let root = o.root.clone().unwrap_or(default_root);
    let report = dataset::verify(&m, &root, sample);
    emit(g, &report, || {
        println!(
            "checked {} records, regenerated {}",
            report.records_checked, report.regenerated
        );
        for d in &report.discrepancies {
            println!("{}", serde_json::to_string(d).unwrap_or_default());
        }
    })?;
    if !report.is_clean() {
        bail!("{} discrepancies", report.discrepancies.len());
    }
    Ok(())
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct StatsOpts {
    /// Manifest file or dataset directory.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Histogram bins [default: 10]
    #[arg(long)]
    pub bins: Option<usize>,
    /// Re-run each category's chaos game for point-spread summaries [default: true]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub spread: Option<bool>,
}

#[derive(Debug, Serialize)]
struct Histogram {
    label: String,
    min: f64,
    max: f64,
    mean: f64,
    edges: Vec<f64>,
    counts: Vec<usize>,
}

impl Histogram {
    fn new(label: &str, values: &[f64], bins: usize) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
        let width = (max - min) / bins as f64;
        let edges = (0..=bins).map(|k| min + width * k as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let k = if width > 0.0 {
                ((v - min) / width) as usize
            } else {
                0
            };
            counts[k.min(bins - 1)] += 1;
        }
        Self {
            label: label.into(),
            min,
            max,
            mean,
            edges,
            counts,
        }
    }

    fn print(&self) {
        println!(
            "{}: min {:.6} mean {:.6} max {:.6}",
            self.label, self.min, self.mean, self.max
        );
        let peak = self.counts.iter().copied().max().unwrap_or(1).max(1);
        for (k, &c) in self.counts.iter().enumerate() {
            let bar = "#".repeat((c * 40).div_ceil(peak));
            println!(
                "  [{:.6}, {:.6}) {c:>7} {bar}",
                self.edges[k],
                self.edges[k + 1]
            );
        }
    }
}

#[derive(Debug, Serialize)]
struct Spread {
    category_id: usize,
    extent: Vec<f64>,
    variance: [f64; 3],
}

pub fn stats(g: &Globals, flags: &StatsOpts) -> anyhow::Result<()> {
    let o = layer(flags, g.file.as_ref())?;
    let manifest = required(o.manifest.clone(), "manifest")?;
    let bins = o.bins.unwrap_or(10);
    if bins == 0 {
        return Err(UsageError("--bins must be at least 1".into()).into());
    }
    let spread = o.spread.unwrap_or(true);
    echo(
        "stats",
        g,
        &json!({ "manifest": manifest, "bins": bins, "spread": spread }),
    );
    let (m, _) = read_manifest(&manifest)?;
    let ids = m.category_ids();
    let all = m.categories()?;
    let records: Vec<_> = ids.iter().map(|&i| &all[i]).collect();

    let mut hists = Vec::new();
    match m.spec.dimension {
        Dimension::Two => {
            let v: Vec<f64> = records
                .iter()
                .flat_map(|r| r.acceptance_stat.values())
                .collect();
            hists.push(Histogram::new("fill rate", &v, bins));
        }
        Dimension::Three => {
            for (axis, name) in ["x", "y", "z"].iter().enumerate() {
                let v: Vec<f64> = records
                    .iter()
                    .map(|r| match r.acceptance_stat {
                        AcceptanceStat::Variances(v) => v[axis],
                        AcceptanceStat::FillRate(f) => f,
                    })
                    .collect();
                hists.push(Histogram::new(&format!("variance {name}"), &v, bins));
            }
        }
    }

    let spreads: Vec<Spread> = if spread {
        let cfg = &m.spec.search;
        par::map_slice(&records, |r| {
            let cloud = category_cloud(&r.ifs, r.seed, cfg.points, cfg.burn_in)?;
            let extent = cloud
                .bounds()
                .map(|b| b.iter().map(|(lo, hi)| hi - lo).collect())
                .unwrap_or_default();
            Ok::<_, ofdb_core::Error>(Spread {
                category_id: r.category_id,
                extent,
                variance: raw_axis_variances(&cloud)?,
            })
        })
        .into_iter()
        .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };

    let report = json!({
        "dimension": m.spec.dimension.get(),
        "categories": ids.len(),
        "images": m.records.len(),
        "diverged_instances": m.records.iter().filter(|r| r.diverged).count(),
        "histograms": hists,
        "spread": spreads,
    });
    emit(g, &report, || {
        println!("{} categories, {} images", ids.len(), m.records.len());
        for h in &hists {
            h.print();
        }
        if !spreads.is_empty() {
            println!("category  extent  raw variance");
            for s in &spreads {
                let ext: Vec<String> = s.extent.iter().map(|e| format!("{e:.4}")).collect();
                let var: Vec<String> = s.variance[..s.extent.len()]
                    .iter()
                    .map(|e| format!("{e:.4}"))
                    .collect();
                println!(
                    "{:>8}  [{}]  [{}]",
                    s.category_id,
                    ext.join(", "),
                    var.join(", ")
                );
            }
        }
    })
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct PlanOpts {
    /// Manifest file or dataset directory.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Epoch index [default: 0]
    #[arg(long)]
    pub epoch: Option<u64>,
    /// Batch size [default: 256]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Augmentation applied per entry [default: pattern]
    #[arg(long)]
    pub augmentation: Option<String>,
    /// Random quarter-turn rotation per entry [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub rotate: Option<bool>,
    /// Plan seed [default: the dataset's master seed]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn resolve_plan(
    g: &Globals,
    flags: &PlanOpts,
    cmd: &str,
) -> anyhow::Result<(DatasetManifest, BatchPlan, PlanOpts)> {
    let o = layer(flags, g.file.as_ref())?;
    let manifest = required(o.manifest.clone(), "manifest")?;
    let batch_size = o.batch_size.unwrap_or(256);
    if batch_size == 0 {
        return Err(UsageError("--batch-size must be at least 1".into()).into());
    }
    let augmentation: AugmentationMode = o.augmentation.as_deref().unwrap_or("pattern").parse()?;
    let options = PlanOptions {
        augmentation,
        rotate: o.rotate.unwrap_or(false),
    };
    let (m, _) = read_manifest(&manifest)?;
    let seed = SeedKey::new(o.seed.unwrap_or(m.spec.master_seed), 0);
    let epoch = o.epoch.unwrap_or(0);
    echo(
        cmd,
        g,
        &json!({ "manifest": manifest, "epoch": epoch, "batch_size": batch_size,
        "options": options, "seed": seed.master_seed, "out": o.out }),
    );
    let plan = plan_epoch(&m, epoch, batch_size, options, seed)?;
    Ok((m, plan, o))
}

pub fn plan(g: &Globals, flags: &PlanOpts) -> anyhow::Result<()> {
    let (_, plan, o) = resolve_plan(g, flags, "plan")?;
    let text = plan.to_json()? + "\n";
    match &o.out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{text}"),
    }
    eprintln!(
        "{} entries in {} batches",
        plan.entries.len(),
        plan.batch_sizes().len()
    );
    Ok(())
}

pub fn stream(g: &Globals, flags: &PlanOpts) -> anyhow::Result<()> {
    let (m, plan, o) = resolve_plan(g, flags, "stream")?;
    let renderer = Renderer::from_manifest(&m)?;
    let n = match &o.out {
        Some(p) => {
            let f =
                fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            write_stream(&renderer, &plan, &mut BufWriter::new(f))?
        }
        None => write_stream(&renderer, &plan, &mut BufWriter::new(io::stdout().lock()))?,
    };
    io::stdout().flush().ok();
    eprintln!("streamed {n} frames");
    Ok(())
}
