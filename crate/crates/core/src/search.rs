//! Category search: rejection sampling of random IFSs.
//!
//! Candidate `i` is `sample_ifs(dim, SeedKey(master, i))`. Each candidate is
//! judged on a probe cloud drawn from a child key of its seed, so the verdict
//! for candidate `i` depends on nothing but `(master, i, config)`. Accepted
//! candidates are numbered in candidate order, which makes the category list
//! for a smaller `C` a prefix of the list for a larger one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{
    chaos_game, sample_ifs, AffineMap, Dimension, IfsSystem, PointCloud, DEFAULT_BURN_IN,
    DEFAULT_POINTS,
};
use crate::par;
use crate::raster::{normalize_points, DEFAULT_SIDE, MIN_SIDE};
use crate::seed::{purpose, SeedKey};

pub const DEFAULT_FILL_RATE: f64 = 0.2;
/// Minimum per-axis variance of a unit-cube-normalized 3D cloud. Roughly
/// 4-5% of random 3D systems clear it.
pub const DEFAULT_VARIANCE: f64 = 0.005;
pub const DEFAULT_ATTEMPTS_PER_CATEGORY: u64 = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub target_categories: usize,
    pub fill_rate_threshold: f64,
    pub variance_threshold: f64,
    pub max_attempts: u64,
    pub render_probe: usize,
    /// Chaos-game points per cloud (probe and final render alike).
    pub points: usize,
    pub burn_in: usize,
    /// Measure 3D variance after unit-cube normalization (default) or on raw coordinates.
    #[serde(default = "yes")]
    pub normalize_variance: bool,
}

fn yes() -> bool {
    true
}

impl SearchConfig {
    pub fn new(target_categories: usize) -> Self {
        Self {
            target_categories,
            fill_rate_threshold: DEFAULT_FILL_RATE,
            variance_threshold: DEFAULT_VARIANCE,
            max_attempts: DEFAULT_ATTEMPTS_PER_CATEGORY * target_categories as u64,
            render_probe: DEFAULT_SIDE,
            points: DEFAULT_POINTS,
            burn_in: DEFAULT_BURN_IN,
            normalize_variance: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.target_categories == 0 {
            return bad("target_categories must be at least 1".into());
        }
        if self.max_attempts < self.target_categories as u64 {
            return bad(format!(
                "max_attempts {} is below target_categories {}",
                self.max_attempts, self.target_categories
            ));
        }
        if !(0.0..1.0).contains(&self.fill_rate_threshold) {
            return bad(format!(
                "fill_rate_threshold {} outside [0, 1)",
                self.fill_rate_threshold
            ));
        }
        if !(self.variance_threshold >= 0.0 && self.variance_threshold.is_finite()) {
            return bad(format!(
                "variance_threshold {} must be a finite value >= 0",
                self.variance_threshold
            ));
        }
        if self.render_probe < MIN_SIDE {
            return bad(format!("render_probe must be at least {MIN_SIDE}"));
        }
        if self.points == 0 {
            return bad("points must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptanceStat {
    FillRate(f64),
    Variances([f64; 3]),
}

impl AcceptanceStat {
    fn passes(&self, cfg: &SearchConfig) -> bool {
        match *self {
            AcceptanceStat::FillRate(f) => f >= cfg.fill_rate_threshold,
            AcceptanceStat::Variances(v) => v.iter().all(|&x| x >= cfg.variance_threshold),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            AcceptanceStat::FillRate(f) => vec![f],
            AcceptanceStat::Variances(v) => v.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryRecord {
    pub category_id: usize,
    pub ifs: IfsSystem,
    pub seed: SeedKey,
    pub acceptance_stat: AcceptanceStat,
}

impl CategoryRecord {
    /// The cloud this category was judged on and is rendered from.
    pub fn cloud(&self, points: usize, burn_in: usize) -> Result<PointCloud> {
        category_cloud(&self.ifs, self.seed, points, burn_in)
    }
}

/// Chaos game for a category (or any IFS derived from it) from the origin.
pub fn category_cloud(
    ifs: &IfsSystem,
    seed: SeedKey,
    points: usize,
    burn_in: usize,
) -> Result<PointCloud> {
    let origin = vec![0.0; ifs.dimension().get()];
    chaos_game(
        ifs,
        points,
        burn_in,
        &origin,
        seed.derive(&[purpose::CHAOS_GAME]),
    )
}

/// Fraction of occupied cells when the cloud is normalized onto a
/// `probe_side` square with no margin. A cloud of identical points fills one cell.
pub fn fill_rate(points: &PointCloud, probe_side: usize) -> Result<f64> {
    if points.dimension() != Dimension::Two {
        return Err(Error::InvalidArgument("fill_rate takes a 2D cloud".into()));
    }
    if probe_side < MIN_SIDE {
        return Err(Error::InvalidArgument(format!(
            "probe side {probe_side} below minimum {MIN_SIDE}"
        )));
    }
    let total = (probe_side * probe_side) as f64;
    match normalize_points(points, probe_side, 0.0) {
        Ok(grid) => Ok(grid.count() as f64 / total),
        Err(Error::DegenerateExtent) => Ok(1.0 / total),
        Err(e) => Err(e),
    }
}

/// Population variance per axis after isotropic scaling of the bounding
/// box into the unit cube (longest side becomes 1).
pub fn axis_variances(points: &PointCloud) -> Result<[f64; 3]> {
    if points.dimension() != Dimension::Three {
        return Err(Error::InvalidArgument(
            "axis_variances takes a 3D cloud".into(),
        ));
    }
    variances(points, true)
}

/// Population variance per axis of the raw coordinates. A 2D cloud
/// reports 0 for the third axis.
pub fn raw_axis_variances(points: &PointCloud) -> Result<[f64; 3]> {
    variances(points, false)
}

fn variances(points: &PointCloud, normalize: bool) -> Result<[f64; 3]> {
    let dims = points.dimension().get();
    let bounds = points.bounds().ok_or(Error::EmptyCloud)?;
    let extent = if normalize {
        bounds.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
    } else {
        1.0
    };
    if extent == 0.0 {
        return Ok([0.0; 3]);
    }
    let n = points.len() as f64;
    let mut mean = [0.0; 3];
    for p in points.iter() {
        for a in 0..dims {
            mean[a] += (p[a] - bounds[a].0) / extent;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 3];
    for p in points.iter() {
        for a in 0..dims {
            let d = (p[a] - bounds[a].0) / extent - mean[a];
            var[a] += d * d;
        }
    }
    var.iter_mut().for_each(|v| *v /= n);
    Ok(var)
}

fn measure(cloud: &PointCloud, cfg: &SearchConfig) -> Result<AcceptanceStat> {
    match cloud.dimension() {
        Dimension::Two => fill_rate(cloud, cfg.render_probe).map(AcceptanceStat::FillRate),
        Dimension::Three => variances(cloud, cfg.normalize_variance).map(AcceptanceStat::Variances),
    }
}

/// Re-derives a record's statistic from its seed alone.
pub fn remeasure(record: &CategoryRecord, cfg: &SearchConfig) -> Result<AcceptanceStat> {
    let ifs = sample_ifs(record.ifs.dimension(), record.seed);
    let cloud = category_cloud(&ifs, record.seed, cfg.points, cfg.burn_in)?;
    measure(&cloud, cfg)
}

/// Verdict for one candidate: `Some(stat)` when accepted.
pub fn evaluate_candidate(
    dimension: Dimension,
    seed: SeedKey,
    cfg: &SearchConfig,
) -> Option<(IfsSystem, AcceptanceStat)> {
    let ifs = sample_ifs(dimension, seed);
    let cloud = category_cloud(&ifs, seed, cfg.points, cfg.burn_in).ok()?;
    let stat = measure(&cloud, cfg).ok()?;
    stat.passes(cfg).then_some((ifs, stat))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub records: Vec<CategoryRecord>,
    /// Candidates consumed, up to and including the last accepted one.
    pub attempts: u64,
}

impl SearchOutcome {
    pub fn acceptance_rate(&self) -> f64 {
        self.records.len() as f64 / self.attempts.max(1) as f64
    }
}

const BATCH: u64 = 256;

pub fn search(cfg: &SearchConfig, dimension: Dimension, master_seed: u64) -> Result<SearchOutcome> {
    cfg.validate()?;
    let target = cfg.target_categories;
    let mut records = Vec::with_capacity(target);
    let mut next = 0u64;
    while next < cfg.max_attempts {
        let end = (next + BATCH).min(cfg.max_attempts);
        let verdicts = par::map_range(next as usize..end as usize, |i| {
            evaluate_candidate(dimension, SeedKey::new(master_seed, i as u64), cfg)
        });
        for (offset, verdict) in verdicts.into_iter().enumerate() {
            if let Some((ifs, acceptance_stat)) = verdict {
                let stream = next + offset as u64;
                records.push(CategoryRecord {
                    category_id: records.len(),
                    ifs,
                    seed: SeedKey::new(master_seed, stream),
                    acceptance_stat,
                });
                if records.len() == target {
                    return Ok(SearchOutcome {
                        records,
                        attempts: stream + 1,
                    });
                }
            }
        }
        next = end;
    }
    let attempts = cfg.max_attempts;
    Err(Error::SearchExhausted {
        attempts,
        accepted: records.len(),
        target,
        rate: records.len() as f64 / attempts as f64,
    })
}

/// Exactly `cfg.target_categories` accepted categories, numbered in candidate order.
pub fn search_categories(
    cfg: &SearchConfig,
    dimension: Dimension,
    master_seed: u64,
) -> Result<Vec<CategoryRecord>> {
    search(cfg, dimension, master_seed).map(|o| o.records)
}

// ---------------------------------------------------------------------------
// Category file
//
// One record per line, space separated:
//   id dim M (linear row-major, translation) x M  p_1..p_M  master stream  stat..
// Reals use 17 significant digits so every f64 round-trips exactly.
// ---------------------------------------------------------------------------

pub const CATEGORY_FILE_HEADER: &str = "# ofdb category file v1";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_category_line(rec: &CategoryRecord) -> String {
    let mut fields = vec![
        rec.category_id.to_string(),
        rec.ifs.dimension().get().to_string(),
        rec.ifs.len().to_string(),
    ];
    for m in rec.ifs.maps() {
        fields.extend(m.linear().iter().chain(m.translation()).map(|&v| real(v)));
    }
    fields.extend(rec.ifs.probabilities().iter().map(|&v| real(v)));
    fields.push(rec.seed.master_seed.to_string());
    fields.push(rec.seed.stream_index.to_string());
    fields.extend(rec.acceptance_stat.values().into_iter().map(real));
    fields.join(" ")
}

pub fn write_category_file(records: &[CategoryRecord]) -> String {
    let mut out = String::from(CATEGORY_FILE_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format_category_line(r));
        out.push('\n');
    }
    out
}

pub fn parse_category_line(line: &str, line_no: usize) -> Result<CategoryRecord> {
    let fail = |reason: String| Error::CategoryFormat {
        line: line_no,
        reason,
    };
    let tokens: Vec<&str> = line.split_ascii_whitespace().collect();
    let mut pos = 0;
    let mut take = |what: &str| -> Result<&str> {
        let t = tokens
            .get(pos)
            .copied()
            .ok_or_else(|| fail(format!("missing {what}")))?;
        pos += 1;
        Ok(t)
    };
    let int = |t: &str, what: &str| t.parse::<u64>().map_err(|e| fail(format!("{what}: {e}")));
    let float = |t: &str| t.parse::<f64>().map_err(|e| fail(format!("`{t}`: {e}")));

    let category_id = int(take("category id")?, "category id")? as usize;
    let dimension =
        Dimension::try_from(int(take("dimension")?, "dimension")? as u8).map_err(fail)?;
    let m = int(take("map count")?, "map count")? as usize;
    let d = dimension.get();
    let mut maps = Vec::with_capacity(m);
    for _ in 0..m {
        let linear = (0..d * d)
            .map(|_| take("coefficient").and_then(float))
            .collect::<Result<Vec<_>>>()?;
        let translation = (0..d)
            .map(|_| take("coefficient").and_then(float))
            .collect::<Result<Vec<_>>>()?;
        maps.push(AffineMap::new(dimension, linear, translation).map_err(|e| fail(e.to_string()))?);
    }
    let probabilities = (0..m)
        .map(|_| take("probability").and_then(float))
        .collect::<Result<Vec<_>>>()?;
    let master_seed = int(take("master seed")?, "master seed")?;
    let stream_index = int(take("stream index")?, "stream index")?;
    let acceptance_stat = match dimension {
        Dimension::Two => AcceptanceStat::FillRate(float(take("fill rate")?)?),
        Dimension::Three => AcceptanceStat::Variances([
            float(take("variance")?)?,
            float(take("variance")?)?,
            float(take("variance")?)?,
        ]),
    };
    if pos != tokens.len() {
        return Err(fail(format!("{} trailing fields", tokens.len() - pos)));
    }
    let ifs = IfsSystem::new(maps, probabilities).map_err(|e| fail(e.to_string()))?;
    Ok(CategoryRecord {
        category_id,
        ifs,
        seed: SeedKey::new(master_seed, stream_index),
        acceptance_stat,
    })
}

/// Parses a category file; `#` lines and blank lines are skipped.
pub fn parse_category_file(text: &str) -> Result<Vec<CategoryRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| parse_category_line(l, i + 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_fill_one_cell() {
        let c = PointCloud::from_points(&[[0.3, 0.3]; 10]).unwrap();
        assert_eq!(fill_rate(&c, 64).unwrap(), 1.0 / 4096.0);
    }

    #[test]
    fn pixel_centers_fill_the_probe() {
        let mut pts = Vec::new();
        for r in 0..8 {
            for c in 0..8 {
                pts.push([c as f64 + 0.5, r as f64 + 0.5]);
            }
        }
        let cloud = PointCloud::from_points(&pts).unwrap();
        assert_eq!(fill_rate(&cloud, 8).unwrap(), 1.0);
    }

    #[test]
    fn fill_rate_errors() {
        let empty = PointCloud::from_flat(Dimension::Two, vec![]).unwrap();
        assert!(matches!(fill_rate(&empty, 64), Err(Error::EmptyCloud)));
        let ok = PointCloud::from_points(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!(fill_rate(&ok, 4).is_err());
    }

    #[test]
    fn cube_corner_variances() {
        let mut corners = Vec::new();
        for i in 0..8 {
            corners.push([(i & 1) as f64, (i >> 1 & 1) as f64, (i >> 2 & 1) as f64]);
        }
        let c = PointCloud::from_points(&corners).unwrap();
        assert_eq!(axis_variances(&c).unwrap(), [0.25; 3]);
        // Isotropic: a 2x-stretched cube keeps the x spread and halves y/z.
        let stretched: Vec<[f64; 3]> = corners.iter().map(|p| [2.0 * p[0], p[1], p[2]]).collect();
        let stretched = PointCloud::from_points(&stretched).unwrap();
        assert_eq!(axis_variances(&stretched).unwrap(), [0.25, 0.0625, 0.0625]);
        assert_eq!(raw_axis_variances(&stretched).unwrap(), [1.0, 0.25, 0.25]);
    }

    #[test]
    fn variance_edge_cases() {
        let same = PointCloud::from_points(&[[1.0, 2.0, 3.0]; 5]).unwrap();
        assert_eq!(axis_variances(&same).unwrap(), [0.0; 3]);
        let empty = PointCloud::from_flat(Dimension::Three, vec![]).unwrap();
        assert!(matches!(axis_variances(&empty), Err(Error::EmptyCloud)));
        let flat = PointCloud::from_points(&[[1.0, 2.0]]).unwrap();
        assert!(axis_variances(&flat).is_err());
    }

    fn small_cfg(c: usize) -> SearchConfig {
        SearchConfig {
            points: 5_000,
            render_probe: 64,
            ..SearchConfig::new(c)
        }
    }

    #[test]
    fn vacuous_threshold_accepts_first_bounded_candidate() {
        let cfg = SearchConfig {
            fill_rate_threshold: 0.0,
            ..small_cfg(1)
        };
        let out = search(&cfg, Dimension::Two, 17).unwrap();
        let first_ok = (0..)
            .find(|&i| {
                let seed = SeedKey::new(17, i);
                category_cloud(
                    &sample_ifs(Dimension::Two, seed),
                    seed,
                    cfg.points,
                    cfg.burn_in,
                )
                .is_ok()
            })
            .unwrap();
        assert_eq!(out.records[0].seed.stream_index, first_ok);
        assert_eq!(out.attempts, first_ok + 1);
    }

    #[test]
    fn accepted_records_meet_threshold_and_remeasure() {
        let cfg = small_cfg(12);
        let recs = search_categories(&cfg, Dimension::Two, 3).unwrap();
        assert_eq!(recs.len(), 12);
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r.category_id, i);
            let AcceptanceStat::FillRate(f) = r.acceptance_stat else {
                panic!("2D record without fill rate")
            };
            assert!(f >= cfg.fill_rate_threshold);
            assert_eq!(remeasure(r, &cfg).unwrap(), r.acceptance_stat);
            assert_eq!(sample_ifs(Dimension::Two, r.seed), r.ifs);
        }
    }

    #[test]
    fn smaller_search_is_a_prefix() {
        let cfg = small_cfg(4);
        let small = search_categories(&cfg, Dimension::Two, 8).unwrap();
        let big = search_categories(&small_cfg(10), Dimension::Two, 8).unwrap();
        assert_eq!(small[..], big[..4]);
    }

    #[test]
    fn exhaustion_is_reported() {
        let cfg = SearchConfig {
            fill_rate_threshold: 0.99,
            max_attempts: 20,
            ..small_cfg(2)
        };
        match search(&cfg, Dimension::Two, 1) {
            Err(Error::SearchExhausted {
                attempts, target, ..
            }) => {
                assert_eq!(attempts, 20);
                assert_eq!(target, 2);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::new(0).validate().is_err());
        let c = SearchConfig {
            max_attempts: 3,
            ..SearchConfig::new(5)
        };
        assert!(c.validate().is_err());
        let c = SearchConfig {
            fill_rate_threshold: 1.5,
            ..SearchConfig::new(5)
        };
        assert!(c.validate().is_err());
        assert!(SearchConfig::new(5).validate().is_ok());
    }

    #[test]
    fn category_file_round_trip() {
        let cfg = small_cfg(3);
        let mut recs = search_categories(&cfg, Dimension::Two, 5).unwrap();
        let cfg3 = SearchConfig {
            variance_threshold: 0.0,
            ..small_cfg(2)
        };
        recs.extend(search_categories(&cfg3, Dimension::Three, 5).unwrap());
        let text = write_category_file(&recs);
        assert!(text.starts_with(CATEGORY_FILE_HEADER));
        assert_eq!(parse_category_file(&text).unwrap(), recs);
    }

    #[test]
    fn category_file_rejects_garbage() {
        assert!(parse_category_file("0 2 2 1.0").is_err());
        assert!(parse_category_file("0 4 2").is_err());
        let rec = CategoryRecord {
            category_id: 0,
            ifs: IfsSystem::sierpinski(),
            seed: SeedKey::new(1, 2),
            acceptance_stat: AcceptanceStat::FillRate(0.5),
        };
        let line = format_category_line(&rec);
        assert!(parse_category_line(&format!("{line} 7"), 1).is_err());
        assert_eq!(parse_category_line(&line, 1).unwrap(), rec);
    }
}
