//! Iterated function systems and the chaos game.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::SeedKey;

/// Floor applied to `|det|` before the determinant weights are normalized.
pub const DET_FLOOR: f64 = 1e-6;
/// Any retained coordinate above this magnitude is treated as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e6;
pub const MIN_MAPS: usize = 2;
pub const MAX_MAPS: usize = 8;
pub const DEFAULT_BURN_IN: usize = 100;
pub const DEFAULT_POINTS: usize = 100_000;
/// Coefficient scale factors used by [`fluctuate_ifs`].
pub const FLUCTUATION_FACTORS: [f64; 5] = [0.8, 0.9, 1.0, 1.1, 1.2];
pub const FLUCTUATION_VARIANTS: usize = 25;
/// The variant whose factor pair is (1.0, 1.0).
pub const IDENTITY_VARIANT: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    pub const fn get(self) -> usize {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }
}

impl TryFrom<u8> for Dimension {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            2 => Ok(Dimension::Two),
            3 => Ok(Dimension::Three),
            other => Err(format!("dimension must be 2 or 3, got {other}")),
        }
    }
}

impl From<Dimension> for u8 {
    fn from(d: Dimension) -> u8 {
        d.get() as u8
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}D", self.get())
    }
}

/// `x -> linear * x + translation`, with `linear` stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    dimension: Dimension,
    linear: Vec<f64>,
    translation: Vec<f64>,
}

impl AffineMap {
    pub fn new(dimension: Dimension, linear: Vec<f64>, translation: Vec<f64>) -> Result<Self> {
        let d = dimension.get();
        if linear.len() != d * d || translation.len() != d {
            return Err(Error::InvalidArgument(format!(
                "{dimension} affine map needs {} linear and {d} translation entries, got {} and {}",
                d * d,
                linear.len(),
                translation.len()
            )));
        }
        if !linear.iter().chain(&translation).all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "affine map entries must be finite".into(),
            ));
        }
        Ok(Self {
            dimension,
            linear,
            translation,
        })
    }

    /// Uniform scaling `s * I` plus a translation.
    pub fn similarity(dimension: Dimension, scale: f64, translation: &[f64]) -> Result<Self> {
        let d = dimension.get();
        let mut linear = vec![0.0; d * d];
        for i in 0..d {
            linear[i * d + i] = scale;
        }
        Self::new(dimension, linear, translation.to_vec())
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.linear;
        match self.dimension {
            Dimension::Two => m[0] * m[3] - m[1] * m[2],
            Dimension::Three => {
                m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                    + m[2] * (m[3] * m[7] - m[4] * m[6])
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dimension.get();
        (0..d)
            .map(|r| {
                let row = &self.linear[r * d..(r + 1) * d];
                self.translation[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    fn scaled(&self, linear_factor: f64, translation_factor: f64) -> Self {
        Self {
            dimension: self.dimension,
            linear: self.linear.iter().map(|v| v * linear_factor).collect(),
            translation: self
                .translation
                .iter()
                .map(|v| v * translation_factor)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IfsSystem {
    maps: Vec<AffineMap>,
    probabilities: Vec<f64>,
}

impl IfsSystem {
    pub fn new(maps: Vec<AffineMap>, probabilities: Vec<f64>) -> Result<Self> {
        if maps.len() < MIN_MAPS {
            return Err(Error::InvalidArgument(format!(
                "an IFS needs at least {MIN_MAPS} maps, got {}",
                maps.len()
            )));
        }
        Self::checked(maps, probabilities)
    }

    /// Probabilities proportional to the floored determinant magnitudes.
    pub fn with_determinant_weights(maps: Vec<AffineMap>) -> Result<Self> {
        let p = determinant_weights(&maps);
        Self::new(maps, p)
    }

    /// A one-map system. Not a valid dataset category (fewer than two maps);
    /// useful for checking contraction behavior of the chaos game.
    pub fn single(map: AffineMap) -> Self {
        Self {
            maps: vec![map],
            probabilities: vec![1.0],
        }
    }

    fn checked(maps: Vec<AffineMap>, probabilities: Vec<f64>) -> Result<Self> {
        if maps.len() != probabilities.len() {
            return Err(Error::InvalidArgument(format!(
                "{} maps but {} probabilities",
                maps.len(),
                probabilities.len()
            )));
        }
        let dim = maps[0].dimension;
        if maps.iter().any(|m| m.dimension != dim) {
            return Err(Error::InvalidArgument(
                "all maps of an IFS must share one dimension".into(),
            ));
        }
        if probabilities.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidArgument(
                "probabilities must be positive and finite".into(),
            ));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            maps,
            probabilities,
        })
    }

    /// Three half-scale maps anchored at (0,0), (0.5,0), (0,0.5), uniform weights.
    pub fn sierpinski() -> Self {
        let maps = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]]
            .iter()
            .map(|t| AffineMap::similarity(Dimension::Two, 0.5, t).unwrap())
            .collect();
        Self::new(maps, vec![1.0 / 3.0; 3]).unwrap()
    }

    /// Four half-scale maps toward the corners of a tetrahedron.
    pub fn sierpinski_tetrahedron() -> Self {
        let maps = [
            [0.0, 0.0, 0.0],
            [0.5, 0.0, 0.0],
            [0.0, 0.5, 0.0],
            [0.0, 0.0, 0.5],
        ]
        .iter()
        .map(|t| AffineMap::similarity(Dimension::Three, 0.5, t).unwrap())
        .collect();
        Self::new(maps, vec![0.25; 4]).unwrap()
    }

    pub fn dimension(&self) -> Dimension {
        self.maps[0].dimension
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
}

/// `max(|det_j|, DET_FLOOR)` normalized to sum to one.
pub fn determinant_weights(maps: &[AffineMap]) -> Vec<f64> {
    let raw: Vec<f64> = maps
        .iter()
        .map(|m| m.determinant().abs().max(DET_FLOOR))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Draws a random IFS: 2..=8 maps, every coefficient uniform on [-1, 1],
/// probabilities from the floored determinant weights.
pub fn sample_ifs(dimension: Dimension, seed: SeedKey) -> IfsSystem {
    let mut rng = seed.rng();
    let d = dimension.get();
    let m = rng.random_range(MIN_MAPS..=MAX_MAPS);
    let maps: Vec<AffineMap> = (0..m)
        .map(|_| {
            let linear = (0..d * d).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let translation = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
            AffineMap {
                dimension,
                linear,
                translation,
            }
        })
        .collect();
    let probabilities = determinant_weights(&maps);
    IfsSystem {
        maps,
        probabilities,
    }
}

/// Scales every linear entry by `FLUCTUATION_FACTORS[variant / 5]` and every
/// translation entry by `FLUCTUATION_FACTORS[variant % 5]`, then re-derives the
/// probabilities from the new determinants. Variant 12 returns the input.
pub fn fluctuate_ifs(ifs: &IfsSystem, variant_index: usize) -> Result<IfsSystem> {
    if variant_index >= FLUCTUATION_VARIANTS {
        return Err(Error::InvalidArgument(format!(
            "fluctuation variant {variant_index} out of range 0..{FLUCTUATION_VARIANTS}"
        )));
    }
    if variant_index == IDENTITY_VARIANT {
        return Ok(ifs.clone());
    }
    let lin = FLUCTUATION_FACTORS[variant_index / 5];
    let tr = FLUCTUATION_FACTORS[variant_index % 5];
    let maps: Vec<AffineMap> = ifs.maps.iter().map(|m| m.scaled(lin, tr)).collect();
    let probabilities = determinant_weights(&maps);
    Ok(IfsSystem {
        maps,
        probabilities,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dimension: Dimension,
    coords: Vec<f64>,
    pub source_seed: SeedKey,
    pub burn_in: usize,
}

impl PointCloud {
    /// Builds a cloud from flat coordinates (`dimension` values per point).
    pub fn from_flat(dimension: Dimension, coords: Vec<f64>) -> Result<Self> {
        if !coords.len().is_multiple_of(dimension.get()) {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not form whole {dimension} points",
                coords.len()
            )));
        }
        if !coords.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        Ok(Self {
            dimension,
            coords,
            source_seed: SeedKey::new(0, 0),
            burn_in: 0,
        })
    }

    pub fn from_points<const D: usize>(points: &[[f64; D]]) -> Result<Self> {
        let dimension = match D {
            2 => Dimension::Two,
            3 => Dimension::Three,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "points must be 2D or 3D, got {D}D"
                )))
            }
        };
        Self::from_flat(dimension, points.iter().flatten().copied().collect())
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dimension.get()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dimension.get();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dimension.get())
    }

    /// Per-axis `(min, max)`; `None` for an empty cloud.
    pub fn bounds(&self) -> Option<Vec<(f64, f64)>> {
        if self.is_empty() {
            return None;
        }
        let d = self.dimension.get();
        Some(
            (0..d)
                .map(|axis| {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for &v in self.coords.iter().skip(axis).step_by(d) {
                        lo = if v < lo { v } else { lo };
                        hi = if v > hi { v } else { hi };
                    }
                    (lo, hi)
                })
                .collect(),
        )
    }
}

/// Map coefficients packed as `linear (row-major) ++ translation`.
type Packed = [f64; 12];

fn pack(map: &AffineMap) -> Packed {
    let mut k = [0.0; 12];
    let n = map.linear.len();
    k[..n].copy_from_slice(&map.linear);
    k[n..n + map.translation.len()].copy_from_slice(&map.translation);
    k
}

#[inline(always)]
fn apply_packed<const D: usize>(k: &Packed, p: &mut [f64; 3]) {
    if D == 2 {
        let x = k[0] * p[0] + k[1] * p[1] + k[4];
        let y = k[2] * p[0] + k[3] * p[1] + k[5];
        p[0] = x;
        p[1] = y;
    } else {
        let x = k[0] * p[0] + k[1] * p[1] + k[2] * p[2] + k[9];
        let y = k[3] * p[0] + k[4] * p[1] + k[5] * p[2] + k[10];
        let z = k[6] * p[0] + k[7] * p[1] + k[8] * p[2] + k[11];
        p[0] = x;
        p[1] = y;
        p[2] = z;
    }
}

/// Categorical draw over at most `MAX_MAPS` outcomes: the index is the
/// number of cumulative weights at or below `u`, counted branch-free.
#[derive(Clone, Copy)]
struct Selector {
    cumulative: [f64; MAX_MAPS],
    last: usize,
}

impl Selector {
    fn new(probabilities: &[f64]) -> Self {
        let mut cumulative = [f64::INFINITY; MAX_MAPS];
        let mut acc = 0.0;
        for (c, p) in cumulative.iter_mut().zip(probabilities) {
            acc += p;
            *c = acc;
        }
        Self {
            cumulative,
            last: probabilities.len() - 1,
        }
    }

    #[inline(always)]
    fn pick(&self, u: f64) -> usize {
        let below = self
            .cumulative
            .iter()
            .fold(0usize, |n, &c| n + (u >= c) as usize);
        below.min(self.last)
    }
}

/// Infinite random orbit of an IFS, yielding `(map index, point)` pairs.
///
/// The first item is the image of the start point under the first selected
/// map; the start point itself is never yielded.
pub struct Orbit<R: Rng> {
    dimension: Dimension,
    kernels: Vec<Packed>,
    selector: Selector,
    point: [f64; 3],
    rng: R,
}

impl<R: Rng> Orbit<R> {
    pub fn new(ifs: &IfsSystem, start: &[f64], rng: R) -> Self {
        assert!(ifs.len() <= MAX_MAPS, "at most {MAX_MAPS} maps supported");
        let mut point = [0.0; 3];
        point[..start.len()].copy_from_slice(start);
        Self {
            dimension: ifs.dimension(),
            kernels: ifs.maps.iter().map(pack).collect(),
            selector: Selector::new(&ifs.probabilities),
            point,
            rng,
        }
    }

    #[inline(always)]
    fn step_d<const D: usize>(&mut self) -> usize {
        let j = self.selector.pick(self.rng.random());
        apply_packed::<D>(&self.kernels[j], &mut self.point);
        j
    }

    fn step(&mut self) -> usize {
        match self.dimension {
            Dimension::Two => self.step_d::<2>(),
            Dimension::Three => self.step_d::<3>(),
        }
    }

    /// Discards `burn_in` iterates, then appends `n` more to `out`.
    fn run<const D: usize>(&mut self, burn_in: usize, n: usize, out: &mut Vec<f64>) -> Result<()> {
        for iteration in 0..burn_in {
            self.step_d::<D>();
            if let Some(&bad) = self.point[..D].iter().find(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    iteration,
                    magnitude: bad.abs(),
                });
            }
        }
        for i in 0..n {
            self.step_d::<D>();
            let p = &self.point[..D];
            // NaN fails the comparison, so it is caught here too.
            if !p.iter().all(|v| v.abs() <= DIVERGENCE_BOUND) {
                let magnitude = p.iter().map(|v| v.abs()).fold(0.0, f64::max);
                return Err(Error::Divergence {
                    iteration: burn_in + i,
                    magnitude: if p.iter().any(|v| v.is_nan()) {
                        f64::NAN
                    } else {
                        magnitude
                    },
                });
            }
            out.extend_from_slice(p);
        }
        Ok(())
    }
}

impl<R: Rng> Iterator for Orbit<R> {
    type Item = (usize, [f64; 3]);

    fn next(&mut self) -> Option<Self::Item> {
        let j = self.step();
        Some((j, self.point))
    }
}

/// Runs `burn_in + n_points` chaos-game steps from `v1` and keeps the last
/// `n_points`. Fails with [`Error::Divergence`] when a retained coordinate
/// leaves `[-DIVERGENCE_BOUND, DIVERGENCE_BOUND]` or any iterate is non-finite.
pub fn chaos_game(
    ifs: &IfsSystem,
    n_points: usize,
    burn_in: usize,
    v1: &[f64],
    seed: SeedKey,
) -> Result<PointCloud> {
    let dimension = ifs.dimension();
    let d = dimension.get();
    if n_points == 0 {
        return Err(Error::InvalidArgument("n_points must be at least 1".into()));
    }
    if v1.len() != d || !v1.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "start point must be a finite {dimension} vector"
        )));
    }

    let mut orbit = Orbit::new(ifs, v1, seed.rng());
    let mut coords = Vec::with_capacity(n_points * d);
    match dimension {
        Dimension::Two => orbit.run::<2>(burn_in, n_points, &mut coords)?,
        Dimension::Three => orbit.run::<3>(burn_in, n_points, &mut coords)?,
    }
    Ok(PointCloud {
        dimension,
        coords,
        source_seed: seed,
        burn_in,
    })
}
