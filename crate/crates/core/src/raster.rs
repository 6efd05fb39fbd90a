//! Point clouds to grayscale images, plus the per-dot augmentation kernels.
//!
//! Rendering is two-staged. [`normalize_points`] maps a 2D cloud onto a
//! [`DotGrid`] (one dot per occupied pixel cell, rows follow `y`, columns
//! follow `x`). The render functions then replace each dot with a 3x3 stamp
//! centered on its cell. Overlapping stamps combine by per-pixel max and
//! stamp pixels outside the image are dropped.

use std::io::Cursor;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::PointCloud;
use crate::seed::SeedKey;

pub const MIN_SIDE: usize = 8;
pub const DEFAULT_SIDE: usize = 256;
pub const DEFAULT_MARGIN: f64 = 0.05;
pub const FOREGROUND: u8 = 255;
/// Number of distinct 3x3 binary patterns.
pub const PATTERN_COUNT: u16 = 512;

/// Bit `3 * (dr + 1) + (dc + 1)` of a mask covers offset `(dr, dc)`.
pub const FIXED_PATCHES: [u16; 10] = [
    0b000_010_000, // center dot
    0b111_111_111, // all ones
    0b010_111_010, // cross
    0b101_010_101, // X
    0b000_111_000, // horizontal bar
    0b010_010_010, // vertical bar
    0b100_010_001, // main diagonal
    0b001_010_100, // anti-diagonal
    0b111_101_111, // hollow ring
    0b101_000_101, // corners
];

/// Cells where at least one point landed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DotGrid {
    side: usize,
    occupied: Vec<bool>,
}

impl DotGrid {
    pub fn new(side: usize) -> Self {
        Self {
            side,
            occupied: vec![false; side * side],
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn mark(&mut self, row: usize, col: usize) {
        assert!(row < self.side && col < self.side, "cell outside grid");
        self.occupied[row * self.side + col] = true;
    }

    pub fn is_occupied(&self, row: usize, col: usize) -> bool {
        self.occupied[row * self.side + col]
    }

    pub fn count(&self) -> usize {
        self.occupied.iter().filter(|&&b| b).count()
    }

    /// Occupied cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let side = self.side;
        self.occupied
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / side, i % side))
    }

    /// Cells with a nonzero pixel anywhere in their 3x3 neighborhood.
    pub fn neighborhood_mask(&self) -> Vec<bool> {
        let s = self.side as isize;
        let mut mask = vec![false; self.occupied.len()];
        for (r, c) in self.cells() {
            for (rr, cc) in stamp_cells(r as isize, c as isize, s) {
                mask[rr * self.side + cc] = true;
            }
        }
        mask
    }
}

/// Square 8-bit grayscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    side: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn blank(side: usize) -> Self {
        Self {
            side,
            pixels: vec![0; side * side],
        }
    }

    pub fn from_pixels(side: usize, pixels: Vec<u8>) -> Result<Self> {
        if side < MIN_SIDE {
            return Err(Error::InvalidArgument(format!(
                "image side {side} below minimum {MIN_SIDE}"
            )));
        }
        if pixels.len() != side * side {
            return Err(Error::InvalidArgument(format!(
                "{} pixels do not fill a {side}x{side} image",
                pixels.len()
            )));
        }
        Ok(Self { side, pixels })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.side + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: u8) {
        self.pixels[row * self.side + col] = v;
    }

    /// `|a - b|` per pixel.
    pub fn abs_diff(&self, other: &RasterImage) -> Result<RasterImage> {
        if self.side != other.side {
            return Err(Error::ShapeMismatch(format!(
                "images are {} and {} pixels wide",
                self.side, other.side
            )));
        }
        let pixels = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| a.abs_diff(*b))
            .collect();
        Ok(RasterImage {
            side: self.side,
            pixels,
        })
    }

    pub fn inverted(&self) -> RasterImage {
        RasterImage {
            side: self.side,
            pixels: self.pixels.iter().map(|v| 255 - v).collect(),
        }
    }

    /// Encodes as an 8-bit grayscale PNG. Output bytes depend only on the pixels.
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.side as u32, self.side as u32);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
            w.write_image_data(&self.pixels)
                .map_err(|e| Error::Png(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn from_png(bytes: &[u8]) -> Result<RasterImage> {
        let dec = png::Decoder::new(Cursor::new(bytes));
        let mut reader = dec.read_info().map_err(|e| Error::Png(e.to_string()))?;
        let info = reader.info();
        if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
            return Err(Error::Png("expected 8-bit grayscale".into()));
        }
        if info.width != info.height {
            return Err(Error::Png(format!(
                "expected a square image, got {}x{}",
                info.width, info.height
            )));
        }
        let side = info.width as usize;
        let mut buf = vec![0; side * side];
        reader
            .next_frame(&mut buf)
            .map_err(|e| Error::Png(e.to_string()))?;
        RasterImage::from_pixels(side, buf)
    }
}

/// How occupied cells become pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationMode {
    Plain,
    Pattern,
    Texture,
    FixedPatch(u8),
}

impl AugmentationMode {
    pub fn is_stochastic(self) -> bool {
        matches!(self, AugmentationMode::Pattern | AugmentationMode::Texture)
    }
}

impl FromStr for AugmentationMode {
    type Err = Error;

    /// `plain`, `pattern`, `texture`, `fixed_patch` or `fixed_patch:<0-9>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(AugmentationMode::Plain),
            "pattern" => Ok(AugmentationMode::Pattern),
            "texture" => Ok(AugmentationMode::Texture),
            "fixed_patch" => Ok(AugmentationMode::FixedPatch(0)),
            other => {
                let idx = other
                    .strip_prefix("fixed_patch:")
                    .and_then(|i| i.parse::<u8>().ok())
                    .filter(|&i| (i as usize) < FIXED_PATCHES.len());
                idx.map(AugmentationMode::FixedPatch).ok_or_else(|| {
                    Error::InvalidArgument(format!("unknown augmentation mode `{other}`"))
                })
            }
        }
    }
}

impl std::fmt::Display for AugmentationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AugmentationMode::Plain => f.write_str("plain"),
            AugmentationMode::Pattern => f.write_str("pattern"),
            AugmentationMode::Texture => f.write_str("texture"),
            AugmentationMode::FixedPatch(i) => write!(f, "fixed_patch:{i}"),
        }
    }
}

/// Isotropic map from a bounding box into a `side x side` pixel square.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PixelFrame {
    min: [f64; 2],
    scale: f64,
    offset: [f64; 2],
    /// Last pixel of the interior square.
    limit: usize,
}

impl PixelFrame {
    /// `None` when the box has zero extent on both axes.
    pub(crate) fn fit(bounds: &[(f64, f64)], side: usize, margin: f64) -> Option<Self> {
        let w = bounds[0].1 - bounds[0].0;
        let h = bounds[1].1 - bounds[1].0;
        let extent = w.max(h);
        if extent <= 0.0 {
            return None;
        }
        let usable = (1.0 - 2.0 * margin) * side as f64;
        let scale = usable / extent;
        let base = margin * side as f64;
        Some(Self {
            min: [bounds[0].0, bounds[1].0],
            scale,
            offset: [
                base + (usable - w * scale) / 2.0,
                base + (usable - h * scale) / 2.0,
            ],
            limit: ((base + usable).ceil() as usize)
                .saturating_sub(1)
                .clamp(base as usize, side - 1),
        })
    }

    #[inline]
    fn axis(&self, v: f64, axis: usize) -> usize {
        // Non-negative by construction, so truncation is floor.
        let x = self.offset[axis] + (v - self.min[axis]) * self.scale;
        (x as usize).min(self.limit)
    }

    /// `(row, col)` of a point.
    #[inline]
    pub(crate) fn cell(&self, p: &[f64]) -> (usize, usize) {
        (self.axis(p[1], 1), self.axis(p[0], 0))
    }
}

fn check_side(side: usize) -> Result<()> {
    if side < MIN_SIDE {
        return Err(Error::InvalidArgument(format!(
            "image side {side} below minimum {MIN_SIDE}"
        )));
    }
    Ok(())
}

/// Scales the cloud's bounding box isotropically into the centered
/// `(1 - 2 margin) * side` square and marks each point's cell.
pub fn normalize_points(points: &PointCloud, side: usize, margin: f64) -> Result<DotGrid> {
    check_side(side)?;
    if points.dimension().get() != 2 {
        return Err(Error::InvalidArgument(
            "normalize_points takes a 2D cloud; project 3D clouds first".into(),
        ));
    }
    if !(0.0..0.5).contains(&margin) {
        return Err(Error::InvalidArgument(format!(
            "margin {margin} outside [0, 0.5)"
        )));
    }
    let bounds = points.bounds().ok_or(Error::EmptyCloud)?;
    let frame = PixelFrame::fit(&bounds, side, margin).ok_or(Error::DegenerateExtent)?;
    let mut grid = DotGrid::new(side);
    for p in points.iter() {
        let (r, c) = frame.cell(p);
        grid.occupied[r * side + c] = true;
    }
    Ok(grid)
}

/// In-bounds cells of the 3x3 block centered on `(r, c)`, paired with
/// their bit index in a patch mask.
fn stamp_cells(r: isize, c: isize, side: isize) -> impl Iterator<Item = (usize, usize)> {
    stamp_cells_indexed(r, c, side).map(|(rr, cc, _)| (rr, cc))
}

fn stamp_cells_indexed(
    r: isize,
    c: isize,
    side: isize,
) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..9usize).filter_map(move |k| {
        let rr = r + k as isize / 3 - 1;
        let cc = c + k as isize % 3 - 1;
        (rr >= 0 && rr < side && cc >= 0 && cc < side).then_some((rr as usize, cc as usize, k))
    })
}

fn stamp(img: &mut RasterImage, r: usize, c: usize, values: &[u8; 9]) {
    let side = img.side;
    for (rr, cc, k) in stamp_cells_indexed(r as isize, c as isize, side as isize) {
        let px = &mut img.pixels[rr * side + cc];
        *px = (*px).max(values[k]);
    }
}

fn mask_values(mask: u16) -> [u8; 9] {
    std::array::from_fn(|k| if mask >> k & 1 == 1 { FOREGROUND } else { 0 })
}

/// Occupied cells become 255, everything else 0.
pub fn render_plain(grid: &DotGrid) -> RasterImage {
    let pixels = grid
        .occupied
        .iter()
        .map(|&b| if b { FOREGROUND } else { 0 })
        .collect();
    RasterImage {
        side: grid.side,
        pixels,
    }
}

/// Every dot becomes an independent uniform draw from the 512 binary 3x3
/// patterns (the all-zero pattern included).
pub fn render_pattern_aug(grid: &DotGrid, seed: SeedKey) -> RasterImage {
    let mut rng = seed.rng();
    let mut img = RasterImage::blank(grid.side);
    for (r, c) in grid.cells() {
        let mask = rng.random_range(0..PATTERN_COUNT);
        stamp(&mut img, r, c, &mask_values(mask));
    }
    img
}

/// Every dot becomes a 3x3 block of independent uniform intensities.
pub fn render_texture_aug(grid: &DotGrid, seed: SeedKey) -> RasterImage {
    let mut rng = seed.rng();
    let mut img = RasterImage::blank(grid.side);
    let mut values = [0u8; 9];
    for (r, c) in grid.cells() {
        rng.fill(&mut values);
        stamp(&mut img, r, c, &values);
    }
    img
}

/// Every dot stamped with `FIXED_PATCHES[pattern_index]`.
pub fn render_fixed_patch(grid: &DotGrid, pattern_index: usize) -> Result<RasterImage> {
    let mask = *FIXED_PATCHES.get(pattern_index).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "patch index {pattern_index} out of range 0..{}",
            FIXED_PATCHES.len()
        ))
    })?;
    let values = mask_values(mask);
    let mut img = RasterImage::blank(grid.side);
    for (r, c) in grid.cells() {
        stamp(&mut img, r, c, &values);
    }
    Ok(img)
}

pub fn render(grid: &DotGrid, mode: AugmentationMode, seed: SeedKey) -> Result<RasterImage> {
    match mode {
        AugmentationMode::Plain => Ok(render_plain(grid)),
        AugmentationMode::Pattern => Ok(render_pattern_aug(grid, seed)),
        AugmentationMode::Texture => Ok(render_texture_aug(grid, seed)),
        AugmentationMode::FixedPatch(i) => render_fixed_patch(grid, i as usize),
    }
}

/// Lossless clockwise rotation: one quarter turn sends `(r, c)` to `(c, side - 1 - r)`.
pub fn rotate90(img: &RasterImage, quarter_turns: u8) -> RasterImage {
    let n = img.side;
    let mut out = RasterImage::blank(n);
    for r in 0..n {
        for c in 0..n {
            let (rr, cc) = match quarter_turns % 4 {
                0 => (r, c),
                1 => (c, n - 1 - r),
                2 => (n - 1 - r, n - 1 - c),
                _ => (n - 1 - c, r),
            };
            out.pixels[rr * n + cc] = img.pixels[r * n + c];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{chaos_game, IfsSystem};

    fn grid_with(side: usize, cells: &[(usize, usize)]) -> DotGrid {
        let mut g = DotGrid::new(side);
        for &(r, c) in cells {
            g.mark(r, c);
        }
        g
    }

    #[test]
    fn extremes_map_to_corner_cells() {
        let cloud = PointCloud::from_points(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let g = normalize_points(&cloud, 256, 0.0).unwrap();
        assert_eq!(g.cells().collect::<Vec<_>>(), vec![(0, 0), (255, 255)]);
    }

    #[test]
    fn margin_keeps_dots_off_the_border() {
        let ifs = IfsSystem::sierpinski();
        let cloud = chaos_game(&ifs, 20_000, 100, &[0.0, 0.0], SeedKey::new(1, 2)).unwrap();
        let g = normalize_points(&cloud, 256, 0.1).unwrap();
        let (mut lo, mut hi) = (usize::MAX, 0);
        for (r, c) in g.cells() {
            lo = lo.min(r).min(c);
            hi = hi.max(r).max(c);
        }
        assert!(lo >= 25, "min index {lo}");
        assert!(hi <= 255 - 25, "max index {hi}");
    }

    #[test]
    fn one_varying_axis_is_enough() {
        let cloud = PointCloud::from_points(&[[3.0, 0.0], [3.0, 2.0], [3.0, 1.0]]).unwrap();
        let g = normalize_points(&cloud, 16, 0.0).unwrap();
        // x-extent 0 is centered: column 8; y spans the full height.
        assert_eq!(g.cells().collect::<Vec<_>>(), vec![(0, 8), (8, 8), (15, 8)]);
    }

    #[test]
    fn aspect_ratio_is_preserved() {
        let cloud = PointCloud::from_points(&[[0.0, 0.0], [4.0, 1.0]]).unwrap();
        let g = normalize_points(&cloud, 64, 0.0).unwrap();
        // y-extent is a quarter of x-extent: rows 24..=40 around the center.
        assert_eq!(g.cells().collect::<Vec<_>>(), vec![(24, 0), (40, 63)]);
    }

    #[test]
    fn normalization_errors() {
        let same = PointCloud::from_points(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            normalize_points(&same, 64, 0.0),
            Err(Error::DegenerateExtent)
        ));
        let empty = PointCloud::from_flat(crate::ifs::Dimension::Two, vec![]).unwrap();
        assert!(matches!(
            normalize_points(&empty, 64, 0.0),
            Err(Error::EmptyCloud)
        ));
        let ok = PointCloud::from_points(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!(normalize_points(&ok, 4, 0.0).is_err());
        assert!(normalize_points(&ok, 64, 0.5).is_err());
        let three = PointCloud::from_points(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]).unwrap();
        assert!(normalize_points(&three, 64, 0.0).is_err());
    }

    #[test]
    fn plain_render_basics() {
        assert!(render_plain(&DotGrid::new(16))
            .pixels()
            .iter()
            .all(|&v| v == 0));
        let img = render_plain(&grid_with(16, &[(3, 4)]));
        assert_eq!(img.pixels().iter().filter(|&&v| v == 255).count(), 1);
        assert_eq!(img.get(3, 4), 255);
    }

    #[test]
    fn all_ones_pattern_stamps_full_block() {
        let g = grid_with(16, &[(5, 5)]);
        let img = render_fixed_patch(&g, 1).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                let inside = (4..=6).contains(&r) && (4..=6).contains(&c);
                assert_eq!(img.get(r, c), if inside { 255 } else { 0 });
            }
        }
    }

    #[test]
    fn stamps_clip_at_the_border() {
        let g = grid_with(8, &[(0, 0), (7, 7)]);
        let img = render_fixed_patch(&g, 1).unwrap();
        assert_eq!(img.pixels().iter().filter(|&&v| v == 255).count(), 8);
    }

    #[test]
    fn fixed_patch_zero_is_plain() {
        let g = grid_with(32, &[(0, 0), (3, 9), (31, 31), (15, 16)]);
        assert_eq!(render_fixed_patch(&g, 0).unwrap(), render_plain(&g));
        assert!(render_fixed_patch(&g, 10).is_err());
    }

    #[test]
    fn fixed_patches_are_distinct() {
        let mut masks = FIXED_PATCHES.to_vec();
        masks.sort_unstable();
        masks.dedup();
        assert_eq!(masks.len(), FIXED_PATCHES.len());
        assert!(FIXED_PATCHES.iter().all(|&m| m < PATTERN_COUNT));
    }

    #[test]
    fn texture_stays_inside_neighborhoods() {
        let g = grid_with(32, &[(10, 10), (20, 5)]);
        let img = render_texture_aug(&g, SeedKey::new(4, 4));
        let mask = g.neighborhood_mask();
        for (i, &v) in img.pixels().iter().enumerate() {
            if !mask[i] {
                assert_eq!(v, 0);
            }
        }
        assert!(render_texture_aug(&DotGrid::new(16), SeedKey::new(1, 1))
            .pixels()
            .iter()
            .all(|&v| v == 0));
    }

    #[test]
    fn rotation_mapping() {
        let mut img = RasterImage::blank(8);
        img.set(0, 1, 10);
        img.set(2, 5, 20);
        img.set(7, 0, 30);
        let r1 = rotate90(&img, 1);
        assert_eq!(r1.get(1, 7), 10);
        assert_eq!(r1.get(5, 5), 20);
        assert_eq!(r1.get(0, 0), 30);
        assert_eq!(r1.pixels().iter().filter(|&&v| v != 0).count(), 3);
        assert_eq!(rotate90(&img, 0), img);
        let mut back = img.clone();
        for _ in 0..4 {
            back = rotate90(&back, 1);
        }
        assert_eq!(back, img);
        assert_eq!(rotate90(&img, 2), rotate90(&r1, 1));
        assert_eq!(rotate90(&img, 3), rotate90(&rotate90(&img, 2), 1));
    }

    #[test]
    fn png_round_trip() {
        let mut img = RasterImage::blank(16);
        img.set(1, 2, 200);
        img.set(15, 0, 7);
        let bytes = img.to_png().unwrap();
        assert_eq!(&bytes[1..4], b"PNG");
        assert_eq!(RasterImage::from_png(&bytes).unwrap(), img);
        assert_eq!(img.to_png().unwrap(), bytes);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            "pattern".parse::<AugmentationMode>().unwrap(),
            AugmentationMode::Pattern
        );
        assert_eq!(
            "fixed_patch:7".parse::<AugmentationMode>().unwrap(),
            AugmentationMode::FixedPatch(7)
        );
        assert!("fixed_patch:10".parse::<AugmentationMode>().is_err());
        assert!("sepia".parse::<AugmentationMode>().is_err());
        for m in [
            AugmentationMode::Plain,
            AugmentationMode::Texture,
            AugmentationMode::FixedPatch(3),
        ] {
            assert_eq!(m.to_string().parse::<AugmentationMode>().unwrap(), m);
        }
    }
}
