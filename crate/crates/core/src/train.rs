//! Loss contract and epoch planning for an external trainer.
//!
//! With one image per category, sample `i` carries label `i`, and the
//! cross-entropy over a batch collapses to the mean negative log of the
//! diagonal. [`plan_epoch`] shuffles the categories per epoch and attaches
//! a fresh augmentation key to every entry, so stochastic augmentation
//! stands in for the missing instances.
//!
//! # Stream framing
//!
//! [`write_stream`] emits the 8-byte magic `OFDBFRM1` followed by one frame
//! per image:
//!
//! ```text
//! u32 little-endian  label (category id)
//! u32 little-endian  payload length in bytes
//! [u8; length]       PNG image
//! ```
//!
//! The stream ends at EOF after a complete frame.

use std::io::{self, Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, Renderer};
use crate::error::{Error, Result};
use crate::par;
use crate::raster::{render, rotate90, AugmentationMode};
use crate::seed::{purpose, SeedKey};

/// Floor applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;
/// Tolerance on row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;
pub const STREAM_MAGIC: &[u8; 8] = b"OFDBFRM1";

/// Row-major `rows x cols` matrix of per-sample class probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl PredictionMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if cols == 0 || values.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        for (i, row) in values.chunks_exact(cols).enumerate() {
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has probability {p} outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidArgument(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Every row uniform over `cols` classes.
    pub fn uniform(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![1.0 / cols as f64; rows * cols])
    }

    /// Row-wise softmax of raw scores.
    pub fn softmax(rows: usize, cols: usize, logits: &[f64]) -> Result<Self> {
        if cols == 0 || logits.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} logits for a {rows}x{cols} matrix",
                logits.len()
            )));
        }
        let mut values = Vec::with_capacity(logits.len());
        for row in logits.chunks_exact(cols) {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = row.iter().map(|z| (z - m).exp()).collect();
            let s: f64 = e.iter().sum();
            values.extend(e.iter().map(|v| v / s));
        }
        Self::new(rows, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }
}

/// One class index per sample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub labels: Vec<usize>,
}

impl LabelSet {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    /// Sample `i` labeled `i`.
    pub fn identity(n: usize) -> Self {
        Self::new((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn neg_log(p: f64) -> f64 {
    -p.max(PROB_FLOOR).ln()
}

/// `-(1/N) sum_i log p[i, y_i]`.
pub fn cross_entropy(preds: &PredictionMatrix, labels: &LabelSet) -> Result<f64> {
    if preds.rows() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} prediction rows but {} labels",
            preds.rows(),
            labels.len()
        )));
    }
    if preds.rows() == 0 {
        return Err(Error::ShapeMismatch("empty batch".into()));
    }
    if let Some(&y) = labels.labels.iter().find(|&&y| y >= preds.cols()) {
        return Err(Error::ShapeMismatch(format!(
            "label {y} outside 0..{}",
            preds.cols()
        )));
    }
    let total: f64 = labels
        .labels
        .iter()
        .enumerate()
        .map(|(i, &y)| neg_log(preds.get(i, y)))
        .sum();
    Ok(total / preds.rows() as f64)
}

/// `-(1/C) sum_c log p[c, c]` for a `C x C` matrix whose row `c` is the
/// prediction for category `c`'s only image.
pub fn one_instance_nll(preds: &PredictionMatrix, categories: usize) -> Result<f64> {
    if preds.rows() != categories || preds.cols() != categories {
        return Err(Error::ShapeMismatch(format!(
            "expected {categories}x{categories}, got {}x{}",
            preds.rows(),
            preds.cols()
        )));
    }
    if categories == 0 {
        return Err(Error::ShapeMismatch("no categories".into()));
    }
    let total: f64 = (0..categories).map(|c| neg_log(preds.get(c, c))).sum();
    Ok(total / categories as f64)
}

/// Augmentation applied when a plan is materialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub augmentation: AugmentationMode,
    /// Draw a uniform quarter-turn rotation per entry.
    pub rotate: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            augmentation: AugmentationMode::Pattern,
            rotate: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub category_id: usize,
    pub augmentation_seed: SeedKey,
    /// Quarter turns, 0..4.
    pub rotation: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub epoch: u64,
    pub batch_size: usize,
    pub options: PlanOptions,
    pub entries: Vec<PlanEntry>,
}

impl BatchPlan {
    pub fn batches(&self) -> impl Iterator<Item = &[PlanEntry]> {
        self.entries.chunks(self.batch_size)
    }

    pub fn batch_sizes(&self) -> Vec<usize> {
        self.batches().map(<[PlanEntry]>::len).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Shuffles the manifest's categories for `epoch` and gives each entry its
/// own augmentation key and rotation draw.
pub fn plan_epoch(
    manifest: &DatasetManifest,
    epoch: u64,
    batch_size: usize,
    options: PlanOptions,
    seed: SeedKey,
) -> Result<BatchPlan> {
    plan_categories(&manifest.category_ids(), epoch, batch_size, options, seed)
}

pub fn plan_categories(
    categories: &[usize],
    epoch: u64,
    batch_size: usize,
    options: PlanOptions,
    seed: SeedKey,
) -> Result<BatchPlan> {
    if batch_size == 0 {
        return Err(Error::InvalidArgument(
            "batch_size must be at least 1".into(),
        ));
    }
    let mut order = categories.to_vec();
    order.shuffle(&mut seed.derive(&[purpose::EPOCH, epoch]).rng());
    let entries = order
        .into_iter()
        .map(|c| {
            let rotation = if options.rotate {
                seed.derive(&[purpose::ROTATION, epoch, c as u64])
                    .rng()
                    .random_range(0..4u8)
            } else {
                0
            };
            PlanEntry {
                category_id: c,
                augmentation_seed: seed.derive(&[purpose::AUGMENT, epoch, c as u64]),
                rotation,
            }
        })
        .collect();
    Ok(BatchPlan {
        epoch,
        batch_size,
        options,
        entries,
    })
}

/// One encoded training image and its label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub label: u32,
    pub png: Vec<u8>,
}

/// Renders one plan entry: the category's dot grid, stamped with the
/// entry's augmentation key, then rotated. Fractal augmentation is applied
/// here, before anything the external trainer does.
pub fn materialize_entry(
    renderer: &Renderer,
    options: &PlanOptions,
    entry: &PlanEntry,
) -> Result<Frame> {
    let grid = renderer.category_grid(entry.category_id)?;
    let img = render(&grid, options.augmentation, entry.augmentation_seed)?;
    let img = rotate90(&img, entry.rotation);
    let label = u32::try_from(entry.category_id)
        .map_err(|_| Error::InvalidArgument("category id exceeds u32".into()))?;
    Ok(Frame {
        label,
        png: renderer.spec().encode(&img)?,
    })
}

/// Renders a batch in parallel; frames come back in entry order.
pub fn materialize_batch(
    renderer: &Renderer,
    options: &PlanOptions,
    batch: &[PlanEntry],
) -> Result<Vec<Frame>> {
    par::map_slice(batch, |e| materialize_entry(renderer, options, e))
        .into_iter()
        .collect()
}

pub fn write_stream_header<W: Write>(w: &mut W) -> io::Result<()> {
    w.write_all(STREAM_MAGIC)
}

pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> io::Result<()> {
    let len = u32::try_from(frame.png.len())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame over 4 GiB"))?;
    w.write_all(&frame.label.to_le_bytes())?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&frame.png)
}

/// Writes the header and every frame of `plan`, one batch at a time.
/// Returns the number of frames written.
pub fn write_stream<W: Write>(renderer: &Renderer, plan: &BatchPlan, w: &mut W) -> Result<usize> {
    let io_err = |e| Error::io("<stream>", e);
    write_stream_header(w).map_err(io_err)?;
    let mut n = 0;
    for batch in plan.batches() {
        for frame in materialize_batch(renderer, &plan.options, batch)? {
            write_frame(w, &frame).map_err(io_err)?;
            n += 1;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(n)
}

/// Reads frames written by [`write_stream`].
pub struct FrameReader<R> {
    inner: R,
}

impl<R: Read> FrameReader<R> {
    /// Consumes and checks the magic.
    pub fn new(mut inner: R) -> io::Result<Self> {
        let mut magic = [0u8; 8];
        inner.read_exact(&mut magic)?;
        if &magic != STREAM_MAGIC {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "bad stream magic",
            ));
        }
        Ok(Self { inner })
    }

    /// `Ok(None)` at a clean end of stream.
    pub fn next_frame(&mut self) -> io::Result<Option<Frame>> {
        let mut head = [0u8; 8];
        let mut got = 0;
        while got < head.len() {
            match self.inner.read(&mut head[got..])? {
                0 if got == 0 => return Ok(None),
                0 => return Err(io::ErrorKind::UnexpectedEof.into()),
                k => got += k,
            }
        }
        let label = u32::from_le_bytes(head[..4].try_into().unwrap());
        let len = u32::from_le_bytes(head[4..].try_into().unwrap()) as usize;
        let mut png = vec![0u8; len];
        self.inner.read_exact(&mut png)?;
        Ok(Some(Frame { label, png }))
    }
}

impl<R: Read> Iterator for FrameReader<R> {
    type Item = io::Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_ce(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
        let mut s = 0.0;
        for (i, row) in rows.iter().enumerate() {
            for (c, &p) in row.iter().enumerate() {
                let y = if labels[i] == c { 1.0 } else { 0.0 };
                if y > 0.0 {
                    s -= y * p.max(1e-12).ln();
                }
            }
        }
        s / rows.len() as f64
    }

    #[test]
    fn perfect_prediction_is_zero() {
        let p = PredictionMatrix::from_rows(&[vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(cross_entropy(&p, &LabelSet::new(vec![1])).unwrap(), 0.0);
        let eye = PredictionMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(one_instance_nll(&eye, 2).unwrap(), 0.0);
    }

    #[test]
    fn uniform_gives_log_c() {
        let p = PredictionMatrix::uniform(7, 1000).unwrap();
        let l = LabelSet::new(vec![0, 5, 999, 3, 3, 10, 200]);
        assert!((cross_entropy(&p, &l).unwrap() - 1000f64.ln()).abs() < 1e-12);
        let p = PredictionMatrix::uniform(10, 10).unwrap();
        assert!((one_instance_nll(&p, 10).unwrap() - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn matches_double_loop() {
        let rows = vec![
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.7, 0.1, 0.1, 0.1],
            vec![0.0, 0.5, 0.5, 0.0],
            vec![0.05, 0.05, 0.8, 0.1],
        ];
        let labels = vec![3, 0, 0, 0, 2];
        let p = PredictionMatrix::from_rows(&rows).unwrap();
        let got = cross_entropy(&p, &LabelSet::new(labels.clone())).unwrap();
        let want = naive_ce(&rows, &labels);
        assert!(((got - want) / want).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_is_clamped() {
        let p = PredictionMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let l = cross_entropy(&p, &LabelSet::new(vec![1])).unwrap();
        assert!((l - (-(1e-12f64).ln())).abs() < 1e-9);
    }

    #[test]
    fn shape_errors() {
        let p = PredictionMatrix::uniform(2, 3).unwrap();
        assert!(matches!(
            cross_entropy(&p, &LabelSet::new(vec![0])),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            cross_entropy(&p, &LabelSet::new(vec![0, 3])),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            one_instance_nll(&p, 2),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(PredictionMatrix::new(2, 2, vec![0.5; 3]).is_err());
        assert!(PredictionMatrix::new(1, 2, vec![0.5, 0.6]).is_err());
        assert!(PredictionMatrix::new(1, 2, vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn softmax_rows_are_stochastic() {
        let p = PredictionMatrix::softmax(2, 3, &[1000.0, 0.0, -1000.0, 1.0, 2.0, 3.0]).unwrap();
        assert!((p.get(0, 0) - 1.0).abs() < 1e-12);
        assert!(p.get(1, 2) > p.get(1, 1));
    }

    #[test]
    fn plan_arithmetic() {
        let ids: Vec<usize> = (0..1000).collect();
        let plan =
            plan_categories(&ids, 0, 256, PlanOptions::default(), SeedKey::new(7, 0)).unwrap();
        assert_eq!(plan.batch_sizes(), vec![256, 256, 256, 232]);
        let mut seen: Vec<usize> = plan.entries.iter().map(|e| e.category_id).collect();
        assert_ne!(seen, ids);
        seen.sort_unstable();
        assert_eq!(seen, ids);
    }

    #[test]
    fn plans_are_deterministic_and_epochs_differ() {
        let ids: Vec<usize> = (0..50).collect();
        let opts = PlanOptions {
            augmentation: AugmentationMode::Texture,
            rotate: true,
        };
        let key = SeedKey::new(3, 0);
        let a = plan_categories(&ids, 0, 8, opts, key).unwrap();
        assert_eq!(a, plan_categories(&ids, 0, 8, opts, key).unwrap());
        let b = plan_categories(&ids, 1, 8, opts, key).unwrap();
        for e in &a.entries {
            let f = b
                .entries
                .iter()
                .find(|f| f.category_id == e.category_id)
                .unwrap();
            assert_ne!(e.augmentation_seed, f.augmentation_seed);
        }
        assert!(a.entries.iter().any(|e| e.rotation != 0));
        assert!(plan_categories(&ids, 0, 0, opts, key).is_err());
        assert_eq!(BatchPlan::from_json(&a.to_json().unwrap()).unwrap(), a);
    }

    #[test]
    fn framing_round_trip() {
        let frames = vec![
            Frame {
                label: 3,
                png: vec![1, 2, 3],
            },
            Frame {
                label: 0,
                png: vec![],
            },
            Frame {
                label: u32::MAX,
                png: vec![9; 300],
            },
        ];
        let mut buf = Vec::new();
        write_stream_header(&mut buf).unwrap();
        for f in &frames {
            write_frame(&mut buf, f).unwrap();
        }
        assert_eq!(&buf[..8], b"OFDBFRM1");
        assert_eq!(&buf[8..16], &[3, 0, 0, 0, 3, 0, 0, 0]);
        let back: Vec<Frame> = FrameReader::new(&buf[..])
            .unwrap()
            .collect::<io::Result<_>>()
            .unwrap();
        assert_eq!(back, frames);
        let truncated = &buf[..buf.len() - 1];
        let r: io::Result<Vec<Frame>> = FrameReader::new(truncated).unwrap().collect();
        assert!(r.is_err());
        assert!(FrameReader::new(&b"NOTMAGIC"[..]).is_err());
    }
}
