use std::fs;

use ofdb_core::dataset::{
    build, sha256_hex, verify, DatasetManifest, DatasetSpec, Discrepancy, Expansion, Renderer,
    MANIFEST_FILE,
};
use ofdb_core::ifs::{Dimension, IDENTITY_VARIANT};
use ofdb_core::raster::{render_plain, AugmentationMode, RasterImage};
use ofdb_core::search::parse_category_file;
use ofdb_core::train::{plan_epoch, write_stream, FrameReader, PlanOptions};
use ofdb_core::SeedKey;

fn small(dim: Dimension, categories: usize, seed: u64) -> DatasetSpec {
    let mut spec = DatasetSpec::ofdb(dim, categories, seed);
    spec.image_side = 64;
    spec.search.points = 20_000;
    spec.search.render_probe = 64;
    spec
}

#[test]
fn build_verify_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small(Dimension::Two, 6, 11);
    let summary = build(&spec, dir.path()).unwrap();
    let m = &summary.manifest;
    assert_eq!(m.records.len(), 6);
    assert_eq!(parse_category_file(&m.category_file).unwrap().len(), 6);

    let on_disk = DatasetManifest::read(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(&on_disk, m);
    for r in &m.records {
        let bytes = fs::read(dir.path().join(&r.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), r.sha256);
        let img = RasterImage::from_png(&bytes).unwrap();
        assert_eq!(img.side(), 64);
        assert!(img.pixels().contains(&255));
    }

    let report = verify(m, dir.path(), m.records.len());
    assert!(report.is_clean(), "{report:?}");
    assert_eq!(report.regenerated, 6);

    let victim = dir.path().join(&m.records[2].path);
    let mut bytes = fs::read(&victim).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    fs::write(&victim, bytes).unwrap();
    let report = verify(m, dir.path(), m.records.len());
    assert_eq!(report.discrepancies.len(), 1);
    assert!(matches!(
        report.discrepancies[0],
        Discrepancy::Checksum { .. }
    ));

    fs::remove_file(dir.path().join(&m.records[4].path)).unwrap();
    let report = verify(m, dir.path(), 3);
    assert_eq!(report.discrepancies.len(), 2);
}

#[test]
fn three_d_build_uses_modulo_poses() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = small(Dimension::Three, 3, 5);
    spec.search.points = 10_000;
    let m = build(&spec, dir.path()).unwrap().manifest;
    for r in &m.records {
        let pose = r.pose.unwrap();
        assert_eq!(pose.yaw, 30.0 * (r.category_id % 12) as f64);
    }
    assert!(verify(&m, dir.path(), 3).is_clean());
}

#[test]
fn expansion_identity_variant_matches_plain() {
    let mut spec = DatasetSpec::fractaldb(Dimension::Two, 2, 3);
    spec.image_side = 32;
    spec.search.points = 5_000;
    spec.search.render_probe = 32;
    spec.validate().unwrap();
    let out = ofdb_core::search::search(&spec.search, spec.dimension, spec.master_seed).unwrap();
    let renderer = Renderer::new(&spec, out.records);
    let e = Expansion::FRACTALDB;
    for c in 0..2 {
        let all = renderer.render_category(c).unwrap();
        assert_eq!(all.len(), 1000);
        let plain = render_plain(&renderer.category_grid(c).unwrap());
        let i = e.compose(0, IDENTITY_VARIANT, 0);
        assert_eq!(all[i].image, plain);
        for k in [0, 17, 555, 999] {
            assert_eq!(all[k], renderer.render_instance(c, k).unwrap());
        }
    }
}

#[test]
fn filtered_manifest_and_stream() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small(Dimension::Two, 5, 2);
    let m = build(&spec, dir.path()).unwrap().manifest;
    let f = m.filtered(&[4, 1]).unwrap();
    assert_eq!(f.selected_categories, Some(vec![1, 4]));
    assert_eq!(f.records.len(), 2);
    assert!(verify(&f, dir.path(), 2).is_clean());
    assert!(m.filtered(&[9]).is_err());

    let opts = PlanOptions {
        augmentation: AugmentationMode::Pattern,
        rotate: true,
    };
    let plan = plan_epoch(&f, 0, 1, opts, SeedKey::new(1, 0)).unwrap();
    let renderer = Renderer::from_manifest(&f).unwrap();
    let mut buf = Vec::new();
    assert_eq!(write_stream(&renderer, &plan, &mut buf).unwrap(), 2);
    let frames: Vec<_> = FrameReader::new(&buf[..])
        .unwrap()
        .map(Result::unwrap)
        .collect();
    let labels: Vec<u32> = frames.iter().map(|f| f.label).collect();
    let expect: Vec<u32> = plan.entries.iter().map(|e| e.category_id as u32).collect();
    assert_eq!(labels, expect);
    for fr in frames {
        assert_eq!(RasterImage::from_png(&fr.png).unwrap().side(), 64);
    }
}

#[test]
fn invalid_spec_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = small(Dimension::Two, 2, 1);
    spec.instances_per_category = 3;
    assert!(build(&spec, dir.path()).is_err());
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}
