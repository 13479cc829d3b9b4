mod common;

use common::{config, data};
use diffstruct_pipeline::session::{load_mesh, precompute, precompute_from_file};
use diffstruct_pipeline::{SessionBundle, Stage, TimingRecord};

#[test]
fn planar_bar_bundle_has_two_mode_sets_and_no_bending_time() {
    let b = precompute_from_file(&config("2d_a")).unwrap();
    assert_eq!(b.gamma, 5.0);
    assert_eq!(b.config.anisotropy.r, 100.0);
    assert_eq!(b.modes_u.len(), 6);
    assert_eq!(b.modes_w.len(), 6);
    assert_eq!(b.timings.bending, None);
    assert!(b.timings.is_valid());
    b.validate().unwrap();
}

#[test]
fn shell_bundle_reports_bending_time() {
    let b = precompute_from_file(&config("sphere")).unwrap();
    assert!(b.timings.bending.is_some_and(|t| t >= 0.0));
    assert!(b.timings.stage_sum() <= b.timings.total);
}

#[test]
fn round_trip_is_bit_exact() {
    let b = precompute_from_file(&config("sphere")).unwrap();
    let bytes = b.to_bytes();
    let back = SessionBundle::from_bytes(&bytes).unwrap();
    assert_eq!(back, b);
    assert_eq!(back.to_bytes(), bytes);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.dsb");
    b.save(&path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
    assert_eq!(SessionBundle::load(&path).unwrap(), b);
}

#[test]
fn repeated_runs_give_identical_bytes() {
    let cfg = config("2d_c");
    let mesh = load_mesh(&cfg).unwrap();
    let mut a = precompute(&cfg, &mesh).unwrap();
    let mut b = precompute(&cfg, &mesh).unwrap();
    assert_eq!(a.data_bytes(), b.data_bytes());
    a.timings = TimingRecord::default();
    b.timings = TimingRecord::default();
    assert_eq!(a.to_bytes(), b.to_bytes());
}

#[test]
fn blocks_are_aligned_little_endian_f64() {
    let b = precompute_from_file(&config("2d_b")).unwrap();
    let bytes = b.to_bytes();
    let header_len = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let header: serde_json::Value = serde_json::from_slice(&bytes[24..24 + header_len]).unwrap();
    let data_start = (24 + header_len).next_multiple_of(8);
    assert_eq!(data_start % 8, 0);
    let block = header["blocks"].as_array().unwrap().iter().find(|x| x["name"] == "mass").unwrap();
    let off = data_start + block["offset"].as_u64().unwrap() as usize;
    let first = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    assert_eq!(first, b.mass[0]);
    assert_eq!(header["modes_u"]["normalization"], "mass_orthonormal");
    assert_eq!(header["vertex_count"], 1281);
}

#[test]
fn corrupt_files_are_rejected() {
    let b = precompute_from_file(&config("2d_a")).unwrap();
    let bytes = b.to_bytes();
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert_eq!(SessionBundle::from_bytes(&bad).unwrap_err().stage, Stage::Bundle);
    let mut future = bytes.clone();
    future[8] = 99;
    assert!(SessionBundle::from_bytes(&future).unwrap_err().message.contains("version"));
    assert!(SessionBundle::from_bytes(&bytes[..bytes.len() - 8]).is_err());
    assert!(SessionBundle::from_bytes(&bytes[..30]).is_err());
}

#[test]
fn inconsistent_lengths_fail_validation() {
    let mut b = precompute_from_file(&config("2d_a")).unwrap();
    b.mass.pop();
    assert!(b.validate().unwrap_err().message.contains("mass"));
}

#[test]
fn bundled_mesh_counts_match_line_count() {
    let text = std::fs::read_to_string(data("meshes/sphere.obj")).unwrap();
    let count = |tag: &str| text.lines().filter(|l| l.split_whitespace().next() == Some(tag)).count();
    let mesh = load_mesh(&config("sphere")).unwrap();
    assert_eq!(mesh.vertex_count(), count("v"));
    assert_eq!(mesh.face_count(), count("f"));
    assert_eq!(mesh.euler_characteristic(), 2);
}
