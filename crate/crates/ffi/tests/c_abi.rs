use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use hullopt::dataset::{generate, DatasetHeader};
use hullopt::geometry::{hydrostatics, wigley_grid, HullForm};
use hullopt::hydro::friction_coefficient;
use hullopt::parents::bundled_parents;
use hullopt::pca::fit;
use hullopt::surrogate::{train, AdamConfig, TrainingConfig};
use hullopt_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(hullopt_last_error()) }.to_str().unwrap().to_string()
}

fn cpath(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn wigley_offsets() -> Vec<f64> {
    wigley_grid(40, 20).unwrap().offsets().to_vec()
}

#[test]
fn friction_matches_library() {
    let mut cf = 0.0;
    assert_eq!(unsafe { hullopt_friction_coefficient(1e9, &mut cf) }, HulloptStatus::Ok);
    assert_eq!(cf, friction_coefficient(1e9).unwrap());
}

#[test]
fn friction_rejects_bad_input() {
    let mut cf = 0.0;
    let s = unsafe { hullopt_friction_coefficient(-1.0, &mut cf) };
    assert_ne!(s, HulloptStatus::Ok);
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { hullopt_friction_coefficient(1e9, ptr::null_mut()) },
        HulloptStatus::NullPointer
    );
}

#[test]
fn hull_round_trip_matches_library() {
    let offsets = wigley_offsets();
    let mut hull = ptr::null_mut();
    let s = unsafe { hullopt_hull_new(offsets.as_ptr(), 40, 20, 100.0, 10.0, 2.5, &mut hull) };
    assert_eq!(s, HulloptStatus::Ok);
    let mut h = HulloptHydrostatics::default();
    assert_eq!(unsafe { hullopt_hull_hydrostatics(hull, &mut h) }, HulloptStatus::Ok);
    let lib = hydrostatics(&HullForm::new(wigley_grid(40, 20).unwrap(), 100.0, 10.0, 2.5).unwrap()).unwrap();
    assert_eq!(h.block_coefficient, lib.block_coefficient);
    assert_eq!(h.displaced_volume, lib.displaced_volume);

    let mut r = HulloptResistance::default();
    assert_eq!(unsafe { hullopt_hull_evaluate(hull, 0.3, &mut r) }, HulloptStatus::Ok);
    assert!(r.wave > 0.0 && r.frictional > 0.0);
    assert!((r.total - r.wave - r.frictional).abs() <= 1e-9 * r.total);
    unsafe { hullopt_hull_free(hull) };
}

#[test]
fn hull_validation_errors() {
    let offsets = wigley_offsets();
    let mut hull = ptr::null_mut();
    let s = unsafe { hullopt_hull_new(offsets.as_ptr(), 40, 20, -5.0, 10.0, 2.5, &mut hull) };
    assert_eq!(s, HulloptStatus::Validation);
    assert!(hull.is_null());
    let s = unsafe { hullopt_hull_new(ptr::null(), 40, 20, 100.0, 10.0, 2.5, &mut hull) };
    assert_eq!(s, HulloptStatus::NullPointer);
    let mut h = HulloptHydrostatics::default();
    assert_eq!(
        unsafe { hullopt_hull_hydrostatics(ptr::null(), &mut h) },
        HulloptStatus::NullPointer
    );
    unsafe { hullopt_hull_free(ptr::null_mut()) };
}

#[test]
fn missing_files_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = cpath(&dir.path().join("absent.json"));
    let mut pca = ptr::null_mut();
    assert_eq!(unsafe { hullopt_pca_load(p.as_ptr(), &mut pca) }, HulloptStatus::Io);
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { hullopt_model_load(p.as_ptr(), &mut model) }, HulloptStatus::Io);
    assert!(last_error().contains("absent.json"));
    assert_eq!(unsafe { hullopt_pca_n_axes(ptr::null()) }, 0);
}

#[test]
fn pca_and_model_handles() {
    let dir = tempfile::tempdir().unwrap();
    let grids: Vec<_> = bundled_parents().into_iter().map(|p| p.grid).collect();
    let pca = fit(&grids, None).unwrap();
    let pca_path = dir.path().join("pca.json");
    pca.save(&pca_path).unwrap();

    let ds = generate(&pca, &DatasetHeader::new(&pca, 12, 3), None).unwrap();
    let config = TrainingConfig {
        epochs: 3,
        batch_size: 32,
        hidden_layers: 2,
        hidden_width: 8,
        adam: AdamConfig::default(),
        seed: 3,
    };
    let (mlp, _) = train(&ds.training_set().unwrap(), &config).unwrap();
    let model_path = dir.path().join("model.json");
    mlp.save(&model_path).unwrap();

    let mut h_pca = ptr::null_mut();
    assert_eq!(unsafe { hullopt_pca_load(cpath(&pca_path).as_ptr(), &mut h_pca) }, HulloptStatus::Ok);
    let n = unsafe { hullopt_pca_n_axes(h_pca) };
    assert_eq!(n, pca.n_axes);

    let mut params = vec![0.5; n];
    params.extend([8.0, 2.5]);
    let mut hull = ptr::null_mut();
    let s = unsafe { hullopt_pca_hull(h_pca, params.as_ptr(), params.len(), 170.0, &mut hull) };
    assert_eq!(s, HulloptStatus::Ok);
    let mut h = HulloptHydrostatics::default();
    assert_eq!(unsafe { hullopt_hull_hydrostatics(hull, &mut h) }, HulloptStatus::Ok);
    assert!(h.block_coefficient > 0.3 && h.block_coefficient < 1.0);
    unsafe { hullopt_hull_free(hull) };

    let s = unsafe { hullopt_pca_hull(h_pca, params.as_ptr(), n, 170.0, &mut hull) };
    assert_eq!(s, HulloptStatus::Validation);

    let mut h_model = ptr::null_mut();
    assert_eq!(
        unsafe { hullopt_model_load(cpath(&model_path).as_ptr(), &mut h_model) },
        HulloptStatus::Ok
    );
    let (mut value, mut flag) = (0.0, -1);
    let s = unsafe { hullopt_model_predict(h_model, params.as_ptr(), params.len(), 170.0, 0.25, &mut value, &mut flag) };
    assert_eq!(s, HulloptStatus::Ok);
    let direct = mlp.predict(&params, 170.0, 0.25).unwrap();
    assert_eq!(value, direct.value);
    assert_eq!(flag, i32::from(direct.out_of_range));
    let s = unsafe { hullopt_model_predict(h_model, params.as_ptr(), 1, 170.0, 0.25, &mut value, ptr::null_mut()) };
    assert_eq!(s, HulloptStatus::Validation);

    unsafe {
        hullopt_model_free(h_model);
        hullopt_pca_free(h_pca);
    }
}

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "hullopt.h"
int main(void) {
    double cf = 0.0;
    if (hullopt_friction_coefficient(1e9, &cf) != HULLOPT_STATUS_OK) return 1;
    if (hullopt_friction_coefficient(1e9, NULL) != HULLOPT_STATUS_NULL_POINTER) return 2;
    printf("%s %.17e\n", hullopt_version(), cf);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let lib = target_dir().join("libhullopt_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cf: f64 = text.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(cf == friction_coefficient(1e9).unwrap());
}
