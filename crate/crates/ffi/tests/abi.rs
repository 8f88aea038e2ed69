use std::ffi::{CStr, CString};
use std::ptr;

use nuc_forge_ffi::*;

fn last_error() -> String {
    let p = nf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn frame(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> *mut NfFrame {
    let data: Vec<f64> = (0..h * w).map(|k| f(k / w, k % w)).collect();
    let mut out = ptr::null_mut();
    let st = unsafe { nf_frame_new(h, w, data.as_ptr(), data.len(), &mut out) };
    assert_eq!(st, NfStatus::Ok);
    out
}

fn offset_values(o: *const NfOffset) -> (usize, usize, Vec<f64>) {
    let (mut h, mut w) = (0, 0);
    assert_eq!(unsafe { nf_offset_dims(o, &mut h, &mut w) }, NfStatus::Ok);
    let mut buf = vec![0.0; h * w];
    assert_eq!(
        unsafe { nf_offset_copy(o, buf.as_mut_ptr(), buf.len()) },
        NfStatus::Ok
    );
    (h, w, buf)
}

fn pattern(i: usize, j: usize) -> f64 {
    ((i * 7 + j * 3) % 11) as f64 * 0.1 + (j as f64 * 0.37).sin()
}

fn centered(h: usize, w: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..h * w).map(|k| pattern(k / w, k % w)).collect();
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.into_iter().map(|x| x - m).collect()
}

#[test]
fn version_is_a_string() {
    let v = unsafe { CStr::from_ptr(nf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn frame_round_trip_and_errors() {
    let f = frame(3, 4, |i, j| (i * 4 + j) as f64);
    let (mut h, mut w) = (0, 0);
    assert_eq!(unsafe { nf_frame_dims(f, &mut h, &mut w) }, NfStatus::Ok);
    assert_eq!((h, w), (3, 4));
    let mut buf = vec![0.0; 12];
    assert_eq!(
        unsafe { nf_frame_copy(f, buf.as_mut_ptr(), 12) },
        NfStatus::Ok
    );
    assert_eq!(buf, (0..12).map(|v| v as f64).collect::<Vec<_>>());
    assert_eq!(
        unsafe { nf_frame_copy(f, buf.as_mut_ptr(), 11) },
        NfStatus::InvalidArgument
    );
    unsafe { nf_frame_free(f) };

    let mut out = ptr::null_mut();
    let data = [1.0; 5];
    let st = unsafe { nf_frame_new(2, 3, data.as_ptr(), data.len(), &mut out) };
    assert_eq!(st, NfStatus::DimensionMismatch);
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    let bad = [f64::NAN; 4];
    assert_eq!(
        unsafe { nf_frame_new(2, 2, bad.as_ptr(), 4, &mut out) },
        NfStatus::Numerical
    );
    assert_eq!(
        unsafe { nf_frame_new(2, 2, ptr::null(), 4, &mut out) },
        NfStatus::NullPointer
    );
    assert_eq!(
        unsafe { nf_frame_dims(ptr::null(), &mut h, &mut w) },
        NfStatus::NullPointer
    );
    unsafe { nf_frame_free(ptr::null_mut()) };
}

#[test]
fn reconstruct_recovers_an_integrable_surface() {
    let (h, w) = (9, 12);
    let truth = centered(h, w);
    let dx: Vec<f64> = (0..h)
        .flat_map(|i| (0..w - 1).map(move |j| pattern(i, j + 1) - pattern(i, j)))
        .collect();
    let dy: Vec<f64> = (0..h - 1)
        .flat_map(|i| (0..w).map(move |j| pattern(i + 1, j) - pattern(i, j)))
        .collect();
    let mut o = ptr::null_mut();
    let mut residual = -1.0;
    let st = unsafe {
        nf_reconstruct(
            h,
            w,
            dx.as_ptr(),
            dx.len(),
            dy.as_ptr(),
            dy.len(),
            &mut o,
            &mut residual,
        )
    };
    assert_eq!(st, NfStatus::Ok);
    assert!(residual.abs() < 1e-12);
    let (_, _, got) = offset_values(o);
    for (a, b) in got.iter().zip(&truth) {
        assert!((a - b).abs() < 1e-10);
    }
    unsafe { nf_offset_free(o) };

    let mut o = ptr::null_mut();
    let st = unsafe {
        nf_reconstruct(
            h,
            w,
            dx.as_ptr(),
            dx.len() - 1,
            dy.as_ptr(),
            dy.len(),
            &mut o,
            ptr::null_mut(),
        )
    };
    assert_eq!(st, NfStatus::DimensionMismatch);
}

#[test]
fn estimator_corrects_a_static_scene() {
    let (h, w) = (8, 10);
    let o = centered(h, w);
    let scene = |i: usize, j: usize| ((i * 13 + j * 5) % 17) as f64;
    let at = |i: usize, j: usize| o[i * w + j];

    let mut est = ptr::null_mut();
    assert_eq!(unsafe { nf_estimator_new(h, w, &mut est) }, NfStatus::Ok);
    let base = frame(h, w, |i, j| scene(i, j) + at(i, j));
    let sx = frame(h, w, |i, j| scene(i, j + 1) + at(i, j));
    let sy = frame(h, w, |i, j| scene(i + 1, j) + at(i, j));
    unsafe {
        assert_eq!(
            nf_estimator_add_pair(est, base, sx, NF_AXIS_HORIZONTAL),
            NfStatus::Ok
        );
        assert_eq!(
            nf_estimator_add_pair(est, base, sy, NF_AXIS_VERTICAL),
            NfStatus::Ok
        );
        assert_eq!(
            nf_estimator_add_pair(est, base, sy, 7),
            NfStatus::InvalidArgument
        );
    }
    let (mut nx, mut ny) = (0, 0);
    assert_eq!(
        unsafe { nf_estimator_cycles(est, &mut nx, &mut ny) },
        NfStatus::Ok
    );
    assert_eq!((nx, ny), (1, 1));

    let mut off = ptr::null_mut();
    assert_eq!(
        unsafe { nf_estimator_reconstruct(est, &mut off, ptr::null_mut()) },
        NfStatus::Ok
    );
    let mut corrected = ptr::null_mut();
    assert_eq!(
        unsafe { nf_correct(base, off, &mut corrected) },
        NfStatus::Ok
    );
    let mut buf = vec![0.0; h * w];
    assert_eq!(
        unsafe { nf_frame_copy(corrected, buf.as_mut_ptr(), buf.len()) },
        NfStatus::Ok
    );
    for i in 0..h {
        for j in 0..w {
            assert!((buf[i * w + j] - scene(i, j)).abs() < 1e-9);
        }
    }

    let small = frame(4, 4, |_, _| 0.0);
    assert_eq!(
        unsafe { nf_estimator_add_pair(est, small, small, NF_AXIS_HORIZONTAL) },
        NfStatus::DimensionMismatch
    );
    assert_eq!(
        unsafe { nf_correct(small, off, &mut corrected) },
        NfStatus::DimensionMismatch
    );
    unsafe {
        for f in [base, sx, sy, small, corrected] {
            nf_frame_free(f);
        }
        nf_offset_free(off);
        nf_estimator_free(est);
    }
}

#[test]
fn empty_estimator_reports_an_error() {
    let mut est = ptr::null_mut();
    assert_eq!(unsafe { nf_estimator_new(5, 5, &mut est) }, NfStatus::Ok);
    let mut off = ptr::null_mut();
    let st = unsafe { nf_estimator_reconstruct(est, &mut off, ptr::null_mut()) };
    assert_ne!(st, NfStatus::Ok);
    assert!(off.is_null());
    unsafe { nf_estimator_free(est) };
}

#[test]
fn experiment_from_json() {
    let cfg = CString::new(
        r#"{"scene": {"height": 24, "width": 24}, "cycles_per_axis": 4, "master_seed": 3}"#,
    )
    .unwrap();
    let (mut e, mut c) = (0.0, 0.0);
    let mut est = ptr::null_mut();
    assert_eq!(
        unsafe { nf_run_experiment(cfg.as_ptr(), &mut e, &mut c, &mut est) },
        NfStatus::Ok
    );
    assert!(e > 0.0 && e < c);
    let (h, w, _) = offset_values(est);
    assert_eq!((h, w), (24, 24));
    unsafe { nf_offset_free(est) };

    let (mut e2, mut c2) = (0.0, 0.0);
    assert_eq!(
        unsafe { nf_run_experiment(cfg.as_ptr(), &mut e2, &mut c2, ptr::null_mut()) },
        NfStatus::Ok
    );
    assert_eq!(e.to_bits(), e2.to_bits());

    let bad = CString::new(r#"{"fpn": {"strenght": 1}}"#).unwrap();
    assert_eq!(
        unsafe { nf_run_experiment(bad.as_ptr(), &mut e, &mut c, ptr::null_mut()) },
        NfStatus::InvalidArgument
    );
    assert!(last_error().contains("strenght"));
    let junk = CString::new("{").unwrap();
    assert_eq!(
        unsafe { nf_run_experiment(junk.as_ptr(), &mut e, &mut c, ptr::null_mut()) },
        NfStatus::Parse
    );
}

#[test]
fn pfm_files_round_trip() {
    let dir = std::env::temp_dir().join(format!("nuc-forge-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = CString::new(dir.join("f.pfm").to_str().unwrap()).unwrap();
    let f = frame(3, 5, |i, j| (i as f64) * 0.5 - j as f64);
    assert_eq!(
        unsafe { nf_frame_write_pfm(f, path.as_ptr()) },
        NfStatus::Ok
    );
    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { nf_frame_read(path.as_ptr(), &mut back) },
        NfStatus::Ok
    );
    let mut a = vec![0.0; 15];
    let mut b = vec![0.0; 15];
    unsafe {
        nf_frame_copy(f, a.as_mut_ptr(), 15);
        nf_frame_copy(back, b.as_mut_ptr(), 15);
        nf_frame_free(f);
        nf_frame_free(back);
    }
    assert_eq!(a, b);
    let missing = CString::new(dir.join("missing.pfm").to_str().unwrap()).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { nf_frame_read(missing.as_ptr(), &mut out) },
        NfStatus::Io
    );
    let _ = std::fs::remove_dir_all(&dir);
}
