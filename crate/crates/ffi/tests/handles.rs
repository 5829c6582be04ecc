use std::ffi::{CStr, CString};
use std::ptr;

use mfsde_ffi::*;

const CONFIG: &str = r#"
x = 1.0
horizon = 1.0
steps = 20
particles = 2000
seed = 3
[model]
name = "ou"
theta = 1.0
kappa = 0.5
"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(mfsde_last_error()) }.to_string_lossy().into_owned()
}

fn config(text: &str) -> (MfsdeStatus, *mut MfsdeConfig) {
    let c = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    let status = unsafe { mfsde_config_from_toml(c.as_ptr(), &mut cfg) };
    (status, cfg)
}

#[test]
fn simulate_and_read_back() {
    let (status, cfg) = config(CONFIG);
    assert_eq!(status, MfsdeStatus::Ok);
    let mut sol = ptr::null_mut();
    unsafe {
        assert_eq!(mfsde_simulate(cfg, &mut sol), MfsdeStatus::Ok);
        let (mut n, mut m, mut it) = (0u64, 0u64, 0u64);
        assert_eq!(mfsde_solution_particles(sol, &mut n), MfsdeStatus::Ok);
        assert_eq!(mfsde_solution_steps(sol, &mut m), MfsdeStatus::Ok);
        assert_eq!(mfsde_solution_iterations(sol, &mut it), MfsdeStatus::Ok);
        assert_eq!((n, m), (2000, 20));
        assert!(it >= 2);
        let mut buf = vec![0.0; n as usize];
        assert_eq!(mfsde_solution_node(sol, 0, buf.as_mut_ptr(), buf.len()), MfsdeStatus::Ok);
        assert!(buf.iter().all(|&v| v == 1.0));
        assert_eq!(mfsde_solution_node(sol, 20, buf.as_mut_ptr(), buf.len()), MfsdeStatus::Ok);
        let mut mean = MfsdeEstimate::default();
        assert_eq!(mfsde_solution_mean(sol, 20, &mut mean), MfsdeStatus::Ok);
        let direct = buf.iter().sum::<f64>() / buf.len() as f64;
        assert!((mean.estimate - direct).abs() < 1e-12);
        assert!((mean.estimate - (-0.5f64).exp()).abs() <= 3.0 * mean.std_error + 0.01);

        assert_eq!(mfsde_solution_node(sol, 21, buf.as_mut_ptr(), buf.len()), MfsdeStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));
        assert_eq!(mfsde_solution_node(sol, 1, buf.as_mut_ptr(), 3), MfsdeStatus::InvalidArgument);
        mfsde_solution_free(sol);
        mfsde_config_free(cfg);
    }
}

#[test]
fn delta_estimators() {
    let (_, cfg) = config(CONFIG);
    unsafe {
        assert_eq!(mfsde_config_set_seed(cfg, 11), MfsdeStatus::Ok);
        for est in [MfsdeEstimator::Bel, MfsdeEstimator::Pathwise, MfsdeEstimator::FiniteDifference] {
            let mut out = MfsdeEstimate::default();
            assert_eq!(mfsde_delta(cfg, est, &mut out), MfsdeStatus::Ok, "{}", last_error());
            assert_eq!(out.samples, 2000);
            assert!((out.estimate - (-0.5f64).exp()).abs() <= 3.0 * out.std_error + 0.02, "{est:?} {out:?}");
        }
        mfsde_config_free(cfg);
    }
}

#[test]
fn errors_are_reported() {
    let (status, cfg) = config("x = 1.0\nbogus = 2\n");
    assert_eq!(status, MfsdeStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("configuration error"));
    let (status, _) = config(&CONFIG.replace("particles = 2000", "particles = 1"));
    assert_eq!(status, MfsdeStatus::Config);
    assert!(last_error().contains("particles"));
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(mfsde_config_from_toml(ptr::null(), &mut out), MfsdeStatus::NullPointer);
        assert_eq!(mfsde_simulate(ptr::null(), &mut out.cast()), MfsdeStatus::NullPointer);
        mfsde_config_free(ptr::null_mut());
        mfsde_solution_free(ptr::null_mut());
    }
    let (status, _) = config(CONFIG);
    assert_eq!(status, MfsdeStatus::Ok);
    assert_eq!(last_error(), "");
}

#[test]
fn kantorovich_and_version() {
    let a = [0.0, 1.0, 2.0];
    let b = [0.5, 1.5, 2.5];
    let mut d = 0.0;
    unsafe {
        assert_eq!(mfsde_kantorovich(a.as_ptr(), 3, b.as_ptr(), 3, &mut d), MfsdeStatus::Ok);
        assert!((d - 0.5).abs() < 1e-15);
        assert_eq!(mfsde_kantorovich(a.as_ptr(), 0, b.as_ptr(), 3, &mut d), MfsdeStatus::InvalidArgument);
        let v = CStr::from_ptr(mfsde_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
