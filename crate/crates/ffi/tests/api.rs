use std::ffi::{CStr, CString};
use std::ptr;

use d3pinn_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    unsafe {
        d3pinn_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

const TINY: &str = r#"
preset = "example2"
scale = "desk"

[[networks]]
depth = 2
width = 4

[[networks]]
depth = 2
width = 4

[train]
iterations = 2

[points]
residual_per_subdomain = 8
interface = 4
boundary = 4
initial = 4
"#;

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(
            d3pinn_config_preset(ptr::null(), c("desk").as_ptr(), ptr::null_mut()),
            D3pinnStatus::NullPointer
        );
        assert!(last_error().contains("problem"));
        let mut out = ptr::null_mut();
        assert_eq!(d3pinn_train(ptr::null(), &mut out), D3pinnStatus::NullPointer);
        assert!(out.is_null());
        d3pinn_config_free(ptr::null_mut());
    }
}

#[test]
fn config_errors_carry_the_key_path() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let bad = c("preset = \"example1\"\n[weights]\nlambda2 = -1.0\n");
        assert_eq!(d3pinn_config_from_toml(bad.as_ptr(), &mut cfg), D3pinnStatus::Config);
        assert!(last_error().contains("weights.lambda2"), "{}", last_error());
        assert!(cfg.is_null());
    }
}

#[test]
fn config_round_trips_through_toml() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(
            d3pinn_config_preset(c("example1").as_ptr(), c("full").as_ptr(), &mut cfg),
            D3pinnStatus::Ok
        );
        assert_eq!(d3pinn_config_set_seed(cfg, 7), D3pinnStatus::Ok);
        assert_eq!(d3pinn_config_set_iterations(cfg, 0), D3pinnStatus::Config);
        let mut len = 0usize;
        assert_eq!(
            d3pinn_config_to_toml(cfg, ptr::null_mut(), 0, &mut len),
            D3pinnStatus::Ok
        );
        let mut small = vec![0 as std::ffi::c_char; len];
        assert_eq!(
            d3pinn_config_to_toml(cfg, small.as_mut_ptr(), len, &mut len),
            D3pinnStatus::BufferTooSmall
        );
        let mut buf = vec![0 as std::ffi::c_char; len + 1];
        assert_eq!(
            d3pinn_config_to_toml(cfg, buf.as_mut_ptr(), buf.len(), &mut len),
            D3pinnStatus::Ok
        );
        let text = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert!(text.contains("seed = 7"));
        assert!(text.contains("iterations = 20000"));

        let mut again = ptr::null_mut();
        assert_eq!(d3pinn_config_from_toml(buf.as_ptr(), &mut again), D3pinnStatus::Ok);
        d3pinn_config_free(again);
        d3pinn_config_free(cfg);
    }
}

#[test]
fn train_evolve_and_measure() {
    let tmp = tempfile::tempdir().unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(
            d3pinn_config_from_toml(c(TINY).as_ptr(), &mut cfg),
            D3pinnStatus::Ok,
            "{}",
            last_error()
        );
        let mut model = ptr::null_mut();
        assert_eq!(d3pinn_train(cfg, &mut model), D3pinnStatus::Ok, "{}", last_error());

        let path = c(tmp.path().join("model.json").to_str().unwrap());
        assert_eq!(d3pinn_model_save(model, path.as_ptr()), D3pinnStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(d3pinn_model_load(path.as_ptr(), &mut loaded), D3pinnStatus::Ok);
        let (mut a, mut b) = (0.0, 1.0);
        d3pinn_model_final_loss(model, &mut a);
        d3pinn_model_final_loss(loaded, &mut b);
        assert_eq!(a, b);

        let mut field = ptr::null_mut();
        assert_eq!(
            d3pinn_evolve(cfg, loaded, &mut field),
            D3pinnStatus::Ok,
            "{}",
            last_error()
        );
        let (mut nx, mut nt) = (0, 0);
        d3pinn_field_dims(field, &mut nx, &mut nt);
        assert_eq!((nx, nt), (201, 101));
        let mut values = vec![0.0; nx * nt];
        assert_eq!(
            d3pinn_field_values(field, values.as_mut_ptr(), values.len() - 1),
            D3pinnStatus::BufferTooSmall
        );
        assert_eq!(
            d3pinn_field_values(field, values.as_mut_ptr(), values.len()),
            D3pinnStatus::Ok
        );
        let mut xs = vec![0.0; nx];
        assert_eq!(d3pinn_field_axis(field, 0, xs.as_mut_ptr(), nx), D3pinnStatus::Ok);
        // Initial column is the initial data.
        for (i, x) in xs.iter().enumerate() {
            assert!((values[i * nt] - (0.3 * (-9.0 * x * x).exp() + 1.0)).abs() < 1e-14);
        }

        let grid = c(tmp.path().join("field.grid").to_str().unwrap());
        assert_eq!(d3pinn_field_save(field, grid.as_ptr()), D3pinnStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(d3pinn_field_load(grid.as_ptr(), &mut back), D3pinnStatus::Ok);
        let mut reference = ptr::null_mut();
        assert_eq!(d3pinn_reference(cfg, &mut reference), D3pinnStatus::Ok);
        let (mut l1, mut l2, mut linf) = (-1.0, -1.0, -1.0);
        assert_eq!(
            d3pinn_relative_errors(back, reference, &mut l1, &mut l2, &mut linf),
            D3pinnStatus::Ok
        );
        assert!(l1 >= 0.0 && l2 >= 0.0 && linf >= 0.0);

        let missing = c(tmp.path().join("nope.grid").to_str().unwrap());
        let mut none = ptr::null_mut();
        assert_eq!(d3pinn_field_load(missing.as_ptr(), &mut none), D3pinnStatus::Io);

        for f in [field, back, reference] {
            d3pinn_field_free(f);
        }
        d3pinn_model_free(model);
        d3pinn_model_free(loaded);
        d3pinn_config_free(cfg);
    }
}

#[test]
fn run_experiment_reports_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(d3pinn_config_from_toml(c(TINY).as_ptr(), &mut cfg), D3pinnStatus::Ok);
        assert_eq!(d3pinn_config_set_variant(cfg, c("ddpinn").as_ptr()), D3pinnStatus::Ok);
        assert_eq!(
            d3pinn_config_set_variant(cfg, c("pinn").as_ptr()),
            D3pinnStatus::InvalidArgument
        );
        let dir = c(tmp.path().to_str().unwrap());
        let (mut l2, mut passed) = (-1.0, -1);
        assert_eq!(
            d3pinn_run_experiment(cfg, dir.as_ptr(), &mut l2, &mut passed),
            D3pinnStatus::Ok,
            "{}",
            last_error()
        );
        assert!(l2 > 0.0);
        assert_eq!(passed, i32::from(l2 <= 0.1));
        assert!(tmp.path().join("manifest.json").exists());
        d3pinn_config_free(cfg);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(d3pinn_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
