use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use chemospread::harness::RunConfig;
use chemospread::solver::{run, RunOptions};
use chemospread_ffi::*;

const CONFIG: &str = r#"{
  "params": {"chi": 0.5, "a": 1.0, "b": 1.0, "lambda": 1.0, "mu": 1.0, "dim": 1},
  "grid": {"lo": [-60.0], "hi": [60.0], "n": [601], "boundary": "neumann"},
  "initial": {"shape": {"kind": "compact_bump", "radius": 10.0}},
  "horizon": 5.0
}"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cs_last_error_message()) }.to_string_lossy().into_owned()
}

fn simulation(json: &str) -> *mut CsSimulation {
    let text = CString::new(json).unwrap();
    let mut sim = ptr::null_mut();
    let status = unsafe { cs_simulation_from_config(text.as_ptr(), &mut sim) };
    assert_eq!(status, CsStatus::Ok, "{}", last_error());
    assert!(!sim.is_null());
    sim
}

fn field(sim: *const CsSimulation, copy: unsafe extern "C" fn(*const CsSimulation, *mut f64, usize) -> CsStatus) -> Vec<f64> {
    let mut n = 0;
    assert_eq!(unsafe { cs_simulation_len(sim, &mut n) }, CsStatus::Ok);
    let mut buf = vec![f64::NAN; n];
    assert_eq!(unsafe { copy(sim, buf.as_mut_ptr(), n) }, CsStatus::Ok);
    buf
}

#[test]
fn version_and_speeds() {
    let v = unsafe { CStr::from_ptr(cs_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    assert_eq!(cs_kpp_speed(4.0), 4.0);
    assert!(cs_kpp_speed(-1.0).is_nan());

    let mut c = 0.0;
    assert_eq!(unsafe { cs_envelope_speed(0.5, 1.0, &mut c) }, CsStatus::Ok);
    assert_eq!(c, 2.5);
    assert_eq!(last_error(), "");
    assert_eq!(unsafe { cs_envelope_speed(0.0, 1.0, &mut c) }, CsStatus::InvalidArgument);
    assert!(last_error().contains("decay rate"));
    assert_eq!(unsafe { cs_envelope_speed(0.5, 1.0, ptr::null_mut()) }, CsStatus::NullPointer);
}

#[test]
fn damping_condition() {
    let mut ok = false;
    assert_eq!(unsafe { cs_damping_condition(0.5, 1.0, 1.0, 1.0, 1.0, 1, &mut ok) }, CsStatus::Ok);
    assert!(ok);
    // N mu chi / 4 = 2 * 1 * 4 / 4 = 2 > b.
    assert_eq!(unsafe { cs_damping_condition(4.0, 1.0, 1.5, 1.0, 1.0, 2, &mut ok) }, CsStatus::Ok);
    assert!(!ok);
    assert_eq!(unsafe { cs_damping_condition(0.5, -1.0, 1.0, 1.0, 1.0, 1, &mut ok) }, CsStatus::InvalidArgument);
}

#[test]
fn theory_constants() {
    let mut t = CsTheory::default();
    assert_eq!(unsafe { cs_theory_evaluate(1.0, 1, 0.5, &mut t) }, CsStatus::Ok);
    assert!((t.abar - 0.6875).abs() < 1e-12);
    assert!((t.ell - 8.885765876316732).abs() < 1e-9);
    assert!((t.eigenvalue_at_rest - 0.65625).abs() < 1e-12);
    assert!((t.eigenvalue_min - t.lambda_floor).abs() < 1e-14);
    assert!((t.eigenvalue_min_speed.abs() - t.max_frame_speed).abs() < 1e-12);
    assert_eq!(unsafe { cs_theory_evaluate(1.0, 1, 1.5, &mut t) }, CsStatus::InvalidArgument);
    assert_eq!(unsafe { cs_theory_evaluate(1.0, 4, 0.5, &mut t) }, CsStatus::InvalidArgument);
}

#[test]
fn advance_matches_library_run() {
    let sim = simulation(CONFIG);
    let mut t = f64::NAN;
    assert_eq!(unsafe { cs_simulation_time(sim, &mut t) }, CsStatus::Ok);
    assert_eq!(t, 0.0);
    assert_eq!(unsafe { cs_simulation_advance(sim, 5.0) }, CsStatus::Ok);
    assert_eq!(unsafe { cs_simulation_time(sim, &mut t) }, CsStatus::Ok);
    assert_eq!(t, 5.0);

    let config = RunConfig::from_json_str(CONFIG).unwrap();
    let options = RunOptions {
        horizon: 5.0,
        cadence: 5.0,
        retain_states: true,
        ..RunOptions::default()
    };
    let record = run(config.initial.build(&config.grid).unwrap(), &config.params, &config.scheme, &options, &mut []).unwrap();
    let last = record.states.last().unwrap();
    assert_eq!(field(sim, cs_simulation_copy_u), last.u.values());
    assert_eq!(field(sim, cs_simulation_copy_v), last.v.values());

    let mut x = 0.0;
    let xi = [1.0];
    assert_eq!(unsafe { cs_simulation_front_position(sim, 0.5, xi.as_ptr(), 1, &mut x) }, CsStatus::Ok);
    assert!(x > 10.0 && x < 30.0, "{x}");
    let wrong = [0.6, 0.8];
    assert_eq!(
        unsafe { cs_simulation_front_position(sim, 0.5, wrong.as_ptr(), 2, &mut x) },
        CsStatus::InvalidArgument
    );
    assert_eq!(unsafe { cs_simulation_front_position(sim, 5.0, xi.as_ptr(), 1, &mut x) }, CsStatus::NoFront);
    assert_eq!(unsafe { cs_simulation_advance(sim, 1.0) }, CsStatus::InvalidArgument);
    unsafe { cs_simulation_free(sim) };
}

#[test]
fn step_reports_its_size() {
    let sim = simulation(CONFIG);
    let mut dt = 0.0;
    assert_eq!(unsafe { cs_simulation_step(sim, &mut dt) }, CsStatus::Ok);
    let mut t = 0.0;
    unsafe { cs_simulation_time(sim, &mut t) };
    assert!(dt > 0.0 && dt <= 0.05);
    assert_eq!(t, dt);
    assert_eq!(unsafe { cs_simulation_step(sim, ptr::null_mut()) }, CsStatus::Ok);
    unsafe { cs_simulation_free(sim) };
}

#[test]
fn buffer_and_handle_errors() {
    let sim = simulation(CONFIG);
    let mut small = vec![0.0; 10];
    assert_eq!(unsafe { cs_simulation_copy_u(sim, small.as_mut_ptr(), small.len()) }, CsStatus::BufferTooSmall);
    assert!(last_error().contains("601"));
    assert_eq!(unsafe { cs_simulation_copy_u(sim, ptr::null_mut(), 601) }, CsStatus::NullPointer);
    unsafe { cs_simulation_free(sim) };

    let mut t = 0.0;
    assert_eq!(unsafe { cs_simulation_time(ptr::null(), &mut t) }, CsStatus::NullPointer);
    assert_eq!(unsafe { cs_simulation_advance(ptr::null_mut(), 1.0) }, CsStatus::NullPointer);
    unsafe { cs_simulation_free(ptr::null_mut()) };
}

#[test]
fn bad_config_reports_key_path() {
    let text = CString::new(r#"{"params": {"chi": 0.5}}"#).unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { cs_simulation_from_config(text.as_ptr(), &mut sim) }, CsStatus::Config);
    assert!(sim.is_null());
    assert!(last_error().contains("params.a"), "{}", last_error());
    assert_eq!(unsafe { cs_simulation_from_config(ptr::null(), &mut sim) }, CsStatus::NullPointer);
}

#[test]
fn failed_step_leaves_state_unchanged() {
    let json = CONFIG.replace(
        r#""horizon": 5.0"#,
        r#""horizon": 5.0, "scheme": {"dt": 40.0, "dt_policy": "fixed"}"#,
    );
    let sim = simulation(&json);
    let mut result = CsStatus::Ok;
    for _ in 0..5 {
        let before = field(sim, cs_simulation_copy_u);
        result = unsafe { cs_simulation_step(sim, ptr::null_mut()) };
        if result != CsStatus::Ok {
            assert_eq!(field(sim, cs_simulation_copy_u), before);
            break;
        }
    }
    assert_eq!(result, CsStatus::Numerical);
    assert!(last_error().contains("negativity") || last_error().contains("non-finite"));
    unsafe { cs_simulation_free(sim) };
}

#[test]
fn runs_a_config_file() {
    let tmp = tempfile::TempDir::new().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(&config, CONFIG).unwrap();
    let out = tmp.path().join("out");
    let c = CString::new(config.to_str().unwrap()).unwrap();
    let o = CString::new(out.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { cs_run_config_file(c.as_ptr(), o.as_ptr()) }, CsStatus::Ok, "{}", last_error());
    assert!(out.join("summary.json").exists());
    assert!(out.join("fronts.csv").exists());
    let missing = CString::new("/nonexistent.json").unwrap();
    assert_eq!(unsafe { cs_run_config_file(missing.as_ptr(), o.as_ptr()) }, CsStatus::Config);
}

#[test]
fn errors_are_per_thread() {
    assert_eq!(unsafe { cs_envelope_speed(-1.0, 1.0, &mut 0.0) }, CsStatus::InvalidArgument);
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
    assert!(!last_error().is_empty());
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include").join("chemospread.h");
    assert!(std::fs::read_to_string(&header).unwrap().contains("CsStatus cs_simulation_advance(CsSimulation *sim, double t_end);"));
    let lib = target_dir().join("libchemospread_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let tmp = tempfile::TempDir::new().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-o"])
        .arg(&exe)
        .arg(manifest.join("tests").join("c").join("smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success());
    let output = Command::new(&exe).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(String::from_utf8_lossy(&output.stdout).starts_with("front "));
}
