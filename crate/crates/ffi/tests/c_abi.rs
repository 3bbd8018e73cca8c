use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use scatter_teleport_ffi::*;

fn config() -> StScatterConfig {
    StScatterConfig {
        twice_spin: 1,
        kind: StCouplingKind::Heisenberg as u32,
        dispersion: StDispersion::Quadratic as u32,
        couplings: [0.0, 1.5, 1.5],
        wavevector: 1.0,
        velocity: 1.0,
        d12: std::f64::consts::PI,
        d23: std::f64::consts::PI,
    }
}

fn params() -> StProtocolParams {
    StProtocolParams {
        twice_spin: 1,
        kind: StCouplingKind::Heisenberg as u32,
        dispersion: StDispersion::Quadratic as u32,
        jb_over_v: 1.5,
        jc_over_v: 1.5,
        n23: 30,
        n12: 30,
        kd12_over_pi: 1.0,
        kd23_over_pi: 1.0,
    }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(st_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn solve_and_copy_out() {
    let mut ks = ptr::null_mut();
    assert_eq!(unsafe { st_kraus_solve(&config(), &mut ks) }, StStatus::Ok);
    let d = unsafe { st_kraus_dim(ks) };
    assert_eq!(d, 8);
    let mut residual = 1.0;
    assert_eq!(unsafe { st_kraus_closure_residual(ks, &mut residual) }, StStatus::Ok);
    assert!(residual < 1e-10);

    let mut buf = vec![StComplex::default(); d * d];
    assert_eq!(unsafe { st_kraus_transmission(ks, 0, 1, buf.as_mut_ptr(), buf.len()) }, StStatus::Ok);
    assert!(buf.iter().any(|z| z.re != 0.0 || z.im != 0.0));
    assert_eq!(unsafe { st_kraus_reflection(ks, 1, 1, buf.as_mut_ptr(), buf.len()) }, StStatus::Ok);
    assert_eq!(
        unsafe { st_kraus_transmission(ks, 0, 0, buf.as_mut_ptr(), d * d - 1) },
        StStatus::BufferTooSmall
    );
    assert!(last_error().contains("need 64"));
    assert_eq!(unsafe { st_kraus_transmission(ks, 2, 0, buf.as_mut_ptr(), buf.len()) }, StStatus::InvalidArgument);
    unsafe { st_kraus_free(ks) };
}

#[test]
fn invalid_inputs_map_to_status_codes() {
    let mut ks = ptr::null_mut();
    assert_eq!(unsafe { st_kraus_solve(ptr::null(), &mut ks) }, StStatus::NullPointer);
    let mut bad = config();
    bad.kind = 7;
    assert_eq!(unsafe { st_kraus_solve(&bad, &mut ks) }, StStatus::InvalidArgument);
    assert!(last_error().contains("coupling kind"));
    bad = config();
    bad.twice_spin = 0;
    assert_eq!(unsafe { st_kraus_solve(&bad, &mut ks) }, StStatus::InvalidArgument);
    bad = config();
    bad.wavevector = -1.0;
    assert_eq!(unsafe { st_kraus_solve(&bad, &mut ks) }, StStatus::InvalidArgument);
    assert!(ks.is_null());
    assert_eq!(unsafe { st_kraus_dim(ptr::null()) }, 0);
    unsafe { st_kraus_free(ptr::null_mut()) };

    // A successful call clears the message.
    assert_eq!(unsafe { st_kraus_solve(&config(), &mut ks) }, StStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { st_kraus_free(ks) };
}

#[test]
fn protocol_through_the_abi() {
    let phi = [StComplex { re: 0.6, im: 0.0 }, StComplex { re: 0.0, im: 0.8 }];
    let mut out = StProtocolOutcome::default();
    assert_eq!(unsafe { st_protocol_run(&params(), phi.as_ptr(), 2, &mut out) }, StStatus::Ok);
    assert!(out.fidelity > 0.999);
    assert!((out.success_probability - 0.125).abs() < 1e-3);
    assert!((out.success_probability - out.stage_probabilities[0] * out.stage_probabilities[1]).abs() < 1e-15);
    assert_eq!(unsafe { st_protocol_run(&params(), phi.as_ptr(), 3, &mut out) }, StStatus::InvalidArgument);

    let mut bad = params();
    bad.kd12_over_pi = 0.0;
    assert_eq!(unsafe { st_protocol_run(&bad, phi.as_ptr(), 2, &mut out) }, StStatus::InvalidArgument);
}

#[test]
fn averages_are_deterministic() {
    let mut a = StPerformance::default();
    let mut b = StPerformance::default();
    let p = params();
    assert_eq!(unsafe { st_average_performance(&p, StSampler::HaarUniform as u32, 100, 9, &mut a) }, StStatus::Ok);
    assert_eq!(unsafe { st_average_performance(&p, StSampler::HaarUniform as u32, 100, 9, &mut b) }, StStatus::Ok);
    assert_eq!(a.mean_fidelity.to_bits(), b.mean_fidelity.to_bits());
    assert_eq!(a.samples, 100);
    assert_eq!(
        unsafe { st_average_performance(&p, StSampler::QutritAngles as u32, 10, 9, &mut a) },
        StStatus::InvalidArgument
    );
    assert!(last_error().contains("qutrit_angles"));
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(st_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn static_lib() -> Option<PathBuf> {
    // The test binary lives in target/<profile>/deps.
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    [profile_dir.join("libscatter_teleport_ffi.a"), profile_dir.join("deps/libscatter_teleport_ffi.a")]
        .into_iter()
        .find(|p| p.exists())
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/scatter_teleport.h");
    assert!(header.exists(), "header not generated");
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipped: no C compiler");
        return;
    }
    let Some(lib) = static_lib() else {
        eprintln!("skipped: static library not found next to the test binary");
        return;
    };
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("st_demo");
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-o"])
        .arg(&out)
        .arg(crate_dir.join("examples/demo.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .status()
        .expect("cc runs");
    assert!(status.success(), "C demo failed to build");
    let run = Command::new(&out).output().expect("demo runs");
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains("dim 8"), "{stdout}");
    assert!(stdout.contains("P 0.125"), "{stdout}");
}
