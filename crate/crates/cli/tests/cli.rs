use std::fs;
use std::path::Path;
use std::process::Command;

use hdl::{emit_plot_data, parse_config, GridSpec, PlotData};
use hdl_core::circle::CircleMap;
use hdl_core::continuation::{run_metric_continuation, ContinuationOptions};
use hdl_core::grid::{DiskGrid, ScalarField};
use hdl_core::io::scalar_field_from_csv;

fn hdl(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hdl"))
        .args(args)
        .current_dir(dir)
        .env_remove("HDL_THREADS")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn config_examples() {
    let cfg = parse_config("").unwrap();
    assert_eq!(cfg.grid_or_default(), GridSpec { n_r: 64, n_theta: 128, r_max: 0.95f32 as f64 });
    assert_eq!((cfg.metric_tol, cfg.map_tol, cfg.steps, cfg.seed), (1e-10, 1e-8, 11, 0));

    let g = parse_config("grid=32x64@0.9").unwrap().grid.unwrap();
    assert_eq!((g.n_r, g.n_theta, g.r_max), (32, 64, 0.9f32 as f64));

    assert_eq!(parse_config("map_tol=-1").unwrap_err().line, 1);
}

#[test]
fn constant_field_plot_has_equal_values() {
    let dir = tempfile::tempdir().unwrap();
    let g = DiskGrid::new(8, 8, 0.9).unwrap();
    let f = ScalarField::constant(g.clone(), -0.25);
    let path = dir.path().join("k.csv");
    emit_plot_data(PlotData::Scalar(&f), &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,theta,x,y,value"));
    let values: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(values.len(), g.node_count());
    assert!(values.iter().all(|v| *v == values[0]));
}

#[test]
fn csv_round_trip_matches_binary() {
    let g = DiskGrid::new(9, 12, 0.9).unwrap();
    let f = ScalarField::from_fn(g.clone(), |z| (3.0 * z.re).sin() - z.im * z.im / 7.0);
    let back = scalar_field_from_csv(&PlotData::Scalar(&f).to_csv(), &g).unwrap();
    assert_eq!(back.values(), f.values());
}

#[test]
fn sweep_csv_has_one_row_per_step() {
    let g = DiskGrid::new(8, 16, 0.9).unwrap();
    let k = ScalarField::constant(g.clone(), -1.0);
    let rep = run_metric_continuation(&k, &CircleMap::identity(64), &g, &ContinuationOptions::default()).unwrap();
    let csv = PlotData::Sweep(&rep).to_csv();
    assert_eq!(csv.lines().next(), Some("t,j,sup_mu,w_margin,dist_h0,dJ"));
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |tag: &str| {
        let m = format!("m{tag}.bin");
        let h = format!("h{tag}.bin");
        let r = format!("r{tag}.txt");
        assert_eq!(hdl(d, &["solve-metric", "--curvature", "radial-bump:3,4", "--grid", "12x24@0.9", "--out", &m]).0, 0);
        assert_eq!(hdl(d, &["solve-map", "--target", &m, "--boundary", "sine:0.3", "--out", &h]).0, 0);
        assert_eq!(hdl(d, &["diagnose", "--map", &h, "--bochner", "--qi-pairs", "32", "--seed", "5", "--report", &r]).0, 0);
        (fs::read(d.join(m)).unwrap(), fs::read(d.join(h)).unwrap(), fs::read(d.join(r)).unwrap())
    };
    let first = run("a");
    let second = run("b");
    assert!(first == second);
    let report = String::from_utf8(first.2).unwrap();
    for key in ["jacobian_inf", "qc_sup_mu", "qi_c", "w_margin", "bochner_h_sup", "bochner_l_sup", "trace_err"] {
        assert!(report.lines().any(|l| l.starts_with(&format!("{key}="))), "{key} missing");
    }
}

#[test]
fn sweep_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("run.cfg"), "# small sweep\ngrid=10x16@0.9\nboundary=sine:0.3\nsteps=3\nreport=rep.txt\nplot=steps.csv\n")
        .unwrap();
    assert_eq!(hdl(d, &["--config", "run.cfg", "sweep-boundary"]).0, 0);
    let rep = fs::read_to_string(d.join("rep.txt")).unwrap();
    assert!(rep.contains("verdict=CERTIFIED_POSITIVE"));
    assert_eq!(fs::read_to_string(d.join("steps.csv")).unwrap().lines().count(), 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.cfg"), "grid=10x16@0.9\nmystery=1\n").unwrap();
    assert_eq!(hdl(d, &["--config", "bad.cfg", "sweep-boundary", "--boundary", "identity"]).0, 4);
    assert_eq!(hdl(d, &["solve-metric", "--grid", "10x16@0.9", "--out", "m.bin"]).0, 4);
    assert_eq!(hdl(d, &["solve-metric", "--curvature", "constant:3", "--out", "m.bin"]).0, 4);
    assert_eq!(hdl(d, &["no-such-command"]).0, 4);
    assert_eq!(hdl(d, &["diagnose", "--map", "missing.bin"]).0, 4);
    let (code, _) = hdl(
        d,
        &["solve-map", "--boundary", "sine:0.3", "--grid", "10x16@0.9", "--tol", "1e-300", "--out", "h.bin"],
    );
    assert_eq!(code, 2);
}

#[test]
fn thread_env_fallback_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hdl"))
        .args(["extend", "--map", "identity", "--grid", "8x8@0.9", "--out", "e.bin"])
        .current_dir(dir.path())
        .env("HDL_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let out = Command::new(env!("CARGO_BIN_EXE_hdl"))
        .args(["extend", "--map", "identity", "--grid", "8x8@0.9", "--out", "e.bin"])
        .current_dir(dir.path())
        .env("HDL_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
