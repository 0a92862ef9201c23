//! End-to-end tests of the binary: exit codes, output determinism, CSV
//! round trips, and the verify report.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sponge-spectra"))
}

fn write_file(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(content.as_bytes()).unwrap();
    path
}

struct Fixtures {
    _dir: tempfile::TempDir,
    sponge1: std::path::PathBuf,
    phi2: std::path::PathBuf,
    constant: std::path::PathBuf,
    sponge3: std::path::PathBuf,
    measure3: std::path::PathBuf,
    measure_novssc: std::path::PathBuf,
    broken: std::path::PathBuf,
}

fn fixtures() -> Fixtures {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    Fixtures {
        sponge1: write_file(p, "ex1.json", r#"{"bases":[3,2],"digits":[[0,0],[1,1],[2,0]]}"#),
        phi2: write_file(
            p,
            "phi2.json",
            r#"{"digits":[[0,0],[1,1],[2,0]],"values":[[0],[0],[1]]}"#,
        ),
        constant: write_file(
            p,
            "const.json",
            r#"{"digits":[[0,0],[1,1],[2,0]],"values":[[2],[2],[2]]}"#,
        ),
        sponge3: write_file(p, "ex3.json", r#"{"bases":[4,3],"digits":[[0,0],[2,2],[3,0]]}"#),
        measure3: write_file(
            p,
            "m3.json",
            r#"{"digits":[[0,0],[2,2],[3,0]],"probs":[0.25,0.5,0.25],"vssc":true}"#,
        ),
        measure_novssc: write_file(
            p,
            "m3n.json",
            r#"{"digits":[[0,0],[2,2],[3,0]],"probs":[0.25,0.5,0.25]}"#,
        ),
        broken: write_file(p, "broken.json", r#"{"bases":[2,3],"digits":[[0,0]]}"#),
        _dir: dir,
    }
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn dim_prints_dimensions_and_exits_zero() {
    let fx = fixtures();
    let out = run(&["dim", fx.sponge1.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("hausdorff 1.34968382020e0"), "{text}");
    assert!(text.contains("packing 1.36907024643e0"), "{text}");
    assert!(text.contains("mcmullen 1.34968382020e0"), "{text}");
    assert!(text.contains("box n=10000"), "{text}");
}

#[test]
fn malformed_config_exits_two() {
    let fx = fixtures();
    let out = run(&["dim", fx.broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let out = run(&["dim", "/nonexistent/sponge.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_csv_is_deterministic_and_round_trips() {
    let fx = fixtures();
    let args = [
        "spectrum",
        fx.sponge1.to_str().unwrap(),
        "--potential",
        fx.phi2.to_str().unwrap(),
        "--kind",
        "packing",
        "--grid",
        "101",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "two runs must be byte-identical");
    // independent of worker count
    let mut with_jobs: Vec<&str> = args.to_vec();
    with_jobs.extend_from_slice(&["--jobs", "1"]);
    let c = run(&with_jobs);
    assert_eq!(a.stdout, c.stdout, "output must not depend on --jobs");

    let text = stdout(&a);
    assert!(!text.contains('\r'));
    let curve = sponge_spectra::cli::csv::parse_curve_csv(&text).unwrap();
    assert_eq!(curve.grid.len(), 101);
    // values match a direct library evaluation to 12 significant digits
    let spec = sponge_spectra::files::load_sponge(&fx.sponge1).unwrap();
    let phi = sponge_spectra::files::load_potential(&fx.phi2, &spec).unwrap();
    for (&alpha, &value) in curve.grid.iter().zip(&curve.values) {
        let direct =
            sponge_spectra::spectra::packing_spectrum_point(&spec, &phi, &[alpha]).unwrap();
        assert!((value - direct).abs() <= 1e-11 * direct.abs().max(1.0));
    }
}

#[test]
fn spectrum_writes_csv_and_svg_files() {
    let fx = fixtures();
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("curve.csv");
    let out = run(&[
        "spectrum",
        fx.sponge1.to_str().unwrap(),
        "--potential",
        fx.phi2.to_str().unwrap(),
        "--grid",
        "51",
        "--out",
        out_path.to_str().unwrap(),
        "--format",
        "both",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert!(csv.starts_with("alpha,value,kind,status\n"));
    let svg = std::fs::read_to_string(dir.path().join("curve.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    // svg without --out is a config error
    let out = run(&[
        "spectrum",
        fx.sponge1.to_str().unwrap(),
        "--potential",
        fx.phi2.to_str().unwrap(),
        "--format",
        "svg",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constant_potential_curve_is_degenerate() {
    let fx = fixtures();
    let out = run(&[
        "spectrum",
        fx.sponge1.to_str().unwrap(),
        "--potential",
        fx.constant.to_str().unwrap(),
        "--grid",
        "101",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn diverge_full_box_reports_packing_dimension() {
    let fx = fixtures();
    let out = run(&[
        "diverge",
        fx.sponge1.to_str().unwrap(),
        "--potential",
        fx.phi2.to_str().unwrap(),
        "--box",
        "0,1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("1.36907024643e0"), "{}", stdout(&out));
    let out = run(&[
        "diverge",
        fx.sponge1.to_str().unwrap(),
        "--potential",
        fx.phi2.to_str().unwrap(),
        "--box",
        "1,0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn localdim_exact_curve_for_example3() {
    let fx = fixtures();
    let out = run(&[
        "localdim",
        fx.sponge3.to_str().unwrap(),
        "--measure",
        fx.measure3.to_str().unwrap(),
        "--grid",
        "21",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let curve = sponge_spectra::cli::csv::parse_curve_csv(&stdout(&out)).unwrap();
    assert_eq!(curve.kind, sponge_spectra::spectra::SpectrumKind::LocalDim);
    let alpha_min = 2f64.ln() / 3f64.ln();
    assert!((curve.grid[0] - alpha_min).abs() < 1e-10);
    assert!((curve.grid.last().unwrap() - (alpha_min + 0.5)).abs() < 1e-10);
    assert!(curve.values[0].abs() < 1e-8);
    assert!((curve.values.last().unwrap() - 0.5).abs() < 1e-8);

    // measure without the vssc declaration is a config error
    let out = run(&[
        "localdim",
        fx.sponge3.to_str().unwrap(),
        "--measure",
        fx.measure_novssc.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // zero-probability digits are a config error too
    let dir = tempfile::tempdir().unwrap();
    let zero = write_file(
        dir.path(),
        "zero.json",
        r#"{"digits":[[0,0],[2,2],[3,0]],"probs":[0.0,0.5,0.5],"vssc":true}"#,
    );
    let out = run(&[
        "localdim",
        fx.sponge3.to_str().unwrap(),
        "--measure",
        zero.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_hausdorff_kind_and_range_override() {
    let fx = fixtures();
    let out = run(&[
        "spectrum",
        fx.sponge1.to_str().unwrap(),
        "--potential",
        fx.phi2.to_str().unwrap(),
        "--kind",
        "hausdorff",
        "--grid",
        "21",
        "--range",
        "0.2,0.8",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let curve = sponge_spectra::cli::csv::parse_curve_csv(&stdout(&out)).unwrap();
    assert_eq!(
        curve.kind,
        sponge_spectra::spectra::SpectrumKind::HausdorffBirkhoff
    );
    assert_eq!(curve.grid.len(), 21);
    assert!((curve.grid[0] - 0.2).abs() < 1e-12);
    assert!((curve.grid.last().unwrap() - 0.8).abs() < 1e-12);
}

#[test]
fn verify_accepts_explicit_potential() {
    let fx = fixtures();
    let out = run(&[
        "verify",
        fx.sponge1.to_str().unwrap(),
        "--potential",
        fx.phi2.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("CHECK gridoracle PASS"));
}

#[test]
fn verify_passes_clean_and_fails_when_perturbed() {
    let fx = fixtures();
    let out = run(&["verify", fx.sponge1.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for name in ["mcmullen", "boxcount", "gridoracle", "concavity", "affine"] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("CHECK {name} PASS"))),
            "missing PASS line for {name}: {text}"
        );
    }

    let out = bin()
        .args(["verify", fx.sponge1.to_str().unwrap()])
        .env("SPONGE_SPECTRA_PERTURB", "0.01")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn verify_skips_mcmullen_for_d3() {
    let dir = tempfile::tempdir().unwrap();
    let sponge = write_file(
        dir.path(),
        "d3.json",
        r#"{"bases":[5,3,2],"digits":[[0,0,0],[4,2,1],[3,1,0],[2,2,1]]}"#,
    );
    let out = run(&["verify", sponge.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("CHECK mcmullen SKIPPED"));
}
