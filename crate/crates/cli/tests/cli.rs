use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use osa_ucs::bench::random_xyz;
use osa_ucs::{lgj_to_xyz, xyz_to_lgj, SolveOptions, XyzColor};
use serde_json::Value;
use tempfile::TempDir;

fn osa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osa-ucs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn summary(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("summary is JSON")
}

#[test]
fn convert_single_row() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "12,67,20\n");
    let out = osa(&["convert", "-i", &input]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("L,g,j\n"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    let want = xyz_to_lgj(&XyzColor::new(12.0, 67.0, 20.0))
        .unwrap()
        .to_array();
    let got: Vec<f64> = rows[0].iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(got, want);
}

#[test]
fn output_file_reads_back_bit_for_bit() {
    let dir = TempDir::new().unwrap();
    let colors = random_xyz(200, 11);
    let text: String = colors
        .iter()
        .map(|c| format!("{} {} {}\n", c.x, c.y, c.z))
        .collect();
    let input = write(&dir, "in.txt", &format!("X Y Z\n{text}"));
    let output = dir.path().join("out.csv");
    let out = osa(&["convert", "-i", &input, "-o", output.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = data_rows(&fs::read_to_string(&output).unwrap());
    for (c, row) in colors.iter().zip(rows) {
        let got: Vec<f64> = row.iter().map(|v| v.parse().unwrap()).collect();
        assert_eq!(got, xyz_to_lgj(c).unwrap().to_array());
    }
}

#[test]
fn empty_input_gives_empty_output() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "");
    let out = osa(&["convert", "-i", &input]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
}

#[test]
fn degenerate_row_is_marked() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "X,Y,Z\n12,67,20\n0,0,0\n");
    let out = osa(&["convert", "-i", &input]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("L,g,j,status\n"));
    let rows = data_rows(&text);
    assert_eq!(rows[0][3], "ok");
    assert_eq!(rows[1], ["NaN", "NaN", "NaN", "degenerate_input"]);
}

#[test]
fn inverse_conversion_jsonl() {
    let dir = TempDir::new().unwrap();
    let lgj = xyz_to_lgj(&XyzColor::new(12.0, 67.0, 20.0)).unwrap();
    let input = write(
        &dir,
        "in.jsonl",
        &format!("{{\"L\": {}, \"g\": {}, \"j\": {}}}\n", lgj.l, lgj.g, lgj.j),
    );
    let out = osa(&[
        "convert",
        "--direction",
        "lgj-to-xyz",
        "--format",
        "jsonl",
        "-i",
        &input,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let (want, _) = lgj_to_xyz(&lgj, &SolveOptions::default()).unwrap();
    assert_eq!(v["X"].as_f64(), Some(want.x));
    assert_eq!(v["Y"].as_f64(), Some(want.y));
    assert_eq!(v["Z"].as_f64(), Some(want.z));
}

#[test]
fn roundtrip_extreme_point() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "100,100,0\n");
    let out = osa(&["roundtrip", "-i", &input]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["pass"], true);
    assert!(s["max_abs_error"].as_f64().unwrap() < 1e-8);
}

#[test]
fn roundtrip_random_rows_converge_to_preimages() {
    // Every row converges and maps back onto its own Lgj; rows where the
    // forward map is not injective may still come back as another XYZ.
    let dir = TempDir::new().unwrap();
    let text: String = random_xyz(1000, 5)
        .iter()
        .map(|c| format!("{},{},{}\n", c.x, c.y, c.z))
        .collect();
    let input = write(&dir, "in.csv", &text);
    let out = osa(&["roundtrip", "-i", &input]);
    let s = summary(&out);
    assert_eq!(s["rows"], 1000);
    assert_eq!(s["failures"], 0);
    assert!(s["max_image_error"].as_f64().unwrap() < 1e-8);
    let expected = if s["pass"] == true { 0 } else { 1 };
    assert_eq!(out.status.code(), Some(expected));
}

#[test]
fn roundtrip_reverse_reports_failing_index() {
    let dir = TempDir::new().unwrap();
    let lgj = xyz_to_lgj(&XyzColor::new(12.0, 67.0, 20.0)).unwrap();
    let text = format!("{},{},{}\n0,1000,1000\n", lgj.l, lgj.g, lgj.j);
    let input = write(&dir, "in.csv", &text);
    let out = osa(&["roundtrip", "--direction", "lgj-to-xyz", "-i", &input]);
    assert_eq!(out.status.code(), Some(1));
    let s = summary(&out);
    assert_eq!(s["failed_indices"], serde_json::json!([1]));
}

#[test]
fn parse_errors_are_fatal_with_line_numbers() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "X,Y,Z\n1,2,3\n4,5\n");
    let out = osa(&["convert", "-i", &input]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn missing_input_and_bad_options_are_fatal() {
    assert_eq!(
        osa(&["convert", "-i", "/nonexistent/in.csv"]).status.code(),
        Some(2)
    );
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "1,2,3\n");
    assert_eq!(
        osa(&["convert", "-i", &input, "--tol", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        osa(&["convert", "-i", &input, "--max-iter", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(osa(&["bench", "--sizes", "0"]).status.code(), Some(2));
}

#[test]
fn bench_report_fields() {
    let dir = TempDir::new().unwrap();
    let output = dir.path().join("bench.jsonl");
    let out = osa(&[
        "bench",
        "--sizes",
        "1,256",
        "--repeats",
        "1",
        "--seed",
        "3",
        "-o",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(Path::new(&output)).unwrap();
    let lines: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    for (line, size) in lines.iter().zip([1, 256]) {
        assert_eq!(line["size"], size);
        for key in [
            "kind",
            "seconds",
            "ratio_to_cbrt",
            "cubic_cardano_seconds",
            "cubic_newton_seconds",
        ] {
            assert!(!line[key].is_null(), "{key}");
        }
    }
}

#[test]
fn figure_curves() {
    let out = osa(&["figure", "-n", "3", "cubic", "--min", "4", "--max", "5.9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = data_rows(&text);
    assert!(text.starts_with("t,f\n"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "4");

    let out = osa(&[
        "figure", "phi", "--xyz", "12,67,20", "--format", "jsonl", "-n", "7",
    ]);
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 7);
    assert!((lines[0]["phi"].as_f64().unwrap() + 107.413).abs() < 1e-3);
    assert!((lines[6]["phi"].as_f64().unwrap() - 106.706).abs() < 1e-3);

    assert_eq!(
        osa(&["figure", "phi", "--xyz", "1,2"]).status.code(),
        Some(2)
    );
}
