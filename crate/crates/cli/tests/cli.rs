use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hyperfit_core::data::{durbin_watson_csv, stars_csv};
use hyperfit_core::evaluation::{synthetic_generate, Corruption};
use serde_json::Value;
use tempfile::TempDir;

fn hyperfit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperfit")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn fit_stars_sum_l1() {
    let dir = TempDir::new().unwrap();
    let stars = write(&dir, "stars.csv", stars_csv());
    let out = hyperfit(&["fit", s(&stars), "--criterion", "SUM", "--residual", "l1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["schema"], "1");
    assert_eq!(r["tag"], "exact-lp");
    assert!((r["gcod"].as_f64().unwrap() - 0.6505853).abs() <= 1e-6);
    let bv: Vec<f64> = r["beta_vertical"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((bv[0] + 25.81).abs() <= 1e-6 && (bv[1] - 7.0).abs() <= 1e-6 && bv[2] == -1.0, "{bv:?}");
    assert_eq!(r["n"], 47);
}

#[test]
fn collinear_points_score_one() {
    let dir = TempDir::new().unwrap();
    let line = write(&dir, "line.csv", "x,y\n0,1\n1,3\n2,5\n");
    for (c, res) in [("SUM", "vertical"), ("MAX", "linf"), ("SOS", "l1"), ("MED", "ltau:2"), ("kC", "l1")] {
        let out = hyperfit(&["fit", s(&line), "--criterion", c, "--residual", res]);
        assert_eq!(out.status.code(), Some(0), "{c}/{res}: {}", String::from_utf8_lossy(&out.stderr));
        let g = json(&out)["gcod"].as_f64().unwrap();
        assert!((g - 1.0).abs() <= 1e-9, "{c}/{res}: {g}");
    }
}

#[test]
fn malformed_row_is_an_input_error_on_line_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.csv", "x,y\na,b\n");
    let out = hyperfit(&["fit", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "input");
    assert!(err["error"]["message"].as_str().unwrap().contains("line 2"), "{err}");

    let missing = hyperfit(&["fit", s(&dir.path().join("nope.csv"))]);
    assert_eq!(missing.status.code(), Some(2));
    let short = write(&dir, "short.csv", "x,y\n1,2\n");
    assert_eq!(hyperfit(&["fit", s(&short)]).status.code(), Some(2), "one point");
    let ok = write(&dir, "ok.csv", "x,y\n1,2\n2,3\n4,4\n");
    assert_eq!(hyperfit(&["fit", s(&ok), "--criterion", "LQS"]).status.code(), Some(2), "LQS needs r");
    assert_eq!(hyperfit(&["fit", s(&ok), "--residual", "l0.5"]).status.code(), Some(2));
}

#[test]
fn uncertified_fits_exit_with_1() {
    let dir = TempDir::new().unwrap();
    let (csv, _) = gen_csv(30, 7);
    let data = write(&dir, "syn.csv", &csv);
    let out = hyperfit(&["fit", s(&data), "--criterion", "MED", "--residual", "ltau:2"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["tag"], "local-search");
    assert!(r["phi"].as_f64().unwrap() > 0.0);
}

fn gen_csv(n: usize, seed: u64) -> (String, Value) {
    let n = n.to_string();
    let seed = seed.to_string();
    let out = hyperfit(&["gen", "--n", &n, "--d", "2", "--corruption", "y", "--seed", &seed]);
    assert_eq!(out.status.code(), Some(0));
    let summary: Value = serde_json::from_slice(&out.stderr).unwrap();
    (String::from_utf8(out.stdout).unwrap(), summary)
}

#[test]
fn gen_writes_the_protocol_sample() {
    let (csv, summary) = gen_csv(100, 1);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x1,y");
    assert_eq!(lines.len(), 101);
    assert_eq!(gen_csv(100, 1).0, csv, "deterministic");
    let corrupted: Vec<usize> =
        summary["corrupted"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect();
    assert_eq!(corrupted.len(), 15);
    // bit-exact round trip against the library's sample
    let want = synthetic_generate(100, 2, Corruption::Y, 1).unwrap();
    assert_eq!(want.corrupted, corrupted);
    for (line, row) in lines[1..].iter().zip(&want.rows) {
        let parsed: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(&parsed, row);
    }
    // and it fits
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("gen.csv");
    let out = hyperfit(&["gen", "--n", "100", "--seed", "1", "--output", s(&path)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&path).unwrap(), csv);
    assert_eq!(hyperfit(&["fit", s(&path)]).status.code(), Some(0));
    // X-corruption with d = 3
    let out = hyperfit(&["gen", "--n", "20", "--d", "3", "--corruption", "x"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("x1,x2,y\n"));
}

#[test]
fn batch_grid_shape_order_and_determinism() {
    let dir = TempDir::new().unwrap();
    let (csv, _) = gen_csv(12, 3);
    let data = write(&dir, "syn.csv", &csv);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = hyperfit(&["batch", s(&data), "--output", s(p)]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let doc: Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 42);
    let criteria = ["SUM", "MAX", "MED", "kC", "AkC", "SOS", "1.5SUM"];
    let residuals = ["vertical", "l1", "linf", "ltau:3/2", "ltau:2", "ltau:3"];
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row["criterion"], criteria[k / 6]);
        assert_eq!(row["residual"], residuals[k % 6]);
        assert_eq!(row["status"], "ok", "{row}");
    }
    // the CSV form carries the same table
    let out = hyperfit(&["batch", s(&data), "--format", "csv", "--criteria", "SUM,MAX", "--residuals", "l1,linf"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(1).unwrap().starts_with("SUM,,l1,ok,exact-lp,"));
}

#[test]
fn batch_failures_stay_inline() {
    let dir = TempDir::new().unwrap();
    // points on a vertical line; an unreadable block file fails only its own cells
    let data = write(&dir, "flat.csv", "x,y\n1,0\n1,1\n1,2\n1,5\n");
    let out = hyperfit(&["batch", s(&data), "--criteria", "SUM,LQS", "--residuals", "vertical,l1"]);
    assert_eq!(out.status.code(), Some(2), "LQS without a parameter is rejected up front");
    let out = hyperfit(&["batch", s(&data), "--residuals", "vertical,l1,block:/no/such/file"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 21);
    let failed: Vec<&Value> = rows.iter().filter(|r| r["status"] == "error").collect();
    assert_eq!(failed.len(), 7);
    assert!(failed.iter().all(|r| r["residual"] == "block:/no/such/file" && r["error"].as_str().is_some()));
}

#[test]
fn max_lines_coincide_across_polyhedral_norms() {
    let dir = TempDir::new().unwrap();
    let stars = write(&dir, "stars.csv", stars_csv());
    let out = hyperfit(&["batch", s(&stars), "--criteria", "MAX", "--residuals", "l1,linf"]);
    let doc = json(&out);
    let rows = doc["rows"].as_array().unwrap();
    let line = |r: &Value| (r["beta_vertical"][0].as_f64().unwrap(), r["beta_vertical"][1].as_f64().unwrap());
    let (a, b) = (line(&rows[0]), line(&rows[1]));
    assert!((a.0 - b.0).abs() <= 1e-4 && (a.1 - b.1).abs() <= 1e-4, "{a:?} vs {b:?}");
    assert!((a.1 + 3.230769).abs() <= 1e-4 && (a.0 - 18.77577).abs() <= 1e-4);
}

#[test]
fn cross_validation_summary() {
    let dir = TempDir::new().unwrap();
    let dw = write(&dir, "dw.csv", durbin_watson_csv());
    let run = || hyperfit(&["cv", s(&dw), "--criterion", "SUM", "--residual", "l1", "--cv", "7", "--seed", "5"]);
    let out = run();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(out.stdout, run().stdout, "seeded");
    let row = &json(&out)["rows"][0];
    let mut sizes: Vec<u64> = row["fold_sizes"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    sizes.sort_unstable();
    assert_eq!(sizes, [9, 10, 10, 10, 10, 10, 10]);
    let (min, med, max, mean) = (
        row["min"].as_f64().unwrap(),
        row["median"].as_f64().unwrap(),
        row["max"].as_f64().unwrap(),
        row["mean"].as_f64().unwrap(),
    );
    assert!(min <= med && med <= max && min <= mean && mean <= max);
    assert_eq!(row["eps90"].as_array().unwrap().len(), 7);
    // `fit --cv` is the same computation
    let via_fit = hyperfit(&["fit", s(&dw), "--criterion", "SUM", "--residual", "l1", "--cv", "7", "--seed", "5"]);
    assert_eq!(via_fit.stdout, out.stdout);
    let csv = hyperfit(&["cv", s(&dw), "--cv", "7", "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "criterion,param,residual,k,min,max,median,mean");
    assert_eq!(hyperfit(&["cv", s(&dw), "--cv", "1"]).status.code(), Some(2));
}

#[test]
fn verify_recomputes_saved_records() {
    let dir = TempDir::new().unwrap();
    let stars = write(&dir, "stars.csv", stars_csv());
    let rec = dir.path().join("rec.json");
    for (c, res) in [("kC", "linf"), ("SOS", "vertical"), ("SUM", "ltau:2"), ("LMS", "vertical")] {
        let out = hyperfit(&["fit", s(&stars), "--criterion", c, "--residual", res, "--N", "16", "--output", s(&rec)]);
        assert!(matches!(out.status.code(), Some(0 | 1)));
        let v = hyperfit(&["verify", s(&stars), "--record", s(&rec)]);
        assert_eq!(v.status.code(), Some(0), "{c}/{res}: {}", String::from_utf8_lossy(&v.stdout));
        assert_eq!(json(&v)["checked"], 1);
    }
    // a tampered value is caught
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&rec).unwrap()).unwrap();
    doc["phi"] = Value::from(doc["phi"].as_f64().unwrap() * (1.0 + 1e-5));
    fs::write(&rec, doc.to_string()).unwrap();
    let v = hyperfit(&["verify", s(&stars), "--record", s(&rec)]);
    assert_eq!(v.status.code(), Some(1));
    assert_eq!(json(&v)["failures"].as_array().unwrap().len(), 1);

    // batch documents are checked row by row
    let batch = dir.path().join("batch.json");
    hyperfit(&[
        "batch",
        s(&stars),
        "--criteria",
        "SUM,MAX,kC",
        "--residuals",
        "vertical,l1,linf",
        "--output",
        s(&batch),
    ]);
    let v = hyperfit(&["verify", s(&stars), "--record", s(&batch)]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(json(&v)["checked"], 9);
}

#[test]
fn block_norm_files_are_symmetrized() {
    let dir = TempDir::new().unwrap();
    let stars = write(&dir, "stars.csv", stars_csv());
    let half = write(&dir, "half.txt", "# three of the six hexagon vertices\n2 0\n2 2\n-1 2\n");
    let full = write(&dir, "full.txt", "2 0\n2 2\n-1 2\n-2 0\n-2 -2\n1 -2\n");
    let a = hyperfit(&["fit", s(&stars), "--residual", &format!("block:{}", s(&half))]);
    let b = hyperfit(&["fit", s(&stars), "--residual", &format!("block:{}", s(&full))]);
    assert_eq!(a.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&a.stderr).contains("warning"));
    assert!(!String::from_utf8_lossy(&b.stderr).contains("warning"));
    assert_eq!(json(&a)["phi"], json(&b)["phi"]);
    // hexagon SUM line from the block-norm example
    let bv = &json(&a)["beta_vertical"];
    assert!((bv[1].as_f64().unwrap() - 7.0).abs() <= 1e-6 && (bv[0].as_f64().unwrap() + 25.81).abs() <= 1e-6);
    let bad = write(&dir, "bad.txt", "1 0\n0 x\n");
    assert_eq!(hyperfit(&["fit", s(&stars), "--residual", &format!("block:{}", s(&bad))]).status.code(), Some(2));
}

#[test]
fn ltau_by_flag_and_lp_export() {
    let dir = TempDir::new().unwrap();
    let stars = write(&dir, "stars.csv", stars_csv());
    let a = json(&hyperfit(&["fit", s(&stars), "--residual", "ltau", "--tau", "2", "--N", "16"]));
    let b = json(&hyperfit(&["fit", s(&stars), "--residual", "l2", "--N", "16"]));
    assert_eq!(a["phi"], b["phi"]);
    let (lo, hi) = (a["bounds"][0].as_f64().unwrap(), a["bounds"][1].as_f64().unwrap());
    assert!(lo <= a["phi"].as_f64().unwrap() && a["phi"].as_f64().unwrap() <= hi);
    assert!(a["sd"].as_f64().unwrap() >= 0.0);

    let lp = dir.path().join("model.lp");
    let out =
        hyperfit(&["fit", s(&stars), "--criterion", "kC", "--param", "35", "--residual", "l1", "--emit-lp", s(&lp)]);
    assert_eq!(out.status.code(), Some(0));
    let mut files: Vec<PathBuf> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "lp"))
        .collect();
    files.sort();
    assert!(!files.is_empty());
    for f in &files {
        let mip = hyperfit_lp::parse_lp(&fs::read_to_string(f).unwrap()).unwrap();
        assert!(mip.lp().num_vars() > 47);
    }
    // p = 2 has no LP model
    let out = hyperfit(&["fit", s(&stars), "--criterion", "SOS", "--emit-lp", s(&lp)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dependent_column_and_csv_output() {
    let dir = TempDir::new().unwrap();
    let swapped: String = stars_csv()
        .lines()
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            format!("{},{}\n", b.trim(), a.trim())
        })
        .collect();
    let path = write(&dir, "swapped.csv", &swapped);
    let stars = write(&dir, "stars.csv", stars_csv());
    let a = hyperfit(&["fit", s(&path), "--dependent-col", "1", "--format", "csv"]);
    let b = hyperfit(&["fit", s(&stars), "--format", "csv"]);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(b.stdout).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[..6], ["criterion", "param", "residual", "status", "tag", "phi"]);
    assert!(header.contains(&"eps90") && header.contains(&"coverage@10"));
    let timed = json(&hyperfit(&["fit", s(&stars), "--timing"]));
    assert!(timed["seconds"].as_f64().unwrap() >= 0.0);
}
