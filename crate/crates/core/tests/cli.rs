use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hwm-opt");

const TABLE1_FLAGS: [&str; 20] = [
    "--spot", "100", "--hwm", "100", "--strike", "100", "--maturity", "1", "--rate", "2%", "--alpha", "10%", "--mgmt",
    "2%", "--incentive", "20%", "--mu", "15%", "--vol", "20%",
];

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("HWM_OPT_SEED").env_remove("HWM_OPT_SELFTEST_TOL").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_line(o: &Output) -> serde_json::Value {
    serde_json::from_str(stdout(o).lines().next().unwrap()).unwrap()
}

#[test]
fn price_reference_cell() {
    let mut args = vec!["price"];
    args.extend(TABLE1_FLAGS);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    let v = json_line(&out);
    assert!((v["price"].as_f64().unwrap() - 12.5922).abs() < 1e-2);
    assert_eq!(v["method"], "laplace-inversion");
    assert!(v["error_estimate"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["params_echo"]["vol"].as_f64(), Some(0.2));
}

#[test]
fn zero_strike_prices_the_forward() {
    let mut args = vec!["price"];
    args.extend(TABLE1_FLAGS);
    args[6] = "0";
    let call = json_line(&run(&args));
    args.extend(["--option", "forward"]);
    let fwd = json_line(&run(&args));
    assert_eq!(call["price"], fwd["price"]);
    assert!(fwd["price"].as_f64().unwrap() > 100.0);
}

#[test]
fn put_is_priced_by_parity() {
    let mut args = vec!["price", "--option", "put"];
    args.extend(TABLE1_FLAGS);
    let v = json_line(&run(&args));
    assert_eq!(v["method"], "parity");
    assert!(v["price"].as_f64().unwrap() > 0.0);
}

#[test]
fn missing_flag_is_a_usage_error() {
    let args: Vec<&str> = std::iter::once("price").chain(TABLE1_FLAGS[..18].iter().copied()).collect();
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--vol"));
}

#[test]
fn unknown_flag_and_invalid_values_exit_two() {
    assert_eq!(run(&["price", "--volatility", "0.2"]).status.code(), Some(2));
    let mut args = vec!["price"];
    args.extend(TABLE1_FLAGS);
    args[20] = "0%";
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("volatility"));
    assert_eq!(run(&["tables", "--table", "6"]).status.code(), Some(2));
}

#[test]
fn config_file_mirrors_flags() {
    let dir = std::env::temp_dir().join(format!("hwm-opt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("grid.json");
    std::fs::write(
        &path,
        r#"[
            {"spot":100,"hwm":"85","strike":100,"maturity":1,"rate":"2%","alpha":"10%","mgmt":"2%","incentive":"20%","mu":"15%","vol":"20%"},
            {"spot":100,"hwm":115,"strike":110,"maturity":0.5,"rate":0.02,"alpha":0.1,"mgmt":0.02,"incentive":0.2,"mu":0.15,"vol":0.2}
        ]"#,
    )
    .unwrap();
    let out = run(&["price", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let prices: Vec<f64> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["price"].as_f64().unwrap())
        .collect();
    assert_eq!(prices.len(), 2);
    assert!((prices[0] - 12.1470).abs() < 1e-2);
    assert!((prices[1] - 3.7084).abs() < 1e-2);

    // a flag overrides every entry
    let out = run(&["price", "--config", path.to_str().unwrap(), "--vol", "40%"]);
    let first: serde_json::Value = serde_json::from_str(stdout(&out).lines().next().unwrap()).unwrap();
    assert_eq!(first["params_echo"]["vol"].as_f64(), Some(0.4));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn table1_csv_is_byte_stable() {
    let out = run(&["tables", "--table", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let golden = include_str!("data/table1.csv");
    assert_eq!(stdout(&out), golden);
    assert_eq!(stdout(&out).lines().count(), 19);
}

#[test]
fn table5_csv_matches_merton_column() {
    let text = stdout(&run(&["tables", "--table", "5", "--format", "csv"]));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let price = headers.iter().position(|h| h == "price").unwrap();
    let merton = headers.iter().position(|h| h == "merton").unwrap();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert_eq!(rec[price], rec[merton]);
        n += 1;
    }
    assert_eq!(n, 6);
}

#[test]
fn table4_json_carries_the_header_note() {
    let out = run(&["tables", "--table", "4", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["header_discrepancy"].as_str().unwrap().contains("title"));
    assert_eq!(v["rows"].as_array().unwrap().len(), 30);
}

#[test]
fn selftest_passes_and_env_override_fails_it() {
    let out = run(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().all(|l| l.starts_with("PASS")));

    let out = Command::new(BIN).arg("selftest").env("HWM_OPT_SELFTEST_TOL", "1e-30").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn selftest_json_reports_known_pair_error() {
    let v = json_line(&run(&["selftest", "--format", "json"]));
    let gates = v["gates"].as_array().unwrap();
    assert!(gates[0]["value"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn mc_seed_comes_from_environment() {
    let mut args = vec!["mc", "--paths", "2000", "--steps-per-year", "200"];
    args.extend(TABLE1_FLAGS);
    let a = Command::new(BIN).args(&args).env("HWM_OPT_SEED", "11").output().unwrap();
    let b = Command::new(BIN).args(&args).env("HWM_OPT_SEED", "11").output().unwrap();
    let c = Command::new(BIN).args(&args).env("HWM_OPT_SEED", "12").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let v = json_line(&a);
    assert_eq!(v["seed"], 11);
    assert_eq!(v["method"], "monte-carlo");
    assert!(v["std_error"].as_f64().unwrap() > 0.0);
    let bad = Command::new(BIN).args(&args).env("HWM_OPT_SEED", "abc").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
