use super::*;

fn args(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn run_str(s: &str) -> (Value, i32) {
    let argv = args(s);
    let cli = Cli::try_parse_from(&argv).unwrap();
    let (text, code) = run(&cli, argv);
    (serde_json::from_str(&text).unwrap_or(Value::String(text)), code)
}

#[test]
fn class_names() {
    assert_eq!(parse_class("PPT", &[2, 2], 4, 0).unwrap().name(), "ppt");
    assert_eq!(parse_class("design4", &[2], 4, 0).unwrap().name(), "design");
    assert!(parse_class("lpv", &[3, 3], 4, 0).is_err());
    assert!(matches!(parse_class("nonsense", &[2], 4, 0), Err(QsvError::Domain(_))));
    assert!(parse_class("stabilizer", &[2, 2], 4, 0).is_err());
}

#[test]
fn presets() {
    assert_eq!(parse_subspace("bell-zero").unwrap().ambient_dim(), 8);
    assert_eq!(parse_subspace("sym:2,3").unwrap().dim(), 6);
    assert_eq!(parse_subspace("antisym:3").unwrap().dim(), 3);
    assert_eq!(parse_subspace("dicke:3:0,2").unwrap().dim(), 2);
    assert_eq!(parse_subspace("random:2x3:2:5").unwrap().dims(), &[2, 3]);
    assert!(matches!(parse_subspace("/no/such/file.json"), Err(QsvError::Io(_))));
    let w = parse_state("werner-complement:2").unwrap();
    assert!((w.mat().trace().re - 1.0).abs() < 1e-12 && w.rank(1e-10) == 3);
    assert_eq!(parse_strategy("dicke:3:1").unwrap().target.dim(), 1);
    assert!((parse_strategy("ppt-universal:bell").unwrap().gap - 2.0 / 3.0).abs() < 1e-12);
    assert!(parse_strategy("ppt-universal:sym:2,2").is_err());
}

#[test]
fn norm_command() {
    let (v, code) = run_str("qsvlab norm --class full --rho bell --sigma singlet");
    assert_eq!(code, 0);
    assert!((v["outputs"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(v["outputs"]["estimate"], "exact");
    let (v, code) = run_str("qsvlab norm --class ppt --rho antisym:4 --sigma sym:2,4");
    assert_eq!(code, 0);
    assert!(v["outputs"]["value"].as_f64().unwrap() <= 1.0 + 1e-6);
}

#[test]
fn design_norm_respects_the_two_norm_floor() {
    let (v, code) = run_str("qsvlab norm --class design4 --rho random:2:1:3 --sigma random:2:1:4");
    assert_eq!(code, 0);
    let a = parse_state("random:2:1:3").unwrap();
    let b = parse_state("random:2:1:4").unwrap();
    let d = a.mat() - b.mat();
    let value = v["outputs"]["value"].as_f64().unwrap();
    assert!(value >= qmath::frob_norm(&d) / 3.0 - 1e-6);
    assert!(value <= qmath::trace_norm_herm(&d) + 1e-9);
}

#[test]
fn quantity_command() {
    let (v, code) = run_str("qsvlab quantity gamma-hat --class ppt --subspace bell-zero");
    assert_eq!(code, 0);
    assert!((v["outputs"][0]["value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-4);
    let argv = args("qsvlab quantity gamma-eps --class full --subspace bell --eps 0.2,0.6,1 --out csv");
    let (text, code) = run(&Cli::try_parse_from(&argv).unwrap(), argv);
    assert_eq!(code, 0);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.split(',').nth(4) == Some("1")));
    let (_, code) = run_str("qsvlab quantity gamma-eps --class ppt --state bell");
    assert_eq!(code, 2);
    let (_, code) = run_str("qsvlab quantity gamma-eps --class ppt --subspace bell --eps 1.5");
    assert_eq!(code, 2);
}

#[test]
fn quantity_mu_one_werner_complement() {
    let (v, code) = run_str("qsvlab quantity mu-one --class ppt --state werner-complement:2");
    assert_eq!(code, 0);
    let out = &v["outputs"][0];
    assert!(out["value"].as_f64().unwrap() >= 1.0 / (2.0 * 153f64.sqrt()) - 1e-6);
    assert_eq!(out["estimate"], "exact");
}

#[test]
fn reproduce_targets() {
    for t in ["ppt-two-thirds", "table1-row1", "hoeffding"] {
        let (v, code) = run_str(&format!("qsvlab reproduce {t}"));
        assert_eq!(code, 0);
        assert_eq!(v["outputs"]["pass"], true, "{t}: {v}");
    }
    let rows = reproduce(Target::Hoeffding, &SolverConfig::default()).unwrap();
    assert_eq!(rows[0].computed, 56.0);
    assert_eq!(rows[1].computed, 2073.0);
}

#[test]
fn strategy_round_trip_through_files() {
    let dir = std::env::temp_dir().join(format!("qsvlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("s.json");
    let (v, code) = run_str("qsvlab strategy sym:2,2");
    assert_eq!(code, 0);
    std::fs::write(&path, serde_json::to_string(&v["outputs"]).unwrap()).unwrap();
    let p = path.to_str().unwrap();
    let (c, code) = run_str(&format!("qsvlab certify --strategy {p}"));
    assert_eq!(code, 0);
    assert!((c["outputs"]["gap"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    let (s, code) = run_str(&format!("qsvlab simulate --strategy {p} --state singlet --eps 0.5 --delta 0.05 --trials 2000 --seed 7"));
    assert_eq!(code, 0);
    assert_eq!(s["outputs"]["report"]["hypothesis"], "far");
    assert_eq!(s["outputs"]["report"]["pass"], true);
    let (_, code) = run_str("qsvlab certify --strategy /no/such.json");
    assert_eq!(code, 4);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn hide_command() {
    let (v, code) = run_str("qsvlab hide --werner 3");
    assert_eq!(code, 0);
    assert!(v["outputs"]["delta"].as_f64().unwrap() <= 2.0 / 3.0 + 1e-6);
    let (_, code) = run_str("qsvlab hide --werner 12");
    assert_eq!(code, 2);
}

#[test]
fn bad_solver_flags_are_domain_errors() {
    let (_, code) = run_str("qsvlab reproduce table1-row1 --tol 0");
    assert_eq!(code, 2);
    let (_, code) = run_str("qsvlab strategy sym:2,2 --out csv");
    assert_eq!(code, 2);
}

#[test]
fn csv_quoting() {
    let rows = vec![Row {
        quantity: "q".into(),
        class: "ppt".into(),
        params: "a,b".into(),
        paper_bound: "<=0.5".into(),
        computed: 0.25,
        tolerance: 1e-6,
        pass: Some(true),
    }];
    let text = rows_to_csv(&rows);
    assert_eq!(text.lines().nth(1).unwrap(), "q,ppt,\"a,b\",<=0.5,0.25,0.000001,PASS");
}
