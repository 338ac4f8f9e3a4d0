use std::process::Command;

use smoothncp::problems::ProblemSpec;
use smoothncp_cli::{generate_starts, run_analyze, run_bench, run_trace, AnalyzeArgs, BenchRun, Check, OutputFormat};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smoothncp"))
}

fn both_kernels() -> Vec<String> {
    vec!["rational".into(), "exp".into()]
}

fn spec(s: &str) -> ProblemSpec {
    s.parse().unwrap()
}

#[test]
fn starts_are_in_the_open_box() {
    let starts = generate_starts(2, 11, 42);
    assert_eq!(starts.len(), 11);
    assert_eq!(starts[0], vec![1.0, 1.0]);
    assert!(starts[1..].iter().flatten().all(|&v| v > 0.0 && v < 20.0));
    assert_eq!(starts, generate_starts(2, 11, 42));
}

#[test]
fn bench_analytic2d_converges_everywhere() {
    let table = run_bench(&BenchRun::new(vec![spec("analytic2d")], both_kernels())).unwrap();
    assert_eq!(table.rows.len(), 2);
    for row in &table.rows {
        assert_eq!(row.converged, 11);
        assert!(row.res.unwrap() <= 1e-8);
    }
    assert!(table.all_converged());
    assert_eq!(table.runs.len(), 22);
}

#[test]
fn bench_exp_uses_fewer_jacobians_on_ks() {
    let table = run_bench(&BenchRun::new(vec![spec("ks")], both_kernels())).unwrap();
    let (rational, exp) = (&table.rows[0], &table.rows[1]);
    assert_eq!((rational.kernel.as_str(), exp.kernel.as_str()), ("rational", "exp"));
    assert!(
        exp.in_iter < rational.in_iter,
        "{} vs {}",
        exp.in_iter,
        rational.in_iter
    );
}

#[test]
fn bench_empty_suite() {
    let table = run_bench(&BenchRun::new(Vec::new(), both_kernels())).unwrap();
    assert!(table.rows.is_empty());
    assert!(table.all_converged());
    let out = bin()
        .args(["bench", "--problem", "", "--format", "csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bench_output_is_deterministic_apart_from_cpu_time() {
    let run = BenchRun::new(vec![spec("analytic2d"), spec("nash5")], both_kernels());
    let strip = |text: String| -> Vec<String> {
        text.lines()
            .map(|l| match l.rsplit_once(',') {
                Some((head, _)) if !l.starts_with('#') => head.to_string(),
                _ => l.to_string(),
            })
            .collect()
    };
    let a = run_bench(&run).unwrap().render(OutputFormat::Csv, true).unwrap();
    let b = run_bench(&run).unwrap().render(OutputFormat::Csv, true).unwrap();
    assert_eq!(strip(a.clone()), strip(b));
    let header = a.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "problem,n,kernel,OutIter,InIter,Res,Feas,converged,cpu_s");
}

#[test]
fn bench_json_and_markdown_render() {
    let table = run_bench(&BenchRun {
        starts_per_problem: 2,
        ..BenchRun::new(vec![spec("nash5")], both_kernels())
    })
    .unwrap();
    let json: serde_json::Value = serde_json::from_str(&table.render(OutputFormat::Json, false).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
    assert_eq!(json["rows"][0]["converged"], 2);
    assert!(json.get("runs").is_none());
    let md = table.render(OutputFormat::Markdown, true).unwrap();
    assert!(md.contains("| problem | n | kernel | OutIter | InIter | Res | Feas | converged | cpu_s |"));
    assert!(md.contains("| nash5 | exp | 1 | converged |"));
}

#[test]
fn bench_rejects_zero_starts() {
    let run = BenchRun {
        starts_per_problem: 0,
        ..BenchRun::new(vec![spec("nash5")], both_kernels())
    };
    assert_eq!(run_bench(&run).unwrap_err().exit_code(), 2);
}

#[test]
fn trace_analytic2d_both_kernels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let reports = run_trace(&spec("analytic2d"), &both_kernels(), None, &Default::default(), &path).unwrap();
    assert!(reports.iter().all(|(_, r)| r.converged()));

    let mut rd = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["kernel", "outer_index", "r", "x_1", "x_2", "F_1", "F_2", "res", "feas"]
    );
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    for kernel in ["rational", "exp"] {
        let series: Vec<&csv::StringRecord> = rows.iter().filter(|r| &r[0] == kernel).collect();
        assert!(!series.is_empty());
        let num = |r: &csv::StringRecord, i: usize| r[i].parse::<f64>().unwrap();
        assert!(series.windows(2).all(|w| num(w[1], 2) < num(w[0], 2)), "{kernel}");
        let last = series.last().unwrap();
        assert!(num(last, 7) <= 1e-8);
        let x = [num(last, 3), num(last, 4)];
        let near = [[0.0, 1.0], [1.0, 1.0]]
            .iter()
            .any(|s| ((x[0] - s[0]).powi(2) + (x[1] - s[1]).powi(2)).sqrt() <= 1e-6);
        assert!(near, "{kernel}: {x:?}");
    }
}

#[test]
fn trace_to_unwritable_path_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("trace.csv");
    assert!(run_trace(&spec("analytic2d"), &both_kernels(), None, &Default::default(), &path).is_err());
    let out = bin()
        .args(["trace", "--problem", "analytic2d", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analyze_examples() {
    let args = AnalyzeArgs::default();
    assert!(run_analyze("exp", Check::Concavity, &args).unwrap().holds());
    let ha = run_analyze(
        "rational",
        Check::Ha,
        &AnalyzeArgs {
            a: 0.75,
            ..args.clone()
        },
    )
    .unwrap();
    assert!(!ha.holds() && ha.witness.is_some());
    assert!(run_analyze(
        "rational",
        Check::Ha,
        &AnalyzeArgs {
            a: 0.25,
            ..args.clone()
        }
    )
    .unwrap()
    .holds());
    assert!(run_analyze("phi:3", Check::SubaddV, &args).unwrap().holds());
    assert!(run_analyze("exp", Check::Limits, &args).unwrap().holds());
    assert!(run_analyze("rational", Check::Speed, &args).unwrap().holds());
}

#[test]
fn analyze_exit_codes() {
    let code = |a: &[&str]| bin().arg("analyze").args(a).output().unwrap().status.code();
    assert_eq!(code(&["--theta", "exp", "--check", "concavity"]), Some(0));
    assert_eq!(code(&["--theta", "rational", "--check", "ha", "--a", "0.75"]), Some(1));
    assert_eq!(code(&["--theta", "phi:3", "--check", "subadd_v"]), Some(0));
    assert_eq!(code(&["--theta", "exp", "--check", "bogus"]), Some(2));
    assert_eq!(code(&["--theta", "nope", "--check", "limits"]), Some(2));
}

#[test]
fn analyze_emits_report_json() {
    let out = bin()
        .args(["analyze", "--theta", "rational", "--check", "ha", "--a", "0.75"])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["property"], "ha");
    assert_eq!(v["outcome"], "violated");
    assert!(v["witness"]["point"].is_array());
}

#[test]
fn solve_subcommand() {
    let out = bin()
        .args(["solve", "--problem", "ks", "--theta", "rational", "--format", "json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "converged");
    let out = bin()
        .args(["solve", "--problem", "monotone", "--n", "20", "--x0", "1,2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["solve", "--problem", "monotone", "--n", "20"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("status converged"));
}
