use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_actorsnote"));
    for var in ["GATEWAY_PROVIDER", "STORE_PATH", "BIND_ADDR", "ADMIN_TOKEN"] {
        c.env_remove(var);
    }
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn lexicons() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/lexicons")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let out = dir.join(format!("sim{n}_{seed}"));
    ok(&["simulate", "--participants", &n.to_string(), "--seed", &seed.to_string(), "--out", s(&out)]);
    out
}

#[test]
fn stats_wilson_and_fdr() {
    assert_eq!(ok(&["stats", "wilson", "26", "159"]), "0.114 0.229\n");
    assert_eq!(ok(&["stats", "fdr", "0.01,0.02,0.03"]), "0.03 0.03 0.03\n");
    assert_eq!(ok(&["stats", "fdr", "0.04, 0.001"]), "0.04 0.002\n");
    assert_eq!(run(&["stats", "fdr", "0.1,abc"]).status.code(), Some(2));
    assert_eq!(run(&["stats", "fdr", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["stats", "wilson", "5", "0"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["stats", "bogus"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--participants", "1"]).status.code(), Some(2));
}

#[test]
fn stats_welch_reads_columns() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "1\n2\n3\n4\n").unwrap();
    std::fs::write(&b, "1\n2\n3\n4\n").unwrap();
    assert_eq!(ok(&["stats", "welch", s(&a), s(&b)]), "t=0 df=6 p=1 d_s=0\n");

    std::fs::write(&a, "x,score\n0,5.1\n0,4.8\n0,6.0\n0,5.5\n").unwrap();
    std::fs::write(&b, "x,score\n0,4.1\n0,4.4\n0,3.9\n0,4.6\n0,4.0\n").unwrap();
    let welch = ok(&["stats", "welch", s(&a), s(&b), "--column", "score"]);
    let pooled = ok(&["stats", "welch", s(&a), s(&b), "--column", "score", "--pooled"]);
    assert!(welch.starts_with("t=") && welch != pooled, "{welch} / {pooled}");
    assert!(pooled.contains("df=7 "), "{pooled}");

    std::fs::write(&b, "1\n2\nthree\n").unwrap();
    let out = run(&["stats", "welch", s(&a), s(&b)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3"));
    let out = run(&["stats", "welch", s(&a), s(&dir.path().join("missing.csv"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn stats_meta_and_ancova() {
    let dir = tempfile::tempdir().unwrap();
    let meta = dir.path().join("meta.csv");
    std::fs::write(&meta, "estimate,se\n0.2,0.3\n0.9,0.3\n").unwrap();
    let out = ok(&["stats", "meta", s(&meta)]);
    assert!(out.starts_with("beta=0.55 se=0.212132 "), "{out}");

    let anc = dir.path().join("ancova.csv");
    let mut csv = String::from("outcome,baseline,group\n");
    for i in 0..12 {
        let g = i % 2;
        let base = 3.0 + (i as f64) * 0.25;
        let y = 1.0 + 0.8 * base + 0.5 * g as f64 + [0.1, -0.2, 0.05, 0.15, -0.1, 0.0][i % 6];
        csv.push_str(&format!("{y},{base},{g}\n"));
    }
    std::fs::write(&anc, csv).unwrap();
    let out = ok(&["stats", "ancova", s(&anc)]);
    assert!(out.contains("df=9 ") && out.contains("partial_eta_sq="), "{out}");

    std::fs::write(&anc, "outcome,baseline\n1,2\n").unwrap();
    let out = run(&["stats", "ancova", s(&anc)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing column 'group'"));
}

#[test]
fn simulate_refuses_existing_store() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), 2, 1);
    let again = run(&["simulate", "--participants", "2", "--out", s(&out)]);
    assert_eq!(again.status.code(), Some(3));
}

#[test]
fn simulate_then_analyze_is_deterministic() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), 8, 7);
    let (lex, survey) = (lexicons(), sim.join("survey.csv"));
    let mut reports = Vec::new();
    for (name, threads, logs) in [("one", "1", "export.csv"), ("two", "1", "export.jsonl"), ("four", "4", "export.csv")] {
        let out = dir.path().join(name);
        let logs = sim.join(logs);
        let args = [
            "analyze",
            "--logs",
            s(&logs),
            "--lexicons",
            s(&lex),
            "--survey",
            s(&survey),
            "--out",
            s(&out),
            "--resamples",
            "500",
            "--threads",
            threads,
        ];
        let printed = ok(&args);
        let files: Vec<Vec<u8>> = ["metrics.csv", "comparison.csv", "report.txt"]
            .iter()
            .map(|f| std::fs::read(out.join(f)).unwrap())
            .collect();
        assert_eq!(printed.as_bytes(), files[2].as_slice());
        reports.push(files);
    }
    assert_eq!(reports[0], reports[1], "csv and jsonl exports analyze identically");
    assert_eq!(reports[0], reports[2], "thread count does not change output");
    let metrics = String::from_utf8(reports[0][0].clone()).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 8 * 14);
    assert!(started.elapsed() < Duration::from_secs(120));
}

#[test]
fn analyze_reports_insufficient_data() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), 2, 3);
    let jsonl = std::fs::read_to_string(sim.join("export.jsonl")).unwrap();
    let one = format!("{}\n", jsonl.lines().next().unwrap());
    let logs = dir.path().join("one.jsonl");
    std::fs::write(&logs, one).unwrap();
    let out = ok(&["analyze", "--logs", s(&logs), "--lexicons", s(&lexicons()), "--out", s(&dir.path().join("r"))]);
    assert!(out.contains("InsufficientData"), "{out}");

    let out = run(&["analyze", "--logs", s(&logs), "--lexicons", s(dir.path()), "--out", s(&dir.path().join("r2"))]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["analyze", "--logs", s(&logs), "--lexicons", s(&lexicons()), "--out", s(dir.path()), "--threads", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn survey_anova_has_expected_degrees_of_freedom() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), 29, 2);
    let survey = sim.join("survey.csv");
    let out = ok(&["stats", "anova", s(&survey)]);
    assert!(out.contains("F(1,27)=") && out.contains("F(2,54)="), "{out}");
    let out = ok(&["stats", "contrasts", s(&survey)]);
    assert!(out.starts_with("# "), "{out}");
    ok(&["stats", "carryover", s(&survey)]);
    assert_eq!(run(&["stats", "anova", s(&survey), "--measure", "nope"]).status.code(), Some(3));
}

#[test]
fn serve_rejects_directory_store() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["serve", "--bind", "127.0.0.1:0"]).env("STORE_PATH", dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin().args(["serve"]).env("BIND_ADDR", "nowhere").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

struct Killed(std::process::Child);

impl Drop for Killed {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn serve_announces_mock_provider_and_answers_healthz() {
    let dir = tempfile::tempdir().unwrap();
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let mut child = Killed(
        bin()
            .args(["serve", "--bind", &addr, "--store", s(&dir.path().join("store.jsonl"))])
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    let mut lines = BufReader::new(child.0.stdout.take().unwrap()).lines();
    assert!(lines.next().unwrap().unwrap().contains(&format!("listening on http://{addr}")));
    assert!(lines.next().unwrap().unwrap().starts_with("MOCK PROVIDER"));

    let deadline = Instant::now() + Duration::from_secs(10);
    let mut stream = loop {
        match TcpStream::connect(&addr) {
            Ok(s) => break s,
            Err(e) if Instant::now() > deadline => panic!("server never came up: {e}"),
            Err(_) => std::thread::sleep(Duration::from_millis(50)),
        }
    };
    stream
        .write_all(format!("GET /healthz HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").as_bytes())
        .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("\"provider\":\"mock\""), "{response}");
}
