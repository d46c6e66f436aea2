use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use kgforge::{ExperimentConfig, ModelName, RankMetrics};

fn kgforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgforge"))
        .args(args)
        .output()
        .unwrap()
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_kgforge"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes the synthetic grid KG and a small TransE config.
fn setup(dir: &Path) -> (PathBuf, PathBuf) {
    let data = dir.join("grid.tsv");
    let mut f = std::fs::File::create(&data).unwrap();
    kgforge::ingest::write_tsv(&mut f, &kgforge::synthetic::grid_kg(0)).unwrap();
    let mut c = ExperimentConfig::new(ModelName::TransE);
    c.embedding_dim = 8;
    c.num_epochs = 20;
    c.batch_size = 16;
    c.metadata.reference = Some("internal technical note 7".into());
    c.metadata.dataset_url = Some("https://data.example.org/grid.tsv".into());
    let config = dir.join("config.json");
    std::fs::write(&config, c.to_canonical_json().unwrap()).unwrap();
    (config, data)
}

fn train_bundle(dir: &Path) -> PathBuf {
    let (config, data) = setup(dir);
    let out = dir.join("bundle");
    let o = kgforge(&["train", "--config", s(&config), "--data", s(&data), "--format", "tsv", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    out
}

#[test]
fn train_writes_a_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = train_bundle(tmp.path());
    for f in kgforge::artifacts::REQUIRED_FILES {
        assert!(out.join(f).is_file(), "{f}");
    }
    let loaded = kgforge::load_experiment::<f64>(&out).unwrap();
    assert_eq!(loaded.entities.len(), 40);
}

#[test]
fn train_refuses_non_empty_output_without_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let out = train_bundle(tmp.path());
    let args = |extra: &'static [&'static str]| {
        let mut v: Vec<String> = ["train", "--config"].iter().map(|x| x.to_string()).collect();
        v.push(s(&tmp.path().join("config.json")).into());
        v.extend(["--data".into(), s(&tmp.path().join("grid.tsv")).into(), "--out".into(), s(&out).into()]);
        v.extend(extra.iter().map(|x| x.to_string()));
        v
    };
    let a = args(&[]);
    let o = kgforge(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&o), 2, "{}", text(&o.stderr));
    let a = args(&["--overwrite", "--device", "cpu"]);
    let o = kgforge(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
}

#[test]
fn missing_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.json");
    let o = kgforge(&["train", "--config", s(&missing), "--data", "x.tsv", "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&o), 1);
    assert!(text(&o.stderr).contains("missing.json"), "{}", text(&o.stderr));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn bad_flags_and_help() {
    assert_eq!(code(&kgforge(&["train", "--bogus"])), 1);
    assert_eq!(code(&kgforge(&["frobnicate"])), 1);
    assert_eq!(code(&kgforge(&["train", "--config", "c.json", "--out", "o", "--device", "gpu"])), 1);
    let o = kgforge(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(text(&o.stdout).contains("zoo-validate"));
}

#[test]
fn malformed_data_is_a_runtime_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let (config, _) = setup(tmp.path());
    let bad = tmp.path().join("bad.tsv");
    std::fs::write(&bad, "a\tb\n").unwrap();
    let o = kgforge(&["train", "--config", s(&config), "--data", s(&bad), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&o), 2);
    assert!(text(&o.stderr).contains("line 1"), "{}", text(&o.stderr));
}

#[test]
fn evaluate_reproduces_stored_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let out = train_bundle(tmp.path());
    let test = out.join(kgforge::artifacts::TEST_TRIPLES);
    let m = tmp.path().join("metrics.json");
    let o = kgforge(&["evaluate", "--bundle", s(&out), "--test", s(&test), "--out", s(&m)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let stored = std::fs::read(out.join(kgforge::artifacts::EVALUATION_SUMMARY)).unwrap();
    let again = std::fs::read(&m).unwrap();
    assert_eq!(stored, again);
    let a: RankMetrics = serde_json::from_slice(&stored).unwrap();
    let b: RankMetrics = serde_json::from_slice(&again).unwrap();
    assert_eq!(a, b);

    let o = kgforge(&["evaluate", "--bundle", s(&out), "--test", s(&test)]);
    assert_eq!(o.stdout, stored);
}

#[test]
fn infer_ranks_every_candidate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = train_bundle(tmp.path());
    let ents = tmp.path().join("e.txt");
    std::fs::write(&ents, "g0_e00\ng1_e00\n# comment\ng2_e00\n").unwrap();
    let rels = tmp.path().join("r.txt");
    std::fs::write(&rels, "right\n").unwrap();
    let excl = tmp.path().join("x.tsv");
    std::fs::write(&excl, "g0_e00\tright\tg1_e00\nnot\tin\tbundle\n").unwrap();
    let pred = tmp.path().join("pred.tsv");
    let o = kgforge(&[
        "infer", "--bundle", s(&out), "--entities", s(&ents), "--relations", s(&rels),
        "--exclude", s(&excl), "--no-reflexive", "--out", s(&pred),
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let body = std::fs::read_to_string(&pred).unwrap();
    let rows: Vec<Vec<&str>> = body.lines().map(|l| l.split('\t').collect()).collect();
    // 3 * 3 * 1 - 3 reflexive - 1 excluded
    assert_eq!(rows.len(), 5);
    let scores: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]), "{scores:?}");
    assert!(rows.iter().all(|r| r[0] != r[2]));
    assert!(!rows.iter().any(|r| r[0] == "g0_e00" && r[2] == "g1_e00"));

    std::fs::write(&rels, "sideways\n").unwrap();
    let o = kgforge(&["infer", "--bundle", s(&out), "--entities", s(&ents), "--relations", s(&rels), "--out", s(&pred)]);
    assert_eq!(code(&o), 2);
    assert!(text(&o.stderr).contains("sideways"));
}

#[test]
fn zoo_validate_accepts_a_well_formed_entry() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = train_bundle(tmp.path());
    let root = tmp.path().join("zoo");
    let entry = root.join("biology").join("grid").join("transe");
    std::fs::create_dir_all(entry.parent().unwrap()).unwrap();
    std::fs::rename(&bundle, &entry).unwrap();
    std::fs::write(entry.join("README.md"), "TransE on the synthetic grid graph.\n").unwrap();
    let o = kgforge(&["zoo-validate", s(&entry)]);
    assert_eq!(code(&o), 0, "{}{}", text(&o.stdout), text(&o.stderr));
    assert!(text(&o.stdout).contains("entry is valid"));

    std::fs::remove_file(entry.join("README.md")).unwrap();
    let o = kgforge(&["zoo-validate", s(&entry), "--root", s(&root)]);
    assert_eq!(code(&o), 2);
    assert!(text(&o.stdout).contains("FAIL"));
}

fn wizard_script(data: &Path, dim: &str) -> String {
    // mode, data, format, model, dim, p_norm, lr, loss, margin, epochs, batch, split, seed
    format!("training\n{}\n\ntranse\n{dim}\n\n0.05\n\n\n5\n16\n\n3\n", data.display())
}

#[test]
fn scripted_wizard_reprompts_and_writes_a_valid_config() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, data) = setup(tmp.path());
    let out = tmp.path().join("wizard.json");
    let script = wizard_script(&data, "-5\n50");
    let o = with_stdin(&["wizard", "--out", s(&out)], &script);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let shown = text(&o.stdout);
    assert!(shown.contains("e.g. 50"), "{shown}");
    let cfg = ExperimentConfig::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(cfg.embedding_dim, 50);
    assert_eq!(cfg.learning_rate, 0.05);
    assert_eq!(cfg.num_epochs, 5);
    assert_eq!(cfg.seed, 3);

    // the file runs as is, data path taken from its metadata
    let bundle = tmp.path().join("b");
    let o = kgforge(&["train", "--config", s(&out), "--out", s(&bundle)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
}

#[test]
fn wizard_end_of_input_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, data) = setup(tmp.path());
    let out = tmp.path().join("wizard.json");
    let o = with_stdin(&["wizard", "--out", s(&out)], "");
    assert_eq!(code(&o), 1);
    assert!(!out.exists());
    let o = with_stdin(&["wizard", "--out", s(&out)], &format!("training\n{}\ntsv\ntranse\n", data.display()));
    assert_eq!(code(&o), 1);
    assert!(!out.exists());
}

#[test]
fn wizard_hpo_space_drives_hpo() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, data) = setup(tmp.path());
    let space = tmp.path().join("space.json");
    // mode, data, format, models, dims, lrs, margins, epochs, batch sizes, trials, metric, split, seed
    let script = format!("hpo\n{}\n\ntranse, distmult\n4, 8\n0.01,0.05\n1\n3\n32\n2\nmr\n\n1\n", data.display());
    let o = with_stdin(&["wizard", "--out", s(&space)], &script);
    assert_eq!(code(&o), 0, "{}{}", text(&o.stdout), text(&o.stderr));
    let out = tmp.path().join("hpo");
    let o = kgforge(&["hpo", "--space", s(&space), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let trials = kgforge::artifacts::load_trials(&out).unwrap().unwrap();
    assert_eq!(trials.len(), 2);
}

#[test]
fn fetch_stores_a_readable_network() {
    let body = r#"[{"nodes":[{"@id":1,"n":"A"},{"@id":2,"n":"B"}]},{"edges":[{"@id":3,"s":1,"t":2,"i":"binds"}]}]"#;
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("http://{}/v2", listener.local_addr().unwrap());
    let server = std::thread::spawn(move || {
        let (mut c, _) = listener.accept().unwrap();
        let mut buf = [0u8; 4096];
        let n = c.read(&mut buf).unwrap();
        let request = String::from_utf8_lossy(&buf[..n]).into_owned();
        let reply = format!("HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len());
        c.write_all(reply.as_bytes()).unwrap();
        request
    });
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("net.cx");
    let o = kgforge(&["fetch", "--network", "abc", "--endpoint", &endpoint, "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert!(server.join().unwrap().starts_with("GET /v2/network/abc "));
    let triples = kgforge::ingest::read_cx(&out).unwrap();
    assert_eq!(triples, vec![kgforge::Triple::new("A", "binds", "B").unwrap()]);
}
