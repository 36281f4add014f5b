use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn homcorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homcorr")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn verify_transforms_passes_with_tight_errors() {
    let o = homcorr(&["verify", "--suite", "transforms"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let props = rep["properties"].as_array().unwrap();
    assert!(props.len() >= 17);
    for prop in props {
        assert_eq!(prop["passed"], Value::Bool(true));
        assert!(prop["max_error"].as_f64().unwrap() < 1e-9, "{prop}");
    }
}

#[test]
fn verify_reports_are_byte_identical() {
    let a = homcorr(&["verify", "--suite", "dilated", "--seed", "4"]);
    let b = homcorr(&["verify", "--suite", "dilated", "--seed", "4"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn injected_wigner_fault_fails_loudly() {
    let o = homcorr(&["verify", "--suite", "equivariance", "--inject-fault", "wigner-sign-flip"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("property equivariance/corr_s2_vs_quadrature failed"), "{}", stderr(&o));
    let o = homcorr(&["verify", "--suite", "transforms", "--inject-fault", "wigner-sign-flip"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("induced_basis"));
}

#[test]
fn usage_and_io_exit_codes() {
    assert_eq!(code(&homcorr(&["frobnicate"])), 2);
    assert_eq!(code(&homcorr(&["verify", "--suite", "nonsense"])), 2);
    assert_eq!(code(&homcorr(&["--help"])), 0);
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.hckp");
    let o = homcorr(&["eval", "--checkpoint", p(&missing), "--dataset", p(&missing)]);
    assert_eq!(code(&o), 3);
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "space = \"s2\"\ndataset = \"d\"\ncheckpoint = \"c\"\nshade = 1\n").unwrap();
    assert_eq!(code(&homcorr(&["train", p(&cfg)])), 2);
    std::fs::write(&cfg, "space = \"so3\"\ndataset = \"d\"\ncheckpoint = \"c\"\n").unwrap();
    assert_eq!(code(&homcorr(&["train", p(&cfg)])), 2);
    let junk = dir.path().join("junk.hdat");
    std::fs::write(&junk, b"HDATxx").unwrap();
    let o = homcorr(&["eval", "--checkpoint", p(&junk), "--dataset", p(&junk)]);
    assert_eq!(code(&o), 3);
    let o = Command::new(env!("CARGO_BIN_EXE_homcorr")).arg("info").env("HOMCORR_THREADS", "0").output().unwrap();
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_homcorr")).arg("info").env("HOMCORR_THREADS", "1").output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("threads 1"));
}

fn gen_blobs(out: &Path, regime: &str, per_class: &str, seed: &str) {
    let o = homcorr(&[
        "gen-data", "blobs", "--bandwidth", "6", "--per-class", per_class, "--regime", regime, "--seed", seed, "--out", p(out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn gen_data_regimes_and_empty_sets() {
    let dir = tempfile::tempdir().unwrap();
    let (nr, r, empty) = (dir.path().join("nr.hdat"), dir.path().join("r.hdat"), dir.path().join("e.hdat"));
    gen_blobs(&nr, "NR", "3", "5");
    gen_blobs(&r, "R", "3", "5");
    gen_blobs(&empty, "NR", "0", "5");
    let read = |f: &Path| homcorr::data::read_dataset(&mut std::fs::File::open(f).unwrap()).unwrap();
    let (a, b) = (read(&nr), read(&r));
    assert_eq!(a.rotated_copy(5), b);
    assert!(read(&empty).is_empty());
    let again = dir.path().join("nr2.hdat");
    gen_blobs(&again, "NR", "3", "5");
    assert_eq!(std::fs::read(&nr).unwrap(), std::fs::read(&again).unwrap());
}

fn write_config(dir: &Path, epochs: usize) -> std::path::PathBuf {
    let cfg = dir.join(format!("run{epochs}.toml"));
    std::fs::write(
        &cfg,
        format!(
            "space = \"s2\"\nseed = 2\ndataset = \"train.hdat\"\ncheckpoint = \"model{epochs}.hckp\"\n\
             [model]\nbandwidths = [4]\nkernel_bandwidths = [4]\nchannels = [4]\n\
             [train]\nepochs = {epochs}\nbatch_size = 20\nlr = 0.02\n"
        ),
    )
    .unwrap();
    cfg
}

fn accuracy_of(o: &Output) -> f64 {
    let s = stdout(o);
    s.split_whitespace().nth(1).and_then(|v| v.parse().ok()).unwrap_or_else(|| panic!("no accuracy in {s:?}"))
}

#[test]
fn train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.hdat");
    let test = dir.path().join("test.hdat");
    gen_blobs(&train, "NR", "25", "1");
    gen_blobs(&test, "NR", "100", "2");

    // untrained: chance level
    let cfg0 = write_config(dir.path(), 0);
    assert_eq!(code(&homcorr(&["train", p(&cfg0)])), 0);
    let ck0 = dir.path().join("model0.hckp");
    let o = homcorr(&["eval", "--checkpoint", p(&ck0), "--dataset", p(&test)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!((accuracy_of(&o) - 0.25).abs() <= 0.05 + 1e-9, "{}", stdout(&o));

    // trained twice: identical logs; NR and R accuracy agree
    let cfg = write_config(dir.path(), 15);
    let (l1, l2) = (dir.path().join("a.log"), dir.path().join("b.log"));
    assert_eq!(code(&homcorr(&["train", p(&cfg), "--log", p(&l1)])), 0);
    assert_eq!(code(&homcorr(&["train", p(&cfg), "--log", p(&l2)])), 0);
    let log = std::fs::read_to_string(&l1).unwrap();
    assert_eq!(log, std::fs::read_to_string(&l2).unwrap());
    assert_eq!(log.lines().filter(|l| l.starts_with("epoch ")).count(), 15);
    let ck = dir.path().join("model15.hckp");
    let nr = accuracy_of(&homcorr(&["eval", "--checkpoint", p(&ck), "--dataset", p(&test), "--regime", "NR"]));
    let r = accuracy_of(&homcorr(&["eval", "--checkpoint", p(&ck), "--dataset", p(&test), "--regime", "R", "--rotation-seed", "9"]));
    assert!(nr > 0.5, "{nr}");
    assert!((nr - r).abs() <= 0.02 + 1e-9, "NR {nr} R {r}");
    let info = homcorr(&["info", "--checkpoint", p(&ck)]);
    assert!(stdout(&info).contains("fingerprint"));
}

#[test]
fn permtest_and_sequence_training() {
    let dir = tempfile::tempdir().unwrap();
    let seqs = dir.path().join("seqs.hseq");
    let o = homcorr(&[
        "gen-data", "sequences", "--per-class", "4", "--length", "6", "--bandwidth", "3", "--seed", "2", "--out", p(&seqs),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cfg = dir.path().join("seq.toml");
    std::fs::write(
        &cfg,
        "space = \"s2xr\"\nseed = 1\ndataset = \"seqs.hseq\"\ncheckpoint = \"seq.hckp\"\n\
         [dilated]\nhead_channels = 2\nhead_bandwidth = 2\nhead_kernel_bandwidth = 2\npool = true\n\
         stack = [{ kernel = 2, dilation = 1, channels = 3 }, { kernel = 2, dilation = 2, channels = 3 }]\n\
         [train]\nepochs = 20\n[permtest]\nn_perm = 19\nepochs = 10\n",
    )
    .unwrap();
    let out = dir.path().join("perm.json");
    let o = homcorr(&["permtest", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rep["n_perm"], 19);
    assert_eq!(rep["d_perm"].as_array().unwrap().len(), 19);
    let ps = rep["p_smoothed"].as_f64().unwrap();
    assert!(ps > 0.0 && ps <= 1.0);
    let again = dir.path().join("perm2.json");
    homcorr(&["permtest", p(&cfg), "--out", p(&again)]);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
    assert_eq!(code(&homcorr(&["permtest", p(&cfg), "--n-perm", "5"])), 2);

    let o = homcorr(&["train", p(&cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ck = dir.path().join("seq.hckp");
    let nr = accuracy_of(&homcorr(&["eval", "--checkpoint", p(&ck), "--dataset", p(&seqs)]));
    let r = accuracy_of(&homcorr(&["eval", "--checkpoint", p(&ck), "--dataset", p(&seqs), "--regime", "R"]));
    assert_eq!(nr, r);
}

#[test]
fn bench_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let o = homcorr(&["bench", "--min-b", "2", "--max-b", "8", "--reps", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("crossover"));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["bandwidth", "spectral_seconds", "bruteforce_seconds", "speedup"]);
    let rows: Vec<Vec<f64>> = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 7);
    #[derive(serde::Deserialize)]
    struct Row {
        bandwidth: usize,
        spectral_seconds: f64,
        bruteforce_seconds: Option<f64>,
    }
    let typed: Vec<Row> = csv::Reader::from_path(&out).unwrap().deserialize().map(Result::unwrap).collect();
    assert!(typed.iter().zip(2..).all(|(r, b)| r.bandwidth == b && r.spectral_seconds > 0.0 && r.bruteforce_seconds.is_some()));
    // brute force grows like B⁵, so its column is monotone even on a noisy machine
    assert!(rows.windows(2).all(|w| w[1][2] >= w[0][2]));
    let at8 = rows.iter().find(|r| r[0] == 8.0).unwrap();
    assert!(at8[3] >= 10.0, "speedup at B=8: {}", at8[3]);
}
