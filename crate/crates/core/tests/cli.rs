use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spikegrad(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikegrad"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "seed = 5
task.n_inputs = 6
task.t_steps = 20
task.samples_per_class = 8
model.layers = 6,8,2
trainer.epochs = 4
trainer.batch_size = 4
optimizer.lr = 0.01
";

fn write_cfg(dir: &Path, name: &str, body: &str) -> String {
    fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

#[test]
fn gradcheck_rtrl_vs_bptt_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spikegrad(&["gradcheck", "--suite", "rtrl-vs-bptt"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().filter(|l| l.starts_with("ok")).count(), 50);
}

#[test]
fn gradcheck_unknown_suite_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spikegrad(&["gradcheck", "--suite", "nope"], tmp.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--suite"));
}

#[test]
fn train_writes_history_checkpoint_and_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "run.cfg", &format!("{SMALL}output.dir = out\n"));
    let o = spikegrad(&["train", "--config", &cfg], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let history = fs::read_to_string(tmp.path().join("out/history.csv")).unwrap();
    let mut lines = history.lines();
    assert_eq!(lines.next(), Some("epoch,loss,accuracy,total_spikes"));
    assert_eq!(lines.count(), 4);
    assert!(fs::read_to_string(tmp.path().join("out/checkpoint.txt")).unwrap().starts_with("spikegrad-v1"));

    // the resolved config is itself a valid config that reproduces the run
    let resolved = fs::read_to_string(tmp.path().join("out/config.resolved")).unwrap();
    let again = write_cfg(tmp.path(), "again.cfg", &resolved.replace("output.dir = out", "output.dir = out2"));
    assert!(spikegrad(&["train", "--config", &again], tmp.path()).status.success());
    assert_eq!(history, fs::read_to_string(tmp.path().join("out2/history.csv")).unwrap());
}

#[test]
fn train_is_deterministic_across_runs_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write_cfg(tmp.path(), "a.cfg", &format!("{SMALL}output.dir = a\n"));
    let b = write_cfg(tmp.path(), "b.cfg", &format!("{SMALL}output.dir = b\n"));
    assert!(spikegrad(&["train", "--config", &a], tmp.path()).status.success());
    assert!(spikegrad(&["--threads", "4", "train", "--config", &b], tmp.path()).status.success());
    for f in ["history.csv", "checkpoint.txt"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(f)).unwrap(),
            fs::read(tmp.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn zero_learning_rate_keeps_loss_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let body = SMALL.replace("optimizer.lr = 0.01", "optimizer.lr = 0");
    let cfg = write_cfg(tmp.path(), "z.cfg", &format!("{body}output.dir = z\n"));
    let o = spikegrad(&["train", "--config", &cfg], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let history = fs::read_to_string(tmp.path().join("z/history.csv")).unwrap();
    let losses: Vec<&str> = history.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(losses.len(), 4);
    assert!(losses.iter().all(|l| *l == losses[0]), "{losses:?}");
}

#[test]
fn eval_scores_a_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "e.cfg", &format!("{SMALL}output.dir = e\n"));
    assert!(spikegrad(&["train", "--config", &cfg], tmp.path()).status.success());
    let o = spikegrad(&["eval", "--checkpoint", "e/checkpoint.txt", "--config", &cfg], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().contains("accuracy"));
    let eval = fs::read_to_string(tmp.path().join("e/eval.csv")).unwrap();
    assert!(eval.starts_with("loss,accuracy,mean_spikes\n"));
    let counts = fs::read_to_string(tmp.path().join("e/eval_counts.csv")).unwrap();
    assert_eq!(counts.lines().count(), 1 + 8 + 2);
}

#[test]
fn errors_name_the_offending_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.cfg", format!("{SMALL}modle.layers = 3\n"), "modle.layers"),
        ("shape.cfg", SMALL.replace("model.layers = 6,8,2", "model.layers = 5,8,2"), "model.layers"),
        ("value.cfg", SMALL.replace("trainer.epochs = 4", "trainer.epochs = four"), "trainer.epochs"),
        ("kind.cfg", format!("{SMALL}trainer.kind = magic\n"), "trainer.kind"),
    ];
    for (name, body, key) in cases {
        let cfg = write_cfg(tmp.path(), name, &body);
        let o = spikegrad(&["train", "--config", &cfg], tmp.path());
        assert!(!o.status.success(), "{name}");
        assert!(stderr(&o).contains(key), "{name}: {}", stderr(&o));
    }
}

#[test]
fn missing_files_and_bad_flags_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spikegrad(&["train", "--config", "absent.cfg"], tmp.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("absent.cfg"));
    let o = spikegrad(&["train", "--config", "x.cfg", "--bogus"], tmp.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--bogus"));
}

#[test]
fn encode_all_zero_rate_gives_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("z.csv"), "# features\n0,0,0,0\n").unwrap();
    let o = spikegrad(&["encode", "--scheme", "rate", "--in", "z.csv", "--out", "z.ev", "--t-steps", "30"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(tmp.path().join("z.ev")).unwrap(), "# T=30 N=4\n");
}

#[test]
fn encode_latency_and_delta() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("x.csv"), "1.0,0.6,0.5\n").unwrap();
    let o = spikegrad(
        &["encode", "--scheme", "latency", "--in", "x.csv", "--out", "x.ev", "--tau", "1", "--theta", "0.5", "--t-steps", "10"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    // round(ln 2) = 1, round(ln 6) = 2, x = theta never fires
    assert_eq!(fs::read_to_string(tmp.path().join("x.ev")).unwrap(), "# T=10 N=3\n1,0\n2,1\n");

    fs::write(tmp.path().join("s.csv"), "0,0\n0.5,0\n0,-0.5\n").unwrap();
    let o = spikegrad(
        &["encode", "--scheme", "delta", "--in", "s.csv", "--out", "s.ev", "--polarity", "bipolar", "--threshold", "0.2"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    // channels 0-1 are on events, 2-3 off events
    assert_eq!(fs::read_to_string(tmp.path().join("s.ev")).unwrap(), "# T=3 N=4\n1,0\n2,2\n2,3\n");
}

#[test]
fn encode_reports_bad_csv_line() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.csv"), "0.1,0.2\n0.3,oops\n").unwrap();
    let o = spikegrad(&["encode", "--scheme", "delta", "--in", "bad.csv", "--out", "b.ev"], tmp.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("bad.csv:2"), "{}", stderr(&o));
}

#[test]
fn event_manifest_feeds_training() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    fs::create_dir(&data).unwrap();
    let mut manifest = String::new();
    for k in 0..6 {
        let label = k % 2;
        // class 0 drives the first half of the inputs, class 1 the second
        let events: String = (0..10).map(|t| format!("{t},{}\n", label * 2 + t % 2)).collect();
        fs::write(data.join(format!("s{k}.ev")), format!("# T=10 N=4\n{events}")).unwrap();
        manifest.push_str(&format!("s{k}.ev,{label}\n"));
    }
    fs::write(data.join("manifest.txt"), manifest).unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "ev.cfg",
        "task.kind = events\ntask.manifest = data/manifest.txt\nmodel.layers = 4,2\ntrainer.epochs = 3\noutput.dir = ev\n",
    );
    let o = spikegrad(&["train", "--config", &cfg], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(tmp.path().join("ev/history.csv")).unwrap().lines().count(), 4);

    fs::write(data.join("s0.ev"), "# T=10 N=4\n0,0\n12,1\n").unwrap();
    let o = spikegrad(&["train", "--config", &cfg], tmp.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("s0.ev:3"), "{}", stderr(&o));
}

#[test]
fn stdp_demo_writes_the_window() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "s.cfg", &format!("{SMALL}stdp.max_dt = 30\noutput.dir = s\n"));
    let o = spikegrad(&["stdp-demo", "--config", &cfg], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("s/stdp_curve.csv")).unwrap();
    let rows: Vec<(i64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 61);
    // pre before post (dt < 0) potentiates, pre after post depresses
    assert!(rows.iter().all(|&(dt, dw)| (dt < 0 && dw > 0.0) || (dt > 0 && dw < 0.0) || dt == 0));
}
