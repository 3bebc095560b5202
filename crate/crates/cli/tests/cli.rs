use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "experiment": {"grid_n": 16, "train_samples": 16, "holdout_samples": 4, "eval_batches": 2,
                 "eval_batch_size": 4, "mc_samples": 6, "train_iterations": 60, "eval_iterations": 80,
                 "bandwidths": [6, 8]},
  "model": {"width": 4, "n_layers": 2, "modes": 3, "projection_hidden": 6},
  "train": {"steps": 8, "batch_size": 4, "holdout_every": 4}
}"#;

fn bclab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bclab"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = bclab(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn datagen_is_reproducible_and_schedule_independent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["datagen", "--dist", "b0", "--count", "4", "--seed", "7", "--iters", "220"];
    ok(d, &[&args[..], &["--out", "a.bpde"]].concat());
    ok(d, &[&args[..], &["--out", "b.bpde"]].concat());
    ok(d, &[&args[..], &["--out", "c.bpde", "--parallel"]].concat());
    let a = read(d, "a.bpde");
    assert_eq!(a.len(), 24 + 4 * (2 * 64 * 64 + 4 * 64) * 4);
    assert_eq!(a, read(d, "b.bpde"));
    assert_eq!(a, read(d, "c.bpde"));
    assert_eq!(read(d, "a.bpde.json"), read(d, "c.bpde.json"));
    ok(d, &[&args[..5], &["--seed", "8", "--iters", "220", "--out", "e.bpde"]].concat());
    assert_ne!(a, read(d, "e.bpde"));
}

#[test]
fn full_pipeline_on_a_small_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("small.json"), SMALL).unwrap();
    let cfg = ["--config", "small.json"];
    let run = |args: &[&str]| ok(d, &[&cfg[..], args].concat());

    run(&["train", "--dist", "b0", "--encoding", "aware", "--out", "ck/aware.bfno"]);
    run(&["train", "--dist", "b0", "--encoding", "aware", "--out", "ck/aware2.bfno"]);
    assert_eq!(read(d, "ck/aware.bfno"), read(d, "ck/aware2.bfno"));
    assert_eq!(read(d, "ck/aware.bfno.log.csv"), read(d, "ck/aware2.bfno.log.csv"));
    let log = String::from_utf8(read(d, "ck/aware.bfno.log.csv")).unwrap();
    assert!(log.starts_with("step,train_mse,holdout_rel_l2\n"));
    assert_eq!(log.lines().count(), 1 + 9);

    run(&["train", "--dist", "b0", "--encoding", "ablated", "--out", "ck/ablated.bfno"]);
    run(&["datagen", "--dist", "b1", "--out", "b1.bpde"]);
    run(&["train", "--dist", "b1", "--data", "b1.bpde", "--out", "ck/b1.bfno"]);
    // The training split regenerated in-process and the same split read from
    // disk give the same model.
    run(&["train", "--dist", "b1", "--out", "ck/b1_gen.bfno"]);
    assert_eq!(read(d, "ck/b1.bfno"), read(d, "ck/b1_gen.bfno"));

    let ckpts = ["--checkpoint", "ck/aware.bfno", "--checkpoint", "ck/b1.bfno", "--checkpoint", "ck/ablated.bfno"];
    let out = run(&[&["eval"][..], &ckpts, &["--out", "r/eval.csv"]].concat());
    assert!(String::from_utf8_lossy(&out.stdout).contains("b1_aware/b1"));
    run(&[&["eval", "--parallel"][..], &ckpts, &["--out", "r/eval_par.csv"]].concat());
    assert_eq!(read(d, "r/eval.csv"), read(d, "r/eval_par.csv"));
    assert_eq!(read(d, "r/eval.csv.json"), read(d, "r/eval_par.csv.json"));
    let csv = String::from_utf8(read(d, "r/eval.csv")).unwrap();
    assert!(csv.starts_with("label,mean,std,count\n"));
    assert_eq!(csv.lines().count(), 1 + 6);

    run(&["sweep-shift", "--checkpoint", "ck/aware.bfno", "--out", "r/shift.csv"]);
    assert_eq!(String::from_utf8(read(d, "r/shift.csv")).unwrap().lines().count(), 1 + 7);
    run(&["sweep-freq", "--checkpoint", "ck/aware.bfno", "--out", "r/freq.csv"]);
    assert_eq!(String::from_utf8(read(d, "r/freq.csv")).unwrap().lines().count(), 1 + 2);

    run(&["condexp", "--checkpoint", "ck/ablated.bfno", "--checkpoint", "ck/aware.bfno", "--out", "ce"]);
    for f in ["report.csv", "report.csv.json", "prediction.bfld", "mc_mean.bfld", "abs_diff.bfld", "summary.json"] {
        assert!(d.join("ce").join(f).exists(), "{f}");
    }
    assert_eq!(read(d, "ce/mc_mean.bfld").len(), 16 + 8 * 16 * 16);

    let wrong = bclab(d, &[&cfg[..], &["condexp", "--checkpoint", "ck/aware.bfno", "--out", "ce2"]].concat());
    assert!(!wrong.status.success());
    assert!(String::from_utf8_lossy(&wrong.stderr).starts_with("error: config:"));
}

#[test]
fn errors_are_single_machine_readable_lines() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.json"), r#"{"train": {"stepz": 3}}"#).unwrap();
    let cases: [(&[&str], &str); 3] = [
        (&["--config", "bad.json", "selftest"], "error: json:"),
        (&["--config", "missing.json", "selftest"], "error: io:"),
        (&["sweep-shift", "--checkpoint", "nope.bfno", "--out", "r.csv"], "error: io:"),
    ];
    for (args, prefix) in cases {
        let out = bclab(d, args);
        assert!(!out.status.success(), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.starts_with(prefix), "{args:?}: {err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    }

    std::fs::write(d.join("junk.bfno"), b"BFNO followed by bytes that are not a valid checkpoint body").unwrap();
    let out = bclab(d, &["sweep-freq", "--checkpoint", "junk.bfno", "--out", "r.csv"]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: checksum:"));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["selftest", "--out", "checks.json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{text}");
    assert!(dir.path().join("checks.json").exists());
}
