//! End-to-end tests driving the compiled binary.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{snapshot_tree, tmpdir, write_toy_dataset};
use pixveil::imgcore::{save_image, Rng};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pixveil"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn pixveil");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn score_identical_images_prints_zero() {
    let dir = tmpdir("cli-score");
    let img_path = dir.join("a.png");
    let mut rng = Rng::new(900, 0);
    save_image(&common::random_image(&mut rng, 24, 24, 1), &img_path).unwrap();

    let out = run_ok(bin().args([
        "score",
        "--metric",
        "dssim",
        img_path.to_str().unwrap(),
        img_path.to_str().unwrap(),
    ]));
    assert_eq!(stdout(&out).trim(), "0.000000000");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn score_fid_from_feature_files() {
    let dir = tmpdir("cli-fid");
    let fa = dir.join("a.txt");
    let fb = dir.join("b.txt");
    std::fs::write(&fa, "dim=3\n1 2 3\n").unwrap();
    std::fs::write(&fb, "dim=3\n4 6 3\n").unwrap();
    let out = run_ok(bin().args([
        "score",
        "--metric",
        "fid",
        "--features-a",
        fa.to_str().unwrap(),
        "--features-b",
        fb.to_str().unwrap(),
    ]));
    // Single vectors reduce to squared Euclidean distance: 9 + 16 = 25.
    assert_eq!(stdout(&out).trim(), "25.0000000");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn score_error_paths_use_documented_exit_codes() {
    // Unknown metric -> usage error (1).
    let out = bin()
        .args(["score", "--metric", "vsi", "x.png", "y.png"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Missing file -> data error (2).
    let out = bin()
        .args([
            "score",
            "--metric",
            "mse",
            "/nonexistent/a.png",
            "/nonexistent/b.png",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn roc_on_perfectly_separated_records() {
    let dir = tmpdir("cli-roc");
    let records = dir.join("r.csv");
    std::fs::write(
        &records,
        "sample_id,metric,score,recognized\n\
         a,dssim,0.9,0\nb,dssim,0.8,0\nc,dssim,0.2,1\nd,dssim,0.1,1\n",
    )
    .unwrap();
    let curve = dir.join("roc.csv");
    let out = run_ok(bin().args([
        "roc",
        "--records",
        records.to_str().unwrap(),
        "--out",
        curve.to_str().unwrap(),
    ]));
    let text = stdout(&out);
    assert!(text.contains("auc=1.0"), "stdout: {text}");
    assert!(text.contains("t_acc=0.8"), "stdout: {text}");

    let exported = std::fs::read_to_string(&curve).unwrap();
    assert!(exported.starts_with("threshold,fpr,tpr\n"));
    assert!(exported.trim_end().ends_with("auc,1.00000000"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn roc_rejects_malformed_records_with_exit_2() {
    let dir = tmpdir("cli-roc-bad");
    let records = dir.join("bad.csv");
    std::fs::write(&records, "sample_id,metric,score,recognized\n").unwrap();
    let out = bin()
        .args(["roc", "--records", records.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn obfuscate_twice_gives_identical_trees() {
    let data = tmpdir("cli-obf-data");
    write_toy_dataset(&data, 2, 4, (48, 48), 77);
    let out_a = tmpdir("cli-obf-a");
    let out_b = tmpdir("cli-obf-b");

    for out in [&out_a, &out_b] {
        run_ok(bin().args([
            "obfuscate",
            "--dataset",
            data.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--scheme",
            "noise-mix",
            "--lambda",
            "0.75",
            "--sigma",
            "20",
            "--epochs",
            "3",
            "--seed",
            "7",
            "--size",
            "48x48",
        ]));
    }
    let tree_a = snapshot_tree(&out_a);
    let tree_b = snapshot_tree(&out_b);
    assert!(!tree_a.is_empty());
    assert_eq!(tree_a, tree_b, "output trees differ between identical runs");

    // Three epochs, each with its own manifest halves.
    for e in 0..3 {
        assert!(out_a.join(format!("epoch_{e}/public.csv")).exists());
        assert!(out_a.join(format!("epoch_{e}/private.csv")).exists());
    }
    std::fs::remove_dir_all(data).ok();
    std::fs::remove_dir_all(out_a).ok();
    std::fs::remove_dir_all(out_b).ok();
}

#[test]
fn obfuscate_reads_options_from_config_file() {
    let data = tmpdir("cli-cfg-data");
    write_toy_dataset(&data, 2, 3, (48, 48), 78);
    let out_flags = tmpdir("cli-cfg-flags");
    let out_config = tmpdir("cli-cfg-file");

    run_ok(bin().args([
        "obfuscate",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        out_flags.to_str().unwrap(),
        "--scheme",
        "pixelize-mix",
        "--lambda",
        "0.6",
        "--s",
        "8",
        "--seed",
        "5",
        "--size",
        "48x48",
    ]));

    let config = data.join("run.conf");
    std::fs::write(
        &config,
        format!(
            "# pipeline config\ndataset = {}\nscheme = pixelize-mix\nlambda = 0.6\ns = 8\nseed = 5\nsize = 48x48\n",
            data.to_str().unwrap()
        ),
    )
    .unwrap();
    run_ok(bin().args([
        "obfuscate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_config.to_str().unwrap(),
    ]));

    assert_eq!(snapshot_tree(&out_flags), snapshot_tree(&out_config));
    std::fs::remove_dir_all(data).ok();
    std::fs::remove_dir_all(out_flags).ok();
    std::fs::remove_dir_all(out_config).ok();
}

#[test]
fn unreachable_gate_exits_3() {
    let data = tmpdir("cli-gate-data");
    write_toy_dataset(&data, 2, 4, (48, 48), 79);
    let out = tmpdir("cli-gate-out");

    let result = bin()
        .args([
            "obfuscate",
            "--dataset",
            data.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--scheme",
            "mix",
            "--lambda",
            "0.9",
            "--seed",
            "3",
            "--size",
            "48x48",
            "--gate-metric",
            "dssim",
            "--gate-min",
            "0.99",
            "--gate-attempts",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(3));
    // Aborted epochs write nothing.
    assert!(!out.join("epoch_0").exists());
    std::fs::remove_dir_all(data).ok();
    std::fs::remove_dir_all(out).ok();
}

#[test]
fn attack_identity_reports_zero_drop() {
    let data = tmpdir("cli-attack-data");
    write_toy_dataset(&data, 2, 4, (48, 48), 80);
    let report = tmpdir("cli-attack-out").join("report.csv");

    let out = run_ok(bin().args([
        "attack",
        "--dataset",
        data.to_str().unwrap(),
        "--scheme",
        "noise-mix",
        "--lambda",
        "0.75",
        "--sigma",
        "20",
        "--seed",
        "11",
        "--size",
        "48x48",
        "--attack",
        "identity",
        "--metric",
        "dssim",
        "--out",
        report.to_str().unwrap(),
    ]));
    assert!(stdout(&out).contains("mean_drop=0.000000000"));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("sample_id,metric,before,after,relative_drop\n"));
    assert!(text.trim_end().ends_with("mean_drop,0.000000000"));
    std::fs::remove_dir_all(data).ok();
    std::fs::remove_dir_all(report.parent().unwrap()).ok();
}

#[test]
fn survey_gen_emits_all_six_techniques() {
    let data = tmpdir("cli-survey-data");
    write_toy_dataset(&data, 4, 3, (48, 48), 81);
    let out = tmpdir("cli-survey-out");

    run_ok(bin().args([
        "survey-gen",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--count",
        "6",
        "--seed",
        "2",
        "--size",
        "48x48",
    ]));
    let survey = out.join("survey");
    for i in 0..6 {
        assert!(survey.join(format!("sample_{i:05}.png")).exists());
    }
    let params = std::fs::read_to_string(survey.join("params.csv")).unwrap();
    for scheme in [
        "mix",
        "graft-mix",
        "shuffle-mix",
        "noise-mix",
        "pixelize-mix",
        "blur-mix",
    ] {
        assert!(params.contains(scheme), "missing {scheme} in params.csv");
    }
    std::fs::remove_dir_all(data).ok();
    std::fs::remove_dir_all(out).ok();
}

#[test]
fn help_exits_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["obfuscate", "score", "roc", "attack", "survey-gen"] {
        assert!(text.contains(sub));
    }
}

#[test]
fn private_manifest_has_provenance_public_has_none() {
    let data = tmpdir("cli-priv-data");
    write_toy_dataset(&data, 2, 4, (48, 48), 82);
    let out = tmpdir("cli-priv-out");

    run_ok(bin().args([
        "obfuscate",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--scheme",
        "shuffle-mix",
        "--lambda",
        "0.7",
        "--b",
        "4",
        "--seed",
        "1",
        "--size",
        "48x48",
    ]));
    let epoch: &Path = &out.join("epoch_0");
    let public = std::fs::read_to_string(epoch.join("public.csv")).unwrap();
    assert_eq!(public.lines().next(), Some("file,label"));
    let private = std::fs::read_to_string(epoch.join("private.csv")).unwrap();
    assert_eq!(
        private.lines().next(),
        Some("file,sources,lambdas,seed,score")
    );
    // Private rows reference dataset files and record the mixing weights.
    assert!(private.contains("class0/"));
    assert!(private.contains("0.700000000|0.300000000"));
    std::fs::remove_dir_all(data).ok();
    std::fs::remove_dir_all(out).ok();
}
