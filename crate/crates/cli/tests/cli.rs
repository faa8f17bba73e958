use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hqmri_core::imgcore::{read_image, Image2D};

fn hqmri(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hqmri"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hqmri(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Relative path → contents for every file under `root`.
fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn without_run_manifest(mut snap: BTreeMap<PathBuf, Vec<u8>>) -> BTreeMap<PathBuf, Vec<u8>> {
    snap.remove(Path::new("run_manifest.json"));
    snap
}

fn run_manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("run_manifest.json")).unwrap()).unwrap()
}

#[test]
fn usage_and_runtime_errors_have_distinct_exit_codes() {
    let out = hqmri(&["phantom", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(hqmri(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hqmri(&["--help"]).status.code(), Some(0));
    let missing = "/nonexistent/ckpt.bin";
    let out = hqmri(&["eval", "--ckpt", missing, "--manifest", "m.tsv", "--report", "r.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(missing));
}

#[test]
fn phantom_generation_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        ok(&["phantom", "--n", "3", "--slices", "2", "--size", "32", "--out", s(d), "--seed", "7"]);
    }
    let snap = without_run_manifest(snapshot(&a));
    assert_eq!(snap.len(), 6);
    assert_eq!(snap, without_run_manifest(snapshot(&b)));
    let manifest = run_manifest(&a);
    assert_eq!(manifest["subcommand"], "phantom");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config"]["command"]["Phantom"]["size"], 32);
    let c = tmp.path().join("c");
    ok(&["phantom", "--n", "3", "--slices", "2", "--size", "32", "--out", s(&c), "--seed", "8"]);
    assert_ne!(snap, without_run_manifest(snapshot(&c)));
}

#[test]
fn sigma_calibration_prints_the_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    ok(&["phantom", "--n", "2", "--slices", "1", "--size", "32", "--out", s(&data), "--seed", "1"]);
    let before = snapshot(&data);
    let out_dir = tmp.path().join("cal");
    let stdout = ok(&["sigma-cal", "--in", s(&data), "--range", "2:8:1", "--out", s(&out_dir)]);
    assert_eq!(stdout.lines().filter(|l| l.contains('\t')).count(), 8);
    let chosen = stdout.lines().find(|l| l.starts_with("selected sigma = ")).unwrap();
    let sigma: f64 = chosen["selected sigma = ".len()..].split(' ').next().unwrap().parse().unwrap();
    assert!((2.0..=8.0).contains(&sigma));
    assert!(out_dir.join("sigma_table.tsv").exists());
    assert_eq!(run_manifest(&out_dir)["subcommand"], "sigma-cal");
    assert_eq!(snapshot(&data), before);
}

#[test]
fn pipeline_from_phantoms_to_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let data = t.join("subjects");
    ok(&["phantom", "--n", "7", "--slices", "2", "--size", "32", "--out", s(&data), "--seed", "3"]);
    let pristine = snapshot(&data);

    let sr = t.join("sr");
    let split = ["--split", "5,1,1", "--seed", "4"];
    let stdout = ok(&[&["degrade", "--in", s(&data), "--out", s(&sr), "--factor", "2", "--patch", "16", "--stride", "16"][..], &split].concat());
    assert!(stdout.contains("test"));
    assert!(sr.join("manifest.tsv").exists());

    let ma = t.join("ma");
    ok(&[&["motion", "--in", s(&data), "--out", s(&ma), "--variants", "2", "--severity", "0.1:0.2", "--protect-center", "4"][..], &split].concat());
    let plans = fs::read_to_string(ma.join("motion_plans.tsv")).unwrap();
    assert_eq!(plans.lines().count(), 7 * 2 * 2);

    let run = t.join("run");
    let manifest = sr.join("manifest.tsv");
    let train = [
        "train", "--task", "sr", "--factor", "2", "--toy", "--loss", "R3", "--epochs", "2", "--warmup", "1",
        "--batch", "4", "--manifest", s(&manifest), "--out", s(&run), "--seed", "5",
    ];
    let stdout = ok(&train);
    assert!(stdout.contains("epoch   1"));
    for f in ["epoch_001.ckpt", "epoch_002.ckpt", "best.ckpt", "runlog.json", "run_manifest.json"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let again = t.join("run2");
    let replay: Vec<&str> = train.iter().map(|a| if *a == s(&run) { s(&again) } else { a }).collect();
    ok(&replay);
    assert_eq!(fs::read(run.join("epoch_002.ckpt")).unwrap(), fs::read(again.join("epoch_002.ckpt")).unwrap());

    let resumed = t.join("run3");
    fs::create_dir_all(&resumed).unwrap();
    let first = run.join("epoch_001.ckpt");
    let mut resume: Vec<&str> = replay.iter().map(|a| if *a == s(&again) { s(&resumed) } else { a }).collect();
    resume.extend(["--resume", s(&first)]);
    ok(&resume);
    assert_eq!(fs::read(run.join("epoch_002.ckpt")).unwrap(), fs::read(resumed.join("epoch_002.ckpt")).unwrap());

    let report = t.join("eval").join("report.txt");
    let ckpt = run.join("best.ckpt");
    let stdout = ok(&["eval", "--ckpt", s(&ckpt), "--manifest", s(&manifest), "--report", s(&report)]);
    let text = fs::read_to_string(&report).unwrap();
    assert_eq!(stdout, text);
    assert!(text.contains("ssim_zero-filled") && text.contains("psnr_sr"));
    assert_eq!(run_manifest(&t.join("eval"))["subcommand"], "eval");

    let up = t.join("up");
    let slices = data.join("subj00");
    ok(&["restore", "--ckpt", s(&ckpt), "--in", s(&slices), "--out", s(&up), "--factor", "2"]);
    let restored: Image2D<f32> = read_image(up.join("z000.mrir")).unwrap();
    assert_eq!(restored.dims(), (64, 64));
    let tiled = t.join("tiled");
    ok(&["restore", "--ckpt", s(&ckpt), "--in", s(&slices), "--out", s(&tiled), "--patch", "16", "--stride", "8"]);
    let stitched: Image2D<f32> = read_image(tiled.join("z001.mrir")).unwrap();
    assert_eq!(stitched.dims(), (64, 64));
    assert_eq!(hqmri(&["restore", "--ckpt", s(&ckpt), "--in", s(&slices), "--out", s(&up), "--factor", "4"]).status.code(), Some(1));

    let panels = t.join("panels");
    ok(&["report", "--ckpt", s(&ckpt), "--manifest", s(&manifest), "--out", s(&panels), "--limit", "2"]);
    let pgm: Vec<_> = fs::read_dir(&panels)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".pgm"))
        .collect();
    assert_eq!(pgm.len(), 4);
    let panel = pgm.iter().find(|n| n.ends_with("_panel.pgm")).unwrap();
    let header = fs::read(panels.join(panel)).unwrap();
    assert!(header.starts_with(format!("P5\n{} 16\n", 4 * 16 + 3 * 2).as_bytes()));

    assert_eq!(snapshot(&data), pristine);
}
