use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use deblur_core::image_core::io::{load_image, save_image, BitDepth};
use deblur_core::pipeline::PipelineConfig;
use deblur_core::synthesis::{parse_manifest, DistortionLevel};
use deblur_core::synthetic::{fiber_phantom, fiber_phantom_rgb};

fn deblur(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deblur"))
        .args(args)
        .env_remove("DEBLUR_THREADS")
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_phantoms(dir: &Path, n: usize, side: usize) -> Vec<PathBuf> {
    std::fs::create_dir_all(dir).unwrap();
    (0..n)
        .map(|i| {
            let p = dir.join(format!("img{i}.png"));
            save_image(&p, &fiber_phantom(side, side, i as u64 + 1), BitDepth::Eight).unwrap();
            p
        })
        .collect()
}

#[test]
fn enhance_with_no_tuning_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.png");
    let output = dir.path().join("out.png");
    save_image(&input, &fiber_phantom(400, 400, 3), BitDepth::Sixteen).unwrap();
    let o = deblur(&["enhance", arg(&input), arg(&output)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("tiles") && stdout.contains("estimation") && stdout.contains("deconvolution"));
    let (out, depth) = load_image(&output).unwrap();
    assert_eq!((out.width(), out.height(), out.channels()), (400, 400, 1));
    assert_eq!(depth, BitDepth::Sixteen);
}

#[test]
fn enhance_overrides_reach_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.png");
    let output = dir.path().join("out.png");
    let plan = dir.path().join("plan.json");
    save_image(&input, &fiber_phantom_rgb(400, 320, 4), BitDepth::Eight).unwrap();
    let o = deblur(&[
        "enhance",
        arg(&input),
        arg(&output),
        "--tile-size",
        "100",
        "--seeds",
        "2",
        "--rng-seed",
        "7",
        "--outer-iters",
        "2",
        "--dump-plan",
        arg(&plan),
        "--threads",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    assert_eq!(json["core_size"], 100);
    assert_eq!(json["rng_seed"], 7);
    assert_eq!(json["seeds"].as_array().unwrap().len(), 2);
    assert_eq!((json["rows"].as_u64(), json["cols"].as_u64()), (Some(4), Some(4)));
    assert_eq!(json["config"]["estimation"]["outer_iters"], 2);
    assert_eq!(json["tiles"].as_array().unwrap().len(), 16);
    assert_eq!(load_image(&output).unwrap().0.channels(), 3);
}

#[test]
fn missing_input_is_exit_two_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("nowhere.png");
    let o = deblur(&["enhance", arg(&input), arg(&dir.path().join("out.png"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(arg(&input)), "{}", stderr(&o));
}

#[test]
fn unwritable_output_is_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.png");
    save_image(&input, &fiber_phantom(80, 80, 1), BitDepth::Eight).unwrap();
    let out = dir.path().join("missing_dir/out.png");
    let o = deblur(&["enhance", arg(&input), arg(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn invalid_flags_are_rejected_before_io() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("absent.png");
    let o = deblur(&["enhance", arg(&input), "out.png", "--kernel-size", "14"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kernel_size"), "{}", stderr(&o));
    let o = deblur(&["enhance", arg(&input), "out.png", "--overlap", "150"]);
    assert!(stderr(&o).contains("overlap"), "{}", stderr(&o));
}

#[test]
fn synthesize_level_one_and_four() {
    let dir = tempfile::tempdir().unwrap();
    let sharp = dir.path().join("sharp");
    write_phantoms(&sharp, 2, 96);
    for (level, n) in [("I", 5), ("IV", 20)] {
        let out = dir.path().join(level);
        let o = deblur(&["synthesize", arg(&sharp), arg(&out), "--level", level, "--rng-seed", "3"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let entries = parse_manifest(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(entries.len(), 2);
        for e in &entries {
            assert_eq!(e.specs.len(), n);
            assert_eq!(e.level, level.parse::<DistortionLevel>().unwrap());
            assert!(out.join(&e.blurred_path).is_file());
        }
        assert_eq!(std::fs::read_dir(out.join("blurred")).unwrap().count(), 2);
    }
}

#[test]
fn synthesize_rerun_gives_identical_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let sharp = dir.path().join("sharp");
    write_phantoms(&sharp, 2, 80);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = deblur(&["synthesize", arg(&sharp), arg(&out), "--level", "2", "--rng-seed", "11"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
        let blurred = std::fs::read(out.join("blurred/img1.png")).unwrap();
        (manifest, blurred)
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn synthesize_empty_dir_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    std::fs::write(empty.join("notes.txt"), "not an image").unwrap();
    let o = deblur(&["synthesize", arg(&empty), arg(&dir.path().join("out")), "--level", "I"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no .png"), "{}", stderr(&o));
}

fn synthesized_set(dir: &Path) -> PathBuf {
    let sharp = dir.join("sharp");
    write_phantoms(&sharp, 3, 128);
    let out = dir.join("set");
    let o = deblur(&["synthesize", arg(&sharp), arg(&out), "--level", "III", "--rng-seed", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    out.join("manifest.json")
}

#[test]
fn evaluate_is_deterministic_on_one_thread() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synthesized_set(dir.path());
    let run = |name: &str| {
        let csv = dir.path().join(name);
        let o = deblur(&["evaluate", arg(&manifest), "--csv", arg(&csv), "--threads", "1", "--rng-seed", "7"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let stdout = String::from_utf8(o.stdout).unwrap();
        assert!(stdout.lines().any(|l| l.starts_with("III ")), "{stdout}");
        std::fs::read_to_string(csv).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a.lines().count(), 4);
    assert!(a.starts_with("image,level,psnr_blurred,psnr_enhanced,gain_db,runtime_s\n"));
    assert_eq!(a, run("b.csv"));
}

#[test]
fn evaluate_prints_csv_to_stdout_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synthesized_set(dir.path());
    let o = deblur(&["evaluate", arg(&manifest), "--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let rows = stdout.lines().filter(|l| l.starts_with("blurred/")).count();
    assert_eq!(rows, 3, "{stdout}");
}

#[test]
fn malformed_manifest_is_exit_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.json");
    std::fs::write(&manifest, "[\n  {\n    \"blurred_path\": \"a.png\",\n    \"sharpness\": 3\n  }\n]\n").unwrap();
    let o = deblur(&["evaluate", arg(&manifest)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 4") && err.contains("sharpness"), "{err}");
}

#[test]
fn dump_config_prints_the_defaults() {
    let o = deblur(&["dump-config"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for line in [
        "tile_size = 200",
        "overlap = 20",
        "rng_seed = 0",
        "lambda = 80.0",
        "eta = 15.0",
        "nu = 6.0",
        "eta_decay = 2.0",
        "kernel_size = 15",
        "pyramid_levels = 5",
        "beta = 3000.0",
        "alpha = 0.8",
    ] {
        assert!(text.lines().any(|l| l == line), "missing {line}");
    }
    assert_eq!(toml::from_str::<PipelineConfig>(&text).unwrap(), PipelineConfig::default());
}

#[test]
fn dump_config_reflects_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    std::fs::write(&path, "[estimation]\nlambda = 40.0\nnu = 2.0\n").unwrap();
    let o = deblur(&["dump-config", "--config", arg(&path), "--nu", "3"]);
    let cfg: PipelineConfig = toml::from_str(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!((cfg.estimation.lambda, cfg.estimation.nu), (40.0, 3.0));
}

#[test]
fn threads_fall_back_to_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_deblur"))
        .args(["dump-config", "-v"])
        .env("DEBLUR_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stderr(&o).contains("3 worker thread(s)"), "{}", stderr(&o));
}
