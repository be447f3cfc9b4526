use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wirerecon_core::calibration::Correspondence3D2D;
use wirerecon_core::dataset_io::{self as dio, reference_manifest, save_correspondences, CorrespondenceFile};
use wirerecon_core::geometry::{project, Vec3, ViewId};

use crate::common::random_camera;
use crate::Outcome;

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Runs the CLI, returning exit code and stdout.
fn wirerecon(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wirerecon"))
        .args(args)
        .env_remove("WIRERECON_LOG")
        .output()
        .expect("binary runs");
    let stderr = String::from_utf8_lossy(&out.stderr);
    if !out.status.success() {
        eprintln!("wirerecon {}: {stderr}", args.join(" "));
    }
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn mean_column(csv_path: &Path, column: &str) -> Result<(f64, usize), String> {
    let mut r = csv::Reader::from_path(csv_path).map_err(|e| e.to_string())?;
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    for h in ["max_ed", "mete", "mers", "frechet"] {
        if !headers.iter().any(|x| x == h) {
            return Err(format!("{}: missing column {h}", csv_path.display()));
        }
    }
    let idx = headers.iter().position(|h| h == column).unwrap();
    let mut sum = 0.0;
    let mut n = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        sum += rec[idx].parse::<f64>().map_err(|e| e.to_string())?;
        n += 1;
    }
    Ok((sum / n.max(1) as f64, n))
}

pub fn representation_comparison() -> Outcome {
    let dir = scratch("benchmark");
    let d = dir.to_str().unwrap();
    let steps: [&[&str]; 5] = [
        &[
            "--output-dir",
            d,
            "--seed",
            "0",
            "synth",
            "--preset",
            "desk",
            "--videos",
            "250",
            "--frames",
            "4",
            "--out",
            "data",
        ],
        &[
            "--output-dir",
            d,
            "--seed",
            "0",
            "train",
            "--data",
            &format!("{d}/data"),
            "--representation",
            "spherical",
            "--out",
            "spherical",
        ],
        &[
            "--output-dir",
            d,
            "--seed",
            "0",
            "train",
            "--data",
            &format!("{d}/data"),
            "--representation",
            "cartesian",
            "--out",
            "cartesian",
        ],
        &[
            "--output-dir",
            d,
            "eval",
            "--model",
            &format!("{d}/spherical/model.json"),
            "--data",
            &format!("{d}/data"),
            "--representation",
            "spherical",
            "--out",
            "eval",
        ],
        &[
            "--output-dir",
            d,
            "eval",
            "--model",
            &format!("{d}/cartesian/model.json"),
            "--data",
            &format!("{d}/data"),
            "--representation",
            "cartesian",
            "--out",
            "eval",
        ],
    ];
    for s in steps {
        let (code, _) = wirerecon(s);
        if code != 0 {
            return Outcome::new(false, format!("`{}` exited {code}", s[4..].join(" ")));
        }
    }
    let read = |rep: &str| -> Result<[f64; 4], String> {
        let p = dir.join("eval").join(format!("metrics_{rep}.csv"));
        let mut out = [0.0; 4];
        for (k, col) in ["max_ed", "mete", "mers", "frechet"].iter().enumerate() {
            out[k] = mean_column(&p, col)?.0;
        }
        Ok(out)
    };
    match (read("spherical"), read("cartesian")) {
        (Ok(s), Ok(c)) => {
            let fmt = |m: [f64; 4]| {
                format!(
                    "MaxED {:.2} METE {:.3} MERS {:.2} Frechet {:.2}",
                    m[0], m[1], m[2], m[3]
                )
            };
            Outcome::new(
                s[1] <= c[1],
                format!(
                    "seed 0, 200/50 split, mean mm: spherical {}; cartesian {}; spherical METE <= cartesian METE: {}",
                    fmt(s),
                    fmt(c),
                    s[1] <= c[1]
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => Outcome::new(false, e),
    }
}

pub fn composition() -> Outcome {
    let t = dio::manifest_stats(&reference_manifest()).unwrap();
    let lib_ok = (t.total(), t.angled(), t.straight()) == (8746, 6136, 2610)
        && (t.angled_fluid, t.straight_fluid, t.angled_no_fluid, t.straight_no_fluid) == (3664, 484, 2472, 2126);
    let dir = scratch("stats");
    let (code, stdout) = wirerecon(&["--output-dir", dir.to_str().unwrap(), "stats", "--reference"]);
    let csv = fs::read_to_string(dir.join("stats.csv")).unwrap_or_default();
    let cli_ok = code == 0
        && csv.contains("angled,3664,2472,6136")
        && csv.contains("straight,484,2126,2610")
        && csv.contains("total,4148,4598,8746")
        && stdout.contains("8746");
    Outcome::new(
        lib_ok && cli_ok,
        format!(
            "total {}, angled {}, straight {}, cells {}/{}/{}/{}; CLI table and CSV match: {cli_ok}",
            t.total(),
            t.angled(),
            t.straight(),
            t.angled_fluid,
            t.straight_fluid,
            t.angled_no_fluid,
            t.straight_no_fluid
        ),
    )
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

pub fn determinism() -> Outcome {
    let root = scratch("determinism");
    let inputs = root.join("inputs");
    let r = inputs.to_str().unwrap().to_string();

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cam = random_camera(&mut rng, 1000.0);
    let corr: Vec<Correspondence3D2D> = (0..40)
        .map(|i| {
            let w = Vec3::new(
                (i % 4) as f64 * 30.0 - 45.0,
                ((i / 4) % 5) as f64 * 20.0 - 40.0,
                (i / 20) as f64 * 50.0 - 25.0,
            );
            Correspondence3D2D {
                world: w,
                image: project(&cam, &w).unwrap(),
            }
        })
        .collect();
    save_correspondences(&inputs.join("corr.json"), &CorrespondenceFile::new(ViewId::A, corr)).unwrap();
    fs::write(inputs.join("train.json"), r#"{"training": {"max_epochs": 3}}"#).unwrap();
    let (code, _) = wirerecon(&[
        "--output-dir",
        &r,
        "synth",
        "--videos",
        "5",
        "--frames",
        "8",
        "--out",
        "data",
    ]);
    if code != 0 {
        return Outcome::new(false, "dataset setup failed");
    }
    let (code, _) = wirerecon(&[
        "--output-dir",
        &r,
        "train",
        "--data",
        &format!("{r}/data"),
        "--config",
        &format!("{r}/train.json"),
        "--out",
        "model",
    ]);
    if code != 0 {
        return Outcome::new(false, "model setup failed");
    }

    let work = root.join("run");
    let w = work.to_str().unwrap().to_string();
    let commands: Vec<(&str, Vec<String>)> = vec![
        (
            "synth",
            vec!["synth", "--videos", "3", "--frames", "6", "--out", "data"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
        (
            "calibrate",
            vec![
                "calibrate".into(),
                "--correspondences".into(),
                format!("{r}/corr.json"),
                "--view".into(),
                "A".into(),
                "--out".into(),
                "cam_a.json".into(),
            ],
        ),
        (
            "reconstruct",
            vec![
                "reconstruct".into(),
                "--annotations".into(),
                format!("{r}/data/videos/video_0000/annotations.json"),
                "--rig".into(),
                format!("{r}/data/rig.json"),
                "--delta-u".into(),
                "1".into(),
                "--jobs".into(),
                "2".into(),
                "--out".into(),
                "rec".into(),
            ],
        ),
        (
            "train",
            vec![
                "train".into(),
                "--data".into(),
                format!("{r}/data"),
                "--config".into(),
                format!("{r}/train.json"),
                "--out".into(),
                "model".into(),
            ],
        ),
        (
            "eval",
            vec![
                "eval".into(),
                "--model".into(),
                format!("{r}/model/model.json"),
                "--data".into(),
                format!("{r}/data"),
                "--out".into(),
                "eval".into(),
            ],
        ),
        (
            "stats",
            vec!["stats".into(), "--manifest".into(), format!("{r}/data/manifest.json")],
        ),
    ];
    let mut report = Vec::new();
    let mut all = true;
    for (name, args) in commands {
        let mut full: Vec<&str> = vec!["--output-dir", &w, "--seed", "7"];
        full.extend(args.iter().map(String::as_str));
        let mut runs = Vec::new();
        for _ in 0..2 {
            let _ = fs::remove_dir_all(&work);
            let (code, _) = wirerecon(&full);
            runs.push((code, snapshot(&work)));
        }
        let ok = runs[0].0 == 0 && runs[1].0 == 0 && runs[0].1 == runs[1].1;
        all &= ok;
        report.push(format!(
            "{name} {} files {}",
            runs[0].1.len(),
            if ok { "identical" } else { "DIFFER" }
        ));
    }
    Outcome::new(all, report.join(", "))
}
