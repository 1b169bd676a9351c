use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermotob::cli::{run, EXIT_DATA, EXIT_OK, EXIT_PARTIAL};
use thermotob::thermal_io::{
    celsius_to_raw, write_video, AnnotationTrack, CalibrationMap, RoomType, ThermalFrame,
    ThermalVideo,
};

fn cli(args: &[&str]) -> i32 {
    let mut full = vec!["thermotob"];
    full.extend_from_slice(args);
    run(full)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn count_suffix(dir: &Path, suffix: &str) -> usize {
    fs::read_dir(dir)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with(suffix)
        })
        .count()
}

/// Writes a video whose pixels are background, skin and a small hot patch in
/// fixed proportions, with an all-negative annotation.
fn write_constructed(dir: &Path, id: &str, skin: f64, rng: &mut ChaCha8Rng) {
    let cal = CalibrationMap::default();
    let (w, h) = (50u32, 50u32);
    let n_frames = 61;
    // 48% background, 50% skin, 2% hot: mean = skin - 5, max = skin + 10
    let bg = skin - (5.0 + 0.02 * 10.0) / 0.48;
    let frames = (0..n_frames)
        .map(|_| {
            let data = (0..(w * h) as usize)
                .map(|i| {
                    let t = match i % 50 {
                        0 => skin + 10.0,
                        k if k < 25 => skin + rng.gen_range(-0.1..0.1),
                        _ => bg + rng.gen_range(-0.1..0.1),
                    };
                    celsius_to_raw(t, &cal)
                })
                .collect();
            ThermalFrame::new(w, h, data).unwrap()
        })
        .collect();
    let video = ThermalVideo::new(frames, 1.0, RoomType::DeliveryRoom, cal).unwrap();
    let f = BufWriter::new(File::create(dir.join(format!("{id}.thv"))).unwrap());
    write_video(&video, f).unwrap();
    let track = AnnotationTrack::new(1.0, n_frames, vec![], None).unwrap();
    fs::write(dir.join(format!("{id}.ann.json")), track.to_json()).unwrap();
}

#[test]
fn simulate_writes_complete_deterministic_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(cli(&["simulate", "--n", "20", "--seed", "42", "--out", s(&a)]), EXIT_OK);
    assert_eq!(cli(&["simulate", "--n", "20", "--seed", "42", "--out", s(&b)]), EXIT_OK);
    for suffix in [".thv", ".ann.json", ".scenario.json", ".truth.json"] {
        assert_eq!(count_suffix(&a, suffix), 20, "{suffix}");
    }
    assert!(a.join("manifest.json").exists());
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn calibrate_recovers_offsets_of_constructed_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    fs::create_dir(&corpus).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..5 {
        write_constructed(&corpus, &format!("v{i}"), rng.gen_range(34.0..36.0), &mut rng);
    }
    let out = tmp.path().join("profile.json");
    assert_eq!(cli(&["calibrate", "--corpus", s(&corpus), "--out", s(&out)]), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["lower_offset"], -5.0);
    assert_eq!(v["upper_offset"], 10.0);
    assert_eq!(v["videos"], 5);
}

#[test]
fn sweep_and_run_on_corpus_without_births() {
    let tmp = tempfile::tempdir().unwrap();
    let train = tmp.path().join("train");
    let model = tmp.path().join("model.json");
    assert_eq!(cli(&["simulate", "--n", "3", "--seed", "1", "--out", s(&train)]), EXIT_OK);
    assert_eq!(cli(&["train", "--corpus", s(&train), "--out", s(&model)]), EXIT_OK);

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    write_constructed(&empty, "n0", 35.0, &mut rng);
    write_constructed(&empty, "n1", 34.5, &mut rng);

    let csv = tmp.path().join("sweep.csv");
    let args = ["sweep", "--corpus", s(&empty), "--model", s(&model), "--out", s(&csv)];
    assert_eq!(cli(&args), EXIT_OK);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("gamma,fpr"));
    let fpr: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(fpr.len(), 90);
    assert!(fpr.iter().all(|f| (0.0..=1.0).contains(f)));
    assert!(fpr.windows(2).all(|w| w[1] <= w[0]));

    let out = tmp.path().join("run");
    let args = ["run", "--corpus", s(&empty), "--model", s(&model), "--out", s(&out)];
    assert_eq!(cli(&args), EXIT_OK);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["per_video"].as_array().unwrap().len(), 2);
}

#[test]
fn run_reports_partial_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    let model = tmp.path().join("model.json");
    assert_eq!(cli(&["simulate", "--n", "3", "--seed", "2", "--out", s(&corpus)]), EXIT_OK);
    assert_eq!(cli(&["train", "--corpus", s(&corpus), "--out", s(&model)]), EXIT_OK);
    fs::write(corpus.join("sim_001.thv"), b"THERMV01 truncated").unwrap();

    let out = tmp.path().join("run");
    let args = ["run", "--corpus", s(&corpus), "--model", s(&model), "--out", s(&out)];
    assert_eq!(cli(&args), EXIT_PARTIAL);
    assert!(out.join("failures.json").exists());
    assert_eq!(count_suffix(&out.join("timelines"), ".csv"), 2);

    fs::remove_file(corpus.join("sim_000.ann.json")).unwrap();
    fs::remove_file(corpus.join("sim_002.ann.json")).unwrap();
    let out2 = tmp.path().join("run2");
    let args = ["run", "--corpus", s(&corpus), "--model", s(&model), "--out", s(&out2)];
    assert_eq!(cli(&args), EXIT_DATA);
}
