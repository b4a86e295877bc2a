use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use carp_core::dataset::{render_scene, CardPlacement, Face, SceneSpec};
use carp_core::pipeline::AnalysisReport;
use carp_core::{CardLabel, ImageRgb};
use tempfile::TempDir;

struct Fixture {
    _dir: TempDir,
    train: PathBuf,
    model: PathBuf,
}

/// Synthetic training directory and a model trained on it, built once by
/// the binary itself.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let train = dir.path().join("train");
        let model = dir.path().join("model.json");
        let o = carp(&["synth-train", "--out", train.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let o = carp(&["train", "--train-dir", train.to_str().unwrap(), "--out", model.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        Fixture { _dir: dir, train, model }
    })
}

fn carp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carp"))
        .args(args)
        .env_remove("CARP_TRAIN_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn card(label: CardLabel, x: f64, y: f64) -> CardPlacement {
    CardPlacement::upright(Face::for_label(label, false), (x, y), 110.0)
}

fn write_scene(dir: &Path, name: &str, cards: Vec<CardPlacement>) -> PathBuf {
    let mut spec = SceneSpec::new(720, 540, 3);
    spec.noise_sigma = 2.0;
    spec.cards = cards;
    let path = dir.join(name);
    render_scene(&spec).unwrap().image.save_png(&path).unwrap();
    path
}

fn table(dir: &Path, name: &str, dealer: &[CardLabel], player: &[CardLabel]) -> PathBuf {
    let mut cards = Vec::new();
    for (i, &l) in dealer.iter().enumerate() {
        cards.push(card(l, 260.0 + 180.0 * i as f64, 120.0));
    }
    for (i, &l) in player.iter().enumerate() {
        cards.push(card(l, 260.0 + 180.0 * i as f64, 410.0));
    }
    write_scene(dir, name, cards)
}

fn model_args() -> Vec<String> {
    vec!["--model".into(), fixture().model.to_str().unwrap().into()]
}

fn run_with_model(cmd: &str, image: &Path, extra: &[&str]) -> Output {
    let mut args: Vec<String> = vec![cmd.into(), image.to_str().unwrap().into()];
    args.extend(model_args());
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    carp(&refs)
}

#[test]
fn recommend_prints_the_move() {
    let o = carp(&["recommend", "--player", "A,10", "--dealer", "5"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "Blackjack, you win!");
    let o = carp(&["recommend", "--player", "8,8", "--dealer", "10", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["display"], "Split.");
}

#[test]
fn recommend_exit_codes() {
    assert_eq!(code(&carp(&["recommend", "--player", "9", "--dealer", "5"])), 4);
    assert_eq!(code(&carp(&["recommend", "--player", "9,X", "--dealer", "5"])), 4);
    assert_eq!(code(&carp(&["recommend", "--player", "9,4"])), 1);
    assert_eq!(code(&carp(&["no-such-command"])), 1);
}

#[test]
fn missing_image_is_an_io_error() {
    let o = run_with_model("detect", Path::new("/definitely/not/here.png"), &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn no_training_source_is_a_training_error() {
    let dir = tempfile::tempdir().unwrap();
    let img = write_scene(dir.path(), "empty.png", vec![]);
    let o = carp(&["detect", img.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let o = carp(&["detect", img.to_str().unwrap(), "--train-dir", "/definitely/not/here"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn detect_json_lists_the_cards() {
    let dir = tempfile::tempdir().unwrap();
    let labels = [CardLabel::King, CardLabel::Four, CardLabel::Ten, CardLabel::Ace];
    let cards = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| card(l, 110.0 + 165.0 * i as f64, 270.0))
        .collect();
    let img = write_scene(dir.path(), "four.png", cards);
    let o = run_with_model("detect", &img, &["--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: AnalysisReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((report.width, report.height), (720, 540));
    assert!(report.recommendation.is_none());
    let mut got: Vec<(f64, CardLabel)> = report.cards.iter().map(|c| (c.quad[0][0], c.label)).collect();
    got.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert_eq!(got.iter().map(|g| g.1).collect::<Vec<_>>(), labels);
    // the JSON re-emits identically
    let again: AnalysisReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(again, report);
}

#[test]
fn dark_image_has_no_cards() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("dark.png");
    ImageRgb::filled(320, 240, [10, 12, 10]).unwrap().save_png(&img).unwrap();
    let o = run_with_model("detect", &img, &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("0 card(s)"));
}

#[test]
fn annotate_and_debug_outputs_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let img = table(dir.path(), "t.png", &[CardLabel::Nine], &[CardLabel::Two, CardLabel::Three]);
    let ann = dir.path().join("ann.png");
    let dbg = dir.path().join("debug");
    let o = run_with_model(
        "detect",
        &img,
        &["--annotate", ann.to_str().unwrap(), "--debug-dir", dbg.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(ImageRgb::load(&ann).unwrap().width(), 720);
    for f in ["clusters.png", "mask.png", "contours.png", "card_00.png", "patch_02.png"] {
        assert!(dbg.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn advise_recommends_from_a_table_photo() {
    let dir = tempfile::tempdir().unwrap();
    let img = table(dir.path(), "d.png", &[CardLabel::Back, CardLabel::Six], &[CardLabel::Ace, CardLabel::Seven]);
    let o = run_with_model("advise", &img, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("player: A,7"), "{text}");
    assert!(text.contains("dealer: 6"), "{text}");
    assert_eq!(text.lines().last(), Some("Double."));

    let img = table(dir.path(), "s.png", &[CardLabel::Ten], &[CardLabel::Eight, CardLabel::Eight]);
    let o = run_with_model("advise", &img, &["--json"]);
    let report: AnalysisReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report.recommendation.unwrap().display, "Split.");
}

#[test]
fn advise_exit_codes_for_incomplete_tables() {
    let dir = tempfile::tempdir().unwrap();
    let one = table(dir.path(), "one.png", &[CardLabel::Back, CardLabel::Nine], &[CardLabel::Four]);
    assert_eq!(code(&run_with_model("advise", &one, &[])), 4);
    let hidden = table(dir.path(), "hidden.png", &[CardLabel::Back], &[CardLabel::Four, CardLabel::Nine]);
    let o = run_with_model("advise", &hidden, &["--json"]);
    assert_eq!(code(&o), 5);
    let report: AnalysisReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(report.recommendation.is_none() && report.note.is_some());
}

#[test]
fn eval_on_the_training_set_with_one_neighbour_is_perfect() {
    let train = fixture().train.to_str().unwrap();
    let o = carp(&["eval", "--train-dir", train, "--test-dir", train, "--k", "1", "--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["accuracy"], 1.0);
    assert_eq!(v["report"]["labels"].as_array().unwrap().len(), 14);
}

#[test]
fn eval_rejects_an_empty_test_set() {
    assert_eq!(code(&carp(&["eval", "--synthetic", "0"])), 3);
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["eval".to_string(), "--test-dir".into(), dir.path().to_str().unwrap().into()];
    args.extend(model_args());
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(code(&carp(&refs)), 3);
}

#[test]
fn synth_scenes_evaluate_as_a_scene_directory() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    let o = carp(&["synth", "--out", scenes.to_str().unwrap(), "--count", "3", "--seed", "11"]);
    assert_eq!(code(&o), 0);
    let mut names: Vec<String> = std::fs::read_dir(&scenes)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    assert_eq!(names[0], "scene_0000.json");

    let mut args = vec!["eval".to_string(), "--test-dir".into(), scenes.to_str().unwrap().into(), "--json".into()];
    args.extend(model_args());
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = carp(&refs);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["detection"]["truths"], v["detection"]["matched"]);
}

#[test]
fn synth_rejects_more_than_six_cards() {
    let dir = tempfile::tempdir().unwrap();
    let o = carp(&["synth", "--out", dir.path().to_str().unwrap(), "--max-cards", "7"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn train_dir_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let img = table(dir.path(), "env.png", &[CardLabel::Five], &[CardLabel::Ten, CardLabel::Two]);
    let o = Command::new(env!("CARGO_BIN_EXE_carp"))
        .args(["advise", img.to_str().unwrap()])
        .env("CARP_TRAIN_DIR", &fixture().train)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().last(), Some("Stand."));
}
