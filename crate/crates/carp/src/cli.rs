//! `carp` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 training or
//! test-set error, 4 invalid hand or rank token, 5 no dealer upcard.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use carp_core::classify::{knn_predict, patch_features};
use carp_core::dataset::{
    evaluate_scene, evaluate_synthetic, load_scene_dir, load_training_dir, random_scene_spec, render_scene,
    write_scene_dir, write_training_dir, DetectionStats, EvalReport, Face, RandomSceneOptions, SceneEvaluation,
};
use carp_core::pipeline::{analyze, AdviceGap, PipelineConfig};
use carp_core::strategy::RoleConfig;
use carp_core::{ImageRgb, KnnModel};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::advice::{recommend_tokens, split_tokens, AdviceError};
use crate::model::{synthetic_patches, ModelError, ModelSource};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;
pub const EXIT_HAND: i32 = 4;
pub const EXIT_UPCARD: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "carp", version, about = "Playing-card detection and blackjack advice from table photos")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Directory of `<index>-<label>/` folders holding 28x28 corner patches.
    #[arg(long, env = "CARP_TRAIN_DIR")]
    pub train_dir: Option<PathBuf>,
    /// Saved model JSON (takes precedence over --train-dir).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Train on the built-in synthetic card renders.
    #[arg(long)]
    pub synthetic_model: bool,
    /// Neighbours consulted per prediction.
    #[arg(long)]
    pub k: Option<usize>,
}

impl ModelArgs {
    fn source(&self) -> ModelSource<'_> {
        ModelSource {
            model_file: self.model.as_deref(),
            train_dir: self.train_dir.as_deref(),
            synthetic: self.synthetic_model,
        }
    }
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Cards centred above this fraction of the image height are the
    /// dealer's; by default rows are found by clustering.
    #[arg(long)]
    pub dealer_split: Option<f64>,
    /// K-means seed.
    #[arg(long)]
    pub kmeans_seed: Option<u64>,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        if let Some(f) = self.dealer_split {
            cfg.roles = RoleConfig::SplitFraction(f);
        }
        if let Some(s) = self.kmeans_seed {
            cfg.kmeans.seed = s;
        }
        cfg
    }
}

#[derive(Debug, Args)]
pub struct ImageArgs {
    pub image: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Print the analysis as JSON.
    #[arg(long)]
    pub json: bool,
    /// Write the input with card outlines and labels drawn on it.
    #[arg(long, value_name = "OUT.png")]
    pub annotate: Option<PathBuf>,
    /// Write intermediate images (clusters, mask, contours, cards, patches).
    #[arg(long, value_name = "DIR")]
    pub debug_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find and classify the cards in a photo.
    Detect(ImageArgs),
    /// Detect cards, split player and dealer, and recommend a move.
    Advise(ImageArgs),
    /// Recommend a move for a hand given as rank tokens.
    Recommend {
        /// Player cards, e.g. `A,7`.
        #[arg(long)]
        player: String,
        /// Dealer upcard.
        #[arg(long)]
        dealer: String,
        #[arg(long)]
        json: bool,
    },
    /// Classification report against labelled data.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Either a training-layout directory of patches or a directory of
        /// scene images with JSON sidecars.
        #[arg(long, conflicts_with = "synthetic")]
        test_dir: Option<PathBuf>,
        /// Number of random synthetic scenes to evaluate on.
        #[arg(long)]
        synthetic: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Train on a directory and save the model as JSON.
    Train {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render random labelled scenes (PNG + JSON sidecar each).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        min_cards: usize,
        #[arg(long, default_value_t = 6)]
        max_cards: usize,
        #[arg(long)]
        noise: Option<f64>,
        /// Plain white cards (no faces).
        #[arg(long)]
        blank: bool,
    },
    /// Write the built-in synthetic training set as a training directory.
    SynthTrain {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory of static UI assets served at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

/// Process entry point; returns the exit code.
pub fn main_entry() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

struct Failure(i32, String);

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure(EXIT_TRAINING, format!("training failed: {e}"))
    }
}

fn io_fail(what: impl std::fmt::Display) -> Failure {
    Failure(EXIT_IO, what.to_string())
}

/// Parses `args` and runs the command, writing to `out` and `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "carp: {msg}");
            code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Detect(a) => image_command(&a, false, out),
        Command::Advise(a) => image_command(&a, true, out),
        Command::Recommend { player, dealer, json } => {
            let m = recommend_tokens(&split_tokens(&player), &dealer).map_err(|e| match e {
                AdviceError::BadToken(_) | AdviceError::InvalidHand(_) => Failure(EXIT_HAND, e.to_string()),
            })?;
            if json {
                let rec = carp_core::pipeline::Recommendation::new(m);
                writeln!(out, "{}", serde_json::to_string(&rec).expect("serializable")).map_err(io_fail)?;
            } else {
                writeln!(out, "{}", m.display()).map_err(io_fail)?;
            }
            Ok(EXIT_OK)
        }
        Command::Eval {
            model,
            pipeline,
            test_dir,
            synthetic,
            seed,
            json,
        } => eval_command(&model, &pipeline, test_dir.as_deref(), synthetic, seed, json, out, err),
        Command::Train { model, out: path } => {
            let m = model.source().load(model.k, &PipelineConfig::default())?;
            m.save(&path).map_err(io_fail)?;
            writeln!(out, "saved {} examples (k = {}) to {}", m.len(), m.k(), path.display()).map_err(io_fail)?;
            Ok(EXIT_OK)
        }
        Command::Synth {
            out: dir,
            count,
            seed,
            min_cards,
            max_cards,
            noise,
            blank,
        } => {
            if min_cards > max_cards || max_cards > 6 {
                return Err(Failure(EXIT_USAGE, "card counts must satisfy min <= max <= 6".into()));
            }
            let mut opts = RandomSceneOptions {
                min_cards,
                max_cards,
                ..Default::default()
            };
            if let Some(n) = noise {
                opts.noise_sigma = n;
            }
            let mut scenes = Vec::with_capacity(count);
            for i in 0..count as u64 {
                let mut spec = random_scene_spec(seed.wrapping_add(i), &opts, None)
                    .map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
                if blank {
                    spec.cards.iter_mut().for_each(|c| c.face = Face::Blank);
                }
                scenes.push(render_scene(&spec).map_err(|e| Failure(EXIT_USAGE, e.to_string()))?);
            }
            let paths = write_scene_dir(&dir, &scenes).map_err(io_fail)?;
            writeln!(out, "wrote {} scenes to {}", paths.len(), dir.display()).map_err(io_fail)?;
            Ok(EXIT_OK)
        }
        Command::SynthTrain { out: dir } => {
            let patches = synthetic_patches(&PipelineConfig::default())?;
            write_training_dir(&dir, &patches).map_err(io_fail)?;
            writeln!(out, "wrote {} patches to {}", patches.len(), dir.display()).map_err(io_fail)?;
            Ok(EXIT_OK)
        }
        Command::Serve {
            model,
            pipeline,
            host,
            port,
            static_dir,
        } => {
            let cfg = pipeline.config();
            let m = model.source().load(model.k, &cfg)?;
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| Failure(EXIT_USAGE, format!("bad address: {e}")))?;
            let _ = writeln!(err, "carp: model has {} examples (k = {}); listening on http://{addr}", m.len(), m.k());
            let rt = tokio::runtime::Runtime::new().map_err(io_fail)?;
            rt.block_on(crate::server::serve(addr, m, cfg, static_dir)).map_err(io_fail)?;
            Ok(EXIT_OK)
        }
    }
}

fn image_command(a: &ImageArgs, advise: bool, out: &mut dyn Write) -> Result<i32, Failure> {
    let img = ImageRgb::load(&a.image).map_err(|e| io_fail(format!("{}: {e}", a.image.display())))?;
    let cfg = a.pipeline.config();
    let model = a.model.source().load(a.model.k, &cfg)?;
    let analysis = analyze(&img, &model, &cfg).map_err(|e| Failure(EXIT_IO, e.to_string()))?;
    if let Some(path) = &a.annotate {
        analysis.annotate(&img).save_png(path).map_err(io_fail)?;
    }
    if let Some(dir) = &a.debug_dir {
        analysis.write_debug(&img, dir).map_err(io_fail)?;
    }
    let mut report = analysis.report(img.width(), img.height());
    if !advise {
        report.recommendation = None;
        report.note = None;
    }
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializable")).map_err(io_fail)?;
    } else {
        writeln!(out, "{} card(s)", report.cards.len()).map_err(io_fail)?;
        for c in &report.cards {
            let [x, y] = centroid(&c.quad);
            let role = serde_json::to_value(c.role).expect("serializable");
            writeln!(
                out,
                "  {:<5} {:<10} at ({x:.1}, {y:.1})",
                c.label.as_str(),
                role.as_str().unwrap_or_default()
            )
            .map_err(io_fail)?;
        }
        if advise {
            let hand: Vec<&str> = report.player_hand.iter().map(|r| r.as_str()).collect();
            writeln!(out, "player: {}", hand.join(",")).map_err(io_fail)?;
            writeln!(out, "dealer: {}", report.dealer_upcard.map(|r| r.as_str()).unwrap_or("-")).map_err(io_fail)?;
            if let Some(r) = &report.recommendation {
                writeln!(out, "{}", r.display).map_err(io_fail)?;
            }
        }
    }
    if advise {
        return match analysis.advice() {
            Ok(_) => Ok(EXIT_OK),
            Err(AdviceGap::TooFewPlayerCards) => Err(Failure(EXIT_HAND, "invalid hand: fewer than two player cards".into())),
            Err(AdviceGap::NoUpcard) => Err(Failure(EXIT_UPCARD, "no dealer upcard visible".into())),
        };
    }
    Ok(EXIT_OK)
}

fn centroid(q: &[[f64; 2]; 4]) -> [f64; 2] {
    let sx: f64 = q.iter().map(|p| p[0]).sum();
    let sy: f64 = q.iter().map(|p| p[1]).sum();
    [sx / 4.0, sy / 4.0]
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    report: &'a EvalReport,
    detection: Option<DetectionStats>,
}

#[allow(clippy::too_many_arguments)]
fn eval_command(
    model_args: &ModelArgs,
    pipeline: &PipelineArgs,
    test_dir: Option<&Path>,
    synthetic: Option<usize>,
    seed: u64,
    json: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let cfg = pipeline.config();
    let mut source = model_args.source();
    if source.is_empty() && synthetic.is_some() {
        let _ = writeln!(err, "carp: no training data given; training on synthetic renders");
        source.synthetic = true;
    }
    let (report, detection) = match (test_dir, synthetic) {
        (Some(dir), _) => {
            if !dir.is_dir() {
                return Err(io_fail(format!("test directory not found: {}", dir.display())));
            }
            let model = source.load(model_args.k, &cfg)?;
            if has_subdirs(dir).map_err(io_fail)? {
                (eval_patches(&model, dir)?, None)
            } else {
                let scenes = eval_scene_dir(&model, &cfg, dir)?;
                (EvalReport::from_scenes(&scenes), Some(DetectionStats::from_scenes(&scenes)))
            }
        }
        (None, Some(0)) => return Err(Failure(EXIT_TRAINING, "empty test set".into())),
        (None, Some(n)) => {
            let model = source.load(model_args.k, &cfg)?;
            let scenes = evaluate_synthetic(&model, &cfg, &RandomSceneOptions::default(), n, seed)
                .map_err(|e| Failure(EXIT_IO, e.to_string()))?;
            (EvalReport::from_scenes(&scenes), Some(DetectionStats::from_scenes(&scenes)))
        }
        (None, None) => return Err(Failure(EXIT_USAGE, "pass --test-dir or --synthetic N".into())),
    };
    if report.total() + report.missed_total() == 0 {
        return Err(Failure(EXIT_TRAINING, "empty test set".into()));
    }
    if json {
        let o = EvalOutput {
            report: &report,
            detection,
        };
        writeln!(out, "{}", serde_json::to_string_pretty(&o).expect("serializable")).map_err(io_fail)?;
    } else {
        write!(out, "{}", report.to_table()).map_err(io_fail)?;
        if let Some(d) = detection {
            writeln!(
                out,
                "\ndetection recall: {}/{} ({:.3}), spurious: {}",
                d.matched,
                d.truths,
                d.recall(),
                d.spurious
            )
            .map_err(io_fail)?;
        }
    }
    Ok(EXIT_OK)
}

fn has_subdirs(dir: &Path) -> std::io::Result<bool> {
    for e in std::fs::read_dir(dir)? {
        if e?.path().is_dir() {
            return Ok(true);
        }
    }
    Ok(false)
}

fn eval_patches(model: &KnnModel, dir: &Path) -> Result<EvalReport, Failure> {
    let patches = load_training_dir(dir).map_err(|e| Failure(EXIT_TRAINING, e.to_string()))?;
    let mut pairs = Vec::with_capacity(patches.len());
    for p in &patches {
        let f = patch_features(&p.patch, model.hog_params()).map_err(|e| Failure(EXIT_TRAINING, e.to_string()))?;
        let pred = knn_predict(model, &f).map_err(|e| Failure(EXIT_TRAINING, e.to_string()))?;
        pairs.push((p.label, pred.label));
    }
    Ok(EvalReport::from_outcomes(&pairs, &[], &[]))
}

fn eval_scene_dir(model: &KnnModel, cfg: &PipelineConfig, dir: &Path) -> Result<Vec<SceneEvaluation>, Failure> {
    let files = load_scene_dir(dir).map_err(|e| Failure(EXIT_IO, e.to_string()))?;
    files
        .iter()
        .map(|f| {
            evaluate_scene(model, cfg, &f.image, &f.sidecar.ground_truth())
                .map_err(|e| Failure(EXIT_IO, format!("{}: {e}", f.image_path.display())))
        })
        .collect()
}
