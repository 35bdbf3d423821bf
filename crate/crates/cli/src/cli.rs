use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "vidcue", version, about = "Prompt pipeline, evidence tooling, toy training and scoring for AI-video defect annotation")]
pub struct Cli {
    /// key=value file; must come before the subcommand. Flags override it.
    #[arg(long, global = false, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Where to write the run manifest. Defaults to run-manifest.json in the
    /// output directory, or stderr when the command has none.
    #[arg(long, value_name = "FILE", global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Reduce embeddings to 3-D, run k-means and report the top clusters.
    Cluster(ClusterArgs),
    /// Per-cluster TF-IDF keywords, representative prompts and content labels.
    Keywords(KeywordsArgs),
    /// Pick a balanced prompt subset by Monte Carlo search.
    SamplePrompts(SampleArgs),
    /// Chunk clips and keep chunks that match some prompt.
    ChunkFilter(ChunkArgs),
    /// Check annotation records against the evidence rules.
    Validate(ValidateArgs),
    /// Parse reasoning traces into structured records.
    Parse(ParseArgs),
    /// Build distillation requests and verified SFT records.
    DistillPrep(DistillArgs),
    /// Train the toy joint-loss model on the planted-marker corpus.
    TrainToy(TrainArgs),
    /// Detection recall, accuracy, explanation precision and diversity.
    Score(ScoreArgs),
    /// Source and category counts over annotations.
    Stats(StatsArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Cluster(_) => "cluster",
            Command::Keywords(_) => "keywords",
            Command::SamplePrompts(_) => "sample-prompts",
            Command::ChunkFilter(_) => "chunk-filter",
            Command::Validate(_) => "validate",
            Command::Parse(_) => "parse",
            Command::DistillPrep(_) => "distill-prep",
            Command::TrainToy(_) => "train-toy",
            Command::Score(_) => "score",
            Command::Stats(_) => "stats",
            Command::Serve(_) => "serve",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Cluster(a) => Some(a.seed),
            Command::SamplePrompts(a) => Some(a.seed),
            Command::TrainToy(a) => Some(a.seed),
            _ => None,
        }
    }

    pub fn out_dir(&self) -> Option<&PathBuf> {
        match self {
            Command::Cluster(a) => Some(&a.out),
            Command::Keywords(a) => Some(&a.out),
            Command::SamplePrompts(a) => Some(&a.out),
            Command::ChunkFilter(a) => a.out.as_ref(),
            Command::Parse(a) => a.out.as_ref(),
            Command::DistillPrep(a) => Some(&a.out),
            Command::TrainToy(a) => Some(&a.out),
            Command::Score(a) => a.out.as_ref(),
            Command::Stats(a) => a.out.as_ref(),
            Command::Validate(_) | Command::Serve(_) => None,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    /// EMB1 binary or CSV embeddings, one row per prompt.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// CSV of precomputed x,y,z per row; skips the built-in PCA.
    #[arg(long)]
    pub coords: Option<PathBuf>,
    #[arg(long, default_value_t = 80)]
    pub k: usize,
    #[arg(long, default_value_t = 30)]
    pub top_m: usize,
    #[arg(long, default_value_t = 0.89)]
    pub coverage: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct KeywordsArgs {
    /// TSV of id, text, origin.
    #[arg(long)]
    pub prompts: PathBuf,
    /// assignments.tsv written by `cluster`, aligned with the prompt rows.
    #[arg(long)]
    pub assignments: PathBuf,
    /// top_clusters.json from `cluster`; all clusters are used when absent.
    #[arg(long)]
    pub top: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub per_cluster: usize,
    #[arg(long, default_value_t = 30)]
    pub prompts_per_cluster: usize,
    #[arg(long, default_value_t = 2)]
    pub min_keywords: usize,
    /// One stopword per line, replacing the built-in list.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Generated prompts to add per cluster with the offline language model.
    #[arg(long, default_value_t = 0)]
    pub augment: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    /// candidates.tsv written by `keywords`.
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ChunkArgs {
    /// TSV of video_id and duration in seconds.
    #[arg(long)]
    pub durations: PathBuf,
    /// CSV with one row of prompt similarities per chunk, in plan order.
    #[arg(long)]
    pub similarity: PathBuf,
    #[arg(long, default_value_t = vidcue_core::corpus::DEFAULT_SIMILARITY_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    /// Annotation JSON, JSON lines, store records, export archives or directories of them.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ParseArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Reject any deviation from the grammar (default).
    #[arg(long, overrides_with = "lenient")]
    pub strict: bool,
    /// Repair common deviations and report them as warnings.
    #[arg(long, overrides_with = "strict")]
    pub lenient: bool,
    /// Directory for one <name>.trace.json per input; stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DistillArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[arg(long, default_value_t = vidcue_core::distill::DEFAULT_MAX_CUES)]
    pub max_cues: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// alpha:beta weighting of the language-model and classifier terms.
    #[arg(long, default_value = "1:10")]
    pub weights: String,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = vidcue_core::loss::DEFAULT_HIDDEN)]
    pub hidden: usize,
    /// Parameter initialisation seed.
    #[arg(long)]
    pub seed: u64,
    /// Seed of the planted-marker corpus.
    #[arg(long, default_value_t = vidcue_core::loss::DEFAULT_CORPUS_SEED)]
    pub corpus_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    /// JSON lines of {model?, video_id, source, truth, predicted}.
    #[arg(long)]
    pub detections: PathBuf,
    /// CSV of [model,]video_id,cue_index,valid.
    #[arg(long)]
    pub judgments: Option<PathBuf>,
    /// JSON lines of {model?, video_id, cue_index, defects}.
    #[arg(long)]
    pub matches: Option<PathBuf>,
    /// JSON lines of {model?, video_id, output}; cues are matched against --gt.
    #[arg(long, requires = "gt")]
    pub traces: Option<PathBuf>,
    /// Ground-truth annotations for --traces.
    #[arg(long, num_args = 1..)]
    pub gt: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.3)]
    pub tau: f64,
    #[arg(long, default_value_t = 100.0)]
    pub radius: f64,
    /// Match cues regardless of category.
    #[arg(long)]
    pub any_category: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long, env = "VIDCUE_STORE")]
    pub store: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// "stub" or the base URL of a point-to-mask server.
    #[arg(long, default_value = "stub")]
    pub segmenter: String,
    #[arg(long, default_value_t = 5000)]
    pub segmenter_timeout_ms: u64,
    /// Export archive to load into an empty store before serving.
    #[arg(long)]
    pub import: Option<PathBuf>,
}
