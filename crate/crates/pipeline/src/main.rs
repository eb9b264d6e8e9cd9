use clap::{Parser, Subcommand};
use seekcad::batch::{evaluate_batch, read_test_set, render_corpus, write_report, BatchOptions};
use seekcad::cons::KnowledgeConstraint;
use seekcad::extract::DiagnosticRecord;
use seekcad::server::{serve, summarize};
use seekcad::{Pipeline, PipelineConfig, PipelineError, SessionStore};
use seekcad_clients::{
    ClientError, EmbeddingClient, HashingEmbedder, HttpConfig, HttpEmbedder, HttpLlm, HttpVlm, LlmClient, MockLlm,
    MockScript, MockVlm, VlmClient, VlmRequest,
};
use seekcad_core::kernel::{compile_model, TessellationConfig};
use seekcad_core::model::{read_doc, write_doc, SsrModelDoc};
use seekcad_core::script::{auto_fix, lower, parse};
use seekcad_render::{render_steps, write_render_set, RenderConfig};
use seekcad_retrieval::{load_corpus, CorpusIndex, DEFAULT_K, DEFAULT_LAMBDA, INDEX_FILE};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "seekcad", version, about = "Text-to-CAD generation with step-wise visual feedback")]
struct Cli {
    /// Working directory for the index and sessions.
    #[arg(long, global = true, env = "SEEKCAD_HOME", default_value = ".seekcad")]
    home: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adds a JSON-lines corpus to the retrieval index.
    Ingest {
        corpus: PathBuf,
        /// Index directory (default: <home>/index).
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Prints the best corpus matches for a query.
    Retrieve {
        #[arg(short, long)]
        query: String,
        #[arg(short, default_value_t = DEFAULT_K)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Checks a script and builds its solid.
    Compile {
        file: PathBuf,
        /// Write the canonical document here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write a binary STL here.
        #[arg(long)]
        stl: Option<PathBuf>,
    },
    /// Renders the step images of a document (.json or .ssr).
    Render {
        doc: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Runs a generation session.
    Generate {
        #[arg(short, long)]
        query: String,
        #[arg(long, default_value_t = 1)]
        max_refine: usize,
        /// Replay model replies from a JSON-lines mock script instead of calling backends.
        #[arg(long)]
        mock: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Applies a modification to a finished session.
    Edit {
        session: String,
        #[arg(short, long)]
        query: String,
        #[arg(long)]
        mock: Option<PathBuf>,
    },
    /// Evaluates generations against reference models.
    Eval {
        #[arg(long)]
        set: PathBuf,
        #[arg(short, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        max_refine: usize,
        #[arg(long)]
        mock: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
        /// Report directory (default: <home>/eval).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Ask the vision model for a 1 to 5 score of each result.
        #[arg(long)]
        g_score: bool,
        /// Compare each result against renders of the corpus.
        #[arg(long)]
        novel: bool,
    },
    /// Serves the session API.
    Serve {
        #[arg(long, default_value_t = 8787)]
        port: u16,
        /// Directory with index.json, or with *.jsonl corpora to ingest in memory.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        max_refine: usize,
        #[arg(long)]
        mock: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Other(String),
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        CliError::Pipeline(e.into())
    }
}

fn other(e: impl std::fmt::Display) -> CliError {
    CliError::Other(e.to_string())
}

/// Stands in for a vision backend that was never configured.
struct NoVlm;

impl VlmClient for NoVlm {
    fn name(&self) -> String {
        "unconfigured".into()
    }
    fn send(&self, _: &VlmRequest) -> Result<String, ClientError> {
        Err(ClientError::Config("SEEKCAD_VLM_URL is not set".into()))
    }
}

struct Clients {
    llm: Arc<dyn LlmClient>,
    vlm: Arc<dyn VlmClient>,
    embedder: Arc<dyn EmbeddingClient>,
}

fn clients(mock: Option<&Path>) -> Result<Clients, CliError> {
    if let Some(path) = mock {
        let script = MockScript::load(path)?;
        return Ok(Clients {
            llm: Arc::new(MockLlm(script.clone())),
            vlm: Arc::new(MockVlm(script)),
            embedder: Arc::new(HashingEmbedder::default()),
        });
    }
    let llm = HttpConfig::llm_from_env().ok_or_else(|| other("SEEKCAD_LLM_URL is not set; use --mock for offline runs"))?;
    let vlm: Arc<dyn VlmClient> = match HttpConfig::vlm_from_env() {
        Some(cfg) => Arc::new(HttpVlm { cfg }),
        None => Arc::new(NoVlm),
    };
    Ok(Clients {
        llm: Arc::new(HttpLlm { cfg: llm }),
        vlm,
        embedder: embedder()?,
    })
}

fn embedder() -> Result<Arc<dyn EmbeddingClient>, CliError> {
    Ok(match HttpConfig::embed_from_env() {
        Some(cfg) => Arc::new(HttpEmbedder::connect(cfg)?),
        None => Arc::new(HashingEmbedder::default()),
    })
}

fn load_index(dir: &Path) -> Result<Option<CorpusIndex>, CliError> {
    if dir.join(INDEX_FILE).is_file() {
        Ok(Some(CorpusIndex::load(dir).map_err(other)?))
    } else {
        Ok(None)
    }
}

/// `index.json` when present, otherwise every `*.jsonl` in the directory.
fn index_from_corpus_dir(dir: &Path, embedder: &dyn EmbeddingClient) -> Result<CorpusIndex, CliError> {
    if let Some(idx) = load_index(dir)? {
        return Ok(idx);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| other(format!("{}: {e}", dir.display())))?
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    let mut idx = CorpusIndex::empty(embedder);
    for f in files {
        idx.ingest(load_corpus(&f).map_err(other)?, embedder).map_err(other)?;
    }
    Ok(idx)
}

fn pipeline(
    home: &Path,
    index: Option<CorpusIndex>,
    c: Clients,
    max_refine: usize,
) -> Pipeline {
    if index.is_none() {
        log::warn!("no corpus index loaded; prompts will carry the bare query");
    }
    Pipeline {
        cons: KnowledgeConstraint::shipped(),
        config: PipelineConfig { max_refine, ..PipelineConfig::default() },
        llm: c.llm,
        vlm: c.vlm,
        embedder: c.embedder,
        index: index.map(Arc::new),
        store: SessionStore::new(home.join("sessions")),
    }
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn read_any_doc(path: &Path) -> Result<SsrModelDoc, CliError> {
    let bytes = std::fs::read(path).map_err(|e| other(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|x| x == "ssr") {
        let text = String::from_utf8(bytes).map_err(other)?;
        let script = parse(&text).map_err(|d| other(d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")))?;
        lower(&script).map_err(|e| other(format!("line {}: {}", e.span.line, e.message)))
    } else {
        read_doc(&bytes).map_err(other)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let home = cli.home;
    let index_dir = |given: Option<PathBuf>| given.unwrap_or_else(|| home.join("index"));
    match cli.command {
        Command::Ingest { corpus, index } => {
            let dir = index_dir(index);
            let emb = embedder()?;
            let mut idx = match load_index(&dir)? {
                Some(i) => i,
                None => CorpusIndex::empty(emb.as_ref()),
            };
            let entries = load_corpus(&corpus).map_err(other)?;
            let n = entries.len();
            let skipped = idx.ingest(entries, emb.as_ref()).map_err(other)?;
            idx.save(&dir).map_err(other)?;
            println!("ingested {} of {n} entries; index holds {} at {}", n - skipped.len(), idx.len(), dir.display());
            for s in skipped {
                println!("skipped {s}");
            }
        }
        Command::Retrieve { query, k, lambda, index } => {
            let dir = index_dir(index);
            let idx = load_index(&dir)?.ok_or_else(|| other(format!("no index at {}; run ingest first", dir.display())))?;
            let emb = embedder()?;
            for (rank, h) in idx.hybrid_search(&query, k, lambda, emb.as_ref()).map_err(other)?.iter().enumerate() {
                println!(
                    "{}. {}  final {:.4}  vec {:.4}  full {:.4}  {}",
                    rank + 1,
                    h.entry.entry_id,
                    h.g_final,
                    h.g_vec,
                    h.g_full,
                    h.entry.description
                );
            }
        }
        Command::Compile { file, json, stl } => {
            let text = std::fs::read_to_string(&file).map_err(|e| other(format!("{}: {e}", file.display())))?;
            let (fixed, fixes) = auto_fix(&text);
            for d in &fixes {
                eprintln!("{d}");
            }
            let script = match parse(&fixed) {
                Ok(s) => s,
                Err(diags) => {
                    for d in &diags {
                        eprintln!("{d}");
                    }
                    return Err(other(format!("{}: {} problem(s)", file.display(), diags.len())));
                }
            };
            for d in &script.warnings {
                eprintln!("{d}");
            }
            let doc = lower(&script).map_err(|e| other(format!("line {}: {}", e.span.line, e.message)))?;
            let mesh = compile_model(&doc, &TessellationConfig::default()).map_err(other)?;
            println!(
                "triplets {}  triangles {}  watertight {}  volume {:.6}",
                doc.triplets.len(),
                mesh.triangles.len(),
                mesh.is_watertight(),
                mesh.signed_volume()
            );
            if let Some(p) = json {
                std::fs::write(&p, write_doc(&doc)).map_err(other)?;
            }
            if let Some(p) = stl {
                std::fs::write(&p, mesh.to_stl_bytes()).map_err(other)?;
            }
        }
        Command::Render { doc, out } => {
            let doc = read_any_doc(&doc)?;
            let set = render_steps(&doc, &RenderConfig::default()).map_err(other)?;
            for e in write_render_set(&set, &out).map_err(other)? {
                println!("{}", out.join(&e.file).display());
            }
        }
        Command::Generate { query, max_refine, mock, index } => {
            let c = clients(mock.as_deref())?;
            let p = pipeline(&home, load_index(&index_dir(index))?, c, max_refine);
            let id = seekcad::pipeline::new_session_id();
            let st = p.run_session_with_id(&id, &query, &mut |s| eprintln!("[{}] {:?}", s.session_id, s.status))?;
            print_json(&summarize(&st));
            eprintln!("session directory: {}", p.store.dir(&id).display());
        }
        Command::Edit { session, query, mock } => {
            let p = pipeline(&home, None, clients(mock.as_deref())?, 1);
            let turn = p.edit_session(&session, &query)?;
            for d in &turn.diagnostics {
                let d: &DiagnosticRecord = d;
                eprintln!("{}[{}] line {}: {}", d.severity, d.code, d.line, d.message);
            }
            print_json(&summarize(&p.store.load(&session)?));
        }
        Command::Eval { set, k, max_refine, mock, index, out, g_score, novel } => {
            let text = std::fs::read_to_string(&set).map_err(|e| other(format!("{}: {e}", set.display())))?;
            let cases = read_test_set(&text)?;
            let idx = load_index(&index_dir(index))?;
            let p = pipeline(&home, idx, clients(mock.as_deref())?, max_refine);
            let novelty_corpus = match (&p.index, novel) {
                (Some(idx), true) => Some(render_corpus(&p, &idx.entries.iter().map(|e| e.code.clone()).collect::<Vec<_>>())),
                (None, true) => return Err(other("--novel needs a corpus index")),
                _ => None,
            };
            let opts = BatchOptions { k, g_score, novelty_corpus, ..BatchOptions::default() };
            let report = evaluate_batch(&p, &cases, &opts)?;
            let out = out.unwrap_or_else(|| home.join("eval"));
            write_report(&report, &out)?;
            print_json(&report.aggregate);
            eprintln!("report written to {}", out.display());
        }
        Command::Serve { port, corpus, max_refine, mock } => {
            let c = clients(mock.as_deref())?;
            let idx = match corpus {
                Some(dir) => Some(index_from_corpus_dir(&dir, c.embedder.as_ref())?),
                None => load_index(&home.join("index"))?,
            };
            let p = Arc::new(pipeline(&home, idx, c, max_refine));
            std::fs::create_dir_all(p.store.root()).map_err(other)?;
            let rt = tokio::runtime::Runtime::new().map_err(other)?;
            rt.block_on(serve(p, ([127, 0, 0, 1], port).into())).map_err(other)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
