//! The `eas` command line: validate, chunk, analyze, score.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::backend::{BackendConfig, BackendKind, DEFAULT_API_KEY_ENV, DEFAULT_MAX_ATTEMPTS};
use crate::chunker::chunk_text;
use crate::parser::parse_response;
use crate::pipeline::{analyze_document, RunConfig, DEFAULT_MAX_SENTENCE_RETRIES};
use crate::scorer::{load_gold, score_run};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Parser)]
#[command(name = "eas", version, about = "Taxonomy-driven grammatical error analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Http,
    Fixture,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a taxonomy file and print its diagnostics.
    Validate { taxonomy: PathBuf },
    /// Print the sentences of a text file as index, speaker and text.
    Chunk { input: PathBuf },
    /// Analyze a document and write the findings.
    Analyze {
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        backend: BackendArg,
        /// Fixture response file (fixture backend).
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Endpoint the chat-completion request is POSTed to (http backend).
        #[arg(long)]
        base_url: Option<String>,
        #[arg(long)]
        model: Option<String>,
        /// Name of the environment variable holding the API key.
        #[arg(long, default_value = DEFAULT_API_KEY_ENV)]
        api_key_env: String,
        /// Re-sends per sentence after the first request.
        #[arg(long, default_value_t = DEFAULT_MAX_SENTENCE_RETRIES)]
        max_retries: u32,
        /// HTTP attempts per request, including the first.
        #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
        max_attempts: u32,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Sampling temperature; 0.0 keeps runs deterministic.
        #[arg(long, default_value_t = 0.0)]
        temperature: f64,
        /// Per-request timeout in seconds.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
    /// Compare analysis output with a gold file.
    Score {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        /// Report T1 matches as outliers.
        #[arg(long)]
        three_class: bool,
    },
}

/// Run with the process's arguments and standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            1
        }
    }
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    let io = |e: std::io::Error| e.to_string();
    match command {
        Command::Validate { taxonomy } => {
            let tax = Taxonomy::parse_unchecked(&read(&taxonomy)?).map_err(|e| e.to_string())?;
            let diagnostics = tax.validate();
            for d in &diagnostics {
                writeln!(out, "{d}").map_err(io)?;
            }
            Ok(i32::from(!diagnostics.is_empty()))
        }
        Command::Chunk { input } => {
            for c in chunk_text(&read(&input)?) {
                writeln!(out, "{}\t{}\t{}", c.index, c.speaker.as_deref().unwrap_or("-"), c.text).map_err(io)?;
            }
            Ok(0)
        }
        Command::Analyze {
            taxonomy,
            input,
            out: output,
            backend,
            fixtures,
            base_url,
            model,
            api_key_env,
            max_retries,
            max_attempts,
            parallelism,
            report,
            temperature,
            timeout,
        } => {
            if !(0.0..=1.0).contains(&temperature) {
                return Err("--temperature must be between 0 and 1".into());
            }
            if !(timeout > 0.0 && timeout.is_finite()) {
                return Err("--timeout must be positive".into());
            }
            let backend = BackendConfig {
                kind: match backend {
                    BackendArg::Http => BackendKind::Http,
                    BackendArg::Fixture => BackendKind::Fixture,
                },
                base_url,
                model,
                api_key_env,
                max_attempts,
                backoff_base: crate::backend::DEFAULT_BACKOFF_BASE,
                fixture_path: fixtures,
            };
            let mut config = RunConfig::new(taxonomy, input, output, backend);
            config.report_path = report;
            config.max_sentence_retries = max_retries;
            config.parallelism = parallelism;
            config.temperature = temperature;
            config.request_timeout = Duration::from_secs_f64(timeout);
            let report = analyze_document(&config).map_err(|e| e.to_string())?;
            let abandoned = report.abandoned();
            writeln!(
                err,
                "analyzed {} sentences, {} abandoned, {} findings suppressed",
                report.chunks.len(),
                abandoned,
                report.suppressed.len()
            )
            .map_err(io)?;
            Ok(i32::from(abandoned > 0))
        }
        Command::Score { pred, gold, format, three_class } => {
            let predictions = parse_response(&read(&pred)?).map_err(|e| format!("{}: {e}", pred.display()))?;
            let gold = load_gold(&gold).map_err(|e| e.to_string())?;
            let report = score_run(&predictions, &gold, three_class).map_err(|e| e.to_string())?;
            let text = match format {
                FormatArg::Text => report.to_text(),
                FormatArg::Json => report.to_json(),
            };
            out.write_all(text.as_bytes()).map_err(io)?;
            Ok(0)
        }
    }
}
