use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};

use crate::EvalArgs;
use crnforge_client::Client;
use crnforge_core::datagen::{
    generate_dataset, import_jsonl, validation_fixtures, write_jsonl, DatasetSpec, ExportStyle, Ingredients,
};
use crnforge_core::dsl::serialize_reaction;
use crnforge_core::equivalence::MatchMode;
use crnforge_core::gcd::{compile, crn_grammar, Grammar, RecognizerState};
use crnforge_core::prompt::FewShotStrategy;
use crnforge_core::wire::{MaskRequest, ParseRequest, ScoreRequest, SessionSettings, TranslateRequest, TurnResult};
use crnforge_eval::{emit_report, Harness, RunConfig, SweepOutput};
use crnforge_llm::mock::OracleBackend;
use crnforge_llm::{few_shot_from_jsonl, ChatBackend, EndpointConfig, HttpBackend};
use crnforge_service::{AppState, ServiceConfig};

pub fn generate(
    seed: u64,
    train: usize,
    test: usize,
    ratio: f64,
    pack: Option<&Path>,
    out: &Path,
    style: ExportStyle,
) -> anyhow::Result<()> {
    let ingredients = match pack {
        Some(dir) => Ingredients::load(dir).with_context(|| format!("loading pack {}", dir.display()))?,
        None => Ingredients::default_pack(),
    };
    let spec = DatasetSpec {
        train_size: train,
        test_size: test,
        seed,
        split_ratio: ratio,
    };
    let dataset = generate_dataset(&ingredients, &spec)?;
    std::fs::create_dir_all(out)?;
    write_jsonl(&out.join("train.jsonl"), &dataset.train, style)?;
    write_jsonl(&out.join("test.jsonl"), &dataset.test, style)?;
    for (name, ing) in [("pack_train", &dataset.train_ingredients), ("pack_test", &dataset.test_ingredients)] {
        std::fs::create_dir_all(out.join(name))?;
        ing.save(&out.join(name))?;
    }
    let mut validation = String::new();
    for f in validation_fixtures() {
        let record = serde_json::json!({ "id": f.id, "kind": f.kind, "messages": f.messages() });
        validation.push_str(&record.to_string());
        validation.push('\n');
    }
    std::fs::write(out.join("validation.jsonl"), validation)?;
    println!(
        "wrote {} train, {} test and {} validation records to {}",
        dataset.train.len(),
        dataset.test.len(),
        validation_fixtures().len(),
        out.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub enum EvalKind {
    Run,
    Converge,
    FewShot,
    Temperature,
}

pub async fn evaluate(kind: EvalKind, args: &EvalArgs) -> anyhow::Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let backend: Arc<dyn ChatBackend> = if args.oracle {
        let text = std::fs::read_to_string(&cfg.dataset).with_context(|| format!("reading {}", cfg.dataset.display()))?;
        let pairs = import_jsonl(&text)?;
        Arc::new(OracleBackend::new(pairs.iter().map(|p| (p.description.as_str(), &p.network))))
    } else {
        Arc::new(HttpBackend::new(cfg.endpoint.clone())?)
    };
    let harness = Harness::from_config(cfg.clone(), backend)?;
    let output: SweepOutput = match kind {
        EvalKind::Run => harness.run().await?,
        EvalKind::Converge => harness.run_converge().await?,
        EvalKind::FewShot => harness.sweep_fewshot(&cfg.few_shot_counts).await,
        EvalKind::Temperature => harness.sweep_temperature(&cfg.temperatures).await,
    };
    let files = emit_report(&output, &args.out)?;
    for row in &output.rows {
        match &row.error {
            Some(e) => println!("{} failed: {e}", row.config_id),
            None => println!(
                "{} mean {:.4} stddev {:.4} replications {} converged {}",
                row.config_id, row.mean, row.stddev, row.n_reps, row.converged
            ),
        }
    }
    println!("results in {}", files.results.display());
    Ok(())
}

/// Interprets `\n`, `\t` and `\\` in a probe line.
pub fn unescape(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

fn escape(c: char) -> String {
    match c {
        '\n' => "\\n".into(),
        '\t' => "\\t".into(),
        ' ' => "' '".into(),
        c => c.to_string(),
    }
}

/// One report line for `prefix`.
pub fn probe_line(grammar: &Grammar, prefix: &str) -> String {
    let alphabet = grammar.alphabet();
    let mut state = RecognizerState::new(grammar);
    let mut viable = 0;
    for (i, c) in prefix.char_indices() {
        if !state.feed(c) {
            break;
        }
        viable = i + c.len_utf8();
    }
    let next: Vec<String> = state.next_chars(&alphabet).into_iter().map(escape).collect();
    format!(
        "viable {viable}/{} complete {} min-completion {} next {}",
        prefix.len(),
        if viable == prefix.len() && state.is_complete() { "yes" } else { "no" },
        state.min_completion_len(),
        if next.is_empty() { "-".to_string() } else { next.join(" ") }
    )
}

pub fn probe(grammar_file: Option<&Path>, prefixes: &[String]) -> anyhow::Result<()> {
    let owned;
    let grammar = match grammar_file {
        Some(path) => {
            owned = compile(&std::fs::read_to_string(path)?).with_context(|| format!("compiling {}", path.display()))?;
            &owned
        }
        None => crn_grammar(),
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if !prefixes.is_empty() {
        for p in prefixes {
            writeln!(out, "{}", probe_line(grammar, &unescape(p)))?;
        }
        return Ok(());
    }
    for line in std::io::stdin().lock().lines() {
        writeln!(out, "{}", probe_line(grammar, &unescape(&line?)))?;
        out.flush()?;
    }
    Ok(())
}

pub async fn mask(client: &Client, prefix: String, vocabulary: Option<Vec<String>>) -> anyhow::Result<()> {
    let res = client
        .mask(&MaskRequest {
            prefix: unescape(&prefix),
            vocabulary,
        })
        .await?;
    println!("{}", serde_json::to_string_pretty(&res)?);
    Ok(())
}

pub struct ServeOptions {
    pub bind: String,
    pub port: u16,
    pub endpoint_config: Option<PathBuf>,
    pub fewshot: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub max_history: Option<usize>,
}

pub async fn serve(opts: ServeOptions) -> anyhow::Result<()> {
    let endpoint: EndpointConfig = match &opts.endpoint_config {
        Some(path) => toml::from_str(&std::fs::read_to_string(path)?).with_context(|| format!("reading {}", path.display()))?,
        None => EndpointConfig::default(),
    };
    let few_shot_pool = match &opts.fewshot {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let n = text.lines().filter(|l| !l.trim().is_empty()).count();
            few_shot_from_jsonl(&text, n)?
        }
        None => Vec::new(),
    };
    let backend = Arc::new(HttpBackend::new(endpoint)?);
    let state = AppState::new(
        backend,
        ServiceConfig {
            few_shot_pool,
            data_dir: opts.data_dir,
            static_dir: opts.static_dir,
            max_history: opts.max_history,
        },
    )?;
    let listener = tokio::net::TcpListener::bind((opts.bind.as_str(), opts.port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    crnforge_service::serve(state, listener).await?;
    Ok(())
}

pub async fn translate(
    client: &Client,
    text: String,
    temperature: f64,
    few_shot: usize,
    seed: Option<u64>,
) -> anyhow::Result<()> {
    let res = client
        .translate(&TranslateRequest {
            text,
            temperature,
            few_shot,
            seed,
        })
        .await?;
    match res.canonical {
        Some(model) => print!("{model}"),
        None => {
            eprintln!("no model could be extracted; raw reply follows");
            println!("{}", res.assistant_text);
            bail!("translation did not contain a model");
        }
    }
    Ok(())
}

pub async fn session_create(
    client: &Client,
    temperature: f64,
    few_shot: usize,
    strategy: FewShotStrategy,
    mode: MatchMode,
    seed: Option<u64>,
) -> anyhow::Result<()> {
    let id = client
        .create_session(&SessionSettings {
            temperature,
            few_shot,
            strategy,
            mode,
            system_prompt: None,
            seed,
        })
        .await?;
    println!("{id}");
    Ok(())
}

pub async fn session_list(client: &Client) -> anyhow::Result<()> {
    for s in client.list_sessions().await? {
        let reactions = s.reactions.map_or("-".to_string(), |n| n.to_string());
        println!("{} turns {} reactions {}", s.id, s.turns, reactions);
    }
    Ok(())
}

pub async fn session_show(client: &Client, id: &str) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(&client.session(id).await?)?);
    Ok(())
}

pub async fn session_delete(client: &Client, id: &str) -> anyhow::Result<()> {
    client.delete_session(id).await?;
    Ok(())
}

/// Human-readable rendering of a turn.
pub fn render_turn(turn: &TurnResult) -> String {
    let mut out = format!("{}\n", turn.assistant_text.trim_end());
    match (&turn.parsed, &turn.diff) {
        (Some(net), Some(diff)) => {
            out.push_str(&format!(
                "-- {} reactions, grammar {}\n",
                net.len(),
                if turn.grammar_complete { "complete" } else { "incomplete" }
            ));
            for r in &diff.added {
                out.push_str(&format!("+ {}\n", serialize_reaction(r)));
            }
            for r in &diff.removed {
                out.push_str(&format!("- {}\n", serialize_reaction(r)));
            }
            for c in &diff.rate_changed {
                out.push_str(&format!("~ {}  (was {})\n", serialize_reaction(&c.new), c.old.rate));
            }
        }
        _ => out.push_str("-- no model parsed\n"),
    }
    for d in &turn.diagnostics {
        out.push_str(&format!("! {d}\n"));
    }
    out
}

pub async fn session_send(client: &Client, id: &str, text: &str) -> anyhow::Result<()> {
    print!("{}", render_turn(&client.post_message(id, text).await?));
    Ok(())
}

fn read_input(path: &Path) -> anyhow::Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

pub async fn parse(client: &Client, file: &Path, fenced: bool, strict: bool) -> anyhow::Result<()> {
    let res = client
        .parse(&ParseRequest {
            text: read_input(file)?,
            fenced,
            strict,
        })
        .await?;
    for d in &res.diagnostics {
        eprintln!("{d}");
    }
    match res.canonical {
        Some(text) => {
            print!("{text}");
            Ok(())
        }
        None => bail!("model does not parse"),
    }
}

pub async fn score(client: &Client, ground_truth: &Path, answer: &Path, mode: MatchMode) -> anyhow::Result<()> {
    let res = client
        .score(&ScoreRequest {
            ground_truth: read_input(ground_truth)?,
            answer: read_input(answer)?,
            mode,
        })
        .await?;
    match res.report {
        Some(report) => print!("{report}"),
        None => println!("mode {mode} verdict incorrect: no model in the answer"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_round_trip() {
        assert_eq!(unescape("```\\nA"), "```\nA");
        assert_eq!(unescape("a\\\\n"), "a\\n");
        assert_eq!(unescape("end\\"), "end\\");
    }

    #[test]
    fn probe_reports() {
        let g = crn_grammar();
        assert_eq!(probe_line(g, ""), "viable 0/0 complete no min-completion 16 next `");
        let line = probe_line(g, "```\nA -> B @ k0;\n```\n");
        assert!(line.starts_with("viable 21/21 complete yes"), "{line}");
        assert!(probe_line(g, "```\nA ->x").starts_with("viable 8/9 complete no"));
    }
}
