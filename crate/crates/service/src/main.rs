use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use sketchquest_core::domain::EventKind;
use sketchquest_core::StyleKind;
use sketchquest_service::api::router;
use sketchquest_service::config::{Assets, ServiceConfig};
use sketchquest_service::demo::{run_demo, DemoOptions};
use sketchquest_service::eventlog::EventLog;
use sketchquest_service::sessions::{Registry, Services};

#[derive(Parser)]
#[command(name = "sketchquest", version, about = "Drawing-to-learn tutor service")]
struct Cli {
    /// TOML config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Use the offline provider regardless of the config.
    #[arg(long, global = true)]
    offline: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        listen: Option<String>,
    },
    /// Rebuild a session from its event log and summarize it.
    Replay { log: PathBuf },
    /// Check the quest library, card templates and helper catalog.
    ValidateTemplates,
    /// Walk one quest offline and print what happens.
    Demo {
        goal: String,
        #[arg(long, value_parser = parse_style, default_value = "oil_painting")]
        style: StyleKind,
        /// Stop once the quest is complete.
        #[arg(long)]
        no_style: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Place a catalog helper for the first element.
        #[arg(long)]
        helper: bool,
        /// Write the styled image here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_style(s: &str) -> Result<StyleKind, String> {
    StyleKind::from_name(s).ok_or_else(|| {
        let names: Vec<_> = StyleKind::ALL.iter().map(|k| k.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn load_config(cli: &Cli) -> Result<ServiceConfig, String> {
    let config = match &cli.config {
        Some(path) => ServiceConfig::load(path).map_err(|e| e.to_string())?,
        None => ServiceConfig::default(),
    };
    Ok(if cli.offline { config.offline() } else { config })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = load_config(&cli).and_then(|config| match &cli.command {
        Command::Serve { listen } => serve(config, listen.clone()),
        Command::Replay { log } => replay(log),
        Command::ValidateTemplates => validate_templates(&config),
        Command::Demo { goal, style, no_style, seed, helper, out } => {
            let style = (!no_style).then_some(*style);
            demo(&config, goal, style, *seed, *helper, out.as_deref())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn serve(mut config: ServiceConfig, listen: Option<String>) -> Result<(), String> {
    if let Some(listen) = listen {
        config.listen = listen;
    }
    config.validate().map_err(|e| e.to_string())?;
    let assets = config.assets().map_err(|e| e.to_string())?;
    let gateway = config.gateway(&assets).map_err(|e| e.to_string())?;
    let addr: SocketAddr = config.listen.parse().map_err(|e| format!("listen address: {e}"))?;
    let registry = Arc::new(Registry::new(Services {
        provider: Arc::new(gateway),
        table: Arc::new(assets.table),
        policy: config.monitor,
        data_dir: config.data_dir.clone(),
        ticks: true,
    }));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| format!("bind {addr}: {e}"))?;
        tracing::info!(%addr, data_dir = %config.data_dir.display(), mode = ?config.provider.mode, "listening");
        axum::serve(listener, router(registry))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
                tracing::info!("shutting down");
            })
            .await
            .map_err(|e| e.to_string())
    })
}

fn replay(path: &Path) -> Result<(), String> {
    let (_, loaded) = EventLog::load(path).map_err(|e| e.to_string())?;
    let s = &loaded.session;
    println!("session {} ({} events)", s.session_id, loaded.records.len());
    println!("phase {:?}", s.phase);
    if let Some(quest) = &s.quest {
        println!("quest {}: {}/{} tasks", quest.quest_id, quest.completed_count(), quest.tasks.len());
    }
    println!("gems {}", s.gems.gem_count);
    println!("cards {}", s.feedback_log.len());
    for record in &loaded.records {
        let name = format!("{:?}", record.event.kind.event_type());
        match &record.event.kind {
            EventKind::FeedbackComposed { cards } => {
                println!("{:>5} {name}", record.seq);
                for card in cards {
                    println!("        [{:?}] {}", card.dimension, card.text);
                }
            }
            _ => println!("{:>5} {name}", record.seq),
        }
    }
    Ok(())
}

fn validate_templates(config: &ServiceConfig) -> Result<(), String> {
    let Assets { quests, table, catalog } = config.assets().map_err(|e| e.to_string())?;
    let mut problems = Vec::new();
    if let Err(e) = quests.check() {
        problems.push(format!("quest library: {e}"));
    }
    for template in &table.templates {
        let rendered = template.render(&table.sample_slots(template));
        match rendered {
            Ok(text) => {
                if let Err(v) = table.rules.validate_for(template.dimension, &text) {
                    problems.push(format!("{} `{}`: {v:?}", template.dimension, template.variant));
                }
            }
            Err(e) => problems.push(format!("{} `{}`: {e}", template.dimension, template.variant)),
        }
    }
    for template in &quests.templates {
        for task in &template.tasks {
            for c in task.criteria.iter().filter(|c| catalog.entry(&c.label).is_none()) {
                println!("note: `{}` in quest `{}` has no catalog helper", c.label, template.name);
            }
        }
    }
    println!(
        "{} quest templates, {} card templates, {} helpers",
        quests.templates.len(),
        table.templates.len(),
        catalog.entries.len()
    );
    if problems.is_empty() {
        println!("ok");
        Ok(())
    } else {
        for p in &problems {
            println!("problem: {p}");
        }
        Err(format!("{} problem(s)", problems.len()))
    }
}

fn demo(
    config: &ServiceConfig,
    goal: &str,
    style: Option<StyleKind>,
    seed: u64,
    helper: bool,
    out: Option<&Path>,
) -> Result<(), String> {
    let assets = config.assets().map_err(|e| e.to_string())?;
    let gateway = config.gateway(&assets).map_err(|e| e.to_string())?;
    let options = DemoOptions { goal: goal.to_owned(), use_helper: helper, style: style.map(|s| (s, seed)) };
    let run = run_demo(&gateway, &assets.table, &options).map_err(|e| e.to_string())?;
    for line in &run.transcript {
        println!("{line}");
    }
    println!("final phase {:?}", run.session.phase);
    if let (Some(path), Some((_, png))) = (out, &run.styled) {
        std::fs::write(path, png).map_err(|e| format!("{}: {e}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
