//! Scripted offline walk through one quest: goal, drawing, checks, task
//! completions and a final style. Used by `sketchquest demo` and the
//! end-to-end tests.

use sketchquest_core::canvas::{Point, Stroke};
use sketchquest_core::domain::{EventKind, FeedbackCard, Session, SessionEvent};
use sketchquest_core::driver::{DriveError, Driver, Step};
use sketchquest_core::feedback::FeedbackTable;
use sketchquest_core::scaffold::{request_helper, ScaffoldError};
use sketchquest_core::{MonitorPolicy, Provider, StyleKind};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error(transparent)]
    Drive(#[from] DriveError),
    #[error(transparent)]
    Scaffold(#[from] ScaffoldError),
    #[error("demo stalled: {0}")]
    Stalled(String),
}

#[derive(Debug, Clone)]
pub struct DemoOptions {
    pub goal: String,
    /// Place a catalog helper for the first element instead of drawing it.
    pub use_helper: bool,
    pub style: Option<(StyleKind, u64)>,
}

#[derive(Debug, Clone)]
pub struct DemoRun {
    pub session: Session,
    pub events: Vec<SessionEvent>,
    pub cards: Vec<FeedbackCard>,
    /// Styled image, when a style was requested.
    pub styled: Option<(String, Vec<u8>)>,
    pub transcript: Vec<String>,
}

const PALETTE: [&str; 4] = ["#e07a5f", "#3d405b", "#81b29a", "#f2cc8f"];

fn stroke(n: usize, label: &str) -> Stroke {
    let x = 0.1 + 0.8 * ((n * 37) % 100) as f64 / 100.0;
    let y = 0.1 + 0.8 * ((n * 61) % 100) as f64 / 100.0;
    Stroke {
        stroke_id: format!("s{n}"),
        points: vec![Point::new(x, y), Point::new((x + 0.05).min(1.0), (y + 0.04).min(1.0))],
        color: PALETTE[n % PALETTE.len()].into(),
        width: 0.01,
        element_tag: Some(label.into()),
    }
}

struct Script<'a> {
    driver: Driver<'a>,
    session: Session,
    run: DemoRun,
}

impl Script<'_> {
    fn submit(&mut self, kind: EventKind) -> Result<Step, DemoError> {
        let step = self.driver.submit(&self.session, kind).map_err(DriveError::from)?;
        if let Some(e) = step.error {
            return Err(DriveError::from(e).into());
        }
        let cards = step.new_cards();
        for card in &cards {
            self.run.transcript.push(format!("  [{:?}] {}", card.dimension, card.text));
        }
        self.run.cards.extend(cards);
        self.run.events.extend(step.events.iter().cloned());
        self.session = step.session.clone();
        Ok(step)
    }
}

pub fn run_demo(provider: &dyn Provider, table: &FeedbackTable, options: &DemoOptions) -> Result<DemoRun, DemoError> {
    let mut script = Script {
        driver: Driver::new(provider, table),
        session: Session::new("demo", MonitorPolicy::default()),
        run: DemoRun {
            session: Session::new("demo", MonitorPolicy::default()),
            events: Vec::new(),
            cards: Vec::new(),
            styled: None,
            transcript: Vec::new(),
        },
    };
    script.run.transcript.push(format!("goal: {}", options.goal));
    script.submit(EventKind::GoalSubmitted { goal: options.goal.clone() })?;
    let quest = script.session.quest.clone().ok_or_else(|| DemoError::Stalled("no quest".into()))?;
    script.run.transcript.push(format!("quest {} with {} tasks", quest.quest_id, quest.tasks.len()));

    let mut strokes = 0;
    let mut helper_used = !options.use_helper;
    for task in &quest.tasks {
        script
            .run
            .transcript
            .push(format!("task {} [{}] {}", task.index + 1, task.bloom.name(), task.prompt));
        let have = script.session.canvas.element_census();
        for criterion in &task.criteria {
            let present = have.get(&criterion.label).copied().unwrap_or(0);
            for _ in present..criterion.min_count {
                if !helper_used {
                    helper_used = true;
                    let helper = request_helper(&script.session, &criterion.label, provider, 1)?;
                    script.run.transcript.push(format!("  placed helper {}", helper.helper_id));
                    let helper = sketchquest_core::HelperObject { position: Point::new(0.5, 0.5), ..helper };
                    script.submit(EventKind::HelperPlaced { helper })?;
                    continue;
                }
                strokes += 1;
                script.submit(EventKind::StrokeAdded { stroke: stroke(strokes, &criterion.label) })?;
            }
        }
        script.run.transcript.push("  check".into());
        script.submit(EventKind::CheckRequested)?;
        script.run.transcript.push(format!("  complete {}", task.task_id));
        script.submit(EventKind::TaskCompletionConfirmed { task_id: task.task_id.clone() })?;
    }
    script.run.transcript.push(format!(
        "phase {:?}, gems {}/{}",
        script.session.phase,
        script.session.gems.gem_count,
        quest.tasks.len()
    ));

    if let Some((style, seed)) = options.style {
        let step = script.submit(EventKind::StyleRequested { style, seed })?;
        let artifact = step.artifacts.into_iter().next().ok_or_else(|| DemoError::Stalled("no image".into()))?;
        script.run.transcript.push(format!("styled {} ({} bytes)", artifact.artifact_ref, artifact.png.len()));
        script.run.styled = Some((artifact.artifact_ref, artifact.png));
    }
    script.run.session = script.session;
    Ok(script.run)
}
