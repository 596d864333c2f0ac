//! Shared generators and independent oracles for the property suites.
//! Included by path from the service acceptance harness as well.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sketchquest_core::canvas::{CanvasDocument, HelperObject, Point, Stroke};
use sketchquest_core::domain::{
    EventKind, EventType, FeedbackCard, FeedbackDimension, Session, SessionPhase, TaskStatus,
};
use sketchquest_core::feedback::{
    compose_feedback, display_label, validate_framing, AnalysisSource, CanvasAnalysis, FeedbackRequest,
    FeedbackTable, FeedbackTrigger, FramingRules, FramingViolation, Slots,
};
use sketchquest_core::provider::OfflineProvider;
use sketchquest_core::quest::{generate_quest, CriterionDraft, QuestDraft, QuestLibrary, TaskDraft};
use sketchquest_core::scaffold::{HelperCatalog, StyleKind};

pub const LABELS: &[&str] = &[
    "membrane", "nucleus", "ribosome", "sun", "leaf", "water", "arrow", "cloud", "rain", "ocean",
    "main-idea", "part", "example", "summary", "doodle",
];

pub const GOALS: &[&str] = &[
    "photosynthesis",
    "the water cycle",
    "cell structure",
    "plate tectonics",
    "how plants make food from sunlight",
    "Cells and their organelles",
    "",
    "   ",
];

pub const SIMPLE_SVG: &str =
    r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 100"><circle cx="50" cy="50" r="40"/></svg>"#;

/// Hand-written phase × event acceptance matrix.
pub fn allowed(phase: SessionPhase, event: EventType) -> bool {
    use EventType as E;
    match phase {
        SessionPhase::GoalEntry => matches!(event, E::GoalSubmitted | E::QuestGenerated),
        SessionPhase::QuestActive => matches!(
            event,
            E::StrokeAdded
                | E::HelperPlaced
                | E::TickElapsed
                | E::CheckRequested
                | E::AnalysisArrived
                | E::FeedbackComposed
                | E::TaskCompletionConfirmed
        ),
        SessionPhase::AllComplete => matches!(
            event,
            E::StrokeAdded
                | E::HelperPlaced
                | E::FeedbackComposed
                | E::TaskCompletionConfirmed
                | E::StyleRequested
                | E::StyleApplied
        ),
        SessionPhase::StyleApplied => {
            matches!(event, E::TaskCompletionConfirmed | E::StyleRequested | E::StyleApplied)
        }
    }
}

pub fn phase_rank(p: SessionPhase) -> u8 {
    match p {
        SessionPhase::GoalEntry => 0,
        SessionPhase::QuestActive => 1,
        SessionPhase::AllComplete => 2,
        SessionPhase::StyleApplied => 3,
    }
}

fn shared() -> &'static (OfflineProvider, FeedbackTable) {
    static SHARED: std::sync::OnceLock<(OfflineProvider, FeedbackTable)> = std::sync::OnceLock::new();
    SHARED.get_or_init(|| (OfflineProvider::default(), FeedbackTable::default()))
}

/// Random event source biased toward sessions that make progress.
pub struct Fuzzer {
    pub rng: ChaCha8Rng,
    pub provider: OfflineProvider,
    pub table: FeedbackTable,
    counter: u64,
}

impl Fuzzer {
    pub fn new(seed: u64) -> Self {
        Fuzzer {
            rng: ChaCha8Rng::seed_from_u64(seed),
            provider: shared().0.clone(),
            table: shared().1.clone(),
            counter: 0,
        }
    }

    fn point(&mut self) -> Point {
        Point::new(self.rng.random_range(0.0..=1.0), self.rng.random_range(0.0..=1.0))
    }

    pub fn stroke(&mut self, tag: Option<String>) -> Stroke {
        self.counter += 1;
        let n = self.rng.random_range(1..5);
        Stroke {
            stroke_id: format!("s{}", self.counter),
            points: (0..n).map(|_| self.point()).collect(),
            color: format!("#{:06x}", self.rng.random_range(0..0x100_0000u32)),
            width: self.rng.random_range(0.001..=0.1),
            element_tag: tag,
        }
    }

    pub fn helper(&mut self, label: &str) -> HelperObject {
        self.counter += 1;
        HelperObject {
            helper_id: format!("h{}-{label}", self.counter),
            label: label.to_owned(),
            svg_body: SIMPLE_SVG.into(),
            position: self.point(),
            scale: self.rng.random_range(0.1..=2.0),
        }
    }

    fn needed_label(&mut self, s: &Session) -> String {
        let task_labels: Vec<String> = s
            .current_task()
            .map(|t| t.criteria.iter().map(|c| c.label.clone()).collect())
            .unwrap_or_default();
        if !task_labels.is_empty() && self.rng.random_bool(0.8) {
            task_labels.choose(&mut self.rng).unwrap().clone()
        } else {
            LABELS.choose(&mut self.rng).unwrap().to_string()
        }
    }

    fn analysis(&mut self, s: &Session) -> CanvasAnalysis {
        let mut a = OfflineProvider::census(&s.canvas, s.last_analysis.as_ref().map(|a| a.at_revision));
        match self.rng.random_range(0..10) {
            0 => a.at_revision = s.canvas.revision + 1,
            1 => a.at_revision = self.rng.random_range(0..=s.canvas.revision),
            2 => {
                a.elements = LABELS[..4].iter().map(|l| (l.to_string(), self.rng.random_range(0..3))).collect();
                a.source = AnalysisSource::Remote;
            }
            _ => {}
        }
        a
    }

    fn cards(&mut self, s: &Session) -> Vec<FeedbackCard> {
        if self.rng.random_bool(0.85) {
            let request = FeedbackRequest {
                trigger: FeedbackTrigger::Analysis,
                analysis: s.last_analysis.clone(),
                newly_satisfied: vec![],
                stalled: self.rng.random_bool(0.3),
            };
            if let Ok(cards) = compose_feedback(s, &request, &self.table) {
                return cards;
            }
        }
        // structurally invalid batches
        let d = *FeedbackDimension::ALL.choose(&mut self.rng).unwrap();
        let card = FeedbackCard { dimension: d, text: "Nice work".into(), seq: 0, color_code: d.color_code().into() };
        match self.rng.random_range(0..3) {
            0 => vec![],
            1 => vec![card.clone(), card],
            _ => vec![FeedbackCard { color_code: "#000000".into(), ..card }],
        }
    }

    fn task_id(&mut self, s: &Session) -> String {
        let Some(q) = &s.quest else { return "q-0".into() };
        let r = self.rng.random_range(0..10);
        if r < 8 {
            if let Some(t) = q.current_task() {
                return t.task_id.clone();
            }
        }
        if r < 9 && !q.tasks.is_empty() {
            return q.tasks.choose(&mut self.rng).unwrap().task_id.clone();
        }
        "no-such-task".into()
    }

    pub fn next_event(&mut self, s: &Session) -> EventKind {
        // Occasionally any kind at all, to exercise illegal transitions.
        let wild = self.rng.random_bool(0.08);
        let phase = if wild { *SessionPhase::ALL.choose(&mut self.rng).unwrap() } else { s.phase };
        match phase {
            SessionPhase::GoalEntry => {
                if s.goal.is_none() || self.rng.random_bool(0.1) {
                    let goal = GOALS.choose(&mut self.rng).unwrap().to_string();
                    EventKind::GoalSubmitted { goal }
                } else {
                    let goal = if self.rng.random_bool(0.9) {
                        s.goal.clone().unwrap_or_default()
                    } else {
                        "another goal".into()
                    };
                    match generate_quest(&goal, &self.provider) {
                        Ok(quest) => EventKind::QuestGenerated { quest },
                        Err(_) => EventKind::CheckRequested,
                    }
                }
            }
            SessionPhase::QuestActive => match self.rng.random_range(0..100) {
                0..=29 => {
                    let tag = if self.rng.random_bool(0.85) { Some(self.needed_label(s)) } else { None };
                    EventKind::StrokeAdded { stroke: self.stroke(tag) }
                }
                30..=37 => self.helper_event(s),
                38..=47 => {
                    let tick = if self.rng.random_bool(0.7) {
                        30 * self.rng.random_range(1..40)
                    } else {
                        self.rng.random_range(0..1200)
                    };
                    EventKind::TickElapsed { tick }
                }
                48..=55 => EventKind::CheckRequested,
                56..=69 => EventKind::AnalysisArrived { analysis: self.analysis(s) },
                70..=77 => EventKind::FeedbackComposed { cards: self.cards(s) },
                78..=94 => EventKind::TaskCompletionConfirmed { task_id: self.task_id(s) },
                _ => self.style_event(s),
            },
            SessionPhase::AllComplete | SessionPhase::StyleApplied => match self.rng.random_range(0..100) {
                0..=34 => self.style_event(s),
                35..=49 => EventKind::StrokeAdded { stroke: self.stroke(None) },
                50..=59 => self.helper_event(s),
                60..=69 => EventKind::TaskCompletionConfirmed { task_id: self.task_id(s) },
                70..=79 => EventKind::FeedbackComposed { cards: self.cards(s) },
                80..=89 => EventKind::CheckRequested,
                _ => EventKind::TickElapsed { tick: 30 },
            },
        }
    }

    fn helper_event(&mut self, s: &Session) -> EventKind {
        if !s.canvas.helpers.is_empty() && self.rng.random_bool(0.4) {
            let mut moved = s.canvas.helpers.choose(&mut self.rng).unwrap().clone();
            moved.position = self.point();
            return EventKind::HelperPlaced { helper: moved };
        }
        let label = self.needed_label(s);
        EventKind::HelperPlaced { helper: self.helper(&label) }
    }

    fn style_event(&mut self, s: &Session) -> EventKind {
        if s.pending_style.is_some() && self.rng.random_bool(0.6) {
            let artifact_ref = if self.rng.random_bool(0.95) { format!("art-{}", self.rng.random::<u32>()) } else { String::new() };
            EventKind::StyleApplied { artifact_ref }
        } else {
            let style = *StyleKind::ALL.choose(&mut self.rng).unwrap();
            EventKind::StyleRequested { style, seed: self.rng.random_range(0..4) }
        }
    }

    pub fn random_doc(&mut self, max_items: usize) -> CanvasDocument {
        let mut doc = CanvasDocument::new();
        let n = self.rng.random_range(0..=max_items);
        for _ in 0..n {
            if self.rng.random_bool(0.75) {
                let tag = self.rng.random_bool(0.6).then(|| LABELS.choose(&mut self.rng).unwrap().to_string());
                doc = doc.apply_stroke(self.stroke(tag)).unwrap();
            } else {
                let label = LABELS.choose(&mut self.rng).unwrap().to_string();
                doc = doc.place_helper(self.helper(&label)).unwrap();
            }
        }
        doc
    }
}

/// Session invariants, checked after every accepted event. `prev` is the
/// state before the event.
pub fn invariant_failures(prev: &Session, next: &Session, event: EventType) -> Vec<String> {
    let mut out = Vec::new();
    let completed = next
        .quest
        .as_ref()
        .map_or(0, |q| q.tasks.iter().filter(|t| t.status == TaskStatus::Completed).count());
    if next.gems.gem_count as usize != completed {
        out.push(format!("gems {} != completed {completed}", next.gems.gem_count));
    }
    if next.gems.awards.len() != next.gems.gem_count as usize {
        out.push("award list length differs from gem count".into());
    }
    let mut awarded: Vec<&str> = next.gems.awards.iter().map(|a| a.task_id.as_str()).collect();
    awarded.sort_unstable();
    if awarded.windows(2).any(|w| w[0] == w[1]) {
        out.push("two awards for one task".into());
    }
    if phase_rank(next.phase) < phase_rank(prev.phase) {
        out.push(format!("phase went back {:?} -> {:?}", prev.phase, next.phase));
    }
    if let Some(q) = &next.quest {
        let current = q
            .tasks
            .iter()
            .filter(|t| matches!(t.status, TaskStatus::Active | TaskStatus::ReadyToComplete))
            .count();
        let done = q.tasks.iter().all(|t| t.status == TaskStatus::Completed);
        if current > 1 {
            out.push(format!("{current} current tasks"));
        }
        let finished_phase = matches!(next.phase, SessionPhase::AllComplete | SessionPhase::StyleApplied);
        if done != finished_phase {
            out.push(format!("all-done {done} but phase {:?}", next.phase));
        }
        if !finished_phase && current != 1 {
            out.push(format!("{current} current tasks while quest is active"));
        }
    }
    if next.quest.is_none() != (next.phase == SessionPhase::GoalEntry) {
        out.push("quest presence does not match phase".into());
    }
    if next.feedback_log.windows(2).any(|w| w[1].seq <= w[0].seq) {
        out.push("card seq not strictly increasing".into());
    }
    if next.canvas.helpers != prev.canvas.helpers && event != EventType::HelperPlaced {
        out.push(format!("{event:?} changed helpers"));
    }
    let mutations = u64::from(matches!(event, EventType::StrokeAdded | EventType::HelperPlaced));
    if next.canvas.revision != prev.canvas.revision + mutations {
        out.push(format!("{event:?} moved revision {} -> {}", prev.canvas.revision, next.canvas.revision));
    }
    out
}

/// Multiset inclusion: every (label, min) is covered by `elements`.
pub fn multiset_ready(criteria: &[(String, u32)], elements: &BTreeMap<String, u32>) -> bool {
    let mut needed: Vec<&str> = Vec::new();
    for (label, n) in criteria {
        needed.extend(std::iter::repeat_n(label.as_str(), *n as usize));
    }
    let mut have: Vec<&str> = Vec::new();
    for (label, n) in elements {
        have.extend(std::iter::repeat_n(label.as_str(), *n as usize));
    }
    for want in needed {
        match have.iter().position(|h| *h == want) {
            Some(i) => {
                have.swap_remove(i);
            }
            None => return false,
        }
    }
    true
}

/// Brute-force quest validity over (ordinal, criteria) rows.
pub fn quest_ok(rows: &[(i64, Vec<(String, i64)>)]) -> bool {
    let n = rows.len();
    if !(3..=7).contains(&n) {
        return false;
    }
    for (i, (b, criteria)) in rows.iter().enumerate() {
        if *b < 1 || *b > 6 {
            return false;
        }
        if i > 0 && rows[i - 1].0 > *b {
            return false;
        }
        let mut labels: Vec<&String> = criteria.iter().map(|(l, _)| l).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        for (label, count) in criteria {
            let bytes = label.as_bytes();
            let head_ok = bytes.first().is_some_and(u8::is_ascii_lowercase);
            let tail_ok = bytes.iter().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || *c == b'-' || *c == b'_');
            if !head_ok || !tail_ok || *count < 1 {
                return false;
            }
        }
    }
    rows[0].0 <= 2 && rows[n - 1].0 >= 4
}

/// Independent framing scanner: normalize to space-separated lowercase
/// words and look for the padded phrase as a substring.
pub fn scan_normalize(text: &str) -> String {
    let chars: Vec<char> = text.chars().map(|c| if c == '\u{2019}' { '\'' } else { c }).collect();
    let mut out = String::from(" ");
    for (i, &c) in chars.iter().enumerate() {
        let apostrophe_inside = c == '\''
            && i > 0
            && chars[i - 1].is_alphanumeric()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        } else if apostrophe_inside {
            out.push('\'');
        } else {
            out.push(' ');
        }
    }
    out.push(' ');
    out.split_whitespace().fold(String::from(" "), |mut acc, w| {
        acc.push_str(w);
        acc.push(' ');
        acc
    })
}

pub fn scan_contains(text: &str, phrase: &str) -> bool {
    let p = scan_normalize(phrase);
    p.trim() != "" && scan_normalize(text).contains(&p)
}

/// Expected framing verdict: (forbidden patterns found, marker missing).
pub fn scan_verdict(text: &str, forbidden: &[String], markers: &[String], cognitive: bool) -> (Vec<String>, bool) {
    let found = forbidden.iter().filter(|p| scan_contains(text, p)).cloned().collect();
    let missing = cognitive && !markers.iter().any(|m| scan_contains(text, m));
    (found, missing)
}

/// Brute-force helper resolution over the catalog.
pub fn resolve_oracle<'a>(catalog: &'a HelperCatalog, hint: &str, goal: Option<&str>) -> Option<&'a str> {
    let lower = hint.trim().to_lowercase();
    let as_label: String = lower.split(|c: char| c.is_whitespace() || c == '-').filter(|w| !w.is_empty()).collect::<Vec<_>>().join("-");
    if let Some(e) = catalog.entries.iter().find(|e| e.label == as_label) {
        return Some(&e.label);
    }
    let toks = |s: &str| -> Vec<String> {
        s.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_owned)
            .collect()
    };
    let hint_words = toks(hint);
    let goal_words = goal.map(toks).unwrap_or_default();
    let mut best: Option<((usize, usize), &str)> = None;
    for e in &catalog.entries {
        let mut keys: Vec<String> = e.label.split(['-', '_']).map(str::to_owned).collect();
        keys.extend(e.topic_keywords.iter().cloned());
        keys.sort();
        keys.dedup();
        let mut hw = hint_words.clone();
        hw.sort();
        hw.dedup();
        let a = keys.iter().filter(|k| hw.contains(k)).count();
        let b = e.topic_keywords.iter().filter(|k| goal_words.contains(k)).count();
        if a == 0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((score, label)) => (a, b) > score || ((a, b) == score && e.label.as_str() < label),
        };
        if better {
            best = Some(((a, b), &e.label));
        }
    }
    best.map(|(_, l)| l)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct RunStats {
    pub accepted: usize,
    pub rejected: usize,
    pub completed_quests: usize,
    pub styled: usize,
    pub fulfilled: usize,
}

fn serialized(s: &Session) -> Vec<u8> {
    serde_json::to_vec(s).expect("sessions serialize")
}

/// Folds `len` fuzzed events into a fresh session, checking every invariant
/// after each accepted event, purity every `purity_every` events, and replay
/// determinism at the end. With `fulfil`, non-style effects are also run
/// through the offline provider and their events checked for helper changes.
pub fn run_sequence(seed: u64, len: usize, purity_every: usize, fulfil: bool) -> Result<RunStats, String> {
    use sketchquest_core::domain::{reduce, Effect, ReduceError};
    use sketchquest_core::feedback::MonitorPolicy;

    let mut fz = Fuzzer::new(seed);
    let initial = Session::new(format!("fuzz-{seed}"), MonitorPolicy::default());
    let mut s = initial.clone();
    let mut log = Vec::new();
    let mut stats = RunStats::default();
    for i in 0..len {
        let kind = fz.next_event(&s);
        let event_type = kind.event_type();
        let event = s.next_event(kind);
        match reduce(&s, &event) {
            Ok(t) => {
                if !allowed(s.phase, event_type) {
                    return Err(format!("seed {seed} step {i}: {event_type:?} accepted in {:?}", s.phase));
                }
                let failures = invariant_failures(&s, &t.session, event_type);
                if !failures.is_empty() {
                    return Err(format!("seed {seed} step {i} {event_type:?}: {}", failures.join("; ")));
                }
                if purity_every > 0 && i % purity_every == 0 {
                    let again = reduce(&s, &event).map_err(|e| e.to_string())?;
                    if serialized(&again.session) != serialized(&t.session)
                        || serde_json::to_vec(&again.effects).unwrap() != serde_json::to_vec(&t.effects).unwrap()
                    {
                        return Err(format!("seed {seed} step {i}: reduce is not pure"));
                    }
                }
                if fulfil {
                    for effect in &t.effects {
                        if matches!(effect, Effect::ApplyStyle { .. }) {
                            continue;
                        }
                        let Ok(done) = sketchquest_core::driver::fulfil(&t.session, effect, &fz.provider, &fz.table) else {
                            continue;
                        };
                        stats.fulfilled += 1;
                        let ty = done.event.event_type();
                        if ty == EventType::HelperPlaced {
                            return Err(format!("seed {seed}: effect produced a helper placement"));
                        }
                        if let Ok(next) = t.session.apply(done.event) {
                            if next.session.canvas.helpers != t.session.canvas.helpers {
                                return Err(format!("seed {seed}: fulfilled {ty:?} changed helpers"));
                            }
                        }
                    }
                }
                if s.phase == SessionPhase::QuestActive && t.session.phase == SessionPhase::AllComplete {
                    stats.completed_quests += 1;
                }
                if event_type == EventType::StyleApplied {
                    stats.styled += 1;
                }
                stats.accepted += 1;
                log.push(event);
                s = t.session;
            }
            Err(ReduceError::IllegalTransition { .. }) => {
                if allowed(s.phase, event_type) {
                    return Err(format!("seed {seed} step {i}: {event_type:?} refused in {:?}", s.phase));
                }
                stats.rejected += 1;
            }
            Err(_) => {
                if !allowed(s.phase, event_type) {
                    return Err(format!("seed {seed} step {i}: {event_type:?} in {:?} not refused as illegal", s.phase));
                }
                stats.rejected += 1;
            }
        }
    }
    let mut replayed = initial;
    for event in &log {
        replayed = reduce(&replayed, event).map_err(|e| format!("seed {seed}: replay failed: {e}"))?.session;
    }
    if serialized(&replayed) != serialized(&s) {
        return Err(format!("seed {seed}: replay differs from live state"));
    }
    Ok(stats)
}

pub fn rows(draft: &QuestDraft) -> Vec<(i64, Vec<(String, i64)>)> {
    draft
        .tasks
        .iter()
        .map(|t| (t.bloom, t.criteria.iter().map(|c| (c.label.clone(), c.min_count)).collect()))
        .collect()
}

pub fn task(i: usize, bloom: i64, criteria: Vec<CriterionDraft>) -> TaskDraft {
    TaskDraft { title: format!("t{i}"), prompt: format!("draw {i}"), bloom, criteria }
}

pub fn crit(label: &str, min_count: i64) -> CriterionDraft {
    CriterionDraft { label: label.into(), min_count }
}

pub fn ordinal_sequences(max_len: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut all = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for b in lo..=hi {
                let mut s: Vec<i64> = seq.clone();
                s.push(b);
                next.push(s);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

pub fn fuzzed_goal(rng: &mut ChaCha8Rng) -> String {
    const WORDS: &[&str] = &[
        "photosynthesis", "plants", "Water", "cycle", "cell", "CELLS", "membrane", "how", "the", "of", "volcanoes",
        "französisch", "数学", "rain!", "leaf's", "{goal}", "and", "history", "   ",
    ];
    let n = rng.random_range(1..6);
    let mut goal: Vec<String> = (0..n).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
    if rng.random_bool(0.2) {
        goal.push((0..rng.random_range(1..8)).map(|_| rng.random_range('a'..='z')).collect());
    }
    goal.join(if rng.random_bool(0.5) { " " } else { "  " })
}

pub fn framing_verdict(rules: &FramingRules, text: &str, dimension: FeedbackDimension) -> (Vec<String>, bool) {
    match validate_framing(text, Some(dimension), rules) {
        Ok(()) => (vec![], false),
        Err(v) => {
            let found = v
                .iter()
                .filter_map(|v| match v {
                    FramingViolation::ForbiddenPattern(p) => Some(p.clone()),
                    FramingViolation::MissingCollaborativeMarker => None,
                })
                .collect();
            (found, v.contains(&FramingViolation::MissingCollaborativeMarker))
        }
    }
}

pub fn framing_oracle(rules: &FramingRules, text: &str, dimension: FeedbackDimension) -> (Vec<String>, bool) {
    scan_verdict(
        text,
        &rules.forbidden_patterns,
        &rules.collaborative_markers,
        dimension == FeedbackDimension::Cognitive,
    )
}

/// Every slot value the product can feed a template.
pub fn slot_values(table: &FeedbackTable) -> Vec<Slots> {
    let library = QuestLibrary::default();
    let catalog = HelperCatalog::default();
    let mut labels: Vec<String> = catalog.entries.iter().map(|e| e.label.clone()).collect();
    let mut titles = vec!["the whole quest".to_string()];
    for t in library.templates.iter().chain([&library.fallback]) {
        let draft = t.instantiate("plate tectonics");
        for task in &draft.tasks {
            labels.extend(task.criteria.iter().map(|c| c.label.clone()));
            titles.push(task.title.clone());
        }
    }
    labels.sort();
    labels.dedup();
    let mut out = Vec::new();
    for template in &table.templates {
        let strategy = table.strategy(&template.variant).unwrap_or("sketch the big shapes first");
        for (i, label) in labels.iter().enumerate() {
            let title = &titles[i % titles.len()];
            out.push(
                Slots::new()
                    .with("variant", &template.variant)
                    .with("done", i % 7)
                    .with("total", 3 + i % 5)
                    .with("missing", display_label(label))
                    .with("strategy", strategy)
                    .with("milestone", if i % 2 == 0 { display_label(label) } else { title.clone() }),
            );
        }
    }
    out
}

pub fn recount(doc: &CanvasDocument, label: &str) -> u32 {
    let strokes = doc.strokes.iter().filter(|s| s.element_tag.as_deref() == Some(label)).count();
    let helpers = doc.helpers.iter().filter(|h| h.label == label).count();
    (strokes + helpers) as u32
}
