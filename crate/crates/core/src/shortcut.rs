//! Shortcut interaction logic: rankings become application suggestions, and a
//! session runs the confirm window with Multichoice and cancel.
//!
//! Time is a logical millisecond clock supplied with every event; the engine
//! never reads a wall clock.

use std::fmt;

use chrono::{DateTime, SecondsFormat, TimeDelta, Utc};
use thiserror::Error;

use crate::classify::Ranking;
use crate::format::FormatError;

/// Length of the confirm window.
pub const CONFIRM_WINDOW_MS: f64 = 2000.0;

/// Applications with a recorded name for audio feedback.
pub const KNOWN_APPLICATIONS: [&str; 21] = [
    "Agenda",
    "Internet Browser",
    "Calculator",
    "Camera",
    "Calling Mother",
    "Calling Peter",
    "Calling Andreia",
    "Contacts",
    "Alarm",
    "GPS",
    "Photos",
    "Voice Recorder",
    "Time",
    "Games",
    "Messenger",
    "MP3",
    "Pedometer",
    "SMS",
    "Temperature",
    "Voicemail",
    "MS Word",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShortcutError {
    #[error("no ranked body part has applications")]
    NoSuggestions,
    #[error("{event} is not accepted while {state}")]
    IllegalEvent { state: SessionState, event: &'static str },
    #[error("session is still {0}")]
    SessionNotFinal(SessionState),
    #[error("body part {0:?} has no applications")]
    EmptyPart(String),
    #[error("application {app:?} is listed twice for {part:?}")]
    DuplicateApplication { part: String, app: String },
    #[error("body part {0:?} is listed twice")]
    DuplicatePart(String),
}

/// Body part to applications, in priority order. Part lookup ignores case.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BodyMap {
    parts: Vec<(String, Vec<String>)>,
}

impl BodyMap {
    pub fn new<P, A>(parts: impl IntoIterator<Item = (P, Vec<A>)>) -> Result<Self, ShortcutError>
    where
        P: Into<String>,
        A: Into<String>,
    {
        let mut map = BodyMap::default();
        for (part, apps) in parts {
            map.insert(part.into(), apps.into_iter().map(Into::into).collect())?;
        }
        Ok(map)
    }

    fn insert(&mut self, part: String, apps: Vec<String>) -> Result<(), ShortcutError> {
        if apps.is_empty() {
            return Err(ShortcutError::EmptyPart(part));
        }
        if self.apps(&part).is_some() {
            return Err(ShortcutError::DuplicatePart(part));
        }
        for (i, app) in apps.iter().enumerate() {
            if apps[..i].contains(app) {
                return Err(ShortcutError::DuplicateApplication { part, app: app.clone() });
            }
        }
        self.parts.push((part, apps));
        Ok(())
    }

    pub fn apps(&self, part: &str) -> Option<&[String]> {
        self.parts.iter().find(|(p, _)| p.eq_ignore_ascii_case(part)).map(|(_, apps)| apps.as_slice())
    }

    pub fn parts(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.parts.iter().map(|(p, a)| (p.as_str(), a.as_slice()))
    }
}

/// Parses `part: app, app` lines; `#` starts a comment line.
pub fn read_body_map(text: &str) -> Result<BodyMap, FormatError> {
    let mut map = BodyMap::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (part, apps) =
            line.split_once(':').ok_or_else(|| FormatError::parse(i + 1, "expected `part: app, app`"))?;
        let apps: Vec<String> = apps.split(',').map(str::trim).filter(|a| !a.is_empty()).map(str::to_string).collect();
        map.insert(part.trim().to_string(), apps).map_err(|e| FormatError::parse(i + 1, e.to_string()))?;
    }
    Ok(map)
}

pub fn write_body_map(map: &BodyMap) -> String {
    map.parts().map(|(p, apps)| format!("{p}: {}\n", apps.join(", "))).collect()
}

/// All applications of the top part, then the first application of each
/// other ranked part. Unmapped parts are skipped and duplicates dropped.
pub fn suggestions(ranking: &Ranking, map: &BodyMap) -> Result<Vec<String>, ShortcutError> {
    let mut out: Vec<String> = Vec::new();
    let mut first = true;
    for label in ranking.labels() {
        let Some(apps) = map.apps(label) else { continue };
        let take = if first { apps.len() } else { 1 };
        first = false;
        for app in &apps[..take] {
            if !out.contains(app) {
                out.push(app.clone());
            }
        }
    }
    if out.is_empty() {
        return Err(ShortcutError::NoSuggestions);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeedbackEvent {
    Vibration {
        seconds: f64,
    },
    /// The confirm-window progress bar restarts for this application.
    VisualProgress {
        app: String,
    },
    AudioName {
        app: String,
    },
}

/// Vibration length for a top-1 confidence.
pub fn feedback_for(confidence: f64) -> FeedbackEvent {
    let seconds = if confidence >= 0.85 {
        0.25
    } else if confidence >= 0.65 {
        1.0
    } else {
        2.0
    };
    FeedbackEvent::Vibration { seconds }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Idle,
    Recording,
    /// Recording ended; waiting for the classifier's ranking.
    Classifying,
    Pending,
    Triggered,
    Cancelled,
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionState::Idle => "idle",
            SessionState::Recording => "recording",
            SessionState::Classifying => "classifying",
            SessionState::Pending => "pending",
            SessionState::Triggered => "triggered",
            SessionState::Cancelled => "cancelled",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    ActionPress,
    CancelPress,
    TimerExpired,
    GestureRecognized(Ranking),
}

impl Event {
    fn name(&self) -> &'static str {
        match self {
            Event::ActionPress => "action press",
            Event::CancelPress => "cancel press",
            Event::TimerExpired => "timer expiry",
            Event::GestureRecognized(_) => "gesture recognition",
        }
    }
}

/// What one event produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Step {
    pub feedback: Vec<FeedbackEvent>,
    pub triggered: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    map: BodyMap,
    state: SessionState,
    ranking: Option<Ranking>,
    suggestions: Vec<String>,
    index: usize,
    deadline_ms: f64,
    confidence: f64,
    start_ms: Option<f64>,
    end_ms: f64,
    now_ms: f64,
    multichoice: u32,
    presses: u32,
    triggered: Option<String>,
}

impl Session {
    pub fn new(map: BodyMap) -> Self {
        Self {
            map,
            state: SessionState::Idle,
            ranking: None,
            suggestions: Vec::new(),
            index: 0,
            deadline_ms: 0.0,
            confidence: 0.0,
            start_ms: None,
            end_ms: 0.0,
            now_ms: f64::NEG_INFINITY,
            multichoice: 0,
            presses: 0,
            triggered: None,
        }
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn suggestions(&self) -> &[String] {
        &self.suggestions
    }

    /// The application that would trigger if the window closed now.
    pub fn current(&self) -> Option<&str> {
        (self.state == SessionState::Pending).then(|| self.suggestions[self.index].as_str())
    }

    pub fn deadline_ms(&self) -> Option<f64> {
        (self.state == SessionState::Pending).then_some(self.deadline_ms)
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn multichoice_count(&self) -> u32 {
        self.multichoice
    }

    pub fn press_count(&self) -> u32 {
        self.presses
    }

    pub fn triggered(&self) -> Option<&str> {
        self.triggered.as_deref()
    }

    pub fn is_final(&self) -> bool {
        matches!(self.state, SessionState::Triggered | SessionState::Cancelled)
    }

    fn offer(&mut self) -> Vec<FeedbackEvent> {
        let app = self.suggestions[self.index].clone();
        vec![FeedbackEvent::VisualProgress { app: app.clone() }, FeedbackEvent::AudioName { app }]
    }

    /// Feeds one event at logical time `now_ms`. Time must not go backwards.
    /// In the pending state presses are accepted before the deadline and the
    /// timer expiry at or after it.
    pub fn step(&mut self, event: Event, now_ms: f64) -> Result<Step, ShortcutError> {
        let illegal = ShortcutError::IllegalEvent { state: self.state, event: event.name() };
        if now_ms < self.now_ms {
            return Err(illegal);
        }
        let mut step = Step::default();
        match (self.state, event) {
            (SessionState::Idle, Event::ActionPress) => {
                self.presses += 1;
                self.start_ms = Some(now_ms);
                self.state = SessionState::Recording;
            }
            (SessionState::Recording, Event::ActionPress) => {
                self.presses += 1;
                self.state = SessionState::Classifying;
            }
            (SessionState::Classifying, Event::GestureRecognized(ranking)) => {
                self.confidence = ranking.top_confidence();
                match suggestions(&ranking, &self.map) {
                    Ok(list) => {
                        self.suggestions = list;
                        self.index = 0;
                        self.deadline_ms = now_ms + CONFIRM_WINDOW_MS;
                        self.state = SessionState::Pending;
                        step.feedback.push(feedback_for(self.confidence));
                        step.feedback.extend(self.offer());
                    }
                    Err(_) => self.state = SessionState::Cancelled,
                }
                self.ranking = Some(ranking);
            }
            (SessionState::Pending, Event::ActionPress) if now_ms < self.deadline_ms => {
                self.presses += 1;
                self.multichoice += 1;
                if self.index + 1 < self.suggestions.len() {
                    self.index += 1;
                    self.deadline_ms = now_ms + CONFIRM_WINDOW_MS;
                    step.feedback = self.offer();
                } else {
                    self.state = SessionState::Cancelled;
                }
            }
            (SessionState::Pending, Event::CancelPress) if now_ms < self.deadline_ms => {
                self.state = SessionState::Cancelled;
            }
            (SessionState::Pending, Event::TimerExpired) if now_ms >= self.deadline_ms => {
                let app = self.suggestions[self.index].clone();
                self.triggered = Some(app.clone());
                step.triggered = Some(app);
                self.state = SessionState::Triggered;
            }
            _ => return Err(illegal),
        }
        self.now_ms = now_ms;
        if self.is_final() {
            self.end_ms = now_ms;
        }
        Ok(step)
    }

    /// Drives a fresh session to the pending state with `ranking`, starting
    /// at `now_ms`.
    pub fn pending(map: BodyMap, ranking: Ranking, now_ms: f64) -> Result<(Self, Step), ShortcutError> {
        let mut s = Session::new(map);
        s.step(Event::ActionPress, now_ms)?;
        s.step(Event::ActionPress, now_ms)?;
        let step = s.step(Event::GestureRecognized(ranking), now_ms)?;
        Ok((s, step))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Triggered(String),
    Cancelled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub start: DateTime<Utc>,
    pub ranking: Vec<String>,
    pub suggestions: Vec<String>,
    pub outcome: Outcome,
    pub elapsed_ms: f64,
    pub multichoice: u32,
    pub presses: u32,
}

/// Summarizes a finished session. Logical time is placed on the wall clock
/// by adding it to `epoch`.
pub fn log_entry(session: &Session, epoch: DateTime<Utc>) -> Result<LogRecord, ShortcutError> {
    if !session.is_final() {
        return Err(ShortcutError::SessionNotFinal(session.state));
    }
    let start_ms = session.start_ms.unwrap_or(session.end_ms);
    let offset = TimeDelta::microseconds((start_ms * 1000.0).round() as i64);
    Ok(LogRecord {
        start: epoch + offset,
        ranking: session.ranking.iter().flat_map(|r| r.labels().map(str::to_string)).collect(),
        suggestions: session.suggestions.clone(),
        outcome: match &session.triggered {
            Some(app) => Outcome::Triggered(app.clone()),
            None => Outcome::Cancelled,
        },
        elapsed_ms: session.end_ms - start_ms,
        multichoice: session.multichoice,
        presses: session.presses,
    })
}

impl LogRecord {
    /// `iso_time\tranking\tsuggestions\toutcome\telapsed_ms\tmultichoice\tpresses`
    pub fn to_tsv(&self) -> String {
        let outcome = match &self.outcome {
            Outcome::Triggered(app) => app.as_str(),
            Outcome::Cancelled => "cancelled",
        };
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.start.to_rfc3339_opts(SecondsFormat::Millis, true),
            self.ranking.join(","),
            self.suggestions.join(","),
            outcome,
            self.elapsed_ms,
            self.multichoice,
            self.presses
        )
    }
}
