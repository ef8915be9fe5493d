use std::collections::BTreeMap;
use std::fmt;

use crate::model::{Capability, TaskFormat, TaskSample};

/// The twelve SNS tasks and the capability each one exercises.
pub const DEFAULT_TASKS: [(&str, Capability); 12] = [
    ("Note Taxonomy", Capability::ContentUnderstanding),
    ("Query Classification", Capability::ContentUnderstanding),
    ("Query Intent Recognition", Capability::ContentUnderstanding),
    ("Hashtag Prediction", Capability::InformationExtraction),
    ("Machine Reading Comprehension", Capability::InformationExtraction),
    ("Highlight Word Detection", Capability::InformationExtraction),
    ("Query-Note Relevance", Capability::SemanticMatching),
    ("Query-Note Retrieval", Capability::SemanticMatching),
    ("Post-View Search", Capability::UserBehaviorModeling),
    ("Emotional Companion Dialogue", Capability::Dialogue),
    ("Role-playing Dialogue", Capability::Dialogue),
    ("SNS Domain Translation", Capability::Translation),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleError {
    UnknownTask(String),
    CapabilityMismatch { task: String, expected: Capability, found: Capability },
    MissingOptions,
    TooFewOptions(usize),
    AnswerNotInOptions,
    UnexpectedOptions,
    EmptyAnswer,
}

impl SampleError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            SampleError::UnknownTask(_) => "unknown_task",
            SampleError::CapabilityMismatch { .. } => "capability_mismatch",
            SampleError::MissingOptions => "missing_options",
            SampleError::TooFewOptions(_) => "too_few_options",
            SampleError::AnswerNotInOptions => "answer_not_in_options",
            SampleError::UnexpectedOptions => "unexpected_options",
            SampleError::EmptyAnswer => "empty_answer",
        }
    }
}

impl fmt::Display for SampleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleError::UnknownTask(t) => write!(f, "{}: {t:?} is not a registered task", self.code()),
            SampleError::CapabilityMismatch { task, expected, found } => write!(
                f,
                "{}: {task} belongs to {} but sample says {}",
                self.code(),
                expected.as_str(),
                found.as_str()
            ),
            SampleError::TooFewOptions(n) => write!(f, "{}: multiple choice needs >= 2 options, got {n}", self.code()),
            _ => f.write_str(self.code()),
        }
    }
}

/// Task name -> capability map. Starts from the twelve defaults and can be
/// extended from configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRegistry {
    tasks: BTreeMap<String, Capability>,
}

impl Default for TaskRegistry {
    fn default() -> Self {
        TaskRegistry { tasks: DEFAULT_TASKS.iter().map(|(t, c)| (t.to_string(), *c)).collect() }
    }
}

impl TaskRegistry {
    pub fn with_extra(mut self, extra: impl IntoIterator<Item = (String, Capability)>) -> Self {
        self.tasks.extend(extra);
        self
    }

    pub fn capability(&self, task: &str) -> Option<Capability> {
        self.tasks.get(task).copied()
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// All violations of `s`, or `Ok` when there are none.
    pub fn validate(&self, s: &TaskSample) -> Result<(), Vec<SampleError>> {
        let mut errs = Vec::new();
        match self.capability(&s.task) {
            None => errs.push(SampleError::UnknownTask(s.task.clone())),
            Some(expected) if expected != s.capability => errs.push(SampleError::CapabilityMismatch {
                task: s.task.clone(),
                expected,
                found: s.capability,
            }),
            Some(_) => {}
        }
        errs.extend(format_errors(s));
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

/// Option/answer invariants tied to the sample's format.
pub fn format_errors(s: &TaskSample) -> Vec<SampleError> {
    let mut errs = Vec::new();
    match (s.format, &s.options) {
        (TaskFormat::MultipleChoice, None) => errs.push(SampleError::MissingOptions),
        (TaskFormat::MultipleChoice, Some(opts)) => {
            if opts.len() < 2 {
                errs.push(SampleError::TooFewOptions(opts.len()));
            }
            if !opts.contains(&s.answer) {
                errs.push(SampleError::AnswerNotInOptions);
            }
        }
        (_, Some(_)) => errs.push(SampleError::UnexpectedOptions),
        (TaskFormat::Generation, None) if s.answer.is_empty() => errs.push(SampleError::EmptyAnswer),
        _ => {}
    }
    errs
}

pub fn validate_task_sample(s: &TaskSample) -> Result<(), Vec<SampleError>> {
    TaskRegistry::default().validate(s)
}
