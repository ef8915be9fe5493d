//! Record types shared by every stage.
//!
//! Field declaration order is the canonical JSON field order; serializing a
//! parsed record reproduces the canonical line byte-for-byte.

use serde::{Deserialize, Serialize};

use crate::tokenize::count_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    General,
    Sns,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionMeta {
    pub parent_id: Option<String>,
    pub likes: u64,
}

/// One corpus record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub id: String,
    pub source: Source,
    pub domain: String,
    pub text: String,
    pub interactions: Option<InteractionMeta>,
}

impl Document {
    pub fn token_count(&self) -> usize {
        count_tokens(&self.text)
    }

    pub fn parent_id(&self) -> Option<&str> {
        self.interactions.as_ref()?.parent_id.as_deref()
    }

    pub fn likes(&self) -> u64 {
        self.interactions.as_ref().map_or(0, |m| m.likes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    ContentUnderstanding,
    InformationExtraction,
    SemanticMatching,
    UserBehaviorModeling,
    Dialogue,
    Translation,
}

impl Capability {
    pub fn as_str(self) -> &'static str {
        match self {
            Capability::ContentUnderstanding => "content_understanding",
            Capability::InformationExtraction => "information_extraction",
            Capability::SemanticMatching => "semantic_matching",
            Capability::UserBehaviorModeling => "user_behavior_modeling",
            Capability::Dialogue => "dialogue",
            Capability::Translation => "translation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskFormat {
    MultipleChoice,
    Extraction,
    Generation,
}

/// Primary/secondary category labels attached by an external labeling model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryLabels {
    pub primary: String,
    pub secondary: Option<String>,
}

/// One SFT instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSample {
    pub task: String,
    pub capability: Capability,
    pub format: TaskFormat,
    pub prompt: String,
    pub options: Option<Vec<String>>,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<CategoryLabels>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Judge,
    Ordinal,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferencePair {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    pub strategy: Strategy,
    pub source_id: String,
}

/// Rendered instruction/response triple consumed by SFT trainers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstructionRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

impl InstructionRecord {
    pub fn token_count(&self) -> usize {
        count_tokens(&self.instruction) + count_tokens(&self.input) + count_tokens(&self.output)
    }
}
