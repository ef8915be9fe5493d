//! Data-curation primitives for a three-stage LLM training recipe:
//! continued-pretraining corpus filtering and packing, data-mixture search,
//! SFT and preference dataset construction, and benchmark scoring.

pub mod config;
pub mod eval;
pub mod filter;
pub mod jsonl;
pub mod mixture;
pub mod model;
pub mod numeric;
pub mod pack;
pub mod pref;
pub mod sft;
pub mod tokenize;

pub use model::{Document, InstructionRecord, InteractionMeta, PreferencePair, Source, Strategy, TaskSample};
pub use tokenize::count_tokens;
