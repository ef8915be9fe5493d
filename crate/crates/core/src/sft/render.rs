use super::SftError;
use crate::model::{InstructionRecord, TaskFormat, TaskSample};

pub const MAX_OPTIONS: usize = 26;

/// Built-in instruction templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateStyle {
    /// "Task: ...", a format directive, a blank line, then the prompt.
    Default,
    /// "[task] prompt" on one line.
    Compact,
}

impl std::str::FromStr for TemplateStyle {
    type Err = SftError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(TemplateStyle::Default),
            "compact" => Ok(TemplateStyle::Compact),
            other => Err(SftError::UnknownStyle(other.to_string())),
        }
    }
}

fn directive(format: TaskFormat) -> &'static str {
    match format {
        TaskFormat::MultipleChoice => "Choose the correct option and reply with its letter only.",
        TaskFormat::Extraction => "Extract the answer from the text and reply with it exactly.",
        TaskFormat::Generation => "Write a response to the request.",
    }
}

pub fn option_letter(i: usize) -> char {
    (b'A' + i as u8) as char
}

/// Renders a validated sample into an instruction record.
///
/// Multiple-choice options are listed as `A. ...` lines and the output is
/// the answer's letter; extraction and generation outputs are the answer
/// verbatim.
pub fn render_sample(s: &TaskSample, style: TemplateStyle) -> Result<InstructionRecord, SftError> {
    let instruction = match style {
        TemplateStyle::Default => format!("Task: {}\n{}\n\n{}", s.task, directive(s.format), s.prompt),
        TemplateStyle::Compact => format!("[{}|{}] {}", s.task, format_tag(s.format), s.prompt),
    };
    let (input, output) = match s.format {
        TaskFormat::MultipleChoice => {
            let opts = s.options.as_ref().ok_or(SftError::MissingOptions)?;
            if opts.len() > MAX_OPTIONS {
                return Err(SftError::TooManyOptions(opts.len()));
            }
            let idx = opts.iter().position(|o| *o == s.answer).ok_or(SftError::AnswerNotInOptions)?;
            let block = opts
                .iter()
                .enumerate()
                .map(|(i, o)| format!("{}. {o}", option_letter(i)))
                .collect::<Vec<_>>()
                .join("\n");
            (block, option_letter(idx).to_string())
        }
        TaskFormat::Extraction => (String::new(), s.answer.clone()),
        TaskFormat::Generation => {
            if s.answer.is_empty() {
                return Err(SftError::EmptyAnswer);
            }
            (String::new(), s.answer.clone())
        }
    };
    Ok(InstructionRecord { instruction, input, output })
}

fn format_tag(f: TaskFormat) -> &'static str {
    match f {
        TaskFormat::MultipleChoice => "mc",
        TaskFormat::Extraction => "extract",
        TaskFormat::Generation => "generate",
    }
}

/// Inverts the output encoding: maps an MC letter back to its option text.
pub fn recover_answer(record: &InstructionRecord, options: Option<&[String]>) -> Option<String> {
    match options {
        None => Some(record.output.clone()),
        Some(opts) => {
            let mut chars = record.output.chars();
            let c = chars.next()?;
            if chars.next().is_some() || !c.is_ascii_uppercase() {
                return None;
            }
            opts.get((c as u8 - b'A') as usize).cloned()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Capability;
    use proptest::prelude::*;

    fn mc(options: Vec<String>, answer: &str) -> TaskSample {
        TaskSample {
            task: "Query Classification".into(),
            capability: Capability::ContentUnderstanding,
            format: TaskFormat::MultipleChoice,
            prompt: "Which domain?".into(),
            options: Some(options),
            answer: answer.into(),
            labels: None,
        }
    }

    fn free(format: TaskFormat, answer: &str) -> TaskSample {
        TaskSample {
            task: "Hashtag Prediction".into(),
            capability: Capability::InformationExtraction,
            format,
            prompt: "Tag this note".into(),
            options: None,
            answer: answer.into(),
            labels: None,
        }
    }

    #[test]
    fn multiple_choice_letters() {
        let r = render_sample(&mc(vec!["x".into(), "y".into(), "z".into()], "y"), TemplateStyle::Default).unwrap();
        assert_eq!(r.input, "A. x\nB. y\nC. z");
        assert_eq!(r.output, "B");
        assert!(r.instruction.starts_with("Task: Query Classification\n"));
        assert!(r.instruction.ends_with("Which domain?"));
    }

    #[test]
    fn extraction_verbatim() {
        let r = render_sample(&free(TaskFormat::Extraction, " #ootd  "), TemplateStyle::Default).unwrap();
        assert_eq!(r.output.as_bytes(), " #ootd  ".as_bytes());
    }

    #[test]
    fn generation_needs_answer() {
        assert!(matches!(render_sample(&free(TaskFormat::Generation, ""), TemplateStyle::Default), Err(SftError::EmptyAnswer)));
    }

    #[test]
    fn too_many_options() {
        let opts: Vec<String> = (0..27).map(|i| format!("o{i}")).collect();
        assert!(matches!(render_sample(&mc(opts, "o0"), TemplateStyle::Default), Err(SftError::TooManyOptions(27))));
        let opts: Vec<String> = (0..26).map(|i| format!("o{i}")).collect();
        assert_eq!(render_sample(&mc(opts, "o25"), TemplateStyle::Default).unwrap().output, "Z");
    }

    #[test]
    fn styles_parse() {
        assert_eq!("compact".parse::<TemplateStyle>().unwrap(), TemplateStyle::Compact);
        assert!("fancy".parse::<TemplateStyle>().is_err());
        let r = render_sample(&free(TaskFormat::Extraction, "a"), TemplateStyle::Compact).unwrap();
        assert_eq!(r.instruction, "[Hashtag Prediction|extract] Tag this note");
    }

    fn arb_valid() -> impl Strategy<Value = TaskSample> {
        prop_oneof![
            (proptest::collection::vec("[a-z]{1,4}", 2..6), any::<proptest::sample::Index>(), "[a-z ?]{0,12}")
                .prop_map(|(opts, idx, prompt)| {
                    let answer = idx.get(&opts).clone();
                    TaskSample { prompt, ..mc(opts, &answer) }
                }),
            ("[a-z]{1,6}", "[a-z ]{0,12}", any::<bool>()).prop_map(|(answer, prompt, ext)| TaskSample {
                prompt,
                ..free(if ext { TaskFormat::Extraction } else { TaskFormat::Generation }, &answer)
            }),
        ]
    }

    proptest! {
        #[test]
        fn answer_recoverable(s in arb_valid()) {
            for style in [TemplateStyle::Default, TemplateStyle::Compact] {
                let r = render_sample(&s, style).unwrap();
                let recovered = recover_answer(&r, s.options.as_deref()).unwrap();
                // duplicate option texts resolve to the first occurrence, which is the same string
                prop_assert_eq!(recovered, s.answer.clone());
            }
        }

        #[test]
        fn rendering_is_injective(a in arb_valid(), b in arb_valid()) {
            prop_assume!(a != b);
            for style in [TemplateStyle::Default, TemplateStyle::Compact] {
                prop_assert_ne!(render_sample(&a, style).unwrap(), render_sample(&b, style).unwrap());
            }
        }
    }
}
