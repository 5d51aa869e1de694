use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stage-1 instruction for generate-then-read prompting.
pub const DEFAULT_GENREAD_INSTRUCTION: &str =
    "Generate a background document from Wikipedia to answer the given question.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptMode {
    Vanilla,
    Retrieval,
    GenreadStage1,
    GenreadStage2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSpec {
    mode: PromptMode,
    question: String,
    context: Option<String>,
    fewshot_pairs: Vec<(String, String)>,
    instruction: Option<String>,
}

impl PromptSpec {
    pub fn new(
        mode: PromptMode,
        question: impl Into<String>,
        context: Option<String>,
        fewshot_pairs: Vec<(String, String)>,
    ) -> Result<Self> {
        if matches!(mode, PromptMode::Retrieval | PromptMode::GenreadStage2) && context.is_none() {
            return Err(Error::Validation(format!(
                "{mode:?} prompt requires a context"
            )));
        }
        Ok(Self {
            mode,
            question: question.into(),
            context,
            fewshot_pairs,
            instruction: None,
        })
    }

    pub fn vanilla(question: impl Into<String>, fewshot_pairs: Vec<(String, String)>) -> Self {
        Self::new(PromptMode::Vanilla, question, None, fewshot_pairs).unwrap()
    }

    /// Overrides the stage-1 instruction.
    pub fn with_instruction(mut self, instruction: impl Into<String>) -> Self {
        self.instruction = Some(instruction.into());
        self
    }

    pub fn mode(&self) -> PromptMode {
        self.mode
    }

    pub fn shots(&self) -> usize {
        self.fewshot_pairs.len()
    }

    pub fn question(&self) -> &str {
        &self.question
    }

    pub fn context(&self) -> Option<&str> {
        self.context.as_deref()
    }

    pub fn fewshot_pairs(&self) -> &[(String, String)] {
        &self.fewshot_pairs
    }
}

/// Renders the `Q: ... A:` prompt.
///
/// Blocks are separated by blank lines: each few-shot pair as
/// `Q: {q} A: {a}`, then the context paragraph if any, then
/// `Q: {question} A:`. Stage 1 of generate-then-read is the instruction
/// followed by the question.
pub fn render_prompt(spec: &PromptSpec) -> String {
    if spec.mode == PromptMode::GenreadStage1 {
        let instruction = spec
            .instruction
            .as_deref()
            .unwrap_or(DEFAULT_GENREAD_INSTRUCTION);
        return format!("{instruction}\n\n{}", spec.question);
    }
    let mut blocks: Vec<String> = spec
        .fewshot_pairs
        .iter()
        .map(|(q, a)| format!("Q: {q} A: {a}"))
        .collect();
    if let Some(ctx) = &spec.context {
        blocks.push(ctx.clone());
    }
    blocks.push(format!("Q: {} A:", spec.question));
    blocks.join("\n\n")
}
