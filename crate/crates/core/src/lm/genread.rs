//! Generate-then-read: the model writes its own context document, then
//! answers with that document in the prompt.

use super::endpoint::{Completer, Completion};
use super::prompt::{render_prompt, PromptMode, PromptSpec};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct GenReadOutput {
    pub generated_context: String,
    /// Stage-2 answer text with token counts and latency summed over both stages.
    pub completion: Completion,
    pub answer_prompt: String,
    /// Stage 1 returned only whitespace; stage 2 ran as a plain question.
    pub empty_context: bool,
}

pub fn genread_answer<C: Completer + ?Sized>(
    completer: &C,
    question: &str,
    fewshot_pairs: &[(String, String)],
    instruction: &str,
) -> Result<GenReadOutput> {
    let stage1 = PromptSpec::new(PromptMode::GenreadStage1, question, None, vec![])?
        .with_instruction(instruction);
    let doc = completer.complete(&render_prompt(&stage1))?;
    let generated = doc.text.trim().to_string();
    let empty_context = generated.is_empty();
    let stage2 = if empty_context {
        PromptSpec::vanilla(question, fewshot_pairs.to_vec())
    } else {
        PromptSpec::new(
            PromptMode::GenreadStage2,
            question,
            Some(generated.clone()),
            fewshot_pairs.to_vec(),
        )?
    };
    let answer_prompt = render_prompt(&stage2);
    let answer = completer.complete(&answer_prompt)?;
    Ok(GenReadOutput {
        generated_context: generated,
        completion: Completion {
            text: answer.text,
            prompt_tokens: doc.prompt_tokens + answer.prompt_tokens,
            completion_tokens: doc.completion_tokens + answer.completion_tokens,
            latency_ms: doc.latency_ms + answer.latency_ms,
            from_cache: doc.from_cache && answer.from_cache,
        },
        answer_prompt,
        empty_context,
    })
}
