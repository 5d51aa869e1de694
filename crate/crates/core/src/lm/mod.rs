//! Prompt construction and completion backends.

mod endpoint;
mod fewshot;
mod genread;
mod oracle;
mod prompt;

pub use endpoint::{approx_token_count, Completer, Completion, EndpointConfig, HttpCompleter};
pub use fewshot::{build_fewshot_pool, FewShotPool, STRATIFIED_RELATION_COUNT};
pub use genread::{genread_answer, GenReadOutput};
pub use oracle::{oracle_lm, sigmoid, OracleParams, RETRIEVAL_MISS_RATE, WRONG_ANSWER};
pub use prompt::{render_prompt, PromptMode, PromptSpec, DEFAULT_GENREAD_INSTRUCTION};
