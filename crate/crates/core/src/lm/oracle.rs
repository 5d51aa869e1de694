//! Synthetic stand-in for a language model whose parametric recall rises
//! with subject popularity and whose retrieval-augmented answers depend on
//! whether the retrieved passage contains the answer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::QAExample;
use crate::error::Result;
use crate::eval::Mode;
use crate::rng::rng_for;

/// Output of the oracle when it does not know the answer.
pub const WRONG_ANSWER: &str = "UNKNOWN_ENTITY";

/// Correct-answer rate with retrieval when the passage misses the answer.
pub const RETRIEVAL_MISS_RATE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleParams {
    /// Slope of the popularity logistic.
    pub a: f64,
    /// log10 popularity at which parametric recall is 50%.
    pub b: f64,
    /// Probability of reading the answer off a passage that contains it.
    pub readout: f64,
    /// Synthetic latency per prompt token.
    #[serde(default = "OracleParams::default_ms_per_prompt_token")]
    pub ms_per_prompt_token: f64,
    /// Synthetic latency per generated token.
    #[serde(default = "OracleParams::default_ms_per_completion_token")]
    pub ms_per_completion_token: f64,
}

impl OracleParams {
    fn default_ms_per_prompt_token() -> f64 {
        0.1
    }
    fn default_ms_per_completion_token() -> f64 {
        20.0
    }

    pub fn new(a: f64, b: f64, readout: f64) -> Self {
        Self {
            a,
            b,
            readout,
            ms_per_prompt_token: Self::default_ms_per_prompt_token(),
            ms_per_completion_token: Self::default_ms_per_completion_token(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        use crate::error::Error;
        if !(self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::Config("oracle.a and oracle.b must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.readout) {
            return Err(Error::Config("oracle.readout must lie in [0, 1]".into()));
        }
        if !(self.ms_per_prompt_token >= 0.0 && self.ms_per_completion_token >= 0.0) {
            return Err(Error::Config("oracle latency rates must be >= 0".into()));
        }
        Ok(())
    }

    /// Probability that the answer is correct.
    ///
    /// Generate-then-read relies on parametric memory and is modelled like
    /// the plain question.
    pub fn correct_probability(&self, log10_pop: f64, mode: Mode, retrieval_hit: bool) -> f64 {
        match mode {
            Mode::Vanilla | Mode::Genread => sigmoid(self.a * (log10_pop - self.b)),
            Mode::Retrieval if retrieval_hit => self.readout,
            Mode::Retrieval => RETRIEVAL_MISS_RATE,
        }
    }

    pub fn latency_ms(&self, prompt_tokens: u64, completion_tokens: u64) -> u64 {
        (prompt_tokens as f64 * self.ms_per_prompt_token
            + completion_tokens as f64 * self.ms_per_completion_token)
            .round() as u64
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Deterministic in (seed, example id, mode): one uniform draw `u` per call,
/// and the answer is correct iff `u < p`. The draw does not depend on
/// popularity, so raising popularity never turns a correct answer wrong.
pub fn oracle_lm(
    example: &QAExample,
    mode: Mode,
    retrieval_hit: bool,
    params: &OracleParams,
    rng_seed: u64,
) -> Result<String> {
    let log10_pop = example.require_log10_popularity()?;
    let p = params.correct_probability(log10_pop, mode, retrieval_hit);
    let u: f64 = rng_for(rng_seed, &["oracle", mode.as_str(), &example.id]).gen();
    Ok(if u < p {
        example.answers[0].clone()
    } else {
        WRONG_ANSWER.to_string()
    })
}
