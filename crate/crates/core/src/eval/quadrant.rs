use std::fmt;

use serde::{Deserialize, Serialize};

use super::record::{pair_runs, PredictionRecord};
use crate::dataset::QAExample;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadrantCell {
    pub count: usize,
    pub fraction: f64,
    /// Mean recall@1 over the cell's questions that carry a recall label.
    pub recall1: Option<f64>,
}

/// Questions split by (parametric answer correct?, retrieval-augmented
/// answer correct?), with the retriever's recall@1 inside each cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadrantTable {
    /// `cells[vanilla_correct][retrieval_correct]`.
    pub cells: [[QuadrantCell; 2]; 2],
    pub total: usize,
}

impl QuadrantTable {
    pub fn cell(&self, vanilla_correct: bool, retrieval_correct: bool) -> &QuadrantCell {
        &self.cells[vanilla_correct as usize][retrieval_correct as usize]
    }

    pub fn fraction_sum(&self) -> f64 {
        self.cells.iter().flatten().map(|c| c.fraction).sum()
    }
}

pub fn quadrant_analysis(
    vanilla: &[PredictionRecord],
    retrieval: &[PredictionRecord],
    dataset: &[QAExample],
) -> Result<QuadrantTable> {
    let pairs = pair_runs(vanilla, retrieval, dataset)?;
    let mut counts = [[0usize; 2]; 2];
    let mut recall = [[(0usize, 0usize); 2]; 2];
    for (_, v, r) in &pairs {
        let (i, j) = (v.correct as usize, r.correct as usize);
        counts[i][j] += 1;
        if let Some(hit) = r.retrieval_recall1 {
            recall[i][j].0 += hit as usize;
            recall[i][j].1 += 1;
        }
    }
    let total = pairs.len();
    let mut table = QuadrantTable {
        total,
        ..Default::default()
    };
    for i in 0..2 {
        for j in 0..2 {
            let (hits, labelled) = recall[i][j];
            table.cells[i][j] = QuadrantCell {
                count: counts[i][j],
                fraction: if total == 0 {
                    0.0
                } else {
                    counts[i][j] as f64 / total as f64
                },
                recall1: (labelled > 0).then(|| hits as f64 / labelled as f64),
            };
        }
    }
    Ok(table)
}

impl fmt::Display for QuadrantTable {
    /// Each cell renders as `recall@1 (share of questions)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: bool, r: bool| {
            let c = self.cell(v, r);
            let recall = c
                .recall1
                .map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"));
            format!("{recall} ({:.0}%)", c.fraction * 100.0)
        };
        writeln!(f, "{:14}Retrieval-LM correct    Retrieval-LM wrong", "")?;
        writeln!(
            f,
            "{:<14}{:<24}{}",
            "LM correct",
            cell(true, true),
            cell(true, false)
        )?;
        write!(
            f,
            "{:<14}{:<24}{}",
            "LM wrong",
            cell(false, true),
            cell(false, false)
        )
    }
}
