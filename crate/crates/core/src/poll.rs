//! Poll trees: questions with weighted answer alternatives, where an
//! alternative may lead to a follow-up question.
//!
//! The JSON layout is the root question object with an extra top-level
//! `target_path` field:
//!
//! ```json
//! {"id": "Q1",
//!  "alternatives": [{"id": "Q1A1", "weight": 0.9, "follow_up": null},
//!                   {"id": "Q1A2", "weight": 0.1, "follow_up": null}],
//!  "target_path": [["Q1", "Q1A1"]]}
//! ```

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on the sum of a question's weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alternative {
    pub id: String,
    /// Probability of this alternative under the known randomization
    /// distribution of its question.
    pub weight: f64,
    pub follow_up: Option<Box<Question>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub id: String,
    pub alternatives: Vec<Alternative>,
}

impl Question {
    pub fn alternative_index(&self, id: &str) -> Option<usize> {
        self.alternatives.iter().position(|a| a.id == id)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.alternatives.iter().map(|a| a.weight)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollTree {
    #[serde(flatten)]
    pub root: Question,
    /// `(question id, alternative id)` steps from the root to the target leaf.
    pub target_path: Vec<(String, String)>,
}

impl PollTree {
    /// Alternative indices along the target path, one per question.
    pub fn target_indices(&self) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(self.target_path.len());
        let mut current = Some(&self.root);
        for (step, (qid, aid)) in self.target_path.iter().enumerate() {
            let q = current
                .filter(|q| &q.id == qid)
                .ok_or_else(|| Error::Validation(vec![Violation::TargetPathBroken { step }]))?;
            let idx = q
                .alternative_index(aid)
                .ok_or_else(|| Error::Validation(vec![Violation::TargetPathBroken { step }]))?;
            out.push(idx);
            current = q.alternatives[idx].follow_up.as_deref();
        }
        Ok(out)
    }

    /// Questions along the target path, root first.
    pub fn chain(&self) -> Result<Vec<&Question>> {
        let idx = self.target_indices()?;
        let mut out = Vec::with_capacity(idx.len());
        let mut q = &self.root;
        for (i, &a) in idx.iter().enumerate() {
            out.push(q);
            if i + 1 < idx.len() {
                q = q.alternatives[a].follow_up.as_deref().expect("resolved path");
            }
        }
        Ok(out)
    }

    pub fn leaf_count(&self) -> usize {
        fn walk(q: &Question) -> usize {
            q.alternatives
                .iter()
                .map(|a| a.follow_up.as_deref().map_or(1, walk))
                .sum()
        }
        walk(&self.root)
    }
}

/// One broken invariant found by [`validate_poll`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewAlternatives { question: String },
    WeightOutOfRange { question: String, alternative: String, weight: f64 },
    WeightSum { question: String, sum: f64 },
    DuplicateQuestionId { question: String },
    DuplicateAlternativeId { question: String, alternative: String },
    EmptyTargetPath,
    TargetPathBroken { step: usize },
    TargetNotLeaf { question: String, alternative: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewAlternatives { question } => {
                write!(f, "question `{question}` has fewer than 2 alternatives")
            }
            Violation::WeightOutOfRange { question, alternative, weight } => write!(
                f,
                "weight {weight} of `{question}`/`{alternative}` is outside (0, 1)"
            ),
            Violation::WeightSum { question, sum } => {
                write!(f, "question `{question}`: weights sum ≠ 1 (sum = {sum})")
            }
            Violation::DuplicateQuestionId { question } => {
                write!(f, "duplicate question id `{question}`")
            }
            Violation::DuplicateAlternativeId { question, alternative } => {
                write!(f, "duplicate alternative id `{alternative}` in question `{question}`")
            }
            Violation::EmptyTargetPath => write!(f, "target path is empty"),
            Violation::TargetPathBroken { step } => write!(
                f,
                "target path step {step} does not follow the tree from the root"
            ),
            Violation::TargetNotLeaf { question, alternative } => {
                write!(f, "target not a leaf: `{question}`/`{alternative}` has a follow-up")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks weights, id uniqueness and the target path. Violations are
/// returned as data.
pub fn validate_poll(poll: &PollTree) -> ValidationReport {
    let mut violations = Vec::new();
    let mut question_ids = HashSet::new();
    let mut stack = vec![&poll.root];
    while let Some(q) = stack.pop() {
        if !question_ids.insert(q.id.as_str()) {
            violations.push(Violation::DuplicateQuestionId { question: q.id.clone() });
        }
        if q.alternatives.len() < 2 {
            violations.push(Violation::TooFewAlternatives { question: q.id.clone() });
        }
        let mut alt_ids = HashSet::new();
        for a in &q.alternatives {
            if !alt_ids.insert(a.id.as_str()) {
                violations.push(Violation::DuplicateAlternativeId {
                    question: q.id.clone(),
                    alternative: a.id.clone(),
                });
            }
            if !(a.weight > 0.0 && a.weight < 1.0) {
                violations.push(Violation::WeightOutOfRange {
                    question: q.id.clone(),
                    alternative: a.id.clone(),
                    weight: a.weight,
                });
            }
        }
        let sum: f64 = q.weights().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            violations.push(Violation::WeightSum { question: q.id.clone(), sum });
        }
        // push in reverse so traversal reports in document order
        for a in q.alternatives.iter().rev() {
            if let Some(fu) = a.follow_up.as_deref() {
                stack.push(fu);
            }
        }
    }

    if poll.target_path.is_empty() {
        violations.push(Violation::EmptyTargetPath);
    } else {
        match poll.target_indices() {
            Err(Error::Validation(v)) => violations.extend(v),
            Err(_) => unreachable!("target_indices only reports validation errors"),
            Ok(idx) => {
                let chain = poll.chain().expect("resolved path");
                let last_q = chain[chain.len() - 1];
                let last_a = &last_q.alternatives[idx[idx.len() - 1]];
                if last_a.follow_up.is_some() {
                    violations.push(Violation::TargetNotLeaf {
                        question: last_q.id.clone(),
                        alternative: last_a.id.clone(),
                    });
                }
            }
        }
    }
    ValidationReport { violations }
}

/// Builds a spine poll: a chain of `depth` questions with `n_alts`
/// alternatives each. The first alternative of every question is the chain
/// alternative with weight `target_weight`; its siblings share the rest
/// evenly. Only chain alternatives of non-final questions have follow-ups,
/// and the target is the chain alternative of the deepest question.
pub fn build_spine_poll(depth: usize, n_alts: usize, target_weight: f64) -> Result<PollTree> {
    if depth < 1 {
        return Err(Error::InvalidArgument("poll depth must be at least 1".into()));
    }
    if n_alts < 2 {
        return Err(Error::InvalidArgument("a question needs at least 2 alternatives".into()));
    }
    if !(target_weight > 0.0 && target_weight < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target weight must be in (0, 1), got {target_weight}"
        )));
    }
    let sibling_weight = (1.0 - target_weight) / (n_alts - 1) as f64;

    let mut follow_up: Option<Box<Question>> = None;
    let mut target_path = Vec::with_capacity(depth);
    for level in (1..=depth).rev() {
        let qid = format!("Q{level}");
        let alternatives = (1..=n_alts)
            .map(|a| Alternative {
                id: format!("{qid}A{a}"),
                weight: if a == 1 { target_weight } else { sibling_weight },
                follow_up: if a == 1 { follow_up.take() } else { None },
            })
            .collect();
        target_path.push((qid.clone(), format!("{qid}A1")));
        follow_up = Some(Box::new(Question { id: qid, alternatives }));
    }
    target_path.reverse();
    Ok(PollTree {
        root: *follow_up.expect("depth >= 1"),
        target_path,
    })
}

/// Parses and validates a poll.
pub fn load_poll(json: &str) -> Result<PollTree> {
    let poll: PollTree = serde_json::from_str(json)?;
    let report = validate_poll(&poll);
    if !report.is_ok() {
        return Err(Error::Validation(report.violations));
    }
    Ok(poll)
}

pub fn save_poll(poll: &PollTree) -> String {
    serde_json::to_string_pretty(poll).expect("poll trees always serialize")
}
