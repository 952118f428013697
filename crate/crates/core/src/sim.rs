//! Deterministic randomized-response simulation over poll trees.
//!
//! A respondent answers each question truthfully with probability
//! `Pr[truth]` and otherwise draws an alternative from the question's weight
//! vector (which may re-draw the true answer). The reported alternative's
//! follow-up, if any, is asked next. The collector inverts the mechanism
//! question by question along the target path and multiplies the results.
//!
//! # Seeding
//!
//! Repetition `r` of a setting run with seed `s` uses a ChaCha8 stream seeded
//! with [`derive_seed`]`(s, r)`, a SplitMix64 mix of the two values. Results
//! therefore do not depend on thread scheduling.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::poll::{build_spine_poll, PollTree, Question};
use crate::{Error, Result};

/// The six poll factors, in actual units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    #[serde(rename = "truth")]
    pub pr_truth: f64,
    pub depth: u32,
    #[serde(rename = "alts")]
    pub n_alts: u32,
    #[serde(rename = "weight")]
    pub target_weight: f64,
    #[serde(rename = "pop")]
    pub population: u64,
    #[serde(rename = "answers")]
    pub answers_fraction: f64,
}

impl ScenarioParams {
    /// Center of the default factor space.
    pub fn baseline() -> Self {
        ScenarioParams {
            pr_truth: 0.5,
            depth: 3,
            n_alts: 6,
            target_weight: 0.5,
            population: 50_500,
            answers_fraction: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(0.0..=1.0).contains(&self.pr_truth) {
            return bad("Pr[truth] must be a probability");
        }
        if self.depth < 1 {
            return bad("depth must be at least 1");
        }
        if self.n_alts < 2 {
            return bad("number of alternatives must be at least 2");
        }
        if !(self.target_weight > 0.0 && self.target_weight < 1.0) {
            return bad("target weight must be in (0, 1)");
        }
        if self.population < 1 {
            return bad("population must be positive");
        }
        if !(self.answers_fraction > 0.0 && self.answers_fraction < 1.0) {
            return bad("answers fraction must be in (0, 1)");
        }
        Ok(())
    }

    pub fn spine_poll(&self) -> Result<PollTree> {
        build_spine_poll(self.depth as usize, self.n_alts as usize, self.target_weight)
    }
}

/// Respondents sharing one true root-to-leaf path.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthGroup {
    /// Alternative index chosen at each question along the path.
    pub path: Vec<usize>,
    pub count: u64,
}

/// True answers of a synthetic population, stored as groups of identical
/// respondents.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub groups: Vec<TruthGroup>,
    pub true_target_count: u64,
}

impl Population {
    pub fn size(&self) -> u64 {
        self.groups.iter().map(|g| g.count).sum()
    }

    /// One true path per respondent.
    pub fn assignments(&self) -> impl Iterator<Item = &[usize]> {
        self.groups
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.path.as_slice(), g.count as usize))
    }

    pub fn true_fraction(&self) -> f64 {
        self.true_target_count as f64 / self.size() as f64
    }
}

/// Deterministic truth assignment: `round(population · answers_fraction)`
/// respondents take the target path, the rest follow the target chain to the
/// deepest question and are spread evenly over its other alternatives (the
/// remainder going to the earliest ones).
pub fn assign_truth(poll: &PollTree, population: u64, answers_fraction: f64) -> Result<Population> {
    if population < 1 {
        return Err(Error::InvalidArgument("population must be positive".into()));
    }
    if !(answers_fraction > 0.0 && answers_fraction < 1.0) {
        return Err(Error::InvalidArgument("answers fraction must be in (0, 1)".into()));
    }
    let target = poll.target_indices()?;
    if target.is_empty() {
        return Err(Error::InvalidArgument("poll has an empty target path".into()));
    }
    let t = (population as f64 * answers_fraction).round() as u64;
    if t == 0 || t >= population {
        return Err(Error::DegeneratePopulation { population, target: t });
    }

    let chain = poll.chain()?;
    let deepest = chain[chain.len() - 1];
    let target_alt = target[target.len() - 1];
    let siblings: Vec<usize> = (0..deepest.alternatives.len())
        .filter(|&i| i != target_alt)
        .collect();

    let rest = population - t;
    let base = rest / siblings.len() as u64;
    let leftover = rest % siblings.len() as u64;

    let mut groups = vec![TruthGroup { path: target.clone(), count: t }];
    let prefix = &target[..target.len() - 1];
    for (k, &s) in siblings.iter().enumerate() {
        let count = base + u64::from((k as u64) < leftover);
        if count > 0 {
            let mut path = prefix.to_vec();
            path.push(s);
            groups.push(TruthGroup { path, count });
        }
    }
    Ok(Population { groups, true_target_count: t })
}

/// Reported answers at one question.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QuestionTally {
    pub answered: u64,
    /// Reports per alternative, in question order.
    pub counts: Vec<u64>,
}

/// The collector's view: per-question report counts keyed by question id.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ResponseTally {
    pub questions: BTreeMap<String, QuestionTally>,
}

impl ResponseTally {
    fn record(&mut self, q: &Question, reported: usize, times: u64) {
        let entry = self
            .questions
            .entry(q.id.clone())
            .or_insert_with(|| QuestionTally {
                answered: 0,
                counts: vec![0; q.alternatives.len()],
            });
        entry.answered += times;
        entry.counts[reported] += times;
    }

    pub fn get(&self, question_id: &str) -> Option<&QuestionTally> {
        self.questions.get(question_id)
    }

    pub fn merge(&mut self, other: &ResponseTally) {
        for (id, t) in &other.questions {
            let e = self.questions.entry(id.clone()).or_insert_with(|| QuestionTally {
                answered: 0,
                counts: vec![0; t.counts.len()],
            });
            e.answered += t.answered;
            for (a, b) in e.counts.iter_mut().zip(&t.counts) {
                *a += b;
            }
        }
    }
}

/// Probability of reporting each alternative given the true one (if the
/// respondent is on their true branch).
pub fn report_distribution(question: &Question, true_alt: Option<usize>, pr_truth: f64) -> Vec<f64> {
    question
        .alternatives
        .iter()
        .enumerate()
        .map(|(i, a)| match true_alt {
            Some(t) => (1.0 - pr_truth) * a.weight + if i == t { pr_truth } else { 0.0 },
            None => a.weight,
        })
        .collect()
}

fn draw_by_weight<R: Rng + ?Sized>(question: &Question, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, a) in question.alternatives.iter().enumerate() {
        acc += a.weight;
        if u < acc {
            return i;
        }
    }
    question.alternatives.len() - 1
}

fn randomize_index<R: Rng + ?Sized>(
    question: &Question,
    true_alt: Option<usize>,
    pr_truth: f64,
    rng: &mut R,
) -> usize {
    if let Some(t) = true_alt {
        if rng.random::<f64>() < pr_truth {
            return t;
        }
    }
    draw_by_weight(question, rng)
}

/// One randomized answer. Returns the id of the reported alternative.
pub fn randomize_one<'q, R: Rng + ?Sized>(
    question: &'q Question,
    true_alt: Option<&str>,
    pr_truth: f64,
    rng: &mut R,
) -> Result<&'q str> {
    let idx = match true_alt {
        Some(id) => Some(question.alternative_index(id).ok_or_else(|| {
            Error::InvalidArgument(format!("`{id}` is not an alternative of `{}`", question.id))
        })?),
        None => None,
    };
    Ok(&question.alternatives[randomize_index(question, idx, pr_truth, rng)].id)
}

fn next_truth(path: Option<&[usize]>, reported: usize) -> Option<&[usize]> {
    match path {
        Some(p) if p[0] == reported && p.len() > 1 => Some(&p[1..]),
        _ => None,
    }
}

/// Every respondent walks the tree from the root, one randomized answer per
/// question they are routed to.
pub fn collect_responses<R: Rng + ?Sized>(
    poll: &PollTree,
    population: &Population,
    pr_truth: f64,
    rng: &mut R,
) -> ResponseTally {
    let mut tally = ResponseTally::default();
    for path in population.assignments() {
        let mut question = &poll.root;
        let mut truth = (!path.is_empty()).then_some(path);
        loop {
            let reported = randomize_index(question, truth.map(|p| p[0]), pr_truth, rng);
            tally.record(question, reported, 1);
            match question.alternatives[reported].follow_up.as_deref() {
                Some(next) => {
                    truth = next_truth(truth, reported);
                    question = next;
                }
                None => break,
            }
        }
    }
    tally
}

/// Same response model as [`collect_responses`], drawn per group of
/// identical respondents with a multinomial per question. The tallies have
/// the same distribution at a cost independent of the population size.
pub fn collect_responses_aggregated<R: Rng + ?Sized>(
    poll: &PollTree,
    population: &Population,
    pr_truth: f64,
    rng: &mut R,
) -> ResponseTally {
    let mut tally = ResponseTally::default();
    let groups: Vec<Group> = population
        .groups
        .iter()
        .map(|g| ((!g.path.is_empty()).then_some(g.path.as_slice()), g.count))
        .collect();
    visit(&poll.root, groups, pr_truth, rng, &mut tally);
    tally
}

/// Respondents sharing a true path (`None` once routed off it), with a count.
type Group<'p> = (Option<&'p [usize]>, u64);

fn visit<'p, R: Rng + ?Sized>(
    question: &Question,
    groups: Vec<Group<'p>>,
    pr_truth: f64,
    rng: &mut R,
    tally: &mut ResponseTally,
) {
    let m = question.alternatives.len();
    let mut children: Vec<Vec<Group<'p>>> = vec![Vec::new(); m];
    for (truth, count) in groups {
        if count == 0 {
            continue;
        }
        let probs = report_distribution(question, truth.map(|p| p[0]), pr_truth);
        for (alt, c) in multinomial(count, &probs, rng).into_iter().enumerate() {
            if c == 0 {
                continue;
            }
            tally.record(question, alt, c);
            if question.alternatives[alt].follow_up.is_some() {
                children[alt].push((next_truth(truth, alt), c));
            }
        }
    }
    for (alt, child_groups) in children.into_iter().enumerate() {
        if let Some(next) = question.alternatives[alt].follow_up.as_deref() {
            if !child_groups.is_empty() {
                visit(next, child_groups, pr_truth, rng, tally);
            }
        }
    }
}

fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut out = vec![0; probs.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let c = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q).expect("valid binomial").sample(rng)
        };
        out[i] = c;
        remaining -= c;
        mass -= p;
    }
    out
}

/// Inverts randomized response at each question on the target path,
/// `x_i = (y_i - (1 - p) w_i) / p`, and returns the product. Estimates are
/// not clamped to `[0, 1]`.
pub fn estimate_target(poll: &PollTree, tally: &ResponseTally, pr_truth: f64) -> Result<f64> {
    if pr_truth <= 0.0 {
        return Err(Error::NonInvertibleMechanism);
    }
    let target = poll.target_indices()?;
    let chain = poll.chain()?;
    let mut estimate = 1.0;
    for (q, &alt) in chain.iter().zip(&target) {
        let t = tally
            .get(&q.id)
            .filter(|t| t.answered > 0)
            .ok_or_else(|| Error::InsufficientData(format!("no answers recorded for `{}`", q.id)))?;
        let y = t.counts[alt] as f64 / t.answered as f64;
        let w = q.alternatives[alt].weight;
        estimate *= (y - (1.0 - pr_truth) * w) / pr_truth;
    }
    Ok(estimate)
}

/// Mean absolute percentage error of `estimates` against `truth`.
pub fn mape(estimates: &[f64], truth: f64) -> f64 {
    let n = estimates.len() as f64;
    100.0 / n * estimates.iter().map(|e| ((truth - e) / truth).abs()).sum::<f64>()
}

/// SplitMix64 mix of a base seed and a stream index.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TallyMethod {
    /// One draw per respondent per question.
    PerRespondent,
    /// One multinomial draw per group of identical respondents.
    #[default]
    Aggregated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub scenario: ScenarioParams,
    pub true_fraction: f64,
    pub estimates: Vec<f64>,
    pub mape: f64,
}

/// Runs one setting `n_reps` times and reports the MAPE of the target
/// estimate.
pub fn run_setting(scenario: &ScenarioParams, n_reps: usize, seed: u64) -> Result<SimulationResult> {
    run_setting_with(scenario, n_reps, seed, TallyMethod::default())
}

pub fn run_setting_with(
    scenario: &ScenarioParams,
    n_reps: usize,
    seed: u64,
    method: TallyMethod,
) -> Result<SimulationResult> {
    if n_reps < 1 {
        return Err(Error::InvalidArgument("at least one repetition is required".into()));
    }
    scenario.validate()?;
    if scenario.pr_truth <= 0.0 {
        return Err(Error::NonInvertibleMechanism);
    }
    let poll = scenario.spine_poll()?;
    let population = assign_truth(&poll, scenario.population, scenario.answers_fraction)?;
    let true_fraction = population.true_fraction();

    let estimates = (0..n_reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r));
            let tally = match method {
                TallyMethod::PerRespondent => {
                    collect_responses(&poll, &population, scenario.pr_truth, &mut rng)
                }
                TallyMethod::Aggregated => {
                    collect_responses_aggregated(&poll, &population, scenario.pr_truth, &mut rng)
                }
            };
            estimate_target(&poll, &tally, scenario.pr_truth)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SimulationResult {
        scenario: *scenario,
        true_fraction,
        mape: mape(&estimates, true_fraction),
        estimates,
    })
}
