//! Enumeration and ranking of sum-set decompositions of a sparse array.
//!
//! Candidate basic subarrays are N_s-subsets of the normalized parent
//! containing 0, grown depth-first in lexicographic order. The valid-shift
//! set shrinks monotonically as a candidate grows, so branches whose shift
//! count falls below L are pruned soundly. Every emitted shift set is an
//! L-subset of the candidate's valid shifts, also in lexicographic order,
//! which makes the output order deterministic end to end.

use crate::geometry::{Decomposition, SensorPositions};
use crate::identifiability::{
    check_condition_a, check_condition_b, FalsificationConfig, IdentifiabilityVerdict,
};
use itertools::Itertools;
use serde::Serialize;
use thiserror::Error;

/// Default node budget for the subset search.
pub const DEFAULT_NODE_BUDGET: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("requested subarray size {n_s} exceeds parent size {parent}")]
    SubarrayTooLarge { n_s: usize, parent: usize },
    #[error("requested shift count {l} exceeds parent size {parent}")]
    ShiftCountTooLarge { l: usize, parent: usize },
    #[error("subarray size, shift count, and result bound must be positive")]
    ZeroParameter,
}

/// A decomposition search request.
#[derive(Debug, Clone)]
pub struct DecompositionQuery {
    pub parent: SensorPositions,
    pub n_s: usize,
    pub l: usize,
    pub max_results: usize,
    /// When set, ranking attaches identifiability verdicts for this K.
    pub require_identifiable_for_k: Option<usize>,
    /// Node budget for the subset search; exceeding it yields a partial
    /// result with the `truncated` flag set, never a silent cut.
    pub node_budget: usize,
}

impl DecompositionQuery {
    pub fn new(parent: SensorPositions, n_s: usize, l: usize) -> Result<Self, QueryError> {
        if n_s == 0 || l == 0 {
            return Err(QueryError::ZeroParameter);
        }
        if n_s > parent.len() {
            return Err(QueryError::SubarrayTooLarge {
                n_s,
                parent: parent.len(),
            });
        }
        if l > parent.len() {
            return Err(QueryError::ShiftCountTooLarge {
                l,
                parent: parent.len(),
            });
        }
        Ok(Self {
            parent,
            n_s,
            l,
            max_results: 10_000,
            require_identifiable_for_k: None,
            node_budget: DEFAULT_NODE_BUDGET,
        })
    }

    pub fn with_max_results(mut self, max_results: usize) -> Result<Self, QueryError> {
        if max_results == 0 {
            return Err(QueryError::ZeroParameter);
        }
        self.max_results = max_results;
        Ok(self)
    }

    pub fn with_identifiability_k(mut self, k: usize) -> Self {
        self.require_identifiable_for_k = Some(k);
        self
    }

    pub fn with_node_budget(mut self, node_budget: usize) -> Self {
        self.node_budget = node_budget;
        self
    }
}

/// Search outcome: the decompositions found plus an honest partial-result
/// flag when either the node budget or the result bound cut the search
/// short.
#[derive(Debug, Clone)]
pub struct EnumerationResult {
    pub decompositions: Vec<Decomposition>,
    pub truncated: bool,
    pub nodes_visited: usize,
}

enum Walk {
    Done,
    Stopped,
}

struct Search<'a> {
    parent: &'a SensorPositions,
    normalized: Vec<i64>,
    n_s: usize,
    l: usize,
    max_results: usize,
    node_budget: usize,
    nodes: usize,
    results: Vec<Decomposition>,
}

impl Search<'_> {
    fn run(&mut self) -> Walk {
        // every candidate contains 0, so start from the singleton {0};
        // its valid shifts are exactly the parent elements
        let shifts: Vec<i64> = self.parent.iter().collect();
        self.extend(vec![0], shifts, 0)
    }

    fn extend(&mut self, subset: Vec<i64>, shifts: Vec<i64>, next_index: usize) -> Walk {
        if self.nodes >= self.node_budget {
            return Walk::Stopped;
        }
        self.nodes += 1;
        if shifts.len() < self.l {
            return Walk::Done; // antitone shrinkage: no superset can recover
        }
        if subset.len() == self.n_s {
            return self.emit(&subset, &shifts);
        }
        let remaining_needed = self.n_s - subset.len();
        for i in next_index..self.normalized.len() {
            if self.normalized.len() - i < remaining_needed {
                break;
            }
            let candidate = self.normalized[i];
            if candidate <= *subset.last().unwrap() {
                continue;
            }
            let narrowed: Vec<i64> = shifts
                .iter()
                .copied()
                .filter(|&delta| self.parent.contains(candidate + delta))
                .collect();
            let mut grown = subset.clone();
            grown.push(candidate);
            if let Walk::Stopped = self.extend(grown, narrowed, i + 1) {
                return Walk::Stopped;
            }
        }
        Walk::Done
    }

    fn emit(&mut self, subset: &[i64], shifts: &[i64]) -> Walk {
        let basic = SensorPositions::new(subset.to_vec()).expect("subset is valid by construction");
        for combo in shifts.iter().copied().combinations(self.l) {
            if self.results.len() == self.max_results {
                return Walk::Stopped;
            }
            let shift_set = SensorPositions::new(combo).expect("shifts are valid by construction");
            let deco = Decomposition::new(basic.clone(), shift_set, self.parent.clone())
                .expect("membership holds by construction");
            self.results.push(deco);
        }
        Walk::Done
    }
}

/// Enumerates decompositions `(S_b, S_c)` with `|S_b| = N_s`, `|S_c| = L`,
/// and `S_b + S_c ⊆ parent`, in canonical form and deterministic
/// lexicographic order. Exhaustive over candidates `S_b ⊆ parent - min`
/// containing 0, up to the query's result bound and node budget.
pub fn enumerate_decompositions(query: &DecompositionQuery) -> EnumerationResult {
    let (normalized, _) = query.parent.normalized();
    let mut search = Search {
        parent: &query.parent,
        normalized: normalized.iter().collect(),
        n_s: query.n_s,
        l: query.l,
        max_results: query.max_results,
        node_budget: query.node_budget,
        nodes: 0,
        results: Vec::new(),
    };
    let walk = search.run();
    EnumerationResult {
        truncated: matches!(walk, Walk::Stopped),
        nodes_visited: search.nodes,
        decompositions: search.results,
    }
}

/// A decomposition with its ranking evidence.
#[derive(Debug, Clone)]
pub struct RankedDecomposition {
    pub decomposition: Decomposition,
    pub aperture_b: i64,
    pub verdict_a: Option<IdentifiabilityVerdict>,
    pub verdict_b: Option<IdentifiabilityVerdict>,
}

impl RankedDecomposition {
    /// Falsified decompositions have a counterexample on either condition
    /// or cannot meet the rank budget for the requested K at all.
    pub fn is_falsified(&self) -> bool {
        let ce = |v: &Option<IdentifiabilityVerdict>| {
            v.as_ref()
                .is_some_and(IdentifiabilityVerdict::is_counterexample)
        };
        ce(&self.verdict_a) || ce(&self.verdict_b)
    }

    fn proven_count(&self) -> usize {
        let proven = |v: &Option<IdentifiabilityVerdict>| {
            v.as_ref().is_some_and(IdentifiabilityVerdict::is_proven) as usize
        };
        proven(&self.verdict_a) + proven(&self.verdict_b)
    }

    /// JSON export: `{basic, shifts, aperture_b, verdict_a, verdict_b}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "basic": self.decomposition.basic().as_slice(),
            "shifts": self.decomposition.shifts().as_slice(),
            "aperture_b": self.aperture_b,
            "verdict_a": self.verdict_a.as_ref().map(|v| v.to_json()),
            "verdict_b": self.verdict_b.as_ref().map(|v| v.to_json()),
        })
    }
}

/// Serializable summary line for tabular CLI output.
#[derive(Debug, Clone, Serialize)]
pub struct RankedSummary {
    pub basic: Vec<i64>,
    pub shifts: Vec<i64>,
    pub aperture_b: i64,
}

/// Ranks decompositions for selection. Non-falsified candidates come
/// first (counterexamples and rank-budget failures sink), larger
/// basic-subarray aperture ranks higher (resolution proxy), proof
/// strength breaks aperture ties, and the basic/shift sets break the rest
/// lexicographically. Verdicts are attached when `k` is given; without
/// `k` the order is aperture-then-lexicographic.
pub fn rank_decompositions(
    decompositions: Vec<Decomposition>,
    k: Option<usize>,
    cfg: &FalsificationConfig,
) -> Vec<RankedDecomposition> {
    let mut ranked: Vec<RankedDecomposition> = decompositions
        .into_iter()
        .map(|decomposition| {
            let aperture_b = decomposition.basic().aperture();
            let (verdict_a, verdict_b) = match k {
                Some(k) => (
                    check_condition_a(decomposition.basic(), k, cfg).ok(),
                    check_condition_b(decomposition.shifts(), k, cfg).ok(),
                ),
                None => (None, None),
            };
            RankedDecomposition {
                decomposition,
                aperture_b,
                verdict_a,
                verdict_b,
            }
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.is_falsified()
            .cmp(&b.is_falsified())
            .then(b.aperture_b.cmp(&a.aperture_b))
            .then(b.proven_count().cmp(&a.proven_count()))
            .then(a.decomposition.basic().cmp(b.decomposition.basic()))
            .then(a.decomposition.shifts().cmp(b.decomposition.shifts()))
    });
    ranked
}
