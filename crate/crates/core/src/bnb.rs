//! Best-first branch-and-bound over the mode-selection binaries.
//!
//! Every node carries a partial [`Fixings`]; its lower bound is the
//! relaxation under those fixings and its rounded assignment, re-solved
//! with fixed modes, gives a candidate upper bound.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

use crate::channel::ChannelSet;
use crate::config::ScenarioConfig;
use crate::problem::{solve_fixed_assignment, BeamformingSolution, ModeAssignment};
use crate::relax::{solve_relaxed, Fixings, RelaxOptions, RelaxOutcome, RelaxedSolution};
use crate::CoreError;

/// Largest `|b - round(b)|` still treated as binary.
pub const BINARY_TOL: f64 = 1e-6;

/// Per tile, the mode with the largest relaxed value among those not fixed
/// to zero (ties to the lower index); decided tiles keep their mode.
pub fn round_relaxed(b_tilde: &[Vec<f64>], fixings: &Fixings) -> ModeAssignment {
    let modes = b_tilde
        .iter()
        .enumerate()
        .map(|(t, col)| {
            if let Some(s) = fixings.decided(t) {
                return s;
            }
            let mut best: Option<usize> = None;
            for (s, &v) in col.iter().enumerate() {
                if fixings.get(s, t) == Some(false) {
                    continue;
                }
                if best.is_none_or(|b| v > col[b]) {
                    best = Some(s);
                }
            }
            best.unwrap_or(0)
        })
        .collect();
    ModeAssignment::new(modes)
}

/// Branching decision for a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// The relaxed binaries are already integral.
    Leaf,
    /// Branch on `b[s][t]`.
    Split { s: usize, t: usize },
}

/// The free entry farthest from its rounded value; ties go to the
/// lexicographically smallest `(s, t)`.
pub fn select_branch(b_tilde: &[Vec<f64>], rounded: &ModeAssignment, fixings: &Fixings) -> Branch {
    let mut best: Option<(f64, usize, usize)> = None;
    let num_modes = b_tilde.first().map_or(0, |c| c.len());
    for s in 0..num_modes {
        for (t, col) in b_tilde.iter().enumerate() {
            if fixings.get(s, t).is_some() {
                continue;
            }
            let target = if rounded.modes[t] == s { 1.0 } else { 0.0 };
            let d = (col[s] - target).abs();
            if best.is_none_or(|(bd, _, _)| d > bd) {
                best = Some((d, s, t));
            }
        }
    }
    match best {
        Some((d, s, t)) if d > BINARY_TOL => Branch::Split { s, t },
        _ => Branch::Leaf,
    }
}

/// One line of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbTraceRow {
    pub iteration: usize,
    /// Global lower bound, milliwatts.
    pub lower_mw: f64,
    /// Incumbent objective, milliwatts (infinite before the first one).
    pub upper_mw: f64,
    pub open_nodes: usize,
}

/// Trace as CSV: `iteration,lower,upper,openNodes` (milliwatts).
pub fn trace_csv(trace: &[BnbTraceRow]) -> String {
    let mut out = String::from("iteration,lower,upper,openNodes\n");
    for r in trace {
        let _ = writeln!(out, "{},{:e},{:e},{}", r.iteration, r.lower_mw, r.upper_mw, r.open_nodes);
    }
    out
}

/// Result of a branch-and-bound run.
#[derive(Debug, Clone)]
pub struct BnbOutcome {
    /// Incumbent, if any assignment was found feasible.
    pub best: Option<(ModeAssignment, BeamformingSolution)>,
    pub lower_mw: f64,
    pub upper_mw: f64,
    pub trace: Vec<BnbTraceRow>,
    /// Nodes whose relaxation was solved (the root included).
    pub nodes: usize,
    pub fixed_solves: usize,
    /// Assignments certified infeasible by a fixed-mode solve.
    pub infeasible_assignments: Vec<ModeAssignment>,
    /// Solves that failed numerically (their nodes inherit the parent
    /// bound and are branched further).
    pub numerical_failures: usize,
    /// Whether the node limit stopped the search.
    pub node_limit_hit: bool,
    /// Rank ratios of every `W_k` from feasible relaxation solves.
    pub relaxation_rank_ratios: Vec<f64>,
    /// Rank ratios of every `W_k` from feasible fixed-mode solves.
    pub fixed_rank_ratios: Vec<f64>,
}

impl BnbOutcome {
    /// `(U - L) / L`.
    pub fn gap(&self) -> f64 {
        if self.upper_mw.is_finite() && self.lower_mw > 0.0 {
            (self.upper_mw - self.lower_mw) / self.lower_mw
        } else {
            f64::INFINITY
        }
    }
}

struct Node {
    fixings: Fixings,
    lower: f64,
    order: usize,
    relaxed: Option<RelaxedSolution>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // reversed: the heap pops the smallest bound, then the oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other.lower.total_cmp(&self.lower).then(other.order.cmp(&self.order))
    }
}

struct Search<'a> {
    ch: &'a ChannelSet,
    cfg: &'a ScenarioConfig,
    cache: HashMap<ModeAssignment, Option<BeamformingSolution>>,
    best: Option<(ModeAssignment, BeamformingSolution)>,
    out: BnbOutcome,
}

impl Search<'_> {
    fn upper(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.1.objective_mw)
    }

    fn fixed(&mut self, assign: &ModeAssignment) -> Option<f64> {
        if let Some(hit) = self.cache.get(assign) {
            return hit.as_ref().map(|s| s.objective_mw);
        }
        self.out.fixed_solves += 1;
        let sol = match solve_fixed_assignment(self.ch, assign, self.cfg) {
            Ok(s) => s,
            Err(_) => {
                self.out.numerical_failures += 1;
                return None;
            }
        };
        match &sol {
            Some(s) => {
                self.out.fixed_rank_ratios.extend_from_slice(&s.rank_ratios);
                if s.objective_mw < self.upper() {
                    self.best = Some((assign.clone(), s.clone()));
                }
            }
            None => self.out.infeasible_assignments.push(assign.clone()),
        }
        let value = sol.as_ref().map(|s| s.objective_mw);
        self.cache.insert(assign.clone(), sol);
        value
    }

    /// Bounds a node. `None` means the node holds nothing better than the
    /// incumbent (or nothing feasible) and can be dropped.
    fn evaluate(&mut self, fixings: Fixings, parent_lower: f64, order: usize) -> Option<Node> {
        if let Some(assign) = fixings.assignment() {
            let value = self.fixed(&assign)?;
            return Some(Node {
                fixings,
                lower: value.max(parent_lower),
                order,
                relaxed: None,
            });
        }
        self.out.nodes += 1;
        let u = self.upper();
        let opts = RelaxOptions {
            penalty_mw: None,
            budget_mw: u.is_finite().then(|| u * (1.0 + 1e-6)),
            rf_required_mw: None,
        };
        match solve_relaxed(self.ch, &fixings, self.cfg, &opts) {
            Ok(RelaxOutcome::Infeasible) => None,
            Ok(RelaxOutcome::Optimal(r)) => {
                self.out.relaxation_rank_ratios.extend_from_slice(&r.rank_ratios);
                let rounded = round_relaxed(&r.b_tilde, &fixings);
                self.fixed(&rounded);
                Some(Node {
                    fixings,
                    lower: r.bound_mw.max(parent_lower),
                    order,
                    relaxed: Some(r),
                })
            }
            Err(_) => {
                self.out.numerical_failures += 1;
                Some(Node {
                    fixings,
                    lower: parent_lower,
                    order,
                    relaxed: None,
                })
            }
        }
    }
}

/// Runs the search on channels restricted to the refined mode set.
///
/// Nodes are expanded smallest-bound first and pruned once their bound
/// reaches `U (1 - eps_bnb)`; the search stops when `(U - L) / L <=
/// eps_bnb` or the node limit is reached. `best` is `None` when every
/// assignment is infeasible.
pub fn bnb_solve(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<BnbOutcome, CoreError> {
    cfg.validate()?;
    if ch.num_modes() == 0 {
        return Err(CoreError::InvalidArgument("empty mode set".into()));
    }
    let eps = cfg.eps_bnb;
    let mut search = Search {
        ch,
        cfg,
        cache: HashMap::new(),
        best: None,
        out: BnbOutcome {
            best: None,
            lower_mw: 0.0,
            upper_mw: f64::INFINITY,
            trace: Vec::new(),
            nodes: 0,
            fixed_solves: 0,
            infeasible_assignments: Vec::new(),
            numerical_failures: 0,
            node_limit_hit: false,
            relaxation_rank_ratios: Vec::new(),
            fixed_rank_ratios: Vec::new(),
        },
    };
    let root = Fixings::new(ch.num_modes(), ch.num_tiles)
        .propagate()
        .ok_or_else(|| CoreError::InconsistentFixings("empty tile".into()))?;
    let mut heap = BinaryHeap::new();
    let mut order = 0;
    if let Some(node) = search.evaluate(root, 0.0, order) {
        heap.push(node);
    }
    order += 1;

    let mut iteration = 0;
    loop {
        let u = search.upper();
        // drop nodes that cannot improve the incumbent
        while heap.peek().is_some_and(|n| n.lower >= u * (1.0 - eps)) {
            heap.pop();
        }
        let l = heap.peek().map_or(u, |n| n.lower.min(u));
        search.out.trace.push(BnbTraceRow {
            iteration,
            lower_mw: l,
            upper_mw: u,
            open_nodes: heap.len(),
        });
        search.out.lower_mw = l;
        search.out.upper_mw = u;
        if heap.is_empty() || (u.is_finite() && (u - l) <= eps * l) {
            break;
        }
        if search.out.nodes >= cfg.max_bnb_nodes {
            search.out.node_limit_hit = true;
            break;
        }
        iteration += 1;
        let node = heap.pop().expect("nonempty heap");
        let branch = match &node.relaxed {
            Some(r) => {
                let rounded = round_relaxed(&r.b_tilde, &node.fixings);
                select_branch(&r.b_tilde, &rounded, &node.fixings)
            }
            None => match node.fixings.free().first() {
                Some(&(s, t)) => Branch::Split { s, t },
                None => Branch::Leaf,
            },
        };
        let Branch::Split { s, t } = branch else {
            // integral relaxation: its rounded assignment is already solved
            continue;
        };
        for value in [false, true] {
            if let Some(child) = node.fixings.with(s, t, value)? {
                if let Some(c) = search.evaluate(child, node.lower, order) {
                    heap.push(c);
                }
                order += 1;
            }
        }
    }
    search.out.best = search.best.take();
    Ok(search.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_ties_and_fixings() {
        let f = Fixings::new(3, 2);
        let r = round_relaxed(&[vec![0.6, 0.3, 0.1], vec![0.5, 0.5, 0.0]], &f);
        assert_eq!(r.modes, vec![0, 0]);
        let g = f.with(0, 1, false).unwrap().unwrap();
        let r = round_relaxed(&[vec![0.6, 0.3, 0.1], vec![0.5, 0.5, 0.0]], &g);
        assert_eq!(r.modes, vec![0, 1]);
    }

    #[test]
    fn branch_selection() {
        // b[t][s]; rounded to [0, 1], distances indexed [s][t] are
        // [[0.4, 0.1], [0.2, 0.7]]
        let f = Fixings::new(2, 2);
        let b = vec![vec![0.6, 0.2], vec![0.1, 0.3]];
        let rounded = round_relaxed(&b, &f);
        assert_eq!(rounded.modes, vec![0, 1]);
        assert_eq!(select_branch(&b, &rounded, &f), Branch::Split { s: 1, t: 1 });
        let tie = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let rounded = round_relaxed(&tie, &f);
        assert_eq!(select_branch(&tie, &rounded, &f), Branch::Split { s: 0, t: 0 });
        let binary = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let rounded = round_relaxed(&binary, &f);
        assert_eq!(select_branch(&binary, &rounded, &f), Branch::Leaf);
    }
}
