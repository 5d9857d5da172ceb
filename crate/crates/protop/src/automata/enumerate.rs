//! Enumeration of all subgroups of a given finite index.
//!
//! A subgroup of index `m` corresponds to a complete `m`-vertex based
//! automaton, i.e. a transitive action of the free group on `m` points
//! with a basepoint. The search fills the transition table cell by cell
//! in a fixed scan order (vertex-major, letter directions in the order
//! `1, -1, 2, -2, ...`) and only ever introduces a fresh vertex as the
//! next unused label. Every based action then appears under exactly one
//! labeling, so the results need no isomorphism deduplication, and the
//! labeling coincides with the canonical breadth-first numbering.

use super::{AutomatonError, StallingsAutomaton};

#[derive(Debug, Clone)]
pub struct EnumBudget {
    pub max_results: usize,
    pub deadline: Option<std::time::Instant>,
}

impl Default for EnumBudget {
    fn default() -> Self {
        EnumBudget { max_results: 1 << 20, deadline: None }
    }
}

struct Search {
    rank: usize,
    m: usize,
    fwd: Vec<Vec<Option<u32>>>, // fwd[letter][v]
    bwd: Vec<Vec<Option<u32>>>,
    max_used: usize,
    out: Vec<StallingsAutomaton>,
    max_results: usize,
    deadline: Option<std::time::Instant>,
}

impl Search {
    fn first_undefined(&self) -> Option<(usize, usize)> {
        for v in 0..=self.max_used.min(self.m - 1) {
            for d in 0..2 * self.rank {
                let letter = d / 2;
                let defined = if d % 2 == 0 {
                    self.fwd[letter][v].is_some()
                } else {
                    self.bwd[letter][v].is_some()
                };
                if !defined {
                    return Some((v, d));
                }
            }
        }
        None
    }

    fn run(&mut self) -> Result<(), AutomatonError> {
        if let Some(deadline) = self.deadline {
            if std::time::Instant::now() > deadline {
                return Err(AutomatonError::BudgetExceeded("wall clock".into()));
            }
        }
        let Some((v, d)) = self.first_undefined() else {
            if self.max_used == self.m - 1 {
                if self.out.len() >= self.max_results {
                    return Err(AutomatonError::BudgetExceeded(format!(
                        "more than {} subgroups",
                        self.max_results
                    )));
                }
                self.out.push(self.emit());
            }
            return Ok(());
        };
        let letter = d / 2;
        let limit = (self.max_used + 1).min(self.m - 1);
        for w in 0..=limit {
            let free = if d % 2 == 0 {
                self.bwd[letter][w].is_none()
            } else {
                self.fwd[letter][w].is_none()
            };
            if !free {
                continue;
            }
            let prev_max = self.max_used;
            if d % 2 == 0 {
                self.fwd[letter][v] = Some(w as u32);
                self.bwd[letter][w] = Some(v as u32);
            } else {
                self.bwd[letter][v] = Some(w as u32);
                self.fwd[letter][w] = Some(v as u32);
            }
            self.max_used = self.max_used.max(w);
            self.run()?;
            self.max_used = prev_max;
            if d % 2 == 0 {
                self.fwd[letter][v] = None;
                self.bwd[letter][w] = None;
            } else {
                self.bwd[letter][v] = None;
                self.fwd[letter][w] = None;
            }
        }
        Ok(())
    }

    fn emit(&self) -> StallingsAutomaton {
        let mut succ = vec![vec![None; self.rank]; self.m];
        let mut pred = vec![vec![None; self.rank]; self.m];
        for v in 0..self.m {
            for i in 0..self.rank {
                succ[v][i] = self.fwd[i][v];
                pred[v][i] = self.bwd[i][v];
            }
        }
        StallingsAutomaton { rank: self.rank, succ, pred }
    }
}

/// All complete `m`-vertex based automata over the given rank, up to
/// based isomorphism, sorted by canonical form.
pub fn enumerate_index_subgroups(
    rank: usize,
    m: usize,
    budget: &EnumBudget,
) -> Result<Vec<StallingsAutomaton>, AutomatonError> {
    assert!(m >= 1, "index must be at least 1");
    if rank == 0 {
        return Ok(if m == 1 {
            vec![StallingsAutomaton::whole_group(0)]
        } else {
            Vec::new()
        });
    }
    let mut search = Search {
        rank,
        m,
        fwd: vec![vec![None; m]; rank],
        bwd: vec![vec![None; m]; rank],
        max_used: 0,
        out: Vec::new(),
        max_results: budget.max_results,
        deadline: budget.deadline,
    };
    search.run()?;
    let mut out = std::mem::take(&mut search.out);
    out.sort_by_key(|a| a.edges());
    Ok(out)
}
