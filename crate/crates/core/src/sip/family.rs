//! Embedding and cut event families.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EdgeSet;
use crate::prob::EdgeEvent;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Members are embedding edge images; a member's event is all its edges present.
    Embedding,
    /// Members are minimal embedding cuts; a member's event is all its edges absent.
    Cut,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventFamily {
    pub kind: FamilyKind,
    pub members: Vec<EdgeSet>,
    /// `overlaps[i]` lists the members sharing at least one edge with member `i`.
    pub overlaps: Vec<Vec<usize>>,
    /// False when the members are only part of the full family.
    pub complete: bool,
}

impl EventFamily {
    /// Sorts and deduplicates `members` and computes the overlap lists.
    pub fn new(kind: FamilyKind, mut members: Vec<EdgeSet>, complete: bool) -> Self {
        members.sort();
        members.dedup();
        let n = members.len();
        let mut overlaps = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                if !members[i].is_disjoint(&members[j]) {
                    overlaps[i].push(j);
                    overlaps[j].push(i);
                }
            }
        }
        EventFamily {
            kind,
            members,
            overlaps,
            complete,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn event(&self, i: usize) -> EdgeEvent {
        let edges = self.members[i].iter();
        match self.kind {
            FamilyKind::Embedding => EdgeEvent::all_present(edges),
            FamilyKind::Cut => EdgeEvent::all_absent(edges),
        }
    }

    /// Events of the members overlapping member `i`.
    pub fn overlap_events(&self, i: usize) -> Vec<EdgeEvent> {
        self.overlaps[i].iter().map(|&j| self.event(j)).collect()
    }

    pub fn holds(&self, i: usize, present: &[bool]) -> bool {
        let want = self.kind == FamilyKind::Embedding;
        self.members[i].iter().all(|e| present[e] == want)
    }
}

fn minimize(mut sets: Vec<EdgeSet>) -> Vec<EdgeSet> {
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets.dedup();
    let mut kept: Vec<EdgeSet> = Vec::with_capacity(sets.len());
    for s in sets {
        if !kept.iter().any(|k| k.is_subset(&s)) {
            kept.push(s);
        }
    }
    kept
}

/// All minimal transversals (inclusion-minimal hitting sets) of `family`,
/// built one member at a time: every partial transversal that already hits
/// the next member is kept, the others are extended by one of its edges, and
/// non-minimal results are dropped. Fails once the family exceeds `cap`.
pub fn minimal_transversals(family: &[EdgeSet], cap: usize) -> Result<Vec<EdgeSet>> {
    if family.iter().any(EdgeSet::is_empty) {
        // An empty member cannot be hit.
        return Ok(Vec::new());
    }
    // Processing supersets before their subsets only creates work.
    let hyper = minimize(family.to_vec());
    let mut current: Vec<EdgeSet> = vec![EdgeSet::new()];
    for member in &hyper {
        let mut next = Vec::with_capacity(current.len());
        for t in &current {
            if !t.is_disjoint(member) {
                next.push(t.clone());
            } else {
                for e in member.iter() {
                    let mut grown = t.clone();
                    grown.insert(e);
                    next.push(grown);
                }
            }
        }
        current = minimize(next);
        if current.len() > cap {
            return Err(Error::FamilyCap { cap });
        }
    }
    current.sort();
    Ok(current)
}
