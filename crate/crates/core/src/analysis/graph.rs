use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::syntax::{Literal, PredKey, Program};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Sign {
    Positive,
    Negative,
}

/// `from` depends on `to`: `to` occurs in the body of a rule with head `from`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub from: PredKey,
    pub to: PredKey,
    pub sign: Sign,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Scc {
    /// Members, sorted.
    pub preds: Vec<PredKey>,
    pub has_internal_edge: bool,
    pub has_negative_internal_edge: bool,
    pub has_positive_internal_cycle: bool,
}

/// Predicate dependency graph with its strongly connected components.
#[derive(Clone, Debug, Serialize)]
pub struct DepGraph {
    pub nodes: Vec<PredKey>,
    pub edges: Vec<Edge>,
    /// Components in evaluation order: every component comes after the
    /// components it depends on; ties are broken by the smallest member.
    pub sccs: Vec<Scc>,
    scc_of: BTreeMap<PredKey, usize>,
}

impl DepGraph {
    pub fn scc_of(&self, pred: &PredKey) -> Option<usize> {
        self.scc_of.get(pred).copied()
    }

    /// Predicates ordered so that for every edge `p -> q` across components,
    /// `q` precedes `p`.
    pub fn topological_order(&self) -> Vec<PredKey> {
        self.sccs.iter().flat_map(|s| s.preds.iter().cloned()).collect()
    }

    pub fn is_acyclic(&self) -> bool {
        self.sccs.iter().all(|s| !s.has_internal_edge)
    }

    pub fn has_positive_cycle(&self) -> bool {
        self.sccs.iter().any(|s| s.has_positive_internal_cycle)
    }

    /// No component has a negative internal edge (stratified negation).
    pub fn is_stratified(&self) -> bool {
        self.sccs.iter().all(|s| !s.has_negative_internal_edge)
    }

    /// Indices of components with internal edges.
    pub fn choice_sccs(&self) -> Vec<usize> {
        (0..self.sccs.len())
            .filter(|&i| self.sccs[i].has_internal_edge)
            .collect()
    }

    pub fn depends_on(&self, from: &PredKey) -> impl Iterator<Item = &Edge> {
        let from = from.clone();
        self.edges.iter().filter(move |e| e.from == from)
    }
}

pub fn dependency_graph(p: &Program) -> DepGraph {
    let nodes = p.predicates();
    let mut edges = BTreeSet::new();
    for r in &p.rules {
        let Some(h) = &r.head else { continue };
        for l in &r.body {
            let (a, sign) = match l {
                Literal::Pos(a) => (a, Sign::Positive),
                Literal::Neg(a) => (a, Sign::Negative),
                Literal::Cmp { .. } => continue,
            };
            edges.insert(Edge {
                from: h.key(),
                to: a.key(),
                sign,
            });
        }
    }
    let edges: Vec<Edge> = edges.into_iter().collect();

    let mut g: DiGraph<PredKey, Sign> = DiGraph::new();
    let idx: BTreeMap<PredKey, NodeIndex> = nodes
        .iter()
        .map(|n| (n.clone(), g.add_node(n.clone())))
        .collect();
    for e in &edges {
        g.add_edge(idx[&e.from], idx[&e.to], e.sign);
    }

    let comps: Vec<Vec<PredKey>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<PredKey> = c.into_iter().map(|n| g[n].clone()).collect();
            v.sort();
            v
        })
        .collect();
    let mut comp_of = BTreeMap::new();
    for (i, c) in comps.iter().enumerate() {
        for p in c {
            comp_of.insert(p.clone(), i);
        }
    }

    // Kahn's algorithm over the condensation, smallest member first.
    let mut deps: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); comps.len()];
    let mut users: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); comps.len()];
    for e in &edges {
        let (a, b) = (comp_of[&e.from], comp_of[&e.to]);
        if a != b {
            deps[a].insert(b);
            users[b].insert(a);
        }
    }
    let mut ready: BTreeSet<(PredKey, usize)> = (0..comps.len())
        .filter(|&i| deps[i].is_empty())
        .map(|i| (comps[i][0].clone(), i))
        .collect();
    let mut order = Vec::with_capacity(comps.len());
    while let Some(first) = ready.pop_first() {
        let i = first.1;
        order.push(i);
        for &u in &users[i] {
            deps[u].remove(&i);
            if deps[u].is_empty() {
                ready.insert((comps[u][0].clone(), u));
            }
        }
    }
    debug_assert_eq!(order.len(), comps.len(), "condensation must be acyclic");

    let mut sccs = Vec::with_capacity(comps.len());
    let mut scc_of = BTreeMap::new();
    for (pos, &ci) in order.iter().enumerate() {
        let members = &comps[ci];
        let internal: Vec<&Edge> = edges
            .iter()
            .filter(|e| comp_of[&e.from] == ci && comp_of[&e.to] == ci)
            .collect();
        let has_negative_internal_edge = internal.iter().any(|e| e.sign == Sign::Negative);
        let positive: Vec<(&PredKey, &PredKey)> = internal
            .iter()
            .filter(|e| e.sign == Sign::Positive)
            .map(|e| (&e.from, &e.to))
            .collect();
        for p in members {
            scc_of.insert(p.clone(), pos);
        }
        sccs.push(Scc {
            preds: members.clone(),
            has_internal_edge: !internal.is_empty(),
            has_negative_internal_edge,
            has_positive_internal_cycle: has_cycle(members, &positive),
        });
    }

    DepGraph {
        nodes,
        edges,
        sccs,
        scc_of,
    }
}

fn has_cycle(members: &[PredKey], edges: &[(&PredKey, &PredKey)]) -> bool {
    if edges.iter().any(|(a, b)| a == b) {
        return true;
    }
    let mut g: DiGraph<(), ()> = DiGraph::new();
    let idx: BTreeMap<&PredKey, NodeIndex> = members.iter().map(|m| (m, g.add_node(()))).collect();
    for (a, b) in edges {
        g.add_edge(idx[a], idx[b], ());
    }
    tarjan_scc(&g).iter().any(|c| c.len() > 1)
}
