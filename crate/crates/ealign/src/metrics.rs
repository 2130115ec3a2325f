//! Structural node scores for the static query heuristics: degree,
//! betweenness centrality (Brandes), and the approximate-vertex-cover ranking.
//!
//! All scores treat each graph as an undirected simple graph: parallel
//! relations collapse to one edge and self-loops are ignored. Ranking
//! tie-break is always (left before right, node index ascending).

use std::collections::VecDeque;
use std::io::Write;

use crate::kg::{KnowledgeGraphPair, Side, SideNode};

/// A total ordering of all nodes of both graphs, descending by score with the
/// deterministic tie-break.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRanking {
    entries: Vec<(SideNode, f64)>,
}

impl NodeRanking {
    /// Builds a ranking by sorting scored nodes. Every (side, node) must
    /// appear exactly once.
    pub fn from_scores(mut scored: Vec<(SideNode, f64)>) -> NodeRanking {
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("scores must be finite")
                .then_with(|| a.0.cmp(&b.0))
        });
        NodeRanking { entries: scored }
    }

    /// Builds a ranking from an explicit selection order, recording each
    /// node's score at selection time.
    pub fn from_order(entries: Vec<(SideNode, f64)>) -> NodeRanking {
        NodeRanking { entries }
    }

    pub fn entries(&self) -> &[(SideNode, f64)] {
        &self.entries
    }

    pub fn nodes(&self) -> impl Iterator<Item = SideNode> + '_ {
        self.entries.iter().map(|&(n, _)| n)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV export: side,node,score,rank.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "side,node,score,rank")?;
        for (rank, ((side, node), score)) in self.entries.iter().enumerate() {
            writeln!(w, "{side},{node},{score},{rank}")?;
        }
        Ok(())
    }
}

fn joint_scores(
    pair: &KnowledgeGraphPair,
    per_side: impl Fn(&[Vec<usize>]) -> Vec<f64>,
) -> Vec<(SideNode, f64)> {
    let mut out = Vec::new();
    for side in [Side::Left, Side::Right] {
        let adj = pair.graph(side).simple_adjacency();
        for (node, score) in per_side(&adj).into_iter().enumerate() {
            out.push(((side, node), score));
        }
    }
    out
}

/// Ranks all nodes of both graphs by collapsed undirected degree.
pub fn degree_ranking(pair: &KnowledgeGraphPair) -> NodeRanking {
    NodeRanking::from_scores(joint_scores(pair, |adj| {
        adj.iter().map(|n| n.len() as f64).collect()
    }))
}

/// Unnormalized undirected betweenness centrality via Brandes' accumulation.
/// Each unordered source-target pair is counted once.
pub fn betweenness(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut centrality = vec![0.0f64; n];
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    let mut queue: VecDeque<usize> = VecDeque::new();
    for s in 0..n {
        stack.clear();
        let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![-1i64; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &adj[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    pred[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0f64; n];
        while let Some(w) = stack.pop() {
            for &v in &pred[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }
    // Each unordered pair was counted from both endpoints.
    for c in centrality.iter_mut() {
        *c /= 2.0;
    }
    centrality
}

/// Ranks all nodes of both graphs by per-side betweenness centrality.
pub fn betweenness_ranking(pair: &KnowledgeGraphPair) -> NodeRanking {
    NodeRanking::from_scores(joint_scores(pair, |adj| betweenness(adj)))
}

/// Greedy approximate-vertex-cover ranking over the joint candidate set.
///
/// Every node starts with weight equal to its collapsed degree. The
/// max-weight node (standard tie-break) is appended to the ranking and each
/// of its not-yet-selected neighbors loses one unit of weight; weights may go
/// negative. The recorded score is the weight at selection time.
pub fn avc_ranking(pair: &KnowledgeGraphPair) -> NodeRanking {
    let adj_left = pair.left.simple_adjacency();
    let adj_right = pair.right.simple_adjacency();
    let mut candidates: Vec<(SideNode, f64)> = Vec::new();
    for (node, nbrs) in adj_left.iter().enumerate() {
        candidates.push(((Side::Left, node), nbrs.len() as f64));
    }
    for (node, nbrs) in adj_right.iter().enumerate() {
        candidates.push(((Side::Right, node), nbrs.len() as f64));
    }
    let mut selected = vec![false; candidates.len()];
    let offset_right = adj_left.len();
    let flat = |(side, node): SideNode| match side {
        Side::Left => node,
        Side::Right => offset_right + node,
    };
    let mut order = Vec::with_capacity(candidates.len());
    for _ in 0..candidates.len() {
        let mut best: Option<usize> = None;
        for (i, &(node, weight)) in candidates.iter().enumerate() {
            if selected[i] {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(j) => {
                    let (bnode, bweight) = candidates[j];
                    if weight > bweight || (weight == bweight && node < bnode) {
                        best = Some(i);
                    }
                }
            }
        }
        let i = best.unwrap();
        let ((side, node), weight) = candidates[i];
        selected[i] = true;
        order.push(((side, node), weight));
        let nbrs = match side {
            Side::Left => &adj_left[node],
            Side::Right => &adj_right[node],
        };
        for &nb in nbrs {
            let j = flat((side, nb));
            if !selected[j] {
                candidates[j].1 -= 1.0;
            }
        }
    }
    NodeRanking::from_order(order)
}
