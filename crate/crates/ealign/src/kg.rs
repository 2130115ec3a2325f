//! Data model for knowledge-graph pairs and alignments: TSV ingestion,
//! synthetic benchmark generation, train/validation/test splits, and
//! exclusive-node bookkeeping.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which graph of the pair a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => write!(f, "left"),
            Side::Right => write!(f, "right"),
        }
    }
}

/// A node identified by graph side and dense entity index.
pub type SideNode = (Side, usize);

/// A multi-relational graph with dense entity/relation vocabularies.
///
/// Entity and relation identifiers are interned in first-appearance order, so
/// every downstream tie-break on indices is deterministic for a given input.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    entities: Vec<String>,
    entity_index: HashMap<String, usize>,
    relations: Vec<String>,
    relation_index: HashMap<String, usize>,
    triples: Vec<(usize, usize, usize)>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        KnowledgeGraph {
            entities: Vec::new(),
            entity_index: HashMap::new(),
            relations: Vec::new(),
            relation_index: HashMap::new(),
            triples: Vec::new(),
        }
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn triples(&self) -> &[(usize, usize, usize)] {
        &self.triples
    }

    pub fn entity_id(&self, name: &str) -> Option<usize> {
        self.entity_index.get(name).copied()
    }

    pub fn intern_entity(&mut self, name: &str) -> usize {
        if let Some(&i) = self.entity_index.get(name) {
            return i;
        }
        let i = self.entities.len();
        self.entities.push(name.to_string());
        self.entity_index.insert(name.to_string(), i);
        i
    }

    pub fn intern_relation(&mut self, name: &str) -> usize {
        if let Some(&i) = self.relation_index.get(name) {
            return i;
        }
        let i = self.relations.len();
        self.relations.push(name.to_string());
        self.relation_index.insert(name.to_string(), i);
        i
    }

    /// Adds a triple unless it is already present. Returns true if inserted.
    pub fn add_triple(&mut self, head: usize, relation: usize, tail: usize) -> bool {
        assert!(head < self.entities.len() && tail < self.entities.len());
        assert!(relation < self.relations.len());
        if self.triples.contains(&(head, relation, tail)) {
            return false;
        }
        self.triples.push((head, relation, tail));
        true
    }

    /// Collapsed undirected simple-graph adjacency: parallel relations between
    /// the same entity pair count once, self-loops are dropped. Neighbor lists
    /// are sorted ascending.
    pub fn simple_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.entities.len()];
        for &(h, _, t) in &self.triples {
            if h != t {
                adj[h].insert(t);
                adj[t].insert(h);
            }
        }
        adj.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for &(h, r, t) in &self.triples {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.entities[h], self.relations[r], self.entities[t]
            )?;
        }
        Ok(())
    }
}

impl Default for KnowledgeGraph {
    fn default() -> Self {
        Self::new()
    }
}

/// Two graphs with independent vocabularies.
#[derive(Debug, Clone)]
pub struct KnowledgeGraphPair {
    pub left: KnowledgeGraph,
    pub right: KnowledgeGraph,
}

impl KnowledgeGraphPair {
    pub fn graph(&self, side: Side) -> &KnowledgeGraph {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

/// Parses triple lines (`head<TAB>relation<TAB>tail`) from a string buffer.
///
/// Returns the graph plus the number of duplicate lines dropped. Blank lines
/// are skipped; any other line must have exactly three tab-separated fields.
pub fn parse_triples(src: &str, path: &str) -> Result<(KnowledgeGraph, usize)> {
    let mut graph = KnowledgeGraph::new();
    let mut duplicates = 0usize;
    let mut saw_line = false;
    for (lineno, line) in src.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        saw_line = true;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno + 1,
                msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let h = graph.intern_entity(fields[0]);
        let r = graph.intern_relation(fields[1]);
        let t = graph.intern_entity(fields[2]);
        if !graph.add_triple(h, r, t) {
            duplicates += 1;
        }
    }
    if !saw_line {
        return Err(Error::Parse {
            path: path.to_string(),
            line: 0,
            msg: "empty file".to_string(),
        });
    }
    Ok((graph, duplicates))
}

/// Loads a triples TSV file. Returns the graph and the duplicate-line count.
pub fn load_graph(path: impl AsRef<Path>) -> Result<(KnowledgeGraph, usize)> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_triples(&src, &path.display().to_string())
}

/// Parses alignment lines (`left-entity<TAB>right-entity`) against the pair's
/// vocabularies. Duplicate lines collapse to one pair.
pub fn parse_alignments(
    src: &str,
    pair: &KnowledgeGraphPair,
    path: &str,
) -> Result<BTreeSet<(usize, usize)>> {
    let mut out = BTreeSet::new();
    for (lineno, line) in src.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno + 1,
                msg: format!("expected 2 tab-separated fields, got {}", fields.len()),
            });
        }
        let l = pair.left.entity_id(fields[0]).ok_or_else(|| Error::UnknownEntity {
            path: path.to_string(),
            line: lineno + 1,
            name: fields[0].to_string(),
        })?;
        let r = pair.right.entity_id(fields[1]).ok_or_else(|| Error::UnknownEntity {
            path: path.to_string(),
            line: lineno + 1,
            name: fields[1].to_string(),
        })?;
        out.insert((l, r));
    }
    Ok(out)
}

/// Loads an alignment TSV file as dense index pairs.
pub fn load_alignments(
    path: impl AsRef<Path>,
    pair: &KnowledgeGraphPair,
) -> Result<BTreeSet<(usize, usize)>> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_alignments(&src, pair, &path.display().to_string())
}

/// Train/validation/test alignment pairs. 1:n matchings are permitted; the
/// three parts are pairwise disjoint as pair sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentSet {
    pub train: BTreeSet<(usize, usize)>,
    pub validation: BTreeSet<(usize, usize)>,
    pub test: BTreeSet<(usize, usize)>,
}

impl AlignmentSet {
    pub fn all_pairs(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }

    /// Carves an 80-20 style train/validation split out of a given train side,
    /// leaving the test side untouched. `val_fraction` applies to the train
    /// side only.
    pub fn from_official(
        train: &BTreeSet<(usize, usize)>,
        test: &BTreeSet<(usize, usize)>,
        val_fraction: f64,
        seed: u64,
    ) -> Result<AlignmentSet> {
        if !(0.0..1.0).contains(&val_fraction) {
            return Err(Error::InvalidArgument(format!(
                "val_fraction must be in [0,1), got {val_fraction}"
            )));
        }
        let mut pool: Vec<(usize, usize)> = train.difference(test).copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        pool.shuffle(&mut rng);
        let n_val = ((pool.len() as f64) * val_fraction).round() as usize;
        let validation: BTreeSet<_> = pool[..n_val].iter().copied().collect();
        let train_out: BTreeSet<_> = pool[n_val..].iter().copied().collect();
        Ok(AlignmentSet {
            train: train_out,
            validation,
            test: test.clone(),
        })
    }
}

/// Splits a pair set into train/validation/test.
///
/// `train_fraction` of the pairs form the train side (the rest is test); out
/// of the train side, `val_fraction` is carved off as validation. The split is
/// deterministic for a given seed. A partition ending up empty is an error.
pub fn split_alignments(
    pairs: &BTreeSet<(usize, usize)>,
    train_fraction: f64,
    val_fraction: f64,
    seed: u64,
) -> Result<AlignmentSet> {
    if !(0.0 < train_fraction && train_fraction < 1.0) || !(0.0 < val_fraction && val_fraction < 1.0)
    {
        return Err(Error::InvalidArgument(
            "split fractions must lie in (0,1)".to_string(),
        ));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("empty pair set".to_string()));
    }
    let mut shuffled: Vec<(usize, usize)> = pairs.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let n_train_side = ((shuffled.len() as f64) * train_fraction).round() as usize;
    let (train_side, test_side) = shuffled.split_at(n_train_side);
    let n_val = ((train_side.len() as f64) * val_fraction).round() as usize;
    let validation: BTreeSet<_> = train_side[..n_val].iter().copied().collect();
    let train: BTreeSet<_> = train_side[n_val..].iter().copied().collect();
    let test: BTreeSet<_> = test_side.iter().copied().collect();
    if train.is_empty() || validation.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "split produced an empty partition (train {}, validation {}, test {})",
            train.len(),
            validation.len(),
            test.len()
        )));
    }
    Ok(AlignmentSet {
        train,
        validation,
        test,
    })
}

/// Aligned vs exclusive node sets per side. Aligned nodes are exactly the
/// endpoints of train ∪ validation ∪ test pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePartition {
    pub aligned_left: BTreeSet<usize>,
    pub aligned_right: BTreeSet<usize>,
    pub exclusive_left: BTreeSet<usize>,
    pub exclusive_right: BTreeSet<usize>,
}

pub fn compute_partition(pair: &KnowledgeGraphPair, alignments: &AlignmentSet) -> NodePartition {
    let mut aligned_left = BTreeSet::new();
    let mut aligned_right = BTreeSet::new();
    for &(l, r) in alignments.all_pairs() {
        assert!(l < pair.left.num_entities() && r < pair.right.num_entities());
        aligned_left.insert(l);
        aligned_right.insert(r);
    }
    let exclusive_left = (0..pair.left.num_entities())
        .filter(|i| !aligned_left.contains(i))
        .collect();
    let exclusive_right = (0..pair.right.num_entities())
        .filter(|i| !aligned_right.contains(i))
        .collect();
    NodePartition {
        aligned_left,
        aligned_right,
        exclusive_left,
        exclusive_right,
    }
}

/// A masked view of a graph: masked entities keep their indices but become
/// isolated, and every triple touching them is excluded. The underlying graph
/// is not modified, so embedding and alignment indices stay stable across
/// simulation steps.
#[derive(Debug, Clone)]
pub struct GraphView<'a> {
    graph: &'a KnowledgeGraph,
    active: Vec<bool>,
}

impl<'a> GraphView<'a> {
    pub fn full(graph: &'a KnowledgeGraph) -> Self {
        GraphView {
            active: vec![true; graph.num_entities()],
            graph,
        }
    }

    pub fn graph(&self) -> &'a KnowledgeGraph {
        self.graph
    }

    pub fn num_entities(&self) -> usize {
        self.graph.num_entities()
    }

    pub fn is_active(&self, node: usize) -> bool {
        self.active[node]
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.active.len()).filter(move |&i| self.active[i])
    }

    /// Returns a view with `nodes` additionally masked out.
    pub fn without<I: IntoIterator<Item = usize>>(&self, nodes: I) -> GraphView<'a> {
        let mut active = self.active.clone();
        for n in nodes {
            assert!(n < active.len());
            active[n] = false;
        }
        GraphView {
            graph: self.graph,
            active,
        }
    }

    /// Triples with both endpoints active.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.graph
            .triples()
            .iter()
            .copied()
            .filter(move |&(h, _, t)| self.active[h] && self.active[t])
    }
}

/// Masks `nodes` out of `graph`, excluding all triples with a masked endpoint.
pub fn remove_nodes<'a, I: IntoIterator<Item = usize>>(
    graph: &'a KnowledgeGraph,
    nodes: I,
) -> GraphView<'a> {
    GraphView::full(graph).without(nodes)
}

/// Parameters for the synthetic benchmark generator: a shared random core
/// copied to both sides with independent per-side edge dropout, plus exclusive
/// entities wired to the core.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n_core: usize,
    pub n_exclusive_left: usize,
    pub n_exclusive_right: usize,
    pub n_relations: usize,
    /// Mean degree of the core graph.
    pub edge_factor: f64,
    /// Probability of dropping each core triple, independently per side.
    pub perturbation: f64,
    pub seed: u64,
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.perturbation) {
            return Err(Error::InvalidArgument(format!(
                "perturbation must be in [0,1), got {}",
                self.perturbation
            )));
        }
        if self.edge_factor <= 0.0 {
            return Err(Error::InvalidArgument(
                "edge_factor must be positive".to_string(),
            ));
        }
        if self.n_relations == 0 {
            return Err(Error::InvalidArgument(
                "n_relations must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Generates a graph pair with ground-truth alignment.
///
/// The core random graph on `n_core` entities is copied to both sides; each
/// core triple is then dropped independently per side with probability
/// `perturbation`. Exclusive entities attach to one random core entity each.
/// The ground-truth alignment is the identity on core entities. Deterministic
/// for a given seed.
pub fn generate_synthetic_pair(
    params: &SyntheticParams,
) -> Result<(KnowledgeGraphPair, BTreeSet<(usize, usize)>)> {
    params.validate()?;
    let n = params.n_core;
    let n_edges = ((n as f64) * params.edge_factor / 2.0).round() as usize;
    if n < 2 || n_edges == 0 {
        return Err(Error::InvalidArgument(
            "synthetic parameters yield an empty core graph".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // Distinct undirected core edges, each with a random relation.
    let mut edge_set: HashSet<(usize, usize)> = HashSet::new();
    let mut core_triples: Vec<(usize, usize, usize)> = Vec::new();
    let max_edges = n * (n - 1) / 2;
    let target = n_edges.min(max_edges);
    while edge_set.len() < target {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if edge_set.insert(key) {
            let rel = rng.gen_range(0..params.n_relations);
            core_triples.push((a, rel, b));
        }
    }

    let mut left = KnowledgeGraph::new();
    let mut right = KnowledgeGraph::new();
    for i in 0..n {
        left.intern_entity(&format!("core{i}"));
        right.intern_entity(&format!("core{i}"));
    }
    for j in 0..params.n_relations {
        left.intern_relation(&format!("rel{j}"));
        right.intern_relation(&format!("rel{j}"));
    }
    for &(h, r, t) in &core_triples {
        if rng.gen::<f64>() >= params.perturbation {
            left.add_triple(h, r, t);
        }
        if rng.gen::<f64>() >= params.perturbation {
            right.add_triple(h, r, t);
        }
    }
    for i in 0..params.n_exclusive_left {
        let idx = left.intern_entity(&format!("xl{i}"));
        let anchor = rng.gen_range(0..n);
        let rel = rng.gen_range(0..params.n_relations);
        left.add_triple(idx, rel, anchor);
    }
    for i in 0..params.n_exclusive_right {
        let idx = right.intern_entity(&format!("xr{i}"));
        let anchor = rng.gen_range(0..n);
        let rel = rng.gen_range(0..params.n_relations);
        right.add_triple(idx, rel, anchor);
    }

    let ground_truth: BTreeSet<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    Ok((KnowledgeGraphPair { left, right }, ground_truth))
}

/// Writes an alignment pair set as TSV using the graphs' entity names.
pub fn write_alignments_tsv<W: Write>(
    mut w: W,
    pair: &KnowledgeGraphPair,
    pairs: &BTreeSet<(usize, usize)>,
) -> std::io::Result<()> {
    for &(l, r) in pairs {
        writeln!(w, "{}\t{}", pair.left.entities()[l], pair.right.entities()[r])?;
    }
    Ok(())
}
