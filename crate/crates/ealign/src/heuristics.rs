//! Query-selection strategies: rnd, deg, betw, avc, cs (greedy k-center
//! coreset), esccn (embedding-space coverage by central nodes), bald
//! (Monte-Carlo-dropout mutual information), and prexp (certainty matching on
//! historical maximum similarities).
//!
//! Every selector is a pure function of its context and returns at most
//! `budget` distinct pool nodes; all internal orderings use the global
//! tie-break (left before right, node index ascending) so results are
//! independent of evaluation order.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::kg::{Side, SideNode};
use crate::metrics::NodeRanking;
use crate::model::ModelSnapshot;
use crate::{Error, Result};

pub type QueryBatch = Vec<SideNode>;

/// Precomputed static rankings, shared across all simulation steps.
#[derive(Debug, Clone)]
pub struct StaticRankings {
    pub degree: NodeRanking,
    pub betweenness: NodeRanking,
    pub avc: NodeRanking,
}

/// One historical labeling record used by prexp: the node's maximum
/// similarity at query time and whether the oracle found a match.
#[derive(Debug, Clone, Copy)]
pub struct PrexpRecord {
    pub node: SideNode,
    pub s_max: f64,
    pub had_match: bool,
}

/// Everything a selector may look at.
pub struct SelectorContext<'a> {
    pub pool: &'a BTreeSet<SideNode>,
    pub found_alignments: &'a BTreeSet<(usize, usize)>,
    /// All previously labeled nodes (alignment endpoints and exclusives).
    pub labeled: &'a BTreeSet<SideNode>,
    pub snapshot: Option<&'a ModelSnapshot>,
    pub static_rankings: &'a StaticRankings,
    pub history: &'a [PrexpRecord],
    pub budget: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticKind {
    Degree,
    Betweenness,
    Avc,
}

impl StaticKind {
    fn ranking<'a>(&self, rankings: &'a StaticRankings) -> &'a NodeRanking {
        match self {
            StaticKind::Degree => &rankings.degree,
            StaticKind::Betweenness => &rankings.betweenness,
            StaticKind::Avc => &rankings.avc,
        }
    }

    fn parse(name: &str) -> Result<StaticKind> {
        match name {
            "deg" => Ok(StaticKind::Degree),
            "betw" => Ok(StaticKind::Betweenness),
            "avc" => Ok(StaticKind::Avc),
            other => Err(Error::Config(format!(
                "{other:?} is not a static heuristic (expected deg|betw|avc)"
            ))),
        }
    }
}

/// A query heuristic selected by name plus a flat parameter map.
#[derive(Debug, Clone, PartialEq)]
pub enum Heuristic {
    Random,
    Static(StaticKind),
    Coreset,
    Esccn {
        n_clusters: usize,
        inner: StaticKind,
    },
    Bald {
        t_runs: usize,
        tau: f64,
    },
    Prexp {
        threshold: f64,
        fallback: StaticKind,
        min_samples_per_class: usize,
    },
}

impl Heuristic {
    /// Parses a heuristic name (`rnd|deg|betw|avc|cs|esccn|bald|prexp`) with
    /// its parameter map. Unknown parameter keys are rejected.
    pub fn parse(name: &str, params: &BTreeMap<String, String>) -> Result<Heuristic> {
        let mut allowed: Vec<&str> = Vec::new();
        let get_f64 = |key: &str, default: f64| -> Result<f64> {
            match params.get(key) {
                None => Ok(default),
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::Config(format!("parameter {key}={v:?} is not a number"))),
            }
        };
        let get_usize = |key: &str, default: usize| -> Result<usize> {
            match params.get(key) {
                None => Ok(default),
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::Config(format!("parameter {key}={v:?} is not an integer"))),
            }
        };
        let h = match name {
            "rnd" => Heuristic::Random,
            "deg" => Heuristic::Static(StaticKind::Degree),
            "betw" => Heuristic::Static(StaticKind::Betweenness),
            "avc" => Heuristic::Static(StaticKind::Avc),
            "cs" => Heuristic::Coreset,
            "esccn" => {
                allowed.extend(["n_clusters", "inner"]);
                let n_clusters = get_usize("n_clusters", 10)?;
                if n_clusters < 1 {
                    return Err(Error::Config("n_clusters must be >= 1".into()));
                }
                let inner = match params.get("inner") {
                    None => StaticKind::Degree,
                    Some(v) => StaticKind::parse(v)?,
                };
                Heuristic::Esccn { n_clusters, inner }
            }
            "bald" => {
                allowed.extend(["t_runs", "tau"]);
                let t_runs = get_usize("t_runs", 25)?;
                let tau = get_f64("tau", 0.5)?;
                if tau <= 0.0 {
                    return Err(Error::Config("tau must be positive".into()));
                }
                Heuristic::Bald { t_runs, tau }
            }
            "prexp" => {
                allowed.extend(["threshold", "fallback", "min_samples_per_class"]);
                let threshold = get_f64("threshold", 0.0)?;
                let fallback = match params.get("fallback") {
                    None => StaticKind::Degree,
                    Some(v) => StaticKind::parse(v)?,
                };
                let min_samples_per_class = get_usize("min_samples_per_class", 5)?;
                if min_samples_per_class < 1 {
                    return Err(Error::Config("min_samples_per_class must be >= 1".into()));
                }
                Heuristic::Prexp {
                    threshold,
                    fallback,
                    min_samples_per_class,
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown heuristic {other:?} (expected rnd|deg|betw|avc|cs|esccn|bald|prexp)"
                )))
            }
        };
        for key in params.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "unknown parameter {key:?} for heuristic {name:?}"
                )));
            }
        }
        Ok(h)
    }

    pub fn select(&self, ctx: &SelectorContext) -> Result<QueryBatch> {
        match self {
            Heuristic::Random => select_random(ctx, ctx.seed),
            Heuristic::Static(kind) => select_static(ctx, kind.ranking(ctx.static_rankings)),
            Heuristic::Coreset => select_coreset(ctx),
            Heuristic::Esccn { n_clusters, inner } => select_esccn(ctx, *n_clusters, *inner),
            Heuristic::Bald { t_runs, tau } => select_bald(ctx, *t_runs, *tau),
            Heuristic::Prexp {
                threshold,
                fallback,
                min_samples_per_class,
            } => select_prexp(ctx, *threshold, *fallback, *min_samples_per_class),
        }
    }

    /// Whether selection depends on the model snapshot at all.
    pub fn is_static(&self) -> bool {
        matches!(self, Heuristic::Random | Heuristic::Static(_))
    }

    /// Whether the simulator must record prexp history for this heuristic.
    pub fn needs_history(&self) -> bool {
        matches!(self, Heuristic::Prexp { .. })
    }
}

/// Uniform sample of `budget` distinct pool elements.
pub fn select_random(ctx: &SelectorContext, seed: u64) -> Result<QueryBatch> {
    let mut nodes: Vec<SideNode> = ctx.pool.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    nodes.shuffle(&mut rng);
    nodes.truncate(ctx.budget);
    Ok(nodes)
}

fn take_from_ranking(
    ranking: &NodeRanking,
    pool: &BTreeSet<SideNode>,
    budget: usize,
) -> Result<QueryBatch> {
    let covered: BTreeSet<SideNode> = ranking.nodes().collect();
    if let Some(&missing) = pool.iter().find(|n| !covered.contains(n)) {
        return Err(Error::InvalidArgument(format!(
            "pool node {missing:?} missing from ranking"
        )));
    }
    Ok(ranking
        .nodes()
        .filter(|n| pool.contains(n))
        .take(budget)
        .collect())
}

/// The first `budget` ranking entries still in the pool.
pub fn select_static(ctx: &SelectorContext, ranking: &NodeRanking) -> Result<QueryBatch> {
    take_from_ranking(ranking, ctx.pool, ctx.budget)
}

fn l2_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Greedy k-center step: repeatedly pick the pool point with maximal distance
/// to the nearest center, then add it to the center set. Pure helper shared
/// with the brute-force oracle in tests.
pub fn k_center_greedy(
    pool: &[(SideNode, Vec<f64>)],
    centers: &[Vec<f64>],
    budget: usize,
) -> QueryBatch {
    let mut min_dist: Vec<f64> = pool
        .iter()
        .map(|(_, p)| {
            centers
                .iter()
                .map(|c| l2_sq(p, c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut taken = vec![false; pool.len()];
    let mut batch = Vec::new();
    for _ in 0..budget.min(pool.len()) {
        let mut best: Option<usize> = None;
        for i in 0..pool.len() {
            if taken[i] {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(j) => {
                    if min_dist[i] > min_dist[j]
                        || (min_dist[i] == min_dist[j] && pool[i].0 < pool[j].0)
                    {
                        best = Some(i);
                    }
                }
            }
        }
        let i = best.unwrap();
        taken[i] = true;
        batch.push(pool[i].0);
        for j in 0..pool.len() {
            if !taken[j] {
                min_dist[j] = min_dist[j].min(l2_sq(&pool[j].1, &pool[i].1));
            }
        }
    }
    batch
}

/// Coreset selection in the joint representation space. Centers are the
/// representations of all nodes participating in discovered alignments; with
/// no labeled positive yet, the degree heuristic serves the batch instead.
pub fn select_coreset(ctx: &SelectorContext) -> Result<QueryBatch> {
    let snapshot = match ctx.snapshot {
        Some(s) if !ctx.found_alignments.is_empty() => s,
        _ => return select_static(ctx, &ctx.static_rankings.degree),
    };
    let mut centers: Vec<Vec<f64>> = Vec::new();
    for &(l, r) in ctx.found_alignments {
        centers.push(snapshot.reprs.get(Side::Left, l).to_vec());
        centers.push(snapshot.reprs.get(Side::Right, r).to_vec());
    }
    let pool: Vec<(SideNode, Vec<f64>)> = ctx
        .pool
        .iter()
        .map(|&(side, node)| ((side, node), snapshot.reprs.get(side, node).to_vec()))
        .collect();
    Ok(k_center_greedy(&pool, &centers, ctx.budget))
}

/// Largest-remainder apportionment of `total` proportional to `weights`;
/// remainder ties go to the lower index.
pub fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 || weights.is_empty() {
        return vec![0; weights.len()];
    }
    let raw: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut quotas: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = raw[a] - raw[a].floor();
        let rb = raw[b] - raw[b].floor();
        rb.partial_cmp(&ra).unwrap().then_with(|| a.cmp(&b))
    });
    for i in 0..total.saturating_sub(assigned) {
        quotas[order[i % order.len()]] += 1;
    }
    quotas
}

/// Seeded k-means with a fixed iteration cap. Returns per-point cluster
/// assignments; empty clusters keep their previous center.
pub fn kmeans(points: &[Vec<f64>], k: usize, max_iters: usize, seed: u64) -> Vec<usize> {
    assert!(k >= 1);
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let k = k.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let mut centers: Vec<Vec<f64>> = idx[..k].iter().map(|&i| points[i].clone()).collect();
    let mut assign = vec![0usize; n];
    for _ in 0..max_iters {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = l2_sq(p, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assign[i]] += 1;
            for d in 0..dim {
                sums[assign[i]][d] += p[d];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for d in 0..dim {
                    centers[c][d] = sums[c][d] / counts[c] as f64;
                }
            }
        }
    }
    assign
}

/// Embedding-space coverage by central nodes: cluster all representations,
/// weight each cluster by 1/(1+labeled count), apportion the budget by
/// largest remainder, and fill each cluster's quota with the inner static
/// ranking restricted to that cluster. Overflow is redistributed to the
/// remaining clusters by the same rule.
pub fn select_esccn(ctx: &SelectorContext, n_clusters: usize, inner: StaticKind) -> Result<QueryBatch> {
    if n_clusters < 1 {
        return Err(Error::InvalidArgument("n_clusters must be >= 1".into()));
    }
    let snapshot = match ctx.snapshot {
        Some(s) => s,
        None => return select_static(ctx, &ctx.static_rankings.degree),
    };
    let n_left = snapshot.reprs.left.len() / snapshot.reprs.dim;
    let n_right = snapshot.reprs.right.len() / snapshot.reprs.dim;
    let mut nodes: Vec<SideNode> = Vec::with_capacity(n_left + n_right);
    nodes.extend((0..n_left).map(|i| (Side::Left, i)));
    nodes.extend((0..n_right).map(|i| (Side::Right, i)));
    let points: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&(side, node)| snapshot.reprs.get(side, node).to_vec())
        .collect();
    let assign = kmeans(&points, n_clusters, 50, ctx.seed);
    let k = n_clusters.min(points.len());

    let mut labeled_count = vec![0usize; k];
    let mut cluster_pool: Vec<BTreeSet<SideNode>> = vec![BTreeSet::new(); k];
    for (i, &node) in nodes.iter().enumerate() {
        let c = assign[i];
        if ctx.labeled.contains(&node) {
            labeled_count[c] += 1;
        }
        if ctx.pool.contains(&node) {
            cluster_pool[c].insert(node);
        }
    }

    let ranking = inner.ranking(ctx.static_rankings);
    let mut batch: Vec<SideNode> = Vec::new();
    let mut remaining = ctx.budget.min(ctx.pool.len());
    while remaining > 0 {
        let open: Vec<usize> = (0..k).filter(|&c| !cluster_pool[c].is_empty()).collect();
        if open.is_empty() {
            break;
        }
        let weights: Vec<f64> = open
            .iter()
            .map(|&c| 1.0 / (1.0 + labeled_count[c] as f64))
            .collect();
        let quotas = largest_remainder(&weights, remaining);
        let mut progressed = false;
        for (oi, &c) in open.iter().enumerate() {
            let take = quotas[oi].min(cluster_pool[c].len());
            if take == 0 {
                continue;
            }
            let chosen = take_from_ranking(ranking, &cluster_pool[c], take)?;
            for node in chosen {
                cluster_pool[c].remove(&node);
                batch.push(node);
                remaining -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    Ok(batch)
}

fn entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.ln())
        .sum()
}

/// BALD mutual-information score from T sampled distributions:
/// `H(mean distribution) − mean(H(distribution_t))`.
pub fn bald_score(distributions: &[Vec<f64>]) -> f64 {
    let t = distributions.len() as f64;
    let classes = distributions[0].len();
    let mut mean = vec![0.0; classes];
    let mut mean_entropy = 0.0;
    for d in distributions {
        for (m, &v) in mean.iter_mut().zip(d) {
            *m += v / t;
        }
        mean_entropy += entropy(d) / t;
    }
    entropy(&mean) - mean_entropy
}

/// Selects the `budget` pool nodes with the highest BALD score over T
/// Monte-Carlo-dropout softmax distributions.
pub fn select_bald(ctx: &SelectorContext, t_runs: usize, tau: f64) -> Result<QueryBatch> {
    if t_runs < 2 {
        return Err(Error::InvalidArgument(
            "BALD needs T >= 2 dropout runs".into(),
        ));
    }
    let snapshot = ctx
        .snapshot
        .ok_or_else(|| Error::InvalidArgument("BALD requires a model snapshot".into()))?;
    let pool: Vec<SideNode> = ctx.pool.iter().copied().collect();
    let dists = snapshot.mc_dropout_distributions(&pool, t_runs, tau)?;
    let mut scored: Vec<(SideNode, f64)> = pool
        .iter()
        .zip(&dists)
        .map(|(&node, d)| (node, bald_score(d)))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .take(ctx.budget)
        .map(|(n, _)| n)
        .collect())
}

/// Gaussian fit of a sample: (mean, sample standard deviation).
fn fit_normal(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn normal_cdf(x: f64, mean: f64, std: f64) -> f64 {
    if std > 0.0 {
        Normal::new(mean, std).expect("valid normal").cdf(x)
    } else {
        // zero sample variance: step function at the mean
        if x >= mean {
            1.0
        } else {
            0.0
        }
    }
}

/// prexp score for a node with maximum similarity `x`:
/// `P_match(s ≤ x) − P_excl(s ≥ x)` under the two fitted Gaussians.
pub fn prexp_score(x: f64, match_fit: (f64, f64), excl_fit: (f64, f64)) -> f64 {
    normal_cdf(x, match_fit.0, match_fit.1) - (1.0 - normal_cdf(x, excl_fit.0, excl_fit.1))
}

/// Certainty-matching selection: score pool nodes by the fitted historical
/// distributions of maximum similarity for matched vs exclusive nodes, take
/// those above the threshold (highest first), and fill the remainder with the
/// fallback static heuristic.
pub fn select_prexp(
    ctx: &SelectorContext,
    threshold: f64,
    fallback: StaticKind,
    min_samples_per_class: usize,
) -> Result<QueryBatch> {
    let ranking = fallback.ranking(ctx.static_rankings);
    let snapshot = match ctx.snapshot {
        Some(s) => s,
        None => return select_static(ctx, ranking),
    };
    let matches: Vec<f64> = ctx
        .history
        .iter()
        .filter(|r| r.had_match)
        .map(|r| r.s_max)
        .collect();
    let excls: Vec<f64> = ctx
        .history
        .iter()
        .filter(|r| !r.had_match)
        .map(|r| r.s_max)
        .collect();
    if matches.len() < min_samples_per_class || excls.len() < min_samples_per_class {
        return select_static(ctx, ranking);
    }
    let match_fit = fit_normal(&matches);
    let excl_fit = fit_normal(&excls);
    let mut scored: Vec<(SideNode, f64)> = ctx
        .pool
        .iter()
        .map(|&(side, node)| {
            let x = snapshot.s_max(side, node);
            ((side, node), prexp_score(x, match_fit, excl_fit))
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    let mut batch: Vec<SideNode> = scored
        .into_iter()
        .filter(|&(_, s)| s > threshold)
        .take(ctx.budget)
        .map(|(n, _)| n)
        .collect();
    if batch.len() < ctx.budget.min(ctx.pool.len()) {
        let residual: BTreeSet<SideNode> = ctx
            .pool
            .iter()
            .copied()
            .filter(|n| !batch.contains(n))
            .collect();
        let fill = take_from_ranking(ranking, &residual, ctx.budget - batch.len())?;
        batch.extend(fill);
    }
    Ok(batch)
}
