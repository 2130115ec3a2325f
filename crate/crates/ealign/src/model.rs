//! Trainable embedding matcher in a joint space: base embeddings per entity,
//! symmetric-normalized adjacency propagation with a tanh nonlinearity
//! between layers, margin-based matching loss with negative sampling, and
//! ranking metrics (H@1, H@10, MRR with realistic-rank tie handling).
//!
//! The whole stack is hand-rolled on flat `Vec<f64>` matrices; graphs at
//! simulation scale are small enough that sparse edge-list propagation is the
//! only thing that matters.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kg::{GraphView, Side, SideNode};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    /// Number of graph-convolution layers; 0 means raw base embeddings.
    pub num_layers: usize,
    /// Dropout on base embeddings before the first propagation.
    pub dropout_rate: f64,
    pub margin: f64,
    pub negatives_per_positive: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Validation MRR is checked every this many epochs.
    pub eval_every: usize,
    /// Early stopping after this many epochs without improvement.
    pub patience: usize,
    pub softmax_temperature: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embedding_dim: 16,
            num_layers: 2,
            dropout_rate: 0.2,
            margin: 1.0,
            negatives_per_positive: 2,
            learning_rate: 0.05,
            max_epochs: 4000,
            eval_every: 20,
            patience: 200,
            softmax_temperature: 0.5,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 {
            return Err(Error::Config("embedding_dim must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate must be in [0,1), got {}",
                self.dropout_rate
            )));
        }
        if self.margin <= 0.0 || self.learning_rate <= 0.0 || self.softmax_temperature <= 0.0 {
            return Err(Error::Config(
                "margin, learning_rate and softmax_temperature must be positive".into(),
            ));
        }
        if self.negatives_per_positive == 0 || self.eval_every == 0 || self.patience == 0 {
            return Err(Error::Config(
                "negatives_per_positive, eval_every and patience must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Symmetric-normalized adjacency with self-loops,
/// `Â = D^{-1/2}(A+I)D^{-1/2}` on the collapsed undirected simple graph of a
/// (possibly masked) view. Stored as a sparse edge list including both
/// directions and the self-loops.
#[derive(Debug, Clone)]
pub struct NormAdjacency {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl NormAdjacency {
    pub fn from_view(view: &GraphView) -> NormAdjacency {
        let n = view.num_entities();
        let mut nbrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (h, _, t) in view.triples() {
            if h != t {
                nbrs[h].insert(t);
                nbrs[t].insert(h);
            }
        }
        let deg: Vec<f64> = nbrs.iter().map(|s| (s.len() + 1) as f64).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            edges.push((i, i, 1.0 / deg[i]));
            for &j in &nbrs[i] {
                edges.push((i, j, 1.0 / (deg[i] * deg[j]).sqrt()));
            }
        }
        NormAdjacency { n, edges }
    }

    /// out = Â · h (dim columns). Â is symmetric, so this is also the
    /// transpose application used in backprop.
    fn apply(&self, h: &[f64], dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n * dim];
        for &(i, j, w) in &self.edges {
            let src = &h[j * dim..(j + 1) * dim];
            let dst = &mut out[i * dim..(i + 1) * dim];
            for d in 0..dim {
                dst[d] += w * src[d];
            }
        }
        out
    }
}

/// Final node representations of both graphs.
#[derive(Debug, Clone)]
pub struct Representations {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub dim: usize,
}

impl Representations {
    pub fn get(&self, side: Side, node: usize) -> &[f64] {
        let buf = match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        };
        &buf[node * self.dim..(node + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.left.iter().chain(&self.right).all(|v| v.is_finite())
    }
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Per-side forward cache for backprop.
struct SideTrace {
    /// Inverted-dropout scale factors applied to the base embeddings
    /// (None when deterministic).
    mask: Option<Vec<f64>>,
    /// Activated outputs a_0..a_{L-2} (tanh applied between layers).
    acts: Vec<Vec<f64>>,
}

fn forward_side(
    base: &[f64],
    adj: &NormAdjacency,
    dim: usize,
    num_layers: usize,
    dropout: Option<(f64, &mut ChaCha8Rng)>,
) -> (Vec<f64>, SideTrace) {
    let mut mask = None;
    let mut h = base.to_vec();
    if let Some((rate, rng)) = dropout {
        if rate > 0.0 {
            let scale = 1.0 / (1.0 - rate);
            let m: Vec<f64> = (0..h.len())
                .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { scale })
                .collect();
            for (v, s) in h.iter_mut().zip(&m) {
                *v *= s;
            }
            mask = Some(m);
        }
    }
    let mut acts = Vec::new();
    for layer in 0..num_layers {
        h = adj.apply(&h, dim);
        if layer + 1 < num_layers {
            for v in h.iter_mut() {
                *v = v.tanh();
            }
            acts.push(h.clone());
        }
    }
    (h, SideTrace { mask, acts })
}

fn backward_side(
    grad_out: &[f64],
    trace: &SideTrace,
    adj: &NormAdjacency,
    dim: usize,
    num_layers: usize,
) -> Vec<f64> {
    let mut g = grad_out.to_vec();
    for layer in (0..num_layers).rev() {
        g = adj.apply(&g, dim);
        if layer > 0 {
            let a = &trace.acts[layer - 1];
            for (gv, av) in g.iter_mut().zip(a) {
                *gv *= 1.0 - av * av;
            }
        }
    }
    if let Some(mask) = &trace.mask {
        for (gv, s) in g.iter_mut().zip(mask) {
            *gv *= s;
        }
    }
    g
}

/// Base embeddings plus training bookkeeping. Parameters persist across
/// simulation steps (warm start); the internal RNG drives dropout masks and
/// negative sampling.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub config: ModelConfig,
    pub left_base: Vec<f64>,
    pub right_base: Vec<f64>,
    pub epoch: usize,
    rng: ChaCha8Rng,
}

impl ModelState {
    pub fn init(config: ModelConfig, n_left: usize, n_right: usize) -> Result<ModelState> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let dim = config.embedding_dim;
        let scale = 1.0 / (dim as f64).sqrt();
        let mut init = |n: usize| -> Vec<f64> {
            (0..n * dim)
                .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * scale)
                .collect()
        };
        let left_base = init(n_left);
        let right_base = init(n_right);
        Ok(ModelState {
            config,
            left_base,
            right_base,
            epoch: 0,
            rng,
        })
    }

    /// Deterministic (dropout off) or stochastic forward pass on the masked
    /// views. Errors if any output is non-finite.
    pub fn forward(
        &mut self,
        adj_left: &NormAdjacency,
        adj_right: &NormAdjacency,
        stochastic: bool,
    ) -> Result<Representations> {
        let dim = self.config.embedding_dim;
        let rate = self.config.dropout_rate;
        let (left, _) = forward_side(
            &self.left_base,
            adj_left,
            dim,
            self.config.num_layers,
            if stochastic { Some((rate, &mut self.rng)) } else { None },
        );
        let (right, _) = forward_side(
            &self.right_base,
            adj_right,
            dim,
            self.config.num_layers,
            if stochastic { Some((rate, &mut self.rng)) } else { None },
        );
        let reprs = Representations { left, right, dim };
        if !reprs.is_finite() {
            return Err(Error::Diverged { epoch: self.epoch });
        }
        Ok(reprs)
    }
}

/// Gradients of a loss with respect to final representations.
#[derive(Debug, Clone)]
pub struct ReprGrads {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// Margin-based matching loss over positive pairs with K uniform negatives
/// per positive, corrupting one side at a time:
/// `Σ [γ + d(e,e') − d(ẽ,ẽ')]₊` with L1 distance d.
///
/// Negatives are drawn from the given pools (already excluding discovered
/// exclusives); the draw is deterministic for a given seed.
pub fn margin_loss(
    reprs: &Representations,
    positives: &BTreeSet<(usize, usize)>,
    neg_pool_left: &[usize],
    neg_pool_right: &[usize],
    k: usize,
    margin: f64,
    seed: u64,
) -> Result<(f64, ReprGrads)> {
    if positives.is_empty() {
        return Err(Error::InvalidArgument("no positive pairs".into()));
    }
    if neg_pool_left.is_empty() || neg_pool_right.is_empty() {
        return Err(Error::InvalidArgument("empty negative pool".into()));
    }
    let dim = reprs.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut loss = 0.0;
    let mut grads = ReprGrads {
        left: vec![0.0; reprs.left.len()],
        right: vec![0.0; reprs.right.len()],
    };
    // Accumulates ±sign(a-b) into both nodes' gradient slices.
    let add_dist_grad = |grads: &mut ReprGrads, ln: usize, rn: usize, coeff: f64| {
        let a = &reprs.left[ln * dim..(ln + 1) * dim];
        let b = &reprs.right[rn * dim..(rn + 1) * dim];
        for d in 0..dim {
            let s = (a[d] - b[d]).signum();
            grads.left[ln * dim + d] += coeff * s;
            grads.right[rn * dim + d] -= coeff * s;
        }
    };
    for &(e_l, e_r) in positives {
        let d_pos = l1_distance(reprs.get(Side::Left, e_l), reprs.get(Side::Right, e_r));
        for _ in 0..k {
            let (neg_l, neg_r) = if rng.gen_bool(0.5) {
                (e_l, neg_pool_right[rng.gen_range(0..neg_pool_right.len())])
            } else {
                (neg_pool_left[rng.gen_range(0..neg_pool_left.len())], e_r)
            };
            let d_neg = l1_distance(reprs.get(Side::Left, neg_l), reprs.get(Side::Right, neg_r));
            let term = margin + d_pos - d_neg;
            if term > 0.0 {
                loss += term;
                add_dist_grad(&mut grads, e_l, e_r, 1.0);
                add_dist_grad(&mut grads, neg_l, neg_r, -1.0);
            }
        }
    }
    Ok((loss, grads))
}

/// Similarity is the negated L1 distance; matrix rows are query nodes,
/// columns are candidates on the other side.
pub fn similarity_matrix(
    reprs: &Representations,
    query_side: Side,
    query_nodes: &[usize],
    candidates: &[usize],
) -> Result<Vec<Vec<f64>>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("empty candidate set".into()));
    }
    let other = match query_side {
        Side::Left => Side::Right,
        Side::Right => Side::Left,
    };
    Ok(query_nodes
        .iter()
        .map(|&q| {
            let qr = reprs.get(query_side, q);
            candidates
                .iter()
                .map(|&c| -l1_distance(qr, reprs.get(other, c)))
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankMetrics {
    pub hits_at_1: f64,
    pub hits_at_10: f64,
    pub mrr: f64,
}

fn rank_direction(
    reprs: &Representations,
    pairs: &[(usize, usize)],
    query_side: Side,
    candidates: &[usize],
) -> RankMetrics {
    let other = match query_side {
        Side::Left => Side::Right,
        Side::Right => Side::Left,
    };
    let (mut h1, mut h10, mut rr) = (0.0, 0.0, 0.0);
    for &(q, truth) in pairs {
        let qr = reprs.get(query_side, q);
        let s_true = -l1_distance(qr, reprs.get(other, truth));
        let mut better = 0usize;
        let mut tied = 0usize;
        for &c in candidates {
            if c == truth {
                continue;
            }
            let s = -l1_distance(qr, reprs.get(other, c));
            if s > s_true {
                better += 1;
            } else if s == s_true {
                tied += 1;
            }
        }
        // realistic rank: mean of optimistic and pessimistic rank under ties
        let rank = (better + 1) as f64 + (tied as f64) / 2.0;
        if rank <= 1.0 {
            h1 += 1.0;
        }
        if rank <= 10.0 {
            h10 += 1.0;
        }
        rr += 1.0 / rank;
    }
    let n = pairs.len() as f64;
    RankMetrics {
        hits_at_1: h1 / n,
        hits_at_10: h10 / n,
        mrr: rr / n,
    }
}

/// Ranks each pair's true counterpart among the candidate entities of the
/// other graph (realistic rank under ties), averaged over both directions.
pub fn evaluate_ranking(
    reprs: &Representations,
    pairs: &BTreeSet<(usize, usize)>,
    candidates_left: &[usize],
    candidates_right: &[usize],
) -> Result<RankMetrics> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no evaluation pairs".into()));
    }
    let lr: Vec<(usize, usize)> = pairs.iter().copied().collect();
    let rl: Vec<(usize, usize)> = pairs.iter().map(|&(l, r)| (r, l)).collect();
    let fwd = rank_direction(reprs, &lr, Side::Left, candidates_right);
    let bwd = rank_direction(reprs, &rl, Side::Right, candidates_left);
    Ok(RankMetrics {
        hits_at_1: (fwd.hits_at_1 + bwd.hits_at_1) / 2.0,
        hits_at_10: (fwd.hits_at_10 + bwd.hits_at_10) / 2.0,
        mrr: (fwd.mrr + bwd.mrr) / 2.0,
    })
}

/// Softmax with temperature: p_i ∝ exp(s_i/τ), computed with max-shift.
pub fn softmax_with_temperature(scores: &[f64], tau: f64) -> Vec<f64> {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| ((s - m) / tau).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Everything training needs besides the model parameters.
pub struct TrainContext<'a> {
    pub adj_left: &'a NormAdjacency,
    pub adj_right: &'a NormAdjacency,
    pub positives: &'a BTreeSet<(usize, usize)>,
    pub neg_pool_left: &'a [usize],
    pub neg_pool_right: &'a [usize],
    pub validation: &'a BTreeSet<(usize, usize)>,
    pub candidates_left: &'a [usize],
    pub candidates_right: &'a [usize],
}

#[derive(Debug, Clone, Copy)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_validation_mrr: f64,
}

/// Gradient steps until `max_epochs` or until validation MRR has not improved
/// for `patience` epochs (checked every `eval_every` epochs, plus once before
/// training). Restores the best-validation parameters on return and never
/// reinitializes anything, so repeated calls warm-start.
pub fn train_until_early_stop(state: &mut ModelState, ctx: &TrainContext) -> Result<TrainReport> {
    if ctx.validation.is_empty() {
        return Err(Error::InvalidArgument("no validation pairs".into()));
    }
    let cfg = state.config.clone();
    if cfg.max_epochs == 0 {
        return Ok(TrainReport {
            epochs_run: 0,
            best_epoch: 0,
            best_validation_mrr: f64::NAN,
        });
    }
    let dim = cfg.embedding_dim;
    let stochastic = cfg.dropout_rate > 0.0;

    let eval_mrr = |state: &mut ModelState| -> Result<f64> {
        let reprs = state.forward(ctx.adj_left, ctx.adj_right, false)?;
        Ok(evaluate_ranking(&reprs, ctx.validation, ctx.candidates_left, ctx.candidates_right)?.mrr)
    };

    let mut best_mrr = eval_mrr(state)?;
    let mut best_params = (state.left_base.clone(), state.right_base.clone());
    let mut best_at = 0usize;
    let mut epochs_run = 0usize;

    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        let (left, ltrace) = forward_side(
            &state.left_base,
            ctx.adj_left,
            dim,
            cfg.num_layers,
            if stochastic {
                Some((cfg.dropout_rate, &mut state.rng))
            } else {
                None
            },
        );
        let (right, rtrace) = forward_side(
            &state.right_base,
            ctx.adj_right,
            dim,
            cfg.num_layers,
            if stochastic {
                Some((cfg.dropout_rate, &mut state.rng))
            } else {
                None
            },
        );
        let reprs = Representations { left, right, dim };
        if !reprs.is_finite() {
            return Err(Error::Diverged { epoch: state.epoch + epoch });
        }
        let neg_seed = state.rng.gen();
        let (loss, grads) = margin_loss(
            &reprs,
            ctx.positives,
            ctx.neg_pool_left,
            ctx.neg_pool_right,
            cfg.negatives_per_positive,
            cfg.margin,
            neg_seed,
        )?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch: state.epoch + epoch });
        }
        let gl = backward_side(&grads.left, &ltrace, ctx.adj_left, dim, cfg.num_layers);
        let gr = backward_side(&grads.right, &rtrace, ctx.adj_right, dim, cfg.num_layers);
        let n = ctx.positives.len() as f64;
        for (p, g) in state.left_base.iter_mut().zip(&gl) {
            *p -= cfg.learning_rate * g / n;
        }
        for (p, g) in state.right_base.iter_mut().zip(&gr) {
            *p -= cfg.learning_rate * g / n;
        }
        if epoch % cfg.eval_every == 0 {
            let mrr = eval_mrr(state)?;
            if mrr > best_mrr {
                best_mrr = mrr;
                best_params = (state.left_base.clone(), state.right_base.clone());
                best_at = epoch;
            } else if epoch - best_at >= cfg.patience {
                break;
            }
        }
    }
    state.left_base = best_params.0;
    state.right_base = best_params.1;
    state.epoch += epochs_run;
    Ok(TrainReport {
        epochs_run,
        best_epoch: best_at,
        best_validation_mrr: best_mrr,
    })
}

/// A self-contained frozen view of the model for the heuristics: deterministic
/// representations, the masked adjacencies for stochastic replay, and the
/// candidate sets (non-exclusive active entities per side).
#[derive(Debug, Clone)]
pub struct ModelSnapshot {
    pub config: ModelConfig,
    left_base: Vec<f64>,
    right_base: Vec<f64>,
    adj_left: NormAdjacency,
    adj_right: NormAdjacency,
    pub reprs: Representations,
    pub candidates_left: Vec<usize>,
    pub candidates_right: Vec<usize>,
    replay_seed: u64,
}

impl ModelSnapshot {
    pub fn new(
        state: &ModelState,
        adj_left: &NormAdjacency,
        adj_right: &NormAdjacency,
        candidates_left: Vec<usize>,
        candidates_right: Vec<usize>,
        replay_seed: u64,
    ) -> Result<ModelSnapshot> {
        let mut probe = state.clone();
        let reprs = probe.forward(adj_left, adj_right, false)?;
        Ok(ModelSnapshot {
            config: state.config.clone(),
            left_base: state.left_base.clone(),
            right_base: state.right_base.clone(),
            adj_left: adj_left.clone(),
            adj_right: adj_right.clone(),
            reprs,
            candidates_left,
            candidates_right,
            replay_seed,
        })
    }

    pub fn candidates(&self, side: Side) -> &[usize] {
        match side {
            Side::Left => &self.candidates_left,
            Side::Right => &self.candidates_right,
        }
    }

    /// Maximum deterministic similarity of a node to the candidates on the
    /// other side.
    pub fn s_max(&self, side: Side, node: usize) -> f64 {
        let other = match side {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        };
        let qr = self.reprs.get(side, node);
        self.candidates(other)
            .iter()
            .map(|&c| -l1_distance(qr, self.reprs.get(other, c)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// For each query node, T softmax distributions (temperature τ) over the
    /// other side's candidates, one per stochastic forward pass.
    pub fn mc_dropout_distributions(
        &self,
        query: &[SideNode],
        t_runs: usize,
        tau: f64,
    ) -> Result<Vec<Vec<Vec<f64>>>> {
        if t_runs == 0 {
            return Err(Error::InvalidArgument("T must be >= 1".into()));
        }
        if self.candidates_left.is_empty() || self.candidates_right.is_empty() {
            return Err(Error::InvalidArgument("empty candidate set".into()));
        }
        let dim = self.config.embedding_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(self.replay_seed);
        let rate = self.config.dropout_rate;
        let mut out: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(t_runs); query.len()];
        for _ in 0..t_runs {
            let (left, _) = forward_side(
                &self.left_base,
                &self.adj_left,
                dim,
                self.config.num_layers,
                Some((rate, &mut rng)),
            );
            let (right, _) = forward_side(
                &self.right_base,
                &self.adj_right,
                dim,
                self.config.num_layers,
                Some((rate, &mut rng)),
            );
            let reprs = Representations { left, right, dim };
            for (qi, &(side, node)) in query.iter().enumerate() {
                let other = match side {
                    Side::Left => Side::Right,
                    Side::Right => Side::Left,
                };
                let qr = reprs.get(side, node);
                let scores: Vec<f64> = self
                    .candidates(other)
                    .iter()
                    .map(|&c| -l1_distance(qr, reprs.get(other, c)))
                    .collect();
                out[qi].push(softmax_with_temperature(&scores, tau));
            }
        }
        Ok(out)
    }
}
