//! Learning-curve summarization: normalized AUC, Welch's t-test, and
//! cross-seed aggregation with significance flags against the random
//! baseline.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// A per-run learning curve: (cumulative queries, score) with metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub heuristic: String,
    pub seed: u64,
    pub dataset: String,
    /// Strictly increasing query counts with finite scores.
    pub points: Vec<(usize, f64)>,
}

impl LearningCurve {
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidArgument("empty curve".into()));
        }
        for w in self.points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidArgument(
                    "curve query counts must be strictly increasing".into(),
                ));
            }
        }
        if self.points.iter().any(|p| !p.1.is_finite()) {
            return Err(Error::InvalidArgument("non-finite curve score".into()));
        }
        Ok(())
    }
}

/// Trapezoidal area under the queries-vs-score curve, normalized by
/// `total_queries`. The curve is prefixed with (0, first score) and the last
/// score is carried forward to `total_queries`, so truncated runs stay
/// comparable.
pub fn auc(curve: &LearningCurve, total_queries: usize) -> Result<f64> {
    curve.validate()?;
    let last_x = curve.points.last().unwrap().0;
    if total_queries < last_x {
        return Err(Error::InvalidArgument(format!(
            "total_queries {total_queries} below final curve point {last_x}"
        )));
    }
    let mut extended = Vec::with_capacity(curve.points.len() + 2);
    if curve.points[0].0 > 0 {
        extended.push((0usize, curve.points[0].1));
    }
    extended.extend(curve.points.iter().copied());
    if total_queries > last_x {
        extended.push((total_queries, curve.points.last().unwrap().1));
    }
    let mut area = 0.0;
    for w in extended.windows(2) {
        let dx = (w[1].0 - w[0].0) as f64;
        area += dx * (w[0].1 + w[1].1) / 2.0;
    }
    Ok(area / total_queries as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t: f64,
    pub degrees_of_freedom: f64,
    pub p_two_sided: f64,
}

/// Welch's unequal-variances t-test with the Welch–Satterthwaite degrees of
/// freedom and a two-sided p-value.
pub fn welch_t_test(samples_a: &[f64], samples_b: &[f64]) -> Result<WelchResult> {
    if samples_a.len() < 2 || samples_b.len() < 2 {
        return Err(Error::InvalidArgument(
            "each sample needs at least 2 values".into(),
        ));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let var = |s: &[f64], m: f64| {
        s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (s.len() as f64 - 1.0)
    };
    let (na, nb) = (samples_a.len() as f64, samples_b.len() as f64);
    let (ma, mb) = (mean(samples_a), mean(samples_b));
    let (va, vb) = (var(samples_a, ma), var(samples_b, mb));
    if va == 0.0 && vb == 0.0 {
        return Ok(if ma == mb {
            WelchResult {
                t: 0.0,
                degrees_of_freedom: na + nb - 2.0,
                p_two_sided: 1.0,
            }
        } else {
            WelchResult {
                t: if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY },
                degrees_of_freedom: na + nb - 2.0,
                p_two_sided: 0.0,
            }
        });
    }
    let se_sq = va / na + vb / nb;
    let t = (ma - mb) / se_sq.sqrt();
    let df = se_sq * se_sq
        / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid t-distribution");
    let p = 2.0 * dist.cdf(-t.abs());
    Ok(WelchResult {
        t,
        degrees_of_freedom: df,
        p_two_sided: p.clamp(0.0, 1.0),
    })
}

/// One aggregate-table row.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub heuristic: String,
    pub n_runs: usize,
    pub mean_auc: f64,
    pub std_auc: f64,
    /// p < 0.01 vs the rnd group; None when no rnd group is present.
    pub significant_vs_random: Option<bool>,
}

/// Aggregates per-heuristic AUC samples: mean, sample standard deviation
/// (n−1), and a significance flag at p < 0.01 against the `rnd` group.
pub fn aggregate(
    curves: &[LearningCurve],
    total_queries: usize,
) -> Result<Vec<AggregateRow>> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for c in curves {
        groups
            .entry(c.heuristic.as_str())
            .or_default()
            .push(auc(c, total_queries)?);
    }
    for (name, aucs) in &groups {
        if aucs.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "heuristic {name:?} has fewer than 2 runs"
            )));
        }
    }
    let rnd = groups.get("rnd").cloned();
    let mut rows = Vec::new();
    for (name, aucs) in &groups {
        let n = aucs.len() as f64;
        let mean = aucs.iter().sum::<f64>() / n;
        let std =
            (aucs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        let significant = match (&rnd, *name) {
            (_, "rnd") => Some(false),
            (Some(r), _) => Some(welch_t_test(aucs, r)?.p_two_sided < 0.01),
            (None, _) => None,
        };
        rows.push(AggregateRow {
            heuristic: name.to_string(),
            n_runs: aucs.len(),
            mean_auc: mean,
            std_auc: std,
            significant_vs_random: significant,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(points: Vec<(usize, f64)>) -> LearningCurve {
        LearningCurve {
            heuristic: "deg".into(),
            seed: 0,
            dataset: "test".into(),
            points,
        }
    }

    #[test]
    fn auc_constant_is_one() {
        let c = curve(vec![(10, 1.0), (20, 1.0)]);
        assert!((auc(&c, 100).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn auc_triangle() {
        let c = curve(vec![(0, 0.0), (100, 1.0)]);
        assert!((auc(&c, 100).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn auc_carries_last_value() {
        let c = curve(vec![(0, 0.0), (50, 1.0)]);
        // triangle over [0,50] = 25, carried 1.0 over [50,100] = 50
        assert!((auc(&c, 100).unwrap() - 0.75).abs() < 1e-12);
    }

    /// Dense-resampling oracle: evaluate the piecewise-linear interpolant on a
    /// fine grid and Riemann-sum it.
    #[test]
    fn auc_matches_dense_resampling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut x = 0usize;
            let mut points = Vec::new();
            let mut y: f64 = 0.0;
            for _ in 0..rng.gen_range(2..12) {
                x += rng.gen_range(1..30);
                y = (y + rng.gen::<f64>() * 0.2).min(1.0);
                points.push((x, y));
            }
            let total = x + rng.gen_range(0..20);
            let c = curve(points.clone());
            let got = auc(&c, total).unwrap();

            let mut ext = vec![(0usize, points[0].1)];
            ext.extend(points.iter().copied());
            ext.push((total, points.last().unwrap().1));
            let interp = |q: f64| -> f64 {
                for w in ext.windows(2) {
                    let (x0, y0) = (w[0].0 as f64, w[0].1);
                    let (x1, y1) = (w[1].0 as f64, w[1].1);
                    if q >= x0 && q <= x1 {
                        if x1 == x0 {
                            return y1;
                        }
                        return y0 + (y1 - y0) * (q - x0) / (x1 - x0);
                    }
                }
                ext.last().unwrap().1
            };
            let steps = 200_000;
            let dx = total as f64 / steps as f64;
            let riemann: f64 = (0..steps)
                .map(|i| interp((i as f64 + 0.5) * dx) * dx)
                .sum::<f64>()
                / total as f64;
            assert!((got - riemann).abs() < 1e-6, "auc {got} vs riemann {riemann}");
        }
    }

    #[test]
    fn auc_invariant_under_collinear_points() {
        let c1 = curve(vec![(0, 0.0), (100, 1.0)]);
        let c2 = curve(vec![(0, 0.0), (25, 0.25), (50, 0.5), (100, 1.0)]);
        assert!((auc(&c1, 100).unwrap() - auc(&c2, 100).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn auc_monotone_under_domination() {
        let lo = curve(vec![(0, 0.1), (50, 0.3), (100, 0.5)]);
        let hi = curve(vec![(0, 0.2), (50, 0.5), (100, 0.6)]);
        assert!(auc(&hi, 100).unwrap() >= auc(&lo, 100).unwrap());
    }

    #[test]
    fn welch_identical_samples() {
        let s = [1.0, 1.1, 0.9, 1.05];
        let r = welch_t_test(&s, &s).unwrap();
        assert_eq!(r.t, 0.0);
        assert!((r.p_two_sided - 1.0).abs() < 1e-12);
    }

    #[test]
    fn welch_large_shift_is_significant() {
        let a: Vec<f64> = [1.0, 1.1, 0.9].repeat(5).iter().map(|v| v + 10.0).collect();
        let b: Vec<f64> = [1.0, 1.1, 0.9].repeat(5);
        let r = welch_t_test(&a, &b).unwrap();
        assert!(r.p_two_sided < 1e-6, "p = {}", r.p_two_sided);
        assert!(r.t > 0.0);
    }

    #[test]
    fn welch_swap_negates_t() {
        let a = [0.5, 0.6, 0.4, 0.55];
        let b = [0.8, 0.9, 0.7, 0.85];
        let ab = welch_t_test(&a, &b).unwrap();
        let ba = welch_t_test(&b, &a).unwrap();
        assert!((ab.t + ba.t).abs() < 1e-12);
        assert!((ab.p_two_sided - ba.p_two_sided).abs() < 1e-12);
    }

    #[test]
    fn welch_zero_variance_cases() {
        let a = [1.0, 1.0, 1.0];
        let b = [1.0, 1.0];
        assert_eq!(welch_t_test(&a, &b).unwrap().p_two_sided, 1.0);
        let c = [2.0, 2.0];
        assert_eq!(welch_t_test(&a, &c).unwrap().p_two_sided, 0.0);
    }

    /// Cross-check against a reference value: scipy.stats.ttest_ind with
    /// equal_var=False on these samples gives t ≈ 2.8300, p ≈ 0.0221.
    #[test]
    fn welch_reference_value() {
        let a = [27.5, 21.0, 19.0, 23.6, 17.0, 17.9];
        let b = [27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 22.9, 18.5];
        let r = welch_t_test(&b, &a).unwrap();
        assert!((r.t - 1.0842219).abs() < 1e-6, "t = {}", r.t);
        assert!((r.degrees_of_freedom - 7.2641274).abs() < 1e-6);
        assert!((r.p_two_sided - 0.3129349).abs() < 1e-6, "p = {}", r.p_two_sided);
    }

    #[test]
    fn aggregate_basic() {
        let mut curves = Vec::new();
        for seed in 0..5 {
            curves.push(LearningCurve {
                heuristic: "betw".into(),
                seed,
                dataset: "d".into(),
                points: vec![(0, 0.5), (100, 0.9)],
            });
            curves.push(LearningCurve {
                heuristic: "rnd".into(),
                seed,
                dataset: "d".into(),
                points: vec![(0, 0.1), (100, 0.2 + seed as f64 * 0.001)],
            });
        }
        let rows = aggregate(&curves, 100).unwrap();
        let betw = rows.iter().find(|r| r.heuristic == "betw").unwrap();
        assert_eq!(betw.n_runs, 5);
        assert!(betw.std_auc.abs() < 1e-12);
        assert_eq!(betw.significant_vs_random, Some(true));
        let rnd = rows.iter().find(|r| r.heuristic == "rnd").unwrap();
        assert_eq!(rnd.significant_vs_random, Some(false));
    }

    #[test]
    fn aggregate_without_random_group() {
        let curves: Vec<LearningCurve> = (0..2)
            .map(|seed| LearningCurve {
                heuristic: "deg".into(),
                seed,
                dataset: "d".into(),
                points: vec![(0, 0.3), (10, 0.4 + seed as f64 * 0.01)],
            })
            .collect();
        let rows = aggregate(&curves, 10).unwrap();
        assert_eq!(rows[0].significant_vs_random, None);
    }
}
