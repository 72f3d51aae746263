//! Operating-point error rates, DET curves, GFAR, vertical averaging and
//! impact-sorted confidence bands.
//!
//! Acceptance uses `f(s) >= t`, rejection `f(s) < t`; ties at the threshold
//! count as acceptances. With fused genuine scores `G` and fused scores `X`
//! of some impostor population, `FRR(t) = #{g < t}/|G|` and
//! `rate(t) = #{x >= t}/|X|` — the FAR when `X` is zero-effort, the
//! per-combination SFAR when `X` was rewritten by a spoof plan.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::attack::{AttackCombination, MixturePrior};
use crate::error::{Error, Result};
use crate::scalar::{real, to_f64, Real};

/// One operating point of a DET sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetPoint<F> {
    pub threshold: F,
    pub frr: F,
    pub far: F,
}

/// Identity of a swept curve: which combination produced it and the attack
/// impact of the scenario behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetTag<F> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combination: Option<AttackCombination>,
    pub impact: F,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// Threshold sweep of (FRR, FAR-like) operating points.
///
/// Points are ordered by increasing threshold, so `frr` is non-decreasing
/// and `far` non-increasing along the curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetCurve<F> {
    pub points: Vec<DetPoint<F>>,
    #[serde(default = "Option::default", skip_serializing_if = "Option::is_none")]
    pub tag: Option<DetTag<F>>,
}

impl<F: Real> DetCurve<F> {
    /// Interpolated FAR at the given FRR (vertical reading of the curve).
    ///
    /// For equal-FRR plateaus the best (lowest) FAR is used; queries outside
    /// the curve's FRR range clamp to the end points.
    pub fn far_at_frr(&self, frr: F) -> F {
        let knots = self.knots();
        interpolate(&knots, frr)
    }

    /// Sample the curve on an FRR grid.
    pub fn sample_on_grid(&self, grid: &[F]) -> Vec<F> {
        let knots = self.knots();
        grid.iter().map(|&q| interpolate(&knots, q)).collect()
    }

    /// (frr, far) knots with strictly increasing frr, keeping the lowest far
    /// per plateau.
    fn knots(&self) -> Vec<(F, F)> {
        let mut knots: Vec<(F, F)> = Vec::with_capacity(self.points.len());
        for p in &self.points {
            match knots.last_mut() {
                Some(last) if last.0 == p.frr => last.1 = last.1.min(p.far),
                _ => knots.push((p.frr, p.far)),
            }
        }
        knots
    }
}

fn interpolate<F: Real>(knots: &[(F, F)], q: F) -> F {
    if knots.is_empty() {
        return F::zero();
    }
    if q <= knots[0].0 {
        return knots[0].1;
    }
    if q >= knots[knots.len() - 1].0 {
        return knots[knots.len() - 1].1;
    }
    let idx = knots.partition_point(|&(frr, _)| frr <= q);
    let (x0, y0) = knots[idx - 1];
    let (x1, y1) = knots[idx];
    if x1 == x0 {
        return y0.min(y1);
    }
    y0 + (y1 - y0) * (q - x0) / (x1 - x0)
}

fn require_non_empty<F>(name: &'static str, scores: &[F]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::PoolTooSmall {
            name,
            min: 1,
            found: 0,
        });
    }
    Ok(())
}

/// FRR over the genuine scores and acceptance rate over the other population
/// at threshold `t`.
pub fn error_rates_at<F: Real>(
    fused_genuine: &[F],
    fused_other: &[F],
    t: F,
) -> Result<(F, F)> {
    require_non_empty("genuine", fused_genuine)?;
    require_non_empty("other", fused_other)?;
    let rejected = fused_genuine.iter().filter(|&&g| g < t).count();
    let accepted = fused_other.iter().filter(|&&x| x >= t).count();
    let frr = real::<F>(rejected as f64) / real::<F>(fused_genuine.len() as f64);
    let rate = real::<F>(accepted as f64) / real::<F>(fused_other.len() as f64);
    Ok((frr, rate))
}

/// Largest threshold (among the genuine scores and negative infinity) whose
/// empirical FRR does not exceed `frr_max`.
pub fn threshold_for_frr<F: Real>(fused_genuine: &[F], frr_max: F) -> Result<F> {
    if frr_max < F::zero() || frr_max >= F::one() || !frr_max.is_finite() {
        return Err(Error::OutOfRange {
            context: "frr_max",
            value: to_f64(frr_max),
            low: 0.0,
            high: 1.0,
        });
    }
    let n = fused_genuine.len();
    if n == 0 {
        return Ok(F::neg_infinity());
    }
    let mut sorted = fused_genuine.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite fused scores"));
    // allowed number of rejected genuine scores
    let budget = ((to_f64(frr_max) * n as f64) + 1e-9).floor() as usize;
    // candidates in descending order; count of scores strictly below sorted[i]
    // is the index of the first occurrence of that value
    let mut i = n;
    while i > 0 {
        i -= 1;
        let value = sorted[i];
        let first = sorted.partition_point(|&x| x < value);
        if first <= budget {
            return Ok(value);
        }
        i = first; // skip the rest of the tie block
    }
    Ok(F::neg_infinity())
}

/// Full threshold sweep over the union of candidate thresholds.
pub fn det_curve<F: Real>(fused_genuine: &[F], fused_other: &[F]) -> Result<DetCurve<F>> {
    require_non_empty("genuine", fused_genuine)?;
    require_non_empty("other", fused_other)?;
    let mut genuine = fused_genuine.to_vec();
    genuine.sort_by(|a, b| a.partial_cmp(b).expect("finite fused scores"));
    let mut other = fused_other.to_vec();
    other.sort_by(|a, b| a.partial_cmp(b).expect("finite fused scores"));

    let mut thresholds: Vec<F> = Vec::with_capacity(genuine.len() + other.len() + 2);
    thresholds.push(F::neg_infinity());
    thresholds.extend(genuine.iter().copied());
    thresholds.extend(other.iter().copied());
    thresholds.push(F::infinity());
    thresholds.sort_by(|a, b| a.partial_cmp(b).expect("comparable thresholds"));
    thresholds.dedup();

    let ng = real::<F>(genuine.len() as f64);
    let no = real::<F>(other.len() as f64);
    let points = thresholds
        .into_iter()
        .map(|t| {
            let rejected = genuine.partition_point(|&x| x < t);
            let below = other.partition_point(|&x| x < t);
            DetPoint {
                threshold: t,
                frr: real::<F>(rejected as f64) / ng,
                far: real::<F>((other.len() - below) as f64) / no,
            }
        })
        .collect();
    Ok(DetCurve { points, tag: None })
}

/// Global FAR: prior-weighted convex combination of FAR and the
/// per-combination SFAR values.
pub fn gfar<F: Real>(
    far: F,
    sfar_by_combo: &BTreeMap<AttackCombination, F>,
    prior: &MixturePrior<F>,
) -> Result<F> {
    let mut total = prior.zero_effort_weight() * far;
    for (combo, weight) in prior.attack_support() {
        let sfar = sfar_by_combo
            .get(combo)
            .ok_or_else(|| Error::PriorMissingCombination {
                combination: combo.label(),
            })?;
        total = total + weight * *sfar;
    }
    Ok(total)
}

/// Vertical average of DET curves on an FRR grid.
pub fn average_det<F: Real>(curves: &[DetCurve<F>], frr_grid: &[F]) -> Result<DetCurve<F>> {
    if curves.is_empty() {
        return Err(Error::PoolTooSmall {
            name: "curves",
            min: 1,
            found: 0,
        });
    }
    let n = real::<F>(curves.len() as f64);
    let mut mean = vec![F::zero(); frr_grid.len()];
    for curve in curves {
        for (acc, far) in mean.iter_mut().zip(curve.sample_on_grid(frr_grid)) {
            *acc = *acc + far;
        }
    }
    let points = frr_grid
        .iter()
        .zip(mean)
        .map(|(&frr, sum)| DetPoint {
            threshold: F::nan(),
            frr,
            far: sum / n,
        })
        .collect();
    Ok(DetCurve { points, tag: None })
}

/// How band envelopes are formed across the sampled curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BandMethod {
    /// Pointwise minimum/maximum over all curves (default).
    MinMax,
    /// Pointwise percentiles over all curves, e.g. 10-90.
    Percentile { lower: f64, upper: f64 },
}

impl Default for BandMethod {
    fn default() -> Self {
        BandMethod::MinMax
    }
}

/// Mean curve of one impact bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketCurve<F> {
    /// Bucket center (an attack-impact value).
    pub bucket: F,
    pub far: Vec<F>,
    pub n_curves: usize,
}

/// Envelope of a family of DET curves on a common FRR grid, with per-bucket
/// mean curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand<F> {
    pub frr_grid: Vec<F>,
    pub lower: Vec<F>,
    pub upper: Vec<F>,
    pub buckets: Vec<BucketCurve<F>>,
}

impl<F: Real> ConfidenceBand<F> {
    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    /// Pointwise containment of a curve sampled on the band's grid.
    pub fn contains(&self, far_on_grid: &[F], slack: F) -> bool {
        if self.lower.len() != far_on_grid.len() {
            return false;
        }
        far_on_grid
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&far, (&lo, &hi))| far >= lo - slack && far <= hi + slack)
    }
}

/// Default impact buckets {0, 0.05, ..., 1}.
pub fn impact_buckets_default<F: Real>() -> Vec<F> {
    (0..=20).map(|i| real::<F>(i as f64 * 0.05)).collect()
}

/// Default FRR grid: 200 log-spaced points in [1e-3, 0.5] plus the 0.02
/// operating point.
pub fn frr_grid_default<F: Real>() -> Vec<F> {
    let mut grid: Vec<f64> = (1..199)
        .map(|i| {
            let t = i as f64 / 199.0;
            10f64.powf(-3.0 + t * (0.5f64.log10() + 3.0))
        })
        .collect();
    grid.push(1e-3);
    grid.push(0.5);
    grid.push(0.02);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    grid.into_iter().map(real::<F>).collect()
}

/// Group tagged curves by nearest impact bucket, average vertically per
/// bucket, and form band envelopes across the curve family.
///
/// Curves without an impact tag are ignored; empty buckets are dropped.
pub fn impact_bands<F: Real>(
    tagged_curves: &[DetCurve<F>],
    bucket_values: &[F],
    frr_grid: &[F],
    method: BandMethod,
) -> ConfidenceBand<F> {
    let mut sampled: Vec<(usize, Vec<F>)> = Vec::new(); // (bucket index, far on grid)
    for curve in tagged_curves {
        let impact = match &curve.tag {
            Some(tag) => tag.impact,
            None => continue,
        };
        if bucket_values.is_empty() {
            continue;
        }
        let mut best = 0usize;
        let mut best_dist = F::infinity();
        for (b, &value) in bucket_values.iter().enumerate() {
            let dist = (impact - value).abs();
            if dist < best_dist {
                best_dist = dist;
                best = b;
            }
        }
        sampled.push((best, curve.sample_on_grid(frr_grid)));
    }

    if sampled.is_empty() {
        return ConfidenceBand {
            frr_grid: frr_grid.to_vec(),
            lower: Vec::new(),
            upper: Vec::new(),
            buckets: Vec::new(),
        };
    }

    let mut buckets = Vec::new();
    for (b, &value) in bucket_values.iter().enumerate() {
        let members: Vec<&Vec<F>> = sampled
            .iter()
            .filter(|(bi, _)| *bi == b)
            .map(|(_, far)| far)
            .collect();
        if members.is_empty() {
            continue;
        }
        let n = real::<F>(members.len() as f64);
        let mut mean = vec![F::zero(); frr_grid.len()];
        for far in &members {
            for (acc, &v) in mean.iter_mut().zip(far.iter()) {
                *acc = *acc + v;
            }
        }
        for acc in &mut mean {
            *acc = *acc / n;
        }
        buckets.push(BucketCurve {
            bucket: value,
            far: mean,
            n_curves: members.len(),
        });
    }

    let (lower, upper) = match method {
        BandMethod::MinMax => {
            let mut lower = vec![F::infinity(); frr_grid.len()];
            let mut upper = vec![F::neg_infinity(); frr_grid.len()];
            for (_, far) in &sampled {
                for ((lo, hi), &v) in lower.iter_mut().zip(upper.iter_mut()).zip(far.iter()) {
                    *lo = lo.min(v);
                    *hi = hi.max(v);
                }
            }
            (lower, upper)
        }
        BandMethod::Percentile { lower: pl, upper: pu } => {
            let mut lower = Vec::with_capacity(frr_grid.len());
            let mut upper = Vec::with_capacity(frr_grid.len());
            for g in 0..frr_grid.len() {
                let mut column: Vec<F> = sampled.iter().map(|(_, far)| far[g]).collect();
                column.sort_by(|a, b| a.partial_cmp(b).expect("finite far"));
                lower.push(percentile(&column, pl));
                upper.push(percentile(&column, pu));
            }
            (lower, upper)
        }
    };

    ConfidenceBand {
        frr_grid: frr_grid.to_vec(),
        lower,
        upper,
        buckets,
    }
}

/// Nearest-rank percentile of a sorted slice, `p` in [0, 100].
fn percentile<F: Real>(sorted: &[F], p: f64) -> F {
    debug_assert!(!sorted.is_empty());
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}
