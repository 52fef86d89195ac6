//! Multi-sample aggregation: sample mean and ℓ1/ℓ2 sample medians.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::linalg::{dist2, norm2};

/// `n ≥ 1` points of a common dimension `d ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    points: Vec<Vec<f64>>,
}

impl SampleBatch {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyBatch)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoMedianSettings {
    /// Stop once `‖y⁺ - y‖ / max(1, ‖y⁺‖)` falls to this value.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for GeoMedianSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iters: 1000,
        }
    }
}

impl GeoMedianSettings {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("tolerance", self.tolerance)?;
        if self.max_iters == 0 {
            return Err(Error::ZeroIterations);
        }
        Ok(())
    }
}

/// Result of the iterative ℓ2-median solver.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoMedian {
    pub point: Vec<f64>,
    /// Last relative step size; zero when an exact optimality certificate
    /// was hit.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn sample_mean(batch: &SampleBatch) -> Vec<f64> {
    let n = batch.len() as f64;
    let mut out = vec![0.0; batch.dim()];
    for p in batch.points() {
        out.iter_mut().zip(p).for_each(|(o, x)| *o += x);
    }
    out.iter_mut().for_each(|o| *o /= n);
    out
}

/// One-dimensional sample median; the midpoint of the two central order
/// statistics when `values.len()` is even. Reorders `values`.
pub fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    assert!(n > 0, "median of an empty slice");
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().max_by(f64::total_cmp).expect("n ≥ 2");
        0.5 * (lower_max + upper)
    }
}

pub fn coordinate_median(batch: &SampleBatch) -> Vec<f64> {
    let mut column = vec![0.0; batch.len()];
    (0..batch.dim())
        .map(|i| {
            column
                .iter_mut()
                .zip(batch.points())
                .for_each(|(c, p)| *c = p[i]);
            median_in_place(&mut column)
        })
        .collect()
}

/// ℓ2 (geometric) median by Weiszfeld's iteration with the Vardi–Zhang
/// modification at data points.
///
/// Starts from the coordinatewise median. When the iterate sits on `k` data
/// points, the plain Weiszfeld map is undefined; the modified map blends the
/// Weiszfeld target of the remaining points with the current iterate using
/// weight `min(1, k / ‖R̃‖)`, where `R̃` is the sum of unit vectors to the
/// other points. `‖R̃‖ ≤ k` certifies optimality.
///
/// Non-convergence within `max_iters` is not an error: the last iterate is
/// returned with `converged = false` and its residual.
pub fn geometric_median(batch: &SampleBatch, settings: &GeoMedianSettings) -> GeoMedian {
    let dim = batch.dim();
    let mut y = coordinate_median(batch);
    if batch.len() == 1 {
        return GeoMedian {
            point: y,
            residual: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut residual = f64::INFINITY;
    let mut weighted = vec![0.0; dim];
    let mut pull = vec![0.0; dim];
    for iter in 1..=settings.max_iters {
        weighted.iter_mut().for_each(|x| *x = 0.0);
        pull.iter_mut().for_each(|x| *x = 0.0);
        let mut weight_sum = 0.0;
        let mut coincident = 0usize;
        for p in batch.points() {
            let d = dist2(p, &y);
            if d == 0.0 {
                coincident += 1;
                continue;
            }
            let w = 1.0 / d;
            weight_sum += w;
            for j in 0..dim {
                weighted[j] += w * p[j];
                pull[j] += w * (p[j] - y[j]);
            }
        }
        if weight_sum == 0.0 {
            // every point coincides with y
            return GeoMedian {
                point: y,
                residual: 0.0,
                iterations: iter,
                converged: true,
            };
        }
        let next: Vec<f64> = if coincident == 0 {
            weighted.iter().map(|x| x / weight_sum).collect()
        } else {
            let r = norm2(&pull);
            let k = coincident as f64;
            if r <= k {
                return GeoMedian {
                    point: y,
                    residual: 0.0,
                    iterations: iter,
                    converged: true,
                };
            }
            let gamma = k / r;
            weighted
                .iter()
                .zip(&y)
                .map(|(t, yi)| (1.0 - gamma) * t / weight_sum + gamma * yi)
                .collect()
        };
        residual = dist2(&next, &y) / norm2(&next).max(1.0);
        y = next;
        // Weiszfeld approaches an optimal data point only sublinearly, so
        // test the nearest one directly.
        if coincident == 0 {
            let nearest = batch
                .points()
                .iter()
                .min_by(|a, b| dist2(a, &y).total_cmp(&dist2(b, &y)))
                .expect("non-empty batch");
            if is_optimal_data_point(batch, nearest) {
                return GeoMedian {
                    point: nearest.clone(),
                    residual: 0.0,
                    iterations: iter,
                    converged: true,
                };
            }
        }
        if residual <= settings.tolerance {
            return GeoMedian {
                point: y,
                residual,
                iterations: iter,
                converged: true,
            };
        }
    }
    GeoMedian {
        point: y,
        residual,
        iterations: settings.max_iters,
        converged: false,
    }
}

/// `‖Σ_{zᵢ≠z} (zᵢ − z)/‖zᵢ − z‖‖ ≤ #{zᵢ = z}`: the subgradient optimality
/// condition at a data point.
fn is_optimal_data_point(batch: &SampleBatch, z: &[f64]) -> bool {
    let mut pull = vec![0.0; z.len()];
    let mut coincident = 0usize;
    for p in batch.points() {
        let d = dist2(p, z);
        if d == 0.0 {
            coincident += 1;
            continue;
        }
        for j in 0..z.len() {
            pull[j] += (p[j] - z[j]) / d;
        }
    }
    norm2(&pull) <= coincident as f64
}

/// Mean objective `(1/n) Σ ‖m - zᵢ‖₂` minimized by the geometric median.
pub fn geometric_objective(batch: &SampleBatch, m: &[f64]) -> f64 {
    batch.points().iter().map(|p| dist2(p, m)).sum::<f64>() / batch.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AggregatorKind {
    Mean,
    L1Median,
    L2Median,
}

impl AggregatorKind {
    pub const ALL: [AggregatorKind; 3] = [
        AggregatorKind::Mean,
        AggregatorKind::L1Median,
        AggregatorKind::L2Median,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregatorKind::Mean => "mean",
            AggregatorKind::L1Median => "l1-median",
            AggregatorKind::L2Median => "l2-median",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub point: Vec<f64>,
    /// Solver residual; zero for the closed-form aggregators.
    pub residual: f64,
}

pub fn aggregate(
    kind: AggregatorKind,
    batch: &SampleBatch,
    settings: &GeoMedianSettings,
) -> Aggregate {
    match kind {
        AggregatorKind::Mean => Aggregate {
            point: sample_mean(batch),
            residual: 0.0,
        },
        AggregatorKind::L1Median => Aggregate {
            point: coordinate_median(batch),
            residual: 0.0,
        },
        AggregatorKind::L2Median => {
            let gm = geometric_median(batch, settings);
            Aggregate {
                point: gm.point,
                residual: gm.residual,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::check::grid_geometric_median;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn batch(points: &[&[f64]]) -> SampleBatch {
        SampleBatch::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn batch_validation() {
        assert_eq!(SampleBatch::new(vec![]), Err(Error::EmptyBatch));
        assert_eq!(
            SampleBatch::new(vec![vec![1.0], vec![1.0, 2.0]]),
            Err(Error::DimensionMismatch {
                expected: 1,
                got: 2
            })
        );
        assert_eq!(SampleBatch::new(vec![vec![]]), Err(Error::ZeroDimension));
    }

    #[test]
    fn mean_examples() {
        assert_eq!(
            sample_mean(&batch(&[&[0.0, 0.0], &[2.0, 2.0]])),
            vec![1.0, 1.0]
        );
        assert_eq!(sample_mean(&batch(&[&[3.0, -1.5]])), vec![3.0, -1.5]);
        let cross = batch(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0], &[0.0, -1.0]]);
        assert_eq!(sample_mean(&cross), vec![0.0, 0.0]);
    }

    #[test]
    fn coordinate_median_examples() {
        assert_eq!(
            coordinate_median(&batch(&[&[1.0], &[2.0], &[100.0]])),
            vec![2.0]
        );
        assert_eq!(
            coordinate_median(&batch(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 5.0]])),
            vec![1.0, 1.0]
        );
        assert_eq!(
            coordinate_median(&batch(&[&[4.0], &[1.0], &[3.0], &[2.0]])),
            vec![2.5]
        );
    }

    #[test]
    fn geometric_median_examples() {
        let s = GeoMedianSettings::default();
        let gm = geometric_median(&batch(&[&[0.0], &[1.0], &[10.0]]), &s);
        assert_eq!(gm.point, vec![1.0]);
        assert!(gm.converged);

        let h = 3f64.sqrt() / 2.0;
        let tri = batch(&[&[0.0, 1.0], &[-h, -0.5], &[h, -0.5]]);
        let gm = geometric_median(&tri, &s);
        assert!(close(&gm.point, &[0.0, 0.0], 1e-8), "{:?}", gm.point);

        let single = geometric_median(&batch(&[&[2.0, 3.0]]), &s);
        assert_eq!(single.point, vec![2.0, 3.0]);
    }

    #[test]
    fn geometric_median_vardi_zhang_anchor() {
        // a heavy cluster on one data point: the median is that point
        let b = batch(&[
            &[0.0, 0.0],
            &[0.0, 0.0],
            &[0.0, 0.0],
            &[1.0, 0.0],
            &[0.0, 1.0],
        ]);
        let gm = geometric_median(&b, &GeoMedianSettings::default());
        assert_eq!(gm.point, vec![0.0, 0.0]);
        assert_eq!(gm.residual, 0.0);

        // start on a data point that is not the median: the modified step must leave it
        let b = batch(&[
            &[0.0, 0.0],
            &[10.0, 0.0],
            &[10.0, 1.0],
            &[10.0, -1.0],
            &[11.0, 0.0],
        ]);
        let gm = geometric_median(&b, &GeoMedianSettings::default());
        let oracle = grid_geometric_median(b.points());
        assert!(
            close(&gm.point, &oracle, 1e-4),
            "{:?} vs {oracle:?}",
            gm.point
        );
    }

    #[test]
    fn geometric_median_reports_non_convergence() {
        let b = batch(&[&[0.0, 0.0], &[3.0, 0.0], &[0.0, 4.0], &[7.0, 7.0]]);
        let gm = geometric_median(
            &b,
            &GeoMedianSettings {
                tolerance: 1e-300,
                max_iters: 3,
            },
        );
        assert!(!gm.converged);
        assert_eq!(gm.iterations, 3);
        assert!(gm.residual > 0.0 && gm.residual.is_finite());
    }

    #[test]
    fn matches_grid_oracle() {
        let mut rng = stream_rng(42, 0);
        for _ in 0..20 {
            let pts: Vec<Vec<f64>> = (0..5)
                .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let b = SampleBatch::new(pts.clone()).unwrap();
            let gm = geometric_median(&b, &GeoMedianSettings::default());
            let oracle = grid_geometric_median(&pts);
            assert!(
                close(&gm.point, &oracle, 1e-4),
                "{:?} vs {oracle:?}",
                gm.point
            );
        }
    }

    #[test]
    fn aggregate_outlier_example() {
        let s = GeoMedianSettings::default();
        let b = batch(&[&[0.0, 0.0], &[0.0, 0.0], &[1e6, 1e6]]);
        assert_eq!(
            aggregate(AggregatorKind::L1Median, &b, &s).point,
            vec![0.0, 0.0]
        );
        assert_eq!(
            aggregate(AggregatorKind::L2Median, &b, &s).point,
            vec![0.0, 0.0]
        );
        let mean = aggregate(AggregatorKind::Mean, &b, &s).point;
        assert!(close(&mean, &[1e6 / 3.0, 1e6 / 3.0], 1e-9));
        assert_eq!(
            aggregate(
                AggregatorKind::Mean,
                &batch(&[&[0.0, 0.0], &[2.0, 2.0]]),
                &s
            )
            .point,
            vec![1.0, 1.0]
        );
    }

    #[test]
    fn coordinate_median_is_not_rotation_equivariant() {
        let b = batch(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let (c, s) = (0.6f64, 0.8f64);
        let rot = |p: &[f64]| vec![c * p[0] - s * p[1], s * p[0] + c * p[1]];
        let rotated = SampleBatch::new(b.points().iter().map(|p| rot(p)).collect()).unwrap();
        let before = rot(&coordinate_median(&b));
        let after = coordinate_median(&rotated);
        assert!(dist2(&before, &after) > 0.1);
    }

    #[test]
    fn breakdown() {
        // n = 7: two outliers move the median by at most the clean range; the mean diverges
        let clean = [0.3, -1.2, 0.8, 2.0, -0.5, 1.1, 0.0];
        let base =
            coordinate_median(&SampleBatch::new(clean.iter().map(|x| vec![*x]).collect()).unwrap())
                [0];
        let range = 2.0 - (-1.2);
        for magnitude in [1e3, 1e6, 1e12] {
            let mut corrupted = clean;
            corrupted[0] = magnitude;
            corrupted[1] = magnitude;
            let b = SampleBatch::new(corrupted.iter().map(|x| vec![*x]).collect()).unwrap();
            assert!((coordinate_median(&b)[0] - base).abs() <= range);
            assert!(sample_mean(&b)[0] > magnitude / 7.0);
        }
    }

    fn points_strategy(
        n: std::ops::Range<usize>,
        d: usize,
    ) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), n)
    }

    proptest! {
        #[test]
        fn scalar_medians_agree(pts in points_strategy(1..12, 1)) {
            let b = SampleBatch::new(pts).unwrap();
            let gm = geometric_median(&b, &GeoMedianSettings::default());
            let cm = coordinate_median(&b);
            // for even n every point between the central pair is optimal;
            // compare objective values instead of points
            let obj_gm = geometric_objective(&b, &gm.point);
            let obj_cm = geometric_objective(&b, &cm);
            prop_assert!((obj_gm - obj_cm).abs() < 1e-8);
            if b.len() % 2 == 1 {
                prop_assert!((gm.point[0] - cm[0]).abs() < 1e-7);
            }
        }

        #[test]
        fn translation_equivariance(pts in points_strategy(1..9, 3),
                                    shift in prop::collection::vec(-50.0f64..50.0, 3)) {
            let b = SampleBatch::new(pts.clone()).unwrap();
            let moved = SampleBatch::new(
                pts.iter().map(|p| p.iter().zip(&shift).map(|(a, s)| a + s).collect()).collect(),
            ).unwrap();
            let s = GeoMedianSettings::default();
            for kind in AggregatorKind::ALL {
                let a = aggregate(kind, &b, &s).point;
                let m = aggregate(kind, &moved, &s).point;
                let expected: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
                if kind == AggregatorKind::L2Median {
                    // not unique for collinear configurations: compare objectives
                    let gap = geometric_objective(&moved, &m) - geometric_objective(&moved, &expected);
                    prop_assert!(gap.abs() < 1e-6, "{m:?} {expected:?}");
                } else {
                    prop_assert!(close(&m, &expected, 1e-9), "{kind:?} {m:?} {expected:?}");
                }
            }
        }

        #[test]
        fn rotation_equivariance(pts in points_strategy(3..8, 2), angle in 0.0..std::f64::consts::TAU) {
            let (c, s) = (angle.cos(), angle.sin());
            let rot = |p: &[f64]| vec![c * p[0] - s * p[1], s * p[0] + c * p[1]];
            let b = SampleBatch::new(pts.clone()).unwrap();
            let r = SampleBatch::new(pts.iter().map(|p| rot(p)).collect()).unwrap();
            let settings = GeoMedianSettings::default();
            let gb = geometric_median(&b, &settings);
            let gr = geometric_median(&r, &settings);
            // compare by objective: ties (collinear even configurations) are not unique.
            // An optimum just off a data point slows Weiszfeld down; such runs
            // report non-convergence and get a looser bound.
            let obj_rotated = geometric_objective(&r, &rot(&gb.point));
            let tol = if gb.converged && gr.converged { 1e-7 } else { 1e-5 };
            prop_assert!((obj_rotated - geometric_objective(&r, &gr.point)).abs() < tol);
        }

        #[test]
        fn geometric_median_is_optimal(pts in points_strategy(1..10, 3)) {
            let b = SampleBatch::new(pts).unwrap();
            let gm = geometric_median(&b, &GeoMedianSettings::default());
            let best = geometric_objective(&b, &gm.point);
            prop_assert!(best <= geometric_objective(&b, &sample_mean(&b)) + 1e-9);
            for p in b.points() {
                prop_assert!(best <= geometric_objective(&b, p) + 1e-9);
            }
        }

        #[test]
        fn coordinate_median_matches_sorting(pts in points_strategy(1..15, 2)) {
            let b = SampleBatch::new(pts.clone()).unwrap();
            let cm = coordinate_median(&b);
            for i in 0..2 {
                let mut col: Vec<f64> = pts.iter().map(|p| p[i]).collect();
                col.sort_by(f64::total_cmp);
                let n = col.len();
                let expected = if n % 2 == 1 { col[n / 2] } else { 0.5 * (col[n / 2 - 1] + col[n / 2]) };
                prop_assert_eq!(cm[i], expected);
            }
        }
    }
}
