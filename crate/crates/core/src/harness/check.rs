//! Self-check suite: prox identities, projection equivalences, estimator/SPP
//! agreement and aggregator oracles.

use rand::Rng;
use serde::Serialize;

use crate::aggregators::{
    coordinate_median, geometric_median, sample_mean, GeoMedianSettings, SampleBatch,
};
use crate::estimators::{estimator_update, EstimatorConfig, EstimatorState};
use crate::linalg::{dist2, norm2, norm_inf};
use crate::prox::{self, spp_step, DistanceKind};
use crate::rng::{stream_rng, StreamRng};

const SEED: u64 = 0x5eed;
const TUPLES: usize = 1000;
const IDENTITY_TOL: f64 = 1e-12;
const GEO_TOL: f64 = 1e-4;

pub type ClipFn = fn(f64, &[f64]) -> Vec<f64>;
type ProjectFn = fn(&[f64], f64, &[f64]) -> Vec<f64>;

/// Clip primitives the suite is run against. Swappable so that the suite
/// itself can be mutation-tested.
#[derive(Clone, Copy)]
pub struct Primitives {
    pub vclip: ClipFn,
    pub cclip: ClipFn,
}

impl Default for Primitives {
    fn default() -> Self {
        Self {
            vclip: prox::vclip,
            cclip: prox::cclip,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub results: Vec<CheckResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.name == name)
    }
}

pub fn run_check_suite() -> CheckReport {
    run_check_suite_with(&Primitives::default())
}

pub fn run_check_suite_with(p: &Primitives) -> CheckReport {
    let results = vec![
        clip_bounds(p),
        moreau_projection(p),
        spp_projection(),
        estimator_spp_agreement(),
        huber_interpolation(),
        geometric_median_oracle(),
        coordinate_median_oracle(),
        breakdown(),
    ];
    CheckReport { results }
}

fn scale_of(v: &[f64]) -> f64 {
    norm_inf(v).max(1.0)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

struct Tuple {
    m: Vec<f64>,
    g: Vec<f64>,
    tau: f64,
    mu: f64,
}

/// Random `(m, g, τ, μ)` with mixed scales so both clip branches are hit.
fn tuples() -> Vec<Tuple> {
    let mut rng = stream_rng(SEED, 0);
    (0..TUPLES)
        .map(|_| {
            let d = rng.random_range(1..=6);
            let spread = 10f64.powf(rng.random_range(-2.0..2.0));
            let vec = |rng: &mut StreamRng| -> Vec<f64> {
                (0..d)
                    .map(|_| spread * rng.random_range(-1.0..1.0))
                    .collect()
            };
            let m = vec(&mut rng);
            let g = vec(&mut rng);
            let tau = 10f64.powf(rng.random_range(-2.0..1.0));
            let mu = 10f64.powf(rng.random_range(-1.0..1.0));
            Tuple { m, g, tau, mu }
        })
        .collect()
}

fn verdict(name: &'static str, failures: usize, total: usize, worst: f64) -> CheckResult {
    CheckResult {
        name,
        passed: failures == 0,
        detail: format!("{failures}/{total} failures, worst deviation {worst:e}"),
    }
}

fn clip_bounds(p: &Primitives) -> CheckResult {
    let mut failures = 0;
    let mut worst = 0.0f64;
    for t in tuples() {
        let v: Vec<f64> = t.g.iter().zip(&t.m).map(|(a, b)| a - b).collect();
        let vc = (p.vclip)(t.tau, &v);
        let cc = (p.cclip)(t.tau, &v);
        let over = (norm2(&vc) - t.tau).max(norm_inf(&cc) - t.tau).max(0.0);
        // inside the ball the clip must be the identity
        let inside = if norm2(&v) <= t.tau {
            max_abs_diff(&vc, &v)
        } else {
            0.0
        };
        let dev = over.max(inside) / scale_of(&v);
        worst = worst.max(dev);
        if dev > IDENTITY_TOL {
            failures += 1;
        }
    }
    verdict("clip_bounds", failures, TUPLES, worst)
}

/// Brute projection of `x` onto `{y : ‖y − c‖₂ ≤ r}`.
fn project_l2_ball(c: &[f64], r: f64, x: &[f64]) -> Vec<f64> {
    let d = dist2(x, c);
    if d <= r {
        return x.to_vec();
    }
    c.iter()
        .zip(x)
        .map(|(ci, xi)| ci + (xi - ci) * r / d)
        .collect()
}

/// Brute projection onto the box `{y : |y_i − c_i| ≤ r}`.
fn project_box(c: &[f64], r: f64, x: &[f64]) -> Vec<f64> {
    c.iter()
        .zip(x)
        .map(|(ci, xi)| xi.clamp(ci - r, ci + r))
        .collect()
}

/// `g + prox(m − g)` assembled from the clip primitives via the Moreau
/// decomposition, compared against a direct projection of `g` onto the dual
/// ball around `m`.
fn moreau_projection(p: &Primitives) -> CheckResult {
    let mut failures = 0;
    let mut worst = 0.0f64;
    for t in tuples() {
        let diff: Vec<f64> = t.m.iter().zip(&t.g).map(|(a, b)| a - b).collect();
        let cases: [(ClipFn, ProjectFn); 2] = [(p.vclip, project_l2_ball), (p.cclip, project_box)];
        for (clip, project) in cases {
            let clipped = clip(t.tau, &diff);
            let assembled: Vec<f64> =
                t.g.iter()
                    .zip(&diff)
                    .zip(&clipped)
                    .map(|((g, d), c)| g + (d - c))
                    .collect();
            let oracle = project(&t.m, t.tau, &t.g);
            let dev = max_abs_diff(&assembled, &oracle) / scale_of(&t.m).max(scale_of(&t.g));
            worst = worst.max(dev);
            if dev > IDENTITY_TOL {
                failures += 1;
            }
        }
    }
    verdict("moreau_projection", failures, 2 * TUPLES, worst)
}

fn spp_projection() -> CheckResult {
    let mut failures = 0;
    let mut worst = 0.0f64;
    for t in tuples() {
        let s = scale_of(&t.m).max(scale_of(&t.g));
        let l2 = spp_step(DistanceKind::L2, t.tau, &t.m, &t.g).expect("same dim");
        let l1 = spp_step(DistanceKind::L1, t.tau, &t.m, &t.g).expect("same dim");
        let dev = (max_abs_diff(&l2, &project_l2_ball(&t.m, t.tau, &t.g)) / s)
            .max(max_abs_diff(&l1, &project_box(&t.m, t.tau, &t.g)) / s);
        worst = worst.max(dev);
        if dev > IDENTITY_TOL {
            failures += 1;
        }
    }
    verdict("spp_projection", failures, TUPLES, worst)
}

fn estimator_spp_agreement() -> CheckResult {
    let mut failures = 0;
    let mut worst = 0.0f64;
    for t in tuples() {
        let s = scale_of(&t.m).max(scale_of(&t.g));
        let configs = [
            EstimatorConfig::momentum(t.tau),
            EstimatorConfig::vclip(t.tau),
            EstimatorConfig::cclip(t.tau),
            EstimatorConfig::huber(t.tau, t.mu),
        ];
        for cfg in configs {
            let kind = cfg.method.distance(t.mu).expect("SPP method");
            let state = EstimatorState {
                m: t.m.clone(),
                t: 0,
            };
            let est = estimator_update(&cfg, &state, &t.g).expect("valid config");
            let spp = spp_step(kind, t.tau, &t.m, &t.g).expect("same dim");
            let dev = max_abs_diff(&est.m, &spp) / s;
            worst = worst.max(dev);
            if dev > IDENTITY_TOL {
                failures += 1;
            }
        }
    }
    verdict("estimator_spp_agreement", failures, 4 * TUPLES, worst)
}

fn huber_interpolation() -> CheckResult {
    let mut failures = 0;
    let mut worst = 0.0f64;
    for t in tuples() {
        let s = scale_of(&t.m).max(scale_of(&t.g));
        let huber =
            spp_step(DistanceKind::Huber { mu: t.mu }, t.tau, &t.m, &t.g).expect("same dim");
        let reference = if dist2(&t.m, &t.g) <= t.mu * (1.0 + t.tau) {
            spp_step(DistanceKind::HalfSquaredL2, t.tau, &t.m, &t.g)
        } else {
            spp_step(DistanceKind::L2, t.mu * t.tau, &t.m, &t.g)
        }
        .expect("same dim");
        let dev = max_abs_diff(&huber, &reference) / s;
        worst = worst.max(dev);
        if dev > IDENTITY_TOL {
            failures += 1;
        }
    }
    verdict("huber_interpolation", failures, TUPLES, worst)
}

fn objective(points: &[Vec<f64>], x: f64, y: f64) -> f64 {
    points.iter().map(|p| (p[0] - x).hypot(p[1] - y)).sum()
}

/// Brute-force geometric median of 2-D points: exhaustive grid search over
/// the bounding box, then repeated zoom on the best cell.
pub fn grid_geometric_median(points: &[Vec<f64>]) -> Vec<f64> {
    assert!(
        points.iter().all(|p| p.len() == 2),
        "grid oracle is 2-D only"
    );
    const CELLS: usize = 40;
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in points {
        lo_x = lo_x.min(p[0]);
        hi_x = hi_x.max(p[0]);
        lo_y = lo_y.min(p[1]);
        hi_y = hi_y.max(p[1]);
    }
    let mut best = ((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0);
    let mut hx = (hi_x - lo_x).max(1e-12) / CELLS as f64;
    let mut hy = (hi_y - lo_y).max(1e-12) / CELLS as f64;
    let (mut x0, mut y0) = (lo_x, lo_y);
    while hx.max(hy) > 1e-11 {
        let mut best_f = f64::INFINITY;
        for i in 0..=CELLS {
            for j in 0..=CELLS {
                let (x, y) = (x0 + i as f64 * hx, y0 + j as f64 * hy);
                let f = objective(points, x, y);
                if f < best_f {
                    best_f = f;
                    best = (x, y);
                }
            }
        }
        // zoom to ±4 cells around the best node
        x0 = best.0 - 4.0 * hx;
        y0 = best.1 - 4.0 * hy;
        hx *= 8.0 / CELLS as f64;
        hy *= 8.0 / CELLS as f64;
    }
    vec![best.0, best.1]
}

fn geometric_median_oracle() -> CheckResult {
    let mut rng = stream_rng(SEED, 1);
    let mut failures = 0;
    let mut worst = 0.0f64;
    let batches = 20;
    for _ in 0..batches {
        let pts: Vec<Vec<f64>> = (0..5)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let oracle = grid_geometric_median(&pts);
        let batch = SampleBatch::new(pts).expect("valid batch");
        let gm = geometric_median(&batch, &GeoMedianSettings::default());
        let dev = max_abs_diff(&gm.point, &oracle);
        worst = worst.max(dev);
        if dev > GEO_TOL {
            failures += 1;
        }
    }
    verdict("geometric_median_oracle", failures, batches, worst)
}

fn coordinate_median_oracle() -> CheckResult {
    let mut rng = stream_rng(SEED, 2);
    let mut failures = 0;
    let mut worst = 0.0f64;
    let batches = 1000;
    for _ in 0..batches {
        let n = rng.random_range(1..=12);
        let d = rng.random_range(1..=4);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let oracle: Vec<f64> = (0..d)
            .map(|k| {
                let mut col: Vec<f64> = pts.iter().map(|p| p[k]).collect();
                col.sort_by(f64::total_cmp);
                if n % 2 == 1 {
                    col[n / 2]
                } else {
                    (col[n / 2 - 1] + col[n / 2]) / 2.0
                }
            })
            .collect();
        let got = coordinate_median(&SampleBatch::new(pts).expect("valid batch"));
        let dev = max_abs_diff(&got, &oracle);
        worst = worst.max(dev);
        if dev != 0.0 {
            failures += 1;
        }
    }
    verdict("coordinate_median_oracle", failures, batches, worst)
}

fn breakdown() -> CheckResult {
    let clean = vec![
        vec![0.3, -0.2],
        vec![-0.5, 0.1],
        vec![0.2, 0.4],
        vec![-0.1, -0.6],
        vec![0.6, 0.0],
    ];
    let mut dirty = clean.clone();
    dirty[2] = vec![1e6, -1e6];
    let range = (0..2)
        .map(|k| {
            let col = clean.iter().map(|p| p[k]);
            col.clone().fold(f64::NEG_INFINITY, f64::max) - col.fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let clean_b = SampleBatch::new(clean).expect("valid batch");
    let dirty_b = SampleBatch::new(dirty).expect("valid batch");
    let median_shift = max_abs_diff(&coordinate_median(&clean_b), &coordinate_median(&dirty_b));
    let mean_shift = max_abs_diff(&sample_mean(&clean_b), &sample_mean(&dirty_b));
    CheckResult {
        name: "breakdown",
        passed: median_shift < range && mean_shift > 1e5,
        detail: format!(
            "median moved {median_shift:e} (range {range:e}), mean moved {mean_shift:e}"
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_build_passes() {
        let report = run_check_suite();
        for r in &report.results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    fn doubled_vclip(tau: f64, v: &[f64]) -> Vec<f64> {
        prox::vclip(tau, v).into_iter().map(|x| 2.0 * x).collect()
    }

    #[test]
    fn mutated_vclip_is_caught() {
        let report = run_check_suite_with(&Primitives {
            vclip: doubled_vclip,
            ..Default::default()
        });
        assert!(!report.passed());
        assert!(!report.get("moreau_projection").unwrap().passed);
    }

    #[test]
    fn grid_oracle_on_symmetric_points() {
        let pts = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let m = grid_geometric_median(&pts);
        assert!(m[0].abs() < 1e-6 && m[1].abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn report_serializes() {
        let json = serde_json::to_string(&run_check_suite()).unwrap();
        assert!(json.contains("\"geometric_median_oracle\""));
    }
}
