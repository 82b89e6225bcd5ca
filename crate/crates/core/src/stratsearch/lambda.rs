//! Certified points of Λ, the distance-bound scan and the distinct-basis census.

use serde::{Deserialize, Serialize};

use super::lm::{fd_jacobian, levenberg_marquardt, LmOptions};
use crate::bloch::{angle, trace_distance, QubitProjector};
use crate::error::{QpvError, Result};
use crate::hmc::{lambda_residual, lambda_residual_terms, lemma1_bound, IsometricChannel, LAMBDA_CERT_THRESHOLD};
use crate::matkernel::C64;
use crate::random::{derive_seed, random_bloch, random_unit_vector, rng_from_seed};

/// Default trace-distance radius for merging projectors in the census.
pub const CENSUS_CLUSTER_TOL: f64 = 1e-4;

/// A pair is flagged when `‖v - w‖` falls below the bound by more than this.
pub const LEMMA1_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub c: [f64; 3],
    #[serde(with = "crate::io::complex_vec")]
    pub w: Vec<C64>,
    /// Squared residual of the Λ system at `(c, w)`.
    pub residual: f64,
    pub channel_fingerprint: u64,
}

impl LambdaPoint {
    pub fn projector(&self) -> QubitProjector {
        QubitProjector::from_bloch(self.c).expect("certified points have |c| ≈ 1")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSearchConfig {
    pub attempts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

fn default_max_iters() -> usize {
    200
}

fn default_fd_step() -> f64 {
    1e-6
}

impl LambdaSearchConfig {
    pub fn new(attempts: usize, seed: u64) -> Self {
        Self {
            attempts,
            seed,
            max_iters: default_max_iters(),
            fd_step: default_fd_step(),
        }
    }
}

fn split(x: &[f64]) -> ([f64; 3], Vec<C64>) {
    let c = [x[0], x[1], x[2]];
    let w = x[3..].chunks(2).map(|p| C64::new(p[0], p[1])).collect();
    (c, w)
}

pub fn find_lambda_pairs(channel: &IsometricChannel, attempts: usize, seed: u64) -> Vec<LambdaPoint> {
    find_lambda_pairs_with(channel, &LambdaSearchConfig::new(attempts, seed))
}

/// Minimizes the Λ residual from random starts and keeps only points whose
/// freshly recomputed residual is below the certification threshold.
pub fn find_lambda_pairs_with(channel: &IsometricChannel, config: &LambdaSearchConfig) -> Vec<LambdaPoint> {
    let n = channel.shape().w_dim;
    let residual = |x: &[f64]| {
        let (c, w) = split(x);
        lambda_residual_terms(channel, c, &w).unwrap_or_else(|_| vec![f64::INFINITY])
    };
    let jacobian = |x: &[f64], r: &[f64]| fd_jacobian(&residual, x, r, config.fd_step);
    let opts = LmOptions {
        max_iters: config.max_iters,
        cost_tol: LAMBDA_CERT_THRESHOLD * 1e-8,
        rel_tol: 0.0,
    };
    let fingerprint = channel.fingerprint();
    let mut out = Vec::new();
    for attempt in 0..config.attempts {
        let mut rng = rng_from_seed(derive_seed(config.seed, attempt as u64));
        let mut x0: Vec<f64> = random_bloch(&mut rng).to_vec();
        x0.extend(random_unit_vector(&mut rng, n).iter().flat_map(|z| [z.re, z.im]));
        let result = levenberg_marquardt(x0, &residual, &jacobian, &opts);
        let (c, w) = split(&result.x);
        if let Ok(res) = lambda_residual(channel, c, &w) {
            if res < LAMBDA_CERT_THRESHOLD {
                out.push(LambdaPoint {
                    c,
                    w,
                    residual: res,
                    channel_fingerprint: fingerprint,
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Entry {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
    pub distance: f64,
    pub bound: f64,
    /// `‖v - w‖ - bound`.
    pub margin: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub entries: Vec<Lemma1Entry>,
    pub violations: usize,
    pub min_margin: Option<f64>,
}

/// Compares `‖v - w‖` against `lemma1_bound(θ)` for every unordered pair.
pub fn lemma1_scan(points: &[LambdaPoint]) -> Result<Lemma1Report> {
    if let Some(first) = points.first() {
        if points
            .iter()
            .any(|p| p.channel_fingerprint != first.channel_fingerprint)
        {
            return Err(QpvError::MixedChannels);
        }
    }
    let projectors: Vec<QubitProjector> = points.iter().map(LambdaPoint::projector).collect();
    let mut entries = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let theta = angle(&projectors[i], &projectors[j]);
            let distance = points[i]
                .w
                .iter()
                .zip(&points[j].w)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let bound = lemma1_bound(theta)?;
            entries.push(Lemma1Entry {
                i,
                j,
                theta,
                distance,
                bound,
                margin: distance - bound,
                violation: distance < bound - LEMMA1_SLACK,
            });
        }
    }
    Ok(Lemma1Report {
        violations: entries.iter().filter(|e| e.violation).count(),
        min_margin: entries.iter().map(|e| e.margin).reduce(f64::min),
        entries,
    })
}

/// Number of distinct projectors among the points, merging those within
/// `cluster_tol` in trace distance of an earlier representative.
pub fn distinct_basis_census(points: &[LambdaPoint], cluster_tol: f64) -> usize {
    let mut reps: Vec<QubitProjector> = Vec::new();
    for p in points.iter().map(LambdaPoint::projector) {
        if !reps.iter().any(|r| trace_distance(r, &p) < cluster_tol) {
            reps.push(p);
        }
    }
    reps.len()
}

/// Like [`distinct_basis_census`] but treats `P` and `I - P` as the same
/// two-outcome measurement.
pub fn distinct_measurement_census(points: &[LambdaPoint], cluster_tol: f64) -> usize {
    let mut reps: Vec<QubitProjector> = Vec::new();
    for p in points.iter().map(LambdaPoint::projector) {
        let q = p.complement();
        if !reps
            .iter()
            .any(|r| trace_distance(r, &p) < cluster_tol || trace_distance(r, &q) < cluster_tol)
        {
            reps.push(p);
        }
    }
    reps.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmc::component_bound;
    use crate::qpvsim::{bb84_restricted_channel, bb84_restricted_points};

    #[test]
    fn copy_channel_finds_both_z_projectors() {
        let ch = IsometricChannel::qubit_copy();
        let pts = find_lambda_pairs(&ch, 40, 0);
        assert!(!pts.is_empty());
        for p in &pts {
            assert!(p.c[0].abs() < 1e-6 && p.c[1].abs() < 1e-6, "{p:?}");
            assert!(lambda_residual(&ch, p.c, &p.w).unwrap() < LAMBDA_CERT_THRESHOLD);
        }
        assert_eq!(distinct_basis_census(&pts, CENSUS_CLUSTER_TOL), 2);
        assert_eq!(distinct_measurement_census(&pts, CENSUS_CLUSTER_TOL), 1);
        assert!(lemma1_scan(&pts).unwrap().violations == 0);
    }

    #[test]
    fn deterministic_given_seed() {
        let ch = IsometricChannel::qubit_copy();
        assert_eq!(find_lambda_pairs(&ch, 5, 7), find_lambda_pairs(&ch, 5, 7));
    }

    #[test]
    fn bb84_channel_census() {
        let ch = bb84_restricted_channel();
        let pts = find_lambda_pairs(&ch, 30, 1);
        let census = distinct_basis_census(&pts, CENSUS_CLUSTER_TOL);
        assert!(census as u128 <= component_bound(2).unwrap());
        // ±Z and ±X: two measurements, four projectors.
        assert_eq!(census, 4);
        assert_eq!(distinct_measurement_census(&pts, CENSUS_CLUSTER_TOL), 2);
        let report = lemma1_scan(&pts).unwrap();
        assert_eq!(report.violations, 0);
        // The planted pair sits at θ = π/4 with ‖v - w‖ = √2.
        let planted: Vec<LambdaPoint> = bb84_restricted_points()
            .into_iter()
            .map(|(c, w)| LambdaPoint {
                residual: lambda_residual(&ch, c, &w).unwrap(),
                c,
                w,
                channel_fingerprint: ch.fingerprint(),
            })
            .collect();
        let r = lemma1_scan(&planted).unwrap();
        assert!((r.entries[0].theta - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!(r.entries[0].margin >= -1e-6);
        assert_eq!(distinct_basis_census(&planted, CENSUS_CLUSTER_TOL), 2);
    }

    #[test]
    fn scan_edge_cases() {
        assert_eq!(lemma1_scan(&[]).unwrap().entries.len(), 0);
        let a = LambdaPoint {
            c: [0.0, 0.0, 1.0],
            w: vec![C64::new(1.0, 0.0)],
            residual: 0.0,
            channel_fingerprint: 1,
        };
        let mut b = a.clone();
        b.w = vec![C64::new(0.0, 1.0)];
        let r = lemma1_scan(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(r.entries[0].bound, 0.0);
        assert!(!r.entries[0].violation);
        b.channel_fingerprint = 2;
        assert!(matches!(lemma1_scan(&[a, b]), Err(QpvError::MixedChannels)));
    }
}
