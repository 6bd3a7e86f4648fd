//! Seeded generators of valid parameter sets: small random instances for
//! property checks, and 46-node small-world instances tuned to each severity
//! regime.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::Matrix;
use crate::network::{
    generate_watts_strogatz, scale_base_matrices, DirectedWeightedNetwork, EpidemicRates,
    ModelParams, ScaleFactors,
};
use crate::spectral::Severity;

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Sampling ranges for [`random_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomProfile {
    /// Probability of each directed edge beyond the guaranteeing ring.
    pub extra_edge_prob: f64,
    /// Target row sum of `B` per node.
    pub infection_row_sum: (f64, f64),
    /// Entrywise ratio `B_min / B`.
    pub min_rate_ratio: (f64, f64),
    pub delta_min: (f64, f64),
    /// `δ_i − δ_min`, capped so that `δ_i < 1`.
    pub delta_spread: (f64, f64),
    pub theta: (f64, f64),
}

impl Default for RandomProfile {
    fn default() -> Self {
        Self {
            extra_edge_prob: 0.15,
            infection_row_sum: (0.05, 1.0),
            min_rate_ratio: (0.05, 1.0),
            delta_min: (0.02, 0.6),
            delta_spread: (0.0, 0.5),
            theta: (0.05, 0.95),
        }
    }
}

impl RandomProfile {
    /// Tilted towards `r_min > 1`: strong infection that opinions barely damp
    /// and slow recovery.
    pub fn severe() -> Self {
        Self {
            infection_row_sum: (0.6, 1.0),
            min_rate_ratio: (0.7, 1.0),
            delta_min: (0.02, 0.1),
            delta_spread: (0.0, 0.1),
            ..Self::default()
        }
    }

    /// Tilted towards `r_max > 1`.
    pub fn unstable() -> Self {
        Self {
            infection_row_sum: (0.4, 1.0),
            delta_min: (0.02, 0.2),
            ..Self::default()
        }
    }
}

/// Random nonnegative matrix on a directed ring plus extra edges, each row
/// rescaled to a sampled sum. Row `i` always has the entry `(i, i − 1)`.
fn ring_matrix(rng: &mut impl Rng, n: usize, extra: f64, self_loops: bool) -> Matrix<f64> {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        m[(i, prev)] = uniform(rng, (0.1, 1.0));
        for j in 0..n {
            if j != i && j != prev && rng.random_bool(extra) {
                m[(i, j)] = uniform(rng, (0.1, 1.0));
            }
        }
        if self_loops {
            m[(i, i)] = uniform(rng, (0.1, 1.0));
        }
    }
    m
}

fn scale_rows(m: &mut Matrix<f64>, sums: &[f64]) {
    let current = m.row_sums();
    for i in 0..m.rows() {
        let f = sums[i] / current[i];
        for j in 0..m.cols() {
            m[(i, j)] *= f;
        }
    }
}

/// A random instance satisfying every modelling assumption (`n ≥ 2`).
pub fn random_params(rng: &mut impl Rng, n: usize, profile: &RandomProfile) -> ModelParams<f64> {
    assert!(n >= 2, "random instances need at least two nodes");
    let mut b = ring_matrix(rng, n, profile.extra_edge_prob, false);
    let sums: Vec<f64> = (0..n)
        .map(|_| uniform(rng, profile.infection_row_sum))
        .collect();
    scale_rows(&mut b, &sums);
    let b_min = Matrix::from_fn(n, n, |i, j| {
        if b[(i, j)] > 0.0 {
            b[(i, j)] * uniform(rng, profile.min_rate_ratio).max(1e-3)
        } else {
            0.0
        }
    });
    let delta_min = uniform(rng, profile.delta_min);
    let delta = (0..n)
        .map(|_| {
            (delta_min + uniform(rng, profile.delta_spread))
                .min(0.99)
                .max(delta_min)
        })
        .collect();
    let mut w = ring_matrix(rng, n, profile.extra_edge_prob, true);
    scale_rows(&mut w, &vec![1.0; n]);
    let theta = (0..n).map(|_| uniform(rng, profile.theta)).collect();
    let rates = EpidemicRates {
        b,
        b_min,
        delta,
        delta_min,
    };
    ModelParams::validated(rates, w, theta).expect("generator emits valid instances")
}

/// Small-world layout shared by the regime instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallWorld {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub seed: u64,
}

impl Default for SmallWorld {
    fn default() -> Self {
        Self {
            n: 46,
            k: 4,
            p: 0.1,
            seed: 7,
        }
    }
}

impl SmallWorld {
    /// Seed of the social layer, derived from the physical one.
    pub fn social_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    fn rate_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }
}

/// Unscaled data of a regime instance: base infection matrix `B̄` with row
/// sums in `[0.56, 0.68]`, base recovery `Δ̄` in `[0.14, 0.16]`, coupling
/// weights `θ` in `[0.2, 0.4]` and the social weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseData {
    pub b_bar: Matrix<f64>,
    pub delta_bar: Vec<f64>,
    pub w: Matrix<f64>,
    pub theta: Vec<f64>,
}

/// Row-stochastic weights giving each node and its neighbours equal say.
pub fn closed_neighbourhood_weights(net: &DirectedWeightedNetwork<f64>) -> Matrix<f64> {
    let n = net.n();
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        w[(i, i)] = 1.0;
    }
    for e in net.edges() {
        w[(e.dst, e.src)] = 1.0;
    }
    let sums = vec![1.0; n];
    scale_rows(&mut w, &sums);
    w
}

pub fn base_data(layout: &SmallWorld) -> Result<BaseData> {
    let physical = generate_watts_strogatz::<f64>(layout.n, layout.k, layout.p, layout.seed)?;
    let social =
        generate_watts_strogatz::<f64>(layout.n, layout.k, layout.p, layout.social_seed())?;
    let mut rng = ChaCha8Rng::seed_from_u64(layout.rate_seed());
    let n = layout.n;
    let mut b_bar = Matrix::zeros(n, n);
    for e in physical.edges() {
        b_bar[(e.dst, e.src)] = uniform(&mut rng, (0.5, 1.5));
    }
    let sums: Vec<f64> = (0..n).map(|_| uniform(&mut rng, (0.56, 0.68))).collect();
    scale_rows(&mut b_bar, &sums);
    let delta_bar = (0..n).map(|_| uniform(&mut rng, (0.14, 0.16))).collect();
    let theta = (0..n).map(|_| uniform(&mut rng, (0.2, 0.4))).collect();
    Ok(BaseData {
        b_bar,
        delta_bar,
        w: closed_neighbourhood_weights(&social),
        theta,
    })
}

/// Scale factors placing a [`BaseData`] instance in the requested regime.
///
/// With `B̄` row sums in `[0.56, 0.68]` and `Δ̄` in `[0.14, 0.16]`, row-sum
/// bounds on the spectral radius give `r_max ∈ [0.972, 0.99]` for mild,
/// `r_min ∈ [1.064, 1.132]` for severe, and `r_min ≤ 0.928 < 1.014 ≤ r_max`
/// for moderate.
pub fn regime_factors(severity: Severity) -> ScaleFactors<f64> {
    let (b, b_min, delta, delta_min) = match severity {
        Severity::Mild => (0.15, 0.1, 1.0, 0.8),
        Severity::Moderate => (0.2, 0.1, 1.0, 0.7),
        Severity::Severe => (0.8, 0.4, 1.0, 0.5),
    };
    ScaleFactors {
        b,
        b_min,
        delta,
        delta_min,
    }
}

/// Validated small-world instance in the requested severity regime.
pub fn regime_params(layout: &SmallWorld, severity: Severity) -> Result<ModelParams<f64>> {
    let base = base_data(layout)?;
    let rates = scale_base_matrices(&base.b_bar, &base.delta_bar, regime_factors(severity))?;
    ModelParams::validated(rates, base.w, base.theta)
}
