//! Coupled epidemic/opinion update and trajectory simulation.
//!
//! Node `i` carries an infected fraction `x_i` and an opinion `z_i`, both in
//! `[0, 1]`. A higher opinion means the community takes the epidemic more
//! seriously, which raises its recovery rate and lowers the infection rates
//! it is exposed to. Opinions follow polar dynamics with stubborn positives
//! and are pulled towards the local infection level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, Matrix};
use crate::network::ModelParams;
use crate::scalar::Scalar;

/// Distance outside the unit box tolerated before a run is declared diverged.
pub const DRIFT_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledState<T> {
    pub x: Vec<T>,
    pub z: Vec<T>,
    pub k: u64,
}

impl<T: Scalar> CoupledState<T> {
    pub fn new(x: Vec<T>, z: Vec<T>) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::Dimension {
                what: "opinion vector".into(),
                expected: x.len(),
                found: z.len(),
            });
        }
        check_box("x", &x)?;
        check_box("z", &z)?;
        Ok(Self { x, z, k: 0 })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            x: vec![T::zero(); n],
            z: vec![T::zero(); n],
            k: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Infinity-norm distance over the joint `(x, z)` vector.
    pub fn distance(&self, other: &Self) -> T {
        max_abs_diff(&self.x, &other.x).max(max_abs_diff(&self.z, &other.z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Horizon,
    Converged,
    DivergedGuard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<T> {
    pub horizon: usize,
    pub conv_tol: T,
    pub record_every: usize,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            horizon: 10_000,
            conv_tol: T::tol(1e-10),
            record_every: 1,
        }
    }
}

impl<T: Scalar> SimConfig<T> {
    pub fn with_horizon(horizon: usize) -> Self {
        Self {
            horizon,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub states: Vec<CoupledState<T>>,
    pub params_digest: String,
    pub stop_reason: StopReason,
}

impl<T: Scalar> Trajectory<T> {
    pub fn last(&self) -> &CoupledState<T> {
        self.states.last().expect("trajectory is never empty")
    }
}

pub(crate) fn check_box<T: Scalar>(what: &'static str, v: &[T]) -> Result<()> {
    match v.iter().position(|&a| !(a >= T::zero() && a <= T::one())) {
        Some(i) => Err(Error::OutOfBox {
            what,
            index: i,
            value: v[i].as_f64(),
        }),
        None => Ok(()),
    }
}

fn check_inputs<T: Scalar>(x: &[T], z: &[T], p: &ModelParams<T>) -> Result<()> {
    for (what, v) in [("x", x), ("z", z)] {
        if v.len() != p.n() {
            return Err(Error::Dimension {
                what: what.into(),
                expected: p.n(),
                found: v.len(),
            });
        }
    }
    check_box("x", x)?;
    check_box("z", z)
}

/// Opinion-dependent recovery rates `δ_min + (δ_i − δ_min) z_i`.
pub fn effective_recovery<T: Scalar>(z: &[T], p: &ModelParams<T>) -> Vec<T> {
    let dm = p.delta_min();
    p.delta()
        .iter()
        .zip(z)
        .map(|(&d, &zi)| dm + (d - dm) * zi)
        .collect()
}

/// Opinion-dependent infection matrix with entries `β_ij − (β_ij − β_min,ij) z_i`.
pub fn effective_infection<T: Scalar>(z: &[T], p: &ModelParams<T>) -> Matrix<T> {
    let (b, bm) = (p.b(), p.b_min());
    Matrix::from_fn(p.n(), p.n(), |i, j| {
        b[(i, j)] - (b[(i, j)] - bm[(i, j)]) * z[i]
    })
}

#[inline]
pub(crate) fn epidemic_node<T: Scalar>(i: usize, x: &[T], z: &[T], p: &ModelParams<T>) -> T {
    let zi = z[i];
    let d = p.delta_min() + (p.delta()[i] - p.delta_min()) * zi;
    let s: T = p
        .infection_in(i)
        .iter()
        .map(|&(j, b, bm)| (b - (b - bm) * zi) * x[j])
        .sum();
    // convex combination of (1 - d) and s
    x[i] * (T::one() - d) + (T::one() - x[i]) * s
}

/// Polar opinion term `z_i + (1 − z_i) Σ_{j≠i} w_ij (z_j − z_i)`.
#[inline]
fn polar_node<T: Scalar>(i: usize, z: &[T], p: &ModelParams<T>) -> T {
    let zi = z[i];
    let pull: T = p.social_in(i).iter().map(|&(j, w)| w * (z[j] - zi)).sum();
    zi + (T::one() - zi) * pull
}

#[inline]
pub(crate) fn opinion_node<T: Scalar>(i: usize, x: &[T], z: &[T], p: &ModelParams<T>) -> T {
    let th = p.theta()[i];
    th * x[i] + (T::one() - th) * polar_node(i, z, p)
}

/// One opinion update: each community blends its infection level (weight
/// `θ_i`) with its polar social update.
pub fn opinion_step<T: Scalar>(x: &[T], z: &[T], p: &ModelParams<T>) -> Result<Vec<T>> {
    check_inputs(x, z, p)?;
    Ok((0..p.n()).map(|i| opinion_node(i, x, z, p)).collect())
}

/// The same update written as `z_i + θ_i (x_i − z_i) + (1 − θ_i)(1 − z_i) Σ w_ij (z_j − z_i)`.
/// Kept as an independent cross-check of [`opinion_step`].
pub fn opinion_step_transformed<T: Scalar>(x: &[T], z: &[T], p: &ModelParams<T>) -> Result<Vec<T>> {
    check_inputs(x, z, p)?;
    Ok((0..p.n())
        .map(|i| {
            let (th, zi) = (p.theta()[i], z[i]);
            let pull: T = (0..p.n())
                .filter(|&j| j != i)
                .map(|j| p.w()[(i, j)] * (z[j] - zi))
                .sum();
            zi + th * (x[i] - zi) + (T::one() - th) * (T::one() - zi) * pull
        })
        .collect())
}

/// One epidemic update with opinion-modulated recovery and infection.
pub fn epidemic_step<T: Scalar>(x: &[T], z: &[T], p: &ModelParams<T>) -> Result<Vec<T>> {
    check_inputs(x, z, p)?;
    Ok((0..p.n()).map(|i| epidemic_node(i, x, z, p)).collect())
}

/// Unchecked simultaneous update of both layers into the output buffers.
pub(crate) fn step_into<T: Scalar>(
    x: &[T],
    z: &[T],
    p: &ModelParams<T>,
    x_out: &mut [T],
    z_out: &mut [T],
) {
    for i in 0..p.n() {
        x_out[i] = epidemic_node(i, x, z, p);
        z_out[i] = opinion_node(i, x, z, p);
    }
}

/// Both layers read the state at `k` and produce the state at `k + 1`.
pub fn coupled_step<T: Scalar>(
    state: &CoupledState<T>,
    p: &ModelParams<T>,
) -> Result<CoupledState<T>> {
    check_inputs(&state.x, &state.z, p)?;
    let n = p.n();
    let mut next = CoupledState {
        x: vec![T::zero(); n],
        z: vec![T::zero(); n],
        k: state.k + 1,
    };
    step_into(&state.x, &state.z, p, &mut next.x, &mut next.z);
    Ok(next)
}

/// The coupled map evaluated through its block-matrix form
/// `x⁺ = K̄ x`, `z⁺ = Θ x + (I − Θ)(W + Z L̄) z` with
/// `K̄ = I − Δ(z) + (I − X) B(z)`. Dense; used to cross-check [`coupled_step`].
pub fn coupled_step_block_form<T: Scalar>(
    state: &CoupledState<T>,
    p: &ModelParams<T>,
) -> Result<CoupledState<T>> {
    check_inputs(&state.x, &state.z, p)?;
    let n = p.n();
    let (x, z) = (&state.x, &state.z);
    let rec = effective_recovery(z, p);
    let inf = effective_infection(z, p);
    let kbar = Matrix::from_fn(n, n, |i, j| {
        let id = if i == j { T::one() - rec[i] } else { T::zero() };
        id + (T::one() - x[i]) * inf[(i, j)]
    });
    let zl = Matrix::from_diagonal(z).matmul(p.lbar());
    let social = p.w().add(&zl);
    let sz = social.mul_vec(z);
    let theta = p.theta();
    Ok(CoupledState {
        x: kbar.mul_vec(x),
        z: (0..n)
            .map(|i| theta[i] * x[i] + (T::one() - theta[i]) * sz[i])
            .collect(),
        k: state.k + 1,
    })
}

fn drifted<T: Scalar>(v: &[T]) -> bool {
    let g = T::lit(DRIFT_GUARD);
    v.iter().any(|&a| !(a >= -g && a <= T::one() + g))
}

/// Iterates the coupled map from `(x0, z0)` until the horizon or until the
/// joint step falls below `cfg.conv_tol`. States are recorded every
/// `cfg.record_every` steps; the first and last states are always kept.
pub fn simulate<T: Scalar>(
    p: &ModelParams<T>,
    x0: &[T],
    z0: &[T],
    cfg: &SimConfig<T>,
) -> Result<Trajectory<T>> {
    simulate_with(p, x0, z0, cfg, None)
}

pub(crate) fn simulate_with<T: Scalar>(
    p: &ModelParams<T>,
    x0: &[T],
    z0: &[T],
    cfg: &SimConfig<T>,
    input: Option<&[T]>,
) -> Result<Trajectory<T>> {
    if cfg.horizon == 0 {
        return Err(Error::precondition("horizon must be at least 1"));
    }
    if !(cfg.conv_tol > T::zero()) {
        return Err(Error::precondition("conv_tol must be positive"));
    }
    if cfg.record_every == 0 {
        return Err(Error::precondition("record_every must be at least 1"));
    }
    check_inputs(x0, z0, p)?;
    let n = p.n();
    let mut cur = CoupledState {
        x: x0.to_vec(),
        z: z0.to_vec(),
        k: 0,
    };
    let mut next = CoupledState::zeros(n);
    let mut states = vec![cur.clone()];
    let mut stop_reason = StopReason::Horizon;
    for step in 1..=cfg.horizon {
        step_into(&cur.x, &cur.z, p, &mut next.x, &mut next.z);
        if let Some(u) = input {
            for (zi, &ui) in next.z.iter_mut().zip(u) {
                *zi = *zi + ui;
            }
        }
        next.k = step as u64;
        if drifted(&next.x) || drifted(&next.z) {
            stop_reason = StopReason::DivergedGuard;
            break;
        }
        let converged = next.distance(&cur) < cfg.conv_tol;
        std::mem::swap(&mut cur, &mut next);
        if converged {
            stop_reason = StopReason::Converged;
            break;
        }
        if step % cfg.record_every == 0 {
            states.push(cur.clone());
        }
    }
    if states.last().map(|s| s.k) != Some(cur.k) {
        states.push(cur);
    }
    Ok(Trajectory {
        states,
        params_digest: p.digest(),
        stop_reason,
    })
}
