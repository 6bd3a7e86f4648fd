//! Equilibria of the coupled map: residuals, an endemic solver, the
//! consensus defect, sufficient stability conditions and a Lyapunov monitor.

use serde::{Deserialize, Serialize};

use crate::dynamics::{check_box, epidemic_node, opinion_node, step_into, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Matrix};
use crate::network::ModelParams;
use crate::scalar::Scalar;
use crate::spectral::spectral_radius;

/// Largest residual for which a record counts as an equilibrium.
pub const ACCEPT_RESIDUAL: f64 = 1e-10;
/// `‖x*‖_∞` below this is reported as the healthy state.
pub const HEALTHY_CUTOFF: f64 = 1e-8;
/// Margin applied to the strict opinion-spread inequalities.
pub const SPREAD_MARGIN: f64 = 1e-12;
/// Slack allowed when checking that the Lyapunov value does not increase.
pub const LYAPUNOV_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumClass {
    Healthy,
    Endemic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord<T> {
    pub x_star: Vec<T>,
    pub z_star: Vec<T>,
    pub class: EquilibriumClass,
    /// `z*` is constant across nodes within `1e-9`.
    pub consensus: bool,
    pub residual_x: T,
    pub residual_z: T,
    /// `Σ_j β_ij x*_j ≤ x*_i` at every node.
    pub infection_bound: bool,
    /// `−2 w_ii − θ_i/(1−θ_i) < [L̄ z*]_i < θ_i/(1−θ_i)` at every node.
    pub opinion_spread_bound: bool,
    pub solver_iterations: usize,
    /// Damping factor in use when the solver stopped.
    pub damping: T,
}

impl<T: Scalar> EquilibriumRecord<T> {
    /// Builds a record for `(x, z)` with every flag evaluated against `p`.
    pub fn evaluate(
        x: Vec<T>,
        z: Vec<T>,
        p: &ModelParams<T>,
        iterations: usize,
        damping: T,
    ) -> Result<Self> {
        let (residual_x, residual_z) = residuals(&x, &z, p)?;
        let class = if norm_inf(&x) < T::lit(HEALTHY_CUTOFF) {
            EquilibriumClass::Healthy
        } else {
            EquilibriumClass::Endemic
        };
        let (lo, hi) = z
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(l, h), &v| {
                (l.min(v), h.max(v))
            });
        Ok(Self {
            consensus: z.is_empty() || hi - lo <= T::tol(1e-9),
            infection_bound: infection_bound(&x, p),
            opinion_spread_bound: opinion_spread_bound(&z, p),
            x_star: x,
            z_star: z,
            class,
            residual_x,
            residual_z,
            solver_iterations: iterations,
            damping,
        })
    }

    pub fn accepted(&self) -> bool {
        let tol = T::tol(ACCEPT_RESIDUAL);
        self.residual_x <= tol && self.residual_z <= tol
    }
}

fn check_pair<T: Scalar>(x: &[T], z: &[T], p: &ModelParams<T>) -> Result<()> {
    for (what, v) in [("x", x), ("z", z)] {
        if v.len() != p.n() {
            return Err(Error::Dimension {
                what: what.into(),
                expected: p.n(),
                found: v.len(),
            });
        }
        check_box(what, v)?;
    }
    Ok(())
}

/// One-step fixed-point gaps `(‖x − f_x(x, z)‖_∞, ‖z − f_z(x, z)‖_∞)` of the
/// epidemic and opinion updates. They vanish exactly on the equilibria.
pub fn residuals<T: Scalar>(x: &[T], z: &[T], p: &ModelParams<T>) -> Result<(T, T)> {
    check_pair(x, z, p)?;
    let mut rx = T::zero();
    let mut rz = T::zero();
    for i in 0..p.n() {
        rx = rx.max((x[i] - epidemic_node(i, x, z, p)).abs());
        rz = rz.max((z[i] - opinion_node(i, x, z, p)).abs());
    }
    Ok((rx, rz))
}

/// `Σ_j β_ij x_j ≤ x_i` for every node.
pub fn infection_bound<T: Scalar>(x: &[T], p: &ModelParams<T>) -> bool {
    (0..p.n()).all(|i| {
        let s: T = p.infection_in(i).iter().map(|&(j, b, _)| b * x[j]).sum();
        s <= x[i]
    })
}

/// `−2 w_ii − θ_i/(1−θ_i) < [L̄ z]_i < θ_i/(1−θ_i)` for every node, with a
/// `1e-12` margin on both sides. Nodes with `θ_i = 1` always pass.
pub fn opinion_spread_bound<T: Scalar>(z: &[T], p: &ModelParams<T>) -> bool {
    let lz = p.lbar().mul_vec(z);
    let m = T::lit(SPREAD_MARGIN);
    (0..p.n()).all(|i| {
        let th = p.theta()[i];
        if th >= T::one() {
            return true;
        }
        let r = th / (T::one() - th);
        let lower = -T::lit(2.0) * p.w()[(i, i)] - r;
        lz[i] > lower + m && lz[i] < r - m
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    /// Stop when the joint step `‖s_{k+1} − s_k‖_∞` falls below this.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::tol(1e-12),
            max_iter: 1_000_000,
        }
    }
}

/// Consecutive direction reversals that trigger damping.
const OSCILLATION_RUN: usize = 10;

/// Iterates the coupled map from `init` (default `x = z = 0.5·1`) until the
/// joint step drops below `opts.tol`. Starts undamped and switches to
/// `λ = 0.5` once ten consecutive steps reverse direction.
///
/// Returns a healthy record when the iteration collapses onto `x = 0`. The
/// equilibrium found depends on the start when several exist.
pub fn solve_endemic<T: Scalar>(
    p: &ModelParams<T>,
    init: Option<(&[T], &[T])>,
    opts: &SolveOptions<T>,
) -> Result<EquilibriumRecord<T>> {
    let n = p.n();
    let half = vec![T::lit(0.5); n];
    let (x0, z0) = init.unwrap_or((&half, &half));
    check_pair(x0, z0, p)?;
    if x0.iter().all(|&v| v == T::zero()) {
        return Err(Error::precondition(
            "endemic search needs a start with x != 0 (the healthy state is always fixed)",
        ));
    }
    if !(opts.tol > T::zero()) {
        return Err(Error::precondition("tol must be positive"));
    }
    let mut x = x0.to_vec();
    let mut z = z0.to_vec();
    let mut fx = vec![T::zero(); n];
    let mut fz = vec![T::zero(); n];
    let mut prev_dir: Vec<T> = Vec::new();
    let mut dir = vec![T::zero(); 2 * n];
    let mut lambda = T::one();
    let mut reversals = 0;
    let mut last_step = T::infinity();
    for it in 1..=opts.max_iter {
        step_into(&x, &z, p, &mut fx, &mut fz);
        let mut step = T::zero();
        for i in 0..n {
            let dx = lambda * (fx[i] - x[i]);
            let dz = lambda * (fz[i] - z[i]);
            dir[i] = dx;
            dir[n + i] = dz;
            x[i] = x[i] + dx;
            z[i] = z[i] + dz;
            step = step.max(dx.abs()).max(dz.abs());
        }
        last_step = step;
        if step < opts.tol {
            return EquilibriumRecord::evaluate(x, z, p, it, lambda);
        }
        if lambda == T::one() && !prev_dir.is_empty() {
            if dot(&dir, &prev_dir) < T::zero() {
                reversals += 1;
                if reversals >= OSCILLATION_RUN {
                    lambda = T::lit(0.5);
                }
            } else {
                reversals = 0;
            }
        }
        prev_dir.clone_from(&dir);
    }
    Err(Error::NonConvergence {
        what: "endemic solver",
        iterations: opts.max_iter,
        detail: format!(
            "last joint step {last_step} (damping {lambda}); the orbit may oscillate or \
             approach the healthy state sublinearly"
        ),
    })
}

/// Per-node defect `δ_min + (δ_i − δ_min) a − (1 − a) Σ_j (β_ij − (β_ij − β_min,ij) a)`.
/// A consensus endemic equilibrium at `z* = a·1` needs every defect to vanish.
pub fn consensus_condition<T: Scalar>(p: &ModelParams<T>, a: T) -> Result<Vec<T>> {
    if !(a > T::zero() && a <= T::one()) {
        return Err(Error::precondition(format!("a = {a} must lie in (0, 1]")));
    }
    let dm = p.delta_min();
    Ok((0..p.n())
        .map(|i| {
            let s: T = p
                .infection_in(i)
                .iter()
                .map(|&(_, b, bm)| b - (b - bm) * a)
                .sum();
            dm + (p.delta()[i] - dm) * a - (T::one() - a) * s
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndemicStability {
    CertifiedStable,
    /// The sufficient conditions fail; stability is neither shown nor refuted.
    Unknown,
}

/// Certified stable iff both the infection bound and the opinion-spread bound
/// hold at the record, evaluated afresh against `p`.
pub fn endemic_stability_check<T: Scalar>(
    record: &EquilibriumRecord<T>,
    p: &ModelParams<T>,
) -> Result<EndemicStability> {
    if record.class != EquilibriumClass::Endemic {
        return Err(Error::precondition(
            "stability check needs an endemic record",
        ));
    }
    check_pair(&record.x_star, &record.z_star, p)?;
    Ok(
        if infection_bound(&record.x_star, p) && opinion_spread_bound(&record.z_star, p) {
            EndemicStability::CertifiedStable
        } else {
            EndemicStability::Unknown
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport<T> {
    /// `V(k) = v(k)ᵀ |x(k) − x*|` for every recorded state.
    pub values: Vec<T>,
    pub steps: usize,
    pub non_increasing_steps: usize,
    /// `non_increasing_steps / steps` (1 for a single-state trajectory).
    pub fraction: f64,
    /// Largest one-step increase `v(k)ᵀ|y(k+1)| − v(k)ᵀ|y(k)|` (zero if none).
    pub max_increase: T,
    pub final_value: T,
}

/// `I − H + B(z)` with `H = diag(Σ_j B(z)_ij x*_j / x*_i)`; by construction
/// `x*` is a right eigenvector for eigenvalue one.
fn lyapunov_matrix<T: Scalar>(x_star: &[T], z: &[T], p: &ModelParams<T>) -> Matrix<T> {
    let n = p.n();
    let mut f = Matrix::zeros(n, n);
    for i in 0..n {
        let zi = z[i];
        let mut h = T::zero();
        for &(j, b, bm) in p.infection_in(i) {
            let bij = b - (b - bm) * zi;
            f[(i, j)] = f[(i, j)] + bij;
            h = h + bij * x_star[j];
        }
        f[(i, i)] = f[(i, i)] + T::one() - h / x_star[i];
    }
    f
}

fn left_perron<T: Scalar>(f: &Matrix<T>) -> Result<Vec<T>> {
    let mut v = spectral_radius(&f.transpose())?.right_vector;
    let s: T = v.iter().copied().sum();
    for a in &mut v {
        *a = *a / s;
    }
    Ok(v)
}

/// Tracks `V(k) = v(k)ᵀ |x(k) − x*|` along a trajectory, where `v(k)` is the
/// normalised left Perron vector of `I − H + B(z(k))`. Step `k` counts as
/// non-increasing when `v(k)ᵀ|x(k+1) − x*| ≤ v(k)ᵀ|x(k) − x*| + 1e-12`, i.e. the
/// same weights are used on both sides.
///
/// The trajectory must come from `p` (checked by digest), be recorded at every
/// step and start with some infection, and the record must be an accepted
/// endemic equilibrium of `p` satisfying the infection bound.
pub fn lyapunov_certificate<T: Scalar>(
    trajectory: &Trajectory<T>,
    record: &EquilibriumRecord<T>,
    p: &ModelParams<T>,
) -> Result<LyapunovReport<T>> {
    if record.class != EquilibriumClass::Endemic {
        return Err(Error::precondition(
            "Lyapunov monitor needs an endemic record",
        ));
    }
    if trajectory.params_digest != p.digest() {
        return Err(Error::precondition(
            "trajectory was produced with different parameters",
        ));
    }
    check_pair(&record.x_star, &record.z_star, p)?;
    let (rx, rz) = residuals(&record.x_star, &record.z_star, p)?;
    let tol = T::tol(ACCEPT_RESIDUAL);
    if rx > tol || rz > tol {
        return Err(Error::precondition(format!(
            "record is not an equilibrium of these parameters (residuals {rx}, {rz})"
        )));
    }
    if record.x_star.iter().any(|&v| v <= T::zero()) {
        return Err(Error::precondition(
            "endemic record must be strictly positive",
        ));
    }
    if !infection_bound(&record.x_star, p) {
        return Err(Error::precondition("record violates the infection bound"));
    }
    let states = &trajectory.states;
    if states[0].x.iter().all(|&v| v == T::zero()) {
        return Err(Error::precondition("trajectory starts disease-free"));
    }
    if states.windows(2).any(|w| w[1].k != w[0].k + 1) {
        return Err(Error::precondition(
            "trajectory must be recorded at every step",
        ));
    }
    let xs = &record.x_star;
    let gap = |x: &[T]| -> Vec<T> { x.iter().zip(xs).map(|(&a, &b)| (a - b).abs()).collect() };
    let mut values = Vec::with_capacity(states.len());
    let mut ok = 0;
    let mut max_increase = T::zero();
    for (k, s) in states.iter().enumerate() {
        let v = left_perron(&lyapunov_matrix(xs, &s.z, p))?;
        let now = dot(&v, &gap(&s.x));
        values.push(now);
        if let Some(next) = states.get(k + 1) {
            let later = dot(&v, &gap(&next.x));
            max_increase = max_increase.max(later - now);
            if later <= now + T::lit(LYAPUNOV_SLACK) {
                ok += 1;
            }
        }
    }
    let steps = states.len() - 1;
    Ok(LyapunovReport {
        final_value: *values.last().expect("non-empty"),
        values,
        steps,
        non_increasing_steps: ok,
        max_increase,
        fraction: if steps == 0 {
            1.0
        } else {
            ok as f64 / steps as f64
        },
    })
}

/// `‖coupled_map(x, z) − (x, z)‖_∞`; zero at equilibria.
pub fn fixed_point_gap<T: Scalar>(record: &EquilibriumRecord<T>, p: &ModelParams<T>) -> Result<T> {
    let (rx, rz) = residuals(&record.x_star, &record.z_star, p)?;
    Ok(rx.max(rz))
}
