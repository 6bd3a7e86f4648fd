//! Spectral quantities of the model: the opinion-dependent reproduction
//! number, its extremes, the Jacobian of the coupled map and the verdict on
//! the healthy state.

use serde::{Deserialize, Serialize};

use crate::dynamics::{check_box, effective_infection, effective_recovery};
use crate::error::{Error, Result};
use crate::linalg::{norm_inf, Matrix};
use crate::network::ModelParams;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIterationOptions<T> {
    pub max_iter: usize,
    /// Stop once the normalised iterate moves less than this (and the
    /// certificate gap is already acceptable).
    pub step_tol: T,
    /// Required width of the Collatz–Wielandt bracket, relative to `max(1, ρ)`.
    pub certify_tol: T,
}

impl<T: Scalar> Default for PowerIterationOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 100_000,
            step_tol: T::tol(1e-12),
            certify_tol: T::tol(1e-9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult<T> {
    pub radius: T,
    /// Lower and upper Collatz–Wielandt bounds bracketing the radius.
    pub lower: T,
    pub upper: T,
    /// Dominant right eigenvector, scaled to unit infinity norm. Strictly
    /// positive when the matrix is irreducible.
    pub right_vector: Vec<T>,
    pub iterations: usize,
    /// `‖M v − ρ v‖_∞`.
    pub residual: T,
}

/// Spectral radius of a nonnegative square matrix.
pub fn spectral_radius<T: Scalar>(m: &Matrix<T>) -> Result<SpectralResult<T>> {
    spectral_radius_with(m, &PowerIterationOptions::default())
}

/// Power iteration on the shifted matrix `M + αI`, starting from the all-ones
/// vector. The shift keeps the iterate strictly positive and breaks the
/// periodicity of bipartite-like patterns. The radius is read off the
/// Collatz–Wielandt bracket `min_i (Mv)_i/v_i ≤ ρ ≤ max_i (Mv)_i/v_i` of the
/// unshifted matrix, and the call fails unless that bracket is narrower than
/// `certify_tol · max(1, ρ)`.
///
/// If the tiny default shift `1e-12·‖M‖_∞` does not certify within the
/// iteration budget, one retry is made with shift `‖M‖_∞`.
pub fn spectral_radius_with<T: Scalar>(
    m: &Matrix<T>,
    opts: &PowerIterationOptions<T>,
) -> Result<SpectralResult<T>> {
    if !m.is_square() {
        return Err(Error::Dimension {
            what: "matrix columns".into(),
            expected: m.rows(),
            found: m.cols(),
        });
    }
    if let Some((row, col, value)) = m.first_negative() {
        return Err(Error::NegativeEntry {
            row,
            col,
            value: value.as_f64(),
        });
    }
    let n = m.rows();
    let norm = m.norm_inf();
    if n == 0 || norm == T::zero() {
        return Ok(SpectralResult {
            radius: T::zero(),
            lower: T::zero(),
            upper: T::zero(),
            right_vector: vec![T::one(); n],
            iterations: 0,
            residual: T::zero(),
        });
    }
    let mut total = 0;
    let mut last_gap = T::infinity();
    for shift in [norm * T::lit(1e-12), norm] {
        match power_iterate(m, shift, opts) {
            Ok(mut r) => {
                r.iterations += total;
                return Ok(r);
            }
            Err((iters, gap)) => {
                total += iters;
                last_gap = gap;
            }
        }
    }
    Err(Error::NonConvergence {
        what: "power iteration",
        iterations: total,
        detail: format!(
            "Collatz-Wielandt gap stuck at {last_gap}; the matrix is likely reducible \
             (use a dense eigensolver)"
        ),
    })
}

fn cw_bounds<T: Scalar>(mv: &[T], v: &[T]) -> (T, T) {
    let mut lo = T::infinity();
    let mut hi = T::zero();
    for (&a, &b) in mv.iter().zip(v) {
        let r = if b > T::zero() {
            a / b
        } else if a > T::zero() {
            T::infinity()
        } else {
            T::zero()
        };
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

fn power_iterate<T: Scalar>(
    m: &Matrix<T>,
    shift: T,
    opts: &PowerIterationOptions<T>,
) -> std::result::Result<SpectralResult<T>, (usize, T)> {
    let mut v = vec![T::one(); m.rows()];
    let mut mv = m.mul_vec(&v);
    let mut gap = T::infinity();
    let tight = T::tol(1e-15);
    for it in 1..=opts.max_iter {
        let (lo, hi) = cw_bounds(&mv, &v);
        gap = hi - lo;
        let scale = T::one().max(hi);
        let certified = gap <= opts.certify_tol * scale;
        let mut w: Vec<T> = mv.iter().zip(&v).map(|(&a, &b)| a + shift * b).collect();
        let top = norm_inf(&w);
        if !(top > T::zero()) || !top.is_finite() {
            return Err((it, gap));
        }
        for wi in &mut w {
            *wi = *wi / top;
        }
        let step = w
            .iter()
            .zip(&v)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max);
        if gap <= tight * scale || (certified && step < opts.step_tol) {
            return Ok(finish(v, mv, lo, hi, it));
        }
        v = w;
        mv = m.mul_vec(&v);
    }
    let (lo, hi) = cw_bounds(&mv, &v);
    if hi - lo <= opts.certify_tol * T::one().max(hi) {
        return Ok(finish(v, mv, lo, hi, opts.max_iter));
    }
    Err((opts.max_iter, gap))
}

fn finish<T: Scalar>(v: Vec<T>, mv: Vec<T>, lo: T, hi: T, it: usize) -> SpectralResult<T> {
    let radius = if lo == hi {
        lo
    } else {
        (lo + hi) / T::lit(2.0)
    };
    let residual = mv
        .iter()
        .zip(&v)
        .map(|(&a, &b)| (a - radius * b).abs())
        .fold(T::zero(), T::max);
    SpectralResult {
        radius,
        lower: lo,
        upper: hi,
        right_vector: v,
        iterations: it,
        residual,
    }
}

/// `I − Δ(z) + B(z)`, the matrix whose spectral radius is the reproduction
/// number at opinion state `z`.
pub fn reproduction_matrix<T: Scalar>(z: &[T], p: &ModelParams<T>) -> Result<Matrix<T>> {
    if z.len() != p.n() {
        return Err(Error::Dimension {
            what: "z".into(),
            expected: p.n(),
            found: z.len(),
        });
    }
    check_box("z", z)?;
    let rec = effective_recovery(z, p);
    let mut m = effective_infection(z, p);
    for (i, r) in rec.into_iter().enumerate() {
        m[(i, i)] = m[(i, i)] + T::one() - r;
    }
    Ok(m)
}

/// Opinion-dependent reproduction number `ρ(I − Δ(z) + B(z))`.
pub fn reproduction_number<T: Scalar>(z: &[T], p: &ModelParams<T>) -> Result<T> {
    Ok(spectral_radius(&reproduction_matrix(z, p)?)?.radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Mild,
    Moderate,
    Severe,
}

impl Severity {
    /// Mild iff `r_max ≤ 1`, severe iff `r_min > 1`, moderate otherwise.
    pub fn classify<T: Scalar>(r_min: T, r_max: T) -> Self {
        if r_max <= T::one() {
            Severity::Mild
        } else if r_min > T::one() {
            Severity::Severe
        } else {
            Severity::Moderate
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Mild => "mild",
            Severity::Moderate => "moderate",
            Severity::Severe => "severe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReproductionExtremes<T> {
    /// Reproduction number when every community is maximally cautious (`z = 1`).
    pub r_min: T,
    /// Reproduction number when every community is complacent (`z = 0`).
    pub r_max: T,
    pub severity: Severity,
}

pub fn reproduction_extremes<T: Scalar>(p: &ModelParams<T>) -> Result<ReproductionExtremes<T>> {
    let n = p.n();
    let r_min = reproduction_number(&vec![T::one(); n], p)?;
    let r_max = reproduction_number(&vec![T::zero(); n], p)?;
    Ok(ReproductionExtremes {
        r_min,
        r_max,
        severity: Severity::classify(r_min, r_max),
    })
}

/// Jacobian of the coupled map, split into its four `n × n` blocks
/// (`∂x⁺/∂x`, `∂x⁺/∂z`, `∂z⁺/∂x`, `∂z⁺/∂z`).
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian<T> {
    pub j11: Matrix<T>,
    pub j12: Matrix<T>,
    pub j21: Matrix<T>,
    pub j22: Matrix<T>,
}

impl<T: Scalar> Jacobian<T> {
    pub fn assemble(&self) -> Matrix<T> {
        let n = self.j11.rows();
        Matrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => self.j11[(i, j)],
            (true, false) => self.j12[(i, j - n)],
            (false, true) => self.j21[(i - n, j)],
            (false, false) => self.j22[(i - n, j - n)],
        })
    }
}

/// Jacobian at `(x, z)`:
///
/// * `J11 = I − Δ(z) + (I − X) B(z) − diag(B(z) x)`
/// * `J12 = −diag((I − X)(B − B_min) x + (Δ − Δ_min) x)`
/// * `J21 = Θ`
/// * `J22 = (I − Θ)(W + Z L̄ + diag(L̄ z))`
pub fn jacobian<T: Scalar>(x: &[T], z: &[T], p: &ModelParams<T>) -> Result<Jacobian<T>> {
    let n = p.n();
    for (what, v) in [("x", x), ("z", z)] {
        if v.len() != n {
            return Err(Error::Dimension {
                what: what.into(),
                expected: n,
                found: v.len(),
            });
        }
        check_box(what, v)?;
    }
    let rec = effective_recovery(z, p);
    let inf = effective_infection(z, p);
    let inf_x = inf.mul_vec(x);
    let (b, bm) = (p.b(), p.b_min());
    let gap_x = b.sub(bm).mul_vec(x);
    let dm = p.delta_min();

    let j11 = Matrix::from_fn(n, n, |i, j| {
        let mut v = (T::one() - x[i]) * inf[(i, j)];
        if i == j {
            v = v + T::one() - rec[i] - inf_x[i];
        }
        v
    });
    let j12 = Matrix::from_diagonal(
        &(0..n)
            .map(|i| -((T::one() - x[i]) * gap_x[i] + (p.delta()[i] - dm) * x[i]))
            .collect::<Vec<_>>(),
    );
    let j21 = Matrix::from_diagonal(p.theta());
    let lz = p.lbar().mul_vec(z);
    let j22 = Matrix::from_fn(n, n, |i, j| {
        let th = T::one() - p.theta()[i];
        let mut v = p.w()[(i, j)] + z[i] * p.lbar()[(i, j)];
        if i == j {
            v = v + lz[i];
        }
        th * v
    });
    Ok(Jacobian { j11, j12, j21, j22 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HealthyStability {
    GloballyStable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HealthyVerdict<T> {
    pub verdict: HealthyStability,
    pub r_max: T,
    /// Spectral radius of the Jacobian at the origin. The Jacobian there is
    /// block lower-triangular, so this is the larger of the radii of
    /// `I − Δ_min + B` and `(I − Θ) W`.
    pub origin_jacobian_radius: T,
}

/// Healthy state `(0, 0)` is globally asymptotically stable iff `r_max ≤ 1`
/// and unstable otherwise.
pub fn healthy_verdict<T: Scalar>(p: &ModelParams<T>) -> Result<HealthyVerdict<T>> {
    let n = p.n();
    let zeros = vec![T::zero(); n];
    let jac = jacobian(&zeros, &zeros, p)?;
    let r_max = spectral_radius(&jac.j11)?.radius;
    let r_social = spectral_radius(&jac.j22)?.radius;
    Ok(HealthyVerdict {
        verdict: if r_max <= T::one() {
            HealthyStability::GloballyStable
        } else {
            HealthyStability::Unstable
        },
        r_max,
        origin_jacobian_radius: r_max.max(r_social),
    })
}
