//! Opinion interventions: the critical uniform opinion, the controlled map
//! `z⁺ = f_z(x, z) + C u`, a simulated opinion floor, a greedy budget
//! allocator and the severity-driven response plan.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{check_box, coupled_step, step_into, CoupledState};
use crate::equilibria::{solve_endemic, EquilibriumClass, EquilibriumRecord, SolveOptions};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::network::ModelParams;
use crate::scalar::Scalar;
use crate::spectral::{reproduction_extremes, reproduction_number, Severity};

/// Constant opinion input `C u` with `u ≥ 0` and `Σ u ≤ Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionModel<T> {
    c: Matrix<T>,
    budget: T,
    u: Vec<T>,
}

impl<T: Scalar> InterventionModel<T> {
    pub fn new(c: Matrix<T>, budget: T, u: Vec<T>) -> Result<Self> {
        if u.len() != c.cols() {
            return Err(Error::Dimension {
                what: "u".into(),
                expected: c.cols(),
                found: u.len(),
            });
        }
        if let Some((row, col, value)) = c.first_negative() {
            return Err(Error::NegativeEntry {
                row,
                col,
                value: value.as_f64(),
            });
        }
        if !(budget >= T::zero()) {
            return Err(Error::precondition(format!(
                "budget {budget} must be nonnegative"
            )));
        }
        if let Some(j) = u.iter().position(|&v| !(v >= T::zero())) {
            return Err(Error::precondition(format!(
                "u[{j}] = {} is negative",
                u[j]
            )));
        }
        let spent: T = u.iter().copied().sum();
        if spent > budget * (T::one() + T::tol(1e-12)) {
            return Err(Error::precondition(format!(
                "inputs total {spent} exceed budget {budget}"
            )));
        }
        Ok(Self { c, budget, u })
    }

    /// No input through `C`, budget zero.
    pub fn zero(c: Matrix<T>) -> Self {
        let m = c.cols();
        Self {
            c,
            budget: T::zero(),
            u: vec![T::zero(); m],
        }
    }

    pub fn c(&self) -> &Matrix<T> {
        &self.c
    }

    pub fn budget(&self) -> T {
        self.budget
    }

    pub fn u(&self) -> &[T] {
        &self.u
    }

    /// `C u`.
    pub fn input(&self) -> Vec<T> {
        self.c.mul_vec(&self.u)
    }
}

fn check_input_rows<T: Scalar>(iv: &InterventionModel<T>, p: &ModelParams<T>) -> Result<()> {
    if iv.c.rows() != p.n() {
        return Err(Error::Dimension {
            what: "C rows".into(),
            expected: p.n(),
            found: iv.c.rows(),
        });
    }
    Ok(())
}

/// Uniform opinion level `a*` with `R(a*·1) = 1`, found by bisection on
/// `[0, 1]`. Requires `r_min ≤ 1 ≤ r_max`; returns `0` when `r_max = 1`.
/// The result satisfies `|R(a*·1) − 1| < 1e-8`.
pub fn critical_uniform_opinion<T: Scalar>(p: &ModelParams<T>) -> Result<T> {
    let ex = reproduction_extremes(p)?;
    if ex.r_min > T::one() || ex.r_max < T::one() {
        return Err(Error::precondition(format!(
            "critical opinion needs r_min <= 1 <= r_max (got {}, {})",
            ex.r_min, ex.r_max
        )));
    }
    let n = p.n();
    let f = |a: T| -> Result<T> { Ok(reproduction_number(&vec![a; n], p)? - T::one()) };
    let ftol = T::tol(1e-8);
    if ex.r_max - T::one() < ftol {
        return Ok(T::zero());
    }
    let (mut lo, mut hi) = (T::zero(), T::one());
    let width = T::tol(1e-13);
    let two = T::lit(2.0);
    let mut mid = (lo + hi) / two;
    for _ in 0..200 {
        mid = (lo + hi) / two;
        let v = f(mid)?;
        if v == T::zero() {
            return Ok(mid);
        }
        if v > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= width {
            break;
        }
    }
    let v = f(mid)?;
    if v.abs() >= ftol {
        return Err(Error::NonConvergence {
            what: "critical opinion bisection",
            iterations: 200,
            detail: format!("|R - 1| = {} at a = {mid}", v.abs()),
        });
    }
    Ok(mid)
}

fn add_input<T: Scalar>(z: &mut [T], input: &[T]) -> Result<()> {
    for (i, (zi, &ci)) in z.iter_mut().zip(input).enumerate() {
        *zi = *zi + ci;
        if *zi > T::one() {
            return Err(Error::Saturation {
                node: i,
                value: zi.as_f64(),
            });
        }
    }
    Ok(())
}

/// One step of the controlled map: the epidemic update is unchanged and the
/// opinion update gains `C u`. Errors with [`Error::Saturation`] instead of
/// clamping when some `z_i` would exceed one.
pub fn controlled_step<T: Scalar>(
    state: &CoupledState<T>,
    p: &ModelParams<T>,
    iv: &InterventionModel<T>,
) -> Result<CoupledState<T>> {
    check_input_rows(iv, p)?;
    let mut next = coupled_step(state, p)?;
    add_input(&mut next.z, &iv.input())?;
    Ok(next)
}

/// How the opinion floor is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FloorProtocol {
    pub starts: usize,
    pub horizon: usize,
    /// First step included in the minimum.
    pub burn_in: usize,
    pub seed: u64,
}

impl FloorProtocol {
    pub fn new(starts: usize, horizon: usize, seed: u64) -> Self {
        Self {
            starts,
            horizon,
            burn_in: horizon / 2,
            seed,
        }
    }
}

impl Default for FloorProtocol {
    fn default() -> Self {
        Self::new(8, 5000, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorEstimate<T> {
    /// Componentwise minimum of `z(k)` over `k ∈ [burn_in, horizon]` and all
    /// starts. A simulation estimate, not a bound.
    pub floor: Vec<T>,
    pub protocol: FloorProtocol,
}

/// Estimates the opinion floor under constant input from `protocol.starts`
/// random disease-nonzero initial states drawn from a seeded generator.
///
/// Starts are drawn uniformly from `[0, 1 − max_i (C u)_i]` in both layers,
/// which keeps the first controlled step inside the box; saturation reported
/// later comes from the input itself rather than from the choice of start.
pub fn opinion_floor<T: Scalar>(
    p: &ModelParams<T>,
    iv: &InterventionModel<T>,
    protocol: &FloorProtocol,
) -> Result<FloorEstimate<T>> {
    check_input_rows(iv, p)?;
    let n = p.n();
    let cmax = iv
        .input()
        .into_iter()
        .fold(0.0, |a: f64, v| a.max(v.as_f64()));
    let span = (1.0 - cmax).max(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(protocol.seed);
    let starts: Vec<(Vec<T>, Vec<T>)> = (0..protocol.starts)
        .map(|_| {
            let mut x: Vec<T> = (0..n).map(|_| T::lit(span * rng.random::<f64>())).collect();
            let z: Vec<T> = (0..n).map(|_| T::lit(span * rng.random::<f64>())).collect();
            if x.iter().all(|&v| v == T::zero()) {
                x[0] = T::lit(0.5 * span.max(1e-3));
            }
            (x, z)
        })
        .collect();
    opinion_floor_from(p, iv, &starts, protocol)
}

/// [`opinion_floor`] from explicit initial states; `protocol.starts` and
/// `protocol.seed` are ignored.
pub fn opinion_floor_from<T: Scalar>(
    p: &ModelParams<T>,
    iv: &InterventionModel<T>,
    starts: &[(Vec<T>, Vec<T>)],
    protocol: &FloorProtocol,
) -> Result<FloorEstimate<T>> {
    check_input_rows(iv, p)?;
    if starts.is_empty() || protocol.horizon == 0 || protocol.burn_in > protocol.horizon {
        return Err(Error::precondition(
            "floor estimate needs at least one start and burn_in <= horizon >= 1",
        ));
    }
    let n = p.n();
    let input = iv.input();
    let settle = T::tol(1e-13);
    let mut floor = vec![T::infinity(); n];
    let mut nx = vec![T::zero(); n];
    let mut nz = vec![T::zero(); n];
    for (x0, z0) in starts {
        for (what, v) in [("x", x0), ("z", z0)] {
            if v.len() != n {
                return Err(Error::Dimension {
                    what: what.into(),
                    expected: n,
                    found: v.len(),
                });
            }
            check_box(what, v)?;
        }
        let (mut x, mut z) = (x0.clone(), z0.clone());
        if protocol.burn_in == 0 {
            merge_min(&mut floor, &z);
        }
        for k in 1..=protocol.horizon {
            step_into(&x, &z, p, &mut nx, &mut nz);
            add_input(&mut nz, &input)?;
            let moved = nx
                .iter()
                .zip(&x)
                .chain(nz.iter().zip(&z))
                .map(|(&a, &b)| (a - b).abs())
                .fold(T::zero(), T::max);
            std::mem::swap(&mut x, &mut nx);
            std::mem::swap(&mut z, &mut nz);
            if k >= protocol.burn_in || moved < settle {
                merge_min(&mut floor, &z);
            }
            // a fixed point stays put for the rest of the window
            if moved < settle {
                break;
            }
        }
    }
    Ok(FloorEstimate {
        floor,
        protocol: *protocol,
    })
}

fn merge_min<T: Scalar>(acc: &mut [T], z: &[T]) {
    for (a, &b) in acc.iter_mut().zip(z) {
        *a = a.min(b);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocateOptions {
    /// Number of greedy increments; each adds `Q / steps`.
    pub steps: usize,
    /// Reduced protocol used to score candidates.
    pub protocol: FloorProtocol,
}

impl Default for AllocateOptions {
    fn default() -> Self {
        Self {
            steps: 100,
            protocol: FloorProtocol::new(2, 400, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation<T> {
    pub u_star: Vec<T>,
    pub z_floor: Vec<T>,
    /// `z_floorᵀ z_floor`.
    pub objective: T,
    pub spent: T,
    /// Every remaining increment would push some opinion above one, so part
    /// of the budget is left unspent.
    pub saturated: bool,
}

/// Greedy stand-in for the budget allocation problem. Starting from `u = 0`
/// it repeatedly adds `Q / steps` to the input coordinate that most increases
/// the estimated `z_floorᵀ z_floor`, skipping increments that saturate. This
/// is a heuristic with no optimality guarantee.
pub fn allocate_budget<T: Scalar>(
    p: &ModelParams<T>,
    c: &Matrix<T>,
    budget: T,
    opts: &AllocateOptions,
) -> Result<Allocation<T>> {
    if !(budget >= T::zero()) {
        return Err(Error::precondition(format!(
            "budget {budget} must be nonnegative"
        )));
    }
    if opts.steps == 0 {
        return Err(Error::precondition("allocation needs at least one step"));
    }
    let m = c.cols();
    let eps = budget / T::lit(opts.steps as f64);
    let mut u = vec![T::zero(); m];
    let score = |u: &[T]| -> Result<(T, Vec<T>)> {
        let iv = InterventionModel::new(c.clone(), budget, u.to_vec())?;
        let f = opinion_floor(p, &iv, &opts.protocol)?.floor;
        Ok((dot(&f, &f), f))
    };
    let (mut objective, mut floor) = score(&u)?;
    let mut saturated = false;
    if budget > T::zero() {
        for _ in 0..opts.steps {
            let mut best: Option<(usize, T, Vec<T>)> = None;
            for j in 0..m {
                let mut cand = u.clone();
                cand[j] = cand[j] + eps;
                match score(&cand) {
                    Ok((obj, f)) => {
                        if best.as_ref().is_none_or(|(_, b, _)| obj > *b) {
                            best = Some((j, obj, f));
                        }
                    }
                    Err(Error::Saturation { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            match best {
                Some((j, obj, f)) => {
                    u[j] = u[j] + eps;
                    objective = obj;
                    floor = f;
                }
                None => {
                    saturated = true;
                    break;
                }
            }
        }
    }
    Ok(Allocation {
        spent: u.iter().copied().sum(),
        u_star: u,
        z_floor: floor,
        objective,
        saturated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    MildNull,
    SevereAdministrative,
    ModerateOpinion,
    ModerateAdministrative,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::MildNull => "mild-null",
            Branch::SevereAdministrative => "severe-administrative",
            Branch::ModerateOpinion => "moderate-opinion",
            Branch::ModerateAdministrative => "moderate-administrative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    MedicalRedistribution,
    Lockdown,
    MaskMandate,
    EmergencyDeclaration,
}

const ADMINISTRATIVE: [Measure; 3] = [
    Measure::Lockdown,
    Measure::MaskMandate,
    Measure::EmergencyDeclaration,
];

/// Node share of medical resources: nodes ranked by `x*` descending with
/// weight `x*_i / Σ_j x*_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedicalPriority<T> {
    pub node: usize,
    pub weight: T,
}

pub fn medical_priorities<T: Scalar>(x_star: &[T]) -> Vec<MedicalPriority<T>> {
    let total: T = x_star.iter().copied().sum();
    let mut out: Vec<_> = x_star
        .iter()
        .enumerate()
        .map(|(node, &x)| MedicalPriority {
            node,
            weight: if total > T::zero() {
                x / total
            } else {
                T::zero()
            },
        })
        .collect();
    out.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsePlan<T> {
    pub branch: Branch,
    pub r_min: T,
    pub r_max: T,
    pub u_star: Option<Vec<T>>,
    pub z_floor: Option<Vec<T>>,
    pub r_at_floor: Option<T>,
    pub endemic_record: Option<EquilibriumRecord<T>>,
    pub medical_priority: Vec<MedicalPriority<T>>,
    pub measures: Vec<Measure>,
    /// Set when the allocator left budget unspent because of saturation.
    pub allocation_saturated: bool,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RespondOptions<T> {
    pub allocate: AllocateOptions,
    pub solve: SolveOptions<T>,
}

impl<T: Scalar> Default for RespondOptions<T> {
    fn default() -> Self {
        Self {
            allocate: AllocateOptions::default(),
            solve: SolveOptions::default(),
        }
    }
}

/// Response plan by severity:
///
/// * `r_min > 1`: solve for the endemic state, rank nodes for medical
///   redistribution by `x*` and add the administrative measures;
/// * `r_max > 1`: allocate the opinion budget, evaluate `R` at the resulting
///   floor and return `u*` if that is at most one, administrative measures
///   otherwise;
/// * otherwise: no response.
pub fn respond<T: Scalar>(
    p: &ModelParams<T>,
    c: &Matrix<T>,
    budget: T,
    opts: &RespondOptions<T>,
) -> Result<ResponsePlan<T>> {
    if c.rows() != p.n() {
        return Err(Error::Dimension {
            what: "C rows".into(),
            expected: p.n(),
            found: c.rows(),
        });
    }
    let ex = reproduction_extremes(p)?;
    let mut plan = ResponsePlan {
        branch: Branch::MildNull,
        r_min: ex.r_min,
        r_max: ex.r_max,
        u_star: None,
        z_floor: None,
        r_at_floor: None,
        endemic_record: None,
        medical_priority: Vec::new(),
        measures: Vec::new(),
        allocation_saturated: false,
        diagnostics: Vec::new(),
    };
    match ex.severity {
        Severity::Severe => {
            plan.branch = Branch::SevereAdministrative;
            match solve_endemic(p, None, &opts.solve) {
                Ok(rec) if rec.class == EquilibriumClass::Endemic => {
                    plan.medical_priority = medical_priorities(&rec.x_star);
                    plan.measures.push(Measure::MedicalRedistribution);
                    plan.endemic_record = Some(rec);
                }
                Ok(_) => plan
                    .diagnostics
                    .push("endemic solver collapsed onto the healthy state".into()),
                Err(e) => plan.diagnostics.push(format!("endemic solver: {e}")),
            }
            plan.measures.extend(ADMINISTRATIVE);
        }
        Severity::Moderate => {
            let alloc = allocate_budget(p, c, budget, &opts.allocate)?;
            let r = reproduction_number(&alloc.z_floor, p)?;
            plan.allocation_saturated = alloc.saturated;
            if alloc.saturated {
                plan.diagnostics.push(format!(
                    "allocation saturated with {} of {budget} spent",
                    alloc.spent
                ));
            }
            plan.r_at_floor = Some(r);
            plan.z_floor = Some(alloc.z_floor);
            if r <= T::one() {
                plan.branch = Branch::ModerateOpinion;
                plan.u_star = Some(alloc.u_star);
            } else {
                plan.branch = Branch::ModerateAdministrative;
                plan.measures.extend(ADMINISTRATIVE);
            }
        }
        Severity::Mild => {}
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::coupled_step;
    use crate::network::EpidemicRates;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn two_node(beta: f64, beta_min: f64, delta: f64, delta_min: f64) -> ModelParams<f64> {
        let rates = EpidemicRates::with_uniform_beta_min(
            m(&[&[0.0, beta], &[beta, 0.0]]),
            beta_min,
            vec![delta, delta],
            delta_min,
        );
        ModelParams::new(rates, m(&[&[0.5, 0.5], &[0.5, 0.5]]), vec![0.2, 0.2]).unwrap()
    }

    #[test]
    fn critical_opinion_closed_form() {
        // R(a·1) = 1.2 − 0.7a vanishes at 1 for a = 2/7
        let p = two_node(0.4, 0.1, 0.6, 0.2);
        let a = critical_uniform_opinion(&p).unwrap();
        assert!((a - 2.0 / 7.0).abs() < 1e-8, "{a}");
        assert!((reproduction_number(&[a, a], &p).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn critical_opinion_boundaries() {
        // r_max = 1 − 0.2 + 0.2 = 1
        let edge = two_node(0.2, 0.1, 0.6, 0.2);
        assert_eq!(critical_uniform_opinion(&edge).unwrap(), 0.0);
        let severe = two_node(0.5, 0.4, 0.2, 0.1);
        assert!(matches!(
            critical_uniform_opinion(&severe),
            Err(Error::Precondition(_))
        ));
        let mild = two_node(0.1, 0.05, 0.6, 0.2);
        assert!(matches!(
            critical_uniform_opinion(&mild),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn controlled_step_adds_input() {
        let p = two_node(0.4, 0.1, 0.6, 0.2);
        let s = CoupledState::new(vec![0.3, 0.1], vec![0.2, 0.6]).unwrap();
        let zero = InterventionModel::zero(Matrix::identity(2));
        assert_eq!(
            controlled_step(&s, &p, &zero).unwrap(),
            coupled_step(&s, &p).unwrap()
        );

        let iv = InterventionModel::new(Matrix::identity(2), 0.2, vec![0.1, 0.1]).unwrap();
        let next = controlled_step(&CoupledState::zeros(2), &p, &iv).unwrap();
        assert_eq!(next.z, vec![0.1, 0.1]);
        assert_eq!(next.x, vec![0.0, 0.0]);

        let big = InterventionModel::new(Matrix::identity(2), 2.0, vec![0.9, 0.9]).unwrap();
        let s = CoupledState::new(vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            controlled_step(&s, &p, &big),
            Err(Error::Saturation { .. })
        ));
    }

    #[test]
    fn intervention_model_checks() {
        let c = Matrix::identity(2);
        assert!(InterventionModel::new(c.clone(), 0.1, vec![0.1, 0.1]).is_err());
        assert!(InterventionModel::new(c.clone(), 1.0, vec![-0.1, 0.1]).is_err());
        assert!(InterventionModel::new(c.clone(), 1.0, vec![0.1]).is_err());
        assert!(InterventionModel::new(m(&[&[-1.0], &[0.0]]), 1.0, vec![0.1]).is_err());
    }

    #[test]
    fn floor_examples() {
        let mild = two_node(0.1, 0.05, 0.6, 0.2);
        let zero = InterventionModel::zero(Matrix::identity(2));
        let f = opinion_floor(&mild, &zero, &FloorProtocol::new(4, 2000, 1)).unwrap();
        assert!(f.floor.iter().all(|&v| v < 1e-6), "{:?}", f.floor);

        // x pinned at zero: z settles at u/θ = 0.5, never below c = 0.1
        let iv = InterventionModel::new(Matrix::identity(2), 0.2, vec![0.1, 0.1]).unwrap();
        let starts = vec![(vec![0.0, 0.0], vec![0.0, 0.3])];
        let f = opinion_floor_from(&mild, &iv, &starts, &FloorProtocol::new(1, 2000, 0)).unwrap();
        assert!(f.floor.iter().all(|&v| v >= 0.1), "{:?}", f.floor);

        let p = two_node(0.4, 0.1, 0.6, 0.2);
        let a = opinion_floor(&p, &iv, &FloorProtocol::new(8, 4000, 1)).unwrap();
        let b = opinion_floor(&p, &iv, &FloorProtocol::new(8, 4000, 2)).unwrap();
        for (u, v) in a.floor.iter().zip(&b.floor) {
            assert!((u - v).abs() < 1e-3);
        }
    }

    #[test]
    fn zero_budget_allocates_nothing() {
        let p = two_node(0.4, 0.1, 0.6, 0.2);
        let a =
            allocate_budget(&p, &Matrix::identity(2), 0.0, &AllocateOptions::default()).unwrap();
        assert_eq!(a.u_star, vec![0.0, 0.0]);
        assert!(!a.saturated);
    }

    #[test]
    fn large_budget_saturates() {
        let p = two_node(0.4, 0.1, 0.6, 0.2);
        let a =
            allocate_budget(&p, &Matrix::identity(2), 10.0, &AllocateOptions::default()).unwrap();
        assert!(a.saturated);
        assert!(a.spent < 10.0);
        assert!(a.z_floor.iter().all(|&v| v > 0.5), "{:?}", a.z_floor);
    }

    #[test]
    fn respond_branches() {
        let c = Matrix::identity(2);
        let opts = RespondOptions::default();
        let mild = respond(&two_node(0.1, 0.05, 0.6, 0.2), &c, 1.0, &opts).unwrap();
        assert_eq!(mild.branch, Branch::MildNull);
        assert!(mild.measures.is_empty());

        let severe = respond(&two_node(0.5, 0.4, 0.2, 0.1), &c, 1.0, &opts).unwrap();
        assert_eq!(severe.branch, Branch::SevereAdministrative);
        let rec = severe.endemic_record.as_ref().unwrap();
        assert_eq!(rec.class, EquilibriumClass::Endemic);
        assert_eq!(severe.medical_priority.len(), 2);
        assert_eq!(severe.measures[0], Measure::MedicalRedistribution);

        let moderate = two_node(0.4, 0.1, 0.6, 0.2);
        let low = respond(&moderate, &c, 0.0, &opts).unwrap();
        assert_eq!(low.branch, Branch::ModerateAdministrative);
        assert!(low.r_at_floor.unwrap() > 1.0);
        let high = respond(&moderate, &c, 0.5, &opts).unwrap();
        assert_eq!(high.branch, Branch::ModerateOpinion);
        assert!(high.r_at_floor.unwrap() <= 1.0);
        assert!(high.u_star.is_some());
    }

    #[test]
    fn medical_ranking_is_proportional() {
        let r = medical_priorities(&[0.1f64, 0.3, 0.2]);
        assert_eq!(r.iter().map(|p| p.node).collect::<Vec<_>>(), vec![1, 2, 0]);
        assert!((r[0].weight - 0.5).abs() < 1e-15);
    }
}
