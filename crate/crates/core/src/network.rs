//! Graph and parameter layer: directed weighted networks, the model
//! parameter bundle, assumption checks, Laplacians and generators.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Absolute tolerance for stochasticity and ordering checks.
pub const MATRIX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge<T> {
    pub src: usize,
    pub dst: usize,
    pub weight: T,
}

/// Directed graph on nodes `0..n`. An edge `src -> dst` means that
/// information (or infection) flows from `src` into `dst`, so it populates
/// entry `(dst, src)` of the adjacency matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedWeightedNetwork<T> {
    n: usize,
    edges: Vec<Edge<T>>,
}

impl<T: Scalar> DirectedWeightedNetwork<T> {
    pub fn new(n: usize, edges: Vec<Edge<T>>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.src >= n || e.dst >= n {
                return Err(Error::precondition(format!(
                    "edge ({}, {}) references a node outside 0..{n}",
                    e.src, e.dst
                )));
            }
            if !(e.weight >= T::zero()) || !e.weight.is_finite() {
                return Err(Error::precondition(format!(
                    "edge ({}, {}) has invalid weight {}",
                    e.src, e.dst, e.weight
                )));
            }
            if !seen.insert((e.src, e.dst)) {
                return Err(Error::precondition(format!(
                    "duplicate edge ({}, {})",
                    e.src, e.dst
                )));
            }
        }
        Ok(Self { n, edges })
    }

    /// Edges for every nonzero entry, reading entry `(i, j)` as `j -> i`.
    pub fn from_matrix(m: &Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension {
                what: "adjacency matrix columns".into(),
                expected: m.rows(),
                found: m.cols(),
            });
        }
        let mut edges = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let w = m[(i, j)];
                if w != T::zero() {
                    edges.push(Edge {
                        src: j,
                        dst: i,
                        weight: w,
                    });
                }
            }
        }
        Self::new(m.rows(), edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn to_matrix(&self) -> Matrix<T> {
        let mut m = Matrix::zeros(self.n, self.n);
        for e in &self.edges {
            m[(e.dst, e.src)] = e.weight;
        }
        m
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|e| e.src == node).count()
    }

    /// True iff every ordered pair of nodes is joined by a directed path.
    /// Self-loops and zero-weight edges are ignored.
    pub fn strongly_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut g = DiGraph::<(), ()>::with_capacity(self.n, self.edges.len());
        let nodes: Vec<_> = (0..self.n).map(|_| g.add_node(())).collect();
        for e in &self.edges {
            if e.src != e.dst && e.weight > T::zero() {
                g.add_edge(nodes[e.src], nodes[e.dst], ());
            }
        }
        tarjan_scc(&g).len() == 1
    }
}

/// Strong connectivity of the graph induced by the off-diagonal nonzeros of `m`.
pub fn matrix_strongly_connected<T: Scalar>(m: &Matrix<T>) -> bool {
    DirectedWeightedNetwork::from_matrix(m)
        .map(|g| g.strongly_connected())
        .unwrap_or(false)
}

/// A single failed assumption, identified by node or row where applicable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    DeltaMinOutOfRange {
        delta_min: f64,
    },
    RecoveryRateOutOfRange {
        node: usize,
        delta: f64,
    },
    NegativeEntry {
        matrix: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },
    SparsityMismatch {
        row: usize,
        col: usize,
    },
    MinimumRateNotPositive {
        row: usize,
        col: usize,
    },
    MinimumRateExceedsRate {
        row: usize,
        col: usize,
    },
    InfectionRowSumExceedsOne {
        row: usize,
        sum: f64,
    },
    RowNotStochastic {
        row: usize,
        sum: f64,
    },
    SocialWeightOutOfRange {
        row: usize,
        col: usize,
        value: f64,
    },
    MissingSelfWeight {
        row: usize,
    },
    CouplingOutOfRange {
        node: usize,
        theta: f64,
    },
    PhysicalNotStronglyConnected,
    SocialNotStronglyConnected,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DeltaMinOutOfRange { delta_min } => {
                write!(f, "delta_min {delta_min} not in (0, 1]")
            }
            RecoveryRateOutOfRange { node, delta } => {
                write!(
                    f,
                    "recovery rate {delta} not in [delta_min, 1], node {node}"
                )
            }
            NegativeEntry {
                matrix,
                row,
                col,
                value,
            } => {
                write!(
                    f,
                    "negative entry {value} in {matrix}, row {row}, col {col}"
                )
            }
            SparsityMismatch { row, col } => {
                write!(f, "B and B_min sparsity differ, row {row}, col {col}")
            }
            MinimumRateNotPositive { row, col } => {
                write!(
                    f,
                    "minimum infection rate not positive, row {row}, col {col}"
                )
            }
            MinimumRateExceedsRate { row, col } => {
                write!(f, "B_min exceeds B, row {row}, col {col}")
            }
            InfectionRowSumExceedsOne { row, sum } => {
                write!(f, "infection rates sum to {sum} > 1, row {row}")
            }
            RowNotStochastic { row, sum } => {
                write!(f, "row not stochastic, row {row} (sum {sum})")
            }
            SocialWeightOutOfRange { row, col, value } => {
                write!(
                    f,
                    "social weight {value} not in [0, 1), row {row}, col {col}"
                )
            }
            MissingSelfWeight { row } => write!(f, "social self-weight not positive, row {row}"),
            CouplingOutOfRange { node, theta } => {
                write!(f, "coupling weight {theta} not in (0, 1), node {node}")
            }
            PhysicalNotStronglyConnected => f.write_str("physical graph not strongly connected"),
            SocialNotStronglyConnected => f.write_str("social graph not strongly connected"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Validation(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Infection and recovery rates of the physical layer.
#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicRates<T> {
    /// `b[(i, j)]` is the rate at which node `j` infects node `i`.
    pub b: Matrix<T>,
    /// Opinion-saturated infection rates, same sparsity as `b`.
    pub b_min: Matrix<T>,
    pub delta: Vec<T>,
    pub delta_min: T,
}

impl<T: Scalar> EpidemicRates<T> {
    /// Rates whose minimum infection matrix is `beta_min` on every edge of `b`.
    pub fn with_uniform_beta_min(b: Matrix<T>, beta_min: T, delta: Vec<T>, delta_min: T) -> Self {
        let b_min = b.map(|v| if v > T::zero() { beta_min } else { T::zero() });
        Self {
            b,
            b_min,
            delta,
            delta_min,
        }
    }

    fn check(&self, out: &mut Vec<Violation>) {
        let n = self.b.rows();
        let tol = T::tol(MATRIX_TOL);
        if !(self.delta_min > T::zero() && self.delta_min <= T::one()) {
            out.push(Violation::DeltaMinOutOfRange {
                delta_min: self.delta_min.as_f64(),
            });
        }
        for (i, &d) in self.delta.iter().enumerate() {
            if !(d >= self.delta_min && d <= T::one()) {
                out.push(Violation::RecoveryRateOutOfRange {
                    node: i,
                    delta: d.as_f64(),
                });
            }
        }
        for (name, m) in [("B", &self.b), ("B_min", &self.b_min)] {
            if let Some((row, col, value)) = m.first_negative() {
                out.push(Violation::NegativeEntry {
                    matrix: name,
                    row,
                    col,
                    value: value.as_f64(),
                });
            }
        }
        for i in 0..n {
            for j in 0..n {
                let (b, bm) = (self.b[(i, j)], self.b_min[(i, j)]);
                if (b > T::zero()) != (bm > T::zero()) {
                    if b > T::zero() && bm <= T::zero() {
                        out.push(Violation::MinimumRateNotPositive { row: i, col: j });
                    } else {
                        out.push(Violation::SparsityMismatch { row: i, col: j });
                    }
                } else if bm > b + tol {
                    out.push(Violation::MinimumRateExceedsRate { row: i, col: j });
                }
            }
        }
        for (i, s) in self.b.row_sums().into_iter().enumerate() {
            if s > T::one() + tol {
                out.push(Violation::InfectionRowSumExceedsOne {
                    row: i,
                    sum: s.as_f64(),
                });
            }
        }
    }
}

/// Complete parameter set of one scenario. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    n: usize,
    rates: EpidemicRates<T>,
    w: Matrix<T>,
    theta: Vec<T>,
    lbar: Matrix<T>,
    // Sparse incoming neighbourhoods used by the step functions.
    infection_in: Vec<Vec<(usize, T, T)>>,
    social_in: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> ModelParams<T> {
    /// Assembles parameters after checking dimensions only; call
    /// [`ModelParams::validate`] (or use [`ModelParams::validated`]) to check
    /// the modelling assumptions.
    pub fn new(rates: EpidemicRates<T>, w: Matrix<T>, theta: Vec<T>) -> Result<Self> {
        let n = rates.b.rows();
        let dims = [
            ("B columns", rates.b.cols()),
            ("B_min rows", rates.b_min.rows()),
            ("B_min columns", rates.b_min.cols()),
            ("delta", rates.delta.len()),
            ("W rows", w.rows()),
            ("W columns", w.cols()),
            ("theta", theta.len()),
        ];
        for (what, found) in dims {
            if found != n {
                return Err(Error::Dimension {
                    what: what.into(),
                    expected: n,
                    found,
                });
            }
        }
        let lbar = Matrix::identity(n).sub(&w);
        let infection_in = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| rates.b[(i, j)] != T::zero() || rates.b_min[(i, j)] != T::zero())
                    .map(|j| (j, rates.b[(i, j)], rates.b_min[(i, j)]))
                    .collect()
            })
            .collect();
        let social_in = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && w[(i, j)] != T::zero())
                    .map(|j| (j, w[(i, j)]))
                    .collect()
            })
            .collect();
        Ok(Self {
            n,
            rates,
            w,
            theta,
            lbar,
            infection_in,
            social_in,
        })
    }

    pub fn validated(rates: EpidemicRates<T>, w: Matrix<T>, theta: Vec<T>) -> Result<Self> {
        let p = Self::new(rates, w, theta)?;
        p.validate().into_result()?;
        Ok(p)
    }

    /// Checks every modelling assumption and lists each violation.
    pub fn validate(&self) -> ValidationReport {
        let mut out = Vec::new();
        self.rates.check(&mut out);
        let tol = T::tol(MATRIX_TOL);
        if let Some((row, col, value)) = self.w.first_negative() {
            out.push(Violation::NegativeEntry {
                matrix: "W",
                row,
                col,
                value: value.as_f64(),
            });
        }
        for i in 0..self.n {
            let sum: T = self.w.row(i).iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                out.push(Violation::RowNotStochastic {
                    row: i,
                    sum: sum.as_f64(),
                });
            }
            for j in 0..self.n {
                let v = self.w[(i, j)];
                if v >= T::one() {
                    out.push(Violation::SocialWeightOutOfRange {
                        row: i,
                        col: j,
                        value: v.as_f64(),
                    });
                }
            }
            if !(self.w[(i, i)] > T::zero()) {
                out.push(Violation::MissingSelfWeight { row: i });
            }
        }
        for (i, &t) in self.theta.iter().enumerate() {
            if !(t > T::zero() && t < T::one()) {
                out.push(Violation::CouplingOutOfRange {
                    node: i,
                    theta: t.as_f64(),
                });
            }
        }
        if !matrix_strongly_connected(&self.rates.b) {
            out.push(Violation::PhysicalNotStronglyConnected);
        }
        if !matrix_strongly_connected(&self.w) {
            out.push(Violation::SocialNotStronglyConnected);
        }
        ValidationReport { violations: out }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rates(&self) -> &EpidemicRates<T> {
        &self.rates
    }

    pub fn b(&self) -> &Matrix<T> {
        &self.rates.b
    }

    pub fn b_min(&self) -> &Matrix<T> {
        &self.rates.b_min
    }

    pub fn delta(&self) -> &[T] {
        &self.rates.delta
    }

    pub fn delta_min(&self) -> T {
        self.rates.delta_min
    }

    pub fn w(&self) -> &Matrix<T> {
        &self.w
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    /// Social Laplacian `I - W`.
    pub fn lbar(&self) -> &Matrix<T> {
        &self.lbar
    }

    /// Incoming infection edges of node `i` as `(j, beta_ij, beta_min_ij)`.
    pub(crate) fn infection_in(&self, i: usize) -> &[(usize, T, T)] {
        &self.infection_in[i]
    }

    /// Incoming social edges of node `i`, self-weight excluded.
    pub(crate) fn social_in(&self, i: usize) -> &[(usize, T)] {
        &self.social_in[i]
    }

    /// Copy with a different infection layer (same opinion layer).
    pub fn with_rates(&self, rates: EpidemicRates<T>) -> Result<Self> {
        Self::new(rates, self.w.clone(), self.theta.clone())
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        let rates = EpidemicRates {
            b: self.rates.b.cast(),
            b_min: self.rates.b_min.cast(),
            delta: self
                .rates
                .delta
                .iter()
                .map(|v| U::lit(v.as_f64()))
                .collect(),
            delta_min: U::lit(self.rates.delta_min.as_f64()),
        };
        let theta = self.theta.iter().map(|v| U::lit(v.as_f64())).collect();
        ModelParams::new(rates, self.w.cast(), theta).expect("dimensions already checked")
    }

    /// Hex SHA-256 over the numeric content, used to tie trajectories to
    /// the parameters that produced them.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        let mut feed = |vals: &[T]| {
            for v in vals {
                h.update(v.as_f64().to_bits().to_le_bytes());
            }
        };
        feed(self.rates.b.as_slice());
        feed(self.rates.b_min.as_slice());
        feed(&self.rates.delta);
        feed(&[self.rates.delta_min]);
        feed(self.w.as_slice());
        feed(&self.theta);
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `I - W` for a row-stochastic `W`; rows of the result sum to zero.
pub fn laplacian<T: Scalar>(w: &Matrix<T>) -> Result<Matrix<T>> {
    if !w.is_square() {
        return Err(Error::Dimension {
            what: "W columns".into(),
            expected: w.rows(),
            found: w.cols(),
        });
    }
    if let Some((row, col, value)) = w.first_negative() {
        return Err(Error::NegativeEntry {
            row,
            col,
            value: value.as_f64(),
        });
    }
    let tol = T::tol(MATRIX_TOL);
    for (i, s) in w.row_sums().into_iter().enumerate() {
        if (s - T::one()).abs() > tol {
            return Err(Error::Validation(ValidationReport {
                violations: vec![Violation::RowNotStochastic {
                    row: i,
                    sum: s.as_f64(),
                }],
            }));
        }
    }
    Ok(Matrix::identity(w.rows()).sub(w))
}

/// Maximum number of regenerations before giving up on strong connectivity.
pub const WS_MAX_ATTEMPTS: usize = 100;

/// Watts–Strogatz small-world skeleton emitted as symmetric directed edges of
/// weight one. Every lattice edge `(i, i + j)`, visited lap by lap for
/// `j = 1..=k/2`, is rewired with probability `p` to a uniformly chosen node
/// that is neither `i` nor already adjacent to it. The graph is regenerated
/// from the continuing random stream until it is strongly connected.
pub fn generate_watts_strogatz<T: Scalar>(
    n: usize,
    k: usize,
    p: f64,
    seed: u64,
) -> Result<DirectedWeightedNetwork<T>> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::precondition(format!(
            "k = {k} must be even and >= 2"
        )));
    }
    if n <= k {
        return Err(Error::precondition(format!("n = {n} must exceed k = {k}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::precondition(format!("p = {p} not in [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..WS_MAX_ATTEMPTS {
        let adj = watts_strogatz_lattice(n, k, p, &mut rng);
        let mut edges = Vec::with_capacity(n * k);
        for (i, nbrs) in adj.iter().enumerate() {
            for &j in nbrs {
                edges.push(Edge {
                    src: i,
                    dst: j,
                    weight: T::one(),
                });
            }
        }
        let net = DirectedWeightedNetwork::new(n, edges)?;
        if net.strongly_connected() {
            return Ok(net);
        }
    }
    Err(Error::NonConvergence {
        what: "Watts-Strogatz generation",
        iterations: WS_MAX_ATTEMPTS,
        detail: "no strongly connected sample; increase k or decrease p".into(),
    })
}

fn watts_strogatz_lattice(n: usize, k: usize, p: f64, rng: &mut impl Rng) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); n];
    for i in 0..n {
        for j in 1..=k / 2 {
            let t = (i + j) % n;
            adj[i].insert(t);
            adj[t].insert(i);
        }
    }
    for j in 1..=k / 2 {
        for i in 0..n {
            let t = (i + j) % n;
            if !adj[i].contains(&t) || !rng.random_bool(p) {
                continue;
            }
            // node already adjacent to everyone: nothing to rewire to
            if adj[i].len() >= n - 1 {
                continue;
            }
            let new_t = loop {
                let c = rng.random_range(0..n);
                if c != i && !adj[i].contains(&c) {
                    break c;
                }
            };
            adj[i].remove(&t);
            adj[t].remove(&i);
            adj[i].insert(new_t);
            adj[new_t].insert(i);
        }
    }
    adj
}

/// Multipliers applied to base infection and recovery data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleFactors<T> {
    pub b: T,
    pub b_min: T,
    pub delta: T,
    pub delta_min: T,
}

/// Scales base data into epidemic rates: `B = cB·B̄`, `B_min = cBmin·B̄`,
/// `Δ = cΔ·Δ̄` and the scalar `δ_min = cΔmin·min_i Δ̄_i`.
pub fn scale_base_matrices<T: Scalar>(
    b_bar: &Matrix<T>,
    delta_bar: &[T],
    c: ScaleFactors<T>,
) -> Result<EpidemicRates<T>> {
    if !(c.b_min > T::zero() && c.b_min <= c.b) {
        return Err(Error::precondition(format!(
            "need 0 < cBmin <= cB, got cBmin = {}, cB = {}",
            c.b_min, c.b
        )));
    }
    if !(c.delta_min > T::zero() && c.delta_min <= c.delta) {
        return Err(Error::precondition(format!(
            "need 0 < cDmin <= cD, got cDmin = {}, cD = {}",
            c.delta_min, c.delta
        )));
    }
    if b_bar.rows() != delta_bar.len() || !b_bar.is_square() {
        return Err(Error::Dimension {
            what: "base recovery vector".into(),
            expected: b_bar.rows(),
            found: delta_bar.len(),
        });
    }
    let min_delta = delta_bar.iter().copied().fold(T::infinity(), T::min);
    let rates = EpidemicRates {
        b: b_bar.scaled(c.b),
        b_min: b_bar.scaled(c.b_min),
        delta: delta_bar.iter().map(|&d| d * c.delta).collect(),
        delta_min: min_delta * c.delta_min,
    };
    let mut out = Vec::new();
    rates.check(&mut out);
    ValidationReport { violations: out }.into_result()?;
    Ok(rates)
}
