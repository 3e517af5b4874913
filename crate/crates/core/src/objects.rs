//! States, discrete observables and Hamiltonians.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{eigh, r, tensor, ComplexMatrix, DEFAULT_TOL};

/// Band around 1 inside which an effect eigenvalue counts as a unit eigenvalue.
pub const UNIT_EIGEN_TOL: f64 = 1e-8;

/// Born probabilities in `(-PROB_CLAMP, 0)` are read as round-off and clamped.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Shape,
    Hermiticity,
    Positivity,
    Trace,
    EffectBelowZero { index: usize },
    EffectAboveOne { index: usize },
    EffectHermiticity { index: usize },
    Completeness,
    EffectDimension { index: usize },
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::Shape => write!(f, "shape"),
            ViolationKind::Hermiticity => write!(f, "hermiticity"),
            ViolationKind::Positivity => write!(f, "positivity"),
            ViolationKind::Trace => write!(f, "unit trace"),
            ViolationKind::EffectBelowZero { index } => write!(f, "effect {index} positivity"),
            ViolationKind::EffectAboveOne { index } => write!(f, "effect {index} bounded by identity"),
            ViolationKind::EffectHermiticity { index } => write!(f, "effect {index} hermiticity"),
            ViolationKind::Completeness => write!(f, "completeness (effects sum to identity)"),
            ViolationKind::EffectDimension { index } => write!(f, "effect {index} dimension"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub magnitude: f64,
}

/// List of violated invariants. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, magnitude: f64) {
        self.violations.push(Violation { kind, magnitude });
    }

    pub fn magnitude_of(&self, pred: impl Fn(&ViolationKind) -> bool) -> Option<f64> {
        self.violations.iter().find(|v| pred(&v.kind)).map(|v| v.magnitude)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{} violated by {:.3e}", v.kind, v.magnitude))
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks hermiticity, positivity and unit trace of a candidate density matrix.
pub fn validate_state(m: &ComplexMatrix, tol: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    if !m.is_square() || m.rows() == 0 {
        report.push(ViolationKind::Shape, 1.0);
        return report;
    }
    let herm = m.hermiticity_defect();
    if herm > tol {
        report.push(ViolationKind::Hermiticity, herm);
    }
    if let Ok(eig) = eigh(m) {
        let min = eig.values[0];
        if min < -tol {
            report.push(ViolationKind::Positivity, -min);
        }
    }
    let tr = m.trace();
    let trace_err = (tr - r(1.0)).norm();
    if trace_err > tol {
        report.push(ViolationKind::Trace, trace_err);
    }
    report
}

/// Density operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct State(ComplexMatrix);

impl State {
    pub fn new(m: ComplexMatrix, tol: f64) -> Result<Self> {
        let report = validate_state(&m, tol);
        if report.is_valid() {
            Ok(Self(m))
        } else {
            Err(Error::InvalidState(report))
        }
    }

    /// Normalises `m` by its trace and validates the result.
    pub fn normalized(m: &ComplexMatrix, tol: f64) -> Result<Self> {
        let tr = m.trace().re;
        if tr <= 0.0 {
            let mut report = ValidationReport::default();
            report.push(ViolationKind::Trace, (tr - 1.0).abs());
            return Err(Error::InvalidState(report));
        }
        Self::new(m.scale_real(1.0 / tr), tol)
    }

    /// Pure state `|psi><psi|` from a (not necessarily normalised) vector.
    pub fn pure(psi: &[crate::matrix::C64]) -> Result<Self> {
        Self::normalized(&ComplexMatrix::ket_projector(psi), DEFAULT_TOL)
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        Self(ComplexMatrix::basis_projector(dim, i))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        validate_state(&self.0, tol)
    }

    pub fn tensor(&self, other: &State) -> State {
        State(tensor(&self.0, &other.0))
    }

    pub(crate) fn from_matrix_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }
}

/// Finite POVM with string outcome labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Povm {
    outcomes: Vec<String>,
    effects: Vec<ComplexMatrix>,
}

/// Checks effect range and completeness.
pub fn validate_povm_parts(effects: &[ComplexMatrix], tol: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    let Some(first) = effects.first() else {
        report.push(ViolationKind::Shape, 1.0);
        return report;
    };
    let dim = first.rows();
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for (index, e) in effects.iter().enumerate() {
        if e.rows() != dim || e.cols() != dim {
            report.push(ViolationKind::EffectDimension { index }, (e.rows() as f64 - dim as f64).abs().max(1.0));
            continue;
        }
        let herm = e.hermiticity_defect();
        if herm > tol {
            report.push(ViolationKind::EffectHermiticity { index }, herm);
        }
        if let Ok(eig) = eigh(e) {
            let (min, max) = (eig.values[0], eig.values[dim - 1]);
            if min < -tol {
                report.push(ViolationKind::EffectBelowZero { index }, -min);
            }
            if max > 1.0 + tol {
                report.push(ViolationKind::EffectAboveOne { index }, max - 1.0);
            }
        }
        sum += e;
    }
    let completeness = sum.distance(&ComplexMatrix::identity(dim));
    if completeness > tol {
        report.push(ViolationKind::Completeness, completeness);
    }
    report
}

pub fn validate_povm(p: &Povm, tol: f64) -> ValidationReport {
    validate_povm_parts(&p.effects, tol)
}

impl Povm {
    pub fn new(outcomes: Vec<String>, effects: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        if outcomes.len() != effects.len() {
            return Err(Error::OutcomeMismatch {
                expected: effects.len(),
                found: outcomes.len(),
            });
        }
        let report = validate_povm_parts(&effects, tol);
        if !report.is_valid() {
            return Err(Error::InvalidPovm(report));
        }
        Ok(Self { outcomes, effects })
    }

    /// Outcomes labelled `"0"`, `"1"`, ...
    pub fn with_indexed_outcomes(effects: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let outcomes = (0..effects.len()).map(|i| i.to_string()).collect();
        Self::new(outcomes, effects, tol)
    }

    /// Sharp observable `{|i><i|}` in the computational basis.
    pub fn computational_basis(dim: usize) -> Self {
        Self {
            outcomes: (0..dim).map(|i| i.to_string()).collect(),
            effects: (0..dim).map(|i| ComplexMatrix::basis_projector(dim, i)).collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(outcomes: Vec<String>, effects: Vec<ComplexMatrix>) -> Self {
        Self { outcomes, effects }
    }

    pub fn dim(&self) -> usize {
        self.effects[0].rows()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn effect(&self, x: usize) -> &ComplexMatrix {
        &self.effects[x]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|o| o == label)
            .ok_or_else(|| Error::UnknownOutcome(label.to_string()))
    }

    /// `max |E_x E_y - delta_xy E_x|` over all pairs.
    pub fn sharpness_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (x, ex) in self.effects.iter().enumerate() {
            for (y, ey) in self.effects.iter().enumerate() {
                let prod = ex * ey;
                let target = if x == y { ex.clone() } else { ComplexMatrix::zeros(ex.rows(), ex.cols()) };
                worst = worst.max(prod.distance(&target));
            }
        }
        worst
    }

    pub fn is_sharp(&self, tol: f64) -> bool {
        self.sharpness_defect() <= tol
    }

    /// `max_x |E_x - F_x|`, infinite if the outcome counts or dimensions differ.
    pub fn distance(&self, other: &Povm) -> f64 {
        if self.len() != other.len() || self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.effects
            .iter()
            .zip(&other.effects)
            .fold(0.0, |acc, (a, b)| acc.max(a.distance(b)))
    }
}

/// Born rule `p(x) = tr[E_x rho]`.
pub fn born_probabilities(e: &Povm, rho: &State) -> Result<Vec<f64>> {
    if e.dim() != rho.dim() {
        return Err(Error::dims(format!("state of dimension {}", e.dim()), rho.dim()));
    }
    e.effects()
        .iter()
        .enumerate()
        .map(|(x, ex)| clamp_probability(ex.expectation(rho.matrix()), &e.outcomes()[x]))
        .collect()
}

pub(crate) fn clamp_probability(p: f64, outcome: &str) -> Result<f64> {
    if p >= 0.0 {
        Ok(p)
    } else if p > -PROB_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::InvalidDistribution {
            reason: format!("negative probability for outcome {outcome}"),
            magnitude: -p,
        })
    }
}

/// Projector onto the eigenvalue-1 eigenspace of an effect; zero if there is none.
pub fn eigenvalue_one_projector(effect: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let eig = eigh(effect)?;
    Ok(eig.projector(|l| (l - 1.0).abs() <= tol))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectificationReport {
    pub admits: bool,
    /// Rank of the unit-eigenvalue eigenspace of each effect.
    pub unit_ranks: Vec<usize>,
}

/// Whether every effect has a unit eigenvalue, so that objectified states exist.
pub fn admits_objectification(p: &Povm, tol: f64) -> Result<ObjectificationReport> {
    let mut unit_ranks = Vec::with_capacity(p.len());
    for e in p.effects() {
        let eig = eigh(e)?;
        unit_ranks.push(eig.values.iter().filter(|&&l| (l - 1.0).abs() <= tol).count());
    }
    Ok(ObjectificationReport {
        admits: unit_ranks.iter().all(|&k| k > 0),
        unit_ranks,
    })
}

/// Hermitian energy operator (units with hbar = 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Hamiltonian(ComplexMatrix);

impl Hamiltonian {
    pub fn new(m: ComplexMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims("square matrix", format!("{}x{}", m.rows(), m.cols())));
        }
        let deviation = m.hermiticity_defect();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self(m.hermitian_part()))
    }

    pub fn diagonal(energies: &[f64]) -> Self {
        Self(ComplexMatrix::from_real_diagonal(energies))
    }

    pub fn zero(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim, dim))
    }

    /// `H_1 ⊗ 1 + 1 ⊗ H_2`.
    pub fn additive(h1: &Hamiltonian, h2: &Hamiltonian) -> Self {
        let id1 = ComplexMatrix::identity(h1.dim());
        let id2 = ComplexMatrix::identity(h2.dim());
        Self(&tensor(&h1.0, &id2) + &tensor(&id1, &h2.0))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// `tr[H rho]`.
    pub fn energy(&self, rho: &ComplexMatrix) -> f64 {
        self.0.expectation(rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::c;

    fn sx() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn unsharp() -> Povm {
        let i = ComplexMatrix::identity(2);
        Povm::new(
            vec!["+".into(), "-".into()],
            vec![&i.scale_real(0.5) + &sx().scale_real(0.3), &i.scale_real(0.5) - &sx().scale_real(0.3)],
            1e-9,
        )
        .unwrap()
    }

    #[test]
    fn state_validation() {
        assert!(validate_state(&ComplexMatrix::identity(2).scale_real(0.5), 1e-9).is_valid());
        let plus = ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(validate_state(&plus, 1e-9).is_valid());

        let bad = validate_state(&ComplexMatrix::from_real_diagonal(&[1.5, -0.5]), 1e-9);
        let mag = bad.magnitude_of(|k| *k == ViolationKind::Positivity).unwrap();
        assert!((mag - 0.5).abs() < 1e-12);
        assert!(bad.magnitude_of(|k| *k == ViolationKind::Trace).is_none());
    }

    #[test]
    fn state_validation_reports_trace_and_hermiticity() {
        let m = ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(0.6, 0.0),
            (1, 1) => c(0.6, 0.0),
            (0, 1) => c(0.1, 0.0),
            _ => c(0.0, 0.0),
        });
        let report = validate_state(&m, 1e-9);
        assert!(report.magnitude_of(|k| *k == ViolationKind::Hermiticity).is_some());
        let tr = report.magnitude_of(|k| *k == ViolationKind::Trace).unwrap();
        assert!((tr - 0.2).abs() < 1e-12);
    }

    #[test]
    fn povm_validation() {
        let sharp = Povm::computational_basis(2);
        assert!(validate_povm(&sharp, 1e-9).is_valid());

        let over = vec![ComplexMatrix::identity(2).scale_real(0.6), ComplexMatrix::identity(2).scale_real(0.6)];
        let report = validate_povm_parts(&over, 1e-9);
        let mag = report.magnitude_of(|k| *k == ViolationKind::Completeness).unwrap();
        assert!((mag - 0.2).abs() < 1e-12);

        // spectrum of 0.5 I ± 0.3 sigma_x is {0.2, 0.8}
        assert!(validate_povm(&unsharp(), 1e-9).is_valid());
        let eig = eigh(unsharp().effect(0)).unwrap();
        assert!((eig.values[0] - 0.2).abs() < 1e-12 && (eig.values[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn povm_rejects_effect_above_one() {
        let effects = vec![
            ComplexMatrix::from_real_diagonal(&[1.2, 0.0]),
            ComplexMatrix::from_real_diagonal(&[-0.2, 1.0]),
        ];
        let report = validate_povm_parts(&effects, 1e-9);
        assert!(report.magnitude_of(|k| matches!(k, ViolationKind::EffectAboveOne { index: 0 })).is_some());
        assert!(report.magnitude_of(|k| matches!(k, ViolationKind::EffectBelowZero { index: 1 })).is_some());
        assert!(report.magnitude_of(|k| *k == ViolationKind::Completeness).is_none());
    }

    #[test]
    fn born_rule_examples() {
        let plus = State::pure(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let p = born_probabilities(&Povm::computational_basis(2), &plus).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);

        // tr[sigma_x |0><0|] = 0
        let p = born_probabilities(&unsharp(), &State::basis(2, 0)).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn born_rule_dimension_mismatch() {
        assert!(born_probabilities(&Povm::computational_basis(3), &State::basis(2, 0)).is_err());
    }

    #[test]
    fn probability_clamping() {
        assert_eq!(clamp_probability(-1e-14, "x").unwrap(), 0.0);
        assert!(clamp_probability(-1e-6, "x").is_err());
    }

    #[test]
    fn unit_eigenspace_projectors() {
        let p0 = ComplexMatrix::basis_projector(2, 0);
        assert!(eigenvalue_one_projector(&p0, UNIT_EIGEN_TOL).unwrap().approx_eq(&p0, 1e-12));

        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(eigenvalue_one_projector(&half, UNIT_EIGEN_TOL).unwrap().max_norm() < 1e-15);

        let d = ComplexMatrix::from_real_diagonal(&[1.0, 0.7, 0.0]);
        let p = eigenvalue_one_projector(&d, UNIT_EIGEN_TOL).unwrap();
        assert!(p.approx_eq(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0]), 1e-12));
    }

    #[test]
    fn objectification_admissibility() {
        assert!(admits_objectification(&Povm::computational_basis(3), UNIT_EIGEN_TOL).unwrap().admits);

        let half = ComplexMatrix::identity(2).scale_real(0.5);
        let p = Povm::with_indexed_outcomes(vec![half.clone(), half], 1e-9).unwrap();
        assert!(!admits_objectification(&p, UNIT_EIGEN_TOL).unwrap().admits);

        let p = Povm::with_indexed_outcomes(
            vec![ComplexMatrix::from_real_diagonal(&[1.0, 0.3]), ComplexMatrix::from_real_diagonal(&[0.0, 0.7])],
            1e-9,
        )
        .unwrap();
        let rep = admits_objectification(&p, UNIT_EIGEN_TOL).unwrap();
        assert!(!rep.admits);
        assert_eq!(rep.unit_ranks, vec![1, 0]);
    }

    #[test]
    fn additive_hamiltonian() {
        let h = Hamiltonian::additive(&Hamiltonian::diagonal(&[0.0, 1.0]), &Hamiltonian::diagonal(&[0.0, 1.0]));
        assert!(h.matrix().approx_eq(&ComplexMatrix::from_real_diagonal(&[0.0, 1.0, 1.0, 2.0]), 1e-15));
        assert!(Hamiltonian::new(ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]), 1e-9).is_err());
    }
}
