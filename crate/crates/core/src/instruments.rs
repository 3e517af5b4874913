//! Operations in Kraus form, instruments, and the standard constructions on
//! them: Lüders instruments, sequential instruments for sharp observables, and
//! the per-block depolarising pointer instrument.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{eigh, psd_sqrt, r, tensor, ComplexMatrix, DEFAULT_TOL};
use crate::objects::{clamp_probability, Povm, State, ValidationReport, Violation, ViolationKind, UNIT_EIGEN_TOL};

/// Choi eigenvalues below this are dropped when extracting Kraus operators.
pub const CHOI_CUTOFF: f64 = 1e-12;

/// Outcomes with probability at or below this get the null conditional state.
pub const P_THRESHOLD: f64 = 1e-12;

/// Completely positive trace non-increasing map `T -> sum_k K T K^dag`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KrausOperation {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausOperation {
    /// Validates shapes and `sum K^dag K <= 1 + tol`.
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        for k in &kraus {
            if k.rows() != dim_out || k.cols() != dim_in {
                return Err(Error::dims(
                    format!("{dim_out}x{dim_in} Kraus operator"),
                    format!("{}x{}", k.rows(), k.cols()),
                ));
            }
        }
        let op = Self { dim_in, dim_out, kraus };
        let max = eigh(&op.effect())?.values.last().copied().unwrap_or(0.0);
        if max > 1.0 + tol {
            let mut report = ValidationReport::default();
            report.violations.push(Violation {
                kind: ViolationKind::EffectAboveOne { index: 0 },
                magnitude: max - 1.0,
            });
            return Err(Error::InvalidInstrument(report));
        }
        Ok(op)
    }

    pub(crate) fn from_kraus_unchecked(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix>) -> Self {
        Self { dim_in, dim_out, kraus }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_kraus_unchecked(dim, dim, vec![ComplexMatrix::identity(dim)])
    }

    /// Single-Kraus operation `T -> K T K^dag`.
    pub fn single(k: ComplexMatrix) -> Self {
        Self::from_kraus_unchecked(k.cols(), k.rows(), vec![k])
    }

    /// Kraus form of a linear map given by its action, via the eigendecomposition
    /// of its Choi matrix `sum_ij |i><j| ⊗ f(|i><j|)`.
    pub fn from_map(dim_in: usize, dim_out: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Result<Self> {
        let n = dim_in * dim_out;
        let mut choi = ComplexMatrix::zeros(n, n);
        for i in 0..dim_in {
            for j in 0..dim_in {
                let mut eij = ComplexMatrix::zeros(dim_in, dim_in);
                eij.set(i, j, r(1.0));
                let out = f(&eij);
                if out.rows() != dim_out || out.cols() != dim_out {
                    return Err(Error::dims(
                        format!("{dim_out}x{dim_out} output"),
                        format!("{}x{}", out.rows(), out.cols()),
                    ));
                }
                for a in 0..dim_out {
                    for b in 0..dim_out {
                        choi.set(i * dim_out + a, j * dim_out + b, out.get(a, b));
                    }
                }
            }
        }
        Self::from_choi(dim_in, dim_out, &choi)
    }

    /// Kraus operators `K[a, i] = sqrt(lambda) v[i * dim_out + a]` from the
    /// spectral decomposition of a Choi matrix.
    pub fn from_choi(dim_in: usize, dim_out: usize, choi: &ComplexMatrix) -> Result<Self> {
        let eig = eigh(choi)?;
        if let Some(&min) = eig.values.first() {
            if min < -DEFAULT_TOL {
                return Err(Error::NegativeEigenvalue { eigenvalue: min });
            }
        }
        let mut kraus = Vec::new();
        for (k, &lambda) in eig.values.iter().enumerate().rev() {
            if lambda < CHOI_CUTOFF {
                continue;
            }
            let v = eig.vector(k);
            let s = lambda.sqrt();
            kraus.push(ComplexMatrix::from_fn(dim_out, dim_in, |a, i| v[i * dim_out + a] * s));
        }
        Ok(Self::from_kraus_unchecked(dim_in, dim_out, kraus))
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Choi matrix with the input factor first.
    pub fn choi(&self) -> ComplexMatrix {
        let (di, d) = (self.dim_in, self.dim_out);
        let n = di * d;
        let mut out = ComplexMatrix::zeros(n, n);
        for k in &self.kraus {
            let vec: Vec<_> = (0..n).map(|idx| k.get(idx % d, idx / d)).collect();
            out += &ComplexMatrix::ket_projector(&vec);
        }
        out
    }

    /// `sum_k K^dag K`, the effect `Phi^*(1)`.
    pub fn effect(&self) -> ComplexMatrix {
        self.apply_dual_unchecked(&ComplexMatrix::identity(self.dim_out))
    }

    pub fn apply(&self, t: &ComplexMatrix) -> Result<ComplexMatrix> {
        if t.rows() != self.dim_in || t.cols() != self.dim_in {
            return Err(Error::dims(
                format!("{0}x{0} input", self.dim_in),
                format!("{}x{}", t.rows(), t.cols()),
            ));
        }
        Ok(self.apply_unchecked(t))
    }

    pub(crate) fn apply_unchecked(&self, t: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += &(&(k * t) * &k.adjoint());
        }
        out
    }

    /// Heisenberg-picture action `sum_k K^dag B K`.
    pub fn apply_dual(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        if b.rows() != self.dim_out || b.cols() != self.dim_out {
            return Err(Error::dims(
                format!("{0}x{0} observable", self.dim_out),
                format!("{}x{}", b.rows(), b.cols()),
            ));
        }
        Ok(self.apply_dual_unchecked(b))
    }

    pub(crate) fn apply_dual_unchecked(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += &(&(&k.adjoint() * b) * k);
        }
        out
    }

    /// `id_{d} ⊗ self`, acting on the second factor of a product space.
    pub fn lift_second(&self, dim_first: usize) -> KrausOperation {
        let id = ComplexMatrix::identity(dim_first);
        KrausOperation {
            dim_in: dim_first * self.dim_in,
            dim_out: dim_first * self.dim_out,
            kraus: self.kraus.iter().map(|k| tensor(&id, k)).collect(),
        }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &KrausOperation) -> Result<KrausOperation> {
        if other.dim_in != self.dim_out {
            return Err(Error::dims(self.dim_out, other.dim_in));
        }
        let kraus = other
            .kraus
            .iter()
            .flat_map(|b| self.kraus.iter().map(move |a| b * a))
            .collect();
        Ok(KrausOperation {
            dim_in: self.dim_in,
            dim_out: other.dim_out,
            kraus,
        })
    }

    /// `max |sum K^dag K - 1|`.
    pub fn trace_preservation_defect(&self) -> f64 {
        self.effect().distance(&ComplexMatrix::identity(self.dim_in))
    }
}

/// Choi-matrix distance between two operations; infinite when shapes differ.
pub fn choi_distance(a: &KrausOperation, b: &KrausOperation) -> f64 {
    if a.dim_in != b.dim_in || a.dim_out != b.dim_out {
        return f64::INFINITY;
    }
    a.choi().distance(&b.choi())
}

/// Discrete instrument: one operation per outcome, summing to a channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instrument {
    outcomes: Vec<String>,
    ops: Vec<KrausOperation>,
}

impl Instrument {
    pub fn new(outcomes: Vec<String>, ops: Vec<KrausOperation>, tol: f64) -> Result<Self> {
        if outcomes.len() != ops.len() {
            return Err(Error::OutcomeMismatch {
                expected: ops.len(),
                found: outcomes.len(),
            });
        }
        let Some(first) = ops.first() else {
            return Err(Error::InvalidInstrument(ValidationReport {
                violations: vec![Violation {
                    kind: ViolationKind::Shape,
                    magnitude: 1.0,
                }],
            }));
        };
        let d = first.dim_in;
        for op in &ops {
            if op.dim_in != d || op.dim_out != d {
                return Err(Error::dims(format!("{d} -> {d} operation"), format!("{} -> {}", op.dim_in, op.dim_out)));
            }
        }
        let ins = Self { outcomes, ops };
        let defect = ins.total_channel().trace_preservation_defect();
        if defect > tol {
            return Err(Error::InvalidInstrument(ValidationReport {
                violations: vec![Violation {
                    kind: ViolationKind::Completeness,
                    magnitude: defect,
                }],
            }));
        }
        Ok(ins)
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim_in
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn ops(&self) -> &[KrausOperation] {
        &self.ops
    }

    pub fn op(&self, x: usize) -> &KrausOperation {
        &self.ops[x]
    }

    /// The channel `I_X = sum_x I_x`.
    pub fn total_channel(&self) -> KrausOperation {
        let d = self.dim();
        let kraus = self.ops.iter().flat_map(|op| op.kraus.iter().cloned()).collect();
        KrausOperation::from_kraus_unchecked(d, d, kraus)
    }

    /// Largest operation-wise Choi distance; infinite if outcome counts differ.
    pub fn choi_distance(&self, other: &Instrument) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.ops
            .iter()
            .zip(&other.ops)
            .fold(0.0, |acc, (a, b)| acc.max(choi_distance(a, b)))
    }
}

/// The observable `E_x = I_x^*(1)` measured by an instrument.
pub fn induced_observable(ins: &Instrument) -> Povm {
    let effects = ins.ops.iter().map(|op| op.effect().hermitian_part()).collect();
    Povm::from_parts_unchecked(ins.outcomes.clone(), effects)
}

/// `I_x(T) = sqrt(E_x) T sqrt(E_x)`.
pub fn luders_instrument(e: &Povm) -> Result<Instrument> {
    let ops = e
        .effects()
        .iter()
        .map(|ex| psd_sqrt(ex).map(KrausOperation::single))
        .collect::<Result<Vec<_>>>()?;
    Ok(Instrument {
        outcomes: e.outcomes().to_vec(),
        ops,
    })
}

/// Outcome probability with its normalised post-measurement state. The state
/// is `None` (the null operator) when the probability is at most
/// [`P_THRESHOLD`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalState {
    pub probability: f64,
    pub state: Option<State>,
}

impl ConditionalState {
    /// The conditional operator, with the zero matrix for null outcomes.
    pub fn operator(&self, dim: usize) -> ComplexMatrix {
        match &self.state {
            Some(s) => s.matrix().clone(),
            None => ComplexMatrix::zeros(dim, dim),
        }
    }
}

pub fn conditional_state(ins: &Instrument, rho: &State, x: usize) -> Result<ConditionalState> {
    if rho.dim() != ins.dim() {
        return Err(Error::dims(ins.dim(), rho.dim()));
    }
    let Some(op) = ins.ops.get(x) else {
        return Err(Error::UnknownOutcome(x.to_string()));
    };
    let out = op.apply_unchecked(rho.matrix());
    let probability = clamp_probability(out.trace().re, &ins.outcomes[x])?;
    if probability <= P_THRESHOLD {
        return Ok(ConditionalState {
            probability,
            state: None,
        });
    }
    let state = State::from_matrix_unchecked(out.scale_real(1.0 / probability).hermitian_part());
    Ok(ConditionalState {
        probability,
        state: Some(state),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilityReport {
    pub repeatable: bool,
    /// `max_{x,y} |I_x^*(E_y) - delta_xy E_x|`.
    pub max_violation: f64,
}

pub fn is_repeatable(ins: &Instrument, tol: f64) -> RepeatabilityReport {
    let e = induced_observable(ins);
    let mut worst: f64 = 0.0;
    for (x, op) in ins.ops.iter().enumerate() {
        for (y, ey) in e.effects().iter().enumerate() {
            let lhs = op.apply_dual_unchecked(ey);
            let dev = if x == y {
                lhs.distance(e.effect(x))
            } else {
                lhs.max_norm()
            };
            worst = worst.max(dev);
        }
    }
    RepeatabilityReport {
        repeatable: worst <= tol,
        max_violation: worst,
    }
}

fn require_sharp(z: &Povm) -> Result<()> {
    let deviation = z.sharpness_defect();
    if deviation > DEFAULT_TOL {
        return Err(Error::NotSharp { deviation });
    }
    Ok(())
}

/// `J_x(T) = Phi(Z_x T Z_x)` for a sharp `z` and a channel `phi`.
pub fn sequential_sharp_instrument(z: &Povm, phi: &KrausOperation) -> Result<Instrument> {
    require_sharp(z)?;
    if phi.dim_in != z.dim() || phi.dim_out != z.dim() {
        return Err(Error::dims(format!("channel on dimension {}", z.dim()), format!("{} -> {}", phi.dim_in, phi.dim_out)));
    }
    let deviation = phi.trace_preservation_defect();
    if deviation > DEFAULT_TOL {
        return Err(Error::NotTracePreserving { deviation });
    }
    let d = z.dim();
    let ops = z
        .effects()
        .iter()
        .map(|zx| KrausOperation::from_kraus_unchecked(d, d, phi.kraus.iter().map(|k| k * zx).collect()))
        .collect();
    Ok(Instrument {
        outcomes: z.outcomes().to_vec(),
        ops,
    })
}

/// The channel `Phi(T) = sum_x tr[Z_x T] / 2 * Z_x`, which depolarises each
/// rank-2 block of a sharp pointer. It is its own dual.
pub fn block_depolarising_channel(z: &Povm) -> Result<KrausOperation> {
    require_sharp(z)?;
    for (index, zx) in z.effects().iter().enumerate() {
        let rank = eigh(zx)?.values.iter().filter(|&&l| (l - 1.0).abs() <= UNIT_EIGEN_TOL).count();
        if rank != 2 {
            return Err(Error::EffectRank {
                index,
                rank,
                expected: 2,
            });
        }
    }
    let d = z.dim();
    KrausOperation::from_map(d, d, |t| {
        let mut out = ComplexMatrix::zeros(d, d);
        for zx in z.effects() {
            out += &zx.scale((zx * t).trace() * 0.5);
        }
        out
    })
}

/// Repeatable pointer instrument `J_x(T) = Phi(Z_x T Z_x)` with `Phi` the
/// block depolarising channel. Requires every effect of `z` to be a rank-2
/// projector.
pub fn depolarising_objectification(z: &Povm) -> Result<Instrument> {
    let phi = block_depolarising_channel(z)?;
    sequential_sharp_instrument(z, &phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::c;

    fn sx() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn plus() -> State {
        State::pure(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap()
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
    fn apply_examples() {
        let rho = plus();
        let id = KrausOperation::identity(2);
        assert!(id.apply(rho.matrix()).unwrap().approx_eq(rho.matrix(), 1e-15));

        let l = luders_instrument(&Povm::computational_basis(2)).unwrap();
        let out = l.op(0).apply(rho.matrix()).unwrap();
        assert!(out.approx_eq(&ComplexMatrix::basis_projector(2, 0).scale_real(0.5), 1e-14));

        let total = l.total_channel().apply(rho.matrix()).unwrap();
        assert!((total.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn apply_dimension_mismatch() {
        let id = KrausOperation::identity(2);
        assert!(id.apply(&ComplexMatrix::identity(3)).is_err());
        assert!(id.apply_dual(&ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn dual_examples() {
        let b = ComplexMatrix::from_fn(2, 2, |i, j| c(i as f64 + 0.5, j as f64 - 0.2));
        assert!(KrausOperation::identity(2).apply_dual(&b).unwrap().approx_eq(&b, 1e-15));

        let e = unsharp();
        let l = luders_instrument(&e).unwrap();
        for x in 0..2 {
            let dual = l.op(x).apply_dual(&ComplexMatrix::identity(2)).unwrap();
            assert!(dual.approx_eq(e.effect(x), 1e-14));
        }
    }

    #[test]
    fn luders_of_unsharp_povm_uses_psd_roots() {
        // sqrt(0.5 I ± 0.3 sx) = a I ± b sx with a = (sqrt .8 + sqrt .2)/2, b = (sqrt .8 - sqrt .2)/2
        let a = (0.8f64.sqrt() + 0.2f64.sqrt()) / 2.0;
        let b = (0.8f64.sqrt() - 0.2f64.sqrt()) / 2.0;
        let i = ComplexMatrix::identity(2);
        let l = luders_instrument(&unsharp()).unwrap();
        let k_plus = &i.scale_real(a) + &sx().scale_real(b);
        let k_minus = &i.scale_real(a) - &sx().scale_real(b);
        assert!(l.op(0).kraus()[0].approx_eq(&k_plus, 1e-14));
        assert!(l.op(1).kraus()[0].approx_eq(&k_minus, 1e-14));
        assert!(induced_observable(&l).distance(&unsharp()) < 1e-10);
    }

    #[test]
    fn luders_of_sharp_povm_is_projective() {
        let z = Povm::computational_basis(3);
        let l = luders_instrument(&z).unwrap();
        for x in 0..3 {
            assert!(l.op(x).kraus()[0].approx_eq(z.effect(x), 1e-14));
        }
        assert!(induced_observable(&l).distance(&z) < 1e-14);
    }

    #[test]
    fn conditional_state_examples() {
        let l = luders_instrument(&Povm::computational_basis(2)).unwrap();
        let cs = conditional_state(&l, &plus(), 0).unwrap();
        assert!((cs.probability - 0.5).abs() < 1e-14);
        assert!(cs.state.unwrap().matrix().approx_eq(&ComplexMatrix::basis_projector(2, 0), 1e-14));

        let cs = conditional_state(&l, &State::basis(2, 0), 1).unwrap();
        assert_eq!(cs.probability, 0.0);
        assert!(cs.state.is_none());
        assert_eq!(cs.operator(2), ComplexMatrix::zeros(2, 2));

        // <sigma_x> in the "+" branch: 4ab = 0.8 - 0.2
        let l = luders_instrument(&unsharp()).unwrap();
        let cs = conditional_state(&l, &State::basis(2, 0), 0).unwrap();
        assert!((cs.probability - 0.5).abs() < 1e-14);
        let sx_mean = sx().expectation(cs.state.unwrap().matrix());
        assert!((sx_mean - 0.6).abs() < 1e-12);
    }

    #[test]
    fn repeatability_examples() {
        assert!(is_repeatable(&luders_instrument(&Povm::computational_basis(2)).unwrap(), 1e-9).repeatable);
        let rep = is_repeatable(&luders_instrument(&unsharp()).unwrap(), 1e-9);
        assert!(!rep.repeatable);
        assert!(rep.max_violation > 0.1);
    }

    #[test]
    fn sequential_with_identity_channel_is_luders() {
        let z = Povm::computational_basis(3);
        let seq = sequential_sharp_instrument(&z, &KrausOperation::identity(3)).unwrap();
        let lud = luders_instrument(&z).unwrap();
        assert!(seq.choi_distance(&lud) < 1e-14);
        assert!(induced_observable(&seq).distance(&z) < 1e-14);
    }

    #[test]
    fn sequential_rejects_unsharp_pointer() {
        assert!(matches!(
            sequential_sharp_instrument(&unsharp(), &KrausOperation::identity(2)),
            Err(Error::NotSharp { .. })
        ));
    }

    #[test]
    fn depolarising_single_block() {
        // N = 1: Z = {I} on C^2, J^*(diag(0,1)) = tr[diag(0,1)]/2 * I
        let z = Povm::with_indexed_outcomes(vec![ComplexMatrix::identity(2)], 1e-9).unwrap();
        let j = depolarising_objectification(&z).unwrap();
        let dual = j.op(0).apply_dual(&ComplexMatrix::from_real_diagonal(&[0.0, 1.0])).unwrap();
        assert!(dual.approx_eq(&ComplexMatrix::identity(2).scale_real(0.5), 1e-12));
        assert!(induced_observable(&j).distance(&z) < 1e-12);
        assert!(is_repeatable(&j, 1e-9).repeatable);
    }

    #[test]
    fn depolarising_is_repeatable_for_several_blocks() {
        for n in 1..=3 {
            let d = 2 * n;
            let effects = (0..n)
                .map(|x| &ComplexMatrix::basis_projector(d, 2 * x) + &ComplexMatrix::basis_projector(d, 2 * x + 1))
                .collect();
            let z = Povm::with_indexed_outcomes(effects, 1e-9).unwrap();
            let j = depolarising_objectification(&z).unwrap();
            assert!(is_repeatable(&j, 1e-9).repeatable, "N = {n}");
            assert!(induced_observable(&j).distance(&z) < 1e-12);
        }
    }

    #[test]
    fn depolarising_rejects_wrong_rank() {
        let err = depolarising_objectification(&Povm::computational_basis(2)).unwrap_err();
        assert!(matches!(err, Error::EffectRank { rank: 1, expected: 2, .. }));
    }

    #[test]
    fn choi_round_trip() {
        let l = luders_instrument(&unsharp()).unwrap();
        let op = l.op(0);
        let rebuilt = KrausOperation::from_choi(2, 2, &op.choi()).unwrap();
        assert!(choi_distance(op, &rebuilt) < 1e-12);
        let from_map = KrausOperation::from_map(2, 2, |t| op.apply(t).unwrap()).unwrap();
        assert!(choi_distance(op, &from_map) < 1e-12);
    }

    #[test]
    fn instrument_rejects_incomplete_ops() {
        let ops = vec![KrausOperation::single(ComplexMatrix::basis_projector(2, 0))];
        assert!(matches!(Instrument::new(vec!["0".into()], ops, 1e-9), Err(Error::InvalidInstrument(_))));
    }
}
