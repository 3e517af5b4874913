//! Measurement schemes `(xi, U, Z)`, premeasurement, pointer objectification
//! and the normal scheme realising a Lüders instrument.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instruments::{induced_observable, is_repeatable, Instrument, KrausOperation, P_THRESHOLD};
use crate::matrix::{commutator, complete_isometry, herm_unitary, partial_trace, psd_sqrt, tensor, ComplexMatrix, Keep};
use crate::objects::{validate_state, Hamiltonian, Povm, State};

/// Apparatus state `xi`, coupling unitary `u` on system ⊗ apparatus, and the
/// pointer observable `z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementScheme {
    dim_s: usize,
    dim_a: usize,
    xi: State,
    u: ComplexMatrix,
    z: Povm,
}

impl MeasurementScheme {
    pub fn new(dim_s: usize, xi: State, u: ComplexMatrix, z: Povm, tol: f64) -> Result<Self> {
        let dim_a = xi.dim();
        if z.dim() != dim_a {
            return Err(Error::dims(format!("pointer on dimension {dim_a}"), z.dim()));
        }
        let n = dim_s * dim_a;
        if u.rows() != n || u.cols() != n {
            return Err(Error::dims(format!("{n}x{n} coupling"), format!("{}x{}", u.rows(), u.cols())));
        }
        let deviation = u.unitarity_defect();
        if deviation > tol {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { dim_s, dim_a, xi, u, z })
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_s, self.dim_a)
    }

    pub fn xi(&self) -> &State {
        &self.xi
    }

    pub fn u(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn z(&self) -> &Povm {
        &self.z
    }

    /// `(1 ⊗ J_x)` for every outcome, as operations on the joint space.
    fn lifted(&self, j: &Instrument) -> Vec<KrausOperation> {
        j.ops().iter().map(|op| op.lift_second(self.dim_s)).collect()
    }

    fn check_system(&self, rho: &State) -> Result<()> {
        if rho.dim() != self.dim_s {
            return Err(Error::dims(format!("system state of dimension {}", self.dim_s), rho.dim()));
        }
        Ok(())
    }

    /// Requires `j` to measure `z` and to be repeatable.
    pub fn check_pointer_instrument(&self, j: &Instrument, tol: f64) -> Result<()> {
        if j.dim() != self.dim_a {
            return Err(Error::dims(format!("apparatus instrument on dimension {}", self.dim_a), j.dim()));
        }
        if j.len() != self.z.len() {
            return Err(Error::OutcomeMismatch {
                expected: self.z.len(),
                found: j.len(),
            });
        }
        let deviation = induced_observable(j).distance(&self.z);
        if deviation > tol {
            return Err(Error::Incompatible { deviation });
        }
        let rep = is_repeatable(j, tol);
        if !rep.repeatable {
            return Err(Error::NotRepeatable {
                max_violation: rep.max_violation,
            });
        }
        Ok(())
    }
}

/// Premeasured joint state `U (rho ⊗ xi) U^dag` and its apparatus marginal.
pub fn premeasure(m: &MeasurementScheme, rho: &State) -> Result<(State, State)> {
    m.check_system(rho)?;
    let joint = premeasured_matrix(m, rho);
    let eta = partial_trace(&joint, m.dims(), Keep::Second)?.hermitian_part();
    Ok((State::from_matrix_unchecked(joint), State::from_matrix_unchecked(eta)))
}

fn premeasured_matrix(m: &MeasurementScheme, rho: &State) -> ComplexMatrix {
    let input = tensor(rho.matrix(), m.xi.matrix());
    (&(&m.u * &input) * &m.u.adjoint()).hermitian_part()
}

/// `I_x(T) = tr_A[(1 ⊗ Z_x) U (T ⊗ xi) U^dag]`, in Kraus form.
pub fn induced_instrument(m: &MeasurementScheme) -> Result<Instrument> {
    let id_s = ComplexMatrix::identity(m.dim_s);
    let u_dag = m.u.adjoint();
    let ops = m
        .z
        .effects()
        .iter()
        .map(|zx| {
            let pointer = tensor(&id_s, zx);
            KrausOperation::from_map(m.dim_s, m.dim_s, |t| {
                let evolved = &(&m.u * &tensor(t, m.xi.matrix())) * &u_dag;
                partial_trace(&(&pointer * &evolved), m.dims(), Keep::First).expect("dims fixed by scheme")
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(m.z.outcomes().to_vec(), ops, 1e-8)
}

/// Outcome-resolved objectified states `sigma_x` on system ⊗ apparatus.
/// Outcomes with probability at most [`P_THRESHOLD`] carry the zero matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectificationEnsemble {
    outcomes: Vec<String>,
    dims: (usize, usize),
    probs: Vec<f64>,
    sigmas: Vec<ComplexMatrix>,
    sigma_bar: ComplexMatrix,
    premeasured: Option<ComplexMatrix>,
}

impl ObjectificationEnsemble {
    /// Builds an ensemble from explicit data, checking normalisation of the
    /// weights and validity of every non-null member.
    pub fn new(
        outcomes: Vec<String>,
        dims: (usize, usize),
        probs: Vec<f64>,
        sigmas: Vec<ComplexMatrix>,
        tol: f64,
    ) -> Result<Self> {
        if probs.len() != sigmas.len() || outcomes.len() != probs.len() {
            return Err(Error::OutcomeMismatch {
                expected: outcomes.len(),
                found: probs.len().min(sigmas.len()),
            });
        }
        if let Some(&p) = probs.iter().find(|&&p| p < -tol) {
            return Err(Error::InvalidDistribution {
                reason: "negative probability".into(),
                magnitude: -p,
            });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidDistribution {
                reason: "probabilities do not sum to one".into(),
                magnitude: (total - 1.0).abs(),
            });
        }
        let n = dims.0 * dims.1;
        let mut cleaned = Vec::with_capacity(sigmas.len());
        for (&p, s) in probs.iter().zip(sigmas) {
            if s.rows() != n || s.cols() != n {
                return Err(Error::dims(format!("{n}x{n} joint state"), format!("{}x{}", s.rows(), s.cols())));
            }
            if p <= P_THRESHOLD {
                cleaned.push(ComplexMatrix::zeros(n, n));
                continue;
            }
            let report = validate_state(&s, tol);
            if !report.is_valid() {
                return Err(Error::InvalidState(report));
            }
            cleaned.push(s);
        }
        let probs: Vec<f64> = probs.into_iter().map(|p| p.max(0.0)).collect();
        let sigma_bar = mix(&probs, &cleaned, n);
        Ok(Self {
            outcomes,
            dims,
            probs,
            sigmas: cleaned,
            sigma_bar,
            premeasured: None,
        })
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sigmas(&self) -> &[ComplexMatrix] {
        &self.sigmas
    }

    pub fn sigma(&self, x: usize) -> &ComplexMatrix {
        &self.sigmas[x]
    }

    /// `sum_x p_x sigma_x`.
    pub fn sigma_bar(&self) -> &ComplexMatrix {
        &self.sigma_bar
    }

    /// The premeasured state, when the ensemble came from [`objectify`].
    pub fn premeasured(&self) -> Option<&ComplexMatrix> {
        self.premeasured.as_ref()
    }

    pub fn is_null(&self, x: usize) -> bool {
        self.probs[x] <= P_THRESHOLD
    }

    /// `tr_A[sigma_x]`.
    pub fn system_marginal(&self, x: usize) -> ComplexMatrix {
        partial_trace(&self.sigmas[x], self.dims, Keep::First).expect("ensemble dims are consistent")
    }

    /// `tr_S[sigma_x]`.
    pub fn apparatus_marginal(&self, x: usize) -> ComplexMatrix {
        partial_trace(&self.sigmas[x], self.dims, Keep::Second).expect("ensemble dims are consistent")
    }

    /// `max_x |tr[(1 ⊗ Z_x) sigma_x] - 1|` over non-null outcomes.
    pub fn objectification_defect(&self, z: &Povm) -> f64 {
        let id = ComplexMatrix::identity(self.dims.0);
        (0..self.len())
            .filter(|&x| !self.is_null(x))
            .map(|x| (tensor(&id, z.effect(x)).trace_product(&self.sigmas[x]) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn mix(probs: &[f64], states: &[ComplexMatrix], n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n, n);
    for (&p, s) in probs.iter().zip(states) {
        out += &s.scale_real(p);
    }
    out
}

/// `sigma_x = (1 ⊗ J_x)(U (rho ⊗ xi) U^dag) / p_x` for a repeatable pointer
/// instrument `j` compatible with the pointer observable.
pub fn objectify(m: &MeasurementScheme, j: &Instrument, rho: &State, tol: f64) -> Result<ObjectificationEnsemble> {
    m.check_system(rho)?;
    m.check_pointer_instrument(j, tol)?;
    let joint = premeasured_matrix(m, rho);
    let n = m.dim_s * m.dim_a;
    let mut probs = Vec::with_capacity(j.len());
    let mut sigmas = Vec::with_capacity(j.len());
    let mut sigma_bar = ComplexMatrix::zeros(n, n);
    for op in m.lifted(j) {
        let out = op.apply_unchecked(&joint).hermitian_part();
        sigma_bar += &out;
        let p = out.trace().re.max(0.0);
        probs.push(p);
        if p <= P_THRESHOLD {
            sigmas.push(ComplexMatrix::zeros(n, n));
        } else {
            sigmas.push(out.scale_real(1.0 / p));
        }
    }
    Ok(ObjectificationEnsemble {
        outcomes: m.z.outcomes().to_vec(),
        dims: m.dims(),
        probs,
        sigmas,
        sigma_bar,
        premeasured: Some(joint),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub independent: bool,
    pub max_deviation: f64,
}

/// Compares the unnormalised system marginals `tr_A[(1 ⊗ J_x)(rho')]` under
/// two pointer instruments.
pub fn implementation_independence_check(
    m: &MeasurementScheme,
    j1: &Instrument,
    j2: &Instrument,
    rho: &State,
    tol: f64,
) -> Result<IndependenceReport> {
    m.check_system(rho)?;
    for j in [j1, j2] {
        if j.dim() != m.dim_a {
            return Err(Error::dims(m.dim_a, j.dim()));
        }
        let deviation = induced_observable(j).distance(&m.z);
        if deviation > tol {
            return Err(Error::Incompatible { deviation });
        }
    }
    let joint = premeasured_matrix(m, rho);
    let mut worst: f64 = 0.0;
    for (a, b) in m.lifted(j1).iter().zip(m.lifted(j2).iter()) {
        let ma = partial_trace(&a.apply_unchecked(&joint), m.dims(), Keep::First)?;
        let mb = partial_trace(&b.apply_unchecked(&joint), m.dims(), Keep::First)?;
        worst = worst.max(ma.distance(&mb));
    }
    Ok(IndependenceReport {
        independent: worst <= tol,
        max_deviation: worst,
    })
}

/// Normal scheme for the Lüders instrument of `e`: the apparatus is
/// `C^n` for `n` outcomes, `xi = |e_0><e_0|`, `Z` the computational basis and
/// `U (psi ⊗ e_0) = sum_x sqrt(E_x) psi ⊗ e_x`. Returns the scheme with the
/// pointer Hamiltonian `diag(pointer_energies)`.
pub fn normal_scheme_for_luders(e: &Povm, pointer_energies: &[f64]) -> Result<(MeasurementScheme, Hamiltonian)> {
    let n = e.len();
    if pointer_energies.len() != n {
        return Err(Error::OutcomeMismatch {
            expected: n,
            found: pointer_energies.len(),
        });
    }
    let d = e.dim();
    let roots = e.effects().iter().map(psd_sqrt).collect::<Result<Vec<_>>>()?;
    let v = ComplexMatrix::from_fn(d * n, d, |row, i| roots[row % n].get(row / n, i));
    let w = complete_isometry(&v)?;

    // Column i of V is the image of |i> ⊗ |e_0>, i.e. of input index i * n.
    let mut order = vec![usize::MAX; d * n];
    for i in 0..d {
        order[i * n] = i;
    }
    for (next, slot) in (d..).zip(order.iter_mut().filter(|s| **s == usize::MAX)) {
        *slot = next;
    }
    let u = ComplexMatrix::from_fn(d * n, d * n, |row, col| w.get(row, order[col]));

    let z = Povm::from_parts_unchecked(
        e.outcomes().to_vec(),
        (0..n).map(|x| ComplexMatrix::basis_projector(n, x)).collect(),
    );
    let scheme = MeasurementScheme::new(d, State::basis(n, 0), u, z, 1e-8)?;
    Ok((scheme, Hamiltonian::diagonal(pointer_energies)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YanaseReport {
    pub holds: bool,
    pub max_commutator_norm: f64,
}

/// `max_x ||[Z_x, H_A]||` in operator norm.
pub fn check_yanase(z: &Povm, h_a: &Hamiltonian, tol: f64) -> Result<YanaseReport> {
    if z.dim() != h_a.dim() {
        return Err(Error::dims(z.dim(), h_a.dim()));
    }
    let norm = z
        .effects()
        .iter()
        .map(|zx| commutator(zx, h_a.matrix()).op_norm())
        .fold(0.0, f64::max);
    Ok(YanaseReport {
        holds: norm <= tol,
        max_commutator_norm: norm,
    })
}

/// `tr[(1 ⊗ Z_x(g)) sigma_x]` with `Z_x(g) = V^dag Z_x V`, `V = exp(-i g H_A)`.
#[allow(clippy::too_many_arguments)]
pub fn stability_probability(
    m: &MeasurementScheme,
    j: &Instrument,
    rho: &State,
    x: usize,
    h_a: &Hamiltonian,
    g: f64,
    tol: f64,
) -> Result<f64> {
    if h_a.dim() != m.dim_a {
        return Err(Error::dims(m.dim_a, h_a.dim()));
    }
    let ens = objectify(m, j, rho, tol)?;
    if x >= ens.len() {
        return Err(Error::UnknownOutcome(x.to_string()));
    }
    if ens.is_null(x) {
        return Err(Error::NegligibleProbability {
            outcome: ens.outcomes[x].clone(),
            probability: ens.probs[x],
        });
    }
    let v = herm_unitary(h_a.matrix(), g)?;
    let zg = &(&v.adjoint() * m.z.effect(x)) * &v;
    Ok(tensor(&ComplexMatrix::identity(m.dim_s), &zg).trace_product(ens.sigma(x)))
}
