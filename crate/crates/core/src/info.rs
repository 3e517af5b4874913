//! Entropies, Holevo information and the skew-information bookkeeping for
//! outcome information passed on by an intermediate agent (the "Daimon") who
//! records the outcome in a memory and lets each objectified state evolve for
//! an outcome-dependent time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instruments::P_THRESHOLD;
use crate::matrix::{eigh, hermitian_trace_norm, herm_unitary, tensor, ComplexMatrix};
use crate::objects::{Hamiltonian, State};
use crate::schemes::ObjectificationEnsemble;
use crate::thermo::skew_information;

/// Eigenvalues at or below this are dropped from entropy sums.
pub const ENTROPY_EIGEN_CUTOFF: f64 = 1e-12;

pub(crate) fn entropy_of(rho: &ComplexMatrix) -> Result<f64> {
    let eig = eigh(rho)?;
    Ok(eig
        .values
        .iter()
        .filter(|&&l| l > ENTROPY_EIGEN_CUTOFF)
        .map(|&l| -l * l.ln())
        .sum())
}

/// `-tr[rho ln rho]` in nats.
pub fn von_neumann_entropy(rho: &State) -> Result<f64> {
    entropy_of(rho.matrix())
}

fn check_distribution(p: &[f64], tol: f64) -> Result<()> {
    if let Some(&bad) = p.iter().find(|&&x| x < -tol || !x.is_finite()) {
        return Err(Error::InvalidDistribution {
            reason: "negative or non-finite probability".into(),
            magnitude: bad.abs(),
        });
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidDistribution {
            reason: "probabilities do not sum to one".into(),
            magnitude: (total - 1.0).abs(),
        });
    }
    Ok(())
}

/// `-sum p ln p` in nats, with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    check_distribution(p, 1e-9)?;
    Ok(p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum())
}

/// `S(sum p_x rho_x) - sum p_x S(rho_x)`.
pub fn holevo_information(probs: &[f64], states: &[ComplexMatrix]) -> Result<f64> {
    check_distribution(probs, 1e-9)?;
    if probs.len() != states.len() {
        return Err(Error::OutcomeMismatch {
            expected: probs.len(),
            found: states.len(),
        });
    }
    let Some(first) = states.first() else {
        return Ok(0.0);
    };
    let n = first.rows();
    let mut mix = ComplexMatrix::zeros(n, n);
    let mut avg = 0.0;
    for (&p, s) in probs.iter().zip(states) {
        if s.rows() != n {
            return Err(Error::dims(n, s.rows()));
        }
        if p <= P_THRESHOLD {
            continue;
        }
        mix += &s.scale_real(p);
        avg += p * entropy_of(s)?;
    }
    Ok(entropy_of(&mix)? - avg)
}

fn off_diagonal_magnitude(m: &ComplexMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i != j {
                worst = worst.max(m.get(i, j).norm());
            }
        }
    }
    worst
}

/// Objectified ensemble handed to the observer after outcome-dependent
/// evolution for times `g_x` under the joint Hamiltonian `h`, with the outcome
/// recorded in a memory with Hamiltonian `h_d` (diagonal in the record basis).
#[derive(Debug, Clone, PartialEq)]
pub struct DaimonScenario {
    ensemble: ObjectificationEnsemble,
    times: Vec<f64>,
    h: Hamiltonian,
    h_d: Hamiltonian,
    alpha: f64,
}

impl DaimonScenario {
    pub fn new(ensemble: ObjectificationEnsemble, times: Vec<f64>, h: Hamiltonian, h_d: Hamiltonian, alpha: f64) -> Result<Self> {
        let k = ensemble.len();
        if times.len() != k {
            return Err(Error::OutcomeMismatch {
                expected: k,
                found: times.len(),
            });
        }
        for first in 0..k {
            for second in first + 1..k {
                if times[first] == times[second] {
                    return Err(Error::DuplicateTimes { first, second });
                }
            }
        }
        let n = ensemble.dims().0 * ensemble.dims().1;
        if h.dim() != n {
            return Err(Error::dims(format!("joint Hamiltonian of dimension {n}"), h.dim()));
        }
        if h_d.dim() != k {
            return Err(Error::dims(format!("memory Hamiltonian of dimension {k}"), h_d.dim()));
        }
        let magnitude = off_diagonal_magnitude(h_d.matrix());
        if magnitude > 0.0 {
            return Err(Error::NotDiagonal { magnitude });
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidExponent(alpha));
        }
        Ok(Self {
            ensemble,
            times,
            h,
            h_d,
            alpha,
        })
    }

    /// Memory Hamiltonian `diag(0, 1, 2, ...)`.
    pub fn with_default_memory(ensemble: ObjectificationEnsemble, times: Vec<f64>, h: Hamiltonian, alpha: f64) -> Result<Self> {
        let energies: Vec<f64> = (0..ensemble.len()).map(|x| x as f64).collect();
        Self::new(ensemble, times, h, Hamiltonian::diagonal(&energies), alpha)
    }

    pub fn ensemble(&self) -> &ObjectificationEnsemble {
        &self.ensemble
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `sigma_x(g_x) = exp(-i g_x H) sigma_x exp(i g_x H)`.
    pub fn evolved(&self) -> Result<Vec<ComplexMatrix>> {
        self.ensemble
            .sigmas()
            .iter()
            .zip(&self.times)
            .map(|(s, &g)| {
                let v = herm_unitary(self.h.matrix(), g)?;
                Ok((&(&v * s) * &v.adjoint()).hermitian_part())
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    /// `S(sigma_bar(g))`.
    pub s_sigma_bar_g: f64,
    /// `sum_x p_x S(sigma_x)`.
    pub sum_p_s: f64,
    pub shannon_h: f64,
    pub holevo_x: f64,
    /// `chi - H`, never positive.
    pub entropy_gap: f64,
    /// `S(varrho)` of the memory-system-apparatus state.
    pub s_joint: f64,
    /// `V_qu(H_tot, varrho)` through the block identity.
    pub skew_total: f64,
    /// `V_qu(H_tot, varrho)` evaluated on the full joint space.
    pub skew_total_direct: f64,
    /// `V_qu(H, sigma_bar(g))`.
    pub skew_marginal: f64,
    /// `skew_marginal - skew_total`, never positive.
    pub skew_gap: f64,
    /// Largest pairwise trace distance among the evolved states.
    pub kappa: f64,
    /// `kappa * H`, an upper bound on `chi` shown for reference only.
    pub kappa_bound: f64,
}

pub fn daimon_report(sc: &DaimonScenario) -> Result<InfoReport> {
    let ens = &sc.ensemble;
    let probs = ens.probs();
    let evolved = sc.evolved()?;
    let live: Vec<usize> = (0..ens.len()).filter(|&x| !ens.is_null(x)).collect();
    let n = ens.dims().0 * ens.dims().1;
    let k = ens.len();

    let mut bar = ComplexMatrix::zeros(n, n);
    let mut sum_p_s = 0.0;
    let mut skew_total = 0.0;
    let mut joint = ComplexMatrix::zeros(k * n, k * n);
    for &x in &live {
        bar += &evolved[x].scale_real(probs[x]);
        sum_p_s += probs[x] * entropy_of(ens.sigma(x))?;
        skew_total += probs[x] * skew_information(sc.h.matrix(), &evolved[x], sc.alpha)?;
        joint += &tensor(&ComplexMatrix::basis_projector(k, x), &evolved[x].scale_real(probs[x]));
    }
    let s_sigma_bar_g = entropy_of(&bar)?;
    let shannon_h = shannon_entropy(probs)?;
    let holevo_x = s_sigma_bar_g - sum_p_s;

    let h_tot = Hamiltonian::additive(&sc.h_d, &sc.h);
    let skew_total_direct = skew_information(h_tot.matrix(), &joint, sc.alpha)?;
    let skew_marginal = skew_information(sc.h.matrix(), &bar, sc.alpha)?;

    let mut kappa: f64 = 0.0;
    for (i, &x) in live.iter().enumerate() {
        for &y in &live[i + 1..] {
            kappa = kappa.max(0.5 * hermitian_trace_norm(&(&evolved[x] - &evolved[y]))?);
        }
    }

    Ok(InfoReport {
        s_sigma_bar_g,
        sum_p_s,
        shannon_h,
        holevo_x,
        entropy_gap: holevo_x - shannon_h,
        s_joint: entropy_of(&joint)?,
        skew_total,
        skew_total_direct,
        skew_marginal,
        skew_gap: skew_marginal - skew_total,
        kappa,
        kappa_bound: kappa * shannon_h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewIdentity {
    /// `V_qu(h1 ⊗ 1 + 1 ⊗ h2, sum_i p_i |i><i| ⊗ sigma_i)`.
    pub lhs: f64,
    /// `sum_i p_i V_qu(h2, sigma_i)`.
    pub rhs: f64,
    pub residual: f64,
}

/// Compares the skew information of a block state with the average skew
/// information of its blocks. `h1` must be diagonal in the block basis.
pub fn block_skew_identity_check(
    probs: &[f64],
    sigmas: &[ComplexMatrix],
    h1: &Hamiltonian,
    h2: &Hamiltonian,
    alpha: f64,
) -> Result<SkewIdentity> {
    check_distribution(probs, 1e-9)?;
    if probs.len() != sigmas.len() {
        return Err(Error::OutcomeMismatch {
            expected: probs.len(),
            found: sigmas.len(),
        });
    }
    let k = probs.len();
    if h1.dim() != k {
        return Err(Error::dims(k, h1.dim()));
    }
    let magnitude = off_diagonal_magnitude(h1.matrix());
    if magnitude > 0.0 {
        return Err(Error::NotDiagonal { magnitude });
    }
    let d = h2.dim();
    let mut joint = ComplexMatrix::zeros(k * d, k * d);
    let mut rhs = 0.0;
    for (i, (&p, s)) in probs.iter().zip(sigmas).enumerate() {
        if s.rows() != d {
            return Err(Error::dims(d, s.rows()));
        }
        joint += &tensor(&ComplexMatrix::basis_projector(k, i), &s.scale_real(p));
        if p > P_THRESHOLD {
            rhs += p * skew_information(h2.matrix(), s, alpha)?;
        }
    }
    let h = Hamiltonian::additive(h1, h2);
    let lhs = skew_information(h.matrix(), &joint, alpha)?;
    Ok(SkewIdentity {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}
