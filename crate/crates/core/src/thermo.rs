//! Work, heat and internal energy of a measurement, the classical/quantum
//! split of the heat variance, and the outcome-conditioned variants.
//!
//! `H = H_S ⊗ 1 + 1 ⊗ H_A` throughout. Outcomes with probability at most
//! [`P_THRESHOLD`] contribute zero to every per-outcome quantity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instruments::{Instrument, P_THRESHOLD};
use crate::matrix::{frac_power, partial_trace, tensor, ComplexMatrix, Keep};
use crate::objects::{Hamiltonian, State};
use crate::schemes::{check_yanase, objectify, MeasurementScheme, ObjectificationEnsemble};

fn check_hamiltonians(m: &MeasurementScheme, h_s: &Hamiltonian, h_a: &Hamiltonian) -> Result<()> {
    if h_s.dim() != m.dim_s() {
        return Err(Error::dims(format!("system Hamiltonian of dimension {}", m.dim_s()), h_s.dim()));
    }
    if h_a.dim() != m.dim_a() {
        return Err(Error::dims(format!("apparatus Hamiltonian of dimension {}", m.dim_a()), h_a.dim()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkReport {
    /// `tr[H (rho' - rho ⊗ xi)]`.
    pub work: f64,
    /// `tr[H_S (I_X(rho) - rho)] + tr[H_A (eta - xi)]`.
    pub marginal_form: f64,
    pub residual: f64,
}

pub fn premeasurement_work(m: &MeasurementScheme, h_s: &Hamiltonian, h_a: &Hamiltonian, rho: &State) -> Result<WorkReport> {
    check_hamiltonians(m, h_s, h_a)?;
    if rho.dim() != m.dim_s() {
        return Err(Error::dims(m.dim_s(), rho.dim()));
    }
    let h = Hamiltonian::additive(h_s, h_a);
    let input = tensor(rho.matrix(), m.xi().matrix());
    let after = &(m.u() * &input) * &m.u().adjoint();
    let work = h.energy(&after) - h.energy(&input);
    let sys = partial_trace(&after, m.dims(), Keep::First)?;
    let eta = partial_trace(&after, m.dims(), Keep::Second)?;
    let marginal_form = h_s.energy(&(&sys - rho.matrix())) + h_a.energy(&(&eta - m.xi().matrix()));
    Ok(WorkReport {
        work,
        marginal_form,
        residual: (work - marginal_form).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeEnergetics {
    pub outcome: String,
    pub probability: f64,
    pub delta_e: f64,
    pub delta_e_s: f64,
    pub delta_e_a: f64,
    pub heat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergeticsReport {
    pub outcomes: Vec<OutcomeEnergetics>,
    pub work: f64,
    pub work_marginal_form: f64,
    pub mean_delta_e: f64,
    pub mean_heat: f64,
    /// `<dE> - W - <Q>`.
    pub first_law_residual: f64,
    /// `tr[H_A (J_X(eta) - eta)]`.
    pub mean_heat_apparatus: f64,
}

pub fn measurement_energetics(
    m: &MeasurementScheme,
    j: &Instrument,
    h_s: &Hamiltonian,
    h_a: &Hamiltonian,
    rho: &State,
    tol: f64,
) -> Result<EnergeticsReport> {
    let work = premeasurement_work(m, h_s, h_a, rho)?;
    let ens = objectify(m, j, rho, tol)?;
    let h = Hamiltonian::additive(h_s, h_a);
    let input = tensor(rho.matrix(), m.xi().matrix());
    let premeasured = ens.premeasured().expect("objectify records the premeasured state");
    let (e_in, e_pre) = (h.energy(&input), h.energy(premeasured));
    let (e_s_in, e_a_in) = (h_s.energy(rho.matrix()), h_a.energy(m.xi().matrix()));

    let mut outcomes = Vec::with_capacity(ens.len());
    for x in 0..ens.len() {
        let probability = ens.probs()[x];
        let mut rec = OutcomeEnergetics {
            outcome: ens.outcomes()[x].clone(),
            probability,
            delta_e: 0.0,
            delta_e_s: 0.0,
            delta_e_a: 0.0,
            heat: 0.0,
        };
        if !ens.is_null(x) {
            let e_final = h.energy(ens.sigma(x));
            rec.delta_e = e_final - e_in;
            rec.delta_e_s = h_s.energy(&ens.system_marginal(x)) - e_s_in;
            rec.delta_e_a = h_a.energy(&ens.apparatus_marginal(x)) - e_a_in;
            rec.heat = e_final - e_pre;
        }
        outcomes.push(rec);
    }
    let mean_delta_e = outcomes.iter().map(|o| o.probability * o.delta_e).sum::<f64>();
    let mean_heat = outcomes.iter().map(|o| o.probability * o.heat).sum::<f64>();

    let eta = partial_trace(premeasured, m.dims(), Keep::Second)?;
    let after = j.total_channel().apply(&eta)?;
    let mean_heat_apparatus = h_a.energy(&(&after - &eta));

    Ok(EnergeticsReport {
        outcomes,
        work: work.work,
        work_marginal_form: work.marginal_form,
        mean_delta_e,
        mean_heat,
        first_law_residual: mean_delta_e - work.work - mean_heat,
        mean_heat_apparatus,
    })
}

/// `V = V_qu + V_cl` for one observable and state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceSplit {
    pub total: f64,
    pub quantum: f64,
    pub classical: f64,
}

impl VarianceSplit {
    const ZERO: VarianceSplit = VarianceSplit {
        total: 0.0,
        quantum: 0.0,
        classical: 0.0,
    };
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidExponent(alpha));
    }
    Ok(())
}

/// Wigner-Yanase-Dyson skew information `tr[A^2 rho] - tr[A rho^a A rho^(1-a)]`.
pub fn skew_information(a: &ComplexMatrix, rho: &ComplexMatrix, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if a.rows() != rho.rows() {
        return Err(Error::dims(a.rows(), rho.rows()));
    }
    let ra = frac_power(rho, alpha)?;
    let rb = frac_power(rho, 1.0 - alpha)?;
    let a2 = a * a;
    Ok(a2.trace_product(rho) - (&(a * &ra) * a).trace_product(&rb))
}

pub(crate) fn split(a: &ComplexMatrix, rho: &ComplexMatrix, alpha: f64) -> Result<VarianceSplit> {
    let mean = a.trace_product(rho);
    let total = (a * a).trace_product(rho) - mean * mean;
    let quantum = skew_information(a, rho, alpha)?;
    Ok(VarianceSplit {
        total,
        quantum,
        classical: total - quantum,
    })
}

pub fn variance_decomposition(a: &Hamiltonian, rho: &State, alpha: f64) -> Result<VarianceSplit> {
    check_alpha(alpha)?;
    if a.dim() != rho.dim() {
        return Err(Error::dims(a.dim(), rho.dim()));
    }
    split(a.matrix(), rho.matrix(), alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub alpha: f64,
    /// `<Q^2> - <Q>^2` from the heat distribution.
    pub var_q: f64,
    /// `V(H, sigma_bar) - sum_x p_x V(H, sigma_x)`.
    pub var_q_formula: f64,
    pub residual: f64,
    pub delta_v_qu: f64,
    pub delta_v_cl: f64,
    /// `|var_q_formula - (delta_v_cl - delta_v_qu)|`.
    pub split_residual: f64,
    pub sigma_bar: VarianceSplit,
    pub per_outcome: Vec<VarianceSplit>,
}

pub fn heat_variance(ens: &ObjectificationEnsemble, h: &Hamiltonian, alpha: f64) -> Result<VarianceReport> {
    check_alpha(alpha)?;
    let n = ens.dims().0 * ens.dims().1;
    if h.dim() != n {
        return Err(Error::dims(format!("joint Hamiltonian of dimension {n}"), h.dim()));
    }
    let hm = h.matrix();
    let reference = ens.premeasured().unwrap_or(ens.sigma_bar());
    let e_ref = h.energy(reference);

    let mut mean_q = 0.0;
    let mut mean_q2 = 0.0;
    let mut per_outcome = Vec::with_capacity(ens.len());
    for x in 0..ens.len() {
        if ens.is_null(x) {
            per_outcome.push(VarianceSplit::ZERO);
            continue;
        }
        let p = ens.probs()[x];
        let q = h.energy(ens.sigma(x)) - e_ref;
        mean_q += p * q;
        mean_q2 += p * q * q;
        per_outcome.push(split(hm, ens.sigma(x), alpha)?);
    }
    let var_q = mean_q2 - mean_q * mean_q;

    let bar = split(hm, ens.sigma_bar(), alpha)?;
    let weighted = |f: fn(&VarianceSplit) -> f64| -> f64 {
        ens.probs().iter().zip(&per_outcome).map(|(p, s)| p * f(s)).sum()
    };
    let var_q_formula = bar.total - weighted(|s| s.total);
    let delta_v_qu = weighted(|s| s.quantum) - bar.quantum;
    let delta_v_cl = bar.classical - weighted(|s| s.classical);

    Ok(VarianceReport {
        alpha,
        var_q,
        var_q_formula,
        residual: (var_q - var_q_formula).abs(),
        delta_v_qu,
        delta_v_cl,
        split_residual: (var_q_formula - (delta_v_cl - delta_v_qu)).abs(),
        sigma_bar: bar,
        per_outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub holds: bool,
    /// `||J_X^*(H_A) - H_A||` in operator norm.
    pub deviation: f64,
    pub image: ComplexMatrix,
}

/// Whether `H_A` is a fixed point of the dual pointer channel, which makes the
/// average heat vanish for every input.
pub fn fixed_point_check(j: &Instrument, h_a: &Hamiltonian, tol: f64) -> Result<FixedPointReport> {
    let image = j.total_channel().apply_dual(h_a.matrix())?;
    let deviation = (&image - h_a.matrix()).op_norm();
    Ok(FixedPointReport {
        holds: deviation <= tol,
        deviation,
        image,
    })
}

/// `tr[H_S I_x(rho)] / p - tr[E_x (H_S rho + rho H_S)] / (2 p)`, zero when
/// `p = tr[E_x rho]` is at most [`P_THRESHOLD`].
pub fn conditional_system_energy_change(ins: &Instrument, h_s: &Hamiltonian, rho: &State, x: usize) -> Result<f64> {
    if rho.dim() != ins.dim() || h_s.dim() != ins.dim() {
        return Err(Error::dims(ins.dim(), rho.dim().max(h_s.dim())));
    }
    let Some(op) = ins.ops().get(x) else {
        return Err(Error::UnknownOutcome(x.to_string()));
    };
    let out = op.apply(rho.matrix())?;
    let p = out.trace().re;
    if p <= P_THRESHOLD {
        return Ok(0.0);
    }
    let effect = op.effect();
    let weak = (&effect * &(h_s.matrix() * rho.matrix())).trace().re;
    Ok((h_s.energy(&out) - weak) / p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRecord {
    pub outcome: String,
    pub probability: f64,
    pub delta_e_s: f64,
    pub delta_e: f64,
    pub work: f64,
    /// `tr[H (sigma_x - sigma'_x)]` against the Lüders-objectified branch.
    pub heat: f64,
    /// `tr[H_A (xi_x - xi'_x)]`.
    pub heat_apparatus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEnergetics {
    pub outcomes: Vec<ConditionalRecord>,
    pub mean_work: f64,
    /// The unconditioned premeasurement work, for comparison with `mean_work`.
    pub work: f64,
}

/// Outcome-conditioned energy changes with the symmetrised weak value of the
/// initial energy. Requires a sharp pointer satisfying the Yanase condition.
pub fn conditional_energetics(
    m: &MeasurementScheme,
    j: &Instrument,
    h_s: &Hamiltonian,
    h_a: &Hamiltonian,
    rho: &State,
    tol: f64,
) -> Result<ConditionalEnergetics> {
    check_hamiltonians(m, h_s, h_a)?;
    let deviation = m.z().sharpness_defect();
    if deviation > tol {
        return Err(Error::NotSharp { deviation });
    }
    let yanase = check_yanase(m.z(), h_a, tol)?;
    if !yanase.holds {
        return Err(Error::YanaseViolated {
            norm: yanase.max_commutator_norm,
        });
    }
    let ens = objectify(m, j, rho, tol)?;
    let work = premeasurement_work(m, h_s, h_a, rho)?.work;
    let h = Hamiltonian::additive(h_s, h_a);
    let id_s = ComplexMatrix::identity(m.dim_s());
    let input = tensor(rho.matrix(), m.xi().matrix());
    let h_input = h.matrix() * &input;
    let premeasured = ens.premeasured().expect("objectify records the premeasured state");
    let u_dag = m.u().adjoint();

    let mut outcomes = Vec::with_capacity(ens.len());
    for x in 0..ens.len() {
        let p = ens.probs()[x];
        let mut rec = ConditionalRecord {
            outcome: ens.outcomes()[x].clone(),
            probability: p,
            delta_e_s: 0.0,
            delta_e: 0.0,
            work: 0.0,
            heat: 0.0,
            heat_apparatus: 0.0,
        };
        if !ens.is_null(x) {
            let pointer = tensor(&id_s, m.z().effect(x));
            let heisenberg = &(&u_dag * &pointer) * m.u();
            // Re tr[Z_x H (rho ⊗ xi)] equals the symmetrised form for Hermitian operands.
            let weak = (&heisenberg * &h_input).trace().re / p;
            let effect_s = partial_trace(&(&heisenberg * &tensor(&id_s, m.xi().matrix())), m.dims(), Keep::First)?;
            let weak_s = (&effect_s * &(h_s.matrix() * rho.matrix())).trace().re / p;

            let luders = (&(&pointer * premeasured) * &pointer).scale_real(1.0 / p);
            rec.delta_e_s = h_s.energy(&ens.system_marginal(x)) - weak_s;
            rec.delta_e = h.energy(ens.sigma(x)) - weak;
            rec.work = h.energy(&luders) - weak;
            rec.heat = h.energy(&(ens.sigma(x) - &luders));
            let xi_luders = partial_trace(&luders, m.dims(), Keep::Second)?;
            rec.heat_apparatus = h_a.energy(&(&ens.apparatus_marginal(x) - &xi_luders));
        }
        outcomes.push(rec);
    }
    let mean_work = outcomes.iter().map(|r| r.probability * r.work).sum();
    Ok(ConditionalEnergetics {
        outcomes,
        mean_work,
        work,
    })
}
