use std::time::Instant;

use objectify::schemes::YanaseReport;
use objectify::thermo::{conditional_energetics, ConditionalEnergetics, FixedPointReport};
use objectify::{
    check_yanase, daimon_report, fixed_point_check, heat_variance, measurement_energetics, objectify, DaimonScenario,
    EnergeticsReport, Hamiltonian, InfoReport, VarianceReport,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoEntry {
    pub alpha: f64,
    #[serde(flatten)]
    pub report: InfoReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub tol: f64,
    pub system_dim: usize,
    pub apparatus_dim: usize,
    pub outcomes: Vec<String>,
    pub times: Vec<f64>,
    pub energetics: EnergeticsReport,
    pub variance: Vec<VarianceReport>,
    pub info: Vec<InfoEntry>,
    pub yanase: YanaseReport,
    pub fixed_point: FixedPointReport,
    /// Outcome-conditioned quantities; present only for a sharp pointer
    /// satisfying the Yanase condition.
    pub conditional: Option<ConditionalEnergetics>,
    pub notes: Vec<String>,
    /// Wall-clock time, recorded only on request so that reports stay
    /// byte-identical across runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Replaces the scenario's `alpha` list when non-empty.
    pub alphas: Vec<f64>,
    pub timing: bool,
}

pub fn run(sc: &Scenario, opts: &RunOptions) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let fail = |context: &str| {
        let origin = sc.origin.clone();
        let context = context.to_string();
        move |source| CliError::Runtime { origin, context, source }
    };
    let alphas = if opts.alphas.is_empty() { &sc.alphas } else { &opts.alphas };
    let (m, j) = (&sc.scheme, &sc.pointer);

    let energetics = measurement_energetics(m, j, &sc.h_s, &sc.h_a, &sc.rho, sc.tol).map_err(fail("energetics"))?;
    let ensemble = objectify(m, j, &sc.rho, sc.tol).map_err(fail("objectification"))?;
    let h = Hamiltonian::additive(&sc.h_s, &sc.h_a);

    let mut variance = Vec::with_capacity(alphas.len());
    let mut info = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        variance.push(heat_variance(&ensemble, &h, alpha).map_err(fail("heat variance"))?);
        let daimon = DaimonScenario::with_default_memory(ensemble.clone(), sc.times.clone(), h.clone(), alpha)
            .map_err(fail("information transfer"))?;
        let report = daimon_report(&daimon).map_err(fail("information transfer"))?;
        info.push(InfoEntry { alpha, report });
    }

    let yanase = check_yanase(m.z(), &sc.h_a, sc.tol).map_err(fail("Yanase check"))?;
    let fixed_point = fixed_point_check(j, &sc.h_a, sc.tol).map_err(fail("fixed-point check"))?;

    let mut notes = Vec::new();
    let sharp = m.z().is_sharp(sc.tol);
    let conditional = if sharp && yanase.holds {
        Some(conditional_energetics(m, j, &sc.h_s, &sc.h_a, &sc.rho, sc.tol).map_err(fail("conditional energetics"))?)
    } else {
        let reason = if sharp { "the Yanase condition fails" } else { "the pointer observable is not sharp" };
        notes.push(format!("conditional energetics skipped: {reason}"));
        None
    };
    if !yanase.holds {
        notes.push(format!(
            "Yanase condition violated: max ||[Z_x, H_A]|| = {:.3e}; objectified outcomes are not stable in time",
            yanase.max_commutator_norm
        ));
    }
    if !fixed_point.holds {
        notes.push(format!(
            "H_A is not a fixed point of the dual pointer channel (deviation {:.3e}); average heat may be nonzero",
            fixed_point.deviation
        ));
    }
    if sc.times_sampled {
        notes.push("evolution times drawn from the seeded grid".to_string());
    }

    Ok(RunReport {
        scenario: sc.name.clone(),
        scenario_sha256: sc.sha256.clone(),
        seed: sc.seed,
        tol: sc.tol,
        system_dim: m.dim_s(),
        apparatus_dim: m.dim_a(),
        outcomes: m.z().outcomes().to_vec(),
        times: sc.times.clone(),
        energetics,
        variance,
        info,
        yanase,
        fixed_point,
        conditional,
        notes,
        timing: opts.timing.then(|| Timing {
            seconds: start.elapsed().as_secs_f64(),
        }),
    })
}
