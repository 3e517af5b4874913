//! Randomised invariant suite.
//!
//! Every instance draws from its own ChaCha8 stream derived from the suite
//! seed, so results do not depend on the number of worker threads and the
//! summary is byte-identical across runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::thread;

use objectify::info::block_skew_identity_check;
use objectify::instruments::{conditional_state, induced_observable, sequential_sharp_instrument};
use objectify::matrix::{complete_isometry, eigh, frac_power, herm_unitary, partial_trace, tensor, ComplexMatrix, Keep};
use objectify::objects::eigenvalue_one_projector;
use objectify::sample::{
    ginibre, random_block_data, random_channel, random_distribution, random_energies, random_hamiltonian,
    random_hermitian, random_povm, random_scheme, random_state, random_unitary, RandomScheme,
};
use objectify::schemes::ObjectificationEnsemble;
use objectify::thermo::{conditional_system_energy_change, skew_information};
use objectify::{
    born_probabilities, conditional_energetics, daimon_report, fixed_point_check, heat_variance,
    implementation_independence_check, induced_instrument, luders_instrument, measurement_energetics,
    normal_scheme_for_luders, objectify, premeasurement_work, shannon_entropy, stability_probability,
    von_neumann_entropy, DaimonScenario, Hamiltonian, MeasurementScheme, Povm, Result, State,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const ALPHAS: [f64; 3] = [0.25, 0.5, 0.75];
pub const STABILITY_TIMES: [f64; 3] = [0.1, 1.0, 10.0];
/// A negative control fires when its probe exceeds this value.
pub const CONTROL_THRESHOLD: f64 = 1e-3;

const SCHEME_STREAM: u64 = 1 << 32;
const BLOCK_STREAM: u64 = 2 << 32;

pub struct Invariant {
    pub name: &'static str,
    pub tolerance: f64,
    pub statement: &'static str,
}

const fn inv(name: &'static str, tolerance: f64, statement: &'static str) -> Invariant {
    Invariant { name, tolerance, statement }
}

/// Each check reports a nonnegative residual that must not exceed the
/// tolerance.
pub const INVARIANTS: &[Invariant] = &[
    inv("tensor_associativity", 1e-12, "(a⊗b)⊗c = a⊗(b⊗c)"),
    inv("partial_trace_trace", 1e-12, "tr[tr_A t] = tr[t]"),
    inv("fractional_powers", 1e-10, "rho^a rho^(1-a) = rho"),
    inv("opposite_evolutions", 1e-10, "exp(-igh) exp(igh) = 1"),
    inv("isometry_completion", 1e-10, "completed isometry is unitary and keeps its columns"),
    inv("born_normalisation", 1e-10, "Born probabilities sum to one"),
    inv("unit_projectors", 1e-9, "P_x E_y = delta_xy P_x for unit-eigenspace projectors"),
    inv("duality", 1e-10, "tr[J*(B) T] = tr[B J(T)]"),
    inv("repeatable_outputs", 1e-9, "repeatable outputs are orthogonal and live in unit eigenspaces"),
    inv("luders_ideality", 1e-9, "Lüders operations leave definite states unchanged"),
    inv("sequential_observable", 1e-12, "sequential instruments measure the sharp pointer"),
    inv("normal_scheme_luders", 1e-9, "the normal scheme realises the Lüders instrument"),
    inv("objectification", 1e-9, "tr[(1⊗Z_x) sigma_x] = 1"),
    inv("objectified_orthogonality", 1e-9, "tr[sigma_x sigma_y] = 0 for x != y"),
    inv("system_marginals", 1e-9, "p_x tr_A[sigma_x] = I_x(rho) and tr_A[sigma_bar] = I_X(rho)"),
    inv("implementation_independence", 1e-10, "system marginals do not depend on the pointer instrument"),
    inv("yanase_stability", 1e-9, "pointer readings are stable in time under the Yanase condition"),
    inv("first_law", 1e-10, "<dE> - W - <Q> = 0"),
    inv("work_marginal_form", 1e-10, "work equals its marginal form"),
    inv("heat_apparatus_form", 1e-10, "<Q> = tr[H_A(J_X(eta) - eta)]"),
    inv("energy_additivity", 1e-10, "dE(x) = dE_S(x) + dE_A(x)"),
    inv("variance_identity", 1e-10, "Var Q = V(H, sigma_bar) - sum p_x V(H, sigma_x)"),
    inv("variance_split", 1e-10, "Var Q = dV_cl - dV_qu"),
    inv("lieb_positivity", 1e-10, "dV_qu >= 0 and dV_cl >= 0"),
    inv("classicality", 1e-9, "dV_qu = 0 for repeatable pointers under the Yanase condition"),
    inv("fixed_point_pointer_function", 1e-10, "H_A = sum e_x Z_x is fixed by any repeatable pointer"),
    inv("fixed_point_luders_yanase", 1e-10, "Lüders pointer of a sharp Z fixes a Yanase H_A"),
    inv("weak_value_work", 1e-10, "sum p_x W~(x) = W"),
    inv("conditional_heat_luders", 1e-10, "Q~(x) = 0 under Lüders objectification"),
    inv("conditional_work_commuting", 1e-10, "W~(x) = 0 when [U, H] = 0"),
    inv("ensemble_consistency", 1e-10, "sum_k p(k|x) dE~_S(x|k) = dE~_S(x)"),
    inv("entropy_additivity", 1e-10, "S(rho⊗xi) = S(rho) + S(xi)"),
    inv("holevo_bound", 1e-10, "chi <= H"),
    inv("entropy_transfer", 1e-9, "no entropy is lost to the observer under the Yanase condition"),
    inv("skew_transfer", 1e-9, "no skew information is lost to the observer under the Yanase condition"),
    inv("skew_ensemble_identity", 1e-9, "V_qu of the memory-record state = sum p_x V_qu(H, sigma_x)"),
    inv("block_skew_identity", 1e-10, "V_qu(H, sum p_i |i><i|⊗sigma_i) = sum p_i V_qu(h2, sigma_i)"),
    inv("skew_bounds", 1e-10, "0 <= V_qu <= V"),
    inv("skew_convexity", 1e-10, "sum p_i V_qu(A, rho_i) >= V_qu(A, sum p_i rho_i)"),
    inv("orthogonal_mixing", 1e-9, "S(sum p_i rho_i) = H(p) + sum p_i S(rho_i) for orthogonal rho_i"),
];

pub struct Control {
    pub name: &'static str,
    pub statement: &'static str,
}

/// Probes that must exceed [`CONTROL_THRESHOLD`] somewhere; each breaks the
/// premise of an invariant above and shows that the check can fail.
pub const CONTROLS: &[Control] = &[
    Control {
        name: "classicality_without_yanase",
        statement: "dV_qu with H_A not commuting with Z",
    },
    Control {
        name: "entropy_loss_without_yanase",
        statement: "-entropy_gap with H_A not commuting with Z",
    },
    Control {
        name: "instability_without_yanase",
        statement: "1 - stability probability with H_A not commuting with Z",
    },
    Control {
        name: "depolarising_heat",
        statement: "<Q> for the qubit depolarising objectification with eta = |0><0|",
    },
];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub schemes: usize,
    pub block_states: usize,
    /// Zero means one worker per available core.
    pub threads: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dims: vec![2, 3, 4],
            schemes: 216,
            block_states: 120,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub name: String,
    pub statement: String,
    pub tolerance: f64,
    pub checks: usize,
    pub passed: usize,
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlResult {
    pub name: String,
    pub statement: String,
    pub threshold: f64,
    pub largest: f64,
    pub fired: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub schemes: usize,
    pub block_states: usize,
    pub invariants: Vec<InvariantResult>,
    pub controls: Vec<ControlResult>,
    pub errors: Vec<String>,
    pub passed: bool,
}

#[derive(Default)]
struct Observations {
    residuals: Vec<(&'static str, f64)>,
    probes: Vec<(&'static str, f64)>,
}

impl Observations {
    fn check(&mut self, name: &'static str, residual: f64) {
        self.residuals.push((name, residual));
    }

    fn probe(&mut self, name: &'static str, value: f64) {
        self.probes.push((name, value));
    }
}

#[derive(Clone, Copy)]
enum Task {
    Scheme { id: usize, dim_s: usize, dim_a: usize },
    Block { id: usize, blocks: usize, dim: usize },
    Fixtures,
}

impl Task {
    fn label(&self) -> String {
        match *self {
            Task::Scheme { id, dim_s, dim_a } => format!("scheme {id} ({dim_s}x{dim_a})"),
            Task::Block { id, blocks, dim } => format!("block state {id} ({blocks} blocks, dim {dim})"),
            Task::Fixtures => "fixtures".to_string(),
        }
    }
}

fn stream(seed: u64, offset: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(offset);
    rng
}

fn tasks(cfg: &SuiteConfig) -> Vec<Task> {
    let pairs: Vec<(usize, usize)> = cfg.dims.iter().flat_map(|&s| cfg.dims.iter().map(move |&a| (s, a))).collect();
    let mut out = Vec::with_capacity(cfg.schemes + cfg.block_states + 1);
    if !pairs.is_empty() {
        out.extend((0..cfg.schemes).map(|id| {
            let (dim_s, dim_a) = pairs[id % pairs.len()];
            Task::Scheme { id, dim_s, dim_a }
        }));
    }
    out.extend((0..cfg.block_states).map(|id| Task::Block {
        id,
        blocks: 2 + id % 2,
        dim: 2 + (id / 2) % 2,
    }));
    out.push(Task::Fixtures);
    out
}

fn run_task(seed: u64, task: Task) -> Result<Observations> {
    let mut obs = Observations::default();
    match task {
        Task::Scheme { id, dim_s, dim_a } => scheme_checks(&mut stream(seed, SCHEME_STREAM + id as u64), dim_s, dim_a, &mut obs)?,
        Task::Block { id, blocks, dim } => block_checks(&mut stream(seed, BLOCK_STREAM + id as u64), blocks, dim, &mut obs)?,
        Task::Fixtures => fixture_checks(&mut obs)?,
    }
    Ok(obs)
}

pub fn suite(cfg: &SuiteConfig) -> SuiteSummary {
    let tasks = tasks(cfg);
    let workers = match cfg.threads {
        0 => thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(tasks.len())
    .max(1);

    let mut results: Vec<(usize, Result<Observations>)> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let tasks = &tasks;
                scope.spawn(move || {
                    (w..tasks.len())
                        .step_by(workers)
                        .map(|i| (i, run_task(cfg.seed, tasks[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("suite worker panicked")).collect()
    });
    results.sort_by_key(|(i, _)| *i);

    let mut stats: BTreeMap<&'static str, (usize, usize, f64)> = BTreeMap::new();
    let mut probes: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut errors = Vec::new();
    for (i, result) in results {
        match result {
            Ok(obs) => {
                for (name, residual) in obs.residuals {
                    let tol = tolerance(name);
                    let entry = stats.entry(name).or_insert((0, 0, 0.0));
                    entry.0 += 1;
                    if residual <= tol {
                        entry.1 += 1;
                    }
                    if residual.is_nan() || residual > entry.2 {
                        entry.2 = residual;
                    }
                }
                for (name, value) in obs.probes {
                    let entry = probes.entry(name).or_insert(f64::NEG_INFINITY);
                    *entry = entry.max(value);
                }
            }
            Err(e) => errors.push(format!("{}: {e}", tasks[i].label())),
        }
    }

    let invariants: Vec<InvariantResult> = INVARIANTS
        .iter()
        .map(|inv| {
            let (checks, passed, worst) = stats.get(inv.name).copied().unwrap_or((0, 0, 0.0));
            InvariantResult {
                name: inv.name.to_string(),
                statement: inv.statement.to_string(),
                tolerance: inv.tolerance,
                checks,
                passed,
                worst,
            }
        })
        .collect();
    let controls: Vec<ControlResult> = CONTROLS
        .iter()
        .map(|c| {
            let largest = probes.get(c.name).copied().unwrap_or(f64::NEG_INFINITY);
            ControlResult {
                name: c.name.to_string(),
                statement: c.statement.to_string(),
                threshold: CONTROL_THRESHOLD,
                largest,
                fired: largest > CONTROL_THRESHOLD,
            }
        })
        .collect();
    let passed = errors.is_empty()
        && invariants.iter().all(|r| r.checks > 0 && r.passed == r.checks)
        && controls.iter().all(|c| c.fired);
    SuiteSummary {
        seed: cfg.seed,
        dims: cfg.dims.clone(),
        schemes: cfg.schemes,
        block_states: cfg.block_states,
        invariants,
        controls,
        errors,
        passed,
    }
}

fn tolerance(name: &str) -> f64 {
    INVARIANTS
        .iter()
        .find(|inv| inv.name == name)
        .unwrap_or_else(|| panic!("unregistered invariant {name}"))
        .tolerance
}

impl SuiteSummary {
    pub fn invariant(&self, name: &str) -> Option<&InvariantResult> {
        self.invariants.iter().find(|r| r.name == name)
    }

    pub fn control(&self, name: &str) -> Option<&ControlResult> {
        self.controls.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "invariant suite: seed {}, dims {:?}, {} schemes, {} block states",
            self.seed, self.dims, self.schemes, self.block_states
        );
        let _ = writeln!(s, "{:<30} {:>9} {:>7} {:>7} {:>10}  status", "invariant", "tol", "checks", "passed", "worst");
        for r in &self.invariants {
            let status = if r.checks > 0 && r.passed == r.checks { "ok" } else { "FAIL" };
            let _ = writeln!(
                s,
                "{:<30} {:>9.1e} {:>7} {:>7} {:>10.2e}  {status}",
                r.name, r.tolerance, r.checks, r.passed, r.worst
            );
        }
        let _ = writeln!(s, "negative controls (expected to break the invariant they probe):");
        for c in &self.controls {
            let status = if c.fired { "fired as expected" } else { "DID NOT FIRE" };
            let _ = writeln!(s, "{:<30} > {:>7.1e} largest {:>10.3e}  {status}", c.name, c.threshold, c.largest);
        }
        for e in &self.errors {
            let _ = writeln!(s, "error: {e}");
        }
        let failures = self.invariants.iter().map(|r| r.checks - r.passed).sum::<usize>()
            + self.controls.iter().filter(|c| !c.fired).count()
            + self.errors.len();
        let _ = writeln!(s, "result: {} ({failures} failures)", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn unit_projectors(z: &Povm) -> Result<Vec<ComplexMatrix>> {
    z.effects().iter().map(|e| eigenvalue_one_projector(e, 1e-8)).collect()
}

fn core_checks(rng: &mut ChaCha8Rng, rs: &RandomScheme, obs: &mut Observations) -> Result<()> {
    let (ds, da) = rs.scheme.dims();
    let (a, b, c) = (ginibre(rng, ds, ds), ginibre(rng, da, da), ginibre(rng, 2, 2));
    obs.check("tensor_associativity", tensor(&tensor(&a, &b), &c).distance(&tensor(&a, &tensor(&b, &c))));

    let t = ginibre(rng, ds * da, ds * da);
    let pt = [Keep::First, Keep::Second]
        .into_iter()
        .map(|keep| Ok((partial_trace(&t, (ds, da), keep)?.trace() - t.trace()).norm()))
        .collect::<Result<Vec<_>>>()?;
    obs.check("partial_trace_trace", max_of(pt));

    let rho = rs.rho.matrix();
    let fp = ALPHAS
        .iter()
        .map(|&alpha| Ok((&frac_power(rho, alpha)? * &frac_power(rho, 1.0 - alpha)?).distance(rho)))
        .collect::<Result<Vec<_>>>()?;
    obs.check("fractional_powers", max_of(fp));

    let g = rng.random_range(-10.0..10.0);
    let back = &herm_unitary(rs.h_s.matrix(), g)? * &herm_unitary(rs.h_s.matrix(), -g)?;
    obs.check("opposite_evolutions", back.distance(&ComplexMatrix::identity(ds)));

    let k = rng.random_range(1..=da);
    let u = random_unitary(rng, da);
    let v = ComplexMatrix::from_fn(da, k, |i, j| u.get(i, j));
    let w = complete_isometry(&v)?;
    let kept = ComplexMatrix::from_fn(da, k, |i, j| w.get(i, j)).distance(&v);
    obs.check("isometry_completion", w.unitarity_defect().max(kept));

    let z = rs.scheme.z();
    let p = born_probabilities(z, rs.scheme.xi())?;
    obs.check("born_normalisation", (p.iter().sum::<f64>() - 1.0).abs());

    let proj = unit_projectors(z)?;
    let mut worst: f64 = 0.0;
    for (x, px) in proj.iter().enumerate() {
        worst = worst.max((px * px).distance(px)).max(px.hermiticity_defect());
        for (y, ey) in z.effects().iter().enumerate() {
            let expected = if x == y { px.clone() } else { ComplexMatrix::zeros(da, da) };
            worst = worst.max((px * ey).distance(&expected));
        }
    }
    obs.check("unit_projectors", worst);
    Ok(())
}

fn instrument_checks(rng: &mut ChaCha8Rng, rs: &RandomScheme, obs: &mut Observations) -> Result<()> {
    let j = &rs.pointer;
    let da = j.dim();
    let (b, t) = (ginibre(rng, da, da), ginibre(rng, da, da));
    let mut worst: f64 = 0.0;
    for op in j.ops() {
        let lhs = (&op.apply_dual(&b)? * &t).trace();
        let rhs = (&b * &op.apply(&t)?).trace();
        worst = worst.max((lhs - rhs).norm());
    }
    obs.check("duality", worst);

    let eta = random_state(rng, da);
    let proj = unit_projectors(rs.scheme.z())?;
    let outs = (0..j.len())
        .map(|x| Ok(conditional_state(j, &eta, x)?.operator(da)))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for x in 0..outs.len() {
        worst = worst.max((&(&proj[x] * &outs[x]) * &proj[x]).distance(&outs[x]));
        for y in x + 1..outs.len() {
            worst = worst.max((&outs[x] * &outs[y]).trace().norm());
        }
    }
    obs.check("repeatable_outputs", worst);

    let z = rs.scheme.z();
    let luders = rs.luders_pointer();
    let x = rng.random_range(0..z.len());
    let raw = random_state(rng, da).into_matrix();
    let definite = State::normalized(&(&(&proj[x] * &raw) * &proj[x]), 1e-9)?;
    obs.check("luders_ideality", luders.op(x).apply(definite.matrix())?.distance(definite.matrix()));

    if rs.sharp {
        let rank = rng.random_range(1..=3);
        let phi = random_channel(rng, da, rank);
        let seq = sequential_sharp_instrument(z, &phi)?;
        obs.check("sequential_observable", induced_observable(&seq).distance(z));
    }

    let ds = rs.scheme.dim_s();
    let n = rng.random_range(2..=3);
    let e = random_povm(rng, ds, n);
    let energies: Vec<f64> = (0..n).map(|x| x as f64).collect();
    let (normal, _) = normal_scheme_for_luders(&e, &energies)?;
    obs.check("normal_scheme_luders", induced_instrument(&normal)?.choi_distance(&luders_instrument(&e)?));
    Ok(())
}

fn objectification_checks(
    rng: &mut ChaCha8Rng,
    rs: &RandomScheme,
    ens: &ObjectificationEnsemble,
    obs: &mut Observations,
) -> Result<()> {
    let m = &rs.scheme;
    obs.check("objectification", ens.objectification_defect(m.z()));
    let mut worst: f64 = 0.0;
    for x in 0..ens.len() {
        for y in x + 1..ens.len() {
            worst = worst.max(ens.sigma(x).trace_product(ens.sigma(y)).abs());
        }
    }
    obs.check("objectified_orthogonality", worst);

    let induced = induced_instrument(m)?;
    let mut worst = partial_trace(ens.sigma_bar(), m.dims(), Keep::First)?
        .distance(&induced.total_channel().apply(rs.rho.matrix())?);
    for x in 0..ens.len() {
        let unnormalised = ens.system_marginal(x).scale_real(ens.probs()[x]);
        worst = worst.max(unnormalised.distance(&induced.op(x).apply(rs.rho.matrix())?));
    }
    obs.check("system_marginals", worst);

    let others = [rs.luders_pointer(), rs.alternative_pointer(rng)];
    let mut worst: f64 = 0.0;
    for other in &others {
        if objectify::instruments::is_repeatable(other, 1e-9).repeatable {
            worst = worst.max(implementation_independence_check(m, &rs.pointer, other, &rs.rho, 1e-10)?.max_deviation);
        }
    }
    obs.check("implementation_independence", worst);

    let mut worst: f64 = 0.0;
    for x in (0..ens.len()).filter(|&x| !ens.is_null(x)) {
        for g in STABILITY_TIMES {
            worst = worst.max((stability_probability(m, &rs.pointer, &rs.rho, x, &rs.h_a, g, 1e-9)? - 1.0).abs());
        }
    }
    obs.check("yanase_stability", worst);
    Ok(())
}

fn thermo_checks(
    rng: &mut ChaCha8Rng,
    rs: &RandomScheme,
    ens: &ObjectificationEnsemble,
    obs: &mut Observations,
) -> Result<()> {
    let m = &rs.scheme;
    let rep = measurement_energetics(m, &rs.pointer, &rs.h_s, &rs.h_a, &rs.rho, 1e-9)?;
    obs.check("first_law", rep.first_law_residual.abs());
    obs.check("work_marginal_form", (rep.work - rep.work_marginal_form).abs());
    obs.check("heat_apparatus_form", (rep.mean_heat - rep.mean_heat_apparatus).abs());
    obs.check(
        "energy_additivity",
        max_of(rep.outcomes.iter().map(|o| (o.delta_e - o.delta_e_s - o.delta_e_a).abs())),
    );

    let h = Hamiltonian::additive(&rs.h_s, &rs.h_a);
    for alpha in ALPHAS {
        let v = heat_variance(ens, &h, alpha)?;
        obs.check("variance_identity", v.residual);
        obs.check("variance_split", v.split_residual);
        obs.check("lieb_positivity", max_of([-v.delta_v_qu, -v.delta_v_cl]));
        obs.check("classicality", v.delta_v_qu.abs());
    }

    let energies = random_energies(rng, m.z().len());
    let h_f = rs.pointer_function_hamiltonian(&energies);
    obs.check("fixed_point_pointer_function", fixed_point_check(&rs.pointer, &h_f, 1e-10)?.deviation);

    if rs.sharp {
        let luders = rs.luders_pointer();
        obs.check("fixed_point_luders_yanase", fixed_point_check(&luders, &rs.h_a, 1e-10)?.deviation);

        let cond = conditional_energetics(m, &rs.pointer, &rs.h_s, &rs.h_a, &rs.rho, 1e-9)?;
        obs.check("weak_value_work", (cond.mean_work - cond.work).abs());
        let cond = conditional_energetics(m, &luders, &rs.h_s, &rs.h_a, &rs.rho, 1e-9)?;
        obs.check("conditional_heat_luders", max_of(cond.outcomes.iter().map(|r| r.heat.abs())));
        commuting_coupling_check(rng, rs, obs)?;
    }

    let induced = induced_instrument(m)?;
    let d = induced.dim();
    let pk = random_distribution(rng, 2);
    let members = [random_state(rng, d), random_state(rng, d)];
    let rho = State::new(&members[0].matrix().scale_real(pk[0]) + &members[1].matrix().scale_real(pk[1]), 1e-9)?;
    let mut worst: f64 = 0.0;
    for x in 0..induced.len() {
        let effect = induced.op(x).effect();
        let px = effect.trace_product(rho.matrix());
        if px <= 1e-9 {
            continue;
        }
        let mut avg = 0.0;
        for (k, member) in members.iter().enumerate() {
            let pxk = effect.trace_product(member.matrix());
            if pxk > 1e-12 {
                avg += pk[k] * pxk / px * conditional_system_energy_change(&induced, &rs.h_s, member, x)?;
            }
        }
        worst = worst.max((avg - conditional_system_energy_change(&induced, &rs.h_s, &rho, x)?).abs());
    }
    obs.check("ensemble_consistency", worst);
    Ok(())
}

/// Replaces the coupling with a random unitary commuting with a degenerate
/// total Hamiltonian and checks that no conditional work is done.
fn commuting_coupling_check(rng: &mut ChaCha8Rng, rs: &RandomScheme, obs: &mut Observations) -> Result<()> {
    let (ds, da) = rs.scheme.dims();
    let levels: Vec<f64> = (0..ds).map(|_| rng.random_range(0..=2) as f64).collect();
    let w = random_unitary(rng, ds);
    let h_s = Hamiltonian::new(&(&w * &ComplexMatrix::from_real_diagonal(&levels)) * &w.adjoint(), 1e-9)?;
    let pointer_levels: Vec<f64> = (0..rs.scheme.z().len()).map(|x| (x % 3) as f64).collect();
    let h_a = rs.pointer_function_hamiltonian(&pointer_levels);
    let h = Hamiltonian::additive(&h_s, &h_a);

    let eig = eigh(h.matrix())?;
    let r = random_hermitian(rng, ds * da);
    let k = ComplexMatrix::from_fn(ds * da, ds * da, |a, b| {
        if (eig.values[a] - eig.values[b]).abs() <= 1e-9 {
            r.get(a, b)
        } else {
            objectify::C64::new(0.0, 0.0)
        }
    });
    let k = (&(&eig.vectors * &k) * &eig.vectors.adjoint()).hermitian_part();
    let u = herm_unitary(&k, 1.0)?;
    let scheme = MeasurementScheme::new(ds, rs.scheme.xi().clone(), u, rs.scheme.z().clone(), 1e-8)?;
    let cond = conditional_energetics(&scheme, &rs.pointer, &h_s, &h_a, &rs.rho, 1e-9)?;
    let work = premeasurement_work(&scheme, &h_s, &h_a, &rs.rho)?.work;
    obs.check(
        "conditional_work_commuting",
        max_of(cond.outcomes.iter().map(|r| r.work.abs()).chain([work.abs()])),
    );
    Ok(())
}

fn info_checks(
    rng: &mut ChaCha8Rng,
    rs: &RandomScheme,
    ens: &ObjectificationEnsemble,
    obs: &mut Observations,
) -> Result<()> {
    let joint = von_neumann_entropy(&rs.rho.tensor(rs.scheme.xi()))?;
    let parts = von_neumann_entropy(&rs.rho)? + von_neumann_entropy(rs.scheme.xi())?;
    obs.check("entropy_additivity", (joint - parts).abs());

    let times: Vec<f64> = (0..ens.len()).map(|x| 0.7 * x as f64 + rng.random_range(0.0..0.5)).collect();
    let h = Hamiltonian::additive(&rs.h_s, &rs.h_a);
    for alpha in ALPHAS {
        let rep = daimon_report(&DaimonScenario::with_default_memory(ens.clone(), times.clone(), h.clone(), alpha)?)?;
        obs.check("holevo_bound", max_of([rep.holevo_x - rep.shannon_h]));
        obs.check("entropy_transfer", rep.entropy_gap.abs());
        obs.check("skew_transfer", rep.skew_gap.abs());
        obs.check("skew_ensemble_identity", (rep.skew_total - rep.skew_total_direct).abs());
    }
    Ok(())
}

/// Same scheme with a random apparatus Hamiltonian, which generically breaks
/// the Yanase condition.
fn control_probes(
    rng: &mut ChaCha8Rng,
    rs: &RandomScheme,
    ens: &ObjectificationEnsemble,
    obs: &mut Observations,
) -> Result<()> {
    let h_a = random_hamiltonian(rng, rs.scheme.dim_a());
    let h = Hamiltonian::additive(&rs.h_s, &h_a);
    obs.probe("classicality_without_yanase", heat_variance(ens, &h, 0.5)?.delta_v_qu);
    let times: Vec<f64> = (0..ens.len()).map(|x| 0.3 + x as f64).collect();
    let rep = daimon_report(&DaimonScenario::with_default_memory(ens.clone(), times, h, 0.5)?)?;
    obs.probe("entropy_loss_without_yanase", -rep.entropy_gap);
    obs.check("holevo_bound", max_of([rep.holevo_x - rep.shannon_h]));
    obs.check("skew_transfer", max_of([rep.skew_gap]));
    if let Some(x) = (0..ens.len()).find(|&x| !ens.is_null(x)) {
        let p = stability_probability(&rs.scheme, &rs.pointer, &rs.rho, x, &h_a, 1.0, 1e-9)?;
        obs.probe("instability_without_yanase", 1.0 - p);
    }
    Ok(())
}

fn scheme_checks(rng: &mut ChaCha8Rng, dim_s: usize, dim_a: usize, obs: &mut Observations) -> Result<()> {
    let rs = random_scheme(rng, dim_s, dim_a)?;
    let ens = objectify(&rs.scheme, &rs.pointer, &rs.rho, 1e-9)?;
    core_checks(rng, &rs, obs)?;
    instrument_checks(rng, &rs, obs)?;
    objectification_checks(rng, &rs, &ens, obs)?;
    thermo_checks(rng, &rs, &ens, obs)?;
    info_checks(rng, &rs, &ens, obs)?;
    control_probes(rng, &rs, &ens, obs)
}

fn block_checks(rng: &mut ChaCha8Rng, blocks: usize, dim: usize, obs: &mut Observations) -> Result<()> {
    let (p, sigmas, h1, h2) = random_block_data(rng, blocks, dim);
    for alpha in ALPHAS {
        obs.check("block_skew_identity", block_skew_identity_check(&p, &sigmas, &h1, &h2, alpha)?.residual);
    }

    let a = h2.matrix();
    let mut mix = ComplexMatrix::zeros(dim, dim);
    for (pi, s) in p.iter().zip(&sigmas) {
        mix += &s.scale_real(*pi);
    }
    for alpha in ALPHAS {
        let mut avg = 0.0;
        for (pi, s) in p.iter().zip(&sigmas) {
            let state = State::new(s.clone(), 1e-9)?;
            let split = objectify::variance_decomposition(&h2, &state, alpha)?;
            obs.check(
                "skew_bounds",
                max_of([-split.quantum, split.quantum - split.total, (split.quantum + split.classical - split.total).abs()]),
            );
            avg += pi * split.quantum;
        }
        obs.check("skew_convexity", max_of([skew_information(a, &mix, alpha)? - avg]));
    }

    // Orthogonal states: the blocks embedded in a random basis of C^(blocks*dim).
    let n = blocks * dim;
    let w = random_unitary(rng, n);
    let mut total = ComplexMatrix::zeros(n, n);
    let mut avg = 0.0;
    for (i, (pi, s)) in p.iter().zip(&sigmas).enumerate() {
        let embedded = ComplexMatrix::from_fn(n, n, |r, c| {
            if r / dim == i && c / dim == i {
                s.get(r % dim, c % dim)
            } else {
                objectify::C64::new(0.0, 0.0)
            }
        });
        total += &(&(&w * &embedded) * &w.adjoint()).scale_real(*pi);
        avg += pi * von_neumann_entropy(&State::new(s.clone(), 1e-9)?)?;
    }
    let lhs = von_neumann_entropy(&State::new(total, 1e-9)?)?;
    obs.check("orthogonal_mixing", (lhs - shannon_entropy(&p)? - avg).abs());
    Ok(())
}

/// Fixed negative-control instances with known behaviour.
fn fixture_checks(obs: &mut Observations) -> Result<()> {
    let sx = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let id = ComplexMatrix::identity(2);
    let e = Povm::with_indexed_outcomes(vec![&id.scale_real(0.5) + &sx.scale_real(0.3), &id.scale_real(0.5) - &sx.scale_real(0.3)], 1e-9)?;
    let (m, _) = normal_scheme_for_luders(&e, &[0.0, 1.0])?;
    let j = luders_instrument(m.z())?;
    let ens = objectify(&m, &j, &State::basis(2, 0), 1e-9)?;
    let h = Hamiltonian::additive(&Hamiltonian::diagonal(&[0.0, 1.0]), &Hamiltonian::new(sx, 1e-12)?);
    obs.probe("classicality_without_yanase", heat_variance(&ens, &h, 0.5)?.delta_v_qu);
    let rep = daimon_report(&DaimonScenario::with_default_memory(ens, vec![0.3, 1.7], h, 0.5)?)?;
    obs.probe("entropy_loss_without_yanase", -rep.entropy_gap);

    let trivial = Povm::new(vec!["1".to_string()], vec![id], 1e-12)?;
    let dep = objectify::depolarising_objectification(&trivial)?;
    let scheme = MeasurementScheme::new(2, State::basis(2, 0), ComplexMatrix::identity(4), trivial, 1e-12)?;
    let h_d = Hamiltonian::diagonal(&[0.0, 1.0]);
    let rep = measurement_energetics(&scheme, &dep, &h_d, &h_d, &State::maximally_mixed(2), 1e-9)?;
    obs.probe("depolarising_heat", rep.mean_heat);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_is_thread_independent() {
        let cfg = SuiteConfig {
            seed: 7,
            dims: vec![2, 3],
            schemes: 8,
            block_states: 4,
            threads: 1,
        };
        let one = suite(&cfg);
        assert!(one.passed, "{}", one.render());
        let many = suite(&SuiteConfig { threads: 3, ..cfg });
        assert_eq!(one.render(), many.render());
    }

    #[test]
    fn registry_names_are_unique() {
        let mut names: Vec<_> = INVARIANTS.iter().map(|i| i.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), INVARIANTS.len());
    }
}
