//! Scenario files: JSON descriptions of a measurement scheme, pointer
//! instrument, Hamiltonians and parameter grids.
//!
//! Complex scalars are `[re, im]` pairs (a bare number is read as real) and
//! matrices are row-major nested arrays.

use std::fs;
use std::path::Path;

use objectify::objects::{validate_povm_parts, validate_state};
use objectify::{
    depolarising_objectification, luders_instrument, normal_scheme_for_luders, sequential_sharp_instrument, ComplexMatrix,
    Hamiltonian, Instrument, KrausOperation, MeasurementScheme, Povm, State, C64,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_ALPHA: f64 = 0.5;

/// Spacing and size of the grid that evolution times are drawn from when a
/// scenario does not list them.
const TIME_GRID_STEP: f64 = 0.25;
const TIME_GRID_LEN: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    fn value(self) -> C64 {
        match self {
            Scalar::Real(re) => C64::new(re, 0.0),
            Scalar::Complex([re, im]) => C64::new(re, im),
        }
    }
}

pub type MatrixSpec = Vec<Vec<Scalar>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<String>>,
    pub effects: Vec<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalLudersSpec {
    pub e: PovmSpec,
    pub pointer_energies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingSpec {
    /// Only `"identity"` is recognised.
    Named(String),
    Matrix(MatrixSpec),
    NormalLuders { normal_luders: NormalLudersSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequentialSpec {
    /// Kraus operators of the trace-preserving channel applied after the
    /// Lüders projection.
    pub channel: Vec<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointerSpec {
    /// `"luders"` or `"depolarising"`.
    Named(String),
    Sequential { sequential: SequentialSpec },
    /// One list of Kraus operators per pointer outcome.
    Kraus { kraus: Vec<Vec<MatrixSpec>> },
}

/// Scenario as written on disk, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub system_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apparatus_dim: Option<usize>,
    pub rho: MatrixSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<MatrixSpec>,
    pub u: CouplingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<PovmSpec>,
    pub j: PointerSpec,
    pub h_s: MatrixSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_a: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    pub tol: f64,
    /// Used when the file has no `seed`.
    pub default_seed: u64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            tol: objectify::matrix::DEFAULT_TOL,
            default_seed: 0,
        }
    }
}

/// Fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub origin: String,
    pub sha256: String,
    pub scheme: MeasurementScheme,
    pub pointer: Instrument,
    pub h_s: Hamiltonian,
    pub h_a: Hamiltonian,
    pub rho: State,
    pub alphas: Vec<f64>,
    /// Outcome-dependent evolution times, one per outcome.
    pub times: Vec<f64>,
    /// True when `times` were drawn from the seeded grid.
    pub times_sampled: bool,
    pub seed: u64,
    pub tol: f64,
}

pub fn load_scenario(path: &Path, opts: &LoadOptions) -> Result<Scenario, CliError> {
    let origin = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        origin: origin.clone(),
        message: e.to_string(),
    })?;
    Scenario::from_json(&text, &origin, opts)
}

impl Scenario {
    pub fn from_json(text: &str, origin: &str, opts: &LoadOptions) -> Result<Self, CliError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        let mut scenario = Self::from_file(&file, origin, opts)?;
        scenario.sha256 = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(scenario)
    }

    pub fn from_file(file: &ScenarioFile, origin: &str, opts: &LoadOptions) -> Result<Self, CliError> {
        let mut v = Validator {
            tol: opts.tol,
            violations: Vec::new(),
        };
        let built = v.build(file);
        match built {
            Some(parts) if v.violations.is_empty() => {
                let seed = file.seed.unwrap_or(opts.default_seed);
                let (times, times_sampled) = match &file.g {
                    Some(g) => (g.clone(), false),
                    None => (sample_times(seed, parts.pointer.len()), true),
                };
                Ok(Scenario {
                    name: file.name.clone().unwrap_or_else(|| origin.to_string()),
                    origin: origin.to_string(),
                    sha256: String::new(),
                    scheme: parts.scheme,
                    pointer: parts.pointer,
                    h_s: parts.h_s,
                    h_a: parts.h_a,
                    rho: parts.rho,
                    alphas: file.alpha.clone().unwrap_or_else(|| vec![DEFAULT_ALPHA]),
                    times,
                    times_sampled,
                    seed,
                    tol: opts.tol,
                })
            }
            _ => Err(CliError::Validation {
                origin: origin.to_string(),
                violations: v.violations,
            }),
        }
    }
}

/// Distinct times from the grid `0.25, 0.5, ..., 10`, shuffled by `seed`.
pub fn sample_times(seed: u64, n: usize) -> Vec<f64> {
    let len = TIME_GRID_LEN.max(n);
    let mut grid: Vec<f64> = (1..=len).map(|k| k as f64 * TIME_GRID_STEP).collect();
    grid.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    grid.truncate(n);
    grid
}

struct Parts {
    scheme: MeasurementScheme,
    pointer: Instrument,
    h_s: Hamiltonian,
    h_a: Hamiltonian,
    rho: State,
}

struct Validator {
    tol: f64,
    violations: Vec<String>,
}

impl Validator {
    fn fail(&mut self, field: &str, message: impl std::fmt::Display) {
        self.violations.push(format!("{field}: {message}"));
    }

    fn matrix(&mut self, field: &str, spec: &MatrixSpec, rows: usize, cols: usize) -> Option<ComplexMatrix> {
        let found_cols = spec.first().map_or(0, Vec::len);
        if spec.len() != rows || spec.iter().any(|row| row.len() != found_cols) || found_cols != cols {
            let shape = if spec.iter().all(|row| row.len() == found_cols) {
                format!("{}x{}", spec.len(), found_cols)
            } else {
                "ragged".to_string()
            };
            self.fail(field, format!("shape violated: expected {rows}x{cols}, found {shape}"));
            return None;
        }
        let entries: Vec<C64> = spec.iter().flatten().map(|s| s.value()).collect();
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            self.fail(field, "entries must be finite");
            return None;
        }
        ComplexMatrix::from_row_major(rows, cols, entries).map_err(|e| self.fail(field, e)).ok()
    }

    fn square(&mut self, field: &str, spec: &MatrixSpec, dim: usize) -> Option<ComplexMatrix> {
        self.matrix(field, spec, dim, dim)
    }

    fn state(&mut self, field: &str, spec: &MatrixSpec, dim: usize) -> Option<State> {
        let m = self.square(field, spec, dim)?;
        let report = validate_state(&m, self.tol);
        for violation in &report.violations {
            self.fail(field, format!("{} violated by {:.3e}", violation.kind, violation.magnitude));
        }
        State::new(m, self.tol).ok()
    }

    fn hamiltonian(&mut self, field: &str, spec: &MatrixSpec, dim: usize) -> Option<Hamiltonian> {
        let m = self.square(field, spec, dim)?;
        Hamiltonian::new(m, self.tol).map_err(|e| self.fail(field, e)).ok()
    }

    fn povm(&mut self, field: &str, spec: &PovmSpec, dim: usize) -> Option<Povm> {
        let mut effects = Vec::with_capacity(spec.effects.len());
        for (x, e) in spec.effects.iter().enumerate() {
            effects.push(self.square(&format!("{field}.effects[{x}]"), e, dim));
        }
        let effects: Vec<ComplexMatrix> = effects.into_iter().collect::<Option<_>>()?;
        if effects.is_empty() {
            self.fail(field, "at least one effect is required");
            return None;
        }
        let outcomes = match &spec.outcomes {
            Some(labels) => {
                if labels.len() != effects.len() {
                    self.fail(
                        field,
                        format!("outcome count violated: {} labels for {} effects", labels.len(), effects.len()),
                    );
                    return None;
                }
                let mut sorted = labels.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != labels.len() {
                    self.fail(field, "outcome labels must be distinct");
                    return None;
                }
                labels.clone()
            }
            None => (0..effects.len()).map(|x| x.to_string()).collect(),
        };
        let report = validate_povm_parts(&effects, self.tol);
        for violation in &report.violations {
            self.fail(field, format!("{} violated by {:.3e}", violation.kind, violation.magnitude));
        }
        Povm::new(outcomes, effects, self.tol).ok()
    }

    fn build(&mut self, file: &ScenarioFile) -> Option<Parts> {
        let ds = file.system_dim;
        if ds == 0 {
            self.fail("system_dim", "must be positive");
            return None;
        }
        let rho = self.state("rho", &file.rho, ds);
        let h_s = self.hamiltonian("h_s", &file.h_s, ds);
        self.check_alpha(file.alpha.as_deref());

        let (scheme, default_h_a) = self.scheme(file)?;
        let da = scheme.dim_a();
        let h_a = match &file.h_a {
            Some(spec) => self.hamiltonian("h_a", spec, da),
            None => {
                if default_h_a.is_none() {
                    self.fail("h_a", "required unless the coupling is synthesized by normal_luders");
                }
                default_h_a
            }
        };
        let pointer = self.pointer(&file.j, &scheme);
        if let Some(g) = &file.g {
            self.check_times(g, scheme.z().len());
        }
        Some(Parts {
            scheme,
            pointer: pointer?,
            h_s: h_s?,
            h_a: h_a?,
            rho: rho?,
        })
    }

    fn check_alpha(&mut self, alpha: Option<&[f64]>) {
        let Some(alpha) = alpha else { return };
        if alpha.is_empty() {
            self.fail("alpha", "list must not be empty");
        }
        for &a in alpha {
            if !(a > 0.0 && a < 1.0) {
                self.fail("alpha", format!("{a} lies outside the open interval (0, 1)"));
            }
        }
    }

    fn check_times(&mut self, g: &[f64], outcomes: usize) {
        if g.len() != outcomes {
            self.fail("g", format!("one time per outcome required: expected {outcomes}, found {}", g.len()));
        }
        if g.iter().any(|t| !t.is_finite()) {
            self.fail("g", "times must be finite");
        }
        for a in 0..g.len() {
            for b in a + 1..g.len() {
                if g[a] == g[b] {
                    self.fail("g", format!("times must be distinct: g[{a}] = g[{b}] = {}", g[a]));
                }
            }
        }
    }

    fn scheme(&mut self, file: &ScenarioFile) -> Option<(MeasurementScheme, Option<Hamiltonian>)> {
        let ds = file.system_dim;
        if let CouplingSpec::NormalLuders { normal_luders } = &file.u {
            for (present, field) in [(file.xi.is_some(), "xi"), (file.z.is_some(), "z")] {
                if present {
                    self.fail(field, "synthesized by normal_luders and must be omitted");
                }
            }
            let e = self.povm("u.normal_luders.e", &normal_luders.e, ds)?;
            if let Some(da) = file.apparatus_dim {
                if da != e.len() {
                    self.fail("apparatus_dim", format!("normal_luders uses one pointer state per outcome: expected {}, found {da}", e.len()));
                }
            }
            let (scheme, h_a) = normal_scheme_for_luders(&e, &normal_luders.pointer_energies)
                .map_err(|err| self.fail("u.normal_luders", err))
                .ok()?;
            let deviation = scheme.u().unitarity_defect();
            if deviation > self.tol {
                self.fail("u", format!("unitarity violated by {deviation:.3e}"));
            }
            return Some((scheme, Some(h_a)));
        }

        let Some(da) = file.apparatus_dim.or_else(|| file.xi.as_ref().map(Vec::len)) else {
            self.fail("apparatus_dim", "required unless the coupling is synthesized by normal_luders");
            return None;
        };
        if da == 0 {
            self.fail("apparatus_dim", "must be positive");
            return None;
        }
        let xi = match &file.xi {
            Some(spec) => self.state("xi", spec, da),
            None => {
                self.fail("xi", "required unless the coupling is synthesized by normal_luders");
                None
            }
        };
        let z = match &file.z {
            Some(spec) => self.povm("z", spec, da),
            None => {
                self.fail("z", "required unless the coupling is synthesized by normal_luders");
                None
            }
        };
        let n = ds * da;
        let u = match &file.u {
            CouplingSpec::Named(name) if name == "identity" => Some(ComplexMatrix::identity(n)),
            CouplingSpec::Named(name) => {
                self.fail("u", format!("unknown coupling {name:?}; expected \"identity\", a matrix or normal_luders"));
                None
            }
            CouplingSpec::Matrix(spec) => self.square("u", spec, n),
            CouplingSpec::NormalLuders { .. } => unreachable!("handled above"),
        };
        let u = u?;
        let deviation = u.unitarity_defect();
        if deviation > self.tol {
            self.fail("u", format!("unitarity violated by {deviation:.3e}"));
            return None;
        }
        let scheme = MeasurementScheme::new(ds, xi?, u, z?, self.tol).map_err(|e| self.fail("u", e)).ok()?;
        Some((scheme, None))
    }

    fn pointer(&mut self, spec: &PointerSpec, scheme: &MeasurementScheme) -> Option<Instrument> {
        let z = scheme.z();
        let da = scheme.dim_a();
        let built = match spec {
            PointerSpec::Named(name) if name == "luders" => luders_instrument(z),
            PointerSpec::Named(name) if name == "depolarising" => depolarising_objectification(z),
            PointerSpec::Named(name) => {
                self.fail("j", format!("unknown pointer instrument {name:?}; expected \"luders\", \"depolarising\", sequential or kraus"));
                return None;
            }
            PointerSpec::Sequential { sequential } => {
                let kraus = self.kraus_list("j.sequential.channel", &sequential.channel, da)?;
                KrausOperation::new(da, da, kraus, self.tol).and_then(|phi| sequential_sharp_instrument(z, &phi))
            }
            PointerSpec::Kraus { kraus } => {
                if kraus.len() != z.len() {
                    self.fail("j.kraus", format!("one operation per outcome required: expected {}, found {}", z.len(), kraus.len()));
                    return None;
                }
                let mut ops = Vec::with_capacity(kraus.len());
                for (x, list) in kraus.iter().enumerate() {
                    let field = format!("j.kraus[{x}]");
                    let ks = self.kraus_list(&field, list, da)?;
                    ops.push(KrausOperation::new(da, da, ks, self.tol).map_err(|e| self.fail(&field, e)).ok()?);
                }
                Instrument::new(z.outcomes().to_vec(), ops, self.tol)
            }
        };
        let j = built.map_err(|e| self.fail("j", e)).ok()?;
        scheme.check_pointer_instrument(&j, self.tol).map_err(|e| self.fail("j", e)).ok()?;
        Some(j)
    }

    fn kraus_list(&mut self, field: &str, specs: &[MatrixSpec], dim: usize) -> Option<Vec<ComplexMatrix>> {
        if specs.is_empty() {
            self.fail(field, "at least one Kraus operator is required");
            return None;
        }
        let mut out = Vec::with_capacity(specs.len());
        for (k, spec) in specs.iter().enumerate() {
            out.push(self.square(&format!("{field}[{k}]"), spec, dim));
        }
        out.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_times_are_distinct_and_reproducible() {
        let a = sample_times(3, 5);
        assert_eq!(a, sample_times(3, 5));
        let mut sorted = a.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        assert_eq!(sorted.len(), 5);
        assert_eq!(sample_times(0, 50).len(), 50);
    }

    #[test]
    fn scalars_accept_real_and_complex_forms() {
        let m: MatrixSpec = serde_json::from_str("[[1, [0, -1]], [[0, 1], 2.5]]").unwrap();
        assert_eq!(m[0][1].value(), C64::new(0.0, -1.0));
        assert_eq!(m[1][1].value(), C64::new(2.5, 0.0));
    }
}
