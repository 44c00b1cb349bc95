//! TOML run configuration.
//!
//! Polynomials are arrays of monomial strings, e.g.
//! `["0.3 * u[1]^2", "-0.2 * u[2]", "y[2]"]`. Optional fields fall back to
//! defaults; [`RunConfig::normalized`] writes every default out explicitly.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixedpoint::{
    encode_polynomial, power_of_two_modulus, required_plaintext_modulus, FixedPointParams, HistoryPolynomial,
};
use crate::homcrypt::{BackendParams, LeveledParams, LweParams, DEFAULT_LWE_DIMENSION, DEFAULT_NOISE_BOUND};
use crate::poly::Polynomial;
use crate::realization::{
    back_substitute, derive_initial_history, realize_linear, CanonicalSystem, DecompositionResult, History,
    IoRealization, LinearController, DEFAULT_EXPANSION_BUDGET,
};
use crate::simloop::{seed_bytes, LoopSetup, Mode, Plant, Reference};

pub const DEFAULT_STEPS: u64 = 1000;
pub const DEFAULT_SWEEP: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub controller: ControllerConfig,
    pub plant: PlantConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    pub fixed_point: FixedPointConfig,
    pub backend: BackendConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ControllerConfig {
    /// `x+ = A x + B y`, `u = C x + D y`.
    Linear {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<Vec<f64>>,
    },
    /// Triangular canonical form, one polynomial per state.
    Canonical {
        g: Vec<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z0: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inputs: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expansion_budget: Option<usize>,
    },
    /// A recursion given directly over `u[k]`, `y[k]`.
    History {
        g: Vec<String>,
        memory: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inputs: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u0: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        y0: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PlantConfig {
    Linear {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<Vec<f64>>,
    },
    /// State map over `x[i]` and `u`, output map over `x[i]`.
    Polynomial {
        f: Vec<Vec<String>>,
        h: Vec<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReferenceConfig {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Step {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        at: Option<u64>,
        value: f64,
    },
    Sinusoid {
        amplitude: f64,
        period: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointConfig {
    pub r: f64,
    /// Defaults to `r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Signal bound `M`.
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allow_feedthrough: Option<bool>,
}

/// Plaintext moduli and depth caps left out are sized from the encoded
/// controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendConfig {
    Lwe {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        plaintext_modulus: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_bound: Option<u64>,
    },
    Leveled {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        plaintext_modulus: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth_cap: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_r: Option<Vec<f64>>,
}

/// File names inside the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
}

impl OutputConfig {
    pub fn trace(&self) -> &str {
        self.trace.as_deref().unwrap_or("trace.csv")
    }

    pub fn report(&self) -> &str {
        self.report.as_deref().unwrap_or("report.txt")
    }

    pub fn sweep(&self) -> &str {
        self.sweep.as_deref().unwrap_or("sweep.csv")
    }

    pub fn key(&self) -> &str {
        self.key.as_deref().unwrap_or("secret.key")
    }
}

/// How the controller was brought into recursion form.
#[derive(Debug, Clone, PartialEq)]
pub enum Derivation {
    Linear(Box<DecompositionResult>),
    Canonical(CanonicalSystem),
    Direct,
}

/// A validated configuration, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub setup: LoopSetup,
    pub derivation: Derivation,
    pub mode: Mode,
    pub steps: u64,
    pub seed: u64,
    pub sweep_r: Vec<f64>,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!("{what} must be a nonempty rectangular matrix")));
    }
    Ok(DMatrix::from_row_iterator(nrows, ncols, rows.iter().flatten().copied()))
}

fn polynomial(monomials: &[String]) -> Result<Polynomial<f64>> {
    Polynomial::parse(&monomials.join("\n"))
}

fn polynomials(list: &[Vec<String>]) -> Result<Vec<Polynomial<f64>>> {
    list.iter().map(|p| polynomial(p)).collect()
}

fn monomials(p: &Polynomial<f64>) -> Vec<String> {
    p.terms().iter().map(|m| Polynomial::from_terms(vec![m.clone()]).to_string()).collect()
}

fn err_config(e: Error) -> Error {
    match e {
        e @ Error::Config(_) => e,
        e => Error::Config(e.to_string()),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn fixed_point(&self) -> Result<FixedPointParams> {
        let fp = &self.fixed_point;
        FixedPointParams::new(fp.r, fp.s.unwrap_or(fp.r), fp.bound)
    }

    fn realize(&self) -> Result<(IoRealization, Derivation)> {
        let allow_ft = self.fixed_point.allow_feedthrough.unwrap_or(false);
        match &self.controller {
            ControllerConfig::Linear { a, b, c, d, x0 } => {
                let n = a.len();
                let d = d.as_ref().map(|d| DMatrix::from_row_slice(1, d.len(), d));
                let ctrl = LinearController::new(
                    matrix(a, "controller a")?,
                    matrix(b, "controller b")?,
                    DMatrix::from_row_slice(1, c.len(), c),
                    d,
                    x0.as_ref().map(|x| DVector::from_column_slice(x)),
                )?;
                if ctrl.has_feedthrough() && !allow_ft {
                    return Err(Error::Config(
                        "controller d is nonzero; set fixed_point.allow_feedthrough = true".into(),
                    ));
                }
                debug_assert_eq!(ctrl.order(), n);
                let (dec, io) = realize_linear(&ctrl)?;
                Ok((io, Derivation::Linear(Box::new(dec))))
            }
            ControllerConfig::Canonical { g, z0, inputs, expansion_budget } => {
                let g = polynomials(g)?;
                let z0 = z0.clone().unwrap_or_else(|| vec![0.0; g.len()]);
                let sys = CanonicalSystem::new(g, z0, inputs.unwrap_or(1))?;
                let mut io = back_substitute(&sys, expansion_budget.unwrap_or(DEFAULT_EXPANSION_BUDGET))?;
                io.history = derive_initial_history(&sys, sys.z0())?;
                Ok((io, Derivation::Canonical(sys)))
            }
            ControllerConfig::History { g, memory, inputs, u0, y0 } => {
                let p = inputs.unwrap_or(1);
                let g = HistoryPolynomial::new(polynomial(g)?, *memory, p, allow_ft)?;
                let history = History {
                    u: u0.clone().unwrap_or_else(|| vec![0.0; *memory]),
                    y: y0.clone().unwrap_or_else(|| vec![vec![0.0; p]; *memory]),
                };
                Ok((IoRealization::new(g, history)?, Derivation::Direct))
            }
        }
    }

    fn plant(&self) -> Result<Plant> {
        match &self.plant {
            PlantConfig::Linear { a, b, c, x0 } => {
                let a = matrix(a, "plant a")?;
                let n = a.nrows();
                Plant::linear(
                    a,
                    DMatrix::from_column_slice(b.len(), 1, b),
                    matrix(c, "plant c")?,
                    DVector::from_vec(x0.clone().unwrap_or_else(|| vec![0.0; n])),
                )
            }
            PlantConfig::Polynomial { f, h, x0 } => {
                let f = polynomials(f)?;
                let n = f.len();
                Plant::polynomial(f, polynomials(h)?, x0.clone().unwrap_or_else(|| vec![0.0; n]))
            }
        }
    }

    fn reference(&self) -> Reference {
        match self.reference {
            ReferenceConfig::Zero => Reference::Zero,
            ReferenceConfig::Constant { value } => Reference::Constant { value },
            ReferenceConfig::Step { at, value } => Reference::Step { at: at.unwrap_or(0), value },
            ReferenceConfig::Sinusoid { amplitude, period, phase } => {
                Reference::Sinusoid { amplitude, period, phase: phase.unwrap_or(0.0) }
            }
        }
    }

    fn backend(&self, io: &IoRealization, fixed_point: &FixedPointParams, seed: u64) -> Result<BackendParams> {
        // Sizing needs an encodable controller; a degenerate one is reported later.
        let enc = encode_polynomial(&io.g, fixed_point).ok();
        let required = enc.as_ref().map(required_plaintext_modulus);
        let auto_lwe = || {
            required
                .as_ref()
                .and_then(power_of_two_modulus)
                .ok_or_else(|| Error::Config("cannot size an LWE plaintext modulus; set backend.plaintext_modulus".into()))
        };
        let seed = seed_bytes(seed);
        match &self.backend {
            BackendConfig::Lwe { dimension, plaintext_modulus, noise_bound } => {
                let n = match plaintext_modulus {
                    Some(n) => *n,
                    None => auto_lwe()?,
                };
                Ok(BackendParams::Lwe(LweParams::new(
                    dimension.unwrap_or(DEFAULT_LWE_DIMENSION),
                    n,
                    noise_bound.unwrap_or(DEFAULT_NOISE_BOUND),
                    seed,
                )?))
            }
            BackendConfig::Leveled { plaintext_modulus, depth_cap } => {
                let n = match plaintext_modulus {
                    Some(n) => *n,
                    None => required
                        .as_ref()
                        .and_then(num_traits::ToPrimitive::to_u64)
                        .ok_or_else(|| Error::Config("cannot size the plaintext modulus; set it explicitly".into()))?,
                };
                let depth = depth_cap.unwrap_or_else(|| enc.as_ref().map_or(0, |e| e.required_capability.mul_depth()));
                Ok(BackendParams::Leveled(LeveledParams::new(n, depth, seed)?))
            }
        }
    }

    /// Build and cross-validate everything the commands need.
    pub fn resolve(&self) -> Result<Resolved> {
        let fixed_point = self.fixed_point()?;
        let (controller, derivation) = self.realize()?;
        let plant = self.plant().map_err(err_config)?;
        let seed = self.run.seed.unwrap_or(0);
        let backend = self.backend(&controller, &fixed_point, seed)?;
        let mode = self.run.mode.as_deref().unwrap_or("encrypted").parse()?;
        let setup = LoopSetup { plant, controller, fixed_point, backend, reference: self.reference() };
        setup.validate()?;
        Ok(Resolved {
            setup,
            derivation,
            mode,
            steps: self.run.steps.unwrap_or(DEFAULT_STEPS),
            seed,
            sweep_r: self.run.sweep_r.clone().unwrap_or_else(|| DEFAULT_SWEEP.to_vec()),
        })
    }

    /// Same configuration with every default spelled out.
    pub fn normalized(&self) -> Result<RunConfig> {
        let res = self.resolve()?;
        let mut out = self.clone();
        let setup = &res.setup;
        match &mut out.controller {
            ControllerConfig::Linear { b, d, x0, .. } => {
                let p = b.first().map_or(0, Vec::len);
                d.get_or_insert_with(|| vec![0.0; p]);
                x0.get_or_insert_with(|| vec![0.0; b.len()]);
            }
            ControllerConfig::Canonical { g, z0, inputs, expansion_budget } => {
                z0.get_or_insert_with(|| vec![0.0; g.len()]);
                inputs.get_or_insert(1);
                expansion_budget.get_or_insert(DEFAULT_EXPANSION_BUDGET);
            }
            ControllerConfig::History { g, inputs, u0, y0, .. } => {
                *g = monomials(setup.controller.g.poly());
                *inputs = Some(setup.controller.inputs());
                *u0 = Some(setup.controller.history.u.clone());
                *y0 = Some(setup.controller.history.y.clone());
            }
        }
        match &mut out.plant {
            PlantConfig::Linear { x0, .. } | PlantConfig::Polynomial { x0, .. } => {
                *x0 = Some(setup.plant.initial_state());
            }
        }
        match &mut out.reference {
            ReferenceConfig::Step { at, .. } => {
                at.get_or_insert(0);
            }
            ReferenceConfig::Sinusoid { phase, .. } => {
                phase.get_or_insert(0.0);
            }
            _ => {}
        }
        out.fixed_point.s = Some(setup.fixed_point.s);
        out.fixed_point.allow_feedthrough.get_or_insert(false);
        out.backend = match &setup.backend {
            BackendParams::Lwe(p) => BackendConfig::Lwe {
                dimension: Some(p.n),
                plaintext_modulus: Some(p.plaintext_modulus),
                noise_bound: Some(p.noise_bound),
            },
            BackendParams::Leveled(p) => {
                BackendConfig::Leveled { plaintext_modulus: Some(p.plaintext_modulus), depth_cap: Some(p.depth_cap) }
            }
        };
        out.run = RunSection {
            steps: Some(res.steps),
            seed: Some(res.seed),
            mode: Some(res.mode.to_string()),
            sweep_r: Some(res.sweep_r.clone()),
        };
        out.output = OutputConfig {
            trace: Some(self.output.trace().into()),
            report: Some(self.output.report().into()),
            sweep: Some(self.output.sweep().into()),
            key: Some(self.output.key().into()),
        };
        Ok(out)
    }
}
