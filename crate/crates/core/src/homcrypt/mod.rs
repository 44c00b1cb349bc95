//! Homomorphic backends.
//!
//! Two backends share one ciphertext type:
//!
//! * `Lwe`: symmetric LWE over `q = 2^64` with native wrapping arithmetic.
//!   Supports addition and plaintext-scalar multiplication, which covers any
//!   integer-linear controller polynomial. Parameters are illustrative, not
//!   certified for any security level.
//! * `Leveled`: an exact-integer reference backend. It carries plaintexts in
//!   the clear and enforces the operation contract of a leveled scheme
//!   (multiplicative depth limit, capability checks, freshness). It provides
//!   no secrecy and exists to exercise nonlinear controllers end to end.
//!
//! The public [`Evaluator`] is all a controller needs. Key material lives in
//! [`SecretKey`] and [`Encryptor`], which are plant-side only.

mod evaluator;
mod secret;
pub mod wire;

pub use evaluator::Evaluator;
pub use secret::{keygen, Encryptor, SecretKey};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_NOISE_BOUND: u64 = 16;
pub const DEFAULT_LWE_DIMENSION: usize = 512;
pub const MAX_LWE_MODULUS: u64 = 1 << 32;
pub const MAX_LEVELED_MODULUS: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Lwe,
    Leveled,
}

impl BackendKind {
    pub(crate) fn tag(self) -> u8 {
        match self {
            BackendKind::Lwe => 1,
            BackendKind::Leveled => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(BackendKind::Lwe),
            2 => Some(BackendKind::Leveled),
            _ => None,
        }
    }
}

/// What a backend can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capability {
    Additive,
    /// Ciphertext products up to the given multiplicative depth.
    Leveled { depth: u32 },
}

/// What a controller polynomial needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RequiredCapability {
    Additive,
    /// Monomials of total degree up to `degree`.
    Leveled { degree: u32 },
}

impl RequiredCapability {
    pub fn for_degree(degree: u32) -> Self {
        if degree <= 1 {
            RequiredCapability::Additive
        } else {
            RequiredCapability::Leveled { degree }
        }
    }

    /// Depth of a balanced product tree over the largest monomial.
    pub fn mul_depth(&self) -> u32 {
        match *self {
            RequiredCapability::Additive => 0,
            RequiredCapability::Leveled { degree } => product_depth(degree),
        }
    }
}

pub(crate) fn product_depth(factors: u32) -> u32 {
    if factors <= 1 {
        0
    } else {
        32 - (factors - 1).leading_zeros()
    }
}

impl Capability {
    pub fn supports(&self, req: RequiredCapability) -> bool {
        match (*self, req) {
            (_, RequiredCapability::Additive) => true,
            (Capability::Additive, RequiredCapability::Leveled { .. }) => false,
            (Capability::Leveled { depth }, r) => r.mul_depth() <= depth,
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capability::Additive => write!(f, "Additive"),
            Capability::Leveled { depth } => write!(f, "Leveled(depth {depth})"),
        }
    }
}

impl fmt::Display for RequiredCapability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RequiredCapability::Additive => write!(f, "Additive"),
            RequiredCapability::Leveled { degree } => write!(f, "Leveled({degree})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LweParams {
    /// Lattice dimension.
    pub n: usize,
    /// Plaintext modulus `N`, a power of two no larger than `2^32`.
    pub plaintext_modulus: u64,
    /// Fresh noise is drawn from `[-noise_bound, noise_bound]`.
    pub noise_bound: u64,
    pub seed: [u8; 32],
}

impl LweParams {
    pub fn new(n: usize, plaintext_modulus: u64, noise_bound: u64, seed: [u8; 32]) -> Result<Self> {
        let p = LweParams { n, plaintext_modulus, noise_bound, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.plaintext_modulus;
        if self.n == 0 {
            return Err(Error::InvalidParameters("LWE dimension must be positive".into()));
        }
        if n < 2 || !n.is_power_of_two() || n > MAX_LWE_MODULUS {
            return Err(Error::InvalidParameters(format!(
                "LWE plaintext modulus {n} must be a power of two in [2, 2^32]"
            )));
        }
        if self.noise_bound == 0 || self.noise_bound >= self.delta() / 2 {
            return Err(Error::InvalidParameters(format!(
                "noise bound {} must be in [1, delta/2) with delta = {}",
                self.noise_bound,
                self.delta()
            )));
        }
        Ok(())
    }

    /// `q / N` with `q = 2^64`.
    pub fn delta(&self) -> u64 {
        1u64 << (64 - self.plaintext_modulus.trailing_zeros())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeveledParams {
    /// Even plaintext modulus in `[2, 2^63]`.
    pub plaintext_modulus: u64,
    pub depth_cap: u32,
    pub seed: [u8; 32],
}

impl LeveledParams {
    pub fn new(plaintext_modulus: u64, depth_cap: u32, seed: [u8; 32]) -> Result<Self> {
        let p = LeveledParams { plaintext_modulus, depth_cap, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.plaintext_modulus;
        if n < 2 || !n.is_multiple_of(2) || n > MAX_LEVELED_MODULUS {
            return Err(Error::InvalidParameters(format!(
                "leveled plaintext modulus {n} must be even and in [2, 2^63]"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendParams {
    Lwe(LweParams),
    Leveled(LeveledParams),
}

impl BackendParams {
    pub fn validate(&self) -> Result<()> {
        match self {
            BackendParams::Lwe(p) => p.validate(),
            BackendParams::Leveled(p) => p.validate(),
        }
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            BackendParams::Lwe(_) => BackendKind::Lwe,
            BackendParams::Leveled(_) => BackendKind::Leveled,
        }
    }

    pub fn plaintext_modulus(&self) -> u64 {
        match self {
            BackendParams::Lwe(p) => p.plaintext_modulus,
            BackendParams::Leveled(p) => p.plaintext_modulus,
        }
    }

    pub fn seed(&self) -> [u8; 32] {
        match self {
            BackendParams::Lwe(p) => p.seed,
            BackendParams::Leveled(p) => p.seed,
        }
    }

    pub fn with_seed(mut self, seed: [u8; 32]) -> Self {
        match &mut self {
            BackendParams::Lwe(p) => p.seed = seed,
            BackendParams::Leveled(p) => p.seed = seed,
        }
        self
    }

    pub fn capability(&self) -> Capability {
        match self {
            BackendParams::Lwe(_) => Capability::Additive,
            BackendParams::Leveled(p) => Capability::Leveled { depth: p.depth_cap },
        }
    }

    /// The key-free part handed to the controller.
    pub fn public(&self) -> EvalParams {
        match self {
            BackendParams::Lwe(p) => EvalParams {
                kind: BackendKind::Lwe,
                dimension: p.n,
                plaintext_modulus: p.plaintext_modulus,
                depth_cap: 0,
            },
            BackendParams::Leveled(p) => EvalParams {
                kind: BackendKind::Leveled,
                dimension: 0,
                plaintext_modulus: p.plaintext_modulus,
                depth_cap: p.depth_cap,
            },
        }
    }
}

/// Public evaluation parameters: no key, no seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalParams {
    pub kind: BackendKind,
    pub dimension: usize,
    pub plaintext_modulus: u64,
    pub depth_cap: u32,
}

impl EvalParams {
    pub fn capability(&self) -> Capability {
        match self.kind {
            BackendKind::Lwe => Capability::Additive,
            BackendKind::Leveled => Capability::Leveled { depth: self.depth_cap },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Body {
    Lwe { modulus: u64, a: Vec<u64>, b: u64 },
    Leveled { modulus: u64, value: i64, depth: u32, ops: u64 },
}

/// One encrypted residue of `Z_N`. Vectors are encrypted componentwise.
///
/// `fresh` is set by encryption and cleared by every homomorphic operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub(crate) body: Body,
    pub(crate) fresh: bool,
}

impl Ciphertext {
    pub fn is_fresh(&self) -> bool {
        self.fresh
    }

    pub fn kind(&self) -> BackendKind {
        match self.body {
            Body::Lwe { .. } => BackendKind::Lwe,
            Body::Leveled { .. } => BackendKind::Leveled,
        }
    }

    pub fn plaintext_modulus(&self) -> u64 {
        match self.body {
            Body::Lwe { modulus, .. } | Body::Leveled { modulus, .. } => modulus,
        }
    }

    /// Multiplicative depth so far (always 0 on the LWE backend).
    pub fn depth(&self) -> u32 {
        match self.body {
            Body::Lwe { .. } => 0,
            Body::Leveled { depth, .. } => depth,
        }
    }

    /// Number of homomorphic operations folded into this ciphertext (leveled only).
    pub fn op_count(&self) -> u64 {
        match self.body {
            Body::Lwe { .. } => 0,
            Body::Leveled { ops, .. } => ops,
        }
    }
}

/// Map an integer to the centered representative in `[-N/2, N/2)`.
pub fn centered(x: i128, modulus: u64) -> i64 {
    let n = modulus as i128;
    let r = x.rem_euclid(n);
    (if r >= n / 2 { r - n } else { r }) as i64
}

pub(crate) fn check_plaintext(m: i64, modulus: u64) -> Result<()> {
    let half = (modulus / 2) as i128;
    let m128 = m as i128;
    if m128 < -half || m128 >= half {
        return Err(Error::PlaintextOutOfRange { value: m128, modulus });
    }
    Ok(())
}
