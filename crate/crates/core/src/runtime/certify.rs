use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::fixedpoint::EncodedController;
use crate::homcrypt::BackendParams;

/// Setup-time check that a backend can run an encoded controller for an
/// unbounded horizon.
///
/// Every step starts from fresh ciphertexts, so one evaluation's worst case
/// covers the whole run: the output plaintext must stay below `N/2` and, on
/// LWE, the accumulated noise `sum |k_i| * B` must stay below `delta/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub plaintext_modulus: u64,
    pub plaintext_bound: BigInt,
    /// `log2(N/2) - log2(bound + 1)`.
    pub plaintext_margin_bits: f64,
    /// Worst-case output noise; `None` on the leveled backend, which carries
    /// no noise.
    pub worst_noise: Option<BigInt>,
    /// `log2(delta/2) - log2(worst_noise + 1)`; infinite when noise-free.
    pub noise_margin_bits: f64,
    pub depth_required: u32,
    pub depth_available: Option<u32>,
    pub failures: Vec<String>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::CertificationFailed(self.failures.join("; ")))
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "plaintext modulus N     {}", self.plaintext_modulus)?;
        writeln!(f, "plaintext bound         {}", self.plaintext_bound)?;
        writeln!(f, "plaintext margin        {:.2} bits", self.plaintext_margin_bits)?;
        match &self.worst_noise {
            Some(e) => writeln!(f, "worst-case noise        {e}")?,
            None => writeln!(f, "worst-case noise        none (reference backend)")?,
        }
        writeln!(f, "noise margin            {:.2} bits", self.noise_margin_bits)?;
        match self.depth_available {
            Some(d) => writeln!(f, "multiplicative depth    {} of {d}", self.depth_required)?,
            None => writeln!(f, "multiplicative depth    {} (additive backend)", self.depth_required)?,
        }
        if self.passed() {
            write!(f, "verdict                 certified")
        } else {
            write!(f, "verdict                 rejected: {}", self.failures.join("; "))
        }
    }
}

fn log2_big(x: &BigInt) -> f64 {
    x.to_f64().map(f64::log2).unwrap_or(f64::INFINITY)
}

pub fn certify(enc: &EncodedController, backend: &BackendParams) -> Certificate {
    let mut failures = Vec::new();
    if let Err(e) = backend.validate() {
        failures.push(e.to_string());
    }
    let n = backend.plaintext_modulus();
    let half = BigInt::from(n / 2);
    let plaintext_margin_bits = log2_big(&half) - log2_big(&(&enc.plaintext_bound + 1));
    if enc.plaintext_bound >= half {
        failures.push(format!(
            "plaintext bound {} does not fit below N/2 = {half}; increase N or lower M",
            enc.plaintext_bound
        ));
    }

    let capability = backend.capability();
    let depth_required = enc.required_capability.mul_depth();
    if !capability.supports(enc.required_capability) {
        failures.push(format!(
            "backend {capability} cannot evaluate {}; use the leveled backend with depth cap >= {depth_required}",
            enc.required_capability
        ));
    }

    let (worst_noise, noise_margin_bits, depth_available) = match backend {
        BackendParams::Lwe(p) => {
            let coeff_sum: BigInt =
                enc.int_poly.terms().iter().filter(|m| !m.powers.is_empty()).map(|m| m.coeff.abs()).sum();
            let worst = coeff_sum * p.noise_bound;
            let half_delta = BigInt::from(p.delta() / 2);
            let margin = log2_big(&half_delta) - log2_big(&(&worst + 1));
            if worst >= half_delta {
                failures.push(format!(
                    "worst-case noise {worst} reaches delta/2 = {half_delta}; decrease N or the noise bound"
                ));
            }
            (Some(worst), margin, None)
        }
        BackendParams::Leveled(p) => (None, f64::INFINITY, Some(p.depth_cap)),
    };

    Certificate {
        plaintext_modulus: n,
        plaintext_bound: enc.plaintext_bound.clone(),
        plaintext_margin_bits,
        worst_noise,
        noise_margin_bits,
        depth_required,
        depth_available,
        failures,
    }
}
