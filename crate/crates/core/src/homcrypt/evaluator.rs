use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::{centered, Body, Capability, Ciphertext, EvalParams};
use crate::error::{Error, Result};

/// Key-free homomorphic evaluator. Every output is non-fresh.
#[derive(Debug, Clone)]
pub struct Evaluator {
    params: EvalParams,
}

impl Evaluator {
    pub fn new(params: EvalParams) -> Self {
        Evaluator { params }
    }

    pub fn params(&self) -> &EvalParams {
        &self.params
    }

    pub fn capability(&self) -> Capability {
        self.params.capability()
    }

    fn check(&self, c: &Ciphertext) -> Result<()> {
        let ok = match &c.body {
            Body::Lwe { modulus, a, .. } => {
                self.params.kind == super::BackendKind::Lwe
                    && *modulus == self.params.plaintext_modulus
                    && a.len() == self.params.dimension
            }
            Body::Leveled { modulus, .. } => {
                self.params.kind == super::BackendKind::Leveled && *modulus == self.params.plaintext_modulus
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BackendMismatch)
        }
    }

    pub fn add(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext> {
        self.check(c1)?;
        self.check(c2)?;
        let body = match (&c1.body, &c2.body) {
            (Body::Lwe { modulus, a: a1, b: b1 }, Body::Lwe { a: a2, b: b2, .. }) => Body::Lwe {
                modulus: *modulus,
                a: a1.iter().zip(a2).map(|(x, y)| x.wrapping_add(*y)).collect(),
                b: b1.wrapping_add(*b2),
            },
            (
                Body::Leveled { modulus, value: v1, depth: d1, ops: o1 },
                Body::Leveled { value: v2, depth: d2, ops: o2, .. },
            ) => Body::Leveled {
                modulus: *modulus,
                value: centered(*v1 as i128 + *v2 as i128, *modulus),
                depth: (*d1).max(*d2),
                ops: o1 + o2 + 1,
            },
            _ => return Err(Error::BackendMismatch),
        };
        Ok(Ciphertext { body, fresh: false })
    }

    /// Multiply by an integer constant.
    pub fn scalar_mul(&self, k: &BigInt, c: &Ciphertext) -> Result<Ciphertext> {
        self.check(c)?;
        let body = match &c.body {
            Body::Lwe { modulus, a, b } => {
                let k = reduce_u64(k);
                Body::Lwe {
                    modulus: *modulus,
                    a: a.iter().map(|x| x.wrapping_mul(k)).collect(),
                    b: b.wrapping_mul(k),
                }
            }
            Body::Leveled { modulus, value, depth, ops } => {
                let k = reduce_mod(k, *modulus);
                Body::Leveled {
                    modulus: *modulus,
                    value: centered(k as i128 * *value as i128, *modulus),
                    depth: *depth,
                    ops: ops + 1,
                }
            }
        };
        Ok(Ciphertext { body, fresh: false })
    }

    /// Add a public integer constant.
    pub fn add_plain(&self, c: &Ciphertext, k: &BigInt) -> Result<Ciphertext> {
        self.check(c)?;
        let body = match &c.body {
            Body::Lwe { modulus, a, b } => {
                let delta = 1u64 << (64 - modulus.trailing_zeros());
                Body::Lwe { modulus: *modulus, a: a.clone(), b: b.wrapping_add(reduce_u64(k).wrapping_mul(delta)) }
            }
            Body::Leveled { modulus, value, depth, ops } => Body::Leveled {
                modulus: *modulus,
                value: centered(*value as i128 + reduce_mod(k, *modulus) as i128, *modulus),
                depth: *depth,
                ops: ops + 1,
            },
        };
        Ok(Ciphertext { body, fresh: false })
    }

    /// Ciphertext product; leveled backend only.
    pub fn mul(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext> {
        self.check(c1)?;
        self.check(c2)?;
        match (&c1.body, &c2.body) {
            (
                Body::Leveled { modulus, value: v1, depth: d1, ops: o1 },
                Body::Leveled { value: v2, depth: d2, ops: o2, .. },
            ) => {
                let depth = (*d1).max(*d2) + 1;
                if depth > self.params.depth_cap {
                    return Err(Error::DepthExceeded { limit: self.params.depth_cap });
                }
                Ok(Ciphertext {
                    body: Body::Leveled {
                        modulus: *modulus,
                        value: centered(*v1 as i128 * *v2 as i128, *modulus),
                        depth,
                        ops: o1 + o2 + 1,
                    },
                    fresh: false,
                })
            }
            _ => Err(Error::CapabilityExceeded {
                required: "ciphertext multiplication".into(),
                available: self.capability().to_string(),
            }),
        }
    }

    /// Product of several ciphertexts as a balanced tree, so `k` factors cost
    /// depth `ceil(log2 k)`.
    pub fn product(&self, factors: &[&Ciphertext]) -> Result<Ciphertext> {
        match factors {
            [] => Err(Error::InvalidParameters("empty product".into())),
            [c] => Ok((*c).clone()),
            _ => {
                let mid = factors.len().div_ceil(2);
                let left = self.product(&factors[..mid])?;
                let right = self.product(&factors[mid..])?;
                self.mul(&left, &right)
            }
        }
    }
}

/// `k mod 2^64`.
fn reduce_u64(k: &BigInt) -> u64 {
    let m: BigInt = BigInt::from(1u8) << 64;
    let r = ((k % &m) + &m) % &m;
    r.to_u64().expect("reduced below 2^64")
}

fn reduce_mod(k: &BigInt, modulus: u64) -> i64 {
    let m = BigInt::from(modulus);
    let r = ((k % &m) + &m) % &m;
    centered(r.to_i128().expect("reduced below N"), modulus)
}
