use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{centered, check_plaintext, BackendParams, Body, Ciphertext, LweParams};
use crate::error::{Error, Result};

/// PRNG stream reserved for key generation.
pub const KEY_STREAM: u64 = 0;

/// Secret key. On the leveled backend the vector is empty.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    pub(crate) params: BackendParams,
    pub(crate) s: Vec<u64>,
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SecretKey").field("kind", &self.params.kind()).field("len", &self.s.len()).finish()
    }
}

/// Deterministic key generation from the parameter seed.
pub fn keygen(params: &BackendParams) -> Result<SecretKey> {
    params.validate()?;
    let s = match params {
        BackendParams::Lwe(p) => {
            let mut rng = stream_rng(&p.seed, KEY_STREAM);
            (0..p.n).map(|_| rng.next_u64()).collect()
        }
        BackendParams::Leveled(_) => Vec::new(),
    };
    Ok(SecretKey { params: params.clone(), s })
}

fn stream_rng(seed: &[u8; 32], stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::from_seed(*seed);
    rng.set_stream(stream);
    rng
}

/// Centered binomial sample with support `[-bound, bound]`.
fn binomial_noise<R: RngCore>(rng: &mut R, bound: u64) -> i64 {
    let mut acc = 0i64;
    let mut left = bound;
    while left > 0 {
        let take = left.min(32);
        let bits = rng.next_u64();
        let mask = if take == 32 { u32::MAX as u64 } else { (1u64 << take) - 1 };
        acc += (bits & mask).count_ones() as i64 - ((bits >> 32) & mask).count_ones() as i64;
        left -= take;
    }
    acc
}

impl SecretKey {
    pub fn params(&self) -> &BackendParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.s
    }

    fn lwe(&self) -> Option<&LweParams> {
        match &self.params {
            BackendParams::Lwe(p) => Some(p),
            BackendParams::Leveled(_) => None,
        }
    }

    fn phase(&self, a: &[u64], b: u64) -> u64 {
        let dot = a.iter().zip(&self.s).fold(0u64, |acc, (x, s)| acc.wrapping_add(x.wrapping_mul(*s)));
        b.wrapping_sub(dot)
    }

    pub fn encrypt_with<R: RngCore>(&self, m: i64, rng: &mut R) -> Result<Ciphertext> {
        let modulus = self.params.plaintext_modulus();
        check_plaintext(m, modulus)?;
        let body = match &self.params {
            BackendParams::Lwe(p) => {
                let a: Vec<u64> = (0..p.n).map(|_| rng.gen()).collect();
                let e = binomial_noise(rng, p.noise_bound);
                let dot = a.iter().zip(&self.s).fold(0u64, |acc, (x, s)| acc.wrapping_add(x.wrapping_mul(*s)));
                let b = dot.wrapping_add((m as u64).wrapping_mul(p.delta())).wrapping_add(e as u64);
                Body::Lwe { modulus, a, b }
            }
            BackendParams::Leveled(_) => Body::Leveled { modulus, value: m, depth: 0, ops: 0 },
        };
        Ok(Ciphertext { body, fresh: true })
    }

    pub fn decrypt(&self, c: &Ciphertext) -> Result<i64> {
        self.check(c)?;
        Ok(match &c.body {
            Body::Lwe { modulus, a, b } => {
                let delta = 1u64 << (64 - modulus.trailing_zeros());
                let phase = self.phase(a, *b);
                let shift = 64 - modulus.trailing_zeros();
                let raw = phase.wrapping_add(delta / 2) >> shift;
                centered(raw as i128, *modulus)
            }
            Body::Leveled { value, .. } => *value,
        })
    }

    /// Signed noise `phase - delta * Dec(c)`; zero on the leveled backend.
    pub fn noise(&self, c: &Ciphertext) -> Result<i64> {
        let m = self.decrypt(c)?;
        self.noise_for(c, m)
    }

    /// Signed noise relative to a known plaintext. Debug oracle: unlike
    /// [`SecretKey::noise`] this stays correct after the noise has overflowed.
    pub fn noise_for(&self, c: &Ciphertext, m: i64) -> Result<i64> {
        self.check(c)?;
        Ok(match &c.body {
            Body::Lwe { modulus, a, b } => {
                let delta = 1u64 << (64 - modulus.trailing_zeros());
                self.phase(a, *b).wrapping_sub((m as u64).wrapping_mul(delta)) as i64
            }
            Body::Leveled { .. } => 0,
        })
    }

    /// Remaining noise margin in bits, `log2(delta/2) - log2(|noise| + 1)`.
    /// Infinite on the leveled backend.
    pub fn noise_budget(&self, c: &Ciphertext) -> Result<f64> {
        match self.lwe() {
            None => {
                self.check(c)?;
                Ok(f64::INFINITY)
            }
            Some(p) => {
                let e = self.noise(c)?;
                Ok(((p.delta() / 2) as f64).log2() - ((e.unsigned_abs() as f64) + 1.0).log2())
            }
        }
    }

    fn check(&self, c: &Ciphertext) -> Result<()> {
        let ok = match (&self.params, &c.body) {
            (BackendParams::Lwe(p), Body::Lwe { modulus, a, .. }) => {
                *modulus == p.plaintext_modulus && a.len() == p.n
            }
            (BackendParams::Leveled(p), Body::Leveled { modulus, .. }) => *modulus == p.plaintext_modulus,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BackendMismatch)
        }
    }
}

/// A secret key paired with its own deterministic PRNG stream.
///
/// Sensor and actuator each own one, on different streams, so a whole run is
/// reproducible from the parameter seed.
#[derive(Debug, Clone)]
pub struct Encryptor {
    sk: SecretKey,
    rng: ChaCha20Rng,
}

impl Encryptor {
    pub fn new(sk: SecretKey, stream: u64) -> Self {
        assert_ne!(stream, KEY_STREAM, "stream 0 is reserved for key generation");
        let rng = stream_rng(&sk.params.seed(), stream);
        Encryptor { sk, rng }
    }

    pub fn secret_key(&self) -> &SecretKey {
        &self.sk
    }

    pub fn encrypt(&mut self, m: i64) -> Result<Ciphertext> {
        self.sk.encrypt_with(m, &mut self.rng)
    }

    pub fn encrypt_vec(&mut self, ms: &[i64]) -> Result<Vec<Ciphertext>> {
        ms.iter().map(|&m| self.encrypt(m)).collect()
    }

    pub fn decrypt(&self, c: &Ciphertext) -> Result<i64> {
        self.sk.decrypt(c)
    }

    pub fn noise_budget(&self, c: &Ciphertext) -> Result<f64> {
        self.sk.noise_budget(c)
    }
}
