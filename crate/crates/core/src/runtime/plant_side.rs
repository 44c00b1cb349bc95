//! Plant side of the encrypted loop: the only holders of the secret key.

use super::messages::{ControlMessage, FeedbackMessage, SensorMessage};
use super::quantized::check_box;
use crate::error::Result;
use crate::fixedpoint::{quantize, quantize_scalar};
use crate::homcrypt::{Ciphertext, Encryptor, SecretKey};

pub const SENSOR_STREAM: u64 = 1;
pub const ACTUATOR_STREAM: u64 = 2;

/// Quantizes and encrypts plant outputs.
#[derive(Debug)]
pub struct Sensor {
    enc: Encryptor,
    r: f64,
    bound: i64,
}

impl Sensor {
    pub fn new(sk: SecretKey, r: f64, bound: i64) -> Self {
        Sensor { enc: Encryptor::new(sk, SENSOR_STREAM), r, bound }
    }

    /// Returns the quantized output alongside its encryption.
    pub fn measure(&mut self, t: u64, y: &[f64]) -> Result<(Vec<i64>, SensorMessage)> {
        let y_bar = quantize(y, self.r)?;
        for &v in &y_bar {
            check_box(v, self.bound)?;
        }
        let y = self.enc.encrypt_vec(&y_bar)?;
        Ok((y_bar, SensorMessage { t, y }))
    }

    /// Encrypt initial output history.
    pub fn encrypt_history(&mut self, y: &[Vec<i64>]) -> Result<Vec<Vec<Ciphertext>>> {
        y.iter().map(|v| self.enc.encrypt_vec(v)).collect()
    }
}

/// What the actuator produced for one control message.
#[derive(Debug, Clone, PartialEq)]
pub struct Actuation {
    /// Decrypted `u'(t)`.
    pub u_bar_prime: i64,
    /// `L * u'(t)`, the value applied to the plant.
    pub u_q: f64,
    /// `round(u_q / r)`.
    pub u_bar: i64,
    pub noise_budget_bits: f64,
    pub feedback: FeedbackMessage,
}

/// Decrypts, rescales, requantizes and re-encrypts the controller output.
#[derive(Debug)]
pub struct Actuator {
    enc: Encryptor,
    scale: f64,
    r: f64,
    bound: i64,
}

impl Actuator {
    pub fn new(sk: SecretKey, scale: f64, r: f64, bound: i64) -> Self {
        Actuator { enc: Encryptor::new(sk, ACTUATOR_STREAM), scale, r, bound }
    }

    pub fn process(&mut self, msg: &ControlMessage) -> Result<Actuation> {
        let u_bar_prime = self.enc.decrypt(&msg.u)?;
        let noise_budget_bits = self.enc.noise_budget(&msg.u)?;
        let u_q = self.scale * u_bar_prime as f64;
        let u_bar = quantize_scalar(u_q, self.r)?;
        check_box(u_bar, self.bound)?;
        let u = self.enc.encrypt(u_bar)?;
        Ok(Actuation { u_bar_prime, u_q, u_bar, noise_budget_bits, feedback: FeedbackMessage { t: msg.t, u } })
    }

    /// Encrypt initial input history.
    pub fn encrypt_history(&mut self, u: &[i64]) -> Result<Vec<Ciphertext>> {
        self.enc.encrypt_vec(u)
    }
}
