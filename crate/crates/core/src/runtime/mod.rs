//! Controller execution over integers and over ciphertexts.
//!
//! The encrypted loop is split the way it would be deployed: a [`Sensor`] and
//! an [`Actuator`] on the plant side hold the secret key, while the
//! [`EncryptedController`] only ever sees public parameters and ciphertexts.
//! The actuator decrypts, rescales, requantizes and re-encrypts the control
//! output, so every ciphertext entering the controller is fresh.

mod certify;
mod controller;
mod messages;
mod plant_side;
mod quantized;

pub use certify::{certify, Certificate};
pub use controller::EncryptedController;
pub use messages::{ControlMessage, FeedbackMessage, SensorMessage};
pub use plant_side::{Actuation, Actuator, Sensor, ACTUATOR_STREAM, SENSOR_STREAM};
pub use quantized::QuantizedController;
