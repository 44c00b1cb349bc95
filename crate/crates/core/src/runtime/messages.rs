use crate::homcrypt::Ciphertext;

/// Sensor to controller: encrypted quantized output `y(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorMessage {
    pub t: u64,
    pub y: Vec<Ciphertext>,
}

/// Controller to actuator: encrypted `u'(t)` at scale `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlMessage {
    pub t: u64,
    pub u: Ciphertext,
}

/// Actuator to controller: fresh encryption of the requantized `u(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackMessage {
    pub t: u64,
    pub u: Ciphertext,
}
