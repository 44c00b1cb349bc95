use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

/// One closed-loop step. Channels a mode does not produce are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub y: Vec<f64>,
    pub u_nom: Option<f64>,
    pub u_q: Option<f64>,
    pub u_enc: Option<f64>,
    pub ubar_prime: Option<i128>,
    pub noise_budget_bits: Option<f64>,
    pub step_us: Option<u64>,
}

impl TraceRow {
    /// The input actually applied to the plant.
    pub fn control(&self) -> Option<f64> {
        self.u_enc.or(self.u_q).or(self.u_nom)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub outputs: usize,
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// Whatever drove the plant: `u_enc`, else `u_q`, else `u_nom`.
    Control,
    UNom,
    UQ,
    UEnc,
    UbarPrime,
    /// Output component, 0-based.
    Y(usize),
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "control" | "u" => Channel::Control,
            "u_nom" => Channel::UNom,
            "u_q" => Channel::UQ,
            "u_enc" => Channel::UEnc,
            "ubar_prime" => Channel::UbarPrime,
            _ => match s.strip_prefix('y').and_then(|k| k.parse::<usize>().ok()) {
                Some(k) if k >= 1 => Channel::Y(k - 1),
                _ => return Err(Error::MissingChannel(s.to_string())),
            },
        })
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Control => write!(f, "control"),
            Channel::UNom => write!(f, "u_nom"),
            Channel::UQ => write!(f, "u_q"),
            Channel::UEnc => write!(f, "u_enc"),
            Channel::UbarPrime => write!(f, "ubar_prime"),
            Channel::Y(k) => write!(f, "y{}", k + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub max_abs_err: f64,
    /// Step of the largest deviation; `None` for empty traces.
    pub argmax: Option<u64>,
    pub series: Vec<f64>,
}

fn value(row: &TraceRow, ch: Channel) -> Option<f64> {
    match ch {
        Channel::Control => row.control(),
        Channel::UNom => row.u_nom,
        Channel::UQ => row.u_q,
        Channel::UEnc => row.u_enc,
        Channel::UbarPrime => row.ubar_prime.map(|v| v as f64),
        Channel::Y(k) => row.y.get(k).copied(),
    }
}

/// Per-step absolute difference of one channel.
pub fn compare(a: &Trace, b: &Trace, channel: Channel) -> Result<Comparison> {
    if a.rows.len() != b.rows.len() {
        return Err(Error::LengthMismatch { left: a.rows.len(), right: b.rows.len() });
    }
    let mut out = Comparison { max_abs_err: 0.0, argmax: None, series: Vec::with_capacity(a.rows.len()) };
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let missing = || Error::MissingChannel(format!("{channel} at t = {}", ra.t));
        let err = match (channel, ra.ubar_prime, rb.ubar_prime) {
            // exact integer difference
            (Channel::UbarPrime, Some(x), Some(y)) => (x - y).unsigned_abs() as f64,
            _ => (value(ra, channel).ok_or_else(missing)? - value(rb, channel).ok_or_else(missing)?).abs(),
        };
        if out.argmax.is_none() || err > out.max_abs_err {
            out.max_abs_err = err;
            out.argmax = Some(ra.t);
        }
        out.series.push(err);
    }
    Ok(out)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt<T: FromStr>(s: &str, what: &str) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Io(format!("bad {what} value {s:?}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

impl Trace {
    pub fn header(outputs: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=outputs).map(|k| format!("y{k}")));
        h.extend(["u_nom", "u_q", "u_enc", "ubar_prime", "noise_budget_bits", "step_us"].map(String::from));
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(Self::header(self.outputs)).map_err(csv_err)?;
        for row in &self.rows {
            let mut rec = vec![row.t.to_string()];
            rec.extend(row.y.iter().map(f64::to_string));
            rec.extend([
                opt(row.u_nom),
                opt(row.u_q),
                opt(row.u_enc),
                opt(row.ubar_prime),
                opt(row.noise_budget_bits),
                opt(row.step_us),
            ]);
            wr.write_record(rec).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers().map_err(csv_err)?.clone();
        let outputs = header.len().checked_sub(7).ok_or_else(|| Error::Io("trace header too short".into()))?;
        if header.iter().collect::<Vec<_>>() != Self::header(outputs) {
            return Err(Error::Io("unexpected trace header".into()));
        }
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(csv_err)?;
            let f = |i: usize| rec.get(i).unwrap_or("");
            let t = f(0).parse().map_err(|_| Error::Io(format!("bad step {:?}", f(0))))?;
            let y = (1..=outputs)
                .map(|i| f(i).parse().map_err(|_| Error::Io(format!("bad output {:?}", f(i)))))
                .collect::<Result<Vec<f64>>>()?;
            let k = outputs + 1;
            rows.push(TraceRow {
                t,
                y,
                u_nom: parse_opt(f(k), "u_nom")?,
                u_q: parse_opt(f(k + 1), "u_q")?,
                u_enc: parse_opt(f(k + 2), "u_enc")?,
                ubar_prime: parse_opt(f(k + 3), "ubar_prime")?,
                noise_budget_bits: parse_opt(f(k + 4), "noise_budget_bits")?,
                step_us: parse_opt(f(k + 5), "step_us")?,
            });
        }
        Ok(Trace { outputs, rows })
    }
}
