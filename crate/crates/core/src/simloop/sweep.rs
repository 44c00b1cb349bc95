use std::io::Write;

use num_traits::ToPrimitive;

use super::{compare, simulate, Channel, LoopSetup, Mode, SimOptions};
use crate::error::{Error, Result};
use crate::fixedpoint::{encode_polynomial, power_of_two_modulus, required_plaintext_modulus, FixedPointParams};
use crate::homcrypt::{BackendParams, LeveledParams, LweParams, MAX_LEVELED_MODULUS};

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    Aborted(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    pub s: f64,
    /// `max_t |u_run(t) - u_nom(t)|`; `None` when the run aborted.
    pub max_abs_err: Option<f64>,
    pub status: RowStatus,
}

/// Resize the plaintext modulus of `base` to fit `fixed_point`, keeping every
/// other parameter. LWE moduli are rounded up to a power of two.
pub fn auto_backend(base: &BackendParams, setup: &LoopSetup, fixed_point: &FixedPointParams) -> Result<BackendParams> {
    let enc = encode_polynomial(&setup.controller.g, fixed_point)?;
    let required = required_plaintext_modulus(&enc);
    let too_big = |limit: u64| Error::InvalidParameters(format!("required N = {required} exceeds {limit}"));
    Ok(match base {
        BackendParams::Lwe(p) => {
            let n = power_of_two_modulus(&required).ok_or_else(|| too_big(crate::homcrypt::MAX_LWE_MODULUS))?;
            BackendParams::Lwe(LweParams::new(p.n, n, p.noise_bound, p.seed)?)
        }
        BackendParams::Leveled(p) => {
            let n = required.to_u64().filter(|&n| n <= MAX_LEVELED_MODULUS).ok_or_else(|| too_big(MAX_LEVELED_MODULUS))?;
            let depth = p.depth_cap.max(enc.required_capability.mul_depth());
            BackendParams::Leveled(LeveledParams::new(n, depth, p.seed)?)
        }
    })
}

/// Run `mode` at each quantization step `r` (with `s = r`) against one shared
/// nominal run. Rows run in parallel with seeds `seed ^ index`; a failing row
/// is marked aborted and the others continue.
pub fn sweep(setup: &LoopSetup, r_values: &[f64], mode: Mode, opts: &SimOptions) -> Result<Vec<SweepRow>> {
    if r_values.is_empty() {
        return Err(Error::InvalidParameters("sweep needs at least one r".into()));
    }
    if r_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameters("sweep r values must be strictly decreasing".into()));
    }
    if mode == Mode::Nominal {
        return Err(Error::InvalidParameters("sweep compares quantized or encrypted runs against nominal".into()));
    }
    let nominal = simulate(setup, Mode::Nominal, opts)?;
    let bound = setup.fixed_point.bound;

    let run_row = |idx: usize, r: f64| -> Result<f64> {
        let fixed_point = FixedPointParams::with_step(r, bound)?;
        let mut row_setup = LoopSetup { fixed_point, ..setup.clone() };
        // Quantized rows involve no encryption; size their integer range on
        // the exact reference backend so small r is not limited by LWE's N.
        let base = match (mode, &setup.backend) {
            (Mode::Quantized, BackendParams::Lwe(p)) => BackendParams::Leveled(LeveledParams::new(2, 0, p.seed)?),
            (_, b) => b.clone(),
        };
        row_setup.backend = auto_backend(&base, &row_setup, &fixed_point)?;
        let row_opts = SimOptions { seed: opts.seed ^ idx as u64, ..*opts };
        let run = simulate(&row_setup, mode, &row_opts)?;
        Ok(compare(&run, &nominal, Channel::Control)?.max_abs_err)
    };

    let results: Vec<Result<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> =
            r_values.iter().enumerate().map(|(idx, &r)| scope.spawn(move || run_row(idx, r))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });

    Ok(r_values
        .iter()
        .zip(results)
        .map(|(&r, res)| match res {
            Ok(err) => SweepRow { r, s: r, max_abs_err: Some(err), status: RowStatus::Ok },
            Err(e) => SweepRow { r, s: r, max_abs_err: None, status: RowStatus::Aborted(e.to_string()) },
        })
        .collect())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    wr.write_record(["r", "s", "max_abs_err", "status"]).map_err(io)?;
    for row in rows {
        let status = match &row.status {
            RowStatus::Ok => "ok".to_string(),
            RowStatus::Aborted(msg) => format!("aborted: {msg}"),
        };
        let err = row.max_abs_err.map(|e| e.to_string()).unwrap_or_default();
        wr.write_record([row.r.to_string(), row.s.to_string(), err, status]).map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}
