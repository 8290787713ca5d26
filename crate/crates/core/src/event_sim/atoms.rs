//! BEC atom-number loss from photoassociation across write-read cycles.

use crate::error::{check_non_negative, check_positive, Error, Result};

/// N(c) = n0 · exp(−rate · c).
pub fn photoassociation_decay(n0: f64, cycles: f64, rate: f64) -> Result<f64> {
    check_positive("n0", n0)?;
    check_non_negative("cycles", cycles)?;
    check_non_negative("rate", rate)?;
    Ok(n0 * (-rate * cycles).exp())
}

/// Per-cycle rate that takes `n0` to `n_final` in `cycles` cycles.
pub fn calibrate_pa_rate(n0: f64, n_final: f64, cycles: f64) -> Result<f64> {
    check_positive("cycles", cycles)?;
    if !(n_final > 0.0 && n_final < n0) {
        return Err(Error::InvalidParameter {
            name: "n_final",
            reason: format!("need 0 < n_final < n0, got n_final = {n_final}, n0 = {n0}"),
        });
    }
    Ok((n0 / n_final).ln() / cycles)
}

/// Mean of exp(−rate · c) over the integer cycles c = 0 … cycles − 1.
pub fn mean_atom_fraction(rate: f64, cycles: f64) -> f64 {
    if rate == 0.0 {
        return 1.0;
    }
    -(-rate * cycles).exp_m1() / (cycles * -(-rate).exp_m1())
}
