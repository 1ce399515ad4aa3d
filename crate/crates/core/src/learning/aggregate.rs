use super::{LocalGradient, ModelVector};
use crate::error::{FeelError, Result};

/// Coefficient-wise mean of the received gradients.
///
/// Returns `None` for an empty round; the caller then leaves the model
/// unchanged. Summation runs in device order so the result does not
/// depend on arrival order.
pub fn aggregate_digital(gradients: &[LocalGradient]) -> Option<Vec<f64>> {
    let first = gradients.first()?;
    let mut order: Vec<&LocalGradient> = gradients.iter().collect();
    order.sort_by_key(|g| g.device);
    let mut sum = vec![0.0; first.g.len()];
    for lg in order {
        for (s, v) in sum.iter_mut().zip(&lg.g) {
            *s += v;
        }
    }
    let k = gradients.len() as f64;
    Some(sum.into_iter().map(|s| s / k).collect())
}

/// One in-disk device taking part in an analog round.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalogDevice {
    pub gradient: LocalGradient,
    /// Small-scale fading power gain this round.
    pub gain: f64,
    /// Distance to the base station.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalogAggregate {
    /// De-normalized estimate of the global gradient.
    pub g_bar: Vec<f64>,
    pub active: usize,
    /// Transmit powers of the active devices.
    pub tx_powers: Vec<f64>,
}

/// Over-the-air aggregation with truncated channel inversion.
///
/// Devices with `gain >= g_th` normalize their gradient with `(nu,
/// sigma_tilde)`, invert their channel so each arrives with amplitude
/// `√η`, and the base station de-normalizes the superposition plus
/// `interference`. The result equals the mean of the active gradients
/// plus `sigma_tilde·I/(A·√η)`. Returns `None` when no device is active.
pub fn analog_uplink(
    devices: &[AnalogDevice],
    eta: f64,
    g_th: f64,
    alpha: f64,
    interference: &[f64],
    nu: f64,
    sigma_tilde: f64,
) -> Result<Option<AnalogAggregate>> {
    if !(eta > 0.0) {
        return Err(FeelError::param("eta", "must be positive"));
    }
    let mut active: Vec<&AnalogDevice> = devices.iter().filter(|d| d.gain >= g_th).collect();
    if active.is_empty() {
        return Ok(None);
    }
    active.sort_by_key(|d| d.gradient.device);
    let dim = interference.len();
    let a = active.len() as f64;

    let mut tx_powers = Vec::with_capacity(active.len());
    for d in &active {
        if d.distance <= 0.0 {
            return Err(FeelError::Singularity);
        }
        if d.gradient.g.len() != dim {
            return Err(FeelError::DimensionMismatch {
                expected: dim,
                got: d.gradient.g.len(),
            });
        }
        tx_powers.push(eta / (d.gain * d.distance.powf(-alpha)));
    }

    if sigma_tilde == 0.0 {
        // Nothing to normalize: every coefficient equals the mean.
        return Ok(Some(AnalogAggregate {
            g_bar: vec![nu; dim],
            active: active.len(),
            tx_powers,
        }));
    }

    let mut received = interference.to_vec();
    for (d, &p_tx) in active.iter().zip(&tx_powers) {
        // Amplitude after power control and channel: √(P_X·G·r^{-α}) = √η.
        let amplitude = (p_tx * d.gain * d.distance.powf(-alpha)).sqrt();
        for (y, &g) in received.iter_mut().zip(&d.gradient.g) {
            *y += amplitude * (g - nu) / sigma_tilde;
        }
    }
    let scale = sigma_tilde / (a * eta.sqrt());
    let g_bar = received.into_iter().map(|y| scale * y + nu).collect();
    Ok(Some(AnalogAggregate {
        g_bar,
        active: active.len(),
        tx_powers,
    }))
}

/// `w - μ·ḡ`.
pub fn global_update(w: &[f64], g_bar: &[f64], mu: f64) -> Result<ModelVector> {
    if w.len() != g_bar.len() {
        return Err(FeelError::DimensionMismatch {
            expected: w.len(),
            got: g_bar.len(),
        });
    }
    Ok(w.iter().zip(g_bar).map(|(a, g)| a - mu * g).collect())
}
