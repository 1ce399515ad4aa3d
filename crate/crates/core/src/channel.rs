//! Rayleigh fading, path loss, frequency-hopping assignment, SIR
//! evaluation and shot-noise interference synthesis.
//!
//! Two interferer models feed these primitives. In analytic-matched mode
//! co-channel interferers are drawn directly as a radial Poisson field of
//! density `λ_d/M` (see [`annulus_interference_power`]); in cellular mode
//! they are the actual out-of-cell devices of a window realization.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{FeelError, Result};
use crate::geometry::Point2;
use crate::scalar::Scalar;

/// Radius at which analytic-matched Poisson fields are truncated.
///
/// For `α = 4` the mean interference beyond radius `ρ` is `πλP/ρ²`, i.e.
/// a fraction `(R/ρ)²` of the field outside `R`: `4·10⁻⁴` at `R = 1`.
/// Its effect on outage is below `10⁻⁴` in absolute probability.
pub const TRUNCATION_RADIUS: f64 = 50.0;

/// Power gain of a Rayleigh-faded link (unit-mean exponential).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FadingDraw<T> {
    pub gain: T,
}

impl<T: Scalar> FadingDraw<T> {
    pub fn new(gain: T) -> Self {
        Self { gain }
    }

    pub fn unit() -> Self {
        Self { gain: T::one() }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let g: f64 = Exp1.sample(rng);
        Self { gain: T::lit(g) }
    }
}

/// Per-device subcarrier index in `0..M`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubcarrierAssignment {
    pub subcarriers: u32,
    pub channel: Vec<u32>,
}

impl SubcarrierAssignment {
    /// Independent uniform hopping choices.
    pub fn hopping<R: Rng + ?Sized>(devices: usize, subcarriers: u32, rng: &mut R) -> Self {
        let channel = (0..devices)
            .map(|_| {
                if subcarriers <= 1 {
                    0
                } else {
                    rng.random_range(0..subcarriers)
                }
            })
            .collect();
        Self {
            subcarriers,
            channel,
        }
    }

    /// Every device on one shared subcarrier.
    pub fn shared(devices: usize, subcarriers: u32) -> Self {
        Self {
            subcarriers,
            channel: vec![0; devices],
        }
    }
}

/// Signal-to-interference ratio; `Infinite` when nothing interferes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Sir<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Sir<T> {
    pub fn meets(&self, theta: T) -> bool {
        match self {
            Sir::Finite(v) => *v >= theta,
            Sir::Infinite => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SirSample<T> {
    pub device: Point2<T>,
    pub sir: Sir<T>,
    pub success: bool,
}

/// `P·G·|X|^{-α}`.
pub fn received_power<T: Scalar>(
    position: Point2<T>,
    fading: FadingDraw<T>,
    alpha: T,
    tx_power: T,
) -> Result<T> {
    let d2 = position.norm_sq();
    if d2 == T::zero() {
        return Err(FeelError::Singularity);
    }
    Ok(path_gain_sq(d2, alpha) * fading.gain * tx_power)
}

/// `r^{-α}` from `r²`, with the common `α = 4` case done without `powf`.
#[inline]
pub fn path_gain_sq<T: Scalar>(d2: T, alpha: T) -> T {
    if alpha == T::lit(4.0) {
        T::one() / (d2 * d2)
    } else {
        d2.powf(-alpha / T::lit(2.0))
    }
}

/// SIR of `target` against equal-power co-channel transmitters.
pub fn evaluate_sir<T: Scalar>(
    target: Point2<T>,
    target_fading: FadingDraw<T>,
    co_channel: &[(Point2<T>, FadingDraw<T>)],
    alpha: T,
    theta: T,
) -> Result<SirSample<T>> {
    let signal = received_power(target, target_fading, alpha, T::one())?;
    let mut interference = T::zero();
    for &(p, f) in co_channel {
        interference += received_power(p, f, alpha, T::one())?;
    }
    let sir = if co_channel.is_empty() || interference == T::zero() {
        Sir::Infinite
    } else {
        Sir::Finite(signal / interference)
    };
    Ok(SirSample {
        device: target,
        sir,
        success: sir.meets(theta),
    })
}

/// Shot-noise power `Σ P·G·|X|^{-α}`.
pub fn synthesize_interference_power<T: Scalar>(
    interferers: &[(Point2<T>, FadingDraw<T>)],
    alpha: T,
    power: T,
) -> Result<T> {
    let mut total = T::zero();
    for &(p, f) in interferers {
        total += received_power(p, f, alpha, power)?;
    }
    Ok(total)
}

/// Interference vector from explicit per-interferer symbols:
/// `Σ √(P·G)·|X|^{-α/2}·s` with `s ~ N(0, 1)` per coefficient.
pub fn synthesize_interference_vector<T: Scalar, R: Rng + ?Sized>(
    interferers: &[(Point2<T>, FadingDraw<T>)],
    alpha: T,
    power: T,
    dim: usize,
    rng: &mut R,
) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); dim];
    for &(p, f) in interferers {
        let amp = received_power(p, f, alpha, power)?.sqrt();
        for v in out.iter_mut() {
            let s: f64 = StandardNormal.sample(rng);
            *v += amp * T::lit(s);
        }
    }
    Ok(out)
}

/// Same law as [`synthesize_interference_vector`] given the total power:
/// a sum of independent Gaussians is `√(Σ P·G·|X|^{-α})·z`.
pub fn interference_vector_from_power<R: Rng + ?Sized>(
    total_power: f64,
    dim: usize,
    rng: &mut R,
) -> Vec<f64> {
    if total_power == 0.0 {
        return vec![0.0; dim];
    }
    let amp = total_power.sqrt();
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            amp * z
        })
        .collect()
}

/// Shot noise of a Poisson field with `density` on the annulus
/// `[inner, outer]`, unit-mean exponential marks and power `power`.
///
/// Points are generated in increasing distance from the arrival times of
/// a unit-rate process, `r² = inner² + T/(πρ)`. With `stop_above`, the
/// sum is abandoned as soon as it exceeds that level and the partial sum
/// (already above it) is returned.
pub fn annulus_interference_power<R: Rng + ?Sized>(
    density: f64,
    inner: f64,
    outer: f64,
    alpha: f64,
    power: f64,
    stop_above: Option<f64>,
    rng: &mut R,
) -> f64 {
    if density <= 0.0 {
        return 0.0;
    }
    let scale = 1.0 / (std::f64::consts::PI * density);
    let inner2 = inner * inner;
    let outer2 = outer * outer;
    let limit = stop_above.unwrap_or(f64::INFINITY);
    let mut arrival = 0.0;
    let mut total = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        arrival += e;
        let r2 = inner2 + arrival * scale;
        if r2 > outer2 {
            break;
        }
        if r2 == 0.0 {
            continue;
        }
        let g: f64 = Exp1.sample(rng);
        total += power * g * path_gain_sq(r2, alpha);
        if total > limit {
            break;
        }
    }
    total
}

/// Whether a device at `distance` with fading `gain` decodes against its
/// own co-channel field of `density` over the plane (truncated at
/// [`TRUNCATION_RADIUS`]), i.e. `SIR >= theta` with unit powers.
pub fn matched_field_success<R: Rng + ?Sized>(
    distance: f64,
    gain: f64,
    density: f64,
    alpha: f64,
    theta: f64,
    rng: &mut R,
) -> bool {
    let limit = gain * path_gain_sq(distance * distance, alpha) / theta;
    annulus_interference_power(density, 0.0, TRUNCATION_RADIUS, alpha, 1.0, Some(limit), rng) <= limit
}

/// Distances of a Poisson field on the annulus `[inner, outer]`, increasing.
pub fn annulus_distances<R: Rng + ?Sized>(density: f64, inner: f64, outer: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::new();
    if density <= 0.0 {
        return out;
    }
    let scale = 1.0 / (std::f64::consts::PI * density);
    let mut arrival = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        arrival += e;
        let r2 = inner * inner + arrival * scale;
        if r2 > outer * outer {
            break;
        }
        out.push(r2.sqrt());
    }
    out
}
