//! Closed-form light-speed scaling calculators.
//!
//! Generic over any [`Physical`] number type: `f32`, `f64`, or an exact
//! rational such as [`crate::Exact`], for which every result is exact.

use num_traits::{pow, FromPrimitive, Num};
use serde::Serialize;
use thiserror::Error;

/// Number type usable by the calculators.
pub trait Physical: Num + Clone + PartialOrd + FromPrimitive {}

impl<T: Num + Clone + PartialOrd + FromPrimitive> Physical for T {}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScalingError {
    #[error("{0} must be > 0")]
    NonPositive(&'static str),
    #[error("{0} must be >= 0")]
    Negative(&'static str),
    #[error("wavelength must lie in [1 µm, 2 µm]")]
    WavelengthRange,
}

fn int<T: Physical>(v: u64) -> T {
    T::from_u64(v).expect("integer representable")
}

fn pow10<T: Physical>(e: usize) -> T {
    pow(int::<T>(10), e)
}

/// Planck constant, exactly 6.62607015e-34 J s.
pub fn planck<T: Physical>() -> T {
    int::<T>(662_607_015) / pow10(42)
}

/// Speed of light in vacuum, exactly 299 792 458 m/s.
pub fn speed_of_light<T: Physical>() -> T {
    int(299_792_458)
}

/// Signal velocity (m/s), device size (m) and optional photon wavelength (m).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemParams<T> {
    pub velocity: T,
    pub device_size: T,
    pub wavelength: Option<T>,
}

impl<T: Physical> SystemParams<T> {
    pub fn new(velocity: T, device_size: T) -> Result<Self, ScalingError> {
        if !(velocity > T::zero()) {
            return Err(ScalingError::NonPositive("velocity"));
        }
        if !(device_size > T::zero()) {
            return Err(ScalingError::NonPositive("device size"));
        }
        Ok(SystemParams {
            velocity,
            device_size,
            wavelength: None,
        })
    }

    pub fn with_wavelength(mut self, wavelength: T) -> Result<Self, ScalingError> {
        let lo = int::<T>(1) / pow10(6);
        let hi = int::<T>(2) / pow10(6);
        if wavelength < lo || wavelength > hi {
            return Err(ScalingError::WavelengthRange);
        }
        self.wavelength = Some(wavelength);
        Ok(self)
    }

    /// Biological reference: 2 m/s axonal velocity, 10 µm devices.
    pub fn biological() -> Self {
        SystemParams {
            velocity: int(2),
            device_size: int::<T>(10) / pow10(6),
            wavelength: None,
        }
    }

    /// Optical reference: velocity 10^7 x the biological 2 m/s, 100 µm devices.
    pub fn optical() -> Self {
        SystemParams {
            velocity: int::<T>(2) * pow10(7),
            device_size: int::<T>(100) / pow10(6),
            wavelength: None,
        }
    }
}

/// Neuronal pool scaling quantity `(v / w)^2`.
pub fn pool_metric<T: Physical>(p: &SystemParams<T>) -> T {
    let r = p.velocity.clone() / p.device_size.clone();
    r.clone() * r
}

/// `pool_metric(a) / pool_metric(b)`.
pub fn pool_ratio<T: Physical>(a: &SystemParams<T>, b: &SystemParams<T>) -> T {
    pool_metric(a) / pool_metric(b)
}

/// Photon energy `h c / wavelength` in joules.
pub fn photon_energy<T: Physical>(wavelength: T) -> Result<T, ScalingError> {
    if !(wavelength > T::zero()) {
        return Err(ScalingError::NonPositive("wavelength"));
    }
    Ok(planck::<T>() * speed_of_light::<T>() / wavelength)
}

/// Network power `n * rate * energy_per_firing` in watts.
pub fn power_budget<T: Physical>(n_neurons: T, mean_rate: T, energy_per_firing: T) -> Result<T, ScalingError> {
    if n_neurons < T::zero() {
        return Err(ScalingError::Negative("neuron count"));
    }
    if mean_rate < T::zero() {
        return Err(ScalingError::Negative("rate"));
    }
    if energy_per_firing < T::zero() {
        return Err(ScalingError::Negative("energy per firing"));
    }
    Ok(n_neurons * mean_rate * energy_per_firing)
}
