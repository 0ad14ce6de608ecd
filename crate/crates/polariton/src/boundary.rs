//! Coupling of waveguide photons into and out of a semi-infinite chain.
//!
//! Amplitudes describe a photon arriving at the end the polariton moves away
//! from. A polariton with v_k ≥ 0 enters through the left end. One with
//! v_k < 0 enters through the right end, which is the mirror image
//! (Γ_R ↔ Γ_L, k → −k) of the left-end problem.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{PolaritonError, Result};
use crate::kinematics::{
    degenerate_partner_single, group_velocity_single, reduce_zone, ChainParams, POLE_TOL,
};

const CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryAmplitudes {
    pub kd: f64,
    pub k_partner: Option<f64>,
    pub r: Complex64,
    pub t: Complex64,
    pub entry_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubradiancePrediction {
    pub n: usize,
    pub xi: usize,
    pub kd: f64,
    pub gamma_exact: f64,
    pub gamma_asymptotic: f64,
}

/// f(k − k₀) = 1/(1 − e^{i(k₀−k)}).
pub fn f_factor(kd: f64, k0d: f64) -> Result<Complex64> {
    if reduce_zone(kd - k0d).abs() < POLE_TOL {
        return Err(PolaritonError::PoleAtResonance { kd });
    }
    Ok(1.0 / (1.0 - Complex64::from_polar(1.0, k0d - kd)))
}

/// Map a momentum to the frame in which it enters from the left.
fn entry_frame(params: &ChainParams, kd: f64) -> Result<(ChainParams, f64)> {
    if group_velocity_single(params, kd)? < 0.0 {
        Ok((params.mirrored(), reduce_zone(-kd)))
    } else {
        Ok((*params, kd))
    }
}

fn reflection_left(params: &ChainParams, kd: f64, kp: Option<f64>) -> Complex64 {
    let Some(kp) = kp else {
        return Complex64::new(0.0, 0.0);
    };
    let k0 = params.k0d();
    let e = |x: f64| Complex64::from_polar(1.0, -(x + k0)) - 1.0;
    -e(kp) / e(kd)
}

fn transmission_left(
    params: &ChainParams,
    kd: f64,
    kp: Option<f64>,
    r: Complex64,
) -> Result<Complex64> {
    let k0 = params.k0d();
    let mut f = f_factor(kd, k0)?;
    if let Some(kp) = kp {
        f += r * f_factor(kp, k0)?;
    }
    Ok(Complex64::new(0.0, -params.gamma_r().sqrt()) * f)
}

fn entry_left(params: &ChainParams, kd: f64, kp: Option<f64>, r: Complex64) -> Result<f64> {
    let Some(kp) = kp else {
        return Ok(1.0);
    };
    let ratio = if params.is_non_chiral() {
        1.0
    } else {
        let v = group_velocity_single(params, kd)?;
        if v == 0.0 {
            1.0
        } else {
            (group_velocity_single(params, kp)? / v).abs()
        }
    };
    let p = 1.0 - ratio * r.norm_sqr();
    if !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&p) {
        return Err(PolaritonError::Inconsistent(format!(
            "entry probability {p} at kd = {kd}"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

pub fn boundary_amplitudes(params: &ChainParams, kd: f64) -> Result<BoundaryAmplitudes> {
    let (frame, k) = entry_frame(params, kd)?;
    let kp = degenerate_partner_single(&frame, k)?;
    let r = reflection_left(&frame, k, kp);
    let t = transmission_left(&frame, k, kp, r)?;
    let entry_probability = entry_left(&frame, k, kp, r)?;
    // report the partner in the caller's frame
    let k_partner = if frame == *params {
        kp
    } else {
        kp.map(|x| reduce_zone(-x))
    };
    Ok(BoundaryAmplitudes {
        kd,
        k_partner,
        r,
        t,
        entry_probability,
    })
}

/// r(k) = −(e^{−i(k′+k₀)} − 1)/(e^{−i(k+k₀)} − 1); zero without a partner.
pub fn reflection(params: &ChainParams, kd: f64) -> Result<Complex64> {
    Ok(boundary_amplitudes(params, kd)?.r)
}

/// t(k) = −i√Γ_R [f(k−k₀) + r(k) f(k′−k₀)].
pub fn input_transmission(params: &ChainParams, kd: f64) -> Result<Complex64> {
    Ok(boundary_amplitudes(params, kd)?.t)
}

/// 1 − |v_{k′}/v_k|·|r|².
pub fn entry_probability(params: &ChainParams, kd: f64) -> Result<f64> {
    Ok(boundary_amplitudes(params, kd)?.entry_probability)
}

/// Exit probability and the phase e^{iL(k−k₀)} picked up over L = (N−1).
///
/// The probability comes from the emitted field, Γ_R|f(k−k₀) + r f(k′−k₀)|²/|v_k|,
/// not from the entry side, so agreement with [`entry_probability`] is a check.
pub fn exit_spectral_map(params: &ChainParams, n: usize, kd: f64) -> Result<(f64, Complex64)> {
    if n == 0 {
        return Err(PolaritonError::SizeLimit {
            n,
            min: 1,
            max: usize::MAX,
        });
    }
    let (frame, k) = entry_frame(params, kd)?;
    let kp = degenerate_partner_single(&frame, k)?;
    let r = reflection_left(&frame, k, kp);
    let v = group_velocity_single(&frame, k)?.abs();
    let prob = if v == 0.0 {
        0.0
    } else {
        transmission_left(&frame, k, kp, r)?.norm_sqr() / v
    };
    let len = (n - 1) as f64;
    Ok((prob, Complex64::from_polar(1.0, len * (kd - params.k0d()))))
}

/// Decay rate of the ξ-th standing wave of an N-site non-chiral chain.
pub fn subradiant_rate(params: &ChainParams, n: usize, xi: usize) -> Result<SubradiancePrediction> {
    if !params.is_non_chiral() {
        return Err(PolaritonError::RequiresNonChiral);
    }
    let k0 = params.k0d();
    if n < 2 || xi == 0 {
        return Err(PolaritonError::ModeOutOfRange { n, xi });
    }
    let kd = PI * xi as f64 / n as f64;
    if kd >= k0 - POLE_TOL {
        return Err(PolaritonError::ModeOutOfRange { n, xi });
    }
    let v = group_velocity_single(params, kd)?;
    let r = reflection(params, kd)?;
    let gamma_exact = v * (1.0 - r.norm_sqr()) / n as f64;
    let g0 = params.gamma_r();
    let nf = n as f64;
    let gamma_asymptotic = 2.0 * PI * PI * g0 * (xi * xi) as f64 / nf.powi(3) * k0.sin().powi(2)
        / (1.0 - k0.cos()).powi(3);
    Ok(SubradiancePrediction {
        n,
        xi,
        kd,
        gamma_exact,
        gamma_asymptotic,
    })
}
