//! Two-polariton scattering.
//!
//! In the ordered sector the stationary state is
//! e^{iK(z₁+z₂)} [e^{iq|z₁−z₂|} + t₁ e^{−iq|z₁−z₂|} + t₂ e^{−iκ|z₁−z₂|}],
//! where κ is the outgoing partner from [`outgoing_partner`]. The hard-core
//! condition at z₁ = z₂ gives one linear equation for each p = k₀ ± K:
//!
//! (1 + i a(q,p)) + t₁ (1 − i a(q,p)) + t₂ (1 − i a(κ,p)) = 0.

use num_complex::Complex64;

use crate::error::{PolaritonError, Result};
use crate::kinematics::{
    group_velocity_pair, omega_pair, outgoing_partner, ChainParams, ComplexMomentum, PairMomentum,
};

const A_POLE_TOL: f64 = 1e-9;
/// |sin K| below which both hard-core conditions coincide.
const K_ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    InelasticOpen,
    Resonance,
    ElasticPure,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::InelasticOpen => "inelastic_open",
            Channel::Resonance => "resonance",
            Channel::ElasticPure => "elastic_pure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringSolution {
    pub input: PairMomentum,
    pub t1: Complex64,
    pub t2: Complex64,
    /// Canonical partner, Re ∈ [0, π], Im ≥ 0.
    pub qprime: ComplexMomentum,
    /// Signed outgoing partner κ (Im κ ≤ 0).
    pub kappa: Complex64,
    pub channel: Channel,
    /// |v(κ)/v(q)|, zero unless the inelastic channel is open.
    pub velocity_ratio: f64,
    pub signed_velocity_ratio: f64,
    pub unitarity_defect: f64,
}

impl ScatteringSolution {
    pub fn elastic_probability(&self) -> f64 {
        self.t1.norm_sqr()
    }

    pub fn inelastic_probability(&self) -> f64 {
        match self.channel {
            Channel::InelasticOpen => self.t2.norm_sqr() * self.velocity_ratio,
            _ => 0.0,
        }
    }
}

/// a(q, p) = sin q / (cos q − cos p).
pub fn a_coeff(qd: f64, pd: f64) -> Result<f64> {
    let den = qd.cos() - pd.cos();
    if den.abs() < A_POLE_TOL {
        return Err(PolaritonError::PoleInACoeff);
    }
    Ok(qd.sin() / den)
}

/// a(κ, p) with κ given through sin κ and cos κ.
fn a_partner(sin_kappa: Complex64, cos_kappa: f64, pd: f64) -> Result<Complex64> {
    let den = cos_kappa - pd.cos();
    if den.abs() < A_POLE_TOL {
        return Err(PolaritonError::PoleInACoeff);
    }
    Ok(sin_kappa / den)
}

fn i() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

pub fn solve_scattering(params: &ChainParams, p: PairMomentum) -> Result<ScatteringSolution> {
    omega_pair(params, p)?;
    let k0 = params.k0d();
    let (pp, pm) = (k0 + p.big_k, k0 - p.big_k);
    let u = a_coeff(p.q, pp)?;

    if p.big_k.sin().abs() < K_ZERO_TOL {
        let t1 = -(1.0 + i() * u) / (1.0 - i() * u);
        // ω(K+q) + ω(K−q) is even in q here, so the partner is q itself.
        let qprime = ComplexMomentum {
            re: p.q.abs(),
            im: 0.0,
        };
        return Ok(ScatteringSolution {
            input: p,
            t1,
            t2: Complex64::new(0.0, 0.0),
            qprime,
            kappa: Complex64::new(qprime.re, 0.0),
            channel: Channel::ElasticPure,
            velocity_ratio: 0.0,
            signed_velocity_ratio: 0.0,
            unitarity_defect: (t1.norm() - 1.0).abs(),
        });
    }

    let v = a_coeff(p.q, pm)?;
    let out = outgoing_partner(params, p)?;
    let up = a_partner(out.sin_kappa, out.cos_kappa, pp)?;
    let vp = a_partner(out.sin_kappa, out.cos_kappa, pm)?;

    // [1−iu  1−iu'] [t1]   [−(1+iu)]
    // [1−iv  1−iv'] [t2] = [−(1+iv)]
    let m00 = 1.0 - i() * u;
    let m01 = 1.0 - i() * up;
    let m10 = 1.0 - i() * v;
    let m11 = 1.0 - i() * vp;
    let b0 = -(1.0 + i() * u);
    let b1 = -(1.0 + i() * v);
    let det = m00 * m11 - m01 * m10;
    if det.norm() == 0.0 || !det.is_finite() {
        return Err(PolaritonError::DegenerateDenominator);
    }
    let t1 = (b0 * m11 - m01 * b1) / det;
    let t2 = (m00 * b1 - m10 * b0) / det;

    let (channel, velocity_ratio, signed_velocity_ratio, unitarity_defect) = if out.is_real() {
        let vq = group_velocity_pair(params, p)?;
        let vk = group_velocity_pair(
            params,
            PairMomentum {
                big_k: p.big_k,
                q: out.kappa.re,
            },
        )?;
        let signed = if vq == 0.0 { 0.0 } else { vk / vq };
        let ratio = signed.abs();
        let defect = (t1.norm_sqr() + t2.norm_sqr() * ratio - 1.0).abs();
        (Channel::InelasticOpen, ratio, signed, defect)
    } else {
        (Channel::Resonance, 0.0, 0.0, (t1.norm() - 1.0).abs())
    };

    Ok(ScatteringSolution {
        input: p,
        t1,
        t2,
        qprime: out.canonical,
        kappa: out.kappa,
        channel,
        velocity_ratio,
        signed_velocity_ratio,
        unitarity_defect,
    })
}

/// Long-hand quotients for t₁ and t₂ with u = a(q,k₀+K), v = a(q,k₀−K)
/// and primed values taken at −κ. Independent cross-check of the linear solve.
pub fn closed_form_amplitudes(
    params: &ChainParams,
    sol: &ScatteringSolution,
) -> Result<(Complex64, Complex64)> {
    let k0 = params.k0d();
    let p = sol.input;
    let (pp, pm) = (k0 + p.big_k, k0 - p.big_k);
    let u = Complex64::new(a_coeff(p.q, pp)?, 0.0);
    let v = Complex64::new(a_coeff(p.q, pm)?, 0.0);
    let mk = -sol.kappa;
    let a_c = |p: f64| -> Result<Complex64> {
        let den = mk.cos() - p.cos();
        if den.norm() < A_POLE_TOL {
            return Err(PolaritonError::PoleInACoeff);
        }
        Ok(mk.sin() / den)
    };
    let (up, vp) = (a_c(pp)?, a_c(pm)?);
    let den = u * (vp - i()) + i() * (v + vp) - up * (v + i());
    let t1 = (u * (vp - i()) + i() * (v - vp) - up * (v - i())) / den;
    let t2 = 2.0 * i() * (u - v) / den;
    Ok((t1, t2))
}

/// t₁ at K = 0: −(e^{iq} − cos k₀)/(e^{−iq} − cos k₀).
pub fn t1_k0(params: &ChainParams, qd: f64) -> Result<Complex64> {
    let c = params.k0d().cos();
    let den = Complex64::from_polar(1.0, -qd) - c;
    if den.norm() < 1e-14 {
        return Err(PolaritonError::DegenerateDenominator);
    }
    Ok(-(Complex64::from_polar(1.0, qd) - c) / den)
}

/// a = 1/(2(1 − cos k₀)) in lattice units.
pub fn scattering_length(params: &ChainParams) -> f64 {
    0.5 / (1.0 - params.k0d().cos())
}

/// Contact-interaction amplitude −(1 + 2iqa)/(1 − 2iqa).
pub fn lieb_liniger_t1(a: f64, qd: f64) -> Complex64 {
    let x = Complex64::new(0.0, 2.0 * qd * a);
    -(1.0 + x) / (1.0 - x)
}

/// Solve a batch of points, keeping input order.
pub fn solve_many(
    params: &ChainParams,
    points: &[PairMomentum],
) -> Vec<Result<ScatteringSolution>> {
    #[cfg(feature = "parallel")]
    use crate::par::*;
    iter!(points)
        .map(|&p| solve_scattering(params, p))
        .collect()
}

/// Evenly spaced axis including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.min],
            n => (0..n)
                .map(|j| self.min + (self.max - self.min) * j as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSummary {
    pub channel: Channel,
    pub im_qprime: f64,
    pub abs_t1_sq: f64,
    pub inelastic_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionCell {
    pub big_k: f64,
    pub q: f64,
    pub outcome: Result<CellSummary>,
}

fn summarize(params: &ChainParams, big_k: f64, q: f64) -> RegionCell {
    let outcome = solve_scattering(params, PairMomentum { big_k, q }).map(|s| CellSummary {
        channel: s.channel,
        im_qprime: s.qprime.im,
        abs_t1_sq: s.t1.norm_sqr(),
        inelastic_prob: s.inelastic_probability(),
    });
    RegionCell { big_k, q, outcome }
}

fn region_points(k_axis: &Axis, q_axis: &Axis) -> Vec<(f64, f64)> {
    let qs = q_axis.points();
    k_axis
        .points()
        .into_iter()
        .flat_map(|k| qs.iter().map(move |&q| (k, q)))
        .collect()
}

/// Channel map over a (K, q) grid, K outer and q inner. Failed cells carry
/// their error; the sweep never aborts.
pub fn classify_region(params: &ChainParams, k_axis: &Axis, q_axis: &Axis) -> Vec<RegionCell> {
    #[cfg(feature = "parallel")]
    use crate::par::*;
    let pts = region_points(k_axis, q_axis);
    into_iter!(pts)
        .map(|(k, q)| summarize(params, k, q))
        .collect()
}

/// Same as [`classify_region`] but always on the calling thread.
pub fn classify_region_sequential(
    params: &ChainParams,
    k_axis: &Axis,
    q_axis: &Axis,
) -> Vec<RegionCell> {
    region_points(k_axis, q_axis)
        .into_iter()
        .map(|(k, q)| summarize(params, k, q))
        .collect()
}
