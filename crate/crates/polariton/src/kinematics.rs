//! Chain parameters, single- and two-polariton dispersion, degenerate partners.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{PolaritonError, Result};

/// Minimum distance in rad between a momentum and the poles ±k0.
pub const POLE_TOL: f64 = 1e-9;
/// Imaginary part below which a partner momentum counts as real.
pub const TOL_IM: f64 = 1e-8;
/// Two roots of the degeneracy quadratic closer than this are not told apart.
pub const ROOT_MATCH_TOL: f64 = 1e-8;
const K0_EDGE_TOL: f64 = 1e-9;

/// Reduce an angle to (−π, π].
pub fn reduce_zone(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    gamma_r: f64,
    gamma_l: f64,
    gamma_s: f64,
    k0d: f64,
}

impl ChainParams {
    pub fn new(gamma_r: f64, gamma_l: f64, k0d: f64) -> Result<Self> {
        Self::with_side_loss(gamma_r, gamma_l, 0.0, k0d)
    }

    pub fn with_side_loss(gamma_r: f64, gamma_l: f64, gamma_s: f64, k0d: f64) -> Result<Self> {
        let bad = |m: &str| Err(PolaritonError::InvalidParams(m.to_string()));
        if !(gamma_r.is_finite() && gamma_l.is_finite() && gamma_s.is_finite() && k0d.is_finite()) {
            return bad("all parameters must be finite");
        }
        if gamma_r < 0.0 || gamma_l < 0.0 || gamma_s < 0.0 {
            return bad("decay rates must be non-negative");
        }
        if gamma_r + gamma_l <= 0.0 {
            return bad("gamma_r + gamma_l must be positive");
        }
        if k0d <= K0_EDGE_TOL || k0d >= PI - K0_EDGE_TOL {
            return bad("k0d must lie strictly inside (0, π)");
        }
        Ok(Self {
            gamma_r,
            gamma_l,
            gamma_s,
            k0d,
        })
    }

    /// Γ_R = Γ_L = Γ₀.
    pub fn non_chiral(gamma0: f64, k0d: f64) -> Result<Self> {
        Self::new(gamma0, gamma0, k0d)
    }

    /// Γ_L = 1 and Γ_R = ratio.
    pub fn with_ratio(ratio: f64, k0d: f64) -> Result<Self> {
        Self::new(ratio, 1.0, k0d)
    }

    pub fn gamma_r(&self) -> f64 {
        self.gamma_r
    }
    pub fn gamma_l(&self) -> f64 {
        self.gamma_l
    }
    pub fn gamma_s(&self) -> f64 {
        self.gamma_s
    }
    pub fn k0d(&self) -> f64 {
        self.k0d
    }

    /// Γ_R / Γ_L, +∞ when fully chiral.
    pub fn chirality_ratio(&self) -> f64 {
        if self.gamma_l == 0.0 {
            f64::INFINITY
        } else {
            self.gamma_r / self.gamma_l
        }
    }

    pub fn is_non_chiral(&self) -> bool {
        self.gamma_r == self.gamma_l
    }

    /// Emission into one direction only.
    pub fn is_fully_chiral(&self) -> bool {
        self.gamma_l == 0.0 || self.gamma_r == 0.0
    }

    /// Swap left and right. ω(k) of the mirror equals ω(−k) of the original.
    pub fn mirrored(&self) -> Self {
        Self {
            gamma_r: self.gamma_l,
            gamma_l: self.gamma_r,
            ..*self
        }
    }

    /// Largest emission rate, used as an absolute scale.
    pub fn rate_scale(&self) -> f64 {
        self.gamma_r.max(self.gamma_l)
    }
}

/// A single-polariton Bloch momentum reduced to (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BlochMomentum(f64);

impl BlochMomentum {
    pub fn new(kd: f64) -> Self {
        Self(reduce_zone(kd))
    }
    pub fn kd(self) -> f64 {
        self.0
    }
}

/// Centre-of-mass and relative momentum, k₁ = K + q and k₂ = K − q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMomentum {
    pub big_k: f64,
    pub q: f64,
}

impl PairMomentum {
    pub fn new(big_k: f64, q: f64) -> Self {
        Self {
            big_k: reduce_zone(big_k),
            q: reduce_zone(q),
        }
    }
    pub fn k1(&self) -> f64 {
        self.big_k + self.q
    }
    pub fn k2(&self) -> f64 {
        self.big_k - self.q
    }
}

/// Partner momentum with Re in [0, π] and Im ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMomentum {
    pub re: f64,
    pub im: f64,
}

impl ComplexMomentum {
    pub fn is_real(&self) -> bool {
        self.im.abs() < TOL_IM
    }
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// Canonical momentum with cosine x.
    pub fn from_cos(x: f64) -> Self {
        if x > 1.0 {
            Self {
                re: 0.0,
                im: x.acosh(),
            }
        } else if x < -1.0 {
            Self {
                re: PI,
                im: (-x).acosh(),
            }
        } else {
            Self {
                re: x.acos(),
                im: 0.0,
            }
        }
    }
}

fn check_pole(params: &ChainParams, kd: f64) -> Result<()> {
    let k0 = params.k0d;
    if reduce_zone(kd - k0).abs() < POLE_TOL || reduce_zone(kd + k0).abs() < POLE_TOL {
        return Err(PolaritonError::PoleAtResonance { kd });
    }
    Ok(())
}

fn cot(x: f64) -> f64 {
    x.cos() / x.sin()
}

pub fn omega_single(params: &ChainParams, kd: f64) -> Result<f64> {
    check_pole(params, kd)?;
    let k0 = params.k0d;
    Ok(-0.5 * params.gamma_r * cot((kd - k0) / 2.0) + 0.5 * params.gamma_l * cot((kd + k0) / 2.0))
}

pub fn group_velocity_single(params: &ChainParams, kd: f64) -> Result<f64> {
    check_pole(params, kd)?;
    let k0 = params.k0d;
    let sm = ((kd - k0) / 2.0).sin();
    let sp = ((kd + k0) / 2.0).sin();
    Ok(params.gamma_r / (4.0 * sm * sm) - params.gamma_l / (4.0 * sp * sp))
}

/// The other real momentum with the same single-polariton energy.
///
/// ω(k′) = ω(k) is a quadratic in z = e^{ik′}; one root is e^{ik}, so the
/// partner follows from the product of roots. With one emission direction
/// switched off the second root sits on a pole and there is no partner.
/// Non-chiral chains return −k exactly.
pub fn degenerate_partner_single(params: &ChainParams, kd: f64) -> Result<Option<f64>> {
    check_pole(params, kd)?;
    if params.is_fully_chiral() {
        return Ok(None);
    }
    if params.is_non_chiral() {
        return Ok(Some(reduce_zone(-kd)));
    }
    let w = omega_single(params, kd)?;
    let c2 = Complex64::new(-w, 0.5 * (params.gamma_l - params.gamma_r));
    let c0 = c2.conj();
    let z = (c0 / c2) / Complex64::from_polar(1.0, kd);
    let kp = reduce_zone(z.arg());
    if check_pole(params, kp).is_err() || reduce_zone(kp - kd).abs() < POLE_TOL {
        return Ok(None);
    }
    Ok(Some(kp))
}

pub fn omega_pair(params: &ChainParams, p: PairMomentum) -> Result<f64> {
    Ok(omega_single(params, p.k1())? + omega_single(params, p.k2())?)
}

/// Relative group velocity ∂ω_pair/∂q = v(K+q) − v(K−q).
pub fn group_velocity_pair(params: &ChainParams, p: PairMomentum) -> Result<f64> {
    Ok(group_velocity_single(params, p.k1())? - group_velocity_single(params, p.k2())?)
}

/// Pair energy as a function of x = cos q at fixed K: A/(x−α) + B/(x−β).
struct PairQuadratic {
    a: f64,
    alpha: f64,
    b: f64,
    beta: f64,
}

impl PairQuadratic {
    fn new(params: &ChainParams, big_k: f64) -> Self {
        let k0 = params.k0d;
        Self {
            a: params.gamma_r * (k0 - big_k).sin(),
            alpha: (k0 - big_k).cos(),
            b: params.gamma_l * (k0 + big_k).sin(),
            beta: (k0 + big_k).cos(),
        }
    }

    /// Second root of E(x−α)(x−β) = A(x−β) + B(x−α) given the root c.
    /// Written so that nothing cancels when the two roots approach each other.
    fn other_root(&self, c: f64) -> Result<f64> {
        let p = c - self.alpha;
        let q = c - self.beta;
        let num = self.a * q * q + self.b * p * p;
        let den = self.a * q + self.b * p;
        let scale = (self.a * q).abs() + (self.b * p).abs();
        if den.abs() <= 1e-15 * scale || scale == 0.0 {
            return Err(PolaritonError::DegenerateQuadratic);
        }
        let x = c - num / den;
        if !x.is_finite() {
            return Err(PolaritonError::DegenerateQuadratic);
        }
        Ok(x)
    }
}

/// cos q′ of the second pair momentum degenerate with (K, q). Real, but may
/// exceed 1 in magnitude, in which case q′ is complex.
pub fn pair_partner_cos(params: &ChainParams, p: PairMomentum) -> Result<f64> {
    check_pole(params, p.k1())?;
    check_pole(params, p.k2())?;
    let c = p.q.cos();
    let x = PairQuadratic::new(params, p.big_k).other_root(c)?;
    if (x - c).abs() < ROOT_MATCH_TOL {
        return Err(PolaritonError::DegenerateQuadratic);
    }
    Ok(x)
}

/// Degenerate partner q′ in canonical form (Re ∈ [0, π], Im ≥ 0).
pub fn degenerate_partner_pair(params: &ChainParams, p: PairMomentum) -> Result<ComplexMomentum> {
    let x = pair_partner_cos(params, p)?;
    let qp = ComplexMomentum::from_cos(x);
    if qp.is_real() {
        let qp = ComplexMomentum {
            re: x.clamp(-1.0, 1.0).acos(),
            im: 0.0,
        };
        let w = omega_pair(params, p)?;
        let wp = omega_pair(
            params,
            PairMomentum {
                big_k: p.big_k,
                q: qp.re,
            },
        )?;
        let scale = w.abs() + params.rate_scale();
        if (w - wp).abs() > 1e-9 * scale {
            return Err(PolaritonError::Inconsistent(format!(
                "partner energy {wp} differs from {w}"
            )));
        }
        return Ok(qp);
    }
    Ok(qp)
}

/// The partner wave as it leaves the collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutgoingPartner {
    /// Signed relative momentum κ of the e^{−iκ|z₁−z₂|} wave.
    pub kappa: Complex64,
    /// sin κ, evaluated without going through κ to keep precision.
    pub sin_kappa: Complex64,
    /// cos κ = cos q′.
    pub cos_kappa: f64,
    pub canonical: ComplexMomentum,
}

impl OutgoingPartner {
    pub fn is_real(&self) -> bool {
        self.canonical.is_real()
    }
}

/// Pick the sign of the partner so that it carries flux in the same
/// direction as the incoming relative motion (real case) or decays with
/// separation (complex case).
pub fn outgoing_partner(params: &ChainParams, p: PairMomentum) -> Result<OutgoingPartner> {
    let x = pair_partner_cos(params, p)?;
    let canonical = ComplexMomentum::from_cos(x);
    if canonical.is_real() {
        let x = x.clamp(-1.0, 1.0);
        let mut kappa = x.acos();
        let mut s = (1.0 - x * x).sqrt();
        let vq = group_velocity_pair(params, p)?;
        let vk = group_velocity_pair(
            params,
            PairMomentum {
                big_k: p.big_k,
                q: kappa,
            },
        )?;
        if vq * vk < 0.0 {
            kappa = -kappa;
            s = -s;
        }
        Ok(OutgoingPartner {
            kappa: Complex64::new(kappa, 0.0),
            sin_kappa: Complex64::new(s, 0.0),
            cos_kappa: x,
            canonical: ComplexMomentum {
                re: x.acos(),
                im: 0.0,
            },
        })
    } else {
        let sh = (x * x - 1.0).sqrt();
        let (re, s) = if x > 0.0 { (0.0, -sh) } else { (PI, sh) };
        Ok(OutgoingPartner {
            kappa: Complex64::new(re, -canonical.im),
            sin_kappa: Complex64::new(0.0, s),
            cos_kappa: x,
            canonical,
        })
    }
}

/// m_e = 2(1 − cos k₀)²/(Γ₀ sin k₀).
pub fn effective_mass(params: &ChainParams) -> Result<f64> {
    if !params.is_non_chiral() {
        return Err(PolaritonError::RequiresNonChiral);
    }
    let k0 = params.k0d;
    Ok(2.0 * (1.0 - k0.cos()).powi(2) / (params.gamma_r * k0.sin()))
}
