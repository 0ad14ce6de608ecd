//! Finite-chain brute force: the effective Hamiltonian in the one- and
//! two-excitation sectors, decay rates, ansatz residuals and wavepacket
//! collisions. Nothing here uses t₁ or t₂ except the residual check, which
//! takes them as input.
//!
//! Single-sector couplings, sites μ, ν = 0..N−1:
//! J_{μν} = −iΓ_R e^{ik₀(μ−ν)} for μ > ν, −iΓ_L e^{ik₀(ν−μ)} for μ < ν,
//! J_{μμ} = −i(Γ_R + Γ_L + Γ_S)/2.
//!
//! Two-sector states are stored as symmetric N×N amplitude matrices Ψ with a
//! zero diagonal (hard core). Then HΨ = JΨ + ΨJᵀ with the diagonal dropped,
//! and since Ψ is symmetric ΨJᵀ = (JΨ)ᵀ. J is a masked rank-one matrix, so JΨ
//! costs O(N²) with running sums instead of O(N³).

use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{PolaritonError, Result};
use crate::kinematics::{
    group_velocity_single, omega_pair, omega_single, outgoing_partner, ChainParams, PairMomentum,
};
use crate::scattering::{Channel, ScatteringSolution};

pub const MAX_N_ONE: usize = 2000;
pub const MAX_N_TWO: usize = 200;
/// Largest N for which the two-sector matrix is materialised.
pub const MAX_N_TWO_DENSE: usize = 60;
/// Residual cells closer than this to an end are excluded from "interior".
pub const INTERIOR_MARGIN: usize = 20;

const CACHE_MAGIC: &[u8; 8] = b"POLEIG\0\0";
const CACHE_VERSION: u32 = 1;
pub const CACHE_ENV: &str = "POLARITON_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    One,
    Two,
}

/// Pair basis |μν⟩, μ < ν, in lexicographic order.
pub fn pair_index(n: usize, mu: usize, nu: usize) -> usize {
    debug_assert!(mu < nu && nu < n);
    mu * (2 * n - mu - 1) / 2 + (nu - mu - 1)
}

/// Pair amplitudes to a symmetric N×N row-major matrix.
pub fn pairs_to_matrix(n: usize, c: &[Complex64]) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    let mut idx = 0;
    for mu in 0..n {
        for nu in mu + 1..n {
            m[mu * n + nu] = c[idx];
            m[nu * n + mu] = c[idx];
            idx += 1;
        }
    }
    m
}

pub fn matrix_to_pairs(n: usize, m: &[Complex64]) -> Vec<Complex64> {
    let mut c = Vec::with_capacity(n * (n - 1) / 2);
    for mu in 0..n {
        for nu in mu + 1..n {
            c.push(m[mu * n + nu]);
        }
    }
    c
}

#[derive(Debug, Clone)]
pub struct FiniteChainOperator {
    n: usize,
    sector: Sector,
    params: ChainParams,
    single: Mat<Complex64>,
    phase: Vec<Complex64>,
    diag: Complex64,
}

pub fn build_hamiltonian(
    params: &ChainParams,
    n: usize,
    sector: Sector,
) -> Result<FiniteChainOperator> {
    let (min, max) = match sector {
        Sector::One => (1, MAX_N_ONE),
        Sector::Two => (2, MAX_N_TWO),
    };
    if n < min || n > max {
        return Err(PolaritonError::SizeLimit { n, min, max });
    }
    Ok(assemble(params, n, sector))
}

fn assemble(params: &ChainParams, n: usize, sector: Sector) -> FiniteChainOperator {
    let k0 = params.k0d();
    let diag = Complex64::new(
        0.0,
        -0.5 * (params.gamma_r() + params.gamma_l() + params.gamma_s()),
    );
    let single = Mat::from_fn(n, n, |mu, nu| {
        if mu == nu {
            diag
        } else {
            let (g, d) = if mu > nu {
                (params.gamma_r(), mu - nu)
            } else {
                (params.gamma_l(), nu - mu)
            };
            Complex64::new(0.0, -g) * Complex64::from_polar(1.0, k0 * d as f64)
        }
    });
    let phase = (0..n)
        .map(|m| Complex64::from_polar(1.0, k0 * m as f64))
        .collect();
    FiniteChainOperator {
        n,
        sector,
        params: *params,
        single,
        phase,
        diag,
    }
}

impl FiniteChainOperator {
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn sector(&self) -> Sector {
        self.sector
    }
    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        match self.sector {
            Sector::One => self.n,
            Sector::Two => self.n * (self.n - 1) / 2,
        }
    }

    /// The single-excitation matrix J.
    pub fn single_matrix(&self) -> &Mat<Complex64> {
        &self.single
    }

    /// Dense matrix in the operator's own sector.
    pub fn to_dense(&self) -> Result<Mat<Complex64>> {
        match self.sector {
            Sector::One => Ok(self.single.clone()),
            Sector::Two => {
                let n = self.n;
                if n > MAX_N_TWO_DENSE {
                    return Err(PolaritonError::SizeLimit {
                        n,
                        min: 2,
                        max: MAX_N_TWO_DENSE,
                    });
                }
                let dim = self.dim();
                let j = &self.single;
                let mut h = Mat::<Complex64>::zeros(dim, dim);
                // H|μν⟩ = Σ_a J_{aμ}|aν⟩ + Σ_a J_{aν}|μa⟩, dropping doubly occupied sites
                for mu in 0..n {
                    for nu in mu + 1..n {
                        let col = pair_index(n, mu, nu);
                        for a in 0..n {
                            if a != nu {
                                let row = pair_index(n, a.min(nu), a.max(nu));
                                h[(row, col)] += j[(a, mu)];
                            }
                            if a != mu {
                                let row = pair_index(n, a.min(mu), a.max(mu));
                                h[(row, col)] += j[(a, nu)];
                            }
                        }
                    }
                }
                Ok(h)
            }
        }
    }

    /// out = J x for x an N×cols row-major block.
    fn apply_single_rows(&self, x: &[Complex64], cols: usize, out: &mut [Complex64]) {
        let n = self.n;
        let gr = Complex64::new(0.0, -self.params.gamma_r());
        let gl = Complex64::new(0.0, -self.params.gamma_l());
        let mut acc = vec![Complex64::new(0.0, 0.0); cols];
        for m in 0..n {
            let row = &x[m * cols..(m + 1) * cols];
            let o = &mut out[m * cols..(m + 1) * cols];
            let f = gr * self.phase[m];
            let back = self.phase[m].conj();
            for c in 0..cols {
                o[c] = self.diag * row[c] + f * acc[c];
                acc[c] += back * row[c];
            }
        }
        acc.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for m in (0..n).rev() {
            let row = &x[m * cols..(m + 1) * cols];
            let o = &mut out[m * cols..(m + 1) * cols];
            let f = gl * self.phase[m].conj();
            let fwd = self.phase[m];
            for c in 0..cols {
                o[c] += f * acc[c];
                acc[c] += fwd * row[c];
            }
        }
    }

    /// HΨ for a symmetric two-excitation amplitude matrix.
    pub fn apply_pair_matrix(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        self.apply_single_rows(psi, n, &mut a);
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in r + 1..n {
                let v = a[r * n + c] + a[c * n + r];
                out[r * n + c] = v;
                out[c * n + r] = v;
            }
        }
        out
    }

    /// H applied to a state in the sector's basis.
    pub fn apply(&self, state: &[Complex64]) -> Vec<Complex64> {
        match self.sector {
            Sector::One => {
                let mut out = vec![Complex64::new(0.0, 0.0); self.n];
                self.apply_single_rows(state, 1, &mut out);
                out
            }
            Sector::Two => {
                let m = pairs_to_matrix(self.n, state);
                matrix_to_pairs(self.n, &self.apply_pair_matrix(&m))
            }
        }
    }

    pub fn trace(&self) -> Complex64 {
        match self.sector {
            Sector::One => self.diag * self.n as f64,
            Sector::Two => self.diag * 2.0 * self.dim() as f64,
        }
    }
}

/// Re⟨ψ|H|ψ⟩/⟨ψ|ψ⟩.
pub fn energy(op: &FiniteChainOperator, state: &[Complex64]) -> f64 {
    let h = op.apply(state);
    let num: Complex64 = state.iter().zip(&h).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = state.iter().map(|a| a.norm_sqr()).sum();
    num.re / den
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayMode {
    pub eigenvalue: Complex64,
    pub rate: f64,
    pub mode_index: usize,
}

fn eigenvalues(op: &FiniteChainOperator) -> Result<Vec<Complex64>> {
    let m = op.to_dense()?;
    m.eigenvalues().map_err(|_| PolaritonError::EigenFailure)
}

fn modes_from(vals: Vec<Complex64>) -> Vec<DecayMode> {
    let mut modes: Vec<DecayMode> = vals
        .into_iter()
        .map(|e| DecayMode {
            eigenvalue: e,
            rate: -2.0 * e.im,
            mode_index: 0,
        })
        .collect();
    modes.sort_by(|a, b| {
        a.rate
            .total_cmp(&b.rate)
            .then(a.eigenvalue.re.total_cmp(&b.eigenvalue.re))
    });
    for (i, m) in modes.iter_mut().enumerate() {
        m.mode_index = i;
    }
    modes
}

/// All eigenmodes sorted by ascending decay rate −2 Im λ.
pub fn decay_rates(op: &FiniteChainOperator) -> Result<Vec<DecayMode>> {
    Ok(modes_from(eigenvalues(op)?))
}

/// On-disk store of spectra keyed by (params, N, sector). Entries hold the
/// raw f64 bits, so cached and fresh results are identical.
#[derive(Debug, Clone)]
pub struct EigenCache {
    dir: PathBuf,
}

impl EigenCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Cache rooted at `$POLARITON_CACHE_DIR`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_ENV).map(Self::new)
    }

    fn path(&self, op: &FiniteChainOperator) -> PathBuf {
        let p = op.params();
        let tag = match op.sector() {
            Sector::One => "one",
            Sector::Two => "two",
        };
        self.dir.join(format!(
            "eig_{tag}_{}_{:016x}_{:016x}_{:016x}_{:016x}.bin",
            op.n(),
            p.gamma_r().to_bits(),
            p.gamma_l().to_bits(),
            p.gamma_s().to_bits(),
            p.k0d().to_bits()
        ))
    }

    fn load(&self, op: &FiniteChainOperator) -> Option<Vec<Complex64>> {
        let mut bytes = vec![];
        fs::File::open(self.path(op))
            .ok()?
            .read_to_end(&mut bytes)
            .ok()?;
        if bytes.len() < 20 || &bytes[..8] != CACHE_MAGIC {
            return None;
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().ok()?);
        let dim = u64::from_le_bytes(bytes[12..20].try_into().ok()?) as usize;
        if version != CACHE_VERSION || dim != op.dim() || bytes.len() != 20 + 16 * dim {
            return None;
        }
        let f = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        Some(
            (0..dim)
                .map(|k| Complex64::new(f(20 + 16 * k), f(28 + 16 * k)))
                .collect(),
        )
    }

    fn store(&self, op: &FiniteChainOperator, vals: &[Complex64]) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let mut buf = Vec::with_capacity(20 + 16 * vals.len());
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(&(vals.len() as u64).to_le_bytes());
        for v in vals {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        let tmp = self.path(op).with_extension("tmp");
        fs::File::create(&tmp)?.write_all(&buf)?;
        fs::rename(tmp, self.path(op))
    }
}

/// [`decay_rates`] through an optional cache. Cache I/O failures fall back
/// to recomputation.
pub fn decay_rates_cached(
    op: &FiniteChainOperator,
    cache: Option<&EigenCache>,
) -> Result<Vec<DecayMode>> {
    if let Some(c) = cache {
        if let Some(vals) = c.load(op) {
            return Ok(modes_from(vals));
        }
        let vals = eigenvalues(op)?;
        let _ = c.store(op, &vals);
        return Ok(modes_from(vals));
    }
    decay_rates(op)
}

/// The mode whose frequency Re λ lies closest to `omega`.
pub fn match_mode(modes: &[DecayMode], omega: f64) -> Option<DecayMode> {
    modes
        .iter()
        .min_by(|a, b| {
            (a.eigenvalue.re - omega)
                .abs()
                .total_cmp(&(b.eigenvalue.re - omega).abs())
        })
        .copied()
}

/// Oracle counterpart of the ξ-th standing wave: the eigenmode at the
/// frequency ω(πξ/N).
pub fn standing_wave_mode(
    modes: &[DecayMode],
    params: &ChainParams,
    n: usize,
    xi: usize,
) -> Result<DecayMode> {
    let w = omega_single(params, PI * xi as f64 / n as f64)?;
    match_mode(modes, w).ok_or(PolaritonError::EigenFailure)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualProfile {
    pub n: usize,
    /// Largest raw residual on cells within two sites of an end.
    pub boundary: f64,
    /// Largest filtered residual further than [`INTERIOR_MARGIN`] from the ends.
    pub interior: f64,
    /// Largest filtered residual at each distance from the ends.
    pub by_distance: Vec<f64>,
}

impl ResidualProfile {
    pub fn ratio(&self) -> f64 {
        self.interior / self.boundary
    }
}

fn ansatz_matrix(n: usize, sol: &ScatteringSolution) -> Vec<Complex64> {
    let p = sol.input;
    let mut psi = vec![Complex64::new(0.0, 0.0); n * n];
    let i = Complex64::new(0.0, 1.0);
    for z1 in 0..n {
        for z2 in 0..n {
            if z1 == z2 {
                continue;
            }
            let d = z1.abs_diff(z2) as f64;
            let mut rel = (i * p.q * d).exp() + sol.t1 * (-i * p.q * d).exp();
            if sol.channel != Channel::ElasticPure {
                rel += sol.t2 * (-i * sol.kappa * d).exp();
            }
            psi[z1 * n + z2] = Complex64::from_polar(1.0, p.big_k * (z1 + z2) as f64) * rel;
        }
    }
    psi
}

/// Coefficients of Π_s (S − e^{is}) in ascending powers of S.
fn shift_filter(totals: &[Complex64]) -> Vec<Complex64> {
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for s in totals {
        let root = (Complex64::new(0.0, 1.0) * s).exp();
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (j, c) in poly.iter().enumerate() {
            next[j] -= root * c;
            next[j + 1] += c;
        }
        poly = next;
    }
    poly
}

/// Residual (H − ω)|Ψ⟩ of the scattering ansatz on an N-site chain.
///
/// The chain ends launch plane waves along the diagonal with total momentum
/// K ± k₀ + (relative momentum), and the all-to-all coupling carries them
/// through the whole bulk. A diagonal shift filter Π(S₁S₂ − e^{is}) removes
/// exactly those waves. What survives in the interior is the hard-core
/// mismatch, which vanishes only for the correct (t₁, t₂).
pub fn ansatz_residual(
    params: &ChainParams,
    n: usize,
    p: PairMomentum,
    sol: &ScatteringSolution,
) -> Result<ResidualProfile> {
    if !(100..=1000).contains(&n) {
        return Err(PolaritonError::SizeLimit {
            n,
            min: 100,
            max: 1000,
        });
    }
    let mut sol = *sol;
    sol.input = p;
    let w = omega_pair(params, p)?;
    // only the structured product is used, so the two-sector cap does not apply
    let op = assemble(params, n, Sector::Two);
    let psi = ansatz_matrix(n, &sol);
    let mut r = op.apply_pair_matrix(&psi);
    for (x, y) in r.iter_mut().zip(&psi) {
        *x -= w * y;
    }
    for z in 0..n {
        r[z * n + z] = Complex64::new(0.0, 0.0);
    }

    let k0 = params.k0d();
    let kk = Complex64::new(p.big_k, 0.0);
    let mut rel = vec![Complex64::new(p.q, 0.0), Complex64::new(-p.q, 0.0)];
    if sol.channel != Channel::ElasticPure {
        rel.push(-sol.kappa);
    }
    let mut totals = vec![];
    for &x in &rel {
        totals.push(kk + k0 + x);
        totals.push(kk - k0 - x);
    }
    let coeff = shift_filter(&totals);
    let m = coeff.len() - 1;

    let mut boundary: f64 = 0.0;
    for z1 in 0..n {
        for z2 in 0..n {
            let d0 = z1.min(z2).min(n - 1 - z1.max(z2));
            if z1 != z2 && d0 <= 2 {
                boundary = boundary.max(r[z1 * n + z2].norm());
            }
        }
    }
    let span = n - m;
    let mut by_distance = vec![0.0f64; span / 2 + 1];
    for z1 in 0..span {
        for z2 in 0..span {
            if z1 == z2 {
                continue;
            }
            let f: Complex64 = coeff
                .iter()
                .enumerate()
                .map(|(j, c)| c * r[(z1 + j) * n + z2 + j])
                .sum();
            let d = z1.min(z2).min(span - 1 - z1.max(z2));
            by_distance[d] = by_distance[d].max(f.norm());
        }
    }
    let interior = by_distance
        .iter()
        .skip(INTERIOR_MARGIN + 1)
        .copied()
        .fold(0.0, f64::max);
    Ok(ResidualProfile {
        n,
        boundary,
        interior,
        by_distance,
    })
}

/// Time evolution e^{−iHt}. The single sector and small two-sector chains use
/// an eigendecomposition computed once. Larger two-sector chains use
/// fixed-step RK4 on the structured operator, with the step bounded by the
/// spectral radius.
pub struct Propagator<'a> {
    op: &'a FiniteChainOperator,
    kind: PropagatorKind,
}

// A propagator holds a single kind, so the size gap costs nothing.
#[allow(clippy::large_enum_variant)]
enum PropagatorKind {
    Eigen {
        vals: Vec<Complex64>,
        vecs: Mat<Complex64>,
        lu: faer::linalg::solvers::PartialPivLu<Complex64>,
    },
    Rk4 {
        dt_max: f64,
    },
}

impl<'a> Propagator<'a> {
    pub fn new(op: &'a FiniteChainOperator) -> Result<Self> {
        let dense = op.sector() == Sector::One || op.n() <= MAX_N_TWO_DENSE;
        let kind = if dense {
            let m = op.to_dense()?;
            let eig = m.eigen().map_err(|_| PolaritonError::EigenFailure)?;
            let vals: Vec<Complex64> = (0..m.nrows()).map(|i| eig.S().column_vector()[i]).collect();
            let vecs = eig.U().to_owned();
            let lu = vecs.partial_piv_lu();
            PropagatorKind::Eigen { vals, vecs, lu }
        } else {
            let radius = op
                .single_matrix()
                .eigenvalues()
                .map_err(|_| PolaritonError::EigenFailure)?
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max);
            PropagatorKind::Rk4 {
                dt_max: (1.0 / (2.0 * radius)).min(0.02),
            }
        };
        Ok(Self { op, kind })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.kind, PropagatorKind::Eigen { .. })
    }

    pub fn evolve(&self, state: &[Complex64], t: f64) -> Vec<Complex64> {
        match &self.kind {
            PropagatorKind::Eigen { vals, vecs, lu } => {
                let dim = vals.len();
                let rhs = Mat::from_fn(dim, 1, |i, _| state[i]);
                let c = lu.solve(&rhs);
                let d = Mat::from_fn(dim, 1, |i, _| {
                    c[(i, 0)] * (Complex64::new(0.0, -t) * vals[i]).exp()
                });
                let out = vecs * &d;
                (0..dim).map(|i| out[(i, 0)]).collect()
            }
            PropagatorKind::Rk4 { dt_max } => {
                let n = self.op.n();
                let mut m = pairs_to_matrix(n, state);
                rk4_pairs(self.op, &mut m, t, *dt_max);
                matrix_to_pairs(n, &m)
            }
        }
    }
}

pub fn propagate(op: &FiniteChainOperator, state: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    Ok(Propagator::new(op)?.evolve(state, t))
}

fn rk4_step(op: &FiniteChainOperator, psi: &mut [Complex64], dt: f64) {
    let mi = Complex64::new(0.0, -1.0);
    let f = |x: &[Complex64]| -> Vec<Complex64> {
        op.apply_pair_matrix(x)
            .into_iter()
            .map(|v| mi * v)
            .collect()
    };
    let axpy = |x: &[Complex64], a: f64, y: &[Complex64]| -> Vec<Complex64> {
        x.iter().zip(y).map(|(p, q)| p + a * q).collect()
    };
    let k1 = f(psi);
    let k2 = f(&axpy(psi, 0.5 * dt, &k1));
    let k3 = f(&axpy(psi, 0.5 * dt, &k2));
    let k4 = f(&axpy(psi, dt, &k3));
    for (j, x) in psi.iter_mut().enumerate() {
        *x += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
}

fn rk4_pairs(op: &FiniteChainOperator, psi: &mut [Complex64], t: f64, dt_max: f64) {
    if t <= 0.0 {
        return;
    }
    let steps = (t / dt_max).ceil() as usize;
    let dt = t / steps as f64;
    for _ in 0..steps {
        rk4_step(op, psi, dt);
    }
}

/// Two Gaussian packets exp(−(z−c)²/(4σ²) + ikz), symmetrised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionPlan {
    pub centers: [f64; 2],
    pub width: f64,
    pub momenta: [f64; 2],
}

impl CollisionPlan {
    pub fn validate(&self, n: usize) -> Result<()> {
        let s = self.width;
        let bad = |m: String| Err(PolaritonError::InvalidWavepacket(m));
        if s < 5.0 {
            return bad(format!("width {s} below 5 sites"));
        }
        if (self.centers[0] - self.centers[1]).abs() < 6.0 * s {
            return bad("packets closer than 6σ".into());
        }
        for &c in &self.centers {
            if c < 6.0 * s || c > (n - 1) as f64 - 6.0 * s {
                return bad(format!("centre {c} closer than 6σ to a chain end"));
            }
        }
        Ok(())
    }

    /// Unit-norm symmetric amplitude matrix.
    pub fn pair_matrix(&self, n: usize) -> Vec<Complex64> {
        let g = |c: f64, k: f64| -> Vec<Complex64> {
            (0..n)
                .map(|z| {
                    let x = z as f64 - c;
                    Complex64::from_polar(
                        (-x * x / (4.0 * self.width * self.width)).exp(),
                        k * z as f64,
                    )
                })
                .collect()
        };
        let a = g(self.centers[0], self.momenta[0]);
        let b = g(self.centers[1], self.momenta[1]);
        let mut m = vec![Complex64::new(0.0, 0.0); n * n];
        for z1 in 0..n {
            for z2 in 0..n {
                if z1 != z2 {
                    m[z1 * n + z2] = a[z1] * b[z2] + a[z2] * b[z1];
                }
            }
        }
        let norm = pair_norm(n, &m).sqrt();
        m.iter_mut().for_each(|x| *x /= norm);
        m
    }
}

fn pair_norm(n: usize, m: &[Complex64]) -> f64 {
    let mut s = 0.0;
    for r in 0..n {
        for c in r + 1..n {
            s += m[r * n + c].norm_sqr();
        }
    }
    s
}

/// Real outgoing partner κ when the inelastic channel is open. At K = 0 or
/// π the pair energy is even in q and no second channel exists.
fn open_inelastic_partner(params: &ChainParams, p: PairMomentum) -> Result<Option<f64>> {
    if p.big_k.sin().abs() < 1e-10 {
        return Ok(None);
    }
    let out = outgoing_partner(params, p)?;
    Ok(out.is_real().then_some(out.kappa.re))
}

/// Place two packets for the collision of pair momentum `p` on an N-site
/// chain. The faster packet starts on the left, 6σ from the slower one, and
/// the collision point is chosen so that the incoming and outgoing packets
/// stay as far from the ends as the group velocities allow.
pub fn plan_collision(
    params: &ChainParams,
    n: usize,
    p: PairMomentum,
    width: f64,
) -> Result<CollisionPlan> {
    let (mut ka, mut kb) = (p.k1(), p.k2());
    let (mut va, mut vb) = (
        group_velocity_single(params, ka)?,
        group_velocity_single(params, kb)?,
    );
    if va < vb {
        std::mem::swap(&mut ka, &mut kb);
        std::mem::swap(&mut va, &mut vb);
    }
    if va - vb <= 0.0 {
        return Err(PolaritonError::InvalidWavepacket(
            "packets do not approach".into(),
        ));
    }
    let gap = 6.0 * width;
    let tc = gap / (va - vb);
    let mut vout = vec![va, vb];
    let mut v_sep = va - vb;
    if let Some(kappa) = open_inelastic_partner(params, p)? {
        let (v1, v2) = (
            group_velocity_single(params, p.big_k + kappa)?,
            group_velocity_single(params, p.big_k - kappa)?,
        );
        vout.extend([v1, v2]);
        v_sep = v_sep.min((v1 - v2).abs());
    }
    let ts = 8.0 * width / v_sep;
    let xs: Vec<f64> = [-va * tc, -vb * tc]
        .into_iter()
        .chain(vout.iter().map(|v| v * ts))
        .collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let xc = 0.5 * (n - 1) as f64 - 0.5 * (lo + hi);
    let lo_c = 6.0 * width;
    let hi_c = (n - 1) as f64 - 6.0 * width;
    let mut ca = xc - va * tc;
    let mut cb = xc - vb * tc;
    // keep the initial packets inside the allowed window, preserving the gap
    if ca < lo_c {
        let s = lo_c - ca;
        ca += s;
        cb += s;
    }
    if cb > hi_c {
        let s = cb - hi_c;
        ca -= s;
        cb -= s;
    }
    let plan = CollisionPlan {
        centers: [ca.round(), cb.round()],
        width,
        momenta: [ka, kb],
    };
    plan.validate(n)?;
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavepacketMeasurement {
    pub time: f64,
    /// Weight in the incoming momentum cells, relative to the norm left.
    pub elastic: f64,
    /// Weight in the (K ± κ) cells, relative to the norm left.
    pub inelastic: f64,
    pub leakage: f64,
    pub norm: f64,
    pub overlap: f64,
    pub contamination: f64,
}

/// Sampling interval of the separation and contamination checks.
pub const CHECK_INTERVAL: f64 = 0.25;
/// Measurement waits for the overlap to drop below this.
pub const OVERLAP_THRESHOLD: f64 = 1e-3;
/// Largest norm fraction allowed near or through the ends.
pub const CONTAMINATION_LIMIT: f64 = 0.01;
const MAX_TIME: f64 = 5000.0;

struct Diagnostics {
    norm: f64,
    overlap: f64,
    edge: f64,
}

fn diagnostics(n: usize, m: &[Complex64], width: f64) -> Diagnostics {
    let close = (3.0 * width).floor() as usize;
    let mut norm = 0.0;
    let mut overlap = 0.0;
    let mut edge = 0.0;
    for r in 0..n {
        for c in r + 1..n {
            let w = m[r * n + c].norm_sqr();
            norm += w;
            if c - r <= close {
                overlap += w;
            }
            if r < close || c + close > n - 1 {
                edge += w;
            }
        }
    }
    Diagnostics {
        norm,
        overlap: overlap / norm,
        edge,
    }
}

fn wrap(x: f64) -> f64 {
    crate::kinematics::reduce_zone(x)
}

/// Fraction of the momentum-space weight inside the elastic and inelastic cells.
fn momentum_weights(
    n: usize,
    m: &[Complex64],
    width: f64,
    elastic: (f64, f64),
    inelastic: Option<(f64, f64)>,
) -> (f64, f64) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf = m.to_vec();
    for row in buf.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = buf[r * n + c];
        }
        fft.process(&mut col);
        for r in 0..n {
            buf[r * n + c] = col[r];
        }
    }
    let half = 2.0 / width;
    let inside = |k1: f64, k2: f64, (a, b): (f64, f64)| {
        (wrap(k1 - a).abs() < half && wrap(k2 - b).abs() < half)
            || (wrap(k1 - b).abs() < half && wrap(k2 - a).abs() < half)
    };
    let (mut tot, mut el, mut inel) = (0.0, 0.0, 0.0);
    for r in 0..n {
        let k1 = 2.0 * PI * r as f64 / n as f64;
        for c in 0..n {
            let k2 = 2.0 * PI * c as f64 / n as f64;
            let w = buf[r * n + c].norm_sqr();
            tot += w;
            if inside(k1, k2, elastic) {
                el += w;
            } else if inelastic.is_some_and(|b| inside(k1, k2, b)) {
                inel += w;
            }
        }
    }
    (el / tot, inel / tot)
}

/// Collide two packets on an N-site chain and read off the branch weights.
///
/// Measurement happens at the first check after the overlap has peaked at
/// which the overlap (weight with |z₁−z₂| ≤ 3σ) is below 10⁻³. If more than
/// 1% of the norm has reached the outer 3σ of the chain, or left it, before
/// then, the run fails with `BoundaryContamination`.
pub fn collide_wavepackets(
    params: &ChainParams,
    n: usize,
    plan: &CollisionPlan,
) -> Result<WavepacketMeasurement> {
    plan.validate(n)?;
    let op = build_hamiltonian(params, n, Sector::Two)?;
    let big_k = 0.5 * (plan.momenta[0] + plan.momenta[1]);
    let q = 0.5 * (plan.momenta[0] - plan.momenta[1]);
    let p = PairMomentum { big_k, q };
    let elastic_cell = (plan.momenta[0], plan.momenta[1]);
    let inelastic_cell =
        open_inelastic_partner(params, p)?.map(|kappa| (big_k + kappa, big_k - kappa));

    let radius = op
        .single_matrix()
        .eigenvalues()
        .map_err(|_| PolaritonError::EigenFailure)?
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let dt_max = (1.0 / (2.0 * radius)).min(0.02);
    let steps = (CHECK_INTERVAL / dt_max).ceil() as usize;
    let dt = CHECK_INTERVAL / steps as f64;

    let mut psi = plan.pair_matrix(n);
    let mut t = 0.0;
    let mut peak = 0.0f64;
    let mut past_peak = false;
    loop {
        let d = diagnostics(n, &psi, plan.width);
        let side_loss = (-2.0 * params.gamma_s() * t).exp();
        let contamination = (side_loss - d.norm).max(0.0) / side_loss + d.edge / side_loss;
        if contamination > CONTAMINATION_LIMIT {
            return Err(PolaritonError::BoundaryContamination {
                fraction: contamination,
            });
        }
        if d.overlap > peak {
            peak = d.overlap;
        } else if d.overlap < peak {
            past_peak = true;
        }
        if past_peak && d.overlap < OVERLAP_THRESHOLD {
            let (elastic, inelastic) =
                momentum_weights(n, &psi, plan.width, elastic_cell, inelastic_cell);
            return Ok(WavepacketMeasurement {
                time: t,
                elastic,
                inelastic,
                leakage: 1.0 - elastic - inelastic,
                norm: d.norm,
                overlap: d.overlap,
                contamination,
            });
        }
        if t > MAX_TIME {
            return Err(PolaritonError::BoundaryContamination {
                fraction: contamination,
            });
        }
        for _ in 0..steps {
            rk4_step(&op, &mut psi, dt);
        }
        t += CHECK_INTERVAL;
    }
}
