//! Stochastic convolutions of the heat and wave propagators against the
//! subordinated cylindrical noise, their renormalization constants, and the
//! stationary (massive) variants driven from the infinite past.
//!
//! Mode coefficients carry the `(2π)^{-1}` normalization of the noise, so
//! `Φ_N(t, x) = Σ_{|l|≤N} Φ̂(l, t) e^{i l·x}` and
//! `E[Φ_N(t, x)²] = (2π)^{-2} Σ_l ∫ kernel_l(t − s)² dL(s)`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pathint::{grid_with_jumps, sample_mode_noise, CellNormals, ModeNoise};
use crate::quadrature::integrate;
use crate::seeds::{derive_seed, label_key};
use crate::spectral::{ball_modes, mode_norm_sq, SpectralField};
use crate::subordinator::{check_log_moment, sample_subordinator, stieltjes_integral, SubordinatorPath, SubordinatorSpec};

/// Default length of the simulated past for stationary convolutions.
pub const DEFAULT_PAST_HORIZON: f64 = 8.0;

const TWO_PI_INV: f64 = 1.0 / (2.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConvolutionKind {
    Heat,
    Wave,
    HeatStationary,
    DampedWaveStationary,
}

impl ConvolutionKind {
    pub fn name(self) -> &'static str {
        match self {
            ConvolutionKind::Heat => "heat",
            ConvolutionKind::Wave => "wave",
            ConvolutionKind::HeatStationary => "heat-stationary",
            ConvolutionKind::DampedWaveStationary => "damped-wave-stationary",
        }
    }

    pub fn is_wave(self) -> bool {
        matches!(self, ConvolutionKind::Wave | ConvolutionKind::DampedWaveStationary)
    }

    pub fn is_stationary(self) -> bool {
        matches!(self, ConvolutionKind::HeatStationary | ConvolutionKind::DampedWaveStationary)
    }

    /// Propagator kernel of mode `l` (given as `|l|²`) at lag `u ≥ 0`.
    pub fn kernel(self, l2: f64, u: f64) -> f64 {
        match self {
            ConvolutionKind::Heat => (-u * l2).exp(),
            ConvolutionKind::HeatStationary => (-u * (l2 + 1.0)).exp(),
            ConvolutionKind::Wave => {
                let w = l2.sqrt();
                if w == 0.0 {
                    u
                } else {
                    (u * w).sin() / w
                }
            }
            ConvolutionKind::DampedWaveStationary => {
                let mu = (0.75 + l2).sqrt();
                (-0.5 * u).exp() * (u * mu).sin() / mu
            }
        }
    }
}

/// A convolution sampled at output times, with left limits where `L` jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticConvolution {
    kind: ConvolutionKind,
    cutoff: usize,
    times: Vec<f64>,
    values: Vec<SpectralField>,
    left_values: Vec<Option<SpectralField>>,
    derivatives: Option<Vec<SpectralField>>,
    left_derivatives: Option<Vec<Option<SpectralField>>>,
}

impl StochasticConvolution {
    pub fn kind(&self) -> ConvolutionKind {
        self.kind
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[SpectralField] {
        &self.values
    }

    /// `∂_t Ψ` for wave kinds.
    pub fn derivatives(&self) -> Option<&[SpectralField]> {
        self.derivatives.as_deref()
    }

    /// Left limit at output index `i`; equals the value unless `L` jumps there.
    pub fn left_value(&self, i: usize) -> &SpectralField {
        self.left_values[i].as_ref().unwrap_or(&self.values[i])
    }

    pub fn left_derivative(&self, i: usize) -> Option<&SpectralField> {
        let d = self.derivatives.as_ref()?;
        let l = self.left_derivatives.as_ref()?;
        Some(l[i].as_ref().unwrap_or(&d[i]))
    }

    pub fn jumps_at(&self, i: usize) -> bool {
        self.left_values[i].is_some()
    }

    /// Index of output time `t`, if present.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.binary_search_by(|s| s.total_cmp(&t)).ok()
    }

    /// Same realization restricted to `|l| ≤ m`.
    pub fn project_modes(&self, m: usize) -> Self {
        let p = |v: &Vec<SpectralField>| v.iter().map(|f| f.project_modes(m)).collect::<Vec<_>>();
        let po = |v: &Vec<Option<SpectralField>>| {
            v.iter().map(|f| f.as_ref().map(|f| f.project_modes(m))).collect::<Vec<_>>()
        };
        Self {
            kind: self.kind,
            cutoff: m.min(self.cutoff),
            times: self.times.clone(),
            values: p(&self.values),
            left_values: po(&self.left_values),
            derivatives: self.derivatives.as_ref().map(p),
            left_derivatives: self.left_derivatives.as_ref().map(po),
        }
    }

    /// Text table: one block per output time, `t`, then the field table.
    pub fn to_text(&self) -> String {
        let mut out = format!("kind {}\ncutoff {}\n", self.kind.name(), self.cutoff);
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format!("time {t:.16e}\n"));
            for (l, a) in self.values[i].iter() {
                out.push_str(&format!("{} {} {:.16e} {:.16e}\n", l[0], l[1], a.re, a.im));
            }
        }
        out
    }
}

/// `c(t)` for one kind, cutoff and clock path.
#[derive(Debug, Clone, PartialEq)]
pub struct RenormConstants {
    pub kind: ConvolutionKind,
    pub cutoff: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `c(t−)`; differs from `c(t)` where the heat clock jumps.
    pub left_values: Vec<f64>,
}

impl RenormConstants {
    pub fn at_index(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Two-column `(t, c)` text.
    pub fn to_text(&self) -> String {
        self.times.iter().zip(&self.values).map(|(t, c)| format!("{t:.16e} {c:.16e}\n")).collect()
    }
}

/// Output-time positions in the noise grid, and which cells end at one.
fn output_slots(noise: &ModeNoise, output_times: &[f64]) -> Result<(Vec<f64>, Vec<Option<usize>>)> {
    let grid = noise.times();
    let times: Vec<f64> = if output_times.is_empty() { grid.to_vec() } else { output_times.to_vec() };
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid("output times must be strictly increasing".into()));
    }
    let mut slot = vec![None; grid.len()];
    for (k, t) in times.iter().enumerate() {
        match grid.binary_search_by(|s| s.total_cmp(t)) {
            Ok(i) => slot[i] = Some(k),
            Err(_) => return Err(Error::Grid(format!("output time {t} is not a point of the noise grid"))),
        }
    }
    Ok((times, slot))
}

/// Lower-triangular Cholesky factor of a covariance matrix, with rank
/// deficiency (from round-off or exact degeneracy) clamped to zero.
fn cholesky3(c: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (c[i][i] - s).max(0.0).sqrt();
            } else if l[j][j] > 1e-12 * c[j][j].sqrt().max(f64::MIN_POSITIVE) {
                l[i][j] = (c[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

/// `y − sin y`, accurate for small `y`.
fn y_minus_sin(y: f64) -> f64 {
    if y.abs() < 0.1 {
        let y2 = y * y;
        let mut term = y * y2 / 6.0;
        let mut sum = 0.0;
        for k in 1..8 {
            sum += term;
            term *= -y2 / ((2 * k + 2) as f64 * (2 * k + 3) as f64);
        }
        sum
    } else {
        y - y.sin()
    }
}

/// Per-unit-drift covariance of `(D, G)` for the heat kernel `e^{-λu}` on a
/// cell of length `δ`, as the Cholesky coefficients of `G` on `(Z₁, Z₂)`.
fn heat_cell_weights(lambda: f64, delta: f64) -> [f64; 2] {
    let x = lambda * delta;
    if x == 0.0 {
        return [delta.sqrt(), 0.0];
    }
    let cov = -(-x).exp_m1() / x; // (1 − e^{−x})/x, per unit δ
    let var = -(-2.0 * x).exp_m1() / (2.0 * x);
    let resid = if x < 1e-3 {
        x * x / 12.0 - x * x * x / 12.0 + 17.0 * x.powi(4) / 360.0
    } else {
        (var - cov * cov).max(0.0)
    };
    [cov * delta.sqrt(), (resid * delta).sqrt()]
}

/// Covariance of `(D, S, C)` with kernels `1`, `sin(ωu)/ω`, `cos(ωu)`
/// integrated over a cell of length `δ`, per unit drift.
fn wave_cell_covariance(omega: f64, delta: f64) -> [[f64; 3]; 3] {
    let (dd, ds, dc, ss, sc, cc);
    if omega == 0.0 {
        dd = delta;
        ds = delta * delta / 2.0;
        dc = delta;
        ss = delta.powi(3) / 3.0;
        sc = delta * delta / 2.0;
        cc = delta;
    } else {
        let x = omega * delta;
        let w2 = omega * omega;
        dd = delta;
        ds = 2.0 * (x / 2.0).sin().powi(2) / w2;
        dc = x.sin() / omega;
        ss = y_minus_sin(2.0 * x) / (4.0 * w2 * omega);
        sc = x.sin().powi(2) / (2.0 * w2);
        cc = delta / 2.0 + (2.0 * x).sin() / (4.0 * omega);
    }
    [[dd, ds, dc], [ds, ss, sc], [dc, sc, cc]]
}

/// Covariance of `(D, S, C)` for the damped-wave kernels
/// `K(u) = e^{−u/2} sin(μu)/μ` and `K'(u)`, by quadrature.
fn damped_cell_covariance(mu: f64, delta: f64) -> Result<[[f64; 3]; 3]> {
    let k = |u: f64| (-0.5 * u).exp() * (mu * u).sin() / mu;
    let kp = |u: f64| (-0.5 * u).exp() * ((mu * u).cos() - 0.5 * (mu * u).sin() / mu);
    let q = |f: &dyn Fn(f64) -> f64| integrate(f, 0.0, delta, 1e-12);
    let ds = q(&k)?;
    let dc = q(&kp)?;
    let ss = q(&|u| k(u) * k(u))?;
    let sc = q(&|u| k(u) * kp(u))?;
    let cc = q(&|u| kp(u) * kp(u))?;
    Ok([[delta, ds, dc], [ds, ss, sc], [dc, sc, cc]])
}

fn lin(l: &[[f64; 3]; 3], row: usize, z: &[Complex64; 3]) -> Complex64 {
    z[0] * l[row][0] + z[1] * l[row][1] + z[2] * l[row][2]
}

struct Recorder {
    values: Vec<SpectralField>,
    left: Vec<Option<SpectralField>>,
    derivs: Vec<SpectralField>,
    left_derivs: Vec<Option<SpectralField>>,
}

impl Recorder {
    fn new(cutoff: usize, n: usize, jumps_at: &[bool]) -> Self {
        let z = SpectralField::zeros(cutoff);
        let opt = |flag: &bool| if *flag { Some(z.clone()) } else { None };
        Self {
            values: vec![z.clone(); n],
            left: jumps_at.iter().map(opt).collect(),
            derivs: vec![z.clone(); n],
            left_derivs: jumps_at.iter().map(opt).collect(),
        }
    }
}

fn put(field: &mut SpectralField, l: [i64; 2], v: Complex64) {
    let v = if l == [0, 0] { Complex64::new(v.re, 0.0) } else { v };
    field.set(l, v).expect("mode inside the ball");
    if l != [0, 0] {
        field.set([-l[0], -l[1]], v.conj()).expect("mode inside the ball");
    }
}

fn finish(
    kind: ConvolutionKind,
    noise: &ModeNoise,
    times: Vec<f64>,
    rec: Recorder,
    wave: bool,
) -> StochasticConvolution {
    StochasticConvolution {
        kind,
        cutoff: noise.cutoff(),
        times,
        values: rec.values,
        left_values: rec.left,
        derivatives: wave.then_some(rec.derivs),
        left_derivatives: wave.then_some(rec.left_derivs),
    }
}

fn jump_flags(noise: &ModeNoise, slot: &[Option<usize>], n_out: usize) -> Vec<bool> {
    let mut flags = vec![false; n_out];
    for cell in 0..noise.cells() {
        if let Some(k) = slot[cell + 1] {
            flags[k] = noise.cell_jump(cell) > 0.0;
        }
    }
    flags
}

/// Exponential recursion `Φ̂ ← e^{−δλ}Φ̂ + (2π)^{-1}(G + ξ)` per mode, with
/// `λ = |l|² + mass`.
fn heat_recursion(kind: ConvolutionKind, noise: &ModeNoise, output_times: &[f64], mass: f64) -> Result<StochasticConvolution> {
    let (times, slot) = output_slots(noise, output_times)?;
    let flags = jump_flags(noise, &slot, times.len());
    let mut rec = Recorder::new(noise.cutoff(), times.len(), &flags);
    let grid = noise.times();
    let b = noise.drift();
    for &l in noise.representative_modes() {
        let lambda = mode_norm_sq(l) + mass;
        let mut phi = Complex64::ZERO;
        if let Some(k) = slot[0] {
            put(&mut rec.values[k], l, phi);
        }
        for cell in 0..noise.cells() {
            let delta = grid[cell + 1] - grid[cell];
            let z: CellNormals = noise.cell_normals(l, cell).expect("representative mode");
            phi *= (-delta * lambda).exp();
            if b > 0.0 {
                let [w1, w2] = heat_cell_weights(lambda, delta);
                phi += TWO_PI_INV * b.sqrt() * (w1 * z.drift[0] + w2 * z.drift[1]);
            }
            let jump = noise.cell_jump(cell);
            if let Some(k) = slot[cell + 1] {
                if jump > 0.0 {
                    put(rec.left[k].as_mut().unwrap(), l, phi);
                }
            }
            if jump > 0.0 {
                phi += TWO_PI_INV * jump.sqrt() * z.jump;
            }
            if let Some(k) = slot[cell + 1] {
                put(&mut rec.values[k], l, phi);
            }
        }
    }
    Ok(finish(kind, noise, times, rec, false))
}

/// `Φ_N`, the heat convolution with zero initial condition, at `output_times`
/// (a subset of the noise grid; empty means the whole grid).
pub fn heat_convolution(noise: &ModeNoise, output_times: &[f64]) -> Result<StochasticConvolution> {
    heat_recursion(ConvolutionKind::Heat, noise, output_times, 0.0)
}

/// Rotation (or damped rotation) recursion on `(Ψ̂, ∂_tΨ̂)` per mode.
fn wave_recursion(kind: ConvolutionKind, noise: &ModeNoise, output_times: &[f64]) -> Result<StochasticConvolution> {
    let (times, slot) = output_slots(noise, output_times)?;
    let flags = jump_flags(noise, &slot, times.len());
    let mut rec = Recorder::new(noise.cutoff(), times.len(), &flags);
    let grid = noise.times();
    let b = noise.drift();
    let damped = kind == ConvolutionKind::DampedWaveStationary;
    let mut damped_cache: HashMap<(u64, u64), [[f64; 3]; 3]> = HashMap::new();
    for &l in noise.representative_modes() {
        let l2 = mode_norm_sq(l);
        let omega = if damped { (0.75 + l2).sqrt() } else { l2.sqrt() };
        let (mut psi, mut dpsi) = (Complex64::ZERO, Complex64::ZERO);
        if let Some(k) = slot[0] {
            put(&mut rec.values[k], l, psi);
            put(&mut rec.derivs[k], l, dpsi);
        }
        for cell in 0..noise.cells() {
            let delta = grid[cell + 1] - grid[cell];
            let z = noise.cell_normals(l, cell).expect("representative mode");
            if damped {
                // y(δ) = y₀(K' + K)(δ) + y₀' K(δ), y'(δ) = −(1+|l|²) y₀ K(δ) + y₀' K'(δ)
                let e = (-0.5 * delta).exp();
                let (s, c) = (omega * delta).sin_cos();
                let k = e * s / omega;
                let kp = e * (c - 0.5 * s / omega);
                let (p, d) = (psi, dpsi);
                psi = p * (kp + k) + d * k;
                dpsi = -p * (1.0 + l2) * k + d * kp;
            } else if omega == 0.0 {
                psi += dpsi * delta;
            } else {
                let (s, c) = (omega * delta).sin_cos();
                let (p, d) = (psi, dpsi);
                psi = p * c + d * (s / omega);
                dpsi = -p * (omega * s) + d * c;
            }
            if b > 0.0 {
                let cov = if damped {
                    let key = (omega.to_bits(), delta.to_bits());
                    match damped_cache.get(&key) {
                        Some(c) => *c,
                        None => {
                            let c = damped_cell_covariance(omega, delta)?;
                            damped_cache.insert(key, c);
                            c
                        }
                    }
                } else {
                    wave_cell_covariance(omega, delta)
                };
                let chol = cholesky3(cov);
                psi += TWO_PI_INV * b.sqrt() * lin(&chol, 1, &z.drift);
                dpsi += TWO_PI_INV * b.sqrt() * lin(&chol, 2, &z.drift);
            }
            let jump = noise.cell_jump(cell);
            if let Some(k) = slot[cell + 1] {
                if jump > 0.0 {
                    put(rec.left[k].as_mut().unwrap(), l, psi);
                    put(rec.left_derivs[k].as_mut().unwrap(), l, dpsi);
                }
            }
            if jump > 0.0 {
                // K(0) = 0, K'(0) = 1
                dpsi += TWO_PI_INV * jump.sqrt() * z.jump;
            }
            if let Some(k) = slot[cell + 1] {
                put(&mut rec.values[k], l, psi);
                put(&mut rec.derivs[k], l, dpsi);
            }
        }
    }
    Ok(finish(kind, noise, times, rec, true))
}

/// `Ψ_N` and `∂_tΨ_N`, the wave convolution with zero initial data.
pub fn wave_convolution(noise: &ModeNoise, output_times: &[f64]) -> Result<StochasticConvolution> {
    wave_recursion(ConvolutionKind::Wave, noise, output_times)
}

/// Behaviour of both convolutions across the jumps of the clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpContinuity {
    pub jumps: usize,
    /// Largest `|Ψ̂(l, s_j) − Ψ̂(l, s_j−)|` over jumps and modes.
    pub max_wave_increment: f64,
    /// Largest `|Φ̂(l, s_j) − Φ̂(l, s_j−) − (2π)^{-1} ξ^l_j|`.
    pub max_heat_jump_error: f64,
}

/// Compare wave and heat convolutions on the same noise at every jump.
pub fn jump_continuity(noise: &ModeNoise) -> Result<JumpContinuity> {
    let heat = heat_convolution(noise, &[])?;
    let wave = wave_convolution(noise, &[])?;
    let mut out = JumpContinuity { jumps: 0, max_wave_increment: 0.0, max_heat_jump_error: 0.0 };
    for i in 1..heat.times().len() {
        if !heat.jumps_at(i) {
            continue;
        }
        out.jumps += 1;
        out.max_wave_increment = out.max_wave_increment.max(wave.values()[i].max_coeff_diff(wave.left_value(i)));
        for l in ball_modes(noise.cutoff()) {
            let jump = heat.values()[i].coeff(l) - heat.left_value(i).coeff(l);
            let err = (jump - TWO_PI_INV * noise.jump_increment(l, i - 1)).norm();
            out.max_heat_jump_error = out.max_heat_jump_error.max(err);
        }
    }
    Ok(out)
}

/// Distinct values of `|l|²` over the ball, with multiplicities.
pub fn shell_multiplicities(cutoff: usize) -> Vec<(f64, usize)> {
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for l in ball_modes(cutoff) {
        *counts.entry(l[0] * l[0] + l[1] * l[1]).or_default() += 1;
    }
    let mut v: Vec<(f64, usize)> = counts.into_iter().map(|(k, c)| (k as f64, c)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// `c(t) = (2π)^{-2} Σ_l ∫_{(offset, offset + t]} kernel_l(offset + t − s)² dL(s)`,
/// integrating from the start of `path` (time 0 of `path` is `−offset`).
fn constants_on_path(
    kind: ConvolutionKind,
    path: &SubordinatorPath,
    cutoff: usize,
    times: &[f64],
    offset: f64,
) -> Result<RenormConstants> {
    use crate::subordinator::Side;
    let shells = shell_multiplicities(cutoff);
    let mut values = Vec::with_capacity(times.len());
    let mut left_values = Vec::with_capacity(times.len());
    for &t in times {
        let end = offset + t;
        let jump = path.evaluate(end, Side::Right)? - path.evaluate(end, Side::Left)?;
        let (mut c, mut c_left) = (0.0, 0.0);
        for &(l2, mult) in &shells {
            let v = stieltjes_integral(|s| kind.kernel(l2, end - s).powi(2), path, 0.0, end)?;
            c += mult as f64 * v;
            c_left += mult as f64 * (v - kind.kernel(l2, 0.0).powi(2) * jump).max(0.0);
        }
        values.push(c / (4.0 * PI * PI));
        left_values.push(c_left / (4.0 * PI * PI));
    }
    Ok(RenormConstants { kind, cutoff, times: times.to_vec(), values, left_values })
}

/// Renormalization constants `c_N(t)` of the heat or wave convolution on the
/// given clock path.
pub fn renorm_constants(
    kind: ConvolutionKind,
    path: &SubordinatorPath,
    cutoff: usize,
    times: &[f64],
) -> Result<RenormConstants> {
    if kind.is_stationary() {
        return Err(Error::Parameter(format!(
            "{} constants come from stationary_convolution",
            kind.name()
        )));
    }
    constants_on_path(kind, path, cutoff, times, 0.0)
}

/// Heat constants for the linear clock `L(t) = b t`, in closed form.
pub fn heat_constant_linear(cutoff: usize, t: f64, b: f64) -> f64 {
    let s: f64 = shell_multiplicities(cutoff)
        .iter()
        .map(|&(l2, m)| m as f64 * if l2 == 0.0 { t } else { -(-2.0 * t * l2).exp_m1() / (2.0 * l2) })
        .sum();
    b * s / (4.0 * PI * PI)
}

/// `I(N) = ∫_0^T c_N(t) dt` for the heat constants with `L(t) = t`.
pub fn integrated_heat_constant(cutoff: usize, horizon: f64) -> f64 {
    let t = horizon;
    let s: f64 = shell_multiplicities(cutoff)
        .iter()
        .map(|&(l2, m)| {
            m as f64
                * if l2 == 0.0 {
                    t * t / 2.0
                } else {
                    t / (2.0 * l2) + (-2.0 * t * l2).exp_m1() / (4.0 * l2 * l2)
                }
        })
        .sum();
    s / (4.0 * PI * PI)
}

/// Limit of `I(2N) − I(N)` as `N → ∞`: `T ln 2 / (4π)`.
pub fn integrated_heat_increment_limit(horizon: f64) -> f64 {
    horizon * 2f64.ln() / (4.0 * PI)
}

/// What a stationary run reports besides the fields.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryRun {
    pub convolution: StochasticConvolution,
    pub constants: RenormConstants,
    /// The clock on `[−T_past, T]`, shifted to start at 0.
    pub path: SubordinatorPath,
    pub past_horizon: f64,
    /// Bound on the second-moment mass lost by starting at `−T_past`.
    pub truncation_bias_bound: f64,
    pub log_moment: f64,
}

/// Stationary heat (`∂_t − Δ + 1`) or damped-wave
/// (`∂²_t + ∂_t + 1 − Δ`) convolution, driven from `−T_past`.
///
/// Output times lie in `[0, T]` with `T` the last output time.
pub fn stationary_convolution(
    kind: ConvolutionKind,
    spec: &SubordinatorSpec,
    cutoff: usize,
    output_times: &[f64],
    past_horizon: f64,
    seed: u64,
) -> Result<StationaryRun> {
    if !kind.is_stationary() {
        return Err(Error::Parameter(format!("{} is not a stationary kind", kind.name())));
    }
    if !(past_horizon > 0.0 && past_horizon.is_finite()) {
        return Err(Error::Parameter(format!("past horizon must be positive, got {past_horizon}")));
    }
    if output_times.is_empty() || output_times[0] < 0.0 || output_times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid("stationary output times must be nonnegative and strictly increasing".into()));
    }
    let lm = check_log_moment(spec)?;
    if !lm.finite {
        return Err(Error::StationarityUnsupported(format!(
            "the Lévy measure has no finite logarithmic moment (partial integral {:.6e})",
            lm.value
        )));
    }
    let horizon = output_times.last().copied().unwrap().max(f64::MIN_POSITIVE);
    let future = sample_subordinator(spec, horizon, seed)?;
    let past = sample_subordinator(spec, past_horizon, derive_seed(seed, &[label_key("past")]))?;
    let path = future.with_reflected_past(&past)?;
    let shifted: Vec<f64> = output_times.iter().map(|t| t + past_horizon).collect();
    let grid = grid_with_jumps(&path, path.horizon(), 1, &shifted);
    let noise = sample_mode_noise(&path, cutoff, &grid, derive_seed(seed, &[label_key("stationary-noise")]))?;
    let mut conv = match kind {
        ConvolutionKind::HeatStationary => heat_recursion(kind, &noise, &shifted, 1.0)?,
        _ => wave_recursion(kind, &noise, &shifted)?,
    };
    conv.times = output_times.to_vec();
    let constants = constants_on_path(kind, &path, cutoff, output_times, past_horizon)?;
    let rate = spec.mean_rate();
    let bias = stationary_bias_bound(kind, cutoff, past_horizon, rate);
    Ok(StationaryRun { convolution: conv, constants, path, past_horizon, truncation_bias_bound: bias, log_moment: lm.value })
}

/// Expected second-moment mass of the window `(−∞, −T_past]` at time 0.
///
/// Heat: `(2π)^{-2} Σ_l rate · e^{−2 T_past λ}/(2λ)` with `λ = |l|² + 1`.
/// Damped wave: `K(u)² ≤ e^{−u}/μ²`, giving `(2π)^{-2} Σ_l rate · e^{−T_past}/μ²`.
pub fn stationary_bias_bound(kind: ConvolutionKind, cutoff: usize, past_horizon: f64, rate: f64) -> f64 {
    let s: f64 = shell_multiplicities(cutoff)
        .iter()
        .map(|&(l2, m)| {
            m as f64
                * match kind {
                    ConvolutionKind::DampedWaveStationary => (-past_horizon).exp() / (0.75 + l2),
                    _ => (-2.0 * past_horizon * (l2 + 1.0)).exp() / (2.0 * (l2 + 1.0)),
                }
        })
        .sum();
    rate * s / (4.0 * PI * PI)
}
