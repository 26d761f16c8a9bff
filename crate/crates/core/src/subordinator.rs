//! Nondecreasing càdlàg time changes `L`.
//!
//! A [`SubordinatorPath`] is stored as an effective drift rate plus a sorted
//! list of jumps. Infinite-activity laws are sampled with small jumps below the
//! truncation level `ε` replaced by their mean, `b_eff = b + ∫_0^ε x ρ(dx)`.

use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::seeds::{label_key, stream, StreamRng};

/// Relative tolerance of the drift quadrature in Stieltjes integrals.
pub const STIELTJES_REL_TOL: f64 = 1e-10;

/// A Lévy density given analytically, for laws without a built-in sampler.
pub trait LevyDensity: Send + Sync + fmt::Debug {
    /// ρ(x) for x > 0.
    fn density(&self, x: f64) -> f64;

    /// `e^u ρ(e^u)`, the density of the image of ρ under `x = e^u`.
    ///
    /// Override when `e^u` would overflow for the tails of interest.
    fn log_coordinate_density(&self, u: f64) -> f64 {
        let x = u.exp();
        x * self.density(x)
    }
}

/// Jump-size law of a (compound) Poisson subordinator.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpLaw {
    Fixed(f64),
    Exponential { mean: f64 },
    Uniform { low: f64, high: f64 },
    /// Density `1 / (x log² x)` on `(e, ∞)`: a probability law without a
    /// finite logarithmic moment.
    LogTail,
}

impl JumpLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            JumpLaw::Fixed(s) if !(s > 0.0 && s.is_finite()) => {
                Err(Error::Parameter(format!("fixed jump size must be positive, got {s}")))
            }
            JumpLaw::Exponential { mean } if !(mean > 0.0 && mean.is_finite()) => {
                Err(Error::Parameter(format!("exponential jump mean must be positive, got {mean}")))
            }
            JumpLaw::Uniform { low, high } if !(low >= 0.0 && high > low && high.is_finite()) => Err(
                Error::Parameter(format!("uniform jump law needs 0 <= low < high, got [{low}, {high}]")),
            ),
            _ => Ok(()),
        }
    }

    fn sample(&self, rng: &mut StreamRng) -> f64 {
        match *self {
            JumpLaw::Fixed(s) => s,
            JumpLaw::Exponential { mean } => -mean * (1.0 - rng.random::<f64>()).ln(),
            JumpLaw::Uniform { low, high } => {
                // (low, high]; a zero-sized jump is not a jump
                high - (high - low) * rng.random::<f64>()
            }
            JumpLaw::LogTail => {
                // P(X > x) = 1 / ln x; sizes beyond e^700 are clamped to stay finite
                let u = (1.0 - rng.random::<f64>()).max(1.0 / 700.0);
                (1.0 / u).exp()
            }
        }
    }

    fn density(&self, x: f64) -> Option<f64> {
        match *self {
            JumpLaw::Fixed(_) => None,
            JumpLaw::Exponential { mean } => Some(if x > 0.0 { (-x / mean).exp() / mean } else { 0.0 }),
            JumpLaw::Uniform { low, high } => {
                Some(if x >= low && x <= high { 1.0 / (high - low) } else { 0.0 })
            }
            JumpLaw::LogTail => Some(if x > E {
                let l = x.ln();
                1.0 / (x * l * l)
            } else {
                0.0
            }),
        }
    }

    fn log_coordinate_density(&self, u: f64) -> Option<f64> {
        match *self {
            JumpLaw::LogTail => Some(if u > 1.0 { 1.0 / (u * u) } else { 0.0 }),
            JumpLaw::Exponential { mean } => {
                // e^u * e^{-e^u / m} / m, evaluated in log space
                let x = u.exp();
                Some(if x.is_finite() { (u - x / mean).exp() / mean } else { 0.0 })
            }
            _ => {
                let x = u.exp();
                self.density(x).map(|d| if x.is_finite() { x * d } else { 0.0 })
            }
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Fixed(s) => s,
            JumpLaw::Exponential { mean } => mean,
            JumpLaw::Uniform { low, high } => 0.5 * (low + high),
            JumpLaw::LogTail => f64::INFINITY,
        }
    }
}

/// Law of the subordinator, excluding the drift.
#[derive(Debug, Clone)]
pub enum SubordinatorKind {
    DeterministicLinear,
    Poisson { rate: f64, jump_size: f64 },
    CompoundPoisson { rate: f64, law: JumpLaw },
    /// Lévy density `shape · x⁻¹ e^{-rate·x}`.
    Gamma { shape: f64, rate: f64 },
    /// Lévy density `intensity · x^{-1-α} e^{-tempering·x}`.
    TemperedStable { alpha: f64, intensity: f64, tempering: f64 },
    /// Analytic density only; usable for diagnostics, not for sampling.
    Custom(Arc<dyn LevyDensity>),
}

impl SubordinatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            SubordinatorKind::DeterministicLinear => "deterministic-linear",
            SubordinatorKind::Poisson { .. } => "poisson",
            SubordinatorKind::CompoundPoisson { .. } => "compound-poisson",
            SubordinatorKind::Gamma { .. } => "gamma",
            SubordinatorKind::TemperedStable { .. } => "tempered-stable",
            SubordinatorKind::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubordinatorSpec {
    pub kind: SubordinatorKind,
    /// Drift rate `b ≥ 0`.
    pub drift: f64,
    /// Small-jump truncation `ε`, used by infinite-activity kinds only.
    pub truncation: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl SubordinatorSpec {
    pub fn deterministic(drift: f64) -> Self {
        Self { kind: SubordinatorKind::DeterministicLinear, drift, truncation: 0.0 }
    }

    pub fn poisson(rate: f64) -> Self {
        Self { kind: SubordinatorKind::Poisson { rate, jump_size: 1.0 }, drift: 0.0, truncation: 0.0 }
    }

    pub fn compound_poisson(rate: f64, law: JumpLaw) -> Self {
        Self { kind: SubordinatorKind::CompoundPoisson { rate, law }, drift: 0.0, truncation: 0.0 }
    }

    pub fn gamma(shape: f64, rate: f64, truncation: f64) -> Self {
        Self { kind: SubordinatorKind::Gamma { shape, rate }, drift: 0.0, truncation }
    }

    pub fn tempered_stable(alpha: f64, intensity: f64, tempering: f64, truncation: f64) -> Self {
        Self {
            kind: SubordinatorKind::TemperedStable { alpha, intensity, tempering },
            drift: 0.0,
            truncation,
        }
    }

    pub fn with_drift(mut self, drift: f64) -> Self {
        self.drift = drift;
        self
    }

    pub fn is_infinite_activity(&self) -> bool {
        matches!(self.kind, SubordinatorKind::Gamma { .. } | SubordinatorKind::TemperedStable { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.drift >= 0.0 && self.drift.is_finite()) {
            return Err(Error::Parameter(format!("drift must be >= 0, got {}", self.drift)));
        }
        match &self.kind {
            SubordinatorKind::DeterministicLinear | SubordinatorKind::Custom(_) => {}
            SubordinatorKind::Poisson { rate, jump_size } => {
                positive("poisson rate", *rate)?;
                positive("poisson jump size", *jump_size)?;
            }
            SubordinatorKind::CompoundPoisson { rate, law } => {
                positive("compound-poisson rate", *rate)?;
                law.validate()?;
            }
            SubordinatorKind::Gamma { shape, rate } => {
                positive("gamma shape", *shape)?;
                positive("gamma rate", *rate)?;
            }
            SubordinatorKind::TemperedStable { alpha, intensity, tempering } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::Parameter(format!("stability index must lie in (0,1), got {alpha}")));
                }
                positive("tempered-stable intensity", *intensity)?;
                positive("tempered-stable tempering", *tempering)?;
            }
        }
        if self.is_infinite_activity() {
            if self.truncation == 0.0 {
                return Err(Error::TruncationRequired(self.truncation));
            }
            positive("truncation", self.truncation)?;
        }
        Ok(())
    }

    /// Lévy density ρ(x), when ρ is absolutely continuous.
    pub fn levy_density(&self, x: f64) -> Option<f64> {
        if x <= 0.0 {
            return Some(0.0);
        }
        match &self.kind {
            SubordinatorKind::DeterministicLinear => Some(0.0),
            SubordinatorKind::Poisson { .. } => None,
            SubordinatorKind::CompoundPoisson { rate, law } => law.density(x).map(|d| rate * d),
            SubordinatorKind::Gamma { shape, rate } => Some(shape * (-rate * x).exp() / x),
            SubordinatorKind::TemperedStable { alpha, intensity, tempering } => {
                Some(intensity * x.powf(-1.0 - alpha) * (-tempering * x).exp())
            }
            SubordinatorKind::Custom(d) => Some(d.density(x)),
        }
    }

    /// Mean jump mass below `ε`, `∫_0^ε x ρ(dx)`, by quadrature.
    pub fn small_jump_mass(&self, eps: f64) -> Result<f64> {
        match self.kind {
            SubordinatorKind::Gamma { shape, rate } => {
                integrate(|x| shape * (-rate * x).exp(), 0.0, eps, 1e-13)
            }
            SubordinatorKind::TemperedStable { alpha, intensity, tempering } => {
                // x = ε v^{1/(1-α)} removes the x^{-α} endpoint singularity
                let p = 1.0 / (1.0 - alpha);
                let pre = intensity * eps.powf(1.0 - alpha) * p;
                integrate(|v| pre * (-tempering * eps * v.powf(p)).exp(), 0.0, 1.0, 1e-13)
            }
            _ => Ok(0.0),
        }
    }

    /// `E[L(1)] = b + ∫ x ρ(dx)`.
    pub fn mean_rate(&self) -> f64 {
        let jumps = match &self.kind {
            SubordinatorKind::DeterministicLinear => 0.0,
            SubordinatorKind::Poisson { rate, jump_size } => rate * jump_size,
            SubordinatorKind::CompoundPoisson { rate, law } => rate * law.mean(),
            SubordinatorKind::Gamma { shape, rate } => shape / rate,
            SubordinatorKind::TemperedStable { alpha, intensity, tempering } => {
                intensity * statrs::function::gamma::gamma(1.0 - alpha) * tempering.powf(alpha - 1.0)
            }
            SubordinatorKind::Custom(_) => f64::NAN,
        };
        self.drift + jumps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

/// Which one-sided value of a càdlàg path to return at a jump time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
}

/// A realization of `L` on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath {
    kind: String,
    horizon: f64,
    drift: f64,
    jumps: Vec<Jump>,
}

impl SubordinatorPath {
    /// Build a path from jumps sorted by time in `(0, T]`.
    pub fn new(kind: impl Into<String>, horizon: f64, drift: f64, jumps: Vec<Jump>) -> Result<Self> {
        positive("horizon", horizon)?;
        if !(drift >= 0.0 && drift.is_finite()) {
            return Err(Error::Parameter(format!("effective drift must be >= 0, got {drift}")));
        }
        let mut prev = 0.0;
        for j in &jumps {
            if !(j.time > prev && j.time <= horizon) {
                return Err(Error::Parameter(format!(
                    "jump times must be strictly increasing in (0, {horizon}], got {}",
                    j.time
                )));
            }
            if !(j.size > 0.0 && j.size.is_finite()) {
                return Err(Error::Parameter(format!("jump sizes must be positive, got {}", j.size)));
            }
            prev = j.time;
        }
        Ok(Self { kind: kind.into(), horizon, drift, jumps })
    }

    pub fn linear(horizon: f64, drift: f64) -> Result<Self> {
        Self::new("deterministic-linear", horizon, drift, Vec::new())
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Effective drift rate `b_eff`.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn is_pure_jump(&self) -> bool {
        self.drift == 0.0
    }

    /// `L(t)` (right) or `L(t−)` (left).
    pub fn evaluate(&self, t: f64, side: Side) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Range { t, horizon: self.horizon });
        }
        let n = match side {
            Side::Right => self.jumps.partition_point(|j| j.time <= t),
            Side::Left => self.jumps.partition_point(|j| j.time < t),
        };
        Ok(self.drift * t + self.jumps[..n].iter().map(|j| j.size).sum::<f64>())
    }

    /// `L(b) − L(a)` over the half-open interval `(a, b]`.
    pub fn increment(&self, a: f64, b: f64) -> f64 {
        let lo = self.jumps.partition_point(|j| j.time <= a);
        let hi = self.jumps.partition_point(|j| j.time <= b);
        self.drift * (b - a) + self.jumps[lo..hi].iter().map(|j| j.size).sum::<f64>()
    }

    /// The path on `[0, T_past + T]` formed by an independent copy on the
    /// negative half-line, reflected in time, followed by `self`.
    ///
    /// Time `τ` in the result corresponds to `τ − T_past` on the original
    /// axis, and the result is zero at `τ = 0`.
    pub fn with_reflected_past(&self, past: &SubordinatorPath) -> Result<Self> {
        let offset = past.horizon;
        let drift = if past.drift == self.drift {
            self.drift
        } else {
            return Err(Error::Pairing("past and future paths must share the effective drift".into()));
        };
        let mut jumps: Vec<Jump> = past
            .jumps
            .iter()
            .rev()
            .map(|j| Jump { time: offset - j.time, size: j.size })
            .filter(|j| j.time > 0.0)
            .collect();
        jumps.extend(self.jumps.iter().map(|j| Jump { time: offset + j.time, size: j.size }));
        Self::new(self.kind.clone(), offset + self.horizon, drift, jumps)
    }

    /// Line-oriented text form: a three-line header then `t ΔL` pairs.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "kind {}\nb_eff {:.16e}\nhorizon {:.16e}\n",
            self.kind, self.drift, self.horizon
        );
        for j in &self.jumps {
            out.push_str(&format!("{:.16e} {:.16e}\n", j.time, j.size));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut header = |key: &str| -> Result<String> {
            let (i, line) = lines.next().ok_or(Error::Parse { line: 0, msg: format!("missing {key}") })?;
            let rest = line
                .strip_prefix(key)
                .ok_or(Error::Parse { line: i + 1, msg: format!("expected `{key}`") })?;
            Ok(rest.trim().to_string())
        };
        let kind = header("kind")?;
        let drift = parse_f64(&header("b_eff")?, 2)?;
        let horizon = parse_f64(&header("horizon")?, 3)?;
        let mut jumps = Vec::new();
        for (i, line) in lines {
            let mut it = line.split_whitespace();
            let (Some(t), Some(s), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse { line: i + 1, msg: "expected `t dL`".into() });
            };
            jumps.push(Jump { time: parse_f64(t, i + 1)?, size: parse_f64(s, i + 1)? });
        }
        Self::new(kind, horizon, drift, jumps)
    }
}

pub(crate) fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse { line, msg: format!("`{s}`: {e}") })
}

fn sorted_jumps(mut jumps: Vec<Jump>) -> Vec<Jump> {
    jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut merged: Vec<Jump> = Vec::with_capacity(jumps.len());
    for j in jumps {
        match merged.last_mut() {
            Some(last) if last.time == j.time => last.size += j.size,
            _ => merged.push(j),
        }
    }
    merged
}

fn poisson_count(rng: &mut StreamRng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let p = Poisson::new(mean).expect("positive Poisson mean");
    p.sample(rng) as u64
}

/// Uniform time in `(0, T]`.
fn jump_time(rng: &mut StreamRng, horizon: f64) -> f64 {
    horizon * (1.0 - rng.random::<f64>())
}

/// Sample `L` on `[0, horizon]`, deterministically in `(spec, horizon, seed)`.
pub fn sample_subordinator(spec: &SubordinatorSpec, horizon: f64, seed: u64) -> Result<SubordinatorPath> {
    spec.validate()?;
    positive("horizon", horizon)?;
    let mut rng = stream(seed, &[label_key("subordinator")]);
    let name = spec.kind.name();
    let mut jumps = Vec::new();
    let mut drift = spec.drift;
    match &spec.kind {
        SubordinatorKind::DeterministicLinear => {}
        SubordinatorKind::Poisson { rate, jump_size } => {
            for _ in 0..poisson_count(&mut rng, rate * horizon) {
                jumps.push(Jump { time: jump_time(&mut rng, horizon), size: *jump_size });
            }
        }
        SubordinatorKind::CompoundPoisson { rate, law } => {
            for _ in 0..poisson_count(&mut rng, rate * horizon) {
                let time = jump_time(&mut rng, horizon);
                let size = law.sample(&mut rng);
                if size > 0.0 {
                    jumps.push(Jump { time, size });
                }
            }
        }
        SubordinatorKind::Gamma { shape, rate } => {
            // Thinning of a dominating Poisson random measure with intensity
            // h(x) = shape/x on (ε, c] and (shape/c) e^{-rate (x - c)} on (c, ∞).
            let eps = spec.truncation;
            let c = (1.0 / rate).max(eps);
            let near_mass = shape * (c / eps).ln();
            let far_mass = shape / (c * rate);
            let total = near_mass + far_mass;
            let tail = Exp::new(*rate).expect("positive rate");
            for _ in 0..poisson_count(&mut rng, total * horizon) {
                let time = jump_time(&mut rng, horizon);
                let (x, accept) = if rng.random::<f64>() * total < near_mass {
                    let x = eps * (c / eps).powf(rng.random::<f64>());
                    (x, (-rate * x).exp())
                } else {
                    let x = c + tail.sample(&mut rng);
                    (x, (c / x) * (-rate * c).exp())
                };
                if rng.random::<f64>() < accept {
                    jumps.push(Jump { time, size: x });
                }
            }
            drift += spec.small_jump_mass(eps)?;
        }
        SubordinatorKind::TemperedStable { alpha, intensity, tempering } => {
            // Pareto proposal intensity·x^{-1-α} on (ε, ∞), thinned by e^{-θx}.
            let eps = spec.truncation;
            let mass = intensity * eps.powf(-alpha) / alpha;
            for _ in 0..poisson_count(&mut rng, mass * horizon) {
                let time = jump_time(&mut rng, horizon);
                let u = 1.0 - rng.random::<f64>();
                let x = eps * u.powf(-1.0 / alpha);
                if rng.random::<f64>() < (-tempering * x).exp() {
                    jumps.push(Jump { time, size: x });
                }
            }
            drift += spec.small_jump_mass(eps)?;
        }
        SubordinatorKind::Custom(_) => {
            return Err(Error::Unsupported("no sampler for a custom Lévy density".into()));
        }
    }
    SubordinatorPath::new(name, horizon, drift, sorted_jumps(jumps))
}

/// `∫_{(a,b]} f(s) dL(s)`: drift part by adaptive quadrature, jumps summed exactly.
pub fn stieltjes_integral(
    mut f: impl FnMut(f64) -> f64,
    path: &SubordinatorPath,
    a: f64,
    b: f64,
) -> Result<f64> {
    if !(0.0 <= a && a <= b && b <= path.horizon) {
        return Err(Error::Range { t: if a < 0.0 || a > b { a } else { b }, horizon: path.horizon });
    }
    let mut total = 0.0;
    if path.drift > 0.0 {
        total += path.drift * integrate(&mut f, a, b, STIELTJES_REL_TOL)?;
    }
    let lo = path.jumps.partition_point(|j| j.time <= a);
    let hi = path.jumps.partition_point(|j| j.time <= b);
    for j in &path.jumps[lo..hi] {
        let v = f(j.time);
        if !v.is_finite() {
            return Err(Error::Evaluation { at: j.time, value: v });
        }
        total += v * j.size;
    }
    Ok(total)
}

/// Outcome of the logarithmic-moment test `∫ (0 ∨ log x) ρ(dx) < ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMoment {
    pub finite: bool,
    /// The integral when finite, otherwise the last partial integral reached.
    pub value: f64,
}

/// Number of doubling windows `[2^{k-1}, 2^k]` in `u = log x` examined.
const LOG_MOMENT_WINDOWS: usize = 40;
/// Consecutive non-shrinking windows that witness divergence.
const DIVERGENCE_RUN: usize = 8;

/// Decide whether the Lévy measure has a finite logarithmic moment.
pub fn check_log_moment(spec: &SubordinatorSpec) -> Result<LogMoment> {
    let log_density: Box<dyn Fn(f64) -> Option<f64> + '_> = match &spec.kind {
        SubordinatorKind::DeterministicLinear => return Ok(LogMoment { finite: true, value: 0.0 }),
        SubordinatorKind::Poisson { rate, jump_size } => {
            return Ok(LogMoment { finite: true, value: rate * jump_size.ln().max(0.0) })
        }
        SubordinatorKind::CompoundPoisson { rate, law: JumpLaw::Fixed(s) } => {
            return Ok(LogMoment { finite: true, value: rate * s.ln().max(0.0) })
        }
        SubordinatorKind::CompoundPoisson { rate, law } => {
            Box::new(move |u| law.log_coordinate_density(u).map(|d| rate * d))
        }
        SubordinatorKind::Gamma { shape, rate } => {
            Box::new(move |u: f64| Some(shape * (-rate * u.exp()).exp()))
        }
        SubordinatorKind::TemperedStable { alpha, intensity, tempering } => {
            Box::new(move |u: f64| Some(intensity * (-alpha * u - tempering * u.exp()).exp()))
        }
        SubordinatorKind::Custom(d) => Box::new(move |u| Some(d.log_coordinate_density(u))),
    };
    let mut integrand_err = None;
    let mut g = |u: f64| -> f64 {
        match log_density(u) {
            Some(d) if d.is_finite() && d >= 0.0 => u * d,
            other => {
                integrand_err.get_or_insert((u, other));
                0.0
            }
        }
    };
    let mut total = 0.0;
    let mut pieces: Vec<f64> = Vec::new();
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..LOG_MOMENT_WINDOWS {
        let piece = integrate(&mut g, lo, hi, 1e-10)?;
        total += piece;
        pieces.push(piece);
        if total > 0.0 && piece <= 1e-13 * total || (total == 0.0 && hi > 64.0) {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if let Some((u, v)) = integrand_err {
        return Err(Error::Unsupported(format!(
            "Lévy density is not a finite nonnegative function at x = e^{u} (value {v:?})"
        )));
    }
    let n = pieces.len();
    if n == LOG_MOMENT_WINDOWS {
        let tail = &pieces[n - DIVERGENCE_RUN - 1..];
        let growing = tail.windows(2).all(|w| w[1] >= 0.9 * w[0] && w[1] > 0.0);
        if growing {
            return Ok(LogMoment { finite: false, value: total });
        }
        let r = pieces[n - 1] / pieces[n - 2];
        total += pieces[n - 1] * r / (1.0 - r);
    }
    Ok(LogMoment { finite: true, value: total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_jump(drift: f64) -> SubordinatorPath {
        SubordinatorPath::new("test", 1.0, drift, vec![Jump { time: 0.5, size: 2.0 }]).unwrap()
    }

    #[test]
    fn deterministic_linear_path() {
        let p = sample_subordinator(&SubordinatorSpec::deterministic(1.0), 2.0, 3).unwrap();
        assert_eq!(p.drift(), 1.0);
        assert!(p.jumps().is_empty());
        assert_eq!(p.evaluate(2.0, Side::Right).unwrap(), 2.0);
    }

    #[test]
    fn evaluation_sides_at_jump() {
        let p = single_jump(0.0);
        assert_eq!(p.evaluate(0.5, Side::Right).unwrap(), 2.0);
        assert_eq!(p.evaluate(0.5, Side::Left).unwrap(), 0.0);
        assert_eq!(single_jump(1.0).evaluate(1.0, Side::Right).unwrap(), 3.0);
        assert_eq!(p.evaluate(0.0, Side::Right).unwrap(), 0.0);
    }

    #[test]
    fn evaluation_outside_horizon_is_range_error() {
        let p = single_jump(0.0);
        assert!(matches!(p.evaluate(1.5, Side::Right), Err(Error::Range { .. })));
        assert!(matches!(p.evaluate(-0.1, Side::Left), Err(Error::Range { .. })));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(matches!(
            SubordinatorSpec::gamma(1.0, 1.0, 0.0).validate(),
            Err(Error::TruncationRequired(_))
        ));
        assert!(matches!(SubordinatorSpec::poisson(-1.0).validate(), Err(Error::Parameter(_))));
        assert!(matches!(
            SubordinatorSpec::tempered_stable(1.2, 1.0, 1.0, 1e-3).validate(),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            sample_subordinator(&SubordinatorSpec::gamma(0.0, 1.0, 1e-3), 1.0, 1),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn stieltjes_constant_integrand_gives_total_mass() {
        let p = single_jump(1.0);
        let v = stieltjes_integral(|_| 1.0, &p, 0.0, 1.0).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn stieltjes_heat_kernel_against_linear_time() {
        let p = SubordinatorPath::linear(1.0, 1.0).unwrap();
        for &l2 in &[1.0, 5.0, 200.0, 5000.0] {
            let t = 0.8;
            let v = stieltjes_integral(|s| (2.0 * (s - t) * l2).exp(), &p, 0.0, t).unwrap();
            let exact = (1.0 - (-2.0 * t * l2).exp()) / (2.0 * l2);
            assert!(((v - exact) / exact).abs() < 1e-10, "|l|^2={l2}: {v} vs {exact}");
        }
    }

    #[test]
    fn stieltjes_single_jump_is_point_evaluation() {
        let p = single_jump(0.0);
        let v = stieltjes_integral(|s| s.sin(), &p, 0.0, 1.0).unwrap();
        assert_eq!(v, 0.5f64.sin() * 2.0);
        // (a, b] excludes a jump sitting at a
        assert_eq!(stieltjes_integral(|_| 1.0, &p, 0.5, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn stieltjes_rejects_non_finite_integrand() {
        let p = single_jump(0.0);
        let r = stieltjes_integral(|s| if s == 0.5 { f64::INFINITY } else { 0.0 }, &p, 0.0, 1.0);
        assert!(matches!(r, Err(Error::Evaluation { .. })));
    }

    #[test]
    fn reflected_past_places_jumps_mirror_image() {
        let past = SubordinatorPath::new("p", 2.0, 0.0, vec![Jump { time: 0.5, size: 1.0 }]).unwrap();
        let fut = SubordinatorPath::new("p", 1.0, 0.0, vec![Jump { time: 0.25, size: 3.0 }]).unwrap();
        let both = fut.with_reflected_past(&past).unwrap();
        assert_eq!(both.horizon(), 3.0);
        assert_eq!(both.jumps(), &[Jump { time: 1.5, size: 1.0 }, Jump { time: 2.25, size: 3.0 }]);
    }

    #[test]
    fn text_format_round_trips_bit_exactly() {
        let p = sample_subordinator(&SubordinatorSpec::gamma(1.0, 1.0, 1e-2), 1.5, 11).unwrap();
        let q = SubordinatorPath::from_text(&p.to_text()).unwrap();
        assert_eq!(p, q);
        assert!(p.to_text().starts_with("kind gamma\nb_eff "));
    }

    #[test]
    fn small_jump_mass_matches_closed_forms() {
        let g = SubordinatorSpec::gamma(2.0, 3.0, 0.1);
        let exact = 2.0 * (1.0 - (-0.3f64).exp()) / 3.0;
        assert!((g.small_jump_mass(0.1).unwrap() - exact).abs() < 1e-14);
        // θ → 0 limit is c ε^{1-α}/(1-α); check with θ small against the series
        let ts = SubordinatorSpec::tempered_stable(0.5, 1.0, 1e-9, 0.01);
        let exact = 0.01f64.powf(0.5) / 0.5;
        assert!((ts.small_jump_mass(0.01).unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn log_moment_simple_cases() {
        let cp = SubordinatorSpec::compound_poisson(2.0, JumpLaw::Uniform { low: 0.5, high: 3.0 });
        let lm = check_log_moment(&cp).unwrap();
        assert!(lm.finite);
        // 2 * ∫_1^3 ln x dx / 2.5 = (3 ln 3 - 2) * 0.8
        assert!((lm.value - (3.0 * 3f64.ln() - 2.0) * 0.8).abs() < 1e-8, "{}", lm.value);
        let lt = SubordinatorSpec::compound_poisson(1.0, JumpLaw::LogTail);
        assert!(!check_log_moment(&lt).unwrap().finite);
    }

    #[derive(Debug)]
    struct Broken;
    impl LevyDensity for Broken {
        fn density(&self, _x: f64) -> f64 {
            f64::NAN
        }
    }

    #[test]
    fn log_moment_rejects_unusable_custom_density() {
        let spec = SubordinatorSpec { kind: SubordinatorKind::Custom(Arc::new(Broken)), drift: 0.0, truncation: 0.0 };
        assert!(matches!(check_log_moment(&spec), Err(Error::Unsupported(_))));
        assert!(matches!(sample_subordinator(&spec, 1.0, 0), Err(Error::Unsupported(_))));
    }

    fn arb_path() -> impl Strategy<Value = SubordinatorPath> {
        (0.0f64..2.0, prop::collection::vec((0.001f64..1.0, 0.01f64..3.0), 0..12)).prop_map(|(b, raw)| {
            let jumps = sorted_jumps(raw.into_iter().map(|(t, s)| Jump { time: t, size: s }).collect());
            SubordinatorPath::new("arb", 1.0, b, jumps).unwrap()
        })
    }

    proptest! {
        #[test]
        fn evaluation_is_monotone(p in arb_path(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(p.evaluate(lo, Side::Right).unwrap() <= p.evaluate(hi, Side::Right).unwrap());
            prop_assert!(p.evaluate(lo, Side::Left).unwrap() <= p.evaluate(hi, Side::Left).unwrap());
        }

        #[test]
        fn jumps_are_consistent(p in arb_path()) {
            for j in p.jumps() {
                let d = p.evaluate(j.time, Side::Right).unwrap() - p.evaluate(j.time, Side::Left).unwrap();
                prop_assert!((d - j.size).abs() <= 1e-12 * (1.0 + j.size));
            }
        }

        #[test]
        fn stieltjes_is_linear(p in arb_path(), al in -3.0f64..3.0, be in -3.0f64..3.0) {
            let f = |s: f64| (3.0 * s).cos();
            let g = |s: f64| (s - 1.0).exp();
            let lhs = stieltjes_integral(|s| al * f(s) + be * g(s), &p, 0.0, 1.0).unwrap();
            let rhs = al * stieltjes_integral(f, &p, 0.0, 1.0).unwrap()
                + be * stieltjes_integral(g, &p, 0.0, 1.0).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())) * 10.0);
        }

        #[test]
        fn stieltjes_is_additive(p in arb_path(), a in 0.0f64..0.5, b in 0.5f64..1.0) {
            let f = |s: f64| 1.0 + s * s;
            let whole = stieltjes_integral(f, &p, a, 1.0).unwrap();
            let parts = stieltjes_integral(f, &p, a, b).unwrap() + stieltjes_integral(f, &p, b, 1.0).unwrap();
            if p.is_pure_jump() {
                prop_assert!((whole - parts).abs() <= 1e-13 * (1.0 + whole.abs()));
            } else {
                prop_assert!((whole - parts).abs() <= 1e-9 * (1.0 + whole.abs()));
            }
        }
    }
}
