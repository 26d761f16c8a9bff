//! Hermite polynomials, Wick powers of convolution fields, and Monte-Carlo
//! diagnostics of their covariance structure and Cauchy convergence.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linfield::{heat_convolution, renorm_constants, wave_convolution, ConvolutionKind, RenormConstants, StochasticConvolution};
use crate::pathint::sample_mode_noise;
use crate::seeds::{derive_seed, label_key};
use crate::spectral::{pointwise_map, BesovNorm, SpectralField};
use crate::subordinator::{sample_subordinator, SubordinatorPath, SubordinatorSpec};

/// `H_k(x; σ²)` by the recurrence `H_{k+1} = x H_k − k σ² H_{k−1}`.
pub fn hermite(k: usize, x: f64, var: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    if k == 0 {
        return h0;
    }
    for j in 1..k {
        let h2 = x * h1 - j as f64 * var * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `H_k(f; c)` of a real field, exact at cutoff `k·N`. Order 0 is the constant 1.
pub fn wick_power_field(f: &SpectralField, c: f64, k: usize) -> Result<SpectralField> {
    match k {
        0 => Ok(SpectralField::constant(0, 1.0)),
        1 => Ok(f.clone()),
        _ => Ok(pointwise_map(f, |x| hermite(k, x, c), k, k * f.cutoff())?.field),
    }
}

/// `X_N^{⋄k}` along the output times of a convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct WickPower {
    pub kind: ConvolutionKind,
    pub order: usize,
    pub cutoff: usize,
    pub times: Vec<f64>,
    pub values: Vec<SpectralField>,
    /// Powers of the left limits, where the convolution jumps.
    pub left_values: Vec<Option<SpectralField>>,
    pub constants: RenormConstants,
}

impl WickPower {
    pub fn left_value(&self, i: usize) -> &SpectralField {
        self.left_values[i].as_ref().unwrap_or(&self.values[i])
    }
}

pub fn wick_power(conv: &StochasticConvolution, constants: &RenormConstants, k: usize) -> Result<WickPower> {
    if constants.kind != conv.kind() || constants.cutoff != conv.cutoff() || constants.times != conv.times() {
        return Err(Error::Pairing(format!(
            "convolution ({}, N = {}) and constants ({}, N = {}) describe different objects or grids",
            conv.kind().name(),
            conv.cutoff(),
            constants.kind.name(),
            constants.cutoff
        )));
    }
    let mut values = Vec::with_capacity(conv.times().len());
    let mut left_values = Vec::with_capacity(conv.times().len());
    for i in 0..conv.times().len() {
        values.push(wick_power_field(&conv.values()[i], constants.values[i], k)?);
        left_values.push(if conv.jumps_at(i) {
            Some(wick_power_field(conv.left_value(i), constants.left_values[i], k)?)
        } else {
            None
        });
    }
    Ok(WickPower {
        kind: conv.kind(),
        order: k,
        cutoff: conv.cutoff(),
        times: conv.times().to_vec(),
        values,
        left_values,
        constants: constants.clone(),
    })
}

pub const MIN_ENSEMBLE: usize = 100;

/// Monte-Carlo comparison of `E[X^{⋄k}(s,x) X^{⋄m}(t,y)]` against
/// `k! δ_{km} E[X(s,x) X(t,y)]^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceRecord {
    pub k: usize,
    pub m: usize,
    pub samples: usize,
    pub estimate: f64,
    pub estimate_se: f64,
    pub base_covariance: f64,
    pub base_covariance_se: f64,
    pub predicted: f64,
    /// Standard error of `estimate − predicted`, by the delta method on the
    /// joint sample.
    pub difference_se: f64,
}

impl CovarianceRecord {
    /// `|estimate − predicted|` in units of `difference_se`.
    pub fn z_score(&self) -> f64 {
        let d = (self.estimate - self.predicted).abs();
        if self.difference_se > 0.0 {
            d / self.difference_se
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within(&self, n_se: f64) -> bool {
        self.z_score() <= n_se
    }
}

fn mean_se(v: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = v.clone().sum::<f64>() / n as f64;
    let var = v.map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// `x, y`: base values `X(s,x)`, `X(t,y)`; `wx, wy`: the Wick powers of
/// orders `k` and `m` at the same points, one entry per ensemble member.
pub fn covariance_diagnostic(x: &[f64], y: &[f64], wx: &[f64], wy: &[f64], k: usize, m: usize) -> Result<CovarianceRecord> {
    let n = x.len();
    if y.len() != n || wx.len() != n || wy.len() != n {
        return Err(Error::Pairing("ensemble arrays must have equal length".into()));
    }
    if n < MIN_ENSEMBLE {
        return Err(Error::EnsembleTooSmall { got: n, min: MIN_ENSEMBLE });
    }
    let prod = |i: usize| wx[i] * wy[i];
    let base = |i: usize| x[i] * y[i];
    let (estimate, estimate_se) = mean_se((0..n).map(prod), n);
    let (cov, cov_se) = mean_se((0..n).map(base), n);
    let (predicted, slope) = if k == m {
        let kf = factorial(k);
        (kf * cov.powi(k as i32), kf * k as f64 * cov.powi(k as i32 - 1))
    } else {
        (0.0, 0.0)
    };
    let (_, difference_se) = mean_se((0..n).map(|i| prod(i) - slope * base(i)), n);
    Ok(CovarianceRecord {
        k,
        m,
        samples: n,
        estimate,
        estimate_se,
        base_covariance: cov,
        base_covariance_se: cov_se,
        predicted,
        difference_se,
    })
}

/// Time part of a space-time norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TimeNorm {
    /// `∫_0^T ‖·‖^γ dt`, reported without the `1/γ` power.
    Lebesgue { gamma: f64 },
    Sup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSpec {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub time: TimeNorm,
    pub oversample: usize,
}

impl NormSpec {
    fn besov(&self) -> Result<BesovNorm> {
        Ok(BesovNorm::new(self.alpha, self.p, self.q)?.with_oversample(self.oversample))
    }
}

/// Integrability window of heat Wick powers of order `k` in
/// `L^γ([0,T]; B^α)`: `α < −εk` and `γ < 2/((1−ε)k)` for some `ε ∈ (0, 1/k)`.
///
/// Returns the `ε` used: the given one, or the midpoint of the admissible range.
pub fn check_heat_window(k: usize, alpha: f64, time: TimeNorm, epsilon: Option<f64>) -> Result<f64> {
    let kf = k as f64;
    let TimeNorm::Lebesgue { gamma } = time else {
        return Err(Error::Constraint(
            "sup-in-time norms are not available for heat Wick powers; use L^γ in time".into(),
        ));
    };
    if !(gamma > 0.0) {
        return Err(Error::Constraint(format!("γ = {gamma} violates γ > 0")));
    }
    match epsilon {
        Some(eps) => {
            if !(eps > 0.0 && eps < 1.0 / kf) {
                return Err(Error::Constraint(format!("ε = {eps} violates 0 < ε < 1/k = {}", 1.0 / kf)));
            }
            if !(alpha < -eps * kf) {
                return Err(Error::Constraint(format!(
                    "α = {alpha} violates α < −εk = {} (heat Wick-power regularity window)",
                    -eps * kf
                )));
            }
            let bound = 2.0 / ((1.0 - eps) * kf);
            if !(gamma < bound) {
                return Err(Error::Constraint(format!(
                    "γ ≥ 2/((1−ε)k) = {bound} violates heat Wick-power integrability window"
                )));
            }
            Ok(eps)
        }
        None => {
            let lo = (1.0 - 2.0 / (gamma * kf)).max(0.0);
            let hi_alpha = -alpha / kf;
            let hi = hi_alpha.min(1.0 / kf);
            if !(alpha < 0.0) {
                return Err(Error::Constraint(format!(
                    "α = {alpha} violates α < −εk for every ε > 0 (heat Wick-power regularity window)"
                )));
            }
            if !(lo < hi) {
                return Err(Error::Constraint(format!(
                    "γ ≥ 2/((1−ε)k) for every ε with α < −εk: γ = {gamma} violates heat Wick-power integrability window"
                )));
            }
            Ok(0.5 * (lo + hi))
        }
    }
}

/// Cauchy-convergence study of `X_N^{⋄k}` against `X_{2N}^{⋄k}` on coupled noise.
#[derive(Debug, Clone)]
pub struct CauchyStudy {
    pub kind: ConvolutionKind,
    pub order: usize,
    pub cutoffs: Vec<usize>,
    pub norm: NormSpec,
    pub epsilon: Option<f64>,
    pub subordinator: SubordinatorSpec,
    pub horizon: f64,
    /// Uniform cells of the time mesh.
    pub time_cells: usize,
    /// Geometric refinement levels after each jump (heat only). Raised to
    /// [`CauchyStudy::resolving_levels`] when smaller.
    pub graded_levels: usize,
    pub ensemble: usize,
    pub seed: u64,
}

/// Per-sample study output: one norm per cutoff, plus the clock used.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchySample {
    pub norms: Vec<f64>,
    pub jumps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub kind: &'static str,
    pub order: usize,
    pub cutoffs: Vec<usize>,
    pub norm: NormSpec,
    /// `values[i][s]`: norm at `cutoffs[i]` for sample `s`.
    pub values: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub slope: f64,
}

impl ConvergenceReport {
    /// Rows `kind,k,N,sample,norm_value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,k,N,sample,norm_value\n");
        for (i, n) in self.cutoffs.iter().enumerate() {
            for (s, v) in self.values[i].iter().enumerate() {
                out.push_str(&format!("{},{},{},{},{:.16e}\n", self.kind, self.order, n, s, v));
            }
        }
        out
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.means.windows(2).all(|w| w[1] < w[0])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Uniform mesh on `[0, T]` with jump times and, after each jump, points
/// `s_j + h 2^{−i}`, `i = 1..levels`, where `h` is the uniform spacing.
pub fn graded_mesh(path: &SubordinatorPath, horizon: f64, cells: usize, levels: usize) -> Vec<f64> {
    let h = horizon / cells as f64;
    let mut extra = Vec::new();
    for j in path.jumps().iter().filter(|j| j.time <= horizon) {
        for i in 1..=levels {
            extra.push(j.time + h * (-(i as f64)).exp2());
        }
    }
    crate::pathint::grid_with_jumps(path, horizon, cells, &extra)
}

impl CauchyStudy {
    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::Parameter("Wick order must be at least 1".into()));
        }
        if self.cutoffs.is_empty() || self.cutoffs.iter().any(|&n| n < 1) || self.cutoffs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("cutoffs must be a strictly increasing list of positive integers".into()));
        }
        if !(self.horizon > 0.0) || self.time_cells < 1 {
            return Err(Error::Parameter("study needs a positive horizon and at least one time cell".into()));
        }
        self.subordinator.validate()?;
        self.norm.besov()?;
        match self.kind {
            ConvolutionKind::Heat => {
                check_heat_window(self.order, self.norm.alpha, self.norm.time, self.epsilon)?;
            }
            ConvolutionKind::Wave => {
                if !(self.norm.alpha < 0.0) {
                    return Err(Error::Constraint(format!(
                        "α = {} violates α < 0 (wave Wick-power regularity)",
                        self.norm.alpha
                    )));
                }
                if let TimeNorm::Lebesgue { gamma } = self.norm.time {
                    if !(gamma > 0.0) {
                        return Err(Error::Constraint(format!("γ = {gamma} violates γ > 0")));
                    }
                }
            }
            other => return Err(Error::Parameter(format!("Cauchy studies support heat and wave, not {}", other.name()))),
        }
        Ok(())
    }

    /// Space norm at each output time (right values and left limits) folded
    /// into the time norm.
    fn time_norm(&self, besov: &BesovNorm, a: &WickPower, b: &WickPower) -> f64 {
        let n = a.times.len();
        let right: Vec<f64> = (0..n).map(|i| besov.eval(&a.values[i].sub(&b.values[i]))).collect();
        let left: Vec<f64> = (0..n)
            .map(|i| {
                if a.left_values[i].is_some() || b.left_values[i].is_some() {
                    besov.eval(&a.left_value(i).sub(b.left_value(i)))
                } else {
                    right[i]
                }
            })
            .collect();
        match self.norm.time {
            TimeNorm::Sup => right.iter().chain(&left).copied().fold(0.0, f64::max),
            TimeNorm::Lebesgue { gamma } => (1..n)
                .map(|i| 0.5 * (a.times[i] - a.times[i - 1]) * (right[i - 1].powf(gamma) + left[i].powf(gamma)))
                .sum(),
        }
    }

    /// Levels whose finest offset `h 2^{-L}` is below a quarter of the
    /// heat boundary-layer width `1/N_top²` after a jump.
    pub fn resolving_levels(&self) -> usize {
        let top = 2 * self.cutoffs.last().copied().unwrap_or(1);
        let h = self.horizon / self.time_cells.max(1) as f64;
        (h * (top * top) as f64).log2().ceil().max(0.0) as usize + 2
    }

    /// One coupled realization: clock, noise at the largest cutoff, and the
    /// Cauchy difference for every cutoff.
    pub fn run_sample(&self, index: usize) -> Result<CauchySample> {
        let i = index as u64;
        let path = sample_subordinator(&self.subordinator, self.horizon, derive_seed(self.seed, &[label_key("path"), i]))?;
        let top = 2 * *self.cutoffs.last().unwrap();
        let levels = if self.kind == ConvolutionKind::Heat { self.graded_levels.max(self.resolving_levels()) } else { 0 };
        let mesh = graded_mesh(&path, self.horizon, self.time_cells, levels);
        let noise = sample_mode_noise(&path, top, &mesh, derive_seed(self.seed, &[label_key("noise"), i]))?;
        let full = match self.kind {
            ConvolutionKind::Heat => heat_convolution(&noise, &[])?,
            _ => wave_convolution(&noise, &[])?,
        };
        let besov = self.norm.besov()?;
        let mut levels: Vec<usize> = self.cutoffs.clone();
        levels.push(top);
        let mut powers: Vec<WickPower> = Vec::with_capacity(levels.len());
        for &m in &levels {
            let conv = if m == top { full.clone() } else { full.project_modes(m) };
            let c = renorm_constants(self.kind, &path, m, conv.times())?;
            powers.push(wick_power(&conv, &c, self.order)?);
        }
        let mut norms = Vec::with_capacity(self.cutoffs.len());
        for (j, &n) in self.cutoffs.iter().enumerate() {
            let twice = levels.iter().position(|&m| m == 2 * n).ok_or_else(|| {
                Error::Parameter(format!("cutoff {n} needs its double {} in the study", 2 * n))
            });
            let v = match twice {
                Ok(pos) => self.time_norm(&besov, &powers[j], &powers[pos]),
                Err(_) => {
                    // 2N not among the cutoffs: build it from the same noise
                    let conv = full.project_modes(2 * n);
                    let c = renorm_constants(self.kind, &path, 2 * n, conv.times())?;
                    self.time_norm(&besov, &powers[j], &wick_power(&conv, &c, self.order)?)
                }
            };
            if !v.is_finite() {
                return Err(Error::Convergence(format!("non-finite Cauchy difference at N = {n}")));
            }
            norms.push(v);
        }
        Ok(CauchySample { norms, jumps: path.jumps().len() })
    }

    /// Assemble a report from per-sample results in sample order.
    pub fn report(&self, samples: &[CauchySample]) -> ConvergenceReport {
        let k = self.cutoffs.len();
        let values: Vec<Vec<f64>> = (0..k).map(|i| samples.iter().map(|s| s.norms[i]).collect()).collect();
        let n = samples.len();
        let (means, standard_errors): (Vec<f64>, Vec<f64>) = values
            .iter()
            .map(|v| if n > 1 { mean_se(v.iter().copied(), n) } else { (v[0], 0.0) })
            .unzip();
        let xs: Vec<f64> = self.cutoffs.iter().map(|&c| c as f64).collect();
        let slope = if k > 1 { log_log_slope(&xs, &means) } else { f64::NAN };
        ConvergenceReport {
            kind: self.kind.name(),
            order: self.order,
            cutoffs: self.cutoffs.clone(),
            norm: self.norm,
            values,
            means,
            standard_errors,
            slope,
        }
    }

    /// Run the whole ensemble sequentially.
    pub fn run(&self) -> Result<ConvergenceReport> {
        self.validate()?;
        let samples = (0..self.ensemble).map(|i| self.run_sample(i)).collect::<Result<Vec<_>>>()?;
        Ok(self.report(&samples))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::field_product;
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn low_order_hermite() {
        for &x in &[-1.5, 0.0, 0.3, 2.0] {
            assert_eq!(hermite(0, x, 1.0), 1.0);
            assert!((hermite(2, x, 1.0) - (x * x - 1.0)).abs() < 1e-15);
            assert!((hermite(3, x, 1.0) - (x * x * x - 3.0 * x)).abs() < 1e-14);
            assert!((hermite(2, x, 0.7) - (x * x - 0.7)).abs() < 1e-15);
            assert_eq!(hermite(4, x, 0.0), x.powi(4));
        }
    }

    #[test]
    fn order_two_is_square_minus_constant() {
        let f = SpectralField::mode_pair(3, [2, 1], Complex64::new(0.3, -0.4))
            .unwrap()
            .add(&SpectralField::mode_pair(3, [0, 1], Complex64::new(0.1, 0.0)).unwrap());
        let w = wick_power_field(&f, 0.8, 2).unwrap();
        let expect = field_product(&f, &f).add_constant(-0.8);
        assert!(w.max_coeff_diff(&expect) < 1e-14);
        assert_eq!(wick_power_field(&f, 0.8, 1).unwrap(), f);
    }

    #[test]
    fn order_three_single_pair_symbolic() {
        // f = a(e_l + e_{−l}) = 2a cos(l·x); f³ = a³(e_{3l} + 3e_l + 3e_{−l} + e_{−3l})
        let a = 0.7;
        let c = 0.4;
        let f = SpectralField::mode_pair(2, [1, 1], Complex64::new(a, 0.0)).unwrap();
        let w = wick_power_field(&f, c, 3).unwrap();
        let mut expect = SpectralField::zeros(6);
        expect.set([3, 3], Complex64::new(a * a * a, 0.0)).unwrap();
        expect.set([-3, -3], Complex64::new(a * a * a, 0.0)).unwrap();
        expect.set([1, 1], Complex64::new(3.0 * a * a * a - 3.0 * c * a, 0.0)).unwrap();
        expect.set([-1, -1], Complex64::new(3.0 * a * a * a - 3.0 * c * a, 0.0)).unwrap();
        assert!(w.max_coeff_diff(&expect) < 1e-12);
    }

    #[test]
    fn mean_is_zero_mode() {
        let f = SpectralField::mode_pair(2, [1, 0], Complex64::new(0.5, 0.2)).unwrap().add_constant(0.3);
        let w = wick_power_field(&f, 0.2, 3).unwrap();
        let n = 32;
        let grid = w.synthesize(n);
        let mean = grid.iter().map(|z| z.re).sum::<f64>() / (n * n) as f64;
        assert!((mean - w.mean().re).abs() < 1e-14);
    }

    #[test]
    fn small_ensemble_is_refused() {
        let v = vec![0.0; 50];
        assert!(matches!(covariance_diagnostic(&v, &v, &v, &v, 1, 1), Err(Error::EnsembleTooSmall { got: 50, .. })));
    }

    #[test]
    fn heat_window_gate() {
        let l1 = TimeNorm::Lebesgue { gamma: 1.0 };
        assert!(check_heat_window(2, -0.5, l1, None).is_ok());
        let e = check_heat_window(3, -0.5, l1, Some(0.05)).unwrap_err();
        assert!(e.to_string().contains("2/((1−ε)k)"), "{e}");
        let e = check_heat_window(2, -0.05, l1, Some(0.1)).unwrap_err();
        assert!(e.to_string().contains("α < −εk"), "{e}");
        assert!(matches!(check_heat_window(2, -0.5, TimeNorm::Sup, None), Err(Error::Constraint(_))));
        assert!(check_heat_window(2, 0.1, l1, None).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let x = [4.0, 8.0, 16.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.75)).collect();
        assert!((log_log_slope(&x, &y) + 0.75).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn binomial_identity(a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.0f64..2.0, k in 0usize..=5) {
            let lhs = hermite(k, a + b, c);
            let rhs: f64 = (0..=k).map(|l| binomial(k, l) * a.powi((k - l) as i32) * hermite(l, b, c)).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }

        #[test]
        fn generating_function(t in -0.5f64..0.5, x in -2.0f64..2.0, s2 in 0.0f64..2.0) {
            let series: f64 = (0..=6).map(|k| t.powi(k as i32) / factorial(k) * hermite(k, x, s2)).sum();
            let exact = (t * x - s2 * t * t / 2.0).exp();
            // degree-7 Taylor tail of the majorant e^{|x|τ + σ²τ²/2} at τ = |t|,
            // whose Taylor coefficients are H_k(|x|; −σ²)/k!
            let tau = t.abs();
            let majorant = (x.abs() * tau + s2 * tau * tau / 2.0).exp();
            let head: f64 = (0..=6).map(|k| tau.powi(k as i32) / factorial(k) * hermite(k, x.abs(), -s2)).sum();
            let tail = majorant - head;
            prop_assert!((series - exact).abs() <= tail + 1e-14);
        }
    }
}
