//! Fixed-point solvers for the remainder `v = u − X` of the renormalized
//! equations
//!
//! ```text
//! heat:  v(t) = e^{tΔ}u₀ ± Σ_{j≤2} C(2,j) ∫_0^t e^{(t−s)Δ} v^{2−j} Φ^{⋄j} ds
//! wave:  v(t) = cos(t|∇|)u₀ + sin(t|∇|)/|∇| u₁
//!               ± Σ_{j≤k} C(k,j) ∫_0^t sin((t−s)|∇|)/|∇| v^{k−j} Ψ^{⋄j} ds
//! ```
//!
//! Heat steps use the exponential trapezoidal rule with an in-step Picard
//! loop; wave steps use the exact rotation with the forcing integrated
//! exactly against its linear interpolant.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft::fft_size;
use crate::linfield::{RenormConstants, StochasticConvolution};
use crate::spectral::{mode_norm_sq, sobolev_norm, BesovNorm, SpectralField};
use crate::wick::{binomial, hermite, wick_power_field};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    Heat,
    Wave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveConfig {
    pub equation: Equation,
    /// `+1` or `−1`.
    pub sign: f64,
    pub order: usize,
    /// Solver cutoff `M`.
    pub cutoff: usize,
    pub dt: f64,
    /// Blow-up threshold `R` on the monitored norm.
    pub threshold: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub max_halvings: usize,
    /// Heat: `γ`, `δ` of `L^γ B^{2/γ−δ} ∩ C B^{−δ}`; `ε` of the admissible window.
    pub gamma: f64,
    pub delta: f64,
    /// Heat: window parameter; wave: the `ε` of `H^{1−ε} × H^{−ε}`.
    pub epsilon: f64,
    /// `false` keeps only the pure-data forcing `±X^{⋄k}`.
    pub nonlinear: bool,
    /// Oversampling of the physical grid in sup-norm monitoring.
    pub oversample: usize,
    /// Keep every step of the solution (needed for `mild_residual`).
    pub record_steps: bool,
}

impl SolveConfig {
    pub fn heat(cutoff: usize) -> Self {
        Self {
            equation: Equation::Heat,
            sign: -1.0,
            order: 2,
            cutoff,
            dt: 1e-3,
            threshold: 10.0,
            picard_tol: 1e-12,
            picard_max_iter: 30,
            max_halvings: 8,
            gamma: 4.0,
            delta: 0.1,
            epsilon: 0.1,
            nonlinear: true,
            oversample: 2,
            record_steps: false,
        }
    }

    pub fn wave(cutoff: usize, order: usize) -> Self {
        Self { equation: Equation::Wave, order, epsilon: 0.1 / (order.max(2) - 1) as f64, ..Self::heat(cutoff) }
    }

    /// Parameter windows of the local well-posedness statements.
    pub fn validate(&self) -> Result<()> {
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(Error::Parameter(format!("sign must be +1 or −1, got {}", self.sign)));
        }
        if !(self.dt > 0.0) || !(self.threshold > 0.0) || self.cutoff < 1 {
            return Err(Error::Parameter("need δt > 0, R > 0 and cutoff M ≥ 1".into()));
        }
        if !(self.picard_tol > 0.0) || self.picard_max_iter == 0 {
            return Err(Error::Parameter("need a positive Picard tolerance and iteration budget".into()));
        }
        let (eps, k) = (self.epsilon, self.order);
        match self.equation {
            Equation::Heat => {
                if k != 2 {
                    return Err(Error::Unsupported(format!(
                        "heat order k = {k}: only k = 2 is solvable, the time-integrability of Φ^⋄k fails for k ≥ 3"
                    )));
                }
                if !(eps > 0.0 && eps < 0.5) {
                    return Err(Error::Constraint(format!("ε = {eps} violates 0 < ε < 1/2")));
                }
                let (lo, hi) = (2.0 / (1.0 - eps), 2.0 / eps);
                if !(self.gamma > lo && self.gamma < hi) {
                    return Err(Error::Constraint(format!(
                        "γ = {} violates 2/(1−ε) = {lo} < γ < 2/ε = {hi}",
                        self.gamma
                    )));
                }
                let top = 2.0 / self.gamma - eps;
                if !(self.delta > 0.0 && self.delta < top) {
                    return Err(Error::Constraint(format!(
                        "δ = {} violates 0 < δ < 2/γ − ε = {top}",
                        self.delta
                    )));
                }
            }
            Equation::Wave => {
                if k < 2 {
                    return Err(Error::Parameter(format!("wave order must be at least 2, got {k}")));
                }
                let hi = 1.0 / (2.0 * (k as f64 - 1.0));
                if !(eps > 0.0 && eps < hi) {
                    return Err(Error::Constraint(format!("ε = {eps} violates 0 < ε < 1/(2(k−1)) = {hi}")));
                }
            }
        }
        Ok(())
    }
}

/// Wick data `X^{⋄j}`, `j = 0..=k`, on a time grid starting at 0, with left
/// limits where the data jump.
#[derive(Debug, Clone, PartialEq)]
pub struct WickData {
    pub times: Vec<f64>,
    /// `orders[j][i]`.
    pub orders: Vec<Vec<SpectralField>>,
    pub left: Vec<Vec<Option<SpectralField>>>,
}

impl WickData {
    pub fn new(times: Vec<f64>, orders: Vec<Vec<SpectralField>>) -> Result<Self> {
        let left = orders.iter().map(|o| vec![None; o.len()]).collect();
        Self::with_left_limits(times, orders, left)
    }

    pub fn with_left_limits(
        times: Vec<f64>,
        orders: Vec<Vec<SpectralField>>,
        left: Vec<Vec<Option<SpectralField>>>,
    ) -> Result<Self> {
        if times.len() < 2 || times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Data("data times must start at 0 and increase strictly".into()));
        }
        if orders.is_empty() || left.len() != orders.len() {
            return Err(Error::Data("data need at least order 0".into()));
        }
        for (o, l) in orders.iter().zip(&left) {
            if o.len() != times.len() || l.len() != times.len() {
                return Err(Error::Data("every Wick order needs one field per data time".into()));
            }
        }
        Ok(Self { times, orders, left })
    }

    /// All orders zero except `X^{⋄0} = 1`.
    pub fn zero(times: Vec<f64>, order: usize) -> Result<Self> {
        let n = times.len();
        let mut orders = vec![vec![SpectralField::constant(0, 1.0); n]];
        for _ in 0..order {
            orders.push(vec![SpectralField::zeros(0); n]);
        }
        Self::new(times, orders)
    }

    /// Renormalized powers `H_j(X; c)` of a convolution, `j = 0..=k`.
    pub fn renormalized(conv: &StochasticConvolution, constants: &RenormConstants, k: usize) -> Result<Self> {
        Self::from_convolution(conv, k, |i, left| if left { constants.left_values[i] } else { constants.values[i] })
    }

    /// Un-renormalized powers `P_N(X^j)`, `j = 0..=k`.
    pub fn naive(conv: &StochasticConvolution, k: usize) -> Result<Self> {
        Self::from_convolution(conv, k, |_, _| 0.0)
    }

    fn from_convolution(conv: &StochasticConvolution, k: usize, var: impl Fn(usize, bool) -> f64) -> Result<Self> {
        let renorm = var(conv.times().len() - 1, false) != 0.0 || (0..conv.times().len()).any(|i| var(i, false) != 0.0);
        let n = conv.cutoff();
        let power = |f: &SpectralField, c: f64, j: usize| -> Result<SpectralField> {
            let w = wick_power_field(f, c, j)?;
            Ok(if renorm { w } else { w.project_modes(n) })
        };
        let mut orders = Vec::with_capacity(k + 1);
        let mut left = Vec::with_capacity(k + 1);
        for j in 0..=k {
            let mut o = Vec::with_capacity(conv.times().len());
            let mut l = Vec::with_capacity(conv.times().len());
            for i in 0..conv.times().len() {
                o.push(power(&conv.values()[i], var(i, false), j)?);
                l.push(if conv.jumps_at(i) && j > 0 { Some(power(conv.left_value(i), var(i, true), j)?) } else { None });
            }
            orders.push(o);
            left.push(l);
        }
        Self::with_left_limits(conv.times().to_vec(), orders, left)
    }

    pub fn max_order(&self) -> usize {
        self.orders.len() - 1
    }

    /// Order `j` at `τ_a + w (τ_b − τ_a)` inside data cell `[τ_a, τ_b]`:
    /// linear between the right value at `τ_a` and the left limit at `τ_b`.
    fn at(&self, j: usize, cell: usize, w: f64) -> SpectralField {
        let a = &self.orders[j][cell];
        let b = self.left[j][cell + 1].as_ref().unwrap_or(&self.orders[j][cell + 1]);
        if w == 0.0 {
            a.clone()
        } else if w == 1.0 {
            b.clone()
        } else if a == b {
            a.clone()
        } else {
            a.scale(1.0 - w).axpy(w, b)
        }
    }
}

/// Initial data: `u₀` (and `u₁` for wave).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: SpectralField,
    pub u1: Option<SpectralField>,
}

/// Every solver step, kept when `record_steps` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub times: Vec<f64>,
    pub values: Vec<SpectralField>,
    pub derivatives: Vec<SpectralField>,
    /// Data cell containing each step `[times[i], times[i+1]]`.
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    pub equation: Equation,
    /// Data-grid times reached.
    pub times: Vec<f64>,
    pub values: Vec<SpectralField>,
    pub derivatives: Option<Vec<SpectralField>>,
    /// Gating norm at each reached time: `‖v‖_{B^{−δ}_{∞,∞}}` (heat) or
    /// `‖v‖_{H^{1−ε}} + ‖∂_t v‖_{H^{−ε}}` (wave).
    pub monitored: Vec<f64>,
    /// Heat: `∫ ‖v‖^γ_{B^{2/γ−δ}_{∞,∞}} dt` over the reached times.
    pub lgamma: Option<f64>,
    pub blowup: bool,
    pub exit_time: f64,
    pub picard_iterations: Vec<u32>,
    pub halvings: usize,
    pub steps: Option<StepRecord>,
}

impl SolutionPath {
    pub fn final_value(&self) -> &SpectralField {
        self.values.last().expect("nonempty solution")
    }

    pub fn sup_monitored(&self) -> f64 {
        self.monitored.iter().copied().fold(0.0, f64::max)
    }
}

/// `±Σ_j C(k,j) v^{k−j} X^{⋄j}`, exactly projected to `|l| ≤ M`.
struct Forcing<'a> {
    cfg: &'a SolveConfig,
}

impl Forcing<'_> {
    fn grid_size(&self, data: &[SpectralField]) -> usize {
        let (k, m) = (self.cfg.order, self.cfg.cutoff);
        let top = (0..=k).map(|j| (k - j) * m + data[j].cutoff()).max().unwrap_or(0);
        fft_size(top + m + 1)
    }

    fn eval(&self, v: &SpectralField, data: &[SpectralField], grids: &mut Option<(usize, Vec<Option<Vec<f64>>>)>) -> SpectralField {
        let (k, m, sign) = (self.cfg.order, self.cfg.cutoff, self.cfg.sign);
        if !self.cfg.nonlinear {
            return data[k].resize(m).scale(sign);
        }
        let n = self.grid_size(data);
        if grids.as_ref().map(|g| g.0) != Some(n) {
            let g = data
                .iter()
                .map(|f| if f.max_abs() == 0.0 { None } else { Some(f.synthesize(n).iter().map(|z| z.re).collect()) })
                .collect();
            *grids = Some((n, g));
        }
        let dgrid = &grids.as_ref().unwrap().1;
        let vg: Vec<f64> = v.synthesize(n).iter().map(|z| z.re).collect();
        let coef: Vec<f64> = (0..=k).map(|j| sign * binomial(k, j)).collect();
        let values: Vec<Complex64> = (0..n * n)
            .map(|p| {
                let x = vg[p];
                // Horner in v over the orders present
                let mut acc = 0.0;
                let mut vpow = 1.0;
                for j in (0..=k).rev() {
                    if let Some(d) = &dgrid[j] {
                        acc += coef[j] * vpow * d[p];
                    }
                    vpow *= x;
                }
                Complex64::new(acc, 0.0)
            })
            .collect();
        SpectralField::from_grid(values, n, m, true)
    }
}

/// Per-mode weights of one step of length `h`.
struct StepWeights {
    /// Heat: `[e^{z}, hφ₁(z), hφ₂(z)]`; wave: rotation and forcing weights.
    w: Vec<[f64; 8]>,
}

fn phi12(z: f64) -> (f64, f64) {
    if z.abs() < 1e-4 {
        (1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0, 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0)
    } else {
        let e = z.exp_m1();
        (e / z, (e - z) / (z * z))
    }
}

/// `[(1−cos x)/x², (sin x − x cos x)/x³, sin x/x, (cos x − 1 + x sin x)/x²]`.
fn wave_series(x: f64) -> [f64; 4] {
    if x.abs() < 0.1 {
        let y = x * x;
        [
            0.5 - y / 24.0 + y * y / 720.0 - y * y * y / 40320.0,
            1.0 / 3.0 - y / 30.0 + y * y / 840.0 - y * y * y / 45360.0,
            1.0 - y / 6.0 + y * y / 120.0 - y * y * y / 5040.0,
            0.5 - y / 8.0 + y * y / 144.0 - y * y * y / 5760.0,
        ]
    } else {
        let (s, c) = x.sin_cos();
        [(1.0 - c) / (x * x), (s - x * c) / (x * x * x), s / x, (c - 1.0 + x * s) / (x * x)]
    }
}

impl StepWeights {
    fn new(equation: Equation, cutoff: usize, h: f64) -> Self {
        let w = (0..)
            .take((2 * cutoff + 1) * (2 * cutoff + 1))
            .map(|idx: usize| {
                let l = [(idx / (2 * cutoff + 1)) as i64 - cutoff as i64, (idx % (2 * cutoff + 1)) as i64 - cutoff as i64];
                let l2 = mode_norm_sq(l);
                match equation {
                    Equation::Heat => {
                        let z = -h * l2;
                        let (p1, p2) = phi12(z);
                        [z.exp(), h * p1, h * p2, 0.0, 0.0, 0.0, 0.0, 0.0]
                    }
                    Equation::Wave => {
                        let om = l2.sqrt();
                        let x = om * h;
                        let [a, j, b, kk] = wave_series(x);
                        let (a0, jj, b0, k2) = (h * h * a, h * h * h * j, h * b, h * h * kk);
                        // v₁ = c v₀ + (s/ω) v₀' + W₀F₀ + W₁F₁; v₁' = −ωs v₀ + c v₀' + D₀F₀ + D₁F₁
                        let c = x.cos();
                        let s_over = h * b; // sin(ωh)/ω
                        let ws = om * om * s_over; // ω sin(ωh)
                        let w0 = jj / h;
                        let d0 = k2 / h;
                        [c, s_over, -ws, w0, a0 - w0, d0, b0 - d0, 0.0]
                    }
                }
            })
            .collect();
        Self { w }
    }
}

fn idx(cutoff: usize, l: [i64; 2]) -> usize {
    let n = cutoff as i64;
    ((l[0] + n) * (2 * n + 1) + (l[1] + n)) as usize
}

/// Advance one step of length `h` given forcing `f0` at the start and `f1` at
/// the end.
fn advance(
    equation: Equation,
    w: &StepWeights,
    v: &SpectralField,
    dv: &SpectralField,
    f0: &SpectralField,
    f1: &SpectralField,
) -> (SpectralField, SpectralField) {
    let m = v.cutoff();
    match equation {
        Equation::Heat => {
            let nv = v.map_modes(|l, a| {
                let [e, p1, p2, ..] = w.w[idx(m, l)];
                let (g0, g1) = (f0.coeff(l), f1.coeff(l));
                a * e + g0 * p1 + (g1 - g0) * p2
            });
            (nv, dv.clone())
        }
        Equation::Wave => {
            let nv = v.map_modes(|l, a| {
                let [c, s, _, w0, w1, ..] = w.w[idx(m, l)];
                a * c + dv.coeff(l) * s + f0.coeff(l) * w0 + f1.coeff(l) * w1
            });
            let ndv = dv.map_modes(|l, b| {
                let [c, _, ws, _, _, d0, d1, _] = w.w[idx(m, l)];
                v.coeff(l) * ws + b * c + f0.coeff(l) * d0 + f1.coeff(l) * d1
            });
            (nv, ndv)
        }
    }
}

fn node_data(data: &WickData, k: usize, cell: usize, wgt: f64) -> Vec<SpectralField> {
    (0..=k).map(|j| data.at(j, cell, wgt)).collect()
}

struct Monitor {
    equation: Equation,
    gate: Option<BesovNorm>,
    integrable: Option<BesovNorm>,
    epsilon: f64,
}

impl Monitor {
    fn new(cfg: &SolveConfig) -> Result<Self> {
        Ok(match cfg.equation {
            Equation::Heat => Self {
                equation: cfg.equation,
                gate: Some(BesovNorm::new(-cfg.delta, f64::INFINITY, f64::INFINITY)?.with_oversample(cfg.oversample)),
                integrable: Some(
                    BesovNorm::new(2.0 / cfg.gamma - cfg.delta, f64::INFINITY, f64::INFINITY)?.with_oversample(cfg.oversample),
                ),
                epsilon: cfg.epsilon,
            },
            Equation::Wave => Self { equation: cfg.equation, gate: None, integrable: None, epsilon: cfg.epsilon },
        })
    }

    fn gate(&self, v: &SpectralField, dv: &SpectralField) -> Result<f64> {
        match self.equation {
            Equation::Heat => Ok(self.gate.as_ref().unwrap().eval(v)),
            Equation::Wave => Ok(sobolev_norm(v, 1.0 - self.epsilon, 2.0)? + sobolev_norm(dv, -self.epsilon, 2.0)?),
        }
    }
}

/// Solve the remainder equation on the data grid of `data`.
pub fn solve(data: &WickData, init: &InitialData, cfg: &SolveConfig) -> Result<SolutionPath> {
    cfg.validate()?;
    let k = cfg.order;
    if data.max_order() < k {
        return Err(Error::Data(format!("Wick data up to order {} given, order {k} needed", data.max_order())));
    }
    if cfg.equation == Equation::Wave && init.u1.is_none() {
        return Err(Error::Data("wave solves need initial velocity u₁".into()));
    }
    let m = cfg.cutoff;
    let forcing = Forcing { cfg };
    let monitor = Monitor::new(cfg)?;
    let mut v = init.u0.resize(m);
    let mut dv = init.u1.as_ref().map_or_else(|| SpectralField::zeros(m), |u| u.resize(m));
    let mut weights: HashMap<u64, StepWeights> = HashMap::new();

    let mut out = SolutionPath {
        equation: cfg.equation,
        times: vec![0.0],
        values: vec![v.clone()],
        derivatives: (cfg.equation == Equation::Wave).then(|| vec![dv.clone()]),
        monitored: vec![monitor.gate(&v, &dv)?],
        lgamma: None,
        blowup: false,
        exit_time: 0.0,
        picard_iterations: Vec::new(),
        halvings: 0,
        steps: cfg.record_steps.then(|| StepRecord {
            times: vec![0.0],
            values: vec![v.clone()],
            derivatives: vec![dv.clone()],
            cells: Vec::new(),
        }),
    };
    let mut integrable = vec![monitor.integrable.as_ref().map(|b| b.eval(&v))];
    if out.monitored[0] > cfg.threshold {
        out.blowup = true;
        return Ok(out);
    }

    let mut grids0 = None;
    let mut f0 = forcing.eval(&v, &node_data(data, k, 0, 0.0), &mut grids0);
    'cells: for cell in 0..data.times.len() - 1 {
        let (ta, tb) = (data.times[cell], data.times[cell + 1]);
        let len = tb - ta;
        if cell > 0 {
            let mut g = None;
            f0 = forcing.eval(&v, &node_data(data, k, cell, 0.0), &mut g);
        }
        let mut pos = 0.0; // fraction of the cell done
        let mut sub = (len / cfg.dt).ceil().max(1.0);
        while pos < 1.0 {
            let mut attempt = 0;
            loop {
                let frac = (1.0 / sub).min(1.0 - pos);
                let h = frac * len;
                let end = if pos + frac >= 1.0 - 1e-14 { 1.0 } else { pos + frac };
                let d1 = node_data(data, k, cell, end);
                let w = weights.entry(h.to_bits()).or_insert_with(|| StepWeights::new(cfg.equation, m, h));
                let mut grids1 = None;
                // predictor: forcing frozen at the step start
                let (mut nv, mut ndv) = advance(cfg.equation, w, &v, &dv, &f0, &f0);
                let mut f1 = forcing.eval(&nv, &d1, &mut grids1);
                let mut iters = 0u32;
                let mut converged = !cfg.nonlinear;
                if !cfg.nonlinear {
                    let r = advance(cfg.equation, w, &v, &dv, &f0, &f1);
                    nv = r.0;
                    ndv = r.1;
                }
                while !converged && (iters as usize) < cfg.picard_max_iter {
                    let (cv, cdv) = advance(cfg.equation, w, &v, &dv, &f0, &f1);
                    iters += 1;
                    let diff = cv.max_coeff_diff(&nv).max(cdv.max_coeff_diff(&ndv));
                    let scale = 1.0 + cv.max_abs().max(cdv.max_abs());
                    nv = cv;
                    ndv = cdv;
                    if !diff.is_finite() {
                        break;
                    }
                    f1 = forcing.eval(&nv, &d1, &mut grids1);
                    converged = diff <= cfg.picard_tol * scale;
                }
                if converged {
                    if !nv.max_abs().is_finite() {
                        out.blowup = true;
                        out.exit_time = ta + pos * len;
                        break 'cells;
                    }
                    v = nv;
                    dv = ndv;
                    f0 = f1;
                    pos = end;
                    out.picard_iterations.push(iters);
                    if let Some(rec) = out.steps.as_mut() {
                        rec.times.push(if end == 1.0 { tb } else { ta + end * len });
                        rec.values.push(v.clone());
                        rec.derivatives.push(dv.clone());
                        rec.cells.push(cell);
                    }
                    break;
                }
                // a failing step past the threshold is the blow-up itself
                let gate = monitor.gate(&v, &dv)?;
                if !(gate <= cfg.threshold) {
                    out.blowup = true;
                    out.exit_time = ta + pos * len;
                    out.times.push(out.exit_time);
                    out.values.push(v.clone());
                    if let Some(d) = out.derivatives.as_mut() {
                        d.push(dv.clone());
                    }
                    out.monitored.push(gate);
                    integrable.push(monitor.integrable.as_ref().map(|b| b.eval(&v)));
                    break 'cells;
                }
                attempt += 1;
                out.halvings += 1;
                if attempt > cfg.max_halvings {
                    return Err(Error::Convergence(format!(
                        "Picard iteration did not converge at t = {} after {} step halvings",
                        ta + pos * len,
                        cfg.max_halvings
                    )));
                }
                sub *= 2.0;
            }
        }
        let gate = monitor.gate(&v, &dv)?;
        out.times.push(tb);
        out.values.push(v.clone());
        if let Some(d) = out.derivatives.as_mut() {
            d.push(dv.clone());
        }
        out.monitored.push(gate);
        integrable.push(monitor.integrable.as_ref().map(|b| b.eval(&v)));
        out.exit_time = tb;
        if !(gate <= cfg.threshold) {
            out.blowup = true;
            break;
        }
    }
    if cfg.equation == Equation::Heat {
        let g = cfg.gamma;
        let s: f64 = (1..out.times.len())
            .map(|i| {
                0.5 * (out.times[i] - out.times[i - 1])
                    * (integrable[i - 1].unwrap().powf(g) + integrable[i].unwrap().powf(g))
            })
            .sum();
        out.lgamma = Some(s);
    }
    Ok(out)
}

/// Heat remainder with quadratic nonlinearity.
pub fn solve_heat_quadratic(data: &WickData, u0: &SpectralField, cfg: &SolveConfig) -> Result<SolutionPath> {
    if cfg.equation != Equation::Heat {
        return Err(Error::Parameter("solve_heat_quadratic needs a heat configuration".into()));
    }
    solve(data, &InitialData { u0: u0.clone(), u1: None }, cfg)
}

/// Wave remainder with nonlinearity of order `k`.
pub fn solve_wave_polynomial(
    data: &WickData,
    u0: &SpectralField,
    u1: &SpectralField,
    cfg: &SolveConfig,
) -> Result<SolutionPath> {
    if cfg.equation != Equation::Wave {
        return Err(Error::Parameter("solve_wave_polynomial needs a wave configuration".into()));
    }
    solve(data, &InitialData { u0: u0.clone(), u1: Some(u1.clone()) }, cfg)
}

/// Recompute the mild right-hand side at the final time with each step
/// split into four, `v` interpolated linearly between recorded steps, and
/// return the monitored norm of its difference from the solution.
pub fn mild_residual(solution: &SolutionPath, data: &WickData, init: &InitialData, cfg: &SolveConfig) -> Result<f64> {
    let rec = solution
        .steps
        .as_ref()
        .ok_or_else(|| Error::Data("mild_residual needs a solution recorded with record_steps".into()))?;
    if solution.blowup {
        return Err(Error::Data("mild_residual needs a solution that did not blow up".into()));
    }
    let k = cfg.order;
    let m = cfg.cutoff;
    let forcing = Forcing { cfg };
    let monitor = Monitor::new(cfg)?;
    const REFINE: usize = 4;
    let mut weights: HashMap<u64, StepWeights> = HashMap::new();
    let mut r = init.u0.resize(m);
    let mut dr = init.u1.as_ref().map_or_else(|| SpectralField::zeros(m), |u| u.resize(m));
    let data_w = |cell: usize, t: f64| {
        let (ta, tb) = (data.times[cell], data.times[cell + 1]);
        if t >= tb {
            1.0
        } else {
            ((t - ta) / (tb - ta)).clamp(0.0, 1.0)
        }
    };
    for i in 0..rec.cells.len() {
        let (t0, t1) = (rec.times[i], rec.times[i + 1]);
        let cell = rec.cells[i];
        let h = (t1 - t0) / REFINE as f64;
        let w = weights.entry(h.to_bits()).or_insert_with(|| StepWeights::new(cfg.equation, m, h));
        let v_at = |j: usize| {
            let a = j as f64 / REFINE as f64;
            if j == 0 {
                rec.values[i].clone()
            } else if j == REFINE {
                rec.values[i + 1].clone()
            } else {
                rec.values[i].scale(1.0 - a).axpy(a, &rec.values[i + 1])
            }
        };
        let mut g = None;
        let mut fa = forcing.eval(&v_at(0), &node_data(data, k, cell, data_w(cell, t0)), &mut g);
        for j in 1..=REFINE {
            let t = if j == REFINE { t1 } else { t0 + j as f64 * h };
            let mut g = None;
            let fb = forcing.eval(&v_at(j), &node_data(data, k, cell, data_w(cell, t)), &mut g);
            let (nr, ndr) = advance(cfg.equation, w, &r, &dr, &fa, &fb);
            r = nr;
            dr = ndr;
            fa = fb;
        }
    }
    let v = rec.values.last().unwrap();
    let dv = rec.derivatives.last().unwrap();
    monitor.gate(&v.sub(&r), &dv.sub(&dr))
}

/// `H_k` of a field at a fixed variance, re-exported for building data by hand.
pub fn hermite_field(f: &SpectralField, c: f64, k: usize) -> Result<SpectralField> {
    if k == 0 {
        return Ok(SpectralField::constant(0, hermite(0, 0.0, c)));
    }
    wick_power_field(f, c, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(n: usize, l: [i64; 2], a: f64) -> SpectralField {
        SpectralField::mode_pair(n, l, Complex64::new(a, 0.0)).unwrap()
    }

    #[test]
    fn zero_data_zero_solution() {
        let data = WickData::zero(vec![0.0, 0.5], 2).unwrap();
        let sol = solve_heat_quadratic(&data, &SpectralField::zeros(4), &SolveConfig::heat(4)).unwrap();
        assert_eq!(sol.final_value().max_abs(), 0.0);
        let data = WickData::zero(vec![0.0, 0.5], 3).unwrap();
        let z = SpectralField::zeros(4);
        let sol = solve_wave_polynomial(&data, &z, &z, &SolveConfig::wave(4, 3)).unwrap();
        assert_eq!(sol.final_value().max_abs(), 0.0);
    }

    #[test]
    fn heat_linear_probe_is_exact() {
        let times = vec![0.0, 0.25, 0.5];
        let mut data = WickData::zero(times.clone(), 2).unwrap();
        data.orders[2] = vec![SpectralField::constant(0, 1.0); 3];
        let u0 = pair(4, [1, 2], 0.3);
        for sign in [1.0, -1.0] {
            let cfg = SolveConfig { sign, nonlinear: false, dt: 0.01, ..SolveConfig::heat(4) };
            let sol = solve_heat_quadratic(&data, &u0, &cfg).unwrap();
            let t = 0.5;
            let expect = u0.map_modes(|l, a| a * (-t * mode_norm_sq(l)).exp()).add_constant(sign * t);
            assert!(sol.final_value().max_coeff_diff(&expect) < 1e-14);
        }
    }

    #[test]
    fn wave_plane_wave_is_exact() {
        let data = WickData::zero(vec![0.0, 1.0], 3).unwrap();
        let u0 = pair(4, [1, 0], 0.5);
        let cfg = SolveConfig { nonlinear: false, dt: 0.01, record_steps: true, ..SolveConfig::wave(4, 3) };
        let u1 = SpectralField::zeros(4);
        let sol = solve_wave_polynomial(&data, &u0, &u1, &cfg).unwrap();
        assert!(!sol.blowup);
        assert!(sol.final_value().max_coeff_diff(&u0.scale(1f64.cos())) < 1e-12);
        let init = InitialData { u0, u1: Some(u1) };
        assert!(mild_residual(&sol, &data, &init, &cfg).unwrap() < 1e-10);
    }

    #[test]
    fn heat_order_three_is_unsupported() {
        let cfg = SolveConfig { order: 3, ..SolveConfig::heat(4) };
        assert!(matches!(cfg.validate(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn heat_windows_are_enforced() {
        let bad_gamma = SolveConfig { gamma: 2.0, ..SolveConfig::heat(4) };
        assert!(bad_gamma.validate().unwrap_err().to_string().contains("2/(1−ε)"));
        let bad_delta = SolveConfig { delta: 0.45, ..SolveConfig::heat(4) };
        assert!(bad_delta.validate().unwrap_err().to_string().contains("2/γ − ε"));
        let bad_wave = SolveConfig { epsilon: 0.3, ..SolveConfig::wave(4, 3) };
        assert!(bad_wave.validate().unwrap_err().to_string().contains("1/(2(k−1))"));
    }

    #[test]
    fn missing_order_is_a_data_error() {
        let data = WickData::zero(vec![0.0, 1.0], 2).unwrap();
        let z = SpectralField::zeros(2);
        assert!(matches!(solve_wave_polynomial(&data, &z, &z, &SolveConfig::wave(2, 3)), Err(Error::Data(_))));
    }

    #[test]
    fn step_weights_limit_at_zero_frequency() {
        let h = 0.1;
        let w = StepWeights::new(Equation::Wave, 1, h);
        let zero = w.w[idx(1, [0, 0])];
        // W₀ = h²/3, W₁ = h²/6, D₀ = D₁ = h/2
        assert!((zero[3] - h * h / 3.0).abs() < 1e-16);
        assert!((zero[4] - h * h / 6.0).abs() < 1e-16);
        assert!((zero[5] - h / 2.0).abs() < 1e-16);
        assert!((zero[6] - h / 2.0).abs() < 1e-16);
    }
}
