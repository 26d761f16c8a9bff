//! Band-limited fields on the torus `T² = [0, 2π)²`.
//!
//! A [`SpectralField`] with cutoff `N` stores amplitudes `a_l` for the modes of
//! the Euclidean ball `|l| ≤ N`, representing `f(x) = Σ a_l e^{i l·x}`. Norms
//! use Lebesgue measure on `T²`, so `‖f‖²_{L²} = (2π)² Σ |a_l|²`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{fft2, fft_size};

/// Default oversampling of physical grids used for `L^p` norms, `p ≠ 2`.
pub const DEFAULT_OVERSAMPLE: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    cutoff: usize,
    /// `(2N+1)²` row-major array indexed by `(l₁ + N, l₂ + N)`; zero outside the ball.
    coeffs: Vec<Complex64>,
}

fn in_ball(l: [i64; 2], n: usize) -> bool {
    l[0] * l[0] + l[1] * l[1] <= (n * n) as i64
}

/// Modes of the ball `|l| ≤ n`, ordered by `l₁` then `l₂`.
pub fn ball_modes(n: usize) -> impl Iterator<Item = [i64; 2]> {
    let m = n as i64;
    (-m..=m).flat_map(move |a| (-m..=m).map(move |b| [a, b])).filter(move |&l| in_ball(l, n))
}

pub fn mode_norm_sq(l: [i64; 2]) -> f64 {
    (l[0] * l[0] + l[1] * l[1]) as f64
}

impl SpectralField {
    pub fn zeros(cutoff: usize) -> Self {
        let w = 2 * cutoff + 1;
        Self { cutoff, coeffs: vec![Complex64::ZERO; w * w] }
    }

    pub fn constant(cutoff: usize, c: f64) -> Self {
        let mut f = Self::zeros(cutoff);
        let i = f.index([0, 0]);
        f.coeffs[i] = Complex64::new(c, 0.0);
        f
    }

    /// `amp · e^{i l·x}`; complex-valued unless `l = 0` and `amp` is real.
    pub fn mode(cutoff: usize, l: [i64; 2], amp: Complex64) -> Result<Self> {
        let mut f = Self::zeros(cutoff);
        f.set(l, amp)?;
        Ok(f)
    }

    /// `a e^{i l·x} + conj(a) e^{−i l·x}`, a real field.
    pub fn mode_pair(cutoff: usize, l: [i64; 2], amp: Complex64) -> Result<Self> {
        let mut f = Self::zeros(cutoff);
        f.set(l, amp)?;
        f.set([-l[0], -l[1]], amp.conj() + f.coeff([-l[0], -l[1]]))?;
        Ok(f)
    }

    pub fn from_fn(cutoff: usize, mut f: impl FnMut([i64; 2]) -> Complex64) -> Self {
        let mut out = Self::zeros(cutoff);
        for l in ball_modes(cutoff) {
            let i = out.index(l);
            out.coeffs[i] = f(l);
        }
        out
    }

    fn index(&self, l: [i64; 2]) -> usize {
        let n = self.cutoff as i64;
        ((l[0] + n) * (2 * n + 1) + (l[1] + n)) as usize
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// `a_l`, zero outside the ball.
    pub fn coeff(&self, l: [i64; 2]) -> Complex64 {
        if in_ball(l, self.cutoff) {
            self.coeffs[self.index(l)]
        } else {
            Complex64::ZERO
        }
    }

    pub fn set(&mut self, l: [i64; 2], v: Complex64) -> Result<()> {
        if !in_ball(l, self.cutoff) {
            return Err(Error::Domain(format!("mode {l:?} outside the ball of radius {}", self.cutoff)));
        }
        let i = self.index(l);
        self.coeffs[i] = v;
        Ok(())
    }

    pub fn modes(&self) -> impl Iterator<Item = [i64; 2]> {
        ball_modes(self.cutoff)
    }

    pub fn iter(&self) -> impl Iterator<Item = ([i64; 2], Complex64)> + '_ {
        self.modes().map(move |l| (l, self.coeffs[self.index(l)]))
    }

    /// Spatial mean, `(2π)^{-2} ∫ f = a_0`.
    pub fn mean(&self) -> Complex64 {
        self.coeff([0, 0])
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.iter().all(|(l, a)| (a - self.coeff([-l[0], -l[1]]).conj()).norm() <= tol * scale)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// The same field with cutoff `m`: zero-padded, or truncated to `|l| ≤ m`.
    pub fn resize(&self, m: usize) -> Self {
        Self::from_fn(m, |l| self.coeff(l))
    }

    /// `P_M f`: keeps `|l| ≤ min(M, N)`.
    pub fn project_modes(&self, m: usize) -> Self {
        self.resize(m.min(self.cutoff))
    }

    pub fn map_modes(&self, mut f: impl FnMut([i64; 2], Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for l in ball_modes(self.cutoff) {
            let i = out.index(l);
            out.coeffs[i] = f(l, out.coeffs[i]);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { cutoff: self.cutoff, coeffs: self.coeffs.iter().map(|z| z * s).collect() }
    }

    /// `self + s·other`, at the larger of the two cutoffs.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> Self {
        let n = self.cutoff.max(other.cutoff);
        let base = if n == self.cutoff { self.clone() } else { self.resize(n) };
        base.map_modes(|l, a| a + s * other.coeff(l))
    }

    pub fn add(&self, other: &SpectralField) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        let i = out.index([0, 0]);
        out.coeffs[i] += c;
        out
    }

    /// Largest coefficient difference over the union of both balls.
    pub fn max_coeff_diff(&self, other: &SpectralField) -> f64 {
        let n = self.cutoff.max(other.cutoff);
        ball_modes(n).map(|l| (self.coeff(l) - other.coeff(l)).norm()).fold(0.0, f64::max)
    }

    /// `(Σ |a_l|²)^{1/2}`.
    pub fn coefficient_norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Exact `L²(T²)` norm by Parseval.
    pub fn l2_norm(&self) -> f64 {
        2.0 * PI * self.coefficient_norm()
    }

    /// Values at `x_{jk} = 2π (j, k)/n`, row-major in `j`.
    pub fn synthesize(&self, n: usize) -> Vec<Complex64> {
        let mut grid = vec![Complex64::ZERO; n * n];
        let ni = n as i64;
        for (l, a) in self.iter() {
            if a != Complex64::ZERO {
                let r = l[0].rem_euclid(ni) as usize;
                let c = l[1].rem_euclid(ni) as usize;
                grid[r * n + c] += a;
            }
        }
        fft2(&mut grid, n, true);
        grid
    }

    /// Interpolating coefficients of grid values on `|l| ≤ cutoff`.
    ///
    /// Exact for trigonometric polynomials of degree `≤ cutoff` when
    /// `n ≥ 2·cutoff + 1`. With `real`, the result is made exactly Hermitian.
    pub fn from_grid(mut values: Vec<Complex64>, n: usize, cutoff: usize, real: bool) -> Self {
        assert!(n > 2 * cutoff, "grid of size {n} cannot resolve cutoff {cutoff}");
        fft2(&mut values, n, false);
        let norm = 1.0 / (n * n) as f64;
        let ni = n as i64;
        let at = |l: [i64; 2]| values[l[0].rem_euclid(ni) as usize * n + l[1].rem_euclid(ni) as usize] * norm;
        Self::from_fn(cutoff, |l| if real { 0.5 * (at(l) + at([-l[0], -l[1]]).conj()) } else { at(l) })
    }

    /// `L^p(T²)` norm: Parseval for `p = 2`, else a physical grid
    /// `oversample` times finer than Nyquist.
    pub fn lp_norm(&self, p: f64, oversample: usize) -> Result<f64> {
        check_exponent("p", p)?;
        if p == 2.0 {
            return Ok(self.l2_norm());
        }
        let n = fft_size(oversample.max(1) * (2 * self.cutoff + 1));
        Ok(grid_lp_norm(&self.synthesize(n), n, p))
    }

    /// `(l₁, l₂, Re, Im)` table under a `cutoff N` header.
    pub fn to_text(&self) -> String {
        let mut out = format!("cutoff {}\n", self.cutoff);
        for (l, a) in self.iter() {
            out.push_str(&format!("{} {} {:.16e} {:.16e}\n", l[0], l[1], a.re, a.im));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty field table".into() })?;
        let cutoff = head
            .strip_prefix("cutoff")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or(Error::Parse { line: 1, msg: "expected `cutoff N`".into() })?;
        let mut f = Self::zeros(cutoff);
        for (i, line) in lines {
            let bad = || Error::Parse { line: i + 1, msg: format!("expected `l1 l2 re im`, got `{line}`") };
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(bad());
            }
            let l1 = parts[0].parse::<i64>().map_err(|_| bad())?;
            let l2 = parts[1].parse::<i64>().map_err(|_| bad())?;
            let re = parts[2].parse::<f64>().map_err(|_| bad())?;
            let im = parts[3].parse::<f64>().map_err(|_| bad())?;
            f.set([l1, l2], Complex64::new(re, im)).map_err(|_| bad())?;
        }
        Ok(f)
    }
}

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if p >= 1.0 && !p.is_nan() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must lie in [1, ∞], got {p}")))
    }
}

fn grid_lp_norm(values: &[Complex64], n: usize, p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    } else {
        let cell = (2.0 * PI / n as f64).powi(2);
        (cell * values.iter().map(|z| z.norm().powf(p)).sum::<f64>()).powf(1.0 / p)
    }
}

/// Smooth radial cutoff: 1 on `[0, 1/2]`, 0 on `[1, ∞)`.
pub fn smooth_cutoff(r: f64) -> f64 {
    fn s(r: f64) -> f64 {
        if r > 0.0 {
            (-1.0 / r).exp()
        } else {
            0.0
        }
    }
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let a = s(2.0 - 2.0 * r);
        a / (a + s(2.0 * r - 1.0))
    }
}

/// Littlewood–Paley partition `χ(x) = ψ(|x|/2)`, `ρ(x) = ψ(|x|/4) − ψ(|x|/2)`.
///
/// `supp χ ⊆ B(2)`, `supp ρ ⊆ B(4) \ B(1)`, and
/// `χ + Σ_{m≥0} ρ(2^{-m}·) = 1` telescopically.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DyadicPartition;

impl DyadicPartition {
    pub fn chi(&self, r: f64) -> f64 {
        smooth_cutoff(r / 2.0)
    }

    pub fn rho(&self, r: f64) -> f64 {
        smooth_cutoff(r / 4.0) - smooth_cutoff(r / 2.0)
    }

    /// `ρ_m(r)`: `χ(r)` for `m = −1`, `ρ(2^{-m} r)` for `m ≥ 0`.
    pub fn block(&self, m: i32, r: f64) -> f64 {
        if m < 0 {
            self.chi(r)
        } else {
            self.rho(r / f64::from(m).exp2())
        }
    }

    /// Block indices that can be nonzero on modes `|l| ≤ cutoff`.
    pub fn active_blocks(&self, cutoff: usize) -> impl Iterator<Item = i32> {
        let n = cutoff as f64;
        (-1..).take_while(move |&m| m == -1 || f64::from(m).exp2() < n)
    }

    /// Largest mode radius touched by block `m`.
    fn band(&self, m: i32, cutoff: usize) -> usize {
        let top = f64::from(m + 2).exp2().ceil() as usize;
        top.min(cutoff)
    }

    /// `Δ_m f`.
    pub fn block_field(&self, f: &SpectralField, m: i32) -> SpectralField {
        let band = self.band(m, f.cutoff());
        SpectralField::from_fn(band, |l| f.coeff(l) * self.block(m, mode_norm_sq(l).sqrt()))
    }
}

/// `‖f‖_{B^α_{p,q}} = ‖(2^{mα} ‖Δ_m f‖_{L^p})_{m ≥ −1}‖_{ℓ^q}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovNorm {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub oversample: usize,
}

impl BesovNorm {
    pub fn new(alpha: f64, p: f64, q: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Parameter(format!("regularity α must be finite, got {alpha}")));
        }
        check_exponent("p", p)?;
        check_exponent("q", q)?;
        Ok(Self { alpha, p, q, oversample: DEFAULT_OVERSAMPLE })
    }

    pub fn with_oversample(mut self, oversample: usize) -> Self {
        self.oversample = oversample.max(1);
        self
    }

    /// Weighted block norms `(m, 2^{mα}‖Δ_m f‖_{L^p})`.
    pub fn block_norms(&self, f: &SpectralField) -> Vec<(i32, f64)> {
        let part = DyadicPartition;
        part.active_blocks(f.cutoff())
            .map(|m| {
                let block = part.block_field(f, m);
                let lp = if self.p == 2.0 {
                    block.l2_norm()
                } else {
                    let n = fft_size(self.oversample * (2 * block.cutoff() + 1));
                    grid_lp_norm(&block.synthesize(n), n, self.p)
                };
                (m, (f64::from(m) * self.alpha).exp2() * lp)
            })
            .collect()
    }

    pub fn eval(&self, f: &SpectralField) -> f64 {
        let blocks = self.block_norms(f);
        if self.q.is_infinite() {
            blocks.iter().map(|b| b.1).fold(0.0, f64::max)
        } else {
            blocks.iter().map(|b| b.1.powf(self.q)).sum::<f64>().powf(1.0 / self.q)
        }
    }
}

pub fn besov_norm(f: &SpectralField, alpha: f64, p: f64, q: f64) -> Result<f64> {
    Ok(BesovNorm::new(alpha, p, q)?.eval(f))
}

/// Bessel-potential norm `‖(1 − Δ)^{α/2} f‖_{L^p}`.
pub fn sobolev_norm(f: &SpectralField, alpha: f64, p: f64) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::Parameter(format!("regularity α must be finite, got {alpha}")));
    }
    f.map_modes(|l, a| a * (1.0 + mode_norm_sq(l)).powf(alpha / 2.0)).lp_norm(p, DEFAULT_OVERSAMPLE)
}

/// Exact product of two trigonometric polynomials, at cutoff `N_f + N_g`.
pub fn field_product(f: &SpectralField, g: &SpectralField) -> SpectralField {
    let out = f.cutoff() + g.cutoff();
    let n = fft_size(2 * out + 1);
    let a = f.synthesize(n);
    let b = g.synthesize(n);
    let real = f.is_hermitian(0.0) && g.is_hermitian(0.0);
    SpectralField::from_grid(a.iter().zip(&b).map(|(x, y)| x * y).collect(), n, out, real)
}

/// Result of [`pointwise_map`].
#[derive(Debug, Clone, PartialEq)]
pub struct MappedField {
    pub field: SpectralField,
    /// Set when `output_cutoff < degree · N`, so modes of the exact image were dropped.
    pub truncated: bool,
}

/// `φ(f)` for a real field and a polynomial `φ` of the given degree,
/// evaluated on a grid fine enough to be exact, then cut to `output_cutoff`.
pub fn pointwise_map(
    f: &SpectralField,
    phi: impl Fn(f64) -> f64,
    degree: usize,
    output_cutoff: usize,
) -> Result<MappedField> {
    if !f.is_hermitian(1e-12) {
        return Err(Error::Domain("pointwise maps need a real (Hermitian) field".into()));
    }
    let exact = degree.max(1) * f.cutoff();
    let n = fft_size(2 * exact.max(output_cutoff) + 1);
    let values = f.synthesize(n).into_iter().map(|z| Complex64::new(phi(z.re), 0.0)).collect();
    let field = SpectralField::from_grid(values, n, exact.min(output_cutoff), true).resize(output_cutoff);
    Ok(MappedField { field, truncated: output_cutoff < exact })
}
