//! Subordinated Brownian mode increments, left-point Young integration on
//! grid paths, and exact grid p-variation.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seeds::{label_key, signed_key, stream, StreamRng};
use crate::subordinator::SubordinatorPath;

/// Representative modes: `l = 0` and the open half-plane
/// `l₂ > 0 or (l₂ = 0, l₁ > 0)`, restricted to the ball `|l| ≤ N`.
pub fn representative_modes(cutoff: usize) -> Vec<[i64; 2]> {
    let n = cutoff as i64;
    let mut out = vec![[0, 0]];
    for l2 in 0..=n {
        for l1 in -n..=n {
            if (l2 > 0 || l1 > 0) && l1 * l1 + l2 * l2 <= n * n {
                out.push([l1, l2]);
            }
        }
    }
    out
}

/// Standard normals behind one cell's increment of one mode.
///
/// `drift[0]` drives the Brownian increment over the drift part of the clock;
/// `drift[1..]` are independent normals from which kernel-weighted integrals
/// over the same cell are built. `jump` drives the increment across the jump
/// at the cell's right endpoint. For `l = 0` all entries are real.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CellNormals {
    pub drift: [Complex64; 3],
    pub jump: Complex64,
}

impl CellNormals {
    fn conj(self) -> Self {
        Self { drift: self.drift.map(|z| z.conj()), jump: self.jump.conj() }
    }
}

/// Increments `Δβ^l_L` of the subordinated Brownian modes over a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeNoise {
    cutoff: usize,
    times: Vec<f64>,
    drift: f64,
    /// Jump of `L` at the right endpoint of each cell (0 if none).
    cell_jumps: Vec<f64>,
    modes: Vec<[i64; 2]>,
    /// `normals[mode][cell]`.
    normals: Vec<Vec<CellNormals>>,
}

fn complex_normal(rng: &mut StreamRng, real: bool) -> Complex64 {
    if real {
        Complex64::new(rng.sample(StandardNormal), 0.0)
    } else {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(h * rng.sample::<f64, _>(StandardNormal), h * rng.sample::<f64, _>(StandardNormal))
    }
}

/// Check that `grid` is strictly increasing from 0, stays in `[0, T]` and
/// contains every jump of `path` up to its last point; return the jump of `L`
/// at the right endpoint of each cell.
pub fn cell_jumps(path: &SubordinatorPath, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.len() < 2 || grid[0] != 0.0 {
        return Err(Error::Grid("time grid must start at 0 and have at least two points".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid("time grid must be strictly increasing".into()));
    }
    let end = *grid.last().unwrap();
    if end > path.horizon() {
        return Err(Error::Grid(format!("time grid ends at {end}, beyond horizon {}", path.horizon())));
    }
    let mut out = vec![0.0; grid.len() - 1];
    for j in path.jumps().iter().take_while(|j| j.time <= end) {
        match grid.binary_search_by(|t| t.total_cmp(&j.time)) {
            Ok(i) => out[i - 1] = j.size,
            Err(_) => {
                return Err(Error::Grid(format!("time grid misses the subordinator jump at t = {}", j.time)))
            }
        }
    }
    Ok(out)
}

/// Uniform grid with `cells` cells on `[0, end]`, merged with every jump time
/// of `path` in `(0, end]` and with `extra` points.
pub fn grid_with_jumps(path: &SubordinatorPath, end: f64, cells: usize, extra: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=cells).map(|i| end * i as f64 / cells as f64).collect();
    g.extend(path.jumps().iter().map(|j| j.time).filter(|&t| t <= end));
    g.extend(extra.iter().copied().filter(|&t| (0.0..=end).contains(&t)));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Sample mode noise for `|l| ≤ cutoff` on `grid`.
///
/// Each representative mode draws from its own stream keyed by
/// `(seed, l)`, so noise at a smaller cutoff is the restriction of noise at a
/// larger cutoff with the same seed and grid.
pub fn sample_mode_noise(path: &SubordinatorPath, cutoff: usize, grid: &[f64], seed: u64) -> Result<ModeNoise> {
    if cutoff < 1 {
        return Err(Error::Parameter("cutoff must be at least 1".into()));
    }
    let cell_jumps = cell_jumps(path, grid)?;
    let drift = path.drift();
    let modes = representative_modes(cutoff);
    let tag = label_key("mode-noise");
    let normals = modes
        .iter()
        .map(|&[l1, l2]| {
            let real = l1 == 0 && l2 == 0;
            let mut rng = stream(seed, &[tag, signed_key(l1), signed_key(l2)]);
            cell_jumps
                .iter()
                .map(|&jump| {
                    let mut c = CellNormals::default();
                    if drift > 0.0 {
                        for z in &mut c.drift {
                            *z = complex_normal(&mut rng, real);
                        }
                    }
                    if jump > 0.0 {
                        c.jump = complex_normal(&mut rng, real);
                    }
                    c
                })
                .collect()
        })
        .collect();
    Ok(ModeNoise { cutoff, times: grid.to_vec(), drift, cell_jumps, modes, normals })
}

impl ModeNoise {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn cells(&self) -> usize {
        self.cell_jumps.len()
    }

    /// Effective drift rate of the clock.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Jump of the clock at the right endpoint of `cell`.
    pub fn cell_jump(&self, cell: usize) -> f64 {
        self.cell_jumps[cell]
    }

    pub fn representative_modes(&self) -> &[[i64; 2]] {
        &self.modes
    }

    fn locate(&self, l: [i64; 2]) -> Option<(usize, bool)> {
        let n = self.cutoff as i64;
        if l[0] * l[0] + l[1] * l[1] > n * n {
            return None;
        }
        let conj = l[1] < 0 || (l[1] == 0 && l[0] < 0);
        let r = if conj { [-l[0], -l[1]] } else { l };
        self.modes.binary_search_by(|m| (m[1], m[0]).cmp(&(r[1], r[0]))).ok().map(|i| (i, conj))
    }

    /// Normals of mode `l` in `cell`, conjugated for `−l`; `None` if `|l| > N`.
    pub fn cell_normals(&self, l: [i64; 2], cell: usize) -> Option<CellNormals> {
        self.locate(l).map(|(i, conj)| {
            let c = self.normals[i][cell];
            if conj {
                c.conj()
            } else {
                c
            }
        })
    }

    /// Drift part of the increment of mode `l` over `cell`.
    pub fn drift_increment(&self, l: [i64; 2], cell: usize) -> Complex64 {
        let dt = self.times[cell + 1] - self.times[cell];
        self.cell_normals(l, cell).map_or(Complex64::ZERO, |c| (self.drift * dt).sqrt() * c.drift[0])
    }

    /// Increment across the jump at the right endpoint of `cell`.
    pub fn jump_increment(&self, l: [i64; 2], cell: usize) -> Complex64 {
        self.cell_normals(l, cell).map_or(Complex64::ZERO, |c| self.cell_jumps[cell].sqrt() * c.jump)
    }

    /// `Δβ^l_L` over `cell`.
    pub fn increment(&self, l: [i64; 2], cell: usize) -> Complex64 {
        self.drift_increment(l, cell) + self.jump_increment(l, cell)
    }

    /// Noise for the modes `|l| ≤ m`, identical to sampling at cutoff `m`.
    pub fn restrict(&self, m: usize) -> ModeNoise {
        let m = m.min(self.cutoff).max(1);
        let keep: Vec<usize> =
            (0..self.modes.len()).filter(|&i| self.modes[i][0].pow(2) + self.modes[i][1].pow(2) <= (m * m) as i64).collect();
        ModeNoise {
            cutoff: m,
            times: self.times.clone(),
            drift: self.drift,
            cell_jumps: self.cell_jumps.clone(),
            modes: keep.iter().map(|&i| self.modes[i]).collect(),
            normals: keep.iter().map(|&i| self.normals[i].clone()).collect(),
        }
    }

    /// Path `t ↦ β^l_L(t)` on the grid, with left limits at jump cells.
    pub fn brownian_path(&self, l: [i64; 2]) -> GridPath<Complex64> {
        let mut values = vec![Complex64::ZERO];
        let mut left = vec![Complex64::ZERO];
        let mut acc = Complex64::ZERO;
        for cell in 0..self.cells() {
            acc += self.drift_increment(l, cell);
            left.push(acc);
            acc += self.jump_increment(l, cell);
            values.push(acc);
        }
        GridPath { times: self.times.clone(), values, left }
    }

    /// Text form: header, cell table, then one line per (mode, cell) with
    /// the eight real components of the cell normals.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "mode-noise\ncutoff {}\nb_eff {:.16e}\ncells {}\n",
            self.cutoff,
            self.drift,
            self.cells()
        );
        out.push_str(&format!("{:.16e}\n", self.times[0]));
        for (t, j) in self.times[1..].iter().zip(&self.cell_jumps) {
            out.push_str(&format!("{t:.16e} {j:.16e}\n"));
        }
        for (m, rows) in self.modes.iter().zip(&self.normals) {
            for (cell, c) in rows.iter().enumerate() {
                out.push_str(&format!("{} {} {}", m[0], m[1], cell));
                for z in c.drift.iter().chain(std::iter::once(&c.jump)) {
                    out.push_str(&format!(" {:.16e} {:.16e}", z.re, z.im));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        use crate::subordinator::parse_f64;
        let lines: Vec<&str> = text.lines().collect();
        let field = |i: usize, key: &str| -> Result<&str> {
            lines
                .get(i)
                .and_then(|l| l.strip_prefix(key))
                .map(str::trim)
                .ok_or(Error::Parse { line: i + 1, msg: format!("expected `{key}`") })
        };
        field(0, "mode-noise")?;
        let parse_usize = |s: &str, line: usize| {
            s.parse::<usize>().map_err(|e| Error::Parse { line, msg: e.to_string() })
        };
        let cutoff = parse_usize(field(1, "cutoff")?, 2)?;
        let drift = parse_f64(field(2, "b_eff")?, 3)?;
        let cells = parse_usize(field(3, "cells")?, 4)?;
        let mut times = vec![parse_f64(lines.get(4).copied().unwrap_or(""), 5)?];
        let mut cell_jumps = Vec::with_capacity(cells);
        for i in 5..5 + cells {
            let row = lines.get(i).ok_or(Error::Parse { line: i + 1, msg: "missing cell row".into() })?;
            let mut it = row.split_whitespace();
            times.push(parse_f64(it.next().unwrap_or(""), i + 1)?);
            cell_jumps.push(parse_f64(it.next().unwrap_or(""), i + 1)?);
        }
        let modes = representative_modes(cutoff);
        let mut normals = vec![vec![CellNormals::default(); cells]; modes.len()];
        let mut idx = 5 + cells;
        for (mi, m) in modes.iter().enumerate() {
            for cell in 0..cells {
                let line = idx + 1;
                let row = lines.get(idx).ok_or(Error::Parse { line, msg: "missing mode row".into() })?;
                let parts: Vec<&str> = row.split_whitespace().collect();
                if parts.len() != 11 || parts[0] != m[0].to_string() || parts[1] != m[1].to_string() || parts[2] != cell.to_string() {
                    return Err(Error::Parse { line, msg: format!("expected row for mode {m:?}, cell {cell}") });
                }
                let v = parts[3..].iter().map(|s| parse_f64(s, line)).collect::<Result<Vec<f64>>>()?;
                let c = &mut normals[mi][cell];
                for k in 0..3 {
                    c.drift[k] = Complex64::new(v[2 * k], v[2 * k + 1]);
                }
                c.jump = Complex64::new(v[6], v[7]);
                idx += 1;
            }
        }
        Ok(ModeNoise { cutoff, times, drift, cell_jumps, modes, normals })
    }
}

/// Values a grid path can take.
pub trait PathValue: Copy + PartialEq + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    const ZERO: Self;
    fn magnitude(self) -> f64;
    /// Real-valued paths admit the local-extrema reduction in `p_variation`.
    fn as_real(self) -> Option<f64>;
}

impl PathValue for f64 {
    const ZERO: Self = 0.0;
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn as_real(self) -> Option<f64> {
        Some(self)
    }
}

impl PathValue for Complex64 {
    const ZERO: Self = Complex64::ZERO;
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn as_real(self) -> Option<f64> {
        None
    }
}

/// A càdlàg path sampled on a grid: right values and left limits per point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath<V> {
    times: Vec<f64>,
    values: Vec<V>,
    left: Vec<V>,
}

impl<V: PathValue> GridPath<V> {
    /// A path continuous at every grid point.
    pub fn continuous(times: Vec<f64>, values: Vec<V>) -> Result<Self> {
        let left = values.clone();
        Self::with_left_limits(times, values, left)
    }

    pub fn with_left_limits(times: Vec<f64>, values: Vec<V>, left: Vec<V>) -> Result<Self> {
        if times.len() != values.len() || times.len() != left.len() {
            return Err(Error::Grid("times, values and left limits must have equal length".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("grid path times must be strictly increasing".into()));
        }
        Ok(Self { times, values, left })
    }

    pub fn from_fn(times: Vec<f64>, f: impl Fn(f64) -> V) -> Result<Self> {
        let values = times.iter().map(|&t| f(t)).collect();
        Self::continuous(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn left_limits(&self) -> &[V] {
        &self.left
    }

    pub fn is_continuous_at(&self, i: usize) -> bool {
        self.values[i] == self.left[i]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// (left limit, right value) at `t`, interpolating linearly between the
    /// neighbouring grid points when allowed.
    fn sample(&self, t: f64, policy: Interpolation) -> Result<(V, V)> {
        match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => Ok((self.left[i], self.values[i])),
            Err(i) => {
                if policy == Interpolation::Strict || i == 0 || i == self.times.len() {
                    return Err(Error::Interpolation(t));
                }
                let (t0, t1) = (self.times[i - 1], self.times[i]);
                let w = (t - t0) / (t1 - t0);
                let v = self.values[i - 1] * (1.0 - w) + self.left[i] * w;
                Ok((v, v))
            }
        }
    }
}

impl GridPath<f64> {
    /// `L` sampled on `grid`.
    pub fn from_subordinator(path: &SubordinatorPath, grid: Vec<f64>) -> Result<Self> {
        use crate::subordinator::Side;
        let values = grid.iter().map(|&t| path.evaluate(t, Side::Right)).collect::<Result<Vec<_>>>()?;
        let left = grid.iter().map(|&t| path.evaluate(t, Side::Left)).collect::<Result<Vec<_>>>()?;
        Self::with_left_limits(grid, values, left)
    }
}

/// How `young_integral` treats points missing from one of the two grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Strict,
    Linear,
}

/// Left-point Young integral `∫_a^b f dg` over the union of both grids.
///
/// Each cell contributes `f(t_{i−1})·(g(t_i−) − g(t_{i−1}))`, and each jump
/// of `g` at a grid point `t_i ∈ (a, b]` contributes `f(t_i−)·Δg(t_i)`, the
/// refinement limit of left-point sums. For pure-jump `g` this is exactly
/// `Σ f(s_j−) Δg(s_j)`.
pub fn young_integral<V: PathValue>(
    f: &GridPath<f64>,
    g: &GridPath<V>,
    a: f64,
    b: f64,
    policy: Interpolation,
) -> Result<V> {
    if !(a <= b) {
        return Err(Error::Domain(format!("integration interval [{a}, {b}] is empty")));
    }
    let mut pts: Vec<f64> = f
        .times
        .iter()
        .chain(&g.times)
        .copied()
        .filter(|&t| t > a && t < b)
        .chain([a, b])
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = V::ZERO;
    let (_, mut f_prev) = f.sample(pts[0], policy)?;
    let (_, mut g_prev) = g.sample(pts[0], policy)?;
    for &t in &pts[1..] {
        let (f_left, f_right) = f.sample(t, policy)?;
        let (g_left, g_right) = g.sample(t, policy)?;
        let jump = g_right - g_left;
        if f_left != f_right && jump != V::ZERO {
            return Err(Error::Domain(format!("integrand and integrator both jump at t = {t}")));
        }
        total = total + (g_left - g_prev) * f_prev + jump * f_left;
        f_prev = f_right;
        g_prev = g_right;
    }
    Ok(total)
}

/// The path as a sequence of values visited in order: at each discontinuity
/// the left limit precedes the right value.
fn visited_values<V: PathValue>(g: &GridPath<V>) -> Vec<V> {
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        if i > 0 && !g.is_continuous_at(i) {
            out.push(g.left[i]);
        }
        out.push(g.values[i]);
    }
    out
}

/// Endpoints and non-strict local extrema of a real sequence.
fn local_extrema(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n <= 2 {
        return x.to_vec();
    }
    let mut out = vec![x[0]];
    for i in 1..n - 1 {
        let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
        if (b >= a && b >= c) || (b <= a && b <= c) {
            out.push(b);
        }
    }
    out.push(x[n - 1]);
    out
}

fn p_variation_dp<V: PathValue>(x: &[V], p: f64) -> f64 {
    // best[j]: max of Σ|Δ|^p over partitions of x[..=j] ending at j
    let mut best = vec![0.0f64; x.len()];
    for j in 1..x.len() {
        let mut m = 0.0f64;
        for i in 0..j {
            let v = best[i] + (x[j] - x[i]).magnitude().powf(p);
            if v > m {
                m = v;
            }
        }
        best[j] = m;
    }
    best.iter().copied().fold(0.0, f64::max).powf(1.0 / p)
}

/// Grid p-variation `sup_D (Σ |g(t_k) − g(t_{k−1})|^p)^{1/p}` over
/// subsequences of the visited values, by dynamic programming.
pub fn p_variation<V: PathValue>(g: &GridPath<V>, p: f64) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::Domain("p-variation of an empty grid path".into()));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("p-variation needs p >= 1, got {p}")));
    }
    let seq = visited_values(g);
    if seq.iter().all(|v| v.as_real().is_some()) {
        let real: Vec<f64> = seq.iter().map(|v| v.as_real().unwrap()).collect();
        Ok(p_variation_dp(&local_extrema(&real), p))
    } else {
        Ok(p_variation_dp(&seq, p))
    }
}

/// Riemann zeta function for real `s > 1`.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1");
    let n = 64.0f64;
    let head: f64 = (1..64).map(|k| (k as f64).powf(-s)).sum();
    // Euler–Maclaurin tail from n
    let b2 = s / 12.0 * n.powf(-s - 1.0);
    let b4 = -s * (s + 1.0) * (s + 2.0) / 720.0 * n.powf(-s - 3.0);
    head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + b2 + b4
}

/// Constant in the Young–Loève estimate
/// `|∫f dg − f(a)(g(b) − g(a))| ≤ C ‖f‖_p ‖g‖_q` for `1/p + 1/q > 1`.
pub fn young_constant(p: f64, q: f64) -> Result<f64> {
    let theta = 1.0 / p + 1.0 / q;
    if !(theta > 1.0) {
        return Err(Error::Parameter(format!("Young pairing needs 1/p + 1/q > 1, got {theta}")));
    }
    Ok(2.0 * zeta(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subordinator::{sample_subordinator, Jump, JumpLaw, SubordinatorSpec};
    use proptest::prelude::*;

    fn linear_path() -> SubordinatorPath {
        SubordinatorPath::linear(1.0, 1.0).unwrap()
    }

    #[test]
    fn representative_modes_cover_ball_once() {
        let reps = representative_modes(5);
        let count = (-5i64..=5)
            .flat_map(|a| (-5i64..=5).map(move |b| (a, b)))
            .filter(|(a, b)| a * a + b * b <= 25)
            .count();
        assert_eq!(2 * reps.len() - 1, count);
    }

    #[test]
    fn hermitian_symmetry_and_real_zero_mode() {
        let p = sample_subordinator(&SubordinatorSpec::poisson(3.0).with_drift(0.5), 1.0, 4).unwrap();
        let grid = grid_with_jumps(&p, 1.0, 10, &[]);
        let noise = sample_mode_noise(&p, 3, &grid, 9).unwrap();
        for cell in 0..noise.cells() {
            assert_eq!(noise.increment([1, 0], cell).conj(), noise.increment([-1, 0], cell));
            assert_eq!(noise.increment([2, -1], cell).conj(), noise.increment([-2, 1], cell));
            assert_eq!(noise.increment([0, 0], cell).im, 0.0);
        }
    }

    #[test]
    fn zero_clock_increment_is_zero() {
        let p = SubordinatorPath::new("p", 1.0, 0.0, vec![Jump { time: 0.5, size: 1.0 }]).unwrap();
        let noise = sample_mode_noise(&p, 2, &[0.0, 0.25, 0.5, 1.0], 1).unwrap();
        for l in [[0, 0], [1, 1], [-2, 0]] {
            assert_eq!(noise.increment(l, 0), Complex64::ZERO);
            assert_eq!(noise.increment(l, 2), Complex64::ZERO);
            assert_ne!(noise.increment(l, 1), Complex64::ZERO);
        }
    }

    #[test]
    fn grid_missing_a_jump_is_rejected() {
        let p = SubordinatorPath::new("p", 1.0, 0.0, vec![Jump { time: 0.3, size: 1.0 }]).unwrap();
        assert!(matches!(sample_mode_noise(&p, 2, &[0.0, 0.5, 1.0], 1), Err(Error::Grid(_))));
        assert!(matches!(sample_mode_noise(&p, 2, &[0.1, 0.3, 1.0], 1), Err(Error::Grid(_))));
    }

    #[test]
    fn restriction_equals_sampling_at_smaller_cutoff() {
        let p = sample_subordinator(&SubordinatorSpec::poisson(2.0).with_drift(1.0), 1.0, 2).unwrap();
        let grid = grid_with_jumps(&p, 1.0, 8, &[]);
        let big = sample_mode_noise(&p, 6, &grid, 5).unwrap();
        let small = sample_mode_noise(&p, 3, &grid, 5).unwrap();
        assert_eq!(big.restrict(3), small);
    }

    #[test]
    fn noise_text_round_trips() {
        let p = sample_subordinator(&SubordinatorSpec::poisson(2.0).with_drift(1.0), 1.0, 2).unwrap();
        let grid = grid_with_jumps(&p, 1.0, 4, &[]);
        let noise = sample_mode_noise(&p, 2, &grid, 5).unwrap();
        assert_eq!(ModeNoise::from_text(&noise.to_text()).unwrap(), noise);
    }

    #[test]
    fn young_constant_integrand() {
        let g = GridPath::from_fn((0..=10).map(|i| i as f64 / 10.0).collect(), |s| s * s).unwrap();
        let f = GridPath::from_fn(g.times().to_vec(), |_| 3.0).unwrap();
        let v = young_integral(&f, &g, 0.0, 1.0, Interpolation::Strict).unwrap();
        assert!((v - 3.0).abs() < 1e-14);
    }

    #[test]
    fn young_calculus_example() {
        let times: Vec<f64> = (0..=10_000).map(|i| i as f64 / 1e4).collect();
        let f = GridPath::from_fn(times.clone(), |s| s).unwrap();
        let g = GridPath::from_fn(times, |s| s * s).unwrap();
        let v = young_integral(&f, &g, 0.0, 1.0, Interpolation::Strict).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn young_pure_jump_matches_jump_sum() {
        let spec = SubordinatorSpec::compound_poisson(5.0, JumpLaw::Exponential { mean: 0.5 });
        let path = sample_subordinator(&spec, 1.0, 17).unwrap();
        assert!(!path.jumps().is_empty());
        let grid = grid_with_jumps(&path, 1.0, 16, &[]);
        let noise = sample_mode_noise(&path, 1, &grid, 3).unwrap();
        let beta = noise.brownian_path([1, 0]);
        let f = GridPath::from_fn(grid.clone(), f64::exp).unwrap();
        let v = young_integral(&f, &beta, 0.0, 1.0, Interpolation::Strict).unwrap();
        let mut oracle = Complex64::ZERO;
        for (cell, t) in grid[1..].iter().enumerate() {
            oracle += t.exp() * noise.increment([1, 0], cell);
        }
        assert!((v - oracle).norm() <= 1e-14 * (1.0 + oracle.norm()));
    }

    #[test]
    fn young_interpolation_policy() {
        let f = GridPath::from_fn(vec![0.0, 1.0], |s| s).unwrap();
        let g = GridPath::from_fn(vec![0.0, 0.5, 1.0], |s| s).unwrap();
        assert!(matches!(young_integral(&f, &g, 0.0, 1.0, Interpolation::Strict), Err(Error::Interpolation(_))));
        let v = young_integral(&f, &g, 0.0, 1.0, Interpolation::Linear).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn young_rejects_common_discontinuity() {
        let t = vec![0.0, 0.5, 1.0];
        let f = GridPath::with_left_limits(t.clone(), vec![0.0, 1.0, 1.0], vec![0.0, 0.0, 1.0]).unwrap();
        let g = GridPath::with_left_limits(t, vec![0.0, 2.0, 2.0], vec![0.0, 0.0, 2.0]).unwrap();
        assert!(matches!(young_integral(&f, &g, 0.0, 1.0, Interpolation::Strict), Err(Error::Domain(_))));
    }

    #[test]
    fn p_variation_examples() {
        let mono = GridPath::from_fn((0..50).map(|i| i as f64).collect(), |t| t.sqrt()).unwrap();
        assert!((p_variation(&mono, 1.0).unwrap() - 49f64.sqrt()).abs() < 1e-12);
        let jump = GridPath::with_left_limits(vec![0.0, 0.5, 1.0], vec![0.0, -2.5, -2.5], vec![0.0, 0.0, -2.5])
            .unwrap();
        for p in [1.0, 2.0, 3.7] {
            assert!((p_variation(&jump, p).unwrap() - 2.5).abs() < 1e-14);
        }
        let empty: GridPath<f64> = GridPath::continuous(vec![], vec![]).unwrap();
        assert!(matches!(p_variation(&empty, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn zeta_known_values() {
        assert!((zeta(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!((zeta(4.0) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-12);
        assert!((zeta(1.5) - 2.612_375_348_685_488).abs() < 1e-10);
    }

    #[test]
    fn linear_clock_has_no_jump_cells() {
        let noise = sample_mode_noise(&linear_path(), 1, &[0.0, 0.5, 1.0], 0).unwrap();
        assert_eq!(noise.cell_jump(0), 0.0);
        assert_eq!(noise.jump_increment([1, 0], 1), Complex64::ZERO);
    }

    proptest! {
        #[test]
        fn extrema_reduction_is_exact(x in prop::collection::vec(-5.0f64..5.0, 1..40), p in 1.0f64..4.0) {
            let full = p_variation_dp(&x, p);
            let reduced = p_variation_dp(&local_extrema(&x), p);
            prop_assert!((full - reduced).abs() <= 1e-12 * (1.0 + full));
        }

        #[test]
        fn p_variation_decreases_in_p(x in prop::collection::vec(-5.0f64..5.0, 2..40), p in 1.0f64..3.0, dp in 0.0f64..3.0) {
            let g = GridPath::continuous((0..x.len()).map(|i| i as f64).collect(), x).unwrap();
            prop_assert!(p_variation(&g, p + dp).unwrap() <= p_variation(&g, p).unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn young_bound_holds(
            fx in prop::collection::vec(-2.0f64..2.0, 3..30),
            gx in prop::collection::vec(-2.0f64..2.0, 3..30),
            p in 1.0f64..2.5,
            q in 1.0f64..2.5,
        ) {
            prop_assume!(1.0 / p + 1.0 / q > 1.05);
            let n = fx.len().min(gx.len());
            let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let f = GridPath::continuous(t.clone(), fx[..n].to_vec()).unwrap();
            let g = GridPath::continuous(t, gx[..n].to_vec()).unwrap();
            let b = (n - 1) as f64;
            let lhs = (young_integral(&f, &g, 0.0, b, Interpolation::Strict).unwrap()
                - f.values()[0] * (g.values()[n - 1] - g.values()[0])).abs();
            let rhs = young_constant(p, q).unwrap() * p_variation(&f, p).unwrap() * p_variation(&g, q).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
        }
    }
}
