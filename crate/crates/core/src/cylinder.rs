//! Functions on ℝ×S^{N−1} stored as spherical-harmonic sectors with 1D profiles.
//!
//! A sector of degree k holds a profile f_k(t) multiplying the zonal harmonic P_k
//! normalized by P_k(1) = 1, so ∫_{S^{N−1}} P_k² = |S^{N−1}|/D(k).
//! Quadratic forms are evaluated with Fourier differentiation on the periodized grid,
//! which is exact up to the exponentially small tail mass.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{make_params, ode_constant, Params};
use crate::report::fmt_float;
use crate::scalar::Real;
use crate::special::{gauss_legendre, harmonic_dim, sech_pow, sech_power_integral, sphere_area, zonal};

/// Relative tail bound demanded of every stored profile.
pub const DECAY_TOL: f64 = 1e-10;
/// Bubble tail bound used for grid sizing.
pub const BUBBLE_TAIL: f64 = 1e-12;
pub const DEFAULT_POINTS: usize = 4001;
const POLAR_NODES: usize = 64;

pub struct SpectralPlan<T: Real> {
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    omega2: Vec<T>,
}

impl<T: Real> SpectralPlan<T> {
    fn new(n: usize, h: T) -> Self {
        let m = n - 1;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let period = h * T::of_usize(m);
        let omega2 = (0..m)
            .map(|j| {
                let k = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
                let w = T::of(2.0) * T::PI() * T::of(k) / period;
                w * w
            })
            .collect();
        SpectralPlan { fwd, inv, omega2 }
    }

    fn len(&self) -> usize {
        self.omega2.len()
    }

    fn forward(&self, f: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = f[..self.len()].iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.fwd.process(&mut buf);
        buf
    }

    fn backward(&self, mut buf: Vec<Complex<T>>, out_len: usize) -> Vec<T> {
        self.inv.process(&mut buf);
        let scale = T::one() / T::of_usize(self.len());
        let mut out: Vec<T> = buf.iter().map(|c| c.re * scale).collect();
        out.resize(out_len, T::zero());
        out[out_len - 1] = out[0];
        out
    }
}

/// Uniform grid on [−L, L] with an odd number of nodes, so t = 0 is a node.
#[derive(Clone)]
pub struct Grid<T: Real> {
    half_width: T,
    n: usize,
    plan: Arc<OnceLock<SpectralPlan<T>>>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("L", &self.half_width).field("n", &self.n).finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.half_width == other.half_width && self.n == other.n
    }
}

impl<T: Real> Serialize for Grid<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Grid", 3)?;
        st.serialize_field("L", &self.half_width)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("h", &self.h())?;
        st.end()
    }
}

impl<T: Real> Grid<T> {
    pub fn new(half_width: T, n: usize) -> Result<Self> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::Shape(format!("grid point count must be odd and >= 3, got {n}")));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::Range {
                name: "L",
                value: half_width.as_f64(),
                interval: "(0, ∞)".into(),
            });
        }
        Ok(Grid {
            half_width,
            n,
            plan: Arc::new(OnceLock::new()),
        })
    }

    /// Grid of half width `half_width` whose spacing does not exceed `h`.
    pub fn with_spacing(half_width: T, h: T) -> Result<Self> {
        let cells = (T::of(2.0) * half_width / h).ceil().to_usize().unwrap_or(2).max(2);
        let cells = cells + cells % 2;
        Self::new(half_width, cells + 1)
    }

    /// L = max(40, 30/θ, 1.05·L_tail) with n = 4001, where L_tail resolves the bubble tail.
    pub fn default_for(p: &Params<T>) -> Self {
        let l = T::of(40.0)
            .max(T::of(30.0) / p.theta)
            .max(T::of(1.05) * required_half_width(p, T::zero()));
        Self::new(l, DEFAULT_POINTS).expect("valid default grid")
    }

    /// Same half width, spacing halved.
    pub fn refined(&self) -> Self {
        Self::new(self.half_width, 2 * self.n - 1).expect("refined grid")
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> T {
        T::of(2.0) * self.half_width / T::of_usize(self.n - 1)
    }

    pub fn mid(&self) -> usize {
        (self.n - 1) / 2
    }

    pub fn node(&self, i: usize) -> T {
        (T::of_usize(i) - T::of_usize(self.mid())) * self.h()
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn spectral(&self) -> &SpectralPlan<T> {
        self.plan.get_or_init(|| SpectralPlan::new(self.n, self.h()))
    }

    /// ∫ f dt by the trapezoid rule on the periodized grid.
    pub fn integrate(&self, f: &[T]) -> T {
        let m = self.n - 1;
        let half = T::of(0.5);
        let s: T = f[1..m].iter().copied().sum();
        self.h() * (s + half * (f[0] + f[m]))
    }

    /// ∫ (f′g′ + c f g) dt.
    pub fn form(&self, f: &[T], g: &[T], c: T) -> T {
        let plan = self.spectral();
        let ff = plan.forward(f);
        let m = plan.len();
        let deriv = if std::ptr::eq(f, g) {
            ff.iter().zip(&plan.omega2).map(|(a, &w)| w * a.norm_sqr()).sum::<T>()
        } else {
            let gg = plan.forward(g);
            ff.iter()
                .zip(&gg)
                .zip(&plan.omega2)
                .map(|((a, b), &w)| w * (a.re * b.re + a.im * b.im))
                .sum::<T>()
        };
        let prod: Vec<T> = f.iter().zip(g).map(|(a, b)| *a * *b).collect();
        self.h() * deriv / T::of_usize(m) + c * self.integrate(&prod)
    }

    /// (−∂_tt + c) f at the nodes.
    pub fn apply(&self, f: &[T], c: T) -> Vec<T> {
        let plan = self.spectral();
        let mut ff = plan.forward(f);
        for (a, &w) in ff.iter_mut().zip(&plan.omega2) {
            *a = *a * w;
        }
        let mut out = plan.backward(ff, self.n);
        for (o, &x) in out.iter_mut().zip(f) {
            *o = *o + c * x;
        }
        let last = self.n - 1;
        out[last] = out[0];
        out
    }

    /// (−∂_tt + c)^{-1} f at the nodes, c > 0.
    pub fn solve(&self, f: &[T], c: T) -> Vec<T> {
        let plan = self.spectral();
        let mut ff = plan.forward(f);
        for (a, &w) in ff.iter_mut().zip(&plan.omega2) {
            *a = *a / (w + c);
        }
        plan.backward(ff, self.n)
    }
}

/// Smallest L such that the bubble shifted by `s` has relative tail below 1e−12 at ±L.
pub fn required_half_width<T: Real>(p: &Params<T>, s: T) -> T {
    // sech^{(N−2)/2}(x) < tail  ⇔  cosh x > tail^{−2/(N−2)}
    let ln_y = -T::of(BUBBLE_TAIL).ln() / p.half();
    let y_inv2 = (-(ln_y + ln_y)).exp();
    let acosh = ln_y + (T::one() + (T::one() - y_inv2).sqrt()).ln();
    s.abs() + acosh / p.theta
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorProfile<T> {
    pub degree: usize,
    pub values: Vec<T>,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderField<T: Real> {
    pub params: Params<T>,
    pub grid: Grid<T>,
    pub sectors: Vec<SectorProfile<T>>,
}

fn check_decay<T: Real>(values: &[T], degree: usize) -> Result<()> {
    let max = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tail = values[0].abs().max(values[values.len() - 1].abs());
    if tail > T::of(DECAY_TOL) * max {
        return Err(Error::Resolution(format!(
            "sector {degree} boundary value {:e} exceeds {DECAY_TOL:e} of max {:e}",
            tail.as_f64(),
            max.as_f64()
        )));
    }
    Ok(())
}

impl<T: Real> CylinderField<T> {
    /// Field with the given sector profiles; profiles must decay at ±L.
    pub fn from_sectors(params: Params<T>, grid: Grid<T>, sectors: Vec<(usize, Vec<T>)>) -> Result<Self> {
        let mut out: Vec<SectorProfile<T>> = Vec::with_capacity(sectors.len());
        for (k, values) in sectors {
            if values.len() != grid.n() {
                return Err(Error::Shape(format!(
                    "sector {k} has {} values on a grid of {}",
                    values.len(),
                    grid.n()
                )));
            }
            check_decay(&values, k)?;
            if let Some(existing) = out.iter_mut().find(|s| s.degree == k) {
                for (a, b) in existing.values.iter_mut().zip(values) {
                    *a = *a + b;
                }
            } else {
                out.push(SectorProfile {
                    degree: k,
                    multiplicity: harmonic_dim(params.dim, k),
                    values,
                });
            }
        }
        out.sort_by_key(|s| s.degree);
        Ok(CylinderField { params, grid, sectors: out })
    }

    pub fn radial(params: Params<T>, grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        Self::from_sectors(params, grid, vec![(0, values)])
    }

    /// Sector-0 field without the decay check; for iterates inside descent loops.
    pub(crate) fn radial_unchecked(params: Params<T>, grid: Grid<T>, values: Vec<T>) -> Self {
        CylinderField {
            params,
            grid,
            sectors: vec![SectorProfile {
                degree: 0,
                multiplicity: 1,
                values,
            }],
        }
    }

    fn with_sectors_unchecked(&self, sectors: Vec<SectorProfile<T>>) -> Self {
        CylinderField {
            params: self.params,
            grid: self.grid.clone(),
            sectors,
        }
    }

    pub fn sector(&self, k: usize) -> Option<&SectorProfile<T>> {
        self.sectors.iter().find(|s| s.degree == k)
    }

    /// Sector-0 profile, zero if absent.
    pub fn radial_part(&self) -> Vec<T> {
        self.sector(0).map_or_else(|| vec![T::zero(); self.grid.n()], |s| s.values.clone())
    }

    /// Projection onto sector 0.
    pub fn project_radial(&self) -> Self {
        self.with_sectors_unchecked(self.sectors.iter().filter(|s| s.degree == 0).cloned().collect())
    }

    pub fn is_radial(&self) -> bool {
        self.sectors
            .iter()
            .all(|s| s.degree == 0 || s.values.iter().all(|v| *v == T::zero()))
    }

    /// ∫_{S^{N−1}} P_k² = |S^{N−1}|/D(k).
    pub fn sector_weight(&self, k: usize) -> T {
        sphere_area::<T>(self.params.dim) / T::of(harmonic_dim(self.params.dim, k) as f64)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map_values(|v| v * c)
    }

    fn map_values<F: Fn(T) -> T>(&self, f: F) -> Self {
        self.with_sectors_unchecked(
            self.sectors
                .iter()
                .map(|s| SectorProfile {
                    degree: s.degree,
                    multiplicity: s.multiplicity,
                    values: s.values.iter().map(|&v| f(v)).collect(),
                })
                .collect(),
        )
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape("fields live on different grids".into()));
        }
        if self.params.dim != other.params.dim || self.params.gamma != other.params.gamma {
            return Err(Error::Shape("fields carry different parameters".into()));
        }
        Ok(())
    }

    /// self + c·other.
    pub fn axpy(&self, c: T, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut sectors = self.sectors.clone();
        for o in &other.sectors {
            if let Some(s) = sectors.iter_mut().find(|s| s.degree == o.degree) {
                for (a, &b) in s.values.iter_mut().zip(&o.values) {
                    *a = *a + c * b;
                }
            } else {
                sectors.push(SectorProfile {
                    degree: o.degree,
                    multiplicity: o.multiplicity,
                    values: o.values.iter().map(|&b| c * b).collect(),
                });
            }
        }
        sectors.sort_by_key(|s| s.degree);
        Ok(self.with_sectors_unchecked(sectors))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(T::one(), other)
    }

    /// t ↦ f(t + s). Grid multiples shift nodes exactly; other shifts use cubic interpolation.
    pub fn translate(&self, s: T) -> Self {
        let h = self.grid.h();
        let steps = (s / h).round();
        let exact = ((s / h) - steps).abs() <= T::of(1e-9);
        self.with_sectors_unchecked(
            self.sectors
                .iter()
                .map(|sec| SectorProfile {
                    degree: sec.degree,
                    multiplicity: sec.multiplicity,
                    values: if exact {
                        shift_nodes(&sec.values, steps.to_i64().unwrap_or(0))
                    } else {
                        (0..self.grid.n())
                            .map(|i| cubic_at(&sec.values, T::of_usize(i) + s / h))
                            .collect()
                    },
                })
                .collect(),
        )
    }

    /// Cubic interpolation of every sector onto another grid; zero outside the source interval.
    pub fn resample_onto(&self, grid: &Grid<T>) -> Self {
        let (h, l) = (self.grid.h(), self.grid.half_width());
        CylinderField {
            params: self.params,
            grid: grid.clone(),
            sectors: self
                .sectors
                .iter()
                .map(|sec| SectorProfile {
                    degree: sec.degree,
                    multiplicity: sec.multiplicity,
                    values: grid.nodes().into_iter().map(|t| cubic_at(&sec.values, (t + l) / h)).collect(),
                })
                .collect(),
        }
    }

    /// Rebinds the field to another γ of the same dimension without touching values.
    pub fn with_params(&self, params: Params<T>) -> Self {
        CylinderField {
            params,
            grid: self.grid.clone(),
            sectors: self.sectors.clone(),
        }
    }
}

fn shift_nodes<T: Real>(v: &[T], steps: i64) -> Vec<T> {
    let n = v.len() as i64;
    (0..n)
        .map(|i| {
            let j = i + steps;
            if j >= 0 && j < n { v[j as usize] } else { T::zero() }
        })
        .collect()
}

/// Four-point Lagrange interpolation at fractional index `x`; zero outside the samples.
pub fn cubic_at<T: Real>(v: &[T], x: T) -> T {
    let n = v.len() as i64;
    let base = x.floor();
    let i = base.to_i64().unwrap_or(i64::MIN / 2);
    let u = x - base;
    if u == T::zero() && i >= 0 && i < n {
        return v[i as usize];
    }
    let get = |j: i64| if j >= 0 && j < n { v[j as usize] } else { T::zero() };
    if i < -1 || i > n {
        return T::zero();
    }
    let (p0, p1, p2, p3) = (get(i - 1), get(i), get(i + 1), get(i + 2));
    let one = T::one();
    let two = T::of(2.0);
    let six = T::of(6.0);
    -u * (u - one) * (u - two) / six * p0 + (u + one) * (u - one) * (u - two) / two * p1
        - (u + one) * u * (u - two) / two * p2
        + (u + one) * u * (u - one) / six * p3
}

/// Normalizing amplitude of the L^{2*}-unit bubble, from |S^{N−1}| C^{2*} ∫sech^N(θt) dt = 1.
pub(crate) fn bubble_amplitude<T: Real>(p: &Params<T>) -> T {
    let mass = sphere_area::<T>(p.dim) * sech_power_integral(T::of_usize(p.dim)) / p.theta;
    mass.powf(-T::one() / p.two_star)
}

/// The L^{2*}-normalized HS bubble profile, Û_γ(t) ∝ sech^{(N−2)/2}(θt), with analytic normalization.
pub fn bubble_profile<T: Real>(p: &Params<T>, t: T) -> T {
    bubble_amplitude(p) * sech_pow(p.theta * t, p.half())
}

/// Û_γ(t + s) sampled at the grid nodes.
pub fn bubble_samples<T: Real>(p: &Params<T>, g: &Grid<T>, s: T) -> Vec<T> {
    let amp = bubble_amplitude(p);
    g.nodes().into_iter().map(|t| amp * sech_pow(p.theta * (t + s), p.half())).collect()
}

/// Û_γ[s] = Û_γ(· + s) as a sector-0 field, normalized to unit discrete L^{2*} norm.
pub fn hs_bubble<T: Real>(p: &Params<T>, g: &Grid<T>, s: T) -> Result<CylinderField<T>> {
    let tail = sech_pow(p.theta * (g.half_width() - s.abs()), p.half());
    if g.half_width() <= s.abs() || !(tail < T::of(BUBBLE_TAIL)) {
        return Err(Error::TailTruncation {
            have: g.half_width().as_f64(),
            required: required_half_width(p, s).as_f64(),
        });
    }
    let raw: Vec<T> = g.nodes().into_iter().map(|t| sech_pow(p.theta * (t + s), p.half())).collect();
    let pw: Vec<T> = raw.iter().map(|v| v.powf(p.two_star)).collect();
    let norm = (sphere_area::<T>(p.dim) * g.integrate(&pw)).powf(T::one() / p.two_star);
    let values = raw.into_iter().map(|v| v / norm).collect();
    CylinderField::radial(*p, g.clone(), values)
}

/// ⟨f, g⟩_ε = Σ_k |S|/D(k) ∫ (f_k′g_k′ + (k(k+N−2)+ε²) f_k g_k).
pub fn inner_eps<T: Real>(f: &CylinderField<T>, g: &CylinderField<T>) -> Result<T> {
    f.compatible(g)?;
    let eps2 = f.params.eps * f.params.eps;
    let mut acc = T::zero();
    for a in &f.sectors {
        if let Some(b) = g.sector(a.degree) {
            let c = angular::<T>(f.params.dim, a.degree) + eps2;
            acc = acc + f.sector_weight(a.degree) * f.grid.form(&a.values, &b.values, c);
        }
    }
    Ok(acc)
}

/// k(k+N−2).
pub fn angular<T: Real>(dim: usize, k: usize) -> T {
    T::of_usize(k * (k + dim - 2))
}

pub fn norm_eps_sq<T: Real>(f: &CylinderField<T>) -> T {
    let eps2 = f.params.eps * f.params.eps;
    f.sectors
        .iter()
        .map(|s| {
            let c = angular::<T>(f.params.dim, s.degree) + eps2;
            f.sector_weight(s.degree) * f.grid.form(&s.values, &s.values, c)
        })
        .sum()
}

pub fn norm_eps<T: Real>(f: &CylinderField<T>) -> T {
    norm_eps_sq(f).sqrt()
}

/// A f per sector, with A = −∂_tt + k(k+N−2) + ε²; the ε-inner product is then a weighted L² pairing.
pub fn apply_form<T: Real>(f: &CylinderField<T>) -> CylinderField<T> {
    let eps2 = f.params.eps * f.params.eps;
    f.with_sectors_unchecked(
        f.sectors
            .iter()
            .map(|s| SectorProfile {
                degree: s.degree,
                multiplicity: s.multiplicity,
                values: f.grid.apply(&s.values, angular::<T>(f.params.dim, s.degree) + eps2),
            })
            .collect(),
    )
}

/// ‖f‖_{L^p(ℝ×S^{N−1})}.
pub fn lp_norm<T: Real>(f: &CylinderField<T>, p: T) -> T {
    let active: Vec<&SectorProfile<T>> = f
        .sectors
        .iter()
        .filter(|s| s.values.iter().any(|v| *v != T::zero()))
        .collect();
    let integral = if active.iter().all(|s| s.degree == 0) {
        let r = f.radial_part();
        let pw: Vec<T> = r.iter().map(|v| v.abs().powf(p)).collect();
        sphere_area::<T>(f.params.dim) * f.grid.integrate(&pw)
    } else {
        let dim = f.params.dim;
        let (x, w) = gauss_legendre::<T>(POLAR_NODES);
        let half_pi = T::FRAC_PI_2();
        let mut pw = vec![T::zero(); f.grid.n()];
        for (xi, wi) in x.iter().zip(&w) {
            let phi = half_pi * (*xi + T::one());
            let c = phi.cos();
            let weight = half_pi * *wi * phi.sin().powi(dim as i32 - 2);
            let harmonics: Vec<T> = active.iter().map(|s| zonal(dim, s.degree, c)).collect();
            for (i, acc) in pw.iter_mut().enumerate() {
                let mut v = T::zero();
                for (s, y) in active.iter().zip(&harmonics) {
                    v = v + s.values[i] * *y;
                }
                *acc = *acc + weight * v.abs().powf(p);
            }
        }
        sphere_area::<T>(dim - 1) * f.grid.integrate(&pw)
    };
    integral.powf(T::one() / p)
}

/// ‖f‖²_ε / ‖f‖²_{2*}.
pub fn rayleigh_quotient<T: Real>(f: &CylinderField<T>) -> T {
    let l = lp_norm(f, f.params.two_star);
    norm_eps_sq(f) / (l * l)
}

/// Max-norm residual of −h″_α + ((N−2)/2)²α² h_α − 𝒞_α h_α^{2*−1} over the grid nodes.
pub fn ode_residual<T: Real>(alpha: T, dim: usize, g: &Grid<T>) -> T {
    let half = T::of_usize(dim) / T::of(2.0) - T::one();
    let ts = T::of(2.0) * T::of_usize(dim) / T::of_usize(dim - 2);
    let c_alpha = ode_constant::<T>(dim, alpha);
    g.nodes()
        .into_iter()
        .map(|t| {
            let x = alpha * t;
            let h = sech_pow(x, half);
            let th = x.tanh();
            let sech2 = sech_pow(x, T::of(2.0));
            let h2 = half * half * alpha * alpha * h * th * th - half * alpha * alpha * h * sech2;
            let rhs = c_alpha * h.powf(ts - T::one());
            (-h2 + half * half * alpha * alpha * h - rhs).abs()
        })
        .fold(T::zero(), T::max)
}

/// t ↦ f(θ₂/θ₁ · t) for a radial field at θ₁, returned on the grid scaled by θ₁/θ₂ so node values are unchanged.
pub fn resample_scale<T: Real>(f: &CylinderField<T>, p1: &Params<T>, p2: &Params<T>) -> Result<CylinderField<T>> {
    if !f.is_radial() {
        return Err(Error::NonRadial);
    }
    if p1.dim != p2.dim || f.params.dim != p1.dim {
        return Err(Error::Shape("scaling requires a common dimension".into()));
    }
    let r = p2.theta / p1.theta;
    let grid = if r == T::one() {
        f.grid.clone()
    } else {
        Grid::new(f.grid.half_width() / r, f.grid.n())?
    };
    Ok(CylinderField {
        params: *p2,
        grid,
        sectors: f.sectors.iter().filter(|s| s.degree == 0).cloned().collect(),
    })
}

#[derive(Serialize)]
struct DumpHeader {
    #[serde(rename = "N")]
    dim: usize,
    gamma: f64,
    #[serde(rename = "L")]
    half_width: f64,
    n: usize,
}

/// Writes the field as `# {json header}` followed by `t,k,value` rows.
pub fn write_field_csv<T: Real, W: Write>(f: &CylinderField<T>, mut w: W) -> Result<()> {
    let header = DumpHeader {
        dim: f.params.dim,
        gamma: f.params.gamma.as_f64(),
        half_width: f.grid.half_width().as_f64(),
        n: f.grid.n(),
    };
    let json = serde_json::to_value(&header).map_err(|e| Error::Parse(e.to_string()))?;
    let line = format!(
        "# {{\"L\":{},\"N\":{},\"gamma\":{},\"n\":{}}}",
        fmt_float(json["L"].as_f64().unwrap_or(f64::NAN)),
        header.dim,
        fmt_float(header.gamma),
        header.n
    );
    writeln!(w, "{line}")?;
    writeln!(w, "t,k,value")?;
    let nodes = f.grid.nodes();
    for s in &f.sectors {
        for (t, v) in nodes.iter().zip(&s.values) {
            writeln!(w, "{},{},{}", fmt_float(t.as_f64()), s.degree, fmt_float(v.as_f64()))?;
        }
    }
    Ok(())
}

/// Reads a field written by [`write_field_csv`].
pub fn read_field_csv<T: Real, R: BufRead>(r: R) -> Result<CylinderField<T>> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))??;
    let json = first
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("missing '#' header line".into()))?;
    let v: serde_json::Value = serde_json::from_str(json.trim()).map_err(|e| Error::Parse(e.to_string()))?;
    let num = |k: &str| v[k].as_f64().ok_or_else(|| Error::Parse(format!("header lacks {k}")));
    let dim = num("N")? as usize;
    let params = make_params(dim, T::of(num("gamma")?))?;
    let grid = Grid::new(T::of(num("L")?), num("n")? as usize)?;
    let cols = lines.next().ok_or_else(|| Error::Parse("missing column header".into()))??;
    if cols.trim() != "t,k,value" {
        return Err(Error::Parse(format!("unexpected columns {cols}")));
    }
    let mut sectors: Vec<(usize, Vec<T>)> = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("bad row {line}")));
        }
        let k: usize = parts[1].trim().parse().map_err(|_| Error::Parse(format!("bad degree in {line}")))?;
        let val: f64 = parts[2].trim().parse().map_err(|_| Error::Parse(format!("bad value in {line}")))?;
        match sectors.iter_mut().find(|s| s.0 == k) {
            Some(s) => s.1.push(T::of(val)),
            None => sectors.push((k, vec![T::of(val)])),
        }
    }
    CylinderField::from_sectors(params, grid, sectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{hardy_sobolev_constant, sobolev_constant};

    fn setup(dim: usize, gamma: f64) -> (Params<f64>, Grid<f64>) {
        let p = make_params(dim, gamma).unwrap();
        let g = Grid::default_for(&p);
        (p, g)
    }

    #[test]
    fn grid_basics() {
        let g = Grid::<f64>::new(10.0, 21).unwrap();
        assert_eq!(g.node(10), 0.0);
        assert!((g.h() - 1.0).abs() < 1e-15);
        assert!(Grid::<f64>::new(10.0, 20).is_err());
        assert!(Grid::<f64>::new(-1.0, 21).is_err());
        let w = Grid::<f64>::with_spacing(10.0, 0.3).unwrap();
        assert!(w.h() <= 0.3 && w.n() % 2 == 1);
    }

    #[test]
    fn bubble_is_normalized() {
        for (dim, gamma) in [(4, 0.75), (3, 0.1), (5, 1.0), (7, 3.0)] {
            let (p, g) = setup(dim, gamma);
            let u = hs_bubble(&p, &g, 0.0).unwrap();
            assert!((lp_norm(&u, p.two_star) - 1.0).abs() < 1e-10);
            let rel = (norm_eps_sq(&u) - hardy_sobolev_constant(&p)) / hardy_sobolev_constant(&p);
            assert!(rel.abs() < 1e-6, "dim {dim}: {rel:e}");
        }
    }

    #[test]
    fn bubble_tail_guard() {
        let p = make_params(4, 0.75).unwrap();
        let g = Grid::new(10.0, 101).unwrap();
        match hs_bubble(&p, &g, 0.0) {
            Err(Error::TailTruncation { required, .. }) => assert!(required > 50.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn translation_at_nodes() {
        let (p, g) = setup(4, 0.75);
        let h = g.h();
        let u0 = hs_bubble(&p, &g, 0.0).unwrap();
        let u5 = hs_bubble(&p, &g, 5.0 * h).unwrap();
        let shifted = u0.translate(5.0 * h);
        for (a, b) in u5.radial_part().iter().zip(shifted.radial_part()) {
            assert!((a - b).abs() <= 1e-13 * b.abs() + 1e-12);
        }
        let half = u0.translate(0.5 * h);
        let exact = hs_bubble(&p, &g, 0.5 * h).unwrap();
        let err = half
            .radial_part()
            .iter()
            .zip(exact.radial_part())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-6, "{err:e}");
    }

    #[test]
    fn mixed_sector_norm_matches_radial() {
        let (p, g) = setup(4, 0.75);
        let u = hs_bubble(&p, &g, 0.0).unwrap();
        let zero = CylinderField::from_sectors(p, g.clone(), vec![(0, u.radial_part()), (2, vec![0.0; g.n()])]).unwrap();
        assert!((lp_norm(&zero, 4.0) - 1.0).abs() < 1e-12);
        // a sector-1 profile contributes with weight |S|/N to the L² norm
        let bump: Vec<f64> = g.nodes().iter().map(|t| (-t * t).exp()).collect();
        let f = CylinderField::from_sectors(p, g.clone(), vec![(1, bump.clone())]).unwrap();
        let l2 = lp_norm(&f, 2.0).powi(2);
        let sq: Vec<f64> = bump.iter().map(|v| v * v).collect();
        let expected = sphere_area::<f64>(4) / 4.0 * g.integrate(&sq);
        assert!((l2 - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn sobolev_via_h1() {
        for dim in 3..=8 {
            let p = make_params(dim, 1e-3).unwrap();
            let g = Grid::new(60.0, 4001).unwrap();
            let h1: Vec<f64> = g.nodes().iter().map(|&t| sech_pow(t, p.half())).collect();
            let eps0 = p.half();
            let sq: Vec<f64> = h1.iter().map(|v| v.powf(p.two_star)).collect();
            let num = g.form(&h1, &h1, eps0 * eps0);
            let rq = num / g.integrate(&sq).powf(2.0 / p.two_star);
            let s = sphere_area::<f64>(dim).powf(1.0 - 2.0 / p.two_star) * rq;
            assert!((s / sobolev_constant::<f64>(dim) - 1.0).abs() < 1e-6, "dim {dim}");
        }
    }

    #[test]
    fn ode_identity() {
        let g = Grid::<f64>::new(40.0, 4001).unwrap();
        assert!(ode_residual(1.0, 4, &g) <= 1e-12);
        assert!(ode_residual(0.5, 3, &g) <= 1e-12);
    }

    #[test]
    fn scaling_identity() {
        let p1 = make_params(4, 0.75).unwrap();
        let p2 = make_params(4, 0.3).unwrap();
        let g = Grid::default_for(&p1);
        let u = hs_bubble(&p1, &g, 0.0).unwrap();
        let v = resample_scale(&u, &p1, &p2).unwrap();
        let lhs: f64 = norm_eps_sq(&u);
        let rhs = p1.theta / p2.theta * norm_eps_sq(&v);
        assert!((lhs - rhs).abs() < 1e-12 * lhs);
        let same = resample_scale(&u, &p1, &p1).unwrap();
        assert_eq!(same.radial_part(), u.radial_part());
        let bump: Vec<f64> = g.nodes().iter().map(|t| (-t * t).exp()).collect();
        let f = CylinderField::from_sectors(p1, g.clone(), vec![(1, bump)]).unwrap();
        assert_eq!(resample_scale(&f, &p1, &p2).unwrap_err(), Error::NonRadial);
    }

    #[test]
    fn spectral_solve_inverts_apply() {
        let g = Grid::<f64>::new(20.0, 801).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|t| (-t * t / 2.0).exp()).collect();
        let af = g.apply(&f, 0.7);
        let back = g.solve(&af, 0.7);
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let (p, g) = setup(4, 0.75);
        let u = hs_bubble(&p, &g, 0.0).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&u, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# {\"L\":"));
        let back: CylinderField<f64> = read_field_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.grid, u.grid);
        for (a, b) in back.radial_part().iter().zip(u.radial_part()) {
            assert!((a - b).abs() <= 1e-16 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn single_precision_bubble() {
        let p = make_params::<f32>(4, 0.75).unwrap();
        let g = Grid::default_for(&p);
        let u = hs_bubble(&p, &g, 0.0).unwrap();
        assert!((lp_norm(&u, 4.0) - 1.0).abs() < 1e-5);
        let rel = norm_eps_sq(&u) / hardy_sobolev_constant(&p) - 1.0;
        assert!(rel.abs() < 1e-3);
    }
}
