//! Closed-form scalars: the parameter set, the Sobolev and Hardy–Sobolev constants,
//! the local level Λ(γ), the γ thresholds and the positivity functions f₁, f₂.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::search::bisect;
use crate::special::{sech_power_integral, sphere_area};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params<T> {
    #[serde(rename = "N")]
    pub dim: usize,
    pub gamma: T,
    pub eps: T,
    pub theta: T,
    pub beta_minus: T,
    pub beta_plus: T,
    pub two_star: T,
    pub a: T,
    pub q: T,
}

/// Upper end (N−2)²/4 of the admissible γ interval.
pub fn gamma_max<T: Real>(dim: usize) -> T {
    let half = T::of_usize(dim) / T::of(2.0) - T::one();
    half * half
}

pub fn critical_exponent<T: Real>(dim: usize) -> T {
    let n = T::of_usize(dim);
    T::of(2.0) * n / (n - T::of(2.0))
}

pub fn make_params<T: Real>(dim: usize, gamma: T) -> Result<Params<T>> {
    if dim < 3 {
        return Err(Error::Range {
            name: "N",
            value: dim as f64,
            interval: "[3, ∞)".into(),
        });
    }
    let gmax = gamma_max::<T>(dim);
    if !(gamma > T::zero() && gamma < gmax) {
        return Err(Error::Range {
            name: "gamma",
            value: gamma.as_f64(),
            interval: format!("(0, {})", gmax.as_f64()),
        });
    }
    let half = T::of_usize(dim) / T::of(2.0) - T::one();
    let eps = (gmax - gamma).sqrt();
    Ok(Params {
        dim,
        gamma,
        eps,
        theta: eps / half,
        beta_minus: half - eps,
        beta_plus: half + eps,
        two_star: critical_exponent(dim),
        a: half - eps,
        q: T::of_usize(dim - 1) / (eps * eps),
    })
}

impl<T: Real> Params<T> {
    pub fn new(dim: usize, gamma: T) -> Result<Self> {
        make_params(dim, gamma)
    }

    /// (N−2)/2.
    pub fn half(&self) -> T {
        T::of_usize(self.dim) / T::of(2.0) - T::one()
    }

    /// Exponent (N−2)/2 of the sech profile.
    pub fn profile_power(&self) -> T {
        self.half()
    }

    pub fn sphere(&self) -> T {
        sphere_area(self.dim)
    }

    /// Params of the same dimension whose θ is `theta`.
    pub fn with_theta(&self, theta: T) -> Result<Self> {
        let eps = theta * self.half();
        make_params(self.dim, gamma_max::<T>(self.dim) - eps * eps)
    }
}

/// 𝒞_α = [((N−2)/2)² + (N−2)/2] α².
pub fn ode_constant<T: Real>(dim: usize, alpha: T) -> T {
    let half = T::of_usize(dim) / T::of(2.0) - T::one();
    (half * half + half) * alpha * alpha
}

/// ∫_ℝ sech^N t dt.
pub fn sech_integral<T: Real>(dim: usize) -> T {
    sech_power_integral(T::of_usize(dim))
}

/// The γ → 0 limit (θ = 1), where the quotient on the cylinder is the plain Sobolev one.
pub fn sobolev_limit<T: Real>(dim: usize) -> Params<T> {
    let half = T::of_usize(dim) / T::of(2.0) - T::one();
    Params {
        dim,
        gamma: T::zero(),
        eps: half,
        theta: T::one(),
        beta_minus: T::zero(),
        beta_plus: half + half,
        two_star: critical_exponent(dim),
        a: T::zero(),
        q: T::of_usize(dim - 1) / (half * half),
    }
}

/// Sharp Sobolev constant from the cylinder profile h₁ = sech^{(N−2)/2}.
pub fn sobolev_constant<T: Real>(dim: usize) -> T {
    let ts = critical_exponent::<T>(dim);
    let expo = T::one() - T::of(2.0) / ts;
    sphere_area::<T>(dim).powf(expo) * ode_constant::<T>(dim, T::one()) * sech_integral::<T>(dim).powf(expo)
}

/// S_γ = θ^{1+2/2*} S.
pub fn hardy_sobolev_constant<T: Real>(p: &Params<T>) -> T {
    p.theta.powf(T::one() + T::of(2.0) / p.two_star) * sobolev_constant::<T>(p.dim)
}

/// γ_c* = ((N+1)/2N)((N−2)/2)².
pub fn gamma_c_star<T: Real>(dim: usize) -> T {
    let n = T::of_usize(dim);
    (n + T::one()) / (T::of(2.0) * n) * gamma_max::<T>(dim)
}

fn lambda_from_eps<T: Real>(dim: usize, eps: T) -> T {
    let ts = critical_exponent::<T>(dim);
    let q = T::of_usize(dim - 1) / (eps * eps);
    let two = T::of(2.0);
    let denom = two + two * q + (ts - two) * (T::one() + q).sqrt();
    T::one() - ts * (ts - T::one()) / denom
}

/// Λ(γ) evaluated on the unchecked γ axis; used by root finding at the interval ends.
fn lambda_raw<T: Real>(dim: usize, gamma: T) -> T {
    if gamma > gamma_c_star::<T>(dim) {
        T::of(4.0) / (T::of_usize(dim) + T::of(4.0))
    } else {
        let g = gamma.max(T::zero());
        lambda_from_eps(dim, (gamma_max::<T>(dim) - g).sqrt())
    }
}

/// Local level Λ(γ) = 1 − μ₂/μ₃ of the linearized operator.
pub fn spectral_gap_formula<T: Real>(p: &Params<T>) -> T {
    lambda_raw(p.dim, p.gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds<T> {
    pub gamma_c_star: T,
    pub gamma0: T,
    /// The radial constant fell outside the range of Λ on (0, γ_c*] and γ₀ was clamped.
    pub clamped: bool,
    /// Λ(γ₀) − c_rad when an estimate was supplied.
    pub residual: Option<T>,
}

/// γ_c* and γ₀. For N = 3 γ₀ has a closed form; for N ≥ 4 it is the root of Λ(γ) = c_rad.
pub fn gamma_thresholds<T: Real>(dim: usize, c_rad: Option<T>) -> Result<Thresholds<T>> {
    if dim < 3 {
        return Err(Error::Range {
            name: "N",
            value: dim as f64,
            interval: "[3, ∞)".into(),
        });
    }
    let gcs = gamma_c_star::<T>(dim);
    if dim == 3 {
        let n = T::of_usize(dim);
        let g0 = (T::one() - (n / (n + T::of(4.0))).powf(n / (n - T::one()))) * gamma_max::<T>(dim);
        return Ok(Thresholds {
            gamma_c_star: gcs,
            gamma0: g0,
            clamped: false,
            residual: c_rad.map(|c| lambda_raw(dim, g0) - c),
        });
    }
    let c = c_rad.ok_or(Error::RequiresRadialConstant(dim))?;
    let lo = lambda_raw(dim, T::zero());
    let hi = lambda_raw(dim, gcs);
    let (g0, clamped) = if c <= lo {
        (T::zero(), c < lo)
    } else if c >= hi {
        (gcs, c > hi)
    } else {
        let tol = T::epsilon() * gcs;
        let root = bisect(|g| lambda_raw(dim, g) - c, T::zero(), gcs, tol).unwrap_or(gcs);
        (root, false)
    };
    Ok(Thresholds {
        gamma_c_star: gcs,
        gamma0: g0,
        clamped,
        residual: Some(lambda_raw(dim, g0) - c),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalLevels<T> {
    pub local: T,
    pub two_peak: T,
    pub hidden: T,
    pub local_below_hidden: bool,
    pub local_below_two_peak: bool,
}

/// 2 − 2^{2/2*}.
pub fn two_peak_level<T: Real>(dim: usize) -> T {
    let ts = critical_exponent::<T>(dim);
    T::of(2.0) - T::of(2.0).powf(T::of(2.0) / ts)
}

pub fn critical_levels<T: Real>(p: &Params<T>) -> CriticalLevels<T> {
    let local = spectral_gap_formula(p);
    let two_peak = two_peak_level::<T>(p.dim);
    let hidden = T::one() - p.theta.powf(T::one() + T::of(2.0) / p.two_star);
    CriticalLevels {
        local,
        two_peak,
        hidden,
        local_below_hidden: local < hidden,
        local_below_two_peak: local < two_peak,
    }
}

/// f₁(θ) = N/(N+4) − θ^{2(N−1)/N}.
pub fn f1<T: Real>(theta: T, dim: usize) -> T {
    let n = T::of_usize(dim);
    n / (n + T::of(4.0)) - theta.powf(T::of(2.0) * (n - T::one()) / n)
}

/// f₂(θ) = N(N+2)/(N−2)² θ^{2/N} − (θ² + 4(N−1)/(N−2)² + (2θ/(N−2))√(θ² + 4(N−1)/(N−2)²)).
pub fn f2<T: Real>(theta: T, dim: usize) -> T {
    let n = T::of_usize(dim);
    let two = T::of(2.0);
    let m2 = n - two;
    let c = T::of(4.0) * (n - T::one()) / (m2 * m2);
    let inner = theta * theta + c;
    n * (n + two) / (m2 * m2) * theta.powf(two / n) - (inner + two * theta / m2 * inner.sqrt())
}

/// (4 + ln 2)/ln 2: above this dimension the crude bound alone makes f₁ positive at the split point.
pub fn f1_sufficiency_threshold<T: Real>() -> T {
    (T::of(4.0) + T::LN_2()) / T::LN_2()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult<T> {
    pub lo: T,
    pub hi: T,
    pub points: usize,
    pub min_value: T,
    pub argmin: T,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport<T> {
    #[serde(rename = "N")]
    pub dim: usize,
    /// √((N−1)/2N), where the two branches meet.
    pub split: T,
    pub f1_scan: ScanResult<T>,
    pub f2_scan: Option<ScanResult<T>>,
    /// f₁ evaluated directly at the split point.
    pub f1_at_split: T,
    pub sufficiency_threshold: T,
    /// 4 − (4 + ln 2)(1 − 1/N) < 0, the crude bound that settles f₁ at the split.
    pub sufficiency_bound_holds: bool,
    pub passed: bool,
}

fn scan<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T, points: usize, include_lo: bool) -> ScanResult<T> {
    let mut min_value = T::infinity();
    let mut argmin = lo;
    for i in 0..points {
        // open at hi; open at lo unless include_lo
        let frac = if include_lo {
            T::of_usize(i) / T::of_usize(points)
        } else {
            T::of_usize(i + 1) / T::of_usize(points + 1)
        };
        let x = lo + (hi - lo) * frac;
        let v = f(x);
        if v < min_value {
            min_value = v;
            argmin = x;
        }
    }
    ScanResult {
        lo,
        hi,
        points,
        min_value,
        argmin,
        positive: min_value > T::zero(),
    }
}

/// Grid scan of f₁ and f₂ on the intervals where they are claimed positive.
pub fn positivity_scan<T: Real>(dim: usize, grid_size: usize) -> PositivityReport<T> {
    let n = T::of_usize(dim);
    let grid_size = grid_size.max(1000);
    let split = ((n - T::one()) / (T::of(2.0) * n)).sqrt();
    let threshold = f1_sufficiency_threshold::<T>();
    let bound = T::of(4.0) - (T::of(4.0) + T::LN_2()) * (T::one() - T::one() / n);
    let (f1_scan, f2_scan) = if dim == 3 {
        let hi = (n / (n + T::of(4.0))).powf(n / (T::of(2.0) * (n - T::one())));
        (scan(|x| f1(x, dim), T::zero(), hi, grid_size, false), None)
    } else {
        (
            scan(|x| f1(x, dim), T::zero(), split, grid_size, false),
            Some(scan(|x| f2(x, dim), split, T::one(), grid_size, true)),
        )
    };
    let passed = f1_scan.positive && f2_scan.as_ref().is_none_or(|s| s.positive);
    PositivityReport {
        dim,
        split,
        f1_scan,
        f2_scan,
        f1_at_split: f1(split, dim),
        sufficiency_threshold: threshold,
        sufficiency_bound_holds: bound < T::zero(),
        passed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsTable<T> {
    #[serde(rename = "N")]
    pub dim: usize,
    pub gamma: T,
    pub eps: T,
    pub theta: T,
    pub beta_minus: T,
    pub beta_plus: T,
    pub two_star: T,
    pub a: T,
    pub q: T,
    #[serde(rename = "S")]
    pub s: T,
    #[serde(rename = "S_gamma")]
    pub s_gamma: T,
    #[serde(rename = "Lambda")]
    pub lambda: T,
    pub gamma_c_star: T,
    pub levels: CriticalLevels<T>,
}

pub fn constants_table<T: Real>(p: &Params<T>) -> ConstantsTable<T> {
    ConstantsTable {
        dim: p.dim,
        gamma: p.gamma,
        eps: p.eps,
        theta: p.theta,
        beta_minus: p.beta_minus,
        beta_plus: p.beta_plus,
        two_star: p.two_star,
        a: p.a,
        q: p.q,
        s: sobolev_constant(p.dim),
        s_gamma: hardy_sobolev_constant(p),
        lambda: spectral_gap_formula(p),
        gamma_c_star: gamma_c_star(p.dim),
        levels: critical_levels(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n4_gamma_three_quarters() {
        let p = make_params::<f64>(4, 0.75).unwrap();
        assert!((p.eps - 0.5).abs() < 1e-15);
        assert!((p.theta - 0.5).abs() < 1e-15);
        assert!((p.beta_minus - 0.5).abs() < 1e-15);
        assert!((p.beta_plus - 1.5).abs() < 1e-15);
        assert_eq!(p.two_star, 4.0);
        assert!((p.a - 0.5).abs() < 1e-15);
        assert!((p.q - 12.0).abs() < 1e-12);
    }

    #[test]
    fn n3_sixteenth() {
        let p = make_params::<f64>(3, 3.0 / 16.0).unwrap();
        assert!((p.eps - 0.25).abs() < 1e-15);
        assert!((p.theta - 0.5).abs() < 1e-15);
    }

    #[test]
    fn endpoints_rejected() {
        assert!(make_params::<f64>(4, 0.0).is_err());
        assert!(make_params::<f64>(4, 1.0).is_err());
        assert!(make_params::<f64>(2, 0.1).is_err());
        let msg = make_params::<f64>(4, 2.0).unwrap_err().to_string();
        assert!(msg.contains("(0, 1)"), "{msg}");
    }

    #[test]
    fn sobolev_limit() {
        let p = make_params::<f64>(4, 1e-12).unwrap();
        assert!((p.theta - 1.0).abs() < 1e-11);
        let s = sobolev_constant::<f64>(4);
        assert!((hardy_sobolev_constant(&p) - s).abs() < 1e-9);
    }

    #[test]
    fn hs_constant_n4() {
        let p = make_params::<f64>(4, 0.75).unwrap();
        let ratio = hardy_sobolev_constant(&p) / sobolev_constant::<f64>(4);
        assert!((ratio - 0.5f64.powf(1.5)).abs() < 1e-14);
        assert!((hardy_sobolev_constant(&p) - 3.6276).abs() < 1e-4);
    }

    #[test]
    fn lambda_branches() {
        let p = make_params::<f64>(4, 0.75).unwrap();
        assert!((spectral_gap_formula(&p) - 0.5).abs() < 1e-15);
        let pc = make_params::<f64>(4, 0.625).unwrap();
        assert!((pc.q - 8.0).abs() < 1e-12);
        assert!((spectral_gap_formula(&pc) - 0.5).abs() < 1e-14);
        for dim in 3..11 {
            let gc = gamma_c_star::<f64>(dim);
            let left = lambda_raw(dim, gc * (1.0 - 1e-13));
            let right = lambda_raw(dim, gc * (1.0 + 1e-13));
            assert!((left - right).abs() < 1e-10, "dim {dim}");
        }
    }

    #[test]
    fn thresholds() {
        let t = gamma_thresholds::<f64>(4, Some(0.5)).unwrap();
        assert!((t.gamma_c_star - 0.625).abs() < 1e-15);
        assert!((t.gamma0 - 0.625).abs() < 1e-12);
        let t3 = gamma_thresholds::<f64>(3, None).unwrap();
        assert!((t3.gamma0 - 0.179_856).abs() < 5e-6);
        assert!(t3.gamma_c_star < t3.gamma0);
        assert_eq!(
            gamma_thresholds::<f64>(5, None).unwrap_err(),
            Error::RequiresRadialConstant(5)
        );
        let t = gamma_thresholds::<f64>(4, Some(0.45)).unwrap();
        assert!(!t.clamped);
        assert!(t.residual.unwrap().abs() < 1e-10);
        let low = gamma_thresholds::<f64>(4, Some(-0.01)).unwrap();
        assert!(low.clamped);
    }

    #[test]
    fn levels_n4() {
        let p = make_params::<f64>(4, 0.75).unwrap();
        let l = critical_levels(&p);
        assert!((l.local - 0.5).abs() < 1e-15);
        assert!((l.two_peak - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        assert!((l.hidden - 0.646_447).abs() < 1e-6);
        assert!(l.local_below_hidden);
    }

    #[test]
    fn f2_vanishes_at_one() {
        for dim in 3..=10 {
            assert!(f2(1.0f64, dim).abs() < 1e-12, "dim {dim}");
        }
    }

    #[test]
    fn f1_direct_at_split() {
        for dim in [4usize, 5, 6] {
            let n = dim as f64;
            assert!(f1(((n - 1.0) / (2.0 * n)).sqrt(), dim) > 0.0);
        }
        assert!((f1_sufficiency_threshold::<f64>() - 6.77).abs() < 5e-3);
    }

    #[test]
    fn scans_pass() {
        for dim in 3..=10 {
            let r = positivity_scan::<f64>(dim, 2000);
            assert!(r.passed, "dim {dim}");
            assert_eq!(r.sufficiency_bound_holds, dim >= 7);
        }
    }

    #[test]
    fn single_precision_agrees() {
        let p = make_params::<f32>(4, 0.75).unwrap();
        assert!((spectral_gap_formula(&p) - 0.5).abs() < 1e-6);
        assert!((sobolev_constant::<f32>(4) - 10.2604).abs() < 1e-3);
    }
}
