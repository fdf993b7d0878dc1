//! Quadratures on ℝ^N: concentric dilated bubbles and an Aubin–Talenti bubble pushed off to
//! infinity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{line_fit, LineFit};
use crate::params::{critical_levels, hardy_sobolev_constant, sobolev_constant, Params};
use crate::scalar::Real;
use crate::search::golden_max;
use crate::special::{gauss_legendre, sech_power_integral, sphere_area};

/// Geometric radial nodes per decade.
pub const NODES_PER_DECADE: usize = 2000;
const GL_PANEL: usize = 16;

/// Amplitude c of the L^{2*}-unit profile on the cylinder, Û(t) = c·sech^{(N−2)/2}(θt).
fn amplitude<T: Real>(dim: usize, theta: T) -> T {
    let mass = sphere_area::<T>(dim) * sech_power_integral(T::of_usize(dim)) / theta;
    mass.powf(-T::one() / crate::params::critical_exponent::<T>(dim))
}

/// Radial HS bubble U_γ with ‖U_γ‖_{2*} = 1.
#[derive(Debug, Clone, Copy)]
pub struct HsProfile<T> {
    amp: T,
    half: T,
    theta: T,
}

impl<T: Real> HsProfile<T> {
    pub fn new(p: &Params<T>) -> Self {
        HsProfile {
            amp: amplitude(p.dim, p.theta),
            half: p.half(),
            theta: p.theta,
        }
    }

    /// U_γ[λ](r) = λ^{−(N−2)/2} U_γ(r/λ).
    pub fn eval(&self, lambda: T, r: T) -> T {
        self.ln_eval(lambda, r).exp()
    }

    /// ln U_γ[λ](r), equal to −h ln r + ln Û(ln λ − ln r) with h = (N−2)/2.
    pub fn ln_eval(&self, lambda: T, r: T) -> T {
        let lr = r.ln();
        let a = self.theta * (lr - lambda.ln()).abs();
        let log_sech = -a - (-(a + a)).exp().ln_1p() + T::LN_2();
        self.amp.ln() - self.half * lr + self.half * log_sech
    }
}

/// Aubin–Talenti profile U(ρ) = c 2^{(N−2)/2} (1 + ρ²)^{−(N−2)/2}, ‖U‖_{2*} = 1.
#[derive(Debug, Clone, Copy)]
pub struct Talenti<T> {
    pub dim: usize,
    /// U(ρ) ~ tail·ρ^{2−N} at infinity.
    pub tail: T,
    half: T,
}

impl<T: Real> Talenti<T> {
    pub fn new(dim: usize) -> Self {
        let half = T::of_usize(dim) / T::of(2.0) - T::one();
        Talenti {
            dim,
            tail: amplitude::<T>(dim, T::one()) * T::of(2.0).powf(half),
            half,
        }
    }

    pub fn eval(&self, rho: T) -> T {
        self.tail * (T::one() + rho * rho).powf(-self.half)
    }
}

/// Trapezoid in ln r on [lo, hi] with `per_decade` geometric nodes per decade, plus power-law
/// extrapolation of both tails from the local log-slope.
fn log_radial<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T, per_decade: usize) -> T {
    let decades = (hi / lo).log10();
    let n = (decades * T::of_usize(per_decade)).ceil().to_usize().unwrap_or(1).max(2);
    let du = (hi / lo).ln() / T::of_usize(n);
    let ln_lo = lo.ln();
    // ∫ f dr = ∫ f(e^u) e^u du
    let g = |i: usize| {
        let r = (ln_lo + du * T::of_usize(i)).exp();
        f(r) * r
    };
    let mut sum = T::zero();
    let mut first = (T::zero(), T::zero());
    let mut last = (T::zero(), T::zero());
    for i in 0..=n {
        let v = g(i);
        let w = if i == 0 || i == n { T::of(0.5) } else { T::one() };
        sum = sum + w * v;
        if i == 0 {
            first.0 = v;
        } else if i == 1 {
            first.1 = v;
        }
        if i == n - 1 {
            last.0 = v;
        } else if i == n {
            last.1 = v;
        }
    }
    sum * du + power_tail(first.1, first.0, du) + power_tail(last.0, last.1, du)
}

/// Tail of ∫ e^{κu} du beyond a node where the sampled value is `edge`, given the value `inner`
/// one step `du` further inside. Returns zero when the samples do not decay outward.
fn power_tail<T: Real>(inner: T, edge: T, du: T) -> T {
    if edge <= T::zero() || inner <= T::zero() || edge >= inner {
        return T::zero();
    }
    let kappa = (inner / edge).ln() / du;
    edge / kappa
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda > T::zero() && lambda <= T::one()) {
        return Err(Error::Range {
            name: "lambda",
            value: lambda.as_f64(),
            interval: "(0, 1]".into(),
        });
    }
    Ok(())
}

/// ∫_{ℝ^N} U_γ^{η₁} U_γ[λ]^{η₂} dx with η₁ + η₂ = 2*.
pub fn interaction_rn<T: Real>(p: &Params<T>, eta1: T, eta2: T, lambda: T) -> Result<T> {
    check_lambda(lambda)?;
    if (eta1 + eta2 - p.two_star).abs() > T::of(1e-12) * p.two_star || eta1 <= T::zero() || eta2 <= T::zero() {
        return Err(Error::ExponentSum {
            expected: p.two_star.as_f64(),
            got: (eta1 + eta2).as_f64(),
        });
    }
    let n1 = T::of_usize(p.dim - 1);
    let u = HsProfile::new(p);
    let f = |r: T| (n1 * r.ln() + eta1 * u.ln_eval(T::one(), r) + eta2 * u.ln_eval(lambda, r)).exp();
    let lo = lambda * T::of(1e-4);
    let hi = T::of(1e4) / lambda;
    Ok(sphere_area::<T>(p.dim) * log_radial(f, lo, hi, NODES_PER_DECADE))
}

/// λ-ladder 10^{−1}, 10^{−1.25}, …, 10^{−3}.
pub fn default_lambda_ladder<T: Real>() -> Vec<T> {
    (0..9).map(|i| T::of(10f64.powf(-1.0 - 0.25 * i as f64))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RnRateFit {
    pub eta1: f64,
    pub eta2: f64,
    pub lambda: Vec<f64>,
    pub values: Vec<f64>,
    pub balanced: bool,
    /// Slope of ln I (ln(I/ln λ^{−1}) when balanced) against ln λ.
    pub fitted_exponent: f64,
    /// ε·min{η₁, η₂}, or εN/(N−2) when balanced.
    pub expected_exponent: f64,
    pub rel_err: f64,
    pub fit: LineFit,
    /// Balanced only: I/λ^{εN/(N−2)} against ln λ^{−1}.
    pub log_corrected: Option<LineFit>,
}

pub fn interaction_rn_rate_fit<T: Real>(p: &Params<T>, eta1: T, eta2: T, lambdas: &[T]) -> Result<RnRateFit> {
    let balanced = (eta1 - eta2).abs() <= T::of(1e-12) * p.two_star;
    let mut values = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        values.push(interaction_rn(p, eta1, eta2, l)?.as_f64());
    }
    let lam: Vec<f64> = lambdas.iter().map(|l| l.as_f64()).collect();
    let x: Vec<f64> = lam.iter().map(|l| l.ln()).collect();
    let eps = p.eps.as_f64();
    let n = p.dim as f64;
    let expected = if balanced {
        eps * n / (n - 2.0)
    } else {
        eps * eta1.min(eta2).as_f64()
    };
    let (y, log_corrected): (Vec<f64>, _) = if balanced {
        let y = values.iter().zip(&lam).map(|(v, l)| (v / (-l.ln())).ln()).collect();
        let xs: Vec<f64> = lam.iter().map(|l| -l.ln()).collect();
        let ys: Vec<f64> = values.iter().zip(&lam).map(|(v, l)| v / l.powf(expected)).collect();
        (y, Some(line_fit(&xs, &ys)))
    } else {
        (values.iter().map(|v| v.ln()).collect(), None)
    };
    let fit = line_fit(&x, &y);
    Ok(RnRateFit {
        eta1: eta1.as_f64(),
        eta2: eta2.as_f64(),
        lambda: lam,
        values,
        balanced,
        fitted_exponent: fit.slope,
        expected_exponent: expected,
        rel_err: (fit.slope - expected).abs() / expected,
        fit,
        log_corrected,
    })
}

/// ∫|∇U|² for the unit Aubin–Talenti bubble, by radial quadrature.
pub fn talenti_dirichlet<T: Real>(dim: usize) -> T {
    let h = T::of_usize(dim) / T::of(2.0) - T::one();
    let c = Talenti::<T>::new(dim).tail;
    let n1 = T::of_usize(dim - 1);
    let two = T::of(2.0);
    let f = |r: T| {
        let du = c * two * h * r * (T::one() + r * r).powf(-h - T::one());
        r.powf(n1) * du * du
    };
    sphere_area::<T>(dim) * log_radial(f, T::of(1e-8), T::of(1e8), NODES_PER_DECADE)
}

/// Composite Gauss–Legendre rule on the panels `breaks`.
fn composite<T: Real>(breaks: &[T], nodes: &[T], weights: &[T]) -> Vec<(T, T)> {
    let half = T::of(0.5);
    let mut out = Vec::with_capacity(breaks.len() * nodes.len());
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = half * (a + b);
        let r = half * (b - a);
        for (x, wt) in nodes.iter().zip(weights) {
            out.push((m + r * *x, r * *wt));
        }
    }
    out
}

fn sorted_unique<T: Real>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() <= T::of(1e-14) * b.abs().max(T::one()));
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffsetIntegrals<T> {
    pub z: T,
    /// ∫ U[z]²/|x|².
    pub hardy_term: T,
    /// ‖U[z]‖^{2*}_{2*} from the same quadrature; should be 1.
    pub mass: T,
    /// (λ, ∫ U_γ[λ]^{2*−1} U[z]) on the λ-grid.
    pub overlap: Vec<(T, T)>,
    pub argmax_lambda: T,
    /// sup_λ of the overlap squared.
    pub m_value: T,
    pub bracket_escape: bool,
}

/// Angular averages of U[z] and U[z]² on the composite radial nodes.
struct Offset<T> {
    radial: Vec<(T, T)>,
    avg: Vec<T>,
    avg_sq: Vec<T>,
    avg_pow: Vec<T>,
    r_min: T,
    r_max: T,
}

fn offset_quadrature<T: Real>(dim: usize, z: T) -> Offset<T> {
    let (gx, gw) = gauss_legendre::<T>(GL_PANEL);
    let two_star = crate::params::critical_exponent::<T>(dim);
    let zc = z.max(T::one());
    let r_min = T::of(1e-6);
    let r_max = T::of(1e4) * zc;
    let mut lb = Vec::new();
    let (l0, l1) = (r_min.ln(), r_max.ln());
    let steps = ((l1 - l0) / T::of(0.25)).ceil().to_usize().unwrap();
    for i in 0..=steps {
        lb.push((l0 + (l1 - l0) * T::of_usize(i) / T::of_usize(steps)).exp());
    }
    let mut d = T::of(0.125);
    while d < T::of(0.5) * z {
        lb.push(z - d);
        lb.push(z + d);
        d = d * T::of(2.0);
    }
    lb.push(z);
    let rb = sorted_unique(lb.into_iter().filter(|r| *r >= r_min && *r <= r_max).collect());
    let radial = composite(&rb, &gx, &gw);

    let mut ab = vec![T::zero(), T::PI()];
    let mut phi = T::PI();
    while phi > T::of(0.02) / zc {
        phi = phi * T::of(0.5);
        ab.push(phi);
    }
    let ab = sorted_unique(ab);
    let angles: Vec<(T, T)> = composite(&ab, &gx, &gw)
        .into_iter()
        .map(|(f, w)| (f.cos(), w * f.sin().powi(dim as i32 - 2)))
        .collect();
    let s2 = sphere_area::<T>(dim - 1);
    let u_at = Talenti::<T>::new(dim);
    let mut avg = Vec::with_capacity(radial.len());
    let mut avg_sq = Vec::with_capacity(radial.len());
    let mut avg_pow = Vec::with_capacity(radial.len());
    for &(r, _) in &radial {
        let (mut a, mut b, mut c) = (T::zero(), T::zero(), T::zero());
        for &(cf, w) in &angles {
            let rho2 = (r * r + z * z - T::of(2.0) * r * z * cf).max(T::zero());
            let u = u_at.eval(rho2.sqrt());
            a = a + w * u;
            b = b + w * u * u;
            c = c + w * u.powf(two_star);
        }
        avg.push(s2 * a);
        avg_sq.push(s2 * b);
        avg_pow.push(s2 * c);
    }
    Offset { radial, avg, avg_sq, avg_pow, r_min, r_max }
}

/// Log-spaced λ-grid on [10^{−3}, 10^3], 20 points per decade.
pub fn default_lambda_grid<T: Real>() -> Vec<T> {
    (0..=120).map(|i| T::of(10f64.powf(-3.0 + i as f64 / 20.0))).collect()
}

/// Hardy term and dilation overlaps of the translated Aubin–Talenti bubble U[z] = U(· − z e).
pub fn offset_bubble_integrals<T: Real>(p: &Params<T>, z: T, lambda_grid: &[T]) -> Result<OffsetIntegrals<T>> {
    if !(z > T::zero()) {
        return Err(Error::Range {
            name: "z",
            value: z.as_f64(),
            interval: "(0, ∞)".into(),
        });
    }
    if lambda_grid.len() < 3 {
        return Err(Error::Shape("λ-grid needs at least 3 points".into()));
    }
    let dim = p.dim;
    let q = offset_quadrature::<T>(dim, z);
    let n1 = T::of_usize(dim - 1);
    let nd = T::of_usize(dim) - T::of(2.0);
    let sphere = sphere_area::<T>(dim);

    let mut hardy = T::zero();
    let mut mass = T::zero();
    for (i, &(r, w)) in q.radial.iter().enumerate() {
        hardy = hardy + w * r.powf(n1 - T::of(2.0)) * q.avg_sq[i];
        mass = mass + w * r.powf(n1) * q.avg_pow[i];
    }
    let at = Talenti::<T>::new(dim);
    let c = at.tail;
    let u0 = at.eval(z);
    hardy = hardy + sphere * c * c * q.r_max.powf(-nd) / nd + sphere * u0 * u0 * q.r_min.powf(nd) / nd;

    let pw = p.two_star - T::one();
    let u = HsProfile::new(p);
    let pre: Vec<T> = q.radial.iter().zip(&q.avg).map(|(&(r, w), a)| w * r.powf(n1) * *a).collect();
    let overlap_at = |lambda: T| {
        let mut s = T::zero();
        for (&(r, _), c) in q.radial.iter().zip(&pre) {
            s = s + *c * (pw * u.ln_eval(lambda, r)).exp();
        }
        s
    };
    let overlap: Vec<(T, T)> = lambda_grid.iter().map(|&l| (l, overlap_at(l))).collect();
    let mut best = 0;
    for (i, &(_, v)) in overlap.iter().enumerate() {
        if v * v > overlap[best].1 * overlap[best].1 {
            best = i;
        }
    }
    let bracket_escape = best == 0 || best == overlap.len() - 1;
    let (argmax_lambda, m_value) = if bracket_escape {
        (overlap[best].0, overlap[best].1 * overlap[best].1)
    } else {
        let a = overlap[best - 1].0.ln();
        let b = overlap[best + 1].0.ln();
        let (x, v) = golden_max(
            |u: T| {
                let o = overlap_at(u.exp());
                o * o
            },
            a,
            b,
            T::of(1e-8),
        );
        let grid_best = overlap[best].1 * overlap[best].1;
        if v >= grid_best {
            (x.exp(), v)
        } else {
            (overlap[best].0, grid_best)
        }
    };
    Ok(OffsetIntegrals {
        z,
        hardy_term: hardy,
        mass,
        overlap,
        argmax_lambda,
        m_value,
        bracket_escape,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HiddenLevelRow<T> {
    pub z: T,
    pub hardy_term: T,
    pub m_value: T,
    pub quotient: T,
    pub target: T,
    pub bracket_escape: bool,
}

/// (S − γH − S_γ)/(S − γH − S_γ 𝔪) for the translated Aubin–Talenti bubble.
pub fn hidden_level_row<T: Real>(p: &Params<T>, z: T) -> Result<HiddenLevelRow<T>> {
    let o = offset_bubble_integrals(p, z, &default_lambda_grid())?;
    let s = sobolev_constant::<T>(p.dim);
    let sg = hardy_sobolev_constant(p);
    let base = s - p.gamma * o.hardy_term;
    let num = base - sg;
    let den = base - sg * o.m_value;
    if den <= T::zero() {
        return Err(Error::Degenerate {
            dist2: den.as_f64(),
            guard: 0.0,
        });
    }
    Ok(HiddenLevelRow {
        z,
        hardy_term: o.hardy_term,
        m_value: o.m_value,
        quotient: num / den,
        target: critical_levels(p).hidden,
        bracket_escape: o.bracket_escape,
    })
}

/// Empirical power law |quotient − target| ~ z^{slope}, fitted in log-log coordinates.
pub fn approach_rate<T: Real>(rows: &[HiddenLevelRow<T>]) -> Option<LineFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.z.as_f64().ln(), (r.quotient - r.target).abs().as_f64()))
        .filter(|(_, d)| *d > 0.0)
        .map(|(x, d)| (x, d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(line_fit(&x, &y))
}

pub fn hidden_level_quotient<T: Real>(p: &Params<T>, z: T) -> Result<T> {
    Ok(hidden_level_row(p, z)?.quotient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    #[test]
    fn normalizations() {
        let p = make_params(4, 0.75f64).unwrap();
        let one = interaction_rn(&p, 2.0, 2.0, 1.0).unwrap();
        assert!((one - 1.0).abs() < 1e-9, "{one}");
        for n in [3usize, 4, 5] {
            let d: f64 = talenti_dirichlet(n);
            assert!((d / sobolev_constant::<f64>(n) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn swap() {
        let p = make_params(4, 0.75f64).unwrap();
        let a = interaction_rn(&p, 1.0, 3.0, 0.01).unwrap();
        let b = interaction_rn(&p, 3.0, 1.0, 0.01).unwrap();
        assert!((a - b).abs() < 1e-8 * a.abs(), "{a} {b}");
        assert!(interaction_rn(&p, 1.0, 3.0, 1.5).is_err());
    }

    #[test]
    fn offset_mass() {
        let p = make_params(4, 0.75f64).unwrap();
        let o = offset_bubble_integrals(&p, 10.0, &default_lambda_grid()).unwrap();
        assert!((o.mass - 1.0).abs() < 1e-6, "{}", o.mass);
        assert!(!o.bracket_escape);
    }
}
