//! Descent on the radial stability quotient and the γ₀ solve.

use serde::Serialize;

use crate::cylinder::{bubble_amplitude, bubble_samples, CylinderField, Grid};
use crate::error::{Error, Result};
use crate::manifold::{overlap_maxima, quotient_fast};
use crate::params::{gamma_thresholds, hardy_sobolev_constant, Params, Thresholds};
use crate::scalar::Real;
use crate::special::{sech_pow, sphere_area};
use crate::spectrum::sector_eigvec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// Stop once |ΔQ| < rel_tol·Q.
    pub rel_tol: f64,
    /// Armijo constant.
    pub armijo: f64,
    pub max_step: f64,
    /// 𝔪-maxima within this relative distance of the top one are treated as active.
    pub tie_tol: f64,
    pub max_restarts: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            max_iter: 5000,
            rel_tol: 1e-8,
            armijo: 1e-4,
            max_step: 10.0,
            tie_tol: 1e-2,
            max_restarts: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    RelativeChange,
    /// Backtracking could not find a decrease; the iterate is stationary at working precision.
    LineSearch,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeResult<T: Real> {
    /// Quotient at the final iterate, an upper bound for the radial constant.
    pub c_rad_estimate: T,
    pub minimizer: CylinderField<T>,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub restarts: usize,
    /// 𝔪-maximizers active at the final iterate.
    pub active_shifts: Vec<T>,
    pub history: Vec<(usize, T)>,
}

struct Objective<'a, T: Real> {
    p: &'a Params<T>,
    g: &'a Grid<T>,
    sphere: T,
    s_gamma: T,
    eps2: T,
}

impl<'a, T: Real> Objective<'a, T> {
    fn field(&self, u: &[T]) -> CylinderField<T> {
        CylinderField::radial_unchecked(*self.p, self.g.clone(), u.to_vec())
    }

    fn norm_sq(&self, u: &[T]) -> T {
        self.sphere * self.g.form(u, u, self.eps2)
    }

    fn normalize(&self, u: &mut [T]) {
        let n = self.norm_sq(u).sqrt();
        for v in u.iter_mut() {
            *v = *v / n;
        }
    }

    fn quotient(&self, u: &[T]) -> Result<T> {
        quotient_fast(&self.field(u)).map(|(q, _)| q)
    }

    fn dot(&self, a: &[T], b: &[T]) -> T {
        self.sphere * self.g.integrate(&a.iter().zip(b).map(|(x, y)| *x * *y).collect::<Vec<_>>())
    }

    /// Riesz representative in the ε-metric of the quotient gradient for each active maximum.
    fn directions(&self, u: &[T], active: &[(T, T)]) -> Vec<Vec<T>> {
        let p = self.p;
        let ts = p.two_star;
        let au = self.g.apply(u, self.eps2);
        let norm = self.dot(u, &au);
        let pow_sum = self.sphere * self.g.integrate(&u.iter().map(|v| v.abs().powf(ts)).collect::<Vec<_>>());
        let l2 = pow_sum.powf(T::of(2.0) / ts);
        let delta = norm - self.s_gamma * l2;
        let two = T::of(2.0);
        let c = two * self.s_gamma * pow_sum.powf(two / ts - T::one());
        let grad_delta: Vec<T> = au
            .iter()
            .zip(u)
            .map(|(a, v)| two * *a - c * v.abs().powf(ts - two) * *v)
            .collect();
        let amp = bubble_amplitude(p).powf(ts - T::one());
        let expo = p.half() * (ts - T::one());
        active
            .iter()
            .map(|&(s, ov)| {
                let dist = norm - self.s_gamma * ov * ov;
                let q = delta / dist;
                let rhs: Vec<T> = self
                    .g
                    .nodes()
                    .into_iter()
                    .zip(&au)
                    .zip(&grad_delta)
                    .map(|((t, a), gd)| {
                        let b = amp * sech_pow(p.theta * (t + s), expo);
                        let gdist = two * *a - two * self.s_gamma * ov * b;
                        (*gd - q * gdist) / dist
                    })
                    .collect();
                self.g.solve(&rhs, self.eps2)
            })
            .collect()
    }

    /// Minimum ε-norm element of the segment between two directions.
    fn hull(&self, dirs: Vec<Vec<T>>) -> Vec<T> {
        let mut it = dirs.into_iter();
        let a = it.next().expect("at least one direction");
        let Some(b) = it.next() else { return a };
        let d: Vec<T> = a.iter().zip(&b).map(|(x, y)| *x - *y).collect();
        let dd = self.sphere * self.g.form(&d, &d, self.eps2);
        let lam = if dd > T::zero() {
            (-(self.sphere * self.g.form(&b, &d, self.eps2)) / dd).max(T::zero()).min(T::one())
        } else {
            T::of(0.5)
        };
        a.iter().zip(&b).map(|(x, y)| lam * *x + (T::one() - lam) * *y).collect()
    }
}

fn active_set<T: Real>(f: &CylinderField<T>, tol: T) -> Vec<(T, T)> {
    let mut m = overlap_maxima(f, tol);
    m.truncate(2);
    m
}

/// Descends δ/dist² over radial fields from `init`.
///
/// The 𝔪-supremum may be attained at two shifts at once. The step then follows the smallest
/// convex combination of the per-maximizer gradients.
pub fn minimize_radial_quotient<T: Real>(
    p: &Params<T>,
    g: &Grid<T>,
    init: &CylinderField<T>,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult<T>> {
    if !init.is_radial() {
        return Err(Error::NonRadial);
    }
    let obj = Objective {
        p,
        g,
        sphere: sphere_area::<T>(p.dim),
        s_gamma: hardy_sobolev_constant(p),
        eps2: p.eps * p.eps,
    };
    let base = {
        let mut b = bubble_samples(p, g, T::zero());
        obj.normalize(&mut b);
        b
    };
    let start = init.resample_onto(g).radial_part();
    let mut restarts = 0;
    let mut u = start.clone();
    obj.normalize(&mut u);
    loop {
        match descend(&obj, u.clone(), opts) {
            Ok(mut r) => {
                r.restarts = restarts;
                return Ok(r);
            }
            Err(Error::Degenerate { .. }) if restarts < opts.max_restarts => {
                restarts += 1;
                // push the start further from the bubble
                let scale = T::of(2f64.powi(restarts as i32));
                u = start.iter().zip(&base).map(|(a, b)| *b + scale * (*a - *b)).collect();
                obj.normalize(&mut u);
            }
            Err(Error::Degenerate { .. }) => return Err(Error::Collapsed(restarts)),
            Err(e) => return Err(e),
        }
    }
}

fn descend<T: Real>(obj: &Objective<'_, T>, mut u: Vec<T>, opts: &MinimizeOptions) -> Result<MinimizeResult<T>> {
    let tie = T::of(opts.tie_tol);
    let mut q = obj.quotient(&u)?;
    let mut active = active_set(&obj.field(&u), tie);
    let mut history = vec![(0, q)];
    let mut alpha = T::one();
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        let dir = obj.hull(obj.directions(&u, &active));
        let slope = obj.norm_sq(&dir);
        let mut accepted = None;
        while alpha > T::of(1e-14) {
            let mut trial: Vec<T> = u.iter().zip(&dir).map(|(a, d)| *a - alpha * *d).collect();
            obj.normalize(&mut trial);
            let qt = obj.quotient(&trial)?;
            if qt < q - T::of(opts.armijo) * alpha * slope {
                accepted = Some((trial, qt));
                break;
            }
            alpha = alpha * T::of(0.5);
        }
        let Some((next, qn)) = accepted else {
            stop = StopReason::LineSearch;
            break;
        };
        let change = (q - qn).abs();
        u = next;
        q = qn;
        history.push((it, q));
        if change < T::of(opts.rel_tol) * q.abs() {
            stop = StopReason::RelativeChange;
            break;
        }
        active = active_set(&obj.field(&u), tie);
        alpha = (alpha * T::of(2.0)).min(T::of(opts.max_step));
    }
    let minimizer = obj.field(&u);
    let active_shifts = active_set(&minimizer, tie).into_iter().map(|(s, _)| s).collect();
    Ok(MinimizeResult {
        c_rad_estimate: q,
        minimizer,
        iterations,
        converged: stop != StopReason::MaxIterations,
        stop,
        restarts: 0,
        active_shifts,
        history,
    })
}

/// Û_γ/‖Û_γ‖_ε + weight·ψ₃, with ψ₃ the third radial eigenfunction of the linearized operator,
/// ε-normalized and positive at the origin.
pub fn eigen_init<T: Real>(p: &Params<T>, g: &Grid<T>, weight: T) -> Result<CylinderField<T>> {
    let sphere = sphere_area::<T>(p.dim);
    let eps2 = p.eps * p.eps;
    let norm = |v: &[T]| (sphere * g.form(v, v, eps2)).sqrt();
    let bubble = bubble_samples(p, g, T::zero());
    let nb = norm(&bubble);
    let (_, mut psi) = sector_eigvec(p, g, 0, 2);
    let np = norm(&psi);
    let sign = if psi[g.mid()] < T::zero() { -T::one() } else { T::one() };
    for v in psi.iter_mut() {
        *v = sign * *v / np;
    }
    let values = bubble.iter().zip(&psi).map(|(b, s)| *b / nb + weight * *s).collect();
    CylinderField::radial(*p, g.clone(), values)
}

/// Weight of the eigenfunction perturbation in the default starts.
pub const INIT_WEIGHT: f64 = 0.2;

/// Runs the descent from Û_γ ± 0.2ψ₃ and keeps the lower estimate.
pub fn estimate_radial_constant<T: Real>(p: &Params<T>, g: &Grid<T>, opts: &MinimizeOptions) -> Result<MinimizeResult<T>> {
    let mut best: Option<MinimizeResult<T>> = None;
    let mut last_err = None;
    for w in [-INIT_WEIGHT, INIT_WEIGHT] {
        let init = eigen_init(p, g, T::of(w))?;
        match minimize_radial_quotient(p, g, &init, opts) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.c_rad_estimate < b.c_rad_estimate) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::Collapsed(0)))
}

/// γ₀ from an estimate of the radial constant (N ≥ 4), with the self-consistency residual.
pub fn gamma0_from_estimate<T: Real>(dim: usize, c_rad: T) -> Result<Thresholds<T>> {
    if dim < 4 {
        return Err(Error::Range {
            name: "N",
            value: dim as f64,
            interval: "[4, ∞)".into(),
        });
    }
    gamma_thresholds(dim, Some(c_rad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{gamma_c_star, make_params};

    #[test]
    fn gamma0_boundary_and_interior() {
        let t = gamma0_from_estimate(4, 0.5f64).unwrap();
        assert!((t.gamma0 - gamma_c_star::<f64>(4)).abs() < 1e-12 && !t.clamped);
        let t = gamma0_from_estimate(4, 0.45f64).unwrap();
        assert!(t.residual.unwrap().abs() <= 1e-10);
        assert!(gamma0_from_estimate(3, 0.3f64).is_err());
    }

    #[test]
    fn init_is_off_manifold() {
        let p = make_params(4, 0.75f64).unwrap();
        let g = Grid::default_for(&p);
        let f = eigen_init(&p, &g, -0.2).unwrap();
        let (q, _) = quotient_fast(&f).unwrap();
        assert!(q > 0.0 && q < 1.0);
    }
}
