//! Linearized eigenproblem −ψ″ + (k(k+N−2) + ε²)ψ = μ Û_γ^{2*−2} ψ per harmonic sector,
//! discretized by second-order differences with a lumped weight and solved by
//! Sturm-sequence bisection on the pencil.

use rayon::prelude::*;
use serde::Serialize;

use crate::cylinder::{angular, bubble_samples, Grid};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::scalar::Real;
use crate::special::harmonic_dim;

pub const DEFAULT_KMAX: usize = 6;
/// θ·h on the default spectrum grid.
pub const SPECTRUM_THETA_H: f64 = 0.004;

/// Grid for eigenvalue work: the default half width with θh = 0.004.
pub fn spectrum_grid<T: Real>(p: &Params<T>) -> Grid<T> {
    let base = Grid::default_for(p);
    Grid::with_spacing(base.half_width(), T::of(SPECTRUM_THETA_H) / p.theta).expect("spectrum grid")
}

/// Symmetric tridiagonal pencil (A, W) on the interior nodes.
#[derive(Debug, Clone)]
pub struct Pencil<T> {
    pub diag: Vec<T>,
    pub off: T,
    pub weight: Vec<T>,
}

impl<T: Real> Pencil<T> {
    /// A = −δ²/h² + c, W = diag(w).
    pub fn new(g: &Grid<T>, c: T, weight_full: &[T]) -> Self {
        let h = g.h();
        let inv = T::one() / (h * h);
        let n = g.n();
        Pencil {
            diag: vec![inv + inv + c; n - 2],
            off: -inv,
            weight: weight_full[1..n - 1].to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of pencil eigenvalues below `mu` (negative pivots of A − μW).
    pub fn count_below(&self, mu: T) -> usize {
        let b2 = self.off * self.off;
        let tiny = T::min_positive_value().sqrt();
        let mut count = 0;
        let mut d = T::one();
        for i in 0..self.len() {
            let a = self.diag[i] - mu * self.weight[i];
            d = if i == 0 { a } else { a - b2 / d };
            if d == T::zero() {
                d = -tiny;
            }
            if d < T::zero() {
                count += 1;
            }
        }
        count
    }

    /// Negative-pivot counts for four shifts at once; the independent recurrences pipeline well.
    fn count_below4(&self, mu: [T; 4]) -> [usize; 4] {
        let b2 = self.off * self.off;
        let tiny = T::min_positive_value().sqrt();
        let mut count = [0usize; 4];
        let mut d = [T::one(); 4];
        for i in 0..self.len() {
            let (a, w) = (self.diag[i], self.weight[i]);
            for l in 0..4 {
                let x = a - mu[l] * w;
                let mut v = if i == 0 { x } else { x - b2 / d[l] };
                if v == T::zero() {
                    v = -tiny;
                }
                count[l] += (v < T::zero()) as usize;
                d[l] = v;
            }
        }
        count
    }

    /// The j-th eigenvalue (0-based) by multisection to relative machine precision.
    pub fn eigenvalue(&self, j: usize) -> T {
        self.eigenvalue_from(j, T::zero())
    }

    /// As [`Pencil::eigenvalue`], given a lower bound for the j-th eigenvalue.
    pub fn eigenvalue_from(&self, j: usize, lower: T) -> T {
        let mut lo = lower.max(T::zero());
        let mut hi = if lo > T::zero() { lo * T::of(1.25) } else { T::one() };
        while self.count_below(hi) <= j {
            lo = hi;
            hi = hi + hi;
        }
        let five = T::of(5.0);
        for _ in 0..60 {
            if hi - lo <= T::of(4.0) * T::epsilon() * hi {
                break;
            }
            let step = (hi - lo) / five;
            let probes = [lo + step, lo + step + step, lo + T::of(3.0) * step, lo + T::of(4.0) * step];
            let counts = self.count_below4(probes);
            let mut new_lo = lo;
            let mut new_hi = hi;
            for l in 0..4 {
                if counts[l] > j {
                    new_hi = probes[l];
                    break;
                }
                new_lo = probes[l];
            }
            if new_lo == lo && new_hi == hi {
                break;
            }
            lo = new_lo;
            hi = new_hi;
        }
        lo + (hi - lo) / T::of(2.0)
    }

    /// The first m eigenvalues in increasing order.
    pub fn eigenvalues(&self, m: usize) -> Vec<T> {
        let mut out: Vec<T> = Vec::with_capacity(m);
        for j in 0..m {
            let lower = out.last().copied().unwrap_or(T::zero());
            out.push(self.eigenvalue_from(j, lower));
        }
        out
    }

    /// Eigenvector for eigenvalue `mu` by inverse iteration with a shifted tridiagonal solve.
    pub fn eigenvector(&self, mu: T) -> Vec<T> {
        let n = self.len();
        let shift = mu * (T::one() - T::of(1e3) * T::epsilon());
        let mut x: Vec<T> = (0..n).map(|i| T::one() + T::of_usize(i % 7) * T::of(0.01)).collect();
        for _ in 0..6 {
            let rhs: Vec<T> = x.iter().zip(&self.weight).map(|(a, w)| *a * *w).collect();
            x = self.thomas(shift, &rhs);
            let norm = x.iter().map(|v| *v * *v).sum::<T>().sqrt();
            for v in x.iter_mut() {
                *v = *v / norm;
            }
        }
        x
    }

    fn thomas(&self, shift: T, rhs: &[T]) -> Vec<T> {
        let n = self.len();
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        let tiny = T::min_positive_value().sqrt();
        let mut denom = self.diag[0] - shift * self.weight[0];
        if denom == T::zero() {
            denom = tiny;
        }
        c[0] = self.off / denom;
        d[0] = rhs[0] / denom;
        for i in 1..n {
            let mut m = self.diag[i] - shift * self.weight[i] - self.off * c[i - 1];
            if m == T::zero() {
                m = tiny;
            }
            c[i] = self.off / m;
            d[i] = (rhs[i] - self.off * d[i - 1]) / m;
        }
        let mut x = vec![T::zero(); n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }
}

/// Lumped weight Û_γ^{2*−2} at the nodes.
pub fn weight<T: Real>(p: &Params<T>, g: &Grid<T>) -> Vec<T> {
    let expo = p.two_star - T::of(2.0);
    bubble_samples(p, g, T::zero()).into_iter().map(|v| v.powf(expo)).collect()
}

fn pencil<T: Real>(p: &Params<T>, g: &Grid<T>, k: usize) -> Pencil<T> {
    let c = angular::<T>(p.dim, k) + p.eps * p.eps;
    Pencil::new(g, c, &weight(p, g))
}

/// First m eigenvalues of the sector-k pencil with Dirichlet conditions at ±L.
pub fn sector_eigs<T: Real>(p: &Params<T>, g: &Grid<T>, k: usize, m: usize) -> Result<Vec<T>> {
    if m == 0 || m > g.n() / 4 {
        return Err(Error::Resolution(format!(
            "requested {m} eigenvalues on a grid of {} points",
            g.n()
        )));
    }
    Ok(pencil(p, g, k).eigenvalues(m))
}

/// Eigenvalues from `g` and its refinement combined by Richardson extrapolation, removing the O(h²) term.
pub fn sector_eigs_extrapolated<T: Real>(p: &Params<T>, g: &Grid<T>, k: usize, m: usize) -> Result<Vec<T>> {
    let coarse = sector_eigs(p, g, k, m)?;
    let fine = sector_eigs(p, &g.refined(), k, m)?;
    let three = T::of(3.0);
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (T::of(4.0) * *f - *c) / three)
        .collect())
}

/// Eigenpair (μ_j, ψ_j) of sector k on the full grid (zero at ±L), normalized in ℓ² and
/// signed so that ψ is positive at t = 0, or increasing through t = 0 when ψ(0) = 0.
pub fn sector_eigvec<T: Real>(p: &Params<T>, g: &Grid<T>, k: usize, j: usize) -> (T, Vec<T>) {
    let pen = pencil(p, g, k);
    let mu = pen.eigenvalue(j);
    let inner = pen.eigenvector(mu);
    let mut full = vec![T::zero(); g.n()];
    full[1..g.n() - 1].copy_from_slice(&inner);
    let mid = g.mid();
    let max = full.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let sign = if full[mid].abs() > T::of(1e-6) * max {
        full[mid].signum()
    } else {
        (full[mid + 1] - full[mid - 1]).signum()
    };
    for v in full.iter_mut() {
        *v = *v * sign;
    }
    (mu, full)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorEigs<T> {
    pub k: usize,
    pub multiplicity: u64,
    pub values: Vec<T>,
    /// values / μ₁.
    pub ratios: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level<T> {
    pub mu: T,
    pub k: usize,
    pub index: usize,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult<T> {
    pub per_sector: Vec<SectorEigs<T>>,
    pub global: Vec<Level<T>>,
    pub mu1: T,
    pub mu2: T,
    pub mu3: T,
    pub gap: T,
    pub mu3_sector: usize,
    /// Every sector attaining μ₃ (to relative 1e−9) has degree 1.
    pub mu3_degree_one_only: bool,
}

/// Global ordering over sectors 0..=kmax with multiplicities and the numeric gap 1 − μ₂/μ₃.
pub fn spectral_gap_numeric<T: Real>(p: &Params<T>, g: &Grid<T>, kmax: usize) -> Result<SpectrumResult<T>> {
    let kmax = kmax.max(3);
    let per: Vec<Result<Vec<T>>> = (0..=kmax)
        .into_par_iter()
        .map(|k| sector_eigs_extrapolated(p, g, k, 3))
        .collect();
    let mut per_sector = Vec::with_capacity(kmax + 1);
    for (k, vals) in per.into_iter().enumerate() {
        per_sector.push((k, vals?));
    }
    let mu_first = per_sector[0].1[0];
    let mut global: Vec<Level<T>> = per_sector
        .iter()
        .flat_map(|(k, vals)| {
            vals.iter().enumerate().map(move |(i, &mu)| Level {
                mu,
                k: *k,
                index: i,
                multiplicity: harmonic_dim(p.dim, *k),
            })
        })
        .collect();
    global.sort_by(|a, b| a.mu.partial_cmp(&b.mu).unwrap_or(std::cmp::Ordering::Equal));
    let nth = |target: usize| -> &Level<T> {
        let mut seen = 0u64;
        for lvl in &global {
            seen += lvl.multiplicity;
            if seen >= target as u64 {
                return lvl;
            }
        }
        global.last().expect("nonempty spectrum")
    };
    let l1 = nth(1).clone();
    let l2 = nth(2).clone();
    let l3 = nth(3).clone();
    let tol = T::of(1e-9) * l3.mu;
    let degree_one_only = global
        .iter()
        .filter(|l| (l.mu - l3.mu).abs() <= tol)
        .all(|l| l.k == 1);
    Ok(SpectrumResult {
        per_sector: per_sector
            .into_iter()
            .map(|(k, values)| SectorEigs {
                k,
                multiplicity: harmonic_dim(p.dim, k),
                ratios: values.iter().map(|v| *v / mu_first).collect(),
                values,
            })
            .collect(),
        mu1: l1.mu,
        mu2: l2.mu,
        mu3: l3.mu,
        gap: T::one() - l2.mu / l3.mu,
        mu3_sector: l3.k,
        mu3_degree_one_only: degree_one_only,
        global,
    })
}

/// Relative residuals ‖A₀u − μWu‖/‖A₀u‖ of the analytic pairs (Û_γ, S_γ) and (Û_γ′, (2*−1)S_γ).
pub fn analytic_residuals<T: Real>(p: &Params<T>, g: &Grid<T>) -> (T, T) {
    let sg = crate::params::hardy_sobolev_constant(p);
    let u = bubble_samples(p, g, T::zero());
    let du: Vec<T> = g
        .nodes()
        .into_iter()
        .zip(&u)
        .map(|(t, v)| -p.half() * p.theta * *v * (p.theta * t).tanh())
        .collect();
    let pen = pencil(p, g, 0);
    let resid = |x: &[T], mu: T| -> T {
        let inner = &x[1..x.len() - 1];
        let n = inner.len();
        let mut r2 = T::zero();
        let mut a2 = T::zero();
        for i in 0..n {
            let left = if i > 0 { inner[i - 1] } else { x[0] };
            let right = if i + 1 < n { inner[i + 1] } else { x[x.len() - 1] };
            let ax = pen.diag[i] * inner[i] + pen.off * (left + right);
            let r = ax - mu * pen.weight[i] * inner[i];
            r2 = r2 + r * r;
            a2 = a2 + ax * ax;
        }
        (r2 / a2).sqrt()
    };
    (resid(&u, sg), resid(&du, (p.two_star - T::one()) * sg))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyMargin<T> {
    #[serde(rename = "N")]
    pub dim: usize,
    pub k0: usize,
    /// (N−2)²/4 + k₀(N−2+k₀).
    pub bound: T,
    /// Smallest discrete Rayleigh quotient over sectors k ≥ k₀+1.
    pub discrete_min: T,
    /// (π/2L)² + (k₀+1)(N−1+k₀) + (N−2)²/4.
    pub expected_min: T,
    pub margin: T,
}

/// Improved Hardy inequality on the cylinder for fields orthogonal to degrees ≤ k₀.
pub fn improved_hardy_check<T: Real>(dim: usize, k0: usize, g: &Grid<T>) -> HardyMargin<T> {
    let half = T::of_usize(dim) / T::of(2.0) - T::one();
    let hardy = half * half;
    let ones = vec![T::one(); g.n()];
    let discrete_min = (k0 + 1..=k0 + 4)
        .map(|k| Pencil::new(g, angular::<T>(dim, k) + hardy, &ones).eigenvalue(0))
        .fold(T::infinity(), T::min);
    let bound = hardy + T::of_usize(k0 * (dim - 2 + k0));
    let pi_l = T::PI() / (T::of(2.0) * g.half_width());
    let expected_min = pi_l * pi_l + T::of_usize((k0 + 1) * (dim - 1 + k0)) + hardy;
    HardyMargin {
        dim,
        k0,
        bound,
        discrete_min,
        expected_min,
        margin: discrete_min - bound,
    }
}

/// H¹/L² Rayleigh quotient of a field; rejects fields with content in degrees ≤ k₀.
pub fn hardy_rayleigh<T: Real>(f: &crate::cylinder::CylinderField<T>, k0: usize) -> Result<T> {
    if f
        .sectors
        .iter()
        .any(|s| s.degree <= k0 && s.values.iter().any(|v| *v != T::zero()))
    {
        return Err(Error::Shape(format!("field has components in degrees <= {k0}")));
    }
    let half = f.params.half();
    let mut num = T::zero();
    let mut den = T::zero();
    for s in &f.sectors {
        let w = f.sector_weight(s.degree);
        num = num + w * f.grid.form(&s.values, &s.values, angular::<T>(f.params.dim, s.degree) + half * half);
        let sq: Vec<T> = s.values.iter().map(|v| *v * *v).collect();
        den = den + w * f.grid.integrate(&sq);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{hardy_sobolev_constant, make_params, spectral_gap_formula};

    #[test]
    fn count_matches_dense_small() {
        let g = Grid::<f64>::new(5.0, 11).unwrap();
        let ones = vec![1.0; 11];
        let pen = Pencil::new(&g, 0.0, &ones);
        // −δ² on 9 interior points: 4/h² sin²(jπ/20)
        let h = g.h();
        for j in 0..9 {
            let exact = 4.0 / (h * h) * ((j as f64 + 1.0) * std::f64::consts::PI / 20.0).sin().powi(2);
            assert!((pen.eigenvalue(j) - exact).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn ground_state_is_bubble() {
        let p = make_params(4, 0.75f64).unwrap();
        let g = spectrum_grid(&p);
        let e = sector_eigs_extrapolated(&p, &g, 0, 2).unwrap();
        let sg = hardy_sobolev_constant(&p);
        assert!((e[0] / sg - 1.0).abs() < 1e-6, "{}", e[0] / sg);
        assert!((e[1] / e[0] - 3.0).abs() < 1e-4);
    }

    #[test]
    fn gap_n4() {
        let p = make_params(4, 0.75f64).unwrap();
        let r = spectral_gap_numeric(&p, &spectrum_grid(&p), DEFAULT_KMAX).unwrap();
        assert!((r.gap - 0.5).abs() < 1e-3, "{}", r.gap);
        assert_eq!(r.global[0].k, 0);
        let p = make_params(4, 0.3125f64).unwrap();
        let r = spectral_gap_numeric(&p, &spectrum_grid(&p), DEFAULT_KMAX).unwrap();
        assert!((r.gap - spectral_gap_formula(&p)).abs() < 1e-3);
        assert_eq!(r.mu3_sector, 1);
        assert!(r.mu3_degree_one_only);
    }

    #[test]
    fn eigvec_signs() {
        let p = make_params(4, 0.75f64).unwrap();
        let g = Grid::default_for(&p);
        let (_, psi1) = sector_eigvec(&p, &g, 0, 0);
        assert!(psi1[g.mid()] > 0.0 && psi1.iter().all(|v| *v >= -1e-12));
        let (_, psi2) = sector_eigvec(&p, &g, 0, 1);
        assert!(psi2[g.mid()].abs() < 1e-8 && psi2[g.mid() + 1] > psi2[g.mid() - 1]);
    }

    #[test]
    fn analytic_pairs() {
        for (dim, gamma) in [(4, 0.75f64), (3, 0.1), (5, 1.5), (7, 4.0)] {
            let p = make_params(dim, gamma).unwrap();
            let (r1, r2) = analytic_residuals(&p, &spectrum_grid(&p));
            assert!(r1 < 1e-5 && r2 < 1e-5, "dim {dim}: {r1:e} {r2:e}");
        }
    }

    #[test]
    fn improved_hardy_n4() {
        let g = Grid::<f64>::new(40.0, 4001).unwrap();
        let m = improved_hardy_check(4, 0, &g);
        assert!((m.margin - 3.0).abs() < 1e-2);
        assert!((m.discrete_min - m.expected_min).abs() < 1e-6);
    }
}
