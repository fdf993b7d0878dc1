//! The 𝔪-functional, distance to the extremal manifold, deficit and quotient.

use serde::Serialize;

use crate::cylinder::{bubble_amplitude, bubble_samples, lp_norm, norm_eps_sq, CylinderField, Grid};
use crate::error::{Error, Result};
use crate::params::{hardy_sobolev_constant, Params};
use crate::scalar::Real;
use crate::search::golden_max;
use crate::special::{sech_pow, sphere_area};

/// Coarse scan step in grid spacings.
pub const SCAN_STRIDE: usize = 8;
/// Golden-section bracket half width in grid spacings.
pub const BRACKET: usize = 16;
/// Golden-section termination width.
pub const ARGMAX_TOL: f64 = 1e-8;
/// Relative guard below which a field counts as lying on the manifold.
pub const MANIFOLD_GUARD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MValue<T> {
    pub value: T,
    pub argmax: T,
    /// The best coarse node sat on the edge of the scan window.
    pub bracket_escape: bool,
}

/// Sampled Û^{p}(t) for t on the grid lattice extended by one grid length on each side.
struct Lattice<T> {
    values: Vec<T>,
    offset: usize,
}

impl<T: Real> Lattice<T> {
    fn new(p: &Params<T>, g: &Grid<T>, power: T) -> Self {
        let n = g.n();
        let h = g.h();
        let amp = bubble_amplitude(p).powf(power);
        let expo = p.half() * power;
        let offset = n + g.mid();
        let values = (0..3 * n)
            .map(|k| {
                let t = (T::of_usize(k) - T::of_usize(offset)) * h;
                amp * sech_pow(p.theta * t, expo)
            })
            .collect();
        Lattice { values, offset: n }
    }

    /// h Σ_{i<n−1} f_i Û^{p}(t_i + j h).
    fn correlate(&self, f: &[T], j: i64, h: T) -> T {
        let start = (self.offset as i64 + j) as usize;
        let m = f.len() - 1;
        let window = &self.values[start..start + m];
        h * f[..m].iter().zip(window).map(|(a, b)| *a * *b).sum::<T>()
    }
}

/// Scanned overlap data shared by 𝔪 and the optimizer.
struct Scan<T> {
    nodes: Vec<T>,
    values: Vec<T>,
}

fn coarse_scan<T: Real>(radial: &[T], p: &Params<T>, g: &Grid<T>, power: T, factor: T) -> Scan<T> {
    let lat = Lattice::new(p, g, power);
    let h = g.h();
    let jmax = (g.mid() / 2 / SCAN_STRIDE) as i64;
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for j in -jmax..=jmax {
        let shift = j * SCAN_STRIDE as i64;
        nodes.push(T::of(shift as f64) * h);
        values.push(factor * lat.correlate(radial, shift, h));
    }
    Scan { nodes, values }
}

/// ∫ Û_γ[s]^{2*−1} f over ℝ×S^{N−1}; only the radial sector contributes.
pub fn overlap<T: Real>(f: &CylinderField<T>, s: T) -> T {
    overlap_radial(&f.radial_part(), &f.params, &f.grid, s)
}

pub(crate) fn overlap_radial<T: Real>(radial: &[T], p: &Params<T>, g: &Grid<T>, s: T) -> T {
    let power = p.two_star - T::one();
    let amp = bubble_amplitude(p).powf(power);
    let expo = p.half() * power;
    let h = g.h();
    let m = radial.len() - 1;
    let acc: T = (0..m)
        .map(|i| radial[i] * sech_pow(p.theta * (g.node(i) + s), expo))
        .sum();
    sphere_area::<T>(p.dim) * amp * h * acc
}

/// Local maxima of s ↦ overlap² refined by golden section, sorted by value (largest first).
/// Only maxima within `rel_tol` of the largest are returned.
pub fn overlap_maxima<T: Real>(f: &CylinderField<T>, rel_tol: T) -> Vec<(T, T)> {
    let p = &f.params;
    let g = &f.grid;
    let radial = f.radial_part();
    let power = p.two_star - T::one();
    let scan = coarse_scan(&radial, p, g, power, sphere_area::<T>(p.dim));
    let sq: Vec<T> = scan.values.iter().map(|v| *v * *v).collect();
    let top = sq.iter().copied().fold(T::zero(), T::max);
    let mut found: Vec<(T, T)> = Vec::new();
    for i in 0..sq.len() {
        let left = if i > 0 { sq[i - 1] } else { T::neg_infinity() };
        let right = if i + 1 < sq.len() { sq[i + 1] } else { T::neg_infinity() };
        if sq[i] > left && sq[i] >= right && sq[i] >= (T::one() - rel_tol) * top {
            let (s, v) = refine(&radial, p, g, scan.nodes[i]);
            found.push((s, v));
        }
    }
    found.sort_by(|a, b| {
        (b.1 * b.1)
            .partial_cmp(&(a.1 * a.1))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
    });
    found.dedup_by(|a, b| (a.0 - b.0).abs() < T::of(1e-6));
    found
}

fn refine<T: Real>(radial: &[T], p: &Params<T>, g: &Grid<T>, center: T) -> (T, T) {
    let w = T::of_usize(BRACKET) * g.h();
    let (s, _) = golden_max(
        |s| {
            let v = overlap_radial(radial, p, g, s);
            v * v
        },
        center - w,
        center + w,
        T::of(ARGMAX_TOL),
    );
    (s, overlap_radial(radial, p, g, s))
}

/// 𝔪(f) = sup_s (∫ Û_γ[s]^{2*−1} f)² and its smallest maximizer.
pub fn m_functional<T: Real>(f: &CylinderField<T>) -> MValue<T> {
    let p = &f.params;
    let g = &f.grid;
    let radial = f.radial_part();
    let power = p.two_star - T::one();
    let scan = coarse_scan(&radial, p, g, power, sphere_area::<T>(p.dim));
    let mut best = 0;
    for (i, v) in scan.values.iter().enumerate() {
        if *v * *v > scan.values[best] * scan.values[best] {
            best = i;
        }
    }
    let escape = best == 0 || best + 1 == scan.values.len();
    let (s, v) = refine(&radial, p, g, scan.nodes[best]);
    MValue {
        value: v * v,
        argmax: s,
        bracket_escape: escape,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distance<T> {
    /// ‖f‖²_ε − S_γ 𝔪(f).
    pub via_m: T,
    /// min over (c, s) of ‖f − c Û_γ[s]‖²_ε.
    pub direct: T,
    pub argmax_m: T,
    pub argmin_direct: T,
}

/// Distance to the manifold by the 𝔪 identity and by direct two-parameter minimization.
pub fn dist_squared<T: Real>(f: &CylinderField<T>) -> Distance<T> {
    let m = m_functional(f);
    let p = &f.params;
    let g = &f.grid;
    let total = norm_eps_sq(f);
    let s_gamma = hardy_sobolev_constant(p);
    let via_m = total - s_gamma * m.value;

    // ⟨f, Û[s]⟩_ε = |S| h Σ (A f)_i Û(t_i + s) with A the radial form operator
    let eps2 = p.eps * p.eps;
    let af = g.apply(&f.radial_part(), eps2);
    let sphere = sphere_area::<T>(p.dim);
    let bubble_sq = |s: T| -> T {
        let b = bubble_samples(p, g, s);
        sphere * g.form(&b, &b, eps2)
    };
    let scan = coarse_scan(&af, p, g, T::one(), sphere);
    let norm0 = bubble_sq(T::zero());
    let mut best = 0;
    for (i, v) in scan.values.iter().enumerate() {
        if *v * *v > scan.values[best] * scan.values[best] {
            best = i;
        }
    }
    let w = T::of_usize(BRACKET) * g.h();
    let explained = |s: T| -> T {
        let ip = inner_with_bubble(&af, p, g, s);
        ip * ip / bubble_sq(s)
    };
    let centre = scan.nodes[best];
    let (s_best, gain) = golden_max(explained, centre - w, centre + w, T::of(ARGMAX_TOL));
    let coarse_gain = scan.values[best] * scan.values[best] / norm0;
    let gain = gain.max(coarse_gain);
    Distance {
        via_m,
        direct: total - gain,
        argmax_m: m.argmax,
        argmin_direct: s_best,
    }
}

fn inner_with_bubble<T: Real>(af: &[T], p: &Params<T>, g: &Grid<T>, s: T) -> T {
    let m = af.len() - 1;
    let amp = bubble_amplitude(p);
    let acc: T = (0..m)
        .map(|i| af[i] * sech_pow(p.theta * (g.node(i) + s), p.half()))
        .sum();
    sphere_area::<T>(p.dim) * amp * g.h() * acc
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientReport<T> {
    pub deficit: T,
    pub m_value: T,
    pub m_argmax: T,
    pub dist2: T,
    pub dist2_direct: T,
    pub quotient: T,
    pub norm_eps_sq: T,
    pub lp_norm_sq: T,
    pub bracket_escape: bool,
    #[serde(rename = "N")]
    pub dim: usize,
    pub gamma: T,
    #[serde(rename = "L")]
    pub half_width: T,
    pub n: usize,
    /// Evaluations on axisymmetric fields bound the infimum from above.
    pub upper_bound: bool,
}

/// δ(f) = ‖f‖²_ε − S_γ‖f‖²_{2*}.
pub fn deficit<T: Real>(f: &CylinderField<T>) -> T {
    let l = lp_norm(f, f.params.two_star);
    norm_eps_sq(f) - hardy_sobolev_constant(&f.params) * l * l
}

/// The stability quotient δ(f)/dist(f, 𝓜)² with its ingredients.
pub fn be_quotient<T: Real>(f: &CylinderField<T>) -> Result<QuotientReport<T>> {
    let total = norm_eps_sq(f);
    let l = lp_norm(f, f.params.two_star);
    let s_gamma = hardy_sobolev_constant(&f.params);
    let d = deficit_parts(total, l, s_gamma);
    let m = m_functional(f);
    let dist = dist_squared(f);
    let guard = T::of(MANIFOLD_GUARD) * total;
    if !(dist.via_m > guard) {
        return Err(Error::Degenerate {
            dist2: dist.via_m.as_f64(),
            guard: guard.as_f64(),
        });
    }
    Ok(QuotientReport {
        deficit: d,
        m_value: m.value,
        m_argmax: m.argmax,
        dist2: dist.via_m,
        dist2_direct: dist.direct,
        quotient: d / dist.via_m,
        norm_eps_sq: total,
        lp_norm_sq: l * l,
        bracket_escape: m.bracket_escape,
        dim: f.params.dim,
        gamma: f.params.gamma,
        half_width: f.grid.half_width(),
        n: f.grid.n(),
        upper_bound: true,
    })
}

fn deficit_parts<T: Real>(total: T, l: T, s_gamma: T) -> T {
    total - s_gamma * l * l
}

/// Quotient only, skipping the direct distance; used inside descent loops.
pub fn quotient_fast<T: Real>(f: &CylinderField<T>) -> Result<(T, MValue<T>)> {
    let total = norm_eps_sq(f);
    let l = lp_norm(f, f.params.two_star);
    let s_gamma = hardy_sobolev_constant(&f.params);
    let m = m_functional(f);
    let dist = total - s_gamma * m.value;
    let guard = T::of(MANIFOLD_GUARD) * total;
    if !(dist > guard) {
        return Err(Error::Degenerate {
            dist2: dist.as_f64(),
            guard: guard.as_f64(),
        });
    }
    Ok((deficit_parts(total, l, s_gamma) / dist, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::hs_bubble;
    use crate::params::make_params;

    fn setup() -> (Params<f64>, Grid<f64>) {
        let p = make_params(4, 0.75).unwrap();
        (p, Grid::default_for(&p))
    }

    #[test]
    fn m_of_bubble_is_one() {
        let (p, g) = setup();
        for s0 in [0.0, 1.3, -2.1] {
            let u = hs_bubble(&p, &g, s0).unwrap();
            let m = m_functional(&u);
            assert!((m.value - 1.0).abs() < 1e-10, "{}", m.value);
            assert!((m.argmax - s0).abs() < 1e-6, "{} vs {s0}", m.argmax);
            assert!(!m.bracket_escape);
        }
    }

    #[test]
    fn distance_of_manifold_points() {
        let (p, g) = setup();
        let u = hs_bubble(&p, &g, 0.0).unwrap();
        let d = dist_squared(&u);
        assert!(d.via_m.abs() < 1e-9 && d.direct.abs() < 1e-9);
        let v = hs_bubble(&p, &g, 1.3).unwrap().scale(2.5);
        let d = dist_squared(&v);
        assert!(d.via_m.abs() < 1e-9 && d.direct.abs() < 1e-9, "{d:?}");
        assert!(matches!(be_quotient(&v), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn perturbed_bubble_quotient() {
        let (p, g) = setup();
        let u = hs_bubble(&p, &g, 0.0).unwrap();
        let bump: Vec<f64> = g.nodes().iter().map(|t| (-t * t).exp()).collect();
        let b = CylinderField::radial(p, g.clone(), bump).unwrap();
        let f = u.axpy(0.01, &b).unwrap();
        let r = be_quotient(&f).unwrap();
        assert!(r.quotient > 0.0 && r.quotient < 1.0, "{}", r.quotient);
        assert!((r.dist2 - r.dist2_direct).abs() <= 1e-8 * r.dist2.max(1.0));
        let r2 = be_quotient(&f.scale(3.7)).unwrap();
        assert!((r2.quotient - r.quotient).abs() < 1e-10);
    }

    #[test]
    fn m_ignores_higher_sectors() {
        let (p, g) = setup();
        let u = hs_bubble(&p, &g, 0.0).unwrap();
        let odd: Vec<f64> = g.nodes().iter().map(|t| t * (-t * t).exp()).collect();
        let f = CylinderField::from_sectors(p, g.clone(), vec![(0, u.radial_part()), (1, odd)]).unwrap();
        assert_eq!(m_functional(&f), m_functional(&f.project_radial()));
    }
}
