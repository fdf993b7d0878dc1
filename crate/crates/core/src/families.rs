//! Bubble interactions on the cylinder and the two-peak family v_s = Û_γ + Û_γ[s].

use serde::Serialize;

use crate::cylinder::{bubble_amplitude, bubble_samples, hs_bubble, inner_eps, lp_norm, norm_eps_sq, required_half_width, Grid};
use crate::error::{Error, Result};
use crate::fit::{line_fit, LineFit};
use crate::manifold::{be_quotient, m_functional};
use crate::params::{hardy_sobolev_constant, two_peak_level, Params};
use crate::scalar::Real;
use crate::special::{sech_pow, sphere_area};

/// Overlaps below this are treated as underflow and excluded from fits.
pub const Q_FLOOR: f64 = 1e-14;

/// The default ladder {8, 10, 12, 14, 16}/θ.
pub fn default_ladder<T: Real>(p: &Params<T>) -> Vec<T> {
    [8.0, 10.0, 12.0, 14.0, 16.0].iter().map(|c| T::of(*c) / p.theta).collect()
}

/// Grid with the default spacing, wide enough to hold Û_γ[s] for |s| ≤ s_max and to keep
/// both peaks of v_s inside the 𝔪 scan window.
pub fn ladder_grid<T: Real>(p: &Params<T>, s_max: T) -> Grid<T> {
    let base = Grid::default_for(p);
    let h = base.h();
    let s = s_max.abs();
    let l = base
        .half_width()
        .max(T::of(1.05) * required_half_width(p, s))
        .max(T::of(2.0) * s + T::of(48.0) * h);
    Grid::with_spacing(l, h).expect("ladder grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interaction<T> {
    pub s: T,
    /// ∫ Û_γ Û_γ[s]^{2*−1} by quadrature.
    pub q: T,
    /// ⟨Û_γ, Û_γ[s]⟩_ε / S_γ.
    pub q_bilinear: T,
    pub underflow: bool,
}

/// Q(s) by quadrature and through the bilinear form.
pub fn interaction_q<T: Real>(p: &Params<T>, g: &Grid<T>, s: T) -> Result<Interaction<T>> {
    let q = interaction_general(p, g, T::one(), p.two_star - T::one(), s)?;
    let u0 = hs_bubble(p, g, T::zero())?;
    let us = hs_bubble(p, g, s)?;
    let q_bilinear = inner_eps(&u0, &us)? / hardy_sobolev_constant(p);
    Ok(Interaction {
        s,
        q,
        q_bilinear,
        underflow: q.abs() < T::of(Q_FLOOR),
    })
}

/// ∫ Û_γ^{η₁} Û_γ[s]^{η₂} over ℝ×S^{N−1} with η₁ + η₂ = 2*.
pub fn interaction_general<T: Real>(p: &Params<T>, g: &Grid<T>, eta1: T, eta2: T, s: T) -> Result<T> {
    if (eta1 + eta2 - p.two_star).abs() > T::of(1e-12) * p.two_star || eta1 <= T::zero() || eta2 <= T::zero() {
        return Err(Error::ExponentSum {
            expected: p.two_star.as_f64(),
            got: (eta1 + eta2).as_f64(),
        });
    }
    if g.half_width() < required_half_width(p, s) {
        return Err(Error::TailTruncation {
            have: g.half_width().as_f64(),
            required: required_half_width(p, s).as_f64(),
        });
    }
    let amp = bubble_amplitude(p).powf(p.two_star);
    let (e1, e2) = (p.half() * eta1, p.half() * eta2);
    let vals: Vec<T> = g
        .nodes()
        .into_iter()
        .map(|t| sech_pow(p.theta * t, e1) * sech_pow(p.theta * (t + s), e2))
        .collect();
    Ok(sphere_area::<T>(p.dim) * amp * g.integrate(&vals))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub eta1: f64,
    pub eta2: f64,
    pub s: Vec<f64>,
    pub values: Vec<f64>,
    pub balanced: bool,
    /// Unbalanced: −slope of ln I against s. Balanced: −slope of ln(I/s) against s.
    pub fitted_rate: f64,
    /// ε·min{η₁, η₂}, or εN/(N−2) when balanced.
    pub expected_rate: f64,
    pub rel_err: f64,
    pub fit: LineFit,
}

/// Exponential rate of the interaction along a ladder of shifts.
pub fn interaction_rate_fit<T: Real>(p: &Params<T>, g: &Grid<T>, eta1: T, eta2: T, s_list: &[T]) -> Result<RateFit> {
    let balanced = (eta1 - eta2).abs() <= T::of(1e-12) * p.two_star;
    let mut s = Vec::new();
    let mut values = Vec::new();
    for &si in s_list {
        let v = interaction_general(p, g, eta1, eta2, si)?;
        if v.abs() >= T::of(Q_FLOOR) {
            s.push(si.as_f64());
            values.push(v.as_f64());
        }
    }
    if s.len() < 2 {
        return Err(Error::Underflow {
            s: s_list.last().map_or(f64::NAN, |x| x.as_f64()),
            q: 0.0,
        });
    }
    let y: Vec<f64> = if balanced {
        values.iter().zip(&s).map(|(v, si)| (v / si).ln()).collect()
    } else {
        values.iter().map(|v| v.ln()).collect()
    };
    let fit = line_fit(&s, &y);
    let eps = p.eps.as_f64();
    let n = p.dim as f64;
    let expected = if balanced {
        eps * n / (n - 2.0)
    } else {
        eps * eta1.min(eta2).as_f64()
    };
    let fitted = -fit.slope;
    Ok(RateFit {
        eta1: eta1.as_f64(),
        eta2: eta2.as_f64(),
        s,
        values,
        balanced,
        fitted_rate: fitted,
        expected_rate: expected,
        rel_err: (fitted - expected).abs() / expected,
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPeakReport<T> {
    pub s: T,
    #[serde(rename = "Q")]
    pub q: T,
    /// ‖v_s‖²_ε − 2S_γ(1 + Q).
    pub resid_a: T,
    /// (‖v_s‖²_{2*} − 2^{2/2*} − 2^{2/2*+1}Q)/Q.
    pub resid_b_over_q: T,
    /// (dist² − S_γ)/Q.
    pub resid_c_over_q: T,
    /// (‖v_s‖²_{2*} − 2^{2/2*})/Q, to compare with 2^{2/2*+1}.
    pub coeff_l2star_sq: T,
    /// (‖v_s‖^{2*}_{2*} − 2)/Q, to compare with 2·2*.
    pub coeff_l2star_pow: T,
    /// (𝔪(v_s)^{1/2} − 1 − Q)/Q.
    pub resid_m_over_q: T,
    pub quotient: T,
    /// (2 − 2^{2/2*} − quotient)/Q.
    pub level_gap_over_q: T,
}

/// Expansion residuals of the two-peak family along `s_list`.
pub fn two_peak_report<T: Real>(p: &Params<T>, g: &Grid<T>, s_list: &[T]) -> Result<Vec<TwoPeakReport<T>>> {
    let sg = hardy_sobolev_constant(p);
    let two = T::of(2.0);
    let base = two.powf(two / p.two_star);
    let level = two_peak_level::<T>(p.dim);
    let u0 = hs_bubble(p, g, T::zero())?;
    let mut out = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let q = interaction_q(p, g, s)?;
        if q.underflow {
            return Err(Error::Underflow { s: s.as_f64(), q: q.q.as_f64() });
        }
        let q = q.q;
        let v = u0.add(&hs_bubble(p, g, s)?)?;
        let norm = norm_eps_sq(&v);
        let l = lp_norm(&v, p.two_star);
        let report = be_quotient(&v)?;
        let m = m_functional(&v);
        out.push(TwoPeakReport {
            s,
            q,
            resid_a: norm - two * sg * (T::one() + q),
            resid_b_over_q: (l * l - base - two * base * q) / q,
            resid_c_over_q: (report.dist2 - sg) / q,
            coeff_l2star_sq: (l * l - base) / q,
            coeff_l2star_pow: (l.powf(p.two_star) - two) / q,
            resid_m_over_q: (m.value.sqrt() - T::one() - q) / q,
            quotient: report.quotient,
            level_gap_over_q: (level - report.quotient) / q,
        });
    }
    Ok(out)
}

/// Û_γ(t + s) sampled on the grid, without the L^{2*} renormalization of [`hs_bubble`].
pub fn analytic_bubble<T: Real>(p: &Params<T>, g: &Grid<T>, s: T) -> Vec<T> {
    bubble_samples(p, g, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    fn setup() -> (Params<f64>, Grid<f64>) {
        let p = make_params(4, 0.75f64).unwrap();
        let g = ladder_grid(&p, 16.0 / p.theta);
        (p, g)
    }

    #[test]
    fn q_basics() {
        let (p, g) = setup();
        let q0 = interaction_q(&p, &g, 0.0).unwrap();
        assert!((q0.q - 1.0).abs() < 1e-10);
        let h = g.h();
        let a = interaction_q(&p, &g, 100.0 * h).unwrap();
        let b = interaction_q(&p, &g, -100.0 * h).unwrap();
        assert!((a.q - b.q).abs() < 1e-10);
        assert!((a.q - a.q_bilinear).abs() < 1e-8);
    }

    #[test]
    fn exponent_sum_checked() {
        let (p, g) = setup();
        assert!(matches!(
            interaction_general(&p, &g, 1.0, 2.0, 1.0),
            Err(Error::ExponentSum { .. })
        ));
        assert!((interaction_general(&p, &g, 1.5, 2.5, 0.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn q_rate() {
        let (p, g) = setup();
        let f = interaction_rate_fit(&p, &g, 1.0, 3.0, &default_ladder(&p)).unwrap();
        assert!(f.rel_err < 0.02, "{f:?}");
    }

    #[test]
    fn two_peak_expansion() {
        let (p, g) = setup();
        let r = two_peak_report(&p, &g, &default_ladder(&p)).unwrap();
        let sg = hardy_sobolev_constant(&p);
        for row in &r {
            assert!(row.resid_a.abs() <= 1e-8 * sg, "{row:?}");
        }
        let top = r.last().unwrap();
        assert!(top.quotient < two_peak_level::<f64>(4));
        assert!(top.level_gap_over_q < 5.0);
        assert!(top.resid_c_over_q.abs() < 0.1);
    }
}
