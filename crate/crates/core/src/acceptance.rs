//! Acceptance checks with pinned tolerances, shared by the test target and `hslab verify-all`.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cylinder::{bubble_samples, hs_bubble, ode_residual, rayleigh_quotient, CylinderField, Grid};
use crate::euclidean::{default_lambda_ladder, hidden_level_row, interaction_rn_rate_fit};
use crate::families::{default_ladder, interaction_rate_fit, ladder_grid, two_peak_report};
use crate::manifold::{be_quotient, dist_squared};
use crate::optimize::{estimate_radial_constant, gamma0_from_estimate, MinimizeOptions};
use crate::params::{
    critical_levels, f2, gamma_c_star, gamma_max, gamma_thresholds, make_params, positivity_scan, sobolev_constant,
    sobolev_limit, spectral_gap_formula, two_peak_level, Params,
};
use crate::special::{gamma_half, sech_pow};
use crate::spectrum::{improved_hardy_check, spectral_gap_numeric, spectrum_grid, DEFAULT_KMAX};

/// Seed for the randomized distance checks.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone, serde::Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub budget_seconds: Option<f64>,
    pub details: Vec<String>,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "AC{} {} {} ({:.2} s) {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.details.join("; ")
        )
    }
}

struct Check {
    ok: bool,
    details: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check { ok: true, details: Vec::new() }
    }

    fn require(&mut self, cond: bool, what: String) {
        if !cond {
            self.ok = false;
            self.details.push(format!("FAILED {what}"));
        } else {
            self.details.push(what);
        }
    }

    fn note(&mut self, what: String) {
        self.details.push(what);
    }
}

fn timed(id: u8, title: &'static str, budget: Option<f64>, body: impl FnOnce(&mut Check)) -> Outcome {
    let start = Instant::now();
    let mut c = Check::new();
    body(&mut c);
    let seconds = start.elapsed().as_secs_f64();
    if let Some(b) = budget {
        c.require(seconds < b, format!("runtime {seconds:.2} s < {b} s"));
    }
    Outcome {
        id,
        title,
        passed: c.ok,
        seconds,
        budget_seconds: budget,
        details: c.details,
    }
}

pub const ALL: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

pub fn run(id: u8, seed: u64) -> Option<Outcome> {
    Some(match id {
        1 => constants(),
        2 => spectral_gap(),
        3 => level_ordering(),
        4 => two_peak(),
        5 => interaction_rates(),
        6 => hidden_level(),
        7 => radial_minimization(),
        8 => distance_consistency(seed),
        9 => hardy_and_ode(),
        _ => return None,
    })
}

pub fn run_all(seed: u64) -> Vec<Outcome> {
    ALL.iter().filter_map(|&id| run(id, seed)).collect()
}

/// πN(N−2)(Γ(N/2)/Γ(N))^{2/N}.
fn sobolev_closed_form(dim: usize) -> f64 {
    let n = dim as f64;
    let ratio = gamma_half::<f64>(dim) / gamma_half::<f64>(2 * dim);
    std::f64::consts::PI * n * (n - 2.0) * ratio.powf(2.0 / n)
}

fn profile_quotient(p: &Params<f64>, theta: f64) -> f64 {
    let g = Grid::default_for(p);
    let values = g.nodes().into_iter().map(|t| sech_pow(theta * t, p.half())).collect();
    let f = CylinderField::radial(*p, g, values).expect("decaying profile");
    rayleigh_quotient(&f)
}

pub fn constants() -> Outcome {
    timed(1, "constants", Some(1.0), |c| {
        let mut worst = 0.0f64;
        for n in 3..=10 {
            let s = sobolev_constant::<f64>(n);
            worst = worst.max((s / sobolev_closed_form(n) - 1.0).abs());
        }
        c.require(worst <= 1e-8, format!("S(N) vs closed form, N=3..10: max rel {worst:.2e} <= 1e-8"));
        let mut worst = 0.0f64;
        let mut worst_abs = 0.0f64;
        for n in [3usize, 4, 5, 7] {
            let s1 = profile_quotient(&sobolev_limit(n), 1.0);
            worst_abs = worst_abs.max((s1 / sobolev_closed_form(n) - 1.0).abs());
            for frac in [0.25, 0.6, 0.9] {
                let p = make_params(n, frac * gamma_max::<f64>(n)).unwrap();
                let sg = profile_quotient(&p, p.theta);
                let expect = p.theta.powf(1.0 + 2.0 / p.two_star);
                worst = worst.max((sg / s1 / expect - 1.0).abs());
                worst_abs = worst_abs.max((sg / (expect * sobolev_closed_form(n)) - 1.0).abs());
            }
        }
        c.require(worst <= 1e-6, format!("S_γ/S = θ^(1+2/2*) from Rayleigh quotients: max rel {worst:.2e} <= 1e-6"));
        c.require(worst_abs <= 1e-6, format!("Rayleigh quotients of h₁, h_θ vs closed forms: max rel {worst_abs:.2e} <= 1e-6"));
    })
}

/// Ten interior points of (0, γ_max).
pub fn gamma_grid(dim: usize, points: usize) -> Vec<f64> {
    let gmax = gamma_max::<f64>(dim);
    (1..=points).map(|i| gmax * i as f64 / (points + 1) as f64).collect()
}

pub fn spectral_gap() -> Outcome {
    timed(2, "spectral gap", Some(30.0), |c| {
        for n in [3usize, 4, 5, 7] {
            let mut worst = 0.0f64;
            for gamma in gamma_grid(n, 10) {
                let p = make_params(n, gamma).unwrap();
                match spectral_gap_numeric(&p, &spectrum_grid(&p), DEFAULT_KMAX) {
                    Ok(r) => worst = worst.max((r.gap - spectral_gap_formula(&p)).abs()),
                    Err(e) => {
                        c.require(false, format!("N={n} γ={gamma}: {e}"));
                        return;
                    }
                }
            }
            c.require(worst <= 1e-3, format!("N={n}: max |gap − Λ| {worst:.2e} <= 1e-3"));
            let gcs = gamma_c_star::<f64>(n);
            let side = |g: f64| {
                let p = make_params(n, g).unwrap();
                spectral_gap_numeric(&p, &spectrum_grid(&p), DEFAULT_KMAX).map(|r| r.gap)
            };
            if let (Ok(lo), Ok(hi)) = (side(gcs * (1.0 - 1e-3)), side(gcs * (1.0 + 1e-3))) {
                let limit = 4.0 / (n as f64 + 4.0);
                let jump = (lo - hi).abs();
                c.require(
                    jump <= 1e-3 && (lo - limit).abs() <= 1e-3 && (hi - limit).abs() <= 1e-3,
                    format!("N={n}: gap across γ_c* {lo:.6} | {hi:.6}, limit {limit:.6}"),
                );
            } else {
                c.require(false, format!("N={n}: gap solve failed near γ_c*"));
            }
        }
    })
}

pub fn level_ordering() -> Outcome {
    timed(3, "level ordering", None, |c| {
        for n in 4..=10 {
            let bad = gamma_grid(n, 100)
                .into_iter()
                .filter(|g| !critical_levels(&make_params(n, *g).unwrap()).local_below_hidden)
                .count();
            c.require(bad == 0, format!("N={n}: Λ < 1 − S_γ/S on 100 points ({bad} violations)"));
        }
        let g0 = gamma_thresholds::<f64>(3, None).unwrap().gamma0;
        let (mut above_bad, mut below_fail) = (0, 0);
        for g in gamma_grid(3, 100) {
            let below = critical_levels(&make_params(3, g).unwrap()).local_below_hidden;
            if g > g0 && !below {
                above_bad += 1;
            }
            if g < g0 && !below {
                below_fail += 1;
            }
        }
        c.require(
            above_bad == 0 && below_fail > 0,
            format!("N=3, γ₀={g0:.7}: ordering holds above γ₀, fails at {below_fail} grid points below"),
        );
        let mut worst = 0.0f64;
        for n in 3..=10 {
            worst = worst.max(f2(1.0f64, n).abs());
        }
        c.require(worst <= 1e-12, format!("|f₂(1)| max {worst:.1e} <= 1e-12"));
        for n in 3..=10 {
            let r = positivity_scan::<f64>(n, 10_000);
            let f2min = r.f2_scan.as_ref().map_or(String::from("n/a"), |s| format!("{:.3e}", s.min_value));
            c.require(r.passed, format!("N={n}: min f₁ {:.3e}, min f₂ {f2min}", r.f1_scan.min_value));
        }
    })
}

pub fn two_peak() -> Outcome {
    timed(4, "two-peak expansion", Some(60.0), |c| {
        let p = make_params(4, 0.75f64).unwrap();
        let ladder = default_ladder(&p);
        let g = ladder_grid(&p, *ladder.last().unwrap());
        let rows = match two_peak_report(&p, &g, &ladder) {
            Ok(r) => r,
            Err(e) => {
                c.require(false, format!("two-peak report: {e}"));
                return;
            }
        };
        let sg = crate::params::hardy_sobolev_constant(&p);
        let worst_a = rows.iter().map(|r| r.resid_a.abs()).fold(0.0, f64::max);
        c.require(worst_a <= 1e-8 * sg, format!("max |resid_a| {worst_a:.2e} <= 1e-8·S_γ"));
        let top = rows.last().unwrap();
        let coeff = 2f64.powf(2.0 / p.two_star + 1.0);
        let rel = (top.coeff_l2star_sq / coeff - 1.0).abs();
        c.require(rel <= 0.05, format!("Q-coefficient {:.6} vs {coeff:.6} (rel {rel:.2e})", top.coeff_l2star_sq));
        let decreasing = rows.windows(2).all(|w| w[1].resid_c_over_q.abs() < w[0].resid_c_over_q.abs());
        c.require(
            decreasing && top.resid_c_over_q.abs() < 0.1,
            format!("|dist² − S_γ|/Q decreasing, top {:.2e} < 0.1", top.resid_c_over_q.abs()),
        );
        let level = two_peak_level::<f64>(4);
        let below = rows.iter().all(|r| r.quotient < level && level - r.quotient <= 5.0 * r.q);
        c.require(
            below,
            format!("quotient below {level:.6} within 5Q; top {:.9} (gap/Q {:.3})", top.quotient, top.level_gap_over_q),
        );
    })
}

pub fn interaction_rates() -> Outcome {
    timed(5, "interaction rates", Some(60.0), |c| {
        let p = make_params(4, 0.75f64).unwrap();
        let ladder = default_ladder(&p);
        let g = ladder_grid(&p, *ladder.last().unwrap());
        let ts = p.two_star;
        for (e1, e2) in [(1.0, ts - 1.0), (1.5, ts - 1.5)] {
            match interaction_rate_fit(&p, &g, e1, e2, &ladder) {
                Ok(f) => c.require(
                    f.rel_err <= 0.02,
                    format!("cylinder ({e1},{e2}): rate {:.6} vs {:.6}", f.fitted_rate, f.expected_rate),
                ),
                Err(e) => c.require(false, format!("cylinder ({e1},{e2}): {e}")),
            }
        }
        match interaction_rate_fit(&p, &g, ts / 2.0, ts / 2.0, &ladder) {
            Ok(f) => c.require(
                f.fit.r2 > 0.999,
                format!(
                    "cylinder balanced: ln(I/s) affine R² {:.6} > 0.999, rate {:.6} vs {:.6}",
                    f.fit.r2, f.fitted_rate, f.expected_rate
                ),
            ),
            Err(e) => c.require(false, format!("cylinder balanced: {e}")),
        }
        let lambdas = default_lambda_ladder::<f64>();
        for (e1, e2) in [(1.0, ts - 1.0), (1.5, ts - 1.5), (ts / 2.0, ts / 2.0)] {
            match interaction_rn_rate_fit(&p, e1, e2, &lambdas) {
                Ok(f) => c.require(
                    f.rel_err <= 0.02,
                    format!(
                        "R^N ({e1},{e2}) λ∈[1e-3,1e-1]: exponent {:.4} vs {:.4} (rel {:.3})",
                        f.fitted_exponent, f.expected_exponent, f.rel_err
                    ),
                ),
                Err(e) => c.require(false, format!("R^N ({e1},{e2}): {e}")),
            }
        }
    })
}

pub fn hidden_level() -> Outcome {
    timed(6, "hidden level", Some(120.0), |c| {
        let p = make_params(4, 0.75f64).unwrap();
        let mut rows = Vec::new();
        for z in [10.0, 20.0, 50.0] {
            match hidden_level_row(&p, z) {
                Ok(r) => rows.push(r),
                Err(e) => {
                    c.require(false, format!("z={z}: {e}"));
                    return;
                }
            }
        }
        let target = rows[0].target;
        let last = rows.last().unwrap();
        let rel = (last.quotient / target - 1.0).abs();
        c.require(rel <= 0.05, format!("z=50: {:.6} vs {target:.6} (rel {rel:.2e})", last.quotient));
        let gaps: Vec<f64> = rows.iter().map(|r| (r.quotient - target).abs()).collect();
        c.require(
            gaps.windows(2).all(|w| w[1] < w[0]),
            format!("monotone approach z=10,20,50: {}", fmt_list(&rows.iter().map(|r| r.quotient).collect::<Vec<_>>())),
        );
        c.require(rows.iter().all(|r| !r.bracket_escape), "λ-sup interior".into());
    })
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ")
}

pub fn radial_minimization() -> Outcome {
    timed(7, "radial minimization", Some(300.0), |c| {
        let n = 4;
        let opts = MinimizeOptions::default();
        let run = |gamma: f64| {
            let p = make_params(n, gamma).unwrap();
            estimate_radial_constant(&p, &Grid::default_for(&p), &opts).map(|r| (p, r))
        };
        let first = match run(0.75) {
            Ok(r) => r,
            Err(e) => {
                c.require(false, format!("γ=0.75: {e}"));
                return;
            }
        };
        let th = match gamma0_from_estimate(n, first.1.c_rad_estimate) {
            Ok(t) => t,
            Err(e) => {
                c.require(false, format!("γ₀: {e}"));
                return;
            }
        };
        let resid = th.residual.unwrap_or(f64::NAN).abs();
        c.require(
            resid <= 1e-10 && !th.clamped,
            format!("γ₀ = {:.10}, |Λ(γ₀) − c| {resid:.1e} <= 1e-10", th.gamma0),
        );
        let gcs = gamma_c_star::<f64>(n);
        let mut results = vec![first];
        for gamma in [0.5 * (th.gamma0 + gcs), 0.9] {
            match run(gamma) {
                Ok(r) => results.push(r),
                Err(e) => {
                    c.require(false, format!("γ={gamma}: {e}"));
                    return;
                }
            }
        }
        let level = two_peak_level::<f64>(n);
        for (p, r) in &results {
            let bound = spectral_gap_formula(p).min(level);
            c.require(
                r.converged && r.c_rad_estimate < bound,
                format!(
                    "γ={:.6} ({} γ_c*): {:.8} < {bound:.6}, {} iterations",
                    p.gamma,
                    if p.gamma > gcs { "above" } else { "below" },
                    r.c_rad_estimate,
                    r.iterations
                ),
            );
        }
        let est: Vec<f64> = results.iter().map(|(_, r)| r.c_rad_estimate).collect();
        let spread = est.iter().copied().fold(f64::MIN, f64::max) - est.iter().copied().fold(f64::MAX, f64::min);
        c.require(spread <= 1e-3, format!("pairwise spread {spread:.2e} <= 1e-3"));
    })
}

/// Û_γ[s₀] scaled, plus a random decaying perturbation in sectors 0 to 2.
fn perturbed_bubble(p: &Params<f64>, g: &Grid<f64>, rng: &mut ChaCha8Rng) -> CylinderField<f64> {
    let s0 = rng.gen_range(-2.0..2.0);
    let scale = rng.gen_range(0.5..2.0);
    let base: Vec<f64> = bubble_samples(p, g, s0).into_iter().map(|v| scale * v).collect();
    let mut sectors = vec![(0usize, base)];
    for k in 0..3 {
        let amp = rng.gen_range(0.0..0.3) * scale;
        let centre = rng.gen_range(-3.0..3.0);
        let width = rng.gen_range(0.5..2.0);
        let freq = rng.gen_range(0.0..2.0);
        let values = g
            .nodes()
            .into_iter()
            .map(|t| {
                let x = (t - centre) / width;
                amp * sech_pow(p.theta * x, 2.0 * p.half() + 1.0) * (freq * x).cos()
            })
            .collect();
        sectors.push((k, values));
    }
    CylinderField::from_sectors(*p, g.clone(), sectors).expect("decaying perturbation")
}

pub fn distance_consistency(seed: u64) -> Outcome {
    timed(8, "distance consistency", None, |c| {
        let p = make_params(4, 0.75f64).unwrap();
        let g = Grid::default_for(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let mut worst_scale = 0.0f64;
        let mut skipped = 0;
        for _ in 0..50 {
            let f = perturbed_bubble(&p, &g, &mut rng);
            let d = dist_squared(&f);
            worst = worst.max((d.via_m - d.direct).abs() / d.via_m.max(1.0));
            let k: f64 = rng.gen_range(0.1..10.0);
            match (be_quotient(&f), be_quotient(&f.scale(k))) {
                (Ok(a), Ok(b)) => worst_scale = worst_scale.max((a.quotient - b.quotient).abs()),
                _ => skipped += 1,
            }
        }
        c.require(worst <= 1e-8, format!("50 fields (seed {seed}): max |via 𝔪 − direct|/max(1,dist²) {worst:.2e} <= 1e-8"));
        c.require(
            worst_scale <= 1e-10 && skipped == 0,
            format!("quotient scale invariance {worst_scale:.2e} <= 1e-10"),
        );
        let b = hs_bubble(&p, &g, 0.0).unwrap();
        c.note(format!("dist² of Û_γ itself {:.2e}", dist_squared(&b).via_m));
    })
}

pub fn hardy_and_ode() -> Outcome {
    timed(9, "improved Hardy and profile ODE", None, |c| {
        let mut worst = f64::INFINITY;
        for n in 3..=7 {
            let g = Grid::default_for(&make_params(n, 0.5 * gamma_max::<f64>(n)).unwrap());
            for k0 in 0..=3 {
                worst = worst.min(improved_hardy_check(n, k0, &g).margin);
            }
        }
        c.require(worst >= 0.0, format!("min improved Hardy margin, N=3..7, k₀=0..3: {worst:.4}"));
        let g = Grid::<f64>::new(40.0, 4001).unwrap();
        let mut worst = 0.0f64;
        for (n, alpha) in [(3usize, 0.5), (3, 1.0), (4, 1.0), (4, 0.5), (5, 0.8), (7, 1.0)] {
            worst = worst.max(ode_residual(alpha, n, &g));
        }
        c.require(worst <= 1e-12, format!("profile ODE residual {worst:.1e} <= 1e-12"));
    })
}
