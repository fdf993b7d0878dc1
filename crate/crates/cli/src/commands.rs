//! One function per subcommand.

use std::fs::File;
use std::io::BufReader;

use serde_json::{json, Value};

use hslab_core::acceptance::{self, gamma_grid, ALL};
use hslab_core::cylinder::{read_field_csv, write_field_csv, Grid, DEFAULT_POINTS};
use hslab_core::euclidean::{approach_rate, default_lambda_ladder, hidden_level_row, interaction_rn_rate_fit};
use hslab_core::families::{default_ladder, interaction_rate_fit, ladder_grid, two_peak_report};
use hslab_core::manifold::be_quotient;
use hslab_core::optimize::{eigen_init, estimate_radial_constant, gamma0_from_estimate, minimize_radial_quotient, MinimizeOptions};
use hslab_core::params::{
    constants_table, critical_levels, gamma_c_star, gamma_thresholds, make_params, spectral_gap_formula, two_peak_level,
};
use hslab_core::report::{to_csv, svg_plot, Cell, Series};
use hslab_core::spectrum::{spectral_gap_numeric, spectrum_grid};
use hslab_core::{Params64, Result as CoreResult};

use crate::config::{
    Command, Gamma0Args, GridArgs, HiddenArgs, InteractionArgs, Problem, QuotientArgs, RadialArgs, RunConfig, SpectrumArgs,
    TwoPeakArgs, VerifyArgs,
};
use crate::output::{emit, flat_csv, object, Artifacts, Report};
use crate::Failure;

type Out = Result<(), Failure>;

pub fn run(cfg: &RunConfig) -> Out {
    match &cfg.command {
        Command::Constants(a) => constants(cfg, a),
        Command::Spectrum(a) => spectrum(cfg, a),
        Command::Quotient(a) => quotient(cfg, a),
        Command::TwoPeak(a) => two_peak(cfg, a),
        Command::HiddenLevel(a) => hidden_level(cfg, a),
        Command::Interactions(a) => interactions(cfg, a),
        Command::RadialMin(a) => radial_min(cfg, a),
        Command::Gamma0(a) => gamma0(cfg, a),
        Command::VerifyAll(a) => verify_all(cfg, a),
    }
}

fn params(pr: &Problem) -> CoreResult<Params64> {
    make_params(pr.dim, pr.gamma)
}

/// Grid from the overrides, falling back to `default` for whatever is missing.
fn grid_from(args: &GridArgs, default: Grid<f64>) -> CoreResult<Grid<f64>> {
    match (args.half_width, args.points) {
        (None, None) => Ok(default),
        (l, n) => Grid::new(l.unwrap_or(default.half_width()), n.unwrap_or(DEFAULT_POINTS)),
    }
}

fn value<S: serde::Serialize>(s: &S) -> Value {
    serde_json::to_value(s).unwrap_or(Value::Null)
}

fn constants(cfg: &RunConfig, a: &Problem) -> Out {
    let p = params(a)?;
    let table = constants_table(&p);
    let th = if p.dim == 3 {
        value(&gamma_thresholds::<f64>(3, None)?)
    } else {
        json!({ "gamma_c_star": gamma_c_star::<f64>(p.dim), "gamma0": Value::Null })
    };
    let result = object(vec![("constants", value(&table)), ("thresholds", th)]);
    let report = Report {
        config: cfg,
        grid: None,
        tolerance: None,
        target: Some(value(&critical_levels(&p))),
        result: &result,
    };
    let art = Artifacts {
        csv: Some(flat_csv(&result)),
        ..Default::default()
    };
    emit(cfg, "constants", &report, art)?;
    Ok(())
}

fn spectrum(cfg: &RunConfig, a: &SpectrumArgs) -> Out {
    let gammas = match a.gamma {
        Some(g) => vec![g],
        None => gamma_grid(a.dim, a.gamma_grid.max(1)),
    };
    let ps = gammas.iter().map(|g| make_params(a.dim, *g)).collect::<CoreResult<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    let mut worst = 0.0f64;
    let mut grid_info = Vec::new();
    for p in &ps {
        let g = grid_from(&a.grid, spectrum_grid(p))?;
        let r = spectral_gap_numeric(p, &g, a.kmax)?;
        let formula = spectral_gap_formula(p);
        let err = (r.gap - formula).abs();
        worst = worst.max(err);
        rows.push(vec![
            Cell::from(p.gamma),
            r.gap.into(),
            formula.into(),
            err.into(),
            r.mu1.into(),
            r.mu2.into(),
            r.mu3.into(),
            r.mu3_sector.into(),
            r.mu3_degree_one_only.into(),
        ]);
        grid_info.push(value(&g));
        results.push(json!({ "gamma": p.gamma, "gap_formula": formula, "abs_err": err, "spectrum": value(&r) }));
    }
    let header = [
        "gamma", "gap_numeric", "gap_formula", "abs_err", "mu1", "mu2", "mu3", "mu3_sector", "mu3_degree_one_only",
    ];
    let csv = to_csv(&header, &rows);
    let series = vec![
        Series {
            name: "numeric".into(),
            points: rows.iter().map(|r| (cell(&r[0]), cell(&r[1]))).collect(),
        },
        Series {
            name: "closed form".into(),
            points: rows.iter().map(|r| (cell(&r[0]), cell(&r[2]))).collect(),
        },
    ];
    let limit = 4.0 / (a.dim as f64 + 4.0);
    let svg = svg_plot(
        &format!("spectral gap, N={}", a.dim),
        "gamma",
        "1 - mu2/mu3",
        &series,
        &[("4/(N+4)".into(), limit)],
    );
    let result = json!({ "max_abs_err": worst, "passed": worst <= a.tol, "rows": results });
    let report = Report {
        config: cfg,
        grid: Some(Value::Array(grid_info)),
        tolerance: Some(a.tol),
        target: Some(json!({ "gamma_c_star": gamma_c_star::<f64>(a.dim), "plateau": limit })),
        result: &result,
    };
    emit(cfg, "spectrum", &report, Artifacts { csv: Some(csv), svg: Some(svg), ..Default::default() })?;
    if worst > a.tol {
        return Err(Failure::Bound(format!("max |gap − Λ| = {worst:e} exceeds {}", a.tol)));
    }
    Ok(())
}

fn cell(c: &Cell) -> f64 {
    match c {
        Cell::F(x) => *x,
        Cell::I(i) => *i as f64,
        _ => f64::NAN,
    }
}

fn quotient(cfg: &RunConfig, a: &QuotientArgs) -> Out {
    let file = File::open(&a.field)?;
    let f = read_field_csv::<f64, _>(BufReader::new(file))?;
    let q = be_quotient(&f)?;
    let result = value(&q);
    let levels = critical_levels(&f.params);
    let report = Report {
        config: cfg,
        grid: Some(value(&f.grid)),
        tolerance: None,
        target: Some(value(&levels)),
        result: &result,
    };
    emit(cfg, "quotient", &report, Artifacts { csv: Some(flat_csv(&result)), ..Default::default() })?;
    Ok(())
}

fn two_peak(cfg: &RunConfig, a: &TwoPeakArgs) -> Out {
    let p = params(&a.problem)?;
    let ladder = a.s_ladder.clone().unwrap_or_else(|| default_ladder(&p));
    let s_max = ladder.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let g = grid_from(&a.grid, ladder_grid(&p, s_max))?;
    let rows = two_peak_report(&p, &g, &ladder)?;
    let level = two_peak_level::<f64>(p.dim);
    let header = [
        "s", "Q", "resid_a", "resid_b_over_Q", "resid_c_over_Q", "coeff_l2star_sq", "coeff_l2star_pow", "resid_m_over_Q",
        "quotient", "level",
    ];
    let csv_rows: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                r.s.into(),
                r.q.into(),
                r.resid_a.into(),
                r.resid_b_over_q.into(),
                r.resid_c_over_q.into(),
                r.coeff_l2star_sq.into(),
                r.coeff_l2star_pow.into(),
                r.resid_m_over_q.into(),
                r.quotient.into(),
                level.into(),
            ]
        })
        .collect();
    let svg = svg_plot(
        &format!("two-peak quotient, N={} gamma={}", p.dim, p.gamma),
        "s",
        "quotient",
        &[Series {
            name: "v_s".into(),
            points: rows.iter().map(|r| (r.s, r.quotient)).collect(),
        }],
        &[("2 - 2^(2/2*)".into(), level)],
    );
    let result = value(&rows);
    let report = Report {
        config: cfg,
        grid: Some(value(&g)),
        tolerance: None,
        target: Some(json!({
            "two_peak": level,
            "coeff_l2star_sq": 2f64.powf(2.0 / p.two_star + 1.0),
            "coeff_l2star_pow": 2.0 * p.two_star,
        })),
        result: &result,
    };
    emit(cfg, "two-peak", &report, Artifacts { csv: Some(to_csv(&header, &csv_rows)), svg: Some(svg), ..Default::default() })?;
    Ok(())
}

fn hidden_level(cfg: &RunConfig, a: &HiddenArgs) -> Out {
    let p = params(&a.problem)?;
    let rows = a.z.iter().map(|z| hidden_level_row(&p, *z)).collect::<CoreResult<Vec<_>>>()?;
    let target = critical_levels(&p).hidden;
    let header = ["z", "hardy_term", "m_value", "quotient", "target"];
    let csv_rows: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| vec![r.z.into(), r.hardy_term.into(), r.m_value.into(), r.quotient.into(), r.target.into()])
        .collect();
    let svg = svg_plot(
        &format!("translated bubble, N={} gamma={}", p.dim, p.gamma),
        "z",
        "quotient",
        &[Series {
            name: "quotient".into(),
            points: rows.iter().map(|r| (r.z, r.quotient)).collect(),
        }],
        &[("1 - S_gamma/S".into(), target)],
    );
    let last_rel = rows.last().map_or(f64::NAN, |r| (r.quotient / target - 1.0).abs());
    let result = json!({
        "rows": value(&rows),
        "approach_rate": value(&approach_rate(&rows)),
        "rel_err_at_max_z": last_rel,
    });
    let report = Report {
        config: cfg,
        grid: None,
        tolerance: Some(a.tol),
        target: Some(json!({ "hidden": target })),
        result: &result,
    };
    emit(cfg, "hidden-level", &report, Artifacts { csv: Some(to_csv(&header, &csv_rows)), svg: Some(svg), ..Default::default() })?;
    if !(last_rel <= a.tol) {
        return Err(Failure::Bound(format!("relative distance to the hidden level {last_rel:e} exceeds {}", a.tol)));
    }
    Ok(())
}

fn interactions(cfg: &RunConfig, a: &InteractionArgs) -> Out {
    let p = params(&a.problem)?;
    let ts = p.two_star;
    let etas = a
        .eta1
        .clone()
        .unwrap_or_else(|| vec![1.0, 0.5 * (1.0 + 0.5 * ts), 0.5 * ts]);
    let ladder = a.s_ladder.clone().unwrap_or_else(|| default_ladder(&p));
    let lambdas = a.lambda.clone().unwrap_or_else(default_lambda_ladder);
    let s_max = ladder.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let g = grid_from(&a.grid, ladder_grid(&p, s_max))?;
    let mut cyl = Vec::new();
    let mut rn = Vec::new();
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &e1 in &etas {
        let fit = interaction_rate_fit(&p, &g, e1, ts - e1, &ladder)?;
        for (s, v) in fit.s.iter().zip(&fit.values) {
            rows.push(vec![Cell::S("cylinder".into()), e1.into(), (ts - e1).into(), (*s).into(), (*v).into()]);
        }
        series.push(Series {
            name: format!("eta1={e1}"),
            points: fit.s.iter().zip(&fit.values).map(|(s, v)| (*s, v.ln())).collect(),
        });
        cyl.push(fit);
        let fit = interaction_rn_rate_fit(&p, e1, ts - e1, &lambdas)?;
        for (l, v) in fit.lambda.iter().zip(&fit.values) {
            rows.push(vec![Cell::S("rn".into()), e1.into(), (ts - e1).into(), (*l).into(), (*v).into()]);
        }
        rn.push(fit);
    }
    let svg = svg_plot(
        &format!("cylinder interactions, N={} gamma={}", p.dim, p.gamma),
        "s",
        "ln I",
        &series,
        &[],
    );
    let result = json!({ "cylinder": value(&cyl), "rn": value(&rn) });
    let report = Report {
        config: cfg,
        grid: Some(value(&g)),
        tolerance: Some(0.02),
        target: Some(json!({ "eps": p.eps, "balanced_rate": p.eps * p.dim as f64 / (p.dim as f64 - 2.0) })),
        result: &result,
    };
    let csv = to_csv(&["domain", "eta1", "eta2", "x", "value"], &rows);
    emit(cfg, "interactions", &report, Artifacts { csv: Some(csv), svg: Some(svg), ..Default::default() })?;
    Ok(())
}

fn radial_min(cfg: &RunConfig, a: &RadialArgs) -> Out {
    let p = params(&a.problem)?;
    let g = grid_from(&a.grid, Grid::default_for(&p))?;
    let opts = MinimizeOptions {
        max_iter: a.max_iter,
        rel_tol: a.tol,
        ..Default::default()
    };
    let r = match a.init_weight {
        Some(w) => minimize_radial_quotient(&p, &g, &eigen_init(&p, &g, w)?, &opts)?,
        None => estimate_radial_constant(&p, &g, &opts)?,
    };
    let thresholds = if p.dim >= 4 {
        value(&gamma0_from_estimate(p.dim, r.c_rad_estimate)?)
    } else {
        value(&gamma_thresholds::<f64>(3, Some(r.c_rad_estimate))?)
    };
    let local = spectral_gap_formula(&p);
    let level = two_peak_level::<f64>(p.dim);
    let result = json!({
        "c_rad_estimate": r.c_rad_estimate,
        "upper_bound": true,
        "iterations": r.iterations,
        "converged": r.converged,
        "stop": value(&r.stop),
        "restarts": r.restarts,
        "active_shifts": value(&r.active_shifts),
        "below_local": r.c_rad_estimate < local,
        "below_two_peak": r.c_rad_estimate < level,
        "thresholds": thresholds,
        "history": value(&r.history),
    });
    let hist_rows: Vec<Vec<Cell>> = r.history.iter().map(|(i, q)| vec![(*i).into(), (*q).into()]).collect();
    let mut field = Vec::new();
    write_field_csv(&r.minimizer, &mut field)?;
    let svg = svg_plot(
        &format!("radial descent, N={} gamma={}", p.dim, p.gamma),
        "iteration",
        "quotient",
        &[Series {
            name: "quotient".into(),
            points: r.history.iter().map(|(i, q)| (*i as f64, *q)).collect(),
        }],
        &[("Lambda".into(), local), ("2 - 2^(2/2*)".into(), level)],
    );
    let report = Report {
        config: cfg,
        grid: Some(value(&g)),
        tolerance: Some(a.tol),
        target: Some(json!({ "local": local, "two_peak": level })),
        result: &result,
    };
    let art = Artifacts {
        csv: Some(to_csv(&["iteration", "quotient"], &hist_rows)),
        svg: Some(svg),
        extra_csv: vec![("radial-min-field".into(), String::from_utf8_lossy(&field).into_owned())],
    };
    emit(cfg, "radial-min", &report, art)?;
    Ok(())
}

fn gamma0(cfg: &RunConfig, a: &Gamma0Args) -> Out {
    let th = if a.dim == 3 {
        gamma_thresholds::<f64>(3, a.c_rad)?
    } else {
        let c = a
            .c_rad
            .ok_or_else(|| Failure::Config(format!("--c-rad is required for N = {}", a.dim)))?;
        gamma0_from_estimate(a.dim, c)?
    };
    let result = value(&th);
    let report = Report {
        config: cfg,
        grid: None,
        tolerance: Some(1e-10),
        target: a.c_rad.map(|c| json!({ "Lambda": c })),
        result: &result,
    };
    emit(cfg, "gamma0", &report, Artifacts { csv: Some(flat_csv(&result)), ..Default::default() })?;
    Ok(())
}

fn verify_all(cfg: &RunConfig, a: &VerifyArgs) -> Out {
    let ids: Vec<u8> = a.criteria.clone().unwrap_or_else(|| ALL.to_vec());
    let mut outcomes = Vec::new();
    for id in ids {
        let o = acceptance::run(id, cfg.seed).ok_or_else(|| Failure::Config(format!("unknown criterion {id}")))?;
        eprintln!("{o}");
        outcomes.push(o);
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    let rows: Vec<Vec<Cell>> = outcomes
        .iter()
        .map(|o| {
            vec![
                (o.id as usize).into(),
                Cell::S(o.title.into()),
                o.passed.into(),
                o.seconds.into(),
            ]
        })
        .collect();
    let result = json!({ "outcomes": value(&outcomes), "failed": failed });
    let report = Report {
        config: cfg,
        grid: None,
        tolerance: None,
        target: None,
        result: &result,
    };
    emit(cfg, "verify-all", &report, Artifacts { csv: Some(to_csv(&["criterion", "title", "passed", "seconds"], &rows)), ..Default::default() })?;
    if !failed.is_empty() {
        return Err(Failure::Bound(format!("criteria failing: {failed:?}")));
    }
    Ok(())
}
