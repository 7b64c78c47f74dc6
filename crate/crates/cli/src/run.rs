//! Command dispatch.

use dephasing_core::bloch::{self, BlochOptimum, FieldPair};
use dephasing_core::coherence::{self, PerturbationKind};
use dephasing_core::dephasing::{self, time_averaged_echo};
use dephasing_core::spin_bath::{self, PerturbativeEcho, ProductState, ZurekConfig};
use dephasing_core::StateVector;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{self, Command, ProbeKind, RunConfig};
use crate::error::CliError;
use crate::output::{Artifact, Cell, Table};

pub fn run(cfg: &RunConfig) -> Result<Artifact, CliError> {
    match cfg.command() {
        Command::Simulate => simulate(cfg),
        Command::Analyze => analyze(cfg),
        Command::Zurek => zurek(cfg),
        Command::PrepError => prep_error(cfg),
        Command::Optimize => optimize(cfg),
        Command::Sweep => sweep(cfg),
    }
}

fn model(cfg: &RunConfig) -> Result<dephasing::DephasingModel, CliError> {
    Ok(config::build_model(cfg)?.expect("resolved config has a model"))
}

fn simulate(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let model = model(cfg)?;
    let psi = config::initial_state(cfg)?;
    let amps = config::amplitudes(cfg)?;
    let grid = config::time_grid(cfg)?;
    let rec = dephasing::trajectory(&model, &psi, &amps, &grid.times())?;
    let mut table = Table::new(&["t", "re_r", "im_r", "abs_r", "echo", "purity"]);
    for i in 0..rec.len() {
        let r = rec.r_values[i];
        table.push(vec![
            Cell::Num(rec.times[i]),
            Cell::Num(r.re),
            Cell::Num(r.im),
            Cell::Num(r.norm()),
            Cell::Num(rec.echo[i]),
            Cell::Num(rec.purity[i]),
        ]);
    }
    Ok(Artifact {
        summary: vec![("dim", json!(model.dim()))],
        json: table.to_json(),
        table,
    })
}

fn vector_json(v: &StateVector) -> Value {
    Value::Array(v.amplitudes().iter().map(|c| json!([c.re, c.im])).collect())
}

fn analyze(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let model = model(cfg)?;
    let tol = cfg
        .tolerances
        .as_ref()
        .and_then(|t| t.detection)
        .expect("resolved tolerance");
    let report = coherence::decoherence_free_states(&model, tol)?;

    let mut table = Table::new(&["group", "delta", "vector", "component", "re", "im"]);
    let mut groups = Vec::new();
    for (g, group) in report.groups.iter().enumerate() {
        for (k, v) in group.basis.iter().enumerate() {
            for (c, amp) in v.amplitudes().iter().enumerate() {
                table.push(vec![
                    Cell::Int(g as u64),
                    Cell::Num(group.delta),
                    Cell::Int(k as u64),
                    Cell::Int(c as u64),
                    Cell::Num(amp.re),
                    Cell::Num(amp.im),
                ]);
            }
        }
        groups.push(json!({
            "delta": group.delta,
            "basis": group.basis.iter().map(vector_json).collect::<Vec<_>>(),
        }));
    }
    let mut summary = vec![
        ("exists", json!(report.exists)),
        ("blockDim", json!(report.block_dim)),
    ];
    let mut body = json!({
        "exists": report.exists,
        "blockDim": report.block_dim,
        "groups": groups,
    });

    if let Some(f) = &cfg.fragility {
        let kind = match f.kind.unwrap_or_default() {
            ProbeKind::Unconstrained => PerturbationKind::Unconstrained,
            ProbeKind::Structured => PerturbationKind::Structured,
        };
        let probe = coherence::fragility_probe(
            &model,
            f.scale.expect("resolved"),
            f.samples.expect("resolved"),
            cfg.seed.unwrap_or(0),
            kind,
            tol,
        )?;
        summary.push(("fragilityFraction", json!(probe.fraction)));
        body["fragility"] = json!({
            "fraction": probe.fraction,
            "preserved": probe.preserved,
            "samples": probe.samples,
            "scale": probe.scale,
            "seed": probe.seed,
        });
    }
    Ok(Artifact {
        summary,
        table,
        json: body,
    })
}

fn zurek(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let zc = config::zurek_config(cfg.zurek.as_ref().expect("resolved"))?;
    let model = spin_bath::build_zurek(&zc);
    let dynamics = model.dynamics();
    let prepared = dynamics.prepare(&spin_bath::ground_state(zc.n()))?;
    let pert = PerturbativeEcho::new(&zc)?;
    let grid = config::time_grid(cfg)?;

    let exact: Vec<f64> = (0..grid.samples)
        .into_par_iter()
        .map(|i| prepared.echo_deficit(grid.time(i)))
        .collect();
    let mut table = Table::new(&[
        "t",
        "exact_echo",
        "perturbative_echo",
        "exact_deficit",
        "perturbative_deficit",
    ]);
    for (i, &d) in exact.iter().enumerate() {
        let t = grid.time(i);
        let p = pert.deficit(t);
        table.push(vec![
            Cell::Num(t),
            Cell::Num(1.0 - d),
            Cell::Num(1.0 - p),
            Cell::Num(d),
            Cell::Num(p),
        ]);
    }
    let exact_average = 1.0 - exact.iter().sum::<f64>() / exact.len() as f64;
    let pert_average = spin_bath::perturbative_average(&zc);
    let summary = vec![
        ("minGap", json!(zc.min_gap())),
        ("exactAverage", json!(exact_average)),
        ("perturbativeAverage", json!(pert_average)),
    ];
    let json = json!({
        "minGap": zc.min_gap(),
        "averages": {"exact": exact_average, "perturbative": pert_average},
        "trajectory": table.to_json(),
    });
    Ok(Artifact {
        summary,
        table,
        json,
    })
}

fn prep_error(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let p = cfg.prep_error.as_ref().expect("resolved");
    let epsilon = p.epsilon.expect("resolved");
    let n = p.n.expect("resolved");
    let couplings = p.couplings.clone().expect("resolved");
    let spec = ProductState::uniform_error(n, epsilon)?;
    let bound = spin_bath::preparation_bound(epsilon, n)?;
    let analytic = spin_bath::product_average_echo(&couplings, &spec)?;
    let grid = config::time_grid(cfg)?;
    let model = spin_bath::build_zurek(&ZurekConfig::new(couplings, 0.0)?);
    let numeric = time_averaged_echo(
        &model,
        &spin_bath::product_state(&spec),
        grid.horizon,
        grid.samples,
    )?;
    let mut table = Table::new(&["epsilon", "n", "bound", "analytic", "numeric"]);
    table.push(vec![
        Cell::Num(epsilon),
        Cell::Int(n as u64),
        Cell::Num(bound),
        Cell::Num(analytic),
        Cell::Num(numeric),
    ]);
    let json = json!({
        "epsilon": epsilon,
        "n": n,
        "bound": bound,
        "analytic": analytic,
        "numeric": numeric,
    });
    Ok(Artifact {
        summary: vec![],
        table,
        json,
    })
}

const BLOCH_COLUMNS: [&str; 8] = [
    "alpha_rad",
    "r_min",
    "v_x",
    "v_y",
    "v_z",
    "t_worst",
    "theoretical_r_min",
    "regime",
];

fn bloch_row(alpha: f64, opt: &BlochOptimum, theoretical: f64) -> Vec<Cell> {
    vec![
        Cell::Num(alpha),
        Cell::Num(opt.r_min),
        Cell::Num(opt.v_star.x),
        Cell::Num(opt.v_star.y),
        Cell::Num(opt.v_star.z),
        Cell::Num(opt.t_worst),
        Cell::Num(theoretical),
        Cell::Text(opt.regime.as_str().to_string()),
    ]
}

fn optimize(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let b = cfg.bloch.as_ref().expect("resolved");
    let alpha = b.alpha.expect("resolved");
    let fields = FieldPair::unit(alpha)?;
    let opt = bloch::optimize_initial_state(&fields, &config::optimizer_settings(b))?;
    let theoretical = bloch::theoretical_rmin(alpha)?;
    let mut table = Table::new(&BLOCH_COLUMNS);
    table.push(bloch_row(alpha, &opt, theoretical));
    let v = |u: &bloch::BlochVector| json!([u.x, u.y, u.z]);
    let json = json!({
        "alpha": alpha,
        "rMin": opt.r_min,
        "vStar": v(&opt.v_star),
        "tWorst": opt.t_worst,
        "regime": opt.regime.as_str(),
        "theoreticalRMin": theoretical,
        "perpendicularFamily": opt.perpendicular_family,
        "alignedFamily": opt.aligned_family,
        "ties": opt.ties.iter().map(v).collect::<Vec<_>>(),
    });
    Ok(Artifact {
        summary: vec![],
        table,
        json,
    })
}

fn sweep(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let b = cfg.bloch.as_ref().expect("resolved");
    let alphas = b.alphas.as_ref().expect("resolved");
    let rows = bloch::alpha_sweep(alphas, &config::optimizer_settings(b))?;
    let mut table = Table::new(&BLOCH_COLUMNS);
    let mut max_error: f64 = 0.0;
    for row in &rows {
        max_error = max_error.max((row.optimum.r_min - row.theoretical).abs());
        table.push(bloch_row(row.alpha, &row.optimum, row.theoretical));
    }
    Ok(Artifact {
        summary: vec![("maxAbsError", json!(max_error))],
        json: json!({"maxAbsError": max_error, "rows": table.to_json()}),
        table,
    })
}
