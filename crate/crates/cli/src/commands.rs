use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;

use streamnet::dynamics::{
    biomass_upper_bound, integrate, positive_equilibrium, IntegrateOptions, LogisticParams,
};
use streamnet::io::{
    equilibrium_csv, fmt_f64, fmt_vec, network_to_string, optimization_report, survey_csv,
    trajectory_csv,
};
use streamnet::network::{
    build_connection_matrix, canonical_three_node, enumerate_homogeneous_networks, straight_chain,
};
use streamnet::optimize::{
    default_resolution, maximize_biomass, maximize_growth_rate, verify_uniform_perturbation,
};
use streamnet::signs::{check_admissibility, net_flows, sign_pattern, survey_patterns, SIGN_TOL};
use streamnet::spectral::{growth_rate, growth_rate_zero_diffusion, network_growth_rate};
use streamnet::{Allocation, NodeId, StreamNetwork, ThreeNodeKind};

use crate::config::RunConfig;
use crate::{CliError, FigureArg, ObjectiveArg};

const SURVEY_RESOLUTION: usize = 50;

fn header(command: &str, cfg: &RunConfig, extra: &[(&str, String)]) -> String {
    let mut out = String::new();
    writeln!(out, "# tool = streamnet {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(out, "# command = {command}").unwrap();
    for (k, v) in cfg.echo() {
        writeln!(out, "# {k} = {v}").unwrap();
    }
    for (k, v) in extra {
        writeln!(out, "# {k} = {v}").unwrap();
    }
    out
}

/// Writes to `<out>/<file>` when an output directory is set, else stdout.
fn emit(cfg: &RunConfig, file: &str, text: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(dir) => write_file(dir, file, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(dir: &Path, file: &str, text: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::config(format!("{}: {e}", dir.display())))?;
    let path = dir.join(file);
    std::fs::write(&path, text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    writeln!(out, "{key} = {value}").unwrap();
}

fn params(cfg: &RunConfig, net: &StreamNetwork) -> Result<LogisticParams, CliError> {
    let r = cfg.allocation(net.n())?;
    Ok(LogisticParams::new(r, cfg.carrying_capacity()?)?)
}

pub fn growth(cfg: &RunConfig) -> Result<(), CliError> {
    let net = cfg.network()?;
    let r = cfg.allocation(net.n())?;
    let mut out = header("growth", cfg, &[]);
    if net.d() == 0.0 && net.n() > 1 {
        let z = growth_rate_zero_diffusion(&net, net.q(), &r)?;
        kv(&mut out, "rho", fmt_f64(z.rho));
        kv(&mut out, "attaining_node", z.node);
    } else {
        let l = build_connection_matrix(&net)?;
        let rep = growth_rate(&l, &r)?;
        kv(&mut out, "rho", fmt_f64(rep.rho));
        kv(&mut out, "lower_bound", fmt_f64(rep.lower_bound));
        kv(&mut out, "upper_bound", fmt_f64(rep.upper_bound));
        kv(&mut out, "theta", fmt_vec(rep.theta.as_slice()));
        kv(&mut out, "perron_right", fmt_vec(rep.perron.v.as_slice()));
        kv(&mut out, "perron_left", fmt_vec(rep.perron.w.as_slice()));
        kv(&mut out, "gradient", fmt_vec(&rep.perron.growth_gradient()));
        kv(&mut out, "residual", fmt_f64(rep.residual));
    }
    emit(cfg, "growth.txt", &out)
}

pub fn biomass(cfg: &RunConfig) -> Result<(), CliError> {
    let net = cfg.network()?;
    let p = params(cfg, &net)?;
    let tol = cfg.sign_tol.unwrap_or(SIGN_TOL);
    let eq = positive_equilibrium(&net, &p)?;
    let bound = biomass_upper_bound(&net, p.k)?;
    let pattern = sign_pattern(&eq, &p, tol);
    let verdict = check_admissibility(&pattern, &net)?;
    let flows = net_flows(&eq, &net, tol)?;

    let mut out = header("biomass", cfg, &[]);
    kv(&mut out, "biomass", fmt_f64(eq.biomass));
    kv(&mut out, "upper_bound", fmt_f64(bound));
    kv(&mut out, "u_star", fmt_vec(eq.u_star.as_slice()));
    kv(&mut out, "residual", fmt_f64(eq.residual));
    kv(&mut out, "method", format!("{:?}", eq.method).to_lowercase());
    kv(&mut out, "pattern", pattern.code());
    kv(&mut out, "pattern_symbols", &pattern);
    kv(&mut out, "admissible", verdict.admissible);
    for rule in &verdict.violated_rules {
        kv(&mut out, "violated_rule", rule.name());
    }
    for e in &flows.edges {
        writeln!(
            out,
            "flow {}->{} = {} (down {}, up {}{})",
            e.up,
            e.down,
            fmt_f64(e.net),
            fmt_f64(e.flow_down),
            fmt_f64(e.flow_up),
            if e.is_zero { ", zero" } else { "" }
        )
        .unwrap();
    }
    kv(&mut out, "node_inflow", fmt_vec(&flows.node_inflow));
    emit(cfg, "biomass.txt", &out)
}

pub fn equilibrium(
    cfg: &RunConfig,
    t_end: Option<f64>,
    samples: usize,
    u0: Option<Vec<f64>>,
) -> Result<(), CliError> {
    let net = cfg.network()?;
    let p = params(cfg, &net)?;
    let eq = positive_equilibrium(&net, &p)?;
    let extra = [("residual", fmt_f64(eq.residual))];
    let text = header("equilibrium", cfg, &extra) + &equilibrium_csv(&eq);
    let Some(t_end) = t_end else {
        return emit(cfg, "equilibrium.csv", &text);
    };
    let u0 = match u0 {
        Some(v) if v.len() == net.n() => DVector::from_vec(v),
        Some(v) => {
            return Err(CliError::config(format!(
                "--u0 has {} entries but the network has {} nodes",
                v.len(),
                net.n()
            )))
        }
        None => DVector::from_element(net.n(), 0.01 * p.k),
    };
    let traj = integrate(&net, &p, &u0, t_end, samples, &IntegrateOptions::default())?;
    let extra = [
        ("t_end", fmt_f64(t_end)),
        ("samples", samples.to_string()),
        ("u0", fmt_vec(u0.as_slice())),
    ];
    let traj_text = header("equilibrium", cfg, &extra) + &trajectory_csv(&traj);
    match &cfg.out {
        Some(dir) => {
            write_file(dir, "equilibrium.csv", &text)?;
            write_file(dir, "trajectory.csv", &traj_text)
        }
        None => {
            print!("{text}");
            print!("{traj_text}");
            Ok(())
        }
    }
}

pub fn optimize(
    cfg: &RunConfig,
    objective: ObjectiveArg,
    refine: bool,
    uniform_perturb: bool,
) -> Result<(), CliError> {
    let net = cfg.network()?;
    let r_total = cfg.r_total()?;
    let resolution = cfg.resolution.unwrap_or_else(|| default_resolution(net.n()));
    let (result, name) = match objective {
        ObjectiveArg::Growth => (
            maximize_growth_rate(&net, r_total, resolution, refine)?,
            "growth",
        ),
        ObjectiveArg::Biomass => (
            maximize_biomass(&net, r_total, cfg.carrying_capacity()?, resolution, refine)?,
            "biomass",
        ),
    };
    let extra = [("refine", refine.to_string())];
    let mut out = header("optimize", cfg, &extra) + &optimization_report(&result);
    if uniform_perturb {
        let rep = verify_uniform_perturbation(&net, r_total)?;
        let ends: Vec<String> = rep.most_downstream.iter().map(|n| n.to_string()).collect();
        kv(&mut out, "most_downstream", ends.join(","));
        for row in &rep.rows {
            writeln!(
                out,
                "gain node {} loss {} = {} (finite difference {})",
                row.gain_node,
                row.scheme,
                fmt_f64(row.first_order),
                fmt_f64(row.finite_difference)
            )
            .unwrap();
        }
        kv(&mut out, "dominance_holds", rep.dominance_holds());
        kv(&mut out, "strict_dominance_holds", rep.strict_dominance_holds());
        kv(&mut out, "max_fd_relative_error", fmt_f64(rep.max_fd_relative_error()));
    }
    emit(cfg, &format!("optimize_{name}.txt"), &out)
}

pub fn signs(cfg: &RunConfig) -> Result<(), CliError> {
    let net = cfg.network()?;
    let tol = cfg.sign_tol.unwrap_or(SIGN_TOL);
    let k = cfg.carrying_capacity()?;
    if cfg.alloc.is_some() {
        let p = params(cfg, &net)?;
        let eq = positive_equilibrium(&net, &p)?;
        let pattern = sign_pattern(&eq, &p, tol);
        let verdict = check_admissibility(&pattern, &net)?;
        let mut out = header("signs", cfg, &[]);
        kv(&mut out, "pattern", pattern.code());
        kv(&mut out, "pattern_symbols", &pattern);
        kv(&mut out, "admissible", verdict.admissible);
        kv(&mut out, "u_star", fmt_vec(eq.u_star.as_slice()));
        return emit(cfg, "signs.txt", &out);
    }
    let resolution = cfg.resolution.unwrap_or(SURVEY_RESOLUTION);
    let survey = survey_patterns(&net, cfg.r_total()?, k, resolution, tol)?;
    let observed: Vec<String> = survey.patterns().into_iter().collect();
    let extra = [
        ("survey_resolution", resolution.to_string()),
        ("patterns", observed.join(",")),
        ("failures", survey.failures.len().to_string()),
        ("max_sum_rule_residual", fmt_f64(survey.max_sum_rule_residual())),
    ];
    let text = header("signs", cfg, &extra) + &survey_csv(&survey, net.n());
    emit(cfg, "signs_survey.csv", &text)
}

pub fn enumerate(cfg: &RunConfig, n: usize) -> Result<(), CliError> {
    let d = cfg.d.unwrap_or(1.0);
    let q = cfg.q.unwrap_or(1.0);
    let nets = enumerate_homogeneous_networks(n, d, q)?;
    match &cfg.out {
        Some(dir) => {
            for (i, net) in nets.iter().enumerate() {
                write_file(dir, &format!("net_{n}_{}.toml", i + 1), &network_to_string(net)?)?;
            }
            println!("{} networks written to {}", nets.len(), dir.display());
            Ok(())
        }
        None => {
            let mut out = header("enumerate", cfg, &[("n", n.to_string())]);
            kv(&mut out, "count", nets.len());
            for (i, net) in nets.iter().enumerate() {
                let edges: Vec<String> = net
                    .oriented_edges()
                    .unwrap_or_default()
                    .iter()
                    .map(|(a, b)| format!("{}->{}", a + 1, b + 1))
                    .collect();
                let levels: Vec<String> = net.levels().iter().map(|l| l.to_string()).collect();
                writeln!(
                    out,
                    "network {}: levels [{}] edges [{}]",
                    i + 1,
                    levels.join(","),
                    edges.join(",")
                )
                .unwrap();
            }
            print!("{out}");
            Ok(())
        }
    }
}

pub fn figure(cfg: &RunConfig, which: FigureArg, t_end: f64, samples: usize) -> Result<(), CliError> {
    let dir = cfg
        .out
        .clone()
        .ok_or_else(|| CliError::config("figure output needs --out"))?;
    match which {
        FigureArg::Fig5 => fig5(cfg, &dir, t_end, samples),
        FigureArg::Fig8 => fig8(cfg, &dir),
    }
}

fn fig5(cfg: &RunConfig, dir: &Path, t_end: f64, samples: usize) -> Result<(), CliError> {
    let d = cfg.d.unwrap_or(0.1);
    let q = cfg.q.unwrap_or(0.3);
    let k = cfg.k.unwrap_or(3.0);
    let r = cfg.r_total.unwrap_or(5.0);
    let u0 = DVector::from_element(3, 0.01);
    let opts = IntegrateOptions::default();
    for kind in ThreeNodeKind::ALL {
        let net = canonical_three_node(kind, d, q)?;
        for (label, node) in [("upstream", NodeId(0)), ("downstream", NodeId(2))] {
            let p = LogisticParams::new(Allocation::vertex(3, node, r)?, k)?;
            let traj = integrate(&net, &p, &u0, t_end, samples, &opts)?;
            let extra = [
                ("figure", "fig5".to_string()),
                ("network", kind.name().to_string()),
                ("d", fmt_f64(d)),
                ("q", fmt_f64(q)),
                ("K", fmt_f64(k)),
                ("r", fmt_vec(&p.r)),
                ("u0", fmt_vec(u0.as_slice())),
                ("t_end", fmt_f64(t_end)),
                ("samples", samples.to_string()),
            ];
            let text = header("figure", &RunConfig::default(), &extra) + &trajectory_csv(&traj);
            write_file(dir, &format!("fig5_{}_{label}.csv", kind.name()), &text)?;
        }
    }
    Ok(())
}

fn fig8(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let r = cfg.r_total.unwrap_or(2.0);
    let points = 60;
    let (lo, hi) = (-2.0_f64, 2.0_f64);
    let ds: Vec<f64> = (0..points)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64))
        .collect();
    let extra = [
        ("figure", "fig8".to_string()),
        ("r", fmt_f64(r)),
        ("allocation", "all resources at node 1 of a straight chain".to_string()),
    ];
    let mut out = header("figure", &RunConfig::default(), &extra);
    out.push_str("q,n,d,rho\n");
    for q in [0.5, 1.5, 10.0] {
        for n in 2..=5 {
            for &d in &ds {
                let net = straight_chain(n, d, q)?;
                let alloc = Allocation::vertex(n, NodeId(0), r)?;
                let rho = network_growth_rate(&net, &alloc)?;
                writeln!(out, "{},{n},{},{}", fmt_f64(q), fmt_f64(d), fmt_f64(rho)).unwrap();
            }
        }
    }
    write_file(dir, "fig8.csv", &out)
}
