//! Network files, CSV output and plain-text reports.
//!
//! Network file (TOML):
//!
//! ```toml
//! n = 3
//! levels = [0, 1, 2]
//! edges = [[1, 2], [2, 3]]   # 1-based, upstream node first
//! d = 0.1
//! q = 0.3
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Equilibrium, Trajectory};
use crate::error::{Error, Result};
use crate::network::StreamNetwork;
use crate::optimize::OptimizationResult;
use crate::signs::Survey;

/// Seventeen significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_vec(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| fmt_f64(x)).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub n: usize,
    pub levels: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub d: f64,
    pub q: f64,
}

impl NetworkFile {
    pub fn from_network(net: &StreamNetwork) -> Result<Self> {
        let oriented = net
            .oriented_edges()
            .ok_or_else(|| Error::Format("only leveled networks can be written".into()))?;
        Ok(Self {
            n: net.n(),
            levels: net.levels().to_vec(),
            edges: oriented.iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
            d: net.d(),
            q: net.q(),
        })
    }

    pub fn to_network(&self) -> Result<StreamNetwork> {
        if self.levels.len() != self.n {
            return Err(Error::Format(format!(
                "n = {} but {} levels given",
                self.n,
                self.levels.len()
            )));
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for &[i, j] in &self.edges {
            if i == 0 || j == 0 || i > self.n || j > self.n {
                return Err(Error::Format(format!("edge [{i}, {j}] is out of range 1..={}", self.n)));
            }
            if self.levels[j - 1] != self.levels[i - 1] + 1 {
                return Err(Error::Format(format!(
                    "edge [{i}, {j}] must go from a node to one on the next level down"
                )));
            }
            edges.push((i - 1, j - 1));
        }
        StreamNetwork::new(self.levels.clone(), &edges, self.d, self.q)
    }
}

pub fn parse_network(text: &str) -> Result<StreamNetwork> {
    let file: NetworkFile = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    file.to_network()
}

pub fn network_to_string(net: &StreamNetwork) -> Result<String> {
    toml::to_string(&NetworkFile::from_network(net)?).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_network(path: &Path) -> Result<StreamNetwork> {
    parse_network(&std::fs::read_to_string(path)?)
}

pub fn write_network(path: &Path, net: &StreamNetwork) -> Result<()> {
    std::fs::write(path, network_to_string(net)?)?;
    Ok(())
}

/// `t,u1,...,un,total`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.states.first().map_or(0, |s| s.len());
    let mut out = String::from("t");
    for i in 1..=n {
        write!(out, ",u{i}").unwrap();
    }
    out.push_str(",total\n");
    for ((t, state), total) in traj.times.iter().zip(&traj.states).zip(&traj.total) {
        out.push_str(&fmt_f64(*t));
        for u in state.iter() {
            write!(out, ",{}", fmt_f64(*u)).unwrap();
        }
        writeln!(out, ",{}", fmt_f64(*total)).unwrap();
    }
    out
}

/// `node,u_star` with a closing `biomass` row.
pub fn equilibrium_csv(eq: &Equilibrium) -> String {
    let mut out = String::from("node,u_star\n");
    for (i, u) in eq.u_star.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, fmt_f64(*u)).unwrap();
    }
    writeln!(out, "biomass,{}", fmt_f64(eq.biomass)).unwrap();
    out
}

/// `r1,...,rn,u1,...,un,pattern`.
pub fn survey_csv(survey: &Survey, n: usize) -> String {
    let mut header: Vec<String> = (1..=n).map(|i| format!("r{i}")).collect();
    header.extend((1..=n).map(|i| format!("u{i}")));
    header.push("pattern".into());
    let mut out = header.join(",");
    out.push('\n');
    for p in &survey.points {
        let fields: Vec<String> = p.r.iter().chain(&p.u_star).map(|&x| fmt_f64(x)).collect();
        writeln!(out, "{},{}", fields.join(","), p.pattern.code()).unwrap();
    }
    out
}

/// Plain `key = value` report of an optimization run.
pub fn optimization_report(result: &OptimizationResult) -> String {
    let mut out = String::new();
    writeln!(out, "objective = {}", result.objective).unwrap();
    writeln!(out, "resolution = {}", result.resolution).unwrap();
    writeln!(out, "probes = {}", result.probe_count()).unwrap();
    writeln!(out, "failures = {}", result.failures).unwrap();
    writeln!(out, "refine_steps = {}", result.refine_steps).unwrap();
    writeln!(out, "grid_best = {}", fmt_f64(result.grid_best)).unwrap();
    writeln!(out, "best_value = {}", fmt_f64(result.best_value)).unwrap();
    writeln!(out, "best_allocation = {}", fmt_vec(&result.best_allocation)).unwrap();
    writeln!(out, "argmax_count = {}", result.argmax_set.len()).unwrap();
    for a in &result.argmax_set {
        writeln!(out, "argmax = {}", fmt_vec(a)).unwrap();
    }
    out
}
