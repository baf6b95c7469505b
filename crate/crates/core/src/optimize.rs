//! Resource allocation over the simplex and the verification harnesses.

use std::fmt;

use rayon::prelude::*;

pub use crate::allocation::Allocation;
use crate::dynamics::{biomass_upper_bound, positive_equilibrium, LogisticParams};
use crate::error::{invalid, Result};
use crate::network::{
    build_connection_matrix, downstream_end_nodes, NodeId, StreamNetwork,
};
use crate::spectral::{
    first_order_perturbation, growth_rate, growth_rate_zero_diffusion, perturbed_growth_rate,
    PerturbationSpec,
};

pub const MAX_GRID_POINTS: usize = 10_000_000;
/// Probe budget used by [`default_resolution`].
pub const PROBE_BUDGET: usize = 100_000;
/// Allocations within this fraction of the best value join the argmax set.
pub const ARGMAX_TOL: f64 = 1e-9;
const GRADIENT_TOL: f64 = 1e-10;
const MAX_REFINE_STEPS: usize = 500;
/// Finite-difference step for biomass gradients, relative to `r_total`.
const BIOMASS_FD_STEP: f64 = 1e-6;

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// Number of points of [`simplex_grid`].
pub fn simplex_grid_size(n: usize, resolution: usize) -> Option<usize> {
    if n == 0 {
        return None;
    }
    binomial(resolution + n - 1, n - 1)
}

/// All `r_i = k_i r_total / resolution` with `sum k_i = resolution`, in
/// decreasing lexicographic order of `k`, so the first point is the vertex
/// at node 1.
pub fn simplex_grid(n: usize, r_total: f64, resolution: usize) -> Result<Vec<Allocation>> {
    if n == 0 {
        return Err(invalid("simplex needs at least one node"));
    }
    if resolution == 0 {
        return Err(invalid("resolution must be at least 1"));
    }
    if !r_total.is_finite() || r_total <= 0.0 {
        return Err(invalid("total resource must be positive"));
    }
    let count = simplex_grid_size(n, resolution).unwrap_or(usize::MAX);
    if count > MAX_GRID_POINTS {
        return Err(invalid(format!(
            "simplex grid would have {count} points (limit {MAX_GRID_POINTS})"
        )));
    }
    let mut out = Vec::with_capacity(count);
    let mut k = vec![0usize; n];
    fill(&mut k, 0, resolution, r_total, resolution, &mut out)?;
    Ok(out)
}

fn fill(
    k: &mut [usize],
    pos: usize,
    left: usize,
    r_total: f64,
    resolution: usize,
    out: &mut Vec<Allocation>,
) -> Result<()> {
    if pos + 1 == k.len() {
        k[pos] = left;
        let r = k
            .iter()
            .map(|&ki| ki as f64 * r_total / resolution as f64)
            .collect();
        out.push(Allocation::new(r)?);
        return Ok(());
    }
    for ki in (0..=left).rev() {
        k[pos] = ki;
        fill(k, pos + 1, left - ki, r_total, resolution, out)?;
    }
    Ok(())
}

/// 50 for small networks, reduced so the grid stays within [`PROBE_BUDGET`].
pub fn default_resolution(n: usize) -> usize {
    let mut res = 50;
    while res > 1 && simplex_grid_size(n, res).is_none_or(|c| c > PROBE_BUDGET) {
        res -= 1;
    }
    res
}

/// Euclidean projection onto `{x >= 0, sum x = total}`.
pub fn project_to_simplex(y: &[f64], total: f64) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - total) / (i + 1) as f64;
        if s - t > 0.0 {
            tau = t;
        }
    }
    let mut x: Vec<f64> = y.iter().map(|v| (v - tau).max(0.0)).collect();
    // Restore the exact total lost to rounding on the largest entry.
    let sum: f64 = x.iter().sum();
    if let Some((imax, _)) = x.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
        x[imax] += total - sum;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Growth,
    Biomass,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Growth => "growth",
            Objective::Biomass => "biomass",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct Probe {
    pub allocation: Allocation,
    /// `None` when the solver failed at this point.
    pub value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub objective: Objective,
    pub best_allocation: Allocation,
    pub best_value: f64,
    pub argmax_set: Vec<Allocation>,
    pub grid_best: f64,
    pub resolution: usize,
    pub refine_steps: usize,
    /// Grid probes in grid order.
    pub probes: Vec<Probe>,
    pub failures: usize,
}

impl OptimizationResult {
    pub fn probe_count(&self) -> usize {
        self.probes.len()
    }
}

fn evaluate_grid<F>(grid: Vec<Allocation>, f: F) -> Vec<Probe>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    grid.into_par_iter()
        .map(|allocation| {
            let value = f(&allocation).ok().filter(|v| v.is_finite());
            Probe { allocation, value }
        })
        .collect()
}

fn same_point(a: &[f64], b: &[f64], scale: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * scale)
}

fn assemble(
    objective: Objective,
    resolution: usize,
    probes: Vec<Probe>,
    refined: Option<(Allocation, f64, usize)>,
    r_total: f64,
) -> Result<OptimizationResult> {
    let failures = probes.iter().filter(|p| p.value.is_none()).count();
    let (grid_idx, grid_best) = probes
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.value.map(|v| (i, v)))
        // First index wins ties.
        .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
            Some((_, b)) if b >= v => acc,
            _ => Some((i, v)),
        })
        .ok_or_else(|| crate::error::Error::NoConvergence {
            what: "optimization (every probe failed)",
            iterations: probes.len(),
            residual: f64::NAN,
            best: Vec::new(),
        })?;
    let mut best_allocation = probes[grid_idx].allocation.clone();
    let mut best_value = grid_best;
    let mut refine_steps = 0;
    if let Some((alloc, value, steps)) = refined {
        refine_steps = steps;
        if value > best_value {
            best_value = value;
            best_allocation = alloc;
        }
    }
    let threshold = best_value - ARGMAX_TOL * best_value.abs();
    let mut argmax_set: Vec<Allocation> = probes
        .iter()
        .filter(|p| p.value.is_some_and(|v| v >= threshold))
        .map(|p| p.allocation.clone())
        .collect();
    if !argmax_set
        .iter()
        .any(|a| same_point(a, &best_allocation, r_total))
    {
        argmax_set.push(best_allocation.clone());
    }
    Ok(OptimizationResult {
        objective,
        best_allocation,
        best_value,
        argmax_set,
        grid_best,
        resolution,
        refine_steps,
        probes,
        failures,
    })
}

/// Grid search for the largest growth rate, optionally followed by projected
/// gradient ascent using `d rho / d r_i = w_i v_i`.
pub fn maximize_growth_rate(
    net: &StreamNetwork,
    r_total: f64,
    resolution: usize,
    refine: bool,
) -> Result<OptimizationResult> {
    let grid = simplex_grid(net.n(), r_total, resolution)?;
    if net.d() == 0.0 && net.n() > 1 {
        let q = net.q();
        let probes = evaluate_grid(grid, |r| Ok(growth_rate_zero_diffusion(net, q, r)?.rho));
        return assemble(Objective::Growth, resolution, probes, None, r_total);
    }
    let l = build_connection_matrix(net)?;
    let probes = evaluate_grid(grid, |r| Ok(growth_rate(&l, r)?.rho));
    let refined = if refine {
        let start = probes
            .iter()
            .filter_map(|p| p.value.map(|v| (p, v)))
            .fold(None, |acc: Option<(&Probe, f64)>, (p, v)| match acc {
                Some((_, b)) if b >= v => acc,
                _ => Some((p, v)),
            });
        match start {
            Some((p, v)) => refine_growth(&l, p.allocation.to_vec(), v, r_total).ok(),
            None => None,
        }
    } else {
        None
    };
    assemble(Objective::Growth, resolution, probes, refined, r_total)
}

fn refine_growth(
    l: &crate::network::ConnectionMatrix,
    mut x: Vec<f64>,
    mut value: f64,
    r_total: f64,
) -> Result<(Allocation, f64, usize)> {
    let mut step = 1.0;
    let mut steps = 0;
    for _ in 0..MAX_REFINE_STEPS {
        let grad = growth_rate(l, &x)?.perron.growth_gradient();
        let probe: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + g).collect();
        let pg = project_to_simplex(&probe, r_total);
        let pg_norm = pg
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        if pg_norm < GRADIENT_TOL {
            break;
        }
        let mut improved = false;
        while step > 1e-14 {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
            let trial = project_to_simplex(&trial, r_total);
            let v = growth_rate(l, &trial)?.rho;
            if v > value {
                x = trial;
                value = v;
                improved = true;
                step = (step * 2.0).min(1e3);
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
        steps += 1;
    }
    Ok((Allocation::new(x)?, value, steps))
}

/// Network biomass at allocation `r`.
pub fn biomass_at(net: &StreamNetwork, r: &[f64], k: f64) -> Result<f64> {
    let params = LogisticParams::new(Allocation::new(r.to_vec())?, k)?;
    Ok(positive_equilibrium(net, &params)?.biomass)
}

/// Grid search for the largest biomass, optionally followed by coordinate
/// ascent along pairwise transfers with finite-difference slopes.
pub fn maximize_biomass(
    net: &StreamNetwork,
    r_total: f64,
    k: f64,
    resolution: usize,
    refine: bool,
) -> Result<OptimizationResult> {
    if net.d() <= 0.0 && net.n() > 1 {
        return Err(invalid("biomass optimization needs d > 0"));
    }
    let grid = simplex_grid(net.n(), r_total, resolution)?;
    let probes = evaluate_grid(grid, |r| biomass_at(net, r, k));
    let refined = if refine {
        let start = probes
            .iter()
            .filter_map(|p| p.value.map(|v| (p, v)))
            .fold(None, |acc: Option<(&Probe, f64)>, (p, v)| match acc {
                Some((_, b)) if b >= v => acc,
                _ => Some((p, v)),
            });
        match start {
            Some((p, v)) => refine_biomass(net, p.allocation.to_vec(), v, r_total, k).ok(),
            None => None,
        }
    } else {
        None
    };
    assemble(Objective::Biomass, resolution, probes, refined, r_total)
}

fn refine_biomass(
    net: &StreamNetwork,
    mut x: Vec<f64>,
    mut value: f64,
    r_total: f64,
    k: f64,
) -> Result<(Allocation, f64, usize)> {
    let n = x.len();
    let h = BIOMASS_FD_STEP * r_total;
    let mut steps = 0;
    let transfer = |x: &[f64], to: usize, from: usize, s: f64| {
        let mut y = x.to_vec();
        let s = s.min(y[from]);
        y[to] += s;
        y[from] -= s;
        y
    };
    for _ in 0..MAX_REFINE_STEPS {
        let mut best: Option<(usize, usize, f64)> = None;
        for from in 0..n {
            if x[from] <= 0.0 {
                continue;
            }
            for to in (0..n).filter(|&t| t != from) {
                let hh = h.min(x[from]);
                let Ok(v) = biomass_at(net, &transfer(&x, to, from, hh), k) else {
                    continue;
                };
                let slope = (v - value) / hh;
                if best.is_none_or(|b| slope > b.2) {
                    best = Some((to, from, slope));
                }
            }
        }
        let Some((to, from, slope)) = best else { break };
        if slope <= GRADIENT_TOL * value.abs().max(1.0) {
            break;
        }
        let mut s = x[from];
        let mut improved = false;
        while s >= h {
            let trial = transfer(&x, to, from, s);
            if let Ok(v) = biomass_at(net, &trial, k) {
                if v > value {
                    x = trial;
                    value = v;
                    improved = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !improved {
            break;
        }
        steps += 1;
    }
    Ok((Allocation::new(x)?, value, steps))
}

/// Outcome of the small-diffusion growth check at one `d`.
#[derive(Debug, Clone)]
pub struct SmallDEntry {
    pub d: f64,
    pub best_value: f64,
    pub argmax_set: Vec<Allocation>,
    /// Vertex nodes of the argmax set; empty if some member is not a vertex.
    pub winners: Vec<NodeId>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct SmallDReport {
    pub end_nodes: Vec<NodeId>,
    pub entries: Vec<SmallDEntry>,
}

impl SmallDReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

/// For each `d`, checks that every maximizer of the growth rate is a vertex
/// at a downstream end node.
pub fn verify_small_d_growth(
    net: &StreamNetwork,
    q: f64,
    r_total: f64,
    d_values: &[f64],
    resolution: usize,
) -> Result<SmallDReport> {
    let end_nodes = downstream_end_nodes(net).end_nodes;
    let mut entries = Vec::with_capacity(d_values.len());
    for &d in d_values {
        if d.is_nan() || d <= 0.0 {
            return Err(invalid("d values must be positive"));
        }
        let scaled = net.with_rates(d, q)?;
        let result = maximize_growth_rate(&scaled, r_total, resolution, true)?;
        let vertices: Vec<Option<NodeId>> =
            result.argmax_set.iter().map(|a| a.vertex_node()).collect();
        let passed = vertices
            .iter()
            .all(|v| v.is_some_and(|node| end_nodes.contains(&node)));
        let winners = if vertices.iter().all(Option::is_some) {
            vertices.into_iter().flatten().collect()
        } else {
            Vec::new()
        };
        entries.push(SmallDEntry {
            d,
            best_value: result.best_value,
            argmax_set: result.argmax_set,
            winners,
            passed,
        });
    }
    Ok(SmallDReport { end_nodes, entries })
}

/// How the loss of a perturbation is spread over the other nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossScheme {
    Uniform,
    Concentrated(NodeId),
}

impl fmt::Display for LossScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossScheme::Uniform => f.write_str("uniform"),
            LossScheme::Concentrated(k) => write!(f, "on-node-{k}"),
        }
    }
}

impl LossScheme {
    pub fn spec(self, n: usize, gain: NodeId) -> Result<PerturbationSpec> {
        match self {
            LossScheme::Uniform => PerturbationSpec::uniform(n, gain),
            LossScheme::Concentrated(k) => PerturbationSpec::concentrated(n, gain, k),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PerturbationRow {
    pub gain_node: NodeId,
    pub scheme: LossScheme,
    pub first_order: f64,
    /// Central difference of the growth rate in `epsilon`.
    pub finite_difference: f64,
}

#[derive(Debug, Clone)]
pub struct DominanceCheck {
    pub winner: NodeId,
    pub other: NodeId,
    /// Scheme used for the winner and the other node, respectively.
    pub schemes: (LossScheme, LossScheme),
    /// Winner gain minus other gain.
    pub margin: f64,
    /// Whether the other node sits on a lower level than the winner.
    pub expect_strict: bool,
}

#[derive(Debug, Clone)]
pub struct PerturbationReport {
    pub most_downstream: Vec<NodeId>,
    pub rows: Vec<PerturbationRow>,
    pub checks: Vec<DominanceCheck>,
}

/// Margin below which two first-order gains count as equal.
pub const GAIN_TIE_TOL: f64 = 1e-12;

impl PerturbationReport {
    pub fn gain(&self, node: NodeId, scheme: LossScheme) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.gain_node == node && r.scheme == scheme)
            .map(|r| r.first_order)
    }

    pub fn dominance_holds(&self) -> bool {
        self.checks.iter().all(|c| c.margin >= -GAIN_TIE_TOL)
    }

    /// Strict dominance over every node on a lower level.
    pub fn strict_dominance_holds(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.expect_strict)
            .all(|c| c.margin > GAIN_TIE_TOL)
    }

    /// Largest relative gap between first-order gains and finite differences.
    /// Gains that vanish exactly are compared on an absolute scale of 1e-6.
    pub fn max_fd_relative_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                (r.first_order - r.finite_difference).abs() / r.first_order.abs().max(1e-6)
            })
            .fold(0.0, f64::max)
    }
}

/// Perturbations of the uniform allocation: gain at each node with every
/// loss scheme, and the comparison of most-downstream gains against the rest.
pub fn verify_uniform_perturbation(net: &StreamNetwork, r_total: f64) -> Result<PerturbationReport> {
    let n = net.n();
    if n < 2 {
        return Err(invalid("perturbations need at least two nodes"));
    }
    let most_downstream = downstream_end_nodes(net).most_downstream;
    let mut rows = Vec::new();
    for i in (0..n).map(NodeId) {
        let schemes = std::iter::once(LossScheme::Uniform)
            .chain((0..n).filter(|&k| k != i.0).map(|k| LossScheme::Concentrated(NodeId(k))));
        for scheme in schemes {
            let spec = scheme.spec(n, i)?;
            let first_order = first_order_perturbation(net, &spec, r_total)?;
            let eps = PerturbationSpec::DEFAULT_EPSILON;
            let plus = perturbed_growth_rate(net, &spec, r_total, eps)?;
            let minus = perturbed_growth_rate(net, &spec, r_total, -eps)?;
            rows.push(PerturbationRow {
                gain_node: i,
                scheme,
                first_order,
                finite_difference: (plus - minus) / (2.0 * eps),
            });
        }
    }
    let mut report = PerturbationReport {
        most_downstream: most_downstream.clone(),
        rows,
        checks: Vec::new(),
    };
    let q_positive = net.q() > 0.0;
    for &m in &most_downstream {
        for i in (0..n).map(NodeId).filter(|&i| i != m) {
            let expect_strict = q_positive && net.level(i) < net.level(m);
            let mut pairs = vec![
                (LossScheme::Uniform, LossScheme::Uniform),
                (LossScheme::Concentrated(i), LossScheme::Concentrated(m)),
            ];
            pairs.extend(
                (0..n)
                    .filter(|&k| k != i.0 && k != m.0)
                    .map(|k| (LossScheme::Concentrated(NodeId(k)), LossScheme::Concentrated(NodeId(k)))),
            );
            for (sm, si) in pairs {
                let gm = report.gain(m, sm).expect("row exists");
                let gi = report.gain(i, si).expect("row exists");
                report.checks.push(DominanceCheck {
                    winner: m,
                    other: i,
                    schemes: (sm, si),
                    margin: gm - gi,
                    expect_strict,
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct BiomassConcentrationReport {
    pub bound: f64,
    /// Largest `|biomass - bound|` over grid points supported on level 0.
    pub level0_max_deviation: f64,
    /// Largest biomass over grid points with mass on a positive level.
    pub positive_level_max: Option<f64>,
    /// Largest `biomass - bound` over all grid points.
    pub max_excess: f64,
    pub probes: usize,
    pub failures: usize,
    pub q_is_zero: bool,
}

/// Tolerance for attaining the biomass bound.
pub const BOUND_TOL: f64 = 1e-8;

impl BiomassConcentrationReport {
    pub fn passed(&self) -> bool {
        if self.max_excess > BOUND_TOL || self.failures > 0 {
            return false;
        }
        if self.q_is_zero {
            return true;
        }
        self.level0_max_deviation <= BOUND_TOL
            && self
                .positive_level_max
                .is_none_or(|b| b < self.bound - BOUND_TOL)
    }
}

/// Checks that the biomass bound is attained exactly by allocations with no
/// mass on positive levels.
pub fn verify_biomass_concentration(
    net: &StreamNetwork,
    r_total: f64,
    k: f64,
    resolution: usize,
) -> Result<BiomassConcentrationReport> {
    let bound = biomass_upper_bound(net, k)?;
    let grid = simplex_grid(net.n(), r_total, resolution)?;
    let probes = evaluate_grid(grid, |r| biomass_at(net, r, k));
    let levels = net.levels();
    let mut report = BiomassConcentrationReport {
        bound,
        level0_max_deviation: 0.0,
        positive_level_max: None,
        max_excess: f64::NEG_INFINITY,
        probes: probes.len(),
        failures: 0,
        q_is_zero: net.q() == 0.0,
    };
    for p in &probes {
        let Some(b) = p.value else {
            report.failures += 1;
            continue;
        };
        report.max_excess = report.max_excess.max(b - bound);
        let on_level0 = p.allocation.iter().zip(levels).all(|(&r, &l)| r == 0.0 || l == 0);
        if on_level0 {
            report.level0_max_deviation = report.level0_max_deviation.max((b - bound).abs());
        } else {
            report.positive_level_max = Some(report.positive_level_max.map_or(b, |m| m.max(b)));
        }
    }
    Ok(report)
}
