//! Logistic metapopulation dynamics
//!
//! `u_i' = r_i u_i (1 - u_i / K) + sum_j (l_ij u_j - l_ji u_i)`,
//! i.e. `u' = diag(r) u (1 - u / K) + L u`.

use nalgebra::{DMatrix, DVector};

use crate::allocation::Allocation;
use crate::error::{invalid, Error, Result};
use crate::network::{build_connection_matrix, StreamNetwork};
use crate::spectral::perron_flow_vector;

/// Residual target for the positive equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-10;
const NEWTON_MAX_ITERS: usize = 100;
const MAX_HALVINGS: usize = 60;
/// Iterates are floored at this fraction of `K`.
const POSITIVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    pub r: Allocation,
    /// Common carrying capacity.
    pub k: f64,
}

impl LogisticParams {
    pub fn new(r: Allocation, k: f64) -> Result<Self> {
        if !k.is_finite() || k <= 0.0 {
            return Err(invalid(format!("carrying capacity must be positive, got {k}")));
        }
        Ok(Self { r, k })
    }

    pub fn r_total(&self) -> f64 {
        self.r.total()
    }
}

/// Network, rates and carrying capacity assembled for repeated evaluation.
#[derive(Debug, Clone)]
pub struct LogisticSystem {
    l: DMatrix<f64>,
    r: Vec<f64>,
    k: f64,
    rate_scale: f64,
}

impl LogisticSystem {
    pub fn new(net: &StreamNetwork, params: &LogisticParams) -> Result<Self> {
        if params.r.len() != net.n() {
            return Err(invalid(format!(
                "allocation has {} entries, network has {} nodes",
                params.r.len(),
                net.n()
            )));
        }
        let l = build_connection_matrix(net)?.l;
        let max_r = params.r.iter().copied().fold(0.0, f64::max);
        let rate_scale = net.d() + net.q() + max_r;
        Ok(Self {
            l,
            r: params.r.to_vec(),
            k: params.k,
            rate_scale: if rate_scale > 0.0 { rate_scale } else { 1.0 },
        })
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn rhs(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.l * u;
        for i in 0..self.n() {
            out[i] += self.r[i] * u[i] * (1.0 - u[i] / self.k);
        }
        out
    }

    /// Logistic part only: `r_i u_i (1 - u_i / K)`.
    pub fn growth_terms(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.n(),
            (0..self.n()).map(|i| self.r[i] * u[i] * (1.0 - u[i] / self.k)),
        )
    }

    pub fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let mut j = self.l.clone();
        for i in 0..self.n() {
            j[(i, i)] += self.r[i] * (1.0 - 2.0 * u[i] / self.k);
        }
        j
    }

    /// Magnitude of the individual terms of the right-hand side at `u`,
    /// used to recognise the rounding floor of the residual.
    fn term_scale(&self, u: &DVector<f64>) -> f64 {
        let mut scale = 0.0f64;
        for i in 0..self.n() {
            let flux: f64 = (0..self.n()).map(|j| (self.l[(i, j)] * u[j]).abs()).sum();
            let growth = self.r[i] * u[i] * (1.0 + u[i] / self.k);
            scale = scale.max(flux).max(growth);
        }
        scale
    }
}

/// Right-hand side of the system at `u`.
pub fn rhs(u: &DVector<f64>, net: &StreamNetwork, params: &LogisticParams) -> Result<DVector<f64>> {
    if u.len() != net.n() || u.iter().any(|x| !x.is_finite()) {
        return Err(invalid("state must be finite with one entry per node"));
    }
    Ok(LogisticSystem::new(net, params)?.rhs(u))
}

/// Sampled solution of the system.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub total: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub rtol: f64,
    /// Absolute tolerance as a fraction of `K`.
    pub atol_rel_k: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol_rel_k: 1e-12,
            max_steps: 50_000_000,
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper<'a> {
    sys: &'a LogisticSystem,
    rtol: f64,
    atol: f64,
    max_steps: usize,
    steps: usize,
    h: Option<f64>,
}

impl Stepper<'_> {
    fn error_norm(&self, err: &DVector<f64>, y0: &DVector<f64>, y1: &DVector<f64>) -> f64 {
        let n = err.len() as f64;
        let sum: f64 = (0..err.len())
            .map(|i| {
                let sc = self.atol + self.rtol * y0[i].abs().max(y1[i].abs());
                (err[i] / sc).powi(2)
            })
            .sum();
        (sum / n).sqrt()
    }

    fn initial_step(&self, y: &DVector<f64>, f: &DVector<f64>, span: f64) -> f64 {
        let scale = |v: &DVector<f64>| {
            let s: f64 = (0..v.len())
                .map(|i| (v[i] / (self.atol + self.rtol * y[i].abs())).powi(2))
                .sum();
            (s / v.len() as f64).sqrt()
        };
        let (d0, d1) = (scale(y), scale(f));
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(span).min(0.1 / self.sys.rate_scale)
    }

    fn clamp(y: &mut DVector<f64>) {
        y.iter_mut().for_each(|v| *v = v.max(0.0));
    }

    fn check(t: f64, y: &DVector<f64>) -> Result<()> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration {
                t,
                reason: "state became non-finite".into(),
            });
        }
        Ok(())
    }

    /// Classical RK4 with a fixed small step over `[t, t_end]`.
    fn fixed_steps(&mut self, t: &mut f64, y: &mut DVector<f64>, t_end: f64) -> Result<()> {
        let dt_max = 1e-3 / self.sys.rate_scale;
        while *t < t_end {
            let dt = dt_max.min(t_end - *t);
            let k1 = self.sys.rhs(y);
            let k2 = self.sys.rhs(&(&*y + &k1 * (dt / 2.0)));
            let k3 = self.sys.rhs(&(&*y + &k2 * (dt / 2.0)));
            let k4 = self.sys.rhs(&(&*y + &k3 * dt));
            *y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            Self::clamp(y);
            *t = if t_end - *t <= dt { t_end } else { *t + dt };
            Self::check(*t, y)?;
            self.steps += 1;
            if self.steps > self.max_steps {
                return Err(Error::Integration {
                    t: *t,
                    reason: "step budget exhausted".into(),
                });
            }
        }
        Ok(())
    }

    /// Advances `y` from `t` to exactly `t_end`.
    fn advance(&mut self, t: &mut f64, y: &mut DVector<f64>, t_end: f64) -> Result<()> {
        let mut k = vec![self.sys.rhs(y); 7];
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(y, &k[0], t_end - *t),
        };
        let mut rejections = 0;
        while *t < t_end {
            let last = h >= t_end - *t;
            if last {
                h = t_end - *t;
            }
            for s in 1..7 {
                let mut ys = y.clone();
                for (j, kj) in k.iter().enumerate().take(s) {
                    if A[s][j] != 0.0 {
                        ys.axpy(h * A[s][j], kj, 1.0);
                    }
                }
                debug_assert!(C[s] > 0.0);
                k[s] = self.sys.rhs(&ys);
            }
            let mut y_new = y.clone();
            for j in 0..6 {
                if A[6][j] != 0.0 {
                    y_new.axpy(h * A[6][j], &k[j], 1.0);
                }
            }
            let mut err = DVector::zeros(y.len());
            for (j, kj) in k.iter().enumerate() {
                if ERR[j] != 0.0 {
                    err.axpy(h * ERR[j], kj, 1.0);
                }
            }
            let norm = self.error_norm(&err, y, &y_new);
            self.steps += 1;
            if self.steps > self.max_steps {
                return Err(Error::Integration {
                    t: *t,
                    reason: "step budget exhausted".into(),
                });
            }
            if !norm.is_finite() {
                h *= 0.25;
                rejections += 1;
            } else if norm <= 1.0 {
                *t = if last { t_end } else { *t + h };
                let clamped = y_new.iter().any(|v| *v < 0.0);
                *y = y_new;
                Self::check(*t, y)?;
                if clamped {
                    Self::clamp(y);
                    k[0] = self.sys.rhs(y);
                } else {
                    k[0] = k[6].clone();
                }
                rejections = 0;
                let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h *= factor;
                } else {
                    self.h = Some(h * factor);
                }
                continue;
            } else {
                h *= (0.9 * norm.powf(-0.2)).clamp(0.2, 1.0);
                rejections += 1;
            }
            // Stiff-looking behaviour: finish this interval with fixed steps.
            if rejections > 50 || h < 1e-12 * t.abs().max(1.0) {
                self.fixed_steps(t, y, t_end)?;
                self.h = None;
                return Ok(());
            }
        }
        Ok(())
    }
}

fn check_initial(sys: &LogisticSystem, u0: &DVector<f64>) -> Result<()> {
    if u0.len() != sys.n() {
        return Err(invalid("initial state has the wrong length"));
    }
    if u0.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(invalid("initial state must be finite and nonnegative"));
    }
    if u0.iter().all(|v| *v == 0.0) {
        return Err(invalid("initial state must not vanish identically"));
    }
    Ok(())
}

/// Integrates from `times[0]` and records the state at every entry of
/// `times`, which must be strictly increasing.
pub fn integrate_on_grid(
    sys: &LogisticSystem,
    u0: &DVector<f64>,
    times: &[f64],
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    check_initial(sys, u0)?;
    if times.is_empty() || times.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(invalid("sample times must be strictly increasing"));
    }
    let mut stepper = Stepper {
        sys,
        rtol: opts.rtol,
        atol: opts.atol_rel_k * sys.k,
        max_steps: opts.max_steps,
        steps: 0,
        h: None,
    };
    let mut t = times[0];
    let mut y = u0.clone();
    let mut out = Trajectory {
        times: Vec::with_capacity(times.len()),
        states: Vec::with_capacity(times.len()),
        total: Vec::with_capacity(times.len()),
    };
    for &target in times {
        if target > t {
            stepper.advance(&mut t, &mut y, target)?;
        }
        out.times.push(target);
        out.total.push(y.sum());
        out.states.push(y.clone());
    }
    Ok(out)
}

/// Integrates over `[0, t_end]`, sampling `samples + 1` evenly spaced times.
pub fn integrate(
    net: &StreamNetwork,
    params: &LogisticParams,
    u0: &DVector<f64>,
    t_end: f64,
    samples: usize,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    if !t_end.is_finite() || t_end <= 0.0 {
        return Err(invalid("t_end must be positive"));
    }
    if samples == 0 {
        return Err(invalid("need at least one sample interval"));
    }
    let sys = LogisticSystem::new(net, params)?;
    let times: Vec<f64> = (0..=samples)
        .map(|i| t_end * i as f64 / samples as f64)
        .collect();
    integrate_on_grid(&sys, u0, &times, opts)
}

/// Integrates in growing chunks until `||rhs||_inf < rhs_tol`.
/// Returns the final state and time.
pub fn integrate_to_steady_state(
    sys: &LogisticSystem,
    u0: &DVector<f64>,
    rhs_tol: f64,
    t_max: f64,
    opts: &IntegrateOptions,
) -> Result<(DVector<f64>, f64)> {
    check_initial(sys, u0)?;
    let mut stepper = Stepper {
        sys,
        rtol: opts.rtol,
        atol: opts.atol_rel_k * sys.k,
        max_steps: opts.max_steps,
        steps: 0,
        h: None,
    };
    let mut t = 0.0;
    let mut y = u0.clone();
    let mut chunk = 1.0 / sys.rate_scale;
    loop {
        if sys.rhs(&y).amax() < rhs_tol {
            return Ok((y, t));
        }
        if t >= t_max {
            return Err(Error::NoConvergence {
                what: "time integration to steady state",
                iterations: stepper.steps,
                residual: sys.rhs(&y).amax(),
                best: y.iter().copied().collect(),
            });
        }
        let target = (t + chunk).min(t_max);
        stepper.advance(&mut t, &mut y, target)?;
        chunk = (chunk * 1.5).min(100.0 / sys.rate_scale.min(1.0));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumMethod {
    Newton,
    /// Newton failed from the upper solution; time integration was used.
    Integration,
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub u_star: DVector<f64>,
    /// `||rhs(u_star)||_inf`.
    pub residual: f64,
    pub biomass: f64,
    pub method: EquilibriumMethod,
    pub iterations: usize,
    /// `min_i u_i / K`.
    pub positivity_margin: f64,
}

enum NewtonOutcome {
    Converged(DVector<f64>, f64, usize),
    Failed(DVector<f64>, f64, usize),
}

fn newton(sys: &LogisticSystem, start: DVector<f64>) -> NewtonOutcome {
    let floor = POSITIVE_FLOOR * sys.k;
    let mut u = start;
    let mut f = sys.rhs(&u);
    let mut res = f.amax();
    let mut iters = 0;
    while iters < NEWTON_MAX_ITERS {
        let floor_res = 1e-13 * sys.term_scale(&u);
        if res <= floor_res {
            return NewtonOutcome::Converged(u, res, iters);
        }
        iters += 1;
        let Some(step) = sys.jacobian(&u).lu().solve(&(-&f)) else {
            return NewtonOutcome::Failed(u, res, iters);
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = &u + &step * lambda;
            trial.iter_mut().for_each(|v| *v = v.max(floor));
            let f_trial = sys.rhs(&trial);
            let r_trial = f_trial.amax();
            if r_trial < res {
                u = trial;
                f = f_trial;
                res = r_trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // No decrease possible: either at the rounding floor or stuck.
            let floor_res = 1e-12 * sys.term_scale(&u);
            return if res < EQUILIBRIUM_TOL || res <= floor_res {
                NewtonOutcome::Converged(u, res, iters)
            } else {
                NewtonOutcome::Failed(u, res, iters)
            };
        }
    }
    if res < EQUILIBRIUM_TOL {
        NewtonOutcome::Converged(u, res, iters)
    } else {
        NewtonOutcome::Failed(u, res, iters)
    }
}

fn finish(
    u: DVector<f64>,
    residual: f64,
    method: EquilibriumMethod,
    iterations: usize,
    k: f64,
) -> Equilibrium {
    let biomass = u.sum();
    let positivity_margin = u.min() / k;
    Equilibrium {
        u_star: u,
        residual,
        biomass,
        method,
        iterations,
        positivity_margin,
    }
}

/// Upper solution `K v`, with `v` the flow vector (level-0 entries 1).
pub fn upper_solution(net: &StreamNetwork, k: f64) -> Result<DVector<f64>> {
    if net.n() == 1 {
        return Ok(DVector::from_element(1, k));
    }
    Ok(perron_flow_vector(net)? * k)
}

/// The unique positive equilibrium, by damped Newton from the upper
/// solution with a time-integration fallback.
pub fn positive_equilibrium(net: &StreamNetwork, params: &LogisticParams) -> Result<Equilibrium> {
    if net.n() > 1 && net.d() <= 0.0 {
        return Err(invalid("the positive equilibrium needs d > 0"));
    }
    let sys = LogisticSystem::new(net, params)?;
    let start = upper_solution(net, params.k)?;
    equilibrium_from(&sys, start)
}

/// Newton from `start`, which should lie above the equilibrium.
pub fn equilibrium_from(sys: &LogisticSystem, start: DVector<f64>) -> Result<Equilibrium> {
    let (u, res, iters) = match newton(sys, start.clone()) {
        NewtonOutcome::Converged(u, res, iters) => {
            return Ok(finish(u, res, EquilibriumMethod::Newton, iters, sys.k));
        }
        NewtonOutcome::Failed(u, res, iters) => (u, res, iters),
    };
    // Monotone descent from the upper solution, then polish.
    let opts = IntegrateOptions::default();
    let (u_int, _) = integrate_to_steady_state(sys, &start, 1e-8 * sys.k, 1e6 / sys.rate_scale, &opts)
        .map_err(|e| match e {
            Error::NoConvergence { .. } | Error::Integration { .. } => Error::NoConvergence {
                what: "positive equilibrium",
                iterations: iters,
                residual: res,
                best: u.iter().copied().collect(),
            },
            other => other,
        })?;
    match newton(sys, u_int) {
        NewtonOutcome::Converged(u, res, more) => Ok(finish(
            u,
            res,
            EquilibriumMethod::Integration,
            iters + more,
            sys.k,
        )),
        NewtonOutcome::Failed(u, res, more) => Err(Error::NoConvergence {
            what: "positive equilibrium",
            iterations: iters + more,
            residual: res,
            best: u.iter().copied().collect(),
        }),
    }
}

/// Total population at equilibrium.
pub fn network_biomass(eq: &Equilibrium) -> f64 {
    eq.u_star.sum()
}

/// `K sum_i (1 + q/d)^level(i)`.
pub fn biomass_upper_bound(net: &StreamNetwork, k: f64) -> Result<f64> {
    if net.d() <= 0.0 {
        return Err(invalid("the biomass bound needs d > 0"));
    }
    if !k.is_finite() || k <= 0.0 {
        return Err(invalid("carrying capacity must be positive"));
    }
    let ratio = 1.0 + net.q() / net.d();
    Ok(k * net.levels().iter().map(|&l| ratio.powi(l as i32)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{canonical_three_node, straight_chain, NodeId, ThreeNodeKind};

    fn params(r: Vec<f64>, k: f64) -> LogisticParams {
        LogisticParams::new(Allocation::new(r).unwrap(), k).unwrap()
    }

    #[test]
    fn single_node_fixed_point() {
        let net = straight_chain(1, 1.0, 1.0).unwrap();
        let p = params(vec![2.0], 4.0);
        let f = rhs(&DVector::from_element(1, 4.0), &net, &p).unwrap();
        assert_eq!(f[0], 0.0);
        let eq = positive_equilibrium(&net, &p).unwrap();
        assert_eq!(eq.u_star[0], 4.0);
        assert_eq!(network_biomass(&eq), 4.0);
    }

    #[test]
    fn straight_upstream_equilibrium_is_closed_form() {
        let (d, q, k) = (0.1, 0.3, 3.0);
        let net = canonical_three_node(ThreeNodeKind::Straight, d, q).unwrap();
        let p = params(vec![5.0, 0.0, 0.0], k);
        let x = (d + q) / d;
        let expected = DVector::from_vec(vec![k, x * k, x * x * k]);
        assert!(rhs(&expected, &net, &p).unwrap().amax() < 1e-12);
        let eq = positive_equilibrium(&net, &p).unwrap();
        assert!((&eq.u_star - &expected).amax() < 1e-9);
        assert!((network_biomass(&eq) - 63.0).abs() < 1e-9);
    }

    #[test]
    fn tributary_downstream_equilibrium() {
        let (d, q, k) = (0.2, 0.5, 2.0);
        let net = canonical_three_node(ThreeNodeKind::Tributary, d, q).unwrap();
        let eq = positive_equilibrium(&net, &params(vec![0.0, 0.0, 4.0], k)).unwrap();
        let a = d * k / (d + q);
        assert!((eq.u_star[0] - a).abs() < 1e-10);
        assert!((eq.u_star[1] - a).abs() < 1e-10);
        assert!((eq.u_star[2] - k).abs() < 1e-10);
        assert!(eq.residual < EQUILIBRIUM_TOL);
    }

    #[test]
    fn bound_formulas() {
        let (d, q, k) = (0.4, 1.2, 2.5);
        let x = q / d;
        let chain = straight_chain(5, d, q).unwrap();
        let expected: f64 = (0..5).map(|i| (1.0 + x).powi(i)).sum::<f64>() * k;
        assert!((biomass_upper_bound(&chain, k).unwrap() - expected).abs() < 1e-12);
        let flat = straight_chain(5, d, 0.0).unwrap();
        assert_eq!(biomass_upper_bound(&flat, k).unwrap(), 5.0 * k);
        let dist = canonical_three_node(ThreeNodeKind::Distributary, d, q).unwrap();
        assert!((biomass_upper_bound(&dist, k).unwrap() - (3.0 + 2.0 * x) * k).abs() < 1e-12);
        assert!(biomass_upper_bound(&straight_chain(2, 0.0, 1.0).unwrap(), k).is_err());
    }

    #[test]
    fn trajectory_from_equilibrium_stays_put() {
        let net = canonical_three_node(ThreeNodeKind::Distributary, 0.5, 0.5).unwrap();
        let p = params(vec![1.0, 2.0, 0.5], 1.5);
        let eq = positive_equilibrium(&net, &p).unwrap();
        let traj = integrate(&net, &p, &eq.u_star, 50.0, 10, &IntegrateOptions::default()).unwrap();
        for s in &traj.states {
            assert!((s - &eq.u_star).amax() < 1e-8);
        }
    }

    #[test]
    fn integration_rejects_bad_input() {
        let net = canonical_three_node(ThreeNodeKind::Straight, 0.5, 0.5).unwrap();
        let p = params(vec![1.0, 0.0, 0.0], 1.0);
        let opts = IntegrateOptions::default();
        assert!(integrate(&net, &p, &DVector::zeros(3), 1.0, 4, &opts).is_err());
        assert!(integrate(&net, &p, &DVector::from_element(3, -1.0), 1.0, 4, &opts).is_err());
        assert!(integrate(&net, &p, &DVector::from_element(3, 1.0), 0.0, 4, &opts).is_err());
    }

    #[test]
    fn mass_balance_of_movement() {
        let net = canonical_three_node(ThreeNodeKind::Tributary, 0.3, 0.9).unwrap();
        let p = params(vec![1.0, 2.0, 0.5], 2.0);
        let sys = LogisticSystem::new(&net, &p).unwrap();
        let u = DVector::from_vec(vec![0.7, 3.1, 1.9]);
        let total = sys.rhs(&u).sum();
        let growth = sys.growth_terms(&u).sum();
        assert!((total - growth).abs() < 1e-13);
    }

    #[test]
    fn vertex_allocation_for_params() {
        let net = straight_chain(4, 0.5, 0.5).unwrap();
        let alloc = Allocation::vertex(4, NodeId(3), 2.0).unwrap();
        let eq = positive_equilibrium(&net, &LogisticParams::new(alloc, 1.0).unwrap()).unwrap();
        assert!(eq.positivity_margin > 0.0);
    }
}
