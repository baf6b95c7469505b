//! Metapopulation growth rate: the spectral bound of `J = L + diag(r)`.
//!
//! `J` is essentially nonnegative, so with `c = 1 + max |J_ii|` the matrix
//! `B = J + cI` is nonnegative with a positive diagonal. When `J` is
//! irreducible, `B` is primitive and its Perron root is `s(J) + c`.
//!
//! The Perron root is computed in two phases. A shifted power iteration
//! gives a positive warm start; it is then polished by inverse iteration
//! whose shift is the Collatz–Wielandt upper bound `max_i (Bx)_i / x_i`.
//! That shift is never below the Perron root, so the iteration cannot lock
//! onto another eigenvalue, and the lower bound `min_i (Bx)_i / x_i`
//! brackets the answer. The polish matters when the spectral gap is tiny,
//! e.g. at very small diffusion, where power iteration alone stalls.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::network::{
    build_connection_matrix, is_irreducible, validate, ConnectionMatrix, NodeId, StreamNetwork,
};

const POWER_WARM_START_ITERS: usize = 1_000;
const RAYLEIGH_TOL: f64 = 1e-12;
const POLISH_ITERS: usize = 200;
/// Required bound on `||J v - rho v||_inf` with `sum(v) = 1`, relative to
/// `max(1, max |J_ij|)`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Perron root and positive eigenvector of an essentially nonnegative
/// irreducible matrix.
#[derive(Debug, Clone)]
pub struct PerronSolution {
    pub value: f64,
    /// Positive, normalized to unit sum.
    pub vector: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn collatz_wielandt(b: &DMatrix<f64>, x: &DVector<f64>) -> (f64, f64) {
    let bx = b * x;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..x.len() {
        let ratio = bx[i] / x[i];
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    (lo, hi)
}

fn normalize_sum(x: &mut DVector<f64>) {
    let s = x.sum();
    *x /= s;
}

/// Spectral bound and right Perron vector of `a`.
///
/// Fails with [`Error::Reducible`] when `a` is reducible (n > 1) and with
/// [`Error::InvalidParameter`] if an off-diagonal entry is negative.
pub fn perron_root(a: &DMatrix<f64>) -> Result<PerronSolution> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(invalid("matrix must be square and nonempty"));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    if n == 1 {
        return Ok(PerronSolution {
            value: a[(0, 0)],
            vector: DVector::from_element(1, 1.0),
            iterations: 0,
            residual: 0.0,
        });
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] < 0.0 {
                return Err(invalid("matrix is not essentially nonnegative"));
            }
        }
    }
    if !is_irreducible(a) {
        return Err(Error::Reducible);
    }

    let shift = 1.0 + (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let b = a + DMatrix::identity(n, n) * shift;

    // Warm start: shifted power iteration.
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut rayleigh = f64::NAN;
    let mut iterations = 0;
    for _ in 0..POWER_WARM_START_ITERS {
        iterations += 1;
        let mut y = &b * &x;
        let next = y.dot(&x) / x.dot(&x);
        normalize_sum(&mut y);
        x = y;
        if (next - rayleigh).abs() < RAYLEIGH_TOL * next.abs().max(1.0) {
            break;
        }
        rayleigh = next;
    }

    // Polish: inverse iteration shifted to the Collatz–Wielandt upper bound.
    let (mut lo, mut hi) = collatz_wielandt(&b, &x);
    let mut best_width = hi - lo;
    let mut stalled = 0;
    for _ in 0..POLISH_ITERS {
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        iterations += 1;
        let system = DMatrix::identity(n, n) * hi - &b;
        let Some(mut y) = system.lu().solve(&x) else {
            // Singular: `hi` is the Perron root to working precision.
            break;
        };
        if y.iter().any(|v| !v.is_finite()) {
            break;
        }
        // (hi I - B)^{-1} is positive for hi > rho(B); tiny negatives come
        // from rounding only.
        y.iter_mut().for_each(|v| *v = v.abs().max(f64::MIN_POSITIVE));
        normalize_sum(&mut y);
        let (nlo, nhi) = collatz_wielandt(&b, &y);
        x = y;
        lo = nlo;
        hi = nhi;
        let width = hi - lo;
        if width < best_width {
            best_width = width;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 3 {
                break;
            }
        }
    }

    let bx = &b * &x;
    let value = bx.dot(&x) / x.dot(&x) - shift;
    let residual = (a * &x - &x * value).amax();
    let scale = max_abs(a).max(1.0);
    if residual > RESIDUAL_TOL * scale || x.iter().any(|v| *v <= 0.0) {
        return Err(Error::NoConvergence {
            what: "Perron root",
            iterations,
            residual,
            best: x.iter().copied().collect(),
        });
    }
    Ok(PerronSolution {
        value,
        vector: x,
        iterations,
        residual,
    })
}

/// Right and left Perron vectors of `J`.
#[derive(Debug, Clone)]
pub struct PerronPair {
    /// Right eigenvector, unit sum.
    pub v: DVector<f64>,
    /// Left eigenvector scaled so that `w . v = 1`.
    pub w: DVector<f64>,
}

impl PerronPair {
    /// Eigenvalue sensitivity `d rho / d r_i = w_i v_i`.
    pub fn growth_gradient(&self) -> Vec<f64> {
        self.w.iter().zip(self.v.iter()).map(|(w, v)| w * v).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub rho: f64,
    /// `sum_i theta_i r_i`.
    pub lower_bound: f64,
    /// `max_i r_i`.
    pub upper_bound: f64,
    /// Positive null vector of `L`, unit sum.
    pub theta: DVector<f64>,
    pub perron: PerronPair,
    /// `||J v - rho v||_inf`.
    pub residual: f64,
}

fn check_rates(n: usize, r: &[f64]) -> Result<()> {
    if r.len() != n {
        return Err(invalid(format!(
            "allocation has {} entries, network has {n} nodes",
            r.len()
        )));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(invalid("allocation has non-finite entries"));
    }
    Ok(())
}

/// Positive vector spanning the kernel of `L`, normalized to unit sum.
pub fn null_vector(l: &ConnectionMatrix) -> Result<DVector<f64>> {
    Ok(perron_root(&l.l)?.vector)
}

/// Growth rate `s(L + diag(r))` with bounds and Perron pair.
pub fn growth_rate(l: &ConnectionMatrix, r: &[f64]) -> Result<SpectralReport> {
    let n = l.n();
    check_rates(n, r)?;
    if !is_irreducible(&l.l) {
        return Err(Error::Reducible);
    }
    let j = l.jacobian(r);
    let right = perron_root(&j)?;
    let v = right.vector;

    // For uniform r the all-ones vector is an exact left eigenvector.
    let uniform = r.iter().all(|&x| x == r[0]);
    let w = if uniform {
        DVector::from_element(n, 1.0 / v.sum())
    } else {
        let left = perron_root(&j.transpose())?.vector;
        let scale = left.dot(&v);
        left / scale
    };

    let theta = null_vector(l)?;
    let lower_bound = theta.iter().zip(r).map(|(t, ri)| t * ri).sum();
    let upper_bound = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectralReport {
        rho: right.value,
        lower_bound,
        upper_bound,
        theta,
        perron: PerronPair { v, w },
        residual: right.residual,
    })
}

/// `(sum_i theta_i r_i, max_i r_i)` for a nonnegative nonzero allocation.
pub fn growth_rate_bounds(l: &ConnectionMatrix, r: &[f64]) -> Result<(f64, f64)> {
    check_rates(l.n(), r)?;
    if r.iter().any(|&x| x < 0.0) {
        return Err(invalid("bounds need a nonnegative allocation"));
    }
    if r.iter().all(|&x| x == 0.0) {
        return Err(invalid("bounds need a nonzero allocation"));
    }
    let theta = null_vector(l)?;
    let lower = theta.iter().zip(r).map(|(t, ri)| t * ri).sum();
    let upper = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lower, upper))
}

/// Spectral bound of `mu L + diag(r)`; equals `max_i r_i` at `mu = 0`.
pub fn growth_rate_mu(l: &ConnectionMatrix, r: &[f64], mu: f64) -> Result<f64> {
    check_rates(l.n(), r)?;
    if !mu.is_finite() || mu < 0.0 {
        return Err(invalid(format!("mu must be finite and nonnegative, got {mu}")));
    }
    if mu == 0.0 {
        return Ok(r.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    let scaled = ConnectionMatrix {
        l: &l.l * mu,
        diffusion: l.diffusion.clone(),
        drift: l.drift.clone(),
    };
    Ok(perron_root(&scaled.jacobian(r))?.value)
}

/// Kernel vector of `dD + qQ` with entries `((d + q) / d)^level`; level-0
/// nodes get 1.
pub fn perron_flow_vector(net: &StreamNetwork) -> Result<DVector<f64>> {
    if net.d() <= 0.0 {
        return Err(invalid("the flow vector needs d > 0"));
    }
    let report = validate(net);
    if let Some(v) = report.violations.first() {
        return Err(Error::InvalidNetwork(v.to_string()));
    }
    let ratio = (net.d() + net.q()) / net.d();
    Ok(DVector::from_iterator(
        net.n(),
        net.levels().iter().map(|&l| ratio.powi(l as i32)),
    ))
}

/// Resource shift away from a uniform allocation: `+1` at the gain node,
/// `-loss_weights[j]` elsewhere, with the losses summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub gain_node: NodeId,
    /// One entry per node; zero at the gain node.
    pub loss_weights: Vec<f64>,
    pub epsilon: f64,
}

impl PerturbationSpec {
    pub const DEFAULT_EPSILON: f64 = 1e-5;

    pub fn new(gain_node: NodeId, loss_weights: Vec<f64>, epsilon: f64) -> Result<Self> {
        let n = loss_weights.len();
        if gain_node.0 >= n {
            return Err(invalid("gain node outside the network"));
        }
        if n < 2 {
            return Err(invalid("a perturbation needs at least two nodes"));
        }
        if loss_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("loss weights must be finite and nonnegative"));
        }
        if loss_weights[gain_node.0] != 0.0 {
            return Err(invalid("the gain node cannot also carry a loss"));
        }
        let total: f64 = loss_weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("loss weights sum to {total}, expected 1")));
        }
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(invalid("epsilon must be positive"));
        }
        Ok(Self {
            gain_node,
            loss_weights,
            epsilon,
        })
    }

    /// Loss spread evenly over every other node.
    pub fn uniform(n: usize, gain_node: NodeId) -> Result<Self> {
        if n < 2 {
            return Err(invalid("a perturbation needs at least two nodes"));
        }
        let share = 1.0 / (n - 1) as f64;
        let weights = (0..n)
            .map(|i| if i == gain_node.0 { 0.0 } else { share })
            .collect();
        Self::new(gain_node, weights, Self::DEFAULT_EPSILON)
    }

    /// Whole loss taken from one node.
    pub fn concentrated(n: usize, gain_node: NodeId, loss_node: NodeId) -> Result<Self> {
        if loss_node == gain_node || loss_node.0 >= n {
            return Err(invalid("loss node must differ from the gain node"));
        }
        let weights = (0..n)
            .map(|i| if i == loss_node.0 { 1.0 } else { 0.0 })
            .collect();
        Self::new(gain_node, weights, Self::DEFAULT_EPSILON)
    }

    /// Losses `others[k]` placed on the non-gain nodes in increasing node
    /// order, so `diag(E)` reads `(1, -a, -b)`, `(-a, 1, -b)`, `(-a, -b, 1)`
    /// for gains at nodes 1, 2, 3.
    pub fn positional(n: usize, gain_node: NodeId, others: &[f64]) -> Result<Self> {
        if others.len() + 1 != n {
            return Err(invalid("need one loss weight per non-gain node"));
        }
        let mut it = others.iter();
        let weights = (0..n)
            .map(|i| {
                if i == gain_node.0 {
                    0.0
                } else {
                    *it.next().expect("length checked")
                }
            })
            .collect();
        Self::new(gain_node, weights, Self::DEFAULT_EPSILON)
    }

    /// Diagonal of `E`; traceless with exactly one `+1`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.loss_weights.len())
            .map(|i| {
                if i == self.gain_node.0 {
                    1.0
                } else {
                    -self.loss_weights[i]
                }
            })
            .collect()
    }
}

/// `w^T E v` at the uniform allocation, with `w = (1, ..., 1)` and `v` the
/// flow vector scaled so `w^T v = 1`.
pub fn first_order_perturbation(
    net: &StreamNetwork,
    spec: &PerturbationSpec,
    r_total: f64,
) -> Result<f64> {
    if spec.loss_weights.len() != net.n() {
        return Err(invalid("perturbation size does not match the network"));
    }
    if !r_total.is_finite() || r_total <= 0.0 {
        return Err(invalid("total resource must be positive"));
    }
    let mut v = perron_flow_vector(net)?;
    normalize_sum(&mut v);
    Ok(spec
        .diagonal()
        .iter()
        .zip(v.iter())
        .map(|(e, vi)| e * vi)
        .sum())
}

/// Growth rate at `r_total / n + eps * diag(E)`.
pub fn perturbed_growth_rate(
    net: &StreamNetwork,
    spec: &PerturbationSpec,
    r_total: f64,
    eps: f64,
) -> Result<f64> {
    let n = net.n();
    let base = r_total / n as f64;
    let r: Vec<f64> = spec.diagonal().iter().map(|e| base + eps * e).collect();
    network_growth_rate(net, &r)
}

/// Closed-form growth rate at `d = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroDiffusionRate {
    pub rho: f64,
    /// Smallest node attaining the maximum.
    pub node: NodeId,
}

/// `max_i (r_i - a_i q)` where `a_i` counts the downstream neighbours of `i`.
pub fn growth_rate_zero_diffusion(
    net: &StreamNetwork,
    q: f64,
    r: &[f64],
) -> Result<ZeroDiffusionRate> {
    check_rates(net.n(), r)?;
    let counts = net.downstream_neighbor_counts();
    let mut best = ZeroDiffusionRate {
        rho: f64::NEG_INFINITY,
        node: NodeId(0),
    };
    for (i, (&ri, &ai)) in r.iter().zip(&counts).enumerate() {
        let value = ri - ai as f64 * q;
        if value > best.rho {
            best = ZeroDiffusionRate {
                rho: value,
                node: NodeId(i),
            };
        }
    }
    Ok(best)
}

/// Growth rate of a network; at `d = 0` the reducible case is answered by
/// the closed form.
pub fn network_growth_rate(net: &StreamNetwork, r: &[f64]) -> Result<f64> {
    if net.d() == 0.0 && net.n() > 1 {
        return Ok(growth_rate_zero_diffusion(net, net.q(), r)?.rho);
    }
    let l = build_connection_matrix(net)?;
    Ok(growth_rate(&l, r)?.rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{canonical_three_node, straight_chain, ThreeNodeKind};

    fn matrix(net: &StreamNetwork) -> ConnectionMatrix {
        build_connection_matrix(net).unwrap()
    }

    #[test]
    fn uniform_allocation_gives_mean() {
        for kind in ThreeNodeKind::ALL {
            let net = canonical_three_node(kind, 0.37, 1.4).unwrap();
            let report = growth_rate(&matrix(&net), &[5.0 / 3.0; 3]).unwrap();
            assert!((report.rho - 5.0 / 3.0).abs() < 1e-12, "{kind}: {}", report.rho);
            assert!((report.perron.w.dot(&report.perron.v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tributary_theta() {
        let (d, q) = (0.6, 1.7);
        let net = canonical_three_node(ThreeNodeKind::Tributary, d, q).unwrap();
        let theta = null_vector(&matrix(&net)).unwrap();
        let s = 3.0 * d + q;
        let expected = [d / s, d / s, (d + q) / s];
        for i in 0..3 {
            assert!((theta[i] - expected[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn straight_lower_bound_formula() {
        let (d, q) = (0.8, 1.3);
        let r = [1.0, 2.5, 0.5];
        let total: f64 = r.iter().sum();
        let net = canonical_three_node(ThreeNodeKind::Straight, d, q).unwrap();
        let (lower, upper) = growth_rate_bounds(&matrix(&net), &r).unwrap();
        let x = q / d;
        let expected = (total + x * r[1] + (2.0 * x + x * x) * r[2]) / (3.0 + 3.0 * x + x * x);
        assert!((lower - expected).abs() < 1e-13);
        assert_eq!(upper, 2.5);
    }

    #[test]
    fn distributary_hand_solved_bound() {
        let net = canonical_three_node(ThreeNodeKind::Distributary, 1.0, 1.0).unwrap();
        let (lower, _) = growth_rate_bounds(&matrix(&net), &[0.0, 0.0, 5.0]).unwrap();
        assert!((lower - 2.0).abs() < 1e-13);
    }

    #[test]
    fn bounds_reject_zero_allocation() {
        let net = canonical_three_node(ThreeNodeKind::Straight, 1.0, 1.0).unwrap();
        assert!(growth_rate_bounds(&matrix(&net), &[0.0; 3]).is_err());
        assert!(growth_rate_bounds(&matrix(&net), &[1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn mu_limits() {
        let net = canonical_three_node(ThreeNodeKind::Tributary, 1.0, 1.0).unwrap();
        let l = matrix(&net);
        let r = [0.0, 0.0, 5.0];
        assert_eq!(growth_rate_mu(&l, &r, 0.0).unwrap(), 5.0);
        let (lower, _) = growth_rate_bounds(&l, &r).unwrap();
        assert!((growth_rate_mu(&l, &r, 1e6).unwrap() - lower).abs() < 1e-3);
        let at_one = growth_rate_mu(&l, &r, 1.0).unwrap();
        assert!((at_one - growth_rate(&l, &r).unwrap().rho).abs() < 1e-13);
        assert!(growth_rate_mu(&l, &r, -1.0).is_err());
    }

    #[test]
    fn zero_diffusion_closed_forms() {
        let q = 0.7;
        let r = [1.0, 2.0, 3.0];
        let trib = canonical_three_node(ThreeNodeKind::Tributary, 1.0, q).unwrap();
        let got = growth_rate_zero_diffusion(&trib, q, &r).unwrap().rho;
        assert_eq!(got, f64::max(f64::max(r[0] - q, r[1] - q), r[2]));
        let dist = canonical_three_node(ThreeNodeKind::Distributary, 1.0, q).unwrap();
        let r = [4.0, 1.0, 1.5];
        let got = growth_rate_zero_diffusion(&dist, q, &r).unwrap();
        assert_eq!(got.rho, f64::max(f64::max(r[0] - 2.0 * q, r[1]), r[2]));
        assert_eq!(got.node, NodeId(0));

        let chain = straight_chain(5, 1.0, 2.0).unwrap();
        let got = growth_rate_zero_diffusion(&chain, 2.0, &[1.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(got.rho, 0.0);
        assert_eq!(got.node, NodeId(4));
    }

    #[test]
    fn zero_diffusion_network_uses_closed_form() {
        let net = canonical_three_node(ThreeNodeKind::Tributary, 0.0, 1.0).unwrap();
        assert_eq!(network_growth_rate(&net, &[0.0, 0.0, 5.0]).unwrap(), 5.0);
        assert!(matches!(
            growth_rate(&matrix(&net), &[0.0, 0.0, 5.0]),
            Err(Error::Reducible)
        ));
    }

    #[test]
    fn flow_vectors() {
        let (d, q) = (0.5, 1.5);
        let x = (d + q) / d;
        let s = perron_flow_vector(&canonical_three_node(ThreeNodeKind::Straight, d, q).unwrap()).unwrap();
        assert_eq!(s.as_slice(), &[1.0, x, x * x]);
        let dist = perron_flow_vector(&canonical_three_node(ThreeNodeKind::Distributary, d, q).unwrap()).unwrap();
        assert_eq!(dist.as_slice(), &[1.0, x, x]);
        let flat = perron_flow_vector(&straight_chain(4, d, 0.0).unwrap()).unwrap();
        assert!(flat.iter().all(|&v| v == 1.0));
        assert!(perron_flow_vector(&straight_chain(4, 0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn perturbation_signs_on_straight() {
        let net = canonical_three_node(ThreeNodeKind::Straight, 0.4, 0.9).unwrap();
        let gains: Vec<f64> = (0..3)
            .map(|g| {
                let spec = PerturbationSpec::positional(3, NodeId(g), &[0.5, 0.5]).unwrap();
                first_order_perturbation(&net, &spec, 5.0).unwrap()
            })
            .collect();
        assert!(gains[0] < 0.0);
        assert!(gains[2] > 0.0);
        assert!(gains[0] < gains[1] && gains[1] < gains[2]);
    }

    #[test]
    fn distributary_downstream_gains_tie() {
        let net = canonical_three_node(ThreeNodeKind::Distributary, 0.4, 0.9).unwrap();
        let g2 = PerturbationSpec::uniform(3, NodeId(1)).unwrap();
        let g3 = PerturbationSpec::uniform(3, NodeId(2)).unwrap();
        let a = first_order_perturbation(&net, &g2, 3.0).unwrap();
        let b = first_order_perturbation(&net, &g3, 3.0).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn perturbation_spec_validation() {
        assert!(PerturbationSpec::new(NodeId(0), vec![0.0, 0.5, 0.4], 1e-5).is_err());
        assert!(PerturbationSpec::new(NodeId(0), vec![0.1, 0.5, 0.4], 1e-5).is_err());
        assert!(PerturbationSpec::new(NodeId(0), vec![0.0, 1.5, -0.5], 1e-5).is_err());
        assert!(PerturbationSpec::concentrated(3, NodeId(1), NodeId(1)).is_err());
        let spec = PerturbationSpec::concentrated(3, NodeId(1), NodeId(2)).unwrap();
        let diag = spec.diagonal();
        assert_eq!(diag, vec![-0.0, 1.0, -1.0]);
        assert_eq!(diag.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn reducible_matrix_is_rejected() {
        let mut a = DMatrix::zeros(2, 2);
        a[(1, 0)] = 1.0;
        assert!(matches!(perron_root(&a), Err(Error::Reducible)));
    }

    #[test]
    fn tiny_gap_is_resolved() {
        // d small makes r_1 - q and r_3 nearly tie on the straight chain.
        let net = canonical_three_node(ThreeNodeKind::Straight, 1e-6, 1.0).unwrap();
        let r = [3.0, 0.0, 2.0];
        let report = growth_rate(&matrix(&net), &r).unwrap();
        assert!(report.residual < 1e-12);
        assert!((report.rho - 2.0).abs() < 1e-5);
    }
}
