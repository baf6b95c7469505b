use std::ops::Deref;

use crate::error::{invalid, Result};
use crate::network::NodeId;

/// Relative tolerance on `sum(r) == r_total`.
pub const TOTAL_TOL: f64 = 1e-12;

/// Nonnegative per-node growth rates with a positive total.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    r: Vec<f64>,
}

impl Allocation {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(invalid("allocation is empty"));
        }
        if r.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(invalid("allocation entries must be finite and nonnegative"));
        }
        if r.iter().sum::<f64>() <= 0.0 {
            return Err(invalid("allocation total must be positive"));
        }
        Ok(Self { r })
    }

    /// Like [`Allocation::new`], also checking the total.
    pub fn with_total(r: Vec<f64>, r_total: f64) -> Result<Self> {
        let alloc = Self::new(r)?;
        if (alloc.total() - r_total).abs() > TOTAL_TOL * r_total.abs() {
            return Err(invalid(format!(
                "allocation sums to {}, expected {r_total}",
                alloc.total()
            )));
        }
        Ok(alloc)
    }

    pub fn uniform(n: usize, r_total: f64) -> Result<Self> {
        Self::new(vec![r_total / n as f64; n])
    }

    /// Everything on one node.
    pub fn vertex(n: usize, node: NodeId, r_total: f64) -> Result<Self> {
        if node.0 >= n {
            return Err(invalid("vertex node outside the network"));
        }
        let mut r = vec![0.0; n];
        r[node.0] = r_total;
        Self::new(r)
    }

    pub fn total(&self) -> f64 {
        self.r.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.r
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.r
    }

    /// The node holding all resources, if there is exactly one.
    pub fn vertex_node(&self) -> Option<NodeId> {
        let mut support = self.r.iter().enumerate().filter(|(_, &x)| x > 0.0);
        let first = support.next()?;
        support.next().is_none().then_some(NodeId(first.0))
    }
}

impl Deref for Allocation {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.r
    }
}
