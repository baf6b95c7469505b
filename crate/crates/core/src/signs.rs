//! Sign patterns of the equilibrium logistic terms and net flows.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;

use crate::allocation::Allocation;
use crate::dynamics::{positive_equilibrium, Equilibrium, LogisticParams};
use crate::error::{invalid, Result};
use crate::network::{NodeId, StreamNetwork, ThreeNodeKind};
use crate::optimize::simplex_grid;

/// Default classification tolerance, relative to `K`.
pub const SIGN_TOL: f64 = 1e-7;
/// Rates below this fraction of the total count as zero.
pub const ZERO_RATE_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
    Zero,
}

impl Sign {
    /// One-letter code used in CSV files.
    pub fn code(self) -> char {
        match self {
            Sign::Plus => 'P',
            Sign::Minus => 'M',
            Sign::Zero => 'Z',
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
            Sign::Zero => '0',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'P' | '+' => Some(Sign::Plus),
            'M' | '-' => Some(Sign::Minus),
            'Z' | '0' => Some(Sign::Zero),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignPattern {
    pub symbols: Vec<Sign>,
    pub tol: f64,
}

impl SignPattern {
    /// Parses a string over `{P, M, Z}` (or `{+, -, 0}`).
    pub fn parse(s: &str, tol: f64) -> Result<Self> {
        let symbols = s
            .chars()
            .map(|c| Sign::from_code(c).ok_or_else(|| invalid(format!("bad sign symbol {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { symbols, tol })
    }

    /// Compact form, e.g. `PZM`.
    pub fn code(&self) -> String {
        self.symbols.iter().map(|s| s.code()).collect()
    }

    pub fn sign(&self, node: NodeId) -> Sign {
        self.symbols[node.0]
    }

    pub fn is_all_zero(&self) -> bool {
        self.symbols.iter().all(|s| *s == Sign::Zero)
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner: Vec<String> = self.symbols.iter().map(|s| s.symbol().to_string()).collect();
        write!(f, "({})", inner.join(","))
    }
}

/// Sign of `r_i u_i (1 - u_i / K)` at each node.
pub fn sign_pattern(eq: &Equilibrium, params: &LogisticParams, tol: f64) -> SignPattern {
    let k = params.k;
    let zero_rate = ZERO_RATE_REL * params.r_total();
    let symbols = params
        .r
        .iter()
        .zip(eq.u_star.iter())
        .map(|(&r, &u)| {
            if r < zero_rate || (u - k).abs() <= tol * k {
                Sign::Zero
            } else if u < k {
                Sign::Plus
            } else {
                Sign::Minus
            }
        })
        .collect();
    SignPattern { symbols, tol }
}

/// Flows across one downstream edge `up -> down`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFlow {
    pub up: NodeId,
    pub down: NodeId,
    /// `(d + q) u_up`.
    pub flow_down: f64,
    /// `d u_down`.
    pub flow_up: f64,
    pub net: f64,
    pub is_zero: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetFlowReport {
    pub edges: Vec<EdgeFlow>,
    /// Total net inflow at each node; negative means net outflow.
    pub node_inflow: Vec<f64>,
}

pub fn net_flows(eq: &Equilibrium, net: &StreamNetwork, tol: f64) -> Result<NetFlowReport> {
    let oriented = net
        .oriented_edges()
        .ok_or_else(|| invalid("net flows need a leveled network"))?;
    let u = &eq.u_star;
    let (d, q) = (net.d(), net.q());
    let mut node_inflow = vec![0.0; net.n()];
    let edges = oriented
        .into_iter()
        .map(|(i, j)| {
            let flow_down = (d + q) * u[i];
            let flow_up = d * u[j];
            let net_flow = flow_down - flow_up;
            node_inflow[j] += net_flow;
            node_inflow[i] -= net_flow;
            EdgeFlow {
                up: NodeId(i),
                down: NodeId(j),
                flow_down,
                flow_up,
                net: net_flow,
                is_zero: net_flow.abs() <= tol * flow_down.max(flow_up),
            }
        })
        .collect();
    Ok(NetFlowReport { edges, node_inflow })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// A nonzero pattern must contain both `+` and `-`.
    SumRule,
    /// A most-upstream node cannot carry `-`.
    UpstreamMinus,
    /// A most-downstream node cannot carry `+`.
    DownstreamPlus,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::SumRule => "sum-rule",
            Rule::UpstreamMinus => "upstream-minus",
            Rule::DownstreamPlus => "downstream-plus",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityVerdict {
    pub pattern: SignPattern,
    pub admissible: bool,
    pub violated_rules: Vec<Rule>,
}

/// Most-upstream means level 0 and most-downstream means the maximal level.
pub fn check_admissibility(pattern: &SignPattern, net: &StreamNetwork) -> Result<AdmissibilityVerdict> {
    if pattern.symbols.len() != net.n() {
        return Err(invalid("pattern length does not match the network"));
    }
    let mut violated = Vec::new();
    let has = |s| pattern.symbols.contains(&s);
    if !pattern.is_all_zero() && !(has(Sign::Plus) && has(Sign::Minus)) {
        violated.push(Rule::SumRule);
    }
    let max_level = net.max_level();
    let at_level = |level: usize, sign: Sign| {
        (0..net.n()).any(|i| net.levels()[i] == level && pattern.symbols[i] == sign)
    };
    if net.n() > 1 {
        if at_level(0, Sign::Minus) {
            violated.push(Rule::UpstreamMinus);
        }
        if at_level(max_level, Sign::Plus) {
            violated.push(Rule::DownstreamPlus);
        }
    }
    Ok(AdmissibilityVerdict {
        pattern: pattern.clone(),
        admissible: violated.is_empty(),
        violated_rules: violated,
    })
}

/// Patterns shown for the canonical three-node networks, in node order.
pub fn figure_patterns(kind: ThreeNodeKind) -> &'static [&'static str] {
    match kind {
        ThreeNodeKind::Tributary => &["ZZZ", "PZM", "ZPM", "PPM"],
        ThreeNodeKind::Straight => &["ZZZ", "ZPM", "PZM", "PMZ", "PPM", "PMM"],
        ThreeNodeKind::Distributary => &["ZZZ", "PZM", "PMZ", "PMM"],
    }
}

/// One solved grid point.
#[derive(Debug, Clone)]
pub struct SurveyPoint {
    pub r: Vec<f64>,
    pub u_star: Vec<f64>,
    pub pattern: SignPattern,
    /// `|sum_i r_i u_i (1 - u_i / K)|`.
    pub sum_rule_residual: f64,
    pub equilibrium_residual: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Survey {
    /// In grid order.
    pub points: Vec<SurveyPoint>,
    pub failures: Vec<(Vec<f64>, String)>,
}

impl Survey {
    /// Distinct pattern codes, sorted.
    pub fn patterns(&self) -> BTreeSet<String> {
        self.points.iter().map(|p| p.pattern.code()).collect()
    }

    pub fn max_sum_rule_residual(&self) -> f64 {
        self.points.iter().map(|p| p.sum_rule_residual).fold(0.0, f64::max)
    }
}

/// Simplex grid plus every edge midpoint, without duplicates.
pub fn survey_allocations(n: usize, r_total: f64, resolution: usize) -> Result<Vec<Allocation>> {
    let mut points = simplex_grid(n, r_total, resolution)?;
    if resolution % 2 == 1 {
        for i in 0..n {
            for j in i + 1..n {
                let mut r = vec![0.0; n];
                r[i] = r_total / 2.0;
                r[j] = r_total / 2.0;
                points.push(Allocation::new(r)?);
            }
        }
    }
    Ok(points)
}

/// Solves the equilibrium at every survey allocation and classifies it.
pub fn survey_patterns(
    net: &StreamNetwork,
    r_total: f64,
    k: f64,
    resolution: usize,
    tol: f64,
) -> Result<Survey> {
    let allocations = survey_allocations(net.n(), r_total, resolution)?;
    let solved: Vec<_> = allocations
        .into_par_iter()
        .map(|alloc| {
            let r = alloc.to_vec();
            let params = LogisticParams::new(alloc, k)?;
            Ok((r, positive_equilibrium(net, &params).map(|eq| (eq, params))))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut survey = Survey::default();
    for (r, outcome) in solved {
        match outcome {
            Ok((eq, params)) => {
                let sum: f64 = (0..net.n())
                    .map(|i| r[i] * eq.u_star[i] * (1.0 - eq.u_star[i] / k))
                    .sum();
                survey.points.push(SurveyPoint {
                    pattern: sign_pattern(&eq, &params, tol),
                    u_star: eq.u_star.iter().copied().collect(),
                    r,
                    sum_rule_residual: sum.abs(),
                    equilibrium_residual: eq.residual,
                });
            }
            Err(e) => survey.failures.push((r, e.to_string())),
        }
    }
    Ok(survey)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::canonical_three_node;

    fn solve(kind: ThreeNodeKind, r: Vec<f64>, d: f64, q: f64, k: f64) -> (StreamNetwork, Equilibrium, LogisticParams) {
        let net = canonical_three_node(kind, d, q).unwrap();
        let params = LogisticParams::new(Allocation::new(r).unwrap(), k).unwrap();
        let eq = positive_equilibrium(&net, &params).unwrap();
        (net, eq, params)
    }

    #[test]
    fn closed_form_equilibria_are_all_zero() {
        let (_, eq, p) = solve(ThreeNodeKind::Straight, vec![5.0, 0.0, 0.0], 0.1, 0.3, 3.0);
        assert_eq!(sign_pattern(&eq, &p, SIGN_TOL).code(), "ZZZ");
        let (_, eq, p) = solve(ThreeNodeKind::Tributary, vec![0.0, 0.0, 5.0], 0.1, 0.3, 3.0);
        assert_eq!(sign_pattern(&eq, &p, SIGN_TOL).code(), "ZZZ");
    }

    #[test]
    fn straight_split_downstream_is_in_figure_set() {
        let (net, eq, p) = solve(ThreeNodeKind::Straight, vec![0.0, 2.5, 2.5], 0.1, 0.3, 3.0);
        let pattern = sign_pattern(&eq, &p, SIGN_TOL);
        assert!(figure_patterns(ThreeNodeKind::Straight).contains(&pattern.code().as_str()));
        assert!(check_admissibility(&pattern, &net).unwrap().admissible);
    }

    #[test]
    fn straight_upstream_flows_balance() {
        let (net, eq, _) = solve(ThreeNodeKind::Straight, vec![5.0, 0.0, 0.0], 0.1, 0.3, 3.0);
        let flows = net_flows(&eq, &net, SIGN_TOL).unwrap();
        assert_eq!(flows.edges.len(), 2);
        assert!(flows.edges.iter().all(|e| e.is_zero));
    }

    #[test]
    fn signs_agree_with_net_inflow() {
        let (net, eq, p) = solve(ThreeNodeKind::Straight, vec![1.0, 3.0, 1.0], 0.2, 0.5, 2.0);
        let pattern = sign_pattern(&eq, &p, SIGN_TOL);
        let flows = net_flows(&eq, &net, SIGN_TOL).unwrap();
        for (s, inflow) in pattern.symbols.iter().zip(&flows.node_inflow) {
            match s {
                Sign::Minus => assert!(*inflow > 0.0),
                Sign::Plus => assert!(*inflow < 0.0),
                Sign::Zero => {}
            }
        }
    }

    #[test]
    fn sign_rules() {
        let trib = canonical_three_node(ThreeNodeKind::Tributary, 1.0, 1.0).unwrap();
        let dist = canonical_three_node(ThreeNodeKind::Distributary, 1.0, 1.0).unwrap();
        let v = check_admissibility(&SignPattern::parse("MPZ", SIGN_TOL).unwrap(), &trib).unwrap();
        assert_eq!(v.violated_rules, vec![Rule::UpstreamMinus]);
        let v = check_admissibility(&SignPattern::parse("0+-", SIGN_TOL).unwrap(), &dist).unwrap();
        assert_eq!(v.violated_rules, vec![Rule::DownstreamPlus]);
        let v = check_admissibility(&SignPattern::parse("ZZZ", SIGN_TOL).unwrap(), &dist).unwrap();
        assert!(v.admissible);
        let v = check_admissibility(&SignPattern::parse("PZZ", SIGN_TOL).unwrap(), &dist).unwrap();
        assert_eq!(v.violated_rules, vec![Rule::SumRule]);
        assert!(SignPattern::parse("PX", SIGN_TOL).is_err());
    }

    #[test]
    fn figure_sets_pass_the_rules() {
        for kind in ThreeNodeKind::ALL {
            let net = canonical_three_node(kind, 1.0, 1.0).unwrap();
            for code in figure_patterns(kind) {
                let p = SignPattern::parse(code, SIGN_TOL).unwrap();
                assert!(check_admissibility(&p, &net).unwrap().admissible, "{kind} {code}");
            }
        }
    }

    #[test]
    fn display_and_code() {
        let p = SignPattern::parse("PMZ", SIGN_TOL).unwrap();
        assert_eq!(p.to_string(), "(+,-,0)");
        assert_eq!(p.code(), "PMZ");
    }

    #[test]
    fn odd_resolution_adds_midpoints() {
        assert_eq!(survey_allocations(3, 1.0, 3).unwrap().len(), 10 + 3);
        assert_eq!(survey_allocations(3, 1.0, 4).unwrap().len(), 15);
    }
}
