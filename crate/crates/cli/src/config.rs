use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use streamnet::io::{fmt_f64, fmt_vec, read_network};
use streamnet::network::{canonical_three_node, straight_chain, validate, StreamNetwork};
use streamnet::{Allocation, ThreeNodeKind};

use crate::CliError;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Built-in network (tributary, straight, distributary, chain<N>) or a network file.
    #[arg(long, global = true)]
    pub net: Option<String>,
    /// Diffusion rate.
    #[arg(long, global = true)]
    pub d: Option<f64>,
    /// Drift rate.
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Carrying capacity.
    #[arg(long = "K", global = true)]
    pub k: Option<f64>,
    /// Total resource r = sum of r_i.
    #[arg(long, global = true)]
    pub r_total: Option<f64>,
    /// Explicit allocation, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub alloc: Option<Vec<f64>>,
    /// Simplex grid resolution.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    /// Sign classification tolerance relative to K.
    #[arg(long, global = true)]
    pub sign_tol: Option<f64>,
    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file with any of the fields above; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    net: Option<String>,
    d: Option<f64>,
    q: Option<f64>,
    #[serde(rename = "K")]
    k: Option<f64>,
    r_total: Option<f64>,
    alloc: Option<Vec<f64>>,
    resolution: Option<usize>,
    sign_tol: Option<f64>,
    out: Option<PathBuf>,
}

/// Flags merged over the optional config file.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub net: Option<String>,
    pub d: Option<f64>,
    pub q: Option<f64>,
    pub k: Option<f64>,
    pub r_total: Option<f64>,
    pub alloc: Option<Vec<f64>>,
    pub resolution: Option<usize>,
    pub sign_tol: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        Ok(Self {
            net: args.net.clone().or(file.net),
            d: args.d.or(file.d),
            q: args.q.or(file.q),
            k: args.k.or(file.k),
            r_total: args.r_total.or(file.r_total),
            alloc: args.alloc.clone().or(file.alloc),
            resolution: args.resolution.or(file.resolution),
            sign_tol: args.sign_tol.or(file.sign_tol),
            out: args.out.clone().or(file.out),
        })
    }

    fn rate(&self, name: &str, value: Option<f64>) -> Result<f64, CliError> {
        let v = value.ok_or_else(|| CliError::config(format!("--{name} is required")))?;
        if !v.is_finite() || v < 0.0 {
            return Err(CliError::config(format!("--{name} must be finite and nonnegative")));
        }
        Ok(v)
    }

    /// Network from a file or a built-in name; flags override file rates.
    pub fn network(&self) -> Result<StreamNetwork, CliError> {
        let name = self
            .net
            .as_deref()
            .ok_or_else(|| CliError::config("--net is required"))?;
        let net = if Path::new(name).is_file() {
            let net = read_network(Path::new(name))?;
            let d = self.d.unwrap_or(net.d());
            let q = self.q.unwrap_or(net.q());
            net.with_rates(self.rate("d", Some(d))?, self.rate("q", Some(q))?)?
        } else {
            let d = self.rate("d", self.d)?;
            let q = self.rate("q", self.q)?;
            if let Some(len) = name.strip_prefix("chain") {
                let n: usize = len
                    .parse()
                    .map_err(|_| CliError::config(format!("bad chain length in `{name}`")))?;
                straight_chain(n, d, q)?
            } else {
                let kind: ThreeNodeKind = name.parse().map_err(|_| {
                    CliError::config(format!("`{name}` is neither a file nor a built-in network"))
                })?;
                canonical_three_node(kind, d, q)?
            }
        };
        let report = validate(&net);
        if !report.is_valid() {
            let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            return Err(CliError::config(format!("invalid network: {}", msgs.join("; "))));
        }
        Ok(net)
    }

    pub fn carrying_capacity(&self) -> Result<f64, CliError> {
        match self.k {
            Some(k) if k.is_finite() && k > 0.0 => Ok(k),
            Some(_) => Err(CliError::config("--K must be positive")),
            None => Err(CliError::config("--K is required")),
        }
    }

    pub fn r_total(&self) -> Result<f64, CliError> {
        match (self.r_total, &self.alloc) {
            (Some(r), _) if r.is_finite() && r > 0.0 => Ok(r),
            (Some(_), _) => Err(CliError::config("--r-total must be positive")),
            (None, Some(a)) => Ok(a.iter().sum()),
            (None, None) => Err(CliError::config("--r-total is required")),
        }
    }

    /// Explicit allocation, checked against the network size and `--r-total`.
    pub fn allocation(&self, n: usize) -> Result<Allocation, CliError> {
        let alloc = self
            .alloc
            .clone()
            .ok_or_else(|| CliError::config("--alloc is required"))?;
        if alloc.len() != n {
            return Err(CliError::config(format!(
                "--alloc has {} entries but the network has {n} nodes",
                alloc.len()
            )));
        }
        Ok(match self.r_total {
            Some(total) => Allocation::with_total(alloc, total)?,
            None => Allocation::new(alloc)?,
        })
    }

    /// Parameter echo for output headers.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("net", self.net.clone());
        push("d", self.d.map(fmt_f64));
        push("q", self.q.map(fmt_f64));
        push("K", self.k.map(fmt_f64));
        push("r_total", self.r_total.map(fmt_f64));
        push("alloc", self.alloc.as_deref().map(fmt_vec));
        push("resolution", self.resolution.map(|r| r.to_string()));
        push("sign_tol", self.sign_tol.map(fmt_f64));
        out
    }
}
