//! Degree and strength distributions, CCDF and heavy-tail exponent fits.

mod render;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netbuild::MentionGraph;

pub use render::{render_degree_plot, render_empty_matrix, render_matrix};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeKind {
    In,
    Out,
    #[default]
    Total,
}

impl FromStr for DegreeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "in" => Ok(DegreeKind::In),
            "out" => Ok(DegreeKind::Out),
            "total" => Ok(DegreeKind::Total),
            other => Err(format!(
                "unknown degree kind {other:?} (expected in, out or total)"
            )),
        }
    }
}

impl fmt::Display for DegreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DegreeKind::In => "in",
            DegreeKind::Out => "out",
            DegreeKind::Total => "total",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("matrix is empty")]
    EmptyMatrix,
}

/// Histogram of node degrees (or strengths when `weighted`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    pub kind: DegreeKind,
    pub weighted: bool,
    pub histogram: BTreeMap<u64, u64>,
    pub n_nodes: u64,
}

impl DegreeDistribution {
    pub fn from_values(
        kind: DegreeKind,
        weighted: bool,
        values: impl IntoIterator<Item = u64>,
    ) -> Self {
        let mut histogram = BTreeMap::new();
        let mut n_nodes = 0;
        for v in values {
            *histogram.entry(v).or_insert(0) += 1;
            n_nodes += 1;
        }
        DegreeDistribution {
            kind,
            weighted,
            histogram,
            n_nodes,
        }
    }

    /// Σ degree × count.
    pub fn degree_sum(&self) -> u64 {
        self.histogram.iter().map(|(d, c)| d * c).sum()
    }

    /// `degree.csv`: `degree,count` ascending.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "degree,count")?;
        for (d, c) in &self.histogram {
            writeln!(w, "{d},{c}")?;
        }
        Ok(())
    }
}

pub fn degree_sequence(
    graph: &MentionGraph,
    kind: DegreeKind,
    weighted: bool,
) -> DegreeDistribution {
    let n = graph.node_count();
    let mut deg = vec![0u64; n];
    for e in graph.edges() {
        let w = if weighted { e.weight } else { 1 };
        if kind != DegreeKind::In {
            deg[e.src] += w;
        }
        if kind != DegreeKind::Out {
            deg[e.dst] += w;
        }
    }
    DegreeDistribution::from_values(kind, weighted, deg)
}

/// `(degree, P(X >= degree))` for every observed degree, ascending.
pub fn ccdf(dist: &DegreeDistribution) -> Result<Vec<(u64, f64)>, StatsError> {
    if dist.n_nodes == 0 {
        return Err(StatsError::EmptyDistribution);
    }
    let n = dist.n_nodes as f64;
    let mut remaining = dist.n_nodes;
    let mut out = Vec::with_capacity(dist.histogram.len());
    for (&d, &c) in &dist.histogram {
        out.push((d, remaining as f64 / n));
        remaining -= c;
    }
    Ok(out)
}

pub fn write_ccdf_csv<W: Write>(points: &[(u64, f64)], mut w: W) -> io::Result<()> {
    writeln!(w, "degree,p")?;
    for (d, p) in points {
        writeln!(w, "{d},{p}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailMethod {
    /// Least squares on log CCDF against log degree.
    #[default]
    Regression,
    /// Discrete-corrected Hill maximum-likelihood estimator.
    Hill,
}

impl FromStr for TailMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "regression" => Ok(TailMethod::Regression),
            "hill" => Ok(TailMethod::Hill),
            other => Err(format!(
                "unknown tail method {other:?} (expected regression or hill)"
            )),
        }
    }
}

pub const MIN_TAIL_POINTS: usize = 5;

/// Tail exponent `alpha` of `P(X >= x) ~ x^-alpha` over degrees `>= xmin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub exponent: f64,
    pub xmin: u64,
    /// Points (regression) or observations (Hill) used by the fit.
    pub n_tail: u64,
    pub r2: f64,
    pub reliable: bool,
    pub method: TailMethod,
}

/// Least-squares fit of `ln p = c - alpha ln x`. Returns `(alpha, r2)`;
/// fewer than two distinct abscissae give `(0, 0)`.
pub fn fit_ccdf_points(points: &[(f64, f64)]) -> (f64, f64) {
    let (alpha, _, r2) = fit_log_log(points);
    (alpha, r2)
}

/// `(alpha, intercept, r2)` of the log-log least-squares line.
pub(crate) fn fit_log_log(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, p)| *x > 0.0 && *p > 0.0)
        .map(|(x, p)| (x.ln(), p.ln()))
        .collect();
    if pts.len() < 2 {
        return (0.0, 0.0, 0.0);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (-slope, my - slope * mx, r2)
}

/// 10th-percentile degree of the histogram, at least 1.
pub fn default_xmin(dist: &DegreeDistribution) -> u64 {
    let threshold = 0.1 * dist.n_nodes as f64;
    let mut cum = 0u64;
    for (&d, &c) in &dist.histogram {
        cum += c;
        if cum as f64 >= threshold {
            return d.max(1);
        }
    }
    1
}

pub fn tail_exponent(
    dist: &DegreeDistribution,
    xmin: Option<u64>,
    method: TailMethod,
) -> Result<TailEstimate, StatsError> {
    let points = ccdf(dist)?;
    let xmin = xmin.unwrap_or_else(|| default_xmin(dist)).max(1);
    let tail: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, _)| *d >= xmin)
        .map(|&(d, p)| (d as f64, p))
        .collect();
    let reliable = tail.len() >= MIN_TAIL_POINTS;
    let (exponent, r2, n_tail) = match method {
        TailMethod::Regression => {
            let (a, r2) = fit_ccdf_points(&tail);
            (a, r2, tail.len() as u64)
        }
        TailMethod::Hill => {
            let base = xmin as f64 - 0.5;
            let (mut n, mut sum) = (0u64, 0.0f64);
            for (&d, &c) in dist.histogram.range(xmin..) {
                n += c;
                sum += c as f64 * (d as f64 / base).ln();
            }
            let a = if sum > 0.0 { n as f64 / sum } else { 0.0 };
            // goodness of fit reported from the log-log CCDF regardless of method
            let (_, r2) = fit_ccdf_points(&tail);
            (a, r2, n)
        }
    };
    Ok(TailEstimate {
        exponent,
        xmin,
        n_tail,
        r2,
        reliable,
        method,
    })
}
