//! Fit-the-fit: a greedy CART regression of posterior-mean CSACEs on baseline
//! covariates, with node credible intervals from the member draws.

use std::fmt::Write as _;

use crate::data::TrialDataset;
use crate::error::{Error, Result};
use crate::estimands::{summarize, CsaceDraws, EstimandSummary};
use crate::gibbs::PosteriorStore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartParams {
    pub max_depth: usize,
    pub min_node_size: usize,
    /// Smallest accepted SSE reduction, relative to the root SSE.
    pub min_rel_gain: f64,
}

impl Default for CartParams {
    fn default() -> Self {
        Self {
            max_depth: 3,
            min_node_size: 20,
            min_rel_gain: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSummary {
    /// Mean of member responses.
    pub mean: f64,
    /// 95% interval of the per-draw member average.
    pub cri: (f64, f64),
    pub n_members: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CartNode {
    Leaf {
        summary: NodeSummary,
    },
    Split {
        summary: NodeSummary,
        var: usize,
        /// Members with `x[var] <= cut` go left.
        cut: f64,
        left: usize,
        right: usize,
    },
}

impl CartNode {
    pub fn summary(&self) -> &NodeSummary {
        match self {
            CartNode::Leaf { summary } | CartNode::Split { summary, .. } => summary,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartTree {
    /// Node 0 is the root; children follow their parent.
    pub nodes: Vec<CartNode>,
    pub names: Vec<String>,
}

impl CartTree {
    pub fn root(&self) -> &CartNode {
        &self.nodes[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = &NodeSummary> {
        self.nodes.iter().filter_map(|n| match n {
            CartNode::Leaf { summary } => Some(summary),
            CartNode::Split { .. } => None,
        })
    }

    /// Primary split as `(covariate index, cut)`.
    pub fn primary_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            CartNode::Split { var, cut, .. } => Some((var, cut)),
            CartNode::Leaf { .. } => None,
        }
    }

    fn name(&self, var: usize) -> String {
        self.names.get(var).cloned().unwrap_or_else(|| format!("x{var}"))
    }

    /// One line per node, indented by depth:
    /// `<rule>: mean [lo, hi] (n=…)`.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        self.render_node(0, 0, "all", &mut out);
        out
    }

    fn render_node(&self, k: usize, depth: usize, rule: &str, out: &mut String) {
        let s = self.nodes[k].summary();
        let _ = writeln!(
            out,
            "{}{rule}: {:.3} [{:.3}, {:.3}] (n={})",
            "  ".repeat(depth),
            s.mean,
            s.cri.0,
            s.cri.1,
            s.n_members
        );
        if let CartNode::Split {
            var, cut, left, right, ..
        } = self.nodes[k]
        {
            let name = self.name(var);
            self.render_node(left, depth + 1, &format!("{name} <= {cut:.3}"), out);
            self.render_node(right, depth + 1, &format!("{name} > {cut:.3}"), out);
        }
    }

    /// Graphviz description of the tree.
    pub fn render_dot(&self) -> String {
        let mut out = String::from("digraph cart {\n  node [shape=box];\n");
        for (k, node) in self.nodes.iter().enumerate() {
            let s = node.summary();
            let head = match node {
                CartNode::Split { var, cut, .. } => format!("{} <= {:.3}\\n", self.name(*var), cut),
                CartNode::Leaf { .. } => String::new(),
            };
            let _ = writeln!(
                out,
                "  n{k} [label=\"{head}{:.3} [{:.3}, {:.3}]\\nn={}\"];",
                s.mean, s.cri.0, s.cri.1, s.n_members
            );
            if let CartNode::Split { left, right, .. } = node {
                let _ = writeln!(out, "  n{k} -> n{left} [label=\"yes\"];");
                let _ = writeln!(out, "  n{k} -> n{right} [label=\"no\"];");
            }
        }
        out.push_str("}\n");
        out
    }
}

struct Fitter<'a> {
    y: &'a [f64],
    x: &'a [Vec<f64>],
    draws: &'a CsaceDraws,
    params: CartParams,
    min_gain: f64,
    nodes: Vec<CartNode>,
}

fn sse(y: &[f64], members: &[usize]) -> f64 {
    let n = members.len() as f64;
    let mean = members.iter().map(|&i| y[i]).sum::<f64>() / n;
    members.iter().map(|&i| (y[i] - mean).powi(2)).sum()
}

impl Fitter<'_> {
    fn summary(&self, members: &[usize]) -> NodeSummary {
        let mean = members.iter().map(|&i| self.y[i]).sum::<f64>() / members.len() as f64;
        let mut per_draw = Vec::with_capacity(self.draws.n_draws);
        for d in 0..self.draws.n_draws {
            let (mut s, mut c) = (0.0, 0usize);
            for &i in members {
                let v = self.draws.get(d, i);
                if !v.is_nan() {
                    s += v;
                    c += 1;
                }
            }
            if c > 0 {
                per_draw.push(s / c as f64);
            }
        }
        let cri = if per_draw.is_empty() {
            (mean, mean)
        } else {
            let iv = summarize(&per_draw);
            (iv.lo, iv.hi)
        };
        NodeSummary {
            mean,
            cri,
            n_members: members.len(),
        }
    }

    /// Best `(var, cut, sse_children)` over all admissible splits.
    fn best_split(&self, members: &[usize]) -> Option<(usize, f64, f64)> {
        let m = self.params.min_node_size.max(1);
        let p = self.x.first().map_or(0, Vec::len);
        let mut best: Option<(usize, f64, f64)> = None;
        for var in 0..p {
            let mut order = members.to_vec();
            order.sort_by(|&a, &b| self.x[a][var].total_cmp(&self.x[b][var]).then(a.cmp(&b)));
            let n = order.len();
            let ys: Vec<f64> = order.iter().map(|&i| self.y[i]).collect();
            let mut pre = vec![0.0; n + 1];
            let mut pre2 = vec![0.0; n + 1];
            for k in 0..n {
                pre[k + 1] = pre[k] + ys[k];
                pre2[k + 1] = pre2[k] + ys[k] * ys[k];
            }
            let (tot, tot2) = (pre[n], pre2[n]);
            for k in m..=n.saturating_sub(m) {
                if k == 0 || k == n {
                    continue;
                }
                let lo = self.x[order[k - 1]][var];
                let hi = self.x[order[k]][var];
                if lo == hi {
                    continue;
                }
                let (nl, nr) = (k as f64, (n - k) as f64);
                let sl = pre2[k] - pre[k] * pre[k] / nl;
                let sr = (tot2 - pre2[k]) - (tot - pre[k]) * (tot - pre[k]) / nr;
                let cost = sl.max(0.0) + sr.max(0.0);
                if best.is_none_or(|(_, _, b)| cost < b) {
                    best = Some((var, 0.5 * (lo + hi), cost));
                }
            }
        }
        best
    }

    fn grow(&mut self, members: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let summary = self.summary(&members);
        self.nodes.push(CartNode::Leaf { summary });
        if depth >= self.params.max_depth || members.len() < 2 * self.params.min_node_size {
            return id;
        }
        let Some((var, cut, _)) = self.best_split(&members) else {
            return id;
        };
        let parent_sse = sse(self.y, &members);
        let (l, r): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| self.x[i][var] <= cut);
        // Exact child SSE, so the gain test does not depend on prefix-sum
        // rounding.
        let child_sse = sse(self.y, &l) + sse(self.y, &r);
        let gain = parent_sse - child_sse;
        if !(gain > 0.0) || gain < self.min_gain {
            return id;
        }
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = CartNode::Split {
            summary,
            var,
            cut,
            left,
            right,
        };
        id
    }
}

/// Greedy SSE-minimizing regression tree. `draws` holds the CSACE draws of
/// the same individuals, column `k` matching `responses[k]`.
///
/// Rows are first put in a canonical order, so the fitted tree does not
/// depend on the input order.
pub fn fit_cart(
    responses: &[f64],
    covariates: &[Vec<f64>],
    draws: &CsaceDraws,
    names: &[String],
    params: CartParams,
) -> Result<CartTree> {
    let n = responses.len();
    if covariates.len() != n || draws.individuals.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: covariates.len().min(draws.individuals.len()),
        });
    }
    if n == 0 {
        return Err(Error::Contract("fit-the-fit needs at least one individual".into()));
    }
    let p = covariates[0].len();
    if covariates.iter().any(|r| r.len() != p) {
        return Err(Error::Dimension {
            expected: p,
            got: covariates.iter().map(Vec::len).find(|&l| l != p).unwrap_or(0),
        });
    }
    if responses.iter().chain(covariates.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::Contract("fit-the-fit inputs must be finite".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        covariates[a]
            .iter()
            .zip(&covariates[b])
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(responses[a].total_cmp(&responses[b]))
    });
    let y: Vec<f64> = order.iter().map(|&i| responses[i]).collect();
    let x: Vec<Vec<f64>> = order.iter().map(|&i| covariates[i].clone()).collect();
    let mut values = Vec::with_capacity(draws.values.len());
    for d in 0..draws.n_draws {
        values.extend(order.iter().map(|&k| draws.get(d, k)));
    }
    let canon = CsaceDraws {
        n_draws: draws.n_draws,
        individuals: order.iter().map(|&k| draws.individuals[k]).collect(),
        values,
    };

    let all: Vec<usize> = (0..n).collect();
    let min_gain = params.min_rel_gain * sse(&y, &all);
    let mut fitter = Fitter {
        y: &y,
        x: &x,
        draws: &canon,
        params,
        min_gain,
        nodes: Vec::new(),
    };
    fitter.grow(all, 0);
    Ok(CartTree {
        nodes: fitter.nodes,
        names: names.to_vec(),
    })
}

/// Inputs of the fit-the-fit regression: likely always-survivors with at least
/// one always-survivor draw, their posterior-mean CSACEs and covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeInputs {
    pub responses: Vec<f64>,
    pub covariates: Vec<Vec<f64>>,
    pub draws: CsaceDraws,
    pub names: Vec<String>,
}

impl TreeInputs {
    pub fn from_fit(summary: &EstimandSummary, store: &PosteriorStore, ds: &TrialDataset) -> Self {
        let members: Vec<usize> = (0..ds.n_individuals())
            .filter(|&i| summary.likely_always_survivor[i] && summary.csace[i].is_some())
            .collect();
        let responses = members
            .iter()
            .map(|&i| summary.csace[i].as_ref().map_or(f64::NAN, |e| e.summary.mean))
            .collect();
        let covariates = members.iter().map(|&i| ds.individuals[i].covariates.clone()).collect();
        Self {
            responses,
            covariates,
            draws: CsaceDraws::from_store(store, &members),
            names: ds.covariate_names(),
        }
    }

    pub fn fit(&self, params: CartParams) -> Result<CartTree> {
        fit_cart(&self.responses, &self.covariates, &self.draws, &self.names, params)
    }
}
