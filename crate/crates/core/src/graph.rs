//! Erdős–Rényi random graphs with an exact edge count.
//!
//! Networks are built as G(N, M) with `M = round(<k> N / 2)`, so the realised
//! mean degree equals the target up to rounding. Adjacency is stored in CSR
//! form: `neighbors[offsets[i]..offsets[i + 1]]` are the neighbours of `i`,
//! sorted ascending.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    n: usize,
    edges: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    mean_degree_target: f64,
}

/// Number of edges a G(N, M) network with this mean degree carries.
pub fn edge_count_for(n: usize, mean_degree: f64) -> usize {
    (mean_degree * n as f64 / 2.0).round() as usize
}

fn max_edges(n: usize) -> usize {
    n * (n - 1) / 2
}

fn pair_key(a: u32, b: u32) -> u64 {
    ((a as u64) << 32) | b as u64
}

fn random_pair<R: Rng>(rng: &mut R, n: usize) -> (u32, u32) {
    loop {
        let a = rng.random_range(0..n as u32);
        let b = rng.random_range(0..n as u32);
        if a != b {
            return (a.min(b), a.max(b));
        }
    }
}

/// Rejection-samples `count` distinct unordered pairs.
fn sample_distinct_pairs<R: Rng>(rng: &mut R, n: usize, count: usize) -> HashSet<u64> {
    let mut seen = HashSet::with_capacity(count * 2);
    while seen.len() < count {
        let (a, b) = random_pair(rng, n);
        seen.insert(pair_key(a, b));
    }
    seen
}

/// Builds a G(N, M) random graph with `M = round(mean_degree * n / 2)` edges.
///
/// Dense requests (more than half of all pairs) sample the complement instead
/// so rejection never stalls near the complete graph.
pub fn generate_er(n: usize, mean_degree: f64, seed: u64) -> Result<Network> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    if n > u32::MAX as usize {
        return Err(Error::InvalidParameter(format!("n = {n} exceeds u32 node ids")));
    }
    if !(mean_degree > 0.0 && mean_degree <= (n - 1) as f64) {
        return Err(Error::InvalidParameter(format!(
            "mean degree {mean_degree} outside (0, {}]",
            n - 1
        )));
    }
    let target = edge_count_for(n, mean_degree);
    let total = max_edges(n);
    if target > total {
        return Err(Error::InvalidParameter(format!(
            "{target} edges requested but only {total} pairs exist"
        )));
    }

    let mut rng = stream_rng(seed, Stream::Graph);
    let mut edges: Vec<(u32, u32)> = if target * 2 <= total {
        sample_distinct_pairs(&mut rng, n, target)
            .into_iter()
            .map(|k| ((k >> 32) as u32, k as u32))
            .collect()
    } else {
        let excluded = sample_distinct_pairs(&mut rng, n, total - target);
        let mut kept = Vec::with_capacity(target);
        for a in 0..n as u32 {
            for b in a + 1..n as u32 {
                if !excluded.contains(&pair_key(a, b)) {
                    kept.push((a, b));
                }
            }
        }
        kept
    };
    edges.sort_unstable();
    Ok(Network::from_sorted_edges(n, edges, mean_degree))
}

impl Network {
    /// Builds a network from an explicit edge list, rejecting self-loops and
    /// duplicate edges.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut norm = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at node {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range for n = {n}"
                )));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("duplicate edge {:?}", w[0])));
        }
        let mean = if n == 0 {
            0.0
        } else {
            2.0 * norm.len() as f64 / n as f64
        };
        Ok(Self::from_sorted_edges(n, norm, mean))
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<(u32, u32)> = (0..n as u32)
            .flat_map(|a| (a + 1..n as u32).map(move |b| (a, b)))
            .collect();
        Self::from_sorted_edges(n, edges, n.saturating_sub(1) as f64)
    }

    fn from_sorted_edges(n: usize, edges: Vec<(u32, u32)>, mean_degree_target: f64) -> Self {
        let mut degree = vec![0usize; n];
        for &(a, b) in &edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; offsets[n]];
        // Edges are sorted, so each node's list comes out ascending.
        for &(a, b) in &edges {
            neighbors[cursor[a as usize]] = b;
            cursor[a as usize] += 1;
        }
        for &(a, b) in &edges {
            neighbors[cursor[b as usize]] = a;
            cursor[b as usize] += 1;
        }
        for i in 0..n {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Self {
            n,
            edges,
            offsets,
            neighbors,
            mean_degree_target,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn mean_degree_target(&self) -> f64 {
        self.mean_degree_target
    }

    pub fn realized_mean_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn stats(&self) -> NetworkStats {
        NetworkStats {
            edge_count: self.edge_count(),
            realized_mean_degree: self.realized_mean_degree(),
            isolated_nodes: (0..self.n).filter(|&i| self.degree(i) == 0).count(),
        }
    }

    /// Writes one `i j` line per edge, `i < j`, sorted.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for &(a, b) in &self.edges {
            writeln!(out, "{a} {b}")?;
        }
        Ok(())
    }

    /// Reads an edge list in the format written by [`Network::write_edge_list`].
    pub fn read_edge_list<R: BufRead>(n: usize, input: R) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace().map(str::parse::<u32>);
            match (parts.next(), parts.next(), parts.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => edges.push((a, b)),
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "malformed edge on line {}: {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Self::from_edges(n, &edges)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetworkStats {
    pub edge_count: usize,
    pub realized_mean_degree: f64,
    pub isolated_nodes: usize,
}

pub fn degree_histogram(net: &Network) -> BTreeMap<usize, u64> {
    let mut hist = BTreeMap::new();
    for i in 0..net.n() {
        *hist.entry(net.degree(i)).or_insert(0) += 1;
    }
    hist
}

/// Sums several histograms bin-wise.
pub fn pool_histograms<'a, I>(hists: I) -> BTreeMap<usize, u64>
where
    I: IntoIterator<Item = &'a BTreeMap<usize, u64>>,
{
    let mut pooled = BTreeMap::new();
    for h in hists {
        for (&k, &c) in h {
            *pooled.entry(k).or_insert(0) += c;
        }
    }
    pooled
}

pub fn poisson_pmf(k: u64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("Poisson rate must be positive, got {lambda}")));
    }
    let kf = k as f64;
    Ok((kf * lambda.ln() - lambda - ln_gamma(kf + 1.0)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub samples: u64,
    pub sample_mean: f64,
}

impl ChiSquareTest {
    pub fn rejects_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Pearson chi-square goodness of fit of a degree histogram against
/// Poisson(`lambda`).
///
/// Bins are merged from both tails until every bin expects at least five
/// counts; the outermost bins absorb the remaining tail mass, so expected
/// counts sum to the sample size. The rate is given, not estimated, so the
/// test has `bins - 1` degrees of freedom.
pub fn poisson_chi_square(hist: &BTreeMap<usize, u64>, lambda: f64) -> Result<ChiSquareTest> {
    const MIN_EXPECTED: f64 = 5.0;
    let samples: u64 = hist.values().sum();
    if samples == 0 {
        return Err(Error::Empty);
    }
    let total = samples as f64;
    let sample_mean = hist.iter().map(|(&k, &c)| k as f64 * c as f64).sum::<f64>() / total;

    let kmax = (lambda + 20.0 * lambda.sqrt()).ceil() as usize + hist.keys().last().copied().unwrap_or(0);
    let pmf: Vec<f64> = (0..=kmax)
        .map(|k| poisson_pmf(k as u64, lambda))
        .collect::<Result<_>>()?;
    let count = |k: usize| hist.get(&k).copied().unwrap_or(0) as f64;

    // Lower tail bin [0, lo], upper tail bin [hi, inf).
    let mut lo = 0;
    let mut lo_exp = pmf[0] * total;
    let mut lo_obs = count(0);
    while lo_exp < MIN_EXPECTED && lo < kmax {
        lo += 1;
        lo_exp += pmf[lo] * total;
        lo_obs += count(lo);
    }
    let mut hi = kmax;
    let upper_mass = 1.0 - pmf[..kmax].iter().sum::<f64>();
    let mut hi_exp = upper_mass.max(0.0) * total;
    let mut hi_obs: f64 = hist.range(kmax..).map(|(_, &c)| c as f64).sum();
    while hi_exp < MIN_EXPECTED && hi > lo + 1 {
        hi -= 1;
        hi_exp += pmf[hi] * total;
        hi_obs += count(hi);
    }

    let mut cells = vec![(lo_obs, lo_exp)];
    cells.extend((lo + 1..hi).map(|k| (count(k), pmf[k] * total)));
    if hi > lo {
        cells.push((hi_obs, hi_exp));
    }
    if cells.len() < 2 {
        return Err(Error::Degenerate("fewer than two chi-square cells".into()));
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let p_value = ChiSquared::new(dof as f64)
        .map_err(|e| Error::Domain(e.to_string()))?
        .sf(statistic);
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value,
        samples,
        sample_mean,
    })
}
