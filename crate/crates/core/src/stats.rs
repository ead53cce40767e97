//! Summary statistics and the Mann-Whitney U test.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Above this many observations in the smaller sample the normal
/// approximation is used; at or below it the exact null distribution.
pub const EXACT_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// `x` tends to be larger than `y`.
    Greater,
    /// `x` tends to be smaller than `y`.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// Pairs with `x > y` plus half the tied pairs.
    pub u: f64,
    pub p_value: f64,
    pub method: PValueMethod,
}

fn check_sample(name: &str, s: &[f64]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidInput(format!("sample {name} is empty")));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sample {name} has non-finite values"
        )));
    }
    Ok(())
}

/// Pooled values sorted ascending, grouped into runs of equal values:
/// `(value, count in x, count in y)`.
fn tie_groups(x: &[f64], y: &[f64]) -> Vec<(f64, usize, usize)> {
    let mut pooled: Vec<(f64, bool)> = x
        .iter()
        .map(|&v| (v, true))
        .chain(y.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for (v, from_x) in pooled {
        match groups.last_mut() {
            Some(g) if g.0 == v => {
                if from_x {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => groups.push((v, from_x as usize, (!from_x) as usize)),
        }
    }
    groups
}

/// Twice the U statistic of `x` against `y`, as an integer.
fn doubled_u(groups: &[(f64, usize, usize)]) -> u64 {
    let mut y_below = 0u64;
    let mut total = 0u64;
    for &(_, cx, cy) in groups {
        total += cx as u64 * (2 * y_below + cy as u64);
        y_below += cy as u64;
    }
    total
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

/// Exact null distribution of 2U given the observed tie structure: every
/// way of choosing which `n1` of the pooled observations belong to `x` is
/// equally likely. Index `d` holds the probability that 2U equals `d`.
fn exact_null_doubled(groups: &[(f64, usize, usize)], n1: usize, n2: usize) -> Vec<f64> {
    let max = 2 * n1 * n2;
    // ways[i][d]: assignments of i x-labels so far with running 2U = d
    let mut ways = vec![vec![0.0f64; max + 1]; n1 + 1];
    ways[0][0] = 1.0;
    let mut seen = 0usize;
    for &(_, cx, cy) in groups {
        let size = cx + cy;
        let choose = binomial_row(size);
        let mut next = vec![vec![0.0f64; max + 1]; n1 + 1];
        for (i, row) in ways.iter().enumerate() {
            if row.iter().all(|w| *w == 0.0) {
                continue;
            }
            // y observations strictly below this group
            let y_below = seen - i;
            for c in 0..=size.min(n1 - i) {
                if y_below + (size - c) > n2 {
                    continue;
                }
                let add = c * (2 * y_below + (size - c));
                for (d, &w) in row.iter().enumerate() {
                    if w != 0.0 {
                        next[i + c][d + add] += w * choose[c];
                    }
                }
            }
        }
        ways = next;
        seen += size;
    }
    let total: f64 = ways[n1].iter().sum();
    ways[n1].iter().map(|w| w / total).collect()
}

fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// One-sided Mann-Whitney U test of `x` against `y`.
///
/// For `min(n1, n2) <= 8` the p-value comes from the exact permutation
/// distribution (ties included). Larger samples use the normal
/// approximation with tie-corrected variance and a 0.5 continuity
/// correction.
pub fn mann_whitney_u(x: &[f64], y: &[f64], alternative: Alternative) -> Result<MannWhitney> {
    check_sample("x", x)?;
    check_sample("y", y)?;
    let (n1, n2) = (x.len(), y.len());
    let groups = tie_groups(x, y);
    let u2 = doubled_u(&groups);
    let u = u2 as f64 / 2.0;

    if n1.min(n2) <= EXACT_LIMIT {
        let dist = if n1 <= n2 {
            exact_null_doubled(&groups, n1, n2)
        } else {
            // run over the smaller sample: 2U_x = 2 n1 n2 - 2U_y
            let swapped: Vec<_> = groups.iter().map(|&(v, cx, cy)| (v, cy, cx)).collect();
            let mut d = exact_null_doubled(&swapped, n2, n1);
            d.reverse();
            d
        };
        let u2 = u2 as usize;
        let p: f64 = match alternative {
            Alternative::Greater => dist[u2..].iter().sum(),
            Alternative::Less => dist[..=u2].iter().sum(),
        };
        return Ok(MannWhitney {
            u,
            p_value: p.clamp(f64::MIN_POSITIVE, 1.0),
            method: PValueMethod::Exact,
        });
    }

    let (a, b) = (n1 as f64, n2 as f64);
    let n = a + b;
    let tie_term: f64 = groups
        .iter()
        .map(|&(_, cx, cy)| {
            let t = (cx + cy) as f64;
            t * t * t - t
        })
        .sum();
    let var = a * b / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let mean = a * b / 2.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let sd = var.sqrt();
        let z = match alternative {
            Alternative::Greater => (u - mean - 0.5) / sd,
            Alternative::Less => (mean - u - 0.5) / sd,
        };
        normal_sf(z)
    };
    Ok(MannWhitney {
        u,
        p_value: p.clamp(f64::MIN_POSITIVE, 1.0),
        method: PValueMethod::Normal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub std: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    check_sample("values", values)?;
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n.is_multiple_of(2) {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    } else {
        sorted[n / 2]
    };
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Summary {
        count: n,
        mean,
        median,
        std,
    })
}

/// Pair-counting U, used as the reference definition in tests.
pub fn u_by_pairs(x: &[f64], y: &[f64]) -> f64 {
    let mut u = 0.0;
    for a in x {
        for b in y {
            u += match a.partial_cmp(b) {
                Some(Ordering::Greater) => 1.0,
                Some(Ordering::Equal) => 0.5,
                _ => 0.0,
            };
        }
    }
    u
}
