use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("window {window} exceeds series length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("window must be at least 1")]
    ZeroWindow,
}

/// Trailing-window means; `output[i]` averages `series[i..i + window]`.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>, StatsError> {
    if window == 0 {
        return Err(StatsError::ZeroWindow);
    }
    if window > series.len() {
        return Err(StatsError::WindowTooLarge {
            window,
            len: series.len(),
        });
    }
    Ok(series
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn median(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    Ok(quantile_sorted(&sorted(xs), 0.5))
}

/// Box-plot summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

pub fn quartiles(xs: &[f64]) -> Result<Quartiles, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let s = sorted(xs);
    Ok(Quartiles {
        min: s[0],
        q1: quantile_sorted(&s, 0.25),
        median: quantile_sorted(&s, 0.5),
        q3: quantile_sorted(&s, 0.75),
        max: s[s.len() - 1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub median_a: f64,
    pub median_b: f64,
    /// U of sample a: pairs with `a > b`, ties counted one half.
    pub u: f64,
    pub u_b: f64,
    pub z: f64,
    /// Two-sided.
    pub p_value: f64,
    pub exact: bool,
}

/// Midranks (1-based) of the pooled sample and the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut k = 0;
    while k < order.len() {
        let mut e = k;
        while e + 1 < order.len() && pooled[order[e + 1]] == pooled[order[k]] {
            e += 1;
        }
        let r = (k + e) as f64 / 2.0 + 1.0;
        for &i in &order[k..=e] {
            ranks[i] = r;
        }
        ties.push(e - k + 1);
        k = e + 1;
    }
    (ranks, ties)
}

/// Two-sided exact p-value: permutation distribution of group a's rank sum
/// over all `C(n, n_a)` splits of the pooled midranks.
fn exact_p(ranks: &[f64], n_a: usize, observed_twice_rank_sum: usize) -> f64 {
    // midranks are multiples of 1/2, so doubled ranks are integers
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = {
        let mut d = doubled.clone();
        d.sort_unstable_by(|a, b| b.cmp(a));
        d[..n_a].iter().sum()
    };
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0.0f64; max_sum + 1]; n_a + 1];
    ways[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=n_a).rev() {
            let (lower, upper) = ways.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let total: f64 = ways[n_a].iter().sum();
    let n = ranks.len();
    // mean of the doubled rank sum is n_a (n + 1)
    let centre = (n_a * (n + 1)) as f64;
    let dev = (observed_twice_rank_sum as f64 - centre).abs();
    let extreme: f64 = ways[n_a]
        .iter()
        .enumerate()
        .filter(|&(s, _)| (s as f64 - centre).abs() >= dev - 1e-9)
        .map(|(_, w)| w)
        .sum();
    (extreme / total).min(1.0)
}

/// Mann-Whitney U test with midranks and tie correction. Uses the normal
/// approximation with continuity correction when both samples have at least
/// eight values, exact enumeration otherwise.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<StatsReport, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let (n_a, n_b) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..n_a].iter().sum();
    let u = rank_sum_a - (n_a * (n_a + 1)) as f64 / 2.0;
    let nn = (n_a * n_b) as f64;
    let u_b = nn - u;
    let n = (n_a + n_b) as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let sigma = (nn / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))).sqrt();
    let diff = u - nn / 2.0;
    let z = if sigma > 0.0 && sigma.is_finite() {
        diff.signum() * (diff.abs() - 0.5).max(0.0) / sigma
    } else {
        0.0
    };
    let exact = n_a.min(n_b) < 8;
    let p_value = if exact {
        exact_p(&ranks, n_a, (rank_sum_a * 2.0).round() as usize)
    } else {
        let normal = Normal::standard();
        (2.0 * (1.0 - normal.cdf(z.abs()))).clamp(0.0, 1.0)
    };
    Ok(StatsReport {
        n_a,
        n_b,
        mean_a: mean(a),
        mean_b: mean(b),
        median_a: median(a)?,
        median_b: median(b)?,
        u,
        u_b,
        z,
        p_value,
        exact,
    })
}
