//! Bottom-up agglomerative clustering with a distance threshold.
//!
//! Pairwise Euclidean distances feed a Lance-Williams update for the chosen
//! linkage criterion. Merging repeats while the minimum linkage distance is
//! at or below the threshold; ties pick the lexicographically lowest pair of
//! cluster slots, and a cluster's slot is the minimum original index of its
//! members, so the whole procedure is deterministic given input order.
//!
//! Distance storage is O(n²), capped by `max_points` with an explicit error
//! beyond it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("no points to cluster")]
    Empty,
    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("{n} points exceed the configured limit of {max} (O(n^2) distance storage)")]
    TooManyPoints { n: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Ward,
    Single,
    Complete,
    Average,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub linkage: Linkage,
    /// Merging stops once the minimum linkage distance exceeds this.
    pub threshold: f64,
    pub max_points: usize,
    /// Unit-normalize points before computing distances.
    pub normalize: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            linkage: Linkage::Ward,
            threshold: 2.0,
            max_points: 25_000,
            normalize: false,
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Condensed upper-triangle distance matrix over n slots.
struct Condensed {
    n: usize,
    data: Vec<f64>,
}

impl Condensed {
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        if i < j {
            self.data[self.index(i, j)]
        } else {
            self.data[self.index(j, i)]
        }
    }

    fn set(&mut self, i: usize, j: usize, value: f64) {
        let idx = if i < j { self.index(i, j) } else { self.index(j, i) };
        self.data[idx] = value;
    }
}

/// Clusters `points` and returns the partition as lists of original point
/// indices (members ascending, clusters ordered by first member).
pub fn cluster_points(
    points: &[Vec<f64>],
    config: &ClusterConfig,
) -> Result<Vec<Vec<usize>>, ClusterError> {
    if points.is_empty() {
        return Err(ClusterError::Empty);
    }
    if points.len() > config.max_points {
        return Err(ClusterError::TooManyPoints { n: points.len(), max: config.max_points });
    }
    let dim = points[0].len();
    for (index, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(ClusterError::DimensionMismatch { index, expected: dim, got: p.len() });
        }
    }
    let normalized: Vec<Vec<f64>>;
    let points: &[Vec<f64>] = if config.normalize {
        normalized = points
            .iter()
            .map(|p| {
                let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    p.iter().map(|v| v / norm).collect()
                } else {
                    p.clone()
                }
            })
            .collect();
        &normalized
    } else {
        points
    };

    let n = points.len();
    let mut distances = Condensed { n, data: vec![0.0; n * (n - 1) / 2] };
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(&points[i], &points[j]);
            distances.set(i, j, d);
        }
    }

    let mut active: Vec<bool> = vec![true; n];
    let mut sizes: Vec<usize> = vec![1; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    // per-slot nearest neighbour cache: (distance, other slot)
    let mut nearest: Vec<Option<(f64, usize)>> = vec![None; n];

    let row_min = |distances: &Condensed, active: &[bool], i: usize| -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if j == i || !active[j] {
                continue;
            }
            let d = distances.get(i, j);
            match best {
                Some((bd, bj)) if d > bd || (d == bd && j > bj) => {}
                _ => best = Some((d, j)),
            }
        }
        best
    };

    for i in 0..n {
        nearest[i] = row_min(&distances, &active, i);
    }

    loop {
        // global best pair by (distance, low slot, high slot)
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            if let Some((d, j)) = nearest[i] {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                match best {
                    Some((bd, ba, bb))
                        if d > bd || (d == bd && (a, b) >= (ba, bb)) => {}
                    _ => best = Some((d, a, b)),
                }
            }
        }
        let Some((d, a, b)) = best else {
            break; // single active cluster left
        };
        if d > config.threshold {
            break;
        }

        // merge b into a
        let (size_a, size_b) = (sizes[a] as f64, sizes[b] as f64);
        let d_ab = distances.get(a, b);
        active[b] = false;
        nearest[b] = None;
        sizes[a] += sizes[b];
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);

        for k in 0..n {
            if !active[k] || k == a {
                continue;
            }
            let d_ak = distances.get(a, k);
            let d_bk = distances.get(b, k);
            let size_k = sizes[k] as f64;
            let updated = match config.linkage {
                Linkage::Single => d_ak.min(d_bk),
                Linkage::Complete => d_ak.max(d_bk),
                Linkage::Average => (size_a * d_ak + size_b * d_bk) / (size_a + size_b),
                Linkage::Ward => {
                    let total = size_a + size_b + size_k;
                    let value = ((size_a + size_k) * d_ak * d_ak
                        + (size_b + size_k) * d_bk * d_bk
                        - size_k * d_ab * d_ab)
                        / total;
                    value.max(0.0).sqrt()
                }
            };
            distances.set(a, k, updated);
        }

        // refresh caches: slot a changed entirely; other slots may have
        // pointed at a or b, or may now prefer the merged cluster.
        nearest[a] = row_min(&distances, &active, a);
        for k in 0..n {
            if !active[k] || k == a {
                continue;
            }
            match nearest[k] {
                Some((_, j)) if j == a || j == b => {
                    nearest[k] = row_min(&distances, &active, k);
                }
                Some((cached, j)) => {
                    let d_ak = distances.get(a, k);
                    if d_ak < cached || (d_ak == cached && a < j) {
                        nearest[k] = Some((d_ak, a));
                    }
                }
                None => nearest[k] = row_min(&distances, &active, k),
            }
        }
    }

    let mut clusters: Vec<Vec<usize>> = members
        .into_iter()
        .zip(&active)
        .filter(|(_, &is_active)| is_active)
        .map(|(mut m, _)| {
            m.sort_unstable();
            m
        })
        .collect();
    clusters.sort_by_key(|m| m[0]);
    Ok(clusters)
}
