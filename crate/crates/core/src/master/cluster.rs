//! Cluster sizing and the offline windowed clustering of a set of finish times.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lagrange::WorkerId;

/// Workers of one cluster and the number of coded products it carries.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlannedCluster {
    pub members: Vec<WorkerId>,
    pub d: usize,
    /// Worker results needed before interpolation can run.
    pub required: usize,
}

impl PlannedCluster {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Members beyond those whose results are needed.
    pub fn extras(&self) -> usize {
        self.members.len() - self.required
    }
}

/// An ordered list of clusters; the first one carries the shared randomness.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterPlan {
    pub clusters: Vec<PlannedCluster>,
}

impl ClusterPlan {
    /// Builds a plan from explicit member groups, sizing each cluster with
    /// [`compute_d`] and an optional cap on `d`.
    pub fn from_groups(groups: &[Vec<WorkerId>], n: usize, z: usize, max_d: Option<usize>) -> Result<Self> {
        let mut seen = alloc::vec![false; n];
        let mut clusters = Vec::with_capacity(groups.len());
        for (idx, g) in groups.iter().enumerate() {
            for &w in g {
                if w >= n || seen[w] {
                    return Err(Error::InvalidArgument(format!(
                        "worker {w} is out of range or appears twice in the cluster plan"
                    )));
                }
                seen[w] = true;
            }
            let u = idx + 1;
            let mut d = compute_d(g.len(), u, z)?;
            if let Some(cap) = max_d {
                d = d.min(cap);
            }
            clusters.push(PlannedCluster {
                members: g.clone(),
                d,
                required: required_results(d, u, z),
            });
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument(
                "cluster plan does not cover every worker".into(),
            ));
        }
        Ok(Self { clusters })
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Index (zero-based) of the cluster holding `worker`.
    pub fn cluster_of(&self, worker: WorkerId) -> Option<usize> {
        self.clusters.iter().position(|c| c.members.contains(&worker))
    }
}

/// Smallest admissible size of cluster `u` (one-based).
pub fn min_cluster_size(u: usize, z: usize) -> usize {
    if u == 1 {
        2 * z + 1
    } else {
        z + 1
    }
}

/// Results needed from workers: `2d + 2z - 1` for the first cluster, `2d + z - 1`
/// for later ones (the other `z` evaluations are shared).
pub fn required_results(d: usize, u: usize, z: usize) -> usize {
    if u == 1 {
        2 * d + 2 * z - 1
    } else {
        2 * d + z - 1
    }
}

fn base(u: usize, z: usize) -> usize {
    required_results(0, u, z)
}

/// Number of coded products a cluster of `n_u` workers can carry.
pub fn compute_d(n_u: usize, u: usize, z: usize) -> Result<usize> {
    if u == 0 || z == 0 {
        return Err(Error::InvalidArgument("cluster index and z are one-based".into()));
    }
    if n_u < min_cluster_size(u, z) {
        return Err(Error::Infeasible(format!(
            "cluster {u} has {n_u} workers, needs at least {}",
            min_cluster_size(u, z)
        )));
    }
    Ok((n_u - base(u, z)) / 2)
}

/// Largest `(size, d)` with `size <= available` and `d <= max_d`.
pub(crate) fn fit_cluster(available: usize, u: usize, z: usize, max_d: Option<usize>) -> Option<(usize, usize)> {
    let mut d = compute_d(available, u, z).ok()?;
    if let Some(cap) = max_d {
        d = d.min(cap.max(1));
    }
    Some((required_results(d, u, z), d))
}

/// Greedy clustering of known finish times with window `delta`.
///
/// Workers are taken in `(time, id)` order. Each cluster starts at the
/// earliest remaining worker and takes everyone finishing within `delta`,
/// widened to the minimum size when short. A worker that would break the
/// parity of `n_u` is moved to the next cluster, and a trailing remainder too
/// small to form a cluster joins the previous one.
pub fn cluster_workers(times: &[(WorkerId, f64)], delta: f64, z: usize) -> Result<ClusterPlan> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("window must be positive, got {delta}")));
    }
    if z == 0 {
        return Err(Error::InvalidArgument("z must be at least 1".into()));
    }
    let n = times.len();
    if n < 2 * z + 1 {
        return Err(Error::Infeasible(format!(
            "{n} workers cannot form a first cluster for z = {z}"
        )));
    }
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let mut groups: Vec<Vec<WorkerId>> = Vec::new();
    let mut idx = 0;
    while idx < n {
        let u = groups.len() + 1;
        let min = min_cluster_size(u, z);
        if n - idx < min {
            // u >= 2 here: the first cluster always fits
            let last = groups.last_mut().expect("first cluster exists");
            last.extend(sorted[idx..].iter().map(|w| w.0));
            break;
        }
        let close = sorted[idx].1 + delta;
        let mut end = idx + sorted[idx..].iter().take_while(|w| w.1 <= close).count();
        end = end.max(idx + min).min(n);
        if (end - idx - base(u, z)) % 2 == 1 && end < n {
            end -= 1;
        }
        let rest = n - end;
        if rest > 0 && rest < z + 1 {
            end = n;
        }
        groups.push(sorted[idx..end].iter().map(|w| w.0).collect());
        idx = end;
    }

    let mut clusters = Vec::with_capacity(groups.len());
    for (i, members) in groups.into_iter().enumerate() {
        let u = i + 1;
        let d = compute_d(members.len(), u, z)?;
        clusters.push(PlannedCluster {
            required: required_results(d, u, z),
            members,
            d,
        });
    }
    Ok(ClusterPlan { clusters })
}
