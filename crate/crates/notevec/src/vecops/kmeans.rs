//! Spherical k-means: k-means on unit vectors where fit is cosine
//! similarity to the cluster prototype rather than Euclidean distance.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KmeansParams {
    pub k: usize,
    pub rng_seed: u64,
    pub max_iter: usize,
    /// Stop once the objective improves by less than this between iterations.
    pub tol: f64,
}

impl Default for KmeansParams {
    fn default() -> Self {
        KmeansParams {
            k: 150,
            rng_seed: 84,
            max_iter: 100,
            tol: 1e-9,
        }
    }
}

/// Converged clustering over a row-major matrix.
#[derive(Debug, Clone)]
pub struct KmeansOutcome {
    /// k×dim, every row unit length.
    pub prototypes: Vec<f64>,
    /// Cluster index (0-based) per input row.
    pub assignment: Vec<u32>,
    /// Σ over rows of cos(row, prototype of its cluster).
    pub objective: f64,
    /// Objective after each prototype update; non-decreasing.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Clusters the rows of `data` (row-major, `dim` columns) into `params.k`
/// groups. Rows are unit-normalized internally. Seeding is k-means++ under
/// cosine distance from `rng_seed`; an emptied cluster seizes the point that
/// fits its own prototype worst. Assignment ties go to the lowest cluster id.
pub fn spherical_kmeans(data: &[f64], dim: usize, params: &KmeansParams) -> Result<KmeansOutcome> {
    if dim == 0 {
        return Err(Error::Param("dim must be >= 1".into()));
    }
    if data.len() % dim != 0 {
        return Err(Error::Param(format!(
            "matrix of {} entries is not a multiple of dim {dim}",
            data.len()
        )));
    }
    let n = data.len() / dim;
    let k = params.k;
    if k == 0 {
        return Err(Error::Param("k must be >= 1".into()));
    }
    if k > n {
        return Err(Error::Param(format!("k = {k} exceeds {n} vectors")));
    }

    // Unit-normalize; reject zero rows before they poison the cosines.
    let mut units = vec![0.0; data.len()];
    for i in 0..n {
        let row = &data[i * dim..(i + 1) * dim];
        let norm = dot(row, row).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Domain(format!("zero or non-finite vector at row {i}")));
        }
        for d in 0..dim {
            units[i * dim + d] = row[d] / norm;
        }
    }
    let unit = |i: usize| &units[i * dim..(i + 1) * dim];

    // k-means++ seeding with weight (1 - cos)^2 against the nearest chosen
    // prototype.
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut prototypes = vec![0.0; k * dim];
    let first = rng.random_range(0..n);
    prototypes[..dim].copy_from_slice(unit(first));
    let mut best_dist: Vec<f64> = (0..n)
        .map(|i| 1.0 - dot(unit(i), &prototypes[..dim]))
        .collect();
    for c in 1..k {
        let weights: Vec<f64> = best_dist.iter().map(|d| d * d).collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        prototypes[c * dim..(c + 1) * dim].copy_from_slice(unit(pick));
        for i in 0..n {
            let d = 1.0 - dot(unit(i), unit(pick));
            if d < best_dist[i] {
                best_dist[i] = d;
            }
        }
    }

    let assign = |prototypes: &[f64]| -> Vec<u32> {
        (0..n)
            .map(|i| {
                let mut best = 0u32;
                let mut best_sim = f64::NEG_INFINITY;
                for c in 0..k {
                    let sim = dot(unit(i), &prototypes[c * dim..(c + 1) * dim]);
                    if sim > best_sim {
                        best_sim = sim;
                        best = c as u32;
                    }
                }
                best
            })
            .collect()
    };

    // Re-home the globally worst-fitting point into each empty cluster,
    // lowest cluster id first, never draining a cluster below one member.
    let repair_empties = |assignment: &mut Vec<u32>, prototypes: &[f64]| {
        let mut counts = vec![0usize; k];
        for &a in assignment.iter() {
            counts[a as usize] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut worst: Option<(usize, f64)> = None;
            for i in 0..n {
                let home = assignment[i] as usize;
                if counts[home] < 2 {
                    continue;
                }
                let sim = dot(unit(i), &prototypes[home * dim..(home + 1) * dim]);
                if worst.is_none_or(|(_, s)| sim < s) {
                    worst = Some((i, sim));
                }
            }
            if let Some((i, _)) = worst {
                counts[assignment[i] as usize] -= 1;
                assignment[i] = c as u32;
                counts[c] = 1;
            }
        }
    };

    let recompute = |assignment: &[u32], prototypes: &mut Vec<f64>| {
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignment[i] as usize;
            counts[c] += 1;
            for d in 0..dim {
                sums[c * dim + d] += units[i * dim + d];
            }
        }
        for c in 0..k {
            let row = &mut sums[c * dim..(c + 1) * dim];
            let norm = dot(row, row).sqrt();
            if counts[c] == 0 || norm < 1e-12 {
                // members cancelled out; keep the previous prototype
                row.copy_from_slice(&prototypes[c * dim..(c + 1) * dim]);
            } else {
                for x in row.iter_mut() {
                    *x /= norm;
                }
            }
        }
        *prototypes = sums;
    };

    let objective = |assignment: &[u32], prototypes: &[f64]| -> f64 {
        (0..n)
            .map(|i| {
                let c = assignment[i] as usize;
                dot(unit(i), &prototypes[c * dim..(c + 1) * dim])
            })
            .sum()
    };

    let mut assignment = assign(&prototypes);
    repair_empties(&mut assignment, &prototypes);
    recompute(&assignment, &mut prototypes);
    let mut trace = vec![objective(&assignment, &prototypes)];
    let mut iterations = 1;

    while iterations < params.max_iter {
        let mut next = assign(&prototypes);
        repair_empties(&mut next, &prototypes);
        if next == assignment {
            break;
        }
        assignment = next;
        recompute(&assignment, &mut prototypes);
        let obj = objective(&assignment, &prototypes);
        let prev = *trace.last().unwrap();
        debug_assert!(obj >= prev - 1e-9, "objective regressed: {prev} -> {obj}");
        trace.push(obj);
        iterations += 1;
        if obj - prev < params.tol {
            break;
        }
    }

    let objective = *trace.last().unwrap();
    Ok(KmeansOutcome {
        prototypes,
        assignment,
        objective,
        objective_trace: trace,
        iterations,
    })
}
