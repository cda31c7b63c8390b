//! ε-entropy estimators on empirical samples.
//!
//! `H'` is the log of the minimum number of ε-balls (centered at sample
//! points) covering all but an ε-fraction of the sample mass; ε serves as
//! both ball radius and mass deficit. The estimator is a greedy
//! max-coverage net with a deterministic lowest-index tie-break; a
//! brute-force minimal cover over small instances serves as its oracle.
//! Balls are closed (`d ≤ ε`), so `eps ≥ diameter` always yields a
//! one-ball cover.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::MetricEval;
use crate::systems::EmpiricalSample;
use crate::transport::{discrete_entropy, lemma3_plan, Lemma3Witness};

/// Row-major bit matrix.
#[derive(Debug, Clone)]
pub struct BitGrid {
    words: Vec<u64>,
    words_per_row: usize,
    rows: usize,
    cols: usize,
}

impl BitGrid {
    pub fn new(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        BitGrid {
            words: vec![0; rows * words_per_row],
            words_per_row,
            rows,
            cols,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = r * self.words_per_row + c / 64;
        let mask = 1u64 << (c % 64);
        if v {
            self.words[w] |= mask;
        } else {
            self.words[w] &= !mask;
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        let w = r * self.words_per_row + c / 64;
        (self.words[w] >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    /// Mutable views of all rows at once (for parallel row fills).
    pub fn par_rows_mut(&mut self) -> rayon::slice::ChunksMut<'_, u64> {
        self.words.par_chunks_mut(self.words_per_row)
    }
}

/// Symmetric ball-membership matrix: bit `(i, j)` says the closed ε-ball
/// at sample point `i` contains sample point `j`.
#[derive(Debug, Clone)]
pub struct BallMatrix {
    pub grid: BitGrid,
    pub eps: f64,
}

impl BallMatrix {
    pub fn from_grid(grid: BitGrid, eps: f64) -> Self {
        BallMatrix { grid, eps }
    }

    /// Pairwise evaluation of the metric over the sample.
    pub fn build(rho: &dyn MetricEval, sample: &EmpiricalSample, eps: f64) -> Result<BallMatrix> {
        let m = sample.m();
        let mut grid = BitGrid::new(m, m);
        let results: Result<Vec<()>> = grid
            .par_rows_mut()
            .enumerate()
            .map(|(i, row)| {
                for j in 0..m {
                    let d = rho.eval(&sample.points[i], &sample.points[j])?;
                    if d <= eps {
                        row[j / 64] |= 1u64 << (j % 64);
                    }
                }
                Ok(())
            })
            .collect();
        results?;
        Ok(BallMatrix { grid, eps })
    }

    pub fn m(&self) -> usize {
        self.grid.rows()
    }
}

/// A greedy ε-net over a sample.
#[derive(Debug, Clone)]
pub struct CoveringNet {
    /// Sample indices of the chosen centers, in pick order.
    pub centers: Vec<usize>,
    pub eps: f64,
    /// Fraction of sample mass within ε of some center.
    pub covered_mass: f64,
    /// `ln(number of centers)`.
    pub ln_k: f64,
}

/// Smallest integer count `c` with `c/m > 1 − eps`.
pub fn coverage_target(m: usize, eps: f64) -> usize {
    ((m as f64 * (1.0 - eps) + 1e-9).floor() as usize + 1).min(m)
}

/// Greedy max-coverage over ball rows until the covered count reaches
/// `need`. Ties break toward the lowest sample index, so nets are
/// deterministic. Lazy evaluation keeps re-scans cheap; gains only shrink
/// as coverage grows, so a re-confirmed top entry is the true argmax.
pub fn greedy_cover(balls: &BallMatrix, need: usize) -> CoveringNet {
    let m = balls.m();
    let words = m.div_ceil(64);
    let mut uncovered = vec![u64::MAX; words];
    if !m.is_multiple_of(64) {
        uncovered[words - 1] = (1u64 << (m % 64)) - 1;
    }

    let gain = |row: &[u64], uncovered: &[u64]| -> u32 {
        row.iter()
            .zip(uncovered)
            .map(|(r, u)| (r & u).count_ones())
            .sum()
    };

    // Max-heap on (gain, lowest index first).
    let mut heap: std::collections::BinaryHeap<(u32, std::cmp::Reverse<usize>)> = (0..m)
        .map(|i| (gain(balls.grid.row(i), &uncovered), std::cmp::Reverse(i)))
        .collect();

    let mut centers = Vec::new();
    let mut covered = 0usize;
    while covered < need {
        let Some((g, std::cmp::Reverse(i))) = heap.pop() else {
            break;
        };
        let actual = gain(balls.grid.row(i), &uncovered);
        if actual < g {
            heap.push((actual, std::cmp::Reverse(i)));
            continue;
        }
        if actual == 0 {
            // every remaining ball covers nothing new; need is unreachable
            break;
        }
        centers.push(i);
        covered += actual as usize;
        for (u, r) in uncovered.iter_mut().zip(balls.grid.row(i)) {
            *u &= !r;
        }
    }

    CoveringNet {
        ln_k: (centers.len().max(1) as f64).ln(),
        covered_mass: covered as f64 / m as f64,
        centers,
        eps: balls.eps,
    }
}

/// Greedy estimate of `H'`: ln of the number of closed ε-balls needed to
/// cover more than `1 − eps` of the sample mass.
pub fn eps_entropy_hprime(
    rho: &dyn MetricEval,
    sample: &EmpiricalSample,
    eps: f64,
) -> Result<CoveringNet> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEps { eps });
    }
    let balls = BallMatrix::build(rho, sample, eps)?;
    Ok(greedy_cover(&balls, coverage_target(sample.m(), eps)))
}

/// Alternative net strategy for sensitivity checks: farthest-first
/// traversal. Starts at index 0, repeatedly adds the sample point
/// farthest from the chosen centers, and stops once the centers' ε-balls
/// cover more than `1 − eps` of the mass. Tends to spread centers rather
/// than minimize their count; comparing its `ln k` against the greedy
/// net's bounds the estimator's strategy dependence.
pub fn farthest_first_net(
    rho: &dyn MetricEval,
    sample: &EmpiricalSample,
    eps: f64,
) -> Result<CoveringNet> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEps { eps });
    }
    let m = sample.m();
    let need = coverage_target(m, eps);
    let mut dist_to_net = vec![f64::INFINITY; m];
    let mut covered = vec![false; m];
    let mut covered_count = 0usize;
    let mut centers = Vec::new();
    let mut next = 0usize; // deterministic start
    loop {
        centers.push(next);
        for j in 0..m {
            let d = rho.eval(&sample.points[next], &sample.points[j])?;
            if d < dist_to_net[j] {
                dist_to_net[j] = d;
            }
            if !covered[j] && d <= eps {
                covered[j] = true;
                covered_count += 1;
            }
        }
        if covered_count >= need {
            break;
        }
        // farthest uncovered point; lowest index on ties
        let far = (0..m)
            .filter(|&j| !covered[j])
            .max_by(|&a, &b| {
                dist_to_net[a]
                    .partial_cmp(&dist_to_net[b])
                    .expect("finite distances")
                    .then(b.cmp(&a))
            })
            .expect("uncovered point exists while below target");
        next = far;
    }
    Ok(CoveringNet {
        ln_k: (centers.len() as f64).ln(),
        covered_mass: covered_count as f64 / m as f64,
        centers,
        eps,
    })
}

/// Exact minimum number of centers by subset enumeration; the oracle for
/// the greedy net on instances of at most 15 points.
pub fn minimal_cover_bruteforce(
    rho: &dyn MetricEval,
    sample: &EmpiricalSample,
    eps: f64,
) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEps { eps });
    }
    let m = sample.m();
    if m > 15 {
        return Err(Error::SizeCap {
            what: "brute-force cover instance",
            actual: m,
            cap: 15,
        });
    }
    let need = coverage_target(m, eps) as u32;
    let mut rows = vec![0u32; m];
    for (i, row) in rows.iter_mut().enumerate() {
        for j in 0..m {
            if rho.eval(&sample.points[i], &sample.points[j])? <= eps {
                *row |= 1 << j;
            }
        }
    }
    // Union over each subset via its lowest set bit.
    let total = 1usize << m;
    let mut union = vec![0u32; total];
    let mut best = m;
    for mask in 1..total {
        let low = mask.trailing_zeros() as usize;
        union[mask] = union[mask & (mask - 1)] | rows[low];
        if union[mask].count_ones() >= need {
            best = best.min(mask.count_ones() as usize);
        }
    }
    Ok(best)
}

/// A certified upper bound on the ε-entropy `H` at scale `(d+1)·ε`.
#[derive(Debug, Clone)]
pub struct HUpperBound {
    /// Entropy of the transported discrete measure; the upper bound itself.
    pub entropy: f64,
    /// The scale `(d+1)·ε` the bound applies to.
    pub scale: f64,
    /// Achieved transport cost of the witnessing plan (< 2ε).
    pub plan_cost: f64,
    /// The greedy net the witness was built from.
    pub net: CoveringNet,
    pub witness: Lemma3Witness,
}

/// Run the greedy net, build the explicit transport plan onto it, and
/// return the entropy of the resulting discrete measure: an upper bound
/// on `H` at scale `(d+1)ε`, certified by the plan's measured cost.
pub fn eps_entropy_h_upper(
    rho: &dyn MetricEval,
    sample: &EmpiricalSample,
    eps: f64,
) -> Result<HUpperBound> {
    let net = eps_entropy_hprime(rho, sample, eps)?;
    let witness = lemma3_plan(sample, &net.centers, eps, rho)?;
    let d = rho.diameter_hint().unwrap_or(1.0);
    Ok(HUpperBound {
        entropy: discrete_entropy(&witness.nu),
        scale: (d + 1.0) * eps,
        plan_cost: witness.cost,
        net,
        witness,
    })
}
