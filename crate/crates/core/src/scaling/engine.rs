//! Bulk pairwise evaluation of iterated metrics over a whole sample.
//!
//! One orbit pass per ordered pair produces the ball-membership matrices
//! of every `(n, ε)` cell at once. Orbit data is precomputed per sample
//! point in a representation chosen from the (system, base metric) pair:
//! bit-packed binary labels for 0/1-valued bases, small-integer cell
//! labels for general cuts, packed word orbits for word metrics, raw
//! coordinates for circle metrics, and a generic point-orbit fallback for
//! everything else. Rows are filled independently (pairs are evaluated
//! twice), so the parallel fill is deterministic and contention-free.

use rayon::prelude::*;

use crate::entropy::{BallMatrix, BitGrid};
use crate::error::{Error, Result};
use crate::metrics::{KernelClass, MetricEval, Mode, Semimetric};
use crate::point::Point;
use crate::systems::{pascal_step, resample_point, rotation_step, EmpiricalSample, SystemKind, SystemSpec};

/// Resample attempts per point before giving up on a full-length orbit.
const MAX_RESAMPLES: usize = 20;

pub(crate) struct CellMatrices {
    /// `schedule.len() × eps.len()` matrices, n-major; `None` marks a gap
    /// (the orbit horizon ended before this n).
    pub per_cell: Vec<Option<BallMatrix>>,
    /// Longest orbit length available for every sample point.
    #[cfg_attr(not(test), allow(dead_code))]
    pub horizon: usize,
    /// The sample actually used (points may have been resampled away from
    /// the excluded set).
    #[cfg_attr(not(test), allow(dead_code))]
    pub sample: EmpiricalSample,
}

enum OrbitData {
    /// Binary label per (point, step), bit-packed.
    LabelBits { grid: BitGrid, scale: f64 },
    /// Small-integer cell label per (point, step).
    LabelCells { cells: Vec<u8>, horizon: usize, scale: f64 },
    /// Packed word per (point, step).
    Words { limbs: Vec<u64>, stride: usize, horizon: usize, valuer: WordValuer },
    /// Circle coordinates; orbits are stepped on the fly per pair.
    Circle { xs: Vec<f64>, alpha: f64, scale: f64 },
    /// Full point orbits; metric evaluated pointwise.
    Generic { orbits: Vec<Vec<Point>>, metric: Semimetric },
}

#[derive(Clone, Copy)]
enum WordValuer {
    Dyadic { scale: f64, depth: usize },
    Hamming { window: usize, scale: f64 },
}

impl WordValuer {
    #[inline]
    fn value(&self, a: &[u64], b: &[u64]) -> f64 {
        match *self {
            WordValuer::Dyadic { scale, depth } => {
                for (w, (x, y)) in a.iter().zip(b).enumerate() {
                    let d = x ^ y;
                    if d != 0 {
                        let idx = w * 64 + d.trailing_zeros() as usize;
                        if idx < depth {
                            return scale * (-((idx + 1) as f64)).exp2();
                        }
                        return 0.0;
                    }
                }
                0.0
            }
            WordValuer::Hamming { window, scale } => {
                let full = window / 64;
                let mut count = 0u32;
                for w in 0..full {
                    count += (a[w] ^ b[w]).count_ones();
                }
                let rem = window % 64;
                if rem > 0 {
                    count += ((a[full] ^ b[full]) & ((1u64 << rem) - 1)).count_ones();
                }
                scale * count as f64 / window as f64
            }
        }
    }
}

/// Build ball matrices for every `(n, ε)` cell of the schedule.
pub(crate) fn build_cell_matrices(
    sys: &SystemSpec,
    base: &Semimetric,
    mode: Mode,
    sample: EmpiricalSample,
    schedule: &[usize],
    eps_grid: &[f64],
) -> Result<CellMatrices> {
    let n_max = *schedule.last().expect("nonempty schedule");
    let m = sample.m();

    // Fail fast on metric/space mismatches (on the observable, which is
    // what every evaluation path compares).
    let probe = sys.observe(&sample.points[0]);
    base.eval(&probe, &probe)?;

    let (data, sample) = build_orbit_data(sys, base, sample, n_max)?;
    let horizon = data.horizon();
    let feasible: Vec<usize> = schedule.iter().copied().filter(|&n| n <= horizon).collect();

    let n_eps = eps_grid.len();
    let cells = feasible.len() * n_eps;
    let words_per_row = m.div_ceil(64);
    let row_span = cells * words_per_row;
    let mut slab = vec![0u64; m * row_span];

    slab.par_chunks_mut(row_span).enumerate().for_each(|(i, row)| {
        fill_row(&data, mode, i, m, &feasible, eps_grid, words_per_row, row);
    });

    // Reassemble the slab into per-cell matrices, n-major over the full
    // schedule with gaps where the horizon ended.
    let mut per_cell: Vec<Option<BallMatrix>> = Vec::with_capacity(schedule.len() * n_eps);
    for (n_idx, &n) in schedule.iter().enumerate() {
        for (e_idx, &eps) in eps_grid.iter().enumerate() {
            if n > horizon {
                per_cell.push(None);
                continue;
            }
            let cell = n_idx * n_eps + e_idx;
            let mut grid = BitGrid::new(m, m);
            for i in 0..m {
                let src = &slab[i * row_span + cell * words_per_row..][..words_per_row];
                grid.row_mut(i).copy_from_slice(src);
            }
            per_cell.push(Some(BallMatrix::from_grid(grid, eps)));
        }
    }

    Ok(CellMatrices {
        per_cell,
        horizon,
        sample,
    })
}

impl OrbitData {
    fn horizon(&self) -> usize {
        match self {
            OrbitData::LabelBits { grid, .. } => grid.cols(),
            OrbitData::LabelCells { horizon, .. } => *horizon,
            OrbitData::Words { horizon, .. } => *horizon,
            OrbitData::Circle { .. } => usize::MAX,
            OrbitData::Generic { orbits, .. } => orbits.iter().map(Vec::len).min().unwrap_or(0),
        }
    }
}

fn build_orbit_data(
    sys: &SystemSpec,
    base: &Semimetric,
    sample: EmpiricalSample,
    n_max: usize,
) -> Result<(OrbitData, EmpiricalSample)> {
    let scale = base.scale();
    match (&sys.kind, base.kernel_class()) {
        (SystemKind::Rotation { alpha }, KernelClass::BinaryCircle { lo, hi }) => {
            let m = sample.m();
            let mut grid = BitGrid::new(m, n_max);
            for (i, p) in sample.points.iter().enumerate() {
                let mut x = p.as_circle().expect("checked").value();
                for k in 0..n_max {
                    if lo <= x && x < hi {
                        grid.set(i, k, true);
                    }
                    x += alpha;
                    if x >= 1.0 {
                        x -= 1.0;
                    }
                }
            }
            Ok((OrbitData::LabelBits { grid, scale }, sample))
        }
        (SystemKind::Rotation { alpha }, KernelClass::Cut(partition)) => {
            let m = sample.m();
            let mut cells = vec![0u8; m * n_max];
            for (i, p) in sample.points.iter().enumerate() {
                let mut x = p.as_circle().expect("checked");
                for k in 0..n_max {
                    let cell = partition.cell(&Point::Circle(x))?;
                    if cell > u8::MAX as usize {
                        return Err(Error::SizeCap {
                            what: "cut cells in bulk engine",
                            actual: cell + 1,
                            cap: 256,
                        });
                    }
                    cells[i * n_max + k] = cell as u8;
                    x = rotation_step(x, *alpha);
                }
            }
            Ok((OrbitData::LabelCells { cells, horizon: n_max, scale }, sample))
        }
        (SystemKind::Rotation { alpha }, KernelClass::Arc) => {
            let xs = sample
                .points
                .iter()
                .map(|p| p.as_circle().expect("checked").value())
                .collect();
            Ok((OrbitData::Circle { xs, alpha: *alpha, scale }, sample))
        }
        (SystemKind::BernoulliShift { depth, .. }, class) => {
            let horizon = sample
                .points
                .iter()
                .map(|p| p.as_word().expect("checked").len() - depth + 1)
                .min()
                .unwrap_or(1)
                .min(n_max);
            match class {
                KernelClass::BinaryWordBit => {
                    // label of T^k x is symbol k of the buffer
                    let m = sample.m();
                    let mut grid = BitGrid::new(m, horizon);
                    for (i, p) in sample.points.iter().enumerate() {
                        let w = p.as_word().expect("checked");
                        for k in 0..horizon {
                            grid.set(i, k, w.get(k));
                        }
                    }
                    Ok((OrbitData::LabelBits { grid, scale }, sample))
                }
                KernelClass::Cut(partition @ crate::metrics::Partition::WordPrefix { .. }) => {
                    let m = sample.m();
                    let mut cells = vec![0u8; m * horizon];
                    for (i, p) in sample.points.iter().enumerate() {
                        let mut w = p.as_word().expect("checked").clone();
                        for k in 0..horizon {
                            let cell = partition.cell(&Point::Word(w.clone()))?;
                            if cell > u8::MAX as usize {
                                return Err(Error::SizeCap {
                                    what: "cut cells in bulk engine",
                                    actual: cell + 1,
                                    cap: 256,
                                });
                            }
                            cells[i * horizon + k] = cell as u8;
                            if k + 1 < horizon {
                                w = w.drop_first();
                            }
                        }
                    }
                    Ok((OrbitData::LabelCells { cells, horizon, scale }, sample))
                }
                KernelClass::Dyadic => {
                    let (limbs, stride) = shift_word_orbits(&sample, *depth, horizon);
                    let valuer = WordValuer::Dyadic { scale, depth: *depth };
                    Ok((OrbitData::Words { limbs, stride, horizon, valuer }, sample))
                }
                KernelClass::HammingWindow { k } => {
                    let (limbs, stride) = shift_word_orbits(&sample, *depth, horizon);
                    let valuer = WordValuer::Hamming { window: k, scale };
                    Ok((OrbitData::Words { limbs, stride, horizon, valuer }, sample))
                }
                _ => generic_orbits(sys, base, sample, n_max),
            }
        }
        (SystemKind::Pascal { depth, .. }, class) => {
            let (rows, sample, horizon) = pascal_orbit_words(sys, sample, n_max)?;
            let stride = depth.div_ceil(64);
            match class {
                KernelClass::BinaryWordBit => {
                    let m = sample.m();
                    let mut grid = BitGrid::new(m, horizon);
                    for i in 0..m {
                        for k in 0..horizon {
                            let limb = rows[(i * n_max + k) * stride];
                            grid.set(i, k, limb & 1 == 1);
                        }
                    }
                    Ok((OrbitData::LabelBits { grid, scale }, sample))
                }
                KernelClass::Cut(crate::metrics::Partition::WordPrefix { k: pk }) => {
                    let m = sample.m();
                    let mut cells = vec![0u8; m * horizon];
                    if pk > 8 {
                        return Err(Error::SizeCap {
                            what: "cut cells in bulk engine",
                            actual: 1 << pk,
                            cap: 256,
                        });
                    }
                    for i in 0..m {
                        for k in 0..horizon {
                            let limb = rows[(i * n_max + k) * stride];
                            // prefix bits, lowest bit = first symbol
                            let mut cell = 0usize;
                            for b in 0..pk {
                                cell = cell << 1 | ((limb >> b) & 1) as usize;
                            }
                            cells[i * horizon + k] = cell as u8;
                        }
                    }
                    Ok((OrbitData::LabelCells { cells, horizon, scale }, sample))
                }
                KernelClass::Dyadic => {
                    let limbs = repack_rows(&rows, sample.m(), n_max, horizon, stride);
                    let valuer = WordValuer::Dyadic { scale, depth: *depth };
                    Ok((OrbitData::Words { limbs, stride, horizon, valuer }, sample))
                }
                KernelClass::HammingWindow { k } => {
                    let limbs = repack_rows(&rows, sample.m(), n_max, horizon, stride);
                    let valuer = WordValuer::Hamming { window: k, scale };
                    Ok((OrbitData::Words { limbs, stride, horizon, valuer }, sample))
                }
                _ => generic_orbits(sys, base, sample, n_max),
            }
        }
        _ => generic_orbits(sys, base, sample, n_max),
    }
}

fn shift_word_orbits(sample: &EmpiricalSample, depth: usize, horizon: usize) -> (Vec<u64>, usize) {
    let stride = depth.div_ceil(64);
    let m = sample.m();
    let mut limbs = vec![0u64; m * horizon * stride];
    for (i, p) in sample.points.iter().enumerate() {
        let w = p.as_word().expect("checked");
        for k in 0..horizon {
            let dst = &mut limbs[(i * horizon + k) * stride..][..stride];
            for b in 0..depth {
                if w.get(k + b) {
                    dst[b / 64] |= 1u64 << (b % 64);
                }
            }
        }
    }
    (limbs, stride)
}

/// Pascal orbits as packed words; points whose orbit hits the excluded
/// set are resampled (bounded attempts). Returns the row buffer (sized
/// for `n_max`, valid through `horizon`), the final sample, and the
/// common horizon.
fn pascal_orbit_words(
    sys: &SystemSpec,
    mut sample: EmpiricalSample,
    n_max: usize,
) -> Result<(Vec<u64>, EmpiricalSample, usize)> {
    let SystemKind::Pascal { depth, .. } = sys.kind else {
        unreachable!("pascal orbit builder on non-pascal system");
    };
    let stride = depth.div_ceil(64);
    let m = sample.m();
    let seed = sample.seed;

    struct RowResult {
        row: Vec<u64>,
        point: Option<Point>,
        reached: usize,
    }

    let results: Vec<RowResult> = sample
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut candidate = p.clone();
            let mut replaced = None;
            for attempt in 0..=MAX_RESAMPLES {
                let w0 = candidate.as_word().expect("checked").clone();
                let mut row = vec![0u64; n_max * stride];
                let mut w = w0;
                let mut reached = n_max;
                for k in 0..n_max {
                    row[k * stride..(k + 1) * stride].copy_from_slice(w.limbs());
                    if k + 1 < n_max {
                        match pascal_step(&w) {
                            Ok(next) => w = next,
                            Err(_) => {
                                reached = k + 1;
                                break;
                            }
                        }
                    }
                }
                if reached == n_max || attempt == MAX_RESAMPLES {
                    return RowResult {
                        row,
                        point: replaced,
                        reached,
                    };
                }
                candidate = resample_point(sys, seed, i, attempt);
                replaced = Some(candidate.clone());
            }
            unreachable!("loop returns");
        })
        .collect();

    let mut rows = vec![0u64; m * n_max * stride];
    let mut horizon = n_max;
    for (i, r) in results.into_iter().enumerate() {
        rows[i * n_max * stride..(i + 1) * n_max * stride].copy_from_slice(&r.row);
        horizon = horizon.min(r.reached);
        if let Some(p) = r.point {
            sample.points[i] = p;
        }
    }
    Ok((rows, sample, horizon))
}

fn repack_rows(rows: &[u64], m: usize, n_max: usize, horizon: usize, stride: usize) -> Vec<u64> {
    if horizon == n_max {
        return rows.to_vec();
    }
    let mut out = vec![0u64; m * horizon * stride];
    for i in 0..m {
        let src = &rows[i * n_max * stride..][..horizon * stride];
        out[i * horizon * stride..][..horizon * stride].copy_from_slice(src);
    }
    out
}

fn generic_orbits(
    sys: &SystemSpec,
    base: &Semimetric,
    sample: EmpiricalSample,
    n_max: usize,
) -> Result<(OrbitData, EmpiricalSample)> {
    let mut orbits = Vec::with_capacity(sample.m());
    for p in &sample.points {
        // orbit of observables; a hidden cursor keeps the full state the
        // stepping needs
        let mut orbit = Vec::with_capacity(n_max);
        let mut cursor = p.clone();
        orbit.push(sys.observe(&cursor));
        for _ in 1..n_max {
            match sys.step(&cursor) {
                Ok(next) => {
                    cursor = next;
                    orbit.push(sys.observe(&cursor));
                }
                Err(Error::BufferExhausted { .. }) | Err(Error::DomainOverflow { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        orbits.push(orbit);
    }
    Ok((
        OrbitData::Generic {
            orbits,
            metric: base.clone(),
        },
        sample,
    ))
}

/// Integer mismatch-count thresholds for label-based kernels:
/// `d ≤ ε  ⟺  count ≤ floor(g(ε)·n / scale)` per mode.
fn count_thresholds(
    mode: Mode,
    scale: f64,
    feasible: &[usize],
    eps_grid: &[f64],
) -> Vec<Vec<u32>> {
    feasible
        .iter()
        .map(|&n| {
            eps_grid
                .iter()
                .map(|&eps| {
                    let limit = match mode {
                        Mode::Average => eps * n as f64 / scale,
                        Mode::Lp(p) => (eps / scale).powf(p) * n as f64,
                        Mode::Sup => unreachable!("sup handled by crossing times"),
                    };
                    (limit + 1e-9).floor().max(0.0) as u32
                })
                .collect()
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn fill_row(
    data: &OrbitData,
    mode: Mode,
    i: usize,
    m: usize,
    feasible: &[usize],
    eps_grid: &[f64],
    words_per_row: usize,
    row: &mut [u64],
) {
    let n_eps = eps_grid.len();
    let set_bit = |cell: usize, j: usize, row: &mut [u64]| {
        row[cell * words_per_row + j / 64] |= 1u64 << (j % 64);
    };

    match (data, mode) {
        (OrbitData::LabelBits { grid, scale }, Mode::Average | Mode::Lp(_)) => {
            let thresholds = count_thresholds(mode, *scale, feasible, eps_grid);
            let a = grid.row(i);
            for j in 0..m {
                let b = grid.row(j);
                let mut mc = 0u32;
                let mut bidx = 0usize;
                'limbs: for (w, (&x, &y)) in a.iter().zip(b).enumerate() {
                    let diff = x ^ y;
                    let limb_start = w * 64;
                    while bidx < feasible.len() && feasible[bidx] <= limb_start + 64 {
                        let nb_in = feasible[bidx] - limb_start;
                        let mask = if nb_in == 64 { !0u64 } else { (1u64 << nb_in) - 1 };
                        let mc_b = mc + (diff & mask).count_ones();
                        for (e, th) in thresholds[bidx].iter().enumerate() {
                            if mc_b <= *th {
                                set_bit(bidx * n_eps + e, j, row);
                            }
                        }
                        bidx += 1;
                    }
                    if bidx >= feasible.len() {
                        break 'limbs;
                    }
                    mc += diff.count_ones();
                }
            }
        }
        (OrbitData::LabelBits { grid, scale }, Mode::Sup) => {
            let a = grid.row(i);
            for j in 0..m {
                let b = grid.row(j);
                // first step where the labels differ
                let mut fm = usize::MAX;
                for (w, (&x, &y)) in a.iter().zip(b).enumerate() {
                    let diff = x ^ y;
                    if diff != 0 {
                        fm = w * 64 + diff.trailing_zeros() as usize;
                        break;
                    }
                }
                for (n_idx, &n) in feasible.iter().enumerate() {
                    for (e, &eps) in eps_grid.iter().enumerate() {
                        let d = if fm < n { *scale } else { 0.0 };
                        if d <= eps {
                            set_bit(n_idx * n_eps + e, j, row);
                        }
                    }
                }
            }
        }
        (OrbitData::LabelCells { cells, horizon, scale }, Mode::Average | Mode::Lp(_)) => {
            let thresholds = count_thresholds(mode, *scale, feasible, eps_grid);
            let a = &cells[i * horizon..(i + 1) * horizon];
            for j in 0..m {
                let b = &cells[j * horizon..(j + 1) * horizon];
                let mut mc = 0u32;
                let mut bidx = 0usize;
                for k in 0..*horizon {
                    while bidx < feasible.len() && feasible[bidx] == k {
                        for (e, th) in thresholds[bidx].iter().enumerate() {
                            if mc <= *th {
                                set_bit(bidx * n_eps + e, j, row);
                            }
                        }
                        bidx += 1;
                    }
                    if bidx >= feasible.len() {
                        break;
                    }
                    mc += (a[k] != b[k]) as u32;
                }
                while bidx < feasible.len() {
                    for (e, th) in thresholds[bidx].iter().enumerate() {
                        if mc <= *th {
                            set_bit(bidx * n_eps + e, j, row);
                        }
                    }
                    bidx += 1;
                }
            }
        }
        (OrbitData::LabelCells { cells, horizon, scale }, Mode::Sup) => {
            let a = &cells[i * horizon..(i + 1) * horizon];
            for j in 0..m {
                let b = &cells[j * horizon..(j + 1) * horizon];
                let fm = (0..*horizon).find(|&k| a[k] != b[k]).unwrap_or(usize::MAX);
                for (n_idx, &n) in feasible.iter().enumerate() {
                    for (e, &eps) in eps_grid.iter().enumerate() {
                        let d = if fm < n { *scale } else { 0.0 };
                        if d <= eps {
                            set_bit(n_idx * n_eps + e, j, row);
                        }
                    }
                }
            }
        }
        (OrbitData::Words { limbs, stride, horizon, valuer }, _) => {
            let a_all = &limbs[i * horizon * stride..(i + 1) * horizon * stride];
            for j in 0..m {
                let b_all = &limbs[j * horizon * stride..(j + 1) * horizon * stride];
                pair_walk(
                    mode,
                    *horizon,
                    feasible,
                    eps_grid,
                    |k| {
                        valuer.value(
                            &a_all[k * stride..(k + 1) * stride],
                            &b_all[k * stride..(k + 1) * stride],
                        )
                    },
                    |cell| set_bit(cell, j, row),
                );
            }
        }
        (OrbitData::Circle { xs, alpha, scale }, _) => {
            for j in 0..m {
                let (mut x, mut y) = (xs[i], xs[j]);
                pair_walk(
                    mode,
                    *feasible.last().unwrap_or(&1),
                    feasible,
                    eps_grid,
                    |_| {
                        let d = (x - y).abs();
                        let v = scale * d.min(1.0 - d);
                        x += alpha;
                        if x >= 1.0 {
                            x -= 1.0;
                        }
                        y += alpha;
                        if y >= 1.0 {
                            y -= 1.0;
                        }
                        v
                    },
                    |cell| set_bit(cell, j, row),
                );
            }
        }
        (OrbitData::Generic { orbits, metric }, _) => {
            let a = &orbits[i];
            for (j, b) in orbits.iter().enumerate() {
                let len = a.len().min(b.len());
                pair_walk(
                    mode,
                    len,
                    feasible,
                    eps_grid,
                    |k| metric.eval(&a[k], &b[k]).expect("kind checked upfront"),
                    |cell| set_bit(cell, j, row),
                );
            }
        }
    }
}

/// Walk one pair's orbit values, emitting adjacency at every schedule
/// boundary. `value(k)` must be called with k = 0, 1, 2, … in order.
fn pair_walk(
    mode: Mode,
    horizon: usize,
    feasible: &[usize],
    eps_grid: &[f64],
    mut value: impl FnMut(usize) -> f64,
    mut emit: impl FnMut(usize),
) {
    let n_eps = eps_grid.len();
    let eps_max = eps_grid.iter().cloned().fold(f64::MIN, f64::max);
    let mut acc = 0.0f64;
    let mut bidx = 0usize;
    let mut k = 0usize;
    while bidx < feasible.len() && k < horizon {
        let v = value(k);
        match mode {
            Mode::Average => acc += v,
            Mode::Sup => acc = acc.max(v),
            Mode::Lp(p) => acc += v.powf(p),
        }
        k += 1;
        while bidx < feasible.len() && feasible[bidx] == k {
            let n = feasible[bidx] as f64;
            let d = match mode {
                Mode::Average => acc / n,
                Mode::Sup => acc,
                Mode::Lp(p) => (acc / n).powf(1.0 / p),
            };
            for (e, &eps) in eps_grid.iter().enumerate() {
                if d <= eps {
                    emit(bidx * n_eps + e);
                }
            }
            bidx += 1;
        }
        // sup can only grow: once past every ε, later cells stay empty
        if matches!(mode, Mode::Sup) && acc > eps_max {
            return;
        }
    }
}
