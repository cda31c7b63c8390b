//! Discrete measures, Shannon entropy, exact Kantorovich distance, and the
//! ε-net transport-plan construction that bridges the two ε-entropy
//! variants.
//!
//! The Kantorovich solver is a transportation simplex (network simplex on
//! the dense bipartite graph) that returns the optimal plan together with
//! the dual potentials, so every solve carries its own optimality
//! certificate: feasible duals and a duality gap below `1e-9`. No
//! entropic regularization — the bounds we assert are exact.

use crate::error::{Error, Result};
use crate::metrics::MetricEval;
use crate::point::Point;
use crate::systems::EmpiricalSample;

/// Default cap on the total number of atoms in one solve.
pub const DEFAULT_ATOM_CAP: usize = 2000;

/// Tolerance on weight normalization and feasibility checks.
pub const MEASURE_TOL: f64 = 1e-9;

/// A finitely supported probability measure. Duplicate atoms are allowed
/// and merged on demand.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    pub atoms: Vec<Point>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        let m = DiscreteMeasure { atoms, weights };
        m.validate()?;
        Ok(m)
    }

    pub fn dirac(p: Point) -> Self {
        DiscreteMeasure {
            atoms: vec![p],
            weights: vec![1.0],
        }
    }

    pub fn uniform(atoms: Vec<Point>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyInput("uniform measure needs atoms"));
        }
        let w = 1.0 / atoms.len() as f64;
        Ok(DiscreteMeasure {
            weights: vec![w; atoms.len()],
            atoms,
        })
    }

    /// The empirical measure of a sample (uniform weights).
    pub fn from_sample(sample: &EmpiricalSample) -> Self {
        DiscreteMeasure {
            atoms: sample.points.clone(),
            weights: vec![sample.weight(); sample.m()],
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::InvalidMeasure {
                reason: "no atoms".into(),
            });
        }
        if self.atoms.len() != self.weights.len() {
            return Err(Error::InvalidMeasure {
                reason: format!(
                    "{} atoms vs {} weights",
                    self.atoms.len(),
                    self.weights.len()
                ),
            });
        }
        if let Some(w) = self.weights.iter().find(|w| **w < -MEASURE_TOL || !w.is_finite()) {
            return Err(Error::InvalidMeasure {
                reason: format!("negative or non-finite weight {w}"),
            });
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > MEASURE_TOL {
            return Err(Error::InvalidMeasure {
                reason: format!("weights sum to {sum}, expected 1"),
            });
        }
        Ok(())
    }

    /// Combine duplicate atoms (exact identity) and drop zero weights;
    /// atoms keep their first-occurrence order.
    pub fn merged(&self) -> DiscreteMeasure {
        let mut index: std::collections::HashMap<(u8, u64, Vec<u64>), usize> =
            std::collections::HashMap::new();
        let mut atoms = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (atom, &w) in self.atoms.iter().zip(&self.weights) {
            if w <= 0.0 {
                continue;
            }
            match index.entry(atom.merge_key()) {
                std::collections::hash_map::Entry::Occupied(e) => weights[*e.get()] += w,
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(atoms.len());
                    atoms.push(atom.clone());
                    weights.push(w);
                }
            }
        }
        DiscreteMeasure { atoms, weights }
    }
}

/// Shannon entropy `H(ν) = −Σ c_i ln c_i` in nats, with `0 ln 0 = 0`;
/// duplicate atoms are merged before computing.
pub fn discrete_entropy(nu: &DiscreteMeasure) -> f64 {
    let merged = nu.merged();
    merged
        .weights
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| -c * c.ln())
        .sum()
}

/// A coupling between two discrete measures, stored sparsely as
/// `(source, target, mass)` triplets.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub entries: Vec<(usize, usize, f64)>,
    pub ns: usize,
    pub nt: usize,
    pub cost: f64,
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.ns];
        for &(i, _, x) in &self.entries {
            sums[i] += x;
        }
        sums
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.nt];
        for &(_, j, x) in &self.entries {
            sums[j] += x;
        }
        sums
    }

    /// Marginal feasibility against the given weight vectors.
    pub fn check_marginals(&self, source: &[f64], target: &[f64], tol: f64) -> Result<()> {
        let rows = self.row_sums();
        let cols = self.col_sums();
        for (i, (&have, &want)) in rows.iter().zip(source).enumerate() {
            if (have - want).abs() > tol {
                return Err(Error::InvalidMeasure {
                    reason: format!("row {i} sums to {have}, expected {want}"),
                });
            }
        }
        for (j, (&have, &want)) in cols.iter().zip(target).enumerate() {
            if (have - want).abs() > tol {
                return Err(Error::InvalidMeasure {
                    reason: format!("column {j} sums to {have}, expected {want}"),
                });
            }
        }
        if self.entries.iter().any(|&(_, _, x)| x < -tol) {
            return Err(Error::InvalidMeasure {
                reason: "negative coupling mass".into(),
            });
        }
        Ok(())
    }
}

/// An exact solve: optimal value, plan, and the dual certificate.
#[derive(Debug, Clone)]
pub struct KantorovichSolution {
    pub value: f64,
    pub plan: TransportPlan,
    /// Dual potentials (u on sources, v on targets) of the merged measures.
    pub potentials: (Vec<f64>, Vec<f64>),
    /// `|primal − dual|` at termination.
    pub duality_gap: f64,
    /// `max(0, max_ij (u_i + v_j − c_ij))`: dual feasibility slack.
    pub max_dual_violation: f64,
}

/// Exact Kantorovich (1-Wasserstein) distance with the default atom cap.
pub fn kantorovich(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    rho: &dyn MetricEval,
) -> Result<KantorovichSolution> {
    kantorovich_with_cap(mu, nu, rho, DEFAULT_ATOM_CAP)
}

/// Exact Kantorovich distance between two discrete measures.
///
/// Duplicates are merged first. The total number of merged atoms must not
/// exceed `cap`.
pub fn kantorovich_with_cap(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    rho: &dyn MetricEval,
    cap: usize,
) -> Result<KantorovichSolution> {
    mu.validate()?;
    nu.validate()?;
    let a = mu.merged();
    let b = nu.merged();
    let (ns, nt) = (a.len(), b.len());
    if ns + nt > cap {
        return Err(Error::SizeCap {
            what: "kantorovich atoms",
            actual: ns + nt,
            cap,
        });
    }

    let mut cost = vec![0.0f64; ns * nt];
    for i in 0..ns {
        for j in 0..nt {
            cost[i * nt + j] = rho.eval(&a.atoms[i], &b.atoms[j])?;
        }
    }

    let supply = a.weights.clone();
    let mut demand = b.weights.clone();
    // Balance float dust so the flows close exactly.
    let diff: f64 = supply.iter().sum::<f64>() - demand.iter().sum::<f64>();
    if diff.abs() > 0.0 {
        let jmax = demand
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.partial_cmp(y.1).expect("finite"))
            .map(|(j, _)| j)
            .expect("nonempty");
        demand[jmax] += diff;
    }

    let simplex = TransportSimplex::solve(&supply, &demand, &cost, ns, nt)?;

    let mut entries: Vec<(usize, usize, f64)> = simplex
        .flows
        .iter()
        .filter(|&&(_, _, x)| x > 0.0)
        .copied()
        .collect();
    entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
    let primal: f64 = entries.iter().map(|&(i, j, x)| x * cost[i * nt + j]).sum();
    let dual: f64 = supply
        .iter()
        .zip(&simplex.u)
        .map(|(s, u)| s * u)
        .sum::<f64>()
        + demand.iter().zip(&simplex.v).map(|(d, v)| d * v).sum::<f64>();

    let mut max_violation = 0.0f64;
    for i in 0..ns {
        for j in 0..nt {
            let slack = simplex.u[i] + simplex.v[j] - cost[i * nt + j];
            max_violation = max_violation.max(slack);
        }
    }

    let plan = TransportPlan {
        entries,
        ns,
        nt,
        cost: primal,
    };
    plan.check_marginals(&supply, &demand, MEASURE_TOL)?;

    Ok(KantorovichSolution {
        value: primal,
        plan,
        potentials: (simplex.u, simplex.v),
        duality_gap: (primal - dual).abs(),
        max_dual_violation: max_violation,
    })
}

/// Basic solution of the balanced transportation problem.
struct TransportSimplex {
    flows: Vec<(usize, usize, f64)>,
    u: Vec<f64>,
    v: Vec<f64>,
}

const PIVOT_TOL: f64 = 1e-12;

impl TransportSimplex {
    fn solve(supply: &[f64], demand: &[f64], cost: &[f64], ns: usize, nt: usize) -> Result<Self> {
        // Northwest-corner initial basis: exactly ns + nt - 1 cells,
        // degenerate zeros included.
        let mut basis: Vec<(usize, usize, f64)> = Vec::with_capacity(ns + nt - 1);
        {
            let mut ra = supply.to_vec();
            let mut rb = demand.to_vec();
            let (mut i, mut j) = (0usize, 0usize);
            loop {
                let x = ra[i].min(rb[j]).max(0.0);
                basis.push((i, j, x));
                ra[i] -= x;
                rb[j] -= x;
                if i == ns - 1 && j == nt - 1 {
                    break;
                }
                if (ra[i] <= rb[j] && i < ns - 1) || j == nt - 1 {
                    i += 1;
                } else {
                    j += 1;
                }
            }
        }

        let max_iters = 200 * (ns + nt) + 2000;
        let bland_after = 20 * (ns + nt) + 200;
        let mut u = vec![0.0; ns];
        let mut v = vec![0.0; nt];

        for iter in 0..max_iters {
            Self::compute_duals(&basis, cost, ns, nt, &mut u, &mut v)?;

            // Entering arc: most negative reduced cost (Dantzig), or the
            // first negative one in lexicographic order (Bland) once the
            // iteration budget suggests degeneracy trouble.
            let bland = iter >= bland_after;
            let mut entering: Option<(f64, usize, usize)> = None;
            'scan: for i in 0..ns {
                for j in 0..nt {
                    let rc = cost[i * nt + j] - u[i] - v[j];
                    if rc < -PIVOT_TOL {
                        if bland {
                            entering = Some((rc, i, j));
                            break 'scan;
                        }
                        match entering {
                            Some((best, _, _)) if best <= rc => {}
                            _ => entering = Some((rc, i, j)),
                        }
                    }
                }
            }
            let Some((_, ei, ej)) = entering else {
                // Optimal.
                return Ok(TransportSimplex { flows: basis, u, v });
            };

            // Close the cycle: unique tree path from target node ej back to
            // source node ei; odd-position edges lose flow.
            let path = Self::tree_path(&basis, ns, nt, ei, ej)?;
            let mut theta = f64::INFINITY;
            let mut leaving: Option<usize> = None;
            for (pos, &edge_idx) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    let flow = basis[edge_idx].2;
                    let take = match leaving {
                        None => true,
                        Some(cur) => {
                            flow < theta
                                || (flow == theta
                                    && (basis[edge_idx].0, basis[edge_idx].1)
                                        < (basis[cur].0, basis[cur].1))
                        }
                    };
                    if take {
                        theta = flow;
                        leaving = Some(edge_idx);
                    }
                }
            }
            let leaving =
                leaving.ok_or_else(|| Error::Solver("no leaving arc on pivot cycle".into()))?;
            let theta = theta.max(0.0);

            for (pos, &edge_idx) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    basis[edge_idx].2 = (basis[edge_idx].2 - theta).max(0.0);
                } else {
                    basis[edge_idx].2 += theta;
                }
            }
            basis[leaving] = (ei, ej, theta);
        }
        Err(Error::Solver(format!(
            "pivot budget exhausted on {ns}x{nt} instance"
        )))
    }

    /// Dual potentials from the basis tree: u[0] = 0, then propagate
    /// c_ij = u_i + v_j over basic cells.
    fn compute_duals(
        basis: &[(usize, usize, f64)],
        cost: &[f64],
        ns: usize,
        nt: usize,
        u: &mut [f64],
        v: &mut [f64],
    ) -> Result<()> {
        let mut u_set = vec![false; ns];
        let mut v_set = vec![false; nt];
        let mut by_source: Vec<Vec<usize>> = vec![Vec::new(); ns];
        let mut by_target: Vec<Vec<usize>> = vec![Vec::new(); nt];
        for (idx, &(i, j, _)) in basis.iter().enumerate() {
            by_source[i].push(idx);
            by_target[j].push(idx);
        }
        u[0] = 0.0;
        u_set[0] = true;
        let mut queue = std::collections::VecDeque::from([(true, 0usize)]);
        while let Some((is_source, node)) = queue.pop_front() {
            let edges = if is_source {
                &by_source[node]
            } else {
                &by_target[node]
            };
            for &idx in edges {
                let (i, j, _) = basis[idx];
                if is_source && !v_set[j] {
                    v[j] = cost[i * nt + j] - u[i];
                    v_set[j] = true;
                    queue.push_back((false, j));
                } else if !is_source && !u_set[i] {
                    u[i] = cost[i * nt + j] - v[j];
                    u_set[i] = true;
                    queue.push_back((true, i));
                }
            }
        }
        if u_set.iter().any(|s| !s) || v_set.iter().any(|s| !s) {
            return Err(Error::Solver("basis is not a spanning tree".into()));
        }
        Ok(())
    }

    /// Edge indices of the unique basis-tree path from source `ei` to
    /// target `ej`. Position 0 is the edge adjacent to `ei`, so edges at
    /// even positions leave a source (they lose flow when the entering
    /// arc gains).
    fn tree_path(
        basis: &[(usize, usize, f64)],
        ns: usize,
        nt: usize,
        ei: usize,
        ej: usize,
    ) -> Result<Vec<usize>> {
        // Nodes: 0..ns are sources, ns..ns+nt are targets.
        let n_nodes = ns + nt;
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_nodes];
        for (idx, &(i, j, _)) in basis.iter().enumerate() {
            adj[i].push((ns + j, idx));
            adj[ns + j].push((i, idx));
        }
        let start = ei;
        let goal = ns + ej;
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n_nodes];
        let mut seen = vec![false; n_nodes];
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == goal {
                break;
            }
            for &(next, edge) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    prev[next] = Some((node, edge));
                    queue.push_back(next);
                }
            }
        }
        if !seen[goal] {
            return Err(Error::Solver("basis tree is disconnected".into()));
        }
        let mut path = Vec::new();
        let mut node = goal;
        while node != start {
            let (parent, edge) = prev[node].expect("path exists");
            path.push(edge);
            node = parent;
        }
        path.reverse();
        Ok(path)
    }
}

/// Exact optimal transport cost by exhaustive enumeration of basis
/// structures (spanning trees of the bipartite support graph with flows
/// recovered by leaf peeling). Exponential; capped at 4 atoms per side.
/// This is the independent reference the simplex solver is checked
/// against — it shares nothing with the pivoting path.
pub fn kantorovich_bruteforce(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    rho: &dyn MetricEval,
) -> Result<f64> {
    mu.validate()?;
    nu.validate()?;
    let a = mu.merged();
    let b = nu.merged();
    let (ns, nt) = (a.len(), b.len());
    if ns > 4 || nt > 4 {
        return Err(Error::SizeCap {
            what: "brute-force transport instance",
            actual: ns.max(nt),
            cap: 4,
        });
    }
    let mut cost = vec![0.0f64; ns * nt];
    for i in 0..ns {
        for j in 0..nt {
            cost[i * nt + j] = rho.eval(&a.atoms[i], &b.atoms[j])?;
        }
    }
    let edges: Vec<(usize, usize)> = (0..ns)
        .flat_map(|i| (0..nt).map(move |j| (i, j)))
        .collect();
    let n_nodes = ns + nt;
    let tree_size = n_nodes - 1;
    let mut best = f64::INFINITY;

    // enumerate all edge subsets of tree size
    let total = 1usize << edges.len();
    for mask in 0..total {
        if (mask as u64).count_ones() as usize != tree_size {
            continue;
        }
        // spanning + acyclic via union-find
        let mut parent: Vec<usize> = (0..n_nodes).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut root = x;
            while parent[root] != root {
                root = parent[root];
            }
            let mut cur = x;
            while parent[cur] != root {
                let next = parent[cur];
                parent[cur] = root;
                cur = next;
            }
            root
        }
        let mut acyclic = true;
        for (e, &(i, j)) in edges.iter().enumerate() {
            if mask >> e & 1 == 1 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, ns + j));
                if ri == rj {
                    acyclic = false;
                    break;
                }
                parent[ri] = rj;
            }
        }
        if !acyclic {
            continue;
        }

        // leaf peeling on the tree
        let chosen: Vec<(usize, usize)> = edges
            .iter()
            .enumerate()
            .filter(|(e, _)| mask >> e & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        let mut balance: Vec<f64> = a
            .weights
            .iter()
            .copied()
            .chain(b.weights.iter().map(|w| -w))
            .collect();
        let mut remaining: Vec<bool> = vec![true; chosen.len()];
        let mut degree = vec![0usize; n_nodes];
        for &(i, j) in &chosen {
            degree[i] += 1;
            degree[ns + j] += 1;
        }
        let mut feasible = true;
        let mut total_cost = 0.0;
        for _ in 0..chosen.len() {
            // find a remaining edge with a leaf endpoint
            let Some(e) = (0..chosen.len()).find(|&e| {
                remaining[e] && {
                    let (i, j) = chosen[e];
                    degree[i] == 1 || degree[ns + j] == 1
                }
            }) else {
                feasible = false;
                break;
            };
            let (i, j) = chosen[e];
            let flow = if degree[i] == 1 {
                balance[i]
            } else {
                -balance[ns + j]
            };
            if flow < -MEASURE_TOL {
                feasible = false;
                break;
            }
            total_cost += flow.max(0.0) * cost[i * nt + j];
            balance[i] -= flow;
            balance[ns + j] += flow;
            degree[i] -= 1;
            degree[ns + j] -= 1;
            remaining[e] = false;
        }
        if feasible && total_cost < best {
            best = total_cost;
        }
    }
    if !best.is_finite() {
        return Err(Error::Solver("no feasible basis structure found".into()));
    }
    Ok(best)
}

/// Output of the ε-net transport construction.
#[derive(Debug, Clone)]
pub struct Lemma3Witness {
    /// Discrete measure on the net centers plus one overflow atom.
    pub nu: DiscreteMeasure,
    pub plan: TransportPlan,
    /// The a-priori bound `ε(1−ε) + ε` the plan cost must respect.
    pub bound: f64,
    pub covered_mass: f64,
    /// Measured cost of the constructed plan (an upper bound on the
    /// Kantorovich distance between `nu` and the empirical measure).
    pub cost: f64,
}

/// Build the explicit transport plan from the empirical measure of
/// `sample` to a discrete measure carried by the ε-net `net`.
///
/// Every covered sample point sends its mass, split equally, to the
/// centers whose ε-ball contains it; uncovered mass goes to an overflow
/// atom placed at the first net center. Requires a metric of diameter
/// ≤ 1 (normalize first) and a net covering at least `1 − eps` of the
/// sample mass.
pub fn lemma3_plan(
    sample: &EmpiricalSample,
    net: &[usize],
    eps: f64,
    rho: &dyn MetricEval,
) -> Result<Lemma3Witness> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEps { eps });
    }
    if net.is_empty() {
        return Err(Error::EmptyInput("net has no centers"));
    }
    if let Some(d) = rho.diameter_hint() {
        if d > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "metric {} has diameter {d} > 1; normalize before building the plan",
                rho.name()
            )));
        }
    } else {
        return Err(Error::InvalidArgument(
            "lemma3_plan needs a bounded metric with known diameter".into(),
        ));
    }
    let m = sample.m();
    if net.iter().any(|&c| c >= m) {
        return Err(Error::InvalidArgument("net index out of range".into()));
    }
    let w = sample.weight();
    let k = net.len();
    let overflow = k; // target index of the overflow atom

    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut target_mass = vec![0.0f64; k + 1];
    let mut covered_mass = 0.0;
    let mut cost = 0.0;
    let mut covering: Vec<(usize, f64)> = Vec::new();
    for s in 0..m {
        covering.clear();
        for (t, &c) in net.iter().enumerate() {
            let d = rho.eval(&sample.points[s], &sample.points[c])?;
            if d <= eps {
                covering.push((t, d));
            }
        }
        if covering.is_empty() {
            let d = rho.eval(&sample.points[s], &sample.points[net[0]])?;
            entries.push((s, overflow, w));
            target_mass[overflow] += w;
            cost += w * d;
        } else {
            covered_mass += w;
            // A point sitting exactly on a center is in the private part
            // of that ball, not in an overlap: keep its mass there. All
            // genuine overlap mass is split equally among the covering
            // centers.
            if covering.iter().any(|&(_, d)| d == 0.0) {
                covering.retain(|&(_, d)| d == 0.0);
            }
            let share = w / covering.len() as f64;
            for &(t, d) in &covering {
                entries.push((s, t, share));
                target_mass[t] += share;
                cost += share * d;
            }
        }
    }

    let required = 1.0 - eps;
    if covered_mass < required - 1e-12 {
        return Err(Error::NotACover {
            covered: covered_mass,
            required,
        });
    }

    let mut atoms: Vec<Point> = net.iter().map(|&c| sample.points[c].clone()).collect();
    atoms.push(sample.points[net[0]].clone());
    let nu = DiscreteMeasure {
        atoms,
        weights: target_mass,
    };

    let plan = TransportPlan {
        entries,
        ns: m,
        nt: k + 1,
        cost,
    };

    Ok(Lemma3Witness {
        nu,
        plan,
        bound: eps * (1.0 - eps) + eps,
        covered_mass,
        cost,
    })
}
