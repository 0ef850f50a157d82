//! Slow reference implementations used to cross-check the solver.
//!
//! Everything here trades speed for transparency: paths are enumerated
//! outright, the least-squares optimum is found by projected gradient over
//! the explicit path simplex, and integral decompositions come from
//! exhaustive search. Intended for small instances in tests and for
//! optional solution verification.

use crate::decompose::Decomposition;
use crate::graph::{FlowGraph, PseudoFlow};
use crate::lmo::PathVertex;
use crate::loss::{LeastSquaresLoss, LossError};
use crate::vecmath::dot;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum OracleError {
    #[error("more than {cap} source-to-sink paths")]
    PathExplosion { cap: usize },
    #[error("integral search space of about {combinations:e} assignments exceeds the budget")]
    SearchSpace { combinations: f64 },
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Decompose(#[from] crate::decompose::DecomposeError),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Exhaustive integral search refuses to try more combinations than this.
const SEARCH_BUDGET: f64 = 1e8;

/// All source-to-sink paths in lexicographic node-sequence order. Errors
/// once more than `cap` paths exist.
pub fn enumerate_paths(g: &FlowGraph, cap: usize) -> Result<Vec<PathVertex>> {
    // Successors sorted by head node id make the DFS output lexicographic.
    let succ: Vec<Vec<usize>> = (0..g.node_count())
        .map(|u| {
            let mut es = g.out_edges(u).to_vec();
            es.sort_by_key(|&e| g.edge(e).1);
            es
        })
        .collect();
    let mut paths = Vec::new();
    let mut nodes = vec![g.source()];
    // Stack of (node, next successor position) for an explicit DFS.
    let mut stack: Vec<(usize, usize)> = vec![(g.source(), 0)];
    while let Some(&mut (u, ref mut pos)) = stack.last_mut() {
        if u == g.sink() {
            if paths.len() == cap {
                return Err(OracleError::PathExplosion { cap });
            }
            paths.push(
                PathVertex::from_nodes(g, nodes.clone()).expect("walk follows real edges"),
            );
            stack.pop();
            nodes.pop();
            continue;
        }
        if *pos == succ[u].len() {
            stack.pop();
            nodes.pop();
            continue;
        }
        let e = succ[u][*pos];
        *pos += 1;
        let v = g.edge(e).1;
        nodes.push(v);
        stack.push((v, 0));
    }
    Ok(paths)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite weights"));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// High-accuracy least-squares optimum over the convex hull of all paths,
/// by projected gradient with an exact line search along the projected
/// direction. Returns the optimal objective value.
pub fn reference_ls_optimum(g: &FlowGraph, r: &PseudoFlow, cap: usize) -> Result<f64> {
    let paths = enumerate_paths(g, cap)?;
    let loss = LeastSquaresLoss::new(r)?;
    let m = paths.len();
    let incidence: Vec<Vec<f64>> = paths.iter().map(|p| p.incidence(r.len())).collect();
    let mut lambda = vec![1.0 / m as f64; m];
    let to_flow = |lam: &[f64]| {
        let mut x = vec![0.0; r.len()];
        for (p, &w) in incidence.iter().zip(lam) {
            for (xi, pi) in x.iter_mut().zip(p) {
                *xi += w * pi;
            }
        }
        x
    };
    let mut x = to_flow(&lambda);
    let mut f = loss.value(&x).expect("dimensions match");
    let mut flat_streak = 0;
    for _ in 0..200_000 {
        let grad_x = loss.gradient(&x).expect("dimensions match");
        let grad_lambda: Vec<f64> = incidence.iter().map(|p| dot(p, &grad_x)).collect();
        let trial: Vec<f64> = lambda
            .iter()
            .zip(&grad_lambda)
            .map(|(&l, &gl)| l - gl)
            .collect();
        let target = project_simplex(&trial);
        let x_target = to_flow(&target);
        // Moving x toward x_target means stepping against d = x - x_target.
        let d: Vec<f64> = x.iter().zip(&x_target).map(|(&a, &b)| a - b).collect();
        let gamma = loss.step_size(&x, &d, 1.0).expect("dimensions match");
        if gamma <= 0.0 {
            break;
        }
        for (l, &t) in lambda.iter_mut().zip(&target) {
            *l += gamma * (t - *l);
        }
        x = to_flow(&lambda);
        let f_new = loss.value(&x).expect("dimensions match");
        if f - f_new <= 1e-16 * f.max(1.0) {
            flat_streak += 1;
            if flat_streak >= 10 {
                f = f.min(f_new);
                break;
            }
        } else {
            flat_streak = 0;
        }
        f = f.min(f_new);
    }
    Ok(f)
}

/// Exhaustive search for an integral decomposition of `r` with weights in
/// 0..=max_weight per path, minimizing the number of paths used; among
/// equal-support solutions the first one in search order wins. Returns None
/// when no exact integral decomposition exists.
pub fn brute_force_integral_decomposition(
    g: &FlowGraph,
    r: &[f64],
    max_weight: u64,
    cap: usize,
) -> Result<Option<Decomposition>> {
    let paths = enumerate_paths(g, cap)?;
    let combinations = ((max_weight + 1) as f64).powi(paths.len() as i32);
    if combinations > SEARCH_BUDGET {
        return Err(OracleError::SearchSpace { combinations });
    }

    struct Search<'a> {
        paths: &'a [PathVertex],
        r: &'a [f64],
        current: Vec<f64>,
        weights: Vec<u64>,
        best: Option<(usize, Vec<u64>)>,
        max_weight: u64,
    }

    impl Search<'_> {
        fn run(&mut self, k: usize, support: usize) {
            if let Some((best_support, _)) = &self.best {
                // Equal support loses to the earlier find, so prune ties too.
                if support >= *best_support {
                    return;
                }
            }
            if k == self.paths.len() {
                if self.current.iter().zip(self.r).all(|(a, b)| a == b) {
                    self.best = Some((support, self.weights.clone()));
                }
                return;
            }
            for w in 0..=self.max_weight {
                if w > 0 {
                    // Partial sums only grow, so any overshoot is final.
                    let fits = self.paths[k]
                        .edge_indices()
                        .iter()
                        .all(|&e| self.current[e] + w as f64 <= self.r[e]);
                    if !fits {
                        break;
                    }
                }
                self.weights[k] = w;
                if w > 0 {
                    self.paths[k].add_scaled_into(w as f64, &mut self.current);
                }
                self.run(k + 1, support + usize::from(w > 0));
                if w > 0 {
                    self.paths[k].add_scaled_into(-(w as f64), &mut self.current);
                }
            }
            self.weights[k] = 0;
        }
    }

    let mut search = Search {
        paths: &paths,
        r,
        current: vec![0.0; r.len()],
        weights: vec![0; paths.len()],
        best: None,
        max_weight,
    };
    search.run(0, 0);
    match search.best {
        None => Ok(None),
        Some((_, weights)) => {
            let mut kept_paths = Vec::new();
            let mut kept_weights = Vec::new();
            for (path, &w) in paths.iter().zip(&weights) {
                if w > 0 {
                    kept_paths.push(path.clone());
                    kept_weights.push(w as f64);
                }
            }
            Ok(Some(Decomposition::new(kept_paths, kept_weights, r.len())?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{example_flow, example_graph};

    #[test]
    fn enumerates_example_paths_lexicographically() {
        let g = example_graph();
        let paths = enumerate_paths(&g, 100).unwrap();
        let node_seqs: Vec<&[usize]> = paths.iter().map(|p| p.nodes()).collect();
        assert_eq!(
            node_seqs,
            vec![
                &[0, 1, 3, 4, 5][..],
                &[0, 1, 3, 5],
                &[0, 2, 3, 4, 5],
                &[0, 2, 3, 5],
            ]
        );
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let g = example_graph();
        assert!(matches!(
            enumerate_paths(&g, 3),
            Err(OracleError::PathExplosion { cap: 3 })
        ));
        assert_eq!(enumerate_paths(&g, 4).unwrap().len(), 4);
    }

    #[test]
    fn simplex_projection_basics() {
        let p = project_simplex(&[0.5, 0.5]);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = project_simplex(&[2.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = project_simplex(&[1.0, 1.0]);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = project_simplex(&[-5.0, 0.2, 0.3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p[0], 0.0);
        assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn ls_optimum_is_zero_when_flow_lies_on_the_hull_ray() {
        let g = example_graph();
        let f = reference_ls_optimum(&g, &example_flow(), 1000).unwrap();
        assert!(f <= 1e-12, "expected near-zero optimum, got {f}");
    }

    #[test]
    fn ls_optimum_is_positive_off_the_ray() {
        // Node a receives 1 but sends 5: no scaling of r is a flow, and
        // path mixtures are flows, so the hull misses the ray entirely.
        let g = example_graph();
        let r = PseudoFlow::new(vec![1.0, 1.0, 5.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let f = reference_ls_optimum(&g, &r, 1000).unwrap();
        assert!(f > 1e-3, "expected positive optimum, got {f}");
        // The optimum never exceeds the value at any feasible point, such
        // as a single path.
        let loss = LeastSquaresLoss::new(&r).unwrap();
        let paths = enumerate_paths(&g, 100).unwrap();
        for p in &paths {
            let v = loss.value(&p.incidence(r.len())).unwrap();
            assert!(f <= v + 1e-12);
        }
    }

    #[test]
    fn brute_force_recovers_the_two_path_truth() {
        let g = example_graph();
        let d = brute_force_integral_decomposition(&g, example_flow().values(), 2, 100)
            .unwrap()
            .expect("an exact decomposition exists");
        assert_eq!(d.len(), 2);
        assert_eq!(d.reconstruction(), example_flow().values());
        let long = crate::lmo::PathVertex::from_nodes(&g, vec![0, 1, 3, 4, 5]).unwrap();
        let short = crate::lmo::PathVertex::from_nodes(&g, vec![0, 2, 3, 5]).unwrap();
        assert_eq!(d.weight_of(&long), Some(1.0));
        assert_eq!(d.weight_of(&short), Some(2.0));
    }

    #[test]
    fn brute_force_prefers_smaller_support() {
        // 3·(s-b-c-t) also equals a sum of three distinct paths; the
        // single-path answer must win.
        let g = example_graph();
        let r = vec![0.0, 3.0, 0.0, 3.0, 0.0, 3.0, 0.0];
        let d = brute_force_integral_decomposition(&g, &r, 3, 100)
            .unwrap()
            .expect("single path works");
        assert_eq!(d.len(), 1);
        assert_eq!(d.weights(), &[3.0]);
    }

    #[test]
    fn brute_force_reports_impossible_instances() {
        let g = example_graph();
        // Flow enters a (edge 0) but never leaves it (edge 2 is zero).
        let r = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let d = brute_force_integral_decomposition(&g, &r, 2, 100).unwrap();
        assert!(d.is_none());
    }

    #[test]
    fn brute_force_budget_is_enforced() {
        let g = example_graph();
        let r = example_flow();
        assert!(matches!(
            brute_force_integral_decomposition(&g, r.values(), 1_000_000_000, 100),
            Err(OracleError::SearchSpace { .. })
        ));
    }
}
