//! The bipartite positivity pattern of a tensor and weak irreducibility.
//!
//! Every positive entry links each of its lower indices to each of its upper
//! indices. The tensor is weakly irreducible when the resulting bipartite
//! graph is connected over all n + m vertices; a coordinate that touches no
//! positive entry can never carry positive mass in the eigen-equations, so
//! isolated vertices count as disconnected.

use std::collections::BTreeSet;

use crate::tensor::RectTensor;

/// Bipartite graph with n tail vertices (lower side) and m head vertices.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    pub tail_count: usize,
    pub head_count: usize,
    /// Arcs (i, j) from the lower side to the upper side, 0-based.
    pub arcs: BTreeSet<(usize, usize)>,
}

impl BipartiteGraph {
    /// Connectivity of the undirected underlying graph over all
    /// tail_count + head_count vertices, by breadth-first traversal.
    pub fn is_connected(&self) -> bool {
        let total = self.tail_count + self.head_count;
        if total == 0 {
            return true;
        }
        let mut tail_adj: Vec<Vec<usize>> = vec![Vec::new(); self.tail_count];
        let mut head_adj: Vec<Vec<usize>> = vec![Vec::new(); self.head_count];
        for &(i, j) in &self.arcs {
            tail_adj[i].push(j);
            head_adj[j].push(i);
        }
        let mut seen = vec![false; total];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            if v < self.tail_count {
                for &j in &tail_adj[v] {
                    let w = self.tail_count + j;
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            } else {
                for &i in &head_adj[v - self.tail_count] {
                    if !seen[i] {
                        seen[i] = true;
                        queue.push_back(i);
                    }
                }
            }
        }
        seen.iter().all(|&v| v)
    }
}

/// Bipartite graph induced by the positive entries of a nonnegative tensor:
/// arc (i, j) is present iff some positive entry has i among its lower
/// indices and j among its upper indices.
pub fn induced_bipartite(a: &RectTensor) -> BipartiteGraph {
    let mut arcs = BTreeSet::new();
    a.for_each_entry(|lower, upper, v| {
        if v > 0.0 {
            for &i in lower {
                for &j in upper {
                    arcs.insert((i, j));
                }
            }
        }
    });
    BipartiteGraph {
        tail_count: a.n(),
        head_count: a.m(),
        arcs,
    }
}

/// Whether the induced bipartite graph is connected.
pub fn is_weakly_irreducible(a: &RectTensor) -> bool {
    induced_bipartite(a).is_connected()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::example21_tensor;

    #[test]
    fn all_ones_induces_complete_bipartite() {
        let g = induced_bipartite(&RectTensor::ones(2, 2, 2, 2));
        assert_eq!(g.arcs.len(), 4);
        assert!(g.is_connected());
    }

    #[test]
    fn single_entry_links_its_index_sets_only() {
        let mut a = RectTensor::zeros(2, 2, 2, 2);
        a.set(&[0, 0], &[1, 1], 1.0).unwrap();
        let g = induced_bipartite(&a);
        assert_eq!(g.arcs, BTreeSet::from([(0, 1)]));
        // x2 and y1 are isolated
        assert!(!is_weakly_irreducible(&a));
    }

    #[test]
    fn example21_is_weakly_irreducible() {
        let a = example21_tensor();
        let g = induced_bipartite(&a);
        assert_eq!(g.arcs.len(), 4);
        assert!(is_weakly_irreducible(&a));
    }

    #[test]
    fn block_support_disconnects() {
        let mut a = RectTensor::zeros(1, 1, 2, 2);
        a.set(&[0], &[0], 2.0).unwrap();
        assert!(!is_weakly_irreducible(&a));
    }

    #[test]
    fn zero_tensor_is_reducible() {
        assert!(!is_weakly_irreducible(&RectTensor::zeros(2, 2, 2, 2)));
        assert!(!is_weakly_irreducible(&RectTensor::zeros(1, 1, 1, 1)));
    }

    #[test]
    fn symmetrization_preserves_the_pattern() {
        let a = example21_tensor();
        let ga = induced_bipartite(&a);
        let gs = induced_bipartite(&a.symmetrize());
        assert_eq!(ga.arcs, gs.arcs);
    }

    #[test]
    fn support_growth_is_monotone() {
        let mut a = RectTensor::zeros(2, 1, 2, 2);
        a.set(&[0, 0], &[0], 1.0).unwrap();
        assert!(!is_weakly_irreducible(&a));
        a.set(&[0, 1], &[1], 1.0).unwrap();
        assert!(is_weakly_irreducible(&a));
        a.set(&[1, 1], &[0], 1.0).unwrap();
        assert!(is_weakly_irreducible(&a));
    }
}
