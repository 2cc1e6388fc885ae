#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rectspec::{DirectedHypergraph, Edge, RectTensor, VectorPair};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fully populated tensor with entries drawn uniformly from `lo..hi`.
pub fn random_tensor(
    rng: &mut ChaCha8Rng,
    r: usize,
    s: usize,
    n: usize,
    m: usize,
    lo: f64,
    hi: f64,
) -> RectTensor {
    let mut t = RectTensor::zeros(r, s, n, m);
    let mut idx = vec![0usize; r + s];
    loop {
        t.set(&idx[..r], &idx[r..], rng.gen_range(lo..hi)).unwrap();
        let mut d = r + s;
        loop {
            if d == 0 {
                return t;
            }
            d -= 1;
            let cap = if d < r { n } else { m };
            idx[d] += 1;
            if idx[d] < cap {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Random positive pair with coordinates in `lo..hi`.
pub fn random_pair(rng: &mut ChaCha8Rng, n: usize, m: usize, lo: f64, hi: f64) -> VectorPair {
    VectorPair::new(
        (0..n).map(|_| rng.gen_range(lo..hi)).collect(),
        (0..m).map(|_| rng.gen_range(lo..hi)).collect(),
    )
}

/// Random pair normalized onto the product (p,q)-sphere.
pub fn sphere_pair(rng: &mut ChaCha8Rng, n: usize, m: usize, p: f64, q: f64) -> VectorPair {
    let mut z = random_pair(rng, n, m, 0.1, 1.0);
    rectspec::tensor::normalize_p(&mut z.x, p);
    rectspec::tensor::normalize_p(&mut z.y, q);
    z
}

/// Arbitrary valid (r,s)-uniform directed hypergraph with up to
/// `edge_target` distinct edges on `n` vertices.
pub fn random_hypergraph(
    rng: &mut ChaCha8Rng,
    n: usize,
    r: usize,
    s: usize,
    edge_target: usize,
) -> DirectedHypergraph {
    assert!(r + s <= n);
    let mut edges: Vec<Edge> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..edge_target * 4 {
        if edges.len() >= edge_target {
            break;
        }
        let mut vertices: Vec<usize> = (0..n).collect();
        for i in 0..r + s {
            let j = rng.gen_range(i..n);
            vertices.swap(i, j);
        }
        let mut tail = vertices[..r].to_vec();
        let mut head = vertices[r..r + s].to_vec();
        tail.sort_unstable();
        head.sort_unstable();
        if seen.insert((tail.clone(), head.clone())) {
            edges.push(Edge { tail, head });
        }
    }
    DirectedHypergraph::new(n, r, s, edges).expect("construction yields valid edges")
}

/// Hypergraph whose induced bipartite graph is connected: the n rotations
/// of a wrap-around window, plus n more with the head shifted by one,
/// giving arcs at every offset 1..=r+s.
pub fn connected_hypergraph(n: usize, r: usize, s: usize) -> DirectedHypergraph {
    assert!(n > r + s, "need room for the shifted heads");
    let mut edges = Vec::new();
    for k in 0..n {
        let tail: Vec<usize> = (0..r).map(|d| (k + d) % n).collect();
        let head: Vec<usize> = (0..s).map(|d| (k + r + d) % n).collect();
        let shifted: Vec<usize> = (0..s).map(|d| (k + r + 1 + d) % n).collect();
        edges.push(Edge {
            tail: tail.clone(),
            head,
        });
        edges.push(Edge {
            tail,
            head: shifted,
        });
    }
    DirectedHypergraph::new(n, r, s, edges).expect("windows are disjoint by construction")
}

/// Two connected blocks with no edges between them.
pub fn disconnected_hypergraph(n1: usize, n2: usize, r: usize, s: usize) -> DirectedHypergraph {
    let a = connected_hypergraph(n1, r, s);
    let b = connected_hypergraph(n2, r, s);
    let mut edges: Vec<Edge> = a.edges().to_vec();
    for e in b.edges() {
        edges.push(Edge {
            tail: e.tail.iter().map(|v| v + n1).collect(),
            head: e.head.iter().map(|v| v + n1).collect(),
        });
    }
    DirectedHypergraph::new(n1 + n2, r, s, edges).expect("blocks are valid and disjoint")
}
