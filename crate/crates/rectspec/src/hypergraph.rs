//! (r,s)-uniform directed hypergraphs and their adjacency tensors.
//!
//! Every edge designates r tail vertices and s head vertices out of one
//! shared vertex set. The adjacency tensor is (r,s)-order (n,n)-dimensional
//! with a one at *every* ordered tuple whose lower-index set is some edge's
//! tail and whose upper-index set is that edge's head, so each edge
//! contributes r!·s! unit entries and the tensor is partially symmetric by
//! construction. No factorial normalization is applied.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::tensor::RectTensor;

/// One directed hyperedge: disjoint sorted tail and head vertex sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub tail: Vec<usize>,
    pub head: Vec<usize>,
}

/// An (r,s)-uniform directed hypergraph on vertices `0..vertex_count`.
#[derive(Debug, Clone)]
pub struct DirectedHypergraph {
    pub vertex_count: usize,
    pub r: usize,
    pub s: usize,
    edges: Vec<Edge>,
}

/// Out- and indegree of every vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Degrees {
    pub outdegree: Vec<usize>,
    pub indegree: Vec<usize>,
}

impl Degrees {
    /// Vertices with nonzero outdegree.
    pub fn nonzero_out(&self) -> Vec<usize> {
        (0..self.outdegree.len()).filter(|&v| self.outdegree[v] > 0).collect()
    }

    /// Vertices with nonzero indegree.
    pub fn nonzero_in(&self) -> Vec<usize> {
        (0..self.indegree.len()).filter(|&v| self.indegree[v] > 0).collect()
    }
}

impl DirectedHypergraph {
    /// Validate and build a hypergraph from 0-based edges. Each tail needs
    /// exactly r distinct vertices, each head s, tail and head of one edge
    /// are disjoint, and no two edges share both tail set and head set.
    pub fn new(vertex_count: usize, r: usize, s: usize, edges: Vec<Edge>) -> Result<Self> {
        if vertex_count == 0 || r == 0 || s == 0 {
            return Err(Error::domain("vertex count and edge sizes must be positive"));
        }
        let mut seen: BTreeSet<(Vec<usize>, Vec<usize>)> = BTreeSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for edge in edges {
            let mut tail = edge.tail;
            let mut head = edge.head;
            tail.sort_unstable();
            head.sort_unstable();
            if tail.len() != r || tail.iter().dedup().count() != r {
                return Err(Error::domain(format!(
                    "edge tail must have {r} distinct vertices"
                )));
            }
            if head.len() != s || head.iter().dedup().count() != s {
                return Err(Error::domain(format!(
                    "edge head must have {s} distinct vertices"
                )));
            }
            if let Some(&v) = tail.iter().chain(&head).find(|&&v| v >= vertex_count) {
                return Err(Error::domain(format!(
                    "vertex {} out of range [1..{vertex_count}]",
                    v + 1
                )));
            }
            if tail.iter().any(|v| head.binary_search(v).is_ok()) {
                return Err(Error::domain(
                    "tail and head of an edge must be disjoint",
                ));
            }
            if !seen.insert((tail.clone(), head.clone())) {
                return Err(Error::domain("duplicate edge"));
            }
            normalized.push(Edge { tail, head });
        }
        Ok(DirectedHypergraph {
            vertex_count,
            r,
            s,
            edges: normalized,
        })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// The (r,s)-order (n,n)-dimensional 0/1 adjacency tensor, with a unit
    /// entry at every tail/head permutation of every edge.
    pub fn adjacency_tensor(&self) -> RectTensor {
        let n = self.vertex_count;
        let mut tensor = RectTensor::zeros(self.r, self.s, n, n);
        for edge in &self.edges {
            for lower in edge.tail.iter().copied().permutations(self.r) {
                for upper in edge.head.iter().copied().permutations(self.s) {
                    tensor
                        .set(&lower, &upper, 1.0)
                        .expect("edge vertices validated at construction");
                }
            }
        }
        tensor
    }

    /// Outdegree `d+_v = #{e : v in tail(e)}` and indegree
    /// `d-_v = #{e : v in head(e)}` for every vertex.
    pub fn degrees(&self) -> Degrees {
        let mut outdegree = vec![0usize; self.vertex_count];
        let mut indegree = vec![0usize; self.vertex_count];
        for edge in &self.edges {
            for &v in &edge.tail {
                outdegree[v] += 1;
            }
            for &v in &edge.head {
                indegree[v] += 1;
            }
        }
        Degrees {
            outdegree,
            indegree,
        }
    }

    /// Serialize in the `dhg v1` text format (1-based labels).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dhg v1 {} {} {}", self.r, self.s, self.vertex_count);
        for edge in &self.edges {
            let tail = edge.tail.iter().map(|v| (v + 1).to_string()).join(" ");
            let head = edge.head.iter().map(|v| (v + 1).to_string()).join(" ");
            let _ = writeln!(out, "{tail} > {head}");
        }
        out
    }
}

/// Parse the `dhg v1` text format.
///
/// Header `dhg v1 r s n`, then one edge per line: r tail labels, a literal
/// `>`, s head labels, whitespace-separated and 1-based. `#` starts a
/// comment.
pub fn parse_hypergraph(text: &str) -> Result<DirectedHypergraph> {
    let mut lines = text.lines().enumerate().filter_map(|(k, line)| {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            None
        } else {
            Some((k + 1, trimmed))
        }
    });
    let (header_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty input".to_string()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "dhg" || fields[1] != "v1" {
        return Err(Error::parse(header_no, "expected header `dhg v1 r s n`".to_string()));
    }
    let nums: Vec<usize> = fields[2..]
        .iter()
        .map(|f| {
            f.parse::<usize>()
                .map_err(|_| Error::parse(header_no, format!("bad header field `{f}`")))
        })
        .collect::<Result<_>>()?;
    let (r, s, n) = (nums[0], nums[1], nums[2]);
    if r == 0 || s == 0 || n == 0 {
        return Err(Error::parse(header_no, "r, s and n must be positive".to_string()));
    }

    let mut seen: BTreeSet<(Vec<usize>, Vec<usize>)> = BTreeSet::new();
    let mut edges = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let sep = fields.iter().position(|&f| f == ">").ok_or_else(|| {
            Error::parse(line_no, "expected `tail > head`".to_string())
        })?;
        if sep != r || fields.len() != r + s + 1 {
            return Err(Error::parse(
                line_no,
                format!("expected {r} tail and {s} head vertices around `>`"),
            ));
        }
        let parse_vertex = |f: &str| -> Result<usize> {
            let v = f
                .parse::<usize>()
                .map_err(|_| Error::parse(line_no, format!("bad vertex label `{f}`")))?;
            if v == 0 || v > n {
                return Err(Error::parse(line_no, format!("vertex {v} out of range [1..{n}]")));
            }
            Ok(v - 1)
        };
        let mut tail: Vec<usize> = fields[..sep].iter().map(|f| parse_vertex(f)).collect::<Result<_>>()?;
        let mut head: Vec<usize> =
            fields[sep + 1..].iter().map(|f| parse_vertex(f)).collect::<Result<_>>()?;
        tail.sort_unstable();
        head.sort_unstable();
        if tail.iter().dedup().count() != r {
            return Err(Error::parse(line_no, "duplicate vertex in tail".to_string()));
        }
        if head.iter().dedup().count() != s {
            return Err(Error::parse(line_no, "duplicate vertex in head".to_string()));
        }
        if tail.iter().any(|v| head.binary_search(v).is_ok()) {
            return Err(Error::parse(
                line_no,
                "tail and head of an edge must be disjoint".to_string(),
            ));
        }
        if !seen.insert((tail.clone(), head.clone())) {
            return Err(Error::parse(line_no, "duplicate edge".to_string()));
        }
        edges.push(Edge { tail, head });
    }
    DirectedHypergraph::new(n, r, s, edges)
}
