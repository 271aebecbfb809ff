//! Schreier graphs of tree levels and finite balls in boundary orbits, with
//! the Markov operator `(Mf)(v) = |S|^{-1} sum_s f(s v)`.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use crate::action::{act_boundary, act_in_place, word_index, BoundaryPoint, TreeWord};
use crate::algebra::{Generator, SpinalParams};
use crate::error::{Error, Result};
use crate::oracle::{DenseSymmetricMatrix, DENSE_BUDGET};

/// Largest level graph (in vertices) built by default.
pub const LEVEL_VERTEX_BUDGET: usize = 1 << 21;

/// Largest boundary ball (in vertices) built by default.
pub const BALL_VERTEX_BUDGET: usize = 1 << 20;

/// The Schreier graph `Gamma_n` on `X^n`, stored as a target table:
/// the edge labelled `s` leaves `v` towards `s(v)`.
#[derive(Clone, Debug)]
pub struct SchreierLevelGraph {
    params: SpinalParams,
    n: usize,
    generators: Vec<Generator>,
    targets: Vec<u32>,
}

impl SchreierLevelGraph {
    pub fn params(&self) -> &SpinalParams {
        &self.params
    }

    pub fn level(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.targets.len() / self.generators.len()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// `s_j(v)` for the `j`-th generator.
    pub fn target(&self, v: usize, j: usize) -> usize {
        self.targets[v * self.generators.len() + j] as usize
    }

    /// All labelled edges `(v, s(v), s)`, vertex-major.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &Generator)> + '_ {
        let k = self.generators.len();
        self.targets.iter().enumerate().map(move |(e, &t)| (e / k, t as usize, &self.generators[e % k]))
    }

    pub fn word(&self, v: usize) -> TreeWord {
        TreeWord::from_index(v, self.n, self.params.d())
    }

    pub fn markov_matvec(&self, f: &[f64]) -> Result<Vec<f64>> {
        let nv = self.vertex_count();
        if f.len() != nv {
            return Err(Error::DimensionMismatch { expected: nv, found: f.len() });
        }
        let k = self.generators.len();
        let inv = 1.0 / k as f64;
        Ok(self.targets.chunks_exact(k).map(|row| row.iter().map(|&t| f[t as usize]).sum::<f64>() * inv).collect())
    }

    /// Edge multiplicities; dividing by `|S|` gives the Markov matrix.
    pub fn adjacency_dense(&self) -> Result<DenseSymmetricMatrix> {
        let nv = self.vertex_count();
        if nv > DENSE_BUDGET {
            return Err(Error::BudgetExceeded { what: "dense adjacency order", size: nv, limit: DENSE_BUDGET });
        }
        let mut data = vec![0.0; nv * nv];
        for (u, v, _) in self.edges() {
            data[u * nv + v] += 1.0;
        }
        DenseSymmetricMatrix::new(nv, data)
    }

    pub fn markov_dense(&self) -> Result<DenseSymmetricMatrix> {
        Ok(self.adjacency_dense()?.scaled(1.0 / self.generators.len() as f64))
    }

    /// Edge list as CSV `src,dst,label`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("src,dst,label\n");
        for (u, v, g) in self.edges() {
            let _ = writeln!(out, "{u},{v},{}", g.label());
        }
        out
    }

    /// Undirected DOT graph; each pair `{s, s^-1}` is drawn once per vertex.
    pub fn to_dot(&self) -> String {
        let d = self.params.d();
        let mut out = format!("graph level{} {{\n", self.n);
        for v in 0..self.vertex_count() {
            let _ = writeln!(out, "  {v} [label=\"{}\"];", self.word(v));
        }
        for (u, v, g) in self.edges() {
            let inv = g.inverse(d);
            // keep one representative of each inverse pair of edges
            if (u, g) <= (v, &inv) {
                let _ = writeln!(out, "  {u} -- {v} [label=\"{}\"];", g.label());
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Builds `Gamma_n`.
pub fn build_level_graph(params: &SpinalParams, n: usize) -> Result<SchreierLevelGraph> {
    build_level_graph_with_budget(params, n, LEVEL_VERTEX_BUDGET)
}

pub fn build_level_graph_with_budget(params: &SpinalParams, n: usize, budget: usize) -> Result<SchreierLevelGraph> {
    let d = params.d();
    let nv = crate::algebra::checked_pow(d, n).filter(|&v| v <= budget).ok_or(Error::BudgetExceeded {
        what: "level graph vertices",
        size: crate::algebra::checked_pow(d, n).unwrap_or(usize::MAX),
        limit: budget,
    })?;
    let generators = params.generators();
    let mut targets = Vec::with_capacity(nv * generators.len());
    let mut w = vec![0u8; n];
    for v in 0..nv {
        for g in &generators {
            let mut x = w.clone();
            act_in_place(g, &mut x, params.omega());
            targets.push(word_index(&x, d) as u32);
        }
        // advance `w` to the next word in lexicographic order
        for slot in w.iter_mut().rev() {
            *slot += 1;
            if (*slot as usize) < d {
                break;
            }
            *slot = 0;
        }
        debug_assert!(v + 1 == nv || word_index(&w, d) == v + 1);
    }
    Ok(SchreierLevelGraph { params: params.clone(), n, generators, targets })
}

/// The ball of radius `R` around `xi` in the orbital Schreier graph.
#[derive(Clone, Debug)]
pub struct BoundaryBall {
    params: SpinalParams,
    radius: usize,
    generators: Vec<Generator>,
    vertices: Vec<BoundaryPoint>,
    distance: Vec<usize>,
    index: HashMap<BoundaryPoint, usize>,
    /// `targets[v * |S| + j]`, `None` when the neighbour lies outside the ball.
    targets: Vec<Option<u32>>,
}

impl BoundaryBall {
    pub fn center(&self) -> &BoundaryPoint {
        &self.vertices[0]
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn params(&self) -> &SpinalParams {
        &self.params
    }

    pub fn vertices(&self) -> &[BoundaryPoint] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// Graph distance from the center.
    pub fn distance(&self, v: usize) -> usize {
        self.distance[v]
    }

    /// Vertices strictly inside the ball have all their neighbours in it.
    pub fn is_interior(&self, v: usize) -> bool {
        self.distance[v] < self.radius
    }

    pub fn index_of(&self, p: &BoundaryPoint) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn target(&self, v: usize, j: usize) -> Option<usize> {
        self.targets[v * self.generators.len() + j].map(|t| t as usize)
    }

    /// Labelled edges with both ends in the ball.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &Generator)> + '_ {
        let k = self.generators.len();
        self.targets
            .iter()
            .enumerate()
            .filter_map(move |(e, t)| t.map(|t| (e / k, t as usize, &self.generators[e % k])))
    }

    /// The Markov operator with values outside the ball taken as zero; exact
    /// for functions supported on interior vertices.
    pub fn markov_matvec(&self, f: &[f64]) -> Result<Vec<f64>> {
        let nv = self.vertex_count();
        if f.len() != nv {
            return Err(Error::DimensionMismatch { expected: nv, found: f.len() });
        }
        let k = self.generators.len();
        let inv = 1.0 / k as f64;
        Ok(self
            .targets
            .chunks_exact(k)
            .map(|row| row.iter().flatten().map(|&t| f[t as usize]).sum::<f64>() * inv)
            .collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("src,dst,label\n");
        for (u, v, g) in self.edges() {
            let _ = writeln!(out, "{},{},{}", self.vertices[u], self.vertices[v], g.label());
        }
        out
    }
}

/// Breadth-first closure of `{xi}` under `S` up to distance `radius`.
pub fn build_boundary_ball(params: &SpinalParams, xi: &BoundaryPoint, radius: usize) -> Result<BoundaryBall> {
    build_boundary_ball_with_budget(params, xi, radius, BALL_VERTEX_BUDGET)
}

pub fn build_boundary_ball_with_budget(
    params: &SpinalParams,
    xi: &BoundaryPoint,
    radius: usize,
    budget: usize,
) -> Result<BoundaryBall> {
    let d = params.d();
    if let Some(&bad) = xi.head().iter().chain(xi.cycle()).find(|&&x| x as usize >= d) {
        return Err(Error::InvalidParams(format!("letter {bad} not below d = {d}")));
    }
    let generators = params.generators();
    let mut vertices = vec![xi.clone()];
    let mut distance = vec![0];
    let mut index = HashMap::from([(xi.clone(), 0usize)]);
    let mut neighbours: Vec<Vec<BoundaryPoint>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        let imgs: Vec<BoundaryPoint> =
            generators.iter().map(|g| act_boundary(g, &vertices[v], params.omega())).collect();
        if distance[v] < radius {
            for p in &imgs {
                if !index.contains_key(p) {
                    if vertices.len() == budget {
                        return Err(Error::BudgetExceeded {
                            what: "boundary ball vertices",
                            size: budget + 1,
                            limit: budget,
                        });
                    }
                    index.insert(p.clone(), vertices.len());
                    vertices.push(p.clone());
                    distance.push(distance[v] + 1);
                    queue.push_back(vertices.len() - 1);
                }
            }
        }
        if neighbours.len() <= v {
            neighbours.resize(v + 1, Vec::new());
        }
        neighbours[v] = imgs;
    }
    let targets = neighbours.iter().flat_map(|imgs| imgs.iter().map(|p| index.get(p).map(|&i| i as u32))).collect();
    Ok(BoundaryBall { params: params.clone(), radius, generators, vertices, distance, index, targets })
}
