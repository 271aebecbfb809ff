//! Finitely supported eigenfunctions for `d >= 3`.
//!
//! At its birth level `N` an eigenvalue has a `(d-1)`-dimensional eigenspace
//! spanned by functions antisymmetric under swapping two adjacent last
//! letters. Above `N` every eigenfunction is obtained by planting lower-level
//! ones into copies of `Gamma_n` inside `Gamma_{n+1}`, and class-D functions
//! (plus one class-A function on the spine class) plant further into the
//! orbital graph `Gamma_xi`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{BoundaryPoint, TreeWord};
use crate::algebra::SpinalParams;
use crate::closed_form::{level_spectrum, SpectrumTag};
use crate::error::{Error, Result};
use crate::graph::{build_level_graph, BoundaryBall, SchreierLevelGraph};
use crate::oracle::{symmetric_eigen, DEFAULT_TOL};

/// Eigenvalues of `M_N` closer than this are treated as equal when
/// collecting an eigenspace.
pub const EIGENSPACE_TOL: f64 = 1e-8;

/// Entries below this fraction of the largest one are dropped when a dense
/// vector is made sparse.
pub const SPARSITY_TOL: f64 = 1e-13;

/// Residual bound `||M f - lambda f|| <= RESIDUAL_TOL ||f||`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Re-orthogonalization threshold for modified Gram-Schmidt.
pub const MGS_TOL: f64 = 1e-12;

/// The four families of the transfer rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FunctionClass {
    A,
    B,
    C,
    D,
}

/// A function on `X^n`, stored as `(vertex index, value)` sorted by index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseFunction {
    pub level: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseFunction {
    /// Keeps the entries of `dense` above [`SPARSITY_TOL`] relative to the
    /// largest one.
    pub fn from_dense(level: usize, dense: &[f64]) -> Self {
        let scale = dense.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let entries =
            dense.iter().enumerate().filter(|(_, x)| x.abs() > SPARSITY_TOL * scale).map(|(i, &x)| (i, x)).collect();
        SparseFunction { level, entries }
    }

    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d.pow(self.level as u32)];
        for &(i, x) in &self.entries {
            out[i] = x;
        }
        out
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, x)| x * x).sum::<f64>().sqrt()
    }

    pub fn value_at(&self, idx: usize) -> f64 {
        self.entries.binary_search_by_key(&idx, |e| e.0).map_or(0.0, |k| self.entries[k].1)
    }

    /// `rho^i`: the copy of `f` on the vertices `v i` of level `n + 1`.
    pub fn plant(&self, i: usize, d: usize) -> SparseFunction {
        SparseFunction { level: self.level + 1, entries: self.entries.iter().map(|&(v, x)| (v * d + i, x)).collect() }
    }

    /// `rho = sum_i rho^i`.
    pub fn plant_all(&self, d: usize) -> SparseFunction {
        let mut entries: Vec<(usize, f64)> =
            self.entries.iter().flat_map(|&(v, x)| (0..d).map(move |i| (v * d + i, x))).collect();
        entries.sort_by_key(|e| e.0);
        SparseFunction { level: self.level + 1, entries }
    }

    /// `||M_n f - lambda f|| / ||f||` on the level graph, evaluated on the
    /// support and its neighbours only.
    pub fn level_residual(&self, graph: &SchreierLevelGraph, lambda: f64) -> f64 {
        let values: HashMap<usize, f64> = self.entries.iter().copied().collect();
        let k = graph.generators().len();
        let mut around: Vec<usize> =
            self.entries.iter().flat_map(|&(v, _)| (0..k).map(move |j| graph.target(v, j))).collect();
        around.extend(self.entries.iter().map(|e| e.0));
        around.sort_unstable();
        around.dedup();
        let res: f64 = around
            .iter()
            .map(|&u| {
                let mf: f64 =
                    (0..k).map(|j| values.get(&graph.target(u, j)).copied().unwrap_or(0.0)).sum::<f64>() / k as f64;
                let r = mf - lambda * values.get(&u).copied().unwrap_or(0.0);
                r * r
            })
            .sum();
        res.sqrt() / self.norm()
    }
}

/// `Phi^i_n`: swap the last letters `i` and `i + 1`.
pub fn swap_last_letter(idx: usize, i: usize, d: usize) -> usize {
    match idx % d {
        x if x == i => idx + 1,
        x if x == i + 1 => idx - 1,
        _ => idx,
    }
}

/// `F_{lambda,n}` split into its four classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelEigenbasis {
    pub d: usize,
    pub eigenvalue: f64,
    pub tag: SpectrumTag,
    pub birth_level: usize,
    pub level: usize,
    pub class_a: Vec<SparseFunction>,
    pub class_b: Vec<SparseFunction>,
    pub class_c: Vec<SparseFunction>,
    pub class_d: Vec<SparseFunction>,
}

impl LevelEigenbasis {
    pub fn count(&self) -> usize {
        self.class_a.len() + self.class_b.len() + self.class_c.len() + self.class_d.len()
    }

    pub fn class(&self, c: FunctionClass) -> &[SparseFunction] {
        match c {
            FunctionClass::A => &self.class_a,
            FunctionClass::B => &self.class_b,
            FunctionClass::C => &self.class_c,
            FunctionClass::D => &self.class_d,
        }
    }

    /// Every member with its class, in the order A, B, C, D.
    pub fn members(&self) -> impl Iterator<Item = (FunctionClass, &SparseFunction)> + '_ {
        [FunctionClass::A, FunctionClass::B, FunctionClass::C, FunctionClass::D]
            .into_iter()
            .flat_map(move |c| self.class(c).iter().map(move |f| (c, f)))
    }

    /// Largest relative residual over all members.
    pub fn max_residual(&self, graph: &SchreierLevelGraph) -> Result<f64> {
        if graph.level() != self.level {
            return Err(Error::DimensionMismatch { expected: self.level, found: graph.level() });
        }
        Ok(self.members().map(|(_, f)| f.level_residual(graph, self.eigenvalue)).fold(0.0, f64::max))
    }

    /// The vanishing pattern at the two marked vertices `(d-1)^{n-1} 0` and
    /// `(d-1)^n`: only class B may be nonzero at the first, only class A at
    /// the second.
    pub fn marked_vertices_ok(&self) -> bool {
        let d = self.d;
        let spine = TreeWord::spine(self.level, d).index(d);
        let turn = spine - (d - 1);
        self.members().all(|(c, f)| {
            (c == FunctionClass::B || f.value_at(turn) == 0.0) && (c == FunctionClass::A || f.value_at(spine) == 0.0)
        })
    }

    /// One step of the transfer rules.
    pub fn propagate(&self) -> LevelEigenbasis {
        let d = self.d;
        let a = &self.class_a;
        let class_a = a.iter().map(|f| f.plant(d - 1, d)).collect();
        let class_b = a.iter().map(|f| f.plant(0, d)).collect();
        let mut class_c: Vec<SparseFunction> = (1..d - 1).flat_map(|i| a.iter().map(move |f| f.plant(i, d))).collect();
        class_c.extend(self.class_b.iter().map(|f| f.plant_all(d)));
        let class_d =
            (0..d).flat_map(|i| self.class_c.iter().chain(&self.class_d).map(move |f| f.plant(i, d))).collect();
        LevelEigenbasis {
            d,
            eigenvalue: self.eigenvalue,
            tag: self.tag.clone(),
            birth_level: self.birth_level,
            level: self.level + 1,
            class_a,
            class_b,
            class_c,
            class_d,
        }
    }

    /// Propagates up to level `n`.
    pub fn propagate_to(&self, n: usize) -> LevelEigenbasis {
        let mut out = self.clone();
        while out.level < n {
            out = out.propagate();
        }
        out
    }

    pub fn to_records(&self) -> Vec<EigenfunctionRecord> {
        self.members()
            .map(|(class, f)| EigenfunctionRecord {
                lambda: self.eigenvalue,
                birth_level: self.birth_level,
                class,
                support: f
                    .entries
                    .iter()
                    .map(|&(v, x)| (TreeWord::from_index(v, self.level, self.d).to_string(), x))
                    .collect(),
            })
            .collect()
    }
}

/// `propagate_eigenbasis` of the transfer rules, as a free function.
pub fn propagate_eigenbasis(basis: &LevelEigenbasis) -> LevelEigenbasis {
    basis.propagate()
}

/// Serialized form of one eigenfunction: vertices are written as words.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionRecord {
    pub lambda: f64,
    pub birth_level: usize,
    pub class: FunctionClass,
    pub support: Vec<(String, f64)>,
}

fn require_branching(params: &SpinalParams) -> Result<()> {
    if params.d() < 3 {
        return Err(Error::InvalidParams(format!("antisymmetric eigenbases need d >= 3, got d = {}", params.d())));
    }
    Ok(())
}

/// The bases of all eigenvalues born at level `n`, from one dense
/// eigendecomposition of `M_n`. Each basis starts from a random member of
/// the eigenspace drawn from `seed`.
pub fn birth_eigenbases(params: &SpinalParams, n: usize, seed: u64) -> Result<Vec<LevelEigenbasis>> {
    require_branching(params)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let graph = build_level_graph(params, n)?;
    let eig = symmetric_eigen(&graph.markov_dense()?, DEFAULT_TOL)?;
    let spectrum = level_spectrum(params, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32));
    spectrum
        .entries
        .iter()
        .filter(|e| e.tag.birth_level() == n)
        .map(|e| basis_from_eigenspace(&graph, &eig.values, &eig.vectors, e.eigenvalue, e.tag.clone(), &mut rng))
        .collect()
}

/// The basis of Prop-style antisymmetric functions for one eigenvalue born
/// at level `n`.
pub fn base_eigenbasis(params: &SpinalParams, n: usize, lambda: f64, seed: u64) -> Result<LevelEigenbasis> {
    require_branching(params)?;
    let spectrum = level_spectrum(params, n)?;
    let entry = spectrum
        .entries
        .iter()
        .find(|e| (e.eigenvalue - lambda).abs() <= EIGENSPACE_TOL)
        .ok_or(Error::NotBirthEigenvalue(lambda, n, 0))?;
    if entry.tag.birth_level() != n {
        return Err(Error::NotBirthEigenvalue(lambda, n, entry.multiplicity as usize));
    }
    let graph = build_level_graph(params, n)?;
    let eig = symmetric_eigen(&graph.markov_dense()?, DEFAULT_TOL)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32));
    basis_from_eigenspace(&graph, &eig.values, &eig.vectors, entry.eigenvalue, entry.tag.clone(), &mut rng)
}

fn basis_from_eigenspace(
    graph: &SchreierLevelGraph,
    values: &[f64],
    vectors: &[Vec<f64>],
    lambda: f64,
    tag: SpectrumTag,
    rng: &mut ChaCha8Rng,
) -> Result<LevelEigenbasis> {
    let d = graph.params().d();
    let n = graph.level();
    let space: Vec<&Vec<f64>> =
        values.iter().zip(vectors).filter(|(v, _)| (*v - lambda).abs() <= EIGENSPACE_TOL).map(|(_, x)| x).collect();
    if space.len() != d - 1 {
        return Err(Error::NotBirthEigenvalue(lambda, n, space.len()));
    }
    let mut f = vec![0.0; graph.vertex_count()];
    for v in &space {
        let c: f64 = rng.gen_range(-1.0..1.0);
        for (a, b) in f.iter_mut().zip(v.iter()) {
            *a += c * b;
        }
    }
    let mut fs = Vec::with_capacity(d - 1);
    for i in 0..d - 1 {
        let mut fi: Vec<f64> = (0..f.len()).map(|v| f[v] - f[swap_last_letter(v, i, d)]).collect();
        let norm = fi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-8 {
            return Err(Error::DefectiveEigenspace(lambda, format!("antisymmetric part {i} vanishes")));
        }
        fi.iter_mut().for_each(|x| *x /= norm);
        let sparse = SparseFunction::from_dense(n, &fi);
        let res = sparse.level_residual(graph, lambda);
        if res > RESIDUAL_TOL {
            return Err(Error::DefectiveEigenspace(lambda, format!("residual {res:e} of member {i}")));
        }
        fs.push(sparse);
    }
    let class_a = vec![fs.pop().expect("d >= 3")];
    let class_b = vec![fs.remove(0)];
    Ok(LevelEigenbasis {
        d,
        eigenvalue: lambda,
        tag,
        birth_level: n,
        level: n,
        class_a,
        class_b,
        class_c: fs,
        class_d: Vec::new(),
    })
}

/// An eigenfunction of `M_xi` planted from a level-`n` function onto the
/// vertices `v sigma^n(xi)` of a boundary ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedFunction {
    pub eigenvalue: f64,
    pub birth_level: usize,
    pub level: usize,
    pub class: FunctionClass,
    /// `(ball vertex index, value)`.
    pub support: Vec<(usize, f64)>,
}

impl ExtendedFunction {
    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    /// `||M_xi f - lambda f|| / ||f||`; exact because the support lies in
    /// the interior of the ball.
    pub fn residual(&self, ball: &BoundaryBall) -> f64 {
        let values: HashMap<usize, f64> = self.support.iter().copied().collect();
        let k = ball.generators().len();
        let mut around: Vec<usize> = self
            .support
            .iter()
            .flat_map(|&(v, _)| (0..k).map(move |j| ball.target(v, j).expect("interior vertex")))
            .collect();
        around.extend(self.support.iter().map(|e| e.0));
        around.sort_unstable();
        around.dedup();
        let res: f64 = around
            .iter()
            .map(|&u| {
                let mf: f64 = (0..k)
                    .filter_map(|j| ball.target(u, j))
                    .map(|t| values.get(&t).copied().unwrap_or(0.0))
                    .sum::<f64>()
                    / k as f64;
                let r = mf - self.eigenvalue * values.get(&u).copied().unwrap_or(0.0);
                r * r
            })
            .sum();
        let norm = self.support.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        res.sqrt() / norm
    }

    pub fn to_record(&self, ball: &BoundaryBall) -> EigenfunctionRecord {
        EigenfunctionRecord {
            lambda: self.eigenvalue,
            birth_level: self.birth_level,
            class: self.class,
            support: self.support.iter().map(|&(v, x)| (ball.vertices()[v].to_string(), x)).collect(),
        }
    }
}

/// Plants the class-D members of `basis`, and the class-A member when
/// `sigma^n(xi) = (d-1)^N`, into `ball`. Every planted vertex must be
/// interior to the ball.
pub fn extend_to_ball(basis: &LevelEigenbasis, ball: &BoundaryBall) -> Result<Vec<ExtendedFunction>> {
    let d = basis.d;
    let n = basis.level;
    let tail = ball.center().shift(n);
    let spine_tail = tail.constant_tail_start((d - 1) as u8) == Some(0);
    let mut chosen: Vec<(FunctionClass, &SparseFunction)> =
        basis.class_d.iter().map(|f| (FunctionClass::D, f)).collect();
    if spine_tail {
        chosen.extend(basis.class_a.iter().map(|f| (FunctionClass::A, f)));
    }
    chosen
        .into_iter()
        .map(|(class, f)| {
            let support = f
                .entries
                .iter()
                .map(|&(v, x)| {
                    let word = TreeWord::from_index(v, n, d);
                    let p = tail.with_prefix(word.letters());
                    match ball.index_of(&p) {
                        Some(i) if ball.is_interior(i) => Ok((i, x)),
                        _ => Err(Error::BallTooSmall {
                            radius: ball.radius(),
                            reason: format!("planted vertex {p} is not interior"),
                        }),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ExtendedFunction {
                eigenvalue: basis.eigenvalue,
                birth_level: basis.birth_level,
                level: n,
                class,
                support,
            })
        })
        .collect()
}

/// Modified Gram-Schmidt with one re-orthogonalization pass; vectors whose
/// remaining norm is below `MGS_TOL` times their original norm are dropped.
pub fn orthonormalize(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let start = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if start == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > MGS_TOL * start {
            w.iter_mut().for_each(|x| *x /= norm);
            basis.push(w);
        }
    }
    basis
}

/// Captured mass of test vectors under the eigenfunctions supported in the
/// copy `X^L sigma^L(xi)` of `Gamma_L` inside `Gamma_xi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub level: usize,
    /// Orthonormal rank of the eigenfunctions found in the copy.
    pub rank: usize,
    /// Squared norm of the projection of the unit mass at `xi`.
    pub delta_mass: f64,
    /// The same for random unit vectors on the smaller copy of level `L-2`.
    pub random_masses: Vec<f64>,
    /// Witnesses `k <= L` with `k, k+1 ∈ I_xi`.
    pub w_certificate: Vec<usize>,
}

/// Collects every eigenfunction of `M_xi` from the system above (eigenvalues
/// born at levels `1..=L`) whose support lies in `X^L sigma^L(xi)`, and
/// measures how much of `delta_xi` and of random vectors they capture.
///
/// A class-C or class-D function at level `L` is planted twice along
/// `xi_L xi_{L+1}` to reach class D; a class-A function gets there too when
/// `xi_L` is not `0` or `d-1`, or stays class A on the spine tail. Working
/// at level `L + 2` and keeping the functions living on the copy indexed
/// by `xi_L xi_{L+1}` captures exactly these.
pub fn completeness_check(
    params: &SpinalParams,
    xi: &BoundaryPoint,
    level: usize,
    samples: usize,
    seed: u64,
) -> Result<CompletenessReport> {
    require_branching(params)?;
    let d = params.d();
    let l = level;
    if l < 2 {
        return Err(Error::InvalidParams("completeness check needs level >= 2".into()));
    }
    let (x0, x1) = (xi.letter(l) as usize, xi.letter(l + 1) as usize);
    let copy = x0 * d + x1;
    let spine_tail = xi.shift(l).constant_tail_start((d - 1) as u8) == Some(0);
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    for birth in 1..=l {
        for basis in birth_eigenbases(params, birth, seed)? {
            let at_l = basis.propagate_to(l);
            if spine_tail {
                vectors.extend(at_l.class_a.iter().map(|f| f.to_dense(d)));
            }
            let top = at_l.propagate_to(l + 2);
            for f in &top.class_d {
                if f.entries.iter().all(|&(v, _)| v % (d * d) == copy) {
                    let stripped = SparseFunction {
                        level: l,
                        entries: f.entries.iter().map(|&(v, x)| (v / (d * d), x)).collect(),
                    };
                    vectors.push(stripped.to_dense(d));
                }
            }
        }
    }
    let q = orthonormalize(&vectors);
    let mass = |u: &[f64]| -> f64 { q.iter().map(|b| b.iter().zip(u).map(|(a, c)| a * c).sum::<f64>().powi(2)).sum() };
    let size = d.pow(l as u32);
    let mut delta = vec![0.0; size];
    delta[TreeWord::new(xi.prefix(l), d)?.index(d)] = 1.0;
    let delta_mass = mass(&delta);
    // random vectors on the vertices of the copy of level L-2 around xi
    let inner = TreeWord::new(xi.prefix(l)[l - 2..].to_vec(), d)?.index(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_masses = (0..samples)
        .map(|_| {
            let mut u = vec![0.0; size];
            for v in 0..d.pow(l as u32 - 2) {
                u[v * d * d + inner] = rng.gen_range(-1.0..1.0);
            }
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            u.iter_mut().for_each(|x| *x /= norm);
            mass(&u)
        })
        .collect();
    Ok(CompletenessReport {
        level: l,
        rank: q.len(),
        delta_mass,
        random_masses,
        w_certificate: crate::action::w_certificate(xi, l, d),
    })
}

/// The generating set of the antisymmetric space at level `n`: the
/// differences `(rho^{i+1} - rho^i) f` of non-B members at level `n-1` for
/// eigenvalues born below `n`, and the non-B members of the bases born at
/// `n`. Returned dense over `X^n`.
pub fn antisymmetric_generators(params: &SpinalParams, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    require_branching(params)?;
    let d = params.d();
    let mut out = Vec::new();
    for birth in 1..=n {
        for basis in birth_eigenbases(params, birth, seed)? {
            if birth == n {
                out.extend(basis.members().filter(|(c, _)| *c != FunctionClass::B).map(|(_, f)| f.to_dense(d)));
                continue;
            }
            let below = basis.propagate_to(n - 1);
            for (c, f) in below.members() {
                if c == FunctionClass::B {
                    continue;
                }
                for i in 1..d - 1 {
                    let mut v = f.plant(i + 1, d).to_dense(d);
                    for (idx, x) in f.plant(i, d).entries {
                        v[idx] -= x;
                    }
                    out.push(v);
                }
            }
        }
    }
    Ok(out)
}

/// Whether `f` lies in the antisymmetric space: zero on the copy with last
/// letter `0`, and summing to zero over the last letter elsewhere.
pub fn is_antisymmetric(f: &[f64], d: usize) -> bool {
    let scale = f.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    f.chunks_exact(d)
        .all(|block| block[0].abs() <= 1e-12 * scale && block[1..].iter().sum::<f64>().abs() <= 1e-12 * scale)
}
