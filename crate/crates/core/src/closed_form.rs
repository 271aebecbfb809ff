//! Exact spectra of the level Markov operators.
//!
//! The determinant of `Q_n(lambda, mu) = B_n + lambda A_n - mu` factors into
//! `alpha + lambda`, a power of `beta`, and powers of the hyperbolas `H_x`
//! indexed by the iterated preimages `x ∈ F^{-k}(0)` of `F(x) = x^2 - d(d-1)`.
//! Setting `lambda = 1` and `mu = |S| t` turns `H_x = 0` into `psi(t) = x`.

use serde::{Deserialize, Serialize};

use crate::algebra::{checked_pow, spinal_set_size, SpinalParams};
use crate::error::{Error, Result};
use crate::oracle::{determinant_with_tol, DenseSymmetricMatrix, DENSE_BUDGET};

/// Deepest preimage tree materialized (`2^k` nodes at depth `k`).
pub const MAX_TREE_DEPTH: usize = 24;

/// Values closer than this are reported as collisions between tree paths.
pub const COLLISION_TOL: f64 = 1e-12;

/// The polynomials of the Schur-complement recursion for fixed `(d, m)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchurPolynomials {
    d: f64,
    dm: f64,
    dm1: f64,
}

impl SchurPolynomials {
    pub fn new(d: usize, m: usize) -> Self {
        let dm1 = (d as f64).powi(m as i32 - 1);
        SchurPolynomials { d: d as f64, dm: dm1 * d as f64, dm1 }
    }

    pub fn alpha(&self, l: f64, mu: f64) -> f64 {
        self.dm - 1.0 - mu + (self.d - 2.0) * l
    }

    pub fn beta(&self, l: f64, mu: f64) -> f64 {
        self.dm - 1.0 - mu - l
    }

    pub fn gamma(&self, l: f64, mu: f64) -> f64 {
        let d = self.d;
        mu * mu - ((d - 3.0) * l + self.dm - 2.0) * mu - ((d - 2.0) * l * l + (d - 3.0) * l + self.dm - 1.0)
    }

    pub fn delta(&self, l: f64, mu: f64) -> f64 {
        let (d, dm, dm1) = (self.d, self.dm, self.dm1);
        mu * mu
            - ((d - 3.0) * l + dm + dm1 - 2.0) * mu
            - ((d - 2.0) * l * l + (dm1 + d - 3.0) * l - dm1 * dm + dm + dm1 - 1.0)
    }

    /// `H_x(lambda, mu)`.
    pub fn h(&self, x: f64, l: f64, mu: f64) -> f64 {
        let d = self.d;
        mu * mu
            - ((d - 2.0) * l + self.dm - 2.0) * mu
            - ((d - 1.0) * l * l + (self.dm1 * x + d - 2.0) * l + self.dm - 1.0)
    }

    /// `(lambda', mu')` with `Q_n(lambda, mu)` reducing to `Q_{n-1}(lambda', mu')`.
    pub fn substitute(&self, l: f64, mu: f64) -> (f64, f64) {
        let ag = self.alpha(l, mu) * self.gamma(l, mu);
        let l2 = l * l;
        (self.dm1 * self.beta(l, mu) * l2 / ag, mu + (self.d - 1.0) * self.delta(l, mu) * l2 / ag)
    }
}

/// `F(x) = x^2 - d(d-1)`.
pub fn f_map(x: f64, d: usize) -> f64 {
    x * x - (d * (d - 1)) as f64
}

/// `(+sqrt(y + d(d-1)), -sqrt(y + d(d-1)))`.
pub fn f_preimages(y: f64, d: usize) -> Result<(f64, f64)> {
    let c = (d * (d - 1)) as f64;
    let r = clamp_radicand(y + c, c)?;
    let s = r.sqrt();
    Ok((s, -s))
}

fn clamp_radicand(r: f64, scale: f64) -> Result<f64> {
    if r >= 0.0 {
        Ok(r)
    } else if r >= -1e-12 * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::NegativeRadicand(r))
    }
}

/// `psi(t) = (|S|^2 t^2 - |S|(|S|-2) t - (|S|+d-2)) / d^{m-1}`.
pub fn psi(t: f64, d: usize, m: usize) -> f64 {
    let s = spinal_set_size(d, m) as f64;
    (s * s * t * t - s * (s - 2.0) * t - (s + d as f64 - 2.0)) / (d as f64).powi(m as i32 - 1)
}

/// Both solutions of `psi(t) = x`, the larger first.
pub fn psi_preimages(x: f64, d: usize, m: usize) -> Result<(f64, f64)> {
    let s = spinal_set_size(d, m) as f64;
    let dm1 = (d as f64).powi(m as i32 - 1);
    let disc = (s - 2.0).powi(2) + 4.0 * (s + d as f64 - 2.0 + dm1 * x);
    let r = clamp_radicand(disc, s * s)?.sqrt();
    Ok(((s - 2.0 + r) / (2.0 * s), (s - 2.0 - r) / (2.0 * s)))
}

/// Choice of square-root branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn pick(self, pair: (f64, f64)) -> f64 {
        match self {
            Sign::Plus => pair.0,
            Sign::Minus => pair.1,
        }
    }
}

pub(crate) fn path_string(path: &[Sign]) -> String {
    path.iter().map(|s| s.symbol()).collect()
}

/// A point of `F^{-k}(0)` addressed by its branch choices from the root `0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreimageNode {
    pub path: Vec<Sign>,
    pub value: f64,
}

impl PreimageNode {
    pub fn depth(&self) -> usize {
        self.path.len()
    }

    /// Level at which the `psi`-preimages of this node first appear.
    pub fn birth_level(&self) -> usize {
        self.depth() + 2
    }
}

/// Levels `0..=depth` of the preimage tree; level `k` lists `F^{-k}(0)`.
pub fn preimage_tree(d: usize, depth: usize) -> Result<Vec<Vec<PreimageNode>>> {
    if depth > MAX_TREE_DEPTH {
        return Err(Error::BudgetExceeded { what: "preimage tree depth", size: depth, limit: MAX_TREE_DEPTH });
    }
    let mut levels = vec![vec![PreimageNode { path: Vec::new(), value: 0.0 }]];
    for _ in 0..depth {
        let prev = levels.last().expect("nonempty");
        let mut next = Vec::with_capacity(prev.len() * 2);
        for node in prev {
            let pair = f_preimages(node.value, d)?;
            for sign in [Sign::Plus, Sign::Minus] {
                let mut path = node.path.clone();
                path.push(sign);
                next.push(PreimageNode { path, value: sign.pick(pair) });
            }
        }
        levels.push(next);
    }
    Ok(levels)
}

/// Where an eigenvalue of `M_n` comes from in the factorization.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SpectrumTag {
    /// The stochastic eigenvalue `1`.
    #[serde(rename = "top")]
    Top,
    /// `(|S| - d)/|S|`, the root of `beta`.
    #[serde(rename = "beta")]
    Beta,
    /// A `psi`-preimage of a node of the preimage tree.
    #[serde(rename = "node")]
    Node { depth: usize, path: String, branch: Sign },
}

impl SpectrumTag {
    /// Smallest level whose spectrum contains the value.
    pub fn birth_level(&self) -> usize {
        match self {
            SpectrumTag::Top => 0,
            SpectrumTag::Beta => 1,
            SpectrumTag::Node { depth, .. } => depth + 2,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SpectrumTag::Top => "top".into(),
            SpectrumTag::Beta => "beta".into(),
            SpectrumTag::Node { path, branch, .. } => format!("node[{path}]{}", branch.symbol()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub eigenvalue: f64,
    pub multiplicity: u64,
    pub tag: SpectrumTag,
}

/// `spec(M_n)` with multiplicities, sorted by eigenvalue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSpectrum {
    pub d: usize,
    pub m: usize,
    pub level: usize,
    pub entries: Vec<SpectrumEntry>,
}

impl LevelSpectrum {
    pub fn total_multiplicity(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// Every eigenvalue repeated by multiplicity, ascending.
    pub fn expanded(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_multiplicity() as usize);
        for e in &self.entries {
            out.extend(std::iter::repeat_n(e.eigenvalue, e.multiplicity as usize));
        }
        out
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.eigenvalue).collect()
    }

    /// Pairs of entries with different tags whose values agree to
    /// [`COLLISION_TOL`]; empty unless two paths produce the same number.
    pub fn collisions(&self) -> Vec<(SpectrumTag, SpectrumTag)> {
        self.entries
            .windows(2)
            .filter(|w| (w[1].eigenvalue - w[0].eigenvalue).abs() <= COLLISION_TOL)
            .map(|w| (w[0].tag.clone(), w[1].tag.clone()))
            .collect()
    }
}

/// `(d-2) d^j + 1`.
pub fn multiplicity_law(d: usize, j: usize) -> u64 {
    (d as u64 - 2) * (d as u64).pow(j as u32) + 1
}

/// `spec(M_n)` from the factorization of `Q_n(1, mu)`.
pub fn level_spectrum(params: &SpinalParams, n: usize) -> Result<LevelSpectrum> {
    level_spectrum_dm(params.d(), params.m(), n)
}

/// The level spectrum depends only on `(d, m, n)`.
pub fn level_spectrum_dm(d: usize, m: usize, n: usize) -> Result<LevelSpectrum> {
    let s = spinal_set_size(d, m) as f64;
    let mut entries = vec![SpectrumEntry { eigenvalue: 1.0, multiplicity: 1, tag: SpectrumTag::Top }];
    if n >= 1 {
        entries.push(SpectrumEntry {
            eigenvalue: (s - d as f64) / s,
            multiplicity: multiplicity_law(d, n - 1),
            tag: SpectrumTag::Beta,
        });
    }
    if n >= 2 {
        for level in preimage_tree(d, n - 2)? {
            for node in level {
                let k = node.depth();
                let mult = multiplicity_law(d, n - k - 2);
                let pair = psi_preimages(node.value, d, m)?;
                for branch in [Sign::Plus, Sign::Minus] {
                    entries.push(SpectrumEntry {
                        eigenvalue: branch.pick(pair),
                        multiplicity: mult,
                        tag: SpectrumTag::Node { depth: k, path: path_string(&node.path), branch },
                    });
                }
            }
        }
    }
    entries.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));
    let spec = LevelSpectrum { d, m, level: n, entries };
    let expected = checked_pow(d, n).map(|x| x as u64);
    debug_assert!(expected.is_none() || Some(spec.total_multiplicity()) == expected);
    Ok(spec)
}

/// Shape of the boundary spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpectrumShape {
    /// `d = 2`: the two closed intervals.
    TwoIntervals([(f64, f64); 2]),
    /// `d >= 3`: isolated eigenvalues accumulating on a Cantor set.
    CantorPlusIsolated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpectrum {
    pub isolated: Vec<f64>,
    /// `psi`-preimages of the tree leaves at the requested depth, sorted.
    pub limit_sample: Vec<f64>,
    pub shape: SpectrumShape,
}

/// `[-1/2^{m-1}, 0]` and `[1 - 1/2^{m-1}, 1]`.
pub fn binary_intervals(m: usize) -> [(f64, f64); 2] {
    let w = 1.0 / 2f64.powi(m as i32 - 1);
    [(-w, 0.0), (1.0 - w, 1.0)]
}

/// Approximates `spec(M_xi)`, which does not depend on `xi`.
pub fn boundary_spectrum(params: &SpinalParams, depth: usize) -> Result<BoundarySpectrum> {
    if depth == 0 {
        return Err(Error::InvalidParams("boundary spectrum needs depth >= 1".into()));
    }
    let (d, m) = (params.d(), params.m());
    let tree = preimage_tree(d, depth)?;
    let mut limit_sample = Vec::with_capacity(2 << depth);
    for node in &tree[depth] {
        let (a, b) = psi_preimages(node.value, d, m)?;
        limit_sample.push(a);
        limit_sample.push(b);
    }
    limit_sample.sort_by(f64::total_cmp);
    if d == 2 {
        return Ok(BoundarySpectrum {
            isolated: Vec::new(),
            limit_sample,
            shape: SpectrumShape::TwoIntervals(binary_intervals(m)),
        });
    }
    let s = params.generator_count() as f64;
    let mut isolated = vec![(s - d as f64) / s];
    for level in &tree[..depth] {
        for node in level {
            let (a, b) = psi_preimages(node.value, d, m)?;
            isolated.push(a);
            isolated.push(b);
        }
    }
    isolated.sort_by(f64::total_cmp);
    Ok(BoundarySpectrum { isolated, limit_sample, shape: SpectrumShape::CantorPlusIsolated })
}

/// A real number as sign and natural log of its magnitude; sign `0` is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedLog {
    pub sign: f64,
    pub log_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog { sign: 0.0, log_abs: f64::NEG_INFINITY };
    pub const ONE: SignedLog = SignedLog { sign: 1.0, log_abs: 0.0 };

    pub fn from_value(x: f64) -> Self {
        if x == 0.0 {
            SignedLog::ZERO
        } else {
            SignedLog { sign: x.signum(), log_abs: x.abs().ln() }
        }
    }

    /// `self * x^e`.
    pub fn times_pow(self, x: f64, e: u64) -> Self {
        if e == 0 {
            return self;
        }
        let f = SignedLog::from_value(x);
        if f.sign == 0.0 || self.sign == 0.0 {
            return SignedLog::ZERO;
        }
        let sign = if e.is_multiple_of(2) { 1.0 } else { f.sign };
        SignedLog { sign: self.sign * sign, log_abs: self.log_abs + e as f64 * f.log_abs }
    }

    /// The plain value; overflows to infinity for huge magnitudes.
    pub fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.log_abs.exp()
        }
    }
}

/// `det Q_n(lambda, mu)` from the product formula.
pub fn qn_determinant_factored(l: f64, mu: f64, d: usize, m: usize, n: usize) -> Result<SignedLog> {
    let p = SchurPolynomials::new(d, m);
    let (alpha, beta) = (p.alpha(l, mu), p.beta(l, mu));
    let mut acc = SignedLog::ONE.times_pow(alpha + l, 1);
    if n == 0 {
        return Ok(acc);
    }
    acc = acc.times_pow(beta, multiplicity_law(d, n - 1));
    if n >= 2 {
        for level in preimage_tree(d, n - 2)? {
            for node in level {
                let e = multiplicity_law(d, n - node.depth() - 2);
                acc = acc.times_pow(p.h(node.value, l, mu), e);
            }
        }
    }
    Ok(acc)
}

/// The block matrices `(A_n, B_n)` of the level adjacency `A_n + B_n`,
/// assembled from their recursive description (row-major, order `d^n`).
pub fn lemma_blocks(d: usize, m: usize, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let size = checked_pow(d, n).filter(|&s| s <= DENSE_BUDGET).ok_or(Error::BudgetExceeded {
        what: "dense block order",
        size: checked_pow(d, n).unwrap_or(usize::MAX),
        limit: DENSE_BUDGET,
    })?;
    let dm1 = (d as f64).powi(m as i32 - 1);
    let dm = dm1 * d as f64;
    let a_n = rotor_block(d, n);
    // B_n built from the innermost block outwards
    let mut b = vec![dm - 1.0];
    let mut order = 1;
    for level in 1..=n {
        let next = order * d;
        let mut nb = vec![0.0; next * next];
        let a_prev = rotor_block(d, level - 1);
        for i in 0..order {
            for j in 0..order {
                let first = dm1 * a_prev[i * order + j] + if i == j { dm1 - 1.0 } else { 0.0 };
                nb[i * next + j] = first;
                let last = (d - 1) * order;
                nb[(last + i) * next + last + j] = b[i * order + j];
            }
            for block in 1..d - 1 {
                let r = block * order + i;
                nb[r * next + r] = dm - 1.0;
            }
        }
        b = nb;
        order = next;
    }
    debug_assert_eq!(order, size);
    Ok((a_n, b))
}

/// `A_n = (J_d - I_d) ⊗ I_{d^{n-1}}`, with `A_0 = (d - 1)`.
fn rotor_block(d: usize, n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![(d - 1) as f64];
    }
    let inner = d.pow(n as u32 - 1);
    let size = inner * d;
    let mut a = vec![0.0; size * size];
    for bi in 0..d {
        for bj in 0..d {
            if bi != bj {
                for k in 0..inner {
                    a[(bi * inner + k) * size + bj * inner + k] = 1.0;
                }
            }
        }
    }
    a
}

/// `det Q_n(lambda, mu)` from the assembled matrix via LU; pivots below
/// `order * 1e-14` relative to the largest entry count as zero.
pub fn qn_determinant_direct(l: f64, mu: f64, d: usize, m: usize, n: usize) -> Result<SignedLog> {
    let (a, b) = lemma_blocks(d, m, n)?;
    let size = d.pow(n as u32);
    let q: Vec<f64> = a
        .iter()
        .zip(&b)
        .enumerate()
        .map(|(i, (x, y))| y + l * x - if i / size == i % size { mu } else { 0.0 })
        .collect();
    let (sign, log_abs) = determinant_with_tol(size, &q, size as f64 * 1e-14)?;
    Ok(SignedLog { sign, log_abs })
}

/// `B_n + lambda A_n` as a symmetric matrix.
pub fn lemma_matrix(l: f64, d: usize, m: usize, n: usize) -> Result<DenseSymmetricMatrix> {
    let (a, b) = lemma_blocks(d, m, n)?;
    DenseSymmetricMatrix::new(d.pow(n as u32), a.iter().zip(&b).map(|(x, y)| y + l * x).collect())
}
