//! Generating subsets on the binary tree and the weighted walks on `Z` they
//! induce: `q_pi` numbers, Cantor-versus-intervals classification,
//! Floquet–Bloch bands of periodic walks and windowed spectra of aperiodic
//! ones.
//!
//! For `d = 2` the orbital Schreier graphs are lines. With the vertices
//! relabelled by `Z`, the bond `(v, v+1)` for even `v` carries the `a`-edge,
//! and the bond at `v ≡ 2^{i+1} - 1 (mod 2^{i+2})` carries the `q_{omega_i}`
//! spine generators not killed by `omega_i`; the rest of `T` are loops.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{Epimorphism, OmegaSequence, ResidueVector, SpinalParams};
use crate::error::{Error, Result};
use crate::oracle::{
    ring_count_below, ring_eigenvalues, symmetric_eigenvalues, tridiagonal_count_below, tridiagonal_eigenvalues,
    DenseSymmetricMatrix, DEFAULT_TOL,
};

/// Default number of quasimomenta sampled over `[-pi, pi]`.
pub const DEFAULT_K_SAMPLES: usize = 4097;

/// Minimal width of a gap counted by [`cantor_gap_witness`].
pub const GAP_MARGIN: f64 = 1e-3;

/// Intervals whose ends are this close are merged; bands of a walk written
/// with a non-minimal period touch at `k = 0, pi` up to rounding.
pub const BAND_MERGE_TOL: f64 = 1e-9;

/// Deepest window accepted by [`window_walk`].
pub const MAX_WINDOW_DEPTH: usize = 16;

fn require_binary(d: usize) -> Result<()> {
    if d != 2 {
        return Err(Error::RequiresBinaryTree(d));
    }
    Ok(())
}

/// `T = {a} ∪ spine`, a subset of the spinal generators for `d = 2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratingSubset {
    m: usize,
    spine: Vec<ResidueVector>,
}

impl GeneratingSubset {
    /// Validates that the spine part consists of distinct nonzero elements
    /// of `B = (Z/2)^m` spanning `B`.
    pub fn new(m: usize, spine: Vec<ResidueVector>) -> Result<Self> {
        for (i, b) in spine.iter().enumerate() {
            if b.modulus() != 2 || b.dim() != m {
                return Err(Error::GeneratingSet(format!("{} is not an element of (Z/2)^{m}", b.to_comma_string())));
            }
            if b.is_zero() {
                return Err(Error::GeneratingSet("the identity is not a generator".into()));
            }
            if spine[..i].contains(b) {
                return Err(Error::GeneratingSet(format!("{} listed twice", b.to_digit_string())));
            }
        }
        if gf2_rank(&spine) != m {
            return Err(Error::GeneratingSet(format!("spine part does not generate B = (Z/2)^{m}")));
        }
        Ok(GeneratingSubset { m, spine })
    }

    /// The spinal set `S`: `a` and every nonzero `b`.
    pub fn spinal(m: usize) -> Result<Self> {
        GeneratingSubset::new(m, ResidueVector::enumerate(m, 2).into_iter().filter(|b| !b.is_zero()).collect())
    }

    /// The Šunić set `{a, b_1, ..., b_m}` with `b_i` the `i`-th unit vector.
    pub fn sunic(m: usize) -> Result<Self> {
        GeneratingSubset::new(m, (0..m).map(|i| unit(m, i)).collect())
    }

    /// Parses a comma-separated list. Tokens: `a` (mandatory); `b1b3` for a
    /// product of unit vectors; `b:0110` for an explicit element; and, when
    /// `m = 2`, the classical letters `b = (0,1)`, `c = (1,1)`, `d = (1,0)`.
    pub fn parse(s: &str, m: usize) -> Result<Self> {
        let mut has_a = false;
        let mut spine = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok {
                "a" => has_a = true,
                "b" | "c" | "d" if m == 2 => spine.push(ResidueVector::new(
                    match tok {
                        "b" => vec![0, 1],
                        "c" => vec![1, 1],
                        _ => vec![1, 0],
                    },
                    2,
                )),
                t if t.starts_with("b:") => spine.push(ResidueVector::parse_digits(&t[2..], 2)?),
                t => spine.push(parse_unit_product(t, m)?),
            }
        }
        if !has_a {
            return Err(Error::GeneratingSet("T must contain a".into()));
        }
        GeneratingSubset::new(m, spine)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn spine(&self) -> &[ResidueVector] {
        &self.spine
    }

    /// `|T|`, counting `a`.
    pub fn size(&self) -> usize {
        self.spine.len() + 1
    }

    /// `q_pi = |T ∩ B \ Ker(pi)|`.
    pub fn q(&self, pi: &Epimorphism) -> usize {
        self.spine.iter().filter(|b| !pi.contains_in_kernel(b)).count()
    }

    /// Comma-separated form accepted by [`GeneratingSubset::parse`].
    pub fn to_list_string(&self) -> String {
        std::iter::once("a".to_string())
            .chain(self.spine.iter().map(|b| format!("b:{}", b.to_digit_string())))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn unit(m: usize, i: usize) -> ResidueVector {
    let mut e = vec![0; m];
    e[i] = 1;
    ResidueVector::new(e, 2)
}

fn parse_unit_product(tok: &str, m: usize) -> Result<ResidueVector> {
    let bad = || Error::GeneratingSet(format!("cannot read generator `{tok}`"));
    let mut acc = ResidueVector::zero(m, 2);
    let mut rest = tok;
    if rest.is_empty() {
        return Err(bad());
    }
    while !rest.is_empty() {
        rest = rest.strip_prefix('b').ok_or_else(bad)?;
        let digits = rest.chars().take_while(char::is_ascii_digit).count();
        let i: usize = rest[..digits].parse().map_err(|_| bad())?;
        if i == 0 || i > m {
            return Err(Error::GeneratingSet(format!("b{i} out of range 1..={m}")));
        }
        acc = acc.add(&unit(m, i - 1));
        rest = &rest[digits..];
    }
    Ok(acc)
}

fn to_mask(b: &ResidueVector) -> u64 {
    b.entries().iter().enumerate().fold(0, |acc, (i, &x)| acc | ((x as u64 & 1) << i))
}

/// Rank over GF(2).
fn gf2_rank(vs: &[ResidueVector]) -> usize {
    let mut pivots: Vec<u64> = Vec::new();
    for v in vs {
        let mut x = to_mask(v);
        for &p in &pivots {
            x = x.min(x ^ p);
        }
        if x != 0 {
            pivots.push(x);
            pivots.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    pivots.len()
}

/// `q_pi` for every epimorphism occurring in `omega`, in order of first
/// occurrence.
pub fn q_numbers(t: &GeneratingSubset, omega: &OmegaSequence) -> Result<Vec<(Epimorphism, usize)>> {
    require_binary(omega.degree())?;
    check_rank(t, omega)?;
    Ok(omega.distinct().into_iter().map(|pi| (pi.clone(), t.q(pi))).collect())
}

fn check_rank(t: &GeneratingSubset, omega: &OmegaSequence) -> Result<()> {
    if omega.rank() != t.m {
        return Err(Error::DimensionMismatch { expected: omega.rank(), found: t.m });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumType {
    Cantor,
    Intervals,
}

/// Cantor iff the `q_pi` over the recurrent epimorphisms are not all equal.
pub fn classify_spectrum_type(t: &GeneratingSubset, omega: &OmegaSequence) -> Result<SpectrumType> {
    require_binary(omega.degree())?;
    check_rank(t, omega)?;
    let qs: Vec<usize> = omega.recurrent().into_iter().map(|pi| t.q(pi)).collect();
    Ok(if qs.windows(2).all(|w| w[0] == w[1]) { SpectrumType::Intervals } else { SpectrumType::Cantor })
}

/// A minimal generating set with Cantor spectrum: for two distinct recurrent
/// `pi, pi'` with kernels `K, K'`, take a basis `x_1..x_{m-2}` of `K ∩ K'`,
/// `y ∈ K \ K'`, `y' ∈ K' \ K`, and `T = {a, x_1, ..., x_{m-2}, y, y y'}`.
/// Then `q_pi = 1` and `q_pi' = 2`.
pub fn cantor_generating_set(params: &SpinalParams) -> Result<GeneratingSubset> {
    require_binary(params.d())?;
    let m = params.m();
    let rec = params.omega().recurrent();
    if rec.len() < 2 {
        return Err(Error::GeneratingSet("needs two distinct epimorphisms occurring infinitely often".into()));
    }
    let (pi, pi2) = (rec[0], rec[1]);
    let all: Vec<ResidueVector> = ResidueVector::enumerate(m, 2);
    let in_k = |b: &ResidueVector| pi.contains_in_kernel(b);
    let in_k2 = |b: &ResidueVector| pi2.contains_in_kernel(b);
    let mut spine: Vec<ResidueVector> = Vec::new();
    for b in all.iter().filter(|b| !b.is_zero() && in_k(b) && in_k2(b)) {
        let mut trial = spine.clone();
        trial.push(b.clone());
        if gf2_rank(&trial) == trial.len() {
            spine = trial;
        }
    }
    let y = all.iter().find(|b| in_k(b) && !in_k2(b)).expect("K != K'").clone();
    let y2 = all.iter().find(|b| in_k2(b) && !in_k(b)).expect("K != K'");
    let yy = y.add(y2);
    spine.push(y);
    spine.push(yy);
    GeneratingSubset::new(m, spine)
}

/// A walk on `Z` with `l`-periodic probabilities: `stay[i]` at vertex `i`,
/// `bond[i]` between `i` and `i + 1` (indices mod `l`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicLineWalk {
    pub stay: Vec<f64>,
    pub bond: Vec<f64>,
}

impl PeriodicLineWalk {
    /// Checks `p_i + q_i + q_{i-1} = 1` and nonnegativity.
    pub fn new(stay: Vec<f64>, bond: Vec<f64>) -> Result<Self> {
        let l = stay.len();
        if l == 0 || bond.len() != l {
            return Err(Error::DimensionMismatch { expected: l.max(1), found: bond.len() });
        }
        for i in 0..l {
            let row = stay[i] + bond[i] + bond[(i + l - 1) % l];
            if (row - 1.0).abs() > 1e-12 || stay[i] < 0.0 || bond[i] < 0.0 {
                return Err(Error::InvalidParams(format!("vertex {i} is not a probability row (sum {row})")));
            }
        }
        Ok(PeriodicLineWalk { stay, bond })
    }

    pub fn period(&self) -> usize {
        self.stay.len()
    }

    /// The same walk written with its smallest period.
    fn reduced(self) -> Self {
        let l = self.period();
        let same = |p: usize| (0..l).all(|i| self.stay[i] == self.stay[i % p] && self.bond[i] == self.bond[i % p]);
        match (1..l).find(|&p| l.is_multiple_of(p) && same(p)) {
            Some(p) => PeriodicLineWalk { stay: self.stay[..p].to_vec(), bond: self.bond[..p].to_vec() },
            None => self,
        }
    }
}

/// The first `2^D` vertices of the walk, with the bonds leaving each of
/// them to the right (the last one leads to vertex `2^D`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowWalk {
    pub depth: usize,
    pub stay: Vec<f64>,
    pub bond: Vec<f64>,
}

impl WindowWalk {
    fn free_matrix(&self) -> (Vec<f64>, &[f64]) {
        let n = self.stay.len();
        let off = &self.bond[..n - 1];
        let diag =
            (0..n).map(|i| 1.0 - if i > 0 { off[i - 1] } else { 0.0 } - if i + 1 < n { off[i] } else { 0.0 }).collect();
        (diag, off)
    }

    /// Tridiagonal truncation with the lost bonds folded into the diagonal,
    /// so every row still sums to one.
    pub fn free_eigenvalues(&self, tol: f64) -> Result<Vec<f64>> {
        let (diag, off) = self.free_matrix();
        tridiagonal_eigenvalues(&diag, off, tol)
    }

    /// The window closed into a ring by its last bond, with Bloch phase
    /// `+1` (`antiperiodic = false`) or `-1` on the closing bond. These are
    /// the band edges of the `2^D`-periodic walk repeating the window.
    pub fn periodic_eigenvalues(&self, antiperiodic: bool, tol: f64) -> Result<Vec<f64>> {
        let n = self.stay.len();
        let wrap = if antiperiodic { -self.bond[n - 1] } else { self.bond[n - 1] };
        ring_eigenvalues(&self.stay, &self.bond[..n - 1], wrap, tol)
    }
}

/// Either an exactly periodic walk or, when the recurrent `q_pi` differ, a
/// finite window of the aperiodic one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LineWalk {
    Periodic(PeriodicLineWalk),
    Window(WindowWalk),
}

/// Bond class of the odd vertex `v`: `v ≡ 2^{i+1} - 1 (mod 2^{i+2})`.
fn bond_class(v: usize) -> usize {
    v.trailing_ones() as usize - 1
}

/// The window of depth `D` of the walk induced by `T`.
pub fn window_walk(t: &GeneratingSubset, omega: &OmegaSequence, depth: usize) -> Result<WindowWalk> {
    require_binary(omega.degree())?;
    check_rank(t, omega)?;
    if depth == 0 || depth > MAX_WINDOW_DEPTH {
        return Err(Error::BudgetExceeded { what: "window depth", size: depth, limit: MAX_WINDOW_DEPTH });
    }
    let size = t.size() as f64;
    let qs: Vec<f64> = (0..depth).map(|i| t.q(omega.get(i)) as f64 / size).collect();
    let n = 1usize << depth;
    let bond: Vec<f64> = (0..n).map(|v| if v % 2 == 0 { 1.0 / size } else { qs[bond_class(v)] }).collect();
    // each vertex has one a-bond and one spine bond
    let stay = (0..n)
        .map(|v| {
            let odd = if v % 2 == 1 { v } else { v.wrapping_sub(1) };
            let q = if odd == usize::MAX { t.q(omega.get(depth - 1)) as f64 / size } else { qs[bond_class(odd)] };
            1.0 - 1.0 / size - q
        })
        .collect();
    Ok(WindowWalk { depth, stay, bond })
}

/// The walk induced by `T`: periodic when the recurrent `q_pi` agree, a
/// depth-`D` window otherwise.
pub fn line_walk(t: &GeneratingSubset, omega: &OmegaSequence, depth: usize) -> Result<LineWalk> {
    if classify_spectrum_type(t, omega)? == SpectrumType::Cantor {
        return Ok(LineWalk::Window(window_walk(t, omega, depth)?));
    }
    // bond classes >= the preperiod all carry the same q, so the pattern
    // repeats with period 2^{p+1}
    let p = omega.preperiod().len();
    let l = 1usize << (p + 1);
    let size = t.size() as f64;
    let q_tail = t.q(omega.get(p)) as f64 / size;
    let q_at = |v: usize| {
        let i = bond_class(v);
        if i < p {
            t.q(omega.get(i)) as f64 / size
        } else {
            q_tail
        }
    };
    let bond: Vec<f64> = (0..l).map(|v| if v % 2 == 0 { 1.0 / size } else { q_at(v) }).collect();
    let stay: Vec<f64> =
        (0..l).map(|v| 1.0 - 1.0 / size - q_at(if v % 2 == 1 { v } else { (v + l - 1) % l })).collect();
    Ok(LineWalk::Periodic(PeriodicLineWalk::new(stay, bond)?.reduced()))
}

/// Closed intervals, sorted and merged (up to [`BAND_MERGE_TOL`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BandStructure {
    pub intervals: Vec<(f64, f64)>,
}

impl BandStructure {
    pub fn from_intervals(mut raw: Vec<(f64, f64)>) -> Self {
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in raw {
            match intervals.last_mut() {
                Some(last) if lo <= last.1 + BAND_MERGE_TOL => last.1 = last.1.max(hi),
                _ => intervals.push((lo, hi)),
            }
        }
        BandStructure { intervals }
    }

    /// `-bands ∪ bands`.
    pub fn symmetrized(&self) -> Self {
        let mut raw = self.intervals.clone();
        raw.extend(self.intervals.iter().map(|&(lo, hi)| (-hi, -lo)));
        BandStructure::from_intervals(raw)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo <= x && x <= hi)
    }

    /// Open gaps between consecutive intervals.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.intervals.windows(2).map(|w| (w[0].1, w[1].0)).collect()
    }
}

/// Eigenvalues (ascending) of the Bloch matrix at quasimomentum `k`: the
/// period cell with the wrap bond carrying the phase `e^{ik}`.
pub fn bloch_eigenvalues(walk: &PeriodicLineWalk, k: f64) -> Result<Vec<f64>> {
    let l = walk.period();
    let (s, b) = (&walk.stay, &walk.bond);
    match l {
        1 => return Ok(vec![s[0] + 2.0 * b[0] * k.cos()]),
        2 => {
            let z2 = b[0] * b[0] + b[1] * b[1] + 2.0 * b[0] * b[1] * k.cos();
            let mid = 0.5 * (s[0] + s[1]);
            let r = (0.25 * (s[0] - s[1]).powi(2) + z2.max(0.0)).sqrt();
            return Ok(vec![mid - r, mid + r]);
        }
        _ => {}
    }
    let mut re = vec![0.0; l * l];
    let mut im = vec![0.0; l * l];
    for i in 0..l {
        re[i * l + i] += s[i];
        let j = (i + 1) % l;
        let (c, sn) = if j == 0 { (k.cos(), k.sin()) } else { (1.0, 0.0) };
        // H[i][j] = b e^{ik} on the wrap bond, H[j][i] its conjugate
        re[i * l + j] += b[i] * c;
        im[i * l + j] += b[i] * sn;
        re[j * l + i] += b[i] * c;
        im[j * l + i] -= b[i] * sn;
    }
    for i in 0..l {
        for j in 0..l {
            if (re[i * l + j] - re[j * l + i]).abs() > 1e-15 || (im[i * l + j] + im[j * l + i]).abs() > 1e-15 {
                return Err(Error::NonHermitian(k));
            }
        }
    }
    // H = R + iI acts on C^l like [[R, -I], [I, R]] on R^{2l}; each
    // eigenvalue appears twice
    let n = 2 * l;
    let emb = DenseSymmetricMatrix::from_fn(n, |p, q| {
        let (i, j) = (p % l, q % l);
        match (p < l, q < l) {
            (true, true) | (false, false) => re[i * l + j],
            (true, false) => -im[i * l + j],
            (false, true) => im[i * l + j],
        }
    })?;
    let ev = symmetric_eigenvalues(&emb, DEFAULT_TOL)?;
    Ok(ev.into_iter().step_by(2).collect())
}

/// Uniform grid of `samples` quasimomenta over `[-pi, pi]`.
fn k_grid(samples: usize) -> Vec<f64> {
    let samples = samples.max(2);
    (0..samples).map(|j| -PI + 2.0 * PI * j as f64 / (samples - 1) as f64).collect()
}

/// `(k, eigenvalues)` over the grid, for plotting dispersion curves.
pub fn dispersion(walk: &PeriodicLineWalk, samples: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    k_grid(samples).into_iter().map(|k| Ok((k, bloch_eigenvalues(walk, k)?))).collect()
}

pub fn dispersion_csv(rows: &[(f64, Vec<f64>)]) -> String {
    let l = rows.first().map_or(0, |r| r.1.len());
    let mut out = String::from("k");
    for j in 0..l {
        out.push_str(&format!(",x{j}"));
    }
    out.push('\n');
    for (k, xs) in rows {
        out.push_str(&format!("{k:.16e}"));
        for x in xs {
            out.push_str(&format!(",{x:.16e}"));
        }
        out.push('\n');
    }
    out
}

/// Band `j` is the range of the `j`-th Bloch eigenvalue over the grid and
/// the exact points `k = 0, pi`; the union is then merged.
pub fn bloch_bands(walk: &PeriodicLineWalk, samples: usize) -> Result<BandStructure> {
    let l = walk.period();
    let mut lo = vec![f64::INFINITY; l];
    let mut hi = vec![f64::NEG_INFINITY; l];
    let mut ks = k_grid(samples);
    ks.extend([0.0, PI]);
    for k in ks {
        for (j, x) in bloch_eigenvalues(walk, k)?.into_iter().enumerate() {
            lo[j] = lo[j].min(x);
            hi[j] = hi[j].max(x);
        }
    }
    if l <= 2 {
        // the extrema of these bands sit at cos k = ±1
        let (a, b) = (bloch_eigenvalues(walk, 0.0)?, bloch_eigenvalues(walk, PI)?);
        for j in 0..l {
            lo[j] = a[j].min(b[j]);
            hi[j] = a[j].max(b[j]);
        }
    }
    Ok(BandStructure::from_intervals(lo.into_iter().zip(hi).collect()))
}

/// Gaps seen in truncated spectra of an aperiodic walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapWitness {
    pub depths: Vec<usize>,
    /// For each depth, the gaps wider than the margin free of spectrum in
    /// both the free window and the periodic approximant.
    pub gaps: Vec<Vec<(f64, f64)>>,
    /// Gaps wider than the margin present at every depth.
    pub persistent: Vec<(f64, f64)>,
}

impl GapWitness {
    pub fn counts(&self) -> Vec<usize> {
        self.gaps.iter().map(Vec::len).collect()
    }
}

/// For each cell `[x_j, x_{j+1}]` of `grid`, whether it is free of spectrum
/// in both variants of the depth-`D` window.
///
/// Free window: no eigenvalue in the cell. Periodic approximant: the band
/// containing `x` has exactly one of its two edges (the periodic and the
/// antiperiodic eigenvalue) below `x`, so `x` lies in a gap iff both counts
/// agree; a cell is free if they agree and do not change across it.
fn free_cells(w: &WindowWalk, grid: &[f64]) -> Vec<bool> {
    let n = w.stay.len();
    let (diag, off) = w.free_matrix();
    let wrap = w.bond[n - 1];
    let counts: Vec<(usize, usize, usize)> = grid
        .iter()
        .map(|&x| {
            (
                tridiagonal_count_below(&diag, off, x),
                ring_count_below(&w.stay, off, wrap, x),
                ring_count_below(&w.stay, off, -wrap, x),
            )
        })
        .collect();
    counts.windows(2).map(|c| c[0] == c[1] && c[0].1 == c[0].2).collect()
}

/// Maximal runs of free cells wider than `margin`, not touching the ends.
fn runs(grid: &[f64], free: &[bool], margin: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut j = 0;
    while j < free.len() {
        if !free[j] {
            j += 1;
            continue;
        }
        let start = j;
        while j < free.len() && free[j] {
            j += 1;
        }
        if start > 0 && j < free.len() && grid[j] - grid[start] > margin {
            out.push((grid[start], grid[j]));
        }
    }
    out
}

/// Numerical evidence for gaps: counts of eigenvalues of the free window and
/// of the periodic approximant on a grid of step `GAP_MARGIN / 4` over
/// `[-1, 1]`. Reported gap ends are accurate to one grid step. Not a proof
/// of Cantor structure.
pub fn cantor_gap_witness(t: &GeneratingSubset, omega: &OmegaSequence, depths: &[usize]) -> Result<GapWitness> {
    let step = GAP_MARGIN / 4.0;
    let cells = (2.0 / step).round() as usize + 2;
    let grid: Vec<f64> = (0..=cells).map(|j| -1.0 - step + j as f64 * step).collect();
    let mut everywhere = vec![true; cells];
    let mut gaps = Vec::with_capacity(depths.len());
    for &depth in depths {
        if depth < 2 {
            return Err(Error::InvalidParams("gap witness needs depth >= 2".into()));
        }
        let free = free_cells(&window_walk(t, omega, depth)?, &grid);
        gaps.push(runs(&grid, &free, GAP_MARGIN));
        everywhere.iter_mut().zip(&free).for_each(|(a, &b)| *a &= b);
    }
    Ok(GapWitness { depths: depths.to_vec(), gaps, persistent: runs(&grid, &everywhere, GAP_MARGIN) })
}

/// `q` table keyed by the coefficient string, for reports.
pub fn q_table(t: &GeneratingSubset, omega: &OmegaSequence) -> Result<BTreeMap<String, usize>> {
    Ok(q_numbers(t, omega)?.into_iter().map(|(pi, q)| (pi.to_string(), q)).collect())
}
