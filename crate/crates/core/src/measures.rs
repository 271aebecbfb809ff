//! Density of states and Kesten spectral measures.
//!
//! For `d = 2` both measures are absolutely continuous with inverse square
//! root singularities at the four band edges; for `d >= 3` the density of
//! states is a countable sum of atoms.

use serde::{Deserialize, Serialize};

use crate::algebra::SpinalParams;
use crate::closed_form::{binary_intervals, preimage_tree, psi_preimages};
use crate::error::{Error, Result};
use crate::graph::BoundaryBall;

/// Deepest tree level whose atoms are materialized (`2^{n+1}` atoms per level).
pub const MAX_ATOM_DEPTH: usize = 20;

/// Default absolute tolerance for adaptive quadrature.
pub const QUAD_TOL: f64 = 1e-10;

/// The two explicit densities of the binary case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "m")]
pub enum Density {
    /// Density of states `g`.
    #[serde(rename = "g")]
    Dos(usize),
    /// Kesten measure of `1^N`, density `h`.
    #[serde(rename = "h")]
    Spine(usize),
}

impl Density {
    pub fn m(self) -> usize {
        match self {
            Density::Dos(m) | Density::Spine(m) => m,
        }
    }

    /// The roots of `x(1-x)(2^m x + 2)(2^m x + 2 - 2^m)`, ascending; the
    /// support is `[r0, r1] ∪ [r2, r3]`.
    pub fn roots(self) -> [f64; 4] {
        let w = 1.0 / 2f64.powi(self.m() as i32 - 1);
        [-w, 0.0, 1.0 - w, 1.0]
    }

    pub fn support(self) -> [(f64, f64); 2] {
        binary_intervals(self.m())
    }

    fn numerator(self, x: f64) -> f64 {
        let p = 2f64.powi(self.m() as i32);
        match self {
            Density::Dos(_) => (p / 2.0 - 1.0 - p * x).abs(),
            Density::Spine(_) => (x * (p * x + 2.0)).abs(),
        }
    }

    /// `density(x) * sqrt|x - r_j|`, bounded near `r_j`.
    fn regular_part(self, x: f64, j: usize) -> f64 {
        let r = self.roots();
        let p = 2f64.powi(self.m() as i32);
        let rest: f64 = (0..4).filter(|&i| i != j).map(|i| (x - r[i]).abs()).product();
        self.numerator(x) / (std::f64::consts::PI * p * rest.sqrt())
    }

    /// Pointwise value; [`Error::OutOfSupport`] unless `x` lies strictly
    /// inside one of the two intervals.
    pub fn eval(self, x: f64) -> Result<f64> {
        let inside = self.support().iter().any(|&(a, b)| a < x && x < b);
        if !inside {
            return Err(Error::OutOfSupport(x));
        }
        let j = self.nearest_root(x);
        Ok(self.regular_part(x, j) / (x - self.roots()[j]).abs().sqrt())
    }

    fn nearest_root(self, x: f64) -> usize {
        let r = self.roots();
        (0..4).min_by(|&a, &b| (x - r[a]).abs().total_cmp(&(x - r[b]).abs())).expect("four roots")
    }

    /// `∫_{r_j}^{r_j + s t} phi(x) density(x) dx` with `x = r_j + s u^2`,
    /// `s = ±1`, `t >= 0`.
    fn edge_integral(self, j: usize, s: f64, t: f64, phi: &dyn Fn(f64) -> f64) -> f64 {
        let r = self.roots()[j];
        let integrand = |u: f64| {
            let x = r + s * u * u;
            2.0 * phi(x) * self.regular_part(x, j)
        };
        integrate(&integrand, 0.0, t.sqrt(), QUAD_TOL)
    }

    /// `∫ phi(x) density(x) dx` over `(-inf, x]`.
    pub fn integrate_below(self, x: f64, phi: &dyn Fn(f64) -> f64) -> f64 {
        let r = self.roots();
        let mut total = 0.0;
        for (a, b) in [(0usize, 1usize), (2, 3)] {
            if x <= r[a] {
                break;
            }
            let mid = 0.5 * (r[a] + r[b]);
            let left_half = self.edge_integral(a, 1.0, mid - r[a], phi);
            if x >= r[b] {
                total += left_half + self.edge_integral(b, -1.0, r[b] - mid, phi);
            } else if x <= mid {
                total += self.edge_integral(a, 1.0, x - r[a], phi);
            } else {
                total += left_half + self.edge_integral(b, -1.0, r[b] - mid, phi)
                    - self.edge_integral(b, -1.0, r[b] - x, phi);
            }
        }
        total
    }

    /// `∫ phi(x) density(x) dx` over the whole support.
    pub fn integrate_all(self, phi: &dyn Fn(f64) -> f64) -> f64 {
        self.integrate_below(f64::INFINITY, phi)
    }

    pub fn cdf(self, x: f64) -> f64 {
        self.integrate_below(x, &|_| 1.0)
    }
}

/// `g(x)`, the density of states for `d = 2`.
pub fn dos_density_g(x: f64, m: usize) -> Result<f64> {
    Density::Dos(m).eval(x)
}

/// `h(x)`, the Kesten density at `1^N` for `d = 2`.
pub fn kesten_density_h(x: f64, m: usize) -> Result<f64> {
    Density::Spine(m).eval(x)
}

/// `chi(theta, eps) = 1/2 - 1/2^m + (-1)^eps 2^{-m} sqrt(4^{m-1} + 1 + 2^m cos theta)`;
/// pushes the uniform measure on `[0, pi] × {0, 1}` forward to `g`.
pub fn chi(theta: f64, eps: bool, m: usize) -> f64 {
    let p = 2f64.powi(m as i32);
    let r = (p * p / 4.0 + 1.0 + p * theta.cos()).max(0.0).sqrt();
    0.5 - 1.0 / p + if eps { -r } else { r } / p
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const G7_WEIGHTS: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_64, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WEIGHTS[7] * fc;
    let mut g = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let fx = f(c - h * GK_NODES[i]) + f(c + h * GK_NODES[i]);
        k += GK_WEIGHTS[i] * fx;
        if i % 2 == 1 {
            g += G7_WEIGHTS[i / 2] * fx;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        let (v, err) = gauss_kronrod(f, a, b);
        if err <= tol || depth == 0 || (b - a).abs() < 1e-15 {
            return v;
        }
        let c = 0.5 * (a + b);
        rec(f, a, c, 0.5 * tol, depth - 1) + rec(f, c, b, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    rec(f, a, b, tol, 40)
}

/// A probability measure: atoms plus an optional explicit density, with the
/// mass of atoms beyond the truncation depth reported separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    /// `(location, weight)`.
    pub atoms: Vec<(f64, f64)>,
    pub density: Option<Density>,
    /// Mass not represented by `atoms` or `density`.
    pub tail_mass: f64,
}

impl SpectralMeasure {
    pub fn represented_mass(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.1).sum();
        atoms + self.density.map_or(0.0, |g| g.integrate_all(&|_| 1.0))
    }
}

/// Atom weights of the `d >= 3` density of states, level by level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomMassProfile {
    /// Weight `(d-2)/d` of the atom at `(|S|-d)/|S|`.
    pub beta_weight: f64,
    /// `(n, number of atoms, weight of each)` for `n = 0..=depth`.
    pub levels: Vec<(usize, f64, f64)>,
    /// Sum of all atom weights up to `depth`.
    pub atom_mass: f64,
    /// `(2/d)^{depth+2}`, the mass of the atoms beyond `depth`.
    pub tail_mass: f64,
}

/// Weights of the atoms of the density of states up to `depth`, without
/// locating them; valid for any depth.
pub fn dos_mass_profile(d: usize, depth: usize) -> Result<AtomMassProfile> {
    if d < 3 {
        return Err(Error::InvalidParams(format!("the density of states has atoms only for d >= 3, got d = {d}")));
    }
    let df = d as f64;
    let beta_weight = (df - 2.0) / df;
    let levels: Vec<(usize, f64, f64)> =
        (0..=depth).map(|n| (n, 2f64.powi(n as i32 + 1), (df - 2.0) / df.powi(n as i32 + 2))).collect();
    let atom_mass = beta_weight + levels.iter().map(|(_, c, w)| c * w).sum::<f64>();
    Ok(AtomMassProfile { beta_weight, levels, atom_mass, tail_mass: (2.0 / df).powi(depth as i32 + 2) })
}

/// The density of states: the density `g` for `d = 2`; for `d >= 3` the
/// atoms at `(|S|-d)/|S|` and at `psi^{-1}(F^{-n}(0))` for `n <= depth`.
pub fn density_of_states(params: &SpinalParams, depth: usize) -> Result<SpectralMeasure> {
    let (d, m) = (params.d(), params.m());
    if d == 2 {
        return Ok(SpectralMeasure { atoms: Vec::new(), density: Some(Density::Dos(m)), tail_mass: 0.0 });
    }
    if depth > MAX_ATOM_DEPTH {
        return Err(Error::BudgetExceeded { what: "atom depth", size: depth, limit: MAX_ATOM_DEPTH });
    }
    let profile = dos_mass_profile(d, depth)?;
    let s = params.generator_count() as f64;
    let mut atoms = vec![((s - d as f64) / s, profile.beta_weight)];
    for (level, &(_, _, w)) in preimage_tree(d, depth)?.iter().zip(&profile.levels) {
        for node in level {
            let (a, b) = psi_preimages(node.value, d, m)?;
            atoms.push((a, w));
            atoms.push((b, w));
        }
    }
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(SpectralMeasure { atoms, density: None, tail_mass: profile.tail_mass })
}

/// Kesten measure of the spine point `1^N` for `d = 2`.
pub fn spine_kesten_measure(m: usize) -> SpectralMeasure {
    SpectralMeasure { atoms: Vec::new(), density: Some(Density::Spine(m)), tail_mass: 0.0 }
}

/// `∫ x^k dmeas` (ignoring the unrepresented tail).
pub fn measure_moment(meas: &SpectralMeasure, k: u32) -> f64 {
    let atoms: f64 = meas.atoms.iter().map(|(x, w)| w * x.powi(k as i32)).sum();
    atoms + meas.density.map_or(0.0, |g| g.integrate_all(&|x| x.powi(k as i32)))
}

/// `<M^k delta_c, delta_c>` for the ball center `c`: the probability of
/// returning in `k` steps. Exact as long as the walk cannot leave the ball
/// and come back, i.e. `k <= 2 R`.
pub fn kesten_moment_exact(ball: &BoundaryBall, k: usize) -> Result<f64> {
    Ok(kesten_moments(ball, k)?[k])
}

/// Return probabilities for `0..=kmax` steps.
pub fn kesten_moments(ball: &BoundaryBall, kmax: usize) -> Result<Vec<f64>> {
    if kmax > 2 * ball.radius() {
        return Err(Error::BallTooSmall {
            radius: ball.radius(),
            reason: format!("{kmax}-step return probabilities need radius >= {}", kmax.div_ceil(2)),
        });
    }
    let mut f = vec![0.0; ball.vertex_count()];
    f[0] = 1.0;
    let mut powers = vec![f];
    for _ in 0..kmax.div_ceil(2) {
        let next = ball.markov_matvec(powers.last().expect("nonempty"))?;
        powers.push(next);
    }
    // <M^k d, d> = <M^a d, M^b d> with a + b = k
    Ok((0..=kmax)
        .map(|k| {
            let (a, b) = (k.div_ceil(2), k / 2);
            powers[a].iter().zip(&powers[b]).map(|(x, y)| x * y).sum()
        })
        .collect())
}

/// `sup_x |F_emp(x) - F(x)|` for sorted samples.
pub fn kolmogorov_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let fx = cdf(x);
        worst = worst.max((fx - i as f64 / n).abs()).max((fx - j as f64 / n).abs());
        i = j;
    }
    worst
}
