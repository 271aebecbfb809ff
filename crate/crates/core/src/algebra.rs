//! Arithmetic in `A = Z/dZ` and `B = (Z/dZ)^m`, epimorphisms `B -> A`, and
//! eventually periodic sequences of epimorphisms.
//!
//! An epimorphism is stored as its coefficient vector `(c_1, ..., c_m)`, so
//! `pi(b) = sum c_i b_i mod d`. Two epimorphisms are equal iff their
//! coefficient vectors are equal.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest tree degree supported; letters are printed as single base-36 digits.
pub const MAX_DEGREE: usize = 36;

/// Largest `d^m` for which `B` is enumerated exhaustively.
pub const MAX_GROUP_ORDER: usize = 1 << 20;

pub(crate) fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Checked `base^exp`.
pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// An element of `(Z/dZ)^m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResidueVector {
    entries: Vec<usize>,
    modulus: usize,
}

impl ResidueVector {
    /// Builds a vector, reducing every entry mod `modulus`.
    pub fn new(entries: Vec<usize>, modulus: usize) -> Self {
        assert!(modulus >= 2, "modulus must be at least 2");
        let entries = entries.into_iter().map(|e| e % modulus).collect();
        ResidueVector { entries, modulus }
    }

    pub fn zero(m: usize, modulus: usize) -> Self {
        ResidueVector::new(vec![0; m], modulus)
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &ResidueVector) -> ResidueVector {
        debug_assert_eq!(self.modulus, other.modulus);
        debug_assert_eq!(self.dim(), other.dim());
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| (a + b) % self.modulus).collect();
        ResidueVector { entries, modulus: self.modulus }
    }

    pub fn neg(&self) -> ResidueVector {
        let d = self.modulus;
        let entries = self.entries.iter().map(|&e| (d - e) % d).collect();
        ResidueVector { entries, modulus: d }
    }

    pub fn scaled(&self, k: usize) -> ResidueVector {
        let d = self.modulus;
        let entries = self.entries.iter().map(|&e| (e * (k % d)) % d).collect();
        ResidueVector { entries, modulus: d }
    }

    /// Additive order of the element.
    pub fn order(&self) -> usize {
        let d = self.modulus;
        self.entries.iter().map(|&e| if e == 0 { 1 } else { d / gcd(e, d) }).fold(1, |acc, o| acc / gcd(acc, o) * o)
    }

    /// Every element of `(Z/dZ)^m`, lexicographic with the first entry most significant.
    pub fn enumerate(m: usize, modulus: usize) -> Vec<ResidueVector> {
        let total = checked_pow(modulus, m).expect("group order overflows usize");
        (0..total)
            .map(|mut idx| {
                let mut entries = vec![0; m];
                for slot in entries.iter_mut().rev() {
                    *slot = idx % modulus;
                    idx /= modulus;
                }
                ResidueVector { entries, modulus }
            })
            .collect()
    }

    /// Comma-separated decimal entries, e.g. `1,0`.
    pub fn to_comma_string(&self) -> String {
        self.entries.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
    }

    /// Compact base-`d` digit string, e.g. `10`.
    pub fn to_digit_string(&self) -> String {
        self.entries.iter().map(|&e| digit_char(e)).collect()
    }

    /// Parses comma-separated entries (`1,0`); entries must already lie in `0..d`.
    pub fn parse_comma(s: &str, modulus: usize) -> Result<Self> {
        let entries = s
            .split(',')
            .map(|t| {
                let v: usize =
                    t.trim().parse().map_err(|_| Error::Parse(format!("bad residue entry {t:?} in {s:?}")))?;
                if v >= modulus {
                    return Err(Error::Parse(format!("entry {v} not reduced mod {modulus}")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ResidueVector { entries, modulus })
    }

    /// Parses a compact digit string (`10`).
    pub fn parse_digits(s: &str, modulus: usize) -> Result<Self> {
        let entries = parse_digit_string(s, modulus)?.into_iter().map(usize::from).collect();
        Ok(ResidueVector { entries, modulus })
    }
}

impl fmt::Display for ResidueVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_comma_string())
    }
}

pub(crate) fn digit_char(v: usize) -> char {
    std::char::from_digit(v as u32, 36).expect("digit out of range")
}

pub(crate) fn parse_digit_string(s: &str, modulus: usize) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| {
            let v = c.to_digit(36).ok_or_else(|| Error::Parse(format!("bad digit {c:?} in {s:?}")))? as usize;
            if v >= modulus {
                return Err(Error::Parse(format!("digit {c} not below {modulus}")));
            }
            Ok(v as u8)
        })
        .collect()
}

/// A homomorphism `B -> A` given by coefficients; surjective iff
/// `gcd(c_1, ..., c_m, d) = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Epimorphism {
    coeffs: ResidueVector,
}

impl Epimorphism {
    pub fn new(coeffs: ResidueVector) -> Self {
        Epimorphism { coeffs }
    }

    pub fn from_entries(entries: Vec<usize>, modulus: usize) -> Self {
        Epimorphism::new(ResidueVector::new(entries, modulus))
    }

    pub fn coeffs(&self) -> &ResidueVector {
        &self.coeffs
    }

    pub fn modulus(&self) -> usize {
        self.coeffs.modulus
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    pub fn apply(&self, b: &ResidueVector) -> Result<usize> {
        if b.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: b.dim() });
        }
        if b.modulus != self.modulus() {
            return Err(Error::InvalidParams(format!(
                "modulus {} does not match epimorphism modulus {}",
                b.modulus,
                self.modulus()
            )));
        }
        Ok(self.apply_unchecked(b))
    }

    pub(crate) fn apply_unchecked(&self, b: &ResidueVector) -> usize {
        let d = self.modulus();
        self.coeffs.entries.iter().zip(&b.entries).fold(0, |acc, (c, x)| (acc + c * x) % d)
    }

    pub fn is_surjective(&self) -> bool {
        self.coeffs.entries.iter().fold(self.modulus(), |g, &c| gcd(g, c)) == 1
    }

    pub fn contains_in_kernel(&self, b: &ResidueVector) -> bool {
        self.apply_unchecked(b) == 0
    }

    /// All elements of `Ker(pi)`.
    pub fn kernel(&self) -> Vec<ResidueVector> {
        ResidueVector::enumerate(self.dim(), self.modulus())
            .into_iter()
            .filter(|b| self.contains_in_kernel(b))
            .collect()
    }
}

impl fmt::Display for Epimorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.coeffs.to_comma_string())
    }
}

/// An eventually periodic sequence `omega_0 omega_1 ...` of epimorphisms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OmegaSequence {
    preperiod: Vec<Epimorphism>,
    period: Vec<Epimorphism>,
}

impl OmegaSequence {
    /// Checks only the shape: nonempty period and a common `(d, m)`.
    pub fn new(preperiod: Vec<Epimorphism>, period: Vec<Epimorphism>) -> Result<Self> {
        let first = period.first().ok_or_else(|| Error::InvalidParams("omega period must be nonempty".into()))?;
        let (d, m) = (first.modulus(), first.dim());
        if m == 0 {
            return Err(Error::InvalidParams("epimorphisms need m >= 1 coefficients".into()));
        }
        for ep in preperiod.iter().chain(&period) {
            if ep.modulus() != d || ep.dim() != m {
                return Err(Error::InvalidParams(format!("epimorphism {ep} does not live on (Z/{d}Z)^{m}")));
            }
        }
        Ok(OmegaSequence { preperiod, period })
    }

    pub fn periodic(period: Vec<Epimorphism>) -> Result<Self> {
        OmegaSequence::new(Vec::new(), period)
    }

    pub fn preperiod(&self) -> &[Epimorphism] {
        &self.preperiod
    }

    pub fn period(&self) -> &[Epimorphism] {
        &self.period
    }

    pub fn degree(&self) -> usize {
        self.period[0].modulus()
    }

    pub fn rank(&self) -> usize {
        self.period[0].dim()
    }

    /// `omega_n`.
    pub fn get(&self, n: usize) -> &Epimorphism {
        if n < self.preperiod.len() {
            &self.preperiod[n]
        } else {
            &self.period[(n - self.preperiod.len()) % self.period.len()]
        }
    }

    /// Epimorphisms occurring infinitely often (the period), deduplicated.
    pub fn recurrent(&self) -> Vec<&Epimorphism> {
        let mut out: Vec<&Epimorphism> = Vec::new();
        for ep in &self.period {
            if !out.contains(&ep) {
                out.push(ep);
            }
        }
        out
    }

    /// Every epimorphism occurring anywhere in the sequence, deduplicated.
    pub fn distinct(&self) -> Vec<&Epimorphism> {
        let mut out: Vec<&Epimorphism> = Vec::new();
        for ep in self.preperiod.iter().chain(&self.period) {
            if !out.contains(&ep) {
                out.push(ep);
            }
        }
        out
    }

    /// Whether `⋂_{j >= i} Ker(omega_j)` is trivial for every `i`.
    ///
    /// For each start `i <= len(preperiod)` the window `i .. i + pre + per`
    /// covers every epimorphism occurring from `i` on.
    pub fn kernel_condition(&self) -> Result<bool> {
        Ok(self.kernel_violation()?.is_none())
    }

    /// First start index with a nontrivial joint kernel and a witness element.
    pub fn kernel_violation(&self) -> Result<Option<(usize, ResidueVector)>> {
        for ep in self.preperiod.iter().chain(&self.period) {
            if !ep.is_surjective() {
                return Err(Error::NotSurjective(ep.to_string()));
            }
        }
        let (d, m) = (self.degree(), self.rank());
        match checked_pow(d, m) {
            Some(order) if order <= MAX_GROUP_ORDER => {}
            _ => {
                return Err(Error::BudgetExceeded {
                    what: "group B",
                    size: checked_pow(d, m).unwrap_or(usize::MAX),
                    limit: MAX_GROUP_ORDER,
                })
            }
        }
        let window = self.preperiod.len() + self.period.len();
        let elements = ResidueVector::enumerate(m, d);
        for start in 0..=self.preperiod.len() {
            let witness = elements
                .iter()
                .find(|b| !b.is_zero() && (start..start + window).all(|j| self.get(j).contains_in_kernel(b)));
            if let Some(w) = witness {
                return Ok(Some((start, w.clone())));
            }
        }
        Ok(None)
    }

    /// Parses `pre:<v;v;...>|per:<v;v;...>` (the `pre:` part is optional);
    /// each `v` is `m` comma-separated entries in `0..d`.
    pub fn parse(s: &str, d: usize) -> Result<Self> {
        let mut preperiod = Vec::new();
        let mut period = None;
        for part in s.trim().split('|') {
            let part = part.trim();
            if let Some(body) = part.strip_prefix("pre:") {
                preperiod = parse_epi_list(body, d)?;
            } else if let Some(body) = part.strip_prefix("per:") {
                period = Some(parse_epi_list(body, d)?);
            } else {
                return Err(Error::Parse(format!("unexpected omega component {part:?}")));
            }
        }
        let period = period.ok_or_else(|| Error::Parse(format!("omega {s:?} has no per: part")))?;
        OmegaSequence::new(preperiod, period)
    }
}

fn parse_epi_list(body: &str, d: usize) -> Result<Vec<Epimorphism>> {
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(';').map(|v| ResidueVector::parse_comma(v, d).map(Epimorphism::new)).collect()
}

impl fmt::Display for OmegaSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |eps: &[Epimorphism]| eps.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(";");
        if !self.preperiod.is_empty() {
            write!(f, "pre:{}|", join(&self.preperiod))?;
        }
        write!(f, "per:{}", join(&self.period))
    }
}

/// A spinal generator: `a^k` with `1 <= k < d`, or a nonzero `b in B`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Generator {
    Rotor(usize),
    Spine(ResidueVector),
}

impl Generator {
    pub fn inverse(&self, d: usize) -> Generator {
        match self {
            Generator::Rotor(k) => Generator::Rotor(d - k),
            Generator::Spine(b) => Generator::Spine(b.neg()),
        }
    }

    pub fn is_rotor(&self) -> bool {
        matches!(self, Generator::Rotor(_))
    }

    /// `a^k` or `b:<digits>`.
    pub fn label(&self) -> String {
        match self {
            Generator::Rotor(k) => format!("a^{k}"),
            Generator::Spine(b) => format!("b:{}", b.to_digit_string()),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// The spinal generating set `S = (A ∪ B) \ {1}`: rotors first, then the
/// nonzero elements of `B` in lexicographic order.
pub fn spinal_generators(d: usize, m: usize) -> Vec<Generator> {
    (1..d)
        .map(Generator::Rotor)
        .chain(ResidueVector::enumerate(m, d).into_iter().filter(|b| !b.is_zero()).map(Generator::Spine))
        .collect()
}

/// `|S| = d^m + d - 2`.
pub fn spinal_set_size(d: usize, m: usize) -> usize {
    checked_pow(d, m).expect("d^m overflows") + d - 2
}

/// A validated spinal group `(d, m, omega)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinalParams {
    d: usize,
    m: usize,
    omega: OmegaSequence,
}

impl SpinalParams {
    /// Validates degree bounds, surjectivity, and the kernel condition.
    pub fn new(d: usize, m: usize, omega: OmegaSequence) -> Result<Self> {
        if !(2..=MAX_DEGREE).contains(&d) {
            return Err(Error::InvalidParams(format!("degree d = {d} outside 2..={MAX_DEGREE}")));
        }
        if m == 0 {
            return Err(Error::InvalidParams("m must be at least 1".into()));
        }
        if omega.degree() != d || omega.rank() != m {
            return Err(Error::InvalidParams(format!(
                "omega lives on (Z/{}Z)^{} but parameters say d = {d}, m = {m}",
                omega.degree(),
                omega.rank()
            )));
        }
        if let Some((start, witness)) = omega.kernel_violation()? {
            return Err(Error::KernelCondition { start, witness: witness.to_string() });
        }
        Ok(SpinalParams { d, m, omega })
    }

    /// Parses the textual omega encoding and validates.
    pub fn parse(d: usize, m: usize, omega: &str) -> Result<Self> {
        let omega = OmegaSequence::parse(omega, d)?;
        SpinalParams::new(d, m, omega)
    }

    /// First Grigorchuk group: `d = 2, m = 2`, `omega = (pi_d pi_c pi_b)^N`.
    pub fn grigorchuk() -> Self {
        SpinalParams::parse(2, 2, "per:0,1;1,1;1,0").expect("valid preset")
    }

    /// Fabrykowski–Gupta group: `d = 3, m = 1`, constant `omega`.
    pub fn fabrykowski_gupta() -> Self {
        SpinalParams::parse(3, 1, "per:1").expect("valid preset")
    }

    /// The Šunić group `G_m` on the binary tree: `omega_n = alpha rho^n` with
    /// `alpha = e_m^*` and `rho` the cyclic shift `b_i -> b_{i+1}`, `b_m -> b_1`.
    pub fn sunic_gm(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParams(format!("G_m needs m >= 2, got {m}")));
        }
        let period = (0..m)
            .map(|n| {
                // omega_n(b_i) = 1 iff i + n ≡ m (mod m), i in 1..=m
                let target = (m - n % m) % m; // 0 stands for index m
                let pos = if target == 0 { m - 1 } else { target - 1 };
                let mut c = vec![0; m];
                c[pos] = 1;
                Epimorphism::from_entries(c, 2)
            })
            .collect();
        SpinalParams::new(2, m, OmegaSequence::periodic(period)?)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn omega(&self) -> &OmegaSequence {
        &self.omega
    }

    /// `|S|`.
    pub fn generator_count(&self) -> usize {
        spinal_set_size(self.d, self.m)
    }

    pub fn generators(&self) -> Vec<Generator> {
        spinal_generators(self.d, self.m)
    }

    /// `d^m`.
    pub fn group_b_order(&self) -> usize {
        checked_pow(self.d, self.m).expect("d^m overflows")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rv(e: &[usize], d: usize) -> ResidueVector {
        ResidueVector::new(e.to_vec(), d)
    }

    #[test]
    fn epi_apply_examples() {
        let ep = Epimorphism::new(rv(&[0, 1], 2));
        assert_eq!(ep.apply(&rv(&[1, 0], 2)).unwrap(), 0);
        let ep = Epimorphism::new(rv(&[1, 1], 2));
        assert_eq!(ep.apply(&rv(&[1, 1], 2)).unwrap(), 0);
        let ep = Epimorphism::new(rv(&[1], 3));
        assert_eq!(ep.apply(&rv(&[2], 3)).unwrap(), 2);
    }

    #[test]
    fn epi_apply_dimension_mismatch() {
        let ep = Epimorphism::new(rv(&[1, 1], 2));
        assert!(matches!(ep.apply(&rv(&[1], 2)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn surjectivity() {
        assert!(!Epimorphism::new(rv(&[2], 4)).is_surjective());
        assert!(Epimorphism::new(rv(&[2, 3], 4)).is_surjective());
        assert!(!Epimorphism::new(rv(&[0, 0], 2)).is_surjective());
        assert!(!Epimorphism::new(rv(&[3], 6)).is_surjective());
        assert!(Epimorphism::new(rv(&[5], 6)).is_surjective());
    }

    #[test]
    fn kernel_condition_examples() {
        let grig = OmegaSequence::parse("per:0,1;1,1;1,0", 2).unwrap();
        assert!(grig.kernel_condition().unwrap());
        let constant = OmegaSequence::parse("per:0,1", 2).unwrap();
        assert!(!constant.kernel_condition().unwrap());
        assert_eq!(constant.kernel_violation().unwrap(), Some((0, rv(&[1, 0], 2))));
        let fg = OmegaSequence::parse("per:1", 3).unwrap();
        assert!(fg.kernel_condition().unwrap());
    }

    #[test]
    fn kernel_condition_rejects_non_surjective() {
        let bad = OmegaSequence::parse("per:2", 4).unwrap();
        assert!(matches!(bad.kernel_condition(), Err(Error::NotSurjective(_))));
    }

    #[test]
    fn preperiod_does_not_rescue_a_degenerate_period() {
        // from index 1 on only the period remains
        let om = OmegaSequence::parse("pre:1,0|per:0,1", 2).unwrap();
        assert_eq!(om.kernel_violation().unwrap(), Some((1, rv(&[1, 0], 2))));
        let ok = OmegaSequence::parse("pre:0,1;0,1|per:1,0;0,1", 2).unwrap();
        assert!(ok.kernel_condition().unwrap());
    }

    #[test]
    fn omega_indexing_is_eventually_periodic() {
        let om = OmegaSequence::parse("pre:1,1|per:0,1;1,0", 2).unwrap();
        assert_eq!(om.get(0).coeffs().entries(), &[1, 1]);
        assert_eq!(om.get(1).coeffs().entries(), &[0, 1]);
        assert_eq!(om.get(2).coeffs().entries(), &[1, 0]);
        assert_eq!(om.get(4).coeffs().entries(), &[1, 0]);
        assert_eq!(om.get(5).coeffs().entries(), &[0, 1]);
        assert_eq!(om.to_string(), "pre:1,1|per:0,1;1,0");
        assert_eq!(OmegaSequence::parse(&om.to_string(), 2).unwrap(), om);
    }

    #[test]
    fn omega_parse_errors() {
        assert!(OmegaSequence::parse("per:", 2).is_err());
        assert!(OmegaSequence::parse("per:0,2", 2).is_err());
        assert!(OmegaSequence::parse("pre:1,0", 2).is_err());
        assert!(OmegaSequence::parse("per:1,0;1", 2).is_err());
        assert!(OmegaSequence::parse("foo:1", 2).is_err());
    }

    #[test]
    fn generator_set_size_and_inverses() {
        for d in 2..=5 {
            for m in 1..=3 {
                let s = spinal_generators(d, m);
                assert_eq!(s.len(), spinal_set_size(d, m));
                for g in &s {
                    assert!(s.contains(&g.inverse(d)), "{g} has no inverse in S");
                }
            }
        }
    }

    #[test]
    fn kernel_sizes() {
        for d in 2..=6 {
            for m in 1..=3 {
                for c in ResidueVector::enumerate(m, d) {
                    let ep = Epimorphism::new(c);
                    if ep.is_surjective() {
                        assert_eq!(ep.kernel().len(), checked_pow(d, m - 1).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn element_orders_divide_d() {
        for d in 2..=6 {
            for b in ResidueVector::enumerate(2, d) {
                let o = b.order();
                assert_eq!(d % o, 0);
                assert!(b.scaled(o).is_zero());
            }
        }
    }

    #[test]
    fn presets_validate() {
        let g = SpinalParams::grigorchuk();
        assert_eq!(g.generator_count(), 4);
        let fg = SpinalParams::fabrykowski_gupta();
        assert_eq!(fg.generator_count(), 4);
        for m in 2..=6 {
            let p = SpinalParams::sunic_gm(m).unwrap();
            assert_eq!(p.omega().period().len(), m);
        }
        assert!(SpinalParams::sunic_gm(1).is_err());
    }

    #[test]
    fn params_reject_kernel_violation() {
        let err = SpinalParams::parse(2, 2, "per:0,1").unwrap_err();
        assert!(matches!(err, Error::KernelCondition { .. }));
        assert!(SpinalParams::parse(2, 3, "per:0,1").is_err());
        assert!(SpinalParams::parse(1, 1, "per:1").is_err());
    }
}
