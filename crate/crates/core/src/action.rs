//! The spinal action on finite words and on eventually periodic boundary
//! points, plus the index set `I_xi` and witnesses for membership in `W`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{digit_char, parse_digit_string, Generator, OmegaSequence, MAX_DEGREE};
use crate::error::{Error, Result};

/// A vertex `v_0 v_1 ... v_{n-1}` of the tree, `v_0` next to the root.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreeWord {
    letters: Vec<u8>,
}

impl TreeWord {
    pub fn new(letters: Vec<u8>, d: usize) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&x| x as usize >= d) {
            return Err(Error::InvalidParams(format!("letter {bad} not below d = {d}")));
        }
        Ok(TreeWord { letters })
    }

    pub fn empty() -> Self {
        TreeWord { letters: Vec::new() }
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Lexicographic index with `v_0` most significant.
    pub fn index(&self, d: usize) -> usize {
        word_index(&self.letters, d)
    }

    pub fn from_index(mut idx: usize, n: usize, d: usize) -> Self {
        let mut letters = vec![0u8; n];
        for slot in letters.iter_mut().rev() {
            *slot = (idx % d) as u8;
            idx /= d;
        }
        TreeWord { letters }
    }

    pub fn parse(s: &str, d: usize) -> Result<Self> {
        Ok(TreeWord { letters: parse_digit_string(s, d)? })
    }

    /// `(d-1)^n`.
    pub fn spine(n: usize, d: usize) -> Self {
        TreeWord { letters: vec![(d - 1) as u8; n] }
    }
}

impl fmt::Display for TreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &x in &self.letters {
            write!(f, "{}", digit_char(x as usize))?;
        }
        Ok(())
    }
}

pub(crate) fn word_index(letters: &[u8], d: usize) -> usize {
    letters.iter().fold(0, |acc, &x| acc * d + x as usize)
}

/// Applies `g` to a finite word in place.
pub(crate) fn act_in_place(g: &Generator, w: &mut [u8], omega: &OmegaSequence) {
    let d = omega.degree();
    match g {
        Generator::Rotor(k) => {
            if let Some(first) = w.first_mut() {
                *first = ((*first as usize + k) % d) as u8;
            }
        }
        Generator::Spine(b) => {
            let top = (d - 1) as u8;
            let n = w.iter().take_while(|&&x| x == top).count();
            if n + 1 < w.len() && w[n] == 0 {
                let shift = omega.get(n).apply_unchecked(b);
                w[n + 1] = ((w[n + 1] as usize + shift) % d) as u8;
            }
        }
    }
}

/// `g(w)`.
pub fn act(g: &Generator, w: &TreeWord, omega: &OmegaSequence) -> TreeWord {
    let mut out = w.clone();
    act_in_place(g, &mut out.letters, omega);
    out
}

/// An eventually periodic point `head · cycle^N` of the boundary, kept with a
/// primitive cycle and the shortest possible head.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundaryPoint {
    head: Vec<u8>,
    cycle: Vec<u8>,
}

impl BoundaryPoint {
    pub fn new(head: Vec<u8>, cycle: Vec<u8>, d: usize) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::InvalidParams("boundary point needs a nonempty period".into()));
        }
        if !(2..=MAX_DEGREE).contains(&d) {
            return Err(Error::InvalidParams(format!("degree d = {d} outside 2..={MAX_DEGREE}")));
        }
        if let Some(&bad) = head.iter().chain(&cycle).find(|&&x| x as usize >= d) {
            return Err(Error::InvalidParams(format!("letter {bad} not below d = {d}")));
        }
        Ok(BoundaryPoint::canonical(head, cycle))
    }

    /// `x^N`.
    pub fn constant(x: u8, d: usize) -> Result<Self> {
        BoundaryPoint::new(Vec::new(), vec![x], d)
    }

    /// `(d-1)^N`.
    pub fn spine(d: usize) -> Self {
        BoundaryPoint::canonical(Vec::new(), vec![(d - 1) as u8])
    }

    fn canonical(mut head: Vec<u8>, mut cycle: Vec<u8>) -> Self {
        let p = primitive_period(&cycle);
        cycle.truncate(p);
        while let (Some(&h), Some(&c)) = (head.last(), cycle.last()) {
            if h != c {
                break;
            }
            head.pop();
            cycle.rotate_right(1);
        }
        BoundaryPoint { head, cycle }
    }

    pub fn head(&self) -> &[u8] {
        &self.head
    }

    pub fn cycle(&self) -> &[u8] {
        &self.cycle
    }

    /// `xi_i`.
    pub fn letter(&self, i: usize) -> u8 {
        if i < self.head.len() {
            self.head[i]
        } else {
            self.cycle[(i - self.head.len()) % self.cycle.len()]
        }
    }

    /// `xi_0 ... xi_{len-1}`.
    pub fn prefix(&self, len: usize) -> Vec<u8> {
        (0..len).map(|i| self.letter(i)).collect()
    }

    /// `sigma^n(xi)`.
    pub fn shift(&self, n: usize) -> BoundaryPoint {
        if n <= self.head.len() {
            return BoundaryPoint { head: self.head[n..].to_vec(), cycle: self.cycle.clone() };
        }
        let mut cycle = self.cycle.clone();
        cycle.rotate_left((n - self.head.len()) % self.cycle.len());
        BoundaryPoint { head: Vec::new(), cycle }
    }

    /// `w · sigma^{|w|}(xi)`: replaces the first `|w|` letters.
    pub fn with_prefix(&self, w: &[u8]) -> BoundaryPoint {
        let tail = self.shift(w.len());
        let mut head = w.to_vec();
        head.extend_from_slice(&tail.head);
        BoundaryPoint::canonical(head, tail.cycle)
    }

    /// Whether the two points differ in finitely many letters.
    pub fn is_cofinal_with(&self, other: &BoundaryPoint) -> bool {
        let n = self.head.len().max(other.head.len());
        let l = self.cycle.len() * other.cycle.len();
        (n..n + l).all(|i| self.letter(i) == other.letter(i))
    }

    /// Whether the point is eventually constant equal to `x`.
    pub fn is_cofinal_with_constant(&self, x: u8) -> bool {
        self.cycle == [x]
    }

    /// Smallest `r` with `sigma^r(xi)` constant equal to `x`, if any.
    pub fn constant_tail_start(&self, x: u8) -> Option<usize> {
        self.is_cofinal_with_constant(x).then_some(self.head.len())
    }

    /// Parses `<prefix>|<preperiod>(<period>)`, e.g. `|(1)` or `20|(1)`.
    pub fn parse(s: &str, d: usize) -> Result<Self> {
        let s = s.trim();
        let (prefix, rest) = s.split_once('|').unwrap_or(("", s));
        let open = rest.find('(').ok_or_else(|| Error::Parse(format!("missing '(' in {s:?}")))?;
        let body = rest[open + 1..].strip_suffix(')').ok_or_else(|| Error::Parse(format!("missing ')' in {s:?}")))?;
        let mut head = parse_digit_string(prefix, d)?;
        head.extend(parse_digit_string(&rest[..open], d)?);
        let cycle = parse_digit_string(body, d)?;
        BoundaryPoint::new(head, cycle, d)
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let word = |w: &[u8]| w.iter().map(|&x| digit_char(x as usize)).collect::<String>();
        write!(f, "{}|({})", word(&self.head), word(&self.cycle))
    }
}

fn primitive_period(w: &[u8]) -> usize {
    let n = w.len();
    (1..=n).find(|&p| n.is_multiple_of(p) && (p..n).all(|i| w[i] == w[i - p])).unwrap_or(n)
}

/// `g(xi)`.
pub fn act_boundary(g: &Generator, xi: &BoundaryPoint, omega: &OmegaSequence) -> BoundaryPoint {
    let d = omega.degree();
    let top = (d - 1) as u8;
    let reach = match g {
        Generator::Rotor(_) => 1,
        Generator::Spine(_) => {
            // letters beyond head + cycle repeat, so a longer run of d-1 is infinite
            let limit = xi.head.len() + xi.cycle.len();
            match (0..=limit).find(|&i| xi.letter(i) != top) {
                None => return xi.clone(),
                Some(n) => n + 2,
            }
        }
    };
    let mut head = xi.prefix(reach);
    act_in_place(g, &mut head, omega);
    xi.with_prefix(&head)
}

/// Whether `n ∈ I_xi`: no word `(d-1)^r 0` is a prefix of `sigma^n(xi)`.
pub fn i_xi_contains(xi: &BoundaryPoint, n: usize, d: usize) -> bool {
    let top = (d - 1) as u8;
    let limit = n.max(xi.head.len()) + xi.cycle.len();
    for i in n..=limit {
        match xi.letter(i) {
            x if x == top => continue,
            0 => return false,
            _ => return true,
        }
    }
    // an unbroken run through a full period is the spine tail
    true
}

/// All `k <= bound` with `k, k+1 ∈ I_xi`.
pub fn w_certificate(xi: &BoundaryPoint, bound: usize, d: usize) -> Vec<usize> {
    let member: Vec<bool> = (0..=bound + 1).map(|n| i_xi_contains(xi, n, d)).collect();
    (0..=bound).filter(|&k| member[k] && member[k + 1]).collect()
}

/// Membership of `n` in `I_xi` decided from the finite prefix `word` alone;
/// `None` when the prefix ends inside a run of `d-1` that started at `n`.
pub fn i_prefix_contains(word: &[u8], n: usize, d: usize) -> Option<bool> {
    let top = (d - 1) as u8;
    for &x in word.iter().skip(n) {
        if x == top {
            continue;
        }
        return Some(x != 0);
    }
    None
}

/// Witnesses `k <= bound` whose membership `k, k+1 ∈ I_xi` is certified by
/// the prefix; undecided indices count as non-members.
pub fn w_certificate_prefix(word: &[u8], bound: usize, d: usize) -> Vec<usize> {
    let member = |n: usize| i_prefix_contains(word, n, d) == Some(true);
    (0..=bound).filter(|&k| member(k) && member(k + 1)).collect()
}
