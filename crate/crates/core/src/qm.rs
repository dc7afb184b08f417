//! Quasimorphisms on free groups, their defect, the hull action and
//! finite-window fingerprints of hull points.
//!
//! A [`Quasimorphism`] is a small immutable evaluator tree. Leaves are
//! Brooks counting functions and homomorphisms; inner nodes antisymmetrize,
//! scale, add, act by a group element or add a bounded perturbation pulled
//! back along an exponent-sum map. Values are exact rationals.
//!
//! The action on normalized functions is
//! `(g.f)(h) = f(h g) - f(g)`, a left action: `(g1 g2).f = g1.(g2.f)`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hull_lab::{BinarySetZ, SetTwist};
use crate::rational::{int, to_pq, Rational};
use crate::words::{GroupSpec, ReducedWord};

#[derive(Clone, Debug)]
enum Node {
    Counting(ReducedWord),
    Homomorphism(Vec<Rational>),
    Antisymmetrized(Quasimorphism),
    Scaled(Quasimorphism, i64),
    Sum(Vec<Quasimorphism>),
    Perturbation { base: Quasimorphism, set: Arc<BinarySetZ>, twist: SetTwist, generator: u32 },
    Acted(Quasimorphism, ReducedWord),
}

/// A normalized function on `F_r`, evaluated exactly.
#[derive(Clone, Debug)]
pub struct Quasimorphism {
    node: Arc<Node>,
}

impl Quasimorphism {
    fn from_node(node: Node) -> Self {
        Self { node: Arc::new(node) }
    }

    /// Brooks counting function: occurrences of `pattern` minus
    /// occurrences of its inverse, overlaps allowed, non-cyclic.
    pub fn counting(pattern: ReducedWord) -> Self {
        Self::from_node(Node::Counting(pattern))
    }

    /// The homomorphism `g -> sum_i weights[i-1] * exp_sum(g, i)`.
    pub fn homomorphism(weights: Vec<Rational>) -> Self {
        Self::from_node(Node::Homomorphism(weights))
    }

    pub fn zero() -> Self {
        Self::homomorphism(Vec::new())
    }

    pub fn scaled(&self, factor: i64) -> Self {
        Self::from_node(Node::Scaled(self.clone(), factor))
    }

    pub fn sum(parts: Vec<Quasimorphism>) -> Self {
        Self::from_node(Node::Sum(parts))
    }

    pub(crate) fn perturbation(base: Quasimorphism, set: Arc<BinarySetZ>, twist: SetTwist, generator: u32) -> Self {
        Self::from_node(Node::Perturbation { base, set, twist, generator })
    }

    /// True for leaves and sums of homomorphisms, which are fixed by the action.
    pub fn is_homomorphism(&self) -> bool {
        match &*self.node {
            Node::Homomorphism(_) => true,
            Node::Scaled(inner, _) | Node::Acted(inner, _) => inner.is_homomorphism(),
            Node::Sum(parts) => parts.iter().all(Quasimorphism::is_homomorphism),
            _ => false,
        }
    }

    /// True when the tree is integer-valued and odd under inversion by
    /// construction, so antisymmetrizing it changes nothing.
    fn is_antisymmetric_integral(&self) -> bool {
        match &*self.node {
            Node::Counting(_) | Node::Antisymmetrized(_) => true,
            Node::Homomorphism(w) => w.iter().all(|x| x.is_integer()),
            Node::Scaled(inner, _) => inner.is_antisymmetric_integral(),
            Node::Sum(parts) => parts.iter().all(Quasimorphism::is_antisymmetric_integral),
            Node::Perturbation { base, twist, .. } => *twist == SetTwist::Xi && base.is_antisymmetric_integral(),
            Node::Acted(..) => false,
        }
    }

    /// Number of leading letters of `g`, beyond `|h|`, that `f(h g) - f(g)`
    /// depends on, given the exponent sums of `g`; `None` if it depends on
    /// all of `g`.
    pub(crate) fn reach(&self) -> Option<usize> {
        match &*self.node {
            Node::Counting(p) => Some(p.len()),
            Node::Homomorphism(_) => Some(0),
            Node::Antisymmetrized(_) => None,
            Node::Scaled(inner, _) => inner.reach(),
            Node::Sum(parts) => parts.iter().try_fold(0, |acc, p| p.reach().map(|r| acc.max(r))),
            Node::Perturbation { base, .. } => base.reach(),
            Node::Acted(inner, by) => inner.reach().map(|r| r + by.len()),
        }
    }

    /// `f(h g) - f(g)` from `prefix`, the first `|h| + reach` letters of `g`,
    /// and `exps`, the exponent sums of `g`. Needs `|g| >= |h| + reach`.
    pub(crate) fn left_diff_local(&self, h: &ReducedWord, prefix: &[i32], exps: &[i64]) -> Rational {
        match &*self.node {
            Node::Counting(p) => {
                // cancellation eats at most |h| letters of the prefix, so
                // occurrences meeting the unseen tail are unchanged
                let u = ReducedWord::reduce_unchecked(prefix);
                let hu = h.mul(&u);
                let count = |x: &ReducedWord| x.count_occurrences(p) as i64 - x.count_occurrences(&p.inv()) as i64;
                int(count(&hu) - count(&u))
            }
            Node::Homomorphism(_) => self.eval(h),
            Node::Antisymmetrized(_) => unreachable!("reach is None"),
            Node::Scaled(inner, k) => inner.left_diff_local(h, prefix, exps) * int(*k),
            Node::Sum(parts) => parts
                .iter()
                .fold(Rational::zero(), |acc, p| acc + p.left_diff_local(h, prefix, exps)),
            Node::Perturbation { base, set, twist, generator } => {
                let n = exps.get(*generator as usize - 1).copied().unwrap_or(0);
                let dn = h.exp_sum(*generator);
                let ds = set.twisted_closed(*twist, n + dn) - set.twisted_closed(*twist, n);
                base.left_diff_local(h, prefix, exps) + int(ds)
            }
            Node::Acted(inner, by) => {
                // g by keeps the prefix because |g| >= |by| + |h| + reach(inner)
                let shifted: Vec<i64> =
                    exps.iter().enumerate().map(|(i, e)| e + by.exp_sum(i as u32 + 1)).collect();
                let keep = prefix.len() - by.len();
                inner.left_diff_local(h, &prefix[..keep], &shifted)
            }
        }
    }

    pub fn eval(&self, g: &ReducedWord) -> Rational {
        match &*self.node {
            Node::Counting(pattern) => {
                let plus = g.count_occurrences(pattern) as i64;
                let minus = g.count_occurrences(&pattern.inv()) as i64;
                int(plus - minus)
            }
            Node::Homomorphism(weights) => weights
                .iter()
                .enumerate()
                .filter(|(_, w)| !w.is_zero())
                .map(|(i, w)| w * int(g.exp_sum(i as u32 + 1)))
                .fold(Rational::zero(), |acc, x| acc + x),
            Node::Antisymmetrized(inner) => {
                let two = int(2);
                let a = (inner.eval(g) / &two).floor();
                let b = (inner.eval(&g.inv()) / &two).floor();
                a - b
            }
            Node::Scaled(inner, k) => inner.eval(g) * int(*k),
            Node::Sum(parts) => parts.iter().fold(Rational::zero(), |acc, p| acc + p.eval(g)),
            Node::Perturbation { base, set, twist, generator } => {
                let n = g.exp_sum(*generator);
                let s = set.twisted_closed(*twist, n);
                base.eval(g) + int(s)
            }
            Node::Acted(inner, by) => inner.eval(&g.mul(by)) - inner.eval(by),
        }
    }

    /// Short human-readable form, e.g. `acted(counting(1-2), 1)`.
    pub fn describe(&self) -> String {
        match &*self.node {
            Node::Counting(p) => format!("counting({p})"),
            Node::Homomorphism(w) => {
                format!("hom({})", w.iter().map(to_pq).collect::<Vec<_>>().join(","))
            }
            Node::Antisymmetrized(q) => format!("antisym({})", q.describe()),
            Node::Scaled(q, k) => format!("{k}*{}", q.describe()),
            Node::Sum(parts) => {
                format!("sum({})", parts.iter().map(Quasimorphism::describe).collect::<Vec<_>>().join(","))
            }
            Node::Perturbation { base, set, twist, generator } => {
                format!("{}+{twist:?}({})∘exp{generator}", base.describe(), set.describe())
            }
            Node::Acted(q, g) => format!("acted({}, {g})", q.describe()),
        }
    }
}

impl fmt::Display for Quasimorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// `floor(f(g)/2) - floor(f(g^-1)/2)`; returns `f` itself when `f` is
/// already antisymmetric and integer-valued, where the formula is the identity.
pub fn antisymmetrize(f: &Quasimorphism) -> Quasimorphism {
    if f.is_antisymmetric_integral() {
        return f.clone();
    }
    Quasimorphism::from_node(Node::Antisymmetrized(f.clone()))
}

pub fn rescale3(f: &Quasimorphism) -> Quasimorphism {
    f.scaled(3)
}

/// `g.f`, i.e. `h -> f(h g) - f(g)`.
pub fn act(g: &ReducedWord, f: &Quasimorphism) -> Quasimorphism {
    if g.is_identity() {
        return f.clone();
    }
    Quasimorphism::from_node(Node::Acted(f.clone(), g.clone()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefectReport {
    pub radius: usize,
    pub value: Rational,
    /// First maximizing pair `(g, h)` in canonical order.
    pub argmax: (ReducedWord, ReducedWord),
}

/// `max |f(gh) - f(g) - f(h)|` over `B_L x B_L`.
pub fn defect(spec: &GroupSpec, f: &Quasimorphism, radius: usize) -> Result<DefectReport> {
    let ball = spec.ball(radius)?;
    let values: Vec<Rational> = ball.par_iter().map(|g| f.eval(g)).collect();
    let rows: Vec<(Rational, usize)> = ball
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let mut best = (Rational::zero(), 0usize);
            for (j, h) in ball.iter().enumerate() {
                let d = (f.eval(&g.mul(h)) - &values[i] - &values[j]).abs();
                if d > best.0 {
                    best = (d, j);
                }
            }
            best
        })
        .collect();
    let mut best = (Rational::zero(), 0usize, 0usize);
    for (i, (d, j)) in rows.into_iter().enumerate() {
        if d > best.0 {
            best = (d, i, j);
        }
    }
    Ok(DefectReport { radius, value: best.0, argmax: (ball[best.1].clone(), ball[best.2].clone()) })
}

/// The values `f(gh) - f(g) - f(h)` over `B_L x B_L`.
pub fn defect_set(spec: &GroupSpec, f: &Quasimorphism, radius: usize) -> Result<BTreeSet<Rational>> {
    let ball = spec.ball(radius)?;
    let values: Vec<Rational> = ball.iter().map(|g| f.eval(g)).collect();
    let sets: Vec<BTreeSet<Rational>> = ball
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            ball.iter()
                .enumerate()
                .map(|(j, h)| f.eval(&g.mul(h)) - &values[i] - &values[j])
                .collect()
        })
        .collect();
    Ok(sets.into_iter().flatten().collect())
}

/// Values of a normalized function on the ball `B_L`, in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct Fingerprint {
    spec: GroupSpec,
    radius: usize,
    words: Arc<Vec<ReducedWord>>,
    values: Vec<Rational>,
}

impl Fingerprint {
    /// Build from a value table aligned with `spec.ball(radius)`.
    pub fn from_values(spec: GroupSpec, radius: usize, values: Vec<Rational>) -> Result<Self> {
        let words = spec.ball(radius)?;
        if words.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "fingerprint table has {} values, ball has {} words",
                values.len(),
                words.len()
            )));
        }
        Ok(Self { spec, radius, words: Arc::new(words), values })
    }

    /// Build by evaluating `value` at every word of the ball.
    pub fn from_fn(spec: GroupSpec, radius: usize, value: impl Fn(&ReducedWord) -> Rational + Sync) -> Result<Self> {
        let words = spec.ball(radius)?;
        let values = words.par_iter().map(&value).collect();
        Ok(Self { spec, radius, words: Arc::new(words), values })
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn words(&self) -> &[ReducedWord] {
        &self.words
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn get(&self, g: &ReducedWord) -> Option<&Rational> {
        self.words.binary_search(g).ok().map(|i| &self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ReducedWord, &Rational)> {
        self.words.iter().zip(self.values.iter())
    }

    /// Restriction to a smaller ball.
    pub fn restrict(&self, radius: usize) -> Result<Fingerprint> {
        if radius > self.radius {
            return Err(Error::RadiusMismatch { needed: radius, have: self.radius });
        }
        let n = self.spec.ball_size(radius) as usize;
        Ok(Fingerprint {
            spec: self.spec,
            radius,
            words: Arc::new(self.words[..n].to_vec()),
            values: self.values[..n].to_vec(),
        })
    }

    /// Fingerprint of `g.f` on `B_{L-|g|}`, read off the table of `f` on `B_L`.
    pub fn act(&self, g: &ReducedWord) -> Result<Fingerprint> {
        if g.len() > self.radius {
            return Err(Error::RadiusMismatch { needed: g.len(), have: self.radius });
        }
        let radius = self.radius - g.len();
        let base = self.get(g).expect("g lies in the ball").clone();
        let words = self.spec.ball(radius)?;
        let values = words
            .iter()
            .map(|h| self.get(&h.mul(g)).expect("hg lies in the ball") - &base)
            .collect();
        Ok(Fingerprint { spec: self.spec, radius, words: Arc::new(words), values })
    }

    /// `max |self - other|` on the common ball.
    pub fn sup_distance(&self, other: &Fingerprint) -> Rational {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// True when every value is an integer.
    pub fn is_integral(&self) -> bool {
        self.values.iter().all(|v| v.is_integer())
    }

    /// CSV rows `word,value` with values as `p/q`.
    pub fn csv_rows(&self) -> Vec<[String; 2]> {
        self.iter().map(|(w, v)| [w.to_dash_string(), to_pq(v)]).collect()
    }
}

/// Exact values of `f` on `B_L`.
pub fn fingerprint(spec: &GroupSpec, f: &Quasimorphism, radius: usize) -> Result<Fingerprint> {
    Fingerprint::from_fn(*spec, radius, |g| f.eval(g))
}

/// Mod-3 floor helper shared with the perturbation checks: true if `v` is an
/// integer divisible by 3.
pub(crate) fn is_three_divisible(v: &Rational) -> bool {
    v.is_integer() && v.to_integer().is_multiple_of(&3.into())
}
