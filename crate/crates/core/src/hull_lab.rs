//! Hull-walk experiments and the bounded perturbations used to produce
//! quasimorphisms with many stationary measures.
//!
//! Subsets of the integers are [`BinarySetZ`] values; `eta(A)(n) =
//! chi_A(n) - chi_A(0)` and its antisymmetrization `xi(A) = chi_A -
//! chi_{-A}`. The integers act on sets by `k.A = A - k`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::qm::{is_three_divisible, Fingerprint, Quasimorphism};
use crate::rational::{int, quantize, to_pq, Rational};
use crate::rng::SplitMix64;
use crate::walk::StepDistribution;
use crate::words::{GroupSpec, ReducedWord};

/// Grid step `2^-20` for histogram keys of non-integer fingerprints.
pub const KEY_QUANTUM_BITS: u32 = 20;

/// Default radius on which a perturbation base is checked to be 3Z-valued.
pub const BASE_CHECK_RADIUS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum ClosedForm {
    /// Finite set given by the bits `x_0 x_1 ...`, empty outside `[0, len)`.
    Prefix(Arc<Vec<bool>>),
    /// `n in A` iff output `zigzag(n)` of splitmix64(`seed`) is below `q * 2^64`.
    Bernoulli { q: Rational, seed: u64, threshold: u128 },
    /// `n in A` iff `pattern[n mod len]`.
    Periodic(Vec<bool>),
    Explicit(BTreeSet<i64>),
    /// `A ∩ [0, inf)` for a closed-form `A`.
    NonNegative(Box<ClosedForm>),
}

/// A subset of the integers, known on `[-W, W]` and optionally everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct BinarySetZ {
    window: i64,
    bits: Vec<bool>,
    closed: Option<ClosedForm>,
}

fn zigzag(n: i64) -> u64 {
    if n >= 0 {
        2 * n as u64
    } else {
        2 * n.unsigned_abs() - 1
    }
}

impl ClosedForm {
    fn contains(&self, n: i64) -> bool {
        match self {
            ClosedForm::Prefix(bits) => n >= 0 && (n as usize) < bits.len() && bits[n as usize],
            ClosedForm::Bernoulli { seed, threshold, .. } => {
                (SplitMix64::nth_output(*seed, zigzag(n)) as u128) < *threshold
            }
            ClosedForm::Periodic(pattern) => pattern[n.rem_euclid(pattern.len() as i64) as usize],
            ClosedForm::Explicit(set) => set.contains(&n),
            ClosedForm::NonNegative(inner) => n >= 0 && inner.contains(n),
        }
    }
}

impl BinarySetZ {
    fn materialize(window: i64, closed: ClosedForm) -> Self {
        let bits = (-window..=window).map(|n| closed.contains(n)).collect();
        Self { window, bits, closed: Some(closed) }
    }

    /// A set known only on `[-W, W]`; `bits[i]` is membership of `i - W`.
    pub fn from_window_bits(window: i64, bits: Vec<bool>) -> Result<Self> {
        if window < 0 || bits.len() as i64 != 2 * window + 1 {
            return Err(Error::InvalidArgument(format!("need {} bits for window {window}", 2 * window + 1)));
        }
        Ok(Self { window, bits, closed: None })
    }

    pub fn empty() -> Self {
        Self::explicit([])
    }

    pub fn explicit(members: impl IntoIterator<Item = i64>) -> Self {
        let set: BTreeSet<i64> = members.into_iter().collect();
        let window = set.iter().map(|n| n.abs()).max().unwrap_or(0);
        Self::materialize(window, ClosedForm::Explicit(set))
    }

    /// `{n : pattern[n mod len]}`, materialized on `[-W, W]`.
    pub fn periodic(pattern: Vec<bool>, window: i64) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::InvalidArgument("empty periodic pattern".into()));
        }
        Ok(Self::materialize(window, ClosedForm::Periodic(pattern)))
    }

    pub fn evens(window: i64) -> Self {
        Self::periodic(vec![true, false], window).expect("non-empty pattern")
    }

    /// I.i.d. membership with probability `q`, driven by splitmix64.
    pub fn bernoulli(q: Rational, seed: u64, window: i64) -> Result<Self> {
        if q.is_negative() || q > Rational::one() {
            return Err(Error::InvalidArgument(format!("Bernoulli parameter {q} outside [0, 1]")));
        }
        let scaled = &q * Rational::from_integer(BigInt::one() << 64);
        let threshold = scaled.ceil().to_integer().to_u128().expect("q <= 1");
        Ok(Self::materialize(window, ClosedForm::Bernoulli { q, seed, threshold }))
    }

    /// `A ∩ [0, inf)`; needs a closed form.
    pub fn nonnegative_part(&self) -> Result<Self> {
        let inner = self
            .closed
            .clone()
            .ok_or_else(|| Error::InvalidArgument(format!("{self} has no closed form")))?;
        Ok(Self::materialize(self.window, ClosedForm::NonNegative(Box::new(inner))))
    }

    /// `A(x) = {k >= 0 : x_k = 1}` for a finite bit string `x`.
    pub fn from_prefix(x: Vec<bool>) -> Self {
        let window = x.len() as i64;
        Self::materialize(window, ClosedForm::Prefix(Arc::new(x)))
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed.is_some()
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        self.closed.as_ref()
    }

    pub fn contains(&self, n: i64) -> Result<bool> {
        if n.abs() <= self.window {
            return Ok(self.bits[(n + self.window) as usize]);
        }
        match &self.closed {
            Some(c) => Ok(c.contains(n)),
            None => Err(Error::OutOfWindow { index: n, window: self.window }),
        }
    }

    fn contains_closed(&self, n: i64) -> bool {
        match &self.closed {
            Some(c) if n.abs() > self.window => c.contains(n),
            _ => self.bits[(n + self.window) as usize],
        }
    }

    /// Members in `[lo, hi]`.
    pub fn members_in(&self, lo: i64, hi: i64) -> Result<Vec<i64>> {
        let mut out = Vec::new();
        for n in lo..=hi {
            if self.contains(n)? {
                out.push(n);
            }
        }
        Ok(out)
    }

    /// `eta` or `xi` at `n`; only called on sets with a closed form.
    pub(crate) fn twisted_closed(&self, twist: SetTwist, n: i64) -> i64 {
        let chi = |m: i64| i64::from(self.contains_closed(m));
        match twist {
            SetTwist::Eta => chi(n) - chi(0),
            SetTwist::Xi => chi(n) - chi(-n),
        }
    }

    pub fn describe(&self) -> String {
        match &self.closed {
            Some(ClosedForm::Prefix(bits)) => format!("prefix[{}]", bits.len()),
            Some(ClosedForm::Bernoulli { q, seed, .. }) => format!("bernoulli({},{seed})", to_pq(q)),
            Some(ClosedForm::Periodic(p)) => {
                format!("periodic({})", p.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>())
            }
            Some(ClosedForm::Explicit(s)) => {
                format!("list({})", s.iter().map(i64::to_string).collect::<Vec<_>>().join(","))
            }
            Some(ClosedForm::NonNegative(inner)) => {
                let inner = Self { window: 0, bits: vec![false], closed: Some((**inner).clone()) };
                format!("nonneg({})", inner.describe())
            }
            None => format!("window[{}]", self.window),
        }
    }
}

impl fmt::Display for BinarySetZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// Which bounded function a set induces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetTwist {
    /// `chi_A(n) - chi_A(0)`
    Eta,
    /// `chi_A(n) - chi_A(-n)`
    Xi,
}

/// The bit string `x` obtained by concatenating all binary words of length
/// `1, 2, ..., K` in lexicographic order.
pub fn generic_bits(max_block: usize) -> Vec<bool> {
    let mut x = Vec::new();
    for len in 1..=max_block {
        for code in 0u64..(1u64 << len) {
            for i in (0..len).rev() {
                x.push((code >> i) & 1 == 1);
            }
        }
    }
    x
}

/// `A(x)` for the concatenation `x` of [`generic_bits`]. Every binary word
/// of length at most `K` occurs in `x`, and `A` lies in the naturals.
pub fn generic_set(max_block: usize) -> Result<BinarySetZ> {
    if max_block == 0 {
        return Err(Error::InvalidArgument("block length K must be at least 1".into()));
    }
    Ok(BinarySetZ::from_prefix(generic_bits(max_block)))
}

/// Binary words of length `len` that do not occur as factors of `bits`,
/// in lexicographic order.
pub fn missing_factors(bits: &[bool], len: usize) -> Vec<Vec<bool>> {
    assert!(len < usize::BITS as usize);
    let mut seen = vec![false; 1 << len];
    for w in bits.windows(len) {
        seen[w.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b))] = true;
    }
    (0..1usize << len)
        .filter(|&c| !seen[c])
        .map(|c| (0..len).rev().map(|i| (c >> i) & 1 == 1).collect())
        .collect()
}

pub fn eta(set: &BinarySetZ, n: i64) -> Result<i64> {
    Ok(i64::from(set.contains(n)?) - i64::from(set.contains(0)?))
}

pub fn xi(set: &BinarySetZ, n: i64) -> Result<i64> {
    Ok(i64::from(set.contains(n)?) - i64::from(set.contains(-n)?))
}

/// `base + s o exp_sum_i`, where `s` is `eta(A)` or `xi(A)`.
///
/// `base` must be 3Z-valued (checked on `B_check_radius`) and `A` must have a
/// closed form so that the result is defined on the whole group.
pub fn perturbation_qm(
    spec: &GroupSpec,
    set: Arc<BinarySetZ>,
    twist: SetTwist,
    generator: u32,
    base: &Quasimorphism,
    check_radius: usize,
) -> Result<Quasimorphism> {
    spec.check_letter(generator as i32)?;
    if !set.has_closed_form() {
        return Err(Error::InvalidArgument(format!("perturbation set {set} has no closed form")));
    }
    for g in spec.ball(check_radius)? {
        if !is_three_divisible(&base.eval(&g)) {
            return Err(Error::NotThreeDivisible { word: g.to_dash_string() });
        }
    }
    Ok(Quasimorphism::perturbation(base.clone(), set, twist, generator))
}

/// `v = base + s` with `base in 3Z` and `s in {-1, 0, 1}`.
pub fn decompose_mod3(v: i64) -> (i64, i64) {
    let s = (v + 1).rem_euclid(3) - 1;
    (v - s, s)
}

/// [`decompose_mod3`] for integral rationals.
pub fn decompose_mod3_rational(v: &Rational) -> Result<(Rational, i64)> {
    if !v.is_integer() {
        return Err(Error::InvalidArgument(format!("{v} is not an integer")));
    }
    let three = BigInt::from(3);
    let shifted = v.to_integer() + BigInt::one();
    let r = ((shifted % &three) + &three) % &three;
    let s = r.to_i64().expect("small") - 1;
    Ok((v - int(s), s))
}

/// Residual part of a fingerprint of `base + s`, i.e. the table of `s`.
pub fn beta_projection(fp: &Fingerprint) -> Result<Fingerprint> {
    let values = fp
        .values()
        .iter()
        .map(|v| decompose_mod3_rational(v).map(|(_, s)| int(s)))
        .collect::<Result<Vec<_>>>()?;
    Fingerprint::from_values(fp.spec(), fp.radius(), values)
}

/// Smallest `k >= 0` with `(A - k) ∩ F = target ∩ F`, i.e.
/// `chi_A(n + k) = chi_target(n)` for every `n` in `window`.
pub fn find_shift_witness(set: &BinarySetZ, target: &BinarySetZ, window: &[i64]) -> Result<i64> {
    if window.is_empty() {
        return Ok(0);
    }
    let want: Vec<bool> = window.iter().map(|&n| target.contains(n)).collect::<Result<_>>()?;
    let span = window.iter().map(|n| n.abs()).max().unwrap_or(0);
    let bound = set.window() + span + 1;
    for k in 0..=bound {
        let mut ok = true;
        for (n, &b) in window.iter().zip(&want) {
            if set.contains(n + k)? != b {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(k);
        }
    }
    Err(Error::NotFound(format!("no shift k <= {bound} matches the target on the window; increase K")))
}

/// `(k.s)(n) = s(n + k) - s(k)` for `s = xi(A)` and `n` in ball order
/// `0, 1, -1, ..., W, -W`.
pub fn so_window(set: &BinarySetZ, k: i64, radius: i64) -> Result<Vec<i64>> {
    let base = xi(set, k)?;
    integer_ball(radius).map(|n| Ok(xi(set, n + k)? - base)).collect()
}

/// `eta(B)` on the integer ball of radius `W`, in ball order.
pub fn eta_window(set: &BinarySetZ, radius: i64) -> Result<Vec<i64>> {
    integer_ball(radius).map(|n| eta(set, n)).collect()
}

fn integer_ball(radius: i64) -> impl Iterator<Item = i64> {
    std::iter::once(0).chain((1..=radius).flat_map(|n| [n, -n]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitWitness {
    pub k: i64,
    /// `(k.xi(A))` on `[-W, W]` in ball order; equals `eta(B)` there.
    pub values: Vec<i64>,
}

/// Smallest `k > W` whose translate `k.xi(A)` agrees with `eta(B)` on `[-W, W]`.
pub fn so_orbit_limit(set: &BinarySetZ, target: &BinarySetZ, radius: i64) -> Result<OrbitWitness> {
    if radius < 1 {
        return Err(Error::InvalidArgument("window W must be at least 1".into()));
    }
    let want = eta_window(target, radius)?;
    let bound = set.window() + 2 * radius + 1;
    for k in radius + 1..=bound {
        let values = so_window(set, k, radius)?;
        if values == want {
            return Ok(OrbitWitness { k, values });
        }
    }
    Err(Error::NotFound(format!("no k in ({radius}, {bound}] reproduces eta(B); increase K")))
}

/// Histogram of fingerprint keys visited by a hull walk.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    radius: usize,
    total: u64,
    counts: BTreeMap<Vec<Rational>, u64>,
}

impl EmpiricalMeasure {
    pub fn new(radius: usize) -> Self {
        Self { radius, total: 0, counts: BTreeMap::new() }
    }

    pub fn record(&mut self, key: Vec<Rational>) {
        *self.counts.entry(key).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn num_keys(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &BTreeMap<Vec<Rational>, u64> {
        &self.counts
    }

    /// Histogram with keys mapped through `f`, e.g. [`beta_projection`].
    pub fn map_keys(&self, f: impl Fn(&[Rational]) -> Vec<Rational>) -> EmpiricalMeasure {
        let mut out = EmpiricalMeasure::new(self.radius);
        for (k, c) in &self.counts {
            *out.counts.entry(f(k)).or_insert(0) += c;
        }
        out.total = self.total;
        out
    }

    /// CSV rows: key as comma-joined `p/q` values, count.
    pub fn csv_rows(&self) -> Vec<[String; 2]> {
        self.counts
            .iter()
            .map(|(k, c)| (k.iter().map(to_pq).collect::<Vec<_>>().join(","), c.to_string()))
            .map(|(k, c)| [k, c])
            .collect()
    }
}

fn histogram_key(values: Vec<Rational>) -> Vec<Rational> {
    if values.iter().all(|v| v.is_integer()) {
        values
    } else {
        values.iter().map(|v| quantize(v, KEY_QUANTUM_BITS)).collect()
    }
}

/// Runs `x_{n+1} = w_{n+1}.x_n` from `x_0 = f` and records the fingerprint of
/// `x_1, ..., x_steps` on `B_L`. The state is tracked as `g_n = w_n ... w_1`.
pub fn hull_walk(f: &Quasimorphism, p: &StepDistribution, steps: usize, radius: usize, seed: u64) -> Result<EmpiricalMeasure> {
    if steps == 0 {
        return Err(Error::InvalidArgument("hull walk needs at least one step".into()));
    }
    let spec = p.spec();
    let ball = spec.ball(radius)?;
    let sampler = p.sampler();
    let mut rng = SplitMix64::new(seed);
    let mut g = LeftStack::new(spec.rank() as usize);
    let window = f.reach().map(|r| r + radius);
    let mut hist = EmpiricalMeasure::new(radius);
    for _ in 0..steps {
        g.push_left(sampler.sample(&mut rng));
        let values = match window {
            Some(w) if g.len() >= w => {
                let prefix = g.prefix(w);
                ball.iter().map(|h| f.left_diff_local(h, &prefix[..h.len() + w - radius], &g.exps)).collect()
            }
            _ => {
                let word = g.word();
                let base = f.eval(&word);
                ball.iter().map(|h| f.eval(&h.mul(&word)) - &base).collect()
            }
        };
        hist.record(histogram_key(values));
    }
    Ok(hist)
}

/// A reduced word under left multiplication, stored last letter first, with
/// running exponent sums.
struct LeftStack {
    rev: Vec<i32>,
    exps: Vec<i64>,
}

impl LeftStack {
    fn new(rank: usize) -> Self {
        Self { rev: Vec::new(), exps: vec![0; rank] }
    }

    fn len(&self) -> usize {
        self.rev.len()
    }

    fn push_left(&mut self, w: &ReducedWord) {
        for &l in w.letters().iter().rev() {
            self.exps[l.unsigned_abs() as usize - 1] += i64::from(l.signum());
            if self.rev.last() == Some(&-l) {
                self.rev.pop();
            } else {
                self.rev.push(l);
            }
        }
    }

    fn prefix(&self, k: usize) -> Vec<i32> {
        self.rev[self.rev.len() - k..].iter().rev().copied().collect()
    }

    fn word(&self) -> ReducedWord {
        let letters: Vec<i32> = self.rev.iter().rev().copied().collect();
        ReducedWord::reduce_unchecked(&letters)
    }
}

/// `1/2 sum_k |h1(k)/n1 - h2(k)/n2|`, exact.
pub fn tv_distance(h1: &EmpiricalMeasure, h2: &EmpiricalMeasure) -> Result<Rational> {
    if h1.radius != h2.radius {
        return Err(Error::RadiusMismatch { needed: h1.radius, have: h2.radius });
    }
    if h1.total == 0 || h2.total == 0 {
        return Err(Error::InvalidArgument("empty histogram".into()));
    }
    let (n1, n2) = (int(h1.total as i64), int(h2.total as i64));
    let keys: BTreeSet<&Vec<Rational>> = h1.counts.keys().chain(h2.counts.keys()).collect();
    let mut sum = Rational::zero();
    for k in keys {
        let a = int(*h1.counts.get(k).unwrap_or(&0) as i64) / &n1;
        let b = int(*h2.counts.get(k).unwrap_or(&0) as i64) / &n2;
        sum += (a - b).abs();
    }
    Ok(sum / int(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qm::{act, antisymmetrize, defect, rescale3};
    use crate::rational::ratio;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    fn f2() -> GroupSpec {
        GroupSpec::new(2).unwrap()
    }

    fn ab() -> Quasimorphism {
        Quasimorphism::counting(f2().reduce(&[1, 2]).unwrap())
    }

    #[test]
    fn generic_set_examples() {
        assert_eq!(generic_bits(1), bits("01"));
        assert_eq!(generic_bits(2), bits("0100011011"));
        let a = generic_set(2).unwrap();
        assert_eq!(a.members_in(-3, 12).unwrap(), vec![1, 5, 6, 8, 9]);
        let a1 = generic_set(1).unwrap();
        assert_eq!(a1.members_in(-5, 5).unwrap(), vec![1]);
        assert!(generic_set(0).is_err());
    }

    // Exhaustive factor scan, written independently of the generator.
    fn contains_all_words(x: &[bool], len: usize) -> bool {
        let mut seen = vec![false; 1 << len];
        for win in x.windows(len) {
            let code = win.iter().fold(0usize, |acc, &b| acc * 2 + usize::from(b));
            seen[code] = true;
        }
        seen.into_iter().all(|s| s)
    }

    #[test]
    fn generic_set_contains_all_factors() {
        for k in 1..=6 {
            let x = generic_bits(k);
            for len in 1..=k {
                assert!(contains_all_words(&x, len), "K = {k}, len = {len}");
            }
        }
        assert!(contains_all_words(&generic_bits(3), 3));
        assert!(missing_factors(&generic_bits(4), 4).is_empty());
        assert_eq!(missing_factors(&bits("0011"), 2), vec![bits("10")]);
    }

    #[test]
    fn eta_examples() {
        let a = BinarySetZ::explicit([0, 2]);
        assert_eq!(eta(&a, 2).unwrap(), 0);
        assert_eq!(eta(&BinarySetZ::explicit([2]), 2).unwrap(), 1);
        for n in -4..=4 {
            assert_eq!(eta(&BinarySetZ::periodic(vec![true], 5).unwrap(), n).unwrap(), 0);
        }
        assert_eq!(eta(&a, 0).unwrap(), 0);
    }

    #[test]
    fn xi_examples() {
        let a = BinarySetZ::explicit([1]);
        assert_eq!(xi(&a, 1).unwrap(), 1);
        assert_eq!(xi(&a, -1).unwrap(), -1);
        let sym = BinarySetZ::explicit([-3, -1, 1, 3]);
        assert!((-5..=5).all(|n| xi(&sym, n).unwrap() == 0));
        assert_eq!(xi(&BinarySetZ::explicit([0]), 0).unwrap(), 0);
    }

    #[test]
    fn local_differences_match_full_evaluation() {
        let spec = f2();
        let set = Arc::new(BinarySetZ::bernoulli(ratio(1, 3), 9, 8).unwrap().nonnegative_part().unwrap());
        let a = spec.reduce(&[1]).unwrap();
        let trees = vec![
            ab(),
            act(&spec.reduce(&[2, 1]).unwrap(), &Quasimorphism::counting(spec.reduce(&[1, 1, -2]).unwrap())),
            perturbation_qm(&spec, set.clone(), SetTwist::Xi, 1, &rescale3(&ab()), 3).unwrap(),
            perturbation_qm(&spec, set, SetTwist::Eta, 2, &Quasimorphism::zero(), 3).unwrap(),
            Quasimorphism::sum(vec![act(&a, &ab()).scaled(2), Quasimorphism::homomorphism(vec![ratio(1, 2), int(-1)])]),
        ];
        let ball = spec.ball(2).unwrap();
        let mut rng = SplitMix64::new(4);
        for f in &trees {
            let reach = f.reach().unwrap();
            for _ in 0..40 {
                let raw: Vec<i32> = (0..40).map(|_| [1, -1, 2, -2][rng.below(4) as usize]).collect();
                let g = spec.reduce(&raw).unwrap();
                if g.len() < reach + 2 {
                    continue;
                }
                let exps = [g.exp_sum(1), g.exp_sum(2)];
                for h in &ball {
                    let full = f.eval(&h.mul(&g)) - f.eval(&g);
                    let local = f.left_diff_local(h, &g.letters()[..h.len() + reach], &exps);
                    assert_eq!(local, full, "{f} at {h} * {g}");
                }
            }
        }
        assert!(antisymmetrize(&act(&a, &ab())).reach().is_none());
        assert_eq!(antisymmetrize(&ab()).reach(), Some(2));
    }

    #[test]
    fn nonnegative_part() {
        let a = BinarySetZ::bernoulli(ratio(1, 2), 5, 4).unwrap();
        let half = a.nonnegative_part().unwrap();
        for n in -40..=40 {
            assert_eq!(half.contains(n).unwrap(), n >= 0 && a.contains(n).unwrap());
        }
        assert_eq!(half.describe(), "nonneg(bernoulli(1/2,5))");
        let bare = BinarySetZ::from_window_bits(1, vec![true, false, true]).unwrap();
        assert!(bare.nonnegative_part().is_err());
    }

    #[test]
    fn xi_is_antisymmetric_on_window() {
        let a = BinarySetZ::bernoulli(ratio(1, 2), 3, 50).unwrap();
        for n in -50..=50 {
            assert_eq!(xi(&a, -n).unwrap(), -xi(&a, n).unwrap());
        }
    }

    #[test]
    fn window_only_sets_reject_outside_queries() {
        let a = BinarySetZ::from_window_bits(1, vec![true, false, true]).unwrap();
        assert!(a.contains(-1).unwrap());
        assert!(matches!(a.contains(2), Err(Error::OutOfWindow { index: 2, window: 1 })));
        assert!(BinarySetZ::from_window_bits(1, vec![true]).is_err());
        let p = perturbation_qm(&f2(), Arc::new(a), SetTwist::Xi, 1, &Quasimorphism::zero(), 2);
        assert!(p.is_err());
    }

    #[test]
    fn bernoulli_sets() {
        let a = BinarySetZ::bernoulli(ratio(1, 5), 7, 100).unwrap();
        let b = BinarySetZ::bernoulli(ratio(1, 5), 7, 10).unwrap();
        for n in -100..=100 {
            assert_eq!(a.contains(n).unwrap(), b.contains(n).unwrap());
        }
        let density = a.members_in(-100, 100).unwrap().len() as f64 / 201.0;
        assert!((density - 0.2).abs() < 0.1, "{density}");
        assert!(BinarySetZ::bernoulli(ratio(3, 2), 1, 1).is_err());
        assert!(BinarySetZ::bernoulli(Rational::one(), 1, 30).unwrap().members_in(-30, 30).unwrap().len() == 61);
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose_mod3(7), (6, 1));
        assert_eq!(decompose_mod3(-4), (-3, -1));
        assert_eq!(decompose_mod3(0), (0, 0));
        for v in -100..=100 {
            let (b, s) = decompose_mod3(v);
            assert_eq!(b + s, v);
            assert_eq!(b.rem_euclid(3), 0);
            assert!((-1..=1).contains(&s));
            assert_eq!(decompose_mod3_rational(&int(v)).unwrap(), (int(b), s));
        }
        assert!(decompose_mod3_rational(&ratio(1, 2)).is_err());
    }

    #[test]
    fn perturbation_examples() {
        let base = rescale3(&antisymmetrize(&ab()));
        let zero_set = Arc::new(BinarySetZ::empty());
        let same = perturbation_qm(&f2(), zero_set, SetTwist::Xi, 1, &base, 3).unwrap();
        for g in f2().ball(3).unwrap() {
            assert_eq!(same.eval(&g), base.eval(&g));
        }
        // base 6 with s = -1: the word (ab)^2 a^-1 b... pick a word with
        // base value 6 and exp_sum_1 = -1 under xi({1}).
        let set = Arc::new(BinarySetZ::explicit([1]));
        let phi1 = perturbation_qm(&f2(), set, SetTwist::Xi, 1, &base, 3).unwrap();
        let g = f2().reduce(&[1, 2, 1, 2, -1, -1, -1]).unwrap();
        assert_eq!(base.eval(&g), int(6));
        assert_eq!(g.exp_sum(1), -1);
        assert_eq!(phi1.eval(&g), int(5));
        assert!(matches!(
            perturbation_qm(&f2(), Arc::new(BinarySetZ::empty()), SetTwist::Xi, 1, &ab(), 3),
            Err(Error::NotThreeDivisible { .. })
        ));
        assert!(perturbation_qm(&f2(), Arc::new(BinarySetZ::empty()), SetTwist::Xi, 3, &base, 3).is_err());
    }

    #[test]
    fn perturbation_defect_and_antisymmetry() {
        let base = rescale3(&ab());
        let set = Arc::new(generic_set(6).unwrap());
        let phi1 = perturbation_qm(&f2(), set.clone(), SetTwist::Xi, 1, &base, 3).unwrap();
        let d1 = defect(&f2(), &phi1, 4).unwrap().value;
        let d0 = defect(&f2(), &base, 4).unwrap().value;
        assert!(d1 <= d0 + int(3));
        for g in f2().ball(5).unwrap() {
            assert_eq!(phi1.eval(&g.inv()), -phi1.eval(&g));
            let (b, s) = decompose_mod3_rational(&phi1.eval(&g)).unwrap();
            assert_eq!(b, base.eval(&g));
            assert_eq!(s, xi(&set, g.exp_sum(1)).unwrap());
        }
    }

    #[test]
    fn shift_witness_examples() {
        let a = generic_set(3).unwrap();
        let f = [-1, 0, 1];
        let k = find_shift_witness(&a, &BinarySetZ::explicit([0]), &f).unwrap();
        assert_eq!(
            [a.contains(k - 1).unwrap(), a.contains(k).unwrap(), a.contains(k + 1).unwrap()],
            [false, true, false]
        );
        // brute-force smallest
        let brute = (0..).find(|&k| {
            [a.contains(k - 1).unwrap(), a.contains(k).unwrap(), a.contains(k + 1).unwrap()] == [false, true, false]
        });
        assert_eq!(Some(k), brute);
        assert_eq!(find_shift_witness(&a, &a, &f).unwrap(), 0);
        let b = generic_set(4).unwrap();
        let window = [0, 1, 2, 3];
        let k = find_shift_witness(&b, &BinarySetZ::empty(), &window).unwrap();
        assert!(window.iter().all(|n| !b.contains(n + k).unwrap()));
        let brute = (0..).find(|&k| window.iter().all(|n| !b.contains(n + k).unwrap()));
        assert_eq!(Some(k), brute);
    }

    #[test]
    fn shift_witness_reports_small_k() {
        // K = 1 gives x = 01: the pattern 1 1 never occurs.
        let a = generic_set(1).unwrap();
        let target = BinarySetZ::explicit([0, 1]);
        assert!(matches!(find_shift_witness(&a, &target, &[0, 1]), Err(Error::NotFound(_))));
    }

    #[test]
    fn orbit_limits() {
        let radius = 3;
        let a = generic_set(2 * radius as usize + 1).unwrap();
        for target in [BinarySetZ::empty(), BinarySetZ::explicit([0, 2]), BinarySetZ::evens(radius)] {
            let wit = so_orbit_limit(&a, &target, radius).unwrap();
            assert!(wit.k > radius);
            assert_eq!(wit.values, eta_window(&target, radius).unwrap());
            // mirrored translate: (-k).xi(A) = -eta(-B) on the window
            let neg_b = BinarySetZ::explicit(target.members_in(-radius, radius).unwrap().into_iter().map(|n| -n));
            let mirrored: Vec<i64> = eta_window(&neg_b, radius).unwrap().into_iter().map(|v| -v).collect();
            assert_eq!(so_window(&a, -wit.k, radius).unwrap(), mirrored);
        }
        let empty = so_orbit_limit(&a, &BinarySetZ::empty(), radius).unwrap();
        assert!(empty.values.iter().all(|&v| v == 0));
        assert!(so_orbit_limit(&a, &BinarySetZ::empty(), 0).is_err());
    }

    #[test]
    fn tv_examples() {
        let mut h = EmpiricalMeasure::new(1);
        h.record(vec![int(0)]);
        h.record(vec![int(1)]);
        assert_eq!(tv_distance(&h, &h).unwrap(), Rational::zero());
        let mut g = EmpiricalMeasure::new(1);
        g.record(vec![int(0)]);
        g.record(vec![int(0)]);
        assert_eq!(tv_distance(&h, &g).unwrap(), ratio(1, 2));
        let mut d = EmpiricalMeasure::new(1);
        d.record(vec![int(5)]);
        assert_eq!(tv_distance(&g, &d).unwrap(), Rational::one());
        assert!(tv_distance(&g, &EmpiricalMeasure::new(2)).is_err());
    }

    #[test]
    fn hull_walk_fixed_point_and_spread() {
        let p = StepDistribution::uniform(&f2());
        let h = Quasimorphism::homomorphism(vec![int(1), int(2)]);
        let hist = hull_walk(&h, &p, 500, 2, 1).unwrap();
        assert_eq!(hist.num_keys(), 1);
        assert_eq!(hist.total(), 500);
        let one = hull_walk(&ab(), &p, 1, 1, 1).unwrap();
        assert_eq!(one.total(), 1);
        let spread = hull_walk(&ab(), &p, 100, 1, 1).unwrap();
        assert!(spread.num_keys() >= 2);
        assert_eq!(hull_walk(&ab(), &p, 300, 2, 4).unwrap(), hull_walk(&ab(), &p, 300, 2, 4).unwrap());
        assert!(hull_walk(&ab(), &p, 0, 1, 1).is_err());
    }

    #[test]
    fn quantized_keys_for_rational_values() {
        let p = StepDistribution::uniform(&f2());
        let f = Quasimorphism::homomorphism(vec![ratio(1, 3), int(0)]);
        let hist = hull_walk(&f, &p, 10, 1, 2).unwrap();
        let key = hist.counts().keys().next().unwrap();
        assert_eq!(key[1], quantize(&ratio(1, 3), KEY_QUANTUM_BITS));
    }
}
