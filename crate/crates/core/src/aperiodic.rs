//! Cut-and-project sets in the reals and their twists in `F_r x R`.
//!
//! The model set is `P = {m + n sqrt(d) : m - n sqrt(d) in [lo, hi]}`,
//! possibly translated. Every coordinate lives in `Q(sqrt d)` and every
//! membership test is an exact sign computation.
//!
//! A quasimorphism `f` twists `P` into `P(f) = {(g, t) : f(g) + t in P}`.
//! The skew-product map sends a hull point `y` and a translate `P'` to the
//! patch `{(g, t) : y(g) + t in P'}`; under `(g, t)` the pair moves to
//! `(g.y, P' - t - y(g))`, and the patch is right-translated by `(g, t)^-1`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::qm::{defect_set, Fingerprint, Quasimorphism};
use crate::rational::{int, parse_rational, to_pq, Rational};
use crate::rng::SplitMix64;
use crate::words::{GroupSpec, ReducedWord};

/// `a + b sqrt(d)` with rational `a`, `b` and a fixed non-square `d > 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadExt {
    a: Rational,
    b: Rational,
    d: i64,
}

fn is_square(d: i64) -> bool {
    if d < 0 {
        return false;
    }
    let r = (d as f64).sqrt().round() as i64;
    (r - 1..=r + 1).any(|s| s >= 0 && s * s == d)
}

impl QuadExt {
    pub fn new(a: Rational, b: Rational, d: i64) -> Self {
        assert!(d > 0 && !is_square(d), "d = {d} must be a positive non-square");
        Self { a, b, d }
    }

    pub fn checked(a: Rational, b: Rational, d: i64) -> Result<Self> {
        if d <= 0 || is_square(d) {
            return Err(Error::InvalidArgument(format!("d = {d} must be a positive non-square")));
        }
        Ok(Self { a, b, d })
    }

    pub fn integer(m: i64, n: i64, d: i64) -> Self {
        Self::new(int(m), int(n), d)
    }

    pub fn rational(a: Rational, d: i64) -> Self {
        Self::new(a, Rational::zero(), d)
    }

    pub fn zero(d: i64) -> Self {
        Self::integer(0, 0, d)
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    /// Galois conjugate `a - b sqrt(d)`.
    pub fn star(&self) -> Self {
        Self { a: self.a.clone(), b: -self.b.clone(), d: self.d }
    }

    /// True if `a` and `b` are integers.
    pub fn is_integral(&self) -> bool {
        self.a.is_integer() && self.b.is_integer()
    }

    /// Exact sign via `a^2 - d b^2` and the signs of `a`, `b`.
    pub fn signum(&self) -> i32 {
        let sa = sign(&self.a);
        let sb = sign(&self.b);
        if sa == 0 || sb == 0 || sa == sb {
            return if sa != 0 { sa } else { sb };
        }
        let norm = &self.a * &self.a - &self.b * &self.b * int(self.d);
        match sign(&norm) {
            1 => sa,
            -1 => sb,
            _ => unreachable!("d is not a square"),
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN) + self.b.to_f64().unwrap_or(f64::NAN) * (self.d as f64).sqrt()
    }

    /// Parses `a`, `a/b` or `a/b+c/e*sqrt(d)` (the [`Display`](fmt::Display) form).
    pub fn parse(s: &str, d: i64) -> Result<Self> {
        let s = s.trim();
        if let Some(body) = s.strip_suffix(')') {
            let (head, tail_d) = body
                .rsplit_once("*sqrt(")
                .ok_or_else(|| Error::Parse(format!("bad quadratic number `{s}`")))?;
            let parsed_d: i64 = tail_d.parse().map_err(|_| Error::Parse(format!("bad radicand in `{s}`")))?;
            if parsed_d != d {
                return Err(Error::Parse(format!("radicand {parsed_d} in `{s}`, expected {d}")));
            }
            // split at the '+' that separates the two coefficients
            let idx = head[1..]
                .find('+')
                .map(|i| i + 1)
                .ok_or_else(|| Error::Parse(format!("bad quadratic number `{s}`")))?;
            let a = parse_rational(&head[..idx])?;
            let b = parse_rational(&head[idx + 1..])?;
            return Self::checked(a, b, d);
        }
        Self::checked(parse_rational(s)?, Rational::zero(), d)
    }

    fn same_field(&self, other: &Self) {
        assert_eq!(self.d, other.d, "mixed quadratic fields");
    }
}

fn sign(r: &Rational) -> i32 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}*sqrt({})", to_pq(&self.a), to_pq(&self.b), self.d)
    }
}

impl Ord for QuadExt {
    fn cmp(&self, other: &Self) -> Ordering {
        self.same_field(other);
        (self - other).signum().cmp(&0)
    }
}

impl PartialOrd for QuadExt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add<&QuadExt> for &QuadExt {
    type Output = QuadExt;
    fn add(self, o: &QuadExt) -> QuadExt {
        self.same_field(o);
        QuadExt { a: &self.a + &o.a, b: &self.b + &o.b, d: self.d }
    }
}

impl Sub<&QuadExt> for &QuadExt {
    type Output = QuadExt;
    fn sub(self, o: &QuadExt) -> QuadExt {
        self.same_field(o);
        QuadExt { a: &self.a - &o.a, b: &self.b - &o.b, d: self.d }
    }
}

impl Mul<&QuadExt> for &QuadExt {
    type Output = QuadExt;
    fn mul(self, o: &QuadExt) -> QuadExt {
        self.same_field(o);
        QuadExt {
            a: &self.a * &o.a + &self.b * &o.b * int(self.d),
            b: &self.a * &o.b + &self.b * &o.a,
            d: self.d,
        }
    }
}

impl Neg for QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        QuadExt { a: -self.a, b: -self.b, d: self.d }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<QuadExt> for QuadExt {
            type Output = QuadExt;
            fn $m(self, o: QuadExt) -> QuadExt {
                (&self).$m(&o)
            }
        }
        impl $tr<&QuadExt> for QuadExt {
            type Output = QuadExt;
            fn $m(self, o: &QuadExt) -> QuadExt {
                (&self).$m(o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// `offset + {m + n sqrt(d) : lo <= m - n sqrt(d) <= hi}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSet {
    d: i64,
    lo: QuadExt,
    hi: QuadExt,
    offset: QuadExt,
}

impl ModelSet {
    pub fn new(d: i64, lo: QuadExt, hi: QuadExt) -> Result<Self> {
        if lo.d() != d || hi.d() != d {
            return Err(Error::InvalidArgument("window endpoints live in a different field".into()));
        }
        QuadExt::checked(Rational::zero(), Rational::zero(), d)?;
        if lo > hi {
            return Err(Error::InvalidArgument(format!("empty window [{lo}, {hi}]")));
        }
        Ok(Self { d, lo, hi, offset: QuadExt::zero(d) })
    }

    /// The default set: `d = 2`, window `[-1, 1]`.
    pub fn standard() -> Self {
        Self::with_integer_window(2, -1, 1).expect("valid")
    }

    pub fn with_integer_window(d: i64, lo: i64, hi: i64) -> Result<Self> {
        let q = |v| QuadExt::checked(int(v), Rational::zero(), d);
        Self::new(d, q(lo)?, q(hi)?)
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn window(&self) -> (&QuadExt, &QuadExt) {
        (&self.lo, &self.hi)
    }

    pub fn offset(&self) -> &QuadExt {
        &self.offset
    }

    /// `self + shift`.
    pub fn translate(&self, shift: &QuadExt) -> ModelSet {
        ModelSet { offset: &self.offset + shift, ..self.clone() }
    }

    pub fn has_symmetric_window(&self) -> bool {
        self.lo == -self.hi.clone() && self.offset.signum() == 0
    }

    pub fn contains(&self, x: &QuadExt) -> bool {
        let y = x - &self.offset;
        y.is_integral() && {
            let s = y.star();
            self.lo <= s && s <= self.hi
        }
    }

    /// All points in `[-R, R]`, sorted.
    pub fn enumerate(&self, radius: &Rational) -> Vec<QuadExt> {
        let r = radius.to_f64().unwrap_or(0.0);
        let sd = (self.d as f64).sqrt();
        let (lo, hi, off) = (self.lo.to_f64(), self.hi.to_f64(), self.offset.to_f64());
        let (ylo, yhi) = (-r - off, r - off);
        // y = m + n sqrt d, y* = m - n sqrt d in [lo, hi]
        let n_min = ((ylo - hi) / (2.0 * sd)).floor() as i64 - 1;
        let n_max = ((yhi - lo) / (2.0 * sd)).ceil() as i64 + 1;
        let rq = QuadExt::rational(radius.clone(), self.d);
        let neg_rq = -rq.clone();
        let mut out = Vec::new();
        for n in n_min..=n_max {
            let m_min = (lo + n as f64 * sd).floor() as i64 - 1;
            let m_max = (hi + n as f64 * sd).ceil() as i64 + 1;
            for m in m_min..=m_max {
                let x = &QuadExt::integer(m, n, self.d) + &self.offset;
                if self.contains(&x) && neg_rq <= x && x <= rq {
                    out.push(x);
                }
            }
        }
        out.sort();
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapStats {
    pub min_gap: QuadExt,
    pub max_gap: QuadExt,
}

/// Smallest and largest difference of consecutive points.
pub fn delone_stats(points: &[QuadExt]) -> Result<GapStats> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: points.len() });
    }
    let gaps: Vec<QuadExt> = points.windows(2).map(|w| &w[1] - &w[0]).collect();
    Ok(GapStats {
        min_gap: gaps.iter().min().cloned().expect("non-empty"),
        max_gap: gaps.iter().max().cloned().expect("non-empty"),
    })
}

/// Points of the model set with window `(W + W) - W` inside `[-C, C]`.
pub fn covering_set(p: &ModelSet, c: &Rational) -> Result<Vec<QuadExt>> {
    let two = QuadExt::integer(2, 0, p.d);
    let lo = &(&two * &p.lo) - &p.hi;
    let hi = &(&two * &p.hi) - &p.lo;
    Ok(ModelSet::new(p.d, lo, hi)?.enumerate(c))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxReport {
    pub covering: Vec<QuadExt>,
    pub pairs_checked: usize,
    pub ok: bool,
    /// Pairs `(p, q)` whose sum is not in `P + F`.
    pub witnesses: Vec<(QuadExt, QuadExt)>,
}

const MAX_WITNESSES: usize = 32;

/// Checks `p + q in P + F` for all `p, q in P ∩ [-R/2, R/2]`.
pub fn approx_subgroup_check(p: &ModelSet, radius: &Rational, c: &Rational) -> Result<ApproxReport> {
    let covering = covering_set(p, c)?;
    let half = radius / int(2);
    let points = p.enumerate(&half);
    let mut witnesses = Vec::new();
    let mut failures = 0usize;
    let mut pairs = 0usize;
    for (i, x) in points.iter().enumerate() {
        for y in &points[i..] {
            pairs += 1;
            let s = x + y;
            if !covering.iter().any(|f| p.contains(&(&s - f))) {
                failures += 1;
                if witnesses.len() < MAX_WITNESSES {
                    witnesses.push((x.clone(), y.clone()));
                }
            }
        }
    }
    Ok(ApproxReport { covering, pairs_checked: pairs, ok: failures == 0, witnesses })
}

/// `P(f) = {(g, t) : f(g) + t in P}`.
#[derive(Clone, Debug)]
pub struct TwistedSet {
    pub phi: Quasimorphism,
    pub model: ModelSet,
}

impl TwistedSet {
    pub fn new(phi: Quasimorphism, model: ModelSet) -> Self {
        Self { phi, model }
    }

    fn phi_at(&self, g: &ReducedWord) -> QuadExt {
        QuadExt::rational(self.phi.eval(g), self.model.d)
    }

    /// `(P - f(g)) ∩ [-R, R]`.
    pub fn fiber(&self, g: &ReducedWord, radius: &Rational) -> Vec<QuadExt> {
        self.model.translate(&-self.phi_at(g)).enumerate(radius)
    }
}

pub fn twisted_member(t: &TwistedSet, g: &ReducedWord, x: &QuadExt) -> bool {
    t.model.contains(&(&t.phi_at(g) + x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistApproxReport {
    pub defect_set: Vec<Rational>,
    pub covering: Vec<QuadExt>,
    pub contains_identity: bool,
    pub symmetric: bool,
    pub products_checked: usize,
    pub ok: bool,
    /// `(g1, t1, g2, t2)` whose product is not covered.
    pub witnesses: Vec<(ReducedWord, QuadExt, ReducedWord, QuadExt)>,
}

/// Checks `P(f) P(f) ⊂ P(f) ({e} x (F + D_L(f)))` on all products of fiber
/// points over `B_{L/2}` with coordinates in `[-R, R]`, plus symmetry and
/// the identity.
pub fn twist_approx_check(
    spec: &GroupSpec,
    t: &TwistedSet,
    radius_words: usize,
    radius: &Rational,
    c: &Rational,
) -> Result<TwistApproxReport> {
    let d = t.model.d;
    let defects: Vec<Rational> = defect_set(spec, &t.phi, radius_words)?.into_iter().collect();
    let covering = covering_set(&t.model, c)?;
    let half_ball = spec.ball(radius_words / 2)?;
    let fibers: Vec<Vec<QuadExt>> = half_ball.iter().map(|g| t.fiber(g, radius)).collect();
    let phis: Vec<Rational> = half_ball.iter().map(|g| t.phi.eval(g)).collect();

    let contains_identity = twisted_member(t, &ReducedWord::identity(), &QuadExt::zero(d));
    let symmetric = half_ball
        .iter()
        .zip(&fibers)
        .all(|(g, fib)| fib.iter().all(|x| twisted_member(t, &g.inv(), &-x.clone())));

    let mut covered: HashMap<QuadExt, bool> = HashMap::new();
    let mut is_covered = |y: QuadExt| -> bool {
        *covered
            .entry(y)
            .or_insert_with_key(|y| covering.iter().any(|f| t.model.contains(&(y - f))))
    };

    let mut witnesses = Vec::new();
    let mut failures = 0usize;
    let mut checked = 0usize;
    for (i, g1) in half_ball.iter().enumerate() {
        for (j, g2) in half_ball.iter().enumerate() {
            let prod = g1.mul(g2);
            let phi_prod = t.phi.eval(&prod);
            let natural = &phi_prod - &phis[i] - &phis[j];
            let mut order: Vec<&Rational> = vec![&natural];
            order.extend(defects.iter().filter(|x| **x != natural));
            for t1 in &fibers[i] {
                for t2 in &fibers[j] {
                    checked += 1;
                    let x = &(t1 + t2) + &QuadExt::rational(phi_prod.clone(), d);
                    let ok = order
                        .iter()
                        .any(|delta| is_covered(&x - &QuadExt::rational((*delta).clone(), d)));
                    if !ok {
                        failures += 1;
                        if witnesses.len() < MAX_WITNESSES {
                            witnesses.push((g1.clone(), t1.clone(), g2.clone(), t2.clone()));
                        }
                    }
                }
            }
        }
    }
    Ok(TwistApproxReport {
        defect_set: defects,
        covering,
        contains_identity,
        symmetric,
        products_checked: checked,
        ok: failures == 0 && contains_identity && symmetric,
        witnesses,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiberStats {
    pub word: ReducedWord,
    pub stats: GapStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistDeloneReport {
    pub base: GapStats,
    pub fibers: Vec<FiberStats>,
    /// Every fiber has the gap statistics of `P` itself.
    pub identical: bool,
}

/// Gap statistics of the fibers `(P - f(g)) ∩ [-R, R]` over `B_L`.
pub fn twist_delone_check(spec: &GroupSpec, t: &TwistedSet, radius_words: usize, radius: &Rational) -> Result<TwistDeloneReport> {
    let base = delone_stats(&t.model.enumerate(radius))?;
    let fibers = spec
        .ball(radius_words)?
        .into_iter()
        .map(|g| Ok(FiberStats { stats: delone_stats(&t.fiber(&g, radius))?, word: g }))
        .collect::<Result<Vec<_>>>()?;
    let identical = fibers.iter().all(|f| f.stats == base);
    Ok(TwistDeloneReport { base, fibers, identical })
}

pub type Patch = Vec<(ReducedWord, QuadExt)>;

/// `{(g, t) : g in B_Lw, t in (P' - y(g)) ∩ [-Rt, Rt]}`, sorted.
pub fn skew_pi(fp: &Fingerprint, translate: &ModelSet, radius_words: usize, radius: &Rational) -> Result<Patch> {
    if fp.radius() < radius_words {
        return Err(Error::RadiusMismatch { needed: radius_words, have: fp.radius() });
    }
    let d = translate.d;
    let mut patch = Vec::new();
    for (g, v) in fp.iter().take_while(|(g, _)| g.len() <= radius_words) {
        for x in translate.translate(&-QuadExt::rational(v.clone(), d)).enumerate(radius) {
            patch.push((g.clone(), x));
        }
    }
    Ok(patch)
}

/// `(g, t).(y, P') = (g.y, P' - t - y(g))`; the fingerprint shrinks by `|g|`.
pub fn skew_act(fp: &Fingerprint, translate: &ModelSet, g: &ReducedWord, t: &QuadExt) -> Result<(Fingerprint, ModelSet)> {
    let yg = fp.get(g).ok_or(Error::RadiusMismatch { needed: g.len(), have: fp.radius() })?;
    let shift = -(t + &QuadExt::rational(yg.clone(), translate.d));
    Ok((fp.act(g)?, translate.translate(&shift)))
}

/// Right translate of a patch by `(g, t)^-1`, cut to `B_Lw x [-Rt, Rt]`.
pub fn translate_patch(patch: &Patch, g: &ReducedWord, t: &QuadExt, radius_words: usize, radius: &Rational) -> Patch {
    let d = t.d();
    let r = QuadExt::rational(radius.clone(), d);
    let neg_r = -r.clone();
    let g_inv = g.inv();
    let mut out: Patch = patch
        .iter()
        .map(|(h, x)| (h.mul(&g_inv), x - t))
        .filter(|(h, x)| h.len() <= radius_words && &neg_r <= x && x <= &r)
        .collect();
    out.sort();
    out
}

/// Compares the patch of `(g, t).(y, P')` with the translate of the patch of
/// `(y, P')` on `B_Lw x [-Rt, Rt]`. Needs `fp` on `B_{Lw + |g|}`.
pub fn skew_equivariance(
    fp: &Fingerprint,
    translate: &ModelSet,
    g: &ReducedWord,
    t: &QuadExt,
    radius_words: usize,
    radius: &Rational,
) -> Result<bool> {
    let needed = radius_words + g.len();
    if fp.radius() < needed {
        return Err(Error::RadiusMismatch { needed, have: fp.radius() });
    }
    let (moved_fp, moved_set) = skew_act(fp, translate, g, t)?;
    let mut lhs = skew_pi(&moved_fp, &moved_set, radius_words, radius)?;
    lhs.sort();
    let wide = radius + t.abs().a().abs() + t.abs().b().abs() * int(isqrt_ceil(t.d()));
    let source = skew_pi(fp, translate, needed, &wide)?;
    let rhs = translate_patch(&source, g, t, radius_words, radius);
    Ok(lhs == rhs)
}

fn isqrt_ceil(d: i64) -> i64 {
    let mut r = (d as f64).sqrt() as i64;
    while r * r < d {
        r += 1;
    }
    r
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkewSampleReport {
    pub samples: usize,
    /// `(g, t)` pairs whose patches disagree.
    pub failures: Vec<(ReducedWord, QuadExt)>,
}

/// Seeded equivariance comparisons: `g` uniform on `B_{|g|max}` and `t` uniform
/// among the fiber coordinates `(P' - y(g)) ∩ [-Rt, Rt]`.
pub fn skew_sample_check(
    fp: &Fingerprint,
    translate: &ModelSet,
    max_shift: usize,
    radius_words: usize,
    radius: &Rational,
    samples: usize,
    seed: u64,
) -> Result<SkewSampleReport> {
    let shifts = fp.spec().ball(max_shift)?;
    let mut rng = SplitMix64::new(seed);
    let mut failures = Vec::new();
    for _ in 0..samples {
        let g = &shifts[rng.below(shifts.len() as u64) as usize];
        let yg = QuadExt::rational(fp.get(g).cloned().unwrap_or_default(), translate.d);
        let fiber = translate.translate(&-yg).enumerate(radius);
        if fiber.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, found: 0 });
        }
        let t = &fiber[rng.below(fiber.len() as u64) as usize];
        if !skew_equivariance(fp, translate, g, t, radius_words, radius)? {
            failures.push((g.clone(), t.clone()));
        }
    }
    Ok(SkewSampleReport { samples, failures })
}

/// First word, in canonical order, where the two fingerprints differ.
pub fn separation_check(fp1: &Fingerprint, fp2: &Fingerprint) -> Result<Option<ReducedWord>> {
    if fp1.radius() != fp2.radius() || fp1.spec() != fp2.spec() {
        return Err(Error::RadiusMismatch { needed: fp1.radius(), have: fp2.radius() });
    }
    Ok(fp1.iter().zip(fp2.values()).find(|((_, a), b)| a != b).map(|((g, _), _)| g.clone()))
}

/// Integer points of `P` as a set, for quick membership in tests and reports.
pub fn point_set(points: &[QuadExt]) -> BTreeSet<QuadExt> {
    points.iter().cloned().collect()
}
