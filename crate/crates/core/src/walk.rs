//! Random walks on `F_r`: exact convolution powers, seeded path sampling,
//! drift, the averaging operators `pi_n` and Cesàro harmonization.
//!
//! `pi_n(f)(g) = sum_h p^{*n}(h) (f(hg) - f(h))` and the Cesàro average
//! `psi_N = (1/N) sum_{n=1..N} pi_n(f)`. For antisymmetric `f` and symmetric
//! `p` one has `p * pi_n(f) = pi_{n+1}(f)`, so the harmonicity residual of
//! `psi_N` is `max |pi_{N+1} - pi_1| / N` on the window.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qm::{Fingerprint, Quasimorphism};
use crate::rational::{ratio, Rational};
use crate::rng::{sub_seed, SplitMix64};
use crate::words::{GroupSpec, ReducedWord};

/// Default cap on the support of an exact convolution power.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

/// Number of sub-streams a Monte Carlo estimate is split into. Fixed so the
/// result does not depend on the thread count.
pub const MC_WORKERS: u64 = 8;

/// Finitely supported probability measure on `F_r`, atoms in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure {
    atoms: Vec<(ReducedWord, Rational)>,
}

impl Measure {
    pub fn dirac(g: ReducedWord) -> Self {
        Self { atoms: vec![(g, Rational::one())] }
    }

    fn from_map(map: HashMap<ReducedWord, Rational>) -> Self {
        let mut atoms: Vec<_> = map.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        Self { atoms }
    }

    pub fn atoms(&self) -> &[(ReducedWord, Rational)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass(&self) -> Rational {
        self.atoms.iter().fold(Rational::zero(), |acc, (_, p)| acc + p)
    }

    pub fn get(&self, g: &ReducedWord) -> Rational {
        self.atoms
            .binary_search_by(|(w, _)| w.cmp(g))
            .map(|i| self.atoms[i].1.clone())
            .unwrap_or_else(|_| Rational::zero())
    }

    /// `self * step`: the law of `x s` with `x ~ self`, `s ~ step`.
    pub fn convolve(&self, step: &Measure, cap: usize) -> Result<Measure> {
        let mut map: HashMap<ReducedWord, Rational> = HashMap::with_capacity(self.len() * 2);
        for (x, px) in &self.atoms {
            for (s, ps) in &step.atoms {
                *map.entry(x.mul(s)).or_insert_with(Rational::zero) += px * ps;
                if map.len() > cap {
                    return Err(Error::SupportCapExceeded { size: map.len(), cap });
                }
            }
        }
        Ok(Self::from_map(map))
    }

    /// `sum_g mu(g) f(g)`, exact. Integer values are accumulated over the
    /// common denominator of the weights.
    pub fn expectation(&self, f: impl Fn(&ReducedWord) -> Rational + Sync) -> Rational {
        let denom = self.atoms.iter().fold(BigInt::one(), |acc, (_, p)| acc.lcm(p.denom()));
        let weights: Vec<BigInt> = self
            .atoms
            .iter()
            .map(|(_, p)| p.numer() * (&denom / p.denom()))
            .collect();
        let (int_part, rat_part) = self
            .atoms
            .par_iter()
            .zip(weights.par_iter())
            .map(|((g, _), w)| {
                let v = f(g);
                if v.is_integer() {
                    (w * v.to_integer(), Rational::zero())
                } else {
                    (BigInt::zero(), v * Rational::from_integer(w.clone()))
                }
            })
            .reduce(|| (BigInt::zero(), Rational::zero()), |a, b| (a.0 + b.0, a.1 + b.1));
        (Rational::from_integer(int_part) + rat_part) / Rational::from_integer(denom)
    }
}

/// Symmetric, finitely supported step distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDistribution {
    spec: GroupSpec,
    measure: Measure,
}

impl StepDistribution {
    /// Normalized counting measure on the generators and their inverses.
    pub fn uniform(spec: &GroupSpec) -> Self {
        let letters = spec.letters();
        let p = ratio(1, letters.len() as i64);
        let mut atoms: Vec<_> = letters.into_iter().map(|l| (ReducedWord::letter(l), p.clone())).collect();
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        Self { spec: *spec, measure: Measure { atoms } }
    }

    /// Validates positivity, total mass one and symmetry; merges repeated words.
    pub fn new(spec: &GroupSpec, atoms: Vec<(ReducedWord, Rational)>) -> Result<Self> {
        let mut map: HashMap<ReducedWord, Rational> = HashMap::new();
        for (g, p) in atoms {
            for &l in g.letters() {
                spec.check_letter(l)?;
            }
            if !p.is_positive() {
                return Err(Error::InvalidMeasure(format!("non-positive weight at {g}")));
            }
            *map.entry(g).or_insert_with(Rational::zero) += p;
        }
        let measure = Measure::from_map(map);
        if measure.mass() != Rational::one() {
            return Err(Error::InvalidMeasure(format!("total mass {} is not 1", measure.mass())));
        }
        for (g, p) in measure.atoms() {
            if &measure.get(&g.inv()) != p {
                return Err(Error::InvalidMeasure(format!("not symmetric at {g}")));
            }
        }
        Ok(Self { spec: *spec, measure })
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    /// Longest word in the support.
    pub fn max_step(&self) -> usize {
        self.measure.atoms.iter().map(|(g, _)| g.len()).max().unwrap_or(0)
    }

    /// True if every generator is reachable as a product of support words
    /// of length at most `depth`.
    pub fn generates_within(&self, depth: usize) -> bool {
        let mut reached: std::collections::HashSet<ReducedWord> = [ReducedWord::identity()].into();
        let mut frontier = reached.clone();
        for _ in 0..depth {
            let mut next = std::collections::HashSet::new();
            for x in &frontier {
                for (s, _) in self.measure.atoms() {
                    let y = x.mul(s);
                    if reached.insert(y.clone()) {
                        next.insert(y);
                    }
                }
            }
            frontier = next;
        }
        self.spec.letters().into_iter().all(|l| reached.contains(&ReducedWord::letter(l)))
    }

    pub fn sampler(&self) -> StepSampler {
        StepSampler::new(&self.measure)
    }
}

/// Inversion sampler: a 64-bit draw `u` selects the first atom whose
/// cumulative probability `c` satisfies `u < c * 2^64`.
#[derive(Clone, Debug)]
pub struct StepSampler {
    words: Vec<ReducedWord>,
    thresholds: Vec<u128>,
}

impl StepSampler {
    pub fn new(measure: &Measure) -> Self {
        let two64: BigInt = BigInt::one() << 64usize;
        let mut cum = Rational::zero();
        let mut words = Vec::with_capacity(measure.len());
        let mut thresholds = Vec::with_capacity(measure.len());
        for (g, p) in measure.atoms() {
            cum += p;
            let scaled = &cum * Rational::from_integer(two64.clone());
            words.push(g.clone());
            thresholds.push(scaled.ceil().to_integer().to_u128().expect("cumulative mass <= 1"));
        }
        Self { words, thresholds }
    }

    pub fn pick(&self, u: u64) -> &ReducedWord {
        let u = u as u128;
        let i = self.thresholds.partition_point(|&t| t <= u);
        &self.words[i.min(self.words.len() - 1)]
    }

    pub fn sample(&self, rng: &mut SplitMix64) -> &ReducedWord {
        self.pick(rng.next_u64())
    }
}

/// `p^{*n}`, exact.
pub fn conv_power(p: &StepDistribution, n: usize, cap: usize) -> Result<Measure> {
    let mut mu = Measure::dirac(ReducedWord::identity());
    for _ in 0..n {
        mu = mu.convolve(p.measure(), cap)?;
    }
    Ok(mu)
}

/// Iterator over `p^{*1}, p^{*2}, ...`.
pub struct ConvolutionPowers<'a> {
    step: &'a StepDistribution,
    current: Measure,
    cap: usize,
}

impl<'a> ConvolutionPowers<'a> {
    pub fn new(step: &'a StepDistribution, cap: usize) -> Self {
        Self { step, current: Measure::dirac(ReducedWord::identity()), cap }
    }
}

impl Iterator for ConvolutionPowers<'_> {
    type Item = Result<Measure>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.current.convolve(self.step.measure(), self.cap) {
            Ok(next) => {
                self.current = next.clone();
                Some(Ok(next))
            }
            Err(e) => Some(Err(e)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub seed: u64,
    /// Increments `w_1, ..., w_n`.
    pub steps: Vec<ReducedWord>,
    /// Partial products `Z_0 = e, Z_k = Z_{k-1} w_k`.
    pub positions: Vec<ReducedWord>,
}

impl PathSample {
    pub fn endpoint(&self) -> &ReducedWord {
        self.positions.last().expect("Z_0 is always present")
    }
}

pub fn sample_path(p: &StepDistribution, n: usize, seed: u64) -> PathSample {
    let sampler = p.sampler();
    let mut rng = SplitMix64::new(seed);
    let mut steps = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n + 1);
    positions.push(ReducedWord::identity());
    for _ in 0..n {
        let w = sampler.sample(&mut rng).clone();
        let z = positions.last().unwrap().mul(&w);
        steps.push(w);
        positions.push(z);
    }
    PathSample { seed, steps, positions }
}

/// `d_n = sum_g p^{*n}(g) f(g)`.
pub fn drift(f: &Quasimorphism, p: &StepDistribution, n: usize, cap: usize) -> Result<Rational> {
    Ok(conv_power(p, n, cap)?.expectation(|g| f.eval(g)))
}

/// `(n, d_n)` for `n = 1..=n_max`.
pub fn drift_table(f: &Quasimorphism, p: &StepDistribution, n_max: usize, cap: usize) -> Result<Vec<(usize, Rational)>> {
    ConvolutionPowers::new(p, cap)
        .take(n_max)
        .enumerate()
        .map(|(i, mu)| Ok((i + 1, mu?.expectation(|g| f.eval(g)))))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AvgMode {
    Exact { cap: usize },
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum AvgValue {
    Exact(Rational),
    Estimate { mean: f64, std_err: f64, samples: u64 },
}

impl AvgValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            AvgValue::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            AvgValue::Estimate { mean, .. } => *mean,
        }
    }
}

/// `pi_n(f)(g)` given `p^{*n}`.
pub fn pi_with_measure(f: &Quasimorphism, mu: &Measure, g: &ReducedWord) -> Rational {
    mu.expectation(|h| f.eval(&h.mul(g)) - f.eval(h))
}

/// `pi_n(f)(g)`, exactly or by Monte Carlo with a standard error.
pub fn avg_pi(f: &Quasimorphism, p: &StepDistribution, n: usize, g: &ReducedWord, mode: AvgMode) -> Result<AvgValue> {
    match mode {
        AvgMode::Exact { cap } => {
            let mu = conv_power(p, n, cap)?;
            Ok(AvgValue::Exact(pi_with_measure(f, &mu, g)))
        }
        AvgMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("Monte Carlo mode needs at least one sample".into()));
            }
            let sampler = p.sampler();
            let chunks: Vec<(u64, f64, f64)> = (0..MC_WORKERS)
                .into_par_iter()
                .map(|i| {
                    let count = samples / MC_WORKERS + u64::from(i < samples % MC_WORKERS);
                    let mut rng = SplitMix64::new(sub_seed(seed, i));
                    let (mut mean, mut m2) = (0.0f64, 0.0f64);
                    for k in 0..count {
                        let mut z = ReducedWord::identity();
                        for _ in 0..n {
                            z = z.mul(sampler.sample(&mut rng));
                        }
                        let x = (f.eval(&z.mul(g)) - f.eval(&z)).to_f64().unwrap_or(f64::NAN);
                        let delta = x - mean;
                        mean += delta / (k + 1) as f64;
                        m2 += delta * (x - mean);
                    }
                    (count, mean, m2)
                })
                .collect();
            // Chan's parallel merge, in worker order.
            let (mut count, mut mean, mut m2) = (0u64, 0.0f64, 0.0f64);
            for (c, m, s) in chunks {
                if c == 0 {
                    continue;
                }
                let total = count + c;
                let delta = m - mean;
                mean += delta * c as f64 / total as f64;
                m2 += s + delta * delta * count as f64 * c as f64 / total as f64;
                count = total;
            }
            let var = if count > 1 { m2 / (count - 1) as f64 } else { 0.0 };
            Ok(AvgValue::Estimate { mean, std_err: (var / count as f64).sqrt(), samples: count })
        }
    }
}

/// Cesàro averages `psi_N` on `B_L` for each `N` in `grid` (ascending).
pub fn cesaro_series(
    f: &Quasimorphism,
    p: &StepDistribution,
    grid: &[usize],
    radius: usize,
    cap: usize,
) -> Result<Vec<(usize, Fingerprint)>> {
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] == 0 {
        return Err(Error::InvalidArgument("Cesàro grid must be positive and strictly increasing".into()));
    }
    let spec = p.spec();
    let words = spec.ball(radius)?;
    let mut acc: Vec<Rational> = vec![Rational::zero(); words.len()];
    let mut out = Vec::with_capacity(grid.len());
    let mut want = grid.iter().peekable();
    for (i, mu) in ConvolutionPowers::new(p, cap).enumerate() {
        let n = i + 1;
        let mu = mu?;
        let drift = mu.expectation(|h| f.eval(h));
        let pis: Vec<Rational> = words
            .iter()
            .map(|g| mu.expectation(|h| f.eval(&h.mul(g))) - &drift)
            .collect();
        for (a, x) in acc.iter_mut().zip(pis) {
            *a += x;
        }
        if want.peek() == Some(&&n) {
            want.next();
            let scale = ratio(1, n as i64);
            let values = acc.iter().map(|a| a * &scale).collect();
            out.push((n, Fingerprint::from_values(spec, radius, values)?));
        }
        if want.peek().is_none() {
            break;
        }
    }
    Ok(out)
}

/// `psi_N = (1/N) sum_{n=1..N} pi_n(f)` on `B_L`.
pub fn cesaro_harmonize(f: &Quasimorphism, p: &StepDistribution, n_terms: usize, radius: usize, cap: usize) -> Result<Fingerprint> {
    Ok(cesaro_series(f, p, &[n_terms], radius, cap)?.pop().expect("one entry").1)
}

/// `max_{g in B_L} |sum_s p(s) psi(s^-1 g) - psi(g)|`.
pub fn harmonic_residual(psi: &Fingerprint, p: &StepDistribution, radius: usize) -> Result<Rational> {
    let needed = radius + p.max_step();
    if psi.radius() < needed {
        return Err(Error::RadiusMismatch { needed, have: psi.radius() });
    }
    let mut worst = Rational::zero();
    for g in psi.words().iter().take_while(|g| g.len() <= radius) {
        let avg = p
            .measure()
            .atoms()
            .iter()
            .fold(Rational::zero(), |acc, (s, ps)| acc + ps * psi.get(&s.inv().mul(g)).expect("within radius"));
        let r = (avg - psi.get(g).expect("within radius")).abs();
        if r > worst {
            worst = r;
        }
    }
    Ok(worst)
}
