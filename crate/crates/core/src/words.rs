//! Reduced words in the free group `F_r`.
//!
//! Letters are signed generator indices: `i` stands for the `i`-th free
//! generator and `-i` for its inverse (`1 <= i <= r`). The integers are the
//! rank-one case, with `n` represented by `|n|` copies of `1` or `-1`.
//!
//! Words are ordered length-first, then lexicographically with the letter
//! order `1 < -1 < 2 < -2 < ...`. [`GroupSpec::ball`] enumerates in exactly
//! that order, so tables indexed by a ball can be searched by word.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Hard cap on the number of words a ball enumeration may produce.
pub const DEFAULT_BALL_CAP: usize = 5_000_000;

/// The ambient free group `F_r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    rank: u32,
}

impl GroupSpec {
    pub fn new(rank: u32) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidArgument("group rank must be at least 1".into()));
        }
        Ok(Self { rank })
    }

    /// The integers, as `F_1`.
    pub fn integers() -> Self {
        Self { rank: 1 }
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    /// Generators and their inverses in canonical letter order.
    pub fn letters(&self) -> Vec<i32> {
        (1..=self.rank as i32).flat_map(|i| [i, -i]).collect()
    }

    pub fn check_letter(&self, letter: i32) -> Result<()> {
        if letter == 0 || letter.unsigned_abs() > self.rank {
            Err(Error::LetterOutOfRange { letter, rank: self.rank })
        } else {
            Ok(())
        }
    }

    /// Freely reduce a raw letter sequence.
    pub fn reduce(&self, letters: &[i32]) -> Result<ReducedWord> {
        for &l in letters {
            self.check_letter(l)?;
        }
        Ok(ReducedWord::reduce_unchecked(letters))
    }

    /// Number of reduced words of length at most `radius`.
    pub fn ball_size(&self, radius: usize) -> u128 {
        let r = self.rank as u128;
        if r == 1 {
            return 1 + 2 * radius as u128;
        }
        // 1 + 2r((2r-1)^L - 1)/(2r-2)
        let base = 2 * r - 1;
        let mut pow: u128 = 1;
        for _ in 0..radius {
            pow = pow.saturating_mul(base);
        }
        1 + (2 * r).saturating_mul(pow - 1) / (2 * r - 2)
    }

    /// All reduced words of length at most `radius`, in canonical order.
    pub fn ball(&self, radius: usize) -> Result<Vec<ReducedWord>> {
        self.ball_capped(radius, DEFAULT_BALL_CAP)
    }

    pub fn ball_capped(&self, radius: usize, cap: usize) -> Result<Vec<ReducedWord>> {
        let size = self.ball_size(radius);
        if size > cap as u128 {
            return Err(Error::BallCapExceeded { radius, size, cap });
        }
        let letters = self.letters();
        let mut out = Vec::with_capacity(size as usize);
        out.push(ReducedWord::identity());
        let mut start = 0;
        for _ in 0..radius {
            let end = out.len();
            for idx in start..end {
                let last = out[idx].letters.last().copied();
                for &l in &letters {
                    if last == Some(-l) {
                        continue;
                    }
                    let mut next = out[idx].letters.clone();
                    next.push(l);
                    out.push(ReducedWord { letters: next });
                }
            }
            start = end;
        }
        Ok(out)
    }
}

/// A freely reduced word; the identity is the empty word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ReducedWord {
    letters: Vec<i32>,
}

impl ReducedWord {
    pub fn identity() -> Self {
        Self { letters: Vec::new() }
    }

    /// Single-letter word; `letter` must be nonzero.
    pub fn letter(letter: i32) -> Self {
        assert!(letter != 0, "letter 0 is not a generator");
        Self { letters: vec![letter] }
    }

    /// The integer `n` as a word in one generator.
    pub fn from_int(n: i64) -> Self {
        let l = if n >= 0 { 1 } else { -1 };
        Self { letters: vec![l; n.unsigned_abs() as usize] }
    }

    /// Integer view of a word in generator 1 only.
    pub fn as_int(&self) -> Option<i64> {
        if self.letters.iter().all(|&l| l.abs() == 1) {
            Some(self.exp_sum(1))
        } else {
            None
        }
    }

    pub(crate) fn reduce_unchecked(letters: &[i32]) -> Self {
        let mut out: Vec<i32> = Vec::with_capacity(letters.len());
        for &l in letters {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self { letters: out }
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    /// Word length, equal to the word metric.
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Same as [`ReducedWord::is_identity`].
    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    pub fn mul(&self, other: &ReducedWord) -> ReducedWord {
        let mut cancel = 0;
        let (a, b) = (&self.letters, &other.letters);
        while cancel < a.len() && cancel < b.len() && a[a.len() - 1 - cancel] == -b[cancel] {
            cancel += 1;
        }
        let mut letters = Vec::with_capacity(a.len() + b.len() - 2 * cancel);
        letters.extend_from_slice(&a[..a.len() - cancel]);
        letters.extend_from_slice(&b[cancel..]);
        ReducedWord { letters }
    }

    pub fn inv(&self) -> ReducedWord {
        ReducedWord { letters: self.letters.iter().rev().map(|&l| -l).collect() }
    }

    /// Signed count of occurrences of generator `generator`.
    pub fn exp_sum(&self, generator: u32) -> i64 {
        let g = generator as i32;
        self.letters
            .iter()
            .map(|&l| match l {
                l if l == g => 1,
                l if l == -g => -1,
                _ => 0,
            })
            .sum()
    }

    /// Overlapping occurrences of `pattern` as a contiguous subword.
    pub fn count_occurrences(&self, pattern: &ReducedWord) -> usize {
        let p = &pattern.letters;
        if p.is_empty() || p.len() > self.letters.len() {
            return 0;
        }
        self.letters.windows(p.len()).filter(|w| *w == p.as_slice()).count()
    }

    /// Dash-separated signed indices, e.g. `1-2--1`; the identity is `e`.
    pub fn to_dash_string(&self) -> String {
        if self.letters.is_empty() {
            return "e".to_string();
        }
        self.letters.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("-")
    }

    /// Inverse of [`to_dash_string`](Self::to_dash_string), validated against `spec`.
    pub fn parse_dash(spec: &GroupSpec, s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(Self::identity());
        }
        let mut letters = Vec::new();
        let mut chars = s.char_indices().peekable();
        while let Some((start, c)) = chars.next() {
            let mut end = start + c.len_utf8();
            if c == '-' {
                // leading minus of a negative letter
                match chars.next() {
                    Some((i, d)) if d.is_ascii_digit() => end = i + 1,
                    _ => return Err(Error::Parse(format!("bad word `{s}`"))),
                }
            } else if !c.is_ascii_digit() {
                return Err(Error::Parse(format!("bad word `{s}`")));
            }
            while let Some(&(i, d)) = chars.peek() {
                if d.is_ascii_digit() {
                    end = i + 1;
                    chars.next();
                } else {
                    break;
                }
            }
            letters.push(s[start..end].parse::<i32>().map_err(|e| Error::Parse(e.to_string()))?);
            match chars.next() {
                None => break,
                Some((_, '-')) => {}
                Some(_) => return Err(Error::Parse(format!("bad word `{s}`"))),
            }
        }
        spec.reduce(&letters)
    }

    /// Parse `ab`-style words: `a`,`b`,... are generators 1,2,..., upper case
    /// letters their inverses.
    pub fn parse_alpha(spec: &GroupSpec, s: &str) -> Result<Self> {
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            let l = match c {
                'a'..='z' => (c as i32) - ('a' as i32) + 1,
                'A'..='Z' => -((c as i32) - ('A' as i32) + 1),
                _ => return Err(Error::Parse(format!("bad letter `{c}` in `{s}`"))),
            };
            letters.push(l);
        }
        spec.reduce(&letters)
    }
}

fn letter_key(l: i32) -> u32 {
    2 * (l.unsigned_abs() - 1) + u32::from(l < 0)
}

impl Ord for ReducedWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters.len().cmp(&other.letters.len()).then_with(|| {
            self.letters
                .iter()
                .map(|&l| letter_key(l))
                .cmp(other.letters.iter().map(|&l| letter_key(l)))
        })
    }
}

impl PartialOrd for ReducedWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dash_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> GroupSpec {
        GroupSpec::new(2).unwrap()
    }

    fn w(letters: &[i32]) -> ReducedWord {
        f2().reduce(letters).unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(w(&[1, -1, 2]).letters(), &[2]);
        assert!(w(&[]).is_identity());
        assert_eq!(w(&[1, 2, -2, -1, 1]).letters(), &[1]);
    }

    #[test]
    fn reduce_rejects_bad_letters() {
        assert!(matches!(f2().reduce(&[3]), Err(Error::LetterOutOfRange { letter: 3, .. })));
        assert!(f2().reduce(&[0]).is_err());
        assert!(GroupSpec::new(0).is_err());
    }

    #[test]
    fn mul_examples() {
        assert_eq!(w(&[1, 2]).mul(&w(&[-2, 1])).letters(), &[1, 1]);
        assert_eq!(w(&[1, 2]).mul(&ReducedWord::identity()), w(&[1, 2]));
        assert_eq!(w(&[1]).mul(&w(&[1])).letters(), &[1, 1]);
    }

    #[test]
    fn inv_examples() {
        assert_eq!(w(&[1, 2]).inv().letters(), &[-2, -1]);
        assert!(ReducedWord::identity().inv().is_identity());
        assert_eq!(w(&[-1]).inv().letters(), &[1]);
    }

    #[test]
    fn ball_examples() {
        assert_eq!(f2().ball(1).unwrap().len(), 5);
        assert_eq!(f2().ball(2).unwrap().len(), 17);
        let z: Vec<i64> = GroupSpec::integers()
            .ball(3)
            .unwrap()
            .iter()
            .map(|w| w.as_int().unwrap())
            .collect();
        assert_eq!(z, vec![0, 1, -1, 2, -2, 3, -3]);
    }

    #[test]
    fn ball_is_sorted_and_reduced() {
        let ball = f2().ball(4).unwrap();
        assert!(ball.windows(2).all(|p| p[0] < p[1]));
        for word in &ball {
            assert!(word.letters().windows(2).all(|p| p[0] != -p[1]));
        }
        assert_eq!(ball[1..5].iter().map(|w| w.letters()[0]).collect::<Vec<_>>(), vec![1, -1, 2, -2]);
    }

    #[test]
    fn ball_sizes_match_closed_form() {
        for r in 1..=3u32 {
            let spec = GroupSpec::new(r).unwrap();
            for l in 0..=5 {
                let brute = brute_force_ball_count(r as i32, l);
                assert_eq!(spec.ball(l).unwrap().len(), brute);
                assert_eq!(spec.ball_size(l), brute as u128);
            }
        }
    }

    // Count reduced sequences by filtering all raw sequences.
    fn brute_force_ball_count(r: i32, radius: usize) -> usize {
        let letters: Vec<i32> = (1..=r).flat_map(|i| [i, -i]).collect();
        let mut count = 0;
        for len in 0..=radius {
            let total = letters.len().pow(len as u32);
            for code in 0..total {
                let mut c = code;
                let seq: Vec<i32> = (0..len)
                    .map(|_| {
                        let l = letters[c % letters.len()];
                        c /= letters.len();
                        l
                    })
                    .collect();
                if seq.windows(2).all(|p| p[0] != -p[1]) {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn ball_cap_is_enforced() {
        let err = f2().ball_capped(6, 100).unwrap_err();
        assert!(matches!(err, Error::BallCapExceeded { size: 1457, .. }));
    }

    #[test]
    fn exp_sum_examples() {
        assert_eq!(w(&[1, 2, -1, 1]).exp_sum(1), 1);
        assert_eq!(ReducedWord::identity().exp_sum(2), 0);
        assert_eq!(w(&[-2, -2]).exp_sum(2), -2);
    }

    #[test]
    fn group_laws_on_small_balls() {
        let b3 = f2().ball(3).unwrap();
        for x in &b3 {
            for y in &b3 {
                let xy = x.mul(y);
                assert_eq!(xy.exp_sum(1), x.exp_sum(1) + y.exp_sum(1));
                assert_eq!(xy.exp_sum(2), x.exp_sum(2) + y.exp_sum(2));
            }
        }
        for x in f2().ball(4).unwrap() {
            assert!(x.mul(&x.inv()).is_identity());
            assert_eq!(x.inv().inv(), x);
        }
    }

    #[test]
    fn integer_view() {
        for n in -5..=5 {
            let w = ReducedWord::from_int(n);
            assert_eq!(w.as_int(), Some(n));
            assert_eq!(w.mul(&ReducedWord::from_int(3)).as_int(), Some(n + 3));
        }
        assert_eq!(w(&[2]).as_int(), None);
    }

    #[test]
    fn counting_occurrences_overlap() {
        assert_eq!(w(&[1, 1, 1]).count_occurrences(&w(&[1, 1])), 2);
        assert_eq!(w(&[1, 2, 1, 2]).count_occurrences(&w(&[1, 2])), 2);
        assert_eq!(w(&[1]).count_occurrences(&ReducedWord::identity()), 0);
    }

    #[test]
    fn dash_strings() {
        let word = w(&[1, 2, -1]);
        assert_eq!(word.to_dash_string(), "1-2--1");
        assert_eq!(ReducedWord::parse_dash(&f2(), "1-2--1").unwrap(), word);
        assert_eq!(ReducedWord::parse_dash(&f2(), "-1--2").unwrap().letters(), &[-1, -2]);
        assert_eq!(ReducedWord::parse_dash(&f2(), "e").unwrap(), ReducedWord::identity());
        assert!(ReducedWord::parse_dash(&f2(), "1--").is_err());
        assert_eq!(ReducedWord::parse_alpha(&f2(), "abAB").unwrap().letters(), &[1, 2, -1, -2]);
    }
}
