//! Permutations in one-line notation, integer partitions (cycle types) and
//! planar point sets.
//!
//! Positions and values are 0-based internally. All text formats (`Display`,
//! `FromStr`) use the 1-based convention, e.g. `"2,1,7,3,4,5,6"` for a
//! permutation and `"6+2+1"` for a partition.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};

/// Serde as 1-based display strings keeps reports compact and stable.
macro_rules! serde_via_strings {
    ($ty:ty) => {
        impl serde::Serialize for $ty {
            fn serialize<S: serde::Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> serde::Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(
                deserializer: D,
            ) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}
pub(crate) use serde_via_strings;

/// A permutation of `{0, .., n-1}` stored in one-line notation:
/// `values[i]` is the image of `i`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    values: Vec<usize>,
}

impl Permutation {
    /// Builds a permutation from 0-based images, checking bijectivity.
    pub fn from_images(values: Vec<usize>) -> Result<Self> {
        let n = values.len();
        let mut seen = vec![false; n];
        for &v in &values {
            if v >= n {
                return Err(Error::InvalidPermutation {
                    n,
                    reason: format!("value {} out of range", v + 1),
                });
            }
            if seen[v] {
                return Err(Error::InvalidPermutation {
                    n,
                    reason: format!("value {} repeated", v + 1),
                });
            }
            seen[v] = true;
        }
        Ok(Permutation { values })
    }

    /// Builds a permutation from 1-based one-line notation.
    pub fn from_one_line(values: &[usize]) -> Result<Self> {
        let shifted = values
            .iter()
            .map(|&v| {
                v.checked_sub(1).ok_or(Error::InvalidPermutation {
                    n: values.len(),
                    reason: "value 0 in 1-based notation".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_images(shifted)
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            values: (0..n).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.values.len()
    }

    /// Image of position `i` (0-based).
    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.values[i]
    }

    /// The underlying images, 0-based.
    pub fn images(&self) -> &[usize] {
        &self.values
    }

    /// One-line notation with 1-based values.
    pub fn one_line(&self) -> Vec<usize> {
        self.values.iter().map(|&v| v + 1).collect()
    }

    /// Functional composition: `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.size() != other.size() {
            return Err(Error::SizeMismatch {
                left: self.size(),
                right: other.size(),
            });
        }
        Ok(Permutation {
            values: other.values.iter().map(|&v| self.values[v]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.size()];
        for (i, &v) in self.values.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { values: inv }
    }

    /// Conjugation `τ⁻¹ ∘ self ∘ τ`; preserves the cycle type.
    pub fn conjugate_by(&self, tau: &Permutation) -> Result<Permutation> {
        if self.size() != tau.size() {
            return Err(Error::SizeMismatch {
                left: self.size(),
                right: tau.size(),
            });
        }
        let inv = tau.inverse();
        Ok(Permutation {
            values: (0..self.size())
                .map(|i| inv.values[self.values[tau.values[i]]])
                .collect(),
        })
    }

    /// Cycle type as a partition of `n` (cycle lengths, non-increasing).
    pub fn cycle_type(&self) -> IntegerPartition {
        let mut seen = vec![false; self.size()];
        let mut parts = Vec::new();
        for start in 0..self.size() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cur = self.values[cur];
                len += 1;
            }
            parts.push(len);
        }
        IntegerPartition::new(parts).expect("cycle lengths form a partition")
    }

    /// Value complement: `v ↦ n-1-v` at each position.
    pub fn complement(&self) -> Permutation {
        let n = self.size();
        Permutation {
            values: self.values.iter().map(|&v| n - 1 - v).collect(),
        }
    }

    /// Deletes the given positions and standardizes the surviving values,
    /// preserving relative order. Duplicate positions are ignored.
    pub fn remove_positions(&self, positions: &[usize]) -> Permutation {
        let drop: HashSet<usize> = positions.iter().copied().collect();
        let kept: Vec<usize> = (0..self.size())
            .filter(|i| !drop.contains(i))
            .map(|i| self.values[i])
            .collect();
        standardize(&kept)
    }

    /// Lexicographic enumeration of all permutations of size `n`.
    pub fn all(n: usize) -> impl Iterator<Item = Permutation> {
        LexPermutations {
            next: Some(Permutation::identity(n)),
        }
    }
}

/// The unique permutation with the same relative order as `values`
/// (which must be pairwise distinct).
fn standardize<T: PartialOrd + Copy>(values: &[T]) -> Permutation {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0; values.len()];
    for (rank, &idx) in order.iter().enumerate() {
        ranks[idx] = rank;
    }
    Permutation { values: ranks }
}

struct LexPermutations {
    next: Option<Permutation>,
}

impl Iterator for LexPermutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let current = self.next.take()?;
        let mut v = current.values.clone();
        // Standard next-permutation step.
        let advanced = (|| {
            if v.len() < 2 {
                return false;
            }
            let mut i = v.len() - 1;
            while i > 0 && v[i - 1] >= v[i] {
                i -= 1;
            }
            if i == 0 {
                return false;
            }
            let mut j = v.len() - 1;
            while v[j] <= v[i - 1] {
                j -= 1;
            }
            v.swap(i - 1, j);
            v[i..].reverse();
            true
        })();
        self.next = advanced.then_some(Permutation { values: v });
        Some(current)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|&v| (v + 1).to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({})", self)
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// Parses comma-separated 1-based one-line notation, e.g. `"2,1,3"`.
    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad permutation entry {:?}", tok)))
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::from_one_line(&values)
    }
}

serde_via_strings!(Permutation);

/// An integer partition `λ` stored as a non-increasing list of positive parts.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntegerPartition {
    parts: Vec<usize>,
}

impl IntegerPartition {
    /// Sorts the parts non-increasingly; rejects zero parts.
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::InvalidPartition("zero part".into()));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(IntegerPartition { parts })
    }

    /// The empty partition of 0.
    pub fn empty() -> Self {
        IntegerPartition { parts: Vec::new() }
    }

    /// Sum of the parts.
    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// Number of parts equal to `i` (the multiplicity `m_i(λ)`).
    pub fn multiplicity(&self, i: usize) -> usize {
        self.parts.iter().filter(|&&p| p == i).count()
    }

    /// Removes one part equal to `part`.
    pub fn remove_part(&self, part: usize) -> Result<IntegerPartition> {
        let pos = self
            .parts
            .iter()
            .position(|&p| p == part)
            .ok_or(Error::MissingPart { part })?;
        let mut parts = self.parts.clone();
        parts.remove(pos);
        Ok(IntegerPartition { parts })
    }

    /// Size of the conjugacy class `C_λ` in `S_n`: `n! / ∏ i^{m_i} m_i!`.
    pub fn class_size(&self) -> BigUint {
        let mut numerator = BigUint::one();
        for i in 1..=self.n() {
            numerator *= BigUint::from(i);
        }
        let mut denominator = BigUint::one();
        let mut i = 0;
        while i < self.parts.len() {
            let part = self.parts[i];
            let mut mult = 0usize;
            while i < self.parts.len() && self.parts[i] == part {
                mult += 1;
                i += 1;
            }
            for _ in 0..mult {
                denominator *= BigUint::from(part);
            }
            for f in 1..=mult {
                denominator *= BigUint::from(f);
            }
        }
        numerator / denominator
    }

    /// The fixed representative of `C_λ`: cycles filled with consecutive
    /// integers, largest part first. `λ = (6,2,1)` gives `(1..6)(7,8)(9)`.
    pub fn canonical_permutation(&self) -> Permutation {
        let mut values = vec![0; self.n()];
        let mut offset = 0;
        for &part in &self.parts {
            for q in 0..part {
                values[offset + q] = offset + (q + 1) % part;
            }
            offset += part;
        }
        Permutation { values }
    }

    /// All partitions of `n`, in lexicographically decreasing order of parts.
    pub fn all(n: usize) -> Vec<IntegerPartition> {
        let mut out = Vec::new();
        let mut current = Vec::new();
        fn recurse(
            remaining: usize,
            max_part: usize,
            current: &mut Vec<usize>,
            out: &mut Vec<IntegerPartition>,
        ) {
            if remaining == 0 {
                out.push(IntegerPartition {
                    parts: current.clone(),
                });
                return;
            }
            for part in (1..=remaining.min(max_part)).rev() {
                current.push(part);
                recurse(remaining - part, part, current, out);
                current.pop();
            }
        }
        recurse(n, n, &mut current, &mut out);
        out
    }
}

impl fmt::Display for IntegerPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", parts.join("+"))
    }
}

impl fmt::Debug for IntegerPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntegerPartition({})", self)
    }
}

impl FromStr for IntegerPartition {
    type Err = Error;

    /// Parses `"6+2+1"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split('+')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad partition part {:?}", tok)))
            })
            .collect::<Result<Vec<_>>>()?;
        IntegerPartition::new(parts)
    }
}

serde_via_strings!(IntegerPartition);

/// Points in the unit square with pairwise distinct x-coordinates and
/// pairwise distinct y-coordinates (an x may equal a y).
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Vec<(f64, f64)>,
}

impl PointSet {
    /// Rejects exact coordinate ties; no epsilon is applied.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        for (a, &(xa, ya)) in points.iter().enumerate() {
            for &(xb, yb) in points.iter().take(a) {
                if xa == xb {
                    return Err(Error::DegeneratePoints { axis: 'x' });
                }
                if ya == yb {
                    return Err(Error::DegeneratePoints { axis: 'y' });
                }
            }
        }
        Ok(PointSet { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// The permutation induced by the points: sort by x, then read the
    /// y-ranks. The graph `{(i/n, σ(i)/n)}` of a permutation recovers `σ`.
    pub fn pattern(&self) -> Permutation {
        let mut by_x: Vec<usize> = (0..self.points.len()).collect();
        by_x.sort_by(|&a, &b| self.points[a].0.partial_cmp(&self.points[b].0).unwrap());
        let ys: Vec<f64> = by_x.iter().map(|&i| self.points[i].1).collect();
        standardize(&ys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn compose_identity_and_inverse_pairs() {
        let id = Permutation::identity(3);
        let p = perm("2,3,1");
        assert_eq!(id.compose(&p).unwrap(), p);
        // 312 is the inverse of 231
        let q = perm("3,1,2");
        assert_eq!(p.compose(&q).unwrap(), Permutation::identity(3));
        let swap = perm("2,1");
        assert_eq!(swap.compose(&swap).unwrap(), Permutation::identity(2));
    }

    #[test]
    fn inverse_basics() {
        for n in 0..6 {
            let id = Permutation::identity(n);
            assert_eq!(id.inverse(), id);
        }
        assert_eq!(perm("2,3,1").inverse(), perm("3,1,2"));
        assert_eq!(perm("2,1").inverse(), perm("2,1"));
    }

    #[test]
    fn cycle_type_examples() {
        assert_eq!(
            Permutation::identity(5).cycle_type(),
            IntegerPartition::new(vec![1; 5]).unwrap()
        );
        // (1,2,3,4,5,6)(7,8)(9) in cycle notation
        let rho = IntegerPartition::new(vec![6, 2, 1])
            .unwrap()
            .canonical_permutation();
        assert_eq!(
            rho.cycle_type(),
            IntegerPartition::new(vec![6, 2, 1]).unwrap()
        );
        assert_eq!(
            perm("2,1").cycle_type(),
            IntegerPartition::new(vec![2]).unwrap()
        );
    }

    #[test]
    fn canonical_permutation_examples() {
        let rho = IntegerPartition::new(vec![6, 2, 1])
            .unwrap()
            .canonical_permutation();
        // one-line notation of (1,2,3,4,5,6)(7,8)(9)
        assert_eq!(rho.one_line(), vec![2, 3, 4, 5, 6, 1, 8, 7, 9]);
        let id_type = IntegerPartition::new(vec![1; 4]).unwrap();
        assert_eq!(id_type.canonical_permutation(), Permutation::identity(4));
        let cycle = IntegerPartition::new(vec![5])
            .unwrap()
            .canonical_permutation();
        assert_eq!(cycle.one_line(), vec![2, 3, 4, 5, 1]);
    }

    #[test]
    fn conjugation_preserves_cycle_type() {
        let rho = IntegerPartition::new(vec![3, 2])
            .unwrap()
            .canonical_permutation();
        assert_eq!(rho.conjugate_by(&Permutation::identity(5)).unwrap(), rho);
        for tau in Permutation::all(5) {
            let sigma = rho.conjugate_by(&tau).unwrap();
            assert_eq!(sigma.cycle_type(), rho.cycle_type());
        }
        let swap = perm("2,1");
        assert_eq!(swap.conjugate_by(&swap).unwrap(), swap);
    }

    #[test]
    fn size_mismatch_rejected() {
        let a = perm("2,1");
        let b = perm("1,2,3");
        assert!(a.compose(&b).is_err());
        assert!(a.conjugate_by(&b).is_err());
    }

    #[test]
    fn point_set_patterns() {
        let p = PointSet::new(vec![(0.1, 0.5), (0.7, 0.2), (0.0, 0.33)]).unwrap();
        assert_eq!(p.pattern(), perm("2,3,1"));
        let diag = PointSet::new(vec![(0.2, 0.2), (0.5, 0.5), (0.9, 0.9)]).unwrap();
        assert_eq!(diag.pattern(), Permutation::identity(3));
        let desc = PointSet::new(vec![(0.0, 1.0), (1.0, 0.0)]).unwrap();
        assert_eq!(desc.pattern(), perm("2,1"));
    }

    #[test]
    fn point_set_rejects_ties() {
        assert!(PointSet::new(vec![(0.5, 0.1), (0.5, 0.2)]).is_err());
        assert!(PointSet::new(vec![(0.1, 0.3), (0.2, 0.3)]).is_err());
        // An x equal to a y of another point is fine.
        assert!(PointSet::new(vec![(0.1, 0.2), (0.2, 0.4)]).is_ok());
    }

    #[test]
    fn graph_points_recover_permutation() {
        for sigma in Permutation::all(5) {
            let n = sigma.size() as f64;
            let pts: Vec<(f64, f64)> = sigma
                .images()
                .iter()
                .enumerate()
                .map(|(i, &v)| ((i + 1) as f64 / n, (v + 1) as f64 / n))
                .collect();
            assert_eq!(PointSet::new(pts).unwrap().pattern(), sigma);
        }
    }

    #[test]
    fn partition_parsing_and_class_size() {
        let lam: IntegerPartition = "6+2+1".parse().unwrap();
        assert_eq!(lam.parts(), &[6, 2, 1]);
        assert_eq!(lam.to_string(), "6+2+1");
        assert_eq!(lam.n(), 9);
        // |C_(2,1)| = 3, |C_(3)| = 2, |C_(1,1,1)| = 1
        assert_eq!(
            IntegerPartition::new(vec![2, 1]).unwrap().class_size(),
            BigUint::from(3u32)
        );
        assert_eq!(
            IntegerPartition::new(vec![3]).unwrap().class_size(),
            BigUint::from(2u32)
        );
        assert_eq!(
            IntegerPartition::new(vec![1, 1, 1]).unwrap().class_size(),
            BigUint::from(1u32)
        );
    }

    #[test]
    fn partitions_of_small_n() {
        assert_eq!(IntegerPartition::all(4).len(), 5);
        assert_eq!(IntegerPartition::all(5).len(), 7);
        for lam in IntegerPartition::all(6) {
            assert_eq!(lam.n(), 6);
            let canon = lam.canonical_permutation();
            assert_eq!(canon.cycle_type(), lam);
        }
    }

    #[test]
    fn remove_positions_standardizes() {
        let sigma = perm("2,1,7,3,4,5,6");
        // dropping positions 1 and 2 (0-based 0,1) leaves 7,3,4,5,6 -> 5,1,2,3,4
        assert_eq!(sigma.remove_positions(&[0, 1]), perm("5,1,2,3,4"));
        assert_eq!(sigma.remove_positions(&[]), sigma);
    }

    #[test]
    fn all_permutations_count() {
        assert_eq!(Permutation::all(0).count(), 1);
        assert_eq!(Permutation::all(3).count(), 6);
        assert_eq!(Permutation::all(5).count(), 120);
    }

    #[test]
    fn display_round_trip() {
        let p = perm("2,1,7,3,4,5,6");
        assert_eq!(p.to_string(), "2,1,7,3,4,5,6");
        assert_eq!(p.to_string().parse::<Permutation>().unwrap(), p);
    }
}
