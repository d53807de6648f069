//! Exact mixed cumulants of the indicator family `B_{i,j} = 1[σ(i) = j]`
//! for `σ` uniform in a small conjugacy class, plus empirical cumulant
//! estimation from samples.
//!
//! All exact computations use arbitrary-precision rationals; floats only
//! appear in the empirical estimators.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::perm::{IntegerPartition, Permutation};
use crate::stats::{jackknife, Estimate, MomentSet};
use crate::wdg::EdgeMultiset;

/// Largest conjugacy class that exact enumeration will touch.
pub const CLASS_GUARD: u128 = 1_000_000;

/// Bell(10) = 115975; larger ground sets are refused.
pub const SET_PARTITION_GUARD: usize = 10;

// ---------------------------------------------------------------------------
// set partitions and the moment-cumulant inversion
// ---------------------------------------------------------------------------

/// A partition of `{0, .., r-1}` into disjoint nonempty blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetPartition {
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Bitmask of each block over the ground set.
    pub fn block_masks(&self) -> Vec<u32> {
        self.blocks
            .iter()
            .map(|b| b.iter().fold(0u32, |m, &e| m | (1 << e)))
            .collect()
    }
}

/// Streams every set partition of `{0, .., r-1}` exactly once, by
/// restricted-growth strings.
pub fn set_partitions(r: usize) -> Result<SetPartitions> {
    if r == 0 || r > SET_PARTITION_GUARD {
        return Err(Error::TooManyElements {
            r,
            limit: SET_PARTITION_GUARD,
        });
    }
    Ok(SetPartitions {
        rgs: vec![0; r],
        max: vec![0; r],
        done: false,
    })
}

pub struct SetPartitions {
    rgs: Vec<usize>,
    max: Vec<usize>,
    done: bool,
}

impl Iterator for SetPartitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if self.done {
            return None;
        }
        let r = self.rgs.len();
        let block_count = self.max[r - 1] + 1;
        let mut blocks = vec![Vec::new(); block_count];
        for (e, &b) in self.rgs.iter().enumerate() {
            blocks[b].push(e);
        }
        let out = SetPartition { blocks };

        // advance the restricted-growth string
        let mut pos = r;
        loop {
            if pos <= 1 {
                self.done = true;
                break;
            }
            pos -= 1;
            if self.rgs[pos] <= self.max[pos - 1] {
                self.rgs[pos] += 1;
                self.max[pos] = self.max[pos - 1].max(self.rgs[pos]);
                for t in pos + 1..r {
                    self.rgs[t] = 0;
                    self.max[t] = self.max[t - 1];
                }
                break;
            }
        }
        Some(out)
    }
}

/// Mixed cumulant by the set-partition inversion of the joint moments:
/// `κ(X_1, .., X_r) = Σ_π (-1)^{|π|-1} (|π|-1)! ∏_{B ∈ π} E[∏_{e ∈ B} X_e]`.
///
/// `moment_fn` receives a bitmask over `{0, .., r-1}` and must return the
/// joint moment of the selected variables.
pub fn mixed_cumulant(
    r: usize,
    mut moment_fn: impl FnMut(u32) -> BigRational,
) -> Result<BigRational> {
    let mut kappa = BigRational::zero();
    for partition in set_partitions(r)? {
        let blocks = partition.block_masks();
        let mut term = BigRational::one();
        for &mask in &blocks {
            term *= moment_fn(mask);
        }
        // (-1)^{|π|-1} (|π|-1)!
        let mut coefficient = BigInt::one();
        for f in 1..blocks.len() {
            coefficient *= BigInt::from(f);
        }
        if blocks.len() % 2 == 0 {
            coefficient = -coefficient;
        }
        kappa += term * BigRational::from_integer(coefficient);
    }
    Ok(kappa)
}

// ---------------------------------------------------------------------------
// conjugacy class enumeration
// ---------------------------------------------------------------------------

/// Every element of `C_λ`, exactly once. Guarded by [`CLASS_GUARD`].
///
/// Small sizes (`n <= 8`) sweep `S_n` and filter by cycle type; `n >= 9`
/// fills cycles directly over ordered subsets.
pub fn class_elements(lambda: &IntegerPartition) -> Result<Vec<Permutation>> {
    let size = lambda.class_size();
    if size > BigUint::from(CLASS_GUARD) {
        return Err(Error::ClassTooLarge {
            size: size.to_u128().unwrap_or(u128::MAX),
            limit: CLASS_GUARD,
        });
    }
    let elements = if lambda.n() <= 8 {
        Permutation::all(lambda.n())
            .filter(|sigma| &sigma.cycle_type() == lambda)
            .collect()
    } else {
        direct_class_elements(lambda)
    };
    debug_assert_eq!(BigUint::from(elements.len()), size);
    Ok(elements)
}

/// Builds the class cycle by cycle: the smallest unused element leads the
/// next cycle, whose remaining entries range over ordered subsets of the
/// unused pool; iterating over distinct part lengths avoids duplicates.
fn direct_class_elements(lambda: &IntegerPartition) -> Vec<Permutation> {
    let n = lambda.n();
    let mut remaining: Vec<(usize, usize)> = Vec::new(); // (length, count), desc
    for &part in lambda.parts() {
        match remaining.last_mut() {
            Some((len, count)) if *len == part => *count += 1,
            _ => remaining.push((part, 1)),
        }
    }
    let unused: Vec<usize> = (0..n).collect();
    let mut images = vec![0usize; n];
    let mut out = Vec::new();
    fill_next_cycle(&unused, &mut remaining, &mut images, &mut out);
    out
}

fn fill_next_cycle(
    unused: &[usize],
    remaining: &mut Vec<(usize, usize)>,
    images: &mut [usize],
    out: &mut Vec<Permutation>,
) {
    if unused.is_empty() {
        out.push(Permutation::from_images(images.to_vec()).expect("cycles fill a bijection"));
        return;
    }
    let leader = unused[0];
    for choice in 0..remaining.len() {
        if remaining[choice].1 == 0 {
            continue;
        }
        let length = remaining[choice].0;
        remaining[choice].1 -= 1;
        let pool: Vec<usize> = unused[1..].to_vec();
        let mut cycle = vec![leader];
        ordered_subsets(&pool, length - 1, &mut cycle, &mut |cycle| {
            for t in 0..cycle.len() {
                images[cycle[t]] = cycle[(t + 1) % cycle.len()];
            }
            let next_unused: Vec<usize> = unused
                .iter()
                .copied()
                .filter(|v| !cycle.contains(v))
                .collect();
            fill_next_cycle(&next_unused, remaining, images, out);
        });
        remaining[choice].1 += 1;
    }
}

fn ordered_subsets(
    pool: &[usize],
    take: usize,
    prefix: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]),
) {
    if take == 0 {
        f(prefix);
        return;
    }
    for &candidate in pool {
        if prefix.contains(&candidate) {
            continue;
        }
        prefix.push(candidate);
        ordered_subsets(pool, take - 1, prefix, f);
        prefix.pop();
    }
}

// ---------------------------------------------------------------------------
// exact joint moments and mixed cumulants of the B family
// ---------------------------------------------------------------------------

fn moment_over_class(class: &[Permutation], alpha: &EdgeMultiset) -> BigRational {
    if alpha.is_empty() {
        return BigRational::one();
    }
    let hits = class
        .iter()
        .filter(|sigma| alpha.pairs().iter().all(|&(i, j)| sigma.apply(i) == j))
        .count();
    BigRational::new(BigInt::from(hits), BigInt::from(class.len()))
}

/// `M_α = P[σ(i) = j for all (i,j) ∈ α]` for `σ` uniform on `C_λ`,
/// by exhaustive enumeration of the class.
pub fn exact_joint_moment(lambda: &IntegerPartition, alpha: &EdgeMultiset) -> Result<BigRational> {
    check_ambient(lambda, alpha)?;
    let class = class_elements(lambda)?;
    Ok(moment_over_class(&class, alpha))
}

fn check_ambient(lambda: &IntegerPartition, alpha: &EdgeMultiset) -> Result<()> {
    if alpha.n() != lambda.n() {
        return Err(Error::SizeMismatch {
            left: alpha.n(),
            right: lambda.n(),
        });
    }
    Ok(())
}

/// Memoized table of joint moments `M_α` over one class.
///
/// Built once for a key set (construction parallelizes over keys), then
/// immutable.
pub struct JointMomentTable {
    lambda: IntegerPartition,
    entries: HashMap<EdgeMultiset, BigRational>,
}

impl JointMomentTable {
    pub fn build(lambda: &IntegerPartition, keys: &[EdgeMultiset]) -> Result<Self> {
        for alpha in keys {
            check_ambient(lambda, alpha)?;
        }
        let class = class_elements(lambda)?;
        let mut unique: Vec<EdgeMultiset> = keys.to_vec();
        unique.sort();
        unique.dedup();
        let entries: HashMap<EdgeMultiset, BigRational> = unique
            .into_par_iter()
            .map(|alpha| {
                let m = moment_over_class(&class, &alpha);
                (alpha, m)
            })
            .collect();
        Ok(JointMomentTable {
            lambda: lambda.clone(),
            entries,
        })
    }

    pub fn lambda(&self) -> &IntegerPartition {
        &self.lambda
    }

    pub fn get(&self, alpha: &EdgeMultiset) -> Option<&BigRational> {
        self.entries.get(alpha)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Cumulant engine over one enumerated class: pays the class enumeration
/// once and reuses it across many `α`.
pub struct ClassCumulants {
    lambda: IntegerPartition,
    class: Vec<Permutation>,
}

impl ClassCumulants {
    pub fn new(lambda: &IntegerPartition) -> Result<Self> {
        Ok(ClassCumulants {
            lambda: lambda.clone(),
            class: class_elements(lambda)?,
        })
    }

    pub fn lambda(&self) -> &IntegerPartition {
        &self.lambda
    }

    pub fn class_len(&self) -> usize {
        self.class.len()
    }

    pub fn joint_moment(&self, alpha: &EdgeMultiset) -> Result<BigRational> {
        check_ambient(&self.lambda, alpha)?;
        Ok(moment_over_class(&self.class, alpha))
    }

    /// `κ(B_{i_1,j_1}, .., B_{i_r,j_r})` for the indicators selected by `α`,
    /// via the set-partition inversion over exact sub-multiset moments.
    pub fn mixed_cumulant_b(&self, alpha: &EdgeMultiset) -> Result<BigRational> {
        check_ambient(&self.lambda, alpha)?;
        let r = alpha.len();
        if r == 0 {
            return Err(Error::EmptyEdgeMultiset);
        }
        let mut memo: HashMap<EdgeMultiset, BigRational> = HashMap::new();
        mixed_cumulant(r, |mask| {
            let sub = alpha.subset(mask);
            memo.entry(sub)
                .or_insert_with_key(|sub| moment_over_class(&self.class, sub))
                .clone()
        })
    }

    /// `|κ(B; α)| · n^{#S(α) - 1}`, the quantity bounded by a constant
    /// independent of `n` and `λ`.
    pub fn bound_ratio(&self, alpha: &EdgeMultiset) -> Result<f64> {
        let kappa = self.mixed_cumulant_b(alpha)?;
        let support = alpha.support().len();
        let scale = BigInt::from(self.lambda.n()).pow(support as u32 - 1);
        let ratio = kappa.abs() * BigRational::from_integer(scale);
        Ok(ratio.to_f64().unwrap_or(f64::NAN))
    }
}

/// One-shot variant of [`ClassCumulants::mixed_cumulant_b`].
pub fn exact_mixed_cumulant_b(
    lambda: &IntegerPartition,
    alpha: &EdgeMultiset,
) -> Result<BigRational> {
    ClassCumulants::new(lambda)?.mixed_cumulant_b(alpha)
}

/// One-shot variant of [`ClassCumulants::bound_ratio`].
pub fn bound_ratio(lambda: &IntegerPartition, alpha: &EdgeMultiset) -> Result<f64> {
    ClassCumulants::new(lambda)?.bound_ratio(alpha)
}

// ---------------------------------------------------------------------------
// support classifier
// ---------------------------------------------------------------------------

/// Structural half of the nonzero-moment criterion: after deduplication,
/// every coordinate has out-degree <= 1 and in-degree <= 1, i.e. the pairs
/// form a disjoint union of directed paths and cycles (loops count as
/// cycles of length 1).
pub fn is_path_cycle_union(alpha: &EdgeMultiset) -> bool {
    decompose_fragment(alpha).is_some()
}

/// Directed cycles (by length) and paths (by vertex count) of the fragment.
fn decompose_fragment(alpha: &EdgeMultiset) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut pairs: Vec<(usize, usize)> = alpha.pairs().to_vec();
    pairs.dedup();
    let mut succ: HashMap<usize, usize> = HashMap::new();
    let mut pred: HashMap<usize, usize> = HashMap::new();
    for &(i, j) in &pairs {
        if succ.insert(i, j).is_some() || pred.insert(j, i).is_some() {
            return None;
        }
    }
    let mut cycles = Vec::new();
    let mut paths = Vec::new();
    let mut visited: std::collections::HashSet<usize> = std::collections::HashSet::new();
    // paths start at vertices with an out-edge but no in-edge
    for &(start, _) in &pairs {
        if pred.contains_key(&start) || visited.contains(&start) {
            continue;
        }
        let mut length = 1;
        let mut cur = start;
        visited.insert(cur);
        while let Some(&next) = succ.get(&cur) {
            visited.insert(next);
            length += 1;
            cur = next;
        }
        paths.push(length);
    }
    // everything else lies on cycles
    for &(start, _) in &pairs {
        if visited.contains(&start) {
            continue;
        }
        let mut length = 0;
        let mut cur = start;
        loop {
            visited.insert(cur);
            length += 1;
            cur = succ[&cur];
            if cur == start {
                break;
            }
        }
        cycles.push(length);
    }
    Some((cycles, paths))
}

/// Full criterion for `M_α ≠ 0` on `C_λ`: the fragment must be a disjoint
/// union of directed paths and cycles, each forced cycle of length `c`
/// must occupy its own part of size exactly `c`, and the paths must pack
/// into the remaining parts (a path on `v` vertices fits inside a cycle of
/// length at least `v`, several paths may share one part).
pub fn moment_is_nonzero(lambda: &IntegerPartition, alpha: &EdgeMultiset) -> bool {
    if alpha.is_empty() {
        return true;
    }
    let Some((cycles, paths)) = decompose_fragment(alpha) else {
        return false;
    };
    // consume one part of size exactly c per forced cycle
    let mut capacity: Vec<usize> = lambda.parts().to_vec();
    for c in cycles {
        match capacity.iter().position(|&p| p == c) {
            Some(pos) => {
                capacity.swap_remove(pos);
            }
            None => return false,
        }
    }
    let mut sizes = paths;
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    pack_paths(&sizes, &mut capacity)
}

fn pack_paths(sizes: &[usize], capacity: &mut Vec<usize>) -> bool {
    let Some((&first, rest)) = sizes.split_first() else {
        return true;
    };
    let mut tried: Vec<usize> = Vec::new();
    for t in 0..capacity.len() {
        let cap = capacity[t];
        if cap < first || tried.contains(&cap) {
            continue;
        }
        tried.push(cap);
        capacity[t] -= first;
        if pack_paths(rest, capacity) {
            capacity[t] += first;
            return true;
        }
        capacity[t] += first;
    }
    false
}

// ---------------------------------------------------------------------------
// the uniform-S_n base case
// ---------------------------------------------------------------------------

/// Exact joint moment of the `A_{i,j} = 1[τ(i) = j]` family for `τ` uniform
/// on `S_n`: `(n-q)!/n!` when the deduplicated pairs form a partial
/// injection with `q` constraints, else 0.
pub fn uniform_joint_moment(n: usize, alpha: &EdgeMultiset) -> BigRational {
    let mut pairs: Vec<(usize, usize)> = alpha.pairs().to_vec();
    pairs.dedup();
    let mut succ: HashMap<usize, usize> = HashMap::new();
    let mut pred: HashMap<usize, usize> = HashMap::new();
    for &(i, j) in &pairs {
        let ok = succ.insert(i, j).is_none_or(|old| old == j)
            && pred.insert(j, i).is_none_or(|old| old == i);
        if !ok {
            return BigRational::zero();
        }
    }
    let q = pairs.len();
    if q > n {
        return BigRational::zero();
    }
    // (n-q)!/n! = 1/(n (n-1) .. (n-q+1))
    let mut denom = BigInt::one();
    for t in 0..q {
        denom *= BigInt::from(n - t);
    }
    BigRational::new(BigInt::one(), denom)
}

// ---------------------------------------------------------------------------
// empirical cumulants
// ---------------------------------------------------------------------------

/// Cumulant estimates of an i.i.d. sample with jackknife standard errors.
///
/// Orders 1-4 are unbiased k-statistics; orders 5-6 are plug-in estimates
/// with `O(1/N)` bias. `max_order <= 6`.
pub fn empirical_cumulants(samples: &[f64], max_order: usize) -> Result<Vec<Estimate>> {
    if max_order == 0 || max_order > 6 {
        return Err(Error::Constraint(format!(
            "max_order {max_order} outside 1..=6"
        )));
    }
    if samples.len() < max_order + 1 {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            need: max_order + 1,
        });
    }
    type Functional = Box<dyn Fn(&MomentSet) -> f64>;
    let functionals: Vec<Functional> = (1..=max_order)
        .map(|order| Box::new(move |m: &MomentSet| m.kappa(order)) as Functional)
        .collect();
    let refs: Vec<&dyn Fn(&MomentSet) -> f64> = functionals.iter().map(|b| b.as_ref()).collect();
    Ok(jackknife(samples, &refs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::RandomStream;
    use rand::Rng;

    fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
        // Box-Muller; u1 > 0 since gen() is in [0, 1)
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn part(parts: &[usize]) -> IntegerPartition {
        IntegerPartition::new(parts.to_vec()).unwrap()
    }

    fn ems(n: usize, pairs: &[(usize, usize)]) -> EdgeMultiset {
        EdgeMultiset::new(n, pairs.to_vec()).unwrap()
    }

    fn rational(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn set_partition_counts_are_bell_numbers() {
        assert_eq!(set_partitions(1).unwrap().count(), 1);
        assert_eq!(set_partitions(3).unwrap().count(), 5);
        assert_eq!(set_partitions(4).unwrap().count(), 15);
        assert_eq!(set_partitions(7).unwrap().count(), 877);
        assert!(set_partitions(11).is_err());
        assert!(set_partitions(0).is_err());
    }

    #[test]
    fn set_partitions_cover_ground_set() {
        for partition in set_partitions(5).unwrap() {
            let mut seen = [false; 5];
            for block in partition.blocks() {
                assert!(!block.is_empty());
                for &e in block {
                    assert!(!seen[e], "element {e} repeated");
                    seen[e] = true;
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn mixed_cumulant_low_orders() {
        // order 1: the mean; order 2: the covariance
        let m1 = rational(1, 3);
        let kappa = mixed_cumulant(1, |_| m1.clone()).unwrap();
        assert_eq!(kappa, m1);

        let m_ab = rational(1, 5);
        let m_a = rational(1, 3);
        let m_b = rational(1, 4);
        let kappa = mixed_cumulant(2, |mask| match mask {
            0b01 => m_a.clone(),
            0b10 => m_b.clone(),
            0b11 => m_ab.clone(),
            _ => unreachable!(),
        })
        .unwrap();
        assert_eq!(kappa, &m_ab - &m_a * &m_b);
    }

    #[test]
    fn mixed_cumulant_vanishes_on_independent_split() {
        // X1, X2 arbitrary dependent pair, X3 independent of both: build the
        // product-measure moments and check κ(X1, X2, X3) = 0, and similarly
        // for every split at orders up to 5.
        let pair_moment = |mask: u32| -> BigRational {
            match mask & 0b11 {
                0b00 => BigRational::one(),
                0b01 => rational(1, 2),
                0b10 => rational(1, 3),
                0b11 => rational(1, 4), // correlated: 1/4 != 1/6
                _ => unreachable!(),
            }
        };
        let third = rational(2, 7);
        let kappa = mixed_cumulant(3, |mask| {
            let mut m = pair_moment(mask);
            if mask >> 2 & 1 == 1 {
                m *= third.clone();
            }
            m
        })
        .unwrap();
        assert!(kappa.is_zero(), "κ = {kappa}");

        // every split of up to five variables: product measures built from
        // two arbitrary (correlated-within-block) moment tables must give a
        // vanishing mixed cumulant
        let table = |mask: u32| -> BigRational {
            // moments of a generic dependent family: 1/(popcount² + sum + 1)
            if mask == 0 {
                return BigRational::one();
            }
            let pop = mask.count_ones() as i64;
            let sum: i64 = (0..5).filter(|b| mask >> b & 1 == 1).map(|b| b + 2).sum();
            rational(1, pop * pop + sum)
        };
        for r in 2..=5usize {
            let full = (1u32 << r) - 1;
            for split in 1..full {
                let kappa =
                    mixed_cumulant(r, |mask| table(mask & split) * table(mask & !split & full))
                        .unwrap();
                assert!(kappa.is_zero(), "r = {r}, split {split:b}: κ = {kappa}");
            }
        }
    }

    #[test]
    fn class_enumeration_matches_class_size() {
        for n in 1..=6 {
            for lam in IntegerPartition::all(n) {
                let elements = class_elements(&lam).unwrap();
                assert_eq!(BigUint::from(elements.len()), lam.class_size(), "λ = {lam}");
                for sigma in &elements {
                    assert_eq!(&sigma.cycle_type(), &lam);
                }
            }
        }
    }

    #[test]
    fn direct_generator_at_the_dispatch_boundary() {
        // n = 9 takes the cycle-filling path; check size and distinctness
        let lam = part(&[6, 2, 1]);
        let elements = class_elements(&lam).unwrap();
        assert_eq!(num_bigint::BigUint::from(elements.len()), lam.class_size());
        let unique: std::collections::HashSet<_> = elements.iter().collect();
        assert_eq!(unique.len(), elements.len());
        for sigma in elements.iter().step_by(997) {
            assert_eq!(sigma.cycle_type(), lam);
        }
    }

    #[test]
    fn direct_generator_agrees_with_filter() {
        for n in 1..=7 {
            for lam in IntegerPartition::all(n) {
                let mut filtered: Vec<Permutation> = Permutation::all(n)
                    .filter(|s| s.cycle_type() == lam)
                    .collect();
                let mut direct = direct_class_elements(&lam);
                filtered.sort();
                direct.sort();
                assert_eq!(filtered, direct, "λ = {lam}");
            }
        }
    }

    #[test]
    fn joint_moment_examples() {
        // identity class fixes everything
        let lam = part(&[1, 1, 1, 1]);
        assert_eq!(
            exact_joint_moment(&lam, &ems(4, &[(0, 0)])).unwrap(),
            BigRational::one()
        );
        // an n-cycle has no fixed point
        let lam = part(&[5]);
        assert!(exact_joint_moment(&lam, &ems(5, &[(0, 0)]))
            .unwrap()
            .is_zero());
        // single transposition class: exactly one of three maps 1 to 2
        let lam = part(&[2, 1]);
        assert_eq!(
            exact_joint_moment(&lam, &ems(3, &[(0, 1)])).unwrap(),
            rational(1, 3)
        );
        // empty constraint
        assert_eq!(
            exact_joint_moment(&lam, &ems(3, &[])).unwrap(),
            BigRational::one()
        );
    }

    #[test]
    fn moment_table_build() {
        let lam = part(&[2, 2, 1]);
        let keys = vec![
            ems(5, &[(0, 1)]),
            ems(5, &[(0, 1), (1, 0)]),
            ems(5, &[(0, 1)]), // duplicate on purpose
            ems(5, &[]),
        ];
        let table = JointMomentTable::build(&lam, &keys).unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(table.get(&ems(5, &[])), Some(&BigRational::one()));
        let direct = exact_joint_moment(&lam, &ems(5, &[(0, 1), (1, 0)])).unwrap();
        assert_eq!(table.get(&ems(5, &[(0, 1), (1, 0)])), Some(&direct));
    }

    #[test]
    fn single_indicator_ratio_envelope() {
        // exhaustive n <= 7: M_{(i,j)} * n^{#S-1} never exceeds n/(n-1),
        // whose maximum 2 is attained at n = 2 on the forced transposition
        let mut worst: f64 = 0.0;
        for n in 1..=7usize {
            for lam in IntegerPartition::all(n) {
                let engine = ClassCumulants::new(&lam).unwrap();
                for i in 0..n {
                    for j in 0..n {
                        let alpha = ems(n, &[(i, j)]);
                        let ratio = engine.bound_ratio(&alpha).unwrap();
                        assert!(ratio <= 2.0 + 1e-12, "λ = {lam}, ({i},{j}): {ratio}");
                        worst = worst.max(ratio);
                    }
                }
            }
        }
        assert_eq!(worst, 2.0);
    }

    #[test]
    fn class_fixed_point_totals_are_exact() {
        // Σ_{σ ∈ C_λ} #fix(σ) = m_1(λ) · |C_λ|
        for n in 1..=7usize {
            for lam in IntegerPartition::all(n) {
                let class = class_elements(&lam).unwrap();
                let total: usize = class
                    .iter()
                    .map(|s| (0..n).filter(|&i| s.apply(i) == i).count())
                    .sum();
                assert_eq!(total, lam.multiplicity(1) * class.len(), "λ = {lam}");
            }
        }
    }

    #[test]
    fn cumulant_of_single_indicator_is_its_mean() {
        let lam = part(&[2, 1]);
        let alpha = ems(3, &[(0, 1)]);
        assert_eq!(
            exact_mixed_cumulant_b(&lam, &alpha).unwrap(),
            rational(1, 3)
        );
    }

    #[test]
    fn repeated_indicator_gives_bernoulli_variance() {
        // κ(B, B) = p(1-p) with p = M_{(i,j)}
        let lam = part(&[2, 2, 1]);
        let alpha = ems(5, &[(0, 1), (0, 1)]);
        let p = exact_joint_moment(&lam, &ems(5, &[(0, 1)])).unwrap();
        let expected = &p * &(BigRational::one() - &p);
        assert_eq!(exact_mixed_cumulant_b(&lam, &alpha).unwrap(), expected);
    }

    #[test]
    fn deterministic_class_has_no_higher_cumulants() {
        let lam = part(&[1; 6]);
        for pairs in [vec![(0, 0), (1, 1)], vec![(0, 0), (0, 0), (3, 3)]] {
            let alpha = ems(6, &pairs);
            assert!(exact_mixed_cumulant_b(&lam, &alpha).unwrap().is_zero());
        }
    }

    #[test]
    fn cumulant_symmetric_in_alpha_order() {
        // EdgeMultiset canonicalizes, so permuting the pair list cannot
        // change anything; verify through the public constructor.
        let lam = part(&[3, 2]);
        let a = ems(5, &[(0, 1), (2, 3), (1, 2)]);
        let b = ems(5, &[(1, 2), (0, 1), (2, 3)]);
        assert_eq!(a, b);
        assert_eq!(
            exact_mixed_cumulant_b(&lam, &a).unwrap(),
            exact_mixed_cumulant_b(&lam, &b).unwrap()
        );
    }

    #[test]
    fn classifier_structural_examples() {
        assert!(is_path_cycle_union(&ems(6, &[(0, 1), (1, 2)])));
        assert!(is_path_cycle_union(&ems(6, &[(0, 0)])));
        assert!(is_path_cycle_union(&ems(6, &[(0, 1), (1, 0)])));
        // out-degree 2
        assert!(!is_path_cycle_union(&ems(6, &[(0, 1), (0, 2)])));
        // in-degree 2
        assert!(!is_path_cycle_union(&ems(6, &[(0, 2), (1, 2)])));
        // repeated pair is fine
        assert!(is_path_cycle_union(&ems(6, &[(0, 1), (0, 1)])));
    }

    #[test]
    fn classifier_matches_enumeration() {
        let mut rng = RandomStream::new(0xc1a5, 0).rng();
        for n in 2..=5 {
            for lam in IntegerPartition::all(n) {
                let class = class_elements(&lam).unwrap();
                // exhaustive r <= 2
                let mut all_pairs = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        all_pairs.push((i, j));
                    }
                }
                for &p1 in &all_pairs {
                    for &p2 in &all_pairs {
                        let alpha = ems(n, &[p1, p2]);
                        let nonzero = !moment_over_class(&class, &alpha).is_zero();
                        assert_eq!(
                            moment_is_nonzero(&lam, &alpha),
                            nonzero,
                            "λ = {lam}, α = {alpha:?}"
                        );
                        if nonzero {
                            assert!(is_path_cycle_union(&alpha));
                        }
                    }
                }
                // sampled r = 3
                for _ in 0..60 {
                    let pairs: Vec<(usize, usize)> = (0..3)
                        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
                        .collect();
                    let alpha = ems(n, &pairs);
                    let nonzero = !moment_over_class(&class, &alpha).is_zero();
                    assert_eq!(
                        moment_is_nonzero(&lam, &alpha),
                        nonzero,
                        "λ = {lam}, α = {alpha:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn uniform_moments_closed_form() {
        // disjoint pairs: 1/(n(n-1))
        let alpha = ems(5, &[(0, 1), (2, 3)]);
        assert_eq!(uniform_joint_moment(5, &alpha), rational(1, 20));
        // clashing pairs
        assert!(uniform_joint_moment(5, &ems(5, &[(0, 1), (0, 2)])).is_zero());
        assert!(uniform_joint_moment(5, &ems(5, &[(0, 2), (1, 2)])).is_zero());
        // consistent chain: τ(0)=1, τ(1)=2
        assert_eq!(
            uniform_joint_moment(5, &ems(5, &[(0, 1), (1, 2)])),
            rational(1, 20)
        );
        // against brute force over S_4
        let mut rng = RandomStream::new(0x7777, 0).rng();
        for _ in 0..100 {
            let r = rng.gen_range(1..=3);
            let pairs: Vec<(usize, usize)> = (0..r)
                .map(|_| (rng.gen_range(0..4), rng.gen_range(0..4)))
                .collect();
            let alpha = ems(4, &pairs);
            let brute = Permutation::all(4)
                .filter(|t| alpha.pairs().iter().all(|&(i, j)| t.apply(i) == j))
                .count();
            assert_eq!(
                uniform_joint_moment(4, &alpha),
                rational(brute as i64, 24),
                "α = {alpha:?}"
            );
        }
    }

    #[test]
    fn empirical_cumulants_constant_sequence() {
        let xs = vec![2.5; 50];
        let est = empirical_cumulants(&xs, 6).unwrap();
        assert!((est[0].value - 2.5).abs() < 1e-12);
        for e in &est[1..] {
            assert!(e.value.abs() < 1e-12);
            assert!(e.stderr.abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_cumulants_low_orders_are_mean_and_variance() {
        let mut rng = RandomStream::new(0xbead, 0).rng();
        let xs: Vec<f64> = (0..300).map(|_| rng.gen::<f64>() * 4.0).collect();
        let est = empirical_cumulants(&xs, 2).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!((est[0].value - mean).abs() < 1e-12);
        assert!((est[1].value - var).abs() < 1e-12);
    }

    #[test]
    fn empirical_cumulants_standard_normal_calibration() {
        let mut rng = RandomStream::new(0x90a1, 0).rng();
        let xs: Vec<f64> = (0..100_000).map(|_| standard_normal(&mut rng)).collect();
        let est = empirical_cumulants(&xs, 4).unwrap();
        assert!(
            est[2].value.abs() < 4.0 * est[2].stderr,
            "κ3 = {:?}",
            est[2]
        );
        assert!(
            est[3].value.abs() < 4.0 * est[3].stderr,
            "κ4 = {:?}",
            est[3]
        );
        // and the variance is near 1
        assert!((est[1].value - 1.0).abs() < 4.0 * est[1].stderr);
    }

    #[test]
    fn empirical_cumulants_guards() {
        assert!(empirical_cumulants(&[1.0, 2.0], 4).is_err());
        assert!(empirical_cumulants(&[1.0; 10], 7).is_err());
        assert!(empirical_cumulants(&[1.0; 10], 0).is_err());
    }
}
