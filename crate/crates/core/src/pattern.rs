//! Vincular patterns and occurrence counting.
//!
//! A vincular pattern is a permutation `π` of size `k` together with a set
//! `A ⊆ {1, .., k-1}` of adjacency constraints: an occurrence is an
//! increasing index tuple `i_1 < .. < i_k` whose values realize `π` and with
//! `i_{s+1} = i_s + 1` for every `s ∈ A`. `A = ∅` gives classical patterns,
//! `A = {1, .., k-1}` consecutive ones.
//!
//! Text format: `"132|1"` is `π = 132`, `A = {1}`; `"132|"` is classical and
//! `"132|1,2"` consecutive.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::perm::{serde_via_strings, Permutation};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VincularPattern {
    pattern: Permutation,
    /// `glue[s]` (0-based) glues positions `s` and `s+1`; externally `s+1 ∈ A`.
    glue: Vec<bool>,
}

impl VincularPattern {
    /// `adjacency` uses the 1-based convention: `s ∈ A` means positions
    /// `s` and `s+1` of the occurrence must be adjacent.
    pub fn new(pattern: Permutation, adjacency: &BTreeSet<usize>) -> Result<Self> {
        let k = pattern.size();
        if k == 0 {
            return Err(Error::Constraint("empty pattern".into()));
        }
        let mut glue = vec![false; k - 1];
        for &s in adjacency {
            if s == 0 || s >= k {
                return Err(Error::InvalidAdjacency { pos: s, max: k - 1 });
            }
            glue[s - 1] = true;
        }
        Ok(VincularPattern { pattern, glue })
    }

    pub fn classical(pattern: Permutation) -> Result<Self> {
        Self::new(pattern, &BTreeSet::new())
    }

    pub fn consecutive(pattern: Permutation) -> Result<Self> {
        let k = pattern.size();
        Self::new(pattern, &(1..k).collect())
    }

    pub fn pattern(&self) -> &Permutation {
        &self.pattern
    }

    /// Pattern size `k`.
    pub fn k(&self) -> usize {
        self.pattern.size()
    }

    /// Number of blocks `m = k - |A|`.
    pub fn block_count(&self) -> usize {
        self.k() - self.glue.iter().filter(|&&g| g).count()
    }

    /// Lengths of the maximal runs of glued positions; they sum to `k`.
    pub fn blocks(&self) -> Vec<usize> {
        let mut lens = vec![1usize];
        for &g in &self.glue {
            if g {
                *lens.last_mut().unwrap() += 1;
            } else {
                lens.push(1);
            }
        }
        lens
    }

    pub fn is_classical(&self) -> bool {
        self.glue.iter().all(|&g| !g)
    }

    pub fn is_consecutive(&self) -> bool {
        self.glue.iter().all(|&g| g)
    }

    pub fn adjacency(&self) -> BTreeSet<usize> {
        self.glue
            .iter()
            .enumerate()
            .filter_map(|(s, &g)| g.then_some(s + 1))
            .collect()
    }

    /// Visits every increasing index tuple `i_1 < .. < i_k` in `[n]`
    /// satisfying the adjacency constraints (0-based positions), i.e. the
    /// position part of the tuples indexing the occurrence indicators.
    /// There are `C(n-k+m, m)` of them.
    pub fn for_each_index_tuple(&self, n: usize, mut f: impl FnMut(&[usize])) {
        let k = self.k();
        if k > n {
            return;
        }
        let blocks = self.blocks();
        let mut tuple = vec![0usize; k];
        fill_blocks(&blocks, n, 0, 0, 0, &mut tuple, &mut f);
    }

    /// Number of index tuples visited by [`Self::for_each_index_tuple`],
    /// as a float (guards may overflow integers).
    pub fn index_tuple_count(&self, n: usize) -> f64 {
        let k = self.k();
        let m = self.block_count();
        if k > n {
            return 0.0;
        }
        binomial_f64(n - k + m, m)
    }
}

pub(crate) fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0f64;
    for t in 0..k {
        acc = acc * (n - t) as f64 / (t + 1) as f64;
    }
    acc
}

fn fill_blocks(
    blocks: &[usize],
    n: usize,
    block: usize,
    min_start: usize,
    filled: usize,
    tuple: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]),
) {
    if block == blocks.len() {
        f(tuple);
        return;
    }
    let remaining: usize = blocks[block..].iter().sum();
    if n < remaining {
        return;
    }
    for start in min_start..=(n - remaining) {
        for u in 0..blocks[block] {
            tuple[filled + u] = start + u;
        }
        fill_blocks(
            blocks,
            n,
            block + 1,
            start + blocks[block],
            filled + blocks[block],
            tuple,
            f,
        );
    }
}

impl fmt::Display for VincularPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.k() <= 9 {
            for &v in self.pattern.images() {
                write!(f, "{}", v + 1)?;
            }
        } else {
            write!(f, "{}", self.pattern)?;
        }
        let adj: Vec<String> = self.adjacency().iter().map(|s| s.to_string()).collect();
        write!(f, "|{}", adj.join(","))
    }
}

impl fmt::Debug for VincularPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VincularPattern({})", self)
    }
}

impl FromStr for VincularPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (perm_part, adj_part) = match s.split_once('|') {
            Some((p, a)) => (p.trim(), a.trim()),
            None => (s.trim(), ""),
        };
        let pattern = if perm_part.contains(',') {
            perm_part.parse::<Permutation>()?
        } else {
            let digits = perm_part
                .chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as usize)
                        .ok_or_else(|| Error::Parse(format!("bad pattern digit {:?}", c)))
                })
                .collect::<Result<Vec<_>>>()?;
            Permutation::from_one_line(&digits)?
        };
        let adjacency = if adj_part.is_empty() {
            BTreeSet::new()
        } else {
            adj_part
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad adjacency entry {:?}", tok)))
                })
                .collect::<Result<BTreeSet<_>>>()?
        };
        VincularPattern::new(pattern, &adjacency)
    }
}

serde_via_strings!(VincularPattern);

/// A strictly increasing tuple of 0-based positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccurrenceIndex {
    indices: Vec<usize>,
}

impl OccurrenceIndex {
    pub fn from_zero_based(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::IndicesNotIncreasing);
        }
        Ok(OccurrenceIndex { indices })
    }

    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        let shifted = indices
            .iter()
            .map(|&i| i.checked_sub(1).ok_or(Error::IndicesNotIncreasing))
            .collect::<Result<Vec<_>>>()?;
        Self::from_zero_based(shifted)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

/// Does `idx` realize the pattern `p` in `sigma`?
///
/// Checks the value chain `σ(i_{π⁻¹(1)}) < .. < σ(i_{π⁻¹(k)})` and the
/// adjacency constraints.
pub fn is_occurrence(
    sigma: &Permutation,
    p: &VincularPattern,
    idx: &OccurrenceIndex,
) -> Result<bool> {
    let k = p.k();
    if idx.indices.len() != k {
        return Err(Error::SizeMismatch {
            left: idx.indices.len(),
            right: k,
        });
    }
    let n = sigma.size();
    if let Some(&last) = idx.indices.last() {
        if last >= n {
            return Err(Error::IndexOutOfRange { index: last, n });
        }
    }
    Ok(occurrence_unchecked(
        sigma,
        p,
        &p.pattern.inverse(),
        &idx.indices,
    ))
}

#[inline]
fn occurrence_unchecked(
    sigma: &Permutation,
    p: &VincularPattern,
    inv: &Permutation,
    idx: &[usize],
) -> bool {
    for (s, &g) in p.glue.iter().enumerate() {
        if g && idx[s + 1] != idx[s] + 1 {
            return false;
        }
    }
    for q in 1..idx.len() {
        if sigma.apply(idx[inv.apply(q - 1)]) >= sigma.apply(idx[inv.apply(q)]) {
            return false;
        }
    }
    true
}

/// Brute-force count over all `C(n,k)` increasing index tuples.
///
/// The independent reference for [`count_fast`]; cost `O(C(n,k) · k)`.
pub fn count_oracle(sigma: &Permutation, p: &VincularPattern) -> u64 {
    let n = sigma.size();
    let k = p.k();
    if k > n {
        return 0;
    }
    let inv = p.pattern.inverse();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut count = 0u64;
    loop {
        if occurrence_unchecked(sigma, p, &inv, &idx) {
            count += 1;
        }
        // advance to next increasing k-tuple
        let mut t = k;
        loop {
            if t == 0 {
                return count;
            }
            t -= 1;
            if idx[t] < n - (k - t) {
                idx[t] += 1;
                for u in t + 1..k {
                    idx[u] = idx[u - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Pattern count `X^{(π,A)}(σ)`, dispatched to a specialized kernel.
///
/// Consecutive patterns (`m = 1`) scan the `n-k+1` windows in `O(n·k)`;
/// classical `k = 2` uses a Fenwick tree in `O(n log n)`; everything else
/// enumerates the `m` block start positions with pruning, `O(n^m)` placements
/// in the worst case. Agrees exactly with [`count_oracle`].
pub fn count_fast(sigma: &Permutation, p: &VincularPattern) -> u64 {
    let n = sigma.size();
    let k = p.k();
    if k > n {
        return 0;
    }
    if p.block_count() == 1 {
        return count_consecutive(sigma, p);
    }
    if p.is_classical() && k == 2 {
        let inversions = count_inversions(sigma);
        return if p.pattern.apply(0) == 1 {
            inversions
        } else {
            binomial2(n as u64) - inversions
        };
    }
    count_blocks(sigma, p)
}

fn count_consecutive(sigma: &Permutation, p: &VincularPattern) -> u64 {
    let n = sigma.size();
    let k = p.k();
    let inv = p.pattern.inverse();
    let mut count = 0u64;
    'outer: for start in 0..=(n - k) {
        for q in 1..k {
            if sigma.apply(start + inv.apply(q - 1)) >= sigma.apply(start + inv.apply(q)) {
                continue 'outer;
            }
        }
        count += 1;
    }
    count
}

fn binomial2(n: u64) -> u64 {
    n * (n - 1) / 2
}

/// Inversions of `σ` via a Fenwick tree over values.
fn count_inversions(sigma: &Permutation) -> u64 {
    let n = sigma.size();
    let mut tree = vec![0u64; n + 1];
    let mut count = 0u64;
    for i in 0..n {
        let v = sigma.apply(i);
        // number of earlier values strictly greater than v
        count += i as u64 - prefix_sum(&tree, v + 1);
        let mut idx = v + 1;
        while idx <= n {
            tree[idx] += 1;
            idx += idx & idx.wrapping_neg();
        }
    }
    count
}

fn prefix_sum(tree: &[u64], mut idx: usize) -> u64 {
    let mut sum = 0;
    while idx > 0 {
        sum += tree[idx];
        idx -= idx & idx.wrapping_neg();
    }
    sum
}

/// Generic kernel: place the `m` blocks left to right, pruning as soon as a
/// placed value violates the pattern order.
fn count_blocks(sigma: &Permutation, p: &VincularPattern) -> u64 {
    let blocks = p.blocks();
    // pattern position of the first slot of each block
    let mut block_pos = Vec::with_capacity(blocks.len());
    let mut acc = 0;
    for &len in &blocks {
        block_pos.push(acc);
        acc += len;
    }
    let suffix_len: Vec<usize> = blocks
        .iter()
        .rev()
        .scan(0, |acc, &len| {
            *acc += len;
            Some(*acc)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();

    // (pattern position, value) of the slots placed so far
    let mut placed: Vec<(usize, usize)> = Vec::with_capacity(p.k());
    let mut count = 0u64;
    place_block(
        sigma,
        p,
        &blocks,
        &block_pos,
        &suffix_len,
        0,
        0,
        &mut placed,
        &mut count,
    );
    count
}

#[allow(clippy::too_many_arguments)]
fn place_block(
    sigma: &Permutation,
    p: &VincularPattern,
    blocks: &[usize],
    block_pos: &[usize],
    suffix_len: &[usize],
    block: usize,
    min_start: usize,
    placed: &mut Vec<(usize, usize)>,
    count: &mut u64,
) {
    if block == blocks.len() {
        *count += 1;
        return;
    }
    let n = sigma.size();
    let len = blocks[block];
    if n < suffix_len[block] {
        return;
    }
    for start in min_start..=(n - suffix_len[block]) {
        let mark = placed.len();
        let mut ok = true;
        'slot: for u in 0..len {
            let ppos = block_pos[block] + u;
            let value = sigma.apply(start + u);
            for &(qpos, qval) in placed.iter() {
                if (p.pattern.apply(ppos) < p.pattern.apply(qpos)) != (value < qval) {
                    ok = false;
                    break 'slot;
                }
            }
            placed.push((ppos, value));
        }
        if ok {
            place_block(
                sigma,
                p,
                blocks,
                block_pos,
                suffix_len,
                block + 1,
                start + len,
                placed,
                count,
            );
        }
        placed.truncate(mark);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{sample_sn, RandomStream};
    use rand::Rng;

    fn perm(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    fn pat(s: &str) -> VincularPattern {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        let p = pat("132|1");
        assert_eq!(p.pattern(), &perm("1,3,2"));
        assert_eq!(p.adjacency(), [1].into_iter().collect());
        assert_eq!(p.to_string(), "132|1");
        assert_eq!(pat("132|").adjacency(), BTreeSet::new());
        assert_eq!(pat("132|1,2").blocks(), vec![3]);
        assert_eq!(pat("1,3,2|2"), pat("132|2"));
        assert!("132|3".parse::<VincularPattern>().is_err());
        assert!("122|".parse::<VincularPattern>().is_err());
    }

    #[test]
    fn blocks_examples() {
        assert_eq!(pat("132|1").blocks(), vec![2, 1]);
        assert_eq!(pat("132|1,2").blocks(), vec![3]);
        assert_eq!(pat("1234|").blocks(), vec![1, 1, 1, 1]);
        assert_eq!(pat("1234|").block_count(), 4);
        assert_eq!(pat("132|1").block_count(), 2);
    }

    #[test]
    fn occurrence_worked_example() {
        // σ = 2173456, triple (2,3,7)
        let sigma = perm("2,1,7,3,4,5,6");
        let idx = OccurrenceIndex::from_one_based(&[2, 3, 7]).unwrap();
        assert!(is_occurrence(&sigma, &pat("132|"), &idx).unwrap());
        assert!(is_occurrence(&sigma, &pat("132|1"), &idx).unwrap());
        assert!(!is_occurrence(&sigma, &pat("132|2"), &idx).unwrap());
    }

    #[test]
    fn occurrence_rejects_bad_indices() {
        let sigma = perm("2,1,3");
        assert!(OccurrenceIndex::from_one_based(&[2, 2]).is_err());
        assert!(OccurrenceIndex::from_one_based(&[3, 1]).is_err());
        let idx = OccurrenceIndex::from_one_based(&[1, 4]).unwrap();
        assert!(is_occurrence(&sigma, &pat("21|"), &idx).is_err());
        let idx = OccurrenceIndex::from_one_based(&[1]).unwrap();
        assert!(is_occurrence(&sigma, &pat("21|"), &idx).is_err());
    }

    #[test]
    fn identity_has_no_inversions() {
        let sigma = Permutation::identity(6);
        for idx in [[1, 2], [2, 5], [1, 6]] {
            let idx = OccurrenceIndex::from_one_based(&idx).unwrap();
            assert!(!is_occurrence(&sigma, &pat("21|"), &idx).unwrap());
        }
        assert_eq!(count_fast(&sigma, &pat("21|")), 0);
    }

    #[test]
    fn oracle_on_extremes() {
        let n = 9;
        let rev = Permutation::from_images((0..n).rev().collect()).unwrap();
        assert_eq!(
            count_oracle(&rev, &pat("21|")),
            (n as u64) * (n as u64 - 1) / 2
        );
        let id = Permutation::identity(n);
        assert_eq!(count_oracle(&id, &pat("123|")), 84); // C(9,3)
        assert_eq!(count_oracle(&id, &pat("1234|")), 126); // C(9,4)
    }

    #[test]
    fn oracle_on_worked_example() {
        // enumeration over the C(7,3) = 35 triples of 2173456
        let sigma = perm("2,1,7,3,4,5,6");
        assert_eq!(count_oracle(&sigma, &pat("132|")), 8);
    }

    #[test]
    fn descents_and_peaks() {
        let sigma = perm("2,1,7,3,4,5,6");
        assert_eq!(count_fast(&sigma, &pat("21|1")), 2);
        let sigma = perm("1,4,2,5,3");
        let peaks = count_fast(&sigma, &pat("132|1,2")) + count_fast(&sigma, &pat("231|1,2"));
        assert_eq!(peaks, 2);
    }

    #[test]
    fn fast_equals_oracle_randomized() {
        let mut rng = RandomStream::new(0x5eed, 1).rng();
        let all_patterns: Vec<VincularPattern> = (1..=4usize)
            .flat_map(|k| {
                Permutation::all(k).flat_map(move |p| {
                    (0u32..1 << (k - 1)).map(move |mask| {
                        let adj: BTreeSet<usize> =
                            (1..k).filter(|s| mask >> (s - 1) & 1 == 1).collect();
                        VincularPattern::new(p.clone(), &adj).unwrap()
                    })
                })
            })
            .collect();
        for _ in 0..120 {
            let n = rng.gen_range(1..=12);
            let sigma = sample_sn(n, &mut rng);
            let p = &all_patterns[rng.gen_range(0..all_patterns.len())];
            assert_eq!(
                count_fast(&sigma, p),
                count_oracle(&sigma, p),
                "pattern {} on {}",
                p,
                sigma
            );
        }
    }

    #[test]
    fn classical_counts_partition_subsets() {
        // Σ_π X^{(π,∅)}(σ) over all π of size k equals C(n,k)
        let mut rng = RandomStream::new(0xabc, 2).rng();
        let sigma = sample_sn(8, &mut rng);
        let total: u64 = Permutation::all(3)
            .map(|p| count_fast(&sigma, &VincularPattern::classical(p).unwrap()))
            .sum();
        assert_eq!(total, 56); // C(8,3)
    }

    #[test]
    fn complement_symmetry() {
        let mut rng = RandomStream::new(0xdef, 3).rng();
        for _ in 0..40 {
            let n = rng.gen_range(2..=10);
            let sigma = sample_sn(n, &mut rng);
            for ps in ["21|", "132|1", "231|", "123|1,2", "3142|2"] {
                let p = pat(ps);
                let complement_pattern =
                    VincularPattern::new(p.pattern().complement(), &p.adjacency()).unwrap();
                assert_eq!(
                    count_fast(&sigma, &p),
                    count_fast(&sigma.complement(), &complement_pattern)
                );
            }
        }
    }

    #[test]
    fn consecutive_counts_bounded_by_windows() {
        let mut rng = RandomStream::new(0x77, 4).rng();
        for _ in 0..30 {
            let n = rng.gen_range(3..=12);
            let sigma = sample_sn(n, &mut rng);
            for k in 2..=3 {
                for p in Permutation::all(k) {
                    let pc = VincularPattern::consecutive(p).unwrap();
                    assert!(count_fast(&sigma, &pc) <= (n - k + 1) as u64);
                }
            }
        }
    }

    #[test]
    fn size_one_pattern_counts_positions() {
        let sigma = perm("3,1,2");
        assert_eq!(count_fast(&sigma, &pat("1|")), 3);
        assert_eq!(count_oracle(&sigma, &pat("1|")), 3);
    }

    #[test]
    fn pattern_larger_than_host() {
        let sigma = perm("2,1");
        assert_eq!(count_fast(&sigma, &pat("321|")), 0);
        assert_eq!(count_oracle(&sigma, &pat("321|")), 0);
    }
}
