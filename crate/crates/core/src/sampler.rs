//! Exactly-uniform random permutations: on `S_n`, on a conjugacy class
//! `C_λ`, and the recursive 2-cycle / 3-cycle constructions.
//!
//! All randomness flows through [`RandomStream`], a splittable counter-based
//! stream: the same `(seed, stream_id)` always reproduces the same draws, and
//! distinct stream ids are independent. Monte Carlo drivers give replica `r`
//! the stream id `r`, so results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{IntegerPartition, Permutation};

/// Identifier of the underlying generator, recorded in report metadata.
pub const GENERATOR_ID: &str = "chacha12";

/// A value-type handle on one member of a family of independent streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RandomStream { seed, stream_id }
    }

    /// Composes a group index and a member index into one stream id, so a
    /// driver can hand out disjoint stream families to its sub-tasks.
    pub fn grouped(seed: u64, group: u32, member: u32) -> Self {
        RandomStream {
            seed,
            stream_id: ((group as u64) << 32) | member as u64,
        }
    }

    /// Instantiates the generator positioned at this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha12Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Which conjugacy class to sample: an explicit cycle type, or the
/// `(p1, p2)` proportions of fixed points and 2-cycles, completed with
/// 3-cycles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassSpec {
    Explicit(IntegerPartition),
    Proportions { p1: f64, p2: f64 },
}

impl ClassSpec {
    pub fn proportions(p1: f64, p2: f64) -> Result<Self> {
        check_proportions(p1, p2)?;
        Ok(ClassSpec::Proportions { p1, p2 })
    }

    /// The cycle type at size `n`.
    pub fn resolve(&self, n: usize) -> Result<IntegerPartition> {
        match self {
            ClassSpec::Explicit(lam) => {
                if lam.n() != n {
                    return Err(Error::SizeMismatch {
                        left: lam.n(),
                        right: n,
                    });
                }
                Ok(lam.clone())
            }
            ClassSpec::Proportions { p1, p2 } => lambda_n(*p1, *p2, n),
        }
    }
}

fn check_proportions(p1: f64, p2: f64) -> Result<()> {
    // tiny tolerance so that p1 + 2*p2 == 1 survives rounding
    if !(0.0..=1.0).contains(&p1) || p2 < 0.0 || p1 + 2.0 * p2 > 1.0 + 1e-12 {
        return Err(Error::BadProportions { p1, p2 });
    }
    Ok(())
}

/// The cycle type `λⁿ = (1^{m1}, 2^{m2}, 3^{m3})` with `m2 = ⌊np2⌋`,
/// `m3 = ⌊np3⌋` for `p3 = (1 - p1 - 2p2)/3`, and `m1 = n - 2m2 - 3m3`.
pub fn lambda_n(p1: f64, p2: f64, n: usize) -> Result<IntegerPartition> {
    check_proportions(p1, p2)?;
    let p3 = ((1.0 - p1 - 2.0 * p2) / 3.0).max(0.0);
    // nudge before flooring so that n*p lands on the intended integer
    let m2 = ((n as f64) * p2 + 1e-9).floor() as usize;
    let m3 = ((n as f64) * p3 + 1e-9).floor() as usize;
    let m1 = n
        .checked_sub(2 * m2 + 3 * m3)
        .ok_or(Error::BadProportions { p1, p2 })?;
    let mut parts = Vec::with_capacity(m1 + m2 + m3);
    parts.extend(std::iter::repeat_n(3, m3));
    parts.extend(std::iter::repeat_n(2, m2));
    parts.extend(std::iter::repeat_n(1, m1));
    IntegerPartition::new(parts)
}

/// Unbiased Fisher–Yates shuffle: exactly uniform on `S_n`.
pub fn sample_sn<R: Rng>(n: usize, rng: &mut R) -> Permutation {
    let mut values: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        values.swap(i, j);
    }
    Permutation::from_images(values).expect("shuffle keeps bijectivity")
}

/// Exactly uniform on `C_λ`, via `τ⁻¹ ∘ ρ ∘ τ` with `ρ` the canonical
/// representative and `τ` uniform on `S_n`.
pub fn sample_class<R: Rng>(lambda: &IntegerPartition, rng: &mut R) -> Permutation {
    let rho = lambda.canonical_permutation();
    let tau = sample_sn(lambda.n(), rng);
    rho.conjugate_by(&tau).expect("equal sizes")
}

/// Assembles the 2-cycle construction: `σ(i) = j`, `σ(j) = i`, and the rest
/// is `sigma_rest` transported onto `[n] \ {i,j}` by the order-preserving
/// relabeling.
pub fn rec2_assemble(
    n: usize,
    i: usize,
    j: usize,
    sigma_rest: &Permutation,
) -> Result<Permutation> {
    if i == j || i >= n || j >= n {
        return Err(Error::Constraint(format!(
            "positions {i}, {j} must be distinct and below {n}"
        )));
    }
    if sigma_rest.size() + 2 != n {
        return Err(Error::SizeMismatch {
            left: sigma_rest.size() + 2,
            right: n,
        });
    }
    let rest: Vec<usize> = (0..n).filter(|&v| v != i && v != j).collect();
    let mut values = vec![0; n];
    values[i] = j;
    values[j] = i;
    for (t, &v) in rest.iter().enumerate() {
        values[v] = rest[sigma_rest.apply(t)];
    }
    Permutation::from_images(values)
}

/// Assembles the 3-cycle construction: `σ(i) = j`, `σ(j) = h`, `σ(h) = i`.
pub fn rec3_assemble(
    n: usize,
    i: usize,
    j: usize,
    h: usize,
    sigma_rest: &Permutation,
) -> Result<Permutation> {
    if i == j || j == h || i == h || i >= n || j >= n || h >= n {
        return Err(Error::Constraint(format!(
            "positions {i}, {j}, {h} must be distinct and below {n}"
        )));
    }
    if sigma_rest.size() + 3 != n {
        return Err(Error::SizeMismatch {
            left: sigma_rest.size() + 3,
            right: n,
        });
    }
    let rest: Vec<usize> = (0..n).filter(|&v| v != i && v != j && v != h).collect();
    let mut values = vec![0; n];
    values[i] = j;
    values[j] = h;
    values[h] = i;
    for (t, &v) in rest.iter().enumerate() {
        values[v] = rest[sigma_rest.apply(t)];
    }
    Permutation::from_images(values)
}

/// Recursive sampler for classes with a 2-cycle: picks a uniform ordered
/// pair `(i, j)`, plants the transposition, and samples the rest of type
/// `λ' = λ - (2)` independently. The marginal law of `σ` is uniform on `C_λ`.
///
/// Returns `(σ, i, j)` with 0-based positions.
pub fn sample_class_rec2<R: Rng>(
    lambda: &IntegerPartition,
    rng: &mut R,
) -> Result<(Permutation, usize, usize)> {
    let n = lambda.n();
    let reduced = lambda.remove_part(2)?;
    let i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let rest = sample_class(&reduced, rng);
    Ok((rec2_assemble(n, i, j, &rest)?, i, j))
}

/// Recursive sampler for classes with a 3-cycle; returns `(σ, i, j, h)`.
pub fn sample_class_rec3<R: Rng>(
    lambda: &IntegerPartition,
    rng: &mut R,
) -> Result<(Permutation, usize, usize, usize)> {
    let n = lambda.n();
    let reduced = lambda.remove_part(3)?;
    let i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let mut h = rng.gen_range(0..n - 2);
    for &taken in &[i.min(j), i.max(j)] {
        if h >= taken {
            h += 1;
        }
    }
    let rest = sample_class(&reduced, rng);
    Ok((rec3_assemble(n, i, j, h, &rest)?, i, j, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn part(parts: &[usize]) -> IntegerPartition {
        IntegerPartition::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut r1 = RandomStream::new(42, 7).rng();
        let mut r2 = RandomStream::new(42, 7).rng();
        let s1: Vec<u64> = (0..16).map(|_| r1.gen()).collect();
        let s2: Vec<u64> = (0..16).map(|_| r2.gen()).collect();
        assert_eq!(s1, s2);
        let mut r3 = RandomStream::new(42, 8).rng();
        let s3: Vec<u64> = (0..16).map(|_| r3.gen()).collect();
        assert_ne!(s1, s3);
        let mut r4 = RandomStream::new(43, 7).rng();
        let s4: Vec<u64> = (0..16).map(|_| r4.gen()).collect();
        assert_ne!(s1, s4);
    }

    #[test]
    fn lambda_n_examples() {
        assert_eq!(lambda_n(1.0, 0.0, 10).unwrap(), part(&[1; 10]));
        assert_eq!(lambda_n(0.0, 0.5, 10).unwrap(), part(&[2; 5]));
        let lam = lambda_n(0.4, 0.1, 20).unwrap();
        assert_eq!(lam.multiplicity(3), 2);
        assert_eq!(lam.multiplicity(2), 2);
        assert_eq!(lam.multiplicity(1), 10);
        assert!(lambda_n(0.8, 0.2, 10).is_err());
    }

    #[test]
    fn lambda_n_is_a_partition_of_n() {
        for &(p1, p2) in &[(0.0, 0.0), (0.3, 0.2), (0.5, 0.25), (1.0, 0.0), (0.0, 0.5)] {
            for n in 1..40 {
                let lam = lambda_n(p1, p2, n).unwrap();
                assert_eq!(lam.n(), n, "p1={p1} p2={p2} n={n}");
            }
        }
    }

    #[test]
    fn sample_sn_uniform_small() {
        let mut rng = RandomStream::new(1, 0).rng();
        assert_eq!(sample_sn(1, &mut rng), Permutation::identity(1));

        let trials = 60_000;
        let mut freq: HashMap<Permutation, usize> = HashMap::new();
        for _ in 0..trials {
            *freq.entry(sample_sn(3, &mut rng)).or_default() += 1;
        }
        assert_eq!(freq.len(), 6);
        let p = 1.0 / 6.0;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        for &count in freq.values() {
            let hat = count as f64 / trials as f64;
            assert!((hat - p).abs() < 4.0 * se, "freq {hat} vs {p}");
        }
    }

    #[test]
    fn sample_sn_pair_probability() {
        // P[τ_0 = 1, τ_2 = 3] = 1/(n(n-1)) for n = 5
        let mut rng = RandomStream::new(2, 0).rng();
        let trials = 200_000;
        let mut hits = 0;
        for _ in 0..trials {
            let tau = sample_sn(5, &mut rng);
            if tau.apply(0) == 1 && tau.apply(2) == 3 {
                hits += 1;
            }
        }
        let p = 1.0 / 20.0;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((hits as f64 / trials as f64 - p).abs() < 4.0 * se);
    }

    #[test]
    fn class_sampler_fixes_cycle_type() {
        let mut rng = RandomStream::new(3, 0).rng();
        for lam in [
            part(&[1, 1, 1, 1]),
            part(&[6, 2, 1]),
            part(&[3, 3, 2]),
            part(&[2, 2, 1, 1]),
        ] {
            for _ in 0..50 {
                assert_eq!(sample_class(&lam, &mut rng).cycle_type(), lam);
            }
        }
        assert_eq!(
            sample_class(&part(&[1; 7]), &mut rng),
            Permutation::identity(7)
        );
    }

    #[test]
    fn class_sampler_uniform_on_transpositions() {
        let lam = part(&[2, 1]);
        let mut rng = RandomStream::new(4, 0).rng();
        let trials = 60_000;
        let mut freq: HashMap<Permutation, usize> = HashMap::new();
        for _ in 0..trials {
            *freq.entry(sample_class(&lam, &mut rng)).or_default() += 1;
        }
        assert_eq!(freq.len(), 3);
        let p = 1.0 / 3.0;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        for &count in freq.values() {
            assert!((count as f64 / trials as f64 - p).abs() < 4.0 * se);
        }
    }

    #[test]
    fn class_sampler_fixed_point_mean() {
        // E[# fixed points] = m_1(λ) for λ = (3,3,2,2,1,...,1) of n = 20
        let lam = lambda_n(0.4, 0.1, 20).unwrap();
        let m1 = lam.multiplicity(1) as f64;
        let mut rng = RandomStream::new(5, 0).rng();
        let trials = 40_000;
        let mut total = 0usize;
        for _ in 0..trials {
            let sigma = sample_class(&lam, &mut rng);
            total += (0..20).filter(|&i| sigma.apply(i) == i).count();
        }
        let mean = total as f64 / trials as f64;
        // Var(# fixed points) <= m1 here; 4 standard errors with a crude bound
        let se = (m1 / trials as f64).sqrt();
        assert!((mean - m1).abs() < 4.0 * se, "mean {mean} vs {m1}");
    }

    #[test]
    fn rec2_contract() {
        let lam = part(&[2, 2, 1]);
        let mut rng = RandomStream::new(6, 0).rng();
        for _ in 0..200 {
            let (sigma, i, j) = sample_class_rec2(&lam, &mut rng).unwrap();
            assert_eq!(sigma.cycle_type(), lam);
            assert_eq!(sigma.apply(i), j);
            assert_eq!(sigma.apply(j), i);
        }
        assert!(sample_class_rec2(&part(&[3, 1]), &mut rng).is_err());
    }

    #[test]
    fn rec2_single_transposition() {
        let lam = part(&[2]);
        let mut rng = RandomStream::new(7, 0).rng();
        let mut seen = HashMap::new();
        for _ in 0..2000 {
            let (sigma, i, j) = sample_class_rec2(&lam, &mut rng).unwrap();
            assert_eq!(sigma.one_line(), vec![2, 1]);
            *seen.entry((i, j)).or_insert(0usize) += 1;
        }
        assert_eq!(seen.len(), 2); // (0,1) and (1,0), roughly balanced
        assert!(seen.values().all(|&c| c > 800));
    }

    #[test]
    fn rec3_contract() {
        let lam = part(&[3, 2, 1]);
        let mut rng = RandomStream::new(8, 0).rng();
        for _ in 0..200 {
            let (sigma, i, j, h) = sample_class_rec3(&lam, &mut rng).unwrap();
            assert_eq!(sigma.cycle_type(), lam);
            assert_eq!(sigma.apply(i), j);
            assert_eq!(sigma.apply(j), h);
            assert_eq!(sigma.apply(h), i);
        }
        assert!(sample_class_rec3(&part(&[2, 2]), &mut rng).is_err());
    }

    #[test]
    fn rec3_two_three_cycles() {
        let lam = part(&[3]);
        let mut rng = RandomStream::new(9, 0).rng();
        let mut freq: HashMap<Permutation, usize> = HashMap::new();
        let trials = 40_000;
        for _ in 0..trials {
            let (sigma, ..) = sample_class_rec3(&lam, &mut rng).unwrap();
            *freq.entry(sigma).or_default() += 1;
        }
        assert_eq!(freq.len(), 2);
        let p = 0.5;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        for &c in freq.values() {
            assert!((c as f64 / trials as f64 - p).abs() < 4.0 * se);
        }
    }

    #[test]
    fn rec2_total_variation_against_direct_sampler() {
        let lam = part(&[2, 2, 1, 1]);
        let trials = 100_000;
        let mut direct: HashMap<Permutation, f64> = HashMap::new();
        let mut recursive: HashMap<Permutation, f64> = HashMap::new();
        let mut rng = RandomStream::new(10, 0).rng();
        let weight = 1.0 / trials as f64;
        for _ in 0..trials {
            *direct.entry(sample_class(&lam, &mut rng)).or_default() += weight;
            let (sigma, ..) = sample_class_rec2(&lam, &mut rng).unwrap();
            *recursive.entry(sigma).or_default() += weight;
        }
        let keys: std::collections::HashSet<_> =
            direct.keys().chain(recursive.keys()).cloned().collect();
        let tv: f64 = keys
            .iter()
            .map(|k| {
                (direct.get(k).copied().unwrap_or(0.0) - recursive.get(k).copied().unwrap_or(0.0))
                    .abs()
            })
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "total variation {tv}");
    }

    #[test]
    fn class_spec_resolution() {
        let spec = ClassSpec::proportions(0.0, 0.5).unwrap();
        assert_eq!(spec.resolve(10).unwrap(), part(&[2; 5]));
        let spec = ClassSpec::Explicit(part(&[3, 2]));
        assert_eq!(spec.resolve(5).unwrap(), part(&[3, 2]));
        assert!(spec.resolve(6).is_err());
        assert!(ClassSpec::proportions(0.6, 0.3).is_err());
    }

    #[test]
    fn worker_count_does_not_change_samples() {
        // replica r always uses stream id r, whatever thread runs it
        let lam = part(&[2, 2, 2]);
        let serial: Vec<Permutation> = (0..64u64)
            .map(|r| sample_class(&lam, &mut RandomStream::new(99, r).rng()))
            .collect();
        use rayon::prelude::*;
        let parallel: Vec<Permutation> = (0..64u64)
            .into_par_iter()
            .map(|r| sample_class(&lam, &mut RandomStream::new(99, r).rng()))
            .collect();
        assert_eq!(serial, parallel);
    }
}
