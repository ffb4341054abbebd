use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::{same_space, tube, ControlledSet, FiniteSpace, SpaceError};

/// Outcome of [`is_generating`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generation {
    /// `Tube(R_max) ⊆ E^∘n` for this least `n`.
    Generating(usize),
    /// The sequence of powers of `E` is periodic and no power in a full
    /// period contains `Tube(R_max)`.
    NotGenerating,
    /// Neither a covering power nor the period was found within `n_max`.
    Inconclusive,
}

/// `N²` for an `N`-point space.
pub fn default_n_max(space: &FiniteSpace) -> usize {
    (space.len() * space.len()).max(1)
}

/// Dense boolean relation, one bitset per row.
#[derive(Clone, PartialEq, Eq, Hash)]
struct BoolMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BoolMatrix {
    fn from_set(set: &ControlledSet) -> Self {
        let n = set.space().len();
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for (x, y) in set.pairs() {
            bits[x * words + y / 64] |= 1 << (y % 64);
        }
        BoolMatrix { n, words, bits }
    }

    fn row(&self, x: usize) -> &[u64] {
        &self.bits[x * self.words..(x + 1) * self.words]
    }

    fn get(&self, x: usize, y: usize) -> bool {
        self.row(x)[y / 64] >> (y % 64) & 1 == 1
    }

    fn compose(&self, other: &BoolMatrix) -> BoolMatrix {
        let mut bits = vec![0u64; self.bits.len()];
        for x in 0..self.n {
            let out = &mut bits[x * self.words..(x + 1) * self.words];
            for z in 0..self.n {
                if self.get(x, z) {
                    for (o, w) in out.iter_mut().zip(other.row(z)) {
                        *o |= w;
                    }
                }
            }
        }
        BoolMatrix { n: self.n, words: self.words, bits }
    }

    fn is_subset(&self, other: &BoolMatrix) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.bits.hash(&mut h);
        h.finish()
    }
}

/// Least `n <= n_max` with `Tube(R_max) ⊆ E^∘n`, where `R_max` is the largest
/// finite distance in the space.
///
/// Boolean powers of a relation are eventually periodic. If the sequence
/// `E, E², …` revisits an earlier power before any power covers the tube,
/// every later power is one already rejected, and the answer is certified
/// [`Generation::NotGenerating`].
pub fn is_generating(
    space: &Arc<FiniteSpace>,
    e: &ControlledSet,
    n_max: usize,
) -> Result<Generation, SpaceError> {
    if n_max == 0 {
        return Err(SpaceError::ZeroExponentBound);
    }
    if !same_space(space, e.space()) {
        return Err(SpaceError::SpaceMismatch);
    }
    let required = BoolMatrix::from_set(&tube(space, &space.max_finite_distance())?);
    let base = BoolMatrix::from_set(e);
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut power = base.clone();
    for n in 1..=n_max {
        if required.is_subset(&power) {
            return Ok(Generation::Generating(n));
        }
        let fp = power.fingerprint();
        match seen.get(&fp) {
            Some(&earlier) => {
                // Confirm the fingerprint hit by recomputing the earlier power.
                let mut again = base.clone();
                for _ in 1..earlier {
                    again = again.compose(&base);
                }
                if again == power {
                    return Ok(Generation::NotGenerating);
                }
            }
            None => {
                seen.insert(fp, n);
            }
        }
        power = power.compose(&base);
    }
    Ok(Generation::Inconclusive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    fn cycle(n: usize) -> Arc<FiniteSpace> {
        Arc::new(FiniteSpace::from_graph("cycle", n, (0..n).map(|i| (i, (i + 1) % n))).unwrap())
    }

    /// Brute-force powers on explicit pair sets.
    fn covered_at(space: &Arc<FiniteSpace>, e: &ControlledSet, n: usize) -> bool {
        let mut p = e.clone();
        for _ in 1..n {
            p = p.compose(e).unwrap();
        }
        tube(space, &space.max_finite_distance()).unwrap().is_subset(&p)
    }

    #[test]
    fn full_tube_generates_immediately() {
        let s = cycle(7);
        let t = tube(&s, &s.max_finite_distance()).unwrap();
        assert_eq!(is_generating(&s, &t, 10).unwrap(), Generation::Generating(1));
    }

    #[test]
    fn bipartite_edges_do_not_generate() {
        for n in [4, 6, 8] {
            let s = cycle(n);
            let e = tube(&s, &rational(1, 1)).unwrap().without_diagonal();
            assert_eq!(is_generating(&s, &e, default_n_max(&s)).unwrap(), Generation::NotGenerating);
            // Parity obstruction: no power up to 2n covers both the diagonal and the edges.
            assert!((1..=2 * n).all(|k| !covered_at(&s, &e, k)));
        }
    }

    #[test]
    fn c5_tube_one_generates() {
        let s = cycle(5);
        let e = tube(&s, &rational(1, 1)).unwrap();
        let found = is_generating(&s, &e, 5).unwrap();
        let least = (1..=5).find(|&k| covered_at(&s, &e, k)).unwrap();
        assert_eq!(found, Generation::Generating(least));
        assert_eq!(least, 2);
    }

    #[test]
    fn odd_cycle_without_diagonal_eventually_generates() {
        let s = cycle(5);
        let e = tube(&s, &rational(1, 1)).unwrap().without_diagonal();
        let least = (1..=25).find(|&k| covered_at(&s, &e, k)).unwrap();
        assert_eq!(is_generating(&s, &e, 25).unwrap(), Generation::Generating(least));
    }

    #[test]
    fn small_budget_is_inconclusive() {
        let s = cycle(9);
        let e = tube(&s, &rational(1, 1)).unwrap();
        assert_eq!(is_generating(&s, &e, 2).unwrap(), Generation::Inconclusive);
        assert_eq!(is_generating(&s, &e, 0), Err(SpaceError::ZeroExponentBound));
    }

    #[test]
    fn empty_set_is_certified() {
        let s = cycle(3);
        let e = ControlledSet::new(&s, []).unwrap();
        assert_eq!(is_generating(&s, &e, 9).unwrap(), Generation::NotGenerating);
    }
}
