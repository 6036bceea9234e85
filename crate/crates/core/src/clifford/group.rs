use std::collections::{HashMap, VecDeque};

use once_cell::sync::{Lazy, OnceCell};
use rand::Rng;

use super::symplectic;
use super::tableau::{check_tableau_qubits, CliffordElement};
use crate::error::{Error, Result};
use crate::pauli::SuperOperator;

/// Fully enumerated Clifford group for a small register.
#[derive(Debug)]
pub struct CliffordGroup {
    n: usize,
    elements: Vec<CliffordElement>,
    index: HashMap<CliffordElement, usize>,
    ptms: OnceCell<Vec<SuperOperator>>,
}

impl CliffordGroup {
    /// Breadth-first closure of `{H_q, S_q, CNOT_{q,q+1}}` from the identity.
    fn closure(n: usize) -> Self {
        let mut generators = Vec::new();
        for q in 0..n {
            generators.push(CliffordElement::hadamard(q, n).expect("valid qubit"));
            generators.push(CliffordElement::phase(q, n).expect("valid qubit"));
        }
        for q in 0..n.saturating_sub(1) {
            generators.push(CliffordElement::cnot(q, q + 1, n).expect("valid qubits"));
        }
        let identity = CliffordElement::identity(n);
        let mut index = HashMap::from([(identity.clone(), 0)]);
        let mut elements = vec![identity];
        let mut frontier = VecDeque::from([0]);
        while let Some(i) = frontier.pop_front() {
            for g in &generators {
                let next = g.compose(&elements[i]).expect("same register");
                if !index.contains_key(&next) {
                    index.insert(next.clone(), elements.len());
                    frontier.push_back(elements.len());
                    elements.push(next);
                }
            }
        }
        Self {
            n,
            elements,
            index,
            ptms: OnceCell::new(),
        }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[CliffordElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, c: &CliffordElement) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub fn contains(&self, c: &CliffordElement) -> bool {
        self.index.contains_key(c)
    }

    /// Transfer matrices of every element, in enumeration order. Built on first use.
    pub fn superoperators(&self) -> &[SuperOperator] {
        self.ptms.get_or_init(|| {
            self.elements
                .iter()
                .map(|c| c.to_superoperator().expect("small register"))
                .collect()
        })
    }
}

static ONE_QUBIT: Lazy<CliffordGroup> = Lazy::new(|| CliffordGroup::closure(1));
static TWO_QUBIT: Lazy<CliffordGroup> = Lazy::new(|| CliffordGroup::closure(2));

/// The enumerated group for `n ∈ {1, 2}`; built once and shared.
pub fn group(n: usize) -> Result<&'static CliffordGroup> {
    match n {
        1 => Ok(&ONE_QUBIT),
        2 => Ok(&TWO_QUBIT),
        _ => Err(Error::UnsupportedDimension {
            n,
            reason: "enumeration is limited to 1 or 2 qubits",
        }),
    }
}

/// All elements of the Clifford group modulo phase, for `n ∈ {1, 2}`.
pub fn enumerate(n: usize) -> Result<Vec<CliffordElement>> {
    Ok(group(n)?.elements().to_vec())
}

/// Uniformly random Clifford. Small registers index into the enumerated
/// table; larger ones use the random-symplectic construction.
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CliffordElement> {
    check_tableau_qubits(n)?;
    Ok(match n {
        1 | 2 => {
            let g = group(n)?;
            g.elements[rng.random_range(0..g.len())].clone()
        }
        _ => symplectic::random_clifford(n, rng),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use std::collections::HashSet;

    #[test]
    fn group_orders() {
        assert_eq!(enumerate(1).unwrap().len(), 24);
        assert_eq!(enumerate(2).unwrap().len(), 11520);
        assert!(matches!(enumerate(3), Err(Error::UnsupportedDimension { .. })));
    }

    #[test]
    fn elements_are_distinct_and_symplectic() {
        for n in [1, 2] {
            let all = enumerate(n).unwrap();
            let set: HashSet<_> = all.iter().collect();
            assert_eq!(set.len(), all.len());
            assert!(all.iter().all(|c| c.is_symplectic()));
        }
    }

    #[test]
    fn closed_under_composition_and_inverse() {
        let g = group(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let a = &g.elements()[rng.random_range(0..g.len())];
            let b = &g.elements()[rng.random_range(0..g.len())];
            assert!(g.contains(&a.compose(b).unwrap()));
            assert!(g.contains(&a.inverse()));
        }
    }

    #[test]
    fn superoperators_are_signed_permutations() {
        for s in group(1).unwrap().superoperators() {
            for row in s.matrix().row_iter() {
                let nonzero: Vec<f64> = row.iter().copied().filter(|v| *v != 0.0).collect();
                assert_eq!(nonzero.len(), 1);
                assert_eq!(nonzero[0].abs(), 1.0);
            }
        }
    }

    fn chi_square_uniform(counts: &[u64], total: u64) -> f64 {
        let expected = total as f64 / counts.len() as f64;
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
        1.0 - dist.cdf(stat)
    }

    #[test]
    fn single_qubit_sampling_is_uniform() {
        let g = group(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 100_000;
        let mut counts = vec![0u64; 24];
        for _ in 0..draws {
            counts[g.index_of(&sample_uniform(1, &mut rng).unwrap()).unwrap()] += 1;
        }
        assert!(chi_square_uniform(&counts, draws) > 0.001);
    }

    #[test]
    fn symplectic_construction_is_uniform_on_two_qubits() {
        // Exercise the n >= 3 code path on a register small enough to enumerate.
        let g = group(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 230_400u64;
        let mut counts = vec![0u64; g.len()];
        for _ in 0..draws {
            let c = symplectic::random_clifford(2, &mut rng);
            counts[g.index_of(&c).expect("sample lies in the group")] += 1;
        }
        assert!(chi_square_uniform(&counts, draws) > 0.001);
    }

    #[test]
    fn two_qubit_samples_lie_in_group() {
        let g = group(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            assert!(g.contains(&sample_uniform(2, &mut rng).unwrap()));
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        for n in [1, 2, 5] {
            let draw = |seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..20)
                    .map(|_| sample_uniform(n, &mut rng).unwrap())
                    .collect::<Vec<_>>()
            };
            assert_eq!(draw(17), draw(17));
            assert_ne!(draw(17), draw(18));
        }
    }
}
