//! Minimal-length words for single-qubit Cliffords over the pulse set
//! `{I, X±π/2, Xπ, Y±π/2, Yπ}`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use once_cell::sync::Lazy;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::group::group;
use super::tableau::{named, CliffordElement};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pulse {
    I,
    X90,
    Xm90,
    X180,
    Y90,
    Ym90,
    Y180,
}

impl Pulse {
    pub const ALL: [Pulse; 7] = [
        Pulse::I,
        Pulse::X90,
        Pulse::Xm90,
        Pulse::X180,
        Pulse::Y90,
        Pulse::Ym90,
        Pulse::Y180,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pulse::I => "I",
            Pulse::X90 => "X90",
            Pulse::Xm90 => "Xm90",
            Pulse::X180 => "X180",
            Pulse::Y90 => "Y90",
            Pulse::Ym90 => "Ym90",
            Pulse::Y180 => "Y180",
        }
    }

    pub fn unitary(self) -> DMatrix<Complex64> {
        named::single_unitary(self.name()).expect("pulse names are known gates")
    }

    pub fn element(self) -> CliffordElement {
        named::single(self.name()).expect("pulse names are known gates")
    }
}

impl fmt::Display for Pulse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pulse {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pulse::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown pulse '{s}'")))
    }
}

/// Pulses in time order: `pulses[0]` is applied first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub pulses: Vec<Pulse>,
}

impl PulseSequence {
    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// The Clifford implemented by the sequence.
    pub fn element(&self) -> CliffordElement {
        self.pulses
            .iter()
            .fold(CliffordElement::identity(1), |acc, p| {
                p.element().compose(&acc).expect("single qubit")
            })
    }

    /// Product of pulse unitaries, last pulse leftmost.
    pub fn unitary(&self) -> DMatrix<Complex64> {
        self.pulses
            .iter()
            .fold(DMatrix::identity(2, 2), |acc, p| p.unitary() * acc)
    }
}

impl fmt::Display for PulseSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.pulses.iter().map(|p| p.name()).collect();
        f.write_str(&names.join(" "))
    }
}

/// For each element of the enumerated single-qubit group, every minimal word.
static MINIMAL_WORDS: Lazy<Vec<Vec<Vec<Pulse>>>> = Lazy::new(|| {
    let g = group(1).expect("single-qubit group");
    let mut words: Vec<Vec<Vec<Pulse>>> = vec![Vec::new(); g.len()];
    // The identity is realized by the explicit idle pulse.
    let mut level: Vec<(Vec<Pulse>, CliffordElement)> = Pulse::ALL
        .iter()
        .map(|&p| (vec![p], p.element()))
        .collect();
    while words.iter().any(Vec::is_empty) {
        let mut found = Vec::new();
        for (word, element) in &level {
            let i = g.index_of(element).expect("pulses generate the group");
            if words[i].is_empty() || words[i][0].len() == word.len() {
                found.push((i, word.clone()));
            }
        }
        for (i, word) in found {
            if words[i].is_empty() || words[i][0].len() == word.len() {
                words[i].push(word);
            }
        }
        // Idle pulses never shorten a word, so only extend with real rotations.
        level = level
            .iter()
            .filter(|(w, _)| !w.contains(&Pulse::I))
            .flat_map(|(w, e)| {
                Pulse::ALL[1..].iter().map(move |&p| {
                    let mut w = w.clone();
                    w.push(p);
                    (w, p.element().compose(e).expect("single qubit"))
                })
            })
            .collect();
    }
    words
});

/// Every minimal-length pulse word for a single-qubit Clifford.
pub fn minimal_words(c: &CliffordElement) -> Result<&'static [Vec<Pulse>]> {
    if c.qubits() != 1 {
        return Err(Error::UnsupportedDimension {
            n: c.qubits(),
            reason: "pulse decomposition is single-qubit only",
        });
    }
    let i = group(1)?.index_of(c).expect("every 1-qubit tableau is enumerated");
    Ok(&MINIMAL_WORDS[i])
}

/// A minimal-length word, chosen uniformly among ties.
pub fn decompose_minimal<R: Rng + ?Sized>(c: &CliffordElement, rng: &mut R) -> Result<PulseSequence> {
    let words = minimal_words(c)?;
    let pulses = words[rng.random_range(0..words.len())].clone();
    Ok(PulseSequence { pulses })
}

/// Number of group elements per minimal pulse count.
pub fn minimal_length_histogram() -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for words in MINIMAL_WORDS.iter() {
        *hist.entry(words[0].len()).or_insert(0) += 1;
    }
    hist
}

/// Mean minimal pulse count over the single-qubit group.
pub fn average_minimal_length() -> f64 {
    let total: usize = MINIMAL_WORDS.iter().map(|w| w[0].len()).sum();
    total as f64 / MINIMAL_WORDS.len() as f64
}
