//! Standard genetic code (NCBI translation table 1).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amino acids for every codon in lexicographic `ACGT` order (`AAA`, `AAC`, ... `TTT`).
const TABLE_1: &[u8; 64] = b"KNKNTTTTRSRSIIMIQHQHPPPPRRRRLLLLEDEDAAAAGGGGVVVV*Y*YSSSS*CWCLFLF";

pub const STOP: char = '*';

fn base_rank(b: u8) -> Option<usize> {
    match b {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        _ => None,
    }
}

/// An unambiguous DNA triplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Codon([u8; 3]);

impl Codon {
    pub fn new(bases: [u8; 3]) -> Result<Self> {
        let up = bases.map(|b| b.to_ascii_uppercase());
        if up.iter().all(|&b| base_rank(b).is_some()) {
            Ok(Self(up))
        } else {
            let text = String::from_utf8_lossy(&bases).into_owned();
            if up.iter().all(|b| b"ACGTN".contains(b)) {
                Err(Error::Untranslatable(text))
            } else {
                Err(Error::Query(format!("'{text}' is not a DNA triplet")))
            }
        }
    }

    pub fn bases(&self) -> [u8; 3] {
        self.0
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).expect("ACGT bytes")
    }

    /// Index into the 64-entry table.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| acc * 4 + base_rank(b).expect("validated base"))
    }

    pub fn amino_acid(&self) -> char {
        TABLE_1[self.index()] as char
    }

    /// 1-based index of the first position where the two codons differ.
    pub fn first_difference(&self, other: &Codon) -> Option<usize> {
        self.0.iter().zip(other.0.iter()).position(|(a, b)| a != b).map(|i| i + 1)
    }

    /// All 64 codons in lexicographic order.
    pub fn all() -> impl Iterator<Item = Codon> {
        const BASES: [u8; 4] = *b"ACGT";
        (0..64).map(|i| Codon([BASES[i / 16], BASES[(i / 4) % 4], BASES[i % 4]]))
    }
}

impl FromStr for Codon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.trim().as_bytes();
        match b {
            [x, y, z] => Codon::new([*x, *y, *z]),
            _ => Err(Error::Query(format!("'{s}' is not a DNA triplet"))),
        }
    }
}

impl TryFrom<String> for Codon {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Codon> for String {
    fn from(c: Codon) -> String {
        c.as_str().to_string()
    }
}

impl fmt::Display for Codon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Translates a triplet given as raw bases. Triplets containing `N` are untranslatable.
pub fn translate(triplet: &[u8]) -> Result<char> {
    let text = || String::from_utf8_lossy(triplet).into_owned();
    match triplet {
        [a, b, c] => {
            let codon = Codon::new([*a, *b, *c]).map_err(|_| Error::Untranslatable(text()))?;
            Ok(codon.amino_acid())
        }
        _ => Err(Error::Untranslatable(text())),
    }
}
