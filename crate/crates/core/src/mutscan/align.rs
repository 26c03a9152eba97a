//! Needleman-Wunsch global alignment with a linear gap penalty.

use serde::{Deserialize, Serialize};

use crate::seqio::DnaSequence;

pub const GAP: u8 = b'-';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scoring {
    pub match_score: i32,
    pub mismatch: i32,
    pub gap: i32,
}

impl Default for Scoring {
    fn default() -> Self {
        Self { match_score: 1, mismatch: -1, gap: -2 }
    }
}

impl Scoring {
    fn pair(&self, a: u8, b: u8) -> i32 {
        if a == b {
            self.match_score
        } else {
            self.mismatch
        }
    }

    /// Scores an already gapped pair of rows.
    pub fn score_rows(&self, a: &[u8], b: &[u8]) -> i32 {
        a.iter().zip(b).map(|(&x, &y)| if x == GAP || y == GAP { self.gap } else { self.pair(x, y) }).sum()
    }
}

/// Two gapped rows of equal length plus the alignment score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentResult {
    pub aligned_normal: Vec<u8>,
    pub aligned_patient: Vec<u8>,
    pub score: i32,
}

impl AlignmentResult {
    pub fn len(&self) -> usize {
        self.aligned_normal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aligned_normal.is_empty()
    }

    pub fn gap_count(&self) -> usize {
        self.aligned_normal.iter().chain(&self.aligned_patient).filter(|&&b| b == GAP).count()
    }

    pub fn ungapped_normal(&self) -> Vec<u8> {
        self.aligned_normal.iter().copied().filter(|&b| b != GAP).collect()
    }

    pub fn ungapped_patient(&self) -> Vec<u8> {
        self.aligned_patient.iter().copied().filter(|&b| b != GAP).collect()
    }
}

#[derive(Clone, Copy)]
enum Step {
    Diag,
    Up,
    Left,
}

/// Optimal global alignment of `patient` against `normal`.
///
/// Traceback prefers the diagonal, then a gap in the patient row, then a gap in the normal row.
pub fn align_global(normal: &DnaSequence, patient: &DnaSequence, scoring: Scoring) -> AlignmentResult {
    align_bytes(normal.residues(), patient.residues(), scoring)
}

pub(crate) fn align_bytes(a: &[u8], b: &[u8], s: Scoring) -> AlignmentResult {
    let (n, m) = (a.len(), b.len());
    let width = m + 1;
    let mut score = vec![0i32; (n + 1) * width];
    let mut trace = vec![Step::Diag; (n + 1) * width];

    for i in 1..=n {
        score[i * width] = i as i32 * s.gap;
        trace[i * width] = Step::Up;
    }
    for j in 1..=m {
        score[j] = j as i32 * s.gap;
        trace[j] = Step::Left;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = score[(i - 1) * width + j - 1] + s.pair(a[i - 1], b[j - 1]);
            let up = score[(i - 1) * width + j] + s.gap;
            let left = score[i * width + j - 1] + s.gap;
            let (best, step) = if diag >= up && diag >= left {
                (diag, Step::Diag)
            } else if up >= left {
                (up, Step::Up)
            } else {
                (left, Step::Left)
            };
            score[i * width + j] = best;
            trace[i * width + j] = step;
        }
    }

    let mut ra = Vec::with_capacity(n + m);
    let mut rb = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match trace[i * width + j] {
            Step::Diag => {
                i -= 1;
                j -= 1;
                ra.push(a[i]);
                rb.push(b[j]);
            }
            Step::Up => {
                i -= 1;
                ra.push(a[i]);
                rb.push(GAP);
            }
            Step::Left => {
                j -= 1;
                ra.push(GAP);
                rb.push(b[j]);
            }
        }
    }
    ra.reverse();
    rb.reverse();

    AlignmentResult { aligned_normal: ra, aligned_patient: rb, score: score[n * width + m] }
}
