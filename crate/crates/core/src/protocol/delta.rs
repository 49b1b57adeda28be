use thiserror::Error;

use crate::cga::ProbabilityVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeltaError {
    #[error("vectors differ in shape: length {left} vs {right}, N {left_n} vs {right_n}")]
    ShapeMismatch {
        left: usize,
        right: usize,
        left_n: u64,
        right_n: u64,
    },
    #[error("gene index {gene} out of range for length {length}")]
    GeneOutOfRange { gene: usize, length: usize },
    #[error("gene indices must be strictly ascending (index {0} repeats or goes backwards)")]
    NotAscending(usize),
    #[error("delta for gene {0} is zero")]
    ZeroDelta(usize),
}

/// Sparse count differences a worker accumulated since its last snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DeltaReport {
    entries: Vec<(usize, i64)>,
    evaluations: u64,
}

impl DeltaReport {
    pub fn new(entries: Vec<(usize, i64)>, evaluations: u64) -> Result<Self, DeltaError> {
        let mut prev: Option<usize> = None;
        for &(gene, delta) in &entries {
            if prev.is_some_and(|p| gene <= p) {
                return Err(DeltaError::NotAscending(gene));
            }
            if delta == 0 {
                return Err(DeltaError::ZeroDelta(gene));
            }
            prev = Some(gene);
        }
        Ok(Self {
            entries,
            evaluations,
        })
    }

    pub fn entries(&self) -> &[(usize, i64)] {
        &self.entries
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn check_shape(a: &ProbabilityVector, b: &ProbabilityVector) -> Result<(), DeltaError> {
    if a.len() != b.len() || a.population_size() != b.population_size() {
        return Err(DeltaError::ShapeMismatch {
            left: a.len(),
            right: b.len(),
            left_n: a.population_size(),
            right_n: b.population_size(),
        });
    }
    Ok(())
}

pub fn compute_delta(
    snapshot: &ProbabilityVector,
    local: &ProbabilityVector,
    evaluations: u64,
) -> Result<DeltaReport, DeltaError> {
    check_shape(snapshot, local)?;
    let entries = snapshot
        .counts()
        .iter()
        .zip(local.counts())
        .enumerate()
        .filter(|(_, (s, l))| s != l)
        .map(|(gene, (&s, &l))| (gene, l as i64 - s as i64))
        .collect();
    Ok(DeltaReport {
        entries,
        evaluations,
    })
}

/// What a merge did to the manager's vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MergeOutcome {
    /// Genes whose addition hit 0 or N and was cut short.
    pub clamped: usize,
}

/// Adds a report into `manager`, saturating every count at `[0, N]`.
/// Either every entry is applied or, on error, none is.
pub fn merge_delta(
    manager: &mut ProbabilityVector,
    report: &DeltaReport,
) -> Result<MergeOutcome, DeltaError> {
    if let Some(&(gene, _)) = report.entries.last() {
        if gene >= manager.len() {
            return Err(DeltaError::GeneOutOfRange {
                gene,
                length: manager.len(),
            });
        }
    }
    let mut outcome = MergeOutcome::default();
    for &(gene, delta) in &report.entries {
        if manager.add_clamped(gene, delta) {
            outcome.clamped += 1;
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(counts: &[u64], n: u64) -> ProbabilityVector {
        ProbabilityVector::from_counts(counts.to_vec(), n).unwrap()
    }

    #[test]
    fn compute_examples() {
        let d = compute_delta(&pv(&[5, 5], 10), &pv(&[6, 4], 10), 8).unwrap();
        assert_eq!(d.entries(), &[(0, 1), (1, -1)]);
        assert_eq!(d.evaluations(), 8);

        let d = compute_delta(&pv(&[5, 5], 10), &pv(&[5, 5], 10), 16).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.evaluations(), 16);

        assert!(compute_delta(&pv(&[0, 5], 10), &pv(&[0, 5], 10), 8)
            .unwrap()
            .is_empty());
        assert!(matches!(
            compute_delta(&pv(&[5, 5], 10), &pv(&[5, 5, 5], 10), 8),
            Err(DeltaError::ShapeMismatch { .. })
        ));
        assert!(compute_delta(&pv(&[5, 5], 10), &pv(&[5, 5], 12), 8).is_err());
    }

    #[test]
    fn merge_examples() {
        let report = DeltaReport::new(vec![(0, 1), (1, -1)], 8).unwrap();
        let mut m = pv(&[6, 5], 10);
        assert_eq!(merge_delta(&mut m, &report).unwrap().clamped, 0);
        assert_eq!(m.counts(), &[7, 4]);

        let mut m = pv(&[10, 3], 10);
        let out = merge_delta(&mut m, &DeltaReport::new(vec![(0, 2)], 8).unwrap()).unwrap();
        assert_eq!(m.counts(), &[10, 3]);
        assert_eq!(out.clamped, 1);

        let mut m = pv(&[4, 4], 10);
        merge_delta(&mut m, &DeltaReport::default()).unwrap();
        assert_eq!(m.counts(), &[4, 4]);
    }

    #[test]
    fn merge_rejects_bad_index_atomically() {
        let mut m = pv(&[4, 4], 10);
        let report = DeltaReport::new(vec![(0, 1), (2, 1)], 8).unwrap();
        assert_eq!(
            merge_delta(&mut m, &report),
            Err(DeltaError::GeneOutOfRange { gene: 2, length: 2 })
        );
        assert_eq!(m.counts(), &[4, 4]);
    }

    #[test]
    fn report_validation() {
        assert_eq!(
            DeltaReport::new(vec![(1, 1), (1, 2)], 0),
            Err(DeltaError::NotAscending(1))
        );
        assert_eq!(
            DeltaReport::new(vec![(3, 1), (2, 2)], 0),
            Err(DeltaError::NotAscending(2))
        );
        assert_eq!(
            DeltaReport::new(vec![(0, 0)], 0),
            Err(DeltaError::ZeroDelta(0))
        );
    }

    #[test]
    fn merge_order_matters_only_when_clamping() {
        let a = DeltaReport::new(vec![(0, 3), (1, -2)], 8).unwrap();
        let b = DeltaReport::new(vec![(0, -1), (1, 4)], 8).unwrap();

        // interior: no clamping, order irrelevant
        let mut ab = pv(&[5, 5], 10);
        let mut ba = ab.clone();
        merge_delta(&mut ab, &a).unwrap();
        merge_delta(&mut ab, &b).unwrap();
        merge_delta(&mut ba, &b).unwrap();
        merge_delta(&mut ba, &a).unwrap();
        assert_eq!(ab, ba);
        assert_eq!(ab.counts(), &[7, 7]);

        // near the top bound the first merge saturates and loses mass
        let mut ab = pv(&[9, 5], 10);
        let mut ba = ab.clone();
        merge_delta(&mut ab, &a).unwrap(); // 9+3 -> 10
        merge_delta(&mut ab, &b).unwrap(); // 10-1 -> 9
        merge_delta(&mut ba, &b).unwrap(); // 9-1 -> 8
        merge_delta(&mut ba, &a).unwrap(); // 8+3 -> 10 (clamped)
        assert_eq!(ab.counts()[0], 9);
        assert_eq!(ba.counts()[0], 10);
        assert_ne!(ab, ba);
    }
}
