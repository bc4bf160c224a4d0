use super::{MetricsError, Result};

/// Run-length collapsed label sequence; no two adjacent entries are equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentSequence<T>(Vec<T>);

impl<T: PartialEq + Clone> SegmentSequence<T> {
    pub fn labels(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Collapses consecutive duplicates.
pub fn run_length_segments<T: PartialEq + Clone>(labels: &[T]) -> Result<SegmentSequence<T>> {
    if labels.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut out: Vec<T> = Vec::new();
    for l in labels {
        if out.last() != Some(l) {
            out.push(l.clone());
        }
    }
    Ok(SegmentSequence(out))
}

/// Unit-cost Levenshtein distance.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `100 · (1 − d / max(|P|, |G|))` over run-length segments of both inputs.
pub fn edit_score<T: PartialEq + Clone>(pred: &[T], truth: &[T]) -> Result<f64> {
    let p = run_length_segments(pred)?;
    let g = run_length_segments(truth)?;
    let d = levenshtein(p.labels(), g.labels());
    let norm = p.len().max(g.len()) as f64;
    Ok(100.0 * (1.0 - d as f64 / norm))
}
