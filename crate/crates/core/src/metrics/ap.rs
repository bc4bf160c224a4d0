use super::{MetricsError, Result};

/// Average precision (percent) of one class ranked by `scores`.
///
/// Frames are swept in descending score order; tied scores form a single
/// threshold. AP is `Σ (R_n − R_{n−1}) · P_n` over those thresholds.
pub fn average_precision(scores: &[f64], positives: &[bool]) -> Result<f64> {
    if scores.len() != positives.len() {
        return Err(MetricsError::LengthMismatch {
            pred: scores.len(),
            truth: positives.len(),
        });
    }
    let total_pos = positives.iter().filter(|&&p| p).count();
    if total_pos == 0 {
        return Err(MetricsError::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            tp += usize::from(positives[order[i]]);
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / total_pos as f64;
        let precision = tp as f64 / seen as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(100.0 * ap)
}

/// Macro and support-weighted (micro) means over classes with a defined AP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSummary {
    pub macro_map: f64,
    pub micro_map: f64,
}

/// `per_class_ap[i] == None` marks an undefined class (no positives); such
/// classes are excluded from both means.
pub fn map_report(per_class_ap: &[Option<f64>], per_class_support: &[usize]) -> Result<MapSummary> {
    if per_class_ap.len() != per_class_support.len() {
        return Err(MetricsError::LengthMismatch {
            pred: per_class_ap.len(),
            truth: per_class_support.len(),
        });
    }
    let defined: Vec<(f64, usize)> = per_class_ap
        .iter()
        .zip(per_class_support)
        .filter_map(|(ap, &n)| ap.map(|a| (a, n)))
        .collect();
    if defined.is_empty() {
        return Err(MetricsError::NoDefinedClasses);
    }
    let macro_map = defined.iter().map(|(a, _)| a).sum::<f64>() / defined.len() as f64;
    let weight: usize = defined.iter().map(|(_, n)| n).sum();
    let micro_map = if weight == 0 {
        macro_map
    } else {
        defined.iter().map(|(a, n)| a * *n as f64).sum::<f64>() / weight as f64
    };
    Ok(MapSummary { macro_map, micro_map })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_frame_example() {
        let ap = average_precision(&[0.9, 0.8, 0.7], &[true, false, true]).unwrap();
        assert!((ap - 250.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_ranking() {
        let ap = average_precision(&[0.1, 0.95, 0.2, 0.9], &[false, true, false, true]).unwrap();
        assert_eq!(ap, 100.0);
    }

    #[test]
    fn ties_share_a_threshold() {
        // both frames enter together: P = 1/2 at R = 1
        let ap = average_precision(&[0.5, 0.5], &[true, false]).unwrap();
        assert!((ap - 50.0).abs() < 1e-12);
    }

    #[test]
    fn no_positives_is_undefined() {
        assert_eq!(
            average_precision(&[0.3, 0.2], &[false, false]).unwrap_err(),
            MetricsError::NoPositives
        );
    }

    #[test]
    fn weighting() {
        let s = map_report(&[Some(50.0), Some(100.0)], &[1, 3]).unwrap();
        assert_eq!(s.macro_map, 75.0);
        assert_eq!(s.micro_map, 87.5);
        let s = map_report(&[Some(42.0)], &[7]).unwrap();
        assert_eq!((s.macro_map, s.micro_map), (42.0, 42.0));
        let s = map_report(&[Some(50.0), None, Some(100.0)], &[1, 0, 3]).unwrap();
        assert_eq!(s.micro_map, 87.5);
        assert_eq!(map_report(&[None], &[0]).unwrap_err(), MetricsError::NoDefinedClasses);
    }
}
