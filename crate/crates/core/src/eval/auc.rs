use crate::error::{Error, Result};

/// Area under the ROC curve via the Mann-Whitney rank statistic.
/// Tied scores share their average rank, so a tie counts as half a win.
pub fn auc(positives: &[f64], negatives: &[f64]) -> Result<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::EmptyScores);
    }
    if let Some(&bad) = positives.iter().chain(negatives).find(|v| !v.is_finite()) {
        return Err(Error::NonFiniteScore(bad));
    }
    let mut all: Vec<(f64, bool)> = positives
        .iter()
        .map(|&v| (v, true))
        .chain(negatives.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // ranks are 1-based: i+1 ..= j+1
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        let hits = all[i..=j].iter().filter(|e| e.1).count();
        pos_rank_sum += midrank * hits as f64;
        i = j + 1;
    }
    let p = positives.len() as f64;
    let n = negatives.len() as f64;
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_inverted() {
        assert_eq!(auc(&[0.9, 0.8], &[0.1, 0.2]).unwrap(), 1.0);
        assert_eq!(auc(&[0.1], &[0.9, 0.8]).unwrap(), 0.0);
    }

    #[test]
    fn all_tied_is_half() {
        assert_eq!(auc(&[0.5; 3], &[0.5; 7]).unwrap(), 0.5);
    }

    #[test]
    fn hand_example() {
        // pairs: (0.8>0.3) (0.8>0.5) (0.5=0.5) (0.5>0.3) -> 3.5 / 4
        assert_eq!(auc(&[0.8, 0.5], &[0.3, 0.5]).unwrap(), 0.875);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(auc(&[], &[0.1]), Err(Error::EmptyScores)));
        assert!(matches!(auc(&[f64::NAN], &[0.1]), Err(Error::NonFiniteScore(_))));
    }
}
