//! Entropy, cross entropy and relative entropy of mixed strategies.

/// `−Σ x_β log x_β`, with `0 log 0 = 0`.
pub fn entropy(x: &[f64]) -> f64 {
    -x.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

/// `−Σ_{q_α > 0} q_α log x_α`; `+∞` when `x` misses part of `q`'s support.
pub fn cross_entropy(q: &[f64], x: &[f64]) -> f64 {
    debug_assert_eq!(q.len(), x.len());
    let mut total = 0.0;
    for (&qa, &xa) in q.iter().zip(x) {
        if qa > 0.0 {
            if xa <= 0.0 {
                return f64::INFINITY;
            }
            total -= qa * xa.ln();
        }
    }
    total
}

/// `Σ_{q_α > 0} q_α log(q_α / x_α)`; `+∞` exactly when `supp(q) ⊄ supp(x)`.
///
/// Evaluated term by term rather than as `cross_entropy − entropy` so that it
/// stays nonnegative under rounding.
pub fn kl_divergence(q: &[f64], x: &[f64]) -> f64 {
    debug_assert_eq!(q.len(), x.len());
    let mut total = 0.0;
    for (&qa, &xa) in q.iter().zip(x) {
        if qa > 0.0 {
            if xa <= 0.0 {
                return f64::INFINITY;
            }
            total += qa * (qa / xa).ln();
        }
    }
    total.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[0.0, 1.0, 0.0]), 0.0);
        assert!((entropy(&[0.2; 5]) - 5f64.ln()).abs() < 1e-15);
        let e = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((entropy(&[0.75, 0.25]) - e).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_examples() {
        let q = [0.3, 0.7];
        assert!((cross_entropy(&q, &q) - entropy(&q)).abs() < 1e-15);
        assert!((cross_entropy(&[1.0, 0.0], &[0.5, 0.5]) - LN_2).abs() < 1e-15);
        assert_eq!(cross_entropy(&[1.0, 0.0], &[0.0, 1.0]), f64::INFINITY);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.4, 0.6], &[0.4, 0.6]), 0.0);
        assert!((kl_divergence(&[1.0, 0.0], &[0.5, 0.5]) - LN_2).abs() < 1e-15);
        let expected = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert!((kl_divergence(&[0.5, 0.5], &[0.25, 0.75]) - expected).abs() < 1e-15);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
        assert!(kl_divergence(&[0.0, 1.0], &[0.5, 0.5]).is_finite());
    }

    fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.001f64..1.0, n).prop_map(|w| {
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect()
        })
    }

    proptest! {
        #[test]
        fn kl_nonnegative_and_decomposes((q, x) in (2usize..6).prop_flat_map(|n| (simplex(n), simplex(n)))) {
            let kl = kl_divergence(&q, &x);
            prop_assert!(kl >= 0.0);
            prop_assert!((cross_entropy(&q, &x) - (entropy(&q) + kl)).abs() < 1e-12);
            let far = q.iter().zip(&x).any(|(a, b)| (a - b).abs() > 1e-6);
            if far {
                prop_assert!(kl > 0.0);
            }
        }
    }
}
