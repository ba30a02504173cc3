//! Expected improvement for maximization.

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `E[max(f - best - xi, 0)]` for `f ~ N(mu, variance)`.
pub fn expected_improvement(mu: f64, variance: f64, best: f64, xi: f64) -> f64 {
    let gap = mu - best - xi;
    let sigma = variance.max(0.0).sqrt();
    if sigma == 0.0 {
        return gap.max(0.0);
    }
    let z = gap / sigma;
    (gap * normal_cdf(z) + sigma * normal_pdf(z)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn no_uncertainty() {
        assert_eq!(expected_improvement(0.5, 0.0, 1.0, 0.0), 0.0);
        assert_eq!(expected_improvement(1.0, 0.0, 1.0, 0.0), 0.0);
        assert_eq!(expected_improvement(1.5, 0.0, 1.0, 0.25), 0.25);
    }

    #[test]
    fn at_the_incumbent() {
        assert!((expected_improvement(0.0, 1.0, 0.0, 0.0) - 0.398_94).abs() < 1e-5);
    }

    #[test]
    fn cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-12);
        assert!(normal_cdf(-40.0) >= 0.0);
    }

    proptest! {
        #[test]
        fn nonnegative(mu in -50.0f64..50.0, var in 0.0f64..100.0, best in -50.0f64..50.0, xi in 0.0f64..1.0) {
            prop_assert!(expected_improvement(mu, var, best, xi) >= 0.0);
        }

        #[test]
        fn grows_with_sigma_below_incumbent(
            mu in -5.0f64..0.0, s1 in 0.0f64..5.0, ds in 0.0f64..5.0, xi in 0.0f64..0.5,
        ) {
            let lo = expected_improvement(mu, s1 * s1, 0.0, xi);
            let hi = expected_improvement(mu, (s1 + ds).powi(2), 0.0, xi);
            prop_assert!(hi >= lo - 1e-15);
        }
    }
}
