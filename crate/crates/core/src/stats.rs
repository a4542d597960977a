//! Two-sample tests for comparing experiment cells: a 2x2 chi-squared test
//! for proportions and Welch's unequal-variance t-test for means.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum StatsError {
    #[error("contingency table has an empty row or column")]
    DegenerateTable,
    #[error("each sample needs at least two values")]
    SampleTooSmall,
    #[error("both samples have zero variance and different means")]
    ZeroVariance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

/// Pearson's chi-squared on `[[a, b], [c, d]]` without continuity
/// correction, one degree of freedom.
pub fn chi_squared_2x2(a: u64, b: u64, c: u64, d: u64) -> Result<TestResult, StatsError> {
    let [a, b, c, d] = [a, b, c, d].map(|x| x as f64);
    let (r1, r2, c1, c2) = (a + b, c + d, a + c, b + d);
    if r1 == 0.0 || r2 == 0.0 || c1 == 0.0 || c2 == 0.0 {
        return Err(StatsError::DegenerateTable);
    }
    let n = r1 + r2;
    let det = a * d - b * c;
    let statistic = n * det * det / (r1 * r2 * c1 * c2);
    Ok(TestResult {
        statistic,
        dof: 1.0,
        p_value: chi_squared_sf(statistic, 1.0),
    })
}

/// Two-sided Welch t-test.
pub fn welch_t(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    if x.len() < 2 || y.len() < 2 {
        return Err(StatsError::SampleTooSmall);
    }
    let (mx, vx) = mean_var(x);
    let (my, vy) = mean_var(y);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (sx, sy) = (vx / nx, vy / ny);
    let se2 = sx + sy;
    if se2 == 0.0 {
        if mx == my {
            return Ok(TestResult {
                statistic: 0.0,
                dof: nx + ny - 2.0,
                p_value: 1.0,
            });
        }
        return Err(StatsError::ZeroVariance);
    }
    let statistic = (mx - my) / se2.sqrt();
    let dof = se2 * se2 / (sx * sx / (nx - 1.0) + sy * sy / (ny - 1.0));
    Ok(TestResult {
        statistic,
        dof,
        p_value: student_t_two_sided(statistic, dof),
    })
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

pub fn chi_squared_sf(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(k / 2.0, x / 2.0)
}

pub fn student_t_two_sided(t: f64, dof: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    beta_reg(dof / 2.0, 0.5, dof / (dof + t * t))
}

/// Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

const EPS: f64 = 1e-15;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    // Modified Lentz.
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_fraction(a: f64, b: f64, x: f64) -> f64 {
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn equal_proportions_give_p_one() {
        let r = chi_squared_2x2(50, 50, 50, 50).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn table_135_865_54_946() {
        // 189 of 2000 in column one; the expected counts are 94.5 per row.
        let r = chi_squared_2x2(135, 865, 54, 946).unwrap();
        let (n, det) = (2000.0, 135.0 * 946.0 - 865.0 * 54.0);
        let by_hand = n * det * det / (1000.0 * 1000.0 * 189.0 * 1811.0);
        assert!(close(r.statistic, by_hand, 1e-12));
        assert!((r.statistic - 38.34).abs() < 0.01);
        assert!(r.p_value < 0.001);
    }

    #[test]
    fn identical_samples_give_t_zero() {
        let x = [0.1, 0.4, 0.35, 0.8];
        let r = welch_t(&x, &x).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(chi_squared_2x2(0, 0, 3, 4), Err(StatsError::DegenerateTable));
        assert_eq!(chi_squared_2x2(0, 5, 0, 4), Err(StatsError::DegenerateTable));
        assert_eq!(welch_t(&[1.0], &[1.0, 2.0]), Err(StatsError::SampleTooSmall));
        assert_eq!(welch_t(&[1.0, 1.0], &[2.0, 2.0]), Err(StatsError::ZeroVariance));
    }

    #[test]
    fn welch_reference_value() {
        // Classic textbook pair; t and dof checked against a hand computation.
        let x = [27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4];
        let y = [27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 20.5, 24.4];
        let r = welch_t(&x, &y).unwrap();
        assert!((r.statistic - -2.46).abs() < 0.005);
        assert!((r.dof - 24.988).abs() < 0.01);
        assert!((r.p_value - 0.021).abs() < 0.001);
    }

    proptest! {
        #[test]
        fn chi_squared_matches_statrs(x in 0.01f64..80.0, k in 1u32..6) {
            let oracle = 1.0 - ChiSquared::new(k as f64).unwrap().cdf(x);
            prop_assert!(close(chi_squared_sf(x, k as f64), oracle, 1e-9));
        }

        #[test]
        fn t_matches_statrs(t in -12.0f64..12.0, dof in 1.0f64..400.0) {
            let dist = StudentsT::new(0.0, 1.0, dof).unwrap();
            let oracle = 2.0 * (1.0 - dist.cdf(t.abs()));
            prop_assert!((student_t_two_sided(t, dof) - oracle).abs() < 1e-9);
        }

        #[test]
        fn chi_squared_symmetric_under_row_swap(a in 0u64..300, b in 1u64..300, c in 1u64..300, d in 0u64..300) {
            let p = chi_squared_2x2(a, b, c, d).unwrap().p_value;
            let q = chi_squared_2x2(c, d, a, b).unwrap().p_value;
            prop_assert!((p - q).abs() < 1e-12);
        }

        #[test]
        fn welch_symmetric_under_sample_swap(
            x in proptest::collection::vec(0.0f64..1.0, 2..30),
            y in proptest::collection::vec(0.0f64..1.0, 2..30),
        ) {
            if let (Ok(r), Ok(s)) = (welch_t(&x, &y), welch_t(&y, &x)) {
                prop_assert!((r.p_value - s.p_value).abs() < 1e-12);
                prop_assert!((r.statistic + s.statistic).abs() < 1e-12);
            }
        }
    }
}
