use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use fleetsim::queueing::{erlang_c_delay_prob, erlang_f, ln_erlang_f, p0_empty, queue_length_lq};

fn int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `c!/a^c Σ_{m<c} a^m/m!` and the M/M/c delay probability, exactly.
fn exact(c: u64, rho: &BigRational) -> (BigRational, BigRational) {
    let a = rho * int(c);
    let mut term = BigRational::one();
    let mut sum = BigRational::zero();
    for m in 0..c {
        sum += &term;
        term = term * &a / int(m + 1);
    }
    let f = &sum / &term;
    let one = BigRational::one();
    let delay = &one / (&one + (&one - rho) * &f);
    (f, delay)
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn erlang_function_matches_rationals() {
    for c in [1u64, 2, 3, 5, 8, 13, 21, 34, 55] {
        for (num, den) in [(1, 100), (1, 4), (1, 2), (3, 4), (9, 10), (99, 100)] {
            let rho = BigRational::new(BigInt::from(num), BigInt::from(den));
            let r = num as f64 / den as f64;
            let (f, delay) = exact(c, &rho);
            let f = f.to_f64().unwrap();
            let delay = delay.to_f64().unwrap();
            assert!(rel(erlang_f(c, r).unwrap(), f) < 1e-10, "f({c}, {r})");
            assert!((ln_erlang_f(c, r).unwrap() - f.ln()).abs() < 1e-10);
            assert!(rel(erlang_c_delay_prob(c, r).unwrap(), delay) < 1e-10, "C({c}, {r})");
            assert!(rel(queue_length_lq(c, r).unwrap(), delay * r / (1.0 - r)) < 1e-10);
        }
    }
}

#[test]
fn empty_probability_matches_rationals() {
    for c in [1u64, 4, 16, 40] {
        let rho = BigRational::new(BigInt::from(7), BigInt::from(10));
        let a = &rho * int(c);
        let mut term = BigRational::one();
        let mut total = BigRational::zero();
        for m in 0..c {
            total += &term;
            term = term * &a / int(m + 1);
        }
        total += term / (BigRational::one() - &rho);
        let p0 = (BigRational::one() / total).to_f64().unwrap();
        assert!(rel(p0_empty(c, 0.7).unwrap(), p0) < 1e-10);
    }
}

#[test]
fn huge_fleets_stay_in_range() {
    for c in [10_000u64, 1_000_000, 100_000_000] {
        for r in [0.5, 0.9, 0.999] {
            let d = erlang_c_delay_prob(c, r).unwrap();
            assert!((0.0..=1.0).contains(&d));
            assert!(ln_erlang_f(c, r).unwrap().is_finite());
        }
    }
}
