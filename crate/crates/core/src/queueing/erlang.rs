//! Overflow-safe M/M/c quantities.
//!
//! With offered load `a = cρ`, the Erlang function
//! `f(c, ρ) = c!/(a^c) Σ_{m<c} a^m/m!` is evaluated as
//! `exp[ln c! - c ln a + a] · F_Poisson(c-1; a)`, entirely in log space.

use super::special::ErlangTerms;
use super::QueueError;

fn check(c: u64, rho: f64) -> Result<(), QueueError> {
    if c == 0 {
        return Err(QueueError::InvalidParameter("c must be >= 1".into()));
    }
    if rho.is_nan() || rho <= 0.0 {
        return Err(QueueError::InvalidParameter(format!("rho must be > 0, got {rho}")));
    }
    if rho >= 1.0 {
        return Err(QueueError::Unstable { rho });
    }
    Ok(())
}

/// `ln f(c, ρ)`.
pub fn ln_erlang_f(c: u64, rho: f64) -> Result<f64, QueueError> {
    check(c, rho)?;
    let terms = ErlangTerms::new(c as f64, rho);
    Ok(terms.log_scale + terms.ln_poisson_cdf())
}

/// `f(c, ρ)`; `+inf` when the value exceeds the f64 range (use
/// [`ln_erlang_f`] there).
pub fn erlang_f(c: u64, rho: f64) -> Result<f64, QueueError> {
    ln_erlang_f(c, rho).map(f64::exp)
}

/// Probability that an arriving request has to wait:
/// `C = 1 / (1 + (1 - ρ) f(c, ρ))`.
pub fn erlang_c_delay_prob(c: u64, rho: f64) -> Result<f64, QueueError> {
    let x = (1.0 - rho).ln() + ln_erlang_f(c, rho)?;
    // logistic(-x) without overflow
    Ok(if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    })
}

/// `ln P0`, the log probability of an empty system.
pub fn ln_p0_empty(c: u64, rho: f64) -> Result<f64, QueueError> {
    check(c, rho)?;
    let terms = ErlangTerms::new(c as f64, rho);
    let pmf_c = (-terms.log_scale).exp();
    let a = c as f64 * rho;
    // P0 = e^-a / (F(c-1; a) + pmf(c; a) / (1 - ρ))
    Ok(-a - (terms.poisson_cdf() + pmf_c / (1.0 - rho)).ln())
}

/// Probability of an empty system,
/// `P0 = [Σ_{m<c} a^m/m! + a^c / (c! (1-ρ))]^-1`.
pub fn p0_empty(c: u64, rho: f64) -> Result<f64, QueueError> {
    ln_p0_empty(c, rho).map(f64::exp)
}

/// Mean number of waiting requests, `Lq = C ρ / (1 - ρ)`.
pub fn queue_length_lq(c: u64, rho: f64) -> Result<f64, QueueError> {
    Ok(erlang_c_delay_prob(c, rho)? * rho / (1.0 - rho))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn erlang_f_small_cases() {
        assert!(close(erlang_f(1, 0.5).unwrap(), 2.0, 1e-14));
        assert!(close(erlang_f(2, 0.5).unwrap(), 4.0, 1e-14));
        assert!(close(erlang_f(3, 1.0 / 3.0).unwrap(), 15.0, 1e-14));
    }

    #[test]
    fn delay_probability_closed_forms() {
        assert!(close(erlang_c_delay_prob(1, 0.5).unwrap(), 0.5, 1e-14));
        assert!(close(erlang_c_delay_prob(2, 0.5).unwrap(), 1.0 / 3.0, 1e-14));
        let big = erlang_c_delay_prob(2000, 0.99).unwrap();
        assert!(big.is_finite() && big > 0.0 && big < 1.0);
    }

    #[test]
    fn empty_probability_closed_forms() {
        assert!(close(p0_empty(1, 0.3).unwrap(), 0.7, 1e-14));
        assert!(close(p0_empty(2, 0.5).unwrap(), 1.0 / 3.0, 1e-14));
        assert!(p0_empty(5, 1e-9).unwrap() > 1.0 - 1e-6);
    }

    #[test]
    fn queue_length_closed_forms() {
        assert!(close(queue_length_lq(1, 0.3).unwrap(), 0.09 / 0.7, 1e-13));
        assert!(close(queue_length_lq(2, 0.5).unwrap(), 1.0 / 3.0, 1e-13));
        let lq = queue_length_lq(10, 0.999_999).unwrap();
        assert!(lq.is_finite() && lq > 1e5);
    }

    #[test]
    fn rejects_unstable_and_degenerate() {
        assert!(matches!(erlang_f(3, 1.0), Err(QueueError::Unstable { .. })));
        assert!(matches!(queue_length_lq(3, 1.2), Err(QueueError::Unstable { .. })));
        assert!(matches!(p0_empty(3, 0.0), Err(QueueError::InvalidParameter(_))));
        assert!(matches!(erlang_c_delay_prob(0, 0.5), Err(QueueError::InvalidParameter(_))));
    }

    #[test]
    fn huge_c_stays_in_range() {
        let c = 1_000_000;
        for rho in [0.5, 0.9, 0.999] {
            let pw = erlang_c_delay_prob(c, rho).unwrap();
            let p0 = p0_empty(c, rho).unwrap();
            let lq = queue_length_lq(c, rho).unwrap();
            assert!((0.0..=1.0).contains(&pw), "{rho}: {pw}");
            assert!((0.0..=1.0).contains(&p0), "{rho}: {p0}");
            assert!(lq.is_finite() && lq >= 0.0);
            assert!(ln_erlang_f(c, rho).unwrap().is_finite());
        }
    }
}
