//! Log-space special functions behind the Erlang quantities.

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Asymptotic tail of Stirling's series: `lnΓ(z) - [(z-½)ln z - z + ½ln 2π]`.
/// Accurate to ~1e-16 for `z >= 15`.
fn stirling_tail(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    inv * (1.0 / 12.0
        - inv2
            * (1.0 / 360.0
                - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))))
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    if x < 15.0 {
        // lnΓ(x) = lnΓ(x + n) - ln(x (x+1) ... (x+n-1))
        let mut z = x;
        let mut prod = 1.0;
        while z < 15.0 {
            prod *= z;
            z += 1.0;
        }
        return ln_gamma(z) - prod.ln();
    }
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_tail(x)
}

/// `ln(c!) - (c ln c - c)` without the large cancellation of the naive form.
pub(crate) fn ln_factorial_remainder(c: f64) -> f64 {
    if c < 15.0 {
        return ln_gamma(c + 1.0) - (c * c.ln() - c);
    }
    // ln c! = lnΓ(c+1) = (c+½)ln(c+1) - (c+1) + ½ln2π + tail(c+1)
    c * (1.0 / c).ln_1p() + 0.5 * (c + 1.0).ln() - 1.0 + LN_SQRT_2PI + stirling_tail(c + 1.0)
}

/// Pieces of the Erlang function at `c` servers and utilization `rho`,
/// with offered load `a = c·rho`:
///
/// * `log_scale` is `ln c! - c ln a + a`, so `e^-log_scale` is the Poisson
///   probability mass at `c` with mean `a`;
/// * `series` is `Σ_{n≥0} aⁿ / ((c+1)…(c+n))`, so that the Poisson CDF
///   satisfies `e^a·F(c-1; a) = e^log_scale·(1 - e^-log_scale·series)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ErlangTerms {
    pub log_scale: f64,
    pub series: f64,
}

impl ErlangTerms {
    pub fn new(c: f64, rho: f64) -> Self {
        let gap = 1.0 - rho;
        // ln rho + 1 - rho, <= 0
        let g = (-gap).ln_1p() + gap;
        let log_scale = ln_factorial_remainder(c) - c * g;
        let a = c * rho;
        // Neumaier-compensated sum of a positive, eventually geometric series
        let mut sum = 1.0;
        let mut comp = 0.0;
        let mut term = 1.0;
        let mut n = 1.0;
        loop {
            term *= a / (c + n);
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
            if term < sum * 1e-17 || n > 1e9 {
                break;
            }
            n += 1.0;
        }
        Self { log_scale, series: sum + comp }
    }

    /// Regularized upper incomplete gamma `Q(c, a) = F_Poisson(c-1; a)`.
    pub fn poisson_cdf(&self) -> f64 {
        1.0 - (-self.log_scale).exp() * self.series
    }

    /// `ln F_Poisson(c-1; a)`.
    pub fn ln_poisson_cdf(&self) -> f64 {
        (-(-self.log_scale).exp() * self.series).ln_1p()
    }
}
