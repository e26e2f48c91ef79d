use super::DemandError;

pub const IPF_DEFAULT_TOLERANCE: f64 = 1e-8;
pub const IPF_DEFAULT_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct IpfFit {
    pub cells: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Max-norm deviation of row and column sums from their marginals.
    pub residual: f64,
}

fn residual(cells: &[Vec<f64>], rows: &[f64], cols: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (row, &target) in cells.iter().zip(rows) {
        worst = worst.max((row.iter().sum::<f64>() - target).abs());
    }
    for (j, &target) in cols.iter().enumerate() {
        worst = worst.max((cells.iter().map(|r| r[j]).sum::<f64>() - target).abs());
    }
    worst
}

/// Iterative proportional fitting: alternately rescales rows and columns
/// of `seed` until every row and column sum is within `tolerance` of its
/// marginal. Zero seed cells stay zero.
pub fn ipf_fit(
    seed: &[Vec<f64>],
    row_marginals: &[f64],
    col_marginals: &[f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<IpfFit, DemandError> {
    let (m, n) = (row_marginals.len(), col_marginals.len());
    if seed.len() != m || seed.iter().any(|r| r.len() != n) {
        return Err(DemandError::InvalidParameter(format!(
            "seed matrix shape does not match {m}x{n} marginals"
        )));
    }
    if !(tolerance > 0.0) {
        return Err(DemandError::InvalidParameter(format!("tolerance {tolerance}")));
    }
    let bad = |v: &f64| !(v.is_finite() && *v >= 0.0);
    if seed.iter().flatten().any(bad) || row_marginals.iter().any(bad) || col_marginals.iter().any(bad)
    {
        return Err(DemandError::InvalidParameter(
            "seed cells and marginals must be finite and non-negative".into(),
        ));
    }
    let rows_total: f64 = row_marginals.iter().sum();
    let cols_total: f64 = col_marginals.iter().sum();
    if (rows_total - cols_total).abs() > 1e-9 * rows_total.abs().max(cols_total.abs()) {
        return Err(DemandError::InconsistentMarginals { rows: rows_total, cols: cols_total });
    }
    for (i, &target) in row_marginals.iter().enumerate() {
        if target > 0.0 && seed[i].iter().all(|&v| v == 0.0) {
            return Err(DemandError::InfeasibleZeros(format!(
                "row {i} has marginal {target} but an all-zero seed"
            )));
        }
    }
    for (j, &target) in col_marginals.iter().enumerate() {
        if target > 0.0 && seed.iter().all(|r| r[j] == 0.0) {
            return Err(DemandError::InfeasibleZeros(format!(
                "column {j} has marginal {target} but an all-zero seed"
            )));
        }
    }

    let mut cells: Vec<Vec<f64>> = seed.to_vec();
    let mut res = residual(&cells, row_marginals, col_marginals);
    let mut iterations = 0;
    while res > tolerance {
        if iterations == max_iterations {
            return Err(DemandError::NoConvergence { iterations, residual: res });
        }
        for (row, &target) in cells.iter_mut().zip(row_marginals) {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                let k = target / sum;
                row.iter_mut().for_each(|v| *v *= k);
            }
        }
        for (j, &target) in col_marginals.iter().enumerate() {
            let sum: f64 = cells.iter().map(|r| r[j]).sum();
            if sum > 0.0 {
                let k = target / sum;
                cells.iter_mut().for_each(|r| r[j] *= k);
            }
        }
        iterations += 1;
        res = residual(&cells, row_marginals, col_marginals);
    }
    Ok(IpfFit { cells, iterations, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ones() -> Vec<Vec<f64>> {
        vec![vec![1.0, 1.0], vec![1.0, 1.0]]
    }

    #[test]
    fn already_consistent() {
        let fit = ipf_fit(&ones(), &[2.0, 2.0], &[2.0, 2.0], 1e-12, 100).unwrap();
        assert_eq!(fit.cells, ones());
        assert_eq!(fit.iterations, 0);
    }

    #[test]
    fn outer_product_fixed_point() {
        let fit = ipf_fit(&ones(), &[3.0, 1.0], &[2.0, 2.0], 1e-12, 100).unwrap();
        let want = [[1.5, 1.5], [0.5, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((fit.cells[i][j] - want[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            ipf_fit(&ones(), &[3.0, 1.0], &[2.0, 3.0], 1e-8, 100),
            Err(DemandError::InconsistentMarginals { .. })
        ));
        let zero_row = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        assert!(matches!(
            ipf_fit(&zero_row, &[1.0, 1.0], &[1.0, 1.0], 1e-8, 100),
            Err(DemandError::InfeasibleZeros(_))
        ));
        // diagonal seed cannot reach off-diagonal marginals
        let diag = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(
            ipf_fit(&diag, &[2.0, 1.0], &[1.0, 2.0], 1e-8, 50),
            Err(DemandError::NoConvergence { iterations: 50, .. })
        ));
    }

    proptest! {
        #[test]
        fn marginals_matched_and_zeros_kept(
            cells in proptest::collection::vec(0.0f64..5.0, 16),
            zero_mask in proptest::collection::vec(proptest::bool::weighted(0.2), 16),
            scale in proptest::collection::vec(0.5f64..2.0, 4),
        ) {
            let seed: Vec<Vec<f64>> = (0..4)
                .map(|i| (0..4).map(|j| if zero_mask[i * 4 + j] && i != j { 0.0 } else { cells[i * 4 + j] + 0.1 }).collect())
                .collect();
            // feasible marginals: row/column sums of a rescaled seed
            let target: Vec<Vec<f64>> = seed.iter().enumerate()
                .map(|(i, r)| r.iter().enumerate().map(|(j, v)| v * scale[i] * scale[3 - j]).collect())
                .collect();
            let rows: Vec<f64> = target.iter().map(|r| r.iter().sum()).collect();
            let cols: Vec<f64> = (0..4).map(|j| target.iter().map(|r| r[j]).sum()).collect();
            let fit = ipf_fit(&seed, &rows, &cols, 1e-8, 10_000).unwrap();
            prop_assert!(fit.residual <= 1e-8);
            for i in 0..4 {
                for j in 0..4 {
                    if seed[i][j] == 0.0 { prop_assert_eq!(fit.cells[i][j], 0.0); }
                }
            }
        }
    }
}
