use serde::{Deserialize, Serialize};

use super::{
    fluid_recursion, min_fleet_base, min_fleet_fluid, service_rate_with_pickup, BaseFleetSize,
    FluidFleetSize, FluidTrace, PickupModel, PickupWait, QueueError, QueueMetrics,
};

fn default_psi() -> f64 {
    1.0
}

fn default_fluid_dt_h() -> f64 {
    1.0 / 60.0
}

fn default_fluid_horizon_h() -> f64 {
    3.0
}

/// Inputs of the analytic model. Rates per hour, times in hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueParams {
    pub lambda: f64,
    pub t_bar: f64,
    pub c: u64,
    pub area: f64,
    pub phi: f64,
    #[serde(default = "default_psi")]
    pub psi: f64,
    pub v_bar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_bar_p: Option<f64>,
    #[serde(default = "default_fluid_dt_h")]
    pub fluid_dt_h: f64,
    #[serde(default = "default_fluid_horizon_h")]
    pub fluid_horizon_h: f64,
}

impl QueueParams {
    pub fn validate(&self) -> Result<PickupModel, QueueError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(QueueError::InvalidParameter(format!("lambda {}", self.lambda)));
        }
        if !(self.t_bar > 0.0 && self.t_bar.is_finite()) {
            return Err(QueueError::InvalidParameter(format!("t_bar {}", self.t_bar)));
        }
        if self.c == 0 {
            return Err(QueueError::InvalidParameter("c must be >= 1".into()));
        }
        if self.phi < 1.0 {
            return Err(QueueError::InvalidParameter(format!("phi {} < 1", self.phi)));
        }
        if let Some(tp) = self.t_bar_p {
            if !(tp >= 0.0 && tp.is_finite()) {
                return Err(QueueError::InvalidParameter(format!("t_bar_p {tp}")));
            }
        }
        PickupModel::new(self.area, self.psi, self.phi, self.v_bar)
    }
}

/// Everything the analytic model says about one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticReport {
    pub params: QueueParams,
    /// `1 / (t̄ + t̄_p)`, or `1 / t̄` without a pickup estimate.
    pub mu: f64,
    pub rho: f64,
    pub stable: bool,
    pub base_fleet: BaseFleetSize,
    /// Steady-state metrics; absent when `rho >= 1`.
    pub metrics: Option<QueueMetrics>,
    /// Idle vehicles per second of arrivals, `λ / 3600`.
    pub v_per_second: f64,
    /// Pickup wait at `v_per_second` idle vehicles, hours.
    pub max_pickup_wait_h: f64,
    pub fluid_fleet: FluidFleetSize,
}

/// Runs the analytic model. Also returns the fluid trace started from
/// `V0 = c`.
pub fn analyze(params: &QueueParams) -> Result<(AnalyticReport, FluidTrace), QueueError> {
    let model = params.validate()?;
    let mu = service_rate_with_pickup(params.t_bar, params.t_bar_p.unwrap_or(0.0));
    let rho = super::utilization(params.lambda, params.c as f64, mu);
    let metrics = match QueueMetrics::mmc(params.lambda, mu, params.c) {
        Ok(m) => Some(m),
        Err(QueueError::Unstable { .. }) => None,
        Err(e) => return Err(e),
    };
    let v_per_second = params.lambda / 3600.0;
    let fluid_fleet = min_fleet_fluid(
        params.lambda,
        params.t_bar,
        &model,
        params.fluid_dt_h,
        params.fluid_horizon_h,
    )?;
    let trace = fluid_recursion(
        params.lambda,
        params.t_bar,
        &model,
        params.c as f64,
        params.fluid_dt_h,
        params.fluid_horizon_h,
    )?;
    Ok((
        AnalyticReport {
            params: params.clone(),
            mu,
            rho,
            stable: metrics.is_some(),
            base_fleet: min_fleet_base(params.lambda, mu),
            metrics,
            v_per_second,
            max_pickup_wait_h: model.wait_h(v_per_second),
            fluid_fleet,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manhattan() -> QueueParams {
        serde_json::from_str(
            r#"{"lambda": 11607, "t_bar": 0.11, "c": 1500, "area": 59.1, "phi": 1.36, "v_bar": 24.5}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let p = manhattan();
        assert_eq!(p.psi, 1.0);
        assert_eq!(p.t_bar_p, None);
        assert!((p.fluid_dt_h - 1.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn stable_and_unstable_reports() {
        let (report, trace) = analyze(&manhattan()).unwrap();
        assert!(report.stable);
        assert_eq!(report.base_fleet.ceiling, 1277);
        assert!(report.fluid_fleet.c0 > 1277);
        assert_eq!(trace.len(), 180);
        let mut p = manhattan();
        p.c = 1000;
        let (report, _) = analyze(&p).unwrap();
        assert!(!report.stable && report.metrics.is_none() && report.rho > 1.0);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = manhattan();
        p.psi = 0.0;
        assert!(analyze(&p).is_err());
        let bad: Result<QueueParams, _> =
            serde_json::from_str(r#"{"lambda": 1, "t_bar": 1, "c": 1, "area": 1, "phi": 1, "v_bar": 1, "x": 2}"#);
        assert!(bad.is_err());
    }
}
