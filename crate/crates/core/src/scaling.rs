//! Model size versus decay rate: fit a straight line in log-log space,
//! extrapolate the size needed to reach a target decay rate, and translate
//! that size into a Moore's-law timeline and a hardware bill.

use serde::{Deserialize, Serialize};

use crate::classifier::AUTONOMOUS_BOUNDARY;
use crate::error::{Error, Result};
use crate::regression::ols;

/// Rough count of neurons across all human brains.
pub const HUMAN_NEURONS_TOTAL: f64 = 1e21;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub run_id: String,
    pub param_count: u64,
    pub alpha: f64,
}

impl ScalingPoint {
    pub fn new(run_id: impl Into<String>, param_count: u64, alpha: f64) -> Result<Self> {
        if param_count == 0 || !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scaling point needs param_count > 0 and alpha > 0 (got {param_count}, {alpha})"
            )));
        }
        Ok(ScalingPoint {
            run_id: run_id.into(),
            param_count,
            alpha,
        })
    }
}

/// `log10(alpha) = intercept + slope * log10(params)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingLine {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl ScalingLine {
    /// Line through `(params, alpha)` with the given log-log slope.
    pub fn through(params: f64, alpha: f64, slope: f64) -> Self {
        ScalingLine {
            slope,
            intercept: alpha.log10() - slope * params.log10(),
            r_squared: 1.0,
            points: 0,
        }
    }

    pub fn alpha_at(&self, params: f64) -> f64 {
        10f64.powf(self.intercept + self.slope * params.log10())
    }

    pub fn is_extrapolable(&self) -> bool {
        self.slope > 0.0
    }
}

/// Needs at least two distinct model sizes.
pub fn fit_scaling_line(points: &[ScalingPoint]) -> Result<ScalingLine> {
    let mut sizes: Vec<u64> = points.iter().map(|p| p.param_count).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::InsufficientData {
            found: sizes.len(),
            required: 2,
        });
    }
    let xs: Vec<f64> = points
        .iter()
        .map(|p| (p.param_count as f64).log10())
        .collect();
    let ys: Vec<f64> = points.iter().map(|p| p.alpha.log10()).collect();
    let fit = ols(&xs, &ys)?;
    Ok(ScalingLine {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points: points.len(),
    })
}

/// Parameter count at which the line reaches `target_alpha`.
pub fn project_required_size(line: &ScalingLine, target_alpha: f64) -> Result<f64> {
    if !(target_alpha.is_finite() && target_alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target alpha {target_alpha} must be positive"
        )));
    }
    if !line.is_extrapolable() {
        return Err(Error::NonExtrapolable { slope: line.slope });
    }
    let log_n = (target_alpha.log10() - line.intercept) / line.slope;
    let n = 10f64.powf(log_n);
    if !n.is_finite() || n == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "required size 10^{log_n:.1} is outside floating-point range"
        )));
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareAssumptions {
    pub bytes_per_param: f64,
    pub gpu_memory_bytes: f64,
    /// USD per accelerator.
    pub gpu_unit_cost: f64,
    /// USD; the cost is reported as a multiple of this.
    pub reference_market_cap: f64,
    pub doubling_months: f64,
    /// Largest model trainable today, in parameters.
    pub current_max_params: f64,
}

impl Default for HardwareAssumptions {
    /// 4-byte parameters on 80 GB H100s at $30,000 each, compared with a
    /// $3.7T market cap; chips double every 18 months from a 10^12 baseline.
    fn default() -> Self {
        HardwareAssumptions {
            bytes_per_param: 4.0,
            gpu_memory_bytes: 80e9,
            gpu_unit_cost: 3e4,
            reference_market_cap: 3.7e12,
            doubling_months: 18.0,
            current_max_params: 1e12,
        }
    }
}

impl HardwareAssumptions {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("bytes_per_param", self.bytes_per_param),
            ("gpu_memory_bytes", self.gpu_memory_bytes),
            ("gpu_unit_cost", self.gpu_unit_cost),
            ("reference_market_cap", self.reference_market_cap),
            ("doubling_months", self.doubling_months),
            ("current_max_params", self.current_max_params),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Years of chip doubling until `required_params` fits; zero when it already does.
pub fn moores_law_years(required_params: f64, hw: &HardwareAssumptions) -> f64 {
    if required_params <= hw.current_max_params {
        return 0.0;
    }
    hw.doubling_months / 12.0 * (required_params / hw.current_max_params).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardwareCost {
    pub gpu_count: f64,
    /// Total accelerator cost as a multiple of the reference market cap.
    pub cost_ratio: f64,
}

/// Accelerators needed just to hold the weights, and what they cost.
pub fn hardware_cost(required_params: f64, hw: &HardwareAssumptions) -> Result<HardwareCost> {
    if !(required_params.is_finite() && required_params > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "required params {required_params} must be positive"
        )));
    }
    let gpu_count = required_params * hw.bytes_per_param / hw.gpu_memory_bytes;
    Ok(HardwareCost {
        gpu_count,
        cost_ratio: gpu_count * hw.gpu_unit_cost / hw.reference_market_cap,
    })
}

/// `required_params` relative to all human neurons.
pub fn neuron_comparison(required_params: f64) -> f64 {
    required_params / HUMAN_NEURONS_TOTAL
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingProjection {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub target_alpha: f64,
    pub required_params: f64,
    pub years_until: f64,
    pub gpu_count: f64,
    pub cost_ratio: f64,
    pub neuron_ratio: f64,
    /// Straight-line extrapolation ignores any bend at the largest sizes.
    pub optimistic: bool,
    /// Same fit restricted to the larger half of the model sizes.
    pub upper_half: Option<ScalingLine>,
    pub upper_half_required_params: Option<f64>,
    pub assumptions: HardwareAssumptions,
}

pub fn projection_from_line(
    line: &ScalingLine,
    target_alpha: f64,
    hw: &HardwareAssumptions,
) -> Result<ScalingProjection> {
    hw.validate()?;
    let required_params = project_required_size(line, target_alpha)?;
    let cost = hardware_cost(required_params, hw)?;
    Ok(ScalingProjection {
        slope: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        target_alpha,
        required_params,
        years_until: moores_law_years(required_params, hw),
        gpu_count: cost.gpu_count,
        cost_ratio: cost.cost_ratio,
        neuron_ratio: neuron_comparison(required_params),
        optimistic: true,
        upper_half: None,
        upper_half_required_params: None,
        assumptions: *hw,
    })
}

/// Full projection from observed points. The upper-half fit is attached
/// when the larger half of the distinct sizes still has two sizes.
pub fn project(
    points: &[ScalingPoint],
    target_alpha: f64,
    hw: &HardwareAssumptions,
) -> Result<ScalingProjection> {
    let line = fit_scaling_line(points)?;
    let mut projection = projection_from_line(&line, target_alpha, hw)?;

    let mut sizes: Vec<u64> = points.iter().map(|p| p.param_count).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let cut = sizes[sizes.len() / 2];
    let upper: Vec<ScalingPoint> = points
        .iter()
        .filter(|p| p.param_count >= cut)
        .cloned()
        .collect();
    if let Ok(upper_line) = fit_scaling_line(&upper) {
        projection.upper_half_required_params =
            project_required_size(&upper_line, target_alpha).ok();
        projection.upper_half = Some(upper_line);
    }
    Ok(projection)
}

/// Default target: the Autonomous boundary.
pub const DEFAULT_TARGET_ALPHA: f64 = AUTONOMOUS_BOUNDARY;

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(p: u64, a: f64) -> ScalingPoint {
        ScalingPoint::new(format!("m{p}"), p, a).unwrap()
    }

    #[test]
    fn exact_power_line() {
        let pts: Vec<_> = [1e6, 1e8, 1e9, 1e11]
            .iter()
            .map(|&n: &f64| pt(n as u64, n.powf(0.1)))
            .collect();
        let line = fit_scaling_line(&pts).unwrap();
        assert!((line.slope - 0.1).abs() < 1e-12);
        assert!(line.intercept.abs() < 1e-10);
        assert!((line.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_closed_form() {
        let line = fit_scaling_line(&[pt(1_000_000_000, 1.0), pt(1_000_000_000_000, 2.0)]).unwrap();
        // log10(2) / 3
        assert!((line.slope - 0.100_343).abs() < 1e-6, "{}", line.slope);
    }

    #[test]
    fn flat_line_refuses_projection() {
        let line = fit_scaling_line(&[pt(10, 1.5), pt(100, 1.5), pt(1000, 1.5)]).unwrap();
        assert_eq!(line.slope, 0.0);
        assert!(matches!(
            project_required_size(&line, 3.0),
            Err(Error::NonExtrapolable { .. })
        ));
        assert!(project(
            &[pt(10, 1.5), pt(100, 1.5)],
            3.0,
            &HardwareAssumptions::default()
        )
        .is_err());
    }

    #[test]
    fn single_size_is_insufficient() {
        let err = fit_scaling_line(&[pt(10, 1.5), pt(10, 1.7)]).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientData {
                found: 1,
                required: 2
            }
        ));
    }

    #[test]
    fn interpolation_identity() {
        let pts = [
            pt(500_000_000, 1.2),
            pt(7_000_000_000, 1.45),
            pt(72_000_000_000, 1.8),
        ];
        let line = fit_scaling_line(&pts).unwrap();
        let a = line.alpha_at(7e9);
        let n = project_required_size(&line, a).unwrap();
        assert!((n / 7e9 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn general_and_structured_headlines() {
        let hw = HardwareAssumptions::default();
        let general = ScalingLine::through(1e12, 1.0, 3f64.log10() / 14.0);
        let n = project_required_size(&general, 3.0).unwrap();
        assert!((n.log10() - 26.0).abs() < 1e-9);
        assert!((moores_law_years(n, &hw) - 69.76).abs() < 0.01);
        let cost = hardware_cost(n, &hw).unwrap();
        assert!((cost.gpu_count / 5e15 - 1.0).abs() < 1e-9);
        assert!((cost.cost_ratio / 4.054e7 - 1.0).abs() < 1e-3);
        assert!((neuron_comparison(n) / 1e5 - 1.0).abs() < 1e-9);

        let structured = ScalingLine::through(1e12, 1.0, 3f64.log10() / 6.0);
        let n = project_required_size(&structured, 3.0).unwrap();
        assert!((n.log10() - 18.0).abs() < 1e-9);
        assert!((moores_law_years(n, &hw) - 29.90).abs() < 0.01);
    }

    #[test]
    fn years_are_zero_at_or_below_baseline() {
        let hw = HardwareAssumptions::default();
        assert_eq!(moores_law_years(1e12, &hw), 0.0);
        assert_eq!(moores_law_years(1e9, &hw), 0.0);
        assert!(moores_law_years(2e12, &hw) > 0.0);
        assert!((moores_law_years(2e12, &hw) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn one_gpu_holds_its_memory_worth() {
        let hw = HardwareAssumptions::default();
        let cost = hardware_cost(hw.gpu_memory_bytes / hw.bytes_per_param, &hw).unwrap();
        assert!((cost.gpu_count - 1.0).abs() < 1e-12);
    }

    #[test]
    fn neuron_ratios() {
        assert_eq!(neuron_comparison(1e21), 1.0);
        assert!((neuron_comparison(1e18) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn upper_half_fit_is_reported() {
        let pts = [
            pt(500_000_000, 1.2),
            pt(1_500_000_000, 1.3),
            pt(7_000_000_000, 1.45),
            pt(32_000_000_000, 1.5),
            pt(72_000_000_000, 1.52),
        ];
        let p = project(&pts, 3.0, &HardwareAssumptions::default()).unwrap();
        let upper = p.upper_half.unwrap();
        assert_eq!(upper.points, 3);
        // Bending curve: the upper half is flatter, so it needs more parameters.
        assert!(upper.slope < p.slope);
        assert!(p.upper_half_required_params.unwrap() > p.required_params);
        assert!(p.optimistic);
    }

    #[test]
    fn invalid_assumptions() {
        let hw = HardwareAssumptions {
            gpu_memory_bytes: 0.0,
            ..Default::default()
        };
        let line = ScalingLine::through(1e12, 1.0, 0.1);
        assert!(projection_from_line(&line, 3.0, &hw).is_err());
    }
}
