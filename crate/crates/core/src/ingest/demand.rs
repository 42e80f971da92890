use crate::error::{Error, Result};
use crate::model::DemandCurve;

/// Default price elasticity of demand.
pub const DEFAULT_ELASTICITY: f64 = -0.05;

/// Fits a linear inverse demand curve through one historical (price, demand)
/// observation with the given local elasticity.
///
/// The absolute price is used so that hours with negative prices still give a
/// downward-sloping curve; the fitted price at `demand` is therefore `|price|`.
pub fn build_demand_curve(price: f64, demand: f64, elasticity: f64) -> Result<DemandCurve> {
    if !(demand > 0.0) || !demand.is_finite() {
        return Err(Error::Degenerate(format!("demand must be positive, got {demand}")));
    }
    if !(elasticity < 0.0) || !elasticity.is_finite() {
        return Err(Error::Domain(format!("elasticity must be negative, got {elasticity}")));
    }
    if !price.is_finite() {
        return Err(Error::Degenerate(format!("price must be finite, got {price}")));
    }
    let p = price.abs();
    let slope = p / (elasticity * demand);
    let intercept = (1.0 - 1.0 / elasticity) * p;
    if !(slope < 0.0) {
        return Err(Error::Degenerate(format!(
            "zero price gives a flat demand curve (demand {demand})"
        )));
    }
    Ok(DemandCurve { slope, intercept })
}
