use crate::error::{Error, Result};
use crate::grid::BoundaryKind;

/// Highest supported order of accuracy (`M + 1`).
pub const MAX_ORDER: usize = 5;

/// Run parameters shared by the predictor, the update and the driver.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Order of accuracy `M + 1`; 1 selects the first-order (piecewise constant) mode.
    pub order: usize,
    pub cfl: f64,
    /// FORCE-α dissipation parameter.
    pub alpha: f64,
    pub t_out: f64,
    pub boundary: BoundaryKind,
    /// Relative tolerance of the nested fixed point.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Time step used when every wave speed vanishes.
    pub max_dt: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            order: 3,
            cfl: 0.1,
            alpha: 1.0,
            t_out: 1.0,
            boundary: BoundaryKind::Periodic,
            tolerance: 1e-12,
            max_iterations: 50,
            max_dt: f64::INFINITY,
        }
    }
}

impl RunConfig {
    /// Polynomial degree `M` of the reconstruction.
    pub fn degree(&self) -> usize {
        self.order - 1
    }

    /// Ghost width: the central stencil reaches `M` cells, the neighbour
    /// traces one more.
    pub fn ghost_width(&self) -> usize {
        self.order
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_ORDER).contains(&self.order) {
            return Err(Error::InvalidConfig(format!(
                "order {} outside 1..={MAX_ORDER}",
                self.order
            )));
        }
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(Error::InvalidConfig(format!("cfl must be positive, got {}", self.cfl)));
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        if !(self.t_out >= 0.0 && self.t_out.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_out must be >= 0, got {}", self.t_out)));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidConfig("fixed-point tolerance and iteration cap must be positive".into()));
        }
        if !(self.max_dt > 0.0) {
            return Err(Error::InvalidConfig("max_dt must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            RunConfig { order: 0, ..Default::default() },
            RunConfig { order: 6, ..Default::default() },
            RunConfig { cfl: 0.0, ..Default::default() },
            RunConfig { alpha: 0.5, ..Default::default() },
            RunConfig { t_out: -1.0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
