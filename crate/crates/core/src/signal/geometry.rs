use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Averages left- and right-eye positions sample by sample.
/// A sample missing in either eye is missing in the output.
pub fn merge_binocular(
    left: (&[f64], &[f64]),
    right: (&[f64], &[f64]),
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = left.0.len();
    if left.1.len() != n || right.0.len() != n || right.1.len() != n {
        return Err(Error::invalid(format!(
            "binocular channels differ in length: left ({}, {}), right ({}, {})",
            left.0.len(),
            left.1.len(),
            right.0.len(),
            right.1.len()
        )));
    }
    // NaN + anything is NaN, which is the propagation rule we want.
    let mean = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| 0.5 * (p + q)).collect();
    Ok((mean(left.0, right.0), mean(left.1, right.1)))
}

/// Physical screen layout used to convert pixel positions to visual angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenGeometry {
    pub width_px: f64,
    pub height_px: f64,
    pub width_cm: f64,
    pub height_cm: f64,
    pub distance_cm: f64,
}

impl ScreenGeometry {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("width_px", self.width_px),
            ("height_px", self.height_px),
            ("width_cm", self.width_cm),
            ("height_cm", self.height_cm),
            ("distance_cm", self.distance_cm),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "screen geometry {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn axis_to_degrees(px: f64, size_px: f64, size_cm: f64, distance_cm: f64) -> f64 {
        let offset_cm = (px - size_px / 2.0) * (size_cm / size_px);
        (offset_cm / distance_cm).atan().to_degrees()
    }

    /// Visual angle of a pixel position about the screen center, per axis.
    pub fn pixels_to_degrees(&self, x_px: f64, y_px: f64) -> Result<(f64, f64)> {
        self.validate()?;
        Ok((
            Self::axis_to_degrees(x_px, self.width_px, self.width_cm, self.distance_cm),
            Self::axis_to_degrees(y_px, self.height_px, self.height_cm, self.distance_cm),
        ))
    }

    pub fn convert_trace(&self, x_px: &[f64], y_px: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.validate()?;
        if x_px.len() != y_px.len() {
            return Err(Error::invalid("pixel trace channels differ in length"));
        }
        Ok(x_px
            .iter()
            .zip(y_px)
            .map(|(&x, &y)| {
                (
                    Self::axis_to_degrees(x, self.width_px, self.width_cm, self.distance_cm),
                    Self::axis_to_degrees(y, self.height_px, self.height_cm, self.distance_cm),
                )
            })
            .unzip())
    }
}
