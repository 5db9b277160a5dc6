//! Hardware speed limits on the conversion/gain strength plane.
//!
//! A speed limit is a monotone boundary `g_g = f(g_c)`; any point on or
//! below it is reachable. The fastest pulse with a given gain/conversion
//! ratio sits where the corresponding ray from the origin meets the boundary.

use crate::error::{Error, Result};
use crate::hamiltonian::{drive_ratio, DriveRatio};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::io::Read;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpeedLimit {
    /// `g_c + g_g ≤ limit`.
    Linear { limit: f64 },
    /// `g_c² + g_g² ≤ limit²`.
    Squared { limit: f64 },
    /// Piecewise-linear boundary through measured points.
    Tabulated(TabulatedLimit),
}

/// Boundary samples sorted by increasing `g_c` with non-increasing `g_g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedLimit {
    points: Vec<(f64, f64)>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    g_c: f64,
    g_g: f64,
}

impl TabulatedLimit {
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Boundary value at `g_c`, clamped to the end samples outside their range.
    pub fn value_at(&self, g_c: f64) -> f64 {
        let pts = &self.points;
        if g_c <= pts[0].0 {
            return pts[0].1;
        }
        let last = pts[pts.len() - 1];
        if g_c >= last.0 {
            return last.1;
        }
        let i = pts.partition_point(|p| p.0 <= g_c);
        let (a, b) = (pts[i - 1], pts[i]);
        a.1 + (b.1 - a.1) * (g_c - a.0) / (b.0 - a.0)
    }

    /// Closed polyline from the `g_g` axis to the `g_c` axis.
    fn outline(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.points.len() + 2);
        if self.points[0].0 > 0.0 {
            out.push((0.0, self.points[0].1));
        }
        out.extend_from_slice(&self.points);
        let last = self.points[self.points.len() - 1];
        if last.1 > 0.0 {
            out.push((last.0, 0.0));
        }
        out
    }
}

impl SpeedLimit {
    pub fn linear(limit: f64) -> Result<Self> {
        check_limit(limit)?;
        Ok(Self::Linear { limit })
    }

    pub fn squared(limit: f64) -> Result<Self> {
        check_limit(limit)?;
        Ok(Self::Squared { limit })
    }

    /// Builds a tabulated limit. With `repair`, a non-monotone table is
    /// replaced by its non-increasing isotonic fit instead of being rejected.
    pub fn tabulated(mut points: Vec<(f64, f64)>, repair: bool) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("speed-limit table"));
        }
        if points
            .iter()
            .any(|p| !p.0.is_finite() || !p.1.is_finite() || p.0 < 0.0 || p.1 < 0.0)
        {
            return Err(Error::InvalidSpeedLimit(
                "table entries must be finite and non-negative".into(),
            ));
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidSpeedLimit("duplicate g_c values".into()));
        }
        let monotone = points.windows(2).all(|w| w[1].1 <= w[0].1);
        if !monotone {
            if !repair {
                return Err(Error::InvalidSpeedLimit(
                    "g_g must be non-increasing in g_c".into(),
                ));
            }
            log::warn!("speed-limit table is not monotone; using its isotonic fit");
            let ys = isotonic_nonincreasing(&points.iter().map(|p| p.1).collect::<Vec<_>>());
            for (p, y) in points.iter_mut().zip(ys) {
                p.1 = y;
            }
        }
        let last = points[points.len() - 1];
        if points[0].1 <= 0.0 || last.0 <= 0.0 {
            return Err(Error::DegenerateBoundary(
                "boundary must reach positive strengths on both axes".into(),
            ));
        }
        Ok(Self::Tabulated(TabulatedLimit { points }))
    }

    /// Reads a CSV table with header `g_c,g_g`.
    pub fn from_csv<R: Read>(reader: R, repair: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::InvalidSpeedLimit(e.to_string()))?
            .clone();
        if headers.len() != 2 || &headers[0] != "g_c" || &headers[1] != "g_g" {
            return Err(Error::InvalidSpeedLimit(format!(
                "expected header `g_c,g_g`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut pts = Vec::new();
        for row in rdr.deserialize::<CsvRow>() {
            let row = row.map_err(|e| Error::InvalidSpeedLimit(e.to_string()))?;
            pts.push((row.g_c, row.g_g));
        }
        Self::tabulated(pts, repair)
    }

    /// Boundary intercepts on the `g_c` and `g_g` axes.
    pub fn intercepts(&self) -> (f64, f64) {
        match self {
            Self::Linear { limit } | Self::Squared { limit } => (*limit, *limit),
            Self::Tabulated(t) => (t.points[t.points.len() - 1].0, t.points[0].1),
        }
    }

    /// Rescaled copy whose larger intercept equals π/2.
    pub fn normalized(&self) -> SpeedLimit {
        let (x, y) = self.intercepts();
        let s = FRAC_PI_2 / x.max(y);
        match self {
            Self::Linear { .. } => Self::Linear { limit: FRAC_PI_2 },
            Self::Squared { .. } => Self::Squared { limit: FRAC_PI_2 },
            Self::Tabulated(t) => Self::Tabulated(TabulatedLimit {
                points: t.points.iter().map(|&(a, b)| (a * s, b * s)).collect(),
            }),
        }
    }

    /// Point where the ray `g_g = ratio · g_c` meets the boundary.
    pub fn boundary_point(&self, ratio: DriveRatio) -> Result<(f64, f64)> {
        match (self, ratio) {
            (Self::Linear { limit }, DriveRatio::Finite(b)) => {
                let gc = limit / (1.0 + b);
                Ok((gc, b * gc))
            }
            (Self::Squared { limit }, DriveRatio::Finite(b)) => {
                let gc = limit / (1.0 + b * b).sqrt();
                Ok((gc, b * gc))
            }
            (Self::Linear { limit } | Self::Squared { limit }, DriveRatio::Infinite) => {
                Ok((0.0, *limit))
            }
            (Self::Tabulated(t), DriveRatio::Infinite) => Ok((0.0, t.value_at(0.0))),
            (Self::Tabulated(t), DriveRatio::Finite(b)) => {
                let outline = t.outline();
                for w in outline.windows(2) {
                    let (p, q) = (w[0], w[1]);
                    let den = (q.1 - p.1) - b * (q.0 - p.0);
                    if den.abs() < 1e-300 {
                        continue;
                    }
                    let s = (b * p.0 - p.1) / den;
                    if (-1e-12..=1.0 + 1e-12).contains(&s) {
                        let s = s.clamp(0.0, 1.0);
                        return Ok((p.0 + s * (q.0 - p.0), p.1 + s * (q.1 - p.1)));
                    }
                }
                Err(Error::NoIntersection { ratio: b })
            }
        }
    }
}

fn check_limit(limit: f64) -> Result<()> {
    if !limit.is_finite() {
        return Err(Error::InvalidSpeedLimit(format!("limit {limit} is not finite")));
    }
    if limit <= 0.0 {
        return Err(Error::DegenerateBoundary(format!("limit {limit} leaves no interior")));
    }
    Ok(())
}

/// Pool-adjacent-violators fit constrained to be non-increasing.
fn isotonic_nonincreasing(y: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let n = blocks.len();
            let (m1, w1) = blocks[n - 2];
            let (m2, w2) = blocks[n - 1];
            if m2 > m1 {
                blocks.truncate(n - 2);
                let w = w1 + w2;
                blocks.push(((m1 * w1 as f64 + m2 * w2 as f64) / w as f64, w));
            } else {
                break;
            }
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, w)| std::iter::repeat_n(m, w))
        .collect()
}

/// Largest `(g_c, g_g)` on the ray with the given ratio.
pub fn max_strengths(limit: &SpeedLimit, ratio: DriveRatio) -> Result<(f64, f64)> {
    limit.boundary_point(ratio)
}

/// Shortest pulse accumulating conversion angle `theta_c` and gain angle `theta_g`.
pub fn min_time(limit: &SpeedLimit, theta_c: f64, theta_g: f64) -> Result<f64> {
    let ratio = drive_ratio(theta_c, theta_g)?;
    let (gc, gg) = limit.boundary_point(ratio)?;
    let t = if theta_c > 0.0 { theta_c / gc } else { theta_g / gg };
    if !t.is_finite() {
        return Err(Error::NoIntersection {
            ratio: theta_g / theta_c,
        });
    }
    Ok(t)
}

/// Duration of `k` pulses of length `t_min` with a single-qubit layer
/// before, between and after them.
pub fn scaled_duration(k: usize, t_min: f64, d1q: f64) -> f64 {
    k as f64 * t_min + (k + 1) as f64 * d1q
}

pub fn normalize(limit: &SpeedLimit) -> SpeedLimit {
    limit.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    #[test]
    fn linear_cnot_takes_unit_time() {
        let l = SpeedLimit::linear(FRAC_PI_2).unwrap();
        assert!((min_time(&l, FRAC_PI_4, FRAC_PI_4).unwrap() - 1.0).abs() < 1e-12);
        assert!((min_time(&l, FRAC_PI_2, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squared_b_gate() {
        let l = SpeedLimit::squared(FRAC_PI_2).unwrap();
        let t = min_time(&l, 3.0 * FRAC_PI_8, FRAC_PI_8).unwrap();
        assert!((t - 10f64.sqrt() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn isotonic_pools_violators() {
        assert_eq!(isotonic_nonincreasing(&[3.0, 1.0, 2.0]), vec![3.0, 1.5, 1.5]);
    }
}
