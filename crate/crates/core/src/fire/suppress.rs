use serde::{Deserialize, Serialize};

use super::{FireError, Transition};
use crate::world::{BurnPhase, GridMap};

/// A suppressant drop: a segment in map meters swept to a rectangle of `width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub start: (f64, f64),
    pub end: (f64, f64),
    /// Meters.
    pub width: f64,
}

impl Footprint {
    /// Segment of `length` meters centered on `center`, heading in degrees.
    pub fn centered(center: (f64, f64), heading_deg: f64, length: f64, width: f64) -> Self {
        let (s, c) = heading_deg.to_radians().sin_cos();
        let h = length / 2.0;
        Footprint {
            start: (center.0 - c * h, center.1 - s * h),
            end: (center.0 + c * h, center.1 + s * h),
            width,
        }
    }

    pub fn length(&self) -> f64 {
        (self.end.0 - self.start.0).hypot(self.end.1 - self.start.1)
    }

    pub fn area(&self) -> f64 {
        self.length() * self.width
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.start.0 + self.end.0) / 2.0,
            (self.start.1 + self.end.1) / 2.0,
        )
    }

    /// Euclidean distance from a point to the swept rectangle (0 inside).
    pub fn distance_to(&self, p: (f64, f64)) -> f64 {
        let (ax, ay) = self.start;
        let (bx, by) = self.end;
        let (dx, dy) = (bx - ax, by - ay);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((p.0 - ax) * dx + (p.1 - ay) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (qx, qy) = (ax + t * dx, ay + t * dy);
        ((p.0 - qx).hypot(p.1 - qy) - self.width / 2.0).max(0.0)
    }

    /// Indices of the cells whose square intersects the footprint rectangle
    /// (separating-axis test), in row-major order.
    pub fn covered_cells(&self, map: &GridMap) -> Vec<usize> {
        let len = self.length();
        if len <= 0.0 {
            return Vec::new();
        }
        let (cx, cy) = self.center();
        let u = (
            (self.end.0 - self.start.0) / len,
            (self.end.1 - self.start.1) / len,
        );
        let v = (-u.1, u.0);
        let (hu, hv) = (len / 2.0, self.width / 2.0);
        let corners = [
            (cx + u.0 * hu + v.0 * hv, cy + u.1 * hu + v.1 * hv),
            (cx + u.0 * hu - v.0 * hv, cy + u.1 * hu - v.1 * hv),
            (cx - u.0 * hu + v.0 * hv, cy - u.1 * hu + v.1 * hv),
            (cx - u.0 * hu - v.0 * hv, cy - u.1 * hu - v.1 * hv),
        ];
        let (mut min_x, mut max_x, mut min_y, mut max_y) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in &corners {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        let cs = map.cell_size;
        let x0 = (min_x / cs).floor().max(0.0) as usize;
        let y0 = (min_y / cs).floor().max(0.0) as usize;
        let x1 = ((max_x / cs).floor() as isize).min(map.width as isize - 1);
        let y1 = ((max_y / cs).floor() as isize).min(map.height as isize - 1);
        if x1 < 0 || y1 < 0 {
            return Vec::new();
        }
        let half = cs / 2.0;
        let mut out = Vec::new();
        for y in y0..=y1 as usize {
            for x in x0..=x1 as usize {
                // axis-aligned axes are covered by the bounding box; test u and v
                let (sx, sy) = ((x as f64 + 0.5) * cs - cx, (y as f64 + 0.5) * cs - cy);
                let square_on = |a: (f64, f64)| half * (a.0.abs() + a.1.abs());
                let sep_u = (sx * u.0 + sy * u.1).abs() >= hu + square_on(u);
                let sep_v = (sx * v.0 + sy * v.1).abs() >= hv + square_on(v);
                if !sep_u && !sep_v {
                    out.push(y * map.width + x);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuppressionOutcome {
    /// Burning cells knocked down to `Extinguishing`.
    pub transitions: Vec<Transition>,
    /// Combustible cells whose moisture was raised.
    pub wetted: usize,
}

impl SuppressionOutcome {
    pub fn suppressed_count(&self) -> usize {
        self.transitions.len()
    }
}

/// Drops `amount` liters along `footprint`: burning cells start extinguishing,
/// combustible cells gain `amount / (area · saturation)` moisture.
pub fn apply_suppressant(
    map: &mut GridMap,
    footprint: &Footprint,
    amount: f64,
    saturation_l_per_m2: f64,
) -> Result<SuppressionOutcome, FireError> {
    if footprint.length() <= 0.0 {
        return Err(FireError::DegenerateFootprint);
    }
    if !(footprint.width > 0.0 && amount > 0.0 && saturation_l_per_m2 > 0.0) {
        return Err(FireError::InvalidFootprint);
    }
    let wetting = amount / (footprint.area() * saturation_l_per_m2);
    let mut out = SuppressionOutcome::default();
    for idx in footprint.covered_cells(map) {
        let cell = &mut map.cells[idx];
        match cell.phase {
            BurnPhase::EarlyBurning | BurnPhase::FullBurning => {
                out.transitions.push(Transition {
                    cell: idx,
                    from: cell.phase,
                    to: BurnPhase::Extinguishing,
                });
                cell.phase = BurnPhase::Extinguishing;
                cell.phase_age = 0.0;
            }
            BurnPhase::Combustible => {
                cell.moisture = (cell.moisture + wetting).min(1.0);
                out.wetted += 1;
            }
            _ => {}
        }
    }
    Ok(out)
}
