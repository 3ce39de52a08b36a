use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{bearing_deg, Footprint, Transition};
use crate::world::{BurnPhase, GridMap};

/// Trailing window over which per-cell spread rate is measured.
pub const SPREAD_WINDOW_MIN: u32 = 10;

/// Ignition events of the trailing window.
#[derive(Debug, Clone, PartialEq)]
pub struct RecentIgnitions {
    events: VecDeque<(u32, usize)>,
    window: u32,
}

impl Default for RecentIgnitions {
    fn default() -> Self {
        RecentIgnitions::new(SPREAD_WINDOW_MIN)
    }
}

impl RecentIgnitions {
    pub fn new(window: u32) -> Self {
        RecentIgnitions {
            events: VecDeque::new(),
            window,
        }
    }

    /// Records the ignitions among `transitions` at `minute` and forgets
    /// events that left the window.
    pub fn record(&mut self, minute: u32, transitions: &[Transition]) {
        for t in transitions {
            if t.from == BurnPhase::Combustible && t.to == BurnPhase::EarlyBurning {
                self.events.push_back((minute, t.cell));
            }
        }
        self.prune(minute);
    }

    pub fn prune(&mut self, now: u32) {
        while let Some(&(m, _)) = self.events.front() {
            if now.saturating_sub(m) >= self.window {
                self.events.pop_front();
            } else {
                break;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Ignitions within each cell's 3×3 neighbourhood.
    pub fn neighborhood_counts(&self, map: &GridMap) -> Vec<u16> {
        let mut counts = vec![0u16; map.len()];
        for &(_, idx) in &self.events {
            counts[idx] = counts[idx].saturating_add(1);
            for n in map.neighbors(idx) {
                counts[n] = counts[n].saturating_add(1);
            }
        }
        counts
    }
}

/// Fire-front observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireStats {
    /// Cells currently early or fully burning.
    pub active_front_count: usize,
    /// Burnt cells over flammable cells.
    pub burnt_fraction: f64,
    /// Centroid of burning cells in cell coordinates; the last known value
    /// when nothing burns, `None` before any fire.
    pub fire_center: Option<(f64, f64)>,
    /// Degrees from +x towards +y.
    pub spread_angle: f64,
    /// Meters from the fire center to the north, east, south and west edges.
    pub dist_to_boundaries: [f64; 4],
    /// Meters from the nearest burning cell to the nearest water source.
    pub dist_to_water: f64,
    /// Meters from the nearest burning cell to the fire line, or the map
    /// diagonal when no line has been laid.
    pub dist_to_fireline: f64,
}

/// Per-minute view of the fire used for targeting.
#[derive(Debug, Clone, PartialEq)]
pub struct FireView {
    /// Early or fully burning cells, row-major.
    pub burning: Vec<usize>,
    /// Burning cells with at least one combustible neighbour, row-major.
    pub frontier: Vec<usize>,
    /// Recent ignitions around each cell.
    pub spread_rate: Vec<u16>,
    pub center: Option<(f64, f64)>,
    pub spread_angle: f64,
}

impl FireView {
    pub fn observe(
        map: &GridMap,
        recent: &RecentIgnitions,
        previous_center: Option<(f64, f64)>,
        previous_angle: f64,
    ) -> Self {
        let burning: Vec<usize> = (0..map.len())
            .filter(|&i| map.cells[i].phase.is_burning())
            .collect();
        let frontier: Vec<usize> = burning
            .iter()
            .copied()
            .filter(|&i| {
                map.neighbors(i)
                    .any(|n| map.cells[n].phase == BurnPhase::Combustible)
            })
            .collect();
        let center = if burning.is_empty() {
            previous_center
        } else {
            let (sx, sy) = burning.iter().fold((0.0, 0.0), |(sx, sy), &i| {
                let (x, y) = map.coord(i);
                (sx + x as f64, sy + y as f64)
            });
            let n = burning.len() as f64;
            Some((sx / n, sy / n))
        };
        let spread_rate = recent.neighborhood_counts(map);
        let mut view = FireView {
            burning,
            frontier,
            spread_rate,
            center,
            spread_angle: previous_angle,
        };
        if let (Some(f), Some((cx, cy))) = (view.fastest_frontier(), center) {
            let (x, y) = map.coord(f);
            if (x as f64 - cx).abs() > 1e-12 || (y as f64 - cy).abs() > 1e-12 {
                view.spread_angle = bearing_deg(x as f64 - cx, y as f64 - cy);
            }
        }
        view
    }

    /// Frontier cell with the highest recent spread rate, lowest index on ties.
    pub fn fastest_frontier(&self) -> Option<usize> {
        self.frontier
            .iter()
            .copied()
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if self.spread_rate[b] >= self.spread_rate[i] => Some(b),
                _ => Some(i),
            })
    }

    pub fn has_fire(&self) -> bool {
        self.center.is_some()
    }

    /// Full statistics; `water_distance` is the per-cell distance field from
    /// `water_distance_field`.
    pub fn stats(
        &self,
        map: &GridMap,
        fireline: &[Footprint],
        water_distance: &[f64],
    ) -> FireStats {
        let cs = map.cell_size;
        let (cx, cy) = self.center.unwrap_or((
            (map.width as f64 - 1.0) / 2.0,
            (map.height as f64 - 1.0) / 2.0,
        ));
        let dist_to_boundaries = [
            ((cy + 0.5) * cs).max(0.0),
            ((map.width as f64 - cx - 0.5) * cs).max(0.0),
            ((map.height as f64 - cy - 0.5) * cs).max(0.0),
            ((cx + 0.5) * cs).max(0.0),
        ];
        let center_cell = map.cell_at_m(((cx + 0.5) * cs, (cy + 0.5) * cs));
        let probes: Vec<usize> = if self.burning.is_empty() {
            vec![map.index(center_cell)]
        } else {
            self.burning.clone()
        };
        let dist_to_water = probes
            .iter()
            .map(|&i| water_distance[i])
            .fold(f64::INFINITY, f64::min);
        let dist_to_fireline = if fireline.is_empty() {
            map.diagonal_m()
        } else {
            probes
                .iter()
                .flat_map(|&i| {
                    let p = map.cell_center_m(map.coord(i));
                    fireline.iter().map(move |f| f.distance_to(p))
                })
                .fold(f64::INFINITY, f64::min)
        };
        let flammable = map.flammable_count().max(1);
        FireStats {
            active_front_count: self.burning.len(),
            burnt_fraction: map.count_phase(BurnPhase::Burnt) as f64 / flammable as f64,
            fire_center: self.center,
            spread_angle: self.spread_angle,
            dist_to_boundaries,
            dist_to_water: if dist_to_water.is_finite() {
                dist_to_water
            } else {
                map.diagonal_m()
            },
            dist_to_fireline,
        }
    }
}

/// Distance in meters from each cell center to the nearest water source.
pub fn water_distance_field(map: &GridMap) -> Vec<f64> {
    (0..map.len())
        .map(|i| {
            map.nearest(map.cell_center_m(map.coord(i)), &map.water_sources)
                .map_or(map.diagonal_m(), |(_, d)| d)
        })
        .collect()
}

pub fn fire_stats(
    map: &GridMap,
    fireline: &[Footprint],
    recent: &RecentIgnitions,
    previous: Option<&FireStats>,
) -> FireStats {
    let view = FireView::observe(
        map,
        recent,
        previous.and_then(|p| p.fire_center),
        previous.map_or(0.0, |p| p.spread_angle),
    );
    view.stats(map, fireline, &water_distance_field(map))
}
