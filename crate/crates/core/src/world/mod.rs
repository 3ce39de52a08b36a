//! Terrain raster, scenario files and the weather process.

pub(crate) mod scenario;
mod weather;

pub use scenario::{load_scenario, parse_scenario, DamageCoeffs, Scenario, ScenarioError};
pub use weather::{sample_wind_direction, weather_at, WeatherConfig, WeatherError, WeatherState};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerrainClass {
    Road,
    Water,
    Urban,
    Forest,
}

impl TerrainClass {
    pub fn is_flammable(self) -> bool {
        matches!(self, TerrainClass::Urban | TerrainClass::Forest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FuelType {
    Pine,
    LeafLitter,
    Needles,
    FallenLeaves,
}

impl FuelType {
    pub const ALL: [FuelType; 4] = [
        FuelType::Pine,
        FuelType::LeafLitter,
        FuelType::Needles,
        FuelType::FallenLeaves,
    ];

    pub fn index(self) -> usize {
        match self {
            FuelType::Pine => 0,
            FuelType::LeafLitter => 1,
            FuelType::Needles => 2,
            FuelType::FallenLeaves => 3,
        }
    }

    /// Dry fuel load in kg/m².
    pub fn default_load(self) -> f64 {
        match self {
            FuelType::Pine => 3.0,
            FuelType::LeafLitter => 1.2,
            FuelType::Needles => 1.8,
            FuelType::FallenLeaves => 0.9,
        }
    }

    pub fn code(self) -> char {
        match self {
            FuelType::Pine => 'P',
            FuelType::LeafLitter => 'L',
            FuelType::Needles => 'N',
            FuelType::FallenLeaves => 'F',
        }
    }

    pub fn from_code(c: char) -> Option<FuelType> {
        match c {
            'P' => Some(FuelType::Pine),
            'L' => Some(FuelType::LeafLitter),
            'N' => Some(FuelType::Needles),
            'F' => Some(FuelType::FallenLeaves),
            _ => None,
        }
    }
}

/// Burn phase of a cell. Flammable cells only ever move forward along
/// `Combustible -> EarlyBurning -> FullBurning -> Extinguishing -> Burnt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BurnPhase {
    NonFlammable,
    Combustible,
    EarlyBurning,
    FullBurning,
    Extinguishing,
    Burnt,
}

impl BurnPhase {
    /// Stable integer code used by replay frames.
    pub fn code(self) -> u8 {
        match self {
            BurnPhase::NonFlammable => 0,
            BurnPhase::Combustible => 1,
            BurnPhase::EarlyBurning => 2,
            BurnPhase::FullBurning => 3,
            BurnPhase::Extinguishing => 4,
            BurnPhase::Burnt => 5,
        }
    }

    pub fn is_burning(self) -> bool {
        matches!(self, BurnPhase::EarlyBurning | BurnPhase::FullBurning)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub terrain: TerrainClass,
    /// `None` exactly for roads and water.
    pub fuel: Option<FuelType>,
    pub phase: BurnPhase,
    /// Meters above datum.
    pub elevation: f64,
    /// Fuel moisture fraction in `[0, 1]`.
    pub moisture: f64,
    /// kg/m².
    pub fuel_load: f64,
    /// Minutes spent in the current burn phase.
    pub phase_age: f64,
}

impl Cell {
    pub fn new(
        terrain: TerrainClass,
        fuel: Option<FuelType>,
        elevation: f64,
        moisture: f64,
    ) -> Self {
        let flammable = terrain.is_flammable();
        Cell {
            terrain,
            fuel: if flammable { fuel } else { None },
            phase: if flammable {
                BurnPhase::Combustible
            } else {
                BurnPhase::NonFlammable
            },
            elevation,
            moisture: if flammable {
                moisture.clamp(0.0, 1.0)
            } else {
                0.0
            },
            fuel_load: if flammable {
                fuel.map_or(0.0, FuelType::default_load)
            } else {
                0.0
            },
            phase_age: 0.0,
        }
    }

    /// Terrain code as it appears in scenario files.
    pub fn code(&self) -> char {
        match self.terrain {
            TerrainClass::Road => 'R',
            TerrainClass::Water => 'W',
            TerrainClass::Urban => 'U',
            TerrainClass::Forest => self.fuel.map_or('F', FuelType::code),
        }
    }
}

/// Cell coordinate `(x, y)`: `x` is the column, `y` the row, row 0 is the north edge.
pub type CellCoord = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub width: usize,
    pub height: usize,
    /// Meters per cell side.
    pub cell_size: f64,
    /// Row-major.
    pub cells: Vec<Cell>,
    pub airports: Vec<CellCoord>,
    pub water_sources: Vec<CellCoord>,
    /// Persons per m² in urban cells.
    pub population_density: f64,
}

/// The eight compass offsets, starting east and turning towards +y.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

impl GridMap {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn index(&self, (x, y): CellCoord) -> usize {
        y * self.width + x
    }

    pub fn coord(&self, idx: usize) -> CellCoord {
        (idx % self.width, idx / self.width)
    }

    pub fn in_bounds(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn cell(&self, at: CellCoord) -> &Cell {
        &self.cells[self.index(at)]
    }

    pub fn cell_mut(&mut self, at: CellCoord) -> &mut Cell {
        let idx = self.index(at);
        &mut self.cells[idx]
    }

    /// Indices of the in-bounds 8-neighbours of `idx`, in `NEIGHBOR_OFFSETS` order.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.coord(idx);
        NEIGHBOR_OFFSETS.iter().filter_map(move |&(dx, dy)| {
            let nx = x as isize + dx;
            let ny = y as isize + dy;
            self.in_bounds(nx, ny)
                .then(|| ny as usize * self.width + nx as usize)
        })
    }

    /// Center of a cell in meters.
    pub fn cell_center_m(&self, (x, y): CellCoord) -> (f64, f64) {
        (
            (x as f64 + 0.5) * self.cell_size,
            (y as f64 + 0.5) * self.cell_size,
        )
    }

    /// Cell containing a metric position, clamped to the grid.
    pub fn cell_at_m(&self, (px, py): (f64, f64)) -> CellCoord {
        let x = (px / self.cell_size)
            .floor()
            .clamp(0.0, (self.width - 1) as f64);
        let y = (py / self.cell_size)
            .floor()
            .clamp(0.0, (self.height - 1) as f64);
        (x as usize, y as usize)
    }

    pub fn diagonal_m(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64) * self.cell_size
    }

    pub fn flammable_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.terrain.is_flammable())
            .count()
    }

    pub fn is_edge(&self, idx: usize) -> bool {
        let (x, y) = self.coord(idx);
        x == 0 || y == 0 || x + 1 == self.width || y + 1 == self.height
    }

    pub fn count_phase(&self, phase: BurnPhase) -> usize {
        self.cells.iter().filter(|c| c.phase == phase).count()
    }

    /// Nearest point of `targets` to `from` (meters), ties to the first listed.
    pub fn nearest(&self, from: (f64, f64), targets: &[CellCoord]) -> Option<(CellCoord, f64)> {
        targets
            .iter()
            .map(|&c| {
                let (cx, cy) = self.cell_center_m(c);
                (c, (cx - from.0).hypot(cy - from.1))
            })
            .fold(None, |best: Option<(CellCoord, f64)>, cand| match best {
                Some(b) if b.1 <= cand.1 => Some(b),
                _ => Some(cand),
            })
    }
}
