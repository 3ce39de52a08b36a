//! Map builders shared by unit tests.

use crate::world::{Cell, FuelType, GridMap, TerrainClass};

/// Flat pine forest, 100 m cells, airport in the corner, no water.
pub fn forest(width: usize, height: usize) -> GridMap {
    let cells = (0..width * height)
        .map(|_| Cell::new(TerrainClass::Forest, Some(FuelType::Pine), 0.0, 0.0))
        .collect();
    GridMap {
        width,
        height,
        cell_size: 100.0,
        cells,
        airports: vec![(0, 0)],
        water_sources: vec![],
        population_density: 0.004,
    }
}

pub fn set_terrain(map: &mut GridMap, at: (usize, usize), terrain: TerrainClass) {
    let fuel = map.cell(at).fuel.or(Some(FuelType::Pine));
    let elevation = map.cell(at).elevation;
    *map.cell_mut(at) = Cell::new(terrain, fuel, elevation, 0.0);
}
