use serde::{Deserialize, Serialize};

use super::Transition;
use crate::world::{BurnPhase, DamageCoeffs, GridMap, TerrainClass};

/// Cumulative damage of an episode. Every field only grows.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DamageLedger {
    /// m².
    pub burnt_area: f64,
    /// Euros.
    pub cost: f64,
    /// Tonnes CO₂.
    pub emissions: f64,
    /// Expected lives lost.
    pub casualties: f64,
}

/// Damage of burning the entire region; the MoE denominators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMaxima {
    pub mba: f64,
    pub mca: f64,
    pub me: f64,
    pub mc: f64,
}

fn cell_damage(map: &GridMap, idx: usize, k: &DamageCoeffs) -> DamageLedger {
    let cell = &map.cells[idx];
    let area = map.cell_size * map.cell_size;
    match cell.terrain {
        TerrainClass::Forest => DamageLedger {
            burnt_area: area,
            cost: k.cost_per_forest_cell,
            emissions: k.emissions_per_kg_fuel * cell.fuel_load * area,
            casualties: 0.0,
        },
        TerrainClass::Urban => DamageLedger {
            burnt_area: area,
            cost: k.cost_per_urban_cell,
            emissions: 0.0,
            casualties: k.lethality * map.population_density * area,
        },
        TerrainClass::Road | TerrainClass::Water => DamageLedger::default(),
    }
}

impl DamageLedger {
    fn add(&mut self, d: &DamageLedger) {
        self.burnt_area += d.burnt_area;
        self.cost += d.cost;
        self.emissions += d.emissions;
        self.casualties += d.casualties;
    }
}

/// Charges every transition into `Burnt` to the ledger.
pub fn accrue_damage(
    ledger: &DamageLedger,
    transitions: &[Transition],
    map: &GridMap,
    coeffs: &DamageCoeffs,
) -> DamageLedger {
    let mut out = *ledger;
    for t in transitions.iter().filter(|t| t.to == BurnPhase::Burnt) {
        out.add(&cell_damage(map, t.cell, coeffs));
    }
    out
}

/// Ledger after every flammable cell of `map` has burnt.
pub fn full_burn_damage(map: &GridMap, coeffs: &DamageCoeffs) -> DamageLedger {
    let mut total = DamageLedger::default();
    for idx in 0..map.len() {
        total.add(&cell_damage(map, idx, coeffs));
    }
    total
}
