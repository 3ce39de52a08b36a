#!/usr/bin/env python3
"""Writes the bundled 64x64 scenario.

A forested valley rising to the north, a town in the south, two lakes and
two airfields. Region maxima are the exact totals of burning every
flammable cell, so the file validates against the loader's check.

    python3 scenarios/generate.py > scenarios/palisades-small.toml
"""

import os
import random

W = H = 64
CELL = 100.0
FUEL_LOAD = {"P": 3.0, "L": 1.2, "N": 1.8, "F": 0.9}
URBAN_FUEL = "L"
POP_DENSITY = 0.004
COST_URBAN = 2.0e6
COST_FOREST = 2.0e4
EMISSION = 0.0016
LETHALITY = 0.02
FIRE = {
    "base_ignition_prob": 0.08,
    "wind_coupling": 0.12,
    "early_dwell": 5.0,
    "full_dwell": 20.0,
    "extinguish_dwell": 20.0,
}


def build():
    rng = random.Random(20250107)
    grid = [["P"] * W for _ in range(H)]

    # fuel patches
    for _ in range(90):
        cx, cy = rng.randrange(W), rng.randrange(H)
        r = rng.randint(2, 6)
        f = rng.choice("LNFN")
        for y in range(max(0, cy - r), min(H, cy + r + 1)):
            for x in range(max(0, cx - r), min(W, cx + r + 1)):
                if (x - cx) ** 2 + (y - cy) ** 2 <= r * r:
                    grid[y][x] = f

    # town in the south
    for y in range(46, 58):
        for x in range(22, 46):
            grid[y][x] = "U"
    # lakes: south-west and north-east
    lakes = [(9, 52, 4), (54, 10, 3)]
    for cx, cy, r in lakes:
        for y in range(H):
            for x in range(W):
                if (x - cx) ** 2 + (y - cy) ** 2 <= r * r:
                    grid[y][x] = "W"
    # a road out of town towards the east edge
    for x in range(34, W):
        grid[58][x] = "R"
    # airfields
    airports = [(60, 60), (4, 4)]
    for x, y in airports:
        grid[y][x] = "R"

    water = [
        [x, y]
        for y in range(H)
        for x in range(W)
        if grid[y][x] == "W"
        and any(
            0 <= x + dx < W and 0 <= y + dy < H and grid[y + dy][x + dx] != "W"
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
        )
    ]
    elevation = [round((H - 1 - y) * 6.0 + 4.0 * ((x * 7 + y * 3) % 5), 1) for y in range(H) for x in range(W)]
    return grid, airports, water, elevation


def maxima(grid):
    area = CELL * CELL
    ba = cost = em = cas = 0.0
    for row in grid:
        for c in row:
            if c in FUEL_LOAD:
                ba += area
                cost += COST_FOREST
                em += EMISSION * FUEL_LOAD[c] * area
            elif c == "U":
                ba += area
                cost += COST_URBAN
                cas += LETHALITY * POP_DENSITY * area
    return ba, cost, em, cas


def main():
    grid, airports, water, elevation = build()
    ba, cost, em, cas = maxima(grid)
    out = []
    p = out.append
    p("# Generated by scenarios/generate.py")
    p("ignition = [30, 30]")
    p(f"airports = {[list(a) for a in airports]}")
    p(f"water_sources = {water}")
    p("")
    p("[grid]")
    p(f"width = {W}")
    p(f"height = {H}")
    p(f"cell_size_m = {CELL}")
    p(f'urban_fuel = "{URBAN_FUEL}"')
    p(f"population_density = {POP_DENSITY}")
    p("base_moisture = 0.08")
    p('terrain = """')
    for row in grid:
        p("".join(row))
    p('"""')
    p("elevation = [")
    for y in range(H):
        p("  " + ", ".join(f"{v:.1f}" for v in elevation[y * W:(y + 1) * W]) + ",")
    p("]")
    p("")
    p("[weather]")
    p("temp_min = 14.0")
    p("temp_max = 34.0")
    p("hum_min = 12.0")
    p("hum_max = 55.0")
    p("wind_base = 7.0")
    p("wind_amp = 3.0")
    p("wind_period = 360.0")
    p("day_length = 1440")
    p("wind_jitter = 15.0")
    p("")
    p("[episode]")
    p("step_minutes = 10")
    p("max_steps = 96")
    p("detection_delay_min = 60")
    p("")
    p("[maxima]")
    p(f"MBA = {ba!r}")
    p(f"MCA = {cost!r}")
    p(f"ME = {em!r}")
    p(f"MC = {cas!r}")
    p("")
    p("[damage]")
    p(f"cost_per_urban_cell = {COST_URBAN!r}")
    p(f"cost_per_forest_cell = {COST_FOREST!r}")
    p(f"emissions_per_kg_fuel = {EMISSION!r}")
    p(f"lethality = {LETHALITY!r}")
    p("")
    p("[fire]")
    for k, v in FIRE.items():
        p(f"{k} = {float(os.environ.get(k.upper(), v))!r}")
    for a in range(2):
        p("")
        p("[[fleet]]")
        p('type = "DHC-515"')
        p("cruise_speed_mps = 92.5")
        p("capacity_l = 7000.0")
        p("burn_rate_per_min = 0.004166")
        p(f"start_airport = {a}")
    print("\n".join(out))


if __name__ == "__main__":
    main()
