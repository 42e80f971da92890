#!/usr/bin/env python3
"""Writes the synthetic ten-zone North Sea instance into this directory.

Five Norwegian hydro zones, Sweden, Denmark, Germany, the Netherlands and
Great Britain, with a candidate NO2-DE cable. Scenarios are weather years
that differ in hydro inflow, wind and demand; periods are representative
hours in four seasons. Output is deterministic for a given seed.
"""

import csv
import math
import random
from pathlib import Path

SEED = 20240601
N_SCENARIOS = 6
SEASONS = ["winter", "spring", "summer", "autumn"]
PERIODS_PER_SEASON = 4
ELASTICITY = -0.1

HERE = Path(__file__).resolve().parent

# zone, country, reference demand MW, reference price EUR/MWh
ZONES = [
    ("NO1", "NO", 3500, 35.0),
    ("NO2", "NO", 3000, 35.0),
    ("NO3", "NO", 2500, 35.0),
    ("NO4", "NO", 1800, 35.0),
    ("NO5", "NO", 2000, 35.0),
    ("SE", "SE", 13300, 38.0),
    ("DK", "DK", 2000, 42.0),
    ("DE", "DE", 24000, 45.0),
    ("NL", "NL", 25600, 60.0),
    ("GB", "GB", 65000, 62.0),
]

LINES = [
    ("NO1-NO2", "NO1", "NO2", 2500),
    ("NO1-NO3", "NO1", "NO3", 1500),
    ("NO3-NO4", "NO3", "NO4", 1200),
    ("NO1-NO5", "NO1", "NO5", 1500),
    ("NO5-NO2", "NO5", "NO2", 800),
    ("NO1-SE", "NO1", "SE", 2900),
    ("NO3-SE", "NO3", "SE", 600),
    ("NO2-DK", "NO2", "DK", 7000),
    ("SE-DK", "SE", "DK", 1800),
    ("SE-DE", "SE", "DE", 1500),
    ("DK-DE", "DK", "DE", 2500),
    ("DE-NL", "DE", "NL", 14500),
    ("NO2-NL", "NO2", "NL", 950),
    ("NL-GB", "NL", "GB", 1000),
]
CANDIDATE = ("NO2-DE", "NO2", "DE", 0, 55000.0)

# gen, zone, g_max MW, marginal cost by season, slope EUR/MWh per MW, seasonal energy MWh (or None)
GENERATORS = [
    ("hyd_NO1", "NO1", 4500, [20, 14, 10, 16], 0.0048, 17800),
    ("hyd_NO2", "NO2", 7000, [18, 12, 9, 15], 0.0036, 26200),
    ("hyd_NO3", "NO3", 3500, [21, 15, 11, 17], 0.006, 13100),
    ("hyd_NO4", "NO4", 2500, [22, 15, 11, 17], 0.0072, 9500),
    ("hyd_NO5", "NO5", 3000, [19, 13, 10, 16], 0.006, 11900),
    ("nuc_SE", "SE", 8000, [12, 12, 12, 12], 0.0012, None),
    ("hyd_SE", "SE", 9000, [25, 18, 14, 20], 0.0036, 33300),
    ("gas_DK", "DK", 3000, [48, 46, 45, 47], 0.0052, None),
    ("coal_DE", "DE", 16600, [30, 29, 28, 29], 0.0022, None),
    ("gas_DE", "DE", 8000, [52, 50, 48, 51], 0.0035, None),
    ("gas_NL", "NL", 14000, [58, 57, 56, 57], 0.0013, None),
    ("gas_GB", "GB", 30000, [60, 59, 58, 59], 0.0007, None),
    ("nuc_GB", "GB", 8000, [10, 10, 10, 10], 0.00044, None),
]

# ren, zone, installed MW, kind
RENEWABLES = [
    ("wind_DE", "DE", 12000, "wind"),
    ("solar_DE", "DE", 8000, "solar"),
    ("wind_DK", "DK", 3500, "wind"),
    ("wind_GB", "GB", 9000, "wind"),
    ("wind_NL", "NL", 3000, "wind"),
]

SEASON_WIND = [0.45, 0.35, 0.22, 0.40]
SEASON_SOLAR = [0.05, 0.25, 0.40, 0.15]
SEASON_DEMAND = [1.15, 1.0, 0.9, 1.05]


def write(name, header, rows):
    with open(HERE / name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def fmt(x):
    return f"{x:.6g}"


def main():
    rng = random.Random(SEED)
    n_periods = len(SEASONS) * PERIODS_PER_SEASON

    write("nodes.csv", ["node_id", "country"], [(z, c) for z, c, _, _ in ZONES])
    lines = [(i, a, b, f, 0, 0) for i, a, b, f in LINES]
    lines.append((CANDIDATE[0], CANDIDATE[1], CANDIDATE[2], CANDIDATE[3], fmt(CANDIDATE[4]), 1))
    write("lines.csv", ["line_id", "from", "to", "f_max_mw", "inv_cost_eur_per_mw_yr", "expandable"], lines)
    write(
        "generators.csv",
        ["gen_id", "node_id", "g_max_mw", "inv_cost_eur_per_mw_yr", "expandable", "cost_slope_eur_per_mwh_per_mw"],
        [(g, z, gmax, 0, 0, fmt(slope)) for g, z, gmax, _, slope, _ in GENERATORS],
    )
    write(
        "gen_costs.csv",
        ["gen_id", "season", "marg_cost_eur_per_mwh"],
        [(g, s, fmt(c)) for g, _, _, costs, _, _ in GENERATORS for s, c in zip(SEASONS, costs)],
    )
    write(
        "renewables.csv",
        ["ren_id", "node_id", "g_r_mw", "inv_cost_eur_per_mw_yr", "expandable"],
        [(r, z, cap, 0, 0) for r, z, cap, _ in RENEWABLES],
    )
    write(
        "periods.csv",
        ["period", "season"],
        [(t, SEASONS[t // PERIODS_PER_SEASON]) for t in range(n_periods)],
    )

    raw = [rng.uniform(0.5, 1.5) for _ in range(N_SCENARIOS)]
    probs = [round(r / sum(raw), 6) for r in raw]
    probs[-1] = round(1.0 - sum(probs[:-1]), 6)
    write("scenarios.csv", ["scenario", "probability"], [(w, fmt(p)) for w, p in enumerate(probs)])

    # Weather years: Nordic inflow and continental wind move independently.
    inflow = [rng.uniform(0.6, 1.4) for _ in range(N_SCENARIOS)]
    wind_level = [rng.uniform(0.6, 1.4) for _ in range(N_SCENARIOS)]
    demand_level = [rng.uniform(0.95, 1.05) for _ in range(N_SCENARIOS)]

    limits = []
    for g, _, _, _, _, energy in GENERATORS:
        if energy is None:
            continue
        for w in range(N_SCENARIOS):
            for s in SEASONS:
                limits.append((g, w, s, fmt(energy * inflow[w])))
    write("gen_energy_limits.csv", ["gen_id", "scenario", "season", "q_max_mwh"], limits)

    curves = []
    profiles = []
    for w in range(N_SCENARIOS):
        for t in range(n_periods):
            s = t // PERIODS_PER_SEASON
            hour = t % PERIODS_PER_SEASON
            daily = 1.0 + 0.08 * math.sin(2 * math.pi * hour / PERIODS_PER_SEASON)
            for z, _, d0, p0 in ZONES:
                d = d0 * SEASON_DEMAND[s] * demand_level[w] * daily * rng.uniform(0.97, 1.03)
                slope = p0 / (ELASTICITY * d)
                intercept = p0 - slope * d
                curves.append((w, z, t, fmt(slope), fmt(intercept)))
            for r, _, _, kind in RENEWABLES:
                if kind == "wind":
                    f = SEASON_WIND[s] * wind_level[w] * rng.uniform(0.4, 1.6)
                else:
                    f = SEASON_SOLAR[s] * max(0.0, math.sin(math.pi * (hour + 0.5) / PERIODS_PER_SEASON))
                profiles.append((r, w, t, fmt(min(1.0, max(0.0, f)))))
    write("demand_curves.csv", ["scenario", "node_id", "period", "slope", "intercept"], curves)
    write("ren_profiles.csv", ["ren_id", "scenario", "period", "factor"], profiles)


if __name__ == "__main__":
    main()
