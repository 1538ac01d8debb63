#!/usr/bin/env python3
"""Writes data/ieee33_belgian20.json.

IEEE 33-bus feeder (Baran-Wu impedances and nominal loads) coupled to a
20-node radial gas distribution tree.  Daily profiles are representative
shapes, not measured data.
"""

import json
import math
import pathlib

BASE_KV = 12.66
BASE_KVA = 1000.0
Z_BASE = BASE_KV**2 * 1000.0 / BASE_KVA  # ohm

# from, to, r ohm, x ohm
FEEDER = [
    (1, 2, 0.0922, 0.0470), (2, 3, 0.4930, 0.2511), (3, 4, 0.3660, 0.1864),
    (4, 5, 0.3811, 0.1941), (5, 6, 0.8190, 0.7070), (6, 7, 0.1872, 0.6188),
    (7, 8, 0.7114, 0.2351), (8, 9, 1.0300, 0.7400), (9, 10, 1.0440, 0.7400),
    (10, 11, 0.1966, 0.0650), (11, 12, 0.3744, 0.1238), (12, 13, 1.4680, 1.1550),
    (13, 14, 0.5416, 0.7129), (14, 15, 0.5910, 0.5260), (15, 16, 0.7463, 0.5450),
    (16, 17, 1.2890, 1.7210), (17, 18, 0.7320, 0.5740), (2, 19, 0.1640, 0.1565),
    (19, 20, 1.5042, 1.3554), (20, 21, 0.4095, 0.4784), (21, 22, 0.7089, 0.9373),
    (3, 23, 0.4512, 0.3083), (23, 24, 0.8980, 0.7091), (24, 25, 0.8960, 0.7011),
    (6, 26, 0.2030, 0.1034), (26, 27, 0.2842, 0.1447), (27, 28, 1.0590, 0.9337),
    (28, 29, 0.8042, 0.7006), (29, 30, 0.5075, 0.2585), (30, 31, 0.9744, 0.9630),
    (31, 32, 0.3105, 0.3619), (32, 33, 0.3410, 0.5302),
]

# bus: (kW, kvar)
LOADS = {
    2: (100, 60), 3: (90, 40), 4: (120, 80), 5: (60, 30), 6: (60, 20), 7: (200, 100),
    8: (200, 100), 9: (60, 20), 10: (60, 20), 11: (45, 30), 12: (60, 35), 13: (60, 35),
    14: (120, 80), 15: (60, 10), 16: (60, 20), 17: (60, 20), 18: (90, 40), 19: (90, 40),
    20: (90, 40), 21: (90, 40), 22: (90, 40), 23: (90, 50), 24: (420, 200), 25: (420, 200),
    26: (60, 25), 27: (60, 25), 28: (60, 20), 29: (120, 70), 30: (200, 600), 31: (150, 70),
    32: (210, 100), 33: (60, 40),
}

# Hourly load factor relative to nominal.
LOAD_SHAPE = [0.55, 0.50, 0.48, 0.47, 0.48, 0.55, 0.65, 0.75, 0.82, 0.85, 0.86, 0.87,
              0.85, 0.83, 0.82, 0.84, 0.88, 0.92, 0.90, 0.86, 0.80, 0.72, 0.64, 0.58]

ELECTRICITY_PRICE = [0.05] * 8 + [0.10] * 3 + [0.16] * 4 + [0.10] * 3 + [0.16] * 4 + [0.08] * 2
GAS_PRICE = [0.28] * 7 + [0.31] * 10 + [0.33] * 5 + [0.29] * 2


def pv(peak):
    return [round(peak * max(0.0, math.sin(math.pi * (h - 6) / 13)), 3) for h in range(24)]


def wind(mean, phase):
    return [round(mean * (1.0 + 0.45 * math.cos(2 * math.pi * (h - phase) / 24)), 3)
            for h in range(24)]


# Radial gas tree: (from, to, weymouth constant m3/(h*bar)).
GAS_TREE = [
    (0, 1, 300), (1, 2, 300), (2, 3, 300), (3, 4, 250), (4, 5, 250), (5, 6, 200),
    (6, 7, 150), (3, 8, 250), (8, 9, 200), (9, 10, 150), (5, 11, 200), (11, 12, 150),
    (12, 13, 120), (7, 14, 120), (14, 15, 120), (15, 16, 100), (10, 17, 150), (17, 18, 120),
    (18, 19, 100),
]

# node: nominal methane demand m3/h
GAS_LOADS = {
    1: 150, 2: 220, 3: 180, 4: 260, 5: 200, 6: 240, 7: 160, 8: 210, 9: 230, 10: 170,
    11: 150, 12: 190, 13: 140, 14: 120, 15: 130, 16: 110, 17: 140, 18: 150, 19: 130,
}

GAS_SHAPE = [0.80, 0.78, 0.77, 0.78, 0.85, 0.95, 1.05, 1.10, 1.05, 1.00, 0.97, 0.95,
             0.94, 0.93, 0.95, 0.98, 1.05, 1.12, 1.15, 1.10, 1.02, 0.95, 0.88, 0.83]


def main():
    buses = []
    for b in range(1, 34):
        entry = {"id": f"E{b}", "v_min": 0.95, "v_max": 1.05}
        if b == 1:
            entry["v_min"] = 1.0
        if b in LOADS:
            p, q = LOADS[b]
            entry["p_load"] = [round(p * f, 3) for f in LOAD_SHAPE]
            entry["q_load"] = [round(q * f, 3) for f in LOAD_SHAPE]
        buses.append(entry)
    branches = [{"id": f"L{a}_{b}", "from": f"E{a}", "to": f"E{b}",
                 "r": round(r / Z_BASE, 8), "x": round(x / Z_BASE, 8)} for a, b, r, x in FEEDER]

    nodes = []
    for n in range(20):
        entry = {"id": f"G{n}", "p_min": 30.0, "p_max": 70.0}
        if n == 0:
            entry["p_min"] = 55.0
        if n in GAS_LOADS:
            entry["load"] = [round(GAS_LOADS[n] * f, 3) for f in GAS_SHAPE]
        nodes.append(entry)
    pipes = [{"id": f"P{a}_{b}", "from": f"G{a}", "to": f"G{b}", "weymouth": float(c)}
             for a, b, c in GAS_TREE]

    et = dict(rated_kw=500.0, efficiency=0.7, capital_cost=50000.0, lifetime_h=80000.0)
    fc = dict(rated_kw=400.0, efficiency=0.6, capital_cost=40000.0, lifetime_h=60000.0)
    bat = dict(rated_kw=300.0, capacity_kwh=900.0, capacity_cost=50.0, power_cost=20.0,
               soc_min=0.1, soc_max=0.9, initial_soc=0.5, dod=0.8)
    scenario = {
        "schema_version": 1,
        "name": "ieee33_belgian20",
        "variant": "model1",
        "horizon": {"periods": 24, "dt_hours": 1.0},
        "units": {"mj_per_kwh": 3.6, "base_kva": BASE_KVA},
        "market": {"gas_price": GAS_PRICE, "electricity_price": ELECTRICITY_PRICE,
                   "export_price": 0.0},
        "blend": {"hhv_ch4": 39.8, "hhv_h2": 12.7, "omega_max": 0.2},
        "gas_network": {"source_node": "G0", "nodes": nodes, "pipes": pipes},
        "power_network": {"root_bus": "E1", "buses": buses, "branches": branches},
        "devices": {
            "electrolyzers": [
                {"id": "ET17", "bus": "E17", "gas_node": "G0", **et},
                {"id": "ET24", "bus": "E24", "gas_node": "G0", **et},
            ],
            "fuel_cells": [
                {"id": "FC6", "bus": "E6", "gas_node": "G8", **fc},
                {"id": "FC12", "bus": "E12", "gas_node": "G4", **fc},
            ],
            "hydrogen_tanks": [
                {"id": "HT0", "gas_node": "G0", "capacity_m3": 2000.0, "capacity_cost": 20.0,
                 "lifetime_days": 3650.0},
            ],
            "batteries": [
                {"id": "B17", "bus": "E17", **bat},
                {"id": "B32", "bus": "E32", **bat},
            ],
            "ders": [
                {"id": "PV17", "bus": "E17", "p_forecast": pv(900.0)},
                {"id": "WT21", "bus": "E21", "p_forecast": wind(450.0, 2)},
                {"id": "PV24", "bus": "E24", "p_forecast": pv(1100.0)},
                {"id": "WT32", "bus": "E32", "p_forecast": wind(600.0, 4)},
            ],
        },
        "uncertainty": {"load_radius": 0.05, "der_radius": 0.15, "orientation": "symmetric"},
        "algorithm": {},
    }
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "ieee33_belgian20.json"
    out.write_text(json.dumps(scenario, indent=2) + "\n")


if __name__ == "__main__":
    main()
