#!/usr/bin/env python3
"""Regenerates data/ieee39.case from the public New England 39-bus data.

Branch reactances and the load/generation profile follow the MATPOWER
`case39` listing (100 MVA base). Susceptances are 1/x with resistance and
line charging dropped, which gives the lossless model the simulator uses.
Inertia constants H (s, on the 100 MVA system base) are the classic machine
data; M = 2H / (2 pi 60). Damping is 1 on every bus, and the cost weights
are drawn uniformly from (0, 1) with the seed below, then frozen in the file.
"""

import math
import random
import sys

SEED = 20170314

BRANCHES = [
    (1, 2, 0.0411), (1, 39, 0.0250), (2, 3, 0.0151), (2, 25, 0.0086),
    (2, 30, 0.0181), (3, 4, 0.0213), (3, 18, 0.0133), (4, 5, 0.0128),
    (4, 14, 0.0129), (5, 6, 0.0026), (5, 8, 0.0112), (6, 7, 0.0092),
    (6, 11, 0.0082), (6, 31, 0.0250), (7, 8, 0.0046), (8, 9, 0.0363),
    (9, 39, 0.0250), (10, 11, 0.0043), (10, 13, 0.0043), (10, 32, 0.0200),
    (12, 11, 0.0435), (12, 13, 0.0435), (13, 14, 0.0101), (14, 15, 0.0217),
    (15, 16, 0.0094), (16, 17, 0.0089), (16, 19, 0.0195), (16, 21, 0.0135),
    (16, 24, 0.0059), (17, 18, 0.0082), (17, 27, 0.0173), (19, 20, 0.0138),
    (19, 33, 0.0142), (20, 34, 0.0180), (21, 22, 0.0140), (22, 23, 0.0096),
    (22, 35, 0.0143), (23, 24, 0.0350), (23, 36, 0.0272), (25, 26, 0.0323),
    (25, 37, 0.0232), (26, 27, 0.0147), (26, 28, 0.0474), (26, 29, 0.0625),
    (28, 29, 0.0151), (29, 38, 0.0156),
]

LOAD_MW = {
    1: 97.6, 3: 322.0, 4: 500.0, 7: 233.8, 8: 522.0, 9: 6.5, 12: 8.53,
    15: 320.0, 16: 329.0, 18: 158.0, 20: 680.0, 21: 274.0, 23: 247.5,
    24: 308.6, 25: 224.0, 26: 139.0, 27: 281.0, 28: 206.0, 29: 283.5,
    31: 9.2, 39: 1104.0,
}

# bus 31 is the slack; its output is set below so that the lossless model balances
GEN_MW = {30: 250.0, 32: 650.0, 33: 632.0, 34: 508.0, 35: 650.0,
          36: 560.0, 37: 540.0, 38: 830.0, 39: 1000.0}

INERTIA_H = {30: 42.0, 31: 30.3, 32: 35.8, 33: 28.6, 34: 26.0,
             35: 34.8, 36: 26.4, 37: 24.3, 38: 34.5, 39: 500.0}

BASE_MVA = 100.0


def main(out):
    rng = random.Random(SEED)
    gen = dict(GEN_MW)
    gen[31] = sum(LOAD_MW.values()) - sum(GEN_MW.values())
    omega_s = 2.0 * math.pi * 60.0
    lines = [
        "# New England 39-bus system, lossless reduction. Regenerate with scripts/make_ieee39.py.",
        "schema: freqctl-case/1",
        "name: ieee39",
        f"base_mva: {BASE_MVA:g}",
        "metadata:",
        '  source: "MATPOWER case39 branch reactances and dispatch; B = 1/x, r and charging dropped"',
        f'  slack: "bus 31 output set to {gen[31]:.2f} MW to balance the lossless model"',
        '  inertia: "M = 2H/(2*pi*60) from the classic machine constants on the 100 MVA base"',
        f'  costs: "C_i uniform in (0, 1), Python random.Random({SEED})"',
        "cost_profile: {family: linear, a: 1}",
        "buses:",
    ]
    for bus in range(1, 40):
        p = (gen.get(bus, 0.0) - LOAD_MW.get(bus, 0.0)) / BASE_MVA
        c = rng.random()
        if bus in INERTIA_H:
            m = 2.0 * INERTIA_H[bus] / omega_s
            lines.append(f"  - {{id: {bus}, kind: generator, M: {m!r}, D: 1, P: {p!r}, cost: {{C: {c!r}}}}}")
        else:
            lines.append(f"  - {{id: {bus}, kind: responsive, D: 1, P: {p!r}, cost: {{C: {c!r}}}}}")
    lines.append("branches:")
    for i, j, x in BRANCHES:
        lines.append(f"  - {{i: {i}, j: {j}, B: {1.0 / x!r}}}")
    out.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.stdout)
