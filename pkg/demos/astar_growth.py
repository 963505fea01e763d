"""A* expansions on nearly flat matrices grow geometrically with the length."""

import numpy as np

from ctcregex import astar_decode, compile_pattern, decode
from ctcregex.synth import DIGITS, near_flat_matrix

ext = compile_pattern("[0-9]{3,5}", DIGITS)
prev = None
for T in range(5, 11):
    counts, combos = [], []
    for s in range(30):
        m = near_flat_matrix(np.random.default_rng(1000 * T + s), T, DIGITS, 0.01)
        counts.append(astar_decode(ext, m).stats["expanded"])
        combos.append(decode(ext, m).stats["combinations"])
    g = float(np.exp(np.mean(np.log(counts))))
    ratio = f"x{g / prev:.2f}" if prev else ""
    print(f"T={T:2d}  A* expanded {g:8.0f} {ratio:>6}   table decoder {np.mean(combos):5.0f} combinations")
    prev = g
