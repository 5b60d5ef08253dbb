"""Regenerate the bundled 100-row cohort fixture.

AGE ~ N(72, 12) rounded and clipped to [18, 99]; RSBP = 160 + 0.5 (AGE - 72)
+ N(0, 27), rounded and clipped to [90, 260]. Seed 20240101.

    python3 demos/make_fixture.py > src/longterm_iv/data/ist_fixture.csv
"""

import sys

import numpy as np

rng = np.random.default_rng(20240101)
age = np.clip(np.rint(rng.normal(72, 12, 100)), 18, 99).astype(int)
rsbp = np.clip(np.rint(160 + 0.5 * (age - 72) + rng.normal(0, 27, 100)), 90, 260).astype(int)

out = sys.stdout
out.write("ID,AGE,RSBP\n")
for i, (a, s) in enumerate(zip(age, rsbp), start=1):
    out.write(f"{i},{a},{s}\n")
