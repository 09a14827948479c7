"""Constants for tests."""

from __future__ import annotations

from typing import Final

SEED: Final = 1234
ALPHA_CONSERVATIVE: Final = -3.0
ALPHA_AGGRESSIVE: Final = 0.5

# reference values of the default market
PI1_CONSERVATIVE: Final = -2.733333333
PI1_AGGRESSIVE: Final = -21.86666667
PI3_PRINTED_CONSERVATIVE: Final = 4.796052632
PI3_PRINTED_AGGRESSIVE: Final = 18.41842105
PI3_FOC_CONSERVATIVE: Final = 0.2187 / 0.1444
VASICEK_MEAN_T: Final = 0.04963369
VASICEK_VARIANCE_T: Final = 9.996645e-4
BOND_EXPOSURE_0: Final = 0.09816844
SURVIVAL_20: Final = 0.75
PHI_CONSTANT_RATE: Final = 0.1333333333

SMALL_CONFIG: Final = """\
# small run for tests
market.T = 5
sim.n_steps = 12
sim.n_paths = 64
sim.pilot_paths = 32
sim.batch_size = 16
sim.seed = 1234
plan.alphas = -3
verify.ode_steps = 100
verify.bsde_paths = 100
verify.oracle_paths = 500
compare.rivals = self, safe, scale:0.5
"""
