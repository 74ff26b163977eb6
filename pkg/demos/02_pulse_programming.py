#!/usr/bin/env python3
"""Programming a drift-model memristor to target conductances with pulses.

The device state x in [0, 1] sets its resistance between r_on (1e4 ohm,
x=1) and r_off (1e8 ohm, x=0).  Positive pulses push x up (more
conductive), negative pulses push it down; the programmer picks the
polarity and stops inside a relative tolerance band around the target.
"""

import time

from bprt import MemristorState, PulseSpec, memristance, program_to_conductance, step

# ---------------------------------------------------------------------------
# Free drift under a constant voltage.
state = MemristorState(x=0.5)
print(f"start: x = {state.x}, M = {memristance(state):.4g} ohm")
for _ in range(5):
    state = step(state, 1.0, 1e-3)  # 1 V for 1 ms per step
    print(f"  after +1 V, 1 ms: x = {state.x:.6f}, M = {memristance(state):.4g} ohm")

# ---------------------------------------------------------------------------
# Pulse programming.  The default 10 ns trim pulses are far too short to
# traverse the whole range (that trip needs ~50 s of drive at 1 V), so a
# range-crossing schedule uses wide pulses.
wide = PulseSpec(amplitude=1.0, width=10e-3, max_pulses=10_000, tolerance=0.01)

for target in (1e-5, 1e-7, 2e-5):
    t0 = time.perf_counter()
    final, schedule = program_to_conductance(
        MemristorState(x=0.0), target, wide, return_schedule=True
    )
    took = time.perf_counter() - t0
    g = 1.0 / memristance(final)
    drive = sum(duration for _, duration in schedule)
    print(
        f"target {target:8.1e} S: reached {g:.6e} S "
        f"(rel err {abs(g - target) / target:.2e}, {drive:6.2f} s of drive, "
        f"{took * 1e3:5.1f} ms wall)"
    )

# ---------------------------------------------------------------------------
# Programming is bidirectional: overshoot the target from the other rail.
final = program_to_conductance(MemristorState(x=1.0), 1e-6, wide)
print(f"from the doped rail down to 1e-6 S: got {1.0 / memristance(final):.6e} S")

# A target outside [1/r_off, 1/r_on] is rejected up front.
try:
    program_to_conductance(MemristorState(x=0.0), 1e-12, wide)
except Exception as err:
    print(f"out-of-range target: {type(err).__name__}: {err}")
