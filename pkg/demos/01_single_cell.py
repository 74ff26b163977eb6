#!/usr/bin/env python3
"""A tour of one threshold cell: weights, divider voltage, and decisions.

A cell memorizes a block of template pixels as one of two conductance
levels per input, then answers "did this block change?" for any test
block by thresholding a voltage-divider node.
"""

import numpy as np

from bprt import (
    CellParams,
    assign_weights_hard,
    assign_weights_soft,
    divider_output,
    evaluate_cell,
    threshold_soft,
)

params = CellParams()  # w_h=1e-7 S, w_l=1e-5 S, w_0=2e-5 S, t_a=0.5 V

# ---------------------------------------------------------------------------
# Training: a dark 4-pixel block in a frame whose mean voltage is 0.6 V.
# Every pixel sits below the mean, so all four weights get the low label.
template_block = [0.2, 0.3, 0.3, 0.1]
x_a = 0.6
weights = assign_weights_hard(template_block, x_a, params)
print("template block:", template_block)
print("weights [S]:   ", weights.g)

out = evaluate_cell(template_block, weights, params)
print(f"on its own template: x0 = {out.x0:.4f} V -> output {out.xout:.0f} V (match)")

# ---------------------------------------------------------------------------
# A large brightening pushes the divider past the 0.5 V threshold.
bright = [0.9, 0.9, 0.8, 1.0]
out = evaluate_cell(bright, weights, params)
print(f"bright test {bright}: x0 = {out.x0:.4f} V -> output {out.xout:.0f} V (change)")

# A small wobble does not.
small = [0.3, 0.3, 0.3, 0.1]
out = evaluate_cell(small, weights, params)
print(f"small test  {small}: x0 = {out.x0:.4f} V -> output {out.xout:.0f} V (no change)")

# ---------------------------------------------------------------------------
# The asymmetry: a cell trained on a bright block carries only the tiny
# w_h conductances, so no test input can lift its divider near t_a.
bright_weights = assign_weights_hard([0.9] * 4, 0.3, params)
bound = 4 * 1.0 * params.w_h / (params.w_0 + 4 * params.w_h)
print(f"\nbright-trained cell: divider can never exceed {bound:.4f} V < {params.t_a} V")
out = evaluate_cell([0.1] * 4, bright_weights, params)
print(f"darkened test block: x0 = {out.x0:.5f} V -> output stays {out.xout:.0f} V")
print("(single cells only notice dark-to-bright; the dual-module detector")
print(" in demo 03 adds the reverse direction)")

# ---------------------------------------------------------------------------
# Smooth variants: the logistic weight rule and threshold approach the hard
# rules as their steepness grows.
soft = assign_weights_soft([0.2, 0.59, 0.6, 0.61, 1.0], 0.6, params)
print("\nlogistic weights around the mean 0.6:")
for x, g in zip([0.2, 0.59, 0.6, 0.61, 1.0], soft.g):
    print(f"  x = {x:4.2f} -> g = {g:.6e} S")

print("\nlogistic threshold vs divider voltage (b1 = 100):")
for x0 in np.linspace(0.0, 1.0, 6):
    print(f"  x0 = {x0:.1f} V -> soft output {threshold_soft(float(x0), params):.4f}")
