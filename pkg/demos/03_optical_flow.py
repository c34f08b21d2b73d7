"""Static TV-L1 optical flow on synthetic scenes with exact ground truth.

A translating ramp pins the flow pointwise (no aperture ambiguity); a
plain disc needs enough TV weight to integrate the edge-normal
constraints into the true translation.
"""

import numpy as np

from jointflow import SyntheticScene, aee, ae, make_scene, tvl1_flow

ramp = make_scene(
    SyntheticScene("translating_ramp", nx=16, ny=16, nt=3, velocity=(1.0, 0.0)),
    seed=0,
)
flow = tvl1_flow(ramp.clean, lam=1e-3, max_iters=4000, eps=1e-8)
interior = flow.vx[:3, 1:-1, 1:-1]
print("translating ramp, velocity (1, 0):")
print(f"  interior vx in [{interior.min():.4f}, {interior.max():.4f}]")

disc = make_scene(
    SyntheticScene("translating_disc", nx=32, ny=32, nt=3, velocity=(0.5, 0.0)),
    seed=0,
)
print("\ntranslating disc, velocity (0.5, 0): TV weight matters")
for lam in (0.01, 0.05, 0.2):
    est = tvl1_flow(disc.clean, lam=lam, max_iters=4000, eps=1e-8)
    print(f"  lam={lam:<5}: AEE {aee(est, disc.flow_truth):.4f} px, "
          f"AE {ae(est, disc.flow_truth):.4f} rad")
print("  (small lam recovers only the edge-normal component; "
      "stronger TV integrates it into the translation)")
