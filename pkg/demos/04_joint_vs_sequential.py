"""Joint reconstruction + motion estimation versus sequential pipelines.

On a noisy textured translating disc, compares: static flow on the
noisy frames, denoise-then-flow, and the alternating joint solver
(initialized at the data and a static flow estimate, with bounded image
passes per outer iteration).  The joint model improves both the flow
and the images over the sequential results.

Runs in roughly a minute at the default 48x48x4 size.
"""

import numpy as np

from jointflow import (
    IdentityOperator,
    SyntheticScene,
    aee,
    make_scene,
    psnr,
    rof_denoise_frames,
    tvl1_flow,
)
from jointflow.experiments import joint_pipeline

scene = SyntheticScene("translating_disc", nx=48, ny=48, nt=4,
                       velocity=(0.5, 0.0), noise_variance=0.002,
                       background_amplitude=0.25)
data = make_scene(scene, seed=11)
clean, truth = data.clean, data.flow_truth
print(f"noisy input PSNR: {psnr(clean.values, data.noisy.values):.2f} dB")

flow_noisy = tvl1_flow(data.noisy, lam=0.1, max_iters=1500, eps=1e-7)
print(f"OF on noisy frames:    AEE {aee(flow_noisy, truth):.4f} px")

den = rof_denoise_frames(data.noisy.values, alpha=0.03, max_iters=800, eps=1e-7)
flow_den = tvl1_flow(den, lam=0.1, max_iters=1500, eps=1e-7)
print(f"denoise then flow:     AEE {aee(flow_den, truth):.4f} px "
      f"(ROF PSNR {psnr(clean.values, den.values):.2f} dB)")

result = joint_pipeline(
    data.noisy.values, IdentityOperator(data.noisy.grid),
    alpha=0.01, beta=0.1, gamma=1.0,
    max_outer=18, max_inner_image=30, max_inner_flow=1500,
)
print(f"joint reconstruction:  AEE {aee(result.flow, truth):.4f} px "
      f"(PSNR {psnr(clean.values, result.images.values):.2f} dB)")
print("\nouter trace (iterate change / joint energy):")
for rec in result.trace[::4]:
    print(f"  outer {rec.outer_iter:2d}: err {rec.err_main:.2e}  E {rec.energy:.2f}")
