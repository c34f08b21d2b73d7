"""Joint image-sequence reconstruction and optical-flow estimation.

A numpy library around one variational model: reconstruct a degraded
image sequence and estimate the motion between its frames at the same
time, by alternating two convex primal-dual solves (images with the
flow frozen, flow with the images frozen).  Ships with the classical
baselines (framewise and space-time TV-L2 denoising, static TV-L1
flow), evaluation metrics, synthetic scenes with exact ground truth,
Middlebury .flo / PNG i/o, and an experiment CLI.
"""

from .config import ExperimentConfig, load_config, save_config
from .diffops import (
    GradientField,
    div_backward,
    grad_forward,
    operator_norm_estimate,
    transport_adjoint,
    transport_apply,
    transport_coefficients,
)
from .fileio import (
    FormatError,
    colorize_transition,
    flow_from_transitions,
    flow_to_color,
    load_flo,
    load_sequence,
    save_flo,
    save_flow_images,
    save_sequence,
)
from .forward import (
    BlurOperator,
    ForwardOperator,
    FrameMaskOperator,
    IdentityOperator,
    SubsampleOperator,
    box_kernel,
    gaussian_kernel,
    make_forward_operator,
)
from .grids import (
    ContractViolation,
    DualState,
    FlowField,
    Grid,
    ImageSequence,
    inner_product,
    norms,
)
from .joint import (
    JointConfig,
    JointResult,
    OuterRecord,
    flow_total_variation,
    joint_energy,
    rof_denoise_frame,
    rof_denoise_frames,
    rof_denoise_spacetime,
    solve_joint,
    tvl1_flow,
)
from .metrics import SsimParams, ae, aee, psnr, snr, ssim
from .motion import MotionParams, motion_energy, solve_motion
from .pdbase import ConfigurationError, DivergenceError, SolveTrace
from .prox import ShrinkageData, project_linf_ball, prox_l2_data, shrink_affine
from .reconstruction import (
    ReconstructionParams,
    reconstruction_energy,
    solve_reconstruction,
)
from .synthetic import (
    SceneData,
    SyntheticScene,
    add_gaussian_noise,
    intensity_centroid,
    make_scene,
    scale_flow_to_unit,
    warp_cubic,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
