"""Lyapunov exponents of random dynamical systems: cocycles, the Ott-Yorke flow, the figure-8 box model."""

__version__ = "0.1.0"

from ._backend import available, current, use_backend
from .core import (
    InsufficientNoise,
    LinearSystem,
    NoiseWord,
    NoisyTwistMap,
    RandomMapSystem,
    ShiftSystem,
    SingularJacobian,
    SkewState,
    birkhoff_average,
    cocycle_product,
    compose_random_orbit,
    log_norm_apply,
    lyapunov_ftle_discrete,
    mat2,
    mean_log_det,
    orbit_jacobians,
    qr_spectrum,
    skew_step,
    vec2,
)
from .figure8 import (
    BlockState,
    Fig8InvariantError,
    Fig8RandomMap,
    GgsParams,
    ReturnSchedule,
    block_map,
    box_S,
    closed_form_cocycle,
    contains,
    fig8_lyapunov_run,
    h_step,
    impulse,
    rotation_R,
    slln_diagnostic,
    step_fig8,
)
from .logmat import LogMat2
from .noise import (
    BoxIndexDist,
    DoublingLaw,
    RngStream,
    UniformCubeNoise,
    draw_uniform_pair,
    mean_index,
    parse_seed,
    sample_box_index,
    spawn_stream,
)
from .ottyorke import (
    FlowParams,
    FtleSeries,
    OttYorkeRandomMap,
    apply_noise_and_fold,
    ftle_flow,
    run_oy_experiment,
    tan_transform,
    transformed_field,
    vector_field,
)
from .rkf45 import IntegrationError, rkf45_integrate, rkf45_step
