"""Ising-machine MIMO detection toolkit.

Maps maximum-likelihood MIMO detection to Ising problems, solves them on a
simulated Coherent Ising Machine, and measures BER / error floors /
precision sensitivity / coded throughput against classical baselines.
"""

from .cim import CimParams, active_backend, anneal, pump_schedule, run_batch
from .ising import (
    CouplingOnlyProblem,
    IsingProblem,
    augment_aux,
    brute_force_ground,
    build_ml_ising,
    energy,
    l0_resilience,
    normalize,
    quantize,
    regularize,
    strip_aux,
)
from .mimo import (
    ChannelInstance,
    Constellation,
    TransmitFrame,
    bits_to_frame,
    frame_to_bits,
    generate_channel,
    make_constellation,
    real_symbols_to_spins,
    slice_to_constellation,
    spins_to_real_symbols,
    transmit,
)
from .numerics import SeededRng, qr_decompose, sample_standard_gaussian, solve_hermitian_regularized

__version__ = "0.1.0"
