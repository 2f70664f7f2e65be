"""Quantized sampled-data synchronization of harmonic oscillator networks.

Exact piecewise propagation of ``r' = v, v' = -w^2 r + u`` under a
zero-order-hold, quantized Laplacian coupling of sampled velocities, with
sampling-period feasibility analysis and a convergence certificate.
"""
from .graph import (
    DirectedGraph,
    GraphError,
    LaplacianSpectrum,
    SpectrumError,
    build_laplacian,
    is_strongly_connected,
    read_graph,
    spectral_decomposition,
    standin_graph,
)
from .kernels import BACKEND
from .propagation import (
    Certificate,
    CertificateError,
    EpsNormFrame,
    FrameError,
    SystemMatrices,
    build_eps_frame,
    certificate,
    reduced_map,
    system_matrices,
)
from .quantizer import UniformQuantizer, ZoomError, ZoomSchedule, quantize
from .scenario import ScenarioConfig, ScenarioError, emit_scenario, parse_scenario
from .simulator import (
    InfeasibleSamplingError,
    ReferenceOrbit,
    SimulationTrace,
    reference_orbit,
    simulate,
    step_exact,
    sync_error,
)
from .stability import (
    DegenerateSamplingError,
    bilinear_stability_check,
    feasible_windows,
    phi_bound,
    spectral_radius_reduced,
)
from .verify import VerifyReport, verify_reference

__version__ = "0.1.0"
