"""Decentralized saddle-point optimization with compressed communication.

In-process simulator of a synchronous node network solving strongly
convex-strongly concave problems (robust logistic regression) with a
primal-dual hybrid gradient core, difference-compressed gossip, and two
stochastic-gradient schedules: restart-based and variance-reduced.
"""

from .compression import (
    CommState,
    Compressor,
    InfeasibleParameterError,
    comm_step,
    estimate_delta,
    identity_compressor,
    quantize_inf,
)
from .data import Dataset, Partition, parse_libsvm, partition, synthesize
from .ipdhg import NodeEnsemble, StepParams, ipdhg_step
from .metrics import (
    CostCounters,
    SaddleAnchors,
    Trace,
    compute_anchors,
    distance_to_saddle,
    phi,
    phi_tilde,
)
from .oracles import (
    SvrgState,
    gsgo_sample,
    svrgo_sample,
    svrgo_update_reference,
)
from .problem import (
    PrimalDualPoint,
    RobustLRProblem,
    SaddleConstants,
)
from .solvers import (
    StageParams,
    SvrgParams,
    cdpsvrg_params,
    compute_reference,
    contraction_rate,
    crdpsg_rho,
    crdpsg_stage_params,
    run_cdpsvrg,
    run_crdpsg,
)
from .topology import (
    DecGraph,
    DisconnectedGraphError,
    SpectralInfo,
    build_ring,
    build_torus,
    mix,
    pinv_weighted_sqnorm,
    spectral,
)

__version__ = "0.1.0"
