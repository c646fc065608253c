"""navprior: navigability graphs, path samplers, and action-prior audits.

Models navigation environments as graphs, samples trajectory datasets by
shortest paths or constrained random walks, quantifies the action priors a
dataset bakes into each node (transition matrices, skew factors), and runs
prior-driven vs instruction-driven agents over seen/unseen environment
splits. The instruction speaker/follower pair is templated and symbolic, a
deliberate desk-scale stand-in for learned models.
"""

__version__ = "0.1.0"

from navprior.errors import (  # noqa: F401
    ConfigError,
    DataError,
    FormatError,
    NavPriorError,
    SamplerExhaustedError,
)
