"""clio: an evidence-grounded research agent framework and benchmark harness.

The library has two halves. The agent half runs a budgeted plan -> act ->
validate -> synthesize loop over a registry of modality-specific specialist
agents, each backed by mockable tool clients. The harness half loads
benchmark datasets, judges agent responses with a fixed rubric prompt, and
computes pass@k / exact-match scores with figure and table reporting.
"""

__version__ = "0.1.0"

from clio.evidence import EvidenceRecord, SearchTier
from clio.orchestrator import RunResult, SessionConfig, run_session

__all__ = [
    "EvidenceRecord",
    "SearchTier",
    "RunResult",
    "SessionConfig",
    "run_session",
    "__version__",
]
