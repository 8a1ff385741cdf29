"""Rearrangement-invariant norms, almost-compact embeddings and Sobolev targets.

Submodules: ``funcrep`` (function representations and quadrature),
``rearrange``, ``scales``, ``norms``, ``counterexample``, ``marc_enlarge``,
``sum_spaces``, ``sobolev_embed``, ``cli`` and ``selftest``.
"""

from __future__ import annotations

from .funcrep import GridSpec, PowerLogAtom, Symbolic, Tabulated, atom, evaluate, indicator, step_function
from .norms import fundamental_function, norm, spec_from_json, spec_to_json
from .rearrange import rearrange
from .sobolev_embed import SobolevParams, compactness_verdict

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "PowerLogAtom",
    "SobolevParams",
    "Symbolic",
    "Tabulated",
    "atom",
    "compactness_verdict",
    "evaluate",
    "fundamental_function",
    "indicator",
    "norm",
    "rearrange",
    "spec_from_json",
    "spec_to_json",
    "step_function",
    "__version__",
]
