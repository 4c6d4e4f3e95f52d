"""Language-level diversity/equity/inclusion metrics and annotation-budget allocation.

The package computes demand-weighted quality scores and a Gini-style equity
index over a fixed set of languages, converts model goods (throughput, memory)
into performance units for an efficiency score, fits power-law learning curves
to fine-tuning trajectories, and allocates a labeling budget across source
languages by greedy marginal gain. ``langdei.cli`` exposes all of it as a
command-line tool.
"""

from langdei.errors import ComputationError, InputError, LangDeiError

__version__ = "0.1.0"

__all__ = ["ComputationError", "InputError", "LangDeiError", "__version__"]
