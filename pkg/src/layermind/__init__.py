"""layermind: layered learner models from journals.

Journals come in as dated entries; atomic 5W1H behavioral instances come out
of extraction; weighted consensus clustering turns them into recurring
behavioral patterns; analytical dimensions lift those into routines,
reasoning, and values; a question-driven review loop refines the result; and
a fidelity harness scores the whole thing against the source journals.
"""

from layermind.config import PipelineConfig, load_config
from layermind.graph import (
    AnalyticalDimension,
    BehavioralInstance,
    GraphStore,
    LayerTag,
    LayeredGraph,
    PatternNode,
)
from layermind.pipeline import Pipeline

__version__ = "0.1.0"

__all__ = [
    "AnalyticalDimension",
    "BehavioralInstance",
    "GraphStore",
    "LayerTag",
    "LayeredGraph",
    "PatternNode",
    "Pipeline",
    "PipelineConfig",
    "load_config",
    "__version__",
]
