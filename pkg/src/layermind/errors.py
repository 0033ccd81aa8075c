"""Exception hierarchy shared across the package."""

from __future__ import annotations


class LayermindError(Exception):
    """Base class for all package errors."""


class GraphError(LayermindError):
    """Invariant violation while mutating or reading a layered graph."""


class DanglingSourceError(GraphError):
    """A node references source ids that do not exist in the graph."""

    def __init__(self, node_id: str, missing: list[str]):
        self.node_id = node_id
        self.missing = list(missing)
        super().__init__(f"dangling source: node {node_id!r} references missing ids {sorted(missing)}")


class DuplicateIdError(GraphError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"duplicate id: {node_id!r} already exists in the graph")


class NonAdjacentLayerError(GraphError):
    def __init__(self, node_id: str, node_layer: str, source_id: str, source_layer: str):
        self.node_id = node_id
        super().__init__(
            f"non-adjacent layers: node {node_id!r} ({node_layer}) cannot source "
            f"{source_id!r} ({source_layer})"
        )


class NotFoundError(LayermindError):
    """A requested entity (node, user, run, item) does not exist."""


class PhaseOrderError(LayermindError):
    """A pipeline phase was requested before its prerequisite completed."""

    def __init__(self, requested: str, missing: str):
        self.requested = requested
        self.missing = missing
        super().__init__(f"phase {requested!r} requires {missing!r} to have completed first")


class PreconditionError(LayermindError):
    """An operation precondition does not hold."""


class PromptError(LayermindError):
    """Template lookup, binding, or integrity failure."""


class LlmError(LayermindError):
    """LLM transport or response-format failure."""


class LlmFormatError(LlmError):
    """The model response did not match the expected JSON shape after one corrective re-ask."""


class ReplayMissError(LlmError):
    """Replay mode found no fixture for the rendered prompt hash."""

    def __init__(self, prompt_hash: str):
        self.prompt_hash = prompt_hash
        super().__init__(
            f"no replay fixture for prompt hash {prompt_hash}; refusing to fabricate a response"
        )


class EmbeddingError(LayermindError):
    """Embedding provider failure; aborts the consuming phase."""
