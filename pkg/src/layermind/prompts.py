"""Versioned prompt templates with placeholder binding.

The ten pipeline templates ship as plain-text assets so they can be audited
without reading code. Bodies are hash-pinned in ``manifest.json``; a template
edit changes its version hash, which surfaces in run reports (prompt drift is
an experiment variable, not an implementation detail).

Rendering is single-pass: ``{name}`` slots substitute once, ``{{``/``}}``
emit literal braces, and there is no recursive expansion. Rendering fails if
any declared placeholder is unbound or any bound name is undeclared.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

from layermind.errors import PromptError

TEMPLATE_IDS = ("E0", "IO", "GD", "CD", "ID", "NR", "QA", "CA", "PE", "LS")

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _scan(body: str) -> tuple[list[tuple[str, str]], frozenset[str]]:
    """Tokenize a template body into (kind, payload) parts.

    Kinds: ``lit`` (literal text) and ``slot`` (placeholder name). Doubled
    braces become literal single braces; any other stray brace is a defect in
    the asset and rejected at load time.
    """
    parts: list[tuple[str, str]] = []
    names: set[str] = set()
    i, n = 0, len(body)
    buf: list[str] = []
    while i < n:
        ch = body[i]
        if ch == "{":
            if body.startswith("{{", i):
                buf.append("{")
                i += 2
                continue
            m = _NAME_RE.match(body, i + 1)
            if m and i + 1 + len(m.group(0)) < n and body[m.end()] == "}":
                if buf:
                    parts.append(("lit", "".join(buf)))
                    buf = []
                parts.append(("slot", m.group(0)))
                names.add(m.group(0))
                i = m.end() + 1
                continue
            raise PromptError(f"malformed brace at offset {i} in template body")
        if ch == "}":
            if body.startswith("}}", i):
                buf.append("}")
                i += 2
                continue
            raise PromptError(f"unmatched '}}' at offset {i} in template body")
        buf.append(ch)
        i += 1
    if buf:
        parts.append(("lit", "".join(buf)))
    return parts, frozenset(names)


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str
    placeholders: frozenset[str]
    version_hash: str

    def render(self, variables: Mapping[str, object]) -> str:
        bound = set(variables)
        missing = self.placeholders - bound
        if missing:
            raise PromptError(f"unbound: {', '.join(sorted(missing))}")
        extra = bound - self.placeholders
        if extra:
            raise PromptError(
                f"undeclared variables for {self.template_id}: {', '.join(sorted(extra))}"
            )
        parts, _ = _scan(self.body)
        out = []
        for kind, payload in parts:
            out.append(payload if kind == "lit" else str(variables[payload]))
        return "".join(out)


class PromptRegistry:
    """Loads the asset directory and verifies every body against the manifest."""

    def __init__(self, asset_dir: Path):
        self.asset_dir = Path(asset_dir)
        manifest_path = self.asset_dir / "manifest.json"
        if not manifest_path.is_file():
            raise PromptError(f"prompt manifest missing: {manifest_path}")
        with open(manifest_path, encoding="utf-8") as fh:
            self.manifest = json.load(fh)
        self._templates: dict[str, PromptTemplate] = {}
        for tid in TEMPLATE_IDS:
            entry = self.manifest.get(tid)
            if entry is None:
                raise PromptError(f"manifest has no entry for template {tid}")
            body = (self.asset_dir / entry["file"]).read_text(encoding="utf-8")
            digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
            if digest != entry["sha256"]:
                raise PromptError(
                    f"template {tid} does not match its pinned hash "
                    f"(asset {digest[:12]}.., manifest {entry['sha256'][:12]}..)"
                )
            _, names = _scan(body)
            declared = frozenset(entry["placeholders"])
            if names != declared:
                raise PromptError(
                    f"template {tid}: manifest declares {sorted(declared)}, "
                    f"body uses {sorted(names)}"
                )
            self._templates[tid] = PromptTemplate(tid, body, names, digest)

    def get(self, template_id: str) -> PromptTemplate:
        try:
            return self._templates[template_id]
        except KeyError:
            raise PromptError(f"unknown template id: {template_id!r}") from None

    def render(self, template_id: str, variables: Mapping[str, object]) -> str:
        return self.get(template_id).render(variables)

    @property
    def manifest_hash(self) -> str:
        """Combined fingerprint over all template hashes, for run reports."""
        joined = "|".join(f"{tid}:{self._templates[tid].version_hash}" for tid in TEMPLATE_IDS)
        return hashlib.sha256(joined.encode("ascii")).hexdigest()[:16]


def asset_root() -> Path:
    return Path(resources.files("layermind").joinpath("assets"))


@lru_cache(maxsize=1)
def default_registry() -> PromptRegistry:
    return PromptRegistry(asset_root() / "prompts")
