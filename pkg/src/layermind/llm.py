"""LLM client contract: live, record, and replay modes.

Every request is a template id plus bound variables; the rendered prompt is
the unit of identity. Replay mode looks responses up by a 16-hex-digit hash
of the fully rendered prompt and treats a miss as an error — it never
fabricates an answer. Record mode wraps a live backend and captures raw
responses into the fixture directory, one file per prompt hash.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
import time as _time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from layermind.errors import LlmError, LlmFormatError, ReplayMissError
from layermind.prompts import PromptRegistry, default_registry

logger = logging.getLogger(__name__)

CORRECTIVE_LINE = (
    "Your previous response was not valid JSON matching the required schema. "
    "Respond again with only the valid JSON output."
)

_FENCE_RE = re.compile(r"^```[a-zA-Z]*\s*|\s*```$")


@dataclass(frozen=True)
class LlmRequest:
    """One prompt invocation: template id, bound variables, sampling config."""

    template_id: str
    variables: dict = field(default_factory=dict)
    temperature: float = 0.0
    expected_shape: str = ""
    corrective: bool = False

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise LlmError(f"temperature {self.temperature} outside [0, 2]")

    def with_corrective(self) -> "LlmRequest":
        return LlmRequest(
            template_id=self.template_id,
            variables=self.variables,
            temperature=self.temperature,
            expected_shape=self.expected_shape,
            corrective=True,
        )


def render_request(request: LlmRequest, registry: PromptRegistry) -> str:
    prompt = registry.render(request.template_id, request.variables)
    if request.corrective:
        prompt = f"{prompt}\n\n{CORRECTIVE_LINE}"
    return prompt


def prompt_hash(rendered: str) -> str:
    """16 hex digits of the rendered prompt; names fixture files."""
    return hashlib.sha256(rendered.encode("utf-8")).hexdigest()[:16]


class LlmBackend(Protocol):
    """Anything that can answer a rendered prompt in live mode."""

    def complete(self, request: LlmRequest, rendered: str) -> str: ...


class LlmClient:
    """Base client: renders, delegates, and keeps an auditable transcript."""

    mode = "live"

    def __init__(self, registry: PromptRegistry | None = None):
        self.registry = registry or default_registry()
        self.calls = 0
        self.transcript: list[dict] = []
        self._lock = threading.Lock()

    def send(self, request: LlmRequest) -> str:
        rendered = render_request(request, self.registry)
        response = self._respond(request, rendered)
        with self._lock:
            self.calls += 1
            self.transcript.append(
                {
                    "template_id": request.template_id,
                    "prompt_hash": prompt_hash(rendered),
                    "prompt": rendered,
                    "response": response,
                }
            )
        return response

    def _respond(self, request: LlmRequest, rendered: str) -> str:
        raise NotImplementedError


class LiveLlmClient(LlmClient):
    """HTTP chat-completions backend.

    Retries transport errors with exponential backoff; response-format
    problems are never retried here (the one corrective re-ask happens at the
    call site via :func:`ask_json`).
    """

    mode = "live"

    def __init__(
        self,
        endpoint: str,
        model_name: str,
        api_key: str = "",
        registry: PromptRegistry | None = None,
        max_retries: int = 3,
        backoff_s: float = 0.5,
    ):
        super().__init__(registry)
        self.endpoint = endpoint
        self.model_name = model_name
        self.api_key = api_key
        self.max_retries = max_retries
        self.backoff_s = backoff_s

    def _respond(self, request: LlmRequest, rendered: str) -> str:
        import requests

        payload = {
            "model": self.model_name,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": rendered}],
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_exc: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = requests.post(self.endpoint, json=payload, headers=headers, timeout=120)
                resp.raise_for_status()
                body = resp.json()
                return body["choices"][0]["message"]["content"]
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_exc = exc
                wait = self.backoff_s * (2**attempt)
                logger.warning("transport error (%s); retrying in %.1fs", exc, wait)
                _time.sleep(wait)
            except (requests.HTTPError, KeyError, ValueError) as exc:
                raise LlmError(f"LLM endpoint returned an unusable response: {exc}") from exc
        raise LlmError(f"LLM endpoint unreachable after {self.max_retries + 1} attempts: {last_exc}")


class ScriptedClient(LlmClient):
    """Live-mode client backed by a local deterministic synthesizer."""

    mode = "live"

    def __init__(self, backend: LlmBackend, registry: PromptRegistry | None = None):
        super().__init__(registry)
        self.backend = backend

    def _respond(self, request: LlmRequest, rendered: str) -> str:
        return self.backend.complete(request, rendered)


class ReplayLlmClient(LlmClient):
    """Deterministic playback from a fixture directory.

    Identical request always yields the identical response; a missing fixture
    is an error. Replay-verified runs require temperature 0.0.
    """

    mode = "replay"

    def __init__(self, fixture_dir: Path | str, registry: PromptRegistry | None = None):
        super().__init__(registry)
        self.fixture_dir = Path(fixture_dir)

    def _respond(self, request: LlmRequest, rendered: str) -> str:
        if request.temperature != 0.0:
            raise LlmError(
                f"replay mode requires temperature 0.0, got {request.temperature}"
            )
        digest = prompt_hash(rendered)
        path = self.fixture_dir / f"{digest}.txt"
        if not path.is_file():
            raise ReplayMissError(digest)
        return path.read_text(encoding="utf-8")


class RecordingLlmClient(LlmClient):
    """Wraps a live client and captures fixtures keyed by prompt hash.

    Alongside each ``<hash>.txt`` response a ``<hash>.prompt.txt`` is written
    so recorded traffic can be audited (e.g. checking what a clustering
    request actually carried).
    """

    mode = "record"

    def __init__(self, inner: LlmClient, fixture_dir: Path | str):
        super().__init__(inner.registry)
        self.inner = inner
        self.fixture_dir = Path(fixture_dir)
        self.fixture_dir.mkdir(parents=True, exist_ok=True)

    def _respond(self, request: LlmRequest, rendered: str) -> str:
        response = self.inner.send(request)
        digest = prompt_hash(rendered)
        (self.fixture_dir / f"{digest}.txt").write_text(response, encoding="utf-8")
        (self.fixture_dir / f"{digest}.prompt.txt").write_text(rendered, encoding="utf-8")
        return response


def parse_json_response(raw: str):
    """Parse a model response as JSON, tolerating markdown code fences."""
    text = raw.strip()
    if text.startswith("```"):
        text = _FENCE_RE.sub("", text).strip()
    return json.loads(text)


def ask_json(
    client: LlmClient,
    request: LlmRequest,
    validate: Callable[[object], object] | None = None,
):
    """Send a request expecting JSON; on bad output, one corrective re-ask.

    Silent repair hides model drift, so exactly one re-ask (with an appended
    corrective line) is attempted before raising :class:`LlmFormatError`.
    ``validate`` may normalize or reject the parsed payload by raising
    ``ValueError``.
    """
    attempts = (request, request.with_corrective())
    last: Exception | None = None
    for i, req in enumerate(attempts):
        raw = client.send(req)
        try:
            parsed = parse_json_response(raw)
            return validate(parsed) if validate is not None else parsed
        except (json.JSONDecodeError, ValueError) as exc:
            last = exc
            if i == 0:
                logger.warning(
                    "%s response failed validation (%s); issuing one corrective re-ask",
                    request.template_id,
                    exc,
                )
    raise LlmFormatError(
        f"{request.template_id} response invalid after corrective re-ask: {last}"
    )
