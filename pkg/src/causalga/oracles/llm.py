"""Chat-completions backed oracle.

Prompts are rendered from versioned text templates; replies must be one JSON
object carrying an ``edges`` or an ``op`` field.  Every request is cached on
disk under the SHA-256 of (template version, model, temperature, messages)
and the cache is consulted before the network.  Any failure (transport,
HTTP status, malformed reply, unknown names) yields ``None``.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import string
import tempfile
import threading
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import httpx

from ..constraints import PairPlausibility
from ..graph import EdgeKind, EdgeOp
from .base import OracleContext, SuggestionOracle

log = logging.getLogger(__name__)

_FENCE_RE = re.compile(r"^```(?:json)?\s*(.*?)\s*```$", re.S)


@dataclass(frozen=True)
class LLMConfig:
    base_url: str
    model: str
    api_key_env: str = "OPENAI_API_KEY"
    temperature: float = 0.0
    cache_dir: str = ".llm_cache"
    template_version: str = "v1"
    template_dir: str | None = None  # overrides the shipped templates
    max_in_flight: int = 4
    timeout: float = 60.0
    max_retries: int = 2
    retry_backoff: float = 1.0


def load_templates(version: str = "v1", directory: str | None = None) -> dict[str, string.Template]:
    if directory is not None:
        root = Path(directory)
        files = {p.stem: p.read_text(encoding="utf-8") for p in root.glob("*.txt")}
    else:
        root = resources.files("causalga.oracles") / "templates" / version
        files = {p.name[:-4]: p.read_text(encoding="utf-8") for p in root.iterdir() if p.name.endswith(".txt")}
    needed = {"system", "pair_plausibility", "mutation", "crossover", "cycle_break"}
    missing = needed - set(files)
    if missing:
        raise FileNotFoundError(f"template set {version!r} lacks {sorted(missing)}")
    return {k: string.Template(v) for k, v in files.items()}


def parse_reply(text: str) -> dict | None:
    """Decode a reply into a dict with an ``edges`` or ``op`` key, else None."""
    text = text.strip()
    m = _FENCE_RE.match(text)
    if m:
        text = m.group(1)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        return None
    if not isinstance(obj, dict) or not ({"edges", "op"} & set(obj)):
        return None
    return obj


class ReplyError(ValueError):
    pass


def _edge_op(op: dict, names) -> EdgeOp:
    try:
        kind = EdgeKind(str(op["kind"]).lower())
        i, j = names.index(op["from"]), names.index(op["to"])
    except (KeyError, ValueError, TypeError) as e:
        raise ReplyError(f"bad op {op!r}") from e
    return EdgeOp(kind, i, j)


class LLMOracle(SuggestionOracle):
    name = "llm"

    def __init__(self, config: LLMConfig, context: OracleContext | None = None,
                 transport: httpx.BaseTransport | None = None):
        self.config = config
        self.context = context
        self.templates = load_templates(config.template_version, config.template_dir)
        self.cache_dir = Path(config.cache_dir)
        self._slots = threading.BoundedSemaphore(max(1, config.max_in_flight))
        self._cache_lock = threading.Lock()
        self._transport = transport
        self.network_calls = 0
        self.cache_hits = 0

    # -- transport and cache ---------------------------------------------

    def _key(self, messages) -> str:
        blob = json.dumps({"template_version": self.config.template_version, "model": self.config.model,
                           "temperature": self.config.temperature, "messages": messages},
                          sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def _cache_path(self, key: str) -> Path:
        return self.cache_dir / key[:2] / f"{key}.json"

    def _cache_get(self, key: str) -> str | None:
        path = self._cache_path(key)
        try:
            return json.loads(path.read_text(encoding="utf-8"))["reply"]
        except (OSError, ValueError, KeyError):
            return None

    def _cache_put(self, key: str, messages, reply: str):
        path = self._cache_path(key)
        with self._cache_lock:
            if path.exists():
                return
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump({"template_version": self.config.template_version, "model": self.config.model,
                           "messages": messages, "reply": reply}, fh, ensure_ascii=False)
            os.replace(tmp, path)

    def _post(self, messages) -> str | None:
        headers = {}
        api_key = os.environ.get(self.config.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {"model": self.config.model, "messages": messages, "temperature": self.config.temperature}
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        for attempt in range(self.config.max_retries + 1):
            try:
                with self._slots, httpx.Client(timeout=self.config.timeout, transport=self._transport) as client:
                    self.network_calls += 1
                    resp = client.post(url, json=body, headers=headers)
                if resp.status_code == 429 or resp.status_code >= 500:
                    raise httpx.HTTPStatusError(f"status {resp.status_code}", request=resp.request, response=resp)
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (httpx.TransportError, httpx.HTTPStatusError) as e:
                retryable = not isinstance(e, httpx.HTTPStatusError) or e.response.status_code in (429,) \
                    or e.response.status_code >= 500
                if attempt < self.config.max_retries and retryable:
                    time.sleep(self.config.retry_backoff * 2 ** attempt)
                    continue
                log.warning("LLM request failed: %s", e)
                return None
            except (ValueError, KeyError, IndexError, TypeError) as e:
                log.warning("LLM response body not understood: %s", e)
                return None
        return None

    def ask(self, template: str, **fields) -> dict | None:
        prompt = self.templates[template].safe_substitute(**fields)
        messages = [{"role": "system", "content": self.templates["system"].safe_substitute()},
                    {"role": "user", "content": prompt}]
        key = self._key(messages)
        reply = self._cache_get(key)
        if reply is not None:
            self.cache_hits += 1
        else:
            reply = self._post(messages)
            if reply is None:
                return None
            self._cache_put(key, messages, reply)
        parsed = parse_reply(reply)
        if parsed is None:
            log.warning("malformed LLM reply for %s: %.200r", template, reply)
        return parsed

    def _field(self, reply: dict | None, key: str, kind: type, template: str):
        if reply is None:
            return None
        value = reply.get(key)
        if not isinstance(value, kind):
            if value is not None or key not in reply:
                log.warning("LLM reply for %s lacks a usable %r field: %.200r", template, key, reply)
            return None
        return value

    # -- prompt fields -----------------------------------------------------

    def _ctx(self, names) -> OracleContext:
        if self.context is not None and tuple(self.context.names) == tuple(names):
            return self.context
        return OracleContext(tuple(names))

    @staticmethod
    def _variables(ctx: OracleContext) -> str:
        return "\n".join(f"- {x}: {ctx.descriptions[x]}" if x in ctx.descriptions else f"- {x}"
                         for x in ctx.names)

    @staticmethod
    def _edges(names, pairs) -> str:
        lines = [f"{names[i]} -> {names[j]}" for i, j in pairs]
        return "\n".join(lines) if lines else "(none)"

    def _common(self, names) -> dict:
        ctx = self._ctx(names)
        return {"variables": self._variables(ctx), "background": ctx.background or "(none)"}

    # -- oracle interface --------------------------------------------------

    def pair_plausibilities(self, context):
        reply = self.ask("pair_plausibility", variables=self._variables(context),
                         background=context.background or "(none)")
        edges = self._field(reply, "edges", list, "pair_plausibility")
        if edges is None:
            return None
        out = []
        for rec in edges:
            try:
                if rec["from"] in context.names and rec["to"] in context.names:
                    out.append(PairPlausibility(rec["from"], rec["to"], float(rec["plausibility"])))
            except (KeyError, TypeError, ValueError):
                log.warning("skipping malformed plausibility record %r", rec)
        return out

    def propose_mutation(self, g, goal="refine"):
        names = list(g.node_names)
        reply = self.ask("mutation", goal=goal, edges=self._edges(names, g.edges()), **self._common(names))
        op = self._field(reply, "op", dict, "mutation")
        if op is None:
            return None
        try:
            return _edge_op(op, names)
        except (ReplyError, ValueError) as e:
            log.warning("unusable mutation reply: %s", e)
            return None

    def propose_crossover(self, a, b):
        names = list(a.node_names)
        reply = self.ask("crossover", first=self._edges(names, a.edges()), second=self._edges(names, b.edges()),
                         **self._common(names))
        op = self._field(reply, "op", dict, "crossover")
        if op is None:
            return None
        if not isinstance(op.get("take"), dict):
            log.warning("crossover reply lacks a 'take' mapping: %.200r", op)
            return None
        side = {"first": 0, "second": 1}
        return [side.get(op["take"].get(x)) for x in names]

    def propose_cycle_break(self, names, adjacency, cycle):
        names = list(names)
        reply = self.ask("cycle_break", cycle=self._edges(names, cycle), **self._common(names))
        raw = self._field(reply, "op", dict, "cycle_break")
        if raw is None:
            return None
        try:
            op = _edge_op(raw, names)
        except (ReplyError, ValueError) as e:
            log.warning("unusable cycle-break reply: %s", e)
            return None
        return (op.source, op.target)

    def identity(self):
        return f"llm(model={self.config.model}, templates={self.config.template_version})"
