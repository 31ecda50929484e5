"""Prompting, transport and record/replay for the two language-model experts.

One expert writes candidate priority expressions (generator), the other
reviews an evaluated rule against the population's best and worst members
and answers with a three-section critique (evaluator). Prompt rendering is
pure: the same bundle always yields byte-identical text, and every request
is identified by a digest of (prompt, temperature) so a recorded cassette
replays a whole run deterministically with zero network traffic.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

from .expr import ACCESSORS

ENV_BASE_URL = "FAFSP_LLM_BASE_URL"
ENV_API_KEY = "FAFSP_LLM_API_KEY"
ENV_MODEL = "FAFSP_LLM_MODEL"

OPERATOR_INSTRUCTIONS = {
    "Init": ("Please design a new algorithm guided by the provided algorithm "
             "and the expert review of it."),
    "C1": ("Please design a new algorithm by combining the advantages of the "
           "two provided algorithms."),
    "C2": ("Please help me create a new algorithm that is completely "
           "different in form from the given one."),
    "M1": "Please improve the given algorithm based on the suggested enhancements.",
    "M2": ("Please identify the main algorithm parameters, then create a new "
           "algorithm that has a different parameter settings of the score "
           "function provided."),
}
PARENT_COUNT = {"Init": 1, "C1": 2, "C2": 2, "M1": 1, "M2": 1}
CRITIQUE_REQUIRED = {"Init": True, "C1": True, "C2": False, "M1": True, "M2": False}

GRAMMAR_TEXT = """\
A rule is ONE arithmetic expression; the feasible (job, machine) pair with
the LOWEST value is dispatched first. Allowed syntax: numbers, the accessors
below, + - * /, unary minus, parentheses, and the calls min(a,b,...),
max(a,b,...), abs(x), sqrt(x), exp(x), log(x), if(cond, then, else) where
cond compares two expressions with < <= > >= == !=. Division by zero, log of
a non-positive value and sqrt of a negative value evaluate to 0.

Accessors:
""" + "".join(f"  {name:9s} {doc}\n" for name, doc in ACCESSORS.items())


class TransportError(RuntimeError):
    pass


class ReplayMiss(KeyError):
    def __init__(self, digest: str):
        super().__init__(f"no unconsumed cassette record for digest {digest}")
        self.digest = digest


class MissingBlock(ValueError):
    def __init__(self, what: str):
        super().__init__(f"response is missing its {what} block")
        self.what = what


class MultipleBlocks(ValueError):
    pass


class MissingSection(ValueError):
    def __init__(self, section: str):
        super().__init__(f"critique is missing the '{section}' section")
        self.section = section


@dataclass(frozen=True)
class Critique:
    advantages: str
    limitations: str
    suggestions: str


@dataclass(frozen=True)
class ParentRule:
    description: str
    source: str
    fitness: float


@dataclass(frozen=True)
class PromptBundle:
    """Everything one prompt needs; rendering never looks anywhere else."""

    role: str                               # "Evaluator" | "Generator"
    operator: str                           # Init / C1 / C2 / M1 / M2
    features: str                           # scenario summary text
    parents: tuple[ParentRule, ...]
    temperature: float
    critique: Critique | None = None
    best: ParentRule | None = None
    worst: ParentRule | None = None


def _rule_block(label: str, rule: ParentRule) -> str:
    return (f"{label}\n"
            f"  description: {rule.description}\n"
            f"  fitness (mean total tardiness, lower is better): {rule.fitness!r}\n"
            f"  expression: {rule.source}\n")


def render_evaluator_prompt(b: PromptBundle) -> str:
    """Review request for one evaluated rule, framed by the population extremes."""
    if b.role != "Evaluator":
        raise ValueError(f"expected an Evaluator bundle, got role {b.role!r}")
    if not b.parents or b.best is None or b.worst is None:
        raise ValueError("evaluator bundle needs the candidate and the population extremes")
    cand = b.parents[0]
    return (
        "You are a production-scheduling expert. The shop is a flexible "
        "assembly flow shop with kitting constraints: an assembly job may "
        "start only after every processing job of its product is finished, "
        "and an order is delivered only when all of its assembly jobs are "
        "finished. The objective is to minimize total order tardiness.\n\n"
        + GRAMMAR_TEXT
        + "\nShop-floor characteristics of the training instances:\n"
        + b.features
        + "\n\nRule under review:\n"
        + _rule_block("candidate:", cand)
        + "\nPopulation context:\n"
        + _rule_block("best so far:", b.best)
        + _rule_block("worst so far:", b.worst)
        + "\nPlease evaluate the following heuristic rules based on the above "
          "information.\nAnswer with exactly three labeled sections:\n"
          "Advantages: <what the rule does well in this shop>\n"
          "Limitations: <where it is likely to lose performance>\n"
          "Suggestions: <concrete, targeted improvements>\n"
    )


def render_generator_prompt(b: PromptBundle) -> str:
    """Request for one new rule under the bundle's evolutionary operator."""
    if b.role != "Generator":
        raise ValueError(f"expected a Generator bundle, got role {b.role!r}")
    if b.operator not in OPERATOR_INSTRUCTIONS:
        raise ValueError(f"unknown operator {b.operator!r}")
    if len(b.parents) != PARENT_COUNT[b.operator]:
        raise ValueError(f"operator {b.operator} takes {PARENT_COUNT[b.operator]} "
                         f"parent(s), got {len(b.parents)}")
    parts = [
        "You are an algorithm designer for online scheduling in a flexible "
        "assembly flow shop with kitting constraints (assembly waits for its "
        "full kit; an order is delivered when all its assembly jobs finish). "
        "You write priority rules that minimize total order tardiness.\n",
        GRAMMAR_TEXT,
        "\nShop-floor characteristics of the training instances:\n" + b.features + "\n",
    ]
    for i, parent in enumerate(b.parents, start=1):
        label = "provided algorithm:" if len(b.parents) == 1 else f"provided algorithm {i}:"
        parts.append("\n" + _rule_block(label, parent))
    if CRITIQUE_REQUIRED[b.operator]:
        if b.critique is not None:
            parts.append("\nExpert review of the provided algorithm:\n"
                         f"Advantages: {b.critique.advantages}\n"
                         f"Limitations: {b.critique.limitations}\n"
                         f"Suggestions: {b.critique.suggestions}\n")
    parts.append("\nTask: " + OPERATOR_INSTRUCTIONS[b.operator] + "\n")
    parts.append(
        "\nAnswer in exactly this form:\n"
        "Description: <one or two sentences on the idea>\n"
        "```\n<one expression in the grammar above>\n```\n")
    return "".join(parts)


def request_digest(prompt: str, temperature: float) -> str:
    payload = f"{prompt}\x1e{temperature:.6f}".encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


# -- transports ----------------------------------------------------------------


class LiveTransport:
    """Plain chat-completion client with bounded exponential-backoff retries."""

    def __init__(self, base_url: str, api_key: str, model: str,
                 max_attempts: int = 3, backoff: float = 1.0, timeout: float = 120.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.timeout = timeout

    @classmethod
    def from_env(cls) -> "LiveTransport":
        missing = [v for v in (ENV_BASE_URL, ENV_API_KEY, ENV_MODEL) if not os.environ.get(v)]
        if missing:
            raise TransportError("missing environment variables: " + ", ".join(missing))
        return cls(os.environ[ENV_BASE_URL], os.environ[ENV_API_KEY], os.environ[ENV_MODEL])

    def send(self, prompt: str, temperature: float, operator: str = "") -> str:
        import requests

        body = {"model": self.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": temperature}
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = requests.post(
                    self.base_url + "/chat/completions",
                    headers={"Authorization": f"Bearer {self.api_key}"},
                    json=body, timeout=self.timeout)
                if resp.status_code in (429,) or resp.status_code >= 500:
                    last_error = TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                    continue
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except requests.RequestException as e:
                last_error = e
        raise TransportError(f"request failed after {self.max_attempts} attempts: {last_error}")


class ScriptedTransport:
    """Deterministic canned responses for offline runs and tests."""

    def __init__(self, responses: Sequence[str] | Callable[[str, float, str], str],
                 cycle: bool = False):
        self._fn = responses if callable(responses) else None
        self._queue = None if callable(responses) else deque(responses)
        self._all = None if callable(responses) else list(responses)
        self.cycle = cycle

    def send(self, prompt: str, temperature: float, operator: str = "") -> str:
        if self._fn is not None:
            return self._fn(prompt, temperature, operator)
        if not self._queue:
            if self.cycle and self._all:
                self._queue = deque(self._all)
            else:
                raise TransportError("scripted transport ran out of responses")
        return self._queue.popleft()


class RecordingTransport:
    """Pass-through that appends every exchange to a cassette file."""

    def __init__(self, inner, cassette_path):
        self.inner = inner
        self.cassette_path = cassette_path

    def send(self, prompt: str, temperature: float, operator: str = "") -> str:
        response = self.inner.send(prompt, temperature, operator)
        append_record(self.cassette_path, {
            "digest": request_digest(prompt, temperature),
            "operator": operator,
            "temperature": f"{temperature:.6f}",
            "response": response,
        })
        return response


class ReplayTransport:
    """Serves recorded responses by digest; consumes one record per request.

    strict=False falls back to consuming records in file order when a digest
    has no unconsumed match, which tolerates small prompt drift.
    """

    def __init__(self, cassette_path, strict: bool = True):
        self.records = load_cassette(cassette_path)
        self.strict = strict
        self._by_digest: dict[str, deque[int]] = {}
        for i, rec in enumerate(self.records):
            self._by_digest.setdefault(rec["digest"], deque()).append(i)
        self._consumed = [False] * len(self.records)

    def send(self, prompt: str, temperature: float, operator: str = "") -> str:
        digest = request_digest(prompt, temperature)
        queue = self._by_digest.get(digest)
        while queue:
            i = queue.popleft()
            if not self._consumed[i]:
                self._consumed[i] = True
                return self.records[i]["response"]
        if self.strict:
            raise ReplayMiss(digest)
        for i, used in enumerate(self._consumed):
            if not used:
                self._consumed[i] = True
                return self.records[i]["response"]
        raise ReplayMiss(digest)


def complete(prompt: str, temperature: float, transport, operator: str = "") -> str:
    """Send one request through the chosen transport and return the raw text."""
    return transport.send(prompt, temperature, operator)


def load_cassette(path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records


def append_record(path, record: dict) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


# -- response extraction -------------------------------------------------------

_FENCE_RE = re.compile(r"```[ \t]*[A-Za-z0-9_+-]*[ \t]*\n?(.*?)```", re.S)
_DESC_RE = re.compile(r"^[ \t]*description[ \t]*:[ \t]*(.+)$", re.I | re.M)


def extract_individual(response: str) -> tuple[str, str]:
    """(description, expression source) from a generator response."""
    blocks = _FENCE_RE.findall(response)
    if not blocks:
        raise MissingBlock("expression")
    if len(blocks) > 1:
        raise MultipleBlocks(f"expected one fenced block, found {len(blocks)}")
    source = " ".join(blocks[0].split())
    if not source:
        raise MissingBlock("expression")
    m = _DESC_RE.search(response)
    if m is None:
        raise MissingBlock("description")
    return m.group(1).strip(), source


_SECTIONS = ("advantages", "limitations", "suggestions")
_SECTION_RE = re.compile(
    r"^[ \t]*(advantages|limitations|suggestions)[ \t]*:([^\n]*(?:\n(?![ \t]*"
    r"(?:advantages|limitations|suggestions)[ \t]*:).*)*)",
    re.I | re.M)


def extract_critique(response: str) -> Critique:
    """Parse the three labeled sections of an evaluator response."""
    found: dict[str, str] = {}
    for m in _SECTION_RE.finditer(response):
        name = m.group(1).lower()
        if name not in found:
            found[name] = " ".join(m.group(2).split())
    for name in _SECTIONS:
        if name not in found:
            raise MissingSection(name)
    return Critique(found["advantages"], found["limitations"], found["suggestions"])
