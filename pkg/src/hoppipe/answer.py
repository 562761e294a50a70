"""Answer decoding over a QA context, and sources of span logits.

The decoder scores every candidate span as start_logit[i] + end_logit[j]
over the context body (paragraph and title tokens), plus the three
single-token tail candidates yes / no / noans, and returns the argmax.
Span text is recovered through the context's char map, substring-exact
against the source text rather than joined from word pieces.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Protocol

import numpy as np
import requests as _requests

from .backends import BackendProtocolError, TransportError
from .context import CharSpan, QAContext
from .tokenization import TAG_PARAGRAPH, TAG_TITLE

DEFAULT_MAX_SPAN_LEN = 30


@dataclass(frozen=True)
class SpanLogits:
    start_logits: tuple[float, ...]
    end_logits: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.start_logits) != len(self.end_logits):
            raise ValueError("start and end logits must have equal length")
        for v in (*self.start_logits, *self.end_logits):
            if not math.isfinite(v):
                raise ValueError(f"non-finite span logit {v!r}")

    @classmethod
    def from_arrays(cls, start, end) -> "SpanLogits":
        return cls(tuple(float(v) for v in start), tuple(float(v) for v in end))

    def __len__(self) -> int:
        return len(self.start_logits)


class AnswerKind(str, Enum):
    SPAN = "span"
    YES = "yes"
    NO = "no"
    NOANS = "noans"


@dataclass(frozen=True)
class AnswerPrediction:
    kind: AnswerKind
    text: str
    score: float
    span: tuple[int, int] | None = None

    def output_text(self) -> str:
        """The string written to prediction files."""
        if self.kind is AnswerKind.SPAN:
            return self.text
        if self.kind is AnswerKind.YES:
            return "yes"
        if self.kind is AnswerKind.NO:
            return "no"
        return ""  # no-answer predictions emit the empty string


def _span_text(ctx: QAContext, start: int, end: int) -> str:
    """Reconstruct source text for tokens start..end inclusive.

    Tokens are grouped into runs over the same source string; each run
    contributes the exact substring between its first and last token, and
    runs are joined with single spaces. A span that stays inside one
    sentence is therefore a verbatim substring of it.
    """
    parts: list[str] = []
    run: list[CharSpan] = []
    run_key: tuple | None = None
    for idx in range(start, end + 1):
        entry = ctx.char_map[idx]
        if entry is None:
            continue
        if run_key is not None and entry.source_key != run_key:
            parts.append(run[0].text[run[0].start : run[-1].end])
            run = []
        run_key = entry.source_key
        run.append(entry)
    if run:
        parts.append(run[0].text[run[0].start : run[-1].end])
    return " ".join(parts)


def decode_answer(
    ctx: QAContext,
    logits: SpanLogits,
    max_span_len: int = DEFAULT_MAX_SPAN_LEN,
) -> AnswerPrediction:
    """Argmax decode over body spans and the yes/no/noans tail tokens.

    Candidates are spans (i, j) with i <= j, length at most max_span_len,
    whose endpoints are paragraph or title tokens, plus the three tail
    singletons. Ties break to the earliest start, then the shortest span.
    """
    n = len(ctx.tokens)
    if len(logits) != n:
        raise ValueError(f"logit length {len(logits)} does not match context {n}")

    start_l = logits.start_logits
    end_l = logits.end_logits
    body = [tag.kind in (TAG_PARAGRAPH, TAG_TITLE) for tag in ctx.tokens.source]
    tail = {ctx.yes_index, ctx.no_index, ctx.noans_index}

    best: tuple[int, int] | None = None
    best_score = -math.inf
    for i in range(n):
        if body[i]:
            j_stop = min(i + max_span_len, n)
            for j in range(i, j_stop):
                if body[j]:
                    score = start_l[i] + end_l[j]
                    if score > best_score:
                        best_score = score
                        best = (i, j)
        elif i in tail:
            score = start_l[i] + end_l[i]
            if score > best_score:
                best_score = score
                best = (i, i)

    if best is None:
        raise ValueError("context has no valid answer candidates")

    i, j = best
    if i == ctx.yes_index:
        return AnswerPrediction(AnswerKind.YES, "", best_score)
    if i == ctx.no_index:
        return AnswerPrediction(AnswerKind.NO, "", best_score)
    if i == ctx.noans_index:
        return AnswerPrediction(AnswerKind.NOANS, "", best_score)
    return AnswerPrediction(AnswerKind.SPAN, _span_text(ctx, i, j), best_score, (i, j))


class SpanBackend(Protocol):
    """Produces start/end logits aligned to a QA context."""

    name: str

    def span_logits(self, ctx: QAContext) -> SpanLogits: ...


class RandomSpanBackend:
    """Deterministic random logits; the seed and qid fix every value."""

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self.name = f"random:{seed}"

    def span_logits(self, ctx: QAContext) -> SpanLogits:
        digest = hashlib.sha256(f"{self.seed}:{ctx.qid}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        n = len(ctx.tokens)
        return SpanLogits.from_arrays(
            rng.normal(0.0, 1.0, n), rng.normal(0.0, 1.0, n)
        )


_PEAK = 8.0
_FLOOR = -8.0


class OracleSpanBackend:
    """Peaks logits on the first occurrence of the gold answer, for tests.

    Yes/no answers peak the corresponding tail token; an answer that cannot
    be located in any source string peaks the noans token.
    """

    def __init__(self, answers: Mapping[str, str]) -> None:
        self.answers = dict(answers)
        self.name = "oracle"

    def span_logits(self, ctx: QAContext) -> SpanLogits:
        n = len(ctx.tokens)
        start = [_FLOOR] * n
        end = [_FLOOR] * n
        answer = self.answers.get(ctx.qid)
        if answer is None:
            raise KeyError(f"oracle has no gold answer for qid {ctx.qid!r}")

        if answer in ("yes", "no"):
            idx = ctx.yes_index if answer == "yes" else ctx.no_index
            start[idx] = _PEAK
            end[idx] = _PEAK
            return SpanLogits.from_arrays(start, end)

        placed = self._peak_on_answer(ctx, answer, start, end)
        if not placed:
            start[ctx.noans_index] = _PEAK
            end[ctx.noans_index] = _PEAK
        return SpanLogits.from_arrays(start, end)

    def _peak_on_answer(
        self, ctx: QAContext, answer: str, start: list[float], end: list[float]
    ) -> bool:
        seen: set[tuple] = set()
        for idx, entry in enumerate(ctx.char_map):
            if entry is None or entry.source_key in seen:
                continue
            if entry.source_key[0] not in ("sentence", "title"):
                continue  # only body tokens are valid span endpoints
            seen.add(entry.source_key)
            pos = entry.text.find(answer)
            if pos < 0:
                continue
            covering = [
                k
                for k, e in enumerate(ctx.char_map)
                if e is not None
                and e.source_key == entry.source_key
                and e.end > pos
                and e.start < pos + len(answer)
            ]
            if not covering:
                continue
            start[covering[0]] = _PEAK
            end[covering[-1]] = _PEAK
            return True
        return False


class FileSpanBackend:
    """Ingests externally produced logits from a JSON-lines file.

    Line format: {"id": qid, "start_logits": [...], "end_logits": [...]},
    aligned to the context dump.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.name = f"file:{self.path}"
        self._by_qid: dict[str, SpanLogits] = {}
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            self._by_qid[row["id"]] = SpanLogits.from_arrays(
                row["start_logits"], row["end_logits"]
            )

    def span_logits(self, ctx: QAContext) -> SpanLogits:
        if ctx.qid not in self._by_qid:
            raise KeyError(f"no span logits for qid {ctx.qid!r} in {self.path}")
        return self._by_qid[ctx.qid]


class HttpSpanBackend:
    """ndjson-over-HTTP client for a remote span-prediction service."""

    def __init__(
        self,
        endpoint: str,
        max_retries: int = 3,
        timeout: float = 60.0,
        retry_wait: float = 0.5,
    ) -> None:
        self.endpoint = endpoint
        self.max_retries = max_retries
        self.timeout = timeout
        self.retry_wait = retry_wait
        self.name = f"http:{endpoint}"

    def span_logits(self, ctx: QAContext) -> SpanLogits:
        request = {"id": ctx.qid, "token_ids": list(ctx.tokens.token_ids)}
        payload = json.dumps(request) + "\n"
        last_error: Exception | None = None
        body: str | None = None
        for attempt in range(self.max_retries):
            try:
                resp = _requests.post(
                    self.endpoint,
                    data=payload.encode("utf-8"),
                    headers={"Content-Type": "application/x-ndjson"},
                    timeout=self.timeout,
                )
                if resp.status_code != 200:
                    raise BackendProtocolError(
                        f"span endpoint returned HTTP {resp.status_code}"
                    )
                body = resp.text
                break
            except (_requests.ConnectionError, _requests.Timeout) as e:
                last_error = e
                if attempt + 1 < self.max_retries:
                    time.sleep(self.retry_wait * (attempt + 1))
        if body is None:
            raise TransportError(
                f"span endpoint {self.endpoint} unreachable after "
                f"{self.max_retries} attempts: {last_error}"
            )

        for line in body.splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            if row.get("id") == ctx.qid:
                return SpanLogits.from_arrays(row["start_logits"], row["end_logits"])
        raise BackendProtocolError(f"span endpoint did not answer qid {ctx.qid!r}")
