"""Scorer backends: the batch contract, a lexical baseline, and a wire client.

A backend receives a batch of per-sentence requests and returns one finite
logit per request, in request order. The wire protocol (ndjson over HTTP) is::

    request:  {"id": str, "question": str, "paragraph_tokens": [int],
               "segment_ids": [int], "answer_mode": "mask"|"text"}
    response: {"id": str, "logit": number}

Responses may arrive in any order but every id must be answered exactly
once. In ``"text"`` mode the answer string travels appended to the question
field, matching how the answer-conditioned scorer consumes it.
"""

from __future__ import annotations

import json
import math
import re
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

import requests as _requests


class TransportError(RuntimeError):
    """Backend unreachable after bounded retries."""


class BackendProtocolError(RuntimeError):
    """Backend reachable but violated the wire contract."""


# Small fixed list so overlap scores key on informative words only.
_STOPWORDS = frozenset(
    """a an the and or but if then than that this these those of in on at to
    from for by with without as is are was were be been being it its his her
    their our your my do does did done not what which who whom whose where
    when how why there here he she they we you i""".split()
)

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def content_words(text: str) -> frozenset[str]:
    return frozenset(
        w for w in (m.group(0).lower() for m in _WORD_RE.finditer(text))
        if w not in _STOPWORDS
    )


def lexical_overlap_score(question: str, sentence: str, answer: str | None = None) -> float:
    """Deterministic overlap logit standing in for a trained scorer.

    Returns ``log((overlap + 0.5) / (|sentence content words| + 1))`` where
    overlap counts distinct content words shared between the sentence and the
    question (plus the answer, when given). Monotone in overlap and
    negative whenever overlap is low, like a real logit.
    """
    query = content_words(question)
    if answer is not None:
        query = query | content_words(answer)
    sent = content_words(sentence)
    overlap = len(query & sent)
    return math.log((overlap + 0.5) / (len(sent) + 1))


@dataclass(frozen=True)
class ScoreRequest:
    """One sentence-scoring request, carrying both text and encoded forms."""

    request_id: str
    question: str
    answer: str | None  # None selects mask mode
    sentence_text: str
    paragraph_tokens: tuple[int, ...]
    segment_ids: tuple[int, ...]

    @property
    def answer_mode(self) -> str:
        return "mask" if self.answer is None else "text"

    def wire_question(self) -> str:
        # The answer string is appended to the question on the wire, even
        # for "yes"/"no" answers.
        if self.answer is None:
            return self.question
        return f"{self.question} {self.answer}"

    def to_wire(self) -> dict:
        return {
            "id": self.request_id,
            "question": self.wire_question(),
            "paragraph_tokens": list(self.paragraph_tokens),
            "segment_ids": list(self.segment_ids),
            "answer_mode": self.answer_mode,
        }


class ScorerBackend(Protocol):
    """Batch-oriented scorer: logits come back in request order."""

    name: str

    def score_batch(self, batch: Sequence[ScoreRequest]) -> list[float]: ...


class LexicalOverlapBackend:
    """In-process deterministic backend built on lexical_overlap_score."""

    name = "lexical"

    def score_batch(self, batch: Sequence[ScoreRequest]) -> list[float]:
        return [
            lexical_overlap_score(r.question, r.sentence_text, r.answer)
            for r in batch
        ]


class HttpScorerBackend:
    """ndjson-over-HTTP client for a remote scorer service."""

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

    def _post(self, payload: str) -> str:
        last_error: Exception | None = None
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
                        f"scorer endpoint returned HTTP {resp.status_code}"
                    )
                return resp.text
            except (_requests.ConnectionError, _requests.Timeout) as e:
                last_error = e
                if attempt + 1 < self.max_retries:
                    time.sleep(self.retry_wait * (attempt + 1))
        raise TransportError(
            f"scorer endpoint {self.endpoint} unreachable after "
            f"{self.max_retries} attempts: {last_error}"
        )

    def score_batch(self, batch: Sequence[ScoreRequest]) -> list[float]:
        if not batch:
            return []
        payload = "\n".join(json.dumps(r.to_wire()) for r in batch) + "\n"
        body = self._post(payload)

        logits: dict[str, float] = {}
        for line in body.splitlines():
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise BackendProtocolError(f"unparseable response line: {line!r}") from e
            if not isinstance(obj, dict) or "id" not in obj or "logit" not in obj:
                raise BackendProtocolError(f"malformed response object: {obj!r}")
            rid = obj["id"]
            if rid in logits:
                raise BackendProtocolError(f"id {rid!r} answered more than once")
            logit = obj["logit"]
            if not isinstance(logit, (int, float)) or not math.isfinite(logit):
                raise BackendProtocolError(f"non-finite logit for id {rid!r}: {logit!r}")
            logits[rid] = float(logit)

        missing = [r.request_id for r in batch if r.request_id not in logits]
        if missing:
            raise BackendProtocolError(f"unanswered request ids: {missing[:5]}")
        extra = set(logits) - {r.request_id for r in batch}
        if extra:
            raise BackendProtocolError(f"unrequested response ids: {sorted(extra)[:5]}")
        return [logits[r.request_id] for r in batch]
