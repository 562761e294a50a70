"""Word-piece tokenization and scoring-model input encoding.

Tokenization is cased: basic tokenization splits on whitespace and
punctuation without lowercasing, then each word is segmented by greedy
longest-match against the vocabulary, with ``##`` marking continuation
pieces. A word with no match at some position maps whole to the unknown
token.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from pathlib import Path
from string import ascii_letters, digits, printable
from typing import Iterable

from .corpus import Paragraph, SentenceRef

MAX_SEQUENCE_LENGTH = 512
CONTINUATION_PREFIX = "##"
_MAX_WORD_CHARS = 200

CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
MASK_TOKEN = "[MASK]"
UNK_TOKEN = "[UNK]"
TITLE_OPEN = "<t>"
TITLE_CLOSE = "</t>"
YES_TOKEN = "yes"
NO_TOKEN = "no"
NOANS_TOKEN = "noans"

# Token origin tags carried in TokenSequence.source.
TAG_SPECIAL = "special"
TAG_QUESTION = "question"
TAG_PARAGRAPH = "paragraph"
TAG_ANSWER = "answer"
TAG_TITLE = "title"


class VocabularyError(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    """Token-to-id map with the four designated special tokens.

    Ids are dense from 0; when loaded from a file, the id is the line index.
    """

    token_to_id: dict[str, int]
    tokens: tuple[str, ...]

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Vocabulary":
        toks = tuple(tokens)
        mapping: dict[str, int] = {}
        for i, tok in enumerate(toks):
            if tok in mapping:
                raise VocabularyError(f"duplicate vocab token {tok!r} at line {i}")
            mapping[tok] = i
        for special in (CLS_TOKEN, SEP_TOKEN, MASK_TOKEN, UNK_TOKEN):
            if special not in mapping:
                raise VocabularyError(f"vocab is missing special token {special!r}")
        return cls(token_to_id=mapping, tokens=toks)

    @classmethod
    def from_file(cls, path: str | Path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls.from_tokens(lines)

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id_of(self, token: str) -> int:
        return self.token_to_id[token]

    @property
    def cls_id(self) -> int:
        return self.token_to_id[CLS_TOKEN]

    @property
    def sep_id(self) -> int:
        return self.token_to_id[SEP_TOKEN]

    @property
    def mask_id(self) -> int:
        return self.token_to_id[MASK_TOKEN]

    @property
    def unk_id(self) -> int:
        return self.token_to_id[UNK_TOKEN]


def default_vocabulary(extra_tokens: Iterable[str] = ()) -> Vocabulary:
    """A built-in vocabulary that tokenizes any printable-ASCII text.

    Single characters plus ``##``-continuations of alphanumerics guarantee a
    character-level fallback, so nothing maps to the unknown token unless it
    contains non-ASCII characters. Callers with a trained model should load
    that model's vocab file instead.
    """
    tokens: list[str] = [CLS_TOKEN, SEP_TOKEN, MASK_TOKEN, UNK_TOKEN]
    tokens += [TITLE_OPEN, TITLE_CLOSE, YES_TOKEN, NO_TOKEN, NOANS_TOKEN]
    singles = [c for c in printable if not c.isspace()]
    tokens += singles
    tokens += [CONTINUATION_PREFIX + c for c in ascii_letters + digits]
    for tok in extra_tokens:
        if tok not in tokens:
            tokens.append(tok)
    return Vocabulary.from_tokens(tokens)


def _is_punctuation(ch: str) -> bool:
    cp = ord(ch)
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(ch).startswith("P")


def basic_tokenize(text: str) -> list[tuple[str, int, int]]:
    """Split into words on whitespace and punctuation, keeping char offsets.

    Punctuation characters become single-character words. No case folding,
    no unicode normalization: offsets index the input string verbatim.
    """
    words: list[tuple[str, int, int]] = []
    start: int | None = None
    for i, ch in enumerate(text):
        if ch.isspace():
            if start is not None:
                words.append((text[start:i], start, i))
                start = None
        elif _is_punctuation(ch):
            if start is not None:
                words.append((text[start:i], start, i))
                start = None
            words.append((ch, i, i + 1))
        elif start is None:
            start = i
    if start is not None:
        words.append((text[start:], start, len(text)))
    return words


def wordpiece(word: str, vocab: Vocabulary) -> list[str] | None:
    """Greedy longest-match segmentation; None means unknown."""
    if len(word) > _MAX_WORD_CHARS:
        return None
    pieces: list[str] = []
    start = 0
    while start < len(word):
        end = len(word)
        piece = None
        while start < end:
            candidate = word[start:end]
            if start > 0:
                candidate = CONTINUATION_PREFIX + candidate
            if candidate in vocab:
                piece = candidate
                break
            end -= 1
        if piece is None:
            return None
        pieces.append(piece)
        start = end
    return pieces


def tokenize_with_offsets(
    text: str, vocab: Vocabulary
) -> tuple[list[int], list[tuple[int, int]]]:
    """Token ids plus per-token (start, end) char spans into ``text``.

    A word that fails word-piece segmentation yields one unknown token whose
    span covers the whole word.
    """
    ids: list[int] = []
    spans: list[tuple[int, int]] = []
    for word, wstart, _wend in basic_tokenize(text):
        pieces = wordpiece(word, vocab)
        if pieces is None:
            ids.append(vocab.unk_id)
            spans.append((wstart, wstart + len(word)))
            continue
        offset = 0
        for piece in pieces:
            length = len(piece) - (len(CONTINUATION_PREFIX) if offset > 0 else 0)
            ids.append(vocab.id_of(piece))
            spans.append((wstart + offset, wstart + offset + length))
            offset += length
    return ids, spans


def tokenize(text: str, vocab: Vocabulary) -> list[int]:
    ids, _ = tokenize_with_offsets(text, vocab)
    return ids


@dataclass(frozen=True)
class TokenTag:
    """Origin of one token in an encoded sequence."""

    kind: str  # one of TAG_* above
    paragraph_index: int | None = None
    sentence_index: int | None = None

    @classmethod
    def special(cls) -> "TokenTag":
        return cls(TAG_SPECIAL)

    @classmethod
    def question(cls) -> "TokenTag":
        return cls(TAG_QUESTION)

    @classmethod
    def answer(cls) -> "TokenTag":
        return cls(TAG_ANSWER)

    @classmethod
    def sentence(cls, paragraph_index: int, sentence_index: int) -> "TokenTag":
        return cls(TAG_PARAGRAPH, paragraph_index, sentence_index)

    @classmethod
    def title(cls, paragraph_index: int) -> "TokenTag":
        return cls(TAG_TITLE, paragraph_index)


@dataclass(frozen=True)
class TokenSequence:
    """A model input: ids, binary segment ids, and per-token origin tags."""

    token_ids: tuple[int, ...]
    segment_ids: tuple[int, ...]
    source: tuple[TokenTag, ...]
    target_truncated: bool = False

    def __post_init__(self) -> None:
        n = len(self.token_ids)
        if len(self.segment_ids) != n or len(self.source) != n:
            raise ValueError("token_ids, segment_ids, and source must align")
        if n > MAX_SEQUENCE_LENGTH:
            raise ValueError(f"sequence length {n} exceeds {MAX_SEQUENCE_LENGTH}")
        if any(seg not in (0, 1) for seg in self.segment_ids):
            raise ValueError("segment ids must be 0 or 1")

    def __len__(self) -> int:
        return len(self.token_ids)


def encode_scoring_input(
    question: str,
    paragraph: Paragraph,
    target: SentenceRef,
    answer: str | None,
    vocab: Vocabulary,
) -> TokenSequence:
    """Build the scorer input: [CLS] question [SEP] paragraph [SEP] answer [SEP].

    ``answer=None`` selects the no-answer variant: the answer slot holds a
    single mask token. Segment ids are 1 exactly on the tokens of the target
    sentence; the whole paragraph is included in document order. Sequences
    longer than 512 tokens keep only the first 512; if that cuts away the
    entire target sentence, the result is flagged ``target_truncated`` and
    carries no segment-1 tokens.
    """
    if not 0 <= target.sentence_index < len(paragraph.sentences):
        raise ValueError(
            f"target sentence {target.sentence_index} not in paragraph "
            f"{paragraph.title!r} ({len(paragraph.sentences)} sentences)"
        )

    ids: list[int] = [vocab.cls_id]
    segs: list[int] = [0]
    tags: list[TokenTag] = [TokenTag.special()]

    q_ids = tokenize(question, vocab)
    ids += q_ids
    segs += [0] * len(q_ids)
    tags += [TokenTag.question()] * len(q_ids)

    ids.append(vocab.sep_id)
    segs.append(0)
    tags.append(TokenTag.special())

    for s_idx, sentence in enumerate(paragraph.sentences):
        s_ids = tokenize(sentence, vocab)
        is_target = s_idx == target.sentence_index
        ids += s_ids
        segs += [1 if is_target else 0] * len(s_ids)
        tags += [TokenTag.sentence(target.paragraph_index, s_idx)] * len(s_ids)

    ids.append(vocab.sep_id)
    segs.append(0)
    tags.append(TokenTag.special())

    if answer is None:
        ids.append(vocab.mask_id)
        segs.append(0)
        tags.append(TokenTag.answer())
    else:
        a_ids = tokenize(answer, vocab)
        ids += a_ids
        segs += [0] * len(a_ids)
        tags += [TokenTag.answer()] * len(a_ids)

    ids.append(vocab.sep_id)
    segs.append(0)
    tags.append(TokenTag.special())

    ids = ids[:MAX_SEQUENCE_LENGTH]
    segs = segs[:MAX_SEQUENCE_LENGTH]
    tags = tags[:MAX_SEQUENCE_LENGTH]

    # "Truncated" means the model would see no segment-1 tokens at all;
    # a partially surviving target sentence is still scoreable.
    return TokenSequence(
        token_ids=tuple(ids),
        segment_ids=tuple(segs),
        source=tuple(tags),
        target_truncated=sum(segs) == 0,
    )
