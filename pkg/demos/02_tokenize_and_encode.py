"""Word-piece tokenization and the scorer input encoding.

Shows greedy longest-match segmentation, char offsets, and how the
target sentence is marked with segment IDs inside the
[CLS] question [SEP] paragraph [SEP] answer [SEP] layout.
"""

from hoppipe import (
    Paragraph,
    SentenceRef,
    Vocabulary,
    default_vocabulary,
    encode_scoring_input,
    tokenize,
    tokenize_with_offsets,
)
from hoppipe.tokenization import CLS_TOKEN, MASK_TOKEN, SEP_TOKEN, UNK_TOKEN

# A tiny vocab: line index = token id, ## marks continuation pieces.
vocab = Vocabulary.from_tokens(
    [CLS_TOKEN, SEP_TOKEN, MASK_TOKEN, UNK_TOKEN, "un", "una", "##aff", "##able",
     "##ffable", "affable", "he", "was", "!"]
)
for word in ("unaffable", "affable", "unknownword"):
    print(f"{word!r} -> {tokenize(word, vocab)}")

# The built-in vocabulary falls back to characters, so any printable ASCII
# text round-trips through offsets.
ascii_vocab = default_vocabulary()
text = "Orff (1895-1982)."
ids, spans = tokenize_with_offsets(text, ascii_vocab)
print(f"\n{text!r} -> {len(ids)} pieces")
print("  pieces:", [text[s:e] for s, e in spans])

paragraph = Paragraph(
    title="Carl Orff",
    sentences=("Carl Orff was a German composer.", "He was born in Munich."),
)
encoded = encode_scoring_input(
    question="where was the composer born ?",
    paragraph=paragraph,
    target=SentenceRef(0, 1),
    answer=None,  # no-answer variant: the answer slot holds one [MASK]
    vocab=ascii_vocab,
)
print(f"\nencoded length: {len(encoded)} (cap 512)")
print(f"segment-1 tokens: {sum(encoded.segment_ids)} "
      f"(= pieces of the target sentence)")
kinds = [tag.kind for tag in encoded.source]
print("layout:", " ".join(sorted(set(kinds), key=kinds.index)))
