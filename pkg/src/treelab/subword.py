"""Per-language BPE vocabularies and the masking sampler for MLM data prep.

Learning is the classic greedy procedure: count adjacent symbol pairs over
whitespace-pretokenized words, repeatedly merge the most frequent pair,
stop when the vocabulary budget is reached or no pair occurs twice. Two
conventions are fixed here because the textbook algorithm leaves them
open, and both are needed for reproducibility:

* frequency ties are broken by lexicographic order of the pair;
* the end-of-word marker ``</w>`` is a boundary symbol: it terminates each
  word in the output id stream but never participates in a merge.

Vocabularies are never shared across languages; a model records the
language tag it was trained on. Ids are dense and 0-based with the five
special tokens first (pad, unk, cls, sep, mask), then the end-of-word
marker, then the initial alphabet in sorted order, then merge outputs in
learned order.

``mask_tokens`` implements the usual MLM corruption: each non-special
position is selected independently at the configured rate, and selected
positions are replaced by the mask id, kept, or resampled at the
configured split. Labels hold the original id at selected positions and
``IGNORE_LABEL`` (0, unambiguous because specials are never selected)
elsewhere.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .rng import Rng, SeedScheme

SPECIAL_TOKENS = ("<pad>", "<unk>", "<cls>", "<sep>", "<mask>")
PAD_ID, UNK_ID, CLS_ID, SEP_ID, MASK_ID = range(5)
END_OF_WORD = "</w>"
IGNORE_LABEL = 0


class BpeError(ValueError):
    pass


@dataclass(frozen=True)
class BpeModel:
    """Ordered merge list plus the symbol vocabulary for one language."""

    merges: tuple[tuple[str, str], ...]
    vocab: dict[str, int]
    language: str = "und"
    end_of_word: str = END_OF_WORD
    special_tokens: tuple[str, ...] = SPECIAL_TOKENS

    @property
    def eow_id(self) -> int:
        return self.vocab[self.end_of_word]

    def id_to_symbol(self) -> dict[int, str]:
        return {i: s for s, i in self.vocab.items()}


def _build_vocab(alphabet: Sequence[str], merges: Iterable[tuple[str, str]]) -> dict[str, int]:
    vocab: dict[str, int] = {}
    for sym in (*SPECIAL_TOKENS, END_OF_WORD, *alphabet):
        vocab.setdefault(sym, len(vocab))
    for a, b in merges:
        vocab.setdefault(a + b, len(vocab))
    return vocab


def bpe_learn(corpus: Iterable[str], vocab_size: int, language: str = "und") -> BpeModel:
    """Learn merges from a stream of text (each item is whitespace-split).

    Deterministic for a given corpus: greedy most-frequent pair, ties to
    the lexicographically smaller pair, no merge for pairs seen once.
    """
    word_freq: Counter[str] = Counter()
    for chunk in corpus:
        word_freq.update(chunk.split())
    if not word_freq:
        raise BpeError("empty corpus")

    alphabet = sorted({ch for word in word_freq for ch in word})
    min_size = len(SPECIAL_TOKENS) + 1 + len(alphabet)
    if vocab_size < min_size:
        raise BpeError(
            f"vocab_size {vocab_size} too small: minimum feasible size is {min_size} "
            f"({len(SPECIAL_TOKENS)} specials + end-of-word + {len(alphabet)} characters)"
        )

    words: list[list] = [[list(w), f] for w, f in sorted(word_freq.items())]
    pair_counts: Counter[tuple[str, str]] = Counter()
    for syms, freq in words:
        for pair in zip(syms, syms[1:]):
            pair_counts[pair] += freq

    vocab = _build_vocab(alphabet, ())
    merges: list[tuple[str, str]] = []
    while len(vocab) < vocab_size and pair_counts:
        best_count = max(pair_counts.values())
        if best_count < 2:
            break
        best = min(p for p, c in pair_counts.items() if c == best_count)
        merges.append(best)
        vocab.setdefault(best[0] + best[1], len(vocab))
        for entry in words:
            syms, freq = entry
            if not _has_pair(syms, best):
                continue
            for pair in zip(syms, syms[1:]):
                pair_counts[pair] -= freq
            fused = _fuse(syms, best)
            for pair in zip(fused, fused[1:]):
                pair_counts[pair] += freq
            entry[0] = fused
        pair_counts = +pair_counts  # drop zero entries

    return BpeModel(tuple(merges), vocab, language)


def _has_pair(syms: Sequence[str], pair: tuple[str, str]) -> bool:
    a, b = pair
    return any(syms[i] == a and syms[i + 1] == b for i in range(len(syms) - 1))


def _fuse(syms: Sequence[str], pair: tuple[str, str]) -> list[str]:
    """Replace every occurrence of the pair, left to right, non-overlapping."""
    a, b = pair
    out: list[str] = []
    i = 0
    while i < len(syms):
        if i + 1 < len(syms) and syms[i] == a and syms[i + 1] == b:
            out.append(a + b)
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return out


def _segment_word(model: BpeModel, word: str, ranks: dict[tuple[str, str], int]) -> list[str]:
    syms = list(word)
    while len(syms) > 1:
        best_rank = None
        best_pair = None
        for pair in zip(syms, syms[1:]):
            rank = ranks.get(pair)
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank, best_pair = rank, pair
        if best_pair is None:
            break
        syms = _fuse(syms, best_pair)
    return syms


def bpe_apply(model: BpeModel, text: str) -> list[int]:
    """Encode whitespace-split text; every word ends with the end-of-word id.

    Residual symbols outside the vocabulary map to the unk id.
    """
    ranks = {pair: i for i, pair in enumerate(model.merges)}
    ids: list[int] = []
    for word in text.split():
        for sym in _segment_word(model, word, ranks):
            ids.append(model.vocab.get(sym, UNK_ID))
        ids.append(model.eow_id)
    return ids


def bpe_decode(model: BpeModel, ids: Sequence[int]) -> str:
    """Inverse of ``bpe_apply`` on text over the training character set;
    unknown-id positions decode to the literal unk token, marking the loss."""
    symbols = model.id_to_symbol()
    words: list[str] = []
    current: list[str] = []
    for i in ids:
        sym = symbols.get(i)
        if sym is None:
            raise BpeError(f"id {i} not in vocabulary")
        if sym == model.end_of_word:
            words.append("".join(current))
            current = []
        else:
            current.append(sym)
    if current:
        words.append("".join(current))
    return " ".join(words)


def save_model(model: BpeModel, path: str) -> None:
    """Text format: header lines, the initial alphabet, then one merge per line."""
    # Alphabet entries are the only single-character symbols in the vocabulary.
    alphabet = [s for s, _ in sorted(model.vocab.items(), key=lambda kv: kv[1]) if len(s) == 1]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("bpe-model v1\n")
        fh.write(f"language {model.language}\n")
        fh.write(f"end_of_word {model.end_of_word}\n")
        fh.write("specials " + " ".join(model.special_tokens) + "\n")
        fh.write(f"alphabet {len(alphabet)}\n")
        for sym in alphabet:
            fh.write(sym + "\n")
        fh.write(f"merges {len(model.merges)}\n")
        for a, b in model.merges:
            fh.write(f"{a} {b}\n")


def load_model(path: str) -> BpeModel:
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    try:
        if lines[0] != "bpe-model v1":
            raise BpeError(f"unsupported model header: {lines[0]!r}")
        language = lines[1].split(" ", 1)[1]
        eow = lines[2].split(" ", 1)[1]
        specials = tuple(lines[3].split()[1:])
        n_alpha = int(lines[4].split()[1])
        alphabet = lines[5 : 5 + n_alpha]
        pos = 5 + n_alpha
        n_merges = int(lines[pos].split()[1])
        merges = []
        for line in lines[pos + 1 : pos + 1 + n_merges]:
            a, b = line.split(" ")
            merges.append((a, b))
    except (IndexError, ValueError) as exc:
        raise BpeError(f"malformed model file {path}: {exc}") from exc
    vocab: dict[str, int] = {}
    for sym in (*specials, eow, *alphabet):
        vocab.setdefault(sym, len(vocab))
    for a, b in merges:
        vocab.setdefault(a + b, len(vocab))
    return BpeModel(tuple(merges), vocab, language, eow, specials)


@dataclass(frozen=True)
class MaskingConfig:
    """Selection rate and the replace/keep/resample split for selected tokens."""

    mask_rate: float = 0.15
    replace_mask: float = 0.8
    keep_original: float = 0.1
    replace_random: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.mask_rate <= 1.0:
            raise ValueError(f"mask_rate must be in [0, 1], got {self.mask_rate}")
        parts = (self.replace_mask, self.keep_original, self.replace_random)
        if any(p < 0 for p in parts) or not math.isclose(sum(parts), 1.0, abs_tol=1e-9):
            raise ValueError("replace_mask + keep_original + replace_random must equal 1")


def mask_tokens(
    ids: Sequence[int],
    config: MaskingConfig,
    vocab_size: int,
    sentence_index: int = 0,
    *,
    rng: Rng | None = None,
) -> tuple[list[int], list[int]]:
    """Corrupt a subword id sequence for MLM training.

    Returns ``(masked_ids, labels)``. Special-token positions are never
    selected. Stream consumption order: one uniform draw per candidate
    position, then for selected positions one draw for the replace/keep/
    resample decision and, only when resampling, one bounded-integer draw.
    """
    n_special = len(SPECIAL_TOKENS)
    if vocab_size <= n_special:
        raise ValueError(f"vocab_size must exceed {n_special}")
    if rng is None:
        rng = SeedScheme(config.seed, sentence_index).stream()

    masked = list(ids)
    labels = [IGNORE_LABEL] * len(masked)
    cut_mask = config.replace_mask
    cut_keep = config.replace_mask + config.keep_original
    for i, token_id in enumerate(masked):
        if token_id < n_special:
            continue
        if rng.random() >= config.mask_rate:
            continue
        labels[i] = token_id
        u = rng.random()
        if u < cut_mask:
            masked[i] = MASK_ID
        elif u < cut_keep:
            pass
        else:
            masked[i] = n_special + rng.randbelow(vocab_size - n_special)
    return masked, labels


def write_ids_file(path: str, sequences: Iterable[Sequence[int]]) -> None:
    """One sentence per line, ids space-separated."""
    with open(path, "w", encoding="utf-8") as fh:
        for seq in sequences:
            fh.write(" ".join(str(i) for i in seq))
            fh.write("\n")


def read_ids_file(path: str) -> list[list[int]]:
    with open(path, encoding="utf-8") as fh:
        return [[int(tok) for tok in line.split()] for line in fh]
