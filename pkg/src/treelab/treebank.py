"""Bracketed constituent trees: parsing, serialization, traversal.

A tree is represented by its root :class:`TreeNode`. Nodes are frozen;
transformations build new trees and share untouched subtrees, so trees are
safe to hand to concurrent workers. Leaves carry the surface token and,
once assigned, the token's position in the original sentence
(``origin``), which rides along through every transformation and makes
order metrics well-defined even when surface forms repeat.

File convention: UTF-8, one bracketed tree per line. Lines that contain
only brackets and whitespace (e.g. ``(())``) are treated as empty
placeholders and skipped with a warning counter rather than rejected.

Tokens and labels may not contain raw parentheses or whitespace;
``escape_symbol`` maps ``(`` / ``)`` to the PTB forms ``-LRB-`` / ``-RRB-``
and any whitespace character to ``-SPC-``. Escaping happens when a node is
built from raw text; already-escaped input (e.g. a literal ``-LRB-`` in a
treebank file) is preserved verbatim.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

_RESERVED = "()"
_ESCAPES = {"(": "-LRB-", ")": "-RRB-"}


class TreeParseError(ValueError):
    """Malformed bracketing; ``offset`` is the UTF-8 byte offset of the problem."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def escape_symbol(text: str) -> str:
    """Escape raw parentheses/whitespace so the symbol is serializable."""
    if not any(c in _RESERVED or c.isspace() for c in text):
        return text
    out = []
    for c in text:
        if c in _ESCAPES:
            out.append(_ESCAPES[c])
        elif c.isspace():
            out.append("-SPC-")
        else:
            out.append(c)
    return "".join(out)


@dataclass(frozen=True)
class TreeNode:
    """One node: a leaf iff ``token`` is set, in which case it has no children.

    ``origin`` (leaves only) is excluded from equality and hashing: two trees
    are structurally equal when labels, tokens, and child order agree.
    """

    label: str
    children: tuple["TreeNode", ...] = ()
    token: str | None = None
    origin: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.label:
            raise ValueError("empty node label")
        if (self.token is None) == (len(self.children) == 0):
            raise ValueError("node must have either a token or children, not both")

    @property
    def is_leaf(self) -> bool:
        return self.token is not None


def leaf(label: str, token: str, origin: int | None = None) -> TreeNode:
    """Build a leaf from raw text, escaping reserved characters."""
    lab, tok = escape_symbol(label), escape_symbol(token)
    if not lab or not tok:
        raise ValueError("leaf label and token must be non-empty")
    return TreeNode(lab, (), tok, origin)


def internal(label: str, children: Iterable[TreeNode]) -> TreeNode:
    """Build an internal node from raw text label and >=1 children."""
    kids = tuple(children)
    if not kids:
        raise ValueError("internal node needs at least one child")
    lab = escape_symbol(label)
    if not lab:
        raise ValueError("empty node label")
    return TreeNode(lab, kids)


@dataclass(frozen=True)
class Sentence:
    """Ordered tokens with their positions in the original sentence.

    ``tokens`` is a sequence of ``(surface, origin_index)`` pairs; the
    origin indices are always a permutation of ``0..n-1`` but need not be
    sorted once the sentence has been transformed.
    """

    tokens: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        origins = sorted(o for _, o in self.tokens)
        if origins != list(range(len(self.tokens))):
            raise ValueError("origin indices must be a permutation of 0..n-1")

    def __len__(self) -> int:
        return len(self.tokens)

    def surfaces(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.tokens)

    def origins(self) -> tuple[int, ...]:
        return tuple(o for _, o in self.tokens)

    def text(self) -> str:
        return " ".join(self.surfaces())

    @classmethod
    def from_surfaces(cls, surfaces: Iterable[str]) -> "Sentence":
        return cls(tuple((s, i) for i, s in enumerate(surfaces)))


_ATOM = re.compile(r"[^\s()]+")


def parse_ptb(text: str) -> TreeNode:
    """Parse a single bracketed tree ``(LABEL child ...)`` / ``(TAG token)``.

    Leaf origins are assigned 0..n-1 in textual order. Raises
    :class:`TreeParseError` with a byte offset on malformed input.
    """
    counter = [0]
    pos = _skip_ws(text, 0)
    if pos >= len(text):
        raise TreeParseError("empty input", _byte_offset(text, pos))
    node, pos = _parse_node(text, pos, counter)
    pos = _skip_ws(text, pos)
    if pos < len(text):
        raise TreeParseError("trailing content after tree", _byte_offset(text, pos))
    return node


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos].isspace():
        pos += 1
    return pos


def _parse_node(text: str, pos: int, counter: list[int]) -> tuple[TreeNode, int]:
    if text[pos] != "(":
        raise TreeParseError(f"expected '(', found {text[pos]!r}", _byte_offset(text, pos))
    pos = _skip_ws(text, pos + 1)
    m = _ATOM.match(text, pos)
    if m is None:
        what = "end of input" if pos >= len(text) else repr(text[pos])
        raise TreeParseError(f"expected node label, found {what}", _byte_offset(text, pos))
    label = m.group()
    pos = _skip_ws(text, m.end())
    if pos >= len(text):
        raise TreeParseError("unbalanced brackets: unexpected end of input", _byte_offset(text, pos))

    if text[pos] == "(":
        children = []
        while pos < len(text) and text[pos] == "(":
            child, pos = _parse_node(text, pos, counter)
            children.append(child)
            pos = _skip_ws(text, pos)
        if pos >= len(text):
            raise TreeParseError("unbalanced brackets: unexpected end of input", _byte_offset(text, pos))
        if text[pos] != ")":
            raise TreeParseError(f"expected ')' , found {text[pos]!r}", _byte_offset(text, pos))
        return TreeNode(label, tuple(children)), pos + 1

    m = _ATOM.match(text, pos)
    if m is None:
        raise TreeParseError(f"expected token or child, found {text[pos]!r}", _byte_offset(text, pos))
    token = m.group()
    pos = _skip_ws(text, m.end())
    if pos >= len(text):
        raise TreeParseError("unbalanced brackets: unexpected end of input", _byte_offset(text, pos))
    if text[pos] == "(":
        raise TreeParseError("leaf cannot have children", _byte_offset(text, pos))
    if text[pos] != ")":
        raise TreeParseError(f"expected ')' after token, found {text[pos]!r}", _byte_offset(text, pos))
    node = TreeNode(label, (), token, counter[0])
    counter[0] += 1
    return node, pos + 1


def serialize(tree: TreeNode) -> str:
    """Canonical single-space form; ``parse_ptb(serialize(t))`` equals ``t``."""
    parts: list[str] = []
    _write(tree, parts)
    return "".join(parts)


def _write(node: TreeNode, parts: list[str]) -> None:
    if node.is_leaf:
        parts.append(f"({node.label} {node.token})")
        return
    parts.append(f"({node.label}")
    for child in node.children:
        parts.append(" ")
        _write(child, parts)
    parts.append(")")


def iter_nodes(tree: TreeNode) -> Iterator[TreeNode]:
    """Pre-order traversal."""
    stack = [tree]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))


def iter_leaves(tree: TreeNode) -> Iterator[TreeNode]:
    for node in iter_nodes(tree):
        if node.is_leaf:
            yield node


def ensure_origins(tree: TreeNode) -> TreeNode:
    """Return a tree whose leaves all carry origins.

    If no leaf has an origin, positions 0..n-1 are assigned in leaf order;
    if all leaves already have origins the tree is returned unchanged.
    Mixed trees are rejected: they indicate leaves from different
    provenances were combined.
    """
    leaves = list(iter_leaves(tree))
    have = [n for n in leaves if n.origin is not None]
    if len(have) == len(leaves):
        return tree
    if have:
        raise ValueError("tree mixes leaves with and without origin indices")
    counter = [0]

    def rebuild(node: TreeNode) -> TreeNode:
        if node.is_leaf:
            out = TreeNode(node.label, (), node.token, counter[0])
            counter[0] += 1
            return out
        return TreeNode(node.label, tuple(rebuild(c) for c in node.children))

    return rebuild(tree)


def yield_sentence(tree: TreeNode) -> Sentence:
    """Left-to-right leaf sequence with carried (or freshly assigned) origins."""
    leaves = list(iter_leaves(tree))
    if all(n.origin is None for n in leaves):
        return Sentence(tuple((n.token, i) for i, n in enumerate(leaves)))  # type: ignore[misc]
    if any(n.origin is None for n in leaves):
        raise ValueError("tree mixes leaves with and without origin indices")
    return Sentence(tuple((n.token, n.origin) for n in leaves))  # type: ignore[misc]


_NON_TREE_LINE = re.compile(r"^[\s()]*$")


class TreebankReader:
    """Iterate ``(line_number, tree)`` over one-tree-per-line text.

    ``skipped`` counts placeholder lines (empty or bracket-only) that were
    passed over. Line numbers are 1-based. Parse errors propagate; callers
    that want to tolerate them should catch :class:`TreeParseError`.
    """

    def __init__(self, lines: Iterable[str]) -> None:
        self._lines = lines
        self.skipped = 0

    def __iter__(self) -> Iterator[tuple[int, TreeNode]]:
        for lineno, line in enumerate(self._lines, start=1):
            if _NON_TREE_LINE.match(line):
                if line.strip():
                    self.skipped += 1
                continue
            yield lineno, parse_ptb(line)


def read_treebank(path: str) -> list[TreeNode]:
    """Read all trees from a file, silently skipping placeholder lines."""
    with open(path, encoding="utf-8") as fh:
        return [tree for _, tree in TreebankReader(fh)]


def write_treebank(path: str, trees: Iterable[TreeNode]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tree in trees:
            fh.write(serialize(tree))
            fh.write("\n")
