"""Tree and sentence modification operations.

Four families of modification, all pure functions over immutable trees:

* ``apply_reorder`` -- swap the two children of nodes matching a word-order
  rewrite rule (the WALS-style 83A/85A/87A built-ins, or custom rules).
* ``constituent_shuffle`` -- independently permute the children of every
  internal node, destroying constituent order while keeping grouping.
* ``word_shuffle`` -- uniform random permutation of the token sequence,
  destroying order and grouping together.
* ``remove_composition`` -- splice out a fixed fraction of the
  "intermediate" nodes (non-root nodes with more than one child),
  weakening the grouping structure by a controllable ratio.

Every operation preserves the multiset of ``(surface, origin)`` leaf
pairs. Randomized operations draw from the per-sentence
:class:`~treelab.rng.SeedScheme` stream, so results are reproducible and
independent of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .rng import Rng, SeedScheme
from .treebank import Sentence, TreeNode, ensure_origins


@dataclass(frozen=True)
class ReorderRule:
    """A (parent label, two-child pattern) swap rule.

    A node is rewritten when its label equals ``parent_label`` and it has
    exactly two children whose labels match ``first_child`` and
    ``second_child`` in order. Patterns listed in ``prefix_match`` match by
    prefix (so ``VB`` covers ``VBD``, ``VBZ``, ...); all others match
    exactly.
    """

    feature_id: str
    parent_label: str
    first_child: str
    second_child: str
    prefix_match: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.first_child == self.second_child:
            raise ValueError("child patterns must differ")
        for name in (self.feature_id, self.parent_label, self.first_child, self.second_child):
            if not name or any(c.isspace() for c in name):
                raise ValueError(f"bad rule component: {name!r}")

    def _matches(self, label: str, pattern: str) -> bool:
        if pattern in self.prefix_match:
            return label.startswith(pattern)
        return label == pattern

    def matches(self, node: TreeNode) -> bool:
        return (
            node.label == self.parent_label
            and len(node.children) == 2
            and self._matches(node.children[0].label, self.first_child)
            and self._matches(node.children[1].label, self.second_child)
        )


# Verb/object order, adposition/noun-phrase order, adjective/noun order.
# Prefix matching covers the tag families (VBD/VBZ..., NNS/NNP..., JJR...).
BUILTIN_RULES: dict[str, ReorderRule] = {
    "83A": ReorderRule("83A", "VP", "VB", "NP", frozenset({"VB"})),
    "85A": ReorderRule("85A", "PP", "IN", "NP"),
    "87A": ReorderRule("87A", "NP", "JJ", "NN", frozenset({"JJ", "NN"})),
}


def inverse_rule(rule: ReorderRule) -> ReorderRule:
    """Swap the child patterns; undoes ``apply_reorder`` on trees that
    contained no already-swapped instance of the rule."""
    return replace(rule, first_child=rule.second_child, second_child=rule.first_child)


def load_rules(lines: Iterable[str]) -> list[ReorderRule]:
    """Parse a rule file: one ``FEATURE PARENT CHILD1 CHILD2 [prefix:PAT ...]``
    per line, blank lines and ``#`` comments ignored."""
    rules = []
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) < 4:
            raise ValueError(f"rule line {lineno}: expected at least 4 fields, got {len(parts)}")
        prefixes = set()
        for extra in parts[4:]:
            if not extra.startswith("prefix:") or len(extra) <= len("prefix:"):
                raise ValueError(f"rule line {lineno}: bad modifier {extra!r}")
            prefixes.add(extra[len("prefix:"):])
        try:
            rules.append(ReorderRule(parts[0], parts[1], parts[2], parts[3], frozenset(prefixes)))
        except ValueError as exc:
            raise ValueError(f"rule line {lineno}: {exc}") from exc
    return rules


def load_rules_file(path: str) -> list[ReorderRule]:
    with open(path, encoding="utf-8") as fh:
        return load_rules(fh)


def apply_reorder(tree: TreeNode, rule: ReorderRule | Iterable[ReorderRule]) -> TreeNode:
    """Swap matching two-child nodes everywhere in the tree.

    Matching is against labels, which a swap never changes, so the result
    does not depend on traversal order. Non-matching trees pass through
    unchanged (and untouched subtrees are shared, not copied). A sequence
    of rules is applied as successive whole-tree passes, in order.
    """
    tree = ensure_origins(tree)
    for one in (rule,) if isinstance(rule, ReorderRule) else rule:
        tree = _reorder(tree, one)
    return tree


def _reorder(node: TreeNode, rule: ReorderRule) -> TreeNode:
    if node.is_leaf:
        return node
    kids = tuple(_reorder(c, rule) for c in node.children)
    if rule.matches(node):
        kids = (kids[1], kids[0])
    if kids == node.children:
        return node
    return TreeNode(node.label, kids)


def constituent_shuffle(
    tree: TreeNode,
    seed: SeedScheme | None = None,
    *,
    rng: Rng | None = None,
    include_root: bool = True,
) -> TreeNode:
    """Permute the children of every internal node with >=2 children.

    Permutations are independent uniform draws from the per-sentence
    stream, consumed in post-order with children visited in their original
    order. Parent-child relations (the grouping structure) are untouched.
    ``include_root=False`` leaves the root's children in place, for callers
    who treat top-level order as fixed.
    """
    rng = _resolve_rng(seed, rng)
    return _shuffle_node(ensure_origins(tree), rng, skip=not include_root)


def _shuffle_node(node: TreeNode, rng: Rng, skip: bool = False) -> TreeNode:
    if node.is_leaf:
        return node
    kids = [_shuffle_node(c, rng) for c in node.children]
    if len(kids) >= 2 and not skip:
        rng.shuffle(kids)
    return TreeNode(node.label, tuple(kids))


def word_shuffle(
    sentence: Sentence,
    seed: SeedScheme | None = None,
    *,
    rng: Rng | None = None,
) -> Sentence:
    """Uniform random permutation of the tokens; origins follow their tokens."""
    if len(sentence) == 0:
        raise ValueError("cannot shuffle an empty sentence")
    rng = _resolve_rng(seed, rng)
    tokens = list(sentence.tokens)
    rng.shuffle(tokens)
    return Sentence(tuple(tokens))


@dataclass(frozen=True)
class AblationSpec:
    """Parameters of one composition-removal pass.

    ``alpha`` is the fraction of intermediate nodes to remove;
    ``shuffle_after`` additionally runs ``constituent_shuffle`` on the
    spliced tree, continuing on the same random stream.
    """

    alpha: float
    shuffle_after: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")


def intermediate_node_count(tree: TreeNode) -> int:
    """Number of non-root nodes with more than one child."""
    return sum(1 for _, node in _intermediate_paths(tree))


def _intermediate_paths(tree: TreeNode) -> list[tuple[tuple[int, ...], TreeNode]]:
    # Pre-order; the root (path ()) is excluded by construction.
    found: list[tuple[tuple[int, ...], TreeNode]] = []
    stack = [((i,), c) for i, c in reversed(list(enumerate(tree.children)))]
    while stack:
        path, node = stack.pop()
        if len(node.children) > 1:
            found.append((path, node))
        stack.extend(
            (path + (i,), c) for i, c in reversed(list(enumerate(node.children)))
        )
    # stack order above yields pre-order left-to-right
    return found


def remove_composition(
    tree: TreeNode,
    spec: AblationSpec,
    sentence_index: int = 0,
    *,
    rng: Rng | None = None,
) -> TreeNode:
    """Remove ``round(alpha * K)`` of the K intermediate nodes.

    Selection is uniform without replacement and decided against the
    original tree's intermediate-node set before any splice is applied, so
    the removal count is exact even though splicing changes child counts.
    Each removed node's children take its place in its parent's child
    list, preserving order; with ``shuffle_after`` the spliced tree is then
    constituent-shuffled on the same stream. ``round`` is half-up, giving
    zero variance at alpha 0 and 1.
    """
    tree = ensure_origins(tree)
    if rng is None:
        rng = SeedScheme(spec.seed, sentence_index).stream()

    candidates = _intermediate_paths(tree)
    k = len(candidates)
    n_remove = math.floor(spec.alpha * k + 0.5)
    if n_remove > 0:  # implies the root has children
        order = list(range(k))
        rng.shuffle(order)
        selected = {candidates[i][0] for i in order[:n_remove]}
        kids: tuple[TreeNode, ...] = ()
        for i, child in enumerate(tree.children):
            kids += _splice(child, (i,), selected)
        tree = TreeNode(tree.label, kids)
    if spec.shuffle_after:
        tree = constituent_shuffle(tree, rng=rng)
    return tree


def _splice(node: TreeNode, path: tuple[int, ...], selected: set[tuple[int, ...]]) -> tuple[TreeNode, ...]:
    """Rebuild a subtree, returning what should sit in the parent's child list."""
    if node.is_leaf:
        return (node,)
    kids: tuple[TreeNode, ...] = ()
    for i, child in enumerate(node.children):
        kids += _splice(child, path + (i,), selected)
    if path in selected:
        return kids
    return (TreeNode(node.label, kids),)


def _resolve_rng(seed: SeedScheme | None, rng: Rng | None) -> Rng:
    if rng is not None:
        return rng
    if seed is None:
        raise ValueError("pass either a SeedScheme or an Rng")
    return seed.stream()
