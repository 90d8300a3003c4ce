"""Paired artificial languages from one shared derivation process.

A grammar holds weighted productions over nonterminals and preterminals,
plus two or more languages, each contributing a lexicon and an order
profile. Sampling draws a single *unordered* derivation (structure and
concept choices); each language then linearizes that same derivation
under its own word order and vocabulary. The two sides are therefore
word-alignable by construction, and any structural transform applied to
one side has an analytic ground truth on the other.

Production right-hand sides are written in a fixed canonical order:
verb before object, adposition before its complement, adjective before
noun. A language whose profile departs from a canonical value swaps the
two children of the matching constituent at linearization time. The swap
logic here is deliberately self-contained — the reorder rules in
``treelab.transform`` replay the same moves and serve as an independent
cross-check, not as a dependency.

Recursive productions are damped geometrically with depth and a hard
depth cap bounds every derivation; sampling retries a bounded number of
times if the cap strands a nonterminal with no all-preterminal expansion.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .rng import Rng, SeedScheme
from .transform import BUILTIN_RULES, ReorderRule, inverse_rule
from .treebank import TreeNode, escape_symbol, internal, leaf, yield_sentence

DEPTH_DECAY = 0.5
MAX_DEPTH = 12
MAX_RETRIES = 20

FEATURE_DOMAINS: dict[str, tuple[str, str]] = {
    "83A": ("VO", "OV"),
    "85A": ("Pre", "Post"),
    "87A": ("AN", "NA"),
}
#: The order in which right-hand sides are written in grammar files.
CANONICAL_VALUES = {"83A": "VO", "85A": "Pre", "87A": "AN"}


class SynthError(ValueError):
    pass


class _DepthExceeded(Exception):
    """Internal: derivation hit the depth cap with no closed expansion."""


@dataclass(frozen=True)
class OrderProfile:
    """One language's setting of the three word-order features."""

    verb_object: str = "VO"  # 83A
    adposition: str = "Pre"  # 85A
    adjective_noun: str = "AN"  # 87A

    def __post_init__(self) -> None:
        for feature, value in self.as_features().items():
            if value not in FEATURE_DOMAINS[feature]:
                raise SynthError(
                    f"feature {feature} must be one of {FEATURE_DOMAINS[feature]}, got {value!r}"
                )

    def as_features(self) -> dict[str, str]:
        return {"83A": self.verb_object, "85A": self.adposition, "87A": self.adjective_noun}

    @classmethod
    def from_features(cls, features: Mapping[str, str]) -> "OrderProfile":
        unknown = set(features) - set(FEATURE_DOMAINS)
        if unknown:
            raise SynthError(f"unknown order feature(s): {sorted(unknown)}")
        merged = dict(CANONICAL_VALUES) | dict(features)
        return cls(merged["83A"], merged["85A"], merged["87A"])


CANONICAL_PROFILE = OrderProfile()


@dataclass(frozen=True)
class Production:
    lhs: str
    rhs: tuple[str, ...]
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not self.rhs:
            raise SynthError(f"production for {self.lhs} has an empty right-hand side")
        if self.weight <= 0:
            raise SynthError(f"production {self.lhs} -> {' '.join(self.rhs)}: weight must be > 0")


@dataclass(frozen=True)
class DerivationNode:
    """Unordered derivation: symbol plus either children or a concept index."""

    symbol: str
    children: tuple["DerivationNode", ...] = ()
    concept: int | None = None


@dataclass(frozen=True)
class SynthGrammar:
    productions: tuple[Production, ...]
    lexicons: Mapping[str, Mapping[str, tuple[str, ...]]]
    profiles: Mapping[str, OrderProfile]
    start: str = "S"

    def __post_init__(self) -> None:
        _validate_grammar(self)

    @property
    def languages(self) -> tuple[str, ...]:
        return tuple(self.lexicons)

    @property
    def nonterminals(self) -> frozenset[str]:
        return frozenset(p.lhs for p in self.productions)

    @property
    def preterminals(self) -> frozenset[str]:
        first = next(iter(self.lexicons.values()))
        return frozenset(first)

    def productions_for(self, symbol: str) -> tuple[Production, ...]:
        return tuple(p for p in self.productions if p.lhs == symbol)

    def recursive_productions(self) -> frozenset[Production]:
        """Productions that can re-derive their own left-hand side."""
        reach: dict[str, set[str]] = {nt: set() for nt in self.nonterminals}
        for p in self.productions:
            reach[p.lhs].update(p.rhs)
        changed = True
        while changed:
            changed = False
            for nt, seen in reach.items():
                extra = set().union(*(reach.get(s, set()) for s in seen)) - seen
                if extra:
                    seen.update(extra)
                    changed = True
        return frozenset(p for p in self.productions if p.lhs in
                         set(p.rhs).union(*(reach.get(s, set()) for s in p.rhs)))


# Right-hand sides that contradict the canonical writing order. A grammar
# author who wants OV order writes the grammar canonically and flips the
# language's profile instead; allowing both ways would make the
# profile-delta oracle ambiguous.
_ANTI_CANONICAL = (
    ("VP", "NP", "VB"),  # object before verb
    ("PP", "NP", "IN"),  # complement before adposition
    ("NP", "NN", "JJ"),  # noun before adjective
)


def _validate_grammar(grammar: SynthGrammar) -> None:
    if not grammar.lexicons:
        raise SynthError("grammar defines no languages")
    if set(grammar.lexicons) != set(grammar.profiles):
        raise SynthError("languages with lexicons and languages with profiles differ")

    nonterminals = grammar.nonterminals
    lexicon_items = list(grammar.lexicons.items())
    ref_lang, ref_lex = lexicon_items[0]
    for lang, lex in lexicon_items[1:]:
        if set(lex) != set(ref_lex):
            raise SynthError(f"languages {ref_lang} and {lang} list different preterminals")
        for pre in ref_lex:
            if len(lex[pre]) != len(ref_lex[pre]):
                raise SynthError(
                    f"preterminal {pre}: {ref_lang} has {len(ref_lex[pre])} words, "
                    f"{lang} has {len(lex[pre])} — concepts cannot align"
                )
    for lang, lex in lexicon_items:
        words = [w for wordlist in lex.values() for w in wordlist]
        if len(words) != len(set(words)):
            dup = next(w for w in words if words.count(w) > 1)
            raise SynthError(f"language {lang}: word {dup!r} appears under two preterminals")
        for pre, wordlist in lex.items():
            if not wordlist:
                raise SynthError(f"language {lang}: preterminal {pre} has no words")
    preterminals = frozenset(ref_lex)

    overlap = nonterminals & preterminals
    if overlap:
        raise SynthError(f"symbol(s) both expanded and lexicalized: {sorted(overlap)}")
    if grammar.start not in nonterminals:
        raise SynthError(f"start symbol {grammar.start} has no productions")
    for p in grammar.productions:
        for sym in p.rhs:
            if sym not in nonterminals and sym not in preterminals:
                raise SynthError(
                    f"production {p.lhs} -> {' '.join(p.rhs)}: symbol {sym!r} is neither "
                    f"expanded by a rule nor lexicalized"
                )
        if len(p.rhs) == 2:
            for parent, first, second in _ANTI_CANONICAL:
                if p.lhs == parent and p.rhs[0].startswith(first) and p.rhs[1].startswith(second):
                    raise SynthError(
                        f"production {p.lhs} -> {' '.join(p.rhs)} is written against the "
                        f"canonical order; set the language's order profile instead"
                    )


@dataclass(frozen=True)
class ParallelCorpus:
    """Aligned tree pairs for two languages drawn from one grammar."""

    pairs: tuple[tuple[TreeNode, TreeNode, tuple[tuple[int, int], ...]], ...]
    seed: int
    languages: tuple[str, str]


def _sample_derivation(grammar: SynthGrammar, rng: Rng, max_depth: int) -> DerivationNode:
    preterminals = grammar.preterminals
    arity = {pre: len(words) for pre, words in next(iter(grammar.lexicons.values())).items()}
    recursive = grammar.recursive_productions()

    def expand(symbol: str, depth: int) -> DerivationNode:
        if symbol in preterminals:
            return DerivationNode(symbol, concept=rng.randbelow(arity[symbol]))
        options = grammar.productions_for(symbol)
        if depth >= max_depth:
            options = tuple(
                p for p in options if all(s in preterminals for s in p.rhs)
            )
            if not options:
                raise _DepthExceeded
            weights = [p.weight for p in options]
        else:
            weights = [
                p.weight * DEPTH_DECAY**depth if p in recursive else p.weight for p in options
            ]
        chosen = options[rng.weighted_index(weights)]
        return DerivationNode(symbol, tuple(expand(s, depth + 1) for s in chosen.rhs))

    return expand(grammar.start, 0)


def _apply_profile(
    parent: str, children: list[TreeNode], profile: OrderProfile
) -> list[TreeNode]:
    """Swap a canonical two-child constituent when the profile departs
    from the canonical value. Mirrors the built-in reorder patterns."""
    if len(children) != 2:
        return children
    first, second = children
    if (
        parent == "VP"
        and profile.verb_object == "OV"
        and first.label.startswith("VB")
        and second.label == "NP"
    ):
        return [second, first]
    if (
        parent == "PP"
        and profile.adposition == "Post"
        and first.label == "IN"
        and second.label == "NP"
    ):
        return [second, first]
    if (
        parent == "NP"
        and profile.adjective_noun == "NA"
        and first.label.startswith("JJ")
        and second.label.startswith("NN")
    ):
        return [second, first]
    return children


def linearize(grammar: SynthGrammar, derivation: DerivationNode, language: str) -> TreeNode:
    """Order and lexicalize one derivation for one language.

    Leaf origins number derivation leaves in canonical pre-order, so the
    same origin on two sides of a pair marks the same concept occurrence.
    """
    if language not in grammar.lexicons:
        raise SynthError(f"unknown language {language!r}; grammar has {list(grammar.languages)}")
    lexicon = grammar.lexicons[language]
    profile = grammar.profiles[language]
    counter = itertools.count()

    def build(node: DerivationNode) -> TreeNode:
        if node.concept is not None:
            word = lexicon[node.symbol][node.concept]
            return leaf(node.symbol, word, origin=next(counter))
        kids = [build(c) for c in node.children]
        kids = _apply_profile(node.symbol, kids, profile)
        return internal(node.symbol, kids)

    return build(derivation)


def _leaf_positions(tree: TreeNode) -> dict[int, int]:
    sentence = yield_sentence(tree)
    return {origin: idx for idx, (_, origin) in enumerate(sentence.tokens)}


def sample_pair(
    grammar: SynthGrammar,
    seed: SeedScheme | None = None,
    *,
    rng: Rng | None = None,
    languages: tuple[str, str] | None = None,
    max_depth: int = MAX_DEPTH,
    max_retries: int = MAX_RETRIES,
) -> tuple[TreeNode, TreeNode, tuple[tuple[int, int], ...]]:
    """Sample one derivation and linearize it for two languages.

    The alignment lists ``(position_in_a, position_in_b)`` for every
    derivation leaf, in canonical pre-order.
    """
    if rng is None:
        rng = (seed or SeedScheme(0)).stream()
    if languages is None:
        if len(grammar.languages) < 2:
            raise SynthError("grammar defines fewer than two languages")
        languages = (grammar.languages[0], grammar.languages[1])
    lang_a, lang_b = languages

    for _ in range(max_retries):
        try:
            derivation = _sample_derivation(grammar, rng, max_depth)
            break
        except _DepthExceeded:
            continue
    else:
        raise SynthError(
            f"no derivation closed within depth {max_depth} after {max_retries} attempts"
        )

    tree_a = linearize(grammar, derivation, lang_a)
    tree_b = linearize(grammar, derivation, lang_b)
    pos_a, pos_b = _leaf_positions(tree_a), _leaf_positions(tree_b)
    alignment = tuple((pos_a[k], pos_b[k]) for k in range(len(pos_a)))
    return tree_a, tree_b, alignment


def generate_corpus(
    grammar: SynthGrammar,
    n: int,
    seed: int,
    languages: tuple[str, str] | None = None,
) -> ParallelCorpus:
    """n independent pairs, one seed stream per sentence index."""
    if n < 1:
        raise SynthError(f"sentence count must be >= 1, got {n}")
    if languages is None:
        if len(grammar.languages) < 2:
            raise SynthError("grammar defines fewer than two languages")
        languages = (grammar.languages[0], grammar.languages[1])
    pairs = tuple(
        sample_pair(grammar, SeedScheme(seed, i), languages=languages) for i in range(n)
    )
    return ParallelCorpus(pairs, seed, languages)


def format_alignment(alignment: Iterable[tuple[int, int]]) -> str:
    return "\t".join(f"{i}-{j}" for i, j in alignment)


def parse_alignment(line: str) -> tuple[tuple[int, int], ...]:
    pairs = []
    for token in line.split():
        left, _, right = token.partition("-")
        try:
            pairs.append((int(left), int(right)))
        except ValueError as exc:
            raise SynthError(f"bad alignment token {token!r}") from exc
    return tuple(pairs)


def write_corpus(corpus: ParallelCorpus, path_a: str, path_b: str, path_align: str) -> None:
    """Both sides as treebank files plus one alignment line per pair."""
    from .treebank import write_treebank

    write_treebank(path_a, (a for a, _, _ in corpus.pairs))
    write_treebank(path_b, (b for _, b, _ in corpus.pairs))
    with open(path_align, "w", encoding="utf-8") as fh:
        for _, _, alignment in corpus.pairs:
            fh.write(format_alignment(alignment))
            fh.write("\n")


def lexicon_map(grammar: SynthGrammar, source: str, target: str) -> dict[str, str]:
    """Word-for-word translation table induced by the shared concepts."""
    for lang in (source, target):
        if lang not in grammar.lexicons:
            raise SynthError(f"unknown language {lang!r}")
    mapping: dict[str, str] = {}
    src_lex, tgt_lex = grammar.lexicons[source], grammar.lexicons[target]
    for pre, words in src_lex.items():
        for concept, word in enumerate(words):
            mapping[word] = tgt_lex[pre][concept]
    return mapping


def translate_tree(grammar: SynthGrammar, tree: TreeNode, source: str, target: str) -> TreeNode:
    """Swap the lexicon, keeping structure, order, and origins."""
    # Tree tokens are stored in escaped form; key the table accordingly.
    mapping = {escape_symbol(w): t for w, t in lexicon_map(grammar, source, target).items()}

    def walk(node: TreeNode) -> TreeNode:
        if node.token is not None:
            if node.token not in mapping:
                raise SynthError(f"word {node.token!r} not in the {source} lexicon")
            return leaf(node.label, mapping[node.token], origin=node.origin)
        return TreeNode(node.label, tuple(walk(c) for c in node.children))

    return walk(tree)


def delta_rules(grammar: SynthGrammar, source: str, target: str) -> tuple[ReorderRule, ...]:
    """Reorder rules that carry the source order to the target order.

    For each differing feature: the built-in rule when the source side is
    canonical, otherwise its inverse (the source already sits on the
    swapped side, so the patterns must be read back-to-front).
    """
    src = grammar.profiles[source].as_features()
    tgt = grammar.profiles[target].as_features()
    rules = []
    for feature in ("83A", "85A", "87A"):
        if src[feature] == tgt[feature]:
            continue
        rule = BUILTIN_RULES[feature]
        rules.append(rule if src[feature] == CANONICAL_VALUES[feature] else inverse_rule(rule))
    return tuple(rules)


# ---------------------------------------------------------------------------
# Grammar file format (see docs/grammar-format.md)


def parse_grammar(text: str, origin: str = "<string>") -> SynthGrammar:
    start = "S"
    productions: list[Production] = []
    profiles: dict[str, OrderProfile] = {}
    lexicons: dict[str, dict[str, tuple[str, ...]]] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        keyword = fields[0]
        where = f"{origin}:{lineno}"
        if keyword == "start":
            if len(fields) != 2:
                raise SynthError(f"{where}: expected 'start SYMBOL'")
            start = fields[1]
        elif keyword == "language":
            if len(fields) < 2:
                raise SynthError(f"{where}: expected 'language TAG [FEATURE=VALUE ...]'")
            tag = fields[1]
            if tag in profiles:
                raise SynthError(f"{where}: language {tag} declared twice")
            features = {}
            for item in fields[2:]:
                feature, eq, value = item.partition("=")
                if not eq:
                    raise SynthError(f"{where}: expected FEATURE=VALUE, got {item!r}")
                features[feature] = value
            try:
                profiles[tag] = OrderProfile.from_features(features)
            except SynthError as exc:
                raise SynthError(f"{where}: {exc}") from exc
            lexicons.setdefault(tag, {})
        elif keyword == "rule":
            try:
                arrow = fields.index("->")
            except ValueError:
                raise SynthError(f"{where}: expected 'rule LHS -> RHS... [: WEIGHT]'") from None
            lhs = fields[1:arrow]
            rest = fields[arrow + 1 :]
            weight = 1.0
            if ":" in rest:
                colon = rest.index(":")
                weight_fields = rest[colon + 1 :]
                rest = rest[:colon]
                if len(weight_fields) != 1:
                    raise SynthError(f"{where}: expected a single weight after ':'")
                try:
                    weight = float(weight_fields[0])
                except ValueError:
                    raise SynthError(f"{where}: bad weight {weight_fields[0]!r}") from None
            if len(lhs) != 1 or not rest:
                raise SynthError(f"{where}: expected 'rule LHS -> RHS... [: WEIGHT]'")
            try:
                productions.append(Production(lhs[0], tuple(rest), weight))
            except SynthError as exc:
                raise SynthError(f"{where}: {exc}") from exc
        elif keyword == "lex":
            if len(fields) < 4:
                raise SynthError(f"{where}: expected 'lex LANGUAGE PRETERMINAL WORD...'")
            tag, pre, words = fields[1], fields[2], fields[3:]
            if tag not in lexicons:
                raise SynthError(f"{where}: language {tag} not declared")
            if pre in lexicons[tag]:
                raise SynthError(f"{where}: lexicon for {tag}/{pre} given twice")
            lexicons[tag][pre] = tuple(words)
        else:
            raise SynthError(f"{where}: unknown directive {keyword!r}")

    try:
        return SynthGrammar(tuple(productions), lexicons, profiles, start)
    except SynthError as exc:
        raise SynthError(f"{origin}: {exc}") from exc


def load_grammar(path: str) -> SynthGrammar:
    with open(path, encoding="utf-8") as fh:
        return parse_grammar(fh.read(), origin=path)


#: Two-language demo: same derivation process, opposite settings of all
#: three order features, disjoint vocabularies.
DEMO_GRAMMAR_TEXT = """\
# Demo grammar: two languages, one derivation process. Language alpha is
# verb-object / prepositional / adjective-noun; language beta is the
# mirror image on all three features.
start S
language alpha 83A=VO 85A=Pre 87A=AN
language beta 83A=OV 85A=Post 87A=NA

rule S -> NP VP : 1
rule VP -> VB NP : 3
rule VP -> VB : 1
rule NP -> JJ NN : 2
rule NP -> NN : 2
rule NP -> PRP : 1
rule NP -> NP PP : 1
rule PP -> IN NP : 1

lex alpha PRP i you they
lex alpha VB see read hold take
lex alpha NN paper tree bird stone book
lex alpha JJ red small old new
lex alpha IN on under near

lex beta PRP wo ni tamen
lex beta VB kan du na qu
lex beta NN zhi mu niao shitou shu
lex beta JJ hong xiao jiu xin
lex beta IN shang xia pang
"""


def demo_grammar() -> SynthGrammar:
    return parse_grammar(DEMO_GRAMMAR_TEXT, origin="<demo>")
