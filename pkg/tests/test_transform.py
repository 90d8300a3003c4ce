from __future__ import annotations

import collections

import hypothesis.strategies as st
import pytest
from hypothesis import given, settings

from treelab.rng import Rng, SeedScheme
from treelab.transform import (
    BUILTIN_RULES,
    AblationSpec,
    ReorderRule,
    apply_reorder,
    constituent_shuffle,
    intermediate_node_count,
    inverse_rule,
    load_rules,
    remove_composition,
    word_shuffle,
)
from treelab.treebank import (
    TreeNode,
    ensure_origins,
    iter_nodes,
    parse_ptb,
    serialize,
    yield_sentence,
)

from conftest import tree_nodes

NESTED = "(S (NP (PRP I)) (VP (VBD read) (NP (CD two) (NNS papers))))"


def unordered_fingerprint(node: TreeNode):
    """Shape of a tree ignoring child order — what shuffles must preserve."""
    if node.is_leaf:
        return (node.label, node.token)
    return (node.label, tuple(sorted(map(repr, map(unordered_fingerprint, node.children)))))


def token_multiset(tree: TreeNode) -> collections.Counter:
    return collections.Counter(yield_sentence(ensure_origins(tree)).tokens)


class TestReorderRule:
    def test_builtin_patterns(self):
        assert BUILTIN_RULES["83A"].parent_label == "VP"
        assert BUILTIN_RULES["85A"].prefix_match == frozenset()
        assert BUILTIN_RULES["87A"].prefix_match == frozenset({"JJ", "NN"})

    def test_matches_requires_exactly_two_children(self):
        rule = BUILTIN_RULES["83A"]
        assert rule.matches(parse_ptb("(VP (VBD saw) (NP (NN it)))"))
        assert not rule.matches(parse_ptb("(VP (VBD gave) (NP (NN it)) (NP (NN him)))"))
        assert not rule.matches(parse_ptb("(VP (VBD slept))"))

    def test_prefix_vs_exact(self):
        rule = BUILTIN_RULES["83A"]
        assert rule.matches(parse_ptb("(VP (VBZ sees) (NP (NN it)))"))
        assert not rule.matches(parse_ptb("(VP (VBD saw) (NPS (NN it)))"))  # NP is exact
        exact = ReorderRule("x", "VP", "VB", "NP")
        assert not exact.matches(parse_ptb("(VP (VBZ sees) (NP (NN it)))"))

    def test_validation(self):
        with pytest.raises(ValueError):
            ReorderRule("f", "VP", "NP", "NP")
        with pytest.raises(ValueError):
            ReorderRule("f", "V P", "A", "B")
        with pytest.raises(ValueError):
            ReorderRule("", "VP", "A", "B")

    def test_inverse_swaps_patterns(self):
        rule = BUILTIN_RULES["83A"]
        inv = inverse_rule(rule)
        assert (inv.first_child, inv.second_child) == ("NP", "VB")
        assert inv.parent_label == rule.parent_label
        assert inverse_rule(inv) == rule


class TestApplyReorder:
    def test_verb_object_example(self):
        result = apply_reorder(parse_ptb(NESTED), BUILTIN_RULES["83A"])
        sentence = yield_sentence(result)
        assert sentence.text() == "I two papers read"
        assert sentence.origins() == (0, 2, 3, 1)
        assert serialize(result) == "(S (NP (PRP I)) (VP (NP (CD two) (NNS papers)) (VBD read)))"

    def test_adposition_example(self):
        tree = parse_ptb("(S (NP (NN cat)) (PP (IN on) (NP (DT the) (NN mat))))")
        result = apply_reorder(tree, BUILTIN_RULES["85A"])
        assert yield_sentence(result).text() == "cat the mat on"

    def test_adjective_noun_example(self):
        tree = parse_ptb("(NP (JJ red) (NNS apples))")
        result = apply_reorder(tree, BUILTIN_RULES["87A"])
        assert yield_sentence(result).text() == "apples red"

    def test_untouched_without_match(self):
        tree = parse_ptb("(S (NP (DT a) (NN dog)) (VP (VBD ran)))")
        assert apply_reorder(tree, BUILTIN_RULES["83A"]) == tree

    def test_inverse_round_trip_on_canonical_tree(self):
        tree = parse_ptb(NESTED)
        rule = BUILTIN_RULES["83A"]
        once = apply_reorder(tree, rule)
        back = apply_reorder(once, inverse_rule(rule))
        assert back == tree
        assert yield_sentence(back).origins() == (0, 1, 2, 3)

    @given(tree_nodes(), st.sampled_from(sorted(BUILTIN_RULES)))
    def test_idempotent_on_any_tree(self, tree, feature):
        rule = BUILTIN_RULES[feature]
        once = apply_reorder(tree, rule)
        assert apply_reorder(once, rule) == once

    @given(tree_nodes(), st.sampled_from(sorted(BUILTIN_RULES)))
    def test_preserves_tokens_and_node_labels(self, tree, feature):
        result = apply_reorder(tree, BUILTIN_RULES[feature])
        assert token_multiset(result) == token_multiset(tree)
        original_labels = collections.Counter(n.label for n in iter_nodes(tree))
        assert collections.Counter(n.label for n in iter_nodes(result)) == original_labels

    def test_applies_at_every_depth(self):
        tree = parse_ptb(
            "(S (VP (VB try) (NP (NN x))) (SBAR (S (VP (VBZ works) (NP (NN y))))))"
        )
        result = apply_reorder(tree, BUILTIN_RULES["83A"])
        assert yield_sentence(result).text() == "x try y works"


class TestConstituentShuffle:
    def test_deterministic(self):
        tree = parse_ptb(NESTED)
        a = constituent_shuffle(tree, SeedScheme(11, 4))
        b = constituent_shuffle(tree, SeedScheme(11, 4))
        assert a == b

    def test_seed_changes_result(self):
        tree = parse_ptb("(S (A (X x) (Y y) (Z z)) (B (P p) (Q q) (R r)) (C (NN c)))")
        results = {serialize(constituent_shuffle(tree, SeedScheme(0, i))) for i in range(24)}
        assert len(results) > 1

    @given(tree_nodes(), st.integers(0, 2**32))
    def test_preserves_unordered_shape(self, tree, seed):
        shuffled = constituent_shuffle(tree, SeedScheme(seed))
        assert unordered_fingerprint(shuffled) == unordered_fingerprint(tree)
        assert token_multiset(shuffled) == token_multiset(tree)

    def test_unary_chain_fixed_point(self):
        tree = parse_ptb("(S (X (Y (NN deep))))")
        assert constituent_shuffle(tree, SeedScheme(3)) == tree

    def test_include_root_false_keeps_root_order(self):
        tree = parse_ptb("(S (A (NN a)) (B (NN b)) (C (NN c)) (D (NN d)))")
        for i in range(40):
            out = constituent_shuffle(tree, SeedScheme(1, i), include_root=False)
            assert [c.label for c in out.children] == ["A", "B", "C", "D"]

    def test_include_root_default_moves_root_children(self):
        tree = parse_ptb("(S (A (NN a)) (B (NN b)) (C (NN c)) (D (NN d)))")
        orders = {
            tuple(c.label for c in constituent_shuffle(tree, SeedScheme(1, i)).children)
            for i in range(40)
        }
        assert len(orders) > 1

    def test_three_leaf_orders_all_reachable(self):
        tree = parse_ptb("(S (A a) (B b) (C c))")
        seen = collections.Counter(
            yield_sentence(constituent_shuffle(tree, SeedScheme(2, i))).surfaces()
            for i in range(1200)
        )
        assert len(seen) == 6
        for count in seen.values():
            assert count == pytest.approx(200, rel=0.35)


class TestWordShuffle:
    def test_deterministic_and_matches_stream(self):
        sentence = yield_sentence(parse_ptb(NESTED))
        out = word_shuffle(sentence, SeedScheme(9, 2))
        again = word_shuffle(sentence, SeedScheme(9, 2))
        assert out == again
        # Consumes exactly one Fisher-Yates pass of the named stream.
        tokens = list(sentence.tokens)
        SeedScheme(9, 2).stream().shuffle(tokens)
        assert out.tokens == tuple(tokens)

    def test_preserves_token_multiset(self):
        sentence = yield_sentence(parse_ptb(NESTED))
        out = word_shuffle(sentence, SeedScheme(0))
        assert collections.Counter(out.tokens) == collections.Counter(sentence.tokens)

    def test_rejects_empty(self):
        from treelab.treebank import Sentence

        with pytest.raises(ValueError):
            word_shuffle(Sentence(()), SeedScheme(0))

    def test_single_token_fixed(self):
        sentence = yield_sentence(parse_ptb("(S (UH oh))"))
        assert word_shuffle(sentence, SeedScheme(5)) == sentence


class TestRemoveComposition:
    def test_alpha_zero_is_identity(self):
        tree = parse_ptb(NESTED)
        assert remove_composition(tree, AblationSpec(0.0)) == tree

    def test_alpha_one_flattens_example(self):
        result = remove_composition(parse_ptb(NESTED), AblationSpec(1.0))
        assert serialize(result) == "(S (NP (PRP I)) (VBD read) (CD two) (NNS papers))"

    def test_intermediate_node_count(self):
        assert intermediate_node_count(parse_ptb(NESTED)) == 2  # VP and the inner NP
        assert intermediate_node_count(parse_ptb("(S (NN x))")) == 0
        assert intermediate_node_count(parse_ptb("(S (NP (NN a) (NN b)))")) == 1
        # Root multi-child nodes do not count; nested ones do.
        assert intermediate_node_count(parse_ptb("(S (A a) (B b))")) == 0

    def test_round_half_up(self):
        # Three candidates at alpha 0.5 -> remove 2 (1.5 rounds up).
        tree = parse_ptb("(S (A (X x) (Y y)) (B (P p) (Q q)) (C (M m) (N n)))")
        assert intermediate_node_count(tree) == 3
        result = remove_composition(tree, AblationSpec(0.5, seed=4))
        assert intermediate_node_count(result) == 1

    def test_nested_selection_spliced_in_place(self):
        tree = parse_ptb("(S (X (Y (NN a) (NN b)) (NN c)) (NN d))")
        result = remove_composition(tree, AblationSpec(1.0))
        assert serialize(result) == "(S (NN a) (NN b) (NN c) (NN d))"

    def test_position_preserved_on_splice(self):
        tree = parse_ptb("(S (A a) (X (B b) (C c)) (D d))")
        result = remove_composition(tree, AblationSpec(1.0))
        assert serialize(result) == "(S (A a) (B b) (C c) (D d))"

    @given(tree_nodes(), st.floats(0, 1), st.integers(0, 2**32))
    def test_preserves_yield_order_and_tokens(self, tree, alpha, seed):
        result = remove_composition(tree, AblationSpec(alpha, seed=seed))
        assert yield_sentence(result).tokens == yield_sentence(ensure_origins(tree)).tokens

    def test_deterministic(self):
        tree = parse_ptb("(S (A (X x) (Y y)) (B (P p) (Q q)) (C (M m) (N n)))")
        spec = AblationSpec(0.5, seed=77)
        assert remove_composition(tree, spec, 3) == remove_composition(tree, spec, 3)

    def test_shuffle_after_composes_with_stream(self):
        tree = parse_ptb(NESTED)
        spec = AblationSpec(0.5, shuffle_after=True, seed=6)
        combined = remove_composition(tree, spec, 1)
        rng = SeedScheme(6, 1).stream()
        manual = remove_composition(tree, AblationSpec(0.5), rng=rng)
        manual = constituent_shuffle(manual, rng=rng)
        assert combined == manual

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            AblationSpec(-0.1)
        with pytest.raises(ValueError):
            AblationSpec(1.5)


class TestRulesFile:
    def test_parse_rules(self):
        rules = load_rules(
            [
                "# adposition order",
                "",
                "85A PP IN NP",
                "myrule QP CD NN prefix:NN prefix:CD  # trailing comment",
            ]
        )
        assert [r.feature_id for r in rules] == ["85A", "myrule"]
        assert rules[1].prefix_match == frozenset({"NN", "CD"})

    def test_bad_lines_name_line_number(self):
        with pytest.raises(ValueError, match="line 2"):
            load_rules(["85A PP IN NP", "oops PP IN"])
        with pytest.raises(ValueError, match="line 1"):
            load_rules(["85A PP IN NP badmod"])
        with pytest.raises(ValueError, match="line 1"):
            load_rules(["85A PP IN IN"])

    def test_loaded_rule_behaves_like_builtin(self):
        (rule,) = load_rules(["83A VP VB NP prefix:VB"])
        assert rule == BUILTIN_RULES["83A"]
