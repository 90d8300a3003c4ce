from __future__ import annotations

import pytest
from hypothesis import given

from treelab.treebank import (
    Sentence,
    TreebankReader,
    TreeNode,
    TreeParseError,
    ensure_origins,
    escape_symbol,
    internal,
    iter_leaves,
    iter_nodes,
    leaf,
    parse_ptb,
    read_treebank,
    serialize,
    write_treebank,
    yield_sentence,
)

from conftest import tree_nodes

NESTED = "(S (NP (PRP I)) (VP (VBD read) (NP (CD two) (NNS papers))))"


class TestEscape:
    def test_parentheses(self):
        assert escape_symbol("(") == "-LRB-"
        assert escape_symbol(")") == "-RRB-"
        assert escape_symbol("a(b)c") == "a-LRB-b-RRB-c"

    def test_whitespace(self):
        assert escape_symbol("a b") == "a-SPC-b"
        assert escape_symbol("a\tb\nc") == "a-SPC-b-SPC-c"

    def test_plain_text_untouched(self):
        for text in ("word", "-LRB-", "năo", "a-b", ""):
            assert escape_symbol(text) == text

    def test_idempotent(self):
        for text in ("(", "a b", "x(y) z"):
            once = escape_symbol(text)
            assert escape_symbol(once) == once


class TestTreeNode:
    def test_leaf_and_internal(self):
        n = leaf("NN", "stone")
        assert n.is_leaf and n.token == "stone"
        parent = internal("NP", [n])
        assert not parent.is_leaf and parent.children == (n,)

    def test_rejects_empty_label(self):
        with pytest.raises(ValueError):
            TreeNode("", (), "x")

    def test_rejects_token_with_children(self):
        child = leaf("NN", "x")
        with pytest.raises(ValueError):
            TreeNode("NP", (child,), "x")

    def test_rejects_childless_internal(self):
        with pytest.raises(ValueError):
            TreeNode("NP", ())
        with pytest.raises(ValueError):
            internal("NP", [])

    def test_factories_escape(self):
        assert leaf("NN", "(").token == "-LRB-"
        assert internal("N P", [leaf("NN", "x")]).label == "N-SPC-P"

    def test_origin_ignored_by_equality(self):
        assert leaf("NN", "x", origin=0) == leaf("NN", "x", origin=5)
        assert leaf("NN", "x") != leaf("NN", "y")


class TestParse:
    def test_nested_tree(self):
        tree = parse_ptb(NESTED)
        assert tree.label == "S"
        assert [n.token for n in iter_leaves(tree)] == ["I", "read", "two", "papers"]
        assert [n.origin for n in iter_leaves(tree)] == [0, 1, 2, 3]

    def test_single_leaf_sentence(self):
        tree = parse_ptb("(S (UH hello))")
        assert tree.children[0].token == "hello"

    def test_unary_chain_preserved(self):
        tree = parse_ptb("(S (X (Y (Z (NN deep)))))")
        assert serialize(tree) == "(S (X (Y (Z (NN deep)))))"

    def test_extra_whitespace_normalized(self):
        assert serialize(parse_ptb("( S   ( NN\tx ) )")) == "(S (NN x))"

    def test_escaped_atoms_preserved(self):
        tree = parse_ptb("(S (-LRB- -LRB-) (NN x))")
        assert tree.children[0].label == "-LRB-"
        assert tree.children[0].token == "-LRB-"

    @pytest.mark.parametrize(
        "text,fragment,offset",
        [
            ("", "empty input", 0),
            ("   ", "empty input", 3),
            ("x", "expected '('", 0),
            ("(S", "unexpected end of input", 2),
            ("((X y))", "expected node label", 1),
            ("()", "expected node label", 1),
            ("(S (NP (NN x))", "unexpected end of input", 14),
            ("(S x) extra", "trailing content", 6),
            ("(T tok (X y))", "leaf cannot have children", 7),
            ("(X (Y z) w)", "expected ')'", 9),
        ],
    )
    def test_errors_with_offsets(self, text, fragment, offset):
        with pytest.raises(TreeParseError) as err:
            parse_ptb(text)
        assert fragment in str(err.value)
        assert err.value.offset == offset

    def test_offsets_are_utf8_bytes(self):
        # "ǎ" occupies two bytes; the reported offset counts them both.
        with pytest.raises(TreeParseError) as err:
            parse_ptb("(S (X ǎ)")
        assert err.value.offset == 9


@given(tree_nodes())
def test_serialize_parse_round_trip(tree):
    assert parse_ptb(serialize(tree)) == tree


@given(tree_nodes())
def test_serialized_form_is_canonical(tree):
    text = serialize(tree)
    assert "  " not in text
    assert serialize(parse_ptb(text)) == text


def test_iter_nodes_preorder():
    tree = parse_ptb("(S (A (B b) (C c)) (D d))")
    assert [n.label for n in iter_nodes(tree)] == ["S", "A", "B", "C", "D"]


class TestOrigins:
    def test_ensure_assigns_left_to_right(self):
        tree = internal("S", [leaf("A", "x"), internal("B", [leaf("C", "y")])])
        tagged = ensure_origins(tree)
        assert [n.origin for n in iter_leaves(tagged)] == [0, 1]

    def test_ensure_noop_when_present(self):
        tree = parse_ptb(NESTED)
        assert ensure_origins(tree) is tree

    def test_mixed_rejected(self):
        tree = internal("S", [leaf("A", "x", origin=0), leaf("B", "y")])
        with pytest.raises(ValueError, match="mixes"):
            ensure_origins(tree)
        with pytest.raises(ValueError, match="mixes"):
            yield_sentence(tree)

    def test_yield_sentence(self):
        sentence = yield_sentence(parse_ptb(NESTED))
        assert sentence.surfaces() == ("I", "read", "two", "papers")
        assert sentence.origins() == (0, 1, 2, 3)
        assert sentence.text() == "I read two papers"


class TestSentence:
    def test_from_surfaces(self):
        s = Sentence.from_surfaces(["a", "b", "a"])
        assert s.tokens == (("a", 0), ("b", 1), ("a", 2))
        assert len(s) == 3

    def test_rejects_non_permutation(self):
        with pytest.raises(ValueError):
            Sentence((("a", 0), ("b", 0)))
        with pytest.raises(ValueError):
            Sentence((("a", 1), ("b", 2)))

    def test_empty_ok(self):
        assert len(Sentence(())) == 0


class TestReader:
    def test_skips_placeholders_and_counts(self):
        lines = ["(S (NN x))", "", "(())", "  ", "( ( ) )", "(S (NN y))"]
        reader = TreebankReader(lines)
        seen = list(reader)
        assert [lineno for lineno, _ in seen] == [1, 6]
        assert reader.skipped == 2  # "(())" and "( ( ) )"; blanks are silent

    def test_propagates_parse_errors(self):
        with pytest.raises(TreeParseError):
            list(TreebankReader(["(S (NN x))", "(S (NN"]))

    def test_file_round_trip(self, tmp_path):
        trees = [parse_ptb(NESTED), parse_ptb("(S (UH hi))")]
        path = tmp_path / "corpus.trees"
        write_treebank(str(path), trees)
        assert read_treebank(str(path)) == trees
        assert path.read_text().count("\n") == 2
