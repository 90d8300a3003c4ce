from __future__ import annotations

import numpy as np
import pytest

from treelab.retrieval import (
    POOLED_MAGIC,
    TOKEN_MAGIC,
    EmbeddingMatrix,
    RetrievalError,
    SentenceTokens,
    mean_pool,
    pool_matrix,
    read_embeddings,
    read_pooled_embeddings,
    read_token_embeddings,
    top1_retrieval,
    write_pooled_embeddings,
    write_token_embeddings,
)


def sent(vectors, special) -> SentenceTokens:
    return SentenceTokens(
        np.asarray(vectors, dtype=np.float32), np.asarray(special, dtype=bool)
    )


class TestMeanPool:
    def test_single_vector(self):
        np.testing.assert_allclose(mean_pool([[1.0, 2.0, 3.0]], [False]), [1.0, 2.0, 3.0])

    def test_skips_special_positions(self):
        pooled = mean_pool([[1.0, 0.0], [3.0, 4.0], [5.0, 6.0]], [False, True, False])
        np.testing.assert_allclose(pooled, [3.0, 3.0])

    def test_opposite_vectors_cancel(self):
        pooled = mean_pool([[2.0, -1.0], [-2.0, 1.0]], [False, False])
        np.testing.assert_allclose(pooled, [0.0, 0.0])

    def test_all_special_rejected(self):
        with pytest.raises(RetrievalError, match="nothing to pool"):
            mean_pool([[1.0, 2.0]], [True])

    def test_flag_length_mismatch(self):
        with pytest.raises(RetrievalError, match="2 special flags for 3 token vectors"):
            mean_pool([[1.0], [2.0], [3.0]], [False, True])

    def test_pool_matrix_names_offending_sentence(self):
        emb = EmbeddingMatrix(
            (sent([[1.0, 0.0]], [False]), sent([[2.0, 2.0]], [True])), dim=2
        )
        with pytest.raises(RetrievalError, match="sentence 1: all tokens flagged"):
            pool_matrix(emb)

    def test_pool_matrix_stacks_rows(self):
        emb = EmbeddingMatrix(
            (
                sent([[1.0, 0.0], [3.0, 0.0]], [False, False]),
                sent([[0.0, 5.0]], [False]),
            ),
            dim=2,
        )
        np.testing.assert_allclose(pool_matrix(emb), [[2.0, 0.0], [0.0, 5.0]])

    def test_empty_matrix_pools_to_empty(self):
        assert pool_matrix(EmbeddingMatrix((), dim=3)).shape == (0, 3)


class TestTop1:
    def test_self_retrieval_is_perfect(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(50, 16))
        result = top1_retrieval(x, x)
        assert result.top1_accuracy == 1.0
        assert result.per_query_nearest == tuple(range(50))

    def test_swapped_targets_all_miss(self):
        source = np.array([[1.0, 0.0], [0.0, 1.0]])
        target = np.array([[0.0, 1.0], [1.0, 0.0]])
        result = top1_retrieval(source, target)
        assert result.top1_accuracy == 0.0
        assert result.per_query_nearest == (1, 0)
        assert result.margin == pytest.approx(1.0)

    def test_tie_goes_to_lowest_index(self):
        source = np.array([[1.0, 0.0], [1.0, 0.0]])
        target = np.array([[1.0, 0.0], [1.0, 0.0]])
        result = top1_retrieval(source, target)
        assert result.per_query_nearest == (0, 0)
        assert result.top1_accuracy == 0.5
        assert result.margin == pytest.approx(0.0)

    def test_margin_hand_value(self):
        source = np.array([[1.0, 0.0], [0.0, 1.0]])
        target = np.array([[1.0, 0.0], [1.0, 1.0]])
        result = top1_retrieval(source, target)
        assert result.top1_accuracy == 1.0
        # query 0: 1 - cos45; query 1: cos45 - 0; mean is exactly 1/2.
        assert result.margin == pytest.approx(0.5)

    def test_single_sentence_margin_zero(self):
        result = top1_retrieval(np.array([[3.0, 4.0]]), np.array([[3.0, 4.0]]))
        assert result.top1_accuracy == 1.0
        assert result.margin == 0.0

    def test_scale_invariance(self):
        rng = np.random.default_rng(21)
        x = rng.normal(size=(30, 8))
        y = rng.normal(size=(30, 8))
        base = top1_retrieval(x, y)
        scales = rng.uniform(0.05, 40.0, size=30)
        scaled = top1_retrieval(x * scales[:, None], y * rng.uniform(0.05, 40.0, size=(30, 1)))
        assert scaled.per_query_nearest == base.per_query_nearest

    def test_zero_norm_rows_named(self):
        good = np.array([[1.0, 0.0], [0.0, 1.0]])
        bad = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(RetrievalError, match="zero-norm vector at row 1 of source"):
            top1_retrieval(bad, good)
        with pytest.raises(RetrievalError, match="zero-norm vector at row 1 of target"):
            top1_retrieval(good, bad)

    def test_empty_input_rejected(self):
        empty = np.zeros((0, 4))
        with pytest.raises(RetrievalError, match="no sentences"):
            top1_retrieval(empty, empty)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(RetrievalError, match="does not match"):
            top1_retrieval(np.ones((2, 3)), np.ones((3, 3)))
        with pytest.raises(RetrievalError, match="2-D"):
            top1_retrieval(np.ones(3), np.ones(3))


class TestValidation:
    def test_sentence_tokens_shapes(self):
        with pytest.raises(RetrievalError, match="tokens, dim"):
            SentenceTokens(np.ones(4, dtype=np.float32), np.zeros(4, dtype=bool))
        with pytest.raises(RetrievalError, match="does not match"):
            sent([[1.0, 2.0]], [False, False])

    def test_matrix_dimension_check(self):
        with pytest.raises(RetrievalError, match="sentence 1 has dimension 3"):
            EmbeddingMatrix((sent([[1.0, 2.0]], [False]), sent([[1.0, 2.0, 3.0]], [False])), dim=2)


class TestFiles:
    @pytest.fixture()
    def matrix(self) -> EmbeddingMatrix:
        rng = np.random.default_rng(3)
        sentences = []
        for count in (3, 1, 5):
            vectors = rng.normal(size=(count, 4)).astype(np.float32)
            special = np.zeros(count, dtype=bool)
            if count > 1:
                special[0] = True
            sentences.append(SentenceTokens(vectors, special))
        return EmbeddingMatrix(tuple(sentences), dim=4, layer=9)

    def test_token_round_trip(self, tmp_path, matrix):
        path = tmp_path / "tok.bin"
        write_token_embeddings(str(path), matrix)
        loaded = read_token_embeddings(str(path))
        assert loaded.dim == 4 and loaded.layer == 9
        assert len(loaded) == 3
        for a, b in zip(loaded.sentences, matrix.sentences):
            np.testing.assert_array_equal(a.vectors, b.vectors)
            np.testing.assert_array_equal(a.special, b.special)

    def test_pooled_round_trip(self, tmp_path):
        path = tmp_path / "pool.bin"
        original = np.arange(12, dtype=np.float32).reshape(3, 4) / 7
        write_pooled_embeddings(str(path), original, layer=2)
        loaded, layer = read_pooled_embeddings(str(path))
        assert layer == 2
        np.testing.assert_array_equal(loaded, original.astype(np.float64))

    def test_dispatch_by_magic(self, tmp_path, matrix):
        tok, pool = tmp_path / "a.bin", tmp_path / "b.bin"
        write_token_embeddings(str(tok), matrix)
        pooled = pool_matrix(matrix)
        write_pooled_embeddings(str(pool), pooled, layer=9)
        from_tok, layer_tok = read_embeddings(str(tok))
        from_pool, layer_pool = read_embeddings(str(pool))
        assert layer_tok == layer_pool == 9
        np.testing.assert_allclose(from_tok, pooled)
        np.testing.assert_allclose(from_pool, pooled, rtol=1e-6)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTMAGIC" + b"\0" * 32)
        with pytest.raises(RetrievalError, match="bad magic"):
            read_token_embeddings(str(path))
        with pytest.raises(RetrievalError, match="bad magic"):
            read_pooled_embeddings(str(path))
        with pytest.raises(RetrievalError, match="unrecognized"):
            read_embeddings(str(path))

    def test_truncated_token_file(self, tmp_path, matrix):
        path = tmp_path / "trunc.bin"
        write_token_embeddings(str(path), matrix)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) - 10])
        with pytest.raises(RetrievalError, match="truncated at sentence 2"):
            read_token_embeddings(str(path))

    def test_truncated_pooled_file(self, tmp_path):
        path = tmp_path / "trunc.bin"
        write_pooled_embeddings(str(path), np.ones((2, 3), dtype=np.float32))
        data = path.read_bytes()
        path.write_bytes(data[:-4])
        with pytest.raises(RetrievalError, match="truncated"):
            read_pooled_embeddings(str(path))

    def test_count_exceeding_header_max(self, tmp_path):
        emb = EmbeddingMatrix((sent([[1.0, 2.0]], [False]),), dim=2)
        path = tmp_path / "bad.bin"
        write_token_embeddings(str(path), emb)
        data = bytearray(path.read_bytes())
        # Corrupt the per-sentence count (first uint32 after the 24-byte header).
        data[24:28] = (99).to_bytes(4, "little")
        path.write_bytes(bytes(data))
        with pytest.raises(RetrievalError, match="header says max"):
            read_token_embeddings(str(path))

    def test_empty_corpus_round_trip(self, tmp_path):
        path = tmp_path / "empty.bin"
        write_pooled_embeddings(str(path), np.zeros((0, 5), dtype=np.float32))
        loaded, _ = read_pooled_embeddings(str(path))
        assert loaded.shape == (0, 5)
