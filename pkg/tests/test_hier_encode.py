"""Rank-weighted pooling and the frame->scene->video / word->sentence->document
rollup. The pooling identity worth guarding: uniform weights reduce exactly to
the arithmetic mean, whatever the input order, because each dimension is sorted
before weighting."""

import numpy as np
import pytest

import coverline as cl
from coverline.errors import EmptyInputError


def test_uniform_pooling_is_the_mean():
    rng = np.random.default_rng(21)
    vectors = rng.standard_normal((7, 5))
    pooled = cl.gpo_pool(vectors, cl.PoolParams())
    np.testing.assert_allclose(pooled, vectors.mean(axis=0), rtol=0, atol=1e-12)


def test_pooling_sorts_each_dimension_before_weighting():
    vectors = np.array([[1.0, 3.0], [2.0, 1.0]])
    pooled = cl.gpo_pool(vectors, cl.PoolParams(weights=np.array([0.75, 0.25])))
    # per-dimension descending order: [2,1] and [3,1]
    np.testing.assert_allclose(pooled, [0.75 * 2 + 0.25 * 1, 0.75 * 3 + 0.25 * 1])


def test_pooling_is_permutation_invariant():
    rng = np.random.default_rng(22)
    vectors = rng.standard_normal((6, 4))
    params = cl.PoolParams(weights=rng.random(6))
    base = cl.gpo_pool(vectors, params)
    np.testing.assert_array_equal(cl.gpo_pool(vectors[::-1], params), base)


def test_single_vector_pools_to_itself():
    v = np.array([[2.0, -1.0, 0.5]])
    np.testing.assert_array_equal(cl.gpo_pool(v, cl.PoolParams()), v[0])


def test_weight_resampling_preserves_total_mass():
    params = cl.PoolParams(weights=np.array([0.6, 0.3, 0.1]))
    for k in (1, 2, 3, 5, 9):
        resampled = params.for_length(k)
        assert resampled.shape == (k,)
        assert abs(resampled.sum() - 1.0) <= 1e-12


def test_uniform_params_resample_to_uniform():
    np.testing.assert_allclose(cl.PoolParams().for_length(4), np.full(4, 0.25))


def test_pooling_rejects_empty_input():
    with pytest.raises(EmptyInputError):
        cl.gpo_pool(np.zeros((0, 3)), cl.PoolParams())


def _uniform_pools():
    return {key: cl.PoolParams() for key in ("scene", "video", "sentence", "document")}


def test_encode_video_shapes_and_mean_identity():
    rng = np.random.default_rng(23)
    frame_embs = rng.standard_normal((5, 6))
    scenes = [cl.SceneSpan(1, 2), cl.SceneSpan(3, 5)]
    scene_embs, video_emb = cl.encode_video(frame_embs, scenes,
                                            cl.PoolParams(), cl.PoolParams())
    assert scene_embs.shape == (2, 6)
    np.testing.assert_allclose(scene_embs[0], frame_embs[:2].mean(axis=0), rtol=0, atol=1e-12)
    np.testing.assert_allclose(scene_embs[1], frame_embs[2:].mean(axis=0), rtol=0, atol=1e-12)
    np.testing.assert_allclose(video_emb, scene_embs.mean(axis=0), rtol=0, atol=1e-12)


def test_encode_document_shapes():
    rng = np.random.default_rng(24)
    word_embs = rng.standard_normal((4, 3))
    sents = [cl.SentenceSpan(1, 1), cl.SentenceSpan(2, 4)]
    sent_embs, doc_emb = cl.encode_document(word_embs, sents,
                                            cl.PoolParams(), cl.PoolParams())
    np.testing.assert_array_equal(sent_embs[0], word_embs[0])
    np.testing.assert_allclose(sent_embs[1], word_embs[1:].mean(axis=0), rtol=0, atol=1e-12)
    assert doc_emb.shape == (3,)


def test_encode_pair_builds_both_hierarchies():
    rng = np.random.default_rng(25)
    frame_embs = rng.standard_normal((3, 4))
    word_embs = rng.standard_normal((5, 4))
    hier = cl.encode_pair(frame_embs, [cl.SceneSpan(1, 3)],
                          word_embs, [cl.SentenceSpan(1, 2), cl.SentenceSpan(3, 5)],
                          _uniform_pools())
    assert hier.scene_embs.shape == (1, 4)
    assert hier.sentence_embs.shape == (2, 4)
    assert hier.video_emb.shape == (4,)
    assert hier.doc_emb.shape == (4,)


def test_encode_rejects_span_overrun():
    frame_embs = np.zeros((2, 3))
    with pytest.raises(ValueError):
        cl.encode_video(frame_embs, [cl.SceneSpan(1, 3)], cl.PoolParams(), cl.PoolParams())
