"""Engine behaviour on in-memory pairs: context caching, the neural path's
tie rules, beam/greedy/exhaustive agreement, and the capacity guard."""

import numpy as np
import pytest

import coverline as cl
from coverline.errors import CapacityError, ValidationError

from conftest import make_pair


def small_config(**kw):
    kw.setdefault("k", 3)
    kw.setdefault("embed_dim", 16)
    return cl.SummaryConfig(**kw)


def test_build_context_fills_in_toy_embeddings(rng):
    pair = make_pair(rng)
    ctx = cl.build_context(pair, small_config())
    assert ctx.frame_embs.shape == (pair.num_frames, 16)
    assert ctx.word_embs.shape == (pair.num_words, 16)
    for token in pair.words:
        assert token in ctx.token_embs


def test_context_rejects_mismatched_inputs(rng):
    pair = make_pair(rng)
    config = small_config()
    good = cl.build_context(pair, config)
    with pytest.raises(ValidationError):
        cl.PairContext(pair, good.frame_embs[:-1], good.word_embs, good.token_embs, good.lm)
    with pytest.raises(ValidationError):
        cl.PairContext(pair, good.frame_embs, good.word_embs[:-1], good.token_embs, good.lm)
    missing = cl.toy_embed_tokens(pair.words[:-1], 16, 0)
    if pair.words[-1] not in missing:
        with pytest.raises(ValidationError):
            cl.PairContext(pair, good.frame_embs, good.word_embs, missing, good.lm)
    with pytest.raises(ValidationError, match="dimensional"):
        cl.PairContext(pair, good.frame_embs[:, :-1], good.word_embs, good.token_embs, good.lm)


def test_identical_word_multisets_share_one_coverage_value(rng):
    pair = make_pair(rng, text="ash bay ash cedar. bay ash dune elm fir oak pine yew.")
    ctx = cl.build_context(pair, small_config())
    # words 1 and 3 are both "ash": {1,2} and {2,3} carry the same multiset
    assert ctx.doc_loss((1, 2)) == ctx.doc_loss((2, 3))
    assert ctx.tokens_at((2, 3)) == ["bay", "ash"]


def test_breakdown_total_matches_weighted_sum(rng):
    pair = make_pair(rng)
    ctx = cl.build_context(pair, small_config())
    weights = cl.LossWeights(2.0, 0.5, 1.0, 3.0)
    out = ctx.breakdown(2, (1, 3, 5), weights)
    expected = (2.0 * out.document + 0.5 * out.video
                + 1.0 * out.fluency + 3.0 * out.cross_modal)
    assert out.total == expected


def test_neural_engine_zero_params_picks_first_indices(rng):
    pair = make_pair(rng)
    config = small_config(engine="neural", hidden_size=6)
    ctx = cl.build_context(pair, config)
    summary = cl.summarize_neural(ctx, None, config)
    assert summary.frame_index == 1
    assert summary.word_indices == [1, 2, 3]
    assert summary.sentence_text == " ".join(pair.words[:3])


def test_search_invariants_and_determinism(rng):
    pair = make_pair(rng)
    config = small_config(engine="beam", beam_width=4)
    first = cl.summarize_search(cl.build_context(pair, config), config)
    second = cl.summarize_search(cl.build_context(pair, config), config)
    assert first == second
    assert first.word_indices == sorted(set(first.word_indices))
    assert len(first.word_indices) == 3
    assert 1 <= first.frame_index <= pair.num_frames
    assert np.isfinite(first.losses.total)


def test_forced_subset_covers_the_whole_document():
    # document of exactly k orthogonal-embedding tokens: the only subset is
    # the document itself, so its usage distribution matches exactly
    frames = [np.full((4, 4, 3), v, dtype=np.float32) for v in (0.2, 0.8)]
    words, sentences = cl.split_sentences("ash bay cedar.")
    embs = np.stack([cl.toy_embed_frame(f, 3) for f in frames])
    pair = cl.VideoDocPair(id="tiny", frames=frames, scenes=cl.segment_scenes(embs, 0.35),
                           words=words, sentences=sentences, frame_paths=["a", "b"])
    token_embs = cl.EmbeddingMatrix(["ash", "bay", "cedar"], np.eye(3, dtype=np.float32))
    config = small_config(embed_dim=3)
    ctx = cl.build_context(pair, config, token_embs=token_embs)
    summary = cl.exhaustive_oracle(ctx, cl.SummaryConfig(k=3, engine="exhaustive", embed_dim=3))
    assert summary.word_indices == [1, 2, 3]
    assert abs(summary.losses.document) <= 1e-12


def test_wide_beam_recovers_the_oracle(rng):
    pair = make_pair(rng, n_frames=3)
    oracle = cl.exhaustive_oracle(
        cl.build_context(pair, small_config()),
        small_config(k=2, engine="exhaustive"))
    wide = cl.summarize_search(
        cl.build_context(pair, small_config()),
        small_config(k=2, engine="beam", beam_width=len(pair.words) * len(pair.words)))
    assert wide.frame_index == oracle.frame_index
    assert wide.word_indices == oracle.word_indices
    assert wide.losses.total == oracle.losses.total


def test_greedy_is_beam_width_one(rng):
    pair = make_pair(rng)
    ctx = cl.build_context(pair, small_config())
    greedy = cl.summarize_search(ctx, small_config(engine="greedy", beam_width=9))
    narrow = cl.summarize_search(ctx, small_config(engine="beam", beam_width=1))
    assert greedy == narrow


def test_refinement_never_worsens_the_total(rng):
    for _ in range(3):
        pair = make_pair(rng, n_frames=5)
        ctx = cl.build_context(pair, small_config())
        no_refine = cl.summarize_search(ctx, small_config(engine="beam", refine_rounds=0))
        refined = cl.summarize_search(ctx, small_config(engine="beam", refine_rounds=2))
        assert refined.losses.total <= no_refine.losses.total


def test_oracle_capacity_guard():
    words = " ".join(f"w{i}" for i in range(25)) + "."
    frames = [np.full((2, 2, 3), 0.5, dtype=np.float32)]
    toks, sentences = cl.split_sentences(words)
    pair = cl.VideoDocPair(id="big", frames=frames, scenes=[cl.SceneSpan(1, 1)],
                           words=toks, sentences=sentences, frame_paths=["x"])
    ctx = cl.build_context(pair, small_config(k=12, embed_dim=8))
    with pytest.raises(CapacityError, match="evaluations"):
        cl.exhaustive_oracle(ctx, cl.SummaryConfig(k=12, engine="exhaustive", embed_dim=8))


def test_k_bounds_are_enforced(rng):
    pair = make_pair(rng)
    ctx = cl.build_context(pair, small_config())
    over = len(pair.words) + 1
    with pytest.raises(ValueError):
        cl.summarize_search(ctx, cl.SummaryConfig(k=over, embed_dim=16))
    with pytest.raises(ValueError):
        cl.exhaustive_oracle(ctx, cl.SummaryConfig(k=over, engine="exhaustive", embed_dim=16))
    with pytest.raises(ValueError):
        cl.SummaryConfig(k=0)
    with pytest.raises(ValueError):
        cl.SummaryConfig(engine="magic")


def test_dispatcher_routes_by_engine(rng):
    pair = make_pair(rng, n_frames=3)
    ctx = cl.build_context(pair, small_config())
    for engine, direct in (
        ("exhaustive", cl.exhaustive_oracle),
        ("beam", cl.summarize_search),
        ("greedy", cl.summarize_search),
    ):
        config = small_config(k=2, engine=engine)
        assert cl.summarize(ctx, config) == direct(ctx, config)
    neural_config = small_config(k=2, engine="neural", hidden_size=4)
    assert cl.summarize(ctx, neural_config) == cl.summarize_neural(ctx, None, neural_config)
