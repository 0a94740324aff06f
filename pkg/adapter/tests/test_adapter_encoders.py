"""Tiny-encoder properties: determinism, unit norms, colour alignment,
batch independence, and the clip loader's failure path."""

import numpy as np
import pytest

import coverline_adapter as ca
from coverline_adapter import encoders


def solid(rgb, h=8, w=8):
    return np.tile(np.array(rgb, dtype=np.float64) / 255.0, (h, w, 1))


def test_load_encoder_dispatch_and_unknown_model():
    enc = ca.load_encoder("tiny", dim=16)
    assert isinstance(enc, ca.TinyColorEncoder)
    assert enc.dim == 16
    with pytest.raises(ValueError, match="unknown model"):
        ca.load_encoder("resnet")


def test_tiny_rejects_bad_construction():
    with pytest.raises(ValueError, match="dim"):
        ca.TinyColorEncoder(dim=4)
    with pytest.raises(ValueError, match="temperature"):
        ca.TinyColorEncoder(temperature=0.0)


def test_tiny_outputs_are_unit_norm_and_deterministic():
    enc_a = ca.TinyColorEncoder(dim=20)
    enc_b = ca.TinyColorEncoder(dim=20)
    frames = [solid((204, 31, 26)), solid((41, 64, 199))]
    imgs_a = enc_a.encode_images(frames)
    imgs_b = enc_b.encode_images(frames)
    assert imgs_a.shape == (2, 20)
    np.testing.assert_array_equal(imgs_a, imgs_b)
    np.testing.assert_allclose(np.linalg.norm(imgs_a, axis=1), 1.0, rtol=0, atol=1e-12)

    toks_a = enc_a.encode_tokens(["red", "melody"])
    toks_b = enc_b.encode_tokens(["red", "melody"])
    np.testing.assert_array_equal(toks_a, toks_b)
    np.testing.assert_allclose(np.linalg.norm(toks_a, axis=1), 1.0, rtol=0, atol=1e-12)


def test_tiny_batch_size_does_not_change_results():
    enc = ca.TinyColorEncoder()
    frames = [solid((204, 31, 26)), solid((38, 158, 51)), solid((41, 64, 199)), solid((250, 245, 245))]
    np.testing.assert_array_equal(
        enc.encode_images(frames, batch_size=1), enc.encode_images(frames, batch_size=64)
    )
    tokens = ["red", "green", "blue", "cloud", "storm"]
    np.testing.assert_array_equal(
        enc.encode_tokens(tokens, batch_size=2), enc.encode_tokens(tokens, batch_size=16)
    )


def test_tiny_aligns_images_with_their_colour_words():
    enc = ca.TinyColorEncoder()
    red_img = enc.encode_images([solid((204, 31, 26))])[0]
    blue_img = enc.encode_images([solid((41, 64, 199))])[0]
    red_tok, blue_tok = enc.encode_tokens(["red", "blue"])
    assert red_img @ red_tok > red_img @ blue_tok
    assert blue_img @ blue_tok > blue_img @ red_tok
    # captions inherit the alignment through token averaging
    red_cap, blue_cap = enc.encode_texts(["a red banner waves", "a blue banner waves"])
    assert red_img @ red_cap > red_img @ blue_cap
    assert blue_img @ blue_cap > blue_img @ red_cap


def test_tiny_alias_tokens_share_the_prototype():
    enc = ca.TinyColorEncoder()
    gray, grey = enc.encode_tokens(["gray", "grey"])
    np.testing.assert_array_equal(gray, grey)


def test_tiny_projection_preserves_palette_cosines():
    # orthonormal projection: one-hot palette tokens stay orthogonal
    enc = ca.TinyColorEncoder(dim=32)
    rows = enc.encode_tokens(["red", "blue", "green"])
    gram = rows @ rows.T
    np.testing.assert_allclose(gram, np.eye(3), rtol=0, atol=1e-9)


def test_tiny_input_validation():
    enc = ca.TinyColorEncoder()
    with pytest.raises(ValueError, match="no images"):
        enc.encode_images([])
    with pytest.raises(ValueError, match="no tokens"):
        enc.encode_tokens([])
    with pytest.raises(ValueError, match="no texts"):
        enc.encode_texts([])
    with pytest.raises(ValueError, match="no tokens"):
        enc.encode_texts(["..."])
    with pytest.raises(ValueError, match="shape"):
        enc.encode_images([np.zeros((4, 4))])
    with pytest.raises(ValueError, match="non-finite"):
        enc.encode_images([np.full((2, 2, 3), np.nan)])


def test_clip_reports_missing_runtime(monkeypatch):
    def broken_runtime():
        raise ca.ModelLoadError("clip runtime unavailable (needs torch and transformers): no module")

    monkeypatch.setattr(encoders, "_import_clip_runtime", broken_runtime)
    with pytest.raises(ca.ModelLoadError, match="runtime unavailable"):
        ca.load_encoder("clip")
