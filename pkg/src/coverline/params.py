"""Model parameters persisted as a single embedding-matrix file.

All learned quantities — rank-pooling weights, attention projections, GRU
gates, output linear layers — live in one XMEB file under reserved ids:

    gpo.scene  gpo.video  gpo.sentence  gpo.document
    gat.scene  gat.sentence  gat.global
    gru.scene  gru.video  gru.video.global
    gru.sentence  gru.document  gru.document.global
    linear.frame  linear.word

XMEB stores a rectangular matrix, so each parameter tensor is flattened
into a self-describing payload ``[payload_len, dims..., values...]`` and
zero-padded on the right to the widest row. Absent file → deterministic
defaults: uniform pooling, identity/zero attention, all-zero recurrent
and linear weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decode import GruGates, GruParams, StageParams
from .embed import EmbeddingMatrix, read_embeddings, write_embeddings
from .errors import ConfigError
from .fusion import GatParams
from .hier_encode import PoolParams

POOL_IDS = ("gpo.scene", "gpo.video", "gpo.sentence", "gpo.document")
GAT_IDS = ("gat.scene", "gat.sentence", "gat.global")
GRU_IDS = (
    "gru.scene",
    "gru.video",
    "gru.video.global",
    "gru.sentence",
    "gru.document",
    "gru.document.global",
)
LINEAR_IDS = ("linear.frame", "linear.word")
RESERVED_IDS = POOL_IDS + GAT_IDS + GRU_IDS + LINEAR_IDS

# Gate blocks serialised per direction, matching the dataclass field order.
_GATE_FIELDS = ("w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h")


@dataclass(frozen=True)
class ModelParams:
    """Everything the neural path needs, keyed the way the modules expect."""

    pools: dict[str, PoolParams]
    gats: dict[str, GatParams]
    frame_stage: StageParams
    word_stage: StageParams

    @classmethod
    def defaults(cls, embed_dim: int, hidden_size: int = 512) -> "ModelParams":
        return cls(
            pools={key: PoolParams() for key in ("scene", "video", "sentence", "document")},
            gats={key: GatParams() for key in ("scene", "sentence", "global")},
            frame_stage=StageParams.zeros(embed_dim, hidden_size, embed_dim),
            word_stage=StageParams.zeros(embed_dim, hidden_size, embed_dim),
        )


# ---------------------------------------------------------------------------
# per-type payload codecs


def _encode_pool(p: PoolParams) -> np.ndarray:
    if p.weights is None:
        return np.array([0.0])
    w = np.asarray(p.weights, dtype=np.float64)
    return np.concatenate([[float(w.shape[0])], w])


def _decode_pool(payload: np.ndarray, where: str) -> PoolParams:
    k = int(round(payload[0]))
    if k == 0:
        return PoolParams()
    if payload.shape[0] != 1 + k:
        raise ConfigError(f"{where}: expected {k} pooling weights, payload holds {payload.shape[0] - 1}")
    return PoolParams(weights=payload[1 : 1 + k].copy())


def _encode_gat(p: GatParams) -> np.ndarray:
    if p.w is None and p.a is None:
        return np.array([0.0, p.leaky_slope])
    if p.w is None or p.a is None:
        raise ConfigError("attention parameters must supply both the projection and the score vector")
    w = np.asarray(p.w, dtype=np.float64)
    a = np.asarray(p.a, dtype=np.float64)
    d = w.shape[0]
    return np.concatenate([[float(d), p.leaky_slope], w.ravel(), a])


def _decode_gat(payload: np.ndarray, where: str) -> GatParams:
    d = int(round(payload[0]))
    slope = float(payload[1])
    if d == 0:
        return GatParams(leaky_slope=slope)
    need = 2 + d * d + 2 * d
    if payload.shape[0] != need:
        raise ConfigError(f"{where}: attention payload length {payload.shape[0]} does not match dim {d}")
    w = payload[2 : 2 + d * d].reshape(d, d).copy()
    a = payload[2 + d * d :].copy()
    return GatParams(w=w, a=a, leaky_slope=slope)


def _encode_gru(p: GruParams) -> np.ndarray:
    h = p.forward.hidden
    d_in = p.forward.input_dim
    d_g = p.guidance_proj.shape[1]
    parts = [np.array([float(d_in), float(h), float(d_g)])]
    for gates in (p.forward, p.backward):
        for field in _GATE_FIELDS:
            parts.append(np.asarray(getattr(gates, field), dtype=np.float64).ravel())
    parts.append(np.asarray(p.guidance_proj, dtype=np.float64).ravel())
    return np.concatenate(parts)


def _decode_gru(payload: np.ndarray, where: str) -> GruParams:
    d_in, h, d_g = (int(round(v)) for v in payload[:3])
    if min(d_in, h, d_g) < 1:
        raise ConfigError(f"{where}: recurrent dims must be positive, got ({d_in}, {h}, {d_g})")
    sizes = {"w": h * d_in, "u": h * h, "b": h}
    need = 3 + 2 * (3 * sizes["w"] + 3 * sizes["u"] + 3 * sizes["b"]) + h * d_g
    if payload.shape[0] != need:
        raise ConfigError(f"{where}: recurrent payload length {payload.shape[0]}, expected {need}")
    offset = 3

    def take(rows: int, cols: int | None) -> np.ndarray:
        nonlocal offset
        count = rows * (cols or 1)
        block = payload[offset : offset + count].copy()
        offset += count
        return block.reshape(rows, cols) if cols else block

    directions = []
    for _ in range(2):
        fields = {}
        for field in _GATE_FIELDS:
            if field.startswith("w"):
                fields[field] = take(h, d_in)
            elif field.startswith("u"):
                fields[field] = take(h, h)
            else:
                fields[field] = take(h, None)
        directions.append(GruGates(**fields))
    proj = take(h, d_g)
    return GruParams(forward=directions[0], backward=directions[1], guidance_proj=proj)


def _encode_linear(w: np.ndarray, b: float) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    return np.concatenate([[float(w.shape[0])], w, [b]])


def _decode_linear(payload: np.ndarray, where: str) -> tuple[np.ndarray, float]:
    d = int(round(payload[0]))
    if payload.shape[0] != d + 2:
        raise ConfigError(f"{where}: linear payload length {payload.shape[0]} does not match dim {d}")
    return payload[1 : 1 + d].copy(), float(payload[1 + d])


# ---------------------------------------------------------------------------
# whole-file load/save


def save_params(params: ModelParams, path) -> None:
    """Serialise a full parameter set under the reserved ids."""
    payloads: dict[str, np.ndarray] = {}
    for key in ("scene", "video", "sentence", "document"):
        payloads[f"gpo.{key}"] = _encode_pool(params.pools[key])
    for key in ("scene", "sentence", "global"):
        payloads[f"gat.{key}"] = _encode_gat(params.gats[key])
    payloads["gru.scene"] = _encode_gru(params.frame_stage.scene)
    payloads["gru.video"] = _encode_gru(params.frame_stage.sequence)
    payloads["gru.video.global"] = _encode_gru(params.frame_stage.global_)
    payloads["gru.sentence"] = _encode_gru(params.word_stage.scene)
    payloads["gru.document"] = _encode_gru(params.word_stage.sequence)
    payloads["gru.document.global"] = _encode_gru(params.word_stage.global_)
    payloads["linear.frame"] = _encode_linear(params.frame_stage.linear_w, params.frame_stage.linear_b)
    payloads["linear.word"] = _encode_linear(params.word_stage.linear_w, params.word_stage.linear_b)

    width = 1 + max(p.shape[0] for p in payloads.values())
    data = np.zeros((len(RESERVED_IDS), width), dtype=np.float32)
    for row, name in enumerate(RESERVED_IDS):
        payload = payloads[name]
        data[row, 0] = payload.shape[0]
        data[row, 1 : 1 + payload.shape[0]] = payload
    write_embeddings(EmbeddingMatrix(ids=list(RESERVED_IDS), data=data), path)


def _payload(matrix: EmbeddingMatrix, name: str) -> np.ndarray:
    if name not in matrix:
        raise ConfigError(f"parameter file is missing reserved id {name!r}")
    row = matrix.row(name).astype(np.float64)
    length = int(round(row[0]))
    if length < 1 or length > row.shape[0] - 1:
        raise ConfigError(f"{name}: corrupt payload length {length}")
    return row[1 : 1 + length]


def load_params(path) -> ModelParams:
    """Read a parameter file; every reserved id must be present."""
    matrix = read_embeddings(path)
    pools = {key: _decode_pool(_payload(matrix, f"gpo.{key}"), f"gpo.{key}") for key in ("scene", "video", "sentence", "document")}
    gats = {key: _decode_gat(_payload(matrix, f"gat.{key}"), f"gat.{key}") for key in ("scene", "sentence", "global")}

    def stage(scene_id: str, seq_id: str, global_id: str, linear_id: str) -> StageParams:
        scene = _decode_gru(_payload(matrix, scene_id), scene_id)
        seq = _decode_gru(_payload(matrix, seq_id), seq_id)
        glob = _decode_gru(_payload(matrix, global_id), global_id)
        lin_w, lin_b = _decode_linear(_payload(matrix, linear_id), linear_id)
        if glob.forward.input_dim != 2 * seq.forward.hidden:
            raise ConfigError(
                f"{global_id}: input dim {glob.forward.input_dim} should be twice "
                f"{seq_id}'s hidden size {seq.forward.hidden}"
            )
        if lin_w.shape[0] != 2 * glob.forward.hidden:
            raise ConfigError(
                f"{linear_id}: dim {lin_w.shape[0]} should be twice {global_id}'s hidden size {glob.forward.hidden}"
            )
        return StageParams(scene=scene, sequence=seq, global_=glob, linear_w=lin_w, linear_b=lin_b)

    return ModelParams(
        pools=pools,
        gats=gats,
        frame_stage=stage("gru.scene", "gru.video", "gru.video.global", "linear.frame"),
        word_stage=stage("gru.sentence", "gru.document", "gru.document.global", "linear.word"),
    )


def resolve_params(path, embed_dim: int, hidden_size: int = 512) -> ModelParams:
    """Load from ``path`` when given, otherwise build the zero defaults."""
    if path is None:
        return ModelParams.defaults(embed_dim, hidden_size)
    return load_params(path)
