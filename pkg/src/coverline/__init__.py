"""Extreme multimodal summarisation: one cover frame, one k-word sentence.

The pipeline ingests video/document pairs, encodes them hierarchically,
fuses the modalities, and picks the summary either by a neural forward
path or by direct minimisation of coverage + fluency + cross-modal
losses built on optimal transport.
"""

from .corpus import (
    LoadOptions,
    Manifest,
    ManifestEntry,
    SceneSpan,
    SentenceSpan,
    VideoDocPair,
    corpus_stats,
    cosine_distance,
    load_image,
    load_pair,
    sample_frame_paths,
    segment_scenes,
    split_sentences,
    tokenize,
)
from .decode import (
    GruGates,
    GruParams,
    StageParams,
    bigru_forward,
    score_frames,
    score_words,
    select_frame,
    select_words,
)
from .embed import (
    EmbeddingMatrix,
    read_embeddings,
    toy_embed_frame,
    toy_embed_token,
    toy_embed_tokens,
    write_embeddings,
)
from .errors import (
    CapacityError,
    ConfigError,
    EmptyInputError,
    FormatError,
    ValidationError,
)
from .fusion import FusedContext, GatParams, fuse_global, fuse_local, fuse_pair, gat_attend
from .hier_encode import (
    HierEncoding,
    PoolParams,
    encode_document,
    encode_pair,
    encode_video,
    gpo_pool,
)
from .metrics import RougeScore, frame_accuracy, iou_concepts, overall, rouge_l, rouge_n
from .objective import (
    LossBreakdown,
    LossWeights,
    NgramLM,
    color_signature,
    coverage_cost,
    cross_modal,
    document_coverage,
    lm_score,
    lm_train,
    mean_frame,
    quartet_loss,
    tf_distribution,
    video_coverage,
)
from .params import ModelParams, RESERVED_IDS, load_params, resolve_params, save_params
from .summarize import (
    ExtremeSummary,
    PairContext,
    SummaryConfig,
    build_context,
    exhaustive_oracle,
    summarize,
    summarize_neural,
    summarize_search,
)
from .transport import (
    SolverConfig,
    TransportPlan,
    as_measure,
    cosine_cost,
    euclidean_cost,
    exact_ot,
    sinkhorn,
    solve_ot,
    wasserstein,
)

__version__ = "0.1.0"
