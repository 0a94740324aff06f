#!/usr/bin/env python3
"""Generate the frozen oracle fixtures under tests/fixtures/.

Run once from the repository root; the JSON outputs are committed and the
test suite only ever reads them. The transport objectives come from an
independent linear-programming solve (scipy linprog / HiGHS), so the
package's own simplex is never used to produce its expected values.
scipy is a dev-only dependency; nothing under src/ imports it.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from coverline import (
    color_signature,
    cosine_cost,
    euclidean_cost,
    lm_train,
    mean_frame,
    tf_distribution,
    toy_embed_tokens,
)
from coverline.embed import _seeded_rng

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def lp_transport_objective(mu: np.ndarray, nu: np.ndarray, cost: np.ndarray) -> float:
    """Independent oracle: the transport LP solved by scipy's HiGHS."""
    n, m = cost.shape
    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    res = linprog(
        cost.ravel(),
        A_eq=a_eq,
        b_eq=np.concatenate([mu, nu]),
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"LP failed: {res.message}")
    return float(res.fun)


def freeze_ot_cases() -> None:
    rng = np.random.default_rng(20240817)
    cases = []
    for _ in range(50):
        n = int(rng.integers(1, 11))
        m = int(rng.integers(1, 11))
        mu = rng.random(n) + 1e-3
        mu /= mu.sum()
        nu = rng.random(m) + 1e-3
        nu /= nu.sum()
        cost = rng.random((n, m))
        cases.append(
            {
                "mu": mu.tolist(),
                "nu": nu.tolist(),
                "cost": cost.tolist(),
                "objective": lp_transport_objective(mu, nu, cost),
            }
        )
    payload = {"generator_seed": 20240817, "solver": "scipy.optimize.linprog(method='highs')", "cases": cases}
    (FIXTURES / "ot_lp_cases.json").write_text(json.dumps(payload, indent=1) + "\n")
    print(f"ot_lp_cases.json: {len(cases)} instances")


def freeze_coverage_cases() -> None:
    entries = []

    # 4-token document vs 2-token summary under cosine token cost.
    doc = ["ash", "birch", "cedar", "date"]
    summary = ["ash", "cedar"]
    embs_matrix = toy_embed_tokens(doc, dim=12, seed=5)
    vocab = sorted(set(doc))
    index = {tok: i for i, tok in enumerate(vocab)}
    rows = np.stack([embs_matrix.row(tok) for tok in vocab]).astype(np.float64)
    cost = cosine_cost(rows, rows)
    mu = tf_distribution(summary, index)
    nu = tf_distribution(doc, index)
    entries.append(
        {
            "name": "document_4v2",
            "doc_tokens": doc,
            "summary_tokens": summary,
            "embed_dim": 12,
            "embed_seed": 5,
            "mu": mu.tolist(),
            "nu": nu.tolist(),
            "cost": cost.tolist(),
            "objective": lp_transport_objective(mu, nu, cost),
        }
    )

    # Three random frames vs a distinct cover under Euclidean colour cost.
    rng = _seeded_rng("coverage-video-fixture")
    frames = [rng.random((5, 4, 3)) for _ in range(3)]
    cover = rng.random((5, 4, 3))
    w_mean, c_mean = color_signature(mean_frame(frames), clusters=4, seed=0)
    w_cover, c_cover = color_signature(cover, clusters=4, seed=0)
    cost = euclidean_cost(c_cover, c_mean)
    entries.append(
        {
            "name": "video_3frames",
            "frames": [f.tolist() for f in frames],
            "cover": cover.tolist(),
            "clusters": 4,
            "seed": 0,
            "mu": w_cover.tolist(),
            "nu": w_mean.tolist(),
            "mu_points": c_cover.tolist(),
            "nu_points": c_mean.tolist(),
            "cost": cost.tolist(),
            "objective": lp_transport_objective(w_cover, w_mean, cost),
        }
    )
    (FIXTURES / "coverage_lp_cases.json").write_text(json.dumps({"cases": entries}, indent=1) + "\n")
    print("coverage_lp_cases.json: document_4v2 + video_3frames")


def freeze_lm_shuffle() -> None:
    """One-time measurement: verbatim corpus sentences vs their shuffles."""
    pool = (
        "river stone bright morning wind carries dust over quiet valley "
        "green light folds slowly across broken glass while distant birds "
        "gather near warm water under heavy clouds before early rain"
    ).split()
    rng = _seeded_rng("lm-shuffle-fixture")
    sentences = []
    for _ in range(50):
        length = int(rng.integers(5, 9))
        sentences.append([pool[int(i)] for i in rng.integers(0, len(pool), length)])
    lm = lm_train(sentences, order=3, add_k=0.1)
    wins = 0
    for sent in sentences:
        shuffled = list(sent)
        for _ in range(20):
            perm = rng.permutation(len(shuffled))
            candidate = [sent[int(i)] for i in perm]
            if candidate != sent:
                shuffled = candidate
                break
        if lm.score(sent) < lm.score(shuffled):
            wins += 1
    (FIXTURES / "lm_shuffle.json").write_text(
        json.dumps({"trials": 50, "wins": wins, "order": 3, "add_k": 0.1}) + "\n"
    )
    print(f"lm_shuffle.json: {wins}/50 verbatim sentences beat their shuffle")


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    freeze_ot_cases()
    freeze_coverage_cases()
    freeze_lm_shuffle()


if __name__ == "__main__":
    main()
