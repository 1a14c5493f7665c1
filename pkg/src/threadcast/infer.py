"""Parameter inference for a new post from its position in the post graph.

Node embeddings are the six Hawkes parameters themselves. Weighted random
walks enumerate co-occurring node pairs; each pair pulls both embeddings
toward each other with a node-specific rate ``(1 - g_u) * r * (1 - k/(K+1))``
that freezes well-fitted nodes and lets the unknown post (g = 0) move
fastest. The unknown node's final embedding is the inferred parameter set.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .cascade import HawkesParams
from .hawkes import PARAM_LOWER, PARAM_UPPER, FitResult
from .postgraph import PostGraph

log = logging.getLogger(__name__)

EMBED_DIM = 6

# Starting point for a post with no history; values typical of fitted
# threads that stay very small.
INITIAL_EMBEDDING = HawkesParams(1.0, 2.0, 0.75, 0.15, 1.5, 0.05)


@dataclass(frozen=True)
class InferConfig:
    d: int = EMBED_DIM
    r_base: float = 1e-4
    epochs: int = 5  # K
    walks_per_node: int = 10  # r
    walk_length: int = 40  # nodes per walk, start included
    window: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.d != EMBED_DIM:
            raise ValueError(f"embedding dimension is fixed at {EMBED_DIM}")
        if self.r_base <= 0:
            raise ValueError("r_base must be positive")
        if min(self.epochs, self.walks_per_node, self.walk_length, self.window) < 1:
            raise ValueError("epochs, walks_per_node, walk_length, window must be >= 1")


@dataclass
class NodeState:
    embedding: np.ndarray  # 6-vector, clamped to the fitter's bounds
    g: float  # goodness in [0, 1]; 0 for the unknown post


@dataclass(frozen=True)
class InferResult:
    params: HawkesParams
    isolated: bool
    n_updates: int


def init_embeddings(g_star: PostGraph, fits: dict[str, FitResult]) -> dict[str, NodeState]:
    """Fitted parameters for training nodes; the small-thread prior for x."""
    if g_star.unknown is None:
        raise ValueError("graph has no unknown post attached")
    state: dict[str, NodeState] = {}
    for pid in g_star.nodes:
        if pid == g_star.unknown:
            state[pid] = NodeState(INITIAL_EMBEDDING.as_vector(), 0.0)
        else:
            fr = g_star.nodes[pid].fit or fits.get(pid)
            if fr is None:
                raise ValueError(f"training node {pid!r} has no fit result")
            state[pid] = NodeState(fr.params.as_vector(), fr.g)
    return state


def learning_rate(g_u: float, k: int, total_epochs: int, r_base: float) -> float:
    """Node-specific rate: well-fitted nodes and late epochs move less."""
    return (1.0 - g_u) * r_base * (1.0 - k / (total_epochs + 1.0))


def generate_walks(g_star: PostGraph, cfg: InferConfig, rng=None) -> list[list[str]]:
    """Seeded weighted walks, ``walks_per_node`` from every node.

    Transition probability is proportional to edge weight. Isolated nodes
    yield single-node walks.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    order, indptr, indices, cumw = g_star.to_csr()
    starts = np.repeat(np.arange(len(order), dtype=np.int64), cfg.walks_per_node)
    uniforms = rng.random((len(starts), cfg.walk_length - 1)) if cfg.walk_length > 1 else np.zeros((len(starts), 0))
    walks = _kernels.random_walks(indptr, indices, cumw, starts, uniforms, cfg.walk_length)
    return [[order[i] for i in row if i >= 0] for row in walks]


def run_inference(
    g_star: PostGraph,
    fits: dict[str, FitResult],
    cfg: InferConfig = InferConfig(),
    state: dict[str, NodeState] | None = None,
) -> InferResult:
    """Run the walk-update epochs and read off the unknown post's embedding.

    Deterministic for a fixed (graph, config, seed). Walks are regenerated
    each epoch from the same seeded stream. An isolated unknown node cannot
    co-occur with anything and keeps its initial embedding.
    """
    if g_star.unknown is None:
        raise ValueError("graph has no unknown post attached")
    if cfg.walks_per_node > g_star.top_n:
        raise ValueError(
            f"walks_per_node={cfg.walks_per_node} exceeds the graph's top_n={g_star.top_n}"
        )
    state = init_embeddings(g_star, fits) if state is None else state

    order, indptr, indices, cumw = g_star.to_csr()
    x_idx = order.index(g_star.unknown)
    if indptr[x_idx + 1] == indptr[x_idx]:
        log.warning("unknown post %s is isolated; keeping initial embedding", g_star.unknown)
        return InferResult(
            params=HawkesParams.from_vector(state[g_star.unknown].embedding),
            isolated=True,
            n_updates=0,
        )

    lower = np.array(PARAM_LOWER)
    upper = np.array(PARAM_UPPER)
    emb = np.ascontiguousarray([state[pid].embedding for pid in order], dtype=np.float64)
    np.clip(emb, lower, upper, out=emb)
    goodness = np.array([state[pid].g for pid in order])
    starts = np.repeat(np.arange(len(order), dtype=np.int64), cfg.walks_per_node)

    rng = np.random.default_rng(cfg.seed)
    n_updates = 0
    for k in range(1, cfg.epochs + 1):
        rates = (1.0 - goodness) * cfg.r_base * (1.0 - k / (cfg.epochs + 1.0))
        if cfg.walk_length > 1:
            uniforms = rng.random((len(starts), cfg.walk_length - 1))
        else:
            uniforms = np.zeros((len(starts), 0))
        walks = _kernels.random_walks(indptr, indices, cumw, starts, uniforms, cfg.walk_length)
        n_updates += _kernels.attraction_updates(walks, emb, rates, cfg.window, lower, upper)

    return InferResult(
        params=HawkesParams.from_vector(emb[x_idx]),
        isolated=False,
        n_updates=int(n_updates),
    )
