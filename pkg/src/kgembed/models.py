"""Translation-based embedding models: parameters, energies, gradients, constraints.

Four model kinds share the energy form ||h_proj + r - t_proj|| under an L1 or
L2 norm; they differ in how entities are projected into the relation space:

  transe  identity
  transh  projection onto a relation-specific hyperplane
  transr  one full projection matrix per relation
  transf  per-relation mix of shared basis matrices plus the identity,
          separately for heads and tails

All operations are dtype-agnostic (they follow the parameter arrays' dtype).
The canonical training/checkpoint dtype is float32; gradient-check tests use
float64 parameters.

Bitwise note: every energy path (single triple or all candidate entities at
once) is built from elementwise ops and last-axis reductions only, so the
energy of a candidate computed in a batch is bit-identical to the scalar
`energy` of that candidate triple. Ranking ties therefore behave the same in
both paths. Gradient paths have no such constraint and may use matmul/einsum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields as dataclass_fields

import numpy as np

from .errors import DimensionMismatchError, NumericError

logger = logging.getLogger(__name__)

MODEL_KINDS = ("transe", "transh", "transr", "transf")
NORMS = ("l1", "l2")

# rows per chunk when materializing (chunk, d_r, d_e) projection temporaries
_CHUNK_ROWS = 256


@dataclass
class Counters:
    """Diagnostic counters; incremented, never raised on."""

    zero_projection_fallbacks: int = 0

    def reset(self):
        self.zero_projection_fallbacks = 0


counters = Counters()


@dataclass
class EnergyConfig:
    """Dimensions and energy options shared by all model operations."""

    dim_e: int
    dim_r: int
    norm: str = "l2"
    n_bases: int = 0
    normalize_projections: bool = True

    def __post_init__(self):
        if self.dim_e < 1 or self.dim_r < 1:
            raise DimensionMismatchError("embedding dimensions must be >= 1")
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {self.norm!r}")

    def validate_for(self, kind: str) -> None:
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
        if kind in ("transe", "transh") and self.dim_r != self.dim_e:
            raise DimensionMismatchError(f"{kind} requires dim_r == dim_e")
        if kind == "transf" and self.n_bases < 1:
            raise DimensionMismatchError("transf requires n_bases >= 1")


@dataclass
class TransEParams:
    ent: np.ndarray  # (n_entities, dim_e)
    rel: np.ndarray  # (n_relations, dim_e)


@dataclass
class TransHParams:
    ent: np.ndarray
    rel: np.ndarray
    normals: np.ndarray  # (n_relations, dim_e) hyperplane normal per relation


@dataclass
class TransRParams:
    ent: np.ndarray
    rel: np.ndarray  # (n_relations, dim_r)
    proj: np.ndarray  # (n_relations, dim_r, dim_e)


@dataclass
class TransFParams:
    ent: np.ndarray
    rel: np.ndarray
    head_bases: np.ndarray  # (n_bases, dim_r, dim_e) shared head projection bases
    tail_bases: np.ndarray  # (n_bases, dim_r, dim_e)
    head_coef: np.ndarray  # (n_relations, n_bases) per-relation mixing weights
    tail_coef: np.ndarray  # (n_relations, n_bases)


ModelParams = TransEParams | TransHParams | TransRParams | TransFParams

_KIND_BY_TYPE = {
    TransEParams: "transe",
    TransHParams: "transh",
    TransRParams: "transr",
    TransFParams: "transf",
}
_TYPE_BY_KIND = {kind: typ for typ, kind in _KIND_BY_TYPE.items()}


def model_kind(params: ModelParams) -> str:
    return _KIND_BY_TYPE[type(params)]


def param_arrays(params: ModelParams) -> dict[str, np.ndarray]:
    """Named parameter arrays in declared (checkpoint) order."""
    return {f.name: getattr(params, f.name) for f in dataclass_fields(params)}


def params_from_arrays(kind: str, arrays: dict[str, np.ndarray]) -> ModelParams:
    typ = _TYPE_BY_KIND[kind]
    expected = [f.name for f in dataclass_fields(typ)]
    if list(arrays.keys()) != expected:
        raise DimensionMismatchError(
            f"{kind} expects arrays {expected}, got {list(arrays.keys())}"
        )
    return typ(**arrays)


class SparseGradient:
    """Per-triple gradient as (slice id -> dense block) with accumulation.

    Slice ids are (array_name, row_index); for basis tensors the index is the
    basis number, for 'proj' the relation id. Contributions to the same slice
    (e.g. head == tail) are summed.
    """

    def __init__(self):
        self._blocks: dict[tuple[str, int], np.ndarray] = {}

    def add(self, name: str, index: int, block: np.ndarray) -> None:
        key = (name, int(index))
        if key in self._blocks:
            self._blocks[key] = self._blocks[key] + block
        else:
            self._blocks[key] = np.array(block, copy=True)

    def get(self, name: str, index: int) -> np.ndarray:
        return self._blocks[(name, int(index))]

    def items(self):
        return self._blocks.items()

    def __len__(self) -> int:
        return len(self._blocks)

    def __contains__(self, key) -> bool:
        return (key[0], int(key[1])) in self._blocks


# ---------------------------------------------------------------------------
# low-level math helpers (energy paths: elementwise + last-axis reductions only)
# ---------------------------------------------------------------------------


def _sum_last(x: np.ndarray) -> np.ndarray:
    return np.add.reduce(x, axis=-1)


def _norm_value(p: np.ndarray, norm: str) -> np.ndarray:
    if norm == "l1":
        return _sum_last(np.abs(p))
    return np.sqrt(_sum_last(p * p))


def _norm_grad(p: np.ndarray, norm: str) -> np.ndarray:
    """Gradient of ||p|| w.r.t. p; the L1 subgradient at 0 is 0, as is the
    L2 gradient at the origin."""
    if norm == "l1":
        return np.sign(p)
    value = np.sqrt(_sum_last(p * p))
    safe = np.where(value == 0.0, 1.0, value)
    out = p / safe[..., None]
    if np.ndim(value) == 0:
        return out if value != 0.0 else np.zeros_like(p)
    out[value == 0.0] = 0.0
    return out


def _matvec(matrix: np.ndarray, x: np.ndarray) -> np.ndarray:
    """matrix (d_out, d_in) applied to x (..., d_in) -> (..., d_out).

    Uses multiply + last-axis reduce so rows of a batched call match the
    single-vector call bitwise.
    """
    return _sum_last(matrix * x[..., None, :])


def _unit_with_fallback(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rescale rows of x to unit L2 norm; exactly-zero rows pass through.

    Returns (rescaled, zero_mask). Callers bump the fallback counter.
    """
    norms = np.sqrt(_sum_last(x * x))
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    out = x / safe[..., None]
    out = np.where(zero[..., None], x, out)
    return out, zero


def _rect_eye(d_out: int, d_in: int, dtype) -> np.ndarray:
    """Rectangular identity: ones on the main diagonal."""
    eye = np.zeros((d_out, d_in), dtype=dtype)
    np.fill_diagonal(eye, 1)
    return eye


def _rect_apply(x: np.ndarray, d_out: int) -> np.ndarray:
    """Apply the rectangular identity to x (..., d_in) -> (..., d_out)."""
    d_in = x.shape[-1]
    if d_out == d_in:
        return x
    if d_out < d_in:
        return x[..., :d_out]
    pad = [(0, 0)] * (x.ndim - 1) + [(0, d_out - d_in)]
    return np.pad(x, pad)


def transf_projection_matrix(params: TransFParams, relation: int, side: str) -> np.ndarray:
    """Explicit projection matrix for one relation and side: mix of the shared
    bases weighted by the relation's coefficients, plus the identity."""
    bases = params.head_bases if side == "head" else params.tail_bases
    coef = (params.head_coef if side == "head" else params.tail_coef)[relation]
    d_r, d_e = bases.shape[1], bases.shape[2]
    matrix = np.zeros((d_r, d_e), dtype=params.ent.dtype)
    for i in range(bases.shape[0]):
        matrix += coef[i] * bases[i]
    matrix += _rect_eye(d_r, d_e, matrix.dtype)
    return matrix


def _relation_matrix(params: ModelParams, relation: int, side: str) -> np.ndarray:
    if isinstance(params, TransRParams):
        return params.proj[relation]
    return transf_projection_matrix(params, relation, side)


def _check_ids(params: ModelParams, triple) -> tuple[int, int, int]:
    h, r, t = (int(v) for v in triple)
    n_ent = params.ent.shape[0]
    n_rel = params.rel.shape[0]
    if not (0 <= h < n_ent and 0 <= t < n_ent):
        raise IndexError(f"entity id out of range in triple ({h}, {r}, {t}); n_entities={n_ent}")
    if not (0 <= r < n_rel):
        raise IndexError(f"relation id out of range in triple ({h}, {r}, {t}); n_relations={n_rel}")
    return h, r, t


def _project_one(params: ModelParams, relation: int, vec: np.ndarray, side: str) -> np.ndarray:
    """Raw (pre-normalization) projection of one entity vector."""
    if isinstance(params, TransEParams):
        return vec
    if isinstance(params, TransHParams):
        w = params.normals[relation]
        return vec - _sum_last(w * vec) * w
    return _matvec(_relation_matrix(params, relation, side), vec)


def _project_all(params: ModelParams, relation: int, side: str) -> np.ndarray:
    """Raw projections of every entity, row-for-row bitwise equal to
    `_project_one` on each entity vector."""
    ent = params.ent
    if isinstance(params, TransEParams):
        return ent
    if isinstance(params, TransHParams):
        w = params.normals[relation]
        return ent - _sum_last(w * ent)[..., None] * w
    matrix = _relation_matrix(params, relation, side)
    out = np.empty((ent.shape[0], matrix.shape[0]), dtype=ent.dtype)
    for start in range(0, ent.shape[0], _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, ent.shape[0])
        out[start:stop] = _matvec(matrix, ent[start:stop])
    return out


def _maybe_normalize(x: np.ndarray, config: EnergyConfig) -> np.ndarray:
    if not config.normalize_projections:
        return x
    out, zero = _unit_with_fallback(x)
    n_zero = int(np.count_nonzero(zero))
    if n_zero:
        counters.zero_projection_fallbacks += n_zero
    return out


def energy(params: ModelParams, config: EnergyConfig, triple) -> float:
    """Energy ||h_proj + r - t_proj|| of one triple; low means plausible.

    With `normalize_projections` the projected vectors are rescaled to unit
    length before translation; an exactly-zero projection falls back to the
    un-normalized vector and bumps `counters.zero_projection_fallbacks`.
    """
    h, r, t = _check_ids(params, triple)
    h_proj = _maybe_normalize(_project_one(params, r, params.ent[h], "head"), config)
    t_proj = _maybe_normalize(_project_one(params, r, params.ent[t], "tail"), config)
    p = (h_proj + params.rel[r]) - t_proj
    value = float(_norm_value(p, config.norm))
    if not np.isfinite(value):
        raise NumericError(f"non-finite energy for triple ({h}, {r}, {t})")
    return value


def projected_table(params: ModelParams, config: EnergyConfig, relation: int, side: str) -> np.ndarray:
    """Projections of every entity under one relation/side, normalization
    applied. Row c is bitwise what `energy` computes for entity c."""
    return _maybe_normalize(_project_all(params, relation, side), config)


def projected_entity(
    params: ModelParams, config: EnergyConfig, relation: int, entity: int, side: str
) -> np.ndarray:
    return _maybe_normalize(_project_one(params, relation, params.ent[entity], side), config)


def energies_from_table(
    table: np.ndarray, rel_vec: np.ndarray, fixed: np.ndarray, side: str, norm: str
) -> np.ndarray:
    """Candidate energies given a projected-entity table for the varying side
    and the projected vector of the fixed side."""
    if side == "head":
        p = (table + rel_vec) - fixed
    else:
        p = (fixed + rel_vec) - table
    return _norm_value(p, norm)


def candidate_energies(params: ModelParams, config: EnergyConfig, triple, side: str) -> np.ndarray:
    """Energies of the triple with `side` replaced by every entity in turn.

    Row c equals `energy` of the corresponding candidate triple bitwise.
    """
    if side not in ("head", "tail"):
        raise ValueError(f"side must be 'head' or 'tail', got {side!r}")
    h, r, t = _check_ids(params, triple)
    table = projected_table(params, config, r, side)
    fixed = projected_entity(params, config, r, t if side == "head" else h, "tail" if side == "head" else "head")
    values = energies_from_table(table, params.rel[r], fixed, side, config.norm)
    if not np.all(np.isfinite(values)):
        raise NumericError(f"non-finite candidate energy for triple ({h}, {r}, {t})")
    return values


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------


def _norm_backprop(raw: np.ndarray, cotangent: np.ndarray, config: EnergyConfig) -> np.ndarray:
    """Chain a cotangent on the normalized vector back to the raw projection.

    For rows that hit the zero-projection fallback the map is the identity.
    """
    if not config.normalize_projections:
        return cotangent
    norms = np.sqrt(_sum_last(raw * raw))
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    unit = raw / safe[..., None]
    inner = _sum_last(unit * cotangent)
    projected = (cotangent - unit * inner[..., None]) / safe[..., None]
    return np.where(zero[..., None], cotangent, projected)


def grad_energy(params: ModelParams, config: EnergyConfig, triple) -> SparseGradient:
    """Analytic gradient of `energy` w.r.t. every parameter slice the triple reads.

    Slices: entity rows of h and t, the relation row, plus per model the
    hyperplane row (transh), the projection matrix (transr), or the
    coefficient rows and all basis matrices (transf). Uses the L1 subgradient
    sign(0) = 0 and the exact Jacobian of the unit-norm rescaling when
    projection normalization is enabled.
    """
    h, r, t = _check_ids(params, triple)
    h_vec = params.ent[h]
    t_vec = params.ent[t]
    raw_h = _project_one(params, r, h_vec, "head")
    raw_t = _project_one(params, r, t_vec, "tail")
    h_proj = _maybe_normalize(raw_h, config)
    t_proj = _maybe_normalize(raw_t, config)
    p = (h_proj + params.rel[r]) - t_proj
    if not np.all(np.isfinite(p)):
        raise NumericError(f"non-finite energy terms for triple ({h}, {r}, {t})")
    g = _norm_grad(p, config.norm)

    # cotangents on the raw projections
    q_h = _norm_backprop(raw_h, g, config)
    q_t = _norm_backprop(raw_t, -g, config)

    grad = SparseGradient()
    grad.add("rel", r, g)

    if isinstance(params, TransEParams):
        grad.add("ent", h, q_h)
        grad.add("ent", t, q_t)
    elif isinstance(params, TransHParams):
        w = params.normals[r]
        grad.add("ent", h, q_h - _sum_last(w * q_h) * w)
        grad.add("ent", t, q_t - _sum_last(w * q_t) * w)
        d_w = -(
            _sum_last(w * q_h) * h_vec
            + _sum_last(w * h_vec) * q_h
            + _sum_last(w * q_t) * t_vec
            + _sum_last(w * t_vec) * q_t
        )
        grad.add("normals", r, d_w)
    elif isinstance(params, TransRParams):
        matrix = params.proj[r]
        grad.add("ent", h, matrix.T @ q_h)
        grad.add("ent", t, matrix.T @ q_t)
        grad.add("proj", r, np.outer(q_h, h_vec) + np.outer(q_t, t_vec))
    else:
        m_head = transf_projection_matrix(params, r, "head")
        m_tail = transf_projection_matrix(params, r, "tail")
        grad.add("ent", h, m_head.T @ q_h)
        grad.add("ent", t, m_tail.T @ q_t)
        u_h = _sum_last(params.head_bases * h_vec)  # (n_bases, dim_r)
        v_t = _sum_last(params.tail_bases * t_vec)
        grad.add("head_coef", r, u_h @ q_h)
        grad.add("tail_coef", r, v_t @ q_t)
        alpha = params.head_coef[r]
        beta = params.tail_coef[r]
        for i in range(params.head_bases.shape[0]):
            grad.add("head_bases", i, alpha[i] * np.outer(q_h, h_vec))
            grad.add("tail_bases", i, beta[i] * np.outer(q_t, t_vec))
    return grad


# ---------------------------------------------------------------------------
# batched training paths (tolerance-level agreement with the scalar ops)
# ---------------------------------------------------------------------------


def _batch_raw_projections(params, config, triples):
    """Raw head/tail projections for a (B, 3) id array, plus reusable context."""
    h_idx, r_idx, t_idx = triples[:, 0], triples[:, 1], triples[:, 2]
    h_vec = params.ent[h_idx]
    t_vec = params.ent[t_idx]
    ctx = {"h_idx": h_idx, "r_idx": r_idx, "t_idx": t_idx, "h_vec": h_vec, "t_vec": t_vec}
    if isinstance(params, TransEParams):
        raw_h, raw_t = h_vec, t_vec
    elif isinstance(params, TransHParams):
        w = params.normals[r_idx]
        raw_h = h_vec - _sum_last(w * h_vec)[:, None] * w
        raw_t = t_vec - _sum_last(w * t_vec)[:, None] * w
        ctx["w"] = w
    elif isinstance(params, TransRParams):
        matrices = params.proj[r_idx]
        raw_h = np.einsum("bij,bj->bi", matrices, h_vec)
        raw_t = np.einsum("bij,bj->bi", matrices, t_vec)
        ctx["matrices"] = matrices
    else:
        u_h = np.einsum("sij,bj->bsi", params.head_bases, h_vec)  # (B, s, d_r)
        v_t = np.einsum("sij,bj->bsi", params.tail_bases, t_vec)
        alpha = params.head_coef[r_idx]
        beta = params.tail_coef[r_idx]
        raw_h = _rect_apply(h_vec, config.dim_r) + np.einsum("bs,bsi->bi", alpha, u_h)
        raw_t = _rect_apply(t_vec, config.dim_r) + np.einsum("bs,bsi->bi", beta, v_t)
        ctx.update(u_h=u_h, v_t=v_t, alpha=alpha, beta=beta)
    ctx["raw_h"] = raw_h
    ctx["raw_t"] = raw_t
    return ctx


def batch_energies(params: ModelParams, config: EnergyConfig, triples: np.ndarray) -> np.ndarray:
    """Energies of a (B, 3) array of triples. Training fast path; agrees with
    the scalar `energy` to float tolerance (not bitwise)."""
    triples = np.asarray(triples)
    out = np.empty(triples.shape[0], dtype=params.ent.dtype)
    for start in range(0, triples.shape[0], _CHUNK_ROWS):
        chunk = triples[start : start + _CHUNK_ROWS]
        ctx = _batch_raw_projections(params, config, chunk)
        h_proj = _maybe_normalize(ctx["raw_h"], config)
        t_proj = _maybe_normalize(ctx["raw_t"], config)
        p = (h_proj + params.rel[ctx["r_idx"]]) - t_proj
        out[start : start + chunk.shape[0]] = _norm_value(p, config.norm)
    return out


def _accumulate_rows(indices: np.ndarray, rows: np.ndarray):
    """Sum gradient rows that hit the same index; returns (unique, summed)."""
    unique, inverse = np.unique(indices, return_inverse=True)
    acc = np.zeros((unique.shape[0],) + rows.shape[1:], dtype=rows.dtype)
    np.add.at(acc, inverse, rows)
    return unique, acc


def batch_gradients(
    params: ModelParams,
    config: EnergyConfig,
    triples: np.ndarray,
    weights: np.ndarray,
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Weighted sum of per-triple energy gradients, accumulated per slice.

    `weights` multiplies each triple's gradient (+1 for a violated positive,
    -1 for its negative). Returns {array name: (slice indices, gradient
    blocks)}; agrees with summing `grad_energy` calls to float tolerance.
    """
    triples = np.asarray(triples)
    weights = np.asarray(weights)
    pieces: dict[str, list[tuple[np.ndarray, np.ndarray]]] = {}

    def put(name, idx, rows):
        pieces.setdefault(name, []).append((idx, rows))

    for start in range(0, triples.shape[0], _CHUNK_ROWS):
        chunk = triples[start : start + _CHUNK_ROWS]
        w_chunk = weights[start : start + _CHUNK_ROWS]
        ctx = _batch_raw_projections(params, config, chunk)
        h_proj = _maybe_normalize(ctx["raw_h"], config)
        t_proj = _maybe_normalize(ctx["raw_t"], config)
        p = (h_proj + params.rel[ctx["r_idx"]]) - t_proj
        g = _norm_grad(p, config.norm) * w_chunk[:, None]
        q_h = _norm_backprop(ctx["raw_h"], g, config)
        q_t = _norm_backprop(ctx["raw_t"], -g, config)
        h_idx, r_idx, t_idx = ctx["h_idx"], ctx["r_idx"], ctx["t_idx"]
        h_vec, t_vec = ctx["h_vec"], ctx["t_vec"]

        put("rel", r_idx, g)
        if isinstance(params, TransEParams):
            put("ent", h_idx, q_h)
            put("ent", t_idx, q_t)
        elif isinstance(params, TransHParams):
            w = ctx["w"]
            put("ent", h_idx, q_h - _sum_last(w * q_h)[:, None] * w)
            put("ent", t_idx, q_t - _sum_last(w * q_t)[:, None] * w)
            d_w = -(
                _sum_last(w * q_h)[:, None] * h_vec
                + _sum_last(w * h_vec)[:, None] * q_h
                + _sum_last(w * q_t)[:, None] * t_vec
                + _sum_last(w * t_vec)[:, None] * q_t
            )
            put("normals", r_idx, d_w)
        elif isinstance(params, TransRParams):
            matrices = ctx["matrices"]
            put("ent", h_idx, np.einsum("bij,bi->bj", matrices, q_h))
            put("ent", t_idx, np.einsum("bij,bi->bj", matrices, q_t))
            d_m = q_h[:, :, None] * h_vec[:, None, :] + q_t[:, :, None] * t_vec[:, None, :]
            put("proj", r_idx, d_m)
        else:
            alpha, beta = ctx["alpha"], ctx["beta"]
            u_h, v_t = ctx["u_h"], ctx["v_t"]
            d_h = _rect_apply(q_h, config.dim_e) + np.einsum(
                "bs,sij,bi->bj", alpha, params.head_bases, q_h, optimize=True
            )
            d_t = _rect_apply(q_t, config.dim_e) + np.einsum(
                "bs,sij,bi->bj", beta, params.tail_bases, q_t, optimize=True
            )
            put("ent", h_idx, d_h)
            put("ent", t_idx, d_t)
            put("head_coef", r_idx, np.einsum("bsi,bi->bs", u_h, q_h))
            put("tail_coef", r_idx, np.einsum("bsi,bi->bs", v_t, q_t))
            n_bases = params.head_bases.shape[0]
            basis_idx = np.arange(n_bases)
            d_u = np.einsum("bs,bi,bj->sij", alpha, q_h, h_vec, optimize=True)
            d_v = np.einsum("bs,bi,bj->sij", beta, q_t, t_vec, optimize=True)
            put("head_bases", basis_idx, d_u)
            put("tail_bases", basis_idx, d_v)

    out: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for name, parts in pieces.items():
        idx = np.concatenate([part[0] for part in parts])
        rows = np.concatenate([part[1] for part in parts])
        out[name] = _accumulate_rows(idx, rows)
    return out


# ---------------------------------------------------------------------------
# constraints, initialization, parameter counting
# ---------------------------------------------------------------------------

# rows whose norm exceeds 1 by more than this are rescaled; the slack keeps
# the operation bitwise idempotent despite rounding in x / ||x||
_NORM_SLACK = 1e-12


def _shrink_rows(array: np.ndarray, rows: np.ndarray | None) -> None:
    view = array if rows is None else array[rows]
    norms = np.sqrt(_sum_last(view * view))
    over = norms > 1.0 + _NORM_SLACK
    if not np.any(over):
        return
    scale = np.where(over, norms, 1.0)
    view = view / scale[..., None]
    if rows is None:
        array[...] = view
    else:
        array[rows] = view


def enforce_constraints(params: ModelParams, rows: dict[str, np.ndarray] | None = None) -> ModelParams:
    """Project parameters back into their feasible region, in place.

    Entity and relation rows are rescaled to L2 norm <= 1 (only when above);
    transh hyperplane normals are rescaled to exactly unit norm. Projection
    matrices, bases and coefficients are unconstrained. Bitwise idempotent.
    `rows` limits the sweep to the given row indices per array name.
    """
    which = (lambda name: None) if rows is None else (lambda name: rows.get(name))
    if rows is None or "ent" in rows:
        _shrink_rows(params.ent, which("ent"))
    if rows is None or "rel" in rows:
        _shrink_rows(params.rel, which("rel"))
    if isinstance(params, TransHParams) and (rows is None or "normals" in rows):
        idx = which("normals")
        view = params.normals if idx is None else params.normals[idx]
        norms = np.sqrt(_sum_last(view * view))
        if np.any(norms == 0.0):
            raise NumericError("cannot normalize zero-norm hyperplane row")
        off = np.abs(norms - 1.0) > _NORM_SLACK
        if np.any(off):
            scale = np.where(off, norms, 1.0)
            view = view / scale[..., None]
            if idx is None:
                params.normals[...] = view
            else:
                params.normals[idx] = view
    return params


def _unit_rows(array: np.ndarray) -> np.ndarray:
    norms = np.sqrt(_sum_last(array * array))
    return array / norms[..., None]


def init_model(
    kind: str,
    config: EnergyConfig,
    n_entities: int,
    n_relations: int,
    rng: np.random.Generator,
    dtype=np.float32,
) -> ModelParams:
    """Random initial parameters.

    Entity and relation rows are drawn uniform in (-6/sqrt(d), 6/sqrt(d)) and
    rescaled to unit norm. transf bases are uniform in
    (-6/sqrt(dim_e*dim_r), ...) with all coefficients zero, so a fresh transf
    model scores exactly like transe on the same embeddings; transr matrices
    start at the identity for the same reason.
    """
    config.validate_for(kind)
    if n_entities < 1 or n_relations < 1:
        raise DimensionMismatchError("need at least one entity and one relation")
    d_e, d_r = config.dim_e, config.dim_r
    bound_e = 6.0 / np.sqrt(d_e)
    bound_r = 6.0 / np.sqrt(d_r)
    ent = _unit_rows(rng.uniform(-bound_e, bound_e, (n_entities, d_e))).astype(dtype)
    rel = _unit_rows(rng.uniform(-bound_r, bound_r, (n_relations, d_r))).astype(dtype)
    if kind == "transe":
        return TransEParams(ent, rel)
    if kind == "transh":
        normals = _unit_rows(rng.uniform(-bound_e, bound_e, (n_relations, d_e))).astype(dtype)
        return TransHParams(ent, rel, normals)
    if kind == "transr":
        proj = np.broadcast_to(_rect_eye(d_r, d_e, dtype), (n_relations, d_r, d_e)).copy()
        return TransRParams(ent, rel, proj)
    bound_b = 6.0 / np.sqrt(d_e * d_r)
    s = config.n_bases
    head_bases = rng.uniform(-bound_b, bound_b, (s, d_r, d_e)).astype(dtype)
    tail_bases = rng.uniform(-bound_b, bound_b, (s, d_r, d_e)).astype(dtype)
    head_coef = np.zeros((n_relations, s), dtype=dtype)
    tail_coef = np.zeros((n_relations, s), dtype=dtype)
    return TransFParams(ent, rel, head_bases, tail_bases, head_coef, tail_coef)


def init_transf_from_transe(
    transe: TransEParams, config: EnergyConfig, rng: np.random.Generator
) -> TransFParams:
    """Warm-start transf from trained transe embeddings.

    Embeddings are copied bitwise and coefficients start at zero, so energies
    initially coincide with the source model (projection normalization off).
    """
    config.validate_for("transf")
    d_e = transe.ent.shape[1]
    if config.dim_e != d_e:
        raise DimensionMismatchError(
            f"transe embeddings have dim {d_e}, config says dim_e={config.dim_e}"
        )
    if config.dim_r != d_e:
        raise DimensionMismatchError(
            f"transfer requires dim_r == dim_e ({config.dim_r} != {d_e})"
        )
    dtype = transe.ent.dtype
    s = config.n_bases
    bound_b = 6.0 / np.sqrt(config.dim_e * config.dim_r)
    head_bases = rng.uniform(-bound_b, bound_b, (s, config.dim_r, d_e)).astype(dtype)
    tail_bases = rng.uniform(-bound_b, bound_b, (s, config.dim_r, d_e)).astype(dtype)
    n_rel = transe.rel.shape[0]
    return TransFParams(
        ent=transe.ent.copy(),
        rel=transe.rel.copy(),
        head_bases=head_bases,
        tail_bases=tail_bases,
        head_coef=np.zeros((n_rel, s), dtype=dtype),
        tail_coef=np.zeros((n_rel, s), dtype=dtype),
    )


def param_count(kind: str, n_entities: int, n_relations: int, dim_e: int, dim_r: int, n_bases: int = 0) -> int:
    """Closed-form number of scalar parameters per model kind."""
    if min(n_entities, n_relations, dim_e, dim_r) < 1:
        raise ValueError("sizes must be positive")
    if kind == "transe":
        return (n_entities + n_relations) * dim_e
    if kind == "transh":
        return n_entities * dim_e + 2 * n_relations * dim_e
    if kind == "transr":
        return n_entities * dim_e + n_relations * dim_r + n_relations * dim_e * dim_r
    if kind == "transf":
        if n_bases < 1:
            raise ValueError("transf needs n_bases >= 1")
        return n_entities * dim_e + n_relations * (dim_r + 2 * n_bases) + 2 * n_bases * dim_e * dim_r
    raise ValueError(f"unknown model kind {kind!r}")
