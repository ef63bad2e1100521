"""Shared test utilities: independent oracles and random instance builders.

The oracles here deliberately avoid the library's fast paths: gradients come
from central finite differences of the scalar energy, and ranks come from a
sort-based evaluator that calls the scalar energy once per candidate.
"""

from __future__ import annotations

import numpy as np

from kgembed.dataset import CATEGORIES
from kgembed.models import (
    EnergyConfig,
    TransEParams,
    TransFParams,
    TransHParams,
    TransRParams,
    energy,
    param_arrays,
)


def random_params(kind, n_entities, n_relations, config, rng, low=-0.5, high=0.5):
    """Float64 parameters with entries uniform in (low, high)."""
    d_e, d_r, s = config.dim_e, config.dim_r, config.n_bases

    def u(*shape):
        return rng.uniform(low, high, shape)

    ent, rel = u(n_entities, d_e), u(n_relations, d_r)
    if kind == "transe":
        return TransEParams(ent, rel)
    if kind == "transh":
        return TransHParams(ent, rel, u(n_relations, d_e))
    if kind == "transr":
        return TransRParams(ent, rel, u(n_relations, d_r, d_e))
    if kind == "transf":
        return TransFParams(
            ent, rel, u(s, d_r, d_e), u(s, d_r, d_e), u(n_relations, s), u(n_relations, s)
        )
    raise ValueError(kind)


def config_for(kind, dim_e=4, dim_r=4, norm="l2", n_bases=3, normalize=True):
    if kind in ("transe", "transh"):
        dim_r = dim_e
    return EnergyConfig(
        dim_e=dim_e,
        dim_r=dim_r,
        norm=norm,
        n_bases=n_bases if kind == "transf" else 0,
        normalize_projections=normalize,
    )


def fd_block(params, config, triple, name, index, step=1e-5):
    """Central finite differences of the energy over one parameter slice."""
    array = getattr(params, name)
    block = array[index]
    out = np.zeros(block.shape, dtype=np.float64)
    it = np.nditer(block, flags=["multi_index"])
    for _ in it:
        idx = (index,) + it.multi_index
        original = array[idx]
        array[idx] = original + step
        e_plus = energy(params, config, triple)
        array[idx] = original - step
        e_minus = energy(params, config, triple)
        array[idx] = original
        out[it.multi_index] = (e_plus - e_minus) / (2.0 * step)
    return out


def block_relative_error(analytic, numeric):
    """Relative error with a small-norm floor: blocks whose true scale is
    below 1e-4 are effectively held to absolute error 1e-8 (finite-difference
    noise at step 1e-5 is ~1e-11, analytic zeros are exact)."""
    scale = max(np.linalg.norm(analytic.ravel()), np.linalg.norm(numeric.ravel()), 1e-4)
    return float(np.linalg.norm((analytic - numeric).ravel()) / scale)


def check_gradient(params, config, triple, step=1e-5):
    """Max relative error between grad_energy blocks and finite differences."""
    from kgembed.models import grad_energy

    grad = grad_energy(params, config, triple)
    worst = 0.0
    for (name, index), block in grad.items():
        numeric = fd_block(params, config, triple, name, index, step=step)
        worst = max(worst, block_relative_error(np.asarray(block, dtype=np.float64), numeric))
    return worst


def brute_force_rank(params, config, triple, side, known_index=None, filtered=False, tie_policy="mean"):
    """Sort-based ranking oracle over scalar per-candidate energies."""
    h, r, t = (int(v) for v in triple)
    target = h if side == "head" else t
    n_entities = params.ent.shape[0]
    candidates = []
    for c in range(n_entities):
        cand = (c, r, t) if side == "head" else (h, r, c)
        if filtered and c != target and cand in known_index:
            continue
        candidates.append((energy(params, config, cand), c))
    candidates.sort(key=lambda pair: pair[0])
    positions = [i for i, (_, c) in enumerate(candidates) if c == target]
    assert len(positions) == 1
    target_energy = candidates[positions[0]][0]
    tied = [i for i, (e, _) in enumerate(candidates) if e == target_energy]
    first, last = tied[0], tied[-1]
    if tie_policy == "optimistic":
        return float(first + 1)
    if tie_policy == "pessimistic":
        return float(last + 1)
    return (first + last) / 2.0 + 1.0


def brute_force_report(params, config, dataset, known_index, stats, tie_policy="mean"):
    """From-scratch EvalReport twin: scalar energies, sorted ranks, direct means."""
    records = {"raw": {"head": [], "tail": []}, "filtered": {"head": [], "tail": []}}
    cats = []
    for row in dataset.test:
        h, r, t = (int(v) for v in row)
        cats.append(stats.categories[r])
        for side in ("head", "tail"):
            records["raw"][side].append(
                brute_force_rank(params, config, (h, r, t), side, tie_policy=tie_policy)
            )
            records["filtered"][side].append(
                brute_force_rank(
                    params, config, (h, r, t), side, known_index, True, tie_policy
                )
            )

    def agg(block):
        ranks = np.array(block["head"] + block["tail"], dtype=np.float64)
        out = {
            "mr": float(np.mean(ranks)),
            "mrr": float(np.mean(1.0 / ranks)),
            "hits": {k: float(np.mean(ranks <= k)) for k in (1, 3, 10)},
        }
        for side_key, side_name in (("head", "hep"), ("tail", "tep")):
            side_ranks = np.array(block[side_key])
            for cat in CATEGORIES:
                member = np.array([c == cat for c in cats])
                cell = side_ranks[member]
                out[f"{side_name}.{cat}"] = (
                    float(np.mean(cell <= 10)) if cell.size else 0.0,
                    int(cell.size),
                )
        return out

    return {"raw": agg(records["raw"]), "filtered": agg(records["filtered"])}


def params_close(a, b, exact=True):
    arrays_a, arrays_b = param_arrays(a), param_arrays(b)
    if arrays_a.keys() != arrays_b.keys():
        return False
    for name in arrays_a:
        if exact:
            if not np.array_equal(arrays_a[name], arrays_b[name]):
                return False
        elif not np.allclose(arrays_a[name], arrays_b[name]):
            return False
    return True
