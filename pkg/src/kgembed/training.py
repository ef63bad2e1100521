"""Margin-loss training with lazy Adam over per-triple sparse gradients.

The epoch loop pairs each train triple with sampled negatives, accumulates
hinge subgradients for violated pairs only, applies a lazy Adam step per
touched parameter slice, and re-projects touched rows onto their constraint
sets. A transf run can first train a transe model and transfer its
embeddings (coefficients start at zero, so the warm start scores identically).

Single-threaded runs are bitwise reproducible for a fixed seed; per-epoch
wall-clock is the one non-deterministic log field.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from . import models
from .dataset import Dataset, build_known_index, compute_relation_stats
from .errors import DataError, NumericError
from .models import EnergyConfig, ModelParams, param_arrays
from .sampling import SAMPLING_MODES, CorruptionPolicy, sample_negative


@dataclass
class TrainConfig:
    margin: float = 1.0
    learning_rate: float = 0.001
    batch_size: int = 4096
    epochs: int = 50
    pretrain_epochs: int = 0
    sampling: str = "uniform"
    filter_negatives: bool = True
    negatives_per_positive: int = 1
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    early_stop: bool = False
    eval_every: int = 10
    patience: int = 3
    debug_checks: bool = False

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("margin must be > 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1 or self.epochs < 1 or self.pretrain_epochs < 0:
            raise ValueError("batch_size/epochs must be >= 1, pretrain_epochs >= 0")
        if self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be >= 1")
        if self.sampling not in SAMPLING_MODES:
            raise ValueError(f"sampling must be one of {SAMPLING_MODES}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EpochLog:
    epoch: int
    mean_loss: float
    violation_rate: float
    seconds: float
    stage: str = "main"

    def line(self) -> str:
        """Tab-separated `epoch mean_loss violation_rate seconds` record."""
        return f"{self.epoch}\t{self.mean_loss:.10g}\t{self.violation_rate:.10g}\t{self.seconds:.3f}"


def margin_loss(e_pos: float, e_neg: float, margin: float) -> float:
    """Hinge max(0, e_pos + margin - e_neg); zero once the margin is met."""
    return max(0.0, e_pos + margin - e_neg)


@dataclass
class _Moments:
    m: np.ndarray
    v: np.ndarray
    step: np.ndarray  # int64 step count per leading-axis slice


class OptimizerState:
    """Lazy Adam accumulators shaped like the model parameters.

    Moments are kept in float64 regardless of parameter dtype. A slice's
    moments and step count advance only when it receives a non-zero gradient.
    """

    def __init__(self, params: ModelParams):
        self.slots: dict[str, _Moments] = {}
        for name, array in param_arrays(params).items():
            self.slots[name] = _Moments(
                m=np.zeros(array.shape, dtype=np.float64),
                v=np.zeros(array.shape, dtype=np.float64),
                step=np.zeros(array.shape[0], dtype=np.int64),
            )


def adam_step(
    state: OptimizerState,
    slice_id: tuple[str, int],
    gradient_block: np.ndarray,
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> np.ndarray:
    """Bias-corrected Adam update for one parameter slice.

    Returns the additive delta for the slice (float64). An all-zero gradient
    is a no-op: moments and the step count stay untouched and the delta is 0.
    """
    name, index = slice_id
    slot = state.slots[name]
    block = np.asarray(gradient_block, dtype=np.float64)
    if block.shape != slot.m[index].shape:
        raise DataError(
            f"gradient shape {block.shape} does not match slice {slice_id} "
            f"shape {slot.m[index].shape}"
        )
    if not np.any(block):
        return np.zeros_like(block)
    slot.step[index] += 1
    step = int(slot.step[index])
    slot.m[index] = beta1 * slot.m[index] + (1.0 - beta1) * block
    slot.v[index] = beta2 * slot.v[index] + (1.0 - beta2) * block * block
    m_hat = slot.m[index] / (1.0 - beta1**step)
    v_hat = slot.v[index] / (1.0 - beta2**step)
    return -learning_rate * m_hat / (np.sqrt(v_hat) + eps)


def _adam_apply_rows(
    state: OptimizerState,
    params_array: np.ndarray,
    name: str,
    indices: np.ndarray,
    blocks: np.ndarray,
    cfg: TrainConfig,
) -> np.ndarray:
    """Vectorized `adam_step` over unique slices of one parameter array.

    Same arithmetic as the per-slice op; returns the indices actually updated.
    """
    live = np.any(blocks.reshape(blocks.shape[0], -1) != 0, axis=1)
    if not np.any(live):
        return indices[:0]
    idx = indices[live]
    g = blocks[live].astype(np.float64, copy=False)
    slot = state.slots[name]
    slot.step[idx] += 1
    steps = slot.step[idx].astype(np.float64)
    expand = (slice(None),) + (None,) * (g.ndim - 1)
    slot.m[idx] = cfg.beta1 * slot.m[idx] + (1.0 - cfg.beta1) * g
    slot.v[idx] = cfg.beta2 * slot.v[idx] + (1.0 - cfg.beta2) * g * g
    m_hat = slot.m[idx] / (1.0 - cfg.beta1**steps)[expand]
    v_hat = slot.v[idx] / (1.0 - cfg.beta2**steps)[expand]
    delta = -cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
    params_array[idx] += delta.astype(params_array.dtype)
    return idx


def mean_hinge_loss(
    params: ModelParams,
    config: EnergyConfig,
    triples: np.ndarray,
    margin: float,
    policy: CorruptionPolicy,
    n_entities: int,
    known_index,
    rng: np.random.Generator,
) -> float:
    """Mean margin loss over the given positives with freshly sampled
    negatives; no parameter updates. Useful for warm-start sanity checks."""
    negatives = np.array(
        [sample_negative(policy, tuple(row), n_entities, known_index, rng) for row in triples],
        dtype=np.int64,
    )
    e_pos = models.batch_energies(params, config, triples).astype(np.float64)
    e_neg = models.batch_energies(params, config, negatives).astype(np.float64)
    return float(np.mean(np.maximum(0.0, e_pos + margin - e_neg)))


def _run_epochs(
    params: ModelParams,
    config: EnergyConfig,
    dataset: Dataset,
    cfg: TrainConfig,
    policy: CorruptionPolicy,
    known_index,
    rng: np.random.Generator,
    n_epochs: int,
    stage: str,
    first_epoch: int,
    logs: list[EpochLog],
    log_stream,
):
    state = OptimizerState(params)
    train = dataset.train
    n_entities = dataset.n_entities
    k = cfg.negatives_per_positive
    stop_requested = False
    best_mrr = -np.inf
    strikes = 0

    for local_epoch in range(n_epochs):
        epoch = first_epoch + local_epoch
        started = time.perf_counter()
        order = rng.permutation(train.shape[0])
        loss_sum = 0.0
        violations = 0
        n_pairs = 0

        for start in range(0, train.shape[0], cfg.batch_size):
            batch = train[order[start : start + cfg.batch_size]]
            positives = np.repeat(batch, k, axis=0) if k > 1 else batch
            negatives = np.array(
                [
                    sample_negative(policy, tuple(row), n_entities, known_index, rng)
                    for row in positives
                ],
                dtype=np.int64,
            )
            e_pos = models.batch_energies(params, config, positives).astype(np.float64)
            e_neg = models.batch_energies(params, config, negatives).astype(np.float64)
            losses = e_pos + cfg.margin - e_neg
            if not np.all(np.isfinite(losses)):
                bad = int(np.flatnonzero(~np.isfinite(losses))[0])
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}, "
                    f"triple {tuple(int(v) for v in positives[bad])}"
                )
            violated = losses > 0.0
            loss_sum += float(np.sum(np.maximum(0.0, losses)))
            violations += int(np.count_nonzero(violated))
            n_pairs += losses.shape[0]

            if np.any(violated):
                pairs = np.concatenate([positives[violated], negatives[violated]])
                weights = np.concatenate(
                    [
                        np.ones(int(np.count_nonzero(violated))),
                        -np.ones(int(np.count_nonzero(violated))),
                    ]
                )
                grads = models.batch_gradients(params, config, pairs, weights)
                arrays = param_arrays(params)
                touched: dict[str, np.ndarray] = {}
                for name, (indices, blocks) in grads.items():
                    updated = _adam_apply_rows(state, arrays[name], name, indices, blocks, cfg)
                    if updated.size and name in ("ent", "rel", "normals"):
                        touched[name] = updated
                if touched:
                    models.enforce_constraints(params, rows=touched)

        models.enforce_constraints(params)
        if cfg.debug_checks:
            _assert_constraints(params)
        log = EpochLog(
            epoch=epoch,
            mean_loss=loss_sum / max(n_pairs, 1),
            violation_rate=violations / max(n_pairs, 1),
            seconds=time.perf_counter() - started,
            stage=stage,
        )
        logs.append(log)
        if log_stream is not None:
            log_stream.write(log.line() + "\n")
            log_stream.flush()

        if (
            cfg.early_stop
            and stage == "main"
            and dataset.valid.size
            and (local_epoch + 1) % cfg.eval_every == 0
        ):
            from .evaluation import evaluate_link_prediction

            report = evaluate_link_prediction(params, config, dataset, known_index)
            mrr = report.filtered.mrr
            if mrr > best_mrr:
                best_mrr = mrr
                strikes = 0
            else:
                strikes += 1
                if strikes >= cfg.patience:
                    stop_requested = True
                    break
    return stop_requested


def _assert_constraints(params: ModelParams) -> None:
    tol = 1e-5
    for name, array in param_arrays(params).items():
        if name in ("ent", "rel"):
            norms = np.sqrt(np.sum(array.astype(np.float64) ** 2, axis=-1))
            if np.any(norms > 1.0 + tol):
                raise AssertionError(f"{name} row norm exceeds 1 after enforcement")
        if name == "normals":
            norms = np.sqrt(np.sum(array.astype(np.float64) ** 2, axis=-1))
            if np.any(np.abs(norms - 1.0) > tol):
                raise AssertionError("hyperplane row norm drifted from 1")


def train(
    dataset: Dataset,
    model_kind: str,
    energy_config: EnergyConfig,
    train_config: TrainConfig,
    log_stream=None,
    initial_params: ModelParams | None = None,
) -> tuple[ModelParams, list[EpochLog]]:
    """Train a model on the dataset's train split.

    For transf with pretrain_epochs > 0, a transe model is trained first and
    its embeddings transferred (epoch numbering continues across stages).
    `initial_params` skips initialization (e.g. a transf model warm-started
    from a transe checkpoint) and excludes pretraining.
    Returns the trained parameters and the per-epoch log records.
    """
    energy_config.validate_for(model_kind)
    if dataset.train.size == 0:
        raise DataError("cannot train on an empty train split")
    if initial_params is not None:
        if models.model_kind(initial_params) != model_kind:
            raise DataError(
                f"initial params are {models.model_kind(initial_params)!r}, expected {model_kind!r}"
            )
        if train_config.pretrain_epochs > 0:
            raise DataError("initial_params and pretrain_epochs are mutually exclusive")
    rng = np.random.default_rng(train_config.seed)
    stats = compute_relation_stats(dataset) if train_config.sampling == "bern" else None
    policy = CorruptionPolicy(
        mode=train_config.sampling,
        stats=stats,
        filter_known=train_config.filter_negatives,
    )
    known_index = build_known_index(dataset) if train_config.filter_negatives else None
    if train_config.early_stop:
        known_index = known_index or build_known_index(dataset)

    logs: list[EpochLog] = []
    next_epoch = 1
    if initial_params is not None:
        params = initial_params
    elif model_kind == "transf" and train_config.pretrain_epochs > 0:
        pretrain_config = EnergyConfig(
            dim_e=energy_config.dim_e,
            dim_r=energy_config.dim_e,
            norm=energy_config.norm,
            normalize_projections=energy_config.normalize_projections,
        )
        transe = models.init_model(
            "transe", pretrain_config, dataset.n_entities, dataset.n_relations, rng
        )
        _run_epochs(
            transe,
            pretrain_config,
            dataset,
            train_config,
            policy,
            known_index,
            rng,
            train_config.pretrain_epochs,
            "pretrain",
            next_epoch,
            logs,
            log_stream,
        )
        next_epoch += train_config.pretrain_epochs
        params = models.init_transf_from_transe(transe, energy_config, rng)
    else:
        params = models.init_model(
            model_kind, energy_config, dataset.n_entities, dataset.n_relations, rng
        )

    _run_epochs(
        params,
        energy_config,
        dataset,
        train_config,
        policy,
        known_index,
        rng,
        train_config.epochs,
        "main",
        next_epoch,
        logs,
        log_stream,
    )
    return params, logs
