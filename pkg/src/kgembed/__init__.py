"""Translation-based knowledge graph embedding toolkit.

Models: transe, transh, transr and transf (factorized per-relation
projections over shared bases). Includes dataset loading, corruption-based
negative sampling, margin-loss training with lazy Adam, filtered
link-prediction evaluation, checkpointing and a CLI (`kgembed`).
"""

from .dataset import (
    CATEGORIES,
    Dataset,
    KnownTripleIndex,
    RelationStats,
    Vocabulary,
    build_known_index,
    compute_relation_stats,
    load_dataset,
    make_dataset,
)
from .errors import (
    CheckpointError,
    DataError,
    DimensionMismatchError,
    KgeError,
    NumericError,
    ParseError,
)
from .evaluation import (
    EvalReport,
    evaluate_link_prediction,
    rank_candidates,
    report_to_dict,
    report_to_kv_lines,
)
from .checkpoint import CheckpointMetadata, load_checkpoint, save_checkpoint
from .export import export_relations
from .models import (
    MODEL_KINDS,
    EnergyConfig,
    SparseGradient,
    TransEParams,
    TransFParams,
    TransHParams,
    TransRParams,
    candidate_energies,
    energy,
    enforce_constraints,
    grad_energy,
    init_model,
    init_transf_from_transe,
    param_count,
    transf_projection_matrix,
)
from .sampling import CorruptionPolicy, corruption_probabilities, sample_negative
from .synth import generate_clustered_kg, generate_random_kg, write_split_files
from .training import EpochLog, OptimizerState, TrainConfig, adam_step, margin_loss, train

__version__ = "0.1.0"
