"""Synonym-swap attacks and noise-trained defenses for dialogue entailment."""

from .attack import (DEFAULT_STOPWORDS, AttackConfig, AttackResult, Swap,
                     attack_dataset, attack_example, load_results,
                     load_stopwords, modifiable_positions, save_results,
                     word_importance)
from .corpus import (Dataset, DatasetFormatError, DialogueTurn,
                     EntailmentExample, flatten_dialogue, generate_synthetic,
                     load_dataset, save_dataset, split_dataset)
from .defense import (TrainConfig, TrainingDivergedError, TrainReport,
                      finetune_on_attacked, train, train_augmented_only)
from .embedding import (EmbeddingFormatError, EmbeddingTable, SynonymCandidate,
                        UnknownTokenError, cosine_sim, load_embeddings,
                        nearest_synonyms, save_embeddings, synthetic_table)
from .harness import (AggregatedRow, ConfusionMatrix, GridRow, GridSpec,
                      aggregate_grid, attack_success_rate, evaluate,
                      mean_over_seeds, run_grid)
from .seeding import derive_seed
from .tokenization import Token, reconstruct, tokenize
from .victim import (CheckpointFormatError, MlpVictim, NoiseSpec,
                     VictimInterface, ce_loss, ep_loss, featurize,
                     featurize_pair, grad, noise_loss)

__version__ = "0.1.0"

__all__ = [
    "AggregatedRow", "AttackConfig", "AttackResult", "CheckpointFormatError",
    "ConfusionMatrix", "DEFAULT_STOPWORDS", "Dataset", "DatasetFormatError",
    "DialogueTurn", "EmbeddingFormatError", "EmbeddingTable",
    "EntailmentExample", "GridRow", "GridSpec", "MlpVictim", "NoiseSpec",
    "Swap", "SynonymCandidate", "Token", "TrainConfig", "TrainReport",
    "TrainingDivergedError", "UnknownTokenError", "VictimInterface",
    "aggregate_grid", "attack_dataset", "attack_example",
    "attack_success_rate", "ce_loss", "cosine_sim", "derive_seed", "ep_loss",
    "evaluate", "featurize", "featurize_pair", "finetune_on_attacked",
    "flatten_dialogue", "generate_synthetic", "grad", "load_dataset",
    "load_embeddings", "load_results", "load_stopwords", "mean_over_seeds",
    "modifiable_positions", "nearest_synonyms", "noise_loss", "reconstruct",
    "run_grid", "save_dataset", "save_embeddings", "save_results",
    "split_dataset", "synthetic_table", "tokenize", "train",
    "train_augmented_only", "word_importance",
]
