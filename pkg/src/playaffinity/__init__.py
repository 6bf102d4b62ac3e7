"""Confidence-weighted BPR matrix factorization for play-duration logs."""

from .errors import ConfigurationError, DivergenceError, ModelFormatError, ParseError
from .evaluation import EvalReport, auc, evaluate, per_entity, seen_unseen_split, spearman
from .ingest import Observation, SplitSpec, causal_split, parse_log, read_log, write_log
from .labeling import LabeledSamples, WeightingKind, binarize, confidence_weight, label_samples, label_stream
from .model import EmbeddingModel, Hyperparameters, load, pairwise_diff, predict_affinity, save, score
from .pipeline import fit
from .sampling import SamplerConfig, TrainingTriple, expand, triple_stream
from .synthgen import SynthConfig, generate, oracle_metrics
from .trainer import OptimizerMode, OptimizerState, TrainReport, sgd_step, train, triple_loss
from .vocab import EntityTypeTable, Vocabulary, build_vocabulary, lookup

__version__ = "0.1.0"
