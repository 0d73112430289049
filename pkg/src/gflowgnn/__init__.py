"""Active learning on graphs as generative-flow sampling of label sets."""

from .baselines import BaselineKind, baseline_select, run_baseline_episode
from .classifier import Classifier, evaluate, predict_proba, reset_classifier, train_epoch, train_to_convergence
from .config import ExperimentConfig, TrainConfig, load_config
from .env import Env, ParentRecord, State, compute_flow_features, parents, reset, step, terminal_reward
from .evaluation import evaluate_policy
from .graph import Graph, Splits, load_graph, neighbors, normalized_adjacency, save_graph, split_nodes
from .metrics import EvalSummary, MetricReport, high_quality_count, macro_f1, micro_f1
from .policy import PolicyNet, action_distribution, init_policy, log_flow, sample_action, state_matrix
from .sbm import generate_sbm
from .trainer import (Trajectory, enumerate_terminal_distribution, flow_matching_loss, proportionality_gap,
                      rollout_batch, train)

__version__ = "0.1.0"

__all__ = [
    "BaselineKind", "baseline_select", "run_baseline_episode", "Classifier", "evaluate", "predict_proba",
    "reset_classifier", "train_epoch", "train_to_convergence", "ExperimentConfig", "TrainConfig",
    "load_config", "Env", "ParentRecord", "State", "compute_flow_features", "parents", "reset", "step",
    "terminal_reward", "evaluate_policy", "Graph", "Splits", "load_graph", "neighbors",
    "normalized_adjacency", "save_graph", "split_nodes", "EvalSummary", "MetricReport", "high_quality_count",
    "macro_f1", "micro_f1", "PolicyNet", "action_distribution", "init_policy", "log_flow", "sample_action",
    "state_matrix", "generate_sbm", "Trajectory", "enumerate_terminal_distribution", "flow_matching_loss",
    "proportionality_gap", "rollout_batch", "train",
]
