"""Explanation-guided feature construction for tabular classification."""

from .construct import (ConstructConfig, Feature, LogicalFeature, CartesianFeature,
                        NumericalFeature, RelationalFeature, RuleFeature,
                        ThresholdFeature, atomic_conditions,
                        construct_operator_features, evaluate_feature,
                        generate_features)
from .data import (AttributeDescriptor, Condition, ConfigError, DataError, Dataset,
                   augment, discretize, load_arff, load_csv, save_arff, save_csv)
from .explain import (ExplainConfig, ExplanationMatrix, get_explanations,
                      ime_explain, select_explanation_instances)
from .groups import (CandidateGroup, WeightMatrix, collect_groups,
                     most_frequent_subsets, set_weights)
from .mdl import ScoredFeature, mdl_score, score_and_filter
from .model import (ForestParams, Model, ModelError, SchemaMismatch, TreeParams,
                    load_model, predict_proba, save_model, train_decision_tree,
                    train_naive_bayes, train_random_forest)
from .pipeline import (CvResult, EfcConfig, EfcResult, benchmark_report,
                       cross_validate, run_efc, run_exhaustive)
from .rules import Rule, learn_rules
from .synth import DATASET_NAMES, SyntheticSpec, concept_truth, generate

__version__ = "0.1.0"

__all__ = [
    "AttributeDescriptor", "CandidateGroup", "CartesianFeature", "Condition",
    "ConfigError", "ConstructConfig", "CvResult", "DataError", "Dataset", "DATASET_NAMES",
    "EfcConfig", "EfcResult", "ExplainConfig", "ExplanationMatrix", "Feature",
    "ForestParams", "LogicalFeature", "Model", "ModelError", "NumericalFeature",
    "RelationalFeature", "Rule", "RuleFeature", "SchemaMismatch", "ScoredFeature",
    "SyntheticSpec", "ThresholdFeature", "TreeParams", "WeightMatrix",
    "atomic_conditions", "augment", "benchmark_report", "collect_groups",
    "concept_truth", "construct_operator_features", "cross_validate", "discretize",
    "evaluate_feature", "generate", "generate_features", "get_explanations",
    "ime_explain", "learn_rules", "load_arff", "load_csv", "load_model",
    "mdl_score", "most_frequent_subsets", "predict_proba", "run_efc",
    "run_exhaustive", "save_arff", "save_csv", "save_model", "score_and_filter",
    "select_explanation_instances", "set_weights", "train_decision_tree",
    "train_naive_bayes", "train_random_forest",
]
