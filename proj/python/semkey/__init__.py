"""Text watermarking toolkit: semantic keys, keyed samplers, p-value detection."""

from semkey._core import (
    FeatureHashEmbedder,
    NgramModel,
    Session,
    Vocabulary,
    angle_degrees,
    convolve_pvalue,
    detokenize,
    discretize_exponential,
    expmin_cost,
    expmin_mark,
    fixed_key,
    gaussian_from_seed,
    key_match_prob,
    min_of_k_cdf,
    nucleus_truncate,
    pvalue_gamma,
    run_experiment,
    simkey,
    standard_hash_key,
    tokenize,
    tournament_cost,
    tournament_mark,
    tpr_at_fpr,
    train_ngram,
    xi,
)

__all__ = [
    "FeatureHashEmbedder",
    "NgramModel",
    "Session",
    "Vocabulary",
    "angle_degrees",
    "convolve_pvalue",
    "detokenize",
    "discretize_exponential",
    "expmin_cost",
    "expmin_mark",
    "fixed_key",
    "gaussian_from_seed",
    "key_match_prob",
    "min_of_k_cdf",
    "nucleus_truncate",
    "pvalue_gamma",
    "run_experiment",
    "simkey",
    "standard_hash_key",
    "tokenize",
    "tournament_cost",
    "tournament_mark",
    "tpr_at_fpr",
    "train_ngram",
    "xi",
]
