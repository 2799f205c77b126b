"""Exact event-driven simulation of first passage over a level."""

from .backend import ENV_BACKEND, ENV_THREADS, HAVE_NUMBA, active_backend, default_threads
from .engine import (
    CoupledSamples,
    FEstimate,
    PassageSample,
    PassageSamples,
    SimConfig,
    SupTail,
    TripletLaw,
    default_horizon,
    default_kill_depth,
    empirical_triplet_law,
    estimate_F,
    estimate_sup_tail,
    F_from_samples,
    normalize_time,
    simulate_coupled,
    simulate_passage,
    simulate_sup,
)

__all__ = [
    "CoupledSamples",
    "ENV_BACKEND",
    "ENV_THREADS",
    "FEstimate",
    "F_from_samples",
    "HAVE_NUMBA",
    "PassageSample",
    "PassageSamples",
    "SimConfig",
    "SupTail",
    "TripletLaw",
    "active_backend",
    "default_horizon",
    "default_kill_depth",
    "default_threads",
    "empirical_triplet_law",
    "estimate_F",
    "estimate_sup_tail",
    "normalize_time",
    "simulate_coupled",
    "simulate_passage",
    "simulate_sup",
]
