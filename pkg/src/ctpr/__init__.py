"""Temporal SCM sampler producing paired observational/interventional series.

Subpackages split along the pipeline: core types (`scm_core`), the sampling
prior (`prior`), forward simulation (`simulate`), the corpus pipeline and
binary format (`dataset`), corpus statistics and causal reachability
(`analysis`), and baseline evaluation (`evaluation`).
"""

from ctpr.scm_core import (
    ACTIVATIONS,
    FAMILIES,
    INTERVENTION_KINDS,
    NOISE_FAMILIES,
    InterventionSpec,
    LaggedDag,
    Mechanism,
    NoiseSpec,
    Profile,
    QueryTuple,
    RegimeSwitchingTscm,
    Series,
    Tscm,
    unrolled_parents,
    validate_tscm,
)
from ctpr.prior import PriorConfig, ood_config, sample_intervention, sample_tscm
from ctpr.simulate import (
    draw_noise,
    ou_ar1_coefficients,
    simulate_interventional,
    simulate_observational,
    simulate_regime_chain,
)
from ctpr.dataset import (
    CorpusReader,
    PairedSample,
    derive_sample_seed,
    generate_corpus,
    generate_sample,
)
from ctpr.analysis import classify_query, corpus_stats, reachable_set

__version__ = "0.1.0"
