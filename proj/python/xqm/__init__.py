"""Python bindings for the xqm pseudo-translation evaluation toolkit."""

from ._core import (
    CapacityError,
    Edit,
    Error,
    IntegrityError,
    ScorerError,
    UsageError,
    __version__,
    apply_edits,
    chrf_score,
    coefficient_of_variation,
    derive_edit,
    edits_overlap,
    enumerate_pseudo_translations,
    kendall_tau_b,
    mqm_deduction,
    paired_t_test,
    parse_tagged,
    run_all,
    run_analyze,
    run_assemble,
    run_fit_lgn,
    run_ingest,
    run_prompts,
    run_score,
    run_synth,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
