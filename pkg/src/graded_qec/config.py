"""Numerical tolerances shared by every module.

All thresholds live in one record so that reports can embed exactly the
configuration that produced them.  Use :func:`use_tolerances` to override
values for a block of code; the active record is held in a context variable,
so overrides never leak across threads.
"""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from dataclasses import dataclass

DEFAULT_SEED = 0x5EED


@dataclass(frozen=True)
class Tolerances:
    # relative singular-value cutoff for spans
    rank_rel: float = 1e-10
    # orthonormality of operator bases and code isometries
    orthonormal: float = 1e-10
    # membership residual, relative to 1 + ||A||_HS
    contains: float = 1e-9
    # detection residual, relative to 1 + ||E||_HS
    detect: float = 1e-9
    # commutator HS norm for c-distance
    commute: float = 1e-9
    # relative null-space cutoff on singular values of the commutator map
    commutant_rel: float = 1e-9
    # relative eigenvalue gap for clustering spectra
    cluster_gap: float = 1e-8
    # block-form residual accepted by verify_decomposition
    decomposition: float = 1e-8
    # tr(J_i) = 0 check, scaled by N * max|entry|
    traceless: float = 1e-9
    # completeness / trace preservation of channels and generators
    trace_preservation: float = 1e-9
    # partition certificates and constructed quantum codes
    certificate: float = 1e-8
    # slack added to the (lambda t)^(e+1)/(e+1)! envelope
    bound: float = 1e-8
    # trace-distance change allowed for noiseless-subsystem states
    subsystem: float = 1e-8
    # unit-norm preservation under Hamiltonian evolution
    norm: float = 1e-10

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)

    def replace(self, **overrides: float) -> Tolerances:
        unknown = set(overrides) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise KeyError(f"unknown tolerance name(s): {sorted(unknown)}")
        return dataclasses.replace(self, **{k: float(v) for k, v in overrides.items()})


_ACTIVE: contextvars.ContextVar[Tolerances] = contextvars.ContextVar(
    "graded_qec_tolerances", default=Tolerances()
)


def tolerances() -> Tolerances:
    """Return the active tolerance record."""
    return _ACTIVE.get()


@contextlib.contextmanager
def use_tolerances(tol: Tolerances | None = None, **overrides: float):
    base = tol if tol is not None else tolerances()
    token = _ACTIVE.set(base.replace(**overrides) if overrides else base)
    try:
        yield _ACTIVE.get()
    finally:
        _ACTIVE.reset(token)
