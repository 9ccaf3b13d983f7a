"""Aggregated log-FER objective over a noise grid, and its low/high split.

For an initial LLR ``L0``::

    J(L0) = sum_t w_t * log10(max(FER(eps_t; L0), x_min(N_t)))

with ``x_min(N) = 1 - 0.05**(1/N)``, the one-sided 95% Clopper-Pearson upper
bound for zero failures in N trials. The split keeps the original weights, so
``J = J_low + J_high`` exactly; the subset means ``J_low / W_low`` and
``J_high / W_high`` give the convex form ``J = W_low * mean_low + W_high * mean_high``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .decoders import Family, eps_from_llr, llr_from_eps
from .montecarlo import FerPoint, FerSurface

DEFAULT_SPLIT = 0.05
REFERENCE_GRID = (0.15, 0.13, 0.11, 0.10, 0.09, 0.07, 0.05, 0.03)


class IncompleteSurfaceError(LookupError):
    def __init__(self, missing: list[tuple[float, float]]):
        self.missing = missing
        shown = ", ".join(f"(eps={e!r}, l0={l!r})" for e, l in missing[:10])
        more = f" and {len(missing) - 10} more" if len(missing) > 10 else ""
        super().__init__(f"surface is missing grid points: {shown}{more}")


def cp_floor(n_trials: int) -> float:
    """One-sided 95% Clopper-Pearson upper bound on the FER after 0 failures in n trials."""
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    return 1.0 - 0.05 ** (1.0 / n_trials)


def log_fer(fer: float, x_min: float) -> float:
    return math.log10(max(fer, x_min))


@dataclass(frozen=True)
class ObjectiveSpec:
    grid: tuple[float, ...]
    weights: tuple[float, ...] | None = None
    split_threshold: float = DEFAULT_SPLIT

    def __post_init__(self):
        grid = tuple(float(e) for e in self.grid)
        if not grid:
            raise ValueError("objective grid is empty")
        diffs = np.diff(grid)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("objective grid must be strictly ordered")
        w = self.weights
        w = tuple(1.0 / len(grid) for _ in grid) if w is None else tuple(float(x) for x in w)
        if len(w) != len(grid):
            raise ValueError("need one weight per grid point")
        if min(w) < 0 or abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "weights", w)

    @property
    def low_mask(self) -> np.ndarray:
        return np.array(self.grid) <= self.split_threshold

    @property
    def low_weight(self) -> float:
        return math.fsum(w for w, lo in zip(self.weights, self.low_mask) if lo)

    @property
    def high_weight(self) -> float:
        return math.fsum(w for w, lo in zip(self.weights, self.low_mask) if not lo)


def _points(surface: FerSurface, spec: ObjectiveSpec, l0: float) -> list[FerPoint]:
    pts, missing = [], []
    for eps in spec.grid:
        p = surface.lookup(eps, l0)
        if p is None:
            missing.append((eps, l0))
        pts.append(p)
    if missing:
        raise IncompleteSurfaceError(missing)
    return pts


def _terms(points: Sequence[FerPoint]) -> np.ndarray:
    return np.array([log_fer(p.fer, cp_floor(p.trials)) for p in points])


def aggregated_objective(surface: FerSurface, spec: ObjectiveSpec, l0: float) -> float:
    terms = _terms(_points(surface, spec, l0))
    return math.fsum(w * t for w, t in zip(spec.weights, terms))


def split_objective(surface: FerSurface, spec: ObjectiveSpec, l0: float) -> tuple[float, float]:
    terms = _terms(_points(surface, spec, l0))
    low = spec.low_mask
    j_low = math.fsum(w * t for w, t, lo in zip(spec.weights, terms, low) if lo)
    j_high = math.fsum(w * t for w, t, lo in zip(spec.weights, terms, low) if not lo)
    return j_low, j_high


def objective_sd(surface: FerSurface, spec: ObjectiveSpec, l0: float) -> float:
    """Delta-method standard deviation of J from per-point binomial errors.

    Floored points contribute nothing: their term depends only on N.
    """
    var = 0.0
    for w, p in zip(spec.weights, _points(surface, spec, l0)):
        fer = p.fer
        if fer <= cp_floor(p.trials) or fer >= 1.0:
            continue
        var += w * w * (1.0 - fer) / (p.trials * fer) / math.log(10.0) ** 2
    return math.sqrt(var)


def delta_objective(surface: FerSurface, spec: ObjectiveSpec, l0: float, l0_ref: float) -> float:
    return aggregated_objective(surface, spec, l0) - aggregated_objective(surface, spec, l0_ref)


@dataclass(frozen=True)
class OptimalLlr:
    l0: float
    eps0: float
    objective: float
    region: tuple[float, float]
    region_members: tuple[float, ...]


def find_optimal_llr(
    surface: FerSurface, spec: ObjectiveSpec, family: Family | str | None = None, delta: float = 0.05
) -> OptimalLlr:
    """Grid argmin of J (ties go to the smaller L0) and the region within ``delta`` of it."""
    family = Family(family or surface.metadata.get("decoder", Family.BP4))
    l0s = sorted(surface.l0_values)
    if len(l0s) < 2:
        raise ValueError("need at least two distinct L0 values")
    J = [aggregated_objective(surface, spec, l0) for l0 in l0s]
    best = min(range(len(l0s)), key=lambda i: (J[i], l0s[i]))
    members = tuple(l0 for l0, j in zip(l0s, J) if j <= J[best] + delta)
    return OptimalLlr(
        l0=l0s[best],
        eps0=eps_from_llr(family, l0s[best]),
        objective=J[best],
        region=(min(members), max(members)),
        region_members=members,
    )


@dataclass
class ObjectiveRow:
    l0: float
    eps0: float
    J: float
    J_low: float
    J_high: float
    mean_low: float | None
    mean_high: float | None
    sd: float
    delta_J: float | None
    floored: tuple[float, ...]


@dataclass
class ObjectiveReport:
    family: Family
    spec: ObjectiveSpec
    rows: list[ObjectiveRow]
    optimum: OptimalLlr
    l0_ref: float | None = None
    metadata: dict = field(default_factory=dict)

    def row(self, l0: float) -> ObjectiveRow:
        for r in self.rows:
            if math.isclose(r.l0, l0, rel_tol=1e-12, abs_tol=1e-15):
                return r
        raise KeyError(l0)


def build_report(
    surface: FerSurface,
    spec: ObjectiveSpec,
    *,
    family: Family | str | None = None,
    eps0_ref: float | None = 0.10,
    delta: float = 0.05,
) -> ObjectiveReport:
    """Evaluate J, the split and the uncertainty band for every L0 in the surface."""
    family = Family(family or surface.metadata.get("decoder", Family.BP4))
    l0s = sorted(surface.l0_values)
    if not l0s:
        raise ValueError("surface has no fixed-L0 columns")

    l0_ref = None
    if eps0_ref is not None:
        target = llr_from_eps(family, eps0_ref)
        l0_ref = next((l for l in l0s if math.isclose(l, target, rel_tol=1e-9)), None)
    j_ref = aggregated_objective(surface, spec, l0_ref) if l0_ref is not None else None

    w_low, w_high = spec.low_weight, spec.high_weight
    rows = []
    for l0 in l0s:
        pts = _points(surface, spec, l0)
        j = aggregated_objective(surface, spec, l0)
        j_low, j_high = split_objective(surface, spec, l0)
        floored = tuple(p.epsilon for p in pts if p.fer <= cp_floor(p.trials))
        rows.append(
            ObjectiveRow(
                l0=l0,
                eps0=eps_from_llr(family, l0),
                J=j,
                J_low=j_low,
                J_high=j_high,
                mean_low=j_low / w_low if w_low > 0 else None,
                mean_high=j_high / w_high if w_high > 0 else None,
                sd=objective_sd(surface, spec, l0),
                delta_J=None if j_ref is None else j - j_ref,
                floored=floored,
            )
        )
    optimum = (
        find_optimal_llr(surface, spec, family, delta)
        if len(l0s) >= 2
        else OptimalLlr(l0s[0], eps_from_llr(family, l0s[0]), rows[0].J, (l0s[0], l0s[0]), (l0s[0],))
    )
    return ObjectiveReport(family, spec, rows, optimum, l0_ref, dict(surface.metadata))


def convex_reconstruction(row: ObjectiveRow, spec: ObjectiveSpec) -> float:
    """W_low * mean_low + W_high * mean_high, which must equal J."""
    total = 0.0
    if row.mean_low is not None:
        total += spec.low_weight * row.mean_low
    if row.mean_high is not None:
        total += spec.high_weight * row.mean_high
    return total
