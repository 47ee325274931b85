"""Classical CI oracles: full CI and an importance-selected CI benchmark.

The selected solver grows a variational determinant set from the reference:
at each epsilon stage every determinant connected to the current set with
first-order importance |H_ai c_i| >= epsilon joins, and the stage iterates
until the set stops growing.  Energies are variational throughout; no
perturbative correction is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .davidson import GroundStateResult, lowest_eigenpair
from .determinants import (
    Determinant,
    diagonal_energy,
    enumerate_sector,
    generate_excitations,
    matrix_element,
)
from .errors import CapExceededError, ValidationError
from .model import ElectronicIntegrals, SectorSpec

FCI_CAP = 10**6


@dataclass(frozen=True)
class SelectionSchedule:
    """Descending importance cutoffs (or size targets) with a hard cap."""

    epsilons: tuple[float, ...] = ()
    target_sizes: tuple[int, ...] = ()
    max_determinants: int = 10**6

    def __post_init__(self):
        if bool(self.epsilons) == bool(self.target_sizes):
            raise ValidationError("provide either epsilons or target sizes, not both")
        if self.epsilons:
            if any(e <= 0 for e in self.epsilons):
                raise ValidationError("epsilons must be positive")
            if any(b >= a for a, b in zip(self.epsilons, self.epsilons[1:])):
                raise ValidationError("epsilons must be strictly descending")
        if self.target_sizes:
            if any(s < 1 for s in self.target_sizes):
                raise ValidationError("target sizes must be positive")
            if any(b <= a for a, b in zip(self.target_sizes, self.target_sizes[1:])):
                raise ValidationError("target sizes must be strictly increasing")

    @property
    def n_stages(self) -> int:
        return len(self.epsilons) or len(self.target_sizes)


@dataclass(frozen=True)
class SelectedCiStage:
    """One stage of the selected-CI iteration."""

    cutoff: float | None
    size: int
    fraction: float
    result: GroundStateResult
    determinants: tuple[Determinant, ...] = field(repr=False, default=())


def _assemble(dets: list[Determinant], ints: ElectronicIntegrals) -> sp.csr_matrix:
    index = {(d.beta, d.alpha): i for i, d in enumerate(dets)}
    levels = {1} if ints.density_density else {1, 2}
    rows, cols, vals = [], [], []
    m = ints.n_orbitals
    for i, det in enumerate(dets):
        rows.append(i)
        cols.append(i)
        vals.append(diagonal_energy(det, ints))
        for other in generate_excitations(det, m, levels):
            j = index.get((other.beta, other.alpha))
            if j is not None and j > i:
                val = matrix_element(other, det, ints)
                if val != 0.0:
                    rows += [i, j]
                    cols += [j, i]
                    vals += [np.conj(val), val]
    dtype = complex if ints.is_complex else float
    return sp.csr_matrix((np.array(vals, dtype=dtype), (rows, cols)), shape=(len(dets), len(dets)))


def fci_ground(
    spec: SectorSpec,
    ints: ElectronicIntegrals,
    tol: float = 1e-9,
    cap: int = FCI_CAP,
    method: str = "auto",
) -> GroundStateResult:
    """Lowest eigenpair over the complete sector basis."""
    dim = spec.dimension()
    if dim > cap:
        raise CapExceededError(f"sector dimension {dim} exceeds FCI cap {cap}")
    dets = enumerate_sector(spec, cap=cap)
    matrix = _assemble(dets, ints)
    return lowest_eigenpair(matrix, tol=tol, method=method)


def _solve_dets(dets: list[Determinant], ints: ElectronicIntegrals, tol: float) -> GroundStateResult:
    matrix = _assemble(dets, ints)
    return lowest_eigenpair(matrix, tol=tol)


def hci_ground(
    spec: SectorSpec,
    ints: ElectronicIntegrals,
    schedule: SelectionSchedule,
    reference: Determinant | None = None,
    tol: float = 1e-9,
    with_variance: bool = True,
) -> list[SelectedCiStage]:
    """Importance-selected CI, one recorded stage per schedule entry."""
    if reference is None:
        reference = Determinant((1 << spec.n_alpha) - 1, (1 << spec.n_beta) - 1)
    total = spec.dimension()
    m = spec.n_orbitals
    levels = {1} if ints.density_density else {1, 2}

    current: list[Determinant] = [reference]
    current_set = {(reference.beta, reference.alpha)}
    result = _solve_dets(current, ints, tol)
    stages: list[SelectedCiStage] = []

    def record(cutoff):
        res = result
        if with_variance:
            try:
                # current is in insertion order, matching the CI vector
                res = res.with_variance(_variance_of_dets(current, res, ints))
            except ValidationError:
                pass  # zero energy expectation: relative variance undefined
        stages.append(
            SelectedCiStage(cutoff, len(current), len(current) / total, res, tuple(current))
        )

    if schedule.epsilons:
        for eps in schedule.epsilons:
            while True:
                added = _select_connected(current, current_set, result, ints, m, levels,
                                          eps, schedule.max_determinants)
                if not added:
                    break
                result = _solve_dets(current, ints, tol)
                if len(current) >= schedule.max_determinants:
                    break
            record(eps)
    else:
        for size in schedule.target_sizes:
            size = min(size, schedule.max_determinants)
            while len(current) < size:
                added = _select_top(current, current_set, result, ints, m, levels,
                                    size - len(current))
                if not added:
                    break
                result = _solve_dets(current, ints, tol)
            record(None)
    return stages


def _select_connected(current, current_set, result, ints, m, levels, eps, cap) -> int:
    """Add all connected determinants with importance >= eps; returns count added."""
    c = result.ci_vector
    candidates: dict[tuple[int, int], float] = {}
    for amp, det in zip(c, current):
        if abs(amp) == 0.0:
            continue
        for other in generate_excitations(det, m, levels):
            key = (other.beta, other.alpha)
            if key in current_set:
                continue
            val = matrix_element(other, det, ints)
            imp = abs(val * amp)
            if imp >= eps and imp > candidates.get(key, 0.0):
                candidates[key] = imp
    if not candidates:
        return 0
    ordered = sorted(candidates, key=lambda k: (-candidates[k], k))
    room = cap - len(current)
    ordered = ordered[:room]
    for b, a in ordered:
        current.append(Determinant(a, b))
        current_set.add((b, a))
    return len(ordered)


def _select_top(current, current_set, result, ints, m, levels, n_add) -> int:
    """Add the n_add most important connected determinants."""
    c = result.ci_vector
    candidates: dict[tuple[int, int], float] = {}
    for amp, det in zip(c, current):
        if abs(amp) == 0.0:
            continue
        for other in generate_excitations(det, m, levels):
            key = (other.beta, other.alpha)
            if key in current_set:
                continue
            val = matrix_element(other, det, ints)
            imp = abs(val * amp)
            if imp > candidates.get(key, 0.0):
                candidates[key] = imp
    ordered = [k for k in sorted(candidates, key=lambda k: (-candidates[k], k))
               if candidates[k] > 0.0][:n_add]
    for b, a in ordered:
        current.append(Determinant(a, b))
        current_set.add((b, a))
    return len(ordered)


def _variance_of_dets(dets, result, ints) -> float:
    """Relative energy variance for an arbitrary determinant list."""
    m = ints.n_orbitals
    levels = {1} if ints.density_density else {1, 2}
    c = result.ci_vector
    w: dict[tuple[int, int], complex] = {}
    for amp, det in zip(c, dets):
        if amp == 0.0:
            continue
        key = (det.beta, det.alpha)
        w[key] = w.get(key, 0.0) + diagonal_energy(det, ints) * amp
        for other in generate_excitations(det, m, levels):
            val = matrix_element(other, det, ints)
            if val != 0.0:
                okey = (other.beta, other.alpha)
                w[okey] = w.get(okey, 0.0) + val * amp
    index = {(det.beta, det.alpha): i for i, det in enumerate(dets)}
    h1 = float(np.real(sum(np.conj(c[index[k]]) * v for k, v in w.items() if k in index)))
    h2 = float(sum(abs(v) ** 2 for v in w.values()))
    if abs(h1) < 1e-14:
        raise ValidationError("energy expectation is zero; relative variance undefined")
    return (h2 - h1 * h1) / (h1 * h1)
