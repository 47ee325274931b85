"""Sample-driven configuration subspaces and their projected Hamiltonians.

A subspace is kept in product form: an ordered set of alpha half-strings
times an ordered set of beta half-strings.  Samples rank the strings by
marginal frequency; a greedy growth sequence then realizes any requested
fraction of the sector, and nested fractions reuse prefixes of the same
sequence, which makes fraction sweeps monotone by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp

from .davidson import GroundStateResult, lowest_eigenpair
from .determinants import (
    Determinant,
    diagonal_energy,
    excitation_rank,
    generate_excitations,
    half_strings,
    matrix_element,
)
from .errors import ValidationError
from .model import ElectronicIntegrals, SectorSpec
from .statevector import SampleSet

ALL_PAIRS_LIMIT = 4096


@dataclass(frozen=True)
class SubspaceBasis:
    """Product-form determinant subspace A x B with canonical ordering."""

    spec: SectorSpec
    alpha_strings: tuple[int, ...]
    beta_strings: tuple[int, ...]

    def __post_init__(self):
        for name, strings, nocc in (
            ("alpha", self.alpha_strings, self.spec.n_alpha),
            ("beta", self.beta_strings, self.spec.n_beta),
        ):
            if len(set(strings)) != len(strings):
                raise ValidationError(f"duplicate {name} strings")
            for s in strings:
                if bin(s).count("1") != nocc:
                    raise ValidationError(f"{name} string {s:b} has wrong particle number")

    @property
    def dimension(self) -> int:
        return len(self.alpha_strings) * len(self.beta_strings)

    @property
    def fraction(self) -> float:
        return self.dimension / self.spec.dimension()

    def determinants(self) -> list[Determinant]:
        """Product basis in canonical (beta-major, ascending string) order."""
        alphas = sorted(self.alpha_strings)
        betas = sorted(self.beta_strings)
        return [Determinant(a, b) for b in betas for a in alphas]

    def contains(self, det: Determinant) -> bool:
        return det.alpha in set(self.alpha_strings) and det.beta in set(self.beta_strings)


def filter_samples(samples: SampleSet, spec: SectorSpec) -> SampleSet:
    """Keep only samples with the sector's per-spin particle numbers."""
    kept: dict[Determinant, int] = {}
    total = 0
    for det, count in samples.counts.items():
        if (
            bin(det.alpha).count("1") == spec.n_alpha
            and bin(det.beta).count("1") == spec.n_beta
        ):
            kept[det] = count
            total += count
    if not kept:
        raise ValidationError("postselection discarded every sample (empty subspace)")
    discarded = 1.0 - total / samples.shots
    return SampleSet(
        samples.n_orbitals, kept, total, samples.seed, samples.provenance, discarded
    )


PADDING_LIMIT = 10**6


def _ranked_strings(samples: SampleSet, spec: SectorSpec, channel: str) -> list[int]:
    """Observed strings by descending marginal frequency, then canonical order;
    unobserved sector strings follow in canonical order (frequency-zero ties).
    Padding is skipped for channels too large to enumerate."""
    freq: dict[int, int] = {}
    for det, count in samples.counts.items():
        word = det.alpha if channel == "alpha" else det.beta
        freq[word] = freq.get(word, 0) + count
    observed = sorted(freq, key=lambda w: (-freq[w], w))
    nocc = spec.n_alpha if channel == "alpha" else spec.n_beta
    if comb(spec.n_orbitals, nocc) > PADDING_LIMIT:
        return observed
    rest = [w for w in half_strings(spec.n_orbitals, nocc) if w not in freq]
    return observed + rest


def growth_sequence(
    samples: SampleSet, spec: SectorSpec, reference: Determinant | None = None
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Nested product subspaces realized by greedy frequency-ranked growth.

    Each entry is (alpha_strings, beta_strings) after one addition; the
    channel added at every step is the one whose next string yields the
    smaller product dimension (alpha on ties).  Reference strings, when
    given, are forced to the front of both rankings.
    """
    ranked_a = _ranked_strings(samples, spec, "alpha")
    ranked_b = _ranked_strings(samples, spec, "beta")
    if reference is not None:
        if bin(reference.alpha).count("1") != spec.n_alpha or \
                bin(reference.beta).count("1") != spec.n_beta:
            raise ValidationError("reference determinant outside the sector")
        ranked_a = [reference.alpha] + [w for w in ranked_a if w != reference.alpha]
        ranked_b = [reference.beta] + [w for w in ranked_b if w != reference.beta]
    seq = []
    a: list[int] = [ranked_a[0]]
    b: list[int] = [ranked_b[0]]
    ia, ib = 1, 1
    seq.append((tuple(a), tuple(b)))
    while ia < len(ranked_a) or ib < len(ranked_b):
        grow_a = (len(a) + 1) * len(b) if ia < len(ranked_a) else None
        grow_b = len(a) * (len(b) + 1) if ib < len(ranked_b) else None
        if grow_b is None or (grow_a is not None and grow_a <= grow_b):
            a.append(ranked_a[ia])
            ia += 1
        else:
            b.append(ranked_b[ib])
            ib += 1
        seq.append((tuple(a), tuple(b)))
    return seq


def build_subspace(
    samples: SampleSet,
    spec: SectorSpec,
    target_fraction: float,
    reference: Determinant | None = None,
) -> SubspaceBasis:
    """Smallest greedy product subspace covering the requested fraction."""
    if not 0.0 < target_fraction <= 1.0:
        raise ValidationError("target_fraction must lie in (0, 1]")
    if not samples.counts:
        raise ValidationError("empty sample set")
    total = spec.dimension()
    target = target_fraction * total
    seq = growth_sequence(samples, spec, reference)
    for a, b in seq:
        if len(a) * len(b) >= target:
            return SubspaceBasis(spec, a, b)
    # only reachable when the sector is too large to pad with unobserved strings
    a, b = seq[-1]
    return SubspaceBasis(spec, a, b)


def project_hamiltonian(basis: SubspaceBasis, ints: ElectronicIntegrals) -> sp.csr_matrix:
    """Assemble the Hamiltonian projected onto the subspace (sparse Hermitian)."""
    dets = basis.determinants()
    d = len(dets)
    index = {(det.beta, det.alpha): i for i, det in enumerate(dets)}
    dtype = complex if ints.is_complex else float
    rows: list[int] = []
    cols: list[int] = []
    vals: list = []
    m = ints.n_orbitals
    if ints.density_density or d > ALL_PAIRS_LIMIT:
        levels = {1} if ints.density_density else {1, 2}
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
    else:
        for i, di in enumerate(dets):
            rows.append(i)
            cols.append(i)
            vals.append(diagonal_energy(di, ints))
            for j in range(i + 1, d):
                dj = dets[j]
                if excitation_rank(di, dj) > 2:
                    continue
                val = matrix_element(di, dj, ints)
                if val != 0.0:
                    rows += [i, j]
                    cols += [j, i]
                    vals += [val, np.conj(val)]
    return sp.csr_matrix((np.array(vals, dtype=dtype), (rows, cols)), shape=(d, d))


def solve_subspace(
    basis: SubspaceBasis,
    ints: ElectronicIntegrals,
    tol: float = 1e-9,
    max_iter: int = 200,
    method: str = "auto",
) -> GroundStateResult:
    matrix = project_hamiltonian(basis, ints)
    return lowest_eigenpair(matrix, tol=tol, max_iter=max_iter, method=method)


def energy_variance(
    result: GroundStateResult, basis: SubspaceBasis, ints: ElectronicIntegrals
) -> float:
    """Relative variance (<H^2> - <H>^2) / <H>^2 of the subspace eigenvector.

    The Hamiltonian is applied without projection, so contributions from
    determinants outside the subspace are included.
    """
    dets = basis.determinants()
    c = result.ci_vector
    levels = {1} if ints.density_density else {1, 2}
    m = ints.n_orbitals
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
    h1 = sum(np.conj(c[index[key]]) * val for key, val in w.items() if key in index)
    h1 = float(np.real(h1))
    h2 = float(sum(abs(val) ** 2 for val in w.values()))
    if abs(h1) < 1e-14:
        raise ValidationError("energy expectation is zero; relative variance undefined")
    return (h2 - h1 * h1) / (h1 * h1)


def extsqd_expand(
    result: GroundStateResult,
    basis: SubspaceBasis,
    threshold: float,
    levels: set[int],
    keep_original: bool = True,
) -> SubspaceBasis:
    """Grow the subspace by exciting the high-weight ground-state configurations.

    Determinants with squared amplitude below ``threshold`` are dropped, the
    survivors are excited at the requested levels, and the union is re-closed
    into product form.  With ``keep_original`` the input strings are retained,
    which makes re-diagonalization variationally monotone.
    """
    if threshold < 0:
        raise ValidationError("threshold must be nonnegative")
    if not levels or not levels <= {1, 2}:
        raise ValidationError("levels must be a nonempty subset of {1, 2}")
    dets = basis.determinants()
    weights = np.abs(result.ci_vector) ** 2
    kept = [det for det, wgt in zip(dets, weights) if wgt >= threshold]
    if not kept:
        raise ValidationError("threshold removed every configuration")
    alpha = {det.alpha for det in kept}
    beta = {det.beta for det in kept}
    m = basis.spec.n_orbitals
    for det in kept:
        for other in generate_excitations(det, m, levels):
            alpha.add(other.alpha)
            beta.add(other.beta)
    if keep_original:
        alpha.update(basis.alpha_strings)
        beta.update(basis.beta_strings)
    return SubspaceBasis(basis.spec, tuple(sorted(alpha)), tuple(sorted(beta)))


@dataclass(frozen=True)
class SweepPoint:
    fraction: float
    basis: SubspaceBasis
    result: GroundStateResult


def sqd_sweep(
    samples: SampleSet,
    spec: SectorSpec,
    ints: ElectronicIntegrals,
    fractions: list[float],
    reference: Determinant | None = None,
    tol: float = 1e-9,
    with_variance: bool = True,
) -> list[SweepPoint]:
    """One subspace solve per requested fraction, on nested subspaces."""
    if not fractions:
        raise ValidationError("no fractions requested")
    if any(f <= 0.0 or f > 1.0 for f in fractions):
        raise ValidationError("fractions must lie in (0, 1]")
    if any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise ValidationError("fractions must be strictly increasing")
    seq = growth_sequence(samples, spec, reference)
    total = spec.dimension()
    points = []
    for fraction in fractions:
        target = fraction * total
        chosen = seq[-1]
        for a, b in seq:
            if len(a) * len(b) >= target:
                chosen = (a, b)
                break
        basis = SubspaceBasis(spec, chosen[0], chosen[1])
        result = solve_subspace(basis, ints, tol=tol)
        if with_variance:
            try:
                result = result.with_variance(energy_variance(result, basis, ints))
            except ValidationError:
                pass  # zero energy expectation: relative variance undefined
        points.append(SweepPoint(fraction, basis, result))
    return points
