"""Exact sector statevector for the cluster-Jastrow ansatz and its sampling.

The state lives in one (n_alpha, n_beta) particle-number sector, stored as a
(beta-strings x alpha-strings) amplitude array in canonical ordering.  An
orbital rotation exp(K) is applied exactly by decomposing the one-particle
rotation into adjacent-orbital Givens factors, each of which mixes string
pairs without any long-range fermionic sign bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .determinants import Determinant, half_strings
from .errors import CapExceededError, ValidationError
from .model import SectorSpec
from .reference import LucjParameters

STATE_CAP = 10**6


@dataclass(frozen=True)
class SectorStatevector:
    """Normalized amplitudes over the canonical sector basis."""

    spec: SectorSpec
    amplitudes: np.ndarray  # shape (n_beta_strings, n_alpha_strings)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise ValidationError(f"statevector norm {norm} deviates from 1")

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()


@dataclass(frozen=True)
class SampleSet:
    """Multiset of sampled configurations."""

    n_orbitals: int
    counts: dict[Determinant, int]
    shots: int
    seed: int | None
    provenance: str  # "simulated" or "file"
    discarded_fraction: float | None = None

    def __post_init__(self):
        if any(c <= 0 for c in self.counts.values()):
            raise ValidationError("sample counts must be positive")
        if sum(self.counts.values()) != self.shots:
            raise ValidationError("sample counts do not add up to the shot total")


def _string_index(strings: list[int]) -> dict[int, int]:
    return {s: i for i, s in enumerate(strings)}


def basis_state(spec: SectorSpec, ref: Determinant, cap: int = STATE_CAP) -> SectorStatevector:
    dim = spec.dimension()
    if dim > cap:
        raise CapExceededError(f"sector dimension {dim} exceeds cap {cap}")
    alphas = half_strings(spec.n_orbitals, spec.n_alpha)
    betas = half_strings(spec.n_orbitals, spec.n_beta)
    amps = np.zeros((len(betas), len(alphas)), dtype=complex)
    try:
        ia = _string_index(alphas)[ref.alpha]
        ib = _string_index(betas)[ref.beta]
    except KeyError:
        raise ValidationError("reference determinant lies outside the sector") from None
    amps[ib, ia] = 1.0
    return SectorStatevector(spec, amps)


def _givens_factors(q: np.ndarray) -> tuple[list[tuple[int, float, float]], np.ndarray]:
    """Decompose orthogonal q into adjacent-row Givens factors and signs.

    Returns factors (p, c, s) acting on rows (p, p+1) such that
    q = G_1^T ... G_k^T diag(signs) with the factors in application order
    reversed (see apply_orbital_rotation).
    """
    m = q.shape[0]
    r = q.copy()
    factors = []
    for col in range(m):
        for row in range(m - 1, col, -1):
            if abs(r[row, col]) < 1e-15:
                continue
            a, b = r[row - 1, col], r[row, col]
            h = np.hypot(a, b)
            c, s = a / h, b / h
            g = np.array([[c, s], [-s, c]])
            r[[row - 1, row], :] = g @ r[[row - 1, row], :]
            factors.append((row - 1, c, s))
    signs = np.sign(np.diag(r)).astype(float)
    return factors, signs


def _pair_mixing(strings: list[int], index: dict[int, int], p: int):
    """String pairs (only p occupied) <-> (only p+1 occupied) for one channel."""
    lo, hi = [], []
    for s in strings:
        has_p = (s >> p) & 1
        has_q = (s >> (p + 1)) & 1
        if has_p and not has_q:
            lo.append(index[s])
            hi.append(index[s ^ (1 << p) | (1 << (p + 1))])
    return np.array(lo, dtype=int), np.array(hi, dtype=int)


def apply_orbital_rotation(state: SectorStatevector, kgen: np.ndarray) -> SectorStatevector:
    """Apply exp(K) for a real antisymmetric one-body generator K.

    The rotation acts identically on both spin channels.
    """
    k = np.asarray(kgen, dtype=float)
    m = state.spec.n_orbitals
    if k.shape != (m, m):
        raise ValidationError(f"generator: expected shape {(m, m)}, got {k.shape}")
    if np.abs(k + k.T).max(initial=0.0) > 1e-10:
        raise ValidationError("generator must be antisymmetric")
    q = scipy.linalg.expm(k)
    return apply_orbital_matrix(state, q)


def apply_orbital_matrix(state: SectorStatevector, q: np.ndarray) -> SectorStatevector:
    """Apply the orbital rotation given by a real orthogonal matrix q."""
    m = state.spec.n_orbitals
    q = np.asarray(q, dtype=float)
    if np.abs(q.T @ q - np.eye(m)).max() > 1e-10:
        raise ValidationError("orbital rotation matrix must be orthogonal")
    factors, signs = _givens_factors(q)
    alphas = half_strings(m, state.spec.n_alpha)
    betas = half_strings(m, state.spec.n_beta)
    a_index = _string_index(alphas)
    b_index = _string_index(betas)
    amps = state.amplitudes.copy()

    # diag(signs) first: phase (-1)^{occupations on flipped orbitals}
    if np.any(signs < 0):
        neg = np.flatnonzero(signs < 0)
        mask = int(np.sum(1 << neg))
        a_phase = np.array([(-1.0) ** bin(s & mask).count("1") for s in alphas])
        b_phase = np.array([(-1.0) ** bin(s & mask).count("1") for s in betas])
        amps *= a_phase[None, :]
        amps *= b_phase[:, None]

    for p, c, s in reversed(factors):
        lo_a, hi_a = _pair_mixing(alphas, a_index, p)
        if lo_a.size:
            x = amps[:, lo_a].copy()
            y = amps[:, hi_a].copy()
            amps[:, lo_a] = c * x - s * y
            amps[:, hi_a] = s * x + c * y
        lo_b, hi_b = _pair_mixing(betas, b_index, p)
        if lo_b.size:
            x = amps[lo_b, :].copy()
            y = amps[hi_b, :].copy()
            amps[lo_b, :] = c * x - s * y
            amps[hi_b, :] = s * x + c * y
    return SectorStatevector(state.spec, amps)


def apply_density_phase(
    state: SectorStatevector, j_same: np.ndarray, j_opposite: np.ndarray
) -> SectorStatevector:
    """Apply exp(i J) where J couples occupation numbers pairwise."""
    m = state.spec.n_orbitals
    js = np.asarray(j_same, dtype=float)
    jo = np.asarray(j_opposite, dtype=float)
    for name, j in (("same-spin", js), ("opposite-spin", jo)):
        if j.shape != (m, m) or np.abs(j - j.T).max(initial=0.0) > 1e-10:
            raise ValidationError(f"{name} coupling matrix must be symmetric {m}x{m}")
    alphas = half_strings(m, state.spec.n_alpha)
    betas = half_strings(m, state.spec.n_beta)
    occ_a = np.array([[float((s >> i) & 1) for i in range(m)] for s in alphas])
    occ_b = np.array([[float((s >> i) & 1) for i in range(m)] for s in betas])
    same_a = np.einsum("xp,pq,xq->x", occ_a, js, occ_a)
    same_b = np.einsum("xp,pq,xq->x", occ_b, js, occ_b)
    cross = 2.0 * occ_b @ jo @ occ_a.T  # sums both (up,down) and (down,up) orderings
    phase = same_b[:, None] + same_a[None, :] + cross
    amps = state.amplitudes * np.exp(1j * phase)
    return SectorStatevector(state.spec, amps)


def build_state(
    params: LucjParameters,
    ref: Determinant,
    spec: SectorSpec,
    cap: int = STATE_CAP,
) -> SectorStatevector:
    """Construct the layered ansatz state exp(K) exp(iJ) exp(-K) ... |ref>.

    Layers are applied in index order: each layer rotates into the generator
    eigenbasis, applies its diagonal density-density phase, and rotates back.
    """
    if params.n_orbitals != spec.n_orbitals:
        raise ValidationError("parameter/sector orbital count mismatch")
    state = basis_state(spec, ref, cap=cap)
    for layer in params.layers:
        state = apply_orbital_rotation(state, -layer.kgen)
        state = apply_density_phase(state, layer.j_same, layer.j_opposite)
        state = apply_orbital_rotation(state, layer.kgen)
    return state


def sample(state: SectorStatevector, shots: int, seed: int | None = None) -> SampleSet:
    """Multinomial sampling of determinants from the state's distribution."""
    if shots < 1:
        raise ValidationError("shots must be at least 1")
    p = state.probabilities().ravel()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, p)
    m = state.spec.n_orbitals
    alphas = half_strings(m, state.spec.n_alpha)
    betas = half_strings(m, state.spec.n_beta)
    n_a = len(alphas)
    counts: dict[Determinant, int] = {}
    for flat in np.flatnonzero(draws):
        det = Determinant(alphas[flat % n_a], betas[flat // n_a])
        counts[det] = int(draws[flat])
    return SampleSet(m, counts, shots, seed, "simulated")


def load_samples(path, spec: SectorSpec) -> SampleSet:
    """Read a "bitstring count" sample file.

    Bitstrings are 2M characters: the leftmost M characters are the beta
    word and the rightmost M the alpha word, highest orbital first in each.
    No sector filtering happens here; counts of repeated bitstrings
    accumulate.
    """
    m = spec.n_orbitals
    counts: dict[Determinant, int] = {}
    total = 0
    try:
        fh = open(path)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 'bitstring count'")
            bits, count_str = parts
            if len(bits) != 2 * m or set(bits) - {"0", "1"}:
                raise ValidationError(
                    f"{path}:{lineno}: bitstring must be {2 * m} binary characters"
                )
            try:
                count = int(count_str)
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: malformed count {count_str!r}") from None
            if count <= 0:
                raise ValidationError(f"{path}:{lineno}: count must be positive")
            det = Determinant(int(bits[m:], 2), int(bits[:m], 2))
            counts[det] = counts.get(det, 0) + count
            total += count
    if not counts:
        raise ValidationError(f"{path}: no samples")
    return SampleSet(m, counts, total, None, "file")


def save_samples(samples: SampleSet, path) -> None:
    with open(path, "w") as fh:
        for det in sorted(samples.counts, key=lambda d: d.sort_key()):
            fh.write(f"{det.to_string(samples.n_orbitals)} {samples.counts[det]}\n")
