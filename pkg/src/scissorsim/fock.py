"""Truncated multimode Fock space: basis enumeration, states and reductions.

The basis keeps every occupation vector with total photon number at most
``n_max``. Photon-number-conserving optics never leaves such a space, so the
truncation is exact for linear-optical circuits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Iterable, Sequence, Union

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
EIGEN_TOL = 1e-10


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    array.flags.writeable = False
    return array


def _compositions(total: int, n_modes: int) -> list[tuple[int, ...]]:
    """All occupation vectors over ``n_modes`` summing to ``total``, lexicographically descending."""
    # stars and bars: choose bar positions among total + n_modes - 1 slots
    out = []
    for bars in combinations(range(total + n_modes - 1), n_modes - 1):
        occ = []
        prev = -1
        for b in bars:
            occ.append(b - prev - 1)
            prev = b
        occ.append(total + n_modes - 1 - prev - 1)
        out.append(tuple(occ))
    out.sort(reverse=True)
    return out


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Ordered set of occupation vectors over named modes.

    States are grouped by total photon number (ascending) and ordered
    lexicographically descending inside each sector, so ``(1, 0)`` precedes
    ``(0, 1)``. Two bases compare equal when their mode names and ``n_max``
    agree, which fixes the ordering completely.
    """

    mode_names: tuple[str, ...]
    n_max: int
    states: tuple[tuple[int, ...], ...] = field(repr=False)

    def __post_init__(self):
        lookup = {occ: i for i, occ in enumerate(self.states)}
        object.__setattr__(self, "_lookup", lookup)
        occ = np.array(self.states, dtype=int).reshape(len(self.states), len(self.mode_names))
        occ.flags.writeable = False
        object.__setattr__(self, "occupations", occ)

    def __eq__(self, other):
        if not isinstance(other, FockBasis):
            return NotImplemented
        return self.mode_names == other.mode_names and self.n_max == other.n_max

    def __hash__(self):
        return hash((self.mode_names, self.n_max))

    def __len__(self):
        return len(self.states)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def n_modes(self) -> int:
        return len(self.mode_names)

    def mode_index(self, mode: str) -> int:
        try:
            return self.mode_names.index(mode)
        except ValueError:
            raise KeyError(f"unknown mode {mode!r}; basis has {self.mode_names}") from None

    def index(self, occupation: Sequence[int]) -> int:
        occupation = tuple(int(n) for n in occupation)
        if len(occupation) != self.n_modes:
            raise ValueError(
                f"occupation {occupation} has {len(occupation)} entries, basis has {self.n_modes} modes"
            )
        if any(n < 0 for n in occupation):
            raise ValueError(f"negative occupation in {occupation}")
        if sum(occupation) > self.n_max:
            raise ValueError(f"occupation {occupation} exceeds n_max={self.n_max}")
        return self._lookup[occupation]

    def occupation(self, i: int) -> tuple[int, ...]:
        return self.states[i]

    def photon_numbers(self, modes: Union[str, Iterable[str]]) -> np.ndarray:
        """Photon count per basis state, summed over ``modes``."""
        if isinstance(modes, str):
            modes = (modes,)
        cols = [self.mode_index(m) for m in modes]
        return self.occupations[:, cols].sum(axis=1)


@lru_cache(maxsize=None)
def _cached_basis(mode_names: tuple[str, ...], n_max: int) -> FockBasis:
    states = []
    for total in range(n_max + 1):
        states.extend(_compositions(total, len(mode_names)))
    return FockBasis(mode_names, n_max, tuple(states))


def build_basis(mode_names: Sequence[str], n_max: int) -> FockBasis:
    """Enumerate all occupation vectors over ``mode_names`` with at most ``n_max`` photons.

    The result has ``binomial(n_max + M, M)`` states and is cached, so equal
    arguments return the same object.
    """
    names = tuple(mode_names)
    if not names:
        raise ValueError("at least one mode is required")
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate mode names in {names}")
    if int(n_max) != n_max or n_max < 0:
        raise ValueError(f"n_max must be a non-negative integer, got {n_max}")
    basis = _cached_basis(names, int(n_max))
    assert basis.dim == comb(int(n_max) + len(names), len(names))
    return basis


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure (possibly sub-normalized) state over a :class:`FockBasis`."""

    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.basis.dim,):
            raise ValueError(f"amplitudes have shape {amps.shape}, expected ({self.basis.dim},)")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm_sq - 1.0) <= NORM_TOL

    def normalized(self) -> "StateVector":
        n = self.norm_sq
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.basis, self.amplitudes / np.sqrt(n))

    def amplitude(self, occupation: Sequence[int]) -> complex:
        return complex(self.amplitudes[self.basis.index(occupation)])


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Mixed state over a :class:`FockBasis`. Trace may be below one after heralding."""

    basis: FockBasis
    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        d = self.basis.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix has shape {mat.shape}, expected ({d}, {d})")
        object.__setattr__(self, "matrix", mat)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "DensityOperator":
        tr = self.trace
        if tr <= 0:
            raise ValueError("cannot normalize an operator with zero trace")
        return DensityOperator(self.basis, self.matrix / tr)

    def element(self, bra: Sequence[int], ket: Sequence[int]) -> complex:
        """Matrix element ``<bra|rho|ket>``."""
        return complex(self.matrix[self.basis.index(bra), self.basis.index(ket)])

    def photon_distribution(self, modes: Union[str, Iterable[str]]) -> np.ndarray:
        """Probability of each total photon number found in ``modes`` (length ``n_max + 1``)."""
        counts = self.basis.photon_numbers(modes)
        diag = np.diag(self.matrix).real
        return np.bincount(counts, weights=diag, minlength=self.basis.n_max + 1)

    def expectation(self, operator: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ operator))

    def validate(self) -> None:
        """Raise ``ValueError`` unless the operator is Hermitian, PSD and has trace in [0, 1]."""
        m = self.matrix
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("operator is not Hermitian")
        eig = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if eig.size and eig.min() < -EIGEN_TOL:
            raise ValueError(f"operator has negative eigenvalue {eig.min():.3e}")
        tr = self.trace
        if tr < -NORM_TOL or tr > 1 + NORM_TOL:
            raise ValueError(f"trace {tr} outside [0, 1]")


State = Union[StateVector, DensityOperator]


def pure_state(basis: FockBasis, terms) -> StateVector:
    """State with the given ``(occupation, amplitude)`` terms; not normalized.

    ``terms`` may be a mapping or an iterable of pairs. Repeated occupations add.
    """
    if hasattr(terms, "items"):
        terms = terms.items()
    amps = np.zeros(basis.dim, dtype=complex)
    for occ, amp in terms:
        amp = complex(amp)
        if not np.isfinite(amp):
            raise ValueError(f"non-finite amplitude for {occ}")
        amps[basis.index(occ)] += amp
    return StateVector(basis, amps)


def vacuum(basis: FockBasis) -> StateVector:
    return pure_state(basis, [((0,) * basis.n_modes, 1.0)])


def to_density(psi: State) -> DensityOperator:
    """Outer product ``|psi><psi|``; a density operator passes through unchanged."""
    if isinstance(psi, DensityOperator):
        return psi
    a = psi.amplitudes
    return DensityOperator(psi.basis, np.outer(a, a.conj()))


def mix(components) -> DensityOperator:
    """Convex combination of ``(weight, state)`` pairs sharing one basis."""
    components = list(components)
    if not components:
        raise ValueError("mix needs at least one component")
    basis = components[0][1].basis
    total = np.zeros((basis.dim, basis.dim), dtype=complex)
    for weight, state in components:
        if weight < 0:
            raise ValueError(f"negative weight {weight}")
        if state.basis != basis:
            raise ValueError(f"basis mismatch: {state.basis.mode_names} vs {basis.mode_names}")
        total += weight * to_density(state).matrix
    return DensityOperator(basis, total)


@lru_cache(maxsize=256)
def _embedding(source: FockBasis, target: FockBasis) -> np.ndarray:
    cols = [target.mode_index(m) for m in source.mode_names]
    idx = np.empty(source.dim, dtype=int)
    for i, occ in enumerate(source.states):
        full = [0] * target.n_modes
        for c, n in zip(cols, occ):
            full[c] = n
        idx[i] = target._lookup.get(tuple(full), -1)
    idx.flags.writeable = False
    return idx


def embed(state: State, basis: FockBasis) -> State:
    """Place ``state`` into a basis over a superset of its modes; new modes are vacuum."""
    missing = set(state.basis.mode_names) - set(basis.mode_names)
    if missing:
        raise KeyError(f"target basis lacks modes {sorted(missing)}")
    if basis.n_max < state.basis.n_max:
        raise ValueError("target basis must not lower n_max")
    idx = _embedding(state.basis, basis)
    if isinstance(state, StateVector):
        amps = np.zeros(basis.dim, dtype=complex)
        amps[idx] = state.amplitudes
        return StateVector(basis, amps)
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    mat[np.ix_(idx, idx)] = state.matrix
    return DensityOperator(basis, mat)


def tensor(first: State, second: State, n_max: int | None = None) -> State:
    """Product state over the concatenated modes.

    Components with more than ``n_max`` photons in total are dropped; the
    default ``n_max`` is the sum of both inputs' cutoffs, which loses nothing.
    """
    overlap = set(first.basis.mode_names) & set(second.basis.mode_names)
    if overlap:
        raise ValueError(f"modes {sorted(overlap)} appear in both factors")
    if n_max is None:
        n_max = first.basis.n_max + second.basis.n_max
    basis = build_basis(first.basis.mode_names + second.basis.mode_names, n_max)
    m1 = first.basis.n_modes
    tot1 = first.basis.occupations.sum(axis=1)
    tot2 = second.basis.occupations.sum(axis=1)
    rows, cols, targets = [], [], []
    for i, o1 in enumerate(first.basis.states):
        for j, o2 in enumerate(second.basis.states):
            if tot1[i] + tot2[j] <= n_max:
                rows.append(i)
                cols.append(j)
                targets.append(basis._lookup[o1 + o2])
    rows, cols, targets = np.array(rows), np.array(cols), np.array(targets)
    assert basis.n_modes == m1 + second.basis.n_modes
    if isinstance(first, StateVector) and isinstance(second, StateVector):
        amps = np.zeros(basis.dim, dtype=complex)
        amps[targets] = first.amplitudes[rows] * second.amplitudes[cols]
        return StateVector(basis, amps)
    r1, r2 = to_density(first).matrix, to_density(second).matrix
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    mat[np.ix_(targets, targets)] = r1[np.ix_(rows, rows)] * r2[np.ix_(cols, cols)]
    return DensityOperator(basis, mat)


@lru_cache(maxsize=256)
def _trace_plan(basis: FockBasis, keep: tuple[str, ...]):
    keep_cols = [basis.mode_index(m) for m in keep]
    drop_cols = [i for i in range(basis.n_modes) if i not in keep_cols]
    reduced = build_basis(keep, basis.n_max)
    groups: dict[tuple[int, ...], tuple[list[int], list[int]]] = {}
    for i, occ in enumerate(basis.states):
        env = tuple(occ[c] for c in drop_cols)
        kept = tuple(occ[c] for c in keep_cols)
        full_idx, red_idx = groups.setdefault(env, ([], []))
        full_idx.append(i)
        red_idx.append(reduced._lookup[kept])
    plan = [(np.array(f), np.array(r)) for f, r in groups.values()]
    return reduced, plan


def partial_trace(rho: State, keep: Iterable[str]) -> DensityOperator:
    """Reduce onto the modes in ``keep``; their order follows the original basis.

    The reduced basis keeps the parent ``n_max``.
    """
    rho = to_density(rho)
    keep = set(keep)
    if not keep:
        raise ValueError("keep must name at least one mode")
    unknown = keep - set(rho.basis.mode_names)
    if unknown:
        raise KeyError(f"unknown modes {sorted(unknown)}")
    ordered = tuple(m for m in rho.basis.mode_names if m in keep)
    if ordered == rho.basis.mode_names:
        return rho
    reduced, plan = _trace_plan(rho.basis, ordered)
    out = np.zeros((reduced.dim, reduced.dim), dtype=complex)
    for full_idx, red_idx in plan:
        out[np.ix_(red_idx, red_idx)] += rho.matrix[np.ix_(full_idx, full_idx)]
    return DensityOperator(reduced, out)


def trace_out(rho: State, modes: Iterable[str]) -> DensityOperator:
    """Partial trace over ``modes`` (complement of :func:`partial_trace`)."""
    drop = set(modes)
    unknown = drop - set(rho.basis.mode_names)
    if unknown:
        raise KeyError(f"unknown modes {sorted(unknown)}")
    return partial_trace(rho, [m for m in rho.basis.mode_names if m not in drop])


def rename_modes(state: State, mapping: dict[str, str]) -> State:
    """Relabel modes; the occupation ordering is rebuilt for the new names."""
    names = tuple(mapping.get(m, m) for m in state.basis.mode_names)
    target = build_basis(names, state.basis.n_max)
    idx = np.array([target._lookup[occ] for occ in state.basis.states])
    if isinstance(state, StateVector):
        amps = np.zeros(target.dim, dtype=complex)
        amps[idx] = state.amplitudes
        return StateVector(target, amps)
    mat = np.zeros((target.dim, target.dim), dtype=complex)
    mat[np.ix_(idx, idx)] = state.matrix
    return DensityOperator(target, mat)


def operator_distance(a: State, b: State) -> float:
    """Spectral norm of the difference of two operators on the same basis."""
    if a.basis != b.basis:
        raise ValueError("basis mismatch")
    return float(np.linalg.norm(to_density(a).matrix - to_density(b).matrix, ord=2))


def fidelity(a: State, b: State) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(a) b sqrt(a)))**2``; cheap when either side is pure."""
    if a.basis != b.basis:
        raise ValueError("basis mismatch")
    if isinstance(a, StateVector):
        return float(np.vdot(a.amplitudes, to_density(b).matrix @ a.amplitudes).real)
    if isinstance(b, StateVector):
        return fidelity(b, a)
    sa = _psd_sqrt(a.matrix)
    inner = np.linalg.eigvalsh(sa @ b.matrix @ sa)
    return float(np.sum(np.sqrt(np.clip(inner, 0, None))) ** 2)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
