"""Linear-optical elements acting on named modes of a Fock-space state.

Beamsplitter convention (creation operators, ``r = sqrt(1 - t)``)::

    a^dag -> sqrt(t) a^dag + e^{i phase} r b^dag
    b^dag -> e^{-i phase} r a^dag - sqrt(t) b^dag

At ``t = 1/2`` the outputs of inputs ``c`` and ``in`` are ``(c + in)/sqrt(2)``
and ``(c - in)/sqrt(2)``. The 2x2 mode matrix is Hermitian and unitary, so
applying the same beamsplitter twice is the identity. Heralded probabilities
do not depend on this choice of phases.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial, sqrt

import numpy as np

from .fock import DensityOperator, FockBasis, State, StateVector, build_basis, embed, partial_trace, to_density


def _check_ratio(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class Beamsplitter:
    mode_a: str
    mode_b: str
    transmission: float = 0.5
    phase: float = 0.0

    def __post_init__(self):
        _check_ratio("transmission", self.transmission)
        if self.mode_a == self.mode_b:
            raise ValueError("beamsplitter needs two distinct modes")

    def mode_matrix(self) -> np.ndarray:
        """Column ``j`` holds the output coefficients of input creation operator ``j``."""
        t = sqrt(self.transmission)
        r = sqrt(1.0 - self.transmission)
        e = np.exp(1j * self.phase)
        return np.array([[t, r / e], [r * e, -t]], dtype=complex)


@dataclass(frozen=True)
class LossChannel:
    mode: str
    eta: float

    def __post_init__(self):
        _check_ratio("eta", self.eta)


def _binomial_poly(x: complex, y: complex, n: int) -> np.ndarray:
    # coefficient k multiplies A^k B^(n-k) in (x A + y B)^n
    return np.array([comb(n, k) * x**k * y ** (n - k) for k in range(n + 1)], dtype=complex)


@lru_cache(maxsize=512)
def beamsplitter_unitary(basis: FockBasis, bs: Beamsplitter) -> np.ndarray:
    """Dense Fock-space matrix of ``bs`` on ``basis``."""
    ia, ib = basis.mode_index(bs.mode_a), basis.mode_index(bs.mode_b)
    m = bs.mode_matrix()
    u = np.zeros((basis.dim, basis.dim), dtype=complex)
    for i, occ in enumerate(basis.states):
        na, nb = occ[ia], occ[ib]
        poly = np.convolve(_binomial_poly(m[0, 0], m[1, 0], na), _binomial_poly(m[0, 1], m[1, 1], nb))
        total = na + nb
        norm = sqrt(factorial(na) * factorial(nb))
        out = list(occ)
        for p, coef in enumerate(poly):
            if coef == 0:
                continue
            q = total - p
            out[ia], out[ib] = p, q
            u[basis._lookup[tuple(out)], i] = coef * sqrt(factorial(p) * factorial(q)) / norm
    u.flags.writeable = False
    return u


def _apply_unitary(state: State, u: np.ndarray) -> State:
    if isinstance(state, StateVector):
        return StateVector(state.basis, u @ state.amplitudes)
    return DensityOperator(state.basis, u @ state.matrix @ u.conj().T)


def apply_beamsplitter(state: State, bs: Beamsplitter) -> State:
    return _apply_unitary(state, beamsplitter_unitary(state.basis, bs))


def apply_phase(state: State, mode: str, phi: float) -> State:
    """Multiply each amplitude by ``exp(i n phi)``, ``n`` being the photon count in ``mode``."""
    n = state.basis.photon_numbers(mode)
    d = np.exp(1j * phi * n)
    if isinstance(state, StateVector):
        return StateVector(state.basis, d * state.amplitudes)
    return DensityOperator(state.basis, d[:, None] * state.matrix * d.conj()[None, :])


def _environment_name(basis: FockBasis, mode: str) -> str:
    name = f"{mode}.env"
    while name in basis.mode_names:
        name += "'"
    return name


def apply_loss(state: State, loss: LossChannel) -> DensityOperator:
    """Transmit ``loss.mode`` with probability ``eta`` per photon.

    The mode is mixed with a fresh vacuum environment mode on a beamsplitter of
    transmission ``eta`` and the environment is traced out. Both the embedding
    and the trace keep ``n_max``, so no amplitude is lost to truncation.
    """
    basis = state.basis
    basis.mode_index(loss.mode)
    if loss.eta == 1.0:
        return to_density(state)
    env = _environment_name(basis, loss.mode)
    big = build_basis(basis.mode_names + (env,), basis.n_max)
    enlarged = embed(to_density(state), big)
    mixed = apply_beamsplitter(enlarged, Beamsplitter(loss.mode, env, loss.eta))
    return partial_trace(mixed, basis.mode_names)
