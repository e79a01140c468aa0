"""Detector POVMs and heralded conditioning.

Every POVM here is diagonal in the photon-number basis of the detected
mode(s), so a detector is fully described by a weight per photon number.
A detector may watch several modes at once (for example the matched and
unmatched internal modes of one spatial port); it then responds to their
summed photon number.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import comb
from typing import Iterable, Union

import numpy as np

from .fock import DensityOperator, State, partial_trace, to_density

CLICK = "click"
NO_CLICK = "no_click"
HERALD_TOL = 1e-14

Outcome = Union[int, str]


class DetectorKind(str, Enum):
    IDEAL_PNR = "ideal_pnr"
    THRESHOLD = "threshold"


@dataclass(frozen=True)
class DetectorModel:
    """Photon detector with efficiency and a dark-count probability per gate.

    ``ideal_pnr`` resolves photon number; with ``efficiency < 1`` each photon
    is registered independently, and a dark count adds one spurious count.
    ``threshold`` only reports click / no click. Every kind also accepts the
    coarse outcomes ``"click"`` (at least one count) and ``"no_click"``.
    """

    kind: DetectorKind = DetectorKind.IDEAL_PNR
    efficiency: float = 1.0
    dark_count_prob: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DetectorKind(self.kind))
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must lie in [0, 1], got {self.efficiency}")
        if not 0.0 <= self.dark_count_prob < 1.0:
            raise ValueError(f"dark_count_prob must lie in [0, 1), got {self.dark_count_prob}")

    @classmethod
    def threshold(cls, efficiency: float = 1.0, dark_count_prob: float = 0.0) -> "DetectorModel":
        return cls(DetectorKind.THRESHOLD, efficiency, dark_count_prob)

    @classmethod
    def pnr(cls, efficiency: float = 1.0, dark_count_prob: float = 0.0) -> "DetectorModel":
        return cls(DetectorKind.IDEAL_PNR, efficiency, dark_count_prob)

    @property
    def resolves_number(self) -> bool:
        return self.kind is DetectorKind.IDEAL_PNR

    def outcomes(self, n_max: int) -> list[Outcome]:
        """Fine-grained outcome labels, complete for states with at most ``n_max`` photons."""
        if self.resolves_number:
            top = n_max + 1 if self.dark_count_prob > 0 else n_max
            return list(range(top + 1))
        return [NO_CLICK, CLICK]

    def _count_matrix(self, n_max: int) -> np.ndarray:
        # entry [k, n]: probability of k registered counts given n photons
        eta, pd = self.efficiency, self.dark_count_prob
        n = np.arange(n_max + 1)
        counts = np.zeros((n_max + 2, n_max + 1))
        for k in range(n_max + 1):
            counts[k] = [comb(int(m), k) * eta**k * (1 - eta) ** (m - k) if m >= k else 0.0 for m in n]
        shifted = np.vstack([np.zeros(n_max + 1), counts[:-1]])
        return (1 - pd) * counts + pd * shifted

    def weights(self, outcome: Outcome, n_max: int) -> np.ndarray:
        """Diagonal of the POVM element for ``outcome``, indexed by photon number 0..n_max."""
        n = np.arange(n_max + 1)
        no_click = (1 - self.dark_count_prob) * (1 - self.efficiency) ** n
        if outcome == NO_CLICK:
            return no_click
        if outcome == CLICK:
            return 1.0 - no_click
        if not self.resolves_number or isinstance(outcome, str) or isinstance(outcome, bool):
            raise ValueError(f"outcome {outcome!r} is not valid for a {self.kind.value} detector")
        k = int(outcome)
        if k < 0:
            raise ValueError(f"negative count outcome {k}")
        counts = self._count_matrix(n_max)
        if k >= counts.shape[0]:
            return np.zeros(n_max + 1)
        return counts[k]


def herald_outcome(det: DetectorModel) -> Outcome:
    """Outcome that signals one heralding photon: exactly one count, or a click."""
    return 1 if det.resolves_number else CLICK


def povm_elements(det: DetectorModel, n_max: int) -> list[tuple[Outcome, np.ndarray]]:
    """Single-mode POVM as ``(outcome, operator)`` pairs on photon numbers 0..n_max."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    return [(o, np.diag(det.weights(o, n_max)).astype(complex)) for o in det.outcomes(n_max)]


@dataclass(frozen=True)
class HeraldOutcome:
    conditioned_state: DensityOperator
    probability: float

    def normalized(self) -> DensityOperator:
        if self.probability == 0:
            raise ValueError("impossible herald has no conditional state")
        return DensityOperator(self.conditioned_state.basis, self.conditioned_state.matrix / self.probability)


def _modes_tuple(mode: Union[str, Iterable[str]]) -> tuple[str, ...]:
    return (mode,) if isinstance(mode, str) else tuple(mode)


def herald(state: State, mode: Union[str, Iterable[str]], det: DetectorModel, outcome: Outcome) -> HeraldOutcome:
    """Condition on ``outcome`` at ``mode`` and trace the detected mode(s) out.

    The conditioned state is sub-normalized; its trace is the outcome
    probability. Outcomes below ``HERALD_TOL`` return probability 0 with a zero
    operator so that sweeps across degenerate settings keep running.
    """
    rho = to_density(state)
    modes = _modes_tuple(mode)
    if det.resolves_number and isinstance(outcome, int) and outcome not in det.outcomes(rho.basis.n_max):
        raise ValueError(f"outcome {outcome} impossible with n_max={rho.basis.n_max}")
    w = det.weights(outcome, rho.basis.n_max)[rho.basis.photon_numbers(modes)]
    s = np.sqrt(w)
    projected = DensityOperator(rho.basis, s[:, None] * rho.matrix * s[None, :])
    keep = [m for m in rho.basis.mode_names if m not in modes]
    if keep:
        reduced = partial_trace(projected, keep)
    else:
        reduced = projected
    p = reduced.trace
    if p < HERALD_TOL:
        zero = np.zeros_like(reduced.matrix)
        return HeraldOutcome(DensityOperator(reduced.basis, zero), 0.0)
    return HeraldOutcome(reduced, min(p, 1.0))


def outcome_probabilities(state: State, mode: Union[str, Iterable[str]], det: DetectorModel) -> dict:
    rho = to_density(state)
    dist = rho.photon_distribution(_modes_tuple(mode))
    return {o: float(det.weights(o, rho.basis.n_max) @ dist) for o in det.outcomes(rho.basis.n_max)}
