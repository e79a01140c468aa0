"""Photon-pair sources and Hong-Ou-Mandel interference."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .detection import CLICK, DetectorModel, herald, HeraldOutcome
from .fock import StateVector, build_basis, embed, pure_state
from .optics import Beamsplitter, apply_beamsplitter, apply_phase

UNMATCHED = "~"


def unmatched(mode: str) -> str:
    """Label of the internal mode that carries the distinguishable part of ``mode``."""
    return mode + UNMATCHED


@dataclass(frozen=True)
class SpdcSource:
    """Two-mode squeezed vacuum ``sum_k squeezing**k |k, k>`` with partial distinguishability.

    ``overlap`` is the wavepacket overlap between the signal photon and the
    photon it later interferes with; ``abs(overlap)**2 == 1`` means the two
    are indistinguishable.
    """

    squeezing: float = 0.0
    overlap: complex = 1.0

    def __post_init__(self):
        if not self.squeezing >= 0:
            raise ValueError(f"squeezing must be non-negative, got {self.squeezing}")
        if abs(self.overlap) > 1 + 1e-12:
            raise ValueError(f"|overlap| must not exceed 1, got {abs(self.overlap)}")

    @property
    def indistinguishability(self) -> float:
        return min(abs(self.overlap) ** 2, 1.0)


def pair_state(src: SpdcSource, modes: Sequence[str] = ("signal", "idler"), n_max: int = 4) -> StateVector:
    """Truncated, renormalized two-mode squeezed vacuum on ``modes``."""
    signal, idler = modes
    basis = build_basis((signal, idler), n_max)
    terms = [((k, k), src.squeezing**k) for k in range(n_max // 2 + 1)]
    return pure_state(basis, terms).normalized()


def single_pair(modes: Sequence[str] = ("signal", "idler"), n_max: int = 2) -> StateVector:
    """Exactly one photon in each of the two modes."""
    return pure_state(build_basis(tuple(modes), n_max), [((1, 1), 1.0)])


def apply_distinguishability(state, matched: str, unmatched_mode: str, overlap: complex):
    """Replace ``matched^dag`` by ``overlap matched^dag + sqrt(1 - |overlap|^2) unmatched^dag``.

    ``unmatched_mode`` must be present in the basis and empty.
    """
    mag = min(abs(overlap), 1.0)
    out = apply_beamsplitter(state, Beamsplitter(matched, unmatched_mode, mag**2))
    phase = float(np.angle(overlap)) if mag > 0 else 0.0
    return apply_phase(out, matched, phase) if phase else out


def distinguishable_pair(
    src: SpdcSource,
    modes: Sequence[str] = ("signal", unmatched("signal"), "idler"),
    n_max: int = 4,
    single: bool = False,
) -> StateVector:
    """Pair state whose signal photons overlap the idler's wavepacket by ``src.overlap``.

    With ``single=True`` the source emits exactly one pair instead of a
    squeezed vacuum.
    """
    matched, unmatched_mode, idler = modes
    base = single_pair((matched, idler), n_max) if single else pair_state(src, (matched, idler), n_max)
    basis = build_basis((matched, unmatched_mode, idler), n_max)
    return apply_distinguishability(embed(base, basis), matched, unmatched_mode, src.overlap)


def _hom_output(src: SpdcSource, n_max: int, single: bool):
    s, i = "signal", "idler"
    pair = distinguishable_pair(src, (s, unmatched(s), i), n_max, single=single)
    basis = build_basis((s, unmatched(s), i, unmatched(i)), n_max)
    state = embed(pair, basis)
    state = apply_beamsplitter(state, Beamsplitter(s, i, 0.5))
    return apply_beamsplitter(state, Beamsplitter(unmatched(s), unmatched(i), 0.5))


def hom_coincidence(
    src: SpdcSource,
    detector: DetectorModel | None = None,
    n_max: int = 4,
    single: bool = False,
) -> float:
    """Probability that both outputs of a 50/50 beamsplitter click."""
    det = detector or DetectorModel.threshold()
    out = _hom_output(src, 2 if single else n_max, single)
    first = herald(out, ("signal", unmatched("signal")), det, CLICK)
    if first.probability == 0:
        return 0.0
    return herald(first.conditioned_state, ("idler", unmatched("idler")), det, CLICK).probability


def hom_visibility(
    src: SpdcSource,
    detector: DetectorModel | None = None,
    n_max: int = 4,
    single: bool = False,
) -> float:
    """Dip depth ``1 - C(overlap) / C(0)`` relative to fully distinguishable photons."""
    reference = hom_coincidence(SpdcSource(src.squeezing, 0.0), detector, n_max, single)
    if reference == 0:
        return 0.0
    return 1.0 - hom_coincidence(src, detector, n_max, single) / reference


def delay_overlap(delay: float, width: float, peak: complex = 1.0) -> complex:
    """Gaussian wavepacket overlap ``peak * exp(-(delay/width)**2)``."""
    if width <= 0:
        raise ValueError("width must be positive")
    return peak * math.exp(-((delay / width) ** 2))


def hom_dip(
    src: SpdcSource,
    delays: Sequence[float],
    width: float,
    detector: DetectorModel | None = None,
    n_max: int = 4,
    single: bool = False,
) -> tuple[list[tuple[float, float]], float]:
    """Coincidence probability against delay, and the dip visibility at zero delay."""
    rows = []
    for d in delays:
        s = SpdcSource(src.squeezing, delay_overlap(d, width, src.overlap))
        rows.append((float(d), hom_coincidence(s, detector, n_max, single)))
    return rows, hom_visibility(src, detector, n_max, single)


def heralded_single_photon(
    src: SpdcSource, detector: DetectorModel | None = None, n_max: int = 4
) -> HeraldOutcome:
    """Signal-mode state conditioned on an idler click."""
    det = detector or DetectorModel.threshold()
    return herald(pair_state(src, ("signal", "idler"), n_max), "idler", det, CLICK)
