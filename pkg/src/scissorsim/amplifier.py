"""Heralded single-photon amplifier and the interferometer used to characterize it.

Mode labels:

* ``in``  input mode; ``a`` its partner after the input-preparation splitter
* ``c``, ``out``  the two outputs of the auxiliary photon's variable splitter
* ``d+``, ``d-``  outputs of the 50/50 splitter combining ``c`` and ``in``
* ``e+``, ``e-``  outputs of the 50/50 splitter combining ``a`` and ``out``

Photons that are partly distinguishable carry an extra internal mode per
spatial mode, labelled with a trailing ``~`` (see :func:`scissorsim.source.unmatched`).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import optimize

from .detection import CLICK, DetectorModel, herald, herald_outcome
from .fock import (
    DensityOperator,
    State,
    StateVector,
    build_basis,
    embed,
    mix,
    partial_trace,
    pure_state,
    rename_modes,
    tensor,
    to_density,
    trace_out,
)
from .optics import Beamsplitter, LossChannel, apply_beamsplitter, apply_loss, apply_phase
from .source import SpdcSource, distinguishable_pair, pair_state, single_pair, unmatched

IN, A, C, OUT = "in", "a", "c", "out"
D_PLUS, D_MINUS = "d+", "d-"
E_PLUS, E_MINUS = "e+", "e-"

DEFAULT_PHASE_POINTS = 64
THREADS_ENV = "SCISSORSIM_THREADS"


def default_phase_grid(points: int = DEFAULT_PHASE_POINTS) -> np.ndarray:
    return 2 * np.pi * np.arange(points) / points


# --- closed-form oracles -------------------------------------------------------


def normalization(t: float, alpha_sq: float) -> float:
    """Weight ``(1 - t) alpha^2 + t beta^2`` of the ideal heralded output before renormalizing."""
    return (1 - t) * alpha_sq + t * (1 - alpha_sq)


def gain_ideal(t: float, alpha_sq: float) -> float:
    """Gain with a photon-number-resolving herald: ``t / (t + alpha^2 (1 - 2t))``."""
    den = t + alpha_sq * (1 - 2 * t)
    if abs(den) < 1e-15:
        raise ValueError(f"gain undefined at t={t}, alpha_sq={alpha_sq}")
    return t / den


def gain_nonpnr(t: float, alpha_sq: float) -> float:
    """Gain with a threshold herald: ``t / (1 - alpha^2 t)``."""
    if alpha_sq * t >= 1:
        raise ValueError(f"gain undefined at t={t}, alpha_sq={alpha_sq}")
    return t / (1 - alpha_sq * t)


def vmax(t: float) -> float:
    """Largest fringe visibility for an amplifier transmission ``t``: ``2 sqrt(t (1 - t))``."""
    if not 0 <= t <= 1:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return 2 * math.sqrt(t * (1 - t))


def unity_crossing(fn: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-9) -> float:
    """Bisect for ``fn(t) == 1`` on ``[lo, hi]``."""
    return optimize.bisect(lambda x: fn(x) - 1.0, lo, hi, xtol=xtol)


# --- parameters and results ----------------------------------------------------


def _ratio(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class AmplifierParams:
    """Settings of the amplifier and its characterization interferometer.

    ``vbs2_t`` is the fraction of the input photon sent into ``in`` by the
    preparation splitter, so it equals ``1 - alpha_sq``; it is derived when
    omitted and must agree when given. Losses are intensity transmissions:
    ``loss_in`` before the combining splitter, ``loss_aux`` before the
    auxiliary splitter, ``loss_out`` after it. ``coincidence_detector`` is the
    probe detector in coincidence with the herald.
    """

    t: float = 0.5
    alpha_sq: float = 0.5
    vbs2_t: Optional[float] = None
    loss_in: float = 1.0
    loss_aux: float = 1.0
    loss_out: float = 1.0
    herald_detector: DetectorModel = field(default_factory=DetectorModel)
    coincidence_detector: DetectorModel = field(default_factory=DetectorModel.threshold)
    phi: float = 0.0
    input_prep: str = "vbs2"

    def __post_init__(self):
        for name in ("t", "alpha_sq", "loss_in", "loss_aux", "loss_out"):
            _ratio(name, getattr(self, name))
        if self.vbs2_t is None:
            object.__setattr__(self, "vbs2_t", 1.0 - self.alpha_sq)
        else:
            _ratio("vbs2_t", self.vbs2_t)
            if abs(self.vbs2_t - (1.0 - self.alpha_sq)) > 1e-12:
                raise ValueError(f"vbs2_t={self.vbs2_t} inconsistent with alpha_sq={self.alpha_sq}")
        if self.input_prep not in ("vbs2", "mixture"):
            raise ValueError(f"input_prep must be 'vbs2' or 'mixture', got {self.input_prep!r}")

    @property
    def beta_sq(self) -> float:
        return 1.0 - self.alpha_sq

    def with_(self, **changes) -> "AmplifierParams":
        if "alpha_sq" in changes and "vbs2_t" not in changes:
            changes["vbs2_t"] = None
        return replace(self, **changes)


@dataclass(frozen=True)
class AmplifierResult:
    output_state: DensityOperator
    herald_probability: float
    success_probability_total: float
    gain: float
    single_photon_weight_in: float
    single_photon_weight_out: float
    output_state_minus: Optional[DensityOperator] = None


@dataclass(frozen=True)
class FringeRecord:
    phases: np.ndarray
    coincidence: np.ndarray
    herald_probability: float
    visibility: float


@dataclass(frozen=True)
class GainMeasurement:
    """Count-ratio gain estimate from the two blocking configurations."""

    singles_in: float
    coincidences_in: float
    singles_out: float
    coincidences_out: float
    gain_dark_free: float

    @property
    def p_in(self) -> float:
        return self.coincidences_in / self.singles_in

    @property
    def p_out(self) -> float:
        return self.coincidences_out / self.singles_out

    @property
    def gain(self) -> float:
        return self.p_out / self.p_in


@dataclass(frozen=True)
class GainRow:
    t: float
    gain_ideal: float
    gain_nonpnr: float
    gain_simulated: float
    vmax: float
    visibility_simulated: float


# --- input states --------------------------------------------------------------


def input_state(params: AmplifierParams) -> DensityOperator:
    """Vacuum / one-photon mixture on ``in`` with vacuum weight ``alpha_sq``."""
    if params.input_prep == "vbs2":
        photon = pure_state(build_basis((IN, A), 1), [((1, 0), 1.0)])
        split = apply_beamsplitter(photon, Beamsplitter(IN, A, params.vbs2_t))
        return partial_trace(split, [IN])
    basis = build_basis((IN,), 1)
    return mix(
        [
            (params.alpha_sq, pure_state(basis, [((0,), 1.0)])),
            (params.beta_sq, pure_state(basis, [((1,), 1.0)])),
        ]
    )


def coherent_input(alpha: complex, beta: complex) -> StateVector:
    """Superposition ``alpha |0> + beta |1>`` on ``in``."""
    return pure_state(build_basis((IN,), 1), [((0,), alpha), ((1,), beta)])


def phase_state(phi: float = 0.0) -> StateVector:
    """Two-photon source state ``e^{i phi}|1,1>/sqrt2 + |2,0>/2 + e^{2i phi}|0,2>/2``.

    The first label counts photons entering the auxiliary splitter (mode
    ``out``), the second those entering the input-preparation splitter (``in``).
    """
    basis = build_basis((IN, OUT), 2)
    return pure_state(
        basis,
        [
            ((1, 1), np.exp(1j * phi) / math.sqrt(2)),
            ((0, 2), 0.5),
            ((2, 0), 0.5 * np.exp(2j * phi)),
        ],
    )


def dephase(state: State, mode: str, points: int = DEFAULT_PHASE_POINTS) -> DensityOperator:
    """Uniform average of ``state`` over ``points`` phases applied to ``mode``."""
    return mix([(1.0 / points, apply_phase(state, mode, phi)) for phi in default_phase_grid(points)])


# --- amplifier -----------------------------------------------------------------


def _lossy(state: State, mode: str, eta: float) -> State:
    return state if eta == 1.0 else apply_loss(state, LossChannel(mode, eta))


def _single_photon_weight(rho: DensityOperator, mode: str) -> float:
    dist = rho.photon_distribution(mode)
    return float(dist[1]) if dist.size > 1 else 0.0


def amplify(state: State, params: AmplifierParams) -> AmplifierResult:
    """Run an arbitrary single-mode input on ``in`` through the amplifier.

    The herald is one photon at ``d+`` (exactly one count for number-resolving
    detectors, a click otherwise) with ``d-`` unobserved; the result also
    carries the ``d-`` herald for symmetry checks.
    """
    rho_in = to_density(state)
    if rho_in.basis.mode_names != (IN,):
        raise ValueError(f"input must live on mode {IN!r} only, got {rho_in.basis.mode_names}")
    w_in = _single_photon_weight(rho_in, IN)
    n_max = rho_in.basis.n_max + 1
    aux = pure_state(build_basis((C, OUT), 1), [((0, 1), 1.0)])
    st = tensor(rho_in, aux, n_max)
    st = apply_phase(st, IN, params.phi)
    st = _lossy(st, OUT, params.loss_aux)
    st = apply_beamsplitter(st, Beamsplitter(OUT, C, params.t))
    st = _lossy(st, OUT, params.loss_out)
    st = _lossy(st, IN, params.loss_in)
    st = apply_beamsplitter(st, Beamsplitter(C, IN, 0.5))
    st = rename_modes(st, {C: D_PLUS, IN: D_MINUS})

    det = params.herald_detector
    outcome = herald_outcome(det)
    plus = herald(trace_out(st, [D_MINUS]), D_PLUS, det, outcome)
    minus = herald(trace_out(st, [D_PLUS]), D_MINUS, det, outcome)

    if plus.probability == 0:
        out_state = plus.conditioned_state
        w_out, gain = float("nan"), float("nan")
    else:
        out_state = plus.normalized()
        w_out = _single_photon_weight(out_state, OUT)
        gain = w_out / w_in if w_in > 0 else float("nan")
    return AmplifierResult(
        output_state=out_state,
        herald_probability=plus.probability,
        success_probability_total=plus.probability + minus.probability,
        gain=gain,
        single_photon_weight_in=w_in,
        single_photon_weight_out=w_out,
        output_state_minus=minus.normalized() if minus.probability > 0 else None,
    )


def simulate_amplifier(params: AmplifierParams) -> AmplifierResult:
    return amplify(input_state(params), params)


# --- interferometer ------------------------------------------------------------


def _source(spdc: Optional[SpdcSource], source_state: Optional[State]) -> State:
    if source_state is not None:
        return source_state
    if spdc is None:
        return single_pair((IN, OUT), 2)
    if spdc.indistinguishability >= 1.0:
        return pair_state(spdc, (IN, OUT), 4)
    return distinguishable_pair(spdc, (IN, unmatched(IN), OUT), 4)


class _Modes:
    """Maps logical spatial modes to their physical labels (one or two internal modes)."""

    def __init__(self, copies: bool):
        self.copies = copies

    def __call__(self, mode: str) -> list[str]:
        return [mode, unmatched(mode)] if self.copies else [mode]

    def pairs(self, a: str, b: str) -> list[tuple[str, str]]:
        return list(zip(self(a), self(b)))

    def rename(self, mapping: dict[str, str]) -> dict[str, str]:
        out = dict(mapping)
        if self.copies:
            out.update({unmatched(k): unmatched(v) for k, v in mapping.items()})
        return out


def _block(state: State, mode: str) -> DensityOperator:
    basis = state.basis
    return embed(trace_out(state, [mode]), basis)


def _interferometer(params: AmplifierParams, source: State, blocked: Iterable[str] = ()):
    """Propagate the source through both splitters and the combining 50/50 splitter."""
    copies = unmatched(IN) in source.basis.mode_names
    each = _Modes(copies)
    names = [IN, A, C, OUT]
    if copies:
        names += [unmatched(m) for m in names]
    st = embed(source, build_basis(names, source.basis.n_max))
    for m in each(IN):
        st = apply_phase(st, m, params.phi)
    for m in each(OUT):
        st = _lossy(st, m, params.loss_aux)
    for a, b in each.pairs(IN, A):
        st = apply_beamsplitter(st, Beamsplitter(a, b, params.vbs2_t))
    for a, b in each.pairs(OUT, C):
        st = apply_beamsplitter(st, Beamsplitter(a, b, params.t))
    for mode in blocked:
        for m in each(mode):
            st = _block(st, m)
    for m in each(IN):
        st = _lossy(st, m, params.loss_in)
    for m in each(OUT):
        st = _lossy(st, m, params.loss_out)
    for a, b in each.pairs(C, IN):
        st = apply_beamsplitter(st, Beamsplitter(a, b, 0.5))
    return rename_modes(st, each.rename({C: D_PLUS, IN: D_MINUS})), each


def _second_splitter(state: State, each: _Modes, theta: float = 0.0) -> State:
    for m in each(A):
        state = apply_phase(state, m, theta)
    for a, b in each.pairs(A, OUT):
        state = apply_beamsplitter(state, Beamsplitter(a, b, 0.5))
    return rename_modes(state, each.rename({A: E_PLUS, OUT: E_MINUS}))


def fringe_visibility(phases: Sequence[float], values: Sequence[float]) -> float:
    """``(max - min) / (max + min)`` of a Fourier fit through the sampled fringe.

    Grids of fewer than three points use the raw samples.
    """
    phases = np.asarray(phases, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        hi, lo = values.max(), values.min()
    else:
        k = min(4, (values.size - 1) // 2)
        harmonics = np.arange(1, k + 1)

        def design(x):
            x = np.asarray(x)[:, None]
            return np.hstack([np.ones((x.shape[0], 1)), np.cos(harmonics * x), np.sin(harmonics * x)])

        coef, *_ = np.linalg.lstsq(design(phases), values, rcond=None)
        fine = np.concatenate([phases, np.linspace(0, 2 * np.pi, 4097)])
        curve = design(fine) @ coef
        hi, lo = curve.max(), curve.min()
    if hi + lo <= 0:
        return 0.0
    return float((hi - lo) / (hi + lo))


def simulate_full_interferometer(
    params: AmplifierParams,
    spdc: Optional[SpdcSource] = None,
    phase_grid: Optional[Sequence[float]] = None,
    source_state: Optional[State] = None,
) -> FringeRecord:
    """Coincidences between the ``d-`` herald and the ``e+`` output while scanning the phase on ``a``.

    Without ``spdc`` or ``source_state`` the source emits exactly one pair.
    """
    grid = default_phase_grid() if phase_grid is None else np.asarray(phase_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("phase grid must be non-empty")
    st, each = _interferometer(params, _source(spdc, source_state))
    det = params.herald_detector
    heralded = herald(trace_out(st, each(D_PLUS)), each(D_MINUS), det, herald_outcome(det))
    probs = np.zeros(grid.size)
    if heralded.probability > 0:
        for i, theta in enumerate(grid):
            final = _second_splitter(heralded.conditioned_state, each, theta)
            probs[i] = herald(final, each(E_PLUS), params.coincidence_detector, CLICK).probability
    return FringeRecord(grid, probs, heralded.probability, fringe_visibility(grid, probs))


@dataclass(frozen=True)
class PhaseAverageResult:
    fixed_phase_visibility: float
    averaged_visibility: float
    phase_state_fixed_visibility: float

    @property
    def ratio(self) -> float:
        return self.averaged_visibility / self.fixed_phase_visibility


def phase_average(
    params: AmplifierParams,
    phase_grid: Optional[Sequence[float]] = None,
    points: int = DEFAULT_PHASE_POINTS,
) -> PhaseAverageResult:
    """Fringe visibility of a one-pair source against the two-photon phase state averaged over its phase."""
    fixed = simulate_full_interferometer(params, phase_grid=phase_grid, source_state=single_pair((IN, OUT), 2))
    averaged_source = dephase(phase_state(0.0), IN, points)
    averaged = simulate_full_interferometer(params, phase_grid=phase_grid, source_state=averaged_source)
    pinned = simulate_full_interferometer(params, phase_grid=phase_grid, source_state=phase_state(0.0))
    return PhaseAverageResult(fixed.visibility, averaged.visibility, pinned.visibility)


# --- count-ratio gain ----------------------------------------------------------


def _coincidence(state: State, trigger_modes, trigger: DetectorModel, probe_modes, probe: DetectorModel):
    singles = herald(state, trigger_modes, trigger, herald_outcome(trigger))
    if singles.probability == 0:
        return 0.0, 0.0
    joint = herald(singles.conditioned_state, probe_modes, probe, CLICK)
    return singles.probability, joint.probability


def _gain_counts(params: AmplifierParams, source: State) -> tuple[float, float, float, float]:
    trigger, probe = params.herald_detector, params.coincidence_detector
    # paths a and c blocked: trigger behind BS2, probe behind BS1
    st, each = _interferometer(params, source, blocked=(A, C))
    st = _second_splitter(st, each)
    s1, c1 = _coincidence(st, each(E_PLUS), trigger, each(D_PLUS), probe)
    # path a blocked, detectors swapped: trigger heralds at d-, probe behind BS2
    st, each = _interferometer(params, source, blocked=(A,))
    st = _second_splitter(trace_out(st, each(D_PLUS)), each)
    s2, c2 = _coincidence(st, each(D_MINUS), trigger, each(E_PLUS), probe)
    return s1, c1, s2, c2


def gain_measurement(params: AmplifierParams, spdc: Optional[SpdcSource] = None) -> GainMeasurement:
    """Gain as the ratio of heralded to unheralded coincidence-to-singles ratios.

    The trigger detector is ``params.herald_detector``; the probe is
    ``params.coincidence_detector``. ``gain_dark_free`` repeats the estimate
    with both dark-count probabilities set to zero.
    """
    source = _source(spdc, None)
    s1, c1, s2, c2 = _gain_counts(params, source)
    if s1 == 0 or s2 == 0:
        raise ValueError("zero singles rate: gain is undefined")
    if c1 == 0:
        raise ValueError("zero input coincidence rate: gain is undefined")
    clean = params.with_(
        herald_detector=replace(params.herald_detector, dark_count_prob=0.0),
        coincidence_detector=replace(params.coincidence_detector, dark_count_prob=0.0),
    )
    if clean == params:
        dark_free = (c2 / s2) / (c1 / s1)
    else:
        cs1, cc1, cs2, cc2 = _gain_counts(clean, source)
        dark_free = (cc2 / cs2) / (cc1 / cs1) if cs1 and cs2 and cc1 else float("nan")
    return GainMeasurement(s1, c1, s2, c2, dark_free)


def measured_gain(params: AmplifierParams, spdc: Optional[SpdcSource] = None) -> float:
    return gain_measurement(params, spdc).gain


# --- sweeps --------------------------------------------------------------------


def sweep_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


def parallel_map(fn, items):
    """Map ``fn`` over ``items`` on a thread pool, preserving input order."""
    items = list(items)
    workers = min(sweep_threads(), len(items)) or 1
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _or_nan(fn, *args) -> float:
    try:
        return fn(*args)
    except (ValueError, ZeroDivisionError):
        return float("nan")


def gain_sweep(
    template: AmplifierParams,
    t_grid: Sequence[float],
    spdc: Optional[SpdcSource] = None,
    estimator: str = "state",
    phase_grid: Optional[Sequence[float]] = None,
) -> list[GainRow]:
    """Gain and visibility against the auxiliary transmission.

    ``estimator="state"`` reports the single-photon weight ratio of the
    heralded state; ``"counts"`` reports :func:`measured_gain`.
    """
    if estimator not in ("state", "counts"):
        raise ValueError(f"unknown estimator {estimator!r}")

    def row(t: float) -> GainRow:
        p = template.with_(t=float(t))
        if estimator == "state":
            g = simulate_amplifier(p).gain
        else:
            g = _or_nan(measured_gain, p, spdc)
        vis = simulate_full_interferometer(p, spdc, phase_grid).visibility
        return GainRow(
            t=float(t),
            gain_ideal=_or_nan(gain_ideal, t, p.alpha_sq),
            gain_nonpnr=_or_nan(gain_nonpnr, t, p.alpha_sq),
            gain_simulated=g,
            vmax=vmax(t),
            visibility_simulated=vis,
        )

    return parallel_map(row, t_grid)
