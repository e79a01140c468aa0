"""Exit criteria for the amplifier simulator, one test per criterion.

Each test appends a PASS/FAIL line that the terminal summary prints.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from scissorsim.amplifier import (
    AmplifierParams,
    amplify,
    coherent_input,
    default_phase_grid,
    gain_ideal,
    gain_nonpnr,
    measured_gain,
    phase_average,
    simulate_amplifier,
    simulate_full_interferometer,
    unity_crossing,
    vmax,
)
from scissorsim.detection import DetectorModel, povm_elements
from scissorsim.fock import build_basis, embed, fidelity, operator_distance, partial_trace, rename_modes
from scissorsim.optics import Beamsplitter, LossChannel, apply_beamsplitter, apply_loss
from scissorsim.source import SpdcSource, hom_visibility
from conftest import random_density, random_state

GRID = [round(0.1 * k, 1) for k in range(1, 10)]
THRESHOLD = DetectorModel.threshold()


def report(label, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
    assert ok, detail


def test_c01_pnr_gain_oracle():
    start = time.perf_counter()
    err = max(
        abs(simulate_amplifier(AmplifierParams(t=t, alpha_sq=a)).gain - t / (t + a * (1 - 2 * t)))
        for t in GRID
        for a in GRID
    )
    elapsed = time.perf_counter() - start
    report("C1 PNR gain oracle", err <= 1e-10 and elapsed < 5, f"max err {err:.2e}, {elapsed:.2f} s")


def test_c02_nonpnr_gain_oracle():
    err = max(
        abs(simulate_amplifier(AmplifierParams(t=t, alpha_sq=a, herald_detector=THRESHOLD)).gain - t / (1 - a * t))
        for t in GRID
        for a in GRID
    )
    crossing = unity_crossing(
        lambda t: simulate_amplifier(AmplifierParams(t=t, herald_detector=THRESHOLD)).gain, 0.5, 0.9, xtol=1e-9
    )
    ok = err <= 1e-10 and abs(crossing - 2 / 3) <= 1e-6
    report("C2 non-PNR gain oracle", ok, f"max err {err:.2e}, crossing t={crossing:.9f}")


def test_c03_teleportation_limit():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(5):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        alpha, beta = v / np.linalg.norm(v)
        psi = coherent_input(alpha, beta)
        res = amplify(psi, AmplifierParams(t=0.5, alpha_sq=abs(alpha) ** 2))
        target = embed(rename_modes(psi, {"in": "out"}), res.output_state.basis)
        worst = max(worst, abs(1 - fidelity(target, res.output_state)))
    report("C3 teleportation limit", worst <= 1e-10, f"max |1 - F| {worst:.2e}")


def test_c04_success_probability_twice_norm():
    worst = 0.0
    for t in GRID:
        for a in GRID:
            res = simulate_amplifier(AmplifierParams(t=t, alpha_sq=a))
            expected = 2 * ((1 - t) * a + t * (1 - a))
            worst = max(worst, abs(res.success_probability_total - expected))
    report("C4 success probability = 2N", worst <= 1e-10, f"max deviation from 2N {worst:.3e}")


def test_c05_visibility_law():
    start = time.perf_counter()
    errs = {}
    for t in (0.5, 0.6, 0.75, 0.9, 0.98):
        errs[t] = abs(simulate_full_interferometer(AmplifierParams(t=t)).visibility - 2 * np.sqrt(t * (1 - t)))
    elapsed = time.perf_counter() - start
    balanced = simulate_full_interferometer(AmplifierParams(t=0.5)).visibility
    ok = max(errs.values()) <= 1e-6 and abs(balanced - 1) <= 1e-6 and elapsed < 10
    report("C5 visibility law", ok, f"max err {max(errs.values()):.2e}, V(0.5)={balanced:.9f}, {elapsed:.2f} s")


def test_c06_phase_insensitivity():
    grid = default_phase_grid(64)
    runs = {
        "mixture": lambda phi: simulate_amplifier(AmplifierParams(t=0.8, phi=phi)),
        "coherent": lambda phi: amplify(coherent_input(0.6, 0.8j), AmplifierParams(t=0.8, alpha_sq=0.36, phi=phi)),
        "threshold": lambda phi: simulate_amplifier(AmplifierParams(t=0.9, phi=phi, herald_detector=THRESHOLD)),
    }
    worst = 0.0
    for run in runs.values():
        results = [run(phi) for phi in grid]
        gains = np.array([r.gain for r in results])
        probs = np.array([r.herald_probability for r in results])
        worst = max(worst, np.ptp(gains), np.ptp(probs))
    report("C6 phase insensitivity", worst <= 1e-12, f"max deviation {worst:.2e}")


def test_c07_factor_two_collapse():
    res = phase_average(AmplifierParams(t=0.5), points=64)
    ratio = res.averaged_visibility / res.fixed_phase_visibility
    report("C7 factor-2 collapse", abs(ratio - 0.5) <= 1e-6, f"averaged/fixed = {ratio:.9f}")


def test_c08_hom_law():
    errs = []
    for zeta_sq in (0.0, 0.5, 0.921, 0.934, 1.0):
        errs.append(abs(hom_visibility(SpdcSource(0.0, np.sqrt(zeta_sq)), single=True) - zeta_sq))
    double = hom_visibility(SpdcSource(0.2, 1.0))
    ok = max(errs) <= 1e-10 and double < 1
    report("C8 HOM law", ok, f"max err {max(errs):.2e}, V(lambda=0.2)={double:.6f}")


def test_c09_lossy_band():
    herald_det = DetectorModel.threshold(0.15, 3e-5)
    free_running = DetectorModel.threshold(0.10, 3e-5)
    details, ok = [], True
    for eta in (0.6, 0.7, 0.8, 0.9, 1.0):
        p = AmplifierParams(
            t=0.98,
            alpha_sq=0.5,
            loss_in=eta,
            loss_aux=eta,
            loss_out=eta,
            herald_detector=herald_det,
            coincidence_detector=free_running,
        )
        g = measured_gain(p)
        crossing = unity_crossing(lambda t: measured_gain(p.with_(t=t)), 0.4, 0.999, xtol=1e-6)
        ok &= 1.0 <= g <= 2.0 and crossing > 2 / 3
        details.append(f"eta={eta}: G={g:.3f}, G=1 at t={crossing:.3f}")
    report("C9 lossy band", ok, "; ".join(details))


def test_c10_structural_invariants():
    start = time.perf_counter()
    rng = np.random.default_rng(10)
    basis = build_basis(["a", "b", "c"], 3)
    unit = trace = povm = comp = 0.0
    for k in range(100):
        psi = random_state(basis, rng)
        t = (0, 0.25, 0.5, 0.75, 1)[k % 5]
        unit = max(unit, abs(apply_beamsplitter(psi, Beamsplitter("a", "b", t, rng.uniform(0, 6))).norm_sq - 1))

        det = DetectorModel(("ideal_pnr", "threshold")[k % 2], rng.uniform(), rng.uniform(0, 0.1))
        total = sum(op for _, op in povm_elements(det, 4))
        povm = max(povm, np.linalg.norm(total - np.eye(5), ord=2))

        rho = random_density(basis, rng)
        rho = type(rho)(basis, rng.uniform(0.2, 1) * rho.matrix)
        keep = [m for m in ("a", "b", "c") if rng.uniform() < 0.5] or ["b"]
        trace = max(trace, abs(partial_trace(rho, keep).trace - rho.trace))

        e1, e2 = rng.uniform(size=2)
        twice = apply_loss(apply_loss(rho, LossChannel("c", e1)), LossChannel("c", e2))
        comp = max(comp, operator_distance(twice, apply_loss(rho, LossChannel("c", e1 * e2))))
    elapsed = time.perf_counter() - start
    ok = unit <= 1e-12 and povm <= 1e-12 and trace <= 1e-12 and comp <= 1e-10 and elapsed < 30
    report(
        "C10 structural invariants",
        ok,
        f"unitarity {unit:.1e}, POVM {povm:.1e}, trace {trace:.1e}, loss composition {comp:.1e}, {elapsed:.2f} s",
    )
