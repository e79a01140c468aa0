from itertools import product
from math import comb

import numpy as np
import pytest

from conftest import random_density, random_state
from scissorsim.fock import (
    build_basis,
    embed,
    fidelity,
    mix,
    operator_distance,
    partial_trace,
    pure_state,
    rename_modes,
    tensor,
    to_density,
    trace_out,
)


def brute_force_states(n_modes, n_max):
    return {occ for occ in product(range(n_max + 1), repeat=n_modes) if sum(occ) <= n_max}


@pytest.mark.parametrize("modes, n_max", [(["in"], 0), (["c", "out"], 1), (["a", "in", "c", "out"], 2), (list("abcde"), 3)])
def test_basis_matches_enumeration(modes, n_max):
    basis = build_basis(modes, n_max)
    assert set(basis.states) == brute_force_states(len(modes), n_max)
    assert basis.dim == comb(n_max + len(modes), len(modes))


def test_basis_examples():
    assert build_basis(["in"], 0).dim == 1
    assert build_basis(["c", "out"], 1).states == ((0, 0), (1, 0), (0, 1))
    assert build_basis(["a", "in", "c", "out"], 2).dim == 15


def test_basis_ordering_is_sector_grouped_and_stable():
    b = build_basis(["x", "y", "z"], 3)
    totals = [sum(s) for s in b.states]
    assert totals == sorted(totals)
    assert build_basis(("x", "y", "z"), 3).states == b.states
    for i in range(b.dim):
        assert b.index(b.occupation(i)) == i


@pytest.mark.parametrize("modes, n_max", [(["a", "a"], 1), (["a"], -1), ([], 1)])
def test_basis_errors(modes, n_max):
    with pytest.raises(ValueError):
        build_basis(modes, n_max)


def test_pure_state_examples():
    assert pure_state(build_basis(["in"], 1), [((0,), 1.0)]).norm_sq == 1
    t = 0.5
    aux = pure_state(build_basis(["c", "out"], 1), {(1, 0): np.sqrt(1 - t), (0, 1): np.sqrt(t)})
    assert aux.is_normalized
    assert abs(aux.amplitude((1, 0))) == pytest.approx(abs(aux.amplitude((0, 1))))
    eq5 = pure_state(build_basis(["n", "m"], 2), {(1, 1): 2**-0.5, (2, 0): 0.5, (0, 2): 0.5})
    assert eq5.norm_sq == pytest.approx(1, abs=1e-15)


def test_pure_state_errors():
    basis = build_basis(["c", "out"], 1)
    with pytest.raises(ValueError):
        pure_state(basis, [((1, 1), 1.0)])
    with pytest.raises(ValueError):
        pure_state(basis, [((1,), 1.0)])


def test_states_are_immutable():
    psi = pure_state(build_basis(["in"], 1), [((1,), 1.0)])
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 1


def test_to_density():
    basis = build_basis(["in"], 1)
    one = to_density(pure_state(basis, [((1,), 1.0)]))
    assert np.allclose(one.matrix, np.diag([0, 1]))
    assert to_density(pure_state(basis, [((0,), np.sqrt(0.3))])).trace == pytest.approx(0.3, abs=1e-15)
    t = 0.3
    aux = to_density(pure_state(build_basis(["c", "out"], 1), {(1, 0): np.sqrt(1 - t), (0, 1): np.sqrt(t)}))
    assert aux.trace == pytest.approx(1)
    assert aux.element((1, 0), (0, 1)) == pytest.approx(np.sqrt(t * (1 - t)))


def test_mix_examples():
    basis = build_basis(["in"], 1)
    zero, one = (to_density(pure_state(basis, [((n,), 1.0)])) for n in (0, 1))
    rho = mix([(0.5, zero), (0.5, one)])
    assert np.allclose(rho.matrix, np.diag([0.5, 0.5])) and rho.trace == pytest.approx(1)
    assert operator_distance(mix([(1.0, one)]), one) == 0
    eta = 0.25
    lossy = mix([(eta, one), (1 - eta, zero)])
    assert np.allclose(np.diag(lossy.matrix).real, [0.75, 0.25])


def test_mix_basis_mismatch():
    a = pure_state(build_basis(["in"], 1), [((0,), 1.0)])
    b = pure_state(build_basis(["out"], 1), [((0,), 1.0)])
    with pytest.raises(ValueError):
        mix([(0.5, a), (0.5, b)])


def test_partial_trace_examples(rng):
    basis = build_basis(["c", "out"], 1)
    rho = random_density(basis, rng)
    assert partial_trace(rho, ["c", "out"]) is rho
    t = 0.7
    aux = pure_state(basis, {(1, 0): np.sqrt(1 - t), (0, 1): np.sqrt(t)})
    marginal = partial_trace(aux, ["out"])
    assert np.allclose(marginal.matrix, np.diag([1 - t, t]), atol=1e-15)


def test_partial_trace_of_product(rng):
    ba, bb = build_basis(["a1", "a2"], 2), build_basis(["b"], 2)
    for _ in range(10):
        ra, rb = random_density(ba, rng), random_density(bb, rng)
        rb = type(rb)(rb.basis, 0.6 * rb.matrix)
        reduced = partial_trace(tensor(ra, rb), ["a1", "a2"])
        expected = embed(ra, reduced.basis).matrix * rb.trace
        assert np.allclose(reduced.matrix, expected, atol=1e-13)


def test_partial_trace_properties(rng):
    basis = build_basis(["x", "y", "z"], 3)
    for _ in range(20):
        psi = random_state(basis, rng, norm=rng.uniform(0.1, 1))
        red = partial_trace(psi, ["y"])
        assert red.trace == pytest.approx(psi.norm_sq, abs=1e-12)
        assert np.allclose(red.matrix, red.matrix.conj().T, atol=1e-12)
        red.validate()


def test_partial_trace_unknown_mode(rng):
    with pytest.raises(KeyError):
        partial_trace(random_density(build_basis(["x"], 1), rng), ["nope"])


def test_trace_out_all_but_one_gives_norm():
    basis = build_basis(["x", "y"], 2)
    psi = pure_state(basis, {(1, 1): 0.6, (0, 2): 0.0, (2, 0): 0.5})
    assert trace_out(psi, ["x"]).trace == pytest.approx(psi.norm_sq)


def test_tensor_truncation_drops_high_sectors():
    a = pure_state(build_basis(["a"], 2), {(2,): 1.0})
    b = pure_state(build_basis(["b"], 2), {(1,): 1.0})
    assert tensor(a, b).norm_sq == pytest.approx(1)
    assert tensor(a, b, n_max=2).norm_sq == 0


def test_rename_preserves_content(rng):
    basis = build_basis(["x", "y"], 2)
    rho = random_density(basis, rng)
    renamed = rename_modes(rho, {"x": "zz"})
    assert renamed.basis.mode_names == ("zz", "y")
    for i, occ in enumerate(basis.states):
        for j, occ2 in enumerate(basis.states):
            assert renamed.element(occ, occ2) == pytest.approx(rho.matrix[i, j])


def test_fidelity_pure_and_mixed(rng):
    basis = build_basis(["x"], 2)
    psi = random_state(basis, rng)
    assert fidelity(psi, psi) == pytest.approx(1)
    rho = random_density(basis, rng)
    assert fidelity(rho, psi) == pytest.approx(fidelity(to_density(psi), rho), abs=1e-8)
