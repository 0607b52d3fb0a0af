import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from manifold_mc.gff import ModelParams, sample_prior
from manifold_mc.lattice import FieldConfiguration, LatticeShape
from manifold_mc.localtime import (
    CellList,
    StaleCellListError,
    batch_energy_bruteforce,
    brute_force_energy,
    energy_by_quadrature,
    energy_delta_single_site,
    local_time_histogram,
    self_intersection_energy,
    write_histogram_csv,
)


def test_histogram_constant_field():
    shape = LatticeShape(2, 2)
    u = FieldConfiguration(shape, np.zeros((1, 25)))
    h = local_time_histogram(u, window=(-2, 2))
    assert h[0] == 25
    assert sum(h[z] for z in (-2, -1, 1, 2)) == 0
    assert h.complete


def test_histogram_two_values():
    h = local_time_histogram(np.array([-1.0, 1.0]), window=(-2, 2))
    assert h[-1] == 1 and h[1] == 1 and h[0] == 0


def test_histogram_partition_of_sites():
    _, u = sample_prior(ModelParams.create(2, 2), 9)
    h = local_time_histogram(u)
    assert h.counts.sum() == 25


def test_histogram_tie_goes_to_lower_cell():
    h = local_time_histogram(np.array([0.5, -0.5]), window=(-1, 1))
    assert h[0] == 1 and h[-1] == 1 and h[1] == 0


def test_histogram_partial_window_flagged():
    h = local_time_histogram(np.array([0.0, 5.0]), window=(-1, 1))
    assert not h.complete
    assert h.counts.sum() == 1


def test_histogram_2d_and_csv(tmp_path):
    pts = np.array([[0.1, 0.2], [0.3, -0.1], [2.0, 1.0]])
    h = local_time_histogram(pts)
    assert h[(0, 0)] == 2 and h[(2, 1)] == 1
    write_histogram_csv(tmp_path / "h.csv", h)
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "z_tuple,count"
    assert "0;0,2" in lines and "2;1,1" in lines


def test_energy_examples():
    assert self_intersection_energy(np.zeros(7)).total == pytest.approx(49.0)
    e = self_intersection_energy(np.array([0.0, 0.5]))
    assert e.total == pytest.approx(3.0, abs=1e-12)
    assert e.diagonal == 2.0 and e.offdiag == pytest.approx(1.0)
    assert self_intersection_energy(np.array([0.0, 2.0])).total == 2.0


def test_two_site_piecewise_integration():
    # ell = 1 on [-0.5, 0) and (0.5, 1.0], ell = 2 on [0, 0.5]: 0.5 + 0.5 + 4 * 0.5
    assert 0.5 * 1 + 0.5 * 1 + 0.5 * 4 == 3.0
    assert energy_by_quadrature(np.array([0.0, 0.5]), step=1e-3) == pytest.approx(3.0, abs=5e-3)


def test_quadrature_single_site():
    assert energy_by_quadrature(np.array([0.3]), 1e-3) == pytest.approx(1.0, abs=5e-3)
    assert energy_by_quadrature(np.array([[0.3, -1.2]]), 1e-3) == pytest.approx(1.0, abs=5e-3)


def test_quadrature_guard():
    with pytest.raises(ValueError):
        energy_by_quadrature(np.zeros(101))
    with pytest.raises(ValueError):
        energy_by_quadrature(np.zeros((3, 3)))


def test_quadrature_random_10_site_d1():
    pts = np.random.default_rng(0).normal(scale=1.5, size=10)
    exact = self_intersection_energy(pts).total
    assert energy_by_quadrature(pts, 1e-3) == pytest.approx(exact, rel=1e-2)


def test_quadrature_agreement_50_instances():
    rng = np.random.default_rng(1)
    for _ in range(50):
        M = int(rng.integers(1, 21))
        D = int(rng.integers(1, 3))
        pts = rng.normal(scale=rng.uniform(0.3, 2.0), size=(M, D))
        exact = self_intersection_energy(pts).total
        assert energy_by_quadrature(pts, 1e-3) == pytest.approx(exact, rel=1e-2)


def test_cell_list_matches_bruteforce_100_instances():
    rng = np.random.default_rng(2)
    for _ in range(100):
        M = int(rng.integers(1, 201))
        D = int(rng.integers(1, 4))
        pts = rng.normal(scale=rng.uniform(0.2, 6.0), size=(M, D))
        assert self_intersection_energy(pts).total == pytest.approx(brute_force_energy(pts), abs=1e-9)


def test_cell_list_handles_negative_and_integer_coordinates():
    pts = np.array([[-1.0, 0.0], [-0.0, 0.0], [0.999, 0.5], [-3.0, -3.0], [-2.5, -3.2]])
    assert self_intersection_energy(pts).total == pytest.approx(brute_force_energy(pts), abs=1e-12)


def test_batch_bruteforce_matches_single():
    pts = np.random.default_rng(3).normal(size=(5, 9, 2))
    np.testing.assert_allclose(batch_energy_bruteforce(pts), [brute_force_energy(p) for p in pts])


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 30), st.integers(1, 3)),
              elements=st.floats(-4, 4, allow_nan=False)),
       arrays(np.float64, 3, elements=st.floats(-50, 50, allow_nan=False)))
def test_translation_invariance(pts, shift):
    a = self_intersection_energy(pts).total
    b = self_intersection_energy(pts + shift[: pts.shape[1]]).total
    assert b == pytest.approx(a, rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(40, 2))
    perm = rng.permutation(40)
    assert self_intersection_energy(pts[perm]).total == pytest.approx(
        self_intersection_energy(pts).total, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-0.99, 0.99), min_size=1, max_size=3), st.floats(1.0, 3.0))
def test_spreading_never_increases_pair_term(delta, factor):
    a = np.zeros((2, len(delta)))
    a[1] = delta
    b = np.zeros_like(a)
    b[1] = np.asarray(delta) * factor
    assert brute_force_energy(b) <= brute_force_energy(a) + 1e-12


def test_energy_breakdown_invariants():
    _, u = sample_prior(ModelParams.create(3, 2, 2), 1)
    e = self_intersection_energy(u)
    assert e.diagonal == 49
    assert e.total >= e.diagonal and e.offdiag >= 0


def test_delta_examples():
    pts = np.array([[0.0], [0.4], [5.0]])
    cells = CellList(pts)
    assert energy_delta_single_site(cells, 1, [0.4]) == 0.0
    assert energy_delta_single_site(cells, 2, [8.0]) == 0.0


def test_delta_matches_recompute_200_moves():
    rng = np.random.default_rng(4)
    for _ in range(200):
        M = int(rng.integers(2, 51))
        D = int(rng.integers(1, 4))
        pts = rng.normal(scale=1.2, size=(M, D))
        cells = CellList(pts)
        i = int(rng.integers(M))
        new = pts[i] + rng.normal(scale=0.8, size=D)
        moved = pts.copy()
        moved[i] = new
        expected = brute_force_energy(moved) - brute_force_energy(pts)
        assert energy_delta_single_site(cells, i, new) == pytest.approx(expected, abs=1e-9)


def test_moves_keep_cell_list_consistent():
    rng = np.random.default_rng(5)
    pts = rng.normal(scale=2.0, size=(80, 2))
    cells = CellList(pts)
    energy = brute_force_energy(pts)
    for _ in range(2000):
        i = int(rng.integers(80))
        new = pts[i] + rng.normal(scale=0.6, size=2)
        energy += cells.delta(i, new)
        cells.move(i, new)
    cells.check()
    assert energy == pytest.approx(brute_force_energy(pts), abs=1e-9)
    assert 80 + cells.offdiag_energy() == pytest.approx(brute_force_energy(pts), abs=1e-9)


def test_stale_cell_list_detected():
    pts = np.array([[0.2], [0.7]])
    cells = CellList(pts)
    pts[0, 0] = 3.5  # bypasses CellList.move
    with pytest.raises(StaleCellListError):
        cells.delta(0, [0.0])
