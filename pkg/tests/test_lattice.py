import numpy as np
import pytest
from hypothesis import given, strategies as st

from locality_lab import lattice as lt
from locality_lab.errors import DomainError

BUILDERS = [
    lambda: lt.chain_open(7),
    lambda: lt.chain_periodic(8),
    lambda: lt.square_periodic(3, 4),
    lambda: lt.torus_edges(2, 3),
    lambda: lt.ladder(4, 2),
    lambda: lt.custom_graph(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]),
]


@pytest.mark.parametrize("build", BUILDERS)
def test_builders_give_metrics(build):
    lat = build()
    assert lat.check_metric()
    assert lat.metric.shape == (lat.site_count, lat.site_count)
    assert not lat.metric.flags.writeable


def test_chain_distances():
    assert lt.chain_open(6).dist(0, 5) == 5
    assert lt.chain_periodic(6).dist(0, 5) == 1
    assert lt.chain_periodic(6).diameter == 3


def test_square_periodic_indexing():
    lat = lt.square_periodic(4, 3)
    # site (x, y) = y * lx + x
    assert lat.dist(0, 3) == 1
    assert lat.dist(0, 2 * 4 + 0) == 1
    assert lat.dist(0, 1 * 4 + 2) == 3


def test_torus_edges_midpoints():
    lat = lt.torus_edges(2, 2)
    assert lat.site_count == 8
    # horizontal edge 0 at (0.5, 0), vertical edge 1 at (0, 0.5)
    assert lat.dist(0, 1) == pytest.approx(1.0)
    assert lat.dist(0, 2) == pytest.approx(1.0)


def test_ladder_rungs_and_legs():
    lat = lt.ladder(4, 2, periodic=True)
    assert lat.dist(0, 1) == 1
    assert lat.dist(0, 6) == 1  # x=3 wraps to x=0
    assert lat.dist(0, 5) == 3


def test_disconnected_graph_rejected():
    with pytest.raises(DomainError):
        lt.custom_graph(4, [(0, 1), (2, 3)])


def test_read_edge_list(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# triangle\n0 1\n1 2\n\n2 0  # closing edge\n")
    lat = lt.read_edge_list(p)
    assert lat.site_count == 3
    assert lat.diameter == 1
    p.write_text("0 1 2\n")
    with pytest.raises(DomainError):
        lt.read_edge_list(p)


def test_set_geometry_examples():
    lat = lt.chain_open(10)
    assert lt.set_distance(lat, (0, 1), (4, 9)) == 3
    assert lt.set_diameter(lat, (2, 7, 5)) == 5
    assert lt.ball(lat, (4,), 2) == (2, 3, 4, 5, 6)
    assert lt.ball(lat, (0, 9), 1) == (0, 1, 8, 9)
    assert lt.ball(lat, (3,), 0) == (3,)


@pytest.mark.parametrize("bad", [(), (1, 1), (10,), (-1,)])
def test_set_validation(bad):
    lat = lt.chain_open(10)
    with pytest.raises(DomainError):
        lt.set_diameter(lat, bad)


def test_negative_radius():
    with pytest.raises(DomainError):
        lt.ball(lt.chain_open(3), (0,), -1)


def _brute_lambda(lat, k):
    n = lat.site_count
    best = 0.0
    for i in range(n):
        for j in range(n):
            conv = sum(k(lat.dist(i, m)) * k(lat.dist(m, j)) for m in range(n))
            best = max(best, conv / k(lat.dist(i, j)))
    return best


@pytest.mark.parametrize("n", [4, 9])
@pytest.mark.parametrize("periodic", [False, True])
def test_reproducing_constant_matches_brute_force(n, periodic):
    lat = lt.chain_periodic(n) if periodic else lt.chain_open(n)
    for k in (lambda r: np.exp(-np.asarray(r, float)),
              lambda r: (1.0 + np.asarray(r, float)) ** -3.0):
        assert lt.reproducing_constant(lat, k) == pytest.approx(_brute_lambda(lat, k), rel=1e-12)


def test_reproducing_constant_behaviour():
    one = lambda r: np.ones_like(r)
    for n in (5, 12):
        assert lt.reproducing_constant(lt.chain_open(n), one) == pytest.approx(n)
    # pure exponentials are not reproducing in 1D: lambda grows with N
    exp = lambda r: np.exp(-r)
    lams = [lt.reproducing_constant(lt.chain_open(n), exp) for n in (8, 16, 32)]
    assert lams[0] < lams[1] < lams[2]
    assert lams[2] > 1.8 * lams[1] - 1
    # a power law with exponent > 1 has a size-independent constant
    pw = lambda r: (1 + r) ** -3.0
    lp = [lt.reproducing_constant(lt.chain_open(n), pw) for n in (8, 16, 32)]
    assert lp[2] - lp[1] < 0.05 * lp[1]


def test_reproducing_constant_rejects_zero():
    with pytest.raises(DomainError):
        lt.reproducing_constant(lt.chain_open(4), lambda r: np.where(r > 2, 0.0, 1.0))


lattices = st.sampled_from([b() for b in BUILDERS])


@given(lattices, st.data())
def test_triangle_inequality(lat, data):
    idx = st.integers(0, lat.site_count - 1)
    i, j, k = data.draw(idx), data.draw(idx), data.draw(idx)
    assert lat.dist(i, j) <= lat.dist(i, k) + lat.dist(k, j) + 1e-12
    assert lat.dist(i, j) == lat.dist(j, i)


@given(lattices, st.data(), st.floats(0, 5), st.floats(0, 5))
def test_ball_monotone_in_radius(lat, data, r1, r2):
    x = data.draw(st.sets(st.integers(0, lat.site_count - 1), min_size=1, max_size=3))
    small, big = sorted((r1, r2))
    inner, outer = set(lt.ball(lat, x, small)), set(lt.ball(lat, x, big))
    assert set(x) <= inner <= outer
    for s in outer - inner:
        assert lt.set_distance(lat, x, (s,)) > small
