import numpy as np
import pytest
from scipy.spatial import SphericalVoronoi

from sphvqi.errors import EmptyFile, MissingPointSet, NormError, ParseError
from sphvqi.point_sets import (
    PointSet,
    fibonacci_points,
    find_point_file,
    gauss_product_points,
    load_points,
    mesh_norm,
    nearest_distance,
    random_points,
    save_points,
)
from sphvqi.sphere_core import real_sph_harm_all


def test_load_single_row(tmp_path):
    p = tmp_path / "one.txt"
    p.write_text("0 0 1\n")
    P = load_points(p)
    assert P.N == 1 and np.array_equal(P.nodes[0], [0.0, 0.0, 1.0])
    assert P.weight * P.N == pytest.approx(4 * np.pi, abs=1e-12)


def test_load_comments_and_renormalise(tmp_path):
    p = tmp_path / "pts.txt"
    p.write_text("# header\n\n1 0 0\n0 1.0000001 0\n")
    P = load_points(p)
    assert P.N == 2
    assert np.abs(np.linalg.norm(P.nodes, axis=1) - 1).max() < 1e-15


@pytest.mark.parametrize(
    "text, exc",
    [("0 0 0.5\n", NormError), ("1 0\n", ParseError), ("1 0 x\n", ParseError), ("# only\n\n", EmptyFile)],
)
def test_load_errors(tmp_path, text, exc):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(exc):
        load_points(p)


def test_missing_file(tmp_path):
    with pytest.raises(MissingPointSet):
        load_points(tmp_path / "nope.txt")
    with pytest.raises(MissingPointSet):
        find_point_file(tmp_path, 1434)
    (tmp_path / "ss053.01434").write_text("0 0 1\n")
    assert find_point_file(tmp_path, 1434).name == "ss053.01434"


def test_round_trip_bitwise(tmp_path):
    for P in (fibonacci_points(777), random_points(500, 3)):
        path = tmp_path / "rt.txt"
        save_points(P, path)
        Q = load_points(path)
        assert Q.nodes.tobytes() == P.nodes.tobytes()


def test_pointset_immutable():
    P = fibonacci_points(10)
    with pytest.raises(ValueError):
        P.nodes[0, 0] = 2.0


def test_fibonacci_basic():
    assert fibonacci_points(1).N == 1
    a, b = fibonacci_points(321), fibonacci_points(321)
    assert a.nodes.tobytes() == b.nodes.tobytes()
    assert np.abs(np.linalg.norm(a.nodes, axis=1) - 1).max() < 1e-12


def test_fibonacci_separation():
    X = fibonacci_points(1000).nodes
    G = np.clip(X @ X.T, -1, 1)
    np.fill_diagonal(G, -1)
    sep = np.arccos(G.max())
    assert sep >= 0.5 * 1000 ** -0.5


def test_random_points():
    a, b = random_points(200, 5), random_points(200, 5)
    assert a.nodes.tobytes() == b.nodes.tobytes()
    assert a.nodes.tobytes() != random_points(200, 6).nodes.tobytes()
    P = random_points(10_000, 0)
    assert np.abs(np.linalg.norm(P.nodes, axis=1) - 1).max() < 1e-12
    assert np.linalg.norm(P.nodes.mean(axis=0)) <= 0.05


def test_mesh_norm_single_node():
    P = PointSet(np.array([[0.0, 0.0, 1.0]]))
    assert mesh_norm(P, 20000) == pytest.approx(np.pi, abs=0.02)


def test_mesh_norm_scaling_and_refinement():
    vals = [mesh_norm(fibonacci_points(n)) * np.sqrt(n) for n in (500, 2000, 8000)]
    mid = np.mean(vals)
    assert all(abs(v / mid - 1) <= 0.2 for v in vals)
    P = fibonacci_points(2000)
    h1, h2 = mesh_norm(P, 40_000), mesh_norm(P, 80_000)
    assert abs(h2 - h1) / h2 < 0.02


def test_mesh_norm_against_voronoi_vertices():
    # exact fill distance: farthest Voronoi vertex from its generators
    for P in (fibonacci_points(1200), random_points(800, 4)):
        sv = SphericalVoronoi(P.nodes)
        exact = nearest_distance(P.nodes, sv.vertices).max()
        est = mesh_norm(P)
        assert est <= exact + 1e-12
        assert est >= 0.99 * exact
        assert mesh_norm(P, refine=False) <= exact + 1e-12


def test_tree_search_matches_brute_force():
    nodes = random_points(6000, 2).nodes
    q = random_points(3000, 9).nodes
    fast = nearest_distance(nodes, q)
    brute = np.arccos(np.clip((q @ nodes.T).max(axis=1), -1, 1))
    assert np.abs(fast - brute).max() < 1e-7


def test_quadrature_sanity():
    P = fibonacci_points(1434)
    assert P.integrate(np.ones(P.N)) == pytest.approx(4 * np.pi, abs=1e-12)
    G = gauss_product_points(20)
    assert G.design_strength == 20
    Y = real_sph_harm_all(20, G.nodes)
    integrals = G.integrate(Y.T)
    assert abs(integrals[0] - np.sqrt(4 * np.pi)) < 1e-12
    assert np.abs(integrals[1:]).max() <= 1e-9
