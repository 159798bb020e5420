import numpy as np
import pytest

from schwarzpinn.geometry import (build_decomposition, composite_eval,
                                  decomposition_to_json, partition_of_unity,
                                  partition_weights, resolve_donors)
from schwarzpinn.mlp import Mlp, param_count
from schwarzpinn.sampling import Rect, latin_hypercube, segment_lhs

UNIT = Rect((0.0, 0.0), (1.0, 1.0))


def constant_net(c: float) -> Mlp:
    # tanh(0)*w2 + b2 == c
    theta = np.zeros(param_count((2, 1, 1)))
    theta[-1] = c
    return Mlp((2, 1, 1), theta)


class TestBuildDecomposition:
    def test_single_subdomain_is_domain(self):
        dec = build_decomposition(UNIT, 1, 1, 0.3)
        assert dec.n_subdomains == 1
        sub = dec.subdomains[0]
        assert sub.bounds == UNIT
        assert sub.interface_sides == []
        assert sorted(sub.physical_sides) == ["xmax", "xmin", "ymax", "ymin"]
        assert dec.interfaces == []

    def test_two_by_one_hand_example(self):
        dec = build_decomposition(Rect((0.0, 0.0), (2.0, 1.0)), 2, 1, 0.2)
        a, b = dec.subdomains
        assert a.bounds == Rect((0.0, 0.0), (1.1, 1.0))
        assert b.bounds == Rect((0.9, 0.0), (2.0, 1.0))
        assert len(dec.interfaces) == 2
        sides = {(i.owner_id, i.side, i.p0[0]) for i in dec.interfaces}
        assert sides == {(0, "xmax", 1.1), (1, "xmin", 0.9)}
        # overlap strip is [0.9, 1.1]: width 0.2
        assert b.bounds.lo[0] + 0.2 == pytest.approx(a.bounds.hi[0])

    def test_three_by_three_combinatorics(self):
        dec = build_decomposition(Rect((0.0, 0.0), (np.pi, 1.6)), 3, 3, 0.2)
        assert dec.n_subdomains == 9
        corner = dec.subdomains[0]
        assert len(corner.physical_sides) == 2
        assert len(corner.interface_sides) == 2
        center = dec.subdomains[4]
        assert len(center.physical_sides) == 0
        assert len(center.interface_sides) == 4
        assert len(dec.interfaces) == 4 * 2 + 4 * 3 + 1 * 4  # 24 segments
        # corner has 3 overlapping neighbors, center has 8
        assert len(corner.neighbor_ids) == 3
        assert len(center.neighbor_ids) == 8

    def test_rejects_bad_overlap(self):
        with pytest.raises(ValueError):
            build_decomposition(UNIT, 2, 2, 0.0)
        with pytest.raises(ValueError):
            build_decomposition(UNIT, 2, 2, 0.6)
        with pytest.raises(ValueError):
            build_decomposition(UNIT, 0, 1, 0.1)

    def test_union_covers_domain(self):
        dec = build_decomposition(UNIT, 4, 3, 0.1)
        pts = latin_hypercube(500, UNIT, seed=0)
        covered = np.zeros(500, dtype=bool)
        for s in dec.subdomains:
            covered |= s.bounds.contains(pts)
        assert np.all(covered)


class TestPartitionOfUnity:
    @pytest.mark.parametrize("grid", [(1, 1), (2, 2), (3, 3), (4, 4), (5, 5)])
    def test_sums_to_one(self, grid):
        dec = build_decomposition(Rect((0.0, 0.0), (2.0, 2.0)), *grid, 0.2)
        pts = latin_hypercube(2000, dec.bounds, seed=1)
        w = partition_weights(dec, pts)
        assert np.all(w >= 0.0)
        assert np.max(np.abs(w.sum(axis=0) - 1.0)) <= 1e-12

    def test_vanishes_on_interior_interfaces(self):
        dec = build_decomposition(Rect((0.0, 0.0), (2.0, 2.0)), 3, 3, 0.2)
        for itf in dec.interfaces:
            pts = segment_lhs(20, itf.p0, itf.p1, seed=2)
            w = partition_weights(dec, pts)
            assert np.max(np.abs(w[itf.owner_id])) <= 1e-12

    def test_weight_one_outside_overlaps(self):
        dec = build_decomposition(Rect((0.0, 0.0), (2.0, 1.0)), 2, 1, 0.2)
        w = partition_of_unity(dec, np.array([0.5, 0.5]))
        assert w == pytest.approx([1.0, 0.0], abs=1e-15)

    def test_symmetric_overlap_midpoint(self):
        dec = build_decomposition(Rect((0.0, 0.0), (2.0, 1.0)), 2, 1, 0.2)
        w = partition_of_unity(dec, np.array([1.0, 0.37]))
        assert w == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_rejects_outside_point(self):
        dec = build_decomposition(UNIT, 2, 2, 0.2)
        with pytest.raises(ValueError):
            partition_of_unity(dec, np.array([1.5, 0.5]))

    def test_continuity_across_interface(self):
        dec = build_decomposition(Rect((0.0, 0.0), (2.0, 2.0)), 2, 2, 0.2)
        for s in dec.subdomains:
            s.net = constant_net(1.0)
        itf = dec.interfaces[0]
        mid = 0.5 * (np.asarray(itf.p0) + np.asarray(itf.p1))
        normal = {"xmin": [-1, 0], "xmax": [1, 0],
                  "ymin": [0, -1], "ymax": [0, 1]}[itf.side]
        eps = 1e-6
        a = mid + eps * np.asarray(normal)
        b = mid - eps * np.asarray(normal)
        va, vb = composite_eval(dec, np.vstack([a, b]))
        assert abs(va - vb) <= 1e-9


class TestDonors:
    def test_every_interface_point_has_a_donor(self):
        for grid in ((2, 2), (3, 3), (1, 4)):
            dec = build_decomposition(Rect((0.0, 0.0), (2.0, 2.0)), *grid, 0.2)
            for itf in dec.interfaces:
                itf.points = segment_lhs(15, itf.p0, itf.p1, seed=3)
                donors = resolve_donors(dec, itf)
                assert all(len(d) >= 1 for d in donors)
                for p, ids in zip(itf.points, donors):
                    for r in ids:
                        assert dec.subdomains[r].bounds.contains(
                            p, tol=1e-12)[0]
                        assert r != itf.owner_id


class TestCompositeEval:
    def test_constant_networks_everywhere(self):
        dec = build_decomposition(Rect((0.0, 0.0), (2.0, 2.0)), 3, 2, 0.3)
        for s in dec.subdomains:
            s.net = constant_net(4.5)
        pts = latin_hypercube(300, dec.bounds, seed=4)
        vals = composite_eval(dec, pts)
        assert np.allclose(vals, 4.5, atol=1e-12)

    def test_single_subdomain_equals_plain_eval(self):
        from schwarzpinn.mlp import mlp_eval, mlp_init
        dec = build_decomposition(UNIT, 1, 1, 0.1)
        dec.subdomains[0].net = mlp_init((2, 6, 1), seed=0)
        pts = latin_hypercube(50, UNIT, seed=5)
        assert np.array_equal(composite_eval(dec, pts),
                              mlp_eval(dec.subdomains[0].net, pts))

    def test_overlap_midpoint_averages(self):
        dec = build_decomposition(Rect((0.0, 0.0), (2.0, 1.0)), 2, 1, 0.2)
        dec.subdomains[0].net = constant_net(2.0)
        dec.subdomains[1].net = constant_net(4.0)
        val = composite_eval(dec, np.array([[1.0, 0.5]]))[0]
        assert val == pytest.approx(3.0, abs=1e-12)


def test_json_export(tmp_path):
    dec = build_decomposition(UNIT, 2, 2, 0.2)
    doc = decomposition_to_json(dec, tmp_path / "dec.json")
    assert (tmp_path / "dec.json").exists()
    assert len(doc["subdomains"]) == 4
    assert len(doc["interfaces"]) == 8
    assert doc["grid"] == [2, 2]
