import numpy as np
import pytest

from separatrix.detection import (DetectionError, LabeledPoint, PointMatrix,
                                  SeedPair, bisect, boundary_seeds,
                                  detect_points, points_to_csv)
from separatrix.integration import IntegratorConfig


class TestSeeding:
    def test_2d_pair_count(self):
        assert len(boundary_seeds(2, 20)) == 40

    def test_3d_pair_count(self):
        assert len(boundary_seeds(3, 10)) == 300

    def test_endpoints_on_opposite_faces(self):
        gamma = 10.0
        for pair in boundary_seeds(3, 4, gamma):
            axis = int(np.nonzero(pair.a != pair.b)[0][0])
            assert pair.a[axis] == 0.0 and pair.b[axis] == gamma

    def test_ticks_span_full_edge(self):
        pairs = boundary_seeds(2, 5, gamma=8.0)
        xs = sorted(p.a[0] for p in pairs[:5])
        assert np.allclose(xs, np.linspace(0, 8, 5))

    def test_seed_pair_validation(self):
        with pytest.raises(ValueError):
            SeedPair([0, 0], [1, 1])   # differs in two coordinates
        with pytest.raises(ValueError):
            SeedPair([0, 0], [0, 0])   # identical
        with pytest.raises(ValueError):
            boundary_seeds(4, 5)
        with pytest.raises(ValueError):
            boundary_seeds(2, 1)
        with pytest.raises(ValueError):
            boundary_seeds(2, 5, gamma=0.0)


class TestLabeledPoint:
    def test_separates_must_be_a_pair(self):
        with pytest.raises(ValueError):
            LabeledPoint([1.0, 2.0], frozenset(["E0"]), 1e-4)


class TestBisect:
    def test_same_label_yields_nothing(self, hilker, icfg):
        system, att = hilker
        pair = SeedPair([5.0, 0.0], [5.0, 10.0])
        pts = bisect(system, pair, att, icfg, 1e-3,
                     _labels=("E4", "E4"))
        assert pts == []

    def test_undecided_endpoint_yields_nothing(self, hilker, icfg):
        system, att = hilker
        pair = SeedPair([5.0, 0.0], [5.0, 10.0])
        assert bisect(system, pair, att, icfg, 1e-3,
                      _labels=(None, "E4")) == []

    def test_bracket_width_below_threshold(self, hilker, icfg):
        system, att = hilker
        pair = SeedPair([0.0, 0.5], [10.0, 0.5])
        pts = bisect(system, pair, att, icfg, 1e-3)
        assert pts
        for p in pts:
            assert p.bracket_width <= 1e-3
            assert p.separates == frozenset({"E0", "E4"})

    def test_point_stays_on_seed_line(self, hilker, icfg):
        system, att = hilker
        pair = SeedPair([0.0, 0.5], [10.0, 0.5])
        for p in bisect(system, pair, att, icfg, 1e-3):
            assert p.axis == 0
            assert p.location[1] == 0.5
            assert 0.0 < p.location[0] < 10.0

    def test_flanking_probes_match_labels(self, hilker, icfg):
        from separatrix.integration import classify_basin
        system, att = hilker
        pair = SeedPair([0.0, 0.5], [10.0, 0.5])
        delta = 1e-3
        for p in bisect(system, pair, att, icfg, delta):
            step = np.zeros(2)
            step[p.axis] = delta
            lo = classify_basin(system, p.location - step, att, icfg).attractor
            hi = classify_basin(system, p.location + step, att, icfg).attractor
            assert {lo, hi} == set(p.separates)


class TestDetect:
    def test_counts_in_reference_windows(self, hilker_points, comp2_points,
                                         comp3_points):
        assert 15 <= len(hilker_points) <= 29
        assert 136 <= len(comp2_points) <= 254
        assert 71 <= len(comp3_points) <= 133

    def test_points_inside_domain(self, comp2_points):
        arr = comp2_points.as_array()
        assert np.all(arr >= 0.0) and np.all(arr <= 10.0)

    def test_canonical_order(self, comp2_points):
        keys = [(tuple(p.location), sorted(p.separates))
                for p in comp2_points.points]
        assert keys == sorted(keys)

    def test_split_partitions_points(self, comp3_points):
        prim, wall = comp3_points.primary, comp3_points.wall
        assert len(prim) + len(wall) == len(comp3_points)
        assert all("E3" in p.separates for p in prim)
        assert all("E3" not in p.separates for p in wall)
        assert prim and wall

    def test_no_split_means_single_surface(self, hilker_points):
        assert hilker_points.wall == []
        assert hilker_points.primary == hilker_points.points

    def test_worker_count_does_not_change_result(self, hilker, icfg,
                                                 hilker_points):
        system, att = hilker
        parallel = detect_points(system, att, n=20, cfg=icfg, workers=4)
        a = hilker_points.as_array()
        b = parallel.as_array()
        assert a.shape == b.shape
        assert np.array_equal(a, b)

    def test_monostable_domain_raises(self, hilker, icfg):
        system, att = hilker
        e4 = [a for a in att if a.identity == "E4"]
        with pytest.raises(DetectionError):
            detect_points(system, e4, n=4, cfg=icfg)

    def test_csv_round_trip(self, hilker_points, tmp_path):
        path = tmp_path / "points.csv"
        points_to_csv(hilker_points, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "x,y,label_a,label_b,bracket_width"
        assert len(lines) == len(hilker_points) + 1
        first = lines[1].split(",")
        loc = hilker_points.points[0].location
        assert float(first[0]) == loc[0] and float(first[1]) == loc[1]

    def test_empty_wall_array_shape(self, hilker_points):
        assert hilker_points.as_array("wall").size == 0
