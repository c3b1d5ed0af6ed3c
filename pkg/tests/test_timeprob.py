import numpy as np
import pytest

from stratoplan.errors import DegenerateSupportError, GridRangeError
from stratoplan.timeprob import (
    Pmf,
    TimeGrid,
    TriangularSpec,
    cdf,
    cdf_at_edges,
    discretize_triangular,
    mean_of,
    point_mass,
    skewness_of,
    triangular_cdf,
    variance_of,
)


class TestTimeGrid:
    def test_edges_and_midpoints(self):
        g = TimeGrid(origin=2.0, step=0.5, bins=4)
        assert g.end == 4.0
        assert np.array_equal(g.edges(), [2.0, 2.5, 3.0, 3.5, 4.0])
        assert np.array_equal(g.midpoints(), [2.25, 2.75, 3.25, 3.75])

    def test_bin_index_half_open(self):
        g = TimeGrid(origin=0.0, step=1.0, bins=10)
        assert g.bin_index(0.0) == 0
        assert g.bin_index(3.0) == 3
        assert g.bin_index(3.999999) == 3
        # the closing edge of the span belongs to the last bin
        assert g.bin_index(10.0) == 9

    def test_bin_index_rejects_outside_span(self):
        g = TimeGrid(origin=0.0, step=1.0, bins=10)
        with pytest.raises(GridRangeError):
            g.bin_index(-0.001)
        with pytest.raises(GridRangeError):
            g.bin_index(10.001)

    def test_cover_aligns_origin_to_step(self):
        g = TimeGrid.cover(1.3, 7.2, 0.5)
        assert g.origin == 1.0
        assert g.origin <= 1.3 and g.end >= 7.2
        assert (g.end - g.origin) / g.step == g.bins

    def test_cover_handles_exact_edges(self):
        g = TimeGrid.cover(0.0, 4.0, 1.0)
        assert g.origin == 0.0
        assert g.bins == 4


class TestTriangularCdf:
    def test_frozen_bin_mass(self):
        # triangular(0, 7.5, 15): mass over [7, 8] is 29/225
        spec = TriangularSpec(0.0, 7.5, 15.0)
        got = triangular_cdf(8.0, spec) - triangular_cdf(7.0, spec)
        assert got == pytest.approx(29 / 225, abs=1e-15)

    def test_endpoints_and_mode(self):
        spec = TriangularSpec(2.0, 5.0, 10.0)
        assert triangular_cdf(2.0, spec) == 0.0
        assert triangular_cdf(10.0, spec) == 1.0
        assert triangular_cdf(5.0, spec) == pytest.approx(3 / 8, abs=1e-15)

    def test_half_triangle_mode_at_edge(self):
        left = TriangularSpec(0.0, 0.0, 4.0)
        assert triangular_cdf(0.0, left) == 0.0
        assert triangular_cdf(2.0, left) == pytest.approx(0.75, abs=1e-15)
        right = TriangularSpec(0.0, 4.0, 4.0)
        assert triangular_cdf(2.0, right) == pytest.approx(0.25, abs=1e-15)

    def test_monotone_many_specs(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a = rng.uniform(-50, 50)
            b = a + rng.uniform(0.1, 40)
            c = rng.uniform(a, b)
            spec = TriangularSpec(a, c, b)
            t = np.sort(rng.uniform(a - 5, b + 5, size=64))
            vals = triangular_cdf(t, spec)
            assert np.all(np.diff(vals) >= -1e-15)
            assert vals[0] >= 0.0 and vals[-1] <= 1.0

    def test_degenerate_support_rejected(self):
        with pytest.raises(DegenerateSupportError):
            TriangularSpec(3.0, 3.0, 3.0)
        with pytest.raises(ValueError):
            TriangularSpec(3.0, 2.0, 4.0)  # mode outside the support


class TestDiscretize:
    def test_mass_sums_to_one(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=15)
        p = discretize_triangular(TriangularSpec(0.0, 7.5, 15.0), grid)
        assert p.total == pytest.approx(1.0, abs=1e-12)

    def test_frozen_bin_value(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=15)
        p = discretize_triangular(TriangularSpec(0.0, 7.5, 15.0), grid)
        assert p.mass[7] == pytest.approx(29 / 225, abs=1e-12)

    def test_cdf_interpolates_inside_bins(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=15)
        p = discretize_triangular(TriangularSpec(0.0, 7.5, 15.0), grid)
        # exact at edges, linear inside: the 7.5 point splits bin 7 evenly
        assert cdf(p, 7.0) == pytest.approx(98 / 225, abs=1e-12)
        assert cdf(p, 7.5) == pytest.approx(0.5, abs=1e-12)
        assert cdf(p, 0.0) == 0.0
        assert cdf(p, 15.0) == pytest.approx(1.0, abs=1e-12)

    def test_cdf_at_edges_matches_scalar_cdf(self):
        grid = TimeGrid(origin=0.0, step=0.5, bins=30)
        p = discretize_triangular(TriangularSpec(0.0, 7.5, 15.0), grid)
        edges = cdf_at_edges(p)
        assert edges.shape == (31,)
        assert edges[0] == 0.0
        for k in (0, 7, 15, 30):
            assert edges[k] == pytest.approx(cdf(p, grid.origin + k * 0.5), abs=1e-12)

    def test_support_outside_grid_rejected(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=10)
        with pytest.raises(GridRangeError):
            discretize_triangular(TriangularSpec(-1.0, 4.0, 9.0), grid)
        with pytest.raises(GridRangeError):
            discretize_triangular(TriangularSpec(1.0, 4.0, 10.5), grid)

    def test_random_specs_preserve_mass_and_mean(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = rng.uniform(-30, 30)
            b = a + rng.uniform(0.5, 25)
            c = rng.uniform(a, b)
            grid = TimeGrid.cover(a - 1, b + 1, 0.25)
            p = discretize_triangular(TriangularSpec(a, c, b), grid)
            assert p.total == pytest.approx(1.0, abs=1e-12)
            # binned mean stays within half a step of the exact mean
            assert mean_of(p) == pytest.approx((a + b + c) / 3, abs=0.125)


class TestPointMass:
    def test_places_all_mass_in_one_bin(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=10)
        p = point_mass(3.7, grid)
        assert p.mass[3] == 1.0
        assert p.total == 1.0

    def test_closing_edge_goes_to_last_bin(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=10)
        assert point_mass(10.0, grid).mass[9] == 1.0

    def test_outside_span_rejected(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=10)
        with pytest.raises(GridRangeError):
            point_mass(10.5, grid)


class TestMoments:
    def test_symmetric_triangular(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=15)
        p = discretize_triangular(TriangularSpec(0.0, 7.5, 15.0), grid)
        assert mean_of(p) == pytest.approx(7.5, abs=1e-12)
        # exact continuous variance is 9.375; binning adds O(step^2)
        assert variance_of(p) == pytest.approx(9.375, abs=0.1)
        assert abs(skewness_of(p)) < 1e-10

    def test_skew_sign(self):
        grid = TimeGrid(origin=0.0, step=0.25, bins=64)
        right_tailed = discretize_triangular(TriangularSpec(0.0, 1.0, 16.0), grid)
        left_tailed = discretize_triangular(TriangularSpec(0.0, 15.0, 16.0), grid)
        assert skewness_of(right_tailed) > 0.3
        assert skewness_of(left_tailed) < -0.3

    def test_point_mass_moments(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=10)
        p = point_mass(4.2, grid)
        assert mean_of(p) == 4.5  # bin midpoint
        assert variance_of(p) == 0.0
        assert skewness_of(p) == 0.0


class TestPmfValidation:
    def test_negative_mass_rejected(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=3)
        with pytest.raises(ValueError):
            Pmf(grid, np.array([0.5, -0.2, 0.7]))

    def test_wrong_length_rejected(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=3)
        with pytest.raises(ValueError):
            Pmf(grid, np.array([1.0]))

    def test_total_above_one_rejected(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=2)
        with pytest.raises(ValueError):
            Pmf(grid, np.array([0.7, 0.7]))

    def test_subprobability_allows_deficit(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=2)
        p = Pmf(grid, np.array([0.3, 0.3]), subprobability=True)
        assert p.total == pytest.approx(0.6)

    def test_mass_is_read_only(self):
        grid = TimeGrid(origin=0.0, step=1.0, bins=2)
        p = Pmf(grid, np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            p.mass[0] = 0.9
