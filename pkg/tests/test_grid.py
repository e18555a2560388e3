import numpy as np
import pytest
from hypothesis import given, strategies as st

from enstails.errors import GridMismatchError, UndefinedFractionError
from enstails.grid import (
    Field,
    Grid,
    LandMask,
    area_weight,
    land_selector,
    weighted_fraction,
)

from oracles import weighted_fraction_loops


def test_area_weight_values():
    assert area_weight(0.0) == 1.0
    assert area_weight(60.0) == pytest.approx(0.5, abs=1e-12)
    assert area_weight(90.0) == 0.0
    assert area_weight(-90.0) == 0.0


def test_area_weight_rejects_out_of_range():
    with pytest.raises(ValueError):
        area_weight(90.5)
    with pytest.raises(ValueError):
        area_weight(-91.0)


@given(st.floats(min_value=-90.0, max_value=90.0, allow_nan=False))
def test_area_weight_symmetric(lat):
    assert area_weight(lat) == area_weight(-lat)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(np.array([0.0, 100.0]), np.array([0.0]))
    with pytest.raises(ValueError):
        Grid(np.array([0.0, 10.0]), np.array([0.0, 360.0]))
    with pytest.raises(ValueError):
        Grid(np.array([0.0, 10.0, 5.0]), np.array([0.0, 10.0]))
    with pytest.raises(ValueError):
        Grid(np.array([]), np.array([0.0]))


def test_grid_regular_matches_production_layout():
    g = Grid.regular(721, 1440)
    assert g.shape == (721, 1440)
    assert g.latitudes[0] == -90.0 and g.latitudes[-1] == 90.0
    assert g.longitudes[1] - g.longitudes[0] == 0.25
    w = g.cell_weights()
    assert w[0, 0] == 0.0 and w[-1, -1] == 0.0  # poles carry no area


def test_grid_immutable():
    g = Grid.regular(3, 4)
    with pytest.raises(ValueError):
        g.latitudes[0] = 5.0


def test_field_shape_and_units():
    g = Grid.regular(2, 3)
    f = Field(grid=g, values=np.zeros((2, 3)), units="degC")
    assert f.units == "degC"
    with pytest.raises(GridMismatchError):
        Field(grid=g, values=np.zeros((3, 2)))
    with pytest.raises(ValueError):
        Field(grid=g, values=np.full((2, 3), np.inf))


def test_field_allows_nan_as_missing():
    g = Grid.regular(2, 2)
    v = np.array([[1.0, np.nan], [0.0, 2.0]])
    f = Field(grid=g, values=v)
    assert f.missing().sum() == 1


def test_land_mask_validation():
    g = Grid.regular(2, 2)
    with pytest.raises(ValueError):
        LandMask(grid=g, land_fraction=np.full((2, 2), 1.5))


@pytest.mark.parametrize(
    "fraction,expected",
    [(0.75, True), (0.74, False), (1.0, True), (0.0, False)],
)
def test_land_selector_boundary_inclusive(fraction, expected):
    g = Grid.regular(1, 1)
    mask = LandMask(grid=g, land_fraction=np.array([[fraction]]))
    assert land_selector(mask, 0.75)[0, 0] == expected


def test_land_selector_threshold_range():
    g = Grid.regular(1, 1)
    mask = LandMask(grid=g, land_fraction=np.array([[1.0]]))
    with pytest.raises(ValueError):
        land_selector(mask, 1.5)


def _band_grid():
    # One latitude band at 0 deg (weight 1) and one at 60 deg (weight 0.5).
    return Grid(np.array([0.0, 60.0]), np.array([10.0]))


def test_weighted_fraction_trivial_cases():
    g = _band_grid()
    all_true = np.ones(g.shape, dtype=bool)
    assert weighted_fraction(all_true, all_true, g) == 1.0
    assert weighted_fraction(~all_true, all_true, g) == 0.0


def test_weighted_fraction_band_case():
    # true on the 60-deg band, false on the equal-width equator band:
    # 0.5 / (0.5 + 1.0) = 1/3.
    g = _band_grid()
    indicator = np.array([[False], [True]])
    selector = np.ones(g.shape, dtype=bool)
    assert weighted_fraction(indicator, selector, g) == pytest.approx(1.0 / 3.0, abs=1e-15)


def test_weighted_fraction_complement_sums_to_one():
    rng = np.random.default_rng(5)
    g = Grid.regular(7, 9)
    indicator = rng.random(g.shape) > 0.4
    selector = rng.random(g.shape) > 0.2
    selector[3, 4] = True  # keep the selection nonempty
    f = weighted_fraction(indicator, selector, g)
    f_not = weighted_fraction(~indicator, selector, g)
    assert abs(f + f_not - 1.0) < 1e-12


def test_weighted_fraction_invariant_under_weight_rescaling():
    # Replicating every longitude k times multiplies all weights uniformly.
    lat = np.array([-40.0, 10.0, 55.0])
    g1 = Grid(lat, np.array([0.0, 90.0]))
    g3 = Grid(lat, np.array([0.0, 30.0, 60.0, 90.0, 120.0, 150.0]))
    rng = np.random.default_rng(6)
    ind1 = rng.random(g1.shape) > 0.5
    sel1 = np.ones(g1.shape, dtype=bool)
    ind3 = np.repeat(ind1, 3, axis=1)
    sel3 = np.ones(g3.shape, dtype=bool)
    assert weighted_fraction(ind1, sel1, g1) == pytest.approx(
        weighted_fraction(ind3, sel3, g3), abs=1e-14
    )


def test_weighted_fraction_matches_bruteforce():
    rng = np.random.default_rng(7)
    g = Grid(np.linspace(-80, 80, 6), np.arange(0, 350, 70.0))
    indicator = rng.random(g.shape) > 0.5
    selector = rng.random(g.shape) > 0.3
    selector[0, 0] = True
    want = weighted_fraction_loops(indicator, selector, g.latitudes)
    assert weighted_fraction(indicator, selector, g) == pytest.approx(want, abs=1e-14)


def test_weighted_fraction_empty_selection():
    g = _band_grid()
    with pytest.raises(UndefinedFractionError):
        weighted_fraction(np.ones(g.shape, bool), np.zeros(g.shape, bool), g)


def test_weighted_fraction_zero_weight_selection():
    g = Grid(np.array([-90.0, 90.0]), np.array([0.0]))
    sel = np.ones(g.shape, dtype=bool)  # only poles: zero total weight
    with pytest.raises(UndefinedFractionError):
        weighted_fraction(sel, sel, g)


def test_weighted_fraction_shape_mismatch():
    g = _band_grid()
    with pytest.raises(GridMismatchError):
        weighted_fraction(np.ones((3, 3), bool), np.ones(g.shape, bool), g)
