import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectrumqa.propagation import (
    LOW_ELEVATION_CLAMP,
    atmospheric_attenuation,
    elevation_angle,
    free_space_path_loss,
    link_geometry,
    received_power,
    slant_range,
)
from spectrumqa.scenarios import BANDS, Transmitter


def fspl_oracle(distance_km: float, frequency_mhz: float) -> float:
    """Independent high-precision evaluation of the path-loss formula."""
    import mpmath as mp

    with mp.workdps(50):
        return float(
            20 * mp.log10(mp.mpf(distance_km))
            + 20 * mp.log10(mp.mpf(frequency_mhz))
            + mp.mpf("32.45")
        )


def test_slant_range_cases():
    assert slant_range(3.0, 4.0) == pytest.approx(5.0, abs=1e-12)
    assert slant_range(0.0, 550.0) == 550.0
    # sqrt(100^2 + 550^2) = sqrt(312500)
    assert slant_range(100.0, 550.0) == pytest.approx(559.0169943749474, abs=1e-9)


def test_slant_range_pythagorean_identity():
    rng = np.random.default_rng(3)
    for _ in range(200):
        dg, h = rng.uniform(0.01, 1000.0, size=2)
        d = slant_range(dg, h)
        assert d * d == pytest.approx(dg * dg + h * h, rel=1e-9)


def test_slant_range_degenerate():
    with pytest.raises(ValueError):
        slant_range(0.0, 0.0)
    with pytest.raises(ValueError):
        slant_range(-1.0, 5.0)


def test_link_geometry_invariants():
    rng = np.random.default_rng(17)
    for _ in range(100):
        dg = float(rng.uniform(0.0, 500.0))
        h = float(rng.uniform(0.1, 36_000.0))
        geo = link_geometry(dg, h)
        assert geo.slant_range_km**2 == pytest.approx(dg * dg + h * h, rel=1e-9)
        assert 0.0 < geo.elevation_deg <= 90.0
    nadir = link_geometry(0.0, 550.0)
    assert (nadir.slant_range_km, nadir.elevation_deg) == (550.0, 90.0)


def test_fspl_reference_values():
    assert free_space_path_loss(1.0, 1.0) == 32.45
    assert free_space_path_loss(550.0, 2500.0) == pytest.approx(155.21605396332563, abs=1e-9)
    # hand evaluation: 20 + 20*log10(1500) + 32.45
    assert free_space_path_loss(10.0, 1500.0) == pytest.approx(115.97182518111363, abs=1e-9)


def test_fspl_rejects_nonpositive():
    for d, f in [(0.0, 100.0), (10.0, 0.0), (-1.0, 100.0), (10.0, -5.0)]:
        with pytest.raises(ValueError):
            free_space_path_loss(d, f)


def test_fspl_matches_extended_precision_oracle():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        d = float(rng.uniform(0.001, 50_000.0))
        f = float(rng.uniform(1.0, 100_000.0))
        assert abs(free_space_path_loss(d, f) - fspl_oracle(d, f)) < 1e-9


@given(
    f1=st.floats(min_value=1.0, max_value=1e6),
    f2=st.floats(min_value=1.0, max_value=1e6),
)
@settings(max_examples=200)
def test_fspl_frequency_law(f1, f2):
    lhs = free_space_path_loss(42.0, f2) - free_space_path_loss(42.0, f1)
    assert abs(lhs - 20.0 * math.log10(f2 / f1)) < 1e-9


def test_elevation_cases():
    assert elevation_angle(0.0, 550.0) == 90.0
    assert elevation_angle(550.0, 550.0) == pytest.approx(45.0, abs=1e-12)
    assert elevation_angle(100.0, 550.0) == pytest.approx(79.69515353123397, abs=1e-9)
    assert elevation_angle(12.0, 0.0) == 0.0


def test_atmospheric_attenuation():
    ka_zenith = BANDS["Ka"].zenith_attenuation_db
    assert atmospheric_attenuation("Ka", 90.0) == pytest.approx(ka_zenith, abs=1e-12)
    assert atmospheric_attenuation("Ka", 30.0) == pytest.approx(2.0 * ka_zenith, abs=1e-12)
    # cosecant clamp engages below ~5.74 degrees
    assert atmospheric_attenuation("Ka", 1.0) == pytest.approx(
        LOW_ELEVATION_CLAMP * ka_zenith, abs=1e-12
    )
    with pytest.raises(ValueError):
        atmospheric_attenuation("Ka", 0.0)
    with pytest.raises(ValueError):
        atmospheric_attenuation("Ka", 120.0)


def _satellite(x=0.0, y=0.0, band="S", h=550.0, power=60.0) -> Transmitter:
    return Transmitter("sat-00", "satellite", (x, y), h, band, power)


def _base_station(x=0.0, y=0.0, band="L", power=46.0) -> Transmitter:
    return Transmitter("bs-00", "base_station", (x, y), 0.0, band, power)


def test_received_power_satellite_chain():
    # P_t 60 over a 550 km nadir link at S band, minus a manual 1.2 dB of
    # atmosphere, reproduces the pure-arithmetic composition.
    loss = free_space_path_loss(550.0, 2500.0)
    assert 60.0 - loss - 1.2 == pytest.approx(-96.41605396332564, abs=1e-9)
    # the implementation applies the band's own zenith value at nadir
    sat = _satellite()
    expected = 60.0 - loss - BANDS["S"].zenith_attenuation_db
    assert received_power(sat, (0.0, 0.0)) == pytest.approx(expected, abs=1e-12)


def test_received_power_terrestrial_no_atmosphere():
    bs = _base_station()
    # horizontal offset 1 km at L band: 46 - fspl(1, 1500)
    expected = 46.0 - free_space_path_loss(1.0, 1500.0)
    assert received_power(bs, (1.0, 0.0)) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(-49.971825181113626, abs=1e-9)


def test_received_power_distance_doubling_law():
    bs = _base_station()
    p1 = received_power(bs, (2.0, 0.0))
    p2 = received_power(bs, (4.0, 0.0))
    assert p1 - p2 == pytest.approx(20.0 * math.log10(2.0), abs=1e-9)


def test_received_power_monotone_in_range():
    sat = _satellite()
    offsets = np.linspace(0.0, 300.0, 150)
    powers = received_power(sat, (offsets, np.zeros_like(offsets)))
    assert np.all(np.diff(powers) < 0)


def test_received_power_zero_distance_clamped():
    bs = _base_station()
    at_site = received_power(bs, (0.0, 0.0))
    assert math.isfinite(at_site)
    # equals the 1 m clamp distance evaluation
    assert at_site == pytest.approx(46.0 - free_space_path_loss(0.001, 1500.0), abs=1e-12)


def test_received_power_broadcasts_over_grids():
    sat = _satellite(x=25.0, y=25.0)
    xs, ys = np.meshgrid(np.linspace(0, 50, 64), np.linspace(0, 50, 64))
    grid = received_power(sat, (xs, ys))
    assert grid.shape == (64, 64)
    scalar = received_power(sat, (float(xs[5, 7]), float(ys[5, 7])))
    assert grid[5, 7] == pytest.approx(scalar, abs=1e-12)
