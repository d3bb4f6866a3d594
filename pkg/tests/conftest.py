import numpy as np
import pytest

from stormdiag.balance import CycloneVelocity
from stormdiag.grids import Field, GridSpec
from stormdiag.synth import VortexSpec


def offset_global_grid(nlat, nlon):
    """Global grid with latitude rows offset half a step from the poles."""
    dlat = 180.0 / nlat
    return GridSpec(nlat=nlat, nlon=nlon,
                    lat_start=90.0 - dlat / 2.0, lat_step=-dlat,
                    lon_start=0.0, lon_step=360.0 / nlon,
                    includes_poles=False, global_lon=True)


def lobatto_global_grid(nlat, nlon):
    """Global grid with pole-to-pole latitude rows."""
    return GridSpec(nlat=nlat, nlon=nlon,
                    lat_start=90.0, lat_step=-180.0 / (nlat - 1),
                    lon_start=0.0, lon_step=360.0 / nlon,
                    includes_poles=True, global_lon=True)


def patch_grid(lat_north=70.0, lat_south=30.0, lon_west=320.0,
               lon_east=10.0, step=0.25):
    """Regional grid (non-global), defaults wrap the prime meridian."""
    span_lon = (lon_east - lon_west) % 360.0
    nlat = int(round((lat_north - lat_south) / step)) + 1
    nlon = int(round(span_lon / step)) + 1
    return GridSpec(nlat=nlat, nlon=nlon,
                    lat_start=lat_north, lat_step=-step,
                    lon_start=lon_west % 360.0, lon_step=step,
                    includes_poles=False, global_lon=False)


@pytest.fixture
def small_grid():
    return offset_global_grid(16, 32)


@pytest.fixture
def t106_grid():
    # smallest comfortable grid for lmax = 106: nlat >= 214, nlon >= 213
    return offset_global_grid(240, 480)


@pytest.fixture
def vortex():
    return VortexSpec(center_lat=50.0, center_lon=340.0,
                      amplitude=3000.0, radius_scale=400e3,
                      balance="gradient",
                      translation=CycloneVelocity(0.0, 0.0),
                      f_mode="f-plane")


def make_field(spec, values=None, variable="z", level=850.0,
               valid_time="2023-11-01T12:00:00Z", units=None):
    from stormdiag.grids import CANONICAL_UNITS
    if values is None:
        values = np.zeros(spec.shape)
    if units is None:
        units = CANONICAL_UNITS.get(variable, "")
    return Field(spec, variable, level, valid_time, values, units)
