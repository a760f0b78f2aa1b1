"""Sparse-supervision aboveground biomass mapping.

Thin wrapper over the native ``_agbmap`` module. Rasters carry their grid,
channel names ("S2:B08", "SIF:GPP", ...) and a per-pixel validity mask;
``Raster.values()`` returns a (channels, height, width) float64 array with
NaN at invalid pixels.

    import agbmap
    params = agbmap.SceneParams()
    params.size = 128
    scene = agbmap.generate_scene(params)
    layers = agbmap.prepare_site(scene, agbmap.sample_footprints(scene.true_agb, params))
    cube = agbmap.normalize(agbmap.site_cube(layers, "SIF/S1/S2"))
"""

from ._agbmap import *  # noqa: F401,F403
from ._agbmap import AgbmapError, __version__


def error_code(exc: AgbmapError) -> str:
    """The error code name an AgbmapError message starts with, e.g. "GridMismatch"."""
    return str(exc).split(":", 1)[0]
