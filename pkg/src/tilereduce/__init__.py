"""Budgeted vector-tile pyramids with visualization-aware reduction."""

from .model import (
    NULL,
    AttributeType,
    Feature,
    Geometry,
    GeometryKind,
    Schema,
    Tile,
    TileCoords,
    column_values,
    nullify,
    tile,
    validate,
)
from .raster import PixelGrid, attribute_image, pixel_counts, pixel_footprints, rasterize
from .metrics import PixelDistribution, TldParams, cell_divergence, entropy, kld, smooth, tld, vad

__all__ = [
    "NULL",
    "AttributeType",
    "Feature",
    "Geometry",
    "GeometryKind",
    "PixelDistribution",
    "PixelGrid",
    "Schema",
    "Tile",
    "TileCoords",
    "TldParams",
    "attribute_image",
    "cell_divergence",
    "column_values",
    "entropy",
    "kld",
    "nullify",
    "pixel_counts",
    "pixel_footprints",
    "rasterize",
    "smooth",
    "tile",
    "tld",
    "vad",
    "validate",
]

__version__ = "0.1.0"
