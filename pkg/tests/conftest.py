import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tilereduce.model import (
    AttributeType,
    Geometry,
    GeometryKind,
    Schema,
    tile,
)

TOY_SIDE = 8
TOY_EXTENT = 4096
_PX = TOY_EXTENT / TOY_SIDE


def pixel_rect(c0, r0, c1, r1, inset=0.25):
    """Axis-aligned rectangle in pixel units, inset so that the boundary
    stroke stays inside the filled cells; covers exactly
    (c1-c0) x (r1-r0) pixels on the toy grid."""
    ring = [
        (c0 + inset, r0 + inset), (c1 - inset, r0 + inset),
        (c1 - inset, r1 - inset), (c0 + inset, r1 - inset),
        (c0 + inset, r0 + inset),
    ]
    return Geometry(GeometryKind.POLYGON, (tuple((x * _PX, y * _PX) for x, y in ring),))


LAKE_SCHEMA = Schema((
    ("geometry", AttributeType.GEOMETRY),
    ("name", AttributeType.STR),
    ("salinity", AttributeType.STR),
))

# Four disjoint rectangular lakes with pixel footprints 18 / 14 / 8 / 4 on
# the 8x8 grid (44 covered pixels, 20 empty).
G1 = pixel_rect(0, 0, 6, 3)
G2 = pixel_rect(0, 4, 7, 6)
G3 = pixel_rect(0, 6, 4, 8)
G4 = pixel_rect(5, 6, 7, 8)


@pytest.fixture
def lakes_display():
    """The four-lake tile as displayed: salinity alternates f/s/s/f."""
    return tile(LAKE_SCHEMA, [
        (G1, "Azul", "f"),
        (G2, "Birch", "s"),
        (G3, "Cobalt", "s"),
        (G4, "Dune", "f"),
    ])


@pytest.fixture
def lakes_metric():
    """The four-lake tile whose pixel counts match the reference
    distribution table (fresh on the two big lakes): the fixture every
    frozen metric value in the suite is computed against."""
    return tile(LAKE_SCHEMA, [
        (G1, "Azul", "f"),
        (G2, "Birch", "f"),
        (G3, "Cobalt", "s"),
        (G4, "Dune", "s"),
    ])
