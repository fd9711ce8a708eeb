"""Walk the distortion metric through a tiny four-lake tile.

Builds an 8x8-pixel tile of four rectangular lakes, nulls a few attribute
cells, and prints every intermediate quantity: pixel counts, smoothed
distributions, per-column divergence, entropy weights, and the final
tile-level distortion.

Run:  python demos/01_toy_walkthrough.py
"""

from tilereduce import codec
from tilereduce.metrics import TldParams, entropy, smooth, tld, tld_weights, vad
from tilereduce.model import (
    NULL,
    AttributeType,
    Geometry,
    GeometryKind,
    Schema,
    nullify,
    tile,
)
from tilereduce.raster import PixelGrid, attribute_image, pixel_counts, pixel_footprints

EXTENT = 4096
SIDE = 8
PX = EXTENT / SIDE


def rect(c0, r0, c1, r1, inset=0.25):
    ring = [(c0 + inset, r0 + inset), (c1 - inset, r0 + inset),
            (c1 - inset, r1 - inset), (c0 + inset, r1 - inset),
            (c0 + inset, r0 + inset)]
    return Geometry(GeometryKind.POLYGON, (tuple((x * PX, y * PX) for x, y in ring),))


schema = Schema((
    ("geometry", AttributeType.GEOMETRY),
    ("name", AttributeType.STR),
    ("salinity", AttributeType.STR),
))

t_in = tile(schema, [
    (rect(0, 0, 6, 3), "Azul", "f"),
    (rect(0, 4, 7, 6), "Birch", "f"),
    (rect(0, 6, 4, 8), "Cobalt", "s"),
    (rect(5, 6, 7, 8), "Dune", "s"),
])

# null the two small lakes' names and the smallest lake's salinity
t_out = nullify(nullify(nullify(t_in, 2, 1), 3, 1), 3, 2)

grid = PixelGrid(SIDE)
params = TldParams(grid=grid)

print("== pixel footprints ==")
print(dict(zip(["Azul", "Birch", "Cobalt", "Dune"], pixel_footprints(t_in, grid))))

print("\n== salinity attribute image (input tile) ==")
img = attribute_image(t_in, 2, grid)
for r in range(SIDE):
    print(" ".join((str(v) if v is not NULL else ".")
                   for v in img.pixels[r * SIDE:(r + 1) * SIDE]))

for j, label in ((1, "name"), (2, "salinity")):
    dom = t_in.domain(j)
    p = smooth(pixel_counts(t_in, j, grid), dom, 1.0, grid.resolution)
    q = smooth(pixel_counts(t_out, j, grid), dom, 1.0, grid.resolution)
    print(f"\n== column {label!r} ==")
    print(f"{'value':>10} {'count in':>9} {'count out':>9} {'p in':>9} {'p out':>9}")
    cin = pixel_counts(t_in, j, grid)
    cout = pixel_counts(t_out, j, grid)
    for v in dom:
        print(f"{str(v):>10} {cin.get(v, 0):>9} {cout.get(v, 0):>9} "
              f"{p.prob_of(v):>9.6f} {q.prob_of(v):>9.6f}")
    print(f"entropy(in) = {entropy(p):.6f} bits   divergence = {vad(p, q):.6f}")

w = tld_weights(t_in, params)
print(f"\ninverse-entropy weights: name={w[0]:.6f} salinity={w[1]:.6f}")
print(f"tile-level distortion: {tld(t_in, t_out, params):.6f}")

raw_in = codec.encode(t_in)
raw_out = codec.encode(t_out)
print(f"\nencoded sizes: {len(raw_in)} -> {len(raw_out)} bytes "
      f"({len(raw_in) - len(raw_out)} saved by nulling three cells)")
