"""Region lookup: containment, precedence, aliases, winding-number oracle."""

import json

import pytest

from _helpers import winding_inside
from threatfuse.regions import (
    RegionFileError,
    RegionIndex,
    RegionNotCoveredError,
    _on_boundary,
    load_region_file,
    lookup,
    resolve_region_label,
)


def feature(region_type, rings, geometry_type="Polygon", **extra_properties):
    coordinates = [list(map(list, ring)) for ring in rings]
    if geometry_type == "MultiPolygon":
        coordinates = [[list(map(list, ring))] for ring in rings]
    return {
        "type": "Feature",
        "properties": {"region_type": region_type, **extra_properties},
        "geometry": {"type": geometry_type, "coordinates": coordinates},
    }


def write_collection(tmp_path, features, name="regions.geojson"):
    path = tmp_path / name
    path.write_text(
        json.dumps({"type": "FeatureCollection", "features": features}), encoding="utf-8"
    )
    return path


def square(x0, y0, x1, y1):
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]


@pytest.fixture
def overlap_index(tmp_path, cbrne):
    # a small roadside marker square inside a larger road square
    path = write_collection(
        tmp_path,
        [
            feature("road", [square(0, 0, 10, 10)]),
            feature("roadside marker", [square(2, 2, 4, 4)]),
        ],
    )
    return load_region_file(path, cbrne)


# === containment and precedence ===


def test_lookup_overlap_precedence(overlap_index):
    assert lookup(overlap_index, (3, 3)).label == "roadside marker"
    assert lookup(overlap_index, (8, 8)).label == "road"


def test_boundary_counts_as_inside(overlap_index):
    assert lookup(overlap_index, (0, 0)).label == "road"  # vertex
    assert lookup(overlap_index, (5, 0)).label == "road"  # edge midpoint
    assert lookup(overlap_index, (2, 3)).label == "roadside marker"  # inner edge


def test_lookup_not_covered(overlap_index):
    with pytest.raises(RegionNotCoveredError, match=r"\(50.0, 50.0\)"):
        lookup(overlap_index, (50, 50))


def test_lookup_repeated_is_deterministic(overlap_index):
    results = {lookup(overlap_index, (3.3, 3.7)).label for _ in range(20)}
    assert results == {"roadside marker"}


def test_default_region_fallback(tmp_path, cbrne):
    path = write_collection(tmp_path, [])
    index = load_region_file(path, cbrne, default_region="grassland")
    assert lookup(index, (123, -456)).label == "grassland"


def test_no_polygons_no_default(tmp_path, cbrne):
    index = load_region_file(write_collection(tmp_path, []), cbrne)
    with pytest.raises(RegionNotCoveredError):
        lookup(index, (0, 0))


def test_equal_precedence_file_order(tmp_path, basic):
    # R1/R2 are absent from the default ranking, so both are unranked;
    # the earlier feature wins in the overlap
    path = write_collection(
        tmp_path,
        [
            feature("R2", [square(0, 0, 10, 10)]),
            feature("R1", [square(5, 5, 15, 15)]),
        ],
    )
    index = load_region_file(path, basic)
    assert lookup(index, (7, 7)).label == "R2"
    assert lookup(index, (12, 12)).label == "R1"


def test_precedence_override_map(tmp_path, cbrne):
    path = write_collection(
        tmp_path,
        [
            feature("road", [square(0, 0, 10, 10)]),
            feature("roadside marker", [square(2, 2, 4, 4)]),
        ],
    )
    index = load_region_file(
        path, cbrne, precedence={"road": 9, "roadside marker": 1}
    )
    assert lookup(index, (3, 3)).label == "road"


def test_per_feature_precedence_property(tmp_path, cbrne):
    path = write_collection(
        tmp_path,
        [
            feature("road", [square(0, 0, 10, 10)], precedence=99),
            feature("roadside marker", [square(2, 2, 4, 4)]),
        ],
    )
    index = load_region_file(path, cbrne)
    assert lookup(index, (3, 3)).label == "road"


def test_full_precedence_chain(tmp_path, cbrne):
    # six nested squares, least specific outermost
    labels = ["grassland", "road", "road bend", "road junction", "road overpass",
              "roadside marker"]
    feats = [
        feature(label, [square(-60 + 10 * k, -60 + 10 * k, 60 - 10 * k, 60 - 10 * k)])
        for k, label in enumerate(labels)
    ]
    index = load_region_file(write_collection(tmp_path, feats), cbrne)
    assert lookup(index, (0, 0)).label == "roadside marker"
    assert lookup(index, (0, 14)).label == "road overpass"
    assert lookup(index, (0, 24)).label == "road junction"
    assert lookup(index, (0, 34)).label == "road bend"
    assert lookup(index, (0, 44)).label == "road"
    assert lookup(index, (0, 54)).label == "grassland"


# === geometry handling ===


def test_multipolygon_and_hole(tmp_path, cbrne):
    donut = feature(
        "road",
        [square(0, 0, 10, 10), square(4, 4, 6, 6)],  # outer ring plus hole
    )
    two_parts = feature(
        "grassland", [square(20, 0, 25, 5), square(30, 0, 35, 5)],
        geometry_type="MultiPolygon",
    )
    index = load_region_file(write_collection(tmp_path, [donut, two_parts]), cbrne,
                             default_region="road junction")
    assert lookup(index, (1, 1)).label == "road"
    assert lookup(index, (5, 5)).label == "road junction"  # inside the hole
    assert lookup(index, (4, 4)).label == "road"  # hole boundary is polygon boundary
    assert lookup(index, (22, 2)).label == "grassland"
    assert lookup(index, (32, 2)).label == "grassland"
    assert lookup(index, (27, 2)).label == "road junction"


def test_unclosed_ring_is_normalised(tmp_path, cbrne):
    open_ring = [(0, 0), (10, 0), (10, 10), (0, 10)]
    index = load_region_file(
        write_collection(tmp_path, [feature("road", [open_ring])]), cbrne
    )
    assert lookup(index, (5, 5)).label == "road"
    assert lookup(index, (0, 0)).label == "road"


def test_concave_polygon(tmp_path, cbrne):
    # an L-shape: the notch (6..10, 6..10) is outside
    ring = [(0, 0), (10, 0), (10, 6), (6, 6), (6, 10), (0, 10), (0, 0)]
    index = load_region_file(
        write_collection(tmp_path, [feature("road", [ring])]), cbrne,
        default_region="grassland",
    )
    assert lookup(index, (3, 3)).label == "road"
    assert lookup(index, (8, 3)).label == "road"
    assert lookup(index, (8, 8)).label == "grassland"


# === label resolution ===


def test_alias_resolution(tmp_path, cbrne):
    path = write_collection(tmp_path, [feature("meadow", [square(0, 0, 5, 5)])])
    index = load_region_file(path, cbrne)
    assert lookup(index, (1, 1)).label == "grassland"


def test_alias_chain(cbrne):
    from dataclasses import replace

    chained = replace(cbrne, aliases=cbrne.aliases + (("lawn", "grass"),))
    assert resolve_region_label("lawn", chained).label == "grassland"


def test_alias_cycle(cbrne):
    from dataclasses import replace

    cyclic = replace(cbrne, aliases=(("a", "b"), ("b", "a")))
    with pytest.raises(RegionFileError, match="alias cycle"):
        resolve_region_label("a", cyclic)


def test_unknown_label_lists_valid(tmp_path, cbrne):
    path = write_collection(tmp_path, [feature("runway", [square(0, 0, 5, 5)])])
    with pytest.raises(RegionFileError, match="'runway'") as err:
        load_region_file(path, cbrne)
    assert "grassland" in str(err.value)


def test_unknown_default_region(tmp_path, cbrne):
    path = write_collection(tmp_path, [])
    with pytest.raises(RegionFileError, match="'swamp'"):
        load_region_file(path, cbrne, default_region="swamp")


# === file validation ===


def test_malformed_json(tmp_path, cbrne):
    path = tmp_path / "bad.geojson"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(RegionFileError, match="malformed"):
        load_region_file(path, cbrne)


def test_missing_file(tmp_path, cbrne):
    with pytest.raises(RegionFileError, match="cannot read"):
        load_region_file(tmp_path / "absent.geojson", cbrne)


def test_not_a_feature_collection(tmp_path, cbrne):
    path = tmp_path / "bad.geojson"
    path.write_text(json.dumps({"type": "Feature"}), encoding="utf-8")
    with pytest.raises(RegionFileError, match="FeatureCollection"):
        load_region_file(path, cbrne)


def test_missing_region_type(tmp_path, cbrne):
    bad = feature("road", [square(0, 0, 5, 5)])
    del bad["properties"]["region_type"]
    with pytest.raises(RegionFileError, match="region_type"):
        load_region_file(write_collection(tmp_path, [bad]), cbrne)


def test_bad_geometry_type(tmp_path, cbrne):
    bad = feature("road", [square(0, 0, 5, 5)])
    bad["geometry"]["type"] = "LineString"
    with pytest.raises(RegionFileError, match="LineString"):
        load_region_file(write_collection(tmp_path, [bad]), cbrne)


def test_degenerate_ring(tmp_path, cbrne):
    bad = feature("road", [[(0, 0), (5, 5), (0, 0)]])
    with pytest.raises(RegionFileError, match="3 distinct vertices"):
        load_region_file(write_collection(tmp_path, [bad]), cbrne)


def test_non_numeric_coordinates(tmp_path, cbrne):
    bad = feature("road", [[(0, 0), ("x", 1), (1, 1), (0, 0)]])
    with pytest.raises(RegionFileError, match="not an \\[x, y\\] pair"):
        load_region_file(write_collection(tmp_path, [bad]), cbrne)


def test_bad_precedence_property(tmp_path, cbrne):
    bad = feature("road", [square(0, 0, 5, 5)], precedence="high")
    with pytest.raises(RegionFileError, match="'precedence'"):
        load_region_file(write_collection(tmp_path, [bad]), cbrne)


# === winding-number oracle ===


def test_oracle_grid_against_winding(tmp_path, cbrne):
    # five simple polygons: convex, concave, triangle, thin sliver, diamond
    feats = [
        feature("grassland", [square(5, 5, 95, 95)]),
        feature("road", [[(10, 10), (60, 10), (60, 40), (35, 40), (35, 70),
                          (10, 70), (10, 10)]]),
        feature("road junction", [[(50, 50), (90, 55), (70, 90), (50, 50)]]),
        feature("road bend", [[(20, 80), (80, 82), (80, 84), (20, 82), (20, 80)]]),
        feature("roadside marker", [[(40, 20), (55, 35), (40, 50), (25, 35), (40, 20)]]),
    ]
    index = load_region_file(write_collection(tmp_path, feats), cbrne)
    checked = 0
    for ix in range(100):
        for iy in range(100):
            x, y = ix + 0.25, iy + 0.25
            if any(
                _on_boundary(x, y, ring)
                for poly in index.polygons
                for ring in poly.rings
            ):
                continue
            checked += 1
            for poly in index.polygons:
                assert poly.contains(x, y) == winding_inside(x, y, poly.rings), (
                    f"disagreement at ({x}, {y}) for {poly.region.label}"
                )
    assert checked > 9000  # the grid is essentially all off-boundary


def test_region_index_dataclass_direct_use(cbrne):
    index = RegionIndex(polygons=(), default_region=cbrne.regions[0])
    assert index.lookup(1.0, 2.0).label == "grassland"
