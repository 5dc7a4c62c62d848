"""Region lookup from pre-labelled polygon files.

Maps a 2D position to the region type that feeds the contextual prior.
Region files are GeoJSON FeatureCollections of Polygon or MultiPolygon
features, each carrying a ``region_type`` string property. Labels are
passed through the scenario's alias map before they must match a region
of the scenario. Containment is even-odd and boundary points count as
inside. Overlaps resolve by precedence (most specific label wins), with
file order breaking ties at equal precedence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from threatfuse.fusion import RegionType, Scenario


class RegionFileError(ValueError):
    """Malformed region file or a label that cannot be resolved."""


class RegionNotCoveredError(Exception):
    """No polygon contains the queried position and no default is set."""


# higher rank wins where polygons overlap; labels absent from the map rank
# below every mapped label and fall back to file order among themselves
DEFAULT_PRECEDENCE = {
    "grassland": 0,
    "road": 1,
    "road bend": 2,
    "road junction": 3,
    "road overpass": 4,
    "roadside marker": 5,
}
_UNRANKED = -1

Ring = tuple[tuple[float, float], ...]


def _on_boundary(x: float, y: float, ring: Ring) -> bool:
    for (ax, ay), (bx, by) in zip(ring, ring[1:]):
        cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
        if cross == 0.0 and min(ax, bx) <= x <= max(ax, bx) and min(ay, by) <= y <= max(ay, by):
            return True
    return False


def _crossings_odd(x: float, y: float, rings: tuple[Ring, ...]) -> bool:
    # even-odd ray cast towards +x; the half-open vertical rule keeps
    # vertices on the ray from double counting
    inside = False
    for ring in rings:
        for (ax, ay), (bx, by) in zip(ring, ring[1:]):
            if (ay > y) != (by > y):
                x_cross = ax + (y - ay) / (by - ay) * (bx - ax)
                if x < x_cross:
                    inside = not inside
    return inside


@dataclass(frozen=True)
class RegionPolygon:
    """One labelled feature: all rings of its (multi)polygon geometry."""

    region: RegionType
    rings: tuple[Ring, ...]
    rank: int
    order: int

    def __post_init__(self) -> None:
        for ring in self.rings:
            if len(ring) < 4 or ring[0] != ring[-1]:
                raise ValueError("ring must be closed with at least 3 distinct vertices")

    def contains(self, x: float, y: float) -> bool:
        for ring in self.rings:
            if _on_boundary(x, y, ring):
                return True
        return _crossings_odd(x, y, self.rings)


@dataclass(frozen=True)
class RegionIndex:
    """All polygons of one region file plus an optional fallback region."""

    polygons: tuple[RegionPolygon, ...]
    default_region: Optional[RegionType] = None

    def lookup(self, x: float, y: float) -> RegionType:
        best: Optional[RegionPolygon] = None
        for poly in self.polygons:
            if poly.contains(x, y):
                # earlier file order wins among equal ranks
                if best is None or (poly.rank, -poly.order) > (best.rank, -best.order):
                    best = poly
        if best is not None:
            return best.region
        if self.default_region is not None:
            return self.default_region
        raise RegionNotCoveredError(f"position ({x}, {y}) is outside every region polygon")


def lookup(index: RegionIndex, position: tuple[float, float]) -> RegionType:
    """Region type at a position; most specific label wins on overlap."""
    return index.lookup(float(position[0]), float(position[1]))


def resolve_region_label(label: str, scenario: Scenario) -> RegionType:
    """Map a raw label through the scenario's alias chain to a region type."""
    aliases = dict(scenario.aliases)
    seen = [label]
    current = label
    while current in aliases:
        current = aliases[current]
        if current in seen:
            raise RegionFileError(f"alias cycle for label {label!r}: {' -> '.join(seen)}")
        seen.append(current)
    for region in scenario.regions:
        if region.label == current:
            return region
    valid = [r.label for r in scenario.regions]
    resolved = "" if current == label else f" (resolved to {current!r})"
    raise RegionFileError(
        f"region label {label!r}{resolved} is not one of {valid}"
    )


def _parse_ring(raw, context: str) -> Ring:
    if not isinstance(raw, list):
        raise RegionFileError(f"{context}: ring is not an array")
    points = []
    for pos in raw:
        if (
            not isinstance(pos, list)
            or len(pos) < 2
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in pos[:2])
        ):
            raise RegionFileError(f"{context}: position {pos!r} is not an [x, y] pair")
        points.append((float(pos[0]), float(pos[1])))
    if points and points[0] != points[-1]:
        points.append(points[0])
    if len({p for p in points[:-1]}) < 3:
        raise RegionFileError(f"{context}: ring needs at least 3 distinct vertices")
    return tuple(points)


def _feature_rings(geometry, context: str) -> tuple[Ring, ...]:
    if not isinstance(geometry, dict):
        raise RegionFileError(f"{context}: missing geometry")
    gtype = geometry.get("type")
    coords = geometry.get("coordinates")
    if gtype == "Polygon":
        parts = [coords]
    elif gtype == "MultiPolygon":
        parts = coords
    else:
        raise RegionFileError(
            f"{context}: geometry type {gtype!r} is not Polygon or MultiPolygon"
        )
    if not isinstance(parts, list):
        raise RegionFileError(f"{context}: coordinates are not an array")
    rings = []
    for part in parts:
        if not isinstance(part, list) or not part:
            raise RegionFileError(f"{context}: polygon part has no rings")
        for raw_ring in part:
            rings.append(_parse_ring(raw_ring, context))
    return tuple(rings)


def load_region_file(
    path: str | Path,
    scenario: Scenario,
    *,
    default_region: Optional[str] = None,
    precedence: Optional[dict[str, int]] = None,
) -> RegionIndex:
    """Load a GeoJSON region file against a scenario's region vocabulary.

    ``precedence`` overrides the default label ranking; a feature may also
    carry its own integer ``precedence`` property. ``default_region`` is
    returned for positions no polygon covers.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise RegionFileError(f"cannot read region file {str(path)!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise RegionFileError(f"malformed region file {str(path)!r}: {exc}") from exc

    if not isinstance(data, dict) or data.get("type") != "FeatureCollection":
        raise RegionFileError(f"{path.name}: top level must be a FeatureCollection")
    features = data.get("features")
    if not isinstance(features, list):
        raise RegionFileError(f"{path.name}: 'features' must be an array")

    ranking = DEFAULT_PRECEDENCE if precedence is None else precedence
    polygons = []
    for k, feature in enumerate(features):
        context = f"{path.name}: feature #{k}"
        if not isinstance(feature, dict) or feature.get("type") != "Feature":
            raise RegionFileError(f"{context}: not a Feature")
        properties = feature.get("properties") or {}
        label = properties.get("region_type")
        if not isinstance(label, str) or not label:
            raise RegionFileError(f"{context}: missing 'region_type' string property")
        region = resolve_region_label(label, scenario)
        rank = properties.get("precedence")
        if rank is None:
            rank = ranking.get(region.label, _UNRANKED)
        elif not isinstance(rank, int) or isinstance(rank, bool):
            raise RegionFileError(f"{context}: 'precedence' = {rank!r} is not an integer")
        rings = _feature_rings(feature.get("geometry"), context)
        try:
            polygons.append(RegionPolygon(region=region, rings=rings, rank=rank, order=k))
        except ValueError as exc:
            raise RegionFileError(f"{context}: {exc}") from exc

    default = None
    if default_region is not None:
        default = resolve_region_label(default_region, scenario)
    return RegionIndex(polygons=tuple(polygons), default_region=default)
