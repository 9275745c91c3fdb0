"""Great-circle and toroidal distance primitives.

All geographic math in the package funnels through here so that the sphere
model (mean Earth radius, haversine formula) is fixed in exactly one place.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from .errors import ValidationError

# Mean Earth radius (IUGG R1), km.
EARTH_RADIUS_KM = 6371.0088


def validate_latlon(lat: float, lon: float) -> None:
    """Raise ValidationError unless (lat, lon) is a finite in-bounds coordinate."""
    if not (math.isfinite(lat) and math.isfinite(lon)):
        raise ValidationError(f"non-finite coordinate ({lat}, {lon})")
    if not (-90.0 <= lat <= 90.0):
        raise ValidationError(f"latitude {lat} outside [-90, 90]")
    if not (-180.0 <= lon <= 180.0):
        raise ValidationError(f"longitude {lon} outside [-180, 180]")


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in km between two points given in decimal degrees."""
    validate_latlon(lat1, lon1)
    validate_latlon(lat2, lon2)
    rlat1, rlon1, rlat2, rlon2 = map(math.radians, (lat1, lon1, lat2, lon2))
    a = (math.sin((rlat2 - rlat1) / 2.0) ** 2
         + math.cos(rlat1) * math.cos(rlat2) * math.sin((rlon2 - rlon1) / 2.0) ** 2)
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


def haversine_km_vec(lat1, lon1, lat2, lon2):
    """Vectorized haversine over numpy arrays of decimal degrees (no validation)."""
    rlat1, rlon1 = np.radians(lat1), np.radians(lon1)
    rlat2, rlon2 = np.radians(lat2), np.radians(lon2)
    a = (np.sin((rlat2 - rlat1) / 2.0) ** 2
         + np.cos(rlat1) * np.cos(rlat2) * np.sin((rlon2 - rlon1) / 2.0) ** 2)
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(a)))


def latlon_to_unit_xyz(lat, lon):
    """Map decimal-degree coordinates onto the unit sphere, shape (..., 3)."""
    rlat, rlon = np.radians(lat), np.radians(lon)
    clat = np.cos(rlat)
    return np.stack([clat * np.cos(rlon), clat * np.sin(rlon), np.sin(rlat)], axis=-1)


def pairs_within_radius(lats, lons, radius_km: float):
    """All unordered index pairs closer than radius_km along the great circle.

    Returns (i, j, dist_km) arrays with i < j, sorted lexicographically by
    (i, j). Uses a KD-tree on unit-sphere chords, so the cutoff is exact:
    chord = 2 sin(d / 2R) is monotone in the great-circle distance d.
    """
    lats = np.asarray(lats, dtype=np.float64)
    lons = np.asarray(lons, dtype=np.float64)
    if lats.size < 2 or radius_km <= 0.0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), np.empty(0, dtype=np.float64)
    xyz = latlon_to_unit_xyz(lats, lons)
    half = min(radius_km / (2.0 * EARTH_RADIUS_KM), math.pi / 2.0)
    chord = 2.0 * math.sin(half)
    tree = cKDTree(xyz)
    pairs = tree.query_pairs(chord, output_type="ndarray")
    if pairs.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), np.empty(0, dtype=np.float64)
    i = np.minimum(pairs[:, 0], pairs[:, 1]).astype(np.int64)
    j = np.maximum(pairs[:, 0], pairs[:, 1]).astype(np.int64)
    order = np.lexsort((j, i))
    i, j = i[order], j[order]
    dist = haversine_km_vec(lats[i], lons[i], lats[j], lons[j])
    keep = dist <= radius_km  # KD-tree cutoff is on the open chord ball; re-check inclusively
    return i[keep], j[keep], dist[keep]


def great_circle_samples(lat1, lon1, lat2, lon2, step_km: float):
    """Sample points along the great circle between two coordinates.

    Returns (lats, lons) arrays including both endpoints, spaced at most
    step_km apart (spherical linear interpolation).
    """
    total = haversine_km(lat1, lon1, lat2, lon2)
    n = max(1, int(math.ceil(total / step_km)))
    p1 = latlon_to_unit_xyz(np.float64(lat1), np.float64(lon1))
    p2 = latlon_to_unit_xyz(np.float64(lat2), np.float64(lon2))
    omega = math.acos(float(np.clip(np.dot(p1, p2), -1.0, 1.0)))
    t = np.linspace(0.0, 1.0, n + 1)
    if omega < 1e-12:
        pts = np.outer(np.ones_like(t), p1)
    else:
        s = math.sin(omega)
        pts = (np.outer(np.sin((1.0 - t) * omega), p1) + np.outer(np.sin(t * omega), p2)) / s
    lats = np.degrees(np.arcsin(np.clip(pts[:, 2], -1.0, 1.0)))
    lons = np.degrees(np.arctan2(pts[:, 1], pts[:, 0]))
    return lats, lons


def toroidal_distance(x1, y1, x2, y2, box: float):
    """Shortest displacement on a wrapped [0, box) x [0, box) square."""
    dx = np.abs(np.asarray(x1) - np.asarray(x2))
    dy = np.abs(np.asarray(y1) - np.asarray(y2))
    dx = np.minimum(dx, box - dx)
    dy = np.minimum(dy, box - dy)
    return np.hypot(dx, dy)


def toroidal_pairs_within_radius(xs, ys, radius: float, box: float):
    """Unordered index pairs at toroidal distance <= radius, with distances.

    Brute-force over all pairs; intended for simulation-scale point sets.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    n = xs.size
    ii, jj = np.triu_indices(n, k=1)
    dist = toroidal_distance(xs[ii], ys[ii], xs[jj], ys[jj], box)
    keep = dist <= radius
    return ii[keep].astype(np.int64), jj[keep].astype(np.int64), dist[keep]
