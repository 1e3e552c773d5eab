"""Wall dimensions from an STL mesh (axis-aligned bounding box only)."""

from __future__ import annotations

import struct

import numpy as np

from .wallplan import WallSpec


class MeshError(ValueError):
    pass


def _binary_vertices(data: bytes):
    if len(data) < 84:
        return None
    (count,) = struct.unpack_from("<I", data, 80)
    if len(data) != 84 + 50 * count:
        return None
    if count == 0:
        return np.zeros((0, 3))
    dt = np.dtype([("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    facets = np.frombuffer(data, dtype=dt, count=count, offset=84)
    return facets["v"].reshape(-1, 3).astype(float)


def _ascii_vertices(data: bytes):
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise MeshError("STL is neither binary nor ASCII") from exc
    tokens = text.split()
    if not tokens or tokens[0].lower() != "solid":
        raise MeshError("ASCII STL must start with 'solid'")
    verts = []
    for i, tok in enumerate(tokens):
        if tok.lower() == "vertex":
            try:
                verts.append([float(t) for t in tokens[i + 1:i + 4]])
            except ValueError as exc:
                raise MeshError(f"bad vertex near token {i}") from exc
            if len(verts[-1]) != 3:
                raise MeshError("truncated vertex")
    if len(verts) % 3:
        raise MeshError("vertex count is not a multiple of 3")
    return np.array(verts, dtype=float).reshape(-1, 3)


def mesh_vertices(stl_bytes: bytes) -> np.ndarray:
    verts = _binary_vertices(stl_bytes)
    if verts is None:
        verts = _ascii_vertices(stl_bytes)
    return verts


def ingest_mesh_bounds(stl_bytes: bytes, decimals: int = 6) -> WallSpec:
    """Wall extents from the mesh AABB: largest -> length, middle -> height, smallest -> width.

    Extents are rounded to ``decimals`` places to drop float32 noise of binary STL.
    """
    verts = mesh_vertices(stl_bytes)
    if len(verts) == 0:
        raise MeshError("mesh has no facets")
    ext = verts.max(axis=0) - verts.min(axis=0)
    ext = sorted((round(float(e), decimals) for e in ext), reverse=True)
    if ext[-1] <= 0:
        raise MeshError(f"degenerate mesh extents {ext}")
    return WallSpec(length=ext[0], height=ext[1], width=ext[2])


def box_stl(lx: float, ly: float, lz: float, binary: bool = True) -> bytes:
    """Closed box mesh with one corner at the origin; handy for fixtures."""
    c = np.array(
        [[x, y, z] for x in (0, lx) for y in (0, ly) for z in (0, lz)], dtype=float
    )
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    tris = []
    for a, b, cc, d in quads:
        tris.append((a, b, cc))
        tris.append((a, cc, d))
    if binary:
        out = bytearray(b"box".ljust(80, b"\0"))
        out += struct.pack("<I", len(tris))
        for t in tris:
            out += struct.pack("<3f", 0.0, 0.0, 0.0)
            for k in t:
                out += struct.pack("<3f", *c[k])
            out += struct.pack("<H", 0)
        return bytes(out)
    lines = ["solid box"]
    for t in tris:
        lines += ["facet normal 0 0 0", " outer loop"]
        lines += [f"  vertex {float(c[k][0])!r} {float(c[k][1])!r} {float(c[k][2])!r}" for k in t]
        lines += [" endloop", "endfacet"]
    lines.append("endsolid box")
    return ("\n".join(lines) + "\n").encode("ascii")
