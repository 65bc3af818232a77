"""Reference simplices, barycentric symmetry orbits, and node-set assembly.

The reference elements are the bi-unit ones commonly used for nodal DG /
SBP work:

* interval  [-1, 1]                                   (measure 2)
* triangle  (-1,-1), (1,-1), (-1,1)                   (measure 2)
* tet       (-1,-1,-1), (1,-1,-1), (-1,1,-1), (-1,-1,1)  (measure 4/3)

A symmetry orbit is the set of points generated by permuting a barycentric
generator; every generator used here is affine in its free parameters, so
each orbit carries an exact (constant, coefficient) representation that
also yields node derivatives with respect to the parameters for free.

Facet f of an element is the facet opposite vertex f; its vertex list is
the remaining vertices in increasing index order, and facet-local
coordinates come from identifying the facet's barycentric coordinates (in
that vertex order) with the (d-1)-dimensional reference simplex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "DUPLICATE_TOL",
    "CLOSURE_TOL",
    "NodeSetError",
    "DegenerateOrbitError",
    "Facet",
    "ReferenceSimplex",
    "reference_simplex",
    "OrbitStructure",
    "orbit_structure",
    "orbit_size",
    "orbit_kinds",
    "kind_is_facet",
    "kind_param_count",
    "SymmetryOrbit",
    "GroupSignature",
    "NodeSet",
    "expand_orbit",
    "assemble_nodes",
    "min_node_spacing",
    "facet_restriction",
    "node_set_is_symmetric",
]

#: two nodes closer than this (in barycentric distance) are duplicates
DUPLICATE_TOL = 1e-12
#: barycentric coordinates may undershoot zero by at most this much
CLOSURE_TOL = 1e-14


class NodeSetError(ValueError):
    """A node configuration violates closure/duplication constraints."""


class DegenerateOrbitError(NodeSetError):
    """Orbit parameters collapse two or more nodes of the orbit."""


# ----------------------------------------------------------------------
# reference elements


@dataclass(frozen=True)
class Facet:
    """One facet of a reference simplex.

    index is the id of the opposite vertex; vertex_ids are the remaining
    vertices (increasing); normal is the outward unit normal; measure is
    the facet's (d-1)-measure, with point facets assigned measure 1.
    """

    index: int
    vertex_ids: tuple[int, ...]
    normal: np.ndarray
    measure: float


@dataclass(frozen=True)
class ReferenceSimplex:
    dim: int
    vertices: np.ndarray          # (d+1, d)
    measure: float
    facets: tuple[Facet, ...]

    @property
    def n_vertices(self) -> int:
        return self.dim + 1

    def barycentric(self, coords: np.ndarray) -> np.ndarray:
        """Barycentric coordinates of cartesian points, shape (n, d+1)."""
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        n = coords.shape[0]
        # solve  [V^T; 1] lam = [x; 1]  for each point
        m = np.vstack([self.vertices.T, np.ones(self.dim + 1)])
        rhs = np.hstack([coords, np.ones((n, 1))]).T
        return np.linalg.solve(m, rhs).T

    def from_barycentric(self, bary: np.ndarray) -> np.ndarray:
        bary = np.atleast_2d(np.asarray(bary, dtype=float))
        return bary @ self.vertices


def _facet_geometry(verts: np.ndarray, centroid: np.ndarray):
    """Outward unit normal and measure of the facet spanned by verts."""
    d = centroid.shape[0]
    if d == 1:
        normal = np.array([1.0])
        measure = 1.0
    elif d == 2:
        t = verts[1] - verts[0]
        normal = np.array([t[1], -t[0]])
        measure = float(np.linalg.norm(t))
        normal /= np.linalg.norm(normal)
    else:
        cr = np.cross(verts[1] - verts[0], verts[2] - verts[0])
        measure = 0.5 * float(np.linalg.norm(cr))
        normal = cr / np.linalg.norm(cr)
    if normal @ (verts.mean(axis=0) - centroid) < 0:
        normal = -normal
    return normal, measure


_SIMPLEX_CACHE: dict[int, ReferenceSimplex] = {}


def reference_simplex(d: int) -> ReferenceSimplex:
    """Bi-unit reference simplex of dimension d in {1, 2, 3}."""
    if d in _SIMPLEX_CACHE:
        return _SIMPLEX_CACHE[d]
    if d == 1:
        verts = np.array([[-1.0], [1.0]])
        measure = 2.0
    elif d == 2:
        verts = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
        measure = 2.0
    elif d == 3:
        verts = np.array([[-1.0, -1.0, -1.0], [1.0, -1.0, -1.0],
                          [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]])
        measure = 4.0 / 3.0
    else:
        raise ValueError(f"unsupported dimension {d}")
    centroid = verts.mean(axis=0)
    facets = []
    for f in range(d + 1):
        ids = tuple(i for i in range(d + 1) if i != f)
        normal, fmeas = _facet_geometry(verts[list(ids)], centroid)
        normal.flags.writeable = False
        facets.append(Facet(f, ids, normal, fmeas))
    verts.flags.writeable = False
    elem = ReferenceSimplex(d, verts, measure, tuple(facets))
    _SIMPLEX_CACHE[d] = elem
    return elem


# ----------------------------------------------------------------------
# orbit generators
#
# Each generator is affine in its parameters: lam = base + coeff @ theta.
# base/coeff entries are exact rationals so expanded coordinates such as
# 0 and 1/2 come out bit-exact.

_F = Fraction
_GENERATORS: dict[tuple[int, str], tuple[tuple, tuple, bool]] = {
    # (dim, kind): (base, coeff rows, is_facet)
    (2, "S1"): ((_F(1, 3),) * 3, ((), (), ()), False),
    (2, "S21"): ((0, 0, 1), ((1,), (1,), (-2,)), False),
    (2, "S111"): ((0, 0, 1), ((1, 0), (0, 1), (-1, -1)), False),
    (2, "Svert"): ((1, 0, 0), ((), (), ()), True),
    (2, "SmidEdge"): ((_F(1, 2), _F(1, 2), 0), ((), (), ()), True),
    (2, "Sedge"): ((0, 1, 0), ((1,), (-1,), (0,)), True),
    (3, "S1"): ((_F(1, 4),) * 4, ((), (), (), ()), False),
    (3, "S31"): ((0, 0, 0, 1), ((1,), (1,), (1,), (-3,)), False),
    (3, "S22"): ((0, 0, _F(1, 2), _F(1, 2)),
                 ((1,), (1,), (-1,), (-1,)), False),
    (3, "S211"): ((0, 0, 0, 1),
                  ((1, 0), (1, 0), (0, 1), (-2, -1)), False),
    (3, "S1111"): ((0, 0, 0, 1),
                   ((1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, -1, -1)), False),
    (3, "SfaceCent"): ((_F(1, 3), _F(1, 3), _F(1, 3), 0),
                       ((), (), (), ()), True),
    (3, "Svert"): ((1, 0, 0, 0), ((), (), (), ()), True),
    (3, "SmidEdge"): ((_F(1, 2), _F(1, 2), 0, 0), ((), (), (), ()), True),
    (3, "Sface21"): ((0, 0, 1, 0), ((1,), (1,), (-2,), (0,)), True),
    (3, "Sedge"): ((0, 1, 0, 0), ((1,), (-1,), (0,), (0,)), True),
    (3, "Sface111"): ((0, 0, 1, 0),
                      ((1, 0), (0, 1), (-1, -1), (0, 0)), True),
}

#: canonical ordering rank; facet kinds sort before interior kinds
_KIND_RANK = {
    (2, "Svert"): 0, (2, "SmidEdge"): 1, (2, "Sedge"): 2,
    (2, "S1"): 10, (2, "S21"): 11, (2, "S111"): 12,
    (3, "Svert"): 0, (3, "SmidEdge"): 1, (3, "SfaceCent"): 2,
    (3, "Sedge"): 3, (3, "Sface21"): 4, (3, "Sface111"): 5,
    (3, "S1"): 10, (3, "S31"): 11, (3, "S22"): 12,
    (3, "S211"): 13, (3, "S1111"): 14,
}


@dataclass(frozen=True)
class OrbitStructure:
    """Exact affine structure of one orbit kind in one dimension.

    Expanding with parameters theta gives barycentric rows
    base[perm] + coeff[perm] @ theta for each distinct permutation perm.
    """

    kind: str
    dim: int
    n_params: int
    is_facet: bool
    base: np.ndarray        # (size, d+1)
    coeff: np.ndarray       # (size, d+1, n_params)
    size: int


_STRUCT_CACHE: dict[tuple[int, str], OrbitStructure] = {}


def orbit_structure(kind: str, d: int) -> OrbitStructure:
    key = (d, kind)
    if key in _STRUCT_CACHE:
        return _STRUCT_CACHE[key]
    if key not in _GENERATORS:
        raise ValueError(f"unknown orbit kind {kind!r} for dimension {d}")
    base, coeff, is_facet = _GENERATORS[key]
    m = d + 1
    n_params = len(coeff[0])
    # distinct permutations, decided symbolically on (base_i, coeff_i) rows
    rowsig = [(base[i], tuple(coeff[i])) for i in range(m)]
    seen = set()
    perms = []
    for sigma in itertools.permutations(range(m)):
        sig = tuple(rowsig[sigma[i]] for i in range(m))
        if sig not in seen:
            seen.add(sig)
            perms.append(sigma)
    size = len(perms)
    base_arr = np.empty((size, m))
    coeff_arr = np.empty((size, m, n_params))
    for k, sigma in enumerate(perms):
        for i in range(m):
            base_arr[k, i] = float(base[sigma[i]])
            coeff_arr[k, i, :] = [float(c) for c in coeff[sigma[i]]]
    base_arr.flags.writeable = False
    coeff_arr.flags.writeable = False
    struct = OrbitStructure(kind, d, n_params, is_facet, base_arr,
                            coeff_arr, size)
    _STRUCT_CACHE[key] = struct
    return struct


def orbit_kinds(d: int) -> list[str]:
    """All orbit kinds for dimension d in canonical order."""
    kinds = [k for (dd, k) in _GENERATORS if dd == d]
    return sorted(kinds, key=lambda k: _KIND_RANK[(d, k)])


def orbit_size(kind: str, d: int) -> int:
    return orbit_structure(kind, d).size


def kind_is_facet(kind: str, d: int) -> bool:
    return orbit_structure(kind, d).is_facet


def kind_param_count(kind: str, d: int) -> int:
    return orbit_structure(kind, d).n_params


# ----------------------------------------------------------------------
# orbits / signatures / node sets


@dataclass(frozen=True)
class SymmetryOrbit:
    """One symmetry orbit with resolved parameters and a shared weight."""

    kind: str
    params: tuple[float, ...] = ()
    weight: float = 0.0

    def structure(self, d: int) -> OrbitStructure:
        st = orbit_structure(self.kind, d)
        if len(self.params) != st.n_params:
            raise ValueError(
                f"{self.kind} takes {st.n_params} parameter(s), "
                f"got {len(self.params)}")
        return st


@dataclass(frozen=True)
class GroupSignature:
    """Ordered orbit list defining a symmetric node configuration."""

    dim: int
    orbits: tuple[SymmetryOrbit, ...]
    qv: int = 0
    facet_layout: str | None = None

    @property
    def n_nodes(self) -> int:
        return sum(orbit_size(o.kind, self.dim) for o in self.orbits)

    def sort_key(self, i: int):
        o = self.orbits[i]
        return (_KIND_RANK[(self.dim, o.kind)], o.params)

    def canonically_ordered(self) -> "GroupSignature":
        order = sorted(range(len(self.orbits)), key=self.sort_key)
        return GroupSignature(self.dim,
                              tuple(self.orbits[i] for i in order),
                              self.qv, self.facet_layout)


@dataclass
class NodeSet:
    """Expanded nodes of a signature on a reference element."""

    coords: np.ndarray       # (n, d)
    weights: np.ndarray      # (n,)
    bary: np.ndarray         # (n, d+1)
    orbit_index: np.ndarray  # (n,) int, which orbit each node came from
    dim: int

    def __len__(self) -> int:
        return self.coords.shape[0]

    def facet_mask(self, facet_id: int, tol: float = 1e-12) -> np.ndarray:
        return np.abs(self.bary[:, facet_id]) <= tol

    def on_boundary(self, tol: float = 1e-12) -> np.ndarray:
        return (np.abs(self.bary) <= tol).any(axis=1)


def expand_orbit(kind: str, params, d: int) -> np.ndarray:
    """Barycentric rows of an orbit; raises on degenerate/out-of-range.

    Parameters
    ----------
    kind : orbit kind name, e.g. 'S21'
    params : sequence of free parameters (may be empty)
    d : element dimension

    Returns
    -------
    (size, d+1) array of barycentric coordinates.
    """
    st = orbit_structure(kind, d)
    theta = np.asarray(params, dtype=float)
    if theta.shape != (st.n_params,):
        raise ValueError(
            f"{kind} takes {st.n_params} parameter(s), got {theta.shape}")
    bary = st.base + st.coeff @ theta
    if bary.min() < -CLOSURE_TOL or bary.max() > 1.0 + CLOSURE_TOL:
        raise NodeSetError(
            f"{kind}{tuple(theta)} leaves the closure of the simplex")
    if st.size > 1:
        diff = bary[:, None, :] - bary[None, :, :]
        dist = np.sqrt((diff ** 2).sum(axis=-1))
        dist[np.diag_indices(st.size)] = np.inf
        if dist.min() < DUPLICATE_TOL:
            raise DegenerateOrbitError(
                f"{kind}{tuple(theta)} is degenerate "
                f"(coincident nodes within the orbit)")
    return bary


def assemble_nodes(sig: GroupSignature,
                   elem: ReferenceSimplex | None = None) -> NodeSet:
    """Expand all orbits of a signature into a cartesian node set.

    Raises NodeSetError when any orbit is degenerate, leaves the element,
    or two orbits produce coincident nodes.
    """
    if elem is None:
        elem = reference_simplex(sig.dim)
    barys, weights, owners = [], [], []
    for i, orb in enumerate(sig.orbits):
        b = expand_orbit(orb.kind, orb.params, sig.dim)
        barys.append(b)
        weights.append(np.full(b.shape[0], orb.weight))
        owners.append(np.full(b.shape[0], i, dtype=int))
    bary = np.vstack(barys)
    n = bary.shape[0]
    diff = bary[:, None, :] - bary[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    dist[np.diag_indices(n)] = np.inf
    if dist.min() < DUPLICATE_TOL:
        j, k = np.unravel_index(np.argmin(dist), dist.shape)
        raise NodeSetError(
            f"orbits {sig.orbits[np.concatenate(owners)[j]].kind} and "
            f"{sig.orbits[np.concatenate(owners)[k]].kind} produce "
            f"coincident nodes")
    return NodeSet(coords=bary @ elem.vertices,
                   weights=np.concatenate(weights),
                   bary=bary,
                   orbit_index=np.concatenate(owners),
                   dim=sig.dim)


def min_node_spacing(nodes: NodeSet | np.ndarray) -> float:
    """Smallest pairwise cartesian distance of a node set."""
    x = nodes.coords if isinstance(nodes, NodeSet) else np.asarray(nodes)
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two nodes for a spacing")
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    dist[np.diag_indices(n)] = np.inf
    return float(dist.min())


def _facet_reference_map(elem: ReferenceSimplex, facet: Facet):
    """Vertices of the (d-1)-reference simplex used for facet-local coords."""
    if elem.dim == 1:
        return None
    return reference_simplex(elem.dim - 1).vertices


def facet_restriction(nodes: NodeSet, facet_id: int,
                      elem: ReferenceSimplex | None = None,
                      tol: float = 1e-12):
    """Indices and facet-local coordinates of the nodes on one facet.

    Returns (indices, local) where local has shape (m, d-1); for the
    interval the local block is an (m, 0) array.
    """
    if elem is None:
        elem = reference_simplex(nodes.dim)
    facet = elem.facets[facet_id]
    idx = np.flatnonzero(nodes.facet_mask(facet_id, tol))
    sub = nodes.bary[np.ix_(idx, list(facet.vertex_ids))]
    if nodes.dim == 1:
        return idx, np.zeros((idx.size, 0))
    ref_facet_verts = _facet_reference_map(elem, facet)
    return idx, sub @ ref_facet_verts


def node_set_is_symmetric(nodes: NodeSet, tol: float = 1e-10) -> bool:
    """Whether the weighted node set is invariant under vertex permutations."""
    m = nodes.dim + 1
    key = {}
    for i in range(len(nodes)):
        key[tuple(np.round(nodes.bary[i], 9))] = i
    for sigma in itertools.permutations(range(m)):
        for i in range(len(nodes)):
            img = nodes.bary[i, list(sigma)]
            j = key.get(tuple(np.round(img, 9)))
            if j is None:
                # fall back to a slow search before declaring failure
                dist = np.abs(nodes.bary - img).sum(axis=1)
                j = int(np.argmin(dist))
                if dist[j] > tol:
                    return False
            if abs(nodes.weights[i] - nodes.weights[j]) > tol * (
                    1.0 + abs(nodes.weights[i])):
                return False
    return True
