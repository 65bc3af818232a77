"""Linear advection on periodic simplicial meshes, SBP-SAT discretized.

Verification harness for the operators: u_t + c.grad(u) = 0 on the unit
square/cube with periodic boundaries, exact solution
prod_i sin(omega*pi*(x_i - c_i t)).  Squares are split into two
triangles, cubes into six tetrahedra (Kuhn split, conforming across
cells).  Facet coupling uses penalty terms on the shared facet
quadrature; 'upwind' dissipates energy, 'central' conserves it.

The boundary metric terms are formed from J * A^{-T} N so the discrete
energy identity telescopes across interfaces to floating-point
accuracy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import n_basis, simplex_gauss_rule, vandermonde
from .operators import SBPOperator
from .simplex import reference_simplex

__all__ = [
    "MeshError",
    "AdvectionProblem",
    "build_problem",
    "exact_solution",
    "rhs",
    "rk4_step",
    "integrate",
    "run_to_time",
    "energy",
    "mass",
    "l2_error",
    "estimate_dt",
    "ConvergenceResult",
    "run_convergence",
    "assemble_dense",
    "step_matrix",
    "certify_stable",
    "max_stable_dt",
]

_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


class MeshError(ValueError):
    pass


# ----------------------------------------------------------------------
# element splitting


def _split_squares(m: int) -> np.ndarray:
    """(2 m^2, 3, 2) triangle vertices tiling periodic [0,1]^2."""
    tris = []
    for i in range(m):
        for j in range(m):
            c00 = (i / m, j / m)
            c10 = ((i + 1) / m, j / m)
            c01 = (i / m, (j + 1) / m)
            c11 = ((i + 1) / m, (j + 1) / m)
            tris.append((c00, c10, c01))
            tris.append((c11, c01, c10))
    return np.asarray(tris, dtype=float)


def _split_cubes(m: int) -> np.ndarray:
    """(6 m^3, 4, 3) Kuhn-split tetrahedra; conforming across cells."""
    tets = []
    paths = list(itertools.permutations(range(3)))
    for i in range(m):
        for j in range(m):
            for k in range(m):
                base = np.array([i, j, k], dtype=float)
                for perm in paths:
                    v = [base.copy()]
                    cur = base.copy()
                    for axis in perm:
                        cur = cur.copy()
                        cur[axis] += 1.0
                        v.append(cur)
                    tets.append(np.asarray(v) / m)
    return np.asarray(tets)


def _element_vertices(dim: int, m: int) -> np.ndarray:
    if dim == 2:
        verts = _split_squares(m)
    elif dim == 3:
        verts = _split_cubes(m)
    else:
        raise MeshError(f"no periodic mesh in dimension {dim}")
    # swap two vertices of any negatively oriented element; facets are
    # vertex subsets, so conformity is unaffected
    edges = verts[:, 1:] - verts[:, :1]
    neg = np.linalg.det(edges) < 0
    tmp = verts[neg, dim - 1].copy()
    verts[neg, dim - 1] = verts[neg, dim]
    verts[neg, dim] = tmp
    return verts


# ----------------------------------------------------------------------
# problem assembly


@dataclass
class AdvectionProblem:
    op: SBPOperator
    m: int
    c: np.ndarray
    flux: str
    omega: int
    verts: np.ndarray          # (K, d+1, d)
    A: np.ndarray              # (K, d, d) columns (v_i - v_0)/2 style map
    b: np.ndarray              # (K, d)
    J: np.ndarray              # (K,)
    phys: np.ndarray           # (K, n, d) node coordinates
    hw: np.ndarray             # (K, n) physical norm J_k * H
    Gvol: np.ndarray           # (K, d) contraction of c with metrics
    vol_idx: list[np.ndarray]  # per reference facet
    ext_flat: list[np.ndarray]  # (K, n_f) flat indices into u.ravel()
    coef: list[np.ndarray]     # (K, n_f) SAT coefficients / (J H)
    alpha: np.ndarray          # (K, d+1) signed facet flux scale
    _spec_radius_bound: float = field(default=0.0)

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def n_elements(self) -> int:
        return self.verts.shape[0]

    @property
    def n_dof(self) -> int:
        return self.verts.shape[0] * self.op.n_nodes


def _wrap_key(pt: np.ndarray) -> tuple:
    w = np.mod(np.round(pt, 12), 1.0)
    return tuple(np.round(w, 12))


def _pair_facets(verts: np.ndarray) -> dict:
    """Map each (element, facet) to its periodic partner.

    Facets are keyed by the wrapped centroid: only a facet lying in a
    periodic boundary plane has a centroid coordinate at 1, so interior
    facets whose vertices merely touch the far boundary cannot alias.
    Vertices are sorted before averaging so both sides of an interface
    sum in the same order and produce bitwise-equal keys.
    """
    K, nv, d = verts.shape
    elem = reference_simplex(d)
    table: dict[tuple, list] = {}
    for k in range(K):
        for f, facet in enumerate(elem.facets):
            pts = sorted(tuple(verts[k, v]) for v in facet.vertex_ids)
            centroid = np.asarray(pts).mean(axis=0)
            key = _wrap_key(centroid)
            table.setdefault(key, []).append((k, f))
    partner = {}
    for key, sides in table.items():
        if len(sides) != 2:
            raise MeshError(
                f"facet shared by {len(sides)} elements (nonconforming "
                f"split?): {key}")
        (ka, fa), (kb, fb) = sides
        partner[(ka, fa)] = (kb, fb)
        partner[(kb, fb)] = (ka, fa)
    return partner


def build_problem(op: SBPOperator, m: int, c, flux: str = "upwind",
                  omega: int = 2) -> AdvectionProblem:
    """Assemble the periodic SBP-SAT semi-discretization."""
    if flux not in ("upwind", "central"):
        raise ValueError(f"unknown flux {flux!r}")
    if omega % 2 != 0:
        raise ValueError("omega must be even for a periodic exact "
                         "solution on the unit domain")
    if m < 2:
        raise MeshError("periodic mesh needs m >= 2 cells per direction; "
                        "with m = 1 a facet spans the full period and its "
                        "endpoints alias under the wrap")
    d = op.dim
    c = np.asarray(c, dtype=float)
    if c.shape != (d,):
        raise ValueError(f"velocity must have shape ({d},)")
    verts = _element_vertices(d, m)
    K = verts.shape[0]
    elem = reference_simplex(d)
    ref_v = elem.vertices

    # affine maps x = A xi + b fitted through the vertices
    M = np.column_stack([ref_v[i] - ref_v[0] for i in range(1, d + 1)])
    Minv = np.linalg.inv(M)
    span = np.stack([verts[:, i] - verts[:, 0]
                     for i in range(1, d + 1)], axis=2)   # (K, d, d)
    A = np.einsum("kxi,ij->kxj", span, Minv)
    bvec = verts[:, 0] - np.einsum("kxj,j->kx", A, ref_v[0])
    J = np.linalg.det(A)
    if np.any(J <= 0):
        raise MeshError("negatively oriented element in the split")
    Ainv = np.linalg.inv(A)

    x = op.rule.nodes.coords
    phys = np.einsum("kxj,nj->knx", A, x) + bvec[:, None, :]
    hw = J[:, None] * op.H[None, :]
    Gvol = np.einsum("i,kji->kj", c, Ainv)

    # signed facet scales: alpha = c . (J A^{-T} N)
    N = np.stack([f.normal for f in elem.facets])          # (d+1, d)
    area_vec = J[:, None, None] * np.einsum("kji,fj->kfi", Ainv, N)
    alpha = area_vec @ c                                   # (K, d+1)

    partner = _pair_facets(verts)
    n = op.n_nodes
    vol_idx = [fop.vol_idx for fop in op.facets]
    bwts = [fop.weights for fop in op.facets]
    ext_flat = [np.empty((K, vi.size), dtype=int) for vi in vol_idx]
    for k in range(K):
        for f in range(d + 1):
            k2, f2 = partner[(k, f)]
            pl = phys[k, vol_idx[f]]
            pr = phys[k2, vol_idx[f2]]
            diff = pl[:, None, :] - pr[None, :, :]
            diff -= np.round(diff)            # periodic minimum image
            dist = np.linalg.norm(diff, axis=2)
            match = np.argmin(dist, axis=1)
            if dist[np.arange(match.size), match].max() > 1e-9 or \
                    np.unique(match).size != match.size:
                raise MeshError(
                    f"facet nodes of elements {k}/{k2} do not collocate")
            ext_flat[f][k] = k2 * n + vol_idx[f2][match]

    coef = []
    for f in range(d + 1):
        phi = alpha[:, f, None] * bwts[f][None, :]         # (K, n_f)
        s = np.minimum(phi, 0.0) if flux == "upwind" else 0.5 * phi
        coef.append(s / (J[:, None] * op.H[vol_idx[f]][None, :]))

    prob = AdvectionProblem(
        op=op, m=m, c=c, flux=flux, omega=omega, verts=verts, A=A,
        b=bvec, J=J, phys=phys, hw=hw, Gvol=Gvol, vol_idx=vol_idx,
        ext_flat=ext_flat, coef=coef, alpha=alpha)
    prob._spec_radius_bound = _row_sum_bound(prob)
    return prob


def _row_sum_bound(prob: AdvectionProblem) -> float:
    """Infinity-norm bound on the semi-discrete operator."""
    op = prob.op
    d = op.dim
    rs = np.zeros((prob.n_elements, op.n_nodes))
    drow = [np.abs(op.D[j]).sum(axis=1) for j in range(d)]
    for j in range(d):
        rs += np.abs(prob.Gvol[:, j])[:, None] * drow[j][None, :]
    for f in range(d + 1):
        rs[:, prob.vol_idx[f]] += 2.0 * np.abs(prob.coef[f])
    return float(rs.max())


# ----------------------------------------------------------------------
# solution, RHS, time stepping


def exact_solution(points: np.ndarray, t: float, c, omega: int = 2
                   ) -> np.ndarray:
    """prod_i sin(omega*pi*(x_i - c_i t)) at arbitrary points."""
    c = np.asarray(c, dtype=float)
    arg = omega * np.pi * (points - t * c)
    return np.sin(arg).prod(axis=-1)


def initial_condition(prob: AdvectionProblem) -> np.ndarray:
    return exact_solution(prob.phys, 0.0, prob.c, prob.omega)


def rhs(prob: AdvectionProblem, u: np.ndarray) -> np.ndarray:
    """Semi-discrete right-hand side, u of shape (K, n)."""
    op = prob.op
    du = -prob.Gvol[:, 0, None] * (u @ op.D[0].T)
    for j in range(1, op.dim):
        du -= prob.Gvol[:, j, None] * (u @ op.D[j].T)
    flat = u.reshape(-1)
    for f in range(op.dim + 1):
        ui = u[:, prob.vol_idx[f]]
        ue = flat[prob.ext_flat[f]]
        du[:, prob.vol_idx[f]] += prob.coef[f] * (ui - ue)
    return du


def rk4_step(prob: AdvectionProblem, u: np.ndarray, dt: float
             ) -> np.ndarray:
    k1 = rhs(prob, u)
    k2 = rhs(prob, u + 0.5 * dt * k1)
    k3 = rhs(prob, u + 0.5 * dt * k2)
    k4 = rhs(prob, u + dt * k3)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(prob: AdvectionProblem, u: np.ndarray, dt: float,
              n_steps: int) -> np.ndarray:
    for _ in range(n_steps):
        u = rk4_step(prob, u, dt)
    return u


def estimate_dt(prob: AdvectionProblem, safety: float = 1.0) -> float:
    """Timestep from the row-sum spectral bound; safe for RK4."""
    return safety / prob._spec_radius_bound


def run_to_time(prob: AdvectionProblem, u: np.ndarray, t: float,
                dt: float | None = None) -> np.ndarray:
    """Advance to exactly time t with uniform steps."""
    if dt is None:
        dt = estimate_dt(prob)
    n_steps = max(1, math.ceil(t / dt))
    return integrate(prob, u, t / n_steps, n_steps)


def energy(prob: AdvectionProblem, u: np.ndarray) -> float:
    return float(np.sum(prob.hw * u * u))


def mass(prob: AdvectionProblem, u: np.ndarray) -> float:
    return float(np.sum(prob.hw * u))


def l2_error(prob: AdvectionProblem, u: np.ndarray, t: float) -> float:
    """L2 distance to the exact solution via modal interpolation."""
    op = prob.op
    d = op.dim
    p = op.p
    V = vandermonde(op.rule.nodes.coords, p, d, check=False)
    W = op.H
    G = V.T @ (W[:, None] * V)
    proj = np.linalg.solve(G, V.T * W[None, :])     # (nb, n)
    coeffs = u @ proj.T                             # (K, nb)
    xf, wf = simplex_gauss_rule(3 * p + 1, d)
    Vf = vandermonde(xf, p, d, check=False)
    uh = coeffs @ Vf.T                              # (K, nf)
    pf = np.einsum("kxj,nj->knx", prob.A, xf) + prob.b[:, None, :]
    ue = exact_solution(pf, t, prob.c, prob.omega)
    err2 = np.einsum("k,f,kf->", prob.J, wf, (uh - ue) ** 2)
    return float(np.sqrt(err2))


# ----------------------------------------------------------------------
# convergence study


@dataclass
class ConvergenceResult:
    meshes: list[int]
    errors: list[float]
    rates: list[float]
    p: int
    flux: str

    def summary(self) -> str:
        lines = [f"p = {self.p}, flux = {self.flux}"]
        for i, m in enumerate(self.meshes):
            rate = f"{self.rates[i - 1]:6.3f}" if i else "   ---"
            lines.append(f"  m = {m:3d}  error = {self.errors[i]:.6e}"
                         f"  rate = {rate}")
        return "\n".join(lines)


def run_convergence(op: SBPOperator, meshes, c, t: float = 0.25,
                    omega: int = 2, flux: str = "upwind",
                    safety: float = 1.0) -> ConvergenceResult:
    """L2 errors and successive rates over a mesh sequence."""
    errors = []
    for m in meshes:
        prob = build_problem(op, m, c, flux=flux, omega=omega)
        u = initial_condition(prob)
        u = run_to_time(prob, u, t, dt=estimate_dt(prob, safety))
        errors.append(l2_error(prob, u, t))
    rates = [math.log(errors[i - 1] / errors[i])
             / math.log(meshes[i] / meshes[i - 1])
             for i in range(1, len(meshes))]
    return ConvergenceResult(list(meshes), errors, rates, op.p, flux)


# ----------------------------------------------------------------------
# dense operator, stability certification


def assemble_dense(prob: AdvectionProblem) -> np.ndarray:
    """Dense matrix of the semi-discrete operator (small meshes)."""
    op = prob.op
    n = op.n_nodes
    K = prob.n_elements
    N = K * n
    L = np.zeros((N, N))
    for k in range(K):
        blk = np.zeros((n, n))
        for j in range(op.dim):
            blk -= prob.Gvol[k, j] * op.D[j]
        L[k * n:(k + 1) * n, k * n:(k + 1) * n] += blk
    for f in range(op.dim + 1):
        for k in range(K):
            rows = k * n + prob.vol_idx[f]
            L[rows, rows] += prob.coef[f][k]
            L[rows, prob.ext_flat[f][k]] -= prob.coef[f][k]
    return L


def step_matrix(L: np.ndarray, dt: float) -> np.ndarray:
    """One-step RK4 propagator I + dtL + ... + (dtL)^4/24."""
    eye = np.eye(L.shape[0])
    G = eye + (dt / 4.0) * L
    G = eye + (dt / 3.0) * (L @ G)
    G = eye + (dt / 2.0) * (L @ G)
    return eye + dt * (L @ G)


def certification_horizon(prob: AdvectionProblem, periods: float = 5.0
                          ) -> float:
    return periods / float(np.abs(prob.c).max())


def certify_stable(prob: AdvectionProblem, dt: float,
                   T: float | None = None,
                   L: np.ndarray | None = None) -> tuple[bool, float]:
    """(energy nonincreasing over the horizon, final/initial ratio)."""
    if T is None:
        T = certification_horizon(prob)
    if L is None:
        L = assemble_dense(prob)
    n_steps = max(1, math.ceil(T / dt))
    G = step_matrix(L, dt)
    Gn = np.linalg.matrix_power(G, n_steps)
    u0 = initial_condition(prob).reshape(-1)
    uT = Gn @ u0
    w = prob.hw.reshape(-1)
    e0 = float(np.sum(w * u0 * u0))
    eT = float(np.sum(w * uT * uT))
    ratio = eT / e0
    return ratio <= 1.0 + 1e-12, ratio


def max_stable_dt(prob: AdvectionProblem, T: float | None = None,
                  dt_init: float = 1e-3, rel_tol: float = 1e-4
                  ) -> float:
    """Largest dt whose RK4 propagator keeps the energy nonincreasing.

    Doubles/halves to bracket the threshold, then golden-section
    shrinks the bracket to the requested relative width; returns the
    certified-stable lower edge.
    """
    if T is None:
        T = certification_horizon(prob)
    L = assemble_dense(prob)

    def stable(dt: float) -> bool:
        return certify_stable(prob, dt, T=T, L=L)[0]

    lo = hi = dt_init
    if stable(dt_init):
        while True:
            hi *= 2.0
            if not stable(hi):
                break
            lo = hi
            if hi > 1e6:
                raise RuntimeError("no unstable timestep found")
    else:
        while True:
            lo /= 2.0
            if stable(lo):
                break
            hi = lo
            if lo < 1e-12:
                raise RuntimeError("no stable timestep found")
    while (hi - lo) > rel_tol * lo:
        mid = hi - (hi - lo) / _GOLDEN
        if stable(mid):
            lo = mid
        else:
            hi = mid
    return lo
