"""Symmetric quadrature search: moment residual, LMA, PSO, coupling.

A candidate rule is a design vector tau = [orbit parameters..., orbit
weights...] over a fixed list of symmetry orbits.  The residual is the
moment mismatch g = V^T w - f against the orthonormal basis of degree
q_v, so g = 0 with positive weights is a quadrature rule.

The solver couples a damped Levenberg-Marquardt iteration (with a
positivity-preserving step rescale) and a particle swarm over the free
entries of tau; facet-orbit parameters can be frozen so facet nodes stay
collocated with a fixed facet rule, which is what the SBP construction
requires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import integral_vector, vandermonde, grad_vandermonde, n_basis
from .simplex import (CLOSURE_TOL, DUPLICATE_TOL, GroupSignature, NodeSet,
                      NodeSetError, SymmetryOrbit, assemble_nodes,
                      min_node_spacing, node_set_is_symmetric,
                      orbit_structure, reference_simplex)

__all__ = [
    "EPS_WEIGHT",
    "InfeasibleDesignError",
    "QuadratureRule",
    "RuleValidationError",
    "validate_rule",
    "lgl_rule",
    "lg_rule",
    "facet_quadrature",
    "SearchSpec",
    "DesignVector",
    "SearchOptions",
    "random_design",
    "residual",
    "residual_and_jacobian",
    "lma_step",
    "apply_update_with_positivity",
    "LmaState",
    "lma_solve",
    "SwarmState",
    "init_swarm",
    "pso_step",
    "perturb",
    "SearchResult",
    "solve_coupled",
]

#: weights are kept at or above this floor while iterating
EPS_WEIGHT = 1e-4

_DOMAIN_BY_DIM = {1: "interval", 2: "tri", 3: "tet"}


class InfeasibleDesignError(ValueError):
    """Design vector leaves the feasible region (nodes leave the element)."""


class RuleValidationError(ValueError):
    """A candidate rule violates the quadrature-rule invariants."""


# ----------------------------------------------------------------------
# quadrature rules


@dataclass
class QuadratureRule:
    """A quadrature rule on a reference simplex.

    For symmetric 2-D/3-D rules the orbit signature is the source of
    truth and `nodes` is its expansion; 1-D rules carry nodes directly.
    `facet_rule` links the facet rule whose nodes are collocated with
    this rule's facet nodes (SBP mode).
    """

    domain: str
    qv: int
    nodes: NodeSet
    signature: GroupSignature | None = None
    facet_rule: "QuadratureRule | None" = None
    facet_kind: str | None = None
    sbp_p: int | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.nodes.dim

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def residual_inf(self) -> float:
        V = vandermonde(self.nodes.coords, self.qv, self.dim, check=False)
        g = V.T @ self.nodes.weights - integral_vector(self.qv, self.dim)
        return float(np.abs(g).max())

    def min_spacing(self) -> float:
        return min_node_spacing(self.nodes)


def validate_rule(rule: QuadratureRule, res_tol: float = 1e-12) -> None:
    """Check the rule invariants; raises RuleValidationError on failure."""
    w = rule.nodes.weights
    if w.min() <= 0.0:
        raise RuleValidationError(f"nonpositive weight {w.min():.3e}")
    elem = reference_simplex(rule.dim)
    if abs(w.sum() - elem.measure) > 1e-12 * elem.measure:
        raise RuleValidationError("weights do not sum to the element measure")
    res = rule.residual_inf()
    if res > res_tol:
        raise RuleValidationError(f"moment residual {res:.3e} > {res_tol:g}")
    if rule.nodes.bary.min() < -CLOSURE_TOL:
        raise RuleValidationError("node outside the closed element")
    if rule.dim >= 2:
        if not node_set_is_symmetric(rule.nodes):
            raise RuleValidationError("node set is not fully symmetric")
    if rule.n_nodes >= 2 and min_node_spacing(rule.nodes) < 10 * DUPLICATE_TOL:
        raise RuleValidationError("coincident nodes")


# ----------------------------------------------------------------------
# 1-D facet rules


def _interval_nodeset(x: np.ndarray, w: np.ndarray) -> NodeSet:
    lam = np.column_stack([(1.0 - x) / 2.0, (1.0 + x) / 2.0])
    return NodeSet(coords=x[:, None].copy(), weights=w.copy(), bary=lam,
                   orbit_index=np.full(x.size, -1, dtype=int), dim=1)


def _symmetrize_1d(x: np.ndarray, w: np.ndarray):
    # enforce exact +/- pairing so orbit extraction sees clean pairs
    xs = 0.5 * (x - x[::-1])
    ws = 0.5 * (w + w[::-1])
    return xs, ws


def lgl_rule(n: int) -> QuadratureRule:
    """Legendre-Gauss-Lobatto rule with n nodes on [-1, 1], degree 2n-3."""
    if n < 2:
        raise ValueError("LGL needs at least 2 nodes")
    if n == 2:
        x = np.array([-1.0, 1.0])
    else:
        pn1 = np.polynomial.legendre.Legendre.basis(n - 1)
        interior = np.sort(np.real(pn1.deriv().roots()))
        x = np.concatenate([[-1.0], interior, [1.0]])
    leg = np.polynomial.legendre.legval(
        x, [0.0] * (n - 1) + [1.0])
    w = 2.0 / (n * (n - 1) * leg ** 2)
    x, w = _symmetrize_1d(x, w)
    x[0], x[-1] = -1.0, 1.0
    rule = QuadratureRule("interval", 2 * n - 3 if n > 2 else 1,
                          _interval_nodeset(x, w), facet_kind="lgl",
                          provenance={"method": "lgl", "n": n})
    return rule


def lg_rule(n: int) -> QuadratureRule:
    """Legendre-Gauss rule with n nodes on (-1, 1), degree 2n-1."""
    if n < 1:
        raise ValueError("LG needs at least 1 node")
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = _symmetrize_1d(x, w)
    return QuadratureRule("interval", 2 * n - 1, _interval_nodeset(x, w),
                          facet_kind="lg",
                          provenance={"method": "lg", "n": n})


def facet_quadrature(kind: str, p: int, d: int, seed: int = 0,
                     options: "SearchOptions | None" = None
                     ) -> QuadratureRule:
    """Facet rule for a degree-p SBP operator on a d-simplex.

    d=2: the 1-D LGL(p+2) or LG(p+1) rule.  d=3: a symmetric triangle
    rule of degree >= 2p found by the search, preferring layouts with
    vertex/edge nodes so the induced tet volume rule stays small.
    """
    if d == 2:
        if kind == "lgl":
            return lgl_rule(p + 2)
        if kind == "lg":
            return lg_rule(p + 1)
        raise ValueError(f"unknown facet rule kind {kind!r} for d=2")
    if d == 3:
        from .signatures import find_facet_rule
        return find_facet_rule(p, seed=seed, options=options)
    raise ValueError("facet rules exist for d in {2, 3}")


# ----------------------------------------------------------------------
# search specification / design vectors


@dataclass(eq=False)
class SearchSpec:
    """Fixed orbit layout for one search.

    kinds lists the orbit kinds in order (facet orbits first); frozen
    maps orbit index -> fixed parameter values (facet orbits in SBP
    mode).  All orbit weights are always free.
    """

    dim: int
    qv: int
    kinds: tuple[str, ...]
    frozen: dict[int, tuple[float, ...]] = field(default_factory=dict)
    facet_rule: QuadratureRule | None = None
    facet_kind: str | None = None
    sbp_p: int | None = None

    def __post_init__(self):
        elem = reference_simplex(self.dim)
        structs = [orbit_structure(k, self.dim) for k in self.kinds]
        off = 0
        pslices = []
        for st in structs:
            pslices.append(slice(off, off + st.n_params))
            off += st.n_params
        self._structs = structs
        self.param_slices = pslices
        self.n_params = off
        self.n_orbits = len(structs)
        self.n_tau = off + self.n_orbits
        self.weight_slice = slice(off, self.n_tau)
        sizes = [st.size for st in structs]
        self.n_nodes = int(sum(sizes))
        starts = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        self.node_starts = starts            # len n_orbits + 1
        free = np.ones(self.n_tau, dtype=bool)
        for i in self.frozen:
            free[pslices[i]] = False
        self.free_mask = free
        # stacked affine expansion: bary = base + dbary @ tau_params
        m = self.dim + 1
        base = np.vstack([st.base for st in structs])
        dbary = np.zeros((self.n_nodes, m, self.n_params))
        for i, st in enumerate(structs):
            rows = slice(starts[i], starts[i + 1])
            dbary[rows, :, pslices[i]] = st.coeff
        self._base = base
        self._dbary = dbary
        # node derivative w.r.t. parameters, cartesian: (n, P, d)
        self._dx = np.tensordot(dbary, elem.vertices, axes=(1, 0))
        self._f = integral_vector(self.qv, self.dim)
        self._elem = elem

    @property
    def element(self):
        return self._elem

    @property
    def n_moments(self) -> int:
        return n_basis(self.qv, self.dim)

    def frozen_template(self) -> np.ndarray:
        """tau with frozen parameters filled in, everything else zero."""
        tau = np.zeros(self.n_tau)
        for i, params in self.frozen.items():
            tau[self.param_slices[i]] = params
        return tau

    def expand(self, tau: np.ndarray):
        """(bary, coords, node_weights) of a design; raises when
        any node leaves the closed element."""
        bary = self._base + self._dbary @ tau[:self.n_params]
        if bary.min() < -CLOSURE_TOL or bary.max() > 1.0 + CLOSURE_TOL:
            raise InfeasibleDesignError("nodes leave the element")
        coords = bary @ self._elem.vertices
        w = np.repeat(tau[self.weight_slice], np.diff(self.node_starts))
        return bary, coords, w

    def build_rule(self, tau: np.ndarray, provenance: dict | None = None
                   ) -> QuadratureRule:
        """Resolve tau into a validated QuadratureRule."""
        orbits = []
        for i, kind in enumerate(self.kinds):
            params = tuple(float(v) for v in tau[self.param_slices[i]])
            wt = float(tau[self.n_params + i])
            orbits.append(SymmetryOrbit(kind, params, wt))
        sig = GroupSignature(self.dim, tuple(orbits), self.qv,
                             self.facet_kind).canonically_ordered()
        nodes = assemble_nodes(sig, self._elem)
        rule = QuadratureRule(_DOMAIN_BY_DIM[self.dim], self.qv, nodes,
                              signature=sig, facet_rule=self.facet_rule,
                              facet_kind=self.facet_kind, sbp_p=self.sbp_p,
                              provenance=provenance or {})
        validate_rule(rule)
        return rule


@dataclass
class DesignVector:
    """A design vector bound to its search spec."""

    spec: SearchSpec
    values: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return self.values[self.spec.weight_slice]

    def params(self, orbit: int) -> np.ndarray:
        return self.values[self.spec.param_slices[orbit]]

    def free(self) -> np.ndarray:
        return self.values[self.spec.free_mask]


@dataclass
class SearchOptions:
    n_particles: int = 20
    inertia: float = 0.6
    cognitive: float = 1.5
    social: float = 1.5
    pso_iters: int = 40
    lma_max_iters: int = 100
    max_rejects: int = 30
    max_rounds: int = 10
    stagnation_rounds: int = 15
    stagnation_rel: float = 1e-6
    perturb_delta: float | None = None   # default: 1e-2 (qv<=10) else 1e-3
    tol: float = 5e-14
    nu_init: float = 1e3
    nu_dec: float = 0.2
    nu_inc: float = 5.0
    nu_max: float = 1e18
    nu_polish_floor: float = 1e-12
    eps_weight: float = EPS_WEIGHT

    def delta(self, qv: int) -> float:
        if self.perturb_delta is not None:
            return self.perturb_delta
        return 1e-2 if qv <= 10 else 1e-3


def random_design(spec: SearchSpec, rng: np.random.Generator,
                  margin: float = 0.025,
                  eps: float = EPS_WEIGHT) -> np.ndarray:
    """Random feasible design: interior orbit parameters uniform in the
    feasible box shrunk away from the boundary, weights uniform in
    (0, 2|Omega|/n_nodes]."""
    tau = spec.frozen_template()
    for i, st in enumerate(spec._structs):
        if i in spec.frozen or st.n_params == 0:
            continue
        sl = spec.param_slices[i]
        ok = False
        for _ in range(200):
            theta = rng.random(st.n_params)
            bary = st.base + st.coeff @ theta
            if bary.min() < margin or bary.max() > 1.0 - margin:
                continue
            diff = bary[:, None, :] - bary[None, :, :]
            dist = np.sqrt((diff ** 2).sum(-1))
            dist[np.diag_indices(st.size)] = np.inf
            if dist.min() < 1e-3:
                continue
            tau[sl] = theta
            ok = True
            break
        if not ok:
            tau[sl] = theta  # last draw; solver will sort it out
    wmax = 2.0 * spec._elem.measure / spec.n_nodes
    tau[spec.weight_slice] = np.maximum(
        rng.random(spec.n_orbits) * wmax, eps)
    return tau


# ----------------------------------------------------------------------
# residual and jacobian


def residual(spec: SearchSpec, tau: np.ndarray) -> np.ndarray:
    """Moment residual g = V^T w - f; raises InfeasibleDesignError when
    the design leaves the element."""
    _, coords, w = spec.expand(tau)
    V = vandermonde(coords, spec.qv, spec.dim, check=False)
    return V.T @ w - spec._f


def residual_and_jacobian(spec: SearchSpec, tau: np.ndarray):
    """Residual and its Jacobian w.r.t. the full tau layout.

    Parameter columns: sum_k Vx_k^T diag(w) dx_k/dtheta; weight columns:
    V^T summed over each orbit's nodes.
    """
    _, coords, w = spec.expand(tau)
    V = vandermonde(coords, spec.qv, spec.dim, check=False)
    g = V.T @ w - spec._f
    J = np.empty((spec.n_moments, spec.n_tau))
    if spec.n_params:
        Vx = grad_vandermonde(coords, spec.qv, spec.dim, check=False)
        Jp = np.zeros((spec.n_moments, spec.n_params))
        for k in range(spec.dim):
            Jp += Vx[k].T @ (w[:, None] * spec._dx[:, :, k])
        J[:, :spec.n_params] = Jp
    J[:, spec.weight_slice] = np.add.reduceat(
        V, spec.node_starts[:-1], axis=0).T
    return g, J


# ----------------------------------------------------------------------
# Levenberg-Marquardt


def lma_step(g: np.ndarray, J: np.ndarray, free_mask: np.ndarray,
             nu: float) -> np.ndarray:
    """One damped step on the free entries; frozen entries get zero.

    h = -pinv(J~^T J~ + nu diag(J~^T J~)) J~^T g with singular values
    below 1e-12 of the largest truncated, so rank-deficient (symmetric
    or underdetermined) systems produce the minimum-norm step.
    """
    Jf = J[:, free_mask]
    JtJ = Jf.T @ Jf
    A = JtJ + nu * np.diag(np.diag(JtJ))
    rhs = Jf.T @ g
    hf = -np.linalg.pinv(A, rcond=1e-12, hermitian=True) @ rhs
    h = np.zeros(free_mask.size)
    h[free_mask] = hf
    return h


def apply_update_with_positivity(spec: SearchSpec, tau: np.ndarray,
                                 h: np.ndarray,
                                 eps: float = EPS_WEIGHT) -> np.ndarray:
    """tau + eta*h with eta shrunk so no weight crosses the eps floor.

    eta = min over entries that would land below eps of (eps - w_i)/h_i,
    which parks the worst offender exactly at the floor.  Keeping all
    weights >= eps (not merely positive) is what rejects layouts whose
    only solutions have vanishing weights: their residual stalls at the
    floor and the search moves to the next candidate.
    """
    ws = spec.weight_slice
    w = tau[ws]
    hw = h[ws]
    trial = w + hw
    viol = trial < eps
    eta = 1.0
    if viol.any():
        eta = min(1.0, max(0.0, float(np.min((eps - w[viol]) / hw[viol]))))
    return tau + eta * h


@dataclass
class LmaState:
    tau: np.ndarray
    nu: float
    res_inf: float
    iterations: int
    converged: bool
    message: str = ""


def lma_solve(spec: SearchSpec, tau0: np.ndarray,
              options: SearchOptions | None = None,
              nu_floor: float = 0.0) -> LmaState:
    """Damped LMA from tau0 until ||g||_inf <= tol or the iteration cap.

    nu shrinks by nu_dec on residual decrease, grows by nu_inc on a
    rejected step; infeasible proposals are rejected the same way.
    """
    opts = options or SearchOptions()
    tau = np.asarray(tau0, dtype=float).copy()
    try:
        g = residual(spec, tau)
    except InfeasibleDesignError:
        return LmaState(tau, opts.nu_init, np.inf, 0, False, "infeasible start")
    nu = opts.nu_init
    it = 0
    while it < opts.lma_max_iters:
        res_inf = float(np.abs(g).max())
        if res_inf <= opts.tol:
            return LmaState(tau, nu, res_inf, it, True)
        _, J = residual_and_jacobian(spec, tau)
        gnorm = float(np.linalg.norm(g))
        accepted = False
        for _ in range(opts.max_rejects):
            h = lma_step(g, J, spec.free_mask, nu)
            tau_try = apply_update_with_positivity(spec, tau, h,
                                                   opts.eps_weight)
            try:
                g_try = residual(spec, tau_try)
            except InfeasibleDesignError:
                nu = min(nu * opts.nu_inc, opts.nu_max)
                continue
            if np.linalg.norm(g_try) < gnorm:
                tau, g = tau_try, g_try
                nu = max(nu * opts.nu_dec, nu_floor, 1e-300)
                accepted = True
                break
            nu = min(nu * opts.nu_inc, opts.nu_max)
            if nu >= opts.nu_max:
                break
        it += 1
        if not accepted:
            return LmaState(tau, nu, float(np.abs(g).max()), it, False,
                            "stalled")
    res_inf = float(np.abs(g).max())
    return LmaState(tau, nu, res_inf, it, res_inf <= opts.tol,
                    "iteration cap")


# ----------------------------------------------------------------------
# particle swarm


@dataclass
class SwarmState:
    positions: np.ndarray      # (n_c, n_tau)
    velocities: np.ndarray
    pbest_pos: np.ndarray
    pbest_obj: np.ndarray      # (n_c,)
    gbest_pos: np.ndarray
    gbest_obj: float
    iterations: int = 0


def swarm_objective(spec: SearchSpec, tau: np.ndarray) -> float:
    """0.5 ||g||^2, +inf for infeasible designs."""
    try:
        g = residual(spec, tau)
    except InfeasibleDesignError:
        return np.inf
    return 0.5 * float(g @ g)


def init_swarm(spec: SearchSpec, options: SearchOptions,
               rng: np.random.Generator,
               seeds: tuple[np.ndarray, ...] = ()) -> SwarmState:
    n_c = options.n_particles
    pos = np.empty((n_c, spec.n_tau))
    for i in range(n_c):
        pos[i] = random_design(spec, rng, eps=options.eps_weight)
    for i, tau in enumerate(seeds[:n_c]):
        pos[i] = tau
    obj = np.array([swarm_objective(spec, pos[i]) for i in range(n_c)])
    best = int(np.argmin(obj))
    return SwarmState(pos, np.zeros_like(pos), pos.copy(), obj.copy(),
                      pos[best].copy(), float(obj[best]))


def pso_step(spec: SearchSpec, swarm: SwarmState,
             options: SearchOptions, rng: np.random.Generator) -> None:
    """One swarm update on the free entries of every particle."""
    free = spec.free_mask
    n_c = swarm.positions.shape[0]
    nf = int(free.sum())
    r1 = rng.random((n_c, nf))
    r2 = rng.random((n_c, nf))
    pos_f = swarm.positions[:, free]
    vel_f = swarm.velocities[:, free]
    vel_f = (options.inertia * vel_f
             + options.cognitive * r1 * (swarm.pbest_pos[:, free] - pos_f)
             + options.social * r2 * (swarm.gbest_pos[free] - pos_f))
    pos_f = pos_f + vel_f
    swarm.positions[:, free] = pos_f
    swarm.velocities[:, free] = vel_f
    # absorbing floor for weights
    ws = spec.weight_slice
    wview = swarm.positions[:, ws]
    bad = wview <= 0.0
    if bad.any():
        wview[bad] = options.eps_weight
        swarm.velocities[:, ws][bad] = 0.0
    for i in range(n_c):
        obj = swarm_objective(spec, swarm.positions[i])
        if obj < swarm.pbest_obj[i]:
            swarm.pbest_obj[i] = obj
            swarm.pbest_pos[i] = swarm.positions[i].copy()
            if obj < swarm.gbest_obj:
                swarm.gbest_obj = float(obj)
                swarm.gbest_pos = swarm.positions[i].copy()
    swarm.iterations += 1


def perturb(spec: SearchSpec, tau: np.ndarray, delta: float,
            rng: np.random.Generator,
            eps: float = EPS_WEIGHT) -> np.ndarray:
    """(1-delta) tau + delta U(0,1) on the free entries."""
    out = tau.copy()
    free = spec.free_mask
    r = rng.random(int(free.sum()))
    out[free] = (1.0 - delta) * out[free] + delta * r
    ws = spec.weight_slice
    out[ws] = np.maximum(out[ws], eps)
    return out


# ----------------------------------------------------------------------
# coupled driver


@dataclass
class SearchResult:
    rule: QuadratureRule | None
    converged: bool
    residual_inf: float
    rounds: int
    lma_iterations: int
    pso_iterations: int
    message: str = ""
    best_tau: np.ndarray | None = None


def _try_finalize(spec: SearchSpec, state: LmaState,
                  options: SearchOptions, provenance: dict):
    polish_opts = replace(options, nu_init=1e-8, lma_max_iters=40)
    polished = lma_solve(spec, state.tau, polish_opts,
                         nu_floor=options.nu_polish_floor)
    final = polished if polished.res_inf <= state.res_inf else state
    try:
        prov = dict(provenance)
        prov["residual_inf"] = final.res_inf
        rule = spec.build_rule(final.tau, prov)
    except (NodeSetError, RuleValidationError) as exc:
        return None, final, str(exc)
    return rule, final, ""


def solve_coupled(spec: SearchSpec,
                  options: SearchOptions | None = None,
                  seed: int | np.random.Generator = 0,
                  warm: np.ndarray | None = None) -> SearchResult:
    """Coupled LMA/PSO search for one orbit layout.

    Deterministic for a given (spec, options, seed).  Round zero is a
    plain LMA solve from the warm start (or a random design); afterwards
    each round runs the swarm, polishes its global best with LMA, feeds
    the result back as a particle, and perturbs the swarm after
    `stagnation_rounds` rounds without relative improvement.
    """
    opts = options or SearchOptions()
    rng = (seed if isinstance(seed, np.random.Generator)
           else np.random.default_rng(seed))
    seed_label = None if isinstance(seed, np.random.Generator) else int(seed)
    prov = {"seed": seed_label, "qv": spec.qv}
    lma_total = 0
    pso_total = 0

    tau0 = warm.copy() if warm is not None else random_design(
        spec, rng, eps=opts.eps_weight)
    tau0[spec.weight_slice] = np.maximum(tau0[spec.weight_slice],
                                         opts.eps_weight)
    state = lma_solve(spec, tau0, opts)
    lma_total += state.iterations
    if state.converged:
        rule, final, msg = _try_finalize(spec, state, opts, prov)
        if rule is not None:
            return SearchResult(rule, True, final.res_inf, 0, lma_total,
                                pso_total, best_tau=final.tau)

    swarm = init_swarm(spec, opts, rng, seeds=(state.tau, tau0))
    best_obj = swarm.gbest_obj
    best_tau = swarm.gbest_pos.copy()
    stall = 0
    delta = opts.delta(spec.qv)
    for rnd in range(1, opts.max_rounds + 1):
        for _ in range(opts.pso_iters):
            pso_step(spec, swarm, opts, rng)
        pso_total += opts.pso_iters
        state = lma_solve(spec, swarm.gbest_pos.copy(), opts)
        lma_total += state.iterations
        if state.converged:
            rule, final, msg = _try_finalize(spec, state, opts, prov)
            if rule is not None:
                return SearchResult(rule, True, final.res_inf, rnd,
                                    lma_total, pso_total,
                                    best_tau=final.tau)
        # feed the LMA endpoint back into the swarm
        obj = swarm_objective(spec, state.tau)
        worst = int(np.argmax(swarm.pbest_obj))
        swarm.positions[worst] = state.tau
        swarm.velocities[worst] = 0.0
        if obj < swarm.pbest_obj[worst]:
            swarm.pbest_obj[worst] = obj
            swarm.pbest_pos[worst] = state.tau.copy()
        if obj < swarm.gbest_obj:
            swarm.gbest_obj = float(obj)
            swarm.gbest_pos = state.tau.copy()
        if swarm.gbest_obj < best_obj * (1.0 - opts.stagnation_rel):
            best_obj = swarm.gbest_obj
            best_tau = swarm.gbest_pos.copy()
            stall = 0
        else:
            stall += 1
        if stall >= opts.stagnation_rounds:
            for i in range(swarm.positions.shape[0]):
                swarm.positions[i] = perturb(spec, swarm.positions[i],
                                             delta, rng, opts.eps_weight)
                swarm.velocities[i] = 0.0
                swarm.pbest_obj[i] = swarm_objective(spec,
                                                     swarm.positions[i])
                swarm.pbest_pos[i] = swarm.positions[i].copy()
            gb = int(np.argmin(swarm.pbest_obj))
            swarm.gbest_obj = float(swarm.pbest_obj[gb])
            swarm.gbest_pos = swarm.pbest_pos[gb].copy()
            stall = 0
    if swarm.gbest_obj < best_obj:
        best_obj = swarm.gbest_obj
        best_tau = swarm.gbest_pos.copy()
    res = math.sqrt(2.0 * best_obj) if np.isfinite(best_obj) else np.inf
    return SearchResult(None, False, res, opts.max_rounds, lma_total,
                        pso_total, "no convergence", best_tau=best_tau)
