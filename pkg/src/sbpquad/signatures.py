"""Orbit-layout selection and the high-level rule-finding driver.

Volume layouts are built from a frozen facet layout (the facet rule's
nodes mapped onto the element boundary) plus enumerated interior orbit
multisets.  Interior candidates are tried in order of increasing node
count, keeping only those whose free-unknown count reaches the number of
permutation-invariant moments of degree <= q_v; this reproduces the
published minimal node counts without hand-tuned tables.

Facet rules for tetrahedra are symmetric triangle rules of degree >= 2p;
their candidate layouts are ordered by the volume-node cost they induce
on the tet and are deliberately *not* DOF-filtered, because classical
consistent-but-overdetermined layouts (the 3-point mid-edge degree-2
rule) would otherwise be lost.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, replace

import numpy as np

from .search import (QuadratureRule, SearchOptions, SearchSpec,
                     facet_quadrature, solve_coupled)
from .simplex import orbit_size, orbit_structure

__all__ = [
    "invariant_moment_count",
    "interior_candidates",
    "facet_layout",
    "volume_search_specs",
    "FacetSearchError",
    "find_facet_rule",
    "FindResult",
    "find_rule",
]


class FacetSearchError(RuntimeError):
    """No facet rule reachable within the facet-stage search budget."""

_DIM_BY_DOMAIN = {"tri": 2, "tet": 3}

# interior orbit kinds: (kind, node count, parameter count)
_INTERIOR = {
    2: (("S1", 1, 0), ("S21", 3, 1), ("S111", 6, 2)),
    3: (("S1", 1, 0), ("S31", 4, 1), ("S22", 6, 1),
        ("S211", 12, 2), ("S1111", 24, 3)),
}

# triangle orbit -> tet facet orbit when a triangle rule is pushed onto
# the faces of the tet
_TRI_TO_TET_FACE = {
    "Svert": "Svert", "SmidEdge": "SmidEdge", "Sedge": "Sedge",
    "S1": "SfaceCent", "S21": "Sface21", "S111": "Sface111",
}

# tet volume nodes induced per triangle-facet orbit (vertex/edge orbits
# are shared between faces, interior facet orbits are not)
_TET_COST = {"Svert": 4, "SmidEdge": 6, "Sedge": 12,
             "S1": 4, "S21": 12, "S111": 24}


def invariant_moment_count(q: int, d: int) -> int:
    """Moments of degree <= q surviving full vertex-permutation symmetry.

    Invariant polynomials on the simplex are generated by the elementary
    symmetric polynomials e_2 .. e_{d+1} of the barycentric coordinates
    (degrees 2 .. d+1), so the count is the number of monomials in those
    generators with weighted degree <= q.
    """
    gens = list(range(2, d + 2))

    def count(rem: int, idx: int) -> int:
        if idx == len(gens):
            return 1
        total = 0
        k = 0
        while k * gens[idx] <= rem:
            total += count(rem - k * gens[idx], idx + 1)
            k += 1
        return total

    return count(q, 0)


def interior_candidates(d: int, qv: int, n_facet_orbits: int,
                        max_candidates: int = 60,
                        dof_filter: bool = True):
    """Interior orbit multisets in increasing node count.

    Yields tuples of kind names.  Free unknowns are all orbit weights
    plus the interior parameters; with dof_filter only multisets whose
    unknown count reaches invariant_moment_count(qv, d) survive.
    """
    kinds = _INTERIOR[d]
    need = invariant_moment_count(qv, d)
    node_cap = 3 * need + 24
    combos = []
    maxes = [1 if k == "S1" else node_cap // nn + 1 for k, nn, _ in kinds]
    for counts in itertools.product(*[range(m + 1) for m in maxes]):
        nodes = sum(c * nn for c, (_, nn, _) in zip(counts, kinds))
        if nodes > node_cap:
            continue
        params = sum(c * np_ for c, (_, _, np_) in zip(counts, kinds))
        orbits = sum(counts)
        unknowns = n_facet_orbits + orbits + params
        if dof_filter and unknowns < need:
            continue
        combo = []
        for c, (k, _, _) in zip(counts, kinds):
            combo.extend([k] * c)
        combos.append((nodes, -unknowns, counts, tuple(combo)))
    combos.sort()
    for _, _, _, combo in combos[:max_candidates]:
        yield combo


def facet_layout(facet_rule: QuadratureRule, d: int):
    """Facet orbit kinds and frozen parameters induced on a d-simplex.

    d=2: decompose the 1-D facet rule into vertex / mid-edge / edge-pair
    orbits (edge pairs at local +/-s freeze Sedge(alpha=(1+s)/2)).
    d=3: push the triangle facet rule's own orbits onto the faces.
    """
    layout: list[tuple[str, tuple[float, ...]]] = []
    if d == 2:
        x = facet_rule.nodes.coords[:, 0]
        tol = 1e-12
        if np.any(np.abs(np.abs(x) - 1.0) <= tol):
            layout.append(("Svert", ()))
        if np.any(np.abs(x) <= tol):
            layout.append(("SmidEdge", ()))
        pos = np.sort(x[(x > tol) & (x < 1.0 - tol)])
        for s in pos:
            layout.append(("Sedge", (float((1.0 + s) / 2.0),)))
        return layout
    if d == 3:
        if facet_rule.signature is None:
            raise ValueError("tet facet rule needs an orbit signature")
        for orb in facet_rule.signature.orbits:
            layout.append((_TRI_TO_TET_FACE[orb.kind], orb.params))
        # canonical order: facet kinds first by rank, then params
        rank = {k: i for i, k in enumerate(
            ["Svert", "SmidEdge", "SfaceCent", "Sedge", "Sface21",
             "Sface111"])}
        layout.sort(key=lambda kp: (rank[kp[0]], kp[1]))
        return layout
    raise ValueError("facet layouts exist for d in {2, 3}")


def volume_search_specs(domain: str, qv: int, facet_kind: str | None,
                        seed: int = 0,
                        options: SearchOptions | None = None,
                        interior: tuple[str, ...] | None = None):
    """Candidate SearchSpecs for one rule request, cheapest first.

    facet_kind None requests an interior-only rule (no facet layout, no
    frozen parameters, not SBP-compatible).
    """
    d = _DIM_BY_DOMAIN[domain]
    specs = []
    if facet_kind is None:
        cands = ([interior] if interior is not None
                 else interior_candidates(d, qv, 0))
        for combo in cands:
            if not combo:
                continue
            specs.append(SearchSpec(d, qv, tuple(combo)))
        return specs
    p = (qv + 1) // 2
    frule = facet_quadrature(facet_kind if d == 2 else "gen", p, d,
                             seed=seed, options=options)
    layout = facet_layout(frule, d)
    fkinds = tuple(k for k, _ in layout)
    frozen = {i: params for i, (_, params) in enumerate(layout)}
    cands = ([interior] if interior is not None
             else interior_candidates(d, qv, len(layout)))
    for combo in cands:
        specs.append(SearchSpec(d, qv, fkinds + tuple(combo),
                                frozen=dict(frozen), facet_rule=frule,
                                facet_kind=facet_kind if d == 2 else "gen",
                                sbp_p=p))
    return specs


# ----------------------------------------------------------------------
# facet rules for the tet


def _tri_facet_candidates(q: int, max_candidates: int = 24):
    """Symmetric triangle layouts of degree q ordered by induced tet cost."""
    node_cap = 3 * invariant_moment_count(q, 2) + 18
    combos = []
    edge_max = node_cap // 6 + 1
    for n_vert in (0, 1):
        for n_mid in (0, 1):
            for n_edge in range(edge_max):
                for n_s1 in (0, 1):
                    for n_s21 in range(node_cap // 3 + 1):
                        for n_s111 in range(node_cap // 6 + 1):
                            nodes = (3 * n_vert + 3 * n_mid + 6 * n_edge
                                     + n_s1 + 3 * n_s21 + 6 * n_s111)
                            if nodes == 0 or nodes > node_cap:
                                continue
                            combo = (["Svert"] * n_vert
                                     + ["SmidEdge"] * n_mid
                                     + ["Sedge"] * n_edge
                                     + ["S1"] * n_s1
                                     + ["S21"] * n_s21
                                     + ["S111"] * n_s111)
                            cost = sum(_TET_COST[k] for k in combo)
                            params = n_edge + n_s21 + 2 * n_s111
                            unknowns = len(combo) + params
                            combos.append((cost, nodes, -unknowns,
                                           tuple(combo)))
    combos.sort()
    seen = set()
    out = []
    for _, _, _, combo in combos:
        if combo in seen:
            continue
        seen.add(combo)
        out.append(combo)
        if len(out) >= max_candidates:
            break
    # The cheap prefix can consist entirely of underdetermined layouts
    # (fewer unknowns than invariant moments) once q is large; those only
    # work for special consistent cases like the mid-edge rule.  Append a
    # second tier of determined layouts so high degrees stay reachable.
    need = invariant_moment_count(q, 2)
    extra = 0
    for _, _, neg_unknowns, combo in combos:
        if extra >= max_candidates:
            break
        if combo in seen or -neg_unknowns < need:
            continue
        seen.add(combo)
        out.append(combo)
        extra += 1
    return out


def find_facet_rule(p: int, seed: int = 0,
                    options: SearchOptions | None = None) -> QuadratureRule:
    """Symmetric triangle rule of degree 2p for the faces of a tet.

    Prefers layouts whose nodes sit at triangle vertices and edges so the
    induced tet volume rule is as small as possible.
    """
    q = 2 * p
    opts = options or SearchOptions(max_rounds=4, pso_iters=25)
    ss = np.random.SeedSequence(seed)
    for combo in _tri_facet_candidates(q):
        spec = SearchSpec(2, q, combo)
        for child in ss.spawn(3):
            res = solve_coupled(spec, opts,
                                np.random.default_rng(child))
            if res.converged:
                rule = res.rule
                rule.provenance.setdefault("role", "tet-facet")
                rule.provenance.setdefault("seed", seed)
                return rule
    raise FacetSearchError(f"no degree-{q} triangle facet rule found")


# ----------------------------------------------------------------------
# driver


@dataclass
class FindResult:
    rule: QuadratureRule | None
    status: str                 # 'ok' | 'budget' | 'exhausted'
    attempts: list
    elapsed: float


def find_rule(domain: str, qv: int, facet_kind: str | None = "lgl",
              seed: int = 0, sweeps: int = 5,
              budget_s: float | None = None,
              options: SearchOptions | None = None,
              interior: tuple[str, ...] | None = None) -> FindResult:
    """Search for a rule, trying candidate layouts in increasing size.

    Layouts are exhausted in node-count order: each gets `sweeps`
    restart seeds before the next (larger) layout is attempted, so the
    returned rule has the smallest reachable node count.  Deterministic
    for fixed arguments; budget_s caps wall time.
    """
    t0 = time.monotonic()
    opts = options or SearchOptions()
    try:
        specs = volume_search_specs(domain, qv, facet_kind, seed=seed,
                                    options=options, interior=interior)
    except FacetSearchError as exc:
        return FindResult(None, "exhausted",
                          [{"stage": "facet", "converged": False,
                            "error": str(exc)}],
                          time.monotonic() - t0)
    if not specs:
        raise ValueError("no candidate layouts")
    ss = np.random.SeedSequence(seed)
    children = iter(ss.spawn(max(1, sweeps) * len(specs)))
    attempts = []
    for spec in specs:
        for sweep in range(max(1, sweeps)):
            child = next(children)
            if budget_s is not None and time.monotonic() - t0 > budget_s:
                return FindResult(None, "budget", attempts,
                                  time.monotonic() - t0)
            res = solve_coupled(spec, opts, np.random.default_rng(child))
            attempts.append({
                "kinds": list(spec.kinds), "sweep": sweep,
                "converged": res.converged,
                "residual": res.residual_inf,
            })
            if res.converged:
                rule = res.rule
                rule.provenance["seed"] = seed
                rule.provenance["sweep"] = sweep
                rule.provenance["n_nodes"] = rule.n_nodes
                return FindResult(rule, "ok", attempts,
                                  time.monotonic() - t0)
    return FindResult(None, "exhausted", attempts, time.monotonic() - t0)
