"""Orbit layout enumeration and the rule-search driver."""

import numpy as np
import pytest

import sbpquad.signatures
from sbpquad.search import SearchOptions, lg_rule, lgl_rule
from sbpquad.signatures import (
    FacetSearchError,
    facet_layout,
    find_facet_rule,
    find_rule,
    interior_candidates,
    invariant_moment_count,
    volume_search_specs,
)
from sbpquad.simplex import orbit_structure


# ----------------------------------------------------------------------
# symmetric moment counts


@pytest.mark.parametrize("q, expected", [(0, 1), (1, 1), (2, 2), (3, 3),
                                         (4, 4), (5, 5), (6, 7), (7, 8),
                                         (8, 10)])
def test_invariant_moment_count_triangle(q, expected):
    assert invariant_moment_count(q, 2) == expected


@pytest.mark.parametrize("q, expected", [(0, 1), (1, 1), (2, 2), (3, 3),
                                         (4, 5), (5, 6), (6, 9)])
def test_invariant_moment_count_tetrahedron(q, expected):
    assert invariant_moment_count(q, 3) == expected


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("q", range(0, 9))
def test_invariant_moment_count_brute_force(q, d):
    """Count integer solutions of sum_i i*k_i <= q over generator
    degrees 2..d+1 directly."""
    degrees = range(2, d + 2)
    count = 0
    grids = np.meshgrid(*[np.arange(q // g + 1) for g in degrees],
                        indexing="ij")
    total = sum(g * k for g, k in zip(degrees, grids))
    count = int((total <= q).sum())
    assert invariant_moment_count(q, d) == count


# ----------------------------------------------------------------------
# interior candidate enumeration


def combo_nodes(combo, d):
    return sum(orbit_structure(k, d).size for k in combo)


def combo_unknowns(combo, d, n_facet_orbits):
    return n_facet_orbits + len(combo) + sum(
        orbit_structure(k, d).n_params for k in combo)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("qv", [1, 2, 4])
def test_interior_candidates_sorted_by_node_count(qv, d):
    combos = list(interior_candidates(d, qv, 2))
    counts = [combo_nodes(c, d) for c in combos]
    assert counts == sorted(counts)
    assert len(set(combos)) == len(combos)


def test_interior_candidates_smallest_first():
    # facet orbits already supply enough unknowns for degree 2, so the
    # empty interior layout comes first, then the centroid
    combos = list(interior_candidates(2, 2, 2))
    assert combos[0] == ()
    assert combos[1] == ("S1",)


@pytest.mark.parametrize("d", [2, 3])
def test_interior_candidates_dof_filter(d):
    qv = 6
    need = invariant_moment_count(qv, d)
    combos = list(interior_candidates(d, qv, 0))
    assert all(combo_unknowns(c, d, 0) >= need for c in combos)
    # without the filter, under-determined layouts (like a bare
    # centroid) lead the list
    unfiltered = list(interior_candidates(d, qv, 0, dof_filter=False))
    assert any(combo_unknowns(c, d, 0) < need for c in unfiltered)
    assert unfiltered[0] == ()


def test_interior_candidates_at_most_one_centroid():
    for combo in interior_candidates(2, 6, 0):
        assert combo.count("S1") <= 1


# ----------------------------------------------------------------------
# facet layouts on the volume element


def test_facet_layout_lgl3():
    layout = facet_layout(lgl_rule(3), 2)
    assert layout == [("Svert", ()), ("SmidEdge", ())]


def test_facet_layout_lgl4():
    layout = facet_layout(lgl_rule(4), 2)
    assert [k for k, _ in layout] == ["Svert", "Sedge"]
    (alpha,) = layout[1][1]
    assert alpha == pytest.approx((1.0 + 1.0 / np.sqrt(5.0)) / 2.0)


def test_facet_layout_lgl5():
    layout = facet_layout(lgl_rule(5), 2)
    assert [k for k, _ in layout] == ["Svert", "SmidEdge", "Sedge"]
    (alpha,) = layout[2][1]
    assert alpha == pytest.approx((1.0 + np.sqrt(3.0 / 7.0)) / 2.0)


def test_facet_layout_lg1():
    assert facet_layout(lg_rule(1), 2) == [("SmidEdge", ())]


def test_facet_layout_lg2():
    layout = facet_layout(lg_rule(2), 2)
    assert [k for k, _ in layout] == ["Sedge"]
    (alpha,) = layout[0][1]
    assert alpha == pytest.approx((1.0 + 1.0 / np.sqrt(3.0)) / 2.0)


def test_facet_layout_lg3_two_edge_orbits():
    layout = facet_layout(lg_rule(3), 2)
    assert [k for k, _ in layout] == ["SmidEdge", "Sedge"]
    (alpha,) = layout[1][1]
    assert alpha == pytest.approx((1.0 + np.sqrt(0.6)) / 2.0)


def test_facet_layout_bad_dimension():
    with pytest.raises(ValueError):
        facet_layout(lgl_rule(3), 4)


# ----------------------------------------------------------------------
# triangle facet rules for the tet


def test_find_facet_rule_degree2_is_midedge():
    rule = find_facet_rule(1, seed=0)
    assert rule.qv == 2
    assert rule.n_nodes == 3
    # classic mid-edge rule: each barycentric row is a permutation of
    # (1/2, 1/2, 0) and the weights are |T|/3 = 2/3
    assert np.allclose(np.sort(rule.nodes.bary, axis=1),
                       [[0.0, 0.5, 0.5]] * 3, atol=1e-14)
    assert np.allclose(rule.nodes.weights, 2.0 / 3.0, atol=1e-13)


def test_facet_layout_tet_from_midedge_rule():
    rule = find_facet_rule(1, seed=0)
    layout = facet_layout(rule, 3)
    assert layout == [("SmidEdge", ())]


@pytest.mark.parametrize("q", [2, 4, 6])
def test_facet_candidates_offer_determined_layouts(q):
    # the cheap (vertex/edge-heavy) layouts are all underdetermined at
    # high degree; the list must still contain layouts with at least as
    # many unknowns as there are invariant moments, or searches beyond
    # degree 4 can never succeed
    need = invariant_moment_count(q, 2)
    combos = sbpquad.signatures._tri_facet_candidates(q)
    unknowns = [len(c) + sum(orbit_structure(k, 2).n_params for k in c)
                for c in combos]
    assert max(unknowns) >= need
    # the determined tail must not disturb the cheap prefix that the
    # low-degree searches (and the 7-node tet rule) rely on
    assert combos[0] == ("S1",)
    assert ("SmidEdge",) in combos[:4]


# ----------------------------------------------------------------------
# search specs


def test_volume_specs_tri_lgl_structure():
    specs = volume_search_specs("tri", 2, "lgl")
    first = specs[0]
    assert first.kinds[:2] == ("Svert", "SmidEdge")
    assert first.sbp_p == 1
    assert first.facet_kind == "lgl"
    assert first.facet_rule is not None
    assert first.facet_rule.n_nodes == 3


def test_volume_specs_edge_parameter_frozen():
    specs = volume_search_specs("tri", 3, "lgl")
    spec = specs[0]
    assert spec.kinds[0] == "Svert"
    assert spec.kinds[1] == "Sedge"
    (alpha,) = spec.frozen[1]
    assert alpha == pytest.approx((1.0 + 1.0 / np.sqrt(5.0)) / 2.0)
    assert not spec.free_mask[spec.param_slices[1]].any()


def test_volume_specs_interior_only():
    specs = volume_search_specs("tri", 3, None)
    for spec in specs:
        assert spec.facet_rule is None
        assert spec.sbp_p is None
        assert not spec.frozen


def test_volume_specs_explicit_interior():
    specs = volume_search_specs("tri", 2, "lgl", interior=("S1",))
    assert len(specs) == 1
    assert specs[0].kinds == ("Svert", "SmidEdge", "S1")


# ----------------------------------------------------------------------
# driver


def test_find_rule_budget_exhausted():
    res = find_rule("tri", 4, "lgl", seed=0, budget_s=0.0)
    assert res.status == "budget"
    assert res.rule is None


def test_find_rule_no_layout_converges():
    opts = SearchOptions(max_rounds=1, pso_iters=5, lma_max_iters=40)
    res = find_rule("tri", 2, facet_kind=None, interior=("S1",),
                    sweeps=1, options=opts)
    assert res.status == "exhausted"
    assert res.rule is None
    assert all(not a["converged"] for a in res.attempts)


def test_find_rule_interior_only_gauss_like():
    # without facet constraints the degree-2 search finds the 3-point
    # interior rule
    res = find_rule("tri", 2, facet_kind=None, seed=0, sweeps=3)
    assert res.status == "ok"
    assert res.rule.n_nodes == 3
    assert np.allclose(np.sort(res.rule.nodes.bary, axis=1),
                       [[1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]] * 3, atol=1e-12)


def test_find_rule_attempt_log(tri_lgl_results):
    res = tri_lgl_results[2]
    assert res.status == "ok"
    assert res.attempts[-1]["converged"]
    assert res.rule.provenance["seed"] == 0


def test_find_rule_reports_facet_stage_failure(monkeypatch):
    """A facet search that comes up empty surfaces as an exhausted
    result, not an exception."""
    def no_facet(*args, **kwargs):
        raise FacetSearchError("nothing reachable")

    monkeypatch.setattr(sbpquad.signatures, "facet_quadrature", no_facet)
    res = find_rule("tet", 2, facet_kind="gen", seed=0)
    assert res.status == "exhausted"
    assert res.rule is None
    assert res.attempts[0]["stage"] == "facet"


def test_cli_find_exit_on_facet_stage_failure(monkeypatch):
    import sbpquad.cli as cli

    def no_facet(*args, **kwargs):
        raise FacetSearchError("nothing reachable")

    monkeypatch.setattr(sbpquad.signatures, "facet_quadrature", no_facet)
    code = cli.main(["find", "--domain", "tet", "--qv", "2"])
    assert code == cli.EXIT_SEARCH
