"""Permutation algebra, replica-surface topology, and spec serialization."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tme import perms
from tme.perms import (
    MeasureSpec,
    Permutation,
    builtin_spec,
    compose,
    format_permutation,
    format_spec,
    orbit_count,
    parse_permutation,
    parse_spec,
    spec_jn,
    spec_kn,
    spec_phir,
    spec_smun,
    topology_report,
)


def perm(size, *cycles):
    return Permutation.from_cycles(size, cycles)


@st.composite
def permutations(draw, max_size=8):
    size = draw(st.integers(min_value=1, max_value=max_size))
    image = draw(st.permutations(tuple(range(1, size + 1))))
    return Permutation(tuple(image))


# ---------------------------------------------------------------------------
# composition and cycle structure


def test_compose_identity_is_neutral():
    p = perm(4, (1, 3, 2))
    e = Permutation.identity(4)
    assert compose(e, p) == p
    assert compose(p, e) == p


def test_compose_three_cycle_with_swap():
    # (1 2 3) after (2 3) acts as the transposition (1 2)
    p = perm(3, (1, 2, 3))
    q = perm(3, (2, 3))
    assert compose(p, q) == perm(3, (1, 2))


@given(permutations())
def test_compose_with_inverse_gives_identity(p):
    assert compose(p, p.inverse()).is_identity()
    assert compose(p.inverse(), p).is_identity()


@given(permutations())
def test_inverse_is_involution(p):
    assert p.inverse().inverse() == p


def test_cycle_count_examples():
    assert Permutation.identity(3).cycle_count() == 3
    assert perm(5, (1, 2, 3, 4, 5)).cycle_count() == 1
    # pi_A pi_B^{-1} for the three-replica commutator spec has two cycles
    spec = spec_jn(1)
    rel = compose(spec.pi_A, spec.pi_B.inverse())
    assert rel.cycle_count() == 2


@given(permutations())
def test_cycle_count_invariant_under_inversion(p):
    assert p.cycle_count() == p.inverse().cycle_count()


@given(permutations())
def test_cycles_cover_all_moved_points(p):
    # cycles() lists nontrivial cycles; together with fixed points they
    # partition the domain, and cycle_count counts both kinds
    moved = sorted(x for cyc in p.cycles() for x in cyc)
    assert moved == sorted(x for x in range(1, p.size + 1) if p(x) != x)
    fixed = p.size - len(moved)
    assert p.cycle_count() == len(p.cycles()) + fixed


# ---------------------------------------------------------------------------
# group orbits


def test_orbit_count_identity_only():
    assert orbit_count([Permutation.identity(4)], 4) == 4


def test_orbit_count_generating_full_group():
    gens = [perm(3, (1, 2)), perm(3, (1, 3, 2))]
    assert orbit_count(gens, 3) == 1


def test_orbit_count_double_transposition():
    assert orbit_count([perm(4, (1, 2), (3, 4))], 4) == 2


@given(permutations())
def test_orbit_count_single_generator_counts_cycles(p):
    assert orbit_count([p], p.size) == p.cycle_count()


# ---------------------------------------------------------------------------
# builtin measure specs


def test_builtin_j1_images():
    spec = spec_jn(1)
    assert spec.replicas == 3
    assert spec.pi_A == perm(3, (1, 2, 3))
    assert spec.pi_B == perm(3, (2, 3))
    assert spec.pi_C == perm(3, (1, 2))
    assert spec.charge is None


def test_builtin_phi2_is_involutive():
    spec = spec_phir(2)
    assert spec.replicas == 4
    for p in (spec.pi_A, spec.pi_B, spec.pi_C):
        assert compose(p, p).is_identity()
        assert not p.is_identity()


def test_builtin_smun_structure():
    spec = spec_smun(2, mu=0.7)
    assert spec.replicas == 3
    assert spec.pi_A == spec.pi_B
    assert spec.pi_C.is_identity()
    assert spec.charge is not None
    assert spec.charge.strength == pytest.approx(0.7)


def test_builtin_spec_dispatch_matches_constructors():
    assert builtin_spec("jn", 2) == spec_jn(2)
    assert builtin_spec("kn", 1) == spec_kn(1)
    assert builtin_spec("phir", 3) == spec_phir(3)
    assert builtin_spec("smun", 1) == spec_smun(1)


def test_builtin_spec_rejects_unknown_family():
    with pytest.raises(ValueError):
        builtin_spec("xn", 1)


def test_spec_names():
    assert spec_jn(1).name == "j1"
    assert spec_kn(2).name == "k2"
    assert spec_phir(2).name == "phi2"
    assert spec_smun(1).name == "s1"


# ---------------------------------------------------------------------------
# topology of the replica surface


def test_all_identity_single_replica_surface():
    e = Permutation.identity(1)
    spec = MeasureSpec("triv", 1, e, e, e)
    rep = topology_report(spec)
    # six interface pairs each contribute one boundary cycle, so the
    # unordered sum is 6; each of the four junction vertices is one orbit
    assert sum(rep.boundary_cycle_counts.values()) == 6
    assert sum(rep.vertex_orbit_counts.values()) == 4
    assert rep.is_manifold
    assert rep.genus == 3


@pytest.mark.parametrize("replicas", [2, 3, 4])
def test_all_identity_many_replicas_disconnects(replicas):
    # with no replica mixing the surface falls apart into independent copies;
    # the report keeps per-pair/vertex counts but declines to assign a genus
    e = Permutation.identity(replicas)
    spec = MeasureSpec("triv", replicas, e, e, e)
    rep = topology_report(spec)
    assert rep.genus is None
    assert all(v == replicas for v in rep.vertex_orbit_counts.values())
    assert all(v == replicas for v in rep.boundary_cycle_counts.values())


def test_j1_topology():
    rep = topology_report(spec_jn(1))
    assert rep.ordered_cycle_sum == 20
    assert rep.is_manifold
    assert rep.genus == 7


def test_phi2_topology_is_manifold():
    rep = topology_report(spec_phir(2))
    assert rep.is_manifold


def test_manifold_iff_every_vertex_euler_is_two():
    for spec in (spec_jn(1), spec_jn(2), spec_phir(2), spec_smun(1)):
        rep = topology_report(spec)
        assert rep.is_manifold == all(v == 2 for v in rep.vertex_euler.values())


def test_builtin_specs_are_manifolds():
    for n in range(1, 7):
        assert topology_report(spec_jn(n)).is_manifold
        assert topology_report(spec_kn(n)).is_manifold
        assert topology_report(spec_smun(n)).is_manifold
    for r in range(2, 7):
        assert topology_report(spec_phir(r)).is_manifold


def test_non_transitive_spec_reported_not_rejected():
    # replica 3 never talks to replicas 1-2: the surface disconnects, which
    # shows up as a junction orbit count above one rather than an exception
    p = perm(3, (1, 2))
    spec = MeasureSpec("split", 3, p, p, p)
    rep = topology_report(spec)
    assert max(rep.vertex_orbit_counts.values()) > 1


# ---------------------------------------------------------------------------
# serialization


def test_format_permutation_cycle_notation():
    assert format_permutation(perm(3, (1, 2, 3))) == "(1 2 3)"
    assert format_permutation(Permutation.identity(3)) == "id"


def test_parse_permutation_examples():
    assert parse_permutation("(1 2 3)", 3) == perm(3, (1, 2, 3))
    assert parse_permutation("(1 2)(3 4)", 4) == perm(4, (1, 2), (3, 4))
    assert parse_permutation("id", 2) == Permutation.identity(2)
    assert parse_permutation("()", 2) == Permutation.identity(2)


def test_parse_permutation_rejects_garbage():
    with pytest.raises(ValueError):
        parse_permutation("(1 2", 3)
    with pytest.raises(ValueError):
        parse_permutation("(1 2 9)", 3)
    with pytest.raises(ValueError):
        parse_permutation("(1 1)", 3)


@given(permutations())
def test_permutation_round_trip(p):
    assert parse_permutation(format_permutation(p), p.size) == p


def test_format_spec_layout():
    text = format_spec(spec_jn(1))
    assert "pi_A=(1 2 3)" in text
    assert text.splitlines()[0] == "name=j1"


@pytest.mark.parametrize(
    "spec",
    [spec_jn(1), spec_jn(2), spec_kn(1), spec_phir(2), spec_phir(3), spec_smun(1, 0.4)],
)
def test_spec_round_trip(spec):
    assert parse_spec(format_spec(spec)) == spec


@settings(max_examples=25)
@given(permutations(max_size=5), permutations(max_size=5), permutations(max_size=5))
def test_random_spec_round_trip(pa, pb, pc):
    size = max(pa.size, pb.size, pc.size)

    def pad(p):
        return Permutation(p.image + tuple(range(p.size + 1, size + 1)))

    spec = MeasureSpec("x", size, pad(pa), pad(pb), pad(pc))
    assert parse_spec(format_spec(spec)) == spec
