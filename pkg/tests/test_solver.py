import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nanoccs.pipeline import compile_source, default_registry
from nanoccs.registry import DefaultCandidate
from nanoccs.semantics import MapObjectNode, PrimitiveObjectNode, configuration, iter_nodes
from nanoccs.solver import Invalid, Solver, Valid, interpolate, solve_order, validate_candidate

from oracles import brute_force, random_problem, solved_tuple


def solve(source):
    result = compile_source(source)
    assert result.diagnostics == []
    return result.outcome


def project_classes(tree):
    return {name: child.cls for name, child in tree.children.items() if isinstance(child, MapObjectNode)}


def test_wanderer_interpolation(wanderer_source):
    outcome = solve(wanderer_source)
    assert outcome.ok
    tree = outcome.tree
    geometry = tree.children["geometry"]
    assert geometry.cls == "RectangularLattice"
    assert (geometry.children["width"].value, geometry.children["height"].value) == (32, 32)
    assert tree.children["boundary"].cls == "Absorbing"
    assert tree.children["arena"].cls == "RectangularArena"
    scatter = tree.children["initially"].items[0]
    assert scatter.children["count"].value == 1
    wander = scatter.children["description"].children["do"].items[0].children["action"]
    assert wander.children["destination"].cls == "VacantNeighbors"
    assert wander.children["collision"].cls == "IgnoreOccupied"


def test_hexagonal_periodic_is_unsolvable():
    outcome = solve("arena: hexagonal;\nboundary: periodic;")
    assert not outcome.ok
    assert outcome.path in ("Project/arena", "Project/boundary")
    assert any(v.startswith("C1") for v in outcome.violated)
    assert "Project/boundary" in outcome.conflicting
    assert "C1" in outcome.render()


def test_hexagonal_arena_alone_picks_absorbing_and_hex_lattice():
    outcome = solve("arena: hexagonal;")
    assert outcome.ok
    assert project_classes(outcome.tree) == {
        "geometry": "HexagonalLattice", "boundary": "Absorbing", "arena": "HexagonalArena"}


def test_hexagonal_arena_matches_product_oracle():
    # enumerate every geometry x boundary x arena triple in preference order
    reg = default_registry()
    doms = {s: [d.produced_class for d in reg["Project"].slot(s).defaults] for s in ("geometry", "boundary", "arena")}
    doms["arena"] = ["HexagonalArena"]
    first = None
    for g in doms["geometry"]:
        for b in doms["boundary"]:
            for a in doms["arena"]:
                ok = not (a == "HexagonalArena" and b == "Periodic") and not (
                    g == "RectangularLattice" and a == "HexagonalArena")
                if ok and first is None:
                    first = {"geometry": g, "boundary": b, "arena": a}
    assert project_classes(solve("arena: hexagonal;").tree) == first


def test_rectangular_hexagonal_fails_on_c2():
    outcome = solve("geometry: rectangular;\narena: hexagonal;")
    assert not outcome.ok
    assert any(v.startswith("C2") for v in outcome.violated)


def test_all_neighbors_keeps_a_collision_rule():
    source = ("initially: scatter { description: Agent { do: Behavior { "
              "action: wander { destination: all_neighbors; }; }; }; };")
    wander = solve(source).tree.children["initially"].items[0].children["description"].children["do"].items[0]
    assert wander.children["action"].children["collision"].cls == "IgnoreOccupied"


# validate_candidate

def test_periodic_invalid_next_to_hexagonal_arena():
    reg = default_registry()
    verdict = validate_candidate(DefaultCandidate("Periodic"), reg["Project"].slot("boundary"), "Project",
                                 {"arena": "HexagonalArena"}, reg)
    assert isinstance(verdict, Invalid)
    assert [c.label for c in verdict.violated] == ["C1"]


def test_absorbing_valid_on_empty_configuration():
    reg = default_registry()
    assert isinstance(validate_candidate(DefaultCandidate("Absorbing"), reg["Project"].slot("boundary"),
                                         "Project", {}, reg), Valid)


def test_error_on_collision_valid_with_vacant_neighbors():
    reg = default_registry()
    verdict = validate_candidate(DefaultCandidate("ErrorOnCollision"), reg["Wander"].slot("collision"),
                                 "Wander", {"destination": "VacantNeighbors"}, reg)
    assert isinstance(verdict, Valid)


def test_undecided_does_not_invalidate():
    reg = default_registry()
    verdict = validate_candidate(DefaultCandidate("HexagonalArena"), reg["Project"].slot("arena"),
                                 "Project", {}, reg)
    assert isinstance(verdict, Valid)


# solve order

def test_solve_order_project_follows_declaration():
    reg = default_registry()
    order = solve_order(MapObjectNode("Project", None), reg)
    assert [s.path for s in order] == [f"Project/{n}" for n in reg["Project"].slot_names]
    assert [s.path.split("/")[-1] for s in order] == [
        "geometry", "boundary", "arena", "initially", "output", "terminate"]
    assert all(s.source == "interpolatable" for s in order)


def test_solve_order_leaf_and_wander():
    reg = default_registry()
    assert solve_order(PrimitiveObjectNode("integer", 1), reg) == []
    order = solve_order(MapObjectNode("Wander", "wander", {"collision": MapObjectNode("IgnoreOccupied", None)}), reg)
    assert [(s.path, s.source) for s in order] == [
        ("Wander/destination", "interpolatable"), ("Wander/collision", "user")]


# properties over random mini-registries

@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_equivalence(seed):
    problem = random_problem(random.Random(seed))
    expected = brute_force(problem)
    outcome = interpolate(problem.root(), problem.registry)
    if expected is None:
        assert not outcome.ok
    else:
        assert outcome.ok and solved_tuple(problem, outcome.tree) == expected


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_user_supremacy_completeness_termination(seed):
    problem = random_problem(random.Random(seed))
    solver = Solver(problem.registry)
    outcome = solver.interpolate(problem.root())
    sizes = [1 if i in problem.user else len(d) for i, d in enumerate(problem.domains)]
    # every prefix of the search tree is bound at most once per candidate tuple
    bound = sum(math.prod(sizes[: k + 1]) for k in range(len(sizes)))
    assert solver.visits <= bound
    if outcome.ok:
        for i, value in problem.user.items():
            assert outcome.tree.children[f"s{i}"].cls == value
            assert outcome.bindings[f"Root/s{i}"] == "user"
        assert set(outcome.tree.children) == {f"s{i}" for i in range(len(sizes))}


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_determinism(seed):
    problem = random_problem(random.Random(seed))
    a = interpolate(problem.root(), problem.registry)
    b = interpolate(problem.root(), problem.registry)
    if a.ok:
        assert b.ok and configuration(a.tree) == configuration(b.tree) and a.bindings == b.bindings
    else:
        assert a == b


def test_interpolate_does_not_mutate_input(wanderer_source):
    result = compile_source(wanderer_source)
    before = configuration(result.tree)
    interpolate(result.tree, default_registry())
    assert configuration(result.tree) == before


EXAMPLE_SOURCES = [
    "",
    "boundary: periodic;",
    "arena: hexagonal;",
    "geometry: triangular { width: 5; };",
    "initially: scatter { count: 3; description: Agent { do: Behavior { action: wander; }; }; };",
]


@pytest.mark.parametrize("source", EXAMPLE_SOURCES)
def test_solved_trees_are_complete(source):
    reg = default_registry()
    outcome = solve(source)
    assert outcome.ok
    for path, node in iter_nodes(outcome.tree, "Project"):
        if isinstance(node, MapObjectNode):
            assert set(node.children) == set(reg[node.cls].slot_names), path
            for name in node.children:
                assert f"{path}/{name}" in outcome.bindings


@pytest.mark.parametrize("source", EXAMPLE_SOURCES)
def test_user_values_survive(source):
    result = compile_source(source)
    solved = result.outcome.tree
    for path, node in iter_nodes(result.tree, "Project"):
        if isinstance(node, PrimitiveObjectNode):
            assert result.outcome.bindings[path] == "user"
    for name, child in result.tree.children.items():
        assert result.outcome.bindings[f"Project/{name}"] == "user"
        if isinstance(child, MapObjectNode):
            assert solved.children[name].cls == child.cls
            for slot, value in child.children.items():
                assert configuration(solved.children[name].children[slot]) == configuration(value)
