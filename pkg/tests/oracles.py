"""Independent reference implementations used by the tests."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from nanoccs.registry import ComponentClass, DefaultCandidate, Registry, SlotSpec, excludes
from nanoccs.semantics import MapObjectNode


@dataclass
class MiniProblem:
    registry: Registry
    domains: list[list[str]]  # preference-ordered candidate classes per slot
    user: dict[int, str]  # slot index -> user-chosen class
    pairs: list[tuple[int, str, int, str]]  # slot a == va forbids slot b == vb
    implied: dict[tuple[int, str], list[tuple[int, str, int, str]]]

    def root(self) -> MapObjectNode:
        node = MapObjectNode("Root", None)
        for i, value in self.user.items():
            node.children[f"s{i}"] = MapObjectNode(value, value.lower())
        return node


def random_problem(rng: random.Random) -> MiniProblem:
    n_slots = rng.randint(1, 4)
    classes = [ComponentClass("Root")]
    domains = []
    for i in range(n_slots):
        classes.append(ComponentClass(f"T{i}"))
        n_cand = rng.randint(1, 3)
        members = [f"T{i}x{j}" for j in range(n_cand)]
        for m in members:
            classes.append(ComponentClass(m, m.lower(), f"T{i}"))
        rng.shuffle(members)
        domains.append(members)

    def random_pair():
        a, b = rng.sample(range(n_slots), 2)
        return a, rng.choice(domains[a]), b, rng.choice(domains[b])

    pairs = [random_pair() for _ in range(rng.randint(0, 4))] if n_slots > 1 else []
    implied = {}
    if n_slots > 1:
        for i, dom in enumerate(domains):
            for cand in dom:
                if rng.random() < 0.2:
                    implied[(i, cand)] = [random_pair()]
    user = {i: rng.choice(domains[i]) for i in range(n_slots) if rng.random() < 0.2}

    def constraint(k, p, tag):
        a, va, b, vb = p
        return excludes(f"{tag}{k}", f"s{a}={va} forbids s{b}={vb}", f"s{a}", va, f"s{b}", vb)

    slots = []
    for i, dom in enumerate(domains):
        defaults = tuple(
            DefaultCandidate(c, implied_constraints=tuple(
                constraint(k, p, f"I{i}{c}") for k, p in enumerate(implied.get((i, c), []))))
            for c in dom)
        slots.append(SlotSpec(f"s{i}", "component", f"T{i}", defaults=defaults))
    classes[0] = ComponentClass("Root", slots=tuple(slots),
                                constraints=tuple(constraint(k, p, "P") for k, p in enumerate(pairs)))
    return MiniProblem(Registry(classes, "Root").audit(), domains, user, pairs, implied)


def brute_force(problem: MiniProblem) -> tuple[str, ...] | None:
    """Preference-lexicographic first tuple satisfying every active constraint."""
    domains = [[problem.user[i]] if i in problem.user else dom for i, dom in enumerate(problem.domains)]
    for combo in itertools.product(*domains):
        active = list(problem.pairs)
        for i, value in enumerate(combo):
            if i not in problem.user:
                active += problem.implied.get((i, value), [])
        if all(not (combo[a] == va and combo[b] == vb) for a, va, b, vb in active):
            return combo
    return None


def solved_tuple(problem: MiniProblem, tree: MapObjectNode) -> tuple[str, ...]:
    return tuple(tree.children[f"s{i}"].cls for i in range(len(problem.domains)))


def msd_expected(steps: int) -> float:
    """Unbiased nearest-neighbor walk: E|X_n|^2 = n (unit step length)."""
    return float(steps)


