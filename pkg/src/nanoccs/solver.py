"""Backtracking interpolation of unspecified slots over ordered defaults.

Each component instance is solved slot by slot in declaration order. A
user-specified slot has a single candidate and is never overridden; an
unspecified slot tries its defaults in preference order. A candidate is
valid when no constraint owned by the enclosing component is violated and,
for compound candidates, when its own slots can be interpolated in turn.
When a later slot fails, the solver unbinds and resumes with the next
untried candidate of the previous slot.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Callable, Union

from .errors import RegistryAuditError
from .registry import (
    COMPONENT,
    LIST,
    PRIMITIVE,
    Constraint,
    DefaultCandidate,
    Registry,
    SlotSpec,
    Verdict,
)
from .semantics import (
    ListObjectNode,
    MapObjectNode,
    ObjectNode,
    PrimitiveObjectNode,
    member_segment,
)


@dataclass(frozen=True)
class Slot:
    path: str
    expected: str
    source: str  # "user" | "interpolatable"


@dataclass
class Solved:
    tree: MapObjectNode
    bindings: dict[str, str]  # slot path -> provenance

    @property
    def ok(self) -> bool:
        return True


@dataclass
class Unsolvable:
    path: str
    tried: list[str]
    violated: list[str]
    conflicting: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return False

    def render(self) -> str:
        tried = ", ".join(self.tried) or "nothing"
        violated = "; ".join(self.violated) or "none"
        text = f"cannot satisfy {self.path}: tried {tried}; violated: {violated}"
        if self.conflicting:
            text += f" (conflicts with {', '.join(self.conflicting)})"
        return text

    def to_json(self) -> dict:
        return {"path": self.path, "tried": self.tried, "violated": self.violated,
                "conflicting": self.conflicting}


SolverOutcome = Union[Solved, Unsolvable]


@dataclass(frozen=True)
class Valid:
    pass


@dataclass(frozen=True)
class Invalid:
    violated: tuple[Constraint, ...]
    nested: Unsolvable | None = None


class PartialConfiguration:
    """Bindings made so far plus the constraints they activate.

    Constraints are scoped to the path of the component that owns them;
    ``values_at`` presents a component's bound slots by bare slot name.
    All mutation goes through a trail so that backtracking can undo it.
    """

    def __init__(self) -> None:
        self.bindings: dict[str, tuple[Any, str]] = {}  # path -> (value, provenance)
        self.active: list[tuple[str, Constraint, str | None]] = []  # (owner, constraint, implied by)
        self._trail: list[Callable[[], None]] = []

    def mark(self) -> int:
        return len(self._trail)

    def undo(self, mark: int) -> None:
        while len(self._trail) > mark:
            self._trail.pop()()

    def bind(self, path: str, value: Any, provenance: str) -> None:
        self.bindings[path] = (value, provenance)
        self._trail.append(lambda: self.bindings.pop(path))

    def activate(self, owner: str, constraint: Constraint, implied_by: str | None = None) -> None:
        self.active.append((owner, constraint, implied_by))
        self._trail.append(self.active.pop)

    def record(self, undo: Callable[[], None]) -> None:
        self._trail.append(undo)

    def values_at(self, owner: str) -> dict[str, Any]:
        prefix = owner + "/"
        return {p[len(prefix):]: v for p, (v, _) in self.bindings.items()
                if p.startswith(prefix) and "/" not in p[len(prefix):]}

    def check(self, owner: str) -> tuple[list[Constraint], list[Constraint]]:
        """Evaluate the constraints owned by ``owner``; return (violated, undecided)."""
        values = self.values_at(owner)
        violated, undecided = [], []
        for scope, constraint, _ in self.active:
            if scope != owner:
                continue
            verdict = constraint.evaluate(values)
            if verdict is Verdict.VIOLATED:
                violated.append(constraint)
            elif verdict is Verdict.UNDECIDED:
                undecided.append(constraint)
        return violated, undecided


def solve_order(node: ObjectNode, registry: Registry, path: str | None = None) -> list[Slot]:
    """Slots of ``node`` in the order the solver visits them."""
    if not isinstance(node, MapObjectNode):
        return []
    path = path if path is not None else node.cls
    return [Slot(f"{path}/{s.name}", s.expected, "user" if s.name in node.children else "interpolatable")
            for s in registry[node.cls].slots]


def slot_value(node: ObjectNode) -> Any:
    """What constraints see for a bound slot."""
    if isinstance(node, MapObjectNode):
        return node.cls
    if isinstance(node, ListObjectNode):
        return tuple(item.cls for item in node.items)
    return node.value


class Solver:
    """One interpolation run. Not reusable; create a new one per tree."""

    def __init__(self, registry: Registry):
        self.registry = registry
        self.cfg = PartialConfiguration()
        self.failure: Unsolvable | None = None
        self._failure_depth = -1
        self.visits = 0

    def interpolate(self, root: MapObjectNode) -> SolverOutcome:
        tree = copy.deepcopy(root)
        if self.solve_node(tree, self.registry.root):
            provenance = {p: origin for p, (_, origin) in self.cfg.bindings.items()}
            return Solved(tree, provenance)
        assert self.failure is not None
        return self.failure

    # recursion over the slots of one component instance

    def solve_node(self, node: MapObjectNode, path: str) -> bool:
        cls = self.registry[node.cls]
        missing = [s.name for s in cls.slots if s.required and s.name not in node.children]
        if missing:
            # determination checks run first; this is a defensive recheck
            self._fail(f"{path}/{missing[0]}", [], ["required slot has no value"])
            return False
        mark = self.cfg.mark()
        for constraint in cls.constraints:
            self.cfg.activate(path, constraint)
        user = dict(node.children)
        node.children.clear()
        self.cfg.record(lambda: _restore(node.children, user))
        if self._solve_slot(node, path, cls.slots, 0, user):
            if self.failure is not None and self.failure.path.startswith(path + "/"):
                # failures inside a subtree that went on to solve were transient
                self.failure = None
                self._failure_depth = -1
            return True
        self.cfg.undo(mark)
        return False

    def _solve_slot(self, node: MapObjectNode, path: str, slots: tuple[SlotSpec, ...],
                    index: int, user: dict[str, ObjectNode]) -> bool:
        if index == len(slots):
            _, undecided = self.cfg.check(path)
            if undecided:
                labels = ", ".join(c.label for c in undecided)
                raise RegistryAuditError(f"{path}: constraints {labels} undecided after all slots bound")
            return True
        slot = slots[index]
        slot_path = f"{path}/{slot.name}"
        if slot.name in user:
            value = user[slot.name]
            mark = self.cfg.mark()
            verdict = self.validate(node, path, slot, value, value.origin, ())
            if isinstance(verdict, Valid) and self._solve_slot(node, path, slots, index + 1, user):
                return True
            self.cfg.undo(mark)
            if isinstance(verdict, Invalid):
                self._fail_candidate(slot_path, [f"{_describe(value)} (user)"], [verdict], path)
            return False
        tried, verdicts = [], []
        for k, candidate in enumerate(slot.defaults):
            mark = self.cfg.mark()
            value = self.materialize(slot, candidate, f"default[{k}]")
            verdict = self.validate(node, path, slot, value, f"default[{k}]", candidate.implied_constraints)
            tried.append(f"{candidate.describe()} (default[{k}])")
            verdicts.append(verdict)
            if isinstance(verdict, Valid) and self._solve_slot(node, path, slots, index + 1, user):
                return True
            self.cfg.undo(mark)
        self._fail_candidate(slot_path, tried, [v for v in verdicts if isinstance(v, Invalid)], path)
        return False

    def validate(self, owner: MapObjectNode, owner_path: str, slot: SlotSpec, value: ObjectNode,
                 provenance: str, implied: tuple[Constraint, ...]) -> Valid | Invalid:
        """Tentatively bind ``value``; keep the binding only if it is valid.

        On an invalid verdict the caller is responsible for undoing.
        """
        self.visits += 1
        slot_path = f"{owner_path}/{slot.name}"
        self.cfg.bind(slot_path, slot_value(value), provenance)
        owner.children[slot.name] = value
        self.cfg.record(lambda: owner.children.pop(slot.name, None))
        for constraint in implied:
            self.cfg.activate(owner_path, constraint, implied_by=slot_path)
        violated, _ = self.cfg.check(owner_path)
        if violated:
            return Invalid(tuple(violated))
        # compound values must interpolate their own slots to count as valid
        if isinstance(value, MapObjectNode):
            if not self.solve_node(value, slot_path):
                return Invalid((), self.failure)
        elif isinstance(value, ListObjectNode):
            for i, item in enumerate(value.items):
                if not self.solve_node(item, f"{slot_path}/{member_segment(item.keyword, i)}"):
                    return Invalid((), self.failure)
        return Valid()

    def materialize(self, slot: SlotSpec, candidate: DefaultCandidate, origin: str) -> ObjectNode:
        if slot.kind == PRIMITIVE:
            return PrimitiveObjectNode(slot.expected, candidate.value, origin=origin)
        if slot.kind == LIST:
            items = [MapObjectNode(name, self.registry[name].keyword, origin=origin) for name in candidate.value]
            return ListObjectNode(slot.expected, items, origin=origin)
        assert slot.kind == COMPONENT
        cls = self.registry[candidate.produced_class]
        node = MapObjectNode(cls.name, cls.keyword, origin=origin)
        for name, literal in candidate.preset.items():
            preset_slot = cls.slot(name)
            if preset_slot.kind == PRIMITIVE:
                node.children[name] = PrimitiveObjectNode(preset_slot.expected, literal, origin=origin)
            else:
                target = self.registry[literal]
                node.children[name] = MapObjectNode(target.name, target.keyword, origin=origin)
        return node

    # failure bookkeeping: keep the deepest failing path (first such path on
    # ties); a later failure at that same path replaces the earlier one, since
    # it was reached with more upstream alternatives exhausted

    def _fail_candidate(self, slot_path: str, tried: list[str], verdicts: list[Invalid], owner: str) -> None:
        violated: list[str] = []
        conflicting: list[str] = []
        nested = None
        for verdict in verdicts:
            for constraint in verdict.violated:
                if str(constraint) not in violated:
                    violated.append(str(constraint))
                for name in constraint.slots:
                    other = f"{owner}/{name}"
                    if other != slot_path and other not in conflicting:
                        conflicting.append(other)
            if verdict.nested is not None:
                nested = verdict.nested
        if nested is not None and not violated:
            return  # the deeper nested failure already describes the cause
        self._fail(slot_path, tried, violated, conflicting)

    def _fail(self, path: str, tried: list[str], violated: list[str], conflicting: list[str] = ()) -> None:
        depth = path.count("/")
        if depth > self._failure_depth or (self.failure is not None and self.failure.path == path):
            self._failure_depth = depth
            self.failure = Unsolvable(path, list(tried), list(violated), list(conflicting))


def _restore(children: dict, saved: dict) -> None:
    children.clear()
    children.update(saved)


def _describe(node: ObjectNode) -> str:
    if isinstance(node, MapObjectNode):
        return node.cls
    if isinstance(node, ListObjectNode):
        return "[" + ", ".join(item.cls for item in node.items) + "]"
    return repr(node.value)


def interpolate(root: MapObjectNode, registry: Registry) -> SolverOutcome:
    return Solver(registry).interpolate(root)


def validate_candidate(candidate: DefaultCandidate, slot: SlotSpec, owner_cls: str,
                       bound: dict[str, Any], registry: Registry) -> Valid | Invalid:
    """Check one candidate against a component whose other slots hold ``bound``.

    ``bound`` maps slot names to the values constraints see (class names for
    component slots). Used to query the registry outside a full solve.
    """
    cls = registry[owner_cls]
    cfg = PartialConfiguration()
    for constraint in cls.constraints:
        cfg.activate(owner_cls, constraint)
    for name, value in bound.items():
        cfg.bind(f"{owner_cls}/{name}", value, "given")
    solver = Solver(registry)
    solver.cfg = cfg
    owner = MapObjectNode(owner_cls, cls.keyword)
    value = solver.materialize(slot, candidate, "default")
    return solver.validate(owner, owner_cls, slot, value, "default", candidate.implied_constraints)
