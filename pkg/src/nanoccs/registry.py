"""Component library: classes, slots, ordered defaults and compatibility constraints.

Every configurable piece of a model is a component class with an ordered
list of slots. A slot is either required (no defaults) or carries defaults in
preference order. Constraints are owned by a class and see only the slots of
one instance of that class, so each component solves its own sub-problem.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Mapping, Union

from .errors import RegistryAuditError
from .syntax import PrimitiveNode, format_expression

PRIMITIVE_KINDS = ("integer", "decimal", "string", "boolean", "predicate")

COMPONENT = "component"
LIST = "list"
PRIMITIVE = "primitive"


class Verdict(enum.Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    UNDECIDED = "undecided"


UNSET = None


@dataclass(frozen=True)
class Constraint:
    """A three-valued predicate over the slots of one component instance.

    ``check`` receives a mapping slot name -> bound value (a class name for
    component slots, a tuple of class names for list slots, the literal for
    primitive slots). Unbound slots are absent from the mapping.
    """

    label: str
    description: str
    slots: tuple[str, ...]
    check: Callable[[Mapping[str, Any]], Verdict] = field(compare=False)

    def evaluate(self, values: Mapping[str, Any]) -> Verdict:
        return self.check(values)

    def __str__(self) -> str:
        return f"{self.label} ({self.description})"


def excludes(label: str, description: str, slot: str, value: Any,
             other_slot: str, forbidden: Any) -> Constraint:
    """``slot == value`` implies ``other_slot != forbidden``."""

    def check(values: Mapping[str, Any]) -> Verdict:
        a = values.get(slot, UNSET)
        b = values.get(other_slot, UNSET)
        if a is not UNSET and a != value:
            return Verdict.SATISFIED
        if b is not UNSET and b != forbidden:
            return Verdict.SATISFIED
        if a is UNSET or b is UNSET:
            return Verdict.UNDECIDED
        return Verdict.VIOLATED

    return Constraint(label, description, (slot, other_slot), check)


def requires_set(label: str, description: str, slot: str, value: Any, other_slot: str) -> Constraint:
    """``slot == value`` implies ``other_slot`` is bound."""

    def check(values: Mapping[str, Any]) -> Verdict:
        a = values.get(slot, UNSET)
        if a is not UNSET and a != value:
            return Verdict.SATISFIED
        if values.get(other_slot, UNSET) is not UNSET:
            return Verdict.SATISFIED
        return Verdict.UNDECIDED

    return Constraint(label, description, (slot, other_slot), check)


@dataclass(frozen=True)
class DefaultCandidate:
    """One entry of a slot's ordered default list.

    For component slots ``produced_class`` names the class and ``preset`` fixes
    some of its own slots. For list slots ``value`` is a tuple of member class
    names. For primitive slots ``value`` is the literal.
    """

    produced_class: str
    value: Any = None
    implied_constraints: tuple[Constraint, ...] = ()
    preset: Mapping[str, Any] = field(default_factory=dict)

    def describe(self) -> str:
        if self.produced_class == "predicate":
            return format_expression(self.value)
        if self.produced_class in PRIMITIVE_KINDS:
            return repr(self.value)
        if self.produced_class == LIST:
            return "[" + ", ".join(self.value) + "]"
        if self.preset:
            return self.produced_class + " " + " ".join(str(v) for v in self.preset.values())
        return self.produced_class


@dataclass(frozen=True)
class SlotSpec:
    name: str
    kind: str  # component | list | primitive
    expected: str  # class name, list member class, or primitive kind
    required: bool = False
    defaults: tuple[DefaultCandidate, ...] = ()
    minimum: Union[int, float, None] = None
    exclusive_minimum: bool = False
    variables: tuple[str, ...] = ()  # names a predicate may mention


@dataclass(frozen=True)
class ComponentClass:
    name: str
    keyword: str | None = None  # identifier used in source; None for abstract classes
    parent: str | None = None
    slots: tuple[SlotSpec, ...] = ()
    constraints: tuple[Constraint, ...] = ()

    def slot(self, name: str) -> SlotSpec:
        for s in self.slots:
            if s.name == name:
                return s
        raise KeyError(name)

    @property
    def slot_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.slots)


class Registry:
    """Immutable set of component classes. Construct, then :meth:`audit`."""

    def __init__(self, classes: list[ComponentClass], root: str):
        self.classes: Mapping[str, ComponentClass] = MappingProxyType({c.name: c for c in classes})
        if len(self.classes) != len(classes):
            raise RegistryAuditError("duplicate class names")
        self.root = root

    def __getitem__(self, name: str) -> ComponentClass:
        return self.classes[name]

    def is_subclass(self, name: str, ancestor: str) -> bool:
        while name is not None:
            if name == ancestor:
                return True
            name = self.classes[name].parent
        return False

    def concrete_subclasses(self, ancestor: str) -> list[ComponentClass]:
        """Keyworded classes deriving from ``ancestor``, in registration order."""
        return [c for c in self.classes.values() if c.keyword is not None and self.is_subclass(c.name, ancestor)]

    def constraints(self) -> list[tuple[str, Constraint]]:
        return [(c.name, k) for c in self.classes.values() for k in c.constraints]

    def audit(self) -> "Registry":
        if self.root not in self.classes:
            raise RegistryAuditError(f"root class {self.root} is not registered")
        for cls in self.classes.values():
            seen = set()
            chain = cls.name
            while chain is not None:
                if chain in seen:
                    raise RegistryAuditError(f"class cycle through {cls.name}")
                seen.add(chain)
                if chain not in self.classes:
                    raise RegistryAuditError(f"{cls.name}: unknown parent {chain}")
                chain = self.classes[chain].parent
        for cls in self.classes.values():
            if len(set(cls.slot_names)) != len(cls.slots):
                raise RegistryAuditError(f"{cls.name}: duplicate slot names")
            for slot in cls.slots:
                self._audit_slot(cls, slot)
            for constraint in cls.constraints:
                for name in constraint.slots:
                    if name not in cls.slot_names:
                        raise RegistryAuditError(f"{cls.name}: constraint {constraint.label} names unknown slot {name}")
        return self

    def _audit_slot(self, cls: ComponentClass, slot: SlotSpec) -> None:
        where = f"{cls.name}.{slot.name}"
        if slot.required == bool(slot.defaults):
            raise RegistryAuditError(f"{where}: required slots have no defaults, optional slots need one")
        if slot.kind == PRIMITIVE:
            if slot.expected not in PRIMITIVE_KINDS:
                raise RegistryAuditError(f"{where}: unknown primitive kind {slot.expected}")
            for d in slot.defaults:
                if d.produced_class != slot.expected:
                    raise RegistryAuditError(f"{where}: default of kind {d.produced_class}")
            return
        if slot.expected not in self.classes:
            raise RegistryAuditError(f"{where}: unregistered class {slot.expected}")
        if not self.concrete_subclasses(slot.expected):
            raise RegistryAuditError(f"{where}: no concrete subclass of {slot.expected}")
        keywords = [c.keyword for c in self.concrete_subclasses(slot.expected)]
        if len(set(keywords)) != len(keywords):
            raise RegistryAuditError(f"{where}: ambiguous keywords under {slot.expected}")
        for d in slot.defaults:
            if (slot.kind == LIST) != (d.produced_class == LIST):
                raise RegistryAuditError(f"{where}: default shape does not match a {slot.kind} slot")
            members = d.value if slot.kind == LIST else (d.produced_class,)
            for name in members:
                if name not in self.classes:
                    raise RegistryAuditError(f"{where}: default names unregistered class {name}")
                if not self.is_subclass(name, slot.expected) or self.classes[name].keyword is None:
                    raise RegistryAuditError(f"{where}: {name} is not a concrete {slot.expected}")
            if slot.kind == COMPONENT:
                target = self.classes[d.produced_class]
                for preset in d.preset:
                    if preset not in target.slot_names:
                        raise RegistryAuditError(f"{where}: preset for unknown slot {preset}")


# seed vocabulary


def _default(produced: str, value: Any = None, **preset: Any) -> DefaultCandidate:
    return DefaultCandidate(produced, value, preset=preset)


def _never() -> PrimitiveNode:
    return PrimitiveNode("boolean", False)


def compatibility_constraints() -> list[Constraint]:
    """Built-in compatibility rules between components."""
    return [
        excludes("C1", "HexagonalArena forbids a Periodic boundary",
                 "arena", "HexagonalArena", "boundary", "Periodic"),
        excludes("C2", "RectangularLattice forbids a HexagonalArena",
                 "geometry", "RectangularLattice", "arena", "HexagonalArena"),
        requires_set("C3", "AllNeighbors needs a bound collision rule",
                     "destination", "AllNeighbors", "collision"),
    ]


def seed_registry() -> Registry:
    c1, c2, c3 = compatibility_constraints()
    lattice_slots = (
        SlotSpec("width", PRIMITIVE, "integer", defaults=(_default("integer", 32),), minimum=1),
        SlotSpec("height", PRIMITIVE, "integer", defaults=(_default("integer", 32),), minimum=1),
    )
    classes = [
        ComponentClass("Project", slots=(
            SlotSpec("geometry", COMPONENT, "Geometry", defaults=(
                _default("RectangularLattice", width=32, height=32),
                _default("HexagonalLattice"),
                _default("TriangularLattice"),
            )),
            SlotSpec("boundary", COMPONENT, "Boundary", defaults=(_default("Absorbing"), _default("Periodic"))),
            SlotSpec("arena", COMPONENT, "ArenaShape",
                     defaults=(_default("RectangularArena"), _default("HexagonalArena"))),
            SlotSpec("initially", LIST, "SetupAction", defaults=(_default(LIST, ()),)),
            SlotSpec("output", LIST, "OutputSink", defaults=(_default(LIST, ("ImageSequence",)),)),
            SlotSpec("terminate", PRIMITIVE, "predicate", defaults=(_default("predicate", _never()),),
                     variables=("time", "agents")),
        ), constraints=(c1, c2)),
        ComponentClass("Geometry"),
        ComponentClass("RectangularLattice", "rectangular", "Geometry", lattice_slots),
        ComponentClass("HexagonalLattice", "hexagonal", "Geometry", lattice_slots),
        ComponentClass("TriangularLattice", "triangular", "Geometry", lattice_slots),
        ComponentClass("Boundary"),
        ComponentClass("Absorbing", "absorbing", "Boundary"),
        ComponentClass("Periodic", "periodic", "Boundary"),
        ComponentClass("ArenaShape"),
        ComponentClass("RectangularArena", "rectangular", "ArenaShape"),
        ComponentClass("HexagonalArena", "hexagonal", "ArenaShape"),
        ComponentClass("OutputSink"),
        ComponentClass("ImageSequence", "image_sequence", "OutputSink"),
        ComponentClass("SetupAction"),
        ComponentClass("Scatter", "scatter", "SetupAction", (
            SlotSpec("count", PRIMITIVE, "integer", defaults=(_default("integer", 1),), minimum=0),
            SlotSpec("description", COMPONENT, "AgentDescriptor", required=True),
        )),
        ComponentClass("AgentDescriptor", "Agent", slots=(
            SlotSpec("do", LIST, "Behavior", defaults=(_default(LIST, ()),)),
        )),
        ComponentClass("Behavior", "Behavior", slots=(
            SlotSpec("action", COMPONENT, "BehaviorAction", required=True),
            SlotSpec("every", PRIMITIVE, "decimal", defaults=(_default("decimal", 1.0),),
                     minimum=0, exclusive_minimum=True),
            SlotSpec("until", PRIMITIVE, "predicate", defaults=(_default("predicate", _never()),),
                     variables=("time",)),
        )),
        ComponentClass("BehaviorAction"),
        ComponentClass("Wander", "wander", "BehaviorAction", (
            SlotSpec("destination", COMPONENT, "DestinationRule",
                     defaults=(_default("VacantNeighbors"), _default("AllNeighbors"))),
            SlotSpec("collision", COMPONENT, "CollisionRule",
                     defaults=(_default("IgnoreOccupied"), _default("ErrorOnCollision"))),
        ), constraints=(c3,)),
        ComponentClass("DestinationRule"),
        ComponentClass("VacantNeighbors", "vacant_neighbors", "DestinationRule"),
        ComponentClass("AllNeighbors", "all_neighbors", "DestinationRule"),
        ComponentClass("CollisionRule"),
        ComponentClass("IgnoreOccupied", "ignore_occupied", "CollisionRule"),
        ComponentClass("ErrorOnCollision", "error_on_collision", "CollisionRule"),
    ]
    return Registry(classes, root="Project").audit()


# symbol tables


@dataclass
class ResolvingSymbolTable:
    """Narrows an identifier to the table of a concrete subclass of ``expected``."""

    expected: str
    members: dict[str, "MapIST"] = field(default_factory=dict)


@dataclass
class MapIST:
    produced_class: str
    slots: dict[str, tuple["SlotTable", bool]] = field(default_factory=dict)


@dataclass
class ListIST:
    member_class: str
    member_rst: ResolvingSymbolTable


@dataclass
class PrimitiveInstantiator:
    kind: str
    minimum: Union[int, float, None] = None
    exclusive_minimum: bool = False
    variables: tuple[str, ...] = ()

    @property
    def produced_class(self) -> str:
        return self.kind


InstantiableSymbolTable = Union[MapIST, ListIST, PrimitiveInstantiator]
SlotTable = Union[ResolvingSymbolTable, ListIST, PrimitiveInstantiator]


def build_symbol_tables(registry: Registry) -> MapIST:
    """Materialise the RST/IST graph reachable from the registry root."""
    registry.audit()
    mists: dict[str, MapIST] = {}
    rsts: dict[str, ResolvingSymbolTable] = {}

    def rst_for(expected: str) -> ResolvingSymbolTable:
        if expected not in rsts:
            rst = rsts[expected] = ResolvingSymbolTable(expected)
            for sub in registry.concrete_subclasses(expected):
                rst.members[sub.keyword] = mist_for(sub.name)
        return rsts[expected]

    def mist_for(name: str) -> MapIST:
        if name in mists:
            return mists[name]
        mist = mists[name] = MapIST(name)
        for slot in registry[name].slots:
            if slot.kind == PRIMITIVE:
                table: SlotTable = PrimitiveInstantiator(slot.expected, slot.minimum,
                                                               slot.exclusive_minimum, slot.variables)
            elif slot.kind == LIST:
                table = ListIST(slot.expected, rst_for(slot.expected))
            else:
                table = rst_for(slot.expected)
            mist.slots[slot.name] = (table, slot.required)
        return mist

    return mist_for(registry.root)


def describe(registry: Registry) -> dict:
    """JSON-ready dump of classes, slots, defaults and constraints."""
    out = {"root": registry.root, "classes": [], "constraints": []}
    for cls in registry.classes.values():
        out["classes"].append({
            "name": cls.name,
            "keyword": cls.keyword,
            "parent": cls.parent,
            "slots": [{
                "name": s.name,
                "kind": s.kind,
                "expected": s.expected,
                "required": s.required,
                "defaults": [d.describe() for d in s.defaults],
            } for s in cls.slots],
        })
    for owner, constraint in registry.constraints():
        out["constraints"].append({"owner": owner, "label": constraint.label,
                                   "description": constraint.description})
    return out
