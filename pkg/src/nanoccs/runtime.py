"""Discrete-event runtime: schedule, lattice layer, agents and the world loop.

Agents never touch the world directly. Everything an agent does goes
through a :class:`Locale`, which exposes its own position, the neighboring
sites, and a way to schedule follow-up events relative to the current time.
"""

from __future__ import annotations

import functools
import heapq
import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import CollisionError, ScatterOverflow
from .output import ImageSequence, RunSummary
from .semantics import ListObjectNode, MapObjectNode, PrimitiveObjectNode, evaluate_predicate

log = logging.getLogger(__name__)

Coord = tuple[int, int]

# Same-time events run phase by phase, FIFO within a phase: initial-condition
# setup, then frame capture (so a frame shows the state as the unit begins),
# then everything else.
SETUP, OBSERVE, ACT = 0, 1, 2

_MASK64 = (1 << 64) - 1


class Rng:
    """Seeded PCG64 stream (numpy) with exact bounded integers.

    Bounded draws use Lemire's multiply-shift method with rejection, so the
    stream of choices depends only on the raw 64-bit PCG64 output for the
    seed, not on numpy's own sampling routines.
    """

    ALGORITHM = "pcg64-seedsequence/lemire"
    _BATCH = 1024

    def __init__(self, seed: int | np.random.SeedSequence = 0):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(int(seed) & _MASK64)
        self._bits = np.random.PCG64(self._seq)
        self._buffer: list[int] = []

    def next64(self) -> int:
        if not self._buffer:
            self._buffer = self._bits.random_raw(self._BATCH).tolist()
            self._buffer.reverse()
        return self._buffer.pop()

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError("below() needs a positive bound")
        m = self.next64() * n
        low = m & _MASK64
        if low < n:
            threshold = (-n & _MASK64) % n
            while low < threshold:
                m = self.next64() * n
                low = m & _MASK64
        return m >> 64

    def spawn(self) -> "Rng":
        """Independent child stream."""
        return Rng(self._seq.spawn(1)[0])


@dataclass(eq=False)
class Event:
    time: float
    phase: int
    seq: int
    action: Callable[["Event"], None]
    daemon: bool = False
    cancelled: bool = False
    label: str = ""


class Schedule:
    """Priority queue of events keyed by (time, phase, insertion order).

    Daemon events (such as the frame observer) never keep a run alive on
    their own; :attr:`foreground` counts the live non-daemon events.
    """

    def __init__(self) -> None:
        self._heap: list[tuple[float, int, int, Event]] = []
        self._seq = itertools.count()
        self.clock = 0.0
        self.foreground = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, delay: float, action: Callable[[Event], None], *, phase: int = ACT,
                 daemon: bool = False, label: str = "") -> Event:
        if delay < 0:
            raise ValueError(f"cannot schedule into the past (delay {delay})")
        return self.schedule_at(self.clock + delay, action, phase=phase, daemon=daemon, label=label)

    def schedule_at(self, time: float, action: Callable[[Event], None], *, phase: int = ACT,
                    daemon: bool = False, label: str = "") -> Event:
        if time < self.clock:
            raise ValueError(f"event at {time} precedes the clock {self.clock}")
        event = Event(time, phase, next(self._seq), action, daemon, label=label)
        heapq.heappush(self._heap, (time, phase, event.seq, event))
        if not daemon:
            self.foreground += 1
        return event

    def cancel(self, event: Event) -> None:
        if not event.cancelled:
            event.cancelled = True
            if not event.daemon:
                self.foreground -= 1

    def peek(self) -> Event | None:
        while self._heap and self._heap[0][3].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0][3] if self._heap else None

    def pop(self) -> Event | None:
        """Remove the next event and advance the clock to its time."""
        event = self.peek()
        if event is None:
            return None
        heapq.heappop(self._heap)
        if not event.daemon:
            self.foreground -= 1
        event.cancelled = True  # fired events can no longer be cancelled
        self.clock = event.time
        return event

    def clear(self) -> None:
        self._heap.clear()
        self.foreground = 0


# lattice topology

_OFFSETS = {
    "RectangularLattice": ((0, -1), (1, 0), (0, 1), (-1, 0)),
    # axial coordinates
    "HexagonalLattice": ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)),
}


@functools.lru_cache(maxsize=32)
def _arena_sites(lattice: str, width: int, height: int, arena: str) -> tuple[Coord, ...]:
    shape = _ArenaShape(width, height, arena)
    return tuple((x, y) for y in range(height) for x in range(width) if shape.contains((x, y)))


class _ArenaShape:
    def __init__(self, width: int, height: int, arena: str):
        self.width, self.height, self.arena = width, height, arena
        self.cx, self.cy = width // 2, height // 2
        self.radius = (min(width, height) - 1) // 2

    def contains(self, c: Coord) -> bool:
        x, y = c
        if not (0 <= x < self.width and 0 <= y < self.height):
            return False
        if self.arena == "HexagonalArena":
            dq, dr = x - self.cx, y - self.cy
            return max(abs(dq), abs(dr), abs(dq + dr)) <= self.radius
        return True


class Layer:
    """Occupancy of one agent layer over a lattice, arena and boundary rule.

    Occupancy is a bijection between agent ids and in-arena coordinates.
    """

    def __init__(self, lattice: str, width: int, height: int, arena: str, boundary: str):
        self.lattice = lattice
        self.width = width
        self.height = height
        self.arena = arena
        self.boundary = boundary
        self._shape = _ArenaShape(width, height, arena)
        self.occupancy: dict[Coord, int] = {}
        self.positions: dict[int, Coord] = {}
        self.listeners: list[Callable[[int, Coord | None, Coord | None], None]] = []

    def in_arena(self, c: Coord) -> bool:
        return self._shape.contains(c)

    def sites(self) -> tuple[Coord, ...]:
        return _arena_sites(self.lattice, self.width, self.height, self.arena)

    def neighbors(self, c: Coord) -> list[Coord]:
        """Lattice neighbors of ``c``; wrapped under a periodic boundary, otherwise
        possibly outside the arena."""
        x, y = c
        if self.lattice == "TriangularLattice":
            offsets = ((1, 0), (-1, 0), (0, 1) if (x + y) % 2 == 0 else (0, -1))
        else:
            offsets = _OFFSETS[self.lattice]
        out = [(x + dx, y + dy) for dx, dy in offsets]
        if self.boundary == "Periodic":
            w, h = self.width, self.height
            out = [(nx % w, ny % h) for nx, ny in out]
        return out

    def vacant_sites(self) -> list[Coord]:
        occ = self.occupancy
        return [c for c in self.sites() if c not in occ]

    def is_vacant(self, c: Coord) -> bool:
        return c not in self.occupancy

    def place(self, agent_id: int, c: Coord) -> None:
        if not self.in_arena(c):
            raise ValueError(f"{c} is outside the arena")
        if c in self.occupancy:
            raise ValueError(f"{c} is already occupied")
        self.occupancy[c] = agent_id
        self.positions[agent_id] = c
        self._notify(agent_id, None, c)

    def move(self, agent_id: int, c: Coord) -> None:
        src = self.positions[agent_id]
        if c in self.occupancy:
            raise ValueError(f"{c} is already occupied")
        del self.occupancy[src]
        self.occupancy[c] = agent_id
        self.positions[agent_id] = c
        self._notify(agent_id, src, c)

    def remove(self, agent_id: int) -> None:
        src = self.positions.pop(agent_id)
        del self.occupancy[src]
        self._notify(agent_id, src, None)

    def _notify(self, agent_id: int, src: Coord | None, dst: Coord | None) -> None:
        for listener in self.listeners:
            listener(agent_id, src, dst)


# agents

NEIGHBORHOOD_CHANGED = "neighborhood_changed"


@dataclass(eq=False)
class Agent:
    id: int
    class_index: int
    behaviors: dict[str, Callable[["Locale"], None]] = field(default_factory=dict)
    rules: dict[str, str] = field(default_factory=dict)  # condition -> behavior name
    alive: bool = True


class Locale:
    """An agent's only window on the world: its site, its neighbors, and the clock-relative scheduler."""

    def __init__(self, world: "World", agent: Agent):
        self._world = world
        self._agent = agent

    @property
    def rng(self) -> Rng:
        return self._world.rng

    @property
    def now(self) -> float:
        return self._world.schedule.clock

    @property
    def position(self) -> Coord:
        return self._world.layer.positions[self._agent.id]

    def neighbors(self) -> list[Coord]:
        return self._world.layer.neighbors(self.position)

    def in_arena(self, c: Coord) -> bool:
        return self._world.layer.in_arena(c)

    def is_vacant(self, c: Coord) -> bool:
        return self._world.layer.is_vacant(c)

    def move_to(self, c: Coord) -> None:
        self._world.layer.move(self._agent.id, c)

    def absorb(self) -> None:
        self._world.absorb(self._agent)

    def schedule(self, delay: float, callback: Callable[[Event], None], label: str = "") -> Event:
        event = self._world.schedule.schedule(delay, callback, label=label)
        self._world.track(self._agent, event)
        return event


def wander(locale: Locale, destination: str, collision: str, boundary: str) -> None:
    """Move to a uniformly chosen neighbor.

    ``VacantNeighbors`` only offers empty sites; ``AllNeighbors`` offers every
    neighbor and lets ``collision`` decide what happens on an occupied one.
    Off-arena neighbors are offered under an absorbing boundary, and choosing
    one removes the agent.
    """
    here = locale.position
    candidates = []
    for c in locale.neighbors():
        if not locale.in_arena(c):
            if boundary == "Absorbing":
                candidates.append(c)
            continue
        if destination == "VacantNeighbors" and not locale.is_vacant(c):
            continue
        candidates.append(c)
    if not candidates:
        return
    target = candidates[locale.rng.below(len(candidates))]
    if not locale.in_arena(target):
        locale.absorb()
    elif not locale.is_vacant(target):
        if collision == "ErrorOnCollision":
            raise CollisionError(locale.now, here, target)
        # IgnoreOccupied: the move is skipped
    else:
        locale.move_to(target)


ACTIONS: dict[str, Callable[..., None]] = {"Wander": wander}


# build pass


@dataclass
class Component:
    """A built runtime component: class name plus resolved slot values."""

    cls: str
    params: dict[str, Any] = field(default_factory=dict)
    index: int = 0


def build_components(root: MapObjectNode) -> Component:
    """Breadth-first instantiation of a solved tree.

    Each node is built when visited and attaches itself to its (already
    built) parent, so parents exist before children are linked in.
    """
    top = Component(root.cls)
    queue: deque[tuple[Any, Component, str, bool]] = deque()
    for name, child in root.children.items():
        queue.append((child, top, name, False))
    counters: dict[str, int] = {}
    while queue:
        node, parent, slot, in_list = queue.popleft()
        if isinstance(node, MapObjectNode):
            counters[node.cls] = counters.get(node.cls, 0) + 1
            built: Any = Component(node.cls, index=counters[node.cls])
            for name, child in node.children.items():
                queue.append((child, built, name, False))
        elif isinstance(node, ListObjectNode):
            built = []
            for item in node.items:
                queue.append((item, parent, slot, True))
        else:
            assert isinstance(node, PrimitiveObjectNode)
            built = node.value
        if in_list:
            parent.params[slot].append(built)
        else:
            parent.params[slot] = built
    return top


def audit_components(component: Component, registry) -> None:
    """Every declared slot of every built component must hold a value."""
    for slot in registry[component.cls].slots:
        if slot.name not in component.params:
            raise AssertionError(f"{component.cls}.{slot.name} was never bound")
        value = component.params[slot.name]
        for item in value if isinstance(value, list) else [value]:
            if isinstance(item, Component):
                audit_components(item, registry)


# the world


@dataclass(frozen=True)
class StepResult:
    kind: str  # advanced | depleted | terminated
    clock: float
    reason: str = ""


@dataclass
class BehaviorSpec:
    name: str
    action: str
    action_params: dict[str, str]
    every: float
    until: Any


@dataclass
class AgentPrototype:
    class_index: int
    behaviors: list[BehaviorSpec]


class World:
    """A runnable simulation built from a solved configuration."""

    def __init__(self, project: Component, seed: int = 0, out_dir=None):
        params = project.params
        geometry = params["geometry"]
        self.layer = Layer(geometry.cls, geometry.params["width"], geometry.params["height"],
                           params["arena"].cls, params["boundary"].cls)
        self.schedule = Schedule()
        self.rng = Rng(seed)
        self.seed = seed
        self.terminate = params["terminate"]
        self.agents: dict[int, Agent] = {}
        self.agents_created = 0
        self.agents_absorbed = 0
        self.events_executed = 0
        self.agent_classes = 0
        self.behavior_log: list[Callable[[Agent, str, float], None]] = []
        self._pending: dict[int, set[Event]] = {}
        self._locales: dict[int, Locale] = {}
        self._ids = itertools.count(1)
        self._rule_agents = 0
        self.layer.listeners.append(self._on_layer_change)

        self.sinks = []
        for sink in params["output"]:
            if sink.cls == "ImageSequence":
                self.sinks.append(ImageSequence(self, out_dir, phase=OBSERVE))
        for action in params["initially"]:
            if action.cls == "Scatter":
                proto = self._prototype(action.params["description"])
                count = action.params["count"]
                self.schedule.schedule(0.0, lambda e, c=count, p=proto: run_scatter(self, c, p),
                                       phase=SETUP, label="scatter")
        for sink in self.sinks:
            sink.start()

    def _prototype(self, descriptor: Component) -> AgentPrototype:
        self.agent_classes = max(self.agent_classes, descriptor.index)
        behaviors = []
        for i, behavior in enumerate(descriptor.params["do"]):
            action = behavior.params["action"]
            action_params = {k: v.cls for k, v in action.params.items()}
            behaviors.append(BehaviorSpec(f"{action.cls.lower()}{i}", action.cls, action_params,
                                          behavior.params["every"], behavior.params["until"]))
        return AgentPrototype(descriptor.index, behaviors)

    # agent lifecycle

    def create_agent(self, proto: AgentPrototype, site: Coord) -> Agent:
        agent = Agent(next(self._ids), proto.class_index)
        self.agents[agent.id] = agent
        self.agents_created += 1
        self._pending[agent.id] = set()
        locale = self._locales[agent.id] = Locale(self, agent)
        self.layer.place(agent.id, site)
        for spec in proto.behaviors:
            agent.behaviors[spec.name] = self._behavior(agent, spec)
        # on construction each behavior schedules its first firing one interval later
        for spec in proto.behaviors:
            schedule_behavior(self, agent, locale, spec)
        return agent

    def _behavior(self, agent: Agent, spec: BehaviorSpec) -> Callable[[Locale], None]:
        fn = ACTIONS[spec.action]
        boundary = self.layer.boundary
        params = spec.action_params
        if spec.action == "Wander":
            return lambda locale: fn(locale, params["destination"], params["collision"], boundary)
        return lambda locale: fn(locale, **params)

    def set_rule(self, agent: Agent, condition: str, behavior: str) -> None:
        if not agent.rules:
            self._rule_agents += 1
        agent.rules[condition] = behavior

    def track(self, agent: Agent, event: Event) -> None:
        pending = self._pending[agent.id]
        pending.add(event)
        action = event.action

        def run(e: Event) -> None:
            pending.discard(e)
            action(e)

        event.action = run

    def absorb(self, agent: Agent) -> None:
        agent.alive = False
        for event in self._pending.pop(agent.id, ()):
            self.schedule.cancel(event)
        self.layer.remove(agent.id)
        del self.agents[agent.id]
        del self._locales[agent.id]
        self.agents_absorbed += 1

    def _on_layer_change(self, agent_id: int, src: Coord | None, dst: Coord | None) -> None:
        if not self._rule_agents:
            return
        affected = set()
        for c in (src, dst):
            if c is None:
                continue
            for n in self.layer.neighbors(c):
                other = self.layer.occupancy.get(n)
                if other is not None and other != agent_id:
                    affected.add(other)
        for other in sorted(affected):
            agent = self.agents[other]
            trigger = agent.rules.get(NEIGHBORHOOD_CHANGED)
            if trigger is not None:
                locale = self._locales[other]
                behavior = agent.behaviors[trigger]
                # immediate event: current clock, after already-queued same-time events
                locale.schedule(0.0, lambda e, b=behavior, l=locale: b(l), label=trigger)

    # integration

    def step(self, max_time: float = float("inf")) -> StepResult:
        schedule = self.schedule
        event = schedule.peek()
        if event is None:
            return StepResult("depleted", schedule.clock)
        if schedule.foreground == 0 and event.time > schedule.clock:
            schedule.clear()
            return StepResult("depleted", schedule.clock)
        if event.time > max_time:
            return StepResult("terminated", schedule.clock, "max-time")
        schedule.pop()
        event.action(event)
        self.events_executed += 1
        if evaluate_predicate(self.terminate, {"time": schedule.clock, "agents": len(self.agents)}):
            schedule.clear()
            return StepResult("terminated", schedule.clock, "terminate condition")
        return StepResult("advanced", schedule.clock)

    def run(self, max_time: float = float("inf")) -> StepResult:
        last_time = -1.0
        while True:
            result = self.step(max_time)
            if result.kind != "advanced":
                log.debug("run ended: %s at t=%g", result.kind, result.clock)
                return result
            assert result.clock >= last_time, "event times must not decrease"
            last_time = result.clock

    def summary(self) -> RunSummary:
        return RunSummary(self.schedule.clock, self.events_executed, len(self.agents), self.agents_absorbed)


def schedule_behavior(world: World, agent: Agent, locale: Locale, spec: BehaviorSpec) -> None:
    """Fire ``spec`` every ``spec.every`` time units until its predicate holds.

    The predicate is checked at fire time, before acting; once it holds the
    behavior neither acts nor reschedules.
    """
    behavior = agent.behaviors[spec.name]
    until = spec.until

    def fire(event: Event) -> None:
        t = event.time
        if evaluate_predicate(until, {"time": t}):
            return
        for hook in world.behavior_log:
            hook(agent, spec.name, t)
        behavior(locale)
        if agent.alive:
            locale.schedule(spec.every, fire, label=spec.name)

    locale.schedule(spec.every, fire, label=spec.name)


def run_scatter(world: World, count: int, proto: AgentPrototype) -> list[int]:
    """Place ``count`` agents on distinct, uniformly chosen vacant sites."""
    vacant = world.layer.vacant_sites()
    n = len(vacant)
    if count > n:
        raise ScatterOverflow(f"cannot scatter {count} agents onto {n} vacant sites")
    rng = world.rng
    for i in range(count):  # partial Fisher-Yates
        j = i + rng.below(n - i)
        vacant[i], vacant[j] = vacant[j], vacant[i]
    return [world.create_agent(proto, site).id for site in vacant[:count]]


def instantiate(solved: MapObjectNode, seed: int = 0, out_dir=None, registry=None) -> World:
    project = build_components(solved)
    if registry is not None:
        audit_components(project, registry)
    return World(project, seed, out_dir)
