"""Deterministic crafting gridworld.

A small 2-D world with resource nodes, per-agent inventories, ground piles,
crafting stations, and a recipe table. Primitive actions mutate state through
a single transition function; a built-in planner (breadth-first pathing plus
greedy gather/craft ordering) turns parsed sub-goals into action sequences,
retrying each sub-goal up to a fixed attempt cap.
"""

from __future__ import annotations

import copy
import math
import re
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from ..errors import ConfigurationError, ParseError, ValidationError

ATTEMPT_CAP_DEFAULT = 5
STATION_ITEM = "crafting_table"

# y grows downward; north is up.
DIRECTIONS = {"north": (0, -1), "south": (0, 1), "west": (-1, 0), "east": (1, 0)}
_NEIGHBOR_ORDER = ("north", "south", "west", "east")

ActionCallback = Callable[[str, dict, bool, str], None]  # (agent, action, ok, reason)


@dataclass
class Recipe:
    inputs: dict[str, int]
    output: int = 1
    station: str | None = None


DEFAULT_RECIPES: dict[str, Recipe] = {
    "paper": Recipe(inputs={"sugar_cane": 3}, output=3, station=STATION_ITEM),
    "book": Recipe(inputs={"paper": 3, "leather": 1}, output=1, station=STATION_ITEM),
    "bookshelf": Recipe(inputs={"plank": 6, "book": 3}, output=1, station=STATION_ITEM),
    "plank": Recipe(inputs={"log": 1}, output=4),
    "crafting_table": Recipe(inputs={"plank": 4}, output=1),
}


@dataclass
class ResourceNode:
    item: str
    stock: int


@dataclass
class AgentState:
    pos: tuple[int, int]
    inventory: Counter = field(default_factory=Counter)


@dataclass
class ActionResult:
    ok: bool
    reason: str = ""


class CraftingWorld:
    def __init__(
        self,
        width: int,
        height: int,
        recipes: dict[str, Recipe] | None = None,
    ):
        if width < 1 or height < 1:
            raise ConfigurationError("world dimensions must be positive")
        self.width = width
        self.height = height
        self.walls: set[tuple[int, int]] = set()
        self.nodes: dict[tuple[int, int], ResourceNode] = {}
        self.ground: dict[tuple[int, int], Counter] = {}
        self.stations: set[tuple[int, int]] = set()
        self.agents: dict[str, AgentState] = {}
        self.recipes: dict[str, Recipe] = dict(recipes) if recipes is not None else dict(DEFAULT_RECIPES)
        self.action_log: list[dict[str, Any]] = []

    # -- construction helpers -------------------------------------------------

    def add_agent(self, name: str, pos: tuple[int, int]) -> None:
        if name in self.agents:
            raise ConfigurationError(f"duplicate agent: {name}")
        self._check_cell(pos)
        self.agents[name] = AgentState(pos=pos)

    def add_node(self, pos: tuple[int, int], item: str, stock: int) -> None:
        self._check_cell(pos)
        if pos in self.nodes:
            raise ConfigurationError(f"cell {pos} already has a node")
        if stock < 0:
            raise ConfigurationError("node stock must be >= 0")
        self.nodes[pos] = ResourceNode(item=item, stock=stock)

    def add_station(self, pos: tuple[int, int]) -> None:
        self._check_cell(pos)
        self.stations.add(pos)

    def add_wall(self, pos: tuple[int, int]) -> None:
        self._check_cell(pos, allow_wall=True)
        self.walls.add(pos)

    def _check_cell(self, pos: tuple[int, int], allow_wall: bool = False) -> None:
        x, y = pos
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise ConfigurationError(f"cell {pos} out of bounds")
        if not allow_wall and pos in self.walls:
            raise ConfigurationError(f"cell {pos} is a wall")

    # -- queries ---------------------------------------------------------------

    def passable(self, pos: tuple[int, int]) -> bool:
        x, y = pos
        return 0 <= x < self.width and 0 <= y < self.height and pos not in self.walls

    def known_items(self) -> set[str]:
        items = set(self.recipes)
        for recipe in self.recipes.values():
            items.update(recipe.inputs)
        items.update(node.item for node in self.nodes.values())
        for pile in self.ground.values():
            items.update(pile)
        return items

    def total_items(self) -> Counter:
        """Every unit currently in the world: node stock, inventories, ground."""
        totals: Counter = Counter()
        for node in self.nodes.values():
            totals[node.item] += node.stock
        for agent in self.agents.values():
            totals.update(agent.inventory)
        for pile in self.ground.values():
            totals.update(pile)
        return +totals

    def station_reachable_cells(self) -> set[tuple[int, int]]:
        """Cells from which crafting at some station is allowed."""
        cells: set[tuple[int, int]] = set()
        for pos in self.stations:
            cells.add(pos)
            for dx, dy in DIRECTIONS.values():
                neighbor = (pos[0] + dx, pos[1] + dy)
                if self.passable(neighbor):
                    cells.add(neighbor)
        return cells

    def at_station(self, pos: tuple[int, int]) -> bool:
        return pos in self.station_reachable_cells()

    def observation(self) -> str:
        lines = []
        for name in sorted(self.agents):
            agent = self.agents[name]
            inv = dict(sorted((+agent.inventory).items()))
            lines.append(f"{name} at {agent.pos}: inventory {inv or '{}'}")
        for pos in sorted(self.nodes):
            node = self.nodes[pos]
            lines.append(f"node {node.item} at {pos}: stock {node.stock}")
        for pos in sorted(self.ground):
            pile = dict(sorted((+self.ground[pos]).items()))
            if pile:
                lines.append(f"ground at {pos}: {pile}")
        for pos in sorted(self.stations):
            lines.append(f"crafting table at {pos}")
        return "\n".join(lines)

    def clone(self) -> "CraftingWorld":
        return copy.deepcopy(self)


def crafting_step(world: CraftingWorld, agent: str, action: dict[str, Any]) -> ActionResult:
    """Apply one primitive action; rejected actions leave the world unchanged."""
    if agent not in world.agents:
        result = ActionResult(False, f"unknown agent {agent!r}")
    else:
        handler = _HANDLERS.get(action.get("type", ""))
        if handler is None:
            result = ActionResult(False, f"unknown action type {action.get('type')!r}")
        else:
            result = handler(world, world.agents[agent], action)
    world.action_log.append(
        {"agent": agent, "action": dict(action), "ok": result.ok, "reason": result.reason}
    )
    return result


def _do_move(world: CraftingWorld, state: AgentState, action: dict) -> ActionResult:
    direction = action.get("direction")
    if direction not in DIRECTIONS:
        return ActionResult(False, f"bad direction {direction!r}")
    dx, dy = DIRECTIONS[direction]
    target = (state.pos[0] + dx, state.pos[1] + dy)
    if not world.passable(target):
        return ActionResult(False, f"cell {target} is blocked")
    state.pos = target
    return ActionResult(True)


def _do_gather(world: CraftingWorld, state: AgentState, action: dict) -> ActionResult:
    node = world.nodes.get(state.pos)
    if node is None:
        return ActionResult(False, f"no resource node at {state.pos}")
    wanted = action.get("item")
    if wanted is not None and wanted != node.item:
        return ActionResult(False, f"node holds {node.item}, not {wanted}")
    if node.stock <= 0:
        return ActionResult(False, f"node {node.item} at {state.pos} is exhausted")
    node.stock -= 1
    state.inventory[node.item] += 1
    return ActionResult(True)


def _do_craft(world: CraftingWorld, state: AgentState, action: dict) -> ActionResult:
    item = action.get("item", "")
    recipe = world.recipes.get(item)
    if recipe is None:
        return ActionResult(False, f"no recipe for {item!r}")
    if recipe.station and not world.at_station(state.pos):
        return ActionResult(False, f"crafting {item} requires a {recipe.station} nearby")
    for needed_item, count in recipe.inputs.items():
        if state.inventory[needed_item] < count:
            return ActionResult(
                False,
                f"missing inputs for {item}: need {count} {needed_item}, "
                f"have {state.inventory[needed_item]}",
            )
    for needed_item, count in recipe.inputs.items():
        state.inventory[needed_item] -= count
    state.inventory[item] += recipe.output
    state.inventory += Counter()  # drop zero entries
    return ActionResult(True)


def _do_drop(world: CraftingWorld, state: AgentState, action: dict) -> ActionResult:
    item = action.get("item", "")
    count = int(action.get("count", 1))
    if count < 1:
        return ActionResult(False, "drop count must be >= 1")
    if state.inventory[item] < count:
        return ActionResult(False, f"cannot drop {count} {item}: have {state.inventory[item]}")
    state.inventory[item] -= count
    state.inventory += Counter()
    pile = world.ground.setdefault(state.pos, Counter())
    pile[item] += count
    return ActionResult(True)


def _do_pickup(world: CraftingWorld, state: AgentState, action: dict) -> ActionResult:
    item = action.get("item", "")
    count = int(action.get("count", 1))
    if count < 1:
        return ActionResult(False, "pickup count must be >= 1")
    pile = world.ground.get(state.pos)
    if pile is None or pile[item] < count:
        have = pile[item] if pile else 0
        return ActionResult(False, f"cannot pick up {count} {item}: cell has {have}")
    pile[item] -= count
    if pile[item] == 0:
        del pile[item]
    if not pile:
        del world.ground[state.pos]
    state.inventory[item] += count
    return ActionResult(True)


def _do_place_station(world: CraftingWorld, state: AgentState, action: dict) -> ActionResult:
    if state.inventory[STATION_ITEM] < 1:
        return ActionResult(False, f"no {STATION_ITEM} in inventory")
    if state.pos in world.stations:
        return ActionResult(False, f"cell {state.pos} already has a station")
    state.inventory[STATION_ITEM] -= 1
    state.inventory += Counter()
    world.stations.add(state.pos)
    return ActionResult(True)


_HANDLERS = {
    "move": _do_move,
    "gather": _do_gather,
    "craft": _do_craft,
    "drop": _do_drop,
    "pickup": _do_pickup,
    "place_station": _do_place_station,
}


# -- pathing -------------------------------------------------------------------


def bfs_path(
    world: CraftingWorld, start: tuple[int, int], targets: set[tuple[int, int]]
) -> list[str] | None:
    """Shortest move sequence from start to any target cell, or None.

    Neighbor expansion order is fixed, so paths are deterministic.
    """
    if start in targets:
        return []
    seen = {start}
    queue: deque[tuple[tuple[int, int], list[str]]] = deque([(start, [])])
    while queue:
        pos, path = queue.popleft()
        for direction in _NEIGHBOR_ORDER:
            dx, dy = DIRECTIONS[direction]
            neighbor = (pos[0] + dx, pos[1] + dy)
            if neighbor in seen or not world.passable(neighbor):
                continue
            if neighbor in targets:
                return path + [direction]
            seen.add(neighbor)
            queue.append((neighbor, path + [direction]))
    return None


# -- sub-goal grammar ------------------------------------------------------------

_GATHER = re.compile(r"^gather\s+(\d+)\s+([\w]+)$")
_CRAFT = re.compile(r"^craft\s+(\d+)\s+([\w]+)$")
_DELIVER = re.compile(r"^deliver\s+(\d+)\s+([\w]+)\s+to\s+([\w-]+)$")


@dataclass
class SubGoal:
    kind: str  # gather | craft | deliver
    count: int
    item: str
    recipient: str | None = None
    text: str = ""


@dataclass
class SubTaskResult:
    text: str
    completed: bool
    attempts: int
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "completed": self.completed,
            "attempts": self.attempts,
            "reason": self.reason,
        }


def parse_subgoals(text: str, world: CraftingWorld) -> list[SubGoal]:
    """Parse an assignment into sub-goals.

    Grammar (segments split on ';'): "gather N ITEM", "craft N ITEM",
    "deliver N ITEM to AGENT".
    """
    goals: list[SubGoal] = []
    known = world.known_items()
    for segment in text.split(";"):
        segment = segment.strip().rstrip(".").strip()
        if not segment:
            continue
        lowered = segment.lower()
        if m := _GATHER.match(lowered):
            kind, count, item, recipient = "gather", int(m.group(1)), m.group(2), None
        elif m := _CRAFT.match(lowered):
            kind, count, item, recipient = "craft", int(m.group(1)), m.group(2), None
        elif m := _DELIVER.match(lowered):
            kind, count, item = "deliver", int(m.group(1)), m.group(2)
            recipient = _match_agent(m.group(3), world)
            if recipient is None:
                raise ParseError(f"unknown recipient in {segment!r}", raw=text)
        else:
            raise ParseError(f"unparsable sub-goal: {segment!r}", raw=text)
        if item not in known:
            raise ParseError(f"unknown item {item!r}", raw=text)
        if kind == "craft" and item not in world.recipes:
            raise ParseError(f"no recipe for {item!r}", raw=text)
        if count < 1:
            raise ParseError(f"count must be >= 1 in {segment!r}", raw=text)
        goals.append(SubGoal(kind=kind, count=count, item=item, recipient=recipient, text=segment))
    if not goals:
        raise ParseError("assignment contains no sub-goals", raw=text)
    return goals


def _match_agent(name: str, world: CraftingWorld) -> str | None:
    for agent in world.agents:
        if agent.lower() == name.lower():
            return agent
    return None


# -- planner + executor -----------------------------------------------------------


@dataclass
class _Plan:
    actions: list[dict[str, Any]]


class _AgentDriver:
    """Per-agent state machine: current sub-goal, attempt budget, action queue."""

    def __init__(self, name: str, goals: list[SubGoal], attempt_cap: int):
        self.name = name
        self.goals = goals
        self.attempt_cap = attempt_cap
        self.index = 0
        self.attempts = 0
        self.queue: deque[dict[str, Any]] = deque()
        self.waiting = False
        self.delivered = 0
        self.last_failure = ""
        self.results: list[SubTaskResult] = []

    @property
    def done(self) -> bool:
        return self.index >= len(self.goals)

    @property
    def goal(self) -> SubGoal:
        return self.goals[self.index]

    def advance(self, completed: bool, reason: str = "") -> None:
        self.results.append(
            SubTaskResult(
                text=self.goal.text,
                completed=completed,
                attempts=self.attempts,
                reason=reason,
            )
        )
        self.index += 1
        self.attempts = 0
        self.queue.clear()
        self.delivered = 0
        self.last_failure = ""


def _goal_satisfied(world: CraftingWorld, driver: _AgentDriver) -> bool:
    goal = driver.goal
    inventory = world.agents[driver.name].inventory
    if goal.kind in ("gather", "craft"):
        return inventory[goal.item] >= goal.count
    return driver.delivered >= goal.count


def _plan_pickups(
    world: CraftingWorld,
    pos: tuple[int, int],
    missing: Counter,
) -> tuple[list[dict[str, Any]], tuple[int, int]] | None:
    """Plan trips to ground piles covering ``missing``; None if impossible.

    Pile contents consumed by earlier legs of the same plan are tracked in a
    shadow counter so a pile is never promised twice.
    """
    actions: list[dict[str, Any]] = []
    remaining = Counter(missing)
    taken: dict[tuple[int, int], Counter] = {}
    current = pos
    while +remaining:
        candidates = set()
        for cell, pile in world.ground.items():
            left = pile - taken.get(cell, Counter())
            if any(left[item] > 0 for item in remaining if remaining[item] > 0):
                candidates.add(cell)
        path = bfs_path(world, current, candidates) if candidates else None
        if path is None:
            return None
        cell = _walk(current, path)
        actions.extend({"type": "move", "direction": d} for d in path)
        available = world.ground[cell] - taken.get(cell, Counter())
        for item in list(remaining):
            if remaining[item] > 0 and available[item] > 0:
                take = min(remaining[item], available[item])
                actions.append({"type": "pickup", "item": item, "count": take})
                remaining[item] -= take
                taken.setdefault(cell, Counter())[item] += take
        current = cell
    return actions, current


def _walk(pos: tuple[int, int], path: list[str]) -> tuple[int, int]:
    for direction in path:
        dx, dy = DIRECTIONS[direction]
        pos = (pos[0] + dx, pos[1] + dy)
    return pos


def _plan(world: CraftingWorld, driver: _AgentDriver) -> _Plan | None:
    """Compute an action sequence for the driver's current sub-goal, or None
    with the reason recorded when no feasible plan exists right now."""
    goal = driver.goal
    state = world.agents[driver.name]
    inventory = state.inventory

    if goal.kind == "gather":
        needed = goal.count - inventory[goal.item]
        nodes = {
            pos
            for pos, node in world.nodes.items()
            if node.item == goal.item and node.stock > 0
        }
        path = bfs_path(world, state.pos, nodes) if nodes else None
        if path is None:
            driver.last_failure = f"no reachable {goal.item} node with stock"
            return None
        cell = _walk(state.pos, path)
        stock = world.nodes[cell].stock
        take = min(needed, stock)
        actions = [{"type": "move", "direction": d} for d in path]
        actions.extend({"type": "gather", "item": goal.item} for _ in range(take))
        return _Plan(actions)

    if goal.kind == "craft":
        recipe = world.recipes[goal.item]
        needed = goal.count - inventory[goal.item]
        crafts = max(1, math.ceil(needed / recipe.output))
        required = Counter({item: count * crafts for item, count in recipe.inputs.items()})
        missing = required - inventory
        actions: list[dict[str, Any]] = []
        pos = state.pos
        if +missing:
            picked = _plan_pickups(world, pos, missing)
            if picked is None:
                shortfall = ", ".join(f"{c} {i}" for i, c in sorted((+missing).items()))
                driver.last_failure = f"missing inputs for {goal.item}: {shortfall}"
                return None
            pickup_actions, pos = picked
            actions.extend(pickup_actions)
        if recipe.station:
            reachable = world.station_reachable_cells()
            if reachable:
                path = bfs_path(world, pos, reachable)
                if path is None:
                    driver.last_failure = f"no reachable {recipe.station}"
                    return None
                actions.extend({"type": "move", "direction": d} for d in path)
            elif inventory[STATION_ITEM] >= 1:
                actions.append({"type": "place_station"})
            else:
                driver.last_failure = f"no {recipe.station} placed or in inventory"
                return None
        actions.extend({"type": "craft", "item": goal.item} for _ in range(crafts))
        return _Plan(actions)

    # deliver
    have = inventory[goal.item]
    actions = []
    pos = state.pos
    if have < goal.count:
        picked = _plan_pickups(world, pos, Counter({goal.item: goal.count - have}))
        if picked is None:
            driver.last_failure = (
                f"cannot deliver {goal.count} {goal.item}: hold {have} and none on the ground"
            )
            return None
        pickup_actions, pos = picked
        actions.extend(pickup_actions)
    target = world.agents[goal.recipient].pos
    path = bfs_path(world, pos, {target})
    if path is None:
        driver.last_failure = f"no path to {goal.recipient}"
        return None
    actions.extend({"type": "move", "direction": d} for d in path)
    actions.append({"type": "drop", "item": goal.item, "count": goal.count})
    return _Plan(actions)


def execute_crafting_assignments(
    world: CraftingWorld,
    assignments: dict[str, str],
    attempt_cap: int = ATTEMPT_CAP_DEFAULT,
    on_action: ActionCallback | None = None,
    max_ticks: int = 10_000,
) -> dict[str, list[SubTaskResult]]:
    """Run every agent's assignment to completion or failure.

    Agents act in a deterministic round-robin: one primitive action per agent
    per tick. Each sub-goal is attempted at most ``attempt_cap`` times, where
    an attempt is one planned action sequence (or one infeasible planning
    pass). Unparsable assignments fail that agent without stopping the rest.
    """
    if attempt_cap < 1:
        raise ValidationError("attempt_cap must be >= 1")
    drivers: list[_AgentDriver] = []
    results: dict[str, list[SubTaskResult]] = {}
    for agent, text in assignments.items():
        if agent not in world.agents:
            raise ConfigurationError(f"assignment for unknown agent {agent!r}")
        try:
            goals = parse_subgoals(text, world)
        except ParseError as exc:
            results[agent] = [
                SubTaskResult(text=text, completed=False, attempts=0, reason=str(exc))
            ]
            continue
        drivers.append(_AgentDriver(agent, goals, attempt_cap))

    order = [d for d in sorted(drivers, key=lambda d: list(world.agents).index(d.name))]
    for _ in range(max_ticks):
        if all(d.done for d in order):
            break
        for driver in order:
            if driver.done:
                continue
            _tick(world, driver, on_action)
    else:
        for driver in order:
            while not driver.done:
                driver.advance(False, "tick budget exhausted")

    for driver in order:
        results[driver.name] = driver.results
    return results


def _tick(world: CraftingWorld, driver: _AgentDriver, on_action: ActionCallback | None) -> None:
    if driver.waiting:
        driver.waiting = False
        return
    if not driver.queue:
        if _goal_satisfied(world, driver):
            driver.advance(True)
            return
        if driver.attempts >= driver.attempt_cap:
            driver.advance(False, driver.last_failure or "attempt cap reached")
            return
        driver.attempts += 1
        plan = _plan(world, driver)
        if plan is None:
            driver.waiting = True
            return
        driver.queue.extend(plan.actions)
        if not driver.queue:
            return
    action = driver.queue.popleft()
    result = crafting_step(world, driver.name, action)
    if on_action is not None:
        on_action(driver.name, action, result.ok, result.reason)
    if result.ok:
        if action["type"] == "drop" and driver.goal.kind == "deliver":
            driver.delivered += int(action.get("count", 1))
    else:
        driver.last_failure = result.reason
        driver.queue.clear()


# -- fixtures ------------------------------------------------------------------


def load_world(source: dict | str | Path) -> CraftingWorld:
    """Build a world from a fixture mapping or YAML file.

    Schema: width, height, agents {name: [x, y]}, nodes [{item, at, stock}],
    stations [[x, y]], walls [[x, y]], optional recipes {item: {inputs,
    output, station}} replacing the defaults.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    else:
        data = source
    if not isinstance(data, dict):
        raise ConfigurationError("world fixture must be a mapping")
    try:
        recipes = None
        if "recipes" in data:
            recipes = {
                item: Recipe(
                    inputs=dict(spec["inputs"]),
                    output=int(spec.get("output", 1)),
                    station=spec.get("station"),
                )
                for item, spec in data["recipes"].items()
            }
        world = CraftingWorld(int(data["width"]), int(data["height"]), recipes=recipes)
        for pos in data.get("walls", []):
            world.add_wall(tuple(pos))
        for name, pos in data.get("agents", {}).items():
            world.add_agent(name, tuple(pos))
        for node in data.get("nodes", []):
            world.add_node(tuple(node["at"]), node["item"], int(node["stock"]))
        for pos in data.get("stations", []):
            world.add_station(tuple(pos))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad world fixture: {exc}") from exc
    return world
