"""DAG topologies, manifold convex combinations and the consensus law."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Sequence

from .controllers import Gains, context_from_relative, single_follower_tracking
from .dynamics import ControlInput, RelativeState, RobotState, relative_twist
from .liegroup import ExpCoords, LogBranch, Pose, Twist, compose, exp_se2, log_se2, relative


class TopologyError(ValueError):
    """Base class for malformed communication graphs."""


class CycleDetected(TopologyError):
    pass


class MultipleRoots(TopologyError):
    pass


class UnreachableNode(TopologyError):
    pass


class WeightOutOfRange(TopologyError):
    pass


def uniform_weights(n_parents: int) -> list[float]:
    """Iterated weights ``1/(j+1)`` giving each parent the same share."""
    return [1.0 / (j + 2) for j in range(n_parents - 1)]


@dataclass
class Topology:
    """Directed acyclic graph rooted at node 0.

    ``parents[i]`` is the ordered parent list of node ``i``; the order matters
    because the manifold combination is built by nested interpolation.
    ``weights[i]`` has one entry fewer than ``parents[i]``.
    """

    num_nodes: int
    parents: dict[int, list[int]] = field(default_factory=dict)
    weights: dict[int, list[float]] = field(default_factory=dict)

    @classmethod
    def from_edges(
        cls,
        num_nodes: int,
        edges: Sequence[tuple[int, int]],
        weights: Mapping[int, Sequence[float]] | None = None,
    ) -> "Topology":
        parents: dict[int, list[int]] = {i: [] for i in range(num_nodes)}
        for a, b in edges:
            if not (0 <= a < num_nodes and 0 <= b < num_nodes):
                raise TopologyError(f"edge {a}->{b} references a node outside 0..{num_nodes - 1}")
            parents[b].append(a)
        w = {i: list(weights[i]) for i in (weights or {})}
        return cls(num_nodes, parents, w)

    @classmethod
    def chain(cls, num_nodes: int) -> "Topology":
        return cls.from_edges(num_nodes, [(i, i + 1) for i in range(num_nodes - 1)])

    def parents_of(self, i: int) -> list[int]:
        return self.parents.get(i, [])

    def weights_of(self, i: int) -> list[float]:
        if i in self.weights:
            return self.weights[i]
        return uniform_weights(len(self.parents_of(i)))

    def edges(self) -> list[tuple[int, int]]:
        return [(p, i) for i in range(self.num_nodes) for p in self.parents_of(i)]


def validate(topology: Topology) -> list[int]:
    """Check the graph and return a root-first evaluation order."""
    n = topology.num_nodes
    if n < 1:
        raise TopologyError("topology needs at least one node")
    for i in range(n):
        for p in topology.parents_of(i):
            if p == i:
                raise CycleDetected(f"self-loop on node {i} (edge {i}->{i})")
            if not 0 <= p < n:
                raise TopologyError(f"edge {p}->{i} references a node outside 0..{n - 1}")
        ps = topology.parents_of(i)
        if len(set(ps)) != len(ps):
            raise TopologyError(f"node {i} lists a parent twice: {ps}")
    for i, w in topology.weights.items():
        ps = topology.parents_of(i)
        expected = max(len(ps) - 1, 0)
        if len(w) != expected:
            raise TopologyError(f"node {i} has {len(w)} weights for {len(ps)} parents (need {expected})")
        for lam in w:
            if not 0.0 <= lam <= 1.0:
                raise WeightOutOfRange(f"node {i}: weight {lam} outside [0, 1]")

    if topology.parents_of(0):
        raise CycleDetected(f"root node 0 has parents {topology.parents_of(0)}")
    roots = [i for i in range(n) if not topology.parents_of(i)]
    if roots != [0]:
        raise MultipleRoots(f"nodes {roots} have no parents; only node 0 may be a root")

    children: dict[int, list[int]] = {i: [] for i in range(n)}
    indeg = [0] * n
    for p, c in topology.edges():
        children[p].append(c)
        indeg[c] += 1
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for c in children[v]:
            if c not in seen:
                seen.add(c)
                queue.append(c)
    missing = sorted(set(range(n)) - seen)
    if missing:
        raise UnreachableNode(f"nodes {missing} are not reachable from node 0")

    order = []
    queue = deque([0])
    while queue:
        v = queue.popleft()
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    if len(order) < n:
        stuck = sorted(set(range(n)) - set(order))
        raise CycleDetected(f"cycle through nodes {stuck}")
    return order


class VirtualLeader(NamedTuple):
    pose: Pose
    twist: Twist
    input: ControlInput


def _check_counts(n_items: int, weights: Sequence[float]) -> None:
    if n_items < 1:
        raise ValueError("need at least one parent")
    if len(weights) != n_items - 1:
        raise ValueError(f"{n_items} parents need {n_items - 1} weights, got {len(weights)}")


def convex_pose(
    parents: Sequence[Pose],
    weights: Sequence[float],
    branch: LogBranch = LogBranch.PlusPi,
) -> Pose:
    """Nested geodesic interpolation ``g <- g exp(lam log(g^-1 g_next))``."""
    _check_counts(len(parents), weights)
    g = parents[0]
    for lam, nxt in zip(weights, parents[1:]):
        X = log_se2(relative(g, nxt), branch)
        g = compose(g, exp_se2(ExpCoords(lam * X.theta, lam * X.qx, lam * X.qy)))
    return g


def convex_twist(parents: Sequence[Twist], weights: Sequence[float]) -> Twist:
    _check_counts(len(parents), weights)
    w, vx, vy = parents[0]
    for lam, nxt in zip(weights, parents[1:]):
        w = (1.0 - lam) * w + lam * nxt[0]
        vx = (1.0 - lam) * vx + lam * nxt[1]
        vy = (1.0 - lam) * vy + lam * nxt[2]
    return Twist(w, vx, vy)


def convex_input(parents: Sequence[ControlInput], weights: Sequence[float]) -> ControlInput:
    return ControlInput(*convex_twist(parents, weights))


def virtual_leader(
    topology: Topology,
    i: int,
    states: Sequence[RobotState],
    inputs: Mapping[int, ControlInput],
    branch: LogBranch = LogBranch.PlusPi,
) -> VirtualLeader:
    ps = topology.parents_of(i)
    w = topology.weights_of(i)
    if len(ps) == 1:
        p = ps[0]
        return VirtualLeader(states[p].pose, states[p].twist, inputs[p])
    return VirtualLeader(
        convex_pose([states[p].pose for p in ps], w, branch),
        convex_twist([states[p].twist for p in ps], w),
        convex_input([inputs[p] for p in ps], w),
    )


def track_target(
    target: VirtualLeader,
    follower: RobotState,
    gains: Gains,
    branch: LogBranch = LogBranch.PlusPi,
) -> ControlInput:
    g = relative(target.pose, follower.pose)
    rel = RelativeState(g, relative_twist(g, target.twist, follower.twist))
    ctx = context_from_relative(rel, target.twist, target.input, branch)
    return single_follower_tracking(ctx, gains)


def propagate_inputs(
    topology: Topology,
    states: Sequence[RobotState],
    leader_input: ControlInput,
    target_fn: Callable[[int, VirtualLeader], VirtualLeader],
    gains: Gains,
    branch: LogBranch = LogBranch.PlusPi,
    order: Sequence[int] | None = None,
) -> dict[int, ControlInput]:
    """Evaluate every node's input root-first; ``target_fn`` may reshape each virtual leader."""
    if order is None:
        order = validate(topology)
    inputs: dict[int, ControlInput] = {order[0]: leader_input}
    for i in order[1:]:
        vl = virtual_leader(topology, i, states, inputs, branch)
        inputs[i] = track_target(target_fn(i, vl), states[i], gains, branch)
    return inputs


def consensus_step_inputs(
    topology: Topology,
    states: Sequence[RobotState],
    leader_input_fn: Callable[[float], ControlInput],
    gains: Gains,
    t: float = 0.0,
    branch: LogBranch = LogBranch.PlusPi,
) -> dict[int, ControlInput]:
    """Inputs for every node at time ``t``; node 0 follows ``leader_input_fn``."""
    return propagate_inputs(
        topology, states, leader_input_fn(t), lambda i, vl: vl, gains, branch
    )
