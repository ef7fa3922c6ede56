"""Relay topology search over the secure feasible graph.

The feasible graph contains every directed link short enough for its
transmitter to secure at the SPSC threshold with its full jamming
budget.  All optimizers then look for a spanning-tree subgraph, rooted
at the gateway (id 0), maximizing the min throughput delivered by the
closed-form resource allocation:

* ``mcrr`` -- Monte-Carlo relay routing: per user, sample K shortest
  paths under i.i.d. Uniform(0,1) edge weights, then iteratively splice
  candidates into the incumbent tree, keeping a change only when the
  objective improves.
* ``bruteforce_route`` -- exact enumeration of per-user simple-path
  combinations when small enough, otherwise the best of ``trials``
  randomly sampled feasible trees.
* ``genetic_route`` -- a two-level scheme: a binary genome selects the
  relay subset and a randomized builder grows a feasible tree on it.
* ``greedy_route`` -- users committed one at a time on the candidate
  path that maximizes the immediate system objective.
* ``astar_route`` -- independent per-user shortest paths under a fixed
  link metric, merged into a tree by keeping each node's first
  committed parent.

Paths from different users are merged by grafting: a new path for user
u is rewritten to follow the committed tree from the root up to the
last tree node it touches, which preserves the single-parent invariant
by construction.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from .channel import NodeSpec, link_distance, link_gain, noise_psd as channel_noise_psd
from .errors import CombinatorialBlowup, NoFeasibleTree, Unreachable
from .rrm import Allocation, allocate
from .secrecy import EveField, max_link_distance, min_jamming_closed_form

Edge = Tuple[int, int]

ROOT_ID = 0


# ---------------------------------------------------------------------------
# Graph containers


@dataclass(frozen=True)
class RoutingGraph:
    """Spanning-tree relay topology with per-user paths."""

    node_ids: frozenset
    edges: frozenset
    user_paths: Mapping[int, Tuple[Edge, ...]]
    hop_counts: Mapping[int, int]

    @classmethod
    def from_paths(cls, paths: Mapping[int, Sequence[int]]) -> "RoutingGraph":
        """Build from per-user node sequences (root first, user last)."""
        user_paths = {}
        nodes: Set[int] = {ROOT_ID}
        edges: Set[Edge] = set()
        for user, seq in paths.items():
            p = tuple(zip(seq[:-1], seq[1:]))
            user_paths[user] = p
            nodes.update(seq)
            edges.update(p)
        hops = {u: len(p) for u, p in user_paths.items()}
        return cls(frozenset(nodes), frozenset(edges), user_paths, hops)


@dataclass(frozen=True)
class CandidatePath:
    """One sampled root-to-user path."""

    user: int
    nodes: Tuple[int, ...]

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return tuple(zip(self.nodes[:-1], self.nodes[1:]))


@dataclass
class FeasibleGraph:
    """Directed feasibility graph plus per-node maximum link distances."""

    adjacency: Dict[int, List[Tuple[int, float]]]
    d_max: Dict[int, float]
    root: int
    users: Tuple[int, ...]
    unreachable_users: Tuple[int, ...]

    def reachable(self, target: int) -> bool:
        return target not in self.unreachable_users


def validate_spanning_tree(g: RoutingGraph) -> List[str]:
    """Check the single-parent rooted-tree structure; returns violations."""
    violations: List[str] = []
    indeg: Dict[int, Set[int]] = {}
    for (i, j) in g.edges:
        indeg.setdefault(j, set()).add(i)
    if ROOT_ID in indeg:
        violations.append(f"root has incoming edges from {sorted(indeg[ROOT_ID])}")
    for nid in sorted(g.node_ids):
        if nid == ROOT_ID:
            continue
        parents = indeg.get(nid, set())
        if len(parents) != 1:
            violations.append(f"node {nid} has in-degree {len(parents)}")
    # Reachability from the root doubles as the acyclicity check: with
    # unit in-degrees, any cycle would be unreachable from the root.
    seen = {ROOT_ID}
    frontier = [ROOT_ID]
    adj: Dict[int, List[int]] = {}
    for (i, j) in g.edges:
        adj.setdefault(i, []).append(j)
    while frontier:
        cur = frontier.pop()
        for nxt in adj.get(cur, []):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    missing = set(g.node_ids) - seen
    if missing:
        violations.append(f"nodes not reachable from root: {sorted(missing)}")
    for user, path in g.user_paths.items():
        if not path:
            violations.append(f"user {user} has an empty path")
            continue
        if path[0][0] != ROOT_ID:
            violations.append(f"user {user} path does not start at root")
        if path[-1][1] != user:
            violations.append(f"user {user} path does not end at the user")
        for (a, b) in zip(path[:-1], path[1:]):
            if a[1] != b[0]:
                violations.append(f"user {user} path edges do not chain at {a}->{b}")
                break
        if g.hop_counts[user] != len(path):
            violations.append(f"user {user} hop count mismatch")
    return violations


# ---------------------------------------------------------------------------
# Feasible graph construction


def build_feasible_graph(
    nodes: Mapping[int, NodeSpec],
    users: Sequence[int],
    field: EveField,
    tau: float,
    *,
    gain_linear: Optional[float] = None,
    noise_psd: Optional[float] = None,
    tol_km: float = 0.1,
) -> FeasibleGraph:
    """All directed links each relay can secure with its jamming budget.

    Users never transmit, and nothing points back at the root.  Users
    with no root path are collected in ``unreachable_users`` rather than
    raised, so callers can still serve the feasible subset.
    """
    user_set = set(users)
    relays = [nid for nid in sorted(nodes) if nid not in user_set]
    d_max = {
        nid: max_link_distance(
            nodes[nid], field, tau, tol_km,
            gain_linear=gain_linear, noise_psd=noise_psd,
        )
        for nid in relays
    }
    adjacency: Dict[int, List[Tuple[int, float]]] = {nid: [] for nid in sorted(nodes)}
    for i in relays:
        for j in sorted(nodes):
            if j == i or j == ROOT_ID:
                continue
            d = link_distance(nodes[i], nodes[j])
            if d <= d_max[i]:
                adjacency[i].append((j, d))
    reach = {ROOT_ID}
    frontier = [ROOT_ID]
    while frontier:
        cur = frontier.pop()
        for (nxt, _) in adjacency.get(cur, []):
            if nxt not in reach:
                reach.add(nxt)
                frontier.append(nxt)
    unreachable = tuple(u for u in sorted(user_set) if u not in reach)
    return FeasibleGraph(
        adjacency=adjacency,
        d_max=d_max,
        root=ROOT_ID,
        users=tuple(sorted(user_set)),
        unreachable_users=unreachable,
    )


# ---------------------------------------------------------------------------
# Shortest paths


def _dijkstra(
    g_all: FeasibleGraph,
    target: int,
    weight,
    heuristic=None,
) -> Optional[Tuple[int, ...]]:
    """A* from the root to ``target``; ``weight`` maps (i, j, d) to cost.

    With ``heuristic`` None this is plain Dijkstra.  Returns the node
    sequence or None when the target is unreachable.
    """
    h = heuristic or (lambda n: 0.0)
    dist = {ROOT_ID: 0.0}
    prev: Dict[int, int] = {}
    heap = [(h(ROOT_ID), 0.0, ROOT_ID)]
    done: Set[int] = set()
    while heap:
        _, d_cur, cur = heapq.heappop(heap)
        if cur in done:
            continue
        if cur == target:
            path = [cur]
            while cur != ROOT_ID:
                cur = prev[cur]
                path.append(cur)
            return tuple(reversed(path))
        done.add(cur)
        for (nxt, d_km) in g_all.adjacency.get(cur, []):
            if nxt in done:
                continue
            cand = d_cur + weight(cur, nxt, d_km)
            if cand < dist.get(nxt, math.inf):
                dist[nxt] = cand
                prev[nxt] = cur
                heapq.heappush(heap, (cand + h(nxt), cand, nxt))
    return None


def sample_candidate_paths(
    g_all: FeasibleGraph, user: int, k: int, seed: int = 0
) -> List[CandidatePath]:
    """K randomized shortest paths from the root to ``user``.

    Each sample re-draws i.i.d. Uniform(0,1) edge weights and takes the
    shortest path under them; duplicates are removed, preserving first
    appearance.  Deterministic given the seed.
    """
    rng = np.random.default_rng(seed)
    out: List[CandidatePath] = []
    seen: Set[Tuple[int, ...]] = set()
    found_any = False
    for _ in range(k):
        weights: Dict[Edge, float] = {}
        for i in sorted(g_all.adjacency):
            for (j, _) in g_all.adjacency[i]:
                weights[(i, j)] = float(rng.random())
        path = _dijkstra(g_all, user, lambda a, b, d: weights[(a, b)])
        if path is None:
            break
        found_any = True
        if path not in seen:
            seen.add(path)
            out.append(CandidatePath(user=user, nodes=path))
    if not found_any:
        raise Unreachable(f"no path from root to user {user}")
    return out


# ---------------------------------------------------------------------------
# Tree evaluation


class TreeEvaluator:
    """Fast min-throughput evaluation of per-user path assignments.

    Keeps per-node accumulators so splicing one user's path only
    recomputes the nodes whose outgoing flows changed.  Link parameters
    are cached per edge and the jamming inversion per (node, distance).
    """

    def __init__(
        self,
        nodes: Mapping[int, NodeSpec],
        field: EveField,
        tau: float,
        *,
        gain_linear: Optional[float] = None,
        noise_psd: Optional[float] = None,
    ):
        self.nodes = nodes
        self.field = field
        self.tau = tau
        self.gain_override = gain_linear
        self.noise_override = noise_psd
        self._edge_cache: Dict[Edge, Tuple[float, float, float]] = {}
        self._jam_cache: Dict[Tuple[int, float], float] = {}

    def edge_params(self, i: int, j: int) -> Tuple[float, float, float]:
        key = (i, j)
        if key not in self._edge_cache:
            a, b = self.nodes[i], self.nodes[j]
            d = link_distance(a, b)
            g = self.gain_override if self.gain_override is not None else link_gain(a, b)
            n0 = (
                self.noise_override
                if self.noise_override is not None
                else channel_noise_psd(b, a.layer)
            )
            self._edge_cache[key] = (d, g, n0)
        return self._edge_cache[key]

    def _required_jamming(self, i: int, d: float, g: float, n0: float) -> float:
        key = (i, d)
        if key not in self._jam_cache:
            node = self.nodes[i]
            lam = self.field.effective_density(node.layer, node.position, d)
            self._jam_cache[key] = min_jamming_closed_form(
                d, node.alpha, lam, g, n0, self.tau
            )
        return self._jam_cache[key]

    def node_score(self, i: int, flows: Mapping[Edge, int]) -> float:
        """B_i divided by the node's weighted flow load.

        ``flows`` maps each outgoing used edge to the summed hop counts
        of the users crossing it.  Infinite when the required jamming
        exceeds the budget (the caller treats that tree as infeasible).
        """
        node = self.nodes[i]
        required = 0.0
        params = {e: self.edge_params(*e) for e in flows}
        for e, (d, g, n0) in params.items():
            required = max(required, self._required_jamming(i, d, g, n0))
        if required > node.p_max_w - node.p_min_w:
            return -math.inf
        rho = node.p_max_w - required
        s = 0.0
        for e, (d, g, n0) in params.items():
            gamma = math.log2(1.0 + rho * g / (n0 * d ** node.alpha))
            if gamma <= 0.0:
                return -math.inf
            s += flows[e] / gamma
        return node.bandwidth_hz / s

    @staticmethod
    def _flows(paths: Mapping[int, Tuple[int, ...]]) -> Dict[int, Dict[Edge, int]]:
        flows: Dict[int, Dict[Edge, int]] = {}
        for user, seq in paths.items():
            h = len(seq) - 1
            for (a, b) in zip(seq[:-1], seq[1:]):
                flows.setdefault(a, {})
                flows[a][(a, b)] = flows[a].get((a, b), 0) + h
        return flows

    def scores(
        self,
        paths: Mapping[int, Tuple[int, ...]],
        base: Optional[Dict[int, float]] = None,
        affected: Optional[Iterable[int]] = None,
    ) -> Dict[int, float]:
        """Per-node scores; with ``base``/``affected``, update incrementally."""
        flows = self._flows(paths)
        if base is None or affected is None:
            return {i: self.node_score(i, f) for i, f in flows.items()}
        scores = dict(base)
        for i in affected:
            if i in flows:
                scores[i] = self.node_score(i, flows[i])
            else:
                scores.pop(i, None)
        return scores

    @staticmethod
    def objective(scores: Mapping[int, float]) -> float:
        return min(scores.values()) if scores else 0.0

    def throughput(self, paths: Mapping[int, Tuple[int, ...]]) -> float:
        return self.objective(self.scores(paths))


# ---------------------------------------------------------------------------
# Grafting


def _parent_map(paths: Mapping[int, Tuple[int, ...]], skip: Optional[int] = None) -> Dict[int, int]:
    parents: Dict[int, int] = {}
    for user, seq in paths.items():
        if user == skip:
            continue
        for (a, b) in zip(seq[:-1], seq[1:]):
            parents[b] = a
    return parents


def _root_path(parents: Mapping[int, int], node: int) -> Tuple[int, ...]:
    seq = [node]
    while seq[-1] != ROOT_ID:
        seq.append(parents[seq[-1]])
    return tuple(reversed(seq))


def graft(
    committed: Mapping[int, Tuple[int, ...]],
    user: int,
    candidate: Tuple[int, ...],
) -> Tuple[int, ...]:
    """Rewrite ``candidate`` so it respects the committed tree.

    Walking the candidate backward from the user, the first node already
    present in the committed tree (excluding ``user``'s own old path)
    becomes the anchor; the grafted path is the tree's root-to-anchor
    path followed by the candidate's anchor-to-user suffix.  Every node
    past the anchor is new to the tree, so single parenthood holds.
    """
    parents = _parent_map(committed, skip=user)
    in_tree = set(parents) | {ROOT_ID}
    anchor_idx = 0
    for idx in range(len(candidate) - 1, -1, -1):
        if candidate[idx] in in_tree:
            anchor_idx = idx
            break
    anchor = candidate[anchor_idx]
    return _root_path(parents, anchor) + candidate[anchor_idx + 1:]


# ---------------------------------------------------------------------------
# Results


@dataclass(frozen=True)
class RouteResult:
    """Optimizer output: topology, allocation, and users left unserved."""

    graph: RoutingGraph
    allocation: Allocation
    unserved_users: Tuple[int, ...] = ()

    @property
    def objective_bps(self) -> float:
        """System objective: zero whenever any user is unserved."""
        if self.unserved_users:
            return 0.0
        return self.allocation.min_throughput_bps


def _finalize(
    paths: Mapping[int, Tuple[int, ...]],
    nodes: Mapping[int, NodeSpec],
    field: EveField,
    tau: float,
    unserved: Tuple[int, ...],
    gain_linear: Optional[float],
    noise_psd: Optional[float],
) -> RouteResult:
    graph = RoutingGraph.from_paths(paths)
    alloc = allocate(
        graph, nodes, field, tau, gain_linear=gain_linear, noise_psd=noise_psd
    )
    return RouteResult(graph=graph, allocation=alloc, unserved_users=unserved)


def _prepare(
    nodes, users, field, tau, g_all, gain_linear, noise_psd
) -> Tuple[FeasibleGraph, List[int], Tuple[int, ...], TreeEvaluator]:
    if g_all is None:
        g_all = build_feasible_graph(
            nodes, users, field, tau, gain_linear=gain_linear, noise_psd=noise_psd
        )
    served = [u for u in sorted(users) if u not in g_all.unreachable_users]
    evaluator = TreeEvaluator(
        nodes, field, tau, gain_linear=gain_linear, noise_psd=noise_psd
    )
    return g_all, served, g_all.unreachable_users, evaluator


# ---------------------------------------------------------------------------
# MCRR


def mcrr(
    nodes: Mapping[int, NodeSpec],
    users: Sequence[int],
    field: EveField,
    tau: float,
    k: int = 12,
    epsilon: float = 1e-6,
    max_rounds: int = 20,
    seed: int = 0,
    *,
    gain_linear: Optional[float] = None,
    noise_psd: Optional[float] = None,
    g_all: Optional[FeasibleGraph] = None,
) -> RouteResult:
    """Monte-Carlo relay routing.

    Samples K randomized-shortest-path candidates per user, builds an
    initial tree by grafting one candidate per user, then sweeps users
    in id order splicing each candidate into the incumbent and keeping
    the best improvement.  Stops when a full sweep improves the
    objective by less than ``epsilon`` (relative) or after
    ``max_rounds`` sweeps.
    """
    g_all, served, unserved, ev = _prepare(
        nodes, users, field, tau, g_all, gain_linear, noise_psd
    )
    if not served:
        return _finalize({}, nodes, field, tau, unserved, gain_linear, noise_psd)
    candidates = {
        u: sample_candidate_paths(g_all, u, k, seed=seed + 7919 * u) for u in served
    }
    paths: Dict[int, Tuple[int, ...]] = {}
    for u in served:
        paths[u] = graft(paths, u, candidates[u][0].nodes)
    scores = ev.scores(paths)
    best = ev.objective(scores)
    for _ in range(max_rounds):
        round_start = best
        for u in served:
            old = paths[u]
            best_alt = None
            for cand in candidates[u]:
                trial = dict(paths)
                trial[u] = graft(paths, u, cand.nodes)
                if trial[u] == old:
                    continue
                affected = (set(old) | set(trial[u])) - {u}
                trial_scores = ev.scores(trial, base=scores, affected=affected)
                val = ev.objective(trial_scores)
                if val > best and (best_alt is None or val > best_alt[0]):
                    best_alt = (val, trial[u], trial_scores)
            if best_alt is not None:
                best, paths[u], scores = best_alt
        improvement = best - round_start
        if not improvement > epsilon * max(abs(round_start), 1.0):
            break
    return _finalize(paths, nodes, field, tau, unserved, gain_linear, noise_psd)


# ---------------------------------------------------------------------------
# Brute force


def _all_simple_paths(
    g_all: FeasibleGraph, target: int, limit: int
) -> List[Tuple[int, ...]]:
    """Depth-first enumeration of simple root-to-target paths."""
    out: List[Tuple[int, ...]] = []
    stack: List[int] = [ROOT_ID]
    on_path: Set[int] = {ROOT_ID}

    def rec(cur: int):
        if len(out) > limit:
            raise CombinatorialBlowup(
                f"more than {limit} simple paths to node {target}; use sampled mode"
            )
        if cur == target:
            out.append(tuple(stack))
            return
        for (nxt, _) in sorted(g_all.adjacency.get(cur, [])):
            if nxt in on_path:
                continue
            stack.append(nxt)
            on_path.add(nxt)
            rec(nxt)
            stack.pop()
            on_path.remove(nxt)

    rec(ROOT_ID)
    return out


def _is_tree(paths: Mapping[int, Tuple[int, ...]]) -> bool:
    parents: Dict[int, int] = {}
    for seq in paths.values():
        for (a, b) in zip(seq[:-1], seq[1:]):
            if parents.setdefault(b, a) != a:
                return False
    return ROOT_ID not in parents


def bruteforce_route(
    nodes: Mapping[int, NodeSpec],
    users: Sequence[int],
    field: EveField,
    tau: float,
    trials: int = 5000,
    seed: int = 0,
    mode: str = "auto",
    combo_limit: int = 10_000_000,
    *,
    gain_linear: Optional[float] = None,
    noise_psd: Optional[float] = None,
    g_all: Optional[FeasibleGraph] = None,
) -> RouteResult:
    """Best tree by enumeration (exact) or random sampling.

    Exact mode enumerates every combination of simple root-to-user
    paths that forms a tree; it raises CombinatorialBlowup beyond
    ``combo_limit`` combinations.  Sampled mode draws ``trials`` random
    feasible trees, each built by grafting one randomized shortest path
    per user in random user order, and keeps the best.
    """
    g_all, served, unserved, ev = _prepare(
        nodes, users, field, tau, g_all, gain_linear, noise_psd
    )
    if not served:
        return _finalize({}, nodes, field, tau, unserved, gain_linear, noise_psd)

    if mode in ("auto", "exact"):
        try:
            per_user = {u: _all_simple_paths(g_all, u, combo_limit) for u in served}
            combos = 1
            for plist in per_user.values():
                combos *= len(plist)
                if combos > combo_limit:
                    raise CombinatorialBlowup(
                        f"{combos}+ path combinations exceed {combo_limit}; "
                        "use sampled mode"
                    )
            best_val, best_paths = -math.inf, None
            for combo in itertools.product(*(per_user[u] for u in served)):
                paths = dict(zip(served, combo))
                if not _is_tree(paths):
                    continue
                val = ev.throughput(paths)
                if val > best_val:
                    best_val, best_paths = val, paths
            if best_paths is None:
                raise NoFeasibleTree("no tree-compatible path combination found")
            return _finalize(
                best_paths, nodes, field, tau, unserved, gain_linear, noise_psd
            )
        except CombinatorialBlowup:
            if mode == "exact":
                raise

    rng = np.random.default_rng(seed)
    best_val, best_paths = -math.inf, None
    for _ in range(trials):
        order = list(served)
        rng.shuffle(order)
        paths: Dict[int, Tuple[int, ...]] = {}
        ok = True
        for u in order:
            weights: Dict[Edge, float] = {}
            for i in sorted(g_all.adjacency):
                for (j, _) in g_all.adjacency[i]:
                    weights[(i, j)] = float(rng.random())
            cand = _dijkstra(g_all, u, lambda a, b, d: weights[(a, b)])
            if cand is None:
                ok = False
                break
            paths[u] = graft(paths, u, cand)
        if not ok:
            continue
        val = ev.throughput(paths)
        if val > best_val:
            best_val, best_paths = val, paths
    if best_paths is None:
        raise NoFeasibleTree("sampling produced no feasible tree")
    return _finalize(best_paths, nodes, field, tau, unserved, gain_linear, noise_psd)


# ---------------------------------------------------------------------------
# Genetic baseline


def _random_tree_on_subset(
    g_all: FeasibleGraph,
    served: Sequence[int],
    allowed: Set[int],
    rng: np.random.Generator,
) -> Optional[Dict[int, Tuple[int, ...]]]:
    """Randomized feasible tree using only ``allowed`` relay nodes."""
    order = list(served)
    rng.shuffle(order)
    paths: Dict[int, Tuple[int, ...]] = {}
    usable = allowed | set(served) | {ROOT_ID}
    for u in order:
        weights: Dict[Edge, float] = {}
        for i in sorted(g_all.adjacency):
            if i not in usable:
                continue
            for (j, _) in g_all.adjacency[i]:
                if j in usable:
                    weights[(i, j)] = float(rng.random())
        restricted = FeasibleGraph(
            adjacency={
                i: [(j, d) for (j, d) in adj if (i, j) in weights]
                for i, adj in g_all.adjacency.items()
                if i in usable
            },
            d_max=g_all.d_max,
            root=g_all.root,
            users=g_all.users,
            unreachable_users=(),
        )
        cand = _dijkstra(restricted, u, lambda a, b, d: weights[(a, b)])
        if cand is None:
            return None
        paths[u] = graft(paths, u, cand)
    return paths


def genetic_route(
    nodes: Mapping[int, NodeSpec],
    users: Sequence[int],
    field: EveField,
    tau: float,
    generations: int = 5000,
    population: int = 50,
    elites: int = 6,
    mutation_rate: float = 0.05,
    seed: int = 0,
    *,
    gain_linear: Optional[float] = None,
    noise_psd: Optional[float] = None,
    g_all: Optional[FeasibleGraph] = None,
) -> RouteResult:
    """Two-level genetic search: genomes pick relay subsets, a randomized
    builder grows a feasible tree on each subset, fitness is the
    resulting min throughput (zero when the subset disconnects a user).
    Elitist generational replacement with uniform crossover.
    """
    if not population > elites >= 1:
        raise ValueError("need population > elites >= 1")
    g_all, served, unserved, ev = _prepare(
        nodes, users, field, tau, g_all, gain_linear, noise_psd
    )
    if not served:
        return _finalize({}, nodes, field, tau, unserved, gain_linear, noise_psd)
    relay_ids = [
        nid for nid in sorted(nodes) if nid != ROOT_ID and nid not in set(users)
    ]
    rng = np.random.default_rng(seed)
    n_genes = len(relay_ids)

    def express(genome: np.ndarray) -> Tuple[float, Optional[Dict[int, Tuple[int, ...]]]]:
        allowed = {relay_ids[i] for i in range(n_genes) if genome[i]}
        paths = _random_tree_on_subset(g_all, served, allowed, rng)
        if paths is None:
            return -math.inf, None
        val = ev.throughput(paths)
        return val, paths

    pop = [rng.random(n_genes) < 0.5 for _ in range(population)]
    if pop:
        pop[0] = np.ones(n_genes, dtype=bool)  # all relays: always feasible
    best_val, best_paths = -math.inf, None
    fitness: List[float] = []
    for genome in pop:
        val, paths = express(genome)
        fitness.append(val)
        if val > best_val:
            best_val, best_paths = val, paths
    for _ in range(generations):
        ranked = sorted(range(population), key=lambda idx: -fitness[idx])
        next_pop = [pop[idx].copy() for idx in ranked[:elites]]
        while len(next_pop) < population:
            # Rank-biased parent choice from the top half.
            half = max(2, population // 2)
            a, b = rng.integers(0, half, size=2)
            pa, pb = pop[ranked[a]], pop[ranked[b]]
            mask = rng.random(n_genes) < 0.5
            child = np.where(mask, pa, pb)
            flip = rng.random(n_genes) < mutation_rate
            child = np.logical_xor(child, flip)
            next_pop.append(child)
        pop = next_pop
        fitness = []
        for genome in pop:
            val, paths = express(genome)
            fitness.append(val)
            if val > best_val:
                best_val, best_paths = val, paths
    if best_paths is None:
        raise NoFeasibleTree("no genome produced a feasible tree")
    return _finalize(best_paths, nodes, field, tau, unserved, gain_linear, noise_psd)


# ---------------------------------------------------------------------------
# Greedy and A* baselines


def _metric_weight(metric: str, ev: TreeEvaluator, nodes: Mapping[int, NodeSpec]):
    if metric == "distance":
        return lambda a, b, d: d
    if metric == "hop":
        return lambda a, b, d: 1.0
    if metric == "inverse_se":

        def w(a, b, d):
            _, g, n0 = ev.edge_params(a, b)
            gamma = math.log2(1.0 + nodes[a].p_max_w * g / (n0 * d ** nodes[a].alpha))
            return 1.0 / gamma if gamma > 0.0 else math.inf

        return w
    raise ValueError(f"unknown metric {metric!r}")


def greedy_route(
    nodes: Mapping[int, NodeSpec],
    users: Sequence[int],
    field: EveField,
    tau: float,
    *,
    gain_linear: Optional[float] = None,
    noise_psd: Optional[float] = None,
    g_all: Optional[FeasibleGraph] = None,
) -> RouteResult:
    """Commit users one at a time on their immediately best path.

    For each user in id order, candidate paths are the shortest paths
    under the distance, hop, and inverse-SE metrics, each computed both
    on raw costs and with already-committed tree edges made free (to
    reward reuse); the candidate maximizing the system objective after
    grafting is committed.  Fully deterministic.
    """
    g_all, served, unserved, ev = _prepare(
        nodes, users, field, tau, g_all, gain_linear, noise_psd
    )
    if not served:
        return _finalize({}, nodes, field, tau, unserved, gain_linear, noise_psd)
    paths: Dict[int, Tuple[int, ...]] = {}
    for u in served:
        committed_edges: Set[Edge] = {
            e for seq in paths.values() for e in zip(seq[:-1], seq[1:])
        }
        cands: List[Tuple[int, ...]] = []
        for metric in ("distance", "hop", "inverse_se"):
            base_w = _metric_weight(metric, ev, nodes)
            for reuse in (False, True):
                if reuse:
                    w = lambda a, b, d, bw=base_w: (
                        0.0 if (a, b) in committed_edges else bw(a, b, d)
                    )
                else:
                    w = base_w
                cand = _dijkstra(g_all, u, w)
                if cand is not None and cand not in cands:
                    cands.append(cand)
        if not cands:
            raise Unreachable(f"no path from root to user {u}")
        best_val, best_path = -math.inf, None
        for cand in cands:
            trial = dict(paths)
            trial[u] = graft(paths, u, cand)
            val = ev.throughput(trial)
            if val > best_val:
                best_val, best_path = val, trial[u]
        paths[u] = best_path
    return _finalize(paths, nodes, field, tau, unserved, gain_linear, noise_psd)


def astar_route(
    nodes: Mapping[int, NodeSpec],
    users: Sequence[int],
    field: EveField,
    tau: float,
    metric: str = "distance",
    *,
    gain_linear: Optional[float] = None,
    noise_psd: Optional[float] = None,
    g_all: Optional[FeasibleGraph] = None,
) -> RouteResult:
    """Independent per-user shortest paths under one fixed link metric.

    The distance metric uses the straight-line distance to the user as
    an admissible A* heuristic; hop and inverse-SE run with a zero
    heuristic.  Per-user paths merge into a tree by grafting in id
    order, which keeps each node's first-committed parent.
    """
    g_all, served, unserved, ev = _prepare(
        nodes, users, field, tau, g_all, gain_linear, noise_psd
    )
    if not served:
        return _finalize({}, nodes, field, tau, unserved, gain_linear, noise_psd)
    weight = _metric_weight(metric, ev, nodes)
    paths: Dict[int, Tuple[int, ...]] = {}
    for u in served:
        heuristic = None
        if metric == "distance":
            target = nodes[u]
            heuristic = lambda n: link_distance(nodes[n], target) if n != u else 0.0
        cand = _dijkstra(g_all, u, weight, heuristic=heuristic)
        if cand is None:
            raise Unreachable(f"no path from root to user {u}")
        paths[u] = graft(paths, u, cand)
    return _finalize(paths, nodes, field, tau, unserved, gain_linear, noise_psd)
