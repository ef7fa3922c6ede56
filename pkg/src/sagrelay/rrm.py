"""Closed-form radio resource management on a fixed relay tree.

For a given spanning-tree topology the max-min throughput problem
separates per node, and its KKT conditions solve in closed form:

* every transmitting node spends exactly the jamming PSD sigma_i = tau_i
  required by its farthest outgoing link and puts the rest of its budget
  into data transmission, rho_i = p_max_i - tau_i;
* every node's bandwidth pool splits among the flows it carries in
  proportion to h_u / gamma, which equalizes beta * gamma / h_u across
  those flows and saturates the pool.

The resulting system throughput is min over transmitting nodes of
B_i / sum_{j,u} (h_u / gamma_ij), where h_u is user u's hop count and
gamma_ij the spectral efficiency of edge (i, j) at the optimal transmit
PSD.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple, Union

from .channel import (
    LinkBudget,
    NodeSpec,
    link_distance,
    link_gain,
    noise_psd as channel_noise_psd,
    spectral_efficiency,
    watt_to_dbm,
)
from .errors import InfeasibleLink, ZeroRate
from .secrecy import EveField, min_jamming_closed_form

Edge = Tuple[int, int]


@dataclass
class Allocation:
    """Resource assignment for one routing graph.

    ``bandwidth_hz`` maps (edge, user) to the Hz share beta; ``tx_psd``
    and ``jam_psd`` map node id to rho and sigma in W/Hz;
    ``min_throughput_bps`` is the max-min objective value.
    """

    bandwidth_hz: Dict[Tuple[Edge, int], float]
    tx_psd: Dict[int, float]
    jam_psd: Dict[int, float]
    min_throughput_bps: float

    def to_json(self) -> str:
        node_ids = sorted(set(self.tx_psd) | set(self.jam_psd))
        doc = {
            "version": 1,
            "min_throughput_bps": self.min_throughput_bps,
            "nodes": {
                str(i): {
                    "rho_dbm": watt_to_dbm(self.tx_psd[i]) if self.tx_psd[i] > 0 else None,
                    "sigma_dbm": watt_to_dbm(self.jam_psd[i]) if self.jam_psd[i] > 0 else None,
                }
                for i in node_ids
            },
            "bandwidth_hz": {
                f"{i}-{j}:{u}": hz for ((i, j), u), hz in sorted(self.bandwidth_hz.items())
            },
        }
        return json.dumps(doc, indent=2)


def _used_edges_by_node(graph) -> Dict[int, Dict[Edge, List[int]]]:
    """Map each transmitting node to its used outgoing edges and the
    users flowing over each."""
    out: Dict[int, Dict[Edge, List[int]]] = {}
    for user, path in graph.user_paths.items():
        for edge in path:
            out.setdefault(edge[0], {}).setdefault(edge, []).append(user)
    return out


def node_power_split(
    node: NodeSpec,
    out_links: List[Tuple[float, float, float]],
    field: EveField,
    tau: float,
) -> Tuple[float, float]:
    """(rho, sigma) for one node given its outgoing used links.

    ``out_links`` holds (distance_km, gain_linear, noise_psd) per link.
    The node's jamming PSD is the largest closed-form requirement among
    its links; the transmit PSD takes the remaining budget.
    """
    if not out_links:
        return node.p_max_w, 0.0
    required = 0.0
    for d, g, n0 in out_links:
        lam = field.effective_density(node.layer, node.position, d)
        required = max(
            required, min_jamming_closed_form(d, node.alpha, lam, g, n0, tau)
        )
    budget = node.p_max_w - node.p_min_w
    if required > budget:
        raise InfeasibleLink(node.id, required, budget)
    return node.p_max_w - required, required


def _link_params(
    a: NodeSpec,
    b: NodeSpec,
    gain_linear: Optional[float],
    noise_psd: Optional[float],
) -> Tuple[float, float, float]:
    d = link_distance(a, b)
    g = gain_linear if gain_linear is not None else link_gain(a, b)
    n0 = noise_psd if noise_psd is not None else channel_noise_psd(b, a.layer)
    return d, g, n0


def optimal_power_split(
    graph,
    nodes: Mapping[int, NodeSpec],
    field: EveField,
    tau: float,
    *,
    gain_linear: Optional[float] = None,
    noise_psd: Optional[float] = None,
) -> Tuple[Dict[int, float], Dict[int, float]]:
    """Closed-form (rho*, sigma*) per node for the given tree.

    Nodes without outgoing used edges (users and pure leaves) transmit
    nothing; they are reported as (p_max, 0) for determinism.
    """
    used = _used_edges_by_node(graph)
    rho: Dict[int, float] = {}
    sigma: Dict[int, float] = {}
    for nid in sorted(graph.node_ids):
        node = nodes[nid]
        links = [
            _link_params(node, nodes[j], gain_linear, noise_psd)
            for (_, j) in sorted(used.get(nid, {}))
        ]
        rho[nid], sigma[nid] = node_power_split(node, links, field, tau)
    return rho, sigma


def edge_spectral_efficiencies(
    graph,
    nodes: Mapping[int, NodeSpec],
    rho: Mapping[int, float],
    *,
    gain_linear: Optional[float] = None,
    noise_psd: Optional[float] = None,
) -> Dict[Edge, float]:
    """gamma per used edge at the given transmit PSDs."""
    gammas: Dict[Edge, float] = {}
    for nid, edges in _used_edges_by_node(graph).items():
        for (i, j) in edges:
            d, g, n0 = _link_params(nodes[i], nodes[j], gain_linear, noise_psd)
            budget = LinkBudget(distance_km=d, gain_linear=g, noise_psd=n0, alpha=nodes[i].alpha)
            gammas[(i, j)] = spectral_efficiency(rho[i], budget)
    return gammas


def _node_bandwidth(bandwidth, nid: int, nodes=None) -> float:
    if isinstance(bandwidth, (int, float)):
        return float(bandwidth)
    return float(bandwidth[nid])


def optimal_bandwidth(
    graph,
    gammas: Mapping[Edge, float],
    bandwidth: Union[float, Mapping[int, float]],
) -> Dict[Tuple[Edge, int], float]:
    """Closed-form bandwidth shares beta* per (edge, user).

    Each transmitting node's pool B_i splits in proportion to
    h_u / gamma_ij over the flows it carries, which both saturates the
    pool and equalizes beta * gamma / h_u across the node's flows.
    """
    used = _used_edges_by_node(graph)
    beta: Dict[Tuple[Edge, int], float] = {}
    for nid, edges in used.items():
        weights: Dict[Tuple[Edge, int], float] = {}
        for edge, users in edges.items():
            g = gammas[edge]
            if g <= 0.0:
                raise ZeroRate(f"edge {edge} carries traffic but has zero rate")
            for u in users:
                weights[(edge, u)] = graph.hop_counts[u] / g
        total = sum(weights.values())
        b = _node_bandwidth(bandwidth, nid)
        for key, w in weights.items():
            beta[key] = b * w / total
    return beta


def min_throughput(
    graph,
    gammas: Mapping[Edge, float],
    bandwidth: Union[float, Mapping[int, float]],
) -> float:
    """Max-min objective: min over transmitting nodes of B_i / sum(h_u / gamma)."""
    used = _used_edges_by_node(graph)
    if not used:
        return 0.0
    best = math.inf
    for nid, edges in used.items():
        s = 0.0
        for edge, users in edges.items():
            g = gammas[edge]
            if g <= 0.0:
                raise ZeroRate(f"edge {edge} carries traffic but has zero rate")
            s += sum(graph.hop_counts[u] for u in users) / g
        best = min(best, _node_bandwidth(bandwidth, nid) / s)
    return best


def allocate(
    graph,
    nodes: Mapping[int, NodeSpec],
    field: EveField,
    tau: float,
    *,
    gain_linear: Optional[float] = None,
    noise_psd: Optional[float] = None,
) -> Allocation:
    """Full closed-form allocation for one tree: powers, rates, bandwidth."""
    rho, sigma = optimal_power_split(
        graph, nodes, field, tau, gain_linear=gain_linear, noise_psd=noise_psd
    )
    gammas = edge_spectral_efficiencies(
        graph, nodes, rho, gain_linear=gain_linear, noise_psd=noise_psd
    )
    bandwidth = {nid: nodes[nid].bandwidth_hz for nid in graph.node_ids}
    beta = optimal_bandwidth(graph, gammas, bandwidth)
    eta = min_throughput(graph, gammas, bandwidth)
    return Allocation(
        bandwidth_hz=beta, tx_psd=rho, jam_psd=sigma, min_throughput_bps=eta
    )


def kkt_verify(
    alloc: Allocation,
    graph,
    nodes: Mapping[int, NodeSpec],
    field: EveField,
    tau: float,
    tol: float = 1e-6,
    *,
    gain_linear: Optional[float] = None,
    noise_psd: Optional[float] = None,
) -> List[str]:
    """Check the optimality conditions of an allocation; returns violations.

    Verified per transmitting node: bandwidth pool saturation, flow
    throughput equalization, full power spending rho + sigma = p_max,
    jamming pinned at the farthest-link requirement, and the secure
    connection constraint on every used edge.
    """
    violations: List[str] = []
    used = _used_edges_by_node(graph)
    gammas = edge_spectral_efficiencies(
        graph, nodes, alloc.tx_psd, gain_linear=gain_linear, noise_psd=noise_psd
    )
    for nid in sorted(used):
        node = nodes[nid]
        edges = used[nid]
        b = node.bandwidth_hz
        total = sum(
            alloc.bandwidth_hz[(edge, u)] for edge, users in edges.items() for u in users
        )
        if abs(total - b) > tol * b:
            violations.append(
                f"node {nid}: bandwidth pool not saturated ({total:.6g} of {b:.6g} Hz)"
            )
        rates = [
            alloc.bandwidth_hz[(edge, u)] * gammas[edge] / graph.hop_counts[u]
            for edge, users in edges.items()
            for u in users
        ]
        if rates and (max(rates) - min(rates)) > tol * max(rates):
            violations.append(
                f"node {nid}: flow throughputs not equalized "
                f"(spread {max(rates) - min(rates):.6g} bps)"
            )
        spend = alloc.tx_psd[nid] + alloc.jam_psd[nid]
        if abs(spend - node.p_max_w) > tol * node.p_max_w:
            violations.append(
                f"node {nid}: rho + sigma = {spend:.6g} != p_max {node.p_max_w:.6g}"
            )
        links = [
            _link_params(node, nodes[j], gain_linear, noise_psd)
            for (_, j) in sorted(edges)
        ]
        required = max(
            min_jamming_closed_form(
                d,
                node.alpha,
                field.effective_density(node.layer, node.position, d),
                g,
                n0,
                tau,
            )
            for d, g, n0 in links
        )
        if abs(alloc.jam_psd[nid] - required) > tol * max(required, 1e-30):
            violations.append(
                f"node {nid}: sigma {alloc.jam_psd[nid]:.6g} != farthest-link "
                f"requirement {required:.6g}"
            )
    return violations
