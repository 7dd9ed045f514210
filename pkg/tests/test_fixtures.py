"""Self-checks for the benchmark fixtures: every frozen optimum is
re-derived by an independent oracle."""

from __future__ import annotations

import networkx as nx
import numpy as np
import pytest
from scipy.optimize import linprog

from milp_fixtures import (
    FLOW_CAPS,
    FLOW_COSTS,
    FLOW_NET_SUPPLY,
    FLOW_OPTIMUM,
    PRODUCT_MIX,
    TINY_MODELS,
    solver_script,
)


def test_tiny_model_optima_match_enumeration():
    for model in TINY_MODELS:
        assert model.enumerate_optimum() == model.expected_objective, model.name


def test_tiny_models_stay_within_declared_limits():
    for model in TINY_MODELS:
        assert len(model.upper_bounds) <= 6
        assert all(ub <= 10 for ub in model.upper_bounds)


def test_sabotage_variants_differ_from_truth():
    for model in TINY_MODELS:
        if model.sabotage:
            assert solver_script(model, sabotaged=True) != solver_script(model)


def test_product_mix_lp_oracle_gives_160():
    # independent LP: maximize 30a + 10b s.t. 6a+3b<=40, -3a+b>=0, a<=4
    result = linprog(
        c=[-30.0, -10.0],
        A_ub=np.array([[6.0, 3.0], [3.0, -1.0], [1.0, 0.0]]),
        b_ub=np.array([40.0, 0.0, 4.0]),
        bounds=[(0, None), (0, None)],
        method="highs",
    )
    assert result.status == 0
    assert -result.fun == pytest.approx(PRODUCT_MIX.expected_objective, abs=1e-9)


def test_flow_network_oracle_gives_4():
    # independent route: a dedicated min-cost-flow algorithm on the same
    # data; receiving caps are slack at this flow volume, so the relaxed
    # optimum is a valid lower bound that the capped model also attains
    graph = nx.DiGraph()
    for node, net in enumerate(FLOW_NET_SUPPLY):
        graph.add_node(node, demand=-net)  # networkx: positive demand = sink
    for i in range(8):
        for j in range(8):
            if i != j:
                graph.add_edge(i, j, weight=FLOW_COSTS[i][j], capacity=FLOW_CAPS[i][j])
    cost = nx.cost_of_flow(graph, nx.min_cost_flow(graph))
    assert cost == FLOW_OPTIMUM == 4.0
