"""Benchmark fixture: tiny integer models plus two anchor instances.

Each tiny model is defined once as coefficient data; the solver script
embedded in the mock completions is generated from the same data, and the
test-side enumeration oracle recomputes the optimum from it as well, so
ground truths can never drift from the scripts.

``expected_objective`` values are frozen from the enumeration oracle;
tests recompute and compare.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field


@dataclass(frozen=True)
class TinyMilp:
    """max/min c.x s.t. rows op b, integer x with 0 <= x <= ub."""

    name: str
    objective: tuple[float, ...]
    maximize: bool
    constraints: tuple[tuple[tuple[float, ...], str, float], ...]  # (row, op, rhs)
    upper_bounds: tuple[int, ...]
    expected_objective: float
    question: str = ""
    class_reply: str = "['Production Planning Problem']"
    sabotage: str | None = None  # None | "crash" | "infeasible" | "wrong"
    integer_vars: bool = True
    extra_truths: tuple[float, ...] = ()

    def enumerate_optimum(self) -> float | None:
        """Brute-force oracle over the full integer grid; None if infeasible."""
        best: float | None = None
        ranges = [range(ub + 1) for ub in self.upper_bounds]
        for point in itertools.product(*ranges):
            if not self._feasible(point):
                continue
            value = sum(c * x for c, x in zip(self.objective, point))
            if best is None or (value > best if self.maximize else value < best):
                best = value
        return best

    def _feasible(self, point: tuple[int, ...]) -> bool:
        for row, op, rhs in self.constraints:
            lhs = sum(a * x for a, x in zip(row, point))
            ok = lhs <= rhs + 1e-9 if op == "<=" else lhs >= rhs - 1e-9 if op == ">=" else abs(lhs - rhs) <= 1e-9
            if not ok:
                return False
        return True


def solver_script(model: TinyMilp, *, sabotaged: bool = False) -> str:
    """Generate the gurobipy script for a fixture model (or its sabotage)."""
    if sabotaged:
        if model.sabotage == "crash":
            return "import gurobipy as gp\nfrom gurobipy import GRB\n\nprint(undefined_name)\n"
        if model.sabotage == "infeasible":
            return (
                "import gurobipy as gp\n"
                "from gurobipy import GRB\n\n"
                'model = gp.Model("broken")\n'
                "x = model.addVar(ub=1, vtype=GRB.INTEGER)\n"
                "model.addConstr(x >= 1)\n"
                "model.addConstr(x <= 0)\n"
                "model.setObjective(x, GRB.MINIMIZE)\n"
                "model.optimize()\n"
            )
        # "wrong": drop every constraint but the first: optimum shifts
        return _script_from_data(model, drop_tail_constraints=True)
    return _script_from_data(model)


def _script_from_data(model: TinyMilp, *, drop_tail_constraints: bool = False) -> str:
    vtype = "GRB.INTEGER" if model.integer_vars else "GRB.CONTINUOUS"
    lines = [
        "import gurobipy as gp",
        "from gurobipy import GRB",
        "",
        f'model = gp.Model("{model.name}")',
    ]
    for i, ub in enumerate(model.upper_bounds):
        lines.append(f'x{i} = model.addVar(ub={ub}, vtype={vtype}, name="x{i}")')
    objective = " + ".join(f"{c}*x{i}" for i, c in enumerate(model.objective))
    sense = "GRB.MAXIMIZE" if model.maximize else "GRB.MINIMIZE"
    lines.append(f"model.setObjective({objective}, {sense})")
    constraints = model.constraints[:1] if drop_tail_constraints else model.constraints
    for row, op, rhs in constraints:
        terms = " + ".join(f"{a}*x{i}" for i, a in enumerate(row) if a)
        lines.append(f"model.addConstr({terms} {op} {rhs})")
    lines += [
        "model.optimize()",
        "if model.Status == GRB.OPTIMAL:",
        '    print("objective:", model.ObjVal)',
        "",
    ]
    return "\n".join(lines)


def completion_with_code(code: str, preamble: str = "Formulating the model.") -> str:
    return f"{preamble}\n\n```python\n{code}```\n"


NO_NEW_CODE_REPLY = (
    "The previous code is correct; the solver output matches the expected "
    "result, so no new code block is needed."
)


TINY_MODELS: list[TinyMilp] = [
    TinyMilp(
        name="tiny-01",
        objective=(5, 4, 3),
        maximize=True,
        constraints=(((2, 3, 1), "<=", 5),),
        upper_bounds=(1, 1, 1),
        expected_objective=9.0,
        class_reply="['Knapsack']",
    ),
    TinyMilp(
        name="tiny-02",
        objective=(3, 2),
        maximize=True,
        constraints=(((1, 1), "<=", 4), ((1, 0), "<=", 2)),
        upper_bounds=(4, 4),
        expected_objective=10.0,
        sabotage="crash",
    ),
    TinyMilp(
        name="tiny-03",
        objective=(4, 3),
        maximize=False,
        constraints=(((1, 2), ">=", 6), ((3, 1), ">=", 6)),
        upper_bounds=(10, 10),
        expected_objective=13.0,
    ),
    TinyMilp(
        name="tiny-04",
        objective=(7, 2, 3),
        maximize=True,
        constraints=(((1, 1, 1), "<=", 6), ((1, -1, 0), "<=", 2)),
        upper_bounds=(5, 5, 5),
        expected_objective=32.0,
        sabotage="infeasible",
    ),
    TinyMilp(
        name="tiny-05",
        objective=(2, 3, 4, 1),
        maximize=True,
        constraints=(((1, 1, 1, 1), "<=", 7), ((2, 0, 1, 0), "<=", 5)),
        upper_bounds=(4, 4, 4, 4),
        expected_objective=25.0,
    ),
    TinyMilp(
        name="tiny-06",
        objective=(1, 1),
        maximize=False,
        constraints=(((2, 1), ">=", 7), ((1, 3), ">=", 9)),
        upper_bounds=(10, 10),
        expected_objective=5.0,
        sabotage="wrong",
    ),
    TinyMilp(
        name="tiny-07",
        objective=(10, 6, 4),
        maximize=True,
        constraints=(
            ((1, 1, 1), "<=", 10),
            ((10, 4, 5), "<=", 60),
            ((2, 2, 6), "<=", 30),
        ),
        upper_bounds=(10, 10, 10),
        expected_objective=72.0,
    ),
    TinyMilp(
        name="tiny-08",
        objective=(4, 3),
        maximize=True,
        constraints=(((2, 1), "<=", 10), ((1, 3), "<=", 15)),
        upper_bounds=(8, 8),
        expected_objective=24.0,
    ),
    TinyMilp(
        name="tiny-09",
        objective=(5, 4, 6),
        maximize=False,
        constraints=(
            ((1, 1, 1), ">=", 8),
            ((1, 0, 0), "<=", 4),
            ((0, 1, 0), "<=", 4),
        ),
        upper_bounds=(4, 4, 4),
        expected_objective=36.0,
    ),
    TinyMilp(
        name="tiny-10",
        objective=(3, 5, 1, 2),
        maximize=True,
        constraints=(
            ((1, 2, 0, 1), "<=", 9),
            ((0, 1, 1, 0), "<=", 5),
            ((1, 0, 0, 1), ">=", 2),
        ),
        upper_bounds=(6, 6, 6, 6),
        expected_objective=29.0,
    ),
]

for model in TINY_MODELS:
    object.__setattr__(
        model,
        "question",
        f"Instance {model.name}: choose integer quantities maximizing or minimizing "
        f"the stated objective subject to the listed resource constraints.",
    )


# Anchor A: the product-mix question whose corrected optimum is 160 (the
# continuous reading; the 146.667 label is the other accepted reading).
PRODUCT_MIX = TinyMilp(
    name="anchor-product-mix",
    objective=(30, 10),
    maximize=True,
    constraints=(((6, 3), "<=", 40), ((-3, 1), ">=", 0), ((1, 0), "<=", 4)),
    upper_bounds=(4, 14),
    expected_objective=160.0,
    question=(
        "Instance anchor-product-mix: a company makes products A and B with "
        "profits 30 and 10 per unit. Production takes 6 hours per unit of A "
        "and 3 hours per unit of B within a 40 hour week. At least three "
        "units of B must be made per unit of A, and at most four units of A "
        "can be stored per week. Maximize weekly profit."
    ),
    class_reply="['Profit Maximization Problem']",
    integer_vars=False,
    extra_truths=(146.667,),
)

# Anchor B: the eight-city minimum-cost flow whose corrected optimum is 4.
FLOW_COSTS = [
    [0, 3, 2, 2, 2, 3, 3, 1],
    [1, 0, 2, 3, 1, 2, 1, 2],
    [2, 2, 0, 3, 3, 2, 1, 2],
    [1, 2, 1, 0, 3, 3, 2, 3],
    [3, 2, 1, 1, 0, 3, 2, 2],
    [1, 2, 1, 2, 1, 0, 2, 1],
    [2, 3, 1, 1, 1, 1, 0, 1],
    [1, 1, 3, 1, 2, 3, 2, 0],
]
FLOW_CAPS = [
    [0, 7, 7, 7, 7, 8, 8, 8],
    [8, 0, 7, 8, 8, 7, 7, 9],
    [8, 7, 0, 7, 7, 7, 9, 7],
    [7, 7, 9, 0, 8, 7, 7, 9],
    [9, 7, 8, 9, 0, 7, 7, 7],
    [7, 8, 9, 9, 8, 0, 9, 8],
    [9, 8, 7, 8, 8, 7, 0, 8],
    [9, 8, 7, 9, 9, 8, 8, 0],
]
FLOW_NET_SUPPLY = [-1, 0, 1, -2, 0, 0, 2, 0]  # positive = extra supply
FLOW_RECV_CAPS = [19, 15, 15, 14, 15, 15, 14, 16]
FLOW_OPTIMUM = 4.0


def flow_script() -> str:
    return f"""import gurobipy as gp
from gurobipy import GRB

costs = {FLOW_COSTS}
caps = {FLOW_CAPS}
supply = {FLOW_NET_SUPPLY}
recv = {FLOW_RECV_CAPS}
n = 8

model = gp.Model("medical-supplies")
x = {{}}
for i in range(n):
    for j in range(n):
        if i != j:
            x[i, j] = model.addVar(ub=caps[i][j], vtype=GRB.INTEGER, name=f"x{{i}}_{{j}}")

model.setObjective(
    gp.quicksum(costs[i][j] * x[i, j] for i in range(n) for j in range(n) if i != j),
    GRB.MINIMIZE,
)
for u in range(n):
    outflow = gp.quicksum(x[u, j] for j in range(n) if j != u)
    inflow = gp.quicksum(x[j, u] for j in range(n) if j != u)
    model.addConstr(outflow - inflow == supply[u])
    model.addConstr(inflow <= recv[u])

model.optimize()
if model.Status == GRB.OPTIMAL:
    print("total cost:", model.ObjVal)
"""


FLOW_QUESTION = (
    "Instance anchor-flow: distribute emergency medical supplies between "
    "eight cities at minimum transportation cost, meeting each city's net "
    "supply or demand without exceeding route or receiving capacities."
)
FLOW_CLASS_REPLY = "['Minimum Cost Flow Problem']"


@dataclass
class FixtureInstance:
    """One benchmark record plus its scripted per-turn mock replies."""

    instance_id: str
    question: str
    ground_truths: tuple[float, ...]
    class_reply: str
    turn_replies: list = field(default_factory=list)


def build_fixture_instances(turns: int) -> list[FixtureInstance]:
    """The 10 tiny instances with 3 turn-0 sabotages repaired at turn 1."""
    fixtures = []
    for model in TINY_MODELS:
        good = completion_with_code(solver_script(model))
        first = (
            completion_with_code(solver_script(model, sabotaged=True))
            if model.sabotage
            else good
        )
        replies = [model.class_reply, first]
        replies += [good if model.sabotage else NO_NEW_CODE_REPLY]
        replies += [NO_NEW_CODE_REPLY] * max(0, turns - 2)
        fixtures.append(
            FixtureInstance(
                instance_id=model.name,
                question=model.question,
                ground_truths=(model.expected_objective,) + model.extra_truths,
                class_reply=model.class_reply,
                turn_replies=replies,
            )
        )
    return fixtures


def build_anchor_instances(turns: int) -> list[FixtureInstance]:
    anchors = [
        FixtureInstance(
            instance_id=PRODUCT_MIX.name,
            question=PRODUCT_MIX.question,
            ground_truths=(PRODUCT_MIX.extra_truths[0], PRODUCT_MIX.expected_objective),
            class_reply=PRODUCT_MIX.class_reply,
            turn_replies=[
                PRODUCT_MIX.class_reply,
                completion_with_code(solver_script(PRODUCT_MIX)),
            ]
            + [NO_NEW_CODE_REPLY] * max(0, turns - 1),
        ),
        FixtureInstance(
            instance_id="anchor-flow",
            question=FLOW_QUESTION,
            ground_truths=(FLOW_OPTIMUM,),
            class_reply=FLOW_CLASS_REPLY,
            turn_replies=[FLOW_CLASS_REPLY, completion_with_code(flow_script())]
            + [NO_NEW_CODE_REPLY] * max(0, turns - 1),
        ),
    ]
    return anchors
