"""Source-compatible subset of the Gurobi Python scripting interface.

Generated solver scripts import ``gurobipy``; putting this package on
PYTHONPATH (the sandbox executor does so via its solver-paths setting)
lets those scripts run against an open-source MILP backend instead of the
licensed product. The subset is frozen to what generated MILP scripts
actually use: linear models built from Model/addVar(s)/addConstr(s)/
quicksum/setObjective/optimize, plus status, objective, and variable
value attributes. Anything outside the subset raises
UnsupportedFeatureError loudly rather than silently diverging; quadratic
terms in particular are rejected at expression-build time.

Termination log lines mirror the phrases the execution-log parser
matches ("Optimal solution found", "Model is infeasible", "Model is
unbounded"); no further log fidelity is attempted.
"""

from __future__ import annotations

import itertools
from typing import Any, Iterable, Iterator

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

__all__ = ["GRB", "GurobiError", "LinExpr", "Model", "UnsupportedFeatureError", "quicksum"]


class GurobiError(Exception):
    """Base error, named like the product's for script compatibility."""


class UnsupportedFeatureError(GurobiError):
    """The script used interface surface outside the supported subset."""


class GRB:
    MINIMIZE = 1
    MAXIMIZE = -1

    LOADED = 1
    OPTIMAL = 2
    INFEASIBLE = 3
    INF_OR_UNBD = 4
    UNBOUNDED = 5

    CONTINUOUS = "C"
    BINARY = "B"
    INTEGER = "I"

    INFINITY = 1e100


_STATUS_WORDS = {
    GRB.OPTIMAL: "Optimal solution found",
    GRB.INFEASIBLE: "Model is infeasible",
    GRB.UNBOUNDED: "Model is unbounded",
}


class Var:
    """One decision variable; hashable by identity, combinable into LinExpr."""

    __slots__ = ("_model", "_index", "lb", "ub", "vtype", "_name")

    def __init__(self, model: "Model", index: int, lb: float, ub: float, vtype: str, name: str):
        self._model = model
        self._index = index
        self.lb = lb
        self.ub = ub
        self.vtype = vtype
        self._name = name

    @property
    def VarName(self) -> str:
        return self._name

    varName = VarName

    @property
    def X(self) -> float:
        return self._model._var_value(self._index)

    x = X

    def _expr(self) -> "LinExpr":
        return LinExpr({self._index: 1.0})

    def __add__(self, other):
        return self._expr() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self._expr() - other

    def __rsub__(self, other):
        return (-1.0) * self._expr() + other

    def __neg__(self):
        return (-1.0) * self._expr()

    def __mul__(self, other):
        if isinstance(other, (Var, LinExpr)):
            raise UnsupportedFeatureError("quadratic terms are not supported")
        return self._expr() * other

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._expr() / other

    def __le__(self, rhs):
        return self._expr() <= rhs

    def __ge__(self, rhs):
        return self._expr() >= rhs

    def __eq__(self, rhs):  # type: ignore[override]
        return self._expr() == rhs

    __hash__ = object.__hash__

    def __repr__(self) -> str:
        return f"<Var {self._name or self._index}>"


class LinExpr:
    """Linear expression: sparse coefficients over variable indices + constant."""

    __slots__ = ("coeffs", "constant")

    def __init__(self, coeffs: dict[int, float] | None = None, constant: float = 0.0):
        self.coeffs = dict(coeffs or {})
        self.constant = constant

    @staticmethod
    def _as_expr(value) -> "LinExpr":
        if isinstance(value, LinExpr):
            return value
        if isinstance(value, Var):
            return value._expr()
        if isinstance(value, (int, float, np.integer, np.floating)):
            return LinExpr({}, float(value))
        raise UnsupportedFeatureError(f"cannot use {type(value).__name__} in a linear expression")

    def __add__(self, other):
        rhs = self._as_expr(other)
        out = LinExpr(self.coeffs, self.constant + rhs.constant)
        for idx, coef in rhs.coeffs.items():
            out.coeffs[idx] = out.coeffs.get(idx, 0.0) + coef
        return out

    __radd__ = __add__

    def __sub__(self, other):
        return self + (self._as_expr(other) * -1.0)

    def __rsub__(self, other):
        return (self * -1.0) + other

    def __neg__(self):
        return self * -1.0

    def __mul__(self, other):
        if isinstance(other, (Var, LinExpr)):
            raise UnsupportedFeatureError("quadratic terms are not supported")
        factor = float(other)
        return LinExpr(
            {idx: coef * factor for idx, coef in self.coeffs.items()}, self.constant * factor
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1.0 / float(other))

    def __le__(self, rhs):
        return TempConstr("<", self - self._as_expr(rhs))

    def __ge__(self, rhs):
        return TempConstr(">", self - self._as_expr(rhs))

    def __eq__(self, rhs):  # type: ignore[override]
        return TempConstr("=", self - self._as_expr(rhs))

    __hash__ = object.__hash__

    def getValue(self) -> float:
        raise UnsupportedFeatureError("LinExpr.getValue is outside the supported subset")


class TempConstr:
    """A comparison between linear expressions, awaiting addConstr."""

    __slots__ = ("sense", "expr")

    def __init__(self, sense: str, expr: LinExpr):
        self.sense = sense  # "<", ">", "=" on (expr REL 0)
        self.expr = expr


def quicksum(terms: Iterable) -> LinExpr:
    total = LinExpr()
    for term in terms:
        total = total + term
    return total


class tupledict(dict):
    """Index-family container returned by addVars; aggregation helpers are
    outside the frozen subset and fail loudly."""

    def sum(self, *pattern):
        raise UnsupportedFeatureError("tupledict.sum is outside the supported subset; use quicksum")

    def select(self, *pattern):
        raise UnsupportedFeatureError("tupledict.select is outside the supported subset")

    def prod(self, coeff, *pattern):
        raise UnsupportedFeatureError("tupledict.prod is outside the supported subset")


class _Params:
    """Parameter sink honoring the handful of knobs scripts actually set."""

    _SUPPORTED = {"outputflag": "output_flag", "timelimit": "time_limit"}

    def __init__(self, model: "Model"):
        object.__setattr__(self, "_model", model)

    def __setattr__(self, name: str, value) -> None:
        key = self._SUPPORTED.get(name.lower())
        if key is None:
            raise UnsupportedFeatureError(f"parameter {name!r} is outside the supported subset")
        setattr(self._model, key, value)

    def __getattr__(self, name: str):
        key = self._SUPPORTED.get(name.lower())
        if key is None:
            raise UnsupportedFeatureError(f"parameter {name!r} is outside the supported subset")
        return getattr(self._model, key)


# product API surface that exists but is deliberately out of subset: fail
# with a nameable error instead of AttributeError so scripts diagnose fast
_EXCLUDED_MODEL_ATTRS = {
    "addQConstr",
    "addGenConstrAbs",
    "addGenConstrAnd",
    "addGenConstrIndicator",
    "addGenConstrMax",
    "addGenConstrMin",
    "addGenConstrOr",
    "addGenConstrPWL",
    "addMVar",
    "addSOS",
    "computeIIS",
    "feasRelaxS",
    "getRow",
    "presolve",
    "relax",
    "setObjectiveN",
    "setPWLObj",
}


class Model:
    def __init__(self, name: str = "", env: Any = None):
        self.ModelName = name
        self._vars: list[Var] = []
        self._constrs: list[tuple[str, LinExpr, str]] = []  # (sense, expr, name)
        self._objective = LinExpr()
        self._sense = GRB.MINIMIZE
        self._status = GRB.LOADED
        self._obj_val: float | None = None
        self._solution: np.ndarray | None = None
        self.output_flag = 1
        self.time_limit: float | None = None

    # ------------------------------------------------------------ construction

    def addVar(
        self,
        lb: float = 0.0,
        ub: float = GRB.INFINITY,
        obj: float = 0.0,
        vtype: str = GRB.CONTINUOUS,
        name: str = "",
    ) -> Var:
        if obj:
            raise UnsupportedFeatureError(
                "addVar(obj=...) is outside the supported subset; use setObjective"
            )
        if vtype not in (GRB.CONTINUOUS, GRB.INTEGER, GRB.BINARY):
            raise UnsupportedFeatureError(f"variable type {vtype!r} is not supported")
        if vtype == GRB.BINARY:
            lb, ub = 0.0, 1.0
        var = Var(self, len(self._vars), float(lb), float(ub), vtype, name)
        self._vars.append(var)
        return var

    def addVars(
        self,
        *indices,
        lb: float = 0.0,
        ub: float = GRB.INFINITY,
        obj: float = 0.0,
        vtype: str = GRB.CONTINUOUS,
        name: str = "",
    ) -> tupledict:
        """Create a family of variables over ints or iterables of keys."""
        if not indices:
            raise UnsupportedFeatureError("addVars requires at least one index set")
        axes = []
        for index in indices:
            if isinstance(index, (int, np.integer)):
                axes.append(range(int(index)))
            else:
                axes.append(list(index))
        family = tupledict()
        for key in itertools.product(*axes):
            flat_key = key[0] if len(key) == 1 else key
            label = f"{name}[{','.join(str(k) for k in key)}]" if name else ""
            family[flat_key] = self.addVar(lb=lb, ub=ub, obj=obj, vtype=vtype, name=label)
        return family

    def addConstr(self, constr: TempConstr, name: str = "") -> None:
        if not isinstance(constr, TempConstr):
            raise UnsupportedFeatureError(
                "addConstr expects a linear comparison (<=, >=, ==)"
            )
        self._constrs.append((constr.sense, constr.expr, name))

    def addConstrs(self, generator: Iterator[TempConstr], name: str = "") -> None:
        count = 0
        for constr in generator:
            self.addConstr(constr, name=f"{name}[{count}]" if name else "")
            count += 1

    def setObjective(self, expr, sense: int = GRB.MINIMIZE) -> None:
        self._objective = LinExpr._as_expr(expr)
        self._sense = sense

    def setParam(self, name: str, value) -> None:
        setattr(self.Params, name, value)

    @property
    def Params(self) -> _Params:
        return _Params(self)

    def update(self) -> None:
        pass

    # ----------------------------------------------------------------- solving

    def optimize(self) -> None:
        n = len(self._vars)
        if n == 0:
            raise GurobiError("model has no variables")
        cost = np.zeros(n)
        for idx, coef in self._objective.coeffs.items():
            cost[idx] = coef
        sign = 1.0 if self._sense == GRB.MINIMIZE else -1.0

        constraints = []
        nonzeros = 0
        for sense, expr, _ in self._constrs:
            row = np.zeros(n)
            for idx, coef in expr.coeffs.items():
                row[idx] = coef
            nonzeros += sum(1 for c in row if c)
            bound = -expr.constant
            if sense == "<":
                constraints.append(LinearConstraint(row, -np.inf, bound))
            elif sense == ">":
                constraints.append(LinearConstraint(row, bound, np.inf))
            else:
                constraints.append(LinearConstraint(row, bound, bound))

        lower = np.array([v.lb if v.lb > -1e30 else -np.inf for v in self._vars])
        upper = np.array([v.ub if v.ub < 1e30 else np.inf for v in self._vars])
        integrality = np.array(
            [1 if v.vtype in (GRB.INTEGER, GRB.BINARY) else 0 for v in self._vars]
        )
        options = {}
        if self.time_limit is not None:
            options["time_limit"] = float(self.time_limit)
        result = milp(
            sign * cost,
            constraints=constraints or None,
            integrality=integrality,
            bounds=Bounds(lower, upper),
            options=options,
        )
        self._status = {
            0: GRB.OPTIMAL,
            1: GRB.LOADED,  # iteration/time limit: treated as unsolved
            2: GRB.INFEASIBLE,
            3: GRB.UNBOUNDED,
        }.get(result.status, GRB.INF_OR_UNBD)
        if self._status == GRB.OPTIMAL:
            self._solution = np.asarray(result.x, dtype=float)
            self._obj_val = float(sign * result.fun) + self._objective.constant
        else:
            self._solution = None
            self._obj_val = None
        self._emit_log(len(self._constrs), n, nonzeros)

    def _emit_log(self, rows: int, columns: int, nonzeros: int) -> None:
        if not self.output_flag:
            return
        print(f"Optimize a model with {rows} rows, {columns} columns and {nonzeros} nonzeros")
        print(_STATUS_WORDS.get(self._status, "Solve was not completed"))
        if self._status == GRB.OPTIMAL:
            print(f"Best objective {self._obj_val!r}")

    # -------------------------------------------------------------- attributes

    @property
    def Status(self) -> int:
        return self._status

    status = Status

    @property
    def ObjVal(self) -> float:
        if self._obj_val is None:
            raise AttributeError("Unable to retrieve attribute 'ObjVal'")
        return self._obj_val

    objVal = ObjVal

    @property
    def NumVars(self) -> int:
        return len(self._vars)

    @property
    def NumConstrs(self) -> int:
        return len(self._constrs)

    def getVars(self) -> list[Var]:
        return list(self._vars)

    def _var_value(self, index: int) -> float:
        if self._solution is None:
            raise AttributeError("Unable to retrieve attribute 'X'")
        return float(self._solution[index])

    def __getattr__(self, name: str):
        if name in _EXCLUDED_MODEL_ATTRS:
            raise UnsupportedFeatureError(f"Model.{name} is outside the supported subset")
        raise AttributeError(f"'Model' object has no attribute {name!r}")
