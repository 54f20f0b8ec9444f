"""JSON problem files and the built-in problem catalog.

A problem file looks like::

    {
      "schema": 1,
      "name": "ncp-sqrt",
      "n": 1,
      "F": {"builtin": {"name": "square", "params": {"a": 1.0}}},
      "T": {"type": "box", "l": [0.0], "u": "+inf"},
      "x0": [2.0],
      "R": 2.5,
      "certificate": {"mode": "lipschitz", "L": 2.0},
      "solution": [1.0]
    }

``F`` is one of

* ``{"affine": {"q": [...], "M": [[...]]}}`` -- ``F(x) = q + M x``;
* ``{"quadratic": {"c": [...], "g": [[...]], "H": [[[...]]]}}`` --
  ``F_i(x) = c_i + g_i.x + x^T H_i x / 2``;
* ``{"builtin": {"name": ..., "params": {...}}}`` -- see :data:`BUILTINS`.

Infinite bounds are written as the strings ``"-inf"`` / ``"+inf"``, either
for a whole bound or per entry.  ``solution`` is optional and only used as
a test expectation.
"""

import copy
import json
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from .errors import ProblemFormatError
from .inner import random_affine_box
from .monotone import BoxOperator, L1Subdifferential, ZeroOperator
from .newton import GEProblem, OuterConfig

SCHEMA = 1


def _square(params):
    a = float(params.get("a", 1.0))
    return (lambda x: x * x - a,
            lambda x: np.diag(2.0 * x),
            lambda x: _diag_hess(np.full_like(x, 2.0)))


def _exp(params):
    a = float(params.get("a", 1.0))
    return (lambda x: np.exp(x) - a,
            lambda x: np.diag(np.exp(x)),
            lambda x: _diag_hess(np.exp(x)))


def _diag_hess(d):
    n = d.shape[0]
    H = np.zeros((n, n, n))
    H[np.arange(n), np.arange(n), np.arange(n)] = d
    return H


#: Componentwise builtin maps: name -> factory(params) -> (F, J, hess).
BUILTINS = {
    "square": _square,  # F_i = x_i^2 - a
    "exp": _exp,        # F_i = exp(x_i) - a
}


def _num(v, where):
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("+inf", "inf", "infinity", "+infinity"):
            return math.inf
        if s in ("-inf", "-infinity"):
            return -math.inf
        raise ProblemFormatError(f"expected a number, got {v!r}", where)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ProblemFormatError(f"expected a number, got {v!r}", where)
    return float(v)


def _vec(v, n, where, allow_inf=False):
    if not isinstance(v, list):
        raise ProblemFormatError("expected an array", where)
    out = [_num(e, f"{where}[{i}]") for i, e in enumerate(v)]
    if len(out) != n:
        raise ProblemFormatError(f"expected length {n}, got {len(out)}", where)
    if not allow_inf and not all(math.isfinite(e) for e in out):
        raise ProblemFormatError("entries must be finite", where)
    return out


def _mat(v, n, where):
    if not isinstance(v, list) or len(v) != n:
        raise ProblemFormatError(f"expected {n} rows", where)
    return [_vec(row, n, f"{where}[{i}]") for i, row in enumerate(v)]


def _bound(v, n, where):
    if isinstance(v, list):
        return _vec(v, n, where, allow_inf=True)
    return _num(v, where)


def _encode_num(x):
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return x


def _encode(obj):
    if isinstance(obj, float):
        return _encode_num(obj)
    if isinstance(obj, list):
        return [_encode(o) for o in obj]
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    return obj


@dataclass
class ProblemFile:
    """Validated, normalized contents of a problem file (plain Python data)."""

    n: int
    F: Dict[str, Any]
    T: Dict[str, Any]
    x0: list
    R: float
    certificate: Dict[str, Any]
    name: str = ""
    solution: Optional[list] = None

    def to_dict(self) -> dict:
        d = {"schema": SCHEMA, "name": self.name, "n": self.n, "F": self.F, "T": self.T,
             "x0": self.x0, "R": self.R, "certificate": self.certificate}
        if self.solution is not None:
            d["solution"] = self.solution
        return _encode(copy.deepcopy(d))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def operator(self):
        T = self.T
        if T["type"] == "zero":
            return ZeroOperator()
        if T["type"] == "box":
            return BoxOperator(np.asarray(T["l"], dtype=float), np.asarray(T["u"], dtype=float))
        return L1Subdifferential(T["mu"])

    def functions(self):
        (kind, body), = self.F.items()
        if kind == "affine":
            q, M = np.array(body["q"]), np.array(body["M"])
            n = self.n
            return (lambda x: q + M @ x, lambda x: M, lambda x: np.zeros((n, n, n)))
        if kind == "quadratic":
            c, g, H = np.array(body["c"]), np.array(body["g"]), np.array(body["H"])
            return (lambda x: c + g @ x + 0.5 * np.einsum("ijk,j,k->i", H, x, x),
                    lambda x: g + np.einsum("ijk,k->ij", H, x),
                    lambda x: H)
        return BUILTINS[body["name"]](body.get("params", {}))

    def to_problem(self) -> GEProblem:
        F, J, hess = self.functions()
        return GEProblem(F, J, self.operator(), np.array(self.x0), self.R, hess=hess, name=self.name)

    def to_config(self, **overrides) -> OuterConfig:
        c = self.certificate
        kw = {}
        if c.get("mode") == "lipschitz":
            kw["lipschitz_L"] = c["L"]
        elif c.get("mode") == "smale":
            kw["smale_gamma"] = c["gamma"]
        kw.update(overrides)
        return OuterConfig(**kw)

    def affine_data(self):
        """``(M, q)`` for an affine ``F``."""
        (kind, body), = self.F.items()
        if kind != "affine":
            raise ProblemFormatError("oracle needs an affine F", "F")
        return np.array(body["M"]), np.array(body["q"])


def parse_problem(obj) -> ProblemFile:
    """Validate a decoded JSON object; errors name the offending field."""
    if not isinstance(obj, dict):
        raise ProblemFormatError("top level must be an object")
    if obj.get("schema", SCHEMA) != SCHEMA:
        raise ProblemFormatError(f"unsupported schema {obj.get('schema')!r}", "schema")
    for key in ("n", "F", "T", "x0", "R"):
        if key not in obj:
            raise ProblemFormatError("missing", key)
    n = obj["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ProblemFormatError("must be a positive integer", "n")

    Fsrc = obj["F"]
    if not isinstance(Fsrc, dict) or len(Fsrc) != 1:
        raise ProblemFormatError("must be an object with exactly one of affine/quadratic/builtin", "F")
    (kind, body), = Fsrc.items()
    if not isinstance(body, dict):
        raise ProblemFormatError("must be an object", f"F.{kind}")
    if kind == "affine":
        F = {"affine": {"q": _vec(body.get("q"), n, "F.affine.q"),
                        "M": _mat(body.get("M"), n, "F.affine.M")}}
    elif kind == "quadratic":
        H = body.get("H")
        if not isinstance(H, list) or len(H) != n:
            raise ProblemFormatError(f"expected {n} matrices", "F.quadratic.H")
        Hs = [_mat(h, n, f"F.quadratic.H[{i}]") for i, h in enumerate(H)]
        for i, h in enumerate(Hs):
            if np.any(np.array(h) != np.array(h).T):
                raise ProblemFormatError("must be symmetric", f"F.quadratic.H[{i}]")
        F = {"quadratic": {"c": _vec(body.get("c"), n, "F.quadratic.c"),
                           "g": _mat(body.get("g"), n, "F.quadratic.g"), "H": Hs}}
    elif kind == "builtin":
        name = body.get("name")
        if name not in BUILTINS:
            raise ProblemFormatError(f"unknown builtin {name!r}; known: {sorted(BUILTINS)}",
                                     "F.builtin.name")
        params = body.get("params", {})
        if not isinstance(params, dict):
            raise ProblemFormatError("must be an object", "F.builtin.params")
        F = {"builtin": {"name": name,
                         "params": {k: _num(v, f"F.builtin.params.{k}") for k, v in params.items()}}}
    else:
        raise ProblemFormatError(f"unknown kind {kind!r}", "F")

    Tsrc = obj["T"]
    if not isinstance(Tsrc, dict) or Tsrc.get("type") not in ("zero", "box", "l1"):
        raise ProblemFormatError("type must be zero, box or l1", "T.type")
    if Tsrc["type"] == "zero":
        T = {"type": "zero"}
    elif Tsrc["type"] == "box":
        T = {"type": "box", "l": _bound(Tsrc.get("l", 0.0), n, "T.l"),
             "u": _bound(Tsrc.get("u", "+inf"), n, "T.u")}
        lo, up = np.broadcast_to(T["l"], (n,)), np.broadcast_to(T["u"], (n,))
        if np.any(lo > up):
            raise ProblemFormatError("need l <= u componentwise", "T")
    else:
        mu = _num(Tsrc.get("mu"), "T.mu")
        if not mu > 0:
            raise ProblemFormatError("must be positive", "T.mu")
        T = {"type": "l1", "mu": mu}

    x0 = _vec(obj["x0"], n, "x0")
    R = _num(obj["R"], "R")
    if not R > 0:
        raise ProblemFormatError("must be positive", "R")

    csrc = obj.get("certificate", {"mode": "none"})
    if not isinstance(csrc, dict):
        raise ProblemFormatError("must be an object", "certificate")
    mode = csrc.get("mode", "none")
    if mode == "lipschitz":
        L = _num(csrc.get("L"), "certificate.L")
        if not L > 0:
            raise ProblemFormatError("must be positive", "certificate.L")
        cert = {"mode": mode, "L": L}
    elif mode == "smale":
        g = _num(csrc.get("gamma"), "certificate.gamma")
        if not g > 0:
            raise ProblemFormatError("must be positive", "certificate.gamma")
        cert = {"mode": mode, "gamma": g}
    elif mode == "none":
        cert = {"mode": "none"}
    else:
        raise ProblemFormatError(f"unknown mode {mode!r}", "certificate.mode")

    sol = obj.get("solution")
    if sol is not None:
        sol = _vec(sol, n, "solution")
    name = obj.get("name", "")
    if not isinstance(name, str):
        raise ProblemFormatError("must be a string", "name")
    return ProblemFile(n, F, T, x0, R, cert, name, sol)


def loads_problem(text: str) -> ProblemFile:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}")
    return parse_problem(obj)


def load_problem(path) -> ProblemFile:
    with open(path, encoding="utf-8") as fh:
        return loads_problem(fh.read())


# -- catalog ---------------------------------------------------------------

def _ncp_sqrt():
    return {"name": "ncp-sqrt", "n": 1,
            "F": {"builtin": {"name": "square", "params": {"a": 1.0}}},
            "T": {"type": "box", "l": [0.0], "u": "+inf"},
            "x0": [2.0], "R": 2.5,
            "certificate": {"mode": "lipschitz", "L": 2.0},
            "solution": [1.0]}


def _exp_root():
    return {"name": "exp-root", "n": 1,
            "F": {"builtin": {"name": "exp", "params": {"a": 1.1}}},
            "T": {"type": "zero"},
            "x0": [0.0], "R": 2.5,
            "certificate": {"mode": "smale", "gamma": 0.5},
            "solution": [math.log(1.1)]}


def _qp_kkt_2d():
    # min x^T Q x / 2 + c^T x over [0,1]^2; KKT point (0.75, 0), x2 at its lower bound
    return {"name": "qp-kkt-2d", "n": 2,
            "F": {"affine": {"q": [-1.5, 1.0], "M": [[2.0, 1.0], [1.0, 2.0]]}},
            "T": {"type": "box", "l": [0.0, 0.0], "u": [1.0, 1.0]},
            "x0": [0.7, 0.1], "R": 2.0,
            "certificate": {"mode": "lipschitz", "L": 1.0},
            "solution": [0.75, 0.0]}


def _l1_prox_ge():
    # solution (1, 0): row 1 gives 2*1 - 3 + mu = 0, row 2 needs |-0.5 + 0.2| <= mu
    return {"name": "l1-prox-ge", "n": 2,
            "F": {"affine": {"q": [-3.0, 0.2], "M": [[2.0, 0.5], [-0.5, 1.0]]}},
            "T": {"type": "l1", "mu": 1.0},
            "x0": [0.9, 0.1], "R": 2.0,
            "certificate": {"mode": "lipschitz", "L": 1.0},
            "solution": [1.0, 0.0]}


def _affine_box_nd(n=6, seed=0):
    n, seed = int(n), int(seed)
    p = random_affine_box(n, np.random.default_rng(seed))
    lo, up = p.T.bounds(n)
    return {"name": f"affine-box-nd-{n}-{seed}", "n": n,
            "F": {"affine": {"q": p.q.tolist(), "M": p.M.tolist()}},
            "T": {"type": "box", "l": lo.tolist(), "u": up.tolist()},
            "x0": np.clip(np.zeros(n), lo, up).tolist(), "R": 1.0,
            "certificate": {"mode": "none"}}


CATALOG = {
    "ncp-sqrt": _ncp_sqrt,
    "exp-root": _exp_root,
    "qp-kkt-2d": _qp_kkt_2d,
    "l1-prox-ge": _l1_prox_ge,
    "affine-box-nd": _affine_box_nd,
}


def catalog_problem(name: str, **params) -> ProblemFile:
    if name not in CATALOG:
        raise KeyError(f"unknown catalog problem {name!r}; known: {sorted(CATALOG)}")
    return parse_problem(_encode(CATALOG[name](**params)))
