"""Problem files: JSON with 1-based blocks and polynomials in the parser grammar.

::

    {"n": 3, "blocks": [[1, 2], [2, 3]],
     "objective": ["x1^2 + x2", "x3^4"],      # or one string, split over blocks
     "A": [[1, 1, 1]], "b": [1], "C": [], "d": []}
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .poly import (LinearConstraints, PolynomialSyntaxError, ProblemInstance, SparsityPattern,
                   decompose_objective, detect_pattern, parse_polynomial)


class ProblemFileError(ValueError):
    pass


def _matrix(data, n: int, key: str):
    if data is None or len(data) == 0:
        return None
    M = np.asarray(data, dtype=float)
    if M.ndim != 2 or M.shape[1] != n:
        raise ProblemFileError(f"{key} must be a list of rows of length {n}")
    return M


def instance_from_dict(data: dict, name: str | None = None) -> ProblemInstance:
    try:
        n = int(data["n"])
    except (KeyError, TypeError, ValueError) as err:
        raise ProblemFileError("problem needs an integer 'n'") from err
    obj = data.get("objective")
    if obj is None or obj == "" or obj == []:
        raise ProblemFileError("problem has an empty objective")
    try:
        if isinstance(obj, str):
            f = parse_polynomial(obj, n)
            pattern = (SparsityPattern.from_one_based(n, data["blocks"]) if data.get("blocks")
                       else detect_pattern(f))
            pieces = decompose_objective(f, pattern)
        else:
            pieces = [parse_polynomial(s, n) for s in obj]
            if not data.get("blocks"):
                raise ProblemFileError("per-block objectives need 'blocks'")
            pattern = SparsityPattern.from_one_based(n, data["blocks"])
    except PolynomialSyntaxError as err:
        raise ProblemFileError(f"objective: {err}") from err
    A, C = _matrix(data.get("A"), n, "A"), _matrix(data.get("C"), n, "C")
    cons = LinearConstraints.build(n, A, data.get("b") if A is not None else None,
                                   C, data.get("d") if C is not None else None)
    return ProblemInstance(pattern, tuple(pieces), cons, name or data.get("name", ""),
                           dict(data.get("meta", {})))


def instance_to_dict(inst: ProblemInstance) -> dict:
    cons = inst.constraints
    return {
        "name": inst.name,
        "n": inst.n,
        "blocks": inst.pattern.one_based(),
        "objective": [str(f) for f in inst.objectives],
        "A": cons.A.tolist(), "b": cons.b.tolist(),
        "C": cons.C.tolist(), "d": cons.d.tolist(),
        "meta": _jsonable(inst.meta),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def load_problem(path) -> ProblemInstance:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ProblemFileError(f"{path}: invalid JSON ({err})") from err
    return instance_from_dict(data, data.get("name") or path.stem)


def save_problem(inst: ProblemInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")
