"""JSON state-set files.

Layout::

    {
      "dims": [2, 2],
      "basis_order": "big-endian",
      "release_order": [1, 2],
      "states": [
        {"label": "0", "kind": "pure", "amplitudes_re": [...], "amplitudes_im": [...]},
        {"label": "2", "kind": "mixed", "matrix_re": [[...]], "matrix_im": [[...]]}
      ]
    }

Amplitude index k enumerates basis states big-endian over ``dims``: the
first subsystem is the most significant digit, so for two qubits the order
is |00>, |01>, |10>, |11>. ``*_im`` arrays may be omitted (all zero);
``release_order`` defaults to [1, 2].
"""
from __future__ import annotations

import json
from math import prod
from pathlib import Path
from typing import Any

import numpy as np

from .cloneability import StateSet
from .errors import InvalidState, OrthocloneError, StateFileError
from .qlinalg import EPS_EQ, DensityMatrix, PureState

BASIS_ORDER = "big-endian"


def _real_list(obj, path: str, length: int) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != length:
        raise StateFileError(path, f"expected a list of {length} numbers")
    for i, x in enumerate(obj):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise StateFileError(f"{path}[{i}]", f"expected a number, got {x!r}")
    return np.array(obj, dtype=float)


def _real_matrix(obj, path: str, n: int) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != n:
        raise StateFileError(path, f"expected {n} rows")
    return np.array([_real_list(r, f"{path}[{i}]", n) for i, r in enumerate(obj)])


def parse_state_set(doc: Any) -> StateSet:
    if not isinstance(doc, dict):
        raise StateFileError("$", "top level must be an object")
    dims = doc.get("dims")
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and not isinstance(d, bool) and d > 0 for d in dims):
        raise StateFileError("dims", "expected a nonempty list of positive integers")
    order = doc.get("basis_order", BASIS_ORDER)
    if order != BASIS_ORDER:
        raise StateFileError("basis_order", f"only {BASIS_ORDER!r} is supported")
    release = doc.get("release_order", list(range(1, len(dims) + 1)))
    if not isinstance(release, list) or sorted(release) != list(range(1, len(dims) + 1)):
        raise StateFileError("release_order", f"expected a permutation of 1..{len(dims)}")
    items = doc.get("states")
    if not isinstance(items, list) or not items:
        raise StateFileError("states", "expected a nonempty list")

    D = prod(dims)
    labels, states, pure = [], [], []
    for i, item in enumerate(items):
        at = f"states[{i}]"
        if not isinstance(item, dict):
            raise StateFileError(at, "expected an object")
        label = item.get("label")
        if not isinstance(label, str) or not label:
            raise StateFileError(f"{at}.label", "expected a nonempty string")
        if label in labels:
            raise StateFileError(f"{at}.label", f"duplicate label {label!r}")
        kind = item.get("kind")
        try:
            if kind == "pure":
                re = _real_list(item.get("amplitudes_re"), f"{at}.amplitudes_re", D)
                im = _real_list(item.get("amplitudes_im", [0.0] * D), f"{at}.amplitudes_im", D)
                norm = float(np.linalg.norm(re + 1j * im))
                if abs(norm - 1.0) > EPS_EQ:
                    raise StateFileError(f"{at}.amplitudes_re", f"state vector has norm {norm:.12g}, expected 1")
                p = PureState(tuple(dims), re + 1j * im)
                pure.append(p)
                states.append(p.to_density())
            elif kind == "mixed":
                re = _real_matrix(item.get("matrix_re"), f"{at}.matrix_re", D)
                im = _real_matrix(item.get("matrix_im", [[0.0] * D] * D), f"{at}.matrix_im", D)
                states.append(DensityMatrix(tuple(dims), re + 1j * im))
                pure.append(None)
            else:
                raise StateFileError(f"{at}.kind", f"expected 'pure' or 'mixed', got {kind!r}")
        except InvalidState as exc:
            raise StateFileError(at, str(exc)) from None
        labels.append(label)
    try:
        return StateSet(tuple(dims), tuple(labels), tuple(states), tuple(release), tuple(pure))
    except OrthocloneError as exc:
        raise StateFileError("$", str(exc)) from None


def load_state_set(path) -> StateSet:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise StateFileError("$", f"invalid JSON: {exc}") from None
    return parse_state_set(doc)


def dump_state_set(states: StateSet) -> dict:
    out = []
    pure = states.pure or (None,) * len(states.labels)
    for label, rho, psi in zip(states.labels, states.states, pure):
        if psi is not None:
            v = psi.amplitudes
            out.append({"label": label, "kind": "pure", "amplitudes_re": v.real.tolist(), "amplitudes_im": v.imag.tolist()})
        else:
            m = rho.matrix
            out.append({"label": label, "kind": "mixed", "matrix_re": m.real.tolist(), "matrix_im": m.imag.tolist()})
    return {
        "dims": list(states.dims),
        "basis_order": BASIS_ORDER,
        "release_order": list(states.release_order),
        "states": out,
    }


def write_state_set(states: StateSet, path) -> None:
    Path(path).write_text(json.dumps(dump_state_set(states), indent=2) + "\n", encoding="utf-8")


def bundled_dir() -> Path:
    return Path(__file__).parent / "data"


def bundled_examples() -> dict[str, Path]:
    return {p.stem: p for p in sorted(bundled_dir().glob("*.json"))}


def resolve(path_or_name: str) -> Path:
    """A filesystem path, or the name of a bundled example (with or without .json)."""
    p = Path(path_or_name)
    if p.exists():
        return p
    name = p.name[:-5] if p.name.endswith(".json") else p.name
    ex = bundled_examples()
    if name in ex:
        return ex[name]
    return p
