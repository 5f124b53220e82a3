from __future__ import annotations

import copy
from typing import Any, Dict, List


def _value(label: str, coeff: Any = 1) -> List[Dict[str, Any]]:
    return [{"label": label, "coeff": str(coeff)}]


FAMILY_DOCUMENTS: Dict[str, Dict[str, Any]] = {
    "elliptic-1": {
        "name": "elliptic-1",
        "ring": "builtin:e",
        "mu": 1,
        "t_order": 2,
        "u_order": 2,
        "u_headroom": 2,
        "kappa": [{"direction": 0, "on": "dz", "value": _value("dzb")}],
    },
    "k3-1": {
        "name": "k3-1",
        "ring": "builtin:k3",
        "mu": 1,
        "t_order": 2,
        "u_order": 2,
        "u_headroom": 2,
        "kappa": [
            {"direction": 0, "on": "e20", "value": _value("e11_1")},
            {"direction": 0, "on": "e11_1", "value": _value("e02", -1)},
        ],
    },
    "k3-2": {
        "name": "k3-2",
        "ring": "builtin:k3",
        "mu": 2,
        "t_order": 2,
        "u_order": 2,
        "u_headroom": 2,
        "kappa": [
            {"direction": 0, "on": "e20", "value": _value("e11_1")},
            {"direction": 0, "on": "e11_1", "value": _value("e02", -1)},
            {"direction": 1, "on": "e20", "value": _value("e11_2")},
            {"direction": 1, "on": "e11_2", "value": _value("e02")},
        ],
    },
    # one-parameter chain e30 -> e21_1 -> e12_1 -> -e03
    "quintic-1": {
        "name": "quintic-1",
        "ring": "builtin:quintic-diamond",
        "mu": 1,
        "t_order": 2,
        "u_order": 3,
        "u_headroom": 2,
        "kappa": [
            {"direction": 0, "on": "e30", "value": _value("e21_1")},
            {"direction": 0, "on": "e21_1", "value": _value("e12_1")},
            {"direction": 0, "on": "e12_1", "value": _value("e03", -1)},
        ],
    },
    "quintic-noncommuting": {
        "name": "quintic-noncommuting",
        "ring": "builtin:quintic-diamond",
        "mu": 2,
        "t_order": 1,
        "u_order": 2,
        "u_headroom": 2,
        "kappa": [
            {"direction": 0, "on": "e30", "value": _value("e21_1")},
            {"direction": 0, "on": "e12_1", "value": _value("e03", -1)},
            {"direction": 1, "on": "e30", "value": _value("e21_2")},
            {"direction": 1, "on": "e21_1", "value": _value("e12_1")},
            {"direction": 1, "on": "e12_2", "value": _value("e03", -1)},
        ],
    },
}


GRAPH_DOCUMENTS: Dict[str, Dict[str, Any]] = {
    "wedge": {"family": "disk", "aerial": 1, "boundary": 2, "edges": [[0, 1], [0, 2]]},
    "wedge-reversed": {"family": "disk", "aerial": 1, "boundary": 2, "edges": [[0, 2], [0, 1]]},
    "doubled": {"family": "disk", "aerial": 1, "boundary": 2, "edges": [[0, 1], [0, 1]]},
    "self-loop": {"family": "disk", "aerial": 1, "boundary": 2, "edges": [[0, 0], [0, 1]]},
    "overfull": {"family": "disk", "aerial": 2, "boundary": 0, "edges": [[0, 1], [1, 0], [1, 0]]},
    "cfw-pair": {"family": "cfw_constrained", "aerial": 2, "boundary": 1, "edges": [[0, 2], [1, 2]]},
}


def family_document(name: str) -> Dict[str, Any]:
    if name not in FAMILY_DOCUMENTS:
        raise KeyError(f"Unknown built-in family: {name}")
    return copy.deepcopy(FAMILY_DOCUMENTS[name])


def graph_document(name: str) -> Dict[str, Any]:
    if name not in GRAPH_DOCUMENTS:
        raise KeyError(f"Unknown built-in graph: {name}")
    return copy.deepcopy(GRAPH_DOCUMENTS[name])
