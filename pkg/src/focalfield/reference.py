"""Reference measurements shipped with the package."""

from __future__ import annotations

import json
from importlib import resources


def load_experimental_points() -> list[dict]:
    """Measured extinction points as dicts with ``u``, ``extinction`` and
    ``extinction_uncertainty``."""
    text = resources.files("focalfield").joinpath("data/experimental_points.json").read_text(
        encoding="utf-8")
    return json.loads(text)["points"]


def experimental_point(u: float, tol: float = 1e-9) -> dict:
    """The shipped point at focusing ``u``; raises ``KeyError`` if there is none."""
    for p in load_experimental_points():
        if abs(p["u"] - u) <= tol:
            return p
    raise KeyError(f"no reference point at u = {u}")
