"""Bundled reference data: named curves, their Galois models and published cycle lists."""

from __future__ import annotations

import json
from importlib import resources

from ..cycle_search import read_csv
from ..ff_curve import RationalCurveModel


def _text(name: str) -> str:
    return resources.files(__name__).joinpath(name).read_text()


def curves() -> dict[str, dict]:
    return json.loads(_text("curves.json"))


def curve(name: str) -> RationalCurveModel:
    return RationalCurveModel(*curves()[name]["coefficients"])


def model(name: str):
    from ..galois_models import ExplicitSubgroup, SerreCurve

    info = curves()[name]["model"]
    if info["kind"] == "serre":
        return SerreCurve(info["delta"])
    return ExplicitSubgroup.from_json(_text("level4.json"), name="level4")


def cycle_list(name: str, L: int, bound: int | None = None) -> list[tuple[int, ...]]:
    """Published normalized cycles for a curve, sorted by p_1, optionally with p_1 <= bound."""
    try:
        rows = read_csv(_text(f"{name}_L{L}.csv"))
    except FileNotFoundError:
        return []
    rows.sort()
    if bound is not None:
        rows = [r for r in rows if r[0] <= bound]
    return rows
