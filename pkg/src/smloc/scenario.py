"""Plain-text scenario files.

Grammar, one statement per line::

    # comment (also allowed after a value)
    dim 2
    anchors            # matrix block: one anchor per row, closed by "end"
      -1.0  0.0
       1.0  0.0
       0.0  1.2
    end
    pool true          # anchors are a candidate pool for selection
    target 0.15 0.35
    delta 0.05
    xi_lower 1.0 2.0 3.0
    xi_upper 1.1 2.1 3.1
    seed 42

Keys are case-sensitive and may appear at most once.  ``dim`` and
``anchors`` are required; the rest are optional.  Certification needs either
``target`` with ``delta`` or both ``xi_lower`` and ``xi_upper``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .geometry import AnchorSet
from .io import format_float
from .measurement import IntervalBounds, make_intervals

_SCALAR_KEYS = ("dim", "pool", "delta", "seed")
_VECTOR_KEYS = ("target", "xi_lower", "xi_upper")
_BLOCK_KEYS = ("anchors",)


class ScenarioError(InvalidInputError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True, eq=False)
class Scenario:
    dim: int
    anchors: np.ndarray  # (m, n) rows
    pool: bool = False
    target: np.ndarray | None = None
    delta: float | None = None
    xi_lower: np.ndarray | None = None
    xi_upper: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.anchors, dtype=float))
        if a.ndim != 2 or a.shape[1] != self.dim or a.shape[0] < 1:
            raise ScenarioError(f"anchors must be rows of {self.dim} coordinates")
        object.__setattr__(self, "anchors", a)
        if self.target is not None:
            t = np.asarray(self.target, dtype=float).ravel()
            if t.shape != (self.dim,):
                raise ScenarioError(f"target must have {self.dim} coordinates")
            object.__setattr__(self, "target", t)
        if self.delta is not None and not float(self.delta) >= 0:
            raise ScenarioError("delta must be nonnegative")
        for key in ("xi_lower", "xi_upper"):
            val = getattr(self, key)
            if val is not None:
                val = np.asarray(val, dtype=float).ravel()
                if val.shape != (a.shape[0],):
                    raise ScenarioError(f"{key} needs one value per anchor ({a.shape[0]})")
                object.__setattr__(self, key, val)
        if (self.xi_lower is None) != (self.xi_upper is None):
            raise ScenarioError("xi_lower and xi_upper must be given together")

    @property
    def anchor_set(self) -> AnchorSet:
        return AnchorSet.from_points(self.anchors)

    @property
    def has_measurements(self) -> bool:
        return self.xi_lower is not None or (self.target is not None and self.delta is not None)

    def bounds(self, anchors: AnchorSet | None = None) -> IntervalBounds:
        """Intervals from explicit vectors if present, else from target and delta."""
        anchors = self.anchor_set if anchors is None else anchors
        if self.xi_lower is not None:
            return IntervalBounds.from_arrays(self.xi_lower, self.xi_upper, anchors)
        if self.target is None or self.delta is None:
            raise ScenarioError("scenario needs target and delta, or xi_lower and xi_upper")
        return make_intervals(self.target, anchors, self.delta)


def _floats(tokens, line):
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise ScenarioError(f"not a number: {exc}", line) from None


def parse_scenario(text: str) -> Scenario:
    fields: dict = {}
    block: list | None = None
    block_start = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        if block is not None:
            if tokens == ["end"]:
                fields["anchors"] = block
                block = None
            else:
                block.append(_floats(tokens, lineno))
            continue
        key, args = tokens[0], tokens[1:]
        if key in fields:
            raise ScenarioError(f"duplicate key {key!r}", lineno)
        if key in _BLOCK_KEYS:
            if args:
                raise ScenarioError(f"{key} opens a block; rows go on the following lines", lineno)
            block, block_start = [], lineno
        elif key in _VECTOR_KEYS:
            if not args:
                raise ScenarioError(f"{key} needs values", lineno)
            fields[key] = _floats(args, lineno)
        elif key in _SCALAR_KEYS:
            if len(args) != 1:
                raise ScenarioError(f"{key} takes exactly one value", lineno)
            val = args[0]
            try:
                if key == "dim":
                    fields[key] = int(val)
                elif key == "seed":
                    fields[key] = int(val)
                    if not 0 <= fields[key] < 2 ** 64:
                        raise ValueError
                elif key == "delta":
                    fields[key] = float(val)
                else:
                    if val.lower() not in ("true", "false"):
                        raise ValueError
                    fields[key] = val.lower() == "true"
            except ValueError:
                raise ScenarioError(f"bad value for {key}: {val!r}", lineno) from None
        else:
            raise ScenarioError(f"unknown key {key!r}", lineno)
    if block is not None:
        raise ScenarioError("anchors block is not closed by 'end'", block_start)
    for req in ("dim", "anchors"):
        if req not in fields:
            raise ScenarioError(f"missing required key {req!r}")
    rows = fields["anchors"]
    if any(len(r) != fields["dim"] for r in rows):
        raise ScenarioError(f"every anchor row needs {fields['dim']} coordinates")
    return Scenario(**fields)


def format_scenario(sc: Scenario) -> str:
    lines = [f"dim {sc.dim}", "anchors"]
    lines += ["  " + " ".join(format_float(x) for x in row) for row in sc.anchors]
    lines.append("end")
    if sc.pool:
        lines.append("pool true")
    if sc.target is not None:
        lines.append("target " + " ".join(format_float(x) for x in sc.target))
    if sc.delta is not None:
        lines.append(f"delta {format_float(sc.delta)}")
    if sc.xi_lower is not None:
        lines.append("xi_lower " + " ".join(format_float(x) for x in sc.xi_lower))
        lines.append("xi_upper " + " ".join(format_float(x) for x in sc.xi_upper))
    if sc.seed is not None:
        lines.append(f"seed {sc.seed}")
    return "\n".join(lines) + "\n"


def read_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    return parse_scenario(text)


def write_scenario(path, sc: Scenario) -> Path:
    path = Path(path)
    path.write_text(format_scenario(sc))
    return path
