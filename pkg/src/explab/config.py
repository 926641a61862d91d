"""Run configuration: pydantic models shared by the service and the CLI.

Precedence is flags > config file > defaults; unknown keys are rejected.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, field_validator

from .freegroup import FiniteTarget, QuotientHom, ReducedWord
from .schottky import MarkedGroup, schottky_symmetric


class GroupSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["schottky_symmetric", "matrices"] = "schottky_symmetric"
    k: int = 2
    t: float = 3.0
    generators: Optional[list[list[float]]] = None

    @field_validator("k")
    @classmethod
    def _rank(cls, v):
        if v < 2:
            raise ValueError("rank k must be >= 2")
        if v > 26:
            raise ValueError("rank k is capped at 26 by the ASCII word format")
        return v

    @field_validator("t")
    @classmethod
    def _translation(cls, v):
        if v <= 0:
            raise ValueError("translation length t must be positive")
        return v

    def build(self) -> MarkedGroup:
        if self.kind == "schottky_symmetric":
            return schottky_symmetric(self.k, self.t)
        if not self.generators:
            raise ValueError("matrices group needs explicit generators")
        return MarkedGroup.from_config(
            {"kind": "matrices", "generators": self.generators}
        )

    def describe(self) -> str:
        if self.kind == "schottky_symmetric":
            return f"schottky:k={self.k},t={self.t}"
        return f"matrices:k={len(self.generators or [])}"


class HomSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["abelianization", "mod", "trivial", "table"] = "abelianization"
    modulus: Optional[int] = None
    images: Optional[list[int]] = None
    # finite target given explicitly (config-file/service form only)
    table: Optional[list[list[int]]] = None
    identity: int = 0

    def build(self, k: int) -> QuotientHom:
        if self.kind == "abelianization":
            return QuotientHom.abelianization(k)
        if self.kind == "trivial":
            return QuotientHom.trivial(k)
        if self.kind == "table":
            if self.table is None or self.images is None:
                raise ValueError("table hom needs a multiplication table and images")
            if len(self.images) != k:
                raise ValueError(f"table hom needs {k} generator images")
            target = FiniteTarget(tuple(tuple(row) for row in self.table), self.identity)
            return QuotientHom(k, target, tuple(self.images))
        if self.modulus is None or self.modulus < 1:
            raise ValueError("mod hom needs a positive modulus")
        images = self.images if self.images is not None else [1] * k
        if len(images) != k:
            raise ValueError(f"mod hom needs {k} generator images")
        return QuotientHom.mod_cyclic(k, self.modulus, images)

    def describe(self) -> str:
        if self.kind == "mod":
            imgs = ",".join(str(i) for i in (self.images or []))
            return f"mod:{self.modulus}:{imgs}"
        if self.kind == "table":
            return f"table:{len(self.table or [])}"
        return self.kind


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    group: GroupSpec = GroupSpec()
    hom: HomSpec = HomSpec()
    h0: str = "abAB"
    L: int = 10
    s: float = 0.5
    n_window: int = 20
    samples: int = 10_000
    seed: int = 0
    tol: float = 1e-4
    bin_width: float = 0.5
    window: Optional[tuple[float, float]] = None
    radius: Optional[float] = None
    coset_L: Optional[int] = None
    theorem_L: Optional[int] = None
    case: Literal["free", "malnormal"] = "free"
    h1: Optional[str] = None
    h2: Optional[str] = None
    violation_bound: int = 4
    workers: Optional[int] = None
    out: Optional[str] = None

    @field_validator("L", "n_window", "samples", "violation_bound")
    @classmethod
    def _positive(cls, v, info):
        if v < 1:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @field_validator("h0", "h1", "h2")
    @classmethod
    def _word(cls, v):
        if v is not None:
            ReducedWord.from_str(v)  # raises on malformed input
        return v

    def h0_word(self) -> ReducedWord:
        return ReducedWord.from_str(self.h0)


def parse_group_flag(text: str) -> GroupSpec:
    """Compact --group syntax: 'schottky:k=2,t=3' (or just 'schottky')."""
    head, _, rest = text.partition(":")
    if head not in ("schottky", "schottky_symmetric"):
        raise ValueError(f"unknown group kind {head!r}; use schottky:k=...,t=...")
    fields: dict = {"kind": "schottky_symmetric"}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            if key == "k":
                fields["k"] = int(value)
            elif key == "t":
                fields["t"] = float(value)
            else:
                raise ValueError(f"unknown group parameter {key!r}")
    return GroupSpec(**fields)


def parse_hom_flag(text: str) -> HomSpec:
    """Compact --hom syntax: 'abelianization', 'trivial' or 'mod:2:1,0'."""
    head, _, rest = text.partition(":")
    if head in ("abelianization", "abel"):
        return HomSpec(kind="abelianization")
    if head == "trivial":
        return HomSpec(kind="trivial")
    if head == "mod":
        modulus_text, _, images_text = rest.partition(":")
        if not modulus_text:
            raise ValueError("mod hom syntax is mod:<modulus>:<img0>,<img1>,...")
        images = (
            [int(x) for x in images_text.split(",")] if images_text else None
        )
        return HomSpec(kind="mod", modulus=int(modulus_text), images=images)
    raise ValueError(f"unknown hom kind {head!r}")


def load_config_file(path: str | Path) -> RunConfig:
    text = Path(path).read_text().strip()
    data = json.loads(text) if text else {}
    return RunConfig(**data)


def merged_config(path: str | Path | None, overrides: dict) -> RunConfig:
    """Config file (or defaults) overridden by explicitly-set flag values."""
    base = load_config_file(path) if path else RunConfig()
    data = base.model_dump()
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    return RunConfig(**data)
