"""Run configuration shared by the selection strategies and the CLI."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidAlpha, InvalidCount

METHODS = ("rhc", "rhckon", "koncw", "cwkc", "ghcidr", "random")


@dataclass(frozen=True)
class ReductionConfig:
    """Which strategy to run and its knobs.

    alpha is the requested reduction fraction: each cluster keeps roughly a
    (1 - alpha) share of its members, never less than one. k_farthest only
    matters for the nearest-plus-farthest strategy, seed only for the random
    baseline.
    """

    method: str
    alpha: float = 0.0
    k_farthest: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if not 0.0 <= self.alpha < 1.0:
            raise InvalidAlpha(f"alpha must be in [0, 1), got {self.alpha}")
        if self.k_farthest < 1:
            raise InvalidCount(f"k_farthest must be >= 1, got {self.k_farthest}")

    def to_dict(self) -> dict:
        # Fixed key order keeps manifests diff-friendly.
        return {
            "method": self.method,
            "alpha": float(self.alpha),
            "k_farthest": int(self.k_farthest),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReductionConfig":
        return cls(
            method=d["method"],
            alpha=float(d.get("alpha", 0.0)),
            k_farthest=int(d.get("k_farthest", 1)),
            seed=int(d.get("seed", 0)),
        )
