"""Run configuration shared by the CLI commands: caps, seeds, budgets,
coefficient field, and the cache directory, with a stable hash embedded
in every report."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import ConfigError
from .fields import GFq, is_prime


@dataclass
class RunConfig:
    type_label: str = "A"
    rank: int = 2
    q: int = 2
    coeff: str = "F5"
    J: str = "all"
    seed: int = 0
    trials: int = 100
    budget: int = 10000
    spin_cap: int = 5000
    subgroup_cap: int = 2**16
    cache_dir: str = ""

    def validate(self) -> "RunConfig":
        if self.type_label not in ("A", "D", "E"):
            raise ConfigError(f"unsupported type {self.type_label!r}")
        if not 1 <= self.rank <= 6:
            raise ConfigError(f"rank {self.rank} outside the supported range 1..6")
        try:
            GFq(self.q)
        except ConfigError as e:
            raise ConfigError(f"q = {self.q}: {e}") from None
        if self.coeff not in ("Q",) and not (
            self.coeff.startswith("F") and self.coeff[1:].isdigit() and is_prime(int(self.coeff[1:]))
        ):
            raise ConfigError(f"coefficient field {self.coeff!r}: expected F<prime> or Q")
        for name in ("trials", "budget", "spin_cap", "subgroup_cap"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        return self

    def hash(self) -> str:
        body = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(body.encode()).hexdigest()[:16]

    def cache_path(self) -> Path:
        if self.cache_dir:
            return Path(self.cache_dir)
        env = os.environ.get("CHEVFLAG_CACHE")
        if env:
            return Path(env)
        return Path.home() / ".cache" / "chevflag"

    def subsets(self, rank: int):
        """Parse the J selection: 'all', '' (empty set), or '1,2' (1-based)."""
        import itertools

        if self.J == "all":
            out = []
            for r in range(rank + 1):
                out.extend(frozenset(c) for c in itertools.combinations(range(rank), r))
            return sorted(out, key=lambda K: (len(K), sorted(K)))
        if self.J in ("", "none", "empty"):
            return [frozenset()]
        try:
            parts = [int(x) - 1 for x in self.J.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"cannot parse J selection {self.J!r}") from None
        if any(not 0 <= j < rank for j in parts):
            raise ConfigError(f"J = {self.J}: indices must be in 1..{rank}")
        return [frozenset(parts)]
