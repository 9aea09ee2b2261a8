"""Name -> factory tables for schemes, adversaries, simulators and reductions."""
from __future__ import annotations

import importlib
from dataclasses import dataclass, field
from typing import Callable

from . import adversaries as adv
from .errors import ConfigError
from .schemes import BrokenScheme, PermScheme, ToyGMScheme


@dataclass(frozen=True)
class Entry:
    factory: Callable
    params: str = ""
    description: str = ""


@dataclass
class Registry:
    schemes: dict = field(default_factory=dict)
    adversaries: dict = field(default_factory=dict)
    simulators: dict = field(default_factory=dict)
    reductions: dict = field(default_factory=dict)

    def register_scheme(self, name, factory, params="", description=""):
        self.schemes[name] = Entry(factory, params, description)

    def register_adversary(self, name, factory, description=""):
        self.adversaries[name] = Entry(factory, "", description)

    def register_simulator(self, name, factory, description=""):
        self.simulators[name] = Entry(factory, "", description)

    def register_reduction(self, name, description=""):
        self.reductions[name] = Entry(lambda: name, "", description)

    def make_scheme(self, name: str, params: str | dict = ""):
        if name not in self.schemes:
            raise ConfigError(f"unknown scheme {name!r}; registered: {sorted(self.schemes)}")
        kwargs = parse_params(params) if isinstance(params, str) else dict(params)
        try:
            return self.schemes[name].factory(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad parameters {kwargs} for scheme {name!r}: {exc}") from None

    def make_adversary(self, name: str, ctx: adv.AdversaryContext):
        if name not in self.adversaries:
            raise ConfigError(f"unknown adversary {name!r}; registered: {sorted(self.adversaries)}")
        return self.adversaries[name].factory(ctx)

    def load_plugin(self, spec: str):
        """``module:function``; the function receives this registry."""
        mod, _, fn = spec.partition(":")
        try:
            getattr(importlib.import_module(mod), fn or "register")(self)
        except (ImportError, AttributeError) as exc:
            raise ConfigError(f"cannot load plugin {spec!r}: {exc}") from None

    def listing(self) -> str:
        if self.is_empty():
            return ""
        lines = []
        for title, table in (("schemes", self.schemes), ("adversaries", self.adversaries),
                             ("simulators", self.simulators), ("reductions", self.reductions)):
            lines.append(f"{title}:")
            for name in sorted(table):
                e = table[name]
                params = f" [{e.params}]" if e.params else ""
                lines.append(f"  {name}{params}  {e.description}".rstrip())
        return "\n".join(lines) + "\n"

    def is_empty(self) -> bool:
        return not (self.schemes or self.adversaries or self.simulators or self.reductions)


def parse_params(text: str) -> dict:
    """``"N=77,y=6"`` -> ``{"N": 77, "y": 6}``."""
    out = {}
    for part in filter(None, (p.strip() for p in (text or "").split(","))):
        key, sep, value = part.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"parameter {part!r} is not key=value")
        try:
            out[key.strip()] = int(value)
        except ValueError:
            raise ConfigError(f"parameter {key.strip()!r} needs an integer, got {value!r}") from None
    return out


def default_registry() -> Registry:
    r = Registry()
    r.register_scheme("perm", PermScheme, "k=<int>", "permutation-phase bit encryption over S_k, 2 <= k <= 5")
    r.register_scheme("toy-gm", ToyGMScheme, "N=<int>,y=<int>", "toy Goldwasser-Micali (classical control)")
    r.register_scheme("broken", BrokenScheme, "N=<int>,y=<int>", "negative control whose decryption always says 0")
    r.register_adversary("constant", adv.constant_adversary, "always the first plaintext (or bit 0)")
    r.register_adversary("coin", adv.coin_adversary, "uniformly random answer, ignores its inputs")
    r.register_adversary("brute-force", adv.brute_force_adversary,
                         "key search: PGM over odd involutions (perm) or trial division (toy-gm)")
    r.register_adversary("helstrom", adv.helstrom_distinguisher, "optimal joint measurement for the IND pair")
    r.register_adversary("swap-probe", adv.swap_probe, "SWAP test against a fresh encryption of x")
    r.register_adversary("oracle-query", adv.oracle_query_adversary, "decryption query on the challenge itself")
    r.register_adversary("rerandomize-query", adv.rerandomize_query_adversary,
                         "decryption query on a re-randomized challenge (toy-gm)")
    for name, factory in adv.BLIND_SIMULATORS.items():
        r.register_simulator(name, factory, "ciphertext-blind SEM-Q simulator")
    r.register_reduction("thm31-fwd", "IND breaker -> SEM-Q breaker")
    r.register_reduction("thm31-rev", "SEM-Q breaker -> IND breaker")
    r.register_reduction("thm32-fwd", "IND breaker -> NM breaker (identity relation)")
    r.register_reduction("thm32-rev", "NM breaker -> IND breaker (decryption oracle)")
    return r
