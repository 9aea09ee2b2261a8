"""Batch experiment runner.

Configuration comes from an optional flat ``key=value`` file; command-line
flags override it. The report is JSON with sorted keys and floats rounded to
12 significant digits, written to stdout or to ``--out`` with the seed
appended to the file name.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import games, reductions
from .adversaries import AdversaryContext
from .core import AttackModel
from .errors import CapacityError, ConfigError, DomainError, PolicyViolation, QPKEError
from .registry import Registry, default_registry

EXIT_OK, EXIT_CONFIG, EXIT_POLICY, EXIT_CAPACITY = 0, 1, 2, 3
REDUCTIONS = ("thm31-fwd", "thm31-rev", "thm32-fwd", "thm32-rev")


@dataclass
class ExperimentConfig:
    scheme: str = "perm"
    params: str = ""
    notion: str = "ind"
    attack: str = "cpa"
    copies: int = games.DEFAULT_COPIES
    trials: int = 1000
    seed: int = 0
    adversary: str = "coin"
    reduction: str | None = None
    messages: str | None = None
    out: str | None = None

    def validate(self, registry: Registry):
        if self.notion not in games.NOTIONS:
            raise ConfigError(f"notion must be one of {games.NOTIONS}, got {self.notion!r}")
        try:
            AttackModel.parse(self.attack)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.copies < 0:
            raise ConfigError("copies must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.adversary not in registry.adversaries:
            raise ConfigError(f"adversary {self.adversary!r} is not registered")
        if self.reduction is not None and self.reduction not in REDUCTIONS:
            raise ConfigError(f"reduction must be one of {REDUCTIONS}, got {self.reduction!r}")

    def echo(self) -> dict:
        return asdict(self)


_INT_FIELDS = {"copies", "trials", "seed"}


def read_config_file(path: str) -> dict:
    out = {}
    known = {f.name for f in fields(ExperimentConfig)}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip()
        if not sep or key not in known:
            raise ConfigError(f"{path}:{lineno}: expected one of {sorted(known)} as key=value")
        out[key] = value
    return out


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    values = read_config_file(args.config) if args.config else {}
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    for key in _INT_FIELDS & values.keys():
        try:
            values[key] = int(values[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be an integer, got {values[key]!r}") from None
    return ExperimentConfig(**values)


def round_floats(obj, digits: int = 12):
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    return obj


def render_report(report: dict) -> str:
    return json.dumps(round_floats(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _messages(cfg: ExperimentConfig, space) -> tuple[str, str]:
    if cfg.messages is None:
        return space[0], space[1]
    parts = [p.strip() for p in cfg.messages.split(",")]
    if len(parts) != 2:
        raise ConfigError("--messages takes exactly two plaintexts X,Y")
    return parts[0], parts[1]


def _run_game(cfg, scheme, n, adversary, x, y, workers):
    space = scheme.plaintext_space(n).elements
    dist = games.MessageDistribution.uniform(space)
    common = dict(copies=cfg.copies, seed=cfg.seed, workers=workers)
    if cfg.notion == "ow":
        return games.run_ow(scheme, adversary, cfg.attack, n, cfg.trials, **common)
    if cfg.notion == "ind":
        return games.run_ind(scheme, adversary, cfg.attack, n, x, y, cfg.trials, **common)
    if cfg.notion == "sem-c":
        return games.run_sem_c(scheme, adversary, None, cfg.attack, n, dist, games.IDENTITY_LEAKAGE, None,
                               cfg.trials, **common)
    if cfg.notion == "sem-q":
        return games.run_sem_q(scheme, adversary, None, cfg.attack, n, dist, games.index_function(space), None,
                               cfg.trials, **common)
    return games.run_nm(scheme, adversary, None, cfg.attack, n, dist, None, games.IDENTITY_RELATION, cfg.trials,
                        **common)


_SOURCE_NOTION = {"thm31-fwd": "ind", "thm31-rev": "sem-q", "thm32-fwd": "ind", "thm32-rev": "nm"}


def _run_reduction(cfg, registry, scheme, n, x, y, workers):
    attack = AttackModel.parse(cfg.attack)
    ctx = AdversaryContext(scheme, n, _SOURCE_NOTION[cfg.reduction], attack, cfg.copies, x, y)
    source = registry.make_adversary(cfg.adversary, ctx)
    args = dict(trials=cfg.trials, copies=cfg.copies, seed=cfg.seed, policy=attack, workers=workers)
    if cfg.reduction == "thm31-fwd":
        check = reductions.run_ind_to_semq(scheme, source, n, x, y, **args)
    elif cfg.reduction == "thm31-rev":
        check = reductions.run_semq_to_ind(scheme, source, n, **args)
    elif cfg.reduction == "thm32-fwd":
        check = reductions.run_ind_to_nm(scheme, source, n, x, y, **args)
    else:
        check = reductions.run_nm_to_ind(scheme, source, n, x, y, **args)
    built = check.reports["built"]
    summary = {
        "name": cfg.reduction,
        "auxiliary": check.reduction.summary(),
        "source_report": check.reports["source"].to_dict(),
        "test": check.to_dict(),
    }
    flagged = built.flagged_trials + check.reports["source"].flagged_trials
    return built, summary, flagged


def run_experiment(cfg: ExperimentConfig, registry: Registry | None = None, workers: int | None = None,
                   stdout=None, stderr=None) -> int:
    """Run one configured experiment and emit its report; returns the exit code."""
    registry = registry if registry is not None else default_registry()
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg.validate(registry)
        scheme = registry.make_scheme(cfg.scheme, cfg.params)
        n = scheme.default_n
        space = scheme.plaintext_space(n).elements
        x, y = _messages(cfg, space)
        if x == y and (cfg.notion == "ind" or cfg.reduction):
            raise ConfigError("distinct pair required: --messages X,Y must differ")
        if cfg.reduction:
            report, reduction, flagged = _run_reduction(cfg, registry, scheme, n, x, y, workers)
        else:
            ctx = AdversaryContext(scheme, n, cfg.notion, AttackModel.parse(cfg.attack), cfg.copies, x, y)
            adversary = registry.make_adversary(cfg.adversary, ctx)
            report = _run_game(cfg, scheme, n, adversary, x, y, workers)
            reduction, flagged = None, report.flagged_trials
    except PolicyViolation as exc:
        print(f"policy violation: {exc}", file=stderr)
        return EXIT_POLICY
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=stderr)
        return EXIT_CAPACITY
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    except QPKEError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    text = render_report({"config": cfg.echo(), "flagged_trials": flagged, "game": report.to_dict(),
                          "reduction": reduction})
    if cfg.out:
        path = output_path(cfg.out, cfg.seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        print(f"wrote {path}", file=stderr)
    else:
        stdout.write(text)
    return EXIT_OK


def output_path(out: str, seed: int) -> Path:
    """``reports/run.json`` -> ``reports/run.seed<seed>.json``."""
    p = Path(out)
    suffix = p.suffix or ".json"
    return p.with_name(f"{p.stem}.seed{seed}{suffix}")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qpke", description="Run quantum public-key security experiments.")
    ap.add_argument("--config", help="flat key=value configuration file")
    ap.add_argument("--scheme", help="registered scheme name")
    ap.add_argument("--params", help="scheme parameters, e.g. k=3 or N=77,y=6")
    ap.add_argument("--notion", help="one of: " + ", ".join(games.NOTIONS))
    ap.add_argument("--attack", help="coa, cpa, cca1 or cca2")
    ap.add_argument("--copies", help="public-key copies given to the adversary")
    ap.add_argument("--trials", help="number of trials")
    ap.add_argument("--seed", help="64-bit seed")
    ap.add_argument("--adversary", help="registered adversary name")
    ap.add_argument("--reduction", help="one of: " + ", ".join(REDUCTIONS))
    ap.add_argument("--messages", help="plaintext pair X,Y")
    ap.add_argument("--out", help="report path (the seed is appended to the name)")
    ap.add_argument("--list", action="store_true", help="list the registry and exit")
    ap.add_argument("--workers", type=int, default=None, help="threads for trial execution")
    ap.add_argument("--no-builtins", action="store_true", help="start from an empty registry")
    ap.add_argument("--plugin", action="append", default=[], help="module:function that extends the registry")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        registry = Registry() if args.no_builtins else default_registry()
        for spec in args.plugin:
            registry.load_plugin(spec)
        if args.list:
            sys.stdout.write(registry.listing())
            return EXIT_OK
        cfg = build_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_experiment(cfg, registry, workers=args.workers)


if __name__ == "__main__":
    sys.exit(main())
