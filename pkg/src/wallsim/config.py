"""INI-style experiment configuration.

One section per experiment; flat key=value entries. Walls serialize as
';'-separated pieces, each "t0 c v" (f = c + v*t from t0 on) or "t0 inf".
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import WallPiece, WallSpec

EXPERIMENT_NAMES = ("prop31", "couplings", "backpath", "midtime",
                    "localization", "slowdecorr", "product", "tails",
                    "simulate")


def wall_to_string(wall: WallSpec | None) -> str:
    if wall is None:
        return "none"
    parts = []
    for p in wall.pieces:
        if p.infinite:
            parts.append(f"{p.t0!r} inf")
        else:
            parts.append(f"{p.t0!r} {p.c!r} {p.v!r}")
    return "; ".join(parts)


def wall_from_string(text: str, horizon: float) -> WallSpec | None:
    text = text.strip()
    if text.lower() in ("", "none"):
        return None
    pieces = []
    for chunk in text.split(";"):
        fields = chunk.split()
        if not fields:
            continue
        if len(fields) == 2 and fields[1].lower() == "inf":
            pieces.append(WallPiece(t0=float(fields[0]), c=float("inf"),
                                    v=0.0, infinite=True))
        elif len(fields) == 3:
            pieces.append(WallPiece(t0=float(fields[0]), c=float(fields[1]),
                                    v=float(fields[2])))
        else:
            raise ValueError(f"bad wall piece {chunk!r}: want 't0 c v' or 't0 inf'")
    return WallSpec(pieces=tuple(pieces), horizon=float(horizon))


@dataclass
class ExperimentConfig:
    experiment: str
    options: dict[str, str] = field(default_factory=dict)
    replicas: int = 100
    seed: int = 1
    threads: int = 1
    out: str | None = None

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENT_NAMES:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def get_str(self, key: str, default: str | None = None) -> str:
        if key in self.options:
            return self.options[key]
        if default is None:
            raise KeyError(f"[{self.experiment}] missing required key {key!r}")
        return default

    def get_float(self, key: str, default: float | None = None) -> float:
        return float(self.get_str(key, None if default is None else repr(default)))

    def get_int(self, key: str, default: int | None = None) -> int:
        return int(self.get_str(key, None if default is None else str(default)))

    def get_floats(self, key: str, default: str | None = None) -> tuple[float, ...]:
        return tuple(float(x) for x in self.get_str(key, default).replace(
            ",", " ").split())

    def get_ints(self, key: str, default: str | None = None) -> tuple[int, ...]:
        return tuple(int(x) for x in self.get_str(key, default).replace(
            ",", " ").split())

    def get_wall(self, key: str, horizon: float,
                 default: str | None = None) -> WallSpec | None:
        return wall_from_string(self.get_str(key, default), horizon)

    def resolved(self) -> dict:
        """Flat, JSON-ready view of everything that determines the run."""
        out = {"experiment": self.experiment, "replicas": self.replicas,
               "seed": self.seed, "threads": self.threads}
        out.update({f"options.{k}": v for k, v in sorted(self.options.items())})
        return out


def load_config(path: str | Path, experiment: str, *,
                replicas: int | None = None, seed: int | None = None,
                threads: int | None = None,
                out: str | None = None) -> ExperimentConfig:
    """Read the experiment's section; CLI-style overrides win over file
    values for replicas/seed/threads/out."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    read = parser.read(str(path))
    if not read:
        raise FileNotFoundError(path)
    if not parser.has_section(experiment):
        raise KeyError(f"config {path} has no [{experiment}] section")
    options = dict(parser.items(experiment))
    cfg_replicas = int(options.pop("replicas", 100))
    cfg_seed = int(options.pop("seed", 1))
    cfg_threads = int(options.pop("threads", 1))
    cfg_out = options.pop("out", None)
    return ExperimentConfig(
        experiment=experiment,
        options=options,
        replicas=cfg_replicas if replicas is None else replicas,
        seed=cfg_seed if seed is None else seed,
        threads=cfg_threads if threads is None else threads,
        out=cfg_out if out is None else out,
    )
