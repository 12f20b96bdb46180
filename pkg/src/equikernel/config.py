"""Run configuration, atomic output writers and worker-count plumbing."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .lie_rep import EXAMPLES, Weight

SCHEMA_PREFIX = "# schema: equikernel."

DEFAULT_TOLERANCES = {
    "AC3.rel": 1e-6,
    "AC4.sigmas": 3.0,
    "AC5.band": 0.25,
    "AC6.slope": -3.0,
    "AC6.factor": 10.0,
    "AC7.band": 0.3,
    "AC7.phase": 0.2,
    "AC8.rel": 0.3,
    "AC8.n_mc": 200_000,
    "AC10.orth": 1e-8,
    "t": 1e-9,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    example: str = "P3"
    nu: Weight = field(default_factory=lambda: Weight(2, 1))
    k_grid: list[int] = field(default_factory=lambda: list(range(1, 9)))
    seeds: int = 0
    grids: dict[str, int] = field(default_factory=lambda: {"torus": 64, "flag": 32})
    tolerances: dict[str, float] = field(default_factory=dict)
    output_dir: str = "out"

    def validate(self, allow_empty_k: bool = True) -> "RunConfig":
        if self.example not in EXAMPLES:
            raise ConfigError(f"unknown example {self.example!r}")
        if not allow_empty_k and not self.k_grid:
            raise ConfigError("k_grid is empty")
        if any(k < 1 for k in self.k_grid):
            raise ConfigError("k values must be positive")
        if any(b <= a for a, b in zip(self.k_grid, self.k_grid[1:])):
            raise ConfigError("k_grid must be strictly increasing")
        for name, n in self.grids.items():
            if n < 16 or n & (n - 1):
                raise ConfigError(f"grid {name}={n} must be a power of two >= 16")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")
        return self

    def tol(self, key: str) -> float:
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nu"] = list(self.nu.as_tuple())
        d["effective_tolerances"] = {k: self.tol(k) for k in DEFAULT_TOLERANCES}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = {k: v for k, v in d.items() if k != "effective_tolerances"}
        if "nu" in d and not isinstance(d["nu"], Weight):
            d["nu"] = Weight(*d["nu"])
        return cls(**d)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_text_atomic(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(schema: str, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"{SCHEMA_PREFIX}{schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_csv_atomic(path, schema: str, header, rows) -> Path:
    return write_text_atomic(path, csv_text(schema, header, rows))


def read_csv(path) -> tuple[str, list[dict]]:
    """Schema line and rows of a CSV written by write_csv_atomic."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(SCHEMA_PREFIX):
        raise ValueError("missing schema line")
    return lines[0][len(SCHEMA_PREFIX):], list(csv.DictReader(lines[1:]))


def worker_count() -> int:
    raw = os.environ.get("EQUIKERNEL_THREADS")
    cpus = os.cpu_count() or 1
    if not raw:
        return cpus
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"EQUIKERNEL_THREADS must be an integer, got {raw!r}") from None
    return max(1, min(n, cpus))


def parallel_map(fn, items) -> list:
    """Order-preserving map over a thread pool capped by EQUIKERNEL_THREADS."""
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
