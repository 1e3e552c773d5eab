"""Mission config: one TOML file describing wall, robots, timings and solver knobs.

Schema (every key optional unless noted; defaults in brackets)::

    v_log = 0.6                 # m/s, logistics speed
    clearance = 0.8             # m, conflict radius r_c

    [wall]                      # required: either the three sizes or stl_path
    length = 2.5
    height = 0.3
    thickness = 0.2
    stl_path = "wall.stl"       # relative to the config file

    [brick]                     # required
    full_width = 0.5
    height = 0.1
    thickness = 0.1

    [robots]                    # required
    pickups = [[1.5, -1.0], [-1.5, -1.0]]
    adhesion_home = [0.0, -1.0]

    [durations]                 # seconds [30 / 7 / 60]
    brick = 30.0
    spray = 7.0
    curing = 60.0

    [weights]                   # [2 / 4 / 0.2 / 5]
    span = 2.0
    brick_log = 4.0
    cur = 0.2
    adh_log = 5.0

    [solver]
    backend = "builtin"         # or "export"
    time_limit = 60.0
    gap = 1e-4
    seed = 0
    node_limit = 1000000

    [sim]
    h_cruise = 2.0
    v_vertical = 0.5
    timestep = 0.1
    stabilize_pause = 1.0

    [flags]
    cure_from_end = false
"""

from __future__ import annotations

import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..mesh import ingest_mesh_bounds
from ..model import ScheduleProblem, Weights
from ..simulator import SimConfig
from ..solver.bb import SolveOptions
from ..wallplan import BrickSpec, WallPlan, WallSpec, build_plan

ENV_VAR = "MASONRY_SCHED_CONFIG"
DEFAULT_PATH = "mission.toml"


class ConfigError(ValueError):
    """Config file is unreadable or does not match the schema."""


_NUM = (int, float)

# section -> key -> (types, required)
_SCHEMA = {
    "": {"v_log": (_NUM, False), "clearance": (_NUM, False)},
    "wall": {"length": (_NUM, False), "height": (_NUM, False), "thickness": (_NUM, False), "stl_path": (str, False)},
    "brick": {"full_width": (_NUM, True), "height": (_NUM, True), "thickness": (_NUM, True)},
    "robots": {"pickups": (list, True), "adhesion_home": (list, False)},
    "durations": {"brick": (_NUM, False), "spray": (_NUM, False), "curing": (_NUM, False)},
    "weights": {"span": (_NUM, False), "brick_log": (_NUM, False), "cur": (_NUM, False), "adh_log": (_NUM, False)},
    "solver": {
        "backend": (str, False),
        "time_limit": (_NUM, False),
        "gap": (_NUM, False),
        "seed": (int, False),
        "node_limit": (int, False),
    },
    "sim": {"h_cruise": (_NUM, False), "v_vertical": (_NUM, False), "timestep": (_NUM, False), "stabilize_pause": (_NUM, False)},
    "flags": {"cure_from_end": (bool, False)},
}
_REQUIRED_SECTIONS = ("wall", "brick", "robots")


@dataclass
class SolverConfig:
    backend: str = "builtin"
    time_limit: float = 60.0
    gap: float = 1e-4
    seed: int = 0
    node_limit: int = 1_000_000


@dataclass
class MissionConfig:
    wall: WallSpec
    brick: BrickSpec
    pickups: tuple
    adhesion_home: tuple = (0.0, -1.0)
    d_brick: float = 30.0
    d_spray: float = 7.0
    d_cure: float = 60.0
    v_log: float = 0.6
    clearance: float = 0.8
    weights: Weights = field(default_factory=Weights)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sim: dict = field(default_factory=dict)
    cure_from_end: bool = False
    source: str = ""

    def plan(self) -> WallPlan:
        return build_plan(self.wall, self.brick)

    def problem(self) -> ScheduleProblem:
        return ScheduleProblem(
            n_robots=len(self.pickups),
            pickup_points=self.pickups,
            d_brick=self.d_brick,
            d_spray=self.d_spray,
            d_cure=self.d_cure,
            v_log=self.v_log,
            r_c=self.clearance,
            weights=self.weights,
            cure_from_end=self.cure_from_end,
        )

    def sim_config(self) -> SimConfig:
        cfg = SimConfig(clearance=self.clearance, home_positions={len(self.pickups): self.adhesion_home}, **self.sim)
        cfg.validate()
        return cfg

    def solve_options(self) -> SolveOptions:
        s = self.solver
        return SolveOptions(
            time_limit=s.time_limit, gap_tolerance=s.gap, node_limit=s.node_limit, deterministic_seed=s.seed
        )


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    """1-based line of ``[section]`` (or of ``key`` inside it), if it can be found."""
    lines = text.splitlines()
    start, stop = 0, len(lines)
    if section:
        hdr = re.compile(r"^\s*\[\s*" + re.escape(section) + r"\s*\]")
        found = [i for i, ln in enumerate(lines) if hdr.match(ln)]
        if not found:
            return None
        start = found[0]
        if key is None:
            return start + 1
        for i in range(start + 1, len(lines)):
            if re.match(r"^\s*\[", lines[i]):
                stop = i
                break
    else:
        for i, ln in enumerate(lines):
            if re.match(r"^\s*\[", ln):
                stop = i
                break
    pat = re.compile(r"^\s*" + re.escape(key or "") + r"\s*=")
    for i in range(start, stop):
        if pat.match(lines[i]):
            return i + 1
    return None


def _err(path: str, text: str, msg: str, section: str = "", key: str | None = None) -> ConfigError:
    line = _line_of(text, section, key)
    where = f"{path}:{line}" if line else path
    return ConfigError(f"{where}: {msg}")


def _point(v, n=2) -> tuple | None:
    if not isinstance(v, list) or len(v) != n or not all(isinstance(c, _NUM) and not isinstance(c, bool) for c in v):
        return None
    return tuple(float(c) for c in v)


def parse_config(text: str, path: str = "<config>", base_dir: Path | None = None) -> MissionConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None

    for name, value in raw.items():
        if isinstance(value, dict):
            if name not in _SCHEMA or name == "":
                raise _err(path, text, f"unknown section [{name}]", name)
        elif name not in _SCHEMA[""]:
            raise _err(path, text, f"unknown key '{name}'", "", name)
    for sec in _REQUIRED_SECTIONS:
        if sec not in raw:
            raise ConfigError(f"{path}: missing required section [{sec}]")

    def get(sec, key, default=None):
        table = raw if sec == "" else raw.get(sec, {})
        types, required = _SCHEMA[sec][key]
        if key not in table:
            if required:
                raise _err(path, text, f"missing required key '{key}'", sec)
            return default
        v = table[key]
        ok = isinstance(v, types) and not (isinstance(v, bool) and types is not bool)
        if not ok:
            raise _err(path, text, f"'{key}' has the wrong type ({type(v).__name__})", sec, key)
        return float(v) if types is _NUM else v

    for sec, schema in _SCHEMA.items():
        if sec and sec in raw:
            for key in raw[sec]:
                if key not in schema:
                    raise _err(path, text, f"unknown key '{key}' in [{sec}]", sec, key)

    def positive(sec, key, v):
        if v is not None and not v > 0:
            raise _err(path, text, f"'{key}' must be positive", sec, key)
        return v

    stl = get("wall", "stl_path")
    if stl is not None:
        p = Path(stl)
        if not p.is_absolute() and base_dir is not None:
            p = base_dir / p
        try:
            wall = ingest_mesh_bounds(p.read_bytes())
        except OSError as e:
            raise _err(path, text, f"cannot read stl_path: {e.strerror}", "wall", "stl_path") from None
        except ValueError as e:
            raise _err(path, text, str(e), "wall", "stl_path") from None
    else:
        dims = [positive("wall", k, get("wall", k)) for k in ("length", "height", "thickness")]
        if any(d is None for d in dims):
            raise _err(path, text, "needs length, height and thickness (or stl_path)", "wall")
        wall = WallSpec(*dims)
    brick = BrickSpec(*[positive("brick", k, get("brick", k)) for k in ("full_width", "height", "thickness")])

    pickups_raw = get("robots", "pickups")
    pickups = [_point(p) for p in pickups_raw]
    if not pickups or any(p is None for p in pickups):
        raise _err(path, text, "pickups must be a non-empty list of [x, y] pairs", "robots", "pickups")
    home = (0.0, -1.0)
    if "adhesion_home" in raw["robots"]:
        home = _point(get("robots", "adhesion_home"))
        if home is None:
            raise _err(path, text, "adhesion_home must be an [x, y] pair", "robots", "adhesion_home")

    w = Weights()
    try:
        weights = Weights(*[get("weights", k, getattr(w, k)) for k in ("span", "brick_log", "cur", "adh_log")])
    except ValueError:
        raise _err(path, text, "weights must be nonnegative", "weights") from None

    s = SolverConfig()
    solver = SolverConfig(
        backend=get("solver", "backend", s.backend),
        time_limit=positive("solver", "time_limit", get("solver", "time_limit", s.time_limit)),
        gap=get("solver", "gap", s.gap),
        seed=get("solver", "seed", s.seed),
        node_limit=get("solver", "node_limit", s.node_limit),
    )
    if solver.backend not in ("builtin", "export"):
        raise _err(path, text, "backend must be 'builtin' or 'export'", "solver", "backend")
    if solver.gap < 0 or solver.node_limit < 1:
        raise _err(path, text, "gap must be >= 0 and node_limit >= 1", "solver")

    sim = {k: get("sim", k) for k in _SCHEMA["sim"] if k in raw.get("sim", {})}
    try:
        SimConfig(**sim).validate()
    except ValueError as e:
        raise _err(path, text, str(e), "sim") from None

    cfg = MissionConfig(
        wall=wall,
        brick=brick,
        pickups=tuple(pickups),
        adhesion_home=home,
        d_brick=positive("durations", "brick", get("durations", "brick", 30.0)),
        d_spray=positive("durations", "spray", get("durations", "spray", 7.0)),
        d_cure=positive("durations", "curing", get("durations", "curing", 60.0)),
        v_log=positive("", "v_log", get("", "v_log", 0.6)),
        clearance=positive("", "clearance", get("", "clearance", 0.8)),
        weights=weights,
        solver=solver,
        sim=sim,
        cure_from_end=get("flags", "cure_from_end", False),
        source=path,
    )
    try:
        cfg.problem().validate()
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None
    return cfg


def resolve_path(explicit: str | None) -> Path:
    """--config wins, then the environment variable, then ./mission.toml."""
    return Path(explicit or os.environ.get(ENV_VAR) or DEFAULT_PATH)


def load_config(path: str | Path) -> MissionConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"{p}: {e.strerror}") from None
    return parse_config(text, str(p), p.parent)
