"""Run configuration (TOML or JSON) and deterministic CSV/JSON writers."""

from __future__ import annotations

import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algebra import AlgebraElement, GroupElement, random_element, so_basis
from .errors import ConfigError, LiegeoError
from .filtration import SRStructure, catalog, filtration_from_config
from .flows import DEFAULT_STEP, DEFAULT_T_END, MONITORS, VectorFieldSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SPEC_VERSION = 1

_SECTIONS = {
    "spec_version": None,
    "name": None,
    "filtration": None,
    "field": {"kind", "s", "index_set", "a0", "a", "b", "mode", "nu"},
    "initial": {"x", "g", "scale"},
    "run": {"t_end", "step", "tol", "monitors", "record_every", "write_g", "reorthonormalize"},
    "hull": {"n", "seed", "complements"},
    "search": {"system", "nu", "degree", "known", "m"},
}


@dataclass
class RunConfig:
    name: str = "run"
    spec: VectorFieldSpec | None = None
    structure: SRStructure | None = None
    x0: AlgebraElement | None = None
    g0: GroupElement | None = None
    t_end: float = DEFAULT_T_END
    step: float = DEFAULT_STEP
    tol: float | None = None
    monitors: list | None = None
    record_every: int = 1
    write_g: bool = False
    reorthonormalize: bool = True
    hull: dict | None = None
    search: dict | None = None
    raw: dict = field(default_factory=dict)
    # set when the initial momentum is drawn at random and must be re-drawn on --seed
    random_x: float | None = None
    random_g: bool = False


# ------------------------------------------------------------------ loading

def load_raw(path) -> dict:
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def load_config(path, seed: int | None = None) -> RunConfig:
    cfg = parse_config(load_raw(path), seed=seed)
    if cfg.name == "run":
        cfg.name = Path(path).stem
    return cfg


def _check_keys(section: str, d, allowed):
    if not isinstance(d, dict):
        raise ConfigError(f"[{section}] must be a table")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(extra)}")


def _coeff_map(n: int, value, what: str) -> AlgebraElement:
    if isinstance(value, dict):
        return AlgebraElement.from_map(n, {k: float(v) for k, v in value.items()})
    arr = np.asarray(value, dtype=float)
    if arr.shape == (so_basis(n).dim,):
        return AlgebraElement(arr, n)
    if arr.shape == (n, n):
        return AlgebraElement.from_matrix(arr)
    raise ConfigError(f"{what}: expected a coefficient map, vector or matrix for so({n})")


def parse_config(raw: dict, seed: int | None = None) -> RunConfig:
    """Validate a raw config dict and build the objects it describes."""
    try:
        return _parse(raw, seed)
    except ConfigError:
        raise
    except (LiegeoError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def _parse(raw: dict, seed):
    _check_keys("top level", raw, _SECTIONS)
    version = raw.get("spec_version")
    if version != SPEC_VERSION:
        raise ConfigError(f"spec_version must be {SPEC_VERSION}, got {version!r}")
    for sec, keys in _SECTIONS.items():
        if keys is not None and sec in raw:
            _check_keys(sec, raw[sec], keys)
    cfg = RunConfig(raw=raw, name=str(raw.get("name", "run")))
    rng = np.random.default_rng(seed)

    fil = None
    entry = None
    if "filtration" in raw:
        fcfg = raw["filtration"]
        if not isinstance(fcfg, dict):
            raise ConfigError("[filtration] must be a table")
        fil = filtration_from_config(fcfg)
        if "catalog" in fcfg:
            entry = catalog(fcfg["catalog"])

    if "field" in raw:
        cfg.spec, cfg.structure = _parse_field(raw["field"], fil, entry)
    n = cfg.spec.n if cfg.spec is not None else (fil.n if fil is not None else None)

    init = raw.get("initial", {})
    if n is not None:
        scale = float(init.get("scale", 1.0))
        x = init.get("x", "random")
        if isinstance(x, str):
            if x != "random":
                raise ConfigError("initial.x must be a coefficient map or 'random'")
            cfg.random_x = scale
            cfg.x0 = random_element(n, rng, scale)
        else:
            cfg.x0 = _coeff_map(n, x, "initial.x")
        g = init.get("g", "identity")
        if isinstance(g, str):
            if g == "identity":
                cfg.g0 = GroupElement.identity(n)
            elif g == "random":
                cfg.random_g = True
                cfg.g0 = GroupElement.random(n, rng)
            else:
                raise ConfigError("initial.g must be a matrix, 'identity' or 'random'")
        else:
            g = np.asarray(g, dtype=float)
            if g.shape != (n, n):
                raise ConfigError(f"initial.g must be {n}x{n}, got shape {g.shape}")
            cfg.g0 = GroupElement(g)
    elif init:
        raise ConfigError("[initial] given without a field or filtration")

    run = raw.get("run", {})
    cfg.t_end = float(run.get("t_end", DEFAULT_T_END))
    cfg.step = float(run.get("step", DEFAULT_STEP))
    if cfg.t_end <= 0 or cfg.step <= 0:
        raise ConfigError("run.t_end and run.step must be positive")
    cfg.tol = float(run["tol"]) if "tol" in run else None
    cfg.record_every = int(run.get("record_every", 1))
    cfg.write_g = bool(run.get("write_g", False))
    cfg.reorthonormalize = bool(run.get("reorthonormalize", True))
    if "monitors" in run:
        mons = list(run["monitors"])
        unknown = [m for m in mons if m not in MONITORS]
        if unknown:
            raise ConfigError(f"unknown monitors {unknown}; known: {sorted(MONITORS)}")
        cfg.monitors = mons

    if "hull" in raw:
        cfg.hull = _parse_hull(raw["hull"], fil)
    if "search" in raw:
        s = dict(raw["search"])
        s.setdefault("system", "rank2-so4")
        s.setdefault("degree", 2)
        if s["system"] not in ("rank2-so4", "rank2-so3", "zero"):
            raise ConfigError(f"unknown search system {s['system']!r}")
        cfg.search = s
    return cfg


def _parse_field(fd: dict, fil, entry):
    kind = fd.get("kind")
    if kind is None:
        raise ConfigError("field.kind is required")
    if kind in ("sub-riemannian-chain", "general-bogoyavlensky"):
        if fil is None:
            raise ConfigError(f"field kind {kind!r} needs a [filtration]")
        s = fd.get("s", entry.s if entry is not None else None)
        if s is None:
            raise ConfigError("field.s is required for custom filtrations")
        structure = None
        if kind == "sub-riemannian-chain" and ("index_set" in fd or entry is not None):
            idx = fd.get("index_set", sorted(entry.index_set) if entry is not None else None)
            distinct = entry.require_distinct if entry is not None else True
            structure = SRStructure(fil, frozenset(int(i) for i in idx), tuple(s), distinct)
        a0 = fd.get("a0")
        spec = VectorFieldSpec.chain(fil, s, None if a0 is None else np.asarray(a0, dtype=float))
        return spec, structure
    if kind in ("manakov", "singular-manakov"):
        if "a" not in fd or "b" not in fd:
            raise ConfigError("Manakov fields need a and b")
        mode = fd.get("mode", "singular" if kind == "singular-manakov" else "regular")
        if (mode == "singular") != (kind == "singular-manakov"):
            raise ConfigError(f"field.mode {mode!r} contradicts kind {kind!r}")
        return VectorFieldSpec.manakov_field(fd["a"], fd["b"], singular=mode == "singular"), None
    if kind == "rank2-so4":
        nu = fd.get("nu", [1.0, 0.5])
        return VectorFieldSpec.rank2(*nu), None
    raise ConfigError(f"unknown field kind {kind!r}")


def _parse_hull(hd: dict, fil):
    if "complements" in hd:
        if fil is None:
            raise ConfigError("hull.complements needs a [filtration]")
        rows = np.vstack([fil.complement_basis(int(i)) for i in hd["complements"]])
        return {"n": fil.n, "seed": rows, "names": None}
    n = int(hd["n"])
    seed = hd.get("seed", "two-generators")
    if seed == "two-generators":
        from .filtration import two_generator_seed
        return {"n": n, "seed": two_generator_seed(n), "names": ["v1", "v2"]}
    if not isinstance(seed, list) or not seed:
        raise ConfigError("hull.seed must be 'two-generators' or a non-empty list")
    return {"n": n, "seed": [_coeff_map(n, v, "hull.seed") for v in seed], "names": None}


# ------------------------------------------------------------------ writing

def fmt(v) -> str:
    """Shortest round-trip representation of a float."""
    return repr(float(v))


def trajectory_rows(times, xs, n: int, gs=None, monitors=None, source=None):
    """Header and rows for the trajectory CSV schema."""
    labels = so_basis(n).labels
    header = ["t"] + ["x_" + lab[2:] for lab in labels]
    if gs is not None:
        header += [f"g_{a + 1}{b + 1}" if n < 10 else f"g_{a + 1}_{b + 1}"
                   for a in range(n) for b in range(n)]
    mon_keys = list(monitors) if monitors else []
    header += mon_keys
    if source is not None:
        header.append("source")
    rows = []
    for k, t in enumerate(times):
        row = [fmt(t)] + [fmt(v) for v in xs[k]]
        if gs is not None:
            row += [fmt(v) for v in np.asarray(gs[k]).ravel()]
        row += [fmt(monitors[m][k]) for m in mon_keys]
        if source is not None:
            row.append(source)
        rows.append(row)
    return header, rows


def write_csv(path_or_stream, header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(row) + "\n")
    text = buf.getvalue()
    if hasattr(path_or_stream, "write"):
        path_or_stream.write(text)
    else:
        Path(path_or_stream).write_text(text)


def write_trajectory_csv(path_or_stream, traj, include_g: bool = False, source=None):
    header, rows = trajectory_rows(traj.times, traj.x, traj.n,
                                   traj.g if include_g else None, traj.monitors, source)
    write_csv(path_or_stream, header, rows)


def write_json(path_or_stream, obj):
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if hasattr(path_or_stream, "write"):
        path_or_stream.write(text)
    else:
        Path(path_or_stream).write_text(text)
