"""Scenario files: INI-style ``key = value`` sections with full validation.

Example::

    [scenario]
    graph = standin
    tau = 0.1
    horizon = 40

    [zoom]
    mode = adjustable

Every violation is collected (not just the first) and reported with its
``section.key`` path.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields

from .stability import SIN_TOL

__all__ = ["ScenarioConfig", "ScenarioError", "Violation", "parse_scenario", "emit_scenario", "load_scenario"]

ZOOM_MODES = ("fixed", "adjustable")
INITIAL_MODES = ("s1", "explicit", "gaussian")
FRAME_METHODS = ("auto", "eigen", "schur")


@dataclass(frozen=True)
class Violation:
    path: str
    kind: str  # missing | type | unknown | range | window-boundary | zoom-range
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


class ScenarioError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))

    @property
    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated run description.  Defaults reproduce the reference setup.

    ``theta`` and ``dwell`` override the certified zoom-in contraction and
    dwell (in samples); leaving them unset uses the certificate.  For the
    seeded initial state, ``initial_fraction`` sets the disagreement size
    relative to the capture radius and ``initial_consensus`` the amplitude
    of the network average relative to ``xi_bar * mu * M``.
    """

    horizon: float
    graph: str = "standin"
    omega: float = math.sqrt(math.pi / 2)
    tau: float = 0.1
    Delta: float = 0.5
    M: float = 10.0
    dense: int = 0
    seed: int = 0
    allow_infeasible: bool = False
    zoom_mode: str = "fixed"
    mu: float = 1.0
    eps_slack: float = 0.1
    eps_norm: float | None = None
    frame: str = "auto"
    theta: float | None = None
    dwell: int | None = None
    initial_mode: str = "s1"
    initial_fraction: float = 0.9
    initial_consensus: float = 0.5
    initial_scale: float = 1.0
    r0: tuple[float, ...] | None = None
    v0: tuple[float, ...] | None = None

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.tau))


# (section, key) -> (field name, parser)
def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"{s!r} is not finite")
    return v


def _int(s):
    return int(s)


def _bool(s):
    b = configparser.ConfigParser.BOOLEAN_STATES.get(s.strip().lower())
    if b is None:
        raise ValueError(f"{s!r} is not a boolean")
    return b


def _vec(s):
    return tuple(_float(x) for x in s.replace(",", " ").split())


def _str(s):
    return s.strip()


_KEYS = {
    ("scenario", "graph"): ("graph", _str),
    ("scenario", "omega"): ("omega", _float),
    ("scenario", "tau"): ("tau", _float),
    ("scenario", "delta"): ("Delta", _float),
    ("scenario", "M"): ("M", _float),
    ("scenario", "horizon"): ("horizon", _float),
    ("scenario", "dense"): ("dense", _int),
    ("scenario", "seed"): ("seed", _int),
    ("scenario", "allow_infeasible"): ("allow_infeasible", _bool),
    ("zoom", "mode"): ("zoom_mode", _str),
    ("zoom", "mu"): ("mu", _float),
    ("zoom", "eps_slack"): ("eps_slack", _float),
    ("zoom", "eps_norm"): ("eps_norm", _float),
    ("zoom", "frame"): ("frame", _str),
    ("zoom", "theta"): ("theta", _float),
    ("zoom", "dwell"): ("dwell", _int),
    ("initial", "mode"): ("initial_mode", _str),
    ("initial", "fraction"): ("initial_fraction", _float),
    ("initial", "consensus"): ("initial_consensus", _float),
    ("initial", "scale"): ("initial_scale", _float),
    ("initial", "r"): ("r0", _vec),
    ("initial", "v"): ("v0", _vec),
}
_PATH = {name: f"{sec}.{key}" for (sec, key), (name, _) in _KEYS.items()}
REQUIRED = ("horizon",)


def _validate(c: dict) -> list[Violation]:
    out = []

    def bad(name, msg, kind="range"):
        out.append(Violation(_PATH[name], kind, msg))

    for name in ("omega", "tau", "Delta", "M"):
        if not c[name] > 0:
            bad(name, f"must be positive, got {c[name]}")
    if c["Delta"] > 0 and not c["M"] > c["Delta"]:
        bad("M", f"range M={c['M']} must exceed Delta={c['Delta']}")
    if c["zoom_mode"] not in ZOOM_MODES:
        bad("zoom_mode", f"unknown mode {c['zoom_mode']!r}; expected one of {', '.join(ZOOM_MODES)}")
    elif c["zoom_mode"] == "adjustable" and c["Delta"] > 0 and not c["M"] > 2 * c["Delta"]:
        bad("M", f"adjustable zoom needs M > 2*Delta (M={c['M']}, 2*Delta={2 * c['Delta']})", "zoom-range")
    if c["omega"] > 0 and c["tau"] > 0 and abs(math.sin(c["omega"] * c["tau"])) < SIN_TOL:
        bad("tau", f"tau={c['tau']} is a multiple of pi/omega (window boundary)", "window-boundary")
    if not c["horizon"] >= 0:
        bad("horizon", f"must be nonnegative, got {c['horizon']}")
    elif c["tau"] > 0:
        ratio = c["horizon"] / c["tau"]
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            bad("horizon", f"horizon={c['horizon']} is not a multiple of tau={c['tau']}")
    if c["dense"] < 0:
        bad("dense", "substep count must be nonnegative")
    if not c["mu"] > 0:
        bad("mu", f"zoom level must be positive, got {c['mu']}")
    if not c["eps_slack"] > 0:
        bad("eps_slack", f"must be positive, got {c['eps_slack']}")
    if c["eps_norm"] is not None and not 0 < c["eps_norm"] < 1:
        bad("eps_norm", f"must lie in (0, 1), got {c['eps_norm']}")
    if c["frame"] not in FRAME_METHODS:
        bad("frame", f"unknown frame {c['frame']!r}; expected one of {', '.join(FRAME_METHODS)}")
    if c["theta"] is not None and not 0 < c["theta"] < 1:
        bad("theta", f"contraction factor must lie in (0, 1), got {c['theta']}")
    if c["dwell"] is not None and c["dwell"] < 1:
        bad("dwell", "dwell must be at least one sample")
    if c["initial_mode"] not in INITIAL_MODES:
        bad("initial_mode", f"unknown mode {c['initial_mode']!r}; expected one of {', '.join(INITIAL_MODES)}")
    elif c["initial_mode"] == "explicit":
        if c["r0"] is None or c["v0"] is None:
            for name in ("r0", "v0"):
                if c[name] is None:
                    bad(name, "explicit initial state needs both r and v", "missing")
        elif len(c["r0"]) != len(c["v0"]) or not c["r0"]:
            bad("v0", "r and v must be nonempty and of equal length")
    if not 0 < c["initial_fraction"] <= 1:
        bad("initial_fraction", f"must lie in (0, 1], got {c['initial_fraction']}")
    if not 0 <= c["initial_consensus"] <= 1:
        bad("initial_consensus", f"must lie in [0, 1], got {c['initial_consensus']}")
    if not c["initial_scale"] > 0:
        bad("initial_scale", f"must be positive, got {c['initial_scale']}")
    return out


def parse_scenario(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError([Violation("<file>", "type", f"malformed scenario: {exc}")]) from None

    values = {}
    violations = []
    sections = {sec for sec, _ in _KEYS}
    for sec in cp.sections():
        if sec not in sections:
            violations.append(Violation(sec, "unknown", f"unknown section [{sec}]"))
            continue
        for key, raw in cp.items(sec):
            spec = _KEYS.get((sec, key))
            if spec is None:
                violations.append(Violation(f"{sec}.{key}", "unknown", "unknown key"))
                continue
            name, conv = spec
            try:
                values[name] = conv(raw)
            except ValueError as exc:
                violations.append(Violation(f"{sec}.{key}", "type", f"cannot parse {raw!r}: {exc}"))
    for name in REQUIRED:
        if name not in values and not any(v.path == _PATH[name] for v in violations):
            violations.append(Violation(_PATH[name], "missing", "required key is missing"))
    # range checks still run on the keys that did parse
    defaults = {f.name: f.default for f in fields(ScenarioConfig) if f.name not in REQUIRED}
    merged = {**defaults, "horizon": 0.0, **values}
    failed = {v.path for v in violations}
    violations += [v for v in _validate(merged) if v.path not in failed]
    if violations:
        raise ScenarioError(violations)
    return ScenarioConfig(**merged)


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return " ".join(repr(float(x)) for x in v)
    return str(v)


def emit_scenario(config: ScenarioConfig) -> str:
    """Canonical text form; ``parse_scenario(emit_scenario(c)) == c``."""
    by_section: dict[str, list[str]] = {}
    for (sec, key), (name, _) in _KEYS.items():
        value = getattr(config, name)
        if value is None:
            continue
        by_section.setdefault(sec, []).append(f"{key} = {_fmt(value)}")
    return "\n\n".join(f"[{sec}]\n" + "\n".join(lines) for sec, lines in by_section.items()) + "\n"
