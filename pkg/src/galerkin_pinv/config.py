"""Flat ``key = value`` experiment configuration.

Keys are dotted (``model.kind``, ``run.schedule``); lists are comma separated;
complex numbers use ``a+bi`` literals. ``#`` starts a comment. Example::

    model = kernel-gap
    data.coeffs = 7, 2
    run.schedule = 2, 4, 8, 16
    probe.lambdas = i, 2i, 1+i
    output.format = json
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .diagnostics import DEFAULT_VECTORS, ProbeSet
from .engine import RunConfig
from .errors import ConfigInvalid
from .gallery import (
    DEFAULT_DATA, DIAGONAL, GALLERY, JACOBI, Classification, CoeffVector, PowerDecay,
    SpectralModel, diagonal_model, jacobi_model,
)
from .linalg import ToleranceContext

SCHEDULE_CAP_ENV = "TOOL_SCHEDULE_MAX"
SUITES = ("resolvent", "graph", "projection", "moving-target", "mp-identities")
FORMATS = ("csv", "json")

KNOWN_KEYS = {
    "model", "model.name", "model.kind", "model.rule", "model.prefix", "model.tail.coef",
    "model.tail.power", "model.shift", "model.offdiagonal", "model.offdiagonal.tail",
    "model.expected",
    "data.coeffs", "data.decay.power", "data.decay.scale",
    "run.schedule", "run.divergence_threshold", "run.plateau_ratio", "run.residual_tol",
    "run.rank_rel_tol", "run.exact_rank", "run.model_rank", "run.diagnostics", "run.workers",
    "probe.vectors", "probe.lambdas", "probe.perturbation_scale",
    "check.tol",
    "output.path", "output.format",
}

_DIAGONAL_RULES = {"linear": (1.0, 1.0, ()), "harmonic": (1.0, -1.0, ()),
                   "kernel-gap": (1.0, 1.0, (0.0,))}


def parse_text(text: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigInvalid(f"unknown key on line {lineno}", key)
        if key in raw:
            raise ConfigInvalid(f"duplicate key on line {lineno}", key)
        raw[key] = value
    return raw


def _float(raw, key, default=None) -> float:
    if key not in raw:
        return default
    try:
        value = float(raw[key])
    except ValueError:
        raise ConfigInvalid(f"not a number: {raw[key]!r}", key) from None
    if not math.isfinite(value):
        raise ConfigInvalid(f"not finite: {raw[key]!r}", key)
    return value


def _int(raw, key, default=None) -> int:
    if key not in raw:
        return default
    try:
        return int(raw[key])
    except ValueError:
        raise ConfigInvalid(f"not an integer: {raw[key]!r}", key) from None


def _list(raw, key) -> list[str]:
    return [t.strip() for t in raw.get(key, "").split(",") if t.strip()]


def _floats(raw, key) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in _list(raw, key))
    except ValueError:
        raise ConfigInvalid(f"not a number list: {raw[key]!r}", key) from None


def parse_complex(token: str) -> complex:
    t = token.replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise ConfigInvalid(f"bad complex literal {token!r}", "probe.lambdas") from None


def _short(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def format_complex(z: complex) -> str:
    """Inverse of :func:`parse_complex`, exact for every double."""
    im = _short(abs(z.imag))
    im = "" if im == "1" else im
    if z.real == 0:
        return f"{'-' if z.imag < 0 else ''}{im}i"
    return f"{_short(z.real)}{'-' if z.imag < 0 else '+'}{im}i"


_PROBE_RE = re.compile(r"^(?:e(\d+)|pow:([0-9.eE+-]+):(\d+))$")


def parse_probe(token: str) -> CoeffVector:
    """``eK`` is the K-th basis vector; ``pow:P:M`` is ``k^-P`` for ``k <= M``."""
    m = _PROBE_RE.match(token)
    if not m:
        raise ConfigInvalid(f"bad probe vector {token!r} (use eK or pow:P:M)", "probe.vectors")
    if m.group(1):
        return CoeffVector.basis(int(m.group(1)))
    return CoeffVector.power(float(m.group(2)), length=int(m.group(3)))


def _parse_model(raw) -> SpectralModel:
    if "model" in raw:
        name = raw["model"]
        if name not in GALLERY:
            raise ConfigInvalid(f"unknown gallery model {name!r}; see the gallery command", "model")
        extra = sorted(k for k in raw if k.startswith("model."))
        if extra:
            raise ConfigInvalid("cannot be combined with a gallery model name", extra[0])
        return GALLERY[name]

    kind = raw.get("model.kind")
    if kind not in (DIAGONAL, JACOBI):
        raise ConfigInvalid(f"must be 'diagonal' or 'jacobi', got {kind!r}", "model.kind")
    rule = raw.get("model.rule", "custom")
    try:
        expected = Classification(raw.get("model.expected", "Unknown"))
    except ValueError:
        raise ConfigInvalid(f"unknown classification {raw['model.expected']!r}",
                            "model.expected") from None
    name = raw.get("model.name", f"{kind}-{rule}")

    if kind == DIAGONAL:
        if rule in _DIAGONAL_RULES:
            coef, power, prefix = _DIAGONAL_RULES[rule]
        elif rule == "custom":
            prefix = _floats(raw, "model.prefix")
            coef = _float(raw, "model.tail.coef", 0.0)
            power = _float(raw, "model.tail.power", 0.0)
        else:
            raise ConfigInvalid(f"unknown diagonal rule {rule!r}", "model.rule")
        return diagonal_model(name, prefix, coef, power, expected, rule)

    if rule == "free":
        a_pre, a_tail = (), 0.0
    elif rule == "shifted":
        if "model.shift" not in raw:
            raise ConfigInvalid("required for the shifted rule", "model.shift")
        a_pre, a_tail = (), _float(raw, "model.shift")
    elif rule == "custom":
        a_pre, a_tail = _floats(raw, "model.prefix"), _float(raw, "model.tail.coef", 0.0)
    else:
        raise ConfigInvalid(f"unknown jacobi rule {rule!r}", "model.rule")
    b_pre = _floats(raw, "model.offdiagonal") if rule == "custom" else ()
    b_tail = _float(raw, "model.offdiagonal.tail", 1.0)
    return jacobi_model(name, a_pre, a_tail, b_pre, b_tail, expected, rule)


def _parse_data(raw, model: SpectralModel) -> CoeffVector:
    keys = ("data.coeffs", "data.decay.power", "data.decay.scale")
    if not any(k in raw for k in keys):
        if model.name in DEFAULT_DATA and model is GALLERY.get(model.name):
            return DEFAULT_DATA[model.name]
        raise ConfigInvalid("right-hand side required for a custom model", "data.coeffs")
    coeffs = _floats(raw, "data.coeffs")
    decay = None
    if "data.decay.power" in raw:
        decay = PowerDecay(_float(raw, "data.decay.power"), _float(raw, "data.decay.scale", 1.0))
    elif "data.decay.scale" in raw:
        raise ConfigInvalid("data.decay.scale needs data.decay.power", "data.decay.power")
    try:
        return CoeffVector(coeffs, decay)
    except ValueError as exc:
        raise ConfigInvalid(str(exc), "data.decay.power") from None


def _parse_bool(raw, key, default: bool) -> bool:
    if key not in raw:
        return default
    v = raw[key].lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ConfigInvalid(f"not a boolean: {raw[key]!r}", key)


def _schedule(raw, cap: int | None) -> tuple[int, ...]:
    if "run.schedule" in raw:
        try:
            sched = [int(t) for t in _list(raw, "run.schedule")]
        except ValueError:
            raise ConfigInvalid(f"not an integer list: {raw['run.schedule']!r}",
                                "run.schedule") from None
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ConfigInvalid(f"schedule {sched} is non-increasing", "run.schedule")
    else:
        sched = list(RunConfig().schedule)
    if cap is not None:
        sched = [n for n in sched if n <= cap]
        if not sched:
            raise ConfigInvalid(f"{SCHEDULE_CAP_ENV}={cap} removes every schedule entry",
                                "run.schedule")
    return tuple(sched)


def _schedule_cap() -> int | None:
    value = os.environ.get(SCHEDULE_CAP_ENV)
    if not value:
        return None
    try:
        cap = int(value)
    except ValueError:
        raise ConfigInvalid(f"not an integer: {value!r}", SCHEDULE_CAP_ENV) from None
    if cap < 1:
        raise ConfigInvalid("must be positive", SCHEDULE_CAP_ENV)
    return cap


@dataclass(frozen=True)
class ExperimentConfig:
    model: SpectralModel
    data: CoeffVector
    run: RunConfig
    probes: ProbeSet
    perturbation_scale: float = 1.0
    check_tol: float = 1e-6
    diagnostics: tuple[str, ...] = ()
    workers: int = 1
    output_path: str = ""
    output_format: str = "csv"
    schedule_cap: int | None = None
    probe_tokens: tuple[str, ...] = field(default=(), repr=False)

    def to_flat(self) -> dict[str, str]:
        """Every effective setting, defaults included, in config-file syntax."""
        m = self.model
        flat: dict[str, str] = {}
        flat["model.name"] = m.name
        flat["model.kind"] = m.kind
        flat["model.rule"] = m.rule
        flat["model.prefix"] = ", ".join(repr(v) for v in m.prefix)
        flat["model.tail.coef"] = repr(m.tail_coef)
        if m.kind == DIAGONAL:
            flat["model.tail.power"] = repr(m.tail_power)
        else:
            if m.rule == "shifted":
                flat["model.shift"] = repr(m.tail_coef)
            flat["model.offdiagonal"] = ", ".join(repr(v) for v in m.off_prefix)
            flat["model.offdiagonal.tail"] = repr(m.off_tail)
        flat["model.expected"] = m.expected.value
        flat["data.coeffs"] = ", ".join(repr(v) for v in self.data.coeffs)
        if not self.data.finite:
            flat["data.decay.power"] = repr(self.data.decay.power)
            flat["data.decay.scale"] = repr(self.data.decay.scale)
        r = self.run
        flat["run.schedule"] = ", ".join(str(n) for n in r.schedule)
        flat["run.divergence_threshold"] = repr(r.divergence_threshold)
        flat["run.plateau_ratio"] = repr(r.plateau_ratio)
        flat["run.residual_tol"] = repr(r.residual_tol)
        flat["run.rank_rel_tol"] = "" if r.tolerance.rank_rel_tol is None else repr(r.tolerance.rank_rel_tol)
        flat["run.exact_rank"] = "" if r.tolerance.exact_rank is None else str(r.tolerance.exact_rank)
        flat["run.model_rank"] = "true" if r.model_rank else "false"
        flat["run.diagnostics"] = ", ".join(self.diagnostics)
        flat["run.workers"] = str(self.workers)
        flat["probe.vectors"] = ", ".join(self.probe_tokens)
        flat["probe.lambdas"] = ", ".join(format_complex(z) for z in self.probes.lambdas)
        flat["probe.perturbation_scale"] = repr(self.perturbation_scale)
        flat["check.tol"] = repr(self.check_tol)
        flat["output.path"] = self.output_path
        flat["output.format"] = self.output_format
        return flat

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_flat().items())


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a configuration before any computation."""
    raw = parse_text(text)
    model = _parse_model(raw)
    data = _parse_data(raw, model)
    cap = _schedule_cap()

    rank_tol = _float(raw, "run.rank_rel_tol") if raw.get("run.rank_rel_tol") else None
    exact = _int(raw, "run.exact_rank") if raw.get("run.exact_rank") else None
    try:
        tol = ToleranceContext(rank_tol, exact)
    except ValueError as exc:
        raise ConfigInvalid(str(exc), "run.rank_rel_tol" if rank_tol is not None else "run.exact_rank") from None
    defaults = RunConfig()
    run = RunConfig(
        schedule=_schedule(raw, cap),
        divergence_threshold=_float(raw, "run.divergence_threshold", defaults.divergence_threshold),
        plateau_ratio=_float(raw, "run.plateau_ratio", defaults.plateau_ratio),
        residual_tol=_float(raw, "run.residual_tol", defaults.residual_tol),
        tolerance=tol,
        model_rank=_parse_bool(raw, "run.model_rank", True),
    )

    diagnostics = tuple(_list(raw, "run.diagnostics"))
    for s in diagnostics:
        if s not in SUITES:
            raise ConfigInvalid(f"unknown suite {s!r}; choose from {', '.join(SUITES)}",
                                "run.diagnostics")

    tokens = tuple(_list(raw, "probe.vectors")) or tuple(pid for pid, _ in DEFAULT_VECTORS)
    vectors = tuple((t, parse_probe(t)) for t in tokens)
    lambdas = tuple(parse_complex(t) for t in _list(raw, "probe.lambdas")) or ProbeSet().lambdas
    try:
        probes = ProbeSet(vectors, lambdas)
    except ValueError as exc:
        raise ConfigInvalid(str(exc), "probe.lambdas") from None

    scale = _float(raw, "probe.perturbation_scale", 1.0)
    if scale < 0:
        raise ConfigInvalid("must be non-negative", "probe.perturbation_scale")
    check_tol = _float(raw, "check.tol", 1e-6)
    if not check_tol > 0:
        raise ConfigInvalid("must be positive", "check.tol")
    workers = _int(raw, "run.workers", 1)
    if workers < 1:
        raise ConfigInvalid("must be >= 1", "run.workers")
    fmt = raw.get("output.format", "csv")
    if fmt not in FORMATS:
        raise ConfigInvalid(f"must be csv or json, got {fmt!r}", "output.format")

    return ExperimentConfig(model, data, run, probes, scale, check_tol, diagnostics, workers,
                            raw.get("output.path", ""), fmt, cap, tokens)


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
