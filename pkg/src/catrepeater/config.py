"""Flat key=value run configuration with per-command schemas.

Files hold one ``key = value`` pair per line; ``#`` starts a comment.
Distances are km, windows are X-quadrature units, rates are per second in
JSON output and per minute in the distance-sweep CSV.  Unknown keys and
out-of-range values are rejected with the offending key named.
"""

from __future__ import annotations

from dataclasses import dataclass


class ConfigError(ValueError):
    """Bad key, bad type or out-of-range value in a run configuration."""


@dataclass(frozen=True)
class Field:
    name: str
    kind: str              # int | float | bool | float_list | int_list
    default: object
    lo: float | None = None
    hi: float | None = None

    def parse(self, raw: str):
        try:
            val = _CASTS[self.kind](raw)
        except (ValueError, TypeError):
            raise ConfigError(f"key '{self.name}': cannot parse {raw!r} as {self.kind}")
        self.check(val)
        return val

    def check(self, val):
        items = val if isinstance(val, (list, tuple)) else [val]
        for x in items:
            if self.lo is not None and x < self.lo:
                raise ConfigError(f"key '{self.name}': value {x} below minimum {self.lo}")
            if self.hi is not None and x > self.hi:
                raise ConfigError(f"key '{self.name}': value {x} above maximum {self.hi}")


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(raw)


_CASTS = {
    "int": lambda r: int(r.strip()),
    "float": lambda r: float(r.strip()),
    "bool": _parse_bool,
    "float_list": lambda r: [float(x) for x in r.split(",") if x.strip()],
    "int_list": lambda r: [int(x) for x in r.split(",") if x.strip()],
}

SCHEMAS: dict[str, tuple[Field, ...]] = {
    "fig2": (
        Field("trials", "int", 10000, lo=1),
        Field("deltas", "float_list", [0.02, 0.3, 0.5, 0.7, 0.9], lo=0.0),
        Field("ms", "int_list", [1, 2, 3], lo=0, hi=6),
        Field("contaminations", "float_list", [0.0, 0.01], lo=0.0, hi=0.99),
    ),
    "fig3": (
        Field("distances_km", "float_list", [100.0, 200.0, 400.0], lo=1.0),
        Field("f_target", "float", 0.90, lo=0.0, hi=1.0),
        Field("budget", "int", 16, lo=1),
        Field("trials_search", "int", 24, lo=1),
        Field("trials_final", "int", 128, lo=2),
        Field("n_max", "int", 3, lo=0, hi=6),
        Field("m_min", "int", 1, lo=0, hi=3),
        Field("eta_d", "float", 0.5, lo=0.0, hi=1.0),
        Field("latt_km", "float", 20.0, lo=0.1),
        Field("c_kms", "float", 2.0e5, lo=1.0),
    ),
    "breed": (
        Field("m", "int", 2, lo=0, hi=6),
        Field("delta", "float", 0.4, lo=0.0),
        Field("contamination", "float", 0.0, lo=0.0, hi=0.99),
        Field("trials", "int", 2000, lo=1),
        Field("memory", "bool", True),
    ),
    "swap": (
        Field("alpha", "float", 2.5, lo=0.1),
        Field("k", "int", 0, lo=0, hi=8),
        Field("delta", "float", 0.0, lo=0.0),   # 0 selects the midpoint cut
    ),
    "validate": (
        Field("sample_trials", "int", 2000, lo=100),
    ),
}


def parse_text(text: str) -> dict[str, str]:
    """Raw key -> value strings from a flat config file."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, val = body.split("=", 1)
        key = key.strip()
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        out[key] = val.strip()
    return out


def resolve(command: str, raw: dict[str, str]) -> dict[str, object]:
    """Typed, validated config for a command, defaults filled in."""
    schema = SCHEMAS.get(command)
    if schema is None:
        raise ConfigError(f"unknown command '{command}'")
    known = {f.name: f for f in schema}
    for key in raw:
        if key not in known:
            raise ConfigError(f"key '{key}' is not valid for command '{command}'")
    out: dict[str, object] = {}
    for f in schema:
        if f.name in raw:
            out[f.name] = f.parse(raw[f.name])
        else:
            f.check(f.default)
            out[f.name] = f.default
    return out


def serialize(config: dict[str, object]) -> str:
    """Render a typed config back to the flat key = value format."""
    lines = []
    for key, val in config.items():
        if isinstance(val, list):
            body = ", ".join(repr(x) for x in val)
        else:
            body = repr(val)
        lines.append(f"{key} = {body}")
    return "\n".join(lines) + "\n"


def load(command: str, path: str | None) -> dict[str, object]:
    raw = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            raw = parse_text(fh.read())
    return resolve(command, raw)
