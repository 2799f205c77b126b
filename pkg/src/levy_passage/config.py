"""Process-spec configuration files (TOML).

Example::

    label = "cramer-lundberg"
    drift = 3.0

    [measure]
    kind = "gamma_mixture"
    terms = [[1.0, 1.0, 0]]     # (rho, beta, m)

Supported ``measure.kind`` values: ``none``, ``gamma_mixture``, ``atoms``
(``atoms = [[y, mass], ...]``), ``compact_density`` (``breaks``,
``coeffs``), ``power_tail`` (``amplitude``, ``exponent``, ``cutoff``) and
``sum`` (``[[measure.parts]]`` tables, each with its own ``kind``).
"""

from __future__ import annotations

import re
from pathlib import Path

try:
    import tomllib as tomli
except ImportError:  # Python < 3.11
    import tomli

from .errors import ConfigError
from .measures import (
    NO_JUMPS,
    Atoms,
    CompactDensity,
    GammaMixture,
    MeasureSum,
    PowerTail,
)
from .model import ProcessSpec

_KINDS = ("none", "gamma_mixture", "atoms", "compact_density", "power_tail", "sum")


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=", re.M)
    m = pat.search(text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _need(block: dict, key: str, path: str, text: str):
    if key not in block:
        raise ConfigError("missing required field", field=f"{path}{key}",
                          line=_line_of(text, path.split(".")[0] if path else key))
    return block[key]


def _num(v, fld: str, text: str, leaf: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", field=fld,
                          line=_line_of(text, leaf))
    return float(v)


def _measure(block: dict, path: str, text: str):
    if not isinstance(block, dict):
        raise ConfigError("measure must be a table", field=path.rstrip("."))
    kind = _need(block, "kind", path, text)
    if kind not in _KINDS:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {_KINDS}",
                          field=f"{path}kind", line=_line_of(text, "kind"))
    try:
        if kind == "none":
            return NO_JUMPS
        if kind == "gamma_mixture":
            terms = _need(block, "terms", path, text)
            return GammaMixture(tuple(tuple(t) for t in terms))
        if kind == "atoms":
            atoms = _need(block, "atoms", path, text)
            return Atoms(tuple(tuple(a) for a in atoms))
        if kind == "compact_density":
            br = _need(block, "breaks", path, text)
            cf = _need(block, "coeffs", path, text)
            return CompactDensity(tuple(br), tuple(tuple(r) for r in cf))
        if kind == "power_tail":
            vals = [_num(_need(block, k, path, text), f"{path}{k}", text, k)
                    for k in ("amplitude", "exponent", "cutoff")]
            return PowerTail(*vals)
        parts = _need(block, "parts", path, text)
        return MeasureSum(tuple(_measure(p, f"{path}parts[{i}].", text)
                                for i, p in enumerate(parts)))
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), field=f"{path}{kind}",
                          line=_line_of(text, "kind")) from exc


def parse_spec(text: str) -> ProcessSpec:
    """Parse TOML text into a :class:`ProcessSpec`."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}",
                          line=int(m.group(1)) if m else None) from exc
    drift = _num(_need(doc, "drift", "", text), "drift", text, "drift")
    measure = _measure(doc.get("measure", {"kind": "none"}), "measure.", text)
    label = str(doc.get("label", ""))
    return ProcessSpec(drift, measure, label)


def load_spec(path: str | Path) -> ProcessSpec:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from exc
    spec = parse_spec(text)
    if not spec.label:
        spec = ProcessSpec(spec.drift, spec.measure, p.stem)
    return spec


def dump_spec(spec: ProcessSpec) -> str:
    """Serialize a spec back to TOML text (round-trips through parse_spec)."""
    lines = [f'label = "{spec.label}"', f"drift = {spec.drift!r}", ""]
    lines += _dump_measure(spec.measure, "measure")
    return "\n".join(lines) + "\n"


def _dump_measure(m, header: str, array: bool = False) -> list[str]:
    out = [f"[[{header}]]" if array else f"[{header}]"]
    if isinstance(m, GammaMixture):
        out += ['kind = "gamma_mixture"', f"terms = {[list(t) for t in m.terms]}"]
    elif isinstance(m, Atoms):
        if not m.atoms:
            out += ['kind = "none"']
        else:
            out += ['kind = "atoms"', f"atoms = {[list(a) for a in m.atoms]}"]
    elif isinstance(m, CompactDensity):
        out += ['kind = "compact_density"', f"breaks = {list(m.breaks)}",
                f"coeffs = {[list(r) for r in m.coeffs]}"]
    elif isinstance(m, PowerTail):
        out += ['kind = "power_tail"', f"amplitude = {m.amplitude!r}",
                f"exponent = {m.exponent!r}", f"cutoff = {m.cutoff!r}"]
    else:
        out += ['kind = "sum"', ""]
        for p in m.parts:
            out += _dump_measure(p, f"{header}.parts", array=True) + [""]
    return out
