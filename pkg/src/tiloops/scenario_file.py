"""Plain-text scenario files.

Grammar (one item per line; blank lines and ``#`` comments are ignored)::

    file     := section*
    section  := "[" name "]" NEWLINE entry*
    entry    := key "=" value
    name     := "scenario" | "emitter" | "absorber." ID | "timeline" | "branch"

Sections and keys:

``[scenario]``        optional; ``name`` (free text)
``[emitter]``         one ``MODE = AMPLITUDE`` per mode, in basis order
``[absorber.ID]``     ``position`` (signed real), ``mode``; optionally all three of
                      ``relocation.trigger_time``, ``relocation.new_position``,
                      ``relocation.new_mode``
``[timeline]``        ``t0``, ``t1``, ``t2``
``[branch]``          ``mode``

``AMPLITUDE`` is a real number, a pure imaginary ``<real>i``, or a complex
``<real>+<real>i`` / ``<real>-<real>i``, e.g. ``0.6``, ``0.5i``, ``0.3-0.4i``.
Keys and mode names are case-sensitive. Every error reports the 1-based line
number and the offending field.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

from .exceptions import InvalidScenario, ScenarioParseError
from .scenario import Absorber, Relocation, Scenario, Timeline

__all__ = ["parse_amplitude", "format_amplitude", "loads_scenario", "load_scenario", "dumps_scenario"]

_REAL = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_AMP_RE = re.compile(rf"^(?:(?P<re>{_REAL})(?P<im>[+-](?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)i|(?P<pure>{_REAL})i|(?P<real>{_REAL}))$")
_SECTION_RE = re.compile(r"^\[([^\]]+)\]$")
_ID_RE = re.compile(r"^[A-Za-z0-9_\-]+$")
_RELOCATION_KEYS = ("relocation.trigger_time", "relocation.new_position", "relocation.new_mode")


def parse_amplitude(text: str) -> complex:
    m = _AMP_RE.match(text.replace(" ", ""))
    if m is None:
        raise ValueError(f"not an amplitude: {text!r}")
    if m["real"] is not None:
        return complex(float(m["real"]), 0.0)
    if m["pure"] is not None:
        return complex(0.0, float(m["pure"]))
    return complex(float(m["re"]), float(m["im"]))


def format_amplitude(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def _number(value: str, line: int, key: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ScenarioParseError(f"expected a real number, got {value!r}", line, key) from None
    if not math.isfinite(x):
        raise ScenarioParseError("must be finite", line, key)
    return x


def loads_scenario(text: str, name: str = "custom") -> Scenario:
    """Parse and validate a scenario; raises :class:`ScenarioParseError` with line and field."""
    sections: dict[str, tuple[int, dict[str, tuple[int, str]]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            sec = m.group(1).strip()
            if sec not in ("scenario", "emitter", "timeline", "branch") and not (
                sec.startswith("absorber.") and _ID_RE.match(sec[len("absorber."):])
            ):
                raise ScenarioParseError("unknown section", lineno, f"[{sec}]")
            if sec in sections:
                raise ScenarioParseError("duplicate section", lineno, f"[{sec}]")
            sections[sec] = (lineno, {})
            current = sec
            continue
        if "=" not in line:
            raise ScenarioParseError("expected 'key = value'", lineno, line)
        key, value = (part.strip() for part in line.split("=", 1))
        if current is None:
            raise ScenarioParseError("entry outside of any section", lineno, key)
        if not key or not value:
            raise ScenarioParseError("empty key or value", lineno, key or "<empty>")
        entries = sections[current][1]
        if key in entries:
            raise ScenarioParseError("duplicate key", lineno, f"{current}.{key}")
        entries[key] = (lineno, value)

    last = len(text.splitlines()) or 1

    def need(sec: str) -> tuple[int, dict[str, tuple[int, str]]]:
        if sec not in sections:
            raise ScenarioParseError("missing section", last, f"[{sec}]")
        return sections[sec]

    def only(sec: str, allowed) -> None:
        for key, (lineno, _) in need(sec)[1].items():
            if key not in allowed:
                raise ScenarioParseError("unknown key", lineno, f"{sec}.{key}")

    def get(sec: str, key: str) -> tuple[int, str]:
        header, entries = need(sec)
        if key not in entries:
            raise ScenarioParseError("missing key", header, f"{sec}.{key}")
        return entries[key]

    if "scenario" in sections:
        only("scenario", ("name",))
        if "name" in sections["scenario"][1]:
            name = sections["scenario"][1]["name"][1]

    _, emitter = need("emitter")
    state = {}
    for mode, (lineno, value) in emitter.items():
        if not _ID_RE.match(mode):
            raise ScenarioParseError("invalid mode name", lineno, f"emitter.{mode}")
        try:
            state[mode] = parse_amplitude(value)
        except ValueError as exc:
            raise ScenarioParseError(str(exc), lineno, f"emitter.{mode}") from None
    if not state:
        raise ScenarioParseError("no modes", need("emitter")[0], "[emitter]")

    only("timeline", ("t0", "t1", "t2"))
    times = [_number(get("timeline", k)[1], get("timeline", k)[0], f"timeline.{k}") for k in ("t0", "t1", "t2")]
    try:
        timeline = Timeline(*times)
    except InvalidScenario as exc:
        raise ScenarioParseError(str(exc), need("timeline")[0], "[timeline]") from None

    absorbers = []
    for sec, (header, entries) in sections.items():
        if not sec.startswith("absorber."):
            continue
        only(sec, ("position", "mode") + _RELOCATION_KEYS)
        pline, pval = get(sec, "position")
        _, mode = get(sec, "mode")
        relocation = None
        present = [k for k in _RELOCATION_KEYS if k in entries]
        if present:
            missing = [k for k in _RELOCATION_KEYS if k not in entries]
            if missing:
                raise ScenarioParseError("incomplete relocation rule", header, f"{sec}.{missing[0]}")
            tl, tv = entries["relocation.trigger_time"]
            nl, nv = entries["relocation.new_position"]
            relocation = Relocation(
                _number(tv, tl, f"{sec}.relocation.trigger_time"),
                _number(nv, nl, f"{sec}.relocation.new_position"),
                entries["relocation.new_mode"][1],
            )
        absorbers.append(Absorber(sec[len("absorber."):], _number(pval, pline, f"{sec}.position"), mode, relocation))

    only("branch", ("mode",))
    _, branch_mode = get("branch", "mode")

    scenario = Scenario(tuple(state), state, tuple(absorbers), timeline, branch_mode, name)
    try:
        return scenario.validate()
    except InvalidScenario as exc:
        line, fld = _locate(str(exc), sections)
        raise ScenarioParseError(str(exc), line, fld) from None


def _locate(message: str, sections) -> tuple[int, str]:
    # Point validation failures at the section they concern.
    m = re.match(r"absorber '([^']+)'", message)
    if m and f"absorber.{m.group(1)}" in sections:
        return sections[f"absorber.{m.group(1)}"][0], f"[absorber.{m.group(1)}]"
    if message.startswith("branch mode"):
        return sections["branch"][1]["mode"][0], "branch.mode"
    if message.startswith(("emitter", "basis")):
        return sections["emitter"][0], "[emitter]"
    first_absorber = next((s for s in sections if s.startswith("absorber.")), None)
    if first_absorber and message.startswith(("absorber", "at most", "modes")):
        return sections[first_absorber][0], f"[{first_absorber}]"
    return sections["branch"][0], "[branch]"


def load_scenario(path) -> Scenario:
    path = Path(path)
    return loads_scenario(path.read_text(encoding="utf-8"), name=path.stem)


def dumps_scenario(s: Scenario) -> str:
    lines = ["[scenario]", f"name = {s.name}", "", "[emitter]"]
    lines += [f"{mode} = {format_amplitude(amp)}" for mode, amp in s.emitter_state]
    for a in s.absorbers:
        lines += ["", f"[absorber.{a.id}]", f"position = {float(a.position)!r}", f"mode = {a.mode}"]
        if a.relocation is not None:
            r = a.relocation
            lines += [
                f"relocation.trigger_time = {float(r.trigger_time)!r}",
                f"relocation.new_position = {float(r.new_position)!r}",
                f"relocation.new_mode = {r.new_mode}",
            ]
    t = s.timeline
    lines += ["", "[timeline]", f"t0 = {float(t.t0)!r}", f"t1 = {float(t.t1)!r}", f"t2 = {float(t.t2)!r}"]
    lines += ["", "[branch]", f"mode = {s.branch_mode}", ""]
    return "\n".join(lines)
