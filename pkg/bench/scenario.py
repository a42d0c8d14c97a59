"""
Scenario file reader and writer.

Line-oriented ``key = value`` pairs in INI-style sections. ``[scenario]``,
``[groups]``, ``[address_space]`` and ``[zones]`` appear at most once;
``[thread]`` and ``[event]`` repeat. ``#`` and ``;`` start comments. See
``docs/scenario-format.md``.
"""
import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import ValidationError as PydanticValidationError

from error_handling import NotFoundError, ValidationError
from .config import CRITICALITY_NAMES, POLICY_NAMES, ScenarioConfig, ThreadSpec

logger = logging.getLogger("tek.bench")

SINGLE_SECTIONS = {
    "scenario": None,
    "groups": "group_shares",
    "address_space": "address_space",
    "zones": "zones",
}
REPEATED_SECTIONS = {"thread": "threads", "event": "events"}

_SECTION = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
_PAIR = re.compile(r"^([A-Za-z_][A-Za-z0-9_.]*)\s*=\s*(.*)$")

Loc = Tuple[Any, ...]


def _field_error(field: str, line: Optional[int], message: str) -> Dict[str, Any]:
    return {"field": field, "line": line, "message": message}


def _raise(errors: List[Dict[str, Any]], source: str) -> None:
    first = errors[0]
    where = f"{source}:{first['line']}" if first["line"] else source
    raise ValidationError(
        f"{where}: {first['field']}: {first['message']}",
        details={"source": source, "errors": errors},
    )


def _read_sections(text: str, source: str) -> Tuple[Dict[str, Any], Dict[Loc, int]]:
    raw: Dict[str, Any] = {}
    lines: Dict[Loc, int] = {}
    errors: List[Dict[str, Any]] = []
    seen_single = set()
    target: Optional[Dict[str, Any]] = None
    prefix: Loc = ()

    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue

        header = _SECTION.match(stripped)
        if header:
            name = header.group(1).lower()
            if name in SINGLE_SECTIONS:
                if name in seen_single:
                    errors.append(_field_error(name, number, "section repeated"))
                seen_single.add(name)
                key = SINGLE_SECTIONS[name]
                if key is None:
                    target, prefix = raw, ()
                else:
                    target = raw.setdefault(key, {})
                    prefix = (key,)
            elif name in REPEATED_SECTIONS:
                key = REPEATED_SECTIONS[name]
                blocks = raw.setdefault(key, [])
                blocks.append({})
                target = blocks[-1]
                prefix = (key, len(blocks) - 1)
            else:
                errors.append(_field_error(name, number, "unknown section"))
                target, prefix = None, ()
                continue
            lines[prefix] = number
            continue

        pair = _PAIR.match(stripped)
        if not pair:
            errors.append(_field_error("", number, f"expected 'key = value', got {stripped!r}"))
            continue
        if target is None:
            if not errors or errors[-1]["message"] != "unknown section":
                errors.append(_field_error(pair.group(1), number, "key outside of a known section"))
            continue
        key, value = pair.group(1), pair.group(2).strip()
        if key in target:
            errors.append(_field_error(".".join(map(str, prefix + (key,))), number, "duplicate key"))
            continue
        target[key] = value
        lines[prefix + (key,)] = number

    if errors:
        _raise(errors, source)
    return raw, lines


def _line_for(loc: Loc, lines: Dict[Loc, int]) -> Optional[int]:
    for end in range(len(loc), -1, -1):
        if loc[:end] in lines:
            return lines[loc[:end]]
    return None


def parse_scenario_text(text: str, source: str = "<scenario>") -> ScenarioConfig:
    """
    Parse and validate scenario text.

    Raises:
        ValidationError: With ``details["errors"]`` listing each bad field,
            its line and the reason
    """
    raw, lines = _read_sections(text, source)
    try:
        return ScenarioConfig.model_validate(raw)
    except PydanticValidationError as exc:
        errors = []
        for error in exc.errors():
            loc = tuple(p for p in error["loc"] if p != "[key]")
            if error["type"] == "unknown_role":
                loc = ("events", error["ctx"]["index"], "role")
            field = ".".join(str(p) for p in loc) or "scenario"
            message = error["msg"].removeprefix("Value error, ")
            errors.append(_field_error(field, _line_for(loc, lines), message))
        _raise(errors, source)


def parse_scenario(path: Union[str, Path]) -> ScenarioConfig:
    """
    Read a scenario file.

    Raises:
        NotFoundError: The file does not exist
        ValidationError: The scenario is malformed
    """
    path = Path(path)
    if not path.is_file():
        raise NotFoundError("scenario", str(path), f"scenario file not found: {path}")
    config = parse_scenario_text(path.read_text(encoding="utf-8"), source=str(path))
    logger.debug("scenario parsed", extra={"scenario": config.name, "threads": config.thread_count})
    return config


def _policy_name(value) -> str:
    return next(name for name, policy in POLICY_NAMES.items() if policy == value)


def _criticality_name(value) -> str:
    return next(name for name, crit in CRITICALITY_NAMES.items() if crit == value)


def _thread_lines(spec: ThreadSpec) -> List[str]:
    lines = [
        f"count = {spec.count}",
        f"group = {spec.group.value}",
        f"nice = {spec.nice}",
        f"policy = {_policy_name(spec.policy)}",
        f"criticality = {_criticality_name(spec.criticality)}",
        f"role = {spec.role}",
        f"behavior = {', '.join(str(p) for p in spec.behavior)}",
        f"loop = {'true' if spec.loop else 'false'}",
        f"arrival = {spec.arrival}",
        f"arrival_step = {spec.arrival_step}",
    ]
    if spec.stack_request_kib is not None:
        lines.append(f"stack_request_kib = {spec.stack_request_kib}")
    if spec.stack_peak_kib is not None:
        lines.append(f"stack_peak_kib = {spec.stack_peak_kib}")
    return lines


def serialize_scenario(config: ScenarioConfig) -> str:
    """Render ``config`` in the scenario format; parsing it back gives an equal config."""
    out = [
        "[scenario]",
        f"name = {config.name}",
        f"seed = {config.seed}",
        f"horizon_ticks = {config.horizon_ticks}",
        f"mode = {config.mode.value}",
        f"weight_table = {config.weight_table.value}",
        f"monitor_period = {config.monitor_period}",
        f"warmup_runs = {config.warmup_runs}",
        f"fixed_stack_kib = {config.fixed_stack_kib}",
        f"max_stack_kib = {config.max_stack_kib}",
    ]
    if config.max_lazy_delay is not None:
        out.append(f"max_lazy_delay = {config.max_lazy_delay}")

    out += ["", "[groups]"]
    out += [f"{name.value} = {share}" for name, share in config.group_shares.items()]
    out += [
        "",
        "[address_space]",
        f"total_kib = {config.address_space.total_kib}",
        f"reserved_kib = {config.address_space.reserved_kib}",
        "",
        "[zones]",
        f"low_frac = {config.zones.low_frac}",
        f"high_frac = {config.zones.high_frac}",
    ]
    for spec in config.threads:
        out += ["", "[thread]"] + _thread_lines(spec)
    for event in config.events:
        out += [
            "",
            "[event]",
            f"role = {event.role}",
            f"start = {event.start}",
            f"period = {event.period}",
            f"stagger = {event.stagger}",
            f"jitter = {event.jitter}",
        ]
        if event.count is not None:
            out.append(f"count = {event.count}")
    return "\n".join(out) + "\n"
