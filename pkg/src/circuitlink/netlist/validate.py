"""Structural checks on a Netlist. Never raises; always returns a report."""
from __future__ import annotations

from .types import (
    BJT_CLASSES,
    CLASS_PORTS,
    GROUND_NETS,
    MOS_CLASSES,
    Issue,
    Netlist,
    ValidationReport,
)

ELEMENT_LETTER: dict[str, str] = {
    "Res": "R",
    "Cap": "C",
    "Ind": "L",
    "Voltage": "V",
    "Current": "I",
    "Diode": "D",
    "NMOS": "M",
    "PMOS": "M",
    "NPN": "Q",
    "PNP": "Q",
    "NPN_cross": "X",
    "PNP_cross": "X",
    "Diso_amp": "X",
    "Siso_amp": "X",
    "Dido_amp": "X",
}


def model_name(comp) -> str:
    """Model referenced by an M/Q component; the class label itself when elided."""
    return comp.params.get("model", comp.ctype)


def validate(netlist: Netlist) -> ValidationReport:
    issues: list[Issue] = []

    def err(line, code, msg):
        issues.append(Issue("error", line, code, msg))

    def warn(line, code, msg):
        issues.append(Issue("warning", line, code, msg))

    seen: dict[str, str] = {}
    for comp in netlist.components:
        line = comp.line
        key = str(comp.id).upper()
        if key in seen:
            err(line, "dup-id", f"duplicate component id {comp.id!r} (first seen as {seen[key]!r})")
        else:
            seen[key] = comp.id

        ports = CLASS_PORTS.get(comp.ctype)
        if ports is None:
            err(line, "unknown-class", f"{comp.id}: unknown component class {comp.ctype!r}")
            continue

        bindings = comp.port_bindings if isinstance(comp.port_bindings, dict) else {}
        for port in ports:
            net = bindings.get(port)
            if not isinstance(net, str) or not net:
                err(line, "unbound-port", f"{comp.id}: port {port} is not bound to a net")
        extra = [p for p in bindings if p not in ports]
        if extra:
            err(line, "port-set-mismatch", f"{comp.id}: ports {extra} not defined for {comp.ctype}")

        if comp.ctype in MOS_CLASSES or comp.ctype in BJT_CLASSES:
            name = model_name(comp)
            kind = netlist.resolve_model(name)
            if kind is None:
                if comp.ctype in BJT_CLASSES:
                    warn(line, "model-defaulted", f"{comp.id}: model {name!r} unknown, treated as {comp.ctype}")
                else:
                    err(line, "unresolved-model", f"{comp.id}: model {name!r} has no .MODEL card")
            elif kind.upper() != comp.ctype.upper():
                err(line, "model-kind-mismatch", f"{comp.id}: model {name!r} is {kind}, component is {comp.ctype}")

        letter = ELEMENT_LETTER[comp.ctype]
        if not str(comp.id)[:1].upper() == letter:
            warn(line, "id-prefix", f"{comp.id}: SPICE element of class {comp.ctype} needs prefix {letter!r}")

        nets = [bindings.get(p) for p in ports]
        if len(ports) > 1 and all(n for n in nets) and len(set(nets)) == 1:
            warn(line, "shorted-component", f"{comp.id}: every port is on net {nets[0]!r}")

    first_line: dict[str, int] = {}
    counts: dict[str, int] = {}
    for comp in netlist.components:
        if not isinstance(comp.port_bindings, dict):
            continue
        for net in comp.port_bindings.values():
            if not isinstance(net, str) or not net:
                continue
            counts[net] = counts.get(net, 0) + 1
            first_line.setdefault(net, comp.line)
    for net, n in counts.items():
        if n == 1 and net.upper() not in GROUND_NETS:
            warn(first_line[net], "single-port-net", f"net {net!r} touches only one port")

    return ValidationReport(issues)
