"""Reader and writer for the supported SPICE subset.

Cards understood (element letters are case-insensitive)::

    Rname n+ n- [value] [k=v ...]          -> Res      (Pos, Neg)
    Cname n+ n- [value] [k=v ...]          -> Cap      (Pos, Neg)
    Lname n+ n- [value] [k=v ...]          -> Ind      (Pos, Neg)
    Vname n+ n- [spec ...]                 -> Voltage  (Pos, Neg)
    Iname n+ n- [spec ...]                 -> Current  (In, Out)
    Dname anode cathode model [k=v ...]    -> Diode    (In, Out)
    Mname d g s [b] model [k=v ...]        -> NMOS/PMOS via model kind
    Qname c b e model [k=v ...]            -> NPN/PNP via model kind (unknown -> NPN)
    Xname n1 .. nk subckt [k=v ...]        -> amplifier / cross BJT by subckt name
    .title text | .model name kind [(...)] | .op | .end

Lines starting with ``*`` are comments, ``;`` starts an inline comment and a
leading ``+`` continues the previous card. Anything after ``.end`` is ignored.
"""
from __future__ import annotations

import re

from .types import (
    BJT_CLASSES,
    CLASS_PORTS,
    MOS_CLASSES,
    Component,
    Issue,
    Netlist,
    NetlistError,
    ValidationReport,
)
from .validate import ELEMENT_LETTER, validate

_KV = re.compile(r"^([A-Za-z_][\w.]*)=(.+)$")

# X-card subcircuit name fragments, checked in order.
SUBCKT_CLASSES: tuple[tuple[str, str], ...] = (
    ("npn_cross", "NPN_cross"),
    ("pnp_cross", "PNP_cross"),
    ("dido", "Dido_amp"),
    ("diso", "Diso_amp"),
    ("siso", "Siso_amp"),
)
DEFAULT_SUBCKT = {label: label.lower() for _, label in SUBCKT_CLASSES}
DEFAULT_DIODE_MODEL = "D"

_TWO_TERMINAL = {
    "R": ("Res", ("Pos", "Neg")),
    "C": ("Cap", ("Pos", "Neg")),
    "L": ("Ind", ("Pos", "Neg")),
    "V": ("Voltage", ("Pos", "Neg")),
    "I": ("Current", ("In", "Out")),
}
_CONTROL = {".title", ".model", ".op", ".end"}


def _logical_lines(text: str) -> list[tuple[int, str]]:
    """Join continuation lines and strip comments; returns (first line number, card)."""
    cards: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped or stripped.startswith("*"):
            continue
        if stripped.startswith("+"):
            if cards:
                start, prev = cards[-1]
                cards[-1] = (start, prev + " " + stripped[1:].strip())
                continue
            stripped = stripped[1:].strip()
            if not stripped:
                continue
        cards.append((lineno, stripped))
    return cards


def _tokens(card: str) -> list[str]:
    card = re.sub(r"\s*=\s*", "=", card)
    return card.split()


def subckt_class(name: str) -> str | None:
    low = name.lower()
    for frag, label in SUBCKT_CLASSES:
        if frag in low:
            return label
    return None


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.issues: list[Issue] = []
        self.netlist = Netlist(source_format="spice")
        # (component, raw model name, element letter) resolved once all .model cards are known
        self.pending: list[tuple[Component, str, str]] = []

    def error(self, line: int, code: str, message: str) -> None:
        self.issues.append(Issue("error", line, code, message))

    def run(self) -> tuple[Netlist, list[Issue]]:
        for lineno, card in _logical_lines(self.text):
            if card.startswith("."):
                if self.control(lineno, card):
                    break
            else:
                self.element(lineno, card)
        self.resolve_models()
        return self.netlist, self.issues

    def control(self, lineno: int, card: str) -> bool:
        """Handle a dot card; returns True on ``.end``."""
        head, _, rest = card.partition(" ")
        kw = head.lower()
        if kw not in _CONTROL:
            self.error(lineno, "unknown-control", f"unsupported control card {head!r}")
            return False
        if kw == ".end":
            return True
        if kw == ".title":
            self.netlist.title = rest.strip()
        elif kw == ".model":
            toks = rest.replace("(", " (").split()
            if len(toks) < 2:
                self.error(lineno, "bad-token-count", ".model needs a name and a device kind")
            else:
                self.netlist.model_cards[toks[0]] = toks[1].upper()
        return False

    def split_params(self, lineno: int, toks: list[str]) -> tuple[list[str], dict[str, str]] | None:
        positional: list[str] = []
        params: dict[str, str] = {}
        for tok in toks:
            m = _KV.match(tok)
            if m:
                params[m.group(1).lower()] = m.group(2)
            elif params:
                self.error(lineno, "syntax", f"positional token {tok!r} after parameters")
                return None
            else:
                positional.append(tok)
        return positional, params

    def element(self, lineno: int, card: str) -> None:
        toks = _tokens(card)
        if not toks:
            return
        name = toks[0]
        letter = name[0].upper()
        args = toks[1:]
        comps = self.netlist.components

        if letter in "VI":
            ctype, ports = _TWO_TERMINAL[letter]
            if len(args) < 2:
                self.error(lineno, "bad-token-count", f"{name}: expected 2 nodes")
                return
            params = {"value": " ".join(args[2:])} if len(args) > 2 else {}
            comps.append(Component(name, ctype, dict(zip(ports, args[:2])), params, line=lineno))
            return

        if letter not in "RCLDMQX":
            self.error(lineno, "unknown-element", f"unknown element letter {letter!r} in {name!r}")
            return
        split = self.split_params(lineno, args)
        if split is None:
            return
        pos, kv = split

        if letter in "RCL":
            ctype, ports = _TWO_TERMINAL[letter]
            if len(pos) not in (2, 3):
                self.error(lineno, "bad-token-count", f"{name}: expected 2 nodes and an optional value")
                return
            params = {"value": pos[2]} if len(pos) == 3 else {}
            params.update(kv)
            comps.append(Component(name, ctype, dict(zip(ports, pos[:2])), params, line=lineno))
        elif letter == "D":
            if len(pos) != 3:
                self.error(lineno, "bad-token-count", f"{name}: expected anode, cathode and model")
                return
            params = {} if pos[2] == DEFAULT_DIODE_MODEL else {"model": pos[2]}
            params.update(kv)
            comps.append(Component(name, "Diode", {"In": pos[0], "Out": pos[1]}, params, line=lineno))
        elif letter == "M":
            if len(pos) == 5:
                d, g, s, b, model = pos
                params = {"bulk": b}
            elif len(pos) == 4:
                d, g, s, model = pos
                params = {}
            else:
                self.error(lineno, "bad-token-count", f"{name}: expected drain gate source [bulk] model")
                return
            params.update(kv)
            comp = Component(name, "NMOS", {"Drain": d, "Source": s, "Gate": g}, params, line=lineno)
            comps.append(comp)
            self.pending.append((comp, model, "M"))
        elif letter == "Q":
            if len(pos) != 4:
                self.error(lineno, "bad-token-count", f"{name}: expected collector base emitter model")
                return
            c, b, e, model = pos
            comp = Component(name, "NPN", {"Base": b, "Emitter": e, "Collector": c}, dict(kv), line=lineno)
            comps.append(comp)
            self.pending.append((comp, model, "Q"))
        else:
            if len(pos) < 2:
                self.error(lineno, "bad-token-count", f"{name}: expected nodes and a subcircuit name")
                return
            *nodes, sub = pos
            ctype = subckt_class(sub)
            if ctype is None:
                self.error(lineno, "unknown-subckt", f"{name}: subcircuit {sub!r} maps to no component class")
                return
            ports = CLASS_PORTS[ctype]
            if len(nodes) != len(ports):
                self.error(lineno, "bad-token-count", f"{name}: {ctype} needs {len(ports)} nodes, got {len(nodes)}")
                return
            params = {} if sub == DEFAULT_SUBCKT[ctype] else {"subckt": sub}
            params.update(kv)
            comps.append(Component(name, ctype, dict(zip(ports, nodes)), params, line=lineno))

    def resolve_models(self) -> None:
        for comp, model, letter in self.pending:
            kind = self.netlist.resolve_model(model)
            allowed = MOS_CLASSES if letter == "M" else BJT_CLASSES
            if kind in allowed:
                ctype = kind
            elif kind is None:
                # unresolved MOS models are reported by the validator
                ctype = "NPN" if letter == "Q" else "NMOS"
            else:
                self.error(comp.line, "model-kind-mismatch", f"{comp.id}: model {model!r} is a {kind}, not a {letter} device")
                ctype = "NPN" if letter == "Q" else "NMOS"
            comp.ctype = ctype
            # keep port order aligned with the class table
            comp.port_bindings = {p: comp.port_bindings[p] for p in CLASS_PORTS[ctype]}
            if model != ctype:
                comp.params = {"model": model, **comp.params}


def read_spice(text: str) -> tuple[Netlist, list[Issue]]:
    """Lenient parse: returns whatever could be read plus the syntax issues found."""
    return _Reader(text).run()


def check_spice(text: str) -> ValidationReport:
    """Syntax and structural issues of a deck, without raising."""
    netlist, issues = read_spice(text)
    return ValidationReport(issues + validate(netlist).issues)


def parse_spice(text: str) -> Netlist:
    netlist, issues = read_spice(text)
    report = ValidationReport(issues + validate(netlist).issues)
    if not report.ok:
        raise NetlistError(report.errors)
    return netlist


def _kv(params: dict[str, str], skip: tuple[str, ...]) -> list[str]:
    return [f"{k}={v}" for k, v in params.items() if k not in skip]


def _card(comp: Component) -> str:
    p = comp.params
    b = comp.port_bindings
    ctype = comp.ctype
    if ctype in ("Res", "Cap", "Ind"):
        toks = [b["Pos"], b["Neg"]] + ([p["value"]] if "value" in p else []) + _kv(p, ("value",))
    elif ctype in ("Voltage", "Current"):
        ports = CLASS_PORTS[ctype]
        toks = [b[ports[0]], b[ports[1]]] + ([p["value"]] if p.get("value") else [])
    elif ctype == "Diode":
        toks = [b["In"], b["Out"], p.get("model", DEFAULT_DIODE_MODEL)] + _kv(p, ("model",))
    elif ctype in MOS_CLASSES:
        nodes = [b["Drain"], b["Gate"], b["Source"]] + ([p["bulk"]] if "bulk" in p else [])
        toks = nodes + [p.get("model", ctype)] + _kv(p, ("model", "bulk"))
    elif ctype in BJT_CLASSES:
        toks = [b["Collector"], b["Base"], b["Emitter"], p.get("model", ctype)] + _kv(p, ("model",))
    else:
        toks = [b[port] for port in CLASS_PORTS[ctype]]
        toks += [p.get("subckt", DEFAULT_SUBCKT[ctype])] + _kv(p, ("subckt",))
    name = comp.id
    letter = ELEMENT_LETTER[ctype]
    if name[:1].upper() != letter:
        name = letter + name
    return " ".join([name, *toks])


def emit_spice(netlist: Netlist) -> str:
    """Deterministic deck for a valid netlist (no trailing newline)."""
    report = validate(netlist)
    if not report.ok:
        raise NetlistError(report.errors)
    lines = [f".title {netlist.title}" if netlist.title else ".title"]
    lines += [_card(c) for c in netlist.components]

    cards = dict(netlist.model_cards)
    known = {name.upper() for name in cards}
    for comp in netlist.components:
        if comp.ctype in MOS_CLASSES or comp.ctype in BJT_CLASSES:
            model = comp.params.get("model", comp.ctype)
            if netlist.resolve_model(model) is None and model.upper() not in known:
                cards[model] = comp.ctype.upper()
                known.add(model.upper())
    lines += [f".MODEL {name} {kind}" for name, kind in cards.items()]
    lines.append(".end")
    return "\n".join(lines)
