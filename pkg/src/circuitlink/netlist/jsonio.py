"""Canonical JSON netlist documents (format tag ``gnn-aclp-netlist-v1``)."""
from __future__ import annotations

import json

from .types import (
    BJT_CLASSES,
    CLASS_PORTS,
    MOS_CLASSES,
    Component,
    Issue,
    Netlist,
    NetlistError,
)
from .validate import validate

FORMAT = "gnn-aclp-netlist-v1"


def to_dict(netlist: Netlist) -> dict:
    return {
        "format": FORMAT,
        "title": netlist.title,
        "components": [
            {
                "id": c.id,
                "ctype": c.ctype,
                "ports": {p: c.port_bindings[p] for p in CLASS_PORTS[c.ctype]},
                "params": dict(c.params),
            }
            for c in netlist.components
        ],
    }


def to_json(netlist: Netlist) -> str:
    report = validate(netlist)
    if not report.ok:
        raise NetlistError(report.errors)
    return json.dumps(to_dict(netlist), indent=2, ensure_ascii=False)


def _fail(code: str, message: str):
    raise NetlistError([Issue("error", 0, code, message)])


def from_dict(doc) -> Netlist:
    if not isinstance(doc, dict):
        _fail("malformed", "top level must be an object")
    if doc.get("format") != FORMAT:
        _fail("schema-version", f"expected format {FORMAT!r}, got {doc.get('format')!r}")
    title = doc.get("title", "")
    comps = doc.get("components")
    if not isinstance(title, str) or not isinstance(comps, list):
        _fail("malformed", "'title' must be a string and 'components' a list")

    netlist = Netlist(title=title, source_format="json")
    for idx, entry in enumerate(comps):
        if not isinstance(entry, dict):
            _fail("malformed", f"component #{idx} is not an object")
        cid, ctype = entry.get("id"), entry.get("ctype")
        ports, params = entry.get("ports"), entry.get("params", {})
        if not isinstance(cid, str) or not cid:
            _fail("malformed", f"component #{idx} has no id")
        if ctype not in CLASS_PORTS:
            _fail("unknown-ctype", f"{cid}: unknown ctype {ctype!r}")
        if not isinstance(ports, dict) or not isinstance(params, dict):
            _fail("malformed", f"{cid}: 'ports' and 'params' must be objects")
        if set(ports) != set(CLASS_PORTS[ctype]):
            _fail(
                "port-set-mismatch",
                f"{cid}: ports {sorted(ports)} != {list(CLASS_PORTS[ctype])} for {ctype}",
            )
        if not all(isinstance(v, str) for v in [*ports.values(), *params.values()]):
            _fail("malformed", f"{cid}: port nets and param values must be strings")
        comp = Component(
            cid,
            ctype,
            {p: ports[p] for p in CLASS_PORTS[ctype]},
            {str(k).lower(): v for k, v in params.items()},
        )
        netlist.components.append(comp)
        # in JSON the ctype is the device kind, so named models resolve to it
        if ctype in MOS_CLASSES or ctype in BJT_CLASSES:
            model = comp.params.get("model")
            if model is not None and netlist.resolve_model(model) is None:
                netlist.model_cards[model] = ctype.upper()
    return netlist


def from_json(text: str) -> Netlist:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        _fail("malformed", f"invalid JSON: {exc}")
    return from_dict(doc)
