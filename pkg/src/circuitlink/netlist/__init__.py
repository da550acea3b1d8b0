from .jsonio import FORMAT, from_dict, from_json, to_dict, to_json
from .spice import check_spice, emit_spice, parse_spice, read_spice
from .types import (
    CLASS_PORTS,
    LABELS,
    Component,
    Issue,
    Netlist,
    NetlistError,
    ValidationReport,
    ports_of,
)
from .validate import validate

__all__ = [
    "CLASS_PORTS",
    "FORMAT",
    "LABELS",
    "Component",
    "Issue",
    "Netlist",
    "NetlistError",
    "ValidationReport",
    "check_spice",
    "emit_spice",
    "from_dict",
    "from_json",
    "parse_spice",
    "ports_of",
    "read_spice",
    "to_dict",
    "to_json",
    "validate",
]
