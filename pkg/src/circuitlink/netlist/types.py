"""Format-neutral netlist IR and the component class table."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

# Table of supported component labels and their port order.
CLASS_PORTS: dict[str, tuple[str, ...]] = {
    "PMOS": ("Drain", "Source", "Gate"),
    "NMOS": ("Drain", "Source", "Gate"),
    "Voltage": ("Pos", "Neg"),
    "Current": ("In", "Out"),
    "NPN": ("Base", "Emitter", "Collector"),
    "NPN_cross": ("Base", "Emitter", "Collector"),
    "PNP": ("Base", "Emitter", "Collector"),
    "PNP_cross": ("Base", "Emitter", "Collector"),
    "Diode": ("In", "Out"),
    "Diso_amp": ("InN", "InP", "Out"),
    "Siso_amp": ("In", "Out"),
    "Dido_amp": ("InN", "InP", "OutN", "OutP"),
    "Cap": ("Pos", "Neg"),
    "Ind": ("Pos", "Neg"),
    "Res": ("Pos", "Neg"),
}

LABELS: tuple[str, ...] = tuple(CLASS_PORTS)

MOS_CLASSES = frozenset({"PMOS", "NMOS"})
BJT_CLASSES = frozenset({"NPN", "PNP"})

# Model names resolved without a .MODEL card (upper-cased key -> device kind).
DEFAULT_MODELS: dict[str, str] = {
    "NMOS": "NMOS",
    "PMOS": "PMOS",
    "NPN": "NPN",
    "PNP": "PNP",
}

GROUND_NETS = frozenset({"0", "GND"})


def ports_of(ctype: str) -> tuple[str, ...]:
    return CLASS_PORTS[ctype]


@dataclass
class Component:
    id: str
    ctype: str
    port_bindings: dict[str, str]
    params: dict[str, str] = field(default_factory=dict)
    # source line (1-based) for diagnostics; 0 when not parsed from text
    line: int = field(default=0, compare=False)

    def structural_key(self) -> tuple:
        return (
            self.id,
            self.ctype,
            tuple(self.port_bindings.items()),
            tuple(sorted(self.params.items())),
        )


@dataclass
class Netlist:
    title: str = ""
    components: list[Component] = field(default_factory=list)
    model_cards: dict[str, str] = field(default_factory=dict)
    source_format: Literal["spice", "json"] = "spice"

    def structurally_equal(self, other: Netlist) -> bool:
        """Compare on id / ctype / port bindings / params, component order included."""
        return [c.structural_key() for c in self.components] == [
            c.structural_key() for c in other.components
        ]

    def resolve_model(self, name: str) -> str | None:
        """Device kind for a model name, through .MODEL cards then built-in defaults."""
        key = name.upper()
        for card, kind in self.model_cards.items():
            if card.upper() == key:
                return kind
        return DEFAULT_MODELS.get(key)

    def nets(self) -> dict[str, list[tuple[str, str]]]:
        """Net name -> list of (component id, port name) in component order."""
        out: dict[str, list[tuple[str, str]]] = {}
        for comp in self.components:
            for port, net in comp.port_bindings.items():
                out.setdefault(net, []).append((comp.id, port))
        return out


@dataclass(frozen=True)
class Issue:
    severity: Literal["error", "warning"]
    line: int
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}:{self.line}:{self.code}: {self.message}"


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "warning"]

    def codes(self) -> list[str]:
        return [i.code for i in self.issues]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "issues": [
                {"severity": i.severity, "line": i.line, "code": i.code, "message": i.message}
                for i in self.issues
            ],
        }


class NetlistError(ValueError):
    """Raised when a netlist cannot be parsed, loaded or emitted.

    ``issues`` holds every error-severity finding; ``code`` is the first one's code.
    """

    def __init__(self, issues: list[Issue]):
        self.issues = list(issues)
        first = self.issues[0]
        self.code = first.code
        self.line = first.line
        super().__init__("; ".join(str(i) for i in self.issues))
