"""Seeded synthetic circuits.

Components are wired connectivity-first: every new component ties one of its
ports to a port of an earlier component, so each circuit's port graph is a
single connected component. Free ports then join an existing net with
probability ``extra_net_prob`` or get a private net of their own.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .netlist.types import CLASS_PORTS, LABELS, Component, Netlist
from .netlist.validate import ELEMENT_LETTER

DEFAULT_WEIGHTS: dict[str, float] = {
    "Res": 3.0,
    "Cap": 2.0,
    "Ind": 1.0,
    "NMOS": 2.0,
    "PMOS": 2.0,
    "NPN": 1.0,
    "PNP": 1.0,
    "Voltage": 1.0,
    "Current": 1.0,
    "Diode": 1.0,
}

_VALUES = {
    "Res": ("100", "1k", "4.7k", "10k"),
    "Cap": ("1p", "100p", "10n"),
    "Ind": ("1u", "10u"),
    "Voltage": ("DC 1.8", "DC 3.3", "DC 5"),
    "Current": ("DC 10u", "DC 1m"),
}


@dataclass(frozen=True)
class GenConfig:
    n_components: tuple[int, int] = (4, 9)
    class_weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    extra_net_prob: float = 0.3
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.n_components
        if lo < 2 or hi < lo:
            raise ValueError(f"n_components must satisfy 2 <= min <= max, got {self.n_components}")
        if any(w < 0 for w in self.class_weights.values()) or not any(self.class_weights.values()):
            raise ValueError("class weights must be non-negative and not all zero")
        unknown = set(self.class_weights) - set(CLASS_PORTS)
        if unknown:
            raise ValueError(f"unknown classes in class_weights: {sorted(unknown)}")
        if not 0.0 <= self.extra_net_prob <= 1.0:
            raise ValueError("extra_net_prob must lie in [0, 1]")

    def labels(self) -> tuple[str, ...]:
        """Classes with positive weight, in class-table order."""
        return tuple(lab for lab in LABELS if self.class_weights.get(lab, 0) > 0)


def generate_circuit(cfg: GenConfig) -> Netlist:
    rng = np.random.default_rng(cfg.seed)
    labels = cfg.labels()
    weights = np.array([cfg.class_weights[lab] for lab in labels], dtype=float)
    lo, hi = cfg.n_components
    n = int(rng.integers(lo, hi + 1))
    classes = [labels[i] for i in rng.choice(len(labels), size=n, p=weights / weights.sum())]

    counters: dict[str, int] = {}
    ids = []
    for ctype in classes:
        letter = ELEMENT_LETTER[ctype]
        counters[letter] = counters.get(letter, 0) + 1
        ids.append(f"{letter}{counters[letter]}")

    bind: list[dict[str, str]] = [{} for _ in classes]
    nets: list[str] = []

    def fresh() -> str:
        nets.append(f"n{len(nets) + 1}")
        return nets[-1]

    for ci in range(1, n):
        cj = int(rng.integers(ci))
        pj = CLASS_PORTS[classes[cj]][int(rng.integers(len(CLASS_PORTS[classes[cj]])))]
        net = bind[cj].get(pj) or fresh()
        bind[cj][pj] = net
        pi = CLASS_PORTS[classes[ci]][int(rng.integers(len(CLASS_PORTS[classes[ci]])))]
        bind[ci][pi] = net

    for ci, ctype in enumerate(classes):
        for port in CLASS_PORTS[ctype]:
            if port in bind[ci]:
                continue
            options = [net for net in nets if net not in bind[ci].values()]
            if options and rng.random() < cfg.extra_net_prob:
                bind[ci][port] = options[int(rng.integers(len(options)))]
            else:
                bind[ci][port] = fresh()

    comps = []
    for ci, ctype in enumerate(classes):
        params = {}
        if ctype in _VALUES:
            choices = _VALUES[ctype]
            params["value"] = choices[int(rng.integers(len(choices)))]
        ports = {p: bind[ci][p] for p in CLASS_PORTS[ctype]}
        comps.append(Component(ids[ci], ctype, ports, params))
    return Netlist(title=f"synthetic circuit {cfg.seed}", components=comps, source_format="spice")


def generate_dataset(cfg: GenConfig, count: int) -> list[Netlist]:
    if count < 1:
        raise ValueError("count must be >= 1")
    return [generate_circuit(replace(cfg, seed=cfg.seed + i)) for i in range(count)]
