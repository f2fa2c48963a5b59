"""Instance configuration files.

An INI-style file with sections ``[space] [weight] [psi] [phi]`` and the
optional ``[asserted]``, ``[asserted.C]``, ``[asserted.M]``, ``[eta]``,
``[asserted.eta]`` and ``[policy]``::

    [space]
    space = tree(b=2)

    [weight]
    rule = [len == 0 -> 1, else -> 1/len]

    [psi]
    rule = [len == 0 -> 1, else -> len]

    [phi]
    rule = root

    [asserted]
    ratio_sup = 1
    ratio_sup.source = direct computation

Rule texts use the rule language verbatim and may continue on indented lines.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError
from .exprdsl import FACT_TYPES, AssertedFacts, parse_map_rule, parse_scalar_rule
from .quantities import OperatorInstance, Policy
from .space import parse_space

FACT_SECTIONS = {"asserted": None, "asserted.C": "C", "asserted.M": "M", "asserted.eta": "eta"}
RULE_SECTIONS = ("weight", "psi", "phi", "eta")
POLICY_KEYS = {
    "radius": Fraction,
    "rel_tol": float,
    "abs_tol": float,
    "zero_tol": float,
    "divergence": float,
    "window": int,
    "fiber_budget": int,
    "seed": int,
    "trials": int,
    "budget": int,
}
REQUIRED = ("space", "weight", "psi", "phi")


@dataclass
class InstanceConfig:
    name: str
    space: str
    weight: str
    psi: str
    phi: str
    eta: str | None = None
    facts: dict = field(default_factory=dict)
    fact_sources: dict = field(default_factory=dict)
    component_facts: dict = field(default_factory=dict)
    component_sources: dict = field(default_factory=dict)
    policy: dict = field(default_factory=dict)
    base_dir: Path | None = None

    def build(self) -> OperatorInstance:
        """Parse every rule and assemble the operator instance."""
        space = parse_space(self.space, self.base_dir)
        weight = parse_scalar_rule(self.weight)
        psi = parse_scalar_rule(self.psi)
        phi = parse_map_rule(self.phi)
        eta = parse_map_rule(self.eta) if self.eta else None
        facts = AssertedFacts.from_strings(self.facts, self.fact_sources)
        components = {
            label: AssertedFacts.from_strings(items, self.component_sources.get(label))
            for label, items in self.component_facts.items()
        }
        return OperatorInstance(space, weight, psi, phi, facts, self.name, components, eta)

    def make_policy(self, **overrides) -> Policy:
        values = {k: v for k, v in self.policy.items() if k != "budget"}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return Policy(**values)

    @property
    def budget(self) -> int | None:
        return self.policy.get("budget")

    def echo(self) -> dict:
        out = {"name": self.name, "space": self.space, "weight": self.weight, "psi": self.psi, "phi": self.phi}
        if self.eta:
            out["eta"] = self.eta
        if self.facts:
            out["asserted"] = dict(self.facts)
        for label, items in sorted(self.component_facts.items()):
            out[f"asserted.{label}"] = dict(items)
        if self.policy:
            out["policy"] = {k: str(v) for k, v in self.policy.items()}
        return out


def _parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"), interpolation=None)
    p.optionxform = str
    return p


def parse_config_text(text: str, name: str = "", base_dir: Path | None = None) -> InstanceConfig:
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from None
    sections = set(parser.sections())
    allowed = {"space", "policy", *RULE_SECTIONS, *FACT_SECTIONS}
    unknown = sorted(sections - allowed)
    if unknown:
        raise ConfigError(f"unknown section [{unknown[0]}]")
    missing = [s for s in REQUIRED if s not in sections]
    if missing:
        raise ConfigError(f"missing section [{missing[0]}]")

    def only(section: str, key: str) -> str:
        keys = list(parser[section])
        extra = [k for k in keys if k != key]
        if extra:
            raise ConfigError(f"unknown key {extra[0]!r} in [{section}]")
        if key not in parser[section]:
            raise ConfigError(f"[{section}] needs a {key!r} entry")
        return " ".join(parser[section][key].split("\n")).strip()

    cfg = InstanceConfig(
        name=name,
        space=only("space", "space"),
        weight=only("weight", "rule"),
        psi=only("psi", "rule"),
        phi=only("phi", "rule"),
        eta=only("eta", "rule") if "eta" in sections else None,
        base_dir=base_dir,
    )
    for section, label in FACT_SECTIONS.items():
        if section not in sections:
            continue
        values, sources = {}, {}
        for key, raw in parser[section].items():
            fact, _, suffix = key.partition(".")
            if fact not in FACT_TYPES or suffix not in ("", "source"):
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            target = sources if suffix else values
            target[fact] = " ".join(raw.split("\n")).strip()
        orphan = sorted(set(sources) - set(values))
        if orphan:
            raise ConfigError(f"source given for unasserted fact {orphan[0]!r} in [{section}]")
        if label is None:
            cfg.facts, cfg.fact_sources = values, sources
        else:
            cfg.component_facts[label] = values
            cfg.component_sources[label] = sources
    if "policy" in sections:
        for key, raw in parser["policy"].items():
            kind = POLICY_KEYS.get(key)
            if kind is None:
                raise ConfigError(f"unknown key {key!r} in [policy]")
            try:
                cfg.policy[key] = kind(raw.strip())
            except (ValueError, ZeroDivisionError):
                raise ConfigError(f"bad value {raw!r} for policy key {key!r}") from None
    return cfg


def load_config(path) -> InstanceConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config_text(text, name=path.stem, base_dir=path.parent)
