"""The purchase statute theory and its scenario suite."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .kernel import Formula, Theory
from .parser import ParseError, _Parser, _annotate_vars, load_theory, parse_facts
from .semantics import AxiomResult, InterpretationError, build_interpretation, check_theory

SENT = "SENT"
SENT_LITERAL = "SENT_LITERAL"

SCENARIO_ORDER = (
    "villa_sale",
    "no_document",
    "no_purchase_fact",
    "movables_only",
    "signing_time_equality",
    "two_property_lot",
    "mixed_lot",
)


def data_path(name: str) -> Path:
    return Path(str(resources.files("pml") / "data" / name))


def data_text(name: str) -> str:
    return data_path(name).read_text(encoding="utf-8")


def sent_theory() -> Theory:
    """Purchase signature with the sort-correct SENT axiom."""
    return load_theory(data_text("purchase.pml"))


def sent_literal() -> Formula:
    """SENT with PuDo applied to a single property instead of the whole lot.

    It is not well-sorted against the purchase signature; see
    ``purchase_literal.pml``.
    """
    doc = _Parser(data_text("purchase_literal.pml")).spec()
    (name, f), = doc.axioms
    assert name == SENT_LITERAL
    return _annotate_vars(f, {})


class ScenarioMalformed(Exception):
    pass


@dataclass(frozen=True)
class Scenario:
    name: str
    facts: str
    axiom: str
    expected: bool
    rationale: str


@dataclass(frozen=True)
class ScenarioReport:
    scenario: Scenario
    result: AxiomResult

    @property
    def passed(self) -> bool:
        return self.result.value == self.scenario.expected

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.scenario.name}: {self.result.line()}"
        if not self.passed:
            text += f" (expected {'true' if self.scenario.expected else 'false'})"
        return text


_DIRECTIVE = re.compile(r"^#\s*(expect|rationale):\s*(.*)$")


def scenario_from_text(text: str, name: str | None = None) -> Scenario:
    """Read a scenario from fact-file text carrying ``# expect: AXIOM=bool`` and
    ``# rationale:`` comment lines."""
    expect = None
    rationale = []
    for line in text.splitlines():
        m = _DIRECTIVE.match(line.strip())
        if not m:
            continue
        if m.group(1) == "expect":
            axiom, _, value = m.group(2).partition("=")
            if value.strip() not in ("true", "false"):
                raise ScenarioMalformed(f"bad expectation {m.group(2)!r}")
            expect = (axiom.strip(), value.strip() == "true")
        else:
            rationale.append(m.group(2).strip())
    if expect is None:
        raise ScenarioMalformed("scenario has no '# expect: AXIOM=true|false' line")
    if name is None:
        m = re.search(r"^\s*model\s+([A-Za-z_][A-Za-z0-9_]*)", text, re.M)
        name = m.group(1) if m else "scenario"
    return Scenario(name, text, expect[0], expect[1], " ".join(rationale))


def builtin_scenarios() -> list[Scenario]:
    out = []
    for name in SCENARIO_ORDER:
        path = "villa_sale.facts" if name == "villa_sale" else f"scenarios/{name}.facts"
        out.append(scenario_from_text(data_text(path), name))
    return out


def run_scenario(s: Scenario, theory: Theory | None = None) -> ScenarioReport:
    theory = theory or sent_theory()
    try:
        doc = parse_facts(s.facts, theory.signature)
        interp = build_interpretation(theory.signature, doc)
        verdict = check_theory(interp, theory, [s.axiom])
    except (ParseError, InterpretationError) as e:
        raise ScenarioMalformed(f"scenario {s.name}: {e}") from e
    except KeyError as e:
        raise ScenarioMalformed(f"scenario {s.name}: unknown axiom {e}") from e
    return ScenarioReport(s, verdict.results[0])
