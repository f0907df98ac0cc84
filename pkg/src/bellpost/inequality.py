"""Linear Bell functionals and their exact local bounds.

A functional assigns a rational coefficient to every (joint outcome, joint
setting) pair. Its local bound is the maximum over deterministic local
strategies, found by exhaustive enumeration in lexicographic order so that
ties resolve to the smallest maximiser.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .scm import Behavior, FiniteModel, SafetyReport, as_fraction, behavior, model_support, postselect
from .selection import AllButOneVerdict, SelectionRule, check_all_but_one

DEFAULT_STRATEGY_CAP = 10**7
ZERO = Fraction(0)


class ResourceError(RuntimeError):
    """Enumeration would exceed the configured size cap."""

    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"{size} deterministic strategies exceed the cap of {cap}")


class ShapeError(ValueError):
    """Functional and behavior disagree on settings or outcomes."""


Key = tuple[tuple[str, ...], tuple[str, ...]]  # (outcomes, settings)


@dataclass(frozen=True, eq=False)
class BellFunctional:
    settings: tuple[tuple[str, ...], ...]
    outcomes: tuple[tuple[str, ...], ...]
    coefficients: Mapping[Key, Fraction]
    encoding: Mapping[str, int] | None = None
    name: str = ""

    def __init__(self, settings, outcomes, coefficients, encoding=None, name=""):
        settings = tuple(tuple(map(str, s)) for s in settings)
        outcomes = tuple(tuple(map(str, o)) for o in outcomes)
        if len(settings) != len(outcomes) or not settings:
            raise ShapeError("one setting and one outcome alphabet per party")
        clean = {}
        for (a, x), s in coefficients.items():
            a, x = tuple(map(str, a)), tuple(map(str, x))
            if len(a) != len(outcomes) or any(v not in o for v, o in zip(a, outcomes)):
                raise ShapeError(f"coefficient outcome {a} is outside the scenario")
            if len(x) != len(settings) or any(v not in o for v, o in zip(x, settings)):
                raise ShapeError(f"coefficient setting {x} is outside the scenario")
            s = as_fraction(s, f"coefficient at a={a}, x={x}")
            if s:
                clean[(a, x)] = clean.get((a, x), ZERO) + s
        object.__setattr__(self, "settings", settings)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "coefficients", clean)
        object.__setattr__(self, "encoding", dict(encoding) if encoding else None)
        object.__setattr__(self, "name", name)

    @property
    def parties(self) -> int:
        return len(self.settings)

    def coefficient(self, a, x) -> Fraction:
        return self.coefficients.get((tuple(a), tuple(x)), ZERO)

    def __add__(self, other: "BellFunctional") -> "BellFunctional":
        if (self.settings, self.outcomes) != (other.settings, other.outcomes):
            raise ShapeError("functionals live on different scenarios")
        coeffs = dict(self.coefficients)
        for k, v in other.coefficients.items():
            coeffs[k] = coeffs.get(k, ZERO) + v
        return BellFunctional(self.settings, self.outcomes, coeffs)

    def scaled(self, factor) -> "BellFunctional":
        factor = as_fraction(factor)
        return BellFunctional(self.settings, self.outcomes,
                              {k: v * factor for k, v in self.coefficients.items()})

    def extended(self, outcomes: Sequence[Sequence[str]]) -> "BellFunctional":
        """The same functional on larger outcome alphabets, with coefficient
        zero on every added outcome."""
        outcomes = tuple(tuple(map(str, o)) for o in outcomes)
        if len(outcomes) != self.parties or any(not set(o) <= set(n) for o, n in zip(self.outcomes, outcomes)):
            raise ShapeError("extended alphabets must contain the functional's own outcomes")
        return BellFunctional(self.settings, outcomes, self.coefficients, self.encoding, self.name)

    def to_dict(self) -> dict:
        d = {
            "shape": {"settings": [list(s) for s in self.settings],
                      "outcomes": [list(o) for o in self.outcomes]},
            "coefficients": [
                {"a": list(a), "x": list(x), "s": str(s)}
                for (a, x), s in sorted(self.coefficients.items())
            ],
        }
        if self.encoding:
            d["encoding"] = {k: f"{v:+d}" for k, v in self.encoding.items()}
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, data: Mapping) -> "BellFunctional":
        try:
            shape = data["shape"]
            settings, outcomes = shape["settings"], shape["outcomes"]
            rows = data["coefficients"]
        except (KeyError, TypeError) as exc:
            raise ShapeError(f"functional JSON is missing {exc.args[0]!r}") from None
        coeffs = {}
        for j, row in enumerate(rows):
            try:
                key = (tuple(map(str, row["a"])), tuple(map(str, row["x"])))
                s = as_fraction(row["s"], f"coefficients[{j}]")
            except (KeyError, TypeError):
                raise ShapeError(f"coefficients[{j}]: expected a, x, s") from None
            coeffs[key] = coeffs.get(key, ZERO) + s
        encoding = data.get("encoding")
        if encoding is not None:
            encoding = {k: int(v) for k, v in encoding.items()}
        return cls(settings, outcomes, coeffs, encoding, data.get("name", ""))


def correlator_functional(settings, outcomes, encoding: Mapping[str, int], terms: Mapping) -> BellFunctional:
    """Build ``sum_x c_x E(x)`` where ``E(x) = sum_a (prod_i enc(a_i)) P(a|x)``.

    ``terms`` maps joint settings to the coefficient ``c_x``.
    """
    coeffs = {}
    for x, c in terms.items():
        c = as_fraction(c)
        for a in itertools.product(*outcomes):
            sign = 1
            for s in a:
                sign *= encoding[s]
            coeffs[(a, tuple(x))] = c * sign
    return BellFunctional(settings, outcomes, coeffs, encoding)


def chsh() -> BellFunctional:
    """E(0,0) + E(0,1) + E(1,0) - E(1,1) with outcome "0" -> +1, "1" -> -1."""
    bits = ("0", "1")
    f = correlator_functional(
        (bits, bits), (bits, bits), {"0": 1, "1": -1},
        {("0", "0"): 1, ("0", "1"): 1, ("1", "0"): 1, ("1", "1"): -1},
    )
    return BellFunctional(f.settings, f.outcomes, f.coefficients, f.encoding, "CHSH")


def normalization_functional(settings, outcomes) -> BellFunctional:
    coeffs = {
        (a, x): 1
        for x in itertools.product(*settings)
        for a in itertools.product(*outcomes)
    }
    return BellFunctional(settings, outcomes, coeffs, name="normalization")


def zero_functional(settings, outcomes) -> BellFunctional:
    return BellFunctional(settings, outcomes, {}, name="zero")


def _align(f: BellFunctional, p: Behavior) -> BellFunctional:
    if tuple(f.settings) != tuple(p.settings):
        raise ShapeError("functional and behavior have different setting alphabets")
    if tuple(f.outcomes) != tuple(p.outcomes):
        try:
            return f.extended(p.outcomes)
        except ShapeError:
            raise ShapeError("functional outcomes are not contained in the behavior's outcomes") from None
    return f


def evaluate(f: BellFunctional, p: Behavior) -> Fraction:
    """Exact ``sum s(a, x) P(a|x)``.

    A functional on target alphabets is zero-extended to the behavior's
    larger alphabets. Every joint setting carrying a coefficient must be
    present in ``p``.
    """
    f = _align(f, p)
    total = ZERO
    for (a, x), s in f.coefficients.items():
        if x not in p.table:
            raise ShapeError(f"behavior has no row for setting {x}")
        total += s * p(a, x)
    return total


@dataclass(frozen=True)
class DeterministicStrategy:
    """``responses[i][j]`` is party ``i``'s outcome for its ``j``-th setting."""

    settings: tuple[tuple[str, ...], ...]
    responses: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(self.settings) != len(self.responses) or any(
            len(s) != len(r) for s, r in zip(self.settings, self.responses)
        ):
            raise ShapeError("a strategy needs one outcome per setting of every party")

    def answer(self, x) -> tuple[str, ...]:
        return tuple(r[s.index(v)] for v, s, r in zip(x, self.settings, self.responses))

    def behavior(self, outcomes) -> Behavior:
        outcomes = tuple(tuple(o) for o in outcomes)
        table = {}
        for x in itertools.product(*self.settings):
            hit = self.answer(x)
            table[x] = {a: Fraction(int(a == hit)) for a in itertools.product(*outcomes)}
        return Behavior(self.settings, outcomes, table)

    def to_dict(self) -> dict:
        return {
            "responses": [dict(zip(s, r)) for s, r in zip(self.settings, self.responses)]
        }


@dataclass(frozen=True)
class LocalBound:
    value: Fraction
    strategy: DeterministicStrategy
    strategies_checked: int = field(default=0)

    def to_dict(self) -> dict:
        return {"local_bound": str(self.value), "strategy": self.strategy.to_dict(),
                "strategies_checked": self.strategies_checked}


def strategy_count(f: BellFunctional) -> int:
    n = 1
    for s, o in zip(f.settings, f.outcomes):
        n *= len(o) ** len(s)
    return n


def local_bound(f: BellFunctional, cap: int = DEFAULT_STRATEGY_CAP) -> LocalBound:
    """Maximum of the functional over deterministic local strategies.

    Raises
    ------
    ResourceError
        If the number of strategies exceeds ``cap``.
    """
    size = strategy_count(f)
    if size > cap:
        raise ResourceError(size, cap)
    per_party = [
        list(itertools.product(o, repeat=len(s))) for s, o in zip(f.settings, f.outcomes)
    ]
    joint_settings = list(itertools.product(*f.settings))
    index = [
        tuple(s.index(v) for v, s in zip(x, f.settings)) for x in joint_settings
    ]
    coeff = f.coefficients
    best = None
    best_value = None
    for combo in itertools.product(*per_party):
        value = ZERO
        for x, ix in zip(joint_settings, index):
            a = tuple(r[j] for r, j in zip(combo, ix))
            value += coeff.get((a, x), ZERO)
        if best_value is None or value > best_value:
            best_value, best = value, combo
    return LocalBound(best_value, DeterministicStrategy(f.settings, tuple(best)), size)


@dataclass(frozen=True)
class ViolationReport:
    functional: str
    value_full: Fraction
    value_postselected: Fraction
    local_bound: Fraction
    all_but_one: AllButOneVerdict
    safety: SafetyReport

    @property
    def violated(self) -> bool:
        return self.value_postselected > self.local_bound

    def to_dict(self) -> dict:
        return {
            "functional": self.functional,
            "I(P)": str(self.value_full),
            "I(P_K)": str(self.value_postselected),
            "I_L": str(self.local_bound),
            "violated_after_selection": self.violated,
            "all_but_one": self.all_but_one.to_dict(),
            "safety": self.safety.to_dict(),
        }


def violation_report(f: BellFunctional, model: FiniteModel, rule: SelectionRule) -> ViolationReport:
    """Everything needed to tell a genuine violation from a selection artefact.

    The local bound is computed for the functional extended to the model's
    full outcome alphabets.
    """
    full = behavior(model)
    ext = _align(f, full)
    post, safety = postselect(model, rule)
    verdict = check_all_but_one(rule, model.outcomes, model_support(model))
    bound = local_bound(ext).value
    return ViolationReport(
        f.name or "functional",
        evaluate(ext, full),
        evaluate(ext, post),
        bound,
        verdict,
        safety,
    )

