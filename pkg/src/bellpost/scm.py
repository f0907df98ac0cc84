"""Exact finite hidden-variable models of Bell experiments.

All probabilities are :class:`fractions.Fraction`; the safety test is an
exact zero test, never a tolerance. Conditioning always means conditioning
on the accept event ``K = 1`` unless ``condition_on=False`` is requested.

Where a conditional needs a distribution over settings (the per-party
marginal ``P(a_i | x_i, lambda, K)`` and the pooled ``P(lambda | K)``),
settings are taken uniform and independent of ``lambda``. The residuals
vanish for one such prior iff they vanish for every prior of full support.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from .selection import OutcomeSpace, SelectionError, SelectionRule, Support, parse_rule

ZERO = Fraction(0)
ONE = Fraction(1)


class ModelError(ValueError):
    """Malformed finite model."""


def as_fraction(value, where: str = "value") -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ModelError(f"{where}: probabilities must be ints or 'p/q' strings, got {value!r}")
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise ModelError(f"{where}: cannot read {value!r} as a rational") from None


def _lambda_key(lam) -> str:
    if isinstance(lam, tuple):
        return ",".join(map(str, lam))
    return str(lam)


@dataclass(frozen=True, eq=False)
class FiniteModel:
    """Hidden variable ``lambda ~ P(lambda)`` plus response kernels.

    ``local[i][(x_i, lam)]`` maps party ``i``'s outcomes to probabilities;
    ``joint[(x, lam)]`` maps joint outcomes to probabilities. Exactly one
    of the two is set. Missing outcomes have probability zero.
    """

    settings: tuple[tuple[str, ...], ...]
    outcomes: OutcomeSpace
    lambdas: tuple[Hashable, ...]
    weights: tuple[Fraction, ...]
    local: tuple[Mapping, ...] | None = None
    joint: Mapping | None = None

    def __init__(self, settings, outcomes, lambdas, weights, local=None, joint=None):
        settings = tuple(tuple(str(s) for s in xs) for xs in settings)
        if not isinstance(outcomes, OutcomeSpace):
            outcomes = OutcomeSpace(outcomes)
        n = len(settings)
        if n != outcomes.parties:
            raise ModelError(f"{n} setting alphabets but {outcomes.parties} outcome alphabets")
        for i, xs in enumerate(settings, 1):
            if not xs or len(set(xs)) != len(xs):
                raise ModelError(f"party {i}: setting alphabet must be nonempty and repetition-free")
        lambdas = tuple(lambdas)
        if not lambdas or len(set(lambdas)) != len(lambdas):
            raise ModelError("hidden alphabet must be nonempty and repetition-free")
        weights = tuple(as_fraction(w, f"weight of {l!r}") for l, w in zip(lambdas, weights))
        if len(weights) != len(lambdas):
            raise ModelError("one weight per hidden value is required")
        if any(w < 0 for w in weights) or sum(weights) != 1:
            raise ModelError("hidden weights must be nonnegative and sum to 1")
        if (local is None) == (joint is None):
            raise ModelError("give exactly one of local or joint kernels")

        if local is not None:
            if len(local) != n:
                raise ModelError(f"need {n} local kernels, got {len(local)}")
            kernels = []
            for i, kern in enumerate(local):
                alph = outcomes.alphabets[i]
                clean = {}
                for x in settings[i]:
                    for lam in lambdas:
                        where = f"local kernel of party {i + 1} at x={x!r}, lambda={lam!r}"
                        if (x, lam) not in kern:
                            raise ModelError(f"{where}: missing row")
                        clean[(x, lam)] = _distribution(kern[(x, lam)], lambda a: a in alph, where, str)
                kernels.append(clean)
            local = tuple(kernels)
        else:
            clean = {}
            for x in itertools.product(*settings):
                for lam in lambdas:
                    where = f"joint kernel at x={x}, lambda={lam!r}"
                    if (x, lam) not in joint:
                        raise ModelError(f"{where}: missing row")
                    clean[(x, lam)] = _distribution(
                        joint[(x, lam)], outcomes.contains, where, lambda a: tuple(map(str, a))
                    )
            joint = clean

        object.__setattr__(self, "settings", settings)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "local", local)
        object.__setattr__(self, "joint", joint)

    @property
    def parties(self) -> int:
        return len(self.settings)

    @property
    def is_local(self) -> bool:
        return self.local is not None

    def joint_settings(self) -> list[tuple[str, ...]]:
        return list(itertools.product(*self.settings))

    def kernel(self, x: Sequence[str], lam) -> dict[tuple[str, ...], Fraction]:
        """Nonzero entries of ``P(a_1..a_N | x, lambda)``."""
        x = tuple(x)
        if self.joint is not None:
            return {a: p for a, p in self.joint[(x, lam)].items() if p}
        rows = [
            [(a, p) for a, p in self.local[i][(x[i], lam)].items() if p]
            for i in range(self.parties)
        ]
        out = {}
        for combo in itertools.product(*rows):
            prob = ONE
            for _, p in combo:
                prob *= p
            out[tuple(a for a, _ in combo)] = prob
        return out

    @classmethod
    def deterministic(cls, settings, outcomes, lambdas, weights, responses: Sequence[Callable]):
        """Local model where party ``i`` answers ``responses[i](x_i, lam)``."""
        settings = [list(map(str, xs)) for xs in settings]
        local = [
            {(x, lam): {str(fn(x, lam)): ONE} for x in xs for lam in lambdas}
            for xs, fn in zip(settings, responses)
        ]
        return cls(settings, outcomes, lambdas, weights, local=local)

    def to_dict(self) -> dict:
        lam_keys = [_lambda_key(l) for l in self.lambdas]
        d = {
            "parties": self.parties,
            "settings": [list(xs) for xs in self.settings],
            "outcomes": [list(a) for a in self.outcomes.alphabets],
            "lambda": {"values": lam_keys, "weights": [str(w) for w in self.weights]},
        }
        if self.outcomes.targets is not None:
            d["targets"] = [list(t) for t in self.outcomes.targets]
        if self.local is not None:
            d["kernels"] = {"local": [
                {
                    key: {x: {a: str(p) for a, p in kern[(x, lam)].items() if p} for x in xs}
                    for key, lam in zip(lam_keys, self.lambdas)
                }
                for kern, xs in zip(self.local, self.settings)
            ]}
        else:
            rows = []
            for x in self.joint_settings():
                for key, lam in zip(lam_keys, self.lambdas):
                    for a, p in self.joint[(x, lam)].items():
                        if p:
                            rows.append({"lambda": key, "x": list(x), "a": list(a), "p": str(p)})
            d["kernels"] = {"joint": rows}
        return d

    @classmethod
    def from_dict(cls, data: Mapping) -> "FiniteModel":
        try:
            settings = data["settings"]
            outcomes = OutcomeSpace(data["outcomes"], data.get("targets"))
            lam = data["lambda"]
            lambdas = [str(v) for v in lam["values"]]
            weights = lam["weights"]
            kernels = data["kernels"]
        except KeyError as exc:
            raise ModelError(f"model JSON is missing {exc.args[0]!r}") from None
        if "parties" in data and data["parties"] != len(settings):
            raise ModelError(f"'parties' is {data['parties']} but {len(settings)} setting alphabets given")
        if "local" in kernels:
            local = []
            for i, kern in enumerate(kernels["local"]):
                table = {}
                for key, by_x in kern.items():
                    for x, row in by_x.items():
                        if isinstance(row, str):
                            row = {row: 1}
                        table[(str(x), str(key))] = row
                local.append(table)
            return cls(settings, outcomes, lambdas, weights, local=local)
        if "joint" in kernels:
            table: dict = {}
            for j, row in enumerate(kernels["joint"]):
                try:
                    key = (tuple(map(str, row["x"])), str(row["lambda"]))
                    table.setdefault(key, {})[tuple(map(str, row["a"]))] = row["p"]
                except (KeyError, TypeError):
                    raise ModelError(f"kernels.joint[{j}]: expected lambda, x, a, p") from None
            for x in itertools.product(*[list(map(str, xs)) for xs in settings]):
                for lam_v in lambdas:
                    table.setdefault((x, lam_v), {})
            return cls(settings, outcomes, lambdas, weights, joint=table)
        raise ModelError("kernels must contain 'local' or 'joint'")


def _distribution(row: Mapping, valid: Callable, where: str, norm: Callable) -> dict:
    out = {}
    for a, p in row.items():
        key = norm(a)
        if not valid(key):
            raise ModelError(f"{where}: unknown outcome {a!r}")
        out[key] = as_fraction(p, where)
    if any(p < 0 for p in out.values()):
        raise ModelError(f"{where}: negative probability")
    if sum(out.values()) != 1:
        raise ModelError(f"{where}: probabilities sum to {sum(out.values())}, not 1")
    return out


@dataclass(frozen=True, eq=False)
class Behavior:
    """Dense table ``P(a | x)`` for every listed joint setting."""

    settings: tuple[tuple[str, ...], ...]
    outcomes: tuple[tuple[str, ...], ...]
    table: Mapping[tuple[str, ...], Mapping[tuple[str, ...], Fraction]]

    def __post_init__(self):
        for x, row in self.table.items():
            if any(p < 0 for p in row.values()):
                raise ModelError(f"negative entry in behavior at x={x}")
            if sum(row.values()) != 1:
                raise ModelError(f"behavior row x={x} sums to {sum(row.values())}")

    def __call__(self, a, x) -> Fraction:
        return self.table[tuple(x)].get(tuple(a), ZERO)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Behavior):
            return NotImplemented
        if set(self.table) != set(other.table):
            return False
        return all(
            self(a, x) == other(a, x)
            for x in self.table
            for a in set(self.table[x]) | set(other.table[x])
        )

    def to_dict(self) -> dict:
        rows = [
            {"x": list(x), "a": list(a), "p": str(p)}
            for x, row in self.table.items()
            for a, p in row.items()
            if p
        ]
        return {"settings": [list(s) for s in self.settings],
                "outcomes": [list(o) for o in self.outcomes], "rows": rows}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Behavior":
        try:
            settings = tuple(tuple(map(str, s)) for s in data["settings"])
            outcomes = tuple(tuple(map(str, o)) for o in data["outcomes"])
            raw = data["rows"]
        except KeyError as exc:
            raise ModelError(f"behavior JSON is missing {exc.args[0]!r}") from None
        table = {x: {a: ZERO for a in itertools.product(*outcomes)}
                 for x in itertools.product(*settings)}
        for j, row in enumerate(raw):
            try:
                x, a = tuple(map(str, row["x"])), tuple(map(str, row["a"]))
                p = as_fraction(row["p"], f"rows[{j}]")
            except (KeyError, TypeError):
                raise ModelError(f"rows[{j}]: expected x, a, p") from None
            if x not in table or a not in table[x]:
                raise ModelError(f"rows[{j}]: ({x}, {a}) outside the declared shape")
            table[x][a] = p
        return cls(settings, outcomes, table)


def behavior(model: FiniteModel) -> Behavior:
    """Marginalise the hidden variable: ``P(a|x) = sum_l P(a|x,l) P(l)``."""
    space = list(model.outcomes.product())
    table = {}
    for x in model.joint_settings():
        row = {a: ZERO for a in space}
        for lam, w in zip(model.lambdas, model.weights):
            if w:
                for a, p in model.kernel(x, lam).items():
                    row[a] += w * p
        table[x] = row
    return Behavior(model.settings, model.outcomes.alphabets, table)


@dataclass(frozen=True)
class SafetyReport:
    locality_residual: Fraction
    free_choice_residual: Fraction
    safe: bool
    undefined_contexts: tuple[tuple[tuple[str, ...], object], ...]
    acceptance: Mapping[tuple[str, ...], Fraction] = field(default_factory=dict)
    unconditioned_locality_residual: Fraction = ZERO
    condition_on: bool = True

    def to_dict(self) -> dict:
        return {
            "locality_residual": str(self.locality_residual),
            "free_choice_residual": str(self.free_choice_residual),
            "safe": self.safe,
            "condition_on": int(self.condition_on),
            "acceptance": [{"x": list(x), "p": str(p)} for x, p in self.acceptance.items()],
            "unconditioned_locality_residual": str(self.unconditioned_locality_residual),
            "undefined_contexts": [
                {"x": list(x), "lambda": None if lam is None else _lambda_key(lam)}
                for x, lam in self.undefined_contexts
            ],
        }


def _check_rule(model: FiniteModel, rule: SelectionRule) -> None:
    if rule.space.alphabets != model.outcomes.alphabets:
        raise SelectionError("the rule's outcome space does not match the model's outcomes")


def _locality_residual(model: FiniteModel, accept: Callable) -> Fraction:
    """max |P(a|x,l,K) - prod_i P(a_i|x_i,l,K)| over contexts with P(K|x,l) > 0."""
    n = model.parties
    space = list(model.outcomes.product())
    worst = ZERO
    for lam, w in zip(model.lambdas, model.weights):
        if not w:
            continue
        # accepted mass per joint setting, and per (party, own setting, own outcome)
        cond = {}
        acc = {}
        for x in model.joint_settings():
            kept = {a: p for a, p in model.kernel(x, lam).items() if accept(a)}
            acc[x] = sum(kept.values(), ZERO)
            cond[x] = kept
        marg_num = [dict() for _ in range(n)]
        marg_den = [dict() for _ in range(n)]
        for x, kept in cond.items():
            for i in range(n):
                marg_den[i][x[i]] = marg_den[i].get(x[i], ZERO) + acc[x]
                for a, p in kept.items():
                    key = (x[i], a[i])
                    marg_num[i][key] = marg_num[i].get(key, ZERO) + p
        for x, kept in cond.items():
            if not acc[x]:
                continue
            margs = [
                {sym: marg_num[i].get((x[i], sym), ZERO) / marg_den[i][x[i]]
                 for sym in model.outcomes.alphabets[i]}
                for i in range(n)
            ]
            for a in space:
                prod = ONE
                for i in range(n):
                    prod *= margs[i][a[i]]
                    if not prod:
                        break
                gap = abs(kept.get(a, ZERO) / acc[x] - prod)
                if gap > worst:
                    worst = gap
    return worst


def postselect(model: FiniteModel, rule: SelectionRule, *, condition_on: bool = True):
    """Condition the model on ``K = condition_on``.

    Returns ``(P_K, SafetyReport)``. ``P_K`` lists only joint settings of
    nonzero acceptance; those with zero acceptance appear in
    ``undefined_contexts`` and are excluded from the residuals.

    Raises
    ------
    SelectionError
        If acceptance is zero for every joint setting, or if declared
        target alphabets are violated by an outcome that survives the
        selection.
    """
    _check_rule(model, rule)

    def accept(a):
        return rule(a) == condition_on

    settings = model.joint_settings()
    space = list(model.outcomes.product())
    prior = Fraction(1, len(settings))
    acc_x = {}
    acc_xl = {}
    rows = {}
    undefined = []
    for x in settings:
        row = {a: ZERO for a in space}
        for lam, w in zip(model.lambdas, model.weights):
            kept = sum((p for a, p in model.kernel(x, lam).items() if accept(a)), ZERO)
            acc_xl[(x, lam)] = kept
            if w:
                for a, p in model.kernel(x, lam).items():
                    if accept(a):
                        row[a] += w * p
        total = sum(row.values(), ZERO)
        acc_x[x] = total
        if total:
            rows[x] = {a: p / total for a, p in row.items()}
        else:
            undefined.append((x, None))
    if not rows:
        raise SelectionError("unusable rule: acceptance probability is 0 for every setting")
    for x in settings:
        if acc_x[x]:
            undefined.extend(
                (x, lam) for lam, w in zip(model.lambdas, model.weights) if w and not acc_xl[(x, lam)]
            )

    targets = model.outcomes.targets
    if targets is not None and condition_on:
        for x, row in rows.items():
            for a, p in row.items():
                if p and any(s not in t for s, t in zip(a, targets)):
                    raise SelectionError(
                        f"outcome {a} survives selection at x={x} but lies outside the target alphabets"
                    )

    free_choice = ZERO
    pooled_den = sum((prior * acc_x[x] for x in settings), ZERO)
    for lam, w in zip(model.lambdas, model.weights):
        pooled = sum((prior * w * acc_xl[(x, lam)] for x in settings), ZERO) / pooled_den
        for x in settings:
            if acc_x[x]:
                gap = abs(w * acc_xl[(x, lam)] / acc_x[x] - pooled)
                if gap > free_choice:
                    free_choice = gap

    locality = _locality_residual(model, accept)
    baseline = _locality_residual(model, lambda a: True)
    report = SafetyReport(
        locality_residual=locality,
        free_choice_residual=free_choice,
        safe=locality == 0 and free_choice == 0,
        undefined_contexts=tuple(undefined),
        acceptance=dict(acc_x),
        unconditioned_locality_residual=baseline,
        condition_on=condition_on,
    )
    return Behavior(model.settings, model.outcomes.alphabets, rows), report


def check_safe(model: FiniteModel, rule: SelectionRule, *, condition_on: bool = True) -> SafetyReport:
    return postselect(model, rule, condition_on=condition_on)[1]


def model_support(model: FiniteModel) -> Support:
    """Joint outcomes of positive probability for some setting and hidden value."""
    seen = set()
    for x in model.joint_settings():
        for lam, w in zip(model.lambdas, model.weights):
            if w:
                seen.update(model.kernel(x, lam))
    return Support(seen, model.outcomes)


# --- joint distribution over graph variables ----------------------------


class JointTable:
    """Exact joint distribution over the nodes of the Bell graph
    ``lambda, x1..xN, a1..aN[, K]`` with uniform independent settings.

    Independence tests run on the table scaled by the common denominator,
    in int64 when products cannot overflow and in Python integers otherwise.
    """

    def __init__(self, variables: Sequence[str], values: Sequence[Sequence], array: np.ndarray):
        self.variables = tuple(variables)
        self.values = tuple(tuple(v) for v in values)
        self.array = array
        self._index = {v: i for i, v in enumerate(self.variables)}
        scale = math.lcm(*(f.denominator for f in array.flat)) if array.size else 1
        ints = [f.numerator * (scale // f.denominator) for f in array.flat]
        dtype = np.int64 if scale < 2**31 else object
        self._scaled = np.array(ints, dtype=dtype).reshape(array.shape)
        self._marginals: dict[frozenset[int], np.ndarray] = {}

    def marginal(self, names) -> np.ndarray:
        """Exact marginal over ``names`` with the other axes kept as length 1."""
        keep = frozenset(self._index[n] for n in names)
        axes = tuple(i for i in range(len(self.variables)) if i not in keep)
        return self.array.sum(axis=axes, keepdims=True) if axes else self.array

    def _marginal(self, keep: frozenset[int]) -> np.ndarray:
        if len(keep) == len(self.variables):
            return self._scaled
        cached = self._marginals.get(keep)
        if cached is None:
            drop = min(set(range(len(self.variables))) - keep)
            cached = self._marginal(keep | {drop}).sum(axis=drop, keepdims=True)
            self._marginals[keep] = cached
        return cached

    def independent(self, xs, ys, given=()) -> bool:
        """Exact test of ``xs _||_ ys | given``."""
        idx = self._index
        xs, ys, zs = ({idx[n] for n in s} for s in (xs, ys, given))
        pxyz = self._marginal(frozenset(xs | ys | zs))
        pz = self._marginal(frozenset(zs))
        pxz = self._marginal(frozenset(xs | zs))
        pyz = self._marginal(frozenset(ys | zs))
        return bool(np.all(pxyz * pz == pxz * pyz))


def joint_distribution(model: FiniteModel, rule: SelectionRule | None = None) -> JointTable:
    n = model.parties
    variables = ["lambda"] + [f"x{i}" for i in range(1, n + 1)] + [f"a{i}" for i in range(1, n + 1)]
    values = [list(model.lambdas)] + [list(s) for s in model.settings] + [list(a) for a in model.outcomes.alphabets]
    if rule is not None:
        _check_rule(model, rule)
        variables.append("K")
        values.append([0, 1])
    shape = tuple(len(v) for v in values)
    arr = np.full(shape, ZERO, dtype=object)
    prior = Fraction(1, len(model.joint_settings()))
    out_index = [{s: j for j, s in enumerate(a)} for a in model.outcomes.alphabets]
    set_index = [{s: j for j, s in enumerate(xs)} for xs in model.settings]
    for li, (lam, w) in enumerate(zip(model.lambdas, model.weights)):
        if not w:
            continue
        for x in model.joint_settings():
            xi = tuple(set_index[i][x[i]] for i in range(n))
            for a, p in model.kernel(x, lam).items():
                ai = tuple(out_index[i][a[i]] for i in range(n))
                idx = (li,) + xi + ai
                if rule is not None:
                    idx += (int(rule(a)),)
                arr[idx] += w * prior * p
    return JointTable(variables, values, arr)


# --- canonical models -----------------------------------------------------


def no_rejection_rule(space: OutcomeSpace, reject: str = "bot") -> SelectionRule:
    return parse_rule(" && ".join(f"a{i} != {reject}" for i in range(1, space.parties + 1)), space)


def gisin_model() -> FiniteModel:
    """Local model whose post-selected statistics form a PR box.

    ``lambda = (xh, yh, r)`` uniform over 8 values; Alice outputs ``r`` if
    her setting equals ``xh`` and ``bot`` otherwise; Bob outputs
    ``r xor (xh * yh)`` if his setting equals ``yh`` and ``bot`` otherwise.
    """
    bits = ("0", "1")
    lambdas = [(xh, yh, r) for xh in bits for yh in bits for r in bits]

    def alice(x, lam):
        xh, _, r = lam
        return r if x == xh else "bot"

    def bob(y, lam):
        xh, yh, r = lam
        return str(int(r) ^ (int(xh) * int(yh))) if y == yh else "bot"

    space = OutcomeSpace([["0", "1", "bot"]] * 2, targets=[bits, bits])
    return FiniteModel.deterministic([bits, bits], space, lambdas, [Fraction(1, 8)] * 8, [alice, bob])


def pr_box_behavior() -> Behavior:
    bits = ("0", "1")
    table = {
        (x, y): {(a, b): Fraction(1, 2) if (int(a) ^ int(b)) == int(x) * int(y) else ZERO
                 for a in bits for b in bits}
        for x in bits for y in bits
    }
    return Behavior((bits, bits), (bits, bits), table)


def pr_box_model() -> FiniteModel:
    """Nonlocal joint-kernel model reproducing the PR box with trivial lambda."""
    box = pr_box_behavior()
    joint = {(x, "-"): dict(row) for x, row in box.table.items()}
    return FiniteModel(box.settings, OutcomeSpace(box.outcomes), ["-"], [ONE], joint=joint)


def particle_count_model(parties: int = 2, total: int | None = None, settings=("0", "1")) -> FiniteModel:
    """Each party reports how many of ``total`` particles it received;
    every configuration is equally likely."""
    total = parties if total is None else total
    counts = [str(c) for c in range(total + 1)]
    configs = [t for t in itertools.product(range(total + 1), repeat=parties) if sum(t) == total]
    responses = [functools.partial(lambda i, x, lam: str(lam[i]), i) for i in range(parties)]
    return FiniteModel.deterministic(
        [settings] * parties, OutcomeSpace([counts] * parties), configs,
        [Fraction(1, len(configs))] * len(configs), responses,
    )


CONSERVATION_RULE = "forall p: p != none && p != pair"


def conservation_bell_model() -> FiniteModel:
    """Two particles shared by two parties, measured when single.

    A party holding one particle measures it and reports a bit; otherwise
    it reports ``none`` or ``pair``. With one particle each the bits follow
    a hidden deterministic strategy (``a = b = 0`` or ``a = b = 1``).
    """
    bits = ("0", "1")
    lambdas = [("split", "0"), ("split", "1"), ("left", "-"), ("right", "-")]
    weights = [Fraction(1, 4), Fraction(1, 4), Fraction(1, 4), Fraction(1, 4)]

    def alice(x, lam):
        return {"split": lam[1], "left": "pair", "right": "none"}[lam[0]]

    def bob(y, lam):
        return {"split": lam[1], "left": "none", "right": "pair"}[lam[0]]

    alph = ["0", "1", "none", "pair"]
    space = OutcomeSpace([alph, alph], targets=[bits, bits])
    return FiniteModel.deterministic([bits, bits], space, lambdas, weights, [alice, bob])


@dataclass(frozen=True)
class BerksonSummary:
    unconditioned: Mapping[tuple[str, str], Fraction]
    conditioned: Mapping[tuple[str, str], Fraction]
    gap_unconditioned: Fraction
    gap_conditioned: Fraction
    covariance_unconditioned: Fraction
    covariance_conditioned: Fraction
    mutual_information_unconditioned: float
    mutual_information_conditioned: float

    def to_dict(self) -> dict:
        return {
            "P(B,T)": {f"{b}{t}": str(p) for (b, t), p in self.unconditioned.items()},
            "P(B,T|C=1)": {f"{b}{t}": str(p) for (b, t), p in self.conditioned.items()},
            "dependence_gap": {"unconditioned": str(self.gap_unconditioned),
                               "given_C": str(self.gap_conditioned)},
            "covariance": {"unconditioned": str(self.covariance_unconditioned),
                           "given_C": str(self.covariance_conditioned)},
            "mutual_information_bits": {"unconditioned": self.mutual_information_unconditioned,
                                        "given_C": self.mutual_information_conditioned},
        }


def _pair_stats(table: Mapping[tuple[str, str], Fraction]):
    pb = {b: sum(p for (bb, _), p in table.items() if bb == b) for b in "01"}
    pt = {t: sum(p for (_, tt), p in table.items() if tt == t) for t in "01"}
    gap = max(abs(table[(b, t)] - pb[b] * pt[t]) for b in "01" for t in "01")
    cov = table[("1", "1")] - pb["1"] * pt["1"]
    mi = sum(
        float(p) * math.log2(float(p / (pb[b] * pt[t])))
        for (b, t), p in table.items() if p
    )
    return gap, cov, mi


def berkson_demo():
    """Beauty B and talent T are independent fair bits; celebrity C = B or T.

    Modelled as two parties with a single trivial setting each and the
    selection rule ``C``. Returns ``(model, BerksonSummary)``.
    """
    bits = ["0", "1"]
    space = OutcomeSpace([bits, bits])
    half = Fraction(1, 2)
    local = [{("*", "-"): {"0": half, "1": half}} for _ in range(2)]
    model = FiniteModel([["*"], ["*"]], space, ["-"], [ONE], local=local)
    rule = parse_rule("a1 == 1 || a2 == 1", space)
    full = behavior(model).table[("*", "*")]
    cond, _ = postselect(model, rule)
    conditioned = cond.table[("*", "*")]
    g0, c0, m0 = _pair_stats(full)
    g1, c1, m1 = _pair_stats(conditioned)
    return model, BerksonSummary(dict(full), dict(conditioned), g0, g1, c0, c1, m0, m1)
