"""Stabilizability experiments on nested volumes.

The verdicts here are finite-scale proxies for a limit statement: a
series that keeps growing up to the largest box tested is called
``diverging`` and one that has saturated is ``stabilizable-at-scale``.
Every report carries the largest volume it looked at.
"""
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
import math

import numpy as np

from .fields import SamplerSpec, declared_mean, line_field, sample
from .lattice import Volume, apply_toppling_matrix, discrete_laplacian, green_row
from .linalg import EXACT_SOLVE_CAP
from .toppling import DEFAULT_CAP, stabilize

STABILIZABLE = "stabilizable-at-scale"
DIVERGING = "diverging"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Policy:
    """Knobs of the verdict rule; serialized into every report."""

    min_growth: int = 1
    n_seeds: int = 5
    cap: int = DEFAULT_CAP

    def to_json(self):
        return asdict(self)


def default_schedule(d):
    """Side lengths ``8 * 2**k``: k = 0..4 for d >= 2, up to 4096 for d = 1."""
    top = 4096 if d == 1 else 128
    return [8 * 2**k for k in range(int(math.log2(top // 8)) + 1)]


def centered_volumes(Ls, d, site=None):
    return [Volume.box(int(L), d, site) for L in Ls]


@dataclass(frozen=True, eq=False)
class ProbeSeries:
    volumes: list
    m0: list
    caps_hit: list
    sampler: SamplerSpec
    site: tuple

    @property
    def sizes(self):
        return [V.shape[0] for V in self.volumes]

    def rows(self):
        return [
            {"L": V.shape[0], "sites": V.size, "m0": m, "capped": c}
            for V, m, c in zip(self.volumes, self.m0, self.caps_hit)
        ]

    def to_json(self):
        return {
            "sampler": self.sampler.to_json(),
            "site": list(self.site),
            "volumes": [V.to_json() for V in self.volumes],
            "m0": list(self.m0),
            "caps_hit": list(self.caps_hit),
        }


def _check_nested(V_list, site):
    if not V_list:
        raise ValueError("need at least one volume")
    for small, big in zip(V_list, V_list[1:]):
        if small == big or not big.contains_volume(small):
            raise ValueError(f"volumes must be strictly nested: {small} then {big}")
    if site not in V_list[0]:
        raise ValueError(f"site {site} not in the smallest volume")


def nested_probe(sampler, V_list, site=None, seed=None, cap=DEFAULT_CAP, eta=None):
    """Toppling count at ``site`` for one field realization over nested boxes.

    The field is sampled once on the largest box and restricted, so all
    volumes see the same configuration. Each stabilization starts from the
    previous box's odometer (a valid lower bound by monotonicity in the
    volume), and ``Delta_V m = eta - xi`` is asserted on every box.

    :param eta: optional pre-drawn configuration on the largest box
    """
    V_list = list(V_list)
    site = (0,) * V_list[0].d if site is None else tuple(site)
    _check_nested(V_list, site)
    if seed is not None:
        sampler = sampler.with_seed(seed)
    if eta is None:
        eta = sample(sampler, V_list[-1])
    m0s, caps = [], []
    prev_m, prev_V = None, None
    for V in V_list:
        local = eta.restrict(V)
        hint = None
        if prev_m is not None:
            hint = np.zeros(V.shape, dtype=np.int64)
            hint[prev_V.slices_in(V)] = prev_m
        res = stabilize(local, V, cap=cap, m0=hint)
        if not res.capped:
            lhs = local.heights - apply_toppling_matrix(V, res.m)
            if not np.array_equal(lhs, res.xi.heights):
                raise AssertionError(f"Delta_V m = eta - xi fails on {V}")
        m0 = int(res.m.reshape(-1)[V.index(site)])
        if m0s and not caps[-1] and not res.capped and m0 < m0s[-1]:
            raise AssertionError(f"toppling count at {site} decreased from {m0s[-1]} to {m0} on {V}")
        m0s.append(m0)
        caps.append(bool(res.capped))
        prev_m, prev_V = (None, None) if res.capped else (np.asarray(res.m), V)
    return ProbeSeries(V_list, m0s, caps, sampler, site)


@dataclass(frozen=True)
class Verdict:
    cls: str
    evidence: dict

    def to_json(self):
        return {"class": self.cls, "evidence": self.evidence}


def classify(series, policy=Policy()):
    """Verdict from a toppling series (``ProbeSeries`` or list of ints).

    ``diverging``: strict growth at every step and last increment at least
    ``policy.min_growth``. ``stabilizable-at-scale``: the last two steps add
    nothing. Anything else, or a capped volume, is ``inconclusive``.
    """
    if isinstance(series, ProbeSeries):
        m0, caps, sizes = list(series.m0), list(series.caps_hit), series.sizes
    else:
        m0, caps, sizes = [int(v) for v in series], [False] * len(series), None
    if len(m0) < 4:
        raise ValueError("need at least 3 doublings (4 volumes) to classify")
    inc = [b - a for a, b in zip(m0, m0[1:])]
    evidence = {
        "increments": inc,
        "last_increment": inc[-1],
        "growth_exponent": _growth_exponent(sizes, m0),
        "max_volume": sizes[-1] if sizes else None,
        "capped": any(caps),
        "min_growth": policy.min_growth,
    }
    if any(caps):
        cls = INCONCLUSIVE
    elif all(i > 0 for i in inc) and inc[-1] >= policy.min_growth:
        cls = DIVERGING
    elif inc[-1] == 0 and inc[-2] == 0:
        cls = STABILIZABLE
    else:
        cls = INCONCLUSIVE
    return Verdict(cls, evidence)


def _growth_exponent(sizes, m0):
    """Least-squares slope of log m0 against log L over the positive entries."""
    if sizes is None:
        sizes = [2**k for k in range(len(m0))]
    pts = [(math.log(L), math.log(m)) for L, m in zip(sizes, m0) if m > 0]
    if len(pts) < 2:
        return None
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


@dataclass(frozen=True)
class GreenCheck:
    site: tuple
    m0: int
    green_sum: object
    residual: object
    integer_form: bool
    mode: str

    def to_json(self):
        def s(v):
            return None if v is None else str(v)

        return {
            "site": list(self.site),
            "m0": self.m0,
            "green_sum": s(self.green_sum),
            "residual": s(self.residual),
            "integer_form": self.integer_form,
            "mode": self.mode,
        }


def green_identity_check(eta, V=None, site=None, exact_cap=EXACT_SOLVE_CAP):
    """Compare ``m_V(site)`` with ``sum_x G_V(site, x) (eta - xi)(x)``.

    The Green row is solved in exact rationals, so the residual is a
    ``Fraction`` and must be 0. Above ``exact_cap`` sites only the integer
    form ``Delta_V m = eta - xi`` is checked (``mode = "integer"``).
    """
    V = eta.volume if V is None else V
    site = (0,) * V.d if site is None else tuple(site)
    if site not in V:
        site = V.site(V.size // 2)
    res = stabilize(eta, V)
    if res.capped:
        raise RuntimeError("stabilization hit the toppling cap")
    diff = (eta.heights - res.xi.heights).reshape(-1)
    integer_ok = bool(np.array_equal(apply_toppling_matrix(V, res.m).reshape(-1), diff))
    m0 = int(res.m.reshape(-1)[V.index(site)])
    if V.size > exact_cap:
        return GreenCheck(site, m0, None, None, integer_ok, "integer")
    row = green_row(V, site, "exact")
    total = sum((g * int(v) for g, v in zip(row, diff) if v), Fraction(0))
    return GreenCheck(site, m0, total, total - m0, integer_ok, "exact")


def family_sampler(family, rho, seed=0):
    """Member of a named one-parameter family with mean ``rho``.

    ``two-point:a,b`` mixes heights a < b; ``poisson`` is 1 + Poisson(rho - 1).
    A callable ``rho -> SamplerSpec`` is passed through.
    """
    if callable(family):
        return family(rho).with_seed(seed)
    name, _, arg = family.partition(":")
    if name == "two-point":
        a, b = (int(v) for v in (arg or "1,3").split(","))
        if not a <= rho <= b:
            raise ValueError(f"mean {rho} outside [{a}, {b}]")
        q = (rho - a) / (b - a)
        return SamplerSpec("iid-discrete", {"values": {a: 1 - q, b: q}}, seed)
    if name == "poisson":
        if rho < 1:
            raise ValueError("poisson family needs mean >= 1")
        return SamplerSpec("iid-poisson-shifted", {"lam": rho - 1}, seed)
    raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True)
class CriticalBracket:
    lo: float
    hi: float
    family: str
    points: list
    converged: bool
    policy: Policy = field(default_factory=Policy)

    def to_json(self):
        return {
            "lo": self.lo,
            "hi": self.hi,
            "family": self.family,
            "converged": self.converged,
            "policy": self.policy.to_json(),
            "points": self.points,
        }


def majority_verdict(family, rho, V_list, seeds, policy=Policy()):
    """Majority class over seeds (ties resolve to ``inconclusive``)."""
    counts = Counter()
    for s in seeds:
        series = nested_probe(family_sampler(family, rho, s), V_list, cap=policy.cap)
        counts[classify(series, policy).cls] += 1
    top = counts.most_common()
    if len(top) > 1 and top[0][1] == top[1][1]:
        return INCONCLUSIVE, dict(counts)
    return top[0][0], dict(counts)


def critical_bracket(family, rho_lo, rho_hi, tol, V_list, seeds=None, policy=Policy()):
    """Bisect on the mean until ``hi - lo <= tol``.

    Endpoints must vote ``stabilizable-at-scale`` (lo) and ``diverging``
    (hi), else ``ValueError``. An inconclusive midpoint ends the search
    with ``converged=False`` and the bracket found so far.
    """
    if not rho_lo < rho_hi:
        raise ValueError("need rho_lo < rho_hi")
    seeds = list(range(policy.n_seeds)) if seeds is None else list(seeds)
    name = family if isinstance(family, str) else getattr(family, "__name__", "custom")
    points = []

    def vote(rho):
        cls, counts = majority_verdict(family, rho, V_list, seeds, policy)
        points.append({"rho": rho, "verdict": cls, "counts": counts})
        return cls

    if vote(rho_lo) != STABILIZABLE:
        raise ValueError(f"lower endpoint {rho_lo} is not stabilizable-at-scale")
    if vote(rho_hi) != DIVERGING:
        raise ValueError(f"upper endpoint {rho_hi} is not diverging")
    lo, hi = rho_lo, rho_hi
    while hi - lo > tol * (1 + 1e-9):
        mid = (lo + hi) / 2
        cls = vote(mid)
        if cls == STABILIZABLE:
            lo = mid
        elif cls == DIVERGING:
            hi = mid
        else:
            return CriticalBracket(lo, hi, name, points, False, policy)
    return CriticalBracket(lo, hi, name, points, True, policy)


def rectangle_lower_bound(zeta, ladder, base, V=None):
    """Stabilize ``base + zeta`` and check ``m(0) >=`` ladder rectangles inside V.

    ``base`` must be recurrent on V: each complete rectangle then forces
    one toppling of the origin. Returns ``(m0, count)``; a violated bound
    raises ``AssertionError``.
    """
    V = base.volume if V is None else V
    eta = base.restrict(V) + zeta.restrict(V)
    res = stabilize(eta, V)
    m0 = int(res.m.reshape(-1)[V.index((0, 0))])
    count = ladder.count_in(V)
    if m0 < count:
        raise AssertionError(f"origin toppled {m0} times but {count} rectangles lie inside {V}")
    return m0, count


def line_field_probe(p, V_list, seed, base_spec=None):
    """Line field plus a UMRC base on the largest box, probed over ``V_list``.

    Returns ``(series, bounds)`` where ``bounds`` lists ``(m0, count)`` per box.
    """
    big = V_list[-1]
    base = sample(base_spec or SamplerSpec("umrc", {}, seed), big)
    zeta, ladder = line_field(SamplerSpec("line-field", {"p": p}, seed), big)
    bounds = [rectangle_lower_bound(zeta, ladder, base, V) for V in V_list]
    eta = base + zeta
    spec = SamplerSpec(
        "compose-add",
        {"a": {"kind": "umrc", "params": {}}, "b": {"kind": "line-field", "params": {"p": p}}},
        seed,
    )
    return nested_probe(spec, V_list, eta=eta), bounds


def theory_class(mean):
    """Expected d = 1 class from the mean: threshold 2, boundary at exactly 2."""
    if mean is None:
        return None
    if mean < 2:
        return STABILIZABLE
    if mean > 2:
        return DIVERGING
    return "boundary"


def d1_exact_check(sampler, L_list=None, seeds=(0,), policy=Policy()):
    """Compare d = 1 verdicts with the density-2 threshold.

    A contradiction is a diverging verdict below 2 or a stabilizable one
    above 2. At exactly 2 both behaviours occur, so the row is flagged
    ``boundary`` and never counts as a contradiction.
    """
    L_list = default_schedule(1) if L_list is None else list(L_list)
    V_list = centered_volumes(L_list, 1)
    mean = declared_mean(sampler)
    expected = theory_class(mean)
    rows = []
    contradictions = 0
    for s in seeds:
        series = nested_probe(sampler.with_seed(s), V_list, cap=policy.cap)
        v = classify(series, policy)
        bad = (expected == STABILIZABLE and v.cls == DIVERGING) or (expected == DIVERGING and v.cls == STABILIZABLE)
        contradictions += bad
        rows.append({"seed": s, "verdict": v.cls, "m0": series.m0, "contradiction": bad})
    return {
        "sampler": sampler.to_json(),
        "mean": mean,
        "expected": expected,
        "boundary": expected == "boundary",
        "L": L_list,
        "runs": rows,
        "contradictions": contradictions,
        "verdicts": dict(Counter(r["verdict"] for r in rows)),
    }


def six_bar_identity(L=50):
    """Max over a box of ``|6 - (2 - Delta f)|`` for ``f = x^2 + y^2`` (exact integers)."""

    def f(x):
        return x[0] ** 2 + x[1] ** 2

    V = Volume.box(L, 2)
    worst = 0
    for x in V.coords():
        lap = discrete_laplacian(f, tuple(int(c) for c in x))
        worst = max(worst, abs(6 - (2 - lap)))
    return worst


def counterexample_6bar(V_list=None, L_identity=50, policy=Policy()):
    """Constant 6 equals ``2 - Delta f`` for the nonnegative ``f = x^2 + y^2``
    (``Delta`` is the toppling operator, so ``Delta f = -4``), yet its
    finite-volume topplings diverge. Constant 2 never topples.
    """
    V_list = centered_volumes([8, 16, 32, 64], 2) if V_list is None else V_list
    six = nested_probe(SamplerSpec("constant", {"value": 6}), V_list, cap=policy.cap)
    two = nested_probe(SamplerSpec("constant", {"value": 2}), V_list, cap=policy.cap)
    return {
        "identity_residual": six_bar_identity(L_identity),
        "identity_box": L_identity,
        "six": {"m0": six.m0, "verdict": classify(six, policy).cls},
        "two": {"m0": two.m0, "all_zero": all(v == 0 for v in two.m0)},
    }


__all__ = [
    "Policy",
    "ProbeSeries",
    "Verdict",
    "GreenCheck",
    "CriticalBracket",
    "default_schedule",
    "centered_volumes",
    "nested_probe",
    "classify",
    "green_identity_check",
    "family_sampler",
    "majority_verdict",
    "critical_bracket",
    "rectangle_lower_bound",
    "line_field_probe",
    "d1_exact_check",
    "counterexample_6bar",
    "six_bar_identity",
]
