"""Declarative random height fields.

A :class:`SamplerSpec` names a field family, its parameters and a seed.
Site-indexed kinds (``constant``, ``iid-*``, ``line-field``,
``d1-periodic``) draw each site's value from a counter keyed by the
site's absolute coordinates, so sampling a big box and restricting to a
sub-box gives exactly the sample of the sub-box. Chain-based kinds
(``umrc``, ``sea-islands``) are not restriction-consistent; sample them
once on the largest volume and restrict.
"""
from dataclasses import dataclass, field
import json

import numpy as np
import scipy.ndimage
import scipy.stats

from . import rng
from .config import HeightConfig

KINDS = (
    "constant",
    "iid-discrete",
    "iid-poisson-shifted",
    "line-field",
    "umrc",
    "sea-islands",
    "compose-add",
    "d1-periodic",
)


@dataclass(frozen=True)
class SamplerSpec:
    """A field family with parameters and a seed.

    Parameters by kind:

    * ``constant``: ``value``
    * ``iid-discrete``: ``values`` mapping height -> probability
    * ``iid-poisson-shifted``: ``lam``, optional ``shift`` (default 1)
    * ``line-field``: ``p`` or separate ``p_x`` / ``p_y`` (d = 2)
    * ``umrc``: optional ``burn_in``, ``stride``
    * ``sea-islands``: ``p``, optional ``base`` (umrc params)
    * ``compose-add``: ``a`` and ``b``, each a spec dict
    * ``d1-periodic``: ``pattern`` digit string, optional ``phase`` (d = 1)
    """

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "seed", int(self.seed))
        _validate(self)

    def __hash__(self):
        return hash(self.canonical())

    def with_seed(self, seed):
        return SamplerSpec(self.kind, self.params, seed)

    def to_json(self):
        return {"kind": self.kind, "params": _jsonable(self.params), "seed": self.seed}

    def canonical(self):
        """Canonical JSON text (sorted keys), used in reports and hashes."""
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(obj["kind"], obj.get("params", {}), obj.get("seed", 0))

    @classmethod
    def parse(cls, text, seed=0):
        """Parse JSON or a shorthand such as ``constant:6``, ``iid:1=0.5,3=0.5``,
        ``poisson:3.5``, ``line-field:0.2``, ``umrc``, ``sea-islands:0.95``,
        ``periodic:31`` or ``bernoulli:0.3``.
        """
        text = text.strip()
        if text.startswith("{"):
            obj = json.loads(text)
            obj.setdefault("seed", seed)
            return cls.from_json(obj)
        kind, _, arg = text.partition(":")
        kind = _ALIASES.get(kind, kind)
        if kind == "constant":
            return cls(kind, {"value": int(arg)}, seed)
        if kind == "iid-discrete":
            values = {}
            for item in arg.split(","):
                h, _, p = item.partition("=")
                values[int(h)] = float(p)
            return cls(kind, {"values": values}, seed)
        if kind == "bernoulli":
            a = float(arg)
            return cls("iid-discrete", {"values": {0: 1 - a, 1: a}}, seed)
        if kind == "iid-poisson-shifted":
            return cls(kind, {"lam": float(arg)}, seed)
        if kind in ("line-field", "sea-islands"):
            return cls(kind, {"p": float(arg)}, seed)
        if kind == "umrc":
            return cls(kind, {}, seed)
        if kind == "d1-periodic":
            return cls(kind, {"pattern": arg}, seed)
        raise ValueError(f"cannot parse sampler shorthand {text!r}")


_ALIASES = {
    "iid": "iid-discrete",
    "poisson": "iid-poisson-shifted",
    "periodic": "d1-periodic",
    "line": "line-field",
    "sea": "sea-islands",
}


def _jsonable(obj):
    if isinstance(obj, SamplerSpec):
        return obj.to_json()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _prob(p, name="p"):
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def _table(params):
    values = params.get("values")
    if not values:
        raise ValueError("iid-discrete needs a non-empty value table")
    hs = np.array([int(h) for h in values], dtype=np.int64)
    ps = np.array([float(p) for p in values.values()], dtype=np.float64)
    if (hs < 0).any() or (ps < 0).any() or not np.isclose(ps.sum(), 1.0, atol=1e-9):
        raise ValueError("value table needs heights >= 0 and probabilities summing to 1")
    order = np.argsort(hs)
    return hs[order], ps[order]


def _child(spec, key):
    child = spec.params[key]
    if not isinstance(child, SamplerSpec):
        child = SamplerSpec(child["kind"], child.get("params", {}), 0)
    return child.with_seed(rng.derive_seed(spec.seed, 0 if key == "a" else 1))


def _validate(spec):
    p = spec.params
    k = spec.kind
    if k == "constant":
        if int(p.get("value", -1)) < 0:
            raise ValueError("constant needs value >= 0")
    elif k == "iid-discrete":
        _table(p)
    elif k == "iid-poisson-shifted":
        if float(p.get("lam", -1)) < 0:
            raise ValueError("lam must be >= 0")
    elif k == "line-field":
        _prob(p.get("p_x", p.get("p", -1)), "p_x")
        _prob(p.get("p_y", p.get("p", -1)), "p_y")
    elif k == "sea-islands":
        _prob(p.get("p", -1))
    elif k == "compose-add":
        if "a" not in p or "b" not in p:
            raise ValueError("compose-add needs 'a' and 'b'")
        _child(spec, "a")
        _child(spec, "b")
    elif k == "d1-periodic":
        pat = str(p.get("pattern", ""))
        if not pat or not pat.isdigit():
            raise ValueError("d1-periodic needs a non-empty digit pattern")


def declared_mean(spec):
    """Closed-form mean height, or ``None`` for chain-based kinds."""
    p = spec.params
    k = spec.kind
    if k == "constant":
        return float(p["value"])
    if k == "iid-discrete":
        hs, ps = _table(p)
        return float((hs * ps).sum())
    if k == "iid-poisson-shifted":
        return float(p.get("shift", 1)) + float(p["lam"])
    if k == "line-field":
        return float(p.get("p_x", p.get("p"))) + float(p.get("p_y", p.get("p")))
    if k == "d1-periodic":
        pat = str(p["pattern"])
        return sum(int(c) for c in pat) / len(pat)
    if k == "compose-add":
        a, b = declared_mean(_child(spec, "a")), declared_mean(_child(spec, "b"))
        return None if a is None or b is None else a + b
    return None


def _site_uniforms(spec, V, stream=rng.STREAM_IID):
    keys = rng.site_keys(V.coords())
    return rng.uniform_array(spec.seed, stream, keys).reshape(V.shape)


def _axis_marks(seed, stream, coords, p):
    keys = np.asarray(coords, dtype=np.int64) + rng.SITE_OFFSET
    return (rng.uniform_array(seed, stream, keys) < p).astype(np.int64)


def sample(spec, V):
    """Draw the field on ``V``; deterministic in ``(spec, V)``."""
    k = spec.kind
    p = spec.params
    if k == "constant":
        return HeightConfig.constant(V, int(p["value"]))
    if k == "iid-discrete":
        hs, ps = _table(p)
        u = _site_uniforms(spec, V)
        idx = np.searchsorted(np.cumsum(ps)[:-1], u, side="right")
        return HeightConfig(V, hs[idx])
    if k == "iid-poisson-shifted":
        u = _site_uniforms(spec, V)
        draws = scipy.stats.poisson.ppf(u, float(p["lam"])) if p["lam"] > 0 else np.zeros(V.shape)
        return HeightConfig(V, int(p.get("shift", 1)) + draws.astype(np.int64))
    if k == "line-field":
        return line_field(spec, V)[0]
    if k == "umrc":
        from .recurrence import umrc_chain

        return next(umrc_chain(V, p.get("burn_in"), p.get("stride"), spec.seed, 1))
    if k == "sea-islands":
        base = SamplerSpec("umrc", p.get("base", {}), spec.seed)
        return sea_islands(base, float(p["p"]), V, spec.seed)
    if k == "compose-add":
        return compose_add(_child(spec, "a"), _child(spec, "b"), V)
    if k == "d1-periodic":
        if V.d != 1:
            raise ValueError("d1-periodic needs d = 1")
        digits = np.array([int(c) for c in str(p["pattern"])], dtype=np.int64)
        x = np.arange(V.lo[0], V.hi[0] + 1) - int(p.get("phase", 0))
        return HeightConfig(V, digits[np.mod(x, len(digits))])
    raise ValueError(f"unknown kind {k!r}")


@dataclass(frozen=True)
class RectangleLadder:
    """Nested rectangles around the origin whose four sides sit on marked lines.

    ``rectangles[i] = (a, b, c, d)`` is ``[a, b] x [c, d]`` with
    ``omega(a) = omega(b) = omega'(c) = omega'(d) = 1``, ``a, c < 0 < b, d``.
    The i-th rectangle uses the i-th closest mark on every side, so
    successive rectangles are strictly nested with disjoint boundaries.
    """

    rectangles: tuple

    @property
    def count(self):
        return len(self.rectangles)

    def count_in(self, V):
        """Number of ladder rectangles lying completely inside ``V``."""
        return sum(1 for a, b, c, d in self.rectangles if (a, c) in V and (b, d) in V)


def line_field(spec, V):
    """The field ``omega(x) + omega'(y)`` on ``V`` and its rectangle ladder.

    ``omega`` and ``omega'`` are independent Bernoulli sequences indexed by
    absolute coordinate, so the field is restriction-consistent.
    """
    if V.d != 2:
        raise ValueError("line-field needs d = 2")
    p = spec.params
    px = _prob(p.get("p_x", p.get("p")), "p_x")
    py = _prob(p.get("p_y", p.get("p")), "p_y")
    xs = np.arange(V.lo[0], V.hi[0] + 1)
    ys = np.arange(V.lo[1], V.hi[1] + 1)
    wx = _axis_marks(spec.seed, rng.STREAM_LINE_X, xs, px)
    wy = _axis_marks(spec.seed, rng.STREAM_LINE_Y, ys, py)
    zeta = HeightConfig(V, wx[:, None] + wy[None, :])
    left = sorted((int(x) for x in xs[(wx == 1) & (xs < 0)]), reverse=True)
    right = sorted(int(x) for x in xs[(wx == 1) & (xs > 0)])
    down = sorted((int(y) for y in ys[(wy == 1) & (ys < 0)]), reverse=True)
    up = sorted(int(y) for y in ys[(wy == 1) & (ys > 0)])
    rects = tuple(zip(left, right, down, up))
    return zeta, RectangleLadder(rects)


def sea_islands(base, p, V, seed=None):
    """UMRC sample with every site independently raised to ``2d`` w.p. ``p``.

    Raising heights keeps the configuration recurrent.
    """
    p = _prob(p)
    seed = base.seed if seed is None else int(seed)
    eta = sample(base.with_seed(seed), V)
    u = rng.uniform_array(seed, rng.STREAM_OVERLAY, rng.site_keys(V.coords())).reshape(V.shape)
    return HeightConfig(V, np.where(u < p, 2 * V.d, eta.heights))


def compose_add(a, b, V, seed=None):
    """Pointwise sum of independent samples of ``a`` and ``b``.

    With ``seed`` given, the two parts get seeds derived from it; otherwise
    their own seeds are used as they are.
    """
    if seed is not None:
        a = a.with_seed(rng.derive_seed(seed, 0))
        b = b.with_seed(rng.derive_seed(seed, 1))
    return sample(a, V) + sample(b, V)


def build_nested_lakes(n, V, island_height=3):
    """Recurrent configuration with ``n`` nested lakes around the origin (d = 2).

    Square rings of height 4 sit at Chebyshev radius ``2, 4, ..., 2n``;
    the odd-radius bands between them are islands of height
    ``island_height`` (3 keeps every height >= 3, which is recurrent),
    except on the row ``y = 0`` which stays at height 4 and joins all
    rings to the origin. Everything outside radius ``2n`` is 4.
    """
    if V.d != 2:
        raise ValueError("nested lakes need d = 2")
    if n < 0:
        raise ValueError("n must be >= 0")
    if any(abs(c) < 2 * n for c in V.lo + V.hi):
        raise ValueError(f"volume too small for {n} rings (needs radius {2 * n} around the origin)")
    if island_height not in (3, 4):
        raise ValueError("island_height must be 3 or 4 to guarantee recurrence")
    X = V.coords().reshape(V.shape + (2,))
    r = np.abs(X).max(axis=-1)
    h = np.full(V.shape, 4, dtype=np.int64)
    island = (r % 2 == 1) & (r < 2 * n) & (X[..., 1] != 0)
    h[island] = island_height
    return HeightConfig(V, h)


def sea_component(eta, origin=None):
    """Mask of the 4-connected component of height-``2d`` sites holding ``origin``."""
    V = eta.volume
    origin = (0,) * V.d if origin is None else tuple(origin)
    sea = eta.heights == 2 * V.d
    idx = tuple(c - a for c, a in zip(origin, V.lo))
    if not sea[idx]:
        return np.zeros(V.shape, dtype=bool)
    labels, _ = scipy.ndimage.label(sea)
    return labels == labels[idx]
