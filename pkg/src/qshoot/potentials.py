"""Concrete evaluable potentials and combinators.

Scalar potentials evaluate V(r) for r > 0; the centrifugal term of the
scalar radial equation is NOT included here (the shooting module adds it).
Matrix potentials for coupled channels DO carry their centrifugal entries,
matching the convention of the coupled system where the angular-momentum
dependence lives inside the potential matrix.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RangeError


def _check_r(r):
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0.0):
        raise DomainError("potential requires r > 0")
    return r


class ScalarPotential:
    """Base: a real function of r > 0."""

    def eval(self, r):
        raise NotImplementedError

    def eval_many(self, r):
        return self.eval(_check_r(r))

    def __call__(self, r):
        return self.eval(r)

    def __add__(self, other):
        if isinstance(other, ScalarPotential):
            return SumPotential((self, other))
        return NotImplemented

    def __rmul__(self, factor):
        return ScaledPotential(float(factor), self)


@dataclass(frozen=True)
class Cornell(ScalarPotential):
    """V(r) = a/r + k r: Coulombic short range plus linear confinement."""

    a: float
    k: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.k)):
            raise ValueError("Cornell parameters must be finite")

    def eval(self, r):
        r = _check_r(r)
        return self.a / r + self.k * r


@dataclass(frozen=True)
class LogChannel(ScalarPotential):
    """V(r) = ln(a + b r), the diagonal channel shape of the hybrid matrix."""

    a: float
    b: float

    def eval(self, r):
        r = _check_r(r)
        arg = self.a + self.b * r
        if np.any(arg <= 0.0):
            raise DomainError("log argument must be positive")
        return np.log(arg)


@dataclass(frozen=True)
class Coulomb(ScalarPotential):
    """V(r) = c / r."""

    c: float

    def eval(self, r):
        return self.c / _check_r(r)


@dataclass(frozen=True)
class PowerLaw(ScalarPotential):
    """V(r) = c * r**p."""

    c: float
    p: float

    def eval(self, r):
        return self.c * _check_r(r) ** self.p


@dataclass(frozen=True)
class Constant(ScalarPotential):
    c: float

    def eval(self, r):
        r = _check_r(r)
        return np.full_like(r, self.c) if r.ndim else float(self.c)


class Tabulated(ScalarPotential):
    """Piecewise-linear interpolation of (r, V) pairs; no extrapolation."""

    def __init__(self, points):
        pts = [(float(r), float(v)) for r, v in points]
        if len(pts) < 2:
            raise ValueError("tabulated potential needs at least two points")
        r = np.array([p[0] for p in pts])
        if np.any(np.diff(r) <= 0.0):
            raise ValueError("tabulated r values must be strictly ascending")
        self.r = r
        self.v = np.array([p[1] for p in pts])

    def eval(self, r):
        r = _check_r(r)
        if np.any(r < self.r[0]) or np.any(r > self.r[-1]):
            raise RangeError("r outside the tabulated range [%g, %g]"
                             % (self.r[0], self.r[-1]))
        return np.interp(r, self.r, self.v)


class PluginPotential(ScalarPotential):
    """Scalar potential backed by a shared-library plugin function.

    The evaluator is built by plugins.potential_from_plugin; it exposes a
    single-point call and a batched call (one foreign call per batch).
    """

    def __init__(self, evaluator, label="plugin"):
        self._evaluator = evaluator
        self.label = label

    def eval(self, r):
        r = _check_r(r)
        if r.ndim == 0:
            return self._evaluator.eval_one(float(r))
        return self._evaluator.eval_batch(r)


@dataclass(frozen=True)
class SumPotential(ScalarPotential):
    parts: tuple

    def eval(self, r):
        total = self.parts[0].eval(r)
        for p in self.parts[1:]:
            total = total + p.eval(r)
        return total


@dataclass(frozen=True)
class ScaledPotential(ScalarPotential):
    factor: float
    inner: ScalarPotential

    def __post_init__(self):
        if not np.isfinite(self.factor):
            raise ValueError("scale factor must be finite")

    def eval(self, r):
        return self.factor * self.inner.eval(r)


def eval_scalar(spec, r):
    """Evaluate a scalar potential at radius r (spec operation surface)."""
    out = spec.eval(_check_r(r))
    return float(out) if np.ndim(out) == 0 else out


def eval_tabulated(points, r):
    """Piecewise-linear lookup in an (r, V) table; exact at the knots."""
    return eval_scalar(Tabulated(points), r)


class MatrixPotential:
    """Base: a symmetric N x N matrix function of r > 0."""

    n_channels = None

    def eval(self, r):
        raise NotImplementedError

    def eval_many(self, r):
        r = _check_r(np.atleast_1d(r))
        return np.stack([self.eval(float(x)) for x in r])

    def __call__(self, r):
        return self.eval(r)


class HybridLog(MatrixPotential):
    """The 2x2 hybrid matrix potential with logarithmic channels.

    V(r) = [[ (l(l+1)+2)/(m r^2) + ln(a0+b0 r),  -2 sqrt(l(l+1))/(m r^2) ],
            [ -2 sqrt(l(l+1))/(m r^2),  l(l+1)/(m r^2) + ln(a1+b1 r) ]]
    """

    n_channels = 2

    def __init__(self, a0, b0, a1, b1, l, m):
        if m <= 0.0:
            raise ValueError("mass must be positive")
        if l < 0:
            raise ValueError("angular momentum must be non-negative")
        self.a0, self.b0, self.a1, self.b1 = float(a0), float(b0), float(a1), float(b1)
        self.l = int(l)
        self.m = float(m)

    def eval(self, r):
        return self.eval_many([r])[0]

    def eval_many(self, r):
        r = _check_r(np.atleast_1d(r))
        ll = float(self.l * (self.l + 1))
        inv = 1.0 / (self.m * r * r)
        arg0 = self.a0 + self.b0 * r
        arg1 = self.a1 + self.b1 * r
        if np.any(arg0 <= 0.0) or np.any(arg1 <= 0.0):
            raise DomainError("log argument must be positive")
        out = np.empty((r.shape[0], 2, 2))
        out[:, 0, 0] = (ll + 2.0) * inv + np.log(arg0)
        out[:, 1, 1] = ll * inv + np.log(arg1)
        out[:, 0, 1] = -2.0 * np.sqrt(ll) * inv
        out[:, 1, 0] = out[:, 0, 1]
        return out


class DiagonalPlusCoupling(MatrixPotential):
    """N scalar channel potentials on the diagonal plus an optional symmetric
    coupling evaluator (r -> full N x N off-diagonal contribution)."""

    def __init__(self, channels, coupling=None):
        channels = tuple(channels)
        if not channels:
            raise ValueError("need at least one channel")
        self.channels = channels
        self.coupling = coupling
        self.n_channels = len(channels)

    def eval(self, r):
        return self.eval_many([r])[0]

    def eval_many(self, r):
        r = _check_r(np.atleast_1d(r))
        n = self.n_channels
        out = np.zeros((r.shape[0], n, n))
        for j, ch in enumerate(self.channels):
            out[:, j, j] = ch.eval_many(r)
        if self.coupling is not None:
            for i, x in enumerate(r):
                c = np.asarray(self.coupling(float(x)), dtype=np.float64)
                out[i] += 0.5 * (c + c.T)  # keep exact symmetry
        return out


def eval_matrix(spec, r):
    """Evaluate a matrix potential at radius r (spec operation surface)."""
    return spec.eval(float(_check_r(r)))


def load_tabulated_csv(path):
    """Read a two-column CSV (r, V); an optional header row is skipped."""
    points = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if len(cells) != 2:
                raise ValueError("%s:%d: expected two columns" % (path, lineno))
            try:
                points.append((float(cells[0]), float(cells[1])))
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise ValueError("%s:%d: non-numeric row" % (path, lineno)) from None
    try:
        return Tabulated(points)
    except ValueError as exc:
        raise ValueError("%s: %s" % (path, exc)) from None
