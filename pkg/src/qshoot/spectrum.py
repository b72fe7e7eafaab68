"""Perturbative bound-state masses and potential-parameter fitting.

The mass of a state is assembled from the leading-order eigenvalue plus
first- and second-order corrections evaluated as radial matrix elements:

    M = 2m + E0(n,l) + <n|w1|n>/m + <n|w2|n>/m^2
        + (1/m^2) * sum_{k != n} |<n|w1|k>|^2 / (E0_n - E0_k)

where w1 and w2 are the caller-supplied correction weights and the state sum
runs over radial excitations of the same l up to a truncation that is always
reported alongside the result.  The matrix-element proportionality factor is
fixed to 1; callers that need quantum-number-dependent prefactors scale the
weights themselves.
"""

from dataclasses import dataclass, field

import numpy as np

from . import engine
from .errors import BracketError, ConvergenceError, FitError
from .potentials import Cornell
from .shooting import ShootingConfig, ShootingProblem, default_mesh, solve_eigen

_DEFAULT_SEARCH = ShootingConfig(e_min=0.01, e_max=20.0)


@dataclass
class SpectrumModel:
    """Leading-order potential plus correction weights for one l sector."""

    m: float
    v0: object
    l: int = 0
    v_1m: object = None
    v_1m2: object = None
    basis_max: int = 20
    mesh: engine.RadialMesh = None
    search: ShootingConfig = _DEFAULT_SEARCH
    _states: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.m <= 0.0:
            raise ValueError("mass must be positive")
        if self.basis_max < 1:
            raise ValueError("basis_max must be at least 1")
        if self.mesh is None:
            self.mesh = default_mesh(self.v0, self.m)

    def state(self, n):
        """Leading-order eigenstate n, solved once and cached."""
        if n not in self._states:
            problem = ShootingProblem(self.v0, self.l, self.m, self.mesh)
            self._states[n] = solve_eigen(problem, self.search, n)
        return self._states[n]


@dataclass(frozen=True)
class MassBreakdown:
    """Term-by-term mass result; total is the exact sum of the four terms."""

    e0: float
    lo: float
    nlo: float
    nnlo_diag: float
    nnlo_sum: float
    total: float
    sum_tail: float


def matrix_element(model, n, n_prime, w, factor=1.0):
    """<n l| w(r) |n' l> as the radial integral; factor scales the result."""
    f = model.state(n).wavefunction
    g = model.state(n_prime).wavefunction
    return factor * engine.integrate_product(f, w, g)


def second_order_sum(model, n):
    """Bare second-order state sum sum_{k != n} |<n|w1|k>|^2 / (E0_n - E0_k).

    Returns (value, |last included term|).  The 1/m^2 prefactor of the mass
    formula is applied by mass_at_order, not here.
    """
    if model.v_1m is None:
        return 0.0, 0.0
    e_n = model.state(n).energy
    value = 0.0
    tail = 0.0
    for k in range(model.basis_max + 1):
        if k == n:
            continue
        de = e_n - model.state(k).energy
        if abs(de) < 1e-12:
            raise ConvergenceError(
                "degenerate levels n=%d and k=%d: perturbation theory invalid"
                % (n, k))
        me = matrix_element(model, n, k, model.v_1m)
        term = me * me / de
        value += term
        tail = abs(term)
    return value, tail


def mass_at_order(model, n):
    """Bound-state mass with corrections through second order."""
    m = model.m
    e0 = model.state(n).energy
    lo = 2.0 * m + e0
    nlo = matrix_element(model, n, n, model.v_1m) / m if model.v_1m is not None else 0.0
    nnlo_diag = (matrix_element(model, n, n, model.v_1m2) / (m * m)
                 if model.v_1m2 is not None else 0.0)
    raw_sum, raw_tail = second_order_sum(model, n)
    nnlo_sum = raw_sum / (m * m)
    total = lo + nlo + nnlo_diag + nnlo_sum
    return MassBreakdown(e0=e0, lo=lo, nlo=nlo, nnlo_diag=nnlo_diag,
                         nnlo_sum=nnlo_sum, total=total,
                         sum_tail=raw_tail / (m * m))


@dataclass(frozen=True)
class FitResult:
    a: float
    k: float
    m: float
    iterations: int
    residuals: tuple

    @property
    def params(self):
        return self.a, self.k, self.m


def _default_builder(a, k, m, l):
    return SpectrumModel(m=m, v0=Cornell(a, k), l=l)


def fit_parameters(targets, guess, fit_tol=1e-6, max_iter=30,
                   model_builder=None, fd_step=1e-5):
    """Fit (a, k, m) so three predicted masses match the targets.

    targets are (n, l, mass) triples; the masses are produced by
    model_builder(a, k, m, l) through mass_at_order (default: Cornell leading
    order, no corrections).  Damped Newton with a forward-difference Jacobian
    (relative step fd_step); steps are halved until the residual norm drops.
    """
    targets = [(int(n), int(l), float(mass)) for n, l, mass in targets]
    if len(targets) != 3:
        raise FitError("need exactly three target states")
    if len({(n, l) for n, l, _ in targets}) != len(targets):
        raise FitError("duplicate target state: the fit Jacobian is singular")
    builder = model_builder if model_builder is not None else _default_builder

    def residuals(x):
        a, k, m = x
        if m <= 0.0:
            raise FitError("fit stepped to non-positive mass m=%g" % m)
        models = {}
        out = np.empty(3)
        for i, (n, l, target) in enumerate(targets):
            if l not in models:
                models[l] = builder(a, k, m, l)
            out[i] = mass_at_order(models[l], n).total - target
        return out

    x = np.array(guess, dtype=np.float64)
    res = residuals(x)
    iterations = 0
    for iterations in range(max_iter + 1):
        if np.max(np.abs(res)) < fit_tol:
            return FitResult(a=float(x[0]), k=float(x[1]), m=float(x[2]),
                             iterations=iterations, residuals=tuple(res))
        if iterations == max_iter:
            break
        jac = np.empty((3, 3))
        for j in range(3):
            step = fd_step * max(abs(x[j]), 1e-8)
            xp = x.copy()
            xp[j] += step
            jac[:, j] = (residuals(xp) - res) / step
        try:
            delta = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            raise FitError("singular Jacobian at (%g, %g, %g)" % tuple(x)) from None
        lam = 1.0
        base = np.linalg.norm(res)
        while lam > 1e-6:
            trial = x + lam * delta
            try:
                trial_res = residuals(trial)
            except (FitError, ValueError, BracketError, ConvergenceError):
                trial_res = None  # stepped outside the solvable region
            if trial_res is not None and np.linalg.norm(trial_res) < base:
                x, res = trial, trial_res
                break
            lam *= 0.5
        else:
            raise ConvergenceError(
                "no damping step improves the residual; best (%g, %g, %g)"
                % tuple(x), best=FitResult(a=float(x[0]), k=float(x[1]),
                                           m=float(x[2]), iterations=iterations,
                                           residuals=tuple(res)))
    raise ConvergenceError(
        "fit did not converge in %d iterations; max residual %g"
        % (max_iter, float(np.max(np.abs(res)))),
        best=FitResult(a=float(x[0]), k=float(x[1]), m=float(x[2]),
                       iterations=iterations, residuals=tuple(res)))
