"""Regularized approximating system solved by damped Picard iteration.

The coupled singular system is approximated at level n by shifting the
singular arguments with eps = 1/n:

    -Delta_p u = f(x, u + eps, v, grad u, grad v),
    -Delta_q v = g(x, u, v + eps, grad u, grad v),

with the model reactions (structural upper bounds taken as equalities)

    f = mhat1 a1(x) [ (u + eps)^{alpha1} max(v, 0)^{beta1}
                      + c1 |grad u|^{gamma1} + c2 |grad v|^{delta1} ],
    g = mhat2 a2(x) [ max(u, 0)^{alpha2} (v + eps)^{beta2}
                      + d1 |grad u|^{gamma2} + d2 |grad v|^{delta2} ],

alpha1, beta2 <= 0 being the singular directions (made finite by the
eps-shift) and all other exponents nonnegative.  Power conventions:
0^0 = 1 (a zero exponent means the term does not depend on that state)
and 0^b = 0 for b > 0.

Each Picard step freezes the reactions at the current iterate, solves the
two decoupled Dirichlet problems on the box (Jacobi-style: both use the
same frozen state, so the step is order-independent), damps the update by
tau, and truncates negative parts to zero.  tau is halved when a step
inflates the Sobolev increment, down to 1/64.  The per-level states are
warm starts for the next level, and the report collects the discrete
shadows of the uniform bounds: sup norms, interior infima on a ball,
gradient norms, and Cauchy increments between consecutive levels.

eps enters only the reaction; the solver's own gradient regularization is
an independent knob (see plap_solver).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .field import (
    Grid,
    Region,
    ScalarField,
    VectorField,
    ball_mask,
    gradient,
    linf_norm,
    lp_norm,
    w1p_norm,
)
from .hypotheses import ExponentConfig, check_H1a, check_H2
from .plap_solver import DirichletProblem, solve

_TAU_MIN = 1.0 / 64.0


@dataclass(frozen=True)
class ReactionSpec:
    """Model reactions: exponents, weight fields, and gradient coefficients."""

    exponents: ExponentConfig
    weight_a1: ScalarField
    weight_a2: ScalarField
    coeff_grad1_own: float = 1.0  # multiplies |grad u|^{gamma1} in f
    coeff_grad1_other: float = 1.0  # multiplies |grad v|^{delta1} in f
    coeff_grad2_own: float = 1.0  # multiplies |grad v|^{delta2} in g
    coeff_grad2_other: float = 1.0  # multiplies |grad u|^{gamma2} in g
    form: str = "model"

    def __post_init__(self) -> None:
        if self.form != "model":
            raise ValueError(f"unknown reaction form {self.form!r}")
        if self.weight_a1.grid != self.weight_a2.grid:
            raise ValueError("weight fields live on different grids")
        for name in ("weight_a1", "weight_a2"):
            if not np.all(getattr(self, name).values > 0.0):
                raise ValueError(f"{name} must be strictly positive everywhere")
        for name in ("coeff_grad1_own", "coeff_grad1_other", "coeff_grad2_own", "coeff_grad2_other"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        c = self.exponents
        if not (c.p > 1.0 and c.q > 1.0):
            raise ValueError("exponents need p > 1 and q > 1")
        if not (-1.0 < c.alpha1 <= 0.0 and -1.0 < c.beta2 <= 0.0):
            raise ValueError("singular exponents alpha1, beta2 must lie in (-1, 0]")
        for name in ("beta1", "gamma1", "delta1", "alpha2", "gamma2", "delta2"):
            if getattr(c, name) < 0.0:
                raise ValueError(f"exponent {name} must be nonnegative")
        if not (c.mhat1 > 0.0 and c.mhat2 > 0.0):
            raise ValueError("mhat1 and mhat2 must be positive")

    @property
    def grid(self) -> Grid:
        return self.weight_a1.grid


@dataclass(frozen=True)
class SystemState:
    """One resolved level of the approximating system."""

    n: int
    eps: float
    u: ScalarField
    v: ScalarField
    picard_iters: int
    increment_p: float
    increment_q: float
    converged: bool
    hypotheses_ok: bool

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("level index n must be >= 1")
        if self.eps != 1.0 / self.n:
            raise ValueError("eps must equal 1/n exactly")
        if np.any(self.u.values < 0.0) or np.any(self.v.values < 0.0):
            raise ValueError("iterates must be nonnegative cellwise")

    def summary(self) -> dict:
        return {
            "n": self.n,
            "eps": self.eps,
            "picard_iters": self.picard_iters,
            "increment_p": self.increment_p,
            "increment_q": self.increment_q,
            "converged": self.converged,
            "hypotheses_ok": self.hypotheses_ok,
            "sup_u": linf_norm(self.u),
            "sup_v": linf_norm(self.v),
        }


@dataclass(frozen=True)
class SchemeReport:
    """Discrete shadows of the uniform level bounds."""

    n_list: tuple[int, ...]
    rho: float
    M_observed: float
    sigma_rho: float
    sigma_rho_levels: tuple[float, ...]
    gradient_p_norms: tuple[float, ...]
    gradient_q_norms: tuple[float, ...]
    cauchy_p: tuple[float, ...]
    cauchy_q: tuple[float, ...]
    converged_n: tuple[bool, ...]
    hypotheses_ok: bool

    def __post_init__(self) -> None:
        if not self.M_observed >= self.sigma_rho >= 0.0:
            raise ValueError("report invariant M_observed >= sigma_rho >= 0 violated")

    def to_json_dict(self) -> dict:
        return {
            "n_list": list(self.n_list),
            "rho": self.rho,
            "M_observed": self.M_observed,
            "sigma_rho": self.sigma_rho,
            "sigma_rho_levels": list(self.sigma_rho_levels),
            "gradient_p_norms": list(self.gradient_p_norms),
            "gradient_q_norms": list(self.gradient_q_norms),
            "cauchy_p": list(self.cauchy_p),
            "cauchy_q": list(self.cauchy_q),
            "converged_n": list(self.converged_n),
            "hypotheses_ok": self.hypotheses_ok,
        }


def _grad_mag(g: VectorField) -> np.ndarray:
    return np.sqrt(np.einsum("...k,...k->...", g.values, g.values))


def eval_f(
    spec: ReactionSpec,
    u_shifted: ScalarField,
    v: ScalarField,
    grad_u: VectorField,
    grad_v: VectorField,
    eps: float,
) -> ScalarField:
    """Model reaction f at a frozen state; u_shifted must already carry +eps."""
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    if float(np.min(u_shifted.values)) < 0.5 * eps:
        raise ValueError("shifted iterate fell below eps/2: positivity invariant broken upstream")
    c = spec.exponents
    sing = np.power(u_shifted.values, c.alpha1) * np.power(np.maximum(v.values, 0.0), c.beta1)
    conv = spec.coeff_grad1_own * np.power(_grad_mag(grad_u), c.gamma1)
    conv = conv + spec.coeff_grad1_other * np.power(_grad_mag(grad_v), c.delta1)
    return ScalarField(spec.grid, c.mhat1 * spec.weight_a1.values * (sing + conv))


def eval_g(
    spec: ReactionSpec,
    u: ScalarField,
    v_shifted: ScalarField,
    grad_u: VectorField,
    grad_v: VectorField,
    eps: float,
) -> ScalarField:
    """Model reaction g at a frozen state; v_shifted must already carry +eps."""
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    if float(np.min(v_shifted.values)) < 0.5 * eps:
        raise ValueError("shifted iterate fell below eps/2: positivity invariant broken upstream")
    c = spec.exponents
    sing = np.power(np.maximum(u.values, 0.0), c.alpha2) * np.power(v_shifted.values, c.beta2)
    conv = spec.coeff_grad2_other * np.power(_grad_mag(grad_u), c.gamma2)
    conv = conv + spec.coeff_grad2_own * np.power(_grad_mag(grad_v), c.delta2)
    return ScalarField(spec.grid, c.mhat2 * spec.weight_a2.values * (sing + conv))


def frozen_reactions(spec: ReactionSpec, state: SystemState) -> tuple[ScalarField, ScalarField]:
    """Reaction fields frozen at a state (for fixed-point residual checks)."""
    grid = spec.grid
    gu = gradient(state.u)
    gv = gradient(state.v)
    u_sh = ScalarField(grid, state.u.values + state.eps)
    v_sh = ScalarField(grid, state.v.values + state.eps)
    rhs_f = eval_f(spec, u_sh, state.v, gu, gv, state.eps)
    rhs_g = eval_g(spec, state.u, v_sh, gu, gv, state.eps)
    return rhs_f, rhs_g


def _hypotheses_ok(config: ExponentConfig) -> bool:
    return check_H1a(config).passed and check_H2(config).passed


def _positivity_seed(
    spec: ReactionSpec,
    eps: float,
    solver_tol: float,
    solver_max_iter: int,
    stationarity_scale: float,
) -> tuple[ScalarField, ScalarField]:
    """Strictly positive starting pair for a cold Picard start.

    The zero pair is a spurious fixed point of the model reactions whenever
    beta1 > 0 or alpha2 > 0 (the unshifted coupling argument vanishes at
    zero), while the underlying existence theory produces strictly positive
    solutions.  Solving the constant-reaction problems with the model
    product term evaluated at the eps-level state keeps the iteration on
    the positive branch.
    """
    grid = spec.grid
    c = spec.exponents
    rf = ScalarField(grid, c.mhat1 * spec.weight_a1.values * eps ** (c.alpha1 + c.beta1))
    rg = ScalarField(grid, c.mhat2 * spec.weight_a2.values * eps ** (c.alpha2 + c.beta2))
    out = []
    for pw, rhs in ((c.p, rf), (c.q, rg)):
        prob = DirichletProblem(grid, pw, rhs, tol=solver_tol, max_iter=solver_max_iter)
        stat = stationarity_scale * (1.0 + lp_norm(rhs, 2.0))
        w, _ = solve(prob, stationarity_tol=stat)
        out.append(ScalarField(grid, np.maximum(w.values, 0.0)))
    return out[0], out[1]


def picard_solve_level(
    spec: ReactionSpec,
    n: int,
    warm_start: SystemState | None = None,
    damping: float = 0.5,
    tol: float = 1e-5,
    max_picard: int = 60,
    solver_tol: float = 1e-12,
    solver_max_iter: int = 200,
    stationarity_scale: float = 1e-9,
) -> SystemState:
    """Resolve level n of the approximating system by damped Picard iteration.

    Each outer step freezes the reactions at the current pair, solves the two
    Dirichlet problems (warm-started, to a scaled stationarity target), forms
    the damped update, truncates negatives, and measures the increments in
    W^{1,p} x W^{1,q}.  A step that inflates the combined increment beyond
    the previous one halves tau (reusing the solved pair) down to 1/64.
    Convergence requires both increments below tol with both inner solves
    converged; otherwise the state is returned flagged.
    """
    if n < 1:
        raise ValueError("level index n must be >= 1")
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    grid = spec.grid
    c = spec.exponents
    eps = 1.0 / n
    hyp_ok = _hypotheses_ok(c)

    if warm_start is not None:
        if warm_start.u.grid != grid:
            raise ValueError("warm start lives on a different grid")
        u, v = warm_start.u, warm_start.v
    else:
        u, v = _positivity_seed(spec, eps, solver_tol, solver_max_iter, stationarity_scale)

    tau = damping
    prev_inc = np.inf
    inc_p = inc_q = np.inf
    inner_ok = False
    converged = False
    iters = 0
    for k in range(1, max_picard + 1):
        iters = k
        gu = gradient(u)
        gv = gradient(v)
        u_sh = ScalarField(grid, u.values + eps)
        v_sh = ScalarField(grid, v.values + eps)
        rhs_f = eval_f(spec, u_sh, v, gu, gv, eps)
        rhs_g = eval_g(spec, u, v_sh, gu, gv, eps)
        prob_u = DirichletProblem(grid, c.p, rhs_f, tol=solver_tol, max_iter=solver_max_iter)
        prob_v = DirichletProblem(grid, c.q, rhs_g, tol=solver_tol, max_iter=solver_max_iter)
        stat_u = stationarity_scale * (1.0 + lp_norm(rhs_f, 2.0))
        stat_v = stationarity_scale * (1.0 + lp_norm(rhs_g, 2.0))
        u_t, rep_u = solve(prob_u, initial=u, stationarity_tol=stat_u)
        v_t, rep_v = solve(prob_v, initial=v, stationarity_tol=stat_v)
        inner_ok = rep_u.converged and rep_v.converged

        while True:
            u_new = ScalarField(grid, np.maximum((1.0 - tau) * u.values + tau * u_t.values, 0.0))
            v_new = ScalarField(grid, np.maximum((1.0 - tau) * v.values + tau * v_t.values, 0.0))
            inc_p = w1p_norm(u_new - u, c.p)
            inc_q = w1p_norm(v_new - v, c.q)
            if inc_p + inc_q <= prev_inc or tau <= _TAU_MIN:
                break
            tau = max(0.5 * tau, _TAU_MIN)
        u, v = u_new, v_new
        prev_inc = max(inc_p + inc_q, 1e-300)
        tau = min(2.0 * tau, damping)
        if inc_p < tol and inc_q < tol and inner_ok:
            converged = True
            break
    return SystemState(
        n=n,
        eps=eps,
        u=u,
        v=v,
        picard_iters=iters,
        increment_p=inc_p,
        increment_q=inc_q,
        converged=converged,
        hypotheses_ok=hyp_ok,
    )


def run_scheme(
    spec: ReactionSpec,
    n_list: Sequence[int],
    rho: float,
    **picard_kwargs,
) -> tuple[list[SystemState], SchemeReport]:
    """Run the levels of n_list sequentially (warm-started) and report the
    uniform-bound shadows: sup norms, infima over B_{2 rho}, gradient norms,
    and Cauchy increments between consecutive levels on B_{2 rho}."""
    levels = [int(n) for n in n_list]
    if not levels:
        raise ValueError("n_list must be nonempty")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("n_list must be strictly increasing")
    if not rho > 0.0:
        raise ValueError("rho must be positive")
    grid = spec.grid
    ball = ball_mask(grid, (0.0,) * grid.N, 2.0 * rho)
    if ball.count == 0:
        raise ValueError("B_{2 rho} contains no cell centers")
    c = spec.exponents

    states: list[SystemState] = []
    warm: SystemState | None = None
    for n in levels:
        state = picard_solve_level(spec, n, warm_start=warm, **picard_kwargs)
        states.append(state)
        warm = state

    sup_levels = [max(linf_norm(s.u), linf_norm(s.v)) for s in states]
    sigma_levels = [
        min(float(np.min(s.u.values[ball.mask])), float(np.min(s.v.values[ball.mask])))
        for s in states
    ]
    grad_p = [lp_norm(gradient(s.u), c.p) for s in states]
    grad_q = [lp_norm(gradient(s.v), c.q) for s in states]
    cauchy_p = [
        w1p_norm(b.u - a.u, c.p, region=ball) for a, b in zip(states, states[1:])
    ]
    cauchy_q = [
        w1p_norm(b.v - a.v, c.q, region=ball) for a, b in zip(states, states[1:])
    ]
    report = SchemeReport(
        n_list=tuple(levels),
        rho=rho,
        M_observed=max(sup_levels),
        sigma_rho=min(sigma_levels),
        sigma_rho_levels=tuple(sigma_levels),
        gradient_p_norms=tuple(grad_p),
        gradient_q_norms=tuple(grad_q),
        cauchy_p=tuple(cauchy_p),
        cauchy_q=tuple(cauchy_q),
        converged_n=tuple(s.converged for s in states),
        hypotheses_ok=states[0].hypotheses_ok,
    )
    return states, report


def make_weight(kind: str, amplitude: float, grid: Grid) -> ScalarField:
    """Weight field a(x); the gaussian A exp(-|x|^2) is strictly positive,
    integrable, and r-integrable for every finite r, with positive infimum
    on every ball."""
    if kind != "gaussian":
        raise ValueError(f"unknown weight kind {kind!r}")
    if not amplitude > 0.0:
        raise ValueError("amplitude must be positive")
    return ScalarField(grid, amplitude * np.exp(-grid.squared_distance((0.0,) * grid.N)))
