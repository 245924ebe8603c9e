"""Deterministic preconditioned primal-dual gradient solver.

The iteration alternates a primal gradient step with a proximal step on
the convex conjugate of the regularizer:

    x+ = x - alpha * (grad f(x) + A^T y)
    y+ = prox_{beta h*}(y + beta * A(2 x+ - x))

With ``preconditioner="exact_M"`` (offered only for identity and scaled
identity operators, where the metric prox is separable) the dual weight
beta = 1/(alpha ||A||^2) realizes the exact metric alpha*AA^T. For
general operators ``"scalar_beta"`` uses the same scalar weight as an
approximation of that metric.

Per-iteration diagnostics track a Lyapunov function, the Lagrangian
plus weighted squared distances between consecutive primal iterates,
which decreases monotonically in exact_M mode for small enough steps;
the solver can assert that descent on every iteration.
"""

import time
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PpdgConfig",
    "LyapunovConstants",
    "SolverState",
    "TraceRecord",
    "SolveReport",
    "SolverDivergence",
    "LyapunovViolation",
    "TRACE_FIELDS",
    "default_alpha",
    "lagrangian",
    "lyapunov_value",
    "dual_beta",
    "dual_prox_step",
    "init_state",
    "step",
    "subgradient_d",
    "subgradient_bound_gammas",
    "kkt_residuals",
    "make_record",
    "solve",
]

TRACE_FIELDS = [
    "iter",
    "elapsed_s",
    "objective",
    "lagrangian",
    "lyapunov",
    "dx_norm",
    "dy_norm",
    "kkt_x",
    "kkt_y",
]

_EXACT_M_KINDS = ("identity", "scaled-identity")


class SolverDivergence(RuntimeError):
    """Iterates became non-finite or exceeded the norm cap."""

    def __init__(self, iteration, detail="non-finite iterate"):
        super().__init__(f"diverged at iteration {iteration}: {detail}")
        self.iteration = iteration


class LyapunovViolation(RuntimeError):
    """Monotone descent of the Lyapunov function failed in exact_M mode."""

    def __init__(self, iteration, drop, required):
        super().__init__(
            f"Lyapunov descent violated at iteration {iteration}: "
            f"drop {drop:.3e} < required {required:.3e}"
        )
        self.iteration = iteration


@dataclass
class PpdgConfig:
    alpha: float
    delta: float = 0.2
    max_iters: int = 10000
    tol_step: float = 1e-8
    preconditioner: str = "scalar_beta"
    lyapunov_checks: bool = False
    norm_cap: float = 1e12
    descent_slack: float = 1e-9

    def validate(self, problem):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.preconditioner not in ("exact_M", "scalar_beta"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")
        if self.preconditioner == "exact_M" and problem.operator.kind not in _EXACT_M_KINDS:
            raise ValueError(
                "exact_M is only available for identity/scaled-identity operators; "
                "use scalar_beta for general ones"
            )
        if self.lyapunov_checks:
            L = problem.lipschitz_L
            if self.delta == 0.2 and not self.alpha < 1.0 / (3.0 * L):
                raise ValueError(
                    f"descent checks with delta=0.2 need alpha < 1/(3L) = {1/(3*L):.6g}"
                )
            consts = LyapunovConstants.from_parameters(self.alpha, self.delta, L)
            if min(consts.a, consts.b, consts.c) <= 0:
                raise ValueError(
                    "Lyapunov constants are not all positive for this (alpha, delta, L)"
                )


def default_alpha(lipschitz_L, margin=0.9):
    """Step size with a safety margin under the 1/(3L) descent bound."""
    return margin / (3.0 * lipschitz_L)


@dataclass(frozen=True)
class LyapunovConstants:
    a: float
    b: float
    c: float

    @classmethod
    def from_parameters(cls, alpha, delta, L):
        a = delta / alpha
        b = (
            1.0 / (2.0 * alpha)
            - L / 4.0
            - delta / alpha
            - alpha * delta * L**2 / 2.0
            - delta * L
            + alpha * L**2 / (4.0 * delta)
        )
        c = b - alpha * L**2 / (2.0 * delta)
        return cls(a=a, b=b, c=c)


@dataclass
class SolverState:
    """Window of iterates around step k, with a one-step lookahead.

    ``x_next`` is the gradient step taken from (x_cur, y_cur); it is
    computed eagerly because the Lyapunov window z^k = (x^k, y^k,
    x^{k+1}, x^{k-1}) and the diagnostics all need x^{k+1}. ``g_cur``
    is the subgradient of h* at y_cur certified by the dual prox,
    g^k = -(y^k - y^{k-1})/beta + A(2x^k - x^{k-1}).
    """

    k: int
    x_cur: np.ndarray
    y_cur: np.ndarray
    x_next: np.ndarray
    x_prev: np.ndarray = None
    y_prev: np.ndarray = None
    g_cur: np.ndarray = None

    def z_window(self):
        return (self.x_cur, self.y_cur, self.x_next, self.x_prev)


@dataclass
class TraceRecord:
    iter: int
    elapsed_s: float
    objective: float
    lagrangian: float
    lyapunov: float
    dx_norm: float
    dy_norm: float
    kkt_x: float
    kkt_y: float


@dataclass
class SolveReport:
    x: np.ndarray
    y: np.ndarray
    iters: int
    kkt_x: float
    kkt_y: float
    dx_norm: float
    dy_norm: float
    reason: str
    lyapunov_violations: int = 0


def lagrangian(problem, x, y):
    """f(x) + <y, Ax> - h*(y); -inf when h*(y) = +inf (l1 outside its box)."""
    ax = problem.operator.apply(x)
    conj = problem.regularizer.conj_value(y)
    if np.isinf(conj):
        return -np.inf
    return float(problem.f_value(x) + y @ ax - conj)


def lyapunov_value(problem, z, constants):
    """L(x, y) - a||x - u||^2 + b||x - v||^2 for z = (x, y, u, v)."""
    x, y, u, v = z
    du = x - u
    dv = x - v
    return (
        lagrangian(problem, x, y)
        - constants.a * float(du @ du)
        + constants.b * float(dv @ dv)
    )


def dual_beta(problem, config):
    """Scalar dual prox weight 1/(alpha ||A||^2), shared by both modes."""
    norm = problem.operator.op_norm()
    if norm == 0.0:
        raise ValueError("dual step undefined for a zero operator")
    return 1.0 / (config.alpha * norm**2)


def dual_prox_step(regularizer, y, a_extrap, beta):
    """One dual update; returns (y_next, g_next) with g_next in dh*(y_next)."""
    y_next = regularizer.prox_conj(y + beta * a_extrap, beta)
    g_next = (y - y_next) / beta + a_extrap
    return y_next, g_next


def _primal_step(problem, config, x, y):
    return x - config.alpha * (problem.grad_f(x) + problem.operator.apply_adjoint(y))


def init_state(problem, x0, y0, config):
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    return SolverState(
        k=0, x_cur=x0, y_cur=y0, x_next=_primal_step(problem, config, x0, y0)
    )


def step(problem, state, config):
    """Advance (x^k, y^k) to (x^{k+1}, y^{k+1}).

    Raises SolverDivergence when the new iterates are not finite.
    """
    beta = dual_beta(problem, config)
    a_extrap = problem.operator.apply(2.0 * state.x_next - state.x_cur)
    y_next, g_next = dual_prox_step(problem.regularizer, state.y_cur, a_extrap, beta)
    x_after = _primal_step(problem, config, state.x_next, y_next)
    if not (np.all(np.isfinite(x_after)) and np.all(np.isfinite(y_next))):
        raise SolverDivergence(state.k + 1)
    return SolverState(
        k=state.k + 1,
        x_cur=state.x_next,
        y_cur=y_next,
        x_next=x_after,
        x_prev=state.x_cur,
        y_prev=state.y_cur,
        g_cur=g_next,
    )


def kkt_residuals(problem, state):
    """Residuals of the two optimality relations at (x^k, y^k).

    r_x = ||grad f(x^k) + A^T y^k||, r_y = ||A x^k - g^k|| where g^k is
    the dual-step subgradient; r_y bounds the distance of A x^k to the
    subdifferential of h* at y^k.
    """
    if state.k < 1 or state.g_cur is None:
        raise ValueError("kkt_residuals needs k >= 1 (a completed dual step)")
    op = problem.operator
    r_x = np.linalg.norm(problem.grad_f(state.x_cur) + op.apply_adjoint(state.y_cur))
    r_y = np.linalg.norm(op.apply(state.x_cur) - state.g_cur)
    return float(r_x), float(r_y)


def subgradient_d(problem, state, constants):
    """The four-block subgradient d^k of the Lyapunov function at z^k.

    Blocks: (grad_x, A x^k - g^k, grad_u, grad_v). Returns
    ((d_x, d_g, d_u, d_v), euclidean norm of the concatenation).
    Requires k >= 1.
    """
    if state.k < 1 or state.g_cur is None:
        raise ValueError("subgradient_d needs k >= 1 (a completed dual step)")
    op = problem.operator
    a, b = constants.a, constants.b
    du = state.x_cur - state.x_next
    dv = state.x_cur - state.x_prev
    d_x = (
        problem.grad_f(state.x_cur)
        + op.apply_adjoint(state.y_cur)
        - 2.0 * a * du
        + 2.0 * b * dv
    )
    d_g = op.apply(state.x_cur) - state.g_cur
    d_u = 2.0 * a * du
    d_v = -2.0 * b * dv
    norm = float(
        np.sqrt(d_x @ d_x + d_g @ d_g + d_u @ d_u + d_v @ d_v)
    )
    return (d_x, d_g, d_u, d_v), norm


def subgradient_bound_gammas(constants, alpha, op_norm, L):
    """Coefficients (gamma1, gamma2) bounding ||d^k|| by the two step norms."""
    gamma1 = 2.0 * L + 4.0 * constants.b + 2.0 / alpha + (2.0 + alpha * L) * op_norm
    gamma2 = 4.0 * constants.a + 1.0 / alpha + op_norm
    return gamma1, gamma2


def make_record(problem, state, constants, elapsed_s=0.0):
    """Diagnostics row for the current state; needs k >= 1."""
    kkt_x, kkt_y = kkt_residuals(problem, state)
    lag = lagrangian(problem, state.x_cur, state.y_cur)
    du = state.x_cur - state.x_next
    dv = state.x_cur - state.x_prev
    return TraceRecord(
        iter=state.k,
        elapsed_s=elapsed_s,
        objective=problem.objective(state.x_cur),
        lagrangian=lag,
        lyapunov=lag - constants.a * float(du @ du) + constants.b * float(dv @ dv),
        dx_norm=float(np.linalg.norm(dv)),
        dy_norm=float(np.linalg.norm(state.y_cur - state.y_prev)),
        kkt_x=kkt_x,
        kkt_y=kkt_y,
    )


def solve(problem, config, trace_sink=None, x0=None, y0=None):
    """Run the solver until the step tolerance or the iteration cap.

    Args:
        problem: a CompositeProblem (smooth part, operator, regularizer).
        config: PpdgConfig; validated against the problem up front.
        trace_sink: optional callable receiving one TraceRecord per
            completed iteration (from k = 1 on, since diagnostics need
            a full window).
        x0, y0: starting points, zero vectors by default.

    Returns a SolveReport. With ``lyapunov_checks`` on, a descent
    violation raises LyapunovViolation in exact_M mode and is counted
    on the report in scalar_beta mode. Iterates beyond ``norm_cap``
    raise SolverDivergence.

    The caller is responsible for the problem being dual-bounded
    (inf_x of the Lagrangian finite for every y); that property cannot
    be checked algorithmically and unbounded problems surface as
    divergence.
    """
    config.validate(problem)
    op = problem.operator
    if x0 is None:
        x0 = np.zeros(op.in_dim)
    if y0 is None:
        y0 = np.zeros(op.out_dim)
    constants = LyapunovConstants.from_parameters(
        config.alpha, config.delta, problem.lipschitz_L
    )
    state = init_state(problem, x0, y0, config)
    started = time.perf_counter()
    prev_record = None
    violations = 0
    reason = "iteration-limit"
    while state.k < config.max_iters:
        state = step(problem, state, config)
        if max(np.linalg.norm(state.x_cur), np.linalg.norm(state.y_cur)) > config.norm_cap:
            raise SolverDivergence(state.k, detail="norm cap exceeded")
        record = make_record(
            problem, state, constants, elapsed_s=time.perf_counter() - started
        )
        if trace_sink is not None:
            trace_sink(record)
        if config.lyapunov_checks and prev_record is not None:
            required = constants.c * (record.dx_norm**2 + prev_record.dx_norm**2)
            slack = config.descent_slack * (1.0 + abs(prev_record.lyapunov))
            drop = prev_record.lyapunov - record.lyapunov
            if drop < required - slack:
                if config.preconditioner == "exact_M":
                    raise LyapunovViolation(state.k, drop, required)
                violations += 1
        prev_record = record
        if max(record.dx_norm, record.dy_norm) <= config.tol_step:
            reason = "converged"
            break
    if violations:
        warnings.warn(
            f"Lyapunov descent violated on {violations} iterations under the "
            "scalar preconditioner (advisory; exact descent holds only for the "
            "exact metric)",
            RuntimeWarning,
            stacklevel=2,
        )
    if state.k >= 1:
        kkt_x, kkt_y = kkt_residuals(problem, state)
        dx = float(np.linalg.norm(state.x_cur - state.x_prev))
        dy = float(np.linalg.norm(state.y_cur - state.y_prev))
    else:
        kkt_x = float(
            np.linalg.norm(problem.grad_f(state.x_cur) + op.apply_adjoint(state.y_cur))
        )
        kkt_y = float("nan")
        dx = dy = float("nan")
    return SolveReport(
        x=state.x_cur,
        y=state.y_cur,
        iters=state.k,
        kkt_x=kkt_x,
        kkt_y=kkt_y,
        dx_norm=dx,
        dy_norm=dy,
        reason=reason,
        lyapunov_violations=violations,
    )
