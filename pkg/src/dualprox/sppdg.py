"""Stochastic preconditioned primal-dual loop over finite-sum problems.

Each iteration replaces the exact mean gradient with a variance-reduced
estimate; the dual proximal step is identical to the deterministic
solver. Runs are replicated across seeds, and seed-averaged traces
support an advisory check of the expected-descent property of the
stochastic Lyapunov function

    Ls(z) = Lag_s(x, y) - a||x - u||^2 + b||x - v||^2 + c||v - w||^2

with the window z^k = (x^k, y^k, x^{k+1}, x^{k-1}, x^{k-2}). Only the
deterministic part of that Lyapunov function is computable (the
geometrically decaying correction terms of the variance-reduction
analysis have no closed form), so descent reporting is advisory.
"""

import time
import warnings
from dataclasses import dataclass

import numpy as np

from .ppdg import (
    SolveReport,
    SolverDivergence,
    TraceRecord,
    default_alpha,
    dual_prox_step,
    lagrangian,
)
from .vrgrad import make_estimator

__all__ = [
    "SppdgConfig",
    "SppdgLyapunovConstants",
    "AggregateRecord",
    "SeedRunResult",
    "StochasticSolveResult",
    "AGGREGATE_FIELDS",
    "lagrangian_s",
    "stochastic_lyapunov_value",
    "solve_stochastic",
    "expectation_descent_report",
]

AGGREGATE_FIELDS = [
    "iter",
    "comp_evals",
    "mean_objective",
    "mean_lagrangian_s",
    "mean_lyapunov_s",
    "mean_dx",
    "mean_dy",
    "seeds_ok",
]

# the descent analysis fixes these two auxiliary constants
DELTA1 = 1.0
DELTA2 = 1.0 / 6.0


@dataclass
class SppdgConfig:
    alpha: float = None
    kappa_hat: float = 0.0
    max_epochs: int = 50
    tol_step: float = 0.0
    seeds: tuple = (0,)
    preconditioner: str = "scalar_beta"
    norm_cap: float = 1e12

    def resolve_alpha(self, lipschitz_L):
        """Step size: explicit, or the safe default for the given L.

        With a positive kappa proxy the bound alpha < 1/(2(3+7L+6*kappa))
        keeps the stochastic descent constant positive and is enforced;
        with kappa_hat = 0 the deterministic rule 0.9/(3L) applies.
        """
        if self.kappa_hat < 0:
            raise ValueError("kappa_hat must be nonnegative")
        if self.kappa_hat > 0:
            bound = 1.0 / (2.0 * (3.0 + 7.0 * lipschitz_L + 6.0 * self.kappa_hat))
            if self.alpha is None:
                return 0.9 * bound
            if not self.alpha < bound:
                raise ValueError(
                    f"alpha must be below 1/(2(3+7L+6*kappa)) = {bound:.6g} "
                    "when kappa_hat > 0"
                )
            return self.alpha
        if self.alpha is None:
            return default_alpha(lipschitz_L)
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        return self.alpha

    def validate(self, problem):
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be nonnegative")
        if len(self.seeds) == 0:
            raise ValueError("need at least one seed")
        if self.preconditioner not in ("exact_M", "scalar_beta"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")
        if self.preconditioner == "exact_M" and problem.operator.kind not in (
            "identity",
            "scaled-identity",
        ):
            raise ValueError(
                "exact_M is only available for identity/scaled-identity operators"
            )
        self.resolve_alpha(problem.lipschitz_L)


@dataclass(frozen=True)
class SppdgLyapunovConstants:
    a: float
    b: float
    c: float
    e0: float

    @classmethod
    def from_parameters(cls, alpha, L, kappa, delta1=DELTA1, delta2=DELTA2):
        e0 = (
            1.0 / (3.0 * alpha)
            - (delta1 + L) / 6.0
            - kappa / (3.0 * delta1)
            - 4.0 * delta2 * L / 3.0
            - 4.0 * delta2 / (3.0 * alpha)
            - 2.0 * delta2 * alpha * L**2 / 3.0
            - alpha * L**2 / (2.0 * delta2)
            - 2.0 * alpha * kappa / delta2
            - 8.0 * delta2 * alpha * kappa / 3.0
        )
        a = e0 + 2.0 * delta2 / alpha + 2.0 * delta2 * alpha * kappa
        b = (
            e0
            + 9.0 * alpha * kappa / (2.0 * delta2)
            + 2.0 * delta2 * alpha * kappa
            + kappa / (2.0 * delta1)
            + 3.0 * alpha * L**2 / (2.0 * delta2)
        )
        c = 3.0 * alpha * kappa / (2.0 * delta2)
        return cls(a=a, b=b, c=c, e0=e0)


@dataclass
class SeedRunResult:
    seed: int
    report: SolveReport
    records: list
    comp_evals: list
    failed: bool = False
    error: str = ""


@dataclass
class AggregateRecord:
    iter: int
    comp_evals: int
    mean_objective: float
    mean_lagrangian_s: float
    mean_lyapunov_s: float
    mean_dx: float
    mean_dy: float
    seeds_ok: int


@dataclass
class StochasticSolveResult:
    per_seed: list
    aggregate: list


def lagrangian_s(problem, x, y):
    """Finite-sum Lagrangian (1/N) sum f_i(x) + <y, Ax> - h*(y)."""
    return lagrangian(problem.as_composite(), x, y)


def stochastic_lyapunov_value(problem, z, constants):
    """Deterministic part of Ls at z = (x, y, u, v, w)."""
    x, y, u, v, w = z
    du = x - u
    dv = x - v
    dw = v - w
    return (
        lagrangian_s(problem, x, y)
        - constants.a * float(du @ du)
        + constants.b * float(dv @ dv)
        + constants.c * float(dw @ dw)
    )


def _run_one_seed(problem, estimator_kind, config, alpha, seed, batch_size, period,
                  x0, y0, trace_sink):
    op = problem.operator
    reg = problem.regularizer
    comp = problem.as_composite()
    n = problem.n_components
    budget = config.max_epochs * n
    beta = 1.0 / (alpha * op.op_norm() ** 2)
    constants = SppdgLyapunovConstants.from_parameters(
        alpha, problem.lipschitz_L, config.kappa_hat
    )
    cg, fg = problem.component_grad, problem.full_grad

    estimator = make_estimator(estimator_kind, n, batch_size, seed, period=period)
    estimator.reset(x0, cg, fg)
    x_cur = np.asarray(x0, dtype=float).copy()
    y_cur = np.asarray(y0, dtype=float).copy()
    g_tilde = estimator.estimate(0, x_cur, None, cg, fg)
    x_next = x_cur - alpha * (g_tilde + op.apply_adjoint(y_cur))
    x_prev = None
    x_prev2 = None
    y_prev = None
    g_cur = None
    k = 0
    records = []
    evals_at = []
    started = time.perf_counter()
    reason = "epoch-budget"
    while estimator.evals < budget:
        # advance the window from k to k+1 (with one-step lookahead)
        a_extrap = op.apply(2.0 * x_next - x_cur)
        y_next, g_next = dual_prox_step(reg, y_cur, a_extrap, beta)
        g_tilde = estimator.estimate(k + 1, x_next, x_cur, cg, fg)
        x_after = x_next - alpha * (g_tilde + op.apply_adjoint(y_next))
        if not (np.all(np.isfinite(x_after)) and np.all(np.isfinite(y_next))):
            raise SolverDivergence(k + 1)
        x_prev2, x_prev, x_cur = x_prev, x_cur, x_next
        y_prev, y_cur = y_cur, y_next
        g_cur = g_next
        x_next = x_after
        k += 1
        if max(np.linalg.norm(x_cur), np.linalg.norm(y_cur)) > config.norm_cap:
            raise SolverDivergence(k, detail="norm cap exceeded")
        back2 = x_prev if x_prev2 is None else x_prev2
        lag = lagrangian(comp, x_cur, y_cur)
        du = x_cur - x_next
        dv = x_cur - x_prev
        dw = x_prev - back2
        record = TraceRecord(
            iter=k,
            elapsed_s=time.perf_counter() - started,
            objective=comp.objective(x_cur),
            lagrangian=lag,
            lyapunov=(
                lag
                - constants.a * float(du @ du)
                + constants.b * float(dv @ dv)
                + constants.c * float(dw @ dw)
            ),
            dx_norm=float(np.linalg.norm(dv)),
            dy_norm=float(np.linalg.norm(y_cur - y_prev)),
            kkt_x=float(np.linalg.norm(fg(x_cur) + op.apply_adjoint(y_cur))),
            kkt_y=float(np.linalg.norm(op.apply(x_cur) - g_cur)),
        )
        records.append(record)
        evals_at.append(estimator.evals)
        if trace_sink is not None:
            trace_sink(seed, record)
        if max(record.dx_norm, record.dy_norm) <= config.tol_step:
            reason = "converged"
            break
    if records:
        last = records[-1]
        report = SolveReport(
            x=x_cur, y=y_cur, iters=k,
            kkt_x=last.kkt_x, kkt_y=last.kkt_y,
            dx_norm=last.dx_norm, dy_norm=last.dy_norm, reason=reason,
        )
    else:
        report = SolveReport(
            x=x_cur, y=y_cur, iters=0,
            kkt_x=float(np.linalg.norm(fg(x_cur) + op.apply_adjoint(y_cur))),
            kkt_y=float("nan"),
            dx_norm=float("nan"), dy_norm=float("nan"), reason=reason,
        )
    return SeedRunResult(seed=seed, report=report, records=records, comp_evals=evals_at)


def solve_stochastic(problem, estimator_kind, config, trace_sink=None,
                     batch_size=1, period=None, x0=None, y0=None):
    """Replicated stochastic runs plus a seed-averaged aggregate.

    One run per entry of ``config.seeds``; the iteration budget is
    ``max_epochs`` epochs where an epoch is N component-gradient
    evaluations (estimator initialization and snapshot refreshes count,
    per-record diagnostics do not). A diverged seed is reported failed
    and excluded from the aggregate, which covers the iteration range
    common to the surviving seeds.

    Returns a StochasticSolveResult with ``per_seed`` SeedRunResults
    and ``aggregate`` AggregateRecords.
    """
    config.validate(problem)
    alpha = config.resolve_alpha(problem.lipschitz_L)
    op = problem.operator
    if x0 is None:
        x0 = np.zeros(op.in_dim)
    if y0 is None:
        y0 = np.zeros(op.out_dim)
    per_seed = []
    for seed in config.seeds:
        try:
            result = _run_one_seed(
                problem, estimator_kind, config, alpha, seed,
                batch_size, period, x0, y0, trace_sink,
            )
        except SolverDivergence as exc:
            per_seed.append(
                SeedRunResult(
                    seed=seed,
                    report=None,
                    records=[],
                    comp_evals=[],
                    failed=True,
                    error=str(exc),
                )
            )
            warnings.warn(f"seed {seed} diverged: {exc}", RuntimeWarning, stacklevel=2)
            continue
        per_seed.append(result)
    survivors = [r for r in per_seed if not r.failed]
    aggregate = []
    if survivors:
        depth = min(len(r.records) for r in survivors)
        for j in range(depth):
            rows = [r.records[j] for r in survivors]
            aggregate.append(
                AggregateRecord(
                    iter=rows[0].iter,
                    comp_evals=survivors[0].comp_evals[j],
                    mean_objective=float(np.mean([r.objective for r in rows])),
                    mean_lagrangian_s=float(np.mean([r.lagrangian for r in rows])),
                    mean_lyapunov_s=float(np.mean([r.lyapunov for r in rows])),
                    mean_dx=float(np.mean([r.dx_norm for r in rows])),
                    mean_dy=float(np.mean([r.dy_norm for r in rows])),
                    seeds_ok=len(survivors),
                )
            )
    return StochasticSolveResult(per_seed=per_seed, aggregate=aggregate)


def expectation_descent_report(per_seed_records, constants, slack=1e-9):
    """Count iterations where the seed-averaged Lyapunov value rises.

    Advisory realization of the expected-descent property: with the
    uncomputable correction terms dropped, the average over seeds of
    Ls(z^k) should fall by at least e0 times the mean of the three
    trailing squared primal steps. Returns (violations, checked).
    Needs at least two seeds.
    """
    if len(per_seed_records) < 2:
        raise ValueError("expectation descent report needs at least 2 seeds")
    depth = min(len(recs) for recs in per_seed_records)
    if depth < 3:
        return 0, 0
    mean_lyap = [
        float(np.mean([recs[j].lyapunov for recs in per_seed_records]))
        for j in range(depth)
    ]
    mean_sq = [
        float(np.mean([recs[j].dx_norm ** 2 for recs in per_seed_records]))
        for j in range(depth)
    ]
    violations = 0
    checked = 0
    for j in range(depth - 2):
        allowed = -constants.e0 * (mean_sq[j] + mean_sq[j + 1] + mean_sq[j + 2])
        tol = slack * (1.0 + abs(mean_lyap[j]))
        checked += 1
        if mean_lyap[j + 1] - mean_lyap[j] > allowed + tol:
            violations += 1
    return violations, checked
