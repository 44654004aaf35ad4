"""Optimization backend: fit a generalized SEM to the context under the continuous
acyclicity constraint, then answer each query by optimizing the machine entry."""
import logging
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from config.settings import OptConfig
from modules.exceptions import NumericError
from modules.models import Label, ProblemView
from modules.sem import (
    AlState,
    DataMatrix,
    GeneralizedSEM,
    build_data_matrix,
    init_sem,
    loss_and_grad,
    row_objective_grad,
    row_objectives,
    sem_acyclicity,
)
from modules.solver_base import BaseSolver, Scores

logger = logging.getLogger(__name__)


def _objective(template: GeneralizedSEM, X: np.ndarray, state: AlState, config: OptConfig):
    """Augmented Lagrangian as a function of the flat parameter vector.

    Both penalties are divided by the m·n observed entries, the same normalization as the loss.
    """
    entries = X.size
    lambda1, lambda2 = config.lambda1 / entries, config.lambda2 / entries

    def fun(theta: np.ndarray) -> Tuple[float, np.ndarray]:
        sem = template.unpack(theta)
        loss, grads = loss_and_grad(sem, X)
        h, dh = sem_acyclicity(sem)
        coeff = state.alpha + state.rho * h
        value = (
            loss
            + lambda1 * (sem.first_pos.sum() + sem.first_neg.sum())
            + 0.5 * lambda2 * float((sem.second**2).sum())
            + state.alpha * h
            + 0.5 * state.rho * h * h
        )
        grad = np.concatenate(
            [
                (grads["first_pos"] + lambda1 + coeff * dh).ravel(),
                (grads["first_neg"] + lambda1 - coeff * dh).ravel(),
                grads["bias1"].ravel(),
                (grads["second"] + lambda2 * sem.second).ravel(),
                grads["bias2"],
            ]
        )
        if not np.isfinite(value) or not np.isfinite(grad).all():
            raise NumericError("augmented Lagrangian became non-finite")
        return float(value), grad

    return fun


def fit_sem(
    data: DataMatrix,
    config: Optional[OptConfig] = None,
    rng: Optional[np.random.Generator] = None,
    history: Optional[List[Dict[str, float]]] = None,
) -> GeneralizedSEM:
    """Augmented-Lagrangian fit; the returned SEM carries its final AlState and loss.

    Outer iterations raise rho until h shrinks by h_shrink, then update alpha.
    When the loop stops before h <= h_tol the SEM is flagged h_unconverged.
    """
    config = config or OptConfig()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    X = data.X
    sem = init_sem(
        data.n,
        config.hidden,
        rng,
        config.init_scale,
        data.object_ids,
        second_scale=config.second_init_scale,
        machine_sink=config.machine_sink,
    )
    bounds = sem.bounds(config.weight_bound, config.machine_sink)
    theta = sem.pack()
    state = AlState(rho=config.rho_init)

    for outer in range(config.max_outer):
        theta_new, h_new = theta, state.h
        while state.rho < config.rho_max:
            sol = minimize(
                _objective(sem, X, state, config),
                theta,
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": config.inner_max_iter},
            )
            theta_new = sol.x
            h_new, _ = sem_acyclicity(sem.unpack(theta_new))
            if h_new > config.h_shrink * state.h:
                state.rho *= config.rho_escalation
            else:
                break
        theta, state.h = theta_new, h_new
        state.alpha += state.rho * state.h
        state.outer_iterations = outer + 1
        if history is not None:
            loss, _ = loss_and_grad(sem.unpack(theta), X)
            history.append({"outer": outer + 1, "rho": state.rho, "alpha": state.alpha, "h": state.h, "loss": loss})
        if state.h <= config.h_tol or state.rho >= config.rho_max:
            break

    fitted = sem.unpack(theta)
    fitted.state = state
    fitted.loss, _ = loss_and_grad(fitted, X)
    fitted.h_unconverged = not state.h <= config.h_tol
    if fitted.h_unconverged:
        logger.warning(f"SEM fit stopped with h={state.h:.3e} after {state.outer_iterations} outer iterations")
    return fitted


def _query_row(sem: GeneralizedSEM, config: Iterable[int]) -> np.ndarray:
    column = {o: k for k, o in enumerate(sem.object_ids)}
    x = np.zeros(sem.n)
    for o in config:
        assert o in column, f"query object {o} is not part of the fitted context"
        x[column[o]] = 1.0
    return x


def grid_search_query(sem: GeneralizedSEM, config: Iterable[int], grid_points: int = 101) -> Tuple[float, float]:
    """Best machine value on an even grid over [0, 1] and its objective"""
    x = _query_row(sem, config)
    grid = np.linspace(0.0, 1.0, grid_points)
    X = np.repeat(x[None], grid_points, axis=0)
    X[:, sem.machine] = grid
    values = row_objectives(sem, X)
    best = int(np.argmin(values))
    return float(grid[best]), float(values[best])


def infer_query(sem: GeneralizedSEM, config: Iterable[int], opt_config: Optional[OptConfig] = None) -> float:
    """Machine probability minimizing the reconstruction of the completed query row.

    L-BFGS-B over the box [0, 1], started at 0, 0.5, 1 and at the best grid point; the
    grid point itself is returned if every start fails.
    """
    opt_config = opt_config or OptConfig()
    config = list(config)
    x = _query_row(sem, config)
    machine = sem.machine

    def fun(z: np.ndarray) -> Tuple[float, np.ndarray]:
        row = x.copy()
        row[machine] = z[0]
        value, grad = row_objective_grad(sem, row)
        return value, grad[machine : machine + 1]

    grid_p, grid_value = grid_search_query(sem, config, opt_config.grid_points)
    best_p, best_value = None, np.inf
    for start in (0.0, 0.5, 1.0, grid_p):
        sol = minimize(fun, np.array([start]), jac=True, method="L-BFGS-B", bounds=[(0.0, 1.0)], tol=opt_config.query_tol)
        if sol.success and sol.fun < best_value:
            best_p, best_value = float(sol.x[0]), float(sol.fun)
    if best_p is None:
        logger.warning(f"query {config}: optimizer failed from every start, using grid search")
        return grid_p
    if grid_value < best_value:
        return grid_p
    return float(np.clip(best_p, 0.0, 1.0))


def label_from_prob(p: Optional[float], tau_lo: float = 0.35, tau_hi: float = 0.65) -> Label:
    if p is None:
        return Label.UNDETERMINED
    if p < tau_lo:
        return Label.INACTIVATED
    if p > tau_hi:
        return Label.ACTIVATED
    return Label.UNDETERMINED


def diagnostics_record(view: ProblemView, sem: GeneralizedSEM, scores: Scores, w_prune: float) -> Dict[str, Any]:
    W = sem.weighted_adjacency()
    machine = sem.machine
    return {
        "problem_id": view.problem_id,
        "objects": list(sem.object_ids),
        "h": sem.state.h,
        "loss": sem.loss,
        "h_unconverged": sem.h_unconverged,
        "outer_iterations": sem.state.outer_iterations,
        "rho": sem.state.rho,
        "W": [[round(float(w), 6) for w in row] for row in W],
        "machine_parents": [o for k, o in enumerate(sem.object_ids) if W[k, machine] > w_prune],
        "scores": scores,
    }


class OptSolver(BaseSolver):
    name = "opt"

    def __init__(self, config: Optional[OptConfig] = None):
        self.config = config or OptConfig()

    def fit(self, view: ProblemView) -> GeneralizedSEM:
        data = build_data_matrix(view.context)
        # per-problem stream, independent of evaluation order
        rng = np.random.default_rng([self.config.seed, view.seed])
        return fit_sem(data, self.config, rng)

    def solve_with_diagnostics(self, view: ProblemView) -> Tuple[Scores, Dict[str, Any]]:
        sem = self.fit(view)
        scores: Scores = [infer_query(sem, q.object_ids, self.config) for q in view.queries]
        logger.debug(f"{view.problem_id}: h={sem.state.h:.2e} loss={sem.loss:.4f} scores={scores}")
        return scores, diagnostics_record(view, sem, scores, self.config.w_prune)

    def score_problem(self, view: ProblemView) -> Scores:
        return self.solve_with_diagnostics(view)[0]

    def decide(self, scores: Scores, params: Optional[Dict[str, float]] = None) -> List[Label]:
        params = params or {}
        tau_lo = params.get("tau_lo", self.config.tau_lo)
        tau_hi = params.get("tau_hi", self.config.tau_hi)
        return [label_from_prob(s, tau_lo, tau_hi) for s in scores]

    def param_grid(self) -> List[Dict[str, float]]:
        grid = np.round(np.arange(0.05, 1.0, 0.05), 2)
        return [{"tau_lo": float(lo), "tau_hi": float(hi)} for lo in grid for hi in grid if lo < hi]

    def with_params(self, params: Dict[str, float]) -> "OptSolver":
        return OptSolver(OptConfig.model_validate({**self.config.model_dump(), **params}))
