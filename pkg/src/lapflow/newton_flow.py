"""Minimum-cost network flow by dual descent.

The dual function q(lambda) = lambda'(A x(lambda) - b) - sum_e Phi_e(x(lambda))
is convex and minimized; its gradient is the flow-conservation violation
g = A x(lambda) - b and its Hessian is the weighted Laplacian with edge
weights 1/Phi''. Newton directions are obtained by grounding a reference
node and solving the SDDM subsystem with the distributed solvers (or the
direct oracle), then re-inserting zero and shifting to mean zero.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .graph_core import (
    DirectedFlowGraph,
    StandardSplitting,
    WeightedGraph,
    diameter_endpoints,
    ground,
    load_edge_list,
    orient,
)
from .reference_solver import direct_solve, richardson_iterations
from .spectral import chain_length, estimate_condition
from .distributed_solver import FullCommEngine, RHopEngine

__all__ = [
    "EdgeCost",
    "exp_cost",
    "quadratic_cost",
    "FlowProblem",
    "make_flow_problem",
    "load_flow_problem",
    "save_flow_problem",
    "DualState",
    "dual_state",
    "primal_recovery",
    "dual_gradient",
    "dual_hessian",
    "dual_value",
    "ConvergenceConstants",
    "convergence_constants",
    "alpha_star",
    "strict_decrement_bound",
    "newton_direction",
    "OptimizeConfig",
    "Trace",
    "DivergenceError",
    "optimize",
    "PhaseReport",
    "classify_phase",
]


class EdgeCost:
    """Evaluators and curvature constants of one strictly convex edge cost.

    Parameters
    ----------
    name : str
    value, deriv, second, inv_deriv : callables
        Phi, Phi', Phi'' and the inverse of Phi', all vectorized.
    gamma, Gamma : float
        Curvature bounds gamma <= Phi'' <= Gamma on the working domain.
    delta : float
        Lipschitz constant of 1/Phi''.
    inv_domain : (float, float), optional
        Open interval on which inv_deriv is defined; None means all reals.
    """

    def __init__(self, name, value, deriv, second, inv_deriv,
                 gamma, Gamma, delta, inv_domain=None, param=None):
        self.name = name
        self.value = value
        self.deriv = deriv
        self.second = second
        self.inv_deriv = inv_deriv
        self.gamma = float(gamma)
        self.Gamma = float(Gamma)
        self.delta = float(delta)
        self.inv_domain = inv_domain
        self.param = param


def exp_cost(x_box=5.0):
    """Cost e^x + e^{-x}; Gamma is evaluated over the flow box [-x_box, x_box]."""
    return EdgeCost(
        "exp",
        value=lambda x: np.exp(x) + np.exp(-x),
        deriv=lambda x: np.exp(x) - np.exp(-x),
        second=lambda x: np.exp(x) + np.exp(-x),
        inv_deriv=lambda y: np.arcsinh(np.asarray(y, dtype=float) / 2.0),
        gamma=2.0,
        Gamma=2.0 * math.cosh(x_box),
        delta=0.25,  # max |d/dx (1/(2 cosh x))| attained at sinh x = 1
        param=float(x_box),
    )


def quadratic_cost():
    """Cost x^2/2; the dual is an exactly quadratic function."""
    return EdgeCost(
        "quadratic",
        value=lambda x: 0.5 * np.square(x),
        deriv=lambda x: np.asarray(x, dtype=float),
        second=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        inv_deriv=lambda y: np.asarray(y, dtype=float),
        gamma=1.0,
        Gamma=1.0,
        delta=0.0,
    )


_COST_FACTORIES = {"exp": exp_cost, "quadratic": quadratic_cost}


def make_cost(name, param=None):
    """Cost factory by name: 'exp' (optional box) or 'quadratic'."""
    if name not in _COST_FACTORIES:
        raise ValueError("unknown cost %r" % name)
    if name == "exp" and param is not None:
        return exp_cost(param)
    return _COST_FACTORIES[name]()


class FlowProblem:
    """Minimum-cost flow instance min sum_e Phi_e(x_e) s.t. A x = b.

    Parameters
    ----------
    graph : DirectedFlowGraph
    b : array_like
        External sources, must sum to zero.
    costs : EdgeCost or list of EdgeCost
        One cost per arc (a single cost is shared across all arcs).
    """

    def __init__(self, graph, b, costs):
        b = np.asarray(b, dtype=float).ravel()
        if b.shape[0] != graph.n:
            raise ValueError("b has wrong length")
        if abs(b.sum()) > 1e-10 * max(1.0, np.abs(b).max()):
            raise ValueError("sources must sum to zero")
        if not graph.graph.is_connected():
            raise ValueError("flow problem needs a connected graph")
        if isinstance(costs, EdgeCost):
            costs = [costs] * graph.E
        if len(costs) != graph.E:
            raise ValueError("need one cost per arc")
        self.graph = graph
        self.b = b
        self.costs = list(costs)
        self._uniform = costs[0] if all(c is costs[0] for c in costs) else None
        self._tails = np.array([t for (t, _) in graph.arcs], dtype=int)
        self._heads = np.array([h for (_, h) in graph.arcs], dtype=int)
        self._lap = None

    @property
    def n(self):
        return self.graph.n

    @property
    def E(self):
        return self.graph.E

    @property
    def incidence(self):
        return self.graph.incidence

    def _per_edge(self, attr, x):
        if self._uniform is not None:
            return np.asarray(getattr(self._uniform, attr)(x), dtype=float)
        return np.array([float(getattr(c, attr)(x[e])) for e, c in enumerate(self.costs)])

    def cost_value(self, x):
        """Primal objective sum_e Phi_e(x_e)."""
        return float(np.sum(self._per_edge("value", x)))

    def phi_second(self, x):
        return self._per_edge("second", x)

    def unweighted_laplacian(self):
        """Dense L = A A' of the incidence matrix (cached)."""
        if self._lap is None:
            inc = self.incidence.toarray()
            self._lap = inc @ inc.T
        return self._lap

    def lnorm(self, v):
        """Laplacian seminorm sqrt(v' L v) with L = A A'."""
        L = self.unweighted_laplacian()
        return float(math.sqrt(max(0.0, float(v @ (L @ v)))))


def make_flow_problem(g, cost="exp", magnitude=1.0, x_box=5.0, source=None, sink=None):
    """Flow instance on a graph with source/sink a diameter apart.

    Parameters
    ----------
    g : WeightedGraph or DirectedFlowGraph
    cost : str or EdgeCost
    magnitude : float
        b[source] = +magnitude, b[sink] = -magnitude.
    x_box : float
        Flow box for the exp cost's Gamma.
    source, sink : int, optional
        Default to the lexicographically smallest diameter pair.
    """
    fg = g if isinstance(g, DirectedFlowGraph) else orient(g)
    if source is None or sink is None:
        u, v = diameter_endpoints(fg.graph)
        source = u if source is None else source
        sink = v if sink is None else sink
    b = np.zeros(fg.n)
    b[source] += magnitude
    b[sink] -= magnitude
    if isinstance(cost, str):
        cost = make_cost(cost, x_box if cost == "exp" else None)
    return FlowProblem(fg, b, cost)


def save_flow_problem(problem, path):
    """Write edge list, b vector and cost name in plain text."""
    g = problem.graph.graph
    with open(path, "w") as fh:
        fh.write("%d %d\n" % (g.n, g.m))
        for (i, j, w) in g.edges:
            fh.write("%d %d %r\n" % (i, j, w))
        fh.write("b " + " ".join(repr(float(v)) for v in problem.b) + "\n")
        cost = problem.costs[0]
        if cost.param is not None:
            fh.write("cost %s %r\n" % (cost.name, cost.param))
        else:
            fh.write("cost %s\n" % cost.name)


def load_flow_problem(path):
    """Read the plain-text problem format written by save_flow_problem."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    n, m = (int(t) for t in lines[0].split())
    edges = []
    for ln in lines[1 : 1 + m]:
        i, j, w = ln.split()
        edges.append((int(i), int(j), float(w)))
    b = None
    cost = None
    for ln in lines[1 + m :]:
        tokens = ln.split()
        if tokens[0] == "b":
            b = np.array([float(t) for t in tokens[1:]])
        elif tokens[0] == "cost":
            param = float(tokens[2]) if len(tokens) > 2 else None
            cost = make_cost(tokens[1], param)
    if b is None or cost is None:
        raise ValueError("problem file needs 'b' and 'cost' lines")
    return FlowProblem(orient(WeightedGraph(n, edges)), b, cost)


@dataclass
class DualState:
    """Dual iterate: variables, recovered primal flows, gradient, index.

    ``lam`` is the dual vector (called lambda in the docs; renamed because
    of the Python keyword).
    """

    lam: np.ndarray
    x_of_lambda: np.ndarray
    g: np.ndarray
    k: int = 0


def primal_recovery(lam, problem):
    """Per-arc primal flows x_e = [Phi'_e]^{-1}(lambda_tail - lambda_head)."""
    lam = np.asarray(lam, dtype=float).ravel()
    y = lam[problem._tails] - lam[problem._heads]
    for e, c in enumerate(problem.costs):
        dom = c.inv_domain
        if dom is not None and not (dom[0] < y[e] < dom[1]):
            raise ValueError("inverse map domain violated on edge %d: %g" % (e, y[e]))
    if problem._uniform is not None:
        return np.asarray(problem._uniform.inv_deriv(y), dtype=float)
    return np.array([float(c.inv_deriv(y[e])) for e, c in enumerate(problem.costs)])


def dual_state(lam, problem, k=0):
    """Assemble a DualState at the given dual vector."""
    lam = np.asarray(lam, dtype=float).ravel()
    x = primal_recovery(lam, problem)
    g = problem.incidence @ x - problem.b
    return DualState(lam=lam, x_of_lambda=x, g=g, k=k)


def dual_gradient(state, problem):
    """Gradient of the dual: conservation violation A x(lambda) - b."""
    return problem.incidence @ state.x_of_lambda - problem.b


def dual_value(lam, problem):
    """q(lambda) = lambda'(A x(lambda) - b) - sum_e Phi_e(x_e(lambda))."""
    st = dual_state(lam, problem)
    return float(st.lam @ st.g) - problem.cost_value(st.x_of_lambda)


def dual_hessian(state, problem):
    """Weighted Laplacian Hessian with edge weights 1/Phi''(x_e(lambda))."""
    dd = problem.phi_second(state.x_of_lambda)
    if not np.all(np.isfinite(dd)) or np.any(dd <= 0):
        bad = int(np.flatnonzero(~np.isfinite(dd) | (dd <= 0))[0])
        raise RuntimeError("Hessian curvature invalid on edge %d" % bad)
    w = 1.0 / dd
    if not np.all(w > 0) or not np.all(np.isfinite(w)):
        bad = int(np.flatnonzero(~(w > 0) | ~np.isfinite(w))[0])
        raise RuntimeError("Hessian weight underflow on edge %d" % bad)
    n = problem.n
    t, h = problem._tails, problem._heads
    A = sparse.csr_matrix(
        (np.concatenate([w, w]), (np.concatenate([t, h]), np.concatenate([h, t]))),
        shape=(n, n),
    )
    D = np.bincount(t, weights=w, minlength=n) + np.bincount(h, weights=w, minlength=n)
    return StandardSplitting(D, A)


@dataclass
class ConvergenceConstants:
    """Theory constants of the dual Newton iteration on one problem.

    All spectral quantities refer to the unweighted Laplacian L = A A'.
    eps is the solver accuracy the eps-dependent members were evaluated at.
    """

    gamma: float
    Gamma: float
    delta: float
    B: float
    mu2: float
    mun: float
    alpha_star: float
    xi: float
    zeta: float
    eta0: float
    eta1: float
    eps: float = 0.0

    def __post_init__(self):
        if self.zeta > 0 and math.isfinite(self.eta1):
            if not (0 < self.eta0 < self.eta1) and self.eta0 != self.eta1:
                raise ValueError("phase thresholds must satisfy 0 < eta0 < eta1")


def alpha_star(consts, eps):
    """Step size (e^{-eps^2}/(1+eps)^2) (gamma/Gamma * mu2/mun)^2, clipped to (0,1].

    `consts` needs gamma, Gamma, mu2, mun; eps must stay below
    (mu2/mun) sqrt(gamma/Gamma) for the terminal phase to contract.
    """
    bound = (consts.mu2 / consts.mun) * math.sqrt(consts.gamma / consts.Gamma)
    if eps < 0 or eps >= bound:
        raise ValueError(
            "eps=%g is outside [0, %g); pick a smaller solver accuracy" % (eps, bound)
        )
    val = (math.exp(-eps ** 2) / (1.0 + eps) ** 2) * (
        (consts.gamma / consts.Gamma) * (consts.mu2 / consts.mun)
    ) ** 2
    return min(1.0, val)


class _BaseConsts:
    # minimal duck-typed carrier so alpha_star can run before the full
    # dataclass exists
    def __init__(self, gamma, Gamma, mu2, mun):
        self.gamma = gamma
        self.Gamma = Gamma
        self.mu2 = mu2
        self.mun = mun


def convergence_constants(problem, eps=0.0):
    """Evaluate the convergence constants of a problem at solver accuracy eps."""
    gamma = min(c.gamma for c in problem.costs)
    Gamma = max(c.Gamma for c in problem.costs)
    delta = max(c.delta for c in problem.costs)
    L = problem.unweighted_laplacian()
    evals = np.linalg.eigvalsh(L)
    mu2 = float(evals[1])
    mun = float(evals[-1])
    B = mun * delta / (gamma * math.sqrt(mu2))
    a = alpha_star(_BaseConsts(gamma, Gamma, mu2, mun), eps)
    xi = math.sqrt(max(0.0, 1.0 - a + a * eps * (mun / mu2) * math.sqrt(Gamma / gamma)))
    zeta = B * (a * Gamma * (1.0 + eps)) ** 2 / (2.0 * mu2 ** 2)
    if zeta > 0:
        eta0 = xi * (1.0 - xi) / zeta
        eta1 = (1.0 - xi) / zeta
    else:
        eta0 = eta1 = math.inf
    return ConvergenceConstants(
        gamma=gamma, Gamma=Gamma, delta=delta, B=B, mu2=mu2, mun=mun,
        alpha_star=a, xi=xi, zeta=zeta, eta0=eta0, eta1=eta1, eps=eps,
    )


def strict_decrement_bound(consts):
    """Guaranteed dual decrease per strict-phase step (a negative number)."""
    c = consts
    return -0.5 * (math.exp(-2.0 * c.eps ** 2) / (1.0 + c.eps) ** 2) * (
        c.gamma ** 3 / c.Gamma ** 2
    ) * (c.mu2 ** 2 / c.mun ** 4) * c.eta1 ** 2


def newton_direction(state, problem, eps=1e-4, R=1, solver_mode="rhop_distributed",
                     ref_node=0, report=None):
    """Approximate Newton direction d with H(lambda) d = -g.

    Grounds `ref_node`, solves the SDDM subsystem in the requested mode,
    re-inserts 0 at the reference node and shifts the result to mean zero.
    When `report` is a dict it receives eps_prime (the guaranteed relative
    H-norm error of the direction, derived from eps), messages and rounds.
    """
    g = state.g
    n = problem.n
    if abs(g.sum()) > 1e-8 * max(1.0, float(np.abs(g).max())):
        raise ValueError("dual gradient must sum to zero")
    H = dual_hessian(state, problem)
    Hg = ground(H, ref_node)
    keep = np.array([i for i in range(n) if i != ref_node])
    rhs = -g[keep]
    messages = 0
    rounds = 0
    if solver_mode == "exact_oracle":
        y = direct_solve(Hg, rhs)
        eps_prime = 0.0
    else:
        kappa = estimate_condition(Hg, tol=1e-6) * 1.05
        spec = chain_length(max(1.0, kappa), "estimated")
        if solver_mode == "full_distributed":
            eng = FullCommEngine(Hg, spec)
        elif solver_mode == "rhop_distributed":
            eng = RHopEngine(Hg, spec, R)
        else:
            raise ValueError("unknown solver_mode %r" % solver_mode)
        y = eng.esolve(rhs, eps)
        messages = eng.transcript.messages_total
        rounds = eng.transcript.rounds
        q = richardson_iterations(eps)
        eps_prime = (2.0 ** (1.0 / 3.0) - 1.0) ** (q + 1)
    d = np.zeros(n)
    d[keep] = y
    d -= d.mean()
    if report is not None:
        report.update(eps_prime=eps_prime, messages=messages, rounds=rounds)
    return d


@dataclass
class OptimizeConfig:
    """Knobs of the dual descent loop."""

    step: str = "backtracking"  # fixed | alpha_star | backtracking
    alpha: float = None  # fixed-step value; None picks a method default
    feas_threshold: float = 1e-5
    max_iters: int = 500
    eps: float = 1e-4  # solver accuracy for sddm_newton
    R: int = 1
    solver_mode: str = "rhop_distributed"
    neumann_terms: int = 2  # N of the truncated-Neumann baseline
    ground_node: int = 0
    lambda0: np.ndarray = None


class DivergenceError(RuntimeError):
    """Objective became non-finite; carries the trace so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class Trace:
    """Per-iteration record of one optimization run."""

    COLUMNS = ("iter", "objective", "feasibility", "grad_lnorm", "step", "phase", "messages")

    def __init__(self, method, config, consts=None):
        self.method = method
        self.config = config
        self.consts = consts
        self.rows = []
        self.dual = []
        self.converged = False
        self.final_state = None

    def add(self, row, dual_val):
        self.rows.append(row)
        self.dual.append(dual_val)

    def column(self, name):
        return [row[name] for row in self.rows]

    @property
    def iterations(self):
        """Number of update steps taken."""
        return max(0, len(self.rows) - 1)

    def header_items(self):
        cfg = self.config
        items = {
            "method": self.method,
            "step": cfg.step,
            "feas_threshold": cfg.feas_threshold,
            "max_iters": cfg.max_iters,
        }
        if self.method == "sddm_newton":
            items.update(eps=cfg.eps, R=cfg.R, solver_mode=cfg.solver_mode)
        if self.method == "subgradient" and cfg.alpha is not None:
            items.update(alpha=cfg.alpha)
        if self.method == "add_neumann":
            items.update(neumann_terms=cfg.neumann_terms)
        return items

    def to_csv(self, target, extra_header=None):
        """Write the trace with the resolved configuration as # comments."""
        own = isinstance(target, str)
        fh = open(target, "w") if own else target
        try:
            items = self.header_items()
            if extra_header:
                items.update(extra_header)
            for key in items:
                fh.write("# %s=%s\n" % (key, items[key]))
            fh.write(",".join(self.COLUMNS) + "\n")
            for row in self.rows:
                fh.write(
                    "%d,%r,%r,%r,%r,%s,%d\n"
                    % (
                        row["iter"], row["objective"], row["feasibility"],
                        row["grad_lnorm"], row["step"], row["phase"], row["messages"],
                    )
                )
        finally:
            if own:
                fh.close()


def _phase_label(gl, consts):
    if consts is None:
        return ""
    if gl > consts.eta1:
        return "strict"
    if gl >= consts.eta0:
        return "quadratic"
    return "terminal"


def _armijo(problem, lam, q0, g, direction, c1=1e-4, shrink=0.5, alpha0=1.0):
    slope = float(g @ direction)
    alpha = alpha0
    while alpha > 1e-12:
        if dual_value(lam + alpha * direction, problem) <= q0 + c1 * alpha * slope:
            return alpha
        alpha *= shrink
    return alpha


def optimize(problem, method="sddm_newton", config=None):
    """Run dual descent until feasibility ||A x(lambda) - b|| meets the threshold.

    Parameters
    ----------
    problem : FlowProblem
    method : str
        sddm_newton | exact_newton | subgradient | add_neumann.
    config : OptimizeConfig, optional

    Returns
    -------
    Trace
        Per-iteration objective, feasibility, Laplacian gradient norm, step,
        phase label and message count; `converged` tells whether the
        threshold was met within max_iters.
    """
    if method not in ("sddm_newton", "exact_newton", "subgradient", "add_neumann"):
        raise ValueError("unknown method %r" % method)
    cfg = config or OptimizeConfig()
    eps_for_consts = cfg.eps if method == "sddm_newton" else 0.0
    try:
        consts = convergence_constants(problem, eps_for_consts)
    except ValueError:
        consts = convergence_constants(problem, 0.0)
    trace = Trace(method, cfg, consts)
    lam = np.zeros(problem.n) if cfg.lambda0 is None else np.asarray(cfg.lambda0, float).copy()
    one_hop = 2 * problem.E
    alpha_prev = 0.5

    state = dual_state(lam, problem, k=0)
    for k in range(cfg.max_iters + 1):
        obj = problem.cost_value(state.x_of_lambda)
        feas = float(np.linalg.norm(state.g))
        qval = float(state.lam @ state.g) - obj
        gl = problem.lnorm(state.g)
        if not (math.isfinite(obj) and math.isfinite(feas)):
            raise DivergenceError("objective diverged at iteration %d" % k, trace)
        phase = _phase_label(gl, consts)
        done = feas <= cfg.feas_threshold or k == cfg.max_iters
        if done:
            trace.add(
                dict(iter=k, objective=obj, feasibility=feas, grad_lnorm=gl,
                     step=0.0, phase=phase, messages=0),
                qval,
            )
            trace.converged = feas <= cfg.feas_threshold
            break

        solver_msgs = 0
        if method in ("sddm_newton", "exact_newton"):
            report = {}
            mode = "exact_oracle" if method == "exact_newton" else cfg.solver_mode
            direction = newton_direction(
                state, problem, eps=cfg.eps, R=cfg.R, solver_mode=mode,
                ref_node=cfg.ground_node, report=report,
            )
            solver_msgs = report.get("messages", 0)
        elif method == "subgradient":
            direction = -state.g
        else:  # add_neumann
            # H = inc diag(w) inc' applied matrix-free: A_H t = D_H t - H t
            w = 1.0 / problem.phi_second(state.x_of_lambda)
            tails, heads = problem._tails, problem._heads
            D_H = np.bincount(tails, weights=w, minlength=problem.n) + np.bincount(
                heads, weights=w, minlength=problem.n
            )
            t = state.g / D_H
            acc = t.copy()
            for _ in range(cfg.neumann_terms):
                ht = problem.incidence @ (w * (problem.incidence.T @ t))
                t = (D_H * t - ht) / D_H
                acc += t
            direction = -acc
            solver_msgs = cfg.neumann_terms * one_hop

        if cfg.step == "fixed":
            if cfg.alpha is not None:
                alpha = cfg.alpha
            elif method == "subgradient":
                alpha = consts.gamma / consts.mun
            else:
                alpha = 1.0
        elif cfg.step == "alpha_star":
            alpha = consts.alpha_star
        elif cfg.step == "backtracking":
            # warm start at twice the previously accepted step, capped at 1
            alpha = _armijo(problem, lam, qval, state.g, direction,
                            alpha0=min(1.0, 2.0 * alpha_prev))
            alpha_prev = alpha
        else:
            raise ValueError("unknown step policy %r" % cfg.step)

        trace.add(
            dict(iter=k, objective=obj, feasibility=feas, grad_lnorm=gl,
                 step=float(alpha), phase=phase, messages=int(solver_msgs + one_hop)),
            qval,
        )
        lam = lam + alpha * direction
        state = dual_state(lam, problem, k=k + 1)

    trace.final_state = state
    return trace


@dataclass
class PhaseReport:
    """Phase labels plus the iteration-count bounds evaluated on a trace."""

    labels: list
    counts: dict
    N1_bound: float
    N2_bound: float
    terminal_radius: float


def classify_phase(trace, consts):
    """Label every recorded iteration and evaluate the phase-count bounds.

    Thresholds eta0/eta1 act on the recorded ||g||_L. N1 bounds the strict
    phase via the dual gap of the trace, N2 the quadratic phase via the
    contraction ratio at its first iteration; the terminal radius is the
    guaranteed ||g||_L ceiling of the last phase.
    """
    gls = trace.column("grad_lnorm")
    labels = [_phase_label(gl, consts) for gl in gls]
    counts = {name: labels.count(name) for name in ("strict", "quadratic", "terminal")}
    eps = consts.eps
    hat = (consts.mun / consts.mu2) * math.sqrt(consts.Gamma / consts.gamma)
    slack = 1.0 - eps * hat

    n1 = math.inf
    if trace.dual and slack > 0:
        gap = trace.dual[0] - min(trace.dual)
        c1 = 2.0 * consts.xi ** 2 * (1.0 + eps) ** 2 * gap * consts.Gamma ** 2 / consts.gamma
        n1 = c1 * consts.mun ** 2 / consts.mu2 ** 3 / slack ** 2

    n2 = math.inf
    first_quadratic = next((t for t, lab in enumerate(labels) if lab == "quadratic"), None)
    if first_quadratic is not None and math.isfinite(consts.eta1):
        r = gls[first_quadratic] / consts.eta1
        inner = 1.0 - consts.alpha_star * slack
        if 0 < r < 1 and 0 < inner < 1:
            n2 = math.log2(0.5 * math.log2(inner) / math.log2(r))

    radius = math.inf
    if slack > 0 and consts.xi > 0:
        radius = (
            2.0 * slack * consts.mun * math.sqrt(consts.mu2)
            / (math.exp(-eps ** 2) * consts.gamma * consts.xi)
        )
    return PhaseReport(
        labels=labels, counts=counts, N1_bound=n1, N2_bound=n2, terminal_radius=radius
    )
