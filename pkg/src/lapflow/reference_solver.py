"""Centralized solvers: direct oracle, inverse-chain solve, preconditioned Richardson."""

import math

import numpy as np

from .spectral import validate_sddm

__all__ = [
    "InverseChainView",
    "direct_solve",
    "parallel_rsolve",
    "parallel_esolve",
    "richardson_iterations",
]

# ln(1/(2^{1/3}-1)); per-iteration contraction guarantee of the
# chain-preconditioned Richardson scheme
RICHARDSON_RATE = math.log(1.0 / (2.0 ** (1.0 / 3.0) - 1.0))


def richardson_iterations(eps):
    """Fixed iteration count q = ceil(ln(1/eps) / ln(1/(2^{1/3}-1)))."""
    if not 0.0 < eps <= 0.5:
        raise ValueError("eps must lie in (0, 1/2]")
    return math.ceil(math.log(1.0 / eps) / RICHARDSON_RATE)


class InverseChainView:
    """Implicit inverse chain over one splitting.

    The chain keeps D_k = D0 and A_k = D0 (D0^{-1} A0)^{2^k}, so everything
    reduces to powers of P = A0 D0^{-1} and Q = D0^{-1} A0 = D0^{-1} P D0.
    Powers are cached densely by repeated squaring for small systems and
    applied as repeated sparse matrix-vector products otherwise (never
    materialized).

    Parameters
    ----------
    splitting : StandardSplitting
    d : int or ChainSpec
        Chain length (number of squarings).
    """

    DENSE_LIMIT = 50

    def __init__(self, splitting, d):
        d = int(getattr(d, "d", d))
        if d < 0:
            raise ValueError("chain length must be nonnegative")
        self.splitting = splitting
        self.d = d
        self.D = splitting.D
        self.A = splitting.A
        self._ppow = None
        if splitting.n <= self.DENSE_LIMIT and d >= 1:
            P = splitting.A.toarray() / self.D  # P[i,j] = A[i,j]/D[j]
            pows = [P]
            for _ in range(1, d):
                pows.append(pows[-1] @ pows[-1])
            self._ppow = pows

    def apply_p_power(self, i, v):
        """(A0 D0^{-1})^{2^i} v."""
        if self._ppow is not None:
            return self._ppow[i] @ v
        out = v
        for _ in range(2 ** i):
            out = self.A @ (out / self.D)
        return out

    def apply_q_power(self, i, v):
        """(D0^{-1} A0)^{2^i} v, via Q^p = D^{-1} P^p D."""
        return self.apply_p_power(i, v * self.D) / self.D


def direct_solve(s, b):
    """Ground-truth solve of M x = b by dense factorization.

    Parameters
    ----------
    s : StandardSplitting
        Positive definite SDDM system, or a singular Laplacian of a
        connected graph (then b must be orthogonal to the ones vector and
        the mean-zero solution is returned, obtained by grounding node 0,
        back-substituting 0 there and shifting).
    b : array_like

    Returns
    -------
    ndarray
        x with ||M x - b||_2 <= 1e-10 ||b||_2.
    """
    b = np.asarray(b, dtype=float).ravel()
    if b.shape[0] != s.n:
        raise ValueError("b has wrong length")
    rep = validate_sddm(s)
    M = s.dense()
    if rep.positive_definite:
        x = np.linalg.solve(M, b)
        x += np.linalg.solve(M, b - M @ x)  # one refinement step
    elif rep.is_sdd and not rep.strict_rows.any() and rep.support_connected:
        if abs(b.sum()) > 1e-9 * max(1.0, np.linalg.norm(b)):
            raise ValueError("singular Laplacian system needs b orthogonal to ones")
        Mg = M[1:, 1:]
        bg = b[1:]
        xg = np.linalg.solve(Mg, bg)
        xg += np.linalg.solve(Mg, bg - Mg @ xg)
        x = np.concatenate(([0.0], xg))
        x -= x.mean()
    else:
        raise ValueError("splitting is not solvable: singular or not SDD")
    resid = np.linalg.norm(M @ x - b)
    if resid > 1e-10 * max(np.linalg.norm(b), 1e-300):
        raise RuntimeError("direct solve residual %.3e exceeds tolerance" % resid)
    return x


def parallel_rsolve(chain, b0):
    """Crude solve x0 = Z0 b0 through the inverse chain.

    Forward pass b_i = (I + P^{2^{i-1}}) b_{i-1} for i = 1..d, top solve
    x_d = b_d / D, backward pass x_i = (b_i/D + x_{i+1} + Q^{2^i} x_{i+1})/2.
    The realized operator Z0 satisfies the e^{±eps_d} sandwich against
    M0^{-1} when d comes from chain_length.
    """
    b = np.asarray(b0, dtype=float).ravel()
    D, d = chain.D, chain.d
    levels = [b]
    for i in range(1, d + 1):
        b = b + chain.apply_p_power(i - 1, b)
        levels.append(b)
    x = levels[d] / D
    for i in range(d - 1, -1, -1):
        x = 0.5 * (levels[i] / D + x + chain.apply_q_power(i, x))
    return x


def parallel_esolve(chain, b0, eps):
    """eps-approximate solve by Richardson iteration preconditioned with the chain.

    Parameters
    ----------
    chain : InverseChainView
    b0 : array_like
    eps : float
        Target in (0, 1/2]; the returned x satisfies
        ||x - x*||_M <= eps ||x*||_M.

    Returns
    -------
    ndarray
    """
    q = richardson_iterations(eps)
    b0 = np.asarray(b0, dtype=float).ravel()
    M = chain.splitting.matrix()
    chi = parallel_rsolve(chain, b0)
    y = chi.copy()
    for _ in range(q):
        y = y - parallel_rsolve(chain, M @ y) + chi
    return y
