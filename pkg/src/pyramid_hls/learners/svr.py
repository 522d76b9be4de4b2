"""Epsilon-insensitive support vector regression solved in the dual by a
sequential pairwise optimizer.

The dual is written over beta_i = alpha_i - alpha*_i:

    minimize  D(beta) = 1/2 beta' K beta - y' beta + eps * sum |beta_i|
    subject to sum beta_i = 0,  |beta_i| <= C

Pairwise updates keep beta_i + beta_j constant. Each pair subproblem is a
convex piecewise quadratic in one variable; it is solved exactly by
evaluating the restricted objective at the stationary points of every
smooth piece, the kinks (0 and s) and the box ends, which avoids fragile
sign-case algebra.
"""

from __future__ import annotations

import numpy as np

from ..dataset import rng_from_seed
from ..errors import NonConvergence
from .base import LearnerSpec, Scaler, TrainedModel, _envelope_kwargs, train_relative_rmse

DEFAULT_KKT_TOL = 1e-3


def kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: str, gamma: float) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        sq = (A ** 2).sum(axis=1)[:, None] + (B ** 2).sum(axis=1)[None, :] - 2.0 * A @ B.T
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ValueError(f"unknown kernel {kernel!r}")


def dual_objective(K: np.ndarray, y: np.ndarray, beta: np.ndarray, eps: float) -> float:
    return float(0.5 * beta @ K @ beta - y @ beta + eps * np.abs(beta).sum())


def _solve_pair(Kii, Kjj, Kij, fi, fj, yi, yj, bi, bj, C, eps):
    """Exact minimizer of the dual restricted to the pair (i, j)."""
    s = bi + bj
    eta = Kii + Kjj - 2.0 * Kij
    L = max(-C, s - C)
    H = min(C, s + C)
    if L > H:
        return bi
    # linear coefficient of the smooth part as a function of beta_i
    ui = fi - bi * Kii - bj * Kij
    uj = fj - bi * Kij - bj * Kjj
    B = -s * (Kjj - Kij) + (ui - uj) - (yi - yj)

    candidates = [L, H]
    for kink in (0.0, s):
        if L <= kink <= H:
            candidates.append(kink)
    if eta > 0:
        for si in (-1.0, 1.0):
            for sj in (-1.0, 1.0):
                candidates.append(min(max((-(B + eps * (si - sj))) / eta, L), H))

    def g(b):
        c = s - b
        return (0.5 * Kii * b * b + 0.5 * Kjj * c * c + Kij * b * c
                + b * ui + c * uj - yi * b - yj * c
                + eps * (abs(b) + abs(c)))

    return min(candidates, key=g)


def _compute_bias(beta: np.ndarray, f: np.ndarray, y: np.ndarray, C: float, eps: float) -> float:
    free = (np.abs(beta) > 1e-8 * C) & (np.abs(beta) < C * (1 - 1e-8))
    if free.any():
        return float(np.mean(y[free] - f[free] - eps * np.sign(beta[free])))
    resid = y - f
    lo = resid.max() - eps
    hi = resid.min() + eps
    return float((lo + hi) / 2.0)


def _kkt_violation(beta: np.ndarray, E: np.ndarray, C: float, eps: float) -> float:
    """Largest KKT violation; E = f + b - y."""
    v = np.zeros_like(beta)
    at_upper = beta >= C * (1 - 1e-8)
    at_lower = beta <= -C * (1 - 1e-8)
    pos_free = (beta > 1e-8 * C) & ~at_upper
    neg_free = (beta < -1e-8 * C) & ~at_lower
    at_zero = np.abs(beta) <= 1e-8 * C
    v[at_upper] = np.maximum(E[at_upper] + eps, 0.0)
    v[at_lower] = np.maximum(-(E[at_lower] - eps), 0.0)
    v[pos_free] = np.abs(E[pos_free] + eps)
    v[neg_free] = np.abs(E[neg_free] - eps)
    v[at_zero] = np.maximum(np.abs(E[at_zero]) - eps, 0.0)
    return float(v.max()) if len(v) else 0.0


def solve_svr_dual(K: np.ndarray, y: np.ndarray, C: float, eps: float,
                   tol: float = DEFAULT_KKT_TOL, max_passes: int = 200,
                   seed: int = 0, stall_tol: float = 1e-3) -> tuple[np.ndarray, float, int]:
    """Returns (beta, bias, passes). Raises NonConvergence at max_passes.

    Stops when the largest KKT violation falls below ``tol`` or when a full
    pass improves the dual objective by less than ``stall_tol`` relative to
    its magnitude (boundary violators can pin the raw KKT measure at a
    plateau long after the fit itself has converged).
    """
    n = len(y)
    beta = np.zeros(n)
    f = np.zeros(n)             # K @ beta, maintained incrementally
    rng = rng_from_seed(seed)
    prev_dual = None

    for n_pass in range(1, max_passes + 1):
        b = _compute_bias(beta, f, y, C, eps)
        E = f + b - y
        if _kkt_violation(beta, E, C, eps) <= tol:
            return beta, b, n_pass
        dual = dual_objective(K, y, beta, eps)
        if prev_dual is not None and prev_dual - dual <= stall_tol * (1.0 + abs(dual)):
            return beta, b, n_pass
        prev_dual = dual
        def attempt(i, j):
            if i == j:
                return False
            new_bi = _solve_pair(K[i, i], K[j, j], K[i, j], f[i], f[j],
                                 y[i], y[j], beta[i], beta[j], C, eps)
            dd = new_bi - beta[i]
            if abs(dd) < 1e-12:
                return False
            beta[i] += dd
            beta[j] -= dd
            f[:] += dd * (K[:, i] - K[:, j])
            return True

        changed = 0
        order = rng.permutation(n)
        for i in order:
            # greedy partner first, one random fallback if it is blocked
            grad = f + b - y
            j = int(np.argmax(np.abs(grad[i] - grad)))
            if attempt(i, j) or attempt(i, int(rng.integers(0, n))):
                changed += 1
        if changed == 0:
            # pairwise moves stalled: sweep pairs among the worst violators
            E = f + b - y
            v_order = np.argsort(-np.abs(E))[:32]
            for i in v_order:
                for j in v_order:
                    if attempt(int(i), int(j)):
                        changed += 1
            if changed == 0:
                b = _compute_bias(beta, f, y, C, eps)
                return beta, b, n_pass

    b = _compute_bias(beta, f, y, C, eps)
    primal = (0.5 * beta @ K @ beta
              + C * np.maximum(np.abs(y - f - b) - eps, 0.0).sum())
    dual = y @ beta - eps * np.abs(beta).sum() - 0.5 * beta @ K @ beta
    raise NonConvergence(
        f"SMO did not converge within {max_passes} passes", duality_gap=float(primal - dual)
    )


class SvrModel(TrainedModel):
    model_kind = "svr"

    def __init__(self, support_vectors: np.ndarray, beta: np.ndarray, bias: float,
                 kernel: str, gamma: float, **kwargs):
        super().__init__(**kwargs)
        self.support_vectors = np.asarray(support_vectors, dtype=float)
        self.beta = np.asarray(beta, dtype=float)
        self.bias = float(bias)
        self.kernel = kernel
        self.gamma = float(gamma)

    def _predict_standardized(self, Xz: np.ndarray) -> np.ndarray:
        if len(self.beta) == 0:
            return np.full(len(Xz), self.bias)
        Kx = kernel_matrix(Xz, self.support_vectors, self.kernel, self.gamma)
        return Kx @ self.beta + self.bias

    def _parameters_dict(self) -> dict:
        return {
            "support_vectors": self.support_vectors.tolist(),
            "beta": self.beta.tolist(),
            "bias": self.bias,
            "kernel": self.kernel,
            "gamma": self.gamma,
        }

    @classmethod
    def _from_dict(cls, d: dict) -> "SvrModel":
        p = d["parameters"]
        n_feat = len(d["x_scaler"]["mean"])
        sv = np.array(p["support_vectors"], dtype=float).reshape(-1, n_feat)
        return cls(
            support_vectors=sv,
            beta=np.array(p["beta"]), bias=p["bias"], kernel=p["kernel"],
            gamma=p["gamma"], **_envelope_kwargs(d),
        )


def train_svr(X: np.ndarray, y: np.ndarray, C: float = 1.0, epsilon: float = 0.01,
              kernel: str = "rbf", gamma: float | None = None,
              tol: float = DEFAULT_KKT_TOL, max_passes: int = 200,
              seed: int = 0, stall_tol: float = 1e-3) -> SvrModel:
    """Train in standardized space; epsilon is in standardized target units.

    gamma defaults to 1 / n_features.
    """
    if C <= 0:
        raise ValueError("C must be > 0")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    x_scaler = Scaler.fit(X)
    y_scaler = Scaler.fit(y.reshape(-1, 1))
    Xz = x_scaler.transform(X)
    yz = y_scaler.transform(y.reshape(-1, 1)).ravel()

    g = 1.0 / Xz.shape[1] if gamma is None else gamma
    K = kernel_matrix(Xz, Xz, kernel, g)
    beta, bias, passes = solve_svr_dual(K, yz, C, epsilon, tol=tol,
                                        max_passes=max_passes, seed=seed,
                                        stall_tol=stall_tol)

    sv = np.abs(beta) > 1e-10
    spec = LearnerSpec("svr", {
        "C": C, "epsilon": epsilon, "kernel": kernel, "gamma": g,
        "tol": tol, "max_passes": max_passes, "seed": seed,
        "stall_tol": stall_tol,
    })
    model = SvrModel(
        support_vectors=Xz[sv], beta=beta[sv], bias=bias, kernel=kernel, gamma=g,
        spec=spec, x_scaler=x_scaler, y_scaler=y_scaler,
    )
    model.training_stats = {
        "train_rmse_rel": train_relative_rmse(model, X, y),
        "epochs_or_trees": passes,
        "n_support_vectors": int(sv.sum()),
    }
    return model
