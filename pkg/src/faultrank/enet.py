"""Penalized logistic regression over the slice coverage matrix.

The response is 1 for passing tests and 0 for failing ones, so
fault-indicating columns end up with negative coefficients. Fitting is
iteratively reweighted least squares: each Newton step is a weighted
least-squares problem, solved under an elastic-net penalty with
per-column l1 modifiers. The l2 part is folded into an augmented design
so the inner problem is a plain (weighted) lasso, handled by cyclic
coordinate descent with soft-thresholding and an active-set strategy.

Two coefficient scalings are exposed. `beta` minimizes the penalized
least-squares objective ||y - Xb||^2 + lam2*||b||^2 + lam1*sum(d_j|b_j|)
and is what predictions and deviances use. `beta_rescaled` multiplies the
penalized coordinates by (1 + lam2), undoing the ridge-induced shrinkage
(the conventional rescaled elastic-net estimator). Rank consumers are
invariant to the positive factor between them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConvergenceError, DegenerateInputError
from .slicing import CandidateSet
from .tracer import ExecutionTrace

W_FLOOR = 1e-10


@dataclass(frozen=True)
class Scm:
    """m x (n+1) execution-count matrix with a leading ones column."""

    X: np.ndarray
    r: np.ndarray  # 1 = pass, 0 = fail
    test_ids: tuple[str, ...]
    candidate_ids: tuple[int, ...]  # statement id per column 1..n

    def __post_init__(self):
        m, n1 = self.X.shape
        if m != len(self.r) or m != len(self.test_ids):
            raise ValueError("row count mismatch")
        if n1 != len(self.candidate_ids) + 1:
            raise ValueError("column count mismatch")
        if not np.all(self.X[:, 0] == 1):
            raise ValueError("column 0 must be all ones")
        if np.any(self.X < 0):
            raise ValueError("negative execution count")


@dataclass(frozen=True)
class EnetConfig:
    alpha_grid: tuple[float, ...] = (0.5,)
    s_grid: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)
    delta: np.ndarray | None = None  # length n+1, index 0 is the intercept
    cv_folds: int = 10
    irls_tol: float = 1e-7
    solver_tol: float = 1e-6
    max_irls: int = 50
    max_sweeps: int = 1000
    seed: int = 0

    def resolve_delta(self, n_columns: int) -> np.ndarray:
        if self.delta is None:
            delta = np.ones(n_columns)
            delta[0] = 0.0
            return delta
        delta = np.asarray(self.delta, dtype=float)
        if delta.shape != (n_columns,):
            raise ValueError(f"delta must have length {n_columns}")
        if delta[0] != 0.0:
            raise ValueError("intercept modifier must be 0")
        rest = delta[1:]
        if rest.size and (rest.min() < 0.7 - 1e-12 or rest.max() > 1.0 + 1e-12):
            raise ValueError("column modifiers must lie in [0.7, 1.0]")
        return delta


@dataclass(frozen=True)
class FitDiagnostics:
    converged: bool
    irls_iterations: int
    kkt_residual: float
    objective: float  # penalized LS objective at the final weighted data
    # final-iteration snapshot so the objective can be re-evaluated exactly
    X_w: np.ndarray = field(repr=False)
    Y_w: np.ndarray = field(repr=False)
    cv_fallback: bool = False


@dataclass(frozen=True)
class EnetModel:
    beta0: float
    beta: np.ndarray  # per candidate column, original count scale
    beta_rescaled: np.ndarray  # (1 + lam2) * beta
    beta_std: np.ndarray  # length n+1, standardized scale (solver space)
    alpha: float
    s: float
    lam1: float
    lam2: float
    xi: float
    delta: np.ndarray  # resolved per-column modifiers, index 0 intercept
    candidate_ids: tuple[int, ...]
    selected: tuple[int, ...]  # statement ids with nonzero coefficient
    diagnostics: FitDiagnostics

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Passing probability for rows shaped like the fit matrix."""
        return expit(self.beta0 + X[:, 1:] @ self.beta)

    def objective_value(self, beta_std: np.ndarray | None = None) -> float:
        """Penalized objective on the stored final weighted system."""
        b = self.beta_std if beta_std is None else beta_std
        d = self.diagnostics
        resid = d.Y_w - d.X_w @ b
        return float(
            resid @ resid
            + self.lam2 * float(b[1:] @ b[1:])
            + self.lam1 * float(np.abs(b) @ self.delta)
        )


def build_scm(
    cs: CandidateSet,
    traces: list[ExecutionTrace],
    included_tests: frozenset[str] | set[str] | None = None,
) -> Scm:
    """Assemble the count matrix over candidate columns, one row per test.

    `included_tests` filters rows (coincidentally correct tests are dropped
    here); response must contain both classes.
    """
    if len(cs) == 0:
        raise DegenerateInputError("empty candidate set")
    rows = []
    resp = []
    ids = []
    for trace in traces:
        if included_tests is not None and trace.test_id not in included_tests:
            continue
        rows.append([1] + [trace.counts.get(sid, 0) for sid in cs.ids])
        resp.append(1.0 if trace.outcome == "pass" else 0.0)
        ids.append(trace.test_id)
    r = np.array(resp, dtype=float)
    if len(r) == 0 or r.min() == r.max():
        raise DegenerateInputError("degenerate response: need both passing and failing rows")
    return Scm(
        X=np.array(rows, dtype=float),
        r=r,
        test_ids=tuple(ids),
        candidate_ids=cs.ids,
    )


def loglik(beta: np.ndarray, X: np.ndarray, r: np.ndarray) -> float:
    """Bernoulli log-likelihood sum(r*eta - log(1 + e^eta))."""
    eta = X @ beta
    return float(r @ eta - np.logaddexp(0.0, eta).sum())


def loglik_grad(beta: np.ndarray, X: np.ndarray, r: np.ndarray) -> np.ndarray:
    eta = X @ beta
    return X.T @ (r - expit(eta))


def loglik_hessian(beta: np.ndarray, X: np.ndarray) -> np.ndarray:
    eta = X @ beta
    p = expit(eta)
    w = p * (1.0 - p)
    return -(X.T * w) @ X


@dataclass(frozen=True)
class IrlsStep:
    W: np.ndarray  # diagonal weights, floored
    Z: np.ndarray  # working response
    X_w: np.ndarray  # sqrt(W)-scaled design
    Y_w: np.ndarray  # sqrt(W)-scaled working response


def irls_step(beta: np.ndarray, X: np.ndarray, r: np.ndarray) -> IrlsStep:
    """One reweighting: W = P(1-P) floored, Z = eta + (r-P)/W, then scale
    design and response by sqrt(W) so the Newton step is least squares."""
    eta = X @ beta
    p = expit(eta)
    w = np.maximum(p * (1.0 - p), W_FLOOR)
    z = eta + (r - p) / w
    omega = np.sqrt(w)
    return IrlsStep(W=w, Z=z, X_w=X * omega[:, None], Y_w=omega * z)


def augment(
    X_w: np.ndarray,
    y_w: np.ndarray,
    lam2: float,
    intercept_col: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Fold the l2 penalty into the design as sqrt(lam2) identity rows.

    Every column gets a ridge row except `intercept_col` when given; the
    whole stack is scaled by 1/sqrt(1 + lam2). The returned system turns
    the elastic-net problem into a plain lasso in compressed coordinates.
    """
    if lam2 < 0:
        raise ValueError("lam2 must be nonnegative")
    m, p = X_w.shape
    cols = [j for j in range(p) if j != intercept_col]
    ridge = np.zeros((len(cols), p))
    for row, j in enumerate(cols):
        ridge[row, j] = np.sqrt(lam2)
    scale = 1.0 / np.sqrt(1.0 + lam2)
    X_star = scale * np.vstack([X_w, ridge])
    y_star = np.concatenate([y_w, np.zeros(len(cols))])
    return X_star, y_star


def _soft(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def kkt_residual(
    X: np.ndarray, y: np.ndarray, beta: np.ndarray, xi: float, delta: np.ndarray
) -> float:
    """Worst violation of the lasso stationarity conditions.

    Active coordinates must satisfy |2 X_j^T (y - X b)| = xi*delta_j;
    inactive ones need only <=.
    """
    grad = np.abs(2.0 * (X.T @ (y - X @ beta)))
    bound = xi * np.asarray(delta, dtype=float)
    viol = np.where(beta != 0.0, np.abs(grad - bound), np.maximum(0.0, grad - bound))
    return float(viol.max()) if viol.size else 0.0


def lasso_solve(
    X_star: np.ndarray,
    y_star: np.ndarray,
    xi: float,
    delta: np.ndarray,
    tol: float = 1e-6,
    max_sweeps: int = 1000,
    beta_init: np.ndarray | None = None,
) -> np.ndarray:
    """Minimize ||y - Xb||^2 + xi * sum_j delta_j |b_j| by cyclic
    coordinate descent with soft-thresholding.

    Convergence is certified by the KKT residual; exceeding `max_sweeps`
    raises with the last iterate attached.
    """
    if xi < 0:
        raise ValueError("xi must be nonnegative")
    m, p = X_star.shape
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (p,):
        raise ValueError("delta length mismatch")
    X = np.asfortranarray(X_star)
    norms = np.einsum("ij,ij->j", X_star, X_star)
    beta = np.zeros(p) if beta_init is None else beta_init.astype(float).copy()
    resid = y_star - X @ beta

    def update(j: int) -> float:
        if norms[j] <= 0.0:
            return 0.0
        old = beta[j]
        col = X[:, j]
        rho = float(col @ resid) + norms[j] * old
        new = _soft(rho, xi * delta[j] / 2.0) / norms[j]
        if new != old:
            beta[j] = new
            np.add(resid, col * (old - new), out=resid)
        return abs(new - old)

    polish_tol = tol / (4.0 * max(1.0, float(np.sqrt(norms.max())) if p else 1.0))
    for _ in range(max_sweeps):
        # full sweep, then polish the active set before re-checking
        for j in range(p):
            update(j)
        for _ in range(200):
            active = np.flatnonzero(beta)
            change = 0.0
            for j in active:
                change = max(change, update(j))
            if change < polish_tol:
                break
        if kkt_residual(X_star, y_star, beta, xi, delta) <= tol:
            return beta
    raise ConvergenceError(
        f"coordinate descent did not converge in {max_sweeps} sweeps",
        beta=beta,
        kkt_residual=kkt_residual(X_star, y_star, beta, xi, delta),
    )


def recover_elastic_net(beta_star: np.ndarray, lam2: float) -> np.ndarray:
    """Map an augmented-lasso solution back to rescaled coefficients."""
    return np.sqrt(1.0 + lam2) * beta_star


def _cd_elastic_net(
    X_w: np.ndarray,
    Y_w: np.ndarray,
    lam1: float,
    lam2: float,
    delta: np.ndarray,
    beta_init: np.ndarray,
    tol: float,
    max_sweeps: int,
) -> tuple[np.ndarray, float, bool]:
    """Coordinate descent on the elastic-net problem without materializing
    the augmented rows: the ridge part of each coordinate update reduces to
    a lam2 term in the denominator (intercept column 0 exempt).

    Equivalent, update for update, to `lasso_solve` on `augment(...)` after
    the 1/sqrt(1+lam2) change of variable. Returns (beta, kkt, converged)
    with the KKT residual measured in the augmented system.
    """
    m, p = X_w.shape
    X = np.asfortranarray(X_w)
    norms = np.einsum("ij,ij->j", X_w, X_w)
    ridge = np.full(p, lam2)
    ridge[0] = 0.0
    denom = norms + ridge
    beta = beta_init.astype(float).copy()
    resid = Y_w - X @ beta
    thresh = lam1 * delta / 2.0

    def update(j: int) -> float:
        if denom[j] <= 0.0:
            return 0.0
        old = beta[j]
        col = X[:, j]
        rho = float(col @ resid) + norms[j] * old
        new = _soft(rho, thresh[j]) / denom[j]
        if new != old:
            beta[j] = new
            np.add(resid, col * (old - new), out=resid)
        return abs(new - old)

    def kkt() -> float:
        scale = 1.0 / np.sqrt(1.0 + lam2)
        g = np.abs(2.0 * (X_w.T @ resid - ridge * beta)) * scale
        bound = lam1 * delta * scale
        viol = np.where(beta != 0.0, np.abs(g - bound), np.maximum(0.0, g - bound))
        return float(viol.max()) if p else 0.0

    polish_tol = tol / (4.0 * max(1.0, float(np.sqrt(denom.max())) if p else 1.0))
    last = np.inf
    for _ in range(max_sweeps):
        for j in range(p):
            update(j)
        for _ in range(200):
            active = np.flatnonzero(beta)
            change = 0.0
            for j in active:
                change = max(change, update(j))
            if change < polish_tol:
                break
        last = kkt()
        if last <= tol:
            return beta, last, True
    return beta, last, False


def _binomial_deviance(r: np.ndarray, eta: np.ndarray) -> float:
    p = np.clip(expit(eta), 1e-12, 1.0 - 1e-12)
    return float(-2.0 * (r @ np.log(p) + (1.0 - r) @ np.log(1.0 - p)))


def _standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Zero-mean unit-variance columns 1..n; constant columns are zeroed
    out (they cannot discriminate outcomes) and marked unusable."""
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    mu[0] = 0.0
    sigma[0] = 1.0
    usable = sigma > 1e-12
    safe_sigma = np.where(usable, sigma, 1.0)
    Xs = (X - mu) / safe_sigma
    Xs[:, ~usable] = 0.0
    Xs[:, 0] = 1.0
    return Xs, mu, safe_sigma, usable


def _lambda_grid_max(X_w: np.ndarray, Y_w: np.ndarray, delta: np.ndarray) -> float:
    """Smallest l1 weight that zeroes every penalized coordinate, taken at
    the intercept-only fit of the first reweighted system."""
    col0 = X_w[:, 0]
    denom = float(col0 @ col0)
    beta0 = float(col0 @ Y_w) / denom if denom > 0 else 0.0
    r0 = Y_w - col0 * beta0
    grad = 2.0 * np.abs(X_w[:, 1:].T @ r0)
    with np.errstate(divide="ignore"):
        vals = np.where(delta[1:] > 0, grad / np.maximum(delta[1:], 1e-12), 0.0)
    lam = float(vals.max()) if vals.size else 0.0
    return max(lam, 1e-12)


def _lambdas_for(alpha: float, s: float, lam_max: float) -> tuple[float, float]:
    """Map a grid point to concrete penalty weights.

    alpha is the ridge share lam2/(lam1+lam2); s in (0,1) positions the fit
    along the shrinkage path, s -> 1 meaning weak shrinkage. alpha = 1 is
    pure ridge, driven by the same path position.
    """
    if alpha >= 1.0:
        return 0.0, (1.0 - s) * lam_max
    lam1 = (1.0 - s) * lam_max
    lam2 = alpha / (1.0 - alpha) * lam1
    return lam1, lam2


def _irls_fit(
    X: np.ndarray,
    r: np.ndarray,
    lam1: float,
    lam2: float,
    delta: np.ndarray,
    cfg: EnetConfig,
    beta_init: np.ndarray | None = None,
    tol: float | None = None,
) -> tuple[np.ndarray, IrlsStep, float, bool, int]:
    """Alternate reweighting and penalized least squares until the
    coefficient vector stabilizes. Returns (beta, last step, kkt,
    converged, iterations)."""
    p = X.shape[1]
    beta = np.zeros(p) if beta_init is None else beta_init.astype(float).copy()
    tol = cfg.solver_tol if tol is None else tol
    step = irls_step(beta, X, r)
    kkt = np.inf
    inner_ok = True
    for it in range(1, cfg.max_irls + 1):
        resid_old = step.Y_w - step.X_w @ beta
        obj_old = float(resid_old @ resid_old) + lam2 * float(
            beta[1:] @ beta[1:]
        ) + lam1 * float(np.abs(beta) @ delta)
        beta_new, kkt, inner_ok = _cd_elastic_net(
            step.X_w, step.Y_w, lam1, lam2, delta, beta, tol, cfg.max_sweeps
        )
        resid_new = step.Y_w - step.X_w @ beta_new
        obj_new = float(resid_new @ resid_new) + lam2 * float(
            beta_new[1:] @ beta_new[1:]
        ) + lam1 * float(np.abs(beta_new) @ delta)
        # descent on the fixed-weights objective: the inner solver starts
        # from the previous iterate, so it can only improve it
        assert obj_new <= obj_old + 1e-8, "inner objective increased"
        delta_inf = float(np.max(np.abs(beta_new - beta))) if p else 0.0
        beta = beta_new
        if delta_inf < cfg.irls_tol:
            return beta, step, kkt, inner_ok, it
        step = irls_step(beta, X, r)
    return beta, step, kkt, False, cfg.max_irls


def _stratified_folds(
    r: np.ndarray, n_folds: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Deal shuffled pass and fail indices round-robin into folds."""
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for cls in (1.0, 0.0):
        idx = np.flatnonzero(r == cls)
        rng.shuffle(idx)
        for pos, row in enumerate(idx):
            folds[pos % n_folds].append(int(row))
    return [np.array(sorted(f), dtype=int) for f in folds]


def fit(scm: Scm, cfg: EnetConfig | None = None) -> EnetModel:
    """Cross-validated fit over the (alpha, s) grid.

    Grids are evaluated by mean held-out binomial deviance on folds
    stratified by outcome. Among grid points within one standard error of
    the best mean, the strongest penalty wins: smallest s first, then the
    largest ridge share. Plain mean-minimization would systematically pick
    the weakest penalty with no l2 term whenever a column separates the
    classes, and a pure l1 fit keeps a single representative of each
    correlated column cluster, which defeats coefficient grouping. Suites
    too small to stratify fall back to the grid midpoint. The chosen point
    is refit on all rows from zero.
    """
    cfg = cfg or EnetConfig()
    r = scm.r
    if r.min() == r.max():
        raise DegenerateInputError("degenerate response: need both classes")
    n_cols = scm.X.shape[1]
    delta = cfg.resolve_delta(n_cols)

    Xs, mu, sigma, usable = _standardize(scm.X)
    step0 = irls_step(np.zeros(n_cols), Xs, r)
    lam_max = _lambda_grid_max(step0.X_w, step0.Y_w, delta)

    n_pass = int((r == 1.0).sum())
    n_fail = int((r == 0.0).sum())
    n_folds = min(cfg.cv_folds, n_pass, n_fail)

    cv_fallback = n_folds < 2
    if cv_fallback:
        best_alpha, best_s = 0.5, 0.5
    else:
        rng = np.random.default_rng(cfg.seed)
        folds = _stratified_folds(r, n_folds, rng)
        cv_tol = max(cfg.solver_tol, 1e-5)
        keys = [(a, s) for a in cfg.alpha_grid for s in cfg.s_grid]
        fold_dev: dict[tuple[float, float], list[float]] = {k: [] for k in keys}
        for fold in folds:
            mask = np.ones(len(r), dtype=bool)
            mask[fold] = False
            X_tr, r_tr = Xs[mask], r[mask]
            X_te, r_te = Xs[fold], r[fold]
            for alpha in cfg.alpha_grid:
                warm: np.ndarray | None = None
                for s in sorted(cfg.s_grid):
                    lam1, lam2 = _lambdas_for(alpha, s, lam_max)
                    beta, _, _, _, _ = _irls_fit(
                        X_tr, r_tr, lam1, lam2, delta, cfg,
                        beta_init=warm, tol=cv_tol,
                    )
                    warm = beta
                    fold_dev[(alpha, s)].append(
                        _binomial_deviance(r_te, X_te @ beta)
                    )
        mean_dev = {k: float(np.mean(v)) for k, v in fold_dev.items()}
        best_key = min(mean_dev, key=lambda k: (mean_dev[k], k[1], k[0]))
        se_best = float(
            np.std(fold_dev[best_key], ddof=1) / np.sqrt(n_folds)
        )
        thresh = mean_dev[best_key] + se_best
        eligible = [k for k in keys if mean_dev[k] <= thresh + 1e-15]
        best_alpha, best_s = min(eligible, key=lambda k: (k[1], -k[0]))

    lam1, lam2 = _lambdas_for(best_alpha, best_s, lam_max)
    beta_std, last_step, kkt, converged, iters = _irls_fit(
        Xs, r, lam1, lam2, delta, cfg
    )

    resid = last_step.Y_w - last_step.X_w @ beta_std
    objective = float(resid @ resid) + lam2 * float(
        beta_std[1:] @ beta_std[1:]
    ) + lam1 * float(np.abs(beta_std) @ delta)

    # map back to the original count scale
    beta_orig = np.where(usable[1:], beta_std[1:] / sigma[1:], 0.0)
    beta0 = float(beta_std[0] - np.sum(beta_std[1:] * mu[1:] / sigma[1:]))
    selected = tuple(
        sid for sid, b in zip(scm.candidate_ids, beta_orig) if b != 0.0
    )

    diagnostics = FitDiagnostics(
        converged=converged,
        irls_iterations=iters,
        kkt_residual=kkt,
        objective=objective,
        X_w=last_step.X_w,
        Y_w=last_step.Y_w,
        cv_fallback=cv_fallback,
    )
    model = EnetModel(
        beta0=beta0,
        beta=beta_orig,
        beta_rescaled=(1.0 + lam2) * beta_orig,
        beta_std=beta_std,
        alpha=best_alpha,
        s=best_s,
        lam1=lam1,
        lam2=lam2,
        xi=lam1 / np.sqrt(1.0 + lam2),
        delta=delta,
        candidate_ids=scm.candidate_ids,
        selected=selected,
        diagnostics=diagnostics,
    )
    return model


def parse_spectrum(text: str) -> Scm:
    """Read an externally produced spectrum.

    Tab-separated; header row `test<TAB>outcome<TAB><sid>...`, then one row
    per test: id, pass|fail, counts per statement column.
    """
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise DegenerateInputError("empty spectrum file")
    header = lines[0].split("\t")
    if len(header) < 3 or header[0] != "test" or header[1] != "outcome":
        raise ValueError("spectrum header must be `test<TAB>outcome<TAB>ids...`")
    try:
        sids = tuple(int(tok) for tok in header[2:])
    except ValueError:
        raise ValueError("spectrum header ids must be integers") from None
    rows, resp, ids = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields")
        outcome = parts[1].strip()
        if outcome not in ("pass", "fail"):
            raise ValueError(f"line {lineno}: outcome must be pass or fail")
        ids.append(parts[0].strip())
        resp.append(1.0 if outcome == "pass" else 0.0)
        try:
            rows.append([1.0] + [float(tok) for tok in parts[2:]])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric count") from None
    r = np.array(resp)
    if r.min() == r.max():
        raise DegenerateInputError("spectrum has a single outcome class")
    return Scm(X=np.array(rows), r=r, test_ids=tuple(ids), candidate_ids=sids)


def export_spectrum(scm: Scm) -> str:
    """Inverse of parse_spectrum."""
    header = "test\toutcome\t" + "\t".join(str(s) for s in scm.candidate_ids)
    out = [header]
    for i, tid in enumerate(scm.test_ids):
        outcome = "pass" if scm.r[i] == 1.0 else "fail"
        counts = "\t".join(f"{v:g}" for v in scm.X[i, 1:])
        out.append(f"{tid}\t{outcome}\t{counts}")
    return "\n".join(out) + "\n"
