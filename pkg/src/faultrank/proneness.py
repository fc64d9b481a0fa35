"""Per-statement fault-proneness likelihoods and penalty modifiers.

Static likelihoods come from an equal-weight combination of normalized
complexity metrics squashed through a rescaled logistic; only the top
fraction q of statements keeps a nonzero value. Refinement then discounts
statements that keep appearing in clean passing runs. Finally the
likelihoods map to per-statement shrinkage modifiers in [0.7, 1.0].
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .minilang.metrics import MetricRow

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FplTable:
    static_fpl: np.ndarray  # per statement id, in [0,1]
    refined_fpl: np.ndarray  # per statement id, in [0,1]
    fault_prone: np.ndarray  # bool per statement id
    theta: float

    def __len__(self) -> int:
        return len(self.static_fpl)


def _rescaled_sigmoid(u: np.ndarray) -> np.ndarray:
    # map sigma(u) for u in [0,1] affinely onto [0,1]
    lo = 0.5  # sigma(0)
    hi = 1.0 / (1.0 + math.exp(-1.0))
    return (1.0 / (1.0 + np.exp(-u)) - lo) / (hi - lo)


def _minmax(col: np.ndarray) -> np.ndarray:
    lo = col.min()
    hi = col.max()
    if hi - lo <= 0:
        return np.zeros_like(col, dtype=float)
    return (col - lo) / (hi - lo)


def estimate_fpl(metrics: tuple[MetricRow, ...], q: float = 0.25, theta: float = 1.75) -> FplTable:
    """Static fault-proneness from code metrics.

    Equal-weight mean of the min-max-normalized metric columns, squashed
    through a logistic rescaled to [0,1]. The top q fraction of statements
    (ties broken by lower id) is flagged fault-prone; every other
    statement's likelihood is zeroed.
    """
    n = len(metrics)
    cols = np.array(
        [
            [m.nesting_depth for m in metrics],
            [m.cyclomatic for m in metrics],
            [m.volume for m in metrics],
            [m.token_length for m in metrics],
            [1.0 if m.in_loop else 0.0 for m in metrics],
        ],
        dtype=float,
    )
    z = np.vstack([_minmax(c) for c in cols])
    raw = _rescaled_sigmoid(z.mean(axis=0))

    n_prone = min(n, max(1, int(n * q + 0.5)))
    order = sorted(range(n), key=lambda j: (-raw[j], j))
    prone = np.zeros(n, dtype=bool)
    for j in order[:n_prone]:
        prone[j] = True
    static = np.where(prone, raw, 0.0)
    return FplTable(
        static_fpl=static,
        refined_fpl=static.copy(),
        fault_prone=prone,
        theta=theta,
    )


def refine_fpl(
    table: FplTable,
    clean_passing_ebds: list[frozenset[int]],
    theta: float | None = None,
) -> FplTable:
    """Discount likelihoods by appearance in clean passing runs.

    With k clean passing runs and c of them whose expanded slice contains
    the statement: refined = ((k - c^theta)/k) * static when c^theta < k,
    else the 0.1 floor. Zero-likelihood statements stay zero.
    """
    theta = table.theta if theta is None else theta
    k = len(clean_passing_ebds)
    if k == 0:
        log.warning("no clean passing runs: refined likelihoods equal static ones")
        return replace(table, refined_fpl=table.static_fpl.copy(), theta=theta)

    refined = np.zeros_like(table.static_fpl)
    for sid in range(len(table)):
        static = table.static_fpl[sid]
        if static == 0.0:
            continue
        c = sum(1 for ebds in clean_passing_ebds if sid in ebds)
        ctheta = c**theta
        if ctheta < k:
            refined[sid] = (k - ctheta) / k * static
        else:
            refined[sid] = 0.1
    return replace(table, refined_fpl=refined, theta=theta)


def penalty_weights(
    table: FplTable,
    theta_low: float = 3.5,
    theta_high: float = 0.3,
) -> np.ndarray:
    """Shrinkage modifiers delta per statement, from refined likelihoods.

    delta = 1 - fpl^theta_low for fpl <= 0.5, else 1 - theta_high*fpl,
    clamped to [0.7, 1.0]. fpl = 0 gives delta = 1 (no extra shrinkage
    relief); the most fault-prone statements bottom out at 0.7.
    """
    fpl = table.refined_fpl
    delta = np.where(fpl <= 0.5, 1.0 - fpl**theta_low, 1.0 - theta_high * fpl)
    return np.clip(delta, 0.7, 1.0)


def export_fpl(table: FplTable, refined: bool = True) -> str:
    """Serialize as `statement_id<TAB>fpl` lines."""
    col = table.refined_fpl if refined else table.static_fpl
    return "".join(f"{sid}\t{col[sid]:.12g}\n" for sid in range(len(table)))


def import_fpl(text: str, n_statements: int, theta: float = 1.75) -> FplTable:
    """Parse `statement_id<TAB>fpl` lines into a table used verbatim.

    Statements absent from the file get likelihood 0. Nonzero entries are
    flagged fault-prone.
    """
    static = np.zeros(n_statements, dtype=float)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected `id<TAB>fpl`")
        sid = int(parts[0])
        fpl = float(parts[1])
        if not 0 <= sid < n_statements:
            raise ValueError(f"line {lineno}: statement id {sid} out of range")
        if not 0.0 <= fpl <= 1.0:
            raise ValueError(f"line {lineno}: fpl {fpl} outside [0,1]")
        static[sid] = fpl
    prone = static > 0
    return FplTable(
        static_fpl=static,
        refined_fpl=static.copy(),
        fault_prone=prone,
        theta=theta,
    )
