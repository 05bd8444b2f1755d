"""Offline-squeezing requirements for building CV graph states.

The generation matrix ``M(s) = C S(s)`` can be factored (Bloch-Messiah) into
passive optics around a single layer of squeezers, so its singular values are
the squeeze factors that must be supplied offline. For large ``s`` the top
half approach ``s * sqrt(1 + k_i^2)`` with ``k_i`` the adjacency singular
values, and ``k_i <= maxdeg`` bounds the overhead by ``sqrt(1 + maxdeg^2)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

import numpy as np

from cvcluster.errors import ValidationError
from cvcluster.gaussian import CONVENTIONS, generation_matrix
from cvcluster.graph import Graph

#: Squeezing (dB) of each of the two online squeezers in one CZ gate.
ONLINE_CZ_SQUEEZER_DB = 4.18
#: Tolerance used when comparing to figures that were rounded for print.
ROUNDING_TOLERANCE_DB = 0.05


def db(s) -> np.ndarray | float:
    """Squeezing in dB: ``10 log10(s^2)``."""
    return 10.0 * np.log10(np.asarray(s, dtype=float) ** 2)


def _check_accuracy(s: float) -> None:
    if not s > 0:
        raise ValidationError(f"accuracy must be positive, got {s}")


def adjacency_singular_values(g: Graph) -> np.ndarray:
    """Singular values of the adjacency matrix, sorted descending.

    The matrix is symmetric, so these are the absolute eigenvalues.
    """
    ev = np.linalg.eigvalsh(g.adjacency_matrix().astype(float))
    return np.sort(np.abs(ev))[::-1]


def large_s_squeezing(g: Graph, s: float) -> np.ndarray:
    """Large-``s`` offline squeeze factors ``s sqrt(1 + k_i^2)``, descending."""
    _check_accuracy(s)
    k = adjacency_singular_values(g)
    return np.sort(s * np.sqrt(1.0 + k**2))[::-1]


def overhead_bound(g: Graph | None = None, max_degree: int | None = None) -> float:
    """``K = sqrt(1 + maxdeg^2)``; pass ``max_degree`` directly for an m-rail bound."""
    if max_degree is None:
        if g is None:
            raise ValidationError("give a graph or a max degree")
        max_degree = g.max_degree()
    if max_degree < 0:
        raise ValidationError(f"degree must be non-negative, got {max_degree}")
    return float(np.sqrt(1.0 + max_degree**2))


def two_mode_lambda(s: float) -> tuple[float, float]:
    """Closed-form singular values ``(lambda_+, lambda_-)`` of the two-mode ``M(s)``."""
    _check_accuracy(s)
    s4 = s**4
    root = np.sqrt(1.0 + 4.0 * s4 * s4)
    lp = np.sqrt(1.0 + 2.0 * s4 + root) / (np.sqrt(2.0) * s)
    # 1 + 2 s^4 - root cancels badly for large s; use lambda_- = 1 / lambda_+
    return float(lp), float(1.0 / lp)


def exact_singular_values(g: Graph, s: float) -> np.ndarray:
    """All ``2n`` singular values of ``M(s)``, descending."""
    _check_accuracy(s)
    return np.linalg.svd(generation_matrix(g, s).L, compute_uv=False)


@dataclass
class ResourceReport:
    n: int
    edges: int
    max_degree: int
    accuracy: float
    mode: str  # "exact" (adjacency SVD) or "bound" (sqrt(1 + maxdeg^2) on every mode)
    adjacency_singulars: list[float]
    per_mode_squeeze: list[float]
    db_per_mode: list[float]
    overhead_bound: float
    overhead_bound_db: float
    canonical_cost_db: float
    decompositional_cost_db: float
    savings_db: float
    cz_squeezer_db: float
    exact_singulars: list[float] | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conventions"] = CONVENTIONS
        return d

    def table(self) -> str:
        lines = [
            f"# conventions: ordering {CONVENTIONS['ordering']}, hbar=1, vacuum variance 1/2, dB = 10 log10(s^2)",
            f"modes {self.n}  edges {self.edges}  maxdeg {self.max_degree}  accuracy s={self.accuracy:g}",
            f"overhead bound K = {self.overhead_bound:.6f}  (+{self.overhead_bound_db:.4f} dB)",
            f"{'mode':>5} {'k_i':>10} {'s_i':>12} {'dB':>10}",
        ]
        for i, (k, si, d) in enumerate(zip(self.adjacency_singulars, self.per_mode_squeeze, self.db_per_mode), 1):
            lines.append(f"{i:>5} {k:>10.6f} {si:>12.6f} {d:>10.4f}")
        lines += [
            f"canonical cost        {self.canonical_cost_db:.4f} dB",
            f"decompositional cost  {self.decompositional_cost_db:.4f} dB ({self.mode})",
            f"savings               {self.savings_db:.4f} dB",
        ]
        if self.exact_singulars is not None:
            lines.append("M(s) singular values: " + " ".join(f"{x:.6g}" for x in self.exact_singulars))
        return "\n".join(lines)


def cost_comparison(
    g: Graph,
    s: float,
    bound: bool = False,
    exact_svd: bool = False,
    cz_squeezer_db: float = ONLINE_CZ_SQUEEZER_DB,
) -> ResourceReport:
    """Canonical (offline ``s`` per mode + two online squeezers per CZ) vs decompositional dB cost."""
    _check_accuracy(s)
    k = adjacency_singular_values(g)
    K = overhead_bound(g)
    if bound:
        per_mode = np.full(g.n, K * s)
    else:
        per_mode = large_s_squeezing(g, s)
    per_db = db(per_mode)
    canonical = g.n * float(db(s)) + len(g.edges) * 2 * cz_squeezer_db
    decomp = float(per_db.sum())
    return ResourceReport(
        n=g.n,
        edges=len(g.edges),
        max_degree=g.max_degree(),
        accuracy=float(s),
        mode="bound" if bound else "exact",
        adjacency_singulars=k.tolist(),
        per_mode_squeeze=per_mode.tolist(),
        db_per_mode=per_db.tolist(),
        overhead_bound=K,
        overhead_bound_db=float(db(K)),
        canonical_cost_db=canonical,
        decompositional_cost_db=decomp,
        savings_db=canonical - decomp,
        cz_squeezer_db=cz_squeezer_db,
        exact_singulars=exact_singular_values(g, s).tolist() if exact_svd else None,
    )


CSV_FIELDS = ["graph_id", "n", "edges", "maxdeg", "K", "canonical_db", "decompositional_db", "savings_db"]


def reports_to_csv(reports: dict[str, ResourceReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for gid, r in reports.items():
        w.writerow(
            [gid, r.n, r.edges, r.max_degree, f"{r.overhead_bound:.12g}", f"{r.canonical_cost_db:.12g}",
             f"{r.decompositional_cost_db:.12g}", f"{r.savings_db:.12g}"]
        )
    return buf.getvalue()
