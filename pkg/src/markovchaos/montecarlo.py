"""Monte Carlo demonstration of the fourth-moment criteria.

Samples are produced in fixed-size chunks.  Chunk ``i`` of stream ``s`` draws
from ``SeedSequence(seed, spawn_key=(s, i))``, so results depend only on the
configuration and never on how many worker threads are used.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .exactpoly import MultiPoly, evaluate
from .fourthmoment import BetaTarget, GammaTarget, GaussianTarget, TargetLaw, statistic_weights
from .special import betainc, gammainc_lower, normal_cdf
from .structures import JacobiCoordinate, LaguerreCoordinate, OUCoordinate, ProductStructure


# ---------------------------------------------------------------------------
# Coordinate laws and sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalLaw:
    def to_dict(self) -> dict:
        return {"law": "normal"}


@dataclass(frozen=True)
class GammaLaw:
    shape: float
    centered: bool = False

    def __post_init__(self):
        if not self.shape > 0:
            raise ValueError(f"gamma shape must be positive, got {self.shape}")

    def to_dict(self) -> dict:
        return {"law": "gamma", "shape": self.shape, "centered": self.centered}


@dataclass(frozen=True)
class BetaLaw:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"beta parameters must be positive, got ({self.alpha}, {self.beta})")

    def to_dict(self) -> dict:
        return {"law": "beta", "alpha": self.alpha, "beta": self.beta}


CoordinateLaw = NormalLaw | GammaLaw | BetaLaw


def law_from_dict(entry: dict) -> CoordinateLaw:
    kind = entry.get("law") if isinstance(entry, dict) else None
    allowed = {
        "normal": {"law"},
        "gamma": {"law", "shape", "centered"},
        "beta": {"law", "alpha", "beta"},
    }
    if kind not in allowed:
        raise ValueError(f"unknown coordinate law {entry!r}")
    extra = set(entry) - allowed[kind]
    if extra:
        raise ValueError(f"unknown fields for {kind} law: {sorted(extra)}")
    if kind == "normal":
        return NormalLaw()
    if kind == "gamma":
        return GammaLaw(float(entry["shape"]), bool(entry.get("centered", False)))
    return BetaLaw(float(entry["alpha"]), float(entry["beta"]))


def law_for(coord) -> CoordinateLaw:
    """Invariant law of a structure coordinate."""
    if isinstance(coord, OUCoordinate):
        return NormalLaw()
    if isinstance(coord, LaguerreCoordinate):
        return GammaLaw(float(coord.shape))
    if isinstance(coord, JacobiCoordinate):
        return BetaLaw(float(coord.alpha), float(coord.beta))
    raise TypeError(f"unsupported coordinate {coord!r}")


def gamma_variates(rng: np.random.Generator, shape: float, size: int) -> np.ndarray:
    """Gamma(shape) draws by Marsaglia-Tsang rejection with the cheap squeeze test."""
    if shape < 1:
        g = gamma_variates(rng, shape + 1, size)
        return g * rng.random(size) ** (1 / shape)
    d = shape - 1 / 3
    c = 1 / math.sqrt(9 * d)
    out = np.empty(size)
    pending = np.arange(size)
    while pending.size:
        m = pending.size
        x = rng.standard_normal(m)
        u = rng.random(m)
        t = 1 + c * x
        v = t * t * t
        x2 = x * x
        ok = (u < 1 - 0.0331 * x2 * x2) & (t > 0)
        rest = np.flatnonzero(~ok & (t > 0))
        if rest.size:
            vr = v[rest]
            ok[rest] = np.log(u[rest]) < 0.5 * x2[rest] + d * (1 - vr + np.log(vr))
        if m == size:
            out[ok] = d * v[ok]
        else:
            out[pending[ok]] = d * v[ok]
        pending = pending[~ok]
    return out


def _draw(rng: np.random.Generator, law: CoordinateLaw, shape: Tuple[int, int]) -> np.ndarray:
    n = shape[0] * shape[1]
    if isinstance(law, NormalLaw):
        out = rng.standard_normal(n)
    elif isinstance(law, GammaLaw):
        out = gamma_variates(rng, law.shape, n)
        if law.centered:
            out -= law.shape
    else:
        ga = gamma_variates(rng, law.alpha, n)
        gb = gamma_variates(rng, law.beta, n)
        out = ga / (ga + gb)
    return out.reshape(shape)


@dataclass(frozen=True)
class SampleConfig:
    """Rows of i.i.d. coordinates.

    ``laws`` is repeated cyclically to fill ``dim`` columns, which lets a short
    pattern describe arbitrarily long sequences.
    """

    laws: Tuple[CoordinateLaw, ...]
    sample_count: int
    seed: int
    dim: Optional[int] = None
    chunk_size: int = 2048
    stream: int = 0

    def __post_init__(self):
        object.__setattr__(self, "laws", tuple(self.laws))
        if not self.laws:
            raise ValueError("at least one coordinate law is required")
        if self.dim is None:
            object.__setattr__(self, "dim", len(self.laws))
        if self.dim < 1 or self.sample_count < 1 or self.chunk_size < 1:
            raise ValueError("dim, sample_count and chunk_size must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def from_structure(cls, S: ProductStructure, sample_count: int, seed: int, **kw) -> "SampleConfig":
        return cls(tuple(law_for(c) for c in S.coords), sample_count, seed, **kw)

    @property
    def n_chunks(self) -> int:
        return -(-self.sample_count // self.chunk_size)

    def column_laws(self) -> List[CoordinateLaw]:
        return [self.laws[j % len(self.laws)] for j in range(self.dim)]

    def to_dict(self) -> dict:
        return {
            "laws": [law.to_dict() for law in self.laws],
            "sample_count": self.sample_count,
            "seed": self.seed,
            "dim": self.dim,
            "chunk_size": self.chunk_size,
            "stream": self.stream,
        }


def sample_chunk(config: SampleConfig, index: int) -> np.ndarray:
    rows = min(config.chunk_size, config.sample_count - index * config.chunk_size)
    seq = np.random.SeedSequence(config.seed, spawn_key=(config.stream, index))
    rng = np.random.Generator(np.random.PCG64(seq))
    period = len(config.laws)
    out = np.empty((rows, config.dim))
    for pos, law in enumerate(config.laws[: config.dim]):
        ncols = len(range(pos, config.dim, period))
        out[:, pos::period] = _draw(rng, law, (rows, ncols))
    return out


def iter_chunks(config: SampleConfig) -> Iterator[np.ndarray]:
    for i in range(config.n_chunks):
        yield sample_chunk(config, i)


def sample(config: SampleConfig) -> np.ndarray:
    """Full ``(sample_count, dim)`` sample matrix."""
    return np.concatenate(list(iter_chunks(config)), axis=0)


# ---------------------------------------------------------------------------
# Homogeneous sums
# ---------------------------------------------------------------------------

FAMILY_KINDS = ("paired-product", "single-term", "table", "polynomial")


@dataclass(frozen=True)
class HomogeneousSumSpec:
    """Coefficient family of ``P_n = sum a_n(i_1..i_d) x_{i_1}...x_{i_d}``.

    * ``paired-product``: ``n^{-1/2} sum_{i=1}^n prod_{j=1}^d x_{d(i-1)+j}``
    * ``single-term``: ``x_1 x_2 ... x_d`` for every ``n``
    * ``table``: fixed coefficients on 1-based, strictly increasing index tuples
    * ``polynomial``: a fixed :class:`MultiPoly`
    """

    kind: str
    degree: int = 2
    table: Optional[Tuple[Tuple[Tuple[int, ...], float], ...]] = None
    poly: Optional[MultiPoly] = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family {self.kind!r}")
        if self.degree < 1:
            raise ValueError("degree must be positive")
        if self.kind == "table":
            if not self.table:
                raise ValueError("table family needs coefficients")
            entries = tuple((tuple(int(i) for i in idx), float(c)) for idx, c in dict(self.table).items())
            for idx, _ in entries:
                if len(idx) != self.degree or any(i < 1 for i in idx):
                    raise ValueError(f"index {idx} does not match degree {self.degree}")
                if any(a >= b for a, b in zip(idx, idx[1:])):
                    raise ValueError(f"indices must be strictly increasing, got {idx}")
            object.__setattr__(self, "table", entries)
        if self.kind == "polynomial" and self.poly is None:
            raise ValueError("polynomial family needs a polynomial")

    def dimension(self, n: int = 1) -> int:
        if self.kind == "paired-product":
            return self.degree * n
        if self.kind == "single-term":
            return self.degree
        if self.kind == "table":
            return max(max(idx) for idx, _ in self.table)
        return self.poly.dim


def evaluate_sequence(spec: HomogeneousSumSpec, samples: np.ndarray, n: int = 1) -> np.ndarray:
    """Evaluate the ``n``-th member of the family on every sample row."""
    samples = np.asarray(samples, dtype=float)
    rows, cols = samples.shape
    need = spec.dimension(n)
    if need > cols:
        raise IndexError(f"family needs {need} coordinates, samples have {cols}")
    d = spec.degree
    if spec.kind == "paired-product":
        if d == 2:
            pairs = samples[:, 0 : 2 * n : 2] * samples[:, 1 : 2 * n : 2]
            return pairs.sum(axis=1) / math.sqrt(n)
        blocks = samples[:, : d * n].reshape(rows, n, d).prod(axis=2)
        return blocks.sum(axis=1) / math.sqrt(n)
    if spec.kind == "single-term":
        return samples[:, :d].prod(axis=1)
    if spec.kind == "table":
        out = np.zeros(rows)
        for idx, c in spec.table:
            out += c * samples[:, [i - 1 for i in idx]].prod(axis=1)
        return out
    return np.asarray(evaluate(spec.poly, [samples[:, j] for j in range(spec.poly.dim)]), dtype=float) * np.ones(rows)


# ---------------------------------------------------------------------------
# Estimates and goodness of fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentEstimate:
    value: float
    se: float


def empirical_moments(values, orders: Sequence[int] = (1, 2, 3, 4)) -> Dict[int, MomentEstimate]:
    """``m_k = mean(v^k)`` with standard error ``std(v^k) / sqrt(N)``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no values")
    out = {}
    for k in orders:
        p = v ** k
        se = float(p.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        out[k] = MomentEstimate(float(p.mean()), se)
    return out


def target_cdf(t: TargetLaw, x: float) -> float:
    if isinstance(t, GaussianTarget):
        return normal_cdf(x)
    if isinstance(t, GammaTarget):
        return gammainc_lower(float(t.nu), x)
    if isinstance(t, BetaTarget):
        return betainc(float(t.alpha), float(t.beta), x)
    raise TypeError(f"unsupported target {t!r}")


def ks_statistic(values, t: TargetLaw) -> float:
    """One-sample Kolmogorov-Smirnov distance ``sup |F_N - F|``."""
    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    if n == 0:
        raise ValueError("no values")
    cdf = np.fromiter((target_cdf(t, float(x)) for x in v), dtype=float, count=n)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Experiment:
    family: HomogeneousSumSpec
    laws: Tuple[CoordinateLaw, ...]
    n_grid: Tuple[int, ...]
    sample_count: int
    seed: int
    target: TargetLaw = field(default_factory=GaussianTarget)
    chunk_size: int = 2048
    workers: int = 1


@dataclass
class ReportRow:
    n: int
    moments: Dict[int, MomentEstimate]
    statistic: float
    ks: float

    def as_record(self) -> dict:
        rec = {"n": self.n}
        for k in (2, 3, 4):
            rec[f"m{k}"] = self.moments[k].value
            rec[f"m{k}_se"] = self.moments[k].se
        rec["statistic"] = self.statistic
        rec["ks"] = self.ks
        return rec


CSV_COLUMNS = ("n", "m2", "m2_se", "m3", "m3_se", "m4", "m4_se", "statistic", "ks")


@dataclass
class EmpiricalReport:
    target: TargetLaw
    rows: List[ReportRow]

    @property
    def summary(self) -> dict:
        first, last = self.rows[0], self.rows[-1]
        return {
            "statistic_decreased": abs(last.statistic) < abs(first.statistic),
            "ks_decreased": last.ks < first.ks,
            "final_abs_statistic": abs(last.statistic),
            "final_ks": last.ks,
        }

    def to_dict(self) -> dict:
        return {
            "target": self.target.to_dict(),
            "rows": [r.as_record() for r in self.rows],
            "summary": self.summary,
        }

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for r in self.rows:
            rec = r.as_record()
            lines.append(",".join(repr(rec[c]) if c != "n" else str(rec[c]) for c in CSV_COLUMNS))
        return "\n".join(lines) + "\n"


def sequence_values(exp: Experiment, n: int) -> np.ndarray:
    """Evaluations of ``P_n`` on ``exp.sample_count`` rows, chunk by chunk."""
    config = SampleConfig(
        exp.laws, exp.sample_count, exp.seed,
        dim=exp.family.dimension(n), chunk_size=exp.chunk_size, stream=n,
    )

    def one(i):
        return evaluate_sequence(exp.family, sample_chunk(config, i), n)

    if exp.workers > 1:
        with ThreadPoolExecutor(exp.workers) as pool:
            parts = list(pool.map(one, range(config.n_chunks)))
    else:
        parts = [one(i) for i in range(config.n_chunks)]
    return np.concatenate(parts)


def run_experiment(exp: Experiment) -> EmpiricalReport:
    weights = {k: float(w) for k, w in statistic_weights(exp.target).items()}
    shift = float(exp.target.mean)
    rows = []
    for n in exp.n_grid:
        values = sequence_values(exp, n)
        m = empirical_moments(values, (1, 2, 3, 4))
        stat = sum(w * (1.0 if k == 0 else m[k].value) for k, w in weights.items())
        rows.append(ReportRow(n, m, stat, ks_statistic(values + shift, exp.target)))
    return EmpiricalReport(exp.target, rows)
