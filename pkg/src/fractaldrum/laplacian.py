"""Dirichlet Laplacian on grid domains, eigensolvers and multiplicity clustering.

Sign convention: the assembled matrix approximates the Laplacian itself, so
it is negative definite and every raw eigenvalue ``lam`` is negative.  Spectra
are reported as *magnitudes* ``kappa = (-lam) ** exponent`` with the default
``exponent = 0.5`` (wavenumbers); under a contraction by ``c`` wavenumbers
scale by ``1/c`` while raw eigenvalues scale by ``1/c**2``.

:class:`Spectrum` keeps magnitudes and multiplicities in log form because
analytic spectra of deep prefractals (``3**1000 * n * pi`` with multiplicity
``2**1000``) overflow doubles.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import ArgumentError, ConvergenceError, ConventionError
from .grid import GridDomain

WAVENUMBER = "wavenumber"
DENSE_CAP = 4000


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Distinct spectral magnitudes (ascending) with multiplicities.

    Attributes
    ----------
    log_magnitudes, log_multiplicities : ndarray
        Natural logs of the distinct magnitudes and their multiplicities.
    eigenvalues : ndarray, optional
        Raw Laplacian eigenvalues retained, grouped cluster by cluster in
        ascending magnitude.
    eigenvectors : ndarray, optional
        Columns matching ``eigenvalues``.
    cluster : ndarray, optional
        Cluster number of every raw eigenvalue.
    meta : dict
        Provenance: ``level``, ``spacing``, ``convention``, ``exponent``,
        ``rel_tol`` when known.
    """

    log_magnitudes: np.ndarray
    log_multiplicities: np.ndarray
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None
    cluster: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lk = np.asarray(self.log_magnitudes, dtype=float).ravel()
        lm = np.asarray(self.log_multiplicities, dtype=float).ravel()
        if lk.shape != lm.shape:
            raise ArgumentError("magnitudes and multiplicities differ in length")
        if np.any(np.diff(lk) <= 0):
            raise ArgumentError("magnitudes must be strictly ascending")
        if np.any(lm < -1e-12):
            raise ArgumentError("multiplicities must be >= 1")
        for a in (lk, lm):
            a.setflags(write=False)
        object.__setattr__(self, "log_magnitudes", lk)
        object.__setattr__(self, "log_multiplicities", lm)
        meta = {"convention": WAVENUMBER, "exponent": 0.5}
        meta.update(self.meta)
        object.__setattr__(self, "meta", meta)

    @classmethod
    def from_values(cls, magnitudes, multiplicities=None, **kwargs):
        k = np.asarray(magnitudes, dtype=float)
        m = np.ones_like(k) if multiplicities is None else np.asarray(multiplicities, dtype=float)
        if np.any(k <= 0):
            raise ArgumentError("magnitudes must be positive")
        return cls(np.log(k), np.log(m), **kwargs)

    @classmethod
    def empty(cls, **kwargs):
        return cls(np.empty(0), np.empty(0), **kwargs)

    def __len__(self):
        return len(self.log_magnitudes)

    @property
    def magnitudes(self) -> np.ndarray:
        """Magnitudes as floats; ``inf`` where they exceed the float range."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_magnitudes)

    @property
    def multiplicities(self) -> np.ndarray:
        """Integer multiplicities (float array when they exceed int64)."""
        with np.errstate(over="ignore"):
            m = np.rint(np.exp(self.log_multiplicities))
        if len(m) and self.log_multiplicities.max() > 43:
            return m
        return m.astype(np.int64)

    @property
    def total_multiplicity(self) -> float:
        return float(np.exp(self.log_multiplicities).sum())

    def truncate(self, count: int) -> "Spectrum":
        """The ``count`` smallest distinct magnitudes (vectors dropped)."""
        return Spectrum(self.log_magnitudes[:count], self.log_multiplicities[:count],
                        meta=dict(self.meta))

    def scaled(self, factor: float) -> "Spectrum":
        """All magnitudes multiplied by ``factor``; multiplicities unchanged."""
        return Spectrum(self.log_magnitudes + math.log(factor), self.log_multiplicities,
                        meta=dict(self.meta))

    def with_entries(self, magnitudes, multiplicities=None, rel_tol: float = 1e-12) -> "Spectrum":
        """Multiset union with extra entries; coinciding magnitudes merge."""
        lk = np.log(np.asarray(magnitudes, dtype=float))
        lm = np.zeros_like(lk) if multiplicities is None else \
            np.log(np.asarray(multiplicities, dtype=float))
        return merge_log_entries(np.concatenate([self.log_magnitudes, lk]),
                                 np.concatenate([self.log_multiplicities, lm]),
                                 rel_tol=rel_tol, meta=dict(self.meta))


def merge_log_entries(log_mag, log_mul, rel_tol=1e-12, meta=None):
    """Sort log-form entries and merge magnitudes equal to ``rel_tol``.

    Two magnitudes merge when their logs differ by at most
    ``rel_tol * max(1, |log kappa|)``; the scaling keeps exact collisions of
    huge magnitudes together despite rounding in their logs.
    """
    log_mag = np.asarray(log_mag, dtype=float)
    log_mul = np.asarray(log_mul, dtype=float)
    order = np.argsort(log_mag, kind="stable")
    log_mag, log_mul = log_mag[order], log_mul[order]
    if len(log_mag) == 0:
        return Spectrum(log_mag, log_mul, meta=meta or {})
    tol = rel_tol * np.maximum(1.0, np.abs(log_mag))
    new_group = np.empty(len(log_mag), dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(log_mag) > tol[1:]
    starts = np.flatnonzero(new_group)
    mags = log_mag[starts]
    muls = np.logaddexp.reduceat(log_mul, starts) if len(starts) else log_mul
    return Spectrum(mags, muls, meta=meta or {})


# ---------------------------------------------------------------------------
# assembly and solvers

def assemble_dirichlet_laplacian(g: GridDomain) -> sp.csr_matrix:
    """Second-order ``(2d+1)``-point Laplacian with homogeneous Dirichlet data.

    Diagonal ``-2d/h**2``; ``1/h**2`` couples each pair of neighbouring
    interior nodes.  Neighbours that are not interior nodes are boundary
    values (zero) and contribute nothing.
    """
    n = g.n
    if n == 0:
        raise ArgumentError("grid domain has no interior nodes")
    h2 = g.spacing**2
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, -2.0 * g.dim / h2)]
    shape = np.asarray(g.shape)
    for axis in range(g.dim):
        for step in (-1, 1):
            nb = g.interior.copy()
            nb[:, axis] += step
            ok = (nb[:, axis] >= 0) & (nb[:, axis] < shape[axis])
            idx = np.full(n, -1)
            idx[ok] = g.index[tuple(nb[ok].T)]
            ok = idx >= 0
            rows.append(np.flatnonzero(ok))
            cols.append(idx[ok])
            vals.append(np.full(ok.sum(), 1.0 / h2))
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    return A.tocsr()


def full_spectrum(m, want_vectors: bool = False, cap: int = DENSE_CAP):
    """All eigenvalues (ascending) of a symmetric matrix by a dense solve.

    Returns ``vals`` or ``(vals, vecs)`` with unit-norm columns.
    """
    n = m.shape[0]
    if n > cap:
        raise ArgumentError(
            f"order {n} exceeds the dense cap {cap}; use partial_spectrum instead")
    dense = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=float)
    if want_vectors:
        return la.eigh(dense)
    return la.eigh(dense, eigvals_only=True)


def partial_spectrum(m, k: int, want_vectors: bool = False, seed: int = 0,
                     maxiter: int | None = None, tol: float = 0.0):
    """The ``k`` eigenvalues of smallest magnitude, via shift-invert Lanczos.

    Results are returned in ascending order like :func:`full_spectrum`.
    The start vector is drawn from ``seed`` so runs are reproducible.
    """
    n = m.shape[0]
    if not 1 <= k < n:
        raise ArgumentError(f"need 1 <= k < {n}, got k={k}")
    v0 = np.random.default_rng(seed).standard_normal(n)
    A = sp.csc_matrix(m)
    try:
        vals, vecs = eigsh(A, k=k, sigma=0.0, which="LM", v0=v0, maxiter=maxiter, tol=tol)
    except ArpackNoConvergence as exc:
        vals, vecs = exc.eigenvalues, exc.eigenvectors
        res = np.linalg.norm(A @ vecs - vecs * vals, axis=0) if len(vals) else np.empty(0)
        raise ConvergenceError(
            f"Lanczos iteration converged on {len(vals)} of {k} eigenpairs; "
            f"residuals {res.tolist()}", res) from None
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    res = np.linalg.norm(A @ vecs - vecs * vals, axis=0)
    scale = abs(vals).max()
    if np.any(res > 1e-8 * scale):
        raise ConvergenceError(f"residuals above 1e-8*|A|: {res.tolist()}", res)
    return (vals, vecs) if want_vectors else vals


def to_magnitudes(raw, exponent: float = 0.5, zero_tol: float = 1e-12) -> np.ndarray:
    """Spectral magnitudes ``(-lam) ** exponent``; zero eigenvalues dropped.

    Eigenvalues within ``zero_tol * max(1, max|lam|)`` of zero are treated
    as kernel modes and excluded.  A clearly positive eigenvalue means the
    matrix uses the opposite sign convention and raises.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0:
        return raw.copy()
    thresh = zero_tol * max(1.0, float(np.abs(raw).max()))
    if np.any(raw > thresh):
        raise ConventionError(
            f"positive eigenvalue {raw.max():.6g}; expected a non-positive Laplacian")
    keep = raw < -thresh
    return (-raw[keep]) ** exponent


def cluster_multiplicities(raw, rel_tol: float = 1e-3, vectors=None,
                           exponent: float = 0.5, meta: dict | None = None) -> Spectrum:
    """Group numerically coincident eigenvalues into multiplicities.

    Raw eigenvalues are visited in ascending magnitude; each joins the
    current cluster when ``|lam - mean| <= rel_tol * max(1, |mean|)`` and
    otherwise opens a new one.  Each cluster reports the mean of its
    magnitudes and its size.
    """
    raw = np.asarray(raw, dtype=float).ravel()
    meta = dict(meta or {})
    meta.update(rel_tol=rel_tol, exponent=exponent)
    if raw.size == 0:
        return Spectrum.empty(eigenvalues=raw, meta=meta)
    thresh = 1e-12 * max(1.0, float(np.abs(raw).max()))
    if np.any(raw > thresh):
        raise ConventionError(
            f"positive eigenvalue {raw.max():.6g}; expected a non-positive Laplacian")
    keep = np.flatnonzero(raw < -thresh)
    keep = keep[np.argsort(-raw[keep], kind="stable")]
    lam = raw[keep]

    cluster = np.empty(len(lam), dtype=np.int64)
    sums, counts = [], []
    for i, v in enumerate(lam):
        if counts:
            ref = sums[-1] / counts[-1]
            if abs(v - ref) <= rel_tol * max(1.0, abs(ref)):
                sums[-1] += v
                counts[-1] += 1
                cluster[i] = len(counts) - 1
                continue
        sums.append(v)
        counts.append(1)
        cluster[i] = len(counts) - 1
    kappa = (-lam) ** exponent
    mean_kappa = np.bincount(cluster, weights=kappa) / np.asarray(counts)
    vecs = None if vectors is None else np.asarray(vectors)[:, keep]
    return Spectrum(np.log(mean_kappa), np.log(np.asarray(counts, dtype=float)),
                    eigenvalues=lam, eigenvectors=vecs, cluster=cluster, meta=meta)


def domain_spectrum(g: GridDomain, rel_tol: float = 1e-3, want_vectors: bool = True,
                    k: int | None = None, seed: int = 0, cap: int = DENSE_CAP,
                    exponent: float = 0.5, level: int | None = None) -> Spectrum:
    """Assemble, solve and cluster in one call.

    Uses the dense path when the order fits under ``cap`` and no ``k`` is
    requested, otherwise the shift-invert Lanczos path for ``k`` pairs.
    """
    A = assemble_dirichlet_laplacian(g)
    if k is None and g.n <= cap:
        out = full_spectrum(A, want_vectors, cap)
    else:
        if k is None:
            raise ArgumentError(f"order {g.n} exceeds the dense cap {cap}; pass k")
        out = partial_spectrum(A, k, want_vectors, seed=seed)
    vals, vecs = out if want_vectors else (out, None)
    meta = {"spacing": g.spacing, "level": level if level is not None else
            (g.cellset.level if g.cellset is not None else None)}
    return cluster_multiplicities(vals, rel_tol, vecs, exponent, meta)


# ---------------------------------------------------------------------------
# continuum spectra of simple initiators

def interval_spectrum(count: int, length: float = 1.0) -> Spectrum:
    """Dirichlet wavenumbers ``n*pi/length``, ``n = 1..count``, all simple."""
    n = np.arange(1, count + 1, dtype=float)
    return Spectrum.from_values(n * math.pi / length, meta={"level": 0, "analytic": True})


def hypercube_spectrum(dim: int, count: int, side: float = 1.0) -> Spectrum:
    """First ``count`` distinct Dirichlet wavenumbers ``pi*|m|/side`` of a cube.

    ``m`` ranges over positive integer vectors; the multiplicity of a
    wavenumber is the number of vectors with that norm.
    """
    if dim == 1:
        return interval_spectrum(count, side)
    R = max(2, int(math.isqrt(count)) + 2)
    while True:
        m = np.arange(1, R + 1)
        sq = sum(np.meshgrid(*([m**2] * dim), indexing="ij")).ravel()
        # every vector with some m_i > R has |m|^2 >= (R+1)^2 + dim - 1
        complete = (R + 1) ** 2 + dim - 1
        vals, mult = np.unique(sq[sq < complete], return_counts=True)
        if len(vals) >= count:
            break
        R *= 2
    vals, mult = vals[:count], mult[:count]
    return Spectrum.from_values(math.pi * np.sqrt(vals) / side, mult,
                                meta={"level": 0, "analytic": True})


# ---------------------------------------------------------------------------
# export

def format_log_value(log_value: float, integer: bool = False) -> str:
    """Decimal text for ``exp(log_value)``, valid far beyond float range."""
    if log_value < 700:
        v = math.exp(log_value)
        if integer and v < 2**53:
            return str(int(round(v)))
        return repr(float(v))
    e10 = log_value / math.log(10)
    exponent = math.floor(e10)
    return f"{10 ** (e10 - exponent):.15g}e+{exponent}"


def format_spectrum(s: Spectrum) -> str:
    buf = io.StringIO()
    for key in ("level", "spacing", "convention", "exponent", "rel_tol"):
        if s.meta.get(key) is not None:
            buf.write(f"# {key}: {s.meta[key]}\n")
    buf.write("magnitude,multiplicity\n")
    for lk, lm in zip(s.log_magnitudes, s.log_multiplicities):
        buf.write(f"{format_log_value(lk)},{format_log_value(lm, integer=True)}\n")
    return buf.getvalue()


def plateau_data(s: Spectrum):
    """Staircase ``(magnitude, cumulative count)`` pairs of a spectrum."""
    return list(zip(s.magnitudes.tolist(), np.cumsum(s.multiplicities).tolist()))


def format_plateau(s: Spectrum) -> str:
    """Staircase CSV ``magnitude,cumulative_count`` computed in log form."""
    cum = np.logaddexp.accumulate(s.log_multiplicities) if len(s) else []
    rows = [f"{format_log_value(lk)},{format_log_value(lc, integer=True)}\n"
            for lk, lc in zip(s.log_magnitudes, cum)]
    return "magnitude,cumulative_count\n" + "".join(rows)
