"""Modal Green's function of the discrete Dirichlet Laplacian and its renormalization.

``g(x, x'; lam) = sum_n phi_n(x) phi_n(x') / (lam - lam_n)`` with modes
normalized in the grid L2 inner product (``h**d * sum v**2 == 1``) and
``lam_n`` the raw (negative) eigenvalues.  With the full spectrum this is
exactly the solution of ``(lam I - L) g = delta_{x'} / h**d`` evaluated at
``x``.  The kernel (zero-eigenvalue) term is never included.

Renormalization: diaperiodic modes of ``E_N`` are parent modes contracted
onto each copy, with eigenvalue ``lam_n / c_j**2`` and L2 norm scaled by
``c_j**(d/2)``, which gives

    g0_N(x, x'; lam) = sum_j c_j**(2-d) g_{N-1}(w_j^-1 x, w_j^-1 x'; c_j**2 lam).

In one dimension the prefactor is ``c_j``; in wavenumber terms the spectral
argument is scaled by ``c_j``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import ArgumentError, DomainError, ParseError, PoleError
from .grid import GridDomain
from .ifs import IteratedFunctionSystem, invert_map
from .laplacian import Spectrum, assemble_dirichlet_laplacian

POLE_GUARD = 1e-6


@dataclass(frozen=True, eq=False)
class GreenEvaluator:
    """Truncated modal expansion on a grid domain.

    ``modes`` has one column per retained eigenpair, normalized to unit grid
    L2 norm; ``eigenvalues`` are the matching raw eigenvalues.
    """

    eigenvalues: np.ndarray
    modes: np.ndarray
    domain: GridDomain
    pole_guard: float = POLE_GUARD

    def __post_init__(self):
        if self.modes.shape != (self.domain.n, len(self.eigenvalues)):
            raise ArgumentError("modes do not match the domain and eigenvalue count")

    @classmethod
    def from_spectrum(cls, spectrum: Spectrum, domain: GridDomain, truncation: int | None = None,
                      select=None, pole_guard: float = POLE_GUARD) -> "GreenEvaluator":
        """Build from a clustered spectrum carrying eigenvectors.

        ``truncation`` keeps the first ``M`` raw eigenpairs (ascending
        magnitude); ``select`` is an optional boolean mask over raw pairs
        applied first.
        """
        if spectrum.eigenvectors is None:
            raise ArgumentError("spectrum has no eigenvectors")
        lam = np.asarray(spectrum.eigenvalues)
        vec = np.asarray(spectrum.eigenvectors)
        if select is not None:
            lam, vec = lam[select], vec[:, select]
        if truncation is not None:
            if truncation > len(lam):
                raise ArgumentError(f"truncation {truncation} exceeds {len(lam)} available modes")
            lam, vec = lam[:truncation], vec[:, :truncation]
        norms = np.sqrt(domain.spacing ** domain.dim * np.sum(vec**2, axis=0))
        return cls(lam, vec / norms, domain, pole_guard)

    @property
    def truncation(self) -> int:
        return len(self.eigenvalues)

    def node(self, point) -> int:
        """Unknown index of ``point``; -1 for a Dirichlet node of the closure."""
        idx = self.domain.locate(point)
        if idx >= 0:
            return idx
        x = np.atleast_1d(np.asarray(point, dtype=float)) / self.domain.spacing
        node = np.rint(x)
        on_lattice = (np.max(np.abs(x - node)) <= 1e-9 and np.all(node >= 0)
                      and np.all(node < np.asarray(self.domain.shape)))
        if on_lattice and (self.domain.cellset is None or self.domain.in_closure(point)):
            return -1
        raise DomainError(f"point {np.ravel(point).tolist()} is not a node of the domain")

    def check_pole(self, lam: float):
        dist = np.abs(lam - self.eigenvalues)
        bad = dist < self.pole_guard * np.abs(self.eigenvalues)
        if bad.any():
            ev = float(self.eigenvalues[np.flatnonzero(bad)[0]])
            raise PoleError(f"lambda={lam!r} is within the pole guard of eigenvalue {ev!r}", ev)


def green_modal(ev: GreenEvaluator, x, xp, lam: float) -> float:
    """Truncated modal sum ``sum_n phi_n(x) phi_n(x') / (lam - lam_n)``.

    Points on the Dirichlet boundary give zero.
    """
    ev.check_pole(lam)
    i, k = ev.node(x), ev.node(xp)
    if i < 0 or k < 0:
        return 0.0
    terms = ev.modes[i] * ev.modes[k] / (lam - ev.eigenvalues)
    return float(terms.sum())


def green_direct(domain: GridDomain, x, xp, lam: float) -> float:
    """Dense resolvent solve ``(lam I - L) g = delta_{x'} / h**d``, read at ``x``."""
    i, k = domain.locate(x), domain.locate(xp)
    if i < 0 or k < 0:
        raise DomainError("direct solve needs interior nodes")
    L = assemble_dirichlet_laplacian(domain).toarray()
    rhs = np.zeros(domain.n)
    rhs[k] = 1.0 / domain.spacing**domain.dim
    g = la.solve(lam * np.eye(domain.n) - L, rhs, assume_a="sym")
    return float(g[i])


def green_renormalized(parent: GreenEvaluator, ifs: IteratedFunctionSystem, x, xp,
                       lam: float) -> float:
    """Diaperiodic Green's function of ``E_N`` from the ``E_{N-1}`` evaluator.

    Sums ``c_j**(2-d) * g_{N-1}(w_j^-1 x, w_j^-1 x'; c_j**2 lam)`` over the
    copies whose closure contains both points.
    """
    d = ifs.dim
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    closure = parent.domain.in_closure if parent.domain.cellset is not None else None
    total = 0.0
    seen_x = seen_xp = False
    for m in ifs.maps:
        y, yp = invert_map(m, x), invert_map(m, xp)
        in_y = closure(y) if closure else parent.domain.locate(y) >= 0
        in_yp = closure(yp) if closure else parent.domain.locate(yp) >= 0
        seen_x |= in_y
        seen_xp |= in_yp
        if in_y and in_yp:
            c = m.ratio
            total += c ** (2 - d) * green_modal(parent, y, yp, c * c * lam)
    if not (seen_x and seen_xp):
        raise DomainError("point lies outside every copy of the parent domain")
    return total


def read_green_batch(text: str, dim: int):
    """Rows ``x..., x'..., lambda`` (header optional) as float arrays."""
    rows = []
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or row[0].lstrip().startswith("#"):
            continue
        try:
            vals = [float(v) for v in row]
        except ValueError:
            if lineno == 1 or not rows:
                continue  # header
            raise ParseError(f"non-numeric field in {row}", lineno) from None
        if len(vals) != 2 * dim + 1:
            raise ParseError(f"expected {2 * dim + 1} columns, got {len(vals)}", lineno)
        rows.append(vals)
    arr = np.array(rows, dtype=float).reshape(-1, 2 * dim + 1)
    return arr[:, :dim], arr[:, dim:2 * dim], arr[:, 2 * dim]
