"""Windowed bound-state solver for the radial Schroedinger equation.

The kinetic operator is discretised with three-point finite differences on
a smoothly graded mesh.  With trapezoid weights W the generalised problem
K psi + W V psi = E W psi is symmetrised as W^-1/2 (K + W V) W^-1/2, which
is a real symmetric tridiagonal matrix.  Its eigenvalues inside a window
are found by Sturm-sequence bisection, eigenvectors by inverse iteration,
and each state is labelled by the Sturm count below it (= its node count).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, linalg

from .config import HBAR
from .potentials import Potential


class NonConvergenceError(RuntimeError):
    def __init__(self, message, window=None):
        super().__init__(message)
        self.window = window


@dataclass(frozen=True)
class MeshPolicy:
    """How to lay out a mesh.

    ``kind`` is ``"graded"`` (spacing follows the local de Broglie
    wavelength) or ``"uniform"``.  Graded meshes place ``r_in`` where V
    exceeds ``wall_factor`` times the well depth and ``r_out`` where the
    tail drops below |E_hi| / ``tail_factor``, unless given explicitly.
    """

    kind: str = "graded"
    points_per_wavelength: float = 100.0
    r_in: float | None = None
    r_out: float | None = None
    wall_factor: float = 10.0
    tail_factor: float = 100.0
    surface: float | None = None
    intervals: int | None = None  # uniform meshes
    max_r_out: float = 20e-6


@dataclass(frozen=True)
class Mesh:
    """Nodes r_0 < ... < r_{N+1}; psi vanishes on the two end nodes."""

    r: np.ndarray
    s_to_r: object = field(repr=False, compare=False)
    s_total: float = 1.0

    @property
    def interior(self) -> np.ndarray:
        return self.r[1:-1]

    @property
    def weights(self) -> np.ndarray:
        h = np.diff(self.r)
        return 0.5 * (h[:-1] + h[1:])

    @property
    def r_in(self) -> float:
        return float(self.r[0])

    @property
    def r_out(self) -> float:
        return float(self.r[-1])

    def __len__(self):
        return len(self.r) - 2

    def refine(self, factor: int = 2) -> Mesh:
        """Same grading map, ``factor`` times more intervals."""
        n = (len(self.r) - 1) * factor
        s = np.linspace(0.0, self.s_total, n + 1)
        r = np.asarray(self.s_to_r(s), dtype=float)
        r[0], r[-1] = self.r[0], self.r[-1]
        return Mesh(r, self.s_to_r, self.s_total)

    def extend(self, r_out: float) -> Mesh:
        """Keep every node and continue with the last spacing out to ``r_out``."""
        if not r_out > self.r_out:
            raise ValueError("new r_out must lie beyond the current one")
        n = len(self.r) - 1
        ds = self.s_total / n
        h = float(self.r[-1] - self.r[-2])
        extra = int(math.ceil((r_out - self.r[-1]) / h))
        return Mesh(np.concatenate([self.r, self.r[-1] + h * np.arange(1, extra + 1)]),
                    _Extended(self.s_to_r, self.s_total, float(self.r[-1]), h / ds),
                    self.s_total + extra * ds)


def uniform_mesh(r_in: float, r_out: float, intervals: int) -> Mesh:
    def s_to_r(s):
        return r_in + (r_out - r_in) * np.asarray(s) / intervals
    return Mesh(np.linspace(r_in, r_out, intervals + 1), s_to_r, float(intervals))


def _surface_of(potential):
    for obj in [potential] + list(getattr(potential, "parts", [])) + [getattr(potential, "base", None)]:
        if obj is not None and hasattr(obj, "radius"):
            return obj.radius
    return None


def _wall_radius(potential, surface, wall_factor):
    x = np.geomspace(1e-13, 1e-8, 4000)
    v = potential(surface + x)
    # deepest interior local minimum; a finite barrier lets V dive again at x -> 0
    loc = np.nonzero((v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:]))[0] + 1
    if not len(loc):
        raise ValueError("potential has no well near the surface")
    i_min = int(loc[np.argmin(v[loc])])
    vmin = v[i_min]
    target = wall_factor * abs(vmin)
    inner = np.nonzero(v[:i_min] > target)[0]
    if not len(inner):
        raise ValueError("potential has no repulsive wall near the surface")
    return surface + x[inner[-1]]


def _tail_radius(potential, surface, e_hi, tail_factor, max_r_out):
    x = np.geomspace(1e-10, max_r_out, 6000)
    v = np.abs(potential(surface + x))
    big = np.nonzero(v >= abs(e_hi) / tail_factor)[0]
    return min(surface + x[big[-1]] if len(big) else surface + x[0], surface + max_r_out)


def build_mesh(potential: Potential, window, mass: float, policy: MeshPolicy = MeshPolicy()) -> Mesh:
    """Mesh resolving states with energies inside ``window`` (rad/s)."""
    e_lo, e_hi = window
    if not e_lo < e_hi:
        raise ValueError("empty energy window")
    if policy.kind == "uniform":
        if policy.r_in is None or policy.r_out is None or policy.intervals is None:
            raise ValueError("uniform mesh needs r_in, r_out and intervals")
        return uniform_mesh(policy.r_in, policy.r_out, policy.intervals)
    if e_hi > 0:
        raise ValueError("bound-state window must lie at or below zero")

    surface = policy.surface if policy.surface is not None else _surface_of(potential)
    if policy.r_in is not None:
        r_in = policy.r_in
    else:
        if surface is None:
            raise ValueError("graded mesh needs a surface radius or explicit r_in")
        r_in = _wall_radius(potential, surface, policy.wall_factor)
    if policy.r_out is not None:
        r_out = policy.r_out
    else:
        if e_hi == 0:
            raise ValueError("tail criterion needs e_hi < 0; pass r_out explicitly")
        r_out = _tail_radius(potential, surface if surface is not None else r_in,
                             e_hi, policy.tail_factor, policy.max_r_out)
        # keep several decay lengths beyond the outermost turning point
        kappa = math.sqrt(2 * mass * abs(e_hi) / HBAR)
        r_out = max(r_out, r_in + 30.0 / kappa)

    # cumulative count of local wavelengths on a dense auxiliary grid
    x_aux = np.geomspace(1e-3, 1.0, 40001)
    x_aux = (x_aux - x_aux[0]) / (x_aux[-1] - x_aux[0])
    span = r_out - r_in
    # log-dense near r_in, where the wall and deep well live
    lo = max(r_in - (surface if surface is not None else r_in), 1e-13)
    if surface is not None and r_in > surface:
        r_aux = surface + np.geomspace(lo, lo + span, 40001)
    else:
        r_aux = r_in + x_aux * span
    r_aux[0], r_aux[-1] = r_in, r_out
    v = potential(r_aux)
    # smooth stand-in for |V| + |E_lo|; a kink in the density would cost an order of accuracy
    k_loc = np.sqrt(2 * mass * (np.hypot(v, e_lo) + abs(e_lo)) / HBAR)
    density = policy.points_per_wavelength * k_loc / (2 * math.pi)
    s_aux = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(r_aux))])
    s_to_r = interpolate.make_interp_spline(s_aux, r_aux, k=5)
    n = max(int(math.ceil(s_aux[-1])), 64)
    scale = s_aux[-1] / n
    mesh_map = _Rescaled(s_to_r, scale)
    r = np.asarray(mesh_map(np.arange(n + 1, dtype=float)), dtype=float)
    r[0], r[-1] = r_in, r_out
    return Mesh(r, mesh_map, float(n))


class _Rescaled:
    """s in [0, n] -> r, wrapping the auxiliary map on [0, s_total]."""

    def __init__(self, f, scale):
        self.f, self.scale = f, scale

    def __call__(self, s):
        return self.f(np.asarray(s, dtype=float) * self.scale)


class _Extended:
    """Original map up to s_end, then linear with slope ``rate``."""

    def __init__(self, f, s_end, r_end, rate):
        self.f, self.s_end, self.r_end, self.rate = f, s_end, r_end, rate

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        inner = np.asarray(self.f(np.minimum(s, self.s_end)), dtype=float)
        return np.where(s <= self.s_end, inner, self.r_end + (s - self.s_end) * self.rate)


def harmonic_mesh(potential, half_width: float = 12.0, intervals: int = 4000) -> Mesh:
    """Uniform mesh over center +- half_width oscillator lengths."""
    x0 = potential.length
    return uniform_mesh(potential.center - half_width * x0, potential.center + half_width * x0, intervals)


def box_mesh(potential, intervals: int = 4000) -> Mesh:
    return uniform_mesh(0.0, potential.width, intervals)


# --- discrete operator -----------------------------------------------------

def tridiagonal(potential: Potential, mesh: Mesh, mass: float):
    """Diagonal and off-diagonal of the symmetrised Hamiltonian (rad/s)."""
    r = mesh.r
    h = np.diff(r)
    hm, hp = h[:-1], h[1:]
    w = 0.5 * (hm + hp)
    c = HBAR / (2 * mass)
    diag = c * (1 / hm + 1 / hp) / w + potential(mesh.interior)
    off = -c / h[1:-1] / np.sqrt(w[:-1] * w[1:])
    return diag, off


def sturm_count(diag, off, x: float) -> int:
    """Number of eigenvalues of the tridiagonal matrix strictly below x."""
    d = (np.asarray(diag, dtype=float) - x).tolist()
    e2 = (np.asarray(off, dtype=float) ** 2).tolist()
    tiny = np.finfo(float).tiny
    count = 0
    q = d[0]
    if q < 0:
        count += 1
    for i in range(1, len(d)):
        if q == 0.0:
            q = tiny
        q = d[i] - e2[i - 1] / q
        if q < 0:
            count += 1
    return count


def bisect_eigenvalue(diag, off, index: int, lo: float, hi: float, tol: float) -> float:
    """Eigenvalue number ``index`` (0-based) by Sturm bisection in [lo, hi]."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sturm_count(diag, off, mid) > index:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class MotionalState:
    nu: int
    omega: float
    psi: np.ndarray = field(repr=False)


@dataclass
class BoundStates:
    """States on a shared mesh; ``psi[i]`` lives on ``mesh.interior``."""

    mesh: Mesh
    nu: np.ndarray
    omega: np.ndarray
    psi: np.ndarray
    potential: Potential | None = None
    error: np.ndarray | None = None

    def __len__(self):
        return len(self.nu)

    def __iter__(self):
        for i in range(len(self)):
            yield MotionalState(int(self.nu[i]), float(self.omega[i]), self.psi[i])

    def index_of(self, nu: int) -> int:
        hits = np.nonzero(self.nu == nu)[0]
        if not len(hits):
            raise KeyError(f"state nu={nu} not in set")
        return int(hits[0])

    def state(self, nu: int) -> MotionalState:
        i = self.index_of(nu)
        return MotionalState(int(self.nu[i]), float(self.omega[i]), self.psi[i])

    def subset(self, mask) -> BoundStates:
        mask = np.asarray(mask)
        return BoundStates(self.mesh, self.nu[mask], self.omega[mask], self.psi[mask], self.potential,
                           None if self.error is None else self.error[mask])

    def nodes(self, floor=1e-9) -> np.ndarray:
        """Interior sign changes of each wavefunction, ignoring roundoff-level tails."""
        out = []
        for p in self.psi:
            s = np.sign(p[np.abs(p) > floor * np.abs(p).max()])
            out.append(int(np.count_nonzero(s[1:] != s[:-1])))
        return np.array(out)


def _solve_once(potential, mesh, window, mass, abstol=1e-3):
    lo, hi = window
    diag, off = tridiagonal(potential, mesh, mass)
    n_below = sturm_count(diag, off, lo)
    n_upto = sturm_count(diag, off, hi)
    if n_upto == n_below:
        return np.array([], dtype=int), np.array([]), np.zeros((0, len(mesh)))
    vals, vecs = linalg.eigh_tridiagonal(diag, off, select="v", select_range=(lo, hi),
                                         lapack_driver="stebz", tol=abstol)
    if len(vals) != n_upto - n_below:
        raise NonConvergenceError(
            f"found {len(vals)} eigenvalues, Sturm count expects {n_upto - n_below}", window)
    vecs = _polish(diag, off, vals, vecs)
    w = mesh.weights
    psi = (vecs / np.sqrt(w)[:, None]).T
    # deterministic phase: largest lobe positive
    for p in psi:
        if p[np.argmax(np.abs(p))] < 0:
            p *= -1
    return np.arange(n_below, n_upto), vals, psi


def _polish(diag, off, vals, vecs):
    """One shifted inverse-iteration step per vector.

    The vectors from the tridiagonal driver carry residuals of order
    eps * max|diag|, which near the repulsive wall is far above the
    eigenvalues themselves; one step brings them down to ~1e-7 |omega|.
    """
    ab = np.zeros((3, len(diag)))
    ab[0, 1:] = off
    ab[2, :-1] = off
    out = np.empty_like(vecs)
    for k, lam in enumerate(vals):
        ab[1] = diag - lam
        x = linalg.solve_banded((1, 1), ab, vecs[:, k])
        out[:, k] = x / np.linalg.norm(x)
    return out


def _check_pairing(a, b, window):
    """Labels must mean the same state on both meshes."""
    common, i, j = _paired(a, b)
    if len(common) < 2:
        return
    d = np.diff(b[1])
    gap = np.minimum(np.concatenate([[np.inf], d]), np.concatenate([d, [np.inf]]))[j]
    if np.any(np.abs(a[1][i] - b[1][j]) > 0.5 * gap):
        raise NonConvergenceError("node labels shift between mesh levels; mesh too coarse", window)


def _paired(a, b):
    common = np.intersect1d(a[0], b[0])
    return common, np.searchsorted(a[0], common), np.searchsorted(b[0], common)


def solve_bound_states(potential: Potential, mesh: Mesh, window, mass: float, richardson=True,
                       check=True) -> BoundStates:
    """All eigenpairs with omega in the half-open window (lo, hi].

    With ``richardson`` the problem is also solved with half the spacing and
    the eigenvalues are extrapolated as (4 E_fine - E_coarse) / 3.  With
    ``check`` one more halving is done; the change between the two
    extrapolations, divided by 15, is the error estimate, and it must stay below
    max(1e-4 |omega|, 2 pi x 10 Hz).  Wavefunctions come from the finest mesh.
    """
    lo, hi = window
    if not lo < hi:
        raise ValueError("empty energy window")
    if not richardson:
        nu, val, psi = _solve_once(potential, mesh, window, mass)
        return BoundStates(mesh, nu, val, psi, potential)

    # widen the window so states that drift across its edges still pair up
    pad = 0.05 * (hi - lo)
    wide = (lo - pad, hi + pad)
    meshes = [mesh, mesh.refine(2)]
    if check:
        meshes.append(meshes[-1].refine(2))
    sols = [_solve_once(potential, m, wide, mass) for m in meshes]

    for a, b in zip(sols[:-1], sols[1:]):
        _check_pairing(a, b, window)
    common, i0, i1 = _paired(sols[-2], sols[-1])
    best = (4 * sols[-1][1][i1] - sols[-2][1][i0]) / 3
    psi = sols[-1][2][i1]
    err = np.abs(sols[-1][1][i1] - sols[-2][1][i0]) / 3
    if check:
        # the change between successive extrapolations is dominated by the
        # coarser one; its h^4 remainder shrinks 16-fold per halving
        c2, j0, j1 = _paired(sols[0], sols[1])
        prev = dict(zip(c2.tolist(), (4 * sols[1][1][j1] - sols[0][1][j0]) / 3))
        err = np.array([abs(b - prev[n]) / 15 if n in prev else np.inf
                        for n, b in zip(common.tolist(), best)])
    keep = (best > lo) & (best <= hi)
    if check:
        tol = np.maximum(1e-4 * np.abs(best), 2 * math.pi * 10.0)
        bad = keep & ~(err <= tol)
        if np.any(bad):
            raise NonConvergenceError(
                f"eigenvalues not converged for nu={common[bad].tolist()}", window)
    return BoundStates(meshes[-1], common[keep], best[keep], psi[keep], potential, err[keep])
