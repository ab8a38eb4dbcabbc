"""Orthonormal bases of L2(R): Lemarie-Meyer wavelets and Hermite functions.

Every basis carries a composite Gauss-Legendre grid on [-L, L] that realises
the L2 inner product, plus evaluators for derivatives up to ``i_max``.
"""
from dataclasses import dataclass, field
from itertools import count as _count
import math

import numpy as np

from . import _kernels
from .errors import InvalidArgument, ResolutionError

PANELS_PER_UNIT = 8
TAIL_MASS = 1e-12
DEFAULT_I_MAX = 3
DEFAULT_FFT_SIZE = 4096
SPECTRAL_EXTENT = 4.0


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Composite Gauss-Legendre rule on [-L, L]."""

    nodes: np.ndarray
    weights: np.ndarray
    L: float
    panels_per_unit: int = PANELS_PER_UNIT
    nodes_per_panel: int = 8
    frequency: float = 0.0

    def __post_init__(self):
        if self.nodes.ndim != 1 or self.nodes.shape != self.weights.shape:
            raise InvalidArgument("nodes and weights must be 1-d arrays of equal length")
        if np.any(np.diff(self.nodes) <= 0):
            raise InvalidArgument("quadrature nodes must be strictly increasing")
        if np.any(self.weights <= 0):
            raise InvalidArgument("quadrature weights must be positive")

    @property
    def size(self):
        return self.nodes.size

    @property
    def nodes_per_unit(self):
        return self.panels_per_unit * self.nodes_per_panel

    def integrate(self, values):
        """Integrate sampled values (last axis runs over nodes)."""
        return np.asarray(values) @ self.weights

    def weight_sum_error(self):
        return abs(math.fsum(self.weights) - 2.0 * self.L)


def gauss_legendre_grid(L, nodes_per_panel=8, panels_per_unit=PANELS_PER_UNIT, frequency=0.0):
    """Composite Gauss-Legendre grid with ``panels_per_unit`` panels per unit length.

    ``frequency`` records the largest angular frequency the rule is meant to
    resolve; it is informational and used when a coarser rule is derived.
    """
    if not L > 0:
        raise InvalidArgument(f"grid half-width must be positive, got {L}")
    npanel = max(1, int(math.ceil(2.0 * L * panels_per_unit - 1e-9)))
    edges = np.linspace(-L, L, npanel + 1)
    x, w = np.polynomial.legendre.leggauss(int(nodes_per_panel))
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    grid = QuadratureGrid(nodes, weights, float(L), panels_per_unit, int(nodes_per_panel),
                          float(frequency))
    if grid.weight_sum_error() > 1e-12 * max(1.0, 2.0 * L):
        raise ResolutionError("quadrature weights do not sum to the interval length")
    return grid


def resolving_grid(L, frequency, panels_per_unit=PANELS_PER_UNIT):
    """Composite rule on [-L, L] with enough nodes per panel for ``frequency``."""
    p = nodes_for_frequency(frequency, panels_per_unit)
    return gauss_legendre_grid(L, p, panels_per_unit, frequency)


def nodes_for_frequency(omega, panels_per_unit=PANELS_PER_UNIT, floor=8, eps=1e-16):
    """Smallest Gauss-Legendre order resolving exp(i*omega*s) on one panel."""
    kappa = 0.5 * omega / panels_per_unit
    for p in range(floor, 129):
        if (math.e * kappa / (4.0 * p)) ** (2 * p) < eps:
            return p
    raise ResolutionError(f"frequency {omega:.3g} needs more than 128 nodes per panel")


# ---------------------------------------------------------------------------
# Meyer bell and mother wavelet
# ---------------------------------------------------------------------------

def _nu(x):
    x = np.clip(x, 0.0, 1.0)
    return x**4 * (35.0 - 84.0 * x + 70.0 * x**2 - 20.0 * x**3)


@dataclass(frozen=True)
class BellFunction:
    """Meyer bell supported on [edge1, edge2] with its knee at (2*edge1 + edge2)/3.

    With edges (2pi/3, 8pi/3) this is the classical Lemarie-Meyer bell: a sine
    ramp on [2pi/3, 4pi/3] and a cosine ramp on [4pi/3, 8pi/3].
    """

    breakpoints: tuple
    amplitude: float = 1.0

    @property
    def knee(self):
        e1, e2 = self.breakpoints
        return (2.0 * e1 + e2) / 3.0

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        e1, e2 = self.breakpoints
        m = self.knee
        out = np.zeros_like(xi)
        rise = (xi >= e1) & (xi <= m)
        fall = (xi > m) & (xi <= e2)
        out[rise] = np.sin(0.5 * np.pi * _nu((xi[rise] - e1) / (m - e1)))
        out[fall] = np.cos(0.5 * np.pi * _nu((xi[fall] - m) / (e2 - m)))
        return self.amplitude * out


def build_meyer_bell(band_edges=(2 * np.pi / 3, 8 * np.pi / 3)):
    e1, e2 = (float(e) for e in band_edges)
    if not (0 < e1 < e2) or not math.isfinite(e2):
        raise InvalidArgument(f"band edges must satisfy 0 < edge1 < edge2, got {band_edges}")
    return BellFunction((e1, e2))


@dataclass(frozen=True, eq=False)
class WaveletSpectrum:
    """Sampled positive half of the mother wavelet's spectrum.

    The evaluator is the exact Riemann sum over these samples; it is periodic
    in ``u = s + 1/2`` with period ``2*pi/dxi`` and only the central period is
    kept (values outside are set to zero).
    """

    xi0: float
    dxi: float
    weights: np.ndarray
    fft_size: int
    tail_radius: float
    sup_norms: np.ndarray

    @property
    def period(self):
        return 2.0 * np.pi / self.dxi

    @property
    def max_frequency(self):
        return self.xi0 + self.dxi * max(self.weights.size - 1, 0)

    def table(self, u, i_max):
        """Rows ``[psi^(i)](u - 1/2)`` for i = 0..i_max (complex)."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.weights.size == 0:
            return np.zeros((i_max + 1, u.size), dtype=complex)
        real = _kernels.meyer_table(u, self.xi0, self.dxi, self.weights, i_max)
        real[:, np.abs(u) > 0.5 * self.period] = 0.0
        return 1j * real

    def fft_samples(self, i):
        """FFT route: samples of psi^(i) on the uniform grid ``s_j``."""
        n, dxi = self.fft_size, self.dxi
        k = np.arange(n) - n // 2
        xi = k * dxi
        bell = np.zeros(n)
        pos = k > 0
        idx = np.rint((xi[pos] - self.xi0) / dxi).astype(int)
        ok = (idx >= 0) & (idx < self.weights.size)
        vals = np.zeros(idx.size)
        vals[ok] = self.weights[idx[ok]] / dxi
        bell[pos] = vals
        bell[n // 2 - np.arange(1, n // 2)] = -vals[: n // 2 - 1]
        spec = np.exp(0.5j * xi) * bell * (1j * xi) ** i
        values = np.fft.fftshift(n * np.fft.ifft(np.fft.ifftshift(spec))) * dxi / (2 * np.pi)
        s = k * (2 * np.pi / (n * dxi))
        return s, values


@dataclass(frozen=True, eq=False)
class BasisFunction:
    """One basis element with derivative evaluator and sup-norm bound table.

    ``derivative_bounds[i]`` is the product ``N_n * D_i``; ``sup_norms[i]`` is
    the measured sup of the i-th derivative (on the construction grid).
    """

    kind: str
    index: tuple
    norm_factor: float
    derivative_bounds: np.ndarray
    sup_norms: np.ndarray
    i_max: int
    _table: object = field(repr=False)
    spectrum: WaveletSpectrum = field(default=None, repr=False)
    extent: float = np.inf

    def evaluate_upto(self, s, i):
        _check_order(i, self.i_max)
        return self._table(np.atleast_1d(np.asarray(s, dtype=float)), i)

    def evaluate(self, s, i=0):
        return self.evaluate_upto(s, i)[i]


def _check_order(i, i_max):
    if not (0 <= int(i) <= i_max):
        raise InvalidArgument(f"derivative order {i} outside 0..{i_max}")


def synthesize_mother_wavelet(bell, fft_size=DEFAULT_FFT_SIZE, i_max=DEFAULT_I_MAX):
    """Mother wavelet psi(s) = (1/2pi) int exp(i xi (s+1/2)) sgn(xi) b(|xi|) dxi."""
    fft_size = int(fft_size)
    if fft_size <= 0 or fft_size & (fft_size - 1):
        raise InvalidArgument(f"fft_size must be a power of two, got {fft_size}")
    if i_max < 0:
        raise InvalidArgument("i_max must be non-negative")
    if fft_size < 1024:
        raise ResolutionError(f"fft_size {fft_size} is below the minimum of 1024")
    e1, e2 = bell.breakpoints
    dxi = 2.0 * SPECTRAL_EXTENT * e2 / fft_size
    if (bell.knee - e1) / dxi < 16:
        raise ResolutionError(
            f"fft_size {fft_size} resolves the bell ramp with fewer than 16 samples")
    k = np.arange(int(math.ceil(e1 / dxi)), int(math.floor(e2 / dxi)) + 1)
    weights = dxi * bell(k * dxi)
    if not np.any(weights):
        k, weights = k[:0], weights[:0]
    xi0 = float(k[0] * dxi) if k.size else 0.0
    proto = WaveletSpectrum(xi0, dxi, weights, fft_size, 0.0, np.zeros(i_max + 1))

    sups = np.zeros(i_max + 1)
    radius = 0.0
    if weights.size:
        for i in range(i_max + 1):
            _, vals = proto.fft_samples(i)
            sups[i] = np.max(np.abs(vals))
        dense = np.abs(proto.table(np.linspace(-8.0, 8.0, 3201), i_max))
        sups = np.maximum(sups, dense.max(axis=1))
        radius = _tail_radius(proto)
    spectrum = WaveletSpectrum(xi0, dxi, weights, fft_size, radius, sups)
    dbound = 2.0 ** ((np.arange(i_max + 1) + 0.5) ** 2) * sups

    def table(s, upto):
        return spectrum.table(s + 0.5, upto)

    return BasisFunction("wavelet", (0, 0), 1.0, dbound, sups.copy(), i_max, table, spectrum)


def _tail_radius(spectrum, mass=0.5 * TAIL_MASS):
    """Radius around the wavelet centre outside which the L2 mass is below ``mass``."""
    s, vals = spectrum.fft_samples(0)
    u = s + 0.5
    ds = s[1] - s[0]
    dens = np.abs(vals) ** 2 * ds
    order = np.argsort(-np.abs(u))
    tail = np.cumsum(dens[order])
    beyond = np.abs(u[order])
    hit = np.nonzero(tail >= mass)[0]
    if hit.size == 0:
        return 0.0
    return float(beyond[hit[0]]) + ds


def wavelet_indices():
    """Yield (alpha, beta) pairs in the fixed diagonal order.

    Pairs are grouped by shell r = max(|alpha|, |beta|); inside a shell they
    are sorted by the zigzag rank (0, -1, 1, -2, 2, ...) of alpha, then of beta.
    """
    def rank(v):
        return 2 * v if v > 0 else -2 * v - 1 if v < 0 else 0

    for r in _count():
        rng = range(-r, r + 1)
        shell = [(a, b) for a in rng for b in rng if max(abs(a), abs(b)) == r]
        shell.sort(key=lambda ab: (rank(ab[0]), rank(ab[1])))
        yield from shell


def wavelet_norm_factor(alpha):
    return 2.0 ** (alpha**2) if alpha > 0 else 2.0 ** (alpha / 2.0)


# ---------------------------------------------------------------------------
# bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Ordered finite family of basis functions on a quadrature grid."""

    functions: tuple
    grid: QuadratureGrid
    i_max: int
    kind: str
    basis_id: str
    _batch: object = field(repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.functions)

    @property
    def size(self):
        return len(self.functions)

    def evaluate_upto(self, s, i):
        """Array of shape (i+1, N, len(s)) with derivative orders 0..i."""
        _check_order(i, self.i_max)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        key = (s.size, hash(s.tobytes()))
        hit = self._cache.get(key)
        if hit is not None and hit.shape[0] > i:
            return hit[: i + 1]
        table = self._batch(s, self.i_max)
        if len(self._cache) > 8:
            self._cache.clear()
        self._cache[key] = table
        return table[: i + 1]

    def evaluate(self, s, i=0):
        """Rows ``[u_n]^(i)(s)`` for every basis function, shape (N, len(s))."""
        return self.evaluate_upto(s, i)[i]

    def samples(self, i=0):
        """Values of the i-th derivatives on the quadrature nodes."""
        return self.evaluate(self.grid.nodes, i)

    def synthesize(self, coeffs, s, i=0):
        """Sample ``sum_n c_n [u_n]^(i)`` at ``s``."""
        return np.asarray(coeffs) @ self.evaluate(s, i)

    def project(self, values):
        """Coefficients <f, u_n> of a function sampled on the quadrature nodes."""
        return np.conj(self.samples(0)) @ (self.grid.weights * np.asarray(values))

    def sample_points(self, n=64):
        """Default uniform sample grid over [-L, L]."""
        return np.linspace(-self.grid.L, self.grid.L, n)


def enumerate_wavelet_basis(mother, count, i_max=None, panels_per_unit=PANELS_PER_UNIT):
    """First ``count`` functions 2^(a/2) psi(2^a s - b) in the diagonal order."""
    if count < 1:
        raise InvalidArgument("count must be at least 1")
    i_max = mother.i_max if i_max is None else int(i_max)
    if not 0 <= i_max <= mother.i_max:
        raise InvalidArgument(f"i_max must lie in 0..{mother.i_max}")
    spec = mother.spectrum
    gen = wavelet_indices()
    pairs = [next(gen) for _ in range(count)]

    radius = max(spec.tail_radius, 1.0)
    L = max(2.0 ** -a * (radius + abs(b - 0.5)) for a, b in pairs)
    L = float(math.ceil(L))
    top = max(a for a, _ in pairs)
    grid = resolving_grid(L, 2.0 * 2.0**top * max(spec.max_frequency, 1.0), panels_per_unit)

    sup_all = spec.sup_norms[: i_max + 1]
    functions = []
    for a, b in pairs:
        scale = 2.0**a
        fac = np.sqrt(scale) * scale ** np.arange(i_max + 1)
        n_n = wavelet_norm_factor(a)

        def table(s, upto, a=a, b=b, fac=fac):
            vals = spec.table(2.0**a * s - b + 0.5, upto)
            return vals * fac[: upto + 1, None]

        functions.append(BasisFunction(
            "wavelet", (a, b), n_n, n_n * mother.derivative_bounds[: i_max + 1],
            sup_all * fac, i_max, table, spec, 2.0**-a * (radius + abs(b - 0.5))))
    functions = tuple(functions)

    def batch(s, upto):
        return np.stack([f.evaluate_upto(s, upto) for f in functions], axis=1)

    bid = f"meyer-{count}-fft{spec.fft_size}-L{int(L)}"
    return OrthonormalBasis(functions, grid, i_max, "wavelet", bid, batch)


def _hermite_tables(s, count, upto):
    """Derivatives 0..upto of h_0..h_{count-1} by the ladder relation."""
    nmax = count - 1 + upto
    h = _kernels.hermite_table(s, nmax)
    out = np.empty((upto + 1, count, s.size))
    out[0] = h[:count]
    cur = h
    for k in range(1, upto + 1):
        top = nmax - k
        n = np.arange(top + 1)[:, None]
        nxt = -np.sqrt((n + 1) / 2.0) * cur[1: top + 2]
        nxt[1:] += np.sqrt(n[1:] / 2.0) * cur[: top]
        cur = nxt
        out[k] = cur[:count]
    return out.astype(complex)


def hermite_tail_mass(n, L):
    """Mass of h_n outside [-L, L] (both sides)."""
    grid = gauss_legendre_grid(20.0, 16, 4)
    x = L + 20.0 + grid.nodes
    h = _kernels.numpy_impl.hermite_table(x, n)[n]
    return 2.0 * float(grid.weights @ h**2)


def hermite_grid(count, panels_per_unit=PANELS_PER_UNIT):
    """Integer half-width grid large enough for h_0..h_{count-1}."""
    L = 1
    while hermite_tail_mass(count - 1, L) >= TAIL_MASS:
        L += 1
    omega = 2.0 * math.sqrt(2.0 * count + 1.0) + 2.0
    return resolving_grid(float(L), omega, panels_per_unit)


def build_hermite_basis(count, i_max=DEFAULT_I_MAX, grid=None):
    """Hermite functions h_0..h_{count-1} with derivatives up to ``i_max``."""
    if count < 1:
        raise InvalidArgument("count must be at least 1")
    if i_max < 0:
        raise InvalidArgument("i_max must be non-negative")
    if grid is None:
        grid = hermite_grid(count)
    tail = hermite_tail_mass(count - 1, grid.L)
    if tail >= TAIL_MASS:
        raise ResolutionError(
            f"grid half-width {grid.L} leaves tail mass {tail:.2e} for h_{count - 1}")

    measured = np.abs(_hermite_tables(grid.nodes, count, i_max)).max(axis=2)
    i = np.arange(i_max + 1)
    functions = []
    for n in range(count):
        bound = np.pi**-0.25 * (2.0 * (n + i)) ** (i / 2.0)

        def table(s, upto, n=n):
            return _hermite_tables(s, n + 1, upto)[:, n]

        functions.append(BasisFunction("hermite", (n,), 1.0, bound, measured[:, n].copy(),
                                       i_max, table, None, float(grid.L)))

    def batch(s, upto):
        return _hermite_tables(s, count, upto)

    bid = f"hermite-{count}-L{grid.L:g}"
    return OrthonormalBasis(tuple(functions), grid, i_max, "hermite", bid, batch)


def gram_matrix(basis):
    """G[m, n] = sum_k w_k u_m(s_k) conj(u_n(s_k))."""
    if basis.size == 0:
        raise InvalidArgument("basis is empty")
    u = basis.samples(0)
    return (u * basis.grid.weights) @ u.conj().T
