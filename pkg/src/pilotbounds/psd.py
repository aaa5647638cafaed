"""Doppler power spectral densities and the correlation matrices built from them.

Two band-limited models are provided: a flat (rectangular) spectrum and a
raised-cosine spectrum with a flat core and a half-cosine taper. Frequencies
are normalized to the symbol rate, so the spectrum lives on [-1/2, 1/2].
"""

from __future__ import annotations

import enum
import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy import integrate


class PsdKind(str, enum.Enum):
    RECTANGULAR = "rectangular"
    RAISED_COSINE = "raised-cosine"


@dataclass(frozen=True)
class FadingPsd:
    """Band-limited Doppler spectrum of the fading process.

    :param kind:        PsdKind (or its string value)
    :param f_d:         normalized maximum Doppler shift, 0 < f_d < 0.5
    :param sigma_h_sq:  fading variance; the spectrum integrates to this
    :param rolloff:     taper fraction in (0, 1], raised-cosine only
    """

    kind: PsdKind
    f_d: float
    sigma_h_sq: float = 1.0
    rolloff: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", PsdKind(self.kind))
        if not 0.0 < self.f_d < 0.5:
            raise ValueError(f"f_d must lie in (0, 0.5), got {self.f_d}")
        if not self.sigma_h_sq > 0.0:
            raise ValueError(f"sigma_h_sq must be positive, got {self.sigma_h_sq}")
        if self.kind is PsdKind.RAISED_COSINE and not 0.0 < self.rolloff <= 1.0:
            raise ValueError(f"rolloff must lie in (0, 1], got {self.rolloff}")

    @classmethod
    def rectangular(cls, f_d, sigma_h_sq=1.0):
        return cls(PsdKind.RECTANGULAR, f_d, sigma_h_sq)

    @classmethod
    def raised_cosine(cls, f_d, rolloff=0.5, sigma_h_sq=1.0):
        return cls(PsdKind.RAISED_COSINE, f_d, sigma_h_sq, rolloff)

    @property
    def flat_edge(self):
        """Upper edge of the flat part of the spectrum."""
        if self.kind is PsdKind.RECTANGULAR:
            return self.f_d
        return (1.0 - self.rolloff) * self.f_d

    @property
    def peak(self):
        """Spectral density on the flat core."""
        if self.kind is PsdKind.RECTANGULAR:
            return self.sigma_h_sq / (2.0 * self.f_d)
        return self.sigma_h_sq / (2.0 * self.f_d * (1.0 - self.rolloff / 2.0))

    @property
    def breakpoints(self):
        """Frequencies in (-1/2, 1/2) where the spectrum is not smooth, ascending."""
        edges = {self.f_d, self.flat_edge}
        edges.discard(0.0)
        pos = sorted(edges)
        return tuple([-e for e in reversed(pos)] + pos)

    def __call__(self, f):
        return psd_value(self, f)


def _shape(model, af):
    """Spectrum at nonnegative frequencies ``af`` (no domain check)."""
    out = np.zeros_like(af, dtype=float)
    core = af <= model.flat_edge
    out[core] = model.peak
    if model.kind is PsdKind.RAISED_COSINE:
        taper = (af > model.flat_edge) & (af <= model.f_d)
        width = model.rolloff * model.f_d
        out[taper] = model.peak * 0.5 * (1.0 + np.cos(np.pi * (af[taper] - model.flat_edge) / width))
    return out


def _shape_scalar(model, af):
    if af <= model.flat_edge:
        return model.peak
    if model.kind is PsdKind.RAISED_COSINE and af <= model.f_d:
        return model.peak * 0.5 * (1.0 + math.cos(math.pi * (af - model.flat_edge) / (model.rolloff * model.f_d)))
    return 0.0


def psd_value(model, f):
    """Evaluate S_h(f) for |f| <= 1/2; scalar in, scalar out."""
    if isinstance(f, (float, int)):
        af = abs(f)
        if af > 0.5:
            raise ValueError("frequency outside [-0.5, 0.5]")
        return _shape_scalar(model, af)
    arr = np.asarray(f, dtype=float)
    if np.any(np.abs(arr) > 0.5):
        raise ValueError("frequency outside [-0.5, 0.5]")
    out = _shape(model, np.abs(np.atleast_1d(arr)))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def periodic_psd(model, f):
    """Periodic continuation of the spectrum, defined for any real f."""
    arr = np.asarray(f, dtype=float)
    wrapped = arr - np.round(arr)
    out = _shape(model, np.abs(np.atleast_1d(wrapped)))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


_ACF_ABS_TOL = 1e-10


@functools.lru_cache(maxsize=65536)
def _rc_autocorrelation(model, lag):
    # even spectrum: r(l) = 2 * int_0^{f_d} S(f) cos(2 pi f l) df
    # flat core in closed form, cosine taper by cosine-weighted quadrature
    f1, w = model.flat_edge, 2.0 * np.pi * lag
    core = model.peak * (f1 if lag == 0 else math.sin(w * f1) / w)
    s = functools.partial(psd_value, model)
    kw = {} if lag == 0 else {"weight": "cos", "wvar": w}
    with warnings.catch_warnings():
        # roundoff warnings at large lags are judged by the error estimate below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        taper, err = integrate.quad(s, f1, model.f_d, epsabs=1e-13, epsrel=1e-12, limit=200, **kw)
    if not err <= _ACF_ABS_TOL:
        raise ArithmeticError(f"autocorrelation at lag {lag}: quadrature error {err:.3g}")
    return 2.0 * (core + taper)


def autocorrelation(model, lag):
    """r_h(lag) = E[h_{k+lag} h_k^*]; real for the symmetric spectra provided."""
    lag = abs(int(lag))
    if lag == 0:
        return float(model.sigma_h_sq)
    if model.kind is PsdKind.RECTANGULAR:
        return float(model.sigma_h_sq * np.sinc(2.0 * model.f_d * lag))
    return _rc_autocorrelation(model, lag)


def autocorrelation_sequence(model, n):
    """r_h(0), ..., r_h(n-1) as a float array."""
    if model.kind is PsdKind.RECTANGULAR:
        lags = np.arange(n)
        return model.sigma_h_sq * np.sinc(2.0 * model.f_d * lags)
    return np.array([autocorrelation(model, l) for l in range(n)])


@dataclass(frozen=True)
class CorrelationToeplitz:
    """Hermitian Toeplitz fading correlation; entry (k, l) is r_h(k - l).

    ``first_row`` holds r_h(0), ..., r_h(N-1).
    """

    first_row: np.ndarray
    N: int

    @property
    def matrix(self):
        c = np.asarray(self.first_row, dtype=complex)
        return la.toeplitz(c, np.conj(c))


def toeplitz_correlation(model, N):
    if N < 1:
        raise ValueError("block length must be >= 1")
    row = autocorrelation_sequence(model, N).astype(complex)
    return CorrelationToeplitz(first_row=row, N=N)


@dataclass(frozen=True)
class CirculantEquivalent:
    """Circulant matrix whose eigenvalues are spectrum samples on the N-point grid."""

    first_column: np.ndarray
    eigenvalues: np.ndarray

    @property
    def N(self):
        return len(self.eigenvalues)

    @property
    def matrix(self):
        return la.circulant(self.first_column)

    def reconstruct(self):
        """Build F diag(eigenvalues) F^H explicitly with the unitary DFT matrix."""
        n = self.N
        k = np.arange(n)
        F = np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)
        return (F * self.eigenvalues) @ F.conj().T


def circulant_equivalent(model, N):
    if N < 2:
        raise ValueError("block length must be >= 2")
    eig = periodic_psd(model, np.arange(N) / N)
    # c_k = (1/N) sum_l S~(l/N) exp(+j 2 pi l k / N)
    col = np.fft.ifft(eig)
    return CirculantEquivalent(first_column=col, eigenvalues=eig)


def weak_norm_gap(A, B):
    """Weak (normalized Frobenius) norm of A - B: sqrt(Tr[D^H D] / N)."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"need equal square matrices, got {A.shape} and {B.shape}")
    d = A - B
    return float(np.sqrt(np.sum(np.abs(d) ** 2) / A.shape[0]))
