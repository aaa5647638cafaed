"""Finite-block LMMSE channel estimation and error-correlation algebra.

Everything here works in the zero-power-safe form

    h_hat = R_h X^H (X R_h X^H + sigma_n^2 I)^{-1} y,

restricted to the symbols that actually carry power, so pilot-only profiles
(mostly zeros) never need (X^H X)^{-1}.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .psd import psd_value

log = logging.getLogger(__name__)

_HERMITIAN_TOL = 1e-12
_JITTER = 1e-12


class EstimatorError(np.linalg.LinAlgError):
    pass


class NotPositiveDefiniteError(EstimatorError):
    pass


class ErrorKind(str, enum.Enum):
    PILOT_ONLY = "PilotOnly"
    JOINT_GENERAL = "JointGeneral"
    JOINT_CM = "JointCM"


@dataclass(frozen=True)
class PowerProfile:
    """Per-symbol transmit powers z_k = |x_k|^2 (the diagonal of X X^H)."""

    z: np.ndarray
    sigma_x_sq: float | None = None
    label: str | None = None

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim != 1:
            raise ValueError("power profile must be one-dimensional")
        if np.any(z < 0):
            raise ValueError("powers must be nonnegative")
        if self.sigma_x_sq is not None and z.mean() > self.sigma_x_sq + 1e-12:
            raise ValueError(f"mean power {z.mean()} exceeds sigma_x^2 = {self.sigma_x_sq}")
        object.__setattr__(self, "z", z)

    @property
    def N(self):
        return len(self.z)

    @classmethod
    def uniform(cls, N, sigma_x_sq):
        return cls(np.full(N, float(sigma_x_sq)), sigma_x_sq, "cm")

    @classmethod
    def pilots(cls, N, L, sigma_x_sq, offset=0):
        """Power sigma_x^2 on every L-th symbol starting at ``offset``, zero elsewhere."""
        z = np.zeros(N)
        z[offset::L] = sigma_x_sq
        return cls(z, sigma_x_sq, "pilot")

    def symbols(self):
        """Real nonnegative symbol amplitudes with these powers."""
        return np.sqrt(self.z)


@dataclass
class ErrorCorrelation:
    """LMMSE error correlation, together with what produced it.

    ``prior`` / ``z`` / ``sigma_n_sq`` are kept so that log-determinant
    differences can be taken in the well-conditioned information form.
    """

    matrix: np.ndarray
    kind: ErrorKind
    prior: np.ndarray | None = None
    z: np.ndarray | None = None
    sigma_n_sq: float | None = None
    events: list = field(default_factory=list)

    @property
    def N(self):
        return self.matrix.shape[0]


def _check_hermitian(R):
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise EstimatorError(f"correlation matrix must be square, got {R.shape}")
    scale = max(np.max(np.abs(R)), 1e-300)
    if np.max(np.abs(R - R.conj().T)) > _HERMITIAN_TOL * scale:
        raise EstimatorError("correlation matrix is not Hermitian")
    return R


def _cho(K, events, what):
    """Cholesky factor of a Hermitian matrix; one jitter retry, logged."""
    try:
        return la.cho_factor(K, lower=True, check_finite=True)
    except la.LinAlgError:
        pass
    jitter = _JITTER * max(float(np.real(np.trace(K))) / K.shape[0], 1e-300)
    msg = f"{what}: Cholesky failed, added diagonal jitter {jitter:.3g}"
    events.append(msg)
    log.warning(msg)
    try:
        return la.cho_factor(K + jitter * np.eye(K.shape[0]), lower=True)
    except la.LinAlgError:
        try:
            cond = np.linalg.cond(K)
        except np.linalg.LinAlgError:
            cond = np.inf
        raise NotPositiveDefiniteError(f"{what}: not positive definite after jitter (cond = {cond:.3g})") from None


def _active(x):
    return np.flatnonzero(np.abs(x) > 0)


def lmmse_filter(R_h, x, sigma_n_sq, events=None):
    """Return (G, active) with h_hat = G @ y[active].

    ``x`` holds the known transmit symbols; positions with x_k = 0 carry no
    channel information and are dropped exactly.
    """
    if not sigma_n_sq > 0:
        raise ValueError("sigma_n_sq must be positive")
    R = _check_hermitian(R_h)
    x = np.asarray(x)
    if x.shape != (R.shape[0],):
        raise ValueError(f"symbol vector of length {R.shape[0]} expected, got {x.shape}")
    events = [] if events is None else events
    act = _active(x)
    if act.size == 0:
        return np.zeros((R.shape[0], 0), dtype=complex), act
    xa = x[act]
    R_na = R[:, act]
    K = xa[:, None] * R[np.ix_(act, act)] * xa.conj()[None, :] + sigma_n_sq * np.eye(act.size)
    cf = _cho(K, events, "lmmse system")
    # G = R[:, A] X_A^H K^{-1}  ->  G^H = K^{-1} X_A R[A, :]
    G_H = la.cho_solve(cf, xa[:, None] * R_na.conj().T)
    return G_H.conj().T, act


def lmmse_estimate(R_h, x, y, sigma_n_sq):
    """LMMSE (= MAP, jointly Gaussian) estimate of the fading vector.

    ``y`` may be a length-N vector or an N x T array of independent blocks.
    """
    G, act = lmmse_filter(R_h, x, sigma_n_sq)
    y = np.asarray(y)
    if act.size == 0:
        return np.zeros(y.shape, dtype=complex)
    return G @ y[act]


def _info_terms(R, z, sigma_n_sq):
    """Return (act, s, A) with A = I + Z_A^{1/2} R_AA Z_A^{1/2} / sigma_n^2."""
    act = np.flatnonzero(z > 0)
    s = np.sqrt(z[act])
    A = np.eye(act.size) + (s[:, None] * R[np.ix_(act, act)] * s[None, :]) / sigma_n_sq
    return act, s, A


def error_correlation(R_h, profile, sigma_n_sq, kind=None):
    """Error correlation R_h - R_h X^H (X R_h X^H + sigma_n^2 I)^{-1} X R_h."""
    if not sigma_n_sq > 0:
        raise ValueError("sigma_n_sq must be positive")
    R = _check_hermitian(R_h).astype(complex)
    z = profile.z
    if z.shape != (R.shape[0],):
        raise ValueError("profile length does not match R_h")
    if kind is None:
        if profile.label == "pilot":
            kind = ErrorKind.PILOT_ONLY
        elif z.size and np.all(z == z[0]) and z[0] > 0:
            kind = ErrorKind.JOINT_CM
        else:
            kind = ErrorKind.JOINT_GENERAL
    events = []
    act = np.flatnonzero(z > 0)
    Re = R.copy()
    if act.size:
        x = np.sqrt(z[act])
        K = x[:, None] * R[np.ix_(act, act)] * x[None, :] + sigma_n_sq * np.eye(act.size)
        B = x[:, None] * R[act, :]
        cf = _cho(K, events, "error correlation")
        Re = R - B.conj().T @ la.cho_solve(cf, B)
    Re = 0.5 * (Re + Re.conj().T)
    return ErrorCorrelation(Re, ErrorKind(kind), R, z.copy(), float(sigma_n_sq), events)


def estimate_correlation(R_h, profile, sigma_n_sq):
    """Correlation of the estimate, G E[y y^H] G^H, computed from the filter."""
    x = profile.symbols()
    G, act = lmmse_filter(R_h, x.astype(complex), sigma_n_sq)
    if act.size == 0:
        return np.zeros_like(np.asarray(R_h), dtype=complex)
    R = np.asarray(R_h)
    xa = x[act]
    Ryy = xa[:, None] * R[np.ix_(act, act)] * xa[None, :] + sigma_n_sq * np.eye(act.size)
    return G @ Ryy @ G.conj().T


def logdet_hermitian(A, events=None, what="matrix"):
    """log det of a Hermitian positive definite matrix via its Cholesky pivots."""
    A = np.asarray(A)
    events = [] if events is None else events
    c, _ = _cho(A, events, what)
    return 2.0 * float(np.sum(np.log(np.real(np.diag(c)))))


def logdet_information(R_h, z, sigma_n_sq, events=None):
    """g(Z) = log det(R_h Z / sigma_n^2 + I), evaluated on the Hermitian form."""
    R = np.asarray(R_h)
    z = np.asarray(z, dtype=float)
    _, _, A = _info_terms(R, z, sigma_n_sq)
    if A.shape[0] == 0:
        return 0.0
    return logdet_hermitian(A, events, "information matrix")


def _same_prior(a, b):
    if a.prior is None or b.prior is None or a.sigma_n_sq is None:
        return False
    if a.prior.shape != b.prior.shape or a.sigma_n_sq != b.sigma_n_sq:
        return False
    return a.prior is b.prior or np.array_equal(a.prior, b.prior)


def logdet_rate_gap(R_e_pil, R_e_joint, events=None):
    """(1/N) [log det R_e_pil - log det R_e_joint] in nats per symbol.

    When both error correlations come from the same prior R_h, the identity
    log det R_e = log det R_h - g(Z) turns the difference into
    (1/N)[g(Z_joint) - g(Z_pil)], whose matrices have all eigenvalues >= 1.
    This matters because band-limited R_h is numerically singular, which
    leaves the error matrices with eigenvalues at rounding level. Otherwise
    both matrices are factored directly.
    """
    events = [] if events is None else events
    if isinstance(R_e_pil, ErrorCorrelation) and isinstance(R_e_joint, ErrorCorrelation) \
            and _same_prior(R_e_pil, R_e_joint):
        if R_e_pil.N != R_e_joint.N:
            raise ValueError("block lengths differ")
        n = R_e_pil.N
        g_p = logdet_information(R_e_pil.prior, R_e_pil.z, R_e_pil.sigma_n_sq, events)
        g_j = logdet_information(R_e_joint.prior, R_e_joint.z, R_e_joint.sigma_n_sq, events)
        return (g_j - g_p) / n
    A = R_e_pil.matrix if isinstance(R_e_pil, ErrorCorrelation) else np.asarray(R_e_pil)
    B = R_e_joint.matrix if isinstance(R_e_joint, ErrorCorrelation) else np.asarray(R_e_joint)
    if A.shape != B.shape:
        raise ValueError("block lengths differ")
    return (logdet_hermitian(A, events, "R_e_pil") - logdet_hermitian(B, events, "R_e_joint")) / A.shape[0]


# spectra ---------------------------------------------------------------------

def wiener_filter_spectrum(model, rho, L, f):
    """Pilot-rate MMSE interpolation filter response at symbol-rate frequency f.

    The pilot-rate spectrum is S_h(f) / L, so W = (S_h/L) / (S_h/L + sigma_n^2/sigma_x^2)
    with sigma_n^2 / sigma_x^2 = sigma_h^2 / rho.
    """
    s = np.asarray(psd_value(model, f)) / L
    if rho == 0:
        return np.zeros_like(s) if s.ndim else 0.0
    out = s / (s + model.sigma_h_sq / rho)
    return out if out.ndim else float(out)


def error_spectrum_pilot(model, rho, L, f):
    s = np.asarray(psd_value(model, f))
    out = s / ((rho / L) * s / model.sigma_h_sq + 1.0)
    return out if out.ndim else float(out)


def error_spectrum_joint_cm(model, rho, f):
    return error_spectrum_pilot(model, rho, 1, f)


# concavity and constant-modulus checks ---------------------------------------

@dataclass
class ConcavityReport:
    thetas: np.ndarray
    margins: np.ndarray          # g(mix) - [theta g1 + (1-theta) g2]
    second_derivative: np.ndarray
    tol: float

    @property
    def violations(self):
        return int(np.sum(self.margins < -self.tol) + np.sum(self.second_derivative > self.tol))

    @property
    def passed(self):
        return self.violations == 0


def line_eigenvalues(R_h, z_base, delta, sigma_n_sq):
    """Eigenvalues lambda_k with g(Z_base + t Delta) = g(Z_base) + sum log(1 + t lambda_k).

    They are the eigenvalues of (sigma_n^2 I + R_h Z_base)^{-1} R_h Delta, which
    avoids forming R_h^{-1}.
    """
    R = np.asarray(R_h)
    n = R.shape[0]
    M = sigma_n_sq * np.eye(n) + R * np.asarray(z_base)[None, :]
    lam = np.linalg.eigvals(np.linalg.solve(M, R * np.asarray(delta)[None, :]))
    return np.real(lam)


def concavity_probe(R_h, Z1, Z2, thetas, sigma_n_sq=1.0, tol=1e-9):
    """Check concavity of g along the segment between two power profiles."""
    z1 = Z1.z if isinstance(Z1, PowerProfile) else np.asarray(Z1, float)
    z2 = Z2.z if isinstance(Z2, PowerProfile) else np.asarray(Z2, float)
    thetas = np.asarray(thetas, dtype=float)
    g1 = logdet_information(R_h, z1, sigma_n_sq)
    g2 = logdet_information(R_h, z2, sigma_n_sq)
    margins = np.array([
        logdet_information(R_h, t * z1 + (1 - t) * z2, sigma_n_sq) - (t * g1 + (1 - t) * g2)
        for t in thetas
    ])
    lam = line_eigenvalues(R_h, z2, z1 - z2, sigma_n_sq)
    d2 = np.array([-np.sum(lam ** 2 / (1.0 + t * lam) ** 2) for t in thetas])
    return ConcavityReport(thetas, margins, d2, tol)


@dataclass
class CmReport:
    N: int
    batch: int
    mean_g: float            # average of g(Z_i) over the sampled profiles
    g_of_mean: float         # g at the empirical mean profile
    g_cm: float              # g(sigma_x^2 I)
    g_expected: float | None # g at the distribution mean, if supplied

    @property
    def jensen_margin(self):
        return self.g_of_mean - self.mean_g

    @property
    def cm_margin(self):
        """g(sigma_x^2 I) - mean g; positive means CM gives the smaller error entropy."""
        return self.g_cm - self.mean_g

    @property
    def monotonicity_margin(self):
        return None if self.g_expected is None else self.g_cm - self.g_expected

    @property
    def entropy_rate_margin(self):
        """Per-symbol gap between the averaged error log-det bound and the CM error log-det."""
        return self.cm_margin / self.N

    def passed(self, tol=1e-9):
        ok = self.jensen_margin >= -tol and self.cm_margin >= -tol
        if self.g_expected is not None:
            ok = ok and self.monotonicity_margin >= -tol
        return ok


def cm_minimality_check(R_h, profiles, sigma_n_sq, sigma_x_sq, expected_z=None):
    """Finite-N Jensen and monotonicity checks behind constant-modulus optimality.

    ``profiles`` is a sequence of PowerProfile or a (batch, N) array of powers
    drawn from one input distribution. The average power constraint binds the
    distribution, not each draw. It is checked on ``expected_z`` (the
    distribution mean) when given, else on the batch mean with a
    four-standard-error allowance.
    """
    Z = np.array([p.z if isinstance(p, PowerProfile) else np.asarray(p, float) for p in profiles])
    if Z.ndim != 2 or Z.shape[1] != np.asarray(R_h).shape[0]:
        raise ValueError("profiles must be a (batch, N) collection matching R_h")
    if np.any(Z < 0):
        raise ValueError("powers must be nonnegative")
    if expected_z is not None:
        expected_z = np.asarray(expected_z, float)
        if expected_z.mean() > sigma_x_sq + 1e-12:
            raise ValueError("expected profile violates the average power constraint")
    else:
        per = Z.mean(axis=1)
        se = per.std(ddof=1) / np.sqrt(len(per)) if len(per) > 1 else 0.0
        if per.mean() > sigma_x_sq + max(4.0 * se, 1e-12):
            raise ValueError(f"profiles violate the average power constraint: mean {per.mean()} > {sigma_x_sq}")
    n = Z.shape[1]
    gs = np.array([logdet_information(R_h, z, sigma_n_sq) for z in Z])
    return CmReport(
        N=n,
        batch=len(Z),
        mean_g=float(gs.mean()),
        g_of_mean=logdet_information(R_h, Z.mean(axis=0), sigma_n_sq),
        g_cm=logdet_information(R_h, np.full(n, sigma_x_sq), sigma_n_sq),
        g_expected=None if expected_z is None else logdet_information(R_h, expected_z, sigma_n_sq),
    )
