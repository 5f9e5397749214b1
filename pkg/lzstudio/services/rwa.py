"""
Rotating-wave oracle for LZS Studio
Bessel-dressed gap, generalized Rabi frequency, the averaged resonance lineshape and the
closed-form relaxation and decoherence rates for longitudinal, transverse and mixed couplings,
and the same rates resolved over the drive sidebands.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np
import scipy.special

from ..errors import ParameterValidationError
from ..models.device import OhmicBath, TlsParams
from ..models.dynamics import DressedParams
from .bath import g_weight

logger = logging.getLogger(__name__)

MAX_ORDER = 200
MAX_ARGUMENT = 500.0
# "much larger" for the validity flags
SEPARATION = 10.0
# Bessel orders kept beyond |x| when summing drive sidebands
SIDEBAND_MARGIN = 30

RATE_LABELS = ("main", "appendix")


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind J_n(x) for integer n, |n| <= 200, |x| <= 500."""
    if int(n) != n:
        raise ParameterValidationError(f"Bessel order must be an integer, got {n}")
    if abs(n) > MAX_ORDER or not math.isfinite(x) or abs(x) > MAX_ARGUMENT:
        raise ParameterValidationError(f"Bessel arguments out of range: n={n}, x={x}")
    return float(scipy.special.jv(int(n), float(x)))


def bessel_zero(n: int, k: int = 1) -> float:
    """k-th positive zero of J_n."""
    return float(scipy.special.jn_zeros(abs(int(n)), k)[k - 1])


def nearest_resonance(tls: TlsParams, f_dc: float, omega0: float) -> int:
    """Index n of the multiphoton resonance closest to eps0 = n w0."""
    return int(round(tls.epsilon(f_dc) / omega0))


def dressed_params(tls: TlsParams, f_dc: float, f_ac: float, omega0: float, n: int) -> DressedParams:
    """
    Rotating-wave parameters of resonance n.

    Returns:
        DressedParams; the validity flags mark where the approximation is only qualitative
    """
    amplitude = tls.epsilon(f_ac)
    x = amplitude / omega0
    delta_n = tls.delta * bessel_j(-n, x)
    epsilon_n = tls.epsilon(f_dc) - n * omega0
    omega_n = math.hypot(epsilon_n, delta_n)
    if omega_n > 0:
        cos2phi, sin2phi = epsilon_n / omega_n, delta_n / omega_n
    else:
        cos2phi, sin2phi = 1.0, 0.0
    params = DressedParams(
        n=int(n), x=x, delta_n=delta_n, epsilon_n=epsilon_n, omega_n=omega_n,
        cos2phi=cos2phi, sin2phi=sin2phi,
        narrow_resonance=abs(epsilon_n) < tls.delta,
        fast_drive=amplitude * omega0 > SEPARATION * tls.delta ** 2,
    )
    if not params.rwa_valid:
        logger.debug(f"RWA outside its regime at n={n}, f_dc={f_dc:.4e}, f_ac={f_ac:.4e}")
    return params


def p_plus_averaged(dressed: DressedParams) -> float:
    """Time-averaged P+ = 1 - (1/2) delta_n^2 / ((n w0 - eps0)^2 + delta_n^2)."""
    denominator = dressed.epsilon_n ** 2 + dressed.delta_n ** 2
    if denominator == 0.0:
        return 1.0
    return 1.0 - 0.5 * dressed.delta_n ** 2 / denominator


@dataclass(frozen=True)
class DressedCoefficients:
    """Coupling coefficients of lambda (cos(theta) sigma_z + sin(theta) sigma_x) in the dressed basis."""
    a_x0: float
    a_xc: float
    a_ys: float
    a_z0: float
    a_zc: float
    c0: float

    @property
    def z0(self) -> float:
        """Amplitude at zero frequency (pure dephasing channel)."""
        return self.a_z0 + self.a_zc * self.c0

    @property
    def x_omega(self) -> float:
        """Amplitude at +-Omega_n (relaxation channel)."""
        return self.a_x0 + self.a_xc * self.c0


def dressed_coupling_coefficients(theta: float, phi: float, n: int, x: float,
                                  strength: float = 1.0) -> DressedCoefficients:
    """
    Dressed-basis coefficients for a coupling along angle theta, rotation angle phi.

    The oscillating sigma_y part averages out in the rotating-wave limit, so only c0 = J_{-n}(x)
    enters z(0) and x(Omega_n).
    """
    c2, s2 = math.cos(2.0 * phi), math.sin(2.0 * phi)
    longitudinal = strength * math.cos(theta)
    transverse = strength * math.sin(theta)
    return DressedCoefficients(
        a_x0=longitudinal * s2,
        a_xc=-transverse * c2,
        a_ys=-transverse,
        a_z0=longitudinal * c2,
        a_zc=transverse * s2,
        c0=bessel_j(-n, x),
    )


@dataclass(frozen=True)
class RwaRates:
    """
    Rotating-wave rates (main-text labels: gamma_r is population decay).

    Iterating yields (gamma_r, gamma_d).
    """
    gamma_r: float
    gamma_d: float
    emission: float
    absorption: float
    dephasing: float

    def __iter__(self) -> Iterator[float]:
        return iter((self.gamma_r, self.gamma_d))

    @property
    def gamma_phi(self) -> float:
        return self.gamma_d - 0.5 * self.gamma_r

    def labelled(self, labels: str = "main"):
        """
        (gamma_r, gamma_d) under the requested labelling.

        The appendix formulas attach the two labels the other way round.
        """
        if labels not in RATE_LABELS:
            raise ParameterValidationError(f"Unknown rate labels '{labels}', expected one of {RATE_LABELS}")
        return (self.gamma_r, self.gamma_d) if labels == "main" else (self.gamma_d, self.gamma_r)


def _rates(relaxation_amplitude: float, dephasing_amplitude: float, omega_n: float, bath: OhmicBath) -> RwaRates:
    emission = relaxation_amplitude ** 2 * g_weight(bath, -omega_n)
    absorption = relaxation_amplitude ** 2 * g_weight(bath, omega_n)
    # a z(0) sigma_z channel shifts the two levels in opposite directions: |2 z(0)|^2 g(0) / 2
    dephasing = 2.0 * dephasing_amplitude ** 2 * g_weight(bath, 0.0)
    gamma_r = emission + absorption
    return RwaRates(gamma_r=gamma_r, gamma_d=0.5 * gamma_r + dephasing,
                    emission=emission, absorption=absorption, dephasing=dephasing)


def rates_longitudinal(dressed: DressedParams, bath: OhmicBath, lambda_f: float) -> RwaRates:
    """Gamma_r = |lambda_f sin2phi|^2 [g(-Omega) + g(Omega)], Gamma_d = Gamma_r/2 + 2 |lambda_f cos2phi|^2 g(0)."""
    return _rates(lambda_f * dressed.sin2phi, lambda_f * dressed.cos2phi, dressed.omega_n, bath)


def rates_transverse(dressed: DressedParams, bath: OhmicBath, lambda_ch: float) -> RwaRates:
    """Gamma_r = |lambda J_{-n} cos2phi|^2 [g(-Omega) + g(Omega)], Gamma_d = Gamma_r/2 + 2 |lambda J_{-n} sin2phi|^2 g(0).

    The closed form of a coupling along sigma_x; see rates_resolved for sigma_y and for the
    drive sidebands the rotating-wave average discards.
    """
    c0 = bessel_j(-dressed.n, dressed.x)
    return _rates(lambda_ch * c0 * dressed.cos2phi, lambda_ch * c0 * dressed.sin2phi, dressed.omega_n, bath)


def rates_mixed(dressed: DressedParams, bath: OhmicBath, strength: float, theta: float) -> RwaRates:
    """Rates for lambda (cos(theta) sigma_z + sin(theta) sigma_x) on a single bath."""
    phi = 0.5 * math.atan2(dressed.sin2phi, dressed.cos2phi)
    coefficients = dressed_coupling_coefficients(theta, phi, dressed.n, dressed.x, strength)
    return _rates(coefficients.x_omega, coefficients.z0, dressed.omega_n, bath)


def _dressed_vectors(dressed: DressedParams) -> np.ndarray:
    """Columns: dressed ground (-Omega/2) and excited (+Omega/2) states in the |+>, |-> basis."""
    phi = 0.5 * math.atan2(dressed.sin2phi, dressed.cos2phi)
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def harmonic_couplings(dressed: DressedParams, couplings: Sequence[Tuple[str, float]],
                       sidebands: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    Fourier harmonics A_q of -sum_i lambda_i sigma_{axis_i} between the dressed Floquet modes.

    In the rotating frame sigma_+ picks up exp(-i phi_n(t)), phi_n = n w0 t + x sin(w0 t), so the
    q-th harmonic carries J_{q-n}(x) on sigma_+ and J_{-q-n}(x) on sigma_-. Without sidebands
    only q = 0 is kept, which is the rotating-wave average.

    Args:
        dressed: resonance parameters
        couplings: (axis, strength) pairs acting on one bath, axis in x, y, z
        sidebands: keep every harmonic with a non-negligible Bessel weight

    Returns:
        Tuple of (harmonic indices q, elements of shape (len(q), 2, 2))
    """
    n = dressed.n
    if sidebands:
        reach = abs(n) + int(math.ceil(abs(dressed.x))) + SIDEBAND_MARGIN
        qs = np.arange(-reach, reach + 1)
    else:
        qs = np.zeros(1, dtype=int)
    vectors = _dressed_vectors(dressed)
    raising = np.outer(vectors[0], vectors[1])
    lowering = np.outer(vectors[1], vectors[0])
    diagonal = np.outer(vectors[0], vectors[0]) - np.outer(vectors[1], vectors[1])
    j_raise = scipy.special.jv(qs - n, dressed.x)[:, None, None]
    j_lower = scipy.special.jv(-qs - n, dressed.x)[:, None, None]

    elements = np.zeros((len(qs), 2, 2), dtype=complex)
    for axis, strength in couplings:
        if axis == "z":
            elements[qs == 0] += -strength * diagonal
        elif axis == "x":
            elements += -strength * (j_raise * raising + j_lower * lowering)
        elif axis == "y":
            elements += -strength * (-1j * j_raise * raising + 1j * j_lower * lowering)
        else:
            raise ParameterValidationError(f"Unknown coupling axis '{axis}', expected one of x, y, z")
    return qs, elements


def rates_resolved(dressed: DressedParams, bath: OhmicBath, couplings: Sequence[Tuple[str, float]],
                   omega0: float, sidebands: bool = True) -> RwaRates:
    """
    Secular rates between the two dressed Floquet modes for couplings sharing one bath.

    absorption = sum_q g(Omega - q w0) |A_q[1,0]|^2, emission = sum_q g(-Omega - q w0) |A_q[0,1]|^2,
    dephasing = (1/2) sum_q g(-q w0) |A_q[0,0] - A_q[1,1]|^2.

    Couplings on the same bath add before squaring, so their cross terms are included. With
    ``sidebands=False`` a sigma_z or sigma_x coupling reproduces rates_longitudinal and
    rates_transverse; a sigma_y coupling relaxes without dephasing at q = 0 and only its
    sidebands dephase.
    """
    if omega0 <= 0:
        raise ParameterValidationError(f"omega0 must be > 0, got {omega0}")
    qs, elements = harmonic_couplings(dressed, couplings, sidebands)
    shifts = qs * omega0
    absorption = float(np.sum(g_weight(bath, dressed.omega_n - shifts) * np.abs(elements[:, 1, 0]) ** 2))
    emission = float(np.sum(g_weight(bath, -dressed.omega_n - shifts) * np.abs(elements[:, 0, 1]) ** 2))
    dephasing = 0.5 * float(np.sum(g_weight(bath, -shifts) * np.abs(elements[:, 0, 0] - elements[:, 1, 1]) ** 2))
    gamma_r = emission + absorption
    return RwaRates(gamma_r=gamma_r, gamma_d=0.5 * gamma_r + dephasing,
                    emission=emission, absorption=absorption, dephasing=dephasing)


def steady_p_plus(dressed: DressedParams, rates: RwaRates) -> float:
    """
    Stationary P+ of the dressed rate equation: 1/2 + (p_ground - p_excited) cos2phi / 2.

    Raises:
        ParameterValidationError: if the rates leave the populations undetermined
    """
    if rates.gamma_r <= 0:
        raise ParameterValidationError("No relaxation channel: the dressed populations are undetermined")
    imbalance = (rates.emission - rates.absorption) / rates.gamma_r
    return 0.5 + 0.5 * imbalance * dressed.cos2phi


def lineshape(tls: TlsParams, f_dc_values, f_ac: float, omega0: float) -> np.ndarray:
    """Averaged P+ over a detuning scan, each point using its nearest resonance."""
    return np.array([
        p_plus_averaged(dressed_params(tls, fd, f_ac, omega0, nearest_resonance(tls, fd, omega0)))
        for fd in np.asarray(f_dc_values, dtype=float)
    ])
