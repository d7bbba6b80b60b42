import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional

from helpers import PhysicalityError, ValidationError, require
from lambda_dynamics import DecayCoefficients

logger = logging.getLogger(__name__)

# free space: each circular transition decays at gamma0/2
FREE_SPACE_IM_G = 1.0

# relative slack for the positive-semidefinite checks
_PSD_SLACK = 1e-12


class Basis(Enum):
    CARTESIAN = "cartesian"
    CIRCULAR = "circular"


@dataclass(frozen=True)
class GreenSample:
    """Imaginary part of the Green tensor at the emitter.

    Cartesian samples fill im_gxx, im_gyy, im_gxy; circular samples fill
    im_gpp (Im G++) and im_gpm (Im G+-, complex when Im Gxy != 0).
    """
    basis: Basis = Basis.CARTESIAN
    im_gxx: float = 0.0
    im_gyy: float = 0.0
    im_gxy: float = 0.0
    im_gpp: float = 0.0
    im_gpm: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'basis', Basis(self.basis))
        if self.basis is Basis.CARTESIAN:
            gxx, gyy, gxy = float(self.im_gxx), float(self.im_gyy), float(self.im_gxy)
            if gxx < 0 or gyy < 0:
                raise PhysicalityError(f"passivity requires Im Gxx, Im Gyy >= 0 (got {gxx}, {gyy})")
            if gxy * gxy > gxx * gyy * (1 + _PSD_SLACK) + 1e-300:
                raise PhysicalityError("Im G is not positive semidefinite (Im Gxy^2 > Im Gxx Im Gyy)")
            object.__setattr__(self, 'im_gxx', gxx)
            object.__setattr__(self, 'im_gyy', gyy)
            object.__setattr__(self, 'im_gxy', gxy)
        else:
            gpp, gpm = float(self.im_gpp), complex(self.im_gpm)
            if gpp < 0:
                raise PhysicalityError(f"passivity requires Im G++ >= 0 (got {gpp})")
            if abs(gpm) > gpp * (1 + _PSD_SLACK):
                raise PhysicalityError(f"|Im G+-| = {abs(gpm)!r} exceeds Im G++ = {gpp!r}")
            object.__setattr__(self, 'im_gpp', gpp)
            object.__setattr__(self, 'im_gpm', gpm)

    @classmethod
    def cartesian(cls, im_gxx: float, im_gyy: float, im_gxy: float = 0.0) -> "GreenSample":
        return cls(Basis.CARTESIAN, im_gxx=im_gxx, im_gyy=im_gyy, im_gxy=im_gxy)

    @classmethod
    def circular(cls, im_gpp: float, im_gpm: complex) -> "GreenSample":
        return cls(Basis.CIRCULAR, im_gpp=im_gpp, im_gpm=im_gpm)

    def to_dict(self) -> Dict:
        if self.basis is Basis.CARTESIAN:
            return {
                'basis': self.basis.value,
                'im_gxx': self.im_gxx,
                'im_gyy': self.im_gyy,
                'im_gxy': self.im_gxy,
            }
        return {
            'basis': self.basis.value,
            'im_gpp': self.im_gpp,
            'im_gpm_re': self.im_gpm.real,
            'im_gpm_im': self.im_gpm.imag,
        }


@dataclass(frozen=True)
class DipolePair:
    d01: float
    d02: float

    def __post_init__(self):
        object.__setattr__(self, 'd01', require('length', self.d01))
        object.__setattr__(self, 'd02', require('length', self.d02))


def load_green_sample(record: Dict) -> GreenSample:
    """Build a GreenSample from a JSON record"""
    try:
        basis = Basis(record.get('basis', 'cartesian'))
        if basis is Basis.CARTESIAN:
            return GreenSample.cartesian(
                float(record['im_gxx']),
                float(record['im_gyy']),
                float(record.get('im_gxy', 0.0)),
            )
        gpm = complex(float(record.get('im_gpm_re', record.get('im_gpm', 0.0))),
                      float(record.get('im_gpm_im', 0.0)))
        return GreenSample.circular(float(record['im_gpp']), gpm)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError(f"malformed Green sample record {record!r}: {e}") from e


def free_space_sample() -> GreenSample:
    return GreenSample.cartesian(FREE_SPACE_IM_G, FREE_SPACE_IM_G)


def green_from_rates(gamma_x: float, gamma_y: float, gamma0: float = 1.0) -> GreenSample:
    """Green sample whose linear-dipole decay rates are gamma_x and gamma_y"""
    gamma_x = require('rate', gamma_x)
    gamma_y = require('rate', gamma_y)
    gamma0 = require('positive_rate', gamma0)
    return GreenSample.cartesian(FREE_SPACE_IM_G * gamma_x / gamma0, FREE_SPACE_IM_G * gamma_y / gamma0)


def to_circular(g: GreenSample) -> GreenSample:
    """G++ = (Gxx + Gyy)/2, G+- = (Gxx - Gyy - 2i Gxy)/2"""
    if g.basis is not Basis.CARTESIAN:
        raise ValidationError("to_circular expects a cartesian sample")
    gpp = 0.5 * (g.im_gxx + g.im_gyy)
    gpm = complex(0.5 * (g.im_gxx - g.im_gyy), -g.im_gxy)
    return GreenSample.circular(gpp, gpm)


def to_cartesian(g: GreenSample) -> GreenSample:
    """Inverse of to_circular"""
    if g.basis is not Basis.CIRCULAR:
        raise ValidationError("to_cartesian expects a circular sample")
    return GreenSample.cartesian(
        g.im_gpp + g.im_gpm.real,
        g.im_gpp - g.im_gpm.real,
        -g.im_gpm.imag,
    )


def coefficient_R(d: DipolePair) -> float:
    """Emitter factor d01 d02 / (d01^2 + d02^2), maximal (0.5) for equal dipoles"""
    return d.d01 * d.d02 / (d.d01 ** 2 + d.d02 ** 2)


def coefficient_A(g: GreenSample) -> float:
    """Real anisotropy (Im Gxx - Im Gyy)/(Im Gxx + Im Gyy), or Im G+- / Im G++"""
    if g.basis is Basis.CARTESIAN:
        if g.im_gxy != 0.0:
            raise ValidationError("coefficient_A is real only for Im Gxy = 0; use anisotropy_general")
        denominator = g.im_gxx + g.im_gyy
        if denominator <= 0:
            raise ValidationError("Im Gxx + Im Gyy must be > 0")
        return (g.im_gxx - g.im_gyy) / denominator

    if g.im_gpm.imag != 0.0:
        raise ValidationError("coefficient_A is real only for a real Im G+-; use anisotropy_general")
    if g.im_gpp <= 0:
        raise ValidationError("Im G++ must be > 0")
    return g.im_gpm.real / g.im_gpp


def anisotropy_general(g: GreenSample) -> complex:
    """Complex anisotropy (Im Gxx - Im Gyy - 2i Im Gxy)/(Im Gxx + Im Gyy)"""
    # NOTE: no realised design has Im Gxy != 0; this branch is formula-only
    if g.basis is Basis.CIRCULAR:
        if g.im_gpp <= 0:
            raise ValidationError("Im G++ must be > 0")
        return g.im_gpm / g.im_gpp
    denominator = g.im_gxx + g.im_gyy
    if denominator <= 0:
        raise ValidationError("Im Gxx + Im Gyy must be > 0")
    return complex(g.im_gxx - g.im_gyy, -2.0 * g.im_gxy) / denominator


def decay_coefficients(g: GreenSample, d: DipolePair, gamma0: float = 1.0,
                       omega0: float = 0.0) -> DecayCoefficients:
    """gamma_i and kappa12 in units anchored to gamma0 (free space, equal dipoles: gamma_i = gamma0/2)"""
    gamma0 = require('positive_rate', gamma0)
    if g.basis is Basis.CIRCULAR:
        g = to_cartesian(g)
    # dipoles measured against their rms value, so only their ratio matters
    d_ref_sq = 0.5 * (d.d01 ** 2 + d.d02 ** 2)
    scale = 0.5 * gamma0 / (FREE_SPACE_IM_G * d_ref_sq)
    diagonal = 0.5 * (g.im_gxx + g.im_gyy)
    cross = 0.5 * complex(g.im_gxx - g.im_gyy, -2.0 * g.im_gxy)

    coeffs = DecayCoefficients(
        gamma1=scale * d.d01 ** 2 * diagonal,
        gamma2=scale * d.d02 ** 2 * diagonal,
        kappa12=scale * d.d01 * d.d02 * cross,
        omega0=omega0,
    )
    logger.debug(f"decay coefficients {coeffs}")
    return coeffs


def coherence(g: GreenSample, d: DipolePair) -> complex:
    """Steady-state ground coherence rho12 = R x A"""
    if g.basis is Basis.CARTESIAN and g.im_gxy != 0.0:
        return coefficient_R(d) * anisotropy_general(g)
    if g.basis is Basis.CIRCULAR and g.im_gpm.imag != 0.0:
        return coefficient_R(d) * anisotropy_general(g)
    return complex(coefficient_R(d) * coefficient_A(g))


def basis_agreement(g: GreenSample, d: DipolePair) -> float:
    """|coherence via Cartesian components - coherence via circular components|"""
    cartesian = g if g.basis is Basis.CARTESIAN else to_cartesian(g)
    circular = g if g.basis is Basis.CIRCULAR else to_circular(g)
    return abs(coherence(cartesian, d) - coherence(circular, d))


def describe(g: GreenSample, d: Optional[DipolePair] = None) -> Dict[str, object]:
    """Summary fields for reports"""
    cartesian = g if g.basis is Basis.CARTESIAN else to_cartesian(g)
    circular = to_circular(cartesian)
    fields = {
        'im_gxx': cartesian.im_gxx,
        'im_gyy': cartesian.im_gyy,
        'im_gxy': cartesian.im_gxy,
        'im_gpp': circular.im_gpp,
        'im_gpm': circular.im_gpm,
        'anisotropy': anisotropy_general(cartesian),
    }
    if d is not None:
        fields['R'] = coefficient_R(d)
        fields['rho12_inf'] = coherence(cartesian, d)
    return fields
