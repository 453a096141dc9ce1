"""Two-phase material models and piecewise-smooth manufactured vector fields.

All fields carry hand-differentiated closed-form derivatives and evaluate
vectorized: ``value`` maps points of shape (..., 3) to (..., 3), ``grad`` to
(..., 3, 3) with ``grad[..., i, j] = d u_i / d x_j``, and ``hessian`` to
(..., 3, 3, 3) with ``hessian[..., i, j, k] = d^2 u_i / d x_j d x_k``.

Conventions for a planar interface with unit normal n pointing from the minus
side into the plus side: points with nonnegative signed distance (the plus
region together with the interface itself) take the plus-side values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .tensor import E3, IDENTITY, Mat3, Vec3


class SideTag(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class PlanarInterface:
    """An oriented plane: a point on it and the unit normal into the plus side."""

    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        point = np.asarray(self.point, dtype=float)
        normal = np.asarray(self.normal, dtype=float)
        nrm = np.linalg.norm(normal)
        if abs(nrm - 1.0) > 1e-8:
            raise ValueError("interface normal must be a unit vector")
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "normal", normal / nrm)

    def signed_distance(self, x) -> np.ndarray:
        """Positive on the plus side, zero on the plane."""
        x = np.asarray(x, dtype=float)
        return (x - self.point) @ self.normal

    def side_of(self, x) -> np.ndarray:
        return self.signed_distance(x) >= 0.0

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        sd = self.signed_distance(x)
        return x - np.multiply.outer(sd, self.normal)


def signed_distance(interface: PlanarInterface, x) -> np.ndarray:
    return interface.signed_distance(x)


# a plane through the origin normal to the third axis; the default interface
# of the manufactured two-phase configurations
INTERFACE_Z = PlanarInterface(np.zeros(3), E3)


@dataclass(frozen=True)
class AnalyticVectorField:
    """Closed-form vector field with supplied first and second derivatives."""

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]

    def __add__(self, other: "AnalyticVectorField") -> "AnalyticVectorField":
        return AnalyticVectorField(
            value=lambda p: self.value(p) + other.value(p),
            grad=lambda p: self.grad(p) + other.grad(p),
            hessian=lambda p: self.hessian(p) + other.hessian(p),
        )

    def __mul__(self, a: float) -> "AnalyticVectorField":
        a = float(a)
        return AnalyticVectorField(
            value=lambda p: a * self.value(p),
            grad=lambda p: a * self.grad(p),
            hessian=lambda p: a * self.hessian(p),
        )

    __rmul__ = __mul__


@dataclass(frozen=True)
class AnalyticScalarField:
    """Closed-form scalar field with supplied derivatives."""

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None


def _select(mask, plus, minus):
    # broadcast a (...,) side mask against (..., 3, ...) component axes
    extra = plus.ndim - mask.ndim
    return np.where(mask.reshape(mask.shape + (1,) * extra), plus, minus)


@dataclass(frozen=True)
class PiecewiseField:
    """Vector field with independent closed forms on each side of an interface.

    Without an interface the field is globally smooth and only the plus side
    is used.  With one, the field is required to be continuous across it
    (checked pointwise by the test suite, not at construction).
    """

    plus_side: AnalyticVectorField
    minus_side: AnalyticVectorField
    interface: Optional[PlanarInterface] = None

    @classmethod
    def smooth(cls, field: AnalyticVectorField) -> "PiecewiseField":
        return cls(field, field, None)

    def _side(self, side: SideTag) -> AnalyticVectorField:
        return self.plus_side if side is SideTag.PLUS else self.minus_side

    def value_on(self, x, side: SideTag) -> np.ndarray:
        return self._side(side).value(np.asarray(x, dtype=float))

    def grad_on(self, x, side: SideTag) -> np.ndarray:
        return self._side(side).grad(np.asarray(x, dtype=float))

    def hessian_on(self, x, side: SideTag) -> np.ndarray:
        return self._side(side).hessian(np.asarray(x, dtype=float))

    def _eval(self, x, attr):
        x = np.asarray(x, dtype=float)
        if self.interface is None or self.plus_side is self.minus_side:
            return getattr(self.plus_side, attr)(x)
        mask = self.interface.side_of(x)
        return _select(mask, getattr(self.plus_side, attr)(x),
                       getattr(self.minus_side, attr)(x))

    def value(self, x) -> np.ndarray:
        return self._eval(x, "value")

    def grad(self, x) -> np.ndarray:
        return self._eval(x, "grad")

    def hessian(self, x) -> np.ndarray:
        return self._eval(x, "hessian")

    def __add__(self, other: "PiecewiseField") -> "PiecewiseField":
        if (other.interface is None) != (self.interface is None):
            raise ValueError("cannot combine fields with and without an interface")
        return PiecewiseField(self.plus_side + other.plus_side,
                              self.minus_side + other.minus_side, self.interface)

    def __mul__(self, a: float) -> "PiecewiseField":
        if self.plus_side is self.minus_side:
            return PiecewiseField.smooth(a * self.plus_side)
        return PiecewiseField(a * self.plus_side, a * self.minus_side, self.interface)

    __rmul__ = __mul__


@dataclass(frozen=True)
class TwoPhaseMaterial:
    """Piecewise-constant Lamé parameters separated by a planar interface.

    Points on the interface take the plus values.
    """

    lambda_plus: float
    mu_plus: float
    lambda_minus: float
    mu_minus: float
    interface: PlanarInterface

    def __post_init__(self):
        if self.mu_plus <= 0 or self.mu_minus <= 0:
            raise ValueError("shear moduli must be positive")

    def lame_at(self, x):
        x = np.asarray(x, dtype=float)
        mask = self.interface.side_of(x)
        lam = np.where(mask, self.lambda_plus, self.lambda_minus)
        mu = np.where(mask, self.mu_plus, self.mu_minus)
        return lam, mu

    def lame_on(self, side: SideTag):
        if side is SideTag.PLUS:
            return self.lambda_plus, self.mu_plus
        return self.lambda_minus, self.mu_minus

    def lame_grad_at(self, x):
        # piecewise constant: zero gradient on each side
        x = np.asarray(x, dtype=float)
        z = np.zeros(x.shape)
        return z, z


@dataclass(frozen=True)
class SmoothMaterial:
    """Lamé parameters given by smooth closed-form scalar fields."""

    lam: AnalyticScalarField
    mu: AnalyticScalarField
    interface: Optional[PlanarInterface] = None

    def lame_at(self, x):
        x = np.asarray(x, dtype=float)
        return self.lam.value(x), self.mu.value(x)

    def lame_on(self, side: SideTag):
        raise TypeError("a smooth material has no one-sided constants; "
                        "evaluate lame_at at a point instead")

    def lame_grad_at(self, x):
        x = np.asarray(x, dtype=float)
        return self.lam.grad(x), self.mu.grad(x)


Material = TwoPhaseMaterial | SmoothMaterial


def constant_material(lam: float, mu: float) -> SmoothMaterial:
    def const(c):
        return AnalyticScalarField(
            value=lambda p: np.full(p.shape[:-1], c),
            grad=lambda p: np.zeros(p.shape),
        )

    return SmoothMaterial(const(lam), const(mu))


def lame_at(material: Material, x):
    """Lamé parameters (lambda, mu) at a point or array of points."""
    return material.lame_at(x)


def _lame_for(material: Material, x, side: SideTag):
    if isinstance(material, TwoPhaseMaterial):
        return material.lame_on(side)
    return material.lame_at(x)


def stress(material: Material, field: PiecewiseField, x, side: SideTag = SideTag.PLUS) -> Mat3:
    """Isotropic stress lam (div u) I + mu (grad u + grad u^T), one-sided."""
    x = np.asarray(x, dtype=float)
    lam, mu = _lame_for(material, x, side)
    g = field.grad_on(x, side)
    div = np.trace(g)
    return lam * div * IDENTITY + mu * (g + g.T)


def traction_jump(material: TwoPhaseMaterial, field: PiecewiseField, x) -> Vec3:
    """Jump sigma(x+) n - sigma(x-) n of the traction across the interface."""
    if not isinstance(material, TwoPhaseMaterial):
        raise TypeError("traction jump requires a two-phase material")
    x = np.asarray(x, dtype=float)
    iface = material.interface
    if abs(iface.signed_distance(x)) > 1e-12:
        raise ValueError("point is not on the material interface")
    n = iface.normal
    sp = stress(material, field, x, SideTag.PLUS)
    sm = stress(material, field, x, SideTag.MINUS)
    return (sp - sm) @ n


def _second_derivative_parts(field: PiecewiseField, x, side: SideTag):
    h = field.hessian_on(x, side)
    lap = np.einsum("ikk->i", h)
    grad_div = np.einsum("jji->i", h)
    return lap, grad_div


def navier(material: Material, field: PiecewiseField, x, side: SideTag = SideTag.PLUS) -> Vec3:
    """grad(lam div u) + div(mu (grad u + grad u^T)) from one-sided derivatives."""
    x = np.asarray(x, dtype=float)
    lam, mu = _lame_for(material, x, side)
    glam, gmu = material.lame_grad_at(x)
    g = field.grad_on(x, side)
    div = np.trace(g)
    lap, grad_div = _second_derivative_parts(field, x, side)
    return div * glam + lam * grad_div + (g + g.T) @ gmu + mu * (lap + grad_div)


def navier_s(material: Material, field: PiecewiseField, x, side: SideTag = SideTag.PLUS) -> Vec3:
    """The shear-modulus part: grad(mu div u) + div(mu (grad u + grad u^T))."""
    x = np.asarray(x, dtype=float)
    _, mu = _lame_for(material, x, side)
    _, gmu = material.lame_grad_at(x)
    g = field.grad_on(x, side)
    div = np.trace(g)
    lap, grad_div = _second_derivative_parts(field, x, side)
    return div * gmu + (g + g.T) @ gmu + mu * (lap + 2.0 * grad_div)


def navier_d(material: Material, field: PiecewiseField, x, side: SideTag = SideTag.PLUS) -> Vec3:
    """The dilatational part: grad((lam - mu) div u)."""
    x = np.asarray(x, dtype=float)
    lam, mu = _lame_for(material, x, side)
    glam, gmu = material.lame_grad_at(x)
    g = field.grad_on(x, side)
    div = np.trace(g)
    _, grad_div = _second_derivative_parts(field, x, side)
    return div * (glam - gmu) + (lam - mu) * grad_div


# ---------------------------------------------------------------------------
# manufactured configurations
# ---------------------------------------------------------------------------


def constant_field(c) -> AnalyticVectorField:
    c = np.asarray(c, dtype=float)

    def value(p):
        out = np.empty(p.shape)
        out[...] = c
        return out

    return AnalyticVectorField(
        value=value,
        grad=lambda p: np.zeros(p.shape[:-1] + (3, 3)),
        hessian=lambda p: np.zeros(p.shape[:-1] + (3, 3, 3)),
    )


def linear_field(c, g) -> AnalyticVectorField:
    c = np.asarray(c, dtype=float)
    g = np.asarray(g, dtype=float)

    def grad(p):
        out = np.empty(p.shape[:-1] + (3, 3))
        out[...] = g
        return out

    return AnalyticVectorField(
        value=lambda p: c + p @ g.T,
        grad=grad,
        hessian=lambda p: np.zeros(p.shape[:-1] + (3, 3, 3)),
    )


def _quadratic_x1_field() -> AnalyticVectorField:
    # u(x) = (x_1^2, 0, 0)
    def value(p):
        out = np.zeros(p.shape)
        out[..., 0] = p[..., 0] ** 2
        return out

    def grad(p):
        out = np.zeros(p.shape[:-1] + (3, 3))
        out[..., 0, 0] = 2.0 * p[..., 0]
        return out

    def hessian(p):
        out = np.zeros(p.shape[:-1] + (3, 3, 3))
        out[..., 0, 0, 0] = 2.0
        return out

    return AnalyticVectorField(value, grad, hessian)


def _trig_field() -> AnalyticVectorField:
    # u(x) = (sin x_2, sin x_3, sin x_1)
    def value(p):
        out = np.empty(p.shape)
        out[..., 0] = np.sin(p[..., 1])
        out[..., 1] = np.sin(p[..., 2])
        out[..., 2] = np.sin(p[..., 0])
        return out

    def grad(p):
        out = np.zeros(p.shape[:-1] + (3, 3))
        out[..., 0, 1] = np.cos(p[..., 1])
        out[..., 1, 2] = np.cos(p[..., 2])
        out[..., 2, 0] = np.cos(p[..., 0])
        return out

    def hessian(p):
        out = np.zeros(p.shape[:-1] + (3, 3, 3))
        out[..., 0, 1, 1] = -np.sin(p[..., 1])
        out[..., 1, 2, 2] = -np.sin(p[..., 2])
        out[..., 2, 0, 0] = -np.sin(p[..., 0])
        return out

    return AnalyticVectorField(value, grad, hessian)


def _axial_ramp_field(slope: float) -> AnalyticVectorField:
    # u(x) = (0, 0, slope * x_3)
    g = np.zeros((3, 3))
    g[2, 2] = slope
    return linear_field(np.zeros(3), g)


def _trig_material() -> SmoothMaterial:
    mu = AnalyticScalarField(
        value=lambda p: 2.0 + 0.5 * np.sin(p[..., 0]),
        grad=lambda p: np.stack(
            [0.5 * np.cos(p[..., 0]), np.zeros(p.shape[:-1]), np.zeros(p.shape[:-1])],
            axis=-1,
        ),
    )
    lam = AnalyticScalarField(
        value=lambda p: 3.0 + 0.5 * np.sin(p[..., 0]),
        grad=mu.grad,
    )
    return SmoothMaterial(lam, mu)


_CONTRAST_MATERIAL = dict(lambda_plus=1.0, mu_plus=1.0,
                          lambda_minus=2.0, mu_minus=2.0)


def _build_constant():
    field = PiecewiseField.smooth(constant_field([0.5, -0.25, 1.0]))
    return field, constant_material(1.0, 1.0)


def _build_linear():
    g = np.array([[0.2, -0.5, 0.1],
                  [0.4, 0.3, -0.2],
                  [-0.1, 0.6, 0.5]])
    field = PiecewiseField.smooth(linear_field([0.1, -0.2, 0.3], g))
    return field, constant_material(1.0, 1.0)


def _build_quadratic():
    return PiecewiseField.smooth(_quadratic_x1_field()), constant_material(1.0, 1.0)


def _build_trig_smooth():
    return PiecewiseField.smooth(_trig_field()), constant_material(1.0, 1.0)


def _build_patch_jump_zero_traction():
    # continuous ramp with a gradient kink chosen so the traction jump vanishes:
    # (lam+2mu) du3/dx3 matches across the interface
    field = PiecewiseField(_axial_ramp_field(2.0), _axial_ramp_field(1.0), INTERFACE_Z)
    return field, TwoPhaseMaterial(interface=INTERFACE_Z, **_CONTRAST_MATERIAL)


def _build_gradient_jump():
    # globally smooth ramp; only the material jumps, so the traction does too
    field = PiecewiseField(_axial_ramp_field(1.0), _axial_ramp_field(1.0), INTERFACE_Z)
    return field, TwoPhaseMaterial(interface=INTERFACE_Z, **_CONTRAST_MATERIAL)


def _build_smooth_material_trig():
    return PiecewiseField.smooth(_trig_field()), _trig_material()


_REGISTRY = {
    "constant": _build_constant,
    "linear": _build_linear,
    "quadratic": _build_quadratic,
    "trig_smooth": _build_trig_smooth,
    "patch_jump_zero_traction": _build_patch_jump_zero_traction,
    "gradient_jump": _build_gradient_jump,
    "smooth_material_trig": _build_smooth_material_trig,
}

MANUFACTURED_NAMES = tuple(sorted(_REGISTRY))


def make_manufactured(name: str):
    """Return the named (field, material) pair with analytic derivatives."""
    try:
        builder = _REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown manufactured configuration {name!r}; "
            f"choose one of {', '.join(MANUFACTURED_NAMES)}"
        ) from None
    return builder()
