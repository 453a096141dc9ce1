"""Point evaluation of the linear peridynamic operators for isotropic media.

The state-based operator splits into a bond part (weighted by the shear
modulus at both bond ends) and a dilatational part (a composition of two
singular single integrals weighted by lambda - mu).  For two-phase materials
an interface correction operator, supported on the slab of points within one
horizon of the interface, repairs the jump in the nonlocal traction; adding
it to the state operator yields the corrected operator whose horizon-scaled
value at interface points tends to 45/32 times the local traction jump.

All evaluators are pure functions of (config, material, field, point).  The
nested double integrals reuse one reference ball rule for the inner and outer
integral and are evaluated in fixed node order, so results are reproducible
bit for bit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fields import Material, PiecewiseField, SideTag, TwoPhaseMaterial
from .quadrature import (
    BallQuadrature,
    DEFAULT_ANGULAR_ORDER,
    DEFAULT_RADIAL_ORDER,
    ball_volume,
    build_ball_rule,
    build_split_ball_rule,
    _check_unit_normal,
)
from .tensor import Mat3, Tensor3, Vec3


@dataclass(frozen=True)
class Horizon:
    """The interaction radius of the nonlocal model."""

    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("horizon must be positive")


class LdForm(enum.Enum):
    """Form of the dilatational operator.

    REDUCED drops the inner terms that cancel by the odd symmetry of the
    kernel over a full ball; it is valid at points whose double-horizon
    neighborhood lies inside the evaluation domain.  FULL keeps both terms.
    """

    REDUCED = "reduced"
    FULL = "full"


@dataclass(frozen=True)
class OperatorConfig:
    horizon: Horizon
    rule: BallQuadrature
    ld_form: LdForm = LdForm.REDUCED

    @property
    def delta(self) -> float:
        return self.horizon.delta


def make_config(delta: float,
                radial_order: int = DEFAULT_RADIAL_ORDER,
                angular_order: int = DEFAULT_ANGULAR_ORDER,
                rule: Optional[BallQuadrature] = None,
                ld_form: LdForm = LdForm.REDUCED,
                split_normal=None) -> OperatorConfig:
    """Convenience constructor.

    With ``split_normal`` the ball rule is assembled from two half-ball rules
    split by the plane normal to it, which keeps integrands that are smooth
    on each side of that plane exactly integrable.
    """
    if rule is None:
        if split_normal is not None:
            rule = build_split_ball_rule(split_normal, radial_order, angular_order)
        else:
            rule = build_ball_rule(radial_order, angular_order)
    return OperatorConfig(Horizon(delta), rule, ld_form)


def weight_mass(delta: float, r: float) -> float:
    """The scalar weight 4 pi delta^(5-r)/(5-r) of the kernel |z|^(-r) |z|^2.

    For r = 2 this is the ball volume.  Exponents r >= 5 make the moment
    diverge and are rejected.
    """
    if r >= 5:
        raise ValueError("weight exponent must satisfy r < 5")
    return 4.0 * np.pi * delta ** (5.0 - r) / (5.0 - r)


# ---------------------------------------------------------------------------
# single-integral (bond-type) evaluations
# ---------------------------------------------------------------------------


def _require_finite(values) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise FloatingPointError(
            "field produced a non-finite value at a quadrature node")
    return values


def _bond_sum(config: OperatorConfig, field: PiecewiseField, x, node_weights) -> Vec3:
    """sum_q node_weights_q (z_q (x) z_q / |z_q|^4) (u(x + delta z_q) - u(x))."""
    z = config.rule.points
    r4 = np.einsum("qi,qi->q", z, z) ** 2
    y = x + config.delta * z
    dv = _require_finite(field.value(y) - field.value(x))
    return np.einsum("q,qi,qj,qj->i", node_weights / r4, z, z, dv)


def base_operator(config: OperatorConfig, field: PiecewiseField, x) -> Vec3:
    """Material-independent difference operator.

    (30/|B_delta|) integral over B_delta(x) of
    ((y-x)(x)(y-x)/|y-x|^4) (u(y) - u(x)) dy.  For fields with bounded third
    derivatives this tends to 2 grad(div u) + lap u, exactly so for
    quadratic fields at every horizon.
    """
    x = np.asarray(x, dtype=float)
    delta = config.delta
    s = _bond_sum(config, field, x, config.rule.weights)
    return (30.0 / ball_volume(delta)) * delta * s


def base_operator_scalar(config: OperatorConfig, scalar_field, x) -> Mat3:
    """Scalar-field variant of :func:`base_operator`; returns a matrix.

    ``scalar_field`` is a vectorized callable mapping (n, 3) points to (n,)
    values.  The limit is 2 grad grad f + (lap f) I.
    """
    x = np.asarray(x, dtype=float)
    delta = config.delta
    z = config.rule.points
    r4 = np.einsum("qi,qi->q", z, z) ** 2
    y = x + delta * z
    df = _require_finite(np.asarray(scalar_field(y)) - scalar_field(x[None, :])[0])
    s = np.einsum("q,qi,qj->ij", config.rule.weights * df / r4, z, z)
    return (30.0 / ball_volume(delta)) * delta * s


def bond_operator(config: OperatorConfig, material: Material,
                  field: PiecewiseField, x) -> Vec3:
    """Bond-based part: the kernel is weighted by mu(x) + mu(y)."""
    x = np.asarray(x, dtype=float)
    delta = config.delta
    _, mu_x = material.lame_at(x)
    _, mu_y = material.lame_at(x + delta * config.rule.points)
    s = _bond_sum(config, field, x, config.rule.weights * (mu_x + mu_y))
    return (15.0 / ball_volume(delta)) * delta * s


def bond_correction_term(config: OperatorConfig, material: Material,
                         field: PiecewiseField, x) -> Vec3:
    """Bond-type correction term: minus the bond kernel with mu frozen at x."""
    x = np.asarray(x, dtype=float)
    delta = config.delta
    _, mu_x = material.lame_at(x)
    s = _bond_sum(config, field, x, config.rule.weights)
    return -(15.0 / ball_volume(delta)) * delta * float(mu_x) * s


# ---------------------------------------------------------------------------
# nested (composition-type) evaluations
# ---------------------------------------------------------------------------

_NESTED_CHUNK_ENTRIES = 2_000_000  # outer-chunk size bound, in field points


def _nested_moments(config: OperatorConfig, field: PiecewiseField, x):
    """Inner integrals of the composed kernels at every outer node.

    For outer nodes y_j = x + delta z_j returns

    * ``g[j] = sum_k (w_k/|z_k|^2) z_k . u(y_j + delta z_k)`` -- the scalar
      divergence channel; the physical inner integral is delta^2 g.
    * ``p[j] = M_j^T (z_j/|z_j|^2)`` with
      ``M_j = sum_k (w_k/|z_k|^2) z_k (x) u(y_j + delta z_k)`` -- the
      normal-projection channel; the physical value is delta p.
    """
    z = config.rule.points
    w = config.rule.weights
    n = z.shape[0]
    r2 = np.einsum("qi,qi->q", z, z)
    bw = (w / r2)[:, None] * z
    a = z / r2[:, None]
    y = x + config.delta * z

    g = np.empty(n)
    p = np.empty((n, 3))
    chunk = max(1, _NESTED_CHUNK_ENTRIES // n)
    bwt = np.ascontiguousarray(bw.T)
    for start in range(0, n, chunk):
        sl = slice(start, min(start + chunk, n))
        pts = y[sl, None, :] + config.delta * z[None, :, :]
        u = field.value(pts)  # (B, n, 3)
        m = np.matmul(bwt[None, :, :], u)  # (B, 3, 3), batched GEMM
        g[sl] = np.trace(m, axis1=1, axis2=2)
        p[sl] = np.einsum("bil,bi->bl", m, a[sl])
    _require_finite(g)  # non-finite field values propagate through the sums
    _require_finite(p)
    return g, p


def _inner_divergence_at(config: OperatorConfig, field: PiecewiseField, x) -> float:
    """The scalar inner integral g evaluated at the center point itself."""
    z = config.rule.points
    r2 = np.einsum("qi,qi->q", z, z)
    u = field.value(x + config.delta * z)
    return float(np.einsum("q,qi,qi->", config.rule.weights / r2, z, u))


def _dilatation_from_g(config: OperatorConfig, material: Material, x, g) -> Vec3:
    z = config.rule.points
    w = config.rule.weights
    r2 = np.einsum("qi,qi->q", z, z)
    delta = config.delta
    lam_y, mu_y = material.lame_at(x + delta * z)
    c_y = lam_y - mu_y
    s = np.einsum("q,qi->i", (w / r2) * c_y * g, z)
    return (9.0 / ball_volume(delta) ** 2) * delta**4 * s


def _dilatation_coefficient(config: OperatorConfig, material: Material, x):
    """lambda - mu at the outer quadrature nodes around x."""
    lam_y, mu_y = material.lame_at(x + config.delta * config.rule.points)
    return np.broadcast_to(np.asarray(lam_y - mu_y, dtype=float),
                           (len(config.rule),))


def dilatation_operator(config: OperatorConfig, material: Material,
                        field: PiecewiseField, x) -> Vec3:
    """Dilatational part: nested double integral weighted by lambda - mu.

    The REDUCED form composes the outer kernel against the inner divergence
    integral of the field itself; the FULL form keeps the two difference
    terms whose extra pieces cancel by odd symmetry over full balls.
    """
    x = np.asarray(x, dtype=float)
    c_y = _dilatation_coefficient(config, material, x)
    if config.ld_form is LdForm.REDUCED and not c_y.any():
        return np.zeros(3)  # integrand vanishes at every node
    g, _ = _nested_moments(config, field, x)
    if config.ld_form is LdForm.REDUCED:
        return _dilatation_from_g(config, material, x, g)

    # FULL: subtract the collocation values from the inner integral and add
    # the fully factorized term weighted by (lambda - mu)(x)
    z = config.rule.points
    w = config.rule.weights
    r2 = np.einsum("qi,qi->q", z, z)
    delta = config.delta
    y = x + delta * z
    s0 = np.einsum("q,qi->i", w / r2, z)  # zero up to roundoff by symmetry
    g_diff = g - field.value(y) @ s0
    lam_y, mu_y = material.lame_at(y)
    term2 = np.einsum("q,qi->i", (w / r2) * (lam_y - mu_y) * g_diff, z)
    term2 *= (9.0 / ball_volume(delta) ** 2) * delta**4

    lam_x, mu_x = material.lame_at(x)
    g_x = _inner_divergence_at(config, field, x) - float(field.value(x) @ s0)
    term1 = ((9.0 / ball_volume(delta) ** 2) * delta**4
             * float(lam_x - mu_x) * g_x * s0)
    return term1 + term2


def state_operator(config: OperatorConfig, material: Material,
                   field: PiecewiseField, x) -> Vec3:
    """The full linear peridynamic operator: bond plus dilatational part."""
    return (bond_operator(config, material, field, x)
            + dilatation_operator(config, material, field, x))


def _normal_term_from_p(config: OperatorConfig, material: Material, x, p,
                        normal) -> Vec3:
    z = config.rule.points
    w = config.rule.weights
    delta = config.delta
    _, mu_y = material.lame_at(x + delta * z)
    v = (9.0 / ball_volume(delta) ** 2) * delta**4 * np.einsum(
        "q,qi->i", w * mu_y, p)
    return 1.25 * float(v @ normal) * np.asarray(normal, dtype=float)


def normal_correction_term(config: OperatorConfig, material: Material,
                           field: PiecewiseField, x, normal) -> Vec3:
    """Normal-projected correction: 5/4 times the mu-weighted scalar double
    integral of the composed kernels against the field, projected onto the
    interface normal."""
    x = np.asarray(x, dtype=float)
    normal = _check_unit_normal(normal)
    _, p = _nested_moments(config, field, x)
    return _normal_term_from_p(config, material, x, p, normal)


def _require_interface(material: Material) -> TwoPhaseMaterial:
    if not isinstance(material, TwoPhaseMaterial):
        raise TypeError("interface operators require a two-phase material")
    return material


def interface_correction(config: OperatorConfig, material: Material,
                         field: PiecewiseField, x) -> Vec3:
    """Correction operator acting on the extended-interface slab.

    Sum of the frozen-modulus bond correction, one quarter of the reduced
    dilatational part, and the normal-projected term with the normal taken
    at the orthogonal projection of x onto the interface.
    """
    x = np.asarray(x, dtype=float)
    material = _require_interface(material)
    if abs(material.interface.signed_distance(x)) >= config.delta:
        raise ValueError("point lies outside the extended interface slab")
    normal = material.interface.normal
    g, p = _nested_moments(config, field, x)
    if _dilatation_coefficient(config, material, x).any():
        dil = _dilatation_from_g(config, material, x, g)
    else:
        dil = np.zeros(3)
    return (bond_correction_term(config, material, field, x)
            + 0.25 * dil
            + _normal_term_from_p(config, material, x, p, normal))


def corrected_operator(config: OperatorConfig, material: Material,
                       field: PiecewiseField, x) -> Vec3:
    """State operator plus the indicator-gated interface correction."""
    x = np.asarray(x, dtype=float)
    value = state_operator(config, material, field, x)
    if (isinstance(material, TwoPhaseMaterial)
            and abs(material.interface.signed_distance(x)) < config.delta):
        value = value + interface_correction(config, material, field, x)
    return value


# ---------------------------------------------------------------------------
# closed-form limits at interface points
# ---------------------------------------------------------------------------


def half_ball_moment_tensor(normal) -> Tensor3:
    """Closed form of the scaled third moment of a half-ball direction kernel.

    The fully symmetric tensor K with K : (a (x) b (x) c) built from the
    spherical angles of the unit normal; contracting it against any matrix A
    reproduces :func:`half_ball_moment_apply`.  It equals the limit of
    delta times the numeric half-ball moment of
    :func:`peridyn.quadrature.half_ball_third_moment_numeric` (exactly
    delta-independent for a planar split).
    """
    n = _check_unit_normal(normal)
    theta = np.arccos(np.clip(n[2], -1.0, 1.0))
    phi = np.arctan2(n[1], n[0])
    c, s = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)

    k = np.zeros((3, 3, 3))

    def fill(i, j, l, value):
        # the tensor is fully symmetric: set every distinct permutation
        for perm in {(i, j, l), (i, l, j), (j, i, l), (j, l, i), (l, i, j), (l, j, i)}:
            k[perm] = value

    f = 3.0 / 32.0
    fill(0, 0, 0, f * c * st * (3.0 - c**2 * st**2))
    fill(0, 0, 1, f * s * st * (1.0 - c**2 * st**2))
    fill(0, 0, 2, f * ct * (1.0 - c**2 * st**2))
    fill(0, 1, 1, f * c * st * (1.0 - s**2 * st**2))
    fill(0, 1, 2, -f * s * c * st**2 * ct)
    fill(0, 2, 2, f * c * st**3)
    fill(1, 1, 2, f * ct * (1.0 - s**2 * st**2))
    fill(1, 2, 2, f * s * st**3)
    fill(1, 1, 1, f * s * st * (3.0 - s**2 * st**2))
    fill(2, 2, 2, f * ct * (3.0 - ct**2))
    return k


def half_ball_moment_apply(a: Mat3, normal) -> Vec3:
    """(3/32) ((A + A^T) n + (tr A - A n . n) n), the action of the
    half-ball moment tensor on a matrix."""
    n = _check_unit_normal(normal)
    a = np.asarray(a, dtype=float)
    return (3.0 / 32.0) * ((a + a.T) @ n + (np.trace(a) - a @ n @ n) * n)


def _one_sided_grads(material: TwoPhaseMaterial, field: PiecewiseField, x):
    iface = material.interface
    if abs(iface.signed_distance(x)) > 1e-12:
        raise ValueError("point is not on the material interface")
    gp = field.grad_on(x, SideTag.PLUS)
    gm = field.grad_on(x, SideTag.MINUS)
    return iface.normal, gp, gm


def natural_condition_limit(material: Material, field: PiecewiseField, x) -> Vec3:
    """Local limit of the horizon-scaled state operator at an interface point.

    Evaluated from one-sided gradients and the phase constants.  The result
    differs from 45/32 times the traction jump, which is what motivates the
    corrected operator.
    """
    material = _require_interface(material)
    x = np.asarray(x, dtype=float)
    n, gp, gm = _one_sided_grads(material, field, x)
    wp = material.mu_plus + material.mu_plus
    wm = material.mu_plus + material.mu_minus
    a = wp * gp - wm * gm  # jump of (mu_plus + mu) grad u
    cd_jump = ((material.lambda_plus - material.mu_plus) * np.trace(gp)
               - (material.lambda_minus - material.mu_minus) * np.trace(gm))
    return (45.0 / 32.0) * ((a + a.T) @ n + np.trace(a) * n
                            - float(a @ n @ n) * n + 0.8 * cd_jump * n)


def normal_correction_limit(material: Material, field: PiecewiseField, x) -> Vec3:
    """Local limit of the horizon-scaled normal-projected correction term:
    (45/32) ((jump of mu grad u) n . n) n, with the shear-modulus weights
    kept inside the jump."""
    material = _require_interface(material)
    x = np.asarray(x, dtype=float)
    n, gp, gm = _one_sided_grads(material, field, x)
    a = material.mu_plus * gp - material.mu_minus * gm
    return (45.0 / 32.0) * float(a @ n @ n) * n
