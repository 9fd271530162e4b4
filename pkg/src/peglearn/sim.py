"""2D quasi-static peg-in-hole world.

Geometry convention: the assembly plane is oxy with the hole mouth on the
line y = 0 and the hole interior spanning y in [-H, 0], x in [-D/2, D/2].
Positive y points out of the hole (the opening direction), so insertion
moves the peg toward negative y.

The peg is a rectangle of width d_peg gripped somewhere above its tip; the
tool center point (TCP) is the bottom-center of the peg and all poses,
wrenches and moments refer to it.  The machined fillet at the tip corners
is modeled as a chamfer: the contact corners are the chamfer's endpoints,
pulled in by the fillet radius laterally (at the tip plane) and axially
(at the full width).

The robot is a pure spring: commanding a reference pose x_d with stiffness
K holds the peg at the pose where the spring load K (x_d - x) balances the
contact load.  Contact is penalty-based (normal force proportional to
penetration) with regularized Coulomb friction that opposes the tangential
displacement of each contact point since the previous equilibrium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def wrap_angle(w: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.fmod(w, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    elif w > math.pi:
        w -= 2.0 * math.pi
    return w


@dataclass(frozen=True)
class Pose:
    """Planar pose of the peg TCP: lateral x (m), axial y (m), rotation w (rad)."""

    x: float
    y: float
    w: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "w", wrap_angle(float(self.w)))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.w)

    def mirrored(self) -> "Pose":
        """Reflection about the hole axis."""
        return Pose(-self.x, self.y, -self.w)


@dataclass(frozen=True)
class Wrench:
    """Planar load on the peg about the TCP: forces f_x, f_y (N), moment m_w (N*m)."""

    f_x: float
    f_y: float
    m_w: float

    def __post_init__(self):
        object.__setattr__(self, "f_x", float(self.f_x))
        object.__setattr__(self, "f_y", float(self.f_y))
        object.__setattr__(self, "m_w", float(self.m_w))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.f_x, self.f_y, self.m_w)

    def mirrored(self) -> "Wrench":
        return Wrench(-self.f_x, self.f_y, -self.m_w)


@dataclass(frozen=True)
class Stiffness:
    """Diagonal Cartesian stiffness: k_x, k_y (N/m), k_w (N*m/rad); all >= 0."""

    k_x: float
    k_y: float
    k_w: float

    def __post_init__(self):
        object.__setattr__(self, "k_x", float(self.k_x))
        object.__setattr__(self, "k_y", float(self.k_y))
        object.__setattr__(self, "k_w", float(self.k_w))
        if self.k_x < 0.0 or self.k_y < 0.0 or self.k_w < 0.0:
            raise ValueError("stiffness components must be non-negative")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.k_x, self.k_y, self.k_w)


@dataclass(frozen=True)
class PegHoleGeometry:
    """Workpiece dimensions (m).

    hole_width D must exceed peg_width; fillet_radius must be smaller than
    half the peg width.  peg_length is the contact-relevant length of the
    peg above its tip.
    """

    hole_width: float
    peg_width: float
    hole_depth: float
    fillet_radius: float
    peg_length: float

    def __post_init__(self):
        if not (self.hole_width > self.peg_width > 0.0):
            raise ValueError("need hole_width > peg_width > 0")
        if self.hole_depth <= 0.0:
            raise ValueError("hole_depth must be positive")
        if not (0.0 <= self.fillet_radius < self.peg_width / 2.0):
            raise ValueError("fillet_radius must be in [0, peg_width/2)")
        if self.peg_length <= 0.0:
            raise ValueError("peg_length must be positive")


@dataclass(frozen=True)
class ContactParams:
    """Penalty contact constants.

    k_env: normal penalty stiffness (N/m); mu: Coulomb friction coefficient;
    solver_tol: equilibrium force-residual tolerance (N); max_iters: Newton
    iteration cap; friction_reg: tangential displacement (m) over which the
    regularized friction ramps up to its Coulomb limit.
    """

    k_env: float = 1.0e6
    mu: float = 0.3
    solver_tol: float = 1.0e-3
    max_iters: int = 100
    friction_reg: float = 1.0e-6

    def __post_init__(self):
        if self.k_env <= 0.0:
            raise ValueError("k_env must be positive")
        if not (0.0 <= self.mu < 1.0):
            raise ValueError("mu must be in [0, 1)")
        if self.solver_tol <= 0.0:
            raise ValueError("solver_tol must be positive")
        if self.friction_reg <= 0.0:
            raise ValueError("friction_reg must be positive")


class NonConvergence(RuntimeError):
    """Equilibrium solve failed; carries the final force residual (N)."""

    def __init__(self, residual: float):
        super().__init__(f"equilibrium solver stalled at residual {residual:.3e} N")
        self.residual = residual


# --------------------------------------------------------------------------
# contact enumeration
#
# Candidate contacts, evaluated pairwise left/right so that reflection about
# the hole axis maps the computation onto itself exactly in floating point:
#   - the four effective tip corners of the peg against the nearest face of
#     the workpiece (top surface, hole walls, hole floor),
#   - the two hole mouth edges against the nearest face of the peg
#     (side faces and bottom face).
# Floor and top-surface corner contacts carry half the penalty stiffness
# each so a flat-bottomed press has aggregate stiffness k_env.
# --------------------------------------------------------------------------


def _corner_locals(geom: PegHoleGeometry):
    """Local (u, v) contact corners, ordered in mirror pairs (left, right)."""
    a = geom.peg_width / 2.0 - geom.fillet_radius
    b = geom.peg_width / 2.0
    r = geom.fillet_radius
    return ((-a, 0.0), (a, 0.0), (-b, r), (b, r))


def _contacts(pose: Pose, geom: PegHoleGeometry, k_env: float):
    """Active contacts at `pose`, grouped in mirror pairs.

    Returns three groups (tip-plane corners, chamfer-top corners, mouth
    edges), each a list of (px, py, nx, ny, force_magnitude, k) with the
    normal pointing along the normal force on the peg and k the penalty
    stiffness behind the force magnitude.  Grouping left/right candidates
    keeps the summed wrench exactly antisymmetric under reflection about
    the hole axis, float rounding included.
    """
    x, y, w = pose.x, pose.y, pose.w
    c = math.cos(w)
    s = math.sin(w)
    half_d = geom.hole_width / 2.0
    depth = geom.hole_depth
    corners = _corner_locals(geom)
    groups = ([], [], [])

    # peg corners vs workpiece faces (nearest penetrated face wins)
    for idx, (u, v) in enumerate(corners):
        px = x + u * c - v * s
        py = y + u * s + v * c
        candidates = []
        if py < 0.0:
            if px > half_d:
                candidates.append((px - half_d, -1.0, 0.0, k_env))       # right wall
            elif (-px) > half_d:
                candidates.append(((-px) - half_d, 1.0, 0.0, k_env))     # left wall
            if px > half_d or (-px) > half_d:
                candidates.append((-py, 0.0, 1.0, 0.5 * k_env))          # top surface
            if py < -depth:
                candidates.append(((-depth) - py, 0.0, 1.0, 0.5 * k_env))  # floor
        if candidates:
            pen, nx, ny, k = min(candidates, key=lambda t: t[0])
            groups[idx // 2].append((px, py, nx, ny, k * pen, k))

    # hole mouth edges vs peg faces
    half_peg = geom.peg_width / 2.0
    for ex in (-half_d, half_d):
        # edge point in peg-local coordinates
        dx = ex - x
        dy = -y
        u = dx * c + dy * s
        v = -dx * s + dy * c
        if -half_peg < u < half_peg and 0.0 < v < geom.peg_length:
            pen_right = half_peg - u    # distance inside from the right face
            pen_left = half_peg + u     # distance inside from the left face
            pen_bottom = v
            pen, nxl, nyl = min(
                (pen_left, 1.0, 0.0),
                (pen_right, -1.0, 0.0),
                (pen_bottom, 0.0, 1.0),
                key=lambda t: t[0],
            )
            # rotate the local face normal to world
            nx = nxl * c - nyl * s
            ny = nxl * s + nyl * c
            groups[2].append((ex, 0.0, nx, ny, k_env * pen, k_env))
    return groups


def _iter_contacts(pose: Pose, geom: PegHoleGeometry, k_env: float):
    for group in _contacts(pose, geom, k_env):
        for contact in group:
            yield contact


def _point_at(pose: Pose, px: float, py: float, ref: Pose) -> tuple[float, float]:
    """World position under `ref` of the peg material point at world (px, py) under `pose`."""
    dx = px - pose.x
    dy = py - pose.y
    cw = math.cos(pose.w)
    sw = math.sin(pose.w)
    u = dx * cw + dy * sw
    v = -dx * sw + dy * cw
    c = math.cos(ref.w)
    s = math.sin(ref.w)
    return (ref.x + u * c - v * s, ref.y + u * s + v * c)


def _wrench_of(pose: Pose, geom: PegHoleGeometry, params: ContactParams,
               prev: Pose | None):
    """Total contact load about the TCP as a tuple (fx, fy, mw).

    Accumulated per mirror-pair group so reflection symmetry is exact.
    """
    fx = fy = mw = 0.0
    friction = prev is not None and params.mu > 0.0
    for group in _contacts(pose, geom, params.k_env):
        gfx = gfy = gmw = 0.0
        for px, py, nx, ny, fn, _ in group:
            cfx = nx * fn
            cfy = ny * fn
            if friction:
                qx, qy = _point_at(pose, px, py, prev)
                # tangent is the normal rotated +90 degrees
                slide = (px - qx) * (-ny) + (py - qy) * nx
                ratio = slide / params.friction_reg
                if ratio > 1.0:
                    ratio = 1.0
                elif ratio < -1.0:
                    ratio = -1.0
                ft = -params.mu * fn * ratio
                cfx += ft * (-ny)
                cfy += ft * nx
            gfx += cfx
            gfy += cfy
            gmw += (px - pose.x) * cfy - (py - pose.y) * cfx
        fx += gfx
        fy += gfy
        mw += gmw
    return (fx, fy, mw)


def contact_wrench(pose: Pose, geom: PegHoleGeometry, params: ContactParams,
                   prev: Pose | None = None) -> Wrench:
    """Contact load on the peg about the TCP.

    Frictionless when `prev` is omitted; otherwise Coulomb friction opposes
    the tangential displacement of each contact point relative to its
    position at the previous equilibrium `prev`.
    """
    return Wrench(*_wrench_of(pose, geom, params, prev))


def measured_wrench(x_d: Pose, x: Pose, k: Stiffness) -> Wrench:
    """External load the compliant robot reports: stiffness times deviation."""
    return Wrench(
        k.k_x * (x_d.x - x.x),
        k.k_y * (x_d.y - x.y),
        k.k_w * (x_d.w - x.w),
    )


def insertion_depth(pose: Pose, geom: PegHoleGeometry) -> float:
    """Axial distance of the peg tip below the hole mouth, clamped to [0, H]."""
    d = -pose.y
    if d < 0.0:
        return 0.0
    if d > geom.hole_depth:
        return geom.hole_depth
    return d


# --------------------------------------------------------------------------
# equilibrium solve
# --------------------------------------------------------------------------

_FD_STEP = (1.0e-9, 1.0e-9, 1.0e-7)


def _solve3(j, r):
    """Solve j @ d = r for a 3x3 system by cofactor expansion; None if singular."""
    (a, b, c), (d, e, f), (g, h, i) = j
    co_a = e * i - f * h
    co_b = f * g - d * i
    co_c = d * h - e * g
    det = a * co_a + b * co_b + c * co_c
    if det == 0.0 or not math.isfinite(det):
        return None
    x0 = (r[0] * co_a + r[1] * (c * h - b * i) + r[2] * (b * f - c * e)) / det
    x1 = (r[0] * co_b + r[1] * (a * i - c * g) + r[2] * (c * d - a * f)) / det
    x2 = (r[0] * co_c + r[1] * (b * g - a * h) + r[2] * (a * e - b * d)) / det
    if math.isfinite(x0) and math.isfinite(x1) and math.isfinite(x2):
        return (x0, x1, x2)
    return None


def solve_equilibrium(x_d: Pose, k: Stiffness, geom: PegHoleGeometry,
                      params: ContactParams, x_init: Pose) -> Pose:
    """Pose where the spring load K (x_d - x) balances the contact load.

    Damped Newton on the force residual with a numerically differenced
    Jacobian and an energy-descent line search.  Friction forces are frozen
    per outer pass and re-evaluated against the warm start `x_init` (the
    previous equilibrium), fixed-point style, with at most 5 passes.

    Raises NonConvergence if the residual cannot be brought under
    params.solver_tol within the iteration budget.
    """
    kx, ky, kw = k.as_tuple()
    tol = params.solver_tol
    prev = x_init
    q = list(x_init.as_tuple())
    xd = x_d.as_tuple()

    def normal_wrench(qq):
        return _wrench_of(Pose(*qq), geom, params, None)

    def friction_wrench(qq):
        full = _wrench_of(Pose(*qq), geom, params, prev)
        norm = normal_wrench(qq)
        return (full[0] - norm[0], full[1] - norm[1], full[2] - norm[2])

    def full_residual(qq):
        w = _wrench_of(Pose(*qq), geom, params, prev)
        return (
            kx * (xd[0] - qq[0]) + w[0],
            ky * (xd[1] - qq[1]) + w[1],
            kw * (xd[2] - qq[2]) + w[2],
        )

    def inf_norm(r):
        return max(abs(r[0]), abs(r[1]), abs(r[2]))

    # characteristic stiffness for gradient-step scaling per coordinate
    arm = max(geom.peg_width, geom.hole_depth) / 2.0
    scale = (
        kx + params.k_env,
        ky + params.k_env,
        kw + params.k_env * arm * arm,
    )

    budget = max(params.max_iters, 1)
    used = 0
    last_res = inf_norm(full_residual(q))

    for _ in range(5):  # outer friction fixed-point passes
        if last_res < tol:
            return Pose(*q)
        fr = friction_wrench(q)

        def residual(qq):
            w = normal_wrench(qq)
            return (
                kx * (xd[0] - qq[0]) + w[0] + fr[0],
                ky * (xd[1] - qq[1]) + w[1] + fr[1],
                kw * (xd[2] - qq[2]) + w[2] + fr[2],
            )

        def energy(qq):
            e = 0.5 * (kx * (xd[0] - qq[0]) ** 2
                       + ky * (xd[1] - qq[1]) ** 2
                       + kw * (xd[2] - qq[2]) ** 2)
            for group in _contacts(Pose(*qq), geom, params.k_env):
                ge = 0.0
                for _, _, _, _, fn, kc in group:
                    ge += 0.5 * fn * fn / kc
                e += ge
            e -= fr[0] * qq[0] + fr[1] * qq[1] + fr[2] * qq[2]
            return e

        r = residual(q)
        while used < budget:
            rn = inf_norm(r)
            if rn < 0.5 * tol:
                break
            used += 1
            # numerically differenced Jacobian of the residual (central)
            jac = [[0.0] * 3 for _ in range(3)]
            for j_idx in range(3):
                h = _FD_STEP[j_idx]
                qp = list(q)
                qm = list(q)
                qp[j_idx] += h
                qm[j_idx] -= h
                rp = residual(qp)
                rm = residual(qm)
                for i_idx in range(3):
                    jac[i_idx][j_idx] = (rp[i_idx] - rm[i_idx]) / (2.0 * h)
            step = _solve3(jac, [-ri for ri in r])
            if step is None:
                step = (r[0] / scale[0], r[1] / scale[1], r[2] / scale[2])
            # cap implausibly large steps (fresh contact far from balance)
            cap = max(abs(step[0]), abs(step[1]), abs(step[2]) * arm)
            if cap > 0.01:
                f = 0.01 / cap
                step = (step[0] * f, step[1] * f, step[2] * f)
            e0 = energy(q)
            alpha = 1.0
            improved = False
            while alpha > 1.0e-6:
                qn = [q[0] + alpha * step[0], q[1] + alpha * step[1],
                      q[2] + alpha * step[2]]
                rnw = residual(qn)
                if inf_norm(rnw) < rn or energy(qn) < e0:
                    q = qn
                    r = rnw
                    improved = True
                    break
                alpha *= 0.5
            if not improved:
                # steepest descent fallback (residual is -grad energy)
                step = (r[0] / scale[0], r[1] / scale[1], r[2] / scale[2])
                alpha = 1.0
                while alpha > 1.0e-9:
                    qn = [q[0] + alpha * step[0], q[1] + alpha * step[1],
                          q[2] + alpha * step[2]]
                    if energy(qn) < e0:
                        q = qn
                        r = residual(q)
                        improved = True
                        break
                    alpha *= 0.5
            if not improved:
                break  # inner stall; let the outer pass refresh friction
        last_res = inf_norm(full_residual(q))
        if last_res < tol:
            return Pose(*q)
        if used >= budget:
            break

    raise NonConvergence(last_res)
