"""Tank cross-section geometry: membership tests and point samplers.

The domain is a disk of radius ``r_reactor`` holding four zero-thickness
stirrer blades on the coordinate axes and four rectangular baffles centered
on the diagonals. Angles are measured counterclockwise from +x; the stirrer
turns clockwise (see :func:`stirrer_velocity`). The ``annulus`` variant drops
blades and baffles and treats r = r_stirrer as a rotating inner cylinder.
"""

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi
QUARTER = np.pi / 4.0


def child_seed(master, *path):
    """Derive an independent integer seed from a master seed and a key path."""
    seq = np.random.SeedSequence((int(master),) + tuple(int(p) for p in path))
    return int(seq.generate_state(1, np.uint64)[0])


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ------------------------------------------------------------------ config


@dataclass(frozen=True)
class GeometryConfig:
    """Dimensions of the tank cross-section, in meters."""

    r_stirrer: float = 0.040
    r_baffle: float = 0.085
    r_reactor: float = 0.100
    t_baffle: float = 0.005
    blade_angles: tuple = (0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi)
    baffle_angles: tuple = (QUARTER, 3 * QUARTER, 5 * QUARTER, 7 * QUARTER)
    kind: str = "stirred-tank"

    def __post_init__(self):
        if not (0.0 < self.r_stirrer < self.r_baffle < self.r_reactor):
            raise ValueError(
                "radii must satisfy 0 < r_stirrer < r_baffle < r_reactor, got "
                f"{self.r_stirrer}, {self.r_baffle}, {self.r_reactor}"
            )
        if self.t_baffle < 0.0:
            raise ValueError(f"t_baffle must be non-negative, got {self.t_baffle}")
        if self.kind not in ("stirred-tank", "annulus"):
            raise ValueError(f"unknown geometry kind {self.kind!r}")

    @classmethod
    def annulus(cls, r_inner=0.040, r_outer=0.100):
        """Plain annulus with a rotating inner cylinder, no internals."""
        return cls(
            r_stirrer=r_inner,
            r_baffle=0.5 * (r_inner + r_outer),
            r_reactor=r_outer,
            t_baffle=0.0,
            blade_angles=(),
            baffle_angles=(),
            kind="annulus",
        )

    @property
    def wall_gap_half_angle(self):
        """Half-angle of the wall arc blocked by one baffle."""
        if not self.baffle_angles:
            return 0.0
        return float(np.arcsin(0.5 * self.t_baffle / self.r_reactor))

    @property
    def baffle_side_u_max(self):
        """Radial reach of a baffle side face before it exits the wall circle."""
        return float(np.sqrt(self.r_reactor**2 - (0.5 * self.t_baffle) ** 2))


@dataclass(frozen=True)
class Point2:
    """A point in the cross-section plane, stored in Cartesian form."""

    x: float
    y: float

    @classmethod
    def polar(cls, r, phi):
        if r < 0.0:
            raise ValueError(f"polar radius must be non-negative, got {r}")
        if not 0.0 <= phi < TWO_PI:
            raise ValueError(f"polar angle must lie in [0, 2pi), got {phi}")
        return cls(r * np.cos(phi), r * np.sin(phi))

    def cartesian(self):
        return (self.x, self.y)

    def to_polar(self):
        return cart_to_polar(self.x, self.y)


@dataclass(frozen=True)
class SampleSet:
    """Collocation points for one training run, grouped by region and label."""

    domain: dict = field(default_factory=dict)
    boundary: dict = field(default_factory=dict)
    seed: int = 0


# ------------------------------------------------------------- coordinates


def cart_to_polar(x, y):
    """Cartesian to (r, phi) with phi in [0, 2pi)."""
    r = np.hypot(x, y)
    phi = np.mod(np.arctan2(y, x), TWO_PI)
    # mod of a tiny negative angle rounds up to exactly 2pi
    phi = np.where(phi >= TWO_PI, 0.0, phi)
    return r, phi


def polar_to_cart(r, phi):
    return r * np.cos(phi), r * np.sin(phi)


def reflect_to_quarter(x, y):
    """Rotate points into the quarter phi in [-pi/4, pi/4).

    Returns the rotated coordinates and the integer number k of quarter
    turns removed, so rotating back by k*pi/2 restores the input.
    """
    phi = np.arctan2(y, x)
    k = np.floor((phi + QUARTER) / (0.5 * np.pi)).astype(int)
    phi_q = phi - k * 0.5 * np.pi
    r = np.hypot(x, y)
    return r * np.cos(phi_q), r * np.sin(phi_q), np.mod(k, 4)


def stirrer_velocity(x, y, omega):
    """Rigid-body velocity of the clockwise-turning stirrer at (x, y)."""
    x = np.asarray(x, dtype=float)
    return np.stack([omega * np.asarray(y, dtype=float), -omega * x], axis=-1)


# -------------------------------------------------------------- membership


def _baffle_local(config, x, y, beta):
    """Coordinates along (u) and across (v) the baffle center line."""
    c, s = np.cos(beta), np.sin(beta)
    return x * c + y * s, -x * s + y * c


def in_fluid_domain(config, x, y):
    """Strict-interior membership; solid internals and their surfaces excluded."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    inside = r < config.r_reactor
    if config.kind == "annulus":
        return inside & (r > config.r_stirrer)
    half_t = 0.5 * config.t_baffle
    for beta in config.baffle_angles:
        u, v = _baffle_local(config, x, y, beta)
        solid = (u >= config.r_baffle) & (u <= config.r_reactor) & (np.abs(v) <= half_t)
        inside &= ~solid
    for beta in config.blade_angles:
        u, v = _baffle_local(config, x, y, beta)
        on_blade = (v == 0.0) & (u >= 0.0) & (u <= config.r_stirrer)
        inside &= ~on_blade
    return inside


def in_closed_domain(config, x, y, tol=1e-9):
    """Closure membership, tolerant so mesh nodes on walls are accepted."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    inside = r <= config.r_reactor + tol
    if config.kind == "annulus":
        return inside & (r >= config.r_stirrer - tol)
    half_t = 0.5 * config.t_baffle
    for beta in config.baffle_angles:
        u, v = _baffle_local(config, x, y, beta)
        solid_interior = (u > config.r_baffle + tol) & (np.abs(v) < half_t - tol)
        inside &= ~(solid_interior & (u <= config.r_reactor))
    return inside


# ----------------------------------------------------------------- domain


_REGIONS = ("full", "quarter", "inner", "inner-axis", "outer", "band")


def sample_domain(config, region, n, seed, r_inter=None, band_width=None):
    """Draw n interior points uniformly by area from the named region.

    Regions: full tank, one symmetry quarter, the inner annulus
    (r_stirrer, r_inter), its phi = 0 trace, the outer quarter annulus, or
    the blending band centered on r_inter. A band_width shrinks the inner
    and outer regions so they stop at the band edges.
    """
    if region not in _REGIONS:
        raise ValueError(f"unknown region {region!r}")
    if region in ("inner", "inner-axis", "outer", "band") and r_inter is None:
        raise ValueError(f"region {region!r} needs r_inter")
    rng = _rng(seed)
    half_w = 0.5 * band_width if band_width else 0.0

    if region == "inner-axis":
        r = np.sqrt(rng.uniform(config.r_stirrer**2, (r_inter - half_w) ** 2, n))
        return np.stack([r, np.zeros(n)], axis=1)

    r_lo, r_hi = 0.0, config.r_reactor
    phi_lo, phi_hi = 0.0, TWO_PI
    if region == "quarter":
        phi_lo, phi_hi = -QUARTER, QUARTER
    elif region == "inner":
        r_lo, r_hi = config.r_stirrer, r_inter - half_w
    elif region == "outer":
        r_lo, r_hi = r_inter + half_w, config.r_reactor
        phi_lo, phi_hi = -QUARTER, QUARTER
    elif region == "band":
        r_lo, r_hi = r_inter - half_w, r_inter + half_w
        phi_lo, phi_hi = -QUARTER, QUARTER

    out = np.empty((0, 2))
    while out.shape[0] < n:
        m = max(2 * (n - out.shape[0]), 64)
        r = np.sqrt(rng.uniform(r_lo**2, r_hi**2, m))
        phi = rng.uniform(phi_lo, phi_hi, m)
        x, y = polar_to_cart(r, phi)
        keep = in_fluid_domain(config, x, y)
        out = np.concatenate([out, np.stack([x[keep], y[keep]], axis=1)])
    return out[:n]


# --------------------------------------------------------------- boundaries


def _rotate(u, v, beta):
    c, s = np.cos(beta), np.sin(beta)
    return u * c - v * s, u * s + v * c


def _boundary_pieces(config, label, quarter=False, r_inter=None, r_split=None,
                     band_width=None):
    """Arcs ('arc', R, phi0, phi1) and segments ('seg', p0, p1) making up a label."""
    half_t = 0.5 * config.t_baffle
    gap = config.wall_gap_half_angle
    pieces = []

    if label == "wall":
        if config.kind == "annulus":
            span = (-QUARTER, QUARTER) if quarter else (0.0, TWO_PI)
            pieces.append(("arc", config.r_reactor, *span))
        elif quarter:
            pieces.append(("arc", config.r_reactor, -QUARTER + gap, QUARTER - gap))
        else:
            betas = sorted(config.baffle_angles)
            for i, b in enumerate(betas):
                b_next = betas[(i + 1) % len(betas)] + (TWO_PI if i + 1 == len(betas) else 0.0)
                pieces.append(("arc", config.r_reactor, b + gap, b_next - gap))
        if r_split is not None:
            # side faces of the two bounding baffles beyond the split radius
            u_max = config.baffle_side_u_max
            for beta, side in ((QUARTER, -half_t), (-QUARTER, half_t)):
                p0 = _rotate(r_split, side, beta)
                p1 = _rotate(u_max, side, beta)
                pieces.append(("seg", np.array(p0), np.array(p1)))
        return pieces

    if label == "stirrer":
        if config.kind == "annulus":
            span = (-QUARTER, QUARTER) if quarter else (0.0, TWO_PI)
            pieces.append(("arc", config.r_stirrer, *span))
        else:
            betas = (0.0,) if quarter else config.blade_angles
            for beta in betas:
                p1 = _rotate(config.r_stirrer, 0.0, beta)
                pieces.append(("seg", np.zeros(2), np.array(p1)))
        return pieces

    if label == "baffle":
        if r_split is None:
            raise ValueError("baffle label needs r_split")
        # faces of the two bounding baffles that lie inside the near
        # split part: half of the inner cap plus a sliver of side face
        for beta, side in ((QUARTER, -1.0), (-QUARTER, 1.0)):
            cap0 = _rotate(config.r_baffle, 0.0, beta)
            cap1 = _rotate(config.r_baffle, side * half_t, beta)
            pieces.append(("seg", np.array(cap0), np.array(cap1)))
            s0 = _rotate(config.r_baffle, side * half_t, beta)
            s1 = _rotate(r_split, side * half_t, beta)
            pieces.append(("seg", np.array(s0), np.array(s1)))
        return pieces

    if label == "interface":
        if r_inter is None:
            raise ValueError("interface label needs r_inter")
        return [("arc", r_inter, -QUARTER, QUARTER)]

    if label == "gamma_c":
        if r_split is None:
            raise ValueError("gamma_c label needs r_split")
        return [("arc", r_split, -QUARTER, QUARTER)]

    if label == "gamma_d":
        if r_split is None:
            raise ValueError("gamma_d label needs r_split")
        return [("arc", r_split, -0.3, 0.3)]

    if label in ("overlap-in", "overlap-out"):
        if r_inter is None or band_width is None:
            raise ValueError(f"{label} label needs r_inter and band_width")
        shift = -0.5 * band_width if label == "overlap-in" else 0.5 * band_width
        return [("arc", r_inter + shift, -QUARTER, QUARTER)]

    raise ValueError(f"unknown boundary label {label!r}")


def _piece_length(piece):
    if piece[0] == "arc":
        _, radius, a, b = piece
        return radius * (b - a)
    _, p0, p1 = piece
    return float(np.hypot(*(p1 - p0)))


def sample_boundary(config, label, n, seed, quarter=False, r_inter=None,
                    r_split=None, band_width=None, r_range=None):
    """Draw n points uniformly by length from a labeled boundary.

    The symmetry label returns paired rows: the first n/2 lie on the
    +pi/4 diagonal, the second n/2 are their partners at -pi/4 with the
    same radii, in the same order.
    """
    rng = _rng(seed)
    if label == "symmetry":
        if n % 2:
            raise ValueError("symmetry label needs an even point count")
        lo, hi = r_range if r_range is not None else (0.0, config.r_baffle)
        radii = rng.uniform(lo, hi, n // 2)
        up = np.stack(polar_to_cart(radii, QUARTER + np.zeros(n // 2)), axis=1)
        dn = np.stack(polar_to_cart(radii, -QUARTER + np.zeros(n // 2)), axis=1)
        return np.concatenate([up, dn])

    pieces = _boundary_pieces(config, label, quarter=quarter, r_inter=r_inter,
                              r_split=r_split, band_width=band_width)
    lengths = np.array([_piece_length(p) for p in pieces])
    counts = rng.multinomial(n, lengths / lengths.sum())
    chunks = []
    for piece, m in zip(pieces, counts):
        if m == 0:
            continue
        t = rng.uniform(0.0, 1.0, m)
        if piece[0] == "arc":
            _, radius, a, b = piece
            phi = a + t * (b - a)
            chunks.append(np.stack(polar_to_cart(radius + np.zeros(m), phi), axis=1))
        else:
            _, p0, p1 = piece
            chunks.append(p0[None, :] + t[:, None] * (p1 - p0)[None, :])
    return np.concatenate(chunks)


def boundary_distance(config, label, points, quarter=False, r_inter=None,
                      r_split=None, band_width=None, r_range=None):
    """Distance from each point to the labeled boundary set (for checks)."""
    points = np.asarray(points, dtype=float)
    if label == "symmetry":
        lo, hi = r_range if r_range is not None else (0.0, config.r_baffle)
        pieces = []
        for sgn in (1.0, -1.0):
            p0 = np.array(polar_to_cart(lo, sgn * QUARTER))
            p1 = np.array(polar_to_cart(hi, sgn * QUARTER))
            pieces.append(("seg", p0, p1))
    else:
        pieces = _boundary_pieces(config, label, quarter=quarter, r_inter=r_inter,
                                  r_split=r_split, band_width=band_width)
    d = np.full(points.shape[0], np.inf)
    x, y = points[:, 0], points[:, 1]
    for piece in pieces:
        if piece[0] == "arc":
            _, radius, a, b = piece
            r = np.hypot(x, y)
            theta = np.mod(np.arctan2(y, x) - a, TWO_PI)
            on_span = theta <= (b - a)
            ends = [np.array(polar_to_cart(radius, a)), np.array(polar_to_cart(radius, b))]
            d_end = np.minimum(np.hypot(x - ends[0][0], y - ends[0][1]),
                               np.hypot(x - ends[1][0], y - ends[1][1]))
            d = np.minimum(d, np.where(on_span, np.abs(r - radius), d_end))
        else:
            _, p0, p1 = piece
            dp = p1 - p0
            t = ((x - p0[0]) * dp[0] + (y - p0[1]) * dp[1]) / (dp @ dp)
            t = np.clip(t, 0.0, 1.0)
            d = np.minimum(d, np.hypot(x - p0[0] - t * dp[0], y - p0[1] - t * dp[1]))
    return d
