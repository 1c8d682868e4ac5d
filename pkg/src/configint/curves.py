"""Closed space curves with exact derivatives, file I/O and built-in knots.

All curves are periodic with period 2π in their parameter ``s``.  ``eval``
accepts any array of parameters and returns positions and tangents with a
trailing axis of length 3.
"""
from __future__ import annotations

import json
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize

from .errors import EmbeddednessFailure, ParseError, UnknownName

TWO_PI = 2.0 * np.pi

#: Parameter separation below which point pairs count as "near-diagonal".
DIAGONAL_BAND = TWO_PI / 24

#: Curves whose clearance falls below this fraction of their diameter are rejected.
MIN_RELATIVE_CLEARANCE = 1e-3


class Curve:
    """Interface: subclasses implement ``eval`` and ``second``."""

    def eval(self, s):
        raise NotImplementedError

    def point(self, s):
        return self.eval(s)[0]

    def tangent(self, s):
        return self.eval(s)[1]

    def sample(self, m: int):
        s = np.arange(m) * (TWO_PI / m)
        return s, *self.eval(s)

    @cached_property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        _, p, _ = self.sample(1024)
        return p.min(axis=0), p.max(axis=0)

    @cached_property
    def diameter(self) -> float:
        lo, hi = self.bbox
        return float(np.linalg.norm(hi - lo))

    @cached_property
    def clearance(self) -> float:
        return embedding_clearance(self)

    def reversed(self) -> "Curve":
        return Reparametrized(self, lambda s: -s, lambda s: -np.ones_like(s))

    def reparametrized(self, coeffs) -> "Curve":
        """Compose with ``s -> s + sum_k c_k sin(k s)`` (orientation preserving)."""
        c = np.asarray(coeffs, dtype=float)
        k = np.arange(1, len(c) + 1)
        if np.sum(np.abs(c * k)) >= 1.0:
            raise ValueError("reparametrization must have positive derivative")

        def phi(s):
            s = np.asarray(s, dtype=float)
            return s + np.sin(np.multiply.outer(s, k)) @ c

        def dphi(s):
            s = np.asarray(s, dtype=float)
            return 1.0 + np.cos(np.multiply.outer(s, k)) @ (c * k)

        return Reparametrized(self, phi, dphi)


class FourierCurve(Curve):
    """``x_a(s) = sum_k A[a,k] cos(k s) + B[a,k] sin(k s)``, k = 0..K-1."""

    def __init__(self, cos_coeffs, sin_coeffs):
        self.A = np.array(cos_coeffs, dtype=float).reshape(3, -1)
        self.B = np.array(sin_coeffs, dtype=float).reshape(3, -1)
        if self.A.shape != self.B.shape:
            raise ValueError("cos and sin coefficient arrays must match")
        self.k = np.arange(self.A.shape[1], dtype=float)

    @classmethod
    def from_pairs(cls, coeffs: dict) -> "FourierCurve":
        rows = [np.asarray(coeffs[a], dtype=float).reshape(-1, 2) for a in "xyz"]
        K = max(len(r) for r in rows)
        A = np.zeros((3, K))
        B = np.zeros((3, K))
        for i, r in enumerate(rows):
            A[i, :len(r)] = r[:, 0]
            B[i, :len(r)] = r[:, 1]
        return cls(A, B)

    def to_pairs(self) -> dict:
        return {a: [[float(self.A[i, k]), float(self.B[i, k])] for k in range(self.A.shape[1])]
                for i, a in enumerate("xyz")}

    def eval(self, s):
        s = np.asarray(s, dtype=float)
        ks = np.multiply.outer(s, self.k)
        c, sn = np.cos(ks), np.sin(ks)
        pos = c @ self.A.T + sn @ self.B.T
        tan = (sn * -self.k) @ self.A.T + (c * self.k) @ self.B.T
        return pos, tan

    def second(self, s):
        s = np.asarray(s, dtype=float)
        ks = np.multiply.outer(s, self.k)
        k2 = self.k ** 2
        return -(np.cos(ks) * k2) @ self.A.T - (np.sin(ks) * k2) @ self.B.T

    def transformed(self, rotation=None, shift=None) -> "FourierCurve":
        R = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        A = R @ self.A
        B = R @ self.B
        if shift is not None:
            A[:, 0] += np.asarray(shift, dtype=float)
        return FourierCurve(A, B)

    def reversed(self) -> "FourierCurve":
        return FourierCurve(self.A, -self.B)

    def __eq__(self, other):
        return (isinstance(other, FourierCurve) and np.array_equal(self.A, other.A)
                and np.array_equal(self.B, other.B))


class PolylineCurve(Curve):
    """Periodic cubic spline through the given points, uniform in index."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 4:
            raise ValueError("need at least 4 points of dimension 3")
        if np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        self.points = pts
        t = np.linspace(0.0, TWO_PI, len(pts) + 1)
        self._spline = CubicSpline(t, np.vstack([pts, pts[:1]]), bc_type="periodic")
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)

    def eval(self, s):
        s = np.mod(np.asarray(s, dtype=float), TWO_PI)
        return self._spline(s), self._d1(s)

    def second(self, s):
        return self._d2(np.mod(np.asarray(s, dtype=float), TWO_PI))

    def to_fourier(self, n_modes: int = 32, n_samples: int = 2048) -> FourierCurve:
        """Fit by truncating the discrete Fourier series of dense spline samples."""
        _, p, _ = self.sample(n_samples)
        F = np.fft.rfft(p, axis=0) / n_samples
        A = np.zeros((3, n_modes))
        B = np.zeros((3, n_modes))
        A[:, 0] = F[0].real
        A[:, 1:] = 2 * F[1:n_modes].real.T
        B[:, 1:] = -2 * F[1:n_modes].imag.T
        return FourierCurve(A, B)


class Reparametrized(Curve):
    def __init__(self, base: Curve, phi, dphi):
        self.base, self.phi, self.dphi = base, phi, dphi

    def eval(self, s):
        s = np.asarray(s, dtype=float)
        p, t = self.base.eval(self.phi(s))
        return p, t * self.dphi(s)[..., None]


def embedding_clearance(c: Curve, m: int = 720, band: float = DIAGONAL_BAND) -> float:
    """Minimum distance between curve points at least ``band`` apart in parameter.

    Dense sampling followed by local refinement of the best candidate pairs.
    """
    s, p, _ = c.sample(m)
    d = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)
    gap = np.abs(s[:, None] - s[None, :])
    gap = np.minimum(gap, TWO_PI - gap)
    d[gap < band] = np.inf
    flat = np.argsort(d, axis=None)[:16:2]
    best = float(d.flat[flat[0]])

    def dist(x):
        g = abs(x[0] - x[1]) % TWO_PI
        if min(g, TWO_PI - g) < band:
            return best
        return float(np.linalg.norm(c.point(x[0]) - c.point(x[1])))

    for f in flat:
        i, j = np.unravel_index(f, d.shape)
        res = minimize(dist, [s[i], s[j]], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400})
        best = min(best, float(res.fun))
    return best


def curve_distance(c1: Curve, c2: Curve, m: int = 512) -> float:
    """Minimum distance between two curves: dense sampling, then local refinement."""
    _, p, _ = c1.sample(m)
    s, q, _ = c2.sample(m)
    d = np.linalg.norm(p[:, None, :] - q[None, :, :], axis=-1)
    best = float(d.min())
    for f in np.argsort(d, axis=None)[:8]:
        i, j = np.unravel_index(f, d.shape)
        res = minimize(lambda x: float(np.linalg.norm(c1.point(x[0]) - c2.point(x[1]))),
                       [s[i], s[j]], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 400})
        best = min(best, float(res.fun))
    return best


def check_embedded(c: Curve) -> Curve:
    if c.clearance < MIN_RELATIVE_CLEARANCE * max(c.diameter, 1e-300):
        raise EmbeddednessFailure(f"clearance {c.clearance:.3g} too small")
    return c


# -- built-in curves --------------------------------------------------------

def _fourier(x, y, z) -> FourierCurve:
    return FourierCurve.from_pairs({"x": x, "y": y, "z": z})


def builtin_knot(name: str) -> FourierCurve:
    """Standard trigonometric knots.

    unknot:  (cos s, sin s, 0)
    trefoil: (sin s + 2 sin 2s, cos s - 2 cos 2s, -sin 3s)
    figure8: ((2 + cos 2s) cos 3s, (2 + cos 2s) sin 3s, sin 4s)
    """
    if name == "unknot":
        return _fourier([[0, 0], [1, 0]], [[0, 0], [0, 1]], [[0, 0]])
    if name == "trefoil":
        return _fourier([[0, 0], [0, 1], [0, 2]],
                        [[0, 0], [1, 0], [-2, 0]],
                        [[0, 0], [0, 0], [0, 0], [0, -1]])
    if name == "figure8":
        return _fourier([[0, 0], [0.5, 0], [0, 0], [2, 0], [0, 0], [0.5, 0]],
                        [[0, 0], [0, 0.5], [0, 0], [0, 2], [0, 0], [0, 0.5]],
                        [[0, 0], [0, 0], [0, 0], [0, 0], [0, 1]])
    raise UnknownName(name)


def circle(center=(0.0, 0.0, 0.0), radius=1.0, normal_axis="z") -> FourierCurve:
    """Round circle; ``normal_axis`` picks the coordinate plane (xy, xz or yz)."""
    cx, cy, cz = center
    planes = {"z": ("x", "y"), "y": ("x", "z"), "x": ("y", "z")}
    u, v = planes[normal_axis]
    coeffs = {"x": [[cx, 0]], "y": [[cy, 0]], "z": [[cz, 0]]}
    coeffs[u] = [[coeffs[u][0][0], 0], [radius, 0]]
    coeffs[v] = [[coeffs[v][0][0], 0], [0, radius]]
    return FourierCurve.from_pairs(coeffs)


def hopf_pair() -> tuple[FourierCurve, FourierCurve]:
    """Unit circle in the xy-plane and unit circle in the xz-plane through its centre.

    The second circle runs (1 + cos s, 0, -sin s), which makes the linking number +1.
    """
    return circle(), circle(center=(1.0, 0.0, 0.0), normal_axis="y").reversed()


def torus_link_pair(R: float = 2.0, r: float = 1.0) -> tuple[FourierCurve, FourierCurve]:
    """The two components of the (2,4) torus link; each winds twice around the core.

    Both run the same way around the core, giving linking number -2.
    """
    out = []
    for phase in (0.0, np.pi):
        cph, sph = np.cos(phase), np.sin(phase)
        # (R + r cos(2s+ph)) (cos s, sin s), r sin(2s+ph)
        x = [[0, 0], [R + 0.5 * r * cph, -0.5 * r * sph], [0, 0], [0.5 * r * cph, -0.5 * r * sph]]
        y = [[0, 0], [-0.5 * r * sph, R - 0.5 * r * cph], [0, 0], [0.5 * r * sph, 0.5 * r * cph]]
        z = [[0, 0], [0, 0], [r * sph, r * cph]]
        out.append(_fourier(x, y, z))
    return out[0], out[1]


def perturb_isotopy(c: Curve, amplitude: float, seed: int, modes: int = 3) -> FourierCurve:
    """Add a random Fourier displacement (modes 1..``modes``) of sup-norm ``amplitude``."""
    base = c if isinstance(c, FourierCurve) else (
        c.to_fourier() if isinstance(c, PolylineCurve) else None)
    if base is None:
        raise TypeError("perturbation needs a Fourier or polyline curve")
    if amplitude == 0:
        return base
    if amplitude >= base.clearance / 2:
        raise EmbeddednessFailure(
            f"amplitude {amplitude:.3g} not below half the clearance {base.clearance:.3g}")
    rng = np.random.default_rng(seed)
    K = max(base.A.shape[1], modes + 1)
    dA = np.zeros((3, K))
    dB = np.zeros((3, K))
    dA[:, 1:modes + 1] = rng.normal(size=(3, modes))
    dB[:, 1:modes + 1] = rng.normal(size=(3, modes))
    disp = FourierCurve(dA, dB)
    _, p, _ = disp.sample(2048)
    scale = amplitude / np.max(np.linalg.norm(p, axis=1))
    A = np.zeros((3, K))
    B = np.zeros((3, K))
    A[:, :base.A.shape[1]] = base.A
    B[:, :base.B.shape[1]] = base.B
    return check_embedded(FourierCurve(A + scale * dA, B + scale * dB))


# -- files ------------------------------------------------------------------

def curve_to_dict(c: Curve) -> dict:
    if isinstance(c, FourierCurve):
        return {"type": "fourier", "coeffs": c.to_pairs()}
    if isinstance(c, PolylineCurve):
        return {"type": "polyline", "points": c.points.tolist()}
    raise TypeError(f"cannot serialise {type(c).__name__}")


def curve_from_dict(doc: dict, check: bool = True) -> Curve:
    try:
        kind = doc["type"]
        if kind == "fourier":
            c = FourierCurve.from_pairs(doc["coeffs"])
        elif kind == "polyline":
            c = PolylineCurve(doc["points"])
        else:
            raise ParseError(f"unknown curve type {kind!r}")
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from exc
    return check_embedded(c) if check else c


def save_curve(c: Curve, path) -> None:
    with open(path, "w") as fh:
        json.dump(curve_to_dict(c), fh, indent=1)


def load_curve(path, check: bool = True) -> Curve:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from exc
    return curve_from_dict(doc, check)
