"""Periodized orthogonal 2D wavelet transform (tensor product form).

The spatial basis is the product psi_{j1,k1}(x1) * psi_{j2,k2}(x2) with
independent resolution levels along the two axes, realized by a full
multilevel 1D periodized transform along axis 0 followed by one along
axis 1 ("standard" decomposition).  Coefficients of an n1 x n2 image live in
an n1 x n2 array whose 1D layout along each axis is

    [ scaling block | level 0 | level 1 | ... | finest level ]

with the detail block of level j occupying indices [2^j, 2^{j+1}) at full
depth.  The transform is orthonormal: Parseval holds exactly and inner
products are preserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "WaveletSpec",
    "WaveletCoeffs2D",
    "wavelet_taps",
    "dwt2",
    "idwt2",
    "estimate_sigma",
    "symmetrize",
    "restrict",
]

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)

# Orthonormal lowpass taps (sum = sqrt(2), unit energy, even-shift orthogonal).
_TAP_REGISTRY = {
    "haar": np.array([1.0, 1.0]) / _SQRT2,
    "daub4": np.array(
        [1.0 + _SQRT3, 3.0 + _SQRT3, 3.0 - _SQRT3, 1.0 - _SQRT3]
    )
    / (4.0 * _SQRT2),
}

MAD_TO_SIGMA = 0.6745  # MAD of a standard normal


def wavelet_taps(family: str) -> np.ndarray:
    """Lowpass taps of a named orthogonal family."""
    try:
        return _TAP_REGISTRY[family].copy()
    except KeyError:
        raise ValueError(
            f"unknown wavelet family {family!r}; have {sorted(_TAP_REGISTRY)}"
        ) from None


def _check_orthogonal_taps(h: np.ndarray, tol: float = 1e-12) -> None:
    if h.ndim != 1 or h.size < 2 or h.size % 2:
        raise ValueError("taps must be a 1-D vector of even length >= 2")
    if abs(h @ h - 1.0) > tol:
        raise ValueError("taps are not unit-energy")
    if abs(h.sum() - _SQRT2) > tol:
        raise ValueError("taps do not sum to sqrt(2)")
    for shift in range(2, h.size, 2):
        if abs(h[:-shift] @ h[shift:]) > tol:
            raise ValueError("taps violate even-shift orthogonality")


@dataclass(frozen=True)
class WaveletSpec:
    """Filter family plus decomposition depths along the two spatial axes."""

    family: str = "daub4"
    levels1: int = 0  # 0 means full depth, resolved per image size
    levels2: int = 0
    taps: np.ndarray | None = None

    def __post_init__(self):
        h = wavelet_taps(self.family) if self.taps is None else np.asarray(
            self.taps, dtype=float
        )
        _check_orthogonal_taps(h)
        object.__setattr__(self, "taps", h)

    @property
    def highpass(self) -> np.ndarray:
        g = self.taps[::-1].copy()
        g[1::2] *= -1.0
        return g

    def depth_for(self, size: int, levels: int) -> int:
        full = int(math.log2(size))
        if levels <= 0:
            return full
        if levels > full:
            raise ValueError(f"levels={levels} exceeds log2({size})={full}")
        return levels


def _require_pow2(n: int, what: str) -> None:
    if n < 2 or n & (n - 1):
        raise ValueError(f"{what} must be a power of two >= 2, got {n}")


def _dwt_step(x: np.ndarray, h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """One periodized analysis step along the last axis."""
    N = x.shape[-1]
    idx = (2 * np.arange(N // 2)[:, None] + np.arange(h.size)[None, :]) % N
    windows = x[..., idx]
    a = windows @ h
    d = windows @ g
    return np.concatenate([a, d], axis=-1)


def _idwt_step(y: np.ndarray, h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """One periodized synthesis step along the last axis."""
    N = y.shape[-1]
    half = N // 2
    a, d = y[..., :half], y[..., half:]
    x = np.zeros_like(y)
    for m in range(h.size):
        j = (2 * np.arange(half) + m) % N
        x[..., j] += h[m] * a + g[m] * d
    return x


def _dwt_axis(data: np.ndarray, spec: WaveletSpec, levels: int, axis: int) -> np.ndarray:
    out = np.moveaxis(np.array(data, dtype=float), axis, -1)
    h, g = spec.taps, spec.highpass
    n = out.shape[-1]
    for _ in range(levels):
        out[..., :n] = _dwt_step(out[..., :n], h, g)
        n //= 2
    return np.moveaxis(out, -1, axis)


def _idwt_axis(data: np.ndarray, spec: WaveletSpec, levels: int, axis: int) -> np.ndarray:
    out = np.moveaxis(np.array(data, dtype=float), axis, -1)
    h, g = spec.taps, spec.highpass
    n = out.shape[-1] // (1 << levels)
    for _ in range(levels):
        n *= 2
        out[..., :n] = _idwt_step(out[..., :n], h, g)
    return np.moveaxis(out, -1, axis)


def dwt2_array(images: np.ndarray, spec: WaveletSpec) -> np.ndarray:
    """Tensor 2D transform of (..., n1, n2) data; batch dims pass through."""
    n1, n2 = images.shape[-2], images.shape[-1]
    _require_pow2(n1, "n1")
    _require_pow2(n2, "n2")
    l1 = spec.depth_for(n1, spec.levels1)
    l2 = spec.depth_for(n2, spec.levels2)
    out = _dwt_axis(images, spec, l1, axis=-2)
    return _dwt_axis(out, spec, l2, axis=-1)


def idwt2_array(coeffs: np.ndarray, spec: WaveletSpec) -> np.ndarray:
    """Inverse of dwt2_array."""
    n1, n2 = coeffs.shape[-2], coeffs.shape[-1]
    _require_pow2(n1, "n1")
    _require_pow2(n2, "n2")
    l1 = spec.depth_for(n1, spec.levels1)
    l2 = spec.depth_for(n2, spec.levels2)
    out = _idwt_axis(coeffs, spec, l2, axis=-1)
    return _idwt_axis(out, spec, l1, axis=-2)


@dataclass
class WaveletCoeffs2D:
    """Coefficients of one image, indexed omega = (j1,k1; j2,k2).

    `values[i1, i2]` pairs the axis-wise multilevel layouts; `level_along`
    maps an axis index to its resolution level (-1 for the scaling block).
    """

    values: np.ndarray
    spec: WaveletSpec
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def shape(self):
        return self.values.shape

    def level_along(self, axis: int) -> np.ndarray:
        key = ("levels", axis)
        if key not in self._cache:
            n = self.values.shape[axis]
            depth = self.spec.depth_for(
                n, self.spec.levels1 if axis == 0 else self.spec.levels2
            )
            lev = np.empty(n, dtype=int)
            coarse = n >> depth
            lev[:coarse] = -1
            full = int(math.log2(n))
            for d in range(1, depth + 1):  # d = 1 is the finest step
                lo, hi = n >> d, n >> (d - 1)
                lev[lo:hi] = full - d
            self._cache[key] = lev
        return self._cache[key]

    def scaling_mask(self) -> np.ndarray:
        """True on the pure scaling x scaling block (carries the mean)."""
        m1 = self.level_along(0) == -1
        m2 = self.level_along(1) == -1
        return np.outer(m1, m2)

    def finest_detail_block(self) -> np.ndarray:
        """The (finest, finest) detail quadrant, the purest noise carrier."""
        n1, n2 = self.values.shape
        return self.values[n1 // 2 :, n2 // 2 :]


def dwt2(image, spec: WaveletSpec) -> WaveletCoeffs2D:
    """Orthonormal periodized tensor transform of one n1 x n2 image."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError("expected a 2-D image")
    return WaveletCoeffs2D(values=dwt2_array(image, spec), spec=spec)


def idwt2(coeffs: WaveletCoeffs2D, spec: WaveletSpec | None = None) -> np.ndarray:
    """Synthesis: exact inverse of dwt2."""
    return idwt2_array(coeffs.values, spec if spec is not None else coeffs.spec)


def estimate_sigma(image, spec: WaveletSpec, robust: bool = True) -> float:
    """Noise scale from the finest-level detail coefficients.

    One analysis step along both axes, then the (detail, detail) quadrant.
    Default is the MAD estimate (median|d| / 0.6745), insensitive to signal
    leaking into fine scales; robust=False gives the plain standard deviation.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2 or min(image.shape) < 2:
        raise ValueError("expected an image of size at least 2 x 2")
    h, g = spec.taps, spec.highpass
    step = _dwt_step(_dwt_step(image, h, g).T, h, g).T
    n1, n2 = image.shape
    dd = step[n1 // 2 :, n2 // 2 :]
    if robust:
        return float(np.median(np.abs(dd)) / MAD_TO_SIGMA)
    return float(dd.std())


def symmetrize(image) -> np.ndarray:
    """Reflect an n1 x n2 image into an even-periodic 2n1 x 2n2 image.

    The result is invariant under flips about both axes, so the periodized
    transform sees it as smooth across the wrap-around.
    """
    image = np.atleast_2d(np.asarray(image, dtype=float))
    top = np.concatenate([image, image[:, ::-1]], axis=1)
    return np.concatenate([top, top[::-1, :]], axis=0)


def restrict(image) -> np.ndarray:
    """Return the original quadrant of a symmetrized image."""
    image = np.asarray(image, dtype=float)
    n1, n2 = image.shape
    if n1 % 2 or n2 % 2:
        raise ValueError("symmetrized image must have even sides")
    return image[: n1 // 2, : n2 // 2].copy()
