"""Straightforward loop-based reference implementations used as test oracles.

These are written independently of the library code paths: per-pixel loops,
breadth-first hysteresis, and direct covariance eigendecomposition. They are
slow and only used on small inputs.
"""

from collections import deque

import numpy as np


def ref_gray(rgb: np.ndarray) -> np.ndarray:
    h, w, _ = rgb.shape
    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            r, g, b = (float(rgb[y, x, 0]), float(rgb[y, x, 1]), float(rgb[y, x, 2]))
            v = r * 0.299 + g * 0.587 + b * 0.114
            out[y, x] = int(min(255.0, max(0.0, np.floor(v + 0.5))))
    return out


def ref_gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    half = size // 2
    k = np.zeros((size, size), dtype=np.float64)
    for i in range(size):
        for j in range(size):
            dy = i - half
            dx = j - half
            k[i, j] = np.exp(-(dy * dy) / (2.0 * sigma * sigma)) * np.exp(
                -(dx * dx) / (2.0 * sigma * sigma)
            )
    # normalize with the same float sum the library uses (row-major total)
    total = k.sum()
    return k / total


def ref_blur(gray: np.ndarray, size: int, sigma: float) -> np.ndarray:
    kernel = ref_gaussian_kernel(size, sigma)
    half = size // 2
    h, w = gray.shape
    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy in range(size):
                for dx in range(size):
                    yy = min(max(y + dy - half, 0), h - 1)
                    xx = min(max(x + dx - half, 0), w - 1)
                    acc = acc + kernel[dy, dx] * float(gray[yy, xx])
            out[y, x] = int(min(255.0, max(0.0, np.floor(acc + 0.5))))
    return out


_SX = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]
_SY = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]]


def ref_sobel(gray: np.ndarray):
    h, w = gray.shape
    mag = np.zeros((h, w), dtype=np.float64)
    theta = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            gx = 0.0
            gy = 0.0
            for dy in range(3):
                for dx in range(3):
                    yy = min(max(y + dy - 1, 0), h - 1)
                    xx = min(max(x + dx - 1, 0), w - 1)
                    v = float(gray[yy, xx])
                    gx += _SX[dy][dx] * v
                    gy += _SY[dy][dx] * v
            mag[y, x] = np.sqrt(gx * gx + gy * gy)
            t = np.arctan2(gy, gx)
            if t < 0.0:
                t = t + np.pi
            if t >= np.pi:
                t = t - np.pi
            theta[y, x] = t
    return mag, theta


def ref_canny(gray: np.ndarray, low: float, high: float, size: int, sigma: float) -> np.ndarray:
    """Blur -> Sobel -> 4-direction NMS -> BFS hysteresis, all plain loops."""
    blurred = ref_blur(gray, size, sigma)
    mag, theta = ref_sobel(blurred)
    mag = mag * 0.25
    h, w = gray.shape
    keep = np.zeros((h, w), dtype=bool)
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            if mag[y, x] <= 0.0:
                continue
            d = int(np.floor((theta[y, x] + np.pi / 8) / (np.pi / 4))) % 4
            dy, dx = offsets[d]
            fwd = mag[y + dy, x + dx] if 0 <= y + dy < h and 0 <= x + dx < w else -1.0
            back = mag[y - dy, x - dx] if 0 <= y - dy < h and 0 <= x - dx < w else -1.0
            if mag[y, x] >= fwd and mag[y, x] >= back:
                keep[y, x] = True
    strong = keep & (mag >= high)
    weak = keep & (mag >= low)
    edges = np.zeros((h, w), dtype=np.uint8)
    seeds = list(zip(*np.nonzero(strong)))
    for y, x in seeds:
        edges[y, x] = 1
    queue = deque(seeds)
    while queue:
        y, x = queue.popleft()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                yy, xx = y + dy, x + dx
                if 0 <= yy < h and 0 <= xx < w and weak[yy, xx] and not edges[yy, xx]:
                    edges[yy, xx] = 1
                    queue.append((yy, xx))
    return edges


def ref_hog_cell_sums(gray: np.ndarray, cell: int):
    """Per-cell gradient magnitude totals over the top-left cell-aligned window."""
    h = (gray.shape[0] // cell) * cell
    w = (gray.shape[1] // cell) * cell
    mag, _ = ref_sobel(gray[:h, :w])
    cells_y, cells_x = h // cell, w // cell
    sums = np.zeros((cells_y, cells_x), dtype=np.float64)
    for cy in range(cells_y):
        for cx in range(cells_x):
            sums[cy, cx] = mag[cy * cell : (cy + 1) * cell, cx * cell : (cx + 1) * cell].sum()
    return sums


def ref_pca_direct(data: np.ndarray):
    """Eigendecomposition of the d x d covariance (1/N convention), descending."""
    x = np.asarray(data, dtype=np.float64)
    n = x.shape[0]
    mu = x.mean(axis=0)
    xc = x - mu
    cov = (xc.T @ xc) / n
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    for j in range(evecs.shape[1]):
        i = int(np.argmax(np.abs(evecs[:, j])))
        if evecs[i, j] < 0:
            evecs[:, j] = -evecs[:, j]
    return np.clip(evals, 0.0, None), evecs


def svm_dual_objective(alpha, y, kmat) -> float:
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ kmat @ ay)


def ref_svm_qp(y: np.ndarray, kmat: np.ndarray, c: float):
    """Exact brute-force C-SVC dual solve for tiny problems (N <= 8).

    Enumerates every partition of the variables into {0, C, free}. For each
    face, the equality-constrained stationary point over the free set is a
    small linear solve; the best feasible candidate over all faces is the
    global optimum of the concave dual.
    """
    from itertools import product

    n = len(y)
    q = (y[:, None] * y[None, :]) * kmat
    best_obj = -np.inf
    best_alpha = None
    for assign in product((0, 1, 2), repeat=n):
        alpha = np.zeros(n)
        free = [i for i, a in enumerate(assign) if a == 2]
        for i, a in enumerate(assign):
            if a == 1:
                alpha[i] = c
        if free:
            nf = len(free)
            bound_part = q[np.ix_(free, range(n))] @ alpha
            rhs = np.concatenate([1.0 - bound_part, [-(y @ alpha)]])
            system = np.zeros((nf + 1, nf + 1))
            system[:nf, :nf] = q[np.ix_(free, free)]
            system[:nf, nf] = y[free]
            system[nf, :nf] = y[free]
            sol, _, _, _ = np.linalg.lstsq(system, rhs, rcond=None)
            if not np.allclose(system @ sol, rhs, atol=1e-8):
                continue  # no stationary point on this face
            af = sol[:nf]
            if np.any(af < -1e-9) or np.any(af > c + 1e-9):
                continue
            alpha[free] = np.clip(af, 0.0, c)
        if abs(y @ alpha) > 1e-8:
            continue
        obj = svm_dual_objective(alpha, y, kmat)
        if obj > best_obj:
            best_obj = obj
            best_alpha = alpha
    return best_alpha
