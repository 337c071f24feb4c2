#!/usr/bin/env python3
"""Independent quadrature oracle for the frozen energy regression values.

Mirrors the documented discrete definitions (trapezoid weights, central +
one-sided first differences, ghosted clamped-edge operators, Voigt pair-basis
contraction) using numpy only. Run once; the printed values are frozen into
the C++ unit tests. Keep this script in sync with the documented contracts,
not with the C++ sources.
"""
import numpy as np

np.set_printoptions(precision=17)


def d_generic(n, h):
    D = np.zeros((n, n))
    for i in range(1, n - 1):
        D[i, i - 1] = -0.5 / h
        D[i, i + 1] = 0.5 / h
    D[0, 0] = -1.5 / h
    D[0, 1] = 2.0 / h
    D[0, 2] = -0.5 / h
    D[n - 1, n - 1] = 1.5 / h
    D[n - 1, n - 2] = -2.0 / h
    D[n - 1, n - 3] = 0.5 / h
    return D


def d_ghost(n, h, lo_clamped, hi_clamped):
    D = d_generic(n, h)
    if lo_clamped:
        D[0, :] = 0.0
    if hi_clamped:
        D[n - 1, :] = 0.0
    return D


def h_axis(n, h, lo_clamped, hi_clamped):
    Dg = d_ghost(n, h, lo_clamped, hi_clamped)
    H = Dg @ Dg
    if lo_clamped:
        H[0, :] = 0.0
        H[0, 0] = -0.5 / h**2
        H[0, 2] = 0.5 / h**2
    if hi_clamped:
        H[n - 1, :] = 0.0
        H[n - 1, n - 1] = -0.5 / h**2
        H[n - 1, n - 3] = 0.5 / h**2
    return H


def trap_weights(n, h):
    w = np.full(n, h)
    w[0] = 0.5 * h
    w[-1] = 0.5 * h
    return w


def plate_regression():
    nx = ny = 33
    lx = ly = 1.0
    hx = lx / (nx - 1)
    hy = ly / (ny - 1)
    x = np.arange(nx) * hx
    y = np.arange(ny) * hy
    X, Y = np.meshgrid(x, y, indexing="ij")
    W = np.sin(np.pi * X) * np.sin(np.pi * Y) * X * (1 - X) * Y * (1 - Y)
    U1 = np.zeros_like(W)
    U2 = np.zeros_like(W)
    P = np.ones_like(W)

    DXgen = d_generic(nx, hx)
    DYgen = d_generic(ny, hy)
    DXg = d_ghost(nx, hx, True, True)
    DYg = d_ghost(ny, hy, True, True)
    HXX = h_axis(nx, hx, True, True)
    HYY = h_axis(ny, hy, True, True)

    omega = np.outer(trap_weights(nx, hx), trap_weights(ny, hy))

    gwx = DXg @ W
    gwy = W @ DYg.T
    Wxx = HXX @ W
    Wyy = W @ HYY.T
    Wxy = DXg @ (W @ DYg.T)

    g11 = DXgen @ U1 + 0.5 * gwx * gwx
    g22 = U2 @ DYgen.T + 0.5 * gwy * gwy
    g12 = 0.5 * (U1 @ DYgen.T + DXgen @ U2) + 0.5 * gwx * gwy

    # lambda = mu = thickness = 1: membrane Voigt [[16/3,4/3,0],[4/3,16/3,0],[0,0,4]]
    c1, c2, c3 = 16.0 / 3.0, 4.0 / 3.0, 4.0
    N11 = c1 * g11 + c2 * g22
    N22 = c2 * g11 + c1 * g22
    N12 = c3 * g12
    membrane = 0.5 * np.sum(omega * (N11 * g11 + N22 * g22 + 2 * N12 * g12))

    # bending Voigt = membrane / 3
    b1, b2, b3 = c1 / 3.0, c2 / 3.0, c3 / 3.0
    B11 = b1 * Wxx + b2 * Wyy
    B22 = b2 * Wxx + b1 * Wyy
    B12 = b3 * Wxy
    bending = 0.5 * np.sum(omega * (B11 * Wxx + B22 * Wyy + 2 * B12 * Wxy))

    work = np.sum(omega * P * W)
    total = membrane + bending - work
    print("plate 33x33 clamped bubble, lambda=mu=thickness=1, P=1:")
    print(f"  membrane = {membrane!r}")
    print(f"  bending  = {bending!r}")
    print(f"  work     = {work!r}")
    print(f"  total    = {total!r}")


def elastic_regression():
    n = 9
    l = 1.0
    h = l / (n - 1)
    t = np.arange(n) * h
    X, Y, Z = np.meshgrid(t, t, t, indexing="ij")
    U = [
        np.sin(np.pi * X) * Y * (1 - Y) * Z * (1 - Z),
        0.5 * X * (1 - X) * np.sin(np.pi * Y) * Z * (1 - Z),
        0.25 * X * (1 - X) * Y * (1 - Y) * np.sin(np.pi * Z),
    ]
    P = [1.0, -1.0, 0.5]

    D = d_generic(n, h)

    def dax(F, axis):
        return np.einsum("im,mjk->ijk", D, F) if axis == 0 else (
            np.einsum("jm,imk->ijk", D, F) if axis == 1 else np.einsum("km,ijm->ijk", D, F))

    G = [[dax(U[m], j) for j in range(3)] for m in range(3)]  # G[m][j] = u_m,j
    V = [[0.5 * (G[i][j] + G[j][i]) + 0.5 * sum(G[m][i] * G[m][j] for m in range(3))
          for j in range(3)] for i in range(3)]

    lam = mu = 1.0
    trv = V[0][0] + V[1][1] + V[2][2]
    S = [[lam * trv * (1.0 if i == j else 0.0) + 2 * mu * V[i][j] for j in range(3)] for i in range(3)]

    wt = trap_weights(n, h)
    omega = np.einsum("i,j,k->ijk", wt, wt, wt)
    contr = sum(S[i][j] * V[i][j] for i in range(3) for j in range(3))
    stored = 0.5 * np.sum(omega * contr)
    work = np.sum(omega * (P[0] * U[0] + P[1] * U[1] + P[2] * U[2]))
    total = stored - work
    print("elastic 9x9x9 clamped bubbles, lambda=mu=1, P=(1,-1,0.5):")
    print(f"  stored = {stored!r}")
    print(f"  work   = {work!r}")
    print(f"  total  = {total!r}")


if __name__ == "__main__":
    plate_regression()
    elastic_regression()
