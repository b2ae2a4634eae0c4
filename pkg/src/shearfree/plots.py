"""Figure rendering for the batch reports.

Every function writes one PNG next to the delimited outputs and returns
the path.  Rendering is optional at the call sites; nothing here affects
the numeric artifacts.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def field_heatmap(path, u_grid, x_grid, values, title, ylabel="x"):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    mesh = ax.pcolormesh(u_grid, x_grid, np.asarray(values).T, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax)
    ax.set_xlabel("u")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def characteristics_figure(path, solution, caustic=None, n_lines=41, title="characteristics"):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    c = solution.cauchy
    idx = np.linspace(0, c.n - 1, n_lines).astype(int)
    g = solution.u_grid
    for i in idx:
        if solution.flat:
            xs = c.x_nodes[i] + (g - c.u_nodes[i]) * c.L_nodes[i]
        else:
            xs = solution.x_tab[:, i]
        ax.plot(g, xs, lw=0.6, color="steelblue", alpha=0.7)
    ax.plot(c.u_nodes, c.x_nodes, color="black", lw=1.4, label="Cauchy curve")
    if caustic is not None:
        ax.plot([caustic[0]], [caustic[1]], "r*", ms=12, label="first caustic")
    ax.set_xlabel("u")
    ax.set_ylabel("x")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def circle_figure(path, caustic_curve, conic_parameter=2.0, n_tangents=36):
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    th = np.linspace(0, 2 * np.pi, 361)
    ax.plot(np.cos(th), np.sin(th), "k-", lw=1.2, label="envelope")
    a = np.sqrt(conic_parameter)
    ax.plot(a * np.cos(th), a * np.sin(th), "g--", lw=1.0, label="Cauchy conic")
    lines = caustic_curve.lines
    stride = max(1, len(lines) // n_tangents)
    tt = np.linspace(-3, 3, 2)
    for p, q, r in lines[::stride]:
        if abs(q) > 1e-9:
            ax.plot(tt, (-r - p * tt) / q, lw=0.4, color="steelblue", alpha=0.6)
        else:
            ax.axvline(-r / p, lw=0.4, color="steelblue", alpha=0.6)
    pts = caustic_curve.samples
    ax.plot(pts[:, 0], pts[:, 1], "r.", ms=2.0, label="caustic")
    ax.set_xlim(-2.2, 2.2)
    ax.set_ylim(-2.2, 2.2)
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title("tangent-line surface of the circle")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def dual_family_figure(path, samples):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.6))
    ax1.plot(samples[:, 0], samples[:, 1], "o", ms=3)
    ax1.set_xlabel("a")
    ax1.set_ylabel("b")
    ax1.set_title("incidence samples")
    ax2.semilogy(np.abs(samples[:, 3]) + 1e-300, ".", ms=4)
    ax2.set_xlabel("sample")
    ax2.set_ylabel("|b''|")
    ax2.set_title("dual forcing magnitude")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def shear_figure(path, report):
    gu, gx, gy, gt = report.grid
    mid_y = len(gy) // 2
    mid_t = len(gt) // 2
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.8))
    sl = report.shear_norm[:, :, mid_y, mid_t]
    mesh = ax1.pcolormesh(gu, gx, sl.T, shading="auto", cmap="magma")
    fig.colorbar(mesh, ax=ax1)
    ax1.set_xlabel("u")
    ax1.set_ylabel("x")
    ax1.set_title("shear norm (middle y, t slices)")
    ax2.hist(np.log10(report.shear_norm.ravel() + 1e-300), bins=50, color="steelblue")
    ax2.set_xlabel("log10 shear norm")
    ax2.set_ylabel("count")
    ax2.set_title("shear distribution")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
