"""Regenerate the orthonormal wavelet filter tables in src/waveletsr/filters/.

Daubechies-family filters are built by spectral factorization of the
half-band polynomial B(y) = sum_k C(p-1+k, k) y^k in 60-digit arithmetic,
then rounded to float64.  For the symN filters the root selection (one root
out of every reciprocal pair) is the combination whose frequency response
has the least-nonlinear phase, which is what makes Symlets near-symmetric.

Run from the repo root:  python3 tools/make_filter_tables.py
"""

import itertools
import pathlib

import mpmath as mp
import numpy as np

mp.mp.dps = 60

OUT_DIR = pathlib.Path(__file__).resolve().parent.parent / "src" / "waveletsr" / "filters"

SYM_ORDERS = [2, 4, 8, 19]


def halfband_roots(p):
    """Roots of B(y) = sum_{k<p} C(p-1+k,k) y^k, ascending-degree coeffs."""
    coeffs = [mp.binomial(p - 1 + k, k) for k in range(p)]
    roots = mp.polyroots(list(reversed(coeffs)), maxsteps=500, extraprec=500)
    return roots


def z_roots_for(y):
    """Solve z^2 - (2-4y) z + 1 = 0; the two solutions are reciprocals."""
    b = 2 - 4 * y
    disc = mp.sqrt(b * b - 4)
    return (b + disc) / 2, (b - disc) / 2


def root_groups(p):
    """Group the y-roots so each group's z-selection keeps coefficients real.

    A real y-root contributes a single binary choice {z, 1/z} (z real).
    A conjugate pair (y, conj(y)) contributes {z, conj(z)} vs the
    reciprocal pair; both members share one choice bit.
    """
    ys = halfband_roots(p)
    tol = mp.mpf(10) ** (-40)
    groups = []
    used = [False] * len(ys)
    for i, y in enumerate(ys):
        if used[i]:
            continue
        used[i] = True
        if abs(mp.im(y)) < tol:
            z_in, z_out = z_roots_for(mp.re(y))
            if abs(z_in) > 1:
                z_in, z_out = z_out, z_in
            groups.append(([z_in], [z_out]))
        else:
            j = min(
                (k for k in range(len(ys)) if not used[k]),
                key=lambda k: abs(ys[k] - mp.conj(y)),
            )
            used[j] = True
            z_in, z_out = z_roots_for(y)
            if abs(z_in) > 1:
                z_in, z_out = z_out, z_in
            groups.append(
                ([z_in, mp.conj(z_in)], [z_out, mp.conj(z_out)])
            )
    return groups


def poly_from_roots(roots):
    coeffs = [mp.mpc(1)]
    for r in roots:
        nxt = [mp.mpc(0)] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i] -= c * r
            nxt[i + 1] += c
        coeffs = nxt
    return coeffs  # ascending


def scaling_filter(p, selection, groups):
    """Build h (length 2p) for one inside/outside selection per group."""
    roots = []
    for bit, (inside, outside) in zip(selection, groups):
        roots.extend(outside if bit else inside)
    q = poly_from_roots(roots)
    # m0(z) = ((1+z)/2)^p * q(z)/q(1); m0(1) = 1 forces sum(h) = sqrt(2).
    q1 = sum(q)
    q = [c / q1 for c in q]
    m0 = q
    for _ in range(p):
        m0 = [
            (m0[i] if i < len(m0) else 0) / 2
            + (m0[i - 1] if i - 1 >= 0 else 0) / 2
            for i in range(len(m0) + 1)
        ]
    h = [mp.sqrt(2) * mp.re(c) for c in m0]
    imag_max = max(abs(mp.im(c)) for c in m0)
    assert imag_max < mp.mpf(10) ** (-35), f"imag residue {imag_max}"
    return h


def phase_nonlinearity(h):
    """Sum of squared deviations of unwrapped phase from its linear fit."""
    hf = np.array([float(c) for c in h])
    w = np.linspace(0.0, np.pi, 257)[1:-1]
    resp = np.exp(-1j * np.outer(w, np.arange(len(hf)))) @ hf
    phase = np.unwrap(np.angle(resp))
    slope = np.dot(phase, w) / np.dot(w, w)
    return float(np.sum((phase - slope * w) ** 2))


def least_asymmetric(p):
    groups = root_groups(p)
    best = None
    for sel in itertools.product([0, 1], repeat=len(groups)):
        h = scaling_filter(p, sel, groups)
        score = phase_nonlinearity(h)
        if best is None or score < best[0] - 1e-12:
            best = (score, h)
    return best[1]


def verify(h64):
    L = len(h64)
    assert abs(h64.sum() - np.sqrt(2)) < 1e-12, h64.sum()
    assert abs((h64 * h64).sum() - 1.0) < 1e-12
    for m in range(1, L // 2):
        dot = np.dot(h64[: L - 2 * m], h64[2 * m :])
        assert abs(dot) < 1e-12, (m, dot)


def write_table(name, h64):
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    path = OUT_DIR / f"{name}.txt"
    path.write_text("".join(f"{float(c)!r}\n" for c in h64))
    print(f"{name}: {len(h64)} taps -> {path}")


def main():
    write_table("haar", np.array([np.sqrt(0.5), np.sqrt(0.5)]))
    for p in SYM_ORDERS:
        h = least_asymmetric(p)
        h64 = np.array([float(c) for c in h])
        verify(h64)
        write_table(f"sym{p}", h64)
        print("  ", np.array2string(h64[:4], precision=8), "...")


if __name__ == "__main__":
    main()
