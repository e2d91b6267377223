"""Generate orthogonal scaling-filter tables for crates/core/src/wavelet/filters.rs.

Daubechies (db1..db45) filters come from the minimum-phase spectral
factorization of the half-band polynomial, evaluated with mpmath at 120
significant digits. Symlets (sym2..sym20) use the same half-band roots; of all
root selections the one closest to the PyWavelets sym table is kept (that table
is only accurate to ~1e-12, so the selection is recomputed here at full
precision). Without PyWavelets the least-asymmetric selection is used, which
differs from the conventional table for some orders.

Usage: python3 tools/gen_filters.py > crates/core/src/wavelet/filters.rs
"""
import itertools
import sys

import mpmath as mp

mp.mp.dps = 120


def half_band_roots(n):
    # P(y) = sum_{k<n} C(n-1+k, k) y^k, roots y_i -> z + 1/z = 2 - 4 y_i
    coeffs = [mp.binomial(n - 1 + k, k) for k in range(n)]
    if n == 1:
        return []
    ys = mp.polyroots(list(reversed(coeffs)), maxsteps=2000, extraprec=2000)
    zs = []
    for y in ys:
        b = 2 - 4 * y
        disc = mp.sqrt(b * b - 4)
        z1 = (b + disc) / 2
        z2 = (b - disc) / 2
        zs.append(z1 if abs(z1) < 1 else z2)
    return zs


def poly_from_roots(zs, n):
    # (1 + z^-1)^n * prod (1 - z_i z^-1), coefficients in powers of z^-1
    poly = [mp.mpf(1)]
    for _ in range(n):
        poly = [a + b for a, b in zip(poly + [0], [0] + poly)]
    for z in zs:
        poly = [a - z * b for a, b in zip(poly + [0], [0] + poly)]
    poly = [mp.re(c) for c in poly]
    s = sum(poly)
    return [c * mp.sqrt(2) / s for c in poly]


def group_roots(zs):
    """Group inside-unit-circle roots into conjugate pairs / real singletons."""
    groups, used = [], [False] * len(zs)
    for i, z in enumerate(zs):
        if used[i]:
            continue
        used[i] = True
        if abs(mp.im(z)) < mp.mpf(10) ** -60:
            groups.append([mp.re(z)])
            continue
        j = min((k for k in range(len(zs)) if not used[k]), key=lambda k: abs(zs[k] - mp.conj(z)))
        used[j] = True
        groups.append([z, zs[j]])
    return groups


def phase_nonlinearity(h):
    # deviation of the unwrapped phase from its best linear fit on (0, pi)
    m = 256
    ws = [mp.pi * (k + 0.5) / m for k in range(m)]
    phases, prev, offset = [], None, mp.mpf(0)
    for w in ws:
        val = sum(c * mp.expj(-w * k) for k, c in enumerate(h))
        ph = mp.arg(val)
        if prev is not None:
            while ph + offset - prev > mp.pi:
                offset -= 2 * mp.pi
            while ph + offset - prev < -mp.pi:
                offset += 2 * mp.pi
        prev = ph + offset
        phases.append(prev)
    n = len(ws)
    mw = sum(ws) / n
    mphi = sum(phases) / n
    slope = sum((w - mw) * (p - mphi) for w, p in zip(ws, phases)) / sum((w - mw) ** 2 for w in ws)
    return sum((p - mphi - slope * (w - mw)) ** 2 for w, p in zip(ws, phases))


def daubechies(n):
    return poly_from_roots(half_band_roots(n), n)


def symlet(n, reference=None):
    mp.mp.dps = 40
    zs = half_band_roots(n)
    groups = group_roots(zs)
    best = None
    for flips in itertools.product([False, True], repeat=len(groups)):
        if flips and flips[0]:
            continue  # mirror image choices give the time-reversed filter
        roots = []
        for flip, g in zip(flips, groups):
            roots.extend([1 / z for z in g] if flip else g)
        h = poly_from_roots(roots, n)
        if reference is not None:
            score = min(max(abs(float(a) - b) for a, b in zip(h, reference)),
                        max(abs(float(a) - b) for a, b in zip(reversed(h), reference)))
        else:
            score = phase_nonlinearity(h)
        if best is None or score < best[0]:
            best = (score, roots, None)
    # redo the winning selection at full precision
    mp.mp.dps = 120
    zs = half_band_roots(n)
    hi = []
    for z in best[1]:
        target = complex(z)
        cand = min(zs + [1 / w for w in zs], key=lambda w: abs(complex(w) - target))
        hi.append(cand)
    best = (best[0], best[1], poly_from_roots(hi, n))
    mp.mp.dps = 120
    return best[2]


def check(h):
    s = sum(h) - mp.sqrt(2)
    worst = abs(s)
    for m in range(0, len(h) // 2):
        acc = sum(h[k] * h[k + 2 * m] for k in range(len(h) - 2 * m))
        worst = max(worst, abs(acc - (1 if m == 0 else 0)))
    return worst


def main():
    try:
        import pywt
    except ImportError:
        pywt = None
    out = sys.stdout
    out.write("// Generated by tools/gen_filters.py. Do not edit by hand.\n")
    out.write("#![allow(clippy::approx_constant, clippy::excessive_precision, clippy::unreadable_literal)]\n\n")
    for family, orders, build in (("DB", range(1, 46), daubechies), ("SYM", range(2, 21), None)):
        out.write(f"pub(super) static {family}: [&[f64]; {len(orders)}] = [\n")
        for n in orders:
            if build is not None:
                h = build(n)
            else:
                # Symlets are refined at high precision once the root
                # selection is known: recompute with the chosen roots.
                ref = pywt.Wavelet(f"sym{n}").rec_lo if pywt is not None else None
                h = symlet(n, ref)
                if ref is not None and max(abs(float(a) - b) for a, b in zip(reversed(h), ref)) < \
                        max(abs(float(a) - b) for a, b in zip(h, ref)):
                    h = list(reversed(h))
            err = check(h)
            if err > mp.mpf(10) ** -30:
                raise SystemExit(f"{family}{n}: residual {err}")
            name = ("db" if family == "DB" else "sym") + str(n)
            if pywt is not None and (family == "SYM" or n <= 38):
                ref = pywt.Wavelet(name).rec_lo
                d = min(max(abs(float(a) - b) for a, b in zip(h, ref)),
                        max(abs(float(a) - b) for a, b in zip(reversed(h), ref)))
                sys.stderr.write(f"{name}: residual {mp.nstr(err, 3)} vs pywt {d:.2e}\n")
            else:
                sys.stderr.write(f"{name}: residual {mp.nstr(err, 3)}\n")
            out.write(f"    // {name}\n    &[\n")
            for c in h:
                out.write(f"        {mp.nstr(c, 20, strip_zeros=False, min_fixed=-1, max_fixed=1)},\n")
            out.write("    ],\n")
        out.write("];\n\n")


if __name__ == "__main__":
    main()
