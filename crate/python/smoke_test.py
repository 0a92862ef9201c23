#!/usr/bin/env python3
"""Smoke test for the sponge_spectra_py extension module.

Builds nothing itself: it locates the compiled cdylib under target/ (run
`cargo build -p sponge-spectra-py` or `--release` first), loads it, and
checks a handful of closed-form values.
"""

import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    names = ["libsponge_spectra_py.so", "sponge_spectra_py.dll", "libsponge_spectra_py.dylib"]
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in names
    ]
    for cand in candidates:
        if cand.exists():
            spec = importlib.util.spec_from_file_location("sponge_spectra_py", cand)
            mod = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(mod)
            return mod
    sys.exit(
        "extension not found; run `cargo build -p sponge-spectra-py` first\n"
        f"searched: {[str(c) for c in candidates]}"
    )


def close(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    ss = load_module()
    log2, log3 = math.log(2.0), math.log(3.0)

    # the carpet of the worked examples: bases (3,2), three digits
    sponge = ss.Sponge([3, 2], [[0, 0], [1, 1], [2, 0]])
    close(sponge.packing_dimension(), 2.0 - log2 / log3, 1e-12)
    hdim, maximizer = sponge.hausdorff_dimension()
    close(hdim, math.log(1.0 + 2.0 ** (log2 / log3)) / log2, 1e-9)
    close(hdim, sponge.mcmullen_closed_form(), 1e-9)
    close(sum(maximizer), 1.0, 1e-9)
    assert sponge.approximate_square_count(2) == 9
    close(sponge.box_dim_estimate(10_000), sponge.packing_dimension(), 1e-3)
    assert sponge.projected_alphabet(2) == [[0], [1]]

    # spectrum of the indicator of digit (1,1): closed form
    phi = ss.Potential.indicator(sponge, [1, 1])
    assert phi.domain(sponge) == (0.0, 1.0)

    def example1_closed(a):
        h2 = 0.0 if a in (0.0, 1.0) else -a * math.log(a) - (1 - a) * math.log(1 - a)
        return h2 / log2 + (1 - a) * log2 / log3

    for alpha in [0.0, 0.25, 1.0 / 3.0, 0.5, 0.9]:
        close(ss.packing_spectrum_point(sponge, phi, alpha), example1_closed(alpha), 1e-8)
        close(ss.hausdorff_spectrum_point(sponge, phi, alpha), example1_closed(alpha), 1e-8)
    assert ss.full_dim_attainment(sponge, phi) is None

    # the second worked potential attains the packing dimension at 1/3
    phi2 = ss.Potential.indicator(sponge, [2, 0])
    witness = ss.full_dim_attainment(sponge, phi2)
    close(witness[0], 1.0 / 3.0, 1e-10)
    close(
        ss.packing_spectrum_point(sponge, phi2, 1.0 / 3.0),
        sponge.packing_dimension(),
        1e-8,
    )
    curve = ss.spectrum_curve(sponge, phi2, kind="packing", grid=401)
    assert len(curve["alpha"]) == 401
    assert len(curve["transitions"]) == 1
    close(curve["transitions"][0], 0.5, 0.0026)
    close(ss.divergence_spectrum(sponge, phi2, [(0.0, 1.0)]), sponge.packing_dimension(), 1e-9)

    # measures and local dimension on the (4,3) sponge
    sponge3 = ss.Sponge([4, 3], [[0, 0], [2, 2], [3, 0]])
    nu = ss.Measure(sponge3, [0.25, 0.5, 0.25])
    close(nu.entropy(), 1.5 * log2, 1e-12)
    close(sum(nu.marginal(sponge3, 2)), 1.0, 1e-12)
    local = ss.LocalDim(sponge3, nu)
    assert local.is_one_dimensional() == 1
    lo, hi = local.domain()
    close(lo, log2 / log3, 1e-10)
    close(hi, log2 / log3 + 0.5, 1e-10)
    close(local.packing_exact(lo), 0.0, 1e-8)
    close(local.packing_exact(hi), 0.5, 1e-8)
    close(local.packing_lower(hi), 0.5, 1e-8)
    # the peak stays strictly below the packing dimension of the sponge
    peak = max(local.packing_exact(lo + (hi - lo) * i / 100) for i in range(101))
    assert peak < sponge3.packing_dimension() - 5e-3

    print("smoke test OK")


if __name__ == "__main__":
    main()
