#!/usr/bin/env python3
"""Write the classical (literature) method files into the builtin registry.

One-step methods are stored in their k=2 embedding (zero weights on the
older step).  Butcher arrays are entered as exact fractions; the file writer
keeps full double precision.
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from sspif import certify, tableau


def embed_rk(name, order, A, b, certified=None):
    """One-step explicit RK (A, b) as a k=2 method with zero u^{n-1} weights."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    s = len(b)
    D = np.zeros((s, 2))
    D[:, 1] = 1.0
    return tableau.TsrkMethod(
        name=name,
        k=2,
        s=s,
        order=order,
        D=D,
        Ahat=np.zeros((s, 1)),
        A=A,
        theta=np.array([0.0, 1.0]),
        bhat=np.zeros(1),
        b=b,
        certified_C=certified,
        provenance={"origin": "literature"},
    )


def main():
    out_dir = tableau.builtin_registry_dir()
    os.makedirs(out_dir, exist_ok=True)

    methods = []

    # Forward Euler.
    methods.append(embed_rk("forward_euler", 1, [[0.0]], [1.0]))

    # Shu-Osher eSSPRK(3,3): C = 1, decreasing abscissas (0, 1, 1/2).
    methods.append(
        embed_rk(
            "essprk33",
            3,
            [[0, 0, 0], [1, 0, 0], [0.25, 0.25, 0]],
            [1 / 6, 1 / 6, 2 / 3],
        )
    )

    # eSSPRK+(3,3): C = 3/4, non-decreasing abscissas (0, 2/3, 2/3).
    methods.append(
        embed_rk(
            "essprk33p",
            3,
            [[0, 0, 0], [2 / 3, 0, 0], [2 / 9, 4 / 9, 0]],
            [1 / 4, 3 / 16, 9 / 16],
        )
    )

    # Spiteri-Ruuth eSSPRK(4,3): C = 2, abscissas (0, 1/2, 1, 1/2).
    methods.append(
        embed_rk(
            "essprk43",
            3,
            [
                [0, 0, 0, 0],
                [0.5, 0, 0, 0],
                [0.5, 0.5, 0, 0],
                [1 / 6, 1 / 6, 1 / 6, 0],
            ],
            [1 / 6, 1 / 6, 1 / 6, 0.5],
        )
    )

    # First-order two-step SSP linear multistep method, C = 4/5, written as
    # an s=1 two-step method (theta, bhat, b carry the whole update).
    methods.append(
        tableau.TsrkMethod(
            name="ssplmm21",
            k=2,
            s=1,
            order=1,
            D=np.array([[0.0, 1.0]]),
            Ahat=np.zeros((1, 1)),
            A=np.zeros((1, 1)),
            theta=np.array([0.25, 0.75]),
            bhat=np.array([5 / 16]),
            b=np.array([15 / 16]),
            provenance={"origin": "literature"},
        )
    )

    for m in methods:
        spij = tableau.to_spijker(m)
        C = certify.ssp_coefficient(spij)
        m = tableau.TsrkMethod(
            name=m.name,
            k=m.k,
            s=m.s,
            order=m.order,
            D=m.D,
            Ahat=m.Ahat,
            A=m.A,
            theta=m.theta,
            bhat=m.bhat,
            b=m.b,
            certified_C=C,
            provenance=m.provenance,
        )
        path = os.path.join(out_dir, f"{m.name}.txt")
        tableau.save_method(m, path)
        mono = certify.abscissa_monotone(tableau.abscissas(m))
        print(f"{m.name}: s={m.s} p={m.order} C={C:.6f} monotone={mono} -> {path}")


if __name__ == "__main__":
    main()
