"""Regenerate the FCIDUMP fixtures under tests/fixtures/.

Needs pyscf (``pip install .[fixtures]``); the package itself does not.
Integrals are taken in the RHF molecular-orbital basis and written with
``hivqe.integrals.write_fcidump`` so the files are canonical.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
from pyscf import ao2mo, gto, mcscf, scf

from hivqe.integrals import IntegralSet, write_fcidump

CUTOFF = 1e-12


def _to_integral_set(h1, eri, ecore, n_orb, n_alpha, n_beta) -> IntegralSet:
    eri = ao2mo.restore(1, eri, n_orb)
    one = {}
    for p in range(n_orb):
        for q in range(p, n_orb):
            if abs(h1[p, q]) > CUTOFF:
                one[(p + 1, q + 1)] = float(h1[p, q])
    two = {}
    for p in range(n_orb):
        for q in range(p, n_orb):
            for r in range(n_orb):
                for s in range(r, n_orb):
                    if (p, q) > (r, s) or abs(eri[p, q, r, s]) <= CUTOFF:
                        continue
                    two[(p + 1, q + 1, r + 1, s + 1)] = float(eri[p, q, r, s])
    return IntegralSet(
        n_orb=n_orb,
        n_elec=n_alpha + n_beta,
        ms2=n_alpha - n_beta,
        core_energy=float(ecore),
        one_body=one,
        two_body=two,
    )


def hydrogen_chain(n_atoms: int, spacing: float) -> IntegralSet:
    atoms = [("H", (0.0, 0.0, k * spacing)) for k in range(n_atoms)]
    mol = gto.M(atom=atoms, basis="sto-3g", unit="Angstrom", verbose=0)
    mf = scf.RHF(mol).run(conv_tol=1e-12)
    c = mf.mo_coeff
    h1 = c.T @ mf.get_hcore() @ c
    eri = ao2mo.kernel(mol, c)
    return _to_integral_set(h1, eri, mol.energy_nuc(), c.shape[1], n_atoms // 2, n_atoms // 2)


def nitrogen_cas(distance: float, n_cas: int = 6, n_elec: int = 6) -> IntegralSet:
    mol = gto.M(atom=[("N", (0, 0, 0)), ("N", (0, 0, distance))], basis="sto-3g",
                unit="Angstrom", verbose=0)
    mf = scf.RHF(mol).run(conv_tol=1e-12)
    cas = mcscf.CASCI(mf, n_cas, n_elec)
    h1, ecore = cas.get_h1eff()
    eri = cas.get_h2eff()
    return _to_integral_set(h1, eri, ecore, n_cas, n_elec // 2, n_elec // 2)


FIXTURES = {
    "h2_0.74.fcidump": lambda: hydrogen_chain(2, 0.74),
    "h4_1.50.fcidump": lambda: hydrogen_chain(4, 1.50),
    "h6_1.00.fcidump": lambda: hydrogen_chain(6, 1.00),
    "h6_2.00.fcidump": lambda: hydrogen_chain(6, 2.00),
    "h8_1.50.fcidump": lambda: hydrogen_chain(8, 1.50),
    "n2_cas66_1.10.fcidump": lambda: nitrogen_cas(1.10),
    "n2_cas66_3.00.fcidump": lambda: nitrogen_cas(3.00),
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).parents[1] / "tests" / "fixtures")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    np.set_printoptions(precision=12)
    for name, make in FIXTURES.items():
        s = make()
        (args.out / name).write_text(write_fcidump(s))
        print(f"{name}: norb={s.n_orb} nelec={s.n_elec} two-body entries={len(s.two_body)}")


if __name__ == "__main__":
    main()
