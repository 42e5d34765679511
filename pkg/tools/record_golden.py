"""Record dense-oracle FCI energies for every fixture into tests/fixtures/golden.json.

When pyscf is importable its FCI energy is stored alongside as an
independent cross-check.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from hivqe.determinants import cas_determinants
from hivqe.integrals import read_fcidump
from hivqe.solver import dense_fci_oracle, solve_subspace

FIXTURES = Path(__file__).parents[1] / "tests" / "fixtures"


def main() -> None:
    try:
        from pyscf import fci
    except ImportError:  # pragma: no cover
        fci = None
    golden = {}
    for path in sorted(FIXTURES.glob("*.fcidump")):
        s = read_fcidump(path)
        dets = cas_determinants(s.n_orb, s.n_alpha, s.n_beta)
        solve = dense_fci_oracle if len(dets) <= 1000 else solve_subspace
        entry = {"cas_size": len(dets), "fci_energy_ha": solve(dets, s).energy}
        if fci is not None:
            h1, eri = s.arrays
            e, _ = fci.direct_spin1.kernel(np.array(h1), np.array(eri), s.n_orb,
                                           (s.n_alpha, s.n_beta), ecore=s.core_energy,
                                           conv_tol=1e-12)
            entry["pyscf_fci_energy_ha"] = float(e)
        golden[path.name] = entry
    (FIXTURES / "golden.json").write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
