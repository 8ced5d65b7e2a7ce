"""Generate the FCIDUMP fixtures under data/fcidump/.

Requires pyscf, which is not a runtime dependency of the package:

    pip install pyscf
    python scripts/make_fcidumps.py
"""
import argparse
from pathlib import Path

import numpy as np
from pyscf import ao2mo, gto, lo, scf
from pyscf.tools import fcidump


def hchain(n, r):
    atoms = [("H", (0.0, 0.0, i * r)) for i in range(n)]
    return gto.M(atom=atoms, basis="sto-3g", unit="Angstrom", spin=n % 2, verbose=0)


def write(mol, coeff, path):
    h1 = coeff.T @ mol.intor("int1e_kin") @ coeff + coeff.T @ mol.intor("int1e_nuc") @ coeff
    eri = ao2mo.restore(8, ao2mo.full(mol, coeff), coeff.shape[1])
    fcidump.from_integrals(
        str(path), h1, eri, coeff.shape[1], mol.nelec, nuc=mol.energy_nuc(), ms=mol.spin, tol=1e-14
    )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data" / "fcidump"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    # H2 near equilibrium, canonical RHF orbitals
    mol = hchain(2, 0.74)
    mf = scf.RHF(mol).run()
    write(mol, mf.mo_coeff, out / "h2_r0.74_cmo.fcidump")

    # hydrogen chains in Lowdin-orthogonalized atomic orbitals
    for n, rs in [(4, (0.5, 1.0, 1.5, 2.0, 2.5)), (6, (2.0,)), (8, (2.0,))]:
        for r in rs:
            mol = hchain(n, r)
            coeff = lo.orth_ao(mol, "lowdin")
            assert np.allclose(coeff.T @ mol.intor("int1e_ovlp") @ coeff, np.eye(n), atol=1e-10)
            write(mol, coeff, out / f"h{n}_r{r:.1f}_oao.fcidump")


if __name__ == "__main__":
    main()
