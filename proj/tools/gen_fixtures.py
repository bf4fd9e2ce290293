#!/usr/bin/env python3
# Copyright 2026 The ptvqe Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the FCIDUMP fixtures under data/ with PySCF.

Orbitals are written in a geometry-continuous order so that one partition
(given in each system's config) selects the same orbital character at every
bond length. Reference FCI / CASCI energies computed by PySCF are stored in
data/<system>/references.json and serve as an oracle independent of the C++
code.

Usage: python3 tools/gen_fixtures.py [--out data]
"""
import argparse
import json
import os

import numpy as np
from pyscf import ao2mo, fci, gto, mcscf, scf, symm
from pyscf.tools import fcidump

SYSTEMS = {
    "hf": dict(
        atom="H 0 0 0; F 0 0 {R}",
        basis="sto-3g",
        bonds=[0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.9, 2.1, 2.3, 2.5],
        # 1sigma 2sigma 1pi_x | 3sigma 1pi_y 4sigma
        order=[("A1", 0), ("A1", 1), ("E1x", 0), ("A1", 2), ("E1y", 0), ("A1", 3)],
        frozen=[], inactive=[0, 1, 2], active=[3, 4, 5],
    ),
    "n2": dict(
        atom="N 0 0 0; N 0 0 {R}",
        basis="sto-3g",
        bonds=[0.9, 1.0, 1.1, 1.2, 1.4, 1.6, 1.9, 2.0, 2.2],
        order=None,  # energy order; the three lowest are always 1sg 1su 2sg
        frozen=[], inactive=[0, 1, 2], active=[3, 4, 5, 6, 7, 8, 9],
    ),
    "f2": dict(
        atom="F 0 0 0; F 0 0 {R}",
        basis="sto-6g",
        bonds=[1.2, 1.4, 1.6, 1.8, 2.0, 2.2],
        # frozen 1sg 1su | 2sg 2su 1pu 1pu 1pg 1pg | 3sg 3su
        order=[("A1g", 0), ("A1u", 0), ("A1g", 1), ("A1u", 1), ("E1ux", 0),
               ("E1uy", 0), ("E1gx", 0), ("E1gy", 0), ("A1g", 2), ("A1u", 2)],
        frozen=[0, 1], inactive=[2, 3, 4, 5, 6, 7], active=[8, 9],
    ),
}


def stable_rhf(mol, dm0):
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel(dm0)
    for _ in range(5):
        mo, _, stable, _ = mf.stability(return_status=True)
        if stable:
            break
        mf.kernel(mf.make_rdm1(mo, mf.mo_occ))
    return mf


def reorder(mol, mf, order):
    if order is None:
        return mf.mo_coeff, np.arange(mf.mo_coeff.shape[1])
    labels = symm.label_orb_symm(mol, mol.irrep_name, mol.symm_orb, mf.mo_coeff)
    perm = []
    for irrep, rank in order:
        hits = [i for i, lab in enumerate(labels) if lab == irrep]
        perm.append(hits[rank])
    assert sorted(perm) == list(range(len(labels))), (labels, perm)
    return mf.mo_coeff[:, perm], np.array(perm)


def casci_energy(mf, mo, ncore, ncas, nelecas):
    mc = mcscf.CASCI(mf, ncas, nelecas, ncore=ncore)
    # the partitions break the point-group labels, so use the plain solver
    mc.fcisolver = fci.direct_spin1.FCI()
    mc.fcisolver.conv_tol = 1e-13
    mc.verbose = 0
    return float(mc.kernel(mo)[0])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    args = ap.parse_args()
    for name, sysdef in SYSTEMS.items():
        outdir = os.path.join(args.out, name)
        os.makedirs(outdir, exist_ok=True)
        refs = []
        dm = None
        for R in sysdef["bonds"]:
            mol = gto.M(atom=sysdef["atom"].format(R=R), basis=sysdef["basis"],
                        symmetry=True, verbose=0)
            mf = stable_rhf(mol, dm)
            dm = mf.make_rdm1()
            mo, perm = reorder(mol, mf, sysdef["order"])
            norb = mo.shape[1]
            h1 = mo.T @ mf.get_hcore() @ mo
            eri = ao2mo.restore(8, ao2mo.kernel(mol, mo), norb)
            path = os.path.join(outdir, "%s_%.2f.fcidump" % (name, R))
            fcidump.from_integrals(path, h1, eri, norb, mol.nelectron, mol.energy_nuc(),
                                   ms=0, tol=1e-14, float_format=" %.16e")
            nfrz, ninact, nact = len(sysdef["frozen"]), len(sysdef["inactive"]), len(sysdef["active"])
            nelec_act = mol.nelectron - 2 * (nfrz + ninact)
            e_fci, _ = fci.direct_spin1.kernel(h1, ao2mo.restore(1, eri, norb), norb,
                                                mol.nelectron, ecore=mol.energy_nuc(),
                                                conv_tol=1e-13, max_cycle=500)
            rec = dict(bond_length=R, file=os.path.basename(path), e_hf=float(mf.e_tot),
                       e_fci=float(e_fci),
                       e_casci_active=casci_energy(mf, mo, nfrz + ninact, nact, nelec_act),
                       orbital_permutation=[int(p) for p in perm])
            if nfrz:
                rec["e_casci_nonfrozen"] = casci_energy(
                    mf, mo, nfrz, norb - nfrz, mol.nelectron - 2 * nfrz)
            refs.append(rec)
            print(name, R, rec)
        with open(os.path.join(outdir, "references.json"), "w") as f:
            json.dump(dict(system=name, basis=sysdef["basis"], frozen=sysdef["frozen"],
                           inactive=sysdef["inactive"], active=sysdef["active"],
                           generator="pyscf", points=refs), f, indent=2)


if __name__ == "__main__":
    main()
