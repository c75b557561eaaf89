#!/usr/bin/env python3
"""Generates the fixture corpus and labeled queries.

Writes corpus.jsonl (500 records) and queries.jsonl (20 records) next to
this script. Output is a pure function of SEED.

    python3 gen_corpus.py
"""

import json
import random
from pathlib import Path

SEED = 20240611
CORPUS_SIZE = 500
QUERY_COUNT = 20

# (reactant SMILES, fragment written after the electrophile)
PRIMARY_AMINES = [
    ("CN", "NC"),
    ("CCN", "NCC"),
    ("CCCN", "NCCC"),
    ("CCCCN", "NCCCC"),
    ("CC(C)N", "NC(C)C"),
    ("NCc1ccccc1", "NCc1ccccc1"),
    ("NC1CCCCC1", "NC1CCCCC1"),
    ("NCCOC", "NCCOC"),
]
ANILINES = [
    ("Nc1ccccc1", "Nc1ccccc1"),
    ("Nc1ccc(C)cc1", "Nc1ccc(C)cc1"),
    ("Nc1ccc(F)cc1", "Nc1ccc(F)cc1"),
]
SECONDARY_AMINES = [
    ("C1CCNCC1", "N1CCCCC1"),
    ("C1COCCN1", "N1CCOCC1"),
    ("C1CCNC1", "N1CCCC1"),
    ("CNC", "N(C)C"),
]
AMINES = PRIMARY_AMINES + ANILINES + SECONDARY_AMINES
ALKYL_AMINES = PRIMARY_AMINES + SECONDARY_AMINES

# Prefixes that end at the attachment atom.
ACYL = ["C", "CC", "CCC", "CC(C)", "CCCC", "C1CCCCC1", "c1ccccc1", "Cc1ccc(cc1)", "COc1ccc(cc1)", "Fc1ccc(cc1)", "Clc1ccc(cc1)"]
SULFONYL = ["C", "c1ccccc1", "Cc1ccc(cc1)", "COc1ccc(cc1)", "Fc1ccc(cc1)"]
ALCOHOLS = [("CO", "OC"), ("CCO", "OCC"), ("CCCO", "OCCC"), ("CC(C)O", "OC(C)C"), ("CCCCO", "OCCCC"), ("OCc1ccccc1", "OCc1ccccc1")]
# (bromide, prefix)
ALKYL_BROMIDES = [
    ("BrCc1ccccc1", "c1ccccc1C"),
    ("BrCc1ccc(F)cc1", "Fc1ccc(cc1)C"),
    ("BrCc1ccc(C)cc1", "Cc1ccc(cc1)C"),
    ("CCBr", "CC"),
    ("CCCBr", "CCC"),
    ("CCCCBr", "CCCC"),
    ("CC(C)CBr", "CC(C)C"),
    ("CCOC(=O)CBr", "CCOC(=O)C"),
]
PHENOLS = ["Oc1ccccc1", "Oc1ccc(C)cc1", "Oc1ccc(OC)cc1", "Oc1ccc(Cl)cc1", "Oc1ccc(F)cc1", "Oc1ccc(C#N)cc1"]
# (para substituent, or "" for phenyl)
ARYL_SUBST = ["", "C", "OC", "F", "C(F)(F)F", "C#N", "C(C)=O"]
ALDEHYDES = [
    ("O=Cc1ccccc1", "c1ccccc1C"),
    ("O=Cc1ccc(F)cc1", "Fc1ccc(cc1)C"),
    ("O=Cc1ccc(OC)cc1", "COc1ccc(cc1)C"),
    ("CCC=O", "CCC"),
    ("CCCC=O", "CCCC"),
    ("O=CC1CCCCC1", "C1CCCCC1C"),
    ("O=Cc1ccncc1", "c1ccncc1C"),
]
BENZYL_ALCOHOLS = [
    ("OCc1ccccc1", "O=Cc1ccccc1"),
    ("OCc1ccc(F)cc1", "O=Cc1ccc(F)cc1"),
    ("OCc1ccc(OC)cc1", "O=Cc1ccc(OC)cc1"),
    ("OCc1ccc(C)cc1", "O=Cc1ccc(C)cc1"),
    ("CCCCO", "CCCC=O"),
    ("OCC1CCCCC1", "O=CC1CCCCC1"),
]
NITRO_ARENES = [
    ("O=[N+]([O-])c1ccccc1", "Nc1ccccc1"),
    ("Cc1ccc(cc1)[N+](=O)[O-]", "Cc1ccc(N)cc1"),
    ("COc1ccc(cc1)[N+](=O)[O-]", "COc1ccc(N)cc1"),
    ("Fc1ccc(cc1)[N+](=O)[O-]", "Nc1ccc(F)cc1"),
    ("Clc1ccc(cc1)[N+](=O)[O-]", "Nc1ccc(Cl)cc1"),
    ("CC(=O)c1ccc(cc1)[N+](=O)[O-]", "CC(=O)c1ccc(N)cc1"),
]


def pick(rng, table):
    """Weighted choice from [(value, weight), ...]."""
    values, weights = zip(*table)
    return rng.choices(values, weights=weights, k=1)[0]


def aryl_bromide(s):
    return f"Brc1ccc({s})cc1" if s else "Brc1ccccc1"


def boronic_acid(s):
    return f"OB(O)c1ccc({s})cc1" if s else "OB(O)c1ccccc1"


# The same substituents written to end at their ring bond.
LEADING = {"": "", "C": "C", "OC": "CO", "F": "F", "C(F)(F)F": "FC(F)(F)", "C#N": "N#C", "C(C)=O": "CC(=O)"}


def biaryl(s1, s2):
    head = f"{LEADING[s1]}c1ccc(cc1)"
    tail = f"c2ccc({s2})cc2" if s2 else "c2ccccc2"
    return head + tail


# Each family returns (reactants, products) and a condition sampler.
def amide_acyl_chloride(rng):
    acyl, (amine, frag) = rng.choice(ACYL), rng.choice(AMINES)
    return [acyl + "C(=O)Cl", amine], [acyl + "C(=O)" + frag]


def amide_acyl_conditions(rng):
    return [
        pick(rng, [("", 8), ("DMAP", 2)]),
        pick(rng, [("DCM", 10), ("THF", 4), ("DMF", 2), ("MeCN", 2), ("DCE", 1)]),
        "",
        pick(rng, [("TEA", 10), ("DIPEA", 6), ("pyridine", 3), ("NMM", 1)]),
        "",
    ]


def amide_acid(rng):
    acyl, (amine, frag) = rng.choice(ACYL), rng.choice(AMINES)
    return [acyl + "C(=O)O", amine], [acyl + "C(=O)" + frag]


def amide_acid_conditions(rng):
    agent = pick(rng, [("HATU", 6), ("EDC", 4), ("DCC", 1)])
    return [
        "",
        pick(rng, [("DMF", 8), ("DCM", 5), ("THF", 1), ("MeCN", 1)]),
        "",
        agent,
        pick(rng, [("DIPEA", 6), ("TEA", 3), ("HOBt", 3 if agent == "EDC" else 0.5), ("NMM", 1)]),
    ]


def sulfonamide(rng):
    s, (amine, frag) = rng.choice(SULFONYL), rng.choice(AMINES)
    return [s + "S(=O)(=O)Cl", amine], [s + "S(=O)(=O)" + frag]


def sulfonamide_conditions(rng):
    return [
        pick(rng, [("", 9), ("DMAP", 1)]),
        pick(rng, [("DCM", 10), ("THF", 2), ("MeCN", 2), ("pyridine", 2)]),
        "",
        pick(rng, [("TEA", 7), ("pyridine", 5), ("DIPEA", 3)]),
        "",
    ]


def esterification(rng):
    acyl, (alcohol, frag) = rng.choice(ACYL), rng.choice(ALCOHOLS)
    return [acyl + "C(=O)O", alcohol], [acyl + "C(=O)" + frag]


def esterification_conditions(rng):
    return [
        pick(rng, [("H2SO4", 7), ("TsOH", 4)]),
        pick(rng, [("toluene", 6), ("benzene", 1), ("DCM", 1), ("dioxane", 1), ("", 2)]),
        "",
        "",
        "",
    ]


def n_alkylation(rng):
    (bromide, prefix), (amine, frag) = rng.choice(ALKYL_BROMIDES), rng.choice(ALKYL_AMINES)
    return [bromide, amine], [prefix + frag]


def n_alkylation_conditions(rng):
    return [
        "",
        pick(rng, [("DMF", 7), ("MeCN", 6), ("acetone", 2), ("THF", 1)]),
        "",
        pick(rng, [("K2CO3", 8), ("Cs2CO3", 3), ("DIPEA", 3), ("TEA", 1)]),
        "",
    ]


def williamson(rng):
    (bromide, prefix), phenol = rng.choice(ALKYL_BROMIDES), rng.choice(PHENOLS)
    return [bromide, phenol], [prefix + phenol]


def williamson_conditions(rng):
    return [
        "",
        pick(rng, [("DMF", 7), ("acetone", 5), ("MeCN", 3)]),
        "",
        pick(rng, [("K2CO3", 9), ("Cs2CO3", 4), ("NaH", 2)]),
        "",
    ]


def suzuki(rng):
    s1, s2 = rng.choice(ARYL_SUBST), rng.choice(ARYL_SUBST)
    return [aryl_bromide(s1), boronic_acid(s2)], [biaryl(s1, s2)]


def suzuki_conditions(rng):
    cat = pick(rng, [("Pd(PPh3)4", 7), ("Pd(dppf)Cl2", 5), ("Pd(OAc)2", 2)])
    return [
        cat,
        pick(rng, [("dioxane", 8), ("toluene", 3), ("DME", 3), ("THF", 2)]),
        pick(rng, [("water", 8), ("", 3), ("EtOH", 1)]),
        pick(rng, [("K2CO3", 8), ("Na2CO3", 4), ("Cs2CO3", 3), ("K3PO4", 3)]),
        "XPhos" if cat == "Pd(OAc)2" else "",
    ]


def reductive_amination(rng):
    (aldehyde, prefix), (amine, frag) = rng.choice(ALDEHYDES), rng.choice(ALKYL_AMINES + ANILINES)
    return [aldehyde, amine], [prefix + frag]


def reductive_amination_conditions(rng):
    return [
        "",
        pick(rng, [("DCE", 6), ("DCM", 5), ("MeOH", 3), ("THF", 2)]),
        "",
        pick(rng, [("NaBH(OAc)3", 9), ("NaBH3CN", 3), ("NaBH4", 2)]),
        pick(rng, [("AcOH", 5), ("", 5)]),
    ]


def boc_protection(rng):
    amine, frag = rng.choice(ALKYL_AMINES + ANILINES)
    return [amine, "CC(C)(C)OC(=O)OC(=O)OC(C)(C)C"], ["CC(C)(C)OC(=O)" + frag]


def boc_conditions(rng):
    return [
        pick(rng, [("", 8), ("DMAP", 2)]),
        pick(rng, [("DCM", 8), ("THF", 5), ("dioxane", 2), ("MeCN", 1)]),
        pick(rng, [("", 8), ("water", 2)]),
        pick(rng, [("TEA", 8), ("NaHCO3", 3), ("DIPEA", 2), ("NaOH", 1)]),
        "",
    ]


def ester_hydrolysis(rng):
    acyl, (_, frag) = rng.choice(ACYL), rng.choice(ALCOHOLS[:3])
    return [acyl + "C(=O)" + frag], [acyl + "C(=O)O"]


def hydrolysis_conditions(rng):
    solvent = pick(rng, [("THF", 8), ("MeOH", 5), ("dioxane", 2), ("EtOH", 1)])
    return [
        "",
        solvent,
        "water" if solvent == "MeOH" else pick(rng, [("water", 9), ("MeOH", 2)]),
        pick(rng, [("LiOH", 8), ("NaOH", 5), ("KOH", 2)]),
        "",
    ]


def nitro_reduction(rng):
    nitro, aniline = rng.choice(NITRO_ARENES)
    return [nitro], [aniline]


def nitro_conditions(rng):
    if rng.random() < 0.6:
        return ["Pd/C", pick(rng, [("MeOH", 6), ("EtOH", 4), ("EtOAc", 2)]), "", "H2", ""]
    return ["", pick(rng, [("EtOH", 8), ("MeOH", 2)]), pick(rng, [("water", 8), ("", 2)]), "Fe", "NH4Cl"]


def alcohol_oxidation(rng):
    alcohol, aldehyde = rng.choice(BENZYL_ALCOHOLS)
    return [alcohol], [aldehyde]


def oxidation_conditions(rng):
    ox = pick(rng, [("DMP", 6), ("PCC", 3), ("MnO2", 2), ("TEMPO", 2)])
    return [
        "",
        pick(rng, [("DCM", 10), ("chloroform", 1)]),
        "water" if ox == "TEMPO" else "",
        ox,
        "NaOCl" if ox == "TEMPO" else "",
    ]


FAMILIES = [
    ("amide coupling", amide_acyl_chloride, amide_acyl_conditions, 60),
    ("amide coupling", amide_acid, amide_acid_conditions, 50),
    ("sulfonamide formation", sulfonamide, sulfonamide_conditions, 50),
    ("esterification", esterification, esterification_conditions, 40),
    ("N-alkylation", n_alkylation, n_alkylation_conditions, 45),
    ("Williamson ether synthesis", williamson, williamson_conditions, 35),
    ("Suzuki coupling", suzuki, suzuki_conditions, 50),
    ("reductive amination", reductive_amination, reductive_amination_conditions, 65),
    ("Boc protection", boc_protection, boc_conditions, 35),
    ("ester hydrolysis", ester_hydrolysis, hydrolysis_conditions, 30),
    ("nitro reduction", nitro_reduction, nitro_conditions, 20),
    ("alcohol oxidation", alcohol_oxidation, oxidation_conditions, 20),
]

SLOTS = ["catalyst1", "solvent1", "solvent2", "reagent1", "reagent2"]


def record(rid, tau, reactants, products, conditions, provenance):
    out = {"id": rid, "reaction_type": tau, "reactants": reactants, "products": products}
    out.update(zip(SLOTS, conditions))
    out["provenance"] = provenance
    return out


def conflicts(reactants, conditions):
    """A condition species that is also a reactant, by SMILES spelling."""
    named = {"MeOH": "CO", "EtOH": "CCO", "AcOH": "CC(=O)O"}
    return any(named.get(c) in reactants for c in conditions if c)


def main():
    rng = random.Random(SEED)
    weights = [f[3] for f in FAMILIES]
    corpus, seen = [], set()
    while len(corpus) < CORPUS_SIZE:
        tau, build, conds, _ = rng.choices(FAMILIES, weights=weights, k=1)[0]
        reactants, products = build(rng)
        conditions = conds(rng)
        if conflicts(reactants, conditions):
            continue
        corpus.append(record(f"R{len(corpus) + 1:04d}", tau, reactants, products, conditions, "synthetic"))
        seen.add((tuple(reactants), tuple(products)))

    # Families cycle; one whose substrate space the corpus exhausted is skipped.
    queries, turn = [], 0
    while len(queries) < QUERY_COUNT:
        tau, build, conds, _ = FAMILIES[turn % len(FAMILIES)]
        turn += 1
        for _ in range(200):
            reactants, products = build(rng)
            conditions = conds(rng)
            key = (tuple(reactants), tuple(products))
            if key not in seen and not conflicts(reactants, conditions):
                seen.add(key)
                queries.append(record(f"Q{len(queries) + 1:02d}", tau, reactants, products, conditions, "held-out"))
                break

    here = Path(__file__).resolve().parent
    for name, rows in [("corpus.jsonl", corpus), ("queries.jsonl", queries)]:
        with open(here / name, "w") as f:
            for r in rows:
                f.write(json.dumps(r) + "\n")


if __name__ == "__main__":
    main()
