#!/usr/bin/env python3
"""Write a small synthetic family ABox and a concept list for instance retrieval.

Usage: make_family.py OUT_DIR [--seed N]

Files:
  family.tsv    type assertions (Person, Male, Female) and the roles
                hasChild, hasSon, hasDaughter, married, hasSibling
  subroles.tsv  hasSon and hasDaughter below hasChild
  concepts.txt  "<syntax><TAB><expression>" lines covering all ten concept
                groups; every third line is written in DL notation
"""
import argparse
import random
from pathlib import Path

PEOPLE = {
    "heinz": "Male", "anna": "Female", "otto": "Male", "gisela": "Female",
    "markus": "Male", "michelle": "Female", "carl": "Male", "stefan": "Male",
    "martina": "Female", "lena": "Female", "paul": "Male", "jonas": "Male",
    "sophie": "Female", "emma": "Female", "felix": "Male", "clara": "Female",
    "mia": "Female", "noah": "Male",
}
COUPLES = [("heinz", "anna"), ("otto", "gisela"), ("markus", "martina"),
           ("stefan", "michelle"), ("paul", "clara")]
CHILDREN = {
    ("heinz", "anna"): ["markus", "michelle", "carl"],
    ("otto", "gisela"): ["stefan", "martina"],
    ("markus", "martina"): ["lena", "paul", "jonas"],
    ("stefan", "michelle"): ["sophie", "emma", "felix"],
    ("paul", "clara"): ["mia", "noah"],
}

ATOMS = ["Male", "Female", "Person"]
ROLES = ["hasChild", "hasSon", "hasDaughter", "married", "hasSibling"]
NAMES = sorted(PEOPLE)

# Groups and their sizes in the generated list.
TARGET = {"Atomic": 3, "Negation": 28, "Conjunction": 10, "Disjunction": 16,
          "Existential": 22, "Universal": 6, "AtLeast": 6, "AtMost": 6,
          "Nominals": 20, "Inverse": 18}


def triples():
    out = []
    for p, sex in PEOPLE.items():
        out.append((p, "type", "Person"))
        out.append((p, "type", sex))
    for a, b in COUPLES:
        out.append((a, "married", b))
        out.append((b, "married", a))
    for parents, kids in CHILDREN.items():
        for parent in parents:
            for kid in kids:
                out.append((parent, "hasChild", kid))
                out.append((parent, "hasSon" if PEOPLE[kid] == "Male" else "hasDaughter", kid))
        for a in kids:
            for b in kids:
                if a != b:
                    out.append((a, "hasSibling", b))
    return out


# AST: ("atom", A) ("not", e) ("and", a, b) ("or", a, b) ("some"|"only", role, inv, e)
#      ("min"|"max", n, role, inv, e) ("oneof", [names])
LEVEL = {"or": 1, "and": 2}


def level(e):
    return LEVEL.get(e[0], 3)


def render(e, dl):
    def child(c, min_level):
        s = render(c, dl)
        return "(" + s + ")" if level(c) < min_level else s

    def role(r, inv):
        if dl:
            return r + ("⁻" if inv else "")
        return ("inverse " if inv else "") + r

    k = e[0]
    if k == "atom":
        return e[1]
    if k == "not":
        return ("¬" if dl else "not ") + child(e[1], 3)
    if k in ("and", "or"):
        op = {"and": (" ⊓ ", " and "), "or": (" ⊔ ", " or ")}[k][0 if dl else 1]
        return child(e[1], LEVEL[k]) + op + child(e[2], LEVEL[k] + 1)
    if k in ("some", "only"):
        _, r, inv, f = e
        if dl:
            return ("∃" if k == "some" else "∀") + role(r, inv) + "." + child(f, 3)
        return role(r, inv) + " " + k + " " + child(f, 3)
    if k in ("min", "max"):
        _, n, r, inv, f = e
        if dl:
            return ("≥ " if k == "min" else "≤ ") + str(n) + " " + role(r, inv) + "." + child(f, 3)
        return role(r, inv) + " " + k + " " + str(n) + " " + child(f, 3)
    if k == "oneof":
        return "{" + ", ".join(e[1]) + "}"
    raise ValueError(k)


def walk(e):
    yield e
    k = e[0]
    if k == "not":
        yield from walk(e[1])
    elif k in ("and", "or"):
        yield from walk(e[1])
        yield from walk(e[2])
    elif k in ("some", "only"):
        yield from walk(e[3])
    elif k in ("min", "max"):
        yield from walk(e[4])


def group(e):
    nodes = list(walk(e))
    if any((n[0] in ("some", "only") and n[2]) or (n[0] in ("min", "max") and n[3]) for n in nodes):
        return "Inverse"
    if any(n[0] == "oneof" for n in nodes):
        return "Nominals"
    return {"atom": "Atomic", "not": "Negation", "and": "Conjunction", "or": "Disjunction",
            "some": "Existential", "only": "Universal", "min": "AtLeast", "max": "AtMost"}[e[0]]


def candidates(rng):
    atoms = [("atom", a) for a in ATOMS]
    some = [("some", r, False, a) for r in ROLES for a in atoms]
    only = [("only", r, False, a) for r in ROLES for a in atoms]
    nested = [("some", r, False, s) for r in ("hasChild", "married") for s in some[:9]]
    out = list(atoms)
    out += [("not", a) for a in atoms] + [("not", s) for s in some] + [("not", o) for o in only]
    out += [("not", ("and", a, s)) for a in atoms for s in some[:6]]
    out += [("and", a, s) for a in atoms for s in some] + [("and", s, t) for s in some[:6] for t in some[6:12]]
    out += [("and", a, ("not", b)) for a in atoms for b in atoms if a != b]
    out += [("or", a, s) for a in atoms for s in some] + [("or", s, t) for s in some[:6] for t in only[:6]]
    out += [("or", ("and", a, s), t) for a in atoms for s in some[:3] for t in some[3:6]]
    out += some + nested + [("some", r, False, ("and", a, b)) for r in ROLES for a in atoms for b in atoms if a < b]
    out += only + [("only", r, False, ("not", a)) for r in ROLES for a in atoms]
    out += [("min", n, r, False, a) for n in (1, 2, 3) for r in ("hasChild", "hasSon", "hasDaughter") for a in atoms]
    out += [("max", n, r, False, a) for n in (0, 1, 2) for r in ("hasChild", "hasSon", "hasDaughter") for a in atoms]
    for k in (1, 2, 3):
        for i in range(6):
            out.append(("oneof", sorted(rng.sample(NAMES, k))))
    out += [("some", r, False, ("oneof", [n])) for r in ROLES for n in rng.sample(NAMES, 3)]
    out += [("and", a, ("oneof", sorted(rng.sample(NAMES, 3)))) for a in atoms]
    out += [("not", ("oneof", [n])) for n in rng.sample(NAMES, 3)]
    out += [("some", r, True, a) for r in ROLES for a in atoms]
    out += [("min", n, r, True, a) for n in (1, 2) for r in ("hasChild", "hasSibling") for a in atoms]
    out += [("only", r, True, a) for r in ("hasChild", "married") for a in atoms]
    out += [("and", a, ("some", r, True, b)) for a in atoms for r in ("hasChild", "hasSon") for b in atoms]
    return out


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "family.tsv", "w") as f:
        for s, r, o in triples():
            f.write(f"{s}\t{r}\t{o}\n")
    with open(out / "subroles.tsv", "w") as f:
        f.write("hasSon\thasChild\nhasDaughter\thasChild\n")

    by_group = {g: [] for g in TARGET}
    seen = set()
    for e in candidates(rng):
        key = render(e, False)
        if key not in seen:
            seen.add(key)
            by_group[group(e)].append(e)
    chosen = []
    for g, n in TARGET.items():
        pool = by_group[g]
        if len(pool) < n:
            raise SystemExit(f"group {g}: only {len(pool)} candidates")
        rng.shuffle(pool)
        chosen += pool[:n]
    with open(out / "concepts.txt", "w") as f:
        f.write("# syntax<TAB>class expression\n")
        for i, e in enumerate(chosen):
            dl = i % 3 == 2
            f.write(("dl" if dl else "manchester") + "\t" + render(e, dl) + "\n")


if __name__ == "__main__":
    main()
