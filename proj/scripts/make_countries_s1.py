#!/usr/bin/env python3
"""Build a Countries-S1 style split from the world-countries dataset.

Usage: make_countries_s1.py countries.json OUT_DIR [--seed N]

Graph: locatedin(country, subregion), locatedin(subregion, region),
locatedin(country, region), neighbor(a, b) in both directions.
Test/valid: 24 countries each, drawn from countries with at least one
neighbor. Their locatedin(country, region) triples are withheld from
train and form the test/valid splits; their subregion edges stay in train.

numeric_literals.txt holds per-country numeric facts (area, coordinates,
border and language counts) for the numeric-literal experiments.
"""
import argparse
import json
import random
import re
from pathlib import Path


def slug(text: str) -> str:
    text = text.lower().replace("&", "and")
    text = re.sub(r"[^a-z0-9]+", "_", text)
    return text.strip("_")


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("countries_json")
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--held-out", type=int, default=24)
    args = ap.parse_args()

    records = json.loads(Path(args.countries_json).read_text())
    records = [r for r in records if r["region"] and r["subregion"] and r["region"] != "Antarctic"]
    name_of = {r["cca3"]: slug(r["name"]["common"]) for r in records}

    located, neighbors = [], set()
    subregion_region = {}
    for r in records:
        c, sub, reg = name_of[r["cca3"]], slug(r["subregion"]), slug(r["region"])
        located.append((c, "locatedin", sub))
        located.append((c, "locatedin", reg))
        subregion_region[sub] = reg
        for b in r.get("borders", []):
            if b in name_of:
                neighbors.add((c, "neighbor", name_of[b]))
                neighbors.add((name_of[b], "neighbor", c))

    with_neighbors = sorted({s for s, _, _ in neighbors})
    rng = random.Random(args.seed)
    chosen = rng.sample(with_neighbors, 2 * args.held_out)
    test_c, valid_c = set(chosen[: args.held_out]), set(chosen[args.held_out:])
    region_of = {name_of[r["cca3"]]: slug(r["region"]) for r in records}

    test = sorted((c, "locatedin", region_of[c]) for c in test_c)
    valid = sorted((c, "locatedin", region_of[c]) for c in valid_c)
    held = set(test) | set(valid)

    train = [t for t in located if t not in held]
    train += [(s, "locatedin", reg) for s, reg in sorted(subregion_region.items())]
    train += sorted(neighbors)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, rows in (("train", train), ("valid", valid), ("test", test)):
        (out / f"{name}.txt").write_text("".join("\t".join(t) + "\n" for t in rows))
    numeric = []
    for r in records:
        c = name_of[r["cca3"]]
        lat, lng = r["latlng"]
        numeric.append((c, "area_km2", r["area"]))
        numeric.append((c, "latitude_degree", lat))
        numeric.append((c, "longitude_degree", lng))
        numeric.append((c, "land_border_count", sum(1 for b in r.get("borders", []) if b in name_of)))
        numeric.append((c, "official_language_count", len(r.get("languages", {}))))
    numeric.sort(key=lambda t: (t[0], t[1]))
    (out / "numeric_literals.txt").write_text("".join(f"{s}\t{p}\t{v:g}\n" if isinstance(v, float) else f"{s}\t{p}\t{v}\n" for s, p, v in numeric))
    ents = {x for t in train + valid + test for x in (t[0], t[2])}
    print(f"entities={len(ents)} train={len(train)} valid={len(valid)} test={len(test)}")


if __name__ == "__main__":
    main()
