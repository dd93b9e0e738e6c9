#!/usr/bin/env python3
"""Writes the bundled synthetic restaurant domain (schema.json, examples.json).

Deterministic: the same script always produces byte-identical files.
"""
import argparse
import json
import os
import random

NAMES = ["the golden wok", "pizza hut", "la mimosa", "curry prince",
         "the gardenia", "bloomsbury", "saint johns chop house", "nandos"]
FOODS = ["chinese", "italian", "modern european", "indian", "thai", "british"]
AREAS = ["north", "south", "city centre", "east", "west"]
PRICES = ["cheap", "moderate", "expensive"]
PHONES = ["01223 350 420", "01223 323 737", "01223 412 299", "01223 566 188",
          "01223 244 149", "01223 307 581"]
KIDS = ["yes", "no", "dontcare"]

PHRASE = {
    "food": "serves SLOT_FOOD food",
    "area": "is in the SLOT_AREA area",
    "pricerange": "is in the SLOT_PRICERANGE price range",
    "phone": "has the phone number SLOT_PHONE",
}
KIDS_PHRASE = {"yes": "allows children", "no": "does not allow children",
               "dontcare": "may or may not allow children"}
CONFIRM = {
    "food": "do you want SLOT_FOOD food ?",
    "area": "you want a place in the SLOT_AREA area , right ?",
    "pricerange": "you are looking for a SLOT_PRICERANGE place , right ?",
}
REQUEST = {
    "food": "what kind of food would you like ?",
    "area": "which part of town do you prefer ?",
    "pricerange": "what price range are you looking for ?",
    "kidsallowed": "will you be bringing children ?",
}


def render(act, pairs):
    body = "; ".join(k if v is None else "%s='%s'" % (k, v) for k, v in pairs)
    return "%s(%s)" % (act, body)


def lexicalize(template, pairs):
    out = template
    for k, v in pairs:
        if v is not None:
            out = out.replace("SLOT_" + k.upper(), v, 1)
    return out


def inform(rng):
    pairs = [("name", rng.choice(NAMES))]
    optional = ["food", "area", "pricerange", "phone", "kidsallowed"]
    picked = sorted(rng.sample(optional, rng.randint(1, 3)), key=optional.index)
    clauses = []
    for slot in picked:
        if slot == "kidsallowed":
            v = rng.choice(KIDS)
            clauses.append(KIDS_PHRASE[v])
        else:
            v = rng.choice({"food": FOODS, "area": AREAS,
                            "pricerange": PRICES, "phone": PHONES}[slot])
            clauses.append(PHRASE[slot])
        pairs.append((slot, v))
    if len(clauses) == 1:
        text = "SLOT_NAME " + clauses[0] + " ."
    else:
        text = "SLOT_NAME " + " , ".join(clauses[:-1]) + " and " + clauses[-1] + " ."
    return "inform", pairs, text


def confirm(rng):
    slot = rng.choice(sorted(CONFIRM))
    v = rng.choice({"food": FOODS, "area": AREAS, "pricerange": PRICES}[slot])
    return "confirm", [(slot, v)], CONFIRM[slot]


def request(rng):
    slot = rng.choice(sorted(REQUEST))
    return "request", [(slot, None)], REQUEST[slot]


def build(seed, count):
    rng = random.Random(seed)
    seen = set()
    examples = []
    while len(examples) < count:
        r = rng.random()
        act, pairs, template = (inform if r < 0.7 else confirm if r < 0.85 else request)(rng)
        da = render(act, pairs)
        if da in seen:
            continue
        seen.add(da)
        examples.append([da, lexicalize(template, pairs), template])
    return examples


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "synthetic"))
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--count", type=int, default=60)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    schema = {
        "acts": ["inform", "confirm", "request"],
        "slots": [{"name": s, "delexicalize": True}
                  for s in ["name", "food", "area", "pricerange", "phone"]]
        + [{"name": "kidsallowed", "delexicalize": False}],
    }
    with open(os.path.join(args.out, "schema.json"), "w") as f:
        json.dump(schema, f, indent=2)
        f.write("\n")
    with open(os.path.join(args.out, "examples.json"), "w") as f:
        f.write("[\n")
        rows = [json.dumps(e) for e in build(args.seed, args.count)]
        f.write(",\n".join(rows))
        f.write("\n]\n")


if __name__ == "__main__":
    main()
