#!/usr/bin/env python3
"""Writes the bundled fixtures: a Kenya-style attribute network with its
matching networks and plan, the marital status table on its own, and a
deliberately inconsistent spouses setup.

Run from this directory: python3 generate.py
"""

import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))

AGES = list(range(85))
SLICES = ["0-14", "15-19", "20-24", "25-29", "30-34", "35-39", "40-44", "45-49", "50-54", "55+"]
GENDERS = ["male", "female"]
LOCATIONS = ["village1", "village2"] + ["R%d" % i for i in range(1, 13)]
ACTIVITIES = ["none", "water", "market", "farm"]

# p(married | gender, slice); 55+ repeats 50-54.
MARRIED = {
    "male": [0.0, 0.019, 0.184, 0.619, 0.793, 0.893, 0.886, 0.943, 0.938],
    "female": [0.0, 0.494, 0.689, 0.739, 0.759, 0.732, 0.721, 0.721, 0.721],
}
for g in GENDERS:
    MARRIED[g].append(MARRIED[g][-1])


def slice_of(age):
    if age < 15:
        return 0
    return min(1 + (age - 15) // 5, len(SLICES) - 1)


def fmt(p):
    if p == 0:
        return "0"
    if p == 1:
        return "1"
    return repr(float(p))


def normalize(ws):
    total = sum(ws)
    out = [w / total for w in ws]
    # Push the rounding residue onto the largest entry.
    k = max(range(len(out)), key=lambda i: out[i])
    out[k] += 1.0 - sum(out)
    return out


def variable(name, domain):
    return "variable %s { %s }\n" % (name, ", ".join(str(d) for d in domain))


def cpt(child, parents, rows):
    """rows: list of (parent labels, probabilities) or a single probability list."""
    if not parents:
        return "\ncpt %s { %s }\n" % (child, ", ".join(fmt(p) for p in rows))
    out = ["\ncpt %s | %s {\n" % (child, ", ".join(parents))]
    for labels, probs in rows:
        out.append("  %s: %s\n" % (", ".join(str(l) for l in labels), ", ".join(fmt(p) for p in probs)))
    out.append("}\n")
    return "".join(out)


def product(*domains):
    if not domains:
        yield ()
        return
    for head in domains[0]:
        for rest in product(*domains[1:]):
            yield (head,) + rest


def poisson_row(mean, top):
    ws = [math.exp(-mean) * mean ** k / math.factorial(k) for k in range(top + 1)]
    return normalize(ws)


def write(path, text):
    full = os.path.join(HERE, path)
    os.makedirs(os.path.dirname(full), exist_ok=True)
    with open(full, "w") as f:
        f.write(text)


# Attribute network ---------------------------------------------------------

PYRAMID = normalize([math.exp(-a / 22.0) for a in AGES])
P_SLICE = [sum(PYRAMID[a] for a in AGES if slice_of(a) == s) for s in range(len(SLICES))]

ACTIVITY = {
    "male": [0.2, 0.05, 0.25, 0.5],
    "female": [0.2, 0.35, 0.25, 0.2],
}
ACTIVITY_CHILD = [0.9, 0.0, 0.0, 0.1]
ACTIVITY_OLD = [0.6, 0.05, 0.15, 0.2]


def activity_row(g, s):
    if s == 0:
        return ACTIVITY_CHILD
    if s == len(SLICES) - 1:
        return ACTIVITY_OLD
    return ACTIVITY[g]


# Spouses: every married woman accepts one husband; married men take a
# second wife with the probability that balances both sides.
married_women = sum(0.5 * P_SLICE[s] * MARRIED["female"][s] for s in range(len(SLICES)))
married_men = sum(0.5 * P_SLICE[s] * MARRIED["male"][s] for s in range(len(SLICES)))
SECOND_WIFE = married_women / married_men - 1.0
assert 0.0 <= SECOND_WIFE < 1.0, SECOND_WIFE

# Mothers: a child has a mother in the population with a probability that
# falls with age; mothers' expected child counts are scaled to match.
HAS_MOTHER = [1.0, 0.95, 0.9, 0.8, 0.7, 0.55, 0.4, 0.25, 0.1, 0.0]
FERTILITY = [0.0, 0.8, 1.8, 3.0, 4.0, 4.8, 5.2, 5.5, 5.5, 5.0]
MAX_CHILDREN = 10
children_needed = sum(P_SLICE[s] * HAS_MOTHER[s] for s in range(len(SLICES)))


def fertility(s, married):
    return FERTILITY[s] * (1.0 if married else 0.3)


raw_supply = sum(
    0.5 * P_SLICE[s] * (MARRIED["female"][s] * fertility(s, True) + (1 - MARRIED["female"][s]) * fertility(s, False))
    for s in range(len(SLICES))
)
SCALE = children_needed / raw_supply

FRIENDS_CHILD = [0.2, 0.3, 0.3, 0.2, 0.0, 0.0]
FRIENDS_ADULT = [0.0, 0.2, 0.3, 0.25, 0.15, 0.1]
COLLEAGUES = [0.0, 0.3, 0.4, 0.3]


def attributes_bn():
    out = [
        variable("ageDetail", AGES),
        variable("ageSlices", SLICES),
        variable("gender", GENDERS),
        variable("location", LOCATIONS),
        variable("maritalStatus", ["no", "yes"]),
        variable("activity", ACTIVITIES),
        variable("RC_spouses", [0, 1, 2]),
        variable("RC_motherOf", list(range(MAX_CHILDREN + 1))),
        variable("RC_in_motherOf", [0, 1]),
        variable("RC_friendship", list(range(6))),
        variable("RC_colleagues", list(range(4))),
    ]
    out.append(cpt("ageDetail", [], PYRAMID))
    out.append(cpt("ageSlices", ["ageDetail"], [((a,), [1.0 if slice_of(a) == s else 0.0 for s in range(len(SLICES))]) for a in AGES]))
    out.append(cpt("gender", [], [0.5, 0.5]))
    loc = normalize([0.15, 0.15] + [0.7 / 12] * 12)
    out.append(cpt("location", [], loc))
    out.append(cpt("maritalStatus", ["gender", "ageSlices"], [
        ((g, SLICES[s]), [1 - MARRIED[g][s], MARRIED[g][s]]) for g in GENDERS for s in range(len(SLICES))
    ]))
    out.append(cpt("activity", ["gender", "ageSlices"], [
        ((g, SLICES[s]), activity_row(g, s)) for g in GENDERS for s in range(len(SLICES))
    ]))
    spouses_rows = []
    for g in GENDERS:
        for m in ["no", "yes"]:
            if m == "no":
                row = [1.0, 0.0, 0.0]
            elif g == "female":
                row = [0.0, 1.0, 0.0]
            else:
                row = [0.0, 1.0 - SECOND_WIFE, SECOND_WIFE]
            spouses_rows.append(((g, m), row))
    out.append(cpt("RC_spouses", ["gender", "maritalStatus"], spouses_rows))
    mother_rows = []
    for g in GENDERS:
        for s in range(len(SLICES)):
            for m in ["no", "yes"]:
                if g == "male" or FERTILITY[s] == 0.0:
                    row = [1.0] + [0.0] * MAX_CHILDREN
                else:
                    row = poisson_row(SCALE * fertility(s, m == "yes"), MAX_CHILDREN)
                mother_rows.append(((g, SLICES[s], m), row))
    out.append(cpt("RC_motherOf", ["gender", "ageSlices", "maritalStatus"], mother_rows))
    out.append(cpt("RC_in_motherOf", ["ageSlices"], [((SLICES[s],), [1 - HAS_MOTHER[s], HAS_MOTHER[s]]) for s in range(len(SLICES))]))
    out.append(cpt("RC_friendship", ["ageSlices"], [
        ((SLICES[s],), FRIENDS_CHILD if s == 0 else FRIENDS_ADULT) for s in range(len(SLICES))
    ]))
    out.append(cpt("RC_colleagues", ["activity"], [
        ((a,), [1.0, 0.0, 0.0, 0.0] if a == "none" else COLLEAGUES) for a in ACTIVITIES
    ]))
    return "# Kenya-style attribute network\n" + "".join(out)


# Matching networks ---------------------------------------------------------


def uniform(n):
    return normalize([1.0] * n)


def same(name, a, b, domain):
    return cpt(name, [a, b], [((x, y), [1.0, 0.0] if x == y else [0.0, 1.0]) for x, y in product(domain, domain)])


def all_yes(name, parents, domains, yes_labels):
    rows = []
    for labels in product(*domains):
        ok = all(l == y for l, y in zip(labels, yes_labels))
        rows.append((labels, [1.0, 0.0] if ok else [0.0, 1.0]))
    return cpt(name, parents, rows)


def gap_weights(lo, hi, peak):
    """Triangular weights over gaps lo..hi peaking at peak."""
    out = {}
    for d in range(lo, hi + 1):
        if d <= peak:
            out[d] = 1.0 + (d - lo)
        else:
            out[d] = 1.0 + (hi - d) * (peak - lo) / max(hi - peak, 1)
    return out


def spouses_bn():
    gaps = gap_weights(-3, 25, 8)
    out = [
        "matching spouses link=link a1=a1_ a2=a2_ counts=both\n",
        "# a1 is the husband, a2 the wife\n",
        variable("a1_gender", GENDERS),
        variable("a2_gender", GENDERS),
        variable("a1_maritalStatus", ["no", "yes"]),
        variable("a2_maritalStatus", ["no", "yes"]),
        variable("a1_ageDetail", AGES),
        variable("a2_ageDetail", AGES),
        variable("a1_location", LOCATIONS),
        variable("a2_location", LOCATIONS),
        variable("ageWife", AGES),
        variable("rightAge", ["yes", "no"]),
        variable("sameLocation", ["yes", "no"]),
        variable("link", ["yes", "no"]),
    ]
    for v, d in [("gender", GENDERS), ("maritalStatus", ["no", "yes"]), ("ageDetail", AGES), ("location", LOCATIONS)]:
        out.append(cpt("a1_" + v, [], uniform(len(d))))
        out.append(cpt("a2_" + v, [], uniform(len(d))))
    rows = []
    for h in AGES:
        ws = [gaps.get(h - w, 0.0) if w >= 15 else 0.0 for w in AGES]
        if sum(ws) == 0.0:
            ws = [1.0 if w == 15 else 0.0 for w in AGES]
        rows.append(((h,), normalize(ws)))
    out.append(cpt("ageWife", ["a1_ageDetail"], rows))
    out.append(same("rightAge", "ageWife", "a2_ageDetail", AGES))
    out.append(same("sameLocation", "a1_location", "a2_location", LOCATIONS))
    out.append(all_yes(
        "link",
        ["a1_gender", "a2_gender", "a1_maritalStatus", "a2_maritalStatus", "rightAge", "sameLocation"],
        [GENDERS, GENDERS, ["no", "yes"], ["no", "yes"], ["yes", "no"], ["yes", "no"]],
        ["male", "female", "yes", "yes", "yes", "yes"],
    ))
    return "".join(out)


def mother_bn():
    gaps = gap_weights(15, 45, 25)
    child_ages = [str(a) for a in AGES] + ["none"]
    out = [
        "matching motherOf link=link a1=a1_ a2=a2_ counts=both\n",
        "# a1 is the mother, a2 the child\n",
        variable("a1_gender", GENDERS),
        variable("a1_ageDetail", AGES),
        variable("a2_ageDetail", AGES),
        variable("a2_ageSlices", SLICES),
        variable("a1_location", LOCATIONS),
        variable("a2_location", LOCATIONS),
        variable("childAge", child_ages),
        variable("rightAge", ["yes", "no"]),
        variable("sameLocation", ["yes", "no"]),
        variable("locationOk", ["yes", "no"]),
        variable("link", ["yes", "no"]),
    ]
    out.append(cpt("a1_gender", [], uniform(2)))
    out.append(cpt("a1_ageDetail", [], uniform(len(AGES))))
    out.append(cpt("a2_ageDetail", [], uniform(len(AGES))))
    out.append(cpt("a2_ageSlices", ["a2_ageDetail"], [((a,), [1.0 if slice_of(a) == s else 0.0 for s in range(len(SLICES))]) for a in AGES]))
    out.append(cpt("a1_location", [], uniform(len(LOCATIONS))))
    out.append(cpt("a2_location", [], uniform(len(LOCATIONS))))
    rows = []
    for m in AGES:
        ws = [gaps.get(m - c, 0.0) for c in AGES] + [0.0]
        if sum(ws) == 0.0:
            ws = [0.0] * len(AGES) + [1.0]
        rows.append(((m,), normalize(ws)))
    out.append(cpt("childAge", ["a1_ageDetail"], rows))
    out.append(cpt("rightAge", ["childAge", "a2_ageDetail"], [
        ((c, a), [1.0, 0.0] if c == str(a) else [0.0, 1.0]) for c, a in product(child_ages, AGES)
    ]))
    out.append(same("sameLocation", "a1_location", "a2_location", LOCATIONS))
    out.append(cpt("locationOk", ["sameLocation", "a2_ageSlices"], [
        ((l, s), [1.0, 0.0] if l == "yes" or s != "0-14" else [0.0, 1.0]) for l, s in product(["yes", "no"], SLICES)
    ]))
    out.append(all_yes("link", ["a1_gender", "rightAge", "locationOk"],
                       [GENDERS, ["yes", "no"], ["yes", "no"]], ["female", "yes", "yes"]))
    return "".join(out)


def soft(name, a, b, domain, closeness):
    rows = []
    for x, y in product(domain, domain):
        p = closeness(domain.index(x), domain.index(y))
        rows.append(((x, y), [p, 1.0 - p]))
    return cpt(name, [a, b], rows)


def friendship_bn():
    out = [
        "matching friendship link=link a1=a1_ a2=a2_ counts=both\n",
        variable("a1_ageSlices", SLICES),
        variable("a2_ageSlices", SLICES),
        variable("a1_gender", GENDERS),
        variable("a2_gender", GENDERS),
        variable("a1_location", LOCATIONS),
        variable("a2_location", LOCATIONS),
        variable("ageClose", ["yes", "no"]),
        variable("genderClose", ["yes", "no"]),
        variable("locationClose", ["yes", "no"]),
        variable("link", ["yes", "no"]),
    ]
    for v, d in [("ageSlices", SLICES), ("gender", GENDERS), ("location", LOCATIONS)]:
        out.append(cpt("a1_" + v, [], uniform(len(d))))
        out.append(cpt("a2_" + v, [], uniform(len(d))))
    out.append(soft("ageClose", "a1_ageSlices", "a2_ageSlices", SLICES,
                    lambda i, j: 1.0 if i == j else (0.3 if abs(i - j) == 1 else 0.02)))
    out.append(soft("genderClose", "a1_gender", "a2_gender", GENDERS, lambda i, j: 1.0 if i == j else 0.3))
    out.append(soft("locationClose", "a1_location", "a2_location", LOCATIONS, lambda i, j: 1.0 if i == j else 0.1))
    out.append(all_yes("link", ["ageClose", "genderClose", "locationClose"],
                       [["yes", "no"]] * 3, ["yes", "yes", "yes"]))
    return "".join(out)


def colleagues_bn():
    out = [
        "matching colleagues link=link a1=a1_ a2=a2_ counts=both\n",
        variable("a1_activity", ACTIVITIES),
        variable("a2_activity", ACTIVITIES),
        variable("a1_location", LOCATIONS),
        variable("a2_location", LOCATIONS),
        variable("sameLocation", ["yes", "no"]),
        variable("link", ["yes", "no"]),
    ]
    for v, d in [("activity", ACTIVITIES), ("location", LOCATIONS)]:
        out.append(cpt("a1_" + v, [], uniform(len(d))))
        out.append(cpt("a2_" + v, [], uniform(len(d))))
    out.append(same("sameLocation", "a1_location", "a2_location", LOCATIONS))
    out.append(cpt("link", ["a1_activity", "a2_activity", "sameLocation"], [
        ((x, y, l), [1.0, 0.0] if x == y and x != "none" and l == "yes" else [0.0, 1.0])
        for x, y, l in product(ACTIVITIES, ACTIVITIES, ["yes", "no"])
    ]))
    return "".join(out)


KENYA_PLAN = """# Kenya-style family, friendship and work network
population N=10000 seed=20240601 attributes=attributes.bn

linktype spouses undirected
linktype motherOf directed
linktype fatherOf directed
linktype siblings undirected
linktype friendship undirected
linktype colleagues undirected

rule homophily spouses bn=spouses.bn counts=both
rule homophily motherOf bn=motherOf.bn counts=both
rule transitive fatherOf from spouses motherOf p=1 pattern=any,source
rule transitive siblings from motherOf motherOf p=1 pattern=source,source
rule homophily friendship bn=friendship.bn counts=both
rule homophily colleagues bn=colleagues.bn counts=both

interact spouses p=0.9
interact motherOf p=0.6
interact fatherOf p=0.4
interact siblings p=0.5
interact friendship p=0.3
interact colleagues p=0.2

output out
"""


def marital_status_bn():
    slices = SLICES[:-1]
    out = [
        "# marital status by gender and age slice\n",
        variable("gender", GENDERS),
        variable("ageSlices", slices),
        variable("maritalStatus", ["no", "yes"]),
        cpt("gender", [], [0.5, 0.5]),
        cpt("ageSlices", [], uniform(len(slices))),
    ]
    # Rows exactly as tabulated.
    rows = []
    for g in GENDERS:
        for s, label in enumerate(slices):
            yes = MARRIED[g][s]
            rows.append(((g, label), [round(1 - yes, 3), yes]))
    out.append(cpt("maritalStatus", ["gender", "ageSlices"], rows))
    return "".join(out)


INCONSISTENT_ATTRS = "".join([
    "# every man expects two wives, every woman one husband\n",
    variable("gender", GENDERS),
    variable("RC_spouses", [0, 1, 2]),
    cpt("gender", [], [0.5, 0.5]),
    cpt("RC_spouses", ["gender"], [(("male",), [0.0, 0.0, 1.0]), (("female",), [0.0, 1.0, 0.0])]),
])

INCONSISTENT_SPOUSES = "".join([
    "matching spouses link=link a1=a1_ a2=a2_ counts=both\n",
    variable("a1_gender", GENDERS),
    variable("a2_gender", GENDERS),
    variable("link", ["yes", "no"]),
    cpt("a1_gender", [], [0.5, 0.5]),
    cpt("a2_gender", [], [0.5, 0.5]),
    all_yes("link", ["a1_gender", "a2_gender"], [GENDERS, GENDERS], ["male", "female"]),
])

INCONSISTENT_PLAN = """population N=1000 seed=3 attributes=attributes.bn
linktype spouses undirected
rule homophily spouses bn=spouses.bn counts=both
output out
"""


def main():
    write("kenya/attributes.bn", attributes_bn())
    write("kenya/spouses.bn", spouses_bn())
    write("kenya/motherOf.bn", mother_bn())
    write("kenya/friendship.bn", friendship_bn())
    write("kenya/colleagues.bn", colleagues_bn())
    write("kenya/kenya.plan", KENYA_PLAN)
    write("marital_status.bn", marital_status_bn())
    write("inconsistent/attributes.bn", INCONSISTENT_ATTRS)
    write("inconsistent/spouses.bn", INCONSISTENT_SPOUSES)
    write("inconsistent/inconsistent.plan", INCONSISTENT_PLAN)


if __name__ == "__main__":
    main()
