"""Brute-force reference implementations used as test oracles.

Plain Python loops over dicts and lists, sharing no code with the package,
so agreement with the pipeline is meaningful.
"""

import math


def pareto_groups(mass, head, tail):
    """Cumulative-sum segmentation: shortest head prefix, shortest tail suffix of the rest."""
    keys = sorted(mass, key=lambda k: (-mass[k], k))
    total = sum(mass.values())
    acc = 0
    h = len(keys)
    for idx, k in enumerate(keys):
        acc += mass[k]
        if acc >= head * total - 1e-9:
            h = idx + 1
            break
    acc = 0
    t = h
    for idx in range(len(keys) - 1, h - 1, -1):
        acc += mass[keys[idx]]
        if acc >= tail * total - 1e-9:
            t = idx
            break
    return keys[:h], keys[h:t], keys[t:]


def item_categories(ratings, head=0.2, tail=0.2):
    counts = {}
    for _, i, _ in ratings:
        counts[i] = counts.get(i, 0) + 1
    h, m, t = pareto_groups(counts, head, tail)
    cat = {}
    for group, label in ((h, "H"), (m, "M"), (t, "T")):
        for i in group:
            cat[i] = label
    return cat


def profiles(ratings):
    out = {}
    for u, i, r in ratings:
        out.setdefault(u, {})[i] = r
    return out


def user_groups(ratings, cat, n_groups=3):
    prof = profiles(ratings)
    score = {u: sum(1 for i in p if cat[i] == "H") / len(p) for u, p in prof.items()}
    ranked = sorted(score, key=lambda u: (-score[u], u))
    base, extra = divmod(len(ranked), n_groups)
    groups, start = [], 0
    for g in range(n_groups):
        size = base + (1 if g < extra else 0)
        groups.append(ranked[start:start + size])
        start += size
    return groups


def p_dist(profile, cat):
    den = sum(profile.values())
    return [sum(r for i, r in profile.items() if cat[i] == c) / den for c in "HMT"]


def q_dist(items, cat):
    return [sum(1 for i in items if cat[i] == c) / len(items) for c in "HMT"]


def jsd(p, q):
    m = [(a + b) / 2 for a, b in zip(p, q)]

    def kl(x):
        return sum(a * math.log2(a / b) for a, b in zip(x, m) if a > 0)

    return 0.5 * kl(p) + 0.5 * kl(q)


def upd(ratings, recs, head=0.2, tail=0.2, n_groups=3):
    cat = item_categories(ratings, head, tail)
    prof = profiles(ratings)
    groups = user_groups(ratings, cat, n_groups)
    per_group = [sum(jsd(p_dist(prof[u], cat), q_dist(recs[u], cat)) for u in g) / len(g) for g in groups]
    return sum(per_group) / len(per_group)


def spd(ratings, recs, supplier_of, n):
    mass = {}
    for _, i, _ in ratings:
        s = supplier_of[i]
        mass[s] = mass.get(s, 0) + 1
    groups = pareto_groups(mass, 0.2, 0.2)
    group_of = {s: k for k, g in enumerate(groups) for s in g}
    q = [0.0, 0.0, 0.0]
    for u in recs:
        for i in recs[u]:
            q[group_of[supplier_of[i]]] += 1
    q = [x / (n * len(recs)) for x in q]
    p = [0.0, 0.0, 0.0]
    for _, i, _ in ratings:
        p[group_of[supplier_of[i]]] += 1
    p = [x / len(ratings) for x in p]
    return sum(abs(a - b) for a, b in zip(q, p)) / 3


def minimal_cut_violations(mass, head_keys, mid_keys, tail_keys, head, tail):
    """List of ways a (head, mid, tail) partition breaks the minimal prefix/suffix rule."""
    problems = []
    keys = sorted(mass, key=lambda k: (-mass[k], k))
    parts = list(head_keys) + list(mid_keys) + list(tail_keys)
    if parts != keys:
        problems.append("partition is not the ordered key list split in three")
    if len(set(parts)) != len(parts) or set(parts) != set(mass):
        problems.append("partition not disjoint and total")
    total = sum(mass.values())

    def share(ks):
        return sum(mass[k] for k in ks) / total

    if share(head_keys) < head - 1e-12:
        problems.append("head below target")
    if head_keys and share(head_keys[:-1]) >= head:
        problems.append("head not minimal")
    if tail_keys and share(tail_keys) < tail - 1e-12 and mid_keys:
        problems.append("tail below target while mid non-empty")
    if len(tail_keys) > 1 and share(tail_keys[1:]) >= tail:
        problems.append("tail not minimal")
    return problems
