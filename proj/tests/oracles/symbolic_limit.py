"""Exact epsilon -> 0 hitting probabilities by symbolic solve.

Builds the tie-perturbed chain directly from the utility tables with a
symbolic epsilon, finds sink components by brute-force reachability,
solves the absorption system with sympy and takes the limit. Independent
of the C++ collapse algorithm; used to freeze expected values.
"""
import itertools
import sys

import sympy as sp


def profiles(counts):
    return list(itertools.product(*[range(s) for s in reversed(counts)]))


def encode(strats, counts):
    idx, stride = 0, 1
    for s, c in zip(strats, counts):
        idx += s * stride
        stride *= c
    return idx


def decode(idx, counts):
    out = []
    for c in counts:
        out.append(idx % c)
        idx //= c
    return out


def analyze(counts, utils):
    eps = sp.Symbol("eps", positive=True)
    n = 1
    for c in counts:
        n *= c
    reg = [dict() for _ in range(n)]
    tie = [set() for _ in range(n)]
    for u in range(n):
        su = decode(u, counts)
        for i, c in enumerate(counts):
            for a in range(c):
                if a == su[i]:
                    continue
                sv = list(su)
                sv[i] = a
                v = encode(sv, counts)
                d = sp.Rational(utils[i][v]) - sp.Rational(utils[i][u])
                if d > 0:
                    reg[u][v] = reg[u].get(v, 0) + d
                elif d == 0:
                    tie[u].add(v)
    # reachability over all edges
    adj = [set(reg[u]) | tie[u] for u in range(n)]
    reach = []
    for u in range(n):
        seen, stack = {u}, [u]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        reach.append(seen)
    sinks = []
    for u in range(n):
        if all(u in reach[v] for v in reach[u]):
            comp = sorted(reach[u])
            if comp not in sinks:
                sinks.append(comp)
    sinks.sort()
    sink_of = {v: k for k, s in enumerate(sinks) for v in s}
    transient = [u for u in range(n) if u not in sink_of]
    tindex = {u: k for k, u in enumerate(transient)}
    m = len(transient)
    A = sp.zeros(m, m)
    B = sp.zeros(m, len(sinks))
    for u in transient:
        z = sum(reg[u].values())
        row = {}
        for v, d in reg[u].items():
            row[v] = row.get(v, 0) + d / z * (1 - len(tie[u]) * eps)
        for v in tie[u]:
            row[v] = row.get(v, 0) + eps
        if z == 0:
            # implicit self-loop carries the mass the tie edges leave behind
            row[u] = 1 - len(tie[u]) * eps
        k = tindex[u]
        A[k, k] += 1
        for v, p in row.items():
            if v == u:
                A[k, k] -= p
            elif v in sink_of:
                B[k, sink_of[v]] += p
            else:
                A[k, tindex[v]] -= p
    H = A.LUsolve(B) if m else sp.zeros(0, len(sinks))
    result = {}
    for u in range(n):
        if u in sink_of:
            result[u] = [sp.Integer(1 if sink_of[u] == k else 0) for k in range(len(sinks))]
        else:
            result[u] = [sp.limit(sp.simplify(H[tindex[u], k]), eps, 0) for k in range(len(sinks))]
    return sinks, result


CYCLE_GAME = ([3, 3], [[2, 1, 0, 1, 2, 0, 0, 0, 1], [1, 2, 0, 2, 1, 0, 0, 0, 1]])
TIE_GAME = ([3, 3], [[4, 0, 2, 1, 3, 1, 0, 1, 2], [4, 0, 2, 1, 3, 1, 0, 1, 2]])

def check_cli(binary, games_dir):
    """Compares `sinklimit hit` against the exact limits; returns failures."""
    import json
    import os
    import subprocess

    failures = 0
    for file, (counts, utils) in [("cycle_3x3.json", CYCLE_GAME), ("tie_order1_3x3.json", TIE_GAME)]:
        sinks, res = analyze(counts, utils)
        out = subprocess.run([binary, "hit", os.path.join(games_dir, file)], capture_output=True, text=True, check=True)
        got = json.loads(out.stdout)
        if [s["profiles"] for s in got["sinks"]] != [sorted(s) for s in sinks]:
            print(file, "sink mismatch", got["sinks"], sinks)
            failures += 1
            continue
        labels = [s["label"] for s in got["sinks"]]
        for u, row in res.items():
            key = "(" + ",".join(str(x + 1) for x in decode(u, counts)) + ")"
            for k, exact in enumerate(row):
                value = got["rows"][key][labels[k]]
                if abs(value - float(exact)) > 1e-12:
                    print(file, key, labels[k], "got", value, "exact", exact)
                    failures += 1
        print(file, "checked", len(res), "rows")
    return failures


if __name__ == "__main__":
    import sys

    if len(sys.argv) == 4 and sys.argv[1] == "--check":
        sys.exit(1 if check_cli(sys.argv[2], sys.argv[3]) else 0)
    for name, (counts, utils) in [("cycle game", CYCLE_GAME), ("tie game", TIE_GAME)]:
        sinks, res = analyze(counts, utils)
        print(name, "sinks", sinks)
        for u, row in res.items():
            print(" ", u, tuple(x + 1 for x in decode(u, counts)), [str(v) for v in row])
