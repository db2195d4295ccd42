#!/usr/bin/env python3
"""Recomputes the frozen oracle values in derived_values.hpp.

Run from the repo root:  python3 tests/oracles/derive_values.py > tests/oracles/derived_values.hpp
Nothing here imports the C++ code; every value is worked out from first principles.
"""
import math
from collections import Counter


def entropy(counts):
    total = sum(counts)
    return -sum((c / total) * math.log(c / total) for c in counts if c)


def rank_pairs(scores):
    # selection: highest score, lowest index on ties
    order_top = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    # worst: lowest score, highest index on ties
    order_bot = sorted(range(len(scores)), key=lambda i: (scores[i], -i))
    pairs = []
    for k in range(2):
        c, r = order_top[k], order_bot[k]
        if c != r and scores[c] > scores[r]:
            pairs.append((c, r))
    return order_top[0], pairs


def round_robin_counts(n, styles=8):
    c = Counter(i % styles for i in range(n))
    return sorted(c.values(), reverse=True)


def fold_cursor(keys, actions, needs_terminal):
    pos = -1
    ok = True
    for a in actions:
        i = keys.index(a) if a in keys else None
        if i is None or i not in (pos, pos + 1) or (pos == -1 and i != 0):
            ok = False
            continue
        pos = i
    if needs_terminal and pos != len(keys) - 1:
        ok = False
    return ok, pos


def main():
    out = []
    emit = out.append
    emit("#pragma once")
    emit("// Generated by derive_values.py. Frozen; regenerate only when an input changes.")
    emit("")
    emit("#include <array>")
    emit("#include <cstddef>")
    emit("#include <utility>")
    emit("")
    emit("namespace oracle {")
    emit("")
    for k in (2, 4, 8, 16):
        emit(f"inline constexpr double kUniformEntropy{k} = {entropy([1] * k)!r};")
    emit(f"inline constexpr double kEntropy211 = {entropy([2, 1, 1])!r};")
    emit("")

    sel, pairs = rank_pairs([4.7, 4.3, 3.0, 2.1])
    emit(f"inline constexpr std::size_t kExampleSelected = {sel};")
    emit("inline constexpr std::array<std::pair<std::size_t, std::size_t>, %d> kExamplePairs = {{%s}};"
         % (len(pairs), ", ".join(f"{{{c}, {r}}}" for c, r in pairs)))
    emit("")

    rr = round_robin_counts(10)
    emit("// style counts for 10 profiles, largest first")
    emit("inline constexpr std::array<int, 8> kRoundRobin10 = {%s};" % ", ".join(map(str, rr)))
    emit("")

    keys = ["k1", "k2", "k3", "k4", "end session"]
    ok, pos = fold_cursor(keys, ["k1", "k2", "k3"], needs_terminal=True)
    emit("// [k1,k2,k3] over k1..k4 + end session, intervention")
    emit(f"inline constexpr bool kIncompleteFoldOk = {'true' if ok else 'false'};")
    emit(f"inline constexpr std::size_t kIncompleteFoldPosition = {pos};")
    emit("")

    # corpus stats: 3 sessions, 2 retained, each 17 diagnostic + 19 intervention utterances
    per_session = 17 + 19
    counselor = 9 + 10
    emit(f"inline constexpr double kStatsRate = {round(2 / 3, 4)!r};")
    emit(f"inline constexpr double kStatsAvgTurns = {(2 * per_session) / 2!r};")
    emit(f"inline constexpr double kStatsAvgPairs = {(2 * counselor) / 2!r};")
    emit("")

    emit(f"inline constexpr double kHinderingExample = {sum([1, 2, 2, 1]) / 4!r};")
    emit(f"inline constexpr double kAgreement4of5 = {4 / 5!r};")
    emit("")
    emit("}  // namespace oracle")
    print("\n".join(out))


if __name__ == "__main__":
    main()
