#!/usr/bin/env python3
"""Regenerate the bundled tabular datasets under data/uci.

tic-tac-toe, monk2 and balance are enumerated from their defining rules;
wine is copied from the scikit-learn bundle when it is installed.
"""
import csv
import itertools
import os
import sys

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data", "uci")

LINES = [(0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6)]
CELLS = ["top_left", "top_middle", "top_right", "middle_left", "middle_middle",
         "middle_right", "bottom_left", "bottom_middle", "bottom_right"]


def wins(board, p):
    return any(all(board[i] == p for i in line) for line in LINES)


def tic_tac_toe():
    finals = set()

    def play(board, player):
        if wins(board, "x") or wins(board, "o") or "b" not in board:
            finals.add(tuple(board))
            return
        for i in range(9):
            if board[i] == "b":
                board[i] = player
                play(board, "o" if player == "x" else "x")
                board[i] = "b"

    play(["b"] * 9, "x")
    rows = sorted(finals)
    with open(os.path.join(OUT, "tic-tac-toe.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CELLS + ["class"])
        for b in rows:
            w.writerow(list(b) + ["positive" if wins(b, "x") else "negative"])
    with open(os.path.join(OUT, "tic-tac-toe.schema"), "w") as f:
        for c in CELLS:
            f.write(f"{c} categorical x o b\n")
        f.write("class target positive negative\n")
    return len(rows), sum(wins(b, "x") for b in rows)


def monk2():
    sizes = [3, 3, 2, 3, 4, 2]
    names = [f"a{i}" for i in range(1, 7)]
    with open(os.path.join(OUT, "monk2.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(names + ["class"])
        for vals in itertools.product(*[range(1, s + 1) for s in sizes]):
            w.writerow(list(vals) + [1 if sum(v == 1 for v in vals) == 2 else 0])
    with open(os.path.join(OUT, "monk2.schema"), "w") as f:
        for n, s in zip(names, sizes):
            f.write(f"{n} categorical {' '.join(str(v) for v in range(1, s + 1))}\n")
        f.write("class target 1 0\n")


def balance():
    names = ["left_weight", "left_distance", "right_weight", "right_distance"]
    with open(os.path.join(OUT, "balance.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["class"] + names)
        for lw, ld, rw, rd in itertools.product(range(1, 6), repeat=4):
            l, r = lw * ld, rw * rd
            w.writerow(["L" if l > r else "R" if r > l else "B", lw, ld, rw, rd])
    with open(os.path.join(OUT, "balance_con.schema"), "w") as f:
        f.write("class class L B R\n")
        for n in names:
            f.write(f"{n} continuous\n")
    with open(os.path.join(OUT, "balance_cat.schema"), "w") as f:
        f.write("class class L B R\n")
        for n in names:
            f.write(f"{n} categorical 1 2 3 4 5\n")


def wine():
    try:
        from sklearn.datasets import load_wine
    except ImportError:
        print("scikit-learn not available, wine skipped", file=sys.stderr)
        return
    d = load_wine()
    names = [n.replace("/", "_") for n in d.feature_names]
    with open(os.path.join(OUT, "wine.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(names + ["class"])
        for x, y in zip(d.data, d.target):
            w.writerow([repr(float(v)) for v in x] + [f"c{y}"])
    with open(os.path.join(OUT, "wine.schema"), "w") as f:
        for n in names:
            f.write(f"{n} continuous\n")
        f.write("class class c0 c1 c2\n")


if __name__ == "__main__":
    os.makedirs(OUT, exist_ok=True)
    n, pos = tic_tac_toe()
    print(f"tic-tac-toe: {n} rows, {pos} positive")
    monk2()
    balance()
    wine()
