"""Finite-extension games: random adversary vs. the certified escape
strategy, on both selector and rearrangement prefixes.

Run:  python demos/06_games.py
"""

from fractions import Fraction

from idealconv import (GameTarget, RadiusSchedule, builtin, run_game, zoo)

Z = builtin("density-zero")
sched = RadiusSchedule.dyadic(10)

print("== target the even-indicator at 1, mass level 1/4 ==")
target = GameTarget((Fraction(1),), Fraction(1, 4), sched)
t = run_game(zoo.char_evens(), Z, target, rounds=20, horizon=10 ** 5, seed=7)
print("verdict:", t.verdict, "|", t.reason)
print("per-level certificates (exact):",
      {k: str(v) for k, v in sorted(t.level_certificates.items())})
strategy_moves = [m for m in t.moves if m.player == "strategy"]
print("strategy extensions:", [len(m.values) for m in strategy_moves])

print("\n== the same seed replays bit for bit ==")
t2 = run_game(zoo.char_evens(), Z, target, rounds=20, horizon=10 ** 5, seed=7)
print("identical transcripts:", t.to_json() == t2.to_json())

print("\n== a starved target loses on principle ==")
t3 = run_game(zoo.char_powers2(), Z, target, rounds=20, horizon=10 ** 5, seed=7)
print("verdict:", t3.verdict, "|", t3.reason)

print("\n== rearrangement variant ==")
t4 = run_game(zoo.char_evens(), Z, target, rounds=12, horizon=10 ** 5,
              seed=3, kind="pi")
print("verdict:", t4.verdict, "|", t4.reason)
