"""Smoke test for the qdwb_py extension: design, verify, transform, solve."""
import random
import sys

import qdwb_py as q


def main() -> int:
    ok = True

    bank = q.shannon_bank(16)
    ok &= all(row[4] for row in q.verify(bank, "basis", 0.0))

    rng = random.Random(0)
    side = 32
    img = [rng.random() for _ in range(side * side)]
    pyr = q.analyze(img, side, bank, 2, "critical")
    ok &= pyr.count() == side * side
    back = q.synthesize(pyr, bank)
    err = max(abs(b - a) for a, b in zip(img, back))
    print(f"shannon roundtrip max-error {err:.3e}")
    ok &= err < 1e-10

    frame = q.frame_bank(16)
    ok &= all(row[4] for row in q.verify(frame, "frame", 1e-12))
    fp = q.analyze(img, side, frame, 2, "frame")
    print(f"frame redundancy {fp.count() / side**2:.4f}")
    ok &= fp.count() * 16 == side * side * 31

    primal, dual, trace = q.solve_biorth(q.dual_inputs(16))
    print("\n".join(trace))
    ok &= all(row[4] for row in q.verify_pair(primal, dual, 1e-8))
    bp = q.analyze(img, side, primal, 2, "critical")
    rec = q.synthesize(bp, dual)
    berr = max(abs(b - a) for a, b in zip(img, rec))
    print(f"biorth roundtrip max-error {berr:.3e}")
    ok &= berr < 1e-6

    print("smoke", "PASS" if ok else "FAIL")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
