"""Pill-box defect rate studies, including a sweep over the layer thickness."""
import argparse

from mhdfsi import pillbox


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h0", type=float, default=0.08)
    ap.add_argument("--levels", type=int, default=5)
    args = ap.parse_args()
    for width in (1e-3, 1e-4, 1e-5):
        t = pillbox.tangential_study(pillbox.TangentialCase(width=width), args.h0, args.levels)
        n = pillbox.normal_study(pillbox.NormalCase(width=width), args.h0, args.levels)
        print(f"width {width:.0e}: tangential slope {t.slope:.4f}, normal slope {n.slope:.4f}")
        for (h, dt_, _), (_, dn, _) in zip(t.rows(), n.rows()):
            print(f"   size {h:.5f}  tangential {dt_:.6e}  normal {dn:.6e}")
    for name, r in pillbox.zero_jump_studies().items():
        print(f"zero jump {name}: {r.status}")
    print(f"quadratic harness slope {pillbox.quadratic_study().slope:.4f}")


if __name__ == "__main__":
    main()
