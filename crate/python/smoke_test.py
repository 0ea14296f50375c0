"""Smoke test for the `ader` extension module.

Build and install first:  maturin develop --release -m crates/python/Cargo.toml
Run:                      python python/smoke_test.py
"""

import cmath
import math

import ader


def check(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}")
    if not ok:
        raise SystemExit(1)


def main():
    check("presets", ader.presets() == ["leveque-yee", "linear-system", "noncons", "euler-smooth"])

    cfg = ader.preset_config("leveque-yee")
    check("preset config", (cfg.order, cfg.alpha, cfg.t_out, cfg.boundary) == (3, 2.4, 0.3, "transmissive"), repr(cfg))

    try:
        ader.RunConfig(order=9)
        check("invalid order rejected", False)
    except ValueError as e:
        check("invalid order rejected", True, str(e))

    sim = ader.Simulation("linear-system", cells=32, t_out=0.25)
    taken = sim.run()
    err = sim.error_norms()[0]
    check("linear run lands on t_out", sim.time == 0.25, f"{taken} steps")
    check("linear run is accurate", err["l1"] < 5e-3, f"L1 = {err['l1']:.3e}")

    stiff = ader.Simulation("leveque-yee")
    stiff.run()
    q = stiff.component(0)
    front = max(x for x, v in zip(stiff.x, q) if v >= 0.5)
    check("stiff front", abs(front - 0.6) <= 0.02, f"x = {front:.3f}")

    euler = ader.Simulation("euler-smooth", cells=16, order=2)
    initial = euler.totals()
    dt = euler.step()
    euler.step(0.5 * dt)
    check("manual steps", euler.steps == 2 and all(v[0] > 0 for v in euler.values()))
    drift = max(abs(b - a) / abs(a) for a, b in zip(initial, euler.totals()))
    check("Euler totals conserved", drift < 1e-13, f"drift = {drift:.1e}")

    rows = ader.convergence("linear-system", order=3, meshes=[32, 64])
    check("third-order convergence", abs(rows[1]["orders"]["l1"] - 3.0) < 0.1, f"{rows[1]['orders']['l1']:.3f}")

    theta, c = 0.7, 0.4
    a = ader.amplitude(theta, c, 0.0, [0.2, 0.5, 0.3], order=1)
    closed = 1 - 0.5 * (1 + c * c) * (1 - math.cos(theta)) - 1j * c * math.sin(theta)
    check("first-order amplitude", cmath.isclose(a, closed, abs_tol=1e-14), f"{a:.6f}")

    check("stable inside the CFL limit", ader.stability_fraction(0.5, 0.0, order=1) == 1.0)
    check("unstable beyond it", ader.stability_fraction(1.5, 0.0, order=1) == 0.0)

    m = ader.stability_map(3, predictor="implicit", alpha=2.0, c_grid=[0.2, 0.6], r_grid=[0.0, -1.0], scenarios=10, seed=3)
    again = ader.stability_map(3, predictor="implicit", alpha=2.0, c_grid=[0.2, 0.6], r_grid=[0.0, -1.0], scenarios=10, seed=3)
    check("stability map deterministic", m.to_csv() == again.to_csv() and len(m.fractions) == 4)
    check("csv header", m.to_csv().splitlines()[0] == "c,r,stable_fraction")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
