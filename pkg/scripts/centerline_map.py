"""Simulate the reference build equation on a 53-point centerline and
report each location's peak temperature, peak time and mean tool distance."""

import argparse

import numpy as np

from govdisc.govmodel import load_fixture
from govdisc.simulate import centerline_locations, simulate_build
from govdisc.synth import Constant, ProcessPlan, generate_ground_truth


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--layers", type=int, default=16)
    ap.add_argument("--points", type=int, default=53)
    ap.add_argument("--csv", help="also write the full map here")
    args = ap.parse_args()
    build = load_fixture("build")
    ds = generate_ground_truth(load_fixture("135"), build, ProcessPlan(layers=args.layers, torque_profile=Constant(60.0)))
    data = ds.phased.data
    locs = centerline_locations(data.layout, args.points)
    sim = simulate_build(build, data.t, data.T_tool, data.s_tool, locs, data.T_build[0, 0])
    peak = np.nanmax(sim.predicted, axis=0)
    when = data.t[np.nanargmax(sim.predicted, axis=0)]
    print(f"{'loc':>4s} {'x':>8s} {'z':>8s} {'mean_d':>8s} {'peak_C':>9s} {'t_peak':>7s}")
    for j in range(len(locs)):
        x, _, z = locs[j]
        print(f"{j:4d} {x:8.2f} {z:8.2f} {sim.distance[:, j].mean():8.2f} {peak[j]:9.2f} {when[j]:7.0f}")
    print(f"simulation time {sim.wall_time:.3f} s, diverged locations: {int(sim.diverged.sum())}")
    if args.csv:
        sim.to_frame().to_csv(args.csv, index=False)


if __name__ == "__main__":
    main()
