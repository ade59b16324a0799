"""Walk through one single-path estimation end to end.

A transmit path is planted at a known direction, the codebooks are swept,
and the per-axis pair powers are turned into the ratio metric and inverted
back to an angle. Offsets from the commensurate family make the noiseless
inversion exact to machine precision; a noisy section shows how the ratio
compresses toward the pair center when noise inflates both powers. The
grid-of-beams baseline on the identical sweep snaps to the nearest
boresight, so its error floor is half the beam spacing. Run with no
arguments.
"""

import numpy as np

from beampair.channel import rician_narrowband
from beampair.codebook import CodebookConfig, build_codebooks
from beampair.estimator import estimate_single_path, gob_estimate
from beampair.geometry import (AngleSet, ArrayConfig, aoa_from_nu,
                               angles_from_spatial_frequencies)

ARRAYS = ArrayConfig(n_x=4, n_y=8, m_tot=4)
CFG = CodebookConfig(ARRAYS,
                     el_range=(-np.pi, np.pi),
                     az_range=(-np.pi, np.pi),
                     rx_range=(-np.pi, np.pi),
                     delta_mode="commensurate")

# spatial-frequency truths, placed at moderate offsets inside their pairs
MU_X, MU_Y, NU = 1.335, 0.157, 1.257


def banner(text):
    print()
    print(text)
    print("-" * len(text))


def main():
    rng = np.random.default_rng(7)
    cbs = build_codebooks(CFG)
    theta, phi = angles_from_spatial_frequencies(MU_X, MU_Y, ARRAYS)
    truth = AngleSet(theta, phi, aoa_from_nu(NU, ARRAYS))
    chan = rician_narrowband(ARRAYS, truth, k_factor_db=100.0, n_nlos=0,
                             rng=rng)
    truths = {"elevation": MU_X, "azimuth": MU_Y, "receive": NU}

    banner("setup")
    print(f"arrays: {ARRAYS.n_x}x{ARRAYS.n_y} tx, {ARRAYS.m_tot} rx")
    print(f"truth  theta={np.degrees(truth.theta):7.3f} deg  "
          f"phi={np.degrees(truth.phi):7.3f} deg  "
          f"psi={np.degrees(truth.psi):7.3f} deg")
    print(f"       mu_x={MU_X:7.4f} rad  mu_y={MU_Y:7.4f} rad  "
          f"nu={NU:7.4f} rad")

    banner("noiseless sweep, pair selection, inversion")
    report = estimate_single_path(chan, cbs)
    est = report.best
    hats = {"elevation": est.mu_x, "azimuth": est.mu_y, "receive": est.nu}
    print(f"{'axis':<10} {'members (rad)':<20} {'zeta':>8} "
          f"{'inverted':>9} {'truth':>9} {'error':>10}")
    for axis in ("elevation", "azimuth", "receive"):
        lo, hi = (b.boresight_mu for b in est.pairs[axis].beams)
        print(f"{axis:<10} [{lo:7.4f}, {hi:7.4f}]   {est.zetas[axis]:8.4f} "
              f"{hats[axis]:9.4f} {truths[axis]:9.4f} "
              f"{abs(hats[axis] - truths[axis]):10.2e}")
    print(f"probe count: {report.iterations}")
    print(f"recovered theta error: "
          f"{np.degrees(abs(est.theta - truth.theta)):.2e} deg")

    banner("the same sweep at 25 dB, 200 noise draws")
    gamma = 10.0 ** (25.0 / 10.0)
    errs = {a: [] for a in truths}
    for _ in range(200):
        noisy = estimate_single_path(chan, cbs, gamma=gamma, rng=rng).best
        for axis, key in (("elevation", "mu_x"), ("azimuth", "mu_y"),
                          ("receive", "nu")):
            errs[axis].append(abs(getattr(noisy, key) - truths[axis]))
    for axis in errs:
        e = np.asarray(errs[axis])
        print(f"{axis:<10} mean |mu error| {e.mean():.4f} rad, "
              f"worst {e.max():.4f} rad")
    print("noise adds equally to both pair powers, so the ratio shrinks and "
          "estimates lean toward the pair center;")
    print("a single narrowband snapshot over a full-circle sweep needs this "
          "much per-probe SNR. The batch experiment")
    print("families average 64 subcarriers over sector-limited codebooks, "
          "which moves the operating point near 10 dB.")

    banner("grid-of-beams baseline on the identical channel, no noise")
    gob = gob_estimate(chan, cbs, n_rf=1, m_rf=1)
    g = gob.best
    for axis, hat in (("elevation", g.mu_x), ("azimuth", g.mu_y),
                      ("receive", g.nu)):
        step = 2.0 * cbs.config.delta(axis)
        print(f"{axis:<10} nearest boresight {hat:7.4f} rad, "
              f"error {abs(hat - truths[axis]):.4f} rad "
              f"(beam spacing {step:.4f}, worst case {step / 2:.4f})")
    print(f"iterations: {gob.iterations} (beam search) vs "
          f"{report.iterations} (paired sweep); the counts separate with "
          "more RF chains, see overhead_vs_rate.py")


if __name__ == "__main__":
    main()
