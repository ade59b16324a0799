"""Wideband frequency-selective channel synthesis.

Co-polarized and cross-polarized multi-path models, the narrowband Rician
model, and a lightweight clustered generator. All realizations are
per-subcarrier matrices H[k] built from explicit path parameters, so tests
can rebuild them entry-wise from the defining formulas.
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import (AngleSet, ArrayConfig, angles_from_spatial_frequencies,
                       spatial_frequencies, ula_steering, upa_steering)


class DimensionMismatch(ValueError):
    pass


class InvalidChi(ValueError):
    pass


@dataclass(frozen=True)
class OfdmConfig:
    n_subcarriers: int
    cp_length: int
    subcarrier_spacing: float = 270e3

    def __post_init__(self):
        if self.cp_length >= self.n_subcarriers:
            raise ValueError("cp_length must be < n_subcarriers")

    @property
    def sample_period(self) -> float:
        return 1.0 / (self.n_subcarriers * self.subcarrier_spacing)

    @classmethod
    def profile(cls, name: str) -> "OfdmConfig":
        """Named bandwidth profiles: '125mhz' (N=512, D=64) and
        '250mhz' (N=1024, D=256)."""
        if name == "125mhz":
            return cls(512, 64)
        if name == "250mhz":
            return cls(1024, 256)
        raise ValueError(f"unknown OFDM profile {name!r}")


@dataclass(frozen=True)
class CrossPolConfig:
    """chi is the reciprocal cross-polar discrimination (0 = no leakage),
    varsigma the polarization mismatch rotation in radians."""

    chi: float
    varsigma: float = 0.0

    def __post_init__(self):
        if self.chi < 0:
            raise InvalidChi("chi must be >= 0")


@dataclass(frozen=True)
class PathParams:
    g_vv: complex
    g_vh: complex
    g_hv: complex
    g_hh: complex
    tau: float
    angles: AngleSet

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.g_vv == 0 and self.g_vh == 0 and self.g_hv == 0 and self.g_hh == 0:
            raise ValueError("at least one gain must be nonzero")

    @classmethod
    def single_pol(cls, g: complex, tau: float, angles: AngleSet) -> "PathParams":
        """Co-polarized path: one scalar gain."""
        return cls(g, 0.0, 0.0, 0.0, tau, angles)


def _raised_cosine(t: np.ndarray, t_s: float, rolloff: float = 0.25) -> np.ndarray:
    x = t / t_s
    num = np.sinc(x) * np.cos(np.pi * rolloff * x)
    den = 1.0 - (2.0 * rolloff * x) ** 2
    out = np.empty_like(x)
    reg = np.abs(den) > 1e-10
    out[reg] = num[reg] / den[reg]
    # limit value at the den = 0 points: (pi/4) * sinc(1/(2*rolloff))
    out[~reg] = (np.pi / 4.0) * np.sinc(1.0 / (2.0 * rolloff))
    return out


def pulse_samples(tau: float, ofdm: OfdmConfig, pulse: str = "raised-cosine") -> np.ndarray:
    """p(d*T_s - tau) for d = 0..D-1."""
    d = np.arange(ofdm.cp_length)
    t = d * ofdm.sample_period - tau
    if pulse == "unit-sample":
        return np.where(np.isclose(t, 0.0, atol=1e-15), 1.0, 0.0)
    if pulse == "raised-cosine":
        return _raised_cosine(t, ofdm.sample_period)
    raise ValueError(f"unknown pulse {pulse!r}")


def pulse_coefficients(tau: float, ofdm: OfdmConfig,
                       pulse: str = "raised-cosine") -> np.ndarray:
    """Per-subcarrier delay-tap coefficients rho_tau[k] for k = 0..N-1:
    sum over CP-window taps of p(d*T_s - tau) * exp(-j*2*pi*k*d/N)."""
    p = pulse_samples(tau, ofdm, pulse)
    k = np.arange(ofdm.n_subcarriers)
    d = np.arange(ofdm.cp_length)
    return (p[None, :] * np.exp(-2j * np.pi * np.outer(k, d) / ofdm.n_subcarriers)).sum(axis=1)


def pulse_coefficient(tau: float, k: int, ofdm: OfdmConfig,
                      pulse: str = "raised-cosine") -> complex:
    """Single-subcarrier convenience wrapper around pulse_coefficients."""
    if not 0 <= k < ofdm.n_subcarriers:
        raise ValueError("subcarrier index out of range")
    return complex(pulse_coefficients(tau, ofdm, pulse)[k])


def effective_gains(path: PathParams, xp: CrossPolConfig) -> dict[str, complex]:
    """Per-block path gains after the power-imbalance scaling and the
    polarization mismatch rotation are folded in."""
    q = np.sqrt(1.0 / (1.0 + xp.chi))
    rc = np.sqrt(xp.chi)
    c, s = np.cos(xp.varsigma), np.sin(xp.varsigma)
    return {
        "vv": q * (path.g_vv * c + rc * path.g_vh * s),
        "vh": q * (-path.g_vv * s + rc * path.g_vh * c),
        "hv": q * (rc * path.g_hv * c + path.g_hh * s),
        "hh": q * (-rc * path.g_hv * s + path.g_hh * c),
    }


@dataclass
class ChannelRealization:
    """Per-subcarrier channel tensor plus the generating path parameters.

    h has shape (N, M, N_t) where M and N_t are the full (cross-pol stacked)
    dimensions. For cross-pol realizations the four polarization blocks are
    stored separately as well, each (N, m_tot, n_tx).
    """

    h: np.ndarray
    paths: list[PathParams]
    arrays: ArrayConfig
    ofdm: OfdmConfig | None = None
    crosspol: CrossPolConfig | None = None
    pulse: str = "raised-cosine"
    blocks: dict[str, np.ndarray] | None = None
    dominant_angles: list[AngleSet] = field(default_factory=list)

    @property
    def n_subcarriers(self) -> int:
        return self.h.shape[0]

    def at(self, k: int) -> np.ndarray:
        return self.h[k]


def _steering_pair(path: PathParams, arrays: ArrayConfig) -> tuple[np.ndarray, np.ndarray]:
    sf = spatial_frequencies(path.angles, arrays)
    a_r = ula_steering(sf.nu, arrays.m_tot)
    a_t = upa_steering(sf.mu_x, sf.mu_y, arrays.n_x, arrays.n_y)
    return a_r, a_t


def copol_frequency_response(paths: list[PathParams], arrays: ArrayConfig,
                             ofdm: OfdmConfig, pulse: str = "raised-cosine") -> ChannelRealization:
    """H[k] = sum_r g_r * rho_{tau_r}[k] * a_r(psi_r) a_t*(theta_r, phi_r)."""
    if arrays.polarization_mode != "co":
        raise DimensionMismatch("co-polarized arrays required")
    n = ofdm.n_subcarriers
    h = np.zeros((n, arrays.m_tot, arrays.n_tx), dtype=complex)
    for path in paths:
        rho = pulse_coefficients(path.tau, ofdm, pulse)
        a_r, a_t = _steering_pair(path, arrays)
        h += rho[:, None, None] * (path.g_vv * np.outer(a_r, a_t.conj()))[None, :, :]
    return ChannelRealization(h=h, paths=list(paths), arrays=arrays, ofdm=ofdm, pulse=pulse)


def crosspol_frequency_response(paths: list[PathParams], arrays: ArrayConfig,
                                ofdm: OfdmConfig, xp: CrossPolConfig,
                                pulse: str = "raised-cosine") -> ChannelRealization:
    """Cross-polarized model: per-block responses H^ab[k] built from the
    effective gains, stacked into the full 2m x 2n matrix."""
    if arrays.polarization_mode != "cross":
        raise DimensionMismatch("cross-polarized arrays required")
    if xp.chi < 0:
        raise InvalidChi("chi must be >= 0")
    n = ofdm.n_subcarriers
    m, nt = arrays.m_tot, arrays.n_tx
    blocks = {ab: np.zeros((n, m, nt), dtype=complex) for ab in ("vv", "vh", "hv", "hh")}
    for path in paths:
        rho = pulse_coefficients(path.tau, ofdm, pulse)
        a_r, a_t = _steering_pair(path, arrays)
        outer = np.outer(a_r, a_t.conj())
        eff = effective_gains(path, xp)
        for ab in blocks:
            blocks[ab] += rho[:, None, None] * (eff[ab] * outer)[None, :, :]
    h = np.empty((n, 2 * m, 2 * nt), dtype=complex)
    h[:, :m, :nt] = blocks["vv"]
    h[:, :m, nt:] = blocks["vh"]
    h[:, m:, :nt] = blocks["hv"]
    h[:, m:, nt:] = blocks["hh"]
    return ChannelRealization(h=h, paths=list(paths), arrays=arrays, ofdm=ofdm,
                              crosspol=xp, pulse=pulse, blocks=blocks)


def crosspol_direct(paths: list[PathParams], arrays: ArrayConfig, ofdm: OfdmConfig,
                    xp: CrossPolConfig, pulse: str = "raised-cosine") -> np.ndarray:
    """Reference construction of the cross-pol model as written: Hadamard
    product with the imbalance mask, Kronecker gain expansion, and the
    mismatch rotation applied on the right. Kept as an oracle for tests."""
    m, nt = arrays.m_tot, arrays.n_tx
    q = np.sqrt(1.0 / (1.0 + xp.chi))
    rc = np.sqrt(xp.chi)
    x_mask = np.kron(np.array([[1.0, rc], [rc, 1.0]]), np.ones((m, nt))) * q
    c, s = np.cos(xp.varsigma), np.sin(xp.varsigma)
    r_givens = np.kron(np.array([[c, -s], [s, c]]), np.eye(nt))
    n = ofdm.n_subcarriers
    h = np.zeros((n, 2 * m, 2 * nt), dtype=complex)
    for path in paths:
        rho = pulse_coefficients(path.tau, ofdm, pulse)
        a_r, a_t = _steering_pair(path, arrays)
        outer = np.outer(a_r, a_t.conj())
        gains = np.array([[path.g_vv, path.g_vh], [path.g_hv, path.g_hh]])
        core = (x_mask * np.kron(gains, outer)) @ r_givens
        h += rho[:, None, None] * core[None, :, :]
    return h


def rician_narrowband(arrays: ArrayConfig, los_angles: AngleSet,
                      k_factor_db: float = 13.2, n_nlos: int = 5,
                      rng: np.random.Generator | None = None,
                      nlos_mu_ranges: dict[str, tuple[float, float]] | None = None
                      ) -> ChannelRealization:
    """Narrowband Rician model: deterministic-magnitude LOS term plus n_nlos
    Rayleigh terms, weighted so the K-factor sets the LOS power share and the
    total mean power is 1. Returned realization has a single subcarrier."""
    if n_nlos < 0:
        raise ValueError("n_nlos must be >= 0")
    rng = np.random.default_rng() if rng is None else rng
    kf = 10.0 ** (k_factor_db / 10.0)
    w_los = np.sqrt(kf / (1.0 + kf))
    w_nlos = np.sqrt(1.0 / (1.0 + kf))

    g_los = w_los * np.exp(2j * np.pi * rng.random())
    paths = [PathParams.single_pol(g_los, 0.0, los_angles)]

    ranges = nlos_mu_ranges or {}
    mu_x_rng = ranges.get("mu_x", (-np.pi / 2, np.pi / 2))
    mu_y_rng = ranges.get("mu_y", (-np.pi / 2, np.pi / 2))
    nu_rng = ranges.get("nu", (-np.pi / 2, np.pi / 2))
    for _ in range(n_nlos):
        g = w_nlos * (rng.normal() + 1j * rng.normal()) / np.sqrt(2 * max(n_nlos, 1))
        mu_x = rng.uniform(*mu_x_rng)
        mu_y = rng.uniform(*mu_y_rng)
        # keep the direction inside the visible region
        rad = np.hypot(mu_x / (2 * np.pi * arrays.d_tx), mu_y / (2 * np.pi * arrays.d_ty))
        if rad >= 1.0:
            scl = 0.999 / rad
            mu_x *= scl
            mu_y *= scl
        theta, phi = angles_from_spatial_frequencies(mu_x, mu_y, arrays)
        psi = float(np.arcsin(np.clip(rng.uniform(*nu_rng) / (2 * np.pi * arrays.d_r), -1, 1)))
        paths.append(PathParams.single_pol(g, 0.0, AngleSet(theta, phi, psi)))

    h = np.zeros((1, arrays.m_tot, arrays.n_tx), dtype=complex)
    for path in paths:
        a_r, a_t = _steering_pair(path, arrays)
        h[0] += path.g_vv * np.outer(a_r, a_t.conj())
    out = ChannelRealization(h=h, paths=paths, arrays=arrays)
    out.dominant_angles = [los_angles]
    return out


@dataclass(frozen=True)
class ClusterProfile:
    """Clustered multi-path generator settings. Angular quantities are in
    spatial-frequency radians; sectors are (low, high) mu intervals."""

    n_clusters: int = 3
    subpaths_per_cluster: int = 4
    delay_spread: float = 30e-9
    angle_spread: float = 0.02
    mu_x_range: tuple[float, float] = (-np.pi / 4, np.pi / 4)
    mu_y_range: tuple[float, float] = (-np.pi / 3, np.pi / 3)
    nu_range: tuple[float, float] = (-np.pi / 2, np.pi / 2)
    chi: float = 0.2
    varsigma: float = np.radians(20.0)
    copol_gains_only: bool = False


def clustered_channel_generate(profile: ClusterProfile, rng: np.random.Generator,
                               arrays: ArrayConfig, ofdm: OfdmConfig,
                               pulse: str = "raised-cosine") -> ChannelRealization:
    """Draw a clustered realization: exponential cluster delays (first cluster
    at zero delay), exponential power-delay profile, cluster centers uniform
    over the configured sectors, Laplacian subpath offsets, complex Gaussian
    subpath gains. Total mean path power is normalized to 1. The strongest
    subpath of each cluster is recorded as that cluster's ground truth."""
    nc, ns = profile.n_clusters, profile.subpaths_per_cluster
    delays = np.concatenate([[0.0], rng.exponential(profile.delay_spread, size=nc - 1)]) \
        if nc > 1 else np.zeros(1)
    delays = np.sort(delays)
    max_delay = (ofdm.cp_length - 1) * ofdm.sample_period
    delays = np.minimum(delays, 0.9 * max_delay)
    powers = np.exp(-delays / max(profile.delay_spread, 1e-12))
    powers = powers / powers.sum()

    def draw_center(lo, hi):
        return rng.uniform(lo, hi)

    def lap(scale, size):
        return rng.laplace(0.0, scale, size=size)

    paths: list[PathParams] = []
    dominant: list[tuple[float, AngleSet]] = []
    for ci in range(nc):
        c_mu_x = draw_center(*profile.mu_x_range)
        c_mu_y = draw_center(*profile.mu_y_range)
        c_nu = draw_center(*profile.nu_range)
        off_x = lap(profile.angle_spread, ns)
        off_y = lap(profile.angle_spread, ns)
        off_n = lap(profile.angle_spread, ns)
        sub_p = rng.exponential(1.0, size=ns)
        sub_p = powers[ci] * sub_p / sub_p.sum()
        best = None
        for si in range(ns):
            mu_x = float(np.clip(c_mu_x + off_x[si], *profile.mu_x_range))
            mu_y = float(np.clip(c_mu_y + off_y[si], *profile.mu_y_range))
            nu = float(np.clip(c_nu + off_n[si], *profile.nu_range))
            rad = np.hypot(mu_x / (2 * np.pi * arrays.d_tx), mu_y / (2 * np.pi * arrays.d_ty))
            if rad >= 1.0:
                scl = 0.999 / rad
                mu_x *= scl
                mu_y *= scl
            theta, phi = angles_from_spatial_frequencies(mu_x, mu_y, arrays)
            psi = float(np.arcsin(np.clip(nu / (2 * np.pi * arrays.d_r), -1, 1)))
            ang = AngleSet(theta, phi, psi)
            amp = np.sqrt(sub_p[si])

            def cg():
                return amp * (rng.normal() + 1j * rng.normal()) / np.sqrt(2)

            if profile.copol_gains_only:
                path = PathParams.single_pol(cg(), float(delays[ci]), ang)
            else:
                path = PathParams(cg(), cg(), cg(), cg(), float(delays[ci]), ang)
            paths.append(path)
            strength = abs(path.g_vv) ** 2 + abs(path.g_vh) ** 2 \
                + abs(path.g_hv) ** 2 + abs(path.g_hh) ** 2
            if best is None or strength > best[0]:
                best = (strength, ang)
        dominant.append((powers[ci], best[1]))

    dominant.sort(key=lambda t: -t[0])
    if arrays.polarization_mode == "cross":
        xp = CrossPolConfig(profile.chi, profile.varsigma)
        out = crosspol_frequency_response(paths, arrays, ofdm, xp, pulse)
    else:
        out = copol_frequency_response(paths, arrays, ofdm, pulse)
    out.dominant_angles = [a for _, a in dominant]
    return out


# ---------------------------------------------------------------------------
# text fixture format: metadata header lines ("# key=value") + path rows

_CSV_HEADER = ("g_vv_re,g_vv_im,g_vh_re,g_vh_im,g_hv_re,g_hv_im,"
               "g_hh_re,g_hh_im,tau,theta,phi,psi")


def save_channel_csv(real: ChannelRealization, path: str) -> None:
    """Write the generating parameters (not the tensor) to a text fixture."""
    lines = []
    a = real.arrays
    lines.append(f"# polarization_mode={a.polarization_mode}")
    lines.append(f"# n_x={a.n_x} n_y={a.n_y} m_tot={a.m_tot}")
    lines.append(f"# d_tx={a.d_tx!r} d_ty={a.d_ty!r} d_r={a.d_r!r}")
    if real.ofdm is not None:
        o = real.ofdm
        lines.append(f"# n_subcarriers={o.n_subcarriers} cp_length={o.cp_length} "
                     f"subcarrier_spacing={o.subcarrier_spacing!r}")
    if real.crosspol is not None:
        lines.append(f"# chi={real.crosspol.chi!r} varsigma={real.crosspol.varsigma!r}")
    lines.append(f"# pulse={real.pulse}")
    lines.append(_CSV_HEADER)
    for p in real.paths:
        row = [p.g_vv.real, p.g_vv.imag, p.g_vh.real, p.g_vh.imag,
               p.g_hv.real, p.g_hv.imag, p.g_hh.real, p.g_hh.imag,
               p.tau, p.angles.theta, p.angles.phi, p.angles.psi]
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_channel_csv(path: str) -> ChannelRealization:
    """Rebuild a realization from a text fixture written by save_channel_csv."""
    meta: dict[str, str] = {}
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        key, val = tok.split("=", 1)
                        meta[key] = val
            elif line[0].isalpha() or line.startswith("g_"):
                continue  # column header
            else:
                rows.append([float(v) for v in line.split(",")])
    arrays = ArrayConfig(
        n_x=int(meta["n_x"]), n_y=int(meta["n_y"]), m_tot=int(meta["m_tot"]),
        d_tx=float(meta["d_tx"]), d_ty=float(meta["d_ty"]), d_r=float(meta["d_r"]),
        polarization_mode=meta["polarization_mode"])
    paths = []
    for r in rows:
        ang = AngleSet(r[8 + 1], r[8 + 2], r[8 + 3])
        paths.append(PathParams(complex(r[0], r[1]), complex(r[2], r[3]),
                                complex(r[4], r[5]), complex(r[6], r[7]), r[8], ang))
    pulse = meta.get("pulse", "raised-cosine")
    if "n_subcarriers" in meta:
        ofdm = OfdmConfig(int(meta["n_subcarriers"]), int(meta["cp_length"]),
                          float(meta["subcarrier_spacing"]))
        if "chi" in meta:
            xp = CrossPolConfig(float(meta["chi"]), float(meta["varsigma"]))
            return crosspol_frequency_response(paths, arrays, ofdm, xp, pulse)
        return copol_frequency_response(paths, arrays, ofdm, pulse)
    # narrowband fixture
    h = np.zeros((1, arrays.m_tot, arrays.n_tx), dtype=complex)
    for p in paths:
        a_r, a_t = _steering_pair(p, arrays)
        h[0] += p.g_vv * np.outer(a_r, a_t.conj())
    return ChannelRealization(h=h, paths=paths, arrays=arrays)
