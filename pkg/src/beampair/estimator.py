"""Beam-pair angle estimation.

Received-power evaluation, the difference/sum ratio metric and its
closed-form inversion, the single-path sweep estimator, the multi-path
pilot-probing estimator, and the grid-of-beams baseline used for
comparison. Per-domain beam strengths in the sweep estimator are marginal
sums of probe powers over the other probe axes, which keeps the ratio
exact for a single path (common factors cancel) and averages down noise.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, DimensionMismatch
from .codebook import (AuxiliaryBeamPair, Beam, CodebookSet, ProbingPlan,
                       build_codebooks, enumerate_abps, random_probing_plan,
                       tx_beam_vector)
from .geometry import (DegenerateDirection, angles_from_spatial_frequencies,
                       aoa_from_nu)
from .pilot import PilotAssignment, assign_pilots, correlate_probing

# The inversion formula is exact on the closed interval |zeta| <= 1 (at the
# endpoints it returns center -+ delta), so clamping only absorbs
# floating-point overshoot and never biases attainable values.
ZETA_CLAMP = 1.0


class BothZero(ValueError):
    pass


class NoSignal(RuntimeError):
    pass


class InsufficientNeighbors(RuntimeError):
    pass


@dataclass(frozen=True)
class RatioMetric:
    value: float
    power_delta: float
    power_sigma: float
    axis: str | None = None
    pair: AuxiliaryBeamPair | None = None


@dataclass
class PathEstimate:
    mu_x: float = math.nan
    mu_y: float = math.nan
    nu: float = math.nan
    theta: float = math.nan
    phi: float = math.nan
    psi: float = math.nan
    pairs: dict = field(default_factory=dict)
    zetas: dict = field(default_factory=dict)


@dataclass
class EstimationReport:
    paths: list[PathEstimate]
    iterations: int
    scheme: str
    strengths: dict = field(default_factory=dict)

    @property
    def best(self) -> PathEstimate:
        return self.paths[0]


def received_symbol(w, h_k: np.ndarray, f, s: complex = 1.0,
                    noise_sigma: float = 0.0,
                    rng: np.random.Generator | None = None) -> complex:
    """w* H f s + w* n for one probe on one subcarrier; noise is drawn fresh
    with covariance noise_sigma^2 I."""
    wv = w.vector if isinstance(w, Beam) else np.asarray(w)
    fv = f.vector if isinstance(f, Beam) else np.asarray(f)
    h = np.asarray(h_k)
    if h.ndim != 2 or wv.shape != (h.shape[0],) or fv.shape != (h.shape[1],):
        raise DimensionMismatch(
            f"w {wv.shape}, H {h.shape}, f {fv.shape} do not line up")
    y = complex(wv.conj() @ h @ fv) * s
    if noise_sigma > 0:
        rng = np.random.default_rng() if rng is None else rng
        n = noise_sigma * (rng.standard_normal(h.shape[0])
                           + 1j * rng.standard_normal(h.shape[0])) / np.sqrt(2)
        y += complex(wv.conj() @ n)
    return y


def ratio_metric(power_delta: float, power_sigma: float, axis: str | None = None,
                 pair: AuxiliaryBeamPair | None = None) -> RatioMetric:
    if power_delta < 0 or power_sigma < 0:
        raise ValueError("powers must be nonnegative")
    total = power_delta + power_sigma
    if total == 0:
        raise BothZero("both pair powers are zero")
    value = float(np.clip((power_delta - power_sigma) / total, -1.0, 1.0))
    return RatioMetric(value=value, power_delta=power_delta,
                       power_sigma=power_sigma, axis=axis, pair=pair)


def ratio_closed_form(mu: float, center: float, delta: float) -> float:
    """Noiseless single-path ratio as a function of the offset from the pair
    center; strictly decreasing over (center - delta, center + delta)."""
    v = mu - center
    return -np.sin(v) * np.sin(delta) / (1.0 - np.cos(v) * np.cos(delta))


def invert_ratio(zeta: float, center_mu: float, delta: float) -> float:
    """Closed-form inverse of the ratio metric; output clamped to the pair
    interval [center - delta, center + delta]."""
    if not 0 < delta < np.pi / 2:
        raise ValueError("delta must lie in (0, pi/2)")
    z = float(np.clip(zeta, -ZETA_CLAMP, ZETA_CLAMP))
    sd, cd = np.sin(delta), np.cos(delta)
    denom = sd * sd + z * z * cd * cd
    arg = (z * sd - z * np.sqrt(1.0 - z * z) * sd * cd) / denom
    mu = center_mu - np.arcsin(np.clip(arg, -1.0, 1.0))
    return float(np.clip(mu, center_mu - delta, center_mu + delta))


def _noise_like(shape, sigma: float, rng: np.random.Generator) -> np.ndarray:
    return sigma * (rng.standard_normal(shape)
                    + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _sigma_from_gamma(gamma: float | None) -> float:
    if gamma is None or gamma == math.inf:
        return 0.0
    if gamma <= 0:
        raise ValueError("SNR must be positive (linear scale)")
    return float(np.sqrt(1.0 / gamma))


def _sweep(channel: ChannelRealization, codebooks: CodebookSet, sigma: float,
           rng: np.random.Generator | None):
    """TDM probe of every (receive beam, elevation x azimuth transmit grid)
    combination per polarization; returns marginal strengths per beam and the
    probe count."""
    h = channel.h
    rx_beams = codebooks.all_beams("receive")
    w_mat = np.column_stack([b.vector for b in rx_beams])
    if w_mat.shape[0] != h.shape[1]:
        raise DimensionMismatch("receive beams do not match channel rows")

    arrays = codebooks.config.arrays
    grid_meta: list[tuple[Beam, Beam]] = []
    cols = []
    for pol in codebooks.pols:
        for eb in codebooks.tx_el[pol]:
            for ab in codebooks.tx_az[pol]:
                cols.append(tx_beam_vector(arrays, pol, eb.boresight_mu,
                                           ab.boresight_mu))
                grid_meta.append((eb, ab))
    f_mat = np.column_stack(cols)
    if f_mat.shape[0] != h.shape[2]:
        raise DimensionMismatch("transmit beams do not match channel columns")

    g = np.einsum("mi,kmn->kin", w_mat.conj(), h)
    y = np.einsum("kin,nj->kij", g, f_mat)
    if sigma > 0:
        rng = np.random.default_rng() if rng is None else rng
        y = y + _noise_like(y.shape, sigma, rng)
    powers = np.mean(np.abs(y) ** 2, axis=0)  # (n_rx, n_grid)

    s_rx = {b: float(p) for b, p in zip(rx_beams, powers.sum(axis=1))}
    s_el: dict[Beam, float] = {}
    s_az: dict[Beam, float] = {}
    per_grid = powers.sum(axis=0)
    for (eb, ab), p in zip(grid_meta, per_grid):
        s_el[eb] = s_el.get(eb, 0.0) + float(p)
        s_az[ab] = s_az.get(ab, 0.0) + float(p)
    probes = len(rx_beams) * len(grid_meta)
    return {"receive": s_rx, "elevation": s_el, "azimuth": s_az}, probes


def _winner(strengths: dict[Beam, float]) -> Beam:
    best = None
    for beam in sorted(strengths, key=lambda b: (b.polarization, b.index)):
        if best is None or strengths[beam] > strengths[best]:
            best = beam
    if best is None or strengths[best] <= 0:
        raise NoSignal("no probe produced power")
    return best


def _pair_for(winner: Beam, strengths: dict[Beam, float],
              pairs: list[AuxiliaryBeamPair]) -> AuxiliaryBeamPair:
    """Pair the winner with its stronger angular neighbor (same polarization);
    edge beams have a single neighbor; single-beam codebooks cannot pair."""
    siblings = sorted((b for b in strengths
                       if b.polarization == winner.polarization
                       and b.axis == winner.axis),
                      key=lambda b: b.boresight_mu)
    pos = siblings.index(winner)
    cand = []
    if pos > 0:
        cand.append(siblings[pos - 1])
    if pos + 1 < len(siblings):
        cand.append(siblings[pos + 1])
    if not cand:
        raise InsufficientNeighbors(
            f"{winner.axis} codebook has no neighbor for pairing")
    cand.sort(key=lambda b: (-strengths.get(b, 0.0), b.index))
    neighbor = cand[0]
    members = {winner, neighbor}
    for pair in pairs:
        if set(pair.beams) == members:
            return pair
    raise InsufficientNeighbors("winner and neighbor are not an enumerated pair")


def _domain_estimate(strengths: dict[Beam, float], pairs: list[AuxiliaryBeamPair],
                     axis: str) -> tuple[float, AuxiliaryBeamPair, RatioMetric]:
    winner = _winner(strengths)
    pair = _pair_for(winner, strengths, pairs)
    metric = ratio_metric(strengths.get(pair.beams[0], 0.0),
                          strengths.get(pair.beams[1], 0.0), axis=axis, pair=pair)
    mu = invert_ratio(metric.value, pair.center_mu, pair.delta)
    return mu, pair, metric


def _fill_angles(est: PathEstimate, arrays) -> None:
    try:
        est.theta, est.phi = angles_from_spatial_frequencies(est.mu_x, est.mu_y,
                                                             arrays)
    except DegenerateDirection:
        est.theta, est.phi = 0.0, 0.0
    if not math.isnan(est.nu):
        est.psi = aoa_from_nu(est.nu, arrays)


def estimate_single_path(channel: ChannelRealization, codebooks: CodebookSet,
                         gamma: float | None = None,
                         rng: np.random.Generator | None = None) -> EstimationReport:
    """Single-path estimation from a full TDM sweep: pick per-domain winners
    by marginal strength, pair each with its stronger neighbor, invert the
    ratio, and map spatial frequencies back to physical angles."""
    sigma = _sigma_from_gamma(gamma)
    strengths, probes = _sweep(channel, codebooks, sigma, rng)
    est = PathEstimate()
    for axis, key in (("elevation", "mu_x"), ("azimuth", "mu_y"), ("receive", "nu")):
        pairs = enumerate_abps(codebooks, axis)
        mu, pair, metric = _domain_estimate(strengths[axis], pairs, axis)
        setattr(est, key, mu)
        est.pairs[axis] = pair
        est.zetas[axis] = metric.value
    _fill_angles(est, codebooks.config.arrays)
    return EstimationReport(paths=[est], iterations=probes, scheme="abp",
                            strengths=strengths)


def gob_estimate(channel: ChannelRealization, codebooks: CodebookSet,
                 gamma: float | None = None,
                 rng: np.random.Generator | None = None,
                 n_rf: int = 1, m_rf: int = 1) -> EstimationReport:
    """Grid-of-beams baseline over the same sweep: the estimate per domain is
    the strongest beam's boresight. The iteration count follows the
    exhaustive-search complexity (tx count)^n_rf * (rx count)^m_rf."""
    sigma = _sigma_from_gamma(gamma)
    strengths, _ = _sweep(channel, codebooks, sigma, rng)
    est = PathEstimate()
    for axis, key in (("elevation", "mu_x"), ("azimuth", "mu_y"), ("receive", "nu")):
        winner = _winner(strengths[axis])
        setattr(est, key, winner.boresight_mu)
    _fill_angles(est, codebooks.config.arrays)
    n_tx = sum(len(codebooks.tx_el[p]) * len(codebooks.tx_az[p])
               for p in codebooks.pols)
    n_rx = len(codebooks.all_beams("receive"))
    iters = (n_tx ** n_rf) * (n_rx ** m_rf)
    return EstimationReport(paths=[est], iterations=iters, scheme="gob",
                            strengths=strengths)


def _memberships(pairs: list[AuxiliaryBeamPair]) -> dict[Beam, list[tuple[int, int]]]:
    out: dict[Beam, list[tuple[int, int]]] = {}
    for pair in pairs:
        for b, beam in enumerate(pair.beams):
            out.setdefault(beam, []).append((pair.abp_id, b))
    return out


def tag_probing(beams: list[Beam], memberships: dict[Beam, list[tuple[int, int]]]
                ) -> list[tuple[int, int]]:
    """Assign a (pair id, within-pair id) pilot tag to every column of one
    probing. Columns that are the two members of the same pair share its id;
    remaining columns take an id not yet used in this probing."""
    tags: list[tuple[int, int] | None] = [None] * len(beams)
    used: set[int] = set()
    by_pair: dict[int, list[tuple[int, int]]] = {}
    for i, beam in enumerate(beams):
        for abp_id, b in memberships.get(beam, []):
            by_pair.setdefault(abp_id, []).append((i, b))
    # complete pairs first
    for abp_id, hits in by_pair.items():
        if len(hits) == 2 and {b for _, b in hits} == {0, 1} and abp_id not in used:
            if all(tags[i] is None for i, _ in hits):
                for i, b in hits:
                    tags[i] = (abp_id, b)
                used.add(abp_id)
    for i, beam in enumerate(beams):
        if tags[i] is not None:
            continue
        opts = memberships.get(beam, [])
        if not opts:
            raise InsufficientNeighbors(f"beam {beam.index} belongs to no pair")
        pick = next(((a, b) for a, b in opts if a not in used), opts[0])
        tags[i] = pick
        used.add(pick[0])
    return tags  # type: ignore[return-value]


def _probe_and_correlate(channel: ChannelRealization, plan: ProbingPlan,
                         pilots: PilotAssignment,
                         memberships: dict[Beam, list[tuple[int, int]]],
                         sigma: float, rng: np.random.Generator | None):
    """Run every (tx probing, rx probing) slot, correlate each receive branch
    against the probing's pilot references, and accumulate |corr|^2 strengths
    per transmit beam, per receive beam, and per receive probing."""
    h = channel.h
    n = h.shape[0]
    if n != pilots.n:
        raise DimensionMismatch("pilot length must equal the subcarrier count")
    rng = np.random.default_rng() if rng is None else rng

    tx_strength: dict[Beam, float] = {}
    rx_strength: dict[Beam, float] = {}
    probing_totals = np.zeros(plan.m_t)

    plans_tags = [tag_probing(beams, memberships) for beams in plan.tx_beams]
    refs_per_probing = [[pilots.ref(a, b) for a, b in tags] for tags in plans_tags]

    for nt, (f_mat, beams_t) in enumerate(zip(plan.f_mats, plan.tx_beams)):
        refs = refs_per_probing[nt]
        x = np.column_stack([r.sequence() for r in refs])  # (N, n_rf)
        hf = np.einsum("kmn,nj->kmj", h, f_mat)
        tx_signal = np.einsum("kmj,kj->km", hf, x)  # (N, M)
        for mt, (w_mat, beams_r) in enumerate(zip(plan.w_mats, plan.rx_beams)):
            y = tx_signal @ w_mat.conj()  # (N, m_rf)
            if sigma > 0:
                y = y + _noise_like((n, h.shape[1]), sigma, rng) @ w_mat.conj()
            rep = correlate_probing(y, refs)
            s = np.abs(rep.values) ** 2  # (m_rf, n_refs)
            probing_totals[mt] += float(s.sum())
            for j, beam in enumerate(beams_t):
                tx_strength[beam] = tx_strength.get(beam, 0.0) + float(s[:, j].sum())
            for i, beam in enumerate(beams_r):
                rx_strength[beam] = rx_strength.get(beam, 0.0) + float(s[i, :].sum())
    return tx_strength, rx_strength, probing_totals


def estimate_multipath(channel: ChannelRealization, probing_plan: ProbingPlan,
                       pilots: PilotAssignment, gamma: float | None,
                       n_select: int, rng: np.random.Generator | None = None,
                       codebooks: CodebookSet | None = None,
                       elevation: bool = True) -> EstimationReport:
    """Multi-path estimation with simultaneous pilot-tagged probing.

    Azimuth stage: pick the receive probing with the largest summed strength,
    take the n_select strongest transmit beams, pair each with its stronger
    neighbor, and invert the per-pair ratio. Receive pairs form around the
    best receive beam of the winning probing. When a codebook set is given
    and elevation is requested, each selected path gets an elevation sweep
    re-pointed at its azimuth estimate.
    """
    if n_select < 1:
        raise ValueError("n_select must be >= 1")
    sigma = _sigma_from_gamma(gamma)
    rng = np.random.default_rng() if rng is None else rng

    if codebooks is not None:
        az_pairs = enumerate_abps(codebooks, "azimuth")
        rx_pairs = enumerate_abps(codebooks, "receive")
    else:
        az_pairs, rx_pairs = _pairs_from_plan(probing_plan)
    az_members = _memberships(az_pairs)

    tx_s, rx_s, totals = _probe_and_correlate(channel, probing_plan, pilots,
                                              az_members, sigma, rng)
    if totals.sum() <= 0:
        raise NoSignal("no correlated energy in any probing")

    best_mt = int(np.argmax(totals))
    best_rx_candidates = {b: rx_s.get(b, 0.0)
                          for b in probing_plan.rx_beams[best_mt]}
    rx_winner = _winner(best_rx_candidates)
    rx_pair = _pair_for(rx_winner, rx_s, rx_pairs)
    rx_metric = ratio_metric(rx_s.get(rx_pair.beams[0], 0.0),
                             rx_s.get(rx_pair.beams[1], 0.0),
                             axis="receive", pair=rx_pair)
    nu_hat = invert_ratio(rx_metric.value, rx_pair.center_mu, rx_pair.delta)

    ranked = sorted(tx_s, key=lambda b: (-tx_s[b], b.polarization, b.index))
    selected = ranked[:n_select]

    paths: list[PathEstimate] = []
    extra_tx_probings = 0
    for beam in selected:
        est = PathEstimate()
        pair = _pair_for(beam, tx_s, az_pairs)
        metric = ratio_metric(tx_s.get(pair.beams[0], 0.0),
                              tx_s.get(pair.beams[1], 0.0),
                              axis="azimuth", pair=pair)
        est.mu_y = invert_ratio(metric.value, pair.center_mu, pair.delta)
        est.pairs["azimuth"] = pair
        est.zetas["azimuth"] = metric.value
        est.nu = nu_hat
        est.pairs["receive"] = rx_pair
        est.zetas["receive"] = rx_metric.value
        paths.append(est)

    if elevation and codebooks is not None \
            and all(len(codebooks.tx_el[p]) > 1 for p in codebooks.pols):
        for est in paths:
            n_el_t = _coverage_probings(codebooks, "elevation", probing_plan.n_rf)
            el_plan, el_pilots, el_pairs = _elevation_stage(
                codebooks, est.mu_y, probing_plan, pilots,
                int(rng.integers(2 ** 31)), n_el_t)
            el_members = _memberships(el_pairs)
            el_tx, _, el_totals = _probe_and_correlate(
                channel, el_plan, el_pilots, el_members, sigma, rng)
            extra_tx_probings += el_plan.n_t
            if el_totals.sum() <= 0:
                continue
            pair = _pair_for(_winner(el_tx), el_tx, el_pairs)
            metric = ratio_metric(el_tx.get(pair.beams[0], 0.0),
                                  el_tx.get(pair.beams[1], 0.0),
                                  axis="elevation", pair=pair)
            est.mu_x = invert_ratio(metric.value, pair.center_mu, pair.delta)
            est.pairs["elevation"] = pair
            est.zetas["elevation"] = metric.value

    arrays = codebooks.config.arrays if codebooks is not None else channel.arrays
    for est in paths:
        if math.isnan(est.mu_x):
            est.mu_x = 0.0 if codebooks is None else \
                0.5 * sum(codebooks.config.el_range)
        _fill_angles(est, arrays)

    iters = probing_plan.n_rf * (probing_plan.n_t + extra_tx_probings) \
        * probing_plan.m_rf * probing_plan.m_t
    return EstimationReport(paths=paths, iterations=iters, scheme="abp",
                            strengths={"tx": tx_s, "rx": rx_s})


def _coverage_probings(codebooks: CodebookSet, axis: str, n_rf: int) -> int:
    per_pol = max(len(codebooks.domain(axis)[p]) for p in codebooks.pols)
    slots = n_rf // 2 if codebooks.config.arrays.polarization_mode == "cross" else n_rf
    slots = max(slots, 1)
    return max(1, math.ceil(per_pol / slots))


def _elevation_stage(codebooks: CodebookSet, mu_az: float, plan: ProbingPlan,
                     pilots: PilotAssignment, seed: int, n_t: int):
    """Rebuild the elevation codebook pointed at the azimuth estimate and
    derive a matching probing plan and pilot assignment."""
    cbs = build_codebooks(codebooks.config, fixed_az_mu=mu_az)
    layout = "split-half" if (codebooks.config.arrays.polarization_mode == "cross"
                              and plan.n_rf % 2 == 0) else "free"
    el_plan = random_probing_plan(cbs, n_t, plan.m_t, plan.n_rf, plan.m_rf,
                                  seed, layout=layout, tx_axis="elevation")
    el_pairs = enumerate_abps(cbs, "elevation")
    el_pilots = assign_pilots(el_pairs, pilots.n, p=pilots.p,
                              coprime_with=pilots.coprime_with,
                              dc_zero=pilots.dc_zero)
    return el_plan, el_pilots, el_pairs


def _pairs_from_plan(plan: ProbingPlan):
    """Reconstruct pair lists from the beams present in a plan (used when no
    codebook set is supplied)."""
    def build(beams: set[Beam], axis: str) -> list[AuxiliaryBeamPair]:
        pairs = []
        next_id = 0
        for pol in ("v", "h"):
            pol_beams = sorted((b for b in beams if b.polarization == pol
                                and b.axis == axis), key=lambda b: b.boresight_mu)
            for lo, hi in zip(pol_beams, pol_beams[1:]):
                delta = 0.5 * (hi.boresight_mu - lo.boresight_mu)
                pairs.append(AuxiliaryBeamPair(
                    abp_id=next_id, beams=(lo, hi), axis=axis,
                    center_mu=0.5 * (lo.boresight_mu + hi.boresight_mu),
                    delta=delta))
                next_id += 1
        return pairs

    tx = {b for probing in plan.tx_beams for b in probing}
    rx = {b for probing in plan.rx_beams for b in probing}
    axis = next(iter(tx)).axis if tx else "azimuth"
    return build(tx, axis), build(rx, "receive")
