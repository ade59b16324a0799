"""Multi-layer Zadoff-Chu pilots.

A beam-pair id selects the ZC root and the within-pair beam id selects a
frequency circular shift, so simultaneously probed beams stay separable by
zero-lag correlation against per-beam references. Includes the analytic
interference bounds used to sanity-check the separation.
"""

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_ROOT_POOL = (25, 29, 34)


class InvalidRoot(ValueError):
    pass


class PoolExhausted(ValueError):
    pass


class ShiftConflict(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


def _check_root(root: int, n: int, modulus: int) -> None:
    if root < 1:
        raise InvalidRoot(f"root {root} must be positive")
    if math.gcd(root, modulus) != 1:
        raise InvalidRoot(f"root {root} shares a factor with {modulus}")


def _modulus_for(n: int, coprime_with: str) -> int:
    if coprime_with not in ("n", "n_minus_1"):
        raise ValueError("coprime_with must be 'n' or 'n_minus_1'")
    return n if coprime_with == "n" else n - 1


def zc_symbol(root: int, b: int, p: int, n: int, k: int,
              coprime_with: str = "n") -> complex:
    """exp(j*pi*root*(k + p*b)(k + p*b + 1)/n). Integer phase arithmetic is
    reduced mod 2n before the complex exponential to keep precision.
    coprime_with picks the root-validity modulus (n, or the n-1 variant some
    deployments use with a nulled subcarrier)."""
    _check_root(root, n, _modulus_for(n, coprime_with))
    if not 0 <= k < n:
        raise ValueError("subcarrier index out of range")
    kk = k + p * b
    m = (root * kk * (kk + 1)) % (2 * n)
    return complex(np.exp(1j * np.pi * m / n))


def zc_sequence(root: int, b: int, p: int, n: int, dc_zero: bool = False,
                coprime_with: str = "n") -> np.ndarray:
    """Length-n pilot sequence; dc_zero nulls the centered DC subcarrier."""
    _check_root(root, n, _modulus_for(n, coprime_with))
    kk = np.arange(n, dtype=np.int64) + p * b
    m = (root * kk * (kk + 1)) % (2 * n)
    seq = np.exp(1j * np.pi * m / n)
    if dc_zero:
        seq[n // 2] = 0.0
    return seq


@dataclass(frozen=True)
class PilotRef:
    root: int
    b: int
    p: int
    n: int
    dc_zero: bool = False
    coprime_with: str = "n"

    def sequence(self) -> np.ndarray:
        return zc_sequence(self.root, self.b, self.p, self.n, self.dc_zero,
                           self.coprime_with)

    @property
    def active_count(self) -> int:
        return self.n - (1 if self.dc_zero else 0)


@dataclass
class PilotAssignment:
    """Roots keyed by beam-pair id; both beams of a pair share the root and
    differ only in the shift id b."""

    n: int
    p: int
    roots: dict[int, int]
    coprime_with: str = "n"
    dc_zero: bool = False
    n_p: int = 2
    delta_b_max: int = 1

    def ref(self, abp_id: int, b: int) -> PilotRef:
        if b not in (0, 1):
            raise ValueError("paired-beam id must be 0 or 1")
        return PilotRef(self.roots[abp_id], b, self.p, self.n, self.dc_zero,
                        self.coprime_with)

    def sequence(self, abp_id: int, b: int) -> np.ndarray:
        return self.ref(abp_id, b).sequence()

    @property
    def p_max(self) -> int:
        return self.n // self.n_p


def _shift_ok(p: int, roots: list[int], n: int, delta_b_max: int) -> bool:
    for root in roots:
        for db in range(1, delta_b_max + 1):
            if (root * p * db) % n == 0:
                return False
    return True


def _extend_pool(base: tuple[int, ...], count: int, modulus: int) -> list[int]:
    pool = [r for r in base if math.gcd(r, modulus) == 1]
    cand = max(base) + 1 if base else 2
    while len(pool) < count:
        if math.gcd(cand, modulus) == 1 and cand not in pool:
            pool.append(cand)
        cand += 1
    return pool


def assign_pilots(abps, n: int, root_pool=None, p: int | None = None,
                  coprime_with: str = "n", dc_zero: bool = False) -> PilotAssignment:
    """Give each beam pair a distinct root and pick (or verify) the circular
    shift spacing p so same-root different-shift correlations cancel.

    abps may be pair objects with abp_id attributes or plain ids. coprime_with
    selects the root validity modulus: 'n' (the correlation-cancellation
    requirement) or 'n_minus_1' (an alternative convention kept as an option).
    """
    if coprime_with not in ("n", "n_minus_1"):
        raise ValueError("coprime_with must be 'n' or 'n_minus_1'")
    ids = [a if isinstance(a, int) else a.abp_id for a in abps]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate beam-pair ids")
    modulus = n if coprime_with == "n" else n - 1

    if root_pool is None:
        pool = _extend_pool(DEFAULT_ROOT_POOL, len(ids), modulus)
    else:
        pool = list(root_pool)
        for root in pool:
            _check_root(root, n, modulus)
        if len(pool) < len(ids):
            raise PoolExhausted(f"{len(ids)} pairs need {len(ids)} roots, pool has {len(pool)}")
    roots = {abp_id: pool[i] for i, abp_id in enumerate(sorted(ids))}
    used = list(roots.values())

    n_p, db_max = 2, 1
    p_max = n // n_p
    if p is not None:
        if not 1 <= p <= p_max:
            raise ShiftConflict(f"p={p} outside 1..{p_max}")
        if not _shift_ok(p, used, n, db_max):
            raise ShiftConflict(f"p={p} makes a same-root correlation non-zero")
        chosen = p
    else:
        chosen = next((q for q in range(1, p_max + 1) if _shift_ok(q, used, n, db_max)), None)
        if chosen is None:
            raise ShiftConflict(f"no shift spacing in 1..{p_max} separates roots {used}")
    return PilotAssignment(n=n, p=chosen, roots=roots, coprime_with=coprime_with,
                           dc_zero=dc_zero, n_p=n_p, delta_b_max=db_max)


def correlate_zero_lag(received: np.ndarray, ref: PilotRef,
                       normalized: bool = False) -> complex:
    """sum_k Y[k] * x*[k] against the reference pilot; normalized divides by
    the number of active subcarriers."""
    y = np.asarray(received)
    if y.shape != (ref.n,):
        raise LengthMismatch(f"expected length {ref.n}, got {y.shape}")
    val = complex(np.sum(y * ref.sequence().conj()))
    return val / ref.active_count if normalized else val


@dataclass
class CorrelationReport:
    """Zero-lag correlations per (receive branch, reference); optional bound
    values attached by interference_bounds."""

    values: np.ndarray
    refs: list[PilotRef]
    bounds: dict[str, float] = field(default_factory=dict)


def correlate_probing(received: np.ndarray, refs: list[PilotRef],
                      normalized: bool = False) -> CorrelationReport:
    """received is (n_subcarriers, n_branches); returns (n_branches, n_refs)
    correlation values."""
    y = np.atleast_2d(np.asarray(received))
    if y.shape[0] != refs[0].n:
        raise LengthMismatch(f"expected {refs[0].n} subcarriers, got {y.shape[0]}")
    x = np.column_stack([r.sequence() for r in refs])
    vals = y.T @ x.conj()
    if normalized:
        vals = vals / np.array([r.active_count for r in refs])[None, :]
    return CorrelationReport(values=vals, refs=list(refs))


@dataclass(frozen=True)
class FlatGains:
    """Frequency-flat effective gains for the analytic bound formulas:
    sum over paths of rho * h for the co-pol and cross-pol blocks."""

    chi: float
    sum_rho_h_vv: complex
    sum_rho_h_vh: complex
    n_rf: int


def interference_bounds(assignment: PilotAssignment, gains: FlatGains) -> dict[str, float]:
    """Upper bounds on the matched term and the three interference terms of
    the zero-lag correlator under flat gains: same pair and shift (i0), same
    root different shift (i1, zero when the shift spacing is valid), other
    roots same polarization (i2), other polarization (i3)."""
    n = assignment.n
    q = np.sqrt(1.0 / (1.0 + gains.chi))
    avv = abs(gains.sum_rho_h_vv)
    avh = abs(gains.sum_rho_h_vh)
    zero_ok = _shift_ok(assignment.p, list(assignment.roots.values()), n,
                        assignment.delta_b_max)
    n_e = max(gains.n_rf // 2 - 1, 0)
    return {
        "i0": n * q * avv,
        "i1": 0.0 if zero_ok else n * q * avv,
        "i2": q * avv * n_e * np.sqrt(n),
        "i3": q * avh * (gains.n_rf / 2.0) * np.sqrt(n),
    }


def dump_pilot_csv(assignment: PilotAssignment, path: str) -> None:
    lines = ["abp_id,root,b,p"]
    for abp_id in sorted(assignment.roots):
        for b in (0, 1):
            lines.append(f"{abp_id},{assignment.roots[abp_id]},{b},{assignment.p}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
