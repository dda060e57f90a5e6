"""Independent checks of the B/P step formulas.

Every Bell-diagonal pair is read as a classical pair of error flags
``(bit, phase)``: index 0 is ``(0, 0)``, 1 is ``(1, 0)``, 2 is ``(1, 1)`` and
3 is ``(0, 1)``. A bilateral XOR copies the control's bit flag onto the
target and the target's phase flag back onto the control. Exact results
come from summing over all flag configurations; stochastic ones from
sampling flag ensembles and running the steps on them.

Monte Carlo draws use numpy's Philox counter-based generator. Samples are
cut into fixed-size shards, each with its own child stream from
``SeedSequence(seed).spawn``, so results depend only on the seed and never
on how many worker processes run the shards.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .boundary import apply_sequence
from .edp import BellDiagonal, DegeneratePostselectionError, b_step, p_step

__all__ = [
    "FLAGS",
    "SHARD_SIZE",
    "enumerate_b",
    "enumerate_p",
    "MCResult",
    "mc_sequence",
    "random_states",
    "Check",
    "run_verification",
]

FLAGS = ((0, 0), (1, 0), (1, 1), (0, 1))
_INDEX = {f: i for i, f in enumerate(FLAGS)}
_BIT = np.array([f[0] for f in FLAGS], dtype=np.uint8)
_PHASE = np.array([f[1] for f in FLAGS], dtype=np.uint8)

SHARD_SIZE = 1 << 16
MIN_SAMPLES = 10_000


def enumerate_b(control: BellDiagonal, target: BellDiagonal) -> tuple[float, BellDiagonal]:
    """B step by summing over the 16 joint flag configurations."""
    cw, tw = control.as_tuple(), target.as_tuple()
    out = [0.0] * 4
    for (ci, (cb, cp)), (ti, (tb, tp)) in itertools.product(enumerate(FLAGS), repeat=2):
        if cb != tb:
            continue
        out[_INDEX[(cb, cp ^ tp)]] += cw[ci] * tw[ti]
    p_s = sum(out)
    if p_s < 1e-300:
        raise DegeneratePostselectionError("parities never agree")
    return p_s, BellDiagonal(*(w / p_s for w in out))


def enumerate_p(state: BellDiagonal) -> BellDiagonal:
    """P step by summing over the 64 trio configurations."""
    w = state.as_tuple()
    out = [0.0] * 4
    for trio in itertools.product(range(4), repeat=3):
        bit = FLAGS[trio[0]][0] ^ FLAGS[trio[1]][0] ^ FLAGS[trio[2]][0]
        phase = int(sum(FLAGS[i][1] for i in trio) >= 2)
        out[_INDEX[(bit, phase)]] += w[trio[0]] * w[trio[1]] * w[trio[2]]
    return BellDiagonal(*out)


@dataclass(frozen=True)
class MCResult:
    """Empirical outcome of a step sequence.

    ``yield_`` is the product over steps of output pairs per input pair
    consumed; ``delta_b``/``delta_p`` are the error fractions among the
    survivors. Standard errors are binomial.
    """

    yield_: float
    yield_se: float
    delta_b: float
    delta_b_se: float
    delta_p: float
    delta_p_se: float
    n_survivors: int
    inconclusive: bool
    step_counts: tuple[tuple[int, int], ...] = field(repr=False, default=())


def _run_shard(args):
    probs, seq, n, seed_seq = args
    rng = np.random.Generator(np.random.Philox(seed_seq))
    idx = rng.choice(4, size=n, p=probs)
    bit, phase = _BIT[idx], _PHASE[idx]
    counts = []
    for token in seq:
        perm = rng.permutation(bit.size)
        bit, phase = bit[perm], phase[perm]
        if token == "B":
            m = bit.size // 2
            cb, tb = bit[:m], bit[m : 2 * m]
            cp, tp = phase[:m], phase[m : 2 * m]
            keep = cb == tb
            counts.append((int(keep.sum()), m))
            bit, phase = cb[keep], (cp ^ tp)[keep]
        else:
            m = bit.size // 3
            b3 = bit[: 3 * m].reshape(3, m)
            p3 = phase[: 3 * m].reshape(3, m)
            counts.append((m, m))
            bit = b3[0] ^ b3[1] ^ b3[2]
            phase = (p3.sum(axis=0, dtype=np.int64) >= 2).astype(np.uint8)
    return counts, int(bit.size), int(bit.sum()), int(phase.sum())


def mc_sequence(
    state: BellDiagonal,
    seq: str,
    n_samples: int = 1_000_000,
    seed: int = 0,
    workers: int = 1,
) -> MCResult:
    """Sample ``n_samples`` flag pairs and run ``seq`` with random pairings."""
    seq = seq.upper()
    if set(seq) - {"B", "P"}:
        raise ValueError(f"step sequence may only contain B and P, got {seq!r}")
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples")
    probs = np.clip(np.array(state.as_tuple(), dtype=float), 0.0, None)
    probs /= probs.sum()
    sizes = [SHARD_SIZE] * (n_samples // SHARD_SIZE)
    if n_samples % SHARD_SIZE:
        sizes.append(n_samples % SHARD_SIZE)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(probs, seq, n, s) for n, s in zip(sizes, seeds)]
    if workers <= 1:
        parts = [_run_shard(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_shard, jobs))

    kept = np.zeros(len(seq), dtype=np.int64)
    formed = np.zeros(len(seq), dtype=np.int64)
    n_surv = n_bit = n_phase = 0
    for counts, s, b, p in parts:
        for k, (a, m) in enumerate(counts):
            kept[k] += a
            formed[k] += m
        n_surv += s
        n_bit += b
        n_phase += p

    y, rel_var = 1.0, 0.0  # python floats keep the result free of numpy scalars
    for token, a, m in zip(seq, kept, formed):
        if m == 0:
            y = 0.0
            continue
        if token == "B":
            frac = int(a) / int(m)
            y *= frac / 2
            if a > 0:
                rel_var += (1 - frac) / (m * frac)
        else:
            y *= 1.0 / 3.0
    if n_surv == 0:
        nan = math.nan
        return MCResult(y, 0.0, nan, nan, nan, nan, 0, True, tuple(zip(kept.tolist(), formed.tolist())))
    db, dp = n_bit / n_surv, n_phase / n_surv
    return MCResult(
        yield_=y,
        yield_se=y * math.sqrt(rel_var),
        delta_b=db,
        delta_b_se=math.sqrt(db * (1 - db) / n_surv),
        delta_p=dp,
        delta_p_se=math.sqrt(dp * (1 - dp) / n_surv),
        n_survivors=n_surv,
        inconclusive=False,
        step_counts=tuple(zip(kept.tolist(), formed.tolist())),
    )


def random_states(n: int, seed: int = 0) -> list[BellDiagonal]:
    """Uniformly random normalized Bell-diagonal states."""
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(4), size=n)
    w[:, 3] = 1.0 - w[:, :3].sum(axis=1)
    return [BellDiagonal(*row) for row in np.clip(w, 0.0, 1.0)]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _max_diff(a: BellDiagonal, b: BellDiagonal) -> float:
    return max(abs(x - y) for x, y in zip(a.as_tuple(), b.as_tuple()))


def _check_b(n: int, seed: int, tol: float) -> Check:
    states = random_states(2 * n, seed)
    worst = 0.0
    for c, t in zip(states[:n], states[n:]):
        p1, o1 = b_step(c, t)
        p2, o2 = enumerate_b(c, t)
        worst = max(worst, abs(p1 - p2), _max_diff(o1, o2))
    return Check("b_step matches enumeration", worst <= tol, f"max deviation {worst:.3g} over {n} pairs")


def _check_p(n: int, seed: int, tol: float) -> Check:
    worst = max(_max_diff(p_step(s), enumerate_p(s)) for s in random_states(n, seed + 1))
    return Check("p_step matches enumeration", worst <= tol, f"max deviation {worst:.3g} over {n} states")


def _check_convention() -> Check:
    # only control->target bit / target->control phase propagation gives
    # q10' = c10 t10 + c11 t11 with the phase of the survivor being an XOR
    c = BellDiagonal(0.5, 0.2, 0.1, 0.2)
    t = BellDiagonal(0.4, 0.1, 0.3, 0.2)
    _, out = enumerate_b(c, t)
    p_s = 0.7 * 0.6 + 0.3 * 0.4
    want = (0.2 * 0.1 + 0.1 * 0.3) / p_s
    ok = abs(out.q10 - want) < 1e-15
    return Check("BXOR propagation convention", ok, f"q10'={out.q10:.15g}, expected {want:.15g}")


def _check_mc(seq: str, state: BellDiagonal, n_samples: int, seed: int, k_sigma: float) -> Check:
    res = mc_sequence(state, seq, n_samples, seed)
    exp_state, exp_yield = apply_sequence(state, seq)
    if res.inconclusive:
        return Check(f"Monte Carlo {seq}", False, "no survivors")
    dev = []
    for got, se, want in (
        (res.yield_, res.yield_se, exp_yield),
        (res.delta_b, res.delta_b_se, exp_state.delta_b),
        (res.delta_p, res.delta_p_se, exp_state.delta_p),
    ):
        dev.append(abs(got - want) / se if se > 0 else (0.0 if got == want else math.inf))
    worst = max(dev)
    return Check(f"Monte Carlo {seq}", worst <= k_sigma, f"largest deviation {worst:.2f} standard errors")


def run_verification(n_states: int = 1000, n_samples: int = 1_000_000, seed: int = 0) -> list[Check]:
    """The full oracle suite; every check must pass on a correct build."""
    s = BellDiagonal(0.8, 0.1, 0.0, 0.1)
    checks = [
        _check_b(n_states, seed, 1e-12),
        _check_p(n_states, seed, 1e-12),
        _check_convention(),
        _check_mc("B", s, n_samples, seed, 5.0),
        _check_mc("P", s, n_samples, seed, 5.0),
        _check_mc("BP", s, n_samples, seed, 5.0),
    ]
    perfect = mc_sequence(BellDiagonal.perfect(), "BBP", MIN_SAMPLES, seed)
    _, y = apply_sequence(BellDiagonal.perfect(), "BBP")
    ok = perfect.yield_ == y and perfect.delta_b == 0 and perfect.delta_p == 0
    checks.append(Check("Monte Carlo perfect input", ok, f"yield {perfect.yield_!r} vs {y!r}"))
    return checks
