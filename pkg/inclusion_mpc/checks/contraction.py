"""Contraction and envelope battery.

Properties checked, per builtin environment where it applies:

- optimality: one forward-backward contraction equals the brute-force hull on scalar
  instances with one or two control monomials
- soundness: after an episode's worth of data the inclusion contains the true f, g, xdot
  and Jacobians at random probes
- data monotonicity: enclosure widths never grow as samples arrive
- tier monotonicity: more side information never widens an enclosure
- inconsistency: a sample outside the declared bounds is rejected
- audit: declared side information holds on the truth
"""

from __future__ import annotations

import logging

import numpy as np

from inclusion_mpc.checks.base import BaseCheck
from inclusion_mpc.errors import InconsistentData
from inclusion_mpc.harness.environments import TIERS, Environment
from inclusion_mpc.inclusion.contract import contract_layers, control_monomials
from inclusion_mpc.inclusion.differential import DiffInclusion
from inclusion_mpc.interval import FloatArray, IntervalArray, IntervalVector
from inclusion_mpc.models import CheckResult, DataPoint, Dataset

logger = logging.getLogger(__name__)

GRID_STEP = 1e-3
WIDTH_TOL = 1e-9
JACOBIAN_TOL = 1e-5
FD_STEP = 1e-6
PROBE_RADIUS = 0.05
# refinement stops at a sweep tolerance, so tiers can settle a little apart
TIER_SLACK = 1e-3


def _probe_boxes(env: Environment, rng: np.random.Generator, count: int) -> IntervalArray:
    centers = env.sample_states(count, rng)
    lo = np.maximum(centers - PROBE_RADIUS, env.state_box.lo)
    hi = np.minimum(centers + PROBE_RADIUS, env.state_box.hi)
    return IntervalArray(lo, hi)


def _points_in(rng: np.random.Generator, boxes: IntervalArray) -> FloatArray:
    t = rng.uniform(0.0, 1.0, size=boxes.shape)
    return np.clip(boxes.lo + t * (boxes.hi - boxes.lo), boxes.lo, boxes.hi)


def _widths(di: DiffInclusion, boxes: IntervalArray) -> FloatArray:
    enc_f, enc_g = di.terms(boxes)
    q = boxes.shape[0]
    return np.concatenate([enc_f.width().reshape(q, -1), enc_g.width().reshape(q, -1)], axis=1)


def _true_jacobians(env: Environment, x: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Central-difference Jacobians of f (Q, n, n) and g (Q, d, n, n)."""
    jf = np.empty((x.shape[0], env.n, env.n))
    jg = np.empty((x.shape[0], env.d, env.n, env.n))
    for col in range(env.n):
        e = np.zeros(env.n)
        e[col] = FD_STEP
        jf[..., col] = (env.f(x + e) - env.f(x - e)) / (2 * FD_STEP)
        if env.d:
            jg[..., col] = (env.g(x + e) - env.g(x - e)) / (2 * FD_STEP)
    return jf, jg


def _brute_hull(
    xdot: float, mu: FloatArray, f_box: tuple[float, float], g_boxes: FloatArray
) -> FloatArray | None:
    """Hull of feasible (f, g_1..g_d) with g on a grid and f solved from the sum.

    Returns rows [lo, hi] for f then each g, or None when no grid point is feasible.
    """
    axes = [np.arange(lo, hi + GRID_STEP / 2, GRID_STEP).clip(lo, hi) for lo, hi in g_boxes]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    f = xdot - mesh @ mu
    ok = (f >= f_box[0]) & (f <= f_box[1])
    if not np.any(ok):
        return None
    values = np.column_stack([f[ok], mesh[ok]])
    return np.stack([values.min(axis=0), values.max(axis=0)], axis=1)


class ContractionCheck(BaseCheck):
    """Data contraction and envelope refinement against the truth."""

    name = "contraction"

    def run(self) -> list[CheckResult]:
        results = [self._optimality(d) for d in (1, 2)]
        for env in self.environments:
            data = env.sample_dataset(self.count(50, minimum=5), self.rng(10, env.name))
            inclusions = {
                tier: DiffInclusion.from_data(env.side_info(tier), data) for tier in TIERS
            }
            for tier, di in inclusions.items():
                results.append(self._soundness(env, tier, di))
            results.append(self._jacobians(env, inclusions["constraints"]))
            results.append(self._data_monotonicity(env, data))
            results.append(self._tier_monotonicity(env, inclusions))
            results.append(self._inconsistent(env))
            results.append(self._audit(env))
        return results

    def _optimality(self, d: int) -> CheckResult:
        """Scalar instances: contraction against the grid hull, width-0.2 domains."""
        rng = self.rng(11, d)
        count = self.count(100, minimum=5)
        exponents = ((1,), (2,))[:d]
        u = rng.uniform(-2.0, 2.0, size=(count, 1))
        mu_box = control_monomials(IntervalArray.point(u), exponents)  # (B, d)
        mu = mu_box.lo

        f_true = rng.uniform(-1.0, 1.0, size=count)
        g_true = rng.uniform(-1.0, 1.0, size=(count, d))
        xdot = f_true + np.sum(g_true * mu, axis=1)
        f_lo = f_true - rng.uniform(0.001, 0.199, size=count)
        f_hi = f_lo + 0.2
        # g_true sits on the brute-force grid
        g_lo = g_true - GRID_STEP * rng.integers(0, 201, size=(count, d))
        g_hi = g_lo + 0.2

        new_f, new_g = contract_layers(
            IntervalArray.point(xdot.reshape(count, 1)),
            mu_box,
            IntervalArray.full((count, 1, 1), 1.0, 1.0),
            IntervalArray.full((count, 1, d, 1), 1.0, 1.0),
            IntervalArray(f_lo.reshape(count, 1, 1), f_hi.reshape(count, 1, 1)),
            IntervalArray(g_lo.reshape(count, 1, d, 1), g_hi.reshape(count, 1, d, 1)),
        )
        failures: list[int] = []
        worst = 0.0
        for i in range(count):
            hull = _brute_hull(
                float(xdot[i]), mu[i], (f_lo[i], f_hi[i]), np.column_stack([g_lo[i], g_hi[i]])
            )
            if hull is None:
                failures.append(i)
                continue
            got = np.array(
                [[new_f.lo[i, 0, 0], new_f.hi[i, 0, 0]]]
                + [[new_g.lo[i, 0, p, 0], new_g.hi[i, 0, p, 0]] for p in range(d)]
            )
            scale = 1.0 + float(np.max(np.abs(got)))
            tol = np.array([GRID_STEP * float(np.sum(np.abs(mu[i])))] + [GRID_STEP] * d)
            tol = tol + 4 * np.finfo(float).eps * scale
            # sound: the grid hull lies inside; optimal: it is no wider than resolution
            outer = np.all(got[:, 0] <= hull[:, 0] + tol) and np.all(
                got[:, 1] >= hull[:, 1] - tol
            )
            gap = np.maximum(hull[:, 0] - got[:, 0], got[:, 1] - hull[:, 1])
            worst = max(worst, float(np.max(gap - tol)))
            if not outer or np.any(gap > tol):
                failures.append(i)
        return self.result(
            not failures,
            f"d={d}: {len(failures)} of {count} contractions differ from the grid hull",
            {"instances": count, "failures": failures[:20], "worst_excess": worst},
            identifier=f"d={d}",
            prop="optimality",
        )

    def _soundness(self, env: Environment, tier: str, di: DiffInclusion) -> CheckResult:
        rng = self.rng(12, env.name, tier)
        probes = self.count(1000, minimum=20)
        x = env.sample_states(probes, rng)
        u = env.sample_controls(probes, rng)
        h = di.eval_batch(IntervalArray.point(x), IntervalArray.point(u))
        misses = int(np.sum(~np.all(h.contains(env.xdot(x, u)), axis=-1)))

        boxes = _probe_boxes(env, rng, probes)
        inside = _points_in(rng, boxes)
        enc_f, enc_g = di.terms(boxes)
        misses += int(np.sum(~np.all(enc_f.contains(env.f(inside)), axis=-1)))
        if env.d:
            g_in = enc_g.contains(env.g(inside))
            misses += int(np.sum(~np.all(g_in.reshape(probes, -1), axis=-1)))
        return self.result(
            misses == 0,
            f"{env.name}/{tier}: {misses} probes outside the inclusion",
            {"probes": 2 * probes, "misses": misses, "mean_width": di.mean_width()},
            identifier=f"{env.name}/{tier}",
            prop="soundness",
        )

    def _jacobians(self, env: Environment, di: DiffInclusion) -> CheckResult:
        rng = self.rng(13, env.name)
        boxes = _probe_boxes(env, rng, self.count(20, minimum=3))
        misses = 0
        for i in range(boxes.shape[0]):
            box = boxes[i]
            assert isinstance(box, IntervalVector)
            jf, jg = di.jacobians(box)
            jf, jg = jf.inflate(0.0, JACOBIAN_TOL), jg.inflate(0.0, JACOBIAN_TOL)
            x = _points_in(rng, box.broadcast_to((5, env.n)))
            true_f, true_g = _true_jacobians(env, x)
            misses += int(np.sum(~jf.contains(true_f)))
            if env.d:
                misses += int(np.sum(~jg.contains(true_g)))
        return self.result(
            misses == 0,
            f"{env.name}: {misses} Jacobian entries outside their enclosures",
            {"boxes": boxes.shape[0], "misses": misses},
            identifier=env.name,
            prop="jacobian_soundness",
        )

    def _data_monotonicity(self, env: Environment, data: Dataset) -> CheckResult:
        boxes = _probe_boxes(env, self.rng(14, env.name), self.count(100, minimum=5))
        di = DiffInclusion.seeded(env.side_info("lipschitz"))
        previous = _widths(di, boxes)
        violations: list[int] = []
        for index, point in enumerate(data):
            di = di.refined(point, data, sample_index=index)
            widths = _widths(di, boxes)
            if np.any(widths > previous + WIDTH_TOL):
                violations.append(index)
            previous = widths
        return self.result(
            not violations,
            f"{env.name}: widths grew after {len(violations)} of {len(data)} samples",
            {"samples": len(data), "violations": violations[:20]},
            identifier=env.name,
            prop="data_monotonicity",
        )

    def _tier_monotonicity(
        self, env: Environment, inclusions: dict[str, DiffInclusion]
    ) -> CheckResult:
        boxes = _probe_boxes(env, self.rng(15, env.name), self.count(100, minimum=5))
        widths = [_widths(inclusions[tier], boxes) for tier in TIERS]
        violations = [
            f"{TIERS[k]}->{TIERS[k + 1]}"
            for k in range(len(TIERS) - 1)
            if np.any(widths[k + 1] > widths[k] * (1.0 + TIER_SLACK) + WIDTH_TOL)
        ]
        means = {tier: float(np.mean(w)) for tier, w in zip(TIERS, widths, strict=True)}
        return self.result(
            not violations,
            f"{env.name}: tier widths " + " >= ".join(f"{means[t]:.4g}" for t in TIERS),
            {"mean_widths": means, "violations": violations},
            identifier=env.name,
            prop="tier_monotonicity",
        )

    def _inconsistent(self, env: Environment) -> CheckResult:
        """A derivative beyond M (1 + sum |u^alpha|) cannot come from the declared class."""
        side = env.side_info("lipschitz")
        u = env.control_box.hi
        mu = env.monomials(u)
        big = 2.0 * side.global_bound * (1.0 + float(np.sum(np.abs(mu)))) + 1.0
        point = DataPoint(x=env.state_box.mid(), xdot=np.full(env.n, big), u=u)
        data = Dataset()
        data.append(point, 0.0)
        try:
            DiffInclusion.seeded(side).refined(point, data, sample_index=0)
        except InconsistentData as e:
            return self.result(
                e.sample_index == 0,
                f"{env.name}: sample rejected ({e.detail})",
                {"sample_index": e.sample_index},
                identifier=env.name,
                prop="inconsistent",
            )
        return self.result(
            False,
            f"{env.name}: a derivative of {big:.3g} was accepted",
            identifier=env.name,
            prop="inconsistent",
        )

    def _audit(self, env: Environment) -> CheckResult:
        problems = env.audit_side_info(n_samples=self.count(2000, minimum=100), seed=self.seed)
        return self.result(
            not problems,
            f"{env.name}: declared side information "
            + ("holds" if not problems else f"violated ({len(problems)} findings)"),
            {"problems": problems},
            identifier=env.name,
            prop="audit",
        )
