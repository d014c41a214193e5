"""Closed-form convergence analytics for the outage-compensated learner.

For a device class with gradient Jacobian J (symmetric positive definite),
step size alpha, outage probability q and compensation quality delta, the
per-step error contraction factor is

    sqrt(1 + q * delta) * sigma,    sigma = max_i |1 - alpha * lambda_i|,

with lambda_i the eigenvalues of J.  The system can drive every device's
expected squared error to zero whenever the worst class factor stays below
one (the capability condition).  The optimal step size 2/(lmax + lmin)
minimizes sigma; it remains admissible as long as the condition number
lmax/lmin stays below (sqrt(1+q*delta)+1)/(sqrt(1+q*delta)-1).

The expected epochs needed to shrink the error by 1/e (the learning time
constant) follow from the squared contraction factor:

    tau = -1 / (2 * ln(sqrt(1 + q*delta) * sigma*)),

taken per class and maximized over classes for the system-level constant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import EigenResult, require_symmetric, spectral_norm_shifted, sym_eigen

# A class whose smallest eigenvalue is this far below the largest is
# treated as singular: the theory assumes strictly positive eigenvalues.
_SINGULAR_RTOL = 1e-12


@dataclass
class DeviceClassTheory:
    """Spectral facts of one device class plus its outage-quality product."""

    jacobian: np.ndarray
    eigen: EigenResult
    lambda_max: float
    lambda_min: float
    condition_number: float
    q_delta: float

    @property
    def is_singular(self) -> bool:
        return self.lambda_min <= _SINGULAR_RTOL * self.lambda_max


def make_class_theory(jacobian, q_delta: float = 0.0) -> DeviceClassTheory:
    if q_delta < 0.0:
        raise ValueError(f"q_delta must be nonnegative, got {q_delta}")
    jac = require_symmetric(jacobian, what="jacobian")
    eig = sym_eigen(jac)
    lmax, lmin = eig.lambda_max, eig.lambda_min
    cond = lmax / lmin if lmin > 0 else math.inf
    return DeviceClassTheory(
        jacobian=jac,
        eigen=eig,
        lambda_max=lmax,
        lambda_min=lmin,
        condition_number=cond,
        q_delta=q_delta,
    )


@dataclass
class CapabilityResult:
    """Verdict of the capability condition.

    capable is None ("indeterminate") when some class Jacobian is singular;
    margins holds sqrt(1 + q*delta) * sigma per class (the condition needs
    every margin < 1).
    """

    capable: bool | None
    margins: list[float]
    diagnostics: list[str] = field(default_factory=list)


def capability_check(classes: list[DeviceClassTheory], alphas: list[float]) -> CapabilityResult:
    """Evaluate the worst-class contraction margin at the given step sizes."""
    if len(classes) != len(alphas):
        raise ValueError("need one alpha per class")
    margins: list[float] = []
    diagnostics: list[str] = []
    indeterminate = False
    for k, (cls, alpha) in enumerate(zip(classes, alphas)):
        if cls.is_singular:
            indeterminate = True
            diagnostics.append(
                f"class {k}: jacobian is singular (lambda_min={cls.lambda_min:.3e}); "
                "capability is indeterminate"
            )
        sigma = spectral_norm_shifted(cls.jacobian, alpha)
        margins.append(math.sqrt(1.0 + cls.q_delta) * sigma)
    capable = None if indeterminate else bool(max(margins) < 1.0)
    return CapabilityResult(capable=capable, margins=margins, diagnostics=diagnostics)


def optimal_alpha(cls: DeviceClassTheory) -> tuple[float, bool]:
    """Step size minimizing the contraction factor, and its admissibility.

    Returns 2 / (lmax + lmin).  The flag is True when the condition number
    is below (sqrt(1+q*delta)+1)/(sqrt(1+q*delta)-1); for q*delta = 0 the
    bound is infinite so any finite condition number qualifies.  Equal
    eigenvalues (condition number exactly one) are treated as admissible
    with a zero contraction factor.
    """
    if cls.lambda_min <= 0.0:
        raise ValueError("optimal step size requires strictly positive eigenvalues")
    alpha_star = 2.0 / (cls.lambda_max + cls.lambda_min)
    root = math.sqrt(1.0 + cls.q_delta)
    if root <= 1.0:
        valid = True
    else:
        bound = (root + 1.0) / (root - 1.0)
        valid = cls.condition_number < bound
    return alpha_star, valid


def sigma_star(cls: DeviceClassTheory) -> float:
    """Contraction factor at the optimal step size.

    Equals (lmax - lmin) / (lmax + lmin); zero when all eigenvalues agree.
    """
    alpha_star, _ = optimal_alpha(cls)
    return spectral_norm_shifted(cls.jacobian, alpha_star)


@dataclass
class TimeConstants:
    per_class: list[float]
    overall: float
    limiting_class: int | None
    incapable_classes: list[int] = field(default_factory=list)


def predicted_time_constant(classes: list[DeviceClassTheory]) -> TimeConstants:
    """Per-class and system 1/e decay times at the optimal step sizes.

    A class whose contraction argument sqrt(1+q*delta)*sigma* reaches one
    gets an infinite constant and is reported as incapable; the system
    constant is then infinite as well.
    """
    per_class: list[float] = []
    incapable: list[int] = []
    for k, cls in enumerate(classes):
        arg = math.sqrt(1.0 + cls.q_delta) * sigma_star(cls)
        if arg >= 1.0:
            per_class.append(math.inf)
            incapable.append(k)
        elif arg == 0.0:
            per_class.append(0.0)
        else:
            per_class.append(-1.0 / (2.0 * math.log(arg)))
    overall = max(per_class) if per_class else math.inf
    limiting = int(np.argmax(per_class)) if per_class else None
    return TimeConstants(
        per_class=per_class,
        overall=overall,
        limiting_class=limiting,
        incapable_classes=incapable,
    )


@dataclass
class BoundCheckResult:
    """Outcome of the empirical error-covariance contraction check."""

    ok: bool
    ratios: np.ndarray
    bound: float
    violations: list[int]
    fraction_satisfied: float


def covariance_bound_check(
    samples,
    cls: DeviceClassTheory,
    alpha: float,
    slack: float | None = None,
) -> BoundCheckResult:
    """Check the per-epoch trace contraction of the error covariance.

    `samples` holds per-replicate deviations of the local model from the
    target, shaped (T+1, R, d).  For each epoch the empirical covariance
    trace (the mean squared deviation across replicates) must contract by
    at least (1 + q*delta) * sigma^2 up to statistical slack, which
    defaults to 4/sqrt(R) relative.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError("samples must have shape (epochs+1, replicates, dim)")
    n_rep = arr.shape[1]
    if n_rep < 30:
        raise ValueError(f"need at least 30 replicates for covariance estimation, got {n_rep}")
    if slack is None:
        slack = 4.0 / math.sqrt(n_rep)
    sigma = spectral_norm_shifted(cls.jacobian, alpha)
    bound = (1.0 + cls.q_delta) * sigma * sigma * (1.0 + slack)
    traces = np.mean(np.sum(arr * arr, axis=-1), axis=1)
    prev = traces[:-1]
    nxt = traces[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(prev > 0.0, nxt / prev, 0.0)
    violations = [int(t) for t in np.nonzero(ratios > bound)[0]]
    fraction = 1.0 - len(violations) / len(ratios) if len(ratios) else 1.0
    return BoundCheckResult(
        ok=not violations,
        ratios=ratios,
        bound=bound,
        violations=violations,
        fraction_satisfied=fraction,
    )


@dataclass
class ClassReport:
    class_index: int
    lambda_max: float
    lambda_min: float
    condition_number: float
    q_delta: float
    alpha: float
    sigma_at_alpha: float
    alpha_star: float
    alpha_star_valid: bool
    sigma_star: float
    margin: float
    tau: float


@dataclass
class TheoryReport:
    """Capability verdict, optimal rates, and time constants per class."""

    classes: list[ClassReport]
    capable: bool | None
    tau: float
    diagnostics: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "capable": self.capable,
            "tau": self.tau,
            "diagnostics": self.diagnostics,
            "classes": [vars(c) for c in self.classes],
        }
        return json.dumps(payload, default=_json_default)

    def format_text(self) -> str:
        lines = []
        for c in self.classes:
            lines.append(
                f"class {c.class_index}: lambda_max={c.lambda_max:.6g} "
                f"lambda_min={c.lambda_min:.6g} condition={c.condition_number:.6g} "
                f"q_delta={c.q_delta:.6g}"
            )
            lines.append(
                f"  alpha={c.alpha:.6g} sigma={c.sigma_at_alpha:.6g} "
                f"margin={c.margin:.6g} alpha_star={c.alpha_star:.6g} "
                f"(valid={c.alpha_star_valid}) sigma_star={c.sigma_star:.6g} "
                f"tau={c.tau:.6g}"
            )
        verdict = {True: "capable", False: "not capable", None: "indeterminate"}[self.capable]
        lines.append(f"overall: {verdict}, tau={self.tau:.6g}")
        lines.extend(self.diagnostics)
        return "\n".join(lines)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def build_theory_report(
    jacobians: list[np.ndarray],
    q: float,
    delta: float = 1.0,
    alpha: float | str = "optimal",
) -> TheoryReport:
    """Full analytic report for a set of class Jacobians.

    alpha may be a shared numeric step size or "optimal" to evaluate each
    class at its own optimal rate.  q*delta feeds both the capability
    margins and the time constants.
    """
    q_delta = q * delta
    classes = [make_class_theory(j, q_delta) for j in jacobians]
    alphas: list[float] = []
    reports: list[ClassReport] = []
    for k, cls in enumerate(classes):
        a_star, valid = optimal_alpha(cls)
        a = a_star if alpha == "optimal" else float(alpha)
        alphas.append(a)
        reports.append(
            ClassReport(
                class_index=k,
                lambda_max=cls.lambda_max,
                lambda_min=cls.lambda_min,
                condition_number=cls.condition_number,
                q_delta=q_delta,
                alpha=a,
                sigma_at_alpha=spectral_norm_shifted(cls.jacobian, a),
                alpha_star=a_star,
                alpha_star_valid=valid,
                sigma_star=sigma_star(cls),
                margin=0.0,
                tau=0.0,
            )
        )
    cap = capability_check(classes, alphas)
    taus = predicted_time_constant(classes)
    for k, rep in enumerate(reports):
        rep.margin = cap.margins[k]
        rep.tau = taus.per_class[k]
    return TheoryReport(
        classes=reports,
        capable=cap.capable,
        tau=taus.overall,
        diagnostics=cap.diagnostics,
    )
