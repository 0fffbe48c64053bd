"""Coupling-rule library: odd sector-bounded functions on [-(pi+delta), pi+delta].

A coupling rule sigma must be odd and satisfy sign(s) * sigma(s) > 0 for all
s != 0 on its domain.  Built-in families:

- "sign":            sigma(s) = sign(s), with sigma(0) = 0 as the selection;
                     the set-valued regularization at 0 is [-1, 1].
- "ramp":            sigma(s) = slope * s / (pi + delta); the default slope
                     of 1 normalizes the rule to +-1 at the domain endpoints,
                     slope = pi + delta gives the identity ramp.
- "sine_plus_ramp":  sigma(s) = sin(s) + w * s / (pi + delta).  The ramp term
                     restores the sector condition that a bare sine loses for
                     |s| > pi; the weight is checked at construction.
- "table":           odd function sampled on [0, pi+delta] (first knot at
                     s = 0), mirrored by oddness, linear interpolation.

For discontinuous rules the regularization at a jump point is the closed
convex hull of the one-sided limits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_GRID_POINTS = 4001
_ODDNESS_TOL = 1e-12


class CouplingError(ValueError):
    """Raised for invalid coupling constructions or domain violations."""


@dataclass(frozen=True)
class RegularizedValue:
    """Closed interval of admissible coupling values at a point."""

    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, v: float) -> bool:
        return self.lo <= v <= self.hi


@dataclass
class ValidationReport:
    """Outcome of the oddness / sector checks for a coupling rule."""

    passed: bool
    oddness_defect: float
    sector_levels: list[tuple[float, float]]
    witness: float | None = None
    detail: str = ""

    def __str__(self) -> str:
        lines = [
            f"passed: {self.passed}",
            f"oddness_defect: {self.oddness_defect:.3e}",
        ]
        for eps, inf_val in self.sector_levels:
            lines.append(f"sector_inf[|s|>={eps:.6f}]: {inf_val:.6e}")
        if self.witness is not None:
            lines.append(f"witness_s: {self.witness:.6f}")
        if self.detail:
            lines.append(f"detail: {self.detail}")
        return "\n".join(lines)


@dataclass(frozen=True)
class CouplingSpec:
    """A coupling rule: family name, half-width delta, family parameters.

    ``params`` holds plain floats; a "table" family additionally carries its
    knots in ``table`` as ((s, value), ...) with s[0] == 0 and
    s[-1] == pi + delta.
    """

    family: str
    delta: float
    params: tuple[tuple[str, float], ...] = ()
    table: tuple[tuple[float, float], ...] = ()
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def domain_limit(self) -> float:
        """pi + delta, the half-width of dom sigma."""
        return math.pi + self.delta

    @property
    def param_dict(self) -> dict[str, float]:
        return dict(self.params)

    def _table_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if "knots" not in self._cache:
            arr = np.asarray(self.table, dtype=float)
            self._cache["knots"] = (arr[:, 0].copy(), arr[:, 1].copy())
        return self._cache["knots"]


FAMILIES = ("sign", "ramp", "sine_plus_ramp", "table")


def make_coupling(
    family: str,
    delta: float,
    params: dict[str, float] | None = None,
    table=None,
    validate: bool = True,
) -> CouplingSpec:
    """Construct and (for built-ins) validate a coupling rule.

    delta must lie in (0, pi).  "sine_plus_ramp" is rejected here if its
    weight is too small to keep the sector condition on (pi, pi+delta];
    "table" rules are checked for monotone knots and oddness feasibility but
    their sector condition is left to validate_property1 so the CLI can
    report failures instead of crashing.
    """
    if family not in FAMILIES:
        raise CouplingError(f"unknown coupling family {family!r}; expected one of {FAMILIES}")
    if not (0.0 < delta < math.pi):
        raise CouplingError(f"delta must be in (0, pi), got {delta}")
    params = dict(params or {})
    if family == "sine_plus_ramp":
        params.setdefault("w", 0.5)
    if family == "ramp":
        params.setdefault("slope", 1.0)
        if params["slope"] <= 0.0:
            raise CouplingError("ramp slope must be positive")
    tbl: tuple[tuple[float, float], ...] = ()
    if family == "table":
        if table is None:
            raise CouplingError("family 'table' requires sample knots")
        tbl = tuple((float(s), float(v)) for s, v in table)
        s_vals = [s for s, _ in tbl]
        if len(tbl) < 2:
            raise CouplingError("table needs at least two knots")
        if s_vals[0] != 0.0:
            raise CouplingError("table must start at s = 0")
        if any(b <= a for a, b in zip(s_vals, s_vals[1:])):
            raise CouplingError("table knots must be strictly increasing")
        if abs(s_vals[-1] - (math.pi + delta)) > 1e-9:
            raise CouplingError(
                f"last table knot must be pi + delta = {math.pi + delta:.12f}, got {s_vals[-1]}"
            )
        # sector violations (e.g. negative values) are left to validate_property1
        # so they surface as a report with a witness, not a crash
    elif table is not None:
        raise CouplingError(f"family {family!r} does not accept a table")

    spec = CouplingSpec(family, float(delta), tuple(sorted(params.items())), tbl)
    if validate and family == "sine_plus_ramp":
        report = validate_property1(spec)
        if not report.passed:
            raise CouplingError(
                "sine_plus_ramp weight w too small for this delta: "
                f"sector condition fails near s = {report.witness:.4f} "
                f"(need w > sin(delta) = {math.sin(delta):.4f})"
            )
    return spec


def eval_sigma(spec: CouplingSpec, s):
    """Pointwise selection sigma(s); at discontinuities the selection is 0.

    Accepts scalars or arrays.  Raises CouplingError outside
    [-(pi+delta), pi+delta] (tiny rounding excess is tolerated).
    """
    arr = np.asarray(s, dtype=float)
    L = spec.domain_limit
    if np.any(np.abs(arr) > L * (1 + 1e-12) + 1e-12):
        worst = float(np.max(np.abs(arr)))
        raise CouplingError(f"sigma evaluated outside its domain: |s| = {worst} > {L}")
    if spec.family == "sign":
        out = np.sign(arr)
    elif spec.family == "ramp":
        out = spec.param_dict["slope"] * arr / L
    elif spec.family == "sine_plus_ramp":
        w = spec.param_dict["w"]
        out = np.sin(arr) + w * arr / L
    else:
        ts, tv = spec._table_arrays()
        out = np.sign(arr) * np.interp(np.abs(arr), ts, tv)
    if np.isscalar(s) or arr.ndim == 0:
        return float(out)
    return out


def jump_at_zero(spec: CouplingSpec) -> float:
    """Right-hand limit of sigma at 0+; positive iff the rule jumps at 0."""
    if spec.family == "sign":
        return 1.0
    if spec.family == "table":
        return float(spec.table[0][1])
    return 0.0


def eval_krasovskii(spec: CouplingSpec, s: float) -> RegularizedValue:
    """Set-valued regularization: the closed hull of limit values at s.

    Built-in rules are continuous away from 0, so the interval is a singleton
    except at a jump of sign/table rules at the origin.
    """
    if s == 0.0:
        v0 = jump_at_zero(spec)
        return RegularizedValue(-v0, v0)
    v = eval_sigma(spec, s)
    return RegularizedValue(v, v)


def validate_property1(spec: CouplingSpec, grid_points: int = _GRID_POINTS) -> ValidationReport:
    """Check oddness and the positive-sector condition on a dense grid.

    Oddness: max |sigma(s) + sigma(-s)| <= 1e-12.  Sector: for 10 thresholds
    eps_k = (pi+delta) * k/10, the infimum of sign(s)*sigma(s) over grid
    points with |s| in [eps_k, pi+delta] must be strictly positive.  Failure
    is a report outcome, not an exception.
    """
    L = spec.domain_limit
    # build the grid from an exact mirror of the positive half so s = 0 is
    # exact and s[k] == -s[-1-k] holds bitwise; a plain linspace over [-L, L]
    # can put a stray -1e-16 at the midpoint and fool oddness checks of
    # discontinuous rules
    half = np.linspace(0.0, L, (grid_points + 1) // 2)
    s = np.concatenate((-half[:0:-1], half))
    vals = eval_sigma(spec, s)
    defect = float(np.max(np.abs(vals + vals[::-1])))
    pos = s > 0
    sector = np.where(pos, vals, -vals)  # sign(s)*sigma(s) for s != 0
    levels = []
    witness = None
    ok = defect <= _ODDNESS_TOL
    for k in range(1, 11):
        eps = L * k / 10.0
        mask = np.abs(s) >= eps - 1e-15
        mask &= s != 0.0
        inf_val = float(np.min(sector[mask]))
        levels.append((eps, inf_val))
        if inf_val <= 0.0:
            ok = False
            if witness is None:
                idx = np.flatnonzero(mask)
                witness = float(abs(s[idx[np.argmin(sector[mask])]]))
    detail = "" if ok else "sector condition violated" if witness is not None else "oddness defect too large"
    return ValidationReport(ok, defect, levels, witness, detail)


def sector_mu(spec: CouplingSpec) -> float | None:
    """Uniform lower bound min_{s != 0} |sigma(s)|, or None if it is zero.

    Positive only for rules that jump at the origin (e.g. sign, where it
    equals 1).  Certified on a dense grid together with the jump limits.
    """
    v0 = jump_at_zero(spec)
    if v0 <= 1e-9:
        return None
    L = spec.domain_limit
    s = np.linspace(L / _GRID_POINTS, L, _GRID_POINTS)
    grid_min = float(np.min(np.abs(eval_sigma(spec, s))))
    return min(v0, grid_min)


def sigma_sup_c(spec: CouplingSpec) -> float:
    """Supremum c of |sigma| over the domain, hull endpoints included."""
    if spec.family == "sign":
        return 1.0
    if spec.family == "ramp":
        return float(spec.param_dict["slope"])
    if spec.family == "table":
        return float(max(abs(v) for _, v in spec.table))
    L = spec.domain_limit
    s = np.linspace(0.0, L, _GRID_POINTS)
    return max(float(np.max(np.abs(eval_sigma(spec, s)))), jump_at_zero(spec))


def antiderivative(spec: CouplingSpec, z):
    """Integral of sigma(sat(s)) from 0 to z, where sat clips to the domain.

    Even and nondecreasing in |z|; defined for all real z because the
    integrand saturates at sigma(+-(pi+delta)) beyond the domain.  Built-in
    families use closed forms; tables integrate their piecewise-linear
    interpolant exactly.
    """
    arr = np.abs(np.asarray(z, dtype=float))
    L = spec.domain_limit
    inner = np.minimum(arr, L)
    over = arr - inner
    if spec.family == "sign":
        core = inner
        edge_slope = 1.0
    elif spec.family == "ramp":
        g = spec.param_dict["slope"]
        core = g * inner**2 / (2.0 * L)
        edge_slope = g
    elif spec.family == "sine_plus_ramp":
        w = spec.param_dict["w"]
        core = (1.0 - np.cos(inner)) + w * inner**2 / (2.0 * L)
        edge_slope = math.sin(L) + w
    else:
        ts, tv = spec._table_arrays()
        seg = 0.5 * (tv[1:] + tv[:-1]) * np.diff(ts)
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        idx = np.clip(np.searchsorted(ts, inner, side="right") - 1, 0, len(ts) - 2)
        s0 = ts[idx]
        v0 = tv[idx]
        slope = (tv[idx + 1] - tv[idx]) / (ts[idx + 1] - ts[idx])
        ds = inner - s0
        core = cum[idx] + v0 * ds + 0.5 * slope * ds**2
        edge_slope = float(tv[-1])
    out = core + edge_slope * over
    if np.isscalar(z) or np.asarray(z).ndim == 0:
        return float(out)
    return out


def antiderivative_quad(spec: CouplingSpec, z: float, tol: float = 1e-10) -> float:
    """Adaptive-quadrature reference for antiderivative(), used by audits."""
    from scipy.integrate import quad

    L = spec.domain_limit
    a = abs(float(z))

    def integrand(s):
        return eval_sigma(spec, min(s, L))

    points = [p for p in (L,) if p < a]
    val, _ = quad(integrand, 0.0, a, points=points or None, epsabs=tol, epsrel=tol, limit=200)
    return val
