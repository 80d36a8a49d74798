"""Experiment drivers: convergence, noise, timing and single decompositions.

Every driver returns an :class:`ErrorReport`, whose CSV form starts with
``#`` header lines describing kernel, rho rule, h-mode and point source.
Numeric output is deterministic for a fixed config and seed; wall times are
only written by the timing driver.
"""
from __future__ import annotations

import configparser
import logging
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy.linalg import cho_solve

from .errors import ConfigError, MissingPointSet
from .point_sets import (
    PointSet,
    default_points_dir,
    fibonacci_points,
    find_point_file,
    load_points,
    mesh_norm,
    random_points,
)
from .quasi_interp import (
    DecompositionResult,
    VectorFieldSamples,
    kernel_apply,
    kernel_apply_batch,
    qi_decompose,
)
from .sbf_baseline import assemble, interp_eval, solve
from .test_fields import get_field
from .zonal_kernels import KernelFamily, fourier_coeffs, kernel_for_order, make_kernel

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "ErrorReport",
    "l2_error",
    "l2_errors",
    "rmse",
    "run_convergence",
    "run_noise",
    "run_timing",
    "kernel_info",
    "load_config",
    "DEFAULT_C",
    "STD_SEQUENCE",
]

FOUR_PI = 4.0 * np.pi
STD_SEQUENCE = (1434, 2852, 5780, 12092, 24978)
#: rho = c h^p constants per family and order
DEFAULT_C = {
    "gaussian": {2: 0.4, 4: 0.75, 6: 1.0, 8: 1.25},
    "we32": {2: 1.6, 4: 3.2, 6: 4.3, 8: 6.4},
    "we31": {2: 1.6, 4: 3.2, 6: 4.3, 8: 6.4},
    "poisson": {1: 0.4},
}


def _floats(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).replace(",", " ").split())


def _ints(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(float(v)) for v in str(text).replace(",", " ").split())


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of the experiment drivers.

    ``c_values`` aligns with ``orders``; empty means the family defaults.
    ``h_mode`` is ``"proxy"`` (``h = N^-1/2``) or ``"measured"`` (fill
    distance on a covering grid).  ``point_source`` is ``auto`` (files from
    ``points_dir`` when present, Fibonacci otherwise), ``file``,
    ``fibonacci`` or ``random``.
    """

    field: str = "field1"
    family: str = "gaussian"
    orders: tuple = (2, 4, 6, 8)
    c_values: tuple = ()
    rho_power: float = 0.5
    h_mode: str = "proxy"
    point_source: str = "auto"
    points_dir: str | None = None
    n_list: tuple = STD_SEQUENCE
    eval_size: int = 52978
    noise_levels: tuple = (0.001, 0.01, 0.1, 0.5)
    realizations: int = 30
    seed: int = 0
    methods: tuple = ("qi", "sbf")
    sbf_max_n: int = 6000
    sbf_n_list: tuple = (500, 1000, 2000, 4000)
    repeats: int = 5
    target_error: float = 1e-3
    backend: str | None = None

    def __post_init__(self):
        try:
            KernelFamily(self.family)
        except ValueError:
            raise ConfigError(f"unknown kernel family {self.family!r}") from None
        if self.h_mode not in ("proxy", "measured"):
            raise ConfigError("h_mode must be 'proxy' or 'measured'")
        if self.point_source not in ("auto", "file", "fibonacci", "random"):
            raise ConfigError(f"unknown point source {self.point_source!r}")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if self.eval_size < 1 or not self.n_list:
            raise ConfigError("eval_size and n_list must be non-empty")
        if any(n < 1 for n in self.n_list):
            raise ConfigError("node counts must be positive")
        if self.c_values and len(self.c_values) != len(self.orders):
            raise ConfigError("c_values must align with orders")
        for c in self.constants().values():
            if not c > 0:
                raise ConfigError("rho constants c must be positive")
        if any(d < 0 for d in self.noise_levels):
            raise ConfigError("noise levels must be non-negative")
        try:
            get_field(self.field)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None

    def constants(self) -> dict:
        if self.c_values:
            return dict(zip(self.orders, self.c_values))
        table = DEFAULT_C[self.family]
        missing = [m for m in self.orders if m not in table]
        if missing:
            raise ConfigError(f"no default rho constant for orders {missing} of {self.family}")
        return {m: table[m] for m in self.orders}

    def rho_rule(self) -> str:
        cs = ",".join(f"m{m}:{c:g}" for m, c in self.constants().items())
        return f"rho=c*h^{self.rho_power:g} ({cs})"


def _coerce(name: str, value):
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    kind = kinds[name]
    if name in ("orders", "n_list", "sbf_n_list"):
        return _ints(value)
    if name in ("c_values", "noise_levels"):
        return _floats(value)
    if name == "methods":
        return tuple(str(value).replace(",", " ").split()) if isinstance(value, str) else tuple(value)
    if "float" in str(kind):
        return float(value)
    if "int" in str(kind) and "None" not in str(kind):
        return int(value)
    if value in ("", "none", "None"):
        return None
    return str(value)


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Config from an INI-style key=value file, then ``overrides``.

    All sections are merged; later keys win.  Unknown keys raise
    :class:`ConfigError`.
    """
    values: dict = {}
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        for section in parser.sections():
            values.update(parser.items(section))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        kwargs = {k: _coerce(k, v) for k, v in values.items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(**kwargs)


# --- reports ---------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "nan" if np.isnan(v) else repr(float(v))
    return str(v)


@dataclass
class ErrorReport:
    """Rows of results plus ``#`` metadata lines."""

    columns: tuple
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, **row) -> None:
        self.rows.append(row)

    def column(self, name: str, **where) -> np.ndarray:
        sel = [r for r in self.rows if all(r.get(k) == v for k, v in where.items())]
        return np.array([r[name] for r in sel], dtype=float)

    def to_csv(self, path=None) -> str:
        lines = [f"# {k}: {v}" for k, v in self.meta.items()]
        lines.append(",".join(self.columns))
        for r in self.rows:
            lines.append(",".join(_fmt(r.get(c, "")) for c in self.columns))
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def consecutive_rates(h, err) -> np.ndarray:
    """``log(e_{i-1}/e_i) / log(h_{i-1}/h_i)``; first entry NaN."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    rates = np.full(len(err), np.nan)
    if len(err) > 1:
        rates[1:] = np.log(err[:-1] / err[1:]) / np.log(h[:-1] / h[1:])
    return rates


def fitted_rate(h, err) -> float:
    """Least-squares slope of ``log err`` against ``log h``."""
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


# --- error metrics ---------------------------------------------------------

def _sq_norms(diff: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", diff, diff)


def l2_error(exact, approx) -> float:
    """``sqrt(4 pi / |Y| * sum_y ||f(y) - s(y)||^2)`` over the eval grid.

    ``exact`` is an array of exact values or a callable field evaluated at
    ``approx.eval_points``; ``approx`` is a :class:`DecompositionResult` or
    an array of approximations.
    """
    if isinstance(approx, DecompositionResult):
        s = approx.combined
        if callable(exact):
            exact = exact(approx.eval_points).f
    else:
        s = np.asarray(approx, dtype=float)
    diff = np.asarray(exact, dtype=float) - s
    if len(diff) == 0:
        raise ValueError("empty evaluation grid")
    return float(np.sqrt(FOUR_PI / len(diff) * np.sum(_sq_norms(diff))))


def l2_errors(field_fn, result: DecompositionResult) -> tuple[float, float, float]:
    """Combined, divergence-free and curl-free errors of a decomposition."""
    ex = field_fn(result.eval_points)
    return (
        l2_error(ex.f, result.combined),
        l2_error(ex.div, result.div),
        l2_error(ex.curl, result.curl),
    )


def rmse(exact, approx) -> float:
    """Root mean square of ``||f(y) - s(y)||`` over the grid."""
    diff = np.asarray(exact, dtype=float) - np.asarray(approx, dtype=float)
    return float(np.sqrt(np.mean(_sq_norms(diff))))


# --- point sets and parameters ----------------------------------------------

def resolve_points(config: ExperimentConfig, N: int) -> PointSet:
    src = config.point_source
    directory = config.points_dir or default_points_dir()
    if src in ("auto", "file"):
        if directory is not None:
            try:
                return load_points(find_point_file(directory, N))
            except MissingPointSet:
                if src == "file":
                    raise
        elif src == "file":
            raise MissingPointSet("point_source=file needs points_dir")
        log.info("no point file for N=%d, using Fibonacci nodes", N)
        return fibonacci_points(N)
    if src == "random":
        return random_points(N, config.seed)
    return fibonacci_points(N)


def eval_grid(config: ExperimentConfig) -> np.ndarray:
    return fibonacci_points(config.eval_size).nodes


def spacing(config: ExperimentConfig, points: PointSet) -> float:
    if config.h_mode == "measured":
        return mesh_norm(points)
    return float(points.N) ** -0.5


def _rho(config: ExperimentConfig, c: float, h: float) -> float:
    return c * h ** config.rho_power


def _kernel(family, rho: float, order: int):
    # an infeasible schedule (e.g. a Wendland scale above 2) is a config error
    try:
        if order == "base":
            return make_kernel(family, rho)
        return kernel_for_order(family, rho, order)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"kernel {family} order {order} at rho={rho:.4g}: {exc}") from None


def _meta(config: ExperimentConfig, sources, **extra) -> dict:
    meta = {
        "field": config.field,
        "kernel": f"{config.family} orders {','.join(str(m) for m in config.orders)}",
        "rho_rule": config.rho_rule(),
        "h_mode": config.h_mode,
        "point_source": "; ".join(sorted(set(sources))),
        "eval_grid": f"fibonacci {config.eval_size}",
    }
    meta.update(extra)
    return meta


# --- drivers ----------------------------------------------------------------

def run_convergence(config: ExperimentConfig, output=None) -> ErrorReport:
    """QI errors for every order and node count; one row per (m, N)."""
    fld = get_field(config.field)
    Y = eval_grid(config)
    exact = fld(Y)
    report = ErrorReport(columns=(
        "m", "N", "h", "rho", "error_combined", "error_div", "error_curl", "rate",
    ))
    sources = []
    point_cache = {}
    for N in config.n_list:
        P = resolve_points(config, N)
        point_cache[N] = (P, spacing(config, P), fld(P.nodes).f)
        sources.append(P.source if not P.source.startswith("file:") else "file")
    for m, c in config.constants().items():
        hs, errs = [], []
        for N in config.n_list:
            P, h, vals = point_cache[N]
            kernel = _kernel(config.family, _rho(config, c, h), m)
            res = qi_decompose(kernel, VectorFieldSamples(P, vals), Y, config.backend)
            e_c = l2_error(exact.f, res.combined)
            e_d = l2_error(exact.div, res.div)
            e_r = l2_error(exact.curl, res.curl)
            hs.append(h)
            errs.append(e_c)
            report.add(m=m, N=P.N, h=h, rho=kernel.rho, error_combined=e_c,
                       error_div=e_d, error_curl=e_r, rate=np.nan)
            log.info("m=%d N=%d rho=%.4g error=%.4e", m, P.N, kernel.rho, e_c)
        rates = consecutive_rates(hs, errs)
        for row, r in zip(report.rows[-len(rates):], rates):
            row["rate"] = r
    report.meta = _meta(config, sources)
    if output is not None:
        report.to_csv(output)
    return report


def _noise_kernel(config: ExperimentConfig):
    m = config.orders[-1]
    return m, config.constants()[m]


def run_noise(config: ExperimentConfig, output=None) -> ErrorReport:
    """Mean RMSE of QI and SBF under ambient Gaussian noise.

    QI uses the highest configured order; SBF uses the family's base kernel
    at the same rho and is skipped above ``sbf_max_n``.  Realization ``r``
    at node count ``N`` draws a standard normal array ``z`` from a seed
    derived from ``(seed, N, r)``; the noise is ``delta * z`` for every
    ``delta``, so both methods and all levels see the same draws.
    """
    fld = get_field(config.field)
    Y = eval_grid(config)
    exact = fld(Y).f
    m, c = _noise_kernel(config)
    report = ErrorReport(columns=(
        "method", "delta", "N", "h", "rho", "rmse_mean", "rmse_std", "realizations",
    ))
    sources = []
    for N in config.n_list:
        P = resolve_points(config, N)
        sources.append(P.source if not P.source.startswith("file:") else "file")
        h = spacing(config, P)
        rho = _rho(config, c, h)
        clean = fld(P.nodes).f
        draws = []
        for r in range(config.realizations):
            rng = np.random.default_rng([config.seed, N, r])
            draws.append(rng.standard_normal((P.N, 3)))
        if "qi" in config.methods:
            kernel = _kernel(config.family, rho, m)
            w = P.quadrature_weights()
            d0, c0 = kernel_apply(kernel, Y, P.nodes, clean, w, config.backend)
            base = d0 + c0
            dz, cz = kernel_apply_batch(kernel, Y, P.nodes, np.stack(draws), w, config.backend)
            resp = list(dz + cz)
            _noise_rows(report, "qi", config, N, h, kernel.rho, exact, base, resp)
        if "sbf" in config.methods and N <= config.sbf_max_n:
            kernel = _kernel(config.family, rho, "base")
            system = solve(assemble(kernel, VectorFieldSamples(P, clean), config.backend))
            d0, c0 = interp_eval(system, Y, config.backend)
            base = d0 + c0
            C = np.stack([replace(system, coeffs=_resolve(system, z)).tangent_coeffs() for z in draws])
            dz, cz = kernel_apply_batch(kernel, Y, P.nodes, C, np.ones(P.N), config.backend)
            resp = list(dz + cz)
            _noise_rows(report, "sbf", config, N, h, kernel.rho, exact, base, resp)
        elif "sbf" in config.methods:
            log.info("SBF skipped at N=%d (sbf_max_n=%d)", N, config.sbf_max_n)
    report.meta = _meta(config, sources, noise_kernel_qi=f"{config.family} m{m}",
                        noise_kernel_sbf=f"{config.family} base, same rho",
                        sbf_max_n=config.sbf_max_n, seed=config.seed)
    if output is not None:
        report.to_csv(output)
    return report


def _resolve(system, z) -> np.ndarray:
    # coefficients for new data on an already factorised system
    rhs = np.empty(2 * system.N)
    rhs[0::2] = np.einsum("ij,ij->i", system.e1, z)
    rhs[1::2] = np.einsum("ij,ij->i", system.e2, z)
    return cho_solve(system.factor, rhs, check_finite=False)


def _noise_rows(report, method, config, N, h, rho, exact, base, responses):
    for delta in config.noise_levels:
        vals = np.array([rmse(exact, base + delta * resp) for resp in responses])
        report.add(method=method, delta=delta, N=N, h=h, rho=rho,
                   rmse_mean=float(np.mean(vals)), rmse_std=float(np.std(vals)),
                   realizations=len(vals))
        log.info("%s delta=%g N=%d rmse=%.4e", method, delta, N, np.mean(vals))


def _median_time(fn, repeats: int) -> tuple[float, object]:
    out = fn()  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times)), out


def run_timing(config: ExperimentConfig, output=None) -> ErrorReport:
    """Wall times of QI (``n_list``) and SBF (``sbf_n_list``) with errors.

    QI time is the full kernel summation on the eval grid.  SBF reports
    assembly, Cholesky solve and evaluation separately; ``t_total`` sums the
    stages.  Header lines carry the fitted log-log exponents and the time
    each method needs to reach ``target_error``.
    """
    fld = get_field(config.field)
    Y = eval_grid(config)
    exact = fld(Y).f
    m, c = _noise_kernel(config)
    report = ErrorReport(columns=(
        "method", "N", "rho", "error", "t_assemble", "t_solve", "t_eval", "t_total",
    ))
    sources = []
    if "qi" in config.methods:
        for N in config.n_list:
            P = resolve_points(config, N)
            sources.append(P.source if not P.source.startswith("file:") else "file")
            kernel = _kernel(config.family, _rho(config, c, spacing(config, P)), m)
            samples = VectorFieldSamples(P, fld(P.nodes).f)
            t, res = _median_time(
                lambda: qi_decompose(kernel, samples, Y, config.backend, check=False),
                config.repeats,
            )
            err = l2_error(exact, res.combined)
            report.add(method="qi", N=N, rho=kernel.rho, error=err, t_assemble=0.0,
                       t_solve=0.0, t_eval=t, t_total=t)
            log.info("qi N=%d t=%.3fs error=%.3e", N, t, err)
    if "sbf" in config.methods:
        for N in config.sbf_n_list:
            P = resolve_points(config, N)
            sources.append(P.source if not P.source.startswith("file:") else "file")
            kernel = _kernel(config.family, _rho(config, c, spacing(config, P)), "base")
            samples = VectorFieldSamples(P, fld(P.nodes).f)
            ta, system = _median_time(lambda: assemble(kernel, samples, config.backend),
                                      config.repeats)
            ts, system = _median_time(lambda: solve(system), config.repeats)
            te, (d, cc) = _median_time(lambda: interp_eval(system, Y, config.backend),
                                       config.repeats)
            err = l2_error(exact, d + cc)
            report.add(method="sbf", N=N, rho=kernel.rho, error=err, t_assemble=ta,
                       t_solve=ts, t_eval=te, t_total=ta + ts + te)
            log.info("sbf N=%d solve=%.3fs error=%.3e", N, ts, err)
    extra = {"repeats": config.repeats, "target_error": config.target_error}
    for method, col in (("qi", "t_total"), ("sbf", "t_solve")):
        n = report.column("N", method=method)
        if len(n) >= 2:
            extra[f"exponent_{method}_{col}"] = round(fitted_rate(n, report.column(col, method=method)), 4)
        t_hit = time_to_target(report, method, config.target_error)
        if t_hit is not None:
            extra[f"time_to_target_{method}"] = f"{t_hit[0]:.6g} ({t_hit[1]})"
    report.meta = _meta(config, sources, **extra)
    if output is not None:
        report.to_csv(output)
    return report


def time_to_target(report: ErrorReport, method: str, target: float):
    """Total time at which ``method`` reaches ``target`` error.

    Returns ``(seconds, how)`` where ``how`` is ``"measured"`` when some run
    reached the target (the cheapest such run), ``"extrapolated"`` when the
    log-log work-precision fit over all runs had to be extended, or ``None``
    without data.
    """
    err = report.column("error", method=method)
    tot = report.column("t_total", method=method)
    if len(err) == 0:
        return None
    hit = err <= target
    if np.any(hit):
        return float(tot[hit].min()), "measured"
    if len(err) < 2:
        return None
    slope, icpt = np.polyfit(np.log(err), np.log(tot), 1)
    return float(np.exp(icpt + slope * np.log(target))), "extrapolated"


def kernel_info(family: str, order: int, rho: float, L: int, output=None) -> ErrorReport:
    """Fourier-Legendre coefficients ``psi_hat(0..L)`` as a report."""
    kernel = _kernel(family, rho, order)
    coeffs = fourier_coeffs(kernel, L)
    report = ErrorReport(columns=("ell", "coeff"))
    for ell, v in enumerate(coeffs.values):
        report.add(ell=ell, coeff=float(v))
    report.meta = {"kernel": kernel.label, "rho": repr(kernel.rho), "L": L}
    if output is not None:
        report.to_csv(output)
    return report
