"""Command-line interface.

Every subcommand writes a table (CSV with a header row, or JSON) to stdout
or ``--output``. Exit status: 0 success, 2 invalid input, 3 a numerical
result was flagged as non-convergent.

Statistics are given in a small declarative language:

    poly:a0,a1,a2   a0 + a1 x + a2 x^2
    pow:p           x^p
    chebyshev:k     Chebyshev polynomial T_k
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from typing import Iterable

import click
import numpy as np

from . import covariance as cov
from . import kernel
from . import montecarlo as mc
from .errors import ConvergenceError, NonFiniteError, RieszDomainError
from .expansion import cosine_coeffs, gegenbauer_coeffs, parse_statistic
from .special import Regime

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DIVERGENT = 3


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _json_value(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render(rows: list[dict], fmt: str) -> str:
    """CSV (header + rows) or JSON text; floats keep full round-trip precision."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = list(rows[0].keys()) if rows else []
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])
        return buf.getvalue()
    data = [{k: _json_value(v) for k, v in r.items()} for r in rows]
    payload = data[0] if len(data) == 1 else data
    return json.dumps(payload) + "\n"


def emit(rows: list[dict], fmt: str, destination: str) -> None:
    text = render(rows, fmt)
    if destination in ("-", None):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(destination, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise click.FileError(destination, hint=str(exc)) from exc


def _output_options(fn):
    fn = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True,
                      help="Output format.")(fn)
    fn = click.option("--output", "-o", default="-", show_default=True, help="Output path, '-' for stdout.")(fn)
    return fn


class _Guard:
    """Turns library exceptions into exit codes."""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            return False
        if issubclass(exc_type, (RieszDomainError, NonFiniteError)):
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INVALID)
        if issubclass(exc_type, ConvergenceError):
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DIVERGENT)
        return False


def _finish(rows, fmt, output, converged: bool = True):
    emit(rows, fmt, output)
    if not converged:
        click.echo("warning: result flagged as non-convergent", err=True)
        sys.exit(EXIT_DIVERGENT)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Limiting covariances of linear statistics for the 1D Riesz gas on [-1, 1]."""


@main.command("variance-power-sum")
@click.option("--s", "s", type=float, required=True, help="Riesz exponent.")
@click.option("--p", "p", type=int, required=True, help="Power p of the statistic sum x_j^p.")
@click.option("--beta", type=float, default=1.0, show_default=True, help="Inverse temperature.")
@click.option("--form", type=click.Choice(["closed", "even-alt", "series"]), default="closed", show_default=True,
              help="closed: product-of-gammas form (odd/even p); even-alt: even-p sigma_2^2 alpha_p(s) form; "
                   "series: Gegenbauer series with exact monomial coefficients.")
@click.option("--conjectural", is_flag=True, help="Allow -2 < s < -1 (conjectured extension).")
@_output_options
def variance_power_sum(s, p, beta, form, conjectural, output, fmt):
    """Limiting variance of sum_j x_j^p.

    Closed form: sgn(s) Gamma(s) cos(pi s/2) / (pi beta 2^{s-2} (s+2p)) times
    (Gamma(p/2+1)/Gamma((s+p+1)/2))^2 for odd p, or
    ((p/2) Gamma((p+1)/2)/Gamma((s+p)/2+1))^2 for even p.
    """
    with _Guard():
        params = cov.ModelParameters(beta, s, conjectural)
        if form == "closed":
            est = cov.closed_form_power_sum(p, params)
        elif form == "even-alt":
            est = cov.closed_form_ls25_even(p, params)
        else:
            from .expansion import LinearStatistic

            fc = gegenbauer_coeffs(LinearStatistic.power(p), s)
            est = cov.covariance_series(fc, fc, params)
        _finish([est.as_row()], fmt, output, est.converged)


def _stat_options(fn):
    fn = click.option("--g", "g_spec", default=None, help="Second statistic (defaults to --f).")(fn)
    fn = click.option("--f", "f_spec", required=True, help="Statistic: poly:a0,a1,.. | pow:p | chebyshev:k.")(fn)
    return fn


@main.command("covariance")
@click.option("--s", "s", type=float, required=True, help="Riesz exponent, |s| < 1.")
@_stat_options
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--nmax", type=int, default=None, help="Highest Gegenbauer degree (default 64, or the polynomial degree).")
@click.option("--route", type=click.Choice(["series", "structure"]), default="series", show_default=True,
              help="series: sgn(s)/beta sum (h_n/lambda_n) f_n g_n with exact coefficients; "
                   "structure: smear the smoothed density-density correlation against f and g by quadrature.")
@_output_options
def covariance_cmd(s, f_spec, g_spec, beta, nmax, route, output, fmt):
    """Limiting Cov(F, G) from the Gegenbauer series in C_n^{(s/2)}.

    Dispatches to the cosine formula at s = 0 and the derivative formula at s = -1.
    """
    with _Guard():
        f = parse_statistic(f_spec)
        g = parse_statistic(g_spec) if g_spec else f
        params = cov.ModelParameters(beta, s)
        if route == "structure" and params.exponent.regime is Regime.GENERAL:
            est = kernel.smoothed_covariance_via_structure(f, g, params, nmax or 64)
        else:
            est = cov.covariance(f, g, params, nmax)
        _finish([est.as_row()], fmt, output, est.converged)


@main.command("covariance-log")
@_stat_options
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--nmax", type=int, default=64, show_default=True)
@_output_options
def covariance_log(f_spec, g_spec, beta, nmax, output, fmt):
    """Log-gas (s = 0) covariance (2/beta) sum_n n f_n^c g_n^c with cosine coefficients."""
    with _Guard():
        f = parse_statistic(f_spec)
        g = parse_statistic(g_spec) if g_spec else f
        est = cov.covariance_log_gas(cosine_coeffs(f, nmax), cosine_coeffs(g, nmax), beta)
        _finish([est.as_row()], fmt, output, est.converged)


@main.command("covariance-linear")
@_stat_options
@click.option("--beta", type=float, default=1.0, show_default=True)
@_output_options
def covariance_linear(f_spec, g_spec, beta, output, fmt):
    """Linear-potential (s = -1) covariance (1/(2 beta)) int f'(x) g'(x) dx."""
    with _Guard():
        f = parse_statistic(f_spec)
        g = parse_statistic(g_spec) if g_spec else f
        est = cov.covariance_linear_potential(f, g, beta)
        _finish([est.as_row()], fmt, output, est.converged)


@main.command("kernel-check")
@click.option("--s", "s", type=float, required=True)
@click.option("--u", type=float, required=True)
@click.option("--y", type=float, required=True)
@click.option("--nmax", type=int, multiple=True, default=(16, 64, 256), show_default=True,
              help="Truncation degree; repeat for a convergence table.")
@_output_options
def kernel_check(s, u, y, nmax, output, fmt):
    """Partial sums of |u-y|^{-s} = sum_n (lambda_n/h_n) C_n(u) C_n(y) against the kernel itself."""
    with _Guard():
        exact = abs(u - y) ** (-s)
        rows = []
        for n in nmax:
            val = kernel.kernel_expansion_partial(u, y, s, n)
            rows.append({"u": u, "y": y, "nmax": n, "partial_sum": val, "exact": exact, "abs_error": abs(val - exact)})
        _finish(rows, fmt, output)


@main.command("eigen-check")
@click.option("--s", "s", type=float, required=True)
@click.option("--n-max", "n_max", type=int, default=10, show_default=True)
@click.option("--points", type=int, default=21, show_default=True, help="Number of u points in [-0.95, 0.95].")
@click.option("--order", type=int, default=256, show_default=True)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@_output_options
def eigen_check(s, n_max, points, order, tol, output, fmt):
    """Residual of int (1-y^2)^{(s-1)/2} |u-y|^{-s} C_n(y) dy = lambda_n C_n(u), n = 0..n-max."""
    with _Guard():
        grid = np.linspace(-0.95, 0.95, points)
        rows = []
        ok = True
        for n in range(n_max + 1):
            r = kernel.eigen_relation_residual(n, s, grid, order)
            ok &= r < tol
            rows.append({"n": n, "lambda_n": float(kernel.eigen_lambda(s, n)), "residual": r, "pass": r < tol})
        _finish(rows, fmt, output, ok)


@main.command("density-response")
@click.option("--s", "s", type=float, required=True, help="Exponent; 0 selects the logarithmic kernel.")
@click.option("--u", "u_spec", required=True, help="Perturbing potential, same syntax as statistics.")
@click.option("--nmax", type=int, default=64, show_default=True)
@click.option("--points", type=int, default=21, show_default=True)
@_output_options
def density_response(s, u_spec, nmax, points, output, fmt):
    """Density shift screening a one-body potential u.

    s != 0: -sgn(s) (1-x^2)^{(s-1)/2} sum_n (1/(h_n lambda_n)) <C_n, u> C_n(x).
    s = 0: -(2/(pi^2 sin t)) sum_p p (int_0^pi u(cos a) cos(p a) da) cos(p t).
    """
    with _Guard():
        u_fn = parse_statistic(u_spec)
        if s == 0.0:
            resp = kernel.density_response_log(u_fn, nmax)
        else:
            resp = kernel.density_response_general(u_fn, s, nmax)
        x = np.linspace(-1.0, 1.0, points + 2)[1:-1]
        vals = resp(x)
        _finish([{"x": float(a), "response": float(b)} for a, b in zip(x, vals)], fmt, output)


@main.command("density")
@click.option("--s", "s", type=float, required=True)
@click.option("--points", type=int, default=41, show_default=True)
@_output_options
def density(s, points, output, fmt):
    """Box-wall equilibrium density (1-x^2)^{(s-1)/2} / (2^s B((s+1)/2, (s+1)/2))."""
    with _Guard():
        x = np.linspace(-1.0, 1.0, points + 2)[1:-1]
        vals = kernel.equilibrium_density(s, x)
        _finish([{"x": float(a), "density": float(b)} for a, b in zip(x, vals)], fmt, output)


def _mc_options(fn):
    opts = [
        click.option("--s", "s", type=float, required=True),
        click.option("--beta", type=float, default=1.0, show_default=True),
        click.option("--n-particles", type=int, default=100, show_default=True),
        click.option("--sweeps", type=int, default=20000, show_default=True, help="Total sweeps incl. burn-in."),
        click.option("--burn-in", type=int, default=2000, show_default=True),
        click.option("--chains", type=int, default=1, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--step-width", type=float, default=0.05, show_default=True,
                     help="Initial proposal half-width (tuned during burn-in)."),
        click.option("--batches", type=int, default=mc.DEFAULT_BATCHES, show_default=True,
                     help="Batch-means batches per chain."),
    ]
    for o in reversed(opts):
        fn = o(fn)
    return fn


@main.command("mc-covariance")
@_mc_options
@click.option("--f", "f_spec", default="pow:1", show_default=True)
@click.option("--g", "g_spec", default=None)
@click.option("--trace", default=None, help="Write per-sweep F, G traces to this CSV path.")
@_output_options
def mc_covariance(s, beta, n_particles, sweeps, burn_in, chains, seed, step_width, batches, f_spec, g_spec, trace,
                  output, fmt):
    """Metropolis estimate of Cov(sum f(x_j), sum g(x_j)) for finite N, weight exp(-beta sum Phi_s)."""
    with _Guard():
        f = parse_statistic(f_spec)
        g = parse_statistic(g_spec) if g_spec else f
        params = cov.ModelParameters(beta, s, conjectural=s < -1.0)
        res = mc.run_parallel(chains, params, n_particles, sweeps, burn_in, step_width, seed, f, g,
                              n_batches=batches, trace=trace)
        _finish([res.as_row()], fmt, output)


@main.command("mc-density")
@_mc_options
@click.option("--bins", type=int, default=40, show_default=True)
@_output_options
def mc_density(s, beta, n_particles, sweeps, burn_in, chains, seed, step_width, batches, bins, output, fmt):
    """Metropolis one-body density histogram, to compare with the box-wall profile."""
    with _Guard():
        params = cov.ModelParameters(beta, s, conjectural=s < -1.0)
        res = mc.run_parallel(chains, params, n_particles, sweeps, burn_in, step_width, seed,
                              bins=bins, n_batches=batches)
        _finish(res.histogram.rows(), fmt, output)


@main.command("appendix-check")
@click.option("--s", "s", type=float, required=True)
@click.option("--theta", type=float, default=1.0, show_default=True)
@click.option("--phi", type=float, default=2.0, show_default=True)
@click.option("--n", "n", type=int, default=3, show_default=True, help="Eigenfunction degree.")
@click.option("--h", "h", type=float, default=1e-3, show_default=True)
@click.option("--tol", type=float, default=1e-5, show_default=True)
@_output_options
def appendix_check(s, theta, phi, n, h, tol, output, fmt):
    """Finite-difference checks of the Calogero-Sutherland operator
    -d^2/dt^2 + (s/2)(s/2-1)/sin^2 t: the kernel-function identity and the
    eigenvalues (s/2)^2 + n(n+s).
    """
    with _Guard():
        k_res = kernel.kernel_identity_residual(theta, phi, s, h)
        grid = np.linspace(0.3, np.pi - 0.3, 15)
        e_res = kernel.schrodinger_eigen_check(n, s, grid, h)
        k_ord = kernel.richardson_orders(lambda hh: kernel.kernel_identity_residual(theta, phi, s, hh, relative=False),
                                         0.08, 3)
        rows = [
            {"check": "kernel_identity", "residual": abs(k_res), "observed_order": float(np.min(k_ord)),
             "pass": abs(k_res) < tol},
            {"check": f"eigenfunction_n{n}", "residual": e_res, "observed_order": float(np.min(
                kernel.richardson_orders(lambda hh: kernel.schrodinger_eigen_check(n, s, [0.9, 1.3, 2.2], hh), 0.08, 3))),
             "pass": e_res < tol},
        ]
        _finish(rows, fmt, output, all(r["pass"] for r in rows))


@main.command("asymptotics")
@click.option("--s", "s", type=float, required=True)
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--p", "ps", type=int, multiple=True, default=(1, 10, 100, 1000), show_default=True)
@click.option("--pair-y", type=float, default=None,
              help="Instead of power sums, the variance of f(x) = Phi_s(x, y) at this y.")
@click.option("--nmax", type=int, default=4096, show_default=True, help="Terms for --pair-y partial sums.")
@_output_options
def asymptotics(s, beta, ps, pair_y, nmax, output, fmt):
    """Large-p form sgn(s) cos(pi s/2)/(4 pi beta) (2/p)^s next to the exact power-sum variance.

    With --pair-y: partial sums of sgn(s)/beta sum_n (lambda_n/h_n) C_n(y)^2 and a
    convergence verdict (divergent for s > 0, exit status 3).
    """
    with _Guard():
        params = cov.ModelParameters(beta, s)
        if pair_y is not None:
            est = cov.pair_potential_statistic_variance(pair_y, params, nmax)
            row = {"y": pair_y, **est.as_row()}
            _finish([row], fmt, output, est.converged)
            return
        rows = []
        for p in ps:
            exact = cov.closed_form_power_sum(p, params).value
            asym = cov.large_p_asymptotic(p, params)
            rows.append({"p": p, "closed_form": exact, "asymptotic": float(asym), "ratio": exact / float(asym)})
        _finish(rows, fmt, output)


if __name__ == "__main__":  # pragma: no cover
    main()
