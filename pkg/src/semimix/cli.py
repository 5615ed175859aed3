"""Command-line front end.

Artifacts are deterministic for a fixed argv + seed: replication streams
are derived from (seed, block index), JSON key order is fixed, and figure
metadata is pinned.  Usage errors exit with 2, computational failures with
1 (the error name and context go to stderr).
"""

from __future__ import annotations

import functools
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, bounds as bd, io as sio, plots
from .chains import (
    PowerCache,
    StochasticMatrix,
    aggregate_tv,
    embedded_mixing_time,
    mixing_time_sandwich,
    stationary_distribution,
    validate_stochastic,
)
from .errors import ParameterDomainError, SemimixError
from .mittag_leffler import (
    MLEvalConfig,
    fractional_poisson_moments,
    ml_eval_detailed,
    ml_sample_array,
    theta_star,
)
from .process import (
    MixingReport,
    SearchGrid,
    continuous_mixing_time,
    ehrenfest_chain,
    empirical_state_histogram,
    make_process,
    simulate_path,
    tilde_mixing_time,
    tv_profile,
)
from .renewal import (
    MittagLefflerWaiting,
    TailAssumptionParams,
    TaylorRemainderConstants,
    certify_power_tail,
    count_events,
    estimate_counting_pmf,
    parse_waiting_model,
    small_count_bounds,
)
from .streams import DOMAIN_PATH, DOMAIN_SAMPLES, block_generator, derived_seed


def parse_chain_source(spec: str) -> StochasticMatrix:
    """Inline JSON matrix, a .csv/.json path, or ``ehrenfest:d,laziness``."""
    spec = spec.strip()
    if spec.startswith("ehrenfest:"):
        args = spec.split(":", 1)[1].split(",")
        d = int(args[0])
        laziness = float(args[1]) if len(args) > 1 else 0.3
        return ehrenfest_chain(d, laziness)
    if spec.startswith("["):
        return validate_stochastic(np.asarray(json.loads(spec), dtype=float))
    path = Path(spec)
    if path.suffix.lower() in (".csv", ".json") or path.exists():
        return validate_stochastic(sio.load_matrix(path))
    raise ParameterDomainError(f"cannot interpret chain source {spec!r}")


def _require_seed_for_route(route: str, seed: int | None) -> int:
    if route == "spectral":
        return 0 if seed is None else seed
    if seed is None:
        raise click.UsageError(f"--seed is required for the {route} route")
    return seed


def _model_from(model: str | None, beta: float | None, t_min: float, rate: float):
    if model is None:
        raise click.UsageError("a waiting model is required (--model)")
    if ":" in model:
        return parse_waiting_model(model)
    kind = model.lower()
    if kind in ("ml", "mittag-leffler"):
        if beta is None:
            raise click.UsageError("--beta is required for the ml model")
        return parse_waiting_model(f"ml:{beta}")
    if kind == "pareto":
        if beta is None:
            raise click.UsageError("--beta is required for the pareto model")
        return parse_waiting_model(f"pareto:{beta},{t_min}")
    if kind in ("exp", "exponential"):
        return parse_waiting_model(f"exp:{rate}")
    raise click.UsageError(f"unknown model {model!r}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except SemimixError as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(1)
    return wrapper


def config_defaults(fn):
    """Let --config supply defaults for any other option."""
    @click.option("--config", type=click.Path(exists=True), default=None,
                  help="JSON file with default option values.")
    @functools.wraps(fn)
    def wrapper(*args, config=None, **kwargs):
        if config:
            loaded = json.loads(Path(config).read_text(encoding="utf-8"))
            for key, val in loaded.items():
                key = key.replace("-", "_")
                if key in kwargs and kwargs[key] is None:
                    kwargs[key] = val
        return fn(*args, **kwargs)
    return wrapper


fmt_option = click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
                          default="json", show_default=True)
out_option = click.option("--out", default=None, help="Output path (default stdout).")
plot_option = click.option("--plot", default=None, help="Also render a PNG figure here.")
seed_option = click.option("--seed", type=int, required=True,
                           help="Master seed (required for stochastic commands).")
threads_option = click.option("--threads", type=int, default=1, show_default=True)


_CANONICAL_KEYS = {
    "chain_source": "chain",
    "waiting": "model",
    "output_format": "fmt",
    "format": "fmt",
    "output_path": "out",
}
_COMMANDS = ("pmf", "simulate", "tv-profile", "bounds", "verify-lemma31",
             "ehrenfest-demo")
_GROUPS = {"ml": ("eval", "sample", "moments"),
           "mixing": ("embedded", "continuous", "tilde")}


def _default_map_from(cfg: dict) -> dict:
    """Turn a run-config JSON into a click default map.

    Scalar keys apply to every command (unknown options are ignored by
    click); nested objects override per command.
    """
    flat = {}
    nested = {}
    for key, val in cfg.items():
        name = key.replace("-", "_")
        if isinstance(val, dict):
            nested[key] = val
        else:
            flat[_CANONICAL_KEYS.get(name, name)] = val
    dmap = {cmd: dict(flat) for cmd in _COMMANDS}
    for group, subs in _GROUPS.items():
        dmap[group] = {sub: dict(flat) for sub in subs}
    for key, val in nested.items():
        if key in _GROUPS:
            for sub, opts in val.items():
                dmap.setdefault(key, {}).setdefault(sub, {}).update(opts)
        else:
            dmap.setdefault(key, {}).update(val)
    return dmap


@click.group()
@click.version_option(__version__)
@click.option("--config", type=click.Path(exists=True), default=None,
              help="JSON run configuration supplying option defaults.")
@click.pass_context
def main(ctx, config):
    """Heavy-tailed semi-Markov simulation and mixing-time analysis."""
    if config:
        ctx.default_map = _default_map_from(
            json.loads(Path(config).read_text(encoding="utf-8"))
        )


# ---------------------------------------------------------------- ml group

@main.group("ml")
def ml_group():
    """Mittag-Leffler function, samples and counting moments."""


def _ml_config(radius, tol, asymptotic_terms, max_terms) -> MLEvalConfig:
    return MLEvalConfig(
        series_radius=radius, series_tol=tol,
        asymptotic_terms=asymptotic_terms, max_series_terms=max_terms,
    )


@ml_group.command("eval")
@click.option("--beta", type=float, required=True)
@click.option("--z", required=True, help="Argument: 're' or 're,im'.")
@click.option("--radius", type=float, default=5.0, show_default=True)
@click.option("--tol", type=float, default=1e-14, show_default=True)
@click.option("--asymptotic-terms", type=int, default=20, show_default=True)
@click.option("--max-terms", type=int, default=2000, show_default=True)
@fmt_option
@out_option
@handle_errors
def ml_eval_cmd(beta, z, radius, tol, asymptotic_terms, max_terms, fmt, out):
    """Evaluate the Mittag-Leffler function at one point."""
    parts = [float(x) for x in z.split(",")]
    zc = complex(parts[0], parts[1] if len(parts) > 1 else 0.0)
    value, regime = ml_eval_detailed(beta, zc, _ml_config(radius, tol, asymptotic_terms, max_terms))
    meta = sio.provenance("ml eval")
    payload = {"beta": beta, "z": {"re": zc.real, "im": zc.imag},
               "value": {"re": value.real, "im": value.imag}, "regime": regime}
    if fmt == "json":
        _emit(sio.artifact_json("ml_eval", meta, payload), out)
    else:
        _emit(sio.artifact_csv(meta, ["beta", "z_re", "z_im", "value_re", "value_im", "regime"],
                               [[beta, zc.real, zc.imag, value.real, value.imag, regime]]), out)


@ml_group.command("sample")
@click.option("--beta", type=float, required=True)
@click.option("--n", type=int, default=10, show_default=True)
@seed_option
@fmt_option
@out_option
@handle_errors
def ml_sample_cmd(beta, n, seed, fmt, out):
    """Draw variates with survival function E_beta(-t^beta)."""
    gen = block_generator(seed, DOMAIN_SAMPLES, 0)
    draws = np.atleast_1d(ml_sample_array(beta, gen, n))
    meta = sio.provenance("ml sample", seed=seed, reps=n)
    if fmt == "json":
        _emit(sio.artifact_json("ml_samples", meta, {"beta": beta, "samples": draws}), out)
    else:
        _emit(sio.artifact_csv(meta, ["index", "value"],
                               [[i, float(v)] for i, v in enumerate(draws)]), out)


@ml_group.command("moments")
@click.option("--beta", type=float, required=True)
@click.option("--t", type=float, required=True)
@fmt_option
@out_option
@handle_errors
def ml_moments_cmd(beta, t, fmt, out):
    """Mean, second moment and variance of the counting process."""
    m = fractional_poisson_moments(beta, t)
    meta = sio.provenance("ml moments")
    payload = {"beta": beta, "t": t, "mean": m.mean, "second_moment": m.second_moment,
               "variance": m.variance, "ml_factor": m.ml_factor}
    if fmt == "json":
        _emit(sio.artifact_json("ml_moments", meta, payload), out)
    else:
        _emit(sio.artifact_csv(meta, list(payload), [list(payload.values())]), out)


# ---------------------------------------------------------------- pmf

@main.command("pmf")
@click.option("--model", required=True, help="ml | pareto | exp or compact 'ml:0.5'.")
@click.option("--beta", type=float, default=None)
@click.option("--t-min", type=float, default=1.0, show_default=True)
@click.option("--rate", type=float, default=1.0, show_default=True)
@click.option("--t", type=float, required=True)
@click.option("--reps", type=int, default=100_000, show_default=True)
@click.option("--n-max", type=int, default=None)
@seed_option
@threads_option
@fmt_option
@out_option
@plot_option
@handle_errors
def pmf_cmd(model, beta, t_min, rate, t, reps, n_max, seed, threads, fmt, out, plot):
    """Monte Carlo pmf of the event count N(t)."""
    wt = _model_from(model, beta, t_min, rate)
    pmf = estimate_counting_pmf(wt, t, n_max, reps, seed, threads)
    meta = sio.provenance("pmf", seed=seed, reps=reps, model=wt.label(), t=t)
    if fmt == "json":
        payload = {
            "model": wt.label(), "t": t, "n_max": pmf.n_max,
            "probabilities": pmf.probabilities, "std_errors": pmf.std_errors,
            "mass_beyond": pmf.mass_beyond, "replications": pmf.replications,
        }
        _emit(sio.artifact_json("pmf", meta, payload), out)
    else:
        rows = [[n, float(p), float(s)] for n, (p, s)
                in enumerate(zip(pmf.probabilities, pmf.std_errors))]
        _emit(sio.artifact_csv(meta, ["n", "p", "se"], rows), out)
    if plot:
        plots.save_pmf_figure(np.arange(pmf.n_max + 1), pmf.probabilities,
                              pmf.std_errors, plot, title=f"{wt.label()}, t={t:g}")


# ---------------------------------------------------------------- simulate

@main.command("simulate")
@click.option("--chain", required=True, help="Matrix JSON, csv/json path, or ehrenfest:d,lz.")
@click.option("--model", required=True)
@click.option("--beta", type=float, default=None)
@click.option("--t-min", type=float, default=1.0)
@click.option("--rate", type=float, default=1.0)
@click.option("--horizon", type=float, required=True)
@click.option("--reps", type=int, default=1, show_default=True, help="Number of paths.")
@click.option("--init", default="uniform", show_default=True,
              help="'uniform', 'state:k', or a JSON probability vector.")
@seed_option
@fmt_option
@out_option
@handle_errors
def simulate_cmd(chain, model, beta, t_min, rate, horizon, reps, init, seed, fmt, out):
    """Simulate trajectories of the time-changed chain."""
    q = parse_chain_source(chain)
    wt = _model_from(model, beta, t_min, rate)
    if init == "uniform":
        initial = None
    elif init.startswith("state:"):
        vec = np.zeros(q.n_states)
        vec[int(init.split(":", 1)[1])] = 1.0
        initial = vec
    else:
        initial = np.asarray(json.loads(init), dtype=float)
    proc = make_process(q, wt, initial)
    paths = []
    for r in range(reps):
        gen = block_generator(seed, DOMAIN_PATH, r)
        paths.append(simulate_path(proc, horizon, gen))
    meta = sio.provenance("simulate", seed=seed, reps=reps, model=wt.label(),
                          horizon=horizon)
    if fmt == "json":
        payload = {
            "horizon": horizon,
            "paths": [
                {"jump_times": p.jump_times, "states": p.states,
                 "state_at_horizon": p.state_at_horizon}
                for p in paths
            ],
        }
        _emit(sio.artifact_json("paths", meta, payload), out)
    else:
        rows = []
        for r, p in enumerate(paths):
            rows.append([r, 0, 0.0, int(p.states[0])])
            for k, (tt, s) in enumerate(zip(p.jump_times, p.states[1:]), start=1):
                rows.append([r, k, float(tt), int(s)])
        _emit(sio.artifact_csv(meta, ["path", "event", "time", "state"], rows), out)


# ---------------------------------------------------------------- tv profile

@main.command("tv-profile")
@click.option("--chain", required=True)
@click.option("--model", required=True)
@click.option("--beta", type=float, default=None)
@click.option("--t-min-model", "t_min_model", type=float, default=1.0)
@click.option("--rate", type=float, default=1.0)
@click.option("--t-min", type=float, default=0.1, show_default=True)
@click.option("--t-max", type=float, default=1e5, show_default=True)
@click.option("--points", type=int, default=40, show_default=True)
@click.option("--route", type=click.Choice(["series", "spectral", "monte_carlo"]),
              default="spectral", show_default=True)
@click.option("--aggregation", type=click.Choice(["sum", "max"]), default="sum",
              show_default=True)
@click.option("--reps", type=int, default=20_000, show_default=True)
@click.option("--seed", type=int, default=None,
              help="Required for the sampling routes.")
@threads_option
@fmt_option
@out_option
@plot_option
@handle_errors
def tv_profile_cmd(chain, model, beta, t_min_model, rate, t_min, t_max, points,
                   route, aggregation, reps, seed, threads, fmt, out, plot):
    """Aggregated TV distance to stationarity along a log time grid."""
    seed = _require_seed_for_route(route, seed)
    q = parse_chain_source(chain)
    wt = _model_from(model, beta, t_min_model, rate)
    proc = make_process(q, wt)
    times = np.geomspace(t_min, t_max, points)
    prof = tv_profile(proc, times, route, aggregation, reps, seed, threads,
                      check_decay=False)
    meta = sio.provenance("tv-profile", seed=seed, reps=reps, model=wt.label(),
                          route=route, aggregation=aggregation)
    if fmt == "json":
        _emit(sio.artifact_json("tv_profile", meta,
                                {"times": prof.times, "values": prof.values,
                                 "route": route, "aggregation": aggregation}), out)
    else:
        rows = [[float(t), float(v)] for t, v in zip(prof.times, prof.values)]
        _emit(sio.artifact_csv(meta, ["t", "tv"], rows), out)
    if plot:
        plots.save_profile_figure(prof.times, prof.values, plot)


# ---------------------------------------------------------------- mixing

@main.group("mixing")
def mixing_group():
    """Embedded, continuous and expected-TV mixing times."""


@mixing_group.command("embedded")
@click.option("--chain", required=True)
@click.option("--eps", type=float, required=True)
@click.option("--aggregation", type=click.Choice(["sum", "max"]), default="sum",
              show_default=True)
@click.option("--n-max", type=int, default=100_000, show_default=True)
@fmt_option
@out_option
@handle_errors
def mixing_embedded_cmd(chain, eps, aggregation, n_max, fmt, out):
    """Embedded-chain mixing time plus the per-step TV sequence."""
    q = parse_chain_source(chain)
    t_emb = embedded_mixing_time(q, eps, aggregation, n_max)
    pi = stationary_distribution(q)
    cache = PowerCache(q, pi)
    seq = [[n, aggregate_tv(cache.tv_rows(n), aggregation)] for n in range(t_emb + 1)]
    meta = sio.provenance("mixing embedded", eps=eps, aggregation=aggregation)
    if fmt == "json":
        _emit(sio.artifact_json("embedded_mixing", meta,
                                {"eps": eps, "time": t_emb, "aggregation": aggregation,
                                 "profile": seq}), out)
    else:
        _emit(sio.artifact_csv(meta, ["n", "tv"], seq), out)


def _mixing_bounds_block(q, wt, eps, alpha=None):
    """Bound values for the mixing report; inapplicable bounds are skipped."""
    out = {}
    try:
        inputs = bd.build_bound_inputs(q, wt, eps, alpha=alpha)
    except (SemimixError, ValueError):
        return out
    report = bd.heavy_tail_mixing_upper(inputs)
    out["heavy_tail_upper"] = report.value
    if isinstance(wt, MittagLefflerWaiting) and wt.beta < 1.0:
        out["ml_upper"] = bd.ml_mixing_upper(inputs).value
    if alpha is not None:
        lower, upper = bd.expected_tv_mixing_bounds(inputs)
        out["expected_tv_lower"] = lower.value
        out["expected_tv_upper"] = upper.value
    sandwich = mixing_time_sandwich(q, eps)
    if sandwich.get("reversible"):
        out["spectral_lower"] = sandwich["lower"]
        out["spectral_upper_coeff"] = sandwich["upper"]
    return out


@mixing_group.command("continuous")
@click.option("--chain", required=True)
@click.option("--model", required=True)
@click.option("--beta", type=float, default=None)
@click.option("--t-min-model", "t_min_model", type=float, default=1.0)
@click.option("--rate", type=float, default=1.0)
@click.option("--eps", type=float, required=True)
@click.option("--route", type=click.Choice(["series", "spectral", "monte_carlo"]),
              default="spectral", show_default=True)
@click.option("--aggregation", type=click.Choice(["sum", "max"]), default="sum",
              show_default=True)
@click.option("--t-min", type=float, default=1e-2, show_default=True)
@click.option("--t-max", type=float, default=1e8, show_default=True)
@click.option("--points-per-decade", type=int, default=8, show_default=True)
@click.option("--reps", type=int, default=20_000, show_default=True)
@click.option("--seed", type=int, default=None,
              help="Required for the sampling routes.")
@threads_option
@fmt_option
@out_option
@plot_option
@handle_errors
def mixing_continuous_cmd(chain, model, beta, t_min_model, rate, eps, route,
                          aggregation, t_min, t_max, points_per_decade, reps,
                          seed, threads, fmt, out, plot):
    """Certified continuous mixing time with bound values."""
    seed = _require_seed_for_route(route, seed)
    q = parse_chain_source(chain)
    wt = _model_from(model, beta, t_min_model, rate)
    proc = make_process(q, wt)
    grid = SearchGrid(t_min, t_max, points_per_decade)
    cert = continuous_mixing_time(proc, eps, route, grid, aggregation, reps, seed, threads)
    t_emb = embedded_mixing_time(q, eps, aggregation)
    rep = MixingReport(
        eps=eps, embedded_time=t_emb, continuous_time=cert.time, tilde_time=None,
        bounds=_mixing_bounds_block(q, wt, eps), grid=cert.grid,
        aggregation=aggregation,
    )
    meta = sio.provenance("mixing continuous", seed=seed, reps=reps,
                          model=wt.label(), route=route)
    payload = {
        "eps": rep.eps,
        "aggregation": rep.aggregation,
        "embedded_time": rep.embedded_time,
        "continuous_time": rep.continuous_time,
        "margin": cert.margin,
        "recheck": list(cert.recheck),
        "grid": rep.grid,
        "values": cert.values,
        "bounds": rep.bounds,
    }
    if fmt == "json":
        _emit(sio.artifact_json("mixing_report", meta, payload), out)
    else:
        rows = [[float(t), float(v)] for t, v in zip(cert.grid, cert.values)]
        _emit(sio.artifact_csv({**meta, "continuous_time": cert.time,
                                "embedded_time": t_emb}, ["t", "tv"], rows), out)
    if plot:
        plots.save_profile_figure(cert.grid, cert.values, plot, eps=eps)


@mixing_group.command("tilde")
@click.option("--chain", required=True)
@click.option("--model", required=True)
@click.option("--beta", type=float, default=None)
@click.option("--t-min-model", "t_min_model", type=float, default=1.0)
@click.option("--rate", type=float, default=1.0)
@click.option("--eps", type=float, required=True)
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--t-min", type=float, default=1e-2, show_default=True)
@click.option("--t-max", type=float, default=1e8, show_default=True)
@click.option("--points-per-decade", type=int, default=8, show_default=True)
@click.option("--reps", type=int, default=20_000, show_default=True)
@seed_option
@threads_option
@fmt_option
@out_option
@plot_option
@handle_errors
def mixing_tilde_cmd(chain, model, beta, t_min_model, rate, eps, alpha, t_min,
                     t_max, points_per_decade, reps, seed, threads, fmt, out, plot):
    """Certified expected-TV mixing time with its sandwich bounds."""
    q = parse_chain_source(chain)
    wt = _model_from(model, beta, t_min_model, rate)
    proc = make_process(q, wt)
    grid = SearchGrid(t_min, t_max, points_per_decade)
    cert = tilde_mixing_time(proc, eps, reps, grid, seed, threads)
    t_emb = embedded_mixing_time(q, eps)
    rep = MixingReport(
        eps=eps, embedded_time=t_emb, continuous_time=None, tilde_time=cert.time,
        bounds=_mixing_bounds_block(q, wt, eps, alpha=alpha), grid=cert.grid,
    )
    meta = sio.provenance("mixing tilde", seed=seed, reps=reps, model=wt.label())
    payload = {
        "eps": rep.eps,
        "alpha": alpha,
        "embedded_time": rep.embedded_time,
        "tilde_time": rep.tilde_time,
        "margin": cert.margin,
        "grid": rep.grid,
        "values": cert.values,
        "bounds": rep.bounds,
    }
    if fmt == "json":
        _emit(sio.artifact_json("mixing_report", meta, payload), out)
    else:
        rows = [[float(t), float(v)] for t, v in zip(cert.grid, cert.values)]
        _emit(sio.artifact_csv({**meta, "tilde_time": cert.time}, ["t", "expected_tv"],
                               rows), out)
    if plot:
        plots.save_profile_figure(cert.grid, cert.values, plot, eps=eps,
                                  ylabel="expected TV distance")


# ---------------------------------------------------------------- bounds

@main.command("bounds")
@click.option("--theorem", type=click.Choice(["2.2", "2.3", "2.4", "lemma31", "tvpi"]),
              required=True, help="Which bound family to evaluate.")
@click.option("--chain", default=None)
@click.option("--model", default=None)
@click.option("--beta", type=float, default=None)
@click.option("--t-min-model", "t_min_model", type=float, default=1.0)
@click.option("--rate", type=float, default=1.0)
@click.option("--eps", type=float, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--c1", type=float, default=None)
@click.option("--c2", type=float, default=None)
@click.option("--t0", type=float, default=None)
@click.option("--c0", type=float, default=None)
@click.option("--k", type=int, default=None, help="Count threshold for lemma31.")
@click.option("--t", type=float, default=None)
@click.option("--m", "m_window", type=int, default=None, help="Lower window edge for tvpi.")
@click.option("--l", "l_window", type=int, default=None, help="Upper window edge for tvpi.")
@click.option("--reps", type=int, default=50_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@config_defaults
@fmt_option
@out_option
@handle_errors
def bounds_cmd(theorem, chain, model, beta, t_min_model, rate, eps, alpha, c1, c2,
               t0, c0, k, t, m_window, l_window, reps, seed, fmt, out):
    """Evaluate one explicit bound; constituents are always included."""
    meta = sio.provenance("bounds", theorem=theorem)
    tail = None
    if c1 is not None and c2 is not None and t0 is not None and beta is not None:
        tail = TailAssumptionParams(c1=c1, c2=c2, t0=t0, beta=beta)
    remainder = TaylorRemainderConstants(c0=c0) if c0 is not None else TaylorRemainderConstants()

    def emit_report(payload):
        if fmt == "json":
            _emit(sio.artifact_json("bound_report", meta, payload), out)
        else:
            rows = [[k2, v2] for k2, v2 in payload.items() if not isinstance(v2, dict)]
            rows += [[f"constituents.{k2}", v2]
                     for k2, v2 in payload.get("constituents", {}).items()
                     if not isinstance(v2, dict)]
            _emit(sio.artifact_csv(meta, ["quantity", "value"], rows), out)

    if theorem == "lemma31":
        if tail is None or k is None or t is None:
            raise click.UsageError("lemma31 needs --beta --c1 --c2 --t0 --k --t")
        res = small_count_bounds(tail, k, t, remainder)
        emit_report({"name": "small_count_bounds", "lower": res.lower,
                     "upper": res.upper,
                     "constituents": {"c0": res.c0, "k": k, "t": t,
                                      "hypothesis_threshold": res.hypothesis_threshold}})
        return

    if chain is None or eps is None:
        raise click.UsageError("this theorem needs --chain and --eps")
    q = parse_chain_source(chain)
    wt = _model_from(model, beta, t_min_model, rate) if model else None

    if theorem == "tvpi":
        if wt is None or t is None or m_window is None or l_window is None:
            raise click.UsageError("tvpi needs --model --t --m --l")
        proc = make_process(q, wt)
        pmf = estimate_counting_pmf(wt, t, None, reps, seed)
        report = bd.tv_window_upper(proc, m_window, l_window, t, pmf)
    else:
        if wt is None:
            raise click.UsageError("this theorem needs --model")
        inputs = bd.build_bound_inputs(q, wt, eps, alpha=alpha, tail=tail,
                                       remainder=remainder)
        if theorem == "2.2":
            report = bd.heavy_tail_mixing_upper(inputs)
        elif theorem == "2.3":
            report = bd.ml_mixing_upper(inputs)
        else:
            if alpha is None:
                raise click.UsageError("theorem 2.4 needs --alpha")
            lower, upper = bd.expected_tv_mixing_bounds(inputs)
            emit_report({
                "name": "expected_tv_mixing_bounds",
                "lower": lower.value,
                "upper": upper.value,
                "hypothesis_ok": lower.hypothesis_ok,
                "constituents": {**lower.constituents,
                                 "upper_constituents": upper.constituents},
            })
            return
    emit_report({"name": report.name, "value": report.value,
                 "hypothesis_ok": report.hypothesis_ok,
                 "constituents": report.constituents})


# ---------------------------------------------------------------- verify-lemma31

@main.command("verify-lemma31")
@click.option("--beta", type=float, required=True)
@click.option("--t-min", "t_min", type=float, default=1.0, show_default=True,
              help="Pareto scale for the simulated waits.")
@click.option("--k", type=int, required=True)
@click.option("--t", type=float, required=True)
@click.option("--c1", type=float, default=None)
@click.option("--c2", type=float, default=None)
@click.option("--t0", type=float, default=None)
@click.option("--reps", type=int, default=100_000, show_default=True)
@seed_option
@threads_option
@fmt_option
@out_option
@handle_errors
def verify_lemma31_cmd(beta, t_min, k, t, c1, c2, t0, reps, seed, threads, fmt, out):
    """Check the small-count sandwich against simulation for Pareto waits."""
    wt = parse_waiting_model(f"pareto:{beta},{t_min}")
    if c1 is None or c2 is None or t0 is None:
        tail = certify_power_tail(wt)
    else:
        tail = TailAssumptionParams(c1=c1, c2=c2, t0=t0, beta=beta)
    res = small_count_bounds(tail, k, t)
    counts = count_events(wt, t, reps, seed, threads)
    estimate = float((counts < k).mean())
    se = math.sqrt(estimate * (1.0 - estimate) / reps)
    ok = res.lower - 3 * se <= estimate <= res.upper + 3 * se
    meta = sio.provenance("verify-lemma31", seed=seed, reps=reps)
    payload = {
        "beta": beta, "k": k, "t": t,
        "tail": {"c1": tail.c1, "c2": tail.c2, "t0": tail.t0, "beta": tail.beta},
        "lower": res.lower, "upper": res.upper, "c0": res.c0,
        "monte_carlo": estimate, "std_error": se, "within_bounds": ok,
    }
    if fmt == "json":
        _emit(sio.artifact_json("lemma_check", meta, payload), out)
    else:
        _emit(sio.artifact_csv(meta, ["lower", "estimate", "upper", "se", "ok"],
                               [[res.lower, estimate, res.upper, se, ok]]), out)
    if not ok:
        sys.exit(1)


# ---------------------------------------------------------------- demo

@main.command("ehrenfest-demo")
@click.option("--d", type=int, required=True)
@click.option("--beta", type=float, required=True)
@click.option("--eps", type=float, default=0.05, show_default=True)
@click.option("--laziness", type=float, default=0.3, show_default=True)
@click.option("--reps", type=int, default=10_000, show_default=True)
@click.option("--start", type=int, default=0, show_default=True)
@click.option("--before-fraction", type=float, default=0.01, show_default=True)
@seed_option
@threads_option
@fmt_option
@out_option
@plot_option
@handle_errors
def ehrenfest_demo_cmd(d, beta, eps, laziness, reps, start, before_fraction,
                       seed, threads, fmt, out, plot):
    """Urn-chain histogram at (and before) the Mittag-Leffler bound time.

    Simulates the time-changed urn chain started in one corner, stops every
    replica at the closed-form bound time and at a fraction of it, and
    reports both empirical state histograms against Binomial(d, 1/2).
    """
    from scipy.stats import binom

    q = ehrenfest_chain(d, laziness)
    wt = parse_waiting_model(f"ml:{beta}")
    proc = make_process(q, wt)
    inputs = bd.build_bound_inputs(q, wt, eps)
    bound = bd.ml_mixing_upper(inputs)
    t_at = bound.value
    t_before = before_fraction * t_at
    reference = binom.pmf(np.arange(d + 1), d, 0.5)

    rows = {}
    for idx, (tag, horizon) in enumerate((("at", t_at), ("before", t_before))):
        hist, _ = empirical_state_histogram(
            proc, horizon, start, reps, derived_seed(seed, 101 + idx), threads
        )
        rows[tag] = hist
    tv_at_bound = 0.5 * float(np.abs(rows["at"] - reference).sum())
    tv_before = 0.5 * float(np.abs(rows["before"] - reference).sum())

    meta = sio.provenance("ehrenfest-demo", seed=seed, reps=reps, d=d, beta=beta,
                          eps=eps, laziness=laziness)
    summary = {
        "bound_time": t_at, "before_time": t_before,
        "tv_at_bound": tv_at_bound, "tv_before": tv_before,
        "ell_star": inputs.coupling.ell_star,
        "theta_star": theta_star(beta),
    }
    if fmt == "json":
        payload = {**summary,
                   "states": np.arange(d + 1),
                   "empirical_at_bound": rows["at"],
                   "empirical_before": rows["before"],
                   "binomial": reference}
        _emit(sio.artifact_json("ehrenfest_demo", meta, payload), out)
    else:
        table = [[s, float(rows["at"][s]), float(rows["before"][s]), float(reference[s])]
                 for s in range(d + 1)]
        _emit(sio.artifact_csv({**meta, **{k: v for k, v in summary.items()}},
                               ["state", "empirical_at_bound", "empirical_before", "binomial"],
                               table), out)
    if plot:
        plots.save_demo_figure(np.arange(d + 1), rows["at"], rows["before"],
                               reference, plot, t_at, t_before)


if __name__ == "__main__":
    main()
