"""Command-line entry point.

Every command prints a JSON report on stdout.  Tables and trajectories go to
``--output`` when given.  Exit status is 0 on success or a passing check, 1
when a verifier fails and 2 on any error; errors are a JSON object on stderr
carrying a machine-readable ``code``.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field

from . import __version__
from .diagnostics import (
    DEFAULT_FLAT_TOL,
    ExtremalKind,
    big_l_sequence,
    brute_force_extremal,
    convergence_experiment,
    delta_sequence,
    doob_experiment,
    ell_sequence,
    extremal_abundance,
    verify_corollary1,
    verify_identities,
    verify_tower,
    verify_tower_random,
)
from .errors import DomainError, PdpError
from .estimators import (
    Renyi,
    plugin_abundance,
    parse_index,
    posterior_mean,
    prior_moments,
    renyi_integrability,
)
from .partition import DEFAULT_EPS, DEFAULT_MAX_TERMS, Abundance, PdpParams, Trajectory, sample_trajectory
from .posterior_mc import posterior_mc_mean
from .rng import derive_seed
from .serialization import (
    dump_json,
    format_trajectory,
    parse_counts_csv,
    parse_counts_list,
    parse_trajectory,
    write_csv,
)

VERIFIERS = ("tower", "corollary1", "doob", "convergence", "identities")


@dataclass
class RunConfig:
    command: str
    alpha: float | None = None
    theta: float | None = None
    index: str = "shannon"
    counts: str | None = None
    input: str | None = None
    n: int | None = None
    trajectories: int | None = None
    seed: int = 0
    eps: float = DEFAULT_EPS
    max_terms: int = DEFAULT_MAX_TERMS
    tol: float | None = None
    checkpoints: str | None = None
    output: str | None = None
    verifier: str | None = None
    kappa: int = 1
    k: int | None = None
    brute_force: bool = False

    @property
    def params(self) -> PdpParams:
        """Explicit parameters, defaulting to alpha=0 and theta=1."""
        return PdpParams(0.0 if self.alpha is None else self.alpha, 1.0 if self.theta is None else self.theta)

    @property
    def explicit_params(self) -> PdpParams | None:
        return None if self.alpha is None and self.theta is None else self.params


@dataclass
class Report:
    command: str
    config: dict
    payload: dict
    passed: bool | None = None
    duration_seconds: float = 0.0
    version: str = __version__
    files: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 1 if self.passed is False else 0


def _read_text(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror}") from None


def _load_abundance(cfg: RunConfig) -> Abundance:
    if cfg.counts is not None:
        return parse_counts_list(cfg.counts)
    if cfg.input is None:
        raise DomainError("give --counts or --input")
    text = _read_text(cfg.input)
    first = next((line for line in text.splitlines() if line.strip()), "")
    if "count" in first.lower().split(","):
        return parse_counts_csv(text)
    return parse_trajectory(text, cfg.params).abundance()


def _load_trajectory(cfg: RunConfig, seed: int) -> Trajectory:
    if cfg.input is not None:
        return parse_trajectory(_read_text(cfg.input), cfg.explicit_params, default=cfg.params)
    if cfg.n is None:
        raise DomainError("give --input or --n")
    return sample_trajectory(cfg.params, cfg.n, seed)


def _write_table(cfg: RunConfig, report: Report, fieldnames, rows):
    if cfg.output is None:
        return
    with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
        write_csv(fh, fieldnames, rows)
    report.files.append(cfg.output)


def _cmd_sample(cfg, report):
    if cfg.n is None:
        raise DomainError("sample needs --n")
    t = sample_trajectory(cfg.params, cfg.n, cfg.seed)
    a = t.abundance()
    report.payload.update(n=a.n, k=a.k, counts=list(a.counts))
    if cfg.output is None:
        report.payload["steps"] = [int(c) for c in t.codes()]
    else:
        with open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_trajectory(t))
        report.files.append(cfg.output)


def _cmd_estimate(cfg, report):
    a = _load_abundance(cfg)
    idx = parse_index(cfg.index)
    params = cfg.params
    out = {"n": a.n, "k": a.k, "index": str(idx), "plugin": plugin_abundance(a, idx)}
    if idx.closed_form_posterior:
        out["posterior"] = posterior_mean(params, a, idx)
    else:
        out["posterior"] = None
        out["note"] = "no closed form; use the posterior-mc command"
    try:
        moments = prior_moments(params, idx)
        out["prior_mean"] = moments.mean
        out["prior_second_moment"] = moments.second_moment
    except PdpError:
        out["prior_mean"] = None
    if isinstance(idx, Renyi):
        out["integrability"] = renyi_integrability(params, idx.zeta).value
    report.payload.update(out)


def _cmd_posterior_mc(cfg, report):
    a = _load_abundance(cfg)
    idx = parse_index(cfg.index)
    m = cfg.trajectories or 10_000
    est = posterior_mc_mean(cfg.params, a, idx, m, cfg.seed, cfg.eps, cfg.max_terms)
    out = {
        "index": str(idx),
        "estimate": est.estimate,
        "std_error": est.std_error,
        "samples": est.samples,
        "mean_residual": est.mean_residual,
        "truncation_bias": est.truncation_bias,
    }
    if idx.closed_form_posterior:
        out["closed_form"] = posterior_mean(cfg.params, a, idx)
    if isinstance(idx, Renyi):
        out["integrability"] = renyi_integrability(cfg.params, idx.zeta).value
    report.payload.update(out)


def _cmd_sequences(cfg, report):
    t = _load_trajectory(cfg, cfg.seed)
    idx = parse_index(cfg.index)
    tol = cfg.tol if cfg.tol is not None else DEFAULT_FLAT_TOL
    prefixes = list(t.prefixes())
    ell = ell_sequence(prefixes, idx, tol)
    big_l = big_l_sequence(t.params, prefixes, idx, tol)
    delta = delta_sequence(t.params, prefixes, idx, tol)
    codes = t.codes()
    rows = [
        {
            "n": n,
            "step": "N" if code == 0 else f"E {code}",
            "ell": ell.values[i],
            "ell_increment": ell.increments[i],
            "big_l": big_l.values[i],
            "big_l_increment": big_l.increments[i],
            "delta": delta.values[i],
        }
        for i, (n, code) in enumerate(zip(ell.times, codes))
    ]
    _write_table(cfg, report, list(rows[0]), rows)
    report.payload.update(
        index=str(idx),
        alpha=t.params.alpha,
        theta=t.params.theta,
        n=t.n,
        ell_flat_steps=ell.flat_steps,
        big_l_flat_steps=big_l.flat_steps,
        min_delta=min(delta.values),
    )
    if cfg.output is None:
        report.payload["rows"] = rows


def _cmd_extremal(cfg, report):
    if cfg.n is None:
        raise DomainError("extremal needs --n")
    idx = parse_index(cfg.index)
    ks = [cfg.k] if cfg.k is not None else range(1, cfg.n + 1)
    rows = []
    for k in ks:
        for kind in ExtremalKind:
            a = extremal_abundance(cfg.n, k, kind)
            row = {"k": k, "kind": kind.value, "counts": " ".join(map(str, a.counts)), "plugin": plugin_abundance(a, idx)}
            row["posterior"] = posterior_mean(cfg.params, a, idx) if idx.closed_form_posterior else None
            rows.append(row)
    _write_table(cfg, report, ["k", "kind", "counts", "posterior", "plugin"], rows)
    report.payload.update(index=str(idx), n=cfg.n, rows=rows)
    if cfg.brute_force:
        if cfg.n > 14:
            raise DomainError("brute force enumeration is limited to n <= 14")
        checks = brute_force_extremal(cfg.n, cfg.params, [idx])
        failures = [{"n": c.n, "failures": c.failures} for c in checks if c.failures]
        report.payload["brute_force_failures"] = failures
        report.passed = not failures


def _verify_tower(cfg, report):
    idx = parse_index(cfg.index)
    tol = cfg.tol if cfg.tol is not None else 1e-10
    if cfg.counts is not None or cfg.input is not None:
        res = verify_tower(cfg.params, _load_abundance(cfg), idx, tol)
    else:
        res = verify_tower_random(cfg.trajectories or 1000, cfg.seed, tol)
    report.payload.update(asdict(res))
    report.passed = res.passed


def _verify_corollary1(cfg, report):
    tol = cfg.tol if cfg.tol is not None else DEFAULT_FLAT_TOL
    if cfg.input is not None:
        trajectories = [_load_trajectory(cfg, cfg.seed)]
    else:
        count = cfg.trajectories or 1
        trajectories = [_load_trajectory(cfg, derive_seed(cfg.seed, i)) for i in range(count)]
    rows, failed = [], []
    for i, t in enumerate(trajectories):
        res = verify_corollary1(t, t.params, tol, cfg.kappa)
        rows.append({"trajectory": i, "passed": res.passed, "counterexample_step": res.detail.get("step")})
        if not res.passed:
            failed.append({"trajectory": i, **res.detail})
    _write_table(cfg, report, ["trajectory", "passed", "counterexample_step"], rows)
    report.payload.update(trajectories=len(trajectories), failures=failed[:10])
    report.passed = not failed


def _verify_doob(cfg, report):
    idx = parse_index(cfg.index)
    res = doob_experiment(cfg.params, idx, cfg.n or 1000, cfg.trajectories or 1000, cfg.seed)
    var_ok = res.variance_sum - 3.0 * res.variance_sum_se <= res.second_moment
    report.payload.update(asdict(res), index=str(idx), variance_bound_holds=var_ok)
    report.passed = res.ratio <= 1.0 and var_ok


def _verify_convergence(cfg, report):
    idx = parse_index(cfg.index)
    checkpoints = [int(c) for c in (cfg.checkpoints or "100,1000").split(",") if c.strip()]
    rows = convergence_experiment(cfg.params, idx, checkpoints, cfg.trajectories or 1000, cfg.seed)
    prior = prior_moments(cfg.params, idx).mean
    table = [asdict(r) for r in rows]
    for r in table:
        r["prior_mean"] = prior
        r["z_score"] = (r["mean_posterior"] - prior) / r["posterior_se"] if r["posterior_se"] > 0 else 0.0
    gaps = [r.mean_abs_gap for r in rows]
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    centred = all(abs(r["z_score"]) <= 3.0 for r in table)
    _write_table(cfg, report, list(table[0]), table)
    report.payload.update(index=str(idx), rows=table, gap_decreasing=decreasing, mean_within_3se=centred)
    report.passed = decreasing and centred


def _verify_identities(cfg, report):
    checks = verify_identities(cfg.trajectories or 10_000, cfg.seed, cfg.tol if cfg.tol is not None else 1e-10)
    report.payload["checks"] = [asdict(c) for c in checks]
    report.passed = all(c.passed for c in checks)


_COMMANDS = {
    "sample": _cmd_sample,
    "estimate": _cmd_estimate,
    "posterior-mc": _cmd_posterior_mc,
    "sequences": _cmd_sequences,
    "extremal": _cmd_extremal,
}
_VERIFY = {
    "tower": _verify_tower,
    "corollary1": _verify_corollary1,
    "doob": _verify_doob,
    "convergence": _verify_convergence,
    "identities": _verify_identities,
}


def run_command(cfg: RunConfig) -> Report:
    """Validate ``cfg``, dispatch it and return the filled report."""
    cfg.params  # validates alpha and theta up front
    parse_index(cfg.index)
    if cfg.n is not None and cfg.n < 1:
        raise DomainError("--n must be >= 1")
    if cfg.trajectories is not None and cfg.trajectories < 1:
        raise DomainError("--trajectories must be >= 1")
    report = Report(cfg.command, asdict(cfg), {})
    start = time.perf_counter()
    if cfg.command == "verify":
        if cfg.verifier not in _VERIFY:
            raise DomainError(f"unknown verifier {cfg.verifier!r}; choose from {', '.join(VERIFIERS)}")
        _VERIFY[cfg.verifier](cfg, report)
    elif cfg.command in _COMMANDS:
        _COMMANDS[cfg.command](cfg, report)
    else:
        raise DomainError(f"unknown command {cfg.command!r}")
    report.duration_seconds = time.perf_counter() - start
    return report


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, help="discount, 0 <= alpha < 1 (default 0)")
    common.add_argument("--theta", type=float, help="concentration, theta > -alpha (default 1)")
    common.add_argument("--index", default="shannon", help="shannon, gini, ggini:<kappa> or renyi:<zeta>")
    common.add_argument("--counts", help="abundance as comma-separated counts, e.g. 5,3,1")
    common.add_argument("--input", help="trajectory/labels text file or counts CSV")
    common.add_argument("--n", type=int, help="trajectory length or horizon")
    common.add_argument("--k", type=int, help="number of classes (extremal)")
    common.add_argument("--trajectories", type=int, help="trajectory, sample or case count")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--eps", type=float, default=DEFAULT_EPS, help="stick-breaking residual threshold")
    common.add_argument("--max-terms", type=int, default=DEFAULT_MAX_TERMS, help="hard cap on sticks per draw")
    common.add_argument("--tol", type=float)
    common.add_argument("--kappa", type=int, default=1, help="Gini order used by corollary1")
    common.add_argument("--checkpoints", help="comma-separated n values (convergence)")
    common.add_argument("--output", help="write the table or trajectory here")
    common.add_argument("--brute-force", action="store_true", help="extremal: confirm by enumeration")

    parser = argparse.ArgumentParser(prog="pdpdiv", description="Diversity estimation under Poisson-Dirichlet priors.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("sample", "draw a CRP trajectory"),
        ("estimate", "posterior mean and plug-in value for an abundance"),
        ("posterior-mc", "Monte Carlo posterior mean by exact posterior sampling"),
        ("sequences", "deficiency sequences along a trajectory"),
        ("extremal", "extremal abundances for fixed n and k"),
    ):
        sub.add_parser(name, parents=[common], help=text)
    verify = sub.add_parser("verify", parents=[common], help="run an executable check")
    verify.add_argument("verifier", choices=VERIFIERS)
    return parser


def _config_from_args(ns) -> RunConfig:
    values = vars(ns).copy()
    values["max_terms"] = values.pop("max_terms")
    values["brute_force"] = values.pop("brute_force")
    values.setdefault("verifier", None)
    return RunConfig(**values)


def _emit_error(code, message, stream):
    stream.write(json.dumps({"error": code, "message": message}) + "\n")


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        report = run_command(_config_from_args(ns))
        text = dump_json(report)
    except PdpError as exc:
        _emit_error(exc.code, str(exc), stderr)
        return 2
    except OSError as exc:
        _emit_error("io_error", str(exc), stderr)
        return 2
    stdout.write(text + "\n")
    return report.exit_code


def run(argv) -> tuple:
    """Run ``main`` capturing output; returns ``(exit_code, stdout, stderr)``."""
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()
