"""Command-line front end: generate, run, solve, compare, sweep, verify."""

from __future__ import annotations

import json
import sys

import click

import mpmd
from mpmd.engine import (
    HEMISPHERE,
    NOTIME_MIN,
    POLICY_KINDS,
    Policy,
    simulate,
)
from mpmd.harness import (
    compute_ratio,
    sweep_lower_bound,
    sweep_two_point_rows,
    theoretical_bound,
)
from mpmd.instances import (
    LowerBoundParams,
    TwoPointRowsParams,
    gen_lower_bound,
    gen_random,
    gen_two_point_rows,
    instance_digest,
    load_instance,
    save_instance,
)
from mpmd.oracle import opt_bipartite, opt_general
from mpmd.verify import run_verify

_POLICY_CHOICE = click.Choice(POLICY_KINDS)


def _meta(**fields) -> dict:
    meta = {"tool": "mpmd", "version": mpmd.__version__}
    meta.update({k: v for k, v in fields.items() if v is not None})
    return meta


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        click.echo(text, nl=False)


def _load(path: str):
    try:
        return load_instance(path)
    except (OSError, ValueError) as exc:
        raise click.ClickException(str(exc)) from None


@click.group()
@click.version_option(mpmd.__version__, prog_name="mpmd")
def main() -> None:
    """Simulation lab for online minimum-cost perfect matching with delays."""


@main.group()
def gen() -> None:
    """Generate instance files."""


@gen.command("lower-bound")
@click.option("--k", type=int, required=True, help="Levels; the instance has 2**k requests.")
@click.option("--epsilon", type=float, required=True, help="Radius growth rate the family targets.")
@click.option("--eta", type=float, default=1e-6, show_default=True, help="Tie-breaking gap shrink factor.")
@click.option("-o", "--output", type=click.Path(), required=True)
def gen_lower_bound_cmd(k: int, epsilon: float, eta: float, output: str) -> None:
    """Single-point cascade that forces nested adversarial matches."""
    try:
        instance = gen_lower_bound(LowerBoundParams(k=k, epsilon=epsilon, eta=eta))
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    save_instance(instance, output)
    click.echo(f"wrote {output}: m={instance.size} digest={instance_digest(instance)}")


@gen.command("appendix-b")
@click.option("--m", type=int, required=True, help="Request count, a multiple of 4, at least 8.")
@click.option("--delta", type=float, required=True, help="Short gap and excess of the cross distance over 2.")
@click.option("-o", "--output", type=click.Path(), required=True)
def gen_appendix_b_cmd(m: int, delta: float, output: str) -> None:
    """Two-point rows that defeat space-only sphere growth."""
    try:
        instance = gen_two_point_rows(TwoPointRowsParams(m=m, delta=delta))
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    save_instance(instance, output)
    click.echo(f"wrote {output}: m={instance.size} digest={instance_digest(instance)}")


@gen.command("random")
@click.option("--m", type=int, required=True, help="Even request count.")
@click.option("--seed", type=int, required=True)
@click.option("--metric", default="line", show_default=True,
              help="line, euclidean:D, or finite:N.")
@click.option("--horizon", type=float, default=10.0, show_default=True,
              help="Arrival times and coordinates are drawn from [0, horizon].")
@click.option("--bipartite", is_flag=True, default=False)
@click.option("-o", "--output", type=click.Path(), required=True)
def gen_random_cmd(
    m: int, seed: int, metric: str, horizon: float, bipartite: bool, output: str
) -> None:
    """Seeded random instance."""
    kind, _, arg = metric.partition(":")
    kwargs: dict = {}
    try:
        if kind == "euclidean":
            kwargs["dim"] = int(arg) if arg else 2
        elif kind == "finite":
            kwargs["n_points"] = int(arg) if arg else 4
        elif kind != "line" or arg:
            raise ValueError(f"unknown metric argument {metric!r}")
        instance = gen_random(
            m, seed, metric=kind, horizon=horizon, bipartite=bipartite, **kwargs
        )
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    save_instance(instance, output)
    click.echo(f"wrote {output}: m={instance.size} digest={instance_digest(instance)}")


def _records_csv(report, meta: dict) -> str:
    lines = [f"# {json.dumps(meta, sort_keys=True)}"]
    lines.append("p,q,match_time,connection,delay_p,delay_q")
    for rec in report.records:
        lines.append(
            f"{rec.p},{rec.q},{rec.match_time!r},{rec.connection!r},"
            f"{rec.delay_p!r},{rec.delay_q!r}"
        )
    return "\n".join(lines) + "\n"


@main.command("run")
@click.option("-i", "--instance", "instance_path", type=click.Path(exists=True), required=True)
@click.option("--policy", type=_POLICY_CHOICE, required=True)
@click.option("--epsilon", type=float, required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="json",
              show_default=True, help="csv emits the match records, json the cost summary.")
@click.option("-o", "--output", type=click.Path(), default=None, help="Write to a file instead of stdout.")
def run_cmd(instance_path: str, policy: str, epsilon: float, fmt: str, output: str | None) -> None:
    """Simulate one policy over an instance file."""
    instance = _load(instance_path)
    try:
        report = simulate(instance, Policy(kind=policy, epsilon=epsilon))
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    meta = _meta(policy=policy, epsilon=epsilon, instance=instance_digest(instance))
    if fmt == "csv":
        _emit(_records_csv(report, meta), output)
    else:
        summary = {
            "meta": meta,
            "m": instance.size,
            "online_cost": report.online_cost,
            "offline_weight": report.offline_weight,
        }
        _emit(json.dumps(summary, indent=2) + "\n", output)


@main.command("opt")
@click.option("-i", "--instance", "instance_path", type=click.Path(exists=True), required=True)
@click.option("--bipartite", "force_bipartite", is_flag=True, default=False,
              help="Use the color-crossing oracle (default: instance's own variant).")
def opt_cmd(instance_path: str, force_bipartite: bool) -> None:
    """Exact offline optimum of an instance file."""
    instance = _load(instance_path)
    try:
        if force_bipartite or instance.bipartite:
            matching = opt_bipartite(instance)
        else:
            matching = opt_general(instance)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    payload = {
        "meta": _meta(instance=instance_digest(instance)),
        "m": instance.size,
        "weight": matching.weight,
        "pairs": [list(p) for p in matching.pairs],
    }
    click.echo(json.dumps(payload, indent=2))


@main.command("ratio")
@click.option("-i", "--instance", "instance_path", type=click.Path(exists=True), required=True)
@click.option("--policy", type=_POLICY_CHOICE, required=True)
@click.option("--epsilon", type=float, required=True)
def ratio_cmd(instance_path: str, policy: str, epsilon: float) -> None:
    """Competitive ratios of one policy run against the exact optimum."""
    instance = _load(instance_path)
    try:
        report = compute_ratio(instance, Policy(kind=policy, epsilon=epsilon))
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    payload = {"meta": _meta(instance=instance_digest(instance))}
    payload.update(report.to_dict())
    click.echo(json.dumps(payload, indent=2))


@main.command("sweep")
@click.option("--family", type=click.Choice(["lower-bound", "appendix-b"]), required=True)
@click.option("--epsilon", type=float, default=1.0, show_default=True)
@click.option("--policy", type=_POLICY_CHOICE, default=None,
              help="Defaults to hemisphere for lower-bound, notime-min for appendix-b.")
@click.option("--k-min", type=int, default=4, show_default=True, help="lower-bound only.")
@click.option("--k-max", type=int, default=10, show_default=True, help="lower-bound only.")
@click.option("--eta", type=float, default=1e-6, show_default=True, help="lower-bound only.")
@click.option("--m-list", default="16,32,64,128", show_default=True,
              help="appendix-b only; comma-separated request counts.")
@click.option("--delta", type=float, default=None,
              help="appendix-b only; defaults to 1/m per instance.")
@click.option("-o", "--output", type=click.Path(), default=None)
def sweep_cmd(
    family: str,
    epsilon: float,
    policy: str | None,
    k_min: int,
    k_max: int,
    eta: float,
    m_list: str,
    delta: float | None,
    output: str | None,
) -> None:
    """Ratio growth of a policy over an adversarial family."""
    try:
        if family == "lower-bound":
            result = sweep_lower_bound(
                range(k_min, k_max + 1),
                epsilon,
                eta=eta,
                policy_kind=policy or HEMISPHERE,
            )
        else:
            ms = [int(tok) for tok in m_list.split(",") if tok.strip()]
            result = sweep_two_point_rows(
                ms, epsilon, delta=delta, policy_kind=policy or NOTIME_MIN
            )
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    meta = _meta(
        family=result.family,
        policy=result.policy_kind,
        epsilon=result.epsilon,
        eta=eta if family == "lower-bound" else None,
        delta=delta,
    )
    lines = [f"# {json.dumps(meta, sort_keys=True)}"]
    lines.append("m,ratio_online,ratio_offline,opt_exact,instance")
    for row in result.rows:
        lines.append(
            f"{row.m},{row.ratio_online!r},{row.ratio_offline!r},"
            f"{int(row.opt_exact)},{row.digest}"
        )
    lines.append(f"# fitted_log2_slope={result.slope!r}")
    _emit("\n".join(lines) + "\n", output)
    if output:
        click.echo(f"wrote {output}: fitted_log2_slope={result.slope!r}")


@main.command("bound")
@click.option("--m", type=int, required=True)
@click.option("--epsilon", type=float, required=True)
def bound_cmd(m: int, epsilon: float) -> None:
    """Theoretical offline-ratio bound 2/f(m) at gamma = 3 + epsilon."""
    try:
        value = theoretical_bound(m, epsilon)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(json.dumps({"m": m, "epsilon": epsilon, "bound_2_over_f": value}))


@main.command("verify")
@click.option("--count", type=int, default=200, show_default=True,
              help="Number of seeded random instances.")
@click.option("--max-m", type=int, default=12, show_default=True)
@click.option("--eps", default="0.1,0.5,1,2", show_default=True,
              help="Comma-separated epsilon values.")
@click.option("--seed", type=int, default=20240, show_default=True)
@click.option("--skip-families", is_flag=True, default=False,
              help="Check random instances only.")
def verify_cmd(count: int, max_m: int, eps: str, seed: int, skip_families: bool) -> None:
    """Run the full cross-module invariant suite; nonzero exit on any failure."""
    eps_list = tuple(float(tok) for tok in eps.split(",") if tok.strip())
    results = run_verify(
        count=count,
        max_m=max_m,
        eps_list=eps_list,
        seed=seed,
        include_families=not skip_families,
    )
    width = max(len(r.name) for r in results)
    failed = 0
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        click.echo(f"{status}  {r.name:<{width}}  ok={r.passed} fail={r.failed}")
        for detail in r.details:
            click.echo(f"      {detail}")
        failed += r.failed
    click.echo(
        f"{'all checks passed' if failed == 0 else f'{failed} case(s) failed'}"
        f" across {len(results)} invariants"
    )
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()
