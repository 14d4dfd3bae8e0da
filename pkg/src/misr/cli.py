"""Command-line front end.

Every command is deterministic for fixed flags and seed. JSON goes to
stdout unless --out is given; tables are CSV. `verify` exits 1 when any
check fails, and I/O or input errors exit 2.
"""

from __future__ import annotations

import csv
import io
import json
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import click

from .checks import SUITES, derive_seed, random_fake_squares, run_suite, seeded_dp_config
from .config import DEFAULT
from .dp import COORD_MODES, DPConfig, DPStateError, dp_solve
from .fakes import induced_indices
from .grids import build_rho_accurate_grid
from .instance import KINDS, canonicalize, dump_json, generate, instance_from_json, kernelize
from .partitions import PartitionError, build_r_good_partition
from .separators import SeparatorError, decompose_pair_grid, decompose_triple, decompose_triple_grid
from .solvers import OptCache, SolverBudgetExceeded, approx_divide, exact_mis
from .trees import TreeError, build_cleanup_tree, build_phase_tree, build_section5_tree

SEED_ENV = "MISR_SEED"
BENCH_COLUMNS = ["seed", "n", "kind", "exact", "approx_divide", "dp_value", "ratio", "wall_ms"]


class InputError(click.ClickException):
    exit_code = 2


def _cfg(ctx):
    return DEFAULT.with_(strict=ctx.obj["strict"])


def _read_instance(path):
    try:
        return instance_from_json(json.loads(Path(path).read_text()))
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise InputError(f"cannot read instance {path}: {e}") from e


def _emit(text: str, out):
    if out is None:
        click.echo(text, nl=False)
        return
    try:
        Path(out).write_text(text)
    except OSError as e:
        raise InputError(f"cannot write {out}: {e}") from e


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, columns, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _fakes(inst, count, seed):
    return random_fake_squares(inst, count, random.Random(derive_seed("fakes", seed)))


def _rho(text: str) -> Fraction:
    try:
        return Fraction(text)
    except ValueError as e:
        raise InputError(f"bad rho {text!r}") from e


seed_option = click.option("--seed", type=int, envvar=SEED_ENV, default=0, show_default=True, help=f"Seed (env {SEED_ENV}).")
out_option = click.option("--out", "-o", type=click.Path(dir_okay=False), default=None, help="Write here instead of stdout.")
fakes_option = click.option("--fakes", type=int, default=0, show_default=True, help="Random unit fake squares.")


class _Group(click.Group):
    """Turns construction failures on the given input into exit code 2."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (SeparatorError, PartitionError, TreeError, SolverBudgetExceeded, ValueError) as e:
            raise InputError(f"{type(e).__name__}: {e}") from e


@click.group(cls=_Group)
@click.option("--strict", is_flag=True, help="Enforce the literal numeric preconditions.")
@click.pass_context
def main(ctx, strict):
    """Maximum independent set of rectangles: constructions and checks."""
    ctx.ensure_object(dict)
    ctx.obj["strict"] = strict


@main.command()
@click.option("--kind", type=click.Choice(KINDS), default="uniform-random", show_default=True)
@click.option("--n", type=click.IntRange(1), required=True)
@seed_option
@out_option
def gen(kind, n, seed, out):
    """Generate a canonical instance."""
    _emit(dump_json(generate(kind, n, seed).to_json()), out)


@main.command()
@click.argument("instance")
@click.option("--method", type=click.Choice(["exact", "approx"]), default="exact", show_default=True)
@out_option
def solve(instance, method, out):
    """Solve an instance exactly or by divide and conquer."""
    inst = _read_instance(instance)
    sol = exact_mis(inst) if method == "exact" else approx_divide(inst)
    _emit(dump_json({"method": method, "value": sol.value, **sol.to_json()}), out)


@main.command()
@click.argument("instance")
@out_option
def canon(instance, out):
    """Rank-compress a raw rectangle list to a canonical instance."""
    try:
        data = json.loads(Path(instance).read_text())
        raw = [(r["x1"], r["y1"], r["x2"], r["y2"]) for r in data["rects"]]
        inst, _ = canonicalize(raw)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise InputError(f"cannot read instance {instance}: {e}") from e
    _emit(dump_json(inst.to_json()), out)


@main.command()
@click.argument("instance")
@out_option
def kernel(instance, out):
    """Round to a kernel and report the lift."""
    inst = _read_instance(instance)
    k, lift = kernelize(inst)
    _emit(dump_json({"kernel": k.to_json(), "lift": [list(g) for g in lift.mapping], "distinct": len(set(k.rects))}), out)


@main.command()
@click.argument("instance")
@click.option("--r", "r", type=click.IntRange(3), default=4, show_default=True)
@fakes_option
@seed_option
@out_option
@click.pass_context
def partition(ctx, instance, r, fakes, seed, out):
    """Build an r-good partition of the sub-instance."""
    inst = _read_instance(instance)
    f = _fakes(inst, fakes, seed)
    opt = OptCache(inst.rects).solve(induced_indices(inst, f))
    p = build_r_good_partition(inst, f, opt, max(r, len(f)), seed, _cfg(ctx))
    _emit(dump_json({"fakes": f.to_json(), **p.to_json()}), out)


@main.command()
@click.argument("instance")
@click.option("--kind", type=click.Choice(["triple", "triple-grid", "pair-grid"]), default="triple", show_default=True)
@click.option("--lstar", type=click.IntRange(1), default=12, show_default=True)
@click.option("--rho", default="2", show_default=True, help="Grid accuracy for the grid variants.")
@fakes_option
@seed_option
@out_option
@click.pass_context
def split(ctx, instance, kind, lstar, rho, fakes, seed, out):
    """Run one decomposition step."""
    inst = _read_instance(instance)
    cfg = _cfg(ctx)
    f = _fakes(inst, fakes, seed)
    cache = OptCache(inst.rects)
    if kind == "triple":
        s = decompose_triple(inst, f, lstar, seed, cfg, cache)
    else:
        g = build_rho_accurate_grid(inst, f, _rho(rho), cfg, cache)
        if kind == "triple-grid":
            s = decompose_triple_grid(inst, f, lstar, g, seed, cfg, cache)
        else:
            s = decompose_pair_grid(inst, f, g, seed, cfg, cache)
    doc = {
        "fakes": f.to_json(),
        "parts": [q.to_json() for q in s.parts],
        "opts": [cache.value(induced_indices(inst, q)) for q in s.parts],
        "opt": cache.value(induced_indices(inst, f)),
        "lost": list(s.lost),
        "separator_cells": list(s.separator_cells),
        "cycles": [c.to_json() for c in s.cycles],
        "r": s.r,
    }
    _emit(dump_json(doc), out)


@main.command()
@click.argument("instance")
@click.option("--rho", default="2", show_default=True)
@fakes_option
@seed_option
@out_option
@click.pass_context
def grid(ctx, instance, rho, fakes, seed, out):
    """Build a rho-accurate grid."""
    inst = _read_instance(instance)
    f = _fakes(inst, fakes, seed)
    g = build_rho_accurate_grid(inst, f, _rho(rho), _cfg(ctx))
    _emit(dump_json({"fakes": f.to_json(), **g.to_json()}), out)


@main.command()
@click.argument("instance")
@click.option("--kind", type=click.Choice(["section5", "cleanup", "phase"]), default="section5", show_default=True)
@click.option("--lstar", type=click.IntRange(1), default=6, show_default=True)
@click.option("--tau", type=click.IntRange(0), default=1, show_default=True)
@click.option("--l1", type=int, default=None, help="Cleanup: start budget (defaults to the fake count).")
@click.option("--l2", type=int, default=8, show_default=True)
@click.option("--drop", default="2", show_default=True, help="Phase: optimum drop factor.")
@click.option("--rho", default="4", show_default=True)
@fakes_option
@seed_option
@out_option
@click.pass_context
def tree(ctx, instance, kind, lstar, tau, l1, l2, drop, rho, fakes, seed, out):
    """Build a partitioning tree and dump it."""
    inst = _read_instance(instance)
    cfg = _cfg(ctx)
    cache = OptCache(inst.rects)
    extra = {}
    if kind == "section5":
        t = build_section5_tree(inst, lstar, tau, seed, cfg, cache)
    else:
        f = _fakes(inst, fakes, seed)
        g = build_rho_accurate_grid(inst, f, _rho(rho), cfg, cache)
        try:
            if kind == "cleanup":
                t = build_cleanup_tree(inst, f, g, l1 or len(f), l2, seed, cfg, cache)
            else:
                t, st = build_phase_tree(inst, f, g, l1 or 6, l2, _rho(drop), seed, cfg, cache)
                extra = {"stage1_height": st.stage1_height, "middle_ratios": [str(x) for x in st.middle_ratios]}
        except ValueError as e:
            raise InputError(str(e)) from e
    t.assign_mu()
    doc = {"kind": kind, **t.to_json(), **extra}
    _emit(json.dumps(doc, sort_keys=True) + "\n", out)


@main.command()
@click.argument("instance")
@click.option("--epsilon", type=float, default=0.5, show_default=True)
@click.option("--lstar", type=click.IntRange(0), default=6, show_default=True)
@click.option("--tau", type=click.IntRange(0), default=1, show_default=True)
@click.option("--coord-mode", type=click.Choice(COORD_MODES), default="quantile", show_default=True)
@click.option("--quantiles", type=click.IntRange(0), default=3, show_default=True)
@click.option("--enum-size", type=click.IntRange(0), default=1, show_default=True)
@click.option("--no-tree-seeds", is_flag=True, help="Use only the enumerated lattice family.")
@click.option("--max-states", type=click.IntRange(1), default=20000, show_default=True)
@seed_option
@out_option
@click.option("--states-csv", type=click.Path(dir_okay=False), default=None, help="Write state counts here.")
@click.pass_context
def dp(ctx, instance, epsilon, lstar, tau, coord_mode, quantiles, enum_size, no_tree_seeds, max_states, seed, out, states_csv):
    """Run the fake-set dynamic program."""
    inst = _read_instance(instance)
    cfg = _cfg(ctx)
    cache = OptCache(inst.rects)
    seeds = ()
    if not no_tree_seeds:
        seeds = seeded_dp_config(inst, seed, cfg, cache, epsilon, max(lstar, 1), tau)[0].seeds
    dcfg = DPConfig(lstar, tau, epsilon, coord_mode, quantiles, enum_size, seeds, max_states=max_states)
    try:
        sol, stats = dp_solve(inst, dcfg, cache)
    except DPStateError as e:
        raise InputError(str(e)) from e
    _emit(dump_json({"value": sol.value, **sol.to_json(), "stats": stats.to_row()}), out)
    row = stats.to_row()
    text = _csv([row], list(row))
    if states_csv:
        _emit(text, states_csv)
    else:
        click.echo(text, nl=False, err=True)


@main.command()
@click.option("--suite", type=click.Choice(["all", *SUITES]), default="all", show_default=True)
@click.option("--n", type=click.IntRange(2), default=10, show_default=True)
@click.option("--trials", type=click.IntRange(1), default=20, show_default=True)
@seed_option
@click.option("--report", type=click.Path(dir_okay=False), default=None, help="CSV of every check.")
@click.pass_context
def verify(ctx, suite, n, trials, seed, report):
    """Run the invariant suites; exit 1 on any failure."""
    checks = run_suite(suite, n, trials, seed, _cfg(ctx))
    if report:
        _emit(_csv([c.to_row() for c in checks], ["suite", "trial", "check", "ok", "measured"]), report)
    failed = [c for c in checks if not c.ok]
    by_suite: dict[str, list[int]] = {}
    for c in checks:
        tally = by_suite.setdefault(c.suite, [0, 0])
        tally[0] += 1
        tally[1] += not c.ok
    for name, (total, bad) in by_suite.items():
        click.echo(f"{name:<11} {total - bad}/{total} checks passed")
    for c in failed:
        click.echo(f"FAIL {c.suite} trial {c.trial}: {c.name} {c.measured}", err=True)
    sys.exit(1 if failed else 0)


@main.command()
@click.option("--solver", type=click.Choice(["dp", "approx"]), default="dp", show_default=True)
@click.option("--epsilon", type=float, default=0.5, show_default=True)
@click.option("--n", type=click.IntRange(1), default=8, show_default=True)
@click.option("--trials", type=click.IntRange(1), default=10, show_default=True)
@click.option("--kind", type=click.Choice(["mixed", *KINDS]), default="mixed", show_default=True)
@click.option("--timing/--no-timing", default=False, help="Fill wall_ms (makes output nondeterministic).")
@seed_option
@out_option
@click.pass_context
def bench(ctx, solver, epsilon, n, trials, kind, timing, seed, out):
    """CSV of solver values against the exact optimum."""
    cfg = _cfg(ctx)
    rows = []
    for t in range(trials):
        s = derive_seed("bench", seed, t)
        k = KINDS[s % len(KINDS)] if kind == "mixed" else kind
        inst = generate(k, n, s)
        cache = OptCache(inst.rects)
        exact = cache.value(range(inst.n))
        approx = approx_divide(inst).value
        start = time.perf_counter()
        if solver == "dp":
            dcfg, _ = seeded_dp_config(inst, s, cfg, cache, epsilon)
            value = dp_solve(inst, dcfg, cache)[0].value
        else:
            value = approx
        ms = round(1000 * (time.perf_counter() - start)) if timing else 0
        ratio = f"{value / exact:.6f}" if exact else "1.000000"
        rows.append({"seed": s, "n": n, "kind": k, "exact": exact, "approx_divide": approx, "dp_value": value, "ratio": ratio, "wall_ms": ms})
    _emit(_csv(rows, BENCH_COLUMNS), out)
