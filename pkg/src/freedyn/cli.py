"""``freedyn`` command line: run experiments from a config and emit reports."""

from __future__ import annotations

import functools
import logging
import sys
import warnings
from pathlib import Path

import click
import numpy as np

from . import currents as cur
from . import dynamics as dyn
from .automorphism import apply, is_primitive, orbit_growth, pf_eigenvalue, power, transition_matrix
from .config import ExperimentConfig, load_config, load_document, parse_config
from .errors import (
    CertificationError,
    ConfigError,
    ConvergenceError,
    DomainError,
    FreedynError,
    MalformedInputError,
    ResourceError,
    UnsupportedOperationError,
)
from .freegroup import GroupContext, cyclic_length, cyclic_word, reduce
from .reports import Report, fmt_float
from .trees import (
    MarkedMetricRose,
    act,
    cayley_tree,
    default_test_set,
    pair,
    translation_length,
    tree_to_document,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 3
EXIT_CONVERGENCE = 4
EXIT_RESOURCE = 5
EXIT_UNSUPPORTED = 6
EXIT_INPUT = 7

_EXIT_CODES = (
    (ConfigError, EXIT_CONFIG),
    (CertificationError, EXIT_CONFIG),
    (ConvergenceError, EXIT_CONVERGENCE),
    (ResourceError, EXIT_RESOURCE),
    (UnsupportedOperationError, EXIT_UNSUPPORTED),
    (MalformedInputError, EXIT_INPUT),
    (DomainError, EXIT_INPUT),
)

log = logging.getLogger("freedyn")


def exit_code(exc: FreedynError) -> int:
    for cls, code in _EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return EXIT_INPUT


class Run:
    """Resolved command-line state shared by the subcommands."""

    def __init__(self, config, out, fmt, seed_rng, max_word_letters):
        self.config_path = config
        self.cfg: ExperimentConfig | None = load_config(config) if config else None
        if out is not None:
            self.out = Path(out)
        elif self.cfg is not None:
            self.out = Path(self.cfg.output_dir)
        else:
            self.out = None
        self.fmt = fmt or (self.cfg.output_format if self.cfg else "json")
        self.seed_rng = seed_rng
        if max_word_letters is not None:
            self.max_letters = max_word_letters
        else:
            self.max_letters = self.cfg.max_word_letters if self.cfg else 10_000_000

    def need_config(self) -> ExperimentConfig:
        if self.cfg is None:
            raise ConfigError("this subcommand needs --config", "--config")
        return self.cfg

    def header(self, experiment: str) -> dict:
        cfg = self.cfg
        return {
            "format": "freedyn.report",
            "version": 1,
            "experiment": experiment,
            "config": cfg.name if cfg else None,
            "basis": list(cfg.context.basis) if cfg else None,
        }

    def emit(self, reports: list[Report]) -> None:
        if self.out is None:
            return
        for r in reports:
            for p in r.write(self.out, self.fmt):
                log.info("wrote %s", p)


def _common(fn):
    @click.option("--config", "config", type=click.Path(dir_okay=False), help="Experiment config (YAML or JSON).")
    @click.option("--out", type=click.Path(file_okay=False), help="Report directory (overrides the config).")
    @click.option("--format", "fmt", type=click.Choice(["json", "csv", "both"]), help="Report format.")
    @click.option("--seed-rng", type=int, default=0, show_default=True, help="Seed for randomized checks.")
    @click.option("--max-word-letters", type=click.IntRange(min=1), help="Cap on letters per word image.")
    @functools.wraps(fn)
    def wrapper(config, out, fmt, seed_rng, max_word_letters, **kwargs):
        try:
            run = Run(config, out, fmt, seed_rng, max_word_letters)
            code = fn(run, **kwargs)
        except FreedynError as exc:
            code = exit_code(exc)
            where = f" [config {config}]" if config else ""
            click.echo(f"error: {type(exc).__name__}: {exc}{where}", err=True)
            sys.exit(code)
        sys.exit(code or EXIT_OK)

    return wrapper


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool) -> None:
    """Dynamics of Out(F_N) on currents and on Outer space."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


def _context(run: Run, basis: str | None) -> GroupContext:
    if basis:
        try:
            return GroupContext(tuple(b.strip() for b in basis.split(",")))
        except FreedynError as exc:
            raise ConfigError(str(exc), "--basis") from None
    if run.cfg is not None:
        return run.cfg.context
    return GroupContext(("a", "b", "c", "d"))


# Word-level commands

@main.command("reduce")
@click.argument("word")
@click.option("--basis", help="Comma separated basis names (default: config basis, else a,b,c,d).")
@_common
def reduce_cmd(run: Run, word: str, basis: str | None):
    """Freely reduce WORD."""
    ctx = _context(run, basis)
    w = ctx.parse(word)
    core = cyclic_word(w)
    text = ctx.format(w) if w.letters else "1"
    click.echo(text)
    doc = {**run.header("reduce"), "input": word, "reduced": text, "length": len(w.letters),
           "cyclic_core": ctx.format(core.as_word()) or "1", "cyclic_length": cyclic_length(w)}
    run.emit([Report("reduce", doc)])


@main.command("apply")
@click.argument("word")
@click.option("--automorphism", "name", help="Automorphism name from the config.")
@click.option("--power", "k", type=int, default=1, show_default=True)
@_common
def apply_cmd(run: Run, word: str, name: str | None, k: int):
    """Apply an automorphism of the config to WORD."""
    cfg = run.need_config()
    phi = _pick_automorphism(cfg, name, "apply")
    w = cfg.context.parse(word)
    image = apply(power(phi, k), w)
    text = cfg.context.format(image) or "1"
    click.echo(text)
    run.emit([Report("apply", {**run.header("apply"), "automorphism": phi.name(), "power": k,
                               "input": cfg.context.format(w) or "1", "image": text,
                               "length": len(image.letters)})])


def _pick_automorphism(cfg: ExperimentConfig, name: str | None, experiment: str):
    if name is None:
        name = cfg.experiment(experiment).get("automorphism")
    if name is None:
        if len(cfg.automorphisms) != 1:
            raise ConfigError("name an automorphism", f"experiments.{experiment}.automorphism")
        name = next(iter(cfg.automorphisms))
    return cfg.automorphism(name, f"experiments.{experiment}.automorphism")


def _weights_report(run: Run, word: str | None, depth: int | None) -> list[Report]:
    cfg = run.need_config()
    exp = cfg.experiment("weights")
    w = cfg.word(word if word is not None else exp.get("word", "a"), "experiments.weights.word")
    depth = depth or exp.get("depth", cfg.depth)
    mu = cur.counting_current(cfg.context, w, depth)
    rows = [(v, q) for v, q in mu.table()]
    doc = {**run.header("weights"), "word": cfg.context.format(w), "depth": depth,
           "current": cur.current_to_document(mu)}
    return [Report("weights", doc, ["word", "weight"], rows)]


@main.command("weights")
@click.argument("word", required=False)
@click.option("--depth", type=click.IntRange(1, 8))
@_common
def weights_cmd(run: Run, word: str | None, depth: int | None):
    """Counting-current weight table of WORD up to the config depth."""
    reports = _weights_report(run, word, depth)
    for v, q in reports[0].rows:
        click.echo(f"{v}\t{q}")
    run.emit(reports)


def _pair_report(run: Run, word: str | None, tree: str | None) -> list[Report]:
    cfg = run.need_config()
    exp = cfg.experiment("pair")
    tname = tree or exp.get("tree")
    T = cfg.trees[tname] if tname in cfg.trees else cayley_tree(cfg.context)
    if tname is not None and tname not in cfg.trees:
        raise ConfigError(f"unknown tree {tname!r}", "experiments.pair.tree")
    w = cfg.word(word if word is not None else exp.get("word", "a"), "experiments.pair.word")
    mu = cur.counting_current(cfg.context, w, 1)
    value = pair(T, mu)
    doc = {**run.header("pair"), "tree": tname or "T_A", "word": cfg.context.format(w),
           "pairing": value, "translation_length": translation_length(T, w)}
    return [Report("pair", doc)]


@main.command("pair")
@click.argument("word", required=False)
@click.option("--tree", help="Tree name from the config (default: the Cayley tree T_A).")
@_common
def pair_cmd(run: Run, word: str | None, tree: str | None):
    """Intersection number <T, eta_WORD>."""
    reports = _pair_report(run, word, tree)
    click.echo(str(reports[0].doc["pairing"]))
    run.emit(reports)


# Experiments

def _eigenvalue_report(run: Run, name: str | None) -> list[Report]:
    cfg = run.need_config()
    phi = _pick_automorphism(cfg, name, "eigenvalue")
    m = transition_matrix(phi)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        est = pf_eigenvalue(m, cfg.eigen_tol, cfg.eigen_max_iter)
    seed = cfg.seeds[0] if cfg.seeds else cfg.context.generators()[0]
    n = min(30, cfg.iterations)
    lengths = orbit_growth(phi, seed, n, run.max_letters)
    ratio = lengths[-1] / lengths[-2]
    root = (lengths[-1] / lengths[0]) ** (1.0 / n)
    doc = {
        **run.header("eigenvalue"),
        "automorphism": phi.name(),
        "assertions": phi.assertions.as_dict(),
        "matrix": m.tolist(),
        "primitive": est.primitive,
        "warnings": [str(w.message) for w in caught],
        "value": est.value,
        "iterations": est.iterations,
        "residual": est.residual,
        "growth_seed": cfg.context.format(seed),
        "growth_steps": n,
        "growth_ratio": ratio,
        "growth_root": root,
        "ratio_discrepancy": abs(ratio - est.value),
    }
    rows = [(k, v) for k, v in enumerate(lengths)]
    return [Report("eigenvalue", doc, ["k", "cyclic_length"], rows)]


@main.command("eigenvalue")
@click.option("--automorphism", "name")
@_common
def eigenvalue_cmd(run: Run, name: str | None):
    """Perron-Frobenius eigenvalue of the transition matrix."""
    reports = _eigenvalue_report(run, name)
    click.echo(fmt_float(reports[0].doc["value"]))
    run.emit(reports)


def _seeds(cfg: ExperimentConfig, exp: dict, where: str):
    spec = exp.get("seeds", "all")
    if spec == "all":
        return list(cfg.seeds)
    return [cfg.word(s, f"{where}.seeds[{i}]") for i, s in enumerate(spec)]


def _run_row(r: dyn.OrbitReport) -> dict:
    return {
        "seed": r.seed,
        "iterations": r.iterations,
        "converged": r.converged,
        "stop_reason": r.stop_reason,
        "final_step_distance": r.step_distances[-1] if r.step_distances else None,
        "lambda_estimate": r.lambda_estimate,
        "lambda_discrepancy": r.lambda_discrepancy,
        "initial_normalizer": r.normalizers[0],
        "final_normalizer": r.normalizers[-1],
        "step_distances": r.step_distances,
        "growth_ratios": r.growth_ratios,
        "normalizers": r.normalizers,
        "final_point": r.iterates[-1],
    }


def tree_seed(context: GroupContext, w, k: int) -> MarkedMetricRose:
    """Rose paired with the ``k``-th seed word: edge ``i`` has length ``1 + #x_i(w)``, edge 0 gets ``+k``."""
    counts = [0] * context.rank
    for c in w.letters:
        counts[c >> 1] += 1
    return MarkedMetricRose(context, tuple(1 + n + (k if i == 0 else 0) for i, n in enumerate(counts)))


def orbit_runs(cfg: ExperimentConfig, mode: str, max_letters: int, exp: dict | None = None) -> tuple:
    """Run the North-South orbit experiment in one mode; return (automorphism, columns, runs)."""
    exp = cfg.experiment("ns-orbit") if exp is None else exp
    phi = _pick_automorphism(cfg, exp.get("automorphism"), "ns-orbit")
    seeds = _seeds(cfg, exp, "experiments.ns-orbit")
    if not seeds:
        raise ConfigError("no seeds to iterate", "seeds")
    n = exp.get("iterations", cfg.iterations)
    if mode == "current":
        depth = exp.get("depth", cfg.depth)
        idx = cur.word_index(cfg.context.alphabet_size, depth)
        columns = [cfg.context.format(v) for v in idx.words]
        runs = [dyn.iterate_current(phi, s, n, depth, cfg.tol, max_letters, keep_word=False) for s in seeds]
    else:
        test_set = default_test_set(cfg.context)
        columns = [cfg.context.format(w.as_word()) for w in test_set]
        runs = []
        for k, s in enumerate(seeds):
            T = tree_seed(cfg.context, s, k)
            r = dyn.iterate_tree(phi, T, n, test_set, cfg.tol, max_letters)
            r.seed = cfg.context.format(s)
            runs.append(r)
    return phi, columns, runs


def _pairwise_max(vectors: list[np.ndarray], half: bool) -> float:
    best = 0.0
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            d = float(np.abs(vectors[i] - vectors[j]).sum())
            best = max(best, d / 2 if half else d)
    return best


def _ns_reports(run: Run, mode: str | None) -> list[Report]:
    cfg = run.need_config()
    exp = cfg.experiment("ns-orbit")
    mode = mode or exp.get("mode", "current")
    modes = ["current", "tree"] if mode == "both" else [mode]
    reports = []
    for m in modes:
        phi, columns, runs = orbit_runs(cfg, m, run.max_letters, exp)
        finals = [r.iterates[-1] for r in runs]
        doc = {
            **run.header("ns-orbit"),
            "mode": m,
            "automorphism": phi.name(),
            "assertions": phi.assertions.as_dict(),
            "tol": cfg.tol,
            "budget": exp.get("iterations", cfg.iterations),
            "matrix_lambda": runs[0].matrix_lambda,
            "columns": columns,
            "all_converged": all(r.converged for r in runs),
            "max_pairwise_distance": _pairwise_max(finals, m == "current"),
            "runs": [_run_row(r) for r in runs],
        }
        rows = []
        for r in runs:
            for k, vec in enumerate(r.iterates):
                step = r.step_distances[k - 1] if k else None
                growth = r.growth_ratios[k - 1] if k else None
                rows.append([r.seed, k, r.masses[k], r.normalizers[k], step, growth, *vec.tolist()])
        header = ["seed", "k", "mass", "normalizer", "step_distance", "growth_ratio", *columns]
        reports.append(Report(f"ns-orbit-{m}", doc, header, rows))
    return reports


@main.command("ns-orbit")
@click.option("--mode", type=click.Choice(["current", "tree", "both"]))
@_common
def ns_orbit_cmd(run: Run, mode: str | None):
    """North-South orbit iteration from every seed."""
    reports = _ns_reports(run, mode)
    for r in reports:
        d = r.doc
        done = sum(x["converged"] for x in d["runs"])
        click.echo(f"{d['mode']}: {done}/{len(d['runs'])} converged, "
                   f"max pairwise distance {fmt_float(d['max_pairwise_distance'])}")
    run.emit(reports)


def _fp_entry(fp: dyn.FixedPointApprox) -> dict:
    entry = {
        "side": fp.side,
        "iterations": fp.iterations_used,
        "final_step_distance": fp.quality,
        "lambda_estimate": fp.lambda_estimate,
        "eigen_residual": fp.eigen_residual,
    }
    if isinstance(fp.object, cur.TruncatedCurrent):
        entry["current"] = cur.current_to_document(fp.object)
    else:
        ctx = fp.tree.context
        entry["test_set"] = [ctx.format(w.as_word()) for w in fp.object.test_set]
        entry["lengths"] = list(fp.object.values)
        entry["tree"] = tree_to_document(fp.tree)
    return entry


def _fixed_point_reports(run: Run) -> list[Report]:
    cfg = run.need_config()
    exp = cfg.experiment("fixed-points")
    phi = _pick_automorphism(cfg, exp.get("automorphism"), "fixed-points")
    seed = cfg.word(exp.get("seed", cfg.context.basis[0]), "experiments.fixed-points.seed")
    fps = dyn.approximate_fixed_points(phi, seed, exp.get("depth", cfg.depth), cfg.iterations, cfg.tol,
                                       max_letters=run.max_letters)
    doc = {
        **run.header("fixed-points"),
        "automorphism": phi.name(),
        "assertions": phi.assertions.as_dict(),
        "seed": cfg.context.format(seed),
        "current_plus": _fp_entry(fps.current_plus),
        "current_minus": _fp_entry(fps.current_minus),
        "tree_plus": _fp_entry(fps.tree_plus),
        "tree_minus": _fp_entry(fps.tree_minus),
    }
    rows = []
    for side, fp in (("plus", fps.current_plus), ("minus", fps.current_minus)):
        for v, q in fp.object.table():
            rows.append([side, v, float(q)])
    return [Report("fixed-points", doc, ["side", "word", "weight"], rows)]


@main.command("fixed-points")
@_common
def fixed_points_cmd(run: Run):
    """Approximate the attracting and repelling fixed current and tree."""
    reports = _fixed_point_reports(run)
    d = reports[0].doc
    for key in ("current_plus", "current_minus", "tree_plus", "tree_minus"):
        click.echo(f"{key}: {d[key]['iterations']} iterations, lambda {fmt_float(d[key]['lambda_estimate'])}")
    run.emit(reports)


def _decay_reports(run: Run) -> list[Report]:
    cfg = run.need_config()
    exp = cfg.experiment("decay")
    phi = _pick_automorphism(cfg, exp.get("automorphism"), "decay")
    seed = cfg.word(exp.get("seed", cfg.context.basis[0]), "experiments.decay.seed")
    n0, n = exp.get("n0", 10), exp.get("n", 20)
    if not 1 <= n0 <= n:
        raise ConfigError("need 1 <= n0 <= n", "experiments.decay.n0")
    rep = dyn.pairing_decay(phi, seed, n0, n, run.max_letters)
    doc = {
        **run.header("decay"),
        "automorphism": phi.name(),
        "seed": cfg.context.format(seed),
        "n0": n0,
        "n": n,
        "values": rep.values,
        "ratios": rep.ratios,
        "valley": rep.valley,
        "unimodal": rep.is_unimodal(),
        "head": rep.head,
        "tail": rep.tail,
        "head_ratios": rep.head_ratios,
        "tail_ratios": rep.tail_ratios,
    }
    rows = [[k, v, rep.ratios[k] if k < n else None] for k, v in enumerate(rep.values)]
    return [Report("decay", doc, ["k", "pairing", "ratio"], rows)]


@main.command("decay")
@_common
def decay_cmd(run: Run):
    """Pairings <T_A phi^k, eta_u> through the valley at n0."""
    reports = _decay_reports(run)
    click.echo(" ".join(str(v) for v in reports[0].doc["values"]))
    run.emit(reports)


def _subgroup(cfg: ExperimentConfig, exp: dict, experiment: str) -> dyn.SubgroupSpec:
    name = exp.get("subgroup")
    if name is None:
        if len(cfg.subgroups) != 1:
            raise ConfigError("name a subgroup", f"experiments.{experiment}.subgroup")
        name = next(iter(cfg.subgroups))
    if name not in cfg.subgroups:
        raise ConfigError(f"unknown subgroup {name!r}", f"experiments.{experiment}.subgroup")
    return cfg.subgroups[name]


def _limit_set_reports(run: Run) -> list[Report]:
    cfg = run.need_config()
    exp = cfg.experiment("limit-set")
    G = _subgroup(cfg, exp, "limit-set")
    seed = cfg.word(exp.get("seed", cfg.context.basis[0]), "experiments.limit-set.seed")
    mode = exp.get("mode", "current")
    if mode == "both":
        raise ConfigError("limit-set mode must be current or tree", "experiments.limit-set.mode")
    depth = exp.get("depth", cfg.depth)
    sample = dyn.sample_limit_set(G, exp.get("phi_index", 0), exp.get("radius", 2), seed, depth,
                                  cfg.iterations, cfg.tol, cfg.resolution, mode,
                                  max_letters=run.max_letters)
    if mode == "current":
        columns = [cfg.context.format(v) for v in cur.word_index(cfg.context.alphabet_size, depth).words]
    else:
        columns = [cfg.context.format(w.as_word()) for w in default_test_set(cfg.context)]
    doc = {
        **run.header("limit-set"),
        "subgroup": G.name,
        "generators": list(G.labels),
        "mode": mode,
        "resolution": cfg.resolution,
        "columns": columns,
        "diameter_stats": sample.diameter_stats,
        "poles": sample.poles,
        "points": [{"word": w, "point": v} for w, v in sample.points],
    }
    rows = [[w, *v.tolist()] for w, v in sample.points]
    return [Report("limit-set", doc, ["group_word", *columns], rows)]


@main.command("limit-set")
@_common
def limit_set_cmd(run: Run):
    """Translates of an attracting fixed point over a group ball."""
    reports = _limit_set_reports(run)
    d = reports[0].doc
    click.echo(f"{len(d['points'])} points, diameter stats {d['diameter_stats']}")
    run.emit(reports)


def _dirichlet_reports(run: Run) -> list[Report]:
    cfg = run.need_config()
    exp = cfg.experiment("dirichlet")
    G = _subgroup(cfg, exp, "dirichlet")
    phi = _pick_automorphism(cfg, exp.get("automorphism"), "dirichlet")
    if "current" not in exp:
        raise ConfigError("missing current", "experiments.dirichlet.current")
    mu = cfg.current(exp["current"], "experiments.dirichlet.current")
    plus = dyn.tree_fixed_point(phi, None, "plus", cfg.iterations, tol=cfg.tol, max_letters=run.max_letters)
    minus = dyn.tree_fixed_point(phi, None, "minus", cfg.iterations, tol=cfg.tol, max_letters=run.max_letters)
    res = dyn.dirichlet_check(mu, (plus.tree, minus.tree), G, exp.get("radius", 3), run.max_letters)
    doc = {
        **run.header("dirichlet"),
        "subgroup": G.name,
        "automorphism": phi.name(),
        "current_terms": cur.current_to_document(mu)["terms"],
        "poles": {"plus": tree_to_document(plus.tree), "minus": tree_to_document(minus.tree)},
        "minimizer": res.minimizer,
        "minimum": res.value,
        "table": res.table,
    }
    rows = [[r["word"], r["length"], float(r["plus"]), float(r["minus"]), float(r["total"])] for r in res.table]
    return [Report("dirichlet", doc, ["group_word", "length", "plus", "minus", "total"], rows)]


@main.command("dirichlet")
@_common
def dirichlet_cmd(run: Run):
    """Dirichlet-domain minimality of a current over a group ball."""
    reports = _dirichlet_reports(run)
    d = reports[0].doc
    click.echo(f"minimizer {d['minimizer']} value {fmt_float(float(d['minimum']))}")
    run.emit(reports)


def _discontinuity_reports(run: Run) -> list[Report]:
    cfg = run.need_config()
    exp = cfg.experiment("discontinuity")
    G = _subgroup(cfg, exp, "discontinuity")
    specs = exp.get("K")
    if not isinstance(specs, list) or not specs:
        raise ConfigError("expected a nonempty list of currents", "experiments.discontinuity.K")
    K = [cfg.current(s, f"experiments.discontinuity.K[{i}]") for i, s in enumerate(specs)]
    eps = float(exp.get("epsilon", 1e-3))
    table = dyn.discontinuity_experiment(G, K, exp.get("radius", 4), eps, run.max_letters)
    support = [cur.full_support_check(k) for k in K]
    counts, totals = table.counts(), table.totals()
    doc = {
        **run.header("discontinuity"),
        "subgroup": G.name,
        "generators": list(G.labels),
        "epsilon": eps,
        "radius": table.radius,
        "full_support": support,
        "K": [cur.current_to_document(k)["terms"] for k in K],
        "counts": [{"length": r, "near_returns": counts[r], "words": totals[r]} for r in sorted(counts)],
        "rows": [{"word": w, "length": n, "min_distance": d}
                 for w, n, d in zip(table.words, table.lengths, table.min_distances)],
    }
    rows = list(zip(table.words, table.lengths, table.min_distances))
    return [Report("discontinuity", doc, ["group_word", "length", "min_distance"], rows)]


@main.command("discontinuity")
@_common
def discontinuity_cmd(run: Run):
    """Per-length counts of group words moving K back near K."""
    reports = _discontinuity_reports(run)
    for row in reports[0].doc["counts"]:
        click.echo(f"length {row['length']}: {row['near_returns']}/{row['words']}")
    run.emit(reports)


# Validation and randomized checks

def _flag_diagnostics(cfg: ExperimentConfig) -> list[str]:
    notes = []
    for name, phi in cfg.automorphisms.items():
        a = phi.assertions
        if a.iwip and not is_primitive(transition_matrix(phi)):
            notes.append(f"automorphisms.{name}: asserted iwip but the transition matrix is not primitive")
        if a.train_track_on_rose and not phi.is_positive:
            notes.append(f"automorphisms.{name}: asserted train track on the rose for a non-positive map")
    return notes


@main.command("validate")
@click.option("--config", "config", required=True, type=click.Path(dir_okay=False))
def validate_cmd(config: str):
    """Check schema, certification and name resolution of a config."""
    try:
        cfg = parse_config(load_document(config), name=Path(config).stem)
    except FreedynError as exc:
        click.echo(f"invalid: {exc} [config {config}]", err=True)
        sys.exit(EXIT_CONFIG)
    for note in _flag_diagnostics(cfg):
        click.echo(f"warning: {note}")
    click.echo(f"valid: {cfg.name} ({len(cfg.automorphisms)} automorphisms, "
               f"{len(cfg.experiments)} experiments)")


@main.command("check")
@click.option("--samples", type=click.IntRange(1), default=200, show_default=True)
@_common
def check_cmd(run: Run, samples: int):
    """Randomized property checks: <T_A, eta_g> = ||g|| and equivariance."""
    cfg = run.need_config()
    rng = np.random.default_rng(run.seed_rng)
    ctx = cfg.context
    autos = list(cfg.automorphisms.values())
    failures = []
    for i in range(samples):
        n = int(rng.integers(1, 51))
        raw = [int(c) for c in rng.integers(0, ctx.alphabet_size, n)]
        g = reduce(raw)
        if not g.letters:
            continue
        if pair(cayley_tree(ctx), cur.counting_current(ctx, g, 1)) != cyclic_length(g):
            failures.append({"sample": i, "property": "intersection", "word": ctx.format(g)})
        if autos:
            phi = autos[int(rng.integers(len(autos)))]
            T = MarkedMetricRose(ctx, tuple(int(x) for x in rng.integers(1, 6, ctx.rank)))
            eta = cur.counting_current(ctx, g, 1)
            if pair(act(T, phi), eta) != pair(T, cur.push_rational(phi, eta, run.max_letters)):
                failures.append({"sample": i, "property": "equivariance", "word": ctx.format(g)})
    doc = {**run.header("check"), "seed_rng": run.seed_rng, "samples": samples, "failures": failures}
    click.echo(f"{samples} samples, {len(failures)} failures")
    run.emit([Report("check", doc)])
    return EXIT_CHECK_FAILED if failures else EXIT_OK


EXPERIMENT_REPORTS = {
    "weights": lambda run: _weights_report(run, None, None),
    "pair": lambda run: _pair_report(run, None, None),
    "eigenvalue": lambda run: _eigenvalue_report(run, None),
    "ns-orbit": lambda run: _ns_reports(run, None),
    "fixed-points": _fixed_point_reports,
    "decay": _decay_reports,
    "limit-set": _limit_set_reports,
    "dirichlet": _dirichlet_reports,
    "discontinuity": _discontinuity_reports,
}


@main.command("all")
@_common
def all_cmd(run: Run):
    """Run every experiment listed in the config."""
    cfg = run.need_config()
    first_error = EXIT_OK
    for key in cfg.experiments:
        try:
            reports = EXPERIMENT_REPORTS[key](run)
        except FreedynError as exc:
            code = exit_code(exc)
            first_error = first_error or code
            run.emit([Report(f"{key}.error", _error_doc(run, key, exc, code))])
            click.echo(f"{key}: {type(exc).__name__}: {exc}", err=True)
            continue
        run.emit(reports)
        click.echo(f"{key}: {', '.join(r.name for r in reports)}")
    return first_error


def _error_doc(run: Run, key: str, exc: FreedynError, code: int) -> dict:
    doc = {**run.header(key), "error": type(exc).__name__, "message": str(exc), "exit_code": code}
    partial = getattr(exc, "partial", None)
    if isinstance(partial, dyn.OrbitReport):
        doc["partial"] = {
            "mode": partial.mode,
            "automorphism": partial.automorphism,
            "seed": partial.seed,
            "iterations": partial.iterations,
            "stop_reason": partial.stop_reason,
            "step_distances": partial.step_distances,
        }
    return doc


if __name__ == "__main__":
    main()
