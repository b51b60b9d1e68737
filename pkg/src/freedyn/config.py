"""Experiment configuration: YAML (or JSON) documents with a ``version`` field."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import yaml

from . import currents as cur
from .automorphism import DEFAULT_MAX_LETTERS, Assertions, Automorphism, apply, power
from .dynamics import DEFAULT_BUDGET, DEFAULT_TOL, SubgroupSpec
from .errors import CertificationError, ConfigError, FreedynError
from .freegroup import GroupContext, Word
from .trees import MarkedMetricRose

CONFIG_VERSION = 1
FLAG_KEYS = ("assert_iwip", "assert_atoroidal", "assert_train_track_on_rose")
EXPERIMENTS = (
    "weights",
    "pair",
    "eigenvalue",
    "ns-orbit",
    "fixed-points",
    "decay",
    "limit-set",
    "dirichlet",
    "discontinuity",
)


@dataclass
class ExperimentConfig:
    name: str
    context: GroupContext
    depth: int
    automorphisms: dict[str, Automorphism]
    seeds: list[Word]
    trees: dict[str, MarkedMetricRose]
    subgroups: dict[str, SubgroupSpec]
    experiments: dict[str, dict]
    tol: float = DEFAULT_TOL
    eigen_tol: float = 1e-10
    resolution: float = 1e-3
    iterations: int = DEFAULT_BUDGET
    eigen_max_iter: int = 100_000
    max_word_letters: int = DEFAULT_MAX_LETTERS
    output_dir: str = "reports"
    output_format: str = "both"
    raw: dict = field(default_factory=dict, repr=False)

    def automorphism(self, name: str, where: str) -> Automorphism:
        if name not in self.automorphisms:
            raise ConfigError(f"unknown automorphism {name!r}", where)
        return self.automorphisms[name]

    def experiment(self, key: str) -> dict:
        return dict(self.experiments.get(key) or {})

    def word(self, spec: Any, where: str) -> Word:
        """A word given as a string, or as ``{word, image: {automorphism, power}}``."""
        if isinstance(spec, str):
            return _parse(self.context, spec, where)
        if isinstance(spec, Mapping) and "word" in spec:
            w = _parse(self.context, spec["word"], f"{where}.word")
            img = spec.get("image")
            if img is not None:
                phi = self.automorphism(img.get("automorphism"), f"{where}.image.automorphism")
                w = apply(power(phi, int(img.get("power", 1))), w)
            return w
        raise ConfigError("expected a word string or a mapping with 'word'", where)

    def current(self, spec: Any, where: str) -> cur.TruncatedCurrent:
        """A current given as a list of terms ``{word|uniform|uniform_rational, coefficient}``."""
        if isinstance(spec, (str, Mapping)):
            spec = [spec]
        if not isinstance(spec, list) or not spec:
            raise ConfigError("expected a nonempty list of current terms", where)
        parts = []
        for i, term in enumerate(spec):
            here = f"{where}[{i}]"
            if isinstance(term, str):
                term = {"word": term}
            coef = _number(term.get("coefficient", 1), f"{here}.coefficient")
            if coef < 0:
                raise ConfigError("coefficients must be nonnegative", f"{here}.coefficient")
            if "word" in term:
                w = self.word(term, here)
                if w.is_identity:
                    raise ConfigError("counting current of the identity is undefined", f"{here}.word")
                mu = cur.counting_current(self.context, w, self.depth)
            elif term.get("uniform"):
                mu = cur.uniform_current(self.context, self.depth)
            elif term.get("uniform_rational"):
                mu = cur.uniform_rational_current(self.context, self.depth)
            else:
                raise ConfigError("term needs 'word', 'uniform' or 'uniform_rational'", here)
            parts.append((coef, mu))
        return cur.linear_combination(parts)


def _parse(context: GroupContext, text: Any, where: str) -> Word:
    if not isinstance(text, str):
        raise ConfigError(f"expected a word string, got {text!r}", where)
    try:
        return context.parse(text)
    except FreedynError as exc:
        raise ConfigError(str(exc), where) from None


def _number(raw: Any, where: str) -> Fraction:
    if isinstance(raw, bool):
        raise ConfigError("expected a number", where)
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        return Fraction(repr(raw))
    if isinstance(raw, str):
        try:
            return Fraction(raw)
        except ValueError:
            pass
    raise ConfigError(f"expected a number, got {raw!r}", where)


def _positive_float(raw: Any, where: str, upper: float | None = None) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"expected a positive number, got {raw!r}", where)
    if not raw > 0 or (upper is not None and raw > upper):
        raise ConfigError(f"value {raw!r} outside (0, {upper if upper is not None else 'inf'}]", where)
    return float(raw)


def _positive_int(raw: Any, where: str, upper: int | None = None) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int) or raw < 1 or (upper is not None and raw > upper):
        raise ConfigError(f"expected an integer in [1, {upper or 'inf'}], got {raw!r}", where)
    return raw


def _section(doc: Mapping, key: str, default=None) -> Any:
    value = doc.get(key, default)
    if value is None:
        return default
    return value


def load_document(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"parse error: {exc}", str(path)) from None
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping", str(path))
    return doc


def parse_config(doc: Mapping, name: str = "config") -> ExperimentConfig:
    if doc.get("version") != CONFIG_VERSION:
        raise ConfigError(f"unsupported or missing version {doc.get('version')!r}", "version")
    ctx_doc = doc.get("context")
    if not isinstance(ctx_doc, Mapping) or not isinstance(ctx_doc.get("basis"), list):
        raise ConfigError("expected a mapping with a 'basis' list", "context")
    try:
        context = GroupContext(tuple(str(b) for b in ctx_doc["basis"]))
    except FreedynError as exc:
        raise ConfigError(str(exc), "context.basis") from None
    if "rank" in ctx_doc and ctx_doc["rank"] != context.rank:
        raise ConfigError(f"rank {ctx_doc['rank']} does not match basis of size {context.rank}", "context.rank")

    depth = _positive_int(doc.get("depth", cur.DEFAULT_DEPTH), "depth", upper=8)
    tols = _section(doc, "tolerances", {})
    budgets = _section(doc, "budgets", {})
    output = _section(doc, "output", {})

    automorphisms: dict[str, Automorphism] = {}
    for label, spec in (_section(doc, "automorphisms", {}) or {}).items():
        where = f"automorphisms.{label}"
        if not isinstance(spec, Mapping):
            raise ConfigError("expected a mapping", where)
        for key in ("images", "inverse"):
            block = spec.get(key)
            if not isinstance(block, Mapping):
                raise ConfigError(f"missing '{key}' block", f"{where}.{key}")
            missing = [b for b in context.basis if b not in block]
            if missing:
                raise ConfigError(f"no image for {missing}", f"{where}.{key}")
            extra = [b for b in block if b not in context.basis]
            if extra:
                raise ConfigError(f"unknown letters {extra}", f"{where}.{key}")
        flags = []
        for key in FLAG_KEYS:
            if not isinstance(spec.get(key), bool):
                raise ConfigError("assertion flag must be given explicitly as true/false", f"{where}.{key}")
            flags.append(spec[key])
        fwd = [_parse(context, spec["images"][b], f"{where}.images.{b}") for b in context.basis]
        bwd = [_parse(context, spec["inverse"][b], f"{where}.inverse.{b}") for b in context.basis]
        try:
            automorphisms[label] = Automorphism(context, fwd, bwd, label, Assertions(*flags))
        except CertificationError as exc:
            raise ConfigError(f"certification failed for letter {exc.letter!r}: {exc}",
                              f"{where}.inverse.{exc.letter}") from None

    seeds = [_parse(context, s, f"seeds[{i}]") for i, s in enumerate(_section(doc, "seeds", []))]

    trees: dict[str, MarkedMetricRose] = {}
    for label, spec in (_section(doc, "trees", {}) or {}).items():
        where = f"trees.{label}"
        lengths = spec.get("lengths", [1] * context.rank) if isinstance(spec, Mapping) else None
        if not isinstance(lengths, list):
            raise ConfigError("expected a 'lengths' list", where)
        marking = None
        if spec.get("marking") is not None:
            if spec["marking"] not in automorphisms:
                raise ConfigError(f"unknown automorphism {spec['marking']!r}", f"{where}.marking")
            marking = automorphisms[spec["marking"]]
        try:
            trees[label] = MarkedMetricRose(
                context, tuple(_number(x, f"{where}.lengths[{i}]") for i, x in enumerate(lengths)), marking
            )
        except FreedynError as exc:
            raise ConfigError(str(exc), f"{where}.lengths") from None

    subgroups: dict[str, SubgroupSpec] = {}
    for label, gens in (_section(doc, "subgroups", {}) or {}).items():
        where = f"subgroups.{label}"
        if not isinstance(gens, list) or not gens:
            raise ConfigError("expected a nonempty list of automorphism names", where)
        for i, g in enumerate(gens):
            if g not in automorphisms:
                raise ConfigError(f"unknown generator {g!r}", f"{where}[{i}]")
        subgroups[label] = SubgroupSpec(tuple(automorphisms[g] for g in gens), tuple(gens), label)

    experiments = _section(doc, "experiments", {}) or {}
    if not isinstance(experiments, Mapping):
        raise ConfigError("expected a mapping", "experiments")
    for key in experiments:
        if key not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {key!r}", f"experiments.{key}")

    fmt = output.get("format", "both")
    if fmt not in ("json", "csv", "both"):
        raise ConfigError(f"format must be json, csv or both, got {fmt!r}", "output.format")

    cfg = ExperimentConfig(
        name=str(doc.get("name", name)),
        context=context,
        depth=depth,
        automorphisms=automorphisms,
        seeds=seeds,
        trees=trees,
        subgroups=subgroups,
        experiments={k: dict(v or {}) for k, v in experiments.items()},
        tol=_positive_float(tols.get("step", DEFAULT_TOL), "tolerances.step", 1.0),
        eigen_tol=_positive_float(tols.get("eigen", 1e-10), "tolerances.eigen", 1.0),
        resolution=_positive_float(tols.get("resolution", 1e-3), "tolerances.resolution"),
        iterations=_positive_int(budgets.get("iterations", DEFAULT_BUDGET), "budgets.iterations", 10_000),
        eigen_max_iter=_positive_int(budgets.get("eigen_max_iter", 100_000), "budgets.eigen_max_iter"),
        max_word_letters=_positive_int(
            budgets.get("max_word_letters", DEFAULT_MAX_LETTERS), "budgets.max_word_letters"
        ),
        output_dir=str(output.get("dir", "reports")),
        output_format=fmt,
        raw=dict(doc),
    )
    _check_references(cfg)
    return cfg


def _check_references(cfg: ExperimentConfig) -> None:
    for key, exp in cfg.experiments.items():
        where = f"experiments.{key}"
        if "automorphism" in exp:
            cfg.automorphism(exp["automorphism"], f"{where}.automorphism")
        if "subgroup" in exp and exp["subgroup"] not in cfg.subgroups:
            raise ConfigError(f"unknown subgroup {exp['subgroup']!r}", f"{where}.subgroup")
        if "tree" in exp and exp["tree"] not in cfg.trees:
            raise ConfigError(f"unknown tree {exp['tree']!r}", f"{where}.tree")
        if exp.get("seeds") not in (None, "all") and not isinstance(exp.get("seeds"), list):
            raise ConfigError("seeds must be 'all' or a list of words", f"{where}.seeds")
        for i, s in enumerate(exp.get("seeds") or []) if isinstance(exp.get("seeds"), list) else []:
            _parse(cfg.context, s, f"{where}.seeds[{i}]")
        if "seed" in exp:
            cfg.word(exp["seed"], f"{where}.seed")
        for int_key in ("radius", "n0", "n", "phi_index", "iterations"):
            if int_key in exp:
                v = exp[int_key]
                if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                    raise ConfigError("expected a nonnegative integer", f"{where}.{int_key}")
        if "epsilon" in exp:
            _positive_float(exp["epsilon"], f"{where}.epsilon")
        if "mode" in exp and exp["mode"] not in ("current", "tree", "both"):
            raise ConfigError("mode must be current, tree or both", f"{where}.mode")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(load_document(path), name=path.stem)
