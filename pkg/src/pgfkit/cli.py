"""pgfkit command line.

Subcommands print plain values (single computations) or a report: CSV rows
followed by a ``key = value`` summary block.  With ``--out DIR`` the report is
written to DIR/<experiment>.csv and DIR/<experiment>.summary instead.

Exit status: 0 on success, 1 when any assertion-class check fails (the report
is still written), 2 for usage and configuration errors.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import lab
from .cache import BallCache
from .farey import TORUS, Slope, SurfaceModel, curve_distance, curve_geodesic
from .freeprod import Word, normal_form, parse_syllables
from .ledger import ConstantsLedger
from .markings import Marking, MarkingGraphConfig, base_marking, distance_formula_estimate, marking_ball, marking_distance
from .metric import PreconditionError, fit_comparability
from .projections import AnnularDomain, EmptyProjection, NotAGeodesic, annular_distance, bgim_diameter

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    surface: str = "torus"
    alpha1: Optional[str] = None
    beta1: Optional[str] = None
    D: int = 6
    powers: Tuple[int, int] = (1, 1)
    D_range: str = "1..8"
    max_syllables: int = 4
    max_exponent: int = 3
    samples: int = 500
    radius: int = 4
    seed: int = 0
    A2: Optional[int] = None
    radius_cap: int = 12
    oracle: bool = False
    cache: Optional[str] = None
    out: Optional[str] = None
    ledger: Optional[str] = None

    def validate(self) -> "ExperimentConfig":
        for name in ("D", "max_syllables", "max_exponent", "samples", "radius", "radius_cap"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise UsageError(f"{name} must be a positive integer, got {v!r}")
        if self.A2 is not None and self.A2 <= 0:
            raise UsageError("A2 must be positive")
        if len(self.powers) != 2 or any(int(p) == 0 for p in self.powers):
            raise UsageError("powers must be two nonzero integers")
        if (self.alpha1 is None) != (self.beta1 is None):
            raise UsageError("give both alpha1 and beta1 or neither")
        self.D_values()
        self.surface_model()
        return self

    def surface_model(self) -> SurfaceModel:
        try:
            return SurfaceModel.parse(self.surface)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def D_values(self) -> List[int]:
        try:
            lo, hi = (int(x) for x in self.D_range.split(".."))
        except ValueError:
            raise UsageError(f"range must look like 1..8, got {self.D_range!r}") from None
        if lo < 1 or hi < lo:
            raise UsageError(f"empty or invalid range {self.D_range!r}")
        return list(range(lo, hi + 1))

    def group(self) -> lab.RealizedGroup:
        s = self.surface_model()
        k, l = (int(p) for p in self.powers)
        if self.alpha1 is None:
            return lab.family([self.D], k, l, s)[0]
        try:
            return lab.RealizedGroup(Slope.parse(self.alpha1), Slope.parse(self.beta1), k, l, s)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    @classmethod
    def load(cls, path: Optional[str]) -> "ExperimentConfig":
        if path is None:
            return cls()
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "powers" in data:
            data["powers"] = tuple(data["powers"])
        return cls(**data)


# ---------------------------------------------------------------------------
# argument parsing


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--oracle", action="store_true", default=None, help="force brute-force paths")
    p.add_argument("--radius-cap", type=int, dest="radius_cap")
    p.add_argument("--A2", type=int)
    p.add_argument("--out", help="directory for report files")
    p.add_argument("--cache", help="ball cache directory (default: $PGFKIT_CACHE_DIR)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="pgfkit", description=__doc__.splitlines()[0])
    top = parser.add_subparsers(dest="area", required=True)

    def group(name):
        sp = top.add_parser(name)
        return sp.add_subparsers(dest="cmd", required=True)

    farey = group("farey")
    for cmd in ("dist", "geodesic"):
        c = farey.add_parser(cmd, parents=[common])
        c.add_argument("a")
        c.add_argument("b")
        c.add_argument("--surface")

    proj = group("proj")
    c = proj.add_parser("coeff", parents=[common], help="annular distance d_Y(a, b)")
    c.add_argument("core")
    c.add_argument("a")
    c.add_argument("b")
    c = proj.add_parser("bgim", parents=[common], help="projection diameter of a geodesic")
    c.add_argument("core")
    c.add_argument("path", nargs="+")

    mk = group("markings")
    for cmd in ("dist", "formula"):
        c = mk.add_parser(cmd, parents=[common])
        c.add_argument("m1", help='e.g. "{0/1, 1/0} @1"')
        c.add_argument("m2")

    grp = group("group")
    for cmd in ("nf", "realize", "trace"):
        c = grp.add_parser(cmd, parents=[common])
        c.add_argument("word", help="e.g. A(2)B(-1)")

    exp = group("exp")
    for cmd in ("d0", "lemma31", "lemma32", "lemma33", "distance-formula", "distortion", "thm510", "constants"):
        c = exp.add_parser(cmd, parents=[common])
        c.add_argument("--range", dest="D_range")
        c.add_argument("--D", type=int)
        c.add_argument("--samples", type=int)
        c.add_argument("--max-syllables", type=int, dest="max_syllables")
        c.add_argument("--max-exponent", type=int, dest="max_exponent")
        c.add_argument("--radius", type=int)
        c.add_argument("--ledger", help="ledger file to reuse instead of estimating")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    return cfg.validate()


# ---------------------------------------------------------------------------
# commands


def _slope(text: str) -> Slope:
    try:
        return Slope.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _marking(text: str, s: SurfaceModel) -> Marking:
    try:
        return Marking.parse(text, s)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _word(text: str) -> Word:
    try:
        return normal_form(parse_syllables(text))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(out, report: lab.Report, cfg: ExperimentConfig, extra: Sequence[Tuple[str, str]] = ()) -> int:
    if cfg.out:
        d = Path(cfg.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{report.name}.csv").write_text(report.to_csv())
        (d / f"{report.name}.summary").write_text(report.summary_text())
        for name, text in extra:
            (d / name).write_text(text)
        out.write(report.summary_text())
    else:
        out.write(report.to_csv())
        out.write("\n")
        out.write(report.summary_text())
    return EXIT_OK if report.passed else EXIT_FAIL


def _ledger(cfg: ExperimentConfig, rg: lab.RealizedGroup) -> ConstantsLedger:
    if cfg.ledger:
        try:
            return ConstantsLedger.loads(Path(cfg.ledger).read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read ledger {cfg.ledger}: {exc}") from None
    return lab.estimate_constants(rg, seed=cfg.seed)


def _b_powers(n: int) -> List[Word]:
    return [Word((("B", (k,)),)) for k in range(-n, n + 1) if k]


def run_exp(cmd: str, cfg: ExperimentConfig, out) -> int:
    rng = np.random.default_rng(cfg.seed)
    if cmd == "d0":
        groups = lab.family(cfg.D_values(), *cfg.powers, surface=cfg.surface_model())
        return _emit(out, lab.d0_probe(groups, cfg.max_syllables, cfg.max_exponent), cfg)
    rg = cfg.group()
    if cmd == "constants":
        led = _ledger(cfg, rg)
        rep = lab.Report("constants", ("name", "value", "kind", "sample"))
        for name, e in led.items():
            rep.rows.append((name, e.value, e.kind, e.note))
        rep.summary.update(config=str(rg), seed=cfg.seed, verdict=lab.PASS)
        return _emit(out, rep, cfg, [("ledger.txt", led.dumps())])
    if cmd in ("lemma31", "lemma32", "lemma33"):
        led = _ledger(cfg, rg)
        hs = _b_powers(cfg.max_exponent)
        if cmd == "lemma31":
            rep = lab.lemma31_check(rg, hs, led["power_N"], led["bgim_M"])
        elif cmd == "lemma32":
            rep = lab.lemma32_check(rg, hs, led["power_N"], led["delta"])
        else:
            rep = lab.local_qg_check(rg, hs, led["delta"], led["thin_C0"])
        return _emit(out, rep, cfg, [("ledger.txt", led.dumps())])
    if cmd == "distortion":
        half = cfg.samples // 2
        p1 = lab.sample_pairs(rng, half, cfg.max_syllables, cfg.max_exponent)
        p2 = lab.sample_pairs(rng, half, cfg.max_syllables, cfg.max_exponent, exclude=p1)
        budget = cfg.A2 if cfg.A2 is not None else rg.marking_config.minimal_A2
        f1, rep = lab.distortion_fit(rg, p1, budget)
        f2, rep2 = lab.distortion_fit(rg, p2, budget)
        rep.rows += rep2.rows
        drift = abs(f1.K - f2.K) / f1.K
        rep.summary.update(pairs=len(p1) + len(p2), K_second=f2.K, C_second=f2.C, K_drift=drift)
        rep.summary["verdict"] = lab._verdict(drift <= 0.2)
        return _emit(out, rep, cfg)
    if cmd == "thm510":
        pairs = lab.sample_pairs(rng, cfg.samples, cfg.max_syllables, cfg.max_exponent)
        cands = sorted({Slope.of(1, 1)} | {lab.random_slope(rng, 20) for _ in range(30)})
        cores = lab.offorbit_cores(rg, cands)
        return _emit(out, lab.thm510_check(rg, pairs, cores), cfg)
    if cmd == "distance-formula":
        mcfg = MarkingGraphConfig.standard(cfg.surface_model())
        A2 = cfg.A2 if cfg.A2 is not None else mcfg.minimal_A2
        cache = BallCache(cfg.cache) if cfg.cache else None
        ball = sorted(marking_ball(base_marking(mcfg.surface), cfg.radius, mcfg, cache))
        allp = list(itertools.combinations(ball, 2))
        idx = rng.permutation(len(allp))[: cfg.samples]
        rep = lab.Report("distance-formula", ("m1", "m2", "distance", "estimate"))
        vals = []
        for i in sorted(int(j) for j in idx):
            x, y = allp[i]
            d = marking_distance(x, y, mcfg, cfg.radius_cap, oracle=cfg.oracle)
            e = distance_formula_estimate(x, y, A2, mcfg, oracle=cfg.oracle)[0]
            vals.append((d, e))
            rep.rows.append((x, y, d, e))
        fit = fit_comparability(vals, A2)
        rep.summary.update(ball=len(ball), pairs=len(vals), A2=A2, K=fit.K, C=fit.C, verdict=lab._verdict(fit.K <= 20))
        return _emit(out, rep, cfg)
    raise UsageError(f"unknown experiment {cmd}")


def run(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = _config(args)
        s = cfg.surface_model()
        if args.area == "farey":
            if getattr(args, "surface", None):
                cfg.surface = args.surface
                s = cfg.surface_model()
            a, b = _slope(args.a), _slope(args.b)
            if args.cmd == "dist":
                out.write(f"{curve_distance(a, b, s, oracle=cfg.oracle)}\n")
            else:
                out.write(" ".join(map(str, curve_geodesic(a, b, s))) + "\n")
            return EXIT_OK
        if args.area == "proj":
            Y = AnnularDomain(_slope(args.core))
            if args.cmd == "coeff":
                out.write(f"{annular_distance(Y, _slope(args.a), _slope(args.b), oracle=cfg.oracle)}\n")
            else:
                d = bgim_diameter([_slope(x) for x in args.path], Y, s, oracle=cfg.oracle)
                out.write("empty\n" if d is None else f"{d}\n")
            return EXIT_OK
        if args.area == "markings":
            mcfg = MarkingGraphConfig.standard(s)
            m1, m2 = _marking(args.m1, s), _marking(args.m2, s)
            if args.cmd == "dist":
                out.write(f"{marking_distance(m1, m2, mcfg, cfg.radius_cap, oracle=cfg.oracle)}\n")
            else:
                A2 = cfg.A2 if cfg.A2 is not None else mcfg.minimal_A2
                total, terms = distance_formula_estimate(m1, m2, A2, mcfg, oracle=cfg.oracle)
                for dom, t in terms:
                    out.write(f"{dom},{t}\n")
                out.write(f"total = {total}\n")
            return EXIT_OK
        if args.area == "group":
            w = _word(args.word)
            if args.cmd == "nf":
                out.write(f"{w}\n")
                return EXIT_OK
            m = lab.realize(cfg.group(), w)
            out.write(f"{m}\n" if args.cmd == "realize" else f"{m.trace}\n")
            return EXIT_OK
        return run_exp(args.cmd, cfg, out)
    except (UsageError, PreconditionError, EmptyProjection, NotAGeodesic, lab.UnsupportedRealization) as exc:
        sys.stderr.write(f"pgfkit: {exc}\n")
        return EXIT_USAGE


def main(argv: Optional[Sequence[str]] = None) -> int:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
