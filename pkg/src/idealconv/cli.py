"""Command-line surface.

Commands: analyze, witness build/verify, preserve sigma/pi, game run,
sample, ideals list.  A JSON config file may supply any value; explicit
flags override it.  Outputs are deterministic for a fixed config and seed —
timestamps live only in the sidecar ``<out>.meta.json``.

Exit codes: 0 ok, 1 usage or config error, 2 undecided-dominated report,
3 preservation hypothesis failed, 4 internal audit failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import games as gm
from . import transforms as tr
from . import zoo
from .ideals import UnknownIdeal, builtin, builtin_names
from .meager import WitnessIntervals, WitnessRefuted, build_witness, verify_witness
from .sequences import (AnalysisParams, NotAnalyticP, RadiusSchedule,
                        as_point, format_point, gamma_estimate,
                        ideal_convergence_check, lambda_estimate,
                        lambda_q_estimate, limit_points_estimate)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNDECIDED = 2
EXIT_HYPOTHESIS = 3
EXIT_AUDIT = 4

HEURISTIC_BANNER = ("HEURISTIC: sampled maps estimate frequencies only; "
                    "topological largeness is not a sampling property")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    seq: Optional[str] = None
    ideal: Optional[str] = None
    gdi_file: Optional[str] = None
    horizon: int = 1 << 16
    radii: int = 10
    pitch: str = "1/1024"
    theta: str = "1/100"
    hit_min: int = 16
    q: str = "1/2"
    q_grid: list[str] = field(default_factory=lambda: ["1/8", "1/4", "1/2"])
    ell: Optional[str] = None
    mode: Optional[str] = None
    kind: Optional[str] = None
    rounds: int = 20
    trials: int = 100
    maps: int = 50
    length: int = 256
    seed: int = 0
    witness_file: Optional[str] = None
    out: Optional[str] = None

    def validate(self) -> None:
        for name in ("horizon", "radii", "hit_min", "rounds", "trials",
                     "maps", "length"):
            if getattr(self, name) < 0 or (name in ("horizon", "radii")
                                           and getattr(self, name) < 1):
                raise ValueError(f"{name} must be positive")
        for name in ("pitch", "theta", "q"):
            if Fraction(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_json(self) -> dict:
        body = asdict(self)
        body.pop("out", None)      # output location is not analysis config
        return body

    @staticmethod
    def from_json(body: dict) -> "RunConfig":
        return RunConfig(**body)

    def analysis_params(self) -> AnalysisParams:
        return AnalysisParams(
            horizon=self.horizon,
            schedule=RadiusSchedule.dyadic(self.radii),
            pitch=Fraction(self.pitch),
            hit_min=self.hit_min,
            theta=Fraction(self.theta),
            q_grid=tuple(Fraction(v) for v in self.q_grid))

    def ideal_handle(self):
        spec = None
        if self.gdi_file:
            spec = json.loads(Path(self.gdi_file).read_text())
        return builtin(self.ideal, gdi_spec=spec)


def _emit(out: Optional[str], payload: dict, csv_rows=None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    base = Path(out)
    base.parent.mkdir(parents=True, exist_ok=True)
    Path(str(base) + ".json").write_text(text)
    if csv_rows is not None:
        lines = [",".join(row) for row in csv_rows]
        Path(str(base) + ".csv").write_text("\n".join(lines) + "\n")
    meta = {"written_at_unix": time.time()}
    Path(str(base) + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True) + "\n")


def cmd_analyze(cfg: RunConfig) -> int:
    cfg.validate()
    x = zoo.get_sequence(cfg.seq)
    handle = cfg.ideal_handle()
    params = cfg.analysis_params()
    mode = cfg.mode or "all"
    reports = {}
    undecided_shares = []
    if mode in ("all", "limits"):
        reports["limit_points"] = limit_points_estimate(x, params).to_json()
    if mode in ("all", "gamma"):
        g = gamma_estimate(x, handle, params)
        reports["gamma"] = g.to_json()
        undecided_shares.append(g.undecided_share)
    if mode == "all" and handle.analytic_p:
        lam = lambda_estimate(x, handle, params)
        reports["lambda"] = lam.to_json()
        undecided_shares.append(lam.undecided_share)
    elif mode == "lambda":
        lam = lambda_estimate(x, handle, params)
        reports["lambda"] = lam.to_json()
        undecided_shares.append(lam.undecided_share)
    if mode == "lambda-q":
        lam = lambda_q_estimate(x, handle, Fraction(cfg.q), params)
        reports["lambda_q"] = lam.to_json()
        undecided_shares.append(lam.undecided_share)
    if mode == "convergence":
        if cfg.ell is None:
            raise ValueError("convergence mode needs --ell")
        conv = ideal_convergence_check(x, handle, Fraction(cfg.ell), params)
        reports["convergence"] = conv.to_json()
    payload = {"config": cfg.to_json(), "reports": reports}
    csv_rows = None
    main_key = ("gamma" if "gamma" in reports else
                "lambda" if "lambda" in reports else
                "lambda_q" if "lambda_q" in reports else "limit_points")
    if main_key in reports:
        csv_rows = [["candidate", "eps", "exact", "numeric", "class"]]
        for cand in reports[main_key]["candidates"]:
            for r in cand["radii"]:
                csv_rows.append([cand["point"], r["eps"], r["exact"] or "",
                                 r["numeric"] or "", cand["classification"]])
    _emit(cfg.out, payload, csv_rows)
    if undecided_shares and max(undecided_shares) > Fraction(1, 2):
        return EXIT_UNDECIDED
    return EXIT_OK


def cmd_witness_build(cfg: RunConfig) -> int:
    cfg.validate()
    handle = cfg.ideal_handle()
    w = build_witness(handle, Fraction(cfg.q), cfg.horizon)
    payload = {"config": cfg.to_json(), "witness": w.to_json()}
    _emit(cfg.out, payload)
    return EXIT_OK


def cmd_witness_verify(cfg: RunConfig) -> int:
    cfg.validate()
    handle = cfg.ideal_handle()
    if cfg.witness_file:
        w = WitnessIntervals.from_json(
            json.loads(Path(cfg.witness_file).read_text())["witness"])
    else:
        w = build_witness(handle, Fraction(cfg.q), cfg.horizon)
    report = verify_witness(handle, w, cfg.trials, cfg.horizon, cfg.seed)
    payload = {"config": cfg.to_json(), "report": report.to_json()}
    _emit(cfg.out, payload)
    return EXIT_OK


def cmd_preserve(cfg: RunConfig) -> int:
    cfg.validate()
    x = zoo.get_sequence(cfg.seq)
    handle = cfg.ideal_handle()
    params = cfg.analysis_params()
    w = build_witness(handle, Fraction(cfg.q), cfg.horizon)
    mode = cfg.mode or "preserve"
    if mode == "add":
        if cfg.ell is None:
            raise ValueError("add mode needs --ell")
        ell = as_point(Fraction(cfg.ell), x.dim)
        if cfg.kind == "pi":
            result = tr.cluster_adding_pi(x, ell, handle, w, params,
                                          horizon=cfg.horizon)
        else:
            result = tr.cluster_adding_sigma(x, ell, handle, w, params,
                                             horizon=cfg.horizon)
    else:
        if cfg.kind == "pi":
            result = tr.cluster_preserving_pi(x, handle, w, params,
                                              horizon=cfg.horizon)
        else:
            result = tr.cluster_preserving_sigma(x, handle, w, params,
                                                 horizon=cfg.horizon)
    payload = {"config": cfg.to_json(), "result": result.to_json()}
    _emit(cfg.out, payload)
    return EXIT_OK


def cmd_game(cfg: RunConfig) -> int:
    cfg.validate()
    if cfg.ell is None:
        raise ValueError("game run needs --ell")
    x = zoo.get_sequence(cfg.seq)
    handle = cfg.ideal_handle()
    target = gm.GameTarget(ell=as_point(Fraction(cfg.ell), x.dim),
                           q=Fraction(cfg.q),
                           schedule=RadiusSchedule.dyadic(cfg.radii))
    transcript = gm.run_game(x, handle, target, cfg.rounds, cfg.horizon,
                             cfg.seed, kind=cfg.kind or "sigma")
    payload = {"config": cfg.to_json(), "transcript": transcript.to_json()}
    _emit(cfg.out, payload)
    return EXIT_OK


def cmd_sample(cfg: RunConfig) -> int:
    cfg.validate()
    x = zoo.get_sequence(cfg.seq)
    handle = cfg.ideal_handle()
    params = cfg.analysis_params()
    base = gamma_estimate(x, handle, params)
    base_set = set(base.points())
    grid = [c.point for c in base.candidates]
    preserved = 0
    rows = []
    for i in range(cfg.maps):
        seed_i = cfg.seed * 100003 + i
        if cfg.kind == "pi":
            t = tr.random_pi(seed_i, window=16, length=cfg.length)
        else:
            t = tr.random_sigma(seed_i, length=cfg.length)
        y = tr.apply(t, x)
        sub_params = AnalysisParams(
            horizon=min(cfg.length, params.horizon),
            schedule=params.schedule, pitch=params.pitch,
            hit_min=max(2, params.hit_min // 4), theta=params.theta,
            q_grid=params.q_grid)
        g = gamma_estimate(y, handle, sub_params, candidates=grid)
        same = set(g.points()) == base_set
        preserved += same
        rows.append({"seed": seed_i, "preserved": same,
                     "clusters": [format_point(p) for p in g.points()]})
    payload = {
        "banner": HEURISTIC_BANNER,
        "heuristic": True,
        "config": cfg.to_json(),
        "base_clusters": [format_point(p) for p in sorted(base_set)],
        "preserved_fraction": f"{preserved}/{cfg.maps}",
        "samples": rows,
    }
    _emit(cfg.out, payload)
    return EXIT_OK


def cmd_ideals_list(cfg: RunConfig) -> int:
    entries = []
    for name in builtin_names():
        h = builtin(name)
        entries.append({
            "name": name,
            "analytic_p": h.analytic_p,
            "lscsm": None if h.lscsm is None else h.lscsm.name,
            "special_rule": h.special_rule,
            "witness_rule": h.witness_rule,
        })
    payload = {"config": cfg.to_json(), "ideals": entries}
    _emit(cfg.out, payload)
    return EXIT_OK


def _build_parser() -> _Parser:
    p = _Parser(prog="idealconv",
                description="ideal convergence analysis at desk scale")
    p.add_argument("--config", help="JSON config file; flags override it")
    sub = p.add_subparsers(dest="command")

    def add_common(sp, *names):
        if "seq" in names:
            sp.add_argument("--seq")
        if "ideal" in names:
            sp.add_argument("--ideal")
            sp.add_argument("--gdi-file", dest="gdi_file")
        sp.add_argument("--horizon", type=int)
        sp.add_argument("--radii", type=int)
        sp.add_argument("--pitch")
        sp.add_argument("--theta")
        sp.add_argument("--hit-min", dest="hit_min", type=int)
        sp.add_argument("--q")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")

    sp = sub.add_parser("analyze")
    add_common(sp, "seq", "ideal")
    sp.add_argument("--mode", choices=["all", "gamma", "lambda", "lambda-q",
                                       "limits", "convergence"])
    sp.add_argument("--ell")

    wit = sub.add_parser("witness")
    wsub = wit.add_subparsers(dest="witness_command")
    sp = wsub.add_parser("build")
    add_common(sp, "ideal")
    sp = wsub.add_parser("verify")
    add_common(sp, "ideal")
    sp.add_argument("--witness", dest="witness_file")
    sp.add_argument("--trials", type=int)

    pres = sub.add_parser("preserve")
    psub = pres.add_subparsers(dest="preserve_kind")
    for kind in ("sigma", "pi"):
        sp = psub.add_parser(kind)
        add_common(sp, "seq", "ideal")
        sp.add_argument("--mode", choices=["add", "preserve"])
        sp.add_argument("--ell")

    game = sub.add_parser("game")
    gsub = game.add_subparsers(dest="game_command")
    sp = gsub.add_parser("run")
    add_common(sp, "seq", "ideal")
    sp.add_argument("--ell")
    sp.add_argument("--rounds", type=int)
    sp.add_argument("--kind", choices=["sigma", "pi"])

    sp = sub.add_parser("sample")
    add_common(sp, "seq", "ideal")
    sp.add_argument("--maps", type=int)
    sp.add_argument("--length", type=int)
    sp.add_argument("--kind", choices=["sigma", "pi"])

    sp = sub.add_parser("ideals")
    isub = sp.add_subparsers(dest="ideals_command")
    lp = isub.add_parser("list")
    lp.add_argument("--out")

    return p


def _merge_config(args: argparse.Namespace) -> RunConfig:
    file_values = {}
    if getattr(args, "config", None):
        file_values = json.loads(Path(args.config).read_text())
    command = args.command
    if command == "witness":
        command = f"witness-{args.witness_command}"
    elif command == "game":
        command = "game-run"
    elif command == "preserve":
        file_values.setdefault("kind", args.preserve_kind)
        if args.preserve_kind:
            file_values["kind"] = args.preserve_kind
    elif command == "ideals":
        command = "ideals-list"
    cfg = RunConfig(command=command)
    for key, value in file_values.items():
        if key != "command" and hasattr(cfg, key):
            setattr(cfg, key, value)
    for key, value in vars(args).items():
        if key in ("config", "command", "witness_command", "game_command",
                   "preserve_kind", "ideals_command"):
            continue
        if value is not None and hasattr(cfg, key):
            setattr(cfg, key, value)
    return cfg


_HANDLERS = {
    "analyze": cmd_analyze,
    "witness-build": cmd_witness_build,
    "witness-verify": cmd_witness_verify,
    "preserve": cmd_preserve,
    "game-run": cmd_game,
    "sample": cmd_sample,
    "ideals-list": cmd_ideals_list,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    if args.command == "witness" and not getattr(args, "witness_command", None):
        sys.stderr.write("witness needs a subcommand: build or verify\n")
        return EXIT_USAGE
    if args.command == "game" and not getattr(args, "game_command", None):
        sys.stderr.write("game needs a subcommand: run\n")
        return EXIT_USAGE
    if args.command == "preserve" and not getattr(args, "preserve_kind", None):
        sys.stderr.write("preserve needs a subcommand: sigma or pi\n")
        return EXIT_USAGE
    if args.command == "ideals" and not getattr(args, "ideals_command", None):
        sys.stderr.write("ideals needs a subcommand: list\n")
        return EXIT_USAGE
    try:
        cfg = _merge_config(args)
        handler = _HANDLERS[cfg.command]
        return handler(cfg)
    except tr.HypothesisFailed as exc:
        sys.stderr.write(json.dumps({"error": "hypothesis-failed",
                                     "detail": str(exc)}) + "\n")
        return EXIT_HYPOTHESIS
    except (WitnessRefuted, AssertionError) as exc:
        sys.stderr.write(json.dumps({"error": "audit-failure",
                                     "detail": str(exc)}) + "\n")
        return EXIT_AUDIT
    except (UnknownIdeal, NotAnalyticP, ValueError, KeyError, OSError,
            json.JSONDecodeError) as exc:
        sys.stderr.write(json.dumps({"error": "config",
                                     "detail": str(exc)}) + "\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
