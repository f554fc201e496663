"""Command-line front end for every pipeline.

One multiplexed binary: config validation, matchup solving, metagame
iteration, balance reports, bot simulation, analytics, dataset export
and the game server all hang off one parser, sharing the artifact
cache keyed by config hash.  Every artifact embeds the tool version
and the full parameter set that produced it, floats are printed with
nine significant digits, and identical invocations write byte-identical
files regardless of ``--jobs``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .artifacts import ArtifactStore
from .config import Config, load_config_file
from .errors import RpgliteError
from .solver import DEFAULT_TOL, Matchup, pair_label, sorted_pair

RUN_SCHEMA = "rpglite.run/1"


def _g(x: float) -> str:
    return format(float(x), ".9g")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return _g(value)
    return str(value)


def _write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _sibling(path: Path, tag: str) -> Path:
    """report.json + \"matrix.png\" -> report.matrix.png, same directory."""
    stem = path.name[: -len(path.suffix)] if path.suffix else path.name
    return path.with_name(f"{stem}.{tag}")


def _csv_comment(command: str, params: dict) -> str:
    blob = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return f"# rpglite {__version__} {command} {blob}\n"


def _banner(command: str) -> None:
    print(f"# rpglite {__version__} {command}")


def _parse_pair(text: str):
    names = [t for t in text.replace("+", ",").split(",") if t.strip()]
    if len(names) != 2:
        raise ValueError(f"a pair needs two characters, got {text!r}")
    from .config import character_from_name

    return sorted_pair(
        character_from_name(names[0].strip()), character_from_name(names[1].strip())
    )


def parse_bot_spec(text: str):
    """Parse a compact bot description like
    ``kind=epsilon_greedy,epsilon=0.2,pair_policy=fixed,pair=knight+wizard``.
    A bare leading token is taken as the kind (``optimal``)."""
    from .bots import BotSpec

    fields: dict[str, str] = {}
    for i, part in enumerate(text.split(",")):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            if i == 0 and "kind" not in fields:
                fields["kind"] = part
                continue
            raise ValueError(f"bot spec field {part!r} is not key=value")
        key, value = part.split("=", 1)
        fields[key.strip()] = value.strip()
    if "kind" not in fields:
        raise ValueError(f"bot spec {text!r} has no kind")
    kwargs: dict = {"kind": fields.pop("kind")}
    if "epsilon" in fields:
        kwargs["epsilon"] = float(fields.pop("epsilon"))
    if "tau" in fields:
        kwargs["tau"] = float(fields.pop("tau"))
    if "seed" in fields:
        kwargs["seed"] = int(fields.pop("seed"))
    if "pair_policy" in fields:
        kwargs["pair_policy"] = fields.pop("pair_policy")
    if "pair" in fields:
        kwargs["pair"] = _parse_pair(fields.pop("pair"))
        kwargs.setdefault("pair_policy", "fixed")
    if fields:
        raise ValueError(f"unknown bot spec fields: {', '.join(sorted(fields))}")
    spec = BotSpec(**kwargs)
    spec.validate()
    return spec


def _load_config(path: str) -> Config:
    return load_config_file(path)


# ---------------------------------------------------------------- commands


def cmd_config_validate(args) -> int:
    cfg = _load_config(args.config)
    _banner("config validate")
    print(f"season_id = {cfg.season_id}")
    print(f"config_hash = {cfg.config_hash()}")
    attrs = [(k, v) for k, v in cfg.to_json_dict().items() if k != "season_id"]
    for name, value in attrs:
        print(f"{name} = {_fmt(value)}")
    print(f"attributes = {len(attrs)}")
    return 0


def cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    matchup = Matchup.of(_parse_pair(args.pair0), _parse_pair(args.pair1))
    store = ArtifactStore(root=args.artifacts, tol=args.tol)
    sol = store.solution(cfg, matchup, args.side)
    _banner("solve")
    print(f"config_hash = {cfg.config_hash()}")
    print(f"matchup = {matchup.key()}")
    print(f"side = {args.side}")
    print(f"tol = {_g(args.tol)}")
    print(f"n_states = {sol.space.n_states}")
    print(f"iterations = {sol.values.iterations}")
    print(f"residual = {_g(sol.values.residual)}")
    print(f"coin_flip_value = {_g(sol.coin_flip_value)}")
    print(f"artifact = {store.path_for(cfg, matchup, args.side)}")
    return 0


def cmd_csg_run(args) -> int:
    from .csg import run_csg

    cfg = _load_config(args.config)
    trace = run_csg(
        cfg,
        iterations=args.iterations,
        stop_epsilon=args.stop_epsilon,
        window=args.window,
        tol=args.tol,
        jobs=args.jobs,
    )
    out = _write_text(args.out, trace.to_json())
    _banner("csg run")
    print(f"config_hash = {cfg.config_hash()}")
    print(f"iterations_run = {len(trace.iterations)}")
    print(f"stopped_early = {_fmt(trace.stopped_early)}")
    if trace.iterations:
        print(f"final_value = {_g(trace.iterations[-1].value)}")
    print(f"wrote {out}")
    return 0


def _balance_figures(report, out: Path, tag: str = "") -> list[Path]:
    from .config import CHARACTERS
    from .csg import PAIRS
    from .figures import matrix_figure, usage_figure

    labels = [pair_label(p) for p in PAIRS]
    prefix = f"{tag}." if tag else ""
    usage = {
        c.value: float(report.usage[ci]) for ci, c in enumerate(CHARACTERS)
    }
    title = f"Pair vs pair win probability ({report.season_id})"
    return [
        matrix_figure(report.matrix, labels, _sibling(out, f"{prefix}matrix.png"), title),
        usage_figure(usage, _sibling(out, f"{prefix}usage.png"),
                     f"Character usage ({report.season_id})"),
    ]


def cmd_balance_report(args) -> int:
    from .balance import balance_report

    cfg = _load_config(args.config)
    report = balance_report(
        cfg,
        tol=args.tol,
        csg_iterations=args.iterations,
        stop_epsilon=args.stop_epsilon,
        window=args.window,
        jobs=args.jobs,
    )
    out = _write_text(args.out, report.to_json())
    _banner("balance report")
    print(f"config_hash = {cfg.config_hash()}")
    print(f"matrix_score = {_g(report.matrix_score)}")
    print(f"usage_score = {_g(report.usage_score)}")
    print(f"wrote {out}")
    if not args.no_figures:
        for fig in _balance_figures(report, out):
            print(f"wrote {fig}")
    return 0


def cmd_balance_compare(args) -> int:
    from .balance import compare_configs

    cfg_a = _load_config(args.config_a)
    cfg_b = _load_config(args.config_b)
    comparison = compare_configs(
        cfg_a,
        cfg_b,
        tol=args.tol,
        csg_iterations=args.iterations,
        stop_epsilon=args.stop_epsilon,
        window=args.window,
        jobs=args.jobs,
    )
    out = _write_text(args.out, comparison.to_json())
    _banner("balance compare")
    print(f"a = {cfg_a.season_id} {cfg_a.config_hash()}")
    print(f"b = {cfg_b.season_id} {cfg_b.config_hash()}")
    print(f"matrix_delta = {_g(comparison.matrix_delta)}")
    print(f"usage_delta = {_g(comparison.usage_delta)}")
    print(f"more_balanced = {comparison.more_balanced or 'tie'}")
    print(f"wrote {out}")
    if not args.no_figures:
        for tag, report in (("a", comparison.report_a), ("b", comparison.report_b)):
            for fig in _balance_figures(report, out, tag):
                print(f"wrote {fig}")
    return 0


def cmd_simulate(args) -> int:
    from .simulate import simulate_batch

    cfg = _load_config(args.config)
    spec0 = parse_bot_spec(args.bot0)
    spec1 = parse_bot_spec(args.bot1)
    season_id = args.season_id or cfg.season_id
    records = simulate_batch(
        spec0,
        spec1,
        cfg,
        args.games,
        args.seed,
        move_cap=args.move_cap,
        season_id=season_id,
        jobs=args.jobs,
    )
    header = {
        "schema": RUN_SCHEMA,
        "kind": "simulate-run",
        "tool": {"name": "rpglite", "version": __version__},
        "params": {
            "bot0": spec0.to_json_dict(),
            "bot1": spec1.to_json_dict(),
            "games": args.games,
            "seed": args.seed,
            "move_cap": args.move_cap,
            "season_id": season_id,
            "config_hash": cfg.config_hash(),
        },
    }
    rows = [header] + [r.to_json_dict() for r in records]
    text = "".join(json.dumps(row, separators=(",", ":")) + "\n" for row in rows)
    out = _write_text(args.out, text)
    wins = [0, 0]
    capped = 0
    for rec in records:
        if rec.winner is None:
            capped += 1
        else:
            wins[rec.winner] += 1
    _banner("simulate")
    print(f"config_hash = {cfg.config_hash()}")
    print(f"games = {len(records)}")
    print(f"p0_wins = {wins[0]}")
    print(f"p1_wins = {wins[1]}")
    print(f"capped = {capped}")
    print(f"wrote {out}")
    return 0


def cmd_analyze_costs(args) -> int:
    from .analytics import move_costs
    from .dataset import load_games_file

    cfg = _load_config(args.config)
    records = load_games_file(args.games)
    store = ArtifactStore(root=args.artifacts, tol=args.tol)
    buf = io.StringIO()
    buf.write(_csv_comment("analyze costs", {
        "config_hash": cfg.config_hash(),
        "games": args.games,
        "tol": args.tol,
    }))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([
        "game_id", "move_index", "side", "username",
        "move", "value_before", "q_chosen", "cost",
    ])
    totals: dict[str, list[float]] = {}
    for rec in records:
        for mc in move_costs(rec, cfg, store):
            writer.writerow([
                mc.game_id, mc.move_index, mc.side, mc.username,
                json.dumps(mc.move, separators=(",", ":")),
                _g(mc.value_before), _g(mc.q_chosen), _g(mc.cost),
            ])
            totals.setdefault(mc.username, []).append(mc.cost)
    out = _write_text(args.out, buf.getvalue())
    _banner("analyze costs")
    print(f"config_hash = {cfg.config_hash()}")
    print(f"games = {len(records)}")
    for name in sorted(totals):
        costs = totals[name]
        print(f"mean_cost[{name}] = {_g(sum(costs) / len(costs))} over {len(costs)} moves")
    print(f"wrote {out}")
    return 0


def cmd_analyze_learning(args) -> int:
    from .analytics import learning_curve
    from .dataset import load_games_file

    cfg = _load_config(args.config)
    records = load_games_file(args.games)
    store = ArtifactStore(root=args.artifacts, tol=args.tol)
    series = learning_curve(records, args.username, cfg, store, window=args.window)
    payload = {
        "kind": "learning-curve",
        "tool": {"name": "rpglite", "version": __version__},
        "config_hash": cfg.config_hash(),
        "params": {
            "games": args.games,
            "username": args.username,
            "window": args.window,
            "tol": args.tol,
        },
        "curve": series.to_json_dict(),
    }
    out = _write_text(args.out, json.dumps(payload, indent=2) + "\n")
    _banner("analyze learning")
    print(f"username = {args.username}")
    print(f"games_with_moves = {len(series.game_means)}")
    slope = "none" if series.slope is None else _g(series.slope)
    print(f"slope = {slope}")
    print(f"wrote {out}")
    if not args.no_figures and series.game_means:
        from .figures import learning_curve_figure

        fig = learning_curve_figure(series, _sibling(out, "png"))
        print(f"wrote {fig}")
    return 0


def cmd_analyze_stats(args) -> int:
    from .analytics import dataset_stats, stats_tables, tables_to_csv
    from .dataset import load_dataset

    dataset = load_dataset(args.dataset)
    report = dataset_stats(dataset)
    out_dir = Path(args.out)
    payload = {
        "kind": "dataset-stats",
        "tool": {"name": "rpglite", "version": __version__},
        "params": {"dataset": args.dataset},
        "report": report.to_json_dict(),
    }
    written = [_write_text(out_dir / "stats.json", json.dumps(payload, indent=2) + "\n")]
    comment = _csv_comment("analyze stats", {"dataset": args.dataset})
    for name, text in tables_to_csv(stats_tables(report)).items():
        written.append(_write_text(out_dir / f"{name}.csv", comment + text))
    if not args.no_figures:
        from .figures import acquisition_figure, character_rates_figure, retention_figure

        written.append(retention_figure(report, out_dir / "retention.png"))
        written.append(acquisition_figure(report, out_dir / "acquisition.png"))
        written.append(character_rates_figure(report, out_dir / "characters.png"))
    _banner("analyze stats")
    print(f"players = {report.n_players}")
    print(f"games = {report.n_games}")
    print(f"completed = {report.n_completed}")
    print(f"capped = {report.n_capped}")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_dataset_export(args) -> int:
    from .dataset import generate_dataset, population_from_json, write_dataset

    cfg = _load_config(args.config)
    raw = json.loads(Path(args.population).read_text())
    population = population_from_json(raw)
    dataset = generate_dataset(
        population,
        cfg,
        args.seed,
        season_id=args.season_id or cfg.season_id,
        move_cap=args.move_cap,
        start_epoch=args.start_epoch,
        jobs=args.jobs,
    )
    paths = write_dataset(dataset, Path(args.out))
    _banner("dataset export")
    print(f"config_hash = {cfg.config_hash()}")
    print(f"players = {len(dataset.players)}")
    print(f"games = {len(dataset.games)}")
    print(f"interactions = {len(dataset.interactions)}")
    for path in paths.values():
        print(f"wrote {path}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    app = create_app(
        config_path=args.config,
        data_dir=args.data_dir,
        seed=args.seed,
        static_dir=args.static_dir,
        admin_token=args.admin_token,
        medals_path=args.medals,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ------------------------------------------------------------------ parser


def _add_common_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help="value-iteration convergence tolerance")


def _add_csg_flags(parser: argparse.ArgumentParser, iterations: int) -> None:
    parser.add_argument("--iterations", type=int, default=iterations,
                        help="metagame iteration budget")
    parser.add_argument("--stop-epsilon", type=float, default=0.01,
                        help="stop once the step value drops to 0.5 + this")
    parser.add_argument("--window", type=int, default=None,
                        help="only the most recent members stay in the metagame")


def _add_jobs_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes; never changes the results")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpglite",
        description="Tools for a two-player turn-based stochastic game: "
                    "exact solving, balance analysis, bot simulation, "
                    "analytics and a game server.",
    )
    parser.add_argument("--version", action="version", version=f"rpglite {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p_config = sub.add_parser("config", help="season configuration utilities")
    config_sub = p_config.add_subparsers(dest="subcommand", required=True)
    p_validate = config_sub.add_parser(
        "validate", help="validate a season file and echo its attributes")
    p_validate.add_argument("config", help="season JSON file")
    p_validate.set_defaults(func=cmd_config_validate)

    p_solve = sub.add_parser("solve", help="solve one matchup to optimality")
    p_solve.add_argument("--config", required=True, help="season JSON file")
    p_solve.add_argument("--pair0", required=True, metavar="A,B",
                         help="first pair, e.g. knight,wizard")
    p_solve.add_argument("--pair1", required=True, metavar="C,D",
                         help="second pair, e.g. archer,monk")
    p_solve.add_argument("--side", type=int, choices=(0, 1), default=0,
                         help="side the value artifact maximizes for")
    _add_common_solver_flags(p_solve)
    p_solve.add_argument("--artifacts", default="artifacts",
                         help="artifact cache directory")
    p_solve.set_defaults(func=cmd_solve)

    p_csg = sub.add_parser("csg", help="metagame evolution by iterated best response")
    csg_sub = p_csg.add_subparsers(dest="subcommand", required=True)
    p_csg_run = csg_sub.add_parser("run", help="run the iteration and write a trace")
    p_csg_run.add_argument("--config", required=True, help="season JSON file")
    _add_csg_flags(p_csg_run, iterations=10)
    _add_common_solver_flags(p_csg_run)
    _add_jobs_flag(p_csg_run)
    p_csg_run.add_argument("--out", required=True, help="trace JSON path")
    p_csg_run.set_defaults(func=cmd_csg_run)

    p_balance = sub.add_parser("balance", help="balance scoring and comparison")
    balance_sub = p_balance.add_subparsers(dest="subcommand", required=True)
    p_report = balance_sub.add_parser(
        "report", help="matchup matrix, usage frequencies and scores")
    p_report.add_argument("--config", required=True, help="season JSON file")
    _add_csg_flags(p_report, iterations=6)
    _add_common_solver_flags(p_report)
    _add_jobs_flag(p_report)
    p_report.add_argument("--out", required=True, help="report JSON path")
    p_report.add_argument("--no-figures", action="store_true",
                          help="skip rendering matrix and usage figures")
    p_report.set_defaults(func=cmd_balance_report)
    p_compare = balance_sub.add_parser(
        "compare", help="two balance reports plus score deltas")
    p_compare.add_argument("config_a", help="season JSON file a")
    p_compare.add_argument("config_b", help="season JSON file b")
    _add_csg_flags(p_compare, iterations=6)
    _add_common_solver_flags(p_compare)
    _add_jobs_flag(p_compare)
    p_compare.add_argument("--out", required=True, help="comparison JSON path")
    p_compare.add_argument("--no-figures", action="store_true",
                           help="skip rendering matrix and usage figures")
    p_compare.set_defaults(func=cmd_balance_compare)

    p_sim = sub.add_parser("simulate", help="play bot-vs-bot games to a games file")
    p_sim.add_argument("--config", required=True, help="season JSON file")
    p_sim.add_argument("--bot0", required=True, metavar="SPEC",
                       help="bot spec, e.g. optimal or "
                            "kind=epsilon_greedy,epsilon=0.2,seed=7")
    p_sim.add_argument("--bot1", required=True, metavar="SPEC")
    p_sim.add_argument("--games", type=int, required=True, help="number of games")
    p_sim.add_argument("--seed", type=int, required=True, help="batch seed")
    p_sim.add_argument("--move-cap", type=int, default=1000,
                       help="stop undecided games after this many moves")
    p_sim.add_argument("--season-id", default=None,
                       help="season tag on the records (default: config's)")
    _add_jobs_flag(p_sim)
    p_sim.add_argument("--out", required=True, help="games NDJSON path")
    p_sim.set_defaults(func=cmd_simulate)

    p_analyze = sub.add_parser("analyze", help="post-hoc analytics over games files")
    analyze_sub = p_analyze.add_subparsers(dest="subcommand", required=True)
    p_costs = analyze_sub.add_parser(
        "costs", help="per-move decision costs against the optimal value")
    p_costs.add_argument("--config", required=True, help="season JSON file")
    p_costs.add_argument("--games", required=True, help="games NDJSON file")
    _add_common_solver_flags(p_costs)
    p_costs.add_argument("--artifacts", default=None,
                         help="optional artifact cache directory")
    p_costs.add_argument("--out", required=True, help="costs CSV path")
    p_costs.set_defaults(func=cmd_analyze_costs)
    p_learning = analyze_sub.add_parser(
        "learning", help="per-game mean cost trajectory for one player")
    p_learning.add_argument("--config", required=True, help="season JSON file")
    p_learning.add_argument("--games", required=True, help="games NDJSON file")
    p_learning.add_argument("--username", required=True, help="player to follow")
    p_learning.add_argument("--window", type=int, default=5,
                            help="moving-average window in games")
    _add_common_solver_flags(p_learning)
    p_learning.add_argument("--artifacts", default=None,
                            help="optional artifact cache directory")
    p_learning.add_argument("--out", required=True, help="curve JSON path")
    p_learning.add_argument("--no-figures", action="store_true",
                            help="skip rendering the curve figure")
    p_learning.set_defaults(func=cmd_analyze_learning)
    p_stats = analyze_sub.add_parser(
        "stats", help="dataset-wide acquisition, retention and pick/win tables")
    p_stats.add_argument("--dataset", required=True, help="dataset directory")
    p_stats.add_argument("--out", required=True, help="output directory")
    p_stats.add_argument("--no-figures", action="store_true",
                         help="skip rendering figures")
    p_stats.set_defaults(func=cmd_analyze_stats)

    p_dataset = sub.add_parser("dataset", help="synthetic dataset generation")
    dataset_sub = p_dataset.add_subparsers(dest="subcommand", required=True)
    p_export = dataset_sub.add_parser(
        "export", help="simulate a population and write the bundle")
    p_export.add_argument("--config", required=True, help="season JSON file")
    p_export.add_argument("--population", required=True,
                          help="population JSON (usernames, bot specs, volumes)")
    p_export.add_argument("--seed", type=int, required=True, help="master seed")
    p_export.add_argument("--season-id", default=None,
                          help="season tag (default: config's)")
    p_export.add_argument("--move-cap", type=int, default=1000,
                          help="stop undecided games after this many moves")
    p_export.add_argument("--start-epoch", type=float, default=1_700_000_000.0,
                          help="epoch seconds the synthetic clock starts at")
    _add_jobs_flag(p_export)
    p_export.add_argument("--out", required=True, help="output directory")
    p_export.set_defaults(func=cmd_dataset_export)

    p_serve = sub.add_parser("serve", help="run the HTTP game service")
    p_serve.add_argument("--config", required=True, help="season JSON file")
    p_serve.add_argument("--data-dir", required=True,
                         help="event log and snapshot directory")
    p_serve.add_argument("--host", default="127.0.0.1", help="listen address")
    p_serve.add_argument("--port", type=int, default=8000, help="listen port")
    p_serve.add_argument("--seed", type=int, default=None,
                         help="fixed service seed; entropy when omitted")
    p_serve.add_argument("--static-dir", default=None,
                         help="serve web client assets from this directory")
    p_serve.add_argument("--admin-token", default=None,
                         help="token for the season admin endpoint (disabled when unset)")
    p_serve.add_argument("--medals", default=None,
                         help="medal thresholds file (packaged defaults otherwise)")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RpgliteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
