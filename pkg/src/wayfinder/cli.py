"""Operator command line.

Every subcommand is a thin shell over library calls, prints machine-readable
JSON on stdout and diagnostics on stderr, and follows one exit-code
contract: 0 success, 1 domain violation or mismatch, 2 I/O or usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import agents, metrics, store as store_mod
from .engine import Briefing, InvalidLevelError, RuleViolation, Session, start_session
from .levels import builtin_level, builtin_levels
from .model import (
    LevelParseError,
    LevelSchemaError,
    LevelSpec,
    TrajectorySample,
    canonical_json,
    parse_level,
    validate_level,
)
from .store import CorruptDocumentError, NotFoundError, Store, StoreError

DEFAULT_PORT = 8080


class ReplayMismatch(Exception):
    pass


def _emit(doc) -> None:
    sys.stdout.write(canonical_json(doc))


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_level_file(path: str) -> LevelSpec:
    with open(path, "rb") as fh:
        return parse_level(fh.read())


def _data_root(args) -> Path:
    root = getattr(args, "data_root", None) or os.environ.get("WAYFINDER_DATA")
    return Path(root) if root else Path("wayfinder-data")


# --- validate ---------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        level = _load_level_file(args.level)
    except OSError as exc:
        return _fail(str(exc), 2)
    except LevelParseError as exc:
        where = f" (line {exc.line}, column {exc.column})" if exc.line else ""
        return _fail(f"{args.level}: {exc}{where}", 2)
    except LevelSchemaError as exc:
        _emit({"level_id": None, "violations": [{"code": "schema_error", "message": str(exc)}]})
        return 1
    violations = validate_level(level)
    _emit(
        {
            "level_id": level.level_id,
            "violations": [{"code": v.code, "message": v.message} for v in violations],
        }
    )
    return 1 if violations else 0


# --- simulate ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    try:
        level = _load_level_file(args.level)
    except OSError as exc:
        return _fail(str(exc), 2)
    except (LevelParseError, LevelSchemaError) as exc:
        return _fail(f"{args.level}: {exc}", 2)
    try:
        profile = agents.AgentProfile(
            kind=args.agent,
            detour_rate=args.detour_rate if args.agent == "noisy" else 0.0,
            wrong_item_rate=args.wrong_item_rate if args.agent == "noisy" else 0.0,
            seed=args.seed,
        )
    except ValueError as exc:
        return _fail(str(exc), 2)
    try:
        session = agents.run_agent(
            level, profile, participant_id=args.participant, session_id=args.session_id
        )
        report = metrics.session_metrics(session)
    except (InvalidLevelError, RuleViolation) as exc:
        return _fail(str(exc), 1)
    if args.out_dir:
        st = Store(args.out_dir)
        st.save_level(level)
        st.save_session(session)
        st.save_report(f"{session.session_id}.metrics", report.to_doc())
    _emit({"session": session.to_doc(), "metrics": report.to_doc()})
    return 0


# --- analyze ----------------------------------------------------------------


def _read_rows(path: str) -> list[metrics.MetricRow]:
    with open(path, "r", encoding="utf-8") as fh:
        return metrics.read_pairs_csv(fh.read())


def cmd_analyze(args) -> int:
    try:
        rows_a = _read_rows(args.pairs_a)
        rows_b = _read_rows(args.pairs_b)
    except OSError as exc:
        return _fail(str(exc), 2)
    except metrics.MetricsError as exc:
        return _fail(str(exc), 1)
    try:
        if args.normalization == "zscore_per_level":
            rows_a = metrics.zscore_per_level(rows_a)
            rows_b = metrics.zscore_per_level(rows_b)
        if args.aggregate == "participant":
            rows_a = metrics.aggregate_by_participant(rows_a)
            rows_b = metrics.aggregate_by_participant(rows_b)
        join = metrics.build_pairs(rows_a, rows_b)
        result = metrics.pearson_r(list(join.pairs))
    except metrics.MetricsError as exc:
        return _fail(str(exc), 1)
    row_doc = lambda r: {  # noqa: E731
        "participant_id": r.participant_id,
        "level_rank": r.level_rank,
        "value": r.value,
    }
    _emit(
        {
            "r": result.r,
            "n": result.n,
            "band": result.band,
            "mode": {"normalization": args.normalization, "aggregate": args.aggregate},
            "unmatched_a": [row_doc(r) for r in join.unmatched_a],
            "unmatched_b": [row_doc(r) for r in join.unmatched_b],
        }
    )
    return 0


# --- replay -----------------------------------------------------------------


def _resolve_level(doc: dict, args) -> LevelSpec:
    if getattr(args, "level", None):
        return _load_level_file(args.level)
    level_id = doc.get("level_id", "")
    root = getattr(args, "data_root", None) or os.environ.get("WAYFINDER_DATA")
    if root:
        candidate = Path(root) / "levels" / f"{level_id}.json"
        if candidate.exists():
            return _load_level_file(str(candidate))
    try:
        return builtin_level(level_id)
    except KeyError:
        raise NotFoundError(
            f"cannot resolve level {level_id!r}: pass --level or set WAYFINDER_DATA"
        ) from None


def replay_session(doc: dict, level: LevelSpec) -> Session:
    """Re-execute the event log (samples interleaved by time) through a
    fresh engine and return the rebuilt session."""
    samples = [
        TrajectorySample(t_ms=int(s["t_ms"]), x=float(s["x"]), y=float(s["y"]))
        for s in doc.get("trajectory", [])
    ]
    session = start_session(
        level, doc["participant_id"], doc["session_id"], doc["started_at"]
    )
    si = 0

    def feed_until(t_ms: int) -> None:
        # An event's t_ms is the last sample time at the moment it was
        # logged, so samples at or before it were already recorded. While
        # still in the briefing no samples can have existed; a t=0 sample
        # alongside the t=0 briefing_done event belongs after it.
        nonlocal si
        if isinstance(session.phase, Briefing):
            return
        batch = []
        while si < len(samples) and samples[si].t_ms <= t_ms:
            batch.append(samples[si])
            si += 1
        if batch:
            session.record_samples(batch)

    for event in doc.get("events", []):
        kind = event["kind"]
        payload = event.get("payload", {})
        if kind == "session_started":
            continue
        feed_until(int(event["t_ms"]))
        if kind == "briefing_done":
            session.acknowledge_briefing()
        elif kind == "out_of_order_attempt":
            try:
                session.open_chest(int(payload["requested"]))
            except RuleViolation as exc:
                if exc.code != "order_error":
                    raise ReplayMismatch(f"expected order_error, got {exc.code}") from None
            else:
                raise ReplayMismatch(
                    f"open_chest({payload['requested']}) succeeded on replay but was "
                    "logged as out of order"
                )
        elif kind == "chest_opened":
            session.open_chest(int(payload["checkpoint"]))
        elif kind == "item_selected":
            session.select_item(str(payload["item"]))
        elif kind == "chest_closed":
            session.close_chest()
        elif kind == "craft_placed":
            session.place_in_craft(str(payload["item"]), int(payload["cell"]))
        elif kind == "craft_removed":
            session.remove_from_craft(int(payload["cell"]))
        elif kind == "craft_ready":
            continue
        elif kind == "result_taken":
            session.take_result()
        else:
            raise ReplayMismatch(f"unknown event kind {kind!r}")
    if si < len(samples):
        session.record_samples(samples[si:])
    return session


def cmd_replay(args) -> int:
    try:
        with open(args.session, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        return _fail(str(exc), 2)
    except ValueError as exc:
        return _fail(f"{args.session}: not valid JSON ({exc})", 2)
    if not isinstance(doc, dict):
        return _fail(f"{args.session}: expected a JSON object", 2)
    try:
        level = _resolve_level(doc, args)
    except (OSError, NotFoundError, LevelParseError, LevelSchemaError) as exc:
        return _fail(str(exc), 2)
    try:
        rebuilt = replay_session(doc, level)
    except (ReplayMismatch, RuleViolation, InvalidLevelError, KeyError, ValueError) as exc:
        return _fail(f"replay diverged: {exc}", 1)
    stored = canonical_json(doc)
    recomputed = rebuilt.to_canonical_json()
    if stored != recomputed:
        return _fail("replay mismatch: stored document differs from re-executed session", 1)
    try:
        report = metrics.session_metrics(rebuilt)
    except metrics.MetricsError as exc:
        return _fail(str(exc), 1)
    if args.check:
        root = _data_root(args)
        ref_path = root / "reports" / f"{rebuilt.session_id}.metrics.json"
        try:
            stored_report = json.loads(ref_path.read_text(encoding="utf-8"))
        except OSError as exc:
            return _fail(f"--check: {exc}", 2)
        except ValueError as exc:
            return _fail(f"--check: {ref_path}: {exc}", 2)
        if canonical_json(stored_report) != canonical_json(report.to_doc()):
            return _fail("metrics mismatch: stored report differs from recomputation", 1)
    _emit(report.to_doc())
    return 0


# --- export-trajectories ----------------------------------------------------


def cmd_export_trajectories(args) -> int:
    try:
        level = _load_level_file(args.level)
    except OSError as exc:
        return _fail(str(exc), 2)
    except (LevelParseError, LevelSchemaError) as exc:
        return _fail(f"{args.level}: {exc}", 2)
    sessions_dir = Path(args.sessions)
    if not sessions_dir.is_dir():
        return _fail(f"{sessions_dir} is not a directory", 2)
    sessions = []
    from .engine import session_from_doc

    for path in sorted(sessions_dir.glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            return _fail(f"{path}: not valid JSON ({exc})", 2)
        if doc.get("level_id") != level.level_id:
            return _fail(
                f"level_mismatch: {path} is for level {doc.get('level_id')!r}, "
                f"not {level.level_id!r}",
                1,
            )
        try:
            sessions.append(session_from_doc(doc, level))
        except (KeyError, ValueError, TypeError) as exc:
            return _fail(f"{path}: corrupt session ({exc})", 2)
    try:
        svg = store_mod.trajectories_svg(level, sessions)
    except StoreError as exc:
        return _fail(str(exc), 1)
    out = Path(args.out)
    try:
        store_mod.atomic_write_text(out, svg)
        if args.csv:
            store_mod.atomic_write_text(Path(args.csv), store_mod.trajectories_csv(level, sessions))
    except OSError as exc:
        return _fail(str(exc), 2)
    _emit({"level_id": level.level_id, "sessions": len(sessions), "out": str(out)})
    return 0


# --- cohort -----------------------------------------------------------------


def cmd_cohort(args) -> int:
    try:
        if args.levels_dir:
            levels = []
            for path in sorted(Path(args.levels_dir).glob("*.json")):
                levels.append(_load_level_file(str(path)))
            if not levels:
                return _fail(f"no level JSON files under {args.levels_dir}", 2)
        else:
            levels = builtin_levels()
    except OSError as exc:
        return _fail(str(exc), 2)
    except (LevelParseError, LevelSchemaError) as exc:
        return _fail(str(exc), 2)
    try:
        template = agents.AgentProfile(
            kind="noisy",
            detour_rate=args.detour_rate,
            wrong_item_rate=args.wrong_item_rate,
            seed=args.seed,
        )
        cohort = agents.generate_cohort(
            levels, args.participants, template, seed=args.seed, jitter=args.jitter
        )
        join = metrics.build_pairs(list(cohort.rows_a), list(cohort.rows_b))
        result = metrics.pearson_r(list(join.pairs))
    except (ValueError, RuleViolation) as exc:
        return _fail(str(exc), 1)
    if args.out_dir:
        st = Store(args.out_dir)
        for level in levels:
            st.save_level(level)
        for session in cohort.sessions:
            st.save_session(session)
        st.save_report_text("pairs_a.csv", metrics.write_pairs_csv(cohort.rows_a))
        st.save_report_text("pairs_b.csv", metrics.write_pairs_csv(cohort.rows_b))
        st.save_report(
            "participants", {"participants": [p.to_doc() for p in cohort.participants]}
        )
        st.save_report("correlation", result.to_doc())
    _emit(
        {
            "r": result.r,
            "n": result.n,
            "band": result.band,
            "participants": len(cohort.participants),
            "levels": len(levels),
            "jitter": args.jitter,
            "seed": args.seed,
        }
    )
    return 0


# --- serve ------------------------------------------------------------------


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    levels = None
    if args.levels_dir:
        levels = []
        for path in sorted(Path(args.levels_dir).glob("*.json")):
            try:
                level = _load_level_file(str(path))
            except (OSError, LevelParseError, LevelSchemaError) as exc:
                return _fail(str(exc), 2)
            violations = validate_level(level)
            if violations:
                return _fail(f"{path}: {violations[0].code}: {violations[0].message}", 1)
            levels.append(level)
        if not levels:
            return _fail(f"no level JSON files under {args.levels_dir}", 2)
    root = _data_root(args)
    app = create_app(Store(root), levels, cors_origins=args.cors_origin or None)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wayfinder",
        description="Checkpoint wayfinding task: validation, simulation, analysis, serving.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a level file against all level rules")
    p.add_argument("level", help="path to a level JSON file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run a scripted agent through a level")
    p.add_argument("--level", required=True)
    p.add_argument("--agent", choices=["optimal", "noisy"], default="optimal")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--detour-rate", type=float, default=0.2)
    p.add_argument("--wrong-item-rate", type=float, default=0.0)
    p.add_argument("--participant", default="sim")
    p.add_argument("--session-id", default=None)
    p.add_argument("--out-dir", default=None, help="store root to persist the run into")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="correlate two paired-observation CSV files")
    p.add_argument("--pairs-a", required=True)
    p.add_argument("--pairs-b", required=True)
    p.add_argument(
        "--normalization",
        choices=["ratio_to_optimal", "zscore_per_level"],
        default="ratio_to_optimal",
        help="values are used as-is (already ratios) or re-scored within each level",
    )
    p.add_argument("--aggregate", choices=["none", "participant"], default="none")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("replay", help="re-execute a stored session and recompute metrics")
    p.add_argument("session", help="path to a session JSON file")
    p.add_argument("--level", default=None, help="level file (default: store or bundled)")
    p.add_argument("--data-root", default=None)
    p.add_argument("--check", action="store_true", help="compare against the stored metrics report")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("export-trajectories", help="render session paths over the level grid")
    p.add_argument("--level", required=True)
    p.add_argument("--sessions", required=True, help="directory of session JSON files")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--csv", default=None, help="also write a t_ms,x,y CSV here")
    p.set_defaults(func=cmd_export_trajectories)

    p = sub.add_parser("cohort", help="generate a synthetic paired cohort and correlate it")
    p.add_argument("--participants", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jitter", type=float, default=0.05)
    p.add_argument("--detour-rate", type=float, default=0.25)
    p.add_argument("--wrong-item-rate", type=float, default=0.0)
    p.add_argument("--levels-dir", default=None, help="level files (default: bundled levels)")
    p.add_argument("--out-dir", default=None, help="store root for sessions, CSVs, reports")
    p.set_defaults(func=cmd_cohort)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument(
        "--port",
        type=int,
        default=int(os.environ.get("WAYFINDER_PORT", DEFAULT_PORT)),
    )
    p.add_argument("--data-root", default=None)
    p.add_argument("--levels-dir", default=None)
    p.add_argument("--cors-origin", action="append", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
