"""Command line front end.

Exit codes: 0 success, 2 I/O or usage trouble, 3 malformed or unusable
input data, 4 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .annotations import AnnotationParseError, load_annotations
from .depth import DepthFormatError, NoValidDepthError, load_depth
from .pipeline import (
    STAGE_NAMES,
    ConfigError,
    PipelineConfig,
    bench,
    load_config,
    run_loaded,
)
from .synthscene import GenerationError, SceneSpec, generate, write_scene

EXIT_OK = 0
EXIT_IO = 2
EXIT_DATA = 3
EXIT_CONFIG = 4


class DataError(ValueError):
    """Input files exist but cannot be used as a scene."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egoscene",
        description="Turn a depth map plus polygon annotations into a "
        "directional scene description.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_desc = sub.add_parser("describe", help="narrate one scene")
    p_desc.add_argument("depth", help="16-bit depth image (PNG or PGM)")
    p_desc.add_argument("annotations", help="polygon annotation JSON")
    p_desc.add_argument("--config", help="pipeline config JSON")
    p_desc.add_argument(
        "--captions", help="JSON object mapping segment id to caption text"
    )
    p_desc.add_argument(
        "--report-json",
        metavar="PATH",
        help="write the structured report here instead of printing text "
        "('-' for stdout)",
    )
    p_desc.add_argument(
        "--figure", metavar="PATH", help="render a scene overview image"
    )
    p_desc.add_argument(
        "--timing", action="store_true", help="print stage timings to stderr"
    )
    p_desc.add_argument(
        "--quiet", action="store_true", help="suppress the text description"
    )

    p_bench = sub.add_parser("bench", help="time the pipeline stages")
    p_bench.add_argument(
        "scene_dir",
        help="directory holding depth.png + annotations.json, or a directory "
        "of such scene directories",
    )
    p_bench.add_argument("--config", help="pipeline config JSON")
    p_bench.add_argument(
        "--reps", type=int, default=10, help="repetitions per scene (default 10)"
    )
    p_bench.add_argument(
        "--out-dir",
        metavar="DIR",
        help="write timings.csv and timings.png here",
    )

    p_synth = sub.add_parser("synth", help="generate a synthetic scene")
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--regions", type=int, required=True)
    p_synth.add_argument("--out", required=True, metavar="DIR")
    p_synth.add_argument(
        "--noise", type=float, default=0.0, help="dropout fraction in [0, 1)"
    )
    p_synth.add_argument("--width", type=int, default=640)
    p_synth.add_argument("--height", type=int, default=480)
    return parser


def _load_captions(path: str) -> dict[int, str]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(doc, dict):
        raise DataError(f"{path}: captions file must be a JSON object")
    try:
        return {int(k): str(v) for k, v in doc.items()}
    except ValueError as exc:
        raise DataError(f"{path}: caption keys must be segment ids") from exc


def _find_depth(scene: Path) -> Optional[Path]:
    for name in ("depth.png", "depth.pgm"):
        if (scene / name).is_file():
            return scene / name
    return None


def _discover_scenes(root: Path) -> list[tuple[Path, Path]]:
    if not root.is_dir():
        raise FileNotFoundError(f"{root} is not a directory")
    depth = _find_depth(root)
    if depth is not None and (root / "annotations.json").is_file():
        return [(depth, root / "annotations.json")]
    scenes = []
    for child in sorted(p for p in root.iterdir() if p.is_dir()):
        depth = _find_depth(child)
        if depth is not None and (child / "annotations.json").is_file():
            scenes.append((depth, child / "annotations.json"))
    if not scenes:
        raise DataError(f"no scenes found under {root}")
    return scenes


def _cmd_describe(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    captions = _load_captions(args.captions) if args.captions else None
    depth = load_depth(args.depth, sentinels=config.sentinels)
    segments = load_annotations(args.annotations)
    result = run_loaded(depth, segments, config, captions=captions)

    if args.report_json:
        payload = json.dumps(result.report, indent=2, ensure_ascii=False) + "\n"
        if args.report_json == "-":
            sys.stdout.write(payload)
        else:
            Path(args.report_json).write_text(payload, encoding="utf-8")
    elif not args.quiet:
        sys.stdout.write(result.description.full_text)

    if args.timing:
        for name in STAGE_NAMES:
            print(
                f"{name}: {result.timing.stages[name]:.1f} us", file=sys.stderr
            )
        print(f"total: {result.timing.total_us:.1f} us", file=sys.stderr)

    if args.figure:
        from .figures import render_scene_figure

        render_scene_figure(result, args.figure)
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    scenes = _discover_scenes(Path(args.scene_dir))
    try:
        summary = bench(scenes, config, repetitions=args.reps)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    print(f"{'stage':<14}{'median_us':>12}{'p95_us':>12}")
    for name in STAGE_NAMES:
        med, p95 = summary.stages[name]
        print(f"{name:<14}{med:>12.1f}{p95:>12.1f}")
    med, p95 = summary.total
    print(f"{'total':<14}{med:>12.1f}{p95:>12.1f}")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "timings.csv").write_text(summary.to_csv(), encoding="utf-8")
        from .figures import render_bench_figure

        render_bench_figure(summary, out / "timings.png")
        print(f"wrote {out / 'timings.csv'} and {out / 'timings.png'}")
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.regions < 1:
        raise ConfigError("--regions must be >= 1")
    if not 0.0 <= args.noise < 1.0:
        raise ConfigError("--noise must lie in [0, 1)")
    spec = SceneSpec(
        seed=args.seed,
        n_regions=args.regions,
        width=args.width,
        height=args.height,
        noise=args.noise,
    )
    depth, mask, segments, truth = generate(spec)
    paths = write_scene(Path(args.out), depth, mask, segments, truth)
    for p in paths.values():
        print(f"wrote {p}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "describe": _cmd_describe,
        "bench": _cmd_bench,
        "synth": _cmd_synth,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"egoscene: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        AnnotationParseError,
        DepthFormatError,
        NoValidDepthError,
        GenerationError,
        DataError,
    ) as exc:
        print(f"egoscene: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"egoscene: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
