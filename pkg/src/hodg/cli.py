"""Command-line entry point: run, renumber, perf, divergence, meshgen.

Exit codes: 0 success, 1 usage error, 2 runtime failure. Solver modules
are imported inside the subcommands so metric-only invocations stay fast.
"""

from __future__ import annotations

import argparse
import sys

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="hodg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run the flow solver from a config file")
    p.add_argument("--config", required=True, help="run configuration (key = value sections)")
    p.add_argument("--workers", type=int, help="override the worker count")
    p.add_argument("--out", help="override the output prefix")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("renumber", help="bandwidth-reducing cell renumbering")
    p.add_argument("mesh", help="input mesh file")
    p.add_argument("--out-prefix", required=True, help="prefix for the reordered mesh and spy files")
    p.set_defaults(func=_cmd_renumber)

    p = sub.add_parser("perf", help="dual-phase measurement and roofline export")
    p.add_argument("--config", required=True)
    p.add_argument("--n1", type=int, required=True, help="iterations of the short run")
    p.add_argument("--n2", type=int, required=True, help="iterations of the long run")
    p.add_argument(
        "--machine", action="append", default=[], metavar="NAME:PEAKFLOPS:PEAKBW",
        help="machine model (repeatable)",
    )
    p.add_argument("--out", required=True, help="roofline CSV path")
    p.add_argument("--workers", action="append", type=int, default=[],
                   help="worker counts to measure (repeatable; default from config)")
    p.add_argument("--timing-out", help="also write a label,workers,seconds_per_iter CSV")
    p.add_argument("--label", help="sample label (default: config name)")
    p.set_defaults(func=_cmd_perf)

    p = sub.add_parser("divergence", help="SLOC-based code divergence")
    p.add_argument("--version", action="append", default=[], metavar="LABEL=PATH[,PATH...]",
                   help="count a version from source paths (repeatable)")
    p.add_argument("--sloc", action="append", default=[], metavar="LABEL=N",
                   help="version with a known absolute line count (repeatable)")
    p.add_argument("--base-sloc", type=int, help="shared base line count for --diff versions")
    p.add_argument("--diff", action="append", default=[], metavar="LABEL=N",
                   help="version given as changed lines over the base (repeatable)")
    p.add_argument("--base", default="desktop", help="label of the base version")
    p.add_argument("--comments", default="line=//,block=/*:*/",
                   help="comment rules, e.g. line=//;#,block=/*:*/")
    p.set_defaults(func=_cmd_divergence)

    p = sub.add_parser("meshgen", help="generate a structured test mesh")
    p.add_argument("kind", choices=("quad", "tri"))
    p.add_argument("nx", type=int)
    p.add_argument("ny", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--extent", default="0,0,1,1", help="x0,y0,x1,y1")
    p.add_argument("--bc", default="far_field", help="boundary kind for all sides")
    p.set_defaults(func=_cmd_meshgen)

    return parser


def _cmd_run(args) -> int:
    from .config import RunConfig
    from .timestepping import run

    config = RunConfig.from_ini(args.config)
    if args.workers is not None:
        config.workers = args.workers
    if args.out is not None:
        config.output_prefix = args.out
    artifacts = run(config)
    res = artifacts.history.res[-1] if artifacts.history.res else None
    print(
        f"cells={artifacts.mesh.n_cells} iterations={artifacts.iterations_run} "
        f"geometry_constants={artifacts.constant_count} "
        f"setup_s={artifacts.setup_seconds:.3f} iterate_s={artifacts.iterate_seconds:.3f}"
        + (f" res_rho={res[0]:.3e}" if res else "")
    )
    return 0


def _cmd_renumber(args) -> int:
    from .mesh import load_mesh, save_mesh
    from .renumber import apply_permutation, bandwidth, build_adjacency, export_spy, rcm

    mesh = load_mesh(args.mesh)
    graph = build_adjacency(mesh)
    perm = rcm(graph)
    bw0 = bandwidth(graph)
    bw1 = bandwidth(graph, perm)
    export_spy(graph, None, f"{args.out_prefix}_before.mtx")
    export_spy(graph, perm, f"{args.out_prefix}_after.mtx")
    save_mesh(apply_permutation(mesh, perm), f"{args.out_prefix}.msh")
    print(f"cells={mesh.n_cells} bw_before={bw0} bw_after={bw1}")
    return 0


def _parse_machine(spec: str):
    from .perf import MachineModel

    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"machine spec needs NAME:PEAKFLOPS:PEAKBW, got {spec!r}")
    return MachineModel(label=parts[0], peak_flops=float(parts[1]), peak_bandwidth=float(parts[2]))


def _cmd_perf(args) -> int:
    from .config import RunConfig
    from .perf import PerfSample, dual_phase, emit_roofline_csv, emit_timing_csv
    from .timestepping import run

    config = RunConfig.from_ini(args.config)
    config.output_prefix = None  # measurement runs write no field output
    machines = [_parse_machine(m) for m in args.machine]
    if not machines:
        raise ValueError("at least one --machine model is required")
    label = args.label or "run"
    worker_list = args.workers or [config.workers]

    samples = []
    timing_rows = []
    for w in worker_list:
        cfg = RunConfig.from_ini(args.config)
        cfg.output_prefix = None
        cfg.workers = w

        def run_fn(n, cfg=cfg):
            import dataclasses

            art = run(dataclasses.replace(cfg, max_iterations=n))
            return PerfSample(
                wall_seconds=art.setup_seconds + art.iterate_seconds,
                flops=art.flops,
                dram_bytes=art.dram_bytes,
                iterations=n,
            )

        run_fn(1)  # warm up compiled kernels before timing
        sample = dual_phase(run_fn, args.n1, args.n2)
        tag = label if len(worker_list) == 1 else f"{label}@w{w}"
        samples.append((tag, sample))
        timing_rows.append((label, w, sample.wall_seconds))

    emit_roofline_csv(samples, machines, args.out)
    if args.timing_out:
        emit_timing_csv(timing_rows, args.timing_out)
    for tag, s in samples:
        print(f"{tag}: {s.wall_seconds*1e3:.3f} ms/iter ai={s.arithmetic_intensity:.3f} "
              f"achieved={s.achieved_flops:.3e} flop/s")
    return 0


def _split_label(spec: str, what: str):
    if "=" not in spec:
        raise ValueError(f"{what} needs LABEL=..., got {spec!r}")
    label, rest = spec.split("=", 1)
    if not label or not rest:
        raise ValueError(f"{what} needs LABEL=..., got {spec!r}")
    return label, rest


def _cmd_divergence(args) -> int:
    from .metrics import CommentRules, VersionRecord, count_sloc, divergence, pairwise_distance

    rules = CommentRules.parse(args.comments)
    versions: list[VersionRecord] = []
    for spec in args.version:
        label, paths = _split_label(spec, "--version")
        versions.append(VersionRecord(label, count_sloc(paths.split(","), rules)))
    for spec in args.sloc:
        label, n = _split_label(spec, "--sloc")
        versions.append(VersionRecord(label, int(n)))
    if args.diff and args.base_sloc is None:
        raise ValueError("--diff requires --base-sloc")
    if args.base_sloc is not None:
        versions.append(VersionRecord(args.base, args.base_sloc))
        for spec in args.diff:
            label, n = _split_label(spec, "--diff")
            versions.append(VersionRecord(label, args.base_sloc + int(n)))
    if len(versions) < 2:
        raise ValueError("divergence needs at least two versions")

    by_label = {v.label: v for v in versions}
    base = by_label.get(args.base)
    print("a,b,d_percent")
    ordered = versions if base is None else (
        [v for v in versions if v.label != base.label]
    )
    if base is not None:
        for v in ordered:
            print(f"{v.label},{base.label},{100.0 * pairwise_distance(v, base):.2f}")
        rest = ordered
    else:
        rest = versions
    for i, a in enumerate(rest):
        for b in rest[i + 1 :]:
            print(f"{a.label},{b.label},{100.0 * pairwise_distance(a, b):.2f}")
    print(f"D(A),,{100.0 * divergence(versions):.2f}")
    return 0


def _cmd_meshgen(args) -> int:
    from .mesh import generate_quad_grid, generate_tri_grid, save_mesh

    extent = tuple(float(v) for v in args.extent.split(","))
    if len(extent) != 4:
        raise ValueError("--extent needs x0,y0,x1,y1")
    gen = generate_quad_grid if args.kind == "quad" else generate_tri_grid
    mesh = gen(args.nx, args.ny, extent, args.bc)
    save_mesh(mesh, args.out)
    print(f"cells={mesh.n_cells} faces={mesh.n_faces} nodes={mesh.n_nodes}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except Exception as exc:  # runtime failures exit 2 with a message
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
