"""Command-line interface: ``lutforge {enhance,fit,bench,pci,noise,identity}``."""

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .bench import DEFAULT_RESOLUTIONS, format_table, parse_resolutions, run_bench
from .curve import CURVE_MODES
from .imgio import load_image, quantize, save_image
from .kernels import THREADS_ENV, resolve_threads, run_pipeline
from .lut import COLOR_RANGE, PARAM_RANGE, identity_lut, load_lut, save_lut
from .metrics import evaluate
from .noise import NoiseSchedule, forward_noise, load_weight_map, save_weight_map
from .optim import OptimConfig, fit_llut, fit_nlut, load_config
from .spectral import phase_only_reconstruction

MANIFEST_SCHEMA = 1


class CLIError(Exception):
    pass


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _config_hash(config):
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()


class _Run:
    """Collects timings and artifacts for the run manifest."""

    def __init__(self, subcommand, args):
        self.subcommand = subcommand
        self.args = args
        self.inputs = []
        self.outputs = []
        self.timings = {}
        self.config = {k: v for k, v in vars(args).items() if k not in ("func", "json", "manifest")}

    def stage(self, name):
        run = self

        class _Timer:
            def __enter__(self):
                self.start = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[name] = (time.perf_counter() - self.start) * 1e3

        return _Timer()

    def add_input(self, path):
        if path is not None:
            self.inputs.append({"path": str(path), "sha256": _sha256(path)})

    def add_output(self, path):
        self.outputs.append({"path": str(path), "sha256": _sha256(path)})

    def manifest(self, report):
        return {
            "schema": MANIFEST_SCHEMA,
            "tool": "lutforge",
            "version": __version__,
            "subcommand": self.subcommand,
            "inputs": self.inputs,
            "config": self.config,
            "config_hash": _config_hash(self.config),
            "seed": self.config.get("seed"),
            "timings_ms": self.timings,
            "outputs": self.outputs,
            "report": report,
        }

    def finish(self, report, default_manifest=None):
        target = self.args.manifest or default_manifest
        if target is not None:
            Path(target).write_text(json.dumps(self.manifest(report), indent=2, default=str) + "\n")
        if self.args.json:
            print(json.dumps(report, indent=2, default=str))
        else:
            _print_human(report)


def _print_human(report, indent=""):
    for key, value in report.items():
        if isinstance(value, dict):
            print(f"{indent}{key}:")
            _print_human(value, indent + "  ")
        elif isinstance(value, float):
            print(f"{indent}{key}: {value:.6g}")
        else:
            print(f"{indent}{key}: {value}")


def _manifest_for(path):
    return Path(str(path) + ".manifest.json")


def _load_role_lut(path, role):
    lut = load_lut(path)
    want = PARAM_RANGE if role == "llut" else COLOR_RANGE
    if lut.value_range != want:
        raise CLIError(f"{path}: range tag {lut.value_range} does not fit --{role}, which needs {want}")
    return lut


def cmd_enhance(args):
    run = _Run("enhance", args)
    if args.wmap is not None and args.nlut is None:
        raise CLIError("--wmap requires --nlut")
    with run.stage("load"):
        img = load_image(args.input)
        llut = _load_role_lut(args.llut, "llut")
        nlut = _load_role_lut(args.nlut, "nlut") if args.nlut else None
        m = load_weight_map(args.wmap) if args.wmap else None
    for p in (args.input, args.llut, args.nlut, args.wmap):
        run.add_input(p)
    with run.stage("enhance"):
        coarse, final = run_pipeline(img, llut, nlut, m, n=args.steps, mode=args.mode, threads=args.threads)
    result = coarse if final is None else final
    with run.stage("save"):
        save_image(result, args.output)
        run.add_output(args.output)
        if final is not None:
            out = Path(args.output)
            coarse_path = args.coarse_output or out.with_name(f"{out.stem}_coarse{out.suffix}")
            save_image(coarse, coarse_path)
            run.add_output(coarse_path)
    report = {
        "timings_ms": run.timings,
        "mean_intensity": {"input": float(img.mean()), "output": float(result.mean())},
    }
    if args.metrics_ref:
        ref = load_image(args.metrics_ref)
        run.add_input(args.metrics_ref)
        with run.stage("metrics"):
            # score what was written, not the unrounded float result
            report["metrics"] = evaluate(quantize(result) / 255.0, ref).to_dict()
    run.finish(report, _manifest_for(args.output))


def _fit_config(args):
    overrides = {
        "stage": args.stage, "iterations": args.iterations, "learning_rate": args.lr,
        "lut_size": args.lut_size, "curve_steps": args.steps, "curve_mode": args.mode,
        "seed": args.seed, "optimizer": args.optimizer,
    }
    if args.config:
        return load_config(args.config, **overrides)
    return OptimConfig.from_mapping({}, **overrides)


def cmd_fit(args):
    run = _Run("fit", args)
    cfg = _fit_config(args)
    run.config["resolved"] = cfg.to_dict()
    run.add_input(args.input)
    run.add_input(args.config)
    img = load_image(args.input)
    with run.stage("fit"):
        if cfg.stage == "llut":
            lut, trace = fit_llut(img, cfg)
            wmap = None
        else:
            if args.pseudo_ref is None:
                raise CLIError("--stage nlut requires --pseudo-ref")
            run.add_input(args.pseudo_ref)
            lut, wmap, trace = fit_nlut(img, load_image(args.pseudo_ref), cfg)
    with run.stage("save"):
        save_lut(lut, args.out_lut)
        run.add_output(args.out_lut)
        if wmap is not None:
            wmap_path = args.out_wmap or Path(args.out_lut).with_suffix(".wmap")
            save_weight_map(wmap, wmap_path)
            run.add_output(wmap_path)
        if args.trace:
            with open(args.trace, "w") as fh:
                for rep in trace:
                    fh.write(rep.to_json() + "\n")
            run.add_output(args.trace)
    report = {
        "stage": cfg.stage,
        "iterations": cfg.iterations,
        "initial": trace[0].terms(),
        "final": trace[-1].terms(),
        "timings_ms": run.timings,
    }
    run.finish(report, _manifest_for(args.out_lut))


def cmd_bench(args):
    run = _Run("bench", args)
    resolutions = parse_resolutions(args.resolutions)
    with run.stage("bench"):
        report = run_bench(resolutions, repeat=args.repeat, warmup=args.warmup,
                           threads=args.threads, steps=args.steps, seed=args.seed)
    if args.output:
        Path(args.output).write_text(json.dumps(report, indent=2) + "\n")
        run.add_output(args.output)
    target = args.manifest
    if target is not None:
        Path(target).write_text(json.dumps(run.manifest(report), indent=2) + "\n")
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(format_table(report))


def cmd_pci(args):
    run = _Run("pci", args)
    run.add_input(args.input)
    img = load_image(args.input)
    with run.stage("pci"):
        recon, info = phase_only_reconstruction(img, return_info=True)
    save_image(recon, args.output)
    run.add_output(args.output)
    run.finish({"constant_channels": info["constant_channels"], "timings_ms": run.timings},
               _manifest_for(args.output))


def cmd_noise(args):
    run = _Run("noise", args)
    run.add_input(args.input)
    img = load_image(args.input)
    schedule = NoiseSchedule.linear(args.T, args.beta_start, args.beta_end)
    with run.stage("noise"):
        noisy = forward_noise(img, args.t, schedule, seed=args.seed)
    save_image(noisy, args.output)
    run.add_output(args.output)
    report = {"t": args.t, "alpha_bar": float(schedule.alpha_bars[args.t]), "timings_ms": run.timings}
    run.finish(report, _manifest_for(args.output))


def cmd_identity(args):
    run = _Run("identity", args)
    rng = PARAM_RANGE if args.kind == "llut" else COLOR_RANGE
    save_lut(identity_lut(args.size, rng), args.output)
    run.add_output(args.output)
    run.finish({"kind": args.kind, "size": args.size}, None)


def build_parser():
    parser = argparse.ArgumentParser(prog="lutforge", description="LUT-based low-light enhancement toolkit")
    parser.add_argument("--version", action="version", version=f"lutforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true", help="print the report as JSON on stdout")
        p.add_argument("--manifest", help="where to write the run manifest")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default: ${THREADS_ENV} or all cores)")

    p = sub.add_parser("enhance", help="apply fitted LUTs to an image")
    p.add_argument("--input", required=True)
    p.add_argument("--llut", required=True)
    p.add_argument("--nlut")
    p.add_argument("--wmap")
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--mode", choices=CURVE_MODES, default="per_step_lookup")
    p.add_argument("--output", required=True)
    p.add_argument("--coarse-output", help="where to write the brightened image when --nlut is given")
    p.add_argument("--metrics-ref", help="reference image for PSNR/SSIM")
    common(p)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("fit", help="fit an LLUT or NLUT to one image")
    p.add_argument("--stage", choices=("llut", "nlut"), required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--pseudo-ref")
    p.add_argument("--config", help="TOML or JSON optimizer settings")
    p.add_argument("--out-lut", required=True)
    p.add_argument("--out-wmap")
    p.add_argument("--trace", help="write one JSON loss report per iteration")
    p.add_argument("--iterations", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--lut-size", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--mode", choices=CURVE_MODES)
    p.add_argument("--optimizer", choices=("adam", "sgd"))
    p.add_argument("--seed", type=int)
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bench", help="time the enhance pass at several resolutions")
    p.add_argument("--resolutions", default=",".join(f"{w}x{h}" for w, h in DEFAULT_RESOLUTIONS))
    p.add_argument("--repeat", type=int, default=100)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="also write the JSON report here")
    common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("pci", help="phase-only reconstruction of an image")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    common(p)
    p.set_defaults(func=cmd_pci)

    p = sub.add_parser("noise", help="forward diffusion noising")
    p.add_argument("--input", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--T", type=int, default=1000)
    p.add_argument("--beta-start", type=float, default=1e-4)
    p.add_argument("--beta-end", type=float, default=0.02)
    common(p)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("identity", help="write a neutral LUT")
    p.add_argument("--kind", choices=("llut", "nlut"), required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--output", required=True)
    common(p)
    p.set_defaults(func=cmd_identity)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is not None:
            resolve_threads(args.threads)
        args.func(args)
    except (CLIError, ValueError, OSError, FloatingPointError) as exc:
        print(f"lutforge {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
