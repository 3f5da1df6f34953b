"""Configuration, experiment orchestration, and CSV/report persistence."""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import yaml

from . import analysis
from .decoder import build_detector_graph
from .engine import CompiledProgram
from .lattice import build_layout, min_logical_weight, verify_layout
from .noise import NoiseModel
from .protocol import VARIANTS, build_stage1, build_stage2
from .sim import run_experiment, stage1_single_fault_cases

CSV_COLUMNS = (
    "scheme", "model", "eta", "p", "p_cx", "dx1", "dz1", "dx2", "dz2", "dm",
    "shots", "accepted", "success_rate", "success_sem", "eps_total",
    "eps_total_sem", "eps_xl", "eps_xl_sem", "eps_zl", "eps_zl_sem",
    "seed", "flags",
)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scheme: str = "zz"
    dx1: int = 1
    dz1: int = 3
    dx2: int = 3
    dz2: int = 15
    dm: int | None = None                 # default dz2
    theta: float = math.pi / 8
    noise_model: str = "A"
    noise_eta: float = 1e4
    sweep_p: list = field(default_factory=list)
    sweep_p_cx: list = field(default_factory=list)
    shots: int = 100000
    seed: int = 1
    workers: int = 1
    pattern: str = "default"
    out: str = "sweep.csv"

    def __post_init__(self):
        if self.scheme not in VARIANTS:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.noise_model not in ("A", "B"):
            raise ConfigError(f"noise.model must be A or B")
        if self.pattern not in ("default", "alternate"):
            raise ConfigError(f"unknown pattern {self.pattern!r}")
        if self.dm is None:
            self.dm = self.dz2
        if self.sweep_p and self.sweep_p_cx:
            raise ConfigError("give sweep.p or sweep.p_cx, not both")
        if self.shots < 1 or self.seed < 0 or self.workers < 1:
            raise ConfigError("shots/seed/workers out of range")
        if not (0 < self.theta < math.pi / 2):
            raise ConfigError("theta must lie in (0, pi/2)")
        variant = VARIANTS[self.scheme]
        if self.dz1 < variant.grey_size:
            raise ConfigError(
                f"scheme {self.scheme} needs dz1 >= {variant.grey_size}"
            )
        if self.dx2 < self.dx1 or self.dz2 < self.dz1 or self.dm < 1:
            raise ConfigError("stage-II dimensions/rounds out of range")

    def model(self, p: float) -> NoiseModel:
        return NoiseModel(self.noise_model, p, self.noise_eta)

    def points(self) -> list[float]:
        """Sweep points as base dephasing probabilities p, ascending."""
        if self.sweep_p:
            return sorted(float(p) for p in self.sweep_p)
        ref = NoiseModel(self.noise_model, 1.0, self.noise_eta)
        return sorted(ref.p_from_pcx(float(pcx)) for pcx in self.sweep_p_cx)

    def to_dict(self) -> dict:
        out = {
            "scheme": self.scheme,
            "dx1": self.dx1, "dz1": self.dz1,
            "dx2": self.dx2, "dz2": self.dz2,
            "dm": self.dm,
            "theta": self.theta,
            "noise": {"model": self.noise_model,
                      "eta": "inf" if math.isinf(self.noise_eta) else self.noise_eta},
            "shots": self.shots,
            "seed": self.seed,
            "workers": self.workers,
            "pattern": self.pattern,
            "out": self.out,
        }
        if self.sweep_p:
            out["sweep"] = {"p": list(self.sweep_p)}
        elif self.sweep_p_cx:
            out["sweep"] = {"p_cx": list(self.sweep_p_cx)}
        return out


_TOP_KEYS = {
    "scheme", "dx1", "dz1", "dx2", "dz2", "dm", "theta", "noise", "sweep",
    "shots", "seed", "workers", "pattern", "out",
}


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key in ("scheme", "dx1", "dz1", "dx2", "dz2", "dm", "theta",
                "shots", "seed", "workers", "pattern", "out"):
        if key in data:
            kwargs[key] = data[key]
    noise = data.get("noise", {})
    if noise:
        bad = set(noise) - {"model", "eta"}
        if bad:
            raise ConfigError(f"unknown noise keys: {sorted(bad)}")
        if "model" in noise:
            kwargs["noise_model"] = str(noise["model"])
        if "eta" in noise:
            eta = noise["eta"]
            kwargs["noise_eta"] = math.inf if eta in ("inf", "Infinity") else float(eta)
    sweep = data.get("sweep", {})
    if sweep:
        bad = set(sweep) - {"p", "p_cx"}
        if bad:
            raise ConfigError(f"unknown sweep keys: {sorted(bad)}")
        if "p" in sweep:
            kwargs["sweep_p"] = [float(v) for v in sweep["p"]]
        if "p_cx" in sweep:
            kwargs["sweep_p_cx"] = [float(v) for v in sweep["p_cx"]]
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(yaml.safe_load(fh))


def save_config(config: ExperimentConfig, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def build_program(config: ExperimentConfig):
    stage1 = build_stage1(VARIANTS[config.scheme], config.dx1, config.dz1,
                          config.theta)
    return build_stage2(stage1, config.dx2, config.dz2, config.dm,
                        config.pattern)


@dataclass(frozen=True)
class ResultRow:
    values: dict

    def as_csv(self) -> str:
        return ",".join(_fmt(self.values[c]) for c in CSV_COLUMNS)


def sweep_rows(config: ExperimentConfig, progress=None) -> list[ResultRow]:
    program = build_program(config)
    rows = []
    for index, p in enumerate(config.points()):
        model = config.model(p)
        compiled = CompiledProgram(program, model)
        graph = build_detector_graph(program, model, compiled)
        tally = run_experiment(
            program, model, config.shots, config.seed, point=index,
            workers=config.workers, compiled=compiled, graph=graph,
        )
        values = {
            "scheme": config.scheme,
            "model": config.noise_model,
            "eta": config.noise_eta,
            "p": p,
            "p_cx": model.p_cx(),
            "dx1": config.dx1, "dz1": config.dz1,
            "dx2": config.dx2, "dz2": config.dz2, "dm": config.dm,
            "shots": tally.shots,
            "accepted": tally.accepted,
            "seed": config.seed,
        }
        success = tally.accepted / tally.shots
        values["success_rate"] = success
        values["success_sem"] = math.sqrt(success * (1 - success) / tally.shots)
        if tally.accepted == 0:
            for col in ("eps_total", "eps_total_sem", "eps_xl", "eps_xl_sem",
                        "eps_zl", "eps_zl_sem"):
                values[col] = None
            values["flags"] = "no_accepted"
        else:
            r = analysis.rates(tally)
            values["eps_total"] = r["eps_total"].value
            values["eps_total_sem"] = r["eps_total"].sem
            values["eps_xl"] = r["eps_xl"].value
            values["eps_xl_sem"] = r["eps_xl"].sem
            values["eps_zl"] = r["eps_zl"].value
            values["eps_zl_sem"] = r["eps_zl"].sem
            values["flags"] = ""
        rows.append(ResultRow(values))
        if progress:
            progress(index, p, rows[-1])
    return rows


def write_csv(rows, path: str):
    """Write atomically: temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for row in rows:
                fh.write(row.as_csv() + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path: str) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != list(CSV_COLUMNS):
            raise ConfigError(f"unexpected CSV header in {path}")
        out = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(CSV_COLUMNS):
                raise ConfigError(f"malformed CSV row in {path}")
            out.append(dict(zip(CSV_COLUMNS, parts)))
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify(config: ExperimentConfig, golden: str | None = None) -> int:
    layout = build_layout(config.dx2, config.dz2)
    violations = verify_layout(layout)
    violations += verify_layout(build_layout(config.dx1, config.dz1))
    if golden is not None:
        with open(golden, "r", encoding="utf-8") as fh:
            if fh.read() != layout.dump():
                violations.append("layout dump differs from golden reference")
    if layout.n_data <= 15:
        if min_logical_weight(layout, "X") != config.dx2:
            violations.append("X distance mismatch")
        if min_logical_weight(layout, "Z") != config.dz2:
            violations.append("Z distance mismatch")
    program = build_program(config)
    zero = NoiseModel(config.noise_model, 0.0, config.noise_eta)
    compiled = CompiledProgram(program, zero)
    meas, x, z = compiled.run(64)
    if not compiled.acceptance(meas).all():
        violations.append("noiseless run rejected by stage-I post-selection")
    if compiled.detectors(meas).any():
        violations.append("noiseless run produced detection events")
    az, ax = compiled.logical_flips(x, z)
    if az.any() or ax.any():
        violations.append("noiseless run flipped a logical readout")
    probe = config.model(max(config.points(), default=1e-4))
    rot_kind = VARIANTS[config.scheme].rotation_kind
    expected_logical = "ZL" if rot_kind != "RotZ" else None
    for case in stage1_single_fault_cases(program, probe):
        is_rot = case.kind.startswith(("RotZZ", "RotZZZ")) and set(
            case.kind.split(":")[1]
        ) == {"Z"} and len(case.kind.split(":")[1]) == VARIANTS[config.scheme].grey_size
        if is_rot:
            if case.detected or case.residual == "I":
                violations.append(
                    f"rotation fault {case.kind} unexpectedly benign"
                )
        elif not case.detected and case.residual != "I":
            violations.append(
                f"single fault {case.kind} caused residual {case.residual}"
            )
    for v in violations:
        print(f"violation: {v}", file=sys.stderr)
    return 2 if violations else 0


def cmd_sweep(config: ExperimentConfig) -> int:
    def progress(index, p, row):
        print(f"point {index}: p={p:.6g} done", file=sys.stderr)

    rows = sweep_rows(config, progress=progress)
    write_csv(rows, config.out)
    print(config.out)
    return 0


def cmd_fit(
    csv_path: str,
    kind: str,
    sizes: list[str] | None = None,
    max_p: float | None = None,
) -> int:
    rows = read_csv(csv_path)
    if sizes:
        wanted = set(sizes)
        rows = [r for r in rows if f"{r['dx2']}x{r['dz2']}" in wanted]
    else:
        # default selection: the two largest stage-II codes, low-p half
        all_sizes = sorted(
            {(int(r["dx2"]), int(r["dz2"])) for r in rows},
            key=lambda s: s[0] * s[1],
        )
        wanted = {f"{dx}x{dz}" for dx, dz in all_sizes[-2:]}
        rows = [r for r in rows if f"{r['dx2']}x{r['dz2']}" in wanted]
        ps = sorted({float(r["p"]) for r in rows})
        if max_p is None and len(ps) > 1:
            max_p = ps[(len(ps) - 1) // 2]
    if max_p is not None:
        rows = [r for r in rows if float(r["p"]) <= max_p]
    points = [
        (float(r["p"]), float(r["eps_zl"]), float(r["eps_zl_sem"]))
        for r in rows
        if r["eps_zl"] != "" and float(r["eps_zl_sem"]) > 0
    ]
    if not points:
        print("no usable points selected", file=sys.stderr)
        return 1
    fit = analysis.fit_quadratic(points) if kind == "quadratic" else (
        analysis.fit_linear(points)
    )
    models = {r["model"] for r in rows}
    if len(models) != 1:
        print("selection mixes noise models", file=sys.stderr)
        return 1
    model = NoiseModel(models.pop(), 1e-4, 1e4)
    conv = analysis.convert_axis(fit.coefficient, fit.exponent, model)
    conv_err = analysis.convert_axis(fit.stderr, fit.exponent, model)
    print(fit.report())
    print(
        f"in p_cx: A = {conv:.9g} +- {conv_err:.9g} (p_cx = "
        f"{'20' if model.variant == 'A' else '2'}p leading order)"
    )
    return 0


def cmd_distill(eps: float) -> int:
    print(f"{analysis.distill_15to1(eps):.9g}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="msinject",
        description="Biased-noise magic-state injection Monte-Carlo simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="check invariants and fault robustness")
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--golden", help="layout dump to compare against")

    p_sweep = sub.add_parser("sweep", help="run a sweep and write a CSV")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", help="override output path")
    p_sweep.add_argument("--seed", type=int, help="override seed")
    p_sweep.add_argument("--workers", type=int, help="override worker count")

    p_fit = sub.add_parser("fit", help="fit a power law to a sweep CSV")
    p_fit.add_argument("csv")
    p_fit.add_argument("--kind", choices=("quadratic", "linear"),
                       default="quadratic")
    p_fit.add_argument("--sizes", nargs="*",
                       help="dx2xdz2 selections, e.g. 3x15 5x25")
    p_fit.add_argument("--max-p", type=float, default=None)

    p_dist = sub.add_parser("distill", help="15-to-1 output error projection")
    p_dist.add_argument("eps", type=float)

    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(load_config(args.config), args.golden)
        if args.command == "sweep":
            config = load_config(args.config)
            if args.out:
                config.out = args.out
            if args.seed is not None:
                config.seed = args.seed
            workers = args.workers
            env = os.environ.get("MSINJECT_WORKERS")
            if workers is None and env:
                workers = int(env)
            if workers is not None:
                config.workers = workers
            return cmd_sweep(config)
        if args.command == "fit":
            return cmd_fit(args.csv, args.kind, args.sizes, args.max_p)
        if args.command == "distill":
            return cmd_distill(args.eps)
    except (ConfigError, FileNotFoundError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
