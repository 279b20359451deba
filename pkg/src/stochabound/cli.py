"""Command-line front end.

    stochabound certify -c config.json [-o outdir]
    stochabound verify -c config.json -o outdir
    stochabound paper-example -o outdir

Exit codes: 0 success, 1 input or assumption error, 2 certificate
condition fails, 3 bounds empirically violated.
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import linalg
from .certify import bound_report, certify, report_json
from . import montecarlo as mc
from .errors import BoundUndefinedError, NotHurwitzError, StochaboundError
from .kernel import KernelSpec, analytic_constants
from .sde import InitialState, SystemSpec

log = logging.getLogger("stochabound")

EXIT_OK, EXIT_INPUT, EXIT_UNCERTIFIED, EXIT_VIOLATED = 0, 1, 2, 3

PAPER_EPSILONS = [round(0.25 * i, 2) for i in range(1, 17)]
PAPER_X0 = (0.0, 0.5, 2.0)
PAPER_N_PATHS = (100, 1000)
PUBLISHED_B = 0.25


@dataclass
class ExperimentConfig:
    system: SystemSpec
    q_matrix: np.ndarray = None
    n_paths: int = 100
    master_seed: int = 42
    epsilons: list = field(default_factory=list)
    tail_fraction: float = mc.DEFAULT_TAIL_FRACTION
    output_dir: Path = None

    @property
    def Q(self):
        return np.eye(self.system.n) if self.q_matrix is None else self.q_matrix

    @classmethod
    def from_json(cls, obj, base_dir=Path(".")):
        if "system" not in obj:
            raise StochaboundError("config missing 'system'")
        system = SystemSpec.from_json(obj["system"])
        q = obj.get("q_matrix")
        out = obj.get("output_dir")
        return cls(
            system=system,
            q_matrix=None if q is None else linalg.as_square(q, "q_matrix"),
            n_paths=int(obj.get("n_paths", 100)),
            master_seed=int(obj.get("master_seed", 42)),
            epsilons=sorted(float(e) for e in obj.get("epsilons", [])),
            tail_fraction=float(obj.get("tail_fraction", mc.DEFAULT_TAIL_FRACTION)),
            output_dir=None if out is None else base_dir / out,
        )

    def to_json(self):
        return {
            "system": self.system.to_json(),
            "q_matrix": None if self.q_matrix is None else linalg.to_nested(self.q_matrix),
            "n_paths": self.n_paths,
            "master_seed": self.master_seed,
            "epsilons": list(self.epsilons),
            "tail_fraction": self.tail_fraction,
        }


def paper_system(x0=0.0, T=10.0, dt=1e-3):
    """Scalar drift -1 with kernel 0.25 cos(4x)."""
    return SystemSpec([[-1.0]], KernelSpec.cosine_scalar(0.25, 4.0), InitialState([x0]), T, dt)


def paper_config(x0=0.0, n_paths=100, master_seed=42):
    return ExperimentConfig(system=paper_system(x0), n_paths=n_paths, master_seed=master_seed,
                            epsilons=list(PAPER_EPSILONS))


def load_config(path):
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise StochaboundError("config must be a JSON object")
    return ExperimentConfig.from_json(obj, base_dir=path.parent)


def _dump_json(obj, path):
    # repr-based float formatting round-trips every double exactly
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def paper_notes(report, e_x0=0.5, epsilon=1.0):
    """Discrepancy notes for the built-in scalar example.

    The tail-bound note is evaluated at ``E||X0|| = e_x0`` and ``epsilon``.
    """
    lp, llo, c, g = report["lambda_bar_P"], report["lambda_lo_P"], report["c"], report["gamma"]
    sqrt2_variant = (c * g * lp + math.sqrt(2 * c * c * lp)) / (1 - g * g * lp)
    p_paper = llo * lp * e_x0 / epsilon
    p_derived = (lp / llo) * e_x0 / epsilon
    return [
        f"Published example bound b = {PUBLISHED_B} does not satisfy the limiting-bound formula "
        f"(c*gamma*lmax_P + sqrt(c^2*lmax_P*lmin_Q)) / (lmin_Q - gamma^2*lmax_P); with c = {c!r}, "
        f"gamma = {g!r}, lmax_P = {lp!r}, lmin_Q = {report['lambda_lo_Q']!r} it gives "
        f"b = {report['b_limit']!r}. The formula value is reported.",
        f"Published minimal-bound expression with sqrt(2*c^2*lmax_P) gives {sqrt2_variant!r}; "
        f"the positive root of the drift quadratic at Q = I gives b_min = {report['b_min']!r}. "
        f"The root value is reported.",
        f"Tail bound at E||X0|| = {e_x0!r}, epsilon = {epsilon!r}: the published factor lmin_P*lmax_P "
        f"gives p = {p_paper!r}; the factor lmax_P/lmin_P implied by the change of variable gives "
        f"p = {p_derived!r}. Both are reported; verification uses the latter.",
    ]


def run_certify(config):
    """Certificate report dict for a config.

    Raises ``NotHurwitzError`` for unstable drift.
    """
    system = config.system
    constants = analytic_constants(system.kernel)
    cert = certify(system.A, config.Q, constants)
    e_x0 = system.x0.expected_norm()
    epsilon = config.epsilons[-1] if config.epsilons else 1.0
    report = report_json(cert, constants, system.A, e_x0=e_x0, epsilon=epsilon)
    return report, cert, constants


def cmd_certify(config, out_dir=None, paper=False):
    try:
        report, _, _ = run_certify(config)
    except NotHurwitzError as exc:
        print(f"error: assumption 1.1 violated: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    if paper and report["condition_holds"]:
        report["notes"] = paper_notes(report)
    out_dir = out_dir or config.output_dir
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        _dump_json(report, Path(out_dir) / "certificate.json")
    return (EXIT_OK if report["condition_holds"] else EXIT_UNCERTIFIED), report


def cmd_verify(config, out_dir, paper=False):
    code, report = cmd_certify(config, out_dir, paper=paper)
    if code != EXIT_OK:
        return code, report, None
    _, cert, constants = run_certify(config)
    bounds = bound_report(cert, constants, config.system.A, e_x0=report["e_x0"])
    verdict = mc.verify(
        config.system,
        cert,
        bounds,
        n_paths=config.n_paths,
        master_seed=config.master_seed,
        epsilons=config.epsilons,
        tail_fraction=config.tail_fraction,
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    mc.write_mean_csv(verdict.ensemble, out_dir / "mean_norm.csv")
    mc.write_sup_csv(verdict.ensemble, out_dir / "sup_norms.csv")
    mc.write_exceedance_csv(verdict.exceedance, out_dir / "exceedance.csv")
    payload = verdict.to_json()
    payload["envelope_excess"] = verdict.ensemble.envelope_excess
    _dump_json(payload, out_dir / "verdict.json")
    return (EXIT_OK if verdict.all_ok else EXIT_VIOLATED), report, verdict


def cmd_paper_example(out_dir):
    """Certify and verify the scalar example for every start and ensemble size."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    worst = EXIT_OK
    summary = []
    for x0 in PAPER_X0:
        for n_paths in PAPER_N_PATHS:
            config = paper_config(x0, n_paths)
            sub = out_dir / f"x0_{x0:g}_n{n_paths}"
            _dump_json(config.to_json(), out_dir / f"config_x0_{x0:g}_n{n_paths}.json")
            code, report, verdict = cmd_verify(config, sub, paper=True)
            worst = max(worst, code)
            summary.append({
                "x0": x0,
                "n_paths": n_paths,
                "exit_code": code,
                "verdict": None if verdict is None else verdict.to_json(),
            })
            log.info("x0=%g n=%d exit=%d", x0, n_paths, code)
    report, _, _ = run_certify(paper_config())
    notes = paper_notes(report)
    report["notes"] = notes
    _dump_json(report, out_dir / "certificate.json")
    _dump_json(summary, out_dir / "summary.json")
    (out_dir / "notes.txt").write_text("\n\n".join(notes) + "\n", encoding="utf-8")
    return worst


def build_parser():
    parser = argparse.ArgumentParser(prog="stochabound", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="compute the boundedness certificate")
    p.add_argument("-c", "--config", required=True, type=Path)
    p.add_argument("-o", "--output-dir", type=Path, default=None)

    p = sub.add_parser("verify", help="certify, then check the bounds by Monte-Carlo")
    p.add_argument("-c", "--config", required=True, type=Path)
    p.add_argument("-o", "--output-dir", type=Path, default=None)

    p = sub.add_parser("paper-example", help="reproduce the scalar cosine-kernel study")
    p.add_argument("-o", "--output-dir", required=True, type=Path)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "paper-example":
            return cmd_paper_example(args.output_dir)
        config = load_config(args.config)
        if args.command == "certify":
            code, report = cmd_certify(config, args.output_dir)
            if report is not None:
                print(json.dumps(report, indent=2, sort_keys=True))
            return code
        out_dir = args.output_dir or config.output_dir
        if out_dir is None:
            print("error: verify needs an output directory (-o or output_dir in config)", file=sys.stderr)
            return EXIT_INPUT
        code, _, verdict = cmd_verify(config, out_dir)
        if verdict is not None:
            print(json.dumps(verdict.to_json(), indent=2, sort_keys=True))
        return code
    except (StochaboundError, OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, BoundUndefinedError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_UNCERTIFIED
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
