"""Batch command-line front end.

Every experiment runs as one process and emits CSV/JSON artifacts (plus
PNG figures on the report path unless --no-plot).  Outputs are written
atomically (temp file + rename) and each JSON artifact embeds the
effective configuration and validates against the schemas shipped under
``phasecat/schema``.

Exit codes: 0 success, 1 input/validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import catastrophe_family as fam
from . import forward_scattering as fwd
from . import inverse_scattering as inv
from . import phase_reconstruction as phr
from . import plots
from .errors import NumericalError, ValidationError
from .grid_fourier import GridSpec


@dataclass(frozen=True)
class RunConfig:
    x_min: float = -20.0
    x_max: float = 20.0
    grid_n: int = 2048
    k_max: float = 12.0
    n_k: int = 256
    ode_tol: float = 1e-9
    singular_tol: float = 1e-8
    marchenko_tol: float = 1e-8
    output_dir: str = "."
    seed: int = 0  # reserved; no operation draws randomness

    def __post_init__(self):
        for name in ("ode_tol", "singular_tol", "marchenko_tol"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if self.n_k % 2:
            raise ValidationError("n_k must be even (the k grid straddles 0)")

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.x_min, self.x_max, self.grid_n)

    def k_grid(self) -> np.ndarray:
        return fwd.staggered_k_grid(self.k_max, self.n_k)


def load_config(path: str | None, overrides: dict) -> RunConfig:
    values: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ValidationError("config file must hold a JSON object")
        known = {f.name for f in fields(RunConfig)}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ValidationError(f"bad config value: {exc}") from exc


# ---------------------------------------------------------------------------
# output plumbing


def _canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_with(path: Path, writer) -> None:
    """Run a path-taking writer against a temp file, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _validate_against(schema_name: str, payload: dict) -> None:
    with resources.files("phasecat.schema").joinpath(schema_name).open("r") as fh:
        schema = json.load(fh)
    jsonschema.validate(payload, schema)


def _emit_json(path: Path, payload: dict, schema_name: str) -> None:
    _validate_against(schema_name, payload)
    _atomic_write_text(path, _canonical_json(payload))


# ---------------------------------------------------------------------------
# subcommands


def cmd_family(args, cfg: RunConfig) -> int:
    try:
        n_list = sorted({int(s) for s in args.n.split(",") if s.strip()})
    except ValueError as exc:
        raise ValidationError(f"bad --n list: {exc}") from exc
    if not n_list:
        raise ValidationError("--n must list at least one order")
    spec = cfg.grid_spec()
    report = fam.family_report(n_list, spec)
    out = Path(cfg.output_dir)
    payload = report.to_json_dict()
    payload["config"] = asdict(cfg)
    _emit_json(out / "family_report.json", payload, "catastrophe_report.schema.json")
    _atomic_write_with(out / "family_report.csv", report.write_csv)

    members = []
    from .grid_fourier import inverse_transform, spectral_derivative

    for n in n_list:
        member = inverse_transform(fam.blaschke_spectrum(fam.FamilyParams(n, spec)))
        deriv = spectral_derivative(member)
        x = spec.x()
        lines = ["x,f,df\n"]
        for xi, fi, di in zip(x, member.values.real, deriv.values.real):
            lines.append(f"{float(xi)!r},{float(fi)!r},{float(di)!r}\n")
        _atomic_write_text(out / f"family_member_{n:03d}.csv", "".join(lines))
        members.append((n, x, member.values))
    if args.plot:
        plots.save_report_figure(report, out / "family_report.png", "family")
        plots.save_members_figure(members[: min(len(members), 5)], out / "family_members.png")
    print(f"family: wrote {len(n_list)} member(s), verdict {report.verdict}")
    return 0


def cmd_forward(args, cfg: RunConfig) -> int:
    q = fwd.read_potential_csv(args.potential)
    sd = fwd.scattering_matrix(q, cfg.k_grid(), ode_tol=cfg.ode_tol)
    payload = fwd.scattering_to_json_dict(sd)
    uni = np.abs(np.abs(sd.s11) ** 2 + np.abs(sd.s12) ** 2 - 1.0)
    payload["checks"] = {"max_unitarity_defect": float(np.max(uni))}
    payload["config"] = asdict(cfg)
    out = Path(cfg.output_dir)
    _emit_json(out / "scattering.json", payload, "scattering_data.schema.json")
    if args.plot:
        plots.save_scattering_figure(sd, out / "scattering.png")
    print(
        f"forward: {len(sd.k_grid)} k-samples, {len(sd.bound_states)} bound state(s), "
        f"max unitarity defect {float(np.max(uni)):.2e}"
    )
    return 0


def cmd_invert(args, cfg: RunConfig, argv_flags: dict) -> int:
    sd = fwd.read_scattering_json(args.scattering)
    kappas = [b.kappa for b in sd.bound_states]
    # Deep bound states make the kernel blow up toward negative x; keep the
    # recovery box inside the conditioning budget unless the user pinned it.
    if argv_flags.get("x_min") is None and kappas:
        budget = -(np.log(inv.COND_LIMIT) - 8.0) / (2.0 * max(kappas))
        x_lo = max(cfg.x_min, float(np.floor(budget)))
    else:
        x_lo = cfg.x_min
    x_hi = cfg.x_max if argv_flags.get("x_max") is not None else min(cfg.x_max, -x_lo)
    n_rec = cfg.grid_n if argv_flags.get("grid_n") is not None else 512
    spec = GridSpec(x_lo, x_hi, n_rec)
    mk = inv.build_omega(sd, t_min=2.0 * x_lo)
    tk = inv.solve_marchenko(mk, spec)
    if tk.residual > cfg.marchenko_tol * 10:
        raise NumericalError(
            f"Marchenko residual {tk.residual:.3e} exceeds 10x tolerance {cfg.marchenko_tol:.1e}"
        )
    q = inv.recover_potential(tk)
    out = Path(cfg.output_dir)
    _atomic_write_with(out / "potential.csv", lambda tmp: fwd.write_potential_csv(tmp, q))
    if args.plot:
        plots.save_potential_figure(spec.x(), q.values, out / "potential.png", "recovered potential")
    print(
        f"invert: recovered q on [{x_lo:g}, {x_hi:g}) with {n_rec} points, "
        f"marchenko residual {tk.residual:.2e}"
    )
    return 0


def cmd_accumulate(args, cfg: RunConfig) -> int:
    if args.e_inf <= 0:
        raise ValidationError("--e-inf must be positive")
    if args.n_max < 1:
        raise ValidationError("--n-max must be >= 1")
    report = inv.accumulation_experiment(args.n_max, args.e_inf)
    payload = report.to_json_dict()
    payload["config"] = asdict(cfg)
    out = Path(cfg.output_dir)
    _emit_json(out / "accumulation_report.json", payload, "catastrophe_report.schema.json")
    _atomic_write_with(out / "accumulation_report.csv", report.write_csv)
    if args.plot:
        plots.save_report_figure(report, out / "accumulation_report.png", "accumulation")
    print(f"accumulate: n_max={args.n_max}, verdict {report.verdict}")
    return 0


def cmd_uv(args, cfg: RunConfig) -> int:
    q = fwd.read_potential_csv(args.potential)
    sd = fwd.scattering_matrix(q, cfg.k_grid(), ode_tol=cfg.ode_tol)
    ps = phr.build_phase_system(q, sd, singular_tol=cfg.singular_tol)
    payload = ps.to_json_dict()
    payload["bound_report"] = phr.bound_report(
        q, ps.i12, ps.i21, ps.k_grid, u=ps.u, v=ps.v, r12=ps.r12, r21=ps.r21, mask=ps.sin_phi_mask
    )
    payload["config"] = asdict(cfg)
    out = Path(cfg.output_dir)
    _emit_json(out / "phase_system.json", payload, "phase_system.schema.json")
    if args.plot:
        plots.save_phase_figure(ps, out / "phase_system.png")
    masked = int(np.count_nonzero(~ps.sin_phi_mask))
    print(f"uv: winding {ps.winding}, {masked}/{len(ps.k_grid)} samples masked")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _add_common(p: _Parser) -> None:
    p.add_argument("--x-min", type=float, default=None, dest="x_min")
    p.add_argument("--x-max", type=float, default=None, dest="x_max")
    p.add_argument("--grid-n", type=int, default=None, dest="grid_n")
    p.add_argument("--k-max", type=float, default=None, dest="k_max")
    p.add_argument("--n-k", type=int, default=None, dest="n_k")
    p.add_argument("--ode-tol", type=float, default=None, dest="ode_tol")
    p.add_argument("--singular-tol", type=float, default=None, dest="singular_tol")
    p.add_argument("--marchenko-tol", type=float, default=None, dest="marchenko_tol")
    p.add_argument("--out", type=str, default=None, dest="output_dir")
    p.add_argument("--config", type=str, default=None, help="JSON key-value config file; flags win")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True,
                   help="render PNG figures next to the data files")


def build_parser() -> _Parser:
    parser = _Parser(prog="phasecat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("family", parents=[], help="norm rows of the unimodular-phase family")
    p.add_argument("--n", required=True, help="comma-separated list of orders, e.g. 1,2,4,8")
    _add_common(p)

    p = sub.add_parser("forward", help="scattering matrix of a potential CSV")
    p.add_argument("potential", help="CSV with header x,q")
    _add_common(p)

    p = sub.add_parser("invert", help="recover a potential from scattering JSON")
    p.add_argument("scattering", help="scattering-data JSON file")
    _add_common(p)

    p = sub.add_parser("accumulate", help="spectral-accumulation experiment")
    p.add_argument("--n-max", type=int, required=True, dest="n_max")
    p.add_argument("--e-inf", type=float, default=1.0, dest="e_inf")
    _add_common(p)

    p = sub.add_parser("uv", help="phase pipeline: transmission phase and recovered transform")
    p.add_argument("potential", help="CSV with header x,q")
    _add_common(p)
    return parser


_CONFIG_KEYS = (
    "x_min", "x_max", "grid_n", "k_max", "n_k",
    "ode_tol", "singular_tol", "marchenko_tol", "output_dir",
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "family":
            return cmd_family(args, cfg)
        if args.command == "forward":
            return cmd_forward(args, cfg)
        if args.command == "invert":
            return cmd_invert(args, cfg, overrides)
        if args.command == "accumulate":
            return cmd_accumulate(args, cfg)
        if args.command == "uv":
            return cmd_uv(args, cfg)
        raise ValidationError(f"unknown command {args.command!r}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
