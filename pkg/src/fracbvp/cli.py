"""Command-line front end.

    fracbvp certify PROBLEM [--tau X] [--constant-lf]
    fracbvp solve PROBLEM [--grid N] [--tol E] [--max-iter M] [--out PATH]
    fracbvp green PROBLEM [--t-points N] [--s-points M] [--out PATH]
    fracbvp examples [1|2]

Exit codes: 0 success, 1 not certified, 2 parse error, 3 validation failure,
4 Picard iteration did not converge.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, TextIO

import numpy as np

from .certify import (
    bound_bundle,
    delta_bounds,
    existence_certificate,
    rho_bounds,
    uniqueness_certificate,
)
from .fracops import DomainError, UniformGrid
from .greenfn import green, green_g0, structural_constants
from .problem import (
    EXAMPLE1_DEFAULT_LF,
    GrowthData,
    LipschitzData,
    ProblemSpec,
    example,
    resolve_f,
    resolve_g,
    validate,
)
from .solver import picard_solve

EXIT_OK, EXIT_NOT_CERTIFIED, EXIT_PARSE, EXIT_INVALID, EXIT_NO_CONVERGENCE = 0, 1, 2, 3, 4

REQUIRED_KEYS = (
    "alpha", "beta1", "beta2", "T", "eta",
    "a0", "a1", "a2", "b0", "b1", "b2", "lambda0", "lambda1", "lambda2",
)
OPTIONAL_KEYS = (
    "f", "g0", "g1", "g2", "l_f", "l_g0", "l_g1", "l_g2", "tau",
    "phi", "psi0", "psi1", "psi2",
)


class ProblemFileError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemFile:
    spec: ProblemSpec
    lipschitz: Optional[LipschitzData]
    growth: Optional[GrowthData]


@dataclass(frozen=True)
class RunConfig:
    command: str
    problem_path: Optional[Path] = None
    grid_n: int = 257
    tol: float = 1e-10
    max_iter: int = 200
    tau: Optional[float] = None
    out_path: Optional[Path] = None
    constant_lf: bool = False
    t_points: int = 33
    s_points: int = 33
    example_id: Optional[int] = None

    def __post_init__(self):
        if self.command not in ("certify", "solve", "green", "examples"):
            raise ValueError(f"unknown command {self.command!r}")
        if self.grid_n < 33:
            raise ValueError("grid_n must be at least 33")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.t_points < 2 or self.s_points < 2:
            raise ValueError("green mesh needs at least 2 points per axis")


# -- problem files -----------------------------------------------------------


def parse_problem_text(text: str) -> dict[str, tuple[str, int]]:
    """``key = value`` lines with ``#`` comments; returns ``{key: (value, line)}``."""
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ProblemFileError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        if key not in REQUIRED_KEYS + OPTIONAL_KEYS:
            raise ProblemFileError(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise ProblemFileError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (value, lineno)
    missing = [k for k in REQUIRED_KEYS if k not in entries]
    if missing:
        raise ProblemFileError(f"missing key(s): {', '.join(missing)}")
    return entries


def _float(entries, key) -> float:
    value, lineno = entries[key]
    try:
        return float(value)
    except ValueError:
        raise ProblemFileError(f"line {lineno}: key {key!r} expects a number, got {value!r}") from None


def _growth_fn(name: str, entries, key):
    from .problem import _parse_call

    lineno = entries[key][1]
    head, args = _parse_call(name)
    if head == "identity" and not args:
        return lambda K: K
    if head == "const" and len(args) == 1:
        return lambda K, c=args[0]: c
    if head == "linear" and len(args) == 1:
        return lambda K, c=args[0]: c * K
    raise ProblemFileError(f"line {lineno}: unknown growth function {name!r} for {key!r}")


def load_problem(text: str) -> ProblemFile:
    entries = parse_problem_text(text)
    num = {k: _float(entries, k) for k in REQUIRED_KEYS}
    f_name = entries.get("f", ("zero", 0))[0]
    g_names = tuple(entries.get(f"g{i}", ("zero", 0))[0] for i in range(3))
    try:
        f = resolve_f(f_name, num["alpha"])
    except (DomainError, ValueError) as exc:
        raise ProblemFileError(f"line {entries['f'][1]}: {exc}") from None
    g = []
    for i, name in enumerate(g_names):
        try:
            g.append(resolve_g(name, i))
        except (DomainError, ValueError) as exc:
            raise ProblemFileError(f"line {entries[f'g{i}'][1]}: {exc}") from None
    spec = ProblemSpec(
        alpha=num["alpha"], beta1=num["beta1"], beta2=num["beta2"], T=num["T"], eta=num["eta"],
        a=(num["a0"], num["a1"], num["a2"]), b=(num["b0"], num["b1"], num["b2"]),
        lam=(num["lambda0"], num["lambda1"], num["lambda2"]),
        f=f, g=tuple(g), f_name=f_name, g_names=g_names,
    )
    tau = _float(entries, "tau") if "tau" in entries else None

    lip = None
    if "l_f" in entries:
        l_g = tuple(_float(entries, f"l_g{i}") if f"l_g{i}" in entries else 0.0 for i in range(3))
        try:
            lip = LipschitzData(_float(entries, "l_f"), l_g)
        except DomainError as exc:
            raise ProblemFileError(f"Lipschitz data: {exc}") from None
    elif f_name.startswith("example1"):
        lip = example(1, _example1_lf(f_name))[1]

    growth = None
    if "phi" in entries:
        phi = _growth_fn(entries["phi"][0], entries, "phi")
        psi = tuple(_growth_fn(entries[f"psi{i}"][0], entries, f"psi{i}") if f"psi{i}" in entries
                    else (lambda K: 0.0) for i in range(3))
        l_f = _float(entries, "l_f") if "l_f" in entries else 1.0
        l_g = tuple(_float(entries, f"l_g{i}") if f"l_g{i}" in entries else 0.0 for i in range(3))
        growth = GrowthData(phi, psi, l_f, l_g)
    elif f_name == "example2":
        growth = example(2)[1]
    if tau is not None:
        if lip is not None:
            lip = LipschitzData(lip.l_f, lip.l_g, tau)
        if growth is not None:
            growth = GrowthData(growth.phi, growth.psi, growth.l_f, growth.l_g, tau)
    return ProblemFile(spec, lip, growth)


def _example1_lf(name: str) -> float:
    from .problem import _parse_call

    _, args = _parse_call(name)
    return args[0] if args else EXAMPLE1_DEFAULT_LF


def format_problem(spec: ProblemSpec, extra: Optional[dict] = None) -> str:
    """Write a spec back out in problem-file form."""
    lines = [f"{k} = {getattr(spec, k)!r}" for k in ("alpha", "beta1", "beta2", "T", "eta")]
    for name, vals in (("a", spec.a), ("b", spec.b), ("lambda", spec.lam)):
        lines += [f"{name}{i} = {v!r}" for i, v in enumerate(vals)]
    lines.append(f"f = {spec.f_name}")
    lines += [f"g{i} = {n}" for i, n in enumerate(spec.g_names)]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


# -- output helpers ----------------------------------------------------------


def _num(x: float) -> str:
    return f"{x:.12g}"


def write_csv(stream: TextIO, header: list[str], columns: list[np.ndarray]) -> None:
    stream.write(",".join(header) + "\n")
    for row in zip(*columns):
        stream.write(",".join(_num(float(v)) for v in row) + "\n")


def _open_out(path: Optional[Path], fallback: TextIO):
    if path is None:
        return fallback, False
    return open(path, "w", newline="\n"), True


# -- commands ----------------------------------------------------------------


def _load(config: RunConfig, err: TextIO):
    try:
        pf = load_problem(Path(config.problem_path).read_text())
    except OSError as exc:
        err.write(f"error: cannot read problem file: {exc}\n")
        return None, EXIT_PARSE
    except ProblemFileError as exc:
        err.write(f"parse error: {exc}\n")
        return None, EXIT_PARSE
    report = validate(pf.spec)
    if not report.ok:
        err.write("validation failed:\n")
        for line in report.lines():
            err.write(f"  {line}\n")
        return None, EXIT_INVALID
    return pf, EXIT_OK


def _cmd_certify(config: RunConfig, pf: ProblemFile, out: TextIO, err: TextIO) -> int:
    reports = []
    try:
        if pf.lipschitz is not None:
            reports.append(uniqueness_certificate(pf.spec, pf.lipschitz, config.constant_lf, config.tau))
        if pf.growth is not None:
            reports.append(existence_certificate(pf.spec, pf.growth, config.constant_lf, config.tau))
    except DomainError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_PARSE
    if not reports:
        err.write("parse error: certify needs Lipschitz data (key 'l_f') or growth data (key 'phi')\n")
        return EXIT_PARSE
    for n, rep in enumerate(reports):
        if n:
            out.write("\n")
        out.write("\n".join(rep.lines()) + "\n")
    return EXIT_OK if all(r.certified for r in reports) else EXIT_NOT_CERTIFIED


def _cmd_solve(config: RunConfig, pf: ProblemFile, out: TextIO, err: TextIO) -> int:
    grid = UniformGrid(pf.spec.T, config.grid_n)
    bundle = picard_solve(pf.spec, grid, config.tol, config.max_iter)
    stream, close = _open_out(config.out_path, out)
    try:
        write_csv(stream, ["t", "u", "d_beta1_u", "d_beta2_u"],
                  [grid.nodes, bundle.u.values, bundle.du_beta1.values, bundle.du_beta2.values])
    finally:
        if close:
            stream.close()
    summary = err if config.out_path is None else out
    r = bundle.residuals
    summary.write(f"converged: {str(bundle.converged).lower()}\n")
    summary.write(f"iterations: {bundle.iterations}\n")
    summary.write(f"beta_norm: {_num(bundle.beta_norm)}\n")
    summary.write(f"last_increment: {_num(bundle.history[-1])}\n")
    summary.write(f"ode_residual_sup: {_num(r.ode_residual_sup)}\n")
    for i, v in enumerate(r.boundary_residuals):
        summary.write(f"boundary_residual{i}: {_num(v)}\n")
    if not bundle.converged:
        tail = ", ".join(_num(x) for x in bundle.history[-5:])
        err.write(f"error: no convergence after {bundle.iterations} iterations; history tail: {tail}\n")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _cmd_green(config: RunConfig, pf: ProblemFile, out: TextIO, err: TextIO) -> int:
    spec = pf.spec
    sc = structural_constants(spec)
    tt = np.linspace(0.0, spec.T, config.t_points)
    ss = np.linspace(0.0, spec.T, config.s_points)
    T_, S_ = np.meshgrid(tt, ss, indexing="ij")
    G = green(spec, T_, S_, sc)
    G0 = green_g0(spec, T_, S_, sc)
    stream, close = _open_out(config.out_path, out)
    try:
        write_csv(stream, ["t", "s", "G", "G0"], [T_.ravel(), S_.ravel(), G.ravel(), G0.ravel()])
    finally:
        if close:
            stream.close()
    return EXIT_OK


# Values printed in the worked examples.
REFERENCE_VALUES = {
    "rho0": 0.5, "rho1": 1.01, "rho2": 1.2,
    "rho_tilde0": 0.0, "rho_tilde1": 0.76, "rho_tilde2": 0.9,
    "rho_hat0": 0.0, "rho_hat1": 0.0, "rho_hat2": 0.51,
    "Delta0": 2.34, "Delta1": 0.19, "Delta2": 0.15,
}
REFERENCE_LF_THRESHOLD = 0.25 / 2.7
REFERENCE_K_THRESHOLD = 9.8


def example_constants(spec: ProblemSpec) -> dict[str, float]:
    """Recomputed bound constants (constant-``l_f`` form of Delta)."""
    rb = rho_bounds(spec)
    d = delta_bounds(spec, constant_lf=True, rb=rb)
    vals = {}
    for name, triple in (("rho", rb.rho), ("rho_tilde", rb.rho_tilde), ("rho_hat", rb.rho_hat),
                         ("Delta", d)):
        for i, v in enumerate(triple):
            vals[f"{name}{i}"] = v
    return vals


def lf_threshold(spec: ProblemSpec, lip: LipschitzData) -> float:
    """Largest constant ``l_f`` keeping the contraction constant below 1 (nan if none)."""
    base = uniqueness_certificate(spec, LipschitzData(0.0, lip.l_g), constant_lf=True)
    slope = sum(base.bounds.delta)
    room = 1.0 - base.contraction_constant
    return room / slope if room > 0 else math.nan


def _cmd_examples(config: RunConfig, out: TextIO, err: TextIO) -> int:
    ids = (config.example_id,) if config.example_id else (1, 2)
    rows = []
    for ex_id in ids:
        spec, data = example(ex_id)
        vals = example_constants(spec)
        for key, ref in REFERENCE_VALUES.items():
            rows.append((f"example{ex_id}.{key}", ref, vals[key]))
        if ex_id == 1:
            rows.append(("example1.lf_threshold", REFERENCE_LF_THRESHOLD, lf_threshold(spec, data)))
        else:
            rep = existence_certificate(spec, data, constant_lf=True, tau=config.tau)
            rows.append(("example2.K_threshold", REFERENCE_K_THRESHOLD,
                         math.nan if rep.K_threshold is None else rep.K_threshold))
    out.write(f"{'quantity':<24} {'printed':>12} {'recomputed':>14} {'abs_diff':>12}\n")
    for name, ref, ours in rows:
        diff = abs(ref - ours) if math.isfinite(ours) else math.nan
        ours_s = _num(ours) if math.isfinite(ours) else "none"
        diff_s = f"{diff:.4g}" if math.isfinite(diff) else "n/a"
        out.write(f"{name:<24} {ref:>12.6g} {ours_s:>14} {diff_s:>12}\n")
    return EXIT_OK


def run(config: RunConfig, out: TextIO = None, err: TextIO = None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    if config.command == "examples":
        return _cmd_examples(config, out, err)
    pf, code = _load(config, err)
    if pf is None:
        return code
    handler = {"certify": _cmd_certify, "solve": _cmd_solve, "green": _cmd_green}[config.command]
    return handler(config, pf, out, err)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracbvp", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, grid=False, certify=False, out=False):
        sp.add_argument("problem", type=Path, help="problem file (key = value lines)")
        if grid:
            sp.add_argument("--grid", type=int, default=257, dest="grid_n", metavar="N")
            sp.add_argument("--tol", type=float, default=1e-10, metavar="E")
            sp.add_argument("--max-iter", type=int, default=200, metavar="M")
        if certify:
            sp.add_argument("--tau", type=float, default=None, metavar="X")
            sp.add_argument("--constant-lf", action="store_true")
        if out:
            sp.add_argument("--out", type=Path, default=None, dest="out_path", metavar="PATH")

    common(sub.add_parser("certify", help="check the uniqueness / existence conditions"), certify=True)
    common(sub.add_parser("solve", help="Picard iteration; writes a solution CSV"), grid=True, out=True)
    g = sub.add_parser("green", help="export the Green kernel on a (t, s) mesh")
    common(g, out=True)
    g.add_argument("--t-points", type=int, default=33, metavar="N")
    g.add_argument("--s-points", type=int, default=33, metavar="M")
    e = sub.add_parser("examples", help="compare recomputed example constants with the printed ones")
    e.add_argument("example_id", nargs="?", type=int, choices=(1, 2))
    e.add_argument("--tau", type=float, default=None, metavar="X")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    if "problem" in args:
        args["problem_path"] = args.pop("problem")
    try:
        config = RunConfig(command=command, **args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
