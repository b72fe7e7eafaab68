"""Command-line front end: solve, coupled, spectrum, fit, scan, call, bench.

Run configs use the same `[section]` / `key = value` grammar as plugin
manifests.  Exit codes: 0 success, 1 malformed input, 2 no eigenvalue found,
3 plugin error, 4 numerical non-convergence.
"""

import argparse
import sys
import time

import numpy as np

from . import backend, config, engine, plugins, potentials
from .coupled import CoupledProblem, solve_coupled
from .errors import (
    BracketError,
    ConfigError,
    ConvergenceError,
    FitError,
    PluginError,
    QshootError,
)
from .shooting import ShootingConfig, ShootingProblem, default_mesh, solve_eigen
from .spectrum import SpectrumModel, fit_parameters, mass_at_order

BENCH_CASES = ((0, 2.15789), (1, 3.10952), (2, 3.93850), (20, 13.5995))
BENCH_RTOL = 5e-4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _sections_by_name(path):
    out = {}
    for section in config.parse_file(path):
        if section.name in out:
            raise ConfigError("duplicate section [%s]" % section.name,
                              line=section.line)
        out[section.name] = section
    return out


def _build_scalar_potential(section, args=None):
    d = section.to_dict()
    kind = d.get("kind")
    if kind is None:
        raise ConfigError("section [%s] needs a 'kind'" % section.name)
    if kind == "cornell":
        return potentials.Cornell(config.get_float(d, "a"), config.get_float(d, "k"))
    if kind == "log":
        return potentials.LogChannel(config.get_float(d, "a"), config.get_float(d, "b"))
    if kind == "coulomb":
        return potentials.Coulomb(config.get_float(d, "c"))
    if kind == "power":
        return potentials.PowerLaw(config.get_float(d, "c"), config.get_float(d, "p"))
    if kind == "constant":
        return potentials.Constant(config.get_float(d, "c"))
    if kind == "tabulated":
        if "path" not in d:
            raise ConfigError("tabulated potential needs 'path'")
        return potentials.load_tabulated_csv(d["path"])
    if kind == "plugin":
        return _plugin_potential(d.get("library"), d.get("manifest"),
                                 d.get("function"), args)
    if kind == "none":
        return None
    raise ConfigError("unknown potential kind %r" % kind)


def _plugin_potential(library, manifest, function, args):
    if args is not None:
        library = args.plugin or library
        manifest = args.manifest or manifest
        function = getattr(args, "function", None) or function
    if not library or not manifest:
        raise ConfigError("plugin potential needs 'library' and 'manifest'")
    plugin = plugins.load_plugin(library, manifest)
    if function is None:
        names = [f.name for f in plugin.manifest.functions]
        if len(names) != 1:
            raise ConfigError("manifest declares %d functions; pick one with "
                              "'function' or --function" % len(names))
        function = names[0]
    return plugins.potential_from_plugin(plugin, function)


def _mesh_from(sections, potential, m):
    if "mesh" not in sections:
        return default_mesh(potential, m)
    d = sections["mesh"].to_dict()
    base = default_mesh(potential, m)
    return engine.RadialMesh(config.get_float(d, "r_min", base.r_min),
                             config.get_float(d, "r_max", base.r_max),
                             config.get_int(d, "n_points", base.n_points))


def _search_from(sections):
    d = sections["search"].to_dict() if "search" in sections else {}
    return ShootingConfig(e_min=config.get_float(d, "e_min", 0.01),
                          e_max=config.get_float(d, "e_max", 20.0),
                          scan_step=config.get_float(d, "scan_step", 0.05),
                          bisect_tol=config.get_float(d, "bisect_tol", 1e-9),
                          max_bisect=config.get_int(d, "max_bisect", 200))


def _problem_params(sections, args):
    d = sections["problem"].to_dict() if "problem" in sections else {}
    l = args.l if getattr(args, "l", None) is not None else config.get_int(d, "l", 0)
    m = config.get_float(d, "mass", 1.0)
    return l, m


def _format_g(x):
    return "%.17g" % x


def emit_wavefunction(mesh, columns, header, path):
    """CSV table of the mesh and wavefunction columns, 17 significant digits."""
    r = mesh.points()
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(header + "\n")
            for i in range(mesh.n_points):
                fh.write(",".join(_format_g(v)
                                  for v in (r[i], *[c[i] for c in columns])) + "\n")
    except OSError as exc:
        raise ConfigError("cannot write %s: %s" % (path, exc)) from None


def emit_svg(mesh, columns, path, width=800, height=500, margin=50):
    """Hand-rolled polyline plot of the same data the CSV carries."""
    r = mesh.points()
    lo = min(float(np.min(c)) for c in columns)
    hi = max(float(np.max(c)) for c in columns)
    if hi == lo:
        hi = lo + 1.0
    span_x = r[-1] - r[0]
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")

    def sx(x):
        return margin + (x - r[0]) / span_x * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - lo) / (hi - lo) * (height - 2 * margin)

    parts = ['<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d">'
             % (width, height),
             '<rect width="100%" height="100%" fill="white"/>']
    if lo < 0.0 < hi:
        parts.append('<line x1="%g" y1="%g" x2="%g" y2="%g" stroke="#888"/>'
                     % (sx(r[0]), sy(0.0), sx(r[-1]), sy(0.0)))
    for j, col in enumerate(columns):
        pts = " ".join("%g,%g" % (sx(x), sy(y)) for x, y in zip(r, col))
        parts.append('<polyline fill="none" stroke="%s" points="%s"/>'
                     % (colors[j % len(colors)], pts))
    parts.append("</svg>")
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(parts) + "\n")
    except OSError as exc:
        raise ConfigError("cannot write %s: %s" % (path, exc)) from None


def _report(pairs, stream=None):
    stream = stream or sys.stdout
    for key, value in pairs:
        if isinstance(value, float):
            value = _format_g(value)
        stream.write("%s = %s\n" % (key, value))


def _cmd_solve(args):
    sections = _sections_by_name(args.config)
    if "potential" not in sections:
        raise ConfigError("config needs a [potential] section")
    pot = _build_scalar_potential(sections["potential"], args)
    l, m = _problem_params(sections, args)
    mesh = _mesh_from(sections, pot, m)
    problem = ShootingProblem(pot, l, m, mesh)
    cfg = _search_from(sections)
    t0 = time.perf_counter()
    sol = solve_eigen(problem, cfg, args.n)
    dt = time.perf_counter() - t0
    out_ref = "(not written)"
    if args.out:
        emit_wavefunction(mesh, [sol.wavefunction.values], "r,y", args.out)
        out_ref = args.out
        if args.svg:
            emit_svg(mesh, [sol.wavefunction.values], args.out + ".svg")
    _report([("eigenvalue", sol.energy), ("nodes", sol.n), ("l", sol.l),
             ("tail_residual", sol.tail_residual),
             ("truncation_r", float(mesh.points()[sol.truncation_index])),
             ("iterations", sol.bisections), ("time_s", dt),
             ("backend", backend.BACKEND), ("wavefunction", out_ref)])
    return 0


def _cmd_coupled(args):
    sections = _sections_by_name(args.config)
    if "matrix_potential" not in sections:
        raise ConfigError("config needs a [matrix_potential] section")
    d = sections["matrix_potential"].to_dict()
    l, m = _problem_params(sections, args)
    kind = d.get("kind", "hybrid_log")
    if kind != "hybrid_log":
        raise ConfigError("unknown matrix potential kind %r" % kind)
    pot = potentials.HybridLog(config.get_float(d, "a0"), config.get_float(d, "b0"),
                               config.get_float(d, "a1"), config.get_float(d, "b1"),
                               l, m)
    mesh = _mesh_from(sections, pot, m)
    problem = CoupledProblem(pot, l, m, mesh)
    cfg = _search_from(sections)
    t0 = time.perf_counter()
    sol = solve_coupled(problem, cfg, args.n)
    dt = time.perf_counter() - t0
    out_ref = "(not written)"
    if args.out:
        cols = [c.values for c in sol.components]
        header = "r," + ",".join("u%d" % (j + 1) for j in range(len(cols)))
        emit_wavefunction(mesh, cols, header, args.out)
        out_ref = args.out
        if args.svg:
            emit_svg(mesh, cols, args.out + ".svg")
    _report([("eigenvalue", sol.energy), ("nodes", sol.n), ("l", sol.l),
             ("mixing", ",".join(_format_g(c) for c in sol.mixing)),
             ("tail_residual", sol.tail_residual),
             ("truncation_r", float(mesh.points()[sol.truncation_index])),
             ("iterations", sol.bisections), ("time_s", dt),
             ("backend", backend.BACKEND), ("wavefunction", out_ref)])
    return 0


def _cmd_spectrum(args):
    sections = _sections_by_name(args.config)
    if "potential" not in sections:
        raise ConfigError("config needs a [potential] section")
    v0 = _build_scalar_potential(sections["potential"], args)
    l, m = _problem_params(sections, args)
    v_1m = _build_scalar_potential(sections["v_1m"], args) if "v_1m" in sections else None
    v_1m2 = _build_scalar_potential(sections["v_1m2"], args) if "v_1m2" in sections else None
    d = sections["spectrum"].to_dict() if "spectrum" in sections else {}
    n = args.n if args.n is not None else config.get_int(d, "n", 0)
    basis_max = args.basis_max if args.basis_max is not None \
        else config.get_int(d, "basis_max", 20)
    mesh = _mesh_from(sections, v0, m) if "mesh" in sections else None
    model = SpectrumModel(m=m, v0=v0, l=l, v_1m=v_1m, v_1m2=v_1m2,
                          basis_max=basis_max, mesh=mesh,
                          search=_search_from(sections))
    t0 = time.perf_counter()
    mb = mass_at_order(model, n)
    dt = time.perf_counter() - t0
    _report([("e0", mb.e0), ("lo", mb.lo), ("nlo", mb.nlo),
             ("nnlo_diag", mb.nnlo_diag), ("nnlo_sum", mb.nnlo_sum),
             ("sum_tail", mb.sum_tail), ("mass", mb.total),
             ("basis_max", basis_max), ("time_s", dt),
             ("backend", backend.BACKEND)])
    return 0


def _cmd_fit(args):
    sections = _sections_by_name(args.config)
    if "fit" not in sections:
        raise ConfigError("config needs a [fit] section")
    d = sections["fit"].to_dict()
    targets = []
    for key in ("target_1", "target_2", "target_3"):
        if key not in d:
            raise ConfigError("fit config needs '%s' (format: n l mass)" % key)
        cells = d[key].split()
        if len(cells) != 3:
            raise ConfigError("'%s' must be 'n l mass'" % key)
        targets.append((int(cells[0]), int(cells[1]), float(cells[2])))
    guess = (config.get_float(d, "guess_a"), config.get_float(d, "guess_k"),
             config.get_float(d, "guess_m"))
    fit_tol = config.get_float(d, "fit_tol", 1e-6)
    max_iter = config.get_int(d, "max_iter", 30)
    t0 = time.perf_counter()
    res = fit_parameters(targets, guess, fit_tol=fit_tol, max_iter=max_iter)
    dt = time.perf_counter() - t0
    _report([("a", res.a), ("k", res.k), ("m", res.m),
             ("iterations", res.iterations),
             ("residuals", ",".join(_format_g(r) for r in res.residuals)),
             ("time_s", dt), ("backend", backend.BACKEND)])
    return 0


def _cmd_scan(args):
    sections = _sections_by_name(args.config)
    if "potential" not in sections:
        raise ConfigError("config needs a [potential] section")
    pot = _build_scalar_potential(sections["potential"], args)
    l, m = _problem_params(sections, args)
    mesh = _mesh_from(sections, pot, m)
    cfg = _search_from(sections)
    g = engine.scalar_coefficient(pot, l, m, mesh)
    from .shooting import _scan_energies, series_start
    y0, dy0 = series_start(l, mesh.r_min)
    rows = []
    for e in _scan_energies(cfg):
        f = engine.propagate_scalar_sampled(g, e, m, mesh, y0, dy0)
        rows.append((e, engine.count_nodes(f)))
    lines = ["E,nodes"] + ["%s,%d" % (_format_g(e), c) for e, c in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _parse_vector(text):
    cells = [c for c in text.split(",") if c.strip()]
    try:
        return [int(c) for c in cells]
    except ValueError:
        pass
    try:
        return [float(c) for c in cells]
    except ValueError:
        raise ConfigError("cannot parse input vector %r" % text) from None


def _cmd_call(args):
    if not args.plugin or not args.manifest:
        raise ConfigError("call needs --plugin and --manifest")
    plugin = plugins.load_plugin(args.plugin, args.manifest)
    inputs = [_parse_vector(v) for v in args.inputs]
    outputs = plugin.call(args.name, inputs)
    for out in outputs:
        sys.stdout.write("[%s]\n" % ", ".join(repr(v.item()) for v in out))
    return 0


def _cmd_bench(args):
    sections = _sections_by_name(args.config) if args.config else {}
    pot = potentials.Cornell(0.1, 0.5)
    m = 1.0
    mesh = _mesh_from(sections, pot, m)
    cfg = _search_from(sections)
    problem = ShootingProblem(pot, 1, m, mesh)
    sys.stdout.write("backend = %s\n" % backend.BACKEND)
    sys.stdout.write("n,eigenvalue,reference,seconds\n")
    failed = False
    for n, ref in BENCH_CASES:
        t0 = time.perf_counter()
        sol = solve_eigen(problem, cfg, n)
        dt = time.perf_counter() - t0
        sys.stdout.write("%d,%s,%s,%.3f\n" % (n, _format_g(sol.energy), ref, dt))
        if abs(sol.energy - ref) / ref > BENCH_RTOL:
            failed = True
            sys.stderr.write("error: n=%d eigenvalue %.6f deviates from %.5f "
                             "beyond %.0e relative\n" % (n, sol.energy, ref,
                                                         BENCH_RTOL))
    if failed:
        raise ConvergenceError("bench eigenvalues deviate from the reference")
    return 0


def build_parser():
    parser = _Parser(prog="qshoot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, n_flag=True, needs_config=True):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        if needs_config:
            p.add_argument("--config", required=(name != "bench"),
                           help="run config path")
        if n_flag:
            p.add_argument("--n", type=int, default=0, help="radial excitation")
        p.add_argument("--l", type=int, default=None, help="angular momentum override")
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--svg", action="store_true",
                       help="also write OUT.svg (requires --out)")
        p.add_argument("--basis-max", dest="basis_max", type=int, default=None)
        p.add_argument("--plugin", default=None, help="plugin library path")
        p.add_argument("--manifest", default=None, help="plugin manifest path")
        p.add_argument("--function", default=None, help="plugin function name")
        return p

    add("solve", _cmd_solve, "single-channel eigenvalue")
    add("coupled", _cmd_coupled, "coupled-channel eigenvalue")
    spectrum = add("spectrum", _cmd_spectrum, "perturbative mass breakdown")
    spectrum.set_defaults(n=None)
    add("fit", _cmd_fit, "fit (a, k, m) to three masses", n_flag=False)
    add("scan", _cmd_scan, "node-count staircase over the energy window",
        n_flag=False)
    call = add("call", _cmd_call, "call a plugin function", n_flag=False,
               needs_config=False)
    call.add_argument("name", help="function name")
    call.add_argument("inputs", nargs="*", help="comma-separated input vectors")
    add("bench", _cmd_bench, "reference eigenvalue regression with wall times", n_flag=False)
    return parser


def run(argv):
    args = build_parser().parse_args(argv)
    if args.svg and not args.out:
        raise ConfigError("--svg requires --out")
    return args.fn(args)


def main(argv=None):
    try:
        return run(sys.argv[1:] if argv is None else argv)
    except PluginError as exc:
        sys.stderr.write("plugin error: %s\n" % exc)
        return 3
    except BracketError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 2
    except (ConvergenceError, FitError) as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 4
    except (ConfigError, QshootError, ValueError, OSError) as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
